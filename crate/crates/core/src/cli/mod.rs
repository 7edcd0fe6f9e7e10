//! Command-line front end.
//!
//! Four subcommands: `synth`, `train`, `encode`, `eval`. Every flag can also
//! be given in a `--config` file (see [`ConfigFile`]); a flag on the command
//! line wins over the file, and the file wins over the built-in default.
//!
//! Seeds: `train --seed s` fans out with [`derive_seed`](crate::math::derive_seed)
//! into stream 0 (query/database/train split), 1 (image network init),
//! 2 (text network init) and 3 (mini-batch order). `synth --seed` is passed to
//! the generator unchanged.

mod commands;
mod config;

use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::process::ExitCode;
use std::str::FromStr;

use clap::parser::ValueSource;
use clap::{Arg, ArgMatches, Command};

use crate::error::Error;

pub use config::{normalize_key, ConfigFile};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Clap(e) => e.exit_code() as u8,
            CliError::Usage(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

fn flag(id: &'static str, value_name: &'static str, help: &'static str) -> Arg {
    Arg::new(id).long(id).value_name(value_name).help(help).allow_negative_numbers(true)
}

fn config_flag() -> Arg {
    flag("config", "FILE", "Flat key = value file; keys are long flag names, flags on the command line override it")
}

pub fn command() -> Command {
    let synth = Command::new("synth")
        .about("Generate a synthetic two-view dataset with class-conditioned image features and word counts")
        .arg(config_flag())
        .arg(flag("out", "FILE", "Dataset file to write [required]"))
        .arg(flag("classes", "N", "Number of classes").default_value("2"))
        .arg(flag("per-class", "N", "Points per class").default_value("100"))
        .arg(flag("image-dim", "D", "Image feature dimension").default_value("32"))
        .arg(flag("text-dim", "D", "Vocabulary size").default_value("64"))
        .arg(flag("noise", "SIGMA", "Standard deviation of the image feature noise").default_value("0.1"))
        .arg(flag("words", "N", "Words drawn per text document").default_value("20"))
        .arg(flag("seed", "SEED", "Generator seed").default_value("0"));

    let train = Command::new("train")
        .about("Train the image and text networks and write a checkpoint plus a per-iteration loss log")
        .arg(config_flag())
        .arg(flag("data", "FILE", "Dataset file [required]"))
        .arg(flag("out", "FILE", "Checkpoint file to write [required]"))
        .arg(flag("log", "FILE", "Loss log CSV [default: <out>.log.csv]"))
        .arg(flag("code-length", "BITS", "Bits per code; 16, 32 and 64 are the usual settings").default_value("16"))
        .arg(flag("gamma", "G", "Quantization weight").default_value("1"))
        .arg(flag("eta", "E", "Bit balance weight").default_value("1"))
        .arg(flag("batch-size", "N", "Mini-batch size").default_value("128"))
        .arg(flag("outer-iters", "N", "Outer iterations (image pass, text pass, code update)").default_value("500"))
        .arg(flag("lr", "RATE", "Constant SGD step size").default_value("0.01"))
        .arg(
            flag(
                "grad-scale",
                "MODE",
                "Gradient scaling: pair-mean divides each step by batch size times training points, sum uses raw sums",
            )
            .default_value("pair-mean"),
        )
        .arg(flag("hidden-image", "WIDTHS", "Comma-separated ReLU layer widths of the image network, or none").default_value("4096"))
        .arg(flag("hidden-text", "WIDTHS", "Comma-separated ReLU layer widths of the text network, or none").default_value("4096"))
        .arg(flag("query-count", "N", "Points held out as queries").default_value("2000"))
        .arg(flag("train-count", "N", "Training points drawn from the retrieval set").default_value("5000"))
        .arg(flag("seed", "SEED", "Root seed for the split, both network inits and batch order").default_value("0"));

    let encode = Command::new("encode")
        .about("Encode one modality of a dataset subset into a packed binary code file")
        .arg(config_flag())
        .arg(flag("checkpoint", "FILE", "Checkpoint written by train [required]"))
        .arg(flag("data", "FILE", "Dataset file [required]"))
        .arg(flag("modality", "MODALITY", "image or text [required]"))
        .arg(flag("subset", "SUBSET", "all, query, database or train (the last three use the checkpoint's split)").default_value("all"))
        .arg(flag("out", "FILE", "Code file to write; point ids go to <out>.ids [required]"));

    let eval = Command::new("eval")
        .about("Hamming ranking MAP and hash lookup precision/recall over radii 0..c")
        .arg(config_flag())
        .arg(flag("query", "FILE", "Query code file [required]"))
        .arg(flag("database", "FILE", "Database code file [required]"))
        .arg(flag("data", "FILE", "Dataset file supplying the labels of the code ids [required]"))
        .arg(flag("task", "TASK", "image-to-text or text-to-image, used to label the output").default_value("image-to-text"))
        .arg(flag("out", "FILE", "Precision/recall CSV to write [required]"))
        .arg(flag("map-out", "FILE", "MAP summary CSV [default: <out> with extension .map.csv]"))
        .arg(flag("top-k", "K", "Cut the ranking after K items for MAP; 0 ranks the whole database").default_value("0"))
        .arg(flag("averaging", "MODE", "micro pools counts over queries, macro averages per-query ratios").default_value("micro"));

    Command::new("dcmh")
        .about("Deep cross-modal hashing: train paired encoders and evaluate Hamming retrieval")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommands([synth, train, encode, eval])
}

/// Resolved parameters of one subcommand.
pub(crate) struct Params<'a> {
    matches: &'a ArgMatches,
    config: ConfigFile,
}

impl<'a> Params<'a> {
    fn new(cmd: &Command, matches: &'a ArgMatches) -> Result<Self, CliError> {
        let config = match matches.get_one::<String>("config") {
            Some(path) => ConfigFile::load(path).map_err(|e| CliError::Usage(e.to_string()))?,
            None => ConfigFile::default(),
        };
        let known: Vec<&str> = cmd
            .get_arguments()
            .map(|a| a.get_id().as_str())
            .filter(|id| *id != "config")
            .collect();
        if let Some(bad) = config.keys().find(|k| !known.contains(k)) {
            return Err(CliError::Usage(format!(
                "unknown key `{bad}` in config file (line {}); `{}` accepts: {}",
                config.line_of(bad).unwrap_or(0),
                cmd.get_name(),
                known.join(", ")
            )));
        }
        Ok(Self { matches, config })
    }

    fn raw(&self, key: &str) -> Option<String> {
        let from_flag = || self.matches.get_one::<String>(key).cloned();
        match self.matches.value_source(key) {
            Some(ValueSource::CommandLine) | Some(ValueSource::EnvVariable) => from_flag(),
            _ => self.config.get(key).map(str::to_string).or_else(from_flag),
        }
    }

    pub(crate) fn opt<T>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("invalid value {v:?} for `{key}`: {e}")))
            })
            .transpose()
    }

    pub(crate) fn get<T>(&self, key: &str) -> Result<T, CliError>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.opt(key)?
            .ok_or_else(|| CliError::Usage(format!("missing required flag --{key}")))
    }

    pub(crate) fn check(&self, key: &str, ok: bool, rule: &str) -> Result<(), CliError> {
        if ok {
            Ok(())
        } else {
            let value = self.raw(key).unwrap_or_default();
            Err(CliError::Usage(format!("invalid value {value:?} for `{key}`: {rule}")))
        }
    }
}

/// Parses `args` (program name first) and runs the subcommand, writing the
/// human summary to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cmd = command();
    let matches = cmd.clone().try_get_matches_from(args)?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let sub_cmd = cmd.find_subcommand(name).expect("matched subcommand exists");
    let params = Params::new(sub_cmd, sub)?;
    match name {
        "synth" => commands::synth(&params, out),
        "train" => commands::train(&params, out),
        "encode" => commands::encode(&params, out),
        "eval" => commands::eval(&params, out),
        other => unreachable!("unhandled subcommand {other}"),
    }
}

/// Process entry point: summary on stdout, diagnostics on stderr.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut stdout = std::io::stdout().lock();
    match run(args, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            ExitCode::from(e.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
