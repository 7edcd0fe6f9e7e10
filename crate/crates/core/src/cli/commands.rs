use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::cli::{CliError, Params};
use crate::data::{load_dataset, save_dataset, SplitSpec, SynthConfig};
use crate::error::Error;
use crate::math::{derive_seed, Rng};
use crate::model::{
    encode as encode_codes, save_checkpoint, load_checkpoint, train as run_training, Checkpoint, GradScale,
    Hyperparams, TrainLogWriter,
};
use crate::net::{FeedForwardNet, LayerSpec};
use crate::retrieval::{
    load_codes, mean_average_precision_at, pr_curve, save_codes, write_map_csv, write_pr_csv, Averaging,
    CodeDatabase, GroundTruth, Task,
};

type CmdResult = Result<(), CliError>;

fn summary(out: &mut dyn Write, line: std::fmt::Arguments<'_>) -> CmdResult {
    writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e).into())
}

/// `path` with `suffix` appended to its file name.
fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn parse_widths(key: &str, raw: &str) -> Result<Vec<usize>, CliError> {
    let raw = raw.trim();
    if raw.is_empty() || raw.eq_ignore_ascii_case("none") {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|w| match w.trim().parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(CliError::Usage(format!(
                "invalid value {raw:?} for `{key}`: expected positive comma-separated widths or none"
            ))),
        })
        .collect()
}

fn one_of<'v>(p: &Params, key: &str, choices: &[&'v str]) -> Result<&'v str, CliError> {
    let v: String = p.get(key)?;
    choices
        .iter()
        .copied()
        .find(|c| *c == v)
        .ok_or_else(|| CliError::Usage(format!("invalid value {v:?} for `{key}`: expected one of {}", choices.join(", "))))
}

pub(crate) fn synth(p: &Params, out: &mut dyn Write) -> CmdResult {
    let path: PathBuf = p.get("out")?;
    let cfg = SynthConfig {
        classes: p.get("classes")?,
        per_class: p.get("per-class")?,
        image_dim: p.get("image-dim")?,
        text_dim: p.get("text-dim")?,
        noise: p.get("noise")?,
        seed: p.get("seed")?,
        words_per_document: p.get("words")?,
    };
    p.check("classes", cfg.classes >= 2, "need at least 2 classes")?;
    p.check("per-class", cfg.per_class >= 1, "must be at least 1")?;
    p.check("image-dim", cfg.image_dim >= 1, "must be at least 1")?;
    p.check("text-dim", cfg.text_dim >= 1, "must be at least 1")?;
    p.check("noise", cfg.noise >= 0.0 && cfg.noise.is_finite(), "must be finite and >= 0")?;

    let ds = cfg.generate::<f64>()?;
    save_dataset(&ds, &path)?;
    summary(
        out,
        format_args!(
            "wrote {}: n={} image_dim={} text_dim={} classes={}",
            path.display(),
            ds.len(),
            ds.image_dim(),
            ds.text_dim(),
            cfg.classes
        ),
    )
}

pub(crate) fn train(p: &Params, out: &mut dyn Write) -> CmdResult {
    let data: PathBuf = p.get("data")?;
    let ckpt_path: PathBuf = p.get("out")?;
    let log_path = p.opt::<PathBuf>("log")?.unwrap_or_else(|| with_suffix(&ckpt_path, ".log.csv"));
    let grad_scale = match one_of(p, "grad-scale", &["pair-mean", "sum"])? {
        "sum" => GradScale::Sum,
        _ => GradScale::PairMean,
    };
    let hyper = Hyperparams::<f64> {
        gamma: p.get("gamma")?,
        eta: p.get("eta")?,
        code_length: p.get("code-length")?,
        batch_size: p.get("batch-size")?,
        outer_iters: p.get("outer-iters")?,
        lr: p.get("lr")?,
        grad_scale,
    };
    p.check("gamma", hyper.gamma >= 0.0 && hyper.gamma.is_finite(), "must be finite and >= 0")?;
    p.check("eta", hyper.eta >= 0.0 && hyper.eta.is_finite(), "must be finite and >= 0")?;
    p.check("lr", hyper.lr > 0.0 && hyper.lr.is_finite(), "must be positive")?;
    p.check("code-length", hyper.code_length >= 1, "must be at least 1")?;
    p.check("batch-size", hyper.batch_size >= 1, "must be at least 1")?;
    p.check("outer-iters", hyper.outer_iters >= 1, "must be at least 1")?;
    let hidden_image = parse_widths("hidden-image", &p.get::<String>("hidden-image")?)?;
    let hidden_text = parse_widths("hidden-text", &p.get::<String>("hidden-text")?)?;
    let query_count: usize = p.get("query-count")?;
    let train_count: usize = p.get("train-count")?;
    let seed: u64 = p.get("seed")?;

    let ds = load_dataset::<f64>(&data)?;
    let n = ds.len();
    p.check(
        "query-count",
        query_count < n,
        &format!("must leave at least one database point out of {n}"),
    )?;
    p.check(
        "train-count",
        (1..=n - query_count).contains(&train_count),
        &format!("must be between 1 and the {} database points", n - query_count),
    )?;

    let split = SplitSpec {
        query_count,
        train_count,
        seed: derive_seed(seed, 0),
    }
    .apply(n)?;
    let tr = ds.subset(&split.train)?;
    let net_x = FeedForwardNet::init(
        &LayerSpec::chain(ds.image_dim(), &hidden_image, hyper.code_length),
        &mut Rng::seed_from(derive_seed(seed, 1)),
    )?;
    let net_y = FeedForwardNet::init(
        &LayerSpec::chain(ds.text_dim(), &hidden_text, hyper.code_length),
        &mut Rng::seed_from(derive_seed(seed, 2)),
    )?;

    let file = File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
    let mut log = TrainLogWriter::new(BufWriter::new(file)).map_err(|e| Error::io(&log_path, e))?;
    let mut log_err = None;
    let mut last = None;
    let started = Instant::now();
    let result = run_training(
        tr.image(),
        tr.text(),
        &tr.similarity(),
        net_x,
        net_y,
        hyper,
        Rng::seed_from(derive_seed(seed, 3)),
        |record| {
            last = Some(record.terms);
            if log_err.is_none() {
                log_err = log.write(record).err();
            }
        },
    );
    if let Some(e) = log_err {
        return Err(Error::io(&log_path, e).into());
    }
    let state = result?;

    save_checkpoint(&Checkpoint::from_state(&state, seed, Some(split)), &ckpt_path)?;
    let objective = last.map(|t| t.total()).unwrap_or(f64::NAN);
    summary(
        out,
        format_args!(
            "trained {} outer iterations on {} points in {:.2}s, final objective {objective:.6e}; wrote {} and {}",
            state.iteration,
            tr.len(),
            started.elapsed().as_secs_f64(),
            ckpt_path.display(),
            log_path.display()
        ),
    )
}

pub(crate) fn encode(p: &Params, out: &mut dyn Write) -> CmdResult {
    let ckpt_path: PathBuf = p.get("checkpoint")?;
    let data: PathBuf = p.get("data")?;
    let modality = one_of(p, "modality", &["image", "text"])?;
    let subset = one_of(p, "subset", &["all", "query", "database", "train"])?;
    let code_path: PathBuf = p.get("out")?;

    let ckpt = load_checkpoint::<f64>(&ckpt_path)?;
    let ds = load_dataset::<f64>(&data)?;
    let indices: Vec<usize> = match (subset, &ckpt.split) {
        ("all", _) => (0..ds.len()).collect(),
        (_, None) => {
            return Err(CliError::Usage(format!(
                "invalid value {subset:?} for `subset`: the checkpoint records no split, use all"
            )))
        }
        ("query", Some(s)) => s.query.clone(),
        ("database", Some(s)) => s.database.clone(),
        (_, Some(s)) => s.train.clone(),
    };
    if let Some(&bad) = indices.iter().find(|&&i| i >= ds.len()) {
        return Err(Error::invalid(format!(
            "checkpoint split refers to point {bad} but the dataset has {} points",
            ds.len()
        ))
        .into());
    }
    let sub = ds.subset(&indices)?;
    let (net, other_net, feats, other_feats) = match modality {
        "image" => (&ckpt.net_x, &ckpt.net_y, sub.image(), sub.text()),
        _ => (&ckpt.net_y, &ckpt.net_x, sub.text(), sub.image()),
    };
    if feats.rows() != net.input_dim() {
        return Err(Error::invalid(format!(
            "{modality} features have {} dimensions but the {modality} network expects {}",
            feats.rows(),
            net.input_dim()
        ))
        .into());
    }
    let codes = encode_codes(net, feats)?;
    let other = encode_codes(other_net, other_feats)?;
    let ids = indices.iter().map(|&i| i as u64).collect();
    let db = CodeDatabase::new(codes, ids)?;
    save_codes(&db, &code_path)?;

    let m = db.len();
    let (mut bits_equal, mut points_equal) = (0usize, 0usize);
    for k in 0..m {
        let same = db.codes.column(k).iter().zip(other.column(k)).filter(|(a, b)| a == b).count();
        bits_equal += same;
        points_equal += usize::from(same == db.bits());
    }
    let other_name = if modality == "image" { "text" } else { "image" };
    let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    summary(
        out,
        format_args!(
            "encoded {m} {subset} points ({modality}) into {}-bit codes at {}",
            db.bits(),
            code_path.display()
        ),
    )?;
    summary(
        out,
        format_args!(
            "agreement with {other_name} codes: {:.4} of bits, {:.4} of points identical",
            ratio(bits_equal, m * db.bits()),
            ratio(points_equal, m)
        ),
    )
}

pub(crate) fn eval(p: &Params, out: &mut dyn Write) -> CmdResult {
    let query_path: PathBuf = p.get("query")?;
    let db_path: PathBuf = p.get("database")?;
    let data: PathBuf = p.get("data")?;
    let task = match one_of(p, "task", &["image-to-text", "text-to-image"])? {
        "text-to-image" => Task::TextToImage,
        _ => Task::ImageToText,
    };
    let pr_path: PathBuf = p.get("out")?;
    let map_path = p.opt::<PathBuf>("map-out")?.unwrap_or_else(|| pr_path.with_extension("map.csv"));
    let top_k = match p.get::<usize>("top-k")? {
        0 => None,
        k => Some(k),
    };
    let averaging = match one_of(p, "averaging", &["micro", "macro"])? {
        "macro" => Averaging::Macro,
        _ => Averaging::Micro,
    };

    let queries = load_codes(&query_path)?;
    let db = load_codes(&db_path)?;
    if queries.bits() != db.bits() {
        return Err(Error::invalid(format!(
            "code length mismatch: {} has {}-bit codes, {} has {}-bit codes",
            query_path.display(),
            queries.bits(),
            db_path.display(),
            db.bits()
        ))
        .into());
    }
    let ds = load_dataset::<f64>(&data)?;
    let labels_of = |codes: &CodeDatabase, path: &Path| -> Result<Vec<Vec<u32>>, CliError> {
        codes
            .ids
            .iter()
            .map(|&id| {
                ds.labels().get(id as usize).cloned().ok_or_else(|| {
                    Error::invalid(format!(
                        "{} holds point id {id} but {} has {} points",
                        path.display(),
                        data.display(),
                        ds.len()
                    ))
                    .into()
                })
            })
            .collect()
    };
    let truth = GroundTruth::from_labels(&labels_of(&queries, &query_path)?, &labels_of(&db, &db_path)?);

    let map = mean_average_precision_at(&queries, &db, &truth, top_k)?;
    let curve = pr_curve(&queries, &db, &truth, averaging)?;
    std::fs::write(&pr_path, write_pr_csv(task, db.bits(), &curve)).map_err(|e| Error::io(&pr_path, e))?;
    std::fs::write(&map_path, write_map_csv(task, db.bits(), &map, top_k)).map_err(|e| Error::io(&map_path, e))?;
    summary(
        out,
        format_args!(
            "{task}: MAP {:.4} over {} queries ({} without relevant items skipped); wrote {} and {}",
            map.map,
            map.evaluated,
            map.skipped,
            pr_path.display(),
            map_path.display()
        ),
    )
}
