//! Dataset file format, version 1.
//!
//! UTF-8 text, one record per line, `\n` line endings:
//!
//! ```text
//! dcmh-dataset 1          magic and version
//! scalar f64              f32 or f64
//! points <n>
//! image_dim <d_x>
//! text_dim <d_y>
//! labels <k>
//! <label name 0>          k lines, the label vocabulary; label id = line order
//! ...
//! image                   then n lines of d_x values (point 0 first)
//! text                    then n lines of d_y values
//! point_labels            then n lines of space-separated label ids, `-` for none
//! end
//! ```
//!
//! Values are separated by single spaces and written in Rust's shortest
//! round-trip float notation, so reading back gives bit-identical values.
//! Every parse error names the 1-based line it was found on.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::data::MultiModalDataset;
use crate::error::{Error, Result};
use crate::math::{DenseMatrix, Scalar};

pub const DATASET_MAGIC: &str = "dcmh-dataset";
pub const DATASET_VERSION: u32 = 1;

pub fn write_dataset<T: Scalar, W: Write>(ds: &MultiModalDataset<T>, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{DATASET_MAGIC} {DATASET_VERSION}")?;
    writeln!(out, "scalar {}", T::NAME)?;
    writeln!(out, "points {}", ds.len())?;
    writeln!(out, "image_dim {}", ds.image_dim())?;
    writeln!(out, "text_dim {}", ds.text_dim())?;
    writeln!(out, "labels {}", ds.label_names().len())?;
    for name in ds.label_names() {
        writeln!(out, "{name}")?;
    }
    for (section, m) in [("image", ds.image()), ("text", ds.text())] {
        writeln!(out, "{section}")?;
        for i in 0..m.cols() {
            let row: Vec<String> = m.column(i).iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
    }
    writeln!(out, "point_labels")?;
    for labels in ds.labels() {
        if labels.is_empty() {
            writeln!(out, "-")?;
        } else {
            let ids: Vec<String> = labels.iter().map(u32::to_string).collect();
            writeln!(out, "{}", ids.join(" "))?;
        }
    }
    writeln!(out, "end")?;
    out.flush()
}

pub fn save_dataset<T: Scalar>(ds: &MultiModalDataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset(ds, &mut BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load_dataset<T: Scalar>(path: impl AsRef<Path>) -> Result<MultiModalDataset<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(BufReader::new(file), path)
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
    path: PathBuf,
}

impl<R: BufRead> Lines<R> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line: self.line,
            message: message.into(),
        }
    }

    fn next(&mut self, expecting: &str) -> Result<String> {
        match self.inner.next() {
            Some(Ok(l)) => {
                self.line += 1;
                Ok(l)
            }
            Some(Err(e)) => Err(Error::io(self.path.clone(), e)),
            None => {
                self.line += 1;
                Err(self.err(format!("unexpected end of file, expected {expecting}")))
            }
        }
    }

    fn keyword(&mut self, word: &str) -> Result<()> {
        let l = self.next(word)?;
        if l.trim_end() == word {
            Ok(())
        } else {
            Err(self.err(format!("expected `{word}`, found {l:?}")))
        }
    }

    fn field(&mut self, key: &str) -> Result<String> {
        let l = self.next(key)?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => Ok(v.trim().to_owned()),
            _ => Err(self.err(format!("expected header field `{key}`, found {l:?}"))),
        }
    }

    fn count(&mut self, key: &str) -> Result<usize> {
        let v = self.field(key)?;
        v.parse()
            .map_err(|_| self.err(format!("header field `{key}` is not a count: {v:?}")))
    }

    /// `rows` lines of exactly `width` values, stopping early with an error at `next`.
    fn block<T: Scalar>(&mut self, section: &str, rows: usize, width: usize, next: &str) -> Result<Vec<Vec<T>>> {
        let mut out = Vec::with_capacity(rows);
        for _ in 0..rows {
            let l = self.next(&format!("{section} row"))?;
            if l.trim_end() == next {
                return Err(self.err(format!(
                    "{section} block has {} rows but header field `points` declares {rows}",
                    out.len()
                )));
            }
            let values = l
                .split(' ')
                .map(|tok| {
                    tok.parse::<T>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| self.err(format!("bad {section} value {tok:?}")))
                })
                .collect::<Result<Vec<T>>>()?;
            if values.len() != width {
                return Err(self.err(format!(
                    "{section} row has {} values but header declares {width}",
                    values.len()
                )));
            }
            out.push(values);
        }
        Ok(out)
    }
}

pub fn read_dataset<T: Scalar, R: BufRead>(reader: R, path: impl AsRef<Path>) -> Result<MultiModalDataset<T>> {
    let mut lines = Lines {
        inner: reader.lines(),
        line: 0,
        path: path.as_ref().to_owned(),
    };
    let magic = lines.next("file header")?;
    if magic != format!("{DATASET_MAGIC} {DATASET_VERSION}") {
        return Err(lines.err(format!(
            "expected `{DATASET_MAGIC} {DATASET_VERSION}`, found {magic:?}"
        )));
    }
    let scalar = lines.field("scalar")?;
    if scalar != T::NAME {
        return Err(lines.err(format!("file stores {scalar} values, reader expects {}", T::NAME)));
    }
    let n = lines.count("points")?;
    let dx = lines.count("image_dim")?;
    let dy = lines.count("text_dim")?;
    let k = lines.count("labels")?;
    let mut names = Vec::with_capacity(k);
    for _ in 0..k {
        names.push(lines.next("label name")?);
    }
    lines.keyword("image")?;
    let image = lines.block::<T>("image", n, dx, "text")?;
    lines.keyword("text").map_err(|_| {
        lines.err(format!(
            "expected `text` after the {n} image rows declared by header field `points`"
        ))
    })?;
    let text = lines.block::<T>("text", n, dy, "point_labels")?;
    lines.keyword("point_labels").map_err(|_| {
        lines.err(format!(
            "expected `point_labels` after the {n} text rows declared by header field `points`"
        ))
    })?;
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let l = lines.next("label row")?;
        if l == "end" {
            return Err(lines.err(format!(
                "label block has {} rows but header field `points` declares {n}",
                labels.len()
            )));
        }
        if l == "-" {
            labels.push(Vec::new());
            continue;
        }
        let ids = l
            .split(' ')
            .map(|tok| {
                tok.parse::<u32>()
                    .ok()
                    .filter(|&id| (id as usize) < k)
                    .ok_or_else(|| lines.err(format!("bad label id {tok:?} (vocabulary has {k})")))
            })
            .collect::<Result<Vec<u32>>>()?;
        labels.push(ids);
    }
    lines.keyword("end").map_err(|_| {
        lines.err(format!(
            "expected `end` after the {n} label rows declared by header field `points`"
        ))
    })?;
    if let Some(extra) = lines.inner.next() {
        lines.line += 1;
        if !extra.map(|l| l.trim().is_empty()).unwrap_or(false) {
            return Err(lines.err("trailing content after `end`"));
        }
    }

    let to_matrix = |rows: usize, cols: Vec<Vec<T>>| DenseMatrix::from_columns(rows, &cols);
    let ds = MultiModalDataset::new(to_matrix(dx, image)?, to_matrix(dy, text)?, labels, names)
        .map_err(|e| lines.err(e.to_string()))?;
    Ok(ds)
}
