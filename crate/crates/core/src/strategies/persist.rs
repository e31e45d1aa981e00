//! Versioned text format for [`LinearModel`].
//!
//! ```text
//! lintext-model<TAB>1
//! task_kind<TAB>multi-label
//! n_features<TAB>147465
//! n_labels<TAB>2
//! labels<TAB>A B
//! label<TAB>A<TAB><delta><TAB><positive_weight><TAB><nnz><TAB>col:val col:val ...
//! label<TAB>B<TAB>...
//! ```
//!
//! Floats are written in shortest round-trip exponent form, so a reloaded
//! model reproduces decision values bit for bit. Zero weights are omitted.

use std::io::{BufRead, Write};
use std::path::Path;

use super::LinearModel;
use crate::corpus::TaskKind;
use crate::error::{Error, Result};
use crate::linear::WeightVector;

const MAGIC: &str = "lintext-model";
pub const MODEL_VERSION: u32 = 1;

pub fn write_model<W: Write>(model: &LinearModel, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{MAGIC}\t{MODEL_VERSION}")?;
    writeln!(w, "task_kind\t{}", model.task_kind().as_str())?;
    writeln!(w, "n_features\t{}", model.n_features())?;
    writeln!(w, "n_labels\t{}", model.n_labels())?;
    writeln!(w, "labels\t{}", model.labels().join(" "))?;
    for l in 0..model.n_labels() {
        let row = &model.weights()[l].0;
        let nnz = row.iter().filter(|&&v| v != 0.0).count();
        write!(
            w,
            "label\t{}\t{:e}\t{:e}\t{nnz}\t",
            model.labels()[l],
            model.thresholds()[l],
            model.positive_weights()[l]
        )?;
        let mut first = true;
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                if !first {
                    w.write_all(b" ")?;
                }
                write!(w, "{j}:{v:e}")?;
                first = false;
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_model<R: BufRead>(r: R, path: &Path) -> Result<LinearModel> {
    let mut lines = r.lines().enumerate();
    let mut next = || -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((i, Err(e))) => Err(Error::parse(path, i + 1, e.to_string())),
            None => Err(Error::parse(path, 0, "unexpected end of model file")),
        }
    };
    let field = |(no, line): (usize, String), key: &str| -> Result<(usize, String)> {
        match line.split_once('\t') {
            Some((k, v)) if k == key => Ok((no, v.to_string())),
            _ => Err(Error::parse(path, no, format!("expected {key:?} field"))),
        }
    };
    let parse_num = |no: usize, s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::parse(path, no, format!("invalid number {s:?}")))
    };
    let parse_int = |no: usize, s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::parse(path, no, format!("invalid integer {s:?}")))
    };

    let (no, v) = field(next()?, MAGIC)?;
    if parse_int(no, &v)? != MODEL_VERSION as usize {
        return Err(Error::parse(path, no, format!("unsupported model version {v}")));
    }
    let (no, v) = field(next()?, "task_kind")?;
    let task_kind: TaskKind = v.parse().map_err(|_| Error::parse(path, no, format!("bad task kind {v:?}")))?;
    let (no, v) = field(next()?, "n_features")?;
    let n_features = parse_int(no, &v)?;
    let (no, v) = field(next()?, "n_labels")?;
    let n_labels = parse_int(no, &v)?;
    let (no, v) = field(next()?, "labels")?;
    let labels: Vec<String> = v.split(' ').filter(|s| !s.is_empty()).map(str::to_owned).collect();
    if labels.len() != n_labels {
        return Err(Error::parse(path, no, "label list length differs from n_labels"));
    }

    let mut weights = Vec::with_capacity(n_labels);
    let mut thresholds = Vec::with_capacity(n_labels);
    let mut positive_weights = Vec::with_capacity(n_labels);
    for name in &labels {
        let (no, rest) = field(next()?, "label")?;
        let parts: Vec<&str> = rest.splitn(5, '\t').collect();
        if parts.len() != 5 {
            return Err(Error::parse(path, no, "label line needs name, delta, weight, nnz and entries"));
        }
        if parts[0] != name {
            return Err(Error::parse(path, no, format!("expected label {name:?}, found {:?}", parts[0])));
        }
        thresholds.push(parse_num(no, parts[1])?);
        positive_weights.push(parse_num(no, parts[2])?);
        let nnz = parse_int(no, parts[3])?;
        let mut row = vec![0.0; n_features];
        let mut count = 0;
        for entry in parts[4].split(' ').filter(|s| !s.is_empty()) {
            let (j, val) = entry
                .split_once(':')
                .ok_or_else(|| Error::parse(path, no, format!("bad weight entry {entry:?}")))?;
            let j = parse_int(no, j)?;
            if j >= n_features {
                return Err(Error::parse(path, no, format!("weight index {j} out of range")));
            }
            row[j] = parse_num(no, val)?;
            count += 1;
        }
        if count != nnz {
            return Err(Error::parse(path, no, format!("expected {nnz} weights, found {count}")));
        }
        weights.push(WeightVector(row));
    }
    if let Some((i, Ok(l))) = lines.next() {
        if !l.is_empty() {
            return Err(Error::parse(path, i + 1, "trailing content after the last label"));
        }
    }
    LinearModel::new(labels, task_kind, n_features, weights, thresholds, positive_weights)
}

impl LinearModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        write_model(self, &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        read_model(std::io::BufReader::new(f), path)
    }
}
