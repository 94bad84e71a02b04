//! Dataset file formats.
//!
//! Two external formats are supported:
//! - sparse text ("libsvm"): one sample per line, label first, then 1-based
//!   `index:value` pairs separated by whitespace;
//! - dense matrix datasets: a `rows cols` header line, then one sample per
//!   line as the label followed by the `rows * cols` entries row-major, in
//!   ASCII decimal.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand_chacha::ChaCha8Rng;

use super::bilinear::BilinearLogisticInstance;
use super::logistic::LogisticInstance;
use crate::error::{Error, Result};
use crate::seed::{self, stream};

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), line, message: message.into() }
}

/// Maps a raw label to {-1, +1}; `0` is accepted as the negative class.
fn map_label(raw: f64) -> Option<f64> {
    if raw == 1.0 {
        Some(1.0)
    } else if raw == -1.0 || raw == 0.0 {
        Some(-1.0)
    } else {
        None
    }
}

/// Reads a sparse-format classification dataset into a dense instance. The
/// feature dimension is the largest index seen in the file.
pub fn read_libsvm(path: impl AsRef<Path>) -> Result<LogisticInstance> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut rows: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
    let mut dim = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let mut tokens = line.split_whitespace();
        let Some(label_tok) = tokens.next() else { continue };
        let raw: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad label `{label_tok}`")))?;
        let label = map_label(raw)
            .ok_or_else(|| parse_err(path, lineno, format!("label {raw} is not +1/-1/0")))?;
        let mut entries = Vec::new();
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(path, lineno, format!("expected index:value, got `{tok}`")))?;
            let index: usize = i
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad feature index `{i}`")))?;
            if index == 0 {
                return Err(parse_err(path, lineno, "feature indices are 1-based"));
            }
            let value: f64 = v
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad feature value `{v}`")))?;
            dim = dim.max(index);
            entries.push((index - 1, value));
        }
        rows.push((label, entries));
    }
    if rows.is_empty() {
        return Err(parse_err(path, 0, "no samples in file"));
    }
    let mut features = vec![0.0; rows.len() * dim];
    let mut labels = vec![0.0; rows.len()];
    for (ell, (label, entries)) in rows.into_iter().enumerate() {
        labels[ell] = label;
        for (j, v) in entries {
            features[ell * dim + j] = v;
        }
    }
    LogisticInstance::from_parts(features, labels, dim)
}

/// Writes an instance in the sparse text format. Every entry is written,
/// zeros included, so a read reproduces the instance exactly.
pub fn write_libsvm(path: impl AsRef<Path>, instance: &LogisticInstance) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let dim = instance.feature_dim();
    for (ell, &label) in instance.labels().iter().enumerate() {
        write!(w, "{}", if label > 0.0 { "+1" } else { "-1" })?;
        for j in 0..dim {
            write!(w, " {}:{:.16e}", j + 1, instance.features()[ell * dim + j])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Matrix-valued samples with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseDataset {
    pub rows: usize,
    pub cols: usize,
    /// One `(label, rows*cols row-major entries)` record per sample.
    pub samples: Vec<(f64, Vec<f64>)>,
}

impl DenseDataset {
    pub fn to_bilinear(&self, rank: usize) -> Result<BilinearLogisticInstance> {
        let mut features = Vec::with_capacity(self.samples.len() * self.rows * self.cols);
        let mut labels = Vec::with_capacity(self.samples.len());
        for (label, entries) in &self.samples {
            labels.push(*label);
            features.extend_from_slice(entries);
        }
        BilinearLogisticInstance::from_parts(self.rows, self.cols, rank, features, labels)
    }
}

pub fn read_dense_matrix(path: impl AsRef<Path>) -> Result<DenseDataset> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();
    let (rows, cols) = loop {
        let Some((idx, line)) = lines.next() else {
            return Err(parse_err(path, 0, "missing `rows cols` header"));
        };
        let line = line?;
        let mut tok = line.split_whitespace();
        match (tok.next(), tok.next(), tok.next()) {
            (None, _, _) => continue,
            (Some(r), Some(c), None) => {
                let rows: usize =
                    r.parse().map_err(|_| parse_err(path, idx + 1, format!("bad row count `{r}`")))?;
                let cols: usize =
                    c.parse().map_err(|_| parse_err(path, idx + 1, format!("bad column count `{c}`")))?;
                if rows == 0 || cols == 0 {
                    return Err(parse_err(path, idx + 1, "matrix sizes must be positive"));
                }
                break (rows, cols);
            }
            _ => return Err(parse_err(path, idx + 1, "header must be `rows cols`")),
        }
    };
    let mut samples = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        let mut tok = line.split_whitespace();
        let Some(label_tok) = tok.next() else { continue };
        let raw: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad label `{label_tok}`")))?;
        let label = map_label(raw)
            .ok_or_else(|| parse_err(path, lineno, format!("label {raw} is not +1/-1/0")))?;
        let mut entries = Vec::with_capacity(rows * cols);
        for tok in tok {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad entry `{tok}`")))?;
            entries.push(v);
        }
        if entries.len() != rows * cols {
            return Err(parse_err(
                path,
                lineno,
                format!("expected {} entries, got {}", rows * cols, entries.len()),
            ));
        }
        samples.push((label, entries));
    }
    if samples.is_empty() {
        return Err(parse_err(path, 0, "no samples in file"));
    }
    Ok(DenseDataset { rows, cols, samples })
}

pub fn write_dense_matrix(path: impl AsRef<Path>, dataset: &DenseDataset) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{} {}", dataset.rows, dataset.cols)?;
    for (label, entries) in &dataset.samples {
        write!(w, "{}", if *label > 0.0 { "+1" } else { "-1" })?;
        for v in entries {
            write!(w, " {v:.16e}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Random temporal subsampling: each source sample contributes `repetitions`
/// new samples, each keeping `slices` columns chosen uniformly without
/// replacement (in their original order).
pub fn subsample_columns(
    dataset: &DenseDataset,
    slices: usize,
    repetitions: usize,
    seed: u64,
) -> Result<DenseDataset> {
    if slices == 0 || slices > dataset.cols {
        return Err(Error::InvalidArgument(format!(
            "cannot keep {slices} of {} columns",
            dataset.cols
        )));
    }
    if repetitions == 0 {
        return Err(Error::InvalidArgument("repetitions must be positive".into()));
    }
    let mut rng: ChaCha8Rng = seed::rng_for(seed, stream::DATA);
    let mut samples = Vec::with_capacity(dataset.samples.len() * repetitions);
    for (label, entries) in &dataset.samples {
        for _ in 0..repetitions {
            let mut keep = rand::seq::index::sample(&mut rng, dataset.cols, slices).into_vec();
            keep.sort_unstable();
            let mut sub = Vec::with_capacity(dataset.rows * slices);
            for i in 0..dataset.rows {
                for &j in &keep {
                    sub.push(entries[i * dataset.cols + j]);
                }
            }
            samples.push((*label, sub));
        }
    }
    Ok(DenseDataset { rows: dataset.rows, cols: slices, samples })
}
