//! Dataset files.
//!
//! Frame datasets are CSV with header `label,x0,x1,…,x{D-1}`: the class index
//! followed by the feature values. Sequence datasets are JSON lines, one
//! object per sequence: `{"frames":[[x0,…],…],"labels":[y0,…]}`. Floats are
//! written in shortest round-trip form, so reading a written file reproduces
//! the dataset exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::data::{Frame, FrameDataset, Sequence, SequenceDataset};
use crate::error::{Error, Result};
use crate::tensor::Vector;

pub fn write_frames_csv(ds: &FrameDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |e: std::io::Error| Error::io(path, e);
    let csv_err = |e: csv::Error| Error::io(path, e.into());
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path).map_err(io_err)?));
    let mut header = vec!["label".to_string()];
    header.extend((0..ds.feature_dim).map(|i| format!("x{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for f in &ds.frames {
        let mut row = vec![f.label.to_string()];
        row.extend(f.features.values().iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_frames_csv(path: impl AsRef<Path>, num_classes: usize) -> Result<FrameDataset> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    let headers = r.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if headers.get(0) != Some("label") {
        return Err(Error::Parse(format!("{}: first column must be `label`", path.display())));
    }
    let feature_dim = headers.len() - 1;
    let mut frames = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let bad = |what: &str| Error::Parse(format!("{} row {}: {what}", path.display(), line + 1));
        let label: usize = rec[0].parse().map_err(|_| bad("bad label"))?;
        if label >= num_classes {
            return Err(bad("label out of range"));
        }
        let values = rec
            .iter()
            .skip(1)
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad("bad feature value"))?;
        frames.push(Frame {
            features: Vector::from_vec(values)?,
            label,
        });
    }
    Ok(FrameDataset {
        frames,
        feature_dim,
        num_classes,
        means: Vec::new(),
    })
}

pub fn write_sequences_jsonl(ds: &SequenceDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |e: std::io::Error| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    for seq in &ds.sequences {
        let line = serde_json::to_string(seq).map_err(|e| Error::Parse(e.to_string()))?;
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_sequences_jsonl(path: impl AsRef<Path>, num_classes: usize) -> Result<SequenceDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut sequences = Vec::new();
    let mut feature_dim = None;
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: String| Error::Parse(format!("{} line {}: {what}", path.display(), n + 1));
        let seq: Sequence = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        if seq.frames.len() != seq.labels.len() {
            return Err(bad("frame and label counts differ".into()));
        }
        if seq.labels.iter().any(|&l| l >= num_classes) {
            return Err(bad("label out of range".into()));
        }
        for x in &seq.frames {
            if *feature_dim.get_or_insert(x.dim()) != x.dim() {
                return Err(bad("inconsistent feature dimension".into()));
            }
        }
        sequences.push(seq);
    }
    Ok(SequenceDataset {
        sequences,
        feature_dim: feature_dim.unwrap_or(0),
        num_classes,
    })
}
