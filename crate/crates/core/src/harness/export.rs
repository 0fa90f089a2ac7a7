//! CSV files for training records, sweeps and sensitivity summaries.
//!
//! Every file has a header row and a fixed column order. Reals are printed
//! with six significant digits (`%g` style) and non-finite or missing values
//! as empty fields, so importing a file and exporting it again reproduces it
//! byte for byte.
//!
//! | file | columns |
//! |------|---------|
//! | record | `epoch, lr, train_ce, cv_ce, cv_frame_acc` |
//! | sweep | `init_lr, stabilizer, seed, final_cv_ce, final_frame_acc, epochs, stop_reason` |
//! | summary | `model, stabilizer, seed, spread, points, failed, best_final_ce, worst_final_ce` |
//!
//! The summary has one row per seed plus a row with seed `mean` per arm.

use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::sweep::{arm_name, SensitivitySummary, SweepCell, SweepResult};
use crate::harness::train::{EpochRecord, StopReason};

pub const RECORD_COLUMNS: [&str; 5] = ["epoch", "lr", "train_ce", "cv_ce", "cv_frame_acc"];
pub const SWEEP_COLUMNS: [&str; 7] = [
    "init_lr",
    "stabilizer",
    "seed",
    "final_cv_ce",
    "final_frame_acc",
    "epochs",
    "stop_reason",
];
pub const SUMMARY_COLUMNS: [&str; 8] = [
    "model",
    "stabilizer",
    "seed",
    "spread",
    "points",
    "failed",
    "best_final_ce",
    "worst_final_ce",
];

/// Six significant digits, trailing zeros removed, exponent form outside
/// `[1e-4, 1e6)`. Non-finite values print as an empty string.
pub fn format_real(v: f64) -> String {
    if !v.is_finite() {
        return String::new();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt_real(v: Option<f64>) -> String {
    v.map_or_else(String::new, format_real)
}

fn parse_opt(field: &str, what: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse()
        .map(Some)
        .map_err(|_| Error::Parse(format!("{what}: `{field}` is not a number")))
}

fn parse<T: std::str::FromStr>(field: &str, what: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Parse(format!("{what}: cannot parse `{field}`")))
}

fn write_rows(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let err = |e: csv::Error| Error::io(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    let found = r.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Parse(format!(
            "{}: expected columns {}",
            path.display(),
            header.join(",")
        )));
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            if rec.len() != header.len() {
                return Err(Error::Parse(format!("{}: short row", path.display())));
            }
            Ok(rec)
        })
        .collect()
}

pub fn write_record_csv(epochs: &[EpochRecord], path: impl AsRef<Path>) -> Result<()> {
    write_rows(
        path.as_ref(),
        &RECORD_COLUMNS,
        epochs.iter().map(|e| {
            vec![
                e.epoch.to_string(),
                format_real(e.lr),
                format_real(e.train_ce),
                format_real(e.cv_ce),
                format_real(e.cv_frame_acc),
            ]
        }),
    )
}

/// Epoch rows of a record file, at printed precision.
pub fn read_record_csv(path: impl AsRef<Path>) -> Result<Vec<EpochRecord>> {
    read_rows(path.as_ref(), &RECORD_COLUMNS)?
        .iter()
        .map(|r| {
            let real = |i: usize| parse_opt(&r[i], RECORD_COLUMNS[i]).map(|v| v.unwrap_or(f64::NAN));
            Ok(EpochRecord {
                epoch: parse(&r[0], "epoch")?,
                lr: real(1)?,
                train_ce: real(2)?,
                cv_ce: real(3)?,
                cv_frame_acc: real(4)?,
            })
        })
        .collect()
}

pub fn write_sweep_csv(sweep: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    write_rows(
        path.as_ref(),
        &SWEEP_COLUMNS,
        sweep.cells.iter().map(|c| {
            vec![
                format_real(c.init_lr),
                if c.stabilized { "on" } else { "off" }.to_string(),
                c.seed.to_string(),
                opt_real(c.final_cv_ce),
                opt_real(c.final_frame_acc),
                c.epochs.to_string(),
                c.stop_reason.as_str().to_string(),
            ]
        }),
    )
}

/// Sweep cells of a sweep file; full records are not part of the file.
pub fn read_sweep_csv(path: impl AsRef<Path>, label: &str) -> Result<SweepResult> {
    let cells = read_rows(path.as_ref(), &SWEEP_COLUMNS)?
        .iter()
        .map(|r| {
            let stabilized = match &r[1] {
                "on" => true,
                "off" => false,
                other => return Err(Error::Parse(format!("stabilizer: expected on/off, got `{other}`"))),
            };
            Ok(SweepCell {
                init_lr: parse(&r[0], "init_lr")?,
                stabilized,
                seed: parse(&r[2], "seed")?,
                final_cv_ce: parse_opt(&r[3], "final_cv_ce")?,
                final_frame_acc: parse_opt(&r[4], "final_frame_acc")?,
                epochs: parse(&r[5], "epochs")?,
                stop_reason: r[6].parse::<StopReason>()?,
                failure: None,
                record: None,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult {
        label: label.to_string(),
        cells,
    })
}

pub fn write_summary_csv(summary: &SensitivitySummary, path: impl AsRef<Path>) -> Result<()> {
    let mut rows = Vec::new();
    for arm in &summary.arms {
        let arm_rows = arm.seeds.iter().map(|s| {
            vec![
                s.seed.to_string(),
                opt_real(s.spread),
                s.points.to_string(),
                s.failed.to_string(),
            ]
        });
        let mean = vec![
            "mean".to_string(),
            opt_real(arm.mean_spread),
            arm.seeds.iter().map(|s| s.points).sum::<usize>().to_string(),
            arm.seeds.iter().map(|s| s.failed).sum::<usize>().to_string(),
        ];
        for mut row in arm_rows.chain([mean]) {
            row.insert(0, arm_name(arm.stabilized).to_string());
            row.insert(0, summary.label.clone());
            row.push(opt_real(arm.best_final_ce));
            row.push(opt_real(arm.worst_final_ce));
            rows.push(row);
        }
    }
    write_rows(path.as_ref(), &SUMMARY_COLUMNS, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(format_real(0.0), "0");
        assert_eq!(format_real(1.0), "1");
        assert_eq!(format_real(0.1), "0.1");
        assert_eq!(format_real(2.0f64.ln()), "0.693147");
        assert_eq!(format_real(1234567.0), "1.23457e+06");
        assert_eq!(format_real(123456.4), "123456");
        assert_eq!(format_real(0.00012345678), "0.000123457");
        assert_eq!(format_real(0.0000123), "1.23e-05");
        assert_eq!(format_real(-3.5), "-3.5");
        assert_eq!(format_real(0.0016), "0.0016");
        assert_eq!(format_real(9.999999), "10");
        assert_eq!(format_real(f64::NAN), "");
        assert_eq!(format_real(f64::INFINITY), "");
    }

    #[test]
    fn printed_values_reprint_identically() {
        let mut rng = crate::tensor::Rng::new(3);
        for _ in 0..2000 {
            let v = rng.uniform(-1.0, 1.0) * 10f64.powi(rng.below(16) as i32 - 8);
            let s = format_real(v);
            assert_eq!(format_real(s.parse().unwrap()), s);
        }
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let sweep = SweepResult {
            label: "x".into(),
            cells: vec![],
        };
        write_sweep_csv(&sweep, &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "init_lr,stabilizer,seed,final_cv_ce,final_frame_acc,epochs,stop_reason\n"
        );
        assert!(read_sweep_csv(&path, "x").unwrap().cells.is_empty());
    }

    #[test]
    fn sweep_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        let cell = |lr: f64, on: bool, ce: Option<f64>, stop| SweepCell {
            init_lr: lr,
            stabilized: on,
            seed: 7,
            final_cv_ce: ce,
            final_frame_acc: ce.map(|c| 1.0 / (1.0 + c)),
            epochs: 13,
            stop_reason: stop,
            failure: None,
            record: None,
        };
        let sweep = SweepResult {
            label: "x".into(),
            cells: vec![
                cell(0.8, false, Some(2.8423456789), StopReason::EarlyStop),
                cell(0.0016, true, None, StopReason::Diverged),
                cell(0.0125, true, Some(1e-7 / 3.0), StopReason::MaxEpochs),
            ],
        };
        write_sweep_csv(&sweep, &a).unwrap();
        let back = read_sweep_csv(&a, "x").unwrap();
        assert_eq!(back.cells[1].final_cv_ce, None);
        assert_eq!(back.cells[1].stop_reason, StopReason::Diverged);
        assert!((back.cells[0].final_cv_ce.unwrap() - 2.84235).abs() < 1e-12);
        write_sweep_csv(&back, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn record_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        let epochs: Vec<EpochRecord> = (0..5)
            .map(|e| EpochRecord {
                epoch: e,
                lr: 0.8 / (1 << e) as f64,
                train_ce: 1.0 / (e as f64 + 1.3),
                cv_ce: 1.1 / (e as f64 + 1.7),
                cv_frame_acc: e as f64 / 7.0,
            })
            .collect();
        write_record_csv(&epochs, &a).unwrap();
        let text = std::fs::read_to_string(&a).unwrap();
        assert!(text.starts_with("epoch,lr,train_ce,cv_ce,cv_frame_acc\n0,0.8,"));
        write_record_csv(&read_record_csv(&a).unwrap(), &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn wrong_header_or_values_are_parse_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, "lr,seed\n0.1,1\n").unwrap();
        assert!(matches!(read_sweep_csv(&path, "x"), Err(Error::Parse(_))));
        std::fs::write(
            &path,
            "init_lr,stabilizer,seed,final_cv_ce,final_frame_acc,epochs,stop_reason\n0.1,maybe,1,2,0.5,3,max_epochs\n",
        )
        .unwrap();
        assert!(read_sweep_csv(&path, "x").is_err());
        assert!(matches!(read_sweep_csv(dir.path().join("nope.csv"), "x"), Err(Error::Io { .. })));
    }
}
