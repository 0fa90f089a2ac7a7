use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::layers::lstm::Source;
use crate::layers::{checkpoint, Network, Stage, Transform};
use crate::tensor::frobenius_norm;

/// Which family a weight matrix belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormGroup {
    /// LSTM matrices reading the input `x_t`.
    Input,
    /// LSTM matrices reading `h_{t-1}`.
    Hidden,
    /// LSTM peephole matrices reading the cell state.
    Peephole,
    /// Affine-layer weights.
    Affine,
}

impl NormGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            NormGroup::Input => "input",
            NormGroup::Hidden => "hidden",
            NormGroup::Peephole => "peephole",
            NormGroup::Affine => "affine",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormEntry {
    pub name: String,
    pub group: NormGroup,
    pub rows: usize,
    pub cols: usize,
    pub norm: f64,
}

/// Ratios of mean Frobenius norms between the LSTM matrix groups. A ratio
/// whose denominator group has zero mean norm is `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupRatios {
    pub peephole_over_input: Option<f64>,
    pub peephole_over_hidden: Option<f64>,
    pub input_over_hidden: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub entries: Vec<NormEntry>,
    /// Present when the model has at least one LSTM stage.
    pub ratios: Option<GroupRatios>,
}

impl NormReport {
    pub fn group_mean(&self, group: NormGroup) -> Option<f64> {
        let norms: Vec<f64> = self.entries.iter().filter(|e| e.group == group).map(|e| e.norm).collect();
        (!norms.is_empty()).then(|| norms.iter().sum::<f64>() / norms.len() as f64)
    }
}

pub fn norm_report(net: &Network) -> NormReport {
    let mut entries = Vec::new();
    let mut has_lstm = false;
    for (i, stage) in net.stages().iter().enumerate() {
        match stage {
            Stage::Affine(layer) => {
                let w = layer.weight();
                entries.push(NormEntry {
                    name: format!("stage{i}.weight"),
                    group: NormGroup::Affine,
                    rows: w.rows(),
                    cols: w.cols(),
                    norm: frobenius_norm(w),
                });
            }
            Stage::Lstm(cell) => {
                has_lstm = true;
                for t in Transform::ALL {
                    let w = cell.weight(t);
                    entries.push(NormEntry {
                        name: format!("stage{i}.{}", t.name()),
                        group: match t.source() {
                            Source::Input => NormGroup::Input,
                            Source::Hidden => NormGroup::Hidden,
                            Source::Cell => NormGroup::Peephole,
                        },
                        rows: w.rows(),
                        cols: w.cols(),
                        norm: frobenius_norm(w),
                    });
                }
            }
        }
    }
    let mut report = NormReport { entries, ratios: None };
    if has_lstm {
        let mean = |g| report.group_mean(g).unwrap_or(0.0);
        let ratio = |a: f64, b: f64| (b > 0.0).then(|| a / b);
        let (input, hidden, peep) = (mean(NormGroup::Input), mean(NormGroup::Hidden), mean(NormGroup::Peephole));
        report.ratios = Some(GroupRatios {
            peephole_over_input: ratio(peep, input),
            peephole_over_hidden: ratio(peep, hidden),
            input_over_hidden: ratio(input, hidden),
        });
    }
    report
}

pub fn norm_report_from_checkpoint(path: impl AsRef<Path>) -> Result<NormReport> {
    Ok(norm_report(&checkpoint::load(path)?))
}

pub fn render_norms(report: &NormReport) -> String {
    let mut out = String::from("matrix                group     shape    frobenius\n");
    for e in &report.entries {
        let _ = writeln!(
            out,
            "{:<21} {:<9} {:<8} {:.6}",
            e.name,
            e.group.as_str(),
            format!("{}x{}", e.rows, e.cols),
            e.norm
        );
    }
    if let Some(r) = report.ratios {
        let num = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
        let _ = writeln!(out, "ratio peephole/input   {}", num(r.peephole_over_input));
        let _ = writeln!(out, "ratio peephole/hidden  {}", num(r.peephole_over_hidden));
        let _ = writeln!(out, "ratio input/hidden     {}", num(r.input_over_hidden));
    }
    out
}
