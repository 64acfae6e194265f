//! Ranking quality against the common-example ground truth.
//!
//! All metrics are reported as percentages. Average precision is the
//! non-interpolated sum over the ranks of the positives:
//! `AP = (1/P) Σ_{k : ranked[k] is common} precision@k`.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{csv_field, RankedList};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no common instances in the ranking; average precision is undefined")]
    NoCommons,
    #[error("instance `{0}` has no ground-truth flag")]
    UnknownId(String),
    #[error("cutoff {n} is outside 1..={len}")]
    CutoffOutOfRange { n: usize, len: usize },
    #[error("step must be at least 1")]
    ZeroStep,
    #[error("cannot aggregate: {0}")]
    Aggregate(String),
}

/// Common flags in rank order.
fn flags_in_rank_order(ranked: &RankedList, is_common: &HashMap<String, bool>) -> Result<Vec<bool>, EvalError> {
    ranked
        .ids()
        .map(|id| is_common.get(id).copied().ok_or_else(|| EvalError::UnknownId(id.to_string())))
        .collect()
}

pub fn average_precision(ranked: &RankedList, is_common: &HashMap<String, bool>) -> Result<f64, EvalError> {
    let flags = flags_in_rank_order(ranked, is_common)?;
    average_precision_flags(&flags)
}

pub fn average_precision_flags(flags: &[bool]) -> Result<f64, EvalError> {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, &f) in flags.iter().enumerate() {
        if f {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    if hits == 0 {
        return Err(EvalError::NoCommons);
    }
    Ok(100.0 * sum / hits as f64)
}

pub fn precision_recall_at(
    ranked: &RankedList,
    is_common: &HashMap<String, bool>,
    n: usize,
) -> Result<(f64, f64), EvalError> {
    let flags = flags_in_rank_order(ranked, is_common)?;
    let prefix = Prefix::new(&flags);
    prefix.at(n)
}

/// Prefix counts of commons, so every cutoff is O(1).
struct Prefix {
    cumulative: Vec<usize>,
}

impl Prefix {
    fn new(flags: &[bool]) -> Self {
        let mut cumulative = Vec::with_capacity(flags.len() + 1);
        cumulative.push(0);
        for &f in flags {
            cumulative.push(cumulative.last().unwrap() + usize::from(f));
        }
        Self { cumulative }
    }

    fn len(&self) -> usize {
        self.cumulative.len() - 1
    }

    fn at(&self, n: usize) -> Result<(f64, f64), EvalError> {
        let len = self.len();
        if n < 1 || n > len {
            return Err(EvalError::CutoffOutOfRange { n, len });
        }
        let total = self.cumulative[len];
        let hits = self.cumulative[n];
        let precision = 100.0 * hits as f64 / n as f64;
        // With no commons at all recall is taken as 0 rather than undefined.
        let recall = if total == 0 { 0.0 } else { 100.0 * hits as f64 / total as f64 };
        Ok((precision, recall))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtN {
    pub n: usize,
    pub precision: f64,
    pub recall: f64,
}

/// Cutoffs `start, start + step, …` plus `|ranked|` itself.
pub fn cutoff_grid(len: usize, start: usize, step: usize) -> Result<Vec<usize>, EvalError> {
    if step == 0 {
        return Err(EvalError::ZeroStep);
    }
    if start < 1 || start > len {
        return Err(EvalError::CutoffOutOfRange { n: start, len });
    }
    let mut grid: Vec<usize> = (start..=len).step_by(step).collect();
    if grid.last() != Some(&len) {
        grid.push(len);
    }
    Ok(grid)
}

pub fn pr_series(
    ranked: &RankedList,
    is_common: &HashMap<String, bool>,
    start: usize,
    step: usize,
) -> Result<Vec<AtN>, EvalError> {
    let flags = flags_in_rank_order(ranked, is_common)?;
    let prefix = Prefix::new(&flags);
    cutoff_grid(flags.len(), start, step)?
        .into_iter()
        .map(|n| prefix.at(n).map(|(precision, recall)| AtN { n, precision, recall }))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Mean and sample (n - 1) standard deviation.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { mean, std }
    }
}

impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2} ± {:.2}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregatedAtN {
    pub n: usize,
    pub precision: MeanStd,
    pub recall: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregated {
    pub aps: MeanStd,
    pub at_n: Vec<AggregatedAtN>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scorer: String,
    pub aps: f64,
    pub at_n: Vec<AtN>,
    pub seeds_used: Vec<u64>,
    /// Present on reports produced by [`aggregate_over_seeds`].
    pub aggregated: Option<Aggregated>,
}

impl EvalReport {
    pub fn at(&self, n: usize) -> Option<&AtN> {
        self.at_n.iter().find(|a| a.n == n)
    }
}

/// Default cutoffs for the summary table.
pub const TABLE_CUTOFFS: [usize; 2] = [500, 1000];

/// Full report for one ranking: APS, the `10, 20, …, |D|` series, and any
/// extra `cutoffs` that fit in the ranking.
pub fn evaluate(
    scorer: &str,
    ranked: &RankedList,
    is_common: &HashMap<String, bool>,
    seed: u64,
    cutoffs: &[usize],
) -> Result<EvalReport, EvalError> {
    let flags = flags_in_rank_order(ranked, is_common)?;
    let aps = average_precision_flags(&flags)?;
    let prefix = Prefix::new(&flags);
    let len = flags.len();
    let mut grid = cutoff_grid(len, 10.min(len), 10)?;
    grid.extend(cutoffs.iter().copied().filter(|&n| n >= 1 && n <= len));
    grid.sort_unstable();
    grid.dedup();
    let at_n = grid
        .into_iter()
        .map(|n| prefix.at(n).map(|(precision, recall)| AtN { n, precision, recall }))
        .collect::<Result<_, _>>()?;
    Ok(EvalReport {
        scorer: scorer.to_string(),
        aps,
        at_n,
        seeds_used: vec![seed],
        aggregated: None,
    })
}

/// Per-seed reports → one report with mean ± sample std per metric.
pub fn aggregate_over_seeds(reports: &[EvalReport]) -> Result<EvalReport, EvalError> {
    if reports.len() < 2 {
        return Err(EvalError::Aggregate("at least two reports are required".into()));
    }
    let first = &reports[0];
    let grid: Vec<usize> = first.at_n.iter().map(|a| a.n).collect();
    for r in &reports[1..] {
        if r.scorer != first.scorer {
            return Err(EvalError::Aggregate(format!("scorers differ: `{}` vs `{}`", first.scorer, r.scorer)));
        }
        if r.at_n.iter().map(|a| a.n).ne(grid.iter().copied()) {
            return Err(EvalError::Aggregate("reports use different cutoff grids".into()));
        }
    }
    let aps = MeanStd::of(&reports.iter().map(|r| r.aps).collect::<Vec<_>>());
    let at_n: Vec<AggregatedAtN> = grid
        .iter()
        .enumerate()
        .map(|(k, &n)| AggregatedAtN {
            n,
            precision: MeanStd::of(&reports.iter().map(|r| r.at_n[k].precision).collect::<Vec<_>>()),
            recall: MeanStd::of(&reports.iter().map(|r| r.at_n[k].recall).collect::<Vec<_>>()),
        })
        .collect();
    Ok(EvalReport {
        scorer: first.scorer.clone(),
        aps: aps.mean,
        at_n: at_n
            .iter()
            .map(|a| AtN {
                n: a.n,
                precision: a.precision.mean,
                recall: a.recall.mean,
            })
            .collect(),
        seeds_used: reports.iter().flat_map(|r| r.seeds_used.iter().copied()).collect(),
        aggregated: Some(Aggregated { aps, at_n }),
    })
}

/// One row per scorer × N. Aggregated reports add `_std` columns.
pub fn write_report_csv<W: Write>(reports: &[EvalReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "scorer,seeds,n,aps,aps_std,precision,precision_std,recall,recall_std")?;
    for r in reports {
        let seeds = r.seeds_used.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
        let aps_std = r.aggregated.as_ref().map_or(0.0, |a| a.aps.std);
        for (k, a) in r.at_n.iter().enumerate() {
            let (p_std, r_std) = r
                .aggregated
                .as_ref()
                .map_or((0.0, 0.0), |agg| (agg.at_n[k].precision.std, agg.at_n[k].recall.std));
            writeln!(
                out,
                "{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.4}",
                csv_field(&r.scorer),
                seeds,
                a.n,
                r.aps,
                aps_std,
                a.precision,
                p_std,
                a.recall,
                r_std
            )?;
        }
    }
    Ok(())
}

/// The `N,precision,recall` series of one report, for plotting.
pub fn write_series_csv<W: Write>(report: &EvalReport, mut out: W) -> std::io::Result<()> {
    writeln!(out, "n,precision,recall")?;
    for a in &report.at_n {
        writeln!(out, "{},{:.4},{:.4}", a.n, a.precision, a.recall)?;
    }
    Ok(())
}

/// Human-readable table: APS then precision/recall at each cutoff.
pub fn format_table(reports: &[EvalReport], cutoffs: &[usize]) -> String {
    let mut header = vec!["Model".to_string(), "APS".to_string()];
    for n in cutoffs {
        header.push(format!("Prec-{n}"));
        header.push(format!("Recall-{n}"));
    }
    let mut rows = vec![header];
    for r in reports {
        let mut row = vec![r.scorer.clone()];
        match &r.aggregated {
            Some(agg) => {
                row.push(agg.aps.to_string());
                for &n in cutoffs {
                    match agg.at_n.iter().find(|a| a.n == n) {
                        Some(a) => {
                            row.push(a.precision.to_string());
                            row.push(a.recall.to_string());
                        }
                        None => row.extend(["n/a".to_string(), "n/a".to_string()]),
                    }
                }
            }
            None => {
                row.push(format!("{:.2}", r.aps));
                for &n in cutoffs {
                    match r.at(n) {
                        Some(a) => {
                            row.push(format!("{:.2}", a.precision));
                            row.push(format!("{:.2}", a.recall));
                        }
                        None => row.extend(["n/a".to_string(), "n/a".to_string()]),
                    }
                }
            }
        }
        rows.push(row);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(cells.join(" | ").trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().join("-|-"));
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::RankedEntry;

    fn ranking(flags: &[bool]) -> (RankedList, HashMap<String, bool>) {
        let entries = flags
            .iter()
            .enumerate()
            .map(|(k, _)| RankedEntry {
                rank: k + 1,
                instance_id: format!("i{k:04}"),
                score: -(k as f64),
            })
            .collect();
        let truth = flags.iter().enumerate().map(|(k, &f)| (format!("i{k:04}"), f)).collect();
        (RankedList { entries }, truth)
    }

    #[test]
    fn average_precision_hand_values() {
        let (r, t) = ranking(&[true, true, false, false]);
        assert_eq!(average_precision(&r, &t).unwrap(), 100.0);
        let (r, t) = ranking(&[true, false, true]);
        let ap = average_precision(&r, &t).unwrap();
        assert!((ap - 100.0 * (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-9);
        assert!((ap - 83.33).abs() < 0.01);
        let (r, t) = ranking(&[false, false]);
        assert_eq!(average_precision(&r, &t), Err(EvalError::NoCommons));
    }

    #[test]
    fn precision_recall_cutoffs() {
        let (r, t) = ranking(&[true, false, true]);
        assert_eq!(precision_recall_at(&r, &t, 2).unwrap(), (50.0, 50.0));
        let (p, rec) = precision_recall_at(&r, &t, 3).unwrap();
        assert!((p - 200.0 / 3.0).abs() < 1e-12);
        assert_eq!(rec, 100.0);
        assert_eq!(
            precision_recall_at(&r, &t, 4),
            Err(EvalError::CutoffOutOfRange { n: 4, len: 3 })
        );
        assert!(precision_recall_at(&r, &t, 0).is_err());
        let (r, t) = ranking(&[true; 5]);
        assert_eq!(precision_recall_at(&r, &t, 3).unwrap().0, 100.0);
    }

    #[test]
    fn series_grid() {
        let (r, t) = ranking(&[true; 30]);
        assert_eq!(pr_series(&r, &t, 10, 10).unwrap().len(), 3);
        let (r, t) = ranking(&[false, true].repeat(16));
        let s = pr_series(&r, &t, 10, 10).unwrap();
        assert_eq!(s.iter().map(|a| a.n).collect::<Vec<_>>(), [10, 20, 30, 32]);
        assert_eq!(s.last().unwrap().recall, 100.0);
    }

    #[test]
    fn unknown_ids_are_reported() {
        let (r, mut t) = ranking(&[true, false]);
        t.remove("i0001");
        assert_eq!(average_precision(&r, &t), Err(EvalError::UnknownId("i0001".into())));
    }

    fn report(aps: f64) -> EvalReport {
        EvalReport {
            scorer: "dm_mean_pred".into(),
            aps,
            at_n: vec![AtN { n: 10, precision: aps, recall: 50.0 }],
            seeds_used: vec![1],
            aggregated: None,
        }
    }

    #[test]
    fn aggregation_uses_sample_std() {
        let agg = aggregate_over_seeds(&[report(50.0), report(60.0)]).unwrap();
        assert_eq!(agg.aggregated.as_ref().unwrap().aps.to_string(), "55.00 ± 7.07");
        let same = aggregate_over_seeds(&[report(50.0), report(50.0)]).unwrap();
        assert_eq!(same.aggregated.unwrap().aps.to_string(), "50.00 ± 0.00");
        let mut other = report(1.0);
        other.at_n[0].n = 20;
        assert!(aggregate_over_seeds(&[report(50.0), other]).is_err());
        assert!(aggregate_over_seeds(&[report(50.0)]).is_err());
    }

    #[test]
    fn table_marks_missing_cutoffs() {
        let (r, t) = ranking(&[true, false, true]);
        let rep = evaluate("random", &r, &t, 42, &TABLE_CUTOFFS).unwrap();
        let table = format_table(&[rep], &TABLE_CUTOFFS);
        assert!(table.contains("n/a"));
        assert!(table.starts_with("Model"));
    }
}
