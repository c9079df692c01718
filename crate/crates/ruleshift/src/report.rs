//! Four-condition report: SFT/RL × ID/OOD metric series against training
//! compute, with Savitzky-Golay smoothed values and an observed-direction
//! summary of the OOD change from the shared initial checkpoint.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ruleshift_core::evalkit::{binomial_stderr, SavGol, DEFAULT_ORDER, DEFAULT_WINDOW};
use serde::Serialize;

use crate::config::Condition;
use crate::harness::{load_metrics, HarnessError, MetricRow, Stage, METRICS};

pub const CSV_HEADER: [&str; 9] =
    ["compute_gflops", "metric", "value", "stderr", "condition", "env", "viter", "n", "smoothed"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub compute_gflops: f64,
    pub metric: String,
    pub value: f64,
    pub stderr: f64,
    /// `SFT-ID`, `SFT-OOD`, `RL-ID` or `RL-OOD`.
    pub condition: String,
    pub env: String,
    pub viter: usize,
    pub n: usize,
    pub smoothed: f64,
}

pub fn condition_label(stage: Stage, condition: Condition) -> String {
    format!("{}-{}", stage.as_str(), condition.as_str())
}

/// Collects every `metrics.jsonl` below `root` (or `root` itself if it is a file).
pub fn collect_metrics(root: &Path) -> Result<Vec<MetricRow>, HarnessError> {
    let mut files = Vec::new();
    find_metrics(root, &mut files)?;
    files.sort();
    if files.is_empty() {
        return Err(HarnessError::Invalid(format!("{}: no {METRICS} found", root.display())));
    }
    let mut rows = Vec::new();
    for f in files {
        rows.extend(load_metrics(&f)?);
    }
    Ok(rows)
}

fn find_metrics(path: &Path, out: &mut Vec<PathBuf>) -> Result<(), HarnessError> {
    let io = |source| HarnessError::Io { path: path.to_path_buf(), source };
    if path.is_file() {
        out.push(path.to_path_buf());
        return Ok(());
    }
    for e in std::fs::read_dir(path).map_err(io)? {
        let p = e.map_err(io)?.path();
        if p.is_dir() {
            find_metrics(&p, out)?;
        } else if p.file_name().is_some_and(|n| n == METRICS) {
            out.push(p);
        }
    }
    Ok(())
}

/// Largest usable window for a series: the default, shrunk to the largest odd
/// length that fits and still exceeds the polynomial order. `None` when the
/// series is too short to smooth.
pub fn adaptive_window(len: usize) -> Option<usize> {
    let w = DEFAULT_WINDOW.min(if len % 2 == 1 { len } else { len.saturating_sub(1) });
    (w > DEFAULT_ORDER).then_some(w)
}

/// Checks that every row's stderr matches the binomial formula and that
/// values are proportions over a positive count.
pub fn check_rows(rows: &[MetricRow]) -> Result<(), HarnessError> {
    for (i, r) in rows.iter().enumerate() {
        if r.n == 0 || !(0.0..=1.0).contains(&r.value) {
            return Err(HarnessError::Invalid(format!("metric row {i}: value {} over n={}", r.value, r.n)));
        }
        let expect = binomial_stderr(r.value, r.n);
        if (r.stderr - expect).abs() > 1e-12 {
            return Err(HarnessError::Invalid(format!("metric row {i}: stderr {} != {expect}", r.stderr)));
        }
    }
    Ok(())
}

type SeriesKey = (String, String, String, usize);

fn key(r: &MetricRow) -> SeriesKey {
    (r.env.as_str().to_string(), r.metric.clone(), condition_label(r.stage, r.condition), r.viter)
}

/// Groups rows into series, sorts each by compute and smooths it.
pub fn build_report(rows: &[MetricRow]) -> Result<Vec<ReportRow>, HarnessError> {
    check_rows(rows)?;
    let mut series: BTreeMap<SeriesKey, Vec<&MetricRow>> = BTreeMap::new();
    for r in rows {
        series.entry(key(r)).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((env, metric, condition, viter), mut pts) in series {
        pts.sort_by(|a, b| a.compute_gflops.total_cmp(&b.compute_gflops).then(a.checkpoint.cmp(&b.checkpoint)));
        let values: Vec<f64> = pts.iter().map(|r| r.value).collect();
        let smoothed = match adaptive_window(values.len()) {
            Some(window) => SavGol { window, ..SavGol::default() }
                .apply(&values)
                .map_err(|e| HarnessError::Invalid(e.to_string()))?,
            None => values.clone(),
        };
        for (r, s) in pts.iter().zip(smoothed) {
            out.push(ReportRow {
                compute_gflops: r.compute_gflops,
                metric: metric.clone(),
                value: r.value,
                stderr: r.stderr,
                condition: condition.clone(),
                env: env.clone(),
                viter,
                n: r.n,
                smoothed: s,
            });
        }
    }
    Ok(out)
}

pub fn write_csv(path: &Path, rows: &[ReportRow]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.to_path_buf(), source })?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::Invalid(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Invalid(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

/// Change in an OOD metric from the initial checkpoint to the last one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Direction {
    pub env: String,
    pub metric: String,
    pub viter: usize,
    pub init_ood: f64,
    pub sft_ood_delta: Option<f64>,
    pub rl_ood_delta: Option<f64>,
}

impl Direction {
    /// `RL>SFT`, `RL<SFT`, `RL=SFT` or `incomplete`.
    pub fn observed(&self) -> &'static str {
        match (self.rl_ood_delta, self.sft_ood_delta) {
            (Some(r), Some(s)) if r > s => "RL>SFT",
            (Some(r), Some(s)) if r < s => "RL<SFT",
            (Some(_), Some(_)) => "RL=SFT",
            _ => "incomplete",
        }
    }
}

/// OOD deltas of RL and SFT relative to checkpoint 0 of the SFT run, per
/// environment, metric and verification budget. Recorded, never asserted.
pub fn directions(rows: &[MetricRow]) -> Vec<Direction> {
    let mut groups: BTreeMap<(String, String, usize), Vec<&MetricRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.condition == Condition::Ood) {
        groups.entry((r.env.as_str().to_string(), r.metric.clone(), r.viter)).or_default().push(r);
    }
    let last = |rs: &[&MetricRow], stage: Stage| {
        rs.iter().filter(|r| r.stage == stage).max_by_key(|r| r.checkpoint).map(|r| r.value)
    };
    groups
        .into_iter()
        .filter_map(|((env, metric, viter), rs)| {
            let init = rs.iter().find(|r| r.stage == Stage::Sft && r.checkpoint == 0)?.value;
            Some(Direction {
                env,
                metric,
                viter,
                init_ood: init,
                sft_ood_delta: last(&rs, Stage::Sft).map(|v| v - init),
                rl_ood_delta: last(&rs, Stage::Rl).map(|v| v - init),
            })
        })
        .collect()
}

pub fn render_directions(ds: &[Direction]) -> String {
    let fmt = |d: Option<f64>| d.map_or("-".to_string(), |v| format!("{v:+.4}"));
    let mut s = String::from("env\tmetric\tviter\tinit_ood\tsft_ood_delta\trl_ood_delta\tobserved\n");
    for d in ds {
        s += &format!(
            "{}\t{}\t{}\t{:.4}\t{}\t{}\t{}\n",
            d.env,
            d.metric,
            d.viter,
            d.init_ood,
            fmt(d.sft_ood_delta),
            fmt(d.rl_ood_delta),
            d.observed()
        );
    }
    s
}

/// Writes the csv to `out` and the direction summary next to it
/// (`<stem>.directions.tsv`). Returns the report rows.
pub fn report(input: &Path, out: &Path) -> Result<Vec<ReportRow>, HarnessError> {
    let rows = collect_metrics(input)?;
    let report = build_report(&rows)?;
    write_csv(out, &report)?;
    let summary = out.with_extension("directions.tsv");
    std::fs::write(&summary, render_directions(&directions(&rows)))
        .map_err(|source| HarnessError::Io { path: summary, source })?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::EnvName;

    fn row(stage: Stage, condition: Condition, checkpoint: usize, value: f64) -> MetricRow {
        MetricRow {
            env: EnvName::Gp,
            stage,
            condition,
            viter: 1,
            checkpoint,
            compute_gflops: checkpoint as f64,
            metric: "success_rate".into(),
            value,
            stderr: binomial_stderr(value, 10),
            n: 10,
        }
    }

    #[test]
    fn windows_adapt_to_length() {
        assert_eq!(adaptive_window(3), None);
        assert_eq!(adaptive_window(4), None);
        assert_eq!(adaptive_window(5), Some(5));
        assert_eq!(adaptive_window(8), Some(7));
        assert_eq!(adaptive_window(40), Some(DEFAULT_WINDOW));
    }

    #[test]
    fn short_series_pass_through_and_stderr_is_checked() {
        let rows = vec![row(Stage::Rl, Condition::Id, 0, 0.5), row(Stage::Rl, Condition::Id, 1, 0.7)];
        let r = build_report(&rows).unwrap();
        assert_eq!(r.iter().map(|r| r.smoothed).collect::<Vec<_>>(), vec![0.5, 0.7]);
        assert_eq!(r[0].condition, "RL-ID");
        let mut bad = rows;
        bad[1].stderr = 0.0;
        assert!(build_report(&bad).is_err());
    }

    #[test]
    fn direction_deltas() {
        let rows = vec![
            row(Stage::Sft, Condition::Ood, 0, 0.5),
            row(Stage::Sft, Condition::Ood, 2, 0.3),
            row(Stage::Rl, Condition::Ood, 1, 0.6),
        ];
        let d = directions(&rows);
        assert_eq!(d.len(), 1);
        assert!((d[0].sft_ood_delta.unwrap() + 0.2).abs() < 1e-12);
        assert!((d[0].rl_ood_delta.unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(d[0].observed(), "RL>SFT");
    }
}
