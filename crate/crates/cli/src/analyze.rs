use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::Serialize;

use agent_graph::partition::io::read_json;
use agent_graph::partition::{PartitionMetrics, PartitionMode};

use crate::args::{AnalyzeArgs, ReportFormat};
use crate::error::CliError;

#[derive(Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub k: u32,
    pub baseline: PartitionMode,
    pub candidate: PartitionMode,
    pub metric: &'static str,
    pub baseline_value: f64,
    pub candidate_value: f64,
    /// `candidate / baseline`.
    pub ratio: f64,
}

#[derive(Debug, PartialEq, Serialize)]
pub struct Diff {
    pub left: PathBuf,
    pub right: PathBuf,
    pub compared: usize,
    pub mismatches: usize,
    /// Ids present in only one file.
    pub missing: usize,
    /// Largest absolute difference over finite values present in both.
    pub max_abs_error: f64,
    pub tolerance: f64,
}

#[derive(Debug, Serialize)]
struct Report {
    metrics: Vec<(PathBuf, PartitionMetrics)>,
    comparisons: Vec<Comparison>,
    diff: Option<Diff>,
}

pub fn load_metrics(path: &Path) -> Result<PartitionMetrics, CliError> {
    read_json(path).map_err(|e| match CliError::from(e) {
        CliError::Format(m) => CliError::Format(format!("{}: not a metrics report ({m})", path.display())),
        other => other,
    })
}

/// Hash against each greedy mode on equivalent edge-cut rate, and oblivious
/// against coordinated on cut factor, for every k present in both.
pub fn compare(metrics: &[PartitionMetrics]) -> Vec<Comparison> {
    let mut by_k: BTreeMap<u32, BTreeMap<&'static str, &PartitionMetrics>> = BTreeMap::new();
    for m in metrics {
        by_k.entry(m.k).or_default().entry(m.mode.as_str()).or_insert(m);
    }
    let pairs: [(PartitionMode, PartitionMode, &'static str); 3] = [
        (PartitionMode::Hash, PartitionMode::GreedyOblivious, "equivalent_edge_cut_rate"),
        (PartitionMode::Hash, PartitionMode::GreedyCoordinated, "equivalent_edge_cut_rate"),
        (PartitionMode::GreedyOblivious, PartitionMode::GreedyCoordinated, "cut_factor"),
    ];
    let pick = |m: &PartitionMetrics, metric: &str| match metric {
        "cut_factor" => m.cut_factor,
        _ => m.equivalent_edge_cut_rate,
    };
    let mut out = Vec::new();
    for (k, modes) in by_k {
        for (base, cand, metric) in pairs {
            if let (Some(b), Some(c)) = (modes.get(base.as_str()), modes.get(cand.as_str())) {
                let (bv, cv) = (pick(b, metric), pick(c, metric));
                out.push(Comparison {
                    k,
                    baseline: base,
                    candidate: cand,
                    metric,
                    baseline_value: bv,
                    candidate_value: cv,
                    ratio: if bv > 0.0 { cv / bv } else { f64::NAN },
                });
            }
        }
    }
    out
}

/// Reads a `global_id,value` file. Values are numbers or `inf`.
pub fn read_values(path: &Path) -> Result<BTreeMap<u64, f64>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let bad = |line: usize, what: &str| CliError::Format(format!("{}:{line}: {what}", path.display()));
    let mut out = BTreeMap::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line.trim() != "global_id,value" {
                return Err(bad(1, "expected header `global_id,value`"));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (id, value) = line.split_once(',').ok_or_else(|| bad(i + 1, "expected two fields"))?;
        let id: u64 = id.trim().parse().map_err(|_| bad(i + 1, "bad vertex id"))?;
        let value: f64 = match value.trim() {
            "inf" => f64::INFINITY,
            v => v.parse().map_err(|_| bad(i + 1, "bad value"))?,
        };
        if out.insert(id, value).is_some() {
            return Err(bad(i + 1, "duplicate vertex id"));
        }
    }
    if out.is_empty() && std::fs::metadata(path)?.len() == 0 {
        return Err(bad(1, "empty file"));
    }
    Ok(out)
}

pub fn diff(left: &Path, right: &Path, tolerance: f64) -> Result<Diff, CliError> {
    let (a, b) = (read_values(left)?, read_values(right)?);
    let mut d = Diff {
        left: left.to_path_buf(),
        right: right.to_path_buf(),
        compared: 0,
        mismatches: 0,
        missing: 0,
        max_abs_error: 0.0,
        tolerance,
    };
    for (id, x) in &a {
        let Some(y) = b.get(id) else {
            d.missing += 1;
            continue;
        };
        d.compared += 1;
        if x.is_finite() && y.is_finite() {
            let err = (x - y).abs();
            d.max_abs_error = d.max_abs_error.max(err);
            if err > tolerance {
                d.mismatches += 1;
            }
        } else if x != y {
            d.mismatches += 1;
        }
    }
    d.missing += b.keys().filter(|id| !a.contains_key(id)).count();
    Ok(d)
}

fn table(metrics: &[(PathBuf, PartitionMetrics)]) -> String {
    let header = [
        "file", "mode", "k", "agent_rate", "eq_cut_rate", "cut_factor", "vc_cut_factor", "scatter_share",
        "combiner_share", "balance",
    ];
    let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for (path, m) in metrics {
        rows.push(vec![
            path.display().to_string(),
            m.mode.to_string(),
            m.k.to_string(),
            format!("{:.4}", m.agent_rate),
            format!("{:.4}", m.equivalent_edge_cut_rate),
            format!("{:.4}", m.cut_factor),
            format!("{:.4}", m.vertexcut_cut_factor),
            format!("{:.3}", m.scatter_share),
            format!("{:.3}", m.combiner_share),
            format!("{:.4}{}", m.edge_balance, if m.balance_satisfied { "" } else { " !" }),
        ]);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    rows.iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            format!("{}\n", cells.join("  ").trim_end())
        })
        .collect()
}

pub fn analyze(a: &AnalyzeArgs) -> Result<(), CliError> {
    if a.metrics.is_empty() && a.diff.is_empty() {
        return Err(CliError::Param("nothing to analyze; pass --metrics and/or --diff".into()));
    }
    if a.tolerance.is_nan() || a.tolerance < 0.0 {
        return Err(CliError::Param("--tolerance must be >= 0".into()));
    }
    let metrics = a
        .metrics
        .iter()
        .map(|p| Ok((p.clone(), load_metrics(p)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let only: Vec<PartitionMetrics> = metrics.iter().map(|(_, m)| m.clone()).collect();
    let comparisons = compare(&only);
    let diff = match a.diff.as_slice() {
        [l, r] => Some(diff(l, r, a.tolerance)?),
        _ => None,
    };
    let report = Report {
        metrics,
        comparisons,
        diff,
    };
    match a.format {
        ReportFormat::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        ReportFormat::Text => {
            if !report.metrics.is_empty() {
                print!("{}", table(&report.metrics));
            }
            for c in &report.comparisons {
                println!(
                    "k={} {}: {} {:.4} vs {} {:.4} (ratio {:.3})",
                    c.k, c.metric, c.candidate, c.candidate_value, c.baseline, c.baseline_value, c.ratio
                );
            }
            if let Some(d) = &report.diff {
                println!(
                    "diff {} vs {}: compared {}, mismatches {}, missing {}, max_abs_error {:e}",
                    d.left.display(),
                    d.right.display(),
                    d.compared,
                    d.mismatches,
                    d.missing,
                    d.max_abs_error
                );
            }
        }
    }
    Ok(())
}
