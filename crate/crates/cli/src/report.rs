//! Aggregation of persisted traces into summary tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::runner::{fmt_float, summarize, CliError, SolverSummary};

struct ParsedRow {
    trial: usize,
    solver: String,
    epoch: f64,
    objective: f64,
    metric: Option<f64>,
}

fn parse_traces(path: &Path) -> Result<Vec<ParsedRow>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    let mut lines = text.lines();
    match lines.next() {
        Some("trial,solver,epoch,seconds,objective,metric") => {}
        _ => {
            return Err(CliError::Config(format!(
                "{}: missing or unexpected header",
                path.display()
            )))
        }
    }
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(CliError::Config(format!(
                "{}:{}: expected 6 fields, got {}",
                path.display(),
                i + 2,
                fields.len()
            )));
        }
        let bad = |what: &str| {
            CliError::Config(format!("{}:{}: bad {what}", path.display(), i + 2))
        };
        rows.push(ParsedRow {
            trial: fields[0].parse().map_err(|_| bad("trial"))?,
            solver: fields[1].to_string(),
            epoch: fields[2].parse().map_err(|_| bad("epoch"))?,
            objective: fields[4].parse().map_err(|_| bad("objective"))?,
            metric: if fields[5].is_empty() {
                None
            } else {
                Some(fields[5].parse().map_err(|_| bad("metric"))?)
            },
        });
    }
    if rows.is_empty() {
        return Err(CliError::Config(format!("{}: no completed trials", path.display())));
    }
    Ok(rows)
}

/// Final metric (or objective) per (solver, trial) from a trace file, then
/// per-solver aggregates, in first-appearance order of the solvers.
fn aggregate(rows: &[ParsedRow]) -> Vec<SolverSummary> {
    let mut order: Vec<String> = Vec::new();
    let mut finals: BTreeMap<(String, usize), (f64, f64, Option<f64>)> = BTreeMap::new();
    for row in rows {
        if !order.contains(&row.solver) {
            order.push(row.solver.clone());
        }
        let key = (row.solver.clone(), row.trial);
        let entry = finals.entry(key).or_insert((f64::NEG_INFINITY, f64::NAN, None));
        if row.epoch >= entry.0 {
            *entry = (row.epoch, row.objective, row.metric);
        }
    }
    order
        .iter()
        .map(|name| {
            let values: Vec<f64> = finals
                .iter()
                .filter(|((s, _), _)| s == name)
                .map(|(_, (_, obj, metric))| metric.unwrap_or(*obj))
                .collect();
            summarize(name, &values)
        })
        .collect()
}

/// One row per prefix, one column per solver, cells holding the mean final
/// metric; machine-readable when `csv` is set.
pub fn report(prefixes: &[PathBuf], csv: bool) -> Result<String, CliError> {
    if prefixes.is_empty() {
        return Err(CliError::Config("report needs at least one output prefix".into()));
    }
    let mut per_prefix = Vec::new();
    let mut solver_order: Vec<String> = Vec::new();
    for prefix in prefixes {
        let mut path = prefix.clone();
        let mut name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
        name.push("_traces.csv");
        path.set_file_name(name);
        let rows = parse_traces(&path)?;
        let summaries = aggregate(&rows);
        for s in &summaries {
            if !solver_order.contains(&s.name) {
                solver_order.push(s.name.clone());
            }
        }
        per_prefix.push((prefix.display().to_string(), summaries));
    }

    let mut out = String::new();
    if csv {
        out.push_str("experiment");
        for s in &solver_order {
            out.push(',');
            out.push_str(s);
        }
        out.push('\n');
        for (label, summaries) in &per_prefix {
            out.push_str(label);
            for solver in &solver_order {
                out.push(',');
                if let Some(s) = summaries.iter().find(|s| &s.name == solver) {
                    out.push_str(&fmt_float(s.mean));
                }
            }
            out.push('\n');
        }
    } else {
        let label_width =
            per_prefix.iter().map(|(l, _)| l.len()).max().unwrap_or(10).max("experiment".len());
        out.push_str(&format!("{:<label_width$}", "experiment"));
        for s in &solver_order {
            out.push_str(&format!("  {s:>16}"));
        }
        out.push('\n');
        for (label, summaries) in &per_prefix {
            out.push_str(&format!("{label:<label_width$}"));
            for solver in &solver_order {
                match summaries.iter().find(|s| &s.name == solver) {
                    Some(s) if s.trials > 1 => {
                        out.push_str(&format!("  {:>16}", format!("{:.3e}±{:.1e}", s.mean, s.std)))
                    }
                    Some(s) => out.push_str(&format!("  {:>16}", format!("{:.3e}", s.mean))),
                    None => out.push_str(&format!("  {:>16}", "-")),
                }
            }
            out.push('\n');
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregates_final_records() {
        let rows = vec![
            ParsedRow { trial: 0, solver: "a".into(), epoch: 0.0, objective: 9.0, metric: None },
            ParsedRow { trial: 0, solver: "a".into(), epoch: 1.0, objective: 1.0, metric: None },
            ParsedRow { trial: 1, solver: "a".into(), epoch: 1.0, objective: 3.0, metric: None },
        ];
        let summaries = aggregate(&rows);
        assert_eq!(summaries.len(), 1);
        assert_eq!(summaries[0].mean, 2.0);
        assert!((summaries[0].std - std::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn metric_column_wins_over_objective() {
        let rows = vec![ParsedRow {
            trial: 0,
            solver: "a".into(),
            epoch: 1.0,
            objective: 5.0,
            metric: Some(0.25),
        }];
        assert_eq!(aggregate(&rows)[0].mean, 0.25);
    }
}
