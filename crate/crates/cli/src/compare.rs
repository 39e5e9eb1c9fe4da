//! Ranking of policies from summary rows.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use anyhow::{bail, Result};

use crate::config::UsageError;
use crate::experiment::SummaryRow;

#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub instance_id: String,
    pub policy: String,
    pub runs: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
    /// `(mean − mean_gass) / mean_gass` in percent; `None` without gass rows.
    pub gap_pct: Option<f64>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per (instance, policy) statistics, sorted by instance and then by
/// ascending mean. Every policy must cover the same instances with at least
/// two rows each.
pub fn compare(rows: &[SummaryRow]) -> Result<Vec<Ranking>> {
    let mut groups: BTreeMap<&str, BTreeMap<&str, Vec<f64>>> = BTreeMap::new();
    for row in rows {
        groups
            .entry(row.policy.as_str())
            .or_default()
            .entry(row.instance_id.as_str())
            .or_default()
            .push(row.objective_ms);
    }
    if groups.is_empty() {
        bail!(UsageError("no summary rows to compare".into()));
    }

    let mut reference: Option<(&str, BTreeSet<&str>)> = None;
    for (policy, by_instance) in &groups {
        let ids: BTreeSet<&str> = by_instance.keys().copied().collect();
        match &reference {
            None => reference = Some((policy, ids)),
            Some((first, expected)) if *expected != ids => {
                bail!(UsageError(format!(
                    "policies {first} and {policy} were run on different instances ({expected:?} vs {ids:?})"
                )));
            }
            Some(_) => {}
        }
        for (id, v) in by_instance {
            if v.len() < 2 {
                bail!(UsageError(format!("policy {policy} has {} row(s) on {id}; need at least 2", v.len())));
            }
        }
    }

    let instances = reference.expect("non-empty").1;
    let mut out = Vec::new();
    for id in instances {
        let mut block: Vec<Ranking> = groups
            .iter()
            .map(|(policy, by_instance)| {
                let v = &by_instance[id];
                let (mean_ms, std_ms) = mean_std(v);
                Ranking {
                    instance_id: id.to_string(),
                    policy: policy.to_string(),
                    runs: v.len(),
                    mean_ms,
                    std_ms,
                    gap_pct: None,
                }
            })
            .collect();
        if let Some(base) = block.iter().find(|r| r.policy == "gass").map(|r| r.mean_ms) {
            for r in &mut block {
                r.gap_pct = Some((r.mean_ms - base) / base * 100.0);
            }
        }
        block.sort_by(|a, b| a.mean_ms.total_cmp(&b.mean_ms).then_with(|| a.policy.cmp(&b.policy)));
        out.extend(block);
    }
    Ok(out)
}

pub fn write_rankings<W: Write>(rankings: &[Ranking], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["instance_id", "policy", "runs", "mean_ms", "std_ms", "gap_vs_gass_pct"])?;
    for r in rankings {
        w.write_record([
            r.instance_id.clone(),
            r.policy.clone(),
            r.runs.to_string(),
            format!("{:.4}", r.mean_ms),
            format!("{:.4}", r.std_ms),
            r.gap_pct.map_or_else(String::new, |g| format!("{g:+.2}")),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(instance: &str, policy: &str, seed: u64, v: f64) -> SummaryRow {
        SummaryRow {
            instance_id: instance.into(),
            policy: policy.into(),
            seed,
            objective_ms: v,
            eval_r: 10,
            wall_ms: None,
            config_hash: String::new(),
        }
    }

    #[test]
    fn identical_summaries_have_zero_gap() {
        let rows: Vec<_> = ["gass", "gp2", "rp1"]
            .iter()
            .flat_map(|p| [row("a", p, 0, 50.0), row("a", p, 1, 70.0)])
            .collect();
        for r in compare(&rows).unwrap() {
            assert_eq!(r.gap_pct, Some(0.0));
            assert_eq!((r.mean_ms, r.runs), (60.0, 2));
            assert!((r.std_ms - 200f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn gap_and_order() {
        let rows = vec![
            row("a", "rp1", 0, 300.0),
            row("a", "rp1", 1, 300.0),
            row("a", "gp2", 0, 116.2),
            row("a", "gp2", 1, 116.2),
            row("a", "gass", 0, 100.0),
            row("a", "gass", 1, 100.0),
        ];
        let out = compare(&rows).unwrap();
        let names: Vec<_> = out.iter().map(|r| r.policy.as_str()).collect();
        assert_eq!(names, ["gass", "gp2", "rp1"]);
        assert!((out[1].gap_pct.unwrap() - 16.2).abs() < 1e-9);
        assert!((out[2].gap_pct.unwrap() - 200.0).abs() < 1e-9);
    }

    #[test]
    fn mismatched_instances_rejected() {
        let rows = vec![
            row("a", "gass", 0, 1.0),
            row("a", "gass", 1, 1.0),
            row("b", "gp2", 0, 1.0),
            row("b", "gp2", 1, 1.0),
        ];
        let err = compare(&rows).unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
    }

    #[test]
    fn single_row_rejected() {
        assert!(compare(&[row("a", "gass", 0, 1.0)]).is_err());
    }
}
