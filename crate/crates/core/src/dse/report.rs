use serde::{Deserialize, Serialize};

use super::run::{RankEntry, SweepResult};
use super::DseError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub point: String,
    pub workload: String,
    /// K; `None` for failed points.
    pub max: Option<f64>,
    /// `max` minus the baseline's `max` under the same workload, K.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub baseline: String,
    pub rows: Vec<ComparisonRow>,
    pub ranking: Vec<RankEntry>,
    /// Failed points with their diagnostics.
    pub errors: Vec<(String, String)>,
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

impl ComparisonReport {
    /// Tab-separated table `point workload max_K delta_K`, then a ranking
    /// block and, when points failed, an error block.
    pub fn to_tsv(&self) -> String {
        let mut s = format!("# baseline {}\npoint\tworkload\tmax_K\tdelta_K\n", self.baseline);
        for r in &self.rows {
            s.push_str(&format!("{}\t{}\t{}\t{}\n", r.point, r.workload, num(r.max), num(r.delta)));
        }
        s.push_str("\n# ranking\nrank\tpoint\tworst_K\tmean_K\n");
        for e in &self.ranking {
            s.push_str(&format!("{}\t{}\t{}\t{}\n", e.rank, e.point, num(Some(e.worst)), num(Some(e.mean))));
        }
        if !self.errors.is_empty() {
            s.push_str("\n# errors\npoint\tdetail\n");
            for (p, e) in &self.errors {
                s.push_str(&format!("{p}\t{e}\n"));
            }
        }
        s
    }

    /// Column-aligned rendering of the same values.
    pub fn to_text(&self) -> String {
        let table = |header: [&str; 4], rows: Vec<[String; 4]>| {
            let mut widths = header.map(str::len);
            for r in &rows {
                for (w, c) in widths.iter_mut().zip(r) {
                    *w = (*w).max(c.len());
                }
            }
            let line = |cells: [&str; 4]| {
                format!(
                    "{:<w0$}  {:<w1$}  {:>w2$}  {:>w3$}\n",
                    cells[0],
                    cells[1],
                    cells[2],
                    cells[3],
                    w0 = widths[0],
                    w1 = widths[1],
                    w2 = widths[2],
                    w3 = widths[3]
                )
            };
            let mut out = line(header);
            for r in &rows {
                out.push_str(&line([&r[0], &r[1], &r[2], &r[3]]));
            }
            out
        };
        let mut s = format!("Stack maximum temperature vs baseline '{}'\n\n", self.baseline);
        s.push_str(&table(
            ["point", "workload", "max [K]", "delta [K]"],
            self.rows.iter().map(|r| [r.point.clone(), r.workload.clone(), num(r.max), num(r.delta)]).collect(),
        ));
        s.push_str("\nRanking (worst case over workloads)\n\n");
        s.push_str(&table(
            ["rank", "point", "worst [K]", "mean [K]"],
            self.ranking
                .iter()
                .map(|e| [e.rank.to_string(), e.point.clone(), num(Some(e.worst)), num(Some(e.mean))])
                .collect(),
        ));
        if !self.errors.is_empty() {
            s.push_str("\nFailed points\n\n");
            for (p, e) in &self.errors {
                s.push_str(&format!("{p}: {e}\n"));
            }
        }
        s
    }
}

pub fn compare_report(result: &SweepResult, baseline: &str) -> Result<ComparisonReport, DseError> {
    let base = result.point(baseline).ok_or_else(|| DseError::UnknownBaseline(baseline.to_string()))?;
    let mut rows = Vec::new();
    for (w, workload) in result.workloads.iter().enumerate() {
        let reference = base.workloads.get(w).map(|r| r.stack_max);
        for p in &result.points {
            let max = p.workloads.get(w).map(|r| r.stack_max);
            let delta = max.zip(reference).map(|(m, b)| m - b);
            rows.push(ComparisonRow { point: p.point.name.clone(), workload: workload.clone(), max, delta });
        }
    }
    Ok(ComparisonReport {
        baseline: baseline.to_string(),
        rows,
        ranking: result.ranking.clone(),
        errors: result.failed().map(|p| (p.point.name.clone(), p.error.clone().unwrap_or_default())).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dse::run::{rank, PointResult, WorkloadResult};
    use crate::dse::{CoolingVariant, DesignPoint};

    fn result() -> SweepResult {
        let mk = |name: &str, maxes: &[f64]| PointResult {
            point: DesignPoint::new(name, "base", CoolingVariant::None),
            workloads: maxes
                .iter()
                .enumerate()
                .map(|(i, &m)| WorkloadResult { workload: format!("w{i}"), stack_max: m, layer_max: vec![m], runtime: 0.1 })
                .collect(),
            error: None,
        };
        let mut points = vec![mk("baseline", &[350.125, 340.5]), mk("case1b", &[341.0, 338.25])];
        points.push(PointResult { error: Some("cooling position 9 is beyond".into()), ..mk("broken", &[]) });
        SweepResult { workloads: vec!["w0".into(), "w1".into()], ranking: rank(&points), points }
    }

    #[test]
    fn baseline_deltas_are_zero() {
        let r = compare_report(&result(), "baseline").unwrap();
        assert_eq!(r.rows.len(), 6);
        for row in r.rows.iter().filter(|x| x.point == "baseline") {
            assert_eq!(row.delta, Some(0.0));
        }
        assert_eq!(r.rows[1].delta, Some(341.0 - 350.125));
        assert_eq!(r.rows[2].max, None);
        assert_eq!(r.errors.len(), 1);
    }

    #[test]
    fn missing_baseline() {
        assert_eq!(compare_report(&result(), "nope"), Err(DseError::UnknownBaseline("nope".into())));
    }

    #[test]
    fn renderings_agree() {
        let r = compare_report(&result(), "baseline").unwrap();
        let tsv = r.to_tsv();
        let text = r.to_text();
        let table: Vec<Vec<&str>> = tsv
            .lines()
            .skip(2)
            .take_while(|l| !l.is_empty())
            .map(|l| l.split('\t').collect())
            .collect();
        assert_eq!(table.len(), 6);
        for row in &table {
            let found = text
                .lines()
                .any(|l| l.split_whitespace().collect::<Vec<_>>() == *row);
            assert!(found, "{row:?} missing from\n{text}");
        }
        assert!(tsv.contains("1\tcase1b\t341.0000\t339.6250\n"));
    }
}
