use super::output::Summary;
use super::{regret_available, run_suite, ExperimentConfig};
use crate::coordinator::{Algorithm, DEFAULT_ENUMERATION_CAP};
use crate::surrogate::surrogate_scale;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub algorithm: Algorithm,
    pub final_running_avg_utility: f64,
    pub within_5: Option<f64>,
    pub top5_distance: Option<f64>,
}

/// Rows ordered by final running-average utility, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub horizon: usize,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,name,algorithm,final_running_avg_utility,within_5,top5_distance\n");
        for (k, r) in self.rows.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{:.16e},{},{}",
                k + 1,
                r.name,
                r.algorithm,
                r.final_running_avg_utility,
                r.within_5.map(|v| format!("{v:.16e}")).unwrap_or_default(),
                r.top5_distance.map(|v| format!("{v:.16e}")).unwrap_or_default(),
            );
        }
        out
    }
}

impl fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(4).max(4);
        writeln!(f, "T = {}", self.horizon)?;
        writeln!(f, "{:>4}  {:<w$}  {:<8}  {:>14}  {:>9}  {:>10}", "rank", "name", "algo", "running avg", "within 5", "top-5 dist")?;
        for (k, r) in self.rows.iter().enumerate() {
            let o = |v: Option<f64>| v.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
            writeln!(
                f,
                "{:>4}  {:<w$}  {:<8}  {:>14.6}  {:>9}  {:>10}",
                k + 1,
                r.name,
                r.algorithm.name(),
                r.final_running_avg_utility,
                o(r.within_5),
                o(r.top5_distance)
            )?;
        }
        Ok(())
    }
}

/// Ranks named run summaries; all must share the same horizon.
pub fn compare_report(entries: &[(String, Summary)]) -> Result<ComparisonTable> {
    let Some((_, first)) = entries.first() else {
        return Err(Error::Comparison("no inputs".into()));
    };
    if let Some((name, s)) = entries.iter().find(|(_, s)| s.horizon != first.horizon) {
        return Err(Error::Comparison(format!(
            "`{name}` has T = {}, expected T = {}",
            s.horizon, first.horizon
        )));
    }
    let mut rows: Vec<ComparisonRow> = entries
        .iter()
        .map(|(name, s)| ComparisonRow {
            name: name.clone(),
            algorithm: s.algorithm,
            final_running_avg_utility: s.final_running_avg_utility,
            within_5: s.final_within_5,
            top5_distance: s.final_top5_distance,
        })
        .collect();
    rows.sort_by(|a, b| {
        b.final_running_avg_utility
            .total_cmp(&a.final_running_avg_utility)
            .then_with(|| a.name.cmp(&b.name))
    });
    Ok(ComparisonTable { horizon: first.horizon, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRow {
    pub horizon: usize,
    /// Mean over replicates.
    pub regret: f64,
    pub regret_per_round: f64,
    pub c_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretSuiteReport {
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub beta: f64,
    pub rows: Vec<RegretRow>,
}

impl RegretSuiteReport {
    /// Whether `Reg(T)/T` strictly decreases along the horizon grid.
    pub fn is_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].regret_per_round < w[0].regret_per_round)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("horizon,regret,regret_per_round,c_t,beta\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.horizon, r.regret, r.regret_per_round, r.c_t, self.beta
            );
        }
        out
    }
}

/// Dynamic regret of the configured run at every horizon in `horizons`.
pub fn regret_suite(config: &ExperimentConfig, horizons: &[usize]) -> Result<RegretSuiteReport> {
    let mut rows = Vec::with_capacity(horizons.len());
    let mut beta = 0.0;
    for &t in horizons {
        let mut cfg = config.clone();
        cfg.experiment.horizon = t;
        cfg.validate()?;
        let ground = super::build_environment(&cfg, cfg.experiment.seed)?.ground_set().clone();
        if !regret_available(&ground) {
            return Err(Error::Capability {
                what: "regret suite",
                size: ground.n(),
                limit: DEFAULT_ENUMERATION_CAP,
            });
        }
        let suite = run_suite(&cfg)?;
        let k = suite.replicates.len() as f64;
        let regret = suite
            .replicates
            .iter()
            .map(|r| r.series.final_row().and_then(|f| f.regret).unwrap_or(0.0))
            .sum::<f64>()
            / k;
        let c_t = suite.replicates.iter().map(|r| r.c_t.unwrap_or(0.0)).sum::<f64>() / k;
        beta = suite.replicates.first().map_or(0.0, |r| r.theory.beta);
        rows.push(RegretRow {
            horizon: t,
            regret,
            regret_per_round: regret / t as f64,
            c_t,
        });
    }
    Ok(RegretSuiteReport {
        algorithm: config.experiment.algorithm,
        alpha: surrogate_scale(config.coordinator.curvature),
        beta,
        rows,
    })
}
