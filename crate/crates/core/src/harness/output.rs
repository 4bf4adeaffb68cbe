use super::{AggregateRow, ExperimentConfig, MetricSeries, ReplicateResult, ScenarioSpec};
use crate::coordinator::{Algorithm, TheoryConstants};
use crate::tracking::{D_FLOOR, ESCAPE_HEADINGS, NEAR_RANGE, TOP_K};
use crate::Result;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const METRICS_HEADER: &str = "t,utility,running_avg_utility,within_5,top5_distance,consensus_error,regret";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt<T>(x: Option<T>, f: impl Fn(T) -> String) -> String {
    x.map(f).unwrap_or_default()
}

/// Per-round metrics as CSV; unavailable cells are left empty.
pub fn metrics_csv(series: &MetricSeries) -> String {
    let mut out = String::with_capacity(series.rows.len() * 128);
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for r in &series.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.t,
            num(r.utility),
            num(r.running_avg_utility),
            opt(r.within_5, |w| w.to_string()),
            opt(r.top5_distance, num),
            num(r.consensus_error),
            opt(r.regret, num),
        );
    }
    out
}

fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(
        "t,utility_mean,utility_std,running_avg_utility_mean,running_avg_utility_std,within_5_mean,within_5_std,top5_distance_mean,top5_distance_std,consensus_error_mean,consensus_error_std,regret_mean,regret_std\n",
    );
    let pair = |p: Option<(f64, f64)>| match p {
        Some((m, s)) => format!("{},{}", num(m), num(s)),
        None => ",".to_string(),
    };
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.t,
            pair(Some(r.utility)),
            pair(Some(r.running_avg_utility)),
            pair(r.within_5),
            pair(r.top5_distance),
            pair(Some(r.consensus_error)),
            pair(r.regret),
        );
    }
    out
}

fn rounds_jsonl(rep: &ReplicateResult) -> Result<String> {
    let mut out = String::new();
    for o in &rep.outcomes {
        for (i, a) in o.agents.iter().enumerate() {
            let line = json!({
                "t": o.t,
                "agent": i,
                "action": a.action,
                "z": a.z,
                "grad_norm": a.grad_norm,
                "consensus_error": a.consensus_error,
                "utility": o.utility,
            });
            out.push_str(&serde_json::to_string(&line)?);
            out.push('\n');
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub replicate: usize,
    pub seed: u64,
    pub final_running_avg_utility: f64,
    pub final_within_5: Option<usize>,
    pub final_top5_distance: Option<f64>,
    pub regret: Option<f64>,
    pub c_t: Option<f64>,
    pub eta: f64,
    pub gamma: Option<f64>,
    pub theory: TheoryConstants,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub algorithm: Algorithm,
    pub horizon: usize,
    pub replicates: Vec<ReplicateSummary>,
    /// Final-round means across replicates.
    pub final_running_avg_utility: f64,
    pub final_running_avg_utility_std: f64,
    pub final_within_5: Option<f64>,
    pub final_top5_distance: Option<f64>,
}

fn summary(config: &ExperimentConfig, replicates: &[ReplicateResult], agg: &[AggregateRow]) -> Summary {
    let last = agg.last();
    Summary {
        algorithm: config.experiment.algorithm,
        horizon: config.experiment.horizon,
        replicates: replicates
            .iter()
            .map(|r| {
                let f = r.series.final_row();
                ReplicateSummary {
                    replicate: r.replicate,
                    seed: r.seed,
                    final_running_avg_utility: f.map_or(0.0, |f| f.running_avg_utility),
                    final_within_5: f.and_then(|f| f.within_5),
                    final_top5_distance: f.and_then(|f| f.top5_distance),
                    regret: f.and_then(|f| f.regret),
                    c_t: r.c_t,
                    eta: r.eta,
                    gamma: r.gamma,
                    theory: r.theory.clone(),
                }
            })
            .collect(),
        final_running_avg_utility: last.map_or(0.0, |r| r.running_avg_utility.0),
        final_running_avg_utility_std: last.map_or(0.0, |r| r.running_avg_utility.1),
        final_within_5: last.and_then(|r| r.within_5.map(|p| p.0)),
        final_top5_distance: last.and_then(|r| r.top5_distance.map(|p| p.0)),
    }
}

fn metadata(config: &ExperimentConfig, replicates: &[ReplicateResult]) -> serde_json::Value {
    let mut decisions = json!({
        "seeds": "replicate r uses seed + r; the environment, graph and algorithm streams are derived from it separately, so every algorithm sees the same objective stream",
        "action_sampling": "each agent samples its action from its belief before aggregating",
        "gradient_scope": "own block only",
        "optimum_tie_breaking": "lexicographically smallest tuple; per agent, actions ascending then the empty choice; only strict improvements replace the incumbent",
        "regret": "cumulative alpha*f_t(A*_t) - f_t(played), alpha = (1-e^-c)/c; empty when the optimum oracle exceeds the enumeration cap",
        "osg": "greedy on the previous round's objective in agent-index order, uniform random actions in round 1, ties to the smallest action index",
        "aggregate_std": "sample standard deviation across replicates, 0 for a single replicate",
        "float_format": "17 significant digits",
    });
    if let ScenarioSpec::Tracking { total_seconds, .. } = &config.scenario {
        let extra = json!({
            "round_order": "targets move, objective revealed, agents move",
            "d_floor": D_FLOOR,
            "dt": total_seconds / config.experiment.horizon as f64,
            "adversarial_heading_grid": ESCAPE_HEADINGS,
            "target_mix_rounding": "largest remainder, ties to random then adversarial",
            "target_order": "random targets first, then adversarial, then polyline",
            "within_5": format!("targets whose nearest agent is within {NEAR_RANGE} units"),
            "top5_distance": format!("mean of the {TOP_K} smallest target-to-nearest-agent distances (all targets when fewer)"),
            "sensing": "global distances, no sensing cutoff",
        });
        if let (Some(d), Some(e)) = (decisions.as_object_mut(), extra.as_object()) {
            d.extend(e.clone());
        }
    }
    json!({
        "package": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "parallel_feature": cfg!(feature = "parallel"),
        "config": config,
        "resolved": {
            "geometry": config.geometry(),
            "gamma": config.gamma(),
            "seeds": replicates.iter().map(|r| r.seed).collect::<Vec<_>>(),
            "eta": replicates.first().map(|r| r.eta),
            "beta": replicates.iter().map(|r| r.theory.beta).collect::<Vec<_>>(),
        },
        "decisions": decisions,
    })
}

/// Writes `rep-{r}/metrics.csv` (plus `rounds.jsonl` and `world-trace.csv`
/// when enabled), `aggregate.csv`, `summary.json` and `metadata.json`.
pub fn write_suite(config: &ExperimentConfig, replicates: &[ReplicateResult], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for rep in replicates {
        let rd = dir.join(format!("rep-{}", rep.replicate));
        fs::create_dir_all(&rd)?;
        fs::write(rd.join("metrics.csv"), metrics_csv(&rep.series))?;
        if config.output.rounds_jsonl {
            fs::write(rd.join("rounds.jsonl"), rounds_jsonl(rep)?)?;
        }
        if let Some(trace) = &rep.world_trace {
            fs::write(rd.join("world-trace.csv"), trace)?;
        }
    }
    let agg = super::aggregate(replicates);
    fs::write(dir.join("aggregate.csv"), aggregate_csv(&agg))?;
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary(config, replicates, &agg))?,
    )?;
    fs::write(
        dir.join("metadata.json"),
        serde_json::to_string_pretty(&metadata(config, replicates))?,
    )?;
    Ok(())
}

pub fn read_summary(dir: &Path) -> Result<Summary> {
    let text = fs::read_to_string(dir.join("summary.json"))?;
    Ok(serde_json::from_str(&text)?)
}
