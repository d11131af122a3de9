//! The disabled-leg scenario battery: every committed scenario learned
//! several times, summarised one row per scenario.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::{derive_seed, learn, mean_sd, Evaluator, LearnerConfig, LearningTrace, Periods};
use crate::legs::{parse_legs, LegId, Morphology};
use crate::plant::{disabled_label, PlantConfig, Scenario};
use crate::STEP_HZ;

const HEXAPOD_SCENARIOS: &str = include_str!("../data/hexapod_scenarios.txt");
const QUADRUPED_SCENARIOS: &str = include_str!("../data/quadruped_scenarios.txt");

pub const DEFAULT_REPEATS: usize = 10;

/// Committed disabled-leg sets, in file order.
pub fn scenario_list(morphology: Morphology) -> Vec<BTreeSet<LegId>> {
    let text = match morphology {
        Morphology::Hexapod => HEXAPOD_SCENARIOS,
        Morphology::Quadruped => QUADRUPED_SCENARIOS,
    };
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| parse_legs(l).expect("committed scenario list parses").into_iter().collect())
        .collect()
}

/// Real-robot seconds needed to try `trials` combinations at `window` steps each.
pub fn estimate_walltime(trials: usize, window: usize) -> f64 {
    trials as f64 * window as f64 / STEP_HZ
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryRow {
    pub disabled: BTreeSet<LegId>,
    pub functional: Vec<LegId>,
    /// Controllers available to the whole body, `5^legs`.
    pub controller_space: usize,
    /// Combinations the learner can reach with the disabled legs fixed.
    pub search_space: usize,
    /// Final combination of the first converged repeat, or of the repeat
    /// that ended closest to zero when none converged.
    pub learned: Periods,
    pub final_deviation: f64,
    pub converged: usize,
    pub repeats: usize,
    pub mean_trials: f64,
    pub sd_trials: f64,
    /// Some repeat failed to converge.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub morphology: Morphology,
    pub beta: f64,
    pub e_req: f64,
    pub seed: u64,
    pub repeats: usize,
    pub note: String,
    pub rows: Vec<BatteryRow>,
}

impl BatteryReport {
    /// CSV table; `window` converts mean trials into projected robot time.
    pub fn to_csv(&self, window: usize) -> String {
        let mut out = String::from("disabled,functional");
        for leg in self.morphology.legs() {
            let _ = write!(out, ",{leg}");
        }
        out.push_str(",final_deviation,converged,repeats,mean_trials,sd_trials,walltime_s,search_space,flagged\n");
        for r in &self.rows {
            let functional: Vec<String> = r.functional.iter().map(LegId::to_string).collect();
            let _ = write!(out, "{},{}", disabled_label(&r.disabled), functional.join("+"));
            for leg in self.morphology.legs() {
                match r.learned.get(leg) {
                    Some(p) => {
                        let _ = write!(out, ",{p}");
                    }
                    None => out.push_str(",x"),
                }
            }
            let _ = writeln!(
                out,
                ",{},{},{},{},{},{},{},{}",
                r.final_deviation,
                r.converged,
                r.repeats,
                r.mean_trials,
                r.sd_trials,
                r.mean_trials * estimate_walltime(1, window),
                r.search_space,
                r.flagged
            );
        }
        out
    }
}

/// Learns every committed scenario `repeats` times. Repeat `r` of scenario
/// `i` uses seed `derive_seed(derive_seed(cfg.seed, i), r)`.
pub fn run_battery<E: Evaluator + Sync + ?Sized>(
    evaluator: &E,
    morphology: Morphology,
    cfg: &LearnerConfig,
    repeats: usize,
) -> Result<BatteryReport> {
    cfg.validate()?;
    if repeats < 1 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    let scenarios = scenario_list(morphology);
    let jobs: Vec<(usize, usize)> = (0..scenarios.len()).flat_map(|i| (0..repeats).map(move |r| (i, r))).collect();
    let traces = jobs
        .par_iter()
        .map(|&(i, r)| {
            let disabled: Vec<LegId> = scenarios[i].iter().copied().collect();
            let scenario = Scenario::uniform(morphology, &disabled, 4)?;
            let c = LearnerConfig { seed: derive_seed(derive_seed(cfg.seed, i as u64), r as u64), ..cfg.clone() };
            learn(evaluator, &scenario, &c)
        })
        .collect::<Result<Vec<LearningTrace>>>()?;

    let rows = scenarios
        .iter()
        .zip(traces.chunks(repeats))
        .map(|(disabled, runs)| summarise(morphology, disabled, runs))
        .collect();
    Ok(BatteryReport {
        morphology,
        beta: cfg.beta,
        e_req: cfg.e_req,
        seed: cfg.seed,
        repeats,
        note: "scenario list is a symmetry-reduced reconstruction".into(),
        rows,
    })
}

fn summarise(morphology: Morphology, disabled: &BTreeSet<LegId>, runs: &[LearningTrace]) -> BatteryRow {
    let best = runs.iter().find(|t| t.converged()).unwrap_or_else(|| {
        runs.iter()
            .min_by(|a, b| a.final_deviation.abs().total_cmp(&b.final_deviation.abs()))
            .expect("at least one repeat")
    });
    let trials: Vec<f64> = runs.iter().map(|t| t.evaluations as f64).collect();
    let (mean_trials, sd_trials) = mean_sd(&trials);
    let converged = runs.iter().filter(|t| t.converged()).count();
    let functional: Vec<LegId> = morphology.legs().iter().filter(|l| !disabled.contains(l)).copied().collect();
    BatteryRow {
        disabled: disabled.clone(),
        controller_space: PlantConfig::space_size(morphology.legs().len()),
        search_space: PlantConfig::space_size(functional.len()),
        functional,
        learned: best.final_periods.clone(),
        final_deviation: best.final_deviation,
        converged,
        repeats: runs.len(),
        mean_trials,
        sd_trials,
        flagged: converged < runs.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walltime() {
        assert!((estimate_walltime(1, 400) - 14.8).abs() < 0.05);
        assert_eq!(estimate_walltime(0, 400), 0.0);
    }

    #[test]
    fn lists_parse() {
        assert_eq!(scenario_list(Morphology::Hexapod).len(), 21);
        assert_eq!(scenario_list(Morphology::Quadruped).len(), 4);
    }
}
