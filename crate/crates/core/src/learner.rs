//! Simulated annealing over per-leg period combinations.
//!
//! Starting from every functional leg at period 4, each trial changes one
//! leg's period, evaluates the heading drift and keeps the change when it
//! helps, or with probability `exp(−β ΔE)` when it does not. Rejected trials
//! roll back to the last kept combination. No combination is evaluated twice
//! in one run.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::legs::{LegId, Morphology};
use crate::plant::{simulate_window, PlantConfig, Scenario};
use crate::SEARCH_PERIODS;

pub type Periods = BTreeMap<LegId, u32>;

/// Signed heading drift of a scenario, in degrees.
pub trait Evaluator {
    fn evaluate(&self, scenario: &Scenario, seed: u64) -> Result<f64>;
}

impl Evaluator for PlantConfig {
    fn evaluate(&self, scenario: &Scenario, seed: u64) -> Result<f64> {
        simulate_window(self, scenario, seed).map(|s| s.delta_phi)
    }
}

impl<F> Evaluator for F
where
    F: Fn(&Scenario, u64) -> Result<f64>,
{
    fn evaluate(&self, scenario: &Scenario, seed: u64) -> Result<f64> {
        self(scenario, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    /// Annealing factor. 0 accepts everything; `f64::INFINITY` is strict greedy.
    pub beta: f64,
    /// Required deviation magnitude in degrees.
    pub e_req: f64,
    /// Cap on plant evaluations, the initial one included.
    pub max_trials: usize,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig { beta: 0.5, e_req: 8.0, max_trials: 200, seed: 0 }
    }
}

impl LearnerConfig {
    /// The finite stand-in for greedy search.
    pub const GREEDY_BETA: f64 = 10.0;

    pub fn validate(&self) -> Result<()> {
        if self.beta.is_nan() || self.beta < 0.0 {
            return Err(Error::InvalidConfig(format!("beta must be >= 0, got {}", self.beta)));
        }
        if !(self.e_req.is_finite() && self.e_req > 0.0) {
            return Err(Error::InvalidConfig(format!("e_req must be positive, got {}", self.e_req)));
        }
        if self.max_trials < 1 {
            return Err(Error::InvalidConfig("max_trials must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Kept,
    AcceptedWorse,
    Aborted,
    DuplicateSkipped,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Kept => "kept",
            Decision::AcceptedWorse => "accepted-worse",
            Decision::Aborted => "aborted",
            Decision::DuplicateSkipped => "duplicate-skipped",
        }
    }

    /// Whether the combination became the working one.
    pub fn is_kept(self) -> bool {
        matches!(self, Decision::Kept | Decision::AcceptedWorse)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Index of the evaluated trial. A skipped duplicate shares the index
    /// of the trial that follows it.
    pub n: usize,
    pub periods: Periods,
    /// Signed Δφ; `None` for skipped duplicates.
    pub deviation: Option<f64>,
    pub decision: Decision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Converged,
    TrialCapReached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningTrace {
    pub disabled: BTreeSet<LegId>,
    pub initial: Periods,
    pub records: Vec<TrialRecord>,
    pub outcome: Outcome,
    /// Set when the run stopped because no unvisited proposal was reachable.
    pub exhausted: bool,
    pub evaluations: usize,
    pub seed: u64,
    /// Working combination at the end of the run and its signed deviation.
    pub final_periods: Periods,
    pub final_deviation: f64,
}

impl LearningTrace {
    pub fn converged(&self) -> bool {
        self.outcome == Outcome::Converged
    }

    pub fn evaluated(&self) -> impl Iterator<Item = &TrialRecord> {
        self.records.iter().filter(|r| r.deviation.is_some())
    }

    /// One row per record: trial, a period column per leg (`x` for a
    /// disabled leg), deviation, decision.
    pub fn to_csv(&self, morphology: Morphology) -> String {
        let mut out = String::from("trial");
        for leg in morphology.legs() {
            let _ = write!(out, ",{leg}");
        }
        out.push_str(",deviation,decision,seed\n");
        for r in &self.records {
            let _ = write!(out, "{}", r.n);
            for leg in morphology.legs() {
                match r.periods.get(leg) {
                    Some(p) => {
                        let _ = write!(out, ",{p}");
                    }
                    None => out.push_str(",x"),
                }
            }
            match r.deviation {
                Some(d) => {
                    let _ = write!(out, ",{d}");
                }
                None => out.push(','),
            }
            let _ = writeln!(out, ",{},{}", r.decision.as_str(), self.seed);
        }
        out
    }
}

/// Mixes a base seed with an index into an independent stream seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn accept(delta_e: f64, beta: f64, x: f64) -> bool {
    if delta_e < 0.0 {
        return true;
    }
    if beta.is_infinite() {
        return false;
    }
    x <= (-beta * delta_e).exp()
}

/// Draws a one-leg change of `current` that is not in `history`.
pub fn propose<R: Rng + ?Sized>(
    current: &Periods,
    history: &HashSet<Periods>,
    functional: &[LegId],
    rng: &mut R,
) -> Result<Periods> {
    draw(current, history, functional, rng, |_| {})
}

fn draw<R: Rng + ?Sized>(
    current: &Periods,
    history: &HashSet<Periods>,
    functional: &[LegId],
    rng: &mut R,
    mut on_duplicate: impl FnMut(&Periods),
) -> Result<Periods> {
    if functional.is_empty() {
        return Err(Error::InvalidArgument("no functional leg to re-time".into()));
    }
    if functional.iter().any(|l| !current.contains_key(l)) {
        return Err(Error::InvalidArgument("current combination lacks a functional leg".into()));
    }
    let space = PlantConfig::space_size(functional.len());
    if history.len() >= space {
        return Err(Error::Exhausted { space });
    }
    let open = functional.iter().any(|&leg| {
        SEARCH_PERIODS.iter().any(|&p| {
            let mut c = current.clone();
            c.insert(leg, p);
            !history.contains(&c)
        })
    });
    if !open {
        return Err(Error::NeighbourhoodExhausted);
    }
    loop {
        let leg = functional[rng.random_range(0..functional.len())];
        let p = SEARCH_PERIODS[rng.random_range(0..SEARCH_PERIODS.len())];
        let mut c = current.clone();
        c.insert(leg, p);
        if !history.contains(&c) {
            return Ok(c);
        }
        on_duplicate(&c);
    }
}

/// Runs one learning session on `scenario`'s functional legs. The periods
/// already stored in the scenario are ignored; every functional leg starts at 4.
pub fn learn<E: Evaluator + ?Sized>(evaluator: &E, scenario: &Scenario, cfg: &LearnerConfig) -> Result<LearningTrace> {
    cfg.validate()?;
    let functional = scenario.functional();
    if functional.is_empty() {
        return Err(Error::InvalidScenario("every leg is disabled".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let initial: Periods = functional.iter().map(|&l| (l, 4)).collect();
    let eval = |periods: &Periods, n: usize| {
        let s = Scenario { disabled: scenario.disabled.clone(), periods: periods.clone() };
        evaluator.evaluate(&s, derive_seed(cfg.seed, n as u64))
    };

    let mut records = Vec::new();
    let mut history = HashSet::new();
    let mut current = initial.clone();
    let mut dev = eval(&current, 1)?;
    history.insert(current.clone());
    records.push(TrialRecord { n: 1, periods: current.clone(), deviation: Some(dev), decision: Decision::Kept });
    let mut energy = dev.abs();
    let mut n = 1;
    let mut outcome = if energy < cfg.e_req { Outcome::Converged } else { Outcome::TrialCapReached };
    let mut exhausted = false;

    while outcome != Outcome::Converged && n < cfg.max_trials {
        let candidate = match draw(&current, &history, &functional, &mut rng, |dup| {
            records.push(TrialRecord {
                n: n + 1,
                periods: dup.clone(),
                deviation: None,
                decision: Decision::DuplicateSkipped,
            })
        }) {
            Ok(c) => c,
            Err(Error::Exhausted { .. } | Error::NeighbourhoodExhausted) => {
                exhausted = true;
                break;
            }
            Err(e) => return Err(e),
        };
        n += 1;
        let d = eval(&candidate, n)?;
        history.insert(candidate.clone());
        let e = d.abs();
        let decision = if e < cfg.e_req {
            outcome = Outcome::Converged;
            Decision::Kept
        } else {
            let delta = e - energy;
            let x: f64 = rng.random();
            if !accept(delta, cfg.beta, x) {
                Decision::Aborted
            } else if delta < 0.0 {
                Decision::Kept
            } else {
                Decision::AcceptedWorse
            }
        };
        if decision.is_kept() {
            current = candidate.clone();
            energy = e;
            dev = d;
        }
        records.push(TrialRecord { n, periods: candidate, deviation: Some(d), decision });
    }

    Ok(LearningTrace {
        disabled: scenario.disabled.clone(),
        initial,
        records,
        outcome,
        exhausted,
        evaluations: n,
        seed: cfg.seed,
        final_periods: current,
        final_deviation: dev,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    pub label: String,
    pub runs: usize,
    pub mean_trials: f64,
    /// Sample standard deviation; 0 for a single run.
    pub sd_trials: f64,
    pub failure_rate: f64,
}

/// Mean and sample standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Learns `runs` times per β. Run `r` uses the same derived seed for every β.
pub fn sweep_beta<E: Evaluator + Sync + ?Sized>(
    evaluator: &E,
    scenario: &Scenario,
    betas: &[f64],
    runs: usize,
    base: &LearnerConfig,
) -> Result<Vec<SweepRow>> {
    if runs < 1 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    let largest = betas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    betas
        .iter()
        .map(|&beta| {
            let traces = (0..runs)
                .into_par_iter()
                .map(|r| {
                    let cfg = LearnerConfig { beta, seed: derive_seed(base.seed, r as u64), ..base.clone() };
                    learn(evaluator, scenario, &cfg)
                })
                .collect::<Result<Vec<_>>>()?;
            let trials: Vec<f64> = traces.iter().map(|t| t.evaluations as f64).collect();
            let (mean_trials, sd_trials) = mean_sd(&trials);
            let failures = traces.iter().filter(|t| !t.converged()).count();
            let label = if beta == 0.0 {
                "random permutation"
            } else if beta == largest && betas.len() > 1 {
                "greedy"
            } else {
                "simulated annealing"
            };
            Ok(SweepRow {
                beta,
                label: label.into(),
                runs,
                mean_trials,
                sd_trials,
                failure_rate: failures as f64 / runs as f64,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("beta,label,runs,mean_trials,sd_trials,failure_rate\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{},{}", r.beta, r.label, r.runs, r.mean_trials, r.sd_trials, r.failure_rate);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_leg(p: u32) -> Periods {
        [(LegId::R1, p)].into_iter().collect()
    }

    #[test]
    fn acceptance_branches() {
        assert!(accept(-1.0, f64::INFINITY, 1.0));
        assert!(accept(100.0, 0.0, 1.0));
        assert!(!accept(0.0, f64::INFINITY, 0.0));
        assert!(!accept(1.0, 0.5, 0.7));
        assert!(accept(1.0, 0.5, 0.6));
    }

    #[test]
    fn last_open_combination_found() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let history: HashSet<Periods> = [4, 5, 6, 9].into_iter().map(one_leg).collect();
        for _ in 0..20 {
            assert_eq!(propose(&one_leg(4), &history, &[LegId::R1], &mut rng).unwrap(), one_leg(8));
        }
    }

    #[test]
    fn exhaustion_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let all: HashSet<Periods> = SEARCH_PERIODS.into_iter().map(one_leg).collect();
        assert_eq!(propose(&one_leg(4), &all, &[LegId::R1], &mut rng), Err(Error::Exhausted { space: 5 }));
        assert!(propose(&one_leg(4), &HashSet::new(), &[], &mut rng).is_err());
    }

    #[test]
    fn initial_success_needs_no_proposal() {
        let s = Scenario::uniform(Morphology::Hexapod, &[], 4).unwrap();
        let t = learn(&PlantConfig::default(), &s, &LearnerConfig::default()).unwrap();
        assert!(t.converged());
        assert_eq!((t.evaluations, t.records.len()), (1, 1));
    }

    #[test]
    fn config_validation() {
        let s = Scenario::uniform(Morphology::Hexapod, &[LegId::R1], 4).unwrap();
        for cfg in [
            LearnerConfig { beta: -1.0, ..Default::default() },
            LearnerConfig { e_req: 0.0, ..Default::default() },
            LearnerConfig { max_trials: 0, ..Default::default() },
        ] {
            assert!(matches!(learn(&PlantConfig::default(), &s, &cfg), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn sd_of_single_run_is_zero() {
        assert_eq!(mean_sd(&[7.0]), (7.0, 0.0));
        let (m, sd) = mean_sd(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((sd - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn seeds_differ_per_index() {
        let s: HashSet<u64> = (0..1000).map(|i| derive_seed(42, i)).collect();
        assert_eq!(s.len(), 1000);
    }
}
