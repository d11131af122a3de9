//! Multiple chaotic central pattern generators for legged locomotion.
//!
//! A two-neuron chaotic map is pinned to period-`p` orbits by an adaptive
//! delayed-feedback controller ([`cpg`]). One master and several client
//! oscillators form a network with on/off synchronisation ([`network`]).
//! Per-leg periods become stance/swing rhythms ([`gait`]), a surrogate
//! plant turns those rhythms into a heading drift ([`plant`]), and simulated
//! annealing searches the period space to cancel the drift caused by
//! disabled legs ([`learner`], [`battery`]).

pub mod battery;
pub mod cpg;
pub mod error;
pub mod gait;
pub mod learner;
pub mod legs;
pub mod network;
pub mod plant;

pub use battery::{estimate_walltime, run_battery, scenario_list, BatteryReport, BatteryRow};
pub use cpg::{
    detect_period, lyapunov_estimate, run_controlled, step, ChaosControl, ControlLaw,
    ControlledCpg, CpgParams, CpgState, Sample,
};
pub use error::{Error, Result};
pub use gait::{
    apply_delays, binarize, classify_gait, motor_rhythm, render_gait, DelayConfig, DutyTable,
    GaitClass, GaitConfig, GaitTrace, RenderFormat, Rhythm,
};
pub use learner::{
    accept, learn, propose, sweep_beta, Decision, Evaluator, LearnerConfig, LearningTrace,
    Outcome, SweepRow, TrialRecord,
};
pub use legs::{LegId, Morphology, Side};
pub use network::{CopyTiming, CpgNetwork};
pub use plant::{mirror, simulate_window, DeviationSample, PlantConfig, Scenario};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Periods with a defined gait. 2, 3 and 7 are unstable or do not walk.
pub const GAIT_PERIODS: [u32; 6] = [1, 4, 5, 6, 8, 9];

/// Periods the learner may assign to a functional leg.
pub const SEARCH_PERIODS: [u32; 5] = [4, 5, 6, 8, 9];

/// Controller update rate of the robot (one map iteration ≈ 0.037 s).
pub const STEP_HZ: f64 = 27.0;

pub fn check_gait_period(p: u32) -> Result<u32> {
    if GAIT_PERIODS.contains(&p) {
        Ok(p)
    } else {
        Err(Error::UnsupportedPeriod(p))
    }
}
