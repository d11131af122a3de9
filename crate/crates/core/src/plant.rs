//! Surrogate locomotion plant: per-leg periods in, heading drift out.
//!
//! Each functional leg pushes forward with `thrust × duty` at its lateral
//! lever arm. A disabled leg pushes nothing and drags; the drag grows when
//! its same-side neighbours spend less time in stance, since the dead leg
//! then carries more of the body. The yaw torque is integrated over the
//! evaluation window. Positive Δφ is a turn to the right.
//!
//! Only whole cycles matter for the stance count, so the window average of
//! a leg's stance indicator is taken as its exact duty factor. Phase delays
//! between legs shift the stance blocks but do not change the count.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gait::{DutyTable, Rhythm};
use crate::legs::{LegId, Morphology, Side};
use crate::{check_gait_period, SEARCH_PERIODS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegGeometry {
    pub leg: LegId,
    /// Signed lateral offset, + right.
    pub lateral: f64,
    /// Signed longitudinal offset, + front. Kept for geometry checks; the
    /// yaw model only uses the lateral arm.
    pub longitudinal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantConfig {
    pub morphology: Morphology,
    pub legs: Vec<LegGeometry>,
    /// Forward force of a leg that is always in stance.
    pub thrust: f64,
    /// Degrees of yaw per step per unit torque.
    pub yaw_gain: f64,
    /// Baseline drag of a disabled leg.
    pub drag: f64,
    /// Extra drag of a disabled leg that carries full load.
    pub load_drag: f64,
    /// Neighbour duty at and above which a disabled leg is fully unloaded.
    pub support_threshold: f64,
    /// Duty range over which the load ramps from 0 to 1.
    pub support_width: f64,
    /// Per-step yaw noise amplitude in degrees, uniform in ±noise.
    #[serde(default)]
    pub noise: f64,
    pub window: usize,
    #[serde(default = "default_expansion")]
    pub expansion: usize,
    #[serde(default)]
    pub duty: DutyTable,
}

fn default_expansion() -> usize {
    8
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig::for_morphology(Morphology::Hexapod)
    }
}

impl PlantConfig {
    /// Committed default gains for a body plan.
    pub fn for_morphology(morphology: Morphology) -> Self {
        let right: &[(f64, f64)] = match morphology {
            Morphology::Hexapod => &[(1.0, 1.0), (1.25, 0.0), (1.0, -1.0)],
            Morphology::Quadruped => &[(1.0, 0.5), (1.25, -0.5)],
        };
        let mut legs = Vec::new();
        for side in [Side::Right, Side::Left] {
            for (i, &(lat, lon)) in right.iter().enumerate() {
                let leg = LegId::from_parts(side, i + 1).expect("segment in range");
                legs.push(LegGeometry { leg, lateral: side.sign() * lat, longitudinal: lon });
            }
        }
        PlantConfig {
            morphology,
            legs,
            thrust: 1.0,
            yaw_gain: 0.0375,
            drag: 0.065,
            load_drag: 1.6,
            support_threshold: 0.6,
            support_width: 0.07,
            noise: 0.0,
            window: 400,
            expansion: default_expansion(),
            duty: DutyTable::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.window < 1 {
            return bad("window must be at least 1 step".into());
        }
        if self.expansion < 1 {
            return bad("expansion must be at least 1".into());
        }
        for (name, v) in [
            ("thrust", self.thrust),
            ("yaw_gain", self.yaw_gain),
            ("drag", self.drag),
            ("load_drag", self.load_drag),
            ("support_threshold", self.support_threshold),
            ("noise", self.noise),
        ] {
            if !v.is_finite() || v < 0.0 {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !(self.support_width.is_finite() && self.support_width > 0.0) {
            return bad("support_width must be positive".into());
        }
        self.duty.validate()?;
        let expected: BTreeSet<LegId> = self.morphology.legs().iter().copied().collect();
        let given: BTreeSet<LegId> = self.legs.iter().map(|g| g.leg).collect();
        if given != expected || self.legs.len() != expected.len() {
            return bad(format!("leg geometry must list each {} leg exactly once", self.morphology));
        }
        for g in &self.legs {
            if !(g.lateral.is_finite() && g.longitudinal.is_finite()) {
                return bad(format!("{} has a non-finite position", g.leg));
            }
            if g.lateral == 0.0 || (g.lateral > 0.0) != (g.leg.side() == Side::Right) {
                return bad(format!("{} lateral offset has the wrong sign", g.leg));
            }
            let m = self.geometry(g.leg.mirror());
            if m.lateral != -g.lateral || m.longitudinal != g.longitudinal {
                return bad(format!("{} is not the mirror image of {}", g.leg, g.leg.mirror()));
            }
        }
        Ok(())
    }

    fn geometry(&self, leg: LegId) -> LegGeometry {
        *self.legs.iter().find(|g| g.leg == leg).expect("validated leg set")
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: PlantConfig = toml::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("plant config is always representable")
    }

    /// Search space size for a scenario with this many functional legs.
    pub fn space_size(functional: usize) -> usize {
        SEARCH_PERIODS.len().pow(functional as u32)
    }
}

/// Disabled legs plus a period for every functional leg.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub disabled: BTreeSet<LegId>,
    pub periods: BTreeMap<LegId, u32>,
}

impl Scenario {
    /// Every functional leg at period `p`.
    pub fn uniform(morphology: Morphology, disabled: &[LegId], p: u32) -> Result<Self> {
        let disabled: BTreeSet<LegId> = disabled.iter().copied().collect();
        let periods = morphology.legs().iter().filter(|l| !disabled.contains(l)).map(|&l| (l, p)).collect();
        let s = Scenario { disabled, periods };
        s.validate(morphology)?;
        Ok(s)
    }

    pub fn functional(&self) -> Vec<LegId> {
        self.periods.keys().copied().collect()
    }

    pub fn validate(&self, morphology: Morphology) -> Result<()> {
        for leg in self.disabled.iter().chain(self.periods.keys()) {
            if !morphology.has_leg(*leg) {
                return Err(Error::InvalidScenario(format!("{leg} is not a leg of a {morphology}")));
            }
        }
        for leg in morphology.legs() {
            match (self.disabled.contains(leg), self.periods.contains_key(leg)) {
                (true, true) => {
                    return Err(Error::InvalidScenario(format!("disabled leg {leg} must not carry a period")))
                }
                (false, false) => return Err(Error::InvalidScenario(format!("functional leg {leg} has no period"))),
                _ => {}
            }
        }
        for &p in self.periods.values() {
            check_gait_period(p)?;
        }
        Ok(())
    }

    /// Compact label such as `R1+L2`, or `none`.
    pub fn label(&self) -> String {
        disabled_label(&self.disabled)
    }
}

pub fn disabled_label(disabled: &BTreeSet<LegId>) -> String {
    if disabled.is_empty() {
        return "none".into();
    }
    disabled.iter().map(LegId::to_string).collect::<Vec<_>>().join("+")
}

/// Swaps left and right in both the disabled set and the period map.
pub fn mirror(scenario: &Scenario) -> Scenario {
    Scenario {
        disabled: scenario.disabled.iter().map(|l| l.mirror()).collect(),
        periods: scenario.periods.iter().map(|(l, &p)| (l.mirror(), p)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationSample {
    /// Degrees, + right.
    pub delta_phi: f64,
}

/// Heading change over one evaluation window.
pub fn simulate_window(cfg: &PlantConfig, scenario: &Scenario, seed: u64) -> Result<DeviationSample> {
    cfg.validate()?;
    scenario.validate(cfg.morphology)?;

    let mut duty = BTreeMap::new();
    for (&leg, &p) in &scenario.periods {
        let r = Rhythm::new(p, cfg.expansion, &cfg.duty)?;
        duty.insert(leg, r.stance_steps() as f64 / r.len() as f64);
    }

    // Rows are summed left+right first so that mirroring negates exactly.
    let mut torque = 0.0;
    for seg in 1..=cfg.morphology.segments() {
        let mut row = 0.0;
        for side in [Side::Right, Side::Left] {
            let leg = LegId::from_parts(side, seg).expect("segment in range");
            let force = match duty.get(&leg) {
                Some(&d) => cfg.thrust * d,
                None => -(cfg.drag + cfg.load_drag * load(cfg, &duty, leg)),
            };
            row += -cfg.geometry(leg).lateral * force;
        }
        torque += row;
    }
    let mut delta_phi = cfg.yaw_gain * cfg.window as f64 * torque;

    if cfg.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..cfg.window {
            delta_phi += cfg.noise * rng.random_range(-1.0..=1.0);
        }
    }
    if !delta_phi.is_finite() {
        return Err(Error::InvalidConfig("plant produced a non-finite deviation".into()));
    }
    Ok(DeviationSample { delta_phi })
}

/// Share of body weight a disabled leg carries, in [0, 1].
fn load(cfg: &PlantConfig, duty: &BTreeMap<LegId, f64>, leg: LegId) -> f64 {
    let support: Vec<f64> = cfg
        .morphology
        .ipsilateral_neighbours(leg)
        .iter()
        .filter_map(|n| duty.get(n).copied())
        .collect();
    if support.is_empty() {
        return 1.0;
    }
    let mean = support.iter().sum::<f64>() / support.len() as f64;
    ((cfg.support_threshold - mean) / cfg.support_width).clamp(0.0, 1.0)
}

/// One evaluation log row: scenario, per-leg periods, seed, Δφ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub scenario: Scenario,
    pub seed: u64,
    pub delta_phi: f64,
}

pub fn evaluation_csv(morphology: Morphology, rows: &[Evaluation]) -> String {
    let mut out = String::from("disabled");
    for leg in morphology.legs() {
        let _ = write!(out, ",{leg}");
    }
    out.push_str(",seed,delta_phi\n");
    for r in rows {
        out.push_str(&r.scenario.label());
        for leg in morphology.legs() {
            match r.scenario.periods.get(leg) {
                Some(p) => {
                    let _ = write!(out, ",{p}");
                }
                None => out.push_str(",-"),
            }
        }
        let _ = writeln!(out, ",{},{}", r.seed, r.delta_phi);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait::{gait_trace, GaitConfig};

    #[test]
    fn defaults_validate_and_round_trip() {
        for m in [Morphology::Hexapod, Morphology::Quadruped] {
            let cfg = PlantConfig::for_morphology(m);
            cfg.validate().unwrap();
            assert_eq!(PlantConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
        }
    }

    #[test]
    fn asymmetric_geometry_rejected() {
        let mut cfg = PlantConfig::default();
        cfg.legs[4].lateral = -1.3;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        let cfg = PlantConfig { window: 0, ..PlantConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn scenario_validation() {
        let m = Morphology::Hexapod;
        let mut s = Scenario::uniform(m, &[LegId::R1], 4).unwrap();
        s.periods.insert(LegId::R1, 5);
        assert!(matches!(s.validate(m), Err(Error::InvalidScenario(_))));
        assert!(Scenario::uniform(Morphology::Quadruped, &[LegId::R3], 4).is_err());
        assert_eq!(Scenario::uniform(m, &[], 7), Err(Error::UnsupportedPeriod(7)));
    }

    #[test]
    fn window_average_matches_trace_count() {
        let s = Scenario::uniform(Morphology::Hexapod, &[], 4).unwrap();
        let mut periods = s.periods.clone();
        periods.insert(LegId::L2, 9);
        periods.insert(LegId::R3, 5);
        let trace = gait_trace(&periods, 32 * 45 * 2, &GaitConfig::default()).unwrap();
        for (&leg, &p) in &periods {
            let r = Rhythm::new(p, 8, &DutyTable::default()).unwrap();
            assert_eq!(trace.duty(leg).unwrap(), r.stance_steps() as f64 / r.len() as f64);
        }
    }

    #[test]
    fn load_ramps_with_neighbour_support() {
        let cfg = PlantConfig::default();
        let mut duty = BTreeMap::new();
        assert_eq!(load(&cfg, &duty, LegId::R2), 1.0);
        duty.insert(LegId::R1, 0.5);
        duty.insert(LegId::R3, 0.5);
        assert_eq!(load(&cfg, &duty, LegId::R2), 1.0);
        duty.insert(LegId::R1, 5.0 / 6.0);
        assert_eq!(load(&cfg, &duty, LegId::R2), 0.0);
    }

    #[test]
    fn noise_is_seeded() {
        let cfg = PlantConfig { noise: 0.2, ..PlantConfig::default() };
        let s = Scenario::uniform(Morphology::Hexapod, &[LegId::R1], 4).unwrap();
        let a = simulate_window(&cfg, &s, 3).unwrap();
        assert_eq!(a, simulate_window(&cfg, &s, 3).unwrap());
        assert_ne!(a, simulate_window(&cfg, &s, 4).unwrap());
    }

    #[test]
    fn csv_marks_disabled_legs() {
        let s = Scenario::uniform(Morphology::Quadruped, &[LegId::L1], 5).unwrap();
        let csv = evaluation_csv(Morphology::Quadruped, &[Evaluation { scenario: s, seed: 9, delta_phi: -1.5 }]);
        assert_eq!(csv, "disabled,R1,R2,L1,L2,seed,delta_phi\nL1,5,5,-,5,9,-1.5\n");
    }
}
