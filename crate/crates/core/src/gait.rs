//! Stance/swing rhythms from oscillation periods.
//!
//! A period-`p` orbit is expanded to a motor cycle of `K·p` steps with a
//! single contiguous swing block. Ipsilateral legs lag each other by `τ`
//! steps and the opposite side lags by a further `τL`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::legs::{LegId, Side};
use crate::{check_gait_period, STEP_HZ};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaitClass {
    SlowWave,
    FastWave,
    Transition,
    Tetrapod,
    Tripod,
    Stop,
}

impl GaitClass {
    pub fn name(self) -> &'static str {
        match self {
            GaitClass::SlowWave => "slow wave",
            GaitClass::FastWave => "fast wave",
            GaitClass::Transition => "transition",
            GaitClass::Tetrapod => "tetrapod",
            GaitClass::Tripod => "tripod",
            GaitClass::Stop => "stop",
        }
    }
}

pub fn classify_gait(p: u32) -> Result<GaitClass> {
    Ok(match check_gait_period(p)? {
        9 => GaitClass::SlowWave,
        8 => GaitClass::FastWave,
        6 => GaitClass::Transition,
        5 => GaitClass::Tetrapod,
        4 => GaitClass::Tripod,
        _ => GaitClass::Stop,
    })
}

/// Stance fraction per period, as exact ratios `(stance, cycle)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DutyTable {
    pub p4: (u32, u32),
    pub p5: (u32, u32),
    pub p6: (u32, u32),
    pub p8: (u32, u32),
    pub p9: (u32, u32),
}

impl Default for DutyTable {
    fn default() -> Self {
        DutyTable { p4: (1, 2), p5: (3, 5), p6: (2, 3), p8: (3, 4), p9: (5, 6) }
    }
}

impl DutyTable {
    pub fn duty(&self, p: u32) -> Result<f64> {
        let (a, b) = self.ratio(p)?;
        Ok(a as f64 / b as f64)
    }

    fn ratio(&self, p: u32) -> Result<(u32, u32)> {
        Ok(match check_gait_period(p)? {
            1 => (1, 1),
            4 => self.p4,
            5 => self.p5,
            6 => self.p6,
            8 => self.p8,
            _ => self.p9,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let mut last = 0.0;
        for p in [4, 5, 6, 8, 9] {
            let (a, b) = self.ratio(p)?;
            if b == 0 || a > b {
                return Err(Error::InvalidConfig(format!("duty for p={p} must lie in [0, 1]")));
            }
            let d = a as f64 / b as f64;
            if d < last {
                return Err(Error::InvalidConfig("duty factor must not decrease with the period".into()));
            }
            last = d;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ChainDirection {
    #[default]
    FrontToHind,
    HindToFront,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayConfig {
    pub tau: usize,
    pub tau_l: usize,
    #[serde(default)]
    pub chain: ChainDirection,
}

impl Default for DelayConfig {
    fn default() -> Self {
        DelayConfig { tau: 16, tau_l: 48, chain: ChainDirection::FrontToHind }
    }
}

impl DelayConfig {
    /// Delay of `leg` relative to `R1` (or `R3` when the chain runs backwards).
    pub fn shift(&self, leg: LegId, segments: usize) -> usize {
        let k = match self.chain {
            ChainDirection::FrontToHind => leg.segment() - 1,
            ChainDirection::HindToFront => segments - leg.segment(),
        };
        let side = if leg.side() == Side::Left { self.tau_l } else { 0 };
        k * self.tau + side
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitConfig {
    pub expansion: usize,
    pub duty: DutyTable,
    pub delays: DelayConfig,
}

impl Default for GaitConfig {
    fn default() -> Self {
        GaitConfig { expansion: 8, duty: DutyTable::default(), delays: DelayConfig::default() }
    }
}

/// One motor cycle: stance first, then one swing block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rhythm {
    pub cycle: Vec<bool>,
}

impl Rhythm {
    pub fn new(p: u32, expansion: usize, duty: &DutyTable) -> Result<Rhythm> {
        if expansion < 1 {
            return Err(Error::InvalidArgument("cycle expansion must be at least 1".into()));
        }
        let (a, b) = duty.ratio(p)?;
        let len = expansion * p as usize;
        let stance = ((len as u64 * a as u64 + b as u64 / 2) / b as u64) as usize;
        Ok(Rhythm { cycle: (0..len).map(|i| i < stance).collect() })
    }

    pub fn len(&self) -> usize {
        self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycle.is_empty()
    }

    pub fn stance_steps(&self) -> usize {
        self.cycle.iter().filter(|&&s| s).count()
    }

    /// Value at step `t` of the rhythm delayed by `shift` steps.
    #[inline]
    pub fn at(&self, t: usize, shift: usize) -> bool {
        let n = self.cycle.len();
        self.cycle[(t + n - shift % n) % n]
    }

    pub fn sample(&self, steps: usize, shift: usize) -> Vec<bool> {
        (0..steps).map(|t| self.at(t, shift)).collect()
    }
}

/// `steps` samples of the period-`p` rhythm with default duty factors.
pub fn motor_rhythm(p: u32, steps: usize, expansion: usize) -> Result<Vec<bool>> {
    Ok(Rhythm::new(p, expansion, &DutyTable::default())?.sample(steps, 0))
}

/// Per-leg stance (`true`) / swing series sharing one length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitTrace {
    pub legs: Vec<LegId>,
    pub stance: Vec<Vec<bool>>,
    pub step_seconds: f64,
}

impl GaitTrace {
    pub fn steps(&self) -> usize {
        self.stance.first().map_or(0, Vec::len)
    }

    pub fn row(&self, leg: LegId) -> Option<&[bool]> {
        self.legs.iter().position(|&l| l == leg).map(|i| self.stance[i].as_slice())
    }

    pub fn duty(&self, leg: LegId) -> Option<f64> {
        let row = self.row(leg)?;
        Some(row.iter().filter(|&&s| s).count() as f64 / row.len().max(1) as f64)
    }

    /// CSV stance matrix: one row per leg, 0/1 per step.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("leg");
        for t in 0..self.steps() {
            let _ = write!(out, ",{t}");
        }
        out.push('\n');
        for (leg, row) in self.legs.iter().zip(&self.stance) {
            out.push_str(&leg.to_string());
            for &s in row {
                out.push_str(if s { ",1" } else { ",0" });
            }
            out.push('\n');
        }
        out
    }
}

/// Delays each leg's rhythm by its ipsilateral/contralateral lag and samples
/// `steps` steps. Legs keep the order of `rhythms`' keys.
pub fn apply_delays(rhythms: &BTreeMap<LegId, Rhythm>, steps: usize, delays: &DelayConfig) -> GaitTrace {
    let segments = rhythms.keys().map(|l| l.segment()).max().unwrap_or(1);
    let mut legs: Vec<LegId> = rhythms.keys().copied().collect();
    legs.sort_by_key(|l| (l.side(), l.segment()));
    let stance = legs
        .iter()
        .map(|leg| rhythms[leg].sample(steps, delays.shift(*leg, segments)))
        .collect();
    GaitTrace { legs, stance, step_seconds: 1.0 / STEP_HZ }
}

/// Gait of a whole body where every leg in `legs` runs period `periods[leg]`.
pub fn gait_trace(periods: &BTreeMap<LegId, u32>, steps: usize, cfg: &GaitConfig) -> Result<GaitTrace> {
    let rhythms = periods
        .iter()
        .map(|(&l, &p)| Ok((l, Rhythm::new(p, cfg.expansion, &cfg.duty)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(apply_delays(&rhythms, steps, &cfg.delays))
}

/// Stance wherever the signal is below the median of its own cycle.
pub fn binarize(signal: &[f64], cycle: usize) -> Result<Vec<bool>> {
    if cycle == 0 {
        return Err(Error::InvalidArgument("cycle length must be positive".into()));
    }
    let mut out = Vec::with_capacity(signal.len());
    for chunk in signal.chunks(cycle) {
        let mut sorted = chunk.to_vec();
        sorted.sort_by(f64::total_cmp);
        let m = sorted.len();
        let median = if m % 2 == 1 { sorted[m / 2] } else { 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]) };
        out.extend(chunk.iter().map(|&v| v < median));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderFormat {
    Ascii,
    Svg,
}

pub fn render_gait(trace: &GaitTrace, format: RenderFormat) -> Result<String> {
    if trace.legs.is_empty() || trace.steps() == 0 {
        return Err(Error::InvalidArgument("cannot render an empty gait trace".into()));
    }
    Ok(match format {
        RenderFormat::Ascii => render_ascii(trace),
        RenderFormat::Svg => render_svg(trace),
    })
}

fn render_ascii(trace: &GaitTrace) -> String {
    let mut out = String::new();
    for (leg, row) in trace.legs.iter().zip(&trace.stance) {
        let _ = write!(out, "{leg} |");
        out.extend(row.iter().map(|&s| if s { '#' } else { '.' }));
        out.push_str("|\n");
    }
    out
}

fn render_svg(trace: &GaitTrace) -> String {
    const CELL: usize = 4;
    const ROW: usize = 18;
    const LABEL: usize = 28;
    let steps = trace.steps();
    let width = LABEL + steps * CELL + 4;
    let height = trace.legs.len() * ROW + 4;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    for (i, (leg, row)) in trace.legs.iter().zip(&trace.stance).enumerate() {
        let y = 2 + i * ROW;
        let _ = writeln!(
            out,
            r#"<text x="2" y="{}" font-family="monospace" font-size="12">{leg}</text>"#,
            y + ROW - 5
        );
        let _ = writeln!(
            out,
            r#"<rect x="{LABEL}" y="{}" width="{}" height="{}" fill="none" stroke="black" stroke-width="0.5"/>"#,
            y + 2,
            steps * CELL,
            ROW - 4
        );
        let mut t = 0;
        while t < steps {
            if row[t] {
                let start = t;
                while t < steps && row[t] {
                    t += 1;
                }
                let _ = writeln!(
                    out,
                    r##"<rect x="{}" y="{}" width="{}" height="{}" fill="#1f5fbf"/>"##,
                    LABEL + start * CELL,
                    y + 2,
                    (t - start) * CELL,
                    ROW - 4
                );
            } else {
                t += 1;
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classes() {
        assert_eq!(classify_gait(4).unwrap(), GaitClass::Tripod);
        assert_eq!(classify_gait(1).unwrap(), GaitClass::Stop);
        assert_eq!(classify_gait(9).unwrap(), GaitClass::SlowWave);
        for p in [2, 3, 7] {
            assert_eq!(classify_gait(p), Err(Error::UnsupportedPeriod(p)));
        }
    }

    #[test]
    fn rhythm_counts() {
        let r = Rhythm::new(4, 8, &DutyTable::default()).unwrap();
        assert_eq!((r.len(), r.stance_steps()), (32, 16));
        let expected = [(5, 24), (6, 32), (8, 48), (9, 60)];
        for (p, s) in expected {
            assert_eq!(Rhythm::new(p, 8, &DutyTable::default()).unwrap().stance_steps(), s);
        }
        assert!(motor_rhythm(1, 100, 8).unwrap().iter().all(|&s| s));
        assert!(motor_rhythm(7, 10, 8).is_err());
        assert!(Rhythm::new(4, 0, &DutyTable::default()).is_err());
    }

    #[test]
    fn full_cycle_shift_is_identity() {
        let r = Rhythm::new(5, 8, &DutyTable::default()).unwrap();
        assert_eq!(r.sample(200, 0), r.sample(200, r.len()));
    }

    #[test]
    fn duty_table_validation() {
        assert!(DutyTable::default().validate().is_ok());
        let bad = DutyTable { p8: (1, 2), ..DutyTable::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn binarize_splits_at_median() {
        let s = [0.1, 0.9, 0.2, 0.8, 0.3, 0.7];
        assert_eq!(binarize(&s, 2).unwrap(), vec![true, false, true, false, true, false]);
        assert!(binarize(&s, 0).is_err());
    }

    #[test]
    fn ascii_render_of_full_stance() {
        let trace = GaitTrace { legs: vec![LegId::R1], stance: vec![vec![true; 5]], step_seconds: 1.0 / 27.0 };
        assert_eq!(render_gait(&trace, RenderFormat::Ascii).unwrap(), "R1 |#####|\n");
        let empty = GaitTrace { legs: vec![], stance: vec![], step_seconds: 1.0 / 27.0 };
        assert!(render_gait(&empty, RenderFormat::Svg).is_err());
    }
}
