//! Two-neuron chaotic map and its period-`p` controller.
//!
//! Without control the map `x_i(t+1) = σ(θ_i + Σ_j w_ij x_j(t) + c_i)` is
//! chaotic for the default weights. Every `p` steps the controller compares
//! the state with the one recorded `p` steps earlier and feeds the
//! difference back through the weight matrix. Its gain `μ` grows with the
//! remaining mismatch until the orbit locks.
//!
//! Two feedback laws are provided, see [`ControlLaw`].

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpgParams {
    pub w11: f64,
    pub w12: f64,
    pub w21: f64,
    pub w22: f64,
    pub theta1: f64,
    pub theta2: f64,
}

impl Default for CpgParams {
    fn default() -> Self {
        CpgParams { w11: -22.0, w12: 5.9, w21: -6.6, w22: 0.0, theta1: -3.4, theta2: 3.8 }
    }
}

impl CpgParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.w11, self.w12, self.w21, self.w22, self.theta1, self.theta2];
        if all.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidArgument("CPG parameters must be finite".into()))
        }
    }

    /// `W·d` for a state difference `d`.
    #[inline]
    pub fn apply_weights(&self, d1: f64, d2: f64) -> (f64, f64) {
        (self.w11 * d1 + self.w12 * d2, self.w21 * d1 + self.w22 * d2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpgState {
    pub x1: f64,
    pub x2: f64,
    pub t: u64,
}

impl CpgState {
    /// Initial activity used when none is given.
    pub const DEFAULT_INIT: (f64, f64) = (0.1, 0.2);

    pub fn new(x1: f64, x2: f64) -> Self {
        CpgState { x1, x2, t: 0 }
    }
}

impl Default for CpgState {
    fn default() -> Self {
        CpgState::new(Self::DEFAULT_INIT.0, Self::DEFAULT_INIT.1)
    }
}

/// Logistic function, evaluated without overflow for large |a|.
#[inline]
pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn advance(params: &CpgParams, x1: f64, x2: f64, c1: f64, c2: f64) -> (f64, f64) {
    let a1 = params.theta1 + params.w11 * x1 + params.w12 * x2 + c1;
    let a2 = params.theta2 + params.w21 * x1 + params.w22 * x2 + c2;
    (sigmoid(a1), sigmoid(a2))
}

/// One iteration of the map with external inputs `c1`, `c2`.
pub fn step(state: &CpgState, params: &CpgParams, c1: f64, c2: f64) -> Result<CpgState> {
    if ![state.x1, state.x2, c1, c2].iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidArgument("state and inputs must be finite".into()));
    }
    params.validate()?;
    let (x1, x2) = advance(params, state.x1, state.x2, c1, c2);
    Ok(CpgState { x1, x2, t: state.t + 1 })
}

/// How the delayed difference is fed back and how the gain adapts.
///
/// `Published` is the textbook form: `c = μ·W·Δ` with `Δ = x(t) − x(t−p)` and
/// `μ += λ|Δ|²/p`. For these weights every gait orbit has a Floquet multiplier
/// below −3 and that form cannot stabilise it, because it acts on a
/// second-order recurrence `y_{k+1} = g(y_k ± μ(y_k − y_{k−1}))` whose
/// stable multipliers are confined to (−3, 1). The form is kept for study.
///
/// `Blended` (the default) feeds the map a convex blend of the current state
/// and the remembered one, `x − κΔ` with `κ = μ/(1+μ)`, and remembers the
/// blended state rather than the raw one. The closed-loop checkpoint
/// multiplier is then `s + κ(1 − s)`, which is stable for any `s < −1` once
/// `κ` is close enough to 1. Gain growth is proportional to `|Δ|`, so it
/// crosses the stability boundary in finite time instead of stalling in
/// front of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ControlLaw {
    Published,
    #[default]
    Blended,
}

impl ControlLaw {
    pub fn default_lambda(self) -> f64 {
        match self {
            ControlLaw::Published => 0.05,
            ControlLaw::Blended => 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosControl {
    p: usize,
    mu: f64,
    lambda: f64,
    law: ControlLaw,
    enabled: bool,
    history: VecDeque<(f64, f64)>,
    /// Steps since control was (re)enabled; checkpoints fall on multiples of `p`.
    clock: u64,
    /// Release orbits whose prime period is a proper divisor of `p`.
    #[serde(default = "yes")]
    prime_guard: bool,
}

fn yes() -> bool {
    true
}

/// Squared mismatch below which an orbit counts as locked.
const LOCK_TOL: f64 = 1e-12;

impl ChaosControl {
    /// Controller for period `p` with the default law and its default rate.
    pub fn new(p: usize) -> Result<Self> {
        Self::with_law(p, ControlLaw::default())
    }

    pub fn with_law(p: usize, law: ControlLaw) -> Result<Self> {
        if p < 1 {
            return Err(Error::InvalidArgument("period must be at least 1".into()));
        }
        Ok(ChaosControl {
            p,
            mu: 0.0,
            lambda: law.default_lambda(),
            law,
            enabled: true,
            history: VecDeque::with_capacity(p + 1),
            clock: 0,
            prime_guard: true,
        })
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidArgument("adaptation rate must be positive".into()));
        }
        self.lambda = lambda;
        Ok(self)
    }

    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::InvalidArgument("control strength must be non-negative".into()));
        }
        self.mu = mu;
        Ok(self)
    }

    /// Keeps orbits of a shorter period that divides `p` instead of releasing them.
    pub fn without_prime_guard(mut self) -> Self {
        self.prime_guard = false;
        self
    }

    pub fn disabled(mut self) -> Self {
        self.enabled = false;
        self
    }

    pub fn p(&self) -> usize {
        self.p
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn law(&self) -> ControlLaw {
        self.law
    }
    pub fn enabled(&self) -> bool {
        self.enabled
    }
    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    /// Switches control on or off. Switching on restarts the checkpoint clock.
    pub fn set_enabled(&mut self, on: bool) {
        if on && !self.enabled {
            self.clock = 0;
        }
        self.enabled = on;
    }

    /// Forgets the gain and the remembered states.
    pub fn reset(&mut self) {
        self.mu = 0.0;
        self.history.clear();
        self.clock = 0;
    }

    /// Signed feedback gain applied to `W·Δ`.
    pub fn gain(&self) -> f64 {
        match self.law {
            ControlLaw::Published => self.mu,
            ControlLaw::Blended => -self.mu / (1.0 + self.mu),
        }
    }

    /// Control inputs for a checkpoint, given the current state and the
    /// reference state `p` steps back. Zero when control is off.
    pub fn control_input(&self, params: &CpgParams, now: &CpgState, past: &CpgState) -> (f64, f64) {
        if !self.enabled {
            return (0.0, 0.0);
        }
        let (w1, w2) = params.apply_weights(now.x1 - past.x1, now.x2 - past.x2);
        let g = self.gain();
        (g * w1, g * w2)
    }

    /// Grows the gain from a state difference. Never decreases it.
    pub fn update_mu(&mut self, delta1: f64, delta2: f64) -> Result<()> {
        if !(delta1.is_finite() && delta2.is_finite()) {
            return Err(Error::InvalidArgument("state difference must be finite".into()));
        }
        let sq = delta1 * delta1 + delta2 * delta2;
        let inc = match self.law {
            ControlLaw::Published => sq,
            ControlLaw::Blended => sq.sqrt(),
        };
        self.mu += self.lambda * inc / self.p as f64;
        Ok(())
    }

    /// The remembered state from `p` steps ago.
    pub fn reference(&self) -> Result<CpgState> {
        match self.history.front() {
            Some(&(x1, x2)) if self.history.len() == self.p => Ok(CpgState::new(x1, x2)),
            _ => Err(Error::NotReady { have: self.history.len(), need: self.p }),
        }
    }

    fn locked_below_p(&self, now: &CpgState) -> bool {
        (1..self.p).filter(|q| self.p.is_multiple_of(*q)).any(|q| {
            let (x1, x2) = self.history[self.p - q];
            (now.x1 - x1).powi(2) + (now.x2 - x2).powi(2) < LOCK_TOL
        })
    }

    /// Processes the state of the current step: returns the control input to
    /// apply on this step and, on checkpoints, the squared mismatch `|Δ|²`.
    pub fn observe(&mut self, params: &CpgParams, now: &CpgState) -> ((f64, f64), Option<f64>) {
        if !self.enabled {
            return ((0.0, 0.0), None);
        }
        let mut c = (0.0, 0.0);
        let mut remembered = (now.x1, now.x2);
        let mut residual = None;
        if let Ok(past) = self.reference() {
            let (d1, d2) = (now.x1 - past.x1, now.x2 - past.x2);
            let checkpoint = self.clock.is_multiple_of(self.p as u64);
            if checkpoint && self.prime_guard && d1 * d1 + d2 * d2 < LOCK_TOL && self.locked_below_p(now) {
                // A subharmonic satisfies the period-p condition too. Drop the
                // gain so the chaotic search resumes.
                self.reset();
                self.history.push_back((now.x1, now.x2));
                self.clock = 1;
                return ((0.0, 0.0), None);
            }
            if checkpoint {
                c = self.control_input(params, now, &past);
                if self.law == ControlLaw::Blended {
                    let k = self.mu / (1.0 + self.mu);
                    remembered = (now.x1 - k * d1, now.x2 - k * d2);
                }
                residual = Some(d1 * d1 + d2 * d2);
            }
            // Finite by construction: states live in (0, 1).
            let _ = self.update_mu(d1, d2);
        }
        self.history.push_back(remembered);
        if self.history.len() > self.p {
            self.history.pop_front();
        }
        self.clock += 1;
        (c, residual)
    }
}

/// One row of a controlled trajectory: the state at `t` and the input applied at `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: u64,
    pub x1: f64,
    pub x2: f64,
    pub c1: f64,
    pub c2: f64,
    pub mu: f64,
}

/// A single oscillator together with its controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlledCpg {
    pub params: CpgParams,
    pub state: CpgState,
    pub control: ChaosControl,
    last_residual: Option<f64>,
}

impl ControlledCpg {
    pub fn new(params: CpgParams, control: ChaosControl, init: CpgState) -> Result<Self> {
        params.validate()?;
        if !(init.x1.is_finite() && init.x2.is_finite()) {
            return Err(Error::InvalidArgument("initial state must be finite".into()));
        }
        Ok(ControlledCpg { params, state: init, control, last_residual: None })
    }

    /// `|Δ|²` at the most recent checkpoint.
    pub fn last_residual(&self) -> Option<f64> {
        self.last_residual
    }

    pub fn tick(&mut self) -> Sample {
        let ((c1, c2), residual) = self.control.observe(&self.params, &self.state);
        if residual.is_some() {
            self.last_residual = residual;
        }
        let sample = Sample {
            t: self.state.t,
            x1: self.state.x1,
            x2: self.state.x2,
            c1,
            c2,
            mu: self.control.mu(),
        };
        let (x1, x2) = advance(&self.params, self.state.x1, self.state.x2, c1, c2);
        self.state = CpgState { x1, x2, t: self.state.t + 1 };
        sample
    }

    pub fn run(&mut self, steps: usize) -> Vec<Sample> {
        (0..steps).map(|_| self.tick()).collect()
    }

    /// Resets the controller and switches it to period `p`.
    pub fn set_period(&mut self, p: usize) -> Result<()> {
        if p < 1 {
            return Err(Error::InvalidArgument("period must be at least 1".into()));
        }
        self.control.p = p;
        self.control.reset();
        self.last_residual = None;
        Ok(())
    }
}

/// Runs the default controller for `steps` iterations and returns every state
/// from `init` onwards (`steps + 1` entries).
pub fn run_controlled(params: &CpgParams, p: usize, steps: usize, init: CpgState) -> Result<Vec<CpgState>> {
    let mut cpg = ControlledCpg::new(*params, ChaosControl::new(p)?, init)?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(cpg.state);
    for _ in 0..steps {
        cpg.tick();
        out.push(cpg.state);
    }
    Ok(out)
}

/// Smallest lag `q` that repeats the final third of `trace` within `tol`.
pub fn detect_period(trace: &[f64], tol: f64) -> Result<Option<usize>> {
    if trace.is_empty() {
        return Err(Error::InvalidArgument("empty trace".into()));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let n = trace.len();
    let third = n / 3;
    let start = n - third;
    Ok((1..=third).find(|&q| (start..n).all(|k| (trace[k] - trace[k - q]).abs() < tol)))
}

/// Default tolerance for [`detect_period`].
pub const PERIOD_TOL: f64 = 1e-6;

const LYAPUNOV_BURN_IN: usize = 1000;

/// Largest Lyapunov exponent of the uncontrolled map, from the product of
/// step Jacobians with renormalisation after every step.
pub fn lyapunov_estimate(params: &CpgParams, steps: usize, init: CpgState) -> f64 {
    let (mut x1, mut x2) = (init.x1, init.x2);
    let (mut v1, mut v2) = (1.0_f64, 0.0_f64);
    let mut sum = 0.0;
    for i in 0..LYAPUNOV_BURN_IN + steps {
        let (y1, y2) = advance(params, x1, x2, 0.0, 0.0);
        let (s1, s2) = (y1 * (1.0 - y1), y2 * (1.0 - y2));
        let n1 = s1 * (params.w11 * v1 + params.w12 * v2);
        let n2 = s2 * (params.w21 * v1 + params.w22 * v2);
        let norm = n1.hypot(n2).max(f64::MIN_POSITIVE);
        (v1, v2) = (n1 / norm, n2 / norm);
        if v1 == 0.0 && v2 == 0.0 {
            (v1, v2) = (1.0, 0.0);
        }
        if i >= LYAPUNOV_BURN_IN {
            sum += norm.ln();
        }
        (x1, x2) = (y1, y2);
    }
    sum / steps.max(1) as f64
}
