use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use mcpg_core::battery::DEFAULT_REPEATS;
use mcpg_core::cpg::PERIOD_TOL;
use mcpg_core::gait::{gait_trace, ChainDirection};
use mcpg_core::learner::{derive_seed, sweep_csv};
use mcpg_core::legs::parse_legs;
use mcpg_core::network::network_csv;
use mcpg_core::{
    classify_gait, detect_period, estimate_walltime, learn as learn_scenario, lyapunov_estimate,
    render_gait, run_battery, sweep_beta as sweep, ChaosControl, ControlledCpg, CpgNetwork,
    CpgParams, CpgState, GaitConfig, LearnerConfig, LegId, Morphology, PlantConfig, RenderFormat, Scenario,
};
use serde_json::{json, Value};

use crate::output::Experiment;
use crate::{Body, Common, Format, Law, Learning};

/// Bad flag combinations found after parsing.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

fn check_format(c: &Common, allowed: &[Format], default: Format) -> Result<Format> {
    let f = c.format.unwrap_or(default);
    if !allowed.contains(&f) {
        return usage(format!("--format {f:?} is not available for this command").to_lowercase());
    }
    Ok(f)
}

fn parse_init(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok((a.parse().map_err(|e| format!("{a}: {e}"))?, b.parse().map_err(|e| format!("{b}: {e}"))?)),
        _ => Err(format!("expected `x1,x2`, got `{s}`")),
    }
}

/// Uniform in [0, 1) from a derived seed.
fn unit(seed: u64, index: u64) -> f64 {
    (derive_seed(seed, index) >> 11) as f64 / (1u64 << 53) as f64
}

fn initial_state(init: Option<(f64, f64)>, random: bool, seed: u64) -> CpgState {
    match (init, random) {
        (Some((x1, x2)), _) => CpgState::new(x1, x2),
        (None, true) => CpgState::new(unit(seed, 0), unit(seed, 1)),
        (None, false) => CpgState::default(),
    }
}

/// `4` sets every leg, `R1=5,L2=6` sets single legs; both may be mixed.
fn parse_periods(morphology: Morphology, base: u32, spec: Option<&str>) -> Result<BTreeMap<LegId, u32>> {
    let mut out: BTreeMap<LegId, u32> = morphology.legs().iter().map(|&l| (l, base)).collect();
    for token in spec.unwrap_or("").split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match token.split_once('=') {
            None => {
                let p: u32 = token.parse().with_context(|| format!("period `{token}`"))?;
                out.values_mut().for_each(|v| *v = p);
            }
            Some((leg, p)) => {
                let leg: LegId = leg.trim().parse()?;
                if !morphology.has_leg(leg) {
                    return usage(format!("{leg} is not a leg of a {morphology}"));
                }
                out.insert(leg, p.trim().parse().with_context(|| format!("period `{p}`"))?);
            }
        }
    }
    Ok(out)
}

fn periods_json(periods: &BTreeMap<LegId, u32>) -> Value {
    periods.iter().map(|(l, p)| (l.to_string(), json!(p))).collect::<serde_json::Map<_, _>>().into()
}

/// JSON has no infinity.
fn beta_json(beta: f64) -> Value {
    if beta.is_infinite() {
        json!("inf")
    } else {
        json!(beta)
    }
}

fn plant(body: &Body) -> Result<PlantConfig> {
    match &body.config {
        Some(path) => {
            let cfg = PlantConfig::load(path)?;
            if let Some(m) = body.morphology {
                if m != cfg.morphology {
                    return usage(format!("--morphology {m} conflicts with the {} plant config", cfg.morphology));
                }
            }
            Ok(cfg)
        }
        None => Ok(PlantConfig::for_morphology(body.morphology.unwrap_or_default())),
    }
}

fn learner_config(l: &Learning, seed: u64) -> LearnerConfig {
    LearnerConfig { beta: l.beta, e_req: l.e_req, max_trials: l.max_trials, seed }
}

fn learning_json(l: &Learning) -> Value {
    json!({ "beta": beta_json(l.beta), "e_req": l.e_req, "max_trials": l.max_trials })
}

/// Learning always starts with every functional leg at period 4.
fn scenario(plant: &PlantConfig, disable: &str) -> Result<Scenario> {
    Ok(Scenario::uniform(plant.morphology, &parse_legs(disable)?, 4)?)
}

fn scenario_json(s: &Scenario) -> Value {
    json!({
        "disabled": s.disabled.iter().map(LegId::to_string).collect::<Vec<_>>(),
        "periods": periods_json(&s.periods),
    })
}

#[derive(Args, Debug)]
pub struct RunCpg {
    #[arg(long, default_value_t = 4)]
    period: usize,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Initial state `x1,x2`.
    #[arg(long, value_parser = parse_init)]
    init: Option<(f64, f64)>,
    /// Draw the initial state from the seed.
    #[arg(long, conflicts_with = "init")]
    random_init: bool,
    #[arg(long)]
    uncontrolled: bool,
    #[arg(long, value_enum, default_value = "blended")]
    law: Law,
    /// Gain growth rate; the law's default when omitted.
    #[arg(long)]
    lambda: Option<f64>,
    /// Run the master/client network. Client initial states come from the seed.
    #[arg(long)]
    network: bool,
    #[arg(long, requires = "network")]
    morphology: Option<Morphology>,
    /// Network periods, e.g. `4` or `R1=5,L2=6`.
    #[arg(long, requires = "network")]
    periods: Option<String>,
}

pub fn run_cpg(a: &RunCpg, c: &Common) -> Result<PathBuf> {
    let format = check_format(c, &[Format::Csv, Format::Json], Format::Csv)?;
    if a.network {
        if a.uncontrolled || a.init.is_some() || a.random_init {
            return usage("--uncontrolled, --init and --random-init apply to a single oscillator");
        }
        return run_network(a, c, format);
    }
    let init = initial_state(a.init, a.random_init, c.seed);
    let mut control = ChaosControl::with_law(a.period, a.law.into())?;
    if let Some(l) = a.lambda {
        control = control.with_lambda(l)?;
    }
    if a.uncontrolled {
        control = control.disabled();
    }
    let config = json!({
        "period": a.period, "steps": a.steps, "init": [init.x1, init.x2], "controlled": !a.uncontrolled,
        "law": format!("{:?}", a.law).to_lowercase(), "lambda": control.lambda(), "params": CpgParams::default(),
    });
    let mut exp = Experiment::create("run-cpg", config, c.seed, c.out.as_deref(), &c.out_root)?;
    let mut cpg = ControlledCpg::new(CpgParams::default(), control, init)?;
    let samples = cpg.run(a.steps);

    let mut csv = String::from("t,x1,x2,c1,c2,mu\n");
    for s in &samples {
        csv.push_str(&format!("{},{},{},{},{},{}\n", s.t, s.x1, s.x2, s.c1, s.c2, s.mu));
    }
    exp.text("cpg.csv", &csv)?;
    if format == Format::Json {
        exp.json("cpg.json", serde_json::to_value(&samples)?)?;
    }
    let x1: Vec<f64> = samples.iter().map(|s| s.x1).collect();
    let tail = &x1[x1.len().saturating_sub(100)..];
    let mean = tail.iter().sum::<f64>() / tail.len().max(1) as f64;
    let tail_variance = tail.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / tail.len().max(1) as f64;
    let detected = if x1.is_empty() { None } else { detect_period(&x1, PERIOD_TOL)? };
    exp.finish(json!({
        "detected_period": detected,
        "last_residual": cpg.last_residual(),
        "tail_variance": tail_variance,
    }))
}

fn run_network(a: &RunCpg, c: &Common, format: Format) -> Result<PathBuf> {
    let morphology = a.morphology.unwrap_or_default();
    let periods = parse_periods(morphology, a.period as u32, a.periods.as_deref())?;
    let law = a.law.into();
    let config = json!({
        "network": true, "morphology": morphology, "periods": periods_json(&periods), "steps": a.steps,
        "law": format!("{:?}", a.law).to_lowercase(), "params": CpgParams::default(),
    });
    let mut exp = Experiment::create("run-cpg", config, c.seed, c.out.as_deref(), &c.out_root)?;
    let mut net = CpgNetwork::new(morphology, CpgParams::default(), law, c.seed)?;
    net.set_periods(&periods)?;
    let samples = net.run(a.steps);
    exp.text("network.csv", &network_csv(&samples))?;
    if format == Format::Json {
        exp.json("network.json", serde_json::to_value(&samples)?)?;
    }
    let mut detected = serde_json::Map::new();
    for (i, leg) in morphology.legs().iter().enumerate() {
        let x1: Vec<f64> = samples.iter().map(|s| s.legs[i].1).collect();
        let p = if x1.is_empty() { None } else { detect_period(&x1, PERIOD_TOL)? };
        detected.insert(leg.to_string(), json!(p));
    }
    exp.finish(json!({ "detected_period": detected }))
}

#[derive(Args, Debug)]
pub struct Gait {
    #[arg(long, default_value_t = 4)]
    period: u32,
    /// Per-leg periods, e.g. `R1=5,L2=6`.
    #[arg(long)]
    periods: Option<String>,
    #[arg(long)]
    morphology: Option<Morphology>,
    #[arg(long, default_value_t = 400)]
    steps: usize,
    /// Delay between neighbouring segments, in steps.
    #[arg(long)]
    tau: Option<usize>,
    /// Delay of the left side, in steps.
    #[arg(long)]
    tau_l: Option<usize>,
    /// Propagate delays from the hind legs forward.
    #[arg(long)]
    hind_to_front: bool,
}

pub fn gait(a: &Gait, c: &Common) -> Result<PathBuf> {
    let format = check_format(c, &[Format::Csv, Format::Json, Format::Svg, Format::Ascii], Format::Svg)?;
    let morphology = a.morphology.unwrap_or_default();
    let periods = parse_periods(morphology, a.period, a.periods.as_deref())?;
    let mut cfg = GaitConfig::default();
    cfg.delays.tau = a.tau.unwrap_or(cfg.delays.tau);
    cfg.delays.tau_l = a.tau_l.unwrap_or(cfg.delays.tau_l);
    if a.hind_to_front {
        cfg.delays.chain = ChainDirection::HindToFront;
    }
    let config = json!({ "morphology": morphology, "periods": periods_json(&periods), "steps": a.steps, "gait": cfg });
    let trace = gait_trace(&periods, a.steps, &cfg)?;
    let mut exp = Experiment::create("gait", config, c.seed, c.out.as_deref(), &c.out_root)?;
    exp.text("gait.csv", &trace.to_csv())?;
    match format {
        Format::Svg => exp.svg("gait.svg", &render_gait(&trace, RenderFormat::Svg)?)?,
        Format::Ascii => exp.text("gait.txt", &render_gait(&trace, RenderFormat::Ascii)?)?,
        Format::Json => exp.json("gait.json", serde_json::to_value(&trace)?)?,
        Format::Csv => {}
    }
    let mut legs = serde_json::Map::new();
    for (leg, p) in &periods {
        legs.insert(
            leg.to_string(),
            json!({ "period": p, "gait": classify_gait(*p)?.name(), "duty": trace.duty(*leg) }),
        );
    }
    exp.finish(json!({ "legs": legs }))
}

#[derive(Args, Debug)]
pub struct Learn {
    #[command(flatten)]
    body: Body,
    #[command(flatten)]
    learning: Learning,
    /// Legs to disable, e.g. `R1` or `R1,L2`.
    #[arg(long, default_value = "")]
    disable: String,
}

pub fn learn(a: &Learn, c: &Common) -> Result<PathBuf> {
    let format = check_format(c, &[Format::Csv, Format::Json], Format::Csv)?;
    let plant = plant(&a.body)?;
    let scenario = scenario(&plant, &a.disable)?;
    let cfg = learner_config(&a.learning, c.seed);
    let config = json!({ "plant": plant, "learner": learning_json(&a.learning), "scenario": scenario_json(&scenario) });
    let mut exp = Experiment::create("learn", config, c.seed, c.out.as_deref(), &c.out_root)?;
    let trace = learn_scenario(&plant, &scenario, &cfg)?;
    exp.text("trace.csv", &trace.to_csv(plant.morphology))?;
    if format == Format::Json {
        exp.json("trace.json", serde_json::to_value(&trace)?)?;
    }
    exp.finish(json!({
        "outcome": trace.outcome,
        "exhausted": trace.exhausted,
        "evaluations": trace.evaluations,
        "final_periods": periods_json(&trace.final_periods),
        "final_deviation": trace.final_deviation,
        "walltime_s": estimate_walltime(trace.evaluations, plant.window),
    }))
}

#[derive(Args, Debug)]
pub struct Battery {
    #[command(flatten)]
    body: Body,
    #[command(flatten)]
    learning: Learning,
    #[arg(long, default_value_t = DEFAULT_REPEATS)]
    repeats: usize,
}

pub fn battery(a: &Battery, c: &Common) -> Result<PathBuf> {
    let format = check_format(c, &[Format::Csv, Format::Json], Format::Csv)?;
    let plant = plant(&a.body)?;
    let cfg = learner_config(&a.learning, c.seed);
    let config = json!({ "plant": plant, "learner": learning_json(&a.learning), "repeats": a.repeats });
    let mut exp = Experiment::create("battery", config, c.seed, c.out.as_deref(), &c.out_root)?;
    let report = run_battery(&plant, plant.morphology, &cfg, a.repeats)?;
    exp.text("battery.csv", &report.to_csv(plant.window))?;
    if format == Format::Json {
        let mut v = serde_json::to_value(&report)?;
        v["beta"] = beta_json(report.beta);
        exp.json("battery.json", v)?;
    }
    let flagged: Vec<String> = report.rows.iter().filter(|r| r.flagged).map(|r| mcpg_core::plant::disabled_label(&r.disabled)).collect();
    exp.finish(json!({ "rows": report.rows.len(), "flagged": flagged, "note": report.note }))
}

#[derive(Args, Debug)]
pub struct SweepBeta {
    #[command(flatten)]
    body: Body,
    /// Legs to disable, e.g. `R1,R3,L2`.
    #[arg(long)]
    disable: String,
    /// Comma-separated annealing factors; `inf` is strict greedy.
    #[arg(long, default_value = "0,0.5,1,2,inf", value_delimiter = ',', value_parser = crate::parse_beta)]
    betas: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    runs: usize,
    #[arg(long, default_value_t = 8.0)]
    e_req: f64,
    #[arg(long, default_value_t = 200)]
    max_trials: usize,
}

pub fn sweep_beta(a: &SweepBeta, c: &Common) -> Result<PathBuf> {
    let format = check_format(c, &[Format::Csv, Format::Json], Format::Csv)?;
    let plant = plant(&a.body)?;
    let scenario = scenario(&plant, &a.disable)?;
    let base = LearnerConfig { e_req: a.e_req, max_trials: a.max_trials, seed: c.seed, ..LearnerConfig::default() };
    let config = json!({
        "plant": plant, "scenario": scenario_json(&scenario), "runs": a.runs, "e_req": a.e_req,
        "max_trials": a.max_trials, "betas": a.betas.iter().map(|&b| beta_json(b)).collect::<Vec<_>>(),
    });
    let mut exp = Experiment::create("sweep-beta", config, c.seed, c.out.as_deref(), &c.out_root)?;
    let rows = sweep(&plant, &scenario, &a.betas, a.runs, &base)?;
    exp.text("sweep.csv", &sweep_csv(&rows))?;
    let mut v = serde_json::to_value(&rows)?;
    for (row, r) in v.as_array_mut().expect("rows serialise to an array").iter_mut().zip(&rows) {
        row["beta"] = beta_json(r.beta);
    }
    if format == Format::Json {
        exp.json("sweep.json", v.clone())?;
    }
    exp.finish(json!({ "rows": v }))
}

#[derive(Args, Debug)]
pub struct Lyapunov {
    #[arg(long, default_value_t = 100_000)]
    steps: usize,
    /// Initial state `x1,x2`.
    #[arg(long, value_parser = parse_init)]
    init: Option<(f64, f64)>,
    /// Draw the initial state from the seed.
    #[arg(long, conflicts_with = "init")]
    random_init: bool,
}

pub fn lyapunov(a: &Lyapunov, c: &Common) -> Result<PathBuf> {
    let format = check_format(c, &[Format::Csv, Format::Json], Format::Csv)?;
    let init = initial_state(a.init, a.random_init, c.seed);
    let config = json!({ "steps": a.steps, "init": [init.x1, init.x2], "params": CpgParams::default() });
    let mut exp = Experiment::create("lyapunov", config, c.seed, c.out.as_deref(), &c.out_root)?;
    let estimate = lyapunov_estimate(&CpgParams::default(), a.steps, init);
    exp.text("lyapunov.csv", &format!("x1,x2,steps,exponent\n{},{},{},{}\n", init.x1, init.x2, a.steps, estimate))?;
    if format == Format::Json {
        exp.json("lyapunov.json", json!({ "init": [init.x1, init.x2], "steps": a.steps, "exponent": estimate }))?;
    }
    exp.finish(json!({ "exponent": estimate }))
}
