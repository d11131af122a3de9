//! One master oscillator plus a client per remaining leg.
//!
//! A client with `alpha = 1` copies the master's first neuron and runs its
//! second neuron on the copied value, with its own control shunted. With
//! `alpha = 0` it is an independent controlled oscillator at its own period.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cpg::{sigmoid, ChaosControl, ControlLaw, ControlledCpg, CpgParams, CpgState};
use crate::error::{Error, Result};
use crate::legs::{LegId, Morphology};
use crate::check_gait_period;

/// Which master value a synchronised client copies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CopyTiming {
    /// The master's value computed in the same network step.
    #[default]
    SameStep,
    /// The master's value from the previous network step.
    Delayed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Client {
    leg: LegId,
    cpg: ControlledCpg,
    alpha: bool,
    period: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpgNetwork {
    morphology: Morphology,
    master: ControlledCpg,
    master_period: u32,
    clients: Vec<Client>,
    timing: CopyTiming,
    t: u64,
}

/// Snapshot of every oscillator after one network step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSample {
    pub t: u64,
    /// `(leg, x1, x2, alpha)` in morphology order; the master row has `alpha = None`.
    pub legs: Vec<(LegId, f64, f64, Option<bool>)>,
}

impl CpgNetwork {
    /// All legs at period 4, clients synchronised. The master starts from the
    /// default initial state; client states are drawn from `seed`.
    pub fn new(morphology: Morphology, params: CpgParams, law: ControlLaw, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let master = ControlledCpg::new(params, ChaosControl::with_law(4, law)?, CpgState::default())?;
        let clients = morphology
            .legs()
            .iter()
            .filter(|&&l| l != LegId::R1)
            .map(|&leg| {
                let init = CpgState::new(rng.random::<f64>(), rng.random::<f64>());
                Ok(Client {
                    leg,
                    cpg: ControlledCpg::new(params, ChaosControl::with_law(4, law)?, init)?,
                    alpha: true,
                    period: 4,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CpgNetwork { morphology, master, master_period: 4, clients, timing: CopyTiming::SameStep, t: 0 })
    }

    pub fn with_timing(mut self, timing: CopyTiming) -> Self {
        self.timing = timing;
        self
    }

    /// Overrides the initial state of one oscillator. Only meaningful before stepping.
    pub fn set_state(&mut self, leg: LegId, state: CpgState) -> Result<()> {
        if leg == LegId::R1 {
            self.master.state = state;
            return Ok(());
        }
        self.client_mut(leg)?.cpg.state = state;
        Ok(())
    }

    pub fn morphology(&self) -> Morphology {
        self.morphology
    }

    pub fn master(&self) -> &ControlledCpg {
        &self.master
    }

    pub fn state(&self, leg: LegId) -> Result<CpgState> {
        if leg == LegId::R1 {
            return Ok(self.master.state);
        }
        self.clients
            .iter()
            .find(|c| c.leg == leg)
            .map(|c| c.cpg.state)
            .ok_or_else(|| Error::InvalidArgument(format!("{leg} is not a leg of this network")))
    }

    pub fn alpha(&self, leg: LegId) -> Option<bool> {
        self.clients.iter().find(|c| c.leg == leg).map(|c| c.alpha)
    }

    pub fn periods(&self) -> BTreeMap<LegId, u32> {
        let mut m = BTreeMap::new();
        m.insert(LegId::R1, self.master_period);
        for c in &self.clients {
            m.insert(c.leg, c.period);
        }
        m
    }

    fn client_mut(&mut self, leg: LegId) -> Result<&mut Client> {
        if leg == LegId::R1 {
            return Err(Error::InvalidArgument("R1 carries the master oscillator, which has no sync gate".into()));
        }
        self.clients
            .iter_mut()
            .find(|c| c.leg == leg)
            .ok_or_else(|| Error::InvalidArgument(format!("{leg} is not a leg of this network")))
    }

    /// Opens or closes a client's sync gate. Closing it restarts the client's
    /// own controller from zero gain and empty memory.
    pub fn set_sync(&mut self, leg: LegId, on: bool) -> Result<()> {
        let client = self.client_mut(leg)?;
        if client.alpha && !on {
            client.cpg.control.reset();
        }
        client.alpha = on;
        Ok(())
    }

    /// Assigns periods. Clients whose period differs from the master's are
    /// desynchronised. A leg whose period changes gets a fresh controller.
    pub fn set_periods(&mut self, assignment: &BTreeMap<LegId, u32>) -> Result<()> {
        for (&leg, &p) in assignment {
            check_gait_period(p)?;
            if !self.morphology.has_leg(leg) {
                return Err(Error::InvalidArgument(format!("{leg} is not a leg of a {}", self.morphology)));
            }
        }
        if let Some(&p) = assignment.get(&LegId::R1) {
            if p != self.master_period {
                self.master.set_period(p as usize)?;
                self.master_period = p;
            }
        }
        let master_p = self.master_period;
        for client in &mut self.clients {
            if let Some(&p) = assignment.get(&client.leg) {
                if p != client.period {
                    client.cpg.set_period(p as usize)?;
                    client.period = p;
                }
            }
            if client.period != master_p && client.alpha {
                client.alpha = false;
                client.cpg.control.reset();
            }
        }
        Ok(())
    }

    pub fn step(&mut self) -> NetworkSample {
        let previous_master_x1 = self.master.state.x1;
        self.master.tick();
        let master_x1 = match self.timing {
            CopyTiming::SameStep => self.master.state.x1,
            CopyTiming::Delayed => previous_master_x1,
        };
        for client in &mut self.clients {
            if client.alpha {
                let s = client.cpg.state;
                let p = &client.cpg.params;
                let a2 = p.theta2 + p.w21 * s.x1 + p.w22 * s.x2;
                client.cpg.state = CpgState { x1: master_x1, x2: sigmoid(a2), t: s.t + 1 };
            } else {
                client.cpg.tick();
            }
        }
        self.t += 1;
        self.sample()
    }

    pub fn sample(&self) -> NetworkSample {
        let mut legs = vec![(LegId::R1, self.master.state.x1, self.master.state.x2, None)];
        legs.extend(self.clients.iter().map(|c| (c.leg, c.cpg.state.x1, c.cpg.state.x2, Some(c.alpha))));
        legs.sort_by_key(|row| self.morphology.legs().iter().position(|&l| l == row.0));
        NetworkSample { t: self.t, legs }
    }

    pub fn run(&mut self, steps: usize) -> Vec<NetworkSample> {
        (0..steps).map(|_| self.step()).collect()
    }
}

/// CSV with a `t` column, an `x1`/`x2` pair per leg and an `alpha` column per client.
pub fn network_csv(samples: &[NetworkSample]) -> String {
    let mut out = String::new();
    let Some(first) = samples.first() else {
        return out;
    };
    out.push('t');
    for (leg, ..) in &first.legs {
        out.push_str(&format!(",{leg}_x1,{leg}_x2"));
    }
    for (leg, _, _, a) in &first.legs {
        if a.is_some() {
            out.push_str(&format!(",{leg}_alpha"));
        }
    }
    out.push('\n');
    for s in samples {
        out.push_str(&s.t.to_string());
        for (_, x1, x2, _) in &s.legs {
            out.push_str(&format!(",{x1:e},{x2:e}"));
        }
        for (_, _, _, a) in &s.legs {
            if let Some(a) = a {
                out.push_str(if *a { ",1" } else { ",0" });
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net() -> CpgNetwork {
        CpgNetwork::new(Morphology::Hexapod, CpgParams::default(), ControlLaw::Blended, 7).unwrap()
    }

    #[test]
    fn master_has_no_gate() {
        let mut n = net();
        assert!(n.set_sync(LegId::R1, false).is_err());
        assert_eq!(n.alpha(LegId::R1), None);
    }

    #[test]
    fn synchronised_clients_copy_master() {
        let mut n = net();
        for _ in 0..50 {
            let s = n.step();
            let m = s.legs[0].1;
            assert!(s.legs.iter().all(|row| row.1.to_bits() == m.to_bits()));
        }
    }

    #[test]
    fn disallowed_period_rejected() {
        let mut n = net();
        let mut a = BTreeMap::new();
        a.insert(LegId::L2, 7);
        assert_eq!(n.set_periods(&a), Err(Error::UnsupportedPeriod(7)));
        a.insert(LegId::L2, 6);
        a.insert(LegId::R2, 5);
        n.set_periods(&a).unwrap();
        assert_eq!(n.alpha(LegId::L2), Some(false));
        assert_eq!(n.alpha(LegId::R3), Some(true));
    }

    #[test]
    fn toggling_is_idempotent() {
        let mut n = net();
        n.set_sync(LegId::L1, true).unwrap();
        n.set_sync(LegId::L1, true).unwrap();
        assert_eq!(n.alpha(LegId::L1), Some(true));
        n.set_sync(LegId::L1, false).unwrap();
        n.set_sync(LegId::L1, false).unwrap();
        assert_eq!(n.alpha(LegId::L1), Some(false));
    }

    #[test]
    fn csv_has_pairs_and_alphas() {
        let mut n = CpgNetwork::new(Morphology::Quadruped, CpgParams::default(), ControlLaw::Blended, 1).unwrap();
        let csv = network_csv(&n.run(3));
        let header = csv.lines().next().unwrap();
        assert_eq!(header, "t,R1_x1,R1_x2,R2_x1,R2_x2,L1_x1,L1_x2,L2_x1,L2_x2,R2_alpha,L1_alpha,L2_alpha");
        assert_eq!(csv.lines().count(), 4);
    }
}
