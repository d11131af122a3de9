use std::collections::{BTreeMap, BTreeSet, HashSet};

use mcpg_core::gait::gait_trace;
use mcpg_core::learner::Periods;
use mcpg_core::*;
use proptest::prelude::*;
use proptest::sample::{select, subsequence};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn gait_period() -> impl Strategy<Value = u32> {
    select(GAIT_PERIODS.to_vec())
}

fn search_period() -> impl Strategy<Value = u32> {
    select(SEARCH_PERIODS.to_vec())
}

/// A hexapod scenario with 0 to 3 disabled legs and random periods.
fn scenario() -> impl Strategy<Value = Scenario> {
    (subsequence(LegId::ALL.to_vec(), 0..=3), proptest::collection::vec(search_period(), 6)).prop_map(|(dis, ps)| {
        let disabled: BTreeSet<LegId> = dis.into_iter().collect();
        let periods = LegId::ALL
            .iter()
            .zip(ps)
            .filter(|(l, _)| !disabled.contains(l))
            .map(|(&l, p)| (l, p))
            .collect();
        Scenario { disabled, periods }
    })
}

fn dphi(s: &Scenario) -> f64 {
    simulate_window(&PlantConfig::default(), s, 0).unwrap().delta_phi
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn map_stays_in_unit_square(x1 in 0.0..1.0f64, x2 in 0.0..1.0f64, c1 in -5.0..5.0f64, c2 in -5.0..5.0f64) {
        let s = step(&CpgState::new(x1, x2), &CpgParams::default(), c1, c2).unwrap();
        prop_assert!((0.0..=1.0).contains(&s.x1) && (0.0..=1.0).contains(&s.x2));
    }

    #[test]
    fn controlled_runs_are_reproducible(x1 in 0.0..1.0f64, x2 in 0.0..1.0f64, p in gait_period()) {
        let a = run_controlled(&CpgParams::default(), p as usize, 300, CpgState::new(x1, x2)).unwrap();
        let b = run_controlled(&CpgParams::default(), p as usize, 300, CpgState::new(x1, x2)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn synchronised_clients_track_master_bitwise(seed in any::<u64>(), steps in 2usize..200) {
        let mut net = CpgNetwork::new(Morphology::Hexapod, CpgParams::default(), ControlLaw::default(), seed).unwrap();
        for _ in 0..steps {
            let s = net.step();
            prop_assert!(s.legs.iter().all(|row| row.1.to_bits() == s.legs[0].1.to_bits()));
        }
    }

    // x2 can only match once the master's own control input has died out.
    #[test]
    fn locked_master_shares_its_second_neuron(seed in any::<u64>()) {
        let mut net = CpgNetwork::new(Morphology::Hexapod, CpgParams::default(), ControlLaw::default(), seed).unwrap();
        net.run(2000);
        for s in net.run(100) {
            prop_assert!(s.legs.iter().all(|row| row.2.to_bits() == s.legs[0].2.to_bits()));
        }
    }

    #[test]
    fn sync_toggle_is_idempotent(seed in any::<u64>(), on in any::<bool>(), leg in select(LegId::ALL[1..].to_vec())) {
        let mut net = CpgNetwork::new(Morphology::Hexapod, CpgParams::default(), ControlLaw::default(), seed).unwrap();
        net.set_sync(leg, on).unwrap();
        let once = net.clone();
        net.set_sync(leg, on).unwrap();
        prop_assert_eq!(net, once);
    }

    #[test]
    fn every_leg_repeats_with_its_cycle(periods in proptest::collection::vec(gait_period(), 6)) {
        let assignment: BTreeMap<LegId, u32> = LegId::ALL.iter().copied().zip(periods).collect();
        let trace = gait_trace(&assignment, 400, &GaitConfig::default()).unwrap();
        for (leg, row) in trace.legs.iter().zip(&trace.stance) {
            let t = 8 * assignment[leg] as usize;
            prop_assert!((t..row.len()).all(|k| row[k] == row[k - t]));
            if assignment[leg] == 1 {
                prop_assert!(row.iter().all(|&s| s));
            }
        }
    }

    #[test]
    fn tripod_groups_alternate(offset in 0usize..320) {
        let all4: BTreeMap<LegId, u32> = LegId::ALL.iter().map(|&l| (l, 4)).collect();
        let trace = gait_trace(&all4, offset + 64, &GaitConfig::default()).unwrap();
        for k in offset..offset + 64 {
            let a = trace.row(LegId::R1).unwrap()[k];
            prop_assert_eq!(trace.row(LegId::R3).unwrap()[k], a);
            prop_assert_eq!(trace.row(LegId::L2).unwrap()[k], a);
            for leg in [LegId::R2, LegId::L1, LegId::L3] {
                prop_assert_eq!(trace.row(leg).unwrap()[k], !a);
            }
        }
    }

    #[test]
    fn mirror_negates_deviation(s in scenario()) {
        prop_assert_eq!(dphi(&mirror(&s)), -dphi(&s));
        prop_assert_eq!(mirror(&mirror(&s)), s);
    }

    #[test]
    fn symmetric_bodies_walk_straight(ps in proptest::collection::vec(gait_period(), 3), off in subsequence(vec![1usize, 2, 3], 0..=2)) {
        let mut disabled = BTreeSet::new();
        let mut periods = BTreeMap::new();
        for seg in 1..=3 {
            for side in [Side::Right, Side::Left] {
                let leg = LegId::from_parts(side, seg).unwrap();
                if off.contains(&seg) {
                    disabled.insert(leg);
                } else {
                    periods.insert(leg, ps[seg - 1]);
                }
            }
        }
        let d = dphi(&Scenario { disabled, periods });
        prop_assert!(d.abs() < 1e-9);
    }

    #[test]
    fn raising_a_left_period_never_turns_left(s in scenario(), leg in select(vec![LegId::L1, LegId::L2, LegId::L3]), up in search_period()) {
        prop_assume!(s.periods.contains_key(&leg) && up > s.periods[&leg]);
        let mut raised = s.clone();
        raised.periods.insert(leg, up);
        prop_assert!(dphi(&raised) >= dphi(&s));
    }

    #[test]
    fn plant_is_deterministic(s in scenario(), seed in any::<u64>(), noise in 0.0..1.0f64) {
        let cfg = PlantConfig { noise, ..PlantConfig::default() };
        prop_assert_eq!(simulate_window(&cfg, &s, seed).unwrap(), simulate_window(&cfg, &s, seed).unwrap());
    }

    #[test]
    fn improvements_are_always_accepted(delta in -100.0..0.0f64, beta in 0.0..50.0f64, x in 0.0..=1.0f64) {
        prop_assert!(accept(delta, beta, x));
        prop_assert!(accept(-delta, 0.0, x));
    }

    #[test]
    fn proposals_change_one_functional_leg(s in scenario(), seed in any::<u64>()) {
        let functional = s.functional();
        prop_assume!(!functional.is_empty());
        let current: Periods = s.periods.clone();
        let history: HashSet<Periods> = [current.clone()].into_iter().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let next = propose(&current, &history, &functional, &mut rng).unwrap();
        prop_assert_eq!(next.keys().collect::<Vec<_>>(), current.keys().collect::<Vec<_>>());
        prop_assert_eq!(current.iter().filter(|(l, p)| next[l] != **p).count(), 1);
    }

    #[test]
    fn learning_bookkeeping(s in scenario(), seed in any::<u64>(), beta in select(vec![0.0, 0.5, 3.0, f64::INFINITY])) {
        prop_assume!(!s.functional().is_empty());
        let cfg = LearnerConfig { beta, seed, max_trials: 150, ..Default::default() };
        let t = learn(&PlantConfig::default(), &s, &cfg).unwrap();
        let mut seen = HashSet::new();
        let mut kept = t.initial.clone();
        for r in &t.records {
            prop_assert!(s.disabled.iter().all(|l| !r.periods.contains_key(l)));
            match r.deviation {
                Some(_) => prop_assert!(seen.insert(r.periods.clone()), "evaluated twice"),
                None => prop_assert!(seen.contains(&r.periods)),
            }
            let changed = kept.iter().filter(|(l, p)| r.periods[l] != **p).count();
            if r.deviation.is_none() {
                prop_assert!(changed <= 1);
            } else if r.n > 1 {
                prop_assert_eq!(changed, 1);
            }
            if r.decision.is_kept() {
                kept = r.periods.clone();
            }
        }
        prop_assert_eq!(&kept, &t.final_periods);
        prop_assert_eq!(t.evaluations, t.evaluated().count());
        prop_assert!(t.evaluations <= cfg.max_trials);
        if t.converged() {
            prop_assert!(t.evaluated().last().unwrap().deviation.unwrap().abs() < cfg.e_req);
            prop_assert!(t.final_deviation.abs() < cfg.e_req);
        }
    }
}

#[test]
fn acceptance_frequency_tracks_probability() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for (delta, beta) in [(0.4, 0.5), (2.0, 0.5), (1.0, 3.0)] {
        let p = f64::exp(-beta * delta);
        let n = 100_000;
        let hits = (0..n).filter(|_| accept(delta, beta, rng.random::<f64>())).count();
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() < 3.0 * se, "delta {delta} beta {beta}");
    }
}
