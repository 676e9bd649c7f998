mod common;

use dgl_core::dsl::load;
use dgl_core::engine::{Engine, InferenceOptions, DEFAULT_CAP};
use dgl_core::train::{grad, loss, Batch, ParamStore, TrainingExample};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64) -> (dgl_core::dsl::CheckedProgram, Engine, ParamStore) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src = common::random_program(&mut rng);
    let p = load(&src).unwrap_or_else(|e| panic!("{e}\n{src}"));
    let e = Engine::new(&p).unwrap();
    let s = ParamStore::init(&p, seed);
    (p, e, s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn marginals_match_all_facts_oracle(seed in any::<u64>()) {
        let (p, e, s) = instance(seed);
        let opts = InferenceOptions::default();
        for q in common::query_atoms(&p) {
            let got = e.marginal(&q, &s, &opts).unwrap().probability;
            let (want, _) = common::brute_force(&p, &s, &q, None);
            prop_assert!((got - want).abs() <= 1e-9, "{q}: {got} vs {want}");
        }
    }

    #[test]
    fn conditionals_match_oracle_and_respect_evidence(seed in any::<u64>()) {
        let (p, e, s) = instance(seed);
        let opts = InferenceOptions::default();
        let qs = common::query_atoms(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        for _ in 0..4 {
            let q = &qs[rng.gen_range(0..qs.len())];
            let ev = &qs[rng.gen_range(0..qs.len())];
            let (joint, pe) = common::brute_force(&p, &s, q, Some(ev));
            prop_assert!(joint <= pe + 1e-12);
            match e.conditional(q, ev, &s, &opts) {
                Ok(r) => prop_assert!((r.probability - joint / pe).abs() <= 1e-9),
                Err(_) => prop_assert!(pe <= 1e-15),
            }
        }
    }

    #[test]
    fn world_weights_normalize(seed in any::<u64>()) {
        let (p, e, s) = instance(seed);
        for q in common::query_atoms(&p) {
            let plan = e.plan(&q, None, DEFAULT_CAP).unwrap();
            prop_assert!((e.total_mass(&plan, &s).unwrap() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn cache_is_transparent(seed in any::<u64>()) {
        let (p, e, s) = instance(seed);
        let on = InferenceOptions::default();
        let off = InferenceOptions { cache: false, ..on };
        for q in common::query_atoms(&p) {
            let a = e.marginal(&q, &s, &on).unwrap();
            let b = e.marginal(&q, &s, &off).unwrap();
            prop_assert!((a.probability - b.probability).abs() <= 1e-12);
            prop_assert!(a.distinct_gnn_evaluations <= b.distinct_gnn_evaluations);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn loss_gradient_matches_finite_differences(seed in any::<u64>()) {
        let (p, e, s) = instance(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let qs = common::query_atoms(&p);
        let examples: Vec<TrainingExample> = (0..3)
            .map(|_| TrainingExample::new(qs[rng.gen_range(0..qs.len())].clone(), rng.gen_range(0.0..1.0)))
            .collect();
        let b = Batch::new(&e, examples, DEFAULT_CAP).unwrap();
        let (_, g) = grad(&b, &e, &s).unwrap();
        let analytic = g.to_flat();
        let base = s.to_flat();
        let eps = 1e-4;
        for i in 0..base.len() {
            let mut v = base.clone();
            v[i] += eps;
            let mut plus = s.clone();
            plus.set_flat(&v);
            v[i] -= 2.0 * eps;
            let mut minus = s.clone();
            minus.set_flat(&v);
            let num = (loss(&b, &e, &plus).unwrap() - loss(&b, &e, &minus).unwrap()) / (2.0 * eps);
            let diff = (num - analytic[i]).abs();
            prop_assert!(diff / num.abs().max(analytic[i].abs()) < 1e-3 || diff < 1e-9, "coord {}: {} vs {}", i, num, analytic[i]);
        }
    }
}
