use gfvi_core::cdi::{phi, psi, zeta};
use gfvi_core::coalescent::{simulate_events, Direction};
use gfvi_core::exact::{
    generator_decomposed, generator_eq1, phi_functional, rate_matrix, transition_probs, DualEngine, PartitionSpace,
};
use gfvi_core::gfvi::{assign_types, population_at, types_at, InitialLaw};
use gfvi_core::measure::AtomSpec;
use gfvi_core::{AtomicMeasure, CoagulationMeasure, DistinguishedPartition, Factor, MeasureSpec, MomentFunctional};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_mass() -> impl Strategy<Value = (f64, Vec<f64>)> {
    (0.0f64..1.0, prop::collection::vec(0.0f64..1.0, 0..3), 1.0f64..2.0).prop_map(|(s0, mut s, slack)| {
        let total = (s0 + s.iter().sum::<f64>()) * slack + 1e-9;
        s.iter_mut().for_each(|x| *x /= total);
        s.sort_by(|a, b| b.total_cmp(a));
        (s0 / total, s)
    })
}

fn arb_measure() -> impl Strategy<Value = CoagulationMeasure> {
    (
        prop_oneof![Just(0.0), 0.0f64..1.5],
        prop_oneof![Just(0.0), 0.0f64..1.5],
        prop::collection::vec((0.1f64..2.0, arb_mass()), 0..3),
    )
        .prop_filter_map("atom without mass", |(c0, c1, atoms)| {
            MeasureSpec {
                c0,
                c1,
                atoms: atoms
                    .into_iter()
                    .map(|(weight, (s0, s))| AtomSpec { weight, s0, s })
                    .collect(),
            }
            .build()
            .ok()
        })
}

fn arb_rho() -> impl Strategy<Value = AtomicMeasure> {
    prop::collection::vec((0.05f64..1.0, 0.1f64..1.0), 1..4).prop_map(|a| AtomicMeasure::new(&a).unwrap())
}

fn arb_functional(p: usize) -> impl Strategy<Value = MomentFunctional> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 1..4), p)
        .prop_map(|coefs| MomentFunctional::new(coefs.into_iter().map(Factor::Polynomial).collect()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jump_rates_are_exchangeable(mu in arb_measure(), labels in prop::collection::vec(0usize..4, 4), seed in any::<u64>()) {
        let mut l = vec![0];
        l.extend(labels);
        let pi = DistinguishedPartition::from_labels(&l).unwrap();
        // relabel {1,...,4} by a rotation chosen from the seed
        let r = (seed % 4) as usize;
        let mut rotated = vec![0];
        rotated.extend((1..=4).map(|k| l[(k - 1 + r) % 4 + 1]));
        let sigma = DistinguishedPartition::from_labels(&rotated).unwrap();
        let (a, b) = (mu.jump_rate(&pi).unwrap(), mu.jump_rate(&sigma).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
    }

    #[test]
    fn semigroup_rows_are_stochastic(mu in arb_measure(), p in 1usize..4, t in 0.0f64..3.0) {
        let space = PartitionSpace::enumerate(p).unwrap();
        let q = rate_matrix(&mu, &space).unwrap();
        let pt = transition_probs(&q, t).unwrap();
        for i in 0..pt.dim() {
            let row = pt.row(i);
            prop_assert!(row.iter().all(|&x| x >= -1e-12));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        // the single block absorbs
        let a = space.single_block_index();
        prop_assert!((pt.get(a, a) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dual_at_time_zero_is_the_functional(mu in arb_measure(), rho in arb_rho(), f in arb_functional(2), labels in prop::collection::vec(0usize..3, 2)) {
        let mut l = vec![0];
        l.extend(labels);
        let pi = DistinguishedPartition::from_labels(&l).unwrap();
        let engine = DualEngine::new(&mu, 2).unwrap();
        let a = engine.dual_expectation(&pi, &rho, &f, 0.0).unwrap();
        let b = phi_functional(&rho, &pi, &f).unwrap();
        prop_assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
    }

    #[test]
    fn generator_forms_agree(mu in arb_measure(), rho in arb_rho(), f in (1usize..4).prop_flat_map(arb_functional)) {
        let a = generator_eq1(&mu, &rho, &f).unwrap();
        let b = generator_decomposed(&mu, &rho, &f).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{} vs {}", a, b);
    }

    #[test]
    fn laplace_exponents_are_ordered(mu in arb_measure(), q in 1.0f64..1e4) {
        let (f, s, z) = (phi(&mu, q), psi(&mu, q), zeta(&mu, q));
        prop_assert!(f >= 0.0 && s >= 0.0 && z >= 0.0);
        prop_assert!(z <= s * (1.0 + 1e-12) + 1e-12);
        prop_assert!(phi(&mu, q + 1.0) >= f);
    }

    #[test]
    fn streamed_population_matches_folded_log(mu in arb_measure(), seed in any::<u64>(), t in 0.0f64..1.5) {
        let law = InitialLaw::Uniform;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let types = assign_types(6, &law, &mut rng).unwrap();
        let mut a = rng.clone();
        let mut b = rng;
        let log = simulate_events(&mu, 6, t, &mut a).unwrap();
        let folded = types_at(&log, &types, t).unwrap();
        let streamed = population_at(&mu, &types, t, &mut b).unwrap();
        prop_assert_eq!(folded, streamed);
        // the forward fold never splits blocks
        let traj = log.trajectory(Direction::Forward).unwrap();
        prop_assert!(traj.block_counts().windows(2).all(|w| w[1] <= w[0]));
    }
}
