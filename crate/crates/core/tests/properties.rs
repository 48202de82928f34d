use proptest::prelude::*;

use pecc_core::container::{adjust_container, AdjustConfig};
use pecc_core::energy::{total_energy, total_energy_with};
use pecc_core::gbo::{gbo_run, GboConfig};
use pecc_core::neighbor::{build_neighbors, build_neighbors_brute_force};
use pecc_core::partition::PartitionStrategy;
use pecc_core::rng::{seeded, stream};
use pecc_core::sed::{perturb, select, softmax_probabilities};
use pecc_core::{check_feasibility, random_layout, Solution};

fn strategy() -> impl Strategy<Value = PartitionStrategy> {
    prop::sample::select(PartitionStrategy::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn grid_table_matches_brute_force(n in 1usize..80, seed in any::<u64>(), l_cut in 2.0f64..6.0) {
        let layout = random_layout(n, (n as f64).sqrt() + 1.0, &mut seeded(seed)).unwrap();
        let fast = build_neighbors(&layout, l_cut);
        let slow = build_neighbors_brute_force(&layout, l_cut);
        prop_assert_eq!(fast.to_lists(), slow.to_lists());
    }

    #[test]
    fn table_energy_is_exact(n in 1usize..60, seed in any::<u64>()) {
        let r = (n as f64).sqrt();
        let layout = random_layout(n, r, &mut seeded(seed)).unwrap();
        let table = build_neighbors(&layout, 2.0);
        prop_assert_eq!(total_energy_with(&layout, r, Some(&table)).unwrap(), total_energy(&layout, r));
    }

    #[test]
    fn optimizer_never_raises_energy(n in 2usize..40, k in 1usize..5, s in strategy(), seed in any::<u64>()) {
        let r = (n as f64 / 0.85).sqrt();
        let layout = random_layout(n, r, &mut stream(seed, 0)).unwrap();
        let cfg = GboConfig { k: k.min(n), strategy: s, max_iter: 200, ..GboConfig::default() };
        let out = gbo_run(&layout, r, &cfg, &mut stream(seed, 1)).unwrap();
        prop_assert!(total_energy(&out.layout, r) <= total_energy(&layout, r));
        prop_assert_eq!(out.hessian_entries, out.partition.hessian_entries());
    }

    #[test]
    fn adjusted_solutions_are_feasible(n in 1usize..9, seed in any::<u64>()) {
        let r = (n as f64).sqrt() + 0.5;
        let layout = random_layout(n, r, &mut seeded(seed)).unwrap();
        if let Ok(out) = adjust_container(&layout, r, &AdjustConfig::default()) {
            let s = &out.solution;
            prop_assert!(check_feasibility(&s.layout, s.radius, 1e-9).feasible);
            prop_assert!(s.energy <= 1e-12);
            prop_assert_eq!(out.radius_trace.len(), 35);
        }
    }

    #[test]
    fn solution_text_round_trips(n in 1usize..30, seed in any::<u64>(), r in 0.5f64..50.0) {
        let s = Solution::new(random_layout(n, r, &mut seeded(seed)).unwrap(), r);
        let back = Solution::from_text(&s.to_text()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn perturbation_stays_in_range(n in 1usize..30, seed in any::<u64>(), range in 0.01f64..2.0) {
        let layout = random_layout(n, 5.0, &mut seeded(seed)).unwrap();
        let moved = perturb(&layout, range, &mut seeded(seed ^ 1));
        for (a, b) in moved.coords().iter().zip(layout.coords()) {
            prop_assert!((a - b).abs() < range);
        }
    }

    #[test]
    fn selection_is_valid(energies in prop::collection::vec(1e-20f64..1e3, 1..12), current in 1e-20f64..1e3, seed in any::<u64>()) {
        let pick = select(&energies, current, &mut seeded(seed)).unwrap();
        prop_assert!(pick < energies.len());
        let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
        if min < current {
            prop_assert_eq!(energies[pick], min);
        }
        let p = softmax_probabilities(&energies).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
