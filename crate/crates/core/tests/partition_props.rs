use nalgebra::DMatrix;
use proptest::prelude::*;

use gsched::baselines::{sfrob_partition, srel_partition, SrelOptions};
use gsched::graph::random_sensor_graph;
use gsched::partition::{hierarchical_partition, partition_trace_sum, PdcaConfig};
use gsched::signals::{heat_dictionary, SubspaceDictionary};

fn check_cover(labels: &[usize], n_subsets: usize) {
    let mut counts = vec![0usize; n_subsets];
    for &l in labels {
        counts[l] += 1;
    }
    let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
    assert!(hi - lo <= 1, "unbalanced {counts:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_partitioner_is_balanced(seed in 0u64..10_000, n in 8usize..40, levels in 1u32..3) {
        let g = random_sensor_graph(n, 2, 4, seed).unwrap();
        let a = heat_dictionary(&g.gft_basis().unwrap(), 2.0).unwrap();
        let k = 1usize << levels;
        prop_assume!(k <= n);

        let cfg = PdcaConfig { seed, max_iters: 500, ..PdcaConfig::default() };
        let p = hierarchical_partition(&a, levels, &cfg).unwrap();
        check_cover(&p.labels(), k);
        let total = a.matrix().norm_squared();
        prop_assert!((partition_trace_sum(&a, &p) - total).abs() <= 1e-10 * total);

        check_cover(&sfrob_partition(&a, k).unwrap().labels(), k);
        check_cover(&srel_partition(&g, k, seed, SrelOptions::default()).unwrap().labels(), k);
    }

    #[test]
    fn partition_is_invariant_to_dictionary_sign(seed in 0u64..1000) {
        let g = random_sensor_graph(12, 2, 4, seed).unwrap();
        let a = heat_dictionary(&g.gft_basis().unwrap(), 1.0).unwrap();
        let neg = SubspaceDictionary::new(-a.matrix()).unwrap();
        let cfg = PdcaConfig { seed, ..PdcaConfig::default() };
        // the objective depends on A only through (AAᵀ)∘(AAᵀ)
        prop_assert_eq!(
            hierarchical_partition(&a, 1, &cfg).unwrap().labels(),
            hierarchical_partition(&neg, 1, &cfg).unwrap().labels()
        );
    }
}

#[test]
fn rejects_too_many_subsets() {
    let a = SubspaceDictionary::new(DMatrix::identity(4, 4)).unwrap();
    assert!(hierarchical_partition(&a, 3, &PdcaConfig::default()).is_err());
    assert!(sfrob_partition(&a, 5).is_err());
}
