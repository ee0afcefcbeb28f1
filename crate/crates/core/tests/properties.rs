use d2dcache_core::kernels::{departure_count_pmf, DeathProcessKernel, TruncationPolicy};
use d2dcache_core::{analyze, cached_file_count, CodeParams, PopularityModel, RequestSnapshot, StorageBudget, SystemParams};
use proptest::prelude::*;

fn params(n_c: f64, delta: f64, t_d: f64, t_bs: f64) -> SystemParams {
    SystemParams {
        devices: None,
        clusters: None,
        mean_devices: 30.0,
        storage_nodes: None,
        mean_storage: n_c,
        lambda: 1.0,
        mu: 1.0,
        omega: 0.02,
        delta,
        t_d,
        t_bs,
        allow_rate_mismatch: false,
    }
}

proptest! {
    #[test]
    fn theta_is_a_distribution(g in 0usize..60, mu_w in 0.0f64..3.0) {
        let kernel = DeathProcessKernel::new(1.0, mu_w);
        let total: f64 = (0..=g).map(|d| departure_count_pmf(d, g, &kernel)).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zipf_is_nonincreasing(z in 1usize..400, sigma in 0.0f64..2.5) {
        let m = PopularityModel::new(z, sigma, 0).unwrap();
        let p: Vec<f64> = (1..=z).map(|i| m.zipf_pmf(i).unwrap()).collect();
        prop_assert!(p.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hit_probability_monotone(z in 2usize..500, f in 1usize..500, sigma in 0.0f64..2.0, ds in 0.0f64..0.5) {
        let f = f.min(z);
        let base = PopularityModel::new(z, sigma, f).unwrap().hit_probability();
        let more_files = PopularityModel::new(z, sigma, (f + 1).min(z)).unwrap().hit_probability();
        let steeper = PopularityModel::new(z, sigma + ds, f).unwrap().hit_probability();
        prop_assert!(more_files >= base);
        prop_assert!(steeper >= base - 1e-12);
    }

    #[test]
    fn cached_files_monotone_in_k(cap in 1.0f64..1e4, file in 1.0f64..1e3, z in 1usize..2000, k in 1u32..30) {
        let budget = StorageBudget { file_size_bits: file, capacity_bits: cap, library_size: z };
        let a = cached_file_count(&budget, &CodeParams::new(3 * k, k));
        let b = cached_file_count(&budget, &CodeParams::new(3 * k + 3, k + 1));
        prop_assert!(a <= b && b <= z);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn snapshots_are_normalized(n_c in 1.0f64..16.0, delta in 0.02f64..6.0) {
        let s = RequestSnapshot::build(&params(n_c, delta, 0.02, 0.2), &TruncationPolicy::default()).unwrap();
        for v in [&s.px1, &s.pq, &s.pv] {
            prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
        for post in s.px1_given_r.iter().flatten() {
            prop_assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
        prop_assert!(s.mean_x1 <= s.mean_q + 1e-9);
        prop_assert!((0.0..=1.0).contains(&s.p_r1));
    }

    #[test]
    fn delay_never_exceeds_reference(k in 1u32..6, delta in 0.0f64..5.0, ratio in 1.0f64..1000.0, sigma in 0.0f64..1.5, f in 0usize..=100) {
        let n_c = f64::from(3 * k);
        let t_bs = 1.0 / f64::from(k);
        let p = params(n_c, delta, t_bs / ratio, t_bs);
        let pop = PopularityModel::new(100, sigma, f).unwrap();
        let a = analyze(&p, &CodeParams::new(3 * k, k), &pop, &TruncationPolicy::default()).unwrap();
        prop_assert!(a.delay.tbar_dw <= a.delay.t_ref * (1.0 + 1e-9));
        prop_assert!(a.delay.speedup >= 1.0 - 1e-9);
        for o in a.outcomes.by_type.iter().flatten() {
            prop_assert!((o.total() - 1.0).abs() < 0.02);
        }
    }
}
