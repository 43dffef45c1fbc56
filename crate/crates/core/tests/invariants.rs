use proptest::prelude::*;
use tgdp_core::audit::exact_statistic_audit;
use tgdp_core::bounds::{
    greedy_dominating_set, greedy_sqrt_packing, is_dominating, is_maximal_packing, maximal_packing,
    maximal_robust_packing, rounded_robust_packing, validate_robust_packing, PackingOrder,
};
use tgdp_core::graph::fixtures::gnp;
use tgdp_core::lp::{robust_dual_multipliers, solve_packing_dual};
use tgdp_core::noise::privacy_ratio;
use tgdp_core::protocol::{decode_mod, run_lp_protocol, split_input, Estimate, NoiseMode};
use tgdp_core::rng::seeded;
use tgdp_core::{make_threshold, solve_cover, solve_robust_cover, NoiseDist, ThresholdVector, TrustGraph};

fn graph() -> impl Strategy<Value = TrustGraph> {
    (2usize..10, 0.1f64..0.8, any::<u64>()).prop_map(|(n, p, seed)| gnp(n, p, &mut seeded(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn json_round_trip(g in graph()) {
        let back = TrustGraph::from_json_str(&g.to_json_string()).unwrap();
        prop_assert_eq!(&back, &g);
        for v in 0..g.n() {
            for &u in g.neighbors(v) {
                prop_assert!(g.has_edge(u, v) && u != v);
            }
        }
    }

    #[test]
    fn lp_duality_and_sandwich(g in graph()) {
        let cover = solve_cover(&g).unwrap();
        let dual = solve_packing_dual(&g).unwrap();
        prop_assert!(cover.is_feasible(&g, None));
        prop_assert!(dual.is_feasible(&g, 1e-9));
        prop_assert!((cover.objective - dual.objective).abs() < 1e-7);
        prop_assert!(cover.objective >= 1.0 - 1e-9 && cover.objective <= g.n() as f64 + 1e-9);
        let packing = maximal_packing(&g, &PackingOrder::default());
        prop_assert!(is_maximal_packing(&g, &packing.vertices));
        prop_assert!(packing.size() as f64 <= cover.objective + 1e-9);
        let domset = greedy_dominating_set(&g);
        prop_assert!(is_dominating(&g, &domset.vertices));
        prop_assert!(cover.objective <= domset.size() as f64 + 1e-9);
        let sqrt = greedy_sqrt_packing(&g);
        prop_assert!(sqrt.validate(&g));
        prop_assert!(sqrt.size() as f64 + 1e-9 >= cover.objective / (g.n() as f64).sqrt());
    }

    #[test]
    fn robust_lp_is_monotone(g in graph(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (tl, th) = (make_threshold(&g, lo).unwrap(), make_threshold(&g, hi).unwrap());
        prop_assert!(tl.le(&th));
        let (cl, ch) = (solve_robust_cover(&g, &tl).unwrap(), solve_robust_cover(&g, &th).unwrap());
        prop_assert!(cl.is_feasible(&g, Some(&tl)) && ch.is_feasible(&g, Some(&th)));
        prop_assert!(cl.objective <= ch.objective + 1e-7);
        // a robust-feasible cover also protects against fewer exclusions
        prop_assert!(ch.is_feasible(&g, Some(&tl)));
        let pl = maximal_robust_packing(&g, &tl, &PackingOrder::default()).unwrap();
        prop_assert!(validate_robust_packing(&g, &tl, &pl));
        prop_assert!(validate_robust_packing(&g, &th, &pl));
    }

    #[test]
    fn solver_covers_pass_audit(g in graph(), eps in 0.05f64..5.0, delta in 1u64..20, alpha in 0.0f64..0.75) {
        let t = make_threshold(&g, alpha).unwrap();
        let cover = solve_robust_cover(&g, &t).unwrap();
        let report = exact_statistic_audit(&g, &cover, eps, delta, Some(&t)).unwrap();
        prop_assert!(report.pass, "{:?}", report.failures().collect::<Vec<_>>());
    }

    #[test]
    fn rounding_validates(g in graph(), alpha in 0.05f64..0.95, seed in any::<u64>()) {
        let t = ThresholdVector::zeros(g.n());
        let dual = robust_dual_multipliers(&g, &t).unwrap();
        let cert = rounded_robust_packing(&g, &t, alpha, &dual, &mut seeded(seed)).unwrap();
        prop_assert!(validate_robust_packing(&g, &make_threshold(&g, alpha).unwrap(), &cert));
    }

    #[test]
    fn noiseless_protocol_is_exact(g in graph(), seed in any::<u64>(), delta in 1u64..8) {
        let cover = solve_cover(&g).unwrap();
        let mut rng = seeded(seed);
        let x: Vec<u64> = (0..g.n()).map(|v| (seed >> (v % 60)) % (delta + 1)).collect();
        let tr = run_lp_protocol(&g, &cover, &x, 1.0, delta, NoiseMode::Disabled, &mut rng).unwrap();
        prop_assert_eq!(tr.estimate.clone(), tr.truth());
        prop_assert_eq!(tr.decode(), tr.truth());
    }

    #[test]
    fn noisy_estimate_is_congruent(g in graph(), seed in any::<u64>()) {
        let cover = solve_cover(&g).unwrap();
        let x = vec![1; g.n()];
        let tr = run_lp_protocol(&g, &cover, &x, 0.5, 1, NoiseMode::Enabled, &mut seeded(seed)).unwrap();
        let q = tr.params.q.unwrap() as i64;
        let Estimate::Int(est) = tr.estimate else { unreachable!() };
        prop_assert_eq!((est - g.n() as i64 - tr.noise_total()).rem_euclid(q), 0);
        prop_assert!(2 * est <= q && 2 * est > -q);
    }

    #[test]
    fn shares_sum_to_input(x in 0u64..50, k in 1usize..12, seed in any::<u64>()) {
        let q = 100;
        let shares = split_input(x, k, q, &mut seeded(seed)).unwrap();
        prop_assert_eq!(shares.len(), k);
        prop_assert!(shares.iter().all(|&s| s < q));
        prop_assert_eq!(shares.iter().sum::<u64>() % q, x);
        prop_assert_eq!(decode_mod(x, q), x as i64);
    }

    #[test]
    fn pmf_is_normalized_and_symmetric(r in 0.05f64..6.0, p in 0.05f64..0.95) {
        let pmf = NoiseDist::snb(r, p).unwrap().certified_pmf();
        prop_assert!((pmf.total() + pmf.truncation_mass - 1.0).abs() < 1e-9);
        for k in 0..20 {
            prop_assert!((pmf.mass(k) - pmf.mass(-k)).abs() <= 1e-12 * pmf.mass(0));
        }
        prop_assert!((pmf.variance() - NoiseDist::snb(r, p).unwrap().variance()).abs() < 1e-6 * (1.0 + pmf.variance()));
    }

    #[test]
    fn enough_noise_is_private(r in 1.0f64..8.0, eps in 0.05f64..4.0, delta in 1u64..12) {
        prop_assert!(privacy_ratio(r, eps, delta).unwrap() <= eps + 1e-9);
    }
}
