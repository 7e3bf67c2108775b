mod common;

use common::*;
use entropic_bespoke::basecorr::BaseCorrCurve;
use entropic_bespoke::calibration::{DualProblem, StaticDual};
use entropic_bespoke::pricing::{price_tranche, tranche_el};
use entropic_bespoke::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dual_is_convex_along_segments(seed in 0u64..10_000, t in 0.05f64..0.95) {
        let mut r = rng(seed);
        let inst = Instance::random(&mut r, 3, (2, 3));
        let cs = inst.constraints(0.1, [0.2, -0.1], 1e-2);
        let refs = inst.prior_refs();
        let dual = StaticDual::new(&inst.grid, &refs, &cs).unwrap();
        let a: Vec<f64> = (0..cs.len()).map(|i| (seed % 7) as f64 - 3.0 + i as f64).collect();
        let b: Vec<f64> = (0..cs.len()).map(|i| 5.0 - 2.0 * i as f64).collect();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let (fa, fb, fm) = (dual.evaluate(&a, false).value, dual.evaluate(&b, false).value, dual.evaluate(&mid, false).value);
        prop_assert!(fm <= t * fa + (1.0 - t) * fb + 1e-12 * (1.0 + fa.abs() + fb.abs()));
    }

    #[test]
    fn residual_identity_at_optimum(seed in 0u64..10_000, sigma in 1e-4f64..1e-2) {
        let mut r = rng(seed);
        let inst = Instance::random(&mut r, 3, (3, 2));
        let cs = inst.constraints(0.15, [0.3, -0.2], sigma);
        let res = calibrate(&inst.grid, &inst.prior_refs(), &cs, &SolverOptions::default()).unwrap();
        for (u, l) in res.residuals.iter().zip(&res.lambdas) {
            prop_assert!((u + l * sigma * sigma).abs() < 1e-9);
        }
        prop_assert!((res.posterior_weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn posterior_base_el_is_increasing_and_concave(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let inst = Instance::random(&mut r, 4, (3, 3));
        let cs = inst.constraints(0.1, [0.25, 0.1], 1e-3);
        let res = calibrate(&inst.grid, &inst.prior_refs(), &cs, &SolverOptions::default()).unwrap();
        for cond in &res.tilted {
            let c = base_el_curve(&total_pmf(&res.posterior_weights, cond));
            for k in 1..c.len() {
                prop_assert!(c[k] >= c[k - 1] - 1e-15);
                if k + 1 < c.len() {
                    prop_assert!(c[k + 1] - 2.0 * c[k] + c[k - 1] <= 1e-15);
                }
            }
        }
    }

    #[test]
    fn par_spread_falls_as_tranche_moves_up(pmf in prop::collection::vec(0.01f64..1.0, 4..30), width in 0.02f64..0.1, k0 in 0.0f64..0.1) {
        let total: f64 = pmf.iter().sum();
        let dist = LossDist::new(0.01, pmf.iter().map(|p| p / total).collect()).with_horizon(5.0);
        let curve = DiscountCurve::flat(0.02);
        let lower = TrancheSpec::new(k0, k0 + width, 5.0, 4, DayCount::Act360).unwrap();
        let upper = TrancheSpec::new(k0 + 0.01, k0 + 0.01 + width, 5.0, 4, DayCount::Act360).unwrap();
        let d = std::slice::from_ref(&dist);
        match (price_tranche(d, &lower, &curve), price_tranche(d, &upper, &curve)) {
            (Ok(a), Ok(b)) => prop_assert!(b.par_spread <= a.par_spread * (1.0 + 1e-12) + 1e-15),
            (Err(_), Ok(_)) => prop_assert!(false, "lower tranche unpriceable while upper priced"),
            _ => {}
        }
        prop_assert!(tranche_el(&dist, upper.k_d, upper.k_u) <= tranche_el(&dist, lower.k_d, lower.k_u) + 1e-12);
    }

    #[test]
    fn skew_interpolant_stays_in_range_and_monotone(
        pillars in prop::collection::btree_map(1u32..100, 0.01f64..0.99, 2..8)
    ) {
        let mut sorted: Vec<(f64, f64)> = pillars.iter().map(|(k, b)| (*k as f64 / 100.0, *b)).collect();
        // Make betas increasing so monotonicity applies.
        let mut betas: Vec<f64> = sorted.iter().map(|p| p.1).collect();
        betas.sort_by(f64::total_cmp);
        sorted.iter_mut().zip(betas).for_each(|(p, b)| p.1 = b);
        let curve = BaseCorrCurve::new(sorted.clone()).unwrap();
        let mut prev = curve.beta(0.0);
        for i in 0..=500 {
            let b = curve.beta(i as f64 * 0.0025);
            prop_assert!(b > 0.0 && b < 1.0);
            prop_assert!(b >= prev - 1e-14);
            prev = b;
        }
    }
}
