use proptest::prelude::*;

use tunnel_toa::arrival::{
    p_exact, p_gaussian_closed_form, ClosedFormInput, ClosedFormLevel, SpectralState, WeightKind,
};
use tunnel_toa::config::RangeConfig;
use tunnel_toa::model::{GaussianState, PhysParams, Potential, Segment};
use tunnel_toa::quad::{gauss_legendre, linspace};
use tunnel_toa::scattering::solve_modes;
use tunnel_toa::sequential::{husimi_weight, sequential_densities, MomentumDiagonal, RegimePolicy};

fn piecewise() -> impl Strategy<Value = Potential> {
    prop::collection::vec((0.05f64..1.5, 0.0f64..4.0), 1..6).prop_map(|pieces| {
        let mut x = -1.0;
        let segments = pieces
            .into_iter()
            .map(|(w, v)| {
                let s = Segment { x_left: x, x_right: x + w, v };
                x += w;
                s
            })
            .collect();
        Potential::piecewise(segments).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scattering_is_unitary(p in piecewise(), k in 0.05f64..4.0, m in 0.5f64..2.0) {
        let sol = solve_modes(&p, k, m).unwrap();
        prop_assert!(sol.max_residual() < 1e-10);
        prop_assert!((sol.t_plus.norm_sqr() + sol.r_plus.norm_sqr() - 1.0).abs() < 1e-10);
        prop_assert!((sol.t_minus.norm_sqr() + sol.r_minus.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mirrored_barrier_transmits_the_same(p in piecewise(), k in 0.05f64..4.0) {
        let a = solve_modes(&p, k, 1.0).unwrap();
        let b = solve_modes(&p.mirrored(), k, 1.0).unwrap();
        prop_assert!((a.t_plus.norm() - b.t_plus.norm()).abs() < 1e-10);
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials(n in 2usize..20, a in -3.0f64..0.0, b in 0.5f64..3.0) {
        let (x, w) = gauss_legendre(n, a, b);
        let degree = 2 * n - 1;
        let quad: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(degree as i32)).sum();
        let exact = (b.powi(degree as i32 + 1) - a.powi(degree as i32 + 1)) / (degree as f64 + 1.0);
        prop_assert!((quad - exact).abs() <= 1e-10 * exact.abs().max(1.0));
    }

    #[test]
    fn range_strings_round_trip(start in -100.0f64..100.0, len in 0.1f64..50.0, n in 2usize..500) {
        let r = RangeConfig::parse(&format!("{start}:{}:{n}", start + len)).unwrap();
        let pts = r.points();
        prop_assert_eq!(pts.len(), n);
        prop_assert_eq!(pts[0], start);
        prop_assert!((pts[n - 1] - (start + len)).abs() < 1e-12 * (start.abs() + len));
    }

    #[test]
    fn husimi_weight_is_a_probability(
        x0 in -50.0f64..0.0, k0 in 0.3f64..2.0, s0 in 0.02f64..0.3, sigma in 0.05f64..5.0,
        x in -80.0f64..20.0, k in -1.0f64..3.0,
    ) {
        let g = GaussianState::from_sigma(x0, k0, s0).unwrap();
        let w = husimi_weight(&g, sigma, x, k);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&w));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn spectral_density_is_nonnegative(v0 in 0.1f64..1.5, d in 0.1f64..1.0, k0 in 0.8f64..1.5) {
        let barrier = Potential::square(v0, d).unwrap();
        let params = PhysParams::new(1.0, 10.0, &barrier).unwrap();
        let g = GaussianState::from_sigma(-60.0, k0, 0.05).unwrap();
        let t_free = 70.0 / k0;
        let t = linspace(t_free - 40.0, t_free + 40.0, 161);
        let p = p_exact(&SpectralState::gaussian(g, &barrier, params).unwrap(), &t).unwrap();
        prop_assert!(p.min_raw >= -1e-12);
        prop_assert!(p.p.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn closed_forms_are_nonnegative(v0 in 0.1f64..1.5, d in 0.1f64..1.0, x0 in -200.0f64..-50.0) {
        let barrier = Potential::square(v0, d).unwrap();
        let params = PhysParams::new(1.0, 5.0, &barrier).unwrap();
        let g = GaussianState::from_sigma(x0, 1.0, 0.02).unwrap();
        let input = ClosedFormInput::from_potential(&barrier, &g, params, WeightKind::Detector).unwrap();
        let t = linspace(1.0, 2.0 * (5.0 - x0), 200);
        for level in [ClosedFormLevel::P1, ClosedFormLevel::P2, ClosedFormLevel::P3] {
            let p = p_gaussian_closed_form(&g, &input, level, &t).unwrap();
            prop_assert!(p.p.iter().all(|v| *v >= 0.0 && v.is_finite()));
        }
    }

    #[test]
    fn marginals_carry_the_detected_fraction(v0 in 1.0f64..3.0, d in 0.3f64..1.5, sigma in 0.5f64..20.0) {
        let barrier = Potential::square(v0, d).unwrap();
        let params = PhysParams::new(1.0, 10.0, &barrier).unwrap();
        let rho = MomentumDiagonal::gaussian(GaussianState::from_sigma(-100.0, 0.8, 0.15).unwrap());
        let t = linspace(-30.0, 40.0, 4001);
        let s = sequential_densities(&rho, sigma, &barrier, params, &t, RegimePolicy::Report).unwrap();
        for m in [&s.delay, &s.tunnelling] {
            prop_assert!(m.p.iter().all(|v| *v >= 0.0));
            prop_assert!((m.integral - s.norm).abs() < 1e-3 * s.norm.max(1e-3));
        }
    }
}
