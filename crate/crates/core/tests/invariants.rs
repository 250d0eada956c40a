use anharmonic_core::chaos::{build_basis, dirichlet_form, ChaosCoefficients, Geometry, Occupation};
use anharmonic_core::dynamics::{
    drift, energy_decomposition, swap, vol_decomposition, LatticeState, PairFunction,
};
use anharmonic_core::equilibrium::{joint_cumulant, kappa, ModelParams};
use anharmonic_core::fields::{Centering, TestFunction};
use anharmonic_core::spectral::{fit_slope, lambda, levy_symbol, residue_functions, theta};
use proptest::prelude::*;

fn states(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flow_conserves_volume_and_energy(w in states(12), gamma in 0.0f64..0.5) {
        let d = drift(&w, gamma).unwrap();
        let vol: f64 = d.iter().sum();
        let en: f64 = w.iter().zip(&d).map(|(u, v)| (u + gamma * u * u * u) * v).sum();
        let scale = d.iter().map(|v| v.abs()).sum::<f64>().max(1.0) * (1.0 + 27.0 * gamma);
        prop_assert!(vol.abs() <= 1e-12 * scale);
        prop_assert!(en.abs() <= 1e-12 * scale * 30.0);
    }

    #[test]
    fn swaps_conserve_volume_and_energy(w in states(10), x in 0usize..10, gamma in 0.0f64..0.5) {
        let mut s = LatticeState::new(w, gamma);
        let (v0, e0) = (s.volume(), s.energy());
        swap(&mut s, x);
        prop_assert!((s.volume() - v0).abs() <= 1e-12);
        prop_assert!((s.energy() - e0).abs() <= 1e-12 * e0.max(1.0));
    }

    #[test]
    fn theta_in_unit_disc(k in -0.5f64..0.5, l in -0.5f64..0.5, g in 0.5f64..2.0) {
        prop_assert!(theta(k, l, g).norm() <= 1.0 + 1e-12);
        prop_assert!(lambda(k, l) >= 0.0);
    }

    #[test]
    fn levy_symbol_hermitian_and_dissipative(xi in -50.0f64..50.0) {
        let a = levy_symbol(xi);
        let b = levy_symbol(-xi);
        prop_assert!(a.re <= 0.0);
        prop_assert!((a - b.conj()).norm() <= 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn k_is_twice_j(y in 1e-3f64..0.5, g in 0.9f64..1.1) {
        let r = residue_functions(y, g).unwrap();
        prop_assert!((r.k - r.j * 2.0).norm() <= 1e-12 * r.k.norm().max(1e-12));
    }

    #[test]
    fn kappa_below_gaussian_value(gamma in 0.0f64..1.0) {
        let k = kappa(gamma, 1.0).unwrap();
        prop_assert!(k > 0.0 && k <= 3.0 + 1e-9);
    }

    #[test]
    fn cumulants_are_symmetric(a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let p = ModelParams::standard(0.1);
        let f = move |u: f64| u * u + a * u;
        let g = move |u: f64| u.powi(3) + b;
        let x = joint_cumulant(&[&f, &g], &p).unwrap();
        let y = joint_cumulant(&[&g, &f], &p).unwrap();
        prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        let shifted = move |u: f64| g(u) + 5.0;
        let z = joint_cumulant(&[&f, &shifted], &p).unwrap();
        prop_assert!((x - z).abs() <= 1e-9 * x.abs().max(1.0));
    }

    #[test]
    fn generator_decompositions(w in states(16), f in prop::collection::vec(-1.0f64..1.0, 16), gamma in 0.0f64..0.3) {
        let p = ModelParams::standard(gamma).with_n(16);
        let c = Centering::from_params(&p).unwrap();
        prop_assert!(vol_decomposition(&f, &w, gamma, c.kappa).rel_error() <= 1e-11);
        prop_assert!(energy_decomposition(&f, &w, gamma, c.kappa).rel_error() <= 1e-11);
    }

    #[test]
    fn dirichlet_form_quadratic(c in prop::collection::vec(-1.0f64..1.0, 4)) {
        let basis = build_basis(0.1, 4).unwrap();
        let mut psi = ChaosCoefficients::new(2);
        psi.insert(Occupation::from_pairs([(0, 2)]), c[0]).unwrap();
        psi.insert(Occupation::from_pairs([(0, 1), (1, 1)]), c[1]).unwrap();
        psi.insert(Occupation::from_pairs([(1, 1), (3, 1)]), c[2]).unwrap();
        psi.insert(Occupation::from_pairs([(2, 2)]), c[3]).unwrap();
        let geom = Geometry::Ring(6);
        let d1 = dirichlet_form(&psi, &basis, geom).unwrap();
        let d2 = dirichlet_form(&psi.scaled(2.0), &basis, geom).unwrap();
        prop_assert!(d1 >= -1e-14);
        prop_assert!((d2 - 4.0 * d1).abs() <= 1e-12 * d1.abs().max(1.0));
    }

    #[test]
    fn shifted_bump_translates(c in -0.3f64..0.3, s in -1.0f64..1.0, u in -1.5f64..1.5) {
        let f = TestFunction::new(c, 0.2, 1.0);
        prop_assert!((f.shifted(s).value(u + s) - f.value(u)).abs() <= 1e-12);
    }

    #[test]
    fn pair_functions_from_symmetric_kernels(seed in 0u64..1000) {
        let h = PairFunction::from_fn(8, |x, y| ((x * y + x + y) as f64 + seed as f64).sin());
        prop_assert!(h.is_symmetric());
    }

    #[test]
    fn power_laws_fit_exactly(e in -3.0f64..3.0, c in 0.1f64..10.0) {
        let xs: Vec<f64> = (6..12).map(|k| (1u64 << k) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| c * x.powf(e)).collect();
        let (lx, ly): (Vec<f64>, Vec<f64>) = xs.iter().zip(&ys).map(|(x, y)| (x.ln(), y.ln())).unzip();
        prop_assert!((fit_slope(&lx, &ly) - e).abs() <= 1e-10);
    }
}
