//! Checks against references computed here from first principles: naive DFTs, plane-wave
//! eigenvalues, Gaussian moments and brute-force Riemann sums.

use std::f64::consts::PI;

use anharmonic_core::equilibrium::{moment, ModelParams};
use anharmonic_core::fields::TestFunction;
use anharmonic_core::spectral::{
    fft2, fourier_continuous, fourier_n, laplacian_2d, levy_symbol, semigroup_apply, theta, transport_2d,
    GridFunction2D, PeriodicGrid, SemigroupKind,
};
use num_complex::Complex64;
use rustfft::FftDirection;

#[test]
fn fft2_matches_naive_dft() {
    let side = 8;
    let data: Vec<Complex64> = (0..side * side)
        .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
        .collect();
    let mut fast = data.clone();
    fft2(&mut fast, side, FftDirection::Forward);
    for k1 in 0..side {
        for k2 in 0..side {
            let mut acc = Complex64::new(0.0, 0.0);
            for j1 in 0..side {
                for j2 in 0..side {
                    let ph = -2.0 * PI * ((k1 * j1 + k2 * j2) as f64) / side as f64;
                    acc += data[j1 * side + j2] * Complex64::from_polar(1.0, ph);
                }
            }
            assert!((acc - fast[k1 * side + k2]).norm() < 1e-12);
        }
    }
}

#[test]
fn plane_waves_diagonalize_torus_operators() {
    let (n, p) = (16usize, 16usize);
    for (k, l) in [(1i64, 0i64), (3, -2), (5, 7), (8, 8)] {
        let phase = |x: i64, y: i64| 2.0 * PI * (k * x + l * y) as f64 / p as f64;
        let c = GridFunction2D::from_fn(n, p, |x, y| phase(x, y).cos());
        let lap = laplacian_2d(&c);
        let tr = transport_2d(&c);
        let (sk, sl) = ((PI * k as f64 / p as f64).sin(), (PI * l as f64 / p as f64).sin());
        let lam = 4.0 * (sk * sk + sl * sl);
        let om = 2.0 * ((2.0 * PI * k as f64 / p as f64).sin() + (2.0 * PI * l as f64 / p as f64).sin());
        let nn = n as f64;
        for x in 0..p as i64 {
            for y in 0..p as i64 {
                assert!((lap.get(x, y) + nn * nn * lam * phase(x, y).cos()).abs() < 1e-9);
                assert!((tr.get(x, y) - nn * om * phase(x, y).sin()).abs() < 1e-9);
            }
        }
        let th = theta(k as f64 / p as f64, l as f64 / p as f64, 1.3);
        let want = Complex64::new(0.0, om) / Complex64::new(1.3 * lam, -om);
        assert!((th - want).norm() < 1e-14);
    }
}

#[test]
fn gaussian_moments_at_zero_anharmonicity() {
    for beta in [0.5f64, 1.0, 2.0] {
        let p = ModelParams::new(beta, 0.0, 0.0);
        let mut dfact = 1.0;
        for k in (2..=8).step_by(2) {
            dfact *= (k - 1) as f64;
            let want = dfact / beta.powi(k as i32 / 2);
            let got = moment(k, &p).unwrap();
            assert!((got - want).abs() < 1e-10 * want, "beta {beta} k {k}: {got} vs {want}");
        }
        assert!(moment(3, &p).unwrap().abs() < 1e-12);
    }
}

#[test]
fn quartic_moments_against_riemann_sum() {
    let (beta, gamma) = (1.0, 0.2);
    let p = ModelParams::new(beta, 0.0, gamma);
    let w = |u: f64| (-beta * (u * u / 2.0 + gamma * u.powi(4) / 4.0)).exp();
    let h = 1e-4;
    let (mut z, mut m2, mut m4) = (0.0, 0.0, 0.0);
    for i in -120_000..=120_000 {
        let u = i as f64 * h;
        let d = w(u);
        z += d;
        m2 += u * u * d;
        m4 += u.powi(4) * d;
    }
    assert!((moment(2, &p).unwrap() - m2 / z).abs() < 1e-10);
    assert!((moment(4, &p).unwrap() - m4 / z).abs() < 1e-10);
}

#[test]
fn fourier_transforms_against_riemann_sums() {
    let f = TestFunction::new(0.1, 0.3, 1.7);
    for xi in [0.0, 0.7, -2.3, 5.0] {
        let m = 200_000;
        let h = 0.6 / m as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..m {
            let u = -0.2 + (j as f64 + 0.5) * h;
            acc += Complex64::from_polar(f.value(u), 2.0 * PI * xi * u);
        }
        acc *= h;
        let got = fourier_continuous(&f, xi).unwrap();
        assert!((got - acc).norm() < 1e-9, "xi {xi}: {got} vs {acc}");
    }
    let n = 64;
    for xi in [0.0, 1.5, -7.25] {
        let mut acc = Complex64::new(0.0, 0.0);
        for x in -n..=n {
            let u = x as f64 / n as f64;
            acc += Complex64::from_polar(f.value(u), 2.0 * PI * xi * u);
        }
        acc /= n as f64;
        assert!((fourier_n(&f, n as usize, xi) - acc).norm() < 1e-13);
    }
}

#[test]
fn levy_symbol_closed_form() {
    for xi in [-3.0f64, -0.4, 0.0, 0.25, 1.0, 10.0] {
        let m = 2.0 * (PI * xi).abs().powf(1.5);
        let want = Complex64::new(-m, -m * xi.signum() * (xi != 0.0) as i32 as f64);
        assert!((levy_symbol(xi) - want).norm() < 1e-12 * m.max(1.0));
    }
}

#[test]
fn heat_semigroup_is_gaussian_convolution() {
    let f = TestFunction::new(0.0, 0.4, 1.0);
    let t = 0.02;
    let grid = PeriodicGrid::new(-4.0, 8.0, 4096);
    let out = semigroup_apply(SemigroupKind::Heat, t, &f, &grid).unwrap();
    // generator Delta: kernel of variance 2t
    let var = 2.0 * t;
    for &j in &[1800usize, 2048, 2100, 2300] {
        let x = grid.node(j);
        let m = 20_000;
        let h = 0.8 / m as f64;
        let mut acc = 0.0;
        for i in 0..m {
            let u = -0.4 + (i as f64 + 0.5) * h;
            acc += f.value(u) * (-(x - u).powi(2) / (2.0 * var)).exp();
        }
        acc *= h / (2.0 * PI * var).sqrt();
        assert!((out[j] - acc).abs() < 1e-9, "x {x}: {} vs {acc}", out[j]);
    }
}

#[test]
fn single_precision_aliases() {
    let p = anharmonic_core::ModelParams32::new(1.0, 0.0, 0.0);
    assert!((moment(4, &p).unwrap() - 3.0).abs() < 1e-4);
    let f = anharmonic_core::TestFunction32::new(0.0, 0.5, 1.0);
    assert!((f.value(0.0) - (-1.0f32).exp()).abs() < 1e-7);
    assert!(theta(0.1f32, 0.2, 1.0).norm() <= 1.0);
}
