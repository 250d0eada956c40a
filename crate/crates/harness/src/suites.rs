//! Property suites over the numerical modules. Each group appends checks and metrics to a
//! report; `run_suite` strings the groups together per subcommand.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma as gamma_fn;

use anharmonic_core::chaos::{
    build_basis, carre, chaos_inner, dirichlet_form, h_minus_one_bound, ChaosCoefficients, Geometry, Occupation,
    TwoSiteField,
};
use anharmonic_core::dynamics::{
    energy_decomposition, evolve, omega3_residual, quadratic_decomposition, vol_decomposition, Integrator,
    LatticeState, PairFunction,
};
use anharmonic_core::equilibrium::{equilibrium_summary, joint_cumulant, kappa, moment, ModelParams};
use anharmonic_core::fields::{Centering, TestFunction};
use anharmonic_core::hydro::{classify_universality, quartic_coupling_constants, UniversalityClass};
use anharmonic_core::quad::{integrate_breaks, Tolerance};
use anharmonic_core::spectral::{
    apply_multiplier, coupling, decay_constant, discretization_gap, dn_hn_vs_lf, g0, g0_gn, gn_error_constant,
    levy_symbol, parseval_2d, phi_psi_hat_suite, poisson_defect, residue_bound_sweep, residue_functions,
    residue_quadrature, scaling_suite, solve_h, solve_v, torus_integral, u_bound, w_from_h, w_hat, w_integral,
    GridFunction1D, PoissonKernel, SemigroupKind, TorusSpec, RESIDUE_EXPONENTS, RESIDUE_NAMES,
};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::report::{Row, RunReport};
use crate::HarnessError;

type C64 = Complex<f64>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

// ---------------------------------------------------------------------------
// equilibrium

pub const CUMULANT_TOL: f64 = 1e-9;

pub fn equilibrium_cumulants(report: &mut RunReport) -> Result<(), HarnessError> {
    let p = ModelParams::standard(0.0);
    let g = |u: f64| u;
    let g2 = |u: f64| u * u;
    let table: [(&str, Vec<&dyn Fn(f64) -> f64>, f64); 4] = [
        ("<G;G>", vec![&g, &g], 1.0),
        ("<G^2;G^2>", vec![&g2, &g2], 2.0),
        ("<G;G;G^2>", vec![&g, &g, &g2], 2.0),
        ("<G^2;G^2;G^2>", vec![&g2, &g2, &g2], 8.0),
    ];
    for (name, obs, want) in table {
        let got = joint_cumulant(&obs, &p)?;
        report.check(format!("cumulant {name}"), (got - want).abs() <= CUMULANT_TOL, format!("{got:.15} vs {want}"));
    }
    let m4 = moment(4, &p)?;
    report.check("<G^4>", (m4 - 3.0).abs() <= CUMULANT_TOL, format!("{m4:.15} vs 3"));
    Ok(())
}

pub fn equilibrium_expansion(report: &mut RunReport) -> Result<(), HarnessError> {
    let gamma = 1e-3;
    let s = equilibrium_summary(&ModelParams::standard(gamma))?;
    let slope = (s.e_mean - 0.5) / gamma;
    report.metric("energy_slope", slope);
    report.check(
        "(e - 1/2)/gamma -> -3/4 within 2%",
        ((slope + 0.75) / 0.75).abs() <= 0.02,
        format!("{slope:.6}"),
    );
    let mut zero = true;
    for g in [0.0, 0.05, 0.1, 0.2] {
        for beta in [0.5, 1.0, 2.0] {
            zero &= equilibrium_summary(&ModelParams::new(beta, 0.0, g))?.v_mean == 0.0;
        }
    }
    report.check("v_mean = 0 exactly at zero tension", zero, "beta in {0.5,1,2}, gamma in {0,0.05,0.1,0.2}");
    let k0: f64 = kappa(0.0, 1.0)?;
    report.check("kappa(0) = 3", (k0 - 3.0).abs() <= 1e-9, format!("{k0:.15}"));
    let ks: Vec<f64> = [0.1, 0.01, 0.001].iter().map(|&g| kappa(g, 1.0)).collect::<Result<_, _>>()?;
    report.check(
        "kappa(gamma) increases to 3 as gamma decreases",
        ks[0] < ks[1] && ks[1] < ks[2] && ks[2] < 3.0,
        format!("{ks:?}"),
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// hydro

pub fn hydro_couplings(report: &mut RunReport) -> Result<(), HarnessError> {
    let cc = quartic_coupling_constants(1.0f64, 0.0)?;
    let tol = 1e-8;
    let vals = [
        ("c", cc.c, -2.0),
        ("Z1", cc.z1, -1.0),
        ("Z2", cc.z2, SQRT_2),
        ("He11", cc.he[0][0], -2.0),
        ("He12", cc.he[0][1], 0.0),
        ("He21", cc.he[1][0], 0.0),
        ("He22", cc.he[1][1], 0.0),
        ("Hv11", cc.hv[0][0], 0.0),
        ("Hv12", cc.hv[0][1], 0.0),
        ("Hv21", cc.hv[1][0], 0.0),
        ("Hv22", cc.hv[1][1], 0.0),
        ("G2_11", cc.g2[0][0], -SQRT_2),
    ];
    for (name, got, want) in vals {
        report.check(format!("harmonic {name}"), (got - want).abs() <= tol, format!("{got:.12} vs {want:.12}"));
    }
    for g in [0.0, 0.05, 0.1, 0.2] {
        let cc = quartic_coupling_constants(1.0f64, g)?;
        report.check(
            format!("G1_22 = 0 at gamma = {g}"),
            cc.g1[1][1].abs() <= 1e-6,
            format!("{:.3e}", cc.g1[1][1]),
        );
        let class = classify_universality(&cc);
        report.check(
            format!("class at gamma = {g}"),
            class == UniversalityClass::DiffusiveSoundLevyHeat,
            class.label(),
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// generator identities

pub const IDENTITY_TOL: f64 = 1e-11;

pub fn identity_checks(report: &mut RunReport, states: usize, n: usize) -> Result<(), HarnessError> {
    let gamma = 0.1;
    let params = ModelParams::standard(gamma).with_n(n);
    let c = Centering::from_params(&params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = [0.0f64; 4];
    for _ in 0..states {
        let state = LatticeState::sample(&params, &mut rng)?;
        let w = &state.omega;
        let f: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let hv: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>() - 0.5).collect();
        let h = PairFunction::from_fn(n, |x, y| hv[x.min(y) * n + x.max(y)]);
        worst[0] = worst[0].max(vol_decomposition(&f, w, gamma, c.kappa).rel_error());
        worst[1] = worst[1].max(energy_decomposition(&f, w, gamma, c.kappa).rel_error());
        worst[2] = worst[2].max(quadratic_decomposition(&h, w, gamma, c.kappa)?.rel_error());
        for x in 0..n as i64 {
            let at = |k: i64| w[(x + k).rem_euclid(n as i64) as usize];
            let (wm, w0, w1, w2) = (at(-1), at(0), at(1), at(2));
            let want = gamma * (2.0 * w0 * w1 * (w1.powi(3) - wm.powi(3)) + w0 * w0 * (w2.powi(3) - w0.powi(3)));
            let got = omega3_residual(w, x, gamma, c.chi);
            worst[3] = worst[3].max((got - want).abs() / want.abs().max(1.0));
        }
    }
    for (name, e) in ["volume decomposition", "energy decomposition", "quadratic decomposition", "cubic identity"]
        .iter()
        .zip(worst)
    {
        report.metric(format!("{name} max rel error"), e);
        report.check(
            format!("{name} at {states} states, n = {n}"),
            e <= IDENTITY_TOL,
            format!("max relative error {e:.3e}"),
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// chaos

pub fn chaos_checks(report: &mut RunReport) -> Result<(), HarnessError> {
    for g in [0.0, 0.1] {
        let b = build_basis(g, 6)?;
        let cross = b.max_normalized_cross()?;
        report.check(format!("orthogonal basis at gamma = {g}"), cross < 1e-10, format!("{cross:.3e}"));
    }
    let basis = build_basis(0.1, 4)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let geom = Geometry::Ring(8);
    let mut worst: f64 = 0.0;
    let mut min_form = f64::INFINITY;
    for _ in 0..20 {
        let mut psi = ChaosCoefficients::new(2);
        for _ in 0..6 {
            let x = rng.random_range(0..8i64);
            let y = rng.random_range(0..8i64);
            let sigma = if x == y {
                Occupation::from_pairs([(x, 2)])
            } else {
                Occupation::from_pairs([(x, 1), (y, 1)])
            };
            psi.insert(sigma, rng.random::<f64>() - 0.5)?;
        }
        let d = dirichlet_form(&psi, &basis, geom)?;
        let ip = -chaos_inner(&psi, &carre(&psi, geom), Some(&basis))?;
        worst = worst.max((d - ip).abs() / d.abs().max(1e-300));
        min_form = min_form.min(d);
    }
    report.check("Dirichlet form = <psi, -S psi>", worst < 1e-12, format!("max rel gap {worst:.3e}"));
    report.check("Dirichlet form non-negative", min_form >= 0.0, format!("min {min_form:.3e}"));
    let f = TwoSiteField::from_entries([((0, 1), 1.0), ((1, 0), 1.0), ((0, 2), -0.5), ((2, 0), -0.5)]);
    let a = h_minus_one_bound(&f, 0.1)?;
    let b = h_minus_one_bound(&f, 1.0)?;
    report.check("H-1 bound decreases in z", a > b && b > 0.0, format!("z=0.1: {a:.6e}, z=1: {b:.6e}"));
    Ok(())
}

// ---------------------------------------------------------------------------
// spectral

pub const RESIDUE_TOL: f64 = 1e-8;

/// Fifty signed points in `[-1/2, 1/2] \ {0}`, log-spaced in `|y|`.
pub fn residue_points() -> Vec<f64> {
    (0..50)
        .map(|i| {
            let mag = (1e-3f64.ln() + (0.5f64.ln() - 1e-3f64.ln()) * (i / 2) as f64 / 24.0).exp().min(0.5);
            if i % 2 == 0 {
                mag
            } else {
                -mag
            }
        })
        .collect()
}

pub fn residue_checks(report: &mut RunReport) -> Result<(), HarnessError> {
    let tol = Tolerance::new(1e-14, 1e-12);
    for gk in [1.0, 1.003] {
        let mut worst: f64 = 0.0;
        let mut kj: f64 = 0.0;
        for y in residue_points() {
            let a = residue_functions(y, gk)?.as_array()?;
            let b = residue_quadrature(y, gk, tol)?.as_array()?;
            for q in 0..7 {
                worst = worst.max((a[q] - b[q]).norm() / b[q].norm().max(1.0));
            }
            kj = kj.max((a[2] - a[1] * 2.0).norm() / a[2].norm().max(1e-300));
        }
        report.metric(format!("residue_quadrature_gap_gk{gk}"), worst);
        report.check(
            format!("closed forms vs quadrature at 50 points, gk = {gk}"),
            worst <= RESIDUE_TOL,
            format!("max gap {worst:.3e}"),
        );
        report.check(format!("K = 2J, gk = {gk}"), kj <= 1e-13, format!("max rel gap {kj:.3e}"));
        let coarse = residue_bound_sweep(gk, 1e-2, 200)?;
        let fine = residue_bound_sweep(gk, 1e-4, 400)?;
        for q in 0..7 {
            report.metric(format!("bound_ratio_{}_gk{gk}", RESIDUE_NAMES[q]), fine[q]);
            let ok = fine[q].is_finite() && fine[q] <= 1.5 * coarse[q];
            report.check(
                format!("{} / |sin pi y|^{} bounded to 1e-4, gk = {gk}", RESIDUE_NAMES[q], RESIDUE_EXPONENTS[q]),
                ok,
                format!("sup over [1e-4, 1/2] {:.4e}, over [1e-2, 1/2] {:.4e}", fine[q], coarse[q]),
            );
        }
    }
    let w_half = w_integral(0.5)?;
    let mut wmax: f64 = 0.0;
    for i in 0..=40 {
        let y = (1e-4f64.ln() + (0.5f64.ln() - 1e-4f64.ln()) * i as f64 / 40.0).exp();
        wmax = wmax.max(w_integral(y)? * y.powf(1.5));
    }
    report.metric("W(1/2)", w_half);
    report.metric("sup W(y)|y|^1.5", wmax);
    report.check("W(y)|y|^{3/2} bounded on [1e-4, 1/2]", wmax.is_finite(), format!("sup {wmax:.4e}"));
    Ok(())
}

/// The profile used by the torus experiments.
pub fn torus_profile(width: f64) -> TestFunction<f64> {
    TestFunction::new(0.0, width, 1.0)
}

pub const DEFECT_TOL: f64 = 1e-8;

pub fn poisson_checks(report: &mut RunReport, n: usize) -> Result<(), HarnessError> {
    let f = torus_profile(0.25);
    let gamma = (n as f64).powf(-0.5);
    let gk = coupling(gamma)?;
    report.metric("poisson_gk", gk);
    let spec = TorusSpec::new(n, gk).with_kernel(PoissonKernel::Inverse);
    let d = poisson_defect(&spec, &f)?;
    report.metric("defect_h_inverse", d.h);
    report.metric("defect_v_inverse", d.v);
    report.check(
        format!("L_n h_n = gk^2 grad f x delta, n = {n}"),
        d.h <= DEFECT_TOL,
        format!("relative l2 defect {:.3e} (gk = {gk:.6})", d.h),
    );
    let stated = poisson_defect(&TorusSpec::new(n, gk), &f)?;
    report.metric("defect_h_stated", stated.h);
    report.metric("defect_v_stated", stated.v);
    let c = solve_h(&spec, &f)?;
    report.check("h_n symmetric", c.asymmetry <= 1e-12, format!("max asymmetry {:.3e}", c.asymmetry));
    let zero = solve_h(&spec, &TestFunction::new(0.0, 0.25, 0.0))?;
    report.check("f = 0 gives h = 0", zero.grid.values.iter().all(|v| *v == 0.0), "");
    let v = solve_v(&spec, &f)?;
    report.check("v_n symmetric", v.asymmetry <= 1e-12, format!("max asymmetry {:.3e}", v.asymmetry));
    let (a, b) = parseval_2d(&c.grid);
    report.check("Parseval for h_n", (a - b).abs() <= 1e-9 * a, format!("{a:.12e} vs {b:.12e}"));

    // w_n from its definition against its Fourier form, on a four-times larger torus
    let wide = TorusSpec::new(n.min(128), gk).with_factor(4);
    let h = solve_h(&wide, &f)?.grid;
    let w = w_from_h(&h);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for j in -16..=16 {
        let xi = j as f64 * 0.25;
        let a = w.fourier(xi);
        let b = w_hat(xi, wide.n, &f, gk, PoissonKernel::Stated)?;
        worst = worst.max((a - b).norm());
        scale = scale.max(b.norm());
    }
    let w_rel = worst / scale;
    report.metric("w_cross_check", w_rel);
    report.check("w_n matches its Fourier form", w_rel <= 1e-8, format!("max relative gap {w_rel:.3e}"));
    Ok(())
}

pub const SCALING_NS: [usize; 7] = [64, 128, 256, 512, 1024, 2048, 4096];

pub fn scaling_checks(report: &mut RunReport, ns: &[usize]) -> Result<(), HarnessError> {
    let f = torus_profile(0.25);
    let fits = scaling_suite(ns, &f, |n| 0.3 / (n as f64).sqrt())?;
    for (q, fit) in fits.iter().enumerate() {
        let tol = if q < 4 { 0.1 } else { 0.15 };
        report.metric(format!("slope {}", fit.name), fit.slope);
        report.metric(format!("local slope {}", fit.name), fit.local_slope);
        report.check(
            format!("slope of {} = {} +- {tol}", fit.name, fit.expected),
            (fit.slope - fit.expected).abs() <= tol,
            format!("fitted {:.4}, last local {:.4}", fit.slope, fit.local_slope),
        );
    }
    Ok(())
}

pub const GAP_NS: [usize; 5] = [128, 256, 512, 1024, 2048];

pub fn prop_main_checks(report: &mut RunReport, ns: &[usize]) -> Result<(), HarnessError> {
    let f = torus_profile(0.2);
    for (label, c) in [("gamma_n = 0.3 n^-1/2", 0.3), ("gamma_n = 0", 0.0)] {
        let mut gaps = Vec::new();
        for &n in ns {
            let g = dn_hn_vs_lf(n, &f, c / (n as f64).sqrt())?;
            report.metric(format!("dn_gap {label} n={n}"), g.gap);
            gaps.push(g.gap);
        }
        let worst = gaps.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
        report.check(
            format!("D_n h_n + Lf/4 gap drops >= 30% per doubling, {label}"),
            worst <= 0.7,
            format!("largest ratio {worst:.4}"),
        );
    }
    let zero = dn_hn_vs_lf(ns[0], &TestFunction::new(0.0, 0.2, 0.0), 0.01)?;
    report.check("f = 0 gives zero gap", zero.gap == 0.0, "");

    let mut consts = Vec::new();
    for n in [256usize, 1024, 4096] {
        let gamma = (n as f64).powf(-0.5);
        let k = kappa(gamma, 1.0)?;
        let c = gn_error_constant(n, gamma, k, 200)?;
        report.metric(format!("gn_error_constant n={n}"), c);
        consts.push(c);
    }
    report.check(
        "normalized G_n - G_0 error bounded",
        consts.iter().all(|c| c.is_finite()) && consts[2] <= 2.0 * consts[0],
        format!("constants {consts:?}"),
    );
    let v = g0(1.0);
    let e = 0.5 * PI.powf(1.5);
    report.check("G_0(1)", (v - C64::new(e, e)).norm() < 1e-14, format!("{v}"));
    let gaps: Vec<f64> = [256usize, 1024, 4096].iter().map(|&n| g0_gn(2.0, n, 0.0, 3.0).map(|c| c.gap)).collect::<Result<_, _>>()?;
    report.check("harmonic G_n -> G_0", gaps[1] < gaps[0] && gaps[2] < gaps[1], format!("{gaps:?}"));
    Ok(())
}

pub fn phi_psi_checks(report: &mut RunReport, n: usize) -> Result<(), HarnessError> {
    let f = torus_profile(0.25);
    let r = phi_psi_hat_suite(n, &f, 0.01, 4)?;
    report.metric("phi_factorization_stated", r.phi_stated);
    report.metric("phi_factorization_completed", r.phi_completed);
    report.metric("psi_factorization_stated", r.psi_stated);
    report.metric("psi_factorization_completed", r.psi_completed);
    report.check(
        format!("Phi_n transform factorization, n = {n}"),
        r.phi_completed <= 1e-6,
        format!("completed {:.3e}, without diagonal term {:.3e}", r.phi_completed, r.phi_stated),
    );
    report.check(
        format!("Psi_n transform factorization, n = {n}"),
        r.psi_completed <= 1e-6,
        format!("completed {:.3e}, without diagonal term {:.3e}", r.psi_completed, r.psi_stated),
    );
    let mut ok = true;
    for i in 1..=40 {
        let xi = 0.5 * i as f64 / 40.0;
        let (v, b) = u_bound(n, xi)?;
        ok &= v <= b;
    }
    report.check("U_n integral bound on a xi grid", ok, "");
    Ok(())
}

/// Change of variables `(k, l) -> (xi - l, l)` on the torus for a smooth periodic integrand.
pub fn cov_check(report: &mut RunReport) {
    let n = 16.0;
    let w = 2.0 * PI / n;
    let p = |k: f64, l: f64| {
        C64::new((w * k).cos() + 0.7 * (w * l).sin(), 0.3 * (w * (k + 2.0 * l)).cos()).exp()
    };
    let lhs = torus_integral(n, 64, p);
    let rhs = torus_integral(n, 64, |xi, l| p(xi - l, l));
    let gap = (lhs - rhs).norm() / lhs.norm();
    report.check("change of variables on the torus", gap < 1e-12, format!("{gap:.3e}"));
}

pub fn fourier_checks(report: &mut RunReport) -> Result<(), HarnessError> {
    let f = TestFunction::new(0.05, 0.3, 1.0);
    let mut gaps = Vec::new();
    for n in [16usize, 32, 64] {
        gaps.push(discretization_gap(&f, n, 3.0)?);
    }
    report.check(
        "int |xi|^3 |F_n f - F f|^2 decreases with n",
        gaps[1] < gaps[0] && gaps[2] < gaps[1],
        format!("{gaps:?}"),
    );
    let c1 = decay_constant(&f, 128, 4.0, 400);
    let c2 = decay_constant(&f, 256, 4.0, 400);
    report.metric("decay_constant_p4_n128", c1);
    report.metric("decay_constant_p4_n256", c2);
    report.check("|F_n f(ny)|^2 (1+(n|y|)^4) bounded", c2 <= 2.0 * c1, format!("{c1:.4e}, {c2:.4e}"));
    let g = GridFunction1D::sample(&f, 64, 64)?;
    let (a, b) = anharmonic_core::spectral::parseval_1d(&g);
    report.check("Parseval in one dimension", (a - b).abs() <= 1e-9 * a, format!("{a:.12e} vs {b:.12e}"));
    Ok(())
}

/// `(-Delta)^s g (x)` by the singular-integral representation with `y = t^2`. Below `y = 1e-3`
/// the second difference is replaced by `-g''(x) y^2`.
pub fn fractional_laplacian_quadrature(
    g: &dyn Fn(f64) -> f64,
    g2: &dyn Fn(f64) -> f64,
    x: f64,
    s: f64,
) -> Result<f64, HarnessError> {
    let cs = 4f64.powf(s) * gamma_fn(0.5 + s) / (PI.sqrt() * gamma_fn(-s).abs());
    let y0: f64 = 1e-3;
    let near = -g2(x) * y0.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
    let cut = 12.0 + x.abs();
    let (lo, top) = (y0.sqrt(), cut.sqrt());
    let breaks: Vec<f64> = (0..=32).map(|i| lo + (top - lo) * i as f64 / 32.0).collect();
    let est = integrate_breaks(
        |t: f64| {
            let y = t * t;
            2.0 * t * (2.0 * g(x) - g(x + y) - g(x - y)) / y.powf(1.0 + 2.0 * s)
        },
        &breaks,
        Tolerance::new(1e-13, 1e-11),
    )?;
    Ok(cs * (near + est.value + 2.0 * g(x) * cut.powf(-2.0 * s) / (2.0 * s)))
}

pub const LEVY_ORACLE_TOL: f64 = 1e-4;

pub fn semigroup_checks(report: &mut RunReport) -> Result<(), HarnessError> {
    let gauss = |u: f64| (-PI * u * u).exp();
    let dgauss = |u: f64| -2.0 * PI * u * (-PI * u * u).exp();
    let gauss2 = |u: f64| (4.0 * PI * PI * u * u - 2.0 * PI) * (-PI * u * u).exp();
    let dgauss2 = |u: f64| (12.0 * PI * PI * u - 8.0 * PI.powi(3) * u.powi(3)) * (-PI * u * u).exp();
    let span = 128.0;
    let m = 1 << 15;
    let nodes: Vec<f64> = (0..m).map(|j| -0.5 * span + span * j as f64 / m as f64).collect();
    let samples: Vec<f64> = nodes.iter().map(|&u| gauss(u)).collect();
    let lg = apply_multiplier(&samples, span, levy_symbol);
    let scale = lg.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut worst: f64 = 0.0;
    for j in [m / 2 - 128, m / 2 - 26, m / 2, m / 2 + 32, m / 2 + 140] {
        let x = nodes[j];
        let a = fractional_laplacian_quadrature(&gauss, &gauss2, x, 0.75)?;
        let b = fractional_laplacian_quadrature(&dgauss, &dgauss2, x, 0.25)?;
        let direct = -(a - b) / SQRT_2;
        worst = worst.max((direct - lg[j]).abs() / scale);
    }
    report.metric("levy_multiplier_vs_quadrature", worst);
    report.check(
        "Levy multiplier vs real-space fractional operators",
        worst <= LEVY_ORACLE_TOL,
        format!("max relative gap {worst:.3e}"),
    );
    let contractive = (0..=2000).all(|i| levy_symbol(-50.0 + 0.05 * i as f64).re <= 0.0);
    report.check("Levy symbol has non-positive real part", contractive, "");
    let t = 0.05;
    let evolved = apply_multiplier(&samples, span, |xi| (SemigroupKind::Levy32.symbol(xi) * t).exp());
    let (m0, m1) = (samples.iter().sum::<f64>(), evolved.iter().sum::<f64>());
    report.check("Levy semigroup conserves mass", rel(m1, m0) <= 1e-12, format!("{m0:.15e} -> {m1:.15e}"));
    let heat = apply_multiplier(&samples, span, |xi| (SemigroupKind::Heat.symbol(xi) * t).exp());
    let var = |v: &[f64]| {
        let mass: f64 = v.iter().sum();
        nodes.iter().zip(v).map(|(x, y)| x * x * y).sum::<f64>() / mass
    };
    let growth = var(&heat) - var(&samples);
    report.check("heat kernel variance grows as 2t", rel(growth, 2.0 * t) <= 1e-9, format!("{growth:.12}"));
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate

pub fn simulate(cfg: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    let mut params = cfg.params;
    params.refresh_gamma();
    let mut report = RunReport::new(cfg.kind.name(), cfg.echo());
    let mut rng = anharmonic_core::fields::replica_rng(cfg.seed, 0);
    let mut state = LatticeState::sample(&params, &mut rng)?;
    let (v0, e0) = (state.volume(), state.energy());
    let scale = (params.n as f64).powf(params.a);
    let b = params.schedule.map_or(0.0, |s| s.1);
    for &t in &cfg.ts {
        let remaining = t * scale - state.t;
        evolve(&mut state, remaining, &Integrator::default(), &mut rng)?;
        report.rows.push(Row {
            experiment: "simulate".into(),
            n: params.n,
            a: params.a,
            b,
            gamma_n: params.gamma,
            beta: params.beta,
            t,
            f_center: 0.0,
            estimate: state.energy() / params.n as f64,
            stderr: 0.0,
            reference: e0 / params.n as f64,
            zscore: 0.0,
            replicas: 1,
            seed: cfg.seed,
        });
    }
    let dv = (state.volume() - v0).abs() / v0.abs().max(1.0);
    report.metric("volume_drift", dv);
    report.metric("energy_drift", state.energy_drift());
    report.metric("swaps", state.swaps as f64);
    report.check("volume conserved", dv <= 1e-10 * state.t.max(1.0), format!("{dv:.3e}"));
    Ok(report)
}

// ---------------------------------------------------------------------------

pub fn run_suite(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    let mut report = RunReport::new(kind.name(), cfg.echo());
    match kind {
        ExperimentKind::Equilibrium => {
            equilibrium_cumulants(&mut report)?;
            equilibrium_expansion(&mut report)?;
        }
        ExperimentKind::Hydro => hydro_couplings(&mut report)?,
        ExperimentKind::IdentitySuite => identity_checks(&mut report, 100, 32)?,
        ExperimentKind::ChaosSuite => chaos_checks(&mut report)?,
        ExperimentKind::SpectralSuite => {
            residue_checks(&mut report)?;
            poisson_checks(&mut report, 256)?;
            phi_psi_checks(&mut report, 128)?;
            prop_main_checks(&mut report, &GAP_NS)?;
            scaling_checks(&mut report, &SCALING_NS)?;
            semigroup_checks(&mut report)?;
            fourier_checks(&mut report)?;
            cov_check(&mut report);
        }
        ExperimentKind::Simulate => return simulate(cfg),
        _ => return Err(HarnessError::Config(format!("{kind} is not a suite"))),
    }
    Ok(report)
}
