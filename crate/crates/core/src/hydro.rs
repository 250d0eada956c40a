//! Fluctuating hydrodynamics coupling constants and universality classification.

use std::fmt;

use crate::equilibrium::{quartic, SiteMeasure};
use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Real};

pub type Mat2<T> = [[T; 2]; 2];

/// Even, non-negative perturbation `V` of the harmonic site energy.
#[derive(Clone, Copy)]
pub struct Potential<F> {
    pub v: F,
    pub even: bool,
}

impl<T: Real> Potential<fn(T) -> T> {
    pub fn quartic() -> Self {
        Self {
            v: quartic as fn(T) -> T,
            even: true,
        }
    }
}

impl<F> Potential<F> {
    pub fn new(v: F, even: bool) -> Self {
        Self { v, even }
    }
}

fn check_even<T: Real, F: Fn(T) -> T>(pot: &Potential<F>) -> Result<()> {
    if !pot.even {
        return Err(Error::InvalidParams("potential must be declared even".into()));
    }
    for k in 1..=16usize {
        let u = lit::<T>(0.37) * from_usize::<T>(k);
        let (plus, minus) = ((pot.v)(u), (pot.v)(-u));
        if (plus - minus).abs() > lit::<T>(1e-12) * T::one().max(plus.abs()) {
            return Err(Error::NotEven {
                u: u.to_f64().unwrap_or(f64::NAN),
                plus: plus.to_f64().unwrap_or(f64::NAN),
                minus: minus.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    Ok(())
}

/// Single-site cumulants of `Y` and `A = Y^2 + 2 gamma V(Y)` (twice the site energy).
#[derive(Debug, Clone, Copy)]
struct Cumulants<T> {
    yy: T,
    aa: T,
    ya: T,
    yyy: T,
    yya: T,
    yaa: T,
    aaa: T,
}

fn cumulants<T: Real, F: Fn(T) -> T>(m: &SiteMeasure<T, F>, gamma: T) -> Result<Cumulants<T>> {
    let y = |u: T| u;
    let a = |u: T| u * u + lit::<T>(2.0) * gamma * m.potential(u);
    Ok(Cumulants {
        yy: m.cumulant2(y, y)?,
        aa: m.cumulant2(a, a)?,
        ya: m.cumulant2(y, a)?,
        yyy: m.cumulant3(y, y, y)?,
        yya: m.cumulant3(y, y, a)?,
        yaa: m.cumulant3(y, a, a)?,
        aaa: m.cumulant3(a, a, a)?,
    })
}

fn measure<T: Real, F: Fn(T) -> T + Copy>(
    beta: T,
    tau: T,
    gamma: T,
    pot: &Potential<F>,
) -> Result<SiteMeasure<T, F>> {
    check_even(pot)?;
    SiteMeasure::new(beta, tau, gamma, pot.v)
}

/// `Gamma = beta (<Y;Y><e;e> - <Y;e>^2)`.
pub fn gamma_function<T: Real, F: Fn(T) -> T + Copy>(
    beta: T,
    tau: T,
    gamma: T,
    pot: &Potential<F>,
) -> Result<T> {
    let m = measure(beta, tau, gamma, pot)?;
    let y = |u: T| u;
    let e = |u: T| m.energy(u);
    let yy = m.cumulant2(y, y)?;
    let ee = m.cumulant2(e, e)?;
    let ye = m.cumulant2(y, e)?;
    Ok(beta * (yy * ee - ye * ye))
}

/// First derivatives of the tension in `(v, e)` at arbitrary tension.
pub fn tension_gradient_at<T: Real, F: Fn(T) -> T + Copy>(
    beta: T,
    tau: T,
    gamma: T,
    pot: &Potential<F>,
) -> Result<(T, T)> {
    let m = measure(beta, tau, gamma, pot)?;
    let y = |u: T| u;
    let e = |u: T| m.energy(u);
    let e_tau = |u: T| m.energy(u) + tau * u;
    let yy = m.cumulant2(y, y)?;
    let ee = m.cumulant2(e, e)?;
    let ye = m.cumulant2(y, e)?;
    let g = beta * (yy * ee - ye * ye);
    Ok((-m.cumulant2(e, e_tau)? / g, m.cumulant2(y, e_tau)? / g))
}

/// `(d tau / d v, d tau / d e)` at zero tension; the second is zero by symmetry.
pub fn tension_derivatives<T: Real, F: Fn(T) -> T + Copy>(
    beta: T,
    gamma: T,
    pot: &Potential<F>,
) -> Result<(T, T)> {
    let m = measure(beta, T::zero(), gamma, pot)?;
    let k = cumulants(&m, gamma)?;
    let big_gamma = beta * lit(0.25) * (k.yy * k.aa - k.ya * k.ya);
    Ok((-k.aa / (lit::<T>(4.0) * big_gamma), T::zero()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingConstants<T> {
    pub big_gamma: T,
    /// Sound velocity.
    pub c: T,
    pub z1: T,
    pub z2: T,
    pub z1t: T,
    pub z2t: T,
    pub psi1: [T; 2],
    pub psi2: [T; 2],
    pub r: Mat2<T>,
    pub hv: Mat2<T>,
    pub he: Mat2<T>,
    pub g1: Mat2<T>,
    pub g2: Mat2<T>,
    pub dtau_dv: T,
    pub dtau_de: T,
    pub d2tau_dv2: T,
    pub d2tau_de2: T,
    /// Mixed derivative, mean of the two Jacobian-inversion routes.
    pub d2tau_dvde: T,
    /// Difference between the two routes to the mixed derivative.
    pub mixed_asymmetry: T,
}

fn solve2<T: Real>(m: Mat2<T>, rhs: [T; 2]) -> [T; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [
        (m[1][1] * rhs[0] - m[0][1] * rhs[1]) / det,
        (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det,
    ]
}

fn quad_form<T: Real>(a: [T; 2], m: &Mat2<T>, b: [T; 2]) -> T {
    let mut s = T::zero();
    for i in 0..2 {
        for j in 0..2 {
            s += a[i] * m[i][j] * b[j];
        }
    }
    s
}

/// Coupling constants at zero tension.
pub fn coupling_constants<T: Real, F: Fn(T) -> T + Copy>(
    beta: T,
    gamma: T,
    pot: &Potential<F>,
) -> Result<CouplingConstants<T>> {
    let m = measure(beta, T::zero(), gamma, pot)?;
    let k = cumulants(&m, gamma)?;
    let (half, quarter, two) = (lit::<T>(0.5), lit::<T>(0.25), lit::<T>(2.0));
    let tau = T::zero();

    let big_gamma = beta * quarter * (k.yy * k.aa - k.ya * k.ya);
    let inv_g = big_gamma.recip();
    let dtau_dv = -quarter * inv_g * k.aa;
    let dtau_de = T::zero();

    // Derivatives of Gamma and of the first tension derivatives in (tau, beta).
    let dgamma_dtau = beta * beta * quarter * (-k.yyy * k.aa - k.yy * k.yaa + two * k.yya * k.ya);
    let dgamma_dbeta = big_gamma / beta
        + beta * lit(0.125) * (-k.yya * k.aa - k.yy * k.aaa + two * k.yaa * k.ya);
    let dinv_dtau = -dgamma_dtau * inv_g * inv_g;
    let dinv_dbeta = -dgamma_dbeta * inv_g * inv_g;
    let d_tau_dvtau = -quarter * dinv_dtau * k.aa - quarter * inv_g * (-beta * k.yaa + two * k.ya);
    let d_beta_dvtau = -quarter * dinv_dbeta * k.aa + lit::<T>(0.125) * inv_g * k.aaa;
    let d_tau_detau = half * dinv_dtau * k.ya + half * inv_g * (-beta * k.yya + two * k.yy);
    let d_beta_detau = half * dinv_dbeta * k.ya - quarter * inv_g * k.yaa;

    // Rows: derivative in tau, in beta. Columns: v, e.
    let jac = [
        [-beta * k.yy, -beta * half * k.ya],
        [-half * k.ya, -quarter * k.aa],
    ];
    let [d2_vv, d2_ev] = solve2(jac, [d_tau_dvtau, d_beta_dvtau]);
    let [d2_ve, d2_ee] = solve2(jac, [d_tau_detau, d_beta_detau]);
    let mixed = (d2_ev + d2_ve) * half;

    let c = two * dtau_dv;
    if !(c < T::zero()) {
        return Err(Error::NegativeRadicand("sound velocity"));
    }
    let z1 = -(-beta * c * half).sqrt();
    let z2 = (-c / (two * big_gamma)).sqrt();
    let z1t = (-c / (two * beta)).sqrt();
    let z2t = (-big_gamma * c * half).sqrt();
    let psi1 = [z1.recip(), -tau / z1];
    let psi2 = [dtau_de / z2, -dtau_dv / z2];
    let r = [[dtau_dv / z1t, dtau_de / z1t], [tau / z2t, z2t.recip()]];
    let hv = [[two * d2_vv, two * mixed], [two * mixed, two * d2_ee]];
    let he = [
        [
            -tau * hv[0][0] - two * dtau_dv * dtau_dv,
            -tau * hv[0][1] - two * dtau_dv * dtau_de,
        ],
        [
            -tau * hv[1][0] - two * dtau_dv * dtau_de,
            -tau * hv[1][1] - two * dtau_de * dtau_de,
        ],
    ];
    let psi = [psi1, psi2];
    let mut g1 = [[T::zero(); 2]; 2];
    let mut g2 = [[T::zero(); 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            let qv = quad_form(psi[a], &hv, psi[b]);
            let qe = quad_form(psi[a], &he, psi[b]);
            g1[a][b] = half * (r[0][0] * qv + r[0][1] * qe);
            g2[a][b] = half * (r[1][0] * qv + r[1][1] * qe);
        }
    }
    Ok(CouplingConstants {
        big_gamma,
        c,
        z1,
        z2,
        z1t,
        z2t,
        psi1,
        psi2,
        r,
        hv,
        he,
        g1,
        g2,
        dtau_dv,
        dtau_de,
        d2tau_dv2: d2_vv,
        d2tau_de2: d2_ee,
        d2tau_dvde: mixed,
        mixed_asymmetry: d2_ev - d2_ve,
    })
}

pub fn quartic_coupling_constants<T: Real>(beta: T, gamma: T) -> Result<CouplingConstants<T>> {
    coupling_constants(beta, gamma, &Potential::<fn(T) -> T>::quartic())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UniversalityClass {
    DiffusiveSoundLevyHeat,
    DiffusiveSoundDiffusiveHeat,
    GoldLevy,
    LevySoundDiffusiveHeat,
}

impl UniversalityClass {
    pub fn label(&self) -> &'static str {
        match self {
            Self::DiffusiveSoundLevyHeat => "diffusive sound + Lévy-3/2 heat",
            Self::DiffusiveSoundDiffusiveHeat => "diffusive sound + diffusive heat",
            Self::GoldLevy => "Gold-Lévy sound + Gold-Lévy heat",
            Self::LevySoundDiffusiveHeat => "Lévy-3/2 sound + diffusive heat",
        }
    }
}

impl fmt::Display for UniversalityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub const CLASS_THRESHOLD: f64 = 1e-6;

pub fn classify_couplings<T: Real>(g1_22: T, g2_11: T) -> UniversalityClass {
    let thr = lit::<T>(CLASS_THRESHOLD);
    match (g1_22.abs() < thr, g2_11.abs() < thr) {
        (true, false) => UniversalityClass::DiffusiveSoundLevyHeat,
        (true, true) => UniversalityClass::DiffusiveSoundDiffusiveHeat,
        (false, false) => UniversalityClass::GoldLevy,
        (false, true) => UniversalityClass::LevySoundDiffusiveHeat,
    }
}

pub fn classify_universality<T: Real>(cc: &CouplingConstants<T>) -> UniversalityClass {
    classify_couplings(cc.g1[1][1], cc.g2[0][0])
}

/// Closed-form harmonic values at zero tension, as stated for `gamma = 0`.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicReference<T> {
    pub c: T,
    pub z1: T,
    pub z2: T,
    pub z1t: T,
    pub z2t: T,
    pub psi1: [T; 2],
    pub psi2: [T; 2],
    pub r: Mat2<T>,
    pub hv: Mat2<T>,
    pub he: Mat2<T>,
    pub g2_11: T,
}

pub fn harmonic_reference<T: Real>(beta: T) -> HarmonicReference<T> {
    let sb = beta.sqrt();
    let s2 = lit::<T>(2.0).sqrt();
    let z = T::zero();
    HarmonicReference {
        c: lit(-2.0),
        z1: -sb,
        z2: s2 * beta,
        z1t: -sb.recip(),
        z2t: (s2 * beta).recip(),
        psi1: [-sb.recip(), z],
        psi2: [z, (s2 * beta).recip()],
        r: [[-sb, z], [z, s2 * beta]],
        hv: [[z, z], [z, z]],
        he: [[lit(-2.0), z], [z, z]],
        g2_11: -s2,
    }
}

/// Named entries where the computed constants differ from the harmonic closed forms.
pub fn harmonic_mismatches<T: Real>(cc: &CouplingConstants<T>, beta: T, tol: T) -> Vec<(String, T, T)> {
    let h = harmonic_reference(beta);
    let mut out = Vec::new();
    let mut check = |name: String, got: T, want: T| {
        if (got - want).abs() > tol {
            out.push((name, got, want));
        }
    };
    check("c".into(), cc.c, h.c);
    check("Z1".into(), cc.z1, h.z1);
    check("Z2".into(), cc.z2, h.z2);
    check("Z1t".into(), cc.z1t, h.z1t);
    check("Z2t".into(), cc.z2t, h.z2t);
    for i in 0..2 {
        check(format!("psi1[{i}]"), cc.psi1[i], h.psi1[i]);
        check(format!("psi2[{i}]"), cc.psi2[i], h.psi2[i]);
        for j in 0..2 {
            check(format!("R[{i}][{j}]"), cc.r[i][j], h.r[i][j]);
            check(format!("Hv[{i}][{j}]"), cc.hv[i][j], h.hv[i][j]);
            check(format!("He[{i}][{j}]"), cc.he[i][j], h.he[i][j]);
        }
    }
    check("G2[1][1]".into(), cc.g2[0][0], h.g2_11);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> Potential<fn(f64) -> f64> {
        Potential::quartic()
    }

    #[test]
    fn gamma_function_gaussian() {
        let g = gamma_function(1.0, 0.0, 0.0, &q()).unwrap();
        assert!((g - 0.5).abs() < 1e-12);
        let g2 = gamma_function(2.0, 0.0, 0.0, &q()).unwrap();
        assert!((g2 - 1.0 / 8.0).abs() < 1e-12);
        let g05 = gamma_function(1.0, 0.0, 0.05, &q()).unwrap();
        assert!((g05 - g).abs() < 0.1);
    }

    #[test]
    fn gamma_function_flat_in_tau_at_zero() {
        let h = 1e-4;
        for gamma in [0.0, 0.1] {
            let up = gamma_function(1.0, h, gamma, &q()).unwrap();
            let dn = gamma_function(1.0, -h, gamma, &q()).unwrap();
            assert!(((up - dn) / (2.0 * h)).abs() < 1e-6);
        }
    }

    #[test]
    fn tension_derivatives_gaussian() {
        let (dv, de) = tension_derivatives(1.0, 0.0, &q()).unwrap();
        assert!((dv + 1.0).abs() < 1e-12);
        assert_eq!(de, 0.0);
        let (dv_t, de_t) = tension_gradient_at(1.0, 0.0, 0.1, &q()).unwrap();
        let (dv0, _) = tension_derivatives(1.0, 0.1, &q()).unwrap();
        assert!((dv_t - dv0).abs() < 1e-12);
        assert!(de_t.abs() < 1e-13);
    }

    #[test]
    fn harmonic_constants() {
        for beta in [1.0f64, 2.0, 0.7] {
            let cc = quartic_coupling_constants(beta, 0.0).unwrap();
            let mism = harmonic_mismatches(&cc, beta, 1e-8);
            let names: Vec<&str> = mism.iter().map(|m| m.0.as_str()).collect();
            assert_eq!(names, vec!["Z1t"], "beta={beta}: {mism:?}");
            assert!((cc.z1t + h_z1t(beta)).abs() < 1e-10);
            assert!((cc.g2[0][0] + 2f64.sqrt()).abs() < 1e-8);
        }
    }

    fn h_z1t(beta: f64) -> f64 {
        harmonic_reference(beta).z1t
    }

    #[test]
    fn g1_22_vanishes_for_quartic() {
        for gamma in [0.0, 0.05, 0.1, 0.2] {
            let cc = quartic_coupling_constants(1.0f64, gamma).unwrap();
            assert!(cc.g1[1][1].abs() < 1e-6, "gamma={gamma}: {}", cc.g1[1][1]);
            assert_eq!(classify_universality(&cc), UniversalityClass::DiffusiveSoundLevyHeat);
            assert!(cc.hv[0][0].abs() < 1e-8 && cc.hv[1][1].abs() < 1e-8);
            assert!(cc.psi1[1].abs() < 1e-12 && cc.psi2[0].abs() < 1e-12);
            assert!(cc.mixed_asymmetry.abs() < 1e-8, "{}", cc.mixed_asymmetry);
        }
    }

    #[test]
    fn classification_branches() {
        assert_eq!(classify_couplings(0.0, 0.0), UniversalityClass::DiffusiveSoundDiffusiveHeat);
        assert_eq!(classify_couplings(1.0, 1.0), UniversalityClass::GoldLevy);
        assert_eq!(classify_couplings(1.0, 0.0), UniversalityClass::LevySoundDiffusiveHeat);
        assert_eq!(classify_couplings(0.0, 1.0), UniversalityClass::DiffusiveSoundLevyHeat);
    }

    #[test]
    fn odd_potential_rejected() {
        let odd = Potential::new(|u: f64| u.powi(3).abs() + u, true);
        assert!(matches!(gamma_function(1.0, 0.0, 0.1, &odd), Err(Error::NotEven { .. })));
        let undeclared = Potential::new(|u: f64| u * u, false);
        assert!(gamma_function(1.0, 0.0, 0.1, &undeclared).is_err());
    }

    #[test]
    fn sextic_potential_supported() {
        let sextic = Potential::new(|u: f64| u.powi(6) / 6.0, true);
        let cc = coupling_constants(1.0, 0.05, &sextic).unwrap();
        assert!(cc.g1[1][1].abs() < 1e-6);
        assert_eq!(classify_universality(&cc), UniversalityClass::DiffusiveSoundLevyHeat);
    }
}
