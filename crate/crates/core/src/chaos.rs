//! Orthogonal polynomials of the site measure, occupation configurations, the exchange
//! operator on chaos coefficients, Dirichlet forms and the resolvent integral bound.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex;

use crate::equilibrium::{ModelParams, QuarticMeasure};
use crate::error::{Error, Result};
use crate::quad::{integrate_breaks, Tolerance};
use crate::scalar::{from_i64, lit, Real};

pub const MAX_DEGREE: usize = 8;

/// Monic orthogonal polynomials `H_0..=H_kmax` under `exp(-e_gamma(u)) du`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoBasis<T> {
    pub gamma: T,
    /// `coeffs[k][j]` is the coefficient of `u^j` in `H_k`.
    pub coeffs: Vec<Vec<T>>,
    pub norms: Vec<T>,
}

fn horner<T: Real>(c: &[T], u: T) -> T {
    c.iter().rev().fold(T::zero(), |acc, &a| acc * u + a)
}

impl<T: Real> OrthoBasis<T> {
    pub fn kmax(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, k: usize, u: T) -> T {
        horner(&self.coeffs[k], u)
    }

    /// Largest `|<H_j H_k>| / sqrt(N_j N_k)` over `j != k`.
    pub fn max_normalized_cross(&self) -> Result<T> {
        let m = site_measure(self.gamma)?;
        let mut worst = T::zero();
        for j in 0..=self.kmax() {
            for k in 0..j {
                let ip = m.expect(|u| self.eval(j, u) * self.eval(k, u))?;
                worst = worst.max(ip.abs() / (self.norms[j] * self.norms[k]).sqrt());
            }
        }
        Ok(worst)
    }

    /// Largest absolute cross product `|<H_j H_k>|` over `j != k`.
    pub fn max_cross(&self) -> Result<T> {
        let m = site_measure(self.gamma)?;
        let mut worst = T::zero();
        for j in 0..=self.kmax() {
            for k in 0..j {
                worst = worst.max(m.expect(|u| self.eval(j, u) * self.eval(k, u))?.abs());
            }
        }
        Ok(worst)
    }
}

fn site_measure<T: Real>(gamma: T) -> Result<QuarticMeasure<T>> {
    QuarticMeasure::quartic(&ModelParams::standard(gamma))
}

/// Gram-Schmidt on `(1, u H_0, u H_1, ...)`, which spans the same flag as `(1, u, u^2, ...)`.
pub fn build_basis<T: Real>(gamma: T, kmax: usize) -> Result<OrthoBasis<T>> {
    if kmax > MAX_DEGREE {
        return Err(Error::InvalidParams(format!("kmax {kmax} > {MAX_DEGREE}")));
    }
    let m = site_measure(gamma)?;
    let mut coeffs: Vec<Vec<T>> = vec![vec![T::one()]];
    let mut norms = vec![T::one()];
    for k in 1..=kmax {
        let mut p = vec![T::zero(); k + 1];
        p[1..].copy_from_slice(&coeffs[k - 1]);
        for j in 0..k {
            let hj = &coeffs[j];
            let ip = m.expect(|u| horner(&p, u) * horner(hj, u))?;
            let proj = ip / norms[j];
            for (pi, &hi) in p.iter_mut().zip(hj.iter()) {
                *pi -= proj * hi;
            }
        }
        let norm = m.expect(|u| {
            let v = horner(&p, u);
            v * v
        })?;
        coeffs.push(p);
        norms.push(norm);
    }
    let basis = OrthoBasis { gamma, coeffs, norms };
    let cross = basis.max_normalized_cross()?;
    if cross > lit(1e-8) {
        return Err(Error::LossOfOrthogonality(cross.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(basis)
}

/// Finite-support occupation configuration `sigma`, sorted by site.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Occupation(Vec<(i64, u32)>);

impl Occupation {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Builds from `(site, multiplicity)` pairs; repeated sites add up, zeros are dropped.
    pub fn from_pairs<I: IntoIterator<Item = (i64, u32)>>(pairs: I) -> Self {
        let mut map: BTreeMap<i64, u32> = BTreeMap::new();
        for (x, m) in pairs {
            *map.entry(x).or_default() += m;
        }
        Self(map.into_iter().filter(|&(_, m)| m > 0).collect())
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, m)| m).sum()
    }

    pub fn get(&self, x: i64) -> u32 {
        match self.0.binary_search_by_key(&x, |&(s, _)| s) {
            Ok(i) => self.0[i].1,
            Err(_) => 0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &(i64, u32)> {
        self.0.iter()
    }

    pub fn max_multiplicity(&self) -> u32 {
        self.0.iter().map(|&(_, m)| m).max().unwrap_or(0)
    }

    /// Exchanges the multiplicities at `x` and `x + 1` (`x + 1` taken mod `n` on a ring).
    pub fn swapped(&self, x: i64, geom: Geometry) -> Self {
        let y = geom.next(x);
        let (mx, my) = (self.get(x), self.get(y));
        let rest = self.0.iter().filter(|&&(s, _)| s != x && s != y).copied();
        Self::from_pairs(rest.chain([(x, my), (y, mx)]))
    }

    /// Bonds `(x, x+1)` whose exchange changes `sigma`.
    pub fn active_bonds(&self, geom: Geometry) -> BTreeSet<i64> {
        let mut out = BTreeSet::new();
        for &(s, _) in &self.0 {
            for x in [geom.prev(s), s] {
                if self.get(x) != self.get(geom.next(x)) {
                    out.insert(x);
                }
            }
        }
        out
    }
}

/// Infinite line or periodic ring of `n` sites labelled `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Line,
    Ring(usize),
}

impl Geometry {
    fn next(self, x: i64) -> i64 {
        match self {
            Geometry::Line => x + 1,
            Geometry::Ring(n) => (x + 1).rem_euclid(n as i64),
        }
    }
    fn prev(self, x: i64) -> i64 {
        match self {
            Geometry::Line => x - 1,
            Geometry::Ring(n) => (x - 1).rem_euclid(n as i64),
        }
    }
}

/// Coefficients `Psi(sigma)` of a chaos of fixed degree.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosCoefficients<T> {
    pub degree: u32,
    pub map: BTreeMap<Occupation, T>,
}

impl<T: Real> ChaosCoefficients<T> {
    pub fn new(degree: u32) -> Self {
        Self {
            degree,
            map: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, sigma: Occupation, value: T) -> Result<()> {
        if sigma.degree() != self.degree {
            return Err(Error::InvalidParams(format!(
                "occupation of degree {} in chaos of degree {}",
                sigma.degree(),
                self.degree
            )));
        }
        self.map.insert(sigma, value);
        Ok(())
    }

    pub fn get(&self, sigma: &Occupation) -> T {
        self.map.get(sigma).copied().unwrap_or_else(T::zero)
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            degree: self.degree,
            map: self.map.iter().map(|(k, &v)| (k.clone(), v * s)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.map.values().all(|v| *v == T::zero())
    }
}

/// `N(sigma) = prod_x norms[sigma_x]`.
pub fn poly_norm<T: Real>(sigma: &Occupation, basis: &OrthoBasis<T>) -> Result<T> {
    if sigma.max_multiplicity() as usize > basis.kmax() {
        return Err(Error::InvalidParams(format!(
            "multiplicity {} above basis degree {}",
            sigma.max_multiplicity(),
            basis.kmax()
        )));
    }
    Ok(sigma.iter().fold(T::one(), |acc, &(_, m)| acc * basis.norms[m as usize]))
}

/// The map `sigma -> Psi(sigma^{x,x+1})`.
pub fn noise_on_chaos<T: Real>(psi: &ChaosCoefficients<T>, x: i64, geom: Geometry) -> ChaosCoefficients<T> {
    ChaosCoefficients {
        degree: psi.degree,
        map: psi.map.iter().map(|(s, &v)| (s.swapped(x, geom), v)).collect(),
    }
}

fn closure_support<T: Real>(psi: &ChaosCoefficients<T>, geom: Geometry) -> BTreeSet<Occupation> {
    let mut set: BTreeSet<Occupation> = psi.map.keys().cloned().collect();
    for s in psi.map.keys() {
        for x in s.active_bonds(geom) {
            set.insert(s.swapped(x, geom));
        }
    }
    set
}

/// `(S Psi)(sigma) = sum_x [Psi(sigma^{x,x+1}) - Psi(sigma)]`.
pub fn carre<T: Real>(psi: &ChaosCoefficients<T>, geom: Geometry) -> ChaosCoefficients<T> {
    let mut out = ChaosCoefficients::new(psi.degree);
    for s in closure_support(psi, geom) {
        let own = psi.get(&s);
        let v = s
            .active_bonds(geom)
            .into_iter()
            .fold(T::zero(), |acc, x| acc + psi.get(&s.swapped(x, geom)) - own);
        if v != T::zero() {
            out.map.insert(s, v);
        }
    }
    out
}

fn dirichlet_with<T: Real>(
    psi: &ChaosCoefficients<T>,
    geom: Geometry,
    weight: &dyn Fn(&Occupation) -> Result<T>,
) -> Result<T> {
    let mut total = T::zero();
    for s in closure_support(psi, geom) {
        let own = psi.get(&s);
        let mut local = T::zero();
        for x in s.active_bonds(geom) {
            let d = psi.get(&s.swapped(x, geom)) - own;
            local += d * d;
        }
        if local != T::zero() {
            total += weight(&s)? * local;
        }
    }
    Ok(total * lit(0.5))
}

/// `1/2 sum_x sum_sigma N(sigma) [Psi(sigma^{x,x+1}) - Psi(sigma)]^2`.
pub fn dirichlet_form<T: Real>(psi: &ChaosCoefficients<T>, basis: &OrthoBasis<T>, geom: Geometry) -> Result<T> {
    dirichlet_with(psi, geom, &|s| poly_norm(s, basis))
}

/// Same sum with `N = 1`.
pub fn dirichlet_form_unweighted<T: Real>(psi: &ChaosCoefficients<T>, geom: Geometry) -> T {
    dirichlet_with(psi, geom, &|_| Ok(T::one())).expect("unit weight never fails")
}

/// `sum_sigma N(sigma) Psi(sigma) Phi(sigma)`, with `N = 1` when no basis is given.
pub fn chaos_inner<T: Real>(
    psi: &ChaosCoefficients<T>,
    phi: &ChaosCoefficients<T>,
    basis: Option<&OrthoBasis<T>>,
) -> Result<T> {
    let mut s = T::zero();
    for (k, &v) in &psi.map {
        let w = match basis {
            Some(b) => poly_norm(k, b)?,
            None => T::one(),
        };
        s += w * v * phi.get(k);
    }
    Ok(s)
}

/// Finitely supported function on `Z^2`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TwoSiteField<T> {
    pub values: BTreeMap<(i64, i64), T>,
}

impl<T: Real> TwoSiteField<T> {
    pub fn new() -> Self {
        Self {
            values: BTreeMap::new(),
        }
    }

    pub fn from_entries<I: IntoIterator<Item = ((i64, i64), T)>>(it: I) -> Self {
        let mut f = Self::new();
        for (k, v) in it {
            *f.values.entry(k).or_insert_with(T::zero) += v;
        }
        f
    }

    pub fn get(&self, x: i64, y: i64) -> T {
        self.values.get(&(x, y)).copied().unwrap_or_else(T::zero)
    }

    /// Bounding box `(xmin, xmax, ymin, ymax)` of the nonzero entries.
    pub fn bounds(&self) -> Option<(i64, i64, i64, i64)> {
        let nz = self.values.iter().filter(|(_, v)| **v != T::zero());
        let mut b: Option<(i64, i64, i64, i64)> = None;
        for (&(x, y), _) in nz {
            b = Some(match b {
                None => (x, x, y, y),
                Some((a, bb, c, d)) => (a.min(x), bb.max(x), c.min(y), d.max(y)),
            });
        }
        b
    }

    pub fn sum_squares(&self) -> T {
        self.values.values().map(|&v| v * v).sum()
    }

    /// Coefficients of `sum F(x, y) H_{p delta_x + q delta_y}`; for `p == q` the two orderings add.
    pub fn to_chaos(&self, p: u32, q: u32) -> Result<ChaosCoefficients<T>> {
        let mut out = ChaosCoefficients::new(p + q);
        for (&(x, y), &v) in &self.values {
            if x == y {
                return Err(Error::InvalidParams(format!("diagonal entry at ({x}, {x})")));
            }
            let s = Occupation::from_pairs([(x, p), (y, q)]);
            let prev = out.get(&s);
            out.map.insert(s, prev + v);
        }
        Ok(out)
    }
}

/// Fills the diagonal with the four-neighbour average and returns `(G, D0(G))`.
pub fn extend_and_d0<T: Real>(f: &TwoSiteField<T>) -> Result<(TwoSiteField<T>, T)> {
    if let Some((&(x, _), _)) = f.values.iter().find(|(&(x, y), v)| x == y && **v != T::zero()) {
        return Err(Error::InvalidParams(format!("F must vanish on the diagonal, F({x},{x}) != 0")));
    }
    let Some((x0, x1, y0, y1)) = f.bounds() else {
        return Ok((TwoSiteField::new(), T::zero()));
    };
    let mut g = TwoSiteField::from_entries(
        f.values.iter().filter(|(_, v)| **v != T::zero()).map(|(&k, &v)| (k, v)),
    );
    let (lo, hi) = (x0.min(y0) - 1, x1.max(y1) + 1);
    for d in lo..=hi {
        let s = f.get(d + 1, d) + f.get(d - 1, d) + f.get(d, d + 1) + f.get(d, d - 1);
        if s != T::zero() {
            g.values.insert((d, d), s * lit(0.25));
        }
    }
    let (gx0, gx1, gy0, gy1) = g.bounds().unwrap_or((0, 0, 0, 0));
    let mut d0 = T::zero();
    for x in gx0 - 2..=gx1 + 2 {
        for y in gy0 - 2..=gy1 + 2 {
            let here = g.get(x, y);
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let d = g.get(x + dx, y + dy) - here;
                d0 += d * d;
            }
        }
    }
    Ok((g, d0))
}

/// `sum_x e^{2 i pi k x} F(x, y)` grouped by `y`.
fn partial_transform<T: Real>(f: &TwoSiteField<T>, k: T) -> Vec<(i64, Complex<T>)> {
    let mut by_y: BTreeMap<i64, Complex<T>> = BTreeMap::new();
    let two_pi = T::PI() + T::PI();
    for (&(x, y), &v) in &f.values {
        let ph = Complex::from_polar(v, two_pi * k * from_i64::<T>(x));
        *by_y.entry(y).or_insert_with(|| Complex::new(T::zero(), T::zero())) += ph;
    }
    by_y.into_iter().collect()
}

fn transform_from_partial<T: Real>(a: &[(i64, Complex<T>)], l: T) -> Complex<T> {
    let two_pi = T::PI() + T::PI();
    a.iter().fold(Complex::new(T::zero(), T::zero()), |acc, &(y, c)| {
        acc + c * Complex::from_polar(T::one(), two_pi * l * from_i64::<T>(y))
    })
}

/// `F^(k, l) = sum F(x, y) e^{2 i pi (k x + l y)}`.
pub fn fourier_two_site<T: Real>(f: &TwoSiteField<T>, k: T, l: T) -> Complex<T> {
    transform_from_partial(&partial_transform(f, k), l)
}

fn refined_breaks<T: Real>(z: T) -> Vec<T> {
    let half = lit::<T>(0.5);
    let mut pts = vec![-half, T::zero(), half];
    let mut s = z.sqrt();
    while s < lit(0.25) {
        pts.push(s);
        pts.push(-s);
        s = s * lit(4.0);
    }
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    pts.dedup();
    pts
}

/// `∬ |F^(k,l)|^2 / (z + 4 sin^2(pi k) + 4 sin^2(pi l)) dk dl` over `[-1/2, 1/2]^2`.
pub fn h_minus_one_bound<T: Real>(f: &TwoSiteField<T>, z: T) -> Result<T> {
    if !(z > T::zero()) {
        return Err(Error::InvalidParams("z must be positive".into()));
    }
    if f.values.iter().any(|(&(x, y), v)| x == y && *v != T::zero()) {
        return Err(Error::InvalidParams("F must vanish on the diagonal".into()));
    }
    if f.values.values().all(|v| *v == T::zero()) {
        return Ok(T::zero());
    }
    let breaks = refined_breaks(z);
    let four = lit::<T>(4.0);
    let inner_tol = Tolerance::new(T::zero(), lit::<T>(1e-11).max(T::epsilon() * lit(100.0)));
    let outer_tol = Tolerance::new(T::zero(), lit::<T>(1e-9).max(T::epsilon() * lit(1000.0)));
    let mut failure: Option<Error> = None;
    let est = integrate_breaks(
        |k: T| {
            let a = partial_transform(f, k);
            let sk = (T::PI() * k).sin();
            let base = z + four * sk * sk;
            match integrate_breaks(
                |l: T| {
                    let sl = (T::PI() * l).sin();
                    transform_from_partial(&a, l).norm_sqr() / (base + four * sl * sl)
                },
                &breaks,
                inner_tol,
            ) {
                Ok(e) => e.value,
                Err(e) => {
                    failure.get_or_insert(e);
                    T::zero()
                }
            }
        },
        &breaks,
        outer_tol,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(est.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::kappa;

    fn occ(p: &[(i64, u32)]) -> Occupation {
        Occupation::from_pairs(p.iter().copied())
    }

    #[test]
    fn hermite_at_zero_gamma() {
        let b = build_basis(0.0f64, 8).unwrap();
        let fact = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0, 40320.0];
        for (k, f) in fact.iter().enumerate() {
            assert!((b.norms[k] / f - 1.0).abs() < 1e-11, "k={k}: {}", b.norms[k]);
        }
        assert!((b.coeffs[2][0] + 1.0).abs() < 1e-13 && b.coeffs[2][1].abs() < 1e-13);
        assert_eq!(b.coeffs[2][2], 1.0);
        assert_eq!(b.coeffs[1], vec![0.0, 1.0]);
    }

    #[test]
    fn third_polynomial_uses_kappa() {
        let b = build_basis(0.1f64, 4).unwrap();
        let k = kappa(0.1, 1.0).unwrap();
        assert!((b.coeffs[3][1] + k).abs() < 1e-11);
        assert!(b.coeffs[3][0].abs() < 1e-13 && b.coeffs[3][2].abs() < 1e-13);
    }

    #[test]
    fn orthogonality() {
        for gamma in [0.0f64, 0.1, 0.3] {
            let b = build_basis(gamma, 8).unwrap();
            assert!(b.max_cross().unwrap() < 1e-10, "gamma={gamma}");
        }
        assert!(build_basis(0.0f64, 9).is_err());
    }

    #[test]
    fn poly_norm_examples() {
        let b = build_basis(0.0f64, 4).unwrap();
        assert!((poly_norm(&occ(&[(0, 3), (1, 1)]), &b).unwrap() - 6.0).abs() < 1e-11);
        assert_eq!(poly_norm(&Occupation::empty(), &b).unwrap(), 1.0);
        let b1 = build_basis(0.1f64, 4).unwrap();
        let n = poly_norm(&occ(&[(0, 2), (5, 2)]), &b1).unwrap();
        assert_eq!(n, b1.norms[2] * b1.norms[2]);
        assert!(poly_norm(&occ(&[(0, 5)]), &b1).is_err());
    }

    #[test]
    fn occupation_swaps() {
        let s = occ(&[(0, 3), (1, 1)]);
        assert_eq!(s.degree(), 4);
        assert_eq!(s.swapped(0, Geometry::Line), occ(&[(0, 1), (1, 3)]));
        assert_eq!(s.swapped(1, Geometry::Line), occ(&[(0, 3), (2, 1)]));
        assert_eq!(s.swapped(5, Geometry::Line), s);
        assert_eq!(s.active_bonds(Geometry::Line).into_iter().collect::<Vec<_>>(), vec![-1, 0, 1]);
        let r = occ(&[(3, 2)]);
        assert_eq!(r.swapped(3, Geometry::Ring(4)), occ(&[(0, 2)]));
    }

    #[test]
    fn random_walk_generator() {
        let mut psi = ChaosCoefficients::new(1);
        psi.insert(occ(&[(0, 1)]), 2.5f64).unwrap();
        let s = carre(&psi, Geometry::Line);
        assert_eq!(s.get(&occ(&[(1, 1)])), 2.5);
        assert_eq!(s.get(&occ(&[(-1, 1)])), 2.5);
        assert_eq!(s.get(&occ(&[(0, 1)])), -5.0);
        let moved = noise_on_chaos(&psi, 0, Geometry::Line);
        assert_eq!(moved.get(&occ(&[(1, 1)])), 2.5);
    }

    #[test]
    fn swap_invariant_family_on_ring() {
        let n = 6;
        let mut psi = ChaosCoefficients::new(4);
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    psi.insert(occ(&[(x, 3), (y, 1)]), 1.7f64).unwrap();
                }
            }
        }
        assert!(carre(&psi, Geometry::Ring(n as usize)).is_zero());
        let b = build_basis(0.0, 4).unwrap();
        assert_eq!(dirichlet_form(&psi, &b, Geometry::Ring(n as usize)).unwrap(), 0.0);
    }

    #[test]
    fn indicator_dirichlet_form() {
        let b = build_basis(0.0f64, 4).unwrap();
        let mut psi = ChaosCoefficients::new(4);
        psi.insert(occ(&[(0, 3), (1, 1)]), 1.0).unwrap();
        let d = dirichlet_form(&psi, &b, Geometry::Line).unwrap();
        assert!((d - 18.0).abs() < 1e-10, "{d}");
        let d2 = dirichlet_form(&psi.scaled(2.0), &b, Geometry::Line).unwrap();
        assert!((d2 - 4.0 * d).abs() < 1e-9);
    }

    #[test]
    fn d0_of_zero() {
        let (g, d0) = extend_and_d0(&TwoSiteField::<f64>::new()).unwrap();
        assert!(g.values.is_empty());
        assert_eq!(d0, 0.0);
        let bad = TwoSiteField::from_entries([((2, 2), 1.0f64)]);
        assert!(extend_and_d0(&bad).is_err());
    }

    #[test]
    fn diagonal_fill() {
        let f = TwoSiteField::from_entries([((0, 1), 1.0f64), ((1, 0), 1.0)]);
        let (g, _) = extend_and_d0(&f).unwrap();
        assert_eq!(g.get(0, 0), 0.5);
        assert_eq!(g.get(1, 1), 0.5);
        assert_eq!(g.get(2, 2), 0.0);
    }

    #[test]
    fn resolvent_bound_basics() {
        let f = TwoSiteField::from_entries([((0, 1), 1.0f64), ((1, 0), -0.5), ((3, 1), 0.25)]);
        let mut prev = f64::INFINITY;
        for z in [1e-3, 1e-2, 1e-1, 1.0] {
            let v = h_minus_one_bound(&f, z).unwrap();
            assert!(v < prev);
            assert!(v <= f.sum_squares() / z);
            prev = v;
        }
        assert_eq!(h_minus_one_bound(&TwoSiteField::<f64>::new(), 0.1).unwrap(), 0.0);
    }

    #[test]
    fn resolvent_bound_large_z_limit() {
        let f = TwoSiteField::from_entries([((0, 2), 1.0f64), ((5, 1), 2.0)]);
        let z = 1e6;
        let v = h_minus_one_bound(&f, z).unwrap();
        // Parseval: the integral is (sum F^2)/z up to a relative O(8/z).
        assert!((v * z / f.sum_squares() - 1.0).abs() < 1e-5);
    }
}
