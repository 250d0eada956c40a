//! Fourier-side analysis of the quadratic corrector: discrete operators on `(1/n)Z`,
//! torus solutions of the two Poisson equations, residue closed forms, scaling sums and
//! the macroscopic reference semigroups.
//!
//! Transforms follow `F(f)(xi) = int f(u) e^{2 i pi xi u} du` and
//! `F_n(g)(xi) = (1/n) sum_x g(x/n) e^{2 i pi x xi / n}`.

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};

use crate::equilibrium::kappa;
use crate::error::{Error, Result};
use crate::fields::TestFunction;
use crate::quad::{integrate, integrate_breaks, Tolerance};
use crate::scalar::{from_i64, from_usize, lit, to_f64, Real};

type C<T> = Complex<T>;

#[inline]
fn cx<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
fn cis<T: Real>(theta: T) -> C<T> {
    Complex::new(theta.cos(), theta.sin())
}

#[inline]
fn two_pi<T: Real>() -> T {
    T::PI() + T::PI()
}

/// Signed representative of `i` modulo `len`, in `[-len/2, len/2)`.
#[inline]
fn signed(i: usize, len: usize) -> i64 {
    if 2 * i < len {
        i as i64
    } else {
        i as i64 - len as i64
    }
}

#[inline]
fn wrap(x: i64, len: usize) -> usize {
    x.rem_euclid(len as i64) as usize
}

fn check_pow2(n: usize) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::FftSize(n));
    }
    Ok(())
}

/// `1 + kappa(gamma) gamma` at `beta = 1`.
pub fn coupling<T: Real>(gamma: T) -> Result<T> {
    if gamma == T::zero() {
        return Ok(T::one());
    }
    Ok(T::one() + kappa(gamma, T::one())? * gamma)
}

// ---------------------------------------------------------------------------
// Grid functions

/// Samples on `(1/n)Z`, stored periodically with period `period` sites.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction1D<T> {
    pub n: usize,
    pub period: usize,
    pub values: Vec<T>,
}

impl<T: Real> GridFunction1D<T> {
    pub fn zeros(n: usize, period: usize) -> Self {
        Self {
            n,
            period,
            values: vec![T::zero(); period],
        }
    }

    pub fn from_fn(n: usize, period: usize, g: impl Fn(i64) -> T) -> Self {
        let values = (0..period).map(|i| g(signed(i, period))).collect();
        Self { n, period, values }
    }

    /// Samples `f(x/n)` for `x` in one period; the support must fit strictly inside it.
    pub fn sample(f: &TestFunction<T>, n: usize, period: usize) -> Result<Self> {
        let (lo, hi) = f.support();
        let half = from_usize::<T>(period) / from_usize::<T>(2 * n);
        if lo <= -half || hi >= half {
            return Err(Error::Domain(format!(
                "support {}..{} does not fit inside the torus of half-width {}",
                to_f64(lo),
                to_f64(hi),
                to_f64(half)
            )));
        }
        let nn = from_usize::<T>(n);
        Ok(Self::from_fn(n, period, |x| f.value(from_i64::<T>(x) / nn)))
    }

    #[inline]
    pub fn get(&self, x: i64) -> T {
        self.values[wrap(x, self.period)]
    }

    fn same_mesh(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::MeshMismatch(self.n, other.n));
        }
        if self.period != other.period {
            return Err(Error::MeshMismatch(self.period, other.period));
        }
        Ok(())
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: T, other: &Self) -> Result<Self> {
        self.same_mesh(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| a + s * b).collect();
        Ok(Self { values, ..*self })
    }

    pub fn sum_sq(&self) -> T {
        self.values.iter().map(|&v| v * v).sum()
    }

    /// `F_n(g)(xi)` summed over one period with signed site labels.
    pub fn fourier(&self, xi: T) -> C<T> {
        let nn = from_usize::<T>(self.n);
        let mut acc = cx(T::zero(), T::zero());
        for (i, &v) in self.values.iter().enumerate() {
            if v != T::zero() {
                let x = from_i64::<T>(signed(i, self.period));
                acc = acc + cis(two_pi::<T>() * x * xi / nn) * v;
            }
        }
        acc / nn
    }
}

/// Samples on `(1/n)Z^2`, stored row-major on a `period x period` torus.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction2D<T> {
    pub n: usize,
    pub period: usize,
    pub values: Vec<T>,
    pub symmetric: bool,
}

impl<T: Real> GridFunction2D<T> {
    pub fn zeros(n: usize, period: usize) -> Self {
        Self {
            n,
            period,
            values: vec![T::zero(); period * period],
            symmetric: true,
        }
    }

    pub fn from_fn(n: usize, period: usize, h: impl Fn(i64, i64) -> T) -> Self {
        let mut values = Vec::with_capacity(period * period);
        for i in 0..period {
            for j in 0..period {
                values.push(h(signed(i, period), signed(j, period)));
            }
        }
        let mut out = Self {
            n,
            period,
            values,
            symmetric: false,
        };
        out.symmetric = out.asymmetry() == T::zero();
        out
    }

    #[inline]
    pub fn get(&self, x: i64, y: i64) -> T {
        self.values[wrap(x, self.period) * self.period + wrap(y, self.period)]
    }

    #[inline]
    fn set(&mut self, x: i64, y: i64, v: T) {
        let p = self.period;
        self.values[wrap(x, p) * p + wrap(y, p)] = v;
    }

    pub fn asymmetry(&self) -> T {
        let p = self.period;
        let mut worst = T::zero();
        for i in 0..p {
            for j in (i + 1)..p {
                worst = worst.max((self.values[i * p + j] - self.values[j * p + i]).abs());
            }
        }
        worst
    }

    /// Replaces the samples by `(h + h^T) / 2`, which makes the symmetry exact.
    pub fn symmetrize(&mut self) {
        let p = self.period;
        let half = lit::<T>(0.5);
        for i in 0..p {
            for j in (i + 1)..p {
                let m = (self.values[i * p + j] + self.values[j * p + i]) * half;
                self.values[i * p + j] = m;
                self.values[j * p + i] = m;
            }
        }
        self.symmetric = true;
    }

    fn same_mesh(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::MeshMismatch(self.n, other.n));
        }
        if self.period != other.period {
            return Err(Error::MeshMismatch(self.period, other.period));
        }
        Ok(())
    }

    pub fn axpy(&self, s: T, other: &Self) -> Result<Self> {
        self.same_mesh(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| a + s * b).collect();
        Ok(Self {
            values,
            symmetric: self.symmetric && other.symmetric,
            ..*self
        })
    }

    pub fn sum_sq(&self) -> T {
        self.values.iter().map(|&v| v * v).sum()
    }

    pub fn diagonal(&self, offset: i64) -> Vec<T> {
        (0..self.period as i64).map(|x| self.get(x, x + offset)).collect()
    }
}

// ---------------------------------------------------------------------------
// Discrete operators, scaled with the mesh `n`

fn sqrt_n<T: Real>(n: usize) -> T {
    from_usize::<T>(n).sqrt()
}

/// `n [f((x+1)/n) - f(x/n)]`.
pub fn gradient<T: Real>(f: &GridFunction1D<T>) -> GridFunction1D<T> {
    let nn = from_usize::<T>(f.n);
    GridFunction1D::from_fn(f.n, f.period, |x| nn * (f.get(x + 1) - f.get(x)))
}

pub fn laplacian<T: Real>(f: &GridFunction1D<T>) -> GridFunction1D<T> {
    let n2 = from_usize::<T>(f.n * f.n);
    GridFunction1D::from_fn(f.n, f.period, |x| n2 * (f.get(x + 1) + f.get(x - 1) - f.get(x) - f.get(x)))
}

/// `grad_n f (x) delta`: the two first off-diagonals carry `n^2/2` times a forward difference.
pub fn gradient_delta<T: Real>(f: &GridFunction1D<T>) -> GridFunction2D<T> {
    let mut out = GridFunction2D::zeros(f.n, f.period);
    let c = from_usize::<T>(f.n * f.n) * lit(0.5);
    for x in 0..f.period as i64 {
        out.set(x, x + 1, c * (f.get(x + 1) - f.get(x)));
        out.set(x, x - 1, c * (f.get(x) - f.get(x - 1)));
    }
    out
}

pub fn laplacian_2d<T: Real>(h: &GridFunction2D<T>) -> GridFunction2D<T> {
    let n2 = from_usize::<T>(h.n * h.n);
    let four = lit::<T>(4.0);
    let mut out = GridFunction2D::from_fn(h.n, h.period, |x, y| {
        n2 * (h.get(x + 1, y) + h.get(x - 1, y) + h.get(x, y + 1) + h.get(x, y - 1) - four * h.get(x, y))
    });
    out.symmetric = h.symmetric;
    out
}

/// Gradient along the diagonal, placed on the first off-diagonals.
pub fn diagonal_gradient<T: Real>(h: &GridFunction2D<T>) -> GridFunction2D<T> {
    let mut out = GridFunction2D::zeros(h.n, h.period);
    let c = from_usize::<T>(h.n) * lit(0.5);
    for x in 0..h.period as i64 {
        out.set(x, x + 1, c * (h.get(x + 1, x + 1) - h.get(x, x)));
        out.set(x, x - 1, c * (h.get(x, x) - h.get(x - 1, x - 1)));
    }
    out
}

/// Directional derivative along `(-2, -2)`.
pub fn transport_2d<T: Real>(h: &GridFunction2D<T>) -> GridFunction2D<T> {
    let nn = from_usize::<T>(h.n);
    let mut out = GridFunction2D::from_fn(h.n, h.period, |x, y| {
        nn * (h.get(x, y - 1) + h.get(x - 1, y) - h.get(x, y + 1) - h.get(x + 1, y))
    });
    out.symmetric = h.symmetric;
    out
}

/// `n [h(x, x+1) - h(x-1, x)]`.
pub fn diagonal_derivative<T: Real>(h: &GridFunction2D<T>) -> GridFunction1D<T> {
    let nn = from_usize::<T>(h.n);
    GridFunction1D::from_fn(h.n, h.period, |x| nn * (h.get(x, x + 1) - h.get(x - 1, x)))
}

pub fn off_diagonal_derivative<T: Real>(h: &GridFunction2D<T>) -> GridFunction2D<T> {
    let mut out = GridFunction2D::zeros(h.n, h.period);
    let n2 = from_usize::<T>(h.n * h.n);
    for x in 0..h.period as i64 {
        out.set(x, x + 1, n2 * (h.get(x, x + 1) - h.get(x, x)));
        out.set(x, x - 1, n2 * (h.get(x - 1, x) - h.get(x - 1, x - 1)));
    }
    out
}

pub fn b_operator<T: Real>(h: &GridFunction2D<T>) -> GridFunction2D<T> {
    let s = sqrt_n::<T>(h.n);
    let p = h.period as i64;
    GridFunction2D::from_fn(h.n, h.period, |x, y| {
        let mut v = h.get(x - 1, y) - h.get(x + 1, y);
        let d = (y - x).rem_euclid(p);
        if d == 1 {
            v += h.get(y, y);
        } else if d == p - 1 {
            v -= h.get(y, y);
        }
        s * v
    })
}

/// `n^(a-1) gk A_n + n^(a-2) Delta_n`.
pub fn operator_l<T: Real>(h: &GridFunction2D<T>, gk: T, a: T) -> GridFunction2D<T> {
    let nn = from_usize::<T>(h.n);
    let ca = nn.powf(a - T::one()) * gk;
    let cd = nn.powf(a - lit(2.0));
    let av = transport_2d(h);
    let dv = laplacian_2d(h);
    let values = av.values.iter().zip(&dv.values).map(|(&p, &q)| ca * p + cd * q).collect();
    GridFunction2D {
        values,
        ..av
    }
}

/// The superdiffusive case `a = 3/2`.
pub fn poisson_operator<T: Real>(h: &GridFunction2D<T>, gk: T) -> GridFunction2D<T> {
    operator_l(h, gk, lit(1.5))
}

// ---------------------------------------------------------------------------
// Fourier transforms

/// `F_n(f)(xi)` as the exact finite sum over the lattice points of the support.
pub fn fourier_n<T: Real>(f: &TestFunction<T>, n: usize, xi: T) -> C<T> {
    let nn = from_usize::<T>(n);
    let (lo, hi) = f.support();
    let x0 = (lo * nn).floor().to_i64().unwrap_or(0);
    let x1 = (hi * nn).ceil().to_i64().unwrap_or(0);
    let mut acc = cx(T::zero(), T::zero());
    for x in x0..=x1 {
        let u = from_i64::<T>(x) / nn;
        let v = f.value(u);
        if v != T::zero() {
            acc = acc + cis(two_pi::<T>() * u * xi) * v;
        }
    }
    acc / nn
}

/// `F(f)(xi)` by adaptive quadrature over the support.
pub fn fourier_continuous<T: Real>(f: &TestFunction<T>, xi: T) -> Result<C<T>> {
    let (lo, hi) = f.support();
    let cycles = (xi.abs() * (hi - lo)).ceil().max(T::one()).to_usize().unwrap_or(1).min(4096);
    let breaks: Vec<T> = (0..=cycles)
        .map(|j| lo + (hi - lo) * from_usize::<T>(j) / from_usize::<T>(cycles))
        .collect();
    let mut tol = Tolerance::new(lit(1e-15), lit(1e-12));
    tol.max_intervals = 20_000;
    integrate_breaks(|u: T| cis(two_pi::<T>() * xi * u) * f.value(u), &breaks, tol).map(|e| e.value)
}

fn fft_rows<T: Real>(data: &mut [C<T>], len: usize, dir: FftDirection) {
    let plan = FftPlanner::<T>::new().plan_fft(len, dir);
    data.par_chunks_mut(len).for_each_init(
        || vec![C::<T>::default(); plan.get_inplace_scratch_len()],
        |scratch, row| plan.process_with_scratch(row, scratch),
    );
}

fn transpose<T: Real>(data: &mut Vec<C<T>>, side: usize) {
    let mut out = vec![C::<T>::default(); data.len()];
    const B: usize = 32;
    for ib in (0..side).step_by(B) {
        for jb in (0..side).step_by(B) {
            for i in ib..(ib + B).min(side) {
                for j in jb..(jb + B).min(side) {
                    out[j * side + i] = data[i * side + j];
                }
            }
        }
    }
    *data = out;
}

/// Unnormalized 2-D transform of a `side x side` array.
pub fn fft2<T: Real>(data: &mut Vec<C<T>>, side: usize, dir: FftDirection) {
    fft_rows(data, side, dir);
    transpose(data, side);
    fft_rows(data, side, dir);
    transpose(data, side);
}

/// Unnormalized 1-D transform.
pub fn fft1<T: Real>(data: &mut [C<T>], dir: FftDirection) {
    let plan = FftPlanner::<T>::new().plan_fft(data.len(), dir);
    plan.process(data);
}

/// Torus Parseval pair for a 1-D grid function: `(1/n) sum g^2` and the Riemann sum of
/// `|F_n g|^2` over one period of frequencies.
pub fn parseval_1d<T: Real>(g: &GridFunction1D<T>) -> (T, T) {
    let p = g.period;
    let mut buf: Vec<C<T>> = g.values.iter().map(|&v| cx(v, T::zero())).collect();
    fft1(&mut buf, FftDirection::Inverse);
    let nn = from_usize::<T>(g.n);
    let scale = from_usize::<T>(p) / nn;
    let fourier: T = buf.iter().map(|c| (*c / from_usize::<T>(p) * scale).norm_sqr()).sum::<T>() * nn
        / from_usize::<T>(p);
    (g.sum_sq() / nn, fourier)
}

/// Torus Parseval pair in two dimensions: `(1/n^2) sum h^2` against the frequency-side sum.
pub fn parseval_2d<T: Real>(h: &GridFunction2D<T>) -> (T, T) {
    let p = h.period;
    let mut buf: Vec<C<T>> = h.values.iter().map(|&v| cx(v, T::zero())).collect();
    fft2(&mut buf, p, FftDirection::Inverse);
    let nn = from_usize::<T>(h.n);
    let pp = from_usize::<T>(p);
    // F_n(h)(a n/p, b n/p) = (1/n^2) sum h e^{...}; cell area (n/p)^2.
    let cell = (nn / pp) * (nn / pp);
    let fourier: T = buf.iter().map(|c| (*c / (nn * nn)).norm_sqr()).sum::<T>() * cell;
    (h.sum_sq() / (nn * nn), fourier)
}

/// Trapezoid approximation of the torus integral over `[-n/2, n/2]^2` on an `m x m` grid;
/// exact for trigonometric polynomials of degree below `m`.
pub fn torus_integral<T: Real>(n: T, m: usize, f: impl Fn(T, T) -> C<T>) -> C<T> {
    let h = n / from_usize::<T>(m);
    let half = n * lit(0.5);
    let mut acc = cx(T::zero(), T::zero());
    for i in 0..m {
        let k = -half + h * from_usize::<T>(i);
        for j in 0..m {
            let l = -half + h * from_usize::<T>(j);
            acc = acc + f(k, l);
        }
    }
    acc * (h * h)
}

// ---------------------------------------------------------------------------
// Symbols

pub fn lambda<T: Real>(k: T, l: T) -> T {
    let (a, b) = ((T::PI() * k).sin(), (T::PI() * l).sin());
    lit::<T>(4.0) * (a * a + b * b)
}

pub fn omega<T: Real>(k: T, l: T) -> T {
    lit::<T>(2.0) * ((two_pi::<T>() * k).sin() + (two_pi::<T>() * l).sin())
}

/// `i Omega / (g Lambda - i Omega)`, set to zero at the origin.
pub fn theta<T: Real>(k: T, l: T, g: T) -> C<T> {
    theta_from(lambda(k, l), omega(k, l), g)
}

#[inline]
fn theta_from<T: Real>(lam: T, om: T, g: T) -> C<T> {
    if lam == T::zero() {
        return cx(T::zero(), T::zero());
    }
    cx(T::zero(), om) / cx(g * lam, -om)
}

pub fn lambda_omega_theta<T: Real>(k: T, l: T, gk: T) -> (T, T, C<T>) {
    let (lam, om) = (lambda(k, l), omega(k, l));
    (lam, om, theta_from(lam, om, gk))
}

// ---------------------------------------------------------------------------
// Residue functions

/// The seven one-dimensional integrals of `Theta(y - x, x)` against the weights
/// `1`, `e^{-2 i pi x}(1 - w)`, `-i Omega`, `1 - e^{-2 i pi x}`, and the three
/// quotients by `1 - conj(w)`, with `w = e^{2 i pi y}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residues<T> {
    pub i: C<T>,
    pub j: C<T>,
    pub k: C<T>,
    pub l: C<T>,
    pub n: C<T>,
    /// Undefined at `y = 0`.
    pub m: Option<C<T>>,
    /// Undefined at `y = 0`.
    pub o: Option<C<T>>,
}

impl<T: Real> Residues<T> {
    pub fn m(&self) -> Result<C<T>> {
        self.m.ok_or_else(|| Error::Domain("M is not defined at y = 0".into()))
    }

    pub fn o(&self) -> Result<C<T>> {
        self.o.ok_or_else(|| Error::Domain("O is not defined at y = 0".into()))
    }

    /// Values in the order I, J, K, L, M, N, O.
    pub fn as_array(&self) -> Result<[C<T>; 7]> {
        Ok([self.i, self.j, self.k, self.l, self.m()?, self.n, self.o()?])
    }
}

pub const RESIDUE_NAMES: [&str; 7] = ["I", "J", "K", "L", "M", "N", "O"];

/// Exponents `p` with `|F(y)| <~ |sin(pi y)|^p`, same order as [`RESIDUE_NAMES`].
pub const RESIDUE_EXPONENTS: [f64; 7] = [0.5, 1.5, 1.5, 1.5, -0.5, 0.5, -0.5];

fn reduce_unit<T: Real>(y: T) -> T {
    y - y.round()
}

fn check_g<T: Real>(g: T) -> Result<()> {
    if !(g > T::zero()) || !g.is_finite() {
        return Err(Error::InvalidParams(format!("coupling must be positive, got {}", g)));
    }
    Ok(())
}

/// Closed forms from the roots of `z^2 - (4g/a) z + w`, principal square root.
pub fn residue_functions<T: Real>(y: T, g: T) -> Result<Residues<T>> {
    check_g(g)?;
    let y = reduce_unit(y);
    let zero = cx(T::zero(), T::zero());
    if y == T::zero() {
        return Ok(Residues {
            i: zero,
            j: zero,
            k: zero,
            l: zero,
            n: zero,
            m: None,
            o: None,
        });
    }
    let one = cx(T::one(), T::zero());
    let w = cis(two_pi::<T>() * y);
    let wb = w.conj();
    let kg = g - T::one();
    let two = lit::<T>(2.0);
    let a = cx(two, T::zero()) + (one + wb) * kg;
    let delta = (one - w) * (lit::<T>(4.0) * g) + (cx(two, T::zero()) - w - wb) * (kg * kg);
    let i = (one - w) / (w * a) * (one - cx(two * g, T::zero()) / delta.sqrt());
    let j = (one - w) / (w * a) * i * (two * g);
    let l = i - j / (one - w);
    Ok(Residues {
        i,
        j,
        k: j * two,
        l,
        n: w / (one - w) * l,
        m: Some(j / (w - one).norm_sqr()),
        o: Some(w / (w - one) * i),
    })
}

/// Direct adaptive quadrature of the defining integrals, the oracle for the closed forms.
pub fn residue_quadrature<T: Real>(y: T, g: T, tol: Tolerance<T>) -> Result<Residues<T>> {
    check_g(g)?;
    let y = reduce_unit(y);
    if y == T::zero() {
        return residue_functions(y, g);
    }
    let half = lit::<T>(0.5);
    let mut breaks = vec![-half, T::zero(), y, y * half, half];
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let th = |x: T| theta(y - x, x, g);
    let a0 = integrate_breaks(th, &breaks, tol)?.value;
    let a1 = integrate_breaks(|x: T| th(x) * cis(-two_pi::<T>() * x), &breaks, tol)?.value;
    let ak = integrate_breaks(|x: T| th(x) * cx(T::zero(), -omega(y - x, x)), &breaks, tol)?.value;
    let one = cx(T::one(), T::zero());
    let w = cis(two_pi::<T>() * y);
    let q = one - w.conj();
    Ok(Residues {
        i: a0,
        j: a1 * (one - w),
        k: ak,
        l: a0 - a1,
        n: (a1 - a0) / q,
        m: Some(a1 / q),
        o: Some(a0 / q),
    })
}

/// Largest `|F(y)| / |sin(pi y)|^p` for each residue function over a symmetric log grid
/// `|y| in [y_min, 1/2]` with `points` nodes per sign.
pub fn residue_bound_sweep<T: Real>(g: T, y_min: T, points: usize) -> Result<[T; 7]> {
    let mut worst = [T::zero(); 7];
    let (l0, l1) = (y_min.ln(), lit::<T>(0.5).ln());
    for s in 0..points {
        let frac = from_usize::<T>(s) / from_usize::<T>(points.max(2) - 1);
        let mag = (l0 + (l1 - l0) * frac).exp();
        for y in [mag, -mag] {
            let r = residue_functions(y, g)?.as_array()?;
            let sn = (T::PI() * y).sin().abs();
            for q in 0..7 {
                let ratio = r[q].norm() / sn.powf(lit(RESIDUE_EXPONENTS[q]));
                worst[q] = worst[q].max(ratio);
            }
        }
    }
    Ok(worst)
}

/// `int dx / (Lambda^2 + Omega^2)(y - x, x)` over `x in [-1/2, 1/2]`.
pub fn w_integral<T: Real>(y: T) -> Result<T> {
    let y = reduce_unit(y);
    if y.abs() < lit(1e-6) {
        return Err(Error::Domain(format!("W refuses |y| = {} below 1e-6", y.abs())));
    }
    let half = lit::<T>(0.5);
    let mut breaks = vec![-half, T::zero(), y * half, y, half];
    let r = y.abs().sqrt();
    breaks.extend([-r, r]);
    breaks.retain(|b| b.abs() <= half);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let est = integrate_breaks(
        |x: T| {
            let (l, o) = (lambda(y - x, x), omega(y - x, x));
            (l * l + o * o).recip()
        },
        &breaks,
        Tolerance::new(T::zero(), lit(1e-10)),
    )?;
    Ok(est.value)
}

// ---------------------------------------------------------------------------
// G_0 and G_n

/// `(1/2) |pi v|^{3/2} (1 + i sgn v)`.
pub fn g0<T: Real>(v: T) -> C<T> {
    if v == T::zero() {
        return cx(T::zero(), T::zero());
    }
    let a = lit::<T>(0.5) * (T::PI() * v).abs().powf(lit(1.5));
    cx(a, a * v.signum())
}

/// `(g^2 / 4) K(y)`.
pub fn gn<T: Real>(y: T, g: T) -> Result<C<T>> {
    Ok(residue_functions(y, g)?.k * (g * g / lit(4.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnComparison<T> {
    pub g0: C<T>,
    /// `n^{3/2} G_n(xi / n)`.
    pub gn_scaled: C<T>,
    pub gap: T,
    /// `gap / (gamma |xi|^{3/2} + xi^2 / sqrt n)`.
    pub normalized: T,
}

pub fn g0_gn<T: Real>(xi: T, n: usize, gamma: T, kappa_n: T) -> Result<GnComparison<T>> {
    let nn = from_usize::<T>(n);
    let g = T::one() + kappa_n * gamma;
    let a = g0(xi);
    let b = gn(xi / nn, g)? * nn.powf(lit(1.5));
    let gap = (a - b).norm();
    let scale = gamma * xi.abs().powf(lit(1.5)) + xi * xi / nn.sqrt();
    let normalized = if scale > T::zero() { gap / scale } else { T::zero() };
    Ok(GnComparison {
        g0: a,
        gn_scaled: b,
        gap,
        normalized,
    })
}

/// Largest normalized error over `xi in [-sqrt n, sqrt n]` on `points` nodes per sign.
pub fn gn_error_constant<T: Real>(n: usize, gamma: T, kappa_n: T, points: usize) -> Result<T> {
    let top = from_usize::<T>(n).sqrt();
    let mut worst = T::zero();
    for s in 1..=points {
        let xi = top * from_usize::<T>(s) / from_usize::<T>(points);
        for v in [xi, -xi] {
            worst = worst.max(g0_gn(v, n, gamma, kappa_n)?.normalized);
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Poisson equations on the torus

/// Which Fourier symbol builds the corrector.
///
/// `Stated` uses `Theta` with the coupling on `Lambda`, the factorized form the residue
/// calculus is built on. `Inverse` inverts `sqrt(n) gk A_n + n^{-1/2} Delta_n` exactly, whose
/// symbol carries the coupling on `Omega`; it equals `Stated` with `g -> 1/g` and one power of
/// `gk` less in the prefactor. The two agree when `gk = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoissonKernel {
    Stated,
    Inverse,
}

impl PoissonKernel {
    /// `Theta` parameter.
    pub fn theta_param<T: Real>(self, gk: T) -> T {
        match self {
            Self::Stated => gk,
            Self::Inverse => gk.recip(),
        }
    }

    fn h_prefactor<T: Real>(self, gk: T) -> T {
        match self {
            Self::Stated => gk * gk,
            Self::Inverse => gk,
        }
    }

    // Extra factor in front of `g Lambda - i Omega` when writing the true symbol.
    fn symbol_factor<T: Real>(self, gk: T) -> T {
        match self {
            Self::Stated => T::one(),
            Self::Inverse => gk,
        }
    }

    /// Prefactor `c` in `F_n(w_n)(xi) = -(c sqrt n / 2) L(xi/n) F_n(f)(xi)`.
    pub fn w_prefactor<T: Real>(self, gk: T) -> T {
        self.h_prefactor(gk)
    }
}

/// `F_n(h_n)(u, v)` at arbitrary frequencies.
pub fn poisson_h_hat<T: Real>(u: T, v: T, n: usize, f: &TestFunction<T>, gk: T, kernel: PoissonKernel) -> C<T> {
    let nn = from_usize::<T>(n);
    let g = kernel.theta_param(gk);
    theta(u / nn, v / nn, g) * fourier_n(f, n, u + v) * (kernel.h_prefactor(gk) / (lit::<T>(2.0) * nn.sqrt()))
}

/// `F_n(v_n)(u, v)`, the transform of the second corrector.
pub fn poisson_v_hat<T: Real>(u: T, v: T, n: usize, f: &TestFunction<T>, gk: T, kernel: PoissonKernel) -> Result<C<T>> {
    let nn = from_usize::<T>(n);
    let (k, l) = (u / nn, v / nn);
    let g = kernel.theta_param(gk);
    let y = reduce_unit(k + l);
    if y == T::zero() {
        return Ok(cx(T::zero(), T::zero()));
    }
    let big_l = residue_functions(y, g)?.l;
    let num = cis(two_pi::<T>() * k) + cis(two_pi::<T>() * l);
    let den = cx(g * lambda(k, l), -omega(k, l));
    let c = kernel.h_prefactor(gk) / (kernel.symbol_factor(gk) * nn.sqrt());
    Ok(num / den * big_l * fourier_n(f, n, u + v) * c)
}

/// Torus layout: side `period = factor * n`, frequency index `a` standing for `u = a n / period`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusSpec<T> {
    pub n: usize,
    pub factor: usize,
    pub gk: T,
    pub kernel: PoissonKernel,
}

impl<T: Real> TorusSpec<T> {
    pub fn new(n: usize, gk: T) -> Self {
        Self {
            n,
            factor: 1,
            gk,
            kernel: PoissonKernel::Stated,
        }
    }

    pub fn with_factor(mut self, factor: usize) -> Self {
        self.factor = factor;
        self
    }

    pub fn with_kernel(mut self, kernel: PoissonKernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn period(&self) -> usize {
        self.n * self.factor
    }

    fn validate(&self) -> Result<()> {
        check_pow2(self.n)?;
        if !self.factor.is_power_of_two() {
            return Err(Error::FftSize(self.factor));
        }
        check_g(self.gk)
    }
}

/// Frequency-side tables shared by the constructors.
struct Tables<T> {
    p: usize,
    sin2: Vec<T>,
    sin2pi: Vec<T>,
    e: Vec<C<T>>,
    /// `F_n(f)(j n / p)` for `j` taken modulo `p`.
    ff: Vec<C<T>>,
}

impl<T: Real> Tables<T> {
    fn new(spec: &TorusSpec<T>, f: &TestFunction<T>) -> Result<Self> {
        let p = spec.period();
        let samples = GridFunction1D::sample(f, spec.n, p)?;
        let mut ff: Vec<C<T>> = samples.values.iter().map(|&v| cx(v, T::zero())).collect();
        fft1(&mut ff, FftDirection::Inverse);
        let nn = from_usize::<T>(spec.n);
        for c in ff.iter_mut() {
            *c = *c / nn;
        }
        let pp = from_usize::<T>(p);
        let mut sin2 = Vec::with_capacity(p);
        let mut sin2pi = Vec::with_capacity(p);
        let mut e = Vec::with_capacity(p);
        for a in 0..p {
            let k = from_i64::<T>(signed(a, p)) / pp;
            let s = (T::PI() * k).sin();
            sin2.push(s * s);
            sin2pi.push((two_pi::<T>() * k).sin());
            e.push(cis(two_pi::<T>() * k));
        }
        Ok(Self { p, sin2, sin2pi, e, ff })
    }

    #[inline]
    fn lam_om(&self, a: usize, b: usize) -> (T, T) {
        (
            lit::<T>(4.0) * (self.sin2[a] + self.sin2[b]),
            lit::<T>(2.0) * (self.sin2pi[a] + self.sin2pi[b]),
        )
    }

    #[inline]
    fn f_at(&self, a: usize, b: usize) -> C<T> {
        self.ff[(a + b) % self.p]
    }

    fn y_of(&self, j: usize) -> T {
        from_i64::<T>(signed(j, self.p)) / from_usize::<T>(self.p)
    }
}

/// Inverse-transforms torus Fourier coefficients `F_n(.)(a n/p, b n/p)` into real samples.
fn synthesize<T: Real>(spec: &TorusSpec<T>, mut coeff: Vec<C<T>>) -> (GridFunction2D<T>, T) {
    let p = spec.period();
    let nn = from_usize::<T>(spec.n);
    let pp = from_usize::<T>(p);
    let scale = (nn / pp) * (nn / pp);
    for c in coeff.iter_mut() {
        *c = *c * scale;
    }
    fft2(&mut coeff, p, FftDirection::Forward);
    let imag = coeff.iter().fold(T::zero(), |m, c| m.max(c.im.abs()));
    let values = coeff.iter().map(|c| c.re).collect();
    (
        GridFunction2D {
            n: spec.n,
            period: p,
            values,
            symmetric: false,
        },
        imag,
    )
}

/// A reconstructed corrector with diagnostics of the reconstruction.
#[derive(Debug, Clone)]
pub struct Corrector<T> {
    pub grid: GridFunction2D<T>,
    /// Largest imaginary part left by the inverse transform.
    pub imag_residue: T,
    /// Largest `|h(x,y) - h(y,x)|` before exact symmetrization.
    pub asymmetry: T,
}

fn finish<T: Real>(spec: &TorusSpec<T>, coeff: Vec<C<T>>) -> Corrector<T> {
    let (mut grid, imag_residue) = synthesize(spec, coeff);
    let asymmetry = grid.asymmetry();
    grid.symmetrize();
    Corrector {
        grid,
        imag_residue,
        asymmetry,
    }
}

/// `h_n` on the torus.
pub fn solve_h<T: Real>(spec: &TorusSpec<T>, f: &TestFunction<T>) -> Result<Corrector<T>> {
    spec.validate()?;
    let t = Tables::new(spec, f)?;
    let p = t.p;
    let g = spec.kernel.theta_param(spec.gk);
    let pre = spec.kernel.h_prefactor(spec.gk) / (lit::<T>(2.0) * sqrt_n::<T>(spec.n));
    let mut coeff = vec![C::<T>::default(); p * p];
    coeff.par_chunks_mut(p).enumerate().for_each(|(a, row)| {
        for (b, c) in row.iter_mut().enumerate() {
            let (lam, om) = t.lam_om(a, b);
            *c = theta_from(lam, om, g) * t.f_at(a, b) * pre;
        }
    });
    Ok(finish(spec, coeff))
}

/// `v_n`, solution of `L_n v_n = 2 n^{-1/2} D~_n h_n`, on the torus.
pub fn solve_v<T: Real>(spec: &TorusSpec<T>, f: &TestFunction<T>) -> Result<Corrector<T>> {
    spec.validate()?;
    let t = Tables::new(spec, f)?;
    let p = t.p;
    let g = spec.kernel.theta_param(spec.gk);
    let mut ltab = Vec::with_capacity(p);
    for j in 0..p {
        let y = t.y_of(j);
        ltab.push(if y == T::zero() {
            cx(T::zero(), T::zero())
        } else {
            residue_functions(y, g)?.l
        });
    }
    let pre = spec.kernel.h_prefactor(spec.gk) / (spec.kernel.symbol_factor(spec.gk) * sqrt_n::<T>(spec.n));
    let mut coeff = vec![C::<T>::default(); p * p];
    coeff.par_chunks_mut(p).enumerate().for_each(|(a, row)| {
        for (b, c) in row.iter_mut().enumerate() {
            let (lam, om) = t.lam_om(a, b);
            if lam == T::zero() {
                continue;
            }
            let num = t.e[a] + t.e[b];
            *c = num / cx(g * lam, -om) * ltab[(a + b) % p] * t.f_at(a, b) * pre;
        }
    });
    Ok(finish(spec, coeff))
}

/// `w_n(x/n) = h_n(x/n, (x+1)/n) - h_n(x/n, x/n)`.
pub fn w_from_h<T: Real>(h: &GridFunction2D<T>) -> GridFunction1D<T> {
    GridFunction1D::from_fn(h.n, h.period, |x| h.get(x, x + 1) - h.get(x, x))
}

/// `-(c sqrt n / 2) L(xi/n) F_n(f)(xi)` with the kernel's prefactor `c`.
pub fn w_hat<T: Real>(xi: T, n: usize, f: &TestFunction<T>, gk: T, kernel: PoissonKernel) -> Result<C<T>> {
    let nn = from_usize::<T>(n);
    let l = residue_functions(xi / nn, kernel.theta_param(gk))?.l;
    Ok(l * fourier_n(f, n, xi) * (-kernel.w_prefactor(gk) * nn.sqrt() / lit(2.0)))
}

/// Relative l2 defects of the two Poisson equations on the torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonDefect<T> {
    pub h: T,
    pub v: T,
}

pub fn poisson_defect<T: Real>(spec: &TorusSpec<T>, f: &TestFunction<T>) -> Result<PoissonDefect<T>> {
    let gk = spec.gk;
    let h = solve_h(spec, f)?.grid;
    let v = solve_v(spec, f)?.grid;
    let fg = GridFunction1D::sample(f, spec.n, spec.period())?;
    let rhs_h = gradient_delta(&fg);
    let lh = poisson_operator(&h, gk);
    let dh = lh.axpy(-gk * gk, &rhs_h)?;
    let rhs_v = off_diagonal_derivative(&h);
    let lv = poisson_operator(&v, gk);
    let c = lit::<T>(2.0) / sqrt_n::<T>(spec.n);
    let dv = lv.axpy(-c, &rhs_v)?;
    let rel = |d: &GridFunction2D<T>, r: &GridFunction2D<T>, s: T| {
        let den = r.sum_sq().sqrt() * s.abs();
        if den == T::zero() {
            d.sum_sq().sqrt()
        } else {
            d.sum_sq().sqrt() / den
        }
    };
    Ok(PoissonDefect {
        h: rel(&dh, &rhs_h, gk * gk),
        v: rel(&dv, &rhs_v, c),
    })
}

// ---------------------------------------------------------------------------
// Diagonal derivative of h_n against the Levy generator

/// `-2 |pi xi|^{3/2} (1 + i sgn xi)`, the symbol of the Levy generator.
pub fn levy_symbol<T: Real>(xi: T) -> C<T> {
    g0(xi) * lit::<T>(-4.0)
}

/// Applies a Fourier multiplier to periodic samples on a grid of macroscopic span `span`.
pub fn apply_multiplier<T: Real>(samples: &[T], span: T, symbol: impl Fn(T) -> C<T>) -> Vec<T> {
    let m = samples.len();
    let mut buf: Vec<C<T>> = samples.iter().map(|&v| cx(v, T::zero())).collect();
    fft1(&mut buf, FftDirection::Inverse);
    let mm = from_usize::<T>(m);
    for (a, c) in buf.iter_mut().enumerate() {
        let xi = from_i64::<T>(signed(a, m)) / span;
        *c = *c * symbol(xi) / mm;
    }
    fft1(&mut buf, FftDirection::Forward);
    buf.iter().map(|c| c.re).collect()
}

/// `L f` for the 1-periodized profile at the sites `x/n`, computed on a fine grid.
pub fn levy_generator_periodic<T: Real>(f: &TestFunction<T>, n: usize) -> Result<Vec<T>> {
    check_pow2(n)?;
    let fine = (8 * n).max(1 << 14);
    let g = GridFunction1D::sample(f, fine, fine)?;
    let lf = apply_multiplier(&g.values, T::one(), levy_symbol);
    let step = fine / n;
    Ok((0..n).map(|x| lf[x * step]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DnGap<T> {
    /// `(1/n) sum |D_n h_n + (1/4) L f|^2`.
    pub gap: T,
    /// `(1/n) sum |(1/4) L f|^2`.
    pub reference: T,
}

pub fn dn_hn_vs_lf<T: Real>(n: usize, f: &TestFunction<T>, gamma: T) -> Result<DnGap<T>> {
    let gk = coupling(gamma)?;
    let h = solve_h(&TorusSpec::new(n, gk), f)?.grid;
    let d = diagonal_derivative(&h);
    let lf = levy_generator_periodic(f, n)?;
    let nn = from_usize::<T>(n);
    let q = lit::<T>(0.25);
    let mut gap = T::zero();
    let mut reference = T::zero();
    for x in 0..n {
        let s = d.get(signed(x, n)) + q * lf[x];
        gap += s * s;
        reference += q * q * lf[x] * lf[x];
    }
    Ok(DnGap {
        gap: gap / nn,
        reference: reference / nn,
    })
}

// ---------------------------------------------------------------------------
// Scaling suite

pub const SCALING_NAMES: [&str; 9] = [
    "sum h^2",
    "sum h(x,x)^2",
    "sum (D h)^2",
    "sum (h diagonal increment)^2",
    "sum v^2",
    "sum v(x,x)^2",
    "sum (D v)^2",
    "sum (v diagonal increment)^2",
    "sum (D~ v)^2",
];

/// Expected growth exponents of the nine sums, same order as [`SCALING_NAMES`].
pub const SCALING_EXPONENTS: [f64; 9] = [1.5, 1.0, 1.0, -1.0, 0.5, 0.0, 0.0, -2.0, 2.0];

fn corrector_sums<T: Real>(h: &GridFunction2D<T>, second: bool) -> Vec<T> {
    let p = h.period as i64;
    let nn = from_usize::<T>(h.n);
    let mut diag = T::zero();
    let mut dn = T::zero();
    let mut inc = T::zero();
    let mut dt = T::zero();
    for x in 0..p {
        let d0 = h.get(x, x);
        diag += d0 * d0;
        let a = nn * (h.get(x, x + 1) - h.get(x - 1, x));
        dn += a * a;
        let b = h.get(x + 1, x + 1) - d0;
        inc += b * b;
        let c = nn * nn * (h.get(x, x + 1) - d0);
        dt += c * c;
    }
    let mut out = vec![h.sum_sq(), diag, dn, inc];
    if second {
        out.push(dt);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit<T> {
    pub name: &'static str,
    pub expected: f64,
    /// Least-squares slope of `log sum` against `log n` over the whole list.
    pub slope: T,
    /// Slope between the last two points.
    pub local_slope: T,
    pub values: Vec<T>,
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope<T: Real>(xs: &[T], ys: &[T]) -> T {
    let m = from_usize::<T>(xs.len());
    let mx = xs.iter().copied().sum::<T>() / m;
    let my = ys.iter().copied().sum::<T>() / m;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Computes the nine sums for each `n` with `gamma_n = schedule(n)` and fits log-log slopes.
pub fn scaling_suite<T: Real>(
    ns: &[usize],
    f: &TestFunction<T>,
    schedule: impl Fn(usize) -> T,
) -> Result<Vec<ScalingFit<T>>> {
    if ns.len() < 4 {
        return Err(Error::InvalidParams("scaling suite needs at least four sizes".into()));
    }
    let mut table: Vec<Vec<T>> = Vec::with_capacity(ns.len());
    for &n in ns {
        let spec = TorusSpec::new(n, coupling(schedule(n))?);
        let h = solve_h(&spec, f)?.grid;
        let mut row = corrector_sums(&h, false);
        drop(h);
        let v = solve_v(&spec, f)?.grid;
        row.extend(corrector_sums(&v, true));
        table.push(row);
    }
    let lx: Vec<T> = ns.iter().map(|&n| from_usize::<T>(n).ln()).collect();
    let last = ns.len() - 1;
    Ok((0..9)
        .map(|q| {
            let values: Vec<T> = table.iter().map(|r| r[q]).collect();
            let ly: Vec<T> = values.iter().map(|v| v.ln()).collect();
            ScalingFit {
                name: SCALING_NAMES[q],
                expected: SCALING_EXPONENTS[q],
                slope: fit_slope(&lx, &ly),
                local_slope: (ly[last] - ly[last - 1]) / (lx[last] - lx[last - 1]),
                values,
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Reference semigroups

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemigroupKind {
    /// Generated by `-2 d/du`: `f -> f(. - 2t)`.
    Transport,
    /// Generated by the Laplacian: Gaussian kernel of variance `2t`.
    Heat,
    /// Generated by the skew 3/2-stable operator with symbol [`levy_symbol`].
    Levy32,
}

impl SemigroupKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Transport => "transport",
            Self::Heat => "heat",
            Self::Levy32 => "levy32",
        }
    }

    /// Characteristic width of the kernel at time `t`.
    pub fn spread<T: Real>(self, t: T) -> T {
        match self {
            Self::Transport => T::zero(),
            Self::Heat => (lit::<T>(2.0) * t).sqrt(),
            Self::Levy32 => (lit::<T>(2.0) * t).powf(lit(2.0 / 3.0)),
        }
    }

    pub fn symbol<T: Real>(self, xi: T) -> C<T> {
        match self {
            Self::Transport => cx(T::zero(), lit::<T>(4.0) * T::PI() * xi),
            Self::Heat => cx(-lit::<T>(4.0) * T::PI() * T::PI() * xi * xi, T::zero()),
            Self::Levy32 => levy_symbol(xi),
        }
    }
}

/// Periodic sampling grid `lo + j span / points`, `j < points`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicGrid<T> {
    pub lo: T,
    pub span: T,
    pub points: usize,
}

impl<T: Real> PeriodicGrid<T> {
    pub fn new(lo: T, span: T, points: usize) -> Self {
        Self { lo, span, points }
    }

    pub fn step(&self) -> T {
        self.span / from_usize::<T>(self.points)
    }

    pub fn node(&self, j: usize) -> T {
        self.lo + self.step() * from_usize::<T>(j)
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.points).map(|j| self.node(j)).collect()
    }

    /// Riemann sum of `g * samples`.
    pub fn pairing(&self, g: impl Fn(T) -> T, samples: &[T]) -> T {
        samples.iter().enumerate().map(|(j, &s)| g(self.node(j)) * s).sum::<T>() * self.step()
    }
}

/// `P_t f` sampled on `grid`.
pub fn semigroup_apply<T: Real>(
    kind: SemigroupKind,
    t: T,
    f: &TestFunction<T>,
    grid: &PeriodicGrid<T>,
) -> Result<Vec<T>> {
    if t < T::zero() {
        return Err(Error::InvalidParams("semigroup time must be non-negative".into()));
    }
    if kind == SemigroupKind::Transport {
        let shift = lit::<T>(2.0) * t;
        return Ok(grid.nodes().into_iter().map(|u| f.value(u - shift)).collect());
    }
    let spread = kind.spread(t);
    if grid.span < lit::<T>(8.0) * spread {
        return Err(Error::Domain(format!(
            "aliasing guard: span {} below 8 x kernel spread {}",
            to_f64(grid.span),
            to_f64(spread)
        )));
    }
    let (lo, hi) = f.support();
    if lo < grid.lo || hi > grid.lo + grid.span {
        return Err(Error::WindowViolation {
            lo: to_f64(lo),
            hi: to_f64(hi),
        });
    }
    let samples: Vec<T> = grid.nodes().into_iter().map(|u| f.value(u)).collect();
    if t == T::zero() {
        return Ok(samples);
    }
    Ok(apply_multiplier(&samples, grid.span, |xi| (kind.symbol(xi) * t).exp()))
}

/// `P_t f` for the semigroup on the unit ring, at `points` nodes `-1/2 + j / points`.
///
/// Integer frequencies are the ring's eigenfunctions, so the multiplier is exact and no
/// aliasing guard applies.
pub fn semigroup_apply_ring<T: Real>(kind: SemigroupKind, t: T, f: &TestFunction<T>, points: usize) -> Result<Vec<T>> {
    if t < T::zero() {
        return Err(Error::InvalidParams("semigroup time must be non-negative".into()));
    }
    let (lo, hi) = f.support();
    if hi - lo >= T::one() {
        return Err(Error::WindowViolation {
            lo: to_f64(lo),
            hi: to_f64(hi),
        });
    }
    let f = f.shifted(-f.center.round());
    let grid = PeriodicGrid::new(-lit::<T>(0.5), T::one(), points);
    let ring = |u: T| f.value(u - T::one()) + f.value(u) + f.value(u + T::one());
    if kind == SemigroupKind::Transport {
        let shift = lit::<T>(2.0) * t;
        return Ok(grid
            .nodes()
            .into_iter()
            .map(|u| {
                let v = u - shift;
                ring(v - v.round())
            })
            .collect());
    }
    let samples: Vec<T> = grid.nodes().into_iter().map(ring).collect();
    if t == T::zero() {
        return Ok(samples);
    }
    Ok(apply_multiplier(&samples, T::one(), |xi| (kind.symbol(xi) * t).exp()))
}

/// The Levy generator applied to samples of `f` on `grid`.
pub fn levy_generator_apply<T: Real>(f: &TestFunction<T>, grid: &PeriodicGrid<T>) -> Vec<T> {
    let samples: Vec<T> = grid.nodes().into_iter().map(|u| f.value(u)).collect();
    apply_multiplier(&samples, grid.span, levy_symbol)
}

// ---------------------------------------------------------------------------
// Fourier-side factorizations of Phi_n and Psi_n

/// `Phi_n`: two corrections of the quartic corrector term assembled from `h_n` and `f`.
pub fn assemble_phi<T: Real>(h: &GridFunction2D<T>, f: &GridFunction1D<T>, gk: T) -> Result<GridFunction2D<T>> {
    if h.n != f.n || h.period != f.period {
        return Err(Error::MeshMismatch(h.period, f.period));
    }
    let s2 = lit::<T>(2.0) * sqrt_n::<T>(h.n);
    let ng = from_usize::<T>(h.n) * gk;
    let p = h.period as i64;
    Ok(GridFunction2D::from_fn(h.n, h.period, |x, y| {
        let d = (y - x).rem_euclid(p);
        if d == 0 {
            T::zero()
        } else if d == 1 {
            s2 * h.get(x - 1, x + 1) - ng * (f.get(x + 1) - f.get(x))
        } else if d == p - 1 {
            -s2 * h.get(x + 1, x - 1) - ng * (f.get(x) - f.get(x - 1))
        } else {
            s2 * (h.get(x - 1, y) - h.get(x + 1, y))
        }
    }))
}

pub fn assemble_psi<T: Real>(v: &GridFunction2D<T>) -> GridFunction2D<T> {
    let s = sqrt_n::<T>(v.n);
    let p = v.period as i64;
    GridFunction2D::from_fn(v.n, v.period, |x, y| {
        let d = (y - x).rem_euclid(p);
        if d == 0 {
            T::zero()
        } else if d == 1 {
            s * v.get(x - 1, x + 1)
        } else if d == p - 1 {
            -s * v.get(x + 1, x - 1)
        } else {
            s * (v.get(x - 1, y) - v.get(x + 1, y))
        }
    })
}

/// `sum Phi(x,y) e^{2 i pi (k x + l y)}` on the torus frequency grid, row-major.
fn lattice_hat<T: Real>(g: &GridFunction2D<T>) -> Vec<C<T>> {
    let mut buf: Vec<C<T>> = g.values.iter().map(|&v| cx(v, T::zero())).collect();
    fft2(&mut buf, g.period, FftDirection::Inverse);
    buf
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiPsiReport<T> {
    pub n: usize,
    pub period: usize,
    /// Max relative error of the factorization with `R_n` built from `I`, `J` only.
    pub phi_stated: T,
    /// Same with the diagonal term `gk (e^{2 i pi k} - e^{-2 i pi k}) Theta(k, l)` restored.
    pub phi_completed: T,
    pub psi_stated: T,
    /// `R~_n` with `(e^{2 i pi k} - e^{-2 i pi k})(e^{2 i pi k} + e^{2 i pi l}) / (g Lambda - i Omega)` restored.
    pub psi_completed: T,
}

/// Compares the lattice transforms of `Phi_n` and `Psi_n` with their factorized forms
/// `n^2 gk F_n(f)(n(k+l)) R_n` and `n^2 c L(k+l) F_n(f)(n(k+l)) R~_n` on the frequency grid
/// of a torus `factor` times larger than `n`.
pub fn phi_psi_hat_suite<T: Real>(n: usize, f: &TestFunction<T>, gamma: T, factor: usize) -> Result<PhiPsiReport<T>> {
    let gk = coupling(gamma)?;
    let spec = TorusSpec::new(n, gk).with_factor(factor);
    let p = spec.period();
    let h = solve_h(&spec, f)?.grid;
    let v = solve_v(&spec, f)?.grid;
    let fg = GridFunction1D::sample(f, n, p)?;
    let phi = lattice_hat(&assemble_phi(&h, &fg, gk)?);
    let psi = lattice_hat(&assemble_psi(&v));
    let t = Tables::new(&spec, f)?;
    let nn = from_usize::<T>(n);
    let n2 = nn * nn;
    let mut res = Vec::with_capacity(p);
    for j in 0..p {
        let y = t.y_of(j);
        res.push(if y == T::zero() { None } else { Some(residue_functions(y, gk)?) });
    }
    let vpre = PoissonKernel::Stated.h_prefactor(gk);
    let one = cx(T::one(), T::zero());
    let mut worst = [T::zero(); 4];
    let mut scale = [T::zero(); 2];
    for a in 0..p {
        for b in 0..p {
            let idx = a * p + b;
            let j = (a + b) % p;
            let (lam, om) = t.lam_om(a, b);
            let ff = t.f_at(a, b);
            let sk = t.e[a] - t.e[a].conj();
            let (phi_s, phi_c, psi_s, psi_c) = match &res[j] {
                None => {
                    let z = cx(T::zero(), T::zero());
                    (z, z, z, z)
                }
                Some(r) => {
                    let w = cis(two_pi::<T>() * t.y_of(j));
                    let rn = cx(T::zero(), om) + (r.j - r.i * sk) * gk;
                    let extra = sk * theta_from(lam, om, gk) * gk;
                    let front = ff * (n2 * gk);
                    let rt = (one - w) * r.m.unwrap() - r.o.unwrap() * sk;
                    let extra_v = if lam == T::zero() {
                        cx(T::zero(), T::zero())
                    } else {
                        sk * (t.e[a] + t.e[b]) / cx(gk * lam, -om)
                    };
                    let front_v = r.l * ff * (n2 * vpre);
                    (front * rn, front * (rn + extra), front_v * rt, front_v * (rt + extra_v))
                }
            };
            worst[0] = worst[0].max((phi[idx] - phi_s).norm());
            worst[1] = worst[1].max((phi[idx] - phi_c).norm());
            worst[2] = worst[2].max((psi[idx] - psi_s).norm());
            worst[3] = worst[3].max((psi[idx] - psi_c).norm());
            scale[0] = scale[0].max(phi[idx].norm());
            scale[1] = scale[1].max(psi[idx].norm());
        }
    }
    let rel = |e: T, s: T| if s > T::zero() { e / s } else { e };
    Ok(PhiPsiReport {
        n,
        period: p,
        phi_stated: rel(worst[0], scale[0]),
        phi_completed: rel(worst[1], scale[0]),
        psi_stated: rel(worst[2], scale[1]),
        psi_completed: rel(worst[3], scale[1]),
    })
}

/// `int |Omega(k, xi - k)|^2 / (z + sin^2 pi k + sin^2 pi (xi - k)) dk` at `z = n^{-3/2}`,
/// returned with the bound `4 n^{3/2} sin^2(pi xi)`.
pub fn u_bound<T: Real>(n: usize, xi: T) -> Result<(T, T)> {
    let nn = from_usize::<T>(n);
    let z = nn.powf(lit(-1.5));
    let half = lit::<T>(0.5);
    let xr = reduce_unit(xi);
    let mut breaks = vec![-half, T::zero(), xr * half, xr, half];
    breaks.retain(|b| b.abs() <= half);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let val = integrate_breaks(
        |k: T| {
            let o = omega(k, xi - k);
            let (s1, s2) = ((T::PI() * k).sin(), (T::PI() * (xi - k)).sin());
            o * o / (z + s1 * s1 + s2 * s2)
        },
        &breaks,
        Tolerance::new(lit(1e-12), lit(1e-10)),
    )?
    .value;
    let s = (T::PI() * xi).sin();
    Ok((val, lit::<T>(4.0) * nn.powf(lit(1.5)) * s * s))
}

// ---------------------------------------------------------------------------
// Decay of discrete transforms

/// Fitted `C = max (1 + (n|y|)^p) |F_n(f)(n y)|^2` over `points` values of `y in (0, 1/2]`.
pub fn decay_constant<T: Real>(f: &TestFunction<T>, n: usize, p: T, points: usize) -> T {
    let nn = from_usize::<T>(n);
    let mut worst = T::zero();
    for s in 0..=points {
        let y = lit::<T>(0.5) * from_usize::<T>(s) / from_usize::<T>(points);
        for yy in [y, -y] {
            let v = fourier_n(f, n, nn * yy).norm_sqr() * (T::one() + (nn * yy.abs()).powf(p));
            worst = worst.max(v);
        }
    }
    worst
}

/// `int_{[-n/2, n/2]} |xi|^p |F_n(f)(xi) - F(f)(xi)|^2 d xi`.
pub fn discretization_gap<T: Real>(f: &TestFunction<T>, n: usize, p: T) -> Result<T> {
    let half = from_usize::<T>(n) * lit(0.5);
    let mut tol = Tolerance::new(lit(1e-14), lit(1e-8));
    tol.max_intervals = 20_000;
    let mut err = None;
    let est = integrate(
        |xi: T| match fourier_continuous(f, xi) {
            Ok(c) => xi.abs().powf(p) * (fourier_n(f, n, xi) - c).norm_sqr(),
            Err(e) => {
                err = Some(e);
                T::zero()
            }
        },
        -half,
        half,
        tol,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(est.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump() -> TestFunction<f64> {
        TestFunction::new(0.03, 0.2, 1.0)
    }

    #[test]
    fn symbols_at_simple_points() {
        assert!((lambda(0.25f64, 0.25) - 4.0).abs() < 1e-14);
        assert!((omega(0.25f64, 0.0) - 2.0).abs() < 1e-14);
        assert_eq!(theta(0.0, 0.0, 1.0), Complex::new(0.0, 0.0));
    }

    #[test]
    fn theta_bounded_by_one() {
        for g in [1.0, 1.003, 1.2] {
            for i in 0..=60 {
                for j in 0..=60 {
                    let (k, l) = (-0.5 + i as f64 / 60.0, -0.5 + j as f64 / 60.0);
                    assert!(theta(k, l, g).norm() <= 1.0 + 1e-14);
                }
            }
        }
    }

    #[test]
    fn residues_match_quadrature() {
        let tol = Tolerance::new(1e-13, 1e-12);
        for g in [1.0, 1.003, 0.97] {
            for y in [0.31, -0.2, 0.013, -0.47] {
                let a = residue_functions(y, g).unwrap().as_array().unwrap();
                let b = residue_quadrature(y, g, tol).unwrap().as_array().unwrap();
                for q in 0..7 {
                    assert!((a[q] - b[q]).norm() < 1e-9, "{} g={g} y={y}", RESIDUE_NAMES[q]);
                }
            }
        }
    }

    #[test]
    fn residue_limits_at_zero() {
        let r = residue_functions(0.0, 1.01).unwrap();
        assert_eq!(r.i.norm() + r.j.norm() + r.k.norm() + r.l.norm() + r.n.norm(), 0.0);
        assert!(matches!(r.m(), Err(Error::Domain(_))));
        assert!(matches!(r.o(), Err(Error::Domain(_))));
        assert!(residue_functions(0.2, 0.0).is_err());
    }

    #[test]
    fn w_integral_symmetric_and_guarded() {
        let a: f64 = w_integral(0.5).unwrap();
        assert!(a.is_finite() && a > 0.0);
        let (p, m): (f64, f64) = (w_integral(0.07).unwrap(), w_integral(-0.07).unwrap());
        assert!((p - m).abs() < 1e-9 * p);
        assert!(w_integral(1e-7).is_err());
    }

    #[test]
    fn g0_value_at_one() {
        let v = g0(1.0);
        let e = 0.5 * std::f64::consts::PI.powf(1.5);
        assert!((v.re - e).abs() < 1e-14 && (v.im - e).abs() < 1e-14);
    }

    #[test]
    fn gn_approaches_g0_harmonic() {
        let gaps: Vec<f64> = [256, 1024, 4096]
            .iter()
            .map(|&n| g0_gn(2.0, n, 0.0, 3.0).unwrap().gap)
            .collect();
        assert!(gaps[1] < 0.6 * gaps[0] && gaps[2] < 0.6 * gaps[1], "{gaps:?}");
    }

    #[test]
    fn discrete_ops_on_affine_and_quadratic() {
        let n = 16;
        let p = 256;
        let h = GridFunction2D::from_fn(n, p, |x, y| (x + y) as f64 / n as f64);
        let a = transport_2d(&h);
        let l = laplacian_2d(&h);
        for x in -20..20 {
            for y in -20..20 {
                assert!((a.get(x, y) + 4.0).abs() < 1e-12);
                assert!(l.get(x, y).abs() < 1e-9);
            }
        }
        let q = GridFunction2D::from_fn(n, p, |x, y| (x * y) as f64 / (n * n) as f64);
        let d = diagonal_derivative(&q);
        for x in -20..20i64 {
            assert!((d.get(x) - 2.0 * x as f64 / n as f64).abs() < 1e-12);
        }
        let c = GridFunction1D::from_fn(n, p, |_| 3.0);
        assert!(gradient(&c).values.iter().all(|v| *v == 0.0));
        let lin = GridFunction1D::from_fn(n, p, |x| x as f64);
        let ll = laplacian(&lin);
        assert!((-50..50).all(|x| ll.get(x) == 0.0));
    }

    #[test]
    fn mesh_mismatch_is_reported() {
        let a = GridFunction2D::<f64>::zeros(8, 8);
        let b = GridFunction2D::<f64>::zeros(16, 16);
        assert_eq!(a.axpy(1.0, &b), Err(Error::MeshMismatch(8, 16)));
        let f = GridFunction1D::<f64>::zeros(8, 16);
        assert!(assemble_phi(&a, &f, 1.0).is_err());
    }

    #[test]
    fn fourier_n_at_zero_is_riemann_sum() {
        let f = bump();
        let n = 64;
        let direct: f64 = (-40..40).map(|x| f.value(x as f64 / n as f64)).sum::<f64>() / n as f64;
        assert!((fourier_n(&f, n, 0.0).re - direct).abs() < 1e-15);
        let g = GridFunction1D::sample(&f, n, n).unwrap();
        assert!((g.fourier(3.5) - fourier_n(&f, n, 3.5)).norm() < 1e-14);
    }

    #[test]
    fn h_defect_and_symmetry() {
        let f = bump();
        let gk = 1.0 + 3.0 * 0.05;
        let spec = TorusSpec::new(64, gk).with_kernel(PoissonKernel::Inverse);
        let d = poisson_defect(&spec, &f).unwrap();
        assert!(d.h < 1e-10 && d.v < 1e-5, "{d:?}");
        let c = solve_h(&spec, &f).unwrap();
        assert!(c.asymmetry < 1e-12 && c.imag_residue < 1e-12);
        let stated = poisson_defect(&TorusSpec::new(64, 1.0), &f).unwrap();
        assert!(stated.h < 1e-10, "{stated:?}");
        let off = poisson_defect(&TorusSpec::new(64, gk), &f).unwrap();
        assert!(off.h > 1e-3, "{off:?}");
        let wide = poisson_defect(&spec.with_factor(4), &f).unwrap();
        assert!(wide.v < 0.1 * d.v, "{wide:?} {d:?}");
    }

    #[test]
    fn zero_profile_gives_zero_corrector() {
        let f = TestFunction::new(0.0, 0.2, 0.0);
        let h = solve_h(&TorusSpec::new(32, 1.1), &f).unwrap().grid;
        assert!(h.values.iter().all(|v| *v == 0.0));
        let r = phi_psi_hat_suite(16, &f, 0.01, 2).unwrap();
        assert_eq!(r.phi_completed, 0.0);
    }

    #[test]
    fn w_cross_check() {
        let f = bump();
        let gk = 1.05;
        let n = 64;
        let h = solve_h(&TorusSpec::new(n, gk).with_factor(4), &f).unwrap().grid;
        let w = w_from_h(&h);
        for xi in [0.5, 2.0, -3.25] {
            let a = w.fourier(xi);
            let b = w_hat(xi, n, &f, gk, PoissonKernel::Stated).unwrap();
            assert!((a - b).norm() < 1e-8 * b.norm().max(1e-3), "{xi}: {a} {b}");
        }
    }

    #[test]
    fn parseval_on_torus() {
        let f = bump();
        let h = solve_h(&TorusSpec::new(32, 1.02), &f).unwrap().grid;
        let (a, b) = parseval_2d(&h);
        assert!((a - b).abs() <= 1e-9 * a);
        let g = GridFunction1D::sample(&f, 32, 64).unwrap();
        let (a, b) = parseval_1d(&g);
        assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn factorizations_small() {
        let r = phi_psi_hat_suite(32, &bump(), 0.01, 4).unwrap();
        assert!(r.phi_completed < 1e-8 && r.psi_completed < 1e-8, "{r:?}");
        assert!(r.phi_stated > 1e-2 && r.psi_stated > 1e-2, "{r:?}");
    }

    #[test]
    fn semigroups_at_time_zero() {
        let f = TestFunction::<f64>::new(0.0, 0.2, 1.0);
        let grid = PeriodicGrid::new(-4.0, 8.0, 512);
        for kind in [SemigroupKind::Transport, SemigroupKind::Heat, SemigroupKind::Levy32] {
            let s = semigroup_apply(kind, 0.0, &f, &grid).unwrap();
            for (j, v) in s.iter().enumerate() {
                assert!((*v - f.value(grid.node(j))).abs() < 1e-14);
            }
        }
        assert!(semigroup_apply(SemigroupKind::Heat, 2.0, &f, &PeriodicGrid::new(-2.0, 4.0, 64)).is_err());
        let ring = semigroup_apply_ring(SemigroupKind::Levy32, 0.0, &f.shifted(3.0), 256).unwrap();
        let line = semigroup_apply(SemigroupKind::Levy32, 0.0, &f, &PeriodicGrid::new(-0.5, 1.0, 256)).unwrap();
        assert!(ring.iter().zip(&line).all(|(a, b)| (a - b).abs() < 1e-14));
    }

    #[test]
    fn transport_symbol_shifts() {
        let f = TestFunction::<f64>::new(0.1, 0.2, 1.0);
        let grid = PeriodicGrid::new(-2.0, 4.0, 1024);
        let samples: Vec<f64> = grid.nodes().iter().map(|&u| f.value(u)).collect();
        let t = 0.3;
        let viaft = apply_multiplier(&samples, grid.span, |xi| (SemigroupKind::Transport.symbol(xi) * t).exp());
        let exact = semigroup_apply(SemigroupKind::Transport, t, &f, &grid).unwrap();
        let err = viaft.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-5, "{err}");
    }

    #[test]
    fn levy_symbol_contractive() {
        for i in -100..=100 {
            assert!(levy_symbol(i as f64 * 0.37).re <= 0.0);
        }
        assert_eq!(levy_symbol(0.0), Complex::new(0.0, 0.0));
    }

    #[test]
    fn u_bound_holds() {
        for xi in [0.001, 0.03, 0.2, 0.5] {
            let (v, b) = u_bound(256, xi).unwrap();
            assert!(v <= b, "{xi}: {v} {b}");
        }
    }

    #[test]
    fn torus_change_of_variables() {
        let n = 8.0;
        let p = |k: f64, l: f64| {
            let mut acc = Complex::new(0.0, 0.0);
            for (a, b, c) in [(0, 0, 1.5), (1, -2, 0.3), (-3, 1, -0.7), (2, 2, 0.25)] {
                acc += cis(2.0 * std::f64::consts::PI * (a as f64 * k + b as f64 * l) / n) * c;
            }
            acc
        };
        let lhs = torus_integral(n, 16, p);
        let rhs = torus_integral(n, 16, |xi, l| p(xi - l, l));
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm());
        assert!((lhs.re - 1.5 * n * n).abs() < 1e-10);
    }
}
