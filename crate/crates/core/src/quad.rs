//! Adaptive Gauss-Kronrod and Gauss-Legendre quadrature.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Real};

/// Values a quadrature rule can accumulate: reals and complex numbers.
pub trait QuadValue<T: Real>:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<T, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(self) -> T;
}

impl<T: Real> QuadValue<T> for T {
    fn zero() -> Self {
        T::zero()
    }
    fn magnitude(self) -> T {
        self.abs()
    }
}

impl<T: Real> QuadValue<T> for Complex<T> {
    fn zero() -> Self {
        Complex::new(T::zero(), T::zero())
    }
    fn magnitude(self) -> T {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance<T> {
    pub abs: T,
    pub rel: T,
    pub max_intervals: usize,
}

impl<T: Real> Tolerance<T> {
    pub fn new(abs: T, rel: T) -> Self {
        Self {
            abs,
            rel,
            max_intervals: 4000,
        }
    }

    /// Tight default: relative 1e-13 for f64, a few ulps of f32 otherwise.
    pub fn tight() -> Self {
        let rel = (T::epsilon() * lit(500.0)).max(lit(1e-13));
        Self::new(T::min_positive_value(), rel)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<V, T> {
    pub value: V,
    pub error: T,
    /// Integral of the magnitude, used for relative accuracy of cancelling integrands.
    pub abs_integral: T,
    pub intervals: usize,
}

// 21-point Kronrod extension of the 10-point Gauss rule.
const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077208626368682,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];
const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Clone, Copy)]
struct Panel<V, T> {
    a: T,
    b: T,
    value: V,
    error: T,
    abs: T,
}

fn kronrod21<T, V, F>(f: &mut F, a: T, b: T) -> Panel<V, T>
where
    T: Real,
    V: QuadValue<T>,
    F: FnMut(T) -> V,
{
    let half = lit::<T>(0.5);
    let centr = (a + b) * half;
    let hlgth = (b - a) * half;
    let dhlgth = hlgth.abs();

    let fc = f(centr);
    let mut resg = V::zero();
    let mut resk = fc * lit::<T>(WGK[10]);
    let mut resabs = fc.magnitude() * lit(WGK[10]);
    let mut fv1 = [V::zero(); 10];
    let mut fv2 = [V::zero(); 10];
    for j in 0..5 {
        let jtw = 2 * j + 1;
        let absc = hlgth * lit(XGK[jtw]);
        let f1 = f(centr - absc);
        let f2 = f(centr + absc);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        let fsum = f1 + f2;
        resg = resg + fsum * lit::<T>(WG[j]);
        resk = resk + fsum * lit::<T>(WGK[jtw]);
        resabs += (f1.magnitude() + f2.magnitude()) * lit(WGK[jtw]);
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let absc = hlgth * lit(XGK[jtwm1]);
        let f1 = f(centr - absc);
        let f2 = f(centr + absc);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        resk = resk + (f1 + f2) * lit::<T>(WGK[jtwm1]);
        resabs += (f1.magnitude() + f2.magnitude()) * lit(WGK[jtwm1]);
    }
    let reskh = resk * half;
    let mut resasc = (fc - reskh).magnitude() * lit(WGK[10]);
    for j in 0..10 {
        resasc += ((fv1[j] - reskh).magnitude() + (fv2[j] - reskh).magnitude()) * lit(WGK[j]);
    }
    let value = resk * hlgth;
    resabs *= dhlgth;
    resasc *= dhlgth;
    let mut error = ((resk - resg) * hlgth).magnitude();
    if resasc != T::zero() && error != T::zero() {
        error = resasc * T::one().min((lit::<T>(200.0) * error / resasc).powf(lit(1.5)));
    }
    let eps50 = T::epsilon() * lit(50.0);
    if resabs > T::min_positive_value() / eps50 {
        error = error.max(eps50 * resabs);
    }
    Panel {
        a,
        b,
        value,
        error,
        abs: resabs,
    }
}

/// Globally adaptive Gauss-Kronrod (10/21) quadrature over `[a, b]`.
pub fn integrate<T, V, F>(f: F, a: T, b: T, tol: Tolerance<T>) -> Result<Estimate<V, T>>
where
    T: Real,
    V: QuadValue<T>,
    F: FnMut(T) -> V,
{
    integrate_breaks(f, &[a, b], tol)
}

/// Adaptive quadrature starting from the panels delimited by `breaks`.
pub fn integrate_breaks<T, V, F>(mut f: F, breaks: &[T], tol: Tolerance<T>) -> Result<Estimate<V, T>>
where
    T: Real,
    V: QuadValue<T>,
    F: FnMut(T) -> V,
{
    assert!(breaks.len() >= 2, "need at least one panel");
    let mut panels: Vec<Panel<V, T>> = breaks
        .windows(2)
        .map(|w| kronrod21(&mut f, w[0], w[1]))
        .collect();
    loop {
        let mut value = V::zero();
        let mut error = T::zero();
        let mut abs = T::zero();
        let mut worst = 0;
        for (i, p) in panels.iter().enumerate() {
            value = value + p.value;
            error += p.error;
            abs += p.abs;
            if p.error > panels[worst].error {
                worst = i;
            }
        }
        let target = tol.abs.max(tol.rel * value.magnitude());
        let roundoff = T::epsilon() * lit(100.0) * abs;
        if error <= target || error <= roundoff {
            return Ok(Estimate {
                value,
                error,
                abs_integral: abs,
                intervals: panels.len(),
            });
        }
        let p = panels[worst];
        let mid = (p.a + p.b) * lit(0.5);
        if panels.len() >= tol.max_intervals || mid <= p.a.min(p.b) || mid >= p.a.max(p.b) {
            return Err(Error::Quadrature {
                error: error.to_f64().unwrap_or(f64::NAN),
                intervals: panels.len(),
            });
        }
        panels[worst] = kronrod21(&mut f, p.a, mid);
        panels.push(kronrod21(&mut f, mid, p.b));
    }
}

/// Nodes and weights of the `m`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(m: usize) -> (Vec<T>, Vec<T>) {
    assert!(m >= 1);
    let mut nodes = vec![T::zero(); m];
    let mut weights = vec![T::zero(); m];
    let mf = from_usize::<T>(m);
    for i in 0..m.div_ceil(2) {
        let mut x = (T::PI() * (from_usize::<T>(i) + lit(0.75)) / (mf + lit(0.5))).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= T::epsilon() * lit(4.0) {
                let (_, d) = legendre_with_derivative(m, x);
                dp = d;
                break;
            }
        }
        let w = lit::<T>(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = T::zero();
    }
    (nodes, weights)
}

fn legendre_with_derivative<T: Real>(m: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=m {
        let kf = from_usize::<T>(k);
        let p2 = ((lit::<T>(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if m == 0 {
        return (T::one(), T::zero());
    }
    let mf = from_usize::<T>(m);
    let d = mf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_weights_sum_to_two() {
        let s: f64 = WGK[10] + 2.0 * WGK[..10].iter().sum::<f64>();
        assert!((s - 2.0).abs() < 1e-15);
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn polynomial_of_degree_29() {
        let est = integrate(|x: f64| x.powi(28) + x.powi(29), -1.0, 1.0, Tolerance::tight()).unwrap();
        assert!((est.value - 2.0 / 29.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_integral() {
        let est = integrate(|x: f64| (-x * x / 2.0).exp(), -12.0, 12.0, Tolerance::tight()).unwrap();
        let exact = (2.0 * std::f64::consts::PI).sqrt();
        assert!((est.value - exact).abs() < 1e-13 * exact);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let est = integrate(|x: f64| x.sqrt().recip(), 0.0, 1.0, Tolerance::new(1e-10, 1e-10)).unwrap();
        assert!((est.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn complex_integrand() {
        let est: Estimate<Complex<f64>, f64> = integrate(
            |x: f64| Complex::new(0.0, 2.0 * std::f64::consts::PI * x).exp(),
            0.0,
            0.25,
            Tolerance::tight(),
        )
        .unwrap();
        let exact = Complex::new(0.0, 1.0 / (2.0 * std::f64::consts::PI)) * Complex::new(1.0, -1.0);
        assert!((est.value - exact).norm() < 1e-14);
    }

    #[test]
    fn gauss_legendre_exact_and_symmetric() {
        for m in [1usize, 2, 5, 16, 40] {
            let (x, w) = gauss_legendre::<f64>(m);
            let total: f64 = w.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "m={m}");
            let deg = 2 * m - 2;
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((q - 2.0 / (deg as f64 + 1.0)).abs() < 1e-13, "m={m}");
            for i in 0..m {
                assert_eq!(x[i], -x[m - 1 - i]);
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let est = integrate(|x: f32| x.cos(), 0.0f32, 1.0, Tolerance::tight()).unwrap();
        assert!((est.value - 1f32.sin()).abs() < 1e-6);
    }
}
