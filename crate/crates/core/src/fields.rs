//! Fluctuation fields of the lattice configuration and Monte Carlo estimates of their
//! space-time correlations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{evolve, Integrator, LatticeState};
use crate::equilibrium::{equilibrium_summary, moment, site_energy, ModelParams, QuarticMeasure};
use crate::error::{Error, Result};
use crate::quad::{integrate, Tolerance};
use crate::scalar::{from_usize, lit, to_f64, Real};

pub const SAFE_HALF_WIDTH: f64 = 0.25;
pub const MIN_REPLICAS: usize = 100;

/// Smooth bump `A exp(-1 / (1 - s^2))`, `s = (u - c) / w`, vanishing for `|s| >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFunction<T> {
    pub center: T,
    pub width: T,
    pub amplitude: T,
}

fn bump_integral(power: i32) -> f64 {
    integrate(
        |s: f64| {
            if s.abs() >= 1.0 {
                0.0
            } else {
                (-(power as f64) / (1.0 - s * s)).exp()
            }
        },
        -1.0,
        1.0,
        Tolerance::new(1e-15, 1e-14),
    )
    .map(|e| e.value)
    .expect("bump integral converges")
}

impl<T: Real> TestFunction<T> {
    pub fn new(center: T, width: T, amplitude: T) -> Self {
        assert!(width > T::zero(), "bump width must be positive");
        Self {
            center,
            width,
            amplitude,
        }
    }

    /// Normalized so that its integral is one.
    pub fn unit_mass(center: T, width: T) -> Self {
        let a = T::one() / (width * lit(bump_integral(1)));
        Self::new(center, width, a)
    }

    /// Normalized so that its `L^2` norm is one.
    pub fn unit_l2(center: T, width: T) -> Self {
        let a = (width * lit(bump_integral(2))).sqrt().recip();
        Self::new(center, width, a)
    }

    pub fn support(&self) -> (T, T) {
        (self.center - self.width, self.center + self.width)
    }

    pub fn value(&self, u: T) -> T {
        self.derivative(u, 0)
    }

    /// Derivatives of order 0, 1 or 2 in closed form.
    pub fn derivative(&self, u: T, order: u32) -> T {
        let s = (u - self.center) / self.width;
        let q = T::one() - s * s;
        if q <= T::zero() {
            return T::zero();
        }
        let e = self.amplitude * (-q.recip()).exp();
        let two = lit::<T>(2.0);
        let g1 = -two * s / (q * q);
        match order {
            0 => e,
            1 => e * g1 / self.width,
            2 => {
                let g2 = -two / (q * q) - lit::<T>(8.0) * s * s / (q * q * q);
                e * (g1 * g1 + g2) / (self.width * self.width)
            }
            _ => panic!("derivatives above order 2 are not provided"),
        }
    }

    pub fn shifted(&self, by: T) -> Self {
        Self {
            center: self.center + by,
            ..*self
        }
    }

    pub fn l2_norm_sq(&self) -> T {
        self.amplitude * self.amplitude * self.width * lit(bump_integral(2))
    }
}

/// `u -> f((x - c_n t n^a) / n)` with `c_n = -2 - 6 chi gamma_n`: the same bump moved by
/// `c_n t n^(a-1)` in macroscopic units.
pub fn moving_frame<T: Real>(f: &TestFunction<T>, t: T, params: &ModelParams<T>, chi: T) -> TestFunction<T> {
    let c = frame_velocity(params.gamma, chi);
    f.shifted(c * t * from_usize::<T>(params.n).powf(params.a - T::one()))
}

pub fn frame_velocity<T: Real>(gamma: T, chi: T) -> T {
    -lit::<T>(2.0) - lit::<T>(6.0) * chi * gamma
}

/// Macroscopic coordinate of lattice site `x` on the ring, in `[-1/2, 1/2)`.
pub fn site_coordinate<T: Real>(x: usize, n: usize) -> T {
    let xi = if 2 * x < n { x as i64 } else { x as i64 - n as i64 };
    lit::<T>(xi as f64) / from_usize(n)
}

/// Values of the periodized profile at every lattice site.
pub fn sample_profile<T: Real>(f: &TestFunction<T>, n: usize) -> Result<Vec<T>> {
    let (lo, hi) = f.support();
    if hi - lo >= T::one() {
        return Err(Error::WindowViolation {
            lo: to_f64(lo),
            hi: to_f64(hi),
        });
    }
    Ok((0..n)
        .map(|x| {
            let u = site_coordinate::<T>(x, n);
            f.value(u - T::one()) + f.value(u) + f.value(u + T::one())
        })
        .collect())
}

/// Equilibrium constants used to center the fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centering<T> {
    pub gamma: T,
    pub beta: T,
    pub e_mean: T,
    pub v_mean: T,
    pub m4: T,
    pub kappa: T,
    pub chi: T,
}

impl<T: Real> Centering<T> {
    /// Quadrature values at zero tension.
    pub fn from_params(params: &ModelParams<T>) -> Result<Self> {
        let p = ModelParams {
            tau: T::zero(),
            ..*params
        };
        let s = equilibrium_summary(&p)?;
        Ok(Self {
            gamma: p.gamma,
            beta: p.beta,
            e_mean: s.e_mean,
            v_mean: s.v_mean,
            m4: moment(4, &p)?,
            kappa: s.kappa,
            chi: s.chi,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Volume,
    Energy,
    /// `w^3 - kappa w`.
    Volume3,
    /// Raw `w^3`.
    Volume3Raw,
    /// `w^4 - <w^4>`.
    Quartic,
}

impl FieldKind {
    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Volume => "volume",
            FieldKind::Energy => "energy",
            FieldKind::Volume3 => "volume3",
            FieldKind::Volume3Raw => "volume3_raw",
            FieldKind::Quartic => "quartic",
        }
    }

    pub fn is_volume_like(self) -> bool {
        matches!(self, FieldKind::Volume | FieldKind::Volume3 | FieldKind::Volume3Raw)
    }

    /// Centered single-site observable.
    pub fn site_value<T: Real>(self, w: T, c: &Centering<T>) -> T {
        match self {
            FieldKind::Volume => w - c.v_mean,
            FieldKind::Energy => site_energy(w, c.gamma) - c.e_mean,
            FieldKind::Volume3 => w * w * w - c.kappa * w,
            FieldKind::Volume3Raw => w * w * w,
            FieldKind::Quartic => w.powi(4) - c.m4,
        }
    }
}

/// `(1/sqrt n) sum_x f(x/n) phi(w_x)` for the observable `phi` of `kind`.
pub fn field<T: Real>(kind: FieldKind, f: &TestFunction<T>, omega: &[T], c: &Centering<T>) -> Result<T> {
    let n = omega.len();
    let w = sample_profile(f, n)?;
    Ok(field_from_profile(kind, &w, omega, c))
}

fn field_from_profile<T: Real>(kind: FieldKind, w: &[T], omega: &[T], c: &Centering<T>) -> T {
    let s: T = w
        .iter()
        .zip(omega)
        .filter(|(&a, _)| a != T::zero())
        .map(|(&a, &u)| a * kind.site_value(u, c))
        .sum();
    s / from_usize::<T>(omega.len()).sqrt()
}

pub fn volume_field<T: Real>(f: &TestFunction<T>, omega: &[T], c: &Centering<T>) -> Result<T> {
    field(FieldKind::Volume, f, omega, c)
}

pub fn energy_field<T: Real>(f: &TestFunction<T>, omega: &[T], c: &Centering<T>) -> Result<T> {
    field(FieldKind::Energy, f, omega, c)
}

pub fn volume3_field<T: Real>(f: &TestFunction<T>, omega: &[T], c: &Centering<T>) -> Result<T> {
    field(FieldKind::Volume3, f, omega, c)
}

pub fn volume3_raw_field<T: Real>(f: &TestFunction<T>, omega: &[T], c: &Centering<T>) -> Result<T> {
    field(FieldKind::Volume3Raw, f, omega, c)
}

pub fn quartic_field<T: Real>(f: &TestFunction<T>, omega: &[T], c: &Centering<T>) -> Result<T> {
    field(FieldKind::Quartic, f, omega, c)
}

/// `(1/n) sum_{x != y} h(x/n, y/n) p(w_x) q(w_y)` with `(p, q)` equal to `(w, w)`,
/// `(w^3 - kappa w, w)` or `(w^3 - kappa w, w^3 - kappa w)` for orders 2, 4, 6.
pub fn q_field<T: Real, H: Fn(T, T) -> T>(order: u32, h: H, omega: &[T], kappa: T) -> Result<T> {
    let n = omega.len();
    let h3 = |w: T| w * w * w - kappa * w;
    let (p, q): (Vec<T>, Vec<T>) = match order {
        2 => (omega.to_vec(), omega.to_vec()),
        4 => (omega.iter().map(|&w| h3(w)).collect(), omega.to_vec()),
        6 => {
            let v: Vec<T> = omega.iter().map(|&w| h3(w)).collect();
            (v.clone(), v)
        }
        _ => return Err(Error::Domain(format!("q_field order must be 2, 4 or 6, got {order}"))),
    };
    let coords: Vec<T> = (0..n).map(|x| site_coordinate(x, n)).collect();
    let mut s = T::zero();
    for x in 0..n {
        for y in 0..n {
            if x != y {
                s += h(coords[x], coords[y]) * p[x] * q[y];
            }
        }
    }
    Ok(s / from_usize(n))
}

/// `||f||_{2,n}`: square root of `(1/n) sum_x f(x/n)^2` over all integers.
pub fn l2_norm_n<T: Real>(f: &TestFunction<T>, n: usize) -> T {
    let nf = from_usize::<T>(n);
    let (lo, hi) = f.support();
    let x0 = (lo * nf).floor().to_i64().unwrap_or(0);
    let x1 = (hi * nf).ceil().to_i64().unwrap_or(0);
    let s: T = (x0..=x1).map(|x| f.value(lit::<T>(x as f64) / nf).powi(2)).sum();
    (s / nf).sqrt()
}

/// `N_n(h)`: square root of `(1/n^2) sum_{x != y} h(x/n, y/n)^2` over the box `[lo, hi]^2`.
pub fn pair_norm_n<T: Real, H: Fn(T, T) -> T>(h: H, n: usize, lo: T, hi: T) -> T {
    let nf = from_usize::<T>(n);
    let x0 = (lo * nf).floor().to_i64().unwrap_or(0);
    let x1 = (hi * nf).ceil().to_i64().unwrap_or(0);
    let mut s = T::zero();
    for x in x0..=x1 {
        for y in x0..=x1 {
            if x != y {
                s += h(lit::<T>(x as f64) / nf, lit::<T>(y as f64) / nf).powi(2);
            }
        }
    }
    (s / (nf * nf)).sqrt()
}

/// Field kind together with the profile it is tested against. A non-zero `frame_velocity`
/// evaluates the profile at `(x - v t n^a) / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSpec<T> {
    pub kind: FieldKind,
    pub profile: TestFunction<T>,
    pub frame_velocity: T,
}

impl<T: Real> FieldSpec<T> {
    pub fn new(kind: FieldKind, profile: TestFunction<T>) -> Self {
        Self {
            kind,
            profile,
            frame_velocity: T::zero(),
        }
    }

    pub fn in_frame(mut self, velocity: T) -> Self {
        self.frame_velocity = velocity;
        self
    }

    fn displaced(&self, t: T, params: &ModelParams<T>) -> TestFunction<T> {
        let scale = from_usize::<T>(params.n).powf(params.a - T::one());
        self.profile.shifted(self.frame_velocity * t * scale)
    }

    /// Profile evaluated at time `t`, with its center reduced to the unit ring.
    pub fn at_time(&self, t: T, params: &ModelParams<T>) -> TestFunction<T> {
        let f = self.displaced(t, params);
        f.shifted(-f.center.round())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationEstimate<T> {
    pub mean: T,
    pub stderr: T,
    pub replicas: usize,
    pub t: T,
    pub a: T,
    pub n: usize,
    pub kind0: FieldKind,
    pub kind_t: FieldKind,
}

#[derive(Debug, Clone, Copy)]
pub struct CorrelationConfig<T> {
    pub replicas: usize,
    pub seed: u64,
    pub translation_average: bool,
    pub integrator: Integrator<T>,
}

impl<T: Real> CorrelationConfig<T> {
    pub fn new(replicas: usize, seed: u64) -> Self {
        Self {
            replicas,
            seed,
            translation_average: true,
            integrator: Integrator::default(),
        }
    }
}

/// Checks that `g` and every target profile, pulled back along the expected signal
/// velocity, stay inside `[-1/4, 1/4]`. Volume-like signals travel at `c_n`, energy-like
/// ones do not travel.
pub fn check_window<T: Real>(
    field0: &FieldSpec<T>,
    targets: &[FieldSpec<T>],
    ts: &[T],
    params: &ModelParams<T>,
    chi: T,
) -> Result<()> {
    let half = lit::<T>(SAFE_HALF_WIDTH);
    let eps = lit::<T>(1e-12);
    let inside = |lo: T, hi: T| -> Result<()> {
        if lo < -half - eps || hi > half + eps {
            Err(Error::WindowViolation {
                lo: to_f64(lo),
                hi: to_f64(hi),
            })
        } else {
            Ok(())
        }
    };
    let (glo, ghi) = field0.profile.support();
    inside(glo, ghi)?;
    let scale = from_usize::<T>(params.n).powf(params.a - T::one());
    for spec in targets {
        let signal = if spec.kind.is_volume_like() && field0.kind.is_volume_like() {
            frame_velocity(params.gamma, chi)
        } else {
            T::zero()
        };
        for &t in ts {
            let (lo, hi) = spec.displaced(t, params).support();
            let back = signal * t * scale;
            inside(lo - back, hi - back)?;
        }
    }
    Ok(())
}

/// Circular correlation `F(s) = (1/sqrt n) sum_x w_x a_{x+s}` for every shift `s`, or only
/// `s = 0` when `all_shifts` is false.
fn shifted_fields<T: Real>(w: &[T], a: &[T], all_shifts: bool) -> Vec<T> {
    let n = a.len();
    let norm = from_usize::<T>(n).sqrt();
    let support: Vec<(usize, T)> = w.iter().copied().enumerate().filter(|&(_, v)| v != T::zero()).collect();
    let shifts = if all_shifts { n } else { 1 };
    (0..shifts)
        .map(|s| support.iter().map(|&(x, v)| v * a[(x + s) % n]).sum::<T>() / norm)
        .collect()
}

fn site_values<T: Real>(kind: FieldKind, omega: &[T], c: &Centering<T>) -> Vec<T> {
    omega.iter().map(|&w| kind.site_value(w, c)).collect()
}

/// Sum in a fixed binary-tree order, independent of how the terms were produced.
pub fn pairwise_sum<T: Real>(v: &[T]) -> T {
    match v.len() {
        0 => T::zero(),
        1 => v[0],
        len => {
            let (l, r) = v.split_at(len / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

pub fn replica_rng(seed: u64, replica: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica as u64);
    rng
}

/// Per-replica products `F0(g) F_t(f)` for every target and time, laid out
/// `[replica][target * ts.len() + time]`.
pub fn correlate_replicas<T: Real>(
    field0: &FieldSpec<T>,
    targets: &[FieldSpec<T>],
    ts: &[T],
    params: &ModelParams<T>,
    config: &CorrelationConfig<T>,
) -> Result<Vec<Vec<T>>> {
    params.validate()?;
    if config.replicas < MIN_REPLICAS {
        return Err(Error::InvalidParams(format!(
            "need at least {MIN_REPLICAS} replicas, got {}",
            config.replicas
        )));
    }
    if ts.iter().any(|&t| !(t >= T::zero())) || ts.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams("time grid must be non-negative and sorted".into()));
    }
    let centering = Centering::from_params(params)?;
    check_window(field0, targets, ts, params, centering.chi)?;
    let n = params.n;
    let g = sample_profile(&field0.profile, n)?;
    let profiles: Vec<Vec<Vec<T>>> = targets
        .iter()
        .map(|spec| {
            ts.iter()
                .map(|&t| sample_profile(&spec.at_time(t, params), n))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let time_scale = from_usize::<T>(n).powf(params.a);
    let all = config.translation_average;

    (0..config.replicas)
        .into_par_iter()
        .map(|r| -> Result<Vec<T>> {
            let mut rng = replica_rng(config.seed, r);
            let mut state = LatticeState::sample(params, &mut rng)?;
            let f0 = shifted_fields(&g, &site_values(field0.kind, &state.omega, &centering), all);
            let mut out = vec![T::zero(); targets.len() * ts.len()];
            for (ti, &t) in ts.iter().enumerate() {
                let target_time = t * time_scale;
                let remaining = target_time - state.t;
                evolve(&mut state, remaining, &config.integrator, &mut rng)?;
                for (k, spec) in targets.iter().enumerate() {
                    let a = site_values(spec.kind, &state.omega, &centering);
                    let ft = shifted_fields(&profiles[k][ti], &a, all);
                    let prod: Vec<T> = f0.iter().zip(&ft).map(|(&x, &y)| x * y).collect();
                    out[k * ts.len() + ti] = pairwise_sum(&prod) / from_usize(prod.len());
                }
            }
            Ok(out)
        })
        .collect()
}

/// Mean and standard error of a sample, summed in a fixed order.
pub fn mean_stderr<T: Real>(v: &[T]) -> (T, T) {
    let m = from_usize::<T>(v.len());
    let mean = pairwise_sum(v) / m;
    let dev: Vec<T> = v.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (m - T::one());
    (mean, (var / m).sqrt())
}

/// Estimates `E[F0(g) F_t(f)]` for every target and every time in `ts` (macroscopic
/// times, simulated for `t n^a`). Result is indexed `[target][time]`.
pub fn correlate_grid<T: Real>(
    field0: &FieldSpec<T>,
    targets: &[FieldSpec<T>],
    ts: &[T],
    params: &ModelParams<T>,
    config: &CorrelationConfig<T>,
) -> Result<Vec<Vec<CorrelationEstimate<T>>>> {
    let per_replica = correlate_replicas(field0, targets, ts, params, config)?;
    let n = params.n;
    Ok(targets
        .iter()
        .enumerate()
        .map(|(k, spec)| {
            ts.iter()
                .enumerate()
                .map(|(ti, &t)| {
                    let v: Vec<T> = per_replica.iter().map(|r| r[k * ts.len() + ti]).collect();
                    let (mean, stderr) = mean_stderr(&v);
                    CorrelationEstimate {
                        mean,
                        stderr,
                        replicas: config.replicas,
                        t,
                        a: params.a,
                        n,
                        kind0: field0.kind,
                        kind_t: spec.kind,
                    }
                })
                .collect()
        })
        .collect())
}

pub fn correlate<T: Real>(
    field0: &FieldSpec<T>,
    field_t: &FieldSpec<T>,
    t: T,
    params: &ModelParams<T>,
    config: &CorrelationConfig<T>,
) -> Result<CorrelationEstimate<T>> {
    Ok(correlate_grid(field0, std::slice::from_ref(field_t), &[t], params, config)?[0][0])
}

/// Equilibrium covariance `E[F0(g) F(f)] = (1/n) sum_x g f Cov(phi0, phi)` from quadrature.
pub fn static_covariance<T: Real>(field0: &FieldSpec<T>, field_t: &FieldSpec<T>, params: &ModelParams<T>) -> Result<T> {
    let c = Centering::from_params(params)?;
    let m = QuarticMeasure::quartic(&ModelParams {
        tau: T::zero(),
        ..*params
    })?;
    let cov = m.cumulant2(|u| field0.kind.site_value(u, &c), |u| field_t.kind.site_value(u, &c))?;
    let g = sample_profile(&field0.profile, params.n)?;
    let f = sample_profile(&field_t.profile, params.n)?;
    let s: T = g.iter().zip(&f).map(|(&a, &b)| a * b).sum();
    Ok(cov * s / from_usize(params.n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn centering(gamma: f64) -> Centering<f64> {
        Centering::from_params(&ModelParams::standard(gamma)).unwrap()
    }

    #[test]
    fn bump_normalizations() {
        let f = TestFunction::unit_mass(0.1f64, 0.2);
        let m = integrate(|u| f.value(u), -0.1, 0.3, Tolerance::new(1e-14, 1e-12)).unwrap().value;
        assert!((m - 1.0).abs() < 1e-10);
        let f = TestFunction::unit_l2(0.0f64, 0.3);
        assert!((f.l2_norm_sq() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bump_derivatives_match_differences() {
        let f = TestFunction::new(0.05f64, 0.2, 1.3);
        for &u in &[-0.1, 0.0, 0.1, 0.2] {
            let h = 1e-5;
            let d1 = (f.value(u + h) - f.value(u - h)) / (2.0 * h);
            let d2 = (f.value(u + h) - 2.0 * f.value(u) + f.value(u - h)) / (h * h);
            assert!((f.derivative(u, 1) - d1).abs() < 1e-6 * d1.abs().max(1.0));
            assert!((f.derivative(u, 2) - d2).abs() < 1e-3 * d2.abs().max(1.0));
        }
        assert_eq!(f.value(0.25), 0.0);
        assert_eq!(f.value(-0.15), 0.0);
    }

    #[test]
    fn zero_configuration_fields() {
        let c = centering(0.0);
        let f = TestFunction::unit_mass(0.0f64, 0.2);
        let w = vec![0.0; 64];
        assert_eq!(volume_field(&f, &w, &c).unwrap(), 0.0);
        let sum: f64 = sample_profile(&f, 64).unwrap().iter().sum();
        let e = energy_field(&f, &w, &c).unwrap();
        assert!((e + sum * c.e_mean / 8.0).abs() < 1e-14);
        assert_eq!(q_field(4, |u, v| u + v, &w, c.kappa).unwrap(), 0.0);
    }

    #[test]
    fn q_field_two_term_sum() {
        let n = 16;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let h = |u: f64, v: f64| {
            let hit = |a: f64, b: f64| (a - 0.0).abs() < 1e-9 && (b - 1.0 / 16.0).abs() < 1e-9;
            if hit(u, v) || hit(v, u) {
                0.7
            } else {
                0.0
            }
        };
        let q = q_field(2, h, &w, 3.0).unwrap();
        assert!((q - 0.7 * 2.0 * w[0] * w[1] / 16.0).abs() < 1e-15);
    }

    #[test]
    fn q_field_ignores_diagonal() {
        let w: Vec<f64> = (0..12).map(|x| (x as f64 * 0.37).sin()).collect();
        let a = q_field(6, |u, v| u * v + 1.0, &w, 2.5).unwrap();
        let b = q_field(6, |u, v| if u == v { 99.0 } else { u * v + 1.0 }, &w, 2.5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fields_are_linear() {
        let c = centering(0.2);
        let w: Vec<f64> = (0..64).map(|x| (x as f64 * 1.3).cos() * 1.5).collect();
        let f = TestFunction::new(0.05, 0.15, 2.0);
        let g = TestFunction::new(0.05, 0.15, 3.0);
        for kind in [FieldKind::Volume, FieldKind::Energy, FieldKind::Volume3, FieldKind::Quartic] {
            let a = field(kind, &f, &w, &c).unwrap();
            let b = field(kind, &g, &w, &c).unwrap();
            assert!((a * 1.5 - b).abs() < 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn moving_frame_values() {
        let p = ModelParams::standard(0.0f64).with_n(64);
        assert_eq!(frame_velocity(0.0f64, 1.0), -2.0);
        assert!((frame_velocity(0.01f64, 1.0) + 2.06).abs() < 1e-15);
        let f = TestFunction::unit_mass(0.0, 0.1);
        assert_eq!(moving_frame(&f, 0.0, &p, 1.0), f);
    }

    #[test]
    fn riemann_norm_converges() {
        let f = TestFunction::unit_l2(0.0f64, 0.2);
        assert_eq!(l2_norm_n(&TestFunction::new(0.0, 0.2, 0.0), 64), 0.0);
        let e64 = (l2_norm_n(&f, 64) - 1.0).abs();
        let e256 = (l2_norm_n(&f, 256) - 1.0).abs();
        assert!(e256 < 1e-6 && e64 < 1e-2);
        let h = |u: f64, v: f64| if (u - 0.0).abs() < 1e-9 && (v - 0.125).abs() < 1e-9 { 1.0 } else { 0.0 };
        let hs = |u: f64, v: f64| h(u, v) + h(v, u);
        assert!((pair_norm_n(hs, 8, -0.5, 0.5) - (2.0f64).sqrt() / 8.0).abs() < 1e-15);
    }

    #[test]
    fn window_is_enforced() {
        let p = ModelParams::standard(0.0f64).with_n(64);
        let g = FieldSpec::new(FieldKind::Volume, TestFunction::unit_mass(0.0, 0.25));
        let f = FieldSpec::new(FieldKind::Volume, TestFunction::unit_mass(0.1, 0.25));
        assert!(check_window(&g, &[g], &[0.0], &p, 1.0).is_ok());
        assert!(check_window(&g, &[f], &[0.0], &p, 1.0).is_err());
        let moved = FieldSpec::new(FieldKind::Volume, TestFunction::unit_mass(-0.2, 0.05));
        assert!(check_window(&g, &[moved], &[0.1], &p, 1.0).is_ok());
        let cfg = CorrelationConfig::new(10, 0);
        assert!(correlate(&g, &g, 0.0, &p, &cfg).is_err());
    }

    #[test]
    fn static_volume_variance() {
        let p = ModelParams::standard(0.0f64).with_n(128);
        let g = FieldSpec::new(FieldKind::Volume, TestFunction::unit_mass(0.0, 0.25));
        let want: f64 = sample_profile(&g.profile, 128).unwrap().iter().map(|v| v * v).sum::<f64>() / 128.0;
        let oracle = static_covariance(&g, &g, &p).unwrap();
        assert!((oracle - want).abs() < 1e-12);
        let cfg = CorrelationConfig::new(400, 11);
        let est = correlate(&g, &g, 0.0, &p, &cfg).unwrap();
        assert!((est.mean - want).abs() < 3.0 * est.stderr, "{est:?} vs {want}");
    }

    #[test]
    fn correlation_is_schedule_independent() {
        let p = ModelParams::standard(0.05f64).with_n(32);
        let g = FieldSpec::new(FieldKind::Energy, TestFunction::unit_mass(0.0, 0.2));
        let cfg = CorrelationConfig::new(100, 3);
        let a = correlate(&g, &g, 0.01, &p, &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| correlate(&g, &g, 0.01, &p, &cfg).unwrap());
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }
}
