//! Anharmonic chain with stochastic exchanges on a periodic lattice: simulation and
//! exact action of the generator on polynomial observables.

use rand::Rng;
use rand_distr::Exp1;

use crate::equilibrium::{sample_site, site_energy, ModelParams};
use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, to_f64, Real};

pub const BLOW_UP: f64 = 1e6;
pub const DT_MAX: f64 = 5e-3;
pub const ENERGY_BUDGET: f64 = 1e-7;
pub const MAX_OBSERVABLE_DEGREE: u32 = 8;
const ENERGY_CHECK_EVERY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conserved<T> {
    pub volume: T,
    pub energy: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState<T> {
    pub omega: Vec<T>,
    pub t: T,
    pub conserved: Conserved<T>,
    pub gamma: T,
    pub swaps: u64,
}

impl<T: Real> LatticeState<T> {
    pub fn new(omega: Vec<T>, gamma: T) -> Self {
        let conserved = Conserved {
            volume: total_volume(&omega),
            energy: total_energy(&omega, gamma),
        };
        Self {
            omega,
            t: T::zero(),
            conserved,
            gamma,
            swaps: 0,
        }
    }

    /// Independent draw of every site from the zero-tension Gibbs measure.
    pub fn sample<R: Rng + ?Sized>(params: &ModelParams<T>, rng: &mut R) -> Result<Self> {
        if params.n < 3 {
            return Err(Error::InvalidParams(format!("lattice needs n >= 3, got {}", params.n)));
        }
        let p = ModelParams {
            tau: T::zero(),
            ..*params
        };
        let omega = (0..params.n)
            .map(|_| sample_site(&p, rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(omega, params.gamma))
    }

    pub fn n(&self) -> usize {
        self.omega.len()
    }

    pub fn volume(&self) -> T {
        total_volume(&self.omega)
    }

    pub fn energy(&self) -> T {
        total_energy(&self.omega, self.gamma)
    }

    /// Relative deviation of the total energy from the cached value.
    pub fn energy_drift(&self) -> T {
        let e0 = self.conserved.energy;
        (self.energy() - e0).abs() / e0.abs().max(T::min_positive_value())
    }
}

// Sorted summation makes the totals invariant under permutations of the sites, bit for bit.
fn sorted_sum<T: Real>(mut v: Vec<T>) -> T {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v.into_iter().sum()
}

fn total_volume<T: Real>(omega: &[T]) -> T {
    sorted_sum(omega.to_vec())
}

fn total_energy<T: Real>(omega: &[T], gamma: T) -> T {
    sorted_sum(omega.iter().map(|&u| site_energy(u, gamma)).collect())
}

/// Right-hand side of the deterministic flow, written into `out`.
pub fn drift_into<T: Real>(omega: &[T], gamma: T, out: &mut [T]) -> Result<()> {
    let n = omega.len();
    let cap = lit::<T>(BLOW_UP);
    for (x, &w) in omega.iter().enumerate() {
        if !(w.abs() < cap) {
            return Err(Error::BlowUp {
                site: x,
                value: to_f64(w),
            });
        }
    }
    for x in 0..n {
        let l = omega[(x + n - 1) % n];
        let r = omega[(x + 1) % n];
        out[x] = (r - l) + gamma * (r * r * r - l * l * l);
    }
    Ok(())
}

pub fn drift<T: Real>(omega: &[T], gamma: T) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); omega.len()];
    drift_into(omega, gamma, &mut out)?;
    Ok(out)
}

/// Scratch buffers for RK4 so that long runs do not allocate.
#[derive(Debug, Clone, Default)]
pub struct Rk4Workspace<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
}

impl<T: Real> Rk4Workspace<T> {
    pub fn new(n: usize) -> Self {
        Self {
            k1: vec![T::zero(); n],
            k2: vec![T::zero(); n],
            k3: vec![T::zero(); n],
            k4: vec![T::zero(); n],
            tmp: vec![T::zero(); n],
        }
    }

    fn step(&mut self, omega: &mut [T], gamma: T, dt: T) -> Result<()> {
        let n = omega.len();
        if self.k1.len() != n {
            *self = Self::new(n);
        }
        let half = dt * lit(0.5);
        drift_into(omega, gamma, &mut self.k1)?;
        for i in 0..n {
            self.tmp[i] = omega[i] + half * self.k1[i];
        }
        drift_into(&self.tmp, gamma, &mut self.k2)?;
        for i in 0..n {
            self.tmp[i] = omega[i] + half * self.k2[i];
        }
        drift_into(&self.tmp, gamma, &mut self.k3)?;
        for i in 0..n {
            self.tmp[i] = omega[i] + dt * self.k3[i];
        }
        drift_into(&self.tmp, gamma, &mut self.k4)?;
        let sixth = dt / lit(6.0);
        for i in 0..n {
            omega[i] += sixth * (self.k1[i] + lit::<T>(2.0) * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
        Ok(())
    }
}

/// One classical Runge-Kutta step of the flow. Conserved caches are left untouched.
pub fn step_ode<T: Real>(state: &mut LatticeState<T>, dt: T) -> Result<()> {
    if !(dt > T::zero() && dt <= lit(0.05)) {
        return Err(Error::InvalidParams(format!("dt must lie in (0, 0.05], got {dt}")));
    }
    let mut ws = Rk4Workspace::new(state.n());
    ws.step(&mut state.omega, state.gamma, dt)?;
    state.t += dt;
    Ok(())
}

/// Exchanges the values at sites `x` and `x + 1` (periodic).
pub fn swap<T: Real>(state: &mut LatticeState<T>, x: usize) {
    let n = state.n();
    state.omega.swap(x % n, (x + 1) % n);
    state.swaps += 1;
}

#[derive(Debug, Clone, Copy)]
pub struct Integrator<T> {
    pub dt_max: T,
    /// Allowed relative energy drift per unit of simulated time.
    pub energy_budget: T,
}

impl<T: Real> Default for Integrator<T> {
    fn default() -> Self {
        Self {
            dt_max: lit(DT_MAX),
            energy_budget: lit(ENERGY_BUDGET),
        }
    }
}

/// Runs the process for `duration` units of time: Poisson clocks of total rate `n` ring
/// a uniformly chosen bond, and the flow is integrated in between.
pub fn evolve<T: Real, R: Rng + ?Sized>(
    state: &mut LatticeState<T>,
    duration: T,
    integrator: &Integrator<T>,
    rng: &mut R,
) -> Result<()> {
    if !(duration >= T::zero()) {
        return Err(Error::InvalidParams(format!("duration must be >= 0, got {duration}")));
    }
    let n = state.n();
    let rate = from_usize::<T>(n);
    let start = state.t;
    let end = start + duration;
    let mut ws = Rk4Workspace::new(n);
    let mut events = 0usize;
    loop {
        let wait: f64 = rng.sample(Exp1);
        let wait = lit::<T>(wait) / rate;
        let remaining = end - state.t;
        let last = wait >= remaining;
        let seg = if last { remaining } else { wait };
        integrate_segment(state, seg, integrator.dt_max, &mut ws)?;
        events += 1;
        if last || events % ENERGY_CHECK_EVERY == 0 {
            check_energy(state, state.t - start, integrator.energy_budget)?;
        }
        if last {
            state.t = end;
            return Ok(());
        }
        let x = rng.random_range(0..n);
        swap(state, x);
    }
}

fn integrate_segment<T: Real>(state: &mut LatticeState<T>, seg: T, dt_max: T, ws: &mut Rk4Workspace<T>) -> Result<()> {
    if seg <= T::zero() {
        return Ok(());
    }
    let steps = (seg / dt_max).ceil().to_usize().unwrap_or(1).max(1);
    let dt = seg / from_usize(steps);
    for _ in 0..steps {
        ws.step(&mut state.omega, state.gamma, dt)?;
    }
    state.t += seg;
    Ok(())
}

fn check_energy<T: Real>(state: &LatticeState<T>, elapsed: T, budget: T) -> Result<()> {
    let drift = state.energy_drift();
    let allowed = budget * elapsed.max(T::one());
    if drift > allowed {
        return Err(Error::EnergyDrift {
            drift: to_f64(drift),
            budget: to_f64(allowed),
        });
    }
    Ok(())
}

/// `coeff * prod omega_x^k` over the listed `(x, k)` factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial<T> {
    pub coeff: T,
    pub factors: Vec<(i64, u32)>,
}

impl<T: Real> Monomial<T> {
    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|&(_, k)| k).sum()
    }

    fn eval_with(&self, omega: &[T], site: impl Fn(i64) -> usize) -> T {
        self.factors
            .iter()
            .fold(self.coeff, |acc, &(x, k)| acc * omega[site(x)].powi(k as i32))
    }
}

/// Finite sum of monomials in the lattice variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LocalObservable<T> {
    pub terms: Vec<Monomial<T>>,
}

impl<T: Real> LocalObservable<T> {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn constant(c: T) -> Self {
        Self::monomial(c, &[])
    }

    pub fn site(x: i64) -> Self {
        Self::monomial(T::one(), &[(x, 1)])
    }

    pub fn monomial(coeff: T, factors: &[(i64, u32)]) -> Self {
        let mut o = Self::zero();
        o.push(coeff, factors);
        o
    }

    /// Adds a term. Panics above degree 8, which no identity here needs.
    pub fn push(&mut self, coeff: T, factors: &[(i64, u32)]) {
        let m = Monomial {
            coeff,
            factors: factors.iter().copied().filter(|&(_, k)| k > 0).collect(),
        };
        assert!(m.degree() <= MAX_OBSERVABLE_DEGREE, "degree {} exceeds 8", m.degree());
        if coeff != T::zero() {
            self.terms.push(m);
        }
    }

    pub fn add(mut self, other: &Self) -> Self {
        self.terms.extend(other.terms.iter().cloned());
        self
    }

    pub fn scaled(mut self, c: T) -> Self {
        for t in &mut self.terms {
            t.coeff *= c;
        }
        self
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn eval(&self, omega: &[T]) -> T {
        let n = omega.len() as i64;
        self.terms
            .iter()
            .map(|m| m.eval_with(omega, |x| x.rem_euclid(n) as usize))
            .sum()
    }
}

/// `(L phi)(omega)` with `L = A + S`: the flow part by differentiating each monomial, the
/// exchange part by evaluating `phi` on every swapped configuration that can change it.
pub fn apply_generator<T: Real>(phi: &LocalObservable<T>, omega: &[T], gamma: T) -> T {
    let n = omega.len();
    let ni = n as i64;
    let wrap = |x: i64| x.rem_euclid(ni) as usize;
    let flow = |x: usize| {
        let l = omega[(x + n - 1) % n];
        let r = omega[(x + 1) % n];
        (r - l) + gamma * (r * r * r - l * l * l)
    };
    let mut total = T::zero();
    let mut bonds: Vec<usize> = Vec::new();
    for m in &phi.terms {
        for (i, &(x, k)) in m.factors.iter().enumerate() {
            let sx = wrap(x);
            let mut d = m.coeff * lit::<T>(k as f64) * omega[sx].powi(k as i32 - 1);
            for (j, &(y, ky)) in m.factors.iter().enumerate() {
                if j != i {
                    d *= omega[wrap(y)].powi(ky as i32);
                }
            }
            total += d * flow(sx);
        }
        bonds.clear();
        for &(x, _) in &m.factors {
            bonds.push(wrap(x - 1));
            bonds.push(wrap(x));
        }
        bonds.sort_unstable();
        bonds.dedup();
        let base = m.eval_with(omega, wrap);
        for &b in &bonds {
            let b1 = (b + 1) % n;
            let swapped = m.eval_with(omega, |x| {
                let s = wrap(x);
                if s == b {
                    b1
                } else if s == b1 {
                    b
                } else {
                    s
                }
            });
            total += swapped - base;
        }
    }
    total
}

/// Both sides of a generator identity evaluated at one configuration.
#[derive(Debug, Clone, Copy)]
pub struct IdentityCheck<T> {
    pub lhs: T,
    pub rhs: T,
}

impl<T: Real> IdentityCheck<T> {
    pub fn rel_error(&self) -> T {
        (self.lhs - self.rhs).abs() / self.lhs.abs().max(self.rhs.abs()).max(T::one())
    }
}

fn at<T: Copy>(v: &[T], x: i64) -> T {
    v[x.rem_euclid(v.len() as i64) as usize]
}

/// Square array on the periodic lattice, row-major, indexed by `(x, y)` modulo `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFunction<T> {
    pub n: usize,
    pub values: Vec<T>,
}

impl<T: Real> PairFunction<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            values: vec![T::zero(); n * n],
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut h = Self::zeros(n);
        for x in 0..n {
            for y in 0..n {
                h.values[x * n + y] = f(x, y);
            }
        }
        h
    }

    pub fn get(&self, x: i64, y: i64) -> T {
        let n = self.n as i64;
        self.values[(x.rem_euclid(n) * n + y.rem_euclid(n)) as usize]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|x| (0..self.n).all(|y| self.values[x * self.n + y] == self.values[y * self.n + x]))
    }

    fn map(&self, f: impl Fn(i64, i64) -> T) -> Self {
        Self::from_fn(self.n, |x, y| f(x as i64, y as i64))
    }
}

pub fn lattice_laplacian<T: Real>(f: &[T]) -> Vec<T> {
    let n = f.len() as i64;
    (0..n).map(|x| at(f, x + 1) + at(f, x - 1) - lit::<T>(2.0) * at(f, x)).collect()
}

pub fn lattice_gradient<T: Real>(f: &[T]) -> Vec<T> {
    let n = f.len() as i64;
    (0..n).map(|x| at(f, x + 1) - at(f, x)).collect()
}

/// Half the gradient of `f` placed on the two first off-diagonals.
pub fn gradient_on_diagonal<T: Real>(f: &[T]) -> PairFunction<T> {
    let n = f.len();
    let half = lit::<T>(0.5);
    PairFunction::zeros(n).map(|x, y| {
        if neighbour(n, x, y) == Some(1) {
            half * (at(f, x + 1) - at(f, x))
        } else if neighbour(n, x, y) == Some(-1) {
            half * (at(f, x) - at(f, x - 1))
        } else {
            T::zero()
        }
    })
}

fn neighbour(n: usize, x: i64, y: i64) -> Option<i64> {
    let d = (y - x).rem_euclid(n as i64);
    if d == 1 {
        Some(1)
    } else if d == n as i64 - 1 {
        Some(-1)
    } else {
        None
    }
}

pub fn pair_laplacian<T: Real>(h: &PairFunction<T>) -> PairFunction<T> {
    h.map(|x, y| h.get(x + 1, y) + h.get(x - 1, y) + h.get(x, y + 1) + h.get(x, y - 1) - lit::<T>(4.0) * h.get(x, y))
}

pub fn pair_transport<T: Real>(h: &PairFunction<T>) -> PairFunction<T> {
    h.map(|x, y| h.get(x - 1, y) + h.get(x, y - 1) - h.get(x + 1, y) - h.get(x, y + 1))
}

pub fn diagonal_derivative<T: Real>(h: &PairFunction<T>) -> Vec<T> {
    (0..h.n as i64).map(|x| h.get(x, x + 1) - h.get(x - 1, x)).collect()
}

pub fn off_diagonal_derivative<T: Real>(h: &PairFunction<T>) -> PairFunction<T> {
    let n = h.n;
    h.map(|x, y| match neighbour(n, x, y) {
        Some(1) => h.get(x, x + 1) - h.get(x, x),
        Some(-1) => h.get(x - 1, x) - h.get(x - 1, x - 1),
        _ => T::zero(),
    })
}

pub fn diagonal_gradient<T: Real>(h: &PairFunction<T>) -> PairFunction<T> {
    let n = h.n;
    let half = lit::<T>(0.5);
    h.map(|x, y| match neighbour(n, x, y) {
        Some(1) => half * (h.get(x + 1, x + 1) - h.get(x, x)),
        Some(-1) => half * (h.get(x, x) - h.get(x - 1, x - 1)),
        _ => T::zero(),
    })
}

pub fn pair_b<T: Real>(h: &PairFunction<T>) -> PairFunction<T> {
    let n = h.n;
    h.map(|x, y| {
        let jump = match neighbour(n, x, y) {
            Some(1) => h.get(y, y),
            Some(-1) => -h.get(y, y),
            _ => T::zero(),
        };
        h.get(x - 1, y) - h.get(x + 1, y) + jump
    })
}

fn hermite3<T: Real>(u: T, kappa: T) -> T {
    u * u * u - kappa * u
}

/// Un-normalized sums `sum f(x) w_x` and friends used by the identities.
pub fn sum_volume<T: Real>(f: &[T], omega: &[T]) -> T {
    f.iter().zip(omega).map(|(&a, &w)| a * w).sum()
}

pub fn sum_volume3<T: Real>(f: &[T], omega: &[T], kappa: T) -> T {
    f.iter().zip(omega).map(|(&a, &w)| a * hermite3(w, kappa)).sum()
}

pub fn sum_energy<T: Real>(f: &[T], omega: &[T], gamma: T) -> T {
    f.iter().zip(omega).map(|(&a, &w)| a * site_energy(w, gamma)).sum()
}

pub fn sum_quartic<T: Real>(f: &[T], omega: &[T]) -> T {
    f.iter().zip(omega).map(|(&a, &w)| a * w.powi(4)).sum()
}

/// `sum_{x != y} h(x, y) p(w_x) q(w_y)` for `p, q` in `{w, w^3 - kappa w}` selected by `order`.
pub fn sum_pair<T: Real>(order: u32, h: &PairFunction<T>, omega: &[T], kappa: T) -> T {
    let n = h.n;
    let mut s = T::zero();
    for x in 0..n {
        let px = match order {
            2 => omega[x],
            4 | 6 => hermite3(omega[x], kappa),
            _ => panic!("pair order must be 2, 4 or 6"),
        };
        for y in 0..n {
            if x == y {
                continue;
            }
            let qy = match order {
                6 => hermite3(omega[y], kappa),
                _ => omega[y],
            };
            s += h.values[x * n + y] * px * qy;
        }
    }
    s
}

pub fn volume_observable<T: Real>(f: &[T]) -> LocalObservable<T> {
    let mut o = LocalObservable::zero();
    for (x, &c) in f.iter().enumerate() {
        o.push(c, &[(x as i64, 1)]);
    }
    o
}

pub fn energy_observable<T: Real>(f: &[T], gamma: T) -> LocalObservable<T> {
    let mut o = LocalObservable::zero();
    for (x, &c) in f.iter().enumerate() {
        o.push(c * lit(0.5), &[(x as i64, 2)]);
        o.push(c * gamma * lit(0.25), &[(x as i64, 4)]);
    }
    o
}

pub fn quadratic_observable<T: Real>(h: &PairFunction<T>) -> LocalObservable<T> {
    let mut o = LocalObservable::zero();
    for x in 0..h.n {
        for y in 0..h.n {
            if x != y {
                o.push(h.values[x * h.n + y], &[(x as i64, 1), (y as i64, 1)]);
            }
        }
    }
    o
}

/// `L V(f) = V((2 + g k) Lap f - 2 (1 + g k) Grad f) + g V3(Lap f - 2 Grad f)` with the
/// centred cubic `w^3 - k w`.
pub fn vol_decomposition<T: Real>(f: &[T], omega: &[T], gamma: T, kappa: T) -> IdentityCheck<T> {
    let lhs = apply_generator(&volume_observable(f), omega, gamma);
    let lap = lattice_laplacian(f);
    let grad = lattice_gradient(f);
    let gk = gamma * kappa;
    let two = lit::<T>(2.0);
    let lin: Vec<T> = lap
        .iter()
        .zip(&grad)
        .map(|(&l, &g)| (two + gk) * l - two * (T::one() + gk) * g)
        .collect();
    let cub: Vec<T> = lap.iter().zip(&grad).map(|(&l, &g)| l - two * g).collect();
    let rhs = sum_volume(&lin, omega) + gamma * sum_volume3(&cub, omega, kappa);
    IdentityCheck { lhs, rhs }
}

/// The same identity with the raw cube: `L V(f) = V(2 Lap f - 2 Grad f) + g sum (Lap f - 2 Grad f) w^3`.
pub fn vol_decomposition_raw<T: Real>(f: &[T], omega: &[T], gamma: T) -> IdentityCheck<T> {
    let lhs = apply_generator(&volume_observable(f), omega, gamma);
    let lap = lattice_laplacian(f);
    let grad = lattice_gradient(f);
    let two = lit::<T>(2.0);
    let lin: Vec<T> = lap.iter().zip(&grad).map(|(&l, &g)| two * l - two * g).collect();
    let cub: Vec<T> = lap.iter().zip(&grad).map(|(&l, &g)| l - two * g).collect();
    let rhs = sum_volume(&lin, omega) + gamma * sum_volume3(&cub, omega, T::zero());
    IdentityCheck { lhs, rhs }
}

/// Energy identity: `L E(f) = E(Lap f) - (1+gk)^2 Q2(G) - 2g(1+gk) Q4(G) - g^2 Q6(G)` with
/// `G` the gradient of `f` spread on the first off-diagonals.
pub fn energy_decomposition<T: Real>(f: &[T], omega: &[T], gamma: T, kappa: T) -> IdentityCheck<T> {
    let lhs = apply_generator(&energy_observable(f, gamma), omega, gamma);
    let g = gradient_on_diagonal(f);
    let gk = T::one() + gamma * kappa;
    let rhs = sum_energy(&lattice_laplacian(f), omega, gamma)
        - gk * gk * sum_pair(2, &g, omega, kappa)
        - lit::<T>(2.0) * gamma * gk * sum_pair(4, &g, omega, kappa)
        - gamma * gamma * sum_pair(6, &g, omega, kappa);
    IdentityCheck { lhs, rhs }
}

/// Quadratic identity for a symmetric `h`:
/// `L Q2(h) = Q2(Lap h + (1+gk) A h) - 4 E(D h) - g E4(D h) + 2 Q2(D~ h) + 2g Q4(B h) + 2gk Q2(grad h)`.
pub fn quadratic_decomposition<T: Real>(
    h: &PairFunction<T>,
    omega: &[T],
    gamma: T,
    kappa: T,
) -> Result<IdentityCheck<T>> {
    if h.n != omega.len() {
        return Err(Error::MeshMismatch(h.n, omega.len()));
    }
    if !h.is_symmetric() {
        return Err(Error::Domain("quadratic identity needs a symmetric pair function".into()));
    }
    let lhs = apply_generator(&quadratic_observable(h), omega, gamma);
    let gk = T::one() + gamma * kappa;
    let lap = pair_laplacian(h);
    let tr = pair_transport(h);
    let l = PairFunction {
        n: h.n,
        values: lap.values.iter().zip(&tr.values).map(|(&a, &b)| a + gk * b).collect(),
    };
    let d = diagonal_derivative(h);
    let two = lit::<T>(2.0);
    let rhs = sum_pair(2, &l, omega, kappa) - lit::<T>(4.0) * sum_energy(&d, omega, gamma)
        - gamma * sum_quartic(&d, omega)
        + two * sum_pair(2, &off_diagonal_derivative(h), omega, kappa)
        + two * gamma * sum_pair(4, &pair_b(h), omega, kappa)
        + two * gamma * kappa * sum_pair(2, &diagonal_gradient(h), omega, kappa);
    Ok(IdentityCheck { lhs, rhs })
}

/// `w_x^3` minus the exact part of its decomposition through `-L(w_x^2 w_{x+1})`. What remains
/// is `gamma` times a local function of the configuration.
pub fn omega3_residual<T: Real>(omega: &[T], x: i64, gamma: T, chi: T) -> T {
    let w = |k: i64| at(omega, x + k);
    let phi = LocalObservable::monomial(T::one(), &[(x, 2), (x + 1, 1)]);
    let minus_l = -apply_generator(&phi, omega, gamma);
    let (wm, w0, w1, w2) = (w(-1), w(0), w(1), w(2));
    let three = lit::<T>(3.0);
    let two = lit::<T>(2.0);
    let fluct = three * w0 * (w1 * w1 - chi)
        + (w0 * w0 - chi) * (two * w2 - three * w1)
        + (wm * wm - chi) * w1;
    let triple = -two * wm * w0 * w1;
    let mean = chi * (three * w0 + two * w2 - two * w1);
    w0 * w0 * w0 - minus_l - fluct - triple - mean
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect()
    }

    #[test]
    fn drift_of_constant_vanishes() {
        let d = drift(&[0.7f64; 8], 0.3).unwrap();
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn drift_of_spike() {
        let mut w = vec![0.0f64; 8];
        w[4] = 1.0;
        let d = drift(&w, 0.0).unwrap();
        assert_eq!(d[3], 1.0);
        assert_eq!(d[5], -1.0);
        assert_eq!(d.iter().filter(|&&v| v != 0.0).count(), 2);
    }

    #[test]
    fn drift_conserves_volume_and_energy() {
        let w = random_state(33, 1);
        let g = 0.4;
        let d = drift(&w, g).unwrap();
        let dv: f64 = d.iter().sum();
        let de: f64 = w.iter().zip(&d).map(|(&u, &v)| (u + g * u * u * u) * v).sum();
        assert!(dv.abs() < 1e-13);
        assert!(de.abs() < 1e-12);
    }

    #[test]
    fn drift_guards_blow_up() {
        let mut w = vec![0.0f64; 4];
        w[2] = 2e6;
        assert!(matches!(drift(&w, 0.0), Err(Error::BlowUp { site: 2, .. })));
    }

    #[test]
    fn rk4_energy_error_is_tiny_and_fifth_order() {
        let w = random_state(4, 2);
        let mut s = LatticeState::new(w.clone(), 0.0);
        step_ode(&mut s, 1e-3).unwrap();
        assert!(s.energy_drift() < 1e-12);

        let w = random_state(16, 3);
        let err = |dt: f64| {
            let mut s = LatticeState::new(w.clone(), 0.5);
            step_ode(&mut s, dt).unwrap();
            (s.energy() - s.conserved.energy).abs()
        };
        let ratio = err(0.04) / err(0.02);
        assert!(ratio > 20.0 && ratio < 80.0, "ratio {ratio}");
    }

    #[test]
    fn rk4_rejects_large_steps_and_keeps_constants() {
        let mut s = LatticeState::new(vec![1.5f64; 6], 0.2);
        assert!(step_ode(&mut s, 0.06).is_err());
        step_ode(&mut s, 0.05).unwrap();
        assert!(s.omega.iter().all(|&v| v == 1.5));
    }

    #[test]
    fn swap_is_an_involution_preserving_energy() {
        let w = random_state(10, 4);
        let mut s = LatticeState::new(w.clone(), 0.3);
        let e = s.energy();
        swap(&mut s, 9);
        assert_eq!(s.omega[0], w[9]);
        assert_eq!(s.energy().to_bits(), e.to_bits());
        swap(&mut s, 9);
        assert_eq!(s.omega, w);
    }

    #[test]
    fn evolve_zero_duration_is_identity() {
        let w = random_state(8, 5);
        let mut s = LatticeState::new(w.clone(), 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        evolve(&mut s, 0.0, &Integrator::default(), &mut rng).unwrap();
        assert_eq!(s.omega, w);
        assert_eq!(s.swaps, 0);
    }

    #[test]
    fn evolve_conserves_and_counts_swaps() {
        let params = ModelParams::standard(0.1f64).with_n(32);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut s = LatticeState::sample(&params, &mut rng).unwrap();
        let v0 = s.volume();
        evolve(&mut s, 5.0, &Integrator::default(), &mut rng).unwrap();
        assert!((s.volume() - v0).abs() < 1e-10 * 32.0);
        assert!(s.energy_drift() < 5e-7);
        let mean = 32.0 * 5.0;
        assert!((s.swaps as f64 - mean).abs() < 4.0 * mean.sqrt());
        assert_eq!(s.t, 5.0);
    }

    #[test]
    fn generator_on_single_site() {
        let g = 0.3;
        let phi = LocalObservable::site(0);
        for seed in 0..100 {
            let w = random_state(7, seed);
            let (wm, w0, w1) = (w[6], w[0], w[1]);
            let want = (w1 - wm) + g * (w1.powi(3) - wm.powi(3)) + (w1 - w0) + (wm - w0);
            let got = apply_generator(&phi, &w, g);
            assert!((got - want).abs() < 1e-13);
        }
    }

    #[test]
    fn generator_kills_constants() {
        let w = random_state(5, 7);
        assert_eq!(apply_generator(&LocalObservable::constant(2.5), &w, 0.4), 0.0);
    }

    #[test]
    fn omega3_residual_is_linear_in_gamma() {
        let w = random_state(12, 8);
        let r2 = omega3_residual(&w, 3, 1e-2, 0.9) / 1e-2;
        let r3 = omega3_residual(&w, 3, 1e-3, 0.9) / 1e-3;
        assert!((r2 - r3).abs() < 1e-10 * r2.abs().max(1.0), "{r2} vs {r3}");
        assert!(omega3_residual(&w, 3, 0.0, 0.9).abs() < 1e-13);
    }

    #[test]
    fn volume_identity_both_forms() {
        let n = 32;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for seed in 0..10 {
            let w = random_state(n, 100 + seed);
            let f: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            let c = vol_decomposition(&f, &w, 0.2, 2.7);
            assert!(c.rel_error() < 1e-11, "{c:?}");
            let c = vol_decomposition_raw(&f, &w, 0.2);
            assert!(c.rel_error() < 1e-11, "{c:?}");
        }
    }

    #[test]
    fn energy_and_quadratic_identities() {
        let n = 32;
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for seed in 0..5 {
            let w = random_state(n, 200 + seed);
            let f: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            let c = energy_decomposition(&f, &w, 0.15, 2.6);
            assert!(c.rel_error() < 1e-11, "{c:?}");
            let raw: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>() - 0.5).collect();
            let h = PairFunction::from_fn(n, |x, y| raw[x * n + y] + raw[y * n + x]);
            let c = quadratic_decomposition(&h, &w, 0.15, 2.6).unwrap();
            assert!(c.rel_error() < 1e-11, "{c:?}");
        }
    }

    #[test]
    fn quadratic_identity_rejects_asymmetric() {
        let h = PairFunction::from_fn(8, |x, y| x as f64 - y as f64);
        assert!(quadratic_decomposition(&h, &[0.0; 8], 0.1, 3.0).is_err());
    }
}
