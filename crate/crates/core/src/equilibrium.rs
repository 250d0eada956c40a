//! Single-site Gibbs measure: sampling, moments, cumulants and equilibrium summaries.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::quad::{integrate_breaks, Tolerance};
use crate::scalar::{from_usize, lit, Real};

pub const SAMPLER_MAX_ITER: usize = 1_000_000;
pub const MAX_MOMENT: u32 = 16;

/// Physical and scaling parameters of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T> {
    pub beta: T,
    pub tau: T,
    pub gamma: T,
    /// Optional schedule `(c, b)` with `gamma = c * n^(-b)`.
    pub schedule: Option<(T, T)>,
    pub n: usize,
    pub a: T,
}

impl<T: Real> ModelParams<T> {
    pub fn new(beta: T, tau: T, gamma: T) -> Self {
        Self {
            beta,
            tau,
            gamma,
            schedule: None,
            n: 64,
            a: T::one(),
        }
    }

    pub fn standard(gamma: T) -> Self {
        Self::new(T::one(), T::zero(), gamma)
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self.refresh_gamma();
        self
    }

    pub fn with_a(mut self, a: T) -> Self {
        self.a = a;
        self
    }

    pub fn with_schedule(mut self, c: T, b: T) -> Self {
        self.schedule = Some((c, b));
        self.refresh_gamma();
        self
    }

    /// Recomputes `gamma` from the schedule, if any.
    pub fn refresh_gamma(&mut self) {
        if let Some((c, b)) = self.schedule {
            self.gamma = c * from_usize::<T>(self.n).powf(-b);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if !(self.beta > T::zero()) || !self.beta.is_finite() {
            return bad("beta must be positive and finite");
        }
        if !(self.gamma >= T::zero()) || !self.gamma.is_finite() {
            return bad("gamma must be non-negative and finite");
        }
        if !self.tau.is_finite() {
            return bad("tau must be finite");
        }
        if self.n < 4 {
            return bad("n must be at least 4");
        }
        if !(self.a > T::zero()) {
            return bad("a must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumSummary<T> {
    pub e_mean: T,
    pub v_mean: T,
    pub chi: T,
    pub kappa: T,
    pub z_log: T,
}

/// `V(u) = u^4 / 4`.
pub fn quartic<T: Real>(u: T) -> T {
    let u2 = u * u;
    u2 * u2 * lit(0.25)
}

/// `e_gamma(u) = u^2/2 + gamma u^4/4`.
pub fn site_energy<T: Real>(u: T, gamma: T) -> T {
    u * u * lit(0.5) + gamma * quartic(u)
}

/// Density proportional to `exp(-beta (u^2/2 + gamma V(u)) - beta tau u)`.
pub struct SiteMeasure<T, V> {
    pub beta: T,
    pub tau: T,
    pub gamma: T,
    potential: V,
    breaks: Vec<T>,
    symmetric: bool,
    tol: Tolerance<T>,
    z: T,
}

pub type QuarticMeasure<T> = SiteMeasure<T, fn(T) -> T>;

impl<T: Real> QuarticMeasure<T> {
    pub fn quartic(params: &ModelParams<T>) -> Result<Self> {
        params.validate()?;
        SiteMeasure::new(params.beta, params.tau, params.gamma, quartic as fn(T) -> T)
    }
}

impl<T: Real, V: Fn(T) -> T> SiteMeasure<T, V> {
    pub fn new(beta: T, tau: T, gamma: T, potential: V) -> Result<Self> {
        if !(beta > T::zero()) || !(gamma >= T::zero()) || !tau.is_finite() {
            return Err(Error::InvalidParams(format!(
                "beta={beta}, tau={tau}, gamma={gamma}"
            )));
        }
        // exp(-beta U^2 / 2) = e^-80, far below 1e-16 even after u^16 weighting.
        let half = (lit::<T>(160.0) / beta).sqrt();
        // At zero tension the density is even and integrals are folded onto [0, U].
        let symmetric = tau == T::zero();
        let fr: &[f64] = if symmetric {
            &[0.0, 0.1, 0.25, 0.5, 1.0]
        } else {
            &[-1.0, -0.5, -0.25, -0.1, 0.0, 0.1, 0.25, 0.5, 1.0]
        };
        let breaks = fr.iter().map(|&s| half * lit(s) - tau).collect();
        let mut measure = Self {
            beta,
            tau,
            gamma,
            potential,
            breaks,
            symmetric,
            tol: Tolerance::tight(),
            z: T::one(),
        };
        measure.z = measure.raw_integral(|_| T::one())?;
        Ok(measure)
    }

    /// Unnormalized weight, shifted by the Gaussian factor `exp(beta tau^2 / 2)`.
    #[inline]
    pub fn weight(&self, u: T) -> T {
        let d = u + self.tau;
        (-self.beta * (d * d * lit(0.5) + self.gamma * (self.potential)(u))).exp()
    }

    pub fn potential(&self, u: T) -> T {
        (self.potential)(u)
    }

    /// Local energy `u^2/2 + gamma V(u)`.
    pub fn energy(&self, u: T) -> T {
        u * u * lit(0.5) + self.gamma * (self.potential)(u)
    }

    fn raw_integral<F: Fn(T) -> T>(&self, f: F) -> Result<T> {
        let est = if self.symmetric {
            integrate_breaks(|u| (f(u) + f(-u)) * self.weight(u), &self.breaks, self.tol)?
        } else {
            integrate_breaks(|u| f(u) * self.weight(u), &self.breaks, self.tol)?
        };
        Ok(est.value)
    }

    pub fn expect<F: Fn(T) -> T>(&self, f: F) -> Result<T> {
        Ok(self.raw_integral(f)? / self.z)
    }

    /// `log Z = log ∫ exp(-beta e(u) - beta tau u) du`.
    pub fn log_partition(&self) -> T {
        self.z.ln() + self.beta * self.tau * self.tau * lit(0.5)
    }

    pub fn moment(&self, k: u32) -> Result<T> {
        if k > MAX_MOMENT {
            return Err(Error::InvalidParams(format!("moment order {k} > {MAX_MOMENT}")));
        }
        if k == 0 {
            return Ok(T::one());
        }
        self.expect(|u| u.powi(k as i32))
    }

    /// Joint cumulant of one, two or three observables.
    pub fn cumulant(&self, obs: &[&dyn Fn(T) -> T]) -> Result<T> {
        match obs {
            [f] => self.expect(f),
            [f, g] => {
                let (mf, mg) = (self.expect(f)?, self.expect(g)?);
                self.expect(|u| (f(u) - mf) * (g(u) - mg))
            }
            [f, g, h] => {
                let (mf, mg, mh) = (self.expect(f)?, self.expect(g)?, self.expect(h)?);
                self.expect(|u| (f(u) - mf) * (g(u) - mg) * (h(u) - mh))
            }
            _ => Err(Error::InvalidParams(format!(
                "joint cumulant takes 1 to 3 observables, got {}",
                obs.len()
            ))),
        }
    }

    pub fn cumulant2<F: Fn(T) -> T, G: Fn(T) -> T>(&self, f: F, g: G) -> Result<T> {
        self.cumulant(&[&f, &g])
    }

    pub fn cumulant3<F: Fn(T) -> T, G: Fn(T) -> T, H: Fn(T) -> T>(&self, f: F, g: G, h: H) -> Result<T> {
        self.cumulant(&[&f, &g, &h])
    }
}

/// Draws from the single-site marginal by rejection from the Gaussian proposal.
pub fn sample_site<T: Real, R: Rng + ?Sized>(params: &ModelParams<T>, rng: &mut R) -> Result<T> {
    let beta = params.beta;
    let sd = beta.sqrt().recip();
    for _ in 0..SAMPLER_MAX_ITER {
        let z: f64 = rng.sample(StandardNormal);
        let u = -params.tau + sd * lit(z);
        if params.gamma == T::zero() {
            return Ok(u);
        }
        let accept = (-beta * params.gamma * quartic(u)).exp();
        let v: f64 = rng.random();
        if lit::<T>(v) < accept {
            return Ok(u);
        }
    }
    Err(Error::SamplerFailure(SAMPLER_MAX_ITER))
}

pub fn moment<T: Real>(k: u32, params: &ModelParams<T>) -> Result<T> {
    QuarticMeasure::quartic(params)?.moment(k)
}

/// `<u^4> / <u^2>` under the quartic measure at inverse temperature `beta`, zero tension.
pub fn kappa<T: Real>(gamma: T, beta: T) -> Result<T> {
    let m = QuarticMeasure::quartic(&ModelParams::new(beta, T::zero(), gamma))?;
    Ok(m.moment(4)? / m.moment(2)?)
}

pub fn equilibrium_summary<T: Real>(params: &ModelParams<T>) -> Result<EquilibriumSummary<T>> {
    let m = QuarticMeasure::quartic(params)?;
    let gamma = params.gamma;
    let e_mean = m.expect(|u| site_energy(u, gamma))?;
    let v_mean = if params.tau == T::zero() {
        T::zero()
    } else {
        m.moment(1)?
    };
    Ok(EquilibriumSummary {
        e_mean,
        v_mean,
        chi: m.moment(2)?,
        kappa: kappa(gamma, params.beta)?,
        z_log: m.log_partition(),
    })
}

pub fn joint_cumulant<T: Real>(obs: &[&dyn Fn(T) -> T], params: &ModelParams<T>) -> Result<T> {
    QuarticMeasure::quartic(params)?.cumulant(obs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Gamma,
    Tau,
    Beta,
}

pub const RULES: [Rule; 3] = [Rule::Gamma, Rule::Tau, Rule::Beta];

/// Residuals `|finite difference - cumulant rule| / max(1, |rule|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivationReport<T> {
    /// `d<A>` for the gamma, tau and beta rules.
    pub first_order: [T; 3],
    /// `d<A;B>` for the gamma, tau and beta rules.
    pub second_order: [T; 3],
    pub max_residual: T,
}

fn shifted<T: Real>(p: &ModelParams<T>, rule: Rule, h: T) -> ModelParams<T> {
    let mut q = *p;
    match rule {
        Rule::Gamma => q.gamma += h,
        Rule::Tau => q.tau += h,
        Rule::Beta => q.beta += h,
    }
    q.schedule = None;
    q
}

/// Finite difference of `g` along `rule`; one-sided (second order) when gamma would go negative.
fn finite_difference<T: Real>(
    params: &ModelParams<T>,
    rule: Rule,
    delta: T,
    g: &dyn Fn(&ModelParams<T>) -> Result<T>,
) -> Result<T> {
    if rule == Rule::Gamma && params.gamma < delta {
        let f0 = g(params)?;
        let f1 = g(&shifted(params, rule, delta))?;
        let f2 = g(&shifted(params, rule, delta + delta))?;
        return Ok((lit::<T>(4.0) * f1 - lit::<T>(3.0) * f0 - f2) / (delta + delta));
    }
    let up = g(&shifted(params, rule, delta))?;
    let down = g(&shifted(params, rule, -delta))?;
    Ok((up - down) / (delta + delta))
}

fn residual<T: Real>(fd: T, rhs: T) -> T {
    (fd - rhs).abs() / T::one().max(rhs.abs())
}

/// Checks the cumulant derivation rules against finite differences at step `delta`.
pub fn verify_derivation_rules<T: Real>(
    params: &ModelParams<T>,
    a: &dyn Fn(T) -> T,
    b: Option<&dyn Fn(T) -> T>,
    delta: T,
) -> Result<DerivationReport<T>> {
    if !(delta >= lit(1e-6) && delta <= lit(1e-2)) {
        return Err(Error::InvalidParams(format!("delta {delta} outside [1e-6, 1e-2]")));
    }
    params.validate()?;
    let b = b.unwrap_or(a);
    let m = QuarticMeasure::quartic(params)?;
    let beta = params.beta;
    let tau = params.tau;
    let gamma = params.gamma;
    let v = |u: T| quartic(u);
    let omega = |u: T| u;
    let e_tau = |u: T| site_energy(u, gamma) + tau * u;

    let mut first = [T::zero(); 3];
    let mut second = [T::zero(); 3];
    for (i, rule) in RULES.into_iter().enumerate() {
        let (rhs1, rhs2) = match rule {
            Rule::Gamma => (-beta * m.cumulant2(a, v)?, -beta * m.cumulant3(a, b, v)?),
            Rule::Tau => (-beta * m.cumulant2(a, omega)?, -beta * m.cumulant3(a, b, omega)?),
            Rule::Beta => (-m.cumulant2(a, e_tau)?, -m.cumulant3(a, b, e_tau)?),
        };
        let fd1 = finite_difference(params, rule, delta, &|p| {
            QuarticMeasure::quartic(p)?.expect(a)
        })?;
        let fd2 = finite_difference(params, rule, delta, &|p| {
            QuarticMeasure::quartic(p)?.cumulant2(a, b)
        })?;
        first[i] = residual(fd1, rhs1);
        second[i] = residual(fd2, rhs2);
    }
    let max_residual = first
        .iter()
        .chain(second.iter())
        .fold(T::zero(), |acc, &r| acc.max(r));
    Ok(DerivationReport {
        first_order: first,
        second_order: second,
        max_residual,
    })
}
