//! Random trap environments.
//!
//! A [`TrapLaw`] is the law `μ` of the per-site waiting-time measure `π_x`.
//! A [`SiteEnvironment`] realizes `π_x` lazily, the first time a waiting time
//! is requested at `x`, and then draws i.i.d. waiting times from it.
//!
//! All heavy tails are pure Pareto: `P[· > u] = (u / u_min)^{-α}` for
//! `u ≥ u_min`. For the `bouchaud` and `frozen_pareto` kinds the tail is
//! parametrized as `P[m_x > u] = c u^{-α}`, i.e. `u_min = c^{1/α}`.

use rand::Rng;
use rand::SeedableRng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use thiserror::Error;

use crate::lattice::Site;
use crate::quadrature::integrate;
use crate::rng::{mix64, StreamRng};

#[derive(Debug, Error, PartialEq)]
pub enum EnvironmentError {
    #[error("invalid trap law: {0}")]
    InvalidLaw(String),
    #[error("Laplace transform arguments must be nonnegative (λ = {lambda}, power = {power})")]
    InvalidArgument { lambda: f64, power: f64 },
    #[error("only a Monte Carlo estimate of the Laplace transform is available for this law")]
    StochasticOnly,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrapLaw {
    /// `π_x = δ_value` at every site.
    Dirac { value: f64 },
    /// `π_x = Exp(mean)` at every site.
    ExponentialFixedMean { mean: f64 },
    /// CTRW: every site carries the same Pareto(α, scale) measure.
    Pareto {
        alpha: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `π_x = Exp(m_x)` with `P[m_x > u] = c u^{-α}`.
    Bouchaud {
        alpha: f64,
        #[serde(default = "one")]
        c: f64,
    },
    /// `π_x = δ_{τ_x}` with `P[τ_x > u] = c u^{-α}`.
    FrozenPareto {
        alpha: f64,
        #[serde(default = "one")]
        c: f64,
    },
    /// Each site independently follows `first` with probability `p`, else `second`.
    Mixture {
        p: f64,
        first: Box<TrapLaw>,
        second: Box<TrapLaw>,
    },
}

/// A realized site measure `π_x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SiteMeasure {
    Dirac { value: f64 },
    Exponential { mean: f64 },
    Pareto { alpha: f64, scale: f64 },
}

#[inline]
fn pareto_sample<R: Rng + ?Sized>(alpha: f64, scale: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    let v = 1.0 - u;
    let x = if alpha == 0.5 {
        1.0 / (v * v)
    } else if alpha == 1.0 {
        1.0 / v
    } else {
        v.powf(-1.0 / alpha)
    };
    scale * x
}

impl SiteMeasure {
    /// One waiting time from `π_x`.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            SiteMeasure::Dirac { value } => value,
            SiteMeasure::Exponential { mean } => {
                let e: f64 = rng.sample(rand_distr::Exp1);
                // Exp1 can return exactly 0; waiting times must stay positive.
                mean * e.max(f64::MIN_POSITIVE)
            }
            SiteMeasure::Pareto { alpha, scale } => pareto_sample(alpha, scale, rng),
        }
    }

    /// `π̂_x(λ) = ∫ e^{-λu} π_x(du)`.
    pub fn laplace(&self, lambda: f64) -> LaplaceValue {
        match *self {
            SiteMeasure::Dirac { value } => exp_value(-lambda * value),
            SiteMeasure::Exponential { mean } => {
                let ln = -(lambda * mean).ln_1p();
                exp_value(ln)
            }
            SiteMeasure::Pareto { alpha, scale } => pareto_laplace(alpha, lambda * scale, 1.0),
        }
    }

    /// The "mean" parameter of the realized site: the waiting time for
    /// `dirac`, the mean otherwise (infinite for a Pareto with α ≤ 1).
    pub fn mean(&self) -> f64 {
        match *self {
            SiteMeasure::Dirac { value } => value,
            SiteMeasure::Exponential { mean } => mean,
            SiteMeasure::Pareto { alpha, scale } => pareto_mean(alpha, scale),
        }
    }
}

fn pareto_mean(alpha: f64, scale: f64) -> f64 {
    if alpha > 1.0 {
        alpha * scale / (alpha - 1.0)
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplaceMethod {
    ClosedForm,
    SpecialFunction,
    Quadrature,
    MonteCarlo,
}

impl LaplaceMethod {
    fn rank(self) -> u8 {
        match self {
            LaplaceMethod::ClosedForm => 0,
            LaplaceMethod::SpecialFunction => 1,
            LaplaceMethod::Quadrature => 2,
            LaplaceMethod::MonteCarlo => 3,
        }
    }
}

/// `E[π̂_0(λ)^r]` together with `1 - E[π̂_0(λ)^r]`, each computed without
/// cancellation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceValue {
    pub value: f64,
    pub complement: f64,
    pub method: LaplaceMethod,
    /// Present for Monte Carlo estimates.
    pub std_error: Option<f64>,
}

impl LaplaceValue {
    fn exact(value: f64, complement: f64, method: LaplaceMethod) -> Self {
        Self {
            value,
            complement,
            method,
            std_error: None,
        }
    }

    /// `-log E[π̂_0(λ)^r]`.
    pub fn neg_log(&self) -> f64 {
        if self.complement < 0.5 {
            -(-self.complement).ln_1p()
        } else {
            -self.value.ln()
        }
    }

    /// `log` of the value, accurate when the value is close to 1.
    fn ln(&self) -> f64 {
        -self.neg_log()
    }

    fn powf(self, r: f64) -> Self {
        if r == 1.0 {
            return self;
        }
        let mut out = exp_value(r * self.ln());
        out.method = self.method;
        out
    }
}

/// `e^x` for `x ≤ 0` with its complement.
fn exp_value(x: f64) -> LaplaceValue {
    LaplaceValue::exact(x.exp(), -x.exp_m1(), LaplaceMethod::ClosedForm)
}

/// Relative accuracy requested from the quadrature routes.
pub const QUADRATURE_REL_TOL: f64 = 1e-10;

/// `φ_α(z)^r` where `φ_α(z) = E[e^{-zP}]`, `P ~ Pareto(α, 1)`.
fn pareto_laplace(alpha: f64, z: f64, r: f64) -> LaplaceValue {
    if z == 0.0 || r == 0.0 {
        return LaplaceValue::exact(1.0, 0.0, LaplaceMethod::ClosedForm);
    }
    let base = if alpha < 1.0 {
        pareto_laplace_special(alpha, z)
    } else {
        match pareto_laplace_quadrature(alpha, z) {
            Ok(v) => v,
            Err(_) => return LaplaceValue::exact(f64::NAN, f64::NAN, LaplaceMethod::Quadrature),
        }
    };
    base.powf(r)
}

/// Series for `z ≤ 2`, continued fraction for `α E_{α+1}(z)` beyond.
/// Requires `0 < α < 1`.
pub(crate) fn pareto_laplace_special(alpha: f64, z: f64) -> LaplaceValue {
    if z <= 2.0 {
        // 1 - φ = Γ(1-α) z^α + (1 - e^{-z}) - z Σ_j (-z)^j / (j! (j + 1 - α))
        let mut sum = 0.0;
        let mut term = 1.0; // (-z)^j / j!
        for j in 0..200 {
            let add = term / (j as f64 + 1.0 - alpha);
            sum += add;
            if add.abs() < 1e-18 * sum.abs() {
                break;
            }
            term *= -z / (j as f64 + 1.0);
        }
        let complement = gamma(1.0 - alpha) * z.powf(alpha) - (-z).exp_m1() - z * sum;
        LaplaceValue::exact(1.0 - complement, complement, LaplaceMethod::SpecialFunction)
    } else {
        let value = alpha * expint_cf(alpha + 1.0, z);
        LaplaceValue::exact(value, 1.0 - value, LaplaceMethod::SpecialFunction)
    }
}

/// Generalized exponential integral `E_p(x)` by Lentz's continued fraction
/// (accurate for `x ≳ 1`).
fn expint_cf(p: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + p;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let i = i as f64;
        let an = -i * (p - 1.0 + i);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x).exp()
}

/// `1 - E[g(zP)]` for `P ~ Pareto(α, 1)`, written on a log scale:
/// `α z^α ∫_{ln z}^∞ e^{-αv} h(e^v) dv` with `h = 1 - g`.
/// Past `V` the integrand is replaced by its asymptote `e^{-αv}(1 - e^{-qv})`.
fn pareto_mixed_complement<H: Fn(f64) -> f64>(
    alpha: f64,
    z: f64,
    h: H,
    q: f64,
    span: f64,
) -> Result<f64, crate::quadrature::QuadratureError> {
    let lo = z.ln();
    let hi = lo.max(0.0) + span;
    let body = integrate(
        |v| (-alpha * v).exp() * h(v.exp()),
        lo,
        hi,
        0.0,
        QUADRATURE_REL_TOL * 1e-2,
    )?;
    let tail = (-alpha * hi).exp() / alpha
        - if q.is_finite() {
            (-(alpha + q) * hi).exp() / (alpha + q)
        } else {
            0.0
        };
    Ok(alpha * z.powf(alpha) * (body.value + tail))
}

/// `E[g(zP)]` for `P ~ Pareto(α, 1)` with `g(w) = O(w^{-q})`, on the same
/// log scale. Used when the value, not the complement, is small.
fn pareto_mixed_value<G: Fn(f64) -> f64>(
    alpha: f64,
    z: f64,
    g: G,
    q: f64,
) -> Result<f64, crate::quadrature::QuadratureError> {
    let lo = z.ln();
    let hi = lo.max(0.0) + 40.0 / (alpha + q.min(1.0));
    let body = integrate(
        |v| (-alpha * v).exp() * g(v.exp()),
        lo,
        hi,
        0.0,
        QUADRATURE_REL_TOL * 1e-2,
    )?;
    Ok(alpha * z.powf(alpha) * body.value)
}

fn pareto_laplace_quadrature(alpha: f64, z: f64) -> Result<LaplaceValue, EnvironmentError> {
    let c = pareto_mixed_complement(alpha, z, |w| -(-w).exp_m1(), f64::INFINITY, 6.0)
        .map_err(|_| EnvironmentError::StochasticOnly)?;
    if c <= 0.5 {
        return Ok(LaplaceValue::exact(1.0 - c, c, LaplaceMethod::Quadrature));
    }
    let v = pareto_mixed_value(alpha, z, |w| (-w).exp(), f64::INFINITY)
        .map_err(|_| EnvironmentError::StochasticOnly)?;
    Ok(LaplaceValue::exact(v, 1.0 - v, LaplaceMethod::Quadrature))
}

/// `E[(1 + λ m)^{-r}]` for `m ~ Pareto(α, u_min)`.
fn bouchaud_laplace(alpha: f64, z: f64, r: f64) -> Result<LaplaceValue, EnvironmentError> {
    if z == 0.0 || r == 0.0 {
        return Ok(LaplaceValue::exact(1.0, 0.0, LaplaceMethod::ClosedForm));
    }
    let span = 40.0 / r.min(1.0);
    let c = pareto_mixed_complement(alpha, z, |w| -(-r * w.ln_1p()).exp_m1(), r, span)
        .map_err(|_| EnvironmentError::StochasticOnly)?;
    if c <= 0.5 {
        return Ok(LaplaceValue::exact(1.0 - c, c, LaplaceMethod::Quadrature));
    }
    let v = pareto_mixed_value(alpha, z, |w| (-r * w.ln_1p()).exp(), r)
        .map_err(|_| EnvironmentError::StochasticOnly)?;
    Ok(LaplaceValue::exact(v, 1.0 - v, LaplaceMethod::Quadrature))
}

impl TrapLaw {
    pub fn validate(&self) -> Result<(), EnvironmentError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(EnvironmentError::InvalidLaw(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        match self {
            TrapLaw::Dirac { value } => positive("value", *value),
            TrapLaw::ExponentialFixedMean { mean } => positive("mean", *mean),
            TrapLaw::Pareto { alpha, scale } => {
                positive("alpha", *alpha)?;
                positive("scale", *scale)
            }
            TrapLaw::Bouchaud { alpha, c } | TrapLaw::FrozenPareto { alpha, c } => {
                positive("alpha", *alpha)?;
                positive("c", *c)
            }
            TrapLaw::Mixture { p, first, second } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(EnvironmentError::InvalidLaw(format!(
                        "mixture weight must lie in [0, 1], got {p}"
                    )));
                }
                first.validate()?;
                second.validate()
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            TrapLaw::Dirac { .. } => "dirac",
            TrapLaw::ExponentialFixedMean { .. } => "exponential_fixed_mean",
            TrapLaw::Pareto { .. } => "pareto",
            TrapLaw::Bouchaud { .. } => "bouchaud",
            TrapLaw::FrozenPareto { .. } => "frozen_pareto",
            TrapLaw::Mixture { .. } => "mixture",
        }
    }

    /// Tail index of the heaviest component with a Pareto tail, if any.
    pub fn tail_index(&self) -> Option<f64> {
        match self {
            TrapLaw::Dirac { .. } | TrapLaw::ExponentialFixedMean { .. } => None,
            TrapLaw::Pareto { alpha, .. }
            | TrapLaw::Bouchaud { alpha, .. }
            | TrapLaw::FrozenPareto { alpha, .. } => Some(*alpha),
            TrapLaw::Mixture { p, first, second } => {
                let a = if *p > 0.0 { first.tail_index() } else { None };
                let b = if *p < 1.0 { second.tail_index() } else { None };
                match (a, b) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                }
            }
        }
    }

    /// The site measure shared by every site, for laws where `π_x` is not random.
    pub fn homogeneous_measure(&self) -> Option<SiteMeasure> {
        match *self {
            TrapLaw::Dirac { value } => Some(SiteMeasure::Dirac { value }),
            TrapLaw::ExponentialFixedMean { mean } => Some(SiteMeasure::Exponential { mean }),
            TrapLaw::Pareto { alpha, scale } => Some(SiteMeasure::Pareto { alpha, scale }),
            _ => None,
        }
    }

    /// Draws `π_x`.
    pub fn realize<R: Rng + ?Sized>(&self, rng: &mut R) -> SiteMeasure {
        match self {
            TrapLaw::Bouchaud { alpha, c } => SiteMeasure::Exponential {
                mean: pareto_sample(*alpha, c.powf(1.0 / alpha), rng),
            },
            TrapLaw::FrozenPareto { alpha, c } => SiteMeasure::Dirac {
                value: pareto_sample(*alpha, c.powf(1.0 / alpha), rng),
            },
            TrapLaw::Mixture { p, first, second } => {
                let u: f64 = rng.random();
                if u < *p {
                    first.realize(rng)
                } else {
                    second.realize(rng)
                }
            }
            other => other.homogeneous_measure().expect("homogeneous kinds"),
        }
    }

    /// `E[m_0]`: the annealed expected waiting time, possibly infinite.
    pub fn annealed_mean(&self) -> f64 {
        match self {
            TrapLaw::Dirac { value } => *value,
            TrapLaw::ExponentialFixedMean { mean } => *mean,
            TrapLaw::Pareto { alpha, scale } => pareto_mean(*alpha, *scale),
            TrapLaw::Bouchaud { alpha, c } | TrapLaw::FrozenPareto { alpha, c } => {
                pareto_mean(*alpha, c.powf(1.0 / alpha))
            }
            TrapLaw::Mixture { p, first, second } => {
                let part = |w: f64, law: &TrapLaw| if w > 0.0 { w * law.annealed_mean() } else { 0.0 };
                part(*p, first) + part(1.0 - p, second)
            }
        }
    }

    /// The law of `factor · τ` for every waiting time `τ`.
    pub fn scaled(&self, factor: f64) -> TrapLaw {
        match self {
            TrapLaw::Dirac { value } => TrapLaw::Dirac {
                value: value * factor,
            },
            TrapLaw::ExponentialFixedMean { mean } => TrapLaw::ExponentialFixedMean {
                mean: mean * factor,
            },
            TrapLaw::Pareto { alpha, scale } => TrapLaw::Pareto {
                alpha: *alpha,
                scale: scale * factor,
            },
            TrapLaw::Bouchaud { alpha, c } => TrapLaw::Bouchaud {
                alpha: *alpha,
                c: c * factor.powf(*alpha),
            },
            TrapLaw::FrozenPareto { alpha, c } => TrapLaw::FrozenPareto {
                alpha: *alpha,
                c: c * factor.powf(*alpha),
            },
            TrapLaw::Mixture { p, first, second } => TrapLaw::Mixture {
                p: *p,
                first: Box::new(first.scaled(factor)),
                second: Box::new(second.scaled(factor)),
            },
        }
    }
}

/// `E[π̂_0(λ)^power]`.
///
/// Closed forms for `dirac` and `exponential_fixed_mean`; the Pareto-type
/// kinds go through the incomplete-gamma series (α < 1) or adaptive
/// quadrature. Returns [`EnvironmentError::StochasticOnly`] when no
/// deterministic route reaches the requested accuracy; callers can then use
/// [`laplace_transform_mc`].
pub fn laplace_transform(
    law: &TrapLaw,
    lambda: f64,
    power: f64,
) -> Result<LaplaceValue, EnvironmentError> {
    if !(lambda >= 0.0) || !(power >= 0.0) || !lambda.is_finite() || !power.is_finite() {
        return Err(EnvironmentError::InvalidArgument { lambda, power });
    }
    if lambda == 0.0 || power == 0.0 {
        return Ok(LaplaceValue::exact(1.0, 0.0, LaplaceMethod::ClosedForm));
    }
    match law {
        TrapLaw::Dirac { value } => Ok(exp_value(-power * lambda * value)),
        TrapLaw::ExponentialFixedMean { mean } => Ok(exp_value(-power * (lambda * mean).ln_1p())),
        TrapLaw::Pareto { alpha, scale } => {
            let v = pareto_laplace(*alpha, lambda * scale, power);
            if v.value.is_nan() {
                Err(EnvironmentError::StochasticOnly)
            } else {
                Ok(v)
            }
        }
        TrapLaw::FrozenPareto { alpha, c } => {
            // π̂^r = e^{-rλτ}: the Pareto transform at rλ.
            let v = pareto_laplace(*alpha, power * lambda * c.powf(1.0 / alpha), 1.0);
            if v.value.is_nan() {
                Err(EnvironmentError::StochasticOnly)
            } else {
                Ok(v)
            }
        }
        TrapLaw::Bouchaud { alpha, c } => bouchaud_laplace(*alpha, lambda * c.powf(1.0 / alpha), power),
        TrapLaw::Mixture { p, first, second } => {
            let a = laplace_transform(first, lambda, power)?;
            let b = laplace_transform(second, lambda, power)?;
            Ok(mix_values(*p, &a, &b))
        }
    }
}

fn mix_values(p: f64, a: &LaplaceValue, b: &LaplaceValue) -> LaplaceValue {
    let q = 1.0 - p;
    let method = if a.method.rank() >= b.method.rank() {
        a.method
    } else {
        b.method
    };
    let std_error = match (a.std_error, b.std_error) {
        (None, None) => None,
        (x, y) => {
            let (x, y) = (x.unwrap_or(0.0), y.unwrap_or(0.0));
            Some(((p * x).powi(2) + (q * y).powi(2)).sqrt())
        }
    };
    LaplaceValue {
        value: p * a.value + q * b.value,
        complement: p * a.complement + q * b.complement,
        method,
        std_error,
    }
}

/// Monte Carlo estimate of `E[π̂_0(λ)^power]` from `samples` realized sites.
pub fn laplace_transform_mc<R: Rng + ?Sized>(
    law: &TrapLaw,
    lambda: f64,
    power: f64,
    samples: usize,
    rng: &mut R,
) -> Result<LaplaceValue, EnvironmentError> {
    if !(lambda >= 0.0) || !(power >= 0.0) || samples < 2 {
        return Err(EnvironmentError::InvalidArgument { lambda, power });
    }
    let mut sum = 0.0;
    let mut sum_c = 0.0;
    let mut sum_c2 = 0.0;
    for _ in 0..samples {
        let site = law.realize(rng).laplace(lambda).powf(power);
        sum += site.value;
        sum_c += site.complement;
        sum_c2 += site.complement * site.complement;
    }
    let m = samples as f64;
    let mean_c = sum_c / m;
    let var = ((sum_c2 - m * mean_c * mean_c) / (m - 1.0)).max(0.0);
    Ok(LaplaceValue {
        value: sum / m,
        complement: mean_c,
        method: LaplaceMethod::MonteCarlo,
        std_error: Some((var / m).sqrt()),
    })
}

/// Per-site bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SiteRecord {
    pub measure: SiteMeasure,
    /// Number of waiting times drawn at the site so far.
    pub draws: u32,
}

/// A lazily realized environment `π = (π_x)`.
///
/// The realization of `π_x` is a pure function of the realization seed and
/// the site, so it does not depend on the order in which sites are visited.
/// Waiting times are drawn from a caller-supplied stream.
#[derive(Clone, Debug)]
pub struct SiteEnvironment<'a> {
    law: &'a TrapLaw,
    realization_seed: u64,
    sites: FxHashMap<Site, SiteRecord>,
}

impl<'a> SiteEnvironment<'a> {
    pub fn new(law: &'a TrapLaw, realization_seed: u64) -> Self {
        Self {
            law,
            realization_seed,
            sites: FxHashMap::default(),
        }
    }

    pub fn law(&self) -> &'a TrapLaw {
        self.law
    }

    /// True if no site has been realized yet.
    pub fn is_fresh(&self) -> bool {
        self.sites.is_empty()
    }

    fn record(&mut self, x: Site) -> &mut SiteRecord {
        let (law, seed) = (self.law, self.realization_seed);
        self.sites.entry(x).or_insert_with(|| {
            let mut rng = StreamRng::seed_from_u64(mix64(seed ^ x.fingerprint()));
            SiteRecord {
                measure: law.realize(&mut rng),
                draws: 0,
            }
        })
    }

    /// `π_x`, realized on first use and cached.
    pub fn realize_site(&mut self, x: Site) -> SiteMeasure {
        self.record(x).measure
    }

    /// Next waiting time at `x`.
    #[inline]
    pub fn draw_waiting_time<R: Rng + ?Sized>(&mut self, x: Site, rng: &mut R) -> f64 {
        let rec = self.record(x);
        rec.draws += 1;
        rec.measure.sample(rng)
    }

    pub fn draws_at(&self, x: &Site) -> u32 {
        self.sites.get(x).map_or(0, |r| r.draws)
    }

    pub fn realized_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn records(&self) -> impl Iterator<Item = (&Site, &SiteRecord)> {
        self.sites.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn site(x: i32, y: i32) -> Site {
        Site::from_coords(&[x, y]).unwrap()
    }

    #[test]
    fn dirac_realizes_point_mass_everywhere() {
        let law = TrapLaw::Dirac { value: 7.5 };
        let mut env = SiteEnvironment::new(&law, 1);
        let mut rng = SeedStream::new(0).rng();
        for i in 0..10 {
            assert_eq!(env.realize_site(site(i, -i)), SiteMeasure::Dirac { value: 7.5 });
            assert_eq!(env.draw_waiting_time(site(i, 0), &mut rng), 7.5);
        }
    }

    #[test]
    fn realization_is_idempotent_and_order_free() {
        let law = TrapLaw::Bouchaud { alpha: 0.5, c: 1.0 };
        let mut a = SiteEnvironment::new(&law, 99);
        let mut b = SiteEnvironment::new(&law, 99);
        let xs: Vec<Site> = (0..50).map(|i| site(i % 7, i / 7)).collect();
        let first: Vec<SiteMeasure> = xs.iter().map(|&x| a.realize_site(x)).collect();
        let again: Vec<SiteMeasure> = xs.iter().map(|&x| a.realize_site(x)).collect();
        let reversed: Vec<SiteMeasure> = xs.iter().rev().map(|&x| b.realize_site(x)).collect();
        assert_eq!(first, again);
        assert_eq!(first, reversed.into_iter().rev().collect::<Vec<_>>());
    }

    #[test]
    fn bouchaud_mean_tail() {
        let law = TrapLaw::Bouchaud { alpha: 0.5, c: 1.0 };
        let mut env = SiteEnvironment::new(&law, 3);
        let n = 100_000;
        let mut exceed = 0;
        for i in 0..n {
            let m = env.realize_site(Site::from_coords(&[i, 0]).unwrap()).mean();
            assert!(m >= 1.0);
            exceed += usize::from(m > 4.0);
        }
        let p = exceed as f64 / n as f64;
        // P[m > 4] = 4^{-1/2}
        let se = (0.25f64 / n as f64).sqrt();
        assert!((p - 0.5).abs() < 3.0 * se, "{p}");
    }

    #[test]
    fn mixture_site_fraction() {
        let law = TrapLaw::Mixture {
            p: 0.3,
            first: Box::new(TrapLaw::Dirac { value: 1.0 }),
            second: Box::new(TrapLaw::ExponentialFixedMean { mean: 1.0 }),
        };
        let mut env = SiteEnvironment::new(&law, 8);
        let n = 100_000;
        let from_first = (0..n)
            .filter(|&i| matches!(env.realize_site(site(i, 1)), SiteMeasure::Dirac { .. }))
            .count() as f64
            / n as f64;
        let se = (0.3f64 * 0.7 / n as f64).sqrt();
        assert!((from_first - 0.3).abs() < 3.0 * se);
    }

    #[test]
    fn frozen_draws_repeat_site_value() {
        let law = TrapLaw::FrozenPareto { alpha: 0.5, c: 1.0 };
        let mut env = SiteEnvironment::new(&law, 4);
        let mut rng = SeedStream::new(4).rng();
        let x = site(2, 3);
        let tau = env.draw_waiting_time(x, &mut rng);
        for _ in 0..20 {
            assert_eq!(env.draw_waiting_time(x, &mut rng), tau);
        }
        assert_eq!(env.draws_at(&x), 21);
    }

    #[test]
    fn exponential_sample_mean() {
        let law = TrapLaw::ExponentialFixedMean { mean: 2.0 };
        let mut env = SiteEnvironment::new(&law, 0);
        let mut rng = SeedStream::new(5).rng();
        let n = 100_000;
        let mean = (0..n)
            .map(|_| env.draw_waiting_time(Site::ORIGIN, &mut rng))
            .sum::<f64>()
            / n as f64;
        // s.d. of one draw equals the mean
        assert!((mean - 2.0).abs() < 3.0 * 2.0 / (n as f64).sqrt());
    }

    #[test]
    fn bouchaud_site_draws_converge_to_realized_mean() {
        let law = TrapLaw::Bouchaud { alpha: 0.5, c: 1.0 };
        let mut env = SiteEnvironment::new(&law, 12);
        let mut rng = SeedStream::new(12).rng();
        let x = site(0, 0);
        let m = env.realize_site(x).mean();
        let n = 40_000;
        let mean = (0..n).map(|_| env.draw_waiting_time(x, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - m).abs() < 3.0 * m / (n as f64).sqrt());
    }

    #[test]
    fn realized_means_uncorrelated_across_sites() {
        // Ranks of m_x at x = (2i, 0) and (2i + 1, 0); uniform ranks have variance 1/12.
        let law = TrapLaw::Bouchaud { alpha: 0.5, c: 1.0 };
        let mut env = SiteEnvironment::new(&law, 21);
        let n = 10_000;
        let u = |m: f64| 1.0 - m.powf(-0.5);
        let mut sum = 0.0;
        for i in 0..n {
            let a = u(env.realize_site(site(2 * i, 0)).mean()) - 0.5;
            let b = u(env.realize_site(site(2 * i + 1, 0)).mean()) - 0.5;
            sum += a * b * 12.0;
        }
        let corr = sum / n as f64;
        assert!(corr.abs() < 3.0 / (n as f64).sqrt(), "{corr}");
    }

    #[test]
    fn laplace_closed_forms() {
        let lt = |law: &TrapLaw, l: f64, r: f64| laplace_transform(law, l, r).unwrap();
        let dirac = TrapLaw::Dirac { value: 1.0 };
        assert_relative_eq!(lt(&dirac, 0.7, 2.0).value, (-1.4f64).exp(), max_relative = 1e-15);
        let exp = TrapLaw::ExponentialFixedMean { mean: 3.0 };
        assert_relative_eq!(lt(&exp, 0.5, 1.0).value, 1.0 / 2.5, max_relative = 1e-15);
        for law in [
            dirac,
            exp,
            TrapLaw::Pareto { alpha: 0.5, scale: 1.0 },
            TrapLaw::Bouchaud { alpha: 0.3, c: 2.0 },
            TrapLaw::FrozenPareto { alpha: 0.7, c: 1.0 },
        ] {
            let v = lt(&law, 0.0, 1.3);
            assert_eq!((v.value, v.complement), (1.0, 0.0));
        }
    }

    #[test]
    fn annealed_means() {
        assert_eq!(TrapLaw::Dirac { value: 2.5 }.annealed_mean(), 2.5);
        assert_eq!(TrapLaw::ExponentialFixedMean { mean: 3.0 }.annealed_mean(), 3.0);
        assert!(TrapLaw::Pareto { alpha: 0.5, scale: 1.0 }.annealed_mean().is_infinite());
        assert!(TrapLaw::Bouchaud { alpha: 0.9, c: 1.0 }.annealed_mean().is_infinite());
        assert_eq!(TrapLaw::Pareto { alpha: 2.0, scale: 1.0 }.annealed_mean(), 2.0);
        let mix = TrapLaw::Mixture {
            p: 0.0,
            first: Box::new(TrapLaw::Pareto { alpha: 0.5, scale: 1.0 }),
            second: Box::new(TrapLaw::Dirac { value: 4.0 }),
        };
        assert_eq!(mix.annealed_mean(), 4.0);
    }

    /// Direct quadrature of `α ∫_1^∞ v^{-α-1} g(zv) dv` after `v = s^{-1/α}`,
    /// which maps it to `∫_0^1 g(z s^{-1/α}) ds`.
    fn pareto_mixture_oracle<G: Fn(f64) -> f64>(alpha: f64, z: f64, g: G) -> f64 {
        crate::quadrature::integrate(|s: f64| if s == 0.0 { 0.0 } else { g(z * s.powf(-1.0 / alpha)) }, 0.0, 1.0, 1e-15, 1e-12)
            .unwrap()
            .value
    }

    #[test]
    fn pareto_special_function_matches_quadrature_oracle() {
        for &alpha in &[0.2, 0.5, 0.8] {
            for &z in &[1e-3, 0.1, 1.0, 1.99, 2.01, 5.0, 20.0] {
                let v = pareto_laplace_special(alpha, z);
                let oracle = pareto_mixture_oracle(alpha, z, |w| (-w).exp());
                assert_relative_eq!(v.value, oracle, max_relative = 1e-9);
                assert_relative_eq!(v.value + v.complement, 1.0, epsilon = 1e-14);
                let q = pareto_laplace_quadrature(alpha, z).unwrap();
                assert_relative_eq!(q.complement, v.complement, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn pareto_complement_small_argument_asymptotics() {
        // 1 - φ(z) ~ Γ(1-α) z^α as z → 0
        let alpha = 0.5;
        let z = 1e-12;
        let v = pareto_laplace_special(alpha, z);
        let lead = gamma(1.0 - alpha) * z.powf(alpha);
        assert_relative_eq!(v.complement, lead, max_relative = 1e-5);
    }

    #[test]
    fn bouchaud_matches_oracle() {
        for &(alpha, z, r) in &[(0.5, 1e-6, 1.0), (0.5, 0.3, 2.0), (0.3, 2.0, 0.5), (0.8, 1e-3, 4.5)] {
            let law = TrapLaw::Bouchaud { alpha, c: 1.0 };
            let v = laplace_transform(&law, z, r).unwrap();
            let oracle = pareto_mixture_oracle(alpha, z, |w| -(-r * w.ln_1p()).exp_m1());
            assert_relative_eq!(v.complement, oracle, max_relative = 1e-8);
        }
    }

    #[test]
    fn mc_fallback_agrees_with_deterministic_route() {
        let law = TrapLaw::Bouchaud { alpha: 0.5, c: 1.0 };
        let exact = laplace_transform(&law, 0.2, 1.5).unwrap();
        let mc = laplace_transform_mc(&law, 0.2, 1.5, 100_000, &mut SeedStream::new(2).rng()).unwrap();
        let se = mc.std_error.unwrap();
        assert!(se > 0.0);
        assert!((mc.complement - exact.complement).abs() < 4.0 * se);
    }

    #[test]
    fn alpha_above_one_uses_quadrature() {
        let law = TrapLaw::Pareto { alpha: 1.5, scale: 1.0 };
        let v = laplace_transform(&law, 0.01, 1.0).unwrap();
        assert_eq!(v.method, LaplaceMethod::Quadrature);
        // small-λ expansion: 1 - φ = λ E[P] + Γ(1-α) λ^α + O(λ²)
        let lead = 0.03 + gamma(-0.5) * 0.01f64.powf(1.5);
        assert_relative_eq!(v.complement, lead, max_relative = 0.01);
        let oracle = pareto_mixture_oracle(1.5, 0.01, |w| (-w).exp());
        assert_relative_eq!(v.value, oracle, max_relative = 1e-9);
    }

    #[test]
    fn scaled_laws_rescale_waiting_times() {
        let law = TrapLaw::FrozenPareto { alpha: 0.5, c: 1.0 };
        let scaled = law.scaled(3.0);
        let a = SiteEnvironment::new(&law, 5).realize_site(Site::ORIGIN).mean();
        let b = SiteEnvironment::new(&scaled, 5).realize_site(Site::ORIGIN).mean();
        assert_relative_eq!(b, 3.0 * a, max_relative = 1e-12);
    }

    #[test]
    fn toml_round_trip() {
        let law: TrapLaw = serde_json::from_str(
            r#"{"kind":"mixture","p":0.3,"first":{"kind":"pareto","alpha":0.5},"second":{"kind":"frozen_pareto","alpha":0.5}}"#,
        )
        .unwrap();
        assert_eq!(law.tail_index(), Some(0.5));
        assert!(serde_json::from_str::<TrapLaw>(r#"{"kind":"dirac","value":1,"extra":2}"#).is_err());
    }

    proptest! {
        #[test]
        fn frozen_power_is_laplace_at_scaled_lambda(
            lambda in 1e-6f64..5.0, r in 0.01f64..4.0, s in 0.01f64..4.0, alpha in 0.1f64..0.95,
        ) {
            let frozen = TrapLaw::FrozenPareto { alpha, c: 1.0 };
            let pareto = TrapLaw::Pareto { alpha, scale: 1.0 };
            let lhs = laplace_transform(&frozen, lambda, r + s).unwrap();
            let rhs = laplace_transform(&pareto, (r + s) * lambda, 1.0).unwrap();
            prop_assert!((lhs.complement - rhs.complement).abs() <= 1e-14 * rhs.complement.max(1e-300) + 1e-300);
        }

        #[test]
        fn mixture_is_convex_combination(
            p in 0.0f64..=1.0, lambda in 0.0f64..3.0, r in 0.0f64..3.0,
        ) {
            let a = TrapLaw::Pareto { alpha: 0.5, scale: 1.0 };
            let b = TrapLaw::ExponentialFixedMean { mean: 2.0 };
            let mix = TrapLaw::Mixture { p, first: Box::new(a.clone()), second: Box::new(b.clone()) };
            let m = laplace_transform(&mix, lambda, r).unwrap();
            let va = laplace_transform(&a, lambda, r).unwrap();
            let vb = laplace_transform(&b, lambda, r).unwrap();
            prop_assert_eq!(m.value, p * va.value + (1.0 - p) * vb.value);
        }

        #[test]
        fn laplace_is_a_probability(lambda in 0.0f64..1e3, r in 0.0f64..10.0) {
            for law in [
                TrapLaw::Pareto { alpha: 0.4, scale: 2.0 },
                TrapLaw::Bouchaud { alpha: 0.6, c: 1.0 },
                TrapLaw::FrozenPareto { alpha: 0.5, c: 0.5 },
            ] {
                let v = laplace_transform(&law, lambda, r).unwrap();
                prop_assert!(v.value >= 0.0 && v.value <= 1.0 + 1e-15);
                prop_assert!(v.complement >= -1e-15 && v.complement <= 1.0);
            }
        }

        #[test]
        fn waiting_times_are_positive(seed in any::<u64>()) {
            let law = TrapLaw::Mixture {
                p: 0.5,
                first: Box::new(TrapLaw::Bouchaud { alpha: 0.3, c: 1.0 }),
                second: Box::new(TrapLaw::Pareto { alpha: 0.9, scale: 1e-3 }),
            };
            let mut env = SiteEnvironment::new(&law, seed);
            let mut rng = SeedStream::new(seed).rng();
            for i in 0..200 {
                prop_assert!(env.draw_waiting_time(site(i % 5, i % 3), &mut rng) > 0.0);
            }
        }
    }
}
