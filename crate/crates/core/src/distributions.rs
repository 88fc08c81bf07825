//! Parameter laws for the random maps: sampling, distribution functions,
//! logarithmic moments and lattice detection.
//!
//! A [`DistributionSpec`] is the plain, serializable description used in
//! experiment configs. [`Law`] is its validated form, with whatever tables
//! the variant needs precomputed. Laws are immutable and `Sync`.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, TailConfig, TailOutcome};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Serializable description of a law on the real line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    /// Finitely many atoms, given as `[value, weight]` pairs.
    TwoPoint { values: Vec<[f64; 2]> },
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    LogNormal { mu: f64, sigma: f64 },
    /// Density `a (1+x)^-(1+a)` on `x >= 0`.
    ParetoType { a: f64 },
    Constant { c: f64 },
    /// Density given at increasing grid points, linear in between.
    TabulatedDensity { grid: Vec<f64>, density: Vec<f64> },
}

impl DistributionSpec {
    pub fn two_point(values: &[(f64, f64)]) -> Self {
        DistributionSpec::TwoPoint {
            values: values.iter().map(|&(v, w)| [v, w]).collect(),
        }
    }

    /// Tabulates `f` on `grid` and rescales it to unit trapezoid mass.
    pub fn tabulated_from_fn(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Self {
        let raw: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
        let mass = trapezoid(&grid, &raw);
        let density = raw.iter().map(|v| v / mass).collect();
        DistributionSpec::TabulatedDensity { grid, density }
    }
}

fn trapezoid(grid: &[f64], vals: &[f64]) -> f64 {
    grid.windows(2)
        .zip(vals.windows(2))
        .map(|(g, v)| 0.5 * (v[0] + v[1]) * (g[1] - g[0]))
        .sum()
}

#[derive(Debug, Clone)]
enum Repr {
    Atoms { values: Vec<f64>, weights: Vec<f64>, cum: Vec<f64> },
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64, sampler: Exp<f64> },
    LogNormal { mu: f64, sigma: f64, sampler: LogNormal<f64> },
    Pareto { a: f64 },
    Tabulated { grid: Vec<f64>, cum: Vec<f64> },
}

/// A validated law, ready for sampling and queries.
#[derive(Debug, Clone)]
pub struct Law {
    spec: DistributionSpec,
    repr: Repr,
}

/// Sign of the mean logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Contractive,
    Centered,
    Expanding,
    Undefined,
}

/// A possibly infinite moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Moment {
    Finite(f64),
    Infinite,
    /// Quadrature neither stabilized nor clearly diverged.
    Undecided(f64),
}

impl Moment {
    pub fn value(&self) -> f64 {
        match *self {
            Moment::Finite(v) | Moment::Undecided(v) => v,
            Moment::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Moment::Finite(_))
    }
}

impl From<TailOutcome> for Moment {
    fn from(t: TailOutcome) -> Self {
        match t {
            TailOutcome::Converged(v) => Moment::Finite(v),
            TailOutcome::Diverged => Moment::Infinite,
            TailOutcome::Undecided(v) => Moment::Undecided(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    /// E(log X).
    pub mean_log: Moment,
    /// E(|log X|^2).
    pub second_moment_log: Moment,
    /// Order of the log⁺ moment below, `2 + epsilon`.
    pub logplus_order: f64,
    /// E((log⁺|X|)^order).
    pub logplus_moment: Moment,
    pub regime: Regime,
}

/// Outcome of a lattice query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeSpan {
    /// The support lies in `span · Z` and `span` is maximal.
    Lattice { span: f64 },
    /// Finite support that lies in no lattice (decided exactly).
    NonLattice { proved: bool },
    /// Absolutely continuous law.
    Continuous,
    /// Every atom sits at the identity (log 1 = 0, or the value 0): no
    /// maximal span exists.
    Degenerate,
}

impl LatticeSpan {
    pub fn span(&self) -> Option<f64> {
        match *self {
            LatticeSpan::Lattice { span } => Some(span),
            _ => None,
        }
    }
}

impl Law {
    pub fn new(spec: DistributionSpec) -> Result<Self> {
        let repr = match &spec {
            DistributionSpec::TwoPoint { values } => {
                if values.is_empty() {
                    return Err(Error::config("values", "at least one atom is required"));
                }
                let mut total = 0.0;
                for (i, [v, w]) in values.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(Error::config(format!("values[{i}]"), "value must be finite"));
                    }
                    if !(*w >= 0.0) || !w.is_finite() {
                        return Err(Error::config(format!("values[{i}]"), "negative or invalid weight"));
                    }
                    total += w;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::config(
                        "values",
                        format!("weights sum to {total}, expected 1"),
                    ));
                }
                let mut atoms: Vec<(f64, f64)> = values.iter().map(|&[v, w]| (v, w)).collect();
                atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let mut cum = Vec::with_capacity(atoms.len());
                let mut acc = 0.0;
                for &(_, w) in &atoms {
                    acc += w / total;
                    cum.push(acc);
                }
                *cum.last_mut().unwrap() = 1.0;
                Repr::Atoms {
                    values: atoms.iter().map(|a| a.0).collect(),
                    weights: atoms.iter().map(|a| a.1 / total).collect(),
                    cum,
                }
            }
            DistributionSpec::Constant { c } => {
                if !c.is_finite() {
                    return Err(Error::config("c", "constant must be finite"));
                }
                Repr::Atoms {
                    values: vec![*c],
                    weights: vec![1.0],
                    cum: vec![1.0],
                }
            }
            DistributionSpec::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::config("lo/hi", "need finite lo < hi"));
                }
                Repr::Uniform { lo: *lo, hi: *hi }
            }
            DistributionSpec::Exponential { rate } => {
                let sampler = Exp::new(*rate)
                    .ok()
                    .filter(|_| *rate > 0.0 && rate.is_finite())
                    .ok_or_else(|| Error::config("rate", "rate must be positive"))?;
                Repr::Exponential { rate: *rate, sampler }
            }
            DistributionSpec::LogNormal { mu, sigma } => {
                if !(mu.is_finite() && *sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::config("sigma", "need finite mu and sigma > 0"));
                }
                let sampler = LogNormal::new(*mu, *sigma)
                    .map_err(|e| Error::config("sigma", e.to_string()))?;
                Repr::LogNormal {
                    mu: *mu,
                    sigma: *sigma,
                    sampler,
                }
            }
            DistributionSpec::ParetoType { a } => {
                if !(*a > 0.0 && a.is_finite()) {
                    return Err(Error::config("a", "tail index must be positive"));
                }
                Repr::Pareto { a: *a }
            }
            DistributionSpec::TabulatedDensity { grid, density } => {
                if grid.len() < 2 || grid.len() != density.len() {
                    return Err(Error::config(
                        "grid",
                        "grid and density need equal length >= 2",
                    ));
                }
                if let Some(i) = grid.windows(2).position(|w| !(w[1] > w[0])) {
                    return Err(Error::config(
                        format!("grid[{}]", i + 1),
                        "grid must be strictly increasing",
                    ));
                }
                if let Some(i) = density.iter().position(|d| !(*d >= 0.0) || !d.is_finite()) {
                    return Err(Error::config(format!("density[{i}]"), "density must be nonnegative"));
                }
                let mut cum = vec![0.0; grid.len()];
                for i in 1..grid.len() {
                    cum[i] = cum[i - 1] + 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
                }
                let mass = cum[grid.len() - 1];
                if (mass - 1.0).abs() > 1e-6 {
                    return Err(Error::config(
                        "density",
                        format!("trapezoid mass is {mass}, expected 1 within 1e-6"),
                    ));
                }
                for c in cum.iter_mut() {
                    *c /= mass;
                }
                Repr::Tabulated {
                    grid: grid.clone(),
                    cum,
                }
            }
        };
        Ok(Law { spec, repr })
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.repr, Repr::Atoms { .. })
    }

    /// Atoms and weights of a discrete law.
    pub fn atoms(&self) -> Option<(&[f64], &[f64])> {
        match &self.repr {
            Repr::Atoms { values, weights, .. } => Some((values, weights)),
            _ => None,
        }
    }

    /// Closed support hull `[lo, hi]`.
    pub fn support(&self) -> (f64, f64) {
        match &self.repr {
            Repr::Atoms { values, .. } => (values[0], values[values.len() - 1]),
            Repr::Uniform { lo, hi } => (*lo, *hi),
            Repr::Exponential { .. } | Repr::LogNormal { .. } | Repr::Pareto { .. } => {
                (0.0, f64::INFINITY)
            }
            Repr::Tabulated { grid, .. } => (grid[0], grid[grid.len() - 1]),
        }
    }

    /// Points where the density or distribution function is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Atoms { values, .. } => values.clone(),
            Repr::Uniform { lo, hi } => vec![*lo, *hi],
            Repr::Exponential { .. } | Repr::LogNormal { .. } | Repr::Pareto { .. } => vec![0.0],
            Repr::Tabulated { grid, .. } => grid.clone(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.repr {
            Repr::Atoms { values, cum, .. } => {
                if values.len() == 1 {
                    return values[0];
                }
                let u: f64 = rng.random();
                let i = cum.partition_point(|&c| c <= u);
                values[i.min(values.len() - 1)]
            }
            Repr::Uniform { lo, hi } => {
                let u: f64 = rng.random();
                lo + (hi - lo) * u
            }
            Repr::Exponential { sampler, .. } => sampler.sample(rng),
            Repr::LogNormal { sampler, .. } => sampler.sample(rng),
            Repr::Pareto { a } => {
                let u: f64 = rng.random();
                (1.0 - u).powf(-1.0 / a) - 1.0
            }
            Repr::Tabulated { grid, cum } => {
                let u: f64 = rng.random();
                invert_table(grid, cum, u)
            }
        }
    }

    /// P[X <= x].
    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match &self.repr {
            Repr::Atoms { values, cum, .. } => {
                let i = values.partition_point(|&v| v <= x);
                if i == 0 {
                    0.0
                } else {
                    cum[i - 1]
                }
            }
            Repr::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Repr::Exponential { rate, .. } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Repr::LogNormal { mu, sigma, .. } => {
                if x <= 0.0 {
                    0.0
                } else {
                    0.5 * libm::erfc(-(x.ln() - mu) / (sigma * std::f64::consts::SQRT_2))
                }
            }
            Repr::Pareto { a } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -((-a) * x.ln_1p()).exp_m1()
                }
            }
            Repr::Tabulated { grid, cum } => interpolate_table(grid, cum, x),
        }
    }

    /// P[X > x], computed without cancellation in the tails.
    pub fn sf(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Exponential { rate, .. } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            Repr::LogNormal { mu, sigma, .. } => {
                if x <= 0.0 {
                    1.0
                } else {
                    0.5 * libm::erfc((x.ln() - mu) / (sigma * std::f64::consts::SQRT_2))
                }
            }
            Repr::Pareto { a } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-a * x.ln_1p()).exp()
                }
            }
            Repr::Tabulated { grid, cum } => {
                if x <= grid[0] {
                    return 1.0;
                }
                if x >= grid[grid.len() - 1] {
                    return 0.0;
                }
                let i = grid.partition_point(|&g| g <= x) - 1;
                let t = (x - grid[i]) / (grid[i + 1] - grid[i]);
                // interpolate the survival values directly
                let s0 = 1.0 - cum[i];
                let s1 = 1.0 - cum[i + 1];
                s0 + t * (s1 - s0)
            }
            _ => 1.0 - self.cdf(x),
        }
    }

    /// Density with respect to Lebesgue measure; `None` for discrete laws.
    /// For tabulated laws this is the bin average, matching the sampler.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        Some(match &self.repr {
            Repr::Atoms { .. } => return None,
            Repr::Uniform { lo, hi } => {
                if x >= *lo && x <= *hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Repr::Exponential { rate, .. } => {
                if x >= 0.0 {
                    rate * (-rate * x).exp()
                } else {
                    0.0
                }
            }
            Repr::LogNormal { mu, sigma, .. } => {
                if x > 0.0 {
                    let z = (x.ln() - mu) / sigma;
                    (-0.5 * z * z).exp() / (x * sigma * (2.0 * std::f64::consts::PI).sqrt())
                } else {
                    0.0
                }
            }
            Repr::Pareto { a } => {
                if x >= 0.0 {
                    a * (-(1.0 + a) * x.ln_1p()).exp()
                } else {
                    0.0
                }
            }
            Repr::Tabulated { grid, cum } => {
                if x < grid[0] || x > grid[grid.len() - 1] {
                    0.0
                } else {
                    let i = (grid.partition_point(|&g| g <= x).max(1) - 1).min(grid.len() - 2);
                    (cum[i + 1] - cum[i]) / (grid[i + 1] - grid[i])
                }
            }
        })
    }

    /// Smallest x with cdf(x) >= p, for p in (0, 1).
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match &self.repr {
            Repr::Atoms { values, cum, .. } => {
                let i = cum.partition_point(|&c| c < p);
                values[i.min(values.len() - 1)]
            }
            Repr::Uniform { lo, hi } => lo + p * (hi - lo),
            Repr::Exponential { rate, .. } => -(-p).ln_1p() / rate,
            Repr::Pareto { a } => (1.0 - p).powf(-1.0 / a) - 1.0,
            Repr::Tabulated { grid, cum } => invert_table(grid, cum, p),
            Repr::LogNormal { .. } => {
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                while self.cdf(hi) < p {
                    hi *= 2.0;
                    if !hi.is_finite() {
                        return f64::INFINITY;
                    }
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        }
    }

    /// E(X), possibly infinite.
    pub fn mean(&self) -> Moment {
        match &self.repr {
            Repr::Atoms { values, weights, .. } => {
                Moment::Finite(values.iter().zip(weights).map(|(v, w)| v * w).sum())
            }
            Repr::Uniform { lo, hi } => Moment::Finite(0.5 * (lo + hi)),
            Repr::Exponential { rate, .. } => Moment::Finite(1.0 / rate),
            Repr::LogNormal { mu, sigma, .. } => Moment::Finite((mu + 0.5 * sigma * sigma).exp()),
            Repr::Pareto { a } => {
                if *a > 1.0 {
                    Moment::Finite(1.0 / (a - 1.0))
                } else {
                    Moment::Infinite
                }
            }
            Repr::Tabulated { .. } => {
                let pos = self.positive_part_power(1.0, &TailConfig::default());
                let neg = self.negative_part_mean(&TailConfig::default());
                combine_difference(pos, neg)
            }
        }
    }

    /// E((X⁺)^p) for p > 0, as ∫_0^∞ P[X > t^(1/p)] dt.
    pub fn positive_part_power(&self, p: f64, cfg: &TailConfig) -> Moment {
        if let Repr::Atoms { values, weights, .. } = &self.repr {
            return Moment::Finite(
                values
                    .iter()
                    .zip(weights)
                    .map(|(v, w)| if *v > 0.0 { w * v.powf(p) } else { 0.0 })
                    .sum(),
            );
        }
        let breaks: Vec<f64> = self
            .breakpoints()
            .into_iter()
            .filter(|b| *b > 0.0)
            .map(|b| b.powf(p))
            .collect();
        let f = |t: f64| self.sf(t.powf(1.0 / p));
        quad::integrate_to_infinity(&f, &breaks, cfg).outcome.into()
    }

    /// E(X⁻) = ∫_0^∞ P[X < -t] dt.
    pub fn negative_part_mean(&self, cfg: &TailConfig) -> Moment {
        if let Repr::Atoms { values, weights, .. } = &self.repr {
            return Moment::Finite(
                values
                    .iter()
                    .zip(weights)
                    .map(|(v, w)| if *v < 0.0 { -w * v } else { 0.0 })
                    .sum(),
            );
        }
        if self.support().0 >= 0.0 {
            return Moment::Finite(0.0);
        }
        let breaks: Vec<f64> = self
            .breakpoints()
            .into_iter()
            .filter(|b| *b < 0.0)
            .map(|b| -b)
            .collect();
        let f = |t: f64| self.cdf(-t);
        quad::integrate_to_infinity(&f, &breaks, cfg).outcome.into()
    }

    /// E(h(X)) for continuous laws, splitting at 0 and at 1 in absolute
    /// value so that logarithmic integrands are handled decade by decade.
    /// `h` must be nonnegative for |x| >= 1.
    fn expect_continuous(&self, h: &dyn Fn(f64) -> f64, cfg: &TailConfig) -> Moment {
        let breaks: Vec<f64> = self.breakpoints();
        let pos_breaks: Vec<f64> = breaks.iter().copied().filter(|b| *b > 0.0).collect();
        let neg_breaks: Vec<f64> = breaks.iter().copied().filter(|b| *b < 0.0).map(|b| -b).collect();
        let (lo, hi) = self.support();
        let density = |x: f64| self.pdf(x).unwrap_or(0.0);
        let mut total = 0.0;
        let mut status = Moment::Finite(0.0);
        let mut side = |sign: f64, brk: &[f64]| {
            let g = |t: f64| {
                let x = sign * t;
                let d = density(x);
                if d == 0.0 {
                    0.0
                } else {
                    h(x) * d
                }
            };
            let near = quad::integrate_from_zero(&g, 1.0, brk);
            let far_fn = |t: f64| if t < 1.0 { 0.0 } else { g(t) };
            let far = quad::integrate_to_infinity(&far_fn, brk, cfg);
            total += near;
            match far.outcome {
                TailOutcome::Converged(v) => total += v,
                TailOutcome::Diverged => status = Moment::Infinite,
                TailOutcome::Undecided(v) => {
                    total += v;
                    if status != Moment::Infinite {
                        status = Moment::Undecided(0.0);
                    }
                }
            }
        };
        if hi > 0.0 {
            side(1.0, &pos_breaks);
        }
        if lo < 0.0 {
            side(-1.0, &neg_breaks);
        }
        match status {
            Moment::Finite(_) => Moment::Finite(total),
            Moment::Infinite => Moment::Infinite,
            Moment::Undecided(_) => Moment::Undecided(total),
        }
    }

    pub(crate) fn require_positive(&self) -> Result<()> {
        let (lo, _) = self.support();
        let bad = match &self.repr {
            Repr::Atoms { values, weights, .. } => values
                .iter()
                .zip(weights)
                .any(|(v, w)| *v <= 0.0 && *w > 0.0),
            _ => lo < 0.0,
        };
        if bad {
            Err(Error::domain(
                "law puts mass on (-inf, 0]; a Lipschitz-constant law must be a.s. positive",
            ))
        } else {
            Ok(())
        }
    }

    /// (E log X, E log² X) in closed form where the variant admits it.
    fn log_moments(&self, cfg: &TailConfig) -> (Moment, Moment) {
        match &self.repr {
            Repr::Atoms { values, weights, .. } => {
                let m1 = values.iter().zip(weights).map(|(v, w)| w * v.ln()).sum();
                let m2 = values.iter().zip(weights).map(|(v, w)| w * v.ln().powi(2)).sum();
                (Moment::Finite(m1), Moment::Finite(m2))
            }
            Repr::Uniform { lo, hi } => {
                let f1 = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() - x };
                let f2 = |x: f64| {
                    if x == 0.0 {
                        0.0
                    } else {
                        let l = x.ln();
                        x * (l * l - 2.0 * l + 2.0)
                    }
                };
                let w = hi - lo;
                (
                    Moment::Finite((f1(*hi) - f1(*lo)) / w),
                    Moment::Finite((f2(*hi) - f2(*lo)) / w),
                )
            }
            Repr::Exponential { rate, .. } => {
                let m1 = -EULER_GAMMA - rate.ln();
                let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
                (Moment::Finite(m1), Moment::Finite(m1 * m1 + pi2_6))
            }
            Repr::LogNormal { mu, sigma, .. } => {
                (Moment::Finite(*mu), Moment::Finite(sigma * sigma + mu * mu))
            }
            Repr::Tabulated { grid, cum } => {
                // the density is constant on each bin
                let f1 = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() - x };
                let f2 = |x: f64| {
                    if x == 0.0 {
                        0.0
                    } else {
                        let l = x.ln();
                        x * (l * l - 2.0 * l + 2.0)
                    }
                };
                let mut m1 = 0.0;
                let mut m2 = 0.0;
                for i in 0..grid.len() - 1 {
                    let (a, b) = (grid[i], grid[i + 1]);
                    let d = (cum[i + 1] - cum[i]) / (b - a);
                    m1 += d * (f1(b) - f1(a));
                    m2 += d * (f2(b) - f2(a));
                }
                (Moment::Finite(m1), Moment::Finite(m2))
            }
            Repr::Pareto { .. } => {
                let m1 = self.expect_continuous(&|x: f64| x.abs().ln(), cfg);
                let m2 = self.expect_continuous(&|x: f64| x.abs().ln().powi(2), cfg);
                (m1, m2)
            }
        }
    }

    /// E((log⁺|X|)^order).
    pub fn logplus_moment(&self, order: f64, cfg: &TailConfig) -> Moment {
        let h = move |x: f64| {
            let l = x.abs().ln();
            if l > 0.0 {
                l.powf(order)
            } else {
                0.0
            }
        };
        match &self.repr {
            Repr::Atoms { values, weights, .. } => {
                Moment::Finite(values.iter().zip(weights).map(|(v, w)| w * h(*v)).sum())
            }
            _ => self.expect_continuous(&h, cfg),
        }
    }

    /// Logarithmic moments and the contraction regime of a positive law.
    /// `epsilon` sets the order `2 + epsilon` of the log⁺ moment.
    pub fn moment_report(&self, epsilon: f64) -> Result<MomentReport> {
        self.require_positive()?;
        if !(epsilon > 0.0) {
            return Err(Error::config("epsilon", "must be positive"));
        }
        let cfg = TailConfig::default();
        let (mean_log, second_moment_log) = self.log_moments(&cfg);
        let order = 2.0 + epsilon;
        let logplus_moment = self.logplus_moment(order, &cfg);
        let tol = match &self.repr {
            Repr::Tabulated { .. } | Repr::Pareto { .. } => 1e-9,
            _ => 1e-12 * second_moment_log.value().sqrt().max(1.0),
        };
        let regime = match mean_log {
            Moment::Finite(m) if m.abs() <= tol => Regime::Centered,
            Moment::Finite(m) if m < 0.0 => Regime::Contractive,
            Moment::Finite(_) => Regime::Expanding,
            _ => Regime::Undefined,
        };
        Ok(MomentReport {
            mean_log,
            second_moment_log,
            logplus_order: order,
            logplus_moment,
            regime,
        })
    }

    /// Multiplicative lattice of a positive law: the maximal κ with
    /// log(support) ⊂ κ·Z. Atoms are read as the exact binary rationals
    /// their `f64` values denote.
    pub fn lattice_span(&self) -> Result<LatticeSpan> {
        self.require_positive()?;
        let values = match &self.repr {
            Repr::Atoms { values, weights, .. } => values
                .iter()
                .zip(weights)
                .filter(|(_, w)| **w > 0.0)
                .map(|(v, _)| *v)
                .collect::<Vec<_>>(),
            _ => return Ok(LatticeSpan::Continuous),
        };
        Ok(multiplicative_lattice(&values))
    }

    /// Additive lattice of the support: the maximal κ with supp ⊂ κ·Z.
    /// Every finite set of binary rationals lies in such a lattice.
    pub fn support_lattice(&self) -> LatticeSpan {
        let values = match &self.repr {
            Repr::Atoms { values, weights, .. } => values
                .iter()
                .zip(weights)
                .filter(|(_, w)| **w > 0.0)
                .map(|(v, _)| *v)
                .collect::<Vec<_>>(),
            _ => return LatticeSpan::Continuous,
        };
        let rats: Vec<BigRational> = values
            .iter()
            .filter(|v| **v != 0.0)
            .map(|v| BigRational::from_float(*v).expect("finite").abs())
            .collect();
        if rats.is_empty() {
            return LatticeSpan::Degenerate;
        }
        let lcm = rats
            .iter()
            .fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let g = rats.iter().fold(BigInt::zero(), |acc, r| {
            let scaled = r.numer() * (&lcm / r.denom());
            acc.gcd(&scaled)
        });
        let span = BigRational::new(g, lcm);
        LatticeSpan::Lattice {
            span: span.to_f64().unwrap_or(f64::NAN),
        }
    }
}

fn combine_difference(pos: Moment, neg: Moment) -> Moment {
    match (pos, neg) {
        (Moment::Finite(a), Moment::Finite(b)) => Moment::Finite(a - b),
        (Moment::Infinite, _) | (_, Moment::Infinite) => Moment::Infinite,
        (a, b) => Moment::Undecided(a.value() - b.value()),
    }
}

fn interpolate_table(grid: &[f64], cum: &[f64], x: f64) -> f64 {
    if x <= grid[0] {
        return 0.0;
    }
    if x >= grid[grid.len() - 1] {
        return 1.0;
    }
    let i = grid.partition_point(|&g| g <= x) - 1;
    let t = (x - grid[i]) / (grid[i + 1] - grid[i]);
    cum[i] + t * (cum[i + 1] - cum[i])
}

fn invert_table(grid: &[f64], cum: &[f64], u: f64) -> f64 {
    // first node whose cumulative mass reaches u
    let j = cum.partition_point(|&c| c < u).clamp(1, grid.len() - 1);
    let i = j - 1;
    let span = cum[j] - cum[i];
    if span <= 0.0 {
        return grid[j];
    }
    let t = ((u - cum[i]) / span).clamp(0.0, 1.0);
    grid[i] + t * (grid[j] - grid[i])
}

/// Pairwise coprime integers > 1 that multiplicatively generate `ints`.
fn coprime_base(ints: &[BigInt]) -> Vec<BigInt> {
    let mut base: Vec<BigInt> = ints.iter().filter(|n| **n > BigInt::one()).cloned().collect();
    base.sort();
    base.dedup();
    loop {
        let mut split = None;
        'outer: for i in 0..base.len() {
            for j in i + 1..base.len() {
                let g = base[i].gcd(&base[j]);
                if g > BigInt::one() {
                    split = Some((i, j, g));
                    break 'outer;
                }
            }
        }
        let Some((i, j, g)) = split else {
            return base;
        };
        let a = &base[i] / &g;
        let b = &base[j] / &g;
        let mut next: Vec<BigInt> = base
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i && *k != j)
            .map(|(_, v)| v.clone())
            .collect();
        next.extend([a, b, g].into_iter().filter(|v| *v > BigInt::one()));
        next.sort();
        next.dedup();
        base = next;
    }
}

/// Exponent vector of `n` over a coprime base.
fn exponents(mut n: BigInt, base: &[BigInt]) -> Vec<i64> {
    base.iter()
        .map(|q| {
            let mut e = 0;
            while (&n % q).is_zero() {
                n /= q;
                e += 1;
            }
            e
        })
        .collect()
}

fn multiplicative_lattice(values: &[f64]) -> LatticeSpan {
    let rats: Vec<BigRational> = values
        .iter()
        .map(|v| BigRational::from_float(*v).expect("finite"))
        .filter(|r| !r.is_one())
        .collect();
    if rats.is_empty() {
        return LatticeSpan::Degenerate;
    }
    let mut ints = Vec::new();
    for r in &rats {
        ints.push(r.numer().clone());
        ints.push(r.denom().clone());
    }
    let base = coprime_base(&ints);
    let vecs: Vec<Vec<i64>> = rats
        .iter()
        .map(|r| {
            let num = exponents(r.numer().clone(), &base);
            let den = exponents(r.denom().clone(), &base);
            num.iter().zip(&den).map(|(a, b)| a - b).collect()
        })
        .collect();
    // all vectors must be integer multiples of one primitive direction
    let first = &vecs[0];
    let g0 = first.iter().fold(0i64, |acc, &e| acc.gcd(&e));
    let dir: Vec<i64> = first.iter().map(|e| e / g0).collect();
    let mut multiples = Vec::with_capacity(vecs.len());
    for v in &vecs {
        let pivot = dir.iter().position(|&d| d != 0).expect("nonzero direction");
        if v[pivot] % dir[pivot] != 0 {
            return LatticeSpan::NonLattice { proved: true };
        }
        let k = v[pivot] / dir[pivot];
        if v.iter().zip(&dir).any(|(a, d)| *a != k * d) {
            return LatticeSpan::NonLattice { proved: true };
        }
        multiples.push(k);
    }
    let g = multiples.iter().fold(0i64, |acc, &k| acc.gcd(&k)).abs();
    let log_dir: f64 = dir
        .iter()
        .zip(&base)
        .map(|(d, q)| *d as f64 * bigint_ln(q))
        .sum();
    LatticeSpan::Lattice {
        span: (g as f64 * log_dir).abs(),
    }
}

fn bigint_ln(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.to_f64().unwrap().ln();
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().unwrap();
    debug_assert!(n.sign() == Sign::Plus);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::ReplicaStream;

    fn law(spec: DistributionSpec) -> Law {
        Law::new(spec).unwrap()
    }

    #[test]
    fn sample_examples() {
        let tp = law(DistributionSpec::two_point(&[(2.0, 0.5), (0.5, 0.5)]));
        let c = law(DistributionSpec::Constant { c: 1.0 });
        let e = law(DistributionSpec::Exponential { rate: 1.0 });
        let s = ReplicaStream::new(3, 0);
        for n in 0..2000 {
            let mut r = s.step(n);
            let v = tp.sample(&mut r);
            assert!(v == 2.0 || v == 0.5);
            assert_eq!(c.sample(&mut r), 1.0);
            assert!(e.sample(&mut r) >= 0.0);
        }
    }

    #[test]
    fn sample_is_reproducible() {
        let l = law(DistributionSpec::LogNormal { mu: 0.0, sigma: 1.0 });
        let s = ReplicaStream::new(99, 4);
        let a: Vec<f64> = (0..10).map(|n| l.sample(&mut s.step(n))).collect();
        let b: Vec<f64> = (0..10).map(|n| l.sample(&mut s.step(n))).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn malformed_specs_are_rejected() {
        assert!(Law::new(DistributionSpec::two_point(&[(1.0, -0.5), (2.0, 1.5)])).is_err());
        assert!(Law::new(DistributionSpec::TabulatedDensity {
            grid: vec![0.0, 2.0, 1.0],
            density: vec![1.0, 1.0, 1.0]
        })
        .is_err());
        assert!(Law::new(DistributionSpec::TabulatedDensity {
            grid: vec![0.0, 1.0],
            density: vec![2.0, 2.0]
        })
        .is_err());
        assert!(Law::new(DistributionSpec::Exponential { rate: 0.0 }).is_err());
    }

    #[test]
    fn cdf_examples() {
        let e = law(DistributionSpec::Exponential { rate: 1.0 });
        assert_eq!(e.cdf(0.0), 0.0);
        let u = law(DistributionSpec::Uniform { lo: 0.0, hi: 1.0 });
        assert_eq!(u.cdf(0.25), 0.25);
        let p = law(DistributionSpec::ParetoType { a: 2.0 });
        assert!((p.cdf(1.0) - 0.75).abs() < 1e-15);
        // quadrature oracle of the density
        let dens = |x: f64| 2.0 * (1.0 + x).powf(-3.0);
        let q = crate::quad::integrate(&dens, 0.0, 1.0, &[]);
        assert!((q - 0.75).abs() < 1e-12);
    }

    #[test]
    fn tabulated_cdf_matches_trapezoid_and_sampler() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let spec = DistributionSpec::tabulated_from_fn(grid, |x| 2.0 * (1.0 - x));
        let l = law(spec);
        assert!((l.cdf(0.5) - 0.75).abs() < 1e-9);
        assert!((l.quantile(0.75) - 0.5).abs() < 1e-9);
        let s = ReplicaStream::new(5, 0);
        let n = 50_000;
        let below = (0..n).filter(|&k| l.sample(&mut s.step(k)) <= 0.5).count();
        let frac = below as f64 / n as f64;
        assert!((frac - 0.75).abs() < 4.0 * (0.75f64 * 0.25 / n as f64).sqrt());
    }

    #[test]
    fn moment_report_examples() {
        let tp = law(DistributionSpec::two_point(&[(2.0, 0.5), (0.5, 0.5)]));
        let r = tp.moment_report(0.1).unwrap();
        assert_eq!(r.mean_log, Moment::Finite(0.0));
        assert_eq!(r.regime, Regime::Centered);

        let ln = law(DistributionSpec::LogNormal { mu: -0.5, sigma: 1.0 });
        let r = ln.moment_report(0.1).unwrap();
        assert_eq!(r.mean_log, Moment::Finite(-0.5));
        assert_eq!(r.regime, Regime::Contractive);

        let c = law(DistributionSpec::Constant { c: 2.0 });
        let r = c.moment_report(0.1).unwrap();
        assert_eq!(r.mean_log, Moment::Finite(2f64.ln()));
        assert_eq!(r.regime, Regime::Expanding);
    }

    #[test]
    fn moment_report_rejects_mass_at_zero() {
        let l = law(DistributionSpec::two_point(&[(0.0, 0.5), (2.0, 0.5)]));
        assert!(matches!(l.moment_report(0.1), Err(Error::Domain(_))));
        let u = law(DistributionSpec::Uniform { lo: -1.0, hi: 1.0 });
        assert!(u.moment_report(0.1).is_err());
    }

    #[test]
    fn closed_form_log_moments_agree_with_quadrature() {
        let cfg = TailConfig::default();
        for spec in [
            DistributionSpec::Exponential { rate: 2.0 },
            DistributionSpec::Uniform { lo: 0.5, hi: 3.0 },
            DistributionSpec::LogNormal { mu: 0.3, sigma: 0.7 },
        ] {
            let l = law(spec);
            let (m1, m2) = l.log_moments(&cfg);
            let q1 = l.expect_continuous(&|x: f64| x.ln(), &cfg).value();
            let q2 = l.expect_continuous(&|x: f64| x.ln().powi(2), &cfg).value();
            assert!((m1.value() - q1).abs() < 1e-7, "{:?} {} {}", l.spec, m1.value(), q1);
            assert!((m2.value() - q2).abs() < 1e-7, "{:?} {} {}", l.spec, m2.value(), q2);
        }
    }

    #[test]
    fn pareto_mean_log() {
        // E log X for density a(1+x)^-(1+a), a = 2: ∫ log x · 2(1+x)^-3 dx = -1/2 - ... computed
        // independently by substitution u = 1/(1+x): E log X = E[log(1-u) - log u] with u ~ Beta(2,1)
        // = ∫_0^1 2u (log(1-u) - log u) du = 2(-3/4) - 2(-1/4) = -1.
        let l = law(DistributionSpec::ParetoType { a: 2.0 });
        let r = l.moment_report(0.1).unwrap();
        assert!((r.mean_log.value() + 1.0).abs() < 1e-8, "{:?}", r.mean_log);
        assert_eq!(r.regime, Regime::Contractive);
    }

    #[test]
    fn lattice_examples() {
        let a = law(DistributionSpec::two_point(&[(2.0, 0.5), (0.5, 0.5)]));
        assert_eq!(a.lattice_span().unwrap().span(), Some(2f64.ln()));
        let b = law(DistributionSpec::two_point(&[(4.0, 0.5), (0.5, 0.5)]));
        let kb = b.lattice_span().unwrap().span().unwrap();
        // integer-exponent oracle: 4 = 2^2, 1/2 = 2^-1, gcd(2, -1) = 1
        assert!((kb - 2f64.ln()).abs() < 1e-15);
        let c = law(DistributionSpec::LogNormal { mu: 0.0, sigma: 1.0 });
        assert_eq!(c.lattice_span().unwrap(), LatticeSpan::Continuous);
        let d = law(DistributionSpec::two_point(&[(2.0, 0.5), (3.0, 0.5)]));
        assert_eq!(d.lattice_span().unwrap(), LatticeSpan::NonLattice { proved: true });
        let e = law(DistributionSpec::two_point(&[(8.0, 0.5), (0.25, 0.5)]));
        assert!((e.lattice_span().unwrap().span().unwrap() - 2f64.ln()).abs() < 1e-15);
        let f = law(DistributionSpec::two_point(&[(12.0, 0.5), (18.0, 0.5)]));
        assert_eq!(f.lattice_span().unwrap(), LatticeSpan::NonLattice { proved: true });
        let g = law(DistributionSpec::two_point(&[(9.0, 0.5), (27.0, 0.5)]));
        assert!((g.lattice_span().unwrap().span().unwrap() - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn support_lattice_of_atoms() {
        let l = law(DistributionSpec::two_point(&[(1.5, 0.5), (2.5, 0.5)]));
        assert_eq!(l.support_lattice().span(), Some(0.5));
        assert_eq!(
            law(DistributionSpec::Exponential { rate: 1.0 }).support_lattice(),
            LatticeSpan::Continuous
        );
    }
}
