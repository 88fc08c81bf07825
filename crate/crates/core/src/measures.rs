//! Invariant measures of reflected random walks and their estimators.

use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, LatticeSpan, Law, Moment};
use crate::engine::par_replicas;
use crate::error::{Error, Result};
use crate::maps::{Family, System};
use crate::quad::{self, TailConfig, TailOutcome};
use crate::rng::ReplicaStream;

/// A histogram measure. Mass is spread uniformly inside each bin, so the
/// CDF is continuous and piecewise linear between edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub bin_edges: Vec<f64>,
    pub masses: Vec<f64>,
    pub total_mass: f64,
    pub sample_count: u64,
    /// Mass that fell outside `[first edge, last edge)`; not part of
    /// `total_mass`.
    pub outside_mass: f64,
}

impl EmpiricalMeasure {
    pub fn new(bin_edges: Vec<f64>) -> Result<Self> {
        if bin_edges.len() < 2 {
            return Err(Error::domain("a histogram needs at least two edges"));
        }
        if bin_edges.iter().any(|e| !e.is_finite()) || bin_edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("bin edges must be finite and strictly increasing"));
        }
        let m = bin_edges.len() - 1;
        Ok(EmpiricalMeasure {
            bin_edges,
            masses: vec![0.0; m],
            total_mass: 0.0,
            sample_count: 0,
            outside_mass: 0.0,
        })
    }

    /// `bins` equal-width bins spanning `[lo, hi)`.
    pub fn uniform_bins(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        let edges = (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect();
        Self::new(edges)
    }

    pub fn from_values(values: &[f64], bin_edges: Vec<f64>) -> Result<Self> {
        let mut m = Self::new(bin_edges)?;
        for &v in values {
            m.add(v, 1.0);
        }
        Ok(m)
    }

    pub fn bin_of(&self, x: f64) -> Option<usize> {
        let e = &self.bin_edges;
        if !(x >= e[0]) || x >= e[e.len() - 1] {
            return None;
        }
        Some(e.partition_point(|&v| v <= x) - 1)
    }

    pub fn add(&mut self, x: f64, weight: f64) {
        self.sample_count += 1;
        match self.bin_of(x) {
            Some(i) => {
                self.masses[i] += weight;
                self.total_mass += weight;
            }
            None => self.outside_mass += weight,
        }
    }

    /// Associative merge of two histograms over the same edges.
    pub fn merge(&self, other: &EmpiricalMeasure) -> Result<EmpiricalMeasure> {
        if self.bin_edges != other.bin_edges {
            return Err(Error::domain("cannot merge histograms with different edges"));
        }
        Ok(EmpiricalMeasure {
            bin_edges: self.bin_edges.clone(),
            masses: self.masses.iter().zip(&other.masses).map(|(a, b)| a + b).collect(),
            total_mass: self.total_mass + other.total_mass,
            sample_count: self.sample_count + other.sample_count,
            outside_mass: self.outside_mass + other.outside_mass,
        })
    }

    /// The same histogram scaled to total mass 1.
    pub fn normalized(&self) -> Result<EmpiricalMeasure> {
        if !(self.total_mass > 0.0) {
            return Err(Error::domain("cannot normalize a histogram with zero mass"));
        }
        let t = self.total_mass;
        Ok(EmpiricalMeasure {
            masses: self.masses.iter().map(|m| m / t).collect(),
            total_mass: 1.0,
            outside_mass: self.outside_mass / t,
            ..self.clone()
        })
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_mass - 1.0).abs() <= 1e-9
    }

    /// Cumulative mass up to `x`, in units of the stored masses.
    pub fn cdf(&self, x: f64) -> f64 {
        let e = &self.bin_edges;
        if x <= e[0] {
            return 0.0;
        }
        let mut acc = 0.0;
        for (i, &m) in self.masses.iter().enumerate() {
            if x >= e[i + 1] {
                acc += m;
            } else {
                acc += m * (x - e[i]) / (e[i + 1] - e[i]);
                break;
            }
        }
        acc
    }

    /// Rows `(edge_lo, edge_hi, mass)`.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.bin_edges
            .windows(2)
            .zip(&self.masses)
            .map(|(w, &m)| (w[0], w[1], m))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("edge_lo,edge_hi,mass\n");
        for (lo, hi, m) in self.rows() {
            s.push_str(&format!("{lo},{hi},{m}\n"));
        }
        s
    }
}

/// What an empirical measure is compared against.
pub enum Reference<'a> {
    Cdf(&'a dyn Fn(f64) -> f64),
    Measure(&'a EmpiricalMeasure),
}

/// Kolmogorov–Smirnov distance between a normalized histogram and a
/// reference, taken over all bin edges of both measures.
pub fn ks_distance(emp: &EmpiricalMeasure, reference: Reference<'_>) -> Result<f64> {
    if !emp.is_normalized() {
        return Err(Error::domain("ks_distance needs a normalized measure (total mass 1)"));
    }
    let d = match reference {
        Reference::Cdf(f) => emp
            .bin_edges
            .iter()
            .map(|&x| (emp.cdf(x) - f(x)).abs())
            .fold(0.0, f64::max),
        Reference::Measure(other) => {
            if !other.is_normalized() {
                return Err(Error::domain("reference measure is not normalized"));
            }
            emp.bin_edges
                .iter()
                .chain(&other.bin_edges)
                .map(|&x| (emp.cdf(x) - other.cdf(x)).abs())
                .fold(0.0, f64::max)
        }
    };
    Ok(d.min(1.0))
}

/// Exact one-sample KS statistic of raw samples against a continuous CDF.
pub fn ks_samples(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Closed-form invariant density x ↦ 1 − F(x) of a reflected random walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantDensity {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    /// ∫_0^∞ (1 − F) by quadrature.
    pub total_mass: Moment,
    /// E(B) from the law itself, for the tail-integral cross-check.
    pub mean: Moment,
}

pub fn reflected_rw_invariant_density(b_law: &DistributionSpec, grid: &[f64]) -> Result<InvariantDensity> {
    let law = Law::new(b_law.clone())?;
    if law.support().0 < 0.0 {
        return Err(Error::domain(
            "the closed-form invariant density needs a step law supported on [0, inf)",
        ));
    }
    match law.support_lattice() {
        LatticeSpan::Lattice { .. } | LatticeSpan::Degenerate => {
            return Err(Error::Unsupported(
                "lattice step laws are not supported by the closed-form invariant density".into(),
            ))
        }
        LatticeSpan::Continuous | LatticeSpan::NonLattice { .. } => {}
    }
    let sf = |x: f64| law.sf(x);
    let breaks: Vec<f64> = law.breakpoints().into_iter().filter(|b| *b > 0.0).collect();
    let total_mass = quad::integrate_to_infinity(&sf, &breaks, &TailConfig::default())
        .outcome
        .into();
    Ok(InvariantDensity {
        grid: grid.to_vec(),
        density: grid.iter().map(|&x| if x < 0.0 { 0.0 } else { law.sf(x) }).collect(),
        total_mass,
        mean: law.mean(),
    })
}

/// Histogram of `path[burn_in..]`, one unit of mass per value.
pub fn occupation_measure(path: &[f64], burn_in: usize, bin_edges: Vec<f64>) -> Result<EmpiricalMeasure> {
    if burn_in >= path.len() {
        return Err(Error::domain(format!(
            "burn_in {burn_in} leaves nothing of a path of length {}",
            path.len()
        )));
    }
    EmpiricalMeasure::from_values(&path[burn_in..], bin_edges)
}

/// Half-open interval `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x < self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    /// Running ratio after each step n = 1.., NaN while ψ is unvisited.
    pub series: Vec<f64>,
    pub phi_visits: u64,
    pub psi_visits: u64,
    /// None when ψ was never visited.
    pub final_value: Option<f64>,
}

/// Running ratio Σ φ(X_k) / Σ ψ(X_k) over k = 1..n.
pub fn ratio_estimate(path: &[f64], phi: Interval, psi: Interval) -> RatioEstimate {
    let mut series = Vec::with_capacity(path.len().saturating_sub(1));
    let (mut np, mut nq) = (0u64, 0u64);
    for &x in path.iter().skip(1) {
        np += u64::from(phi.contains(x));
        nq += u64::from(psi.contains(x));
        series.push(if nq == 0 { f64::NAN } else { np as f64 / nq as f64 });
    }
    RatioEstimate {
        series,
        phi_visits: np,
        psi_visits: nq,
        final_value: (nq > 0).then(|| np as f64 / nq as f64),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KacReport {
    pub set: Interval,
    /// ν(support) / ν(U) from the closed-form density.
    pub prediction: f64,
    pub mean_return_time: f64,
    pub std_error: f64,
    pub returns: u64,
    pub censored: u64,
    pub censored_fraction: f64,
    /// False when more than 1% of the returns were censored.
    pub valid: bool,
}

/// First return times to `u = [0, t)` for a reflected random walk started
/// from the closed-form invariant measure restricted to `u`.
///
/// Replica `r` draws its start at step 0 of its stream and its walk
/// increments at steps 1, 2, ...
pub fn kac_return_time(
    system: &System,
    u: Interval,
    replicas: u64,
    horizon: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<KacReport> {
    if system.family() != Family::ReflectedRw {
        return Err(Error::Unsupported("Kac return times need a reflected random walk".into()));
    }
    if u.lo != 0.0 || !(u.hi > 0.0) {
        return Err(Error::config("kac.set", "U must be [0, t) with t > 0"));
    }
    let law = system
        .b_law()
        .ok_or_else(|| Error::Unsupported("Kac return times need an independent b_law".into()))?;
    let density = reflected_rw_invariant_density(law.spec(), &[])?;
    let total = match density.total_mass {
        Moment::Finite(v) => v,
        _ => {
            return Err(Error::domain(
                "the invariant measure has infinite mass: the walk is not positive recurrent",
            ))
        }
    };
    let breaks: Vec<f64> = law.breakpoints().into_iter().filter(|&b| b > 0.0 && b < u.hi).collect();
    let hi = u.hi.min(law.support().1);
    let nu_u = quad::integrate(&|x| law.sf(x), 0.0, hi, &breaks);
    if !(nu_u > 0.0) {
        return Err(Error::domain("U carries no invariant mass"));
    }
    let top = law.sf(0.0);
    let times = par_replicas(replicas, workers, |r| {
        let stream = ReplicaStream::new(seed, r);
        let mut rng = stream.step(0);
        // rejection from the uniform law on [0, hi): 1 - F is nonincreasing
        let mut x;
        loop {
            x = hi * rng.open01();
            if rng.open01() * top <= law.sf(x) {
                break;
            }
        }
        for n in 1..=horizon {
            let (_, b) = system.sample_params(&mut stream.step(n));
            x = (x - b).abs();
            if u.contains(x) {
                return Ok(Some(n));
            }
        }
        Ok(None)
    })?;
    let done: Vec<f64> = times.iter().flatten().map(|&n| n as f64).collect();
    let censored = times.len() as u64 - done.len() as u64;
    let k = done.len() as f64;
    let mean = done.iter().sum::<f64>() / k;
    let var = done.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
    let censored_fraction = censored as f64 / replicas as f64;
    Ok(KacReport {
        set: u,
        prediction: total / nu_u,
        mean_return_time: mean,
        std_error: (var / k).sqrt(),
        returns: done.len() as u64,
        censored,
        censored_fraction,
        valid: censored_fraction <= 0.01,
    })
}

/// Status of one recurrence condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    Fails,
    NumericallyUndecided,
}

impl From<TailOutcome> for Status {
    fn from(t: TailOutcome) -> Self {
        match t {
            TailOutcome::Converged(_) => Status::Holds,
            TailOutcome::Diverged => Status::Fails,
            TailOutcome::Undecided(_) => Status::NumericallyUndecided,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub status: Status,
    /// Integral value, or the last partial value when undecided.
    pub value: f64,
}

impl Condition {
    fn from_tail(t: TailOutcome) -> Self {
        Condition {
            status: t.into(),
            value: t.value(),
        }
    }
}

/// Drift sign of B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Drift {
    Positive,
    Centered,
    Negative,
    /// E(B) infinite or undecided.
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    /// (i) E(B) < ∞
    pub mean: Condition,
    /// (ii) E(√B) < ∞
    pub sqrt_moment: Condition,
    /// (iii) ∫ (1 − F)² < ∞
    pub squared_tail: Condition,
    /// (iv) (1 − F(y)) ∫_0^y (F(y) − F(x)) dx → 0
    pub tail_product: Condition,
    /// (y, g(y)) at the cutoffs used for (iv).
    pub tail_product_trace: Vec<(f64, f64)>,
    /// Set when B takes negative values.
    pub drift: Option<Drift>,
    /// E(√B⁺) < ∞, relevant when the drift is positive.
    pub sqrt_positive_part: Option<Condition>,
    /// E((B⁺)^{3/2}) < ∞, relevant in the centered case.
    pub three_halves_positive_part: Option<Condition>,
}

impl CriteriaReport {
    /// Conditions (i)..(iv) in order.
    pub fn chain(&self) -> [Status; 4] {
        [
            self.mean.status,
            self.sqrt_moment.status,
            self.squared_tail.status,
            self.tail_product.status,
        ]
    }
}

/// Decades 10²..10⁶ at which condition (iv) is sampled.
pub const TAIL_PRODUCT_CUTOFFS: [f64; 5] = [1e2, 1e3, 1e4, 1e5, 1e6];

/// Decision rule for condition (iv): holds when the final value is below
/// 1e-3, or when the sequence decreases and its log-log slope over the
/// last two decades is at most `-0.05` (a power-law decay to zero that is
/// too slow to cross 1e-3 by 10⁶). Fails when the sequence does not
/// decrease over the last two decades.
fn decide_tail_product(trace: &[(f64, f64)]) -> Status {
    let g: Vec<f64> = trace.iter().map(|p| p.1).collect();
    let last = g[g.len() - 1];
    if last < 1e-3 {
        return Status::Holds;
    }
    let n = g.len();
    let slope = (g[n - 1].ln() - g[n - 3].ln()) / (trace[n - 1].0.ln() - trace[n - 3].0.ln());
    let decreasing = g[n - 3..].windows(2).all(|w| w[1] < w[0]);
    if decreasing && slope <= -0.05 {
        Status::Holds
    } else if !decreasing || slope >= -0.005 {
        Status::Fails
    } else {
        Status::NumericallyUndecided
    }
}

/// Evaluates the recurrence conditions for a reflected random walk with
/// step law `b_law`.
///
/// Conditions (i)–(iv) concern the nonnegative part of the law; the drift
/// criteria are filled in when B also takes negative values. Each stronger
/// condition implies the next, and a report violating that is returned
/// as an assertion error.
pub fn recurrence_criteria(b_law: &DistributionSpec) -> Result<CriteriaReport> {
    let law = Law::new(b_law.clone())?;
    let cfg = TailConfig::default();
    let breaks: Vec<f64> = law.breakpoints().into_iter().filter(|b| *b > 0.0).collect();
    let sf = |x: f64| law.sf(x);

    let mean = quad::integrate_to_infinity(&sf, &breaks, &cfg).outcome;
    let sq_breaks: Vec<f64> = breaks.iter().map(|b| b.sqrt()).collect();
    let sqrt_moment = quad::integrate_to_infinity(&|s: f64| law.sf(s * s), &sq_breaks, &cfg).outcome;
    let squared_tail = quad::integrate_to_infinity(&|x: f64| law.sf(x).powi(2), &breaks, &cfg).outcome;

    let trace: Vec<(f64, f64)> = TAIL_PRODUCT_CUTOFFS
        .iter()
        .map(|&y| {
            let sy = law.sf(y);
            if sy == 0.0 {
                return (y, 0.0);
            }
            let inner = quad::integrate_from_zero(&sf, y, &breaks) - y * sy;
            (y, sy * inner.max(0.0))
        })
        .collect();
    let tail_status = decide_tail_product(&trace);

    let (drift, sqrt_pos, three_halves) = if law.support().0 < 0.0 {
        let d = match law.mean() {
            Moment::Finite(m) if m.abs() <= 1e-12 => Drift::Centered,
            Moment::Finite(m) if m > 0.0 => Drift::Positive,
            Moment::Finite(_) => Drift::Negative,
            _ => Drift::Undefined,
        };
        let sp = law.positive_part_power(0.5, &cfg);
        let th = law.positive_part_power(1.5, &cfg);
        (Some(d), Some(moment_condition(sp)), Some(moment_condition(th)))
    } else {
        (None, None, None)
    };

    let report = CriteriaReport {
        mean: Condition::from_tail(mean),
        sqrt_moment: Condition::from_tail(sqrt_moment),
        squared_tail: Condition::from_tail(squared_tail),
        tail_product: Condition {
            status: tail_status,
            value: trace[trace.len() - 1].1,
        },
        tail_product_trace: trace,
        drift,
        sqrt_positive_part: sqrt_pos,
        three_halves_positive_part: three_halves,
    };
    let chain = report.chain();
    for k in 0..3 {
        if chain[k] == Status::Holds && chain[k + 1] == Status::Fails {
            return Err(Error::Assertion(format!(
                "recurrence criteria chain violated: condition {} holds but condition {} fails",
                k + 1,
                k + 2
            )));
        }
    }
    Ok(report)
}

fn moment_condition(m: Moment) -> Condition {
    match m {
        Moment::Finite(v) => Condition {
            status: Status::Holds,
            value: v,
        },
        Moment::Infinite => Condition {
            status: Status::Fails,
            value: f64::INFINITY,
        },
        Moment::Undecided(v) => Condition {
            status: Status::NumericallyUndecided,
            value: v,
        },
    }
}

/// Settings for [`wiener_hopf_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WienerHopfConfig {
    pub paths: u64,
    /// Walks that have not reached [0, ∞) after this many steps are censored.
    pub max_steps: u64,
    pub seed: u64,
    /// Number of grid intervals on [0, G] for the convolution.
    pub grid_intervals: usize,
}

impl Default for WienerHopfConfig {
    fn default() -> Self {
        WienerHopfConfig {
            paths: 100_000,
            max_steps: 100_000,
            seed: 0,
            grid_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WienerHopfReport {
    /// KS distance between the ladder-height sample and μ₀.
    pub ks: f64,
    pub ladder_heights: u64,
    pub censored: u64,
    pub proposals: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    /// Standard error of the acceptance rate around ½.
    pub acceptance_std_error: f64,
    /// ∫ φ over the real line (quadrature on the grid plus analytic tails).
    pub density_mass: f64,
    /// Half-width G of the convolution grid.
    pub grid_half_width: f64,
}

/// Symmetric step law μ = μ₀ + μ̌₀ − μ₀ * μ̌₀ built from a law μ₀ on
/// [0, ∞) with nonincreasing density, sampled by rejection.
#[derive(Debug, Clone)]
pub struct SymmetrizedLaw {
    mu0: Law,
    step: f64,
    /// (μ₀ * μ̌₀)(x) on the grid x_i = i·step, renormalized to mass 1.
    conv: Vec<f64>,
    mass: f64,
}

impl SymmetrizedLaw {
    pub fn new(mu0: &DistributionSpec, grid_intervals: usize) -> Result<Self> {
        let law = Law::new(mu0.clone())?;
        if law.support().0 < 0.0 {
            return Err(Error::domain("mu0 must live on [0, inf)"));
        }
        law.pdf(0.5 * (law.support().0 + law.support().1.min(1.0)))
            .ok_or_else(|| Error::domain("mu0 must be absolutely continuous"))?;
        let (_, hi) = law.support();
        let g = if hi.is_finite() { hi } else { law.quantile(1.0 - 1e-8) };
        let m = grid_intervals.max(16);
        let step = g / m as f64;
        // pdf evaluated just inside each grid point so that a jump at the
        // support end does not leak into the last node
        let dens: Vec<f64> = (0..=m)
            .map(|i| {
                let x = if i == m { g * (1.0 - 1e-12) } else { i as f64 * step };
                law.pdf(x).unwrap_or(0.0)
            })
            .collect();
        for i in 1..dens.len() {
            if dens[i] > dens[i - 1] * (1.0 + 1e-9) + 1e-300 {
                return Err(Error::domain(format!(
                    "mu0 density is not nonincreasing near x = {}",
                    i as f64 * step
                )));
            }
        }
        let mut conv = vec![0.0; m + 1];
        for (i, c) in conv.iter_mut().enumerate() {
            let n = m - i;
            if n == 0 {
                continue;
            }
            let mut s = 0.5 * (dens[i] * dens[0] + dens[m] * dens[n]);
            for j in 1..n {
                s += dens[i + j] * dens[j];
            }
            *c = s * step;
        }
        // the convolution of two probability densities has mass 1
        let half: f64 = step * (conv.iter().sum::<f64>() - 0.5 * (conv[0] + conv[m]));
        let scale = 1.0 / (2.0 * half);
        for c in conv.iter_mut() {
            *c *= scale;
        }
        // ∫φ = 2·μ₀[0, G] + 2·μ₀(G, ∞) − ∫(μ₀ * μ̌₀) by trapezoid on the grid
        let trap_dens = step * (dens.iter().sum::<f64>() - 0.5 * (dens[0] + dens[m]));
        let conv_mass = 2.0 * step * (conv.iter().sum::<f64>() - 0.5 * (conv[0] + conv[m]));
        let mass = 2.0 * trap_dens + 2.0 * law.sf(g) - conv_mass;
        Ok(SymmetrizedLaw {
            mu0: law,
            step,
            conv,
            mass,
        })
    }

    /// (μ₀ * μ̌₀)(x), linear between grid nodes, zero beyond the grid.
    pub fn convolution(&self, x: f64) -> f64 {
        let t = x.abs() / self.step;
        let i = t.floor() as usize;
        if i + 1 >= self.conv.len() {
            return if i + 1 == self.conv.len() && t == i as f64 { self.conv[i] } else { 0.0 };
        }
        let f = t - i as f64;
        self.conv[i] * (1.0 - f) + self.conv[i + 1] * f
    }

    /// φ(x) = φ₀(|x|) − (μ₀ * μ̌₀)(x).
    pub fn density(&self, x: f64) -> f64 {
        (self.mu0.pdf(x.abs()).unwrap_or(0.0) - self.convolution(x)).max(0.0)
    }

    pub fn density_mass(&self) -> f64 {
        self.mass
    }

    pub fn grid_half_width(&self) -> f64 {
        self.step * (self.conv.len() - 1) as f64
    }

    /// One draw; returns the value and the number of proposals used.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> (f64, u64) {
        let mut tries = 0;
        loop {
            tries += 1;
            let y = self.mu0.sample(rng);
            let sign = if rng.next_u32() & 1 == 0 { 1.0 } else { -1.0 };
            let p = self.mu0.pdf(y).unwrap_or(0.0);
            let accept = if p > 0.0 { 1.0 - self.convolution(y) / p } else { 1.0 };
            let u: f64 = rng.random();
            if u < accept {
                return (sign * y, tries);
            }
        }
    }
}

/// Samples the first non-strict ascending ladder height of the walk with
/// steps from the symmetrized law and compares its law with μ₀.
pub fn wiener_hopf_check(
    mu0: &DistributionSpec,
    cfg: &WienerHopfConfig,
    workers: Option<usize>,
) -> Result<WienerHopfReport> {
    let sym = SymmetrizedLaw::new(mu0, cfg.grid_intervals)?;
    let per_path = par_replicas(cfg.paths, workers, |p| {
        let stream = ReplicaStream::new(cfg.seed, p);
        let mut s = 0.0;
        let mut proposals = 0;
        for n in 1..=cfg.max_steps {
            let (b, k) = sym.sample(&mut stream.step(n));
            proposals += k;
            s += b;
            if s >= 0.0 {
                return Ok((Some(s), proposals, n));
            }
        }
        Ok((None, proposals, cfg.max_steps))
    })?;
    let heights: Vec<f64> = per_path.iter().filter_map(|t| t.0).collect();
    let proposals: u64 = per_path.iter().map(|t| t.1).sum();
    let accepted: u64 = per_path.iter().map(|t| t.2).sum();
    let law = Law::new(mu0.clone())?;
    let rate = accepted as f64 / proposals as f64;
    Ok(WienerHopfReport {
        ks: ks_samples(&heights, |x| law.cdf(x)),
        ladder_heights: heights.len() as u64,
        censored: cfg.paths - heights.len() as u64,
        proposals,
        accepted,
        acceptance_rate: rate,
        acceptance_std_error: (0.25 / proposals as f64).sqrt(),
        density_mass: sym.density_mass(),
        grid_half_width: sym.grid_half_width(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::SystemSpec;

    #[test]
    fn histogram_basics() {
        let m = EmpiricalMeasure::from_values(&[0.1, 0.2, 0.7, 1.5], vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(m.masses, vec![2.0, 1.0]);
        assert_eq!(m.total_mass, 3.0);
        assert_eq!(m.outside_mass, 1.0);
        assert_eq!(m.sample_count, 4);
        assert_eq!(m.cdf(0.5), 2.0);
        assert_eq!(m.cdf(0.75), 2.5);
        assert_eq!(m.cdf(-1.0), 0.0);
        assert_eq!(m.cdf(9.0), 3.0);
        assert!(m.to_csv().starts_with("edge_lo,edge_hi,mass\n0,0.5,2\n"));
    }

    #[test]
    fn merge_is_associative() {
        let e = vec![0.0, 1.0, 2.0, 3.0];
        let a = EmpiricalMeasure::from_values(&[0.5, 2.5], e.clone()).unwrap();
        let b = EmpiricalMeasure::from_values(&[1.5], e.clone()).unwrap();
        let c = EmpiricalMeasure::from_values(&[0.1, 0.2, 9.0], e.clone()).unwrap();
        let l = a.merge(&b).unwrap().merge(&c).unwrap();
        let r = a.merge(&b.merge(&c).unwrap()).unwrap();
        assert_eq!(l, r);
        assert_eq!(l.masses, vec![3.0, 1.0, 1.0]);
        let other = EmpiricalMeasure::new(vec![0.0, 1.0]).unwrap();
        assert!(a.merge(&other).is_err());
    }

    #[test]
    fn ks_examples() {
        let e = vec![-0.5, 0.5, 1.5];
        let p0 = EmpiricalMeasure::from_values(&[0.0], e.clone()).unwrap();
        let p1 = EmpiricalMeasure::from_values(&[1.0], e.clone()).unwrap();
        assert_eq!(ks_distance(&p0, Reference::Measure(&p0)).unwrap(), 0.0);
        assert_eq!(ks_distance(&p0, Reference::Measure(&p1)).unwrap(), 1.0);
        let unnorm = EmpiricalMeasure::from_values(&[0.0, 0.1], e).unwrap();
        assert!(ks_distance(&unnorm, Reference::Measure(&p0)).is_err());

        // exact quantile points of Uniform(0,1)
        let n = 10_000;
        let pts: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let h = EmpiricalMeasure::from_values(&pts, (0..=n).map(|i| i as f64 / n as f64).collect())
            .unwrap()
            .normalized()
            .unwrap();
        let cdf = |x: f64| x.clamp(0.0, 1.0);
        assert!(ks_distance(&h, Reference::Cdf(&cdf)).unwrap() <= 1e-4);
        assert!(ks_samples(&pts, cdf) <= 1e-4);
    }

    #[test]
    fn invariant_density_examples() {
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
        let d = reflected_rw_invariant_density(&DistributionSpec::Exponential { rate: 1.0 }, &grid).unwrap();
        for (x, v) in d.grid.iter().zip(&d.density) {
            assert!((v - (-x).exp()).abs() < 1e-15);
        }
        assert!((d.total_mass.value() - 1.0).abs() < 1e-6);

        let u = reflected_rw_invariant_density(&DistributionSpec::Uniform { lo: 0.0, hi: 1.0 }, &[0.0, 0.3, 1.0, 2.0])
            .unwrap();
        assert_eq!(u.density, vec![1.0, 0.7, 0.0, 0.0]);
        assert!((u.total_mass.value() - 0.5).abs() < 1e-12);

        assert!(matches!(
            reflected_rw_invariant_density(&DistributionSpec::Constant { c: 1.0 }, &[0.0]),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            reflected_rw_invariant_density(&DistributionSpec::two_point(&[(1.0, 0.5), (2.0, 0.5)]), &[0.0]),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            reflected_rw_invariant_density(&DistributionSpec::Uniform { lo: -1.0, hi: 1.0 }, &[0.0]),
            Err(Error::Domain(_))
        ));
        let heavy = reflected_rw_invariant_density(&DistributionSpec::ParetoType { a: 0.7 }, &[0.0]).unwrap();
        assert_eq!(heavy.total_mass, Moment::Infinite);
    }

    #[test]
    fn tail_identity_for_closed_forms() {
        for spec in [
            DistributionSpec::Exponential { rate: 2.5 },
            DistributionSpec::Uniform { lo: 0.2, hi: 3.0 },
            DistributionSpec::LogNormal { mu: 0.1, sigma: 0.6 },
            DistributionSpec::ParetoType { a: 2.0 },
        ] {
            let d = reflected_rw_invariant_density(&spec, &[]).unwrap();
            assert!((d.total_mass.value() - d.mean.value()).abs() < 1e-6, "{spec:?}");
        }
    }

    #[test]
    fn occupation_examples() {
        let m = occupation_measure(&[2.0; 10], 3, vec![0.0, 1.0, 3.0]).unwrap();
        assert_eq!(m.masses, vec![0.0, 7.0]);
        let alt: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 0.5 } else { 1.5 }).collect();
        let m = occupation_measure(&alt, 0, vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(m.masses[0], m.masses[1]);
        assert!(occupation_measure(&alt, 10, vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn ratio_examples() {
        let path = [0.0, 0.2, 0.7, 0.3, 0.9, 0.1];
        let i = Interval::new(0.0, 0.5);
        let j = Interval::new(0.5, 1.0);
        let same = ratio_estimate(&path, i, i);
        assert!(same.series.iter().all(|&r| r == 1.0));
        let a = ratio_estimate(&path, i, j);
        let b = ratio_estimate(&path, j, i);
        assert_eq!(a.final_value.unwrap() * b.final_value.unwrap(), 1.0);
        assert_eq!((a.phi_visits, a.psi_visits), (3, 2));
        let never = ratio_estimate(&path, Interval::new(5.0, 6.0), i);
        assert_eq!(never.final_value, Some(0.0));
        let undefined = ratio_estimate(&path, i, Interval::new(5.0, 6.0));
        assert_eq!(undefined.final_value, None);
        assert!(undefined.series.iter().all(|r| r.is_nan()));
    }

    #[test]
    fn kac_small_runs() {
        let sys = System::new(SystemSpec::reflected_rw(DistributionSpec::Uniform { lo: 0.0, hi: 1.0 })).unwrap();
        let whole = kac_return_time(&sys, Interval::new(0.0, 1.0), 200, 100, 1, None).unwrap();
        assert!((whole.prediction - 1.0).abs() < 1e-12);
        assert_eq!(whole.mean_return_time, 1.0);
        let half = kac_return_time(&sys, Interval::new(0.0, 0.5), 20_000, 10_000, 2, None).unwrap();
        assert!((half.prediction - 4.0 / 3.0).abs() < 1e-12);
        assert!((half.mean_return_time - 4.0 / 3.0).abs() < 4.0 * half.std_error, "{half:?}");
        assert_eq!(half.censored, 0);

        let exp = System::new(SystemSpec::reflected_rw(DistributionSpec::Exponential { rate: 1.0 })).unwrap();
        let r = kac_return_time(&exp, Interval::new(0.0, 2f64.ln()), 20_000, 10_000, 3, None).unwrap();
        assert!((r.prediction - 2.0).abs() < 1e-9);
        assert!((r.mean_return_time - 2.0).abs() < 4.0 * r.std_error, "{r:?}");

        let heavy = System::new(SystemSpec::reflected_rw(DistributionSpec::ParetoType { a: 0.8 })).unwrap();
        assert!(kac_return_time(&heavy, Interval::new(0.0, 1.0), 10, 10, 0, None).is_err());
    }

    #[test]
    fn criteria_examples() {
        let e = recurrence_criteria(&DistributionSpec::Exponential { rate: 1.0 }).unwrap();
        assert_eq!(e.chain(), [Status::Holds; 4]);
        assert!((e.mean.value - 1.0).abs() < 1e-8);
        // E√B for Exp(1) is Γ(3/2) = √π/2
        assert!((e.sqrt_moment.value - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-8);
        assert!((e.squared_tail.value - 0.5).abs() < 1e-8);

        let p6 = recurrence_criteria(&DistributionSpec::ParetoType { a: 0.6 }).unwrap();
        assert_eq!(p6.chain(), [Status::Fails, Status::Holds, Status::Holds, Status::Holds]);
        let p4 = recurrence_criteria(&DistributionSpec::ParetoType { a: 0.4 }).unwrap();
        assert_eq!(p4.sqrt_moment.status, Status::Fails);
        assert_eq!(p4.squared_tail.status, Status::Fails);
        assert!(e.drift.is_none());

        let signed = recurrence_criteria(&DistributionSpec::Uniform { lo: -1.0, hi: 1.0 }).unwrap();
        assert_eq!(signed.drift, Some(Drift::Centered));
        assert_eq!(signed.three_halves_positive_part.as_ref().unwrap().status, Status::Holds);
    }

    #[test]
    fn symmetrized_law_mass_and_rejection() {
        for spec in [
            DistributionSpec::Uniform { lo: 0.0, hi: 1.0 },
            DistributionSpec::Exponential { rate: 1.0 },
        ] {
            let s = SymmetrizedLaw::new(&spec, 4000).unwrap();
            assert!((s.density_mass() - 1.0).abs() < 1e-4, "{}", s.density_mass());
            assert!((s.density(0.3) - s.density(-0.3)).abs() < 1e-15);
        }
        // for Uniform(0,1) the convolution is 1 − |x| on [−1, 1]
        let s = SymmetrizedLaw::new(&DistributionSpec::Uniform { lo: 0.0, hi: 1.0 }, 4000).unwrap();
        for x in [0.0, 0.25, 0.6, 0.99] {
            assert!((s.convolution(x) - (1.0 - x)).abs() < 1e-3, "{x}");
        }
        // for Exp(1) it is e^{−|x|}/2
        let s = SymmetrizedLaw::new(&DistributionSpec::Exponential { rate: 1.0 }, 4000).unwrap();
        for x in [0.0, 0.5, 2.0, 5.0] {
            assert!((s.convolution(x) - 0.5 * (-x as f64).exp()).abs() < 1e-4, "{x}");
        }
    }

    #[test]
    fn wiener_hopf_refuses_increasing_density() {
        let spec = DistributionSpec::tabulated_from_fn(vec![0.0, 0.5, 1.0], |x| 0.5 + x);
        let err = SymmetrizedLaw::new(&spec, 100).unwrap_err();
        assert!(err.to_string().contains("nonincreasing"));
    }

    #[test]
    fn wiener_hopf_small_run() {
        let cfg = WienerHopfConfig {
            paths: 5000,
            max_steps: 10_000,
            seed: 4,
            grid_intervals: 2000,
        };
        let r = wiener_hopf_check(&DistributionSpec::Exponential { rate: 1.0 }, &cfg, None).unwrap();
        assert!(r.ks < 0.03, "{r:?}");
        assert!((r.acceptance_rate - 0.5).abs() < 4.0 * r.acceptance_std_error, "{r:?}");
    }
}
