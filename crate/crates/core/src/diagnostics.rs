//! Finite-horizon witnesses for contraction, escape and recurrence.
//!
//! Every verdict here is a heuristic read off a finite simulation and is
//! reported together with the thresholds and window that produced it.

use serde::{Deserialize, Serialize};

use crate::distributions::Regime;
use crate::engine::{ladder_epochs, LadderKind, RightProcess, TrajectoryBundle};
use crate::error::{Error, Result};
use crate::maps::{Family, System};
use crate::measures::EmpiricalMeasure;

/// Verdict of a vanishing-statistic witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    VanishingIndicative,
    BoundedAway,
    Inconclusive,
}

/// Steps over which a tail statistic is taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Window {
    /// Recorded steps n with n > (1 − fraction)·horizon.
    Tail { fraction: f64 },
    /// Ladder epochs of the log-product S_n, restricted to the tail
    /// window of the given fraction (1 keeps every epoch).
    LadderEpochs { kind: LadderKind, fraction: f64 },
}

impl Window {
    pub fn tail(fraction: f64) -> Self {
        Window::Tail { fraction }
    }

    fn fraction(&self) -> f64 {
        match *self {
            Window::Tail { fraction } | Window::LadderEpochs { fraction, .. } => fraction,
        }
    }

    /// Positions into `bundle.steps` that belong to the window.
    pub fn positions(&self, bundle: &TrajectoryBundle) -> Result<Vec<usize>> {
        let f = self.fraction();
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::config("window.fraction", "must lie in (0, 1]"));
        }
        let start = (1.0 - f) * bundle.horizon as f64;
        let in_tail = |n: u64| n > 0 && n as f64 > start;
        match *self {
            Window::Tail { .. } => Ok((0..bundle.steps.len()).filter(|&k| in_tail(bundle.steps[k])).collect()),
            Window::LadderEpochs { kind, .. } => {
                // epochs are computed on the recorded series; strided
                // recording keeps strict extrema, so strict kinds are exact
                let lad = ladder_epochs(&bundle.log_products, kind);
                Ok(lad
                    .epochs
                    .iter()
                    .map(|&e| e as usize)
                    .filter(|&k| in_tail(bundle.steps[k]))
                    .collect())
            }
        }
    }
}

/// A statistic over the visits inside a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailStat {
    /// Steps in the window.
    pub window_steps: u64,
    /// Steps in the window at which X^x was in the ball [0, r].
    pub visits: u64,
    /// Recorded steps n ≥ 1 of the whole run at which X^x was in the ball.
    pub run_visits: u64,
    /// Supremum of the statistic over the window (0 without visits).
    pub sup: f64,
    /// Infimum over the visits (infinite without visits).
    pub inf: f64,
}

impl TailStat {
    fn collect(values: impl Iterator<Item = Option<f64>>, run_visits: u64) -> Self {
        let mut s = TailStat {
            window_steps: 0,
            visits: 0,
            run_visits,
            sup: 0.0,
            inf: f64::INFINITY,
        };
        for v in values {
            s.window_steps += 1;
            if let Some(v) = v {
                s.visits += 1;
                s.sup = s.sup.max(v);
                s.inf = s.inf.min(v);
            }
        }
        s
    }

    /// Verdict for a single path against `threshold`.
    pub fn verdict(&self, threshold: f64) -> Verdict {
        if self.visits == 0 {
            Verdict::Inconclusive
        } else if self.sup < threshold {
            Verdict::VanishingIndicative
        } else if self.inf > threshold {
            Verdict::BoundedAway
        } else {
            Verdict::Inconclusive
        }
    }

    /// Verdict for a statistic that vanishes off the ball, such as the
    /// escape statistic: a window without visits has supremum 0, and only a
    /// run that never enters the ball is inconclusive.
    pub fn escape_verdict(&self, threshold: f64) -> Verdict {
        if self.run_visits == 0 {
            Verdict::Inconclusive
        } else if self.sup < threshold {
            Verdict::VanishingIndicative
        } else if self.visits > 0 && self.inf > threshold {
            Verdict::BoundedAway
        } else {
            Verdict::Inconclusive
        }
    }
}

fn ball_visits(bundle: &TrajectoryBundle, path: &[f64], r: f64) -> u64 {
    bundle.steps.iter().zip(path).filter(|&(&n, &v)| n >= 1 && v <= r).count() as u64
}

fn index_of(bundle: &TrajectoryBundle, x: f64) -> Result<usize> {
    bundle
        .start_index(x)
        .ok_or_else(|| Error::domain(format!("{x} is not a starting point of the bundle")))
}

/// Tail statistic of |X_n^x − X_n^y|·1[X_n^x ≤ r].
pub fn local_contraction_stat(bundle: &TrajectoryBundle, x: f64, y: f64, r: f64, window: Window) -> Result<TailStat> {
    if !(r > 0.0) {
        return Err(Error::config("radius", "must be positive"));
    }
    let (i, j) = (index_of(bundle, x)?, index_of(bundle, y)?);
    let px = &bundle.paths[i];
    let py = &bundle.paths[j];
    let pos = window.positions(bundle)?;
    Ok(TailStat::collect(
        pos.into_iter().map(|k| (px[k] <= r).then(|| (px[k] - py[k]).abs())),
        ball_visits(bundle, px, r),
    ))
}

/// Tail statistic of A_{0,n}·1[X_n^x ≤ r].
pub fn extended_escape_stat(bundle: &TrajectoryBundle, x: f64, r: f64, window: Window) -> Result<TailStat> {
    if !(r > 0.0) {
        return Err(Error::config("radius", "must be positive"));
    }
    let i = index_of(bundle, x)?;
    let px = &bundle.paths[i];
    let pos = window.positions(bundle)?;
    Ok(TailStat::collect(
        pos.into_iter().map(|k| (px[k] <= r).then(|| bundle.log_products[k].exp())),
        ball_visits(bundle, px, r),
    ))
}

/// D_n = d(X_n^x, X_n^y)/A_{0,n} at the recorded steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedDistance {
    pub steps: Vec<u64>,
    pub values: Vec<f64>,
    /// sup of D_n over the final quarter of the horizon.
    pub tail_sup: f64,
}

/// Computes D_n in log space. For the reflected families D_n is
/// nonincreasing; with full recording (map parameters present) every step
/// is checked against that, allowing for the rounding of one map evaluation
/// per step, and a
/// violation is an assertion error.
pub fn normalized_distance(bundle: &TrajectoryBundle, x: f64, y: f64, family: Family) -> Result<NormalizedDistance> {
    let (i, j) = (index_of(bundle, x)?, index_of(bundle, y)?);
    let px = &bundle.paths[i];
    let py = &bundle.paths[j];
    let mut values = Vec::with_capacity(bundle.len());
    let mut zero = false;
    for k in 0..bundle.len() {
        let d = (px[k] - py[k]).abs();
        zero |= d == 0.0;
        let v = if zero {
            0.0
        } else if d.is_finite() {
            (d.ln() - bundle.log_products[k]).exp()
        } else {
            f64::NAN
        };
        values.push(v);
    }
    if let (Some(params), true) = (&bundle.params, family != Family::Affine) {
        let eps = f64::EPSILON;
        for k in 1..values.len() {
            let (prev, cur) = (values[k - 1], values[k]);
            if prev.is_nan() || cur.is_nan() {
                continue;
            }
            // rounding of |a·x − b| is relative to a·x + |b|, not to the result
            let (a, b) = params[k - 1];
            let scale = a * (px[k - 1] + py[k - 1]) + 2.0 * b.abs();
            let slack = 4.0 * eps * scale / bundle.log_products[k].exp();
            if cur > prev * (1.0 + 4.0 * eps) + slack {
                return Err(Error::Assertion(format!(
                    "normalized distance increased at step {}: {prev} -> {cur}",
                    bundle.steps[k]
                )));
            }
        }
    }
    let start = 0.75 * bundle.horizon as f64;
    let tail_sup = bundle
        .steps
        .iter()
        .zip(&values)
        .filter(|(&n, _)| n as f64 >= start)
        .map(|(_, &v)| v)
        .fold(0.0, f64::max);
    Ok(NormalizedDistance {
        steps: bundle.steps.clone(),
        values,
        tail_sup,
    })
}

/// Thresholds for aggregating per-replica verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessThresholds {
    /// A path's statistic is "vanishing" when its tail sup is below this.
    pub threshold: f64,
    /// Share of replicas that must be vanishing.
    pub vanishing_share: f64,
    /// Share of replicas that must be bounded away.
    pub bounded_share: f64,
}

impl Default for WitnessThresholds {
    fn default() -> Self {
        WitnessThresholds {
            threshold: 1e-6,
            vanishing_share: 0.99,
            bounded_share: 0.9,
        }
    }
}

/// One statistic aggregated across replicas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub per_replica: Vec<TailStat>,
    pub vanishing_share: f64,
    pub bounded_share: f64,
    pub inconclusive_share: f64,
    pub verdict: Verdict,
    /// Whether a window without visits counts as a zero statistic.
    pub vanishes_off_ball: bool,
}

impl WitnessSummary {
    /// Aggregates statistics that need visits inside the window.
    pub fn from_stats(per_replica: Vec<TailStat>, t: &WitnessThresholds) -> Self {
        Self::aggregate(per_replica, t, false)
    }

    /// Aggregates escape statistics, see [`TailStat::escape_verdict`].
    pub fn from_escape_stats(per_replica: Vec<TailStat>, t: &WitnessThresholds) -> Self {
        Self::aggregate(per_replica, t, true)
    }

    fn aggregate(per_replica: Vec<TailStat>, t: &WitnessThresholds, vanishes_off_ball: bool) -> Self {
        let n = per_replica.len().max(1) as f64;
        let verdict_of = |s: &TailStat| {
            if vanishes_off_ball {
                s.escape_verdict(t.threshold)
            } else {
                s.verdict(t.threshold)
            }
        };
        let count = |v: Verdict| per_replica.iter().filter(|s| verdict_of(s) == v).count() as f64 / n;
        let vanishing_share = count(Verdict::VanishingIndicative);
        let bounded_share = count(Verdict::BoundedAway);
        let inconclusive_share = count(Verdict::Inconclusive);
        let verdict = if vanishing_share >= t.vanishing_share {
            Verdict::VanishingIndicative
        } else if bounded_share >= t.bounded_share {
            Verdict::BoundedAway
        } else {
            Verdict::Inconclusive
        };
        WitnessSummary {
            per_replica,
            vanishing_share,
            bounded_share,
            inconclusive_share,
            verdict,
            vanishes_off_ball,
        }
    }

    fn informative(&self, s: &TailStat) -> bool {
        if self.vanishes_off_ball {
            s.run_visits > 0
        } else {
            s.visits > 0
        }
    }

    /// Share of informative replicas whose tail sup exceeds `level`.
    pub fn share_above(&self, level: f64) -> f64 {
        let n = self.per_replica.len().max(1) as f64;
        self.per_replica.iter().filter(|s| self.informative(s) && s.sup > level).count() as f64 / n
    }

    /// Share of informative replicas whose tail sup is below `level`.
    pub fn share_below(&self, level: f64) -> f64 {
        let n = self.per_replica.len().max(1) as f64;
        self.per_replica.iter().filter(|s| self.informative(s) && s.sup < level).count() as f64 / n
    }
}

/// Contraction witnesses for one pair of starting points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub window: Window,
    pub thresholds: WitnessThresholds,
    /// |X^x − X^y|·1[X^x ≤ r]
    pub local_distance: WitnessSummary,
    /// sup of D_n over the final quarter, per replica
    pub normalized_distance_sup: Vec<f64>,
    /// A_{0,n}·1[X^x ≤ r]
    pub escape: WitnessSummary,
}

pub fn contraction_report(
    bundles: &[TrajectoryBundle],
    family: Family,
    x: f64,
    y: f64,
    radius: f64,
    window: Window,
    thresholds: WitnessThresholds,
) -> Result<ContractionReport> {
    let mut local = Vec::with_capacity(bundles.len());
    let mut esc = Vec::with_capacity(bundles.len());
    let mut dsup = Vec::with_capacity(bundles.len());
    for b in bundles {
        local.push(local_contraction_stat(b, x, y, radius, window)?);
        esc.push(extended_escape_stat(b, x, radius, window)?);
        dsup.push(normalized_distance(b, x, y, family)?.tail_sup);
    }
    Ok(ContractionReport {
        x,
        y,
        radius,
        window,
        thresholds,
        local_distance: WitnessSummary::from_stats(local, &thresholds),
        normalized_distance_sup: dsup,
        escape: WitnessSummary::from_escape_stats(esc, &thresholds),
    })
}

/// Outcome of [`classify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    RecurrentIndicative,
    TransientIndicative,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyThresholds {
    /// Quantile of the pooled first-quarter values defining r₀.
    pub quantile: f64,
    /// Transient when the final-quarter minimum exceeds factor·r₀ ...
    pub escape_factor: f64,
    /// ... in at least this share of replicas.
    pub transient_share: f64,
    /// Recurrent when at least this share of replicas visits [0, r₀] in
    /// the final quarter.
    pub recurrent_share: f64,
}

impl Default for ClassifyThresholds {
    fn default() -> Self {
        ClassifyThresholds {
            quantile: 0.9,
            escape_factor: 10.0,
            transient_share: 0.95,
            recurrent_share: 0.9,
        }
    }
}

/// Per-replica evidence used by [`classify`]; small enough to keep for
/// every replica of a long run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaEvidence {
    /// |X_n − o| at recorded steps of the first quarter (n ≥ 1).
    pub first_quarter: Vec<f64>,
    /// Minimum of |X_n − o| over the recorded steps of the final quarter.
    pub final_quarter_min: f64,
}

impl ReplicaEvidence {
    /// Evidence for starting point `start` measured from reference `o`.
    pub fn from_bundle(bundle: &TrajectoryBundle, start: usize, o: f64) -> Self {
        let h = bundle.horizon as f64;
        let path = &bundle.paths[start];
        let mut first = Vec::new();
        let mut fmin = f64::INFINITY;
        for (k, &n) in bundle.steps.iter().enumerate() {
            let v = (path[k] - o).abs();
            let t = n as f64;
            if n >= 1 && t <= 0.25 * h {
                first.push(v);
            }
            if t >= 0.75 * h {
                fmin = fmin.min(v);
            }
        }
        ReplicaEvidence {
            first_quarter: first,
            final_quarter_min: fmin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub classification: Classification,
    pub horizon: u64,
    pub replicas: u64,
    pub thresholds: ClassifyThresholds,
    /// r₀ as computed from the pooled first-quarter values.
    pub r0: f64,
    /// Share of replicas whose final quarter visits [0, r₀].
    pub return_share: f64,
    /// Share of replicas whose final-quarter minimum exceeds factor·r₀.
    pub escape_share: f64,
}

fn quantile_of(values: &mut [f64], q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    if values.is_empty() {
        return f64::NAN;
    }
    let idx = ((values.len() - 1) as f64 * q).round() as usize;
    values[idx]
}

/// Classifies from per-replica evidence. Deterministic in its inputs.
pub fn classify_evidence(
    evidence: &[ReplicaEvidence],
    horizon: u64,
    t: &ClassifyThresholds,
) -> Result<ClassificationReport> {
    if evidence.len() < 30 {
        return Err(Error::domain(format!(
            "classification needs at least 30 replicas, got {}",
            evidence.len()
        )));
    }
    let mut pooled: Vec<f64> = evidence.iter().flat_map(|e| e.first_quarter.iter().copied()).collect();
    let r0 = quantile_of(&mut pooled, t.quantile);
    let n = evidence.len() as f64;
    let return_share = evidence.iter().filter(|e| e.final_quarter_min <= r0).count() as f64 / n;
    let escape_share = evidence
        .iter()
        .filter(|e| e.final_quarter_min > t.escape_factor * r0)
        .count() as f64
        / n;
    let classification = if !r0.is_finite() {
        Classification::Inconclusive
    } else if escape_share >= t.transient_share {
        Classification::TransientIndicative
    } else if return_share >= t.recurrent_share {
        Classification::RecurrentIndicative
    } else {
        Classification::Inconclusive
    };
    Ok(ClassificationReport {
        classification,
        horizon,
        replicas: evidence.len() as u64,
        thresholds: *t,
        r0,
        return_share,
        escape_share,
    })
}

/// Classifies the trajectories from starting point `x`, distances taken
/// from the reference point `o`.
pub fn classify(bundles: &[TrajectoryBundle], x: f64, o: f64, t: &ClassifyThresholds) -> Result<ClassificationReport> {
    let evidence = bundles
        .iter()
        .map(|b| Ok(ReplicaEvidence::from_bundle(b, index_of(b, x)?, o)))
        .collect::<Result<Vec<_>>>()?;
    let horizon = bundles.first().map_or(0, |b| b.horizon);
    classify_evidence(&evidence, horizon, t)
}

/// Limits of right-process paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FurstenbergLimit {
    pub tol: f64,
    /// Per replica, the declared limit or None when not converged.
    pub limits: Vec<Option<f64>>,
    pub converged: u64,
    pub mean: f64,
    pub dispersion: f64,
    /// Law of the declared limits.
    pub measure: Option<EmpiricalMeasure>,
}

/// Declares R_n → Z for every replica whose last two recorded values differ
/// by less than `tol`. Refused unless the system is affine and contractive.
pub fn furstenberg_limit(system: &System, paths: &[RightProcess], start: usize, tol: f64, bins: usize) -> Result<FurstenbergLimit> {
    if system.family() != Family::Affine {
        return Err(Error::Unsupported("the right-process limit is defined for the affine family".into()));
    }
    let regime = system.lipschitz_moments(1.0)?.regime;
    if regime != Regime::Contractive {
        return Err(Error::Unsupported(format!(
            "the right process converges only in the contractive regime (regime is {regime:?})"
        )));
    }
    let limits: Vec<Option<f64>> = paths
        .iter()
        .map(|p| {
            let v = &p.values[start];
            let n = v.len();
            (n >= 2 && (v[n - 1] - v[n - 2]).abs() < tol).then(|| v[n - 1])
        })
        .collect();
    let got: Vec<f64> = limits.iter().flatten().copied().collect();
    let k = got.len() as f64;
    let mean = got.iter().sum::<f64>() / k;
    let dispersion = (got.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / k).sqrt();
    let measure = if got.is_empty() {
        None
    } else {
        let lo = got.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = got.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pad = if hi > lo { (hi - lo) * 1e-9 } else { 0.5 };
        let mut m = EmpiricalMeasure::uniform_bins(lo - pad, hi + pad, bins.max(1))?;
        for &z in &got {
            m.add(z, 1.0);
        }
        Some(m)
    };
    Ok(FurstenbergLimit {
        tol,
        limits,
        converged: got.len() as u64,
        mean,
        dispersion,
        measure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DistributionSpec;
    use crate::engine::{simulate, RecordMode, SimulationPlan, Simulator};
    use crate::maps::SystemSpec;

    fn example_95() -> SystemSpec {
        SystemSpec::with_pairs(Family::ReflectedAffine, &[(2.0, 1.0, 0.5), (0.5, 1.0, 0.5)])
    }

    #[test]
    fn equal_points_have_zero_statistic() {
        let sys = SystemSpec::reflected_rw(DistributionSpec::Exponential { rate: 1.0 });
        let b = &simulate(SimulationPlan::new(sys, vec![1.0], 200, 1, 0), None).unwrap()[0];
        let s = local_contraction_stat(b, 1.0, 1.0, 100.0, Window::tail(0.5)).unwrap();
        assert_eq!(s.sup, 0.0);
        assert!(s.visits > 0);
        assert_eq!(s.verdict(1e-6), Verdict::VanishingIndicative);
    }

    #[test]
    fn zero_visits_is_inconclusive() {
        let sys = SystemSpec::with_laws(
            Family::Affine,
            DistributionSpec::Constant { c: 2.0 },
            DistributionSpec::Constant { c: 1.0 },
        );
        let b = &simulate(SimulationPlan::new(sys, vec![0.0, 1.0], 50, 1, 0), None).unwrap()[0];
        let s = local_contraction_stat(b, 0.0, 1.0, 1.0, Window::tail(0.5)).unwrap();
        assert_eq!(s.visits, 0);
        assert_eq!(s.verdict(1e-6), Verdict::Inconclusive);
    }

    #[test]
    fn example_95_ladder_window_distance() {
        // float trajectories from 1/3 lose accuracy as 2^{S_n}·ε, so keep
        // the horizon short enough that S_n stays small
        for seed in 0..50 {
            let p = SimulationPlan::new(example_95(), vec![1.0, 1.0 / 3.0], 60, 1, seed);
            let b = &simulate(p, None).unwrap()[0];
            let w = Window::LadderEpochs {
                kind: LadderKind::AscendingStrict,
                fraction: 1.0,
            };
            let s = local_contraction_stat(b, 1.0, 1.0 / 3.0, 1.0, w).unwrap();
            if s.visits > 0 {
                assert!((s.sup - 2.0 / 3.0).abs() < 1e-9, "seed {seed}: {s:?}");
                assert!((s.inf - 2.0 / 3.0).abs() < 1e-9, "seed {seed}: {s:?}");
            }
        }
    }

    #[test]
    fn normalized_distance_examples() {
        let sys = SystemSpec::with_laws(
            Family::ReflectedAffine,
            DistributionSpec::LogNormal { mu: 0.0, sigma: 0.7 },
            DistributionSpec::Exponential { rate: 1.0 },
        );
        for seed in 0..20 {
            let b = &simulate(SimulationPlan::new(sys.clone(), vec![0.5, 3.0], 300, 1, seed), None).unwrap()[0];
            let d = normalized_distance(b, 0.5, 3.0, Family::ReflectedAffine).unwrap();
            assert_eq!(d.values[0], 2.5);
            for (k, &v) in d.values.iter().enumerate() {
                assert!(v <= 2.5 * (1.0 + 1e-9));
                // D_n·A_{0,n} recovers the distance
                let dist = (b.paths[0][k] - b.paths[1][k]).abs();
                if v > 0.0 && dist.is_finite() && dist > 0.0 {
                    assert!((v * b.product(k) / dist - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn escape_deterministic_half() {
        let sys = SystemSpec::with_pairs(Family::Affine, &[(0.5, 1.0, 1.0)]);
        let b = &simulate(SimulationPlan::new(sys, vec![0.0], 40, 1, 0), None).unwrap()[0];
        let s = extended_escape_stat(b, 0.0, 3.0, Window::tail(1.0)).unwrap();
        assert_eq!(s.visits, 40);
        assert!((s.sup - 0.5).abs() < 1e-15);
        assert!((s.inf / 0.5f64.powi(40) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn classify_expanding_and_recurrent() {
        let exp = SystemSpec::with_laws(
            Family::Affine,
            DistributionSpec::Constant { c: 2.0 },
            DistributionSpec::Constant { c: 1.0 },
        );
        let b = simulate(SimulationPlan::new(exp, vec![1.0], 400, 30, 0), None).unwrap();
        let r = classify(&b, 1.0, 0.0, &ClassifyThresholds::default()).unwrap();
        assert_eq!(r.classification, Classification::TransientIndicative);

        let rw = SystemSpec::reflected_rw(DistributionSpec::Exponential { rate: 1.0 });
        let b = simulate(SimulationPlan::new(rw, vec![0.0], 4000, 40, 1), None).unwrap();
        let r = classify(&b, 0.0, 0.0, &ClassifyThresholds::default()).unwrap();
        assert_eq!(r.classification, Classification::RecurrentIndicative);
        assert_eq!(classify(&b, 0.0, 0.0, &ClassifyThresholds::default()).unwrap(), r);
        assert!(classify(&b[..10], 0.0, 0.0, &ClassifyThresholds::default()).is_err());
    }

    #[test]
    fn furstenberg_examples() {
        let det = SystemSpec::with_pairs(Family::Affine, &[(0.5, 1.0, 1.0)]);
        let sim = Simulator::new(SimulationPlan::new(det, vec![0.0], 80, 4, 0)).unwrap();
        let paths = sim.right_processes(None).unwrap();
        let f = furstenberg_limit(sim.system(), &paths, 0, 1e-12, 10).unwrap();
        assert_eq!(f.converged, 4);
        assert!((f.mean - 2.0).abs() < 1e-12);
        assert_eq!(f.dispersion, 0.0);

        let pm = SystemSpec::with_pairs(Family::Affine, &[(0.5, 1.0, 0.5), (0.5, -1.0, 0.5)]);
        let sim = Simulator::new(SimulationPlan::new(pm, vec![0.0], 80, 200, 1)).unwrap();
        let paths = sim.right_processes(None).unwrap();
        let f = furstenberg_limit(sim.system(), &paths, 0, 1e-9, 20).unwrap();
        assert_eq!(f.converged, 200);
        assert!(f.limits.iter().flatten().all(|z| z.abs() <= 2.0));
        // a smaller tolerance never moves a declared limit by more than tol
        let g = furstenberg_limit(sim.system(), &paths, 0, 1e-12, 20).unwrap();
        for (a, b) in f.limits.iter().zip(&g.limits) {
            if let (Some(a), Some(b)) = (a, b) {
                assert!((a - b).abs() <= 1e-9);
            }
        }

        let centered = SystemSpec::with_pairs(Family::Affine, &[(2.0, 1.0, 0.5), (0.5, 1.0, 0.5)]);
        let sim = Simulator::new(SimulationPlan::new(centered, vec![0.0], 10, 1, 0).with_record(RecordMode::Full)).unwrap();
        let paths = sim.right_processes(None).unwrap();
        assert!(matches!(furstenberg_limit(sim.system(), &paths, 0, 1e-9, 5), Err(Error::Unsupported(_))));
    }
}
