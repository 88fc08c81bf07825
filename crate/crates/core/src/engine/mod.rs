//! Coupled trajectory simulation.
//!
//! All starting points of a replica are driven by one common map sequence.
//! Replica `r` draws the parameters of step `n` from the counter-based
//! stream at `(seed, r, n)`, so results do not depend on worker count or
//! scheduling. The log-product S_n = Σ log A_k is the primary state;
//! A_{0,n} = exp(S_n) is derived on demand.

mod ladder;
pub mod output;

pub use ladder::{ladder_epochs, LadderDecomposition, LadderKind};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::ExtendedPoint;
use crate::maps::{Family, System, SystemSpec};
use crate::rng::ReplicaStream;
use crate::wide::Wide;
use ladder::LadderTracker;

/// Which steps of a trajectory are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordMode {
    /// Every step, plus the sampled map parameters.
    Full,
    /// Every k-th step, the final step, and every step at which S_n sets a
    /// new strict maximum or minimum.
    Strided(u64),
    /// Only the initial and final step.
    SummaryOnly,
}

fn default_height() -> f64 {
    1.0
}

fn default_record() -> RecordMode {
    RecordMode::Full
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationPlan {
    pub system: SystemSpec,
    pub starting_points: Vec<f64>,
    pub horizon: u64,
    pub replicas: u64,
    pub seed: u64,
    #[serde(default)]
    pub track_extended: bool,
    #[serde(default = "default_height")]
    pub extended_height: f64,
    #[serde(default = "default_record")]
    pub record: RecordMode,
}

impl SimulationPlan {
    pub fn new(system: SystemSpec, starting_points: Vec<f64>, horizon: u64, replicas: u64, seed: u64) -> Self {
        SimulationPlan {
            system,
            starting_points,
            horizon,
            replicas,
            seed,
            track_extended: false,
            extended_height: 1.0,
            record: RecordMode::Full,
        }
    }

    pub fn with_record(mut self, record: RecordMode) -> Self {
        self.record = record;
        self
    }
}

/// Trajectories of one replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryBundle {
    pub replica: u64,
    pub horizon: u64,
    pub starting_points: Vec<f64>,
    /// Recorded step indices, increasing, starting at 0.
    pub steps: Vec<u64>,
    /// `paths[i][k]` is X at `steps[k]` from `starting_points[i]`. Values
    /// beyond the `f64` range saturate to infinity.
    pub paths: Vec<Vec<f64>>,
    /// S at the recorded steps.
    pub log_products: Vec<f64>,
    /// M = max(0, S_1, ..., S_n) at the recorded steps.
    pub running_max: Vec<f64>,
    /// (a_n, b_n) for n = 1..=horizon, kept in full recording mode.
    pub params: Option<Vec<(f64, f64)>>,
    /// log of the initial extended height, when the lift is tracked.
    pub log_height0: Option<f64>,
}

impl TrajectoryBundle {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// A_{0,n} at recorded position `k`.
    pub fn product(&self, k: usize) -> f64 {
        self.log_products[k].exp()
    }

    /// Index of a starting point within the bundle.
    pub fn start_index(&self, x: f64) -> Option<usize> {
        self.starting_points.iter().position(|&s| s == x)
    }

    /// The lifted point (X_n^x, a₀·A_{0,n}) at recorded position `k`.
    pub fn extended_point(&self, start: usize, k: usize) -> Result<ExtendedPoint> {
        let lh = self
            .log_height0
            .ok_or_else(|| Error::Unsupported("bundle was simulated without track_extended".into()))?;
        ExtendedPoint::new(self.paths[start][k], (lh + self.log_products[k]).exp())
    }

    /// Partial sums of the b-parameters, W_0 = 0, W_n = b_1 + ... + b_n.
    /// Requires full recording.
    pub fn b_walk(&self) -> Result<Vec<f64>> {
        let params = self
            .params
            .as_ref()
            .ok_or_else(|| Error::Unsupported("b_walk needs record = full".into()))?;
        let mut w = Vec::with_capacity(params.len() + 1);
        w.push(0.0);
        let mut acc = 0.0;
        for &(_, b) in params {
            acc += b;
            w.push(acc);
        }
        Ok(w)
    }
}

/// A plan checked against its system.
#[derive(Debug, Clone)]
pub struct Simulator {
    plan: SimulationPlan,
    system: System,
}

impl Simulator {
    pub fn new(plan: SimulationPlan) -> Result<Self> {
        if plan.horizon < 1 {
            return Err(Error::config("horizon", "must be >= 1"));
        }
        if plan.replicas < 1 {
            return Err(Error::config("replicas", "must be >= 1"));
        }
        if plan.replicas > u64::from(u32::MAX) + 1 {
            return Err(Error::config("replicas", "at most 2^32 replicas per seed"));
        }
        if plan.starting_points.is_empty() {
            return Err(Error::config("starting_points", "must be nonempty"));
        }
        let system = System::new(plan.system.clone())?;
        let reflected = system.family() != Family::Affine;
        for (i, &x) in plan.starting_points.iter().enumerate() {
            if !x.is_finite() || (reflected && x < 0.0) {
                return Err(Error::config(
                    format!("starting_points[{i}]"),
                    "starting points of reflected systems must be finite and >= 0",
                ));
            }
        }
        if let RecordMode::Strided(0) = plan.record {
            return Err(Error::config("record", "stride must be >= 1"));
        }
        if !(plan.extended_height > 0.0) || !plan.extended_height.is_finite() {
            return Err(Error::config("extended_height", "must be positive"));
        }
        Ok(Simulator { plan, system })
    }

    pub fn plan(&self) -> &SimulationPlan {
        &self.plan
    }

    pub fn system(&self) -> &System {
        &self.system
    }

    pub fn stream(&self, replica: u64) -> ReplicaStream {
        ReplicaStream::new(self.plan.seed, replica)
    }

    /// (a_n, b_n) of replica `replica` at step `n >= 1`.
    #[inline]
    pub fn params_at(&self, replica: u64, n: u64) -> (f64, f64) {
        let mut rng = self.stream(replica).step(n);
        self.system.sample_params(&mut rng)
    }

    /// Simulates one replica.
    pub fn run_replica(&self, replica: u64) -> Result<TrajectoryBundle> {
        let plan = &self.plan;
        let starts = &plan.starting_points;
        let mut state: Vec<Wide> = starts.iter().map(|&x| Wide::from_f64(x)).collect();
        let full = plan.record == RecordMode::Full;
        let cap = match plan.record {
            RecordMode::Full => plan.horizon as usize + 1,
            RecordMode::Strided(k) => (plan.horizon / k) as usize + 2,
            RecordMode::SummaryOnly => 2,
        };
        let mut bundle = TrajectoryBundle {
            replica,
            horizon: plan.horizon,
            starting_points: starts.clone(),
            steps: Vec::with_capacity(cap),
            paths: vec![Vec::with_capacity(cap); starts.len()],
            log_products: Vec::with_capacity(cap),
            running_max: Vec::with_capacity(cap),
            params: if full {
                Some(Vec::with_capacity(plan.horizon as usize))
            } else {
                None
            },
            log_height0: plan.track_extended.then(|| plan.extended_height.ln()),
        };
        let mut s = 0.0f64;
        let mut m = 0.0f64;
        let record = |bundle: &mut TrajectoryBundle, n: u64, state: &[Wide], s: f64, m: f64| {
            bundle.steps.push(n);
            for (p, v) in bundle.paths.iter_mut().zip(state) {
                p.push(v.to_f64());
            }
            bundle.log_products.push(s);
            bundle.running_max.push(m);
        };
        record(&mut bundle, 0, &state, s, m);
        let mut up = LadderTracker::new(LadderKind::AscendingStrict, 0.0);
        let mut down = LadderTracker::new(LadderKind::DescendingStrict, 0.0);
        let stream = self.stream(replica);
        for n in 1..=plan.horizon {
            let mut rng = stream.step(n);
            let (a, b) = self.system.sample_params(&mut rng);
            if !(a > 0.0) || !a.is_finite() || !b.is_finite() {
                return Err(Error::Numerical {
                    replica,
                    step: n,
                    message: format!("sampled invalid map parameters a={a}, b={b}"),
                });
            }
            let f = self.system.map(a, b);
            for v in state.iter_mut() {
                *v = f.apply_wide(*v);
                if !v.is_finite() {
                    return Err(Error::Numerical {
                        replica,
                        step: n,
                        message: "trajectory value is not finite".into(),
                    });
                }
            }
            s += a.ln();
            m = m.max(s);
            if let Some(p) = bundle.params.as_mut() {
                p.push((a, b));
            }
            let keep = match plan.record {
                RecordMode::Full => true,
                RecordMode::Strided(k) => {
                    let ladder = up.observe(s) | down.observe(s);
                    ladder || n % k == 0 || n == plan.horizon
                }
                RecordMode::SummaryOnly => n == plan.horizon,
            };
            if keep {
                record(&mut bundle, n, &state, s, m);
            }
        }
        Ok(bundle)
    }

    /// Every replica, in replica order.
    pub fn simulate(&self, workers: Option<usize>) -> Result<Vec<TrajectoryBundle>> {
        self.simulate_with(workers, Ok)
    }

    /// Runs every replica and reduces each bundle with `f` as soon as it is
    /// produced; results come back in replica order.
    pub fn simulate_with<T: Send>(
        &self,
        workers: Option<usize>,
        f: impl Fn(TrajectoryBundle) -> Result<T> + Sync,
    ) -> Result<Vec<T>> {
        par_replicas(self.plan.replicas, workers, |r| f(self.run_replica(r)?))
    }

    /// Like [`Simulator::simulate_with`] for the replicas `first..first + count`
    /// only, so long runs can be processed in bounded memory.
    pub fn simulate_range<T: Send>(
        &self,
        first: u64,
        count: u64,
        workers: Option<usize>,
        f: impl Fn(TrajectoryBundle) -> Result<T> + Sync,
    ) -> Result<Vec<T>> {
        let count = count.min(self.plan.replicas.saturating_sub(first));
        par_replicas(count, workers, |k| f(self.run_replica(first + k)?))
    }

    /// Right process R_n^x = F_1 ∘ ⋯ ∘ F_n(x) for the affine family, built
    /// from R_n(x) = A_{0,n}·x + Z_n with Z_n = Z_{n−1} + A_{0,n−1}·B_n.
    pub fn right_process(&self, replica: u64) -> Result<RightProcess> {
        if self.system.family() != Family::Affine {
            return Err(Error::Unsupported(
                "right process is only available for the affine family".into(),
            ));
        }
        let plan = &self.plan;
        let starts = &plan.starting_points;
        let mut steps = vec![0];
        let mut values: Vec<Vec<f64>> = starts.iter().map(|&x| vec![x]).collect();
        let mut prod = Wide::from_f64(1.0);
        let mut z = Wide::ZERO;
        let stream = self.stream(replica);
        for n in 1..=plan.horizon {
            let (a, b) = self.system.sample_params(&mut stream.step(n));
            z = z.add(prod.mul_f64(b));
            prod = prod.mul_f64(a);
            let keep = match plan.record {
                RecordMode::Full => true,
                RecordMode::Strided(k) => n % k == 0 || n == plan.horizon,
                RecordMode::SummaryOnly => n + 1 >= plan.horizon,
            };
            if keep {
                steps.push(n);
                for (v, &x) in values.iter_mut().zip(starts) {
                    v.push(prod.mul_f64(x).add(z).to_f64());
                }
            }
        }
        Ok(RightProcess {
            replica,
            starting_points: starts.clone(),
            steps,
            values,
        })
    }

    pub fn right_processes(&self, workers: Option<usize>) -> Result<Vec<RightProcess>> {
        par_replicas(self.plan.replicas, workers, |r| self.right_process(r))
    }
}

/// Convenience wrapper: validate `plan` and simulate every replica.
pub fn simulate(plan: SimulationPlan, workers: Option<usize>) -> Result<Vec<TrajectoryBundle>> {
    Simulator::new(plan)?.simulate(workers)
}

/// Right-process paths of one replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RightProcess {
    pub replica: u64,
    pub starting_points: Vec<f64>,
    pub steps: Vec<u64>,
    /// `values[i][k]` is R at `steps[k]` from `starting_points[i]`.
    pub values: Vec<Vec<f64>>,
}

/// Runs `f` for replicas `0..n` on at most `workers` threads; results are
/// returned in replica order whatever the scheduling.
pub fn par_replicas<T: Send>(
    n: u64,
    workers: Option<usize>,
    f: impl Fn(u64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::config("workers", e.to_string()))?;
            pool.install(|| (0..n).into_par_iter().map(&f).collect())
        }
        None => (0..n).into_par_iter().map(&f).collect(),
    }
}

/// Outcome of [`embedded_bundle`].
#[derive(Debug, Clone, PartialEq)]
pub struct Embedded {
    pub bundle: TrajectoryBundle,
    /// Set when some epochs lay beyond the horizon and were dropped.
    pub truncated: bool,
}

/// Sub-samples a bundle at index 0 and the given epochs: X̄_k = X_{λ(k)}.
/// The embedded bundle keeps the original step indices; per-step map
/// parameters are dropped.
pub fn embedded_bundle(bundle: &TrajectoryBundle, epochs: &LadderDecomposition) -> Result<Embedded> {
    let mut positions = vec![0usize];
    let mut truncated = false;
    for &e in &epochs.epochs {
        if e > bundle.horizon {
            truncated = true;
            break;
        }
        match bundle.steps.binary_search(&e) {
            Ok(k) => positions.push(k),
            Err(_) => {
                return Err(Error::Unsupported(format!(
                    "epoch {e} was not recorded; embed a fully recorded bundle"
                )))
            }
        }
    }
    let pick = |v: &Vec<f64>| positions.iter().map(|&k| v[k]).collect::<Vec<f64>>();
    let log_products = pick(&bundle.log_products);
    let mut running_max = Vec::with_capacity(log_products.len());
    let mut m = 0.0f64;
    for (i, &s) in log_products.iter().enumerate() {
        if i > 0 {
            m = m.max(s);
        }
        running_max.push(m);
    }
    Ok(Embedded {
        bundle: TrajectoryBundle {
            replica: bundle.replica,
            horizon: bundle.horizon,
            starting_points: bundle.starting_points.clone(),
            steps: positions.iter().map(|&k| bundle.steps[k]).collect(),
            paths: bundle.paths.iter().map(pick).collect(),
            log_products,
            running_max,
            params: None,
            log_height0: bundle.log_height0,
        },
        truncated,
    })
}
