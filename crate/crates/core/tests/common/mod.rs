//! Property checks shared by the proptest suite and the acceptance runner.
//! Each check returns `Err(message)` describing the first violation.

#![allow(dead_code)]

use sdskit::engine::{RecordMode, SimulationPlan, Simulator, TrajectoryBundle};
use sdskit::hyperbolic::{extended_distance, poincare, ExtendedPoint, HalfPlanePoint};
use sdskit::maps::{Family, MapDescriptor, SystemSpec};

pub type Check = Result<(), String>;

pub const AXIOM_TOL: f64 = 1e-10;
pub const DILATION_TOL: f64 = 1e-12;

fn pt(x: f64, a: f64) -> ExtendedPoint {
    ExtendedPoint::new(x, a).expect("valid extended point")
}

fn dhat(p: ExtendedPoint, q: ExtendedPoint) -> f64 {
    extended_distance(p, q).expect("distance of valid points")
}

/// Identity, symmetry, positivity and the triangle inequality for d̂.
pub fn metric_axioms(p: (f64, f64), q: (f64, f64), r: (f64, f64)) -> Check {
    let (p, q, r) = (pt(p.0, p.1), pt(q.0, q.1), pt(r.0, r.1));
    if dhat(p, p).abs() > AXIOM_TOL {
        return Err(format!("d(p, p) = {} for {p:?}", dhat(p, p)));
    }
    let (pq, qp) = (dhat(p, q), dhat(q, p));
    if (pq - qp).abs() > AXIOM_TOL * (1.0 + pq) {
        return Err(format!("asymmetric: {pq} vs {qp}"));
    }
    if pq < 0.0 || (p != q && pq == 0.0) {
        return Err(format!("distance {pq} between distinct points {p:?}, {q:?}"));
    }
    let (pr, rq) = (dhat(p, r), dhat(r, q));
    if pq > pr + rq + AXIOM_TOL * (1.0 + pq) {
        return Err(format!("triangle: d(p,q) = {pq} > {pr} + {rq}"));
    }
    Ok(())
}

/// θ(λz, λw) = θ(z, w) for the half-plane metric, and the induced
/// invariance (x, a) ↦ (λx, λa) for d̂ on the half line.
pub fn dilation_invariance(z: (f64, f64), w: (f64, f64), lambda: f64) -> Check {
    let d0 = poincare(HalfPlanePoint::new(z.0, z.1), HalfPlanePoint::new(w.0, w.1)).map_err(|e| e.to_string())?;
    let d1 = poincare(
        HalfPlanePoint::new(lambda * z.0, lambda * z.1),
        HalfPlanePoint::new(lambda * w.0, lambda * w.1),
    )
    .map_err(|e| e.to_string())?;
    if (d0 - d1).abs() > DILATION_TOL * (1.0 + d0) {
        return Err(format!("θ changed under dilation by {lambda}: {d0} vs {d1}"));
    }
    let e0 = dhat(pt(z.0.abs(), z.1), pt(w.0.abs(), w.1));
    let e1 = dhat(pt(lambda * z.0.abs(), lambda * z.1), pt(lambda * w.0.abs(), lambda * w.1));
    if (e0 - e1).abs() > DILATION_TOL * (1.0 + e0) {
        return Err(format!("d̂ changed under dilation by {lambda}: {e0} vs {e1}"));
    }
    Ok(())
}

/// d̂(f̂p, f̂q) ≤ d̂(p, q) for the lift f̂(x, a) = (f(x), lip(f)·a).
pub fn lift_nonexpansive(f: &MapDescriptor, p: (f64, f64), q: (f64, f64)) -> Check {
    let (p, q) = (pt(p.0, p.1), pt(q.0, q.1));
    let fp = f.lift_apply(p).map_err(|e| e.to_string())?;
    let fq = f.lift_apply(q).map_err(|e| e.to_string())?;
    let (before, after) = (dhat(p, q), dhat(fp, fq));
    if after > before + AXIOM_TOL * (1.0 + before) {
        return Err(format!("{f:?} expands d̂: {before} -> {after}"));
    }
    Ok(())
}

/// A full-record bundle of a reflected affine system with lognormal slopes
/// and exponential offsets, started from `starts`.
pub fn reflected_affine_bundle(sigma: f64, starts: Vec<f64>, horizon: u64, seed: u64) -> TrajectoryBundle {
    let spec = SystemSpec::with_laws(
        Family::ReflectedAffine,
        sdskit::distributions::DistributionSpec::LogNormal { mu: 0.0, sigma },
        sdskit::distributions::DistributionSpec::Exponential { rate: 1.0 },
    );
    let plan = SimulationPlan::new(spec, starts, horizon, 1, seed).with_record(RecordMode::Full);
    Simulator::new(plan).expect("valid plan").run_replica(0).expect("finite path")
}

/// X_n^x ≤ Y_n^x where Y is the affine recursion driven by the same
/// (A_n, B_n) = (lip(F_n), F_n(0)); the reference point is 0.
pub fn domination(bundle: &TrajectoryBundle) -> Check {
    let params = bundle.params.as_ref().ok_or("bundle without parameters")?;
    for (i, &x) in bundle.starting_points.iter().enumerate() {
        let mut y = x;
        for (k, &(a, b)) in params.iter().enumerate() {
            y = a * y + b;
            let xn = bundle.paths[i][k + 1];
            if xn > y * (1.0 + 1e-12) + 1e-12 {
                return Err(format!("X_{} = {xn} exceeds Y = {y} from x = {x}", k + 1));
            }
        }
    }
    Ok(())
}

/// |X_n^x − X_n^y| ≤ A_{0,n}·|x − y| up to rounding of the paths.
pub fn lipschitz_bound(bundle: &TrajectoryBundle) -> Check {
    let starts = &bundle.starting_points;
    for i in 0..starts.len() {
        for j in i + 1..starts.len() {
            for k in 0..bundle.len() {
                let (xi, xj) = (bundle.paths[i][k], bundle.paths[j][k]);
                let bound = bundle.log_products[k].exp() * (starts[i] - starts[j]).abs();
                let slack = 1e-9 * (1.0 + xi.abs() + xj.abs());
                if (xi - xj).abs() > bound * (1.0 + 1e-9) + slack {
                    return Err(format!(
                        "step {}: |{xi} − {xj}| exceeds A·|x − y| = {bound}",
                        bundle.steps[k]
                    ));
                }
            }
        }
    }
    Ok(())
}

fn same_bits(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Simulating with different worker counts yields bit-identical bundles.
pub fn worker_reproducibility(spec: SystemSpec, replicas: u64, horizon: u64, seed: u64) -> Check {
    let plan = SimulationPlan::new(spec, vec![0.0, 1.0, 7.5], horizon, replicas, seed);
    let sim = Simulator::new(plan).map_err(|e| e.to_string())?;
    let runs: Vec<Vec<TrajectoryBundle>> = [1usize, 3, 8]
        .iter()
        .map(|&w| sim.simulate(Some(w)).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    for other in &runs[1..] {
        for (a, b) in runs[0].iter().zip(other) {
            let equal = a.replica == b.replica
                && a.steps == b.steps
                && same_bits(&a.log_products, &b.log_products)
                && a.paths.iter().zip(&b.paths).all(|(p, q)| same_bits(p, q));
            if !equal {
                return Err(format!("replica {} differs between worker counts", a.replica));
            }
        }
    }
    Ok(())
}
