//! One runner per experiment kind. Each writes its data files into the
//! output directory and returns the JSON report.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};

use sdskit::diagnostics::{classify_evidence, ReplicaEvidence};
use sdskit::distributions::{DistributionSpec, Law, Moment};
use sdskit::dyadic::{attractor_points, attractor_probe, ladder_distances, ladder_identity_check, sample_signs, sign_walk};
use sdskit::engine::output::{write_csv_header, write_csv_rows, BinaryWriter};
use sdskit::engine::{RecordMode, SimulationPlan, Simulator};
use sdskit::maps::{Family, System, SystemSpec};
use sdskit::measures::{
    kac_return_time, ks_samples, ratio_estimate, recurrence_criteria, reflected_rw_invariant_density,
    wiener_hopf_check, EmpiricalMeasure, Interval, WienerHopfConfig,
};
use sdskit::quad;
use sdskit::{Error, Result};

use crate::config::{DataFormat, ExperimentConfig, Kind};

/// Replicas simulated per batch when streaming trajectories to disk.
const CHUNK: u64 = 256;

pub struct Context<'a> {
    pub dir: &'a Path,
    pub workers: Option<usize>,
}

pub struct Outcome {
    pub report: Value,
    pub data_files: Vec<String>,
}

fn io(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

fn create(ctx: &Context, name: &str, files: &mut Vec<String>) -> Result<BufWriter<File>> {
    files.push(name.to_string());
    Ok(BufWriter::new(File::create(ctx.dir.join(name)).map_err(io)?))
}

fn write_text(ctx: &Context, name: &str, text: &str, files: &mut Vec<String>) -> Result<()> {
    let mut w = create(ctx, name, files)?;
    w.write_all(text.as_bytes()).map_err(io)?;
    w.flush().map_err(io)
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize to JSON")
}

// The accessors below are only reached after `ExperimentConfig::validate`.
fn system(cfg: &ExperimentConfig) -> SystemSpec {
    cfg.system.clone().expect("validated")
}

fn horizon(cfg: &ExperimentConfig) -> u64 {
    cfg.horizon.expect("validated")
}

fn replicas(cfg: &ExperimentConfig) -> u64 {
    cfg.replicas.expect("validated")
}

fn starts(cfg: &ExperimentConfig) -> Vec<f64> {
    cfg.starting_points.clone().expect("validated")
}

pub fn run(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    match cfg.kind {
        Kind::Simulate => simulate(cfg, ctx),
        Kind::Classify => classify(cfg, ctx),
        Kind::Invariant => invariant(cfg, ctx),
        Kind::Ratio => ratio(cfg, ctx),
        Kind::Kac => kac(cfg, ctx),
        Kind::Criteria => criteria(cfg, ctx),
        Kind::WienerHopf => wiener_hopf(cfg, ctx),
        Kind::Dyadic => dyadic(cfg, ctx),
        Kind::Probe => probe(cfg, ctx),
    }
}

fn simulate(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let params = cfg.simulate.clone().unwrap_or_default();
    let starting = starts(cfg);
    let plan = SimulationPlan::new(system(cfg), starting.clone(), horizon(cfg), replicas(cfg), cfg.seed)
        .with_record(params.record);
    let sim = Simulator::new(plan)?;
    let mut files = Vec::new();
    let mut summary = create(ctx, "summary.csv", &mut files)?;
    writeln!(summary, "replica,x_index,final_value,final_log_product,max_log_product").map_err(io)?;
    let mut finals = vec![Vec::new(); starting.len()];
    let mut sink: Box<dyn FnMut(&sdskit::engine::TrajectoryBundle) -> Result<()>> = match params.format {
        DataFormat::Csv => {
            let mut w = create(ctx, "trajectories.csv", &mut files)?;
            write_csv_header(&mut w)?;
            Box::new(move |b| write_csv_rows(&mut w, b))
        }
        DataFormat::Binary => {
            let w = create(ctx, "trajectories.bin", &mut files)?;
            let mut bw = BinaryWriter::new(w, &starting)?;
            Box::new(move |b| bw.write_bundle(b))
        }
    };
    let mut first = 0;
    while first < replicas(cfg) {
        for b in sim.simulate_range(first, CHUNK, ctx.workers, Ok)? {
            sink(&b)?;
            let last = b.len() - 1;
            for (i, path) in b.paths.iter().enumerate() {
                writeln!(
                    summary,
                    "{},{},{},{},{}",
                    b.replica, i, path[last], b.log_products[last], b.running_max[last]
                )
                .map_err(io)?;
                finals[i].push(path[last]);
            }
        }
        first += CHUNK;
    }
    drop(sink);
    summary.flush().map_err(io)?;
    let per_start: Vec<Value> = starting
        .iter()
        .zip(&finals)
        .map(|(x, v)| {
            let mut s = v.clone();
            s.sort_by(f64::total_cmp);
            json!({
                "start": x,
                "mean_final": v.iter().sum::<f64>() / v.len() as f64,
                "median_final": s[s.len() / 2],
                "max_final": s[s.len() - 1],
            })
        })
        .collect();
    Ok(Outcome {
        report: json!({
            "kind": "simulate",
            "horizon": horizon(cfg),
            "replicas": replicas(cfg),
            "record": to_json(&params.record),
            "final_values": per_start,
        }),
        data_files: files,
    })
}

fn classify(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let params = cfg.classify.clone().unwrap_or_default();
    let spec = system(cfg);
    let o = params.reference.unwrap_or(spec.reference_point);
    let plan = SimulationPlan::new(spec, vec![starts(cfg)[0]], horizon(cfg), replicas(cfg), cfg.seed)
        .with_record(params.record);
    let evidence = Simulator::new(plan)?.simulate_with(ctx.workers, |b| Ok(ReplicaEvidence::from_bundle(&b, 0, o)))?;
    let report = classify_evidence(&evidence, horizon(cfg), &params.thresholds.unwrap_or_default())?;
    let mut files = Vec::new();
    let mut w = create(ctx, "evidence.csv", &mut files)?;
    writeln!(w, "replica,first_quarter_max,final_quarter_min").map_err(io)?;
    for (r, e) in evidence.iter().enumerate() {
        let fmax = e.first_quarter.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        writeln!(w, "{r},{fmax},{}", e.final_quarter_min).map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(Outcome {
        report: json!({ "kind": "classify", "start": starts(cfg)[0], "reference": o, "result": to_json(&report) }),
        data_files: files,
    })
}

fn step_law(spec: &SystemSpec, key: &str) -> Result<DistributionSpec> {
    if spec.family != Family::ReflectedRw {
        return Err(Error::config(key, "this kind needs family = \"reflected_rw\""));
    }
    spec.b_law
        .clone()
        .ok_or_else(|| Error::config("system.b_law", "required for this kind"))
}

fn invariant(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let params = cfg.invariant.clone().unwrap_or_default();
    let spec = system(cfg);
    let b = step_law(&spec, "system.family")?;
    let law = Law::new(b.clone())?;
    let density = reflected_rw_invariant_density(&b, &[])?;
    let plan = SimulationPlan::new(spec, vec![starts(cfg)[0]], horizon(cfg), replicas(cfg), cfg.seed)
        .with_record(RecordMode::SummaryOnly);
    let finals = Simulator::new(plan)?.simulate_with(ctx.workers, |b| Ok(b.paths[0][b.len() - 1]))?;

    let hi = params.hi.unwrap_or_else(|| law.quantile(0.9999));
    if !(hi > 0.0) || !hi.is_finite() {
        return Err(Error::config("invariant.hi", "must be positive and finite"));
    }
    let hist = EmpiricalMeasure::uniform_bins(0.0, hi, params.bins)?;
    let hist = EmpiricalMeasure::from_values(&finals, hist.bin_edges.clone())?.normalized()?;
    let mut files = Vec::new();
    write_text(ctx, "histogram.csv", &hist.to_csv(), &mut files)?;

    let mids: Vec<f64> = hist.bin_edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect();
    let grid_density = reflected_rw_invariant_density(&b, &mids)?;
    let mut csv = String::from("x,density\n");
    for (x, d) in grid_density.grid.iter().zip(&grid_density.density) {
        csv.push_str(&format!("{x},{d}\n"));
    }
    write_text(ctx, "density.csv", &csv, &mut files)?;

    // ν[0, x] ∝ ∫_0^x (1 − F); the KS distance needs a finite total mass.
    let ks = match density.total_mass {
        Moment::Finite(total) => {
            let breaks: Vec<f64> = law.breakpoints().into_iter().filter(|&t| t > 0.0).collect();
            Some(ks_samples(&finals, |x| {
                (quad::integrate(&|t| law.sf(t), 0.0, x.max(0.0), &breaks) / total).min(1.0)
            }))
        }
        _ => None,
    };
    Ok(Outcome {
        report: json!({
            "kind": "invariant",
            "samples": finals.len(),
            "horizon": horizon(cfg),
            "histogram_upper_edge": hi,
            "outside_mass": hist.outside_mass,
            "total_mass": to_json(&density.total_mass),
            "mean_step": to_json(&density.mean),
            "ks": ks,
        }),
        data_files: files,
    })
}

fn ratio(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let params = cfg.ratio.clone().expect("validated");
    let spec = system(cfg);
    let (phi, psi) = (
        Interval::new(params.phi[0], params.phi[1]),
        Interval::new(params.psi[0], params.psi[1]),
    );
    let prediction = match (&spec.family, &spec.b_law) {
        (Family::ReflectedRw, Some(b)) => {
            let law = Law::new(b.clone())?;
            if law.support().0 >= 0.0 {
                let breaks = law.breakpoints();
                let nu = |i: Interval| quad::integrate(&|t| law.sf(t), i.lo.max(0.0), i.hi, &breaks);
                Some(nu(phi) / nu(psi))
            } else {
                None
            }
        }
        _ => None,
    };
    let plan = SimulationPlan::new(spec, vec![starts(cfg)[0]], horizon(cfg), 1, cfg.seed);
    let bundle = Simulator::new(plan)?.run_replica(0)?;
    let est = ratio_estimate(&bundle.paths[0], phi, psi);
    let mut files = Vec::new();
    let mut w = create(ctx, "ratio.csv", &mut files)?;
    writeln!(w, "n,ratio").map_err(io)?;
    let len = est.series.len() as u64;
    for n in (params.stride..=len).step_by(params.stride as usize).chain((len % params.stride != 0).then_some(len)) {
        writeln!(w, "{n},{}", est.series[n as usize - 1]).map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(Outcome {
        report: json!({
            "kind": "ratio",
            "steps": len,
            "phi": params.phi,
            "psi": params.psi,
            "phi_visits": est.phi_visits,
            "psi_visits": est.psi_visits,
            "final_value": est.final_value,
            "prediction": prediction,
        }),
        data_files: files,
    })
}

fn kac(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let params = cfg.kac.clone().expect("validated");
    let system = System::new(system(cfg))?;
    let report = kac_return_time(
        &system,
        Interval::new(0.0, params.set_hi),
        replicas(cfg),
        horizon(cfg),
        cfg.seed,
        ctx.workers,
    )?;
    Ok(Outcome {
        report: json!({ "kind": "kac", "result": to_json(&report) }),
        data_files: Vec::new(),
    })
}

fn criteria(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let law = cfg
        .criteria
        .as_ref()
        .and_then(|c| c.law.clone())
        .or_else(|| cfg.system.as_ref().and_then(|s| s.b_law.clone()))
        .expect("validated");
    let report = recurrence_criteria(&law)?;
    let mut csv = String::from("y,g\n");
    for (y, g) in &report.tail_product_trace {
        csv.push_str(&format!("{y},{g}\n"));
    }
    let mut files = Vec::new();
    write_text(ctx, "tail_product.csv", &csv, &mut files)?;
    Ok(Outcome {
        report: json!({ "kind": "criteria", "law": to_json(&law), "chain": to_json(&report.chain()), "result": to_json(&report) }),
        data_files: files,
    })
}

fn wiener_hopf(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let params = cfg.wiener_hopf.clone().expect("validated");
    let d = WienerHopfConfig::default();
    let whc = WienerHopfConfig {
        paths: params.paths.unwrap_or(d.paths),
        max_steps: params.max_steps.unwrap_or(d.max_steps),
        seed: cfg.seed,
        grid_intervals: params.grid_intervals.unwrap_or(d.grid_intervals),
    };
    let report = wiener_hopf_check(&params.mu0, &whc, ctx.workers)?;
    Ok(Outcome {
        report: json!({ "kind": "wiener_hopf", "mu0": to_json(&params.mu0), "settings": to_json(&whc), "result": to_json(&report) }),
        data_files: Vec::new(),
    })
}

/// Signs of `path` up to its `k`-th strictly ascending ladder epoch, or
/// the first `cap` signs if the epoch comes later.
fn signs_to_epoch(p: f64, seed: u64, path: u64, k: u64, cap: u64) -> Result<(Vec<i8>, bool)> {
    let mut n = 256.min(cap);
    loop {
        let eps = sample_signs(p, seed, path, n as usize)?;
        let walk = sign_walk(&eps);
        let (mut best, mut count) = (0, 0);
        for (i, &s) in walk.iter().enumerate().skip(1) {
            if s > best {
                best = s;
                count += 1;
                if count == k {
                    return Ok((eps[..i].to_vec(), true));
                }
            }
        }
        if n >= cap {
            return Ok((eps, k == 0));
        }
        n = (4 * n).min(cap);
    }
}

fn dyadic(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let d = cfg.dyadic.clone().expect("validated");
    let mut files = Vec::new();
    let mut w = create(ctx, "ladder_distances.csv", &mut files)?;
    writeln!(w, "path,k,epoch,value_x,value_y,distance").map_err(io)?;
    let mut paths = Vec::new();
    for path in 0..d.paths {
        let (eps, complete) = signs_to_epoch(d.p, cfg.seed, path, d.epochs, d.max_steps)?;
        let ix = ladder_identity_check(&eps, &d.x)?;
        let iy = ladder_identity_check(&eps, &d.y)?;
        let dist = ladder_distances(&eps, &d.x, &d.y)?;
        let mut epochs = Vec::new();
        for (k, ((a, b), (e, dd))) in ix.iter().zip(&iy).zip(&dist).enumerate() {
            writeln!(w, "{path},{},{e},{},{},{dd}", k + 1, a.value, b.value).map_err(io)?;
            epochs.push(json!({
                "k": k + 1,
                "epoch": e,
                "distance": dd.to_string(),
                "branch_x": to_json(&a.branch),
                "branch_y": to_json(&b.branch),
            }));
        }
        paths.push(json!({ "path": path, "steps": eps.len(), "complete": complete, "epochs": epochs }));
    }
    w.flush().map_err(io)?;
    Ok(Outcome {
        report: json!({
            "kind": "dyadic",
            "x": d.x.to_string(),
            "y": d.y.to_string(),
            "p": d.p,
            "epochs_requested": d.epochs,
            "paths": paths,
        }),
        data_files: files,
    })
}

fn probe(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome> {
    let p = cfg.probe.clone().expect("validated");
    let report = attractor_probe(p.base, &p.seeds, p.depth)?;
    let (points, _, _) = attractor_points(p.base, &p.seeds, p.depth)?;
    let mut csv = String::from("value,approx\n");
    for v in &points {
        csv.push_str(&format!("{v},{}\n", v.to_f64()));
    }
    let mut files = Vec::new();
    write_text(ctx, "points.csv", &csv, &mut files)?;
    Ok(Outcome {
        report: json!({ "kind": "probe", "result": to_json(&report) }),
        data_files: files,
    })
}
