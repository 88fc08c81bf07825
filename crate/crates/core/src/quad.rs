//! Adaptive Gauss–Kronrod quadrature and improper integrals over [0, ∞)
//! with divergence detection on a ladder of decade cutoffs.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (val, err) = gk15(f, a, b);
    if err <= tol.max(1e-300) || depth == 0 || (b - a).abs() < 1e-15 * a.abs().max(1e-300) {
        return val;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// ∫_a^b f, splitting at `breaks` inside (a, b).
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64]) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let coarse: f64 = pts.windows(2).map(|w| gk15(f, w[0], w[1]).0.abs()).sum();
    let tol = 1e-12 * coarse.max(1e-300);
    pts.windows(2).map(|w| adapt(f, w[0], w[1], tol, 48)).sum()
}

/// ∫_a^b f for 0 < a < b, integrating f(e^u) e^u in u = log x. Smooths
/// power-law and logarithmic behaviour across wide ranges.
pub fn integrate_log(f: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64]) -> f64 {
    debug_assert!(a > 0.0);
    let g = |u: f64| {
        let x = u.exp();
        f(x) * x
    };
    let lb: Vec<f64> = breaks
        .iter()
        .filter(|&&x| x > a && x < b)
        .map(|x| x.ln())
        .collect();
    integrate(&g, a.ln(), b.ln(), &lb)
}

/// ∫_0^y f, decade by decade. Resolves integrable singularities at 0.
pub fn integrate_from_zero(f: &dyn Fn(f64) -> f64, y: f64, breaks: &[f64]) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let floor = y * 1e-18;
    let mut total = integrate(f, 0.0, floor, breaks);
    let mut lo = floor;
    while lo < y {
        let hi = (lo * 10.0).min(y);
        total += integrate_log(f, lo, hi, breaks);
        lo = hi;
    }
    total
}

/// Outcome of an improper integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailOutcome {
    Converged(f64),
    Diverged,
    /// Neither criterion fired; carries the last partial value.
    Undecided(f64),
}

impl TailOutcome {
    pub fn value(&self) -> f64 {
        match *self {
            TailOutcome::Converged(v) => v,
            TailOutcome::Diverged => f64::INFINITY,
            TailOutcome::Undecided(v) => v,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, TailOutcome::Converged(_))
    }
}

/// Cutoff ladder and decision thresholds for improper integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailConfig {
    /// Partial integrals are taken at 10^0, ..., 10^max_decade.
    pub max_decade: i32,
    /// Last increment below this fraction of the total counts as stable.
    pub rel_tol: f64,
    /// Decade-increment ratios all below this: geometric decay, converged.
    pub converge_ratio: f64,
    /// Decade-increment ratios all above this: diverged.
    pub diverge_ratio: f64,
}

impl Default for TailConfig {
    fn default() -> Self {
        TailConfig {
            max_decade: 8,
            rel_tol: 1e-4,
            converge_ratio: 0.9,
            diverge_ratio: 0.98,
        }
    }
}

/// ∫_0^∞ f for nonnegative f, with partial values at each decade cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct TailIntegral {
    pub outcome: TailOutcome,
    pub partials: Vec<(f64, f64)>,
}

pub fn integrate_to_infinity(
    f: &dyn Fn(f64) -> f64,
    breaks: &[f64],
    cfg: &TailConfig,
) -> TailIntegral {
    let mut partials = Vec::with_capacity(cfg.max_decade as usize + 1);
    let mut total = integrate_from_zero(f, 1.0, breaks);
    partials.push((1.0, total));
    let mut lo = 1.0f64;
    for k in 1..=cfg.max_decade {
        let hi = 10f64.powi(k);
        total += integrate_log(f, lo, hi, breaks);
        partials.push((hi, total));
        lo = hi;
    }
    let outcome = decide(&partials, cfg);
    TailIntegral { outcome, partials }
}

fn decide(partials: &[(f64, f64)], cfg: &TailConfig) -> TailOutcome {
    let n = partials.len();
    let last = partials[n - 1].1;
    if !last.is_finite() {
        return TailOutcome::Diverged;
    }
    let incs: Vec<f64> = partials.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    let k = incs.len();
    if k < 4 {
        return TailOutcome::Undecided(last);
    }
    let tail = &incs[k - 4..];
    if tail[3] <= cfg.rel_tol * last.abs() && tail[2] <= cfg.rel_tol * last.abs() {
        return TailOutcome::Converged(last);
    }
    let ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
    if ratios.iter().all(|&r| r <= cfg.converge_ratio) {
        let r = ratios[2];
        return TailOutcome::Converged(last + tail[3] * r / (1.0 - r));
    }
    if ratios.iter().all(|&r| r >= cfg.diverge_ratio) {
        return TailOutcome::Diverged;
    }
    TailOutcome::Undecided(last)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(&|x| x * x, 0.0, 3.0, &[]);
        assert!((v - 9.0).abs() < 1e-12);
    }

    #[test]
    fn log_singularity_at_zero() {
        // ∫_0^1 ln x dx = -1
        let v = integrate_from_zero(&|x: f64| x.ln(), 1.0, &[]);
        assert!((v + 1.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn step_function_with_breaks() {
        let f = |x: f64| if x < 0.3 { 1.0 } else { 0.0 };
        let v = integrate(&f, 0.0, 1.0, &[0.3]);
        assert!((v - 0.3).abs() < 1e-13);
    }

    #[test]
    fn tail_classification() {
        let cfg = TailConfig::default();
        let conv = integrate_to_infinity(&|x: f64| (-x).exp(), &[], &cfg);
        assert!(matches!(conv.outcome, TailOutcome::Converged(v) if (v - 1.0).abs() < 1e-9));
        // slow power tail: (1+x)^-1.2 integrates to 5
        let slow = integrate_to_infinity(&|x: f64| (1.0 + x).powf(-1.2), &[], &cfg);
        match slow.outcome {
            TailOutcome::Converged(v) => assert!((v - 5.0).abs() < 0.05, "{v}"),
            other => panic!("{other:?}"),
        }
        let log_div = integrate_to_infinity(&|x: f64| 1.0 / (1.0 + x), &[], &cfg);
        assert_eq!(log_div.outcome, TailOutcome::Diverged);
        let pow_div = integrate_to_infinity(&|x: f64| (1.0 + x).powf(-0.8), &[], &cfg);
        assert_eq!(pow_div.outcome, TailOutcome::Diverged);
        let compact = integrate_to_infinity(&|x: f64| if x < 1.0 { 1.0 - x } else { 0.0 }, &[1.0], &cfg);
        assert!(matches!(compact.outcome, TailOutcome::Converged(v) if (v - 0.5).abs() < 1e-12));
    }
}
