//! Exact-arithmetic experiments with the maps f₁(x) = |2x − 1| and
//! f₋₁(x) = |x/2 − 1| on [0, 1], and with their base-3 analogues
//! g₁(x) = |3x − 1| and g₋₁(x) = |x/3 − 1|.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::engine::{ladder_epochs, LadderKind};
use crate::error::{Error, Result};
use crate::maps::{Family, System, SystemSpec};
use crate::rng::ReplicaStream;

/// A rational number in lowest terms with positive denominator.
/// Serialized as the string `"num/den"`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExactRational(BigRational);

impl ExactRational {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::domain("zero denominator"));
        }
        Ok(ExactRational(BigRational::new(num.into(), den.into())))
    }

    pub fn integer(n: i64) -> Self {
        ExactRational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Self::integer(0)
    }

    pub fn one() -> Self {
        Self::integer(1)
    }

    pub fn from_big(r: BigRational) -> Self {
        ExactRational(r)
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        ExactRational(self.0.abs())
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn add(&self, o: &Self) -> Self {
        ExactRational(&self.0 + &o.0)
    }

    pub fn sub(&self, o: &Self) -> Self {
        ExactRational(&self.0 - &o.0)
    }

    pub fn mul(&self, o: &Self) -> Self {
        ExactRational(&self.0 * &o.0)
    }

    /// self · 2^k
    pub fn mul_pow2(&self, k: i64) -> Self {
        let (num, den) = (self.0.numer(), self.0.denom());
        if num.is_zero() || k == 0 {
            return self.clone();
        }
        // Cancel powers of two against the opposite side before shifting,
        // which keeps the fraction reduced without a gcd.
        let shift = k.unsigned_abs();
        let (num, den) = if k > 0 {
            let c = den.trailing_zeros().unwrap_or(0).min(shift);
            (num << (shift - c), den >> c)
        } else {
            let c = num.trailing_zeros().unwrap_or(0).min(shift);
            (num >> c, den << (shift - c))
        };
        ExactRational(BigRational::new_raw(num, den))
    }
}

fn pow2(k: i64) -> BigRational {
    let p = BigInt::one() << k.unsigned_abs();
    if k >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(BigInt::one(), p)
    }
}

impl fmt::Display for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for ExactRational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::domain(format!("cannot parse {s:?} as a rational \"num/den\""));
        let (n, d) = match s.trim().split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(ExactRational(BigRational::new(n, d)))
    }
}

impl Serialize for ExactRational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ExactRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One application of f_eps (base 2) or g_eps (base 3).
pub fn exact_step(eps: i8, x: &ExactRational, base: u32) -> Result<ExactRational> {
    if x.is_negative() {
        return Err(Error::domain("exact_step needs x >= 0"));
    }
    if base != 2 && base != 3 {
        return Err(Error::domain(format!("base must be 2 or 3, got {base}")));
    }
    // With x = p/q in lowest terms and b prime, the reduced forms are
    // b·x − 1 = (p − q/b)/(q/b) if b | q, else (b·p − q)/q, and
    // x/b − 1 = (p/b − q)/q if b | p, else (p − b·q)/(b·q).
    let b = BigInt::from(base);
    let (p, q) = (x.0.numer(), x.0.denom());
    let (num, den) = match eps {
        1 => {
            let (qb, r) = q.div_rem(&b);
            if r.is_zero() {
                (p - &qb, qb)
            } else {
                (p * &b - q, q.clone())
            }
        }
        -1 => {
            let (pb, r) = p.div_rem(&b);
            if r.is_zero() {
                (pb - q, q.clone())
            } else {
                (p - &b * q, &b * q)
            }
        }
        _ => return Err(Error::domain(format!("eps must be +1 or -1, got {eps}"))),
    };
    Ok(ExactRational(BigRational::new_raw(num.abs(), den)))
}

/// Iterates the base-2 maps along `eps` from `x`; the result has
/// `eps.len() + 1` entries.
pub fn exact_path(eps: &[i8], x: &ExactRational, base: u32) -> Result<Vec<ExactRational>> {
    let mut out = Vec::with_capacity(eps.len() + 1);
    out.push(x.clone());
    let mut cur = x.clone();
    for &e in eps {
        cur = exact_step(e, &cur, base)?;
        out.push(cur.clone());
    }
    Ok(out)
}

/// Partial sums S_0 = 0, S_n = eps_1 + ... + eps_n.
pub fn sign_walk(eps: &[i8]) -> Vec<i64> {
    let mut s = Vec::with_capacity(eps.len() + 1);
    s.push(0);
    let mut acc = 0i64;
    for &e in eps {
        acc += i64::from(e);
        s.push(acc);
    }
    s
}

/// Signs of path `path` for Example-style systems choosing f₁ with
/// probability `p`. The sequence coincides with the a-parameters (2 or ½)
/// that the engine draws for the reflected affine system with pairs
/// (2, 1) and (½, 1) under the same seed and replica.
pub fn sample_signs(p: f64, seed: u64, path: u64, n: usize) -> Result<Vec<i8>> {
    let sys = System::new(SystemSpec::with_pairs(
        Family::ReflectedAffine,
        &[(2.0, 1.0, p), (0.5, 1.0, 1.0 - p)],
    ))?;
    let stream = ReplicaStream::new(seed, path);
    Ok((1..=n as u64)
        .map(|k| {
            let (a, _) = sys.sample_params(&mut stream.step(k));
            if a > 1.0 {
                1
            } else {
                -1
            }
        })
        .collect())
}

/// The map x ↦ X_n^x on [0, 1] for a fixed sign sequence, in the form
/// σ_j·2^S·x + C_j on the pieces [j·2^{−M}, (j+1)·2^{−M}], j = 0..2^M − 1,
/// with σ_j = σ_0·(−1)^j. Every piece is mapped onto the same interval
/// [(L−1)·2^{−(M−S)}, L·2^{−(M−S)}].
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseAffineMap {
    m: u32,
    s: i64,
    first_sign: i8,
    intercepts: Vec<ExactRational>,
    l: u64,
}

impl PiecewiseAffineMap {
    pub fn identity() -> Self {
        PiecewiseAffineMap {
            m: 0,
            s: 0,
            first_sign: 1,
            intercepts: vec![ExactRational::zero()],
            l: 1,
        }
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn s(&self) -> i64 {
        self.s
    }

    /// L of the common image interval.
    pub fn image_index(&self) -> u64 {
        self.l
    }

    pub fn pieces(&self) -> usize {
        self.intercepts.len()
    }

    pub fn intercepts(&self) -> &[ExactRational] {
        &self.intercepts
    }

    /// The sign δ with slope (−1)^j·δ·2^S on the j-th piece, j counted
    /// from 1.
    pub fn delta(&self) -> i8 {
        -self.first_sign
    }

    /// Sign of the slope on piece `j` (0-based).
    pub fn slope_sign(&self, j: usize) -> i8 {
        if j % 2 == 0 {
            self.first_sign
        } else {
            -self.first_sign
        }
    }

    pub fn slope(&self, j: usize) -> ExactRational {
        ExactRational(pow2(self.s) * BigInt::from(self.slope_sign(j)))
    }

    /// Breakpoints j·2^{−M}, j = 0..=2^M.
    pub fn breakpoints(&self) -> Vec<ExactRational> {
        let n = self.intercepts.len() as i64;
        (0..=n).map(|j| ExactRational::integer(j).mul_pow2(-(self.m as i64))).collect()
    }

    /// Common image [(L−1)·2^{−(M−S)}, L·2^{−(M−S)}].
    pub fn image(&self) -> (ExactRational, ExactRational) {
        let d = -(self.m as i64 - self.s);
        (
            ExactRational::integer(self.l as i64 - 1).mul_pow2(d),
            ExactRational::integer(self.l as i64).mul_pow2(d),
        )
    }

    fn eval_piece(&self, j: usize, x: &ExactRational) -> ExactRational {
        let y = x.mul_pow2(self.s);
        if self.slope_sign(j) > 0 {
            y.add(&self.intercepts[j])
        } else {
            self.intercepts[j].sub(&y)
        }
    }

    /// Evaluates the map at x ∈ [0, 1].
    pub fn eval(&self, x: &ExactRational) -> Result<ExactRational> {
        if x.is_negative() || x.0 > BigRational::one() {
            return Err(Error::domain("piecewise form is defined on [0, 1]"));
        }
        let t = (&x.0 * pow2(self.m as i64)).floor().to_integer();
        let j = t.to_usize().unwrap_or(usize::MAX).min(self.intercepts.len() - 1);
        Ok(self.eval_piece(j, x))
    }

    /// The form of f_eps ∘ self.
    pub fn compose(&self, eps: i8) -> Result<Self> {
        let one = ExactRational::one();
        let d = self.m as i64 - self.s;
        let next = match eps {
            -1 => {
                // 1 − y/2 on [0, 1]
                if d + 1 > 62 {
                    return Err(Error::Unsupported("image index exceeds 62 bits".into()));
                }
                PiecewiseAffineMap {
                    m: self.m,
                    s: self.s - 1,
                    first_sign: -self.first_sign,
                    intercepts: self.intercepts.iter().map(|c| one.sub(&c.mul_pow2(-1))).collect(),
                    l: (1u64 << (d + 1)) - self.l + 1,
                }
            }
            1 if d > 0 => {
                let half = 1u64 << (d - 1);
                if self.l <= half {
                    // image inside [0, ½]: 1 − 2y
                    PiecewiseAffineMap {
                        m: self.m,
                        s: self.s + 1,
                        first_sign: -self.first_sign,
                        intercepts: self.intercepts.iter().map(|c| one.sub(&c.mul_pow2(1))).collect(),
                        l: half - self.l + 1,
                    }
                } else {
                    // image inside [½, 1]: 2y − 1
                    PiecewiseAffineMap {
                        m: self.m,
                        s: self.s + 1,
                        first_sign: self.first_sign,
                        intercepts: self.intercepts.iter().map(|c| c.mul_pow2(1).sub(&one)).collect(),
                        l: self.l - half,
                    }
                }
            }
            1 => {
                // every piece covers [0, 1]: split at the preimage of ½
                let mut intercepts = Vec::with_capacity(2 * self.intercepts.len());
                for (j, c) in self.intercepts.iter().enumerate() {
                    let down = one.sub(&c.mul_pow2(1));
                    let up = c.mul_pow2(1).sub(&one);
                    if self.slope_sign(j) > 0 {
                        intercepts.push(down);
                        intercepts.push(up);
                    } else {
                        intercepts.push(up);
                        intercepts.push(down);
                    }
                }
                PiecewiseAffineMap {
                    m: self.m + 1,
                    s: self.s + 1,
                    first_sign: -1,
                    intercepts,
                    l: 1,
                }
            }
            _ => return Err(Error::domain(format!("eps must be +1 or -1, got {eps}"))),
        };
        next.verify()?;
        Ok(next)
    }

    /// Checks continuity, the common image, the piece count and the slope
    /// magnitude by direct evaluation.
    pub fn verify(&self) -> Result<()> {
        let fail = |what: String| Err(Error::Assertion(format!("piecewise form invariant violated: {what}")));
        if self.intercepts.len() != 1usize << self.m {
            return fail(format!("{} pieces for M = {}", self.intercepts.len(), self.m));
        }
        let d = self.m as i64 - self.s;
        if d < 0 || self.l < 1 || (d < 64 && self.l > 1u64 << d) {
            return fail(format!("L = {} out of range for M − S = {d}", self.l));
        }
        let bp = self.breakpoints();
        let (lo, hi) = self.image();
        for j in 0..self.intercepts.len() {
            let a = self.eval_piece(j, &bp[j]);
            let b = self.eval_piece(j, &bp[j + 1]);
            if j + 1 < self.intercepts.len() && self.eval_piece(j + 1, &bp[j + 1]) != b {
                return fail(format!("discontinuity at breakpoint {}", bp[j + 1]));
            }
            let (mn, mx) = if a <= b { (a, b) } else { (b, a) };
            if mn != lo || mx != hi {
                return fail(format!("piece {j} has image [{mn}, {mx}], expected [{lo}, {hi}]"));
            }
        }
        Ok(())
    }
}

/// Builds the piecewise-affine form of x ↦ X_n^x by induction along `eps`,
/// verifying the invariants after every step.
pub fn piecewise_affine_form(eps: &[i8]) -> Result<PiecewiseAffineMap> {
    let mut f = PiecewiseAffineMap::identity();
    for &e in eps {
        f = f.compose(e)?;
    }
    Ok(f)
}

/// Which of the two candidate maps the trajectory followed at a ladder
/// epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// X = f₁^(k)(x)
    Iterate,
    /// X = 1 − f₁^(k)(x)
    Complement,
    /// both candidates coincide at this point
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderIdentity {
    /// k-th strictly ascending ladder epoch of the ±1 walk.
    pub epoch: u64,
    pub k: u64,
    pub value: ExactRational,
    pub branch: Branch,
}

/// Checks that X at the k-th strictly ascending ladder epoch of the ±1
/// walk equals f₁^(k)(x) or 1 − f₁^(k)(x); a mismatch is an assertion
/// error.
pub fn ladder_identity_check(eps: &[i8], x: &ExactRational) -> Result<Vec<LadderIdentity>> {
    if x.is_negative() || x.0 > BigRational::one() {
        return Err(Error::domain(format!("the ladder identity concerns starts in [0, 1], got {x}")));
    }
    let path = exact_path(eps, x, 2)?;
    let walk: Vec<f64> = sign_walk(eps).into_iter().map(|v| v as f64).collect();
    let lad = ladder_epochs(&walk, LadderKind::AscendingStrict);
    let one = ExactRational::one();
    let mut iterate = x.clone();
    let mut out = Vec::with_capacity(lad.epochs.len());
    for (idx, &e) in lad.epochs.iter().enumerate() {
        iterate = exact_step(1, &iterate, 2)?;
        let v = &path[e as usize];
        let comp = one.sub(&iterate);
        let branch = match (*v == iterate, *v == comp) {
            (true, true) => Branch::Both,
            (true, false) => Branch::Iterate,
            (false, true) => Branch::Complement,
            (false, false) => {
                return Err(Error::Assertion(format!(
                    "ladder identity violated at epoch {e}: X = {v}, f1^({}) = {iterate}",
                    idx + 1
                )))
            }
        };
        out.push(LadderIdentity {
            epoch: e,
            k: idx as u64 + 1,
            value: v.clone(),
            branch,
        });
    }
    Ok(out)
}

/// |X_n^x − X_n^y| at the strictly ascending ladder epochs of the walk.
pub fn ladder_distances(eps: &[i8], x: &ExactRational, y: &ExactRational) -> Result<Vec<(u64, ExactRational)>> {
    let px = exact_path(eps, x, 2)?;
    let py = exact_path(eps, y, 2)?;
    let walk: Vec<f64> = sign_walk(eps).into_iter().map(|v| v as f64).collect();
    Ok(ladder_epochs(&walk, LadderKind::AscendingStrict)
        .epochs
        .into_iter()
        .map(|e| (e, px[e as usize].sub(&py[e as usize]).abs()))
        .collect())
}

/// D_n = |X_n^x − X_n^y| / 2^{S_n} for n = 0..=len, exactly. D_n is
/// nonincreasing for these maps; an increase is an assertion error.
pub fn exact_normalized_distances(eps: &[i8], x: &ExactRational, y: &ExactRational) -> Result<Vec<ExactRational>> {
    let px = exact_path(eps, x, 2)?;
    let py = exact_path(eps, y, 2)?;
    let s = sign_walk(eps);
    let d: Vec<ExactRational> = (0..px.len())
        .map(|n| px[n].sub(&py[n]).abs().mul_pow2(-s[n]))
        .collect();
    for n in 1..d.len() {
        if d[n] > d[n - 1] {
            return Err(Error::Assertion(format!("D_n increased at step {n}: {} -> {}", d[n - 1], d[n])));
        }
    }
    Ok(d)
}

/// Level n of x ∈ D_r, where x = k/(r·2^n) in lowest terms.
pub fn dyadic_level(r: u64, x: &ExactRational) -> Result<u32> {
    if r == 0 || r % 2 == 0 {
        return Err(Error::domain(format!("r must be odd and positive, got {r}")));
    }
    let not_in = || Error::domain(format!("{x} is not in D_{r}"));
    if x.is_negative() || x.0 > BigRational::one() {
        return Err(not_in());
    }
    let den = x.denom();
    let rb = BigInt::from(r);
    let (q, rem) = den.div_rem(&rb);
    if !rem.is_zero() {
        return Err(not_in());
    }
    if r > 1 && (x.numer().is_zero() || x.0 == BigRational::one()) {
        return Err(not_in());
    }
    let tz = q.trailing_zeros().unwrap_or(0);
    if q != BigInt::one() << tz {
        return Err(not_in());
    }
    Ok(tz as u32)
}

/// One transition of the chain on D_r with its level bookkeeping.
pub fn dyadic_chain_step(r: u64, x: &ExactRational, eps: i8) -> Result<(ExactRational, u32)> {
    let n = dyadic_level(r, x)?;
    let y = exact_step(eps, x, 2)?;
    let m = dyadic_level(r, &y).map_err(|_| Error::Assertion(format!("f_{eps}({x}) = {y} left D_{r}")))?;
    if n >= 1 {
        let expected = if eps == 1 { n - 1 } else { n + 1 };
        if m != expected {
            return Err(Error::Assertion(format!(
                "f_{eps}({x}) = {y} moved from level {n} to {m}, expected {expected}"
            )));
        }
    }
    Ok((y, m))
}

/// Recurrence type of a birth–death chain on the nonnegative integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainType {
    PositiveRecurrent,
    NullRecurrent,
    Transient,
}

/// Birth–death chain stepping down with probability `p` and up with
/// probability 1 − p.
pub fn birth_death_classification(p: f64) -> Result<ChainType> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("p must lie in (0, 1), got {p}")));
    }
    Ok(if p > 0.5 {
        ChainType::PositiveRecurrent
    } else if p == 0.5 {
        ChainType::NullRecurrent
    } else {
        ChainType::Transient
    })
}

pub const PROBE_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub base: u32,
    pub depth: u32,
    pub points: usize,
    pub min: ExactRational,
    pub max: ExactRational,
    /// Largest gap between consecutive distinct image points.
    pub largest_gap: ExactRational,
    /// Set when the cap of 2^20 points stopped the search early.
    pub truncated: bool,
    /// Depth actually completed.
    pub completed_depth: u32,
}

/// All images of `seeds` under words of length at most `depth`, explored
/// breadth first.
pub fn attractor_points(base: u32, seeds: &[ExactRational], depth: u32) -> Result<(BTreeSet<ExactRational>, bool, u32)> {
    let mut all: BTreeSet<ExactRational> = seeds.iter().cloned().collect();
    let mut frontier: Vec<ExactRational> = all.iter().cloned().collect();
    let mut done = 0;
    for _ in 0..depth {
        let mut next = Vec::new();
        for x in &frontier {
            for eps in [1i8, -1] {
                let y = exact_step(eps, x, base)?;
                if !all.contains(&y) {
                    if all.len() >= PROBE_CAP {
                        return Ok((all, true, done));
                    }
                    all.insert(y.clone());
                    next.push(y);
                }
            }
        }
        frontier = next;
        done += 1;
        if frontier.is_empty() {
            // nothing new can appear at later depths
            return Ok((all, false, depth));
        }
    }
    Ok((all, false, done))
}

pub fn attractor_probe(base: u32, seeds: &[ExactRational], depth: u32) -> Result<ProbeReport> {
    if seeds.is_empty() {
        return Err(Error::domain("attractor_probe needs at least one seed"));
    }
    let (pts, truncated, completed_depth) = attractor_points(base, seeds, depth)?;
    let v: Vec<&ExactRational> = pts.iter().collect();
    let mut gap = ExactRational::zero();
    for w in v.windows(2) {
        let g = w[1].sub(w[0]);
        if g > gap {
            gap = g;
        }
    }
    Ok(ProbeReport {
        base,
        depth,
        points: v.len(),
        min: v[0].clone(),
        max: v[v.len() - 1].clone(),
        largest_gap: gap,
        truncated,
        completed_depth,
    })
}
