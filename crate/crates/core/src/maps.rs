//! Random Lipschitz maps of the half-line and the laws that generate them.

use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, Law, Moment, MomentReport, Regime};
use crate::error::{Error, Result};
use crate::hyperbolic::ExtendedPoint;
use crate::wide::Wide;

/// A Lipschitz map of the half-line (or of the line, for `Affine`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapDescriptor {
    /// x ↦ a·x + b
    Affine { a: f64, b: f64 },
    /// x ↦ |a·x − b|
    ReflAffine { a: f64, b: f64 },
    /// x ↦ |x − b|
    ReflTranslate { b: f64 },
    /// Factors applied first to last.
    Composite { factors: Vec<MapDescriptor> },
}

/// A Lipschitz constant, marked when it is only the product bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lipschitz {
    pub value: f64,
    pub upper_bound_only: bool,
}

impl MapDescriptor {
    pub fn affine(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::domain(format!("affine map needs a > 0, got a={a}, b={b}")));
        }
        Ok(MapDescriptor::Affine { a, b })
    }

    pub fn refl_affine(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::domain(format!(
                "reflected affine map needs a > 0 and b > 0, got a={a}, b={b}"
            )));
        }
        Ok(MapDescriptor::ReflAffine { a, b })
    }

    pub fn refl_translate(b: f64) -> Result<Self> {
        if !b.is_finite() {
            return Err(Error::domain("translation must be finite"));
        }
        Ok(MapDescriptor::ReflTranslate { b })
    }

    fn is_reflected(&self) -> bool {
        match self {
            MapDescriptor::Affine { .. } => false,
            MapDescriptor::ReflAffine { .. } | MapDescriptor::ReflTranslate { .. } => true,
            MapDescriptor::Composite { factors } => factors.first().is_some_and(|f| f.is_reflected()),
        }
    }

    /// Image of `x`. Reflected variants require `x >= 0`.
    pub fn apply(&self, x: f64) -> Result<f64> {
        if self.is_reflected() && x < 0.0 {
            return Err(Error::domain(format!("reflected map applied to negative point {x}")));
        }
        Ok(match self {
            MapDescriptor::Affine { a, b } => a * x + b,
            MapDescriptor::ReflAffine { a, b } => (a * x - b).abs(),
            MapDescriptor::ReflTranslate { b } => (x - b).abs(),
            MapDescriptor::Composite { factors } => {
                let mut y = x;
                for f in factors {
                    y = f.apply(y)?;
                }
                y
            }
        })
    }

    /// Unchecked image of an extended-range state.
    #[inline]
    pub(crate) fn apply_wide(&self, x: Wide) -> Wide {
        match self {
            MapDescriptor::Affine { a, b } => x.mul_f64(*a).add_f64(*b),
            MapDescriptor::ReflAffine { a, b } => x.mul_f64(*a).add_f64(-b).abs(),
            MapDescriptor::ReflTranslate { b } => x.add_f64(-b).abs(),
            MapDescriptor::Composite { factors } => {
                factors.iter().fold(x, |y, f| f.apply_wide(y))
            }
        }
    }

    pub fn lipschitz(&self) -> Lipschitz {
        match self {
            MapDescriptor::Affine { a, .. } | MapDescriptor::ReflAffine { a, .. } => Lipschitz {
                value: *a,
                upper_bound_only: false,
            },
            MapDescriptor::ReflTranslate { .. } => Lipschitz {
                value: 1.0,
                upper_bound_only: false,
            },
            MapDescriptor::Composite { factors } => Lipschitz {
                value: factors.iter().map(|f| f.lipschitz().value).product(),
                upper_bound_only: factors.len() > 1,
            },
        }
    }

    /// |f(o) − o|.
    pub fn displacement(&self, o: f64) -> Result<f64> {
        Ok((self.apply(o)? - o).abs())
    }

    /// f̂(x, a) = (f(x), lip(f)·a).
    pub fn lift_apply(&self, p: ExtendedPoint) -> Result<ExtendedPoint> {
        ExtendedPoint::new(self.apply(p.base)?, self.lipschitz().value * p.height)
    }
}

/// The three families of systems the toolkit simulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Y_n = A_n·Y_{n−1} + B_n
    Affine,
    /// X_n = |A_n·X_{n−1} − B_n|
    ReflectedAffine,
    /// X_n = |X_{n−1} − B_n|
    ReflectedRw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointPair {
    pub a: f64,
    pub b: f64,
    pub weight: f64,
}

/// Serializable description of an i.i.d. law on maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_law: Option<DistributionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_law: Option<DistributionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_pairs: Option<Vec<JointPair>>,
    #[serde(default)]
    pub reference_point: f64,
}

impl SystemSpec {
    pub fn reflected_rw(b_law: DistributionSpec) -> Self {
        SystemSpec {
            family: Family::ReflectedRw,
            a_law: None,
            b_law: Some(b_law),
            joint_pairs: None,
            reference_point: 0.0,
        }
    }

    pub fn with_laws(family: Family, a_law: DistributionSpec, b_law: DistributionSpec) -> Self {
        SystemSpec {
            family,
            a_law: Some(a_law),
            b_law: Some(b_law),
            joint_pairs: None,
            reference_point: 0.0,
        }
    }

    pub fn with_pairs(family: Family, pairs: &[(f64, f64, f64)]) -> Self {
        SystemSpec {
            family,
            a_law: None,
            b_law: None,
            joint_pairs: Some(
                pairs
                    .iter()
                    .map(|&(a, b, weight)| JointPair { a, b, weight })
                    .collect(),
            ),
            reference_point: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
enum Source {
    Independent { a: Option<Law>, b: Law },
    Joint { pairs: Vec<JointPair>, cum: Vec<f64> },
}

/// A validated system: draws the parameters of F_n and builds the map.
#[derive(Debug, Clone)]
pub struct System {
    spec: SystemSpec,
    source: Source,
}

impl System {
    pub fn new(spec: SystemSpec) -> Result<Self> {
        if !(spec.reference_point >= 0.0) || !spec.reference_point.is_finite() {
            return Err(Error::config("system.reference_point", "must be finite and >= 0"));
        }
        let source = match (&spec.joint_pairs, &spec.a_law, &spec.b_law) {
            (Some(pairs), None, None) => {
                if pairs.is_empty() {
                    return Err(Error::config("system.joint_pairs", "empty"));
                }
                let mut total = 0.0;
                for (i, p) in pairs.iter().enumerate() {
                    let key = format!("system.joint_pairs[{i}]");
                    if !(p.weight >= 0.0) {
                        return Err(Error::config(key, "negative weight"));
                    }
                    if spec.family != Family::ReflectedRw && !(p.a > 0.0) {
                        return Err(Error::config(key, "a must be positive"));
                    }
                    if !p.a.is_finite() || !p.b.is_finite() {
                        return Err(Error::config(key, "non-finite parameter"));
                    }
                    if spec.family == Family::ReflectedAffine && !(p.b > 0.0) {
                        return Err(Error::config(key, "reflected affine maps need b > 0"));
                    }
                    total += p.weight;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::config(
                        "system.joint_pairs",
                        format!("weights sum to {total}, expected 1"),
                    ));
                }
                let mut cum = Vec::with_capacity(pairs.len());
                let mut acc = 0.0;
                for p in pairs {
                    acc += p.weight / total;
                    cum.push(acc);
                }
                *cum.last_mut().unwrap() = 1.0;
                Source::Joint {
                    pairs: pairs.clone(),
                    cum,
                }
            }
            (None, a, Some(b)) => {
                let b_law = Law::new(b.clone()).map_err(|e| prefix(e, "system.b_law"))?;
                let a_law = match (spec.family, a) {
                    (Family::ReflectedRw, None) => None,
                    (Family::ReflectedRw, Some(_)) => {
                        return Err(Error::config(
                            "system.a_law",
                            "reflected random walks have no a_law",
                        ))
                    }
                    (_, None) => return Err(Error::config("system.a_law", "missing")),
                    (_, Some(a)) => {
                        let law = Law::new(a.clone()).map_err(|e| prefix(e, "system.a_law"))?;
                        law.require_positive()
                            .map_err(|e| Error::config("system.a_law", e.to_string()))?;
                        Some(law)
                    }
                };
                if spec.family == Family::ReflectedAffine && b_law.support().0 < 0.0 {
                    return Err(Error::config(
                        "system.b_law",
                        "reflected affine maps need b > 0",
                    ));
                }
                Source::Independent { a: a_law, b: b_law }
            }
            _ => {
                return Err(Error::config(
                    "system",
                    "give either joint_pairs or (a_law, b_law), not both",
                ))
            }
        };
        Ok(System { spec, source })
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    pub fn family(&self) -> Family {
        self.spec.family
    }

    pub fn reference_point(&self) -> f64 {
        self.spec.reference_point
    }

    pub fn b_law(&self) -> Option<&Law> {
        match &self.source {
            Source::Independent { b, .. } => Some(b),
            Source::Joint { .. } => None,
        }
    }

    pub fn a_law(&self) -> Option<&Law> {
        match &self.source {
            Source::Independent { a, .. } => a.as_ref(),
            Source::Joint { .. } => None,
        }
    }

    /// Draws (a_n, b_n). For reflected random walks a_n = 1.
    #[inline]
    pub fn sample_params<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match &self.source {
            Source::Independent { a, b } => {
                let av = match a {
                    Some(l) => l.sample(rng),
                    None => 1.0,
                };
                (av, b.sample(rng))
            }
            Source::Joint { pairs, cum } => {
                let u: f64 = rng.random();
                let i = cum.partition_point(|&c| c <= u).min(pairs.len() - 1);
                let p = pairs[i];
                let a = if self.spec.family == Family::ReflectedRw { 1.0 } else { p.a };
                (a, p.b)
            }
        }
    }

    /// The map with parameters (a, b) in this family.
    #[inline]
    pub fn map(&self, a: f64, b: f64) -> MapDescriptor {
        match self.spec.family {
            Family::Affine => MapDescriptor::Affine { a, b },
            Family::ReflectedAffine => MapDescriptor::ReflAffine { a, b },
            Family::ReflectedRw => MapDescriptor::ReflTranslate { b },
        }
    }

    /// Log-moments of the Lipschitz constants A_n.
    pub fn lipschitz_moments(&self, epsilon: f64) -> Result<MomentReport> {
        match &self.source {
            Source::Independent { a: Some(a), .. } => a.moment_report(epsilon),
            Source::Independent { a: None, .. } => Ok(MomentReport {
                mean_log: Moment::Finite(0.0),
                second_moment_log: Moment::Finite(0.0),
                logplus_order: 2.0 + epsilon,
                logplus_moment: Moment::Finite(0.0),
                regime: Regime::Centered,
            }),
            Source::Joint { pairs, .. } => {
                let spec = DistributionSpec::TwoPoint {
                    values: pairs
                        .iter()
                        .map(|p| {
                            let a = if self.spec.family == Family::ReflectedRw { 1.0 } else { p.a };
                            [a, p.weight]
                        })
                        .collect(),
                };
                Law::new(spec)?.moment_report(epsilon)
            }
        }
    }
}

fn prefix(e: Error, key: &str) -> Error {
    match e {
        Error::Config { key: k, message } => Error::config(format!("{key}.{k}"), message),
        other => Error::config(key, other.to_string()),
    }
}
