//! Experiment configuration files.
//!
//! A config is a TOML document with the experiment `kind`, the shared plan
//! fields, an optional `[system]` table and one table named after the kind
//! holding its parameters. Unknown keys are rejected everywhere.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use sdskit::diagnostics::ClassifyThresholds;
use sdskit::distributions::DistributionSpec;
use sdskit::dyadic::ExactRational;
use sdskit::engine::RecordMode;
use sdskit::maps::SystemSpec;
use sdskit::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Simulate,
    Classify,
    Invariant,
    Ratio,
    Kac,
    Criteria,
    WienerHopf,
    Dyadic,
    Probe,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::Classify => "classify",
            Kind::Invariant => "invariant",
            Kind::Ratio => "ratio",
            Kind::Kac => "kac",
            Kind::Criteria => "criteria",
            Kind::WienerHopf => "wiener_hopf",
            Kind::Dyadic => "dyadic",
            Kind::Probe => "probe",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starting_points: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classify: Option<ClassifyParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariant: Option<InvariantParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<RatioParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kac: Option<KacParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criteria: Option<CriteriaParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wiener_hopf: Option<WienerHopfParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dyadic: Option<DyadicParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    #[default]
    Csv,
    Binary,
}

fn default_record() -> RecordMode {
    RecordMode::Full
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    #[serde(default = "default_record")]
    pub record: RecordMode,
    #[serde(default)]
    pub format: DataFormat,
}

impl Default for SimulateParams {
    fn default() -> Self {
        SimulateParams {
            record: RecordMode::Full,
            format: DataFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyParams {
    /// Reference point o; defaults to the system's reference point.
    #[serde(default)]
    pub reference: Option<f64>,
    #[serde(default = "default_record")]
    pub record: RecordMode,
    #[serde(default)]
    pub thresholds: Option<ClassifyThresholds>,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        ClassifyParams {
            reference: None,
            record: RecordMode::Full,
            thresholds: None,
        }
    }
}

fn default_bins() -> usize {
    100
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantParams {
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Upper histogram edge; defaults to the 0.9999 quantile of the step law.
    #[serde(default)]
    pub hi: Option<f64>,
}

impl Default for InvariantParams {
    fn default() -> Self {
        InvariantParams {
            bins: default_bins(),
            hi: None,
        }
    }
}

fn default_stride() -> u64 {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatioParams {
    /// φ = indicator of [phi[0], phi[1]).
    pub phi: [f64; 2],
    /// ψ = indicator of [psi[0], psi[1]).
    pub psi: [f64; 2],
    /// Spacing of the rows in ratio.csv.
    #[serde(default = "default_stride")]
    pub stride: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KacParams {
    /// U = [0, set_hi).
    pub set_hi: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriteriaParams {
    /// Step law; defaults to `system.b_law`.
    #[serde(default)]
    pub law: Option<DistributionSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WienerHopfParams {
    pub mu0: DistributionSpec,
    #[serde(default)]
    pub paths: Option<u64>,
    #[serde(default)]
    pub max_steps: Option<u64>,
    #[serde(default)]
    pub grid_intervals: Option<usize>,
}

fn default_half() -> f64 {
    0.5
}

fn one() -> u64 {
    1
}

fn default_max_steps() -> u64 {
    1 << 20
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DyadicParams {
    pub x: ExactRational,
    pub y: ExactRational,
    /// Number of strictly ascending ladder epochs to follow on each path.
    pub epochs: u64,
    /// Probability of the expanding map |2x − 1|.
    #[serde(default = "default_half")]
    pub p: f64,
    #[serde(default = "one")]
    pub paths: u64,
    /// Paths that have not reached the requested epoch within this many
    /// steps are reported as incomplete.
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeParams {
    pub base: u32,
    pub depth: u32,
    pub seeds: Vec<ExactRational>,
}

/// Names the place of a parse error: the key on the offending line when
/// there is one, with the line number.
fn error_key(text: &str, e: &toml::de::Error) -> String {
    let Some(span) = e.span() else {
        return "<document>".into();
    };
    let line_no = text[..span.start].matches('\n').count() + 1;
    let line = text.lines().nth(line_no - 1).unwrap_or("");
    match line.split_once('=') {
        Some((key, _)) => format!("{} (line {line_no})", key.trim()),
        None => format!("line {line_no}: {}", line.trim()),
    }
}

fn missing(key: &str) -> Error {
    Error::config(key, "required for this kind")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::config(error_key(text, &e), e.message()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that the fields the kind needs are present and that no table
    /// for a different kind is given.
    pub fn validate(&self) -> Result<(), Error> {
        let sections = [
            (Kind::Simulate, self.simulate.is_some()),
            (Kind::Classify, self.classify.is_some()),
            (Kind::Invariant, self.invariant.is_some()),
            (Kind::Ratio, self.ratio.is_some()),
            (Kind::Kac, self.kac.is_some()),
            (Kind::Criteria, self.criteria.is_some()),
            (Kind::WienerHopf, self.wiener_hopf.is_some()),
            (Kind::Dyadic, self.dyadic.is_some()),
            (Kind::Probe, self.probe.is_some()),
        ];
        for (k, present) in sections {
            if present && k != self.kind {
                return Err(Error::config(
                    k.name(),
                    format!("table does not apply to kind `{}`", self.kind.name()),
                ));
            }
        }
        let needs_plan = matches!(
            self.kind,
            Kind::Simulate | Kind::Classify | Kind::Invariant | Kind::Ratio | Kind::Kac
        );
        if needs_plan {
            self.system.as_ref().ok_or_else(|| missing("system"))?;
            let h = self.horizon.ok_or_else(|| missing("horizon"))?;
            if h == 0 {
                return Err(Error::config("horizon", "must be positive"));
            }
        }
        if matches!(self.kind, Kind::Simulate | Kind::Classify | Kind::Invariant | Kind::Kac) {
            let r = self.replicas.ok_or_else(|| missing("replicas"))?;
            if r == 0 {
                return Err(Error::config("replicas", "must be positive"));
            }
        }
        if matches!(self.kind, Kind::Simulate | Kind::Classify | Kind::Invariant | Kind::Ratio) {
            let s = self.starting_points.as_ref().ok_or_else(|| missing("starting_points"))?;
            if s.is_empty() {
                return Err(Error::config("starting_points", "must not be empty"));
            }
        }
        match self.kind {
            Kind::Ratio => {
                let r = self.ratio.as_ref().ok_or_else(|| missing("ratio"))?;
                if r.stride == 0 {
                    return Err(Error::config("ratio.stride", "must be positive"));
                }
            }
            Kind::Kac => {
                self.kac.as_ref().ok_or_else(|| missing("kac"))?;
            }
            Kind::WienerHopf => {
                self.wiener_hopf.as_ref().ok_or_else(|| missing("wiener_hopf"))?;
            }
            Kind::Dyadic => {
                let d = self.dyadic.as_ref().ok_or_else(|| missing("dyadic"))?;
                if !(0.0..=1.0).contains(&d.p) {
                    return Err(Error::config("dyadic.p", "must lie in [0, 1]"));
                }
                if d.paths == 0 {
                    return Err(Error::config("dyadic.paths", "must be positive"));
                }
            }
            Kind::Probe => {
                self.probe.as_ref().ok_or_else(|| missing("probe"))?;
            }
            Kind::Criteria => {
                let from_table = self.criteria.as_ref().and_then(|c| c.law.as_ref()).is_some();
                let from_system = self.system.as_ref().and_then(|s| s.b_law.as_ref()).is_some();
                if !from_table && !from_system {
                    return Err(Error::config("criteria.law", "give a law here or as system.b_law"));
                }
            }
            Kind::Invariant => {
                if let Some(p) = &self.invariant {
                    if p.bins == 0 {
                        return Err(Error::config("invariant.bins", "must be positive"));
                    }
                }
            }
            Kind::Simulate | Kind::Classify => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::parse("kind = \"probe\"\ncolour = 3\n").unwrap_err();
        assert!(matches!(err, Error::Config { .. }), "{err}");
        let err = ExperimentConfig::parse(
            "kind = \"probe\"\n[probe]\nbase = 2\ndepth = 3\nseeds = [\"0\"]\nextra = 1\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("extra"), "{err}");
    }

    #[test]
    fn foreign_tables_and_missing_fields() {
        let err = ExperimentConfig::parse("kind = \"kac\"\n[probe]\nbase = 2\ndepth = 3\nseeds = []\n").unwrap_err();
        assert!(err.to_string().contains("probe"), "{err}");
        let err = ExperimentConfig::parse("kind = \"ratio\"\n").unwrap_err();
        assert!(err.to_string().contains("system"), "{err}");
    }

    #[test]
    fn rationals_parse_from_strings() {
        let cfg = ExperimentConfig::parse(
            "kind = \"dyadic\"\n[dyadic]\nx = \"1\"\ny = \"1/3\"\nepochs = 10\n",
        )
        .unwrap();
        let d = cfg.dyadic.unwrap();
        assert_eq!(d.y.to_string(), "1/3");
        assert_eq!(d.paths, 1);
    }
}
