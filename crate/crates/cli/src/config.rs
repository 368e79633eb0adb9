//! Run configuration: a JSON document, optionally overridden by flags.

use std::path::PathBuf;

use loggas::lemmacheck::LemmaOptions;
use loggas::partition::EdgeTerm;
use loggas::potential::PotentialSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Equilibrium,
    Predict,
    Theta,
    Partition,
    Sample,
    Verify,
    Lemmas,
}

/// A single particle number or an inclusive range written `a..b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NSpec {
    One(u64),
    Range(#[serde(with = "range_text")] (u64, u64)),
}

impl NSpec {
    pub fn parse(text: &str) -> Result<Self, String> {
        match text.split_once("..") {
            Some((a, b)) => {
                let a: u64 = a.trim().parse().map_err(|_| format!("bad range start in `{text}`"))?;
                let b: u64 = b.trim().parse().map_err(|_| format!("bad range end in `{text}`"))?;
                if a > b {
                    return Err(format!("empty range `{text}`"));
                }
                Ok(NSpec::Range((a, b)))
            }
            None => text.trim().parse().map(NSpec::One).map_err(|_| format!("bad particle number `{text}`")),
        }
    }

    pub fn values(&self) -> Vec<u64> {
        match *self {
            NSpec::One(n) => vec![n],
            NSpec::Range((a, b)) => (a..=b).collect(),
        }
    }
}

mod range_text {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &(u64, u64), s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}..{}", r.0, r.1))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(u64, u64), D::Error> {
        let text = String::deserialize(d)?;
        match super::NSpec::parse(&text).map_err(serde::de::Error::custom)? {
            super::NSpec::Range(r) => Ok(r),
            super::NSpec::One(n) => Ok((n, n)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    /// Tridiagonal for the Gaussian potential, Metropolis otherwise.
    #[default]
    Auto,
    Tridiagonal,
    Metropolis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub kind: SamplerKind,
    /// Retained configurations in total.
    pub draws: usize,
    pub chains: usize,
    pub burn_in: usize,
    pub proposal_scale: f64,
    pub thin: Option<usize>,
    pub pin_gaps: Vec<f64>,
}

impl Default for SamplerSection {
    fn default() -> Self {
        SamplerSection {
            kind: SamplerKind::Auto,
            draws: 10_000,
            chains: 4,
            burn_in: 1_000,
            proposal_scale: 0.1,
            thin: None,
            pin_gaps: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionSection {
    pub edge: EdgeTerm,
}

impl Default for PartitionSection {
    fn default() -> Self {
        PartitionSection { edge: EdgeTerm::Normalized }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Multiplies the predicted variance (harness sanity checks).
    pub variance_scale: f64,
    /// Allowed `O(1/n)` drift of the mean, in units of `1/n`.
    pub mean_drift: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection { variance_scale: 1.0, mean_drift: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub potential: Option<PotentialSpec>,
    /// Initial guess for the support intervals.
    #[serde(default)]
    pub support: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub n: Option<NSpec>,
    /// Test function, same structure as the potential.
    #[serde(default)]
    pub h: Option<PotentialSpec>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default)]
    pub partition: PartitionSection,
    #[serde(default)]
    pub lemmas: LemmaOptions,
    #[serde(default)]
    pub verify: VerifySection,
}

impl RunConfig {
    /// Parse a config document; errors carry line and field information.
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("malformed config: {e}"))
    }
}
