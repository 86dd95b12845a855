//! Experiment configuration. Values come from an optional JSON file and are
//! overridden field by field by command-line flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use kmpp_core::chain::schedule;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::formats::read_json;

pub const DEFAULT_DELTA_EXP: f64 = 1.0 / 120.0;
pub const DEFAULT_TRIALS: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 0;

/// How the group spacing of a generated instance is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaSpec {
    Value(f64),
    /// `Δ = 2^k`.
    PowK,
    /// `Δ` from the schedule at `k̄ = k − 1`; requires `α > 1`.
    Schedule,
}

impl FromStr for DeltaSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "2^k" | "pow2k" => Ok(DeltaSpec::PowK),
            "schedule" => Ok(DeltaSpec::Schedule),
            v => v.parse::<f64>().map(DeltaSpec::Value).map_err(|_| format!("expected a number, \"2^k\" or \"schedule\", got {v:?}")),
        }
    }
}

impl Serialize for DeltaSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DeltaSpec::Value(v) => s.serialize_f64(*v),
            DeltaSpec::PowK => s.serialize_str("2^k"),
            DeltaSpec::Schedule => s.serialize_str("schedule"),
        }
    }
}

impl<'de> Deserialize<'de> for DeltaSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(DeltaSpec::Value(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl DeltaSpec {
    /// Spacing for an instance with `k` groups.
    pub fn resolve(&self, k: usize, delta_exp: f64) -> Result<f64> {
        match *self {
            DeltaSpec::Value(v) => Ok(v),
            DeltaSpec::PowK => {
                if k > 1000 {
                    return Err(param!("2^k spacing overflows for k = {k}"));
                }
                Ok(2f64.powi(k as i32))
            }
            DeltaSpec::Schedule => {
                if k < 3 {
                    return Err(kmpp_core::Error::Schedule(format!("k = {k} gives k_bar <= 1")).into());
                }
                let sv = schedule((k - 1) as f64, delta_exp)?;
                if !sv.valid {
                    return Err(kmpp_core::Error::Schedule(format!(
                        "alpha = delta_exp * ln(k_bar) = {} <= 1 at k = {k}",
                        sv.alpha
                    ))
                    .into());
                }
                Ok(sv.delta_sched)
            }
        }
    }
}

/// Parses `8,16,32` or `2..=5`.
pub fn parse_k_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..=") {
        let (a, b): (usize, usize) = (a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?);
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse::<usize>().map_err(|e| format!("bad k {t:?}: {e}"))).collect()
}

/// Config file contents. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub k: Option<KList>,
    pub m: Option<f64>,
    pub r: Option<f64>,
    pub delta: Option<DeltaSpec>,
    pub delta_exp: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub instance: Option<PathBuf>,
}

/// A single `k` or a list of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KList {
    One(usize),
    Many(Vec<usize>),
}

impl KList {
    pub fn into_vec(self) -> Vec<usize> {
        match self {
            KList::One(k) => vec![k],
            KList::Many(v) => v,
        }
    }
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), read_json)
    }
}

/// Fully resolved experiment settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub ks: Vec<usize>,
    pub m: f64,
    pub r: f64,
    pub delta: DeltaSpec,
    pub delta_exp: f64,
    pub trials: u64,
    pub base_seed: u64,
    /// Output directory for trial CSVs and summaries.
    pub out_dir: PathBuf,
    /// Worker threads; 0 means available parallelism.
    pub threads: usize,
    /// Read the instance from here instead of generating it.
    pub instance: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(param!("trials must be at least 1"));
        }
        if self.ks.is_empty() && self.instance.is_none() {
            return Err(param!("no k given"));
        }
        if !(self.delta_exp.is_finite() && self.delta_exp > 0.0) {
            return Err(param!("delta_exp must be positive, got {}", self.delta_exp));
        }
        if self.delta == DeltaSpec::Schedule && self.delta_exp > 1.0 / 120.0 {
            return Err(kmpp_core::Error::Schedule(format!("delta_exp must lie in (0, 1/120], got {}", self.delta_exp)).into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_spec_parses() {
        assert_eq!("4096".parse::<DeltaSpec>().unwrap(), DeltaSpec::Value(4096.0));
        assert_eq!("2^k".parse::<DeltaSpec>().unwrap(), DeltaSpec::PowK);
        assert_eq!("schedule".parse::<DeltaSpec>().unwrap(), DeltaSpec::Schedule);
        assert!("wide".parse::<DeltaSpec>().is_err());
        let c: ConfigFile = serde_json::from_str(r#"{"k":[8,16],"delta":"2^k","trials":5}"#).unwrap();
        assert_eq!(c.delta, Some(DeltaSpec::PowK));
        assert_eq!(c.k.unwrap().into_vec(), [8, 16]);
        let c: ConfigFile = serde_json::from_str(r#"{"k":3,"delta":64}"#).unwrap();
        assert_eq!(c.delta, Some(DeltaSpec::Value(64.0)));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(serde_json::from_str::<ConfigFile>(r#"{"kk":3}"#).is_err());
    }

    #[test]
    fn k_lists() {
        assert_eq!(parse_k_list("8,16,32").unwrap(), [8, 16, 32]);
        assert_eq!(parse_k_list("2..=4").unwrap(), [2, 3, 4]);
        assert!(parse_k_list("a").is_err());
    }

    #[test]
    fn schedule_spacing_needs_alpha_above_one() {
        let e = DeltaSpec::Schedule.resolve(20, 0.008).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert_eq!(DeltaSpec::PowK.resolve(12, 0.1).unwrap(), 4096.0);
    }
}
