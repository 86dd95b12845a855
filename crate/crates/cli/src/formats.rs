//! On-disk formats: instance and center JSON, trial CSV, summary JSON and the
//! report CSV.
//!
//! Floats are written in shortest round-trip form, so every artifact parses
//! back to bit-identical values.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use kmpp_core::{Instance, InstanceParams, Location, Point, TrialRecord};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{param, CliError, Result};

/// Instance JSON. Locations outside the family carry `group = level = -1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub k: usize,
    pub m: f64,
    pub r: f64,
    pub delta: f64,
    pub locations: Vec<LocationRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocationRow {
    pub group: i64,
    pub level: i64,
    pub x: f64,
    pub y: f64,
    pub weight: f64,
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        let p = inst.params;
        let locations = inst
            .locations
            .iter()
            .map(|l| match l.group {
                Some(g) => LocationRow { group: g as i64, level: l.level as i64, x: l.x, y: l.y, weight: l.weight },
                None => LocationRow { group: -1, level: -1, x: l.x, y: l.y, weight: l.weight },
            })
            .collect();
        Self { k: p.k, m: p.m, r: p.r, delta: p.delta_geom, locations }
    }
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance> {
        let params = InstanceParams::new(self.k, self.m, self.r, self.delta)?;
        let mut locations = Vec::with_capacity(self.locations.len());
        for (i, row) in self.locations.into_iter().enumerate() {
            let loc = match row.group {
                -1 => Location::unlabeled(row.x, row.y, row.weight),
                g if g >= 0 => {
                    let level = i32::try_from(row.level).map_err(|_| param!("location {i}: level {} out of range", row.level))?;
                    Location { group: Some(g as usize), level, x: row.x, y: row.y, weight: row.weight }
                }
                g => return Err(param!("location {i}: group {g} is neither -1 nor a group index")),
            };
            locations.push(loc);
        }
        if locations.is_empty() {
            return Err(param!("instance has no locations"));
        }
        Ok(Instance::from_parts(params, locations)?)
    }
}

/// Centers JSON: either location indices or explicit coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CentersFile {
    Indices(Vec<usize>),
    Coordinates(Vec<Point>),
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    read_json::<InstanceFile>(path)?.into_instance()
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            }
            std::fs::write(p, text).map_err(|e| CliError::io(p, e))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    emit(path, &to_json_string(value))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

/// Trial CSV with columns
/// `trial,seed,k,m,r,delta,xi,covered,t_centers,ratio,success,lemma11_ok,lemma12_ok,lemma13_ok,psbound_ok`.
/// Lemma columns are empty for trials whose first center missed the origin.
pub fn write_trials_csv(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_trials_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Summary of one experiment at a fixed `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub k: usize,
    pub m: f64,
    pub r: f64,
    pub delta: f64,
    pub delta_exp: f64,
    /// Success threshold `δ·ln k`.
    pub alpha: f64,
    pub trials: u64,
    pub base_seed: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub success_wilson_lo: f64,
    pub success_wilson_hi: f64,
    pub xi_count: u64,
    pub xi_rate: f64,
    pub xi_wilson_lo: f64,
    pub xi_wilson_hi: f64,
    /// Exact probability that the first center is the origin site.
    pub xi_exact: f64,
    pub lemma11_violations: u64,
    pub lemma12_violations: u64,
    pub lemma13_violations: u64,
    pub psbound_violations: u64,
    /// Successful trials covering fewer groups than `s_star`.
    pub coverage_violations: u64,
    pub mean_ratio: f64,
    /// Groups among `G_1..G_{k−1}` an `alpha`-approximation must cover.
    pub s_star: usize,
    /// Trials with the origin first and at least `s_star` groups covered.
    pub covered_s_star: u64,
    /// `covered_s_star / xi_count`.
    pub coverage_rate: f64,
    /// Chain probability of covering `s_star` groups within `k − 1` steps.
    pub dp: f64,
    /// `None` when `delta_exp` lies outside the range the bound is defined on.
    pub theorem_bound: Option<f64>,
    pub theorem_valid: bool,
}

/// One row of the report table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub k: usize,
    pub delta: f64,
    pub delta_exp: f64,
    pub alpha: f64,
    pub trials: u64,
    pub success_rate: f64,
    pub success_wilson_lo: f64,
    pub success_wilson_hi: f64,
    pub xi_rate: f64,
    pub xi_exact: f64,
    pub s_star: usize,
    pub coverage_rate: f64,
    pub dp: f64,
    pub theorem_bound: Option<f64>,
    pub theorem_valid: bool,
}

impl From<&Summary> for ReportRow {
    fn from(s: &Summary) -> Self {
        Self {
            k: s.k,
            delta: s.delta,
            delta_exp: s.delta_exp,
            alpha: s.alpha,
            trials: s.trials,
            success_rate: s.success_rate,
            success_wilson_lo: s.success_wilson_lo,
            success_wilson_hi: s.success_wilson_hi,
            xi_rate: s.xi_rate,
            xi_exact: s.xi_exact,
            s_star: s.s_star,
            coverage_rate: s.coverage_rate,
            dp: s.dp,
            theorem_bound: s.theorem_bound,
            theorem_valid: s.theorem_valid,
        }
    }
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Schema { path: path.to_path_buf(), reason: e.to_string() })
}

/// Report CSV as a string, rows in the given order.
pub fn report_csv(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        return Ok(String::new());
    }
    let bytes = w.into_inner().map_err(|e| CliError::io(PathBuf::from("<report>"), e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn read_report_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use kmpp_core::build_instance;

    #[test]
    fn instance_round_trips() {
        let inst = build_instance(InstanceParams::new(4, 0.3, 1.7, 3.1).unwrap()).unwrap();
        let text = to_json_string(&InstanceFile::from(&inst));
        let back: InstanceFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_instance().unwrap(), inst);
    }

    #[test]
    fn unlabeled_points_use_sentinels() {
        let params = InstanceParams::new(2, 1.0, 1.0, 1.0).unwrap();
        let inst = Instance::from_parts(params, vec![Location::unlabeled(0.5, -2.0, 3.0)]).unwrap();
        let file = InstanceFile::from(&inst);
        assert_eq!((file.locations[0].group, file.locations[0].level), (-1, -1));
        assert_eq!(file.into_instance().unwrap(), inst);
    }

    #[test]
    fn bad_group_is_rejected() {
        let f = InstanceFile {
            k: 2,
            m: 1.0,
            r: 1.0,
            delta: 1.0,
            locations: vec![LocationRow { group: -3, level: 0, x: 0.0, y: 0.0, weight: 1.0 }],
        };
        assert_eq!(f.into_instance().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn awkward_floats_round_trip() {
        // The default JSON float parser misreads this one by an ulp.
        let x = 0.999_998_106_958_949_5_f64;
        let text = to_json_string(&x);
        assert_eq!(serde_json::from_str::<f64>(&text).unwrap().to_bits(), x.to_bits());
        let rows = [ReportRow {
            k: 8,
            delta: 256.0,
            delta_exp: 1.0 / 120.0,
            alpha: 0.017_328_679_513_998_63,
            trials: 3,
            success_rate: 1.0 / 3.0,
            success_wilson_lo: 0.1,
            success_wilson_hi: 0.2,
            xi_rate: 1.0,
            xi_exact: 0.998_122_860_245_028,
            s_star: 7,
            coverage_rate: 1.0,
            dp: x,
            theorem_bound: None,
            theorem_valid: false,
        }];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        std::fs::write(&path, report_csv(&rows).unwrap()).unwrap();
        assert_eq!(read_report_csv(&path).unwrap(), rows);
    }

    #[test]
    fn centers_accept_both_shapes() {
        assert_eq!(serde_json::from_str::<CentersFile>("[0, 3]").unwrap(), CentersFile::Indices(vec![0, 3]));
        assert_eq!(
            serde_json::from_str::<CentersFile>("[[0.0, 1.5], [2, 3]]").unwrap(),
            CentersFile::Coordinates(vec![[0.0, 1.5], [2.0, 3.0]])
        );
    }

    #[test]
    fn trial_csv_header_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let inst = build_instance(InstanceParams::new(3, 1.0, 1.0, 8.0).unwrap()).unwrap();
        let recs = kmpp_core::seeding::run_trials(&inst, 20, 1, 2.0).unwrap();
        write_trials_csv(&path, &recs).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "trial,seed,k,m,r,delta,xi,covered,t_centers,ratio,success,lemma11_ok,lemma12_ok,lemma13_ok,psbound_ok"
        );
        assert_eq!(read_trials_csv(&path).unwrap(), recs);
    }
}
