//! Subcommand implementations, independent of argument parsing.

use std::path::{Path, PathBuf};

use kmpp_core::chain::{
    check_inequalities, expected_steps, hitting_probability_dp, hoeffding_from_schedule, schedule, schedule_ln,
    theorem_bound, theorem_bound_ln, ChainParams, ExpectedSteps, HoeffdingBound, InequalityFlags, ScheduleValues,
    TheoremBound,
};
use kmpp_core::evaluation::{
    approximation_ratio, coverage_state, lemma_bound_report, min_covered_for_alpha, potential, split_potential,
    CoverageState, LemmaReport, SplitPotential,
};
use kmpp_core::oracle::{brute_force_optimal, exact_seeding_distribution, first_center_distribution, PartitionResult};
use kmpp_core::seeding::{kmeanspp_seed, lloyd};
use kmpp_core::{build_instance, CenterSet, Instance, InstanceParams, Point, RngStream, SeedingTrace, TrialRecord};
use serde::{Deserialize, Serialize};

use crate::config::{DeltaSpec, ExperimentConfig};
use crate::error::{param, CliError, Result};
use crate::formats::{read_summary, report_csv, write_json, write_trials_csv, CentersFile, InstanceFile, ReportRow, Summary};
use crate::runner::{chain_hits, run_trials_parallel};
use crate::stats::{binomial_se, wilson};

/// Largest `k̄` the chain DP and simulations accept.
pub const MAX_CHAIN_KBAR: f64 = 1e8;

pub fn gen_instance(k: usize, m: f64, r: f64, delta: DeltaSpec, delta_exp: f64) -> Result<Instance> {
    let d = delta.resolve(k, delta_exp)?;
    Ok(build_instance(InstanceParams::new(k, m, r, d)?)?)
}

pub fn cmd_gen(k: usize, m: f64, r: f64, delta: DeltaSpec, delta_exp: f64, out: Option<&Path>) -> Result<()> {
    let inst = gen_instance(k, m, r, delta, delta_exp)?;
    write_json(out, &InstanceFile::from(&inst))
}

/// `Φ/Φ*` when the point set is a labeled family instance with `k ≥ 2`.
fn family_ratio(inst: &Instance, centers: &CenterSet) -> Option<f64> {
    let labeled = inst.locations.iter().all(|l| l.group.is_some());
    (labeled && inst.k() >= 2).then(|| approximation_ratio(inst, centers).ok()).flatten()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedOutput {
    pub base_seed: u64,
    pub trial: u64,
    pub centers: CenterSet,
    pub coordinates: Vec<Point>,
    pub trace: SeedingTrace,
    pub potential: f64,
    pub ratio: Option<f64>,
    pub lloyd_centers: Option<Vec<Point>>,
    pub lloyd_potential: Option<f64>,
}

pub fn cmd_seed(inst: &Instance, k: Option<usize>, base_seed: u64, trial: u64, lloyd_iters: Option<usize>) -> Result<SeedOutput> {
    let k = k.unwrap_or(inst.k());
    let mut rng = RngStream::new(base_seed, trial);
    let (centers, trace) = kmeanspp_seed(&inst.locations, k, &mut rng)?;
    let coordinates = centers.coordinates(&inst.locations)?;
    let pot = potential(&inst.locations, &coordinates)?;
    let (lloyd_centers, lloyd_potential) = match lloyd_iters {
        Some(n) => {
            let c = lloyd(&inst.locations, &coordinates, n, 0.0)?;
            let p = potential(&inst.locations, &c)?;
            (Some(c), Some(p))
        }
        None => (None, None),
    };
    Ok(SeedOutput {
        base_seed,
        trial,
        ratio: family_ratio(inst, &centers),
        centers,
        coordinates,
        trace,
        potential: pot,
        lloyd_centers,
        lloyd_potential,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluateOutput {
    pub potential: f64,
    /// Location indices of the centers, when every center sits on a location.
    pub centers: Option<CenterSet>,
    pub ratio: Option<f64>,
    pub coverage: Option<CoverageState>,
    pub split: Option<SplitPotential>,
    pub lemma_report: Option<LemmaReport>,
    /// Why `lemma_report` is absent.
    pub lemma_note: Option<String>,
}

pub fn cmd_evaluate(inst: &Instance, centers: &CentersFile) -> Result<EvaluateOutput> {
    let (coords, indices) = match centers {
        CentersFile::Indices(ix) => {
            let set = CenterSet(ix.clone());
            (set.coordinates(&inst.locations)?, Some(set))
        }
        CentersFile::Coordinates(c) => {
            let ix: Option<Vec<usize>> =
                c.iter().map(|p| inst.locations.iter().position(|l| l.point() == *p)).collect();
            (c.clone(), ix.map(CenterSet))
        }
    };
    if coords.is_empty() {
        return Err(param!("no centers given"));
    }
    let pot = potential(&inst.locations, &coords)?;
    let mut out = EvaluateOutput {
        potential: pot,
        centers: indices.clone(),
        ratio: None,
        coverage: None,
        split: None,
        lemma_report: None,
        lemma_note: None,
    };
    match &indices {
        None => out.lemma_note = Some("centers do not all coincide with locations".into()),
        Some(set) => {
            out.ratio = family_ratio(inst, set);
            out.coverage = Some(coverage_state(inst, set)?);
            out.split = split_potential(inst, set).ok();
            match lemma_bound_report(inst, set) {
                Ok(r) => out.lemma_report = Some(r),
                Err(e) => out.lemma_note = Some(e.to_string()),
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExactSeedingSummary {
    pub outcomes: usize,
    pub total_probability: f64,
    pub pr_xi: f64,
    /// Entry `c` is `Pr[at least c groups among G_1..G_{k−1} covered]`.
    pub pr_covered_at_least: Vec<f64>,
    pub alpha: Option<f64>,
    pub pr_ratio_at_most_alpha: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleOutput {
    pub k: usize,
    pub brute_force: PartitionResult,
    pub first_center: Vec<f64>,
    pub exact_seeding: Option<ExactSeedingSummary>,
}

pub fn cmd_oracle(
    inst: &Instance,
    k: Option<usize>,
    max_locations: usize,
    exact: Option<u128>,
    alpha: Option<f64>,
) -> Result<OracleOutput> {
    let k = k.unwrap_or(inst.k());
    let brute_force = brute_force_optimal(&inst.locations, k, max_locations)?;
    let first_center = first_center_distribution(&inst.locations)?;
    let exact_seeding = match exact {
        None => None,
        Some(budget) => {
            let dist = exact_seeding_distribution(&inst.locations, k, budget)?;
            let groups = inst.k().saturating_sub(1);
            let pr_covered_at_least =
                (0..=groups).map(|c| dist.prob_covered_at_least(inst, c)).collect::<kmpp_core::Result<Vec<_>>>()?;
            let pr_ratio_at_most_alpha = alpha.map(|a| dist.prob_ratio_at_most(inst, a)).transpose()?;
            Some(ExactSeedingSummary {
                outcomes: dist.outcomes.len(),
                total_probability: dist.total_probability(),
                pr_xi: dist.prob_xi(inst),
                pr_covered_at_least,
                alpha,
                pr_ratio_at_most_alpha,
            })
        }
    };
    Ok(OracleOutput { k, brute_force, first_center, exact_seeding })
}

#[derive(Debug, Clone, Default)]
pub struct ChainArgs {
    pub kbar: Option<f64>,
    pub ln_kbar: Option<f64>,
    pub delta_exp: f64,
    pub geom_delta: Option<f64>,
    pub alpha: Option<f64>,
    pub steps: Option<u64>,
    pub dp: bool,
    pub mc: Option<u64>,
    pub check_ineq: bool,
    pub seed: u64,
    pub threads: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McEstimate {
    pub walks: u64,
    pub hits: u64,
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainOutput {
    pub k_bar: f64,
    pub ln_k_bar: f64,
    pub delta_exp: f64,
    pub delta: f64,
    pub alpha: f64,
    pub s_star: f64,
    pub steps: Option<u64>,
    pub schedule: Option<ScheduleValues>,
    pub inequalities: Option<InequalityFlags>,
    pub dp: Option<f64>,
    pub mc: Option<McEstimate>,
    pub expected_steps: Option<ExpectedSteps>,
    pub hoeffding: Option<HoeffdingBound>,
    pub theorem_bound: Option<TheoremBound>,
}

pub fn cmd_chain(a: &ChainArgs) -> Result<ChainOutput> {
    let (k_bar, ln_k_bar) = match (a.kbar, a.ln_kbar) {
        (Some(k), None) => (k, k.ln()),
        (None, Some(l)) => (l.exp(), l),
        (Some(_), Some(_)) => return Err(param!("give either --kbar or --ln-kbar, not both")),
        (None, None) => return Err(param!("one of --kbar or --ln-kbar is required")),
    };
    if k_bar.is_nan() || k_bar < 1.0 {
        return Err(param!("k_bar must be at least 1, got {k_bar}"));
    }
    let sched = if a.kbar.is_some() { schedule(k_bar, a.delta_exp) } else { schedule_ln(ln_k_bar, a.delta_exp) };
    let sched = match (sched, a.geom_delta) {
        (Ok(sv), Some(g)) => Some(sv.with_delta(g)?),
        (Ok(sv), None) => Some(sv),
        // Without a schedule the chain is still defined by explicit Δ and α.
        (Err(_), Some(_)) if a.alpha.is_some() => None,
        (Err(e), _) => return Err(e.into()),
    };
    let delta = a.geom_delta.or(sched.as_ref().map(|s| s.delta_sched)).expect("schedule or explicit delta");
    let alpha = a.alpha.or(sched.as_ref().map(|s| s.alpha)).expect("schedule or explicit alpha");

    let needs_chain = a.dp || a.mc.is_some();
    let int_kbar = (k_bar.fract() == 0.0 && k_bar <= MAX_CHAIN_KBAR).then_some(k_bar as usize);
    let s_star = match (a.alpha, int_kbar) {
        (Some(al), Some(kb)) => min_covered_for_alpha(kb, delta, al)? as f64,
        (Some(_), None) => return Err(param!("--alpha needs an integer k_bar up to {MAX_CHAIN_KBAR}")),
        (None, _) => sched.as_ref().expect("schedule").s_star,
    };

    let mut out = ChainOutput {
        k_bar,
        ln_k_bar,
        delta_exp: a.delta_exp,
        delta,
        alpha,
        s_star,
        steps: None,
        inequalities: if a.check_ineq { sched.as_ref().map(check_inequalities) } else { None },
        schedule: sched,
        dp: None,
        mc: None,
        expected_steps: None,
        hoeffding: sched.as_ref().filter(|s| s.valid).map(hoeffding_from_schedule).transpose()?,
        theorem_bound: theorem_for_kbar(k_bar, ln_k_bar, a.delta_exp),
    };

    if needs_chain {
        let kb = int_kbar.ok_or_else(|| param!("the chain needs an integer k_bar up to {MAX_CHAIN_KBAR}, got {k_bar}"))?;
        let params = ChainParams::new(kb, delta, s_star as usize)?;
        let steps = a.steps.unwrap_or(kb as u64);
        out.steps = Some(steps);
        out.expected_steps = Some(expected_steps(&params));
        if a.dp {
            out.dp = Some(hitting_probability_dp(&params, steps));
        }
        if let Some(walks) = a.mc {
            if walks == 0 {
                return Err(param!("--mc needs at least one walk"));
            }
            let hits = chain_hits(&params, steps, walks, a.seed, a.threads)?;
            let est = hits as f64 / walks as f64;
            out.mc = Some(McEstimate { walks, hits, estimate: est, std_error: binomial_se(est, walks) });
        }
    }
    Ok(out)
}

fn theorem_for_kbar(k_bar: f64, ln_k_bar: f64, delta_exp: f64) -> Option<TheoremBound> {
    let res = if k_bar + 1.0 <= u64::MAX as f64 / 2.0 && k_bar.fract() == 0.0 {
        theorem_bound(k_bar as u64 + 1, delta_exp)
    } else {
        theorem_bound_ln(ln_k_bar, delta_exp)
    };
    res.ok()
}

/// Summary statistics of one batch of trials.
pub fn summarize(inst: &Instance, recs: &[TrialRecord], delta_exp: f64, alpha: f64, base_seed: u64) -> Result<Summary> {
    let p = inst.params;
    let n = recs.len() as u64;
    if n == 0 {
        return Err(param!("no trials to summarize"));
    }
    let k_bar = p.k - 1;
    let s_star = min_covered_for_alpha(k_bar, p.delta_geom, alpha)?;
    let dp = hitting_probability_dp(&ChainParams::new(k_bar, p.delta_geom, s_star)?, k_bar as u64);
    let count = |f: &dyn Fn(&TrialRecord) -> bool| recs.iter().filter(|r| f(r)).count() as u64;
    let successes = count(&|r| r.success);
    let xi_count = count(&|r| r.xi);
    let covered_s_star = count(&|r| r.xi && r.covered >= s_star);
    let (slo, shi) = wilson(successes, n);
    let (xlo, xhi) = wilson(xi_count, n);
    let xi_exact = match inst.origin_index() {
        Some(i) => inst.locations[i].weight / inst.total_mass,
        None => 0.0,
    };
    let (theorem, valid) = match theorem_bound(p.k as u64, delta_exp) {
        Ok(t) => (Some(t.value), t.valid),
        Err(kmpp_core::Error::Schedule(_)) => (None, false),
        Err(e) => return Err(e.into()),
    };
    Ok(Summary {
        k: p.k,
        m: p.m,
        r: p.r,
        delta: p.delta_geom,
        delta_exp,
        alpha,
        trials: n,
        base_seed,
        successes,
        success_rate: successes as f64 / n as f64,
        success_wilson_lo: slo,
        success_wilson_hi: shi,
        xi_count,
        xi_rate: xi_count as f64 / n as f64,
        xi_wilson_lo: xlo,
        xi_wilson_hi: xhi,
        xi_exact,
        lemma11_violations: count(&|r| r.lemma11_ok == Some(false)),
        lemma12_violations: count(&|r| r.lemma12_ok == Some(false)),
        lemma13_violations: count(&|r| r.lemma13_ok == Some(false)),
        psbound_violations: count(&|r| r.psbound_ok == Some(false)),
        coverage_violations: count(&|r| r.success && r.covered < s_star),
        mean_ratio: recs.iter().map(|r| r.ratio).sum::<f64>() / n as f64,
        s_star,
        covered_s_star,
        coverage_rate: if xi_count == 0 { 0.0 } else { covered_s_star as f64 / xi_count as f64 },
        dp,
        theorem_bound: theorem,
        theorem_valid: valid,
    })
}

pub fn trials_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("trials_k{k}.csv"))
}

pub fn summary_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("summary_k{k}.json"))
}

/// Runs every configured `k`, writing `trials_k{K}.csv` and
/// `summary_k{K}.json` under the output directory.
pub fn cmd_experiment(cfg: &ExperimentConfig) -> Result<Vec<Summary>> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::io(&cfg.out_dir, e))?;
    let instances: Vec<Instance> = match &cfg.instance {
        Some(path) => vec![crate::formats::read_instance(path)?],
        None => cfg
            .ks
            .iter()
            .map(|&k| gen_instance(k, cfg.m, cfg.r, cfg.delta, cfg.delta_exp))
            .collect::<Result<_>>()?,
    };
    let mut out = Vec::with_capacity(instances.len());
    for inst in &instances {
        let k = inst.k();
        if k < 2 {
            return Err(param!("experiments need k >= 2"));
        }
        let alpha = cfg.delta_exp * (k as f64).ln();
        log::info!("k = {k}: {} trials, delta = {}, alpha = {alpha}", cfg.trials, inst.params.delta_geom);
        let recs = run_trials_parallel(inst, cfg.trials, cfg.base_seed, alpha, cfg.threads)?;
        write_trials_csv(&trials_path(&cfg.out_dir, k), &recs)?;
        let summary = summarize(inst, &recs, cfg.delta_exp, alpha, cfg.base_seed)?;
        log::info!("k = {k}: success rate {}, xi rate {}", summary.success_rate, summary.xi_rate);
        write_json(Some(&summary_path(&cfg.out_dir, k)), &summary)?;
        out.push(summary);
    }
    Ok(out)
}

/// Merges summaries into one table sorted by `k`.
pub fn cmd_report(inputs: &[PathBuf]) -> Result<String> {
    if inputs.is_empty() {
        return Err(param!("report needs at least one summary file"));
    }
    let mut rows: Vec<ReportRow> = inputs.iter().map(|p| read_summary(p).map(|s| ReportRow::from(&s))).collect::<Result<_>>()?;
    rows.sort_by_key(|r| r.k);
    report_csv(&rows)
}
