//! Potentials, coverage, approximation ratios, and the per-state bounds on
//! covered and uncovered potential.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::chain::z_and_p;
use crate::error::{bail, Error, Result};
use crate::instance::{dist2, optimal_cost_closed_form, Instance, Location, Point};
use crate::seeding::CenterSet;

/// Relative slack used before a closed-form comparison counts as violated.
pub const REL_TOL: f64 = 1e-9;

/// `a ≤ b` up to [`REL_TOL`].
#[inline]
pub fn le_rel(a: f64, b: f64) -> bool {
    a <= b + REL_TOL * a.abs().max(b.abs())
}

/// `Σ weight · min_c ‖p − c‖²`.
pub fn potential(points: &[Location], centers: &[Point]) -> Result<f64> {
    if centers.is_empty() {
        bail!(Domain, "potential needs at least one center");
    }
    Ok(points
        .iter()
        .map(|p| {
            let d = centers.iter().map(|&c| dist2(p.point(), c)).fold(f64::INFINITY, f64::min);
            p.weight * d
        })
        .sum())
}

/// Potential with respect to centers given as location indices.
pub fn potential_of(points: &[Location], centers: &CenterSet) -> Result<f64> {
    potential(points, &centers.coordinates(points)?)
}

fn residuals(points: &[Location], centers: &[usize]) -> Result<Vec<f64>> {
    if centers.is_empty() {
        bail!(Domain, "need at least one center");
    }
    let coords = centers
        .iter()
        .map(|&i| points.get(i).map(Location::point).ok_or(Error::IndexOutOfRange { index: i, len: points.len() }))
        .collect::<Result<Vec<_>>>()?;
    Ok(points
        .iter()
        .map(|p| coords.iter().map(|&c| dist2(p.point(), c)).fold(f64::INFINITY, f64::min))
        .collect())
}

/// `(s, t)`: distinct covered groups and centers among `G_1..G_{k−1}`.
pub(crate) fn coverage_counts(points: &[Location], centers: &[usize]) -> (usize, usize) {
    let mut groups: Vec<usize> = centers.iter().filter_map(|&c| points[c].group).filter(|&g| g >= 1).collect();
    let t = groups.len();
    groups.sort_unstable();
    groups.dedup();
    (groups.len(), t)
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoverageState {
    /// Every group, including `G_0`, that holds at least one center.
    pub covered_groups: BTreeSet<usize>,
    pub s: usize,
    pub t: usize,
    /// The first center is the origin site.
    pub xi: bool,
}

pub fn coverage_state(instance: &Instance, centers: &CenterSet) -> Result<CoverageState> {
    let pts = &instance.locations;
    for &c in centers.indices() {
        if c >= pts.len() {
            return Err(Error::IndexOutOfRange { index: c, len: pts.len() });
        }
    }
    let covered_groups = centers.indices().iter().filter_map(|&c| pts[c].group).collect();
    let (s, t) = coverage_counts(pts, centers.indices());
    let xi = centers.indices().first().is_some_and(|&c| pts[c].group == Some(0));
    Ok(CoverageState { covered_groups, s, t, xi })
}

/// Potential split by group status. `phi_g0` is the origin group's share;
/// `phi_other` collects unlabeled points.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitPotential {
    pub phi_c: f64,
    pub phi_u: f64,
    pub phi_g0: f64,
    pub phi_other: f64,
}

impl SplitPotential {
    pub fn total(&self) -> f64 {
        self.phi_c + self.phi_u + self.phi_g0 + self.phi_other
    }
}

fn split_from_residuals(instance: &Instance, centers: &[usize], d2: &[f64]) -> SplitPotential {
    let pts = &instance.locations;
    let mut covered = vec![false; instance.k()];
    for &c in centers {
        if let Some(g) = pts[c].group {
            covered[g] = true;
        }
    }
    let mut split = SplitPotential { phi_c: 0.0, phi_u: 0.0, phi_g0: 0.0, phi_other: 0.0 };
    for (p, &d) in pts.iter().zip(d2) {
        let v = p.weight * d;
        match p.group {
            Some(0) => split.phi_g0 += v,
            Some(g) if covered[g] => split.phi_c += v,
            Some(_) => split.phi_u += v,
            None => split.phi_other += v,
        }
    }
    split
}

pub fn split_potential(instance: &Instance, centers: &CenterSet) -> Result<SplitPotential> {
    let d2 = residuals(&instance.locations, centers.indices())?;
    Ok(split_from_residuals(instance, centers.indices(), &d2))
}

/// Covered/uncovered potentials of one center set next to their bounds.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LemmaReport {
    pub s: usize,
    pub t: usize,
    pub phi_c: f64,
    pub phi_u: f64,
    /// `(2s − 1)·k·m·r² / 4`.
    pub lower11: f64,
    /// `40·k·(k − s − 1)·m·r²·Δ²`.
    pub upper12: f64,
    /// `4·k·(k − s − 1)·m·r²·Δ²`.
    pub lower13: f64,
    /// Bound on `phi_u / phi_c`; `None` at `s = 0`, where `p_0 = 1` applies.
    pub z_s: Option<f64>,
    pub p_s: f64,
    pub lemma11_ok: bool,
    pub lemma12_ok: bool,
    pub lemma13_ok: bool,
    /// `phi_u / phi_c ≤ z_s` (vacuous when `phi_c = 0` or `s = 0`).
    pub ratio_ok: bool,
    /// `phi_u / (phi_u + phi_c) ≤ p_s`.
    pub psbound_ok: bool,
}

impl LemmaReport {
    /// Builds the report from the residual cache of a seeding run.
    pub(crate) fn from_residuals(instance: &Instance, centers: &[usize], d2: &[f64]) -> Result<Self> {
        let pts = &instance.locations;
        if !centers.iter().any(|&c| pts[c].group == Some(0)) {
            return Err(Error::Conditioning);
        }
        let params = instance.params;
        let k = params.k;
        let (s, t) = coverage_counts(pts, centers);
        if t > k - 1 {
            bail!(Domain, "{t} centers outside G_0 exceed k - 1 = {}", k - 1);
        }
        let split = split_from_residuals(instance, centers, d2);
        let (phi_c, phi_u) = (split.phi_c, split.phi_u);

        let kf = k as f64;
        let unit = params.m * params.r * params.r;
        let dd = params.delta_geom * params.delta_geom;
        let uncovered = (k - 1 - s) as f64;
        let lower11 = (2.0 * s as f64 - 1.0) * kf * unit / 4.0;
        let upper12 = 40.0 * kf * uncovered * unit * dd;
        let lower13 = 4.0 * kf * uncovered * unit * dd;

        let (z_s, p_s) = if s == 0 {
            (None, 1.0)
        } else {
            let (z, p) = z_and_p(k - 1, params.delta_geom, s)?;
            (Some(z), p)
        };
        let ratio_ok = match z_s {
            Some(z) if phi_c > 0.0 => le_rel(phi_u, z * phi_c),
            _ => true,
        };
        let frac = if phi_u + phi_c > 0.0 { phi_u / (phi_u + phi_c) } else { 0.0 };

        Ok(Self {
            s,
            t,
            phi_c,
            phi_u,
            lower11,
            upper12,
            lower13,
            z_s,
            p_s,
            lemma11_ok: le_rel(lower11, phi_c),
            lemma12_ok: le_rel(phi_u, upper12),
            lemma13_ok: le_rel(lower13, phi_u),
            ratio_ok,
            psbound_ok: le_rel(frac, p_s),
        })
    }

    pub fn all_ok(&self) -> bool {
        self.lemma11_ok && self.lemma12_ok && self.lemma13_ok && self.ratio_ok && self.psbound_ok
    }
}

/// Evaluates the potential bounds for `centers`, which must include the
/// origin site.
pub fn lemma_bound_report(instance: &Instance, centers: &CenterSet) -> Result<LemmaReport> {
    let d2 = residuals(&instance.locations, centers.indices())?;
    LemmaReport::from_residuals(instance, centers.indices(), &d2)
}

/// `Φ / Φ*` for the instance family.
pub fn approximation_ratio(instance: &Instance, centers: &CenterSet) -> Result<f64> {
    if instance.k() < 2 {
        bail!(Domain, "approximation ratio needs k >= 2 (the optimum is 0 at k = 1)");
    }
    let opt = optimal_cost_closed_form(&instance.params)?;
    Ok(potential_of(&instance.locations, centers)? / opt)
}

/// `s* = ⌈k̄·(1 − α/(2Δ²))⌉`, clamped to `[0, k̄]`: the fewest groups among
/// `G_1..G_{k̄}` any `α`-approximate solution must cover.
pub fn min_covered_for_alpha(k_bar: usize, delta_geom: f64, alpha: f64) -> Result<usize> {
    if !(delta_geom.is_finite() && delta_geom >= 1.0) {
        bail!(InvalidParameter, "delta must be finite and at least 1, got {delta_geom}");
    }
    if !(alpha > 0.0) {
        bail!(InvalidParameter, "alpha must be positive, got {alpha}");
    }
    let u = alpha / (2.0 * delta_geom * delta_geom);
    let s = ceil_k_minus(k_bar as f64, k_bar as f64 * u);
    Ok((s as usize).min(k_bar))
}

/// `⌈k̄ − y⌉` clamped to `[0, k̄]`, for `y ≥ 0`.
///
/// For integer `k̄` this is `k̄ − ⌊y⌋`; the floor gets a small relative slack so
/// a `y` that is mathematically an integer is not pushed below it by roundoff.
pub(crate) fn ceil_k_minus(k_bar: f64, y: f64) -> f64 {
    let s = if libm::floor(k_bar) == k_bar {
        k_bar - libm::floor(y + 1e-12 * y.max(1.0))
    } else {
        let x = k_bar - y;
        libm::ceil(x - 1e-12 * x.abs().max(1.0))
    };
    s.clamp(0.0, k_bar)
}
