//! The covering Markov chain and its parameter schedule.
//!
//! States `v_0, …, v_{s*}` count covered groups. From `v_s` the chain moves
//! to `v_{s+1}` with probability `p_s` and stays otherwise; `v_{s*}` absorbs.
//! `p_0 = 1` and `p_s = z_s / (1 + z_s)` with
//! `z_s = (k̄ − s)·80·Δ² / (s − 1/2)`.
//!
//! The schedule ties `α`, `ε`, `Δ`, `u` and `s*` to `k̄` and the exponent
//! `δ`. Its quantities over- and underflow binary64 quickly, so everything
//! is carried as logarithms and exponentiated only for reporting. All
//! logarithms are natural.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{bail, Result};
use crate::evaluation::min_covered_for_alpha;

const LN_2: f64 = core::f64::consts::LN_2;
/// Below this `Δ` is rounded up to an integer; above it the ceiling is
/// immaterial at binary64 precision.
const CEIL_LIMIT_LN: f64 = 53.0 * LN_2;

/// Schedule values at one `(k̄, δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScheduleValues {
    /// `k̄`; `inf` when only `ln k̄` is representable.
    pub k_bar: f64,
    pub ln_k_bar: f64,
    pub delta_exp: f64,
    /// `α = δ·ln k̄`.
    pub alpha: f64,
    /// `ε = ln α / (120 α)`.
    pub eps: f64,
    /// `√α · exp(20·α·(1 + ε))` before rounding.
    pub delta_sched_real: f64,
    pub ln_delta_sched_real: f64,
    /// The `Δ` in use: the rounded-up schedule value unless overridden.
    pub delta_sched: f64,
    pub ln_delta_sched: f64,
    /// `u = α / (2Δ²)`.
    pub u: f64,
    pub ln_u: f64,
    /// `⌈k̄·(1 − u)⌉` clamped to `[0, k̄]`, as a float since `k̄` may be huge.
    pub s_star: f64,
    /// `α > 1`; below that `ε ≤ 0` and the tail bound is vacuous.
    pub valid: bool,
    /// `Δ` was supplied explicitly instead of taken from the schedule.
    pub delta_overridden: bool,
}

/// Schedule at `k̄` for exponent `δ ∈ (0, 1/120]`.
pub fn schedule(k_bar: f64, delta_exp: f64) -> Result<ScheduleValues> {
    if !(k_bar > 1.0) {
        bail!(Schedule, "k_bar must exceed 1, got {k_bar}");
    }
    let mut sv = schedule_ln(libm::log(k_bar), delta_exp)?;
    sv.k_bar = k_bar;
    sv.set_delta(sv.delta_sched, sv.ln_delta_sched);
    Ok(sv)
}

/// Schedule from `ln k̄`, for `k̄` beyond binary64 range.
pub fn schedule_ln(ln_k_bar: f64, delta_exp: f64) -> Result<ScheduleValues> {
    if !(delta_exp > 0.0 && delta_exp <= 1.0 / 120.0) {
        bail!(Schedule, "delta must lie in (0, 1/120], got {delta_exp}");
    }
    if !(ln_k_bar > 0.0) || !ln_k_bar.is_finite() {
        bail!(Schedule, "ln k_bar must be positive and finite, got {ln_k_bar}");
    }
    let alpha = delta_exp * ln_k_bar;
    if !(alpha > 0.0) {
        bail!(Schedule, "alpha = {alpha} must be positive");
    }
    let ln_alpha = libm::log(alpha);
    let eps = ln_alpha / (120.0 * alpha);
    let ln_delta_real = 0.5 * ln_alpha + 20.0 * alpha * (1.0 + eps);
    let (delta, ln_delta) = if ln_delta_real < CEIL_LIMIT_LN {
        let d = libm::ceil(libm::exp(ln_delta_real));
        (d, libm::log(d))
    } else {
        (libm::exp(ln_delta_real), ln_delta_real)
    };
    let mut sv = ScheduleValues {
        k_bar: libm::exp(ln_k_bar),
        ln_k_bar,
        delta_exp,
        alpha,
        eps,
        delta_sched_real: libm::exp(ln_delta_real),
        ln_delta_sched_real: ln_delta_real,
        delta_sched: delta,
        ln_delta_sched: ln_delta,
        u: 0.0,
        ln_u: 0.0,
        s_star: 0.0,
        valid: alpha > 1.0,
        delta_overridden: false,
    };
    sv.set_delta(delta, ln_delta);
    Ok(sv)
}

impl ScheduleValues {
    fn set_delta(&mut self, delta: f64, ln_delta: f64) {
        self.delta_sched = delta;
        self.ln_delta_sched = ln_delta;
        self.ln_u = libm::log(self.alpha) - LN_2 - 2.0 * ln_delta;
        self.u = libm::exp(self.ln_u);
        self.s_star = crate::evaluation::ceil_k_minus(self.k_bar, self.k_bar * self.u);
    }

    /// The same schedule with `Δ` replaced by an explicit instance spacing.
    pub fn with_delta(mut self, delta_geom: f64) -> Result<Self> {
        if !(delta_geom.is_finite() && delta_geom >= 1.0) {
            bail!(InvalidParameter, "delta must be finite and at least 1, got {delta_geom}");
        }
        self.set_delta(delta_geom, libm::log(delta_geom));
        self.delta_overridden = true;
        Ok(self)
    }

    /// `s*` as an index when it fits in memory-sized integers.
    pub fn s_star_index(&self) -> Option<usize> {
        (self.s_star <= (1u64 << 53) as f64).then_some(self.s_star as usize)
    }
}

/// `(z_s, p_s)` for `1 ≤ s ≤ k̄`.
pub fn z_and_p(k_bar: usize, delta_geom: f64, s: usize) -> Result<(f64, f64)> {
    if s == 0 {
        bail!(Domain, "z_0 is undefined; the chain uses p_0 = 1");
    }
    if s > k_bar {
        bail!(Domain, "s = {s} exceeds k_bar = {k_bar}");
    }
    if !(delta_geom.is_finite() && delta_geom > 0.0) {
        bail!(InvalidParameter, "delta must be positive and finite, got {delta_geom}");
    }
    let z = (k_bar - s) as f64 * 80.0 * delta_geom * delta_geom / (s as f64 - 0.5);
    let p = if z == 0.0 { 0.0 } else { 1.0 / (1.0 + 1.0 / z) };
    Ok((z, p))
}

/// Truth values of the five schedule inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InequalityFlags {
    /// `1/k ≤ u < 1/2`.
    pub i1: bool,
    /// `(1 + 40α)^Δ ≥ 1/u²`.
    pub i2: bool,
    /// `1/k̄ ≤ ε/9`.
    pub i3: bool,
    /// `1/(80Δ²) ≤ (ε/3)·u`.
    pub i4: bool,
    /// `u + (ε/3)(1 + ε/3)u² ≤ (ε/3)²`.
    pub i5: bool,
}

impl InequalityFlags {
    pub fn all(&self) -> bool {
        self.i1 && self.i2 && self.i3 && self.i4 && self.i5
    }

    pub fn as_array(&self) -> [bool; 5] {
        [self.i1, self.i2, self.i3, self.i4, self.i5]
    }
}

/// Evaluates the inequalities in the log domain.
pub fn check_inequalities(sv: &ScheduleValues) -> InequalityFlags {
    let ln_u = sv.ln_u;
    let ln_delta = sv.ln_delta_sched;
    let third = sv.eps / 3.0;
    // ln(k̄ + 1) without forming k̄ when it overflows.
    let ln_k = sv.ln_k_bar + libm::log1p(libm::exp(-sv.ln_k_bar));

    let i1 = -ln_k <= ln_u && ln_u < -LN_2;
    let i2 = libm::exp(ln_delta) * libm::log1p(40.0 * sv.alpha) >= -2.0 * ln_u;
    let i3 = sv.eps > 0.0 && -sv.ln_k_bar <= libm::log(sv.eps / 9.0);
    let i4 = sv.eps > 0.0 && -libm::log(80.0) - 2.0 * ln_delta <= libm::log(third) + ln_u;
    let i5 = sv.u + third * (1.0 + third) * sv.u * sv.u <= third * third;
    InequalityFlags { i1, i2, i3, i4, i5 }
}

/// Inequality flags at `k̄ = 10^e` for each exponent `e`.
pub fn inequality_scan(delta_exp: f64, decimal_exponents: &[u32]) -> Result<Vec<(u32, InequalityFlags)>> {
    decimal_exponents
        .iter()
        .map(|&e| {
            let sv = schedule_ln(e as f64 * core::f64::consts::LN_10, delta_exp)?;
            Ok((e, check_inequalities(&sv)))
        })
        .collect()
}

/// Transition probabilities of one chain.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChainParams {
    pub s_star: usize,
    /// `p_0, …, p_{s*−1}`.
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// `z_0, …, z_{s*−1}`; `z_0 = inf` matches `p_0 = 1`.
    pub z: Vec<f64>,
    /// `Δ`, also the cap of the truncated step counts `Y_s`.
    pub truncation: f64,
}

impl ChainParams {
    /// Chain over `k̄` groups with spacing `Δ` and absorbing state `s*`.
    pub fn new(k_bar: usize, delta_geom: f64, s_star: usize) -> Result<Self> {
        if s_star > k_bar {
            bail!(InvalidParameter, "s* = {s_star} exceeds k_bar = {k_bar}");
        }
        let mut p = Vec::with_capacity(s_star);
        let mut z = Vec::with_capacity(s_star);
        for s in 0..s_star {
            if s == 0 {
                p.push(1.0);
                z.push(f64::INFINITY);
            } else {
                let (zs, ps) = z_and_p(k_bar, delta_geom, s)?;
                p.push(ps);
                z.push(zs);
            }
        }
        let q = p.iter().map(|x| 1.0 - x).collect();
        Ok(Self { s_star, p, q, z, truncation: delta_geom })
    }

    /// Chain whose absorbing state is the coverage an `α`-approximation needs.
    pub fn for_alpha(k_bar: usize, delta_geom: f64, alpha: f64) -> Result<Self> {
        Self::new(k_bar, delta_geom, min_covered_for_alpha(k_bar, delta_geom, alpha)?)
    }

    /// Chain with explicit forward probabilities.
    pub fn from_probabilities(p: Vec<f64>, truncation: f64) -> Result<Self> {
        if let Some(bad) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            bail!(InvalidParameter, "transition probability {bad} outside [0, 1]");
        }
        if !(truncation > 0.0) {
            bail!(InvalidParameter, "truncation must be positive, got {truncation}");
        }
        let q = p.iter().map(|x| 1.0 - x).collect();
        let z = p.iter().map(|&x| if x >= 1.0 { f64::INFINITY } else { x / (1.0 - x) }).collect();
        Ok(Self { s_star: p.len(), p, q, z, truncation })
    }
}

/// Exact probability of reaching `v_{s*}` from `v_0` within `steps` moves.
pub fn hitting_probability_dp(params: &ChainParams, steps: u64) -> f64 {
    let n = params.s_star;
    if n == 0 {
        return 1.0;
    }
    // dist[s] = Pr[at v_s]; dist[n] is the absorbed mass.
    let mut dist = alloc::vec![0.0f64; n + 1];
    dist[0] = 1.0;
    for step in 0..steps {
        // Only states ≤ step + 1 can carry mass after this move.
        let top = n.min(step as usize + 1);
        for s in (1..=top).rev() {
            let inflow = dist[s - 1] * params.p[s - 1];
            dist[s] = if s == n { dist[s] + inflow } else { dist[s] * params.q[s] + inflow };
        }
        dist[0] *= params.q[0];
        if dist[n] >= 1.0 {
            break;
        }
    }
    dist[n].clamp(0.0, 1.0)
}

fn bernoulli<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    p >= 1.0 || (p > 0.0 && rng.random::<f64>() < p)
}

/// One walk; whether `v_{s*}` is reached within `steps` moves.
pub fn simulate_chain<R: Rng + ?Sized>(params: &ChainParams, steps: u64, rng: &mut R) -> bool {
    let mut s = 0;
    let mut taken = 0;
    while s < params.s_star {
        if taken == steps {
            return false;
        }
        taken += 1;
        if bernoulli(params.p[s], rng) {
            s += 1;
        }
    }
    true
}

/// Moves until absorption, or `None` if `cap` moves were not enough.
pub fn simulate_absorption<R: Rng + ?Sized>(params: &ChainParams, cap: u64, rng: &mut R) -> Option<u64> {
    let mut s = 0;
    let mut taken = 0;
    while s < params.s_star {
        if taken == cap {
            return None;
        }
        taken += 1;
        if bernoulli(params.p[s], rng) {
            s += 1;
        }
    }
    Some(taken)
}

/// `E[X] = Σ 1/p_s` and `E[Y] = Σ (1 − q_s^Δ)/p_s` with `Y_s = min(X_s, Δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExpectedSteps {
    /// `inf` when some `p_s = 0`.
    pub ex: f64,
    pub ey: f64,
}

impl ExpectedSteps {
    pub fn is_finite(&self) -> bool {
        self.ex.is_finite()
    }
}

pub fn expected_steps(params: &ChainParams) -> ExpectedSteps {
    let cap = params.truncation;
    let mut ex = 0.0;
    let mut ey = 0.0;
    for (&p, &q) in params.p.iter().zip(&params.q) {
        if p == 0.0 {
            // X_s never ends, so Y_s is the cap itself.
            ex = f64::INFINITY;
            ey += cap;
        } else {
            ex += 1.0 / p;
            ey += (1.0 - libm::pow(q, cap)) / p;
        }
    }
    ExpectedSteps { ex, ey }
}

/// Hoeffding tail bound `exp(−k̄·2ε²u²/(9Δ²))` on reaching `v_{s*}` within
/// `k̄` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HoeffdingBound {
    /// `ln(k̄·2ε²u²/(9Δ²))`.
    pub ln_exponent: f64,
    pub exponent: f64,
    pub value: f64,
}

fn ln_rate(eps: f64, ln_u: f64, ln_delta: f64) -> f64 {
    LN_2 + 2.0 * libm::log(eps) + 2.0 * ln_u - libm::log(9.0) - 2.0 * ln_delta
}

pub fn hoeffding_from_schedule(sv: &ScheduleValues) -> Result<HoeffdingBound> {
    if !sv.valid || !(sv.eps > 0.0) {
        bail!(Schedule, "alpha = {} <= 1: the tail bound needs alpha > 1", sv.alpha);
    }
    let ln_exponent = sv.ln_k_bar + ln_rate(sv.eps, sv.ln_u, sv.ln_delta_sched);
    let exponent = libm::exp(ln_exponent);
    Ok(HoeffdingBound { ln_exponent, exponent, value: libm::exp(-exponent) })
}

pub fn hoeffding_bound(k_bar: f64, delta_exp: f64) -> Result<HoeffdingBound> {
    hoeffding_from_schedule(&schedule(k_bar, delta_exp)?)
}

/// Both sides of `2ε²u²/(9Δ²) = ε²·α⁻²·e^{−120α}/18`, as logarithms, with
/// the unrounded schedule `Δ`.
pub fn exponent_factorization(sv: &ScheduleValues) -> Result<(f64, f64)> {
    if !(sv.eps > 0.0) {
        bail!(Schedule, "eps = {} must be positive", sv.eps);
    }
    let ln_alpha = libm::log(sv.alpha);
    let ln_delta = sv.ln_delta_sched_real;
    let ln_u = ln_alpha - LN_2 - 2.0 * ln_delta;
    let lhs = ln_rate(sv.eps, ln_u, ln_delta);
    let rhs = 2.0 * libm::log(sv.eps) - 2.0 * ln_alpha - 120.0 * sv.alpha - libm::log(18.0);
    Ok((lhs, rhs))
}

/// Upper bound on the probability that seeding reaches a `δ·log k`
/// approximation: `min(1, 2^{−k} + hoeffding(k − 1, δ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TheoremBound {
    pub value: f64,
    /// `false` when the schedule is invalid and the bound is vacuous.
    pub valid: bool,
    pub hoeffding: Option<f64>,
}

pub fn theorem_bound(k: u64, delta_exp: f64) -> Result<TheoremBound> {
    if k < 2 {
        bail!(InvalidParameter, "k must be at least 2, got {k}");
    }
    if !(delta_exp > 0.0 && delta_exp <= 1.0 / 120.0) {
        bail!(Schedule, "delta must lie in (0, 1/120], got {delta_exp}");
    }
    let vacuous = TheoremBound { value: 1.0, valid: false, hoeffding: None };
    if k == 2 {
        // k̄ = 1 gives α = 0.
        return Ok(vacuous);
    }
    let sv = schedule((k - 1) as f64, delta_exp)?;
    if !sv.valid {
        return Ok(vacuous);
    }
    let h = hoeffding_from_schedule(&sv)?;
    let two_pow = libm::ldexp(1.0, -(k.min(2000) as i32));
    Ok(TheoremBound { value: (two_pow + h.value).min(1.0), valid: true, hoeffding: Some(h.value) })
}

/// Theorem bound for `k = e^{ln_k}`, usable beyond the integer range.
///
/// For `ln_k` above `ln(2^64)` the shift `k̄ = k − 1` is below f64 resolution
/// in the log domain and `2^{−k}` underflows, so both are dropped.
pub fn theorem_bound_ln(ln_k: f64, delta_exp: f64) -> Result<TheoremBound> {
    if !ln_k.is_finite() || ln_k < core::f64::consts::LN_2 {
        bail!(InvalidParameter, "ln k must be finite and at least ln 2, got {ln_k}");
    }
    if ln_k < 44.0 {
        return theorem_bound(libm::round(libm::exp(ln_k)) as u64, delta_exp);
    }
    if !(delta_exp > 0.0 && delta_exp <= 1.0 / 120.0) {
        bail!(Schedule, "delta must lie in (0, 1/120], got {delta_exp}");
    }
    let sv = schedule_ln(ln_k, delta_exp)?;
    if !sv.valid {
        return Ok(TheoremBound { value: 1.0, valid: false, hoeffding: None });
    }
    let h = hoeffding_from_schedule(&sv)?;
    Ok(TheoremBound { value: h.value.min(1.0), valid: true, hoeffding: Some(h.value) })
}

/// One point of a monotonicity scan of the theorem bound.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScanPoint {
    pub ln_k: f64,
    pub value: f64,
    pub valid: bool,
    /// Set when the bound rose relative to the previous valid point.
    pub violation: bool,
}

/// Evaluates the theorem bound over increasing `ln_k` and flags every
/// increase between consecutive valid points.
pub fn theorem_monotonicity_scan(delta_exp: f64, ln_ks: &[f64]) -> Result<Vec<ScanPoint>> {
    let mut out = Vec::with_capacity(ln_ks.len());
    let mut prev: Option<f64> = None;
    for &ln_k in ln_ks {
        let b = theorem_bound_ln(ln_k, delta_exp)?;
        let violation = b.valid && prev.is_some_and(|p| b.value > p);
        if b.valid {
            prev = Some(b.value);
        }
        out.push(ScanPoint { ln_k, value: b.value, valid: b.valid, violation });
    }
    Ok(out)
}
