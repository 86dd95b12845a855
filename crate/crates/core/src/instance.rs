//! The adversarial instance family.
//!
//! Group `G_0` is a single heavy site at the origin. Every other group `G_i`
//! sits on the vertical line `x_i = Δ·(2^i − 1)·r` and consists of an axis
//! site carrying `4·k·m_i` mass plus `k` mirrored pairs of sites at heights
//! `±2^{i+j−1}·r` carrying `m_i / 4^j` each, where `m_i = m / 4^{i−1}`.
//!
//! Point multiplicities are stored as weights on atomic locations, so `m`
//! may be any positive real and instance size stays quadratic in `k`.

use alloc::vec::Vec;

use crate::error::{bail, Error, Result};

/// A point in the plane.
pub type Point = [f64; 2];

/// Largest supported number of clusters. Keeps every weight and coordinate
/// a normal binary64 value.
pub const MAX_K: usize = 128;

#[inline]
pub fn dist2(a: Point, b: Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// `ω(n) = 1 + 1/4 + … + 1/4^{n−1}`.
pub fn omega(n: usize) -> f64 {
    (0..n).map(|j| pow4_neg(j as i32)).sum()
}

#[inline]
fn pow2(e: i32) -> f64 {
    libm::ldexp(1.0, e)
}

#[inline]
fn pow4_neg(e: i32) -> f64 {
    libm::ldexp(1.0, -2 * e)
}

/// Generating parameters of one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InstanceParams {
    pub k: usize,
    pub m: f64,
    pub r: f64,
    /// Horizontal spacing multiplier between consecutive groups.
    pub delta_geom: f64,
}

impl InstanceParams {
    pub fn new(k: usize, m: f64, r: f64, delta_geom: f64) -> Result<Self> {
        let params = Self { k, m, r, delta_geom };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.k > MAX_K {
            bail!(InvalidParameter, "k must lie in [1, {MAX_K}], got {}", self.k);
        }
        if !(self.m.is_finite() && self.m > 0.0) {
            bail!(InvalidParameter, "m must be positive and finite, got {}", self.m);
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            bail!(InvalidParameter, "r must be positive and finite, got {}", self.r);
        }
        if !(self.delta_geom.is_finite() && self.delta_geom >= 1.0) {
            bail!(InvalidParameter, "delta must be finite and at least 1, got {}", self.delta_geom);
        }
        Ok(())
    }

    /// `m_i = m / 4^{i−1}` for `i ≥ 1`.
    pub fn group_unit_mass(&self, i: usize) -> f64 {
        self.m * pow4_neg(i as i32 - 1)
    }

    /// `r_i = 2^{i−1}·r` for `i ≥ 1`.
    pub fn group_radius(&self, i: usize) -> f64 {
        self.r * pow2(i as i32 - 1)
    }

    /// `x_i = Δ·(2^i − 1)·r`.
    pub fn group_x(&self, i: usize) -> f64 {
        self.delta_geom * (pow2(i as i32) - 1.0) * self.r
    }
}

/// One weighted site. `group` is `None` for points that do not belong to the
/// instance family; `level` is meaningless in that case.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Location {
    pub group: Option<usize>,
    pub level: i32,
    pub x: f64,
    pub y: f64,
    pub weight: f64,
}

impl Location {
    pub fn unlabeled(x: f64, y: f64, weight: f64) -> Self {
        Self { group: None, level: 0, x, y, weight }
    }

    #[inline]
    pub fn point(&self) -> Point {
        [self.x, self.y]
    }
}

/// A weighted point set together with the parameters that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub params: InstanceParams,
    /// Sorted by `(group, level)`.
    pub locations: Vec<Location>,
    pub total_mass: f64,
    /// `M_0, …, M_{k−1}`.
    pub group_masses: Vec<f64>,
}

impl Instance {
    /// Wraps an explicit location list, recomputing the masses from it.
    ///
    /// Used when reading instances back from disk; the locations need not
    /// follow the construction, but every labeled group must be `< k`.
    pub fn from_parts(params: InstanceParams, locations: Vec<Location>) -> Result<Self> {
        params.validate()?;
        let mut group_masses = alloc::vec![0.0; params.k];
        let mut total_mass = 0.0;
        for loc in &locations {
            if !(loc.weight.is_finite() && loc.weight >= 0.0) {
                bail!(InvalidParameter, "location weight must be finite and nonnegative, got {}", loc.weight);
            }
            if !(loc.x.is_finite() && loc.y.is_finite()) {
                bail!(InvalidParameter, "location coordinates must be finite");
            }
            if let Some(g) = loc.group {
                if g >= params.k {
                    return Err(Error::IndexOutOfRange { index: g, len: params.k });
                }
                group_masses[g] += loc.weight;
            }
            total_mass += loc.weight;
        }
        Ok(Self { params, locations, total_mass, group_masses })
    }

    pub fn k(&self) -> usize {
        self.params.k
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    /// Index of the origin site of `G_0`, if present.
    pub fn origin_index(&self) -> Option<usize> {
        self.locations.iter().position(|l| l.group == Some(0))
    }
}

/// Builds the instance for `params`.
pub fn build_instance(params: InstanceParams) -> Result<Instance> {
    params.validate()?;
    let k = params.k;
    let mut locations = Vec::with_capacity(1 + (k - 1) * (2 * k + 1));
    locations.push(Location {
        group: Some(0),
        level: 0,
        x: 0.0,
        y: 0.0,
        weight: group_mass(&params, 0)?,
    });
    for i in 1..k {
        let x = params.group_x(i);
        let m_i = params.group_unit_mass(i);
        let r_i = params.group_radius(i);
        // Below the axis, farthest level first.
        for j in (0..k).rev() {
            locations.push(Location {
                group: Some(i),
                level: -((i + j) as i32),
                x,
                y: -pow2(j as i32) * r_i,
                weight: m_i * pow4_neg(j as i32),
            });
        }
        locations.push(Location { group: Some(i), level: 0, x, y: 0.0, weight: 4.0 * k as f64 * m_i });
        for j in 0..k {
            locations.push(Location {
                group: Some(i),
                level: (i + j) as i32,
                x,
                y: pow2(j as i32) * r_i,
                weight: m_i * pow4_neg(j as i32),
            });
        }
    }
    let group_masses = (0..k).map(|i| group_mass(&params, i)).collect::<Result<Vec<_>>>()?;
    let total_mass = group_masses.iter().sum();
    Ok(Instance { params, locations, total_mass, group_masses })
}

/// Centers of the optimal clustering: the axis site of every group.
pub fn optimal_centers(params: &InstanceParams) -> Result<Vec<Point>> {
    params.validate()?;
    Ok((0..params.k).map(|i| [params.group_x(i), 0.0]).collect())
}

/// `Φ* = 2·k·(k−1)·m·r²`.
pub fn optimal_cost_closed_form(params: &InstanceParams) -> Result<f64> {
    params.validate()?;
    let k = params.k as f64;
    Ok(2.0 * k * (k - 1.0) * params.m * params.r * params.r)
}

/// Total mass `M_i` of group `i`.
pub fn group_mass(params: &InstanceParams, i: usize) -> Result<f64> {
    params.validate()?;
    let k = params.k;
    if i >= k {
        return Err(Error::IndexOutOfRange { index: i, len: k });
    }
    if i == 0 {
        return Ok(12.0 * k as f64 * pow2(k as i32) * params.m);
    }
    Ok(params.group_unit_mass(i) * (4.0 * k as f64 + 2.0 * omega(k)))
}

/// Mass of group `i` sitting on level `j` (one side only for `j ≠ 0`).
pub fn level_weight(params: &InstanceParams, i: usize, j: i32) -> Result<f64> {
    params.validate()?;
    let k = params.k;
    if i >= k {
        return Err(Error::IndexOutOfRange { index: i, len: k });
    }
    if i == 0 {
        if j != 0 {
            bail!(Domain, "group 0 only has the origin site, asked for level {j}");
        }
        return group_mass(params, 0);
    }
    if j == 0 {
        return Ok(4.0 * k as f64 * params.group_unit_mass(i));
    }
    let level = j.unsigned_abs() as usize;
    if level < i || level > i + k - 1 {
        return Ok(0.0);
    }
    Ok(params.m * pow4_neg(level as i32 - 1))
}
