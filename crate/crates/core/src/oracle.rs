//! Brute-force ground truth for tiny point sets.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Error, Result};
use crate::evaluation::{approximation_ratio, coverage_state};
use crate::instance::{dist2, Instance, Location, Point};
use crate::seeding::CenterSet;

pub const DEFAULT_MAX_LOCATIONS: usize = 16;
pub const DEFAULT_MAX_SEQUENCES: u128 = 1_000_000;

/// An optimal clustering found by exhaustive search.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PartitionResult {
    /// Cluster id of every input location, numbered in order of first use.
    pub partition: Vec<usize>,
    /// Weighted centroid of every cluster.
    pub centers: Vec<Point>,
    pub cost: f64,
}

/// Weighted sum of squared distances to the weighted centroid of each part.
pub fn partition_cost(points: &[Location], assignment: &[usize]) -> Result<f64> {
    Ok(centroids_and_cost(points, assignment)?.1)
}

fn centroids_and_cost(points: &[Location], assignment: &[usize]) -> Result<(Vec<Point>, f64)> {
    if assignment.len() != points.len() {
        bail!(InvalidParameter, "assignment has {} entries for {} points", assignment.len(), points.len());
    }
    let parts = assignment.iter().max().map_or(0, |m| m + 1);
    let mut sums = vec![[0.0f64; 3]; parts];
    for (&a, p) in assignment.iter().zip(points) {
        sums[a][0] += p.weight * p.x;
        sums[a][1] += p.weight * p.y;
        sums[a][2] += p.weight;
    }
    let centers: Vec<Point> =
        sums.iter().map(|s| if s[2] > 0.0 { [s[0] / s[2], s[1] / s[2]] } else { [0.0, 0.0] }).collect();
    let cost = assignment.iter().zip(points).map(|(&a, p)| p.weight * dist2(p.point(), centers[a])).sum();
    Ok((centers, cost))
}

/// Running weighted moments of one part, in coordinates relative to the
/// global centroid.
#[derive(Clone, Copy, Default)]
struct Moments {
    w: f64,
    sx: f64,
    sy: f64,
    sq: f64,
}

impl Moments {
    fn add(&mut self, a: &Atom) {
        self.w += a.w;
        self.sx += a.w * a.x;
        self.sy += a.w * a.y;
        self.sq += a.w * (a.x * a.x + a.y * a.y);
    }

    fn cost(&self) -> f64 {
        if self.w > 0.0 {
            (self.sq - (self.sx * self.sx + self.sy * self.sy) / self.w).max(0.0)
        } else {
            0.0
        }
    }
}

struct Atom {
    x: f64,
    y: f64,
    w: f64,
}

struct Search<'a> {
    atoms: &'a [Atom],
    k: usize,
    rgs: Vec<usize>,
    parts: Vec<Moments>,
    best_cost: f64,
    best: Vec<usize>,
}

impl Search<'_> {
    /// Depth-first over restricted-growth strings in lexicographic order.
    fn visit(&mut self, depth: usize, used: usize) {
        if depth == self.atoms.len() {
            let cost: f64 = self.parts[..used].iter().map(Moments::cost).sum();
            if cost < self.best_cost {
                self.best_cost = cost;
                self.best.clone_from(&self.rgs);
            }
            return;
        }
        let limit = (used + 1).min(self.k);
        for part in 0..limit {
            let saved = self.parts[part];
            self.parts[part].add(&self.atoms[depth]);
            self.rgs[depth] = part;
            self.visit(depth + 1, used.max(part + 1));
            self.parts[part] = saved;
        }
    }
}

/// Exhaustive k-means optimum over all partitions into at most `k` parts.
///
/// Co-located locations are merged into one atom first. Among partitions
/// of equal cost the lexicographically smallest encoding wins.
pub fn brute_force_optimal(points: &[Location], k: usize, max_locations: usize) -> Result<PartitionResult> {
    if k < 1 {
        bail!(InvalidParameter, "k must be at least 1");
    }
    if points.is_empty() {
        bail!(InvalidParameter, "need at least one location");
    }
    // Merge atoms sharing coordinates.
    let mut atom_of = Vec::with_capacity(points.len());
    let mut coords: Vec<Point> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for p in points {
        match coords.iter().position(|&c| c == p.point()) {
            Some(a) => {
                weights[a] += p.weight;
                atom_of.push(a);
            }
            None => {
                coords.push(p.point());
                weights.push(p.weight);
                atom_of.push(coords.len() - 1);
            }
        }
    }
    if coords.len() > max_locations {
        return Err(Error::BudgetExceeded { required: coords.len() as u128, limit: max_locations as u128 });
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        bail!(InvalidParameter, "total weight must be positive");
    }
    let cx = coords.iter().zip(&weights).map(|(c, w)| c[0] * w).sum::<f64>() / total;
    let cy = coords.iter().zip(&weights).map(|(c, w)| c[1] * w).sum::<f64>() / total;
    let atoms: Vec<Atom> = coords.iter().zip(&weights).map(|(c, &w)| Atom { x: c[0] - cx, y: c[1] - cy, w }).collect();

    let mut search = Search {
        atoms: &atoms,
        k,
        rgs: vec![0; atoms.len()],
        parts: vec![Moments::default(); k.min(atoms.len())],
        best_cost: f64::INFINITY,
        best: vec![0; atoms.len()],
    };
    search.visit(0, 0);

    let partition: Vec<usize> = atom_of.iter().map(|&a| search.best[a]).collect();
    let (centers, cost) = centroids_and_cost(points, &partition)?;
    Ok(PartitionResult { partition, centers, cost })
}

/// Law of the first center: `weight / total`.
pub fn first_center_distribution(points: &[Location]) -> Result<Vec<f64>> {
    let total: f64 = points.iter().map(|p| p.weight).sum();
    if !(total > 0.0) || !total.is_finite() {
        bail!(InvalidParameter, "total weight must be positive and finite");
    }
    Ok(points.iter().map(|p| p.weight / total).collect())
}

/// Exact distribution of ordered seeding outcomes.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SeedingDistribution {
    pub outcomes: BTreeMap<Vec<usize>, f64>,
}

impl SeedingDistribution {
    pub fn total_probability(&self) -> f64 {
        self.outcomes.values().sum()
    }

    /// Probability of the outcomes satisfying `pred`.
    pub fn probability<F: FnMut(&[usize]) -> bool>(&self, mut pred: F) -> f64 {
        self.outcomes.iter().filter(|(seq, _)| pred(seq)).map(|(_, p)| p).sum()
    }

    /// `Pr[ξ]`: the first center is the origin site.
    pub fn prob_xi(&self, instance: &Instance) -> f64 {
        self.probability(|seq| instance.locations[seq[0]].group == Some(0))
    }

    /// `Pr[at least c groups among G_1..G_{k−1} covered]`.
    pub fn prob_covered_at_least(&self, instance: &Instance, c: usize) -> Result<f64> {
        let mut out = 0.0;
        for (seq, p) in &self.outcomes {
            if coverage_state(instance, &CenterSet(seq.clone()))?.s >= c {
                out += p;
            }
        }
        Ok(out)
    }

    /// `Pr[Φ/Φ* ≤ alpha]`.
    pub fn prob_ratio_at_most(&self, instance: &Instance, alpha: f64) -> Result<f64> {
        let mut out = 0.0;
        for (seq, p) in &self.outcomes {
            if approximation_ratio(instance, &CenterSet(seq.clone()))? <= alpha {
                out += p;
            }
        }
        Ok(out)
    }
}

/// Enumerates every ordered outcome of seeding `k` centers together with
/// its probability, under the same rules as [`crate::seeding::kmeanspp_seed`].
pub fn exact_seeding_distribution(points: &[Location], k: usize, max_sequences: u128) -> Result<SeedingDistribution> {
    if k < 1 || k > points.len() {
        bail!(InvalidParameter, "k = {k} must lie in [1, {}]", points.len());
    }
    let required = (points.len() as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if required > max_sequences {
        return Err(Error::BudgetExceeded { required, limit: max_sequences });
    }
    let first = first_center_distribution(points)?;
    let mut dist = SeedingDistribution::default();
    let mut path = Vec::with_capacity(k);
    let d2 = vec![f64::INFINITY; points.len()];
    for (i, &p) in first.iter().enumerate() {
        if p > 0.0 {
            path.push(i);
            expand(points, k, &mut path, &update(points, &d2, i), p, &mut dist);
            path.pop();
        }
    }
    Ok(dist)
}

fn update(points: &[Location], d2: &[f64], center: usize) -> Vec<f64> {
    let c = points[center].point();
    d2.iter().zip(points).map(|(&d, p)| d.min(dist2(p.point(), c))).collect()
}

fn expand(points: &[Location], k: usize, path: &mut Vec<usize>, d2: &[f64], prob: f64, out: &mut SeedingDistribution) {
    if path.len() == k {
        *out.outcomes.entry(path.clone()).or_insert(0.0) += prob;
        return;
    }
    let residual: Vec<f64> = points.iter().zip(d2).map(|(p, &d)| p.weight * d).collect();
    let mut weights = residual;
    if weights.iter().sum::<f64>() <= 0.0 {
        for (i, w) in weights.iter_mut().enumerate() {
            *w = if path.contains(&i) { 0.0 } else { points[i].weight };
        }
        if weights.iter().all(|&w| w == 0.0) {
            for (i, w) in weights.iter_mut().enumerate() {
                *w = if path.contains(&i) { 0.0 } else { 1.0 };
            }
        }
    }
    let total: f64 = weights.iter().sum();
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            path.push(i);
            expand(points, k, path, &update(points, d2, i), prob * w / total, out);
            path.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{build_instance, InstanceParams};

    fn k2() -> Instance {
        build_instance(InstanceParams::new(2, 1.0, 1.0, 5.0).unwrap()).unwrap()
    }

    #[test]
    fn k2_optimum_is_group_partition() {
        let inst = k2();
        let res = brute_force_optimal(&inst.locations, 2, DEFAULT_MAX_LOCATIONS).unwrap();
        assert_eq!(res.partition, [0, 1, 1, 1, 1, 1]);
        assert!((res.cost - 4.0).abs() < 1e-12);
        assert_eq!(res.centers, [[0.0, 0.0], [5.0, 0.0]]);
    }

    #[test]
    fn single_cluster_is_total_variance() {
        let pts = [
            Location::unlabeled(0.0, 0.0, 1.0),
            Location::unlabeled(2.0, 0.0, 1.0),
            Location::unlabeled(0.0, 4.0, 2.0),
        ];
        let res = brute_force_optimal(&pts, 1, 16).unwrap();
        // Centroid (0.5, 2): 1·(0.25+4) + 1·(2.25+4) + 2·(0.25+4).
        assert_eq!(res.partition, [0, 0, 0]);
        assert!((res.cost - 19.0).abs() < 1e-12);
    }

    #[test]
    fn merges_colocated_points() {
        let pts = [
            Location::unlabeled(0.0, 0.0, 1.0),
            Location::unlabeled(10.0, 0.0, 1.0),
            Location::unlabeled(0.0, 0.0, 3.0),
        ];
        let res = brute_force_optimal(&pts, 2, 2).unwrap();
        assert_eq!(res.partition, [0, 1, 0]);
        assert_eq!(res.cost, 0.0);
    }

    #[test]
    fn refuses_large_inputs() {
        let pts: Vec<_> = (0..20).map(|i| Location::unlabeled(i as f64, 0.0, 1.0)).collect();
        assert_eq!(
            brute_force_optimal(&pts, 2, 16),
            Err(Error::BudgetExceeded { required: 20, limit: 16 })
        );
    }

    #[test]
    fn first_center_law() {
        let inst = k2();
        let d = first_center_distribution(&inst.locations).unwrap();
        assert!((d[0] - 96.0 / 106.5).abs() < 1e-15);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let uni = first_center_distribution(&[Location::unlabeled(0.0, 0.0, 2.0), Location::unlabeled(1.0, 0.0, 2.0)]).unwrap();
        assert_eq!(uni, [0.5, 0.5]);
        assert!(first_center_distribution(&[Location::unlabeled(0.0, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn exact_distribution_sums_to_one() {
        let inst = k2();
        let d = exact_seeding_distribution(&inst.locations, 2, DEFAULT_MAX_SEQUENCES).unwrap();
        assert!((d.total_probability() - 1.0).abs() < 1e-12);
        assert!((d.prob_xi(&inst) - 96.0 / 106.5).abs() < 1e-15);
        let cover = d.prob_covered_at_least(&inst, 1).unwrap();
        assert!(cover > d.prob_xi(&inst));
        assert!(exact_seeding_distribution(&inst.locations, 3, 100).is_err());
    }
}
