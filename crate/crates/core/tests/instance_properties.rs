use kmpp_core::evaluation::potential;
use kmpp_core::instance::{
    build_instance, group_mass, level_weight, omega, optimal_centers, optimal_cost_closed_form, Instance,
    InstanceParams, Location, Point,
};
use proptest::prelude::*;

fn inst(k: usize, m: f64, r: f64, d: f64) -> Instance {
    build_instance(InstanceParams::new(k, m, r, d).unwrap()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

#[test]
fn mass_is_conserved() {
    for k in 1..=40 {
        let i = inst(k, 1.3, 1.0, 2.0);
        let summed: f64 = i.locations.iter().map(|l| l.weight).sum();
        let closed = group_mass(&i.params, 0).unwrap() + 1.3 * omega(k - 1) * (4.0 * k as f64 + 2.0 * omega(k));
        assert!(rel(summed, closed) <= 1e-12, "k={k}: {summed} vs {closed}");
        assert!(rel(summed, i.total_mass) <= 1e-12);
    }
}

#[test]
fn direct_optimum_matches_closed_form() {
    for k in 1..=12 {
        for &(m, r, d) in &[(1.0, 1.0, 4.0), (3.0, 2.0, 64.0), (0.5, 0.25, 1.0)] {
            let i = inst(k, m, r, d);
            let direct = potential(&i.locations, &optimal_centers(&i.params).unwrap()).unwrap();
            let closed = optimal_cost_closed_form(&i.params).unwrap();
            assert!(rel(direct, closed) <= 1e-12, "k={k} m={m} r={r} d={d}: {direct} vs {closed}");
        }
    }
}

#[test]
fn mirrored_levels_have_equal_weight() {
    for k in 2..=10 {
        let i = inst(k, 1.0, 1.0, 3.0);
        for l in i.locations.iter().filter(|l| l.level != 0) {
            let twin = i
                .locations
                .iter()
                .find(|o| o.group == l.group && o.level == -l.level)
                .expect("mirror site");
            assert_eq!(twin.weight, l.weight);
            assert_eq!(twin.y, -l.y);
        }
    }
}

#[test]
fn level_weights_agree_with_sites() {
    for k in 2..=8 {
        let i = inst(k, 2.0, 1.0, 3.0);
        for l in &i.locations {
            let g = l.group.unwrap();
            assert_eq!(level_weight(&i.params, g, l.level).unwrap(), l.weight);
        }
    }
}

fn level_potential(points: &[Location], center: Point, pick: impl Fn(i32) -> bool) -> f64 {
    let sel: Vec<Location> = points.iter().filter(|l| pick(l.level)).copied().collect();
    potential(&sel, &[center]).unwrap()
}

/// Moving a single center from the axis to level `j` changes the potential
/// of the level sets by bounded amounts.
#[test]
fn level_potential_exchange_bounds() {
    for k in 2..=8 {
        let i = inst(k, 1.0, 1.0, 4.0);
        let p = i.params;
        let unit = k as f64 * p.m * p.r * p.r;
        let max_level = (2 * k - 2) as i32;
        for g in 1..k {
            let x = p.group_x(g);
            for j in (-max_level..=max_level).filter(|&j| j != 0) {
                let y = j.signum() as f64 * p.r * 2f64.powi(j.abs() - 1);
                let at_axis = [x, 0.0];
                let at_level = [x, y];

                let same = |l: i32| l == j;
                let diff = level_potential(&i.locations, at_axis, same) - level_potential(&i.locations, at_level, same);
                assert!(diff <= unit * (1.0 + 1e-12), "k={k} g={g} j={j}: {diff} > {unit}");

                let beyond = |l: i32| l.signum() == j.signum() && l.abs() > j.abs();
                let axis = level_potential(&i.locations, at_axis, beyond);
                let level = level_potential(&i.locations, at_level, beyond);
                assert!(axis <= level + 2.0 * unit * (1.0 + 1e-12), "k={k} g={g} j={j}");
            }
        }
    }
}

proptest! {
    #[test]
    fn scaling_r_scales_coordinates(k in 1usize..10, c in 0.01f64..100.0, d in 1.0f64..50.0) {
        let a = inst(k, 1.0, 1.0, d);
        let b = inst(k, 1.0, c, d);
        for (p, q) in a.locations.iter().zip(&b.locations) {
            prop_assert!(rel(p.x * c, q.x) <= 1e-14);
            prop_assert!(rel(p.y * c, q.y) <= 1e-14);
            prop_assert_eq!(p.weight, q.weight);
        }
    }

    #[test]
    fn scaling_m_scales_masses(k in 1usize..12, c in 0.01f64..100.0) {
        let a = inst(k, 1.0, 1.0, 2.0);
        let b = inst(k, c, 1.0, 2.0);
        for (x, y) in a.group_masses.iter().zip(&b.group_masses) {
            prop_assert!(rel(x * c, *y) <= 1e-14);
        }
    }
}
