//! Schedule values against 60-digit reference values.
//!
//! The expected numbers come from `tests/oracle/schedule_oracle.py`
//! (mpmath, 60 significant digits) and are frozen here.
#![allow(clippy::excessive_precision)]

use kmpp_core::chain::{check_inequalities, exponent_factorization, hoeffding_from_schedule, schedule, schedule_ln};

fn sig6(a: f64, b: f64) -> bool {
    (a - b).abs() <= 5e-7 * b.abs()
}

#[test]
fn kbar_1e60_delta_1_120() {
    let sv = schedule(1e60, 1.0 / 120.0).unwrap();
    assert!(sig6(sv.alpha, 1.151_292_546_497_022_8));
    assert!(sig6(sv.eps, 1.019_761_550_591_366_9e-3));
    assert!(sig6(sv.delta_sched_real, 10_984_757_200.673_341));
    assert_eq!(sv.delta_sched, 10_984_757_201.0);
    assert!(sig6(sv.u, 4.770_619_437_015_711_4e-21));
    assert_eq!(sv.s_star, 1e60);
    assert!(sv.valid);
    let h = hoeffding_from_schedule(&sv).unwrap();
    assert!(sig6(h.exponent, 4.358_663_835_352_479_2e-8));
    assert!(sig6(h.value, 0.999_999_956_413_362_6));
    assert_eq!(check_inequalities(&sv).as_array(), [true, true, true, false, true]);
}

#[test]
fn kbar_1e300() {
    let sv = schedule(1e300, 1.0 / 120.0).unwrap();
    assert!(sig6(sv.alpha, 5.756_462_732_485_114_2));
    assert!(sig6(sv.eps, 2.533_852_324_571_669_4e-3));
    assert!(sig6(sv.delta_sched, 3.211_962_490_473_035_7e50));
    assert!(sig6(sv.u, 2.789_875_171_385_331e-101));
    assert!(sig6(hoeffding_from_schedule(&sv).unwrap().exponent, 1.076_412_420_852_036_6e-8));
    assert_eq!(check_inequalities(&sv).as_array(), [true, true, true, false, true]);

    let sv = schedule(1e300, 1.0 / 240.0).unwrap();
    assert!(sig6(sv.alpha, 2.878_231_366_242_557_1));
    assert!(sig6(sv.delta_sched, 2.023_409_576_609_869_4e25));
    let h = hoeffding_from_schedule(&sv).unwrap();
    assert!(sig6(h.exponent, 6.282_851_335_600_990_7e142));
    assert_eq!(h.value, 0.0);
}

#[test]
fn small_kbar_spot_point() {
    let sv = schedule(1e3, 1.0 / 120.0).unwrap();
    assert!(sig6(sv.alpha, 0.057_564_627_324_851_142));
    assert!(sig6(sv.eps, -0.413_281_434_209_499_73));
    assert_eq!(sv.delta_sched, 1.0);
    assert_eq!(sv.s_star, 972.0);
    assert!(!sv.valid);
    assert_eq!(check_inequalities(&sv).as_array(), [true, false, false, false, false]);
    assert!(hoeffding_from_schedule(&sv).is_err());
}

#[test]
fn all_inequalities_hold_far_out() {
    let sv = schedule_ln(1.2e6, 1.0 / 120.0).unwrap();
    assert!(sig6(sv.alpha, 10_000.0));
    assert!(sig6(sv.eps, 7.675_283_643_313_485_6e-6));
    assert!(sig6(sv.ln_delta_sched, 200_006.140_226_914_65));
    assert!(sig6(sv.ln_u, -400_003.763_260_637_89));
    assert!(check_inequalities(&sv).all());
    assert!(sig6(hoeffding_from_schedule(&sv).unwrap().ln_exponent, -44.866_063_118_629_295));
}

#[test]
fn exponent_factorization_holds() {
    for (lnk, d) in [(60.0 * 10f64.ln(), 1.0 / 120.0), (300.0 * 10f64.ln(), 1.0 / 240.0), (1.2e6, 1.0 / 120.0), (700.0, 1.0 / 200.0)] {
        let sv = schedule_ln(lnk, d).unwrap();
        let (lhs, rhs) = exponent_factorization(&sv).unwrap();
        assert!(((lhs - rhs).exp() - 1.0).abs() <= 1e-9, "ln k̄ = {lnk}: {lhs} vs {rhs}");
    }
}
