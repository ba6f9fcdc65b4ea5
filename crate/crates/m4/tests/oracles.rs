mod common;

use common::{check_maxmin_conditions, linear_fit, maxmin_oracle, staggered_pair_fcts};

#[test]
fn water_level_oracle_on_a_hand_solved_instance() {
    // Link 0 (10) carries flows 0 and 1, link 1 (4) carries 1 and 2:
    // link 1 saturates first at 2 each, flow 0 then takes the remaining 8.
    let paths = vec![vec![0], vec![0, 1], vec![1]];
    let r = maxmin_oracle(&paths, &[10.0, 4.0]);
    assert_eq!(r, [8.0, 2.0, 2.0]);
    check_maxmin_conditions(&paths, &[10.0, 4.0], &r, 1e-12).unwrap();
}

#[test]
fn bottleneck_check_rejects_non_maxmin_allocations() {
    let paths = vec![vec![0], vec![0, 1], vec![1]];
    let cap = [10.0, 4.0];
    assert!(check_maxmin_conditions(&paths, &cap, &[5.0, 5.0, 0.0], 1e-9).is_err());
    assert!(check_maxmin_conditions(&paths, &cap, &[7.0, 2.0, 2.0], 1e-9).is_err());
    assert!(check_maxmin_conditions(&paths, &cap, &[8.0, 3.0, 2.0], 1e-9).is_err());
}

#[test]
fn staggered_pair_closed_form() {
    // 1000 B at 8000 bps: alone 1 s. Second flow after 0.5 s: the first
    // has 500 B left at half rate (1 s more); the second then has 500 B
    // left at full rate (0.5 s more).
    let (a, b) = staggered_pair_fcts(1000.0, 8000.0, 0.5);
    assert_eq!(a, 1.5);
    assert_eq!(b, 1.5);
}

#[test]
fn linear_fit_recovers_a_line() {
    let xs = [1.0, 2.0, 4.0, 8.0];
    let ys: Vec<f64> = xs.iter().map(|x| 3.0 + 0.5 * x).collect();
    let (a, b, r2) = linear_fit(&xs, &ys);
    assert!((a - 3.0).abs() < 1e-12 && (b - 0.5).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    let (_, _, r2) = linear_fit(&xs, &[1.0, 8.0, 2.0, 3.0]);
    assert!(r2 < 0.5);
}
