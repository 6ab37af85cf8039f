//! Design-parameter solvers and the sample-count test used when a party
//! opens part of a random sequence.

use crate::error::{Error, Result};

/// Smallest `n0` with `(1 − ε1)^n0 ≤ 4ε²`. For `ε ≥ 1/2` the inequality
/// holds at `n0 = 0`.
pub fn solve_n0(epsilon: f64, epsilon1: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param(format!("epsilon = {epsilon} outside (0, 1)")));
    }
    if !(epsilon1 > 0.0 && epsilon1 < 1.0) {
        return Err(Error::param(format!("epsilon1 = {epsilon1} outside (0, 1)")));
    }
    let target = (4.0 * epsilon * epsilon).ln();
    let step = (-epsilon1).ln_1p();
    let holds = |n0: u64| n0 as f64 * step <= target;
    if holds(0) {
        return Ok(0);
    }
    let mut n0 = (target / step).ceil().max(0.0) as u64;
    while !holds(n0) {
        n0 += 1;
    }
    while n0 > 0 && holds(n0 - 1) {
        n0 -= 1;
    }
    Ok(n0)
}

/// Largest `θ` with `sin²(θ/2) ≤ ε`, i.e. `2·asin(√ε)`, nudged down by
/// ulps if rounding overshoots.
pub fn choose_theta(epsilon: f64) -> f64 {
    if epsilon >= 1.0 {
        return std::f64::consts::PI;
    }
    if epsilon <= 0.0 || epsilon.is_nan() {
        return 0.0;
    }
    let mut theta = 2.0 * epsilon.sqrt().asin();
    while (theta / 2.0).sin().powi(2) > epsilon {
        theta = theta.next_down();
    }
    theta
}

/// False-alarm level of the sample-count test.
pub const DISTRIBUTION_DELTA: f64 = 1e-9;

/// Half-width of the accepted window around `N/k` for each of `k` label
/// counts out of `N` uniform draws. Two-sided Hoeffding with a union bound
/// over the `k` labels, so an honest sequence fails with probability at
/// most `DISTRIBUTION_DELTA`.
pub fn distribution_window(total: usize, labels: usize) -> f64 {
    (total as f64 * (2.0 * labels as f64 / DISTRIBUTION_DELTA).ln() / 2.0).sqrt()
}

/// Label counts lie within the window around the uniform expectation.
pub fn distribution_ok(counts: &[usize]) -> bool {
    let total: usize = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let window = distribution_window(total, counts.len());
    counts.iter().all(|&c| (c as f64 - expected).abs() <= window)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn search(epsilon: f64, epsilon1: f64) -> u64 {
        let mut power = 1.0f64;
        let mut n = 0;
        while power > 4.0 * epsilon * epsilon {
            power *= 1.0 - epsilon1;
            n += 1;
        }
        n
    }

    #[test]
    fn n0_spot_value() {
        assert_eq!(solve_n0(0.1, 0.1).unwrap(), 31);
        assert_eq!(search(0.1, 0.1), 31);
    }

    #[test]
    fn n0_vacuous_when_four_eps_squared_reaches_one() {
        assert_eq!(solve_n0(0.5, 0.3).unwrap(), 0);
        assert_eq!(solve_n0(0.9, 0.3).unwrap(), 0);
    }

    #[test]
    fn n0_minimality_on_grid() {
        for &e in &[0.01, 0.05, 0.1, 0.2, 0.4] {
            for &e1 in &[0.01, 0.1, 0.25, 0.5] {
                let n0 = solve_n0(e, e1).unwrap();
                assert_eq!(n0, search(e, e1), "eps {e} eps1 {e1}");
            }
        }
    }

    #[test]
    fn n0_rejects_bad_parameters() {
        assert!(solve_n0(0.0, 0.1).is_err());
        assert!(solve_n0(0.1, 0.0).is_err());
        assert!(solve_n0(0.1, 1.0).is_err());
        assert!(solve_n0(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn theta_boundary_and_monotone() {
        assert_eq!(choose_theta(1.0), std::f64::consts::PI);
        let mut last = 0.0;
        for i in 1..100 {
            let e = i as f64 / 100.0;
            let t = choose_theta(e);
            assert!((t / 2.0).sin().powi(2) <= e);
            assert!((t - 2.0 * e.sqrt().asin()).abs() < 1e-14);
            assert!(t > last);
            last = t;
        }
    }

    #[test]
    fn theta_matches_presentation_overlap() {
        use crate::states::{great_circle_state, rotation};
        use std::f64::consts::PI;
        for &e in &[0.01, 0.05, 0.1, 0.5] {
            let t = choose_theta(e);
            let five = rotation(t).apply(&great_circle_state(0.0)).unwrap();
            let three = great_circle_state(PI);
            assert!((five.overlap_sq(&three).unwrap() - e).abs() < 1e-12);
        }
    }

    #[test]
    fn window_separates_missing_label_at_200() {
        assert!(distribution_ok(&[50, 50, 50, 50]));
        assert!(!distribution_ok(&[0, 67, 67, 66]));
        assert!((distribution_window(200, 4) - 47.75).abs() < 0.01);
    }
}
