//! Finite-horizon witnesses for orbits, limit sets, prolongational limit sets
//! and recurrence, plus the (almost-)transitivity scans.
//!
//! Nothing here ever claims non-membership. An absent witness means "not found
//! within the horizon / sample budget".

mod gdelta;
mod scan;

pub use gdelta::{gdelta_check, GdeltaEntry, GdeltaReport};
pub use scan::{
    almost_transitivity_scan, grid_balls, transitivity_scan, Direction, PairSet, PairVerdict,
    ScanMode, ScanOptions, ScanReport, SearchKind, Verdict,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{sample_ball, Ball, Point, SeededSampler, System};

/// Minimum number of return times before a limit witness is reported.
pub const DEFAULT_MIN_TIMES: usize = 3;

/// Strictly increasing times `n` with `d(T^n x, y) < eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessTimes {
    pub times: Vec<u64>,
    pub achieved_distances: Vec<f64>,
    pub tolerance: f64,
}

/// A point `x'` near `x` whose orbit passes near `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JWitness {
    pub start_point: Point,
    pub time: u64,
    pub start_distance: f64,
    pub end_distance: f64,
}

/// `[x, T x, ..., T^N x]`.
pub fn orbit_segment(system: &System, x: &Point, horizon: u64) -> Result<Vec<Point>> {
    system.check_point(x)?;
    let mut out = Vec::with_capacity(horizon as usize + 1);
    let mut coords = x.coords.clone();
    out.push(x.clone());
    for _ in 0..horizon {
        system.step_in_place(&mut coords);
        out.push(Point::new(x.space, coords.clone()));
    }
    Ok(out)
}

fn check_tolerance(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {v}")))
    }
}

/// Every time `1 <= n <= horizon` with `d(T^n x, y) < eps`; reported only when
/// at least [`DEFAULT_MIN_TIMES`] such times exist.
pub fn limit_witness(
    system: &System,
    x: &Point,
    y: &Point,
    eps: f64,
    horizon: u64,
) -> Result<Option<WitnessTimes>> {
    limit_witness_with_min(system, x, y, eps, horizon, DEFAULT_MIN_TIMES)
}

pub fn limit_witness_with_min(
    system: &System,
    x: &Point,
    y: &Point,
    eps: f64,
    horizon: u64,
    min_times: usize,
) -> Result<Option<WitnessTimes>> {
    system.check_point(x)?;
    system.check_point(y)?;
    check_tolerance("eps", eps)?;
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    let mut coords = x.coords.clone();
    let mut times = Vec::new();
    let mut achieved_distances = Vec::new();
    for n in 1..=horizon {
        system.step_in_place(&mut coords);
        let d = crate::spaces::coord_distance(system.space(), &coords, &y.coords);
        if d < eps {
            times.push(n);
            achieved_distances.push(d);
        }
    }
    Ok((times.len() >= min_times.max(1)).then_some(WitnessTimes {
        times,
        achieved_distances,
        tolerance: eps,
    }))
}

/// [`limit_witness`] with `y = x`.
pub fn recurrence_witness(system: &System, x: &Point, eps: f64, horizon: u64) -> Result<Option<WitnessTimes>> {
    limit_witness(system, x, x, eps, horizon)
}

/// Searches `x` itself (sample index 0) and `samples` random points of
/// `B(x, delta)` for a time `1 <= k <= horizon` with `d(T^k x', y) <= eps`.
/// The smallest `k` wins, ties go to the lowest sample index.
#[allow(clippy::too_many_arguments)]
pub fn jset_witness(
    system: &System,
    x: &Point,
    y: &Point,
    eps: f64,
    delta: f64,
    horizon: u64,
    samples: usize,
    sampler: &mut SeededSampler,
) -> Result<Option<JWitness>> {
    system.check_point(y)?;
    check_tolerance("eps", eps)?;
    check_tolerance("delta", delta)?;
    let ball = Ball::new(x.clone(), delta)?;
    let mut starts = vec![x.clone()];
    if samples > 0 {
        starts.extend(sample_ball(system, &ball, samples, sampler)?);
    } else {
        system.check_point(x)?;
    }
    let mut orbits: Vec<Vec<f64>> = starts.iter().map(|p| p.coords.clone()).collect();
    for k in 1..=horizon {
        for (i, coords) in orbits.iter_mut().enumerate() {
            system.step_in_place(coords);
            let d = crate::spaces::coord_distance(system.space(), coords, &y.coords);
            if d <= eps {
                return Ok(Some(JWitness {
                    start_distance: starts[i].distance(x),
                    start_point: starts[i].clone(),
                    time: k,
                    end_distance: d,
                }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contraction_orbit_segment() {
        let t = System::contraction(0.5).unwrap();
        let seg = orbit_segment(&t, &Point::interval(0.8), 2).unwrap();
        let xs: Vec<f64> = seg.iter().map(|p| p.coords[0]).collect();
        assert_eq!(xs, vec![0.8, 0.4, 0.2]);
    }

    #[test]
    fn doubling_third_has_period_two() {
        let t = System::doubling();
        let seg = orbit_segment(&t, &Point::circle(1.0 / 3.0), 3).unwrap();
        let oracle = [1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0];
        for (p, o) in seg.iter().zip(oracle) {
            assert!((p.coords[0] - o).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_horizon_orbit() {
        let t = System::tent();
        assert_eq!(orbit_segment(&t, &Point::interval(0.3), 0).unwrap(), vec![Point::interval(0.3)]);
    }

    #[test]
    fn rotation_returns_to_zero() {
        let t = System::golden_rotation();
        let w = limit_witness(&t, &Point::circle(0.0), &Point::circle(0.0), 0.05, 10_000)
            .unwrap()
            .unwrap();
        // brute-force oracle on the exact rotation number
        let alpha = (5f64.sqrt() - 1.0) / 2.0;
        let oracle: Vec<u64> = (1..=10_000u64)
            .filter(|&n| {
                let f = (n as f64 * alpha).fract();
                f.min(1.0 - f) < 0.05
            })
            .collect();
        assert_eq!(w.times[..10], oracle[..10]);
        assert_eq!(w.times[0], 13);
        assert!(w.times.windows(2).all(|p| p[0] < p[1]));
        assert!(w.achieved_distances.iter().all(|&d| d < 0.05));
    }

    #[test]
    fn contraction_has_no_limit_witness() {
        let t = System::contraction(0.5).unwrap();
        let w = limit_witness(&t, &Point::interval(0.8), &Point::interval(0.5), 0.01, 10_000).unwrap();
        assert!(w.is_none());
    }

    #[test]
    fn doubling_third_returns_at_even_times() {
        let t = System::doubling();
        let x = Point::circle(1.0 / 3.0);
        let w = limit_witness(&t, &x, &x, 0.001, 100).unwrap().unwrap();
        assert_eq!(&w.times[..3], &[2, 4, 6]);
        // the double nearest 1/3 is dyadic, so its orbit eventually leaves:
        // only the even times survive while the rounding error is below eps
        assert!(w.times.iter().all(|n| n % 2 == 0));
        assert!(w.times.len() >= 15);
    }

    #[test]
    fn recurrence_cases() {
        let rot = System::golden_rotation();
        assert!(recurrence_witness(&rot, &Point::circle(0.77), 0.05, 10_000).unwrap().is_some());
        let c = System::contraction(0.5).unwrap();
        assert!(recurrence_witness(&c, &Point::interval(0.8), 0.01, 10_000).unwrap().is_none());
        let id = System::rotation(0.0).unwrap();
        let w = recurrence_witness(&id, &Point::circle(0.4), 1e-9, 3).unwrap().unwrap();
        assert_eq!(w.times, vec![1, 2, 3]);
    }

    #[test]
    fn limit_witness_validates() {
        let t = System::doubling();
        let x = Point::circle(0.1);
        assert!(limit_witness(&t, &x, &x, 0.0, 10).is_err());
        assert!(limit_witness(&t, &x, &x, 0.1, 0).is_err());
        assert!(limit_witness(&t, &x, &Point::interval(0.1), 0.1, 10).is_err());
    }

    #[test]
    fn contraction_jset_uses_the_point_itself() {
        let t = System::contraction(0.5).unwrap();
        let x = Point::interval(0.6);
        let w = jset_witness(&t, &x, &Point::interval(0.0), 0.01, 0.1, 20, 64, &mut SeededSampler::new(1))
            .unwrap()
            .unwrap();
        assert_eq!(w.start_point, x);
        assert_eq!(w.time, 6); // 0.6 / 64 < 0.01 <= 0.6 / 32
    }

    #[test]
    fn doubling_jset_witness() {
        let t = System::doubling();
        let x = Point::circle(0.2);
        let y = Point::circle(0.7);
        let w = jset_witness(&t, &x, &y, 0.01, 0.01, 60, 10_000, &mut SeededSampler::new(2))
            .unwrap()
            .unwrap();
        assert!(w.start_distance <= 0.01);
        assert!(w.end_distance <= 0.01);
        let img = crate::spaces::apply_iter(&t, &w.start_point, w.time).unwrap();
        assert!(img.distance(&y) <= 0.01);
        // brute force over a fine grid of the delta-ball: sampling cannot beat it
        let oracle = (1..=60u64)
            .find(|&k| {
                (0..=20_000).any(|i| {
                    let x0 = 0.19 + 0.02 * i as f64 / 20_000.0;
                    let xk = (x0 * 2f64.powi(k as i32)).fract();
                    crate::spaces::circle_distance(xk, 0.7) <= 0.01
                })
            })
            .unwrap();
        assert!(w.time >= oracle);
    }

    #[test]
    fn rotation_jset_witness() {
        let t = System::golden_rotation();
        let w = jset_witness(
            &t,
            &Point::circle(0.0),
            &Point::circle(0.5),
            0.02,
            0.02,
            10_000,
            16,
            &mut SeededSampler::new(3),
        )
        .unwrap();
        assert!(w.is_some());
    }
}
