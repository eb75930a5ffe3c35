//! Nested-ball construction of a recurrent point whose orbit accumulates at a
//! prescribed target.
//!
//! Stage `n` alternates two searches inside the current ball:
//!
//! 1. *approach*: a ball `B(y_n, eps_n)` and a time `k_n > k_{n-1}` with
//!    `T^{k_n} B(y_n, eps_n) ⊆ B(x, 1/n)`;
//! 2. *return*: a ball `B(w_n, r_n) ⊆ B(y_n, eps_n)` and a time
//!    `m_n > m_{n-1}` with `T^{m_n} B(w_n, r_n) ⊆ B(y_n, eps_n)`.
//!
//! The next stage searches inside `B(w_n, r_n)`. All radii stay below
//! `2^{-n}`, so the balls shrink to a single point `z` with `T^{k_n} z -> x`
//! and `T^{m_n} z -> z`. Containment is certified with the system's
//! Lipschitz constant: `T^k B(c, r) ⊆ B(T^k c, r L^k)`.
//!
//! Stage `n` approaches within `1/n`. Attaching `k_{n+1}` to ball `n` with
//! radius `1/(n+1)` gives the same limit; the shifted index keeps the stage
//! record self-contained.

mod verify;

pub use verify::{verify_certificate, CheckKind, CheckResult, VerificationReport, VerifyOptions};

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::system::lipschitz_power;
use crate::spaces::{coord_distance, wrap_unit, Ball, Point, SeededSampler, SpaceTag, System};

/// Fraction of `2^{-n}` used as the stage radius cap (strictly below `2^{-n}`).
const RADIUS_CAP_FRACTION: f64 = 0.75;
/// Share of the available clearance and enclosure room a stage ball takes.
/// Radii roughly square from one stage to the next on expanding maps, so
/// this factor compounds quickly; anything below 1 keeps margins positive.
const SHRINK: f64 = 15.0 / 16.0;

/// One half of a stage: a ball, the time it is pushed forward, and how much
/// room the Lipschitz enclosure leaves inside the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageBall {
    pub center: Point,
    pub radius: f64,
    pub time: u64,
    pub margin: f64,
}

impl StageBall {
    pub fn ball(&self) -> Ball {
        Ball {
            center: self.center.clone(),
            radius: self.radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub approach: StageBall,
    /// Absent for the non-recurrent variant.
    #[serde(rename = "return")]
    pub return_: Option<StageBall>,
}

impl Stage {
    /// Ball the next stage must fit into.
    pub fn innermost(&self) -> &StageBall {
        self.return_.as_ref().unwrap_or(&self.approach)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedBallCertificate {
    pub target: Point,
    pub initial_ball: Ball,
    pub stages: Vec<Stage>,
    /// Center of the deepest ball; within `2^{-depth}` of the true intersection point.
    pub limit_point: Point,
    pub depth: usize,
}

impl NestedBallCertificate {
    pub fn recurrent(&self) -> bool {
        self.stages.iter().all(|s| s.return_.is_some())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Approach,
    Return,
}

/// A stage search exhausted its budget. Carries the stages built so far.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: usize,
    pub phase: Phase,
    pub prefix: Vec<Stage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum Construction {
    Certified(NestedBallCertificate),
    StageFailed(StageFailure),
}

impl Construction {
    pub fn certificate(&self) -> Option<&NestedBallCertificate> {
        match self {
            Construction::Certified(c) => Some(c),
            Construction::StageFailed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageSearch {
    /// Largest time tried by a single stage search.
    pub budget: u64,
    /// Candidate centers per search, the ball center included.
    pub candidates: usize,
    /// Stage radii are kept strictly below this.
    pub radius_cap: f64,
}

impl StageSearch {
    pub fn new(budget: u64, candidates: usize) -> Self {
        StageSearch {
            budget,
            candidates,
            radius_cap: f64::INFINITY,
        }
    }

    fn with_cap(&self, cap: f64) -> Self {
        StageSearch {
            radius_cap: cap,
            ..self.clone()
        }
    }
}

/// Deterministic candidate centers inside `b`: the center, then an additive
/// (Kronecker) sequence with a seeded offset. Interval candidates outside
/// `[0, 1]` are skipped.
fn candidate_centers<R: Rng + ?Sized>(system: &System, b: &Ball, count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let dim = b.center.coords.len();
    // generalised golden ratio: phi^(dim+1) = phi + 1
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
    }
    let steps: Vec<f64> = (1..=dim).map(|j| phi.powi(-(j as i32))).collect();
    let offsets: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    // inscribed cube keeps every candidate inside the ball
    let half_side = match system.space() {
        SpaceTag::ShiftTruncation => b.radius / (dim as f64).sqrt(),
        _ => b.radius,
    } * (1.0 - 1e-9);

    let mut out = vec![b.center.coords.clone()];
    let mut i = 1u64;
    while out.len() < count.max(1) && i < 64 * count as u64 + 64 {
        let coords: Vec<f64> = (0..dim)
            .map(|j| {
                let u = wrap_unit(offsets[j] + i as f64 * steps[j]);
                b.center.coords[j] + half_side * (2.0 * u - 1.0)
            })
            .collect();
        i += 1;
        let coords = match system.space() {
            SpaceTag::Circle => coords.into_iter().map(wrap_unit).collect(),
            SpaceTag::Interval if coords.iter().any(|c| !(0.0..=1.0).contains(c)) => continue,
            _ => coords,
        };
        if coord_distance(system.space(), &coords, &b.center.coords) < b.radius {
            out.push(coords);
        }
    }
    out
}

/// Certified radius for a ball centered at `w` (clearance `w_clearance` inside
/// the searched ball) whose center
/// lands at distance `d` from the target after `growth = L^time` expansion.
fn certified_radius(w_clearance: f64, target_radius: f64, d: f64, growth: f64, cap: f64) -> f64 {
    (SHRINK * w_clearance).min(SHRINK * (target_radius - d) / growth).min(cap)
}

/// Search for one stage: the earliest `time > lower_bound` at which a ball
/// inside `within` is certified to land in `B(target, target_radius)`.
/// Ties at equal time go to the lowest candidate index. Radii stay a fixed
/// fraction below what clearance and enclosure allow, so recorded margins
/// are positive.
///
/// One-dimensional spaces use a dyadic branch-and-bound over `within`; its
/// candidate index is the preorder position in the subdivision tree.
/// Higher-dimensional spaces try sampled centers in parallel.
fn search_stage(
    system: &System,
    within: &Ball,
    target: &Point,
    target_radius: f64,
    lower_bound: u64,
    search: &StageSearch,
    sampler: &mut SeededSampler,
) -> Option<StageBall> {
    if system.dimension() == 1 {
        return subdivision_search(system, within, target, target_radius, lower_bound, search);
    }
    let mut rng = sampler.next_rng();
    let candidates = candidate_centers(system, within, search.candidates, &mut rng);
    let space = system.space();
    let lipschitz = system.lipschitz();
    let best = AtomicU64::new(u64::MAX);

    let found = candidates
        .par_iter()
        .enumerate()
        .filter_map(|(index, start)| {
            let clearance = within.radius - coord_distance(space, start, &within.center.coords);
            let mut coords = start.clone();
            for time in 1..=search.budget {
                if time > best.load(Ordering::Relaxed) {
                    return None;
                }
                system.step_in_place(&mut coords);
                if time <= lower_bound {
                    continue;
                }
                let d = coord_distance(space, &coords, &target.coords);
                if d >= target_radius {
                    continue;
                }
                let growth = lipschitz_power(lipschitz, time);
                let radius = certified_radius(clearance, target_radius, d, growth, search.radius_cap);
                if radius > 0.0 && radius.is_finite() {
                    best.fetch_min(time, Ordering::Relaxed);
                    let margin = target_radius - (d + radius * growth);
                    return Some((time, index, radius, margin));
                }
            }
            None
        })
        .min_by_key(|(time, index, ..)| (*time, *index))?;

    let (time, index, radius, margin) = found;
    Some(StageBall {
        center: Point::new(space, candidates[index].clone()),
        radius,
        time,
        margin,
    })
}

/// Cells explored per time step before that time is abandoned.
const MAX_CELLS_PER_TIME: usize = 1 << 12;
/// Subdivision depth relative to the searched ball.
const MAX_SUBDIVISION_DEPTH: u32 = 60;

fn subdivision_search(
    system: &System,
    within: &Ball,
    target: &Point,
    target_radius: f64,
    lower_bound: u64,
    search: &StageSearch,
) -> Option<StageBall> {
    let space = system.space();
    let lipschitz = system.lipschitz();
    let c0 = within.center.coords[0];
    let in_domain = |w: f64| space != SpaceTag::Interval || (0.0..=1.0).contains(&w);
    let min_cell = within.radius * 0.5f64.powi(MAX_SUBDIVISION_DEPTH as i32);
    let resolution = 16.0 * f64::EPSILON * c0.abs().max(within.radius);

    for time in (lower_bound + 1)..=search.budget {
        let growth = lipschitz_power(lipschitz, time);
        // any certified ball would be below the resolution of the coordinates
        let scale = target_radius / growth;
        if scale.is_nan() || scale < resolution {
            continue;
        }
        // breadth-first, so coarse cells are preferred to deep ones
        let mut level = vec![c0];
        let mut s = within.radius;
        let mut visited = 0usize;
        let mut fallback: Option<StageBall> = None;
        while !level.is_empty() && visited < MAX_CELLS_PER_TIME {
            let mut next = Vec::new();
            for &w in &level {
                visited += 1;
                let w = if space == SpaceTag::Circle { wrap_unit(w) } else { w };
                if in_domain(w) {
                    let mut coords = [w];
                    for _ in 0..time {
                        system.step_in_place(&mut coords);
                    }
                    let d = coord_distance(space, &coords, &target.coords);
                    if d >= target_radius + s * growth {
                        continue;
                    }
                    let clearance = within.radius - coord_distance(space, &[w], &within.center.coords);
                    let radius = certified_radius(clearance, target_radius, d, growth, search.radius_cap);
                    if radius > 0.0 {
                        let ball = StageBall {
                            center: Point::new(space, vec![w]),
                            radius,
                            time,
                            margin: target_radius - (d + radius * growth),
                        };
                        if radius >= 0.5 * s.min(search.radius_cap) {
                            return Some(ball);
                        }
                        if fallback.is_none() {
                            fallback = Some(ball);
                        }
                    }
                }
                next.push(w - 0.5 * s);
                next.push(w + 0.5 * s);
            }
            s *= 0.5;
            if s < min_cell {
                break;
            }
            level = next;
        }
        if fallback.is_some() {
            return fallback;
        }
    }
    None
}

/// A ball inside `b` and a time `k > lower_bound` whose Lipschitz image lies in
/// `B(x, rho)`.
pub fn find_approach_stage(
    system: &System,
    b: &Ball,
    x: &Point,
    rho: f64,
    lower_bound: u64,
    search: &StageSearch,
    sampler: &mut SeededSampler,
) -> Result<Option<StageBall>> {
    system.check_point(&b.center)?;
    system.check_point(x)?;
    if rho.is_nan() || rho <= 0.0 {
        return Err(Error::invalid("approach radius must be positive"));
    }
    Ok(search_stage(system, b, x, rho, lower_bound, search, sampler))
}

/// A ball inside `b` and a time `m > min_time` whose Lipschitz image lies back
/// in `b`.
pub fn find_return_stage(
    system: &System,
    b: &Ball,
    min_time: u64,
    search: &StageSearch,
    sampler: &mut SeededSampler,
) -> Result<Option<StageBall>> {
    system.check_point(&b.center)?;
    let search = search.with_cap(search.radius_cap.min(b.radius));
    Ok(search_stage(system, b, &b.center, b.radius, min_time, &search, sampler))
}

/// Runs `depth` stages starting from `initial`. With `recurrent = false` the
/// return searches are skipped and the certificate only witnesses
/// `T^{k_n} z -> x`.
pub fn construct_recurrent_point(
    system: &System,
    target: &Point,
    initial: &Ball,
    depth: usize,
    search: &StageSearch,
    recurrent: bool,
    sampler: &mut SeededSampler,
) -> Result<Construction> {
    if depth == 0 {
        return Err(Error::invalid("depth must be at least 1"));
    }
    system.check_point(target)?;
    system.check_point(&initial.center)?;

    let mut stages: Vec<Stage> = Vec::with_capacity(depth);
    let mut current = initial.clone();
    let (mut last_k, mut last_m) = (0u64, 0u64);
    for n in 1..=depth {
        let stage_search = search.with_cap(search.radius_cap.min(RADIUS_CAP_FRACTION * 0.5f64.powi(n as i32)));
        let fail = |phase, prefix: Vec<Stage>| {
            Ok(Construction::StageFailed(StageFailure {
                stage: n,
                phase,
                prefix,
            }))
        };
        let Some(approach) =
            find_approach_stage(system, &current, target, 1.0 / n as f64, last_k, &stage_search, sampler)?
        else {
            return fail(Phase::Approach, stages);
        };
        last_k = approach.time;
        let return_ = if recurrent {
            let Some(ret) = find_return_stage(system, &approach.ball(), last_m, &stage_search, sampler)? else {
                return fail(Phase::Return, stages);
            };
            last_m = ret.time;
            Some(ret)
        } else {
            None
        };
        let stage = Stage { approach, return_ };
        current = stage.innermost().ball();
        stages.push(stage);
    }
    Ok(Construction::Certified(NestedBallCertificate {
        target: target.clone(),
        initial_ball: initial.clone(),
        limit_point: current.center,
        stages,
        depth,
    }))
}
