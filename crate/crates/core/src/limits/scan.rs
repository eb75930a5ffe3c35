use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shifts::{linear_transitivity_witness, LinearForm, ShiftVector};
use crate::spaces::sampler::draw_in_ball;
use crate::spaces::{coord_distance, Ball, Point, SeededSampler, SpaceTag, System};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanMode {
    Transitive,
    AlmostTransitive,
}

/// How hits were searched for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchKind {
    /// Orbits of the ball center plus seeded samples.
    Sampled,
    /// Exact right-inverse construction (shift family).
    ShiftWitness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// `T^n U` meets `V`.
    Forward,
    /// `T^n V` meets `U`.
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Verdict {
    /// `witness` lies in the source ball and `d(T^time witness, target center) = distance`
    /// is below the target radius.
    Hit {
        time: u64,
        direction: Direction,
        witness: Point,
        distance: f64,
    },
    /// Smallest distance to the target center seen during the search. For
    /// the exact shift construction it is the smallest perturbation
    /// `||z - u||` among admissible times (absent when no time fits).
    NoHitUpToHorizon { min_distance: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVerdict {
    pub index: usize,
    pub u: Ball,
    pub v: Ball,
    pub verdict: Verdict,
}

impl PairVerdict {
    pub fn is_hit(&self) -> bool {
        matches!(self.verdict, Verdict::Hit { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub system: String,
    pub mode: ScanMode,
    pub search: SearchKind,
    pub horizon: u64,
    pub resolution: Option<f64>,
    pub samples_per_ball: usize,
    pub seed: u64,
    pub pairs: Vec<PairVerdict>,
}

impl ScanReport {
    /// Every pair produced a hit.
    pub fn passed(&self) -> bool {
        self.pairs.iter().all(PairVerdict::is_hit)
    }

    pub fn hit_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.is_hit()).count()
    }

    pub fn max_hitting_time(&self) -> Option<u64> {
        self.pairs
            .iter()
            .filter_map(|p| match p.verdict {
                Verdict::Hit { time, .. } => Some(time),
                _ => None,
            })
            .max()
    }

    pub fn failures(&self) -> impl Iterator<Item = &PairVerdict> {
        self.pairs.iter().filter(|p| !p.is_hit())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PairSet {
    /// Every ordered pair of [`grid_balls`] at this spacing.
    Grid(f64),
    Explicit(Vec<(Ball, Ball)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOptions {
    pub horizon: u64,
    /// Random points per source ball, on top of its center.
    pub samples: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            horizon: 64,
            samples: 128,
        }
    }
}

/// Balls of radius `g/2` on a lattice of spacing `g`.
///
/// * circle: centers `k g`;
/// * interval: centers `(k + 1/2) g`, so no ball reaches past an endpoint;
/// * shift spaces: the zero vector and `+-e_{j,c}` for blocks `j = 1, 2` and
///   every component `c`.
pub fn grid_balls(system: &System, resolution: f64) -> Result<Vec<Ball>> {
    if !(resolution > 0.0 && resolution <= 0.5) {
        return Err(Error::invalid(format!("grid resolution must lie in (0, 1/2], got {resolution}")));
    }
    let radius = resolution / 2.0;
    let count = (1.0 / resolution).round() as usize;
    let balls = match system.space() {
        SpaceTag::Circle => (0..count)
            .map(|k| Ball::new(Point::circle(k as f64 * resolution), radius))
            .collect::<Result<Vec<_>>>()?,
        SpaceTag::Interval => (0..count)
            .map(|k| Ball::new(Point::interval((k as f64 + 0.5) * resolution), radius))
            .collect::<Result<Vec<_>>>()?,
        SpaceTag::ShiftTruncation => {
            let spec = system.shift_spec().ok_or(Error::NotLinear)?;
            let mut centers = vec![ShiftVector::zeros(spec)];
            for block in 1..=2.min(spec.truncation / 2) {
                for c in 0..spec.block_dim {
                    let e = ShiftVector::unit(spec, block, c)?;
                    centers.push(e.scale(Complex64::new(-1.0, 0.0)));
                    centers.push(e);
                }
            }
            centers
                .into_iter()
                .map(|v| Ball::new(v.to_point(spec.field), radius))
                .collect::<Result<Vec<_>>>()?
        }
    };
    Ok(balls)
}

fn check_scan_ball(system: &System, b: &Ball) -> Result<()> {
    system.check_point(&b.center)?;
    match system.space() {
        SpaceTag::Interval => {
            let c = b.center.coords[0];
            if c - b.radius < 0.0 || c + b.radius > 1.0 {
                return Err(Error::invalid(format!(
                    "scan ball B({c}, {}) reaches outside [0, 1]",
                    b.radius
                )));
            }
        }
        SpaceTag::Circle if b.radius > 0.5 => {
            return Err(Error::invalid("circle balls must have radius at most 1/2"));
        }
        _ => {}
    }
    Ok(())
}

struct Search<'a> {
    system: &'a System,
    form: Option<LinearForm>,
    options: &'a ScanOptions,
    sampler: &'a SeededSampler,
}

enum Outcome {
    Hit {
        time: u64,
        witness: Point,
        distance: f64,
    },
    Miss(Option<f64>),
}

impl Search<'_> {
    /// Does some point of `from` reach `to` within the horizon?
    fn run(&self, from: &Ball, to: &Ball, stream: u64) -> Result<Outcome> {
        match &self.form {
            Some(form) => self.exact(form, from, to),
            None => Ok(self.sampled(from, to, stream)),
        }
    }

    fn sampled(&self, from: &Ball, to: &Ball, stream: u64) -> Outcome {
        let space = self.system.space();
        let mut rng = self.sampler.stream(stream);
        let starts: Vec<Vec<f64>> = std::iter::once(from.center.coords.clone())
            .chain((0..self.options.samples).map(|_| draw_in_ball(space, from, &mut rng)))
            .collect();
        let mut orbits = starts.clone();
        let mut min_distance = f64::INFINITY;
        for n in 0..=self.options.horizon {
            if n > 0 {
                orbits.iter_mut().for_each(|c| self.system.step_in_place(c));
            }
            for (i, coords) in orbits.iter().enumerate() {
                let d = coord_distance(space, coords, &to.center.coords);
                if d < to.radius {
                    return Outcome::Hit {
                        time: n,
                        witness: Point::new(space, starts[i].clone()),
                        distance: d,
                    };
                }
                min_distance = min_distance.min(d);
            }
        }
        Outcome::Miss(Some(min_distance))
    }

    fn exact(&self, form: &LinearForm, from: &Ball, to: &Ball) -> Result<Outcome> {
        let d0 = from.center.distance(&to.center);
        if d0 < to.radius {
            return Ok(Outcome::Hit {
                time: 0,
                witness: from.center.clone(),
                distance: d0,
            });
        }
        let spec = &form.spec;
        let u = ShiftVector::from_point(spec, &from.center)?;
        let v = ShiftVector::from_point(spec, &to.center)?;
        let horizon = usize::try_from(self.options.horizon).unwrap_or(usize::MAX);
        match linear_transitivity_witness(form, &u, &v, from.radius, to.radius, Some(horizon))? {
            Some(w) => Ok(Outcome::Hit {
                time: w.time as u64,
                witness: w.z.to_point(spec.field),
                distance: w.end_distance,
            }),
            None => {
                // smallest perturbation among the admissible times
                let first = u.support().div_ceil(form.stride).max(1);
                let min = (first..=horizon)
                    .take_while(|n| v.support() + form.stride * n <= spec.truncation)
                    .map(|n| {
                        crate::shifts::right_inverse_apply(spec, &v, form.stride * n).map(|r| r.norm())
                    })
                    .collect::<Result<Vec<f64>>>()?
                    .into_iter()
                    .reduce(f64::min);
                Ok(Outcome::Miss(min))
            }
        }
    }
}

fn scan(
    system: &System,
    pairs: &PairSet,
    options: &ScanOptions,
    sampler: &SeededSampler,
    mode: ScanMode,
) -> Result<ScanReport> {
    if options.horizon == 0 {
        return Err(Error::invalid("scan horizon must be at least 1"));
    }
    let (pairs, resolution) = match pairs {
        PairSet::Grid(g) => {
            let balls = grid_balls(system, *g)?;
            let all = balls
                .iter()
                .flat_map(|u| balls.iter().map(move |v| (u.clone(), v.clone())))
                .collect::<Vec<_>>();
            (all, Some(*g))
        }
        PairSet::Explicit(list) => (list.clone(), None),
    };
    for (u, v) in &pairs {
        check_scan_ball(system, u)?;
        check_scan_ball(system, v)?;
    }
    let form = LinearForm::of(system).ok();
    let search = Search {
        system,
        form,
        options,
        sampler,
    };
    let search_kind = if search.form.is_some() {
        SearchKind::ShiftWitness
    } else {
        SearchKind::Sampled
    };

    let verdicts = pairs
        .into_par_iter()
        .enumerate()
        .map(|(index, (u, v))| {
            let stream = 2 * index as u64;
            let forward = search.run(&u, &v, stream)?;
            let verdict = match forward {
                Outcome::Hit {
                    time,
                    witness,
                    distance,
                } => Verdict::Hit {
                    time,
                    direction: Direction::Forward,
                    witness,
                    distance,
                },
                Outcome::Miss(fwd) if mode == ScanMode::AlmostTransitive => {
                    match search.run(&v, &u, stream + 1)? {
                        Outcome::Hit {
                            time,
                            witness,
                            distance,
                        } => Verdict::Hit {
                            time,
                            direction: Direction::Reverse,
                            witness,
                            distance,
                        },
                        Outcome::Miss(rev) => Verdict::NoHitUpToHorizon {
                            min_distance: match (fwd, rev) {
                                (Some(a), Some(b)) => Some(a.min(b)),
                                (a, b) => a.or(b),
                            },
                        },
                    }
                }
                Outcome::Miss(fwd) => Verdict::NoHitUpToHorizon { min_distance: fwd },
            };
            Ok(PairVerdict { index, u, v, verdict })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ScanReport {
        system: system.name(),
        mode,
        search: search_kind,
        horizon: options.horizon,
        resolution,
        samples_per_ball: options.samples,
        seed: sampler.seed(),
        pairs: verdicts,
    })
}

/// For each pair `(U, V)`: a time `0 <= n <= N` and a point `u in U` with
/// `d(T^n u, center V) < radius V`, or no hit up to the horizon.
pub fn transitivity_scan(
    system: &System,
    pairs: &PairSet,
    options: &ScanOptions,
    sampler: &SeededSampler,
) -> Result<ScanReport> {
    scan(system, pairs, options, sampler, ScanMode::Transitive)
}

/// As [`transitivity_scan`], but a pair also passes when `T^n V` meets `U`.
pub fn almost_transitivity_scan(
    system: &System,
    pairs: &PairSet,
    options: &ScanOptions,
    sampler: &SeededSampler,
) -> Result<ScanReport> {
    scan(system, pairs, options, sampler, ScanMode::AlmostTransitive)
}
