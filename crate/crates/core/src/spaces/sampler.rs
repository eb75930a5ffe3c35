use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{coord_distance, wrap_unit, Ball, Point, SpaceTag, System};
use crate::error::{Error, Result};

/// Deterministic source of random streams.
///
/// `(seed, counter)` identifies a stream; parallel work derives its own
/// streams through [`SeededSampler::stream`] keyed by a work index, so the
/// samples never depend on thread scheduling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeededSampler {
    seed: u64,
    counter: u64,
}

impl SeededSampler {
    pub fn new(seed: u64) -> Self {
        SeededSampler { seed, counter: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Stream for the current counter value, then advances the counter.
    pub fn next_rng(&mut self) -> ChaCha8Rng {
        let rng = self.stream(0);
        self.counter += 1;
        rng
    }

    /// Sub-stream `index` of the current counter value. Does not advance.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        // splitmix64 finaliser decorrelates neighbouring counters
        let mut z = self.seed ^ self.counter.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        let mut rng = ChaCha8Rng::seed_from_u64(z);
        rng.set_stream(index);
        rng
    }
}

/// One uniform draw from `b` intersected with the system's domain.
pub(crate) fn draw_in_ball<R: Rng + ?Sized>(space: SpaceTag, b: &Ball, rng: &mut R) -> Vec<f64> {
    let c = &b.center.coords;
    loop {
        let coords: Vec<f64> = match space {
            SpaceTag::Circle => c
                .iter()
                .map(|&x| wrap_unit(x + b.radius * (2.0 * rng.random::<f64>() - 1.0)))
                .collect(),
            SpaceTag::Interval => c
                .iter()
                .map(|&x| x + b.radius * (2.0 * rng.random::<f64>() - 1.0))
                .collect(),
            SpaceTag::ShiftTruncation => {
                let dim = c.len();
                let dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    continue;
                }
                let scale = b.radius * rng.random::<f64>().powf(1.0 / dim as f64) / norm;
                c.iter().zip(&dir).map(|(x, v)| x + scale * v).collect()
            }
        };
        if space == SpaceTag::Interval && coords.iter().any(|x| !(0.0..=1.0).contains(x)) {
            continue;
        }
        if coord_distance(space, &coords, c) < b.radius {
            return coords;
        }
    }
}

/// `count` points drawn uniformly from `b` (restricted to the domain).
/// Consumes one stream of `sampler`.
pub fn sample_ball(
    system: &System,
    b: &Ball,
    count: usize,
    sampler: &mut SeededSampler,
) -> Result<Vec<Point>> {
    if count == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    system.check_point(&b.center)?;
    let mut rng = sampler.next_rng();
    Ok((0..count)
        .map(|_| Point::new(system.space(), draw_in_ball(system.space(), b, &mut rng)))
        .collect())
}
