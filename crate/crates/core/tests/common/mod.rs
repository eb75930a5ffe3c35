#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use translab::shifts::{power_system, scale_unimodular, ScalarField, ShiftVector, WeightRule, WeightedShiftSpec};
use translab::{Point, SpaceTag, System};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn shift_spec(value: f64, block_dim: usize, truncation: usize, field: ScalarField) -> WeightedShiftSpec {
    WeightedShiftSpec::new(WeightRule::Constant { value }, block_dim, truncation, field)
}

pub fn two_b(block_dim: usize, truncation: usize) -> System {
    System::weighted_shift(shift_spec(2.0, block_dim, truncation, ScalarField::Complex)).unwrap()
}

/// Every map family, wrappers included.
pub fn catalogue() -> Vec<System> {
    let shift = two_b(2, 8);
    vec![
        System::doubling(),
        System::golden_rotation(),
        System::rotation(0.0).unwrap(),
        System::tent(),
        System::contraction(0.5).unwrap(),
        System::interchange(),
        shift.clone(),
        System::weighted_shift(WeightedShiftSpec::new(WeightRule::Ratio, 1, 12, ScalarField::Real)).unwrap(),
        power_system(&shift, 3).unwrap(),
        scale_unimodular(&shift, Complex64::new(0.0, 1.0)).unwrap(),
        power_system(&System::doubling(), 2).unwrap(),
    ]
}

pub fn random_point<R: Rng>(system: &System, rng: &mut R, scale: f64) -> Point {
    let coords = match system.space() {
        SpaceTag::Circle | SpaceTag::Interval => vec![rng.random::<f64>()],
        SpaceTag::ShiftTruncation => (0..system.dimension()).map(|_| scale * rng.random_range(-1.0..1.0)).collect(),
    };
    system.point(coords).unwrap()
}

/// Nearby point: `a` perturbed by at most `eps` per coordinate.
pub fn perturb<R: Rng>(system: &System, a: &Point, rng: &mut R, eps: f64) -> Point {
    let coords = a
        .coords
        .iter()
        .map(|&c| {
            let x = c + eps * rng.random_range(-1.0..1.0);
            match system.space() {
                SpaceTag::Circle => x.rem_euclid(1.0),
                SpaceTag::Interval => x.clamp(0.0, 1.0),
                SpaceTag::ShiftTruncation => x,
            }
        })
        .collect();
    system.point(coords).unwrap()
}

pub fn random_vector<R: Rng>(spec: &WeightedShiftSpec, rng: &mut R, support: usize) -> ShiftVector {
    let mut v = ShiftVector::zeros(spec);
    for e in v.entries.iter_mut().take(support * spec.block_dim) {
        let im = match spec.field {
            ScalarField::Real => 0.0,
            ScalarField::Complex => rng.random_range(-1.0..1.0),
        };
        *e = Complex64::new(rng.random_range(-1.0..1.0), im);
    }
    v
}
