use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::wrappers::{linear_transitivity_witness, LinearForm};
use super::{ScalarField, ShiftVector, WeightedShiftSpec};
use crate::error::{Error, Result};

/// `(T v)_n = w_{n+1} v_{n+1}`, last block zero.
pub fn shift_apply(spec: &WeightedShiftSpec, v: &ShiftVector) -> Result<ShiftVector> {
    spec.validate()?;
    v.check(spec)?;
    let d = spec.block_dim;
    let mut out = ShiftVector::zeros(spec);
    for n in 1..spec.truncation {
        let w = spec.weights.weight(n + 1);
        for c in 0..d {
            out.entries[(n - 1) * d + c] = v.entries[n * d + c] * w;
        }
    }
    Ok(out)
}

/// Weighted right inverse applied `n` times: block `j + n` of the output is
/// block `j` of `v` divided by `w_{j+1} ... w_{j+n}`.
///
/// Refuses to run when `support(v) + n > M` instead of truncating.
pub fn right_inverse_apply(spec: &WeightedShiftSpec, v: &ShiftVector, n: usize) -> Result<ShiftVector> {
    spec.validate()?;
    v.check(spec)?;
    let support = v.support();
    if support + n > spec.truncation {
        return Err(Error::SupportOverflow {
            support,
            steps: n,
            truncation: spec.truncation,
        });
    }
    let d = spec.block_dim;
    let mut out = ShiftVector::zeros(spec);
    for j in 1..=support {
        let product: f64 = (j + 1..=j + n).map(|i| spec.weights.weight(i)).product();
        for c in 0..d {
            out.entries[(j + n - 1) * d + c] = v.entries[(j - 1) * d + c] / product;
        }
    }
    Ok(out)
}

/// `ln(w_1 ... w_n)` for `n = 1..=horizon`, accumulated additively.
pub fn log_partial_products(spec: &WeightedShiftSpec, horizon: usize) -> Vec<f64> {
    let mut acc = 0.0;
    (1..=horizon)
        .map(|n| {
            acc += spec.weights.log_weight(n);
            acc
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SalasVerdict {
    CriterionSatisfiedAtHorizon,
    NotSatisfiedAtHorizon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialProduct {
    pub n: usize,
    pub log_product: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SalasReport {
    pub verdict: SalasVerdict,
    pub horizon: usize,
    pub threshold: f64,
    pub max_log_product: f64,
    pub argmax: usize,
    /// First `n` with `w_1 ... w_n >= threshold`.
    pub first_crossing: Option<usize>,
    /// Checkpoints of the partial-product sequence: powers of two, the
    /// horizon, the crossing and the maximiser.
    pub trace: Vec<PartialProduct>,
}

impl SalasReport {
    pub fn satisfied(&self) -> bool {
        self.verdict == SalasVerdict::CriterionSatisfiedAtHorizon
    }
}

/// Unboundedness of the partial products `w_1 ... w_n`, tested at a finite
/// horizon against a threshold, in log space.
pub fn salas_verdict(spec: &WeightedShiftSpec, horizon: usize, threshold: f64) -> Result<SalasReport> {
    spec.validate()?;
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::invalid("threshold must be positive"));
    }
    let logs = log_partial_products(spec, horizon);
    let log_threshold = threshold.ln();
    let (argmax, max_log_product) = logs
        .iter()
        .enumerate()
        .fold((1, f64::NEG_INFINITY), |best, (i, &l)| if l > best.1 { (i + 1, l) } else { best });
    let first_crossing = logs.iter().position(|&l| l >= log_threshold).map(|i| i + 1);

    let mut marks: Vec<usize> = std::iter::successors(Some(1usize), |n| n.checked_mul(2))
        .take_while(|&n| n <= horizon)
        .chain([horizon, argmax])
        .chain(first_crossing)
        .collect();
    marks.sort_unstable();
    marks.dedup();

    Ok(SalasReport {
        verdict: if max_log_product >= log_threshold {
            SalasVerdict::CriterionSatisfiedAtHorizon
        } else {
            SalasVerdict::NotSatisfiedAtHorizon
        },
        horizon,
        threshold,
        max_log_product,
        argmax,
        first_crossing,
        trace: marks
            .into_iter()
            .map(|n| PartialProduct {
                n,
                log_product: logs[n - 1],
            })
            .collect(),
    })
}

/// Exact transitivity witness: `T^time z = v` with `z` close to `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftWitness {
    pub z: ShiftVector,
    pub time: usize,
    /// `||z - u||`.
    pub start_distance: f64,
    /// `||T^time z - v||`, by direct evaluation.
    pub end_distance: f64,
}

/// `z = u + R^n v` for the smallest admissible `n` (see
/// [`linear_transitivity_witness`]).
pub fn transitivity_witness(
    spec: &WeightedShiftSpec,
    u: &ShiftVector,
    v: &ShiftVector,
    eps_u: f64,
    eps_v: f64,
) -> Result<Option<ShiftWitness>> {
    let form = LinearForm {
        spec: spec.clone(),
        scale: Complex64::new(1.0, 0.0),
        stride: 1,
    };
    linear_transitivity_witness(&form, u, v, eps_u, eps_v, None)
}

/// `count` pairs `(u, v)` supported on the first `max_support` blocks, entries
/// uniform in `[-1, 1]` (real and imaginary parts for complex fields). `v` is
/// never zero.
pub fn random_battery<R: Rng + ?Sized>(
    spec: &WeightedShiftSpec,
    count: usize,
    max_support: usize,
    rng: &mut R,
) -> Vec<(ShiftVector, ShiftVector)> {
    let max_support = max_support.clamp(1, spec.truncation);
    let draw = |rng: &mut R| {
        let mut v = ShiftVector::zeros(spec);
        let support = rng.random_range(1..=max_support);
        for e in v.entries.iter_mut().take(support * spec.block_dim) {
            let im = match spec.field {
                ScalarField::Real => 0.0,
                ScalarField::Complex => rng.random_range(-1.0..1.0),
            };
            *e = Complex64::new(rng.random_range(-1.0..1.0), im);
        }
        v
    };
    (0..count)
        .map(|_| {
            let u = draw(rng);
            let mut v = draw(rng);
            while v.norm() == 0.0 {
                v = draw(rng);
            }
            (u, v)
        })
        .collect()
}
