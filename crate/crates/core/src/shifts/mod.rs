//! Backward weighted shifts on truncated `l2(H)` with `H = C^d` (or `R^d`).
//!
//! Blocks are numbered from 1 as in the usual sequence-space notation:
//! `(T v)_n = w_{n+1} v_{n+1}` for `n < M` and `(T v)_M = 0`.

mod ops;
mod span;
mod wrappers;

pub use ops::{
    log_partial_products, random_battery, right_inverse_apply, salas_verdict, shift_apply,
    transitivity_witness, PartialProduct, SalasReport, SalasVerdict, ShiftWitness,
};
pub use span::{compressed_operator, orbit_span_basis, CompressedOperator, OrbitSpanBasis};
pub use wrappers::{linear_transitivity_witness, power_system, scale_unimodular, witness_battery, LinearForm};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{Point, SpaceTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalarField {
    Real,
    Complex,
}

impl ScalarField {
    pub fn name(self) -> &'static str {
        match self {
            ScalarField::Real => "real",
            ScalarField::Complex => "complex",
        }
    }

    /// Real coordinates per scalar.
    pub(crate) fn width(self) -> usize {
        match self {
            ScalarField::Real => 1,
            ScalarField::Complex => 2,
        }
    }
}

/// Rule generating the weight sequence `w_1, w_2, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum WeightRule {
    Constant { value: f64 },
    /// `w_n = (n + 1) / n`, so `w_1 ... w_n = n + 1`.
    Ratio,
    /// `head` gives `w_1 .. w_k`, every later weight equals `tail`.
    Custom { head: Vec<f64>, tail: f64 },
}

impl WeightRule {
    /// `w_n` for `n >= 1`.
    pub fn weight(&self, n: usize) -> f64 {
        debug_assert!(n >= 1);
        match self {
            WeightRule::Constant { value } => *value,
            WeightRule::Ratio => (n as f64 + 1.0) / n as f64,
            WeightRule::Custom { head, tail } => head.get(n - 1).copied().unwrap_or(*tail),
        }
    }

    /// `ln w_n`, computed without cancellation for the ratio rule.
    pub fn log_weight(&self, n: usize) -> f64 {
        match self {
            WeightRule::Ratio => (1.0 / n as f64).ln_1p(),
            _ => self.weight(n).ln(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            WeightRule::Constant { value } => format!("constant({value})"),
            WeightRule::Ratio => "ratio".into(),
            WeightRule::Custom { head, tail } => format!("custom({} head, tail {tail})", head.len()),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |w: f64| w > 0.0 && w.is_finite();
        let valid = match self {
            WeightRule::Constant { value } => ok(*value),
            WeightRule::Ratio => true,
            WeightRule::Custom { head, tail } => ok(*tail) && head.iter().all(|w| ok(*w)),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::invalid("weights must be positive and finite"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedShiftSpec {
    pub weights: WeightRule,
    /// Dimension `d` of the component space `H`.
    pub block_dim: usize,
    /// Number of retained blocks `M`.
    pub truncation: usize,
    pub field: ScalarField,
}

impl WeightedShiftSpec {
    pub fn new(weights: WeightRule, block_dim: usize, truncation: usize, field: ScalarField) -> Self {
        WeightedShiftSpec {
            weights,
            block_dim,
            truncation,
            field,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_dim == 0 {
            return Err(Error::invalid("block dimension must be at least 1"));
        }
        if self.truncation < 2 {
            return Err(Error::invalid("truncation must be at least 2"));
        }
        self.weights.validate()
    }

    /// Real coordinates of the induced system: `M * d` scalars.
    pub fn dimension(&self) -> usize {
        self.truncation * self.block_dim * self.field.width()
    }

    /// `[unused, w_1, ..., w_M]`.
    pub(crate) fn weight_window(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain((1..=self.truncation).map(|n| self.weights.weight(n)))
            .collect()
    }
}

/// Element of truncated `l2(H)`: `M` blocks of `d` scalars, stored block-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftVector {
    pub block_dim: usize,
    pub entries: Vec<Complex64>,
}

impl ShiftVector {
    pub fn zeros(spec: &WeightedShiftSpec) -> Self {
        ShiftVector {
            block_dim: spec.block_dim,
            entries: vec![Complex64::new(0.0, 0.0); spec.truncation * spec.block_dim],
        }
    }

    /// `e_{block}` with a one in `component` (both 1-based / 0-based resp.).
    pub fn unit(spec: &WeightedShiftSpec, block: usize, component: usize) -> Result<Self> {
        if block == 0 || block > spec.truncation || component >= spec.block_dim {
            return Err(Error::invalid(format!(
                "unit vector index (block {block}, component {component}) out of range"
            )));
        }
        let mut v = ShiftVector::zeros(spec);
        v.entries[(block - 1) * spec.block_dim + component] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn from_entries(spec: &WeightedShiftSpec, entries: Vec<Complex64>) -> Result<Self> {
        let v = ShiftVector {
            block_dim: spec.block_dim,
            entries,
        };
        v.check(spec)?;
        Ok(v)
    }

    pub(crate) fn check(&self, spec: &WeightedShiftSpec) -> Result<()> {
        let expected = spec.truncation * spec.block_dim;
        if self.block_dim != spec.block_dim || self.entries.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: self.entries.len(),
            });
        }
        if self.entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("shift vector has non-finite entries"));
        }
        if spec.field == ScalarField::Real && self.entries.iter().any(|z| z.im != 0.0) {
            return Err(Error::invalid("real-field shift vector with imaginary part"));
        }
        Ok(())
    }

    pub fn truncation(&self) -> usize {
        self.entries.len() / self.block_dim
    }

    /// Block `n` (1-based).
    pub fn block(&self, n: usize) -> &[Complex64] {
        &self.entries[(n - 1) * self.block_dim..n * self.block_dim]
    }

    /// Largest block index carrying a non-zero entry; 0 for the zero vector.
    pub fn support(&self) -> usize {
        (1..=self.truncation())
            .rev()
            .find(|&n| self.block(n).iter().any(|z| z.norm_sqr() != 0.0))
            .unwrap_or(0)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &ShiftVector) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn add(&self, other: &ShiftVector) -> ShiftVector {
        ShiftVector {
            block_dim: self.block_dim,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> ShiftVector {
        ShiftVector {
            block_dim: self.block_dim,
            entries: self.entries.iter().map(|a| a * c).collect(),
        }
    }

    /// `sum conj(self_i) other_i`.
    pub fn inner(&self, other: &ShiftVector) -> Complex64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn to_coords(&self, field: ScalarField) -> Vec<f64> {
        match field {
            ScalarField::Real => self.entries.iter().map(|z| z.re).collect(),
            ScalarField::Complex => self.entries.iter().flat_map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_point(&self, field: ScalarField) -> Point {
        Point::new(SpaceTag::ShiftTruncation, self.to_coords(field))
    }

    pub fn from_coords(spec: &WeightedShiftSpec, coords: &[f64]) -> Result<Self> {
        if coords.len() != spec.dimension() {
            return Err(Error::DimensionMismatch {
                expected: spec.dimension(),
                got: coords.len(),
            });
        }
        let entries = match spec.field {
            ScalarField::Real => coords.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            ScalarField::Complex => coords
                .chunks_exact(2)
                .map(|p| Complex64::new(p[0], p[1]))
                .collect(),
        };
        ShiftVector::from_entries(spec, entries)
    }

    pub fn from_point(spec: &WeightedShiftSpec, p: &Point) -> Result<Self> {
        if p.space != SpaceTag::ShiftTruncation {
            return Err(Error::invalid("point is not in a shift space"));
        }
        ShiftVector::from_coords(spec, &p.coords)
    }
}

/// In-place backward shift on raw coordinates (see [`shift_apply`]).
pub(crate) fn shift_coords_in_place(spec: &WeightedShiftSpec, weights: &[f64], coords: &mut [f64]) {
    let stride = spec.block_dim * spec.field.width();
    let m = spec.truncation;
    for b in 0..m - 1 {
        // output block b+1 (1-based) takes w_{b+2} times block b+2
        let w = weights[b + 2];
        let (head, tail) = coords.split_at_mut((b + 1) * stride);
        for (dst, src) in head[b * stride..].iter_mut().zip(&tail[..stride]) {
            *dst = w * src;
        }
    }
    coords[(m - 1) * stride..].fill(0.0);
}
