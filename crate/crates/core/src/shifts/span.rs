use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::wrappers::LinearForm;
use super::ShiftVector;
use crate::error::{Error, Result};
use crate::spaces::System;

const DROP_TOLERANCE: f64 = 1e-10;

/// Orthonormal basis of `span{T^j s : s in seeds, 0 <= j <= depth}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSpanBasis {
    pub basis: Vec<ShiftVector>,
    pub seeds: Vec<ShiftVector>,
    pub depth: usize,
}

impl OrbitSpanBasis {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }
}

/// Orthogonalises `v` against `basis` (modified Gram-Schmidt, two sweeps).
fn orthogonalise(basis: &[ShiftVector], v: &mut ShiftVector) {
    for _ in 0..2 {
        for b in basis {
            let c = b.inner(v);
            for (x, y) in v.entries.iter_mut().zip(&b.entries) {
                *x -= c * y;
            }
        }
    }
}

/// Krylov-style basis of the orbit span. Orbit vectors are visited seed by
/// seed, depth by depth; a vector is dropped when its residual is below
/// `1e-10` times its own norm (zero vectors always drop).
pub fn orbit_span_basis(system: &System, seeds: &[ShiftVector], depth: usize) -> Result<OrbitSpanBasis> {
    let form = LinearForm::of(system)?;
    if depth == 0 {
        return Err(Error::invalid("orbit depth must be at least 1"));
    }
    let mut basis: Vec<ShiftVector> = Vec::new();
    for seed in seeds {
        seed.check(&form.spec)?;
        let mut v = seed.clone();
        for j in 0..=depth {
            let norm = v.norm();
            if norm > 0.0 {
                let mut r = v.clone();
                orthogonalise(&basis, &mut r);
                let rn = r.norm();
                if rn > DROP_TOLERANCE * norm {
                    basis.push(r.scale(Complex64::new(1.0 / rn, 0.0)));
                }
            }
            if j < depth {
                v = form.iterate(&v, 1)?;
            }
        }
    }
    Ok(OrbitSpanBasis {
        basis,
        seeds: seeds.to_vec(),
        depth,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressedOperator {
    /// `matrix[i][j] = <b_i, T b_j>`.
    pub matrix: Vec<Vec<Complex64>>,
    /// `||(I - P) T b_j||` per basis vector.
    pub column_defects: Vec<f64>,
    /// Maximum of `column_defects`; zero when the span is invariant.
    pub invariance_defect: f64,
}

/// Compression of `T` to the span of `basis`.
pub fn compressed_operator(system: &System, basis: &OrbitSpanBasis) -> Result<CompressedOperator> {
    let form = LinearForm::of(system)?;
    for b in &basis.basis {
        if b.block_dim != form.spec.block_dim || b.entries.len() != form.spec.truncation * form.spec.block_dim {
            return Err(Error::DimensionMismatch {
                expected: form.spec.truncation * form.spec.block_dim,
                got: b.entries.len(),
            });
        }
    }
    let k = basis.basis.len();
    let mut matrix = vec![vec![Complex64::new(0.0, 0.0); k]; k];
    let mut column_defects = Vec::with_capacity(k);
    for (j, bj) in basis.basis.iter().enumerate() {
        let image = form.iterate(bj, 1)?;
        for (i, bi) in basis.basis.iter().enumerate() {
            matrix[i][j] = bi.inner(&image);
        }
        let mut residual = image;
        orthogonalise(&basis.basis, &mut residual);
        column_defects.push(residual.norm());
    }
    let invariance_defect = column_defects.iter().copied().fold(0.0, f64::max);
    Ok(CompressedOperator {
        matrix,
        column_defects,
        invariance_defect,
    })
}
