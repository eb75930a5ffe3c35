use num_complex::Complex64;
use rayon::prelude::*;

use super::ops::{right_inverse_apply, ShiftWitness};
use super::{ScalarField, ShiftVector, WeightedShiftSpec};
use crate::error::{Error, Result};
use crate::spaces::{MapKind, System};

/// `T^p` as a system of its own. Works for every catalogue system.
pub fn power_system(system: &System, p: u32) -> Result<System> {
    if p == 0 {
        return Err(Error::invalid("power must be a positive integer"));
    }
    Ok(System::power_of(system.clone(), p))
}

/// `lambda T` for a linear system and `|lambda| = 1`. Real-field systems only
/// accept `lambda = +-1`.
pub fn scale_unimodular(system: &System, lambda: Complex64) -> Result<System> {
    let spec = system.shift_spec().ok_or(Error::NotLinear)?;
    if (lambda.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::NotUnimodular {
            re: lambda.re,
            im: lambda.im,
        });
    }
    let lambda = if spec.field == ScalarField::Real {
        if lambda.im.abs() > 1e-12 {
            return Err(Error::invalid("real-field systems only admit lambda = +1 or -1"));
        }
        Complex64::new(lambda.re.signum(), 0.0)
    } else {
        lambda
    };
    Ok(System::scaled_by(system.clone(), lambda))
}

/// A shift-family system written as `scale * T_w^stride` per application.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearForm {
    pub spec: WeightedShiftSpec,
    pub scale: Complex64,
    pub stride: usize,
}

impl LinearForm {
    pub fn of(system: &System) -> Result<LinearForm> {
        match system.kind() {
            MapKind::WeightedShift { spec, .. } => Ok(LinearForm {
                spec: spec.clone(),
                scale: Complex64::new(1.0, 0.0),
                stride: 1,
            }),
            MapKind::Power { base, exponent } => {
                let inner = LinearForm::of(base)?;
                Ok(LinearForm {
                    scale: inner.scale.powu(*exponent),
                    stride: inner.stride * *exponent as usize,
                    spec: inner.spec,
                })
            }
            MapKind::Scalar { base, lambda } => {
                let inner = LinearForm::of(base)?;
                Ok(LinearForm {
                    scale: inner.scale * lambda,
                    ..inner
                })
            }
            _ => Err(Error::NotLinear),
        }
    }

    /// `n` applications: `scale^n T^(stride n) v`, evaluated step by step.
    pub fn iterate(&self, v: &ShiftVector, n: usize) -> Result<ShiftVector> {
        let system = System::weighted_shift(self.spec.clone())?;
        let mut coords = v.to_coords(self.spec.field);
        for _ in 0..n {
            for _ in 0..self.stride {
                system.step_in_place(&mut coords);
            }
        }
        let out = ShiftVector::from_coords(&self.spec, &coords)?;
        Ok(out.scale(self.scale.powu(n as u32)))
    }
}

/// Transitivity witness for `S = scale * T^stride`:
/// `z = u + scale^(-n) R^(stride n) v` for the smallest `n >= 1` with
/// `stride n >= support(u)` (so `S^n u = 0`) and `||R^(stride n) v|| < eps_u`.
/// Then `S^n z = v` exactly in exact arithmetic; the returned witness records
/// the distance actually achieved in floating point and is only returned when
/// it is below `eps_v`.
///
/// `None` when no admissible `n` fits inside the truncation (or below
/// `max_time`). Both supports must be at most `M / 2`.
pub fn linear_transitivity_witness(
    form: &LinearForm,
    u: &ShiftVector,
    v: &ShiftVector,
    eps_u: f64,
    eps_v: f64,
    max_time: Option<usize>,
) -> Result<Option<ShiftWitness>> {
    let spec = &form.spec;
    spec.validate()?;
    u.check(spec)?;
    v.check(spec)?;
    if !(eps_u > 0.0 && eps_v > 0.0) {
        return Err(Error::invalid("witness tolerances must be positive"));
    }
    let half = spec.truncation / 2;
    let (su, sv) = (u.support(), v.support());
    if su > half || sv > half {
        return Err(Error::invalid(format!(
            "witness endpoints must be supported on the first {half} blocks (got {su} and {sv})"
        )));
    }
    let first = su.div_ceil(form.stride).max(1);
    let last = max_time.unwrap_or(usize::MAX);
    for n in first..=last {
        let steps = form.stride * n;
        if sv + steps > spec.truncation {
            break;
        }
        let tail = right_inverse_apply(spec, v, steps)?.scale(form.scale.powu(n as u32).inv());
        let start_distance = tail.norm();
        if start_distance >= eps_u {
            continue;
        }
        let z = u.add(&tail);
        let end_distance = form.iterate(&z, n)?.distance(v);
        if end_distance < eps_v {
            let start_distance = z.distance(u);
            return Ok(Some(ShiftWitness {
                z,
                time: n,
                start_distance,
                end_distance,
            }));
        }
    }
    Ok(None)
}

/// [`linear_transitivity_witness`] over many pairs, in parallel. Results keep
/// the order of `pairs`; the first error (by index) is returned.
pub fn witness_battery(
    form: &LinearForm,
    pairs: &[(ShiftVector, ShiftVector)],
    eps_u: f64,
    eps_v: f64,
    max_time: Option<usize>,
) -> Result<Vec<Option<ShiftWitness>>> {
    pairs
        .par_iter()
        .map(|(u, v)| linear_transitivity_witness(form, u, v, eps_u, eps_v, max_time))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}
