use num_complex::Complex64;

use super::{wrap_unit, Ball, Point, SpaceTag};
use crate::error::{Error, Result};
use crate::shifts::{self, ScalarField, WeightedShiftSpec};

/// Rotation number used when a configuration asks for "the" irrational
/// rotation: `(sqrt(5) - 1) / 2`, whose convergents are Fibonacci ratios.
pub const GOLDEN_ROTATION: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    /// `x -> 2x mod 1` on the circle.
    Doubling,
    /// `x -> x + alpha mod 1` on the circle.
    Rotation { alpha: f64 },
    /// `x -> 1 - |2x - 1|` on `[0, 1]`.
    Tent,
    /// `x -> c x` on `[0, 1]`, `0 < c < 1`.
    Contraction { factor: f64 },
    /// Piecewise-linear map of `[0, 1]` swapping the two halves. It is
    /// transitive while its square leaves `[0, 1/2]` and `[1/2, 1]` invariant.
    ///
    /// `x -> 1/2 + (1 - |4x - 1|) / 2` on `[0, 1/2]`, `x -> 1 - x` on `[1/2, 1]`.
    Interchange,
    /// Backward weighted shift on truncated `l2(H)`. `weights[n]` is `w_n` for
    /// `1 <= n <= M`; index 0 is unused.
    WeightedShift {
        spec: WeightedShiftSpec,
        weights: Vec<f64>,
    },
    Power { base: Box<System>, exponent: u32 },
    Scalar { base: Box<System>, lambda: Complex64 },
}

/// A computable self-map of a complete metric space together with a sound
/// one-step Lipschitz constant. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct System {
    kind: MapKind,
    space: SpaceTag,
    dimension: usize,
    lipschitz: f64,
}

impl System {
    pub fn doubling() -> Self {
        System {
            kind: MapKind::Doubling,
            space: SpaceTag::Circle,
            dimension: 1,
            lipschitz: 2.0,
        }
    }

    pub fn rotation(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::invalid("rotation angle must be finite"));
        }
        Ok(System {
            kind: MapKind::Rotation {
                alpha: wrap_unit(alpha),
            },
            space: SpaceTag::Circle,
            dimension: 1,
            lipschitz: 1.0,
        })
    }

    pub fn golden_rotation() -> Self {
        System::rotation(GOLDEN_ROTATION).expect("finite angle")
    }

    pub fn tent() -> Self {
        System {
            kind: MapKind::Tent,
            space: SpaceTag::Interval,
            dimension: 1,
            lipschitz: 2.0,
        }
    }

    pub fn contraction(factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor < 1.0) {
            return Err(Error::invalid(format!(
                "contraction factor must lie in (0, 1), got {factor}"
            )));
        }
        Ok(System {
            kind: MapKind::Contraction { factor },
            space: SpaceTag::Interval,
            dimension: 1,
            lipschitz: factor,
        })
    }

    pub fn interchange() -> Self {
        System {
            kind: MapKind::Interchange,
            space: SpaceTag::Interval,
            dimension: 1,
            lipschitz: 2.0,
        }
    }

    pub fn weighted_shift(spec: WeightedShiftSpec) -> Result<Self> {
        spec.validate()?;
        let weights = spec.weight_window();
        // Output block n is w_{n+1} times input block n+1, so only w_2..w_M act.
        let lipschitz = weights[2..].iter().copied().fold(0.0, f64::max);
        Ok(System {
            dimension: spec.dimension(),
            kind: MapKind::WeightedShift { spec, weights },
            space: SpaceTag::ShiftTruncation,
            lipschitz,
        })
    }

    pub(crate) fn power_of(base: System, exponent: u32) -> Self {
        System {
            space: base.space,
            dimension: base.dimension,
            lipschitz: base.lipschitz.powi(exponent as i32),
            kind: MapKind::Power {
                base: Box::new(base),
                exponent,
            },
        }
    }

    pub(crate) fn scaled_by(base: System, lambda: Complex64) -> Self {
        System {
            space: base.space,
            dimension: base.dimension,
            lipschitz: lambda.norm() * base.lipschitz,
            kind: MapKind::Scalar {
                base: Box::new(base),
                lambda,
            },
        }
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn space(&self) -> SpaceTag {
        self.space
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Short human-readable identifier, used in reports.
    pub fn name(&self) -> String {
        match &self.kind {
            MapKind::Doubling => "doubling".into(),
            MapKind::Rotation { alpha } => format!("rotation({alpha})"),
            MapKind::Tent => "tent".into(),
            MapKind::Contraction { factor } => format!("contraction({factor})"),
            MapKind::Interchange => "interchange".into(),
            MapKind::WeightedShift { spec, .. } => format!(
                "weighted-shift({}, d={}, M={}, {})",
                spec.weights.describe(),
                spec.block_dim,
                spec.truncation,
                spec.field.name()
            ),
            MapKind::Power { base, exponent } => format!("power({}, {exponent})", base.name()),
            MapKind::Scalar { base, lambda } => {
                format!("scalar({}, {}{:+}i)", base.name(), lambda.re, lambda.im)
            }
        }
    }

    /// The underlying shift specification when the system is a shift or a
    /// power / unimodular wrapper of one.
    pub fn shift_spec(&self) -> Option<&WeightedShiftSpec> {
        match &self.kind {
            MapKind::WeightedShift { spec, .. } => Some(spec),
            MapKind::Power { base, .. } | MapKind::Scalar { base, .. } => base.shift_spec(),
            _ => None,
        }
    }

    pub fn is_linear(&self) -> bool {
        self.shift_spec().is_some()
    }

    /// Validates a point against the declared domain.
    pub fn check_point(&self, p: &Point) -> Result<()> {
        if p.space != self.space {
            return Err(Error::invalid(format!(
                "point lives in {:?}, system acts on {:?}",
                p.space, self.space
            )));
        }
        if p.coords.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: p.coords.len(),
            });
        }
        for &c in &p.coords {
            let ok = match self.space {
                SpaceTag::Circle => (0.0..1.0).contains(&c),
                SpaceTag::Interval => (0.0..=1.0).contains(&c),
                SpaceTag::ShiftTruncation => c.is_finite(),
            };
            if !ok {
                return Err(Error::invalid(format!(
                    "coordinate {c} outside the {:?} domain",
                    self.space
                )));
            }
        }
        Ok(())
    }

    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        let p = Point::new(self.space, coords);
        self.check_point(&p)?;
        Ok(p)
    }

    /// One application of the map on raw coordinates. Callers guarantee the
    /// coordinates are in the domain.
    pub(crate) fn step_in_place(&self, coords: &mut [f64]) {
        match &self.kind {
            MapKind::Doubling => {
                let y = 2.0 * coords[0];
                coords[0] = if y >= 1.0 { y - 1.0 } else { y };
            }
            MapKind::Rotation { alpha } => coords[0] = wrap_unit(coords[0] + alpha),
            MapKind::Tent => coords[0] = 1.0 - (2.0 * coords[0] - 1.0).abs(),
            MapKind::Contraction { factor } => coords[0] *= factor,
            MapKind::Interchange => {
                let x = coords[0];
                coords[0] = if x <= 0.5 {
                    0.5 + 0.5 * (1.0 - (4.0 * x - 1.0).abs())
                } else {
                    1.0 - x
                };
            }
            MapKind::WeightedShift { spec, weights } => {
                shifts::shift_coords_in_place(spec, weights, coords)
            }
            MapKind::Power { base, exponent } => {
                for _ in 0..*exponent {
                    base.step_in_place(coords);
                }
            }
            MapKind::Scalar { base, lambda } => {
                base.step_in_place(coords);
                let complex = self
                    .shift_spec()
                    .is_some_and(|s| s.field == ScalarField::Complex);
                if complex {
                    for pair in coords.chunks_exact_mut(2) {
                        let z = Complex64::new(pair[0], pair[1]) * lambda;
                        pair[0] = z.re;
                        pair[1] = z.im;
                    }
                } else {
                    for c in coords.iter_mut() {
                        *c *= lambda.re;
                    }
                }
            }
        }
    }

    /// One application on a validated point.
    pub fn apply(&self, p: &Point) -> Result<Point> {
        apply_iter(self, p, 1)
    }
}

/// `L^n`, saturating to infinity rather than wrapping the exponent.
pub(crate) fn lipschitz_power(l: f64, n: u64) -> f64 {
    if n <= i32::MAX as u64 {
        l.powi(n as i32)
    } else {
        l.powf(n as f64)
    }
}

/// `T^n x`.
pub fn apply_iter(system: &System, x: &Point, n: u64) -> Result<Point> {
    system.check_point(x)?;
    let mut coords = x.coords.clone();
    for _ in 0..n {
        system.step_in_place(&mut coords);
    }
    Ok(Point::new(x.space, coords))
}

/// Lipschitz enclosure of `T^n(b)`: `B(T^n c, r L^n)`.
///
/// Underflow is rounded up to the smallest positive double, which keeps the
/// enclosure sound and the radius positive.
pub fn enclose_image(system: &System, b: &Ball, n: u64) -> Result<Ball> {
    let center = apply_iter(system, &b.center, n)?;
    let factor = lipschitz_power(system.lipschitz, n);
    let radius = b.radius * factor;
    if !radius.is_finite() {
        return Err(Error::EnclosureBlowup {
            radius: b.radius,
            lipschitz: system.lipschitz,
            steps: n,
        });
    }
    Ok(Ball {
        center,
        radius: radius.max(f64::MIN_POSITIVE),
    })
}
