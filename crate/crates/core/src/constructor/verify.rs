//! Independent re-check of a nested-ball certificate.
//!
//! Every containment is recomputed from the system and the recorded balls.
//! Nothing stored in the certificate besides centers, radii and times is
//! trusted; recorded margins are only compared against the recomputed ones.

use serde::{Deserialize, Serialize};

use super::NestedBallCertificate;
use crate::error::Result;
use crate::spaces::{apply_iter, enclose_image, Ball, Point, System, DEFAULT_SLACK};

/// What a check's margin measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// Room below a radius cap.
    Bound,
    /// Room left by a ball (or point) inside another ball.
    Containment,
    /// Room left by the orbit of the limit point below its tolerance.
    Orbit,
    /// Recomputed minus recorded margin; zero when they agree.
    Consistency,
    /// Domain, depth and time ordering; the margin is a gap or zero.
    Structure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub kind: CheckKind,
    /// 1-based stage, 0 for checks on the whole certificate.
    pub stage: usize,
    pub passed: bool,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Smallest geometric margin (bounds, containments, orbit distances).
    pub fn min_margin(&self) -> f64 {
        self.checks
            .iter()
            .filter(|c| matches!(c.kind, CheckKind::Bound | CheckKind::Containment | CheckKind::Orbit))
            .map(|c| c.margin)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Tolerance for set containments.
    pub slack: f64,
    /// Tolerance for distances measured along actual orbits.
    pub empirical_tolerance: f64,
    /// Allowed shortfall of a recomputed margin against the recorded one.
    pub margin_tolerance: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            slack: DEFAULT_SLACK,
            empirical_tolerance: 1e-9,
            margin_tolerance: 1e-9,
        }
    }
}

struct Checks<'a> {
    out: Vec<CheckResult>,
    opts: &'a VerifyOptions,
}

impl Checks<'_> {
    fn push(&mut self, name: &str, kind: CheckKind, stage: usize, margin: f64, tolerance: f64) {
        let passed = margin.is_finite() && margin >= -tolerance;
        self.out.push(CheckResult {
            name: name.to_string(),
            kind,
            stage,
            passed,
            margin,
        });
    }

    fn containment(&mut self, name: &str, stage: usize, outer: &Ball, inner: &Ball) {
        self.push(name, CheckKind::Containment, stage, outer.containment_margin(inner), self.opts.slack);
    }

    /// `T^time(ball) ⊆ target`; blowups and domain errors fail the check.
    fn image(&mut self, name: &str, stage: usize, system: &System, ball: &Ball, time: u64, target: &Ball) -> Option<f64> {
        match enclose_image(system, ball, time) {
            Ok(img) => {
                let margin = target.containment_margin(&img);
                self.push(name, CheckKind::Containment, stage, margin, self.opts.slack);
                Some(margin)
            }
            Err(_) => {
                self.push(name, CheckKind::Containment, stage, f64::NEG_INFINITY, 0.0);
                None
            }
        }
    }

    fn recorded(&mut self, name: &str, stage: usize, recomputed: Option<f64>, stored: f64) {
        let margin = match recomputed {
            Some(m) => m - stored,
            None => f64::NEG_INFINITY,
        };
        self.push(name, CheckKind::Consistency, stage, margin, self.opts.margin_tolerance);
    }

    fn orbit_distance(&mut self, name: &str, stage: usize, image: Result<Point>, target: &Point, bound: f64) {
        let margin = match image {
            Ok(p) => bound - p.distance(target),
            Err(_) => f64::NEG_INFINITY,
        };
        self.push(name, CheckKind::Orbit, stage, margin, self.opts.empirical_tolerance);
    }
}

/// Checks a certificate against `system`.
///
/// Per stage `n`: radii below `2^{-n}` with the return ball no larger than the
/// approach ball, nesting of consecutive balls, the approach and return
/// enclosures, agreement with recorded margins, strictly increasing positive
/// times, membership of the limit point in every ball, and the orbit of the
/// limit point itself passing within `1/n` of the target at `k_n` and within
/// `2^{-n+1}` of its start at `m_n`.
pub fn verify_certificate(system: &System, cert: &NestedBallCertificate, opts: &VerifyOptions) -> VerificationReport {
    let mut c = Checks { out: Vec::new(), opts };

    let domain_ok = [&cert.target, &cert.initial_ball.center, &cert.limit_point]
        .iter()
        .all(|p| system.check_point(p).is_ok())
        && cert.stages.iter().all(|s| {
            system.check_point(&s.approach.center).is_ok()
                && s.return_.as_ref().is_none_or(|r| system.check_point(&r.center).is_ok())
        });
    c.push("domain", CheckKind::Structure, 0, if domain_ok { 0.0 } else { f64::NEG_INFINITY }, 0.0);
    let depth_ok = cert.depth == cert.stages.len() && cert.depth > 0;
    c.push("depth", CheckKind::Structure, 0, if depth_ok { 0.0 } else { f64::NEG_INFINITY }, 0.0);
    if !domain_ok {
        return finish(c.out);
    }

    let mut outer = cert.initial_ball.clone();
    let (mut last_k, mut last_m) = (0u64, 0u64);
    for (i, stage) in cert.stages.iter().enumerate() {
        let n = i + 1;
        let cap = 0.5f64.powi(n as i32);
        let approach = stage.approach.ball();

        c.push("approach-radius", CheckKind::Bound, n, cap - approach.radius, -f64::MIN_POSITIVE);
        c.containment("approach-nesting", n, &outer, &approach);
        let target = Ball {
            center: cert.target.clone(),
            radius: 1.0 / n as f64,
        };
        let m = c.image("approach-enclosure", n, system, &approach, stage.approach.time, &target);
        c.recorded("approach-margin", n, m, stage.approach.margin);
        let gap = stage.approach.time as f64 - last_k as f64;
        c.push("approach-time", CheckKind::Structure, n, if gap > 0.0 { gap } else { f64::NEG_INFINITY }, 0.0);
        last_k = stage.approach.time;
        c.containment("limit-in-approach", n, &approach, &Ball { center: cert.limit_point.clone(), radius: 0.0 });
        let image = apply_iter(system, &cert.limit_point, stage.approach.time);
        c.orbit_distance("orbit-approach", n, image, &cert.target, 1.0 / n as f64);

        if let Some(ret) = &stage.return_ {
            let ball = ret.ball();
            c.push("return-radius", CheckKind::Bound, n, approach.radius - ball.radius, 0.0);
            c.containment("return-nesting", n, &approach, &ball);
            let m = c.image("return-enclosure", n, system, &ball, ret.time, &approach);
            c.recorded("return-margin", n, m, ret.margin);
            let gap = ret.time as f64 - last_m as f64;
            c.push("return-time", CheckKind::Structure, n, if gap > 0.0 { gap } else { f64::NEG_INFINITY }, 0.0);
            last_m = ret.time;
            c.containment("limit-in-return", n, &ball, &Ball { center: cert.limit_point.clone(), radius: 0.0 });
            let image = apply_iter(system, &cert.limit_point, ret.time);
            c.orbit_distance("orbit-return", n, image, &cert.limit_point, 2.0 * cap);
        }
        outer = stage.innermost().ball();
    }
    finish(c.out)
}

fn finish(checks: Vec<CheckResult>) -> VerificationReport {
    let passed = checks.iter().all(|c| c.passed);
    VerificationReport { checks, passed }
}
