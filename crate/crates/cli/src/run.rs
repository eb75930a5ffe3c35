//! One experiment: build the system, dispatch the operation, collect the
//! result payload and any side artifacts.

use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};
use translab::constructor::{
    construct_recurrent_point, verify_certificate, Construction, NestedBallCertificate, StageSearch, VerifyOptions,
};
use translab::limits::{
    almost_transitivity_scan, gdelta_check, jset_witness, limit_witness_with_min, orbit_segment, transitivity_scan,
    PairSet, ScanOptions, ScanReport, Verdict,
};
use translab::shifts::{
    compressed_operator, orbit_span_basis, power_system, random_battery, salas_verdict, scale_unimodular,
    witness_battery, LinearForm, ShiftVector, ShiftWitness,
};
use translab::spaces::apply_iter;
use translab::{MapKind, Point, SeededSampler, SpaceTag, System};

use crate::config::{self, require, Config, Operation, Params};
use crate::CliError;

/// Tolerance for `T^p` computed in one step versus `p` steps.
pub const POWER_COHERENCE_TOLERANCE: f64 = 1e-12;
/// Relative tolerance for `||(lambda T)^n z|| = ||T^n z||`.
pub const NORM_INVARIANCE_TOLERANCE: f64 = 1e-10;

pub struct Outcome {
    pub result: Value,
    pub passed: bool,
    pub message: String,
    /// `(file suffix, contents)` written next to the report.
    pub artifacts: Vec<(String, Vec<u8>)>,
}

impl Outcome {
    fn new(result: impl Serialize, passed: bool, message: String) -> Result<Self, CliError> {
        Ok(Outcome {
            result: serde_json::to_value(result).map_err(|e| CliError::Io(e.to_string()))?,
            passed,
            message,
            artifacts: Vec::new(),
        })
    }
}

/// Runs `op` on `cfg`. Relative paths inside the config resolve against
/// `base_dir`.
pub fn execute(cfg: &Config, op: Operation, base_dir: &Path) -> Result<Outcome, CliError> {
    let system = cfg.system.build()?;
    let p = &cfg.params;
    let sampler = SeededSampler::new(cfg.seed);
    match op {
        Operation::Scan | Operation::AlmostScan => scan(&system, p, &sampler, op == Operation::AlmostScan),
        Operation::Recurrent => recurrent(&system, p, sampler),
        Operation::VerifyCert => verify(&system, p, base_dir),
        Operation::Salas => salas(&system, p),
        Operation::Witness => witness(&system, p, sampler),
        Operation::PowerCheck => power_check(&system, p, sampler),
        Operation::UnimodularCheck => unimodular_check(&system, p, sampler),
        Operation::Span => span(&system, p),
        Operation::Gdelta => gdelta(&system, p),
        Operation::Jset => jset(&system, p, sampler),
        Operation::Limit => limit(&system, p),
        Operation::Orbit => orbit(&system, p),
    }
}

fn pair_set(system: &System, p: &Params) -> Result<PairSet, CliError> {
    Ok(match &p.pairs {
        Some(list) => PairSet::Explicit(
            list.iter()
                .map(|pc| Ok((config::ball(system, &pc.u)?, config::ball(system, &pc.v)?)))
                .collect::<Result<_, CliError>>()?,
        ),
        None => PairSet::Grid(p.resolution.unwrap_or(1.0 / 16.0)),
    })
}

fn scan_options(p: &Params) -> ScanOptions {
    let d = ScanOptions::default();
    ScanOptions {
        horizon: p.horizon.unwrap_or(d.horizon),
        samples: p.samples.unwrap_or(d.samples),
    }
}

fn scan_message(report: &ScanReport) -> String {
    format!(
        "{} of {} pairs hit within horizon {}",
        report.hit_count(),
        report.pairs.len(),
        report.horizon
    )
}

fn scan(system: &System, p: &Params, sampler: &SeededSampler, almost: bool) -> Result<Outcome, CliError> {
    let pairs = pair_set(system, p)?;
    let opts = scan_options(p);
    let report = if almost {
        almost_transitivity_scan(system, &pairs, &opts, sampler)?
    } else {
        transitivity_scan(system, &pairs, &opts, sampler)?
    };
    let csv = scan_csv(&report)?;
    let mut out = Outcome::new(&report, report.passed(), scan_message(&report))?;
    out.artifacts.push(("scan.csv".into(), csv));
    Ok(out)
}

#[derive(Serialize)]
struct CsvRow {
    index: usize,
    u_center: String,
    u_radius: f64,
    v_center: String,
    v_radius: f64,
    outcome: &'static str,
    time: Option<u64>,
    direction: Option<&'static str>,
    distance: Option<f64>,
}

fn joined(p: &Point) -> String {
    p.coords.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")
}

/// One row per pair; `min_distance` goes into `distance` for misses.
pub fn scan_csv(report: &ScanReport) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for pair in &report.pairs {
        let (outcome, time, direction, distance) = match &pair.verdict {
            Verdict::Hit {
                time,
                direction,
                distance,
                ..
            } => (
                "hit",
                Some(*time),
                Some(match direction {
                    translab::limits::Direction::Forward => "forward",
                    translab::limits::Direction::Reverse => "reverse",
                }),
                Some(*distance),
            ),
            Verdict::NoHitUpToHorizon { min_distance } => ("no-hit-up-to-horizon", None, None, *min_distance),
        };
        w.serialize(CsvRow {
            index: pair.index,
            u_center: joined(&pair.u.center),
            u_radius: pair.u.radius,
            v_center: joined(&pair.v.center),
            v_radius: pair.v.radius,
            outcome,
            time,
            direction,
            distance,
        })
        .map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

fn recurrent(system: &System, p: &Params, mut sampler: SeededSampler) -> Result<Outcome, CliError> {
    let target = config::point(system, &require(&p.target, "target")?)?;
    let center = config::point(system, &require(&p.center, "center")?)?;
    let initial = translab::Ball::new(center, require(&p.radius, "radius")?)?;
    let depth = p.depth.unwrap_or(4);
    let search = StageSearch::new(p.budget.unwrap_or(10_000), p.candidates.unwrap_or(256));
    let recurrent = p.recurrent.unwrap_or(true);
    let construction = construct_recurrent_point(system, &target, &initial, depth, &search, recurrent, &mut sampler)?;
    match &construction {
        Construction::Certified(cert) => {
            let verification = verify_certificate(system, cert, &VerifyOptions::default());
            let message = format!(
                "certificate of depth {depth}; {} of {} checks pass, minimum margin {:e}",
                verification.checks.iter().filter(|c| c.passed).count(),
                verification.checks.len(),
                verification.min_margin()
            );
            let mut out = Outcome::new(
                json!({ "construction": construction, "verification": verification }),
                verification.passed,
                message,
            )?;
            out.artifacts.push((
                "certificate.json".into(),
                crate::json::to_vec(cert).map_err(|e| CliError::Io(e.to_string()))?,
            ));
            Ok(out)
        }
        Construction::StageFailed(f) => {
            let message = format!("no {:?} ball found at stage {} within the budget", f.phase, f.stage).to_lowercase();
            Outcome::new(json!({ "construction": construction }), false, message)
        }
    }
}

fn verify(system: &System, p: &Params, base_dir: &Path) -> Result<Outcome, CliError> {
    let path = require(&p.certificate, "certificate")?;
    let path = if path.is_relative() { base_dir.join(path) } else { path };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Config(format!("cannot read certificate {}: {e}", path.display())))?;
    let cert: NestedBallCertificate = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("malformed certificate {}: {e}", path.display())))?;
    let report = verify_certificate(system, &cert, &VerifyOptions::default());
    let failed = report.failures().count();
    let message = if report.passed {
        format!("all {} checks pass", report.checks.len())
    } else {
        format!("{failed} of {} checks fail", report.checks.len())
    };
    Outcome::new(&report, report.passed, message)
}

fn salas(system: &System, p: &Params) -> Result<Outcome, CliError> {
    let MapKind::WeightedShift { spec, .. } = system.kind() else {
        return Err(CliError::Config("salas needs a plain weighted shift system".into()));
    };
    let report = salas_verdict(spec, p.horizon.map_or(50, |h| h as usize), p.threshold.unwrap_or(1e6))?;
    let message = format!(
        "max log partial product {:.6} at n = {} against log threshold {:.6}",
        report.max_log_product,
        report.argmax,
        report.threshold.ln()
    );
    Outcome::new(&report, report.satisfied(), message)
}

#[derive(Serialize)]
struct WitnessEntry {
    index: usize,
    u: ShiftVector,
    v: ShiftVector,
    witness: Option<ShiftWitness>,
}

struct Battery {
    entries: Vec<WitnessEntry>,
    found: usize,
}

fn battery_pairs(
    form: &LinearForm,
    p: &Params,
    sampler: &mut SeededSampler,
) -> Result<Vec<(ShiftVector, ShiftVector)>, CliError> {
    match (&p.u, &p.v) {
        (Some(u), Some(v)) => Ok(vec![(config::vector(&form.spec, u)?, config::vector(&form.spec, v)?)]),
        (None, None) => {
            let mut rng = sampler.next_rng();
            Ok(random_battery(&form.spec, p.battery.unwrap_or(20), p.max_support.unwrap_or(4), &mut rng))
        }
        _ => Err(CliError::Config("give both `params.u` and `params.v`, or neither".into())),
    }
}

fn run_battery(form: &LinearForm, pairs: Vec<(ShiftVector, ShiftVector)>, p: &Params) -> Result<Battery, CliError> {
    let witnesses = witness_battery(form, &pairs, p.eps_u.unwrap_or(1e-3), p.eps_v.unwrap_or(1e-10), p.max_time)?;
    let found = witnesses.iter().filter(|w| w.is_some()).count();
    let entries = pairs
        .into_iter()
        .zip(witnesses)
        .enumerate()
        .map(|(index, ((u, v), witness))| WitnessEntry { index, u, v, witness })
        .collect();
    Ok(Battery { entries, found })
}

fn witness(system: &System, p: &Params, mut sampler: SeededSampler) -> Result<Outcome, CliError> {
    let form = LinearForm::of(system)?;
    let pairs = battery_pairs(&form, p, &mut sampler)?;
    let b = run_battery(&form, pairs, p)?;
    let total = b.entries.len();
    let max_end = b
        .entries
        .iter()
        .filter_map(|e| e.witness.as_ref().map(|w| w.end_distance))
        .fold(0.0, f64::max);
    Outcome::new(
        json!({ "pairs": b.entries, "found": b.found, "max_end_distance": max_end }),
        b.found == total,
        format!("{} of {total} witnesses found, max end distance {max_end:e}", b.found),
    )
}

fn random_domain_point<R: Rng>(system: &System, rng: &mut R) -> Result<Point, CliError> {
    let coords = match system.space() {
        SpaceTag::Circle | SpaceTag::Interval => vec![rng.random::<f64>()],
        SpaceTag::ShiftTruncation => (0..system.dimension()).map(|_| rng.random_range(-1.0..1.0)).collect(),
    };
    Ok(system.point(coords)?)
}

fn power_check(system: &System, p: &Params, mut sampler: SeededSampler) -> Result<Outcome, CliError> {
    let power = p.p.unwrap_or(2);
    let tp = power_system(system, power)?;
    let mut rng = sampler.next_rng();
    let mut defect: f64 = 0.0;
    for _ in 0..p.battery.unwrap_or(20).max(1) {
        let x = random_domain_point(system, &mut rng)?;
        let one = tp.apply(&x)?;
        let many = apply_iter(system, &x, power as u64)?;
        defect = defect.max(one.distance(&many));
    }
    let coherent = defect <= POWER_COHERENCE_TOLERANCE;
    if system.is_linear() {
        let form = LinearForm::of(&tp)?;
        let pairs = battery_pairs(&form, p, &mut sampler)?;
        let b = run_battery(&form, pairs, p)?;
        let total = b.entries.len();
        Outcome::new(
            json!({ "power": power, "coherence_defect": defect, "coherent": coherent, "pairs": b.entries, "found": b.found }),
            coherent && b.found == total,
            format!("T^{power}: coherence defect {defect:e}, {} of {total} witnesses found", b.found),
        )
    } else {
        let report = transitivity_scan(&tp, &pair_set(&tp, p)?, &scan_options(p), &sampler)?;
        let message = format!("T^{power}: coherence defect {defect:e}, {}", scan_message(&report));
        let csv = scan_csv(&report)?;
        let mut out = Outcome::new(
            json!({ "power": power, "coherence_defect": defect, "coherent": coherent, "scan": report }),
            coherent && report.passed(),
            message,
        )?;
        out.artifacts.push(("scan.csv".into(), csv));
        Ok(out)
    }
}

fn unimodular_check(system: &System, p: &Params, mut sampler: SeededSampler) -> Result<Outcome, CliError> {
    let lambda = p.lambda.unwrap_or([-1.0, 0.0]);
    let lt = scale_unimodular(system, Complex64::new(lambda[0], lambda[1]))?;
    let base = LinearForm::of(system)?;
    let scaled = LinearForm::of(&lt)?;
    let pairs = battery_pairs(&scaled, p, &mut sampler)?;

    let max_power = p.max_power.unwrap_or(50);
    let mut worst: f64 = 0.0;
    for z in pairs.iter().flat_map(|(u, v)| [u, v]) {
        let (mut a, mut b) = (z.clone(), z.clone());
        for _ in 0..max_power {
            a = scaled.iterate(&a, 1)?;
            b = base.iterate(&b, 1)?;
            let (na, nb) = (a.norm(), b.norm());
            worst = worst.max((na - nb).abs() / nb.max(1.0));
        }
    }
    let invariant = worst <= NORM_INVARIANCE_TOLERANCE;
    let b = run_battery(&scaled, pairs, p)?;
    let total = b.entries.len();
    Outcome::new(
        json!({
            "lambda": lambda,
            "max_power": max_power,
            "norm_defect": worst,
            "norm_invariant": invariant,
            "pairs": b.entries,
            "found": b.found,
        }),
        invariant && b.found == total,
        format!("relative norm defect {worst:e} up to n = {max_power}, {} of {total} witnesses found", b.found),
    )
}

fn span(system: &System, p: &Params) -> Result<Outcome, CliError> {
    let spec = system.shift_spec().ok_or(translab::Error::NotLinear)?;
    let seeds = require(&p.seeds, "seeds")?
        .iter()
        .map(|s| config::vector(spec, s))
        .collect::<Result<Vec<_>, _>>()?;
    let basis = orbit_span_basis(system, &seeds, p.depth.unwrap_or(8))?;
    let compressed = compressed_operator(system, &basis)?;
    let message = format!(
        "rank {} with invariance defect {:e}",
        basis.rank(),
        compressed.invariance_defect
    );
    Outcome::new(
        json!({ "rank": basis.rank(), "basis": basis, "compressed": compressed }),
        true,
        message,
    )
}

fn gdelta(system: &System, p: &Params) -> Result<Outcome, CliError> {
    let z = config::point(system, &require(&p.z, "z")?)?;
    let x = config::point(system, &require(&p.x, "x")?)?;
    let report = gdelta_check(
        system,
        &z,
        &x,
        p.max_s.unwrap_or(3),
        p.max_n.unwrap_or(10),
        p.max_m.unwrap_or(10_000),
    )?;
    let hits = report.entries.iter().filter(|e| e.m.is_some()).count();
    let message = format!("{hits} of {} (s, n) cells hit", report.entries.len());
    Outcome::new(&report, report.member, message)
}

fn jset(system: &System, p: &Params, mut sampler: SeededSampler) -> Result<Outcome, CliError> {
    let x = config::point(system, &require(&p.x, "x")?)?;
    let y = config::point(system, &require(&p.y, "y")?)?;
    let w = jset_witness(
        system,
        &x,
        &y,
        p.eps.unwrap_or(0.05),
        p.delta.unwrap_or(0.05),
        p.horizon.unwrap_or(1000),
        p.samples.unwrap_or(128),
        &mut sampler,
    )?;
    let message = match &w {
        Some(w) => format!("time {} from a start point at distance {:e}", w.time, w.start_distance),
        None => "no witness up to the horizon".into(),
    };
    let found = w.is_some();
    Outcome::new(json!({ "witness": w }), found, message)
}

fn limit(system: &System, p: &Params) -> Result<Outcome, CliError> {
    let x = config::point(system, &require(&p.x, "x")?)?;
    let y = match &p.y {
        Some(y) => config::point(system, y)?,
        None => x.clone(),
    };
    let w = limit_witness_with_min(
        system,
        &x,
        &y,
        p.eps.unwrap_or(0.05),
        p.horizon.unwrap_or(1000),
        p.min_times.unwrap_or(translab::limits::DEFAULT_MIN_TIMES),
    )?;
    let message = match &w {
        Some(w) => format!("{} times within tolerance", w.times.len()),
        None => "too few times up to the horizon".into(),
    };
    let found = w.is_some();
    Outcome::new(json!({ "witness": w }), found, message)
}

fn orbit(system: &System, p: &Params) -> Result<Outcome, CliError> {
    let x = config::point(system, &require(&p.x, "x")?)?;
    let horizon = p.horizon.unwrap_or(16);
    let points = orbit_segment(system, &x, horizon)?;
    Outcome::new(json!({ "orbit": points }), true, format!("{} points", points.len()))
}
