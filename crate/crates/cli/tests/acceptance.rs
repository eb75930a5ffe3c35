//! Acceptance suite: one line per criterion, non-zero exit on any failure.
//!
//! Run with `cargo test -p translab-cli --test acceptance`.

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde_json::Value;
use translab::constructor::{
    construct_recurrent_point, verify_certificate, CheckKind, NestedBallCertificate, StageSearch, VerifyOptions,
};
use translab::limits::{
    almost_transitivity_scan, gdelta_check, grid_balls, transitivity_scan, Direction, PairSet, ScanOptions,
    Verdict,
};
use translab::shifts::{
    power_system, random_battery, right_inverse_apply, salas_verdict, scale_unimodular, shift_apply,
    witness_battery, LinearForm, ScalarField, ShiftVector, WeightRule, WeightedShiftSpec,
};
use translab::spaces::{apply_iter, enclose_image, sample_ball};
use translab::{Ball, Point, SeededSampler, System};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(
        elapsed < limit,
        format!("{what} took {:.3} s, limit {:.0} s", elapsed.as_secs_f64(), limit.as_secs_f64()),
    )
}

fn constant_spec(value: f64, block_dim: usize, truncation: usize, field: ScalarField) -> WeightedShiftSpec {
    WeightedShiftSpec::new(WeightRule::Constant { value }, block_dim, truncation, field)
}

/// Runs the battery and re-checks every witness by iterating `system` directly.
/// Returns (found, worst start distance, worst end distance).
fn checked_battery(
    system: &System,
    pairs: &[(ShiftVector, ShiftVector)],
    eps_u: f64,
    eps_v: f64,
) -> Result<(usize, f64, f64), String> {
    let form = LinearForm::of(system).map_err(|e| e.to_string())?;
    let spec = &form.spec;
    let witnesses = witness_battery(&form, pairs, eps_u, eps_v, None).map_err(|e| e.to_string())?;
    let (mut found, mut worst_start, mut worst_end) = (0, 0.0f64, 0.0f64);
    for ((u, v), w) in pairs.iter().zip(&witnesses) {
        let Some(w) = w else { continue };
        found += 1;
        let image = apply_iter(system, &w.z.to_point(spec.field), w.time as u64).map_err(|e| e.to_string())?;
        let end = image.distance(&v.to_point(spec.field));
        worst_start = worst_start.max(w.z.distance(u));
        worst_end = worst_end.max(end);
    }
    Ok((found, worst_start, worst_end))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (eps_u, eps_v, horizon, threshold) = (1e-3, 1e-10, 50, 1e6);
    let mut sampler = SeededSampler::new(1);

    let two = constant_spec(2.0, 1, 128, ScalarField::Real);
    let salas = salas_verdict(&two, horizon, threshold).map_err(|e| e.to_string())?;
    // 2^n >= 10^6 first at n = 20
    let expected_crossing = (threshold.log2()).ceil() as usize;
    ensure(salas.satisfied(), "2B: partial products stay below the threshold")?;
    ensure(
        salas.first_crossing == Some(expected_crossing),
        format!("2B: first crossing {:?}, expected {expected_crossing}", salas.first_crossing),
    )?;
    let pairs = random_battery(&two, 20, 4, &mut sampler.next_rng());
    let system = System::weighted_shift(two).map_err(|e| e.to_string())?;
    let (found, worst_start, worst_end) = checked_battery(&system, &pairs, eps_u, eps_v)?;
    ensure(found == 20, format!("2B: {found} of 20 witnesses"))?;
    ensure(worst_start < eps_u, format!("2B: perturbation {worst_start:e}"))?;
    ensure(worst_end <= eps_v, format!("2B: end distance {worst_end:e}"))?;

    let one = constant_spec(1.0, 1, 128, ScalarField::Real);
    let plain = salas_verdict(&one, horizon, threshold).map_err(|e| e.to_string())?;
    ensure(!plain.satisfied(), "plain shift: partial products reached the threshold")?;
    let pairs = random_battery(&one, 20, 4, &mut sampler.next_rng());
    let plain_system = System::weighted_shift(one).map_err(|e| e.to_string())?;
    let (plain_found, _, _) = checked_battery(&plain_system, &pairs, eps_u, eps_v)?;
    ensure(plain_found == 0, format!("plain shift: {plain_found} witnesses found"))?;

    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(1), "criterion")?;
    Ok(format!(
        "2B crossing at n = {expected_crossing}, 20/20 witnesses (max perturbation {worst_start:.3e}, max end distance {worst_end:.3e}); plain shift 0/20 and no crossing; {:.0} ms",
        elapsed.as_secs_f64() * 1e3
    ))
}

/// The certificate shared by criteria 2 and 6.
fn doubling_certificate() -> Result<(NestedBallCertificate, Duration), String> {
    let start = Instant::now();
    let system = System::doubling();
    let b0 = Ball::new(Point::circle(0.3), 0.1).map_err(|e| e.to_string())?;
    let construction = construct_recurrent_point(
        &system,
        &Point::circle(0.0),
        &b0,
        4,
        &StageSearch::new(10_000, 256),
        true,
        &mut SeededSampler::new(0),
    )
    .map_err(|e| e.to_string())?;
    let cert = construction
        .certificate()
        .ok_or_else(|| format!("no certificate: {construction:?}"))?
        .clone();
    Ok((cert, start.elapsed()))
}

fn criterion_2() -> Outcome {
    let (cert, build_time) = doubling_certificate()?;
    let system = System::doubling();
    let start = Instant::now();
    let report = verify_certificate(&system, &cert, &VerifyOptions::default());
    let elapsed = build_time + start.elapsed();

    ensure(report.passed, format!("verification failed: {:?}", report.failures().collect::<Vec<_>>()))?;
    ensure(cert.depth == 4 && cert.stages.len() == 4, "certificate depth is not 4")?;
    let geometric = report
        .checks
        .iter()
        .filter(|c| matches!(c.kind, CheckKind::Bound | CheckKind::Containment | CheckKind::Orbit));
    for c in geometric {
        ensure(c.margin > 0.0, format!("check {} at stage {} has margin {:e}", c.name, c.stage, c.margin))?;
    }
    let mut worst_gap = f64::INFINITY;
    for (i, stage) in cert.stages.iter().enumerate() {
        let n = (i + 1) as i32;
        for ball in std::iter::once(&stage.approach).chain(stage.return_.as_ref()) {
            ensure(ball.radius < 2f64.powi(-n), format!("stage {n}: radius {:e}", ball.radius))?;
        }
        let image = apply_iter(&system, &cert.limit_point, stage.approach.time).map_err(|e| e.to_string())?;
        let d = image.distance(&cert.target);
        let bound = 1.0 / n as f64;
        ensure(d <= bound + 1e-9, format!("stage {n}: d(T^k z, 0) = {d:e} > 1/{n}"))?;
        worst_gap = worst_gap.min(bound - d);
    }
    within(elapsed, Duration::from_secs(10), "construction and verification")?;
    let times: Vec<u64> = cert.stages.iter().map(|s| s.approach.time).collect();
    Ok(format!(
        "{} checks pass, min margin {:.3e}, approach times {times:?}, deepest radius {:.3e}, min slack below 1/n {:.3e}; {:.0} ms",
        report.checks.len(),
        report.min_margin(),
        cert.stages.last().map(|s| s.innermost().radius).unwrap_or(f64::NAN),
        worst_gap,
        elapsed.as_secs_f64() * 1e3
    ))
}

fn criterion_3() -> Outcome {
    let mut lines = Vec::new();
    let mut sampler = SeededSampler::new(3);
    let (eps_u, eps_v) = (1e-3, 1e-10);
    for d in [1, 2] {
        let spec = constant_spec(2.0, d, 64, ScalarField::Complex);
        let base = System::weighted_shift(spec.clone()).map_err(|e| e.to_string())?;
        let variants = [
            ("T^2", power_system(&base, 2)),
            ("T^3", power_system(&base, 3)),
            ("-T", scale_unimodular(&base, Complex64::new(-1.0, 0.0))),
            ("iT", scale_unimodular(&base, Complex64::new(0.0, 1.0))),
        ];
        for (label, system) in variants {
            let system = system.map_err(|e| e.to_string())?;
            let pairs = random_battery(&spec, 20, 4, &mut sampler.next_rng());
            let start = Instant::now();
            let (found, _, worst_end) = checked_battery(&system, &pairs, eps_u, eps_v)?;
            let elapsed = start.elapsed();
            ensure(found == pairs.len(), format!("d = {d}, {label}: {found} of {} witnesses", pairs.len()))?;
            ensure(worst_end <= 1e-10, format!("d = {d}, {label}: end distance {worst_end:e}"))?;
            within(elapsed, Duration::from_secs(1), &format!("d = {d}, {label}"))?;
            lines.push(format!("d={d} {label} {worst_end:.1e}"));
        }
    }
    Ok(format!("20/20 witnesses per battery, max end distance: {}", lines.join(", ")))
}

/// Piecewise formula for the interchange map, kept separate from the library.
fn interchange(x: f64) -> f64 {
    if x <= 0.5 {
        0.5 + 0.5 * (1.0 - (4.0 * x - 1.0).abs())
    } else {
        1.0 - x
    }
}

fn criterion_4() -> Outcome {
    let system = System::interchange();
    // brute-force validation of the map: formula agreement, range, Lipschitz bound 2
    let grid: Vec<f64> = (0..=100_000).map(|i| i as f64 / 100_000.0).collect();
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let lib = apply_iter(&system, &Point::interval(a), 1).map_err(|e| e.to_string())?.coords[0];
        ensure((lib - interchange(a)).abs() <= 1e-15, format!("map disagrees with formula at {a}"))?;
        ensure((0.0..=1.0).contains(&lib), format!("T({a}) = {lib} leaves [0, 1]"))?;
        ensure(
            (interchange(a) - interchange(b)).abs() <= 2.0 * (b - a) + 1e-15,
            format!("Lipschitz bound fails near {a}"),
        )?;
    }

    let sampler = SeededSampler::new(4);
    let scan = transitivity_scan(&system, &PairSet::Grid(1.0 / 16.0), &ScanOptions { horizon: 64, samples: 128 }, &sampler)
        .map_err(|e| e.to_string())?;
    ensure(scan.passed(), format!("T: {} of {} pairs hit", scan.hit_count(), scan.pairs.len()))?;

    let square = power_system(&system, 2).map_err(|e| e.to_string())?;
    let scan2 = transitivity_scan(&square, &PairSet::Grid(1.0 / 16.0), &ScanOptions { horizon: 256, samples: 128 }, &sampler)
        .map_err(|e| e.to_string())?;
    ensure(!scan2.passed(), "T^2 passed the scan")?;
    let (pair, recorded) = scan2
        .failures()
        .filter_map(|p| match p.verdict {
            Verdict::NoHitUpToHorizon { min_distance: Some(d) } => Some((p, d)),
            _ => None,
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or("T^2: no failing pair records a distance")?;
    ensure(recorded >= 0.125, format!("T^2: best recorded pair only stays {recorded} away"))?;

    // independent re-check over a dense grid of the source ball
    let (c, r, target) = (pair.u.center.coords[0], pair.u.radius, pair.v.center.coords[0]);
    let mut oracle_min = f64::INFINITY;
    for i in 0..=4000 {
        let mut x = c - r + 2.0 * r * i as f64 / 4000.0;
        for _ in 0..=256 {
            oracle_min = oracle_min.min((x - target).abs());
            x = interchange(interchange(x));
        }
    }
    ensure(oracle_min >= 0.125, format!("T^2: dense re-check reaches {oracle_min}"))?;
    Ok(format!(
        "T passes {}/{} pairs (max time {:?}); T^2 fails {} pairs, witness U = B({c}, {r}), V = B({target}, {}) keeps distance {recorded:.4} (dense re-check {oracle_min:.4}) up to n = 256",
        scan.hit_count(),
        scan.pairs.len(),
        scan.max_hitting_time(),
        scan2.pairs.len() - scan2.hit_count(),
        pair.v.radius
    ))
}

fn criterion_5() -> Outcome {
    let n = 64;
    let grid = PairSet::Grid(1.0 / 16.0);
    let sampler = SeededSampler::new(5);
    let two_b = System::weighted_shift(constant_spec(2.0, 1, 64, ScalarField::Complex)).map_err(|e| e.to_string())?;
    let catalogue = [
        System::doubling(),
        System::golden_rotation(),
        System::tent(),
        System::interchange(),
        two_b,
    ];
    let mut lines = Vec::new();
    for system in &catalogue {
        let almost = almost_transitivity_scan(system, &grid, &ScanOptions { horizon: n, samples: 128 }, &sampler)
            .map_err(|e| e.to_string())?;
        let strict = transitivity_scan(system, &grid, &ScanOptions { horizon: 4 * n, samples: 128 }, &sampler)
            .map_err(|e| e.to_string())?;
        ensure(almost.passed(), format!("{}: almost scan {}/{}", system.name(), almost.hit_count(), almost.pairs.len()))?;
        ensure(
            strict.passed(),
            format!("{}: almost scan passes but transitive scan at 4N has {}/{}", system.name(), strict.hit_count(), strict.pairs.len()),
        )?;
        let reverse = almost
            .pairs
            .iter()
            .filter(|p| matches!(p.verdict, Verdict::Hit { direction: Direction::Reverse, .. }))
            .count();
        lines.push(format!("{} ({} reverse)", system.name(), reverse));
    }
    let contraction = System::contraction(0.5).map_err(|e| e.to_string())?;
    let almost = almost_transitivity_scan(&contraction, &grid, &ScanOptions { horizon: n, samples: 128 }, &sampler)
        .map_err(|e| e.to_string())?;
    let strict = transitivity_scan(&contraction, &grid, &ScanOptions { horizon: 4 * n, samples: 128 }, &sampler)
        .map_err(|e| e.to_string())?;
    ensure(!almost.passed() && !strict.passed(), "contraction passed a scan")?;
    Ok(format!(
        "almost (N = {n}) and transitive (4N = {}) pass for {}; contraction fails both ({}/{} and {}/{})",
        4 * n,
        lines.join(", "),
        almost.hit_count(),
        almost.pairs.len(),
        strict.hit_count(),
        strict.pairs.len()
    ))
}

fn criterion_6() -> Outcome {
    let rotation = System::golden_rotation();
    let r = gdelta_check(&rotation, &Point::circle(0.0), &Point::circle(0.0), 3, 10, 10_000).map_err(|e| e.to_string())?;
    ensure(r.member, "rotation: z = 0 not in the truncated set")?;

    let (cert, _) = doubling_certificate()?;
    let budget = 10_000;
    let d = gdelta_check(&System::doubling(), &cert.limit_point, &cert.target, 3, 5, budget).map_err(|e| e.to_string())?;
    ensure(d.member, "doubling limit point not in the truncated set")?;
    let latest = d.entries.iter().filter_map(|e| e.m).max().unwrap_or(0);

    let contraction = System::contraction(0.5).map_err(|e| e.to_string())?;
    let c = gdelta_check(&contraction, &Point::interval(0.8), &Point::interval(0.5), 3, 5, budget).map_err(|e| e.to_string())?;
    ensure(!c.member, "contraction: control case passed")?;
    let missing = c.entries.iter().filter(|e| e.m.is_none()).count();
    Ok(format!(
        "rotation member; doubling limit point member (latest witnessing m = {latest}); contraction z = 0.8, x = 0.5 not member ({missing} of {} entries without a hit)",
        c.entries.len()
    ))
}

fn enclosure_suite() -> Result<String, String> {
    let shift = System::weighted_shift(constant_spec(2.0, 2, 8, ScalarField::Complex)).map_err(|e| e.to_string())?;
    let systems = vec![
        System::doubling(),
        System::golden_rotation(),
        System::tent(),
        System::contraction(0.5).map_err(|e| e.to_string())?,
        System::interchange(),
        power_system(&System::doubling(), 2).map_err(|e| e.to_string())?,
        scale_unimodular(&shift, Complex64::new(0.0, 1.0)).map_err(|e| e.to_string())?,
        shift,
    ];
    let mut sampler = SeededSampler::new(7);
    for system in &systems {
        let balls = grid_balls(system, 0.25).map_err(|e| e.to_string())?;
        let mut checked = 0;
        for ball in balls.iter().take(4) {
            let b = Ball::new(ball.center.clone(), 0.05).map_err(|e| e.to_string())?;
            for x in sample_ball(system, &b, 250, &mut sampler).map_err(|e| e.to_string())? {
                for n in [1, 3, 10] {
                    let enclosure = enclose_image(system, &b, n).map_err(|e| e.to_string())?;
                    let image = apply_iter(system, &x, n).map_err(|e| e.to_string())?;
                    let d = enclosure.center.distance(&image);
                    ensure(
                        d <= enclosure.radius + 1e-12,
                        format!("{}: T^{n} leaves its enclosure by {:e}", system.name(), d - enclosure.radius),
                    )?;
                }
                checked += 1;
            }
        }
        ensure(checked >= 1000, format!("{}: only {checked} samples", system.name()))?;
    }
    Ok(format!("enclosures hold for {} systems", systems.len()))
}

fn revalidation_suite() -> Result<String, String> {
    let sampler = SeededSampler::new(8);
    let two_b = System::weighted_shift(constant_spec(2.0, 1, 64, ScalarField::Real)).map_err(|e| e.to_string())?;
    let mut hits = 0;
    for system in [System::doubling(), System::tent(), two_b] {
        let scan = almost_transitivity_scan(&system, &PairSet::Grid(0.125), &ScanOptions { horizon: 64, samples: 64 }, &sampler)
            .map_err(|e| e.to_string())?;
        for p in &scan.pairs {
            if let Verdict::Hit { time, direction, witness, .. } = &p.verdict {
                let (from, to) = match direction {
                    Direction::Forward => (&p.u, &p.v),
                    Direction::Reverse => (&p.v, &p.u),
                };
                ensure(from.contains(witness), format!("{}: witness outside its ball", system.name()))?;
                let image = apply_iter(&system, witness, *time).map_err(|e| e.to_string())?;
                ensure(to.contains(&image), format!("{}: pair {} does not re-validate", system.name(), p.index))?;
                hits += 1;
            }
        }
    }
    Ok(format!("{hits} hits re-validate"))
}

fn round_trip_suite() -> Result<String, String> {
    let mut sampler = SeededSampler::new(9);
    let mut count = 0;
    for (rule, d, field) in [
        (WeightRule::Constant { value: 2.0 }, 1, ScalarField::Real),
        (WeightRule::Constant { value: 2.0 }, 2, ScalarField::Complex),
        (WeightRule::Ratio, 2, ScalarField::Complex),
    ] {
        let spec = WeightedShiftSpec::new(rule, d, 64, field);
        for (u, _) in random_battery(&spec, 20, 6, &mut sampler.next_rng()) {
            let back = ShiftVector::from_point(&spec, &u.to_point(field)).map_err(|e| e.to_string())?;
            ensure(back == u, "point conversion is not exact")?;
            for n in [1, 5, 20] {
                let mut x = right_inverse_apply(&spec, &u, n).map_err(|e| e.to_string())?;
                for _ in 0..n {
                    x = shift_apply(&spec, &x).map_err(|e| e.to_string())?;
                }
                let err = x.distance(&u);
                ensure(err <= 1e-12 * u.norm().max(1.0), format!("T^{n} R^{n} u misses u by {err:e}"))?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} identities T^n R^n u = u"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Report bytes with the wall-time line dropped.
fn replay(config: &str, jobs: &str, out: &Path) -> Result<(String, Vec<u8>), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_translab"))
        .args(["run", "--config"])
        .arg(configs().join(format!("{config}.toml")))
        .args(["--jobs", jobs, "--out"])
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?
        .status;
    ensure(matches!(status.code(), Some(0 | 1)), format!("{config}: exit {status}"))?;
    let mut report = None;
    let mut artifacts = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(out).map_err(|e| e.to_string())?.flatten().map(|e| e.path()).collect();
    entries.sort();
    for path in entries {
        let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        if name.ends_with(".json") && name.matches('.').count() == 2 && !name.contains("certificate") {
            let text = String::from_utf8(bytes).map_err(|e| e.to_string())?;
            report = Some(text.lines().filter(|l| !l.contains("\"wall_time_ms\"")).collect::<Vec<_>>().join("\n"));
        } else {
            artifacts.extend(bytes);
        }
        std::fs::remove_file(&path).map_err(|e| e.to_string())?;
    }
    Ok((report.ok_or(format!("{config}: no report"))?, artifacts))
}

fn determinism_suite() -> Result<String, String> {
    let out = std::env::temp_dir().join(format!("translab-acceptance-{}", std::process::id()));
    let names = ["doubling_scan", "interchange_square", "doubling_recurrent", "shift_2b_witness", "rotation_jset"];
    for config in names {
        std::fs::create_dir_all(&out).map_err(|e| e.to_string())?;
        let a = replay(config, "1", &out)?;
        let b = replay(config, "8", &out)?;
        let c = replay(config, "8", &out)?;
        ensure(a == b, format!("{config}: --jobs 1 and --jobs 8 differ"))?;
        ensure(b == c, format!("{config}: repeated runs differ"))?;

        // the config echo alone reproduces the result
        let report: Value = serde_json::from_str(&a.0).map_err(|e| e.to_string())?;
        let echo: translab_cli::config::Config =
            serde_json::from_value(report["config"].clone()).map_err(|e| e.to_string())?;
        let op = echo.operation.ok_or("echo lost the operation")?;
        let (again, _) = translab_cli::run_config(&echo, op, &configs()).map_err(|e| e.to_string())?;
        ensure(again.result == report["result"], format!("{config}: echo replay differs"))?;
    }
    let _ = std::fs::remove_dir_all(&out);
    Ok(format!("{} configs replay byte-identically", names.len()))
}

fn criterion_7() -> Outcome {
    let parts = [enclosure_suite()?, revalidation_suite()?, round_trip_suite()?, determinism_suite()?];
    Ok(parts.join("; "))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("weighted shift anchor", criterion_1),
        ("recurrent point construction", criterion_2),
        ("powers and unimodular multiples", criterion_3),
        ("non-transitive square", criterion_4),
        ("almost transitivity", criterion_5),
        ("truncated G-delta membership", criterion_6),
        ("invariant suites", criterion_7),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|payload| {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {} [{name}]: PASS: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} [{name}]: FAIL: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
