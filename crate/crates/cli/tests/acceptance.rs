//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use lsbd_cli::RunReport;
use lsbd_core::certify::{
    certify, check_generator_bounds, check_ledger, check_series_majorant, majorant_g, majorant_root,
    projector_inequalities, solve_majorant, GapReport,
};
use lsbd_core::chain::{conjugate_exact, Interval, LocalOperator};
use lsbd_core::kitaev::{build_h_kitaev, doubling_report, random_bulk_model, restrict, DModeAlgebra};
use lsbd_core::lie_schwinger::{assemble_full, sweep, sweep_with, BlockDiagState, SeriesControls};
use lsbd_core::linalg::{self, eigvalsh};
use lsbd_core::model::{random_model, random_unitary, ChainModel, RandomModelSpec};
use lsbd_core::oracle::{self, OracleComparison};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 20;

type Check<'a> = Box<dyn Fn() -> Result<String, String> + 'a>;

struct Run {
    n: usize,
    t: f64,
    seed: u64,
    state: BlockDiagState,
    report: GapReport,
    oracle: OracleComparison,
}

/// The random nearest-neighbour suite shared by several criteria.
fn suite() -> (Vec<Run>, Duration) {
    let start = Instant::now();
    let mut runs = Vec::new();
    for n in 3..=6 {
        for t in [1e-3, 1e-2] {
            for seed in 0..SEEDS {
                let model = random_model(&RandomModelSpec::nearest_neighbor(n, t, seed)).unwrap();
                let state = sweep(&model, &SeriesControls::default()).unwrap_or_else(|f| panic!("n={n} t={t} seed={seed}: {}", f.error));
                let report = certify(&state, &model, 1e-8).unwrap();
                let oracle = oracle::compare(&state, &model).unwrap();
                runs.push(Run { n, t, seed, state, report, oracle });
            }
        }
    }
    (runs, start.elapsed())
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_lsbd")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn ac1() -> Result<String, String> {
    let start = Instant::now();
    let out = Command::new(bin())
        .arg("--config")
        .arg(configs().join("demo.json"))
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if !out.status.success() {
        return Err(format!("exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    let report: RunReport = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let cert = report.certificate.ok_or("no certificate")?;
    let oracle = cert.oracle.as_ref().ok_or("no oracle comparison")?;
    let e0 = 1.0 - 1.01f64.sqrt();
    let gap = 1.01f64.sqrt() - 0.1;
    let errs = [
        (cert.ground_energy - e0).abs(),
        (cert.gap - gap).abs(),
        (oracle.ground_energy_ed - e0).abs(),
        (oracle.gap_ed - gap).abs(),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    if worst > 1e-8 || elapsed >= Duration::from_secs(1) {
        return Err(format!("max error {worst:e}, runtime {elapsed:?}"));
    }
    Ok(format!("E0={:.12} gap={:.12} max error {worst:.1e} in {elapsed:.2?}", cert.ground_energy, cert.gap))
}

fn ac2(runs: &[Run], elapsed: Duration) -> Result<String, String> {
    let worst = runs.iter().map(|r| r.oracle.spectrum_distance).fold(0.0, f64::max);
    if worst > 1e-9 || elapsed >= Duration::from_secs(120) {
        return Err(format!("max spectrum distance {worst:e}, runtime {elapsed:?}"));
    }
    Ok(format!("{} models, max spectrum distance {worst:.1e}, suite {elapsed:.2?}", runs.len()))
}

fn ac3(runs: &[Run]) -> Result<String, String> {
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for r in runs.iter().filter(|r| r.t == 1e-3) {
        for e in check_ledger(&r.state, r.t) {
            checked += 1;
            worst = worst.max(e.norm / e.bound);
            if !e.ok {
                return Err(format!("n={} seed={} {} norm {:e} > {:e}", r.n, r.seed, e.interval, e.norm, e.bound));
            }
        }
    }
    Ok(format!("{checked} potentials, worst norm/bound {worst:.3}"))
}

fn ac4(runs: &[Run]) -> Result<String, String> {
    let mut min_gap = f64::INFINITY;
    let mut worst: f64 = 0.0;
    for r in runs {
        let c = &r.report;
        let diff = (c.gap - r.oracle.gap_ed).abs();
        if !c.unique_ground || r.oracle.ground_degeneracy != 1 || c.gap < 0.5 || diff > 1e-8 {
            return Err(format!("n={} t={} seed={}: gap {} vs ED {}", r.n, r.t, r.seed, c.gap, r.oracle.gap_ed));
        }
        min_gap = min_gap.min(c.gap);
        worst = worst.max(diff);
    }
    Ok(format!("min certified gap {min_gap:.4}, max |gap − gap_ED| {worst:.1e}"))
}

fn ac5(runs: &[Run]) -> Result<String, String> {
    let mut min_gap = f64::INFINITY;
    let mut steps = 0;
    for r in runs.iter().filter(|r| r.t == 1e-3) {
        for d in r.state.diagnostics() {
            steps += 1;
            let g = d.gap.ok_or("step without gap")?;
            if g < 0.5 {
                return Err(format!("n={} seed={} step {}: gap {g}", r.n, r.seed, d.step()));
            }
            min_gap = min_gap.min(g);
        }
    }
    // the sweep rejects any step whose vacuum is not the local ground state
    Ok(format!("{steps} steps, min local gap {min_gap:.4}"))
}

fn full_op(state: &BlockDiagState, m: &ChainModel) -> LocalOperator {
    LocalOperator::hermitian(Interval::whole(m.n()), m.site_dim(), assemble_full(state, m).unwrap()).unwrap()
}

fn ac6() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    let mut steps = 0;
    for n in 2..=5 {
        for (t, seed) in [(1e-3, 0), (1e-2, 1), (-1e-2, 2)] {
            let model = random_model(&RandomModelSpec::nearest_neighbor(n, t, seed)).unwrap();
            sweep_with(&model, &SeriesControls::default(), |before, after| {
                let k = full_op(before, &model);
                let direct = match after.last_generator() {
                    None => k.into_matrix(),
                    Some(s) => conjugate_exact(&k, &s.embed(Interval::whole(n)).unwrap()).unwrap().into_matrix(),
                };
                let pieces = assemble_full(after, &model).unwrap();
                worst = worst.max(linalg::max_abs(&(direct - pieces)));
                steps += 1;
            })
            .map_err(|f| f.error.to_string())?;
        }
    }
    if worst > 1e-9 {
        return Err(format!("max entrywise deviation {worst:e}"));
    }
    Ok(format!("{steps} steps, max entrywise deviation {worst:.1e}"))
}

fn ac7(runs: &[Run]) -> Result<String, String> {
    let mut psd = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let omega = random_unitary(&mut rng, 2).column(0).into_owned();
        for n in 1..=6 {
            for r in 1..=3 {
                let c = projector_inequalities(n, &omega, r).map_err(|e| e.to_string())?;
                if !c.ok {
                    return Err(format!("seed={seed} n={n} r={r}: {c:?}"));
                }
                psd += 1;
            }
        }
    }
    let a = majorant_root().map_err(|e| e.to_string())?;
    let residual = majorant_g(a).abs();
    if residual > 1e-12 || (a - 0.0233).abs() > 5e-5 {
        return Err(format!("majorant root {a} residual {residual:e}"));
    }
    let mut series = 0;
    for r in runs {
        for d in r.state.diagnostics() {
            if let Some(v) = d.input_norm.filter(|v| *v > 0.0) {
                let params = solve_majorant(v, SeriesControls::default().jmax).map_err(|e| e.to_string())?;
                if !check_series_majorant(d, &params) {
                    return Err(format!("majorant exceeded at n={} seed={} step {}", r.n, r.seed, d.step()));
                }
                series += 1;
            }
            if !check_generator_bounds(d, r.t) {
                return Err(format!("generator bound failed at n={} seed={} step {}", r.n, r.seed, d.step()));
            }
        }
    }
    Ok(format!("{psd} PSD checks, a={a:.14} residual {residual:.1e}, {series} series within B_j"))
}

fn ac8() -> Result<String, String> {
    for n in 2..=8usize {
        let spectrum = eigvalsh(&build_h_kitaev(n).map_err(|e| e.to_string())?);
        let mut expect = Vec::new();
        let mut binom = 1usize;
        for m in 0..n {
            expect.extend(std::iter::repeat_n(-((n - 1) as f64) + 2.0 * m as f64, 2 * binom));
            binom = binom * (n - 1 - m) / (m + 1);
        }
        let worst = spectrum.iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if spectrum.len() != expect.len() || worst > 1e-9 {
            return Err(format!("N={n}: spectrum deviates by {worst:e}"));
        }
    }
    let mut car: f64 = 0.0;
    for n in 2..=10 {
        let alg = DModeAlgebra::new(n).map_err(|e| e.to_string())?;
        car = car.max(alg.fermions().car_defect()).max(alg.car_defect()).max(alg.inversion_defect());
    }
    if car > 1e-12 {
        return Err(format!("CAR/inversion defect {car:e}"));
    }
    let mut min_gap = f64::INFINITY;
    for n in 4..=6 {
        for seed in 0..3 {
            let model = random_bulk_model(n, 0.01, 1, seed).map_err(|e| e.to_string())?;
            let dbl = doubling_report(&model).map_err(|e| e.to_string())?;
            if !dbl.ok {
                return Err(format!("doubling failed at N={n} seed={seed}: {dbl:?}"));
            }
            let r = restrict(&model).map_err(|e| e.to_string())?;
            let state = sweep(&r.chain, &SeriesControls::default()).map_err(|f| f.error.to_string())?;
            let cert = certify(&state, &r.chain, 1e-8).map_err(|e| e.to_string())?;
            if cert.gap < 1.0 {
                return Err(format!("restricted gap {} at N={n} seed={seed}", cert.gap));
            }
            min_gap = min_gap.min(cert.gap);
        }
    }
    Ok(format!("spectra N=2..8 exact, CAR/inversion defect {car:.1e}, min restricted gap {min_gap:.4}"))
}

fn ac9() -> Result<String, String> {
    let bad = Command::new(bin())
        .arg("--config")
        .arg(configs().join("bad_onsite_gap.json"))
        .output()
        .map_err(|e| e.to_string())?;
    let stderr = String::from_utf8_lossy(&bad.stderr);
    if bad.status.code() != Some(2) || !stderr.contains("on-site gap") || !bad.stdout.is_empty() {
        return Err(format!("bad on-site gap: exit {:?}, stderr {stderr}", bad.status.code()));
    }
    let out = Command::new(bin())
        .arg("--config")
        .arg(configs().join("demo.json"))
        .args(["--t", "0.5"])
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.code() != Some(3) {
        return Err(format!("t=0.5 exited with {:?}", out.status.code()));
    }
    let report: RunReport = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let failed = report.failed_step.ok_or("report has no failed step")?;
    let err = report.status.error.ok_or("report has no error")?;
    if err.kind != "series-not-converged" || err.step != Some(failed.step()) {
        return Err(format!("unexpected error {err:?}"));
    }
    Ok(format!("on-site gap 0.5 rejected (exit 2); t=0.5 exit 3 at step {}", failed.step()))
}

fn main() -> ExitCode {
    let (runs, elapsed) = suite();
    let criteria: Vec<(&str, Check)> = vec![
        ("AC-1 closed-form anchor", Box::new(ac1)),
        ("AC-2 unitary invariance", Box::new(|| ac2(&runs, elapsed))),
        ("AC-3 norm ledger", Box::new(|| ac3(&runs))),
        ("AC-4 gap claims", Box::new(|| ac4(&runs))),
        ("AC-5 per-step gaps", Box::new(|| ac5(&runs))),
        ("AC-6 piecewise conjugation identity", Box::new(ac6)),
        ("AC-7 projector, majorant and generator bounds", Box::new(|| ac7(&runs))),
        ("AC-8 Kitaev chain", Box::new(ac8)),
        ("AC-9 robust failure", Box::new(ac9)),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
