//! Drives sweep, certification, oracle and Kitaev checks for one model.

use std::time::Instant;

use lsbd_core::certify::{self, check_generator_bounds, check_series_majorant, solve_majorant};
use lsbd_core::kitaev::{self, KitaevModel, RestrictedModel};
use lsbd_core::lie_schwinger::{sweep, BlockDiagState};
use lsbd_core::oracle;
use lsbd_core::par::{self, Parallelism};
use lsbd_core::{ChainModel, Error, SeriesControls};

use crate::report::{Checks, ControlsEcho, ErrorInfo, KitaevSection, ModelEcho, ModelKind, OracleMode, RunReport, RunStatus, Timings, REPORT_VERSION};
use crate::spec::{LoadedModel, ModelSpecFile};

/// Largest `M^N` the oracle runs on in `auto` mode.
pub const AUTO_ORACLE_DIM: usize = 1024;

/// Tolerances for the oracle agreement flag.
const ORACLE_SPECTRUM_TOL: f64 = 1e-9;
const ORACLE_GAP_TOL: f64 = 1e-8;

/// Threshold for the Kitaev boundary gap check.
pub const KITAEV_GAP: f64 = 1.0;

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    pub controls: SeriesControls,
    pub oracle: OracleMode,
    pub timings: bool,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn oracle_allowed(mode: OracleMode, dim: Option<usize>) -> bool {
    match mode {
        OracleMode::Off => false,
        OracleMode::Force => true,
        OracleMode::Auto => dim.is_some_and(|d| d <= AUTO_ORACLE_DIM),
    }
}

struct Outcome {
    steps: Vec<lsbd_core::StepDiagnostics>,
    failed_step: Option<lsbd_core::StepDiagnostics>,
    certificate: Option<certify::GapReport>,
    checks: Option<Checks>,
    timings: Timings,
    error: Option<Error>,
}

fn series_checks(state: &BlockDiagState, model: &ChainModel, jmax: usize) -> (bool, bool, f64) {
    let mut majorant_ok = true;
    let mut generator_ok = true;
    let mut min_gap = f64::INFINITY;
    for d in state.diagnostics() {
        if let Some(g) = d.gap {
            min_gap = min_gap.min(g);
        }
        generator_ok &= check_generator_bounds(d, model.t());
        if let Some(v) = d.input_norm.filter(|v| *v > 0.0) {
            majorant_ok &= solve_majorant(v, jmax.max(d.v_norms.len()))
                .map(|p| check_series_majorant(d, &p))
                .unwrap_or(false);
        }
    }
    (majorant_ok, generator_ok, min_gap)
}

fn run_chain(model: &ChainModel, cfg: &RunConfig) -> Outcome {
    let ctl = cfg.controls;
    let started = Instant::now();
    let swept = sweep(model, &ctl);
    let sweep_ms = ms(started);
    let mut timings = Timings {
        sweep_ms,
        certify_ms: 0.0,
        oracle_ms: 0.0,
    };
    let state = match swept {
        Ok(s) => s,
        Err(f) => {
            return Outcome {
                steps: f.state.diagnostics().iter().cloned().chain([f.failed.clone()]).collect(),
                failed_step: Some(f.failed),
                certificate: None,
                checks: None,
                timings,
                error: Some(f.error),
            }
        }
    };
    let steps = state.diagnostics().to_vec();
    let started = Instant::now();
    let cert = certify::certify(&state, model, ctl.tol_od);
    timings.certify_ms = ms(started);
    let mut cert = match cert {
        Ok(c) => c,
        Err(e) => {
            return Outcome {
                steps,
                failed_step: None,
                certificate: None,
                checks: None,
                timings,
                error: Some(e),
            }
        }
    };
    let (majorant_ok, generator_bounds_ok, min_step_gap) = series_checks(&state, model, ctl.jmax);
    let mut error = None;
    let mut oracle_ok = None;
    if oracle_allowed(cfg.oracle, model.full_dim()) {
        let started = Instant::now();
        match oracle::compare(&state, model) {
            Ok(cmp) => {
                oracle_ok = Some(
                    cmp.spectrum_distance <= ORACLE_SPECTRUM_TOL
                        && cmp.blockwise_match
                        && (cmp.gap_ed - cert.gap).abs() <= ORACLE_GAP_TOL,
                );
                cert.oracle = Some(cmp);
            }
            Err(e) => error = Some(e),
        }
        timings.oracle_ms = ms(started);
    }
    Outcome {
        steps,
        failed_step: None,
        checks: Some(Checks {
            ledger_ok: cert.ledger_ok(),
            min_step_gap,
            majorant_ok,
            generator_bounds_ok,
            oracle_ok,
        }),
        certificate: Some(cert),
        timings,
        error,
    }
}

fn kitaev_section(model: &KitaevModel, restricted: Option<&RestrictedModel>, cfg: &RunConfig) -> Result<KitaevSection, Error> {
    let parts = kitaev::regroup_perturbation(model)?;
    let full_dim = 1usize.checked_shl(model.n as u32);
    let (doubling, boundary) = if oracle_allowed(cfg.oracle, full_dim) {
        (
            Some(kitaev::doubling_report(model)?),
            Some(kitaev::boundary_check(model, KITAEV_GAP)?),
        )
    } else {
        (None, None)
    };
    Ok(KitaevSection {
        fermion_sites: model.n,
        energy_offset: restricted.map(|r| r.energy_offset).unwrap_or(-((model.n - 1) as f64)),
        ground_energy: None,
        bulk_terms: parts.bulk.len(),
        boundary_terms: parts.boundary.len(),
        doubling,
        boundary,
    })
}

fn controls_echo(cfg: &RunConfig) -> ControlsEcho {
    let c = cfg.controls;
    ControlsEcho {
        jmax: c.jmax,
        tol_series: c.tol_series,
        tol_od: c.tol_od,
        gap_min: c.gap_min,
        tol_herm: c.tol_herm,
        oracle: cfg.oracle,
    }
}

fn status(error: Option<&Error>) -> RunStatus {
    RunStatus {
        ok: error.is_none(),
        exit_code: error.map(Error::exit_code).unwrap_or(0),
        error: error.map(ErrorInfo::from),
    }
}

/// Report for a model that could not even be set up.
fn setup_failure(echo: ModelEcho, cfg: &RunConfig, error: &Error) -> RunReport {
    RunReport {
        version: REPORT_VERSION,
        model: echo,
        controls: controls_echo(cfg),
        steps: Vec::new(),
        failed_step: None,
        certificate: None,
        checks: None,
        kitaev: None,
        timings: None,
        status: status(Some(error)),
    }
}

/// Runs one model. Failures are recorded in the report, never returned.
pub fn run(spec: &ModelSpecFile, model: &LoadedModel, cfg: &RunConfig) -> RunReport {
    let prng = spec.prng();
    let (kind, restricted, chain) = match model {
        LoadedModel::Chain(m) => (ModelKind::Chain, None, Ok(m.clone())),
        LoadedModel::Kitaev(k) => {
            let r = kitaev::restrict(k);
            let chain = r.as_ref().map(|r| r.chain.clone()).map_err(Clone::clone);
            (ModelKind::Kitaev, r.ok(), chain)
        }
    };
    let mut echo_spec = spec.clone();
    match (model, echo_spec.kitaev.as_mut()) {
        (LoadedModel::Kitaev(k), Some(ks)) => ks.beta = k.beta,
        _ => echo_spec.t = Some(model.coupling()),
    }
    let echo = |n: usize, site_dim: usize, kbar: usize| ModelEcho {
        kind,
        n,
        site_dim,
        t: model.coupling(),
        kbar,
        prng: prng.clone(),
        spec: echo_spec.clone(),
    };
    let chain = match chain {
        Ok(c) => c,
        Err(e) => {
            let n = match model {
                LoadedModel::Kitaev(k) => k.n,
                LoadedModel::Chain(m) => m.n(),
            };
            return setup_failure(echo(n, 2, 0), cfg, &e);
        }
    };
    let out = run_chain(&chain, cfg);
    let mut error = out.error;
    let kitaev = match model {
        LoadedModel::Kitaev(k) => match kitaev_section(k, restricted.as_ref(), cfg) {
            Ok(mut sec) => {
                sec.ground_energy = out.certificate.as_ref().map(|c| c.ground_energy + sec.energy_offset);
                Some(sec)
            }
            Err(e) => {
                error.get_or_insert(e);
                None
            }
        },
        LoadedModel::Chain(_) => None,
    };
    RunReport {
        version: REPORT_VERSION,
        model: echo(chain.n(), chain.site_dim(), chain.kbar()),
        controls: controls_echo(cfg),
        steps: out.steps,
        failed_step: out.failed_step,
        certificate: out.certificate,
        checks: out.checks,
        kitaev,
        timings: cfg.timings.then_some(out.timings),
        status: status(error.as_ref()),
    }
}

/// One report per coupling, computed in parallel, in input order.
pub fn run_grid(spec: &ModelSpecFile, model: &LoadedModel, ts: &[f64], cfg: &RunConfig) -> Vec<RunReport> {
    let inner = RunConfig {
        controls: cfg.controls.with_parallelism(Parallelism::Sequential),
        ..cfg.clone()
    };
    par::map(cfg.controls.parallelism, ts, |&t| run(spec, &model.with_coupling(t), &inner))
}
