//! Quantitative checks along and after the sweep: the norm-decay ledger,
//! local and final gaps, the majorant sequence that dominates the series, and
//! the projector inequalities the gap estimates rest on.

use serde::{Deserialize, Serialize};

use crate::chain::{build_projectors, Interval, LocalOperator, StepIndex};
use crate::error::{Error, Result};
use crate::lie_schwinger::{assemble_full, build_g, BlockDiagState, StepDiagnostics, DENSE_GUARD};
use crate::linalg::{self, CMat, CVec};
use crate::model::ChainModel;
use crate::oracle::OracleComparison;
use crate::par::{self, Parallelism};

/// Relative slack on every bound comparison.
pub const BOUND_SLACK: f64 = 1e-9;

/// `8 |t|^((r−1)/3) / (r+1)²` for a potential on `r + 1` sites.
pub fn ledger_bound(r: usize, t: f64) -> f64 {
    8.0 * t.abs().powf((r as f64 - 1.0) / 3.0) / ((r + 1) * (r + 1)) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormLedgerEntry {
    pub step: StepIndex,
    pub interval: Interval,
    pub norm: f64,
    pub bound: f64,
    pub ok: bool,
}

/// One entry per stored potential of length at least two sites.
pub fn check_ledger(state: &BlockDiagState, t: f64) -> Vec<NormLedgerEntry> {
    check_ledger_with(state, t, Parallelism::default())
}

pub fn check_ledger_with(state: &BlockDiagState, t: f64, parallelism: Parallelism) -> Vec<NormLedgerEntry> {
    let items: Vec<_> = state.potentials().iter().filter(|(sup, _)| sup.k >= 1).collect();
    par::map(parallelism, &items, |(sup, op)| {
        let norm = op.norm().unwrap_or(f64::INFINITY);
        let bound = ledger_bound(sup.k, t);
        NormLedgerEntry {
            step: state.step(),
            interval: **sup,
            norm,
            bound,
            ok: norm <= bound * (1.0 + BOUND_SLACK),
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepGap {
    pub step: StepIndex,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// Vacuum expectation of the swept Hamiltonian.
    pub ground_energy: f64,
    /// Lowest energy of the complement of the vacuum minus `ground_energy`.
    pub gap: f64,
    pub unique_ground: bool,
    /// `‖P⁺ K̃ P⁻‖` on the whole chain.
    pub block_residual: f64,
    pub ledger: Vec<NormLedgerEntry>,
    pub per_step_gaps: Vec<StepGap>,
    pub oracle: Option<OracleComparison>,
}

impl GapReport {
    pub fn ledger_ok(&self) -> bool {
        self.ledger.iter().all(|e| e.ok)
    }
}

/// Reads ground energy and gap off the block-diagonal final Hamiltonian.
pub fn certify(state: &BlockDiagState, model: &ChainModel, tol_od: f64) -> Result<GapReport> {
    if !state.is_complete() {
        return Err(Error::CertificationFailed(format!(
            "sweep stopped at {}, not at {}",
            state.step(),
            StepIndex::terminal(model.n())
        )));
    }
    let full = assemble_full(state, model)?;
    let pair = build_projectors(Interval::whole(model.n()), model.omega())?;
    let block_residual = pair.off_diagonal_norm(&full);
    if block_residual > tol_od {
        return Err(Error::CertificationFailed(format!(
            "final Hamiltonian is not block-diagonal: ‖P⁺K̃P⁻‖ = {block_residual:e} > {tol_od:e}"
        )));
    }
    let ground_energy = pair.vacuum_expectation(&full);
    let plus = linalg::eigvalsh(&pair.restrict_plus(&full));
    let gap = plus[0] - ground_energy;
    let per_step_gaps = state
        .diagnostics()
        .iter()
        .filter_map(|d| d.gap.map(|gap| StepGap { step: d.step(), gap }))
        .collect();
    Ok(GapReport {
        ground_energy,
        gap,
        unique_ground: gap > 0.0,
        block_residual,
        ledger: check_ledger(state, model.t()),
        per_step_gaps,
        oracle: None,
    })
}

/// Bracket width and residual targeted by the majorant bisection.
const ROOT_TOL: f64 = 1e-12;

/// `g(a) = (e^{8a} − 8a − 1)/a + e^{8a} − 2`.
pub fn majorant_g(a: f64) -> f64 {
    let e = (8.0 * a).exp();
    // exp_m1 keeps the first quotient accurate for small a
    ((8.0 * a).exp_m1() - 8.0 * a) / a + e - 2.0
}

/// Positive root of [`majorant_g`] on `(0, 1]`.
pub fn majorant_root() -> Result<f64> {
    let (mut lo, mut hi) = (1e-6, 1.0);
    if majorant_g(lo) >= 0.0 || majorant_g(hi) <= 0.0 {
        return Err(Error::Numeric("majorant equation has no sign change on (0, 1]".into()));
    }
    // stop once both the bracket and the residual are below tolerance
    loop {
        let mid = 0.5 * (lo + hi);
        let g = majorant_g(mid);
        if (hi - lo <= ROOT_TOL && g.abs() <= ROOT_TOL) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorantParams {
    pub a: f64,
    pub v_norm: f64,
    /// `a / (4‖V‖)`.
    pub t0_bound: f64,
    /// `a / 8`, the radius valid for every `‖V‖ ≤ 2`.
    pub t0_universal: f64,
    /// `B_1..=B_jmax` (index 0 holds `B_1`).
    pub b: Vec<f64>,
}

impl MajorantParams {
    /// `f(x) = (a/2)(1 − √(1 − 4‖V‖x/a))`.
    pub fn f(&self, x: f64) -> f64 {
        0.5 * self.a * (1.0 - (1.0 - 4.0 * self.v_norm * x / self.a).sqrt())
    }

    /// `B_j` for `j ≥ 1`.
    pub fn b_j(&self, j: usize) -> Option<f64> {
        self.b.get(j.checked_sub(1)?).copied()
    }
}

/// `B_1 = ‖V‖`, `B_j = (1/a) Σ_{m=1}^{j−1} B_{j−m} B_m`.
pub fn solve_majorant(v_norm: f64, jmax: usize) -> Result<MajorantParams> {
    if !(v_norm > 0.0 && v_norm.is_finite()) {
        return Err(Error::Numeric(format!("majorant needs ‖V‖ > 0, got {v_norm}")));
    }
    let a = majorant_root()?;
    let mut b = vec![v_norm];
    for j in 2..=jmax.max(1) {
        let s: f64 = (1..j).map(|m| b[j - m - 1] * b[m - 1]).sum();
        b.push(s / a);
    }
    Ok(MajorantParams {
        a,
        v_norm,
        t0_bound: a / (4.0 * v_norm),
        t0_universal: a / 8.0,
        b,
    })
}

/// `‖(V)_j‖ ≤ B_j` for every recorded order.
pub fn check_series_majorant(diag: &StepDiagnostics, params: &MajorantParams) -> bool {
    diag.v_norms.iter().enumerate().all(|(i, &v)| match params.b_j(i + 1) {
        Some(b) => v <= b * (1.0 + BOUND_SLACK),
        None => false,
    })
}

/// `‖(S)_j‖ ≤ 4‖(V)_j‖` per order and `‖S‖ ≤ 4 Σ_j |t|^j ‖(V)_j‖`, when the
/// local gap is at least one half. Steps with a smaller gap are vacuous.
pub fn check_generator_bounds(diag: &StepDiagnostics, t: f64) -> bool {
    if diag.gap.is_none_or(|g| g < 0.5) {
        return true;
    }
    let per_order = diag
        .v_norms
        .iter()
        .zip(&diag.s_norms)
        .all(|(v, s)| *s <= 4.0 * v * (1.0 + BOUND_SLACK) + f64::EPSILON);
    let majorant: f64 = diag
        .v_norms
        .iter()
        .enumerate()
        .map(|(i, v)| t.abs().powi(i as i32 + 1) * v)
        .sum();
    let total = diag.s_norm.is_none_or(|s| s <= 4.0 * majorant * (1.0 + BOUND_SLACK) + f64::EPSILON);
    per_order && total
}

/// Smallest eigenvalues of the differences in the two projector inequalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectorCheck {
    /// `min spec(Σ_i P⊥_i − (1 − ⊗_i P_i))` over the chain.
    pub product_min: f64,
    /// Minimum over all windows `1 ≤ l ≤ L ≤ n − r` of
    /// `min spec((r+1) Σ_{i=l}^{L+r} P⊥_i − Σ_{i=l}^{L} P⁺_{I_{r;i}})`.
    pub window_min: f64,
    pub ok: bool,
}

/// PSD tolerance for the projector inequalities.
pub const PSD_TOL: f64 = 1e-10;

pub fn projector_inequalities(n: usize, omega: &CVec, r: usize) -> Result<ProjectorCheck> {
    let m = omega.len();
    let dim = m.checked_pow(n as u32).unwrap_or(usize::MAX);
    if dim > DENSE_GUARD {
        return Err(Error::TooLarge { dim, guard: DENSE_GUARD });
    }
    if n == 0 {
        return Err(Error::Validation("projector inequalities need n ≥ 1".into()));
    }
    let whole = Interval::whole(n);
    let perp_site = {
        let pair = build_projectors(Interval::new(0, 1), omega)?;
        pair.p_plus.clone()
    };
    let perp: Vec<CMat> = (1..=n)
        .map(|i| {
            let op = LocalOperator::hermitian(Interval::new(0, i), m, perp_site.matrix().clone())?;
            Ok(op.embed(whole)?.into_matrix())
        })
        .collect::<Result<_>>()?;
    let plus = |iv: Interval| -> Result<CMat> { Ok(build_projectors(iv, omega)?.p_plus.embed(whole)?.into_matrix()) };

    let sum_perp: CMat = perp.iter().fold(CMat::zeros(dim, dim), |acc, p| acc + p);
    let product_min = linalg::eigvalsh(&(&sum_perp - plus(whole)?))[0];

    let mut window_min = f64::INFINITY;
    if r < n {
        let plus_r: Vec<CMat> = (1..=n - r).map(|i| plus(Interval::new(r, i))).collect::<Result<_>>()?;
        for l in 1..=n - r {
            for big_l in l..=n - r {
                let lhs: CMat = (l..=big_l + r).fold(CMat::zeros(dim, dim), |acc, i| acc + &perp[i - 1]);
                let rhs: CMat = (l..=big_l).fold(CMat::zeros(dim, dim), |acc, i| acc + &plus_r[i - 1]);
                let diff = lhs * linalg::c((r + 1) as f64) - rhs;
                window_min = window_min.min(linalg::eigvalsh(&diff)[0]);
            }
        }
    }
    Ok(ProjectorCheck {
        product_min,
        window_min,
        ok: product_min >= -PSD_TOL && window_min >= -PSD_TOL,
    })
}

/// `(lhs, rhs)` of the local gap estimate on `interval` for `state`: `lhs` is
/// the lowest eigenvalue on range(P⁺) of `G − t Σ_J ⟨V_J⟩` and `rhs` is
/// `1 − 8|t| − 16|t| Σ_{l=3}^{k} l |t|^((l−2)/3) / l²`.
pub fn local_gap_estimate(state: &BlockDiagState, model: &ChainModel, interval: Interval) -> Result<(f64, f64)> {
    let g = build_g(state, model, interval)?;
    let pair = build_projectors(interval, model.omega())?;
    let t = model.t();
    let mut shift = 0.0;
    for (sup, v) in state.potentials() {
        if interval.contains(sup) && *sup != interval {
            let sub = build_projectors(*sup, model.omega())?;
            shift += t * sub.vacuum_expectation(v.matrix());
        }
    }
    let block = pair.restrict_plus(g.matrix());
    let lhs = linalg::eigvalsh(&block)[0] - shift;
    Ok((lhs, local_gap_floor(interval.k, t)))
}

pub fn local_gap_floor(k: usize, t: f64) -> f64 {
    let t = t.abs();
    let tail: f64 = (3..=k)
        .map(|l| {
            let l = l as f64;
            l * t.powf((l - 2.0) / 3.0) / (l * l)
        })
        .sum();
    1.0 - 8.0 * t - 16.0 * t * tail
}

/// `Σ_i P⁺VP⁺` over bonds inside `interval` against `4 Σ_i P⊥_i`, and the
/// underlying `Σ_i P⁺_{I_{1;i}} ≤ 2 Σ_i P⊥_i`. Returns the two minimal eigenvalues.
pub fn nearest_neighbor_domination(state: &BlockDiagState, model: &ChainModel, interval: Interval) -> Result<(f64, f64)> {
    let m = model.site_dim();
    let dim = interval.dim(m);
    let mut perp = CMat::zeros(dim, dim);
    for site in interval.sites() {
        let p = build_projectors(Interval::new(0, site), model.omega())?.p_plus;
        perp += p.embed(interval)?.matrix();
    }
    let mut plus_sum = CMat::zeros(dim, dim);
    let mut compressed = CMat::zeros(dim, dim);
    for i in interval.first()..interval.last() {
        let bond = Interval::new(1, i);
        let pair = build_projectors(bond, model.omega())?;
        plus_sum += pair.p_plus.embed(interval)?.matrix();
        if let Some(v) = state.potential(&bond) {
            let pp = pair.p_plus.matrix();
            let pvp = LocalOperator::hermitian(bond, m, pp * v.matrix() * pp)?;
            compressed += pvp.embed(interval)?.matrix();
        }
    }
    let four = linalg::eigvalsh(&(&perp * linalg::c(4.0) - compressed))[0];
    let two = linalg::eigvalsh(&(&perp * linalg::c(2.0) - plus_sum))[0];
    Ok((four, two))
}
