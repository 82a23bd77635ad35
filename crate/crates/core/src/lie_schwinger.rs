//! The block-diagonalization sweep.
//!
//! Each step `(k, q)` builds the local Hamiltonian `G` on `I_{k;q}` from the
//! on-site terms and the already block-diagonal shorter potentials, computes
//! the generator `S = Σ_j t^j (S)_j` of the Lie–Schwinger series, and
//! conjugates every potential that touches `I_{k;q}` by `e^S`. The potential on
//! `I_{k;q}` itself becomes block-diagonal with respect to the vacuum projector
//! of that interval; partially overlapping potentials leave their commutator
//! corrections ("growth terms") on the union interval.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chain::{build_projectors, Conjugator, Interval, LocalOperator, OperatorKind, ProjectorPair, StepIndex};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};
use crate::model::ChainModel;
use crate::par::{self, Parallelism};

/// Largest full-chain dimension `M^N` for dense assembly.
pub const DENSE_GUARD: usize = 4096;

/// Truncation and acceptance thresholds for the series and the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesControls {
    pub jmax: usize,
    pub tol_series: f64,
    pub tol_od: f64,
    pub gap_min: f64,
    pub tol_herm: f64,
    #[serde(skip)]
    pub parallelism: Parallelism,
}

impl Default for SeriesControls {
    fn default() -> Self {
        Self {
            jmax: 20,
            tol_series: 1e-14,
            tol_od: 1e-8,
            gap_min: 0.5,
            tol_herm: crate::chain::TOL_HERM,
            parallelism: Parallelism::default(),
        }
    }
}

impl SeriesControls {
    pub fn validate(&self) -> Result<()> {
        if self.jmax < 1 {
            return Err(Error::Validation("jmax must be at least 1".into()));
        }
        for (name, v) in [
            ("tol_series", self.tol_series),
            ("tol_od", self.tol_od),
            ("tol_herm", self.tol_herm),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.gap_min.is_finite() {
            return Err(Error::Validation("gap_min must be finite".into()));
        }
        Ok(())
    }

    pub fn with_parallelism(self, parallelism: Parallelism) -> Self {
        Self { parallelism, ..self }
    }
}

/// Per-step record. Fields are `None` when the step failed before computing them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub k: usize,
    pub q: usize,
    /// Vacuum energy `E` of `G`.
    pub energy: Option<f64>,
    /// Gap `Δ` of `G` above `E`.
    pub gap: Option<f64>,
    /// Last series order used; `0` when the interval carried no potential.
    pub series_order: Option<usize>,
    /// `‖P⁺ V_new P⁻‖` of the diagonalized potential.
    pub od_residual: Option<f64>,
    /// `‖S‖`.
    pub s_norm: Option<f64>,
    /// `|t|^j ‖(V)_j‖` at the last order.
    pub last_term: Option<f64>,
    /// `‖V‖` of the potential being diagonalized.
    pub input_norm: Option<f64>,
    /// `‖(V)_j‖` for `j = 1..=order`.
    pub v_norms: Vec<f64>,
    /// `‖(S)_j‖` for `j = 1..=order`.
    pub s_norms: Vec<f64>,
}

impl StepDiagnostics {
    fn empty(step: StepIndex) -> Self {
        Self {
            k: step.k,
            q: step.q,
            energy: None,
            gap: None,
            series_order: None,
            od_residual: None,
            s_norm: None,
            last_term: None,
            input_norm: None,
            v_norms: Vec::new(),
            s_norms: Vec::new(),
        }
    }

    pub fn step(&self) -> StepIndex {
        StepIndex::new(self.k, self.q)
    }
}

/// Potentials after some prefix of the sweep.
///
/// On-site terms are never stored; they are fixed to `H_i`. Intervals whose
/// potential is zero are absent from the map.
#[derive(Debug, Clone)]
pub struct BlockDiagState {
    n: usize,
    m: usize,
    step: StepIndex,
    potentials: BTreeMap<Interval, Arc<LocalOperator>>,
    diagnostics: Vec<StepDiagnostics>,
    last_generator: Option<Arc<LocalOperator>>,
}

impl BlockDiagState {
    /// State at the initial index `(0, N)`: the model's interactions, untouched.
    pub fn initial(model: &ChainModel) -> Self {
        let potentials = model
            .interactions()
            .iter()
            .map(|v| (v.support(), Arc::new(v.clone())))
            .collect();
        Self {
            n: model.n(),
            m: model.site_dim(),
            step: StepIndex::initial(model.n()),
            potentials,
            diagnostics: Vec::new(),
            last_generator: None,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn site_dim(&self) -> usize {
        self.m
    }

    pub fn step(&self) -> StepIndex {
        self.step
    }

    pub fn is_complete(&self) -> bool {
        self.step.is_terminal(self.n)
    }

    pub fn potentials(&self) -> &BTreeMap<Interval, Arc<LocalOperator>> {
        &self.potentials
    }

    pub fn potential(&self, interval: &Interval) -> Option<&LocalOperator> {
        self.potentials.get(interval).map(|a| a.as_ref())
    }

    pub fn diagnostics(&self) -> &[StepDiagnostics] {
        &self.diagnostics
    }

    /// Generator `S` applied at the most recent step (`None` before the first step
    /// or when the step had nothing to diagonalize).
    pub fn last_generator(&self) -> Option<&LocalOperator> {
        self.last_generator.as_deref()
    }

    fn is_completed(&self, interval: &Interval) -> bool {
        interval.k == 0 || (self.step.k >= 1 && interval.step() <= self.step)
    }
}

/// `G_I = Σ_{i∈I} H_i + t Σ_{J⊊I} V_J`, embedded on `I`.
pub fn build_g(state: &BlockDiagState, model: &ChainModel, interval: Interval) -> Result<LocalOperator> {
    if interval.last() > model.n() || interval.q == 0 {
        return Err(Error::InvalidModel(format!("{interval} outside the chain")));
    }
    for sub in interval.proper_subintervals() {
        if !state.is_completed(&sub) {
            return Err(Error::InternalOrder(format!(
                "{sub} is not block-diagonalized yet at step {} but lies inside {interval}",
                state.step
            )));
        }
    }
    let m = model.site_dim();
    let mut g = LocalOperator::zeros(interval, m);
    for site in interval.sites() {
        g.add_assign_matrix(model.onsite(site).embed(interval)?.matrix());
    }
    let t = model.t();
    for (sup, v) in state.potentials.range(..interval) {
        if interval.contains(sup) && *sup != interval {
            g.add_assign_matrix(&(v.embed(interval)?.matrix() * c(t)));
        }
    }
    Ok(g)
}

/// `E = ⟨vac| G |vac⟩`, checked to be the bottom of the spectrum of `G` with the
/// vacuum an eigenvector.
pub fn vacuum_energy(g: &LocalOperator, pair: &ProjectorPair, tol_od: f64) -> Result<f64> {
    let e = pair.vacuum_expectation(g.matrix());
    let od = pair.off_diagonal_norm(g.matrix());
    if od > tol_od * (1.0 + e.abs()) {
        return Err(Error::GapAssumptionViolated(format!(
            "G on {} couples the vacuum to its complement (‖P⁺GP⁻‖ = {od:e})",
            g.support()
        )));
    }
    let lowest = linalg::eigvalsh(g.matrix())[0];
    if (e - lowest).abs() > tol_od * (1.0 + e.abs()) {
        return Err(Error::GapAssumptionViolated(format!(
            "vacuum energy {e} of G on {} is not its ground energy {lowest}",
            g.support()
        )));
    }
    Ok(e)
}

/// `Δ = infspec(P⁺GP⁺ ↾ range P⁺) − E`.
pub fn local_gap(g: &LocalOperator, pair: &ProjectorPair, ctl: &SeriesControls) -> Result<f64> {
    Ok(LocalSpectrum::analyze(g, pair, ctl)?.gap)
}

/// Spectral data of `G` needed by the series: vacuum energy, gap, and the
/// reduced resolvent `(G − E)^{-1} P⁺`.
#[derive(Debug, Clone)]
pub struct LocalSpectrum {
    pub energy: f64,
    pub gap: f64,
    resolvent: CMat,
}

impl LocalSpectrum {
    pub fn analyze(g: &LocalOperator, pair: &ProjectorPair, ctl: &SeriesControls) -> Result<Self> {
        let energy = vacuum_energy(g, pair, ctl.tol_od)?;
        let basis = pair.plus_basis();
        let block = basis.adjoint() * g.matrix() * &basis;
        let (inv, gap) = linalg::shifted_inverse(&block, energy);
        if gap < ctl.gap_min {
            return Err(Error::GapTooSmall {
                gap,
                gap_min: ctl.gap_min,
            });
        }
        let resolvent = &basis * inv * basis.adjoint();
        Ok(Self {
            energy,
            gap,
            resolvent,
        })
    }
}

/// Result of summing the Lie–Schwinger series on one interval.
#[derive(Debug, Clone)]
pub struct SeriesOutcome {
    /// `S = Σ_j t^j (S)_j`.
    pub generator: LocalOperator,
    /// `Σ_j t^{j−1} (V)_j^{diag}`.
    pub diag_part: LocalOperator,
    pub order: usize,
    pub v_norms: Vec<f64>,
    pub s_norms: Vec<f64>,
    pub last_term: f64,
}

/// Sums the series for `S` on the support of `g`. See [`series_with`].
pub fn series_s(
    g: &LocalOperator,
    pair: &ProjectorPair,
    v: &LocalOperator,
    t: f64,
    ctl: &SeriesControls,
) -> Result<SeriesOutcome> {
    let local = LocalSpectrum::analyze(g, pair, ctl)?;
    series_with(&local, g, pair, v, t, ctl)
}

/// Computes `(S)_j = (G−E)^{-1} P⁺ (V)_j P⁻ − h.c.` and the order-`j` potentials
///
/// `(V)_j = Σ_{p≥2} 1/p! Σ_{r_1+…+r_p=j} ad(S)_{r_1}…ad(S)_{r_p}(G)
///        + Σ_{p≥1} 1/p! Σ_{r_1+…+r_p=j−1} ad(S)_{r_1}…ad(S)_{r_p}(V)`,
///
/// with `(V)_1 = V`, until `|t|^j ‖(V)_j‖ < tol_series`.
///
/// The composition sums are memoized by their outermost index:
/// `W_p(m) = Σ_{r=1}^{m−p+1} ad(S)_r W_{p−1}(m−r)` with `W_0(0) = X`.
pub fn series_with(
    local: &LocalSpectrum,
    g: &LocalOperator,
    pair: &ProjectorPair,
    v: &LocalOperator,
    t: f64,
    ctl: &SeriesControls,
) -> Result<SeriesOutcome> {
    if local.gap < ctl.gap_min {
        return Err(Error::GapAssumptionViolated(format!(
            "gap {} below {} on {}",
            local.gap,
            ctl.gap_min,
            g.support()
        )));
    }
    let sup = g.support();
    if v.support() != sup {
        return Err(Error::InvalidEmbedding {
            inner: v.support().to_string(),
            outer: sup.to_string(),
        });
    }
    let m = g.site_dim();
    let d = g.dim();
    let gm = g.matrix();
    let vm = v.matrix();
    let vac = pair.vacuum();
    let jmax = ctl.jmax;

    // wg[p][m], wv[p][m]; index 0 unused for p
    let mut wg: Vec<Vec<Option<CMat>>> = vec![vec![None; jmax + 1]; jmax + 1];
    let mut wv: Vec<Vec<Option<CMat>>> = vec![vec![None; jmax + 1]; jmax + 1];
    let mut s_terms: Vec<CMat> = vec![CMat::zeros(0, 0)]; // 1-based
    let mut factorial = vec![1.0f64; jmax + 2];
    for p in 1..factorial.len() {
        factorial[p] = factorial[p - 1] * p as f64;
    }

    let mut generator = CMat::zeros(d, d);
    let mut diag_part = CMat::zeros(d, d);
    let mut v_norms = Vec::new();
    let mut s_norms = Vec::new();

    for j in 1..=jmax {
        for p in 2..=j {
            let mut acc = CMat::zeros(d, d);
            for r in 1..=(j + 1 - p) {
                if let Some(inner) = &wg[p - 1][j - r] {
                    acc += linalg::commutator(&s_terms[r], inner);
                }
            }
            wg[p][j] = Some(acc);
        }

        let vj = if j == 1 {
            vm.clone()
        } else {
            let mut acc = CMat::zeros(d, d);
            for p in 2..=j {
                if let Some(w) = &wg[p][j] {
                    acc += w * c(1.0 / factorial[p]);
                }
            }
            for p in 1..j {
                if let Some(w) = &wv[p][j - 1] {
                    acc += w * c(1.0 / factorial[p]);
                }
            }
            linalg::hermitian_part(&acc)
        };

        // (S)_j = R V_j |vac⟩⟨vac| − h.c.
        let w = &local.resolvent * (&vj * vac);
        let a = &w * vac.adjoint();
        let sj = &a - a.adjoint();

        let vj_norm = linalg::spectral_norm(&vj, ctl.tol_herm)?;
        let sj_norm = linalg::spectral_norm(&sj, ctl.tol_herm)?;
        v_norms.push(vj_norm);
        s_norms.push(sj_norm);

        let tj = t.powi(j as i32);
        generator += &sj * c(tj);
        diag_part += pair.diagonal_part(&vj) * c(t.powi(j as i32 - 1));

        wg[1][j] = Some(linalg::commutator(&sj, gm));
        wv[1][j] = Some(linalg::commutator(&sj, vm));
        s_terms.push(sj);
        for p in 2..=j {
            let mut acc = CMat::zeros(d, d);
            for r in 1..=(j + 1 - p) {
                if let Some(inner) = &wv[p - 1][j - r] {
                    acc += linalg::commutator(&s_terms[r], inner);
                }
            }
            wv[p][j] = Some(acc);
        }

        let last_term = tj.abs() * vj_norm;
        let order = j;
        if last_term < ctl.tol_series {
            let generator = (&generator - generator.adjoint()) * c(0.5);
            return Ok(SeriesOutcome {
                generator: LocalOperator::from_parts(sup, m, generator, OperatorKind::Generator),
                diag_part: LocalOperator::from_parts(sup, m, linalg::hermitian_part(&diag_part), OperatorKind::Hermitian),
                order,
                v_norms,
                s_norms,
                last_term,
            });
        }
        if j == jmax {
            return Err(Error::SeriesNotConverged { order, last_term });
        }
    }
    unreachable!("loop returns at j = jmax")
}

/// Block-diagonal replacement of the potential on the step interval:
/// `(e^S (G + tV) e^{−S} − G) / t`. Returns the operator and its off-diagonal
/// residual `‖P⁺ · P⁻‖`.
pub fn diagonalized_potential(
    g: &LocalOperator,
    v: &LocalOperator,
    conj: &Conjugator,
    t: f64,
    pair: &ProjectorPair,
    tol_od: f64,
) -> Result<(LocalOperator, f64)> {
    if t == 0.0 {
        return Ok((v.clone(), 0.0));
    }
    let shifted = LocalOperator::from_parts(
        g.support(),
        g.site_dim(),
        g.matrix() + v.matrix() * c(t),
        OperatorKind::Hermitian,
    );
    let rotated = conj.apply(&shifted)?;
    let out = (rotated.matrix() - g.matrix()) * c(1.0 / t);
    let out = linalg::hermitian_part(&out);
    let residual = pair.off_diagonal_norm(&out);
    if residual > tol_od {
        return Err(Error::OffDiagonalResidual { residual, tol: tol_od });
    }
    Ok((
        LocalOperator::from_parts(g.support(), g.site_dim(), out, OperatorKind::Hermitian),
        residual,
    ))
}

/// A step that could not be completed, with whatever diagnostics were computed.
#[derive(Debug, Clone)]
pub struct StepFailure {
    pub error: Error,
    pub diagnostics: StepDiagnostics,
}

impl From<StepFailure> for Error {
    fn from(f: StepFailure) -> Self {
        f.error
    }
}

impl std::fmt::Display for StepFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

enum Touch {
    /// `I_{k;q} ⊊ J`: conjugated in place.
    Contains,
    /// Partial overlap: unchanged, growth term sent to the hull.
    Partial,
}

/// Advances `state` by one step of the sweep.
// failures carry the partial diagnostics, so the error type is large by design
#[allow(clippy::result_large_err)]
pub fn alpha_step(
    state: &BlockDiagState,
    model: &ChainModel,
    ctl: &SeriesControls,
) -> std::result::Result<BlockDiagState, StepFailure> {
    let step = state.step.successor(state.n).map_err(|error| StepFailure {
        error,
        diagnostics: StepDiagnostics::empty(state.step),
    })?;
    let mut diag = StepDiagnostics::empty(step);
    match advance(state, model, ctl, step, &mut diag) {
        Ok(next) => Ok(next),
        Err(e) => Err(StepFailure {
            error: e.at_step(step),
            diagnostics: diag,
        }),
    }
}

fn advance(
    state: &BlockDiagState,
    model: &ChainModel,
    ctl: &SeriesControls,
    step: StepIndex,
    diag: &mut StepDiagnostics,
) -> Result<BlockDiagState> {
    let t = model.t();
    let interval = step.interval();
    let g = build_g(state, model, interval)?;
    let pair = build_projectors(interval, model.omega())?;
    let local = LocalSpectrum::analyze(&g, &pair, ctl).inspect_err(|e| {
        if let Error::GapTooSmall { gap, .. } = e {
            diag.gap = Some(*gap);
        }
    })?;
    diag.energy = Some(local.energy);
    diag.gap = Some(local.gap);

    let Some(v) = state.potentials.get(&interval).cloned() else {
        diag.series_order = Some(0);
        diag.od_residual = Some(0.0);
        diag.s_norm = Some(0.0);
        diag.last_term = Some(0.0);
        diag.input_norm = Some(0.0);
        let mut next = state.clone();
        next.step = step;
        next.last_generator = None;
        next.diagnostics.push(diag.clone());
        return Ok(next);
    };
    diag.input_norm = Some(v.norm()?);

    let series = series_with(&local, &g, &pair, &v, t, ctl).inspect_err(|e| {
        if let Error::SeriesNotConverged { order, last_term } = e {
            diag.series_order = Some(*order);
            diag.last_term = Some(*last_term);
        }
    })?;
    diag.series_order = Some(series.order);
    diag.last_term = Some(series.last_term);
    diag.v_norms = series.v_norms.clone();
    diag.s_norms = series.s_norms.clone();
    diag.s_norm = Some(series.generator.norm()?);

    let conj = Conjugator::new(&series.generator, ctl.tol_herm)?;
    let (diagonal, residual) = diagonalized_potential(&g, &v, &conj, t, &pair, ctl.tol_od)?;
    diag.od_residual = Some(residual);

    // S = 0 exactly (t = 0 or an already block-diagonal V): nothing else moves
    let trivial = linalg::max_abs(series.generator.matrix()) == 0.0;
    let touched: Vec<(Interval, Arc<LocalOperator>, Touch)> = state
        .potentials
        .iter()
        .filter(|_| !trivial)
        .filter(|(sup, _)| **sup != interval)
        .filter_map(|(sup, op)| {
            if sup.contains(&interval) {
                Some((*sup, op.clone(), Touch::Contains))
            } else if sup.overlaps_partially(&interval) {
                Some((*sup, op.clone(), Touch::Partial))
            } else {
                None
            }
        })
        .collect();

    // (target interval, operator to add there, replaces existing?)
    let results = par::try_map(ctl.parallelism, &touched, |(sup, op, touch)| -> Result<(Interval, LocalOperator, bool)> {
        let rotated = conj.apply(op)?;
        match touch {
            Touch::Contains => Ok((*sup, rotated, true)),
            Touch::Partial => {
                let target = rotated.support();
                let growth = rotated.sub(&op.embed(target)?)?;
                Ok((target, growth, false))
            }
        }
    })?;

    let mut potentials = state.potentials.clone();
    potentials.insert(interval, Arc::new(diagonal));
    let mut growth: BTreeMap<Interval, LocalOperator> = BTreeMap::new();
    for (target, op, replaces) in results {
        if replaces {
            potentials.insert(target, Arc::new(op));
        } else {
            match growth.get_mut(&target) {
                Some(acc) => acc.add_assign_matrix(op.matrix()),
                None => {
                    growth.insert(target, op);
                }
            }
        }
    }
    for (target, g_term) in growth {
        if g_term.is_zero() {
            continue;
        }
        let g_term = LocalOperator::from_parts(
            target,
            g_term.site_dim(),
            linalg::hermitian_part(g_term.matrix()),
            OperatorKind::Hermitian,
        );
        let merged = match potentials.get(&target) {
            Some(existing) => existing.add(&g_term)?,
            None => g_term,
        };
        potentials.insert(target, Arc::new(merged));
    }

    let mut diagnostics = state.diagnostics.clone();
    diagnostics.push(diag.clone());
    Ok(BlockDiagState {
        n: state.n,
        m: state.m,
        step,
        potentials,
        diagnostics,
        last_generator: Some(Arc::new(series.generator)),
    })
}

/// A sweep that stopped early.
#[derive(Debug, Clone)]
pub struct SweepFailure {
    pub error: Error,
    /// Last successfully completed state.
    pub state: BlockDiagState,
    /// Diagnostics of the failing step.
    pub failed: StepDiagnostics,
}

impl From<SweepFailure> for Error {
    fn from(f: SweepFailure) -> Self {
        f.error
    }
}

/// Runs every step from `(0, N)` to `(N−1, 1)`.
#[allow(clippy::result_large_err)]
pub fn sweep(model: &ChainModel, ctl: &SeriesControls) -> std::result::Result<BlockDiagState, SweepFailure> {
    sweep_with(model, ctl, |_, _| {})
}

/// Like [`sweep`], calling `observer(before, after)` after every step.
#[allow(clippy::result_large_err)]
pub fn sweep_with<F>(
    model: &ChainModel,
    ctl: &SeriesControls,
    mut observer: F,
) -> std::result::Result<BlockDiagState, SweepFailure>
where
    F: FnMut(&BlockDiagState, &BlockDiagState),
{
    let mut state = BlockDiagState::initial(model);
    if let Err(error) = ctl.validate() {
        return Err(SweepFailure {
            error,
            failed: StepDiagnostics::empty(state.step),
            state,
        });
    }
    while !state.is_complete() {
        match alpha_step(&state, model, ctl) {
            Ok(next) => {
                observer(&state, &next);
                state = next;
            }
            Err(f) => {
                return Err(SweepFailure {
                    error: f.error,
                    state,
                    failed: f.diagnostics,
                })
            }
        }
    }
    Ok(state)
}

/// `Σ_i H_i + t Σ_I V_I` over the whole chain for the current state.
pub fn assemble_full(state: &BlockDiagState, model: &ChainModel) -> Result<CMat> {
    let n = model.n();
    let dim = model.full_dim().unwrap_or(usize::MAX);
    if dim > DENSE_GUARD {
        return Err(Error::TooLarge {
            dim,
            guard: DENSE_GUARD,
        });
    }
    let whole = Interval::whole(n);
    let mut total = CMat::zeros(dim, dim);
    for site in 1..=n {
        total += model.onsite(site).embed(whole)?.matrix();
    }
    let t = c(model.t());
    for v in state.potentials.values() {
        total += v.embed(whole)?.matrix() * t;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{diag, pauli_x, two_site_demo};

    fn ctl() -> SeriesControls {
        SeriesControls::default()
    }

    #[test]
    fn g_on_first_bond_is_onsite_sum() {
        let model = two_site_demo(0.3);
        let state = BlockDiagState::initial(&model);
        let g = build_g(&state, &model, Interval::new(1, 1)).unwrap();
        assert_eq!(g.matrix(), &diag(&[0.0, 1.0, 1.0, 2.0]));
    }

    #[test]
    fn build_g_rejects_out_of_order() {
        let model = crate::model::nearest_neighbor(3, diag(&[0.0, 1.0]), &linalg::kron(&pauli_x(), &pauli_x()), 0.1)
            .unwrap();
        let state = BlockDiagState::initial(&model);
        let err = build_g(&state, &model, Interval::new(2, 1)).unwrap_err();
        assert!(matches!(err, Error::InternalOrder(_)));
    }

    #[test]
    fn first_order_generator_of_demo() {
        // G|11⟩ = 2|11⟩, E = 0, V|00⟩ = |11⟩  ⇒  (S)_1 = ½(|11⟩⟨00| − |00⟩⟨11|)
        let model = two_site_demo(0.1);
        let state = BlockDiagState::initial(&model);
        let sup = Interval::new(1, 1);
        let g = build_g(&state, &model, sup).unwrap();
        let pair = build_projectors(sup, model.omega()).unwrap();
        let v = state.potential(&sup).unwrap();
        let mut one = ctl();
        one.jmax = 1;
        one.tol_series = 2.0;
        let out = series_s(&g, &pair, v, 1.0, &one).unwrap();
        let mut expect = CMat::zeros(4, 4);
        expect[(3, 0)] = c(0.5);
        expect[(0, 3)] = c(-0.5);
        assert!(linalg::max_abs(&(out.generator.matrix() - expect)) < 1e-14);
        assert_eq!(out.order, 1);
    }

    #[test]
    fn already_diagonal_potential_gives_zero_generator() {
        let model = two_site_demo(0.1);
        let sup = Interval::new(1, 1);
        let state = BlockDiagState::initial(&model);
        let g = build_g(&state, &model, sup).unwrap();
        let pair = build_projectors(sup, model.omega()).unwrap();
        let v = LocalOperator::hermitian(sup, 2, diag(&[0.3, -0.2, 0.1, 0.7])).unwrap();
        let out = series_s(&g, &pair, &v, 0.1, &ctl()).unwrap();
        assert!(linalg::max_abs(out.generator.matrix()) < 1e-15);
        assert!(linalg::max_abs(&(out.diag_part.matrix() - v.matrix())) < 1e-15);
    }

    #[test]
    fn t_zero_leaves_everything_unchanged() {
        let model = crate::model::random_model(&crate::model::RandomModelSpec::nearest_neighbor(4, 0.0, 3)).unwrap();
        let start = BlockDiagState::initial(&model);
        let end = sweep(&model, &ctl()).unwrap();
        assert_eq!(end.potentials().len(), start.potentials().len());
        for (sup, v) in start.potentials() {
            assert_eq!(end.potential(sup).unwrap().matrix(), v.matrix());
        }
    }

    #[test]
    fn step_counts() {
        let m2 = two_site_demo(0.1);
        assert_eq!(sweep(&m2, &ctl()).unwrap().diagnostics().len(), 1);
        let m5 = crate::model::random_model(&crate::model::RandomModelSpec::nearest_neighbor(5, 1e-3, 1)).unwrap();
        assert_eq!(sweep(&m5, &ctl()).unwrap().diagnostics().len(), 10);
    }
}
