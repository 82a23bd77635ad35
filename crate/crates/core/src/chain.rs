//! Interval bookkeeping and dense operator algebra on support subspaces.
//!
//! Sites are numbered `1..=N`. An [`Interval`] `I_{k;q}` covers the `k + 1`
//! consecutive sites `q..=q+k`. Operators supported on an interval are stored
//! as dense matrices over the tensor product of the local spaces, with the
//! leftmost site as the most significant base-`M` digit.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};

/// Default tolerance on Hermiticity / anti-Hermiticity defects.
pub const TOL_HERM: f64 = 1e-10;

/// Connected set of sites `{q, …, q+k}`; `k` counts edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Interval {
    pub k: usize,
    pub q: usize,
}

impl Interval {
    pub const fn new(k: usize, q: usize) -> Self {
        Self { k, q }
    }

    /// Interval inside a chain of `n` sites, validating `1 ≤ q` and `q + k ≤ n`.
    pub fn checked(k: usize, q: usize, n: usize) -> Result<Self> {
        if q == 0 || q + k > n {
            return Err(Error::InvalidModel(format!(
                "interval I_{{{k};{q}}} does not fit in a chain of {n} sites"
            )));
        }
        Ok(Self { k, q })
    }

    /// Interval with the given first and last site.
    pub fn spanning(first: usize, last: usize) -> Self {
        debug_assert!(first <= last);
        Self { k: last - first, q: first }
    }

    /// The whole chain `I_{N−1;1}`.
    pub const fn whole(n: usize) -> Self {
        Self { k: n - 1, q: 1 }
    }

    pub const fn first(&self) -> usize {
        self.q
    }

    pub const fn last(&self) -> usize {
        self.q + self.k
    }

    // intervals always hold at least one site
    #[allow(clippy::len_without_is_empty)]
    pub const fn len(&self) -> usize {
        self.k + 1
    }

    pub fn sites(&self) -> std::ops::RangeInclusive<usize> {
        self.first()..=self.last()
    }

    pub fn dim(&self, site_dim: usize) -> usize {
        site_dim.pow(self.len() as u32)
    }

    pub fn contains(&self, other: &Interval) -> bool {
        self.first() <= other.first() && other.last() <= self.last()
    }

    pub fn contains_site(&self, site: usize) -> bool {
        self.first() <= site && site <= self.last()
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.first() <= other.last() && other.first() <= self.last()
    }

    /// Overlapping, with neither interval containing the other.
    pub fn overlaps_partially(&self, other: &Interval) -> bool {
        self.intersects(other) && !self.contains(other) && !other.contains(self)
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::spanning(self.first().min(other.first()), self.last().max(other.last()))
    }

    /// All sub-intervals strictly contained in `self`, in step order.
    pub fn proper_subintervals(&self) -> Vec<Interval> {
        let mut out = Vec::new();
        for k in 0..self.k {
            for q in self.first()..=self.last() - k {
                out.push(Interval::new(k, q));
            }
        }
        out
    }

    /// Step index that block-diagonalizes this interval.
    pub const fn step(&self) -> StepIndex {
        StepIndex { k: self.k, q: self.q }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "I_{{{};{}}}", self.k, self.q)
    }
}

/// Label of a block-diagonalization step, totally ordered by `(k, q)`.
///
/// The sweep starts at the distinguished index `(0, N)` and ends at `(N−1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StepIndex {
    pub k: usize,
    pub q: usize,
}

impl StepIndex {
    pub const fn new(k: usize, q: usize) -> Self {
        Self { k, q }
    }

    pub const fn initial(n: usize) -> Self {
        Self { k: 0, q: n }
    }

    pub const fn terminal(n: usize) -> Self {
        Self { k: n - 1, q: 1 }
    }

    pub fn is_terminal(&self, n: usize) -> bool {
        *self == Self::terminal(n)
    }

    pub fn successor(&self, n: usize) -> Result<StepIndex> {
        if n < 2 {
            return Err(Error::InvalidModel(format!("chain length {n} < 2")));
        }
        if self.k >= n - 1 {
            return Err(Error::SweepComplete);
        }
        if self.k == 0 {
            return Ok(StepIndex::new(1, 1));
        }
        if self.q < n - self.k {
            Ok(StepIndex::new(self.k, self.q + 1))
        } else {
            Ok(StepIndex::new(self.k + 1, 1))
        }
    }

    /// Interval block-diagonalized at this step (undefined for the initial index).
    pub const fn interval(&self) -> Interval {
        Interval { k: self.k, q: self.q }
    }
}

impl fmt::Display for StepIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.k, self.q)
    }
}

/// Number of block-diagonalization steps for a chain of `n` sites.
pub fn step_count(n: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::InvalidModel(format!("chain length {n} < 2")));
    }
    Ok(n * (n - 1) / 2)
}

/// Successor of `step` in a chain of `n` sites.
pub fn successor(step: StepIndex, n: usize) -> Result<StepIndex> {
    step.successor(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    Hermitian,
    /// Anti-Hermitian generator of a unitary.
    Generator,
    General,
}

/// Dense operator on the Hilbert space of one interval, identity elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOperator {
    support: Interval,
    site_dim: usize,
    matrix: CMat,
    kind: OperatorKind,
}

impl LocalOperator {
    pub fn new(support: Interval, site_dim: usize, matrix: CMat, kind: OperatorKind) -> Result<Self> {
        let dim = support.dim(site_dim);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidModel(format!(
                "operator on {support} must be {dim}×{dim}, got {}×{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let op = Self {
            support,
            site_dim,
            matrix,
            kind,
        };
        op.check_kind(TOL_HERM)?;
        Ok(op)
    }

    pub fn hermitian(support: Interval, site_dim: usize, matrix: CMat) -> Result<Self> {
        Self::new(support, site_dim, matrix, OperatorKind::Hermitian)
    }

    pub fn generator(support: Interval, site_dim: usize, matrix: CMat) -> Result<Self> {
        Self::new(support, site_dim, matrix, OperatorKind::Generator)
    }

    pub(crate) fn from_parts(support: Interval, site_dim: usize, matrix: CMat, kind: OperatorKind) -> Self {
        debug_assert_eq!(matrix.nrows(), support.dim(site_dim));
        Self {
            support,
            site_dim,
            matrix,
            kind,
        }
    }

    pub fn zeros(support: Interval, site_dim: usize) -> Self {
        let d = support.dim(site_dim);
        Self::from_parts(support, site_dim, CMat::zeros(d, d), OperatorKind::Hermitian)
    }

    pub fn identity(support: Interval, site_dim: usize) -> Self {
        let d = support.dim(site_dim);
        Self::from_parts(support, site_dim, CMat::identity(d, d), OperatorKind::Hermitian)
    }

    pub fn support(&self) -> Interval {
        self.support
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn check_kind(&self, tol: f64) -> Result<()> {
        let scale = 1.0 + linalg::frobenius(&self.matrix);
        match self.kind {
            OperatorKind::Hermitian => {
                let d = linalg::hermiticity_defect(&self.matrix);
                if d > tol * scale {
                    return Err(Error::InvalidModel(format!(
                        "operator on {} flagged Hermitian has ‖A − A†‖ = {d:e}",
                        self.support
                    )));
                }
            }
            OperatorKind::Generator => {
                let d = linalg::anti_hermiticity_defect(&self.matrix);
                if d > tol * scale {
                    return Err(Error::InvalidGenerator { defect: d });
                }
            }
            OperatorKind::General => {}
        }
        Ok(())
    }

    /// Tensor-pad with identities onto `target ⊇ support`.
    pub fn embed(&self, target: Interval) -> Result<LocalOperator> {
        if !target.contains(&self.support) {
            return Err(Error::InvalidEmbedding {
                inner: self.support.to_string(),
                outer: target.to_string(),
            });
        }
        if target == self.support {
            return Ok(self.clone());
        }
        let m = self.site_dim;
        let left = m.pow((self.support.first() - target.first()) as u32);
        let right = m.pow((target.last() - self.support.last()) as u32);
        let d = self.dim();
        let total = left * d * right;
        let mut out = CMat::zeros(total, total);
        for l in 0..left {
            for i in 0..d {
                for j in 0..d {
                    let v = self.matrix[(i, j)];
                    if v == linalg::ZERO {
                        continue;
                    }
                    let row = (l * d + i) * right;
                    let col = (l * d + j) * right;
                    for r in 0..right {
                        out[(row + r, col + r)] = v;
                    }
                }
            }
        }
        Ok(Self::from_parts(target, m, out, self.kind))
    }

    pub fn adjoint(&self) -> LocalOperator {
        Self::from_parts(self.support, self.site_dim, self.matrix.adjoint(), self.kind)
    }

    fn same_space(&self, other: &LocalOperator) -> Result<()> {
        if self.support != other.support || self.site_dim != other.site_dim {
            return Err(Error::InvalidEmbedding {
                inner: other.support.to_string(),
                outer: self.support.to_string(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &LocalOperator) -> Result<LocalOperator> {
        self.same_space(other)?;
        let kind = if self.kind == other.kind { self.kind } else { OperatorKind::General };
        Ok(Self::from_parts(self.support, self.site_dim, &self.matrix + &other.matrix, kind))
    }

    pub fn sub(&self, other: &LocalOperator) -> Result<LocalOperator> {
        self.same_space(other)?;
        let kind = if self.kind == other.kind { self.kind } else { OperatorKind::General };
        Ok(Self::from_parts(self.support, self.site_dim, &self.matrix - &other.matrix, kind))
    }

    pub fn mul(&self, other: &LocalOperator) -> Result<LocalOperator> {
        self.same_space(other)?;
        Ok(Self::from_parts(
            self.support,
            self.site_dim,
            &self.matrix * &other.matrix,
            OperatorKind::General,
        ))
    }

    /// Multiply by a real scalar (keeps the Hermitian / generator flag).
    pub fn scale(&self, factor: f64) -> LocalOperator {
        Self::from_parts(self.support, self.site_dim, &self.matrix * c(factor), self.kind)
    }

    pub(crate) fn add_assign_matrix(&mut self, m: &CMat) {
        self.matrix += m;
    }

    /// Spectral norm.
    pub fn norm(&self) -> Result<f64> {
        op_norm(self)
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|z| *z == linalg::ZERO)
    }
}

/// Tensor-pad `op` with identities onto `target`.
pub fn embed(op: &LocalOperator, target: Interval) -> Result<LocalOperator> {
    op.embed(target)
}

/// Spectral norm of a normal operator (max |eigenvalue|).
pub fn op_norm(op: &LocalOperator) -> Result<f64> {
    linalg::spectral_norm(op.matrix(), TOL_HERM)
}

/// `P⁻ = ⊗|Ω⟩⟨Ω|` over an interval and its complement `P⁺ = 1 − P⁻`.
#[derive(Debug, Clone)]
pub struct ProjectorPair {
    pub p_minus: LocalOperator,
    pub p_plus: LocalOperator,
    vacuum: CVec,
    /// Unitary whose first column is the vacuum; the other columns span range(P⁺).
    frame: CMat,
}

impl ProjectorPair {
    pub fn support(&self) -> Interval {
        self.p_minus.support()
    }

    pub fn vacuum(&self) -> &CVec {
        &self.vacuum
    }

    /// `⟨vac| A |vac⟩` (real part; `A` is expected Hermitian).
    pub fn vacuum_expectation(&self, a: &CMat) -> f64 {
        self.vacuum.dotc(&(a * &self.vacuum)).re
    }

    /// `‖P⁺ A P⁻‖`, which equals `‖P⁺ A |vac⟩‖` because `P⁻` has rank one.
    pub fn off_diagonal_norm(&self, a: &CMat) -> f64 {
        let av = a * &self.vacuum;
        let along = self.vacuum.dotc(&av);
        (av - &self.vacuum * along).norm()
    }

    /// Orthonormal basis of range(P⁺) as the columns of a matrix.
    pub fn plus_basis(&self) -> CMat {
        let d = self.frame.nrows();
        self.frame.columns(1, d - 1).into_owned()
    }

    /// Compression of `a` onto range(P⁺), expressed in [`Self::plus_basis`].
    pub fn restrict_plus(&self, a: &CMat) -> CMat {
        let b = self.plus_basis();
        b.adjoint() * a * b
    }

    /// The block-diagonal part `P⁺AP⁺ + P⁻AP⁻`.
    pub fn diagonal_part(&self, a: &CMat) -> CMat {
        let pm = self.p_minus.matrix();
        let pp = self.p_plus.matrix();
        pp * a * pp + pm * a * pm
    }
}

/// Projectors onto the vacuum `⊗_{j∈I} Ω` of `interval` and its complement.
pub fn build_projectors(interval: Interval, omega: &CVec) -> Result<ProjectorPair> {
    let m = omega.len();
    if m == 0 {
        return Err(Error::InvalidModel("empty vacuum vector".into()));
    }
    if (omega.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidModel(format!(
            "vacuum vector must be normalized, ‖Ω‖ = {}",
            omega.norm()
        )));
    }
    let site_frame = linalg::complete_basis(omega);
    let frame = linalg::kron_power(&site_frame, interval.len());
    let vacuum: CVec = frame.column(0).into_owned();
    let pm = &vacuum * vacuum.adjoint();
    let d = pm.nrows();
    let pp = CMat::identity(d, d) - &pm;
    Ok(ProjectorPair {
        p_minus: LocalOperator::from_parts(interval, m, pm, OperatorKind::Hermitian),
        p_plus: LocalOperator::from_parts(interval, m, pp, OperatorKind::Hermitian),
        vacuum,
        frame,
    })
}

/// Cached unitary `e^S` for an anti-Hermitian generator `S`.
#[derive(Debug, Clone)]
pub struct Conjugator {
    generator: LocalOperator,
    unitary: CMat,
    tol_herm: f64,
}

impl Conjugator {
    pub fn new(generator: &LocalOperator, tol_herm: f64) -> Result<Self> {
        let m = generator.matrix();
        let defect = linalg::anti_hermiticity_defect(m);
        if defect > tol_herm * (1.0 + linalg::frobenius(m)) {
            return Err(Error::InvalidGenerator { defect });
        }
        let s = (m - m.adjoint()) * c(0.5);
        Ok(Self {
            generator: generator.clone(),
            unitary: linalg::exp_anti_hermitian(&s),
            tol_herm,
        })
    }

    pub fn generator(&self) -> &LocalOperator {
        &self.generator
    }

    pub fn support(&self) -> Interval {
        self.generator.support()
    }

    /// `e^S` embedded on `target`.
    pub fn unitary_on(&self, target: Interval) -> Result<CMat> {
        let u = LocalOperator::from_parts(
            self.support(),
            self.generator.site_dim(),
            self.unitary.clone(),
            OperatorKind::General,
        );
        Ok(u.embed(target)?.into_matrix())
    }

    /// `e^S A e^{−S}` on the hull of both supports. Disjoint supports commute.
    pub fn apply(&self, a: &LocalOperator) -> Result<LocalOperator> {
        if !a.support().intersects(&self.support()) {
            return Ok(a.clone());
        }
        let target = a.support().hull(&self.support());
        let u = self.unitary_on(target)?;
        let a_t = a.embed(target)?;
        let b = &u * a_t.matrix() * u.adjoint();
        self.finish(target, a, b)
    }

    fn finish(&self, target: Interval, a: &LocalOperator, b: CMat) -> Result<LocalOperator> {
        let m = a.site_dim();
        if a.kind() == OperatorKind::Hermitian {
            let deviation = linalg::hermiticity_defect(&b);
            if deviation > self.tol_herm * (1.0 + linalg::frobenius(&b)) {
                return Err(Error::HermiticityLost { deviation });
            }
            Ok(LocalOperator::from_parts(target, m, linalg::hermitian_part(&b), OperatorKind::Hermitian))
        } else {
            Ok(LocalOperator::from_parts(target, m, b, a.kind()))
        }
    }
}

/// `e^S A e^{−S}` with `S` anti-Hermitian on the same support as `A`.
pub fn conjugate_exact(a: &LocalOperator, s: &LocalOperator) -> Result<LocalOperator> {
    conjugate_exact_with(a, s, TOL_HERM)
}

pub fn conjugate_exact_with(a: &LocalOperator, s: &LocalOperator, tol_herm: f64) -> Result<LocalOperator> {
    if a.support() != s.support() {
        return Err(Error::InvalidEmbedding {
            inner: s.support().to_string(),
            outer: a.support().to_string(),
        });
    }
    Conjugator::new(s, tol_herm)?.apply(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, ONE, ZERO};

    fn diag(vals: &[f64]) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(vals.len(), vals.iter().map(|&v| c(v))))
    }

    fn e0() -> CVec {
        CVec::from_vec(vec![ONE, ZERO])
    }

    #[test]
    fn successor_examples() {
        assert_eq!(StepIndex::initial(5).successor(5).unwrap(), StepIndex::new(1, 1));
        assert_eq!(StepIndex::new(1, 1).successor(5).unwrap(), StepIndex::new(1, 2));
        assert_eq!(StepIndex::new(2, 3).successor(5).unwrap(), StepIndex::new(3, 1));
        assert_eq!(StepIndex::new(4, 1).successor(5), Err(Error::SweepComplete));
    }

    #[test]
    fn step_count_examples() {
        assert_eq!(step_count(2).unwrap(), 1);
        assert_eq!(step_count(5).unwrap(), 10);
        assert_eq!(step_count(8).unwrap(), 28);
        assert!(matches!(step_count(1), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn successor_enumerates_every_step_once() {
        for n in 2..=9 {
            let mut step = StepIndex::initial(n);
            let mut seen = Vec::new();
            for _ in 0..step_count(n).unwrap() {
                step = step.successor(n).unwrap();
                seen.push(step);
            }
            assert_eq!(step, StepIndex::terminal(n));
            let mut expected = Vec::new();
            for k in 1..n {
                for q in 1..=n - k {
                    expected.push(StepIndex::new(k, q));
                }
            }
            assert_eq!(seen, expected);
        }
    }

    #[test]
    fn interval_relations() {
        let a = Interval::new(2, 2); // {2,3,4}
        assert!(a.contains(&Interval::new(0, 3)));
        assert!(a.overlaps_partially(&Interval::new(1, 4)));
        assert!(!a.intersects(&Interval::new(0, 5)));
        assert_eq!(a.hull(&Interval::new(1, 4)), Interval::new(3, 2));
        assert_eq!(a.proper_subintervals().len(), 3 + 2);
        assert!(Interval::checked(2, 4, 5).is_err());
    }

    #[test]
    fn embed_identity_and_onsite() {
        let id = LocalOperator::identity(Interval::new(0, 1), 2);
        let e = id.embed(Interval::new(1, 1)).unwrap();
        assert_eq!(e.matrix(), &CMat::identity(4, 4));

        let h = LocalOperator::hermitian(Interval::new(0, 1), 2, diag(&[0.0, 1.0])).unwrap();
        let e = h.embed(Interval::new(1, 1)).unwrap();
        assert_eq!(e.matrix(), &diag(&[0.0, 0.0, 1.0, 1.0]));
        let e2 = LocalOperator::hermitian(Interval::new(0, 2), 2, diag(&[0.0, 1.0]))
            .unwrap()
            .embed(Interval::new(1, 1))
            .unwrap();
        assert_eq!(e2.matrix(), &diag(&[0.0, 1.0, 0.0, 1.0]));
    }

    #[test]
    fn embed_rejects_non_superset() {
        let h = LocalOperator::zeros(Interval::new(1, 2), 2);
        assert!(matches!(h.embed(Interval::new(1, 1)), Err(Error::InvalidEmbedding { .. })));
    }

    #[test]
    fn projector_examples() {
        let p = build_projectors(Interval::new(0, 3), &e0()).unwrap();
        assert_eq!(p.p_minus.matrix(), &diag(&[1.0, 0.0]));
        let p = build_projectors(Interval::new(1, 1), &e0()).unwrap();
        let rank = |m: &CMat| crate::linalg::eigvalsh(m).iter().filter(|v| **v > 0.5).count();
        assert_eq!(rank(p.p_minus.matrix()), 1);
        assert_eq!(rank(p.p_plus.matrix()), 3);
        let pm = p.p_minus.matrix();
        assert!(max_abs(&(pm * pm - pm)) < 1e-15);
        assert!(max_abs(&(pm * p.p_plus.matrix())) < 1e-15);
    }

    #[test]
    fn conjugation_examples() {
        let sup = Interval::new(1, 1);
        let a = LocalOperator::hermitian(sup, 2, diag(&[0.0, 1.0, 1.0, 2.0])).unwrap();
        let zero = LocalOperator::from_parts(sup, 2, CMat::zeros(4, 4), OperatorKind::Generator);
        let out = conjugate_exact(&a, &zero).unwrap();
        assert!(max_abs(&(out.matrix() - a.matrix())) < 1e-15);

        // a generator diagonal in the same basis commutes with `a`
        let s = LocalOperator::generator(sup, 2, diag(&[0.1, 0.2, -0.3, 0.0]) * crate::linalg::I).unwrap();
        let out = conjugate_exact(&a, &s).unwrap();
        assert!(max_abs(&(out.matrix() - a.matrix())) < 1e-14);

        let not_gen = LocalOperator::from_parts(sup, 2, diag(&[1.0, 0.0, 0.0, 0.0]), OperatorKind::General);
        assert!(matches!(conjugate_exact(&a, &not_gen), Err(Error::InvalidGenerator { .. })));
    }
}
