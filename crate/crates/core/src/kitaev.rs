//! Kitaev chain at μ = 0, τ = Δ = 1 and its even perturbations.
//!
//! Fermions live on the `2^N`-dimensional occupation space via Jordan–Wigner,
//! `c_j = σz ⊗ … ⊗ σz ⊗ σ⁻ ⊗ 1 ⊗ … ⊗ 1` with `σ⁻ = |0⟩⟨1|` and site 1 as the
//! most significant bit. The Majorana pairs are `γ_B = c† + c`, `γ_A = i(c† − c)`,
//! and the Bogoliubov modes `2d†_j = γ_{B,j} + iγ_{A,j+1}` (`1 ≤ j ≤ N−1`) plus the
//! zero mode `2d†_0 = −c†_1 + c_1 + c†_N + c_N` diagonalize `H_Kitaev = Σ_j (2d†_j d_j − 1)`.
//!
//! Perturbations supported away from both chain ends commute with the zero
//! mode; rewritten in d-variables they become local operators on modes
//! `1..N−1`, which is a chain model with on-site Hamiltonian `diag(0, 2)`.

use std::fmt;
use std::str::FromStr;

use nalgebra_sparse::{CooMatrix, CsrMatrix};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{Interval, LocalOperator};
use crate::error::{Error, Result};
use crate::lie_schwinger::DENSE_GUARD;
use crate::linalg::{self, c, CMat, CVec, I, ONE, ZERO};
use crate::model::{diag, ChainModel};
use crate::oracle::DEGENERACY_TOL;

pub type SMat = CsrMatrix<Complex64>;

/// Largest chain for the sparse operator algebras.
pub const SPARSE_MAX_SITES: usize = 16;

/// Tolerance for the zero-mode commutation and locality checks.
pub const REGROUP_TOL: f64 = 1e-12;

fn sp_scale(a: &SMat, s: Complex64) -> SMat {
    let mut out = a.clone();
    out.values_mut().iter_mut().for_each(|v| *v *= s);
    out
}

fn sp_adjoint(a: &SMat) -> SMat {
    let mut out = a.transpose();
    out.values_mut().iter_mut().for_each(|v| *v = v.conj());
    out
}

fn sp_identity(dim: usize) -> SMat {
    SMat::identity(dim)
}

/// `max |a_ij − s δ_ij|`.
pub fn sp_deviation(a: &SMat, s: Complex64) -> f64 {
    let mut worst: f64 = 0.0;
    let mut diag_seen = 0usize;
    for (i, j, v) in a.triplet_iter() {
        let expect = if i == j {
            diag_seen += 1;
            s
        } else {
            ZERO
        };
        worst = worst.max((v - expect).norm());
    }
    if s != ZERO && diag_seen < a.nrows() {
        worst = worst.max(s.norm());
    }
    worst
}

fn anticomm(a: &SMat, b: &SMat) -> SMat {
    &(a * b) + &(b * a)
}

pub fn to_dense(a: &SMat) -> CMat {
    let mut out = CMat::zeros(a.nrows(), a.ncols());
    for (i, j, v) in a.triplet_iter() {
        out[(i, j)] += *v;
    }
    out
}

fn check_sites(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Validation(format!("Kitaev chain needs N ≥ 2, got {n}")));
    }
    if n > SPARSE_MAX_SITES {
        return Err(Error::TooLarge {
            dim: 1usize << n.min(63),
            guard: 1 << SPARSE_MAX_SITES,
        });
    }
    Ok(())
}

fn dense_guard(n: usize) -> Result<usize> {
    let dim = 1usize << n;
    if dim > DENSE_GUARD {
        return Err(Error::TooLarge { dim, guard: DENSE_GUARD });
    }
    Ok(dim)
}

/// Jordan–Wigner annihilators `c_1..c_N`.
#[derive(Debug, Clone)]
pub struct FermionAlgebra {
    n: usize,
    c: Vec<SMat>,
}

impl FermionAlgebra {
    pub fn new(n: usize) -> Result<Self> {
        check_sites(n)?;
        let dim = 1usize << n;
        let c = (1..=n)
            .map(|j| {
                let bit = 1usize << (n - j);
                let mut coo = CooMatrix::new(dim, dim);
                for col in 0..dim {
                    if col & bit != 0 {
                        let left = (col >> (n - j + 1)).count_ones();
                        let sign = if left.is_multiple_of(2) { ONE } else { -ONE };
                        coo.push(col ^ bit, col, sign);
                    }
                }
                SMat::from(&coo)
            })
            .collect();
        Ok(Self { n, c })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// `c_j`, `1 ≤ j ≤ N`.
    pub fn c(&self, j: usize) -> &SMat {
        &self.c[j - 1]
    }

    pub fn cdag(&self, j: usize) -> SMat {
        sp_adjoint(self.c(j))
    }

    /// `γ_{A,j} = i(c†_j − c_j)`.
    pub fn maj_a(&self, j: usize) -> SMat {
        sp_scale(&(&self.cdag(j) - self.c(j)), I)
    }

    /// `γ_{B,j} = c†_j + c_j`.
    pub fn maj_b(&self, j: usize) -> SMat {
        &self.cdag(j) + self.c(j)
    }

    pub fn number(&self, j: usize) -> SMat {
        &self.cdag(j) * self.c(j)
    }

    /// Largest entrywise violation of the canonical anticommutation relations.
    pub fn car_defect(&self) -> f64 {
        car_defect(&self.c)
    }
}

fn car_defect(ops: &[SMat]) -> f64 {
    let adj: Vec<SMat> = ops.iter().map(sp_adjoint).collect();
    let mut worst: f64 = 0.0;
    for (j, a) in ops.iter().enumerate() {
        for (l, b) in ops.iter().enumerate() {
            worst = worst.max(sp_deviation(&anticomm(a, b), ZERO));
            let delta = if j == l { ONE } else { ZERO };
            worst = worst.max(sp_deviation(&anticomm(a, &adj[l]), delta));
        }
    }
    worst
}

/// Bogoliubov modes `d_0..d_{N−1}` built on a [`FermionAlgebra`].
#[derive(Debug, Clone)]
pub struct DModeAlgebra {
    c: FermionAlgebra,
    d: Vec<SMat>,
}

impl DModeAlgebra {
    pub fn new(n: usize) -> Result<Self> {
        let f = FermionAlgebra::new(n)?;
        let half = c(0.5);
        let mut d = Vec::with_capacity(n);
        // 2d†_0 = −c†_1 + c_1 + c†_N + c_N
        let d0dag = &(&(&f.cdag(n) + f.c(n)) + f.c(1)) - &f.cdag(1);
        d.push(sp_adjoint(&sp_scale(&d0dag, half)));
        for j in 1..n {
            let ddag = &f.maj_b(j) + &sp_scale(&f.maj_a(j + 1), I);
            d.push(sp_adjoint(&sp_scale(&ddag, half)));
        }
        Ok(Self { c: f, d })
    }

    pub fn fermions(&self) -> &FermionAlgebra {
        &self.c
    }

    pub fn n(&self) -> usize {
        self.c.n
    }

    /// `d_j`, `0 ≤ j ≤ N−1`.
    pub fn d(&self, j: usize) -> &SMat {
        &self.d[j]
    }

    pub fn ddag(&self, j: usize) -> SMat {
        sp_adjoint(&self.d[j])
    }

    pub fn car_defect(&self) -> f64 {
        car_defect(&self.d)
    }

    /// Largest entrywise violation of
    /// `c_j = (d_j + d†_j + d†_{j−1} − d_{j−1})/2` and
    /// `c_N = (d_0 + d†_0 + d†_{N−1} − d_{N−1})/2`.
    pub fn inversion_defect(&self) -> f64 {
        let n = self.n();
        let recon = |cur: usize, prev: usize| -> SMat {
            let s = &(&(self.d(cur) + &self.ddag(cur)) + &self.ddag(prev)) - self.d(prev);
            sp_scale(&s, c(0.5))
        };
        let mut worst: f64 = 0.0;
        for j in 1..n {
            worst = worst.max(sp_deviation(&(&recon(j, j - 1) - self.c.c(j)), ZERO));
        }
        worst.max(sp_deviation(&(&recon(0, n - 1) - self.c.c(n)), ZERO))
    }

    /// Unitary whose columns are `(d†_0)^{n_0} ⋯ (d†_{N−1})^{n_{N−1}} Ω^(d)`,
    /// ordered with mode 0 as the most significant bit.
    pub fn basis(&self) -> Result<CMat> {
        let n = self.n();
        let dim = dense_guard(n)?;
        let mut number = SMat::zeros(dim, dim);
        for j in 0..n {
            number = &number + &(&self.ddag(j) * self.d(j));
        }
        let (vals, vecs) = linalg::eigh(&to_dense(&number));
        if vals[0].abs() > 1e-10 || vals.get(1).is_some_and(|v| *v < 0.5) {
            return Err(Error::Numeric("d-mode vacuum is not unique".into()));
        }
        let vacuum: CVec = vecs.column(0).into_owned();
        let raising: Vec<CMat> = (0..n).map(|j| to_dense(&self.ddag(j))).collect();
        let mut w = CMat::zeros(dim, dim);
        for idx in 0..dim {
            let mut v = vacuum.clone();
            for j in (0..n).rev() {
                if idx & (1 << (n - 1 - j)) != 0 {
                    v = &raising[j] * v;
                }
            }
            w.set_column(idx, &v);
        }
        Ok(w)
    }
}

/// A single fermionic factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FermionOp {
    /// `c_j`
    C(usize),
    /// `c†_j`
    Cdag(usize),
    /// `γ_{A,j}`
    MajA(usize),
    /// `γ_{B,j}`
    MajB(usize),
    /// `d_j`
    D(usize),
    /// `d†_j`
    Ddag(usize),
}

impl FermionOp {
    /// Chain site for c-type factors; `None` for d-modes.
    pub fn site(&self) -> Option<usize> {
        match *self {
            FermionOp::C(j) | FermionOp::Cdag(j) | FermionOp::MajA(j) | FermionOp::MajB(j) => Some(j),
            FermionOp::D(_) | FermionOp::Ddag(_) => None,
        }
    }

    fn matrix(&self, alg: &DModeAlgebra) -> Result<SMat> {
        let n = alg.n();
        let site = |j: usize| {
            if (1..=n).contains(&j) {
                Ok(j)
            } else {
                Err(Error::Validation(format!("fermion site {j} outside 1..={n}")))
            }
        };
        let mode = |j: usize| {
            if j < n {
                Ok(j)
            } else {
                Err(Error::Validation(format!("d-mode {j} outside 0..{n}")))
            }
        };
        let f = alg.fermions();
        Ok(match *self {
            FermionOp::C(j) => f.c(site(j)?).clone(),
            FermionOp::Cdag(j) => f.cdag(site(j)?),
            FermionOp::MajA(j) => f.maj_a(site(j)?),
            FermionOp::MajB(j) => f.maj_b(site(j)?),
            FermionOp::D(j) => alg.d(mode(j)?).clone(),
            FermionOp::Ddag(j) => alg.ddag(mode(j)?),
        })
    }
}

impl fmt::Display for FermionOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FermionOp::C(j) => write!(f, "c{j}"),
            FermionOp::Cdag(j) => write!(f, "c+{j}"),
            FermionOp::MajA(j) => write!(f, "a{j}"),
            FermionOp::MajB(j) => write!(f, "b{j}"),
            FermionOp::D(j) => write!(f, "d{j}"),
            FermionOp::Ddag(j) => write!(f, "d+{j}"),
        }
    }
}

impl FromStr for FermionOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown fermion operator {s:?} (expected c3, c+3, a3, b3, d0, d+0)"));
        let (head, rest) = s.split_at(s.find(|ch: char| ch.is_ascii_digit() || ch == '+').ok_or_else(bad)?);
        let (dagger, digits) = match rest.strip_prefix('+') {
            Some(d) => (true, d),
            None => (false, rest),
        };
        let j: usize = digits.parse().map_err(|_| bad())?;
        match (head, dagger) {
            ("c", false) => Ok(FermionOp::C(j)),
            ("c", true) => Ok(FermionOp::Cdag(j)),
            ("a", false) => Ok(FermionOp::MajA(j)),
            ("b", false) => Ok(FermionOp::MajB(j)),
            ("d", false) => Ok(FermionOp::D(j)),
            ("d", true) => Ok(FermionOp::Ddag(j)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for FermionOp {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FermionOp {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `coeff · op_1 op_2 ⋯ op_p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FermionTerm {
    /// `[re, im]`
    pub coeff: [f64; 2],
    pub ops: Vec<FermionOp>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FermionPolynomial {
    pub terms: Vec<FermionTerm>,
}

impl FermionPolynomial {
    pub fn is_even(&self) -> bool {
        self.terms.iter().all(|t| t.ops.len() % 2 == 0)
    }

    pub fn matrix(&self, alg: &DModeAlgebra) -> Result<SMat> {
        let dim = alg.fermions().dim();
        let mut total = SMat::zeros(dim, dim);
        for term in &self.terms {
            let mut prod = sp_identity(dim);
            for op in &term.ops {
                prod = &prod * &op.matrix(alg)?;
            }
            let z = Complex64::new(term.coeff[0], term.coeff[1]);
            total = &total + &sp_scale(&prod, z);
        }
        Ok(total)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| FermionTerm {
                    coeff: [t.coeff[0] * factor, t.coeff[1] * factor],
                    ops: t.ops.clone(),
                })
                .collect(),
        }
    }
}

/// A perturbation declared on the c-sites of `support`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KitaevPerturbation {
    pub support: Interval,
    pub poly: FermionPolynomial,
}

/// Where a perturbation sits relative to the zero mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Touches site 1 or site N.
    Boundary,
    /// Sites `i..=i+j` with `i ≥ 2`, `i + j ≤ N − 1`.
    Bulk,
}

pub fn placement(support: Interval, n: usize) -> Placement {
    if support.first() >= 2 && support.last() < n {
        Placement::Bulk
    } else {
        Placement::Boundary
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KitaevModel {
    pub n: usize,
    pub mu: f64,
    pub tau: f64,
    pub delta: f64,
    pub beta: f64,
    pub kbar: usize,
    pub perturbations: Vec<KitaevPerturbation>,
}

impl KitaevModel {
    /// Validates supports, evenness and Hermiticity of every perturbation.
    ///
    /// Factors written in d-modes are accepted without a support check so that
    /// zero-mode couplings can be built on purpose.
    pub fn new(
        n: usize,
        (mu, tau, delta): (f64, f64, f64),
        beta: f64,
        kbar: usize,
        perturbations: Vec<KitaevPerturbation>,
    ) -> Result<Self> {
        check_sites(n)?;
        for (name, v) in [("mu", mu), ("tau", tau), ("delta", delta), ("beta", beta)] {
            if !v.is_finite() {
                return Err(Error::Validation(format!("{name} must be finite")));
            }
        }
        if tau < 0.0 || delta < 0.0 {
            return Err(Error::Validation("hopping and pairing amplitudes must be non-negative".into()));
        }
        let alg = DModeAlgebra::new(n)?;
        for p in &perturbations {
            let sup = p.support;
            if sup.q == 0 || sup.last() > n {
                return Err(Error::Validation(format!("perturbation support {sup} outside sites 1..={n}")));
            }
            if sup.k == 0 || sup.k > kbar {
                return Err(Error::Validation(format!(
                    "perturbation support {sup} must span 2..={} sites",
                    kbar + 1
                )));
            }
            for t in &p.poly.terms {
                for op in &t.ops {
                    if let Some(site) = op.site() {
                        if !sup.contains_site(site) {
                            return Err(Error::Validation(format!("factor {op} outside declared support {sup}")));
                        }
                    }
                }
            }
            if !p.poly.is_even() {
                return Err(Error::Validation(format!("perturbation on {sup} is not even in fermion operators")));
            }
            let m = p.poly.matrix(&alg)?;
            let defect = sp_deviation(&(&m - &sp_adjoint(&m)), ZERO);
            if defect > 1e-10 {
                return Err(Error::Validation(format!(
                    "perturbation on {sup} is not Hermitian (deviation {defect:e})"
                )));
            }
        }
        Ok(Self {
            n,
            mu,
            tau,
            delta,
            beta,
            kbar,
            perturbations,
        })
    }

    /// The topological point `μ = 0`, `τ = Δ = 1`.
    pub fn topological(n: usize, beta: f64, kbar: usize, perturbations: Vec<KitaevPerturbation>) -> Result<Self> {
        Self::new(n, (0.0, 1.0, 1.0), beta, kbar, perturbations)
    }

    pub fn is_topological(&self) -> bool {
        self.mu == 0.0 && self.tau == 1.0 && self.delta == 1.0
    }
}

/// `H = −μ Σ c†c − Σ (τ c†_j c_{j+1} + τ c†_{j+1} c_j + Δ c_j c_{j+1} + Δ c†_{j+1} c†_j)`.
pub fn build_h(alg: &FermionAlgebra, mu: f64, tau: f64, delta: f64) -> SMat {
    let n = alg.n();
    let mut h = SMat::zeros(alg.dim(), alg.dim());
    for j in 1..=n {
        h = &h - &sp_scale(&alg.number(j), c(mu));
    }
    for j in 1..n {
        let hop = &(&alg.cdag(j) * alg.c(j + 1)) + &(&alg.cdag(j + 1) * alg.c(j));
        let pair = &(alg.c(j) * alg.c(j + 1)) + &(&alg.cdag(j + 1) * &alg.cdag(j));
        h = &h - &(&sp_scale(&hop, c(tau)) + &sp_scale(&pair, c(delta)));
    }
    h
}

/// `−i Σ_j γ_{B,j} γ_{A,j+1}`.
pub fn h_kitaev_majorana(alg: &FermionAlgebra) -> SMat {
    let mut h = SMat::zeros(alg.dim(), alg.dim());
    for j in 1..alg.n() {
        h = &h + &sp_scale(&(&alg.maj_b(j) * &alg.maj_a(j + 1)), -I);
    }
    h
}

/// `Σ_{j=1}^{N−1} (2 d†_j d_j − 1)`.
pub fn h_kitaev_modes(alg: &DModeAlgebra) -> SMat {
    let dim = alg.fermions().dim();
    let mut h = SMat::zeros(dim, dim);
    for j in 1..alg.n() {
        let nj = &alg.ddag(j) * alg.d(j);
        h = &h + &(&sp_scale(&nj, c(2.0)) - &sp_identity(dim));
    }
    h
}

/// Dense `H_Kitaev`, checking that the Majorana and mode forms agree.
pub fn build_h_kitaev(n: usize) -> Result<CMat> {
    dense_guard(n)?;
    let alg = DModeAlgebra::new(n)?;
    let a = h_kitaev_majorana(alg.fermions());
    let b = h_kitaev_modes(&alg);
    let defect = sp_deviation(&(&a - &b), ZERO);
    if defect > 1e-12 {
        return Err(Error::Numeric(format!("H_Kitaev forms disagree by {defect:e}")));
    }
    Ok(to_dense(&a))
}

/// A perturbation rewritten in d-variables.
#[derive(Debug, Clone)]
pub struct RegroupedTerm {
    pub c_support: Interval,
    /// d-modes the term acts on, in chain order; the zero mode appears as `0`.
    pub modes: Vec<usize>,
    /// Full-space matrix in the d-occupation basis.
    pub matrix: CMat,
}

#[derive(Debug, Clone)]
pub struct Regrouped {
    /// Bulk terms as local operators on the restricted chain of modes `1..N−1`.
    pub bulk: Vec<LocalOperator>,
    pub boundary: Vec<RegroupedTerm>,
    /// d-occupation basis used for the rewrite.
    pub basis: CMat,
}

fn modes_for(support: Interval, n: usize) -> Vec<usize> {
    // c_l involves d_{l−1}, d_l, and c_N involves d_{N−1}, d_0
    let mut modes: Vec<usize> = Vec::new();
    for l in support.sites() {
        let pair = if l == n { [n - 1, 0] } else { [l - 1, l] };
        for m in pair {
            if !modes.contains(&m) {
                modes.push(m);
            }
        }
    }
    modes
}

/// Block of `x` with mode 0 empty (the first half in the d-basis).
fn zero_mode_block(x: &CMat) -> CMat {
    let h = x.nrows() / 2;
    x.view((0, 0), (h, h)).into_owned()
}

/// `Tr_{outside} X / dim(outside)` for an operator on `n` qubits, keeping sites `first..=last`.
fn partial_trace(x: &CMat, n: usize, first: usize, last: usize) -> CMat {
    let inner = 1usize << (last + 1 - first);
    let right = 1usize << (n - last);
    let left = 1usize << (first - 1);
    let mut y = CMat::zeros(inner, inner);
    for l in 0..left {
        for r in 0..right {
            for a in 0..inner {
                for b in 0..inner {
                    y[(a, b)] += x[((l * inner + a) * right + r, (l * inner + b) * right + r)];
                }
            }
        }
    }
    y / c((left * right) as f64)
}

/// Rewrites every perturbation in d-variables and splits bulk from boundary.
pub fn regroup_perturbation(model: &KitaevModel) -> Result<Regrouped> {
    let n = model.n;
    dense_guard(n)?;
    let alg = DModeAlgebra::new(n)?;
    let w = alg.basis()?;
    let wt = w.adjoint();
    let d0 = &wt * to_dense(alg.d(0)) * &w;
    let restricted = Interval::whole(n - 1);
    let mut bulk: Vec<LocalOperator> = Vec::new();
    let mut boundary = Vec::new();
    for p in &model.perturbations {
        let in_d = &wt * to_dense(&p.poly.matrix(&alg)?) * &w;
        match placement(p.support, n) {
            Placement::Boundary => boundary.push(RegroupedTerm {
                c_support: p.support,
                modes: modes_for(p.support, n),
                matrix: in_d,
            }),
            Placement::Bulk => {
                let sup = p.support;
                let defect = linalg::max_abs(&linalg::commutator(&in_d, &d0))
                    .max(linalg::max_abs(&linalg::commutator(&in_d, &d0.adjoint())));
                if defect > REGROUP_TOL {
                    return Err(Error::Regrouping(format!(
                        "term on {sup} does not commute with the zero mode (‖[Ṽ, d_0]‖ = {defect:e})"
                    )));
                }
                let x = zero_mode_block(&in_d);
                let local = Interval::spanning(sup.first() - 1, sup.last());
                let y = partial_trace(&x, n - 1, local.first(), local.last());
                let op = LocalOperator::hermitian(local, 2, linalg::hermitian_part(&y))?;
                let rebuilt = op.embed(restricted)?;
                let err = linalg::max_abs(&(rebuilt.matrix() - &x));
                if err > REGROUP_TOL {
                    return Err(Error::Regrouping(format!(
                        "term on {sup} is not supported on d-modes {}..={} (residual {err:e})",
                        local.first(),
                        local.last()
                    )));
                }
                match bulk.iter_mut().find(|b| b.support() == local) {
                    Some(existing) => *existing = existing.add(&op)?,
                    None => bulk.push(op),
                }
            }
        }
    }
    bulk.sort_by_key(|op| op.support());
    Ok(Regrouped { bulk, boundary, basis: w })
}

/// Restricted chain over modes `1..N−1` and the constant that restores the
/// Kitaev energies: `spec(H'_β ↾ F_{1..N−1}) = spec(K) + energy_offset`.
#[derive(Debug, Clone)]
pub struct RestrictedModel {
    pub chain: ChainModel,
    pub energy_offset: f64,
}

/// `H = diag(0, 2)` per mode, bulk terms as interactions, coupling `β`.
pub fn to_chain_model(n: usize, bulk: &[LocalOperator], beta: f64, kbar: usize) -> Result<RestrictedModel> {
    if n < 3 {
        return Err(Error::Validation("restricted Kitaev chain needs N ≥ 3".into()));
    }
    dense_guard(n - 1)?;
    let chain = ChainModel::new(n - 1, diag(&[0.0, 2.0]), bulk.to_vec(), beta, kbar + 1)?;
    Ok(RestrictedModel {
        chain,
        energy_offset: -((n - 1) as f64),
    })
}

/// Regroups and restricts a topological Kitaev model; boundary terms are dropped.
pub fn restrict(model: &KitaevModel) -> Result<RestrictedModel> {
    if !model.is_topological() {
        return Err(Error::Unsupported("restriction needs μ = 0, τ = Δ = 1".into()));
    }
    let parts = regroup_perturbation(model)?;
    to_chain_model(model.n, &parts.bulk, model.beta, model.kbar)
}

fn full_hamiltonian(model: &KitaevModel, alg: &DModeAlgebra, only_bulk: bool) -> Result<SMat> {
    let mut h = if model.is_topological() {
        h_kitaev_modes(alg)
    } else {
        build_h(alg.fermions(), model.mu, model.tau, model.delta)
    };
    for p in &model.perturbations {
        if only_bulk && placement(p.support, model.n) == Placement::Boundary {
            continue;
        }
        h = &h + &sp_scale(&p.poly.matrix(alg)?, c(model.beta));
    }
    Ok(h)
}

/// `H'_β = H_Kitaev + β Σ_bulk V` on the full space.
pub fn h_prime(model: &KitaevModel) -> Result<CMat> {
    dense_guard(model.n)?;
    let alg = DModeAlgebra::new(model.n)?;
    Ok(to_dense(&full_hamiltonian(model, &alg, true)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub even_multiplicities: bool,
    /// `max |λ_i(full) − λ_i(restricted ⊕ restricted)|`.
    pub distance: f64,
    pub ok: bool,
}

/// Compares the spectrum of `H'_β` with its zero-mode-empty block counted twice.
pub fn doubling_report(model: &KitaevModel) -> Result<DoublingReport> {
    let n = model.n;
    dense_guard(n)?;
    let alg = DModeAlgebra::new(n)?;
    let w = alg.basis()?;
    let full = to_dense(&full_hamiltonian(model, &alg, true)?);
    let spectrum = linalg::eigvalsh(&full);
    let block = zero_mode_block(&(w.adjoint() * &full * &w));
    let restricted = linalg::eigvalsh(&block);
    let mut doubled: Vec<f64> = restricted.iter().flat_map(|&v| [v, v]).collect();
    doubled.sort_by(f64::total_cmp);
    let distance = spectrum
        .iter()
        .zip(&doubled)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let even_multiplicities = crate::oracle::clusters(&spectrum, DEGENERACY_TOL, usize::MAX)
        .iter()
        .all(|cl| cl.multiplicity % 2 == 0);
    Ok(DoublingReport {
        even_multiplicities,
        distance,
        ok: even_multiplicities && distance <= DEGENERACY_TOL,
    })
}

pub fn doubling_check(model: &KitaevModel) -> Result<bool> {
    Ok(doubling_report(model)?.ok)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub ground_pair: [f64; 2],
    /// `λ_3 − λ_2` of the fully perturbed `H_β`.
    pub gap_above: f64,
    pub ok: bool,
}

/// Two lowest levels of `H_β` (bulk and boundary terms) and the gap above them.
pub fn boundary_check(model: &KitaevModel, threshold: f64) -> Result<BoundaryReport> {
    dense_guard(model.n)?;
    let alg = DModeAlgebra::new(model.n)?;
    let spectrum = linalg::eigvalsh(&to_dense(&full_hamiltonian(model, &alg, false)?));
    let gap_above = spectrum[2] - spectrum[1];
    Ok(BoundaryReport {
        ground_pair: [spectrum[0], spectrum[1]],
        gap_above,
        ok: gap_above >= threshold,
    })
}

/// `Σ_S r_S i^{p(p−1)/2} γ_S` over the even non-empty subsets `S` of the
/// Majoranas on `support`, scaled to unit norm.
pub fn random_even_perturbation(alg: &DModeAlgebra, support: Interval, rng: &mut ChaCha8Rng) -> Result<FermionPolynomial> {
    let majoranas: Vec<FermionOp> = support
        .sites()
        .flat_map(|j| [FermionOp::MajA(j), FermionOp::MajB(j)])
        .collect();
    let count = majoranas.len();
    let mut terms = Vec::new();
    for mask in 1u32..(1 << count) {
        let p = mask.count_ones() as usize;
        if !p.is_multiple_of(2) {
            continue;
        }
        let ops: Vec<FermionOp> = (0..count).filter(|b| mask & (1 << b) != 0).map(|b| majoranas[b]).collect();
        let r: f64 = rng.random_range(-1.0..1.0);
        // i^{p(p−1)/2} is ±1 or ±i
        let coeff = match (p * (p - 1) / 2) % 4 {
            0 => [r, 0.0],
            1 => [0.0, r],
            2 => [-r, 0.0],
            _ => [0.0, -r],
        };
        terms.push(FermionTerm { coeff, ops });
    }
    let poly = FermionPolynomial { terms };
    let norm = linalg::spectral_norm(&to_dense(&poly.matrix(alg)?), 1e-10)?;
    Ok(poly.scaled(1.0 / norm))
}

/// One random unit-norm even perturbation on every bulk interval of length `2..=kbar+1`.
pub fn random_bulk_model(n: usize, beta: f64, kbar: usize, seed: u64) -> Result<KitaevModel> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alg = DModeAlgebra::new(n)?;
    let mut perturbations = Vec::new();
    for k in 1..=kbar {
        for q in 2..n {
            let sup = Interval::new(k, q);
            if placement(sup, n) != Placement::Bulk || sup.last() > n {
                continue;
            }
            perturbations.push(KitaevPerturbation {
                support: sup,
                poly: random_even_perturbation(&alg, sup, &mut rng)?,
            });
        }
    }
    KitaevModel::topological(n, beta, kbar, perturbations)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn op_strings_round_trip() {
        for s in ["c2", "c+2", "a3", "b11", "d0", "d+0"] {
            assert_eq!(s.parse::<FermionOp>().unwrap().to_string(), s);
        }
        assert!("x1".parse::<FermionOp>().is_err());
        assert!("a+1".parse::<FermionOp>().is_err());
        assert!("c".parse::<FermionOp>().is_err());
    }

    #[test]
    fn car_small() {
        let alg = DModeAlgebra::new(4).unwrap();
        assert!(alg.fermions().car_defect() < 1e-12);
        assert!(alg.car_defect() < 1e-12);
        assert!(alg.inversion_defect() < 1e-12);
    }

    #[test]
    fn kitaev_two_sites() {
        let h = build_h_kitaev(2).unwrap();
        let spec = linalg::eigvalsh(&h);
        for (a, b) in spec.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn topological_point_matches_general_form() {
        let alg = FermionAlgebra::new(4).unwrap();
        let a = build_h(&alg, 0.0, 1.0, 1.0);
        let b = h_kitaev_majorana(&alg);
        assert!(sp_deviation(&(&a - &b), ZERO) < 1e-12);
    }

    #[test]
    fn d_basis_is_unitary_and_diagonalizes() {
        let alg = DModeAlgebra::new(3).unwrap();
        let w = alg.basis().unwrap();
        let id = CMat::identity(8, 8);
        assert!(linalg::max_abs(&(w.adjoint() * &w - id)) < 1e-12);
        let h = w.adjoint() * to_dense(&h_kitaev_modes(&alg)) * &w;
        // mode 0 is the most significant bit; modes 1, 2 cost 2 each
        let expect: Vec<f64> = (0..8).map(|i: usize| -2.0 + 2.0 * (i & 0b11).count_ones() as f64).collect();
        assert!(linalg::max_abs(&(h - diag(&expect))) < 1e-12);
    }

    #[test]
    fn bulk_number_operator_regroups_locally() {
        let n = 5;
        let sup = Interval::new(1, 2);
        let poly = FermionPolynomial {
            terms: vec![FermionTerm {
                coeff: [1.0, 0.0],
                ops: vec![FermionOp::Cdag(2), FermionOp::C(2)],
            }],
        };
        let model = KitaevModel::topological(n, 0.01, 1, vec![KitaevPerturbation { support: sup, poly }]).unwrap();
        let parts = regroup_perturbation(&model).unwrap();
        assert!(parts.boundary.is_empty());
        assert_eq!(parts.bulk.len(), 1);
        assert_eq!(parts.bulk[0].support(), Interval::spanning(1, 3));
    }

    #[test]
    fn empty_perturbation() {
        let model = KitaevModel::topological(4, 0.01, 1, vec![]).unwrap();
        let parts = regroup_perturbation(&model).unwrap();
        assert!(parts.bulk.is_empty() && parts.boundary.is_empty());
    }

    #[test]
    fn odd_and_out_of_support_rejected() {
        let odd = FermionPolynomial {
            terms: vec![FermionTerm {
                coeff: [1.0, 0.0],
                ops: vec![FermionOp::MajA(2)],
            }],
        };
        let err = KitaevModel::topological(4, 0.1, 1, vec![KitaevPerturbation { support: Interval::new(1, 2), poly: odd }]);
        assert!(matches!(err, Err(Error::Validation(_))));
        let outside = FermionPolynomial {
            terms: vec![FermionTerm {
                coeff: [0.0, 1.0],
                ops: vec![FermionOp::MajA(1), FermionOp::MajB(1)],
            }],
        };
        let err = KitaevModel::topological(4, 0.1, 1, vec![KitaevPerturbation { support: Interval::new(1, 2), poly: outside }]);
        assert!(matches!(err, Err(Error::Validation(_))));
    }
}
