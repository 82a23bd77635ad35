//! Chain models: on-site Hamiltonian, vacuum, interaction list, coupling.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{Interval, LocalOperator, TOL_HERM};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, ONE, ZERO};

/// Name of the PRNG used by the random-model generator; recorded in reports.
pub const PRNG_NAME: &str = "ChaCha8Rng";

/// Tolerance used when validating the on-site spectrum and interaction norms.
pub const TOL_VALIDATE: f64 = 1e-10;

/// Chain Hamiltonian `K_N = Σ_i H_i + t Σ_I V_I`.
#[derive(Debug, Clone)]
pub struct ChainModel {
    n: usize,
    m: usize,
    h: CMat,
    omega: CVec,
    interactions: Vec<LocalOperator>,
    t: f64,
    kbar: usize,
}

impl ChainModel {
    /// Validates the on-site gap condition, interaction supports, Hermiticity and
    /// the unit norm bound on every interaction.
    pub fn new(n: usize, h: CMat, interactions: Vec<LocalOperator>, t: f64, kbar: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Validation(format!("chain length N = {n} must be at least 2")));
        }
        let m = h.nrows();
        if m == 0 || h.ncols() != m {
            return Err(Error::Validation(format!(
                "on-site matrix must be square and non-empty, got {}×{}",
                h.nrows(),
                h.ncols()
            )));
        }
        if !t.is_finite() {
            return Err(Error::Validation(format!("coupling t = {t} is not finite")));
        }
        let omega = validate_onsite(&h)?;
        let mut seen = BTreeSet::new();
        for v in &interactions {
            let sup = v.support();
            if sup.q == 0 || sup.last() > n {
                return Err(Error::Validation(format!("interaction support {sup} outside sites 1..={n}")));
            }
            if sup.k == 0 {
                return Err(Error::Validation(format!(
                    "interaction on single site {sup}: on-site terms belong to H"
                )));
            }
            if sup.k > kbar {
                return Err(Error::Validation(format!(
                    "interaction support {sup} longer than the maximal range kbar = {kbar}"
                )));
            }
            if v.site_dim() != m {
                return Err(Error::Validation(format!(
                    "interaction on {sup} has site dimension {}, expected {m}",
                    v.site_dim()
                )));
            }
            let defect = linalg::hermiticity_defect(v.matrix());
            if defect > TOL_HERM * (1.0 + linalg::frobenius(v.matrix())) {
                return Err(Error::Validation(format!("interaction on {sup} is not Hermitian (defect {defect:e})")));
            }
            let norm = v.norm()?;
            if norm > 1.0 + TOL_VALIDATE {
                return Err(Error::Validation(format!(
                    "interaction norm bound violated on {sup}: ‖V‖ = {norm} > 1"
                )));
            }
            if !seen.insert(sup) {
                return Err(Error::Validation(format!("duplicate interaction support {sup}")));
            }
        }
        Ok(Self {
            n,
            m,
            h,
            omega,
            interactions,
            t,
            kbar,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn site_dim(&self) -> usize {
        self.m
    }

    pub fn onsite_matrix(&self) -> &CMat {
        &self.h
    }

    /// Normalized kernel vector of the on-site Hamiltonian.
    pub fn omega(&self) -> &CVec {
        &self.omega
    }

    pub fn interactions(&self) -> &[LocalOperator] {
        &self.interactions
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn kbar(&self) -> usize {
        self.kbar
    }

    /// Same model with a different coupling.
    pub fn with_coupling(&self, t: f64) -> Self {
        Self { t, ..self.clone() }
    }

    /// Same model with the interaction list reordered (test helper for order independence).
    pub fn with_interactions(&self, interactions: Vec<LocalOperator>) -> Result<Self> {
        Self::new(self.n, self.h.clone(), interactions, self.t, self.kbar)
    }

    /// `H_i` as an operator on `I_{0;i}`.
    pub fn onsite(&self, site: usize) -> LocalOperator {
        LocalOperator::from_parts(
            Interval::new(0, site),
            self.m,
            self.h.clone(),
            crate::chain::OperatorKind::Hermitian,
        )
    }

    /// Dimension of the full chain space, `M^N`, if it fits in `usize`.
    pub fn full_dim(&self) -> Option<usize> {
        self.m.checked_pow(self.n as u32)
    }
}

/// Returns the normalized kernel vector after checking `H ⪰ 0`, a one-dimensional
/// kernel, and the on-site gap condition (spectrum above the kernel ≥ 1).
fn validate_onsite(h: &CMat) -> Result<CVec> {
    let defect = linalg::hermiticity_defect(h);
    if defect > TOL_HERM * (1.0 + linalg::frobenius(h)) {
        return Err(Error::Validation(format!("on-site matrix H is not Hermitian (defect {defect:e})")));
    }
    let (vals, vecs) = linalg::eigh(h);
    let lowest = vals[0];
    if lowest < -TOL_VALIDATE {
        return Err(Error::Validation(format!(
            "on-site matrix H is not positive semidefinite: lowest eigenvalue {lowest}"
        )));
    }
    if lowest.abs() > TOL_VALIDATE {
        return Err(Error::Validation(format!(
            "on-site matrix H has no zero eigenvalue (lowest eigenvalue {lowest})"
        )));
    }
    if let Some(&second) = vals.get(1) {
        if second < 1.0 - TOL_VALIDATE {
            return Err(Error::Validation(format!(
                "on-site gap condition violated: H restricted to the complement of its kernel must be ≥ 1, \
                 but its second-lowest eigenvalue is {second}"
            )));
        }
    }
    Ok(fix_phase(vecs.column(0).into_owned()))
}

/// Rotates the global phase so the largest-magnitude entry is real and positive.
fn fix_phase(v: CVec) -> CVec {
    let (idx, _) = v
        .iter()
        .enumerate()
        .fold((0, -1.0), |(bi, bn), (i, z)| if z.norm() > bn + 1e-12 { (i, z.norm()) } else { (bi, bn) });
    let z = v[idx];
    let phase = z.conj() / c(z.norm());
    (v * phase).normalize()
}

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// Diagonal real matrix.
pub fn diag(vals: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(vals.len(), vals.iter().map(|&v| c(v))))
}

/// Nearest-neighbour chain with the same two-site interaction on every bond.
pub fn nearest_neighbor(n: usize, h: CMat, bond: &CMat, t: f64) -> Result<ChainModel> {
    let m = h.nrows();
    let interactions = (1..n)
        .map(|q| LocalOperator::hermitian(Interval::new(1, q), m, bond.clone()))
        .collect::<Result<Vec<_>>>()?;
    ChainModel::new(n, h, interactions, t, 1)
}

/// Two qubits, `H = diag(0, 1)`, `V = σx ⊗ σx`: the closed-form anchor model.
pub fn two_site_demo(t: f64) -> ChainModel {
    let xx = linalg::kron(&pauli_x(), &pauli_x());
    nearest_neighbor(2, diag(&[0.0, 1.0]), &xx, t).expect("demo model is valid")
}

/// How the random generator chooses the on-site Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RandomOnsite {
    /// `diag(0, 1, …, 1)`.
    Fixed,
    /// Random eigenbasis, eigenvalues `0` and `1 + U[0, 1)`.
    #[default]
    Random,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RandomModelSpec {
    pub n: usize,
    pub m: usize,
    pub kbar: usize,
    pub t: f64,
    pub seed: u64,
    #[serde(default)]
    pub onsite: RandomOnsite,
}

impl RandomModelSpec {
    pub fn nearest_neighbor(n: usize, t: f64, seed: u64) -> Self {
        Self {
            n,
            m: 2,
            kbar: 1,
            t,
            seed,
            onsite: RandomOnsite::Random,
        }
    }
}

fn random_complex_matrix(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    CMat::from_fn(d, d, |_, _| {
        num_complex::Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// Random Hermitian matrix `(A + A†)/2` normalized to unit spectral norm.
pub fn random_unit_hermitian(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    let a = random_complex_matrix(rng, d);
    let h = linalg::hermitian_part(&a);
    let norm = linalg::spectral_norm(&h, TOL_HERM).expect("Hermitian");
    h / c(norm)
}

pub fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    random_complex_matrix(rng, d).qr().q()
}

/// Seeded random model satisfying every validation constraint.
pub fn random_model(spec: &RandomModelSpec) -> Result<ChainModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let m = spec.m;
    let h = match spec.onsite {
        RandomOnsite::Fixed => {
            let mut vals = vec![1.0; m];
            vals[0] = 0.0;
            diag(&vals)
        }
        RandomOnsite::Random => {
            let u = random_unitary(&mut rng, m);
            let mut vals = vec![0.0; m];
            for v in vals.iter_mut().skip(1) {
                *v = 1.0 + rng.random::<f64>();
            }
            let h = &u * diag(&vals) * u.adjoint();
            linalg::hermitian_part(&h)
        }
    };
    let mut interactions = Vec::new();
    for k in 1..=spec.kbar.min(spec.n.saturating_sub(1)) {
        for q in 1..=spec.n - k {
            let sup = Interval::new(k, q);
            let v = random_unit_hermitian(&mut rng, sup.dim(m));
            interactions.push(LocalOperator::hermitian(sup, m, v)?);
        }
    }
    ChainModel::new(spec.n, h, interactions, spec.t, spec.kbar)
}
