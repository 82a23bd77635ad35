//! Brute-force exact diagonalization of `K_N` on the full chain.
//!
//! The assembly here deliberately avoids [`crate::chain`]'s embedding so the
//! oracle stays an independent check of the sweep.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie_schwinger::{assemble_full, BlockDiagState, DENSE_GUARD};
use crate::linalg::{self, CMat, ZERO};
use crate::model::ChainModel;

/// Default tolerance for counting degenerate eigenvalues.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// How many of the lowest eigenvalue clusters a comparison records.
const REPORTED_CLUSTERS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub value: f64,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    /// `max_i |λ_i(K̃) − λ_i(K)|` over sorted spectra.
    pub spectrum_distance: f64,
    pub ground_energy_ed: f64,
    /// Distance from the ground cluster to the next eigenvalue of `K`.
    pub gap_ed: f64,
    pub ground_degeneracy: usize,
    /// Vacuum energy of the swept Hamiltonian matches the ED ground energy to 1e−8.
    pub blockwise_match: bool,
    /// Lowest eigenvalue clusters of `K`, for audit.
    pub low_clusters: Vec<Cluster>,
}

fn guard(model: &ChainModel, limit: usize) -> Result<usize> {
    let dim = model.full_dim().unwrap_or(usize::MAX);
    if dim > limit {
        return Err(Error::TooLarge { dim, guard: limit });
    }
    Ok(dim)
}

/// Adds `op` acting on sites `first..=last` (1-based) into `full`.
fn add_local(full: &mut CMat, op: &CMat, m: usize, n: usize, first: usize, last: usize, scale: f64) {
    let inner = m.pow((last + 1 - first) as u32);
    let right = m.pow((n - last) as u32);
    let left = m.pow((first - 1) as u32);
    for l in 0..left {
        for r in 0..right {
            for a in 0..inner {
                let row = (l * inner + a) * right + r;
                for b in 0..inner {
                    let z = op[(a, b)];
                    if z != ZERO {
                        full[(row, (l * inner + b) * right + r)] += z * scale;
                    }
                }
            }
        }
    }
}

/// `K_N = Σ_i H_i + t Σ_I V_I` assembled directly from the model.
pub fn ed_hamiltonian(model: &ChainModel) -> Result<CMat> {
    let dim = guard(model, DENSE_GUARD)?;
    let (n, m) = (model.n(), model.site_dim());
    let mut full = CMat::zeros(dim, dim);
    for site in 1..=n {
        add_local(&mut full, model.onsite_matrix(), m, n, site, site, 1.0);
    }
    for v in model.interactions() {
        let sup = v.support();
        add_local(&mut full, v.matrix(), m, n, sup.first(), sup.last(), model.t());
    }
    Ok(full)
}

/// All eigenvalues of `K_N`, ascending.
pub fn ed_spectrum(model: &ChainModel) -> Result<Vec<f64>> {
    Ok(linalg::eigvalsh(&ed_hamiltonian(model)?))
}

/// Number of eigenvalues of `K_N` within `tol` of the lowest.
pub fn degeneracy(model: &ChainModel, tol: f64) -> Result<usize> {
    Ok(linalg::lowest_cluster(&ed_spectrum(model)?, tol))
}

pub fn clusters(sorted: &[f64], tol: f64, limit: usize) -> Vec<Cluster> {
    let mut out: Vec<Cluster> = Vec::new();
    for &v in sorted {
        match out.last_mut() {
            Some(c) if v - c.value <= tol => c.multiplicity += 1,
            _ => {
                if out.len() == limit {
                    break;
                }
                out.push(Cluster {
                    value: v,
                    multiplicity: 1,
                })
            }
        }
    }
    out
}

/// Compares the swept Hamiltonian of a completed state against ED of the model.
pub fn compare(state: &BlockDiagState, model: &ChainModel) -> Result<OracleComparison> {
    guard(model, DENSE_GUARD)?;
    if !state.is_complete() {
        return Err(Error::CertificationFailed(format!(
            "sweep stopped at {}; comparison needs the final state",
            state.step()
        )));
    }
    let swept = assemble_full(state, model)?;
    let exact = ed_spectrum(model)?;
    let transformed = linalg::eigvalsh(&swept);
    let spectrum_distance = exact
        .iter()
        .zip(&transformed)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let vacuum = linalg::kron_vec_power(model.omega(), model.n());
    let ground_energy = vacuum.dotc(&(&swept * &vacuum)).re;
    let lowest = exact[0];
    Ok(OracleComparison {
        spectrum_distance,
        ground_energy_ed: lowest,
        gap_ed: linalg::cluster_gap(&exact, DEGENERACY_TOL).unwrap_or(0.0),
        ground_degeneracy: linalg::lowest_cluster(&exact, DEGENERACY_TOL),
        blockwise_match: (ground_energy - lowest).abs() <= 1e-8,
        low_clusters: clusters(&exact, DEGENERACY_TOL, REPORTED_CLUSTERS),
    })
}
