//! Dense complex linear algebra helpers built on `nalgebra`.
//!
//! Everything here operates on small dense matrices (dimension at most a few
//! thousand). Hermitian eigenproblems go through `SymmetricEigen`, which
//! handles complex Hermitian input.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
pub use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[inline]
pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Eigenvalues (ascending) and matching eigenvectors (columns) of a Hermitian matrix.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut vals: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5)
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Frobenius norm of `m − m†`.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    frobenius(&(m - m.adjoint()))
}

/// Frobenius norm of `m + m†`.
pub fn anti_hermiticity_defect(m: &CMat) -> f64 {
    frobenius(&(m + m.adjoint()))
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Spectral norm of a normal matrix.
///
/// Hermitian and anti-Hermitian inputs use their eigenvalues directly; other
/// normal matrices use `‖A‖² = λ_max(A†A)`.
pub fn spectral_norm(m: &CMat, tol: f64) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let scale = 1.0 + frobenius(m);
    if hermiticity_defect(m) <= tol * scale {
        return Ok(eigvalsh(m).iter().fold(0.0, |acc, v| acc.max(v.abs())));
    }
    if anti_hermiticity_defect(m) <= tol * scale {
        let h = m * I;
        return Ok(eigvalsh(&h).iter().fold(0.0, |acc, v| acc.max(v.abs())));
    }
    let mm = m.adjoint() * m;
    let normality = frobenius(&(&mm - m * m.adjoint()));
    if normality > tol * scale * scale {
        return Err(Error::Unsupported(format!(
            "operator norm requested for a non-normal matrix (‖AA† − A†A‖ = {normality:e})"
        )));
    }
    let top = eigvalsh(&mm).last().copied().unwrap_or(0.0);
    Ok(top.max(0.0).sqrt())
}

/// `e^S` for anti-Hermitian `S`, built from the spectral decomposition of the
/// Hermitian matrix `iS` so the result is unitary to rounding.
pub fn exp_anti_hermitian(s: &CMat) -> CMat {
    let h = s * I;
    let (vals, vecs) = eigh(&h);
    // S = −i·h, so e^S = V diag(e^{−iλ}) V†
    let mut scaled = vecs.clone();
    for (j, lambda) in vals.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -lambda);
        for z in scaled.column_mut(j).iter_mut() {
            *z *= phase;
        }
    }
    scaled * vecs.adjoint()
}

/// Inverse of a Hermitian positive-definite matrix shifted by `shift`,
/// i.e. `(m − shift)^{-1}`, via its eigendecomposition. Returns the inverse and
/// the smallest eigenvalue of `m − shift`.
pub fn shifted_inverse(m: &CMat, shift: f64) -> (CMat, f64) {
    let (vals, vecs) = eigh(m);
    let mut scaled = vecs.clone();
    for (j, lambda) in vals.iter().enumerate() {
        let inv = 1.0 / (lambda - shift);
        for z in scaled.column_mut(j).iter_mut() {
            *z *= inv;
        }
    }
    let lowest = vals.first().map(|v| v - shift).unwrap_or(f64::INFINITY);
    (scaled * vecs.adjoint(), lowest)
}

/// Unitary `M×M` matrix whose first column is the unit vector `first`.
/// Remaining columns are completed by Gram–Schmidt against the standard basis.
pub fn complete_basis(first: &CVec) -> CMat {
    let m = first.len();
    let mut cols: Vec<CVec> = Vec::with_capacity(m);
    cols.push(first.normalize());
    for e in 0..m {
        if cols.len() == m {
            break;
        }
        let mut v = CVec::zeros(m);
        v[e] = ONE;
        for u in &cols {
            let proj = u.dotc(&v);
            v -= u * proj;
        }
        // second pass for numerical orthogonality
        for u in &cols {
            let proj = u.dotc(&v);
            v -= u * proj;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / c(norm));
        }
    }
    CMat::from_columns(&cols)
}

/// Kronecker power of a vector.
pub fn kron_vec_power(v: &CVec, times: usize) -> CVec {
    let mut out = CVec::from_element(1, ONE);
    for _ in 0..times {
        out = out.kronecker(v);
    }
    out
}

/// Kronecker power of a matrix.
pub fn kron_power(m: &CMat, times: usize) -> CMat {
    let mut out = CMat::identity(1, 1);
    for _ in 0..times {
        out = out.kronecker(m);
    }
    out
}

/// Number of eigenvalues within `tol` of the lowest one.
pub fn lowest_cluster(sorted: &[f64], tol: f64) -> usize {
    match sorted.first() {
        None => 0,
        Some(&lo) => sorted.iter().take_while(|&&v| v - lo <= tol).count(),
    }
}

/// Distance from the lowest eigenvalue to the first eigenvalue outside the lowest cluster.
pub fn cluster_gap(sorted: &[f64], tol: f64) -> Option<f64> {
    let lo = *sorted.first()?;
    sorted.iter().find(|&&v| v - lo > tol).map(|v| v - lo)
}
