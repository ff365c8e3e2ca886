//! Dense complex linear algebra used throughout the crate: numerical
//! kernels with a scale-aware rank threshold, eigendecomposition of unitary
//! matrices and joint spectra of commuting unitary tuples.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::{circle_distance, normalize_angle};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative threshold under which a singular value counts as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;
/// Angular tolerance for merging eigenvalues on the unit circle.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;
pub const UNITARY_TOL: f64 = 1e-9;
pub const COMMUTATION_TOL: f64 = 1e-9;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Complex matrix from real row-major data.
pub fn real_matrix(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    assert_eq!(data.len(), rows * cols, "real_matrix: data length");
    CMatrix::from_fn(rows, cols, |i, j| c(data[i * cols + j], 0.0))
}

pub fn real_vector(data: &[f64]) -> CVector {
    CVector::from_iterator(data.len(), data.iter().map(|&x| c(x, 0.0)))
}

pub fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::structural("matrix has non-finite entries"))
    }
}

/// Singular values and right singular vectors of `m`, padded so that there
/// is exactly one singular value per column. Values are sorted in
/// decreasing order; column `j` of the returned matrix belongs to value `j`.
pub fn right_singular_system(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::structural(format!(
            "empty matrix of shape {rows}x{cols}"
        )));
    }
    check_finite(m)?;
    let padded = if rows < cols {
        let mut p = CMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::contract("singular value decomposition did not converge"))?;
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let v = CMatrix::from_fn(cols, cols, |i, j| v_t[(order[j], i)].conj());
    Ok((values, v))
}

/// Singular values, one per column, in decreasing order.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    Ok(right_singular_system(m)?.0)
}

/// `(sigma_min, sigma_max)` counting the implicit zeros of wide matrices.
pub fn sigma_extremes(m: &CMatrix) -> Result<(f64, f64)> {
    let s = singular_values(m)?;
    Ok((*s.last().unwrap(), s[0]))
}

/// Orthonormal basis (as columns) of the numerical kernel of `m`.
///
/// A singular value `s` counts as zero when `s <= tol * max(1, s_max)`.
pub fn numeric_kernel(m: &CMatrix, tol: f64) -> Result<CMatrix> {
    if !(tol > 0.0) {
        return Err(Error::usage("kernel tolerance must be positive"));
    }
    let (values, v) = right_singular_system(m)?;
    let threshold = tol * values[0].max(1.0);
    let first_zero = values.iter().position(|&s| s <= threshold).unwrap_or(values.len());
    Ok(v.columns(first_zero, values.len() - first_zero).into_owned())
}

/// Orthonormal basis for the column span of `m` (rank decided by `tol`).
pub fn orthonormal_span(m: &CMatrix, tol: f64) -> CMatrix {
    if m.ncols() == 0 {
        return m.clone();
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > tol * smax.max(1.0))
        .collect();
    CMatrix::from_fn(m.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

/// Cosines of the principal angles between the column spans of two
/// orthonormal bases, in decreasing order.
pub fn principal_cosines(a: &CMatrix, b: &CMatrix) -> Vec<f64> {
    if a.ncols() == 0 || b.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = (a.adjoint() * b).singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Whether two column sets span the same subspace, with all principal
/// angle cosines at least `1 - tol`.
pub fn same_span(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
    let qa = orthonormal_span(a, 1e-12);
    let qb = orthonormal_span(b, 1e-12);
    qa.ncols() == qb.ncols() && principal_cosines(&qa, &qb).iter().all(|&c| c >= 1.0 - tol)
}

/// `|<u, v>| / (|u| |v|)`.
pub fn parallelism(u: &CVector, v: &CVector) -> f64 {
    u.dotc(v).norm() / (u.norm() * v.norm())
}

/// Frobenius norm of `U^* U - I`.
pub fn unitary_defect(u: &CMatrix) -> f64 {
    let n = u.ncols();
    (u.adjoint() * u - CMatrix::identity(n, n)).norm()
}

/// `U^k` for unitary `U`; negative powers use the adjoint.
pub fn unitary_power(u: &CMatrix, k: i64) -> CMatrix {
    let base = if k < 0 { u.adjoint() } else { u.clone() };
    matrix_power(&base, k.unsigned_abs())
}

pub(crate) fn matrix_power(m: &CMatrix, mut k: u64) -> CMatrix {
    let n = m.nrows();
    let mut result = CMatrix::identity(n, n);
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Rescale `v` so that its first entry of largest modulus is real and
/// positive.
pub fn fix_phase(v: &CVector) -> CVector {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    match v.iter().find(|z| z.norm() >= max * (1.0 - 1e-9)) {
        Some(pivot) if max > 0.0 => v * (pivot.conj() / pivot.norm()),
        _ => v.clone(),
    }
}

#[derive(Clone, Debug)]
pub struct Eigenspace {
    pub value: Complex64,
    /// Orthonormal columns.
    pub basis: CMatrix,
}

/// Eigenvalues and eigenspaces of a unitary matrix. Eigenvalues closer than
/// `cluster_tol` radians are merged; the result is sorted by angle in
/// `[0, 2pi)`.
pub fn unitary_eigendecomposition(u: &CMatrix, cluster_tol: f64) -> Result<Vec<Eigenspace>> {
    if u.nrows() == 0 || u.nrows() != u.ncols() {
        return Err(Error::structural(format!(
            "unitary eigendecomposition needs a nonempty square matrix, got {}x{}",
            u.nrows(),
            u.ncols()
        )));
    }
    check_finite(u)?;
    let defect = unitary_defect(u);
    if defect > UNITARY_TOL {
        return Err(Error::contract(format!(
            "matrix is not unitary (|U*U - I| = {defect:.3e})"
        )));
    }
    let n = u.nrows();
    // U = C + iS with commuting Hermitian C, S; split by cos, then by sin
    let cos_part = (u + u.adjoint()) * c(0.5, 0.0);
    let sin_part = (u - u.adjoint()) * c(0.0, -0.5);
    let mut spaces: Vec<(f64, Eigenspace)> = Vec::new();
    for b in hermitian_clusters(&cos_part, cluster_tol) {
        let s = b.adjoint() * &sin_part * &b;
        for inner in hermitian_clusters(&s, cluster_tol) {
            let basis = &b * inner;
            let k = basis.ncols() as f64;
            let r = (basis.adjoint() * u * &basis).trace() / k;
            let value = r / r.norm();
            spaces.push((normalize_angle(value.arg()), Eigenspace { value, basis }));
        }
    }
    spaces.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut merged: Vec<(f64, Eigenspace)> = Vec::new();
    for (angle, space) in spaces {
        match merged.last_mut() {
            Some(last) if circle_distance(last.0, angle) < cluster_tol => absorb(&mut last.1, space),
            _ => merged.push((angle, space)),
        }
    }
    if merged.len() > 1 && circle_distance(merged[0].0, merged[merged.len() - 1].0) < cluster_tol {
        let (_, tail) = merged.pop().unwrap();
        absorb(&mut merged[0].1, tail);
    }
    debug_assert_eq!(merged.iter().map(|s| s.1.basis.ncols()).sum::<usize>(), n);
    let mut out: Vec<(f64, Eigenspace)> = merged
        .into_iter()
        .map(|(_, mut space)| {
            let r = (space.basis.adjoint() * u * &space.basis).trace();
            space.value = r / r.norm();
            let mut key = normalize_angle(space.value.arg());
            if circle_distance(key, 0.0) < cluster_tol {
                key = 0.0;
            }
            (key, space)
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out.into_iter().map(|(_, s)| s).collect())
}

fn absorb(into: &mut Eigenspace, other: Eigenspace) {
    let cols: Vec<CVector> = into
        .basis
        .column_iter()
        .chain(other.basis.column_iter())
        .map(|c| c.into_owned())
        .collect();
    into.basis = CMatrix::from_columns(&cols);
}

/// Orthonormal eigenvector bases of a Hermitian matrix, one per cluster of
/// eigenvalues closer than `tol`.
fn hermitian_clusters(h: &CMatrix, tol: f64) -> Vec<CMatrix> {
    let h = (h + h.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match clusters.last_mut() {
            Some(last) if eig.eigenvalues[i] - eig.eigenvalues[*last.last().unwrap()] < tol => last.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    clusters
        .into_iter()
        .map(|members| {
            CMatrix::from_columns(&members.iter().map(|&j| eig.eigenvectors.column(j).into_owned()).collect::<Vec<_>>())
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct JointEigenpair {
    /// One unit eigenvalue per operator in the tuple.
    pub lambda: Vec<Complex64>,
    /// Orthonormal columns spanning the joint eigenspace.
    pub eigenspace: CMatrix,
}

impl JointEigenpair {
    /// Largest `|T_j a - lambda_j a|` over basis columns and operators.
    pub fn residual(&self, ops: &[CMatrix]) -> f64 {
        let mut worst: f64 = 0.0;
        for (t, &l) in ops.iter().zip(&self.lambda) {
            let r = t * &self.eigenspace - &self.eigenspace * l;
            for col in r.column_iter() {
                worst = worst.max(col.norm());
            }
        }
        worst
    }

    pub fn dim(&self) -> usize {
        self.eigenspace.ncols()
    }
}

/// Joint spectrum of a tuple of pairwise commuting unitaries.
///
/// Follows the recursive construction: split the space into eigenspaces of
/// the first operator, restrict the next operator to each (invariant)
/// eigenspace and repeat. Output order follows the operator order and the
/// angle order of each eigendecomposition.
pub fn joint_spectrum(ops: &[CMatrix], cluster_tol: f64) -> Result<Vec<JointEigenpair>> {
    let dim = match ops.first() {
        Some(t) => t.nrows(),
        None => return Err(Error::structural("joint spectrum of an empty tuple")),
    };
    if dim == 0 {
        return Err(Error::structural("joint spectrum on a zero-dimensional space"));
    }
    for (i, t) in ops.iter().enumerate() {
        if t.shape() != (dim, dim) {
            return Err(Error::structural(format!(
                "operator {i} has shape {:?}, expected {dim}x{dim}",
                t.shape()
            )));
        }
        check_finite(t)?;
        let defect = unitary_defect(t);
        if defect > UNITARY_TOL {
            return Err(Error::contract(format!(
                "operator {i} is not unitary (|U*U - I| = {defect:.3e})"
            )));
        }
    }
    for i in 0..ops.len() {
        for j in i + 1..ops.len() {
            let comm = (&ops[i] * &ops[j] - &ops[j] * &ops[i]).norm();
            if comm > COMMUTATION_TOL {
                return Err(Error::contract(format!(
                    "operators {i} and {j} do not commute (|[T_i, T_j]| = {comm:.3e})"
                )));
            }
        }
    }

    let mut out = Vec::new();
    refine(ops, CMatrix::identity(dim, dim), Vec::new(), cluster_tol, &mut out)?;
    for pair in &mut out {
        if pair.eigenspace.ncols() == 1 {
            let v = fix_phase(&pair.eigenspace.column(0).into_owned());
            pair.eigenspace.set_column(0, &v);
        }
    }
    Ok(out)
}

fn refine(
    ops: &[CMatrix],
    basis: CMatrix,
    prefix: Vec<Complex64>,
    cluster_tol: f64,
    out: &mut Vec<JointEigenpair>,
) -> Result<()> {
    let Some((head, rest)) = ops.split_first() else {
        out.push(JointEigenpair {
            lambda: prefix,
            eigenspace: basis,
        });
        return Ok(());
    };
    let restricted = basis.adjoint() * head * &basis;
    let defect = unitary_defect(&restricted);
    if defect > 1e3 * UNITARY_TOL {
        return Err(Error::contract(format!(
            "eigenspace is not invariant under operator {} (defect {defect:.3e})",
            prefix.len()
        )));
    }
    // Restriction of a unitary to an invariant subspace is unitary up to
    // rounding; re-unitarise before clustering.
    let restricted = nearest_unitary(&restricted);
    for space in unitary_eigendecomposition(&restricted, cluster_tol)? {
        let mut lambda = prefix.clone();
        lambda.push(space.value);
        refine(rest, &basis * &space.basis, lambda, cluster_tol, out)?;
    }
    Ok(())
}

/// Polar factor of a square matrix.
fn nearest_unitary(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

/// Angle of a unit complex number in `[0, 2pi)`.
pub fn unit_angle(z: Complex64) -> f64 {
    let a = normalize_angle(z.arg());
    if a >= TAU {
        0.0
    } else {
        a
    }
}
