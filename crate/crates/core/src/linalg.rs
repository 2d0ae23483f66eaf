//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Singular value decomposition with the full right factor and values sorted
/// in decreasing order. Returns `(singular_values, v)` where the columns of
/// `v` are the right singular vectors.
pub(crate) fn svd_full_right(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let (m, n) = a.shape();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let padded = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested right factor");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut v = DMatrix::zeros(n, order.len());
    for (k, &i) in order.iter().enumerate() {
        v.set_column(k, &vt.row(i).transpose());
    }
    (values, v)
}

fn rank_from_values(values: &[f64], rel_tol: f64, abs_floor: f64) -> usize {
    let top = values.first().copied().unwrap_or(0.0);
    if top <= abs_floor {
        return 0;
    }
    values.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Orthonormal basis (as columns) of the null space of `a`.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let (values, v) = svd_full_right(a);
    let r = rank_from_values(&values, rel_tol, 1e-300);
    v.columns(r, n - r).into_owned()
}

/// Numerical rank of `a`.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let (values, _) = svd_full_right(a);
    rank_from_values(&values, rel_tol, 1e-300)
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    if a.nrows() == 0 {
        return DVector::zeros(a.ncols());
    }
    let svd = a.clone().svd(true, true);
    let top = svd.singular_values.max();
    let eps = (rel_tol * top).max(1e-300);
    svd.solve(b, eps)
        .unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

/// Affine hull of a point cloud stored as rows of `points`.
#[derive(Debug, Clone)]
pub struct AffineHull {
    pub origin: DVector<f64>,
    /// Orthonormal basis of the direction space, one column per direction.
    pub basis: DMatrix<f64>,
    /// Orthonormal basis of the orthogonal complement.
    pub complement: DMatrix<f64>,
}

impl AffineHull {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Coordinates of `x` in the hull basis.
    pub fn to_local(&self, x: &DVector<f64>) -> DVector<f64> {
        self.basis.tr_mul(&(x - &self.origin))
    }

    pub fn to_ambient(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.origin + &self.basis * y
    }
}

pub fn affine_hull(points: &DMatrix<f64>, rel_tol: f64) -> AffineHull {
    let (m, d) = points.shape();
    let origin = if m == 0 {
        DVector::zeros(d)
    } else {
        points.row_mean().transpose()
    };
    let mut centered = points.clone();
    for mut row in centered.row_iter_mut() {
        row -= origin.transpose();
    }
    let scale = points.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    let (values, v) = svd_full_right(&centered);
    let top = values.first().copied().unwrap_or(0.0);
    let r = if top <= rel_tol * scale {
        0
    } else {
        values.iter().filter(|&&s| s > rel_tol * top).count()
    };
    let v = if v.nrows() == 0 {
        DMatrix::identity(d, d)
    } else {
        v
    };
    AffineHull {
        origin,
        basis: v.columns(0, r).into_owned(),
        complement: v.columns(r, d - r).into_owned(),
    }
}

/// Symmetric eigen-decomposition with eigenvalues sorted increasingly.
pub fn sym_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    let (values, _) = sym_eigen(a);
    values[0]
}

/// Symmetric square root of a symmetric positive semidefinite matrix.
pub fn sym_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (values, vectors) = sym_eigen(a);
    let roots = DVector::from_iterator(values.len(), values.iter().map(|v| v.max(0.0).sqrt()));
    &vectors * DMatrix::from_diagonal(&roots) * vectors.transpose()
}

/// Row indices of `[a | b]` forming a maximal linearly independent subset,
/// in increasing order. Rows beyond the rank are dependent.
pub fn independent_rows(a: &DMatrix<f64>, rel_tol: f64) -> Vec<usize> {
    let m = a.nrows();
    let mut kept: Vec<DVector<f64>> = Vec::new();
    let mut out = Vec::new();
    let scale = a.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if scale == 0.0 {
        return out;
    }
    for i in 0..m {
        let mut r = a.row(i).transpose();
        let norm0 = r.norm();
        if norm0 <= rel_tol * scale {
            continue;
        }
        // two passes of Gram-Schmidt for stability
        for _ in 0..2 {
            for q in &kept {
                let proj = q.dot(&r);
                r.axpy(-proj, q, 1.0);
            }
        }
        let norm = r.norm();
        if norm > 1e3 * rel_tol * norm0.max(scale) {
            kept.push(r / norm);
            out.push(i);
        }
    }
    out
}

pub fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Volume of the unit Euclidean ball in `n` dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    let mut v = [1.0, 2.0];
    if n < 2 {
        return v[n];
    }
    let mut vol = 0.0;
    for k in 2..=n {
        vol = 2.0 * std::f64::consts::PI / k as f64 * v[k % 2];
        v[k % 2] = vol;
    }
    vol
}

pub(crate) fn matrix_from_rows(rows: &[DVector<f64>], ncols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows.len(), ncols);
    for (i, r) in rows.iter().enumerate() {
        m.set_row(i, &r.transpose());
    }
    m
}

pub(crate) fn vstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let ncols = a.ncols().max(b.ncols());
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), ncols);
    if a.nrows() > 0 {
        out.view_mut((0, 0), a.shape()).copy_from(a);
    }
    if b.nrows() > 0 {
        out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    }
    out
}

pub(crate) fn vcat(a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
}

pub(crate) fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

pub(crate) fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let nrows = a.nrows().max(b.nrows());
    let mut out = DMatrix::zeros(nrows, a.ncols() + b.ncols());
    if a.ncols() > 0 {
        out.view_mut((0, 0), a.shape()).copy_from(a);
    }
    if b.ncols() > 0 {
        out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_row() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let z = null_space(&a, 1e-10);
        assert_eq!(z.ncols(), 2);
        assert!((&a * &z).norm() < 1e-12);
    }

    #[test]
    fn affine_hull_of_segment() {
        let p = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]);
        let h = affine_hull(&p, 1e-10);
        assert_eq!(h.dim(), 1);
        assert_eq!(h.complement.ncols(), 1);
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(unit_ball_volume(1), 2.0);
    }

    #[test]
    fn independent_rows_drops_duplicates() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 0.0, 0.0, 1.0]);
        assert_eq!(independent_rows(&a, 1e-10), vec![0, 2]);
    }
}
