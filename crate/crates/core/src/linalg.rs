//! Deterministic dense linear-algebra kernels.
//!
//! Rank-revealing orthonormal basis extraction is done with column-pivoted
//! modified Gram–Schmidt plus one re-orthogonalization pass. At each step the
//! remaining column with the largest residual norm is selected and accepted
//! while its norm exceeds `rank_rel × (largest initial column norm)`. Ties go
//! to the lowest column index and every accepted vector gets a fixed sign
//! (first nonzero coordinate positive), so results are bit-deterministic for
//! a fixed input.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{dot, norm2, Matrix};

/// Numerical thresholds: `rank_rel` drives rank decisions, `check_abs`
/// drives invariant assertions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerance {
    rank_rel: f64,
    check_abs: f64,
}

impl Tolerance {
    pub const DEFAULT_RANK_REL: f64 = 1e-10;
    pub const DEFAULT_CHECK_ABS: f64 = 1e-9;

    pub fn new(rank_rel: f64, check_abs: f64) -> Result<Self> {
        for (name, v) in [("rank_rel", rank_rel), ("check_abs", check_abs)] {
            if !(v > 0.0 && v < 1e-2) {
                return Err(Error::Tolerance(format!(
                    "{name} must lie in (0, 1e-2), got {v}"
                )));
            }
        }
        Ok(Self {
            rank_rel,
            check_abs,
        })
    }

    pub fn rank_rel(&self) -> f64 {
        self.rank_rel
    }

    pub fn check_abs(&self) -> f64 {
        self.check_abs
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rank_rel: Self::DEFAULT_RANK_REL,
            check_abs: Self::DEFAULT_CHECK_ABS,
        }
    }
}

/// Ordered orthonormal vectors spanning a subspace of `R^{ambient_dim}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    ambient_dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl OrthonormalBasis {
    /// Maximum allowed deviation of each vector's norm from 1.
    pub const NORM_TOL: f64 = 1e-12;
    /// Maximum allowed pairwise inner product magnitude.
    pub const ORTHO_TOL: f64 = 1e-10;

    /// Validating constructor for externally supplied vectors.
    pub fn from_vectors(ambient_dim: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if vectors.len() > ambient_dim {
            return Err(Error::Dimension(format!(
                "{} vectors exceed ambient dimension {ambient_dim}",
                vectors.len()
            )));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != ambient_dim {
                return Err(Error::Dimension(format!(
                    "vector {i} has length {}, expected {ambient_dim}",
                    v.len()
                )));
            }
            if (norm2(v) - 1.0).abs() > Self::NORM_TOL {
                return Err(Error::Validation(format!(
                    "vector {i} is not unit norm: |v| = {}",
                    norm2(v)
                )));
            }
            for (j, w) in vectors[..i].iter().enumerate() {
                let d = dot(v, w).abs();
                if d > Self::ORTHO_TOL {
                    return Err(Error::Validation(format!(
                        "vectors {j} and {i} are not orthogonal: |<v,w>| = {d}"
                    )));
                }
            }
        }
        Ok(Self {
            ambient_dim,
            vectors,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn count(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Worst norm deviation and worst pairwise inner product, for tests.
    pub fn orthonormality_error(&self) -> (f64, f64) {
        let mut norm_err: f64 = 0.0;
        let mut ortho_err: f64 = 0.0;
        for (i, v) in self.vectors.iter().enumerate() {
            norm_err = norm_err.max((norm2(v) - 1.0).abs());
            for w in &self.vectors[..i] {
                ortho_err = ortho_err.max(dot(v, w).abs());
            }
        }
        (norm_err, ortho_err)
    }
}

/// Appends a column of ones: `T ↦ [T, 1]`.
pub fn augment_ones(t: &Matrix) -> Matrix {
    let mut data = Vec::with_capacity(t.rows() * (t.cols() + 1));
    for i in 0..t.rows() {
        data.extend_from_slice(t.row(i));
        data.push(1.0);
    }
    Matrix::new(t.rows(), t.cols() + 1, data).expect("augmenting a valid matrix stays valid")
}

/// Makes the first coordinate with magnitude above 1e-12 positive.
fn fix_sign(v: &mut [f64]) {
    if let Some(&lead) = v.iter().find(|x| x.abs() > 1e-12) {
        if lead < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
}

fn subtract_projection(v: &mut [f64], basis: &[Vec<f64>]) {
    for u in basis {
        let c = dot(v, u);
        for (x, &ui) in v.iter_mut().zip(u) {
            *x -= c * ui;
        }
    }
}

/// Greedy pivoted MGS over `candidates`: repeatedly accept the candidate with
/// the largest residual norm while it exceeds `threshold`, orthogonalizing
/// the rest against each accepted vector. `preortho` holds vectors the
/// candidates are already (approximately) orthogonal to; accepted vectors are
/// re-orthogonalized against both sets before normalization.
fn pivoted_mgs(
    mut candidates: Vec<Vec<f64>>,
    preortho: &[Vec<f64>],
    threshold: f64,
    max_count: usize,
) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alive: Vec<usize> = (0..candidates.len()).collect();

    while basis.len() < max_count && !alive.is_empty() {
        let (pos, best_norm) = alive
            .iter()
            .enumerate()
            .map(|(pos, &j)| (pos, norm2(&candidates[j])))
            .fold((0, f64::NEG_INFINITY), |acc, cur| {
                if cur.1 > acc.1 {
                    cur
                } else {
                    acc
                }
            });
        if best_norm <= threshold {
            break;
        }
        // `alive` stays index-ordered so norm ties resolve to the lowest column
        let j = alive.remove(pos);
        let mut v = std::mem::take(&mut candidates[j]);
        for x in v.iter_mut() {
            *x /= best_norm;
        }
        // one refinement pass cleans up rounding left by the running updates
        subtract_projection(&mut v, preortho);
        subtract_projection(&mut v, &basis);
        let n = norm2(&v);
        if n <= threshold {
            continue;
        }
        for x in v.iter_mut() {
            *x /= n;
        }
        fix_sign(&mut v);
        for &k in &alive {
            let c = dot(&candidates[k], &v);
            for (x, &vi) in candidates[k].iter_mut().zip(&v) {
                *x -= c * vi;
            }
        }
        basis.push(v);
    }
    basis
}

/// Orthonormal basis of the column space `Im(m)`; its size is the numerical
/// rank of `m` under `tol.rank_rel`.
pub fn column_space_basis(m: &Matrix, tol: &Tolerance) -> OrthonormalBasis {
    let columns: Vec<Vec<f64>> = (0..m.cols()).map(|j| m.column(j)).collect();
    let max_norm = columns.iter().map(|c| norm2(c)).fold(0.0, f64::max);
    if max_norm == 0.0 {
        return OrthonormalBasis {
            ambient_dim: m.rows(),
            vectors: Vec::new(),
        };
    }
    let vectors = pivoted_mgs(columns, &[], tol.rank_rel * max_norm, m.rows());
    OrthonormalBasis {
        ambient_dim: m.rows(),
        vectors,
    }
}

/// Numerical rank of `m`.
pub fn rank(m: &Matrix, tol: &Tolerance) -> usize {
    column_space_basis(m, tol).count()
}

/// Orthonormal basis of `Im(m)^⊥ = Ker(m')` inside `R^{rows(m)}`.
///
/// Exactly `rows(m) − rank(m)` vectors are returned, so rank–nullity holds
/// by construction.
pub fn null_space_basis(m: &Matrix, tol: &Tolerance) -> OrthonormalBasis {
    let image = column_space_basis(m, tol);
    let n = m.rows();
    let want = n - image.count();
    if want == 0 {
        return OrthonormalBasis {
            ambient_dim: n,
            vectors: Vec::new(),
        };
    }
    // residuals of the standard basis against Im(m) span the complement
    let candidates: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            subtract_projection(&mut e, image.vectors());
            e
        })
        .collect();
    let vectors = pivoted_mgs(candidates, image.vectors(), tol.rank_rel, want);
    debug_assert_eq!(vectors.len(), want);
    OrthonormalBasis {
        ambient_dim: n,
        vectors,
    }
}

/// Orthogonal projection `v ↦ Σ_i (v·u_i) u_i` onto the basis span.
pub fn project_onto(v: &[f64], basis: &OrthonormalBasis) -> Result<Vec<f64>> {
    if v.len() != basis.ambient_dim() {
        return Err(Error::Dimension(format!(
            "vector length {} does not match ambient dimension {}",
            v.len(),
            basis.ambient_dim()
        )));
    }
    let mut out = vec![0.0; v.len()];
    for u in basis.vectors() {
        let c = dot(v, u);
        for (o, &ui) in out.iter_mut().zip(u) {
            *o += c * ui;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn tolerance_bounds_enforced() {
        assert!(Tolerance::new(1e-10, 1e-9).is_ok());
        assert!(Tolerance::new(0.0, 1e-9).is_err());
        assert!(Tolerance::new(1e-10, 0.5).is_err());
        assert!(Tolerance::new(-1e-10, 1e-9).is_err());
    }

    #[test]
    fn augment_ones_appends_column() {
        let t = Matrix::from_rows(&[vec![1.0], vec![0.0], vec![0.0]]).unwrap();
        let a = augment_ones(&t);
        assert_eq!(
            a,
            Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap()
        );

        let z = Matrix::zeros(3, 2).unwrap();
        let az = augment_ones(&z);
        for i in 0..3 {
            assert_eq!(az.row(i), &[0.0, 0.0, 1.0]);
        }

        let single = Matrix::from_rows(&[vec![2.0, 3.0]]).unwrap();
        assert_eq!(augment_ones(&single).row(0), &[2.0, 3.0, 1.0]);
    }

    #[test]
    fn column_basis_spans_input_columns() {
        let m = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let b = column_space_basis(&m, &tol());
        assert_eq!(b.count(), 2);
        // every column reconstructs from the basis with negligible residual
        for j in 0..m.cols() {
            let col = m.column(j);
            let proj = project_onto(&col, &b).unwrap();
            let res: f64 = col
                .iter()
                .zip(&proj)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-12, "column {j} residual {res}");
        }
    }

    #[test]
    fn column_basis_full_rank_identity() {
        let m = Matrix::identity(3).unwrap();
        let b = column_space_basis(&m, &tol());
        assert_eq!(b.count(), 3);
        let (ne, oe) = b.orthonormality_error();
        assert!(ne <= OrthonormalBasis::NORM_TOL);
        assert!(oe <= OrthonormalBasis::ORTHO_TOL);
    }

    #[test]
    fn column_basis_rank_one() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        let b = column_space_basis(&m, &tol());
        assert_eq!(b.count(), 1);
        let s = 5.0_f64.sqrt();
        let v = &b.vectors()[0];
        assert!((v[0] - 1.0 / s).abs() < 1e-12 && (v[1] - 2.0 / s).abs() < 1e-12);
        // the second column projects with zero residual
        let col = m.column(1);
        let proj = project_onto(&col, &b).unwrap();
        for (a, p) in col.iter().zip(&proj) {
            assert!((a - p).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_examples() {
        let m = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(rank(&m, &tol()), 2);
        assert_eq!(rank(&Matrix::zeros(4, 3).unwrap(), &tol()), 0);
        assert_eq!(rank(&Matrix::identity(5).unwrap(), &tol()), 5);
    }

    #[test]
    fn null_space_of_augmented_line() {
        let m = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let b = null_space_basis(&m, &tol());
        assert_eq!(b.count(), 1);
        let v = &b.vectors()[0];
        let s = 2.0_f64.sqrt();
        // sign convention: first nonzero coordinate positive
        assert!(v[0].abs() < 1e-12);
        assert!((v[1] - 1.0 / s).abs() < 1e-12);
        assert!((v[2] + 1.0 / s).abs() < 1e-12);
        // kernel membership: m' v = 0
        let mt = m.transpose();
        for i in 0..mt.rows() {
            assert!(dot(mt.row(i), v).abs() <= tol().check_abs());
        }
    }

    #[test]
    fn null_space_degenerate_cases() {
        assert!(null_space_basis(&Matrix::identity(3).unwrap(), &tol()).is_empty());
        let z = Matrix::zeros(3, 2).unwrap();
        assert_eq!(null_space_basis(&z, &tol()).count(), 3);
    }

    #[test]
    fn one_by_one_matrices_supported() {
        let m = Matrix::from_rows(&[vec![3.0]]).unwrap();
        assert_eq!(rank(&m, &tol()), 1);
        assert!(null_space_basis(&m, &tol()).is_empty());
        let z = Matrix::from_rows(&[vec![0.0]]).unwrap();
        assert_eq!(rank(&z, &tol()), 0);
        assert_eq!(null_space_basis(&z, &tol()).count(), 1);
    }

    #[test]
    fn projection_worked_example() {
        let m = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let b = column_space_basis(&m, &tol());
        let p = project_onto(&[0.5, 0.3, 0.2], &b).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12);
        assert!((p[1] - 0.25).abs() < 1e-12);
        assert!((p[2] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn projection_empty_basis_is_zero() {
        let b = OrthonormalBasis::from_vectors(3, vec![]).unwrap();
        assert_eq!(project_onto(&[1.0, 2.0, 3.0], &b).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn projection_fixes_vectors_in_span() {
        let m = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let b = column_space_basis(&m, &tol());
        let v = m.column(1);
        let p = project_onto(&v, &b).unwrap();
        for (a, x) in v.iter().zip(&p) {
            assert!((a - x).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_dimension_mismatch() {
        let b = OrthonormalBasis::from_vectors(3, vec![vec![1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(
            project_onto(&[1.0, 2.0], &b),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn from_vectors_validates() {
        assert!(OrthonormalBasis::from_vectors(2, vec![vec![1.0, 1.0]]).is_err());
        assert!(OrthonormalBasis::from_vectors(2, vec![vec![1.0, 0.0], vec![1.0, 0.0]]).is_err());
        assert!(OrthonormalBasis::from_vectors(1, vec![vec![1.0], vec![1.0]]).is_err());
    }
}
