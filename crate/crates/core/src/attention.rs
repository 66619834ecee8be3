//! Efficient attention and the identifiability machinery around it.
//!
//! `efficient_attention` projects each row of an attention matrix onto
//! `Im([T,1]) = Ker([T,1]')^⊥`, the unique decomposition that preserves the
//! product `A·T`, keeps rows summing to one and keeps weights nonnegative.
//! `effective_attention_brunner` is the older baseline that projects onto
//! `Im(T)` and loses the probability structure.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{augment_ones, column_space_basis, project_onto, rank, Tolerance};
use crate::matrix::Matrix;

/// Row-stochastic square matrix (softmax output).
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMatrix {
    inner: Matrix,
}

impl AttentionMatrix {
    /// Validates squareness, nonnegativity (within `tol.check_abs`) and unit
    /// row sums before wrapping.
    pub fn new(inner: Matrix, tol: &Tolerance) -> Result<Self> {
        if !inner.is_square() {
            return Err(Error::Dimension(format!(
                "attention matrix must be square, got {}x{}",
                inner.rows(),
                inner.cols()
            )));
        }
        let violations = validate_distribution(&inner, tol);
        if let Some(v) = violations.first() {
            return Err(Error::Distribution(format!(
                "row {}: {:?} violation of magnitude {:.3e} ({} total)",
                v.row,
                v.kind,
                v.magnitude,
                violations.len()
            )));
        }
        Ok(Self { inner })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn into_matrix(self) -> Matrix {
        self.inner
    }

    /// Sequence length `d_s`.
    pub fn dim(&self) -> usize {
        self.inner.rows()
    }
}

/// The contextualization carrier `T = E·W_V·H` paired with an attention
/// matrix of matching row count.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenStates {
    inner: Matrix,
}

impl HiddenStates {
    pub fn new(inner: Matrix) -> Self {
        Self { inner }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.inner
    }

    pub fn rows(&self) -> usize {
        self.inner.rows()
    }

    pub fn cols(&self) -> usize {
        self.inner.cols()
    }
}

/// Row-wise split `A = A♯ + A⊥` with `A⊥` rows in `Im([T,1])` and `A♯` rows
/// in `Ker([T,1]')`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub a_perp: Matrix,
    pub a_sharp: Matrix,
}

/// Rank facts deciding whether `A ↦ A·T` is injective.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentifiabilityVerdict {
    pub d_s: usize,
    /// Head dimension used for the Prop-2 style bound; falls back to the
    /// column count of `T` when the caller does not supply one.
    pub d_v: usize,
    pub rank_t: usize,
    pub rank_t1: usize,
    /// `d_s − rank([T,1])`.
    pub kernel_dim: usize,
    /// `rank(T) = d_s`.
    pub raw_identifiable: bool,
    /// `rank([T,1]) = d_s`, i.e. the kernel is trivial.
    pub stochastic_identifiable: bool,
    /// `d_s > d_v + 1`, which suffices for non-identifiability.
    pub dimension_sufficient_nonident: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Negative,
    RowSum,
}

/// One probability-constraint violation found by [`validate_distribution`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub row: usize,
    pub kind: ViolationKind,
    pub magnitude: f64,
}

/// Projects every row of `m` onto `Im([T,1])`. Returns `m` unchanged when
/// `[T,1]` spans all of `R^{d_s}` (the identifiable case, where the
/// projection is the identity).
pub fn project_rows_onto_image(m: &Matrix, t: &HiddenStates, tol: &Tolerance) -> Result<Matrix> {
    if m.cols() != t.rows() {
        return Err(Error::Dimension(format!(
            "cannot project rows of length {} onto a subspace of R^{}",
            m.cols(),
            t.rows()
        )));
    }
    let basis = column_space_basis(&augment_ones(t.matrix()), tol);
    if basis.count() == t.rows() {
        return Ok(m.clone());
    }
    let mut data = Vec::with_capacity(m.rows() * m.cols());
    for i in 0..m.rows() {
        data.extend(project_onto(m.row(i), &basis)?);
    }
    Matrix::new(m.rows(), m.cols(), data)
}

fn check_pair(a: &AttentionMatrix, t: &HiddenStates) -> Result<()> {
    if a.dim() != t.rows() {
        return Err(Error::Dimension(format!(
            "attention is {0}x{0} but hidden states have {1} rows",
            a.dim(),
            t.rows()
        )));
    }
    Ok(())
}

fn product_error(a: &Matrix, b: &Matrix, t: &Matrix) -> Result<f64> {
    Ok(a.matmul(t)?.sub(&b.matmul(t)?)?.max_abs())
}

/// Clamps entries in `[-tol.check_abs, 0)` to zero and renormalizes any row
/// that was touched.
fn clamp_rows(m: Matrix, tol: &Tolerance) -> Matrix {
    let (rows, cols) = (m.rows(), m.cols());
    let mut data = m.data().to_vec();
    for i in 0..rows {
        let row = &mut data[i * cols..(i + 1) * cols];
        let mut touched = false;
        for x in row.iter_mut() {
            if *x < 0.0 && *x >= -tol.check_abs() {
                *x = 0.0;
                touched = true;
            }
        }
        if touched {
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                for x in row.iter_mut() {
                    *x /= sum;
                }
            }
        }
    }
    Matrix::new(rows, cols, data).expect("clamping preserves validity")
}

fn efficient_attention_impl(
    a: &AttentionMatrix,
    t: &HiddenStates,
    tol: &Tolerance,
    validate: bool,
) -> Result<Matrix> {
    check_pair(a, t)?;
    let raw = project_rows_onto_image(a.matrix(), t, tol)?;
    if validate {
        let prod_err = product_error(a.matrix(), &raw, t.matrix())?;
        if prod_err > tol.check_abs() {
            return Err(Error::Validation(format!(
                "prediction not preserved: |A_eff·T - A·T|_inf = {prod_err:.3e}"
            )));
        }
        let row_err = raw
            .row_sums()
            .iter()
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max);
        if row_err > tol.check_abs() {
            return Err(Error::Validation(format!(
                "row sums drifted from 1 by {row_err:.3e}"
            )));
        }
        let min = raw.min_entry();
        if min < -tol.check_abs() {
            return Err(Error::Validation(format!(
                "negative weight {min:.3e} below -check_abs"
            )));
        }
    }
    Ok(clamp_rows(raw, tol))
}

/// `A_eff = proj_{Ker([T,1]')^⊥}(A)`, row by row.
///
/// Asserts its three guarantees (product preservation, unit row sums,
/// nonnegativity) and fails with [`Error::Validation`] if any drifts beyond
/// `tol.check_abs`. Entries in `[-check_abs, 0)` are clamped to zero and the
/// affected rows renormalized.
pub fn efficient_attention(
    a: &AttentionMatrix,
    t: &HiddenStates,
    tol: &Tolerance,
) -> Result<Matrix> {
    efficient_attention_impl(a, t, tol, true)
}

/// [`efficient_attention`] with the guarantee assertions switched off.
pub fn efficient_attention_unvalidated(
    a: &AttentionMatrix,
    t: &HiddenStates,
    tol: &Tolerance,
) -> Result<Matrix> {
    efficient_attention_impl(a, t, tol, false)
}

/// Baseline projection onto `Im(T)` (no ones column). Preserves `A·T` but
/// not row sums or nonnegativity.
pub fn effective_attention_brunner(
    a: &AttentionMatrix,
    t: &HiddenStates,
    tol: &Tolerance,
) -> Result<Matrix> {
    check_pair(a, t)?;
    let basis = column_space_basis(t.matrix(), tol);
    let projected = if basis.count() == t.rows() {
        a.matrix().clone()
    } else {
        let mut data = Vec::with_capacity(a.dim() * a.dim());
        for i in 0..a.dim() {
            data.extend(project_onto(a.matrix().row(i), &basis)?);
        }
        Matrix::new(a.dim(), a.dim(), data)?
    };
    let prod_err = product_error(a.matrix(), &projected, t.matrix())?;
    if prod_err > tol.check_abs() {
        return Err(Error::Validation(format!(
            "baseline projection broke A·T by {prod_err:.3e}"
        )));
    }
    Ok(projected)
}

/// Splits `A` into `A⊥` (rows in `Im([T,1])`) and `A♯ = A − A⊥` (rows in
/// `Ker([T,1]')`). Uses the raw projection so the split is exact.
pub fn decompose(a: &AttentionMatrix, t: &HiddenStates, tol: &Tolerance) -> Result<Decomposition> {
    check_pair(a, t)?;
    let a_perp = project_rows_onto_image(a.matrix(), t, tol)?;
    let a_sharp = a.matrix().sub(&a_perp)?;
    Ok(Decomposition { a_perp, a_sharp })
}

/// Rank computations behind Props 1–2: raw identifiability is
/// `rank(T) = d_s`, the stochastic variant is `rank([T,1]) = d_s`.
pub fn identifiability(
    t: &HiddenStates,
    d_v: Option<usize>,
    tol: &Tolerance,
) -> Result<IdentifiabilityVerdict> {
    let d_s = t.rows();
    let rank_t = rank(t.matrix(), tol);
    let rank_t1 = rank(&augment_ones(t.matrix()), tol);
    let kernel_dim = d_s - rank_t1;
    let d_v_eff = d_v.unwrap_or(t.cols());
    let bound = d_s.saturating_sub(d_v_eff + 1);
    if kernel_dim < bound {
        // rank(T) exceeded the claimed head dimension, so the supplied d_v
        // cannot be a true bound
        return Err(Error::Degenerate(format!(
            "kernel_dim {kernel_dim} < d_s - d_v - 1 = {bound}: supplied d_v={d_v_eff} \
             is inconsistent with rank(T)={rank_t}"
        )));
    }
    Ok(IdentifiabilityVerdict {
        d_s,
        d_v: d_v_eff,
        rank_t,
        rank_t1,
        kernel_dim,
        raw_identifiable: rank_t == d_s,
        stochastic_identifiable: rank_t1 == d_s,
        dimension_sufficient_nonident: d_s > d_v_eff + 1,
    })
}

/// Lists every probability-constraint violation in `m`: entries below
/// `-tol.check_abs` (worst per row) and row sums off 1 by more than
/// `tol.check_abs`. Never fails.
pub fn validate_distribution(m: &Matrix, tol: &Tolerance) -> Vec<Violation> {
    let mut out = Vec::new();
    for i in 0..m.rows() {
        let row = m.row(i);
        let worst_neg = row.iter().copied().fold(0.0_f64, f64::min);
        if worst_neg < -tol.check_abs() {
            out.push(Violation {
                row: i,
                kind: ViolationKind::Negative,
                magnitude: -worst_neg,
            });
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > tol.check_abs() {
            out.push(Violation {
                row: i,
                kind: ViolationKind::RowSum,
                magnitude: (sum - 1.0).abs(),
            });
        }
    }
    out
}

/// True iff `‖A·T − B·T‖∞ ≤ tol.check_abs`, i.e. both matrices drive the
/// model to the same contextualization.
pub fn prediction_preserved(
    a: &AttentionMatrix,
    b: &Matrix,
    t: &HiddenStates,
    tol: &Tolerance,
) -> Result<bool> {
    check_pair(a, t)?;
    if b.rows() != a.dim() || b.cols() != a.dim() {
        return Err(Error::Dimension(format!(
            "comparison matrix is {}x{}, expected {2}x{2}",
            b.rows(),
            b.cols(),
            a.dim()
        )));
    }
    Ok(product_error(a.matrix(), b, t.matrix())? <= tol.check_abs())
}
