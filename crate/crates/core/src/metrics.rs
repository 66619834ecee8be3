//! Comparison metrics: Wasserstein-1, RMSE, the coefficient of
//! determination, and two normalized L2 distances.
//!
//! Wasserstein between prediction sets uses the sorted-sample closed form of
//! the coupling infimum for equal-size empirical measures. Wasserstein
//! between attention rows treats positions `{0, …, d_s−1}` as unit-spaced
//! support and sums absolute CDF differences.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Per-sample scalar model outputs over a test set; entries live in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionVector(Vec<f64>);

impl PredictionVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: 0 });
            }
            if !(-1e-12..=1.0 + 1e-12).contains(&v) {
                return Err(Error::Distribution(format!(
                    "prediction {i} = {v} outside [0, 1]"
                )));
            }
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// View as an `n × 1` matrix for the Frobenius-norm metrics.
    pub fn as_column(&self) -> Result<Matrix> {
        Matrix::column_vector(&self.0)
    }
}

/// All pairwise metrics for one pair of prediction vectors. `r2` is absent
/// when the reference has no variance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub wasserstein: f64,
    pub rmse: f64,
    pub r2: Option<f64>,
    pub l2_rel: f64,
    pub l2_scaled: f64,
    pub n_samples: usize,
}

impl MetricsReport {
    pub fn compute(p: &PredictionVector, q: &PredictionVector) -> Result<Self> {
        let r2 = match pearson_r2(p, q) {
            Ok(v) => Some(v),
            Err(Error::Degenerate(_)) => None,
            Err(e) => return Err(e),
        };
        let (pc, qc) = (p.as_column()?, q.as_column()?);
        let l2_rel_val = match l2_rel(&pc, &qc) {
            Ok(v) => v,
            Err(Error::Degenerate(_)) => 0.0,
            Err(e) => return Err(e),
        };
        Ok(Self {
            wasserstein: wasserstein1_predictions(p, q)?,
            rmse: rmse(p, q)?,
            r2,
            l2_rel: l2_rel_val,
            l2_scaled: l2_scaled(&pc, &qc)?,
            n_samples: p.len(),
        })
    }
}

fn check_lengths(p: &PredictionVector, q: &PredictionVector) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::Dimension(format!(
            "prediction vectors have lengths {} and {}",
            p.len(),
            q.len()
        )));
    }
    if p.is_empty() {
        return Err(Error::Empty("prediction vectors".into()));
    }
    Ok(())
}

/// W1 between two equal-size empirical measures:
/// `(1/n) Σ |sort(p)_i − sort(q)_i|`.
pub fn wasserstein1_predictions(p: &PredictionVector, q: &PredictionVector) -> Result<f64> {
    check_lengths(p, q)?;
    let mut ps = p.values().to_vec();
    let mut qs = q.values().to_vec();
    ps.sort_by(|a, b| a.total_cmp(b));
    qs.sort_by(|a, b| a.total_cmp(b));
    let n = ps.len() as f64;
    Ok(ps.iter().zip(&qs).map(|(a, b)| (a - b).abs()).sum::<f64>() / n)
}

/// W1 between two distributions over the unit-spaced support
/// `{0, …, d−1}`: `Σ_{k<d−1} |CDF_p(k) − CDF_q(k)|`.
pub fn wasserstein1_rows(p: &[f64], q: &[f64]) -> Result<f64> {
    for (name, row) in [("first", p), ("second", q)] {
        if row.iter().any(|&x| x < -1e-9) {
            return Err(Error::Distribution(format!("{name} row has negative mass")));
        }
    }
    cdf_distance_rows(p, q)
}

/// `Σ_{k<d−1} |CDF_p(k) − CDF_q(k)|` without the nonnegativity gate of
/// [`wasserstein1_rows`]. Coincides with W1 on distributions and extends it
/// to equal-mass signed rows, which efficient projections can be.
pub fn cdf_distance_rows(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension(format!(
            "rows have lengths {} and {}",
            p.len(),
            q.len()
        )));
    }
    if p.is_empty() {
        return Err(Error::Empty("distribution rows".into()));
    }
    let (sp, sq): (f64, f64) = (p.iter().sum(), q.iter().sum());
    if (sp - sq).abs() > 1e-6 {
        return Err(Error::Distribution(format!(
            "row masses differ: {sp} vs {sq}"
        )));
    }
    let mut cdf_diff = 0.0;
    let mut acc = 0.0;
    for k in 0..p.len() - 1 {
        acc += p[k] - q[k];
        cdf_diff += acc.abs();
    }
    Ok(cdf_diff)
}

/// Mean of [`cdf_distance_rows`] over matching rows.
pub fn mean_cdf_distance_matrices(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::Dimension(format!(
            "shape mismatch: {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let mut total = 0.0;
    for i in 0..a.rows() {
        total += cdf_distance_rows(a.row(i), b.row(i))?;
    }
    Ok(total / a.rows() as f64)
}

/// Mean of [`wasserstein1_rows`] over matching rows.
pub fn mean_wasserstein_matrices(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::Dimension(format!(
            "shape mismatch: {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let mut total = 0.0;
    for i in 0..a.rows() {
        total += wasserstein1_rows(a.row(i), b.row(i))?;
    }
    Ok(total / a.rows() as f64)
}

/// `√(Σ (p_i − q_i)² / n)`.
pub fn rmse(p: &PredictionVector, q: &PredictionVector) -> Result<f64> {
    check_lengths(p, q)?;
    let n = p.len() as f64;
    let ss: f64 = p
        .values()
        .iter()
        .zip(q.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((ss / n).sqrt())
}

/// Coefficient of determination with `p` as reference:
/// `1 − Σ(p_i − q_i)² / Σ(p_i − mean(p))²`. Can be negative; fails when the
/// reference variance vanishes.
pub fn pearson_r2(p: &PredictionVector, q: &PredictionVector) -> Result<f64> {
    check_lengths(p, q)?;
    let n = p.len() as f64;
    let mean = p.values().iter().sum::<f64>() / n;
    let ss_tot: f64 = p.values().iter().map(|x| (x - mean) * (x - mean)).sum();
    if ss_tot <= 1e-15 {
        return Err(Error::Degenerate(format!(
            "reference variance {ss_tot:.3e} too small for r^2"
        )));
    }
    let ss_res: f64 = p
        .values()
        .iter()
        .zip(q.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

fn check_shapes(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::Dimension(format!(
            "shape mismatch: {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

/// `‖A − B‖_F / (‖A‖_F + ‖B‖_F)`; undefined when both are zero.
pub fn l2_rel(a: &Matrix, b: &Matrix) -> Result<f64> {
    check_shapes(a, b)?;
    let denom = a.frobenius_norm() + b.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::Degenerate(
            "l2_rel of two zero matrices is undefined".into(),
        ));
    }
    Ok(a.sub(b)?.frobenius_norm() / denom)
}

/// `‖A − B‖_F / n` with `n` the row count.
pub fn l2_scaled(a: &Matrix, b: &Matrix) -> Result<f64> {
    check_shapes(a, b)?;
    Ok(a.sub(b)?.frobenius_norm() / a.rows() as f64)
}

/// Batch mean of [`l2_rel`] over matrix pairs.
pub fn mean_l2_rel(pairs: &[(Matrix, Matrix)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("matrix pair batch".into()));
    }
    let mut total = 0.0;
    for (a, b) in pairs {
        total += l2_rel(a, b)?;
    }
    Ok(total / pairs.len() as f64)
}

/// Batch mean of [`l2_scaled`] over matrix pairs.
pub fn mean_l2_scaled(pairs: &[(Matrix, Matrix)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("matrix pair batch".into()));
    }
    let mut total = 0.0;
    for (a, b) in pairs {
        total += l2_scaled(a, b)?;
    }
    Ok(total / pairs.len() as f64)
}
