//! Kernel-space adversarial attention: distinct matrices, identical
//! predictions.
//!
//! Perturbing `A` along `Ker([T,1]')` changes the weights without changing
//! `A·T` or the row sums, which is exactly the mechanism that makes raw
//! attention non-identifiable. The generator draws one random unit kernel
//! combination per row (seeded, ChaCha8) and scales it to stay strictly
//! inside the probability simplex.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::attention::{
    prediction_preserved, validate_distribution, AttentionMatrix, HiddenStates,
};
use crate::error::{Error, Result};
use crate::linalg::{augment_ones, null_space_basis, Tolerance};
use crate::matrix::{norm2, Matrix};

/// Minimum headroom toward the simplex boundary before generation refuses.
pub const LAMBDA_MIN: f64 = 1e-8;
/// Minimum ℓ∞ separation for a sample to count as genuinely distinct.
pub const MIN_SEPARATION: f64 = 1e-4;

/// A pair of distinct attention matrices with identical predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialSample {
    pub original: AttentionMatrix,
    pub adversarial: AttentionMatrix,
    pub lambda_used: f64,
    /// Per-row unit directions in `Ker([T,1]')`; the perturbation is
    /// `lambda_used × kernel_direction`.
    pub kernel_direction: Matrix,
}

/// Draws seeded per-row kernel directions and perturbs `a` along them.
///
/// Fails with [`Error::Identifiable`] when `Ker([T,1]')` is trivial (then no
/// adversarial exists) and with [`Error::Degenerate`] when `a` sits too close
/// to the simplex boundary along the drawn directions.
pub fn generate_adversarial(
    a: &AttentionMatrix,
    t: &HiddenStates,
    seed: u64,
    tol: &Tolerance,
) -> Result<AdversarialSample> {
    if a.dim() != t.rows() {
        return Err(Error::Dimension(format!(
            "attention is {0}x{0} but hidden states have {1} rows",
            a.dim(),
            t.rows()
        )));
    }
    let kernel = null_space_basis(&augment_ones(t.matrix()), tol);
    if kernel.is_empty() {
        return Err(Error::Identifiable);
    }
    let d_s = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(d_s);
    for _ in 0..d_s {
        let mut dir = vec![0.0; d_s];
        loop {
            let coeffs: Vec<f64> = (0..kernel.count())
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            for x in dir.iter_mut() {
                *x = 0.0;
            }
            for (c, u) in coeffs.iter().zip(kernel.vectors()) {
                for (x, &ui) in dir.iter_mut().zip(u) {
                    *x += c * ui;
                }
            }
            let n = norm2(&dir);
            if n > 1e-12 {
                for x in dir.iter_mut() {
                    *x /= n;
                }
                break;
            }
        }
        rows.push(dir);
    }
    let directions = Matrix::from_rows(&rows)?;
    adversarial_from_directions(a, t, &directions, tol)
}

/// Largest λ keeping `a + λ·b` nonnegative: `min over b_j < 0 of a_j / -b_j`.
fn row_lambda_max(a: &[f64], b: &[f64]) -> f64 {
    let mut lambda = f64::INFINITY;
    for (&av, &bv) in a.iter().zip(b) {
        if bv < 0.0 {
            lambda = lambda.min(av / -bv);
        }
    }
    lambda
}

/// Deterministic core of the generator: applies
/// `A_adv = A + λ·B` with `λ = 0.5 × min-over-rows λ_max`, where per row
/// `λ_max = min over entries with b < 0 of a / (−b)`.
pub fn adversarial_from_directions(
    a: &AttentionMatrix,
    t: &HiddenStates,
    directions: &Matrix,
    tol: &Tolerance,
) -> Result<AdversarialSample> {
    let d_s = a.dim();
    if directions.rows() != d_s || directions.cols() != d_s {
        return Err(Error::Dimension(format!(
            "kernel directions must be {d_s}x{d_s}, got {}x{}",
            directions.rows(),
            directions.cols()
        )));
    }
    // every direction row must actually lie in Ker([T,1]')
    let membership = directions.matmul(&augment_ones(t.matrix()))?.max_abs();
    if membership > tol.check_abs() {
        return Err(Error::Validation(format!(
            "direction rows leave Ker([T,1]'): |B·[T,1]|_inf = {membership:.3e}"
        )));
    }

    let mut lambda_max = f64::INFINITY;
    for i in 0..d_s {
        lambda_max = lambda_max.min(row_lambda_max(a.matrix().row(i), directions.row(i)));
    }
    if !lambda_max.is_finite() {
        // only possible when every direction row is (numerically) zero
        return Err(Error::Degenerate(
            "kernel directions are all zero; nothing to perturb".into(),
        ));
    }
    if lambda_max < LAMBDA_MIN {
        return Err(Error::Degenerate(format!(
            "lambda_max = {lambda_max:.3e} < {LAMBDA_MIN:.0e}: attention sits on the \
             simplex boundary along the drawn directions"
        )));
    }
    let lambda = 0.5 * lambda_max;
    let perturbed = a.matrix().add_scaled(directions, lambda)?;
    // the 0.5 margin keeps entries strictly positive; clamp only guards
    // against rounding at the boundary
    let mut data = perturbed.data().to_vec();
    for x in data.iter_mut() {
        if *x < 0.0 && *x >= -tol.check_abs() {
            *x = 0.0;
        }
    }
    let adv_matrix = Matrix::new(d_s, d_s, data)?;

    let separation = adv_matrix.sub(a.matrix())?.max_abs();
    if separation < MIN_SEPARATION {
        return Err(Error::Degenerate(format!(
            "perturbation too small to witness non-identifiability: \
             |A_adv - A|_inf = {separation:.3e}"
        )));
    }
    let violations = validate_distribution(&adv_matrix, tol);
    if !violations.is_empty() {
        return Err(Error::Validation(format!(
            "adversarial matrix failed distribution checks ({} violations)",
            violations.len()
        )));
    }
    if !prediction_preserved(a, &adv_matrix, t, tol)? {
        return Err(Error::Validation(
            "adversarial matrix changed A·T beyond tolerance".into(),
        ));
    }
    Ok(AdversarialSample {
        original: a.clone(),
        adversarial: AttentionMatrix::new(adv_matrix, tol)?,
        lambda_used: lambda,
        kernel_direction: directions.clone(),
    })
}

/// Entrywise complement `1 − A`. Rows sum to `d_s − 1`, so this is
/// deliberately not a probability distribution; it feeds the intervention
/// experiment.
pub fn complement_attention(a: &AttentionMatrix) -> Matrix {
    let data = a.matrix().data().iter().map(|x| 1.0 - x).collect();
    Matrix::new(a.dim(), a.dim(), data).expect("complement of a valid matrix stays valid")
}
