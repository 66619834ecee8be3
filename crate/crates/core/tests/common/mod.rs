//! Independent oracles for the property and acceptance suites.
//!
//! Everything here is deliberately implemented by a different route than the
//! library: rank and null spaces come from Gaussian elimination, projections
//! from normal equations over an elimination-selected column subset, and the
//! transport distances from a permutation scan resp. a two-phase simplex.

#![allow(dead_code)]
#![allow(clippy::needless_range_loop)]

use effattn::attention::{AttentionMatrix, HiddenStates};
use effattn::linalg::Tolerance;
use effattn::matrix::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    Matrix::new(rows, cols, data).unwrap()
}

/// `rows × cols` matrix of rank exactly `r` (product of two generic factors).
pub fn random_rank_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, r: usize) -> Matrix {
    assert!(r >= 1 && r <= rows.min(cols));
    let left = random_matrix(rng, rows, r);
    let right = random_matrix(rng, r, cols);
    left.matmul(&right).unwrap()
}

/// Strictly positive distribution over `n` points (softmax of normals).
pub fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let scores: Vec<f64> = (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn random_attention(rng: &mut ChaCha8Rng, d_s: usize) -> AttentionMatrix {
    let rows: Vec<Vec<f64>> = (0..d_s).map(|_| random_distribution(rng, d_s)).collect();
    AttentionMatrix::new(Matrix::from_rows(&rows).unwrap(), &Tolerance::default()).unwrap()
}

pub fn random_hidden_states(rng: &mut ChaCha8Rng, d_s: usize, d_v: usize) -> HiddenStates {
    HiddenStates::new(random_rank_matrix(rng, d_s, d_s.max(d_v), d_v))
}

// ---------------------------------------------------------------------------
// elimination oracles
// ---------------------------------------------------------------------------

fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Rank by Gaussian elimination with partial pivoting; threshold relative to
/// the largest entry magnitude.
pub fn rank_by_elimination(m: &Matrix, tol_rel: f64) -> usize {
    let mut a = to_rows(m);
    let (rows, cols) = (m.rows(), m.cols());
    let scale = m.max_abs();
    if scale == 0.0 {
        return 0;
    }
    let thresh = tol_rel * scale;
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (pi, pv) = (r..rows)
            .map(|i| (i, a[i][c].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pv <= thresh {
            continue;
        }
        a.swap(r, pi);
        for i in r + 1..rows {
            let f = a[i][c] / a[r][c];
            if f != 0.0 {
                for j in c..cols {
                    a[i][j] -= f * a[r][j];
                }
            }
        }
        r += 1;
    }
    r
}

/// Reduced row echelon form; returns the pivot column indices.
fn rref(a: &mut [Vec<f64>], thresh: f64) -> Vec<usize> {
    let rows = a.len();
    let cols = a[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (pi, pv) = (r..rows)
            .map(|i| (i, a[i][c].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pv <= thresh {
            continue;
        }
        a.swap(r, pi);
        let p = a[r][c];
        for j in 0..cols {
            a[r][j] /= p;
        }
        for i in 0..rows {
            if i != r && a[i][c] != 0.0 {
                let f = a[i][c];
                for j in 0..cols {
                    a[i][j] -= f * a[r][j];
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Basis (not orthonormal) of `{x : m' x = 0}` via RREF free variables.
pub fn null_space_by_elimination(m: &Matrix, tol_rel: f64) -> Vec<Vec<f64>> {
    let mt = m.transpose();
    let n = m.rows();
    let scale = m.max_abs();
    if scale == 0.0 {
        return (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect();
    }
    let mut a = to_rows(&mt);
    let pivots = rref(&mut a, tol_rel * scale);
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut x = vec![0.0; n];
            x[fc] = 1.0;
            for (row, &pc) in pivots.iter().enumerate() {
                x[pc] = -a[row][fc];
            }
            x
        })
        .collect()
}

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = a.len();
    for c in 0..n {
        let (pi, pv) = (c..n)
            .map(|i| (i, a[i][c].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        assert!(pv > 0.0, "singular system in oracle");
        a.swap(c, pi);
        b.swap(c, pi);
        for i in c + 1..n {
            let f = a[i][c] / a[c][c];
            if f != 0.0 {
                for j in c..n {
                    a[i][j] -= f * a[c][j];
                }
                b[i] -= f * b[c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }
    x
}

/// Least-squares projection of `v` onto the column space of `m`: selects an
/// independent column subset by elimination, then solves the normal system
/// `Ms'(v − Ms·x) = 0` in its augmented (KKT) form
/// `[[I, Ms], [Ms', 0]]·[r; x] = [v; 0]` by Gaussian elimination. The
/// augmented form avoids squaring the condition number, which the plain
/// `Ms'Ms` product would.
pub fn project_by_normal_equations(v: &[f64], m: &Matrix, tol_rel: f64) -> Vec<f64> {
    let scale = m.max_abs();
    if scale == 0.0 {
        return vec![0.0; v.len()];
    }
    let mut work = to_rows(m);
    let pivots = rref(&mut work, tol_rel * scale);
    if pivots.is_empty() {
        return vec![0.0; v.len()];
    }
    // ms: rows(m) x k from the independent columns
    let k = pivots.len();
    let rows = m.rows();
    let mut ms = vec![vec![0.0; k]; rows];
    for (jj, &c) in pivots.iter().enumerate() {
        for (i, row) in ms.iter_mut().enumerate() {
            row[jj] = m.get(i, c);
        }
    }
    let n = rows + k;
    let mut kkt = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    for i in 0..rows {
        kkt[i][i] = 1.0;
        for jj in 0..k {
            kkt[i][rows + jj] = ms[i][jj];
            kkt[rows + jj][i] = ms[i][jj];
        }
        rhs[i] = v[i];
    }
    let mut sol = solve_square(kkt.clone(), rhs.clone());
    // one iterative-refinement pass recovers digits lost to ill-conditioned
    // draws in the random corpus
    let resid: Vec<f64> = (0..n)
        .map(|i| rhs[i] - kkt[i].iter().zip(&sol).map(|(a, s)| a * s).sum::<f64>())
        .collect();
    let corr = solve_square(kkt, resid);
    for (s, c) in sol.iter_mut().zip(&corr) {
        *s += c;
    }
    let x = &sol[rows..];
    (0..rows)
        .map(|i| (0..k).map(|jj| ms[i][jj] * x[jj]).sum())
        .collect()
}

// ---------------------------------------------------------------------------
// transport oracles
// ---------------------------------------------------------------------------

/// Minimum over all permutation couplings of `(1/n) Σ |p_i − q_σ(i)|`;
/// factorial scan, n ≤ 8.
pub fn wasserstein_by_permutations(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    let n = p.len();
    assert!(n <= 8, "permutation oracle is factorial");
    let mut idx: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut idx, 0, &mut |perm| {
        let cost: f64 = perm
            .iter()
            .enumerate()
            .map(|(i, &j)| (p[i] - q[j]).abs())
            .sum();
        if cost < best {
            best = cost;
        }
    });
    best / n as f64
}

fn permute(idx: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == idx.len() {
        visit(idx);
        return;
    }
    for i in k..idx.len() {
        idx.swap(k, i);
        permute(idx, k + 1, visit);
        idx.swap(k, i);
    }
}

/// Minimum-cost transport between `p` and `q` with cost `|i − j|`, solved as
/// a linear program by the two-phase simplex below.
pub fn transport_lp(p: &[f64], q: &[f64]) -> f64 {
    let (m, n) = (p.len(), q.len());
    let vars = m * n;
    // row-sum and column-sum equality constraints
    let mut a = vec![vec![0.0; vars]; m + n];
    let mut b = vec![0.0; m + n];
    for i in 0..m {
        for j in 0..n {
            a[i][i * n + j] = 1.0;
        }
        b[i] = p[i];
    }
    for j in 0..n {
        for i in 0..m {
            a[m + j][i * n + j] = 1.0;
        }
        b[m + j] = q[j];
    }
    let mut c = vec![0.0; vars];
    for i in 0..m {
        for j in 0..n {
            c[i * n + j] = (i as f64 - j as f64).abs();
        }
    }
    simplex_min(&a, &b, &c).expect("transportation LP is feasible")
}

/// Two-phase dense simplex with Bland's rule: `min c'x` s.t. `Ax = b`,
/// `x ≥ 0`, `b ≥ 0`. Returns `None` if infeasible.
pub fn simplex_min(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
    const EPS: f64 = 1e-11;
    let m = a.len();
    let n = a[0].len();
    // tableau: n structural + m artificial columns, plus rhs
    let width = n + m + 1;
    let mut t = vec![vec![0.0; width]; m];
    let mut basis = vec![0usize; m];
    for i in 0..m {
        for j in 0..n {
            t[i][j] = a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][width - 1] = b[i];
        basis[i] = n + i;
    }

    let run_phase = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, cost: &[f64], ncols: usize| {
        loop {
            // reduced costs via basis cost vector
            let mut z = vec![0.0; ncols + 1];
            for (i, &bi) in basis.iter().enumerate() {
                let cb = cost[bi];
                if cb != 0.0 {
                    for j in 0..=ncols {
                        let col = if j == ncols { width - 1 } else { j };
                        z[j] += cb * t[i][col];
                    }
                }
            }
            // Bland: first column with negative reduced cost
            let mut enter = None;
            for j in 0..ncols {
                if cost[j] - z[j] < -EPS {
                    enter = Some(j);
                    break;
                }
            }
            let Some(e) = enter else { break };
            // ratio test, ties to lowest basis index
            let mut leave: Option<usize> = None;
            let mut best = f64::INFINITY;
            for i in 0..m {
                if t[i][e] > EPS {
                    let ratio = t[i][width - 1] / t[i][e];
                    if ratio < best - EPS
                        || (ratio < best + EPS && leave.is_some_and(|l| basis[i] < basis[l]))
                    {
                        best = ratio;
                        leave = Some(i);
                    }
                }
            }
            let Some(l) = leave else { return false }; // unbounded
            let piv = t[l][e];
            for j in 0..width {
                t[l][j] /= piv;
            }
            for i in 0..m {
                if i != l && t[i][e] != 0.0 {
                    let f = t[i][e];
                    for j in 0..width {
                        t[i][j] -= f * t[l][j];
                    }
                }
            }
            basis[l] = e;
        }
        true
    };

    // phase 1: minimize artificial mass
    let mut phase1_cost = vec![0.0; n + m];
    for j in n..n + m {
        phase1_cost[j] = 1.0;
    }
    if !run_phase(&mut t, &mut basis, &phase1_cost, n + m) {
        return None;
    }
    let phase1_val: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &bi)| bi >= n)
        .map(|(i, _)| t[i][width - 1])
        .sum();
    if phase1_val > 1e-7 {
        return None;
    }
    // phase 2 over structural columns only (artificials stuck at zero may
    // remain basic; they never re-enter because the column range stops at n)
    let mut phase2_cost = vec![0.0; n + m];
    phase2_cost[..n].copy_from_slice(c);
    if !run_phase(&mut t, &mut basis, &phase2_cost, n) {
        return None;
    }
    let value: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &bi)| bi < n)
        .map(|(i, &bi)| c[bi] * t[i][width - 1])
        .sum();
    Some(value)
}
