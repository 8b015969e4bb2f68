//! Reference computations that share no code path with the solver.
#![allow(dead_code, clippy::needless_range_loop)]

use awayfw::objective::LeastSquaresObjective;
use awayfw::solver::Trace;
use awayfw::DenseMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Solves `m·x = rhs` by Gaussian elimination with partial pivoting.
/// `None` when a pivot is below `1e-12` relative to the largest entry.
pub fn solve_dense(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    let scale = m.iter().flatten().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-300);
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-12 * scale {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let factor = m[r][col] / m[col][col];
            for c in col..n {
                m[r][c] -= factor * m[col][c];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (rhs[r] - s) / m[r][r];
    }
    Some(x)
}

/// Minimum of `½‖Ax − b‖²` over the convex hull of `vertices`, by solving the
/// equality-constrained problem on the affine hull of every vertex subset and
/// keeping solutions with nonnegative barycentric weights. Exponential in
/// the vertex count.
pub fn brute_force_hull_min(a: &DenseMatrix, b: &[f64], vertices: &[Vec<f64>]) -> f64 {
    let n = vertices.len();
    let value = |x: &[f64]| -> f64 {
        let r: Vec<f64> = (0..a.rows())
            .map(|i| (0..a.cols()).map(|j| a.get(i, j) * x[j]).sum::<f64>() - b[i])
            .collect();
        0.5 * r.iter().map(|v| v * v).sum::<f64>()
    };
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) {
        let subset: Vec<&Vec<f64>> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| &vertices[i]).collect();
        let k = subset.len();
        // Columns A·v for v in the subset.
        let cols: Vec<Vec<f64>> = subset
            .iter()
            .map(|v| {
                (0..a.rows())
                    .map(|i| (0..a.cols()).map(|j| a.get(i, j) * v[j]).sum())
                    .collect()
            })
            .collect();
        let mut kkt = vec![vec![0.0; k + 1]; k + 1];
        let mut rhs = vec![0.0; k + 1];
        for p in 0..k {
            for q in 0..k {
                kkt[p][q] = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
            }
            kkt[p][k] = 1.0;
            kkt[k][p] = 1.0;
            rhs[p] = cols[p].iter().zip(b).map(|(x, y)| x * y).sum();
        }
        rhs[k] = 1.0;
        let Some(sol) = solve_dense(kkt, rhs) else {
            continue;
        };
        let weights = &sol[..k];
        if weights.iter().any(|&w| w < -1e-12) {
            continue;
        }
        let mut x = vec![0.0; a.cols()];
        for (w, v) in weights.iter().zip(&subset) {
            for (xi, vi) in x.iter_mut().zip(v.iter()) {
                *xi += w * vi;
            }
        }
        best = best.min(value(&x));
    }
    best
}

/// `f(x_t)` for plain FW on `½‖x‖²` over the down-closed simplex when the
/// oracle always hands back an unused basis vector: `x_t` is uniform on its
/// first `t` coordinates.
pub fn lower_bound_value(t: usize) -> f64 {
    let w = 1.0 / t as f64;
    (0..t).map(|_| 0.5 * w * w).sum()
}

/// Rank of a set of constraint rows, by elimination.
pub fn rank(mut rows: Vec<Vec<f64>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| rows[i][c].abs() > 1e-12) else {
            continue;
        };
        rows.swap(r, p);
        for i in 0..rows.len() {
            if i != r {
                let f = rows[i][c] / rows[r][c];
                for j in c..cols {
                    rows[i][j] -= f * rows[r][j];
                }
            }
        }
        r += 1;
    }
    r
}

/// Dimension of the face of `{x ≥ 0, Σx ≤ s}` (down-closed) or
/// `{x ≥ 0, Σx = s}` (full simplex) through `x`: ambient dimension minus
/// the rank of the tight constraints.
pub fn face_dim_by_tight_constraints(x: &[f64], scale: f64, down_closed: bool) -> usize {
    let d = x.len();
    let mut tight = Vec::new();
    for (i, &xi) in x.iter().enumerate() {
        if xi.abs() < 1e-12 {
            let mut row = vec![0.0; d];
            row[i] = 1.0;
            tight.push(row);
        }
    }
    if !down_closed || (x.iter().sum::<f64>() - scale).abs() < 1e-12 {
        tight.push(vec![1.0; d]);
    }
    d - rank(tight)
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller, independent of the library's generator.
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn random_least_squares(rng: &mut impl Rng, m: usize, d: usize) -> LeastSquaresObjective {
    let data: Vec<f64> = (0..m * d).map(|_| gaussian(rng)).collect();
    let b: Vec<f64> = (0..m).map(|_| gaussian(rng)).collect();
    LeastSquaresObjective::new(DenseMatrix::from_row_major(m, d, data).unwrap(), b).unwrap()
}

/// Random point of `scale·Δ_d`.
pub fn random_simplex_point(rng: &mut impl Rng, d: usize, scale: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..d).map(|_| -rng.random_range(f64::EPSILON..1.0).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| scale * x / s).collect()
}

/// `f(x_t) − f*` must not exceed the gap reported at `t`.
pub fn gap_certificate_holds(trace: &Trace, f_star: f64, slack: f64) -> bool {
    trace.records.iter().all(|r| r.f_value - f_star <= r.fw_gap + slack)
}
