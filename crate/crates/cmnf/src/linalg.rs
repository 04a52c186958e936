//! Small dense linear algebra over exact or floating coefficients.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Cx, Mode, Real};

pub type CMat<S> = Vec<Vec<Cx<S>>>;

pub fn identity<S: Real>(n: usize) -> CMat<S> {
    (0..n).map(|i| (0..n).map(|j| if i == j { Cx::one() } else { Cx::zero() }).collect()).collect()
}

pub fn mat_mul<S: Real>(a: &CMat<S>, b: &CMat<S>) -> CMat<S> {
    let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, |r| r.len()));
    let mut out = vec![vec![Cx::<S>::zero(); m]; n];
    for i in 0..n {
        for t in 0..k {
            if a[i][t].is_zero() {
                continue;
            }
            for j in 0..m {
                out[i][j] = out[i][j].clone() + a[i][t].clone() * b[t][j].clone();
            }
        }
    }
    out
}

pub fn mat_vec<S: Real>(a: &CMat<S>, v: &[Cx<S>]) -> Vec<Cx<S>> {
    a.iter().map(|row| row.iter().zip(v).fold(Cx::zero(), |acc, (x, y)| acc + x.clone() * y.clone())).collect()
}

pub fn conj_transpose<S: Real>(a: &CMat<S>) -> CMat<S> {
    let n = a.len();
    let m = a.first().map_or(0, |r| r.len());
    (0..m).map(|j| (0..n).map(|i| a[i][j].conj()).collect()).collect()
}

pub fn scale_mat<S: Real>(a: &CMat<S>, s: &Cx<S>) -> CMat<S> {
    a.iter().map(|r| r.iter().map(|x| x.clone() * s.clone()).collect()).collect()
}

fn cnorm<S: Real>(z: &Cx<S>) -> f64 {
    z.re.to_f64().abs() + z.im.to_f64().abs()
}

fn is_pivot<S: Real>(z: &Cx<S>, tol: f64) -> bool {
    match S::MODE {
        Mode::Exact => !z.is_zero(),
        Mode::Float => cnorm(z) > tol,
    }
}

/// Gauss-Jordan inverse of a square complex matrix.
pub fn mat_inv<S: Real>(a: &CMat<S>) -> Result<CMat<S>> {
    let n = a.len();
    let mut m: CMat<S> = a.clone();
    let mut inv = identity::<S>(n);
    let scale = a.iter().flatten().map(cnorm).fold(0.0, f64::max).max(1e-300);
    for col in 0..n {
        let piv = (col..n)
            .filter(|&r| is_pivot(&m[r][col], 1e-14 * scale))
            .max_by(|&x, &y| cnorm(&m[x][col]).total_cmp(&cnorm(&m[y][col])))
            .ok_or(Error::Precondition("singular matrix".into()))?;
        m.swap(col, piv);
        inv.swap(col, piv);
        let p = Cx::<S>::one() / m[col][col].clone();
        for j in 0..n {
            m[col][j] = m[col][j].clone() * p.clone();
            inv[col][j] = inv[col][j].clone() * p.clone();
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone();
            for j in 0..n {
                m[r][j] = m[r][j].clone() - f.clone() * m[col][j].clone();
                inv[r][j] = inv[r][j].clone() - f.clone() * inv[col][j].clone();
            }
        }
    }
    Ok(inv)
}

/// Outcome of a real linear solve.
#[derive(Clone, Debug)]
pub struct Solve<S> {
    pub x: Vec<S>,
    pub rank: usize,
    /// Max-norm of `A x - b`.
    pub residual: f64,
    /// Ratio of extreme nonzero singular values (float mode only).
    pub cond: Option<f64>,
}

/// Solves `A x = b` for a possibly overdetermined real system: exact
/// Gaussian elimination for rationals, SVD least squares for doubles.
/// Rank-deficient systems return the solution with free variables at zero.
pub fn solve_real<S: Real>(a: &[Vec<S>], b: &[S], cols: usize) -> Solve<S> {
    match S::MODE {
        Mode::Exact => solve_exact(a, b, cols),
        Mode::Float => solve_svd(a, b, cols),
    }
}

fn solve_exact<S: Real>(a: &[Vec<S>], b: &[S], cols: usize) -> Solve<S> {
    let rows = a.len();
    let mut m: Vec<Vec<S>> = a
        .iter()
        .zip(b)
        .map(|(r, bi)| {
            let mut r = r.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r0 = 0;
    for c in 0..cols {
        let Some(p) = (r0..rows).find(|&r| !m[r][c].is_zero()) else { continue };
        m.swap(r0, p);
        let inv = S::one() / m[r0][c].clone();
        for j in c..=cols {
            m[r0][j] = m[r0][j].clone() * inv.clone();
        }
        for r in 0..rows {
            if r == r0 || m[r][c].is_zero() {
                continue;
            }
            let f = m[r][c].clone();
            for j in c..=cols {
                let t = f.clone() * m[r0][j].clone();
                m[r][j] = m[r][j].clone() - t;
            }
        }
        pivots.push(c);
        r0 += 1;
        if r0 == rows {
            break;
        }
    }
    let mut x = vec![S::zero(); cols];
    for (k, &c) in pivots.iter().enumerate() {
        x[c] = m[k][cols].clone();
    }
    let residual = max_residual(a, b, &x);
    Solve { x, rank: pivots.len(), residual, cond: None }
}

fn solve_svd<S: Real>(a: &[Vec<S>], b: &[S], cols: usize) -> Solve<S> {
    let rows = a.len();
    if rows == 0 || cols == 0 {
        return Solve { x: vec![S::zero(); cols], rank: 0, residual: 0.0, cond: None };
    }
    let am = DMatrix::from_fn(rows, cols, |i, j| a[i][j].to_f64());
    let bv = DVector::from_fn(rows, |i, _| b[i].to_f64());
    let svd = am.svd(true, true);
    let smax = svd.singular_values.max();
    let thresh = 1e-10 * smax.max(1e-300);
    let rank = svd.singular_values.iter().filter(|&&s| s > thresh).count();
    let smin = svd.singular_values.iter().copied().filter(|&s| s > thresh).fold(f64::INFINITY, f64::min);
    let sol = svd.solve(&bv, thresh).expect("svd with vectors");
    let x: Vec<S> = sol.iter().map(|&v| S::from_f64(v)).collect();
    let residual = max_residual(a, b, &x);
    Solve { x, rank, residual, cond: (rank > 0).then(|| smax / smin) }
}

fn max_residual<S: Real>(a: &[Vec<S>], b: &[S], x: &[S]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(row, bi)| {
            let r = row.iter().zip(x).fold(S::zero(), |acc, (p, q)| acc + p.clone() * q.clone()) - bi.clone();
            r.to_f64().abs()
        })
        .fold(0.0, f64::max)
}

/// Basis of the right nullspace of `A` (rows x cols) via reduced row echelon
/// form; exact for rationals, tolerance `tol` for doubles.
pub fn nullspace<S: Real>(a: &[Vec<S>], cols: usize, tol: f64) -> Vec<Vec<S>> {
    let rows = a.len();
    let mut m: Vec<Vec<S>> = a.to_vec();
    let mut pivots = Vec::new();
    let mut r0 = 0;
    for c in 0..cols {
        if r0 == rows {
            break;
        }
        let p = (r0..rows)
            .filter(|&r| !m[r][c].near_zero(tol))
            .max_by(|&x, &y| m[x][c].to_f64().abs().total_cmp(&m[y][c].to_f64().abs()));
        let Some(p) = p else { continue };
        m.swap(r0, p);
        let inv = S::one() / m[r0][c].clone();
        for j in 0..cols {
            m[r0][j] = m[r0][j].clone() * inv.clone();
        }
        for r in 0..rows {
            if r == r0 || m[r][c].is_zero() {
                continue;
            }
            let f = m[r][c].clone();
            for j in 0..cols {
                let t = f.clone() * m[r0][j].clone();
                m[r][j] = m[r][j].clone() - t;
            }
        }
        pivots.push(c);
        r0 += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![S::zero(); cols];
            v[f] = S::one();
            for (k, &c) in pivots.iter().enumerate() {
                v[c] = -m[k][f].clone();
            }
            v
        })
        .collect()
}

/// Numerical rank: singular values above `rel_tol * sigma_max`.
pub fn numeric_rank(a: &[Vec<f64>], cols: usize, rel_tol: f64) -> usize {
    if a.is_empty() || cols == 0 {
        return 0;
    }
    let m = DMatrix::from_fn(a.len(), cols, |i, j| a[i][j]);
    let sv = m.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

pub fn cmat_to_f64<S: Real>(a: &CMat<S>) -> CMat<f64> {
    a.iter().map(|r| r.iter().map(|z| Complex::new(z.re.to_f64(), z.im.to_f64())).collect()).collect()
}
