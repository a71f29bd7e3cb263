//! Linear solvers for symmetric positive definite systems.

use super::sparse::{axpy, dot, norm2, CsrMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Conjugate gradients with diagonal scaling, starting from zero.
///
/// Stops when `|Ax - b| <= tol |b|`; the iteration cap is `10 n`.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut x = vec![0.0; b.len()];
    solve_spd_from(a, b, &mut x, tol)?;
    Ok(x)
}

/// As [`solve_spd`] but starting from the given iterate.
pub fn solve_spd_from(a: &CsrMatrix, b: &[f64], x: &mut [f64], tol: f64) -> Result<CgStats> {
    let n = b.len();
    if a.rows != n || a.cols != n || x.len() != n {
        return Err(Error::Dimension(format!("{}x{} system with rhs {n}", a.rows, a.cols)));
    }
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgStats { iterations: 0, relative_residual: 0.0 });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = a.mul_vec(x);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, d)| ri * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let max_iter = 10 * n.max(1);
    let mut res = norm2(&r) / b_norm;
    let mut it = 0;
    while res > tol {
        if it == max_iter {
            return Err(Error::Solver { iterations: it, residual: res });
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Solver { iterations: it, residual: res });
        }
        let step = rz / pap;
        axpy(step, &p, x);
        axpy(-step, &ap, &mut r);
        for ((zi, ri), d) in z.iter_mut().zip(&r).zip(&inv_diag) {
            *zi = ri * d;
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        it += 1;
        res = norm2(&r) / b_norm;
    }
    Ok(CgStats { iterations: it, relative_residual: res })
}

/// Cholesky factor `A = L L^T` of a banded SPD matrix, stored by rows of the band.
///
/// Used for the systems that are solved many times with the same matrix
/// (one per time step, per sweep); a structured mesh with lexicographic
/// numbering has half bandwidth `nx`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    /// row i holds L[i][i-bw..=i] (left-padded with zeros)
    band: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<BandedCholesky> {
        if a.rows != a.cols {
            return Err(Error::Dimension(format!("{}x{} is not square", a.rows, a.cols)));
        }
        let n = a.rows;
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    band[i * w + (j + bw - i)] = v;
                }
            }
        }
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                // L[i][j] = (A[i][j] - sum_k L[i][k] L[j][k]) / L[j][j]
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = band[i * w + (j + bw - i)];
                for k in k0..j {
                    s -= band[i * w + (k + bw - i)] * band[j * w + (k + bw - j)];
                }
                if j == i {
                    if s <= 0.0 {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: s });
                    }
                    band[i * w + bw] = s.sqrt();
                } else {
                    band[i * w + (j + bw - i)] = s / band[j * w + bw];
                }
            }
        }
        Ok(BandedCholesky { n, bw, band })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        debug_assert_eq!(x.len(), n);
        for i in 0..n {
            let row = &self.band[i * w..(i + 1) * w];
            let j0 = i.saturating_sub(bw);
            let mut s = x[i];
            for j in j0..i {
                s -= row[j + bw - i] * x[j];
            }
            x[i] = s / row[bw];
        }
        for i in (0..n).rev() {
            x[i] /= self.band[i * w + bw];
            let xi = x[i];
            let j0 = i.saturating_sub(bw);
            let row = &self.band[i * w..(i + 1) * w];
            for j in j0..i {
                x[j] -= row[j + bw - i] * xi;
            }
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
