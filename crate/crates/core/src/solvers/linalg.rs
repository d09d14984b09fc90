//! Sparse row storage, ILU(0) and right-preconditioned BiCGSTAB.

use crate::error::{Error, Result};

/// Compressed sparse rows with sorted column indices.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Rows given as (column, value) lists; duplicates are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    fn find(&self, row: usize, col: usize) -> Option<usize> {
        let s = &self.cols[self.row_ptr[row]..self.row_ptr[row + 1]];
        s.binary_search(&col).ok().map(|k| k + self.row_ptr[row])
    }
}

/// Incomplete LU with the sparsity of A.
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let mut lu = a.clone();
        let n = lu.n;
        let mut diag = vec![0; n];
        for (i, d) in diag.iter_mut().enumerate() {
            *d = lu
                .find(i, i)
                .ok_or_else(|| Error::DegenerateGrid(format!("row {i} has no diagonal entry")))?;
        }
        for i in 0..n {
            for kk in lu.row_ptr[i]..lu.row_ptr[i + 1] {
                let k = lu.cols[kk];
                if k >= i {
                    break;
                }
                let pivot = lu.vals[diag[k]];
                if pivot == 0.0 {
                    return Err(Error::DegenerateGrid(format!("zero pivot in row {k}")));
                }
                let factor = lu.vals[kk] / pivot;
                lu.vals[kk] = factor;
                for jj in kk + 1..lu.row_ptr[i + 1] {
                    let j = lu.cols[jj];
                    if let Some(kj) = lu.find(k, j) {
                        lu.vals[jj] -= factor * lu.vals[kj];
                    }
                }
            }
        }
        Ok(Self { lu, diag })
    }

    /// z = (LU)⁻¹ r.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let lu = &self.lu;
        for i in 0..lu.n {
            let mut acc = r[i];
            for k in lu.row_ptr[i]..self.diag[i] {
                acc -= lu.vals[k] * z[lu.cols[k]];
            }
            z[i] = acc;
        }
        for i in (0..lu.n).rev() {
            let mut acc = z[i];
            for k in self.diag[i] + 1..lu.row_ptr[i + 1] {
                acc -= lu.vals[k] * z[lu.cols[k]];
            }
            z[i] = acc / lu.vals[self.diag[i]];
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves Ax = b to ‖b − Ax‖ ≤ tol·‖b‖, starting from x.
pub fn bicgstab(
    a: &CsrMatrix,
    pre: &Ilu0,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<SolveStats> {
    let n = a.dim();
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let mut r = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut restarts = 0;
    'outer: loop {
        a.mul_vec(x, &mut tmp);
        for i in 0..n {
            r[i] = b[i] - tmp[i];
        }
        let mut rel = norm(&r) / bnorm;
        if rel <= tol {
            return Ok(SolveStats {
                iterations: 0,
                relative_residual: rel,
            });
        }
        let r_hat = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut s = vec![0.0; n];
        let mut z = vec![0.0; n];
        let mut t = vec![0.0; n];
        for it in 1..=max_iter {
            let rho_new = dot(&r_hat, &r);
            if rho_new.abs() < 1e-300 || omega == 0.0 {
                restarts += 1;
                if restarts > 5 {
                    break 'outer;
                }
                continue 'outer;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            pre.apply(&p, &mut y);
            a.mul_vec(&y, &mut v);
            alpha = rho / dot(&r_hat, &v);
            for i in 0..n {
                s[i] = r[i] - alpha * v[i];
            }
            if norm(&s) / bnorm <= tol {
                for i in 0..n {
                    x[i] += alpha * y[i];
                }
                rel = norm(&s) / bnorm;
                return Ok(SolveStats {
                    iterations: it,
                    relative_residual: rel,
                });
            }
            pre.apply(&s, &mut z);
            a.mul_vec(&z, &mut t);
            omega = dot(&t, &s) / dot(&t, &t);
            for i in 0..n {
                x[i] += alpha * y[i] + omega * z[i];
                r[i] = s[i] - omega * t[i];
            }
            rel = norm(&r) / bnorm;
            if rel <= tol {
                // Confirm against the true residual; recurrences drift.
                a.mul_vec(x, &mut tmp);
                let true_rel = (0..n).map(|i| (b[i] - tmp[i]).powi(2)).sum::<f64>().sqrt() / bnorm;
                if true_rel <= tol {
                    return Ok(SolveStats {
                        iterations: it,
                        relative_residual: true_rel,
                    });
                }
                restarts += 1;
                if restarts > 5 {
                    break 'outer;
                }
                continue 'outer;
            }
        }
        break;
    }
    a.mul_vec(x, &mut tmp);
    let rel = (0..n).map(|i| (b[i] - tmp[i]).powi(2)).sum::<f64>().sqrt() / bnorm;
    Err(Error::NoConvergence {
        what: "BiCGSTAB",
        detail: format!("relative residual {rel:e} above {tol:e}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonsymmetric_tridiagonal() {
        let n = 200;
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 4.0)];
                if i > 0 {
                    r.push((i - 1, -1.5));
                }
                if i + 1 < n {
                    r.push((i + 1, -0.5));
                }
                r
            })
            .collect();
        let a = CsrMatrix::from_rows(rows);
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let mut b = vec![0.0; n];
        a.mul_vec(&xs, &mut b);
        let pre = Ilu0::new(&a).unwrap();
        let mut x = vec![0.0; n];
        let st = bicgstab(&a, &pre, &b, &mut x, 1e-12, 100).unwrap();
        // ILU(0) of a tridiagonal matrix is exact
        assert!(st.iterations <= 2);
        for (u, v) in x.iter().zip(&xs) {
            assert!((u - v).abs() < 1e-10);
        }
    }
}
