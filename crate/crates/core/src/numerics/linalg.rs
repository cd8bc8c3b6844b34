//! Sparse symmetric nearest-neighbour operators and a Jacobi-preconditioned
//! conjugate gradient solver.

use crate::error::{Error, Result};

/// Marks a missing neighbour (outside the region, i.e. absorbed).
pub const NO_NEIGHBOR: u32 = u32::MAX;

/// `A x = diag .* x + coupling * sum_{j ~ i} x_j` with a fixed number of
/// neighbour slots per row. Symmetric whenever the neighbour relation is.
#[derive(Debug, Clone)]
pub struct StencilMatrix {
    pub diag: Vec<f64>,
    pub width: usize,
    pub neighbors: Vec<u32>,
    pub coupling: f64,
}

impl StencilMatrix {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn row_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.neighbors[i * self.width..(i + 1) * self.width]
            .iter()
            .filter(|&&j| j != NO_NEIGHBOR)
            .map(|&j| j as usize)
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for &j in &self.neighbors[i * self.width..(i + 1) * self.width] {
                if j != NO_NEIGHBOR {
                    s += x[j as usize];
                }
            }
            *yi = self.diag[i] * x[i] + self.coupling * s;
        }
    }

    /// Sum of row `i`, counting absent neighbours as zero.
    pub fn row_sum(&self, i: usize) -> f64 {
        self.diag[i] + self.coupling * self.row_neighbors(i).count() as f64
    }

    /// Checks that `j ~ i` implies `i ~ j`.
    pub fn is_structurally_symmetric(&self) -> bool {
        (0..self.len()).all(|i| self.row_neighbors(i).all(|j| self.row_neighbors(j).any(|k| k == i)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final relative residual `|b - A x| / |b|`.
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for symmetric positive definite `A`, starting from `x`.
pub fn pcg(a: &StencilMatrix, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<SolveStats> {
    let n = a.len();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats {
            iterations: 0,
            residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a.diag.iter().map(|d| 1.0 / d).collect();
    let mut r = vec![0.0; n];
    a.apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = dot(&r, &r).sqrt() / bnorm;
    let mut it = 0;
    while res > tol {
        if it >= max_iter {
            return Err(Error::SolverNoConvergence {
                iterations: it,
                residual: res,
            });
        }
        a.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::SolverNoConvergence {
                iterations: it,
                residual: res,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        it += 1;
        // periodically recompute the true residual to avoid drift
        if it % 200 == 0 {
            a.apply(x, &mut r);
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri = bi - *ri;
            }
        }
        res = dot(&r, &r).sqrt() / bnorm;
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    // report the true residual, not the recursively updated one
    a.apply(x, &mut ap);
    let true_res = ap.iter().zip(b).map(|(ax, b)| (b - ax).powi(2)).sum::<f64>().sqrt() / bnorm;
    Ok(SolveStats {
        iterations: it,
        residual: true_res,
    })
}
