//! Sparse SPD solvers: preconditioned conjugate gradient, plus a dense LU
//! oracle for cross-checking on small systems.

use crate::assembly::Csr;
use crate::error::SolveError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Jacobi,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveStats {
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Conjugate gradient with an optional Jacobi preconditioner.
///
/// Convergence is declared on the recurrence residual and then confirmed
/// against the true residual `b - A x`; iteration restarts from the true
/// residual if the recurrence has drifted. Deterministic for fixed inputs.
pub fn conjugate_gradient(
    matrix: &Csr,
    rhs: &[f64],
    tol: f64,
    max_iterations: usize,
    preconditioner: Preconditioner,
) -> Result<(Vec<f64>, SolveStats), SolveError> {
    let n = matrix.n();
    assert_eq!(rhs.len(), n, "rhs length mismatch");
    let b_norm = norm(rhs);
    if b_norm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveStats { iterations: 0, final_relative_residual: 0.0, converged: true },
        ));
    }
    let inv_diag: Option<Vec<f64>> = match preconditioner {
        Preconditioner::None => None,
        Preconditioner::Jacobi => {
            let diag = matrix.diagonal();
            let mut inv = Vec::with_capacity(n);
            for (i, d) in diag.iter().enumerate() {
                if !(d > &0.0) || !d.is_finite() {
                    return Err(SolveError::Breakdown {
                        iteration: 0,
                        reason: format!("non-positive diagonal {} at row {}", d, i),
                    });
                }
                inv.push(1.0 / d);
            }
            Some(inv)
        }
    };
    let apply_precond = |r: &[f64]| -> Vec<f64> {
        match &inv_diag {
            None => r.to_vec(),
            Some(inv) => r.iter().zip(inv).map(|(x, m)| x * m).collect(),
        }
    };

    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut z = apply_precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut iterations = 0;

    while iterations < max_iterations {
        matrix.mul_vec(&p, &mut q);
        let pq = dot(&p, &q);
        if !pq.is_finite() || pq <= 0.0 {
            return Err(SolveError::Breakdown {
                iteration: iterations,
                reason: format!("p.Ap = {pq} (matrix not positive definite?)"),
            });
        }
        let step = rz / pq;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * q[i];
        }
        iterations += 1;
        if norm(&r) <= tol * b_norm {
            // Confirm with the true residual; restart if the recurrence has
            // drifted.
            matrix.mul_vec(&x, &mut q);
            let mut true_r = vec![0.0; n];
            for i in 0..n {
                true_r[i] = rhs[i] - q[i];
            }
            let true_norm = norm(&true_r);
            if true_norm <= tol * b_norm {
                return Ok((
                    x,
                    SolveStats {
                        iterations,
                        final_relative_residual: true_norm / b_norm,
                        converged: true,
                    },
                ));
            }
            r = true_r;
            z = apply_precond(&r);
            p = z.clone();
            rz = dot(&r, &z);
            continue;
        }
        if !r.iter().all(|v| v.is_finite()) {
            return Err(SolveError::Breakdown {
                iteration: iterations,
                reason: "non-finite iterate".into(),
            });
        }
        z = apply_precond(&r);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolveError::NonConvergence {
        iterations,
        residual: norm(&r) / b_norm,
    })
}

const DENSE_LIMIT: usize = 2000;

/// Dense LU with partial pivoting; the reference oracle for small systems.
pub fn dense_solve(matrix: &Csr, rhs: &[f64]) -> Result<Vec<f64>, SolveError> {
    let n = matrix.n();
    if n > DENSE_LIMIT {
        return Err(SolveError::TooLarge { n, limit: DENSE_LIMIT });
    }
    let mut a = vec![0.0f64; n * n];
    for i in 0..n {
        for (j, v) in matrix.row(i) {
            a[i * n + j] = v;
        }
    }
    let mut x = rhs.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let (pivot_row, pivot_val) = (col..n)
            .map(|r| (r, a[perm[r] * n + col].abs()))
            .max_by(|u, v| u.1.partial_cmp(&v.1).unwrap())
            .unwrap();
        if pivot_val < 1e-300 {
            return Err(SolveError::Singular { pivot: col });
        }
        perm.swap(col, pivot_row);
        let prow = perm[col];
        for r in (col + 1)..n {
            let row = perm[r];
            let factor = a[row * n + col] / a[prow * n + col];
            if factor == 0.0 {
                continue;
            }
            a[row * n + col] = 0.0;
            for c in (col + 1)..n {
                a[row * n + c] -= factor * a[prow * n + c];
            }
            x[row] -= factor * x[prow];
        }
    }
    let mut out = vec![0.0; n];
    for col in (0..n).rev() {
        let row = perm[col];
        let mut acc = x[row];
        for c in (col + 1)..n {
            acc -= a[row * n + c] * out[c];
        }
        out[col] = acc / a[row * n + col];
    }
    Ok(out)
}
