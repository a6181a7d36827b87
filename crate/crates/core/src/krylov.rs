//! Matrix-free conjugate gradients in a caller-supplied inner product.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::PAR_THRESHOLD;

/// A linear map that is self-adjoint and positive definite in the inner
/// product returned by [`LinearOperator::dot`].
pub trait LinearOperator {
    fn len(&self) -> usize;

    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn dot(&self, x: &[f64], y: &[f64]) -> f64;

    fn norm(&self, x: &[f64]) -> f64 {
        self.dot(x, x).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// `y += a x`
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    if y.len() >= PAR_THRESHOLD {
        y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += a * xi);
    } else {
        y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
    }
}

/// `p = r + b p`
fn xpby(r: &[f64], b: f64, p: &mut [f64]) {
    if p.len() >= PAR_THRESHOLD {
        p.par_iter_mut().zip(r.par_iter()).for_each(|(pi, ri)| *pi = ri + b * *pi);
    } else {
        p.iter_mut().zip(r).for_each(|(pi, ri)| *pi = ri + b * *pi);
    }
}

fn residual<A: LinearOperator + ?Sized>(op: &A, rhs: &[f64], x: &[f64], r: &mut [f64]) {
    op.apply(x, r);
    r.iter_mut().zip(rhs).for_each(|(ri, bi)| *ri = bi - *ri);
}

/// Solves `op(x) = rhs` starting from the contents of `x`.
///
/// Convergence means `|op(x) - rhs| <= tol |rhs|` in the operator's norm,
/// checked on the true residual; the iteration restarts if the recursively
/// updated residual has drifted below the target without the true one
/// following it.
pub fn conjugate_gradient<A: LinearOperator + ?Sized>(
    op: &A,
    rhs: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<LinearSolveStats> {
    let n = op.len();
    Error::check_len(n, rhs.len())?;
    Error::check_len(n, x.len())?;

    let b_norm = op.norm(rhs);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(LinearSolveStats { iterations: 0, relative_residual: 0.0, converged: true });
    }

    let mut r = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut iterations = 0;

    loop {
        residual(op, rhs, x, &mut r);
        let mut rr = op.dot(&r, &r);
        let true_rel = rr.max(0.0).sqrt() / b_norm;
        if true_rel <= tol {
            return Ok(LinearSolveStats { iterations, relative_residual: true_rel, converged: true });
        }
        if iterations >= max_iter {
            return Err(Error::Solver(LinearSolveStats { iterations, relative_residual: true_rel, converged: false }));
        }

        p.copy_from_slice(&r);
        while iterations < max_iter {
            iterations += 1;
            op.apply(&p, &mut ap);
            let pap = op.dot(&p, &ap);
            if !(pap > 0.0) {
                // breakdown: operator not positive on this direction
                return Err(Error::Solver(LinearSolveStats {
                    iterations,
                    relative_residual: rr.max(0.0).sqrt() / b_norm,
                    converged: false,
                }));
            }
            let alpha = rr / pap;
            axpy(alpha, &p, x);
            axpy(-alpha, &ap, &mut r);
            let rr_new = op.dot(&r, &r);
            if rr_new.max(0.0).sqrt() / b_norm <= tol {
                break;
            }
            xpby(&r, rr_new / rr, &mut p);
            rr = rr_new;
        }
    }
}

/// Convenience wrapper returning the solution, starting from zero.
pub fn solve_linear<A: LinearOperator + ?Sized>(
    op: &A,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, LinearSolveStats)> {
    let mut x = vec![0.0; op.len()];
    let stats = conjugate_gradient(op, rhs, &mut x, tol, max_iter)?;
    Ok((x, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Identity(usize);

    impl LinearOperator for Identity {
        fn len(&self) -> usize {
            self.0
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            y.copy_from_slice(x);
        }
        fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
            x.iter().zip(y).map(|(a, b)| a * b).sum()
        }
    }

    /// Dense SPD matrix with a diagonal weight inner product: the operator is
    /// `D^-1 M` with `M` symmetric, self-adjoint in `<x, y> = x^T D y`.
    struct Weighted {
        m: Vec<Vec<f64>>,
        d: Vec<f64>,
    }

    impl LinearOperator for Weighted {
        fn len(&self) -> usize {
            self.d.len()
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            for i in 0..self.d.len() {
                y[i] = self.m[i].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / self.d[i];
            }
        }
        fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
            x.iter().zip(y).zip(&self.d).map(|((a, b), w)| a * b * w).sum()
        }
    }

    fn random_weighted(n: usize, rng: &mut ChaCha8Rng) -> Weighted {
        let a: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                m[i][j] = (0..n).map(|k| a[i][k] * a[j][k]).sum::<f64>();
            }
            m[i][i] += 0.5;
        }
        Weighted { m, d: (0..n).map(|_| rng.gen_range(0.5..2.0)).collect() }
    }

    #[test]
    fn identity_solves_in_one_iteration() {
        let rhs = vec![1.0, -2.0, 3.5];
        let (x, stats) = solve_linear(&Identity(3), &rhs, 1e-12, 10).unwrap();
        assert_eq!(x, rhs);
        assert!(stats.iterations <= 1 && stats.converged);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let mut x = vec![4.0; 3];
        let stats = conjugate_gradient(&Identity(3), &[0.0; 3], &mut x, 1e-12, 10).unwrap();
        assert_eq!(x, vec![0.0; 3]);
        assert_eq!(stats.iterations, 0);
    }

    #[test]
    fn recovers_known_solution_in_weighted_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [5, 20, 40] {
            let op = random_weighted(n, &mut rng);
            let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut rhs = vec![0.0; n];
            op.apply(&xs, &mut rhs);
            let (x, stats) = solve_linear(&op, &rhs, 1e-12, 20 * n).unwrap();
            assert!(stats.converged && stats.relative_residual <= 1e-12);
            let err: Vec<f64> = x.iter().zip(&xs).map(|(a, b)| a - b).collect();
            // condition numbers here stay below 1e4
            assert!(op.norm(&err) <= 1e-7 * op.norm(&xs), "n={n}");
        }
    }

    #[test]
    fn reports_non_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let op = random_weighted(30, &mut rng);
        let rhs: Vec<f64> = (0..30).map(|k| (k as f64).cos()).collect();
        match solve_linear(&op, &rhs, 1e-14, 2) {
            Err(Error::Solver(stats)) => {
                assert_eq!(stats.iterations, 2);
                assert!(!stats.converged);
            }
            other => panic!("expected solver failure, got {other:?}"),
        }
    }
}
