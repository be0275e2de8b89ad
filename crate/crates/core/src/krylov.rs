//! Lanczos approximation of `exp(-i H theta) v` for the embedding Hamiltonian
//! `H = [[0, iA], [-iA^T, 0]]`, applied matrix-free through `A` and `A^T`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::operator::SparseOperator;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosConfig {
    /// Absolute tolerance on the a-posteriori residual estimate (unit input).
    pub tol: f64,
    /// Largest Krylov subspace before the step is split in two.
    pub max_dim: usize,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_dim: 64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HamiltonianExp {
    a: SparseOperator,
    at: SparseOperator,
    config: LanczosConfig,
}

fn dot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).fold(ZERO, |acc, (a, b)| acc + a.conj() * b)
}

fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

impl HamiltonianExp {
    pub fn new(a: SparseOperator, config: LanczosConfig) -> Self {
        let at = a.transpose();
        Self { a, at, config }
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// `out = H v` for `v = [top; bottom]`.
    fn apply_h(&self, v: &[Complex64], out: &mut [Complex64]) {
        let n = self.a.dim();
        let (v_top, v_bot) = v.split_at(n);
        let (o_top, o_bot) = out.split_at_mut(n);
        self.a.apply(v_bot, o_top);
        self.at.apply(v_top, o_bot);
        o_top.iter_mut().for_each(|x| *x *= I);
        o_bot.iter_mut().for_each(|x| *x *= -I);
    }

    /// `exp(-i H theta) v` for a vector of length `2N`.
    pub fn expv(&self, theta: f64, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), 2 * self.dim());
        match self.try_expv(theta, v) {
            Some(out) => out,
            None => {
                log::debug!("Lanczos did not converge for theta = {theta:.3e}; splitting the step");
                let half = self.expv(0.5 * theta, v);
                self.expv(0.5 * theta, &half)
            }
        }
    }

    fn try_expv(&self, theta: f64, v: &[Complex64]) -> Option<Vec<Complex64>> {
        let beta = norm(v);
        if beta == 0.0 {
            return Some(vec![ZERO; v.len()]);
        }
        let len = v.len();
        let mut basis: Vec<Vec<Complex64>> = vec![v.iter().map(|x| x / beta).collect()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut offdiag: Vec<f64> = Vec::new();
        let mut w = vec![ZERO; len];

        for j in 0..self.config.max_dim {
            self.apply_h(&basis[j], &mut w);
            let a_j = dot(&basis[j], &w).re;
            alpha.push(a_j);
            for (wi, vi) in w.iter_mut().zip(&basis[j]) {
                *wi -= vi * a_j;
            }
            if j > 0 {
                let b = offdiag[j - 1];
                for (wi, vi) in w.iter_mut().zip(&basis[j - 1]) {
                    *wi -= vi * b;
                }
            }
            // full reorthogonalization against the whole basis
            for q in &basis {
                let c = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= qi * c;
                }
            }
            let b_j = norm(&w);

            let coeffs = exp_tridiagonal(&alpha, &offdiag, theta);
            let estimate = beta * b_j * coeffs[j].norm();
            let breakdown = b_j <= 1e-14 * (alpha.iter().fold(1.0_f64, |m, a| m.max(a.abs())));
            if estimate <= self.config.tol || breakdown {
                let mut out = vec![ZERO; len];
                for (c, q) in coeffs.iter().zip(&basis) {
                    let c = c * beta;
                    for (o, qi) in out.iter_mut().zip(q) {
                        *o += qi * c;
                    }
                }
                return Some(out);
            }
            offdiag.push(b_j);
            basis.push(w.iter().map(|x| x / b_j).collect());
        }
        None
    }
}

/// First column of `exp(-i theta T)` for the symmetric tridiagonal `T`.
fn exp_tridiagonal(alpha: &[f64], offdiag: &[f64], theta: f64) -> Vec<Complex64> {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for (k, &a) in alpha.iter().enumerate() {
        t[(k, k)] = a;
    }
    for (k, &b) in offdiag.iter().take(m.saturating_sub(1)).enumerate() {
        t[(k, k + 1)] = b;
        t[(k + 1, k)] = b;
    }
    let eig = SymmetricEigen::new(t);
    let q = &eig.eigenvectors;
    (0..m)
        .map(|r| {
            (0..m).fold(ZERO, |acc, k| {
                let phase = Complex64::from_polar(1.0, -theta * eig.eigenvalues[k]);
                acc + phase * (q[(r, k)] * q[(0, k)])
            })
        })
        .collect()
}
