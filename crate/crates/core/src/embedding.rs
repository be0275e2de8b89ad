//! Hermitian embedding of a non-unitary marching operator.
//!
//! `H = [[0, iA], [-iA^T, 0]]` acts on the ancilla-extended register with
//! layout `index = a * N + m`. Starting from ancilla `|1>`, one evolution
//! `exp(-i H theta) [0; phi]` yields `[A~ phi; I~ phi]` with
//!
//! * `A~ = U sin(theta S) V^T` (the time step, ancilla `|0>`),
//! * `I~ = V cos(theta S) V^T` (the failure branch, ancilla `|1>`),
//!
//! where `A = U S V^T`. For real `A` the generator `-iH` is real, so both
//! blocks come out real for real `phi` and no phase correction is needed.
//!
//! The dense backend never forms `U`: it diagonalizes `A^T A = V S^2 V^T`
//! and uses `A~ = A V (sin(theta S) / S) V^T`, which stays well defined for
//! repeated or vanishing singular values.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::l2_norm;
use crate::krylov::{HamiltonianExp, LanczosConfig};
use crate::operator::SparseOperator;

/// Largest operator the dense SVD backend accepts.
pub const DENSE_MAX_DIM: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    DenseSvd,
    KrylovLanczos,
}

#[derive(Debug, Clone)]
enum Engine {
    /// `av = A V`, `sinc = sin(theta s) / s`.
    Dense {
        av: DMatrix<f64>,
        sigma: DVector<f64>,
        v: DMatrix<f64>,
        sinc: DVector<f64>,
        cos: DVector<f64>,
    },
    Krylov(HamiltonianExp),
}

#[derive(Debug, Clone)]
pub struct HermitianEmbedding {
    a: SparseOperator,
    theta: f64,
    engine: Engine,
}

/// Unnormalized branches of one evolution step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub top: Vec<Complex64>,
    pub bottom: Vec<Complex64>,
    pub p_success: f64,
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_2 + 1e-15) {
        return Err(Error::OutOfRange(format!(
            "theta = {theta} outside (0, pi/2]"
        )));
    }
    Ok(())
}

impl HermitianEmbedding {
    pub fn new(a: SparseOperator, theta: f64, backend: Backend) -> Result<Self> {
        Self::with_lanczos(a, theta, backend, LanczosConfig::default())
    }

    pub fn with_lanczos(
        a: SparseOperator,
        theta: f64,
        backend: Backend,
        lanczos: LanczosConfig,
    ) -> Result<Self> {
        check_theta(theta)?;
        let engine = match backend {
            Backend::DenseSvd => dense_engine(&a, theta)?,
            Backend::KrylovLanczos => Engine::Krylov(HamiltonianExp::new(a.clone(), lanczos)),
        };
        Ok(Self { a, theta, engine })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn operator(&self) -> &SparseOperator {
        &self.a
    }

    pub fn backend(&self) -> Backend {
        match self.engine {
            Engine::Dense { .. } => Backend::DenseSvd,
            Engine::Krylov(_) => Backend::KrylovLanczos,
        }
    }

    /// Dense `2N x 2N` Hamiltonian, for inspection on small operators.
    pub fn hamiltonian_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let a = self.a.to_dense();
        let mut h = DMatrix::from_element(2 * n, 2 * n, Complex64::default());
        for i in 0..n {
            for j in 0..n {
                h[(i, n + j)] = Complex64::new(0.0, a[(i, j)]);
                h[(n + j, i)] = Complex64::new(0.0, -a[(i, j)]);
            }
        }
        h
    }

    /// Singular values of `A~`, i.e. `sin(sigma_i(A) theta)`.
    pub fn tilde_singular_values(&self) -> Result<Vec<f64>> {
        match &self.engine {
            Engine::Dense { sigma, .. } => {
                Ok(sigma.iter().map(|s| (s * self.theta).sin().abs()).collect())
            }
            Engine::Krylov(_) => Err(Error::BackendMismatch(
                "singular values need the dense SVD backend".into(),
            )),
        }
    }

    pub fn singular_values(&self) -> Result<Vec<f64>> {
        match &self.engine {
            Engine::Dense { sigma, .. } => Ok(sigma.iter().copied().collect()),
            Engine::Krylov(_) => Err(Error::BackendMismatch(
                "singular values need the dense SVD backend".into(),
            )),
        }
    }

    /// Dense `(A~, I~)` blocks (dense backend only).
    pub fn tilde_blocks(&self) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        match &self.engine {
            Engine::Dense {
                av, v, sinc, cos, ..
            } => {
                let a_t = av * DMatrix::from_diagonal(sinc) * v.transpose();
                let i_t = v * DMatrix::from_diagonal(cos) * v.transpose();
                Ok((a_t, i_t))
            }
            Engine::Krylov(_) => Err(Error::BackendMismatch(
                "dense blocks need the dense SVD backend".into(),
            )),
        }
    }

    /// Applies `exp(-i H theta)` to `|1>|phi>` and splits the result.
    pub fn apply_step(&self, phi: &[Complex64]) -> Result<StepResult> {
        let n = self.dim();
        if phi.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: phi.len(),
            });
        }
        let norm = l2_norm(phi);
        if (norm - 1.0).abs() > 1e-8 {
            return Err(Error::Unnormalized { norm });
        }
        let (top, bottom) = match &self.engine {
            Engine::Dense {
                av, v, sinc, cos, ..
            } => {
                let re = DVector::from_iterator(n, phi.iter().map(|c| c.re));
                let im = DVector::from_iterator(n, phi.iter().map(|c| c.im));
                let has_im = phi.iter().any(|c| c.im != 0.0);
                let branch = |x: &DVector<f64>| {
                    let w = v.tr_mul(x);
                    (av * w.component_mul(sinc), v * w.component_mul(cos))
                };
                let (t_re, b_re) = branch(&re);
                let (t_im, b_im) = if has_im {
                    branch(&im)
                } else {
                    (DVector::zeros(n), DVector::zeros(n))
                };
                let join = |r: &DVector<f64>, i: &DVector<f64>| {
                    r.iter()
                        .zip(i.iter())
                        .map(|(a, b)| Complex64::new(*a, *b))
                        .collect::<Vec<_>>()
                };
                (join(&t_re, &t_im), join(&b_re, &b_im))
            }
            Engine::Krylov(exp) => {
                let mut v = vec![Complex64::default(); 2 * n];
                v[n..].copy_from_slice(phi);
                let mut out = exp.expv(self.theta, &v);
                let bottom = out.split_off(n);
                (out, bottom)
            }
        };
        let p_success = top.iter().map(|c| c.norm_sqr()).sum::<f64>();
        Ok(StepResult {
            top,
            bottom,
            p_success,
        })
    }
}

fn dense_engine(a: &SparseOperator, theta: f64) -> Result<Engine> {
    let n = a.dim();
    if n > DENSE_MAX_DIM {
        return Err(Error::OutOfRange(format!(
            "dense SVD backend limited to N <= {DENSE_MAX_DIM}, got {n}"
        )));
    }
    let dense = a.to_dense();
    let gram = dense.tr_mul(&dense);
    let eig = nalgebra::SymmetricEigen::try_new(gram.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::SvdFailure(format!("no convergence for {n} x {n} operator")))?;
    let v = eig.eigenvectors;
    if n <= 512 {
        let recon = &v * DMatrix::from_diagonal(&eig.eigenvalues) * v.transpose();
        let scale = gram.norm().max(f64::MIN_POSITIVE);
        let err = (recon - &gram).norm();
        if err > 1e-10 * scale {
            return Err(Error::SvdFailure(format!("reconstruction error {err:.3e}")));
        }
    }
    let sigma = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let sinc = sigma.map(|s| {
        if s == 0.0 {
            theta
        } else {
            (s * theta).sin() / s
        }
    });
    let cos = sigma.map(|s| (s * theta).cos());
    let av = &dense * &v;
    Ok(Engine::Dense {
        av,
        sigma,
        v,
        sinc,
        cos,
    })
}
