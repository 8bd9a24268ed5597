use nalgebra::{DMatrix, DVector};

use crate::algebra::{AlgebraSpec, Vector};
use crate::error::{Error, Result};
use crate::linalg;

use super::SearchConfig;

/// A G-orthonormal basis `Q` (n×d) of a subspace `U`, in which the form is
/// the Euclidean dot product. Products are compressed back into `U`:
/// `y ∘ z = Qᵀ G (Qy)(Qz)`. For `U = V` this is the whitened algebra.
pub(crate) struct Frame<'a> {
    algebra: &'a AlgebraSpec,
    basis: DMatrix<f64>,
    coframe: DMatrix<f64>,
}

impl<'a> Frame<'a> {
    pub fn full(algebra: &'a AlgebraSpec) -> Result<Self> {
        let w = algebra.whitening()?;
        // QᵀG = R⁻ᵀRᵀR = R
        Ok(Self {
            algebra,
            basis: w.r_inv,
            coframe: w.r,
        })
    }

    pub fn subspace(algebra: &'a AlgebraSpec, vectors: &[Vector]) -> Result<Self> {
        algebra.whitening()?;
        let q = algebra.gram_schmidt(vectors, 1e-10);
        if q.is_empty() {
            return Err(Error::InvalidParameter("subspace basis is empty or zero".into()));
        }
        let basis = DMatrix::from_columns(&q);
        let coframe = basis.transpose() * algebra.gram();
        Ok(Self {
            algebra,
            basis,
            coframe,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn lift(&self, y: &DVector<f64>) -> Vector {
        &self.basis * y
    }

    pub fn project(&self, x: &Vector) -> DVector<f64> {
        &self.coframe * x
    }

    pub fn square(&self, y: &DVector<f64>) -> DVector<f64> {
        let x = self.lift(y);
        &self.coframe * self.algebra.square(&x)
    }

    /// Compressed multiplication operator (symmetric).
    pub fn op(&self, y: &DVector<f64>) -> DMatrix<f64> {
        &self.coframe * self.algebra.left_mult(&self.lift(y)) * &self.basis
    }
}

#[derive(Debug, Clone)]
pub(crate) struct AscentTrace {
    pub y: DVector<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn riemannian_grad(frame: &Frame, y: &DVector<f64>) -> (f64, DVector<f64>) {
    let h = frame.square(y);
    let f = y.dot(&h);
    (f, (h - y * f) * 3.0)
}

fn value(frame: &Frame, y: &DVector<f64>) -> f64 {
    y.dot(&frame.square(y))
}

/// Projected gradient ascent of `⟨y², y⟩` on the unit sphere of the frame,
/// retraction by renormalization and Armijo backtracking. When roundoff
/// stalls the line search near a stationary point, the last digits are
/// recovered by a Newton polish on the compressed idempotent equation.
pub(crate) fn ascend(frame: &Frame, y0: &DVector<f64>, cfg: &SearchConfig) -> AscentTrace {
    let mut y = y0.normalize();
    // f scales like k^(-1/2) under G -> kG; scaling the step the same way
    // keeps the trajectory (and the returned point) independent of k
    let scale = frame.square(&y).norm();
    let scale = if scale > 1e-12 { scale } else { 1.0 };
    let mut step = 0.5 / scale;
    let max_step = 1e3 / scale;
    let mut iterations = 0;
    let (mut f, mut g) = riemannian_grad(frame, &y);
    let mut gn = g.norm();
    while gn > cfg.ascent_tol && iterations < cfg.ascent_max_iters {
        iterations += 1;
        let mut alpha = step;
        let mut first = true;
        let accepted = loop {
            let trial = (&y + &g * alpha).normalize();
            let ft = value(frame, &trial);
            if ft >= f + 1e-4 * alpha * gn * gn {
                break Some(trial);
            }
            alpha *= 0.5;
            first = false;
            if alpha < 1e-14 / scale {
                break None;
            }
        };
        let Some(next) = accepted else { break };
        y = next;
        step = if first { (alpha * 2.0).min(max_step) } else { alpha };
        (f, g) = riemannian_grad(frame, &y);
        gn = g.norm();
    }

    if gn > cfg.ascent_tol && gn < 1e-3 && f.abs() > cfg.nilpotent_threshold {
        let z0 = &y / f;
        let (z, _, _) = newton_idempotent(frame, &z0, cfg);
        let polished = z.normalize();
        let (fp, gp) = riemannian_grad(frame, &polished);
        if gp.norm() < gn && polished.iter().all(|v| v.is_finite()) {
            y = polished;
            f = fp;
            gn = gp.norm();
        }
    }

    AscentTrace {
        y,
        value: f,
        grad_norm: gn,
        iterations,
        converged: gn <= cfg.ascent_tol,
    }
}

/// Newton iteration for `z² = z` in frame coordinates with Jacobian
/// `2 L_z − I`; the pseudoinverse handles idempotent manifolds. Returns the
/// best iterate, its residual, and the iteration count.
pub(crate) fn newton_idempotent(
    frame: &Frame,
    z0: &DVector<f64>,
    cfg: &SearchConfig,
) -> (DVector<f64>, f64, usize) {
    let d = frame.dim();
    let eye = DMatrix::<f64>::identity(d, d);
    let mut z = z0.clone();
    let mut best = (z.clone(), f64::INFINITY);
    let mut stalled = 0;
    let mut iters = 0;
    for it in 0..=cfg.newton_max_iters {
        iters = it;
        let residual = frame.square(&z) - &z;
        let r = residual.norm();
        if !r.is_finite() {
            break;
        }
        if r < best.1 {
            if r > 0.5 * best.1 {
                stalled += 1;
            } else {
                stalled = 0;
            }
            best = (z.clone(), r);
        } else {
            stalled += 1;
        }
        if r <= cfg.newton_tol * 1e-3 || (best.1 <= cfg.newton_tol && stalled >= 2) {
            break;
        }
        if it == cfg.newton_max_iters {
            break;
        }
        let jac = frame.op(&z) * 2.0 - &eye;
        let dz = linalg::symmetric_pinv_solve(&jac, &residual, cfg.pinv_cutoff);
        z -= dz;
    }
    (best.0, best.1, iters)
}
