//! Exact constructors for the standard algebra families used as fixtures.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::algebra::AlgebraSpec;
use crate::error::{Error, Result};

/// The Jordan algebra of a symmetric bilinear form `f` on `U = ℝ^m`,
/// realized on `ℝ ⊕ U`, optionally with an isomorphism onto another algebra.
#[derive(Debug, Clone, Serialize)]
pub struct SpinFactorModel {
    pub ambient_dim: usize,
    pub f: Vec<Vec<f64>>,
    /// Columns are the images of `ε, u_1, …, u_m` in the target algebra.
    pub iso: Option<Vec<Vec<f64>>>,
}

impl SpinFactorModel {
    pub fn new(f: &DMatrix<f64>, iso: Option<&DMatrix<f64>>) -> Self {
        Self {
            ambient_dim: f.nrows() + 1,
            f: rows(f),
            iso: iso.map(rows),
        }
    }

    pub fn form(&self) -> DMatrix<f64> {
        let m = self.f.len();
        DMatrix::from_fn(m, m, |i, j| self.f[i][j])
    }

    pub fn algebra(&self) -> Result<AlgebraSpec> {
        spin_factor(&self.form())
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// `ℝ ⊕ ℝ^m` with `(a⊕u)(b⊕v) = (ab + f(u,v)) ⊕ (av + bu)` and the trace form
/// `⟨a⊕u, b⊕v⟩ = 2ab + 2f(u,v)`. Basis order is `ε, u_1, …, u_m`.
pub fn spin_factor(f: &DMatrix<f64>) -> Result<AlgebraSpec> {
    let m = f.nrows();
    if m == 0 || f.ncols() != m {
        return Err(Error::InvalidParameter(format!(
            "spin factor form must be a nonempty square matrix, got {}x{}",
            f.nrows(),
            f.ncols()
        )));
    }
    let scale = f.amax().max(1.0);
    if (f - f.transpose()).amax() > 1e-12 * scale {
        return Err(Error::InvalidParameter("spin factor form is not symmetric".into()));
    }
    if nalgebra::Cholesky::new(f.clone()).is_none() {
        return Err(Error::InvalidParameter(
            "spin factor form is not positive definite".into(),
        ));
    }
    let n = m + 1;
    let mut c = vec![0.0; n * n * n];
    let idx = |i: usize, j: usize, k: usize| (i * n + j) * n + k;
    c[idx(0, 0, 0)] = 1.0;
    for i in 1..n {
        c[idx(0, i, i)] = 1.0;
        c[idx(i, 0, i)] = 1.0;
        for j in 1..n {
            // read from the upper triangle so that C is exactly symmetric
            c[idx(i, j, 0)] = f[(i.min(j) - 1, i.max(j) - 1)];
        }
    }
    let mut g = DMatrix::zeros(n, n);
    g[(0, 0)] = 2.0;
    for i in 1..n {
        for j in 1..n {
            g[(i, j)] = 2.0 * f[(i.min(j) - 1, i.max(j) - 1)];
        }
    }
    AlgebraSpec::new(format!("spin-factor(m={m})"), n, c, g)
}

/// Orthonormal basis of symmetric `n×n` matrices under `tr(XY)`:
/// the `E_ii` first, then `(E_ij + E_ji)/√2` for `i < j`.
pub fn sym_basis(n: usize) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        let mut m = DMatrix::zeros(n, n);
        m[(i, i)] = 1.0;
        out.push(m);
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for j in (i + 1)..n {
            let mut m = DMatrix::zeros(n, n);
            m[(i, j)] = r;
            m[(j, i)] = r;
            out.push(m);
        }
    }
    out
}

/// Symmetric `n×n` matrices with `X∘Y = (XY + YX)/2` and `⟨X,Y⟩ = tr(XY)`.
pub fn sym_jordan(n: usize) -> Result<AlgebraSpec> {
    if n == 0 {
        return Err(Error::InvalidParameter("sym_jordan requires n >= 1".into()));
    }
    let basis = sym_basis(n);
    let d = basis.len();
    let mut c = vec![0.0; d * d * d];
    // In an orthonormal basis C[a,b,k] = tr(B_a B_b B_k), fully symmetric;
    // evaluate each unordered triple once.
    for a in 0..d {
        for b in a..d {
            let ab = &basis[a] * &basis[b];
            for k in b..d {
                let v = (&ab * &basis[k]).trace();
                for (i, j, l) in [(a, b, k), (a, k, b), (b, a, k), (b, k, a), (k, a, b), (k, b, a)] {
                    c[(i * d + j) * d + l] = v;
                }
            }
        }
    }
    AlgebraSpec::new(format!("sym-jordan(n={n})"), d, c, DMatrix::identity(d, d))
}

/// Block-diagonal direct sum.
pub fn direct_sum(a: &AlgebraSpec, b: &AlgebraSpec) -> AlgebraSpec {
    let (p, q) = (a.dim(), b.dim());
    let n = p + q;
    let mut c = vec![0.0; n * n * n];
    for i in 0..p {
        for j in 0..p {
            for k in 0..p {
                c[(i * n + j) * n + k] = a.c(i, j, k);
            }
        }
    }
    for i in 0..q {
        for j in 0..q {
            for k in 0..q {
                c[((p + i) * n + p + j) * n + p + k] = b.c(i, j, k);
            }
        }
    }
    let mut g = DMatrix::zeros(n, n);
    g.view_mut((0, 0), (p, p)).copy_from(a.gram());
    g.view_mut((p, p), (q, q)).copy_from(b.gram());
    AlgebraSpec::new(format!("{} + {}", a.label(), b.label()), n, c, g)
        .expect("block shapes are consistent")
}

/// The one-dimensional algebra ℝ with `⟨1,1⟩ = 1`.
pub fn real_line() -> AlgebraSpec {
    AlgebraSpec::new("R", 1, vec![1.0], DMatrix::identity(1, 1)).expect("static shape")
}

/// `ℝ ⊕ ℝ` with componentwise product and identity Gram matrix.
pub fn rsquare() -> AlgebraSpec {
    direct_sum(&real_line(), &real_line()).with_label("rsquare")
}

/// `C ≡ 0`, `G = I`.
pub fn zero_algebra(n: usize) -> AlgebraSpec {
    AlgebraSpec::new(format!("zero(n={n})"), n, vec![0.0; n * n * n], DMatrix::identity(n, n))
        .expect("static shape")
}

/// A generic Euclidean metrised algebra: random fully symmetric cubic tensor
/// `T` and random SPD Gram `G`, with `C[i,j,·] = G⁻¹ T[i,j,·]`. Generically
/// neither unital nor Jordan.
pub fn random_metrised(n: usize, seed: u64) -> AlgebraSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = vec![0.0; n * n * n];
    for a in 0..n {
        for b in a..n {
            for k in b..n {
                let v: f64 = StandardNormal.sample(&mut rng);
                for (i, j, l) in [(a, b, k), (a, k, b), (b, a, k), (b, k, a), (k, a, b), (k, b, a)] {
                    t[(i * n + j) * n + l] = v;
                }
            }
        }
    }
    let m = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let g: DMatrix<f64> = (m.transpose() * &m) / (n as f64) + DMatrix::identity(n, n);
    let g_inv = g.clone().try_inverse().expect("SPD");
    let mut c = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            let row = DVector::from_fn(n, |k, _| t[(i * n + j) * n + k]);
            let sol = &g_inv * row;
            for k in 0..n {
                c[(i * n + j) * n + k] = sol[k];
            }
        }
    }
    AlgebraSpec::new(format!("random-metrised(n={n},seed={seed})"), n, c, g).expect("static shape")
}
