//! Finite-dimensional commutative algebras carrying a symmetric bilinear form.
//!
//! An algebra is fixed by its structure constants `C[i,j,k]` (so that
//! `b_i b_j = Σ_k C[i,j,k] b_k`) together with the Gram matrix `G` of the form.
//! The form is *associative* when `⟨xy, z⟩ = ⟨x, yz⟩`, which in coordinates is
//! full symmetry of the cubic tensor `T[i,j,k] = Σ_m C[i,j,m] G[m,k]`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Whitening};

/// Coordinates of an algebra element in the chosen basis.
pub type Vector = DVector<f64>;

/// Default threshold for axiom defects.
pub const DEFAULT_AXIOM_TOL: f64 = 1e-9;
/// Default threshold for classification decisions.
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-8;
/// Structure constants whose (i,j)-asymmetry exceeds this are reported on load.
pub const SYMMETRIZATION_WARN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraSpec {
    label: String,
    dim: usize,
    structure: Vec<f64>,
    gram: DMatrix<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ValidationReport {
    pub commutativity_defect: f64,
    pub associativity_defect: f64,
    pub gram_symmetry_defect: f64,
    pub min_gram_eigenvalue: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub details: Vec<String>,
}

impl AlgebraSpec {
    /// Builds an algebra from a flat row-major `n³` structure array and an
    /// `n×n` Gram matrix. Stored as given; see [`AlgebraSpec::symmetrized`].
    pub fn new(
        label: impl Into<String>,
        dim: usize,
        structure: Vec<f64>,
        gram: DMatrix<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if structure.len() != dim * dim * dim {
            return Err(Error::ShapeMismatch {
                field: "structure",
                expected: dim * dim * dim,
                got: structure.len(),
            });
        }
        if gram.nrows() != dim || gram.ncols() != dim {
            return Err(Error::ShapeMismatch {
                field: "gram",
                expected: dim * dim,
                got: gram.len(),
            });
        }
        Ok(Self {
            label: label.into(),
            dim,
            structure,
            gram,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Flat row-major structure tensor.
    pub fn structure(&self) -> &[f64] {
        &self.structure
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.structure[(i * self.dim + j) * self.dim + k]
    }

    /// Copy with `C` replaced by its (i,j)-symmetric part, plus the max-abs
    /// asymmetry that was removed.
    pub fn symmetrized(&self) -> (Self, f64) {
        let n = self.dim;
        let mut out = self.structure.clone();
        let mut defect = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let a = self.c(i, j, k);
                    let b = self.c(j, i, k);
                    defect = defect.max((a - b).abs());
                    out[(i * n + j) * n + k] = if a == b { a } else { 0.5 * (a + b) };
                }
            }
        }
        let spec = Self {
            structure: out,
            ..self.clone()
        };
        (spec, defect)
    }

    fn check_dim(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// The product `xy = Σ x_i y_j C[i,j,·]`.
    pub fn multiply(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        Ok(self.product(x, y))
    }

    /// Unchecked product for internal hot loops.
    pub(crate) fn product(&self, x: &Vector, y: &Vector) -> Vector {
        let n = self.dim;
        let mut out = Vector::zeros(n);
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let w = x[i] * y[j];
                if w == 0.0 {
                    continue;
                }
                let row = &self.structure[(i * n + j) * n..(i * n + j + 1) * n];
                for (o, c) in out.iter_mut().zip(row) {
                    *o += w * c;
                }
            }
        }
        out
    }

    pub(crate) fn square(&self, x: &Vector) -> Vector {
        self.product(x, x)
    }

    /// `xᵀ G y`.
    pub fn inner(&self, x: &Vector, y: &Vector) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        Ok(self.dot(x, y))
    }

    pub(crate) fn dot(&self, x: &Vector, y: &Vector) -> f64 {
        x.dot(&(&self.gram * y))
    }

    pub fn norm_sq(&self, x: &Vector) -> f64 {
        self.dot(x, x)
    }

    /// Norm induced by the form; only meaningful when `G` is positive definite.
    pub fn norm(&self, x: &Vector) -> f64 {
        self.norm_sq(x).max(0.0).sqrt()
    }

    /// The cubic form `⟨x², x⟩`.
    pub fn cubic_form(&self, x: &Vector) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.dot(&self.square(x), x))
    }

    /// Matrix of `y ↦ xy`.
    pub fn left_mult_matrix(&self, x: &Vector) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        Ok(self.left_mult(x))
    }

    pub(crate) fn left_mult(&self, x: &Vector) -> DMatrix<f64> {
        let n = self.dim;
        let mut l = DMatrix::zeros(n, n);
        for i in 0..n {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                for k in 0..n {
                    l[(k, j)] += x[i] * self.c(i, j, k);
                }
            }
        }
        l
    }

    pub fn whitening(&self) -> Result<Whitening> {
        Whitening::new(&self.gram)
    }

    /// Eigenvalues of `L_x`, ascending, computed from the symmetric matrix
    /// `R L_x R⁻¹` where `G = RᵀR`.
    pub fn operator_spectrum(&self, x: &Vector) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let w = self.whitening()?;
        Ok(linalg::symmetric_eigenvalues(&w.conjugate(&self.left_mult(x))))
    }

    /// Eigenvalues of `L_x` compressed to the span of a G-orthonormal family.
    pub fn restricted_spectrum(&self, x: &Vector, basis: &[Vector]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let d = basis.len();
        if d == 0 {
            return Ok(Vec::new());
        }
        let l = self.left_mult(x);
        let mut m = DMatrix::zeros(d, d);
        let images: Vec<Vector> = basis.iter().map(|b| &l * b).collect();
        for a in 0..d {
            for b in 0..d {
                m[(a, b)] = self.dot(&basis[a], &images[b]);
            }
        }
        Ok(linalg::symmetric_eigenvalues(&m))
    }

    /// Gram–Schmidt in the form's inner product, two passes per vector.
    /// Candidates whose remainder falls below `drop_tol` (relative to their
    /// own norm) are skipped. Deterministic in the input order.
    pub fn gram_schmidt(&self, candidates: &[Vector], drop_tol: f64) -> Vec<Vector> {
        let mut out: Vec<Vector> = Vec::new();
        for v in candidates {
            let scale = self.norm(v);
            if scale == 0.0 {
                continue;
            }
            let mut w = v.clone();
            for _ in 0..2 {
                for q in &out {
                    let p = self.dot(q, &w);
                    w.axpy(-p, q, 1.0);
                }
            }
            let nw = self.norm(&w);
            if nw > drop_tol * scale {
                out.push(w / nw);
            }
        }
        out
    }

    /// G-orthonormal basis of the G-orthogonal complement of `span(vs)`.
    pub fn orthogonal_complement(&self, vs: &[Vector]) -> Vec<Vector> {
        let head = self.gram_schmidt(vs, 1e-10);
        let k = head.len();
        let mut cands = head;
        for i in 0..self.dim {
            cands.push(Vector::from_fn(self.dim, |r, _| if r == i { 1.0 } else { 0.0 }));
        }
        let all = self.gram_schmidt(&cands, 1e-8);
        all.into_iter().skip(k).collect()
    }

    /// Checks commutativity, associativity of the form and definiteness.
    pub fn validate(&self, tol: f64) -> ValidationReport {
        let n = self.dim;
        let mut comm = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    comm = comm.max((self.c(i, j, k) - self.c(j, i, k)).abs());
                }
            }
        }

        let mut t = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut s = 0.0;
                    for m in 0..n {
                        s += self.c(i, j, m) * self.gram[(m, k)];
                    }
                    t[(i * n + j) * n + k] = s;
                }
            }
        }
        let at = |i: usize, j: usize, k: usize| t[(i * n + j) * n + k];
        let mut assoc = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let v = at(i, j, k);
                    for w in [at(j, i, k), at(i, k, j), at(k, j, i), at(j, k, i), at(k, i, j)] {
                        assoc = assoc.max((v - w).abs());
                    }
                }
            }
        }

        let gsym = linalg::max_abs(&(&self.gram - self.gram.transpose()));
        let min_eig = linalg::symmetric_eigenvalues(&self.gram)
            .first()
            .copied()
            .unwrap_or(f64::NAN);

        let mut details = Vec::new();
        let comm_ok = comm <= tol;
        let assoc_ok = assoc <= tol;
        let gsym_ok = gsym <= tol;
        let pd_ok = min_eig > 0.0;
        details.push(format!(
            "commutativity: defect {comm:.3e} vs {tol:.1e} -> {}",
            pass_fail(comm_ok)
        ));
        details.push(format!(
            "form associativity: defect {assoc:.3e} vs {tol:.1e} -> {}",
            pass_fail(assoc_ok)
        ));
        details.push(format!(
            "gram symmetry: defect {gsym:.3e} vs {tol:.1e} -> {}",
            pass_fail(gsym_ok)
        ));
        details.push(format!(
            "positive definiteness: min eigenvalue {min_eig:.6e} -> {}",
            pass_fail(pd_ok)
        ));

        ValidationReport {
            commutativity_defect: comm,
            associativity_defect: assoc,
            gram_symmetry_defect: gsym,
            min_gram_eigenvalue: min_eig,
            tolerance: tol,
            passed: comm_ok && assoc_ok && gsym_ok && pd_ok,
            details,
        }
    }

    /// Least-squares solve of `Σ_i e_i C[i,j,k] = δ_jk`; returns the unit
    /// when `max |L_e − I| ≤ tol`.
    pub fn find_unit(&self, tol: f64) -> Option<Vector> {
        let n = self.dim;
        let mut m = DMatrix::zeros(n * n, n);
        let mut rhs = DVector::zeros(n * n);
        for j in 0..n {
            for k in 0..n {
                for i in 0..n {
                    m[(j * n + k, i)] = self.c(i, j, k);
                }
                if j == k {
                    rhs[j * n + k] = 1.0;
                }
            }
        }
        let svd = m.svd(true, true);
        let max_sv = svd.singular_values.iter().copied().fold(0.0, f64::max);
        if max_sv == 0.0 {
            return None;
        }
        let e = svd.solve(&rhs, 1e-12 * max_sv).ok()?;
        let defect = linalg::max_abs(&(self.left_mult(&e) - DMatrix::identity(n, n)));
        (defect <= tol).then_some(e)
    }

    /// Copy with Gram matrix `k·G`.
    pub fn with_scaled_gram(&self, k: f64) -> Self {
        Self {
            gram: &self.gram * k,
            ..self.clone()
        }
    }

    /// Rescales the form so that the shortest nonzero idempotent has unit
    /// length. `shortest` reports the minimal squared length over the
    /// idempotents it can find; the returned scalar is the applied factor.
    pub fn normalized_with<F>(&self, shortest: F) -> Result<(Self, f64)>
    where
        F: FnOnce(&Self) -> Result<f64>,
    {
        if self.structure.iter().all(|&c| c == 0.0) {
            return Err(Error::ZeroAlgebra);
        }
        let len_sq = shortest(self)?;
        if len_sq.is_nan() || len_sq <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "shortest idempotent has non-positive squared length {len_sq}"
            )));
        }
        let k = 1.0 / len_sq;
        Ok((self.with_scaled_gram(k), k))
    }

    /// Re-expresses the algebra in the basis `b'_i = Σ_k P[k,i] b_k`, so that
    /// old coordinates are `x = P x'`.
    pub fn transformed(&self, p: &DMatrix<f64>) -> Result<Self> {
        let n = self.dim;
        if p.nrows() != n || p.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.nrows(),
            });
        }
        let p_inv = p
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidParameter("basis change is singular".into()))?;
        let cols: Vec<Vector> = (0..n).map(|i| p.column(i).into_owned()).collect();
        let mut structure = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                let prod = &p_inv * self.product(&cols[i], &cols[j]);
                for k in 0..n {
                    structure[(i * n + j) * n + k] = prod[k];
                }
            }
        }
        let gram = p.transpose() * &self.gram * p;
        Self::new(self.label.clone(), n, structure, gram)
    }
}

fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}
