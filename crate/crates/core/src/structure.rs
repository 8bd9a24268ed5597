//! Minimality test, structural identities of minimal algebras, and the
//! explicit isomorphism onto a spin factor.
//!
//! A unital algebra is *minimal* when `|e|² = 2|c|²` for a shortest nonzero
//! idempotent `c`. After rescaling the form so that `|c| = 1`, a minimal
//! algebra satisfies `x² − ⟨x,e⟩x + ½(⟨x,e⟩² − |x|²)e = 0`, and
//! `a⊕u ↦ a·e + u` (with `u ∈ e^⊥`) is an isomorphism from the spin factor
//! of `f = ½⟨·,·⟩` on `e^⊥`.
//!
//! Every verdict here is over the *found* idempotent set of an
//! [`Enumeration`]; the reports carry its budget caveat.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::algebra::{AlgebraSpec, Vector};
use crate::constructions::{spin_factor, SpinFactorModel};
use crate::error::{Error, Result};
use crate::linalg;
use crate::search::{Enumeration, IdempotentKind, IdempotentRecord, SearchConfig};

/// A measured residual against its threshold.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Check {
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(value: f64, threshold: f64) -> Self {
        Self {
            value,
            threshold,
            passed: value <= threshold,
        }
    }
}

/// Thresholds for the identity checks.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct IdentityTolerances {
    pub conjugation: f64,
    pub product_formula: f64,
    pub quadratic_relation: f64,
    pub explicit_product: f64,
    pub jordan: f64,
    pub half_eigenspace: f64,
    pub homomorphism: f64,
    pub subalgebra: f64,
}

impl Default for IdentityTolerances {
    fn default() -> Self {
        Self {
            conjugation: 1e-9,
            product_formula: 1e-8,
            quadratic_relation: 1e-8,
            explicit_product: 1e-8,
            jordan: 1e-10,
            half_eigenspace: 1e-8,
            homomorphism: 1e-8,
            subalgebra: 1e-8,
        }
    }
}

impl IdentityTolerances {
    pub fn strict(self) -> Self {
        Self {
            conjugation: self.conjugation * 0.5,
            product_formula: self.product_formula * 0.5,
            quadratic_relation: self.quadratic_relation * 0.5,
            explicit_product: self.explicit_product * 0.5,
            jordan: self.jordan * 0.5,
            half_eigenspace: self.half_eigenspace * 0.5,
            homomorphism: self.homomorphism * 0.5,
            subalgebra: self.subalgebra * 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimalityReport {
    #[serde(serialize_with = "crate::report::ser_vector")]
    pub unit: Vector,
    pub unit_sq_length: f64,
    pub extremal_sq_length: f64,
    /// `|e|² − 2|c|²` in the given form.
    pub gap: f64,
    /// `|e|²/|c|² − 2`, the gap after normalization; decides minimality.
    pub normalized_gap: f64,
    pub threshold: f64,
    pub is_minimal: bool,
    /// `normalized_gap ≥ −threshold`, the lower bound `|e|² ≥ 2|c|²`.
    pub lower_bound_holds: bool,
    /// Max `|c̄² − c̄|` over found `c`, normalized form.
    pub conjugate_idempotent: Check,
    /// Max `|⟨c, c̄⟩|`, normalized form.
    pub conjugate_orthogonality: Check,
    /// Max `|⟨e, c⟩ − |c|²|`, normalized form.
    pub unit_pairing: Check,
    pub caveat: String,
}

fn nontrivial(records: &[IdempotentRecord]) -> impl Iterator<Item = &IdempotentRecord> {
    records.iter().filter(|r| r.kind != IdempotentKind::Unit)
}

/// Decides `|e|² = 2|c|²` over the found set and checks conjugation.
pub fn minimality_test(
    a: &AlgebraSpec,
    en: &Enumeration,
    cfg: &SearchConfig,
    tols: &IdentityTolerances,
) -> Result<MinimalityReport> {
    let e = en.unit.clone().ok_or(Error::NonUnital)?;
    let ext = nontrivial(&en.records)
        .map(|r| r.sq_length)
        .reduce(f64::min)
        .ok_or(Error::NoNontrivialIdempotent)?;
    let unit_sq = a.norm_sq(&e);
    let gap = unit_sq - 2.0 * ext;
    let normalized_gap = unit_sq / ext - 2.0;

    // conjugation identities in the normalized form: norms scale by 1/√ext
    let s = 1.0 / ext;
    let mut conj_idem = 0.0f64;
    let mut conj_orth = 0.0f64;
    let mut pairing = 0.0f64;
    for r in nontrivial(&en.records) {
        let cbar = &e - &r.c;
        conj_idem = conj_idem.max((s * a.norm_sq(&(a.square(&cbar) - &cbar))).sqrt());
        conj_orth = conj_orth.max((s * a.dot(&r.c, &cbar)).abs());
        pairing = pairing.max((s * (a.dot(&e, &r.c) - r.sq_length)).abs());
    }
    Ok(MinimalityReport {
        unit_sq_length: unit_sq,
        extremal_sq_length: ext,
        gap,
        normalized_gap,
        threshold: cfg.classify_tol,
        is_minimal: normalized_gap.abs() <= cfg.classify_tol,
        lower_bound_holds: normalized_gap >= -cfg.classify_tol,
        conjugate_idempotent: Check::new(conj_idem, tols.conjugation),
        conjugate_orthogonality: Check::new(conj_orth, tols.conjugation),
        unit_pairing: Check::new(pairing, tols.conjugation),
        caveat: en.caveat(),
        unit: e,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    /// `|e|²/2`, the length every nontrivial idempotent must have.
    pub expected_sq_length: f64,
    pub checked: usize,
    /// Indices into the record list with a different length.
    pub violators: Vec<usize>,
    pub max_deviation: f64,
    pub passed: bool,
}

/// In a minimal algebra every nonzero idempotent other than `e` is shortest.
/// Refuses non-minimal input.
pub fn classify_idempotents_minimal(
    a: &AlgebraSpec,
    en: &Enumeration,
    cfg: &SearchConfig,
    tols: &IdentityTolerances,
) -> Result<ClassificationReport> {
    let m = minimality_test(a, en, cfg, tols)?;
    if !m.is_minimal {
        return Err(Error::NotMinimal {
            gap: m.normalized_gap,
        });
    }
    let expected = m.unit_sq_length / 2.0;
    let mut violators = Vec::new();
    let mut max_deviation = 0.0f64;
    let mut checked = 0;
    for (i, r) in en.records.iter().enumerate() {
        if r.kind == IdempotentKind::Unit {
            continue;
        }
        checked += 1;
        let dev = (r.sq_length - expected).abs() / expected;
        max_deviation = max_deviation.max(dev);
        if dev > cfg.classify_tol {
            violators.push(i);
        }
    }
    Ok(ClassificationReport {
        expected_sq_length: expected,
        checked,
        passed: violators.is_empty(),
        violators,
        max_deviation,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenspaceReport {
    /// Dimension of `c^⊥ ∩ c̄^⊥`.
    pub dim: usize,
    pub eigenvalues: Vec<f64>,
    pub max_deviation: f64,
    pub passed: bool,
}

/// Spectrum of `L_c` on `c^⊥ ∩ c̄^⊥ = span(c, e)^⊥`, each eigenvalue
/// compared with `½`. Vacuously passes when the space is zero.
pub fn half_eigenspace_check(a: &AlgebraSpec, unit: &Vector, c: &Vector, tol: f64) -> Result<EigenspaceReport> {
    let cbar = unit - c;
    let basis = a.orthogonal_complement(&[c.clone(), cbar]);
    let eigenvalues = a.restricted_spectrum(c, &basis)?;
    let max_deviation = eigenvalues.iter().fold(0.0f64, |m, l| m.max((l - 0.5).abs()));
    Ok(EigenspaceReport {
        dim: basis.len(),
        passed: max_deviation <= tol,
        eigenvalues,
        max_deviation,
    })
}

/// Operator norm (form metric) of `[L_{x²}, L_x]`.
pub fn jordan_check(a: &AlgebraSpec, x: &Vector) -> Result<f64> {
    let lx = a.left_mult_matrix(x)?;
    let lx2 = a.left_mult(&a.square(x));
    let w = a.whitening()?;
    let comm = w.conjugate(&(&lx2 * &lx - &lx * &lx2));
    Ok(linalg::singular_extremes(&comm).0)
}

/// Largest component of a product of two elements of `span(s)` that falls
/// outside `span(s)`, over products of an orthonormal basis.
pub fn subalgebra_closure_defect(a: &AlgebraSpec, s: &[Vector]) -> f64 {
    let basis = a.gram_schmidt(s, 1e-8);
    let mut worst = 0.0f64;
    for (i, x) in basis.iter().enumerate() {
        for y in &basis[i..] {
            let mut p = a.product(x, y);
            for _ in 0..2 {
                for q in &basis {
                    let t = a.dot(q, &p);
                    p.axpy(-t, q, 1.0);
                }
            }
            worst = worst.max(a.norm(&p));
        }
    }
    worst
}

#[derive(Debug, Clone, Serialize)]
pub struct SpanReport {
    pub rank: usize,
    pub dim: usize,
    pub samples: usize,
    pub verdict: bool,
    /// A short rank is never a counterexample: the search may have missed
    /// shortest idempotents.
    pub inconclusive: bool,
}

/// Rank of the found shortest idempotents.
pub fn span_check(a: &AlgebraSpec, records: &[IdempotentRecord]) -> SpanReport {
    let ext: Vec<&IdempotentRecord> = records.iter().filter(|r| r.kind == IdempotentKind::Extremal).collect();
    let n = a.dim();
    let rank = if ext.is_empty() {
        0
    } else {
        let m = DMatrix::from_fn(ext.len(), n, |i, j| ext[i].c[j]);
        linalg::numerical_rank(&m, 1e-8)
    };
    SpanReport {
        rank,
        dim: n,
        samples: ext.len(),
        verdict: rank == n,
        inconclusive: rank != n,
    }
}

/// A verified-minimal algebra with its form rescaled so that shortest
/// idempotents have unit length (and `|e|² = 2`).
#[derive(Debug, Clone)]
pub struct MinimalContext {
    pub algebra: AlgebraSpec,
    /// Factor applied to the form.
    pub scale: f64,
    pub unit: Vector,
    /// Shortest idempotents from the enumeration.
    pub extremal: Vec<Vector>,
    pub minimality: MinimalityReport,
    classify_tol: f64,
}

impl MinimalContext {
    /// Runs the minimality test and normalizes; refuses non-minimal input.
    pub fn new(a: &AlgebraSpec, en: &Enumeration, cfg: &SearchConfig, tols: &IdentityTolerances) -> Result<Self> {
        let minimality = minimality_test(a, en, cfg, tols)?;
        if !minimality.is_minimal {
            return Err(Error::NotMinimal {
                gap: minimality.normalized_gap,
            });
        }
        let scale = 1.0 / minimality.extremal_sq_length;
        Ok(Self {
            algebra: a.with_scaled_gram(scale),
            scale,
            unit: minimality.unit.clone(),
            extremal: en.extremal().map(|r| r.c.clone()).collect(),
            minimality,
            classify_tol: cfg.classify_tol,
        })
    }

    fn ensure_extremal(&self, c: &Vector) -> Result<()> {
        let a = &self.algebra;
        if c.len() != a.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                got: c.len(),
            });
        }
        let res = a.norm(&(a.square(c) - c));
        let len = a.norm_sq(c);
        if res > self.classify_tol || (len - 1.0).abs() > self.classify_tol {
            return Err(Error::NotExtremal(format!(
                "idempotent residual {res:.3e}, squared length {len:.12}"
            )));
        }
        Ok(())
    }

    /// `|2c₁c₂ − c₁ − c₂ + ⟨e − c₁, c₂⟩e|` for shortest idempotents `c₁, c₂`.
    pub fn product_formula_residual(&self, c1: &Vector, c2: &Vector) -> Result<f64> {
        self.ensure_extremal(c1)?;
        self.ensure_extremal(c2)?;
        let a = &self.algebra;
        let e = &self.unit;
        let pairing = a.dot(&(e - c1), c2);
        let lhs = a.product(c1, c2) * 2.0 - c1 - c2 + e * pairing;
        Ok(a.norm(&lhs))
    }

    /// `|x² − ⟨x,e⟩x + d(x)e|` with `d(x) = ½(⟨x,e⟩² − |x|²)`.
    pub fn quadratic_relation_residual(&self, x: &Vector) -> Result<f64> {
        let a = &self.algebra;
        let xe = a.inner(x, &self.unit)?;
        let d = 0.5 * (xe * xe - a.norm_sq(x));
        Ok(a.norm(&(a.square(x) - x * xe + &self.unit * d)))
    }

    /// `½(⟨x,e⟩y + ⟨y,e⟩x − (⟨x,e⟩⟨y,e⟩ − ⟨x,y⟩)e)`.
    pub fn explicit_product(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        let a = &self.algebra;
        let xe = a.inner(x, &self.unit)?;
        let ye = a.inner(y, &self.unit)?;
        let xy = a.dot(x, y);
        Ok((y * xe + x * ye - &self.unit * (xe * ye - xy)) * 0.5)
    }

    /// Distance between the algebra product and [`Self::explicit_product`].
    pub fn explicit_product_residual(&self, x: &Vector, y: &Vector) -> Result<f64> {
        let closed = self.explicit_product(x, y)?;
        Ok(self.algebra.norm(&(self.algebra.product(x, y) - closed)))
    }

    /// Random element of unit length in the normalized form.
    pub fn random_unit(&self, rng: &mut ChaCha8Rng) -> Vector {
        random_unit(&self.algebra, rng)
    }
}

pub(crate) fn random_unit(a: &AlgebraSpec, rng: &mut ChaCha8Rng) -> Vector {
    loop {
        let x = Vector::from_fn(a.dim(), |_, _| StandardNormal.sample(&mut *rng));
        let n = a.norm(&x);
        if n > 1e-12 {
            return x / n;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IsomorphismReport {
    pub model: SpinFactorModel,
    /// Columns: images of `ε, u_1, …, u_{n−1}` in the given basis.
    pub phi: Vec<Vec<f64>>,
    /// Factor applied to the form before building the map.
    pub scale: f64,
    pub samples: usize,
    /// Max `|φ(z∙w) − φ(z)φ(w)|` over unit sample pairs.
    pub max_hom_defect: f64,
    /// Max entry of `φᵀ G φ − G_model`.
    pub isometry_defect: f64,
    /// Max distance between the product and its closed form on the images.
    pub explicit_product_defect: f64,
    /// Shortest idempotents `c_i` with `{e, c_i}` a basis.
    pub basis_idempotents: Vec<Vec<f64>>,
    /// Max `|e_i² − e|` with `e_i = 2c_i − e`.
    pub basis_square_residual: Option<f64>,
    /// Max `|e_i e_j − (1 − 2⟨e − c_i, c_j⟩)e|`.
    pub basis_cross_residual: Option<f64>,
    pub phi_condition: f64,
    pub invertible: bool,
    pub threshold: f64,
    pub verdict: bool,
}

/// Builds `φ: a⊕u ↦ a·e + u` from the spin factor of `f = ½⟨·,·⟩` on `e^⊥`
/// (in a G-orthonormal basis, so `f = ½I`) and verifies it on seeded random
/// pairs. Refuses algebras that are not minimal.
pub fn build_isomorphism(
    a: &AlgebraSpec,
    en: &Enumeration,
    cfg: &SearchConfig,
    tols: &IdentityTolerances,
    samples: usize,
) -> Result<IsomorphismReport> {
    let ctx = MinimalContext::new(a, en, cfg, tols)?;
    let na = &ctx.algebra;
    let n = na.dim();
    let e = &ctx.unit;
    let us = na.orthogonal_complement(std::slice::from_ref(e));
    if us.len() + 1 != n {
        return Err(Error::InvalidParameter(format!(
            "complement of the unit has dimension {}, expected {}",
            us.len(),
            n - 1
        )));
    }
    let m = n - 1;
    let f = DMatrix::from_fn(m, m, |i, j| 0.5 * na.dot(&us[i], &us[j]));
    let f = (&f + f.transpose()) * 0.5;
    let model_alg = spin_factor(&f)?;

    let mut cols = Vec::with_capacity(n);
    cols.push(e.clone());
    cols.extend(us.iter().cloned());
    let phi = DMatrix::from_columns(&cols);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5f37_59df);
    let mut max_hom = 0.0f64;
    let mut max_explicit = 0.0f64;
    for _ in 0..samples {
        let z = random_unit(&model_alg, &mut rng);
        let w = random_unit(&model_alg, &mut rng);
        let lhs = &phi * model_alg.product(&z, &w);
        let (pz, pw) = (&phi * &z, &phi * &w);
        let rhs = na.product(&pz, &pw);
        max_hom = max_hom.max(na.norm(&(lhs - rhs)));
        max_explicit = max_explicit.max(ctx.explicit_product_residual(&pz, &pw)?);
    }
    let isometry_defect = linalg::max_abs(&(phi.transpose() * na.gram() * &phi - model_alg.gram()));
    let (smax, smin) = linalg::singular_extremes(&phi);
    let invertible = smin > 1e-8 * smax;

    // basis of shortest idempotents completing e
    let mut picked: Vec<Vector> = Vec::new();
    let mut span = vec![e.clone()];
    for c in &ctx.extremal {
        if picked.len() == m {
            break;
        }
        let mut trial = span.clone();
        trial.push(c.clone());
        let mat = DMatrix::from_columns(&trial);
        if linalg::numerical_rank(&mat, 1e-8) == trial.len() {
            span = trial;
            picked.push(c.clone());
        }
    }
    let (square_res, cross_res) = if picked.is_empty() {
        (None, None)
    } else {
        let ei: Vec<Vector> = picked.iter().map(|c| c * 2.0 - e).collect();
        let mut sq = 0.0f64;
        let mut cross = 0.0f64;
        for (i, x) in ei.iter().enumerate() {
            sq = sq.max(na.norm(&(na.square(x) - e)));
            for j in (i + 1)..ei.len() {
                let coeff = 1.0 - 2.0 * na.dot(&(e - &picked[i]), &picked[j]);
                cross = cross.max(na.norm(&(na.product(x, &ei[j]) - e * coeff)));
            }
        }
        (Some(sq), (ei.len() > 1).then_some(cross))
    };

    let phi_condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    Ok(IsomorphismReport {
        model: SpinFactorModel::new(&f, Some(&phi)),
        phi: phi.row_iter().map(|r| r.iter().copied().collect()).collect(),
        scale: ctx.scale,
        samples,
        max_hom_defect: max_hom,
        isometry_defect,
        explicit_product_defect: max_explicit,
        basis_idempotents: picked.iter().map(|c| c.iter().copied().collect()).collect(),
        basis_square_residual: square_res,
        basis_cross_residual: cross_res,
        phi_condition,
        invertible,
        threshold: tols.homomorphism,
        verdict: max_hom <= tols.homomorphism && invertible,
    })
}

/// Convenience: the `φ` matrix of a report as a dense matrix.
pub fn phi_matrix(rep: &IsomorphismReport) -> DMatrix<f64> {
    let n = rep.phi.len();
    DMatrix::from_fn(n, n, |i, j| rep.phi[i][j])
}
