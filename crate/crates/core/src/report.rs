//! The analysis pipeline behind the CLI and its two renderings: a
//! deterministic JSON report and a human summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::algebra::{AlgebraSpec, ValidationReport, Vector, DEFAULT_AXIOM_TOL};
use crate::error::Error;
use crate::io;
use crate::search::{
    enumerate_idempotents, extremal_set, spectral_check, Enumeration, ExtremalSet, IdempotentKind, SearchConfig,
    SpectralReport,
};
use crate::structure::{
    build_isomorphism, classify_idempotents_minimal, half_eigenspace_check, jordan_check, minimality_test,
    random_unit, span_check, subalgebra_closure_defect, Check, ClassificationReport, IdentityTolerances,
    IsomorphismReport, MinimalContext, MinimalityReport, SpanReport,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub(crate) fn ser_vector<S: Serializer>(v: &Vector, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}

pub(crate) fn ser_opt_vector<S: Serializer>(v: &Option<Vector>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_seq(v.iter()),
        None => s.serialize_none(),
    }
}

/// How far the pipeline runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Validate,
    Idempotents,
    Minimality,
    Isomorphism,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisConfig {
    pub search: SearchConfig,
    pub tolerances: IdentityTolerances,
    pub axiom_tol: f64,
    /// Random samples for the inequality, quadratic-relation, explicit-product
    /// and homomorphism checks.
    pub samples: usize,
    pub jordan_samples: usize,
    pub strict: bool,
    pub through: Stage,
    #[serde(skip)]
    pub timings: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            search: SearchConfig::default(),
            tolerances: IdentityTolerances::default(),
            axiom_tol: DEFAULT_AXIOM_TOL,
            samples: 1000,
            jordan_samples: 100,
            strict: false,
            through: Stage::Isomorphism,
            timings: false,
        }
    }
}

impl AnalysisConfig {
    /// Halves every tolerance.
    pub fn strict(mut self) -> Self {
        self.search = self.search.strict();
        self.tolerances = self.tolerances.strict();
        self.axiom_tol *= 0.5;
        self.strict = true;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    #[serde(flatten)]
    pub config: AnalysisConfig,
    pub resolved_ascent_starts: usize,
    pub resolved_newton_starts: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralEntry {
    /// Index into `idempotents.records`.
    pub record: usize,
    pub lc_spectrum: Vec<f64>,
    pub check: SpectralReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct Skipped {
    pub stage: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Stopped {
    pub stage: String,
    pub reason: String,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub label: String,
    pub dim: usize,
    pub config: ConfigEcho,
    pub load_warnings: Vec<String>,
    pub validation: Option<ValidationReport>,
    #[serde(serialize_with = "ser_opt_vector")]
    pub unit: Option<Vector>,
    pub idempotents: Option<Enumeration>,
    pub extremal: Option<ExtremalSet>,
    pub spectral: Vec<SpectralEntry>,
    pub minimality: Option<MinimalityReport>,
    pub classification: Option<ClassificationReport>,
    pub span: Option<SpanReport>,
    pub identities: BTreeMap<String, Check>,
    pub isomorphism: Option<IsomorphismReport>,
    pub skipped: Vec<Skipped>,
    pub stopped: Option<Stopped>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
}

/// Process exit code for an error: parse 2, axioms 3, non-unital 4,
/// exhausted search 5, anything else 1.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::ShapeMismatch { .. } | Error::Io(_) => 2,
        Error::NotPositiveDefinite => 3,
        Error::NonUnital => 4,
        Error::SearchExhausted { .. } | Error::NewtonDivergence { .. } => 5,
        _ => 1,
    }
}

impl AnalysisReport {
    fn empty(label: &str, dim: usize, cfg: &AnalysisConfig) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            label: label.to_string(),
            dim,
            config: ConfigEcho {
                config: cfg.clone(),
                resolved_ascent_starts: cfg.search.ascent_starts(dim),
                resolved_newton_starts: cfg.search.newton_starts(dim),
            },
            load_warnings: Vec::new(),
            validation: None,
            unit: None,
            idempotents: None,
            extremal: None,
            spectral: Vec::new(),
            minimality: None,
            classification: None,
            span: None,
            identities: BTreeMap::new(),
            isomorphism: None,
            skipped: Vec::new(),
            stopped: None,
            timings: cfg.timings.then(BTreeMap::new),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.stopped.as_ref().map_or(0, |s| s.exit_code)
    }

    fn stop(&mut self, stage: &str, reason: String, exit_code: i32) {
        self.stopped = Some(Stopped {
            stage: stage.into(),
            reason,
            exit_code,
        });
    }

    fn stop_err(&mut self, stage: &str, e: &Error) {
        self.stop(stage, e.to_string(), exit_code(e));
    }

    fn skip(&mut self, stage: &str, reason: impl Into<String>) {
        self.skipped.push(Skipped {
            stage: stage.into(),
            reason: reason.into(),
        });
    }

    fn check(&mut self, name: &str, value: f64, threshold: f64) {
        self.identities.insert(name.into(), Check::new(value, threshold));
    }

    fn time(&mut self, stage: &str, t: Instant) {
        if let Some(map) = self.timings.as_mut() {
            map.insert(stage.into(), t.elapsed().as_secs_f64());
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Loads `path` and runs the pipeline; load failures become a stopped report.
pub fn run_analysis(path: &Path, cfg: &AnalysisConfig) -> AnalysisReport {
    match io::load(path) {
        Ok(loaded) => {
            let mut rep = analyze(&loaded.algebra, cfg);
            rep.load_warnings = loaded.warnings;
            rep
        }
        Err(e) => {
            let mut rep = AnalysisReport::empty("", 0, cfg);
            rep.stop_err("load", &e);
            rep
        }
    }
}

/// validate → unit → search → minimality → identities → isomorphism,
/// stopping at the first hard failure or at `cfg.through`.
pub fn analyze(a: &AlgebraSpec, cfg: &AnalysisConfig) -> AnalysisReport {
    let mut rep = AnalysisReport::empty(a.label(), a.dim(), cfg);
    if let Err(e) = cfg.search.validate() {
        rep.stop_err("config", &e);
        return rep;
    }

    let t = Instant::now();
    let validation = a.validate(cfg.axiom_tol);
    let passed = validation.passed;
    rep.validation = Some(validation);
    rep.time("validate", t);
    if !passed {
        rep.stop("validate", "algebra fails the metrised-algebra axioms".into(), 3);
        return rep;
    }
    if cfg.through == Stage::Validate {
        return rep;
    }

    if cfg.through >= Stage::Minimality && a.find_unit(cfg.search.unit_tol).is_none() {
        rep.stop_err("unit", &Error::NonUnital);
        return rep;
    }

    let t = Instant::now();
    let en = match enumerate_idempotents(a, &cfg.search) {
        Ok(en) => en,
        Err(e) => {
            rep.stop_err("idempotents", &e);
            return rep;
        }
    };
    rep.unit = en.unit.clone();
    rep.time("idempotents", t);
    let rng_seed = cfg.search.seed ^ 0x2545_f491_4f6c_dd1d;
    let has_records = !en.records.is_empty();
    rep.idempotents = Some(en);
    let en = rep.idempotents.as_ref().unwrap();
    if !has_records {
        let starts = en.ascent_starts + en.saddle_starts;
        rep.stop_err("idempotents", &Error::SearchExhausted { starts });
        return rep;
    }

    let t = Instant::now();
    let extremal = extremal_set(a, &en.records, cfg.samples, &cfg.search);
    let mut spectral = Vec::new();
    for (i, r) in en.records.iter().enumerate() {
        if r.kind == IdempotentKind::Extremal {
            if let Ok(check) = spectral_check(a, r, cfg.search.classify_tol) {
                spectral.push(SpectralEntry {
                    record: i,
                    lc_spectrum: r.lc_spectrum.clone(),
                    check,
                });
            }
        }
    }
    let en = rep.idempotents.clone().unwrap();
    rep.spectral = spectral;
    match extremal {
        Ok(ex) => {
            rep.check("extremal_inequality", ex.max_ratio - 1.0, crate::search::EXTREMAL_INEQ_TOL);
            rep.extremal = Some(ex);
        }
        Err(e) => rep.skip("extremal", e.to_string()),
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let jordan = (0..cfg.jordan_samples)
        .filter_map(|_| jordan_check(a, &random_unit(a, &mut rng)).ok())
        .fold(0.0f64, f64::max);
    rep.check("jordan_commutator", jordan, cfg.tolerances.jordan);
    rep.time("extremal", t);

    if en.unit.is_none() {
        rep.stop_err("unit", &Error::NonUnital);
        return rep;
    }
    if cfg.through == Stage::Idempotents {
        return rep;
    }

    let t = Instant::now();
    let minimality = match minimality_test(a, &en, &cfg.search, &cfg.tolerances) {
        Ok(m) => m,
        Err(Error::NoNontrivialIdempotent) if a.dim() == 1 => {
            rep.skip("minimality", "one-dimensional algebra: the unit is the only nonzero idempotent");
            return rep;
        }
        Err(Error::NoNontrivialIdempotent) => {
            let starts = en.ascent_starts + en.saddle_starts;
            rep.stop(
                "minimality",
                format!(
                    "only the unit was found in dimension {}; nontrivial idempotents exist, \
                     so the search budget ({starts} starts) was insufficient",
                    a.dim()
                ),
                5,
            );
            return rep;
        }
        Err(e) => {
            rep.stop_err("minimality", &e);
            return rep;
        }
    };
    rep.check("conjugate_idempotent", minimality.conjugate_idempotent.value, minimality.conjugate_idempotent.threshold);
    rep.check(
        "conjugate_orthogonality",
        minimality.conjugate_orthogonality.value,
        minimality.conjugate_orthogonality.threshold,
    );
    rep.check("unit_pairing", minimality.unit_pairing.value, minimality.unit_pairing.threshold);
    let is_minimal = minimality.is_minimal;
    let gap = minimality.normalized_gap;
    rep.minimality = Some(minimality);
    rep.time("minimality", t);
    if !is_minimal {
        let reason = format!("algebra is not minimal (normalized gap {gap:.6e})");
        rep.skip("classification", reason.clone());
        rep.skip("identities", reason.clone());
        if cfg.through == Stage::Isomorphism {
            rep.skip("isomorphism", reason);
        }
        return rep;
    }

    let t = Instant::now();
    match classify_idempotents_minimal(a, &en, &cfg.search, &cfg.tolerances) {
        Ok(c) => rep.classification = Some(c),
        Err(e) => rep.skip("classification", e.to_string()),
    }
    rep.span = Some(span_check(a, &en.records));
    match MinimalContext::new(a, &en, &cfg.search, &cfg.tolerances) {
        Ok(ctx) => identity_table(&mut rep, &ctx, cfg, rng_seed),
        Err(e) => rep.skip("identities", e.to_string()),
    }
    rep.time("identities", t);
    if cfg.through == Stage::Minimality {
        return rep;
    }

    let t = Instant::now();
    match build_isomorphism(a, &en, &cfg.search, &cfg.tolerances, cfg.samples) {
        Ok(iso) => {
            rep.check("homomorphism", iso.max_hom_defect, iso.threshold);
            if let Some(v) = iso.basis_square_residual {
                rep.check("basis_square", v, cfg.tolerances.homomorphism);
            }
            if let Some(v) = iso.basis_cross_residual {
                rep.check("basis_cross_product", v, cfg.tolerances.homomorphism);
            }
            rep.isomorphism = Some(iso);
        }
        Err(e) => rep.skip("isomorphism", e.to_string()),
    }
    rep.time("isomorphism", t);
    rep
}

fn identity_table(rep: &mut AnalysisReport, ctx: &MinimalContext, cfg: &AnalysisConfig, seed: u64) {
    let tols = &cfg.tolerances;
    let na = &ctx.algebra;
    let e = &ctx.unit;
    let ext: Vec<&Vector> = ctx.extremal.iter().take(40).collect();

    let mut product = 0.0f64;
    let mut pairing = 0.0f64;
    let mut half = 0.0f64;
    for c1 in &ext {
        pairing = pairing.max((na.dot(e, c1) - 1.0).abs());
        if let Ok(r) = half_eigenspace_check(na, e, c1, tols.half_eigenspace) {
            half = half.max(r.max_deviation);
        }
        for c2 in &ext {
            if let Ok(r) = ctx.product_formula_residual(c1, c2) {
                product = product.max(r);
            }
        }
    }
    rep.check("product_formula", product, tols.product_formula);
    rep.check("unit_pairing_normalized", pairing, tols.conjugation);
    rep.check("half_eigenspace", half, tols.half_eigenspace);

    let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(17));
    let mut quad = 0.0f64;
    let mut explicit = 0.0f64;
    for _ in 0..cfg.samples {
        let x = ctx.random_unit(&mut rng);
        let y = ctx.random_unit(&mut rng);
        quad = quad.max(ctx.quadratic_relation_residual(&x).unwrap_or(f64::INFINITY));
        explicit = explicit.max(ctx.explicit_product_residual(&x, &y).unwrap_or(f64::INFINITY));
    }
    rep.check("quadratic_relation", quad, tols.quadratic_relation);
    rep.check("explicit_product", explicit, tols.explicit_product);

    if let Some(c0) = ext.first() {
        let mut s: Vec<Vector> = vec![(*c0).clone(), e - *c0];
        if let Some(c1) = ext.get(1) {
            s.push((*c1).clone());
        }
        rep.check("subalgebra_closure", subalgebra_closure_defect(na, &s), tols.subalgebra);
    }
}

fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{:.6}", if x.abs() < 5e-7 { 0.0 } else { *x })).collect();
    format!("[{}]", parts.join(", "))
}

fn verdict(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

/// Human summary. Prints the `L_c` spectrum of every extremal idempotent.
pub fn render_human(rep: &AnalysisReport) -> String {
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(w, "algebra   {} (dim {})", rep.label, rep.dim);
    for warn in &rep.load_warnings {
        let _ = writeln!(w, "warning   {warn}");
    }
    if let Some(v) = &rep.validation {
        let _ = writeln!(
            w,
            "validate  {}  commutativity {:.2e}  associativity {:.2e}  gram symmetry {:.2e}  min gram eigenvalue {:.6e}  (tol {:.1e})",
            verdict(v.passed),
            v.commutativity_defect,
            v.associativity_defect,
            v.gram_symmetry_defect,
            v.min_gram_eigenvalue,
            v.tolerance
        );
        for d in &v.details {
            let _ = writeln!(w, "          {d}");
        }
    }
    if let Some(en) = &rep.idempotents {
        match &rep.unit {
            Some(e) => {
                let _ = writeln!(w, "unit      {}", fmt_list(e.as_slice()));
            }
            None => {
                let _ = writeln!(w, "unit      none");
            }
        }
        let _ = writeln!(
            w,
            "search    {} idempotents from {} ascent + {} Newton starts ({} nilpotent, {} unconverged, {} Newton failures)",
            en.records.len(),
            en.ascent_starts,
            en.saddle_starts,
            en.nilpotent_count,
            en.unconverged_ascents,
            en.newton_failures
        );
        let mut kinds: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &en.records {
            let k = match r.kind {
                IdempotentKind::Unit => "unit",
                IdempotentKind::Extremal => "extremal",
                IdempotentKind::Other => "other",
            };
            *kinds.entry(k).or_default() += 1;
        }
        if !kinds.is_empty() {
            let summary: Vec<String> = kinds.iter().map(|(k, v)| format!("{k} {v}")).collect();
            let _ = writeln!(w, "          {}", summary.join(", "));
        }
    }
    if let Some(ex) = &rep.extremal {
        let _ = writeln!(
            w,
            "extremal  |c|² = {:.12}  ({} records); sampled max ⟨x,x²⟩|c|/|x|³ = {:.12} over {} points, {} violations",
            ex.sq_length,
            ex.members.len(),
            ex.max_ratio,
            ex.samples,
            ex.violations
        );
    }
    if !rep.spectral.is_empty() {
        // a continuum of idempotents yields many identical lines; group them
        let _ = writeln!(w, "L_c spectra of extremal idempotents:");
        let en = rep.idempotents.as_ref();
        let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
        for s in &rep.spectral {
            let md = en.map_or(0, |en| en.records[s.record].manifold_dim);
            let line = format!(
                "{}  on c⊥ max {:.6} ≤ ½: {}  manifold dim {}",
                fmt_list(&s.lc_spectrum),
                s.check.max_restricted,
                verdict(s.check.within_bound),
                md
            );
            match groups.iter_mut().find(|(l, _)| *l == line) {
                Some((_, ids)) => ids.push(s.record),
                None => groups.push((line, vec![s.record])),
            }
        }
        for (line, ids) in groups {
            let who = if ids.len() == 1 {
                format!("#{}", ids[0])
            } else {
                format!("{} records from #{}", ids.len(), ids[0])
            };
            let _ = writeln!(w, "  {line}  ({who})");
        }
    }
    if let Some(m) = &rep.minimality {
        let _ = writeln!(
            w,
            "minimal   {}  |e|² = {:.12}  2|c|² = {:.12}  normalized gap {:.3e} (threshold {:.1e})",
            if m.is_minimal { "yes" } else { "no" },
            m.unit_sq_length,
            2.0 * m.extremal_sq_length,
            m.normalized_gap,
            m.threshold
        );
        let _ = writeln!(w, "          {}", m.caveat);
    }
    if let Some(c) = &rep.classification {
        let _ = writeln!(
            w,
            "classify  {}  {} nontrivial idempotents, max relative deviation from |e|²/2 {:.3e}",
            verdict(c.passed),
            c.checked,
            c.max_deviation
        );
    }
    if let Some(s) = &rep.span {
        let _ = writeln!(
            w,
            "span      rank {} of {}{}",
            s.rank,
            s.dim,
            if s.inconclusive { " (inconclusive)" } else { "" }
        );
    }
    if !rep.identities.is_empty() {
        let _ = writeln!(w, "identities");
        for (k, c) in &rep.identities {
            let _ = writeln!(w, "  {:<26} {:>11.3e}  ≤ {:<9.1e} {}", k, c.value, c.threshold, verdict(c.passed));
        }
    }
    if let Some(iso) = &rep.isomorphism {
        let _ = writeln!(
            w,
            "iso       {}  spin factor of dim {}, hom defect {:.3e} over {} pairs, isometry defect {:.3e}, cond(φ) {:.3e}",
            if iso.verdict { "verified" } else { "REJECTED" },
            iso.model.ambient_dim,
            iso.max_hom_defect,
            iso.samples,
            iso.isometry_defect,
            iso.phi_condition
        );
    }
    for s in &rep.skipped {
        let _ = writeln!(w, "skipped   {}: {}", s.stage, s.reason);
    }
    if let Some(t) = &rep.timings {
        let parts: Vec<String> = t.iter().map(|(k, v)| format!("{k} {v:.3}s")).collect();
        let _ = writeln!(w, "timings   {}", parts.join(", "));
    }
    if let Some(s) = &rep.stopped {
        let _ = writeln!(w, "stopped   at {}: {} (exit {})", s.stage, s.reason, s.exit_code);
    }
    out
}
