use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::*;
use crate::constructions::{direct_sum, real_line, rsquare, spin_factor, sym_jordan, zero_algebra};

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| StandardNormal.sample(&mut *rng))
}

fn small_cfg(starts: usize) -> SearchConfig {
    SearchConfig {
        multistart_count: Some(starts),
        ..SearchConfig::default()
    }
}

/// All solutions of `x² = x` in ℝ⊕ℝ: each coordinate solves `t² = t`.
fn rsquare_oracle() -> Vec<Vector> {
    let mut out = Vec::new();
    for a in [0.0, 1.0] {
        for b in [0.0, 1.0] {
            out.push(v(&[a, b]));
        }
    }
    out
}

#[test]
fn cubic_form_values() {
    let a = rsquare();
    assert_eq!(cubic_form(&a, &v(&[1.0, 0.0])).unwrap(), 1.0);

    let sf = spin_factor(&DMatrix::identity(2, 2)).unwrap();
    let e = v(&[1.0, 0.0, 0.0]);
    let val = cubic_form(&sf, &e).unwrap();
    assert_eq!(val, 2.0);
    assert!(val <= sf.norm(&e).powi(3));

    let nil = direct_sum(&zero_algebra(1), &real_line());
    assert_eq!(cubic_form(&nil, &v(&[1.0, 0.0])).unwrap(), 0.0);
    assert!(cubic_form(&a, &v(&[1.0])).is_err());
}

#[test]
fn gradient_matches_central_differences() {
    let fixtures = [
        rsquare(),
        sym_jordan(3).unwrap(),
        spin_factor(&DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5])).unwrap(),
        crate::constructions::random_metrised(4, 3),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let eps = 1e-5;
    for a in &fixtures {
        for _ in 0..100 {
            let x = gaussian(&mut rng, a.dim());
            let h = gaussian(&mut rng, a.dim());
            let fd = (a.cubic_form(&(&x + &h * eps)).unwrap() - a.cubic_form(&(&x - &h * eps)).unwrap())
                / (2.0 * eps);
            let analytic = 3.0 * a.inner(&a.square(&x), &h).unwrap();
            assert!(
                (fd - analytic).abs() <= 1e-6 * (1.0 + analytic.abs()),
                "{}: fd {fd} vs {analytic}",
                a.label()
            );
        }
    }
}

#[test]
fn ascent_fixed_point_at_idempotent() {
    let a = sym_jordan(3).unwrap();
    let mut c = Vector::zeros(6);
    c[1] = 1.0;
    let r = sphere_ascent(&a, &c, &SearchConfig::default()).unwrap();
    assert!(r.converged);
    assert_eq!(r.iterations, 0);
    assert!((r.x - c).amax() < 1e-15);
}

#[test]
fn ascent_basin_in_rsquare() {
    // independent check: fixed-step ascent on the angle t of (cos t, sin t),
    // where the cubic form is cos³t + sin³t
    let mut t = f64::atan2(0.436, 0.9);
    for _ in 0..10_000 {
        let d = -3.0 * t.cos().powi(2) * t.sin() + 3.0 * t.sin().powi(2) * t.cos();
        t += 0.1 * d;
    }
    assert!(t.abs() < 1e-12);

    let a = rsquare();
    let x0 = v(&[0.9, 0.436]).normalize();
    let r = sphere_ascent(&a, &x0, &SearchConfig::default()).unwrap();
    assert!(r.converged);
    assert!((r.x - v(&[t.cos(), t.sin()])).amax() < 1e-8);
}

#[test]
fn ascent_output_is_parallel_to_its_square() {
    let a = sym_jordan(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let x0 = gaussian(&mut rng, a.dim());
        let r = sphere_ascent(&a, &(&x0 / a.norm(&x0)), &SearchConfig::default()).unwrap();
        assert!(r.converged);
        let x2 = a.square(&r.x);
        let lambda = a.dot(&x2, &r.x);
        assert!(a.norm(&(x2 - &r.x * lambda)) <= 1e-8);
    }
}

#[test]
fn refine_rescales_and_detects_nilpotents() {
    let a = rsquare();
    let cfg = SearchConfig::default();
    for lambda in [0.3, 1.0, 7.0] {
        let rec = refine_idempotent(&a, &v(&[lambda, 0.0]), &cfg).unwrap().unwrap();
        assert!((rec.c - v(&[1.0, 0.0])).amax() < 1e-15);
    }
    let nil = direct_sum(&zero_algebra(1), &real_line());
    assert!(refine_idempotent(&nil, &v(&[1.0, 0.0]), &cfg).unwrap().is_none());
}

#[test]
fn refine_spin_factor_direction() {
    // f = I/2: idempotents are a = 1/2 with |u|² = 1/2
    let a = spin_factor(&(DMatrix::identity(2, 2) * 0.5)).unwrap();
    let dir = v(&[0.5, 0.4, 0.3]);
    let r = sphere_ascent(&a, &(&dir / a.norm(&dir)), &SearchConfig::default()).unwrap();
    let rec = refine_idempotent(&a, &r.x, &SearchConfig::default()).unwrap().unwrap();
    assert!(rec.residual <= 1e-12);
    assert!((rec.c[0] - 0.5).abs() < 1e-12);
    let fuu = 0.5 * (rec.c[1].powi(2) + rec.c[2].powi(2));
    assert!((fuu - 0.25).abs() < 1e-12);
}

#[test]
fn enumerate_rsquare_matches_oracle() {
    let a = rsquare();
    let en = enumerate_idempotents(&a, &small_cfg(50)).unwrap();
    let nonzero: Vec<Vector> = rsquare_oracle().into_iter().filter(|x| x.amax() > 0.0).collect();
    assert_eq!(en.records.len(), 3);
    for want in &nonzero {
        assert!(
            en.records.iter().any(|r| (&r.c - want).amax() <= 1e-10),
            "missing {want:?}"
        );
    }
    let kinds: Vec<_> = en.records.iter().map(|r| r.kind).collect();
    assert_eq!(kinds.iter().filter(|k| **k == IdempotentKind::Unit).count(), 1);
    assert_eq!(kinds.iter().filter(|k| **k == IdempotentKind::Extremal).count(), 2);
}

#[test]
fn enumerate_spin_factor_one() {
    // m = 1, f = [1]: a⊕u idempotent iff u = 0, a ∈ {0,1}, or a = 1/2, u = ±1/2
    let a = spin_factor(&DMatrix::identity(1, 1)).unwrap();
    let en = enumerate_idempotents(&a, &small_cfg(20)).unwrap();
    let oracle = [v(&[1.0, 0.0]), v(&[0.5, 0.5]), v(&[0.5, -0.5])];
    assert_eq!(en.records.len(), 3);
    for want in &oracle {
        let rec = en.records.iter().find(|r| (&r.c - want).amax() < 1e-10).expect("oracle idempotent");
        if rec.kind != IdempotentKind::Unit {
            assert_eq!(rec.manifold_dim, 0);
            assert!((rec.sq_length - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn enumerate_spin_factor_three_samples_sphere() {
    let a = spin_factor(&DMatrix::identity(3, 3)).unwrap();
    let en = enumerate_idempotents(&a, &small_cfg(40)).unwrap();
    let nontrivial: Vec<_> = en.records.iter().filter(|r| r.kind != IdempotentKind::Unit).collect();
    assert!(nontrivial.len() > 10);
    for r in nontrivial {
        assert!((r.sq_length - 1.0).abs() < 1e-8);
        assert_eq!(r.manifold_dim, 2);
        assert_eq!(r.kind, IdempotentKind::Extremal);
    }
}

#[test]
fn sym_jordan_lengths_are_integers() {
    for n in 2..=4 {
        let a = sym_jordan(n).unwrap();
        let en = enumerate_idempotents(&a, &small_cfg(60)).unwrap();
        for r in &en.records {
            let k = r.sq_length.round();
            assert!((1.0..=n as f64).contains(&k));
            assert!((r.sq_length - k).abs() < 1e-6);
        }
        if n == 4 {
            // the Newton phase reaches rank-2 projectors, which no ascent does
            assert!(en.records.iter().any(|r| (r.sq_length - 2.0).abs() < 1e-6));
        }
    }
}

#[test]
fn records_are_deterministic_and_parallel_safe() {
    let a = sym_jordan(3).unwrap();
    let cfg = small_cfg(30);
    let r1 = enumerate_idempotents(&a, &cfg).unwrap().records;
    let r2 = enumerate_idempotents(&a, &cfg).unwrap().records;
    let r3 = enumerate_idempotents(&a, &SearchConfig { parallel: false, ..cfg }).unwrap().records;
    assert_eq!(r1, r2);
    assert_eq!(r1, r3);
}

#[test]
fn scaling_gram_scales_lengths_only() {
    let a = sym_jordan(2).unwrap();
    let k = 4.0;
    let b = a.with_scaled_gram(k);
    let cfg = small_cfg(30);
    let ea = enumerate_idempotents(&a, &cfg).unwrap();
    let eb = enumerate_idempotents(&b, &cfg).unwrap();
    assert_eq!(ea.records.len(), eb.records.len());
    for (ra, rb) in ea.records.iter().zip(&eb.records) {
        assert!((&ra.c - &rb.c).amax() < 1e-9);
        assert!((rb.sq_length - k * ra.sq_length).abs() < 1e-9);
    }
}

#[test]
fn extremal_set_examples() {
    let a = sym_jordan(3).unwrap();
    let en = enumerate_idempotents(&a, &small_cfg(40)).unwrap();
    let ex = extremal_set(&a, &en.records, 1000, &SearchConfig::default()).unwrap();
    assert!((ex.sq_length - 1.0).abs() < 1e-10);
    assert!(!ex.members.is_empty());
    assert!(ex.members.iter().all(|r| (r.sq_length - 1.0).abs() < 1e-8));
    assert!(en.records.iter().any(|r| (r.sq_length - 2.0).abs() < 1e-8));
    assert_eq!(ex.violations, 0);
    assert!(ex.max_ratio <= 1.0 + 1e-9);

    let rs = rsquare();
    let en = enumerate_idempotents(&rs, &small_cfg(20)).unwrap();
    let ex = extremal_set(&rs, &en.records, 100, &SearchConfig::default()).unwrap();
    let mut got: Vec<Vec<f64>> = ex.members.iter().map(|r| r.c.iter().map(|x| x.round()).collect()).collect();
    got.sort_by(|x, y| x.partial_cmp(y).unwrap());
    assert_eq!(got, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);

    let single = &en.records[..1];
    let ex = extremal_set(&rs, single, 10, &SearchConfig::default()).unwrap();
    assert_eq!(ex.members, single.to_vec());
    assert!(extremal_set(&rs, &[], 10, &SearchConfig::default()).is_err());
}

#[test]
fn extremal_sampling_flags_a_missed_shorter_idempotent() {
    // pretend only the rank-2 projectors were found
    let a = sym_jordan(3).unwrap();
    let en = enumerate_idempotents(&a, &small_cfg(40)).unwrap();
    let long: Vec<_> = en.records.into_iter().filter(|r| (r.sq_length - 2.0).abs() < 1e-8).collect();
    let ex = extremal_set(&a, &long, 1000, &SearchConfig::default()).unwrap();
    assert!(ex.violations > 0);
}

#[test]
fn spectral_check_examples() {
    let cfg = SearchConfig::default();
    let sf = spin_factor(&DMatrix::identity(2, 2)).unwrap();
    let en = enumerate_idempotents(&sf, &small_cfg(20)).unwrap();
    let c = en.extremal().next().unwrap();
    let rep = spectral_check(&sf, c, cfg.classify_tol).unwrap();
    assert_eq!(rep.restricted.len(), 2);
    assert!((rep.restricted[0] - 0.0).abs() < 1e-10 && (rep.restricted[1] - 0.5).abs() < 1e-10);
    assert!(rep.consistent);

    let sj = sym_jordan(3).unwrap();
    let mut p = Vector::zeros(6);
    p[2] = 1.0;
    let en = enumerate_idempotents(&sj, &small_cfg(10)).unwrap();
    let rec = en.records.iter().find(|r| (&r.c - &p).amax() < 1e-8).cloned().unwrap_or_else(|| {
        refine_idempotent(&sj, &p, &cfg).unwrap().unwrap()
    });
    let rep = spectral_check(&sj, &rec, cfg.classify_tol).unwrap();
    assert!(rep.restricted.iter().all(|l| l.abs() < 1e-10 || (l - 0.5).abs() < 1e-10));
    assert!((rep.max_restricted - 0.5).abs() < 1e-10);
    assert!(rep.consistent);

    let unit = en.records.iter().find(|r| r.kind == IdempotentKind::Unit).unwrap();
    let rep = spectral_check(&sj, unit, cfg.classify_tol).unwrap();
    assert!(rep.restricted.iter().all(|l| (l - 1.0).abs() < 1e-10));
    assert!(!rep.within_bound);
    assert!(!rep.consistent);
}

#[test]
fn subspace_stationary_examples() {
    let cfg = SearchConfig::default();
    let a = rsquare();
    // U = span{(1,-1)}: u² = (1/2,1/2) ⊥ U, so λ = 0
    let s = subspace_stationary(&a, &[v(&[1.0, -1.0])], &cfg).unwrap();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    assert!((s.u[0].abs() - r).abs() < 1e-15 && (s.u[0] + s.u[1]).abs() < 1e-15);
    assert!(s.lambda.abs() < 1e-15);
    assert!(s.defect < 1e-15);
    let sq = a.square(&s.u);
    assert!((sq - v(&[0.5, 0.5])).amax() < 1e-15);

    // U = V reduces to the sphere maximum
    let s = subspace_stationary(&a, &[v(&[1.0, 0.0]), v(&[0.0, 1.0])], &cfg).unwrap();
    assert!((s.lambda - 1.0).abs() < 1e-10);
    assert!(s.defect <= 1e-8);

    // one-dimensional U spanned by an idempotent
    let sj = sym_jordan(2).unwrap();
    let c = v(&[1.0, 0.0, 0.0]);
    let s = subspace_stationary(&sj, &[c.clone() * 3.0], &cfg).unwrap();
    assert!((s.u.clone() - &c).amax() < 1e-15 || (s.u + &c).amax() < 1e-15);
    assert!(s.defect < 1e-15);

    let z = zero_algebra(3);
    assert!(matches!(
        subspace_stationary(&z, &[v(&[1.0, 0.0, 0.0])], &cfg),
        Err(Error::ZeroSubalgebra)
    ));
}

#[test]
fn normalize_examples() {
    let cfg = small_cfg(20);
    let sf = spin_factor(&DMatrix::identity(2, 2)).unwrap();
    let (_, k) = normalize(&sf, &cfg).unwrap();
    assert!((k - 1.0).abs() < 1e-10);

    let rs4 = rsquare().with_scaled_gram(4.0);
    let (n4, k) = normalize(&rs4, &cfg).unwrap();
    assert!((k - 0.25).abs() < 1e-12);
    let (_, k2) = normalize(&n4, &cfg).unwrap();
    assert!((k2 - 1.0).abs() < 1e-8);

    assert!(matches!(normalize(&zero_algebra(2), &cfg), Err(Error::ZeroAlgebra)));
}

#[test]
fn normalize_is_scale_covariant() {
    let cfg = small_cfg(20);
    let a = sym_jordan(2).unwrap();
    let (na, _) = normalize(&a, &cfg).unwrap();
    let (nb, _) = normalize(&a.with_scaled_gram(7.5), &cfg).unwrap();
    assert!((na.gram() - nb.gram()).amax() <= 1e-10);
}

#[test]
fn minimal_algebra_manifold_dimension() {
    // extremal idempotents of a minimal algebra of dimension n sit on an
    // (n-2)-dimensional idempotent manifold
    for m in 1..=4 {
        let a = spin_factor(&DMatrix::identity(m, m)).unwrap();
        let en = enumerate_idempotents(&a, &small_cfg(20)).unwrap();
        for r in en.extremal() {
            assert_eq!(r.manifold_dim, a.dim() - 2);
        }
    }
}

#[test]
fn bad_config_is_rejected() {
    let cfg = SearchConfig {
        newton_tol: 0.0,
        ..SearchConfig::default()
    };
    assert!(enumerate_idempotents(&rsquare(), &cfg).is_err());
}

fn spd(m: usize, entries: &[f64]) -> DMatrix<f64> {
    let b = DMatrix::from_fn(m, m, |i, j| entries[(i * m + j) % entries.len()]);
    b.transpose() * &b + DMatrix::identity(m, m) * 0.5
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn every_record_solves_the_idempotent_equation(
        m in 1usize..4,
        entries in prop::collection::vec(-1.0f64..1.0, 9),
        seed in 0u64..1000,
    ) {
        let a = spin_factor(&spd(m, &entries)).unwrap();
        let cfg = SearchConfig { seed, ..small_cfg(10) };
        let en = enumerate_idempotents(&a, &cfg).unwrap();
        prop_assert!(!en.records.is_empty());
        for r in &en.records {
            prop_assert!(r.residual <= cfg.newton_tol);
            prop_assert!(r.sq_length > 0.0);
            // trace form: every nontrivial idempotent has squared length 1
            if r.kind != IdempotentKind::Unit {
                prop_assert!((r.sq_length - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn ascent_stationarity(seed in 0u64..1000) {
        let a = crate::constructions::random_metrised(4, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x0 = gaussian(&mut rng, 4);
        let r = sphere_ascent(&a, &(&x0 / a.norm(&x0)), &SearchConfig::default()).unwrap();
        prop_assert!(r.converged);
        let x2 = a.square(&r.x);
        let lambda = a.dot(&x2, &r.x);
        prop_assert!(a.norm(&(x2 - &r.x * lambda)) <= 1e-8);
    }
}
