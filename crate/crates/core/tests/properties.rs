use metralg::constructions::{direct_sum, random_metrised, rsquare, spin_factor, sym_jordan};
use metralg::search::{enumerate_idempotents, SearchConfig};
use metralg::{AlgebraSpec, Vector};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vec_strategy(n: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-2.0f64..2.0, n).prop_map(Vector::from_vec)
}

fn spd_strategy(m: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, m * m).prop_map(move |v| {
        let a = DMatrix::from_vec(m, m, v);
        a.transpose() * &a / m as f64 + DMatrix::identity(m, m) * 0.5
    })
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multiplication_operator_is_self_adjoint(seed in 0u64..1000, x in vec_strategy(5)) {
        let a = random_metrised(5, seed);
        let gl = a.gram() * a.left_mult_matrix(&x).unwrap();
        prop_assert!(max_abs(&(&gl - gl.transpose())) <= 1e-10 * (1.0 + max_abs(&gl)));
    }

    #[test]
    fn left_mult_matrix_reproduces_product(seed in 0u64..1000, x in vec_strategy(4), y in vec_strategy(4)) {
        let a = random_metrised(4, seed);
        let l = a.left_mult_matrix(&x).unwrap();
        let xy = a.multiply(&x, &y).unwrap();
        let yx = a.multiply(&y, &x).unwrap();
        prop_assert!((&l * &y - &xy).amax() <= 1e-12 * (1.0 + xy.amax()));
        prop_assert!((xy - yx).amax() <= 1e-12);
    }

    #[test]
    fn random_symmetric_structure_fails_associativity(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 3;
        let mut c = vec![0.0; n * n * n];
        for i in 0..n {
            for j in i..n {
                for k in 0..n {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    c[(i * n + j) * n + k] = v;
                    c[(j * n + i) * n + k] = v;
                }
            }
        }
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let g = b.transpose() * &b + DMatrix::identity(n, n);
        let a = AlgebraSpec::new("generic", n, c, g).unwrap();
        let rep = a.validate(1e-9);
        prop_assert!(rep.commutativity_defect == 0.0);
        prop_assert!(rep.associativity_defect > 1e-6);
        prop_assert!(!rep.passed);
    }

    #[test]
    fn cubic_form_is_basis_independent(seed in 0u64..1000, x in vec_strategy(4), p in prop::collection::vec(-1.0f64..1.0, 16)) {
        let a = random_metrised(4, seed);
        let p = DMatrix::from_vec(4, 4, p) + DMatrix::identity(4, 4) * 3.0;
        let b = a.transformed(&p).unwrap();
        prop_assert!(b.validate(1e-8).passed);
        // x' = P⁻¹ x
        let xp = p.clone().lu().solve(&x).unwrap();
        let f = a.cubic_form(&x).unwrap();
        let fp = b.cubic_form(&xp).unwrap();
        prop_assert!((f - fp).abs() <= 1e-9 * (1.0 + f.abs()), "{} vs {}", f, fp);
        prop_assert!((a.norm_sq(&x) - b.norm_sq(&xp)).abs() <= 1e-9 * (1.0 + a.norm_sq(&x)));
    }

    #[test]
    fn spin_factor_satisfies_validation_exactly(f in spd_strategy(3)) {
        let f = (&f + f.transpose()) * 0.5;
        let a = spin_factor(&f).unwrap();
        let rep = a.validate(1e-12);
        prop_assert!(rep.passed, "{:?}", rep.details);
        let e = a.find_unit(1e-12).unwrap();
        prop_assert!((a.norm_sq(&e) - 2.0).abs() <= 1e-12);
    }
}

/// `z² − 2a z + (a² − f(u,u)) ε = 0` for `z = a ⊕ u`, evaluated with an
/// independent implementation of the spin-factor product.
#[test]
fn spin_factor_quadratic_relation() {
    let f = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, -0.2, 0.3, 0.8, 0.1, -0.2, 0.1, 1.4]);
    let a = spin_factor(&f).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let z = Vector::from_fn(4, |_, _| rng.random_range(-3.0..3.0));
        let (s, u) = (z[0], z.rows(1, 3).into_owned());
        let fuu = (u.transpose() * &f * &u)[(0, 0)];
        // direct formula (ab + f(u,v)) ⊕ (av + bu)
        let mut direct = Vector::zeros(4);
        direct[0] = s * s + fuu;
        direct.rows_mut(1, 3).copy_from(&(&u * (2.0 * s)));
        let sq = a.multiply(&z, &z).unwrap();
        assert!((&sq - &direct).amax() < 1e-12);
        let mut rel = sq - &z * (2.0 * s);
        rel[0] += s * s - fuu;
        worst = worst.max(rel.amax() / (1.0 + z.amax().powi(2)));
    }
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn sym_jordan_product_matches_matrix_product() {
    let a = sym_jordan(3).unwrap();
    let basis = metralg::constructions::sym_basis(3);
    let coords = |m: &DMatrix<f64>| Vector::from_iterator(6, basis.iter().map(|b| (b * m).trace()));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let x = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        let y = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        let (x, y) = (&x + x.transpose(), &y + y.transpose());
        let jordan = (&x * &y + &y * &x) * 0.5;
        let got = a.multiply(&coords(&x), &coords(&y)).unwrap();
        assert!((got - coords(&jordan)).amax() < 1e-12);
        assert!((a.inner(&coords(&x), &coords(&y)).unwrap() - (&x * &y).trace()).abs() < 1e-12);
    }
}

#[test]
fn direct_sum_lengths_add() {
    let left = rsquare();
    let right = sym_jordan(2).unwrap();
    let sum = direct_sum(&left, &right);
    let cfg = SearchConfig {
        multistart_count: Some(60),
        ..SearchConfig::default()
    };
    let en = enumerate_idempotents(&sum, &cfg).unwrap();
    // left idempotent lengths {0,1,2}, right {0,1,2}
    for r in &en.records {
        let (l, rt) = (r.c.rows(0, 2).into_owned(), r.c.rows(2, 3).into_owned());
        let ll = left.norm_sq(&l);
        let rl = right.norm_sq(&rt);
        assert!((ll + rl - r.sq_length).abs() < 1e-9);
        assert!((ll - ll.round()).abs() < 1e-8 && (rl - rl.round()).abs() < 1e-8);
    }
    let e = sum.find_unit(1e-9).unwrap();
    assert!((sum.norm_sq(&e) - 4.0).abs() < 1e-12);
}
