use num_traits::Zero;
use polymorph::random::{random_coupling, random_polymorphism, random_space};
use polymorph::semigroup::compose;
use polymorph::{convex_combine, q, FiniteSpace, Matrix, Partition, Polymorphism, Rational, Tolerance};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `nu_ik = sum_j nu2_ij nu1_jk / mu_j`, written out by hand.
fn naive_compose(p1: &Polymorphism<Rational>, p2: &Polymorphism<Rational>) -> Vec<Vec<Rational>> {
    let m = p2.nu().rows();
    let n = p1.nu().cols();
    let mid = p1.source().weights();
    let mut out = vec![vec![Rational::zero(); n]; m];
    for (i, row) in out.iter_mut().enumerate() {
        for (k, cell) in row.iter_mut().enumerate() {
            for (j, w) in mid.iter().enumerate() {
                *cell += &p2.nu()[(i, j)] * &p1.nu()[(j, k)] / w;
            }
        }
    }
    out
}

fn triple(seed: u64, m: usize) -> [Polymorphism<Rational>; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = random_space(&mut rng, m);
    [0.3, 0.6, 0.9].map(|d| random_coupling(&mut rng, &space, &space, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn compose_matches_hand_product(seed in any::<u64>(), m in 1usize..8) {
        let [a, b, _] = triple(seed, m);
        let ab = compose(&a, &b).unwrap();
        prop_assert_eq!(ab.nu().to_rows(), naive_compose(&a, &b));
    }

    #[test]
    fn associativity(seed in any::<u64>(), m in 1usize..8) {
        let [a, b, c] = triple(seed, m);
        let left = compose(&compose(&a, &b).unwrap(), &c).unwrap();
        let right = compose(&a, &compose(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn zero_absorbs(seed in any::<u64>(), m in 1usize..8) {
        let [a, _, _] = triple(seed, m);
        let theta = Polymorphism::zero(a.source());
        prop_assert_eq!(compose(&a, &theta).unwrap(), theta.clone());
        prop_assert_eq!(compose(&theta, &a).unwrap(), theta);
    }

    #[test]
    fn identity_is_neutral(seed in any::<u64>(), m in 1usize..8) {
        let [a, _, _] = triple(seed, m);
        let id = Polymorphism::identity(a.source());
        prop_assert_eq!(compose(&a, &id).unwrap(), a.clone());
        prop_assert_eq!(compose(&id, &a).unwrap(), a);
    }

    #[test]
    fn involution_reverses_products(seed in any::<u64>(), m in 1usize..8) {
        let [a, b, _] = triple(seed, m);
        let lhs = compose(&a, &b).unwrap().involute();
        let rhs = compose(&b.involute(), &a.involute()).unwrap();
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(a.involute().involute(), a);
    }

    #[test]
    fn marginals_survive_composition(seed in any::<u64>(), m in 1usize..8) {
        let [a, b, _] = triple(seed, m);
        let ab = compose(&a, &b).unwrap();
        prop_assert_eq!(ab.nu().row_sums(), a.source().weights());
        prop_assert_eq!(ab.nu().col_sums(), a.source().weights());
        prop_assert!(ab.nu().entries().iter().all(|x| *x >= Rational::zero()));
    }

    #[test]
    fn convex_combination_is_bistochastic(seed in any::<u64>(), m in 1usize..8, k in 1i64..7) {
        let [a, b, _] = triple(seed, m);
        let mix = convex_combine(&[(q(k, 7), a.clone()), (q(7 - k, 7), b)], Tolerance::EXACT).unwrap();
        prop_assert_eq!(mix.nu().row_sums(), a.source().weights());
        prop_assert_eq!(mix.nu().col_sums(), a.source().weights());
    }

    #[test]
    fn factoring_commutes_with_involution(seed in any::<u64>(), m in 2usize..8) {
        let [a, _, _] = triple(seed, m);
        let part = Partition::new(m, vec![(0..m / 2).collect(), (m / 2..m).collect()]).unwrap();
        prop_assert_eq!(a.factor(&part).unwrap().involute(), a.involute().factor(&part).unwrap());
    }
}

#[test]
fn rejects_wrong_marginals() {
    let space = FiniteSpace::<Rational>::uniform(2);
    let nu = Matrix::from_rows(vec![vec![q(1, 2), q(0, 1)], vec![q(1, 2), q(0, 1)]]).unwrap();
    assert!(Polymorphism::new(space.clone(), space, nu).is_err());
}

#[test]
fn json_round_trip_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = random_polymorphism(&mut rng, 5);
    let text = serde_json::to_string(&p).unwrap();
    let back: Polymorphism<Rational> = serde_json::from_str(&text).unwrap();
    assert_eq!(back, p);
}

#[test]
fn float_backend_agrees_with_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = random_polymorphism(&mut rng, 6);
    let b = random_coupling(&mut rng, a.source(), a.source(), 0.5);
    let exact = compose(&a, &b).unwrap().convert::<f64>();
    let float = compose(&a.convert::<f64>(), &b.convert::<f64>()).unwrap();
    assert!(exact.nu().max_abs_diff(float.nu()) < 1e-14);
}
