use polymorph::classify::{components, is_ergodic, is_mixing, is_prime, is_prime_exhaustive};
use polymorph::random::{random_permutation_mixture, support_patterns};
use polymorph::{classify, finite_chain_theorem_check, q, FiniteSpace, Matrix, Polymorphism, Rational, Tolerance};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EX: Tolerance = Tolerance::EXACT;

/// Primitivity by Wielandt's bound: some boolean power `(m-1)^2 + 1` is
/// entrywise positive.
fn primitive_by_hand(p: &Polymorphism<Rational>) -> bool {
    let m = p.size();
    let adj: Vec<Vec<bool>> = (0..m)
        .map(|i| (0..m).map(|j| p.nu()[(i, j)] > q(0, 1)).collect())
        .collect();
    let mut cur = adj.clone();
    for _ in 1..(m - 1) * (m - 1) + 1 {
        cur = (0..m)
            .map(|i| (0..m).map(|j| (0..m).any(|k| cur[i][k] && adj[k][j])).collect())
            .collect();
    }
    cur.iter().all(|r| r.iter().all(|&b| b))
}

fn uniform(rows: Vec<Vec<Rational>>) -> Polymorphism<Rational> {
    let m = rows.len();
    let nu = Matrix::from_rows(rows).unwrap().scale(&q(1, m as i64));
    Polymorphism::new(FiniteSpace::uniform(m), FiniteSpace::uniform(m), nu).unwrap()
}

#[test]
fn closure_agrees_with_exhaustive_search_on_all_small_patterns() {
    for m in 1..=4 {
        for (pattern, p) in support_patterns(m) {
            let fast = is_prime(&p, 64, EX).unwrap().is_prime();
            let slow = is_prime_exhaustive(&p, 4, EX).unwrap().is_prime();
            assert_eq!(fast, slow, "m = {m}, pattern {pattern:#b}");
            assert_eq!(is_mixing(&p, EX).unwrap(), primitive_by_hand(&p), "pattern {pattern:#b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mixing_iff_prime(seed in any::<u64>(), m in 2usize..9, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_permutation_mixture(&mut rng, m, k);
        let check = finite_chain_theorem_check(&p, 64, EX).unwrap();
        prop_assert!(check.consistent);
        prop_assert_eq!(check.mixing, primitive_by_hand(&p));
        if m <= 6 {
            prop_assert_eq!(
                is_prime(&p, 64, EX).unwrap().is_prime(),
                is_prime_exhaustive(&p, 6, EX).unwrap().is_prime()
            );
        }
    }
}

#[test]
fn swap_is_ergodic_but_not_prime() {
    let swap = uniform(vec![vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(0, 1)]]);
    let r = classify(&swap, 64, EX).unwrap();
    assert!(r.ergodic);
    assert!(!r.mixing);
    assert!(!r.prime);
    assert_eq!(r.peripheral_period, 2);
}

#[test]
fn period_two_kernel_on_four_atoms() {
    let h = q(1, 2);
    let z = q(0, 1);
    let p = uniform(vec![
        vec![z.clone(), z.clone(), h.clone(), h.clone()],
        vec![z.clone(), z.clone(), h.clone(), h.clone()],
        vec![h.clone(), h.clone(), z.clone(), z.clone()],
        vec![h.clone(), h.clone(), z.clone(), z],
    ]);
    assert!(is_ergodic(&p, EX).unwrap());
    let comps = components(&p, EX).unwrap();
    assert_eq!(comps.len(), 1);
    assert_eq!(comps[0].period, 2);
    let r = classify(&p, 64, EX).unwrap();
    assert!(!r.prime);
    let witness = r.witness.unwrap();
    assert_eq!(witness.blocks(), &[vec![0, 1], vec![2, 3]]);
}

#[test]
fn reducible_kernel_is_not_ergodic() {
    let one = q(1, 1);
    let z = q(0, 1);
    let p = uniform(vec![vec![one.clone(), z.clone()], vec![z, one]]);
    let r = classify(&p, 64, EX).unwrap();
    assert!(!r.ergodic);
    assert_eq!(r.maximal_fixed_partition.num_blocks(), 2);
}

#[test]
fn zero_polymorphism_is_mixing_and_prime() {
    let theta = Polymorphism::zero(&FiniteSpace::<Rational>::uniform(5));
    let check = finite_chain_theorem_check(&theta, 64, EX).unwrap();
    assert!(check.mixing && check.prime && check.consistent);
}
