use polymorph::random::random_coupling;
use polymorph::{dilation_check, empirical_tail_probe, q, sample, FiniteSpace, Matrix, Polymorphism, Rational};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn two_state(eps: Rational) -> Polymorphism<Rational> {
    let h = q(1, 2);
    let stay = q(1, 1) - eps.clone();
    let nu = Matrix::from_rows(vec![
        vec![&h * &stay, &h * &eps],
        vec![&h * &eps, &h * &stay],
    ])
    .unwrap();
    Polymorphism::new(FiniteSpace::uniform(2), FiniteSpace::uniform(2), nu).unwrap()
}

#[test]
fn zero_polymorphism_gives_independent_steps() {
    let space = FiniteSpace::new(vec![q(1, 2), q(1, 3), q(1, 6)]).unwrap();
    let theta = Polymorphism::zero(&space);
    let ens = sample(&theta, 6, 20_000, 1).unwrap();
    let counts = ens.transition_counts();
    let total: usize = counts.iter().flatten().sum();
    let mu = [0.5, 1.0 / 3.0, 1.0 / 6.0];
    for i in 0..3 {
        for j in 0..3 {
            let p = mu[i] * mu[j];
            let freq = counts[i][j] as f64 / total as f64;
            // Consecutive pairs of one path share a state, so the band is loose.
            assert!((freq - p).abs() < 8.0 * (p * (1.0 - p) / total as f64).sqrt(), "{i}{j}");
        }
    }
}

#[test]
fn dilation_holds_for_random_kernels() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let space = polymorph::random::random_space(&mut rng, 5);
    let p = random_coupling(&mut rng, &space, &space, 0.5);
    let ens = sample(&p, 8, 20_000, 2).unwrap();
    let f = [1.0, -2.0, 0.5, 3.0, 0.0];
    let g = [0.0, 1.0, 1.0, -1.0, 2.0];
    for n in [0, 1, 3, 7] {
        let r = dilation_check(&ens, &f, &g, n).unwrap();
        assert!(r.passed, "{r:?}");
    }
}

#[test]
fn tail_probe_tracks_second_eigenvalue() {
    let p = two_state(q(1, 4));
    let ens = sample(&p, 12, 20_000, 3).unwrap();
    for n in 1..=6 {
        let r = empirical_tail_probe(&ens, n, &[0]).unwrap();
        assert!((r.rate - 0.5).abs() < 1e-12);
        assert!((r.exact_tv - 0.5f64.powi(n as i32)).abs() < 1e-15);
        assert!(r.passed, "{r:?}");
    }
}

#[test]
fn csv_has_one_path_per_row() {
    let ens = sample(&two_state(q(1, 3)), 4, 7, 0).unwrap();
    let csv = ens.to_csv();
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.lines().all(|l| l.split(',').count() == 4));
}
