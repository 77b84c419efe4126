mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use common::{gate, qp};
use cvq_kernel::data::{discretize, gen_moons, split_train_test, standardize};
use cvq_kernel::kernel::{build_table, LatticeKernel, TableKernel, LATTICE_POINTS};
use cvq_kernel::seeding::rng;
use cvq_kernel::svm::{compute_bias, solve_dual, train, DualProblem, SolverOptions};

fn tight() -> SolverOptions {
    SolverOptions { tol: 1e-10, max_passes: None }
}

fn random_problem(seed: u64, n: usize, c: f64) -> (Vec<[usize; 2]>, DualProblem) {
    let mut g = rng(seed);
    let k = TableKernel::new(build_table(gate(g.random_range(1.0..9.0))));
    let coords: Vec<[usize; 2]> =
        (0..n).map(|_| [g.random_range(0..LATTICE_POINTS), g.random_range(0..LATTICE_POINTS)]).collect();
    let mut labels: Vec<i8> = (0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
    labels.shuffle(&mut g);
    let p = DualProblem::new(k.gram(&coords).unwrap(), labels, c).unwrap();
    (coords, p)
}

#[test]
fn matches_exhaustive_oracle() {
    for seed in 0..40 {
        let n = 2 + (seed as usize % 5);
        let (_, p) = random_problem(seed, n, 1.0);
        let sol = solve_dual(&p, &tight()).unwrap();
        let (_, best) = qp::solve(&p);
        assert!((p.objective(&sol.alpha) - best).abs() < 1e-6, "seed {seed}");
    }
}

#[test]
fn feasible_iterates() {
    let (_, p) = random_problem(3, 40, 0.5);
    let sol = solve_dual(&p, &SolverOptions::default()).unwrap();
    assert!(sol.alpha.iter().all(|a| (0.0..=0.5).contains(a)));
    let eq: f64 = sol.alpha.iter().zip(p.labels()).map(|(a, &y)| a * f64::from(y)).sum();
    assert!(eq.abs() < 1e-12);
    assert!(sol.gap <= 1e-3);
}

#[test]
fn kkt_residuals_at_full_scale() {
    let raw = gen_moons(300, 0.15, 21).unwrap();
    let data = discretize(&standardize(&raw).unwrap()).unwrap();
    let (train_set, _) = split_train_test(&data, 225, 75, 4).unwrap();
    let k = TableKernel::new(build_table(gate(8.0)));
    let opts = SolverOptions::default();
    let p = DualProblem::new(k.gram(train_set.coords()).unwrap(), train_set.labels().to_vec(), 1.0).unwrap();
    let sol = solve_dual(&p, &opts).unwrap();
    let b = compute_bias(&sol.alpha, &p).unwrap();
    assert!(p.kkt_violation(&sol.alpha, b) <= opts.tol);
    let model = train(&k, train_set.coords(), train_set.labels(), 1.0, &opts).unwrap();
    assert_eq!(model.alpha, sol.alpha);
    assert_eq!(model.coords.len(), 225);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn permutation_equivariance(seed in 0u64..1000) {
        let (_, p) = random_problem(seed, 6, 1.0);
        let mut perm: Vec<usize> = (0..6).collect();
        perm.shuffle(&mut rng(seed + 1));
        let k2 = p.kernel().submatrix(&perm);
        let y2: Vec<i8> = perm.iter().map(|&i| p.labels()[i]).collect();
        let p2 = DualProblem::new(k2, y2, 1.0).unwrap();
        let a = solve_dual(&p, &tight()).unwrap();
        let b = solve_dual(&p2, &tight()).unwrap();
        prop_assert!((p.objective(&a.alpha) - p2.objective(&b.alpha)).abs() < 1e-8);
        let fa = p.margins(&a.alpha);
        let fb = p2.margins(&b.alpha);
        for (j, &i) in perm.iter().enumerate() {
            prop_assert!((fa[i] - fb[j]).abs() < 1e-5);
        }
    }

    #[test]
    fn kernel_scaling(seed in 0u64..1000, s in 0.5f64..4.0) {
        // (sK, C/s) has solution α/s and the same decision function
        let (_, p) = random_problem(seed, 6, 1.0);
        let ps = DualProblem::new(p.kernel().scaled(s), p.labels().to_vec(), 1.0 / s).unwrap();
        let a = solve_dual(&p, &tight()).unwrap();
        let b = solve_dual(&ps, &tight()).unwrap();
        prop_assert!((s * ps.objective(&b.alpha) - p.objective(&a.alpha)).abs() < 1e-7);
        let fa = p.margins(&a.alpha);
        let fb = ps.margins(&b.alpha);
        for (x, y) in fa.iter().zip(&fb) {
            prop_assert!((x - y).abs() < 1e-5);
        }
    }
}
