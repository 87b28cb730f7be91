mod common;

use common::{kkt_oracle, max_abs, max_abs_diff};
use lod_core::assembly::assemble_stiffness;
use lod_core::interp::build_operator;
use lod_core::{
    BoundarySpec, Coefficient, Error, MeshHierarchy, OperatorKind, OperatorParams, SaddleSolver, SparseMatrix,
    SplitMix64, UniformSource,
};
use proptest::prelude::*;

/// Stiffness on the free fine nodes and the rows of `kind` restricted to them.
fn patch_system(kind: OperatorKind, alpha: f64, seed: u64) -> (SparseMatrix, SparseMatrix) {
    let m = MeshHierarchy::build(2, 4, BoundarySpec::full()).unwrap();
    let c = Coefficient::random_balls(&m, alpha, seed).unwrap();
    let k = assemble_stiffness(&m, &c, None);
    let dofs: Vec<usize> = (0..m.fine().node_count()).filter(|&n| !m.is_fine_constrained(n)).collect();
    let mut local = vec![None; m.fine().node_count()];
    for (l, &g) in dofs.iter().enumerate() {
        local[g] = Some(l);
    }
    let op = build_operator(kind, &m, &c, &OperatorParams::default()).unwrap();
    let rows: Vec<usize> = (0..op.matrix().nrows()).collect();
    (k.principal_submatrix(&dofs), op.matrix().select(&rows, &local, dofs.len()))
}

fn random_vec(rng: &mut SplitMix64, n: usize) -> Vec<f64> {
    (0..n).map(|_| 2.0 * rng.next_uniform() - 1.0).collect()
}

fn rel_dev(got: &[f64], want: &[f64]) -> f64 {
    max_abs_diff(got, want) / max_abs(want).max(1.0)
}

#[test]
fn dependent_constraints_are_reported() {
    let k = SparseMatrix::from_dense(&[vec![2.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 2.0]], true);
    let c = SparseMatrix::from_dense(&[vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 0.0], vec![2.0, 2.0, 0.0]], false);
    match SaddleSolver::new(&k, &c) {
        Err(Error::ConstraintDegeneracy { rows }) => assert_eq!(rows, vec![2]),
        other => panic!("expected a degeneracy error, got {:?}", other.map(|_| ())),
    }
}

#[test]
fn zero_rows_are_pruned_with_zero_multipliers() {
    let k = SparseMatrix::from_dense(&[vec![2.0, -1.0], vec![-1.0, 2.0]], true);
    let c = SparseMatrix::from_dense(&[vec![0.0, 0.0], vec![1.0, -1.0]], false);
    let solver = SaddleSolver::new(&k, &c).unwrap();
    assert_eq!(solver.active_rows(), &[1]);
    let (u, lambda) = solver.solve(&[1.0, 0.0]).unwrap();
    assert_eq!(lambda[0], 0.0);
    assert!((u[0] - u[1]).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn matches_dense_kkt(seed in any::<u64>(), which in 0usize..6, log_alpha in -6.0f64..0.0) {
        let kind = OperatorKind::ALL[which];
        let (k, c) = patch_system(kind, 10f64.powf(log_alpha), seed);
        let mut rng = SplitMix64::new(seed);
        let b = random_vec(&mut rng, k.nrows());
        let g = random_vec(&mut rng, c.nrows());
        let solver = SaddleSolver::new(&k, &c).unwrap();
        let (u, lambda) = solver.solve_general(&b, &g).unwrap();
        let (u_ref, l_ref) = kkt_oracle(&k.to_dense(), &c.to_dense(), &b, &g);
        prop_assert!(rel_dev(&u, &u_ref) < 1e-9, "u deviates by {:e}", rel_dev(&u, &u_ref));
        prop_assert!(rel_dev(&lambda, &l_ref) < 1e-9, "lambda deviates by {:e}", rel_dev(&lambda, &l_ref));
    }

    #[test]
    fn solution_minimizes_energy_on_the_kernel(seed in any::<u64>(), which in 0usize..6) {
        let (k, c) = patch_system(OperatorKind::ALL[which], 1e-3, seed);
        let mut rng = SplitMix64::new(seed ^ 0xabcdef);
        let b = random_vec(&mut rng, k.nrows());
        let solver = SaddleSolver::new(&k, &c).unwrap();
        let (u, _) = solver.solve(&b).unwrap();
        prop_assert!(max_abs(&c.mul_vec(&u)) < 1e-10);
        let energy = |v: &[f64]| 0.5 * k.bilinear(v, v) - v.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>();
        // A kernel direction: project a random vector with the solver itself
        // (zero load, constraint value C v) and subtract.
        let v = random_vec(&mut rng, k.nrows());
        let (w, _) = solver.solve_general(&k.mul_vec(&v), &vec![0.0; c.nrows()]).unwrap();
        prop_assert!(max_abs(&c.mul_vec(&w)) < 1e-10);
        let base = energy(&u);
        for step in [1e-2, -1e-2, 1.0] {
            let moved: Vec<f64> = u.iter().zip(&w).map(|(a, d)| a + step * d).collect();
            prop_assert!(energy(&moved) >= base - 1e-12 * base.abs().max(1.0));
        }
    }
}
