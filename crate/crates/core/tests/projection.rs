//! Truncation guarantees on random coefficient tensors: the certified
//! width bound brackets the realized error, widths are symmetric under
//! complementation and agree with a dense eigensolver, and the projection
//! passes behave like orthogonal projections should.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use treetensor::{
    apply_subspace_projection, error_bound_rhs, project_to_tree, width_profile, BoundMode,
    DimensionTree, FullTensor, RankAssignment,
};

fn test_trees(d: usize) -> Vec<DimensionTree> {
    vec![
        DimensionTree::trivial(d).unwrap(),
        DimensionTree::linear_binary(d).unwrap(),
        DimensionTree::balanced_binary(d).unwrap(),
    ]
}

fn random_coefficients(shape: &[usize], seed: u64) -> FullTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FullTensor::random_normal(shape.to_vec(), &mut rng).unwrap()
}

#[test]
fn certified_bound_brackets_the_error_on_a_random_corpus() {
    for seed in 0..12 {
        let t = random_coefficients(&[6, 6, 6, 6], seed);
        for tree in test_trees(4) {
            for r in 1..=5 {
                let ranks = RankAssignment::uniform(&tree, r).unwrap();
                let res = project_to_tree(&t, &tree, &ranks, None).unwrap();
                assert!(
                    res.l2_error <= res.error_bound + 1e-9,
                    "error {} above bound {} (seed {seed}, rank {r})",
                    res.l2_error,
                    res.error_bound
                );
                // No approximation with these ranks beats a single width.
                let single = tree
                    .non_root_ids()
                    .map(|id| res.profile.delta(id, res.ranks_used.get(id)))
                    .fold(0.0f64, f64::max);
                assert!(
                    res.l2_error >= single - 1e-10,
                    "error {} below width floor {} (seed {seed}, rank {r})",
                    res.l2_error,
                    single
                );
            }
        }
    }
}

#[test]
fn widths_are_symmetric_under_complementation() {
    for seed in 0..4 {
        let t = random_coefficients(&[6, 6, 6, 6], 20 + seed);
        for tree in test_trees(4) {
            let profile = width_profile(&t, &tree).unwrap();
            let defect = profile.complement_symmetry_defect(&t, &tree).unwrap();
            assert!(defect <= 1e-10, "defect {defect} (seed {seed})");
        }
    }
}

#[test]
fn projection_is_idempotent_and_non_expansive() {
    let tree = DimensionTree::balanced_binary(4).unwrap();
    for (seed, r) in [(3u64, 2usize), (7, 3)] {
        let t = random_coefficients(&[6, 6, 6, 6], seed);
        let norm = t.frobenius_norm();
        let ranks = RankAssignment::uniform(&tree, r).unwrap();
        let res = project_to_tree(&t, &tree, &ranks, None).unwrap();

        let g = res.network.to_full_tensor().unwrap();
        assert!(
            g.frobenius_norm() <= norm * (1.0 + 1e-10),
            "projection expanded the norm"
        );
        // The network reproduces the projected tensor, not something else.
        assert!((t.distance(&g).unwrap() - res.l2_error).abs() <= 1e-10 * norm);

        let again = project_to_tree(&g, &tree, &ranks, None).unwrap();
        assert!(
            again.l2_error <= 1e-10 * norm,
            "reprojection moved the tensor by {}",
            again.l2_error
        );
    }
}

#[test]
fn same_level_projections_commute() {
    let t = random_coefficients(&[5, 5, 5, 5], 42);
    let tree = DimensionTree::balanced_binary(4).unwrap();
    for level in 1..=tree.depth() {
        let bases: Vec<(Vec<usize>, DMatrix<f64>)> = tree
            .level_nodes(level)
            .into_iter()
            .map(|id| {
                let modes = tree.modes(id).to_vec();
                let basis = t.matricize(&modes).unwrap().principal_subspace(2).unwrap();
                (modes, basis)
            })
            .collect();
        let mut forward = t.clone();
        for (modes, basis) in &bases {
            forward = apply_subspace_projection(&forward, modes, basis).unwrap();
        }
        let mut reversed = t.clone();
        for (modes, basis) in bases.iter().rev() {
            reversed = apply_subspace_projection(&reversed, modes, basis).unwrap();
        }
        let gap = forward.distance(&reversed).unwrap();
        assert!(
            gap <= 1e-10 * t.frobenius_norm(),
            "level {level} projections do not commute: gap {gap}"
        );
    }
}

#[test]
fn leaf_prereduction_keeps_the_certificate_valid() {
    let t = random_coefficients(&[6, 6, 6, 6], 5);
    let tree = DimensionTree::balanced_binary(4).unwrap();
    let ranks = RankAssignment::uniform(&tree, 2).unwrap();
    let dims = [4usize, 4, 4, 4];
    let res = project_to_tree(&t, &tree, &ranks, Some(&dims)).unwrap();
    assert!(res.l2_error <= res.error_bound + 1e-9);
    assert_eq!(res.leaf_dims_used.as_deref(), Some(&dims[..]));
    let manual = error_bound_rhs(
        &res.profile,
        &res.ranks_used,
        &BoundMode::WithLeaves {
            leaf_dims: dims.to_vec(),
        },
    )
    .unwrap();
    assert_eq!(res.error_bound, manual);
}

#[test]
fn widths_match_a_dense_eigensolver_reference() {
    for seed in 0..3 {
        let t = random_coefficients(&[8, 8, 8], 100 + seed);
        for tree in test_trees(3) {
            let profile = width_profile(&t, &tree).unwrap();
            for id in tree.non_root_ids() {
                let m = t.matricize(tree.modes(id)).unwrap().to_dmatrix();
                let gram = if m.nrows() <= m.ncols() {
                    &m * m.transpose()
                } else {
                    m.transpose() * &m
                };
                let mut eigs: Vec<f64> = nalgebra::linalg::SymmetricEigen::new(gram)
                    .eigenvalues
                    .iter()
                    .map(|&l| l.max(0.0))
                    .collect();
                eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
                let scale = profile.delta(id, 0);
                for n in 0..=eigs.len() {
                    let reference = eigs[n..].iter().sum::<f64>().sqrt();
                    let got = profile.delta(id, n);
                    assert!(
                        (got - reference).abs() <= 1e-10 * scale,
                        "node {} cut {n}: width {got} vs eigensolver {reference}",
                        tree.label(id)
                    );
                }
            }
        }
    }
}
