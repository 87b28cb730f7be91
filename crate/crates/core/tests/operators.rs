mod common;

use common::{max_abs_diff, monotone_path_exists};
use lod_core::interp::{build_operator, classify_nodes_ih, coverage_report, is_quasi_monotone, quasi_monotone_region};
use lod_core::{BoundarySpec, Coefficient, MeshHierarchy, NodeClass, OperatorKind, OperatorParams, ScaleFactor};
use proptest::prelude::*;

fn families(m: &MeshHierarchy, alpha: f64, seed: u64) -> Vec<Coefficient> {
    vec![
        Coefficient::stripes(m, alpha).unwrap(),
        Coefficient::random_balls(m, alpha, seed).unwrap(),
        Coefficient::random_field(m, alpha, seed, 6, 0.5).unwrap(),
    ]
}

/// Largest entry of `R P − I` on the free coarse nodes.
fn projection_defect(m: &MeshHierarchy, r: &lod_core::SparseMatrix) -> f64 {
    let p = m.prolongation();
    let mut worst: f64 = 0.0;
    for (row, &z) in m.free_coarse_nodes().iter().enumerate() {
        let mut e = vec![0.0; m.coarse().node_count()];
        e[z] = 1.0;
        let rp = r.mul_vec(&p.mul_vec(&e));
        for (i, v) in rp.iter().enumerate() {
            worst = worst.max((v - if i == row { 1.0 } else { 0.0 }).abs());
        }
    }
    worst
}

#[test]
fn every_operator_is_a_projection() {
    let m = MeshHierarchy::build(2, 6, BoundarySpec::full()).unwrap();
    for c in families(&m, 1e-4, 2) {
        for kind in OperatorKind::ALL {
            let op = build_operator(kind, &m, &c, &OperatorParams::default()).unwrap();
            let d = projection_defect(&m, op.matrix());
            assert!(d < 1e-10, "{kind} on {}: {d:e}", c.kind().name());
        }
    }
}

#[test]
fn rows_stay_inside_the_node_patch() {
    let m = MeshHierarchy::build(2, 6, BoundarySpec::from_edges(&[lod_core::Edge::Top])).unwrap();
    for c in families(&m, 1e-3, 4) {
        for kind in OperatorKind::ALL {
            let op = build_operator(kind, &m, &c, &OperatorParams::default()).unwrap();
            for (row, &z) in m.free_coarse_nodes().iter().enumerate() {
                let patch = m.node_patch(z);
                let (cols, _) = op.matrix().row(row);
                for &n in cols {
                    let inside = m.fine().node_elements(n).as_slice().iter().any(|&e| patch.contains(m.parent(e)));
                    assert!(inside, "{kind}: row of {z} reaches fine node {n}");
                }
            }
        }
    }
}

#[test]
fn rows_restricted_to_element_patches_are_never_roundoff() {
    // A row that is pure cancellation noise on a patch would still pin `C u = 0` there.
    let m = MeshHierarchy::build(3, 6, BoundarySpec::full()).unwrap();
    let ne = m.coarse().element_count();
    for c in families(&m, 1e-3, 4) {
        for kind in OperatorKind::ALL {
            let op = build_operator(kind, &m, &c, &OperatorParams::default()).unwrap();
            let r = op.matrix();
            for t in (0..ne).step_by(7) {
                let patch = m.element_patch(&lod_core::ElementSet::new(lod_core::MeshLevel::Coarse, [t]), 1).unwrap();
                let in_patch = patch.mask(ne);
                let inside = |n: usize| m.fine().node_elements(n).as_slice().iter().all(|&e| in_patch[m.parent(e)]);
                for i in 0..r.nrows() {
                    let (cols, vals) = r.row(i);
                    let full = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    let local = cols
                        .iter()
                        .zip(vals)
                        .filter(|(&j, _)| inside(j))
                        .fold(None, |a: Option<f64>, (_, v)| Some(a.unwrap_or(0.0).max(v.abs())));
                    if let Some(local) = local {
                        assert!(local > 1e-10 * full, "{kind} row {i} on patch of {t}: {local:e} vs {full:e}");
                    }
                }
            }
        }
    }
}

#[test]
fn unit_contrast_collapses_weighted_and_geometric_variants() {
    let m = MeshHierarchy::build(2, 5, BoundarySpec::full()).unwrap();
    let one = Coefficient::constant_one(m.fine());
    let params = OperatorParams::default();
    let sz = build_operator(OperatorKind::ScottZhang, &m, &one, &params).unwrap().matrix().to_dense();
    for kind in [OperatorKind::Ih, OperatorKind::Ih1, OperatorKind::AProj, OperatorKind::AProjQm] {
        let other = build_operator(kind, &m, &one, &params).unwrap().matrix().to_dense();
        for (a, b) in sz.iter().zip(&other) {
            assert!(max_abs_diff(a, b) < 1e-12, "{kind}");
        }
    }
}

#[test]
fn nodal_rows_pick_the_coarse_vertex() {
    let m = MeshHierarchy::build(1, 3, BoundarySpec::full()).unwrap();
    let op = build_operator(OperatorKind::Nodal, &m, &Coefficient::constant_one(m.fine()), &OperatorParams::default())
        .unwrap();
    let (cols, vals) = op.matrix().row(0);
    assert_eq!(cols, &[m.coarse_node_to_fine(m.free_coarse_nodes()[0])]);
    assert_eq!(vals, &[1.0]);
    assert!(op.node_variables().is_empty());
}

#[test]
fn ih_classes_follow_the_unit_set() {
    let m = MeshHierarchy::build(3, 6, BoundarySpec::full()).unwrap();
    let c = Coefficient::random_balls(&m, 1e-3, 8).unwrap();
    let nodes = classify_nodes_ih(&m, &c, ScaleFactor::QUARTER).unwrap();
    assert_eq!(nodes.len(), m.free_coarse_nodes().len());
    let zf = |z| m.coarse_node_to_fine(z);
    for v in &nodes {
        let touches_unit = m.fine().node_elements(zf(v.node)).as_slice().iter().any(|&e| c.is_one(e));
        match v.class {
            NodeClass::I => {
                assert!(touches_unit);
                assert!(v.sigma.iter().all(|e| c.is_one(e)));
                let labels = c.connected_components(m.fine(), true);
                let first = v.sigma.as_slice()[0];
                // One component of the unit set, clipped to the patch.
                assert!(v.sigma.iter().all(|e| labels.label(e) == labels.label(first)));
            }
            NodeClass::II => {
                assert!(!touches_unit);
                assert_eq!(v.sigma, m.scaled_node_patch(v.node, ScaleFactor::QUARTER).unwrap());
            }
            NodeClass::Plain => panic!("plain class from the geometric operator"),
        }
        assert!(v.kappa > 0.0 && v.kappa.is_finite());
        assert_eq!(v.support[0], v.node);
    }
}

#[test]
fn coarse_stripes_leave_components_uncovered() {
    let m = MeshHierarchy::build(2, 6, BoundarySpec::full()).unwrap();
    let c = Coefficient::stripes(&m, 1e-2).unwrap();
    let nodes = classify_nodes_ih(&m, &c, ScaleFactor::QUARTER).unwrap();
    let report = coverage_report(&m, &c, &nodes);
    assert_eq!(report.unit_components, 15);
    assert!(report.uncovered_components > 0);
    let frac = report.covered_fraction.unwrap();
    assert!(frac > 0.0 && frac < 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn quasi_monotone_regions_pass_the_path_search(seed in 0u64..10_000, alpha in 1e-6f64..0.5) {
        let m = MeshHierarchy::build(2, 5, BoundarySpec::full()).unwrap();
        let c = Coefficient::random_balls(&m, alpha, seed).unwrap();
        for &z in m.free_coarse_nodes() {
            let region = quasi_monotone_region(&m, &c, z);
            prop_assert!(is_quasi_monotone(&m, &c, &region, z));
            prop_assert!(monotone_path_exists(&m, &c, &region, m.coarse_node_to_fine(z)));
        }
    }

    #[test]
    fn path_search_agrees_with_the_oracle_on_arbitrary_sets(seed in 0u64..10_000) {
        let m = MeshHierarchy::build(1, 3, BoundarySpec::full()).unwrap();
        let c = Coefficient::random_field(&m, 1e-2, seed, 1, 0.5).unwrap();
        let z = m.coarse().node_index(1, 1);
        let patch = lod_core::interp::fine_node_patch(&m, z);
        let mut rng = lod_core::SplitMix64::new(seed);
        let picked = lod_core::ElementSet::new(
            lod_core::MeshLevel::Fine,
            patch.iter().filter(|_| lod_core::UniformSource::next_uniform(&mut rng) < 0.6),
        );
        prop_assert_eq!(
            is_quasi_monotone(&m, &c, &picked, z),
            monotone_path_exists(&m, &c, &picked, m.coarse_node_to_fine(z))
        );
    }
}
