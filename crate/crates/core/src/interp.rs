//! Quasi-interpolation operators from the fine P1 space onto the coarse one.
//!
//! Each operator is stored as a sparse matrix with one row per free coarse
//! node and one column per fine node. Except for nodal interpolation, row `i`
//! is the functional `v ↦ ∫_σ w ψ_i v` where `σ` is the node's integration
//! domain, `w` an optional coefficient weight and `ψ_i` the dual basis
//! function of node `i` on `σ`.

use std::collections::{HashSet, VecDeque};
use std::io::Write;

use rayon::prelude::*;

use crate::assembly::{dense_spd_solve, element_mass, symmetric_eigenvalues, Weight};
use crate::coefficient::Coefficient;
use crate::error::{Error, Result};
use crate::mesh::{ElementSet, MeshHierarchy, MeshLevel, ScaleFactor};
use crate::sparse::SparseMatrix;

/// Local mass matrices with a larger condition number are treated as singular.
pub const MAX_GRAM_CONDITION: f64 = 1e14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperatorKind {
    ScottZhang,
    Nodal,
    Ih,
    Ih1,
    AProj,
    AProjQm,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 6] = [
        OperatorKind::ScottZhang,
        OperatorKind::Nodal,
        OperatorKind::Ih,
        OperatorKind::Ih1,
        OperatorKind::AProj,
        OperatorKind::AProjQm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::ScottZhang => "SZ",
            OperatorKind::Nodal => "nodal",
            OperatorKind::Ih => "IH",
            OperatorKind::Ih1 => "IH1",
            OperatorKind::AProj => "Aproj",
            OperatorKind::AProjQm => "AprojQM",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl std::fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OperatorParams {
    /// Scaling of the node patch used by class II nodes of `IH`.
    pub ih_delta: ScaleFactor,
    /// Same for `IH1`.
    pub ih1_delta: ScaleFactor,
}

impl Default for OperatorParams {
    fn default() -> Self {
        Self { ih_delta: ScaleFactor::QUARTER, ih1_delta: ScaleFactor::ONE }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeClass {
    /// Integration domain is a connected piece of the unit set.
    I,
    /// Integration domain is a scaled node patch.
    II,
    /// Operators without a geometric classification.
    Plain,
}

impl NodeClass {
    pub fn name(self) -> &'static str {
        match self {
            NodeClass::I => "I",
            NodeClass::II => "II",
            NodeClass::Plain => "plain",
        }
    }
}

/// Dual basis on an integration domain: `ψ = Σ_k xi[k] φ_{support[k]}`.
#[derive(Clone, Debug)]
pub struct DualBasis {
    /// Coarse nodes whose hats meet the domain, the owning node first.
    pub support: Vec<usize>,
    pub xi: Vec<f64>,
    /// Weighted local mass matrix over `support`.
    pub gram: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct NodeVariable {
    pub node: usize,
    pub class: NodeClass,
    pub sigma: ElementSet,
    pub support: Vec<usize>,
    pub xi: Vec<f64>,
    pub kappa: f64,
}

/// Coarse nodes whose hats meet `sigma`, `own` first and the rest ascending.
pub fn hat_support(mesh: &MeshHierarchy, sigma: &ElementSet, own: usize) -> Vec<usize> {
    let mut parents: Vec<usize> = sigma.iter().map(|e| mesh.parent(e)).collect();
    parents.sort_unstable();
    parents.dedup();
    let mut nodes: Vec<usize> = parents
        .iter()
        .flat_map(|&t| mesh.coarse().element_vertices(t))
        .filter(|&v| v != own)
        .collect();
    nodes.sort_unstable();
    nodes.dedup();
    nodes.insert(0, own);
    nodes
}

/// `G_jk = ∫_σ w φ_j φ_k` for the coarse hats in `support`.
pub fn local_gram(mesh: &MeshHierarchy, sigma: &ElementSet, support: &[usize], weight: Weight<'_>) -> Vec<Vec<f64>> {
    let n = support.len();
    let local = element_mass(mesh.fine().element_area());
    let mut g = vec![vec![0.0; n]; n];
    for e in sigma.iter() {
        let (parent, values) = mesh.coarse_hat_values(e);
        let w = weight.at(e);
        let verts = mesh.coarse().element_vertices(parent);
        let pos: Vec<(usize, usize)> = verts
            .iter()
            .enumerate()
            .filter_map(|(c, v)| support.iter().position(|s| s == v).map(|p| (c, p)))
            .collect();
        for &(c, p) in &pos {
            for &(d, q) in &pos {
                let mut s = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        s += values[a][c] * local[a][b] * values[b][d];
                    }
                }
                g[p][q] += w * s;
            }
        }
    }
    g
}

/// Solves `G ξ = e_1` on `sigma` for the hat of `own`.
pub fn dual_basis(mesh: &MeshHierarchy, sigma: &ElementSet, own: usize, weight: Weight<'_>) -> Result<DualBasis> {
    let degenerate = |reason: String| Error::DegenerateSigma { node: own, reason };
    if sigma.level() != MeshLevel::Fine {
        return Err(Error::Parameter("integration domains are fine element sets".into()));
    }
    if sigma.is_empty() {
        return Err(degenerate("empty integration domain".into()));
    }
    let support = hat_support(mesh, sigma, own);
    let gram = local_gram(mesh, sigma, &support, weight);
    if !(gram[0][0] > 0.0) {
        return Err(degenerate("own hat has no mass on the domain".into()));
    }
    let eig = symmetric_eigenvalues(&gram)?;
    let (lo, hi) = (eig[0], eig[eig.len() - 1]);
    if !(lo > 0.0) || hi / lo > MAX_GRAM_CONDITION {
        return Err(degenerate(format!("local mass matrix condition {:.3e}", hi / lo)));
    }
    let mut e1 = vec![0.0; support.len()];
    e1[0] = 1.0;
    let xi = dense_spd_solve(&gram, &e1)?;
    Ok(DualBasis { support, xi, gram })
}

/// `κ = H ‖ψ‖_{L²(σ)} = sqrt(H² ξ_1)` for the unweighted dual basis.
pub fn kappa(mesh: &MeshHierarchy, sigma: &ElementSet, own: usize) -> Result<f64> {
    let basis = dual_basis(mesh, sigma, own, Weight::Unit)?;
    Ok(kappa_of(mesh, &basis))
}

fn kappa_of(mesh: &MeshHierarchy, basis: &DualBasis) -> f64 {
    (mesh.coarse_h().powi(2) * basis.xi[0]).max(0.0).sqrt()
}

/// Fine-node coefficients of `v ↦ ∫_σ w ψ v`.
/// Entries below this fraction of the row maximum are cancellation noise.
const CANCELLATION: f64 = 1e-13;

fn functional_row(mesh: &MeshHierarchy, sigma: &ElementSet, basis: &DualBasis, weight: Weight<'_>) -> Vec<(usize, f64)> {
    let grid = mesh.fine();
    let local = element_mass(grid.element_area());
    let mut entries = Vec::with_capacity(3 * sigma.len());
    for e in sigma.iter() {
        let (parent, values) = mesh.coarse_hat_values(e);
        let verts = mesh.coarse().element_vertices(parent);
        let coeffs: [f64; 3] = verts.map(|v| {
            basis
                .support
                .iter()
                .position(|&s| s == v)
                .map_or(0.0, |p| basis.xi[p])
        });
        let psi: [f64; 3] = std::array::from_fn(|a| (0..3).map(|c| coeffs[c] * values[a][c]).sum());
        let w = weight.at(e);
        for (b, v) in grid.element_vertices(e).into_iter().enumerate() {
            let s: f64 = (0..3).map(|a| psi[a] * local[a][b]).sum();
            entries.push((v, w * s));
        }
    }
    let mut row = merge_entries(entries);
    // Where the dual function changes sign the merged sums cancel to roundoff.
    // Kept as entries they would act as spurious constraints on patches.
    let scale = row.iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs()));
    row.retain(|&(_, v)| v.abs() > CANCELLATION * scale);
    row
}

fn merge_entries(mut entries: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    entries.sort_by_key(|&(i, _)| i);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
    for (i, v) in entries {
        match out.last_mut() {
            Some((j, acc)) if *j == i => *acc += v,
            _ => out.push((i, v)),
        }
    }
    out
}

/// Fine elements of the coarse node patch `U(z)`.
pub fn fine_node_patch(mesh: &MeshHierarchy, z: usize) -> ElementSet {
    mesh.fine_elements_of(&mesh.node_patch(z))
}

/// Fine elements whose closure contains the coarse node `z`.
pub fn incident_fine_elements(mesh: &MeshHierarchy, z: usize) -> Vec<usize> {
    mesh.fine().node_elements(mesh.coarse_node_to_fine(z)).as_slice().to_vec()
}

/// Edge-connected flood fill over unit elements of `U(z)` from `seed`.
fn unit_component_in_patch(mesh: &MeshHierarchy, coef: &Coefficient, z: usize, seed: usize) -> ElementSet {
    let patch = mesh.node_patch(z);
    let grid = mesh.fine();
    let mut seen = HashSet::from([seed]);
    let mut queue = VecDeque::from([seed]);
    while let Some(e) = queue.pop_front() {
        for nb in grid.element_neighbors(e).into_iter().flatten() {
            if coef.is_one(nb) && patch.contains(mesh.parent(nb)) && seen.insert(nb) {
                queue.push_back(nb);
            }
        }
    }
    ElementSet::new(MeshLevel::Fine, seen)
}

fn node_variable(
    mesh: &MeshHierarchy,
    node: usize,
    class: NodeClass,
    sigma: ElementSet,
    weight: Weight<'_>,
) -> Result<(NodeVariable, DualBasis)> {
    let basis = dual_basis(mesh, &sigma, node, weight)?;
    let var = NodeVariable {
        node,
        class,
        sigma,
        support: basis.support.clone(),
        xi: basis.xi.clone(),
        kappa: kappa_of(mesh, &basis),
    };
    Ok((var, basis))
}

fn ih_sigma(mesh: &MeshHierarchy, coef: &Coefficient, z: usize, delta: ScaleFactor) -> Result<(NodeClass, ElementSet)> {
    let seed = incident_fine_elements(mesh, z).into_iter().find(|&e| coef.is_one(e));
    match seed {
        Some(seed) => Ok((NodeClass::I, unit_component_in_patch(mesh, coef, z, seed))),
        None => Ok((NodeClass::II, mesh.scaled_node_patch(z, delta)?)),
    }
}

/// Class and integration domain of every free coarse node for the
/// geometry-aware operator with class II scaling `delta`.
pub fn classify_nodes_ih(mesh: &MeshHierarchy, coef: &Coefficient, delta: ScaleFactor) -> Result<Vec<NodeVariable>> {
    coef.check_grid(mesh.fine())?;
    let results: Vec<Result<NodeVariable>> = mesh
        .free_coarse_nodes()
        .par_iter()
        .map(|&z| {
            let (class, sigma) = ih_sigma(mesh, coef, z, delta)?;
            node_variable(mesh, z, class, sigma, Weight::Unit).map(|(v, _)| v)
        })
        .collect();
    results.into_iter().collect()
}

/// Region reached from the elements at `z` by edge steps inside `U(z)` that
/// never increase the coefficient.
pub fn quasi_monotone_region(mesh: &MeshHierarchy, coef: &Coefficient, z: usize) -> ElementSet {
    let patch = mesh.node_patch(z);
    let grid = mesh.fine();
    let start = incident_fine_elements(mesh, z);
    let mut seen: HashSet<usize> = start.iter().copied().collect();
    let mut queue: VecDeque<usize> = start.into();
    while let Some(e) = queue.pop_front() {
        for nb in grid.element_neighbors(e).into_iter().flatten() {
            if coef.value(nb) <= coef.value(e) && patch.contains(mesh.parent(nb)) && seen.insert(nb) {
                queue.push_back(nb);
            }
        }
    }
    ElementSet::new(MeshLevel::Fine, seen)
}

/// Whether every element of `region` reaches an element touching `z` along
/// an edge path inside `region` on which the coefficient never decreases.
pub fn is_quasi_monotone(mesh: &MeshHierarchy, coef: &Coefficient, region: &ElementSet, z: usize) -> bool {
    let grid = mesh.fine();
    let members = region.as_slice();
    let zf = mesh.coarse_node_to_fine(z);
    let mut good: Vec<bool> = members.iter().map(|&e| grid.element_vertices(e).contains(&zf)).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for (p, &e) in members.iter().enumerate() {
            if good[p] {
                continue;
            }
            let reaches = grid.element_neighbors(e).into_iter().flatten().any(|nb| {
                members
                    .binary_search(&nb)
                    .is_ok_and(|q| good[q] && coef.value(e) <= coef.value(nb))
            });
            if reaches {
                good[p] = true;
                changed = true;
            }
        }
    }
    good.into_iter().all(|g| g)
}

/// Sparse fine-to-coarse map with its per-node diagnostics.
#[derive(Clone, Debug)]
pub struct InterpOperator {
    kind: OperatorKind,
    matrix: SparseMatrix,
    nodes: Vec<NodeVariable>,
}

impl InterpOperator {
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    /// Rows follow [`MeshHierarchy::free_coarse_nodes`], columns are fine nodes.
    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Empty for nodal interpolation.
    pub fn node_variables(&self) -> &[NodeVariable] {
        &self.nodes
    }

    /// Coarse nodal values `R v` on the free nodes.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(v)
    }
}

pub fn build_operator(
    kind: OperatorKind,
    mesh: &MeshHierarchy,
    coef: &Coefficient,
    params: &OperatorParams,
) -> Result<InterpOperator> {
    coef.check_grid(mesh.fine())?;
    let free = mesh.free_coarse_nodes();
    let nfine = mesh.fine().node_count();
    if kind == OperatorKind::Nodal {
        let t = free
            .iter()
            .enumerate()
            .map(|(r, &z)| (r, mesh.coarse_node_to_fine(z), 1.0))
            .collect();
        return Ok(InterpOperator {
            kind,
            matrix: SparseMatrix::from_triplets(free.len(), nfine, t, false),
            nodes: Vec::new(),
        });
    }
    let per_node = |z: usize| -> Result<(NodeVariable, Vec<(usize, f64)>)> {
        let (class, sigma, weight) = match kind {
            OperatorKind::ScottZhang => (NodeClass::Plain, fine_node_patch(mesh, z), Weight::Unit),
            OperatorKind::Ih => {
                let (c, s) = ih_sigma(mesh, coef, z, params.ih_delta)?;
                (c, s, Weight::Unit)
            }
            OperatorKind::Ih1 => {
                let (c, s) = ih_sigma(mesh, coef, z, params.ih1_delta)?;
                (c, s, Weight::Unit)
            }
            OperatorKind::AProj => (NodeClass::Plain, fine_node_patch(mesh, z), Weight::Coefficient(coef)),
            OperatorKind::AProjQm => {
                (NodeClass::Plain, quasi_monotone_region(mesh, coef, z), Weight::Coefficient(coef))
            }
            OperatorKind::Nodal => unreachable!(),
        };
        let (var, basis) = node_variable(mesh, z, class, sigma, weight)?;
        let row = functional_row(mesh, &var.sigma, &basis, weight);
        Ok((var, row))
    };
    let results: Vec<Result<_>> = free.par_iter().map(|&z| per_node(z)).collect();
    let mut nodes = Vec::with_capacity(free.len());
    let mut t = Vec::new();
    for (r, res) in results.into_iter().enumerate() {
        let (var, row) = res?;
        t.extend(row.into_iter().map(|(j, v)| (r, j, v)));
        nodes.push(var);
    }
    Ok(InterpOperator { kind, matrix: SparseMatrix::from_triplets(free.len(), nfine, t, false), nodes })
}

/// How well the class I integration domains cover the unit set.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageReport {
    /// Share of the unit-set area inside some class I domain; `None` without a unit set.
    pub covered_fraction: Option<f64>,
    pub unit_components: usize,
    /// Unit-set components that no class I domain touches.
    pub uncovered_components: usize,
    pub max_kappa_class_i: Option<f64>,
    pub max_kappa_class_ii: Option<f64>,
}

pub fn coverage_report(mesh: &MeshHierarchy, coef: &Coefficient, nodes: &[NodeVariable]) -> CoverageReport {
    let grid = mesh.fine();
    let labels = coef.connected_components(grid, true);
    let mut covered = vec![false; grid.element_count()];
    let mut touched = vec![false; labels.count()];
    for var in nodes.iter().filter(|v| v.class == NodeClass::I) {
        for e in var.sigma.iter() {
            covered[e] = true;
            if let Some(l) = labels.label(e) {
                touched[l] = true;
            }
        }
    }
    let unit = coef.flags().iter().filter(|&&f| f).count();
    let covered_unit = (0..grid.element_count()).filter(|&e| covered[e] && coef.is_one(e)).count();
    let max_kappa = |class: NodeClass| {
        nodes
            .iter()
            .filter(|v| v.class == class)
            .map(|v| v.kappa)
            .fold(None, |m: Option<f64>, k| Some(m.map_or(k, |m| m.max(k))))
    };
    CoverageReport {
        covered_fraction: (unit > 0).then(|| covered_unit as f64 / unit as f64),
        unit_components: labels.count(),
        uncovered_components: touched.iter().filter(|&&t| !t).count(),
        max_kappa_class_i: max_kappa(NodeClass::I),
        max_kappa_class_ii: max_kappa(NodeClass::II),
    }
}

/// Writes `node,x,y,class,sigma_elements,kappa` lines for each node variable.
pub fn write_node_table(mesh: &MeshHierarchy, nodes: &[NodeVariable], mut out: impl Write) -> Result<()> {
    writeln!(out, "node,x,y,class,sigma_elements,kappa")?;
    for v in nodes {
        let [x, y] = mesh.coarse().node_coords(v.node);
        writeln!(
            out,
            "{},{:.16e},{:.16e},{},{},{:.16e}",
            v.node,
            x,
            y,
            v.class.name(),
            v.sigma.len(),
            v.kappa
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoundarySpec;

    fn mesh(l: u32, f: u32) -> MeshHierarchy {
        MeshHierarchy::build(l, f, BoundarySpec::full()).unwrap()
    }

    #[test]
    fn full_element_kappa() {
        let m = mesh(2, 5);
        let t = m.coarse().element_index(1, 1, 0);
        let sigma = m.fine_elements_of(&ElementSet::new(MeshLevel::Coarse, [t]));
        let own = m.coarse().element_vertices(t)[0];
        let k = kappa(&m, &sigma, own).unwrap();
        assert!((k * k - 18.0).abs() < 1e-10 * 18.0);
    }

    #[test]
    fn duality_on_full_patch() {
        let m = mesh(2, 4);
        let z = m.coarse().node_index(2, 2);
        let sigma = fine_node_patch(&m, z);
        let basis = dual_basis(&m, &sigma, z, Weight::Unit).unwrap();
        assert_eq!(basis.support.len(), 7);
        assert_eq!(basis.support[0], z);
        for (j, row) in basis.gram.iter().enumerate() {
            let s: f64 = row.iter().zip(&basis.xi).map(|(g, x)| g * x).sum();
            let expected = if j == 0 { 1.0 } else { 0.0 };
            assert!((s - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_sigma_is_degenerate() {
        let m = mesh(1, 3);
        let err = dual_basis(&m, &ElementSet::empty(MeshLevel::Fine), 4, Weight::Unit);
        assert!(matches!(err, Err(Error::DegenerateSigma { node: 4, .. })));
    }

    #[test]
    fn ih_on_unit_coefficient_matches_sz() {
        let m = mesh(2, 4);
        let c = Coefficient::constant_one(m.fine());
        let p = OperatorParams::default();
        let ih = build_operator(OperatorKind::Ih, &m, &c, &p).unwrap();
        let sz = build_operator(OperatorKind::ScottZhang, &m, &c, &p).unwrap();
        assert!(ih.node_variables().iter().all(|v| v.class == NodeClass::I));
        for (i, j, v) in ih.matrix().iter() {
            assert!((v - sz.matrix().get(i, j)).abs() <= 1e-12);
        }
        assert_eq!(ih.matrix().nnz(), sz.matrix().nnz());
    }

    #[test]
    fn all_background_is_class_two() {
        let m = mesh(2, 5);
        let c = Coefficient::constant_alpha(m.fine(), 0.01).unwrap();
        let vars = classify_nodes_ih(&m, &c, ScaleFactor::QUARTER).unwrap();
        assert!(vars.iter().all(|v| v.class == NodeClass::II));
        let report = coverage_report(&m, &c, &vars);
        assert_eq!(report.covered_fraction, None);
        assert_eq!(report.unit_components, 0);
    }

    #[test]
    fn nodal_rows_pick_coincident_nodes() {
        let m = mesh(2, 4);
        let c = Coefficient::constant_one(m.fine());
        let op = build_operator(OperatorKind::Nodal, &m, &c, &OperatorParams::default()).unwrap();
        let v: Vec<f64> = (0..m.fine().node_count()).map(|i| (i as f64).sin()).collect();
        let r = op.apply(&v);
        for (row, &z) in m.free_coarse_nodes().iter().enumerate() {
            assert_eq!(r[row], v[m.coarse_node_to_fine(z)]);
        }
    }

    #[test]
    fn projection_for_every_kind() {
        let m = mesh(2, 6);
        let c = Coefficient::stripes(&m, 1e-3).unwrap();
        let p = m.prolongation();
        for kind in OperatorKind::ALL {
            let op = build_operator(kind, &m, &c, &OperatorParams::default()).unwrap();
            for (row, &z) in m.free_coarse_nodes().iter().enumerate() {
                let mut e = vec![0.0; m.coarse().node_count()];
                e[z] = 1.0;
                let r = op.apply(&p.mul_vec(&e));
                for (k, v) in r.iter().enumerate() {
                    let expected = if k == row { 1.0 } else { 0.0 };
                    assert!((v - expected).abs() < 1e-10, "{kind} row {k}");
                }
            }
        }
    }

    #[test]
    fn qm_region_rules() {
        let m = mesh(1, 4);
        let z = m.coarse().node_index(1, 1);
        let patch = fine_node_patch(&m, z);
        let incident = incident_fine_elements(&m, z);
        let grid = m.fine();

        let one = Coefficient::constant_one(grid);
        assert_eq!(quasi_monotone_region(&m, &one, z), patch);

        // Unit set around z with an enclosed background pocket.
        let far = grid.element_index(6, 6, 1);
        let mut flags = vec![true; grid.element_count()];
        flags[far] = false;
        let c = Coefficient::from_flags(grid, 0.01, flags).unwrap();
        let region = quasi_monotone_region(&m, &c, z);
        assert!(region.contains(far));
        assert!(is_quasi_monotone(&m, &c, &region, z));

        // Background at z, a unit island elsewhere in the patch.
        let mut flags = vec![false; grid.element_count()];
        flags[far] = true;
        let c = Coefficient::from_flags(grid, 0.01, flags).unwrap();
        let region = quasi_monotone_region(&m, &c, z);
        assert!(!region.contains(far));
        assert!(incident.iter().all(|&e| region.contains(e)));
        assert!(is_quasi_monotone(&m, &c, &region, z));
        assert!(!is_quasi_monotone(&m, &c, &patch, z));
    }

    #[test]
    fn node_table_lines() {
        let m = mesh(1, 3);
        let c = Coefficient::constant_one(m.fine());
        let op = build_operator(OperatorKind::ScottZhang, &m, &c, &OperatorParams::default()).unwrap();
        let mut buf = Vec::new();
        write_node_table(&m, op.node_variables(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("4,5.0"));
    }
}
