//! The localized multiscale method: patch correctors, the right-hand side
//! correction, the coarse Galerkin solve and error/decay diagnostics.

use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::assembly::{
    assemble_load, assemble_stiffness, dense_spd_solve, element_load, energy_norm, solve_spd, SaddleSolver, Source,
    ELEMENT_STIFFNESS,
};
use crate::coefficient::Coefficient;
use crate::error::{Error, Result};
use crate::interp::{InterpOperator, OperatorKind};
use crate::mesh::{ElementSet, MeshHierarchy, MeshLevel};
use crate::sparse::SparseMatrix;

/// Coarse elements handled per parallel batch; bounds the memory held by
/// unmerged patch solutions.
const BATCH: usize = 32;

/// Shared inputs of every solve: mesh, coefficient and the fine stiffness
/// matrix `K_A` over all fine nodes.
pub struct LodContext<'a> {
    mesh: &'a MeshHierarchy,
    coef: &'a Coefficient,
    stiffness: SparseMatrix,
    constrained: Vec<usize>,
}

/// Saddle system of one patch: the interior fine DOFs and the factorization.
struct PatchSystem {
    dofs: Vec<usize>,
    local_of: Vec<Option<usize>>,
    solver: SaddleSolver,
}

/// `Q_k φ_i` for every free coarse node, and optionally `Σ_T R_{k,T} f`.
#[derive(Clone, Debug)]
pub struct CorrectorSet {
    pub kind: OperatorKind,
    pub k: usize,
    /// Indexed like [`MeshHierarchy::free_coarse_nodes`]; full fine vectors.
    pub correctors: Vec<Vec<f64>>,
    pub rhs: Option<Vec<f64>>,
    /// Coarse elements on which a load corrector problem was solved.
    pub rhs_solves: usize,
}

#[derive(Clone, Debug)]
pub struct LodSolution {
    pub kind: OperatorKind,
    pub k: usize,
    pub alpha: f64,
    /// Coefficients of the multiscale basis, one per free coarse node.
    pub coarse: Vec<f64>,
    pub u_ms: Vec<f64>,
    /// Load correction; all zeros when the correction is disabled.
    pub u_f: Vec<f64>,
    pub u_total: Vec<f64>,
}

struct ElementResult {
    dofs: Arc<Vec<usize>>,
    /// `(free row, local values)` for each free vertex of the element.
    basis: Vec<(usize, Vec<f64>)>,
    load: Option<Vec<f64>>,
}

impl<'a> LodContext<'a> {
    pub fn new(mesh: &'a MeshHierarchy, coef: &'a Coefficient) -> Result<Self> {
        coef.check_grid(mesh.fine())?;
        if mesh.boundary().is_empty() {
            return Err(Error::Parameter("at least one Dirichlet edge is required".into()));
        }
        Ok(Self {
            mesh,
            coef,
            stiffness: assemble_stiffness(mesh, coef, None),
            constrained: mesh.fine_constrained_nodes(),
        })
    }

    pub fn mesh(&self) -> &MeshHierarchy {
        self.mesh
    }

    pub fn coefficient(&self) -> &Coefficient {
        self.coef
    }

    pub fn stiffness(&self) -> &SparseMatrix {
        &self.stiffness
    }

    /// Fine Galerkin solution with homogeneous Dirichlet data on Γ.
    pub fn reference_solution(&self, source: &Source) -> Result<Vec<f64>> {
        let b = assemble_load(self.mesh, source, None)?;
        solve_spd(&self.stiffness, &b, &self.constrained)
    }

    pub fn energy_norm(&self, v: &[f64]) -> f64 {
        energy_norm(&self.stiffness, v)
    }

    pub fn relative_energy_error(&self, reference: &[f64], u: &[f64]) -> f64 {
        relative_energy_error(&self.stiffness, reference, u)
    }

    fn is_full(&self, patch: &ElementSet) -> bool {
        patch.len() == self.mesh.coarse().element_count()
    }

    fn patch_system(&self, op: &InterpOperator, patch: &ElementSet) -> Result<PatchSystem> {
        let mesh = self.mesh;
        let fine = mesh.fine();
        let in_patch = patch.mask(mesh.coarse().element_count());
        let mut candidate = vec![false; fine.node_count()];
        for t in patch.iter() {
            for e in mesh.children(t) {
                for v in fine.element_vertices(e) {
                    candidate[v] = true;
                }
            }
        }
        let dofs: Vec<usize> = (0..fine.node_count())
            .filter(|&n| {
                candidate[n]
                    && !mesh.is_fine_constrained(n)
                    && fine.node_elements(n).as_slice().iter().all(|&e| in_patch[mesh.parent(e)])
            })
            .collect();
        let mut local_of = vec![None; fine.node_count()];
        for (l, &g) in dofs.iter().enumerate() {
            local_of[g] = Some(l);
        }
        let r = op.matrix();
        let rows: Vec<usize> = (0..r.nrows())
            .filter(|&i| {
                let (cols, vals) = r.row(i);
                cols.iter().zip(vals).any(|(&j, &v)| v != 0.0 && local_of[j].is_some())
            })
            .collect();
        let c = r.select(&rows, &local_of, dofs.len());
        let k = self.stiffness.principal_submatrix(&dofs);
        let solver = SaddleSolver::new(&k, &c)?;
        Ok(PatchSystem { dofs, local_of, solver })
    }

    /// `b(w) = ∫_T A ∇φ_z · ∇w` over the patch DOFs.
    fn element_rhs(&self, system: &PatchSystem, node: usize, t: usize) -> Vec<f64> {
        let mesh = self.mesh;
        let fine = mesh.fine();
        let corner = mesh.coarse().element_vertices(t).iter().position(|&v| v == node);
        let mut b = vec![0.0; system.dofs.len()];
        let Some(c) = corner else {
            return b;
        };
        for e in mesh.children(t) {
            let (_, values) = mesh.coarse_hat_values(e);
            let a = self.coef.value(e);
            for (bv, v) in fine.element_vertices(e).into_iter().enumerate() {
                if let Some(l) = system.local_of[v] {
                    let s: f64 = (0..3).map(|av| values[av][c] * ELEMENT_STIFFNESS[av][bv]).sum();
                    b[l] += a * s;
                }
            }
        }
        b
    }

    /// `b(w) = ∫_T f w` over the patch DOFs; `None` when `f` vanishes on `T`.
    fn load_rhs(&self, system: &PatchSystem, source: &Source, t: usize) -> Result<Option<Vec<f64>>> {
        let fine = self.mesh.fine();
        let mut b = vec![0.0; system.dofs.len()];
        let mut nonzero = false;
        for e in self.mesh.children(t) {
            let local = element_load(fine, source, e)?;
            if local.iter().any(|&v| v != 0.0) {
                nonzero = true;
            }
            for (a, v) in fine.element_vertices(e).into_iter().enumerate() {
                if let Some(l) = system.local_of[v] {
                    b[l] += local[a];
                }
            }
        }
        Ok(nonzero.then_some(b))
    }

    fn scatter(&self, dofs: &[usize], local: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.mesh.fine().node_count()];
        for (&g, &v) in dofs.iter().zip(local) {
            out[g] = v;
        }
        out
    }

    fn patch(&self, t: usize, k: usize) -> Result<ElementSet> {
        if t >= self.mesh.coarse().element_count() {
            return Err(Error::Parameter(format!("coarse element {t} out of range")));
        }
        self.mesh.element_patch(&ElementSet::new(MeshLevel::Coarse, [t]), k)
    }

    /// `Q_{k,T} φ_node` as a fine vector.
    pub fn element_corrector(&self, op: &InterpOperator, node: usize, t: usize, k: usize) -> Result<Vec<f64>> {
        if !self.mesh.coarse().element_vertices(t).contains(&node) {
            return Err(Error::Parameter(format!("node {node} is not a vertex of coarse element {t}")));
        }
        let system = self.patch_system(op, &self.patch(t, k)?)?;
        let (u, _) = system.solver.solve(&self.element_rhs(&system, node, t))?;
        Ok(self.scatter(&system.dofs, &u))
    }

    /// `R_{k,T} f` as a fine vector, or `None` if `f` vanishes on `T`.
    pub fn rhs_corrector(&self, op: &InterpOperator, t: usize, k: usize, source: &Source) -> Result<Option<Vec<f64>>> {
        source.validate(self.mesh.fine())?;
        let system = self.patch_system(op, &self.patch(t, k)?)?;
        match self.load_rhs(&system, source, t)? {
            Some(b) => {
                let (u, _) = system.solver.solve(&b)?;
                Ok(Some(self.scatter(&system.dofs, &u)))
            }
            None => Ok(None),
        }
    }

    fn solve_element(
        &self,
        op: &InterpOperator,
        t: usize,
        k: usize,
        source: Option<&Source>,
        shared: &OnceLock<std::result::Result<Arc<PatchSystem>, String>>,
    ) -> Result<ElementResult> {
        let patch = self.patch(t, k)?;
        let system = if self.is_full(&patch) {
            // Every saturated patch is the whole mesh; factor it once.
            let cell = shared.get_or_init(|| self.patch_system(op, &patch).map(Arc::new).map_err(|e| e.to_string()));
            match cell {
                Ok(s) => Arc::clone(s),
                Err(_) => Arc::new(self.patch_system(op, &patch)?),
            }
        } else {
            Arc::new(self.patch_system(op, &patch)?)
        };
        let mut basis = Vec::new();
        for node in self.mesh.coarse().element_vertices(t) {
            if let Some(row) = self.mesh.free_coarse_row(node) {
                let (u, _) = system.solver.solve(&self.element_rhs(&system, node, t))?;
                basis.push((row, u));
            }
        }
        let load = match source {
            Some(src) => match self.load_rhs(&system, src, t)? {
                Some(b) => Some(system.solver.solve(&b)?.0),
                None => None,
            },
            None => None,
        };
        Ok(ElementResult { dofs: Arc::new(system.dofs.clone()), basis, load })
    }

    /// All correctors `Q_k φ_i` and, with a source, the load correction.
    pub fn compute_correctors(&self, op: &InterpOperator, k: usize, source: Option<&Source>) -> Result<CorrectorSet> {
        if k == 0 {
            return Err(Error::Parameter("patch size k must be at least 1".into()));
        }
        if let Some(src) = source {
            src.validate(self.mesh.fine())?;
        }
        let nfine = self.mesh.fine().node_count();
        let free = self.mesh.free_coarse_nodes().len();
        let mut correctors = vec![vec![0.0; nfine]; free];
        let mut rhs = source.map(|_| vec![0.0; nfine]);
        let mut rhs_solves = 0;
        let shared = OnceLock::new();
        let elements: Vec<usize> = (0..self.mesh.coarse().element_count()).collect();
        for batch in elements.chunks(BATCH) {
            let results: Vec<Result<ElementResult>> = batch
                .par_iter()
                .map(|&t| self.solve_element(op, t, k, source, &shared))
                .collect();
            for res in results {
                let res = res?;
                for (row, values) in &res.basis {
                    let q = &mut correctors[*row];
                    for (&g, &v) in res.dofs.iter().zip(values) {
                        q[g] += v;
                    }
                }
                if let (Some(total), Some(values)) = (rhs.as_mut(), res.load.as_ref()) {
                    rhs_solves += 1;
                    for (&g, &v) in res.dofs.iter().zip(values) {
                        total[g] += v;
                    }
                }
            }
        }
        Ok(CorrectorSet { kind: op.kind(), k, correctors, rhs, rhs_solves })
    }

    /// Multiscale basis `φ_i − Q_k φ_i` as fine vectors.
    pub fn multiscale_basis(&self, correctors: &CorrectorSet) -> Vec<Vec<f64>> {
        let p = self.mesh.prolongation();
        let ncoarse = self.mesh.coarse().node_count();
        self.mesh
            .free_coarse_nodes()
            .iter()
            .zip(&correctors.correctors)
            .map(|(&z, q)| {
                let mut e = vec![0.0; ncoarse];
                e[z] = 1.0;
                let mut b = p.mul_vec(&e);
                b.iter_mut().zip(q).for_each(|(bi, qi)| *bi -= qi);
                for &c in &self.constrained {
                    b[c] = 0.0;
                }
                b
            })
            .collect()
    }

    /// Galerkin solve in the localized multiscale space, optionally with the
    /// load correction added.
    pub fn solve_multiscale(
        &self,
        op: &InterpOperator,
        k: usize,
        source: &Source,
        rhs_correction: bool,
    ) -> Result<LodSolution> {
        let correctors = self.compute_correctors(op, k, rhs_correction.then_some(source))?;
        self.solve_with_correctors(&correctors, source)
    }

    pub fn solve_with_correctors(&self, correctors: &CorrectorSet, source: &Source) -> Result<LodSolution> {
        let basis = self.multiscale_basis(correctors);
        let n = basis.len();
        let load = assemble_load(self.mesh, source, None)?;
        let u_f = correctors.rhs.clone().unwrap_or_else(|| vec![0.0; load.len()]);
        let k_uf = self.stiffness.mul_vec(&u_f);
        let supports: Vec<(usize, usize)> = basis.iter().map(|b| support_range(b)).collect();
        let k_basis: Vec<Vec<f64>> = basis.par_iter().map(|b| self.stiffness.mul_vec(b)).collect();
        // `K b` reaches one node layer past `b`, so its own range is needed.
        let k_supports: Vec<(usize, usize)> = k_basis.iter().map(|b| support_range(b)).collect();
        let mut g = vec![vec![0.0; n]; n];
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            for j in 0..=i {
                let (lo, hi) = (k_supports[i].0.max(supports[j].0), k_supports[i].1.min(supports[j].1));
                let v = if lo < hi { dot(&k_basis[i][lo..hi], &basis[j][lo..hi]) } else { 0.0 };
                g[i][j] = v;
                g[j][i] = v;
            }
            rhs[i] = dot(&load, &basis[i]) - dot(&k_uf, &basis[i]);
        }
        let coarse = if n == 0 {
            Vec::new()
        } else {
            dense_spd_solve(&g, &rhs)
                .map_err(|e| Error::Solver(format!("coarse multiscale system is singular: {e}")))?
        };
        let mut u_ms = vec![0.0; load.len()];
        for (c, b) in coarse.iter().zip(&basis) {
            u_ms.iter_mut().zip(b).for_each(|(u, bi)| *u += c * bi);
        }
        let u_total = u_ms.iter().zip(&u_f).map(|(a, b)| a + b).collect();
        Ok(LodSolution {
            kind: correctors.kind,
            k: correctors.k,
            alpha: self.coef.alpha(),
            coarse,
            u_ms,
            u_f,
            u_total,
        })
    }

    /// `‖A^{1/2} ∇p‖` outside `U_k(T)` for `k = 0..=k_max`.
    pub fn decay_profile(&self, p: &[f64], t: usize, k_max: usize) -> Result<Vec<(usize, f64)>> {
        let mesh = self.mesh;
        let fine = mesh.fine();
        if p.len() != fine.node_count() {
            return Err(Error::Dimension(format!("vector of length {} for {} fine nodes", p.len(), fine.node_count())));
        }
        let mut per_coarse = vec![0.0; mesh.coarse().element_count()];
        for e in 0..fine.element_count() {
            let v = fine.element_vertices(e).map(|n| p[n]);
            let mut s = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    s += v[a] * ELEMENT_STIFFNESS[a][b] * v[b];
                }
            }
            per_coarse[mesh.parent(e)] += self.coef.value(e) * s;
        }
        (0..=k_max)
            .map(|k| {
                let inside = self.patch(t, k)?.mask(per_coarse.len());
                let outside: f64 = per_coarse.iter().zip(&inside).filter(|(_, &i)| !i).map(|(e, _)| e).sum();
                Ok((k, outside.max(0.0).sqrt()))
            })
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Half-open index range containing every nonzero entry.
fn support_range(v: &[f64]) -> (usize, usize) {
    let lo = v.iter().position(|&x| x != 0.0).unwrap_or(0);
    let hi = v.iter().rposition(|&x| x != 0.0).map_or(0, |i| i + 1);
    (lo, hi)
}

/// `‖u_ref − u‖_a / ‖u_ref‖_a`.
pub fn relative_energy_error(stiffness: &SparseMatrix, reference: &[f64], u: &[f64]) -> f64 {
    let diff: Vec<f64> = reference.iter().zip(u).map(|(r, v)| r - v).collect();
    energy_norm(stiffness, &diff) / energy_norm(stiffness, reference)
}

/// Least-squares slope of `log10(value)` against `k`, over the values above
/// `floor`. `None` with fewer than two usable points.
pub fn fit_log_slope(points: &[(usize, f64)], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(_, v)| v > floor && v > 0.0)
        .map(|&(k, v)| (k as f64, v.log10()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Slope of a decay profile, ignoring energies below `1e-12` of the total.
pub fn decay_slope(profile: &[(usize, f64)], total_energy: f64) -> Option<f64> {
    fit_log_slope(profile, 1e-12 * total_energy)
}
