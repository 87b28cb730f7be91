//! P1 assembly on the fine mesh and the linear solvers built on it.
//!
//! Every element is a right isosceles triangle with vertices listed from the
//! right-angle corner, so all element integrals have closed forms.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use crate::coefficient::Coefficient;
use crate::error::{Error, Result};
use crate::mesh::{ElementSet, Grid, MeshHierarchy, MeshLevel};
use crate::sparse::SparseMatrix;

/// `∫_K ∇φ_a · ∇φ_b` for any element; independent of the mesh size.
pub const ELEMENT_STIFFNESS: [[f64; 3]; 3] = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];

/// `∫_K φ_a φ_b` for an element of the given area.
pub fn element_mass(area: f64) -> [[f64; 3]; 3] {
    let d = area / 6.0;
    let o = area / 12.0;
    [[d, o, o], [o, d, o], [o, o, d]]
}

/// Per-element weight applied to mass-type integrals.
#[derive(Clone, Copy, Debug)]
pub enum Weight<'a> {
    Unit,
    Coefficient(&'a Coefficient),
}

impl Weight<'_> {
    pub fn at(&self, e: usize) -> f64 {
        match self {
            Weight::Unit => 1.0,
            Weight::Coefficient(c) => c.value(e),
        }
    }
}

fn region_elements<'r>(grid: &Grid, region: Option<&'r ElementSet>) -> Box<dyn Iterator<Item = usize> + 'r> {
    match region {
        Some(set) => {
            assert_eq!(set.level(), MeshLevel::Fine, "assembly regions are fine element sets");
            Box::new(set.iter())
        }
        None => Box::new(0..grid.element_count()),
    }
}

/// `K_ij = Σ_K A|_K ∫_K ∇φ_i·∇φ_j` over `region` (all fine elements if `None`).
pub fn assemble_stiffness(mesh: &MeshHierarchy, coef: &Coefficient, region: Option<&ElementSet>) -> SparseMatrix {
    let grid = mesh.fine();
    let mut t = Vec::with_capacity(9 * region.map_or(grid.element_count(), ElementSet::len));
    for e in region_elements(grid, region) {
        let a = coef.value(e);
        let v = grid.element_vertices(e);
        for (r, &vr) in v.iter().enumerate() {
            for (c, &vc) in v.iter().enumerate() {
                if ELEMENT_STIFFNESS[r][c] != 0.0 {
                    t.push((vr, vc, a * ELEMENT_STIFFNESS[r][c]));
                }
            }
        }
    }
    SparseMatrix::from_triplets(grid.node_count(), grid.node_count(), t, true)
}

/// `M_ij = Σ_K w|_K ∫_K φ_i φ_j` over `region`.
pub fn assemble_mass(mesh: &MeshHierarchy, region: Option<&ElementSet>, weight: Weight<'_>) -> SparseMatrix {
    let grid = mesh.fine();
    let local = element_mass(grid.element_area());
    let mut t = Vec::with_capacity(9 * region.map_or(grid.element_count(), ElementSet::len));
    for e in region_elements(grid, region) {
        let w = weight.at(e);
        let v = grid.element_vertices(e);
        for (r, &vr) in v.iter().enumerate() {
            for (c, &vc) in v.iter().enumerate() {
                t.push((vr, vc, w * local[r][c]));
            }
        }
    }
    SparseMatrix::from_triplets(grid.node_count(), grid.node_count(), t, true)
}

/// Rows `k` of `coarse_nodes`, columns fine nodes:
/// `Σ_{K ∈ region} w|_K ∫_K φ_{H,k} φ_{h,j}`.
pub fn assemble_mixed_mass(
    mesh: &MeshHierarchy,
    region: &ElementSet,
    coarse_nodes: &[usize],
    weight: Weight<'_>,
) -> SparseMatrix {
    let grid = mesh.fine();
    let local = element_mass(grid.element_area());
    let mut t = Vec::new();
    for e in region.iter() {
        let (parent, values) = mesh.coarse_hat_values(e);
        let parent_vertices = mesh.coarse().element_vertices(parent);
        let w = weight.at(e);
        let fine_vertices = grid.element_vertices(e);
        for (row, &node) in coarse_nodes.iter().enumerate() {
            let Some(c) = parent_vertices.iter().position(|&p| p == node) else {
                continue;
            };
            for (b, &vb) in fine_vertices.iter().enumerate() {
                let integral: f64 = (0..3).map(|a| values[a][c] * local[a][b]).sum();
                t.push((row, vb, w * integral));
            }
        }
    }
    SparseMatrix::from_triplets(coarse_nodes.len(), grid.node_count(), t, false)
}

/// Right-hand sides with exact load integrals on the fine mesh.
#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Constant(f64),
    /// Indicator of `[x0, x1] × [y0, y1]`; the bounds must be fine lattice values.
    Indicator { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// The fine hat function at the lattice point `(x, y)`.
    Hat { x: f64, y: f64 },
}

#[derive(Clone, Copy, Debug)]
enum ResolvedSource {
    Constant(f64),
    Indicator { i0: usize, i1: usize, j0: usize, j1: usize },
    Hat { node: usize },
}

fn lattice_index(v: f64, n: usize, what: &str) -> Result<usize> {
    let scaled = v * n as f64;
    if !(0.0..=1.0).contains(&v) || scaled.fract() != 0.0 {
        return Err(Error::Parameter(format!(
            "{what} = {v} is not a point of the fine lattice with spacing 1/{n}"
        )));
    }
    Ok(scaled as usize)
}

impl Source {
    fn resolve(&self, grid: &Grid) -> Result<ResolvedSource> {
        let n = grid.cells_per_side();
        Ok(match *self {
            Source::Constant(c) => ResolvedSource::Constant(c),
            Source::Indicator { x0, x1, y0, y1 } => {
                let r = ResolvedSource::Indicator {
                    i0: lattice_index(x0, n, "x0")?,
                    i1: lattice_index(x1, n, "x1")?,
                    j0: lattice_index(y0, n, "y0")?,
                    j1: lattice_index(y1, n, "y1")?,
                };
                if x0 >= x1 || y0 >= y1 {
                    return Err(Error::Parameter("indicator rectangle is empty".into()));
                }
                r
            }
            Source::Hat { x, y } => ResolvedSource::Hat {
                node: grid.node_index(lattice_index(x, n, "x")?, lattice_index(y, n, "y")?),
            },
        })
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        self.resolve(grid).map(|_| ())
    }
}

impl ResolvedSource {
    /// `∫_K f φ_a` for the three vertices of element `e`.
    fn element_load(&self, grid: &Grid, e: usize) -> [f64; 3] {
        let area = grid.element_area();
        match *self {
            ResolvedSource::Constant(c) => [c * area / 3.0; 3],
            ResolvedSource::Indicator { i0, i1, j0, j1 } => {
                let (i, j, _) = grid.element_cell(e);
                if (i0..i1).contains(&i) && (j0..j1).contains(&j) {
                    [area / 3.0; 3]
                } else {
                    [0.0; 3]
                }
            }
            ResolvedSource::Hat { node } => match grid.element_vertices(e).iter().position(|&v| v == node) {
                Some(a) => element_mass(area)[a],
                None => [0.0; 3],
            },
        }
    }
}

/// Load contributions of one fine element, `∫_K f φ_a` for its three vertices.
pub fn element_load(grid: &Grid, source: &Source, e: usize) -> Result<[f64; 3]> {
    Ok(source.resolve(grid)?.element_load(grid, e))
}

/// `b_i = ∫_region f φ_{h,i}` (whole domain if `region` is `None`).
pub fn assemble_load(mesh: &MeshHierarchy, source: &Source, region: Option<&ElementSet>) -> Result<Vec<f64>> {
    let grid = mesh.fine();
    let resolved = source.resolve(grid)?;
    let mut b = vec![0.0; grid.node_count()];
    for e in region_elements(grid, region) {
        let local = resolved.element_load(grid, e);
        for (a, v) in grid.element_vertices(e).into_iter().enumerate() {
            b[v] += local[a];
        }
    }
    Ok(b)
}

/// `sqrt(vᵀ K v)`, clamped at zero against roundoff.
pub fn energy_norm(stiffness: &SparseMatrix, v: &[f64]) -> f64 {
    stiffness.bilinear(v, v).max(0.0).sqrt()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Sparse Cholesky factorization of an SPD matrix.
pub struct SpdFactor {
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
    matrix: SparseMatrix,
}

impl SpdFactor {
    pub fn new(matrix: &SparseMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension(format!(
                "cannot factor a {}x{} matrix",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let llt = matrix
            .to_faer_lower()?
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Solver(format!("Cholesky factorization failed: {e:?}")))?;
        Ok(Self { llt, matrix: matrix.clone() })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Solves for several right-hand sides at once (columns of `rhs`).
    pub fn solve_columns(&self, rhs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.dim();
        if rhs.is_empty() {
            return Vec::new();
        }
        let mut m = Mat::<f64>::from_fn(n, rhs.len(), |i, j| rhs[j][i]);
        self.llt.solve_in_place(m.as_mut());
        (0..rhs.len()).map(|j| (0..n).map(|i| m[(i, j)]).collect()).collect()
    }

    /// Solves `K x = b` with up to two steps of iterative refinement, failing
    /// if the residual stays above `1e-10 ‖b‖`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(Error::Dimension(format!("rhs length {} for dimension {}", b.len(), self.dim())));
        }
        let mut x = self.solve_columns(&[b.to_vec()]).pop().unwrap();
        let target = 1e-10 * norm(b);
        let mut residual = self.residual(&x, b);
        for _ in 0..2 {
            if norm(&residual) <= target {
                break;
            }
            let dx = self.solve_columns(&[residual.clone()]).pop().unwrap();
            x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
            residual = self.residual(&x, b);
        }
        let r = norm(&residual);
        if r > target && r > 0.0 {
            return Err(Error::Solver(format!("SPD solve residual {r:.3e} exceeds {target:.3e}")));
        }
        Ok(x)
    }

    fn residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        let kx = self.matrix.mul_vec(x);
        b.iter().zip(&kx).map(|(bi, ki)| bi - ki).collect()
    }
}

/// Solves `K x = b` on the DOFs not listed in `constrained`; constrained
/// entries of the result are zero.
pub fn solve_spd(k: &SparseMatrix, b: &[f64], constrained: &[usize]) -> Result<Vec<f64>> {
    if b.len() != k.nrows() {
        return Err(Error::Dimension(format!("rhs length {} for {} rows", b.len(), k.nrows())));
    }
    let mut is_constrained = vec![false; k.nrows()];
    for &c in constrained {
        is_constrained[c] = true;
    }
    let free: Vec<usize> = (0..k.nrows()).filter(|&i| !is_constrained[i]).collect();
    let sub = k.principal_submatrix(&free);
    let rhs: Vec<f64> = free.iter().map(|&i| b[i]).collect();
    let x_free = SpdFactor::new(&sub)?.solve(&rhs)?;
    let mut x = vec![0.0; k.nrows()];
    for (&i, v) in free.iter().zip(x_free) {
        x[i] = v;
    }
    Ok(x)
}

/// Relative pivot below which a constraint row counts as dependent.
const DEPENDENT_PIVOT: f64 = 1e-12;

/// Block elimination of the saddle system
///
/// ```text
/// [ K  Cᵀ ] [u]   [b]
/// [ C  0  ] [λ] = [g]
/// ```
///
/// through a sparse Cholesky factor of `K` and a dense Cholesky factor of the
/// Schur complement `S = C K⁻¹ Cᵀ`. The factorization is computed once and
/// reused for every right-hand side.
pub struct SaddleSolver {
    k: SpdFactor,
    c: SparseMatrix,
    active: Vec<usize>,
    /// `K⁻¹ Cᵀ` restricted to the active rows, one column per active row.
    k_inv_ct: Vec<Vec<f64>>,
    schur: DenseCholesky,
}

impl SaddleSolver {
    pub fn new(k: &SparseMatrix, c: &SparseMatrix) -> Result<Self> {
        if c.ncols() != k.ncols() {
            return Err(Error::Dimension(format!(
                "constraint matrix has {} columns, stiffness has {}",
                c.ncols(),
                k.ncols()
            )));
        }
        let factor = SpdFactor::new(k)?;
        let active: Vec<usize> = (0..c.nrows()).filter(|&r| c.row(r).1.iter().any(|&v| v != 0.0)).collect();
        let n = k.nrows();
        let ct_columns: Vec<Vec<f64>> = active
            .iter()
            .map(|&r| {
                let mut col = vec![0.0; n];
                let (cols, vals) = c.row(r);
                for (&j, &v) in cols.iter().zip(vals) {
                    col[j] = v;
                }
                col
            })
            .collect();
        let k_inv_ct = factor.solve_columns(&ct_columns);
        let m = active.len();
        let mut s = vec![vec![0.0; m]; m];
        for (a, &r) in active.iter().enumerate() {
            let (cols, vals) = c.row(r);
            for (b, x) in k_inv_ct.iter().enumerate() {
                s[a][b] = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
            }
        }
        for a in 0..m {
            for b in 0..a {
                let avg = 0.5 * (s[a][b] + s[b][a]);
                s[a][b] = avg;
                s[b][a] = avg;
            }
        }
        let schur = DenseCholesky::new(s).map_err(|dependent| Error::ConstraintDegeneracy {
            rows: dependent.into_iter().map(|d| active[d]).collect(),
        })?;
        Ok(Self { k: factor, c: c.clone(), active, k_inv_ct, schur })
    }

    pub fn dim(&self) -> usize {
        self.k.dim()
    }

    pub fn constraint_count(&self) -> usize {
        self.c.nrows()
    }

    /// Indices of the nonzero constraint rows kept in the factorization.
    pub fn active_rows(&self) -> &[usize] {
        &self.active
    }

    fn solve_once(&self, b: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let u0 = self.k.solve_columns(&[b.to_vec()]).pop().unwrap();
        let cu0 = self.c.mul_vec(&u0);
        let rhs: Vec<f64> = self.active.iter().map(|&r| cu0[r] - g[r]).collect();
        let lam_active = self.schur.solve(&rhs);
        let mut u = u0;
        for (x, &l) in self.k_inv_ct.iter().zip(&lam_active) {
            u.iter_mut().zip(x).for_each(|(ui, xi)| *ui -= l * xi);
        }
        let mut lambda = vec![0.0; self.c.nrows()];
        for (&r, l) in self.active.iter().zip(lam_active) {
            lambda[r] = l;
        }
        (u, lambda)
    }

    fn residuals(&self, u: &[f64], lambda: &[f64], b: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let ku = self.k.matrix().mul_vec(u);
        let ctl = self.c.mul_transpose_vec(lambda);
        let r1 = (0..b.len()).map(|i| b[i] - ku[i] - ctl[i]).collect();
        let cu = self.c.mul_vec(u);
        let r2 = (0..g.len()).map(|i| g[i] - cu[i]).collect();
        (r1, r2)
    }

    /// Solves `K u + Cᵀ λ = b`, `C u = 0`.
    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.solve_general(b, &vec![0.0; self.c.nrows()])
    }

    /// Solves `K u + Cᵀ λ = b`, `C u = g`. Multipliers of pruned zero rows are 0.
    pub fn solve_general(&self, b: &[f64], g: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if b.len() != self.dim() || g.len() != self.c.nrows() {
            return Err(Error::Dimension("saddle right-hand side has the wrong length".into()));
        }
        let (mut u, mut lambda) = self.solve_once(b, g);
        let target = 1e-9 * (norm(b) + norm(g) + 1.0);
        for _ in 0..3 {
            let (r1, r2) = self.residuals(&u, &lambda, b, g);
            let r = norm(&r1) + norm(&r2);
            // Refining an already tiny residual only adds noise to λ.
            if r <= 1e-3 * target {
                return Ok((u, lambda));
            }
            let (du, dl) = self.solve_once(&r1, &r2);
            u.iter_mut().zip(&du).for_each(|(a, d)| *a += d);
            lambda.iter_mut().zip(&dl).for_each(|(a, d)| *a += d);
        }
        let (r1, r2) = self.residuals(&u, &lambda, b, g);
        let r = norm(&r1) + norm(&r2);
        if r > target {
            return Err(Error::Solver(format!("saddle residual {r:.3e} exceeds {target:.3e}")));
        }
        Ok((u, lambda))
    }
}

/// One-shot saddle solve; see [`SaddleSolver`].
pub fn solve_saddle(k: &SparseMatrix, c: &SparseMatrix, b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    SaddleSolver::new(k, c)?.solve(b)
}

/// Unpivoted dense Cholesky that reports rows whose pivot collapses.
struct DenseCholesky {
    l: Vec<Vec<f64>>,
}

impl DenseCholesky {
    fn new(mut a: Vec<Vec<f64>>) -> std::result::Result<Self, Vec<usize>> {
        let n = a.len();
        let mut dependent = Vec::new();
        for j in 0..n {
            let diag = a[j][j];
            let pivot = diag - (0..j).map(|p| a[j][p] * a[j][p]).sum::<f64>();
            if !(diag > 0.0) || pivot <= DEPENDENT_PIVOT * diag {
                dependent.push(j);
                // Keep going so every dependent row gets reported.
                for p in 0..j {
                    a[j][p] = 0.0;
                }
                a[j][j] = 1.0;
                for i in j + 1..n {
                    a[i][j] = 0.0;
                }
                continue;
            }
            let d = pivot.sqrt();
            a[j][j] = d;
            for i in j + 1..n {
                let s = a[i][j] - (0..j).map(|p| a[i][p] * a[j][p]).sum::<f64>();
                a[i][j] = s / d;
            }
        }
        if dependent.is_empty() {
            Ok(Self { l: a })
        } else {
            Err(dependent)
        }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.len();
        let mut y = b.to_vec();
        for i in 0..n {
            let s: f64 = (0..i).map(|p| self.l[i][p] * y[p]).sum();
            y[i] = (y[i] - s) / self.l[i][i];
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|p| self.l[p][i] * y[p]).sum();
            y[i] = (y[i] - s) / self.l[i][i];
        }
        y
    }
}

/// Dense symmetric solve used for the small coarse and node-local systems.
pub(crate) fn dense_spd_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    let m = Mat::<f64>::from_fn(n, n, |i, j| a[i][j]);
    let llt = m
        .llt(Side::Lower)
        .map_err(|e| Error::Solver(format!("dense Cholesky failed: {e:?}")))?;
    let mut rhs = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
    llt.solve_in_place(rhs.as_mut());
    Ok((0..n).map(|i| rhs[(i, 0)]).collect())
}

/// Eigenvalues of a symmetric matrix, ascending.
pub(crate) fn symmetric_eigenvalues(a: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = a.len();
    let m = Mat::<f64>::from_fn(n, n, |i, j| a[i][j]);
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Solver(format!("eigenvalue computation failed: {e:?}")))
}
