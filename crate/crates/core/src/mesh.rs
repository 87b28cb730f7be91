//! Nested structured triangulations of the unit square.
//!
//! Every level splits an `n × n` grid of square cells (`n = 2^level`) along
//! the NW–SE diagonal of each cell. Nodes are numbered row-major,
//! `node = j * (n + 1) + i` for the lattice point `(i/n, j/n)`. Elements are
//! numbered `2 * (j * n + i) + t` for cell `(i, j)`, where `t = 0` is the
//! lower-left triangle `[(i,j), (i+1,j), (i,j+1)]` and `t = 1` the upper-right
//! triangle `[(i+1,j+1), (i,j+1), (i+1,j)]`. Vertex lists always start at the
//! right-angle corner.
//!
//! All adjacency is computed from these formulas; nothing is stored per
//! element, so a hierarchy is cheap to build and immutable afterwards.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

pub const MAX_LEVEL: u32 = 12;

/// One side of the unit square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Left, Edge::Right, Edge::Bottom, Edge::Top];

    pub fn name(self) -> &'static str {
        match self {
            Edge::Left => "left",
            Edge::Right => "right",
            Edge::Bottom => "bottom",
            Edge::Top => "top",
        }
    }

    pub fn parse(s: &str) -> Option<Edge> {
        Edge::ALL.into_iter().find(|e| e.name() == s)
    }
}

/// Which sides of the square carry homogeneous Dirichlet conditions. The
/// remaining sides are homogeneous Neumann.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct BoundarySpec {
    dirichlet: [bool; 4],
}

impl BoundarySpec {
    pub fn full() -> Self {
        Self { dirichlet: [true; 4] }
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn from_edges(edges: &[Edge]) -> Self {
        let mut spec = Self::default();
        for &e in edges {
            spec.dirichlet[e as usize] = true;
        }
        spec
    }

    pub fn is_dirichlet(&self, edge: Edge) -> bool {
        self.dirichlet[edge as usize]
    }

    pub fn edges(&self) -> Vec<Edge> {
        Edge::ALL.into_iter().filter(|&e| self.is_dirichlet(e)).collect()
    }

    pub fn is_empty(&self) -> bool {
        !self.dirichlet.iter().any(|&d| d)
    }

    /// Whether lattice point `(i, j)` of an `n`-cell grid lies on Γ.
    pub fn constrains(&self, i: usize, j: usize, n: usize) -> bool {
        (i == 0 && self.is_dirichlet(Edge::Left))
            || (i == n && self.is_dirichlet(Edge::Right))
            || (j == 0 && self.is_dirichlet(Edge::Bottom))
            || (j == n && self.is_dirichlet(Edge::Top))
    }
}

/// One structured level of the hierarchy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    level: u32,
    n: usize,
}

/// Elements incident to a node; at most six on this mesh family.
#[derive(Clone, Copy, Debug)]
pub struct NodeStar {
    elems: [usize; 6],
    len: usize,
}

impl NodeStar {
    pub fn as_slice(&self) -> &[usize] {
        &self.elems[..self.len]
    }
}

impl Grid {
    pub fn new(level: u32) -> Self {
        Self { level, n: 1 << level }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn cells_per_side(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn node_count(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }

    pub fn element_count(&self) -> usize {
        2 * self.n * self.n
    }

    pub fn element_area(&self) -> f64 {
        0.5 * self.spacing() * self.spacing()
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.n && j <= self.n);
        j * (self.n + 1) + i
    }

    pub fn node_ij(&self, node: usize) -> (usize, usize) {
        (node % (self.n + 1), node / (self.n + 1))
    }

    pub fn node_coords(&self, node: usize) -> [f64; 2] {
        let (i, j) = self.node_ij(node);
        [i as f64 * self.spacing(), j as f64 * self.spacing()]
    }

    pub fn element_index(&self, i: usize, j: usize, t: usize) -> usize {
        2 * (j * self.n + i) + t
    }

    /// `(i, j, t)` of an element: its cell and which half of the cell it is.
    pub fn element_cell(&self, e: usize) -> (usize, usize, usize) {
        let c = e / 2;
        (c % self.n, c / self.n, e % 2)
    }

    pub fn element_vertex_ij(&self, e: usize) -> [(usize, usize); 3] {
        let (i, j, t) = self.element_cell(e);
        if t == 0 {
            [(i, j), (i + 1, j), (i, j + 1)]
        } else {
            [(i + 1, j + 1), (i, j + 1), (i + 1, j)]
        }
    }

    pub fn element_vertices(&self, e: usize) -> [usize; 3] {
        self.element_vertex_ij(e).map(|(i, j)| self.node_index(i, j))
    }

    /// Elements whose closure contains `node`, in increasing index order.
    pub fn node_elements(&self, node: usize) -> NodeStar {
        let (i, j) = self.node_ij(node);
        let n = self.n;
        let mut star = NodeStar { elems: [0; 6], len: 0 };
        let mut push = |ci: Option<usize>, cj: Option<usize>, t: usize| {
            if let (Some(ci), Some(cj)) = (ci, cj) {
                if ci < n && cj < n {
                    star.elems[star.len] = 2 * (cj * n + ci) + t;
                    star.len += 1;
                }
            }
        };
        let im = i.checked_sub(1);
        let jm = j.checked_sub(1);
        // Increasing element index: row j-1 first, then row j.
        push(im, jm, 1);
        push(Some(i), jm, 0);
        push(Some(i), jm, 1);
        push(im, Some(j), 0);
        push(im, Some(j), 1);
        push(Some(i), Some(j), 0);
        star
    }

    /// Edge neighbours of an element, `None` across the domain boundary.
    pub fn element_neighbors(&self, e: usize) -> [Option<usize>; 3] {
        let (i, j, t) = self.element_cell(e);
        let n = self.n;
        if t == 0 {
            [
                Some(self.element_index(i, j, 1)),
                j.checked_sub(1).map(|jm| self.element_index(i, jm, 1)),
                i.checked_sub(1).map(|im| self.element_index(im, j, 1)),
            ]
        } else {
            [
                Some(self.element_index(i, j, 0)),
                (j + 1 < n).then(|| self.element_index(i, j + 1, 0)),
                (i + 1 < n).then(|| self.element_index(i + 1, j, 0)),
            ]
        }
    }

    /// Barycenter in units of `spacing / 3`, exact.
    pub fn element_barycenter_thirds(&self, e: usize) -> (i64, i64) {
        let (i, j, t) = self.element_cell(e);
        let (i, j) = (3 * i as i64, 3 * j as i64);
        if t == 0 {
            (i + 1, j + 1)
        } else {
            (i + 2, j + 2)
        }
    }

    pub fn element_barycenter(&self, e: usize) -> [f64; 2] {
        let (x, y) = self.element_barycenter_thirds(e);
        let s = self.spacing() / 3.0;
        [x as f64 * s, y as f64 * s]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MeshLevel {
    Coarse,
    Fine,
}

/// A sorted, duplicate-free set of element indices on one level.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ElementSet {
    level: MeshLevel,
    elements: Vec<usize>,
}

impl ElementSet {
    pub fn new(level: MeshLevel, elements: impl IntoIterator<Item = usize>) -> Self {
        let mut elements: Vec<usize> = elements.into_iter().collect();
        elements.sort_unstable();
        elements.dedup();
        Self { level, elements }
    }

    pub fn empty(level: MeshLevel) -> Self {
        Self { level, elements: Vec::new() }
    }

    pub fn level(&self) -> MeshLevel {
        self.level
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.elements
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.elements.iter().copied()
    }

    pub fn contains(&self, e: usize) -> bool {
        self.elements.binary_search(&e).is_ok()
    }

    pub fn union(&self, other: &Self) -> Self {
        assert_eq!(self.level, other.level, "element sets live on different levels");
        Self::new(self.level, self.iter().chain(other.iter()))
    }

    pub fn intersection(&self, other: &Self) -> Self {
        assert_eq!(self.level, other.level, "element sets live on different levels");
        Self {
            level: self.level,
            elements: self.iter().filter(|&e| other.contains(e)).collect(),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.level == other.level && self.iter().all(|e| other.contains(e))
    }

    /// Membership mask over `count` elements.
    pub fn mask(&self, count: usize) -> Vec<bool> {
        let mut m = vec![false; count];
        for e in self.iter() {
            m[e] = true;
        }
        m
    }
}

/// Rational scaling factor `num / den` in `(0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ScaleFactor {
    num: u32,
    den: u32,
}

impl ScaleFactor {
    pub const ONE: ScaleFactor = ScaleFactor { num: 1, den: 1 };
    pub const QUARTER: ScaleFactor = ScaleFactor { num: 1, den: 4 };

    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 || num > den {
            return Err(Error::Parameter(format!(
                "scale factor {num}/{den} must lie in (0, 1]"
            )));
        }
        let g = gcd(num, den);
        Ok(Self { num: num / g, den: den / g })
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Number of fine cells covered by `self · H` for the given ratio `H/h`,
    /// if that is an integer.
    pub fn fine_multiple(&self, ratio: usize) -> Option<usize> {
        let scaled = self.num as usize * ratio;
        scaled.is_multiple_of(self.den as usize).then(|| scaled / self.den as usize)
    }
}

impl std::str::FromStr for ScaleFactor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parameter(format!("cannot parse scale factor '{s}'"));
        match s.split_once('/') {
            Some((a, b)) => {
                ScaleFactor::new(a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?)
            }
            None => ScaleFactor::new(s.trim().parse().map_err(|_| bad())?, 1),
        }
    }
}

impl std::fmt::Display for ScaleFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Coarse mesh `T_H` with `H = 2^-L`, fine mesh `T_h` with `h = 2^-ℓ`, and
/// the relations between them.
#[derive(Clone, Debug)]
pub struct MeshHierarchy {
    coarse: Grid,
    fine: Grid,
    ratio: usize,
    boundary: BoundarySpec,
    free_coarse: Vec<usize>,
    free_coarse_row: Vec<Option<usize>>,
    fine_constrained: Vec<bool>,
}

impl MeshHierarchy {
    pub fn build(coarse_level: u32, fine_level: u32, boundary: BoundarySpec) -> Result<Self> {
        if coarse_level < 1 || coarse_level >= fine_level || fine_level > MAX_LEVEL {
            return Err(Error::Parameter(format!(
                "levels must satisfy 1 <= coarse ({coarse_level}) < fine ({fine_level}) <= {MAX_LEVEL}"
            )));
        }
        let coarse = Grid::new(coarse_level);
        let fine = Grid::new(fine_level);
        let mut free_coarse = Vec::new();
        let mut free_coarse_row = vec![None; coarse.node_count()];
        for node in 0..coarse.node_count() {
            let (i, j) = coarse.node_ij(node);
            if !boundary.constrains(i, j, coarse.n) {
                free_coarse_row[node] = Some(free_coarse.len());
                free_coarse.push(node);
            }
        }
        let fine_constrained = (0..fine.node_count())
            .map(|node| {
                let (i, j) = fine.node_ij(node);
                boundary.constrains(i, j, fine.n)
            })
            .collect();
        Ok(Self {
            coarse,
            fine,
            ratio: 1 << (fine_level - coarse_level),
            boundary,
            free_coarse,
            free_coarse_row,
            fine_constrained,
        })
    }

    pub fn coarse(&self) -> &Grid {
        &self.coarse
    }

    pub fn fine(&self) -> &Grid {
        &self.fine
    }

    pub fn grid(&self, level: MeshLevel) -> &Grid {
        match level {
            MeshLevel::Coarse => &self.coarse,
            MeshLevel::Fine => &self.fine,
        }
    }

    /// `H / h`
    pub fn ratio(&self) -> usize {
        self.ratio
    }

    pub fn coarse_h(&self) -> f64 {
        self.coarse.spacing()
    }

    pub fn fine_h(&self) -> f64 {
        self.fine.spacing()
    }

    pub fn boundary(&self) -> &BoundarySpec {
        &self.boundary
    }

    /// Free coarse nodes `N_H^free` in increasing order.
    pub fn free_coarse_nodes(&self) -> &[usize] {
        &self.free_coarse
    }

    /// Position of a coarse node in [`free_coarse_nodes`](Self::free_coarse_nodes).
    pub fn free_coarse_row(&self, node: usize) -> Option<usize> {
        self.free_coarse_row[node]
    }

    pub fn is_fine_constrained(&self, node: usize) -> bool {
        self.fine_constrained[node]
    }

    pub fn fine_constrained_nodes(&self) -> Vec<usize> {
        (0..self.fine.node_count()).filter(|&n| self.fine_constrained[n]).collect()
    }

    pub fn coarse_node_to_fine(&self, node: usize) -> usize {
        let (i, j) = self.coarse.node_ij(node);
        self.fine.node_index(i * self.ratio, j * self.ratio)
    }

    /// Coarse element containing a fine element.
    pub fn parent(&self, fine_element: usize) -> usize {
        let (fi, fj, ft) = self.fine.element_cell(fine_element);
        let r = self.ratio;
        let (ci, cj) = (fi / r, fj / r);
        let s = fi % r + fj % r;
        let t = match s.cmp(&(r - 1)) {
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Equal => ft,
        };
        self.coarse.element_index(ci, cj, t)
    }

    /// Fine elements inside a coarse element, in increasing order.
    pub fn children(&self, coarse_element: usize) -> Vec<usize> {
        let (ci, cj, ct) = self.coarse.element_cell(coarse_element);
        let r = self.ratio;
        let mut out = Vec::with_capacity(r * r);
        for b in 0..r {
            for a in 0..r {
                let (fi, fj) = (ci * r + a, cj * r + b);
                let s = a + b;
                for t in 0..2 {
                    let inside = match ct {
                        0 => s < r - 1 || (s == r - 1 && t == 0),
                        _ => s > r - 1 || (s == r - 1 && t == 1),
                    };
                    if inside {
                        out.push(self.fine.element_index(fi, fj, t));
                    }
                }
            }
        }
        out
    }

    /// All fine elements inside a set of coarse elements.
    pub fn fine_elements_of(&self, coarse: &ElementSet) -> ElementSet {
        assert_eq!(coarse.level(), MeshLevel::Coarse);
        ElementSet::new(MeshLevel::Fine, coarse.iter().flat_map(|t| self.children(t)))
    }

    /// Values of the three hats of `parent(K)` at the three vertices of the
    /// fine element `K`: `values[a][c] = φ_{vertex c of T}(vertex a of K)`.
    /// Exact, since `H/h` is a power of two.
    pub fn coarse_hat_values(&self, fine_element: usize) -> (usize, [[f64; 3]; 3]) {
        let t_elem = self.parent(fine_element);
        let (ci, cj, ct) = self.coarse.element_cell(t_elem);
        let r = self.ratio as f64;
        let (oi, oj) = (ci * self.ratio, cj * self.ratio);
        let mut values = [[0.0; 3]; 3];
        for (a, (fi, fj)) in self.fine.element_vertex_ij(fine_element).into_iter().enumerate() {
            let x = (fi - oi) as f64 / r;
            let y = (fj - oj) as f64 / r;
            values[a] = if ct == 0 {
                [1.0 - x - y, x, y]
            } else {
                [x + y - 1.0, 1.0 - x, 1.0 - y]
            };
        }
        (t_elem, values)
    }

    /// `U_k(ω)` for a coarse seed: `k` layers of vertex-touching elements.
    pub fn element_patch(&self, seed: &ElementSet, k: usize) -> Result<ElementSet> {
        if seed.level() != MeshLevel::Coarse {
            return Err(Error::Parameter("element patches are built on the coarse level".into()));
        }
        if seed.is_empty() {
            return Err(Error::Parameter("element patch seed is empty".into()));
        }
        if let Some(&bad) = seed.as_slice().last().filter(|&&e| e >= self.coarse.element_count()) {
            return Err(Error::Parameter(format!("coarse element {bad} out of range")));
        }
        let mut inside = seed.mask(self.coarse.element_count());
        let mut current: Vec<usize> = seed.as_slice().to_vec();
        let mut node_seen = vec![false; self.coarse.node_count()];
        for _ in 0..k {
            if current.len() == self.coarse.element_count() {
                break;
            }
            let mut next = current.clone();
            for &e in &current {
                for v in self.coarse.element_vertices(e) {
                    if std::mem::replace(&mut node_seen[v], true) {
                        continue;
                    }
                    for &t in self.coarse.node_elements(v).as_slice() {
                        if !inside[t] {
                            inside[t] = true;
                            next.push(t);
                        }
                    }
                }
            }
            current = next;
        }
        Ok(ElementSet::new(MeshLevel::Coarse, current))
    }

    /// `U(z)`: coarse elements whose closure contains the coarse node `z`.
    pub fn node_patch(&self, z: usize) -> ElementSet {
        ElementSet::new(MeshLevel::Coarse, self.coarse.node_elements(z).as_slice().iter().copied())
    }

    /// `U_k(z)` for `k >= 1`.
    pub fn node_patch_layers(&self, z: usize, k: usize) -> Result<ElementSet> {
        if k == 0 {
            return Err(Error::Parameter("node patches need at least one layer".into()));
        }
        self.element_patch(&self.node_patch(z), k - 1)
    }

    /// `Σ_δ(z)`: fine elements inside the δ-scaling of `U(z)` about `z`.
    /// Membership is decided in integer lattice arithmetic.
    pub fn scaled_node_patch(&self, z: usize, delta: ScaleFactor) -> Result<ElementSet> {
        let m = delta
            .fine_multiple(self.ratio)
            .filter(|&m| m >= 1)
            .ok_or_else(|| {
                Error::Parameter(format!(
                    "scale factor {delta} is not a multiple of h/H = 1/{}",
                    self.ratio
                ))
            })?;
        let (zi, zj) = self.coarse.node_ij(z);
        let zf = ((zi * self.ratio) as i64, (zj * self.ratio) as i64);
        let m = m as i64;
        // Each coarse triangle of U(z), scaled about z, has integer fine
        // lattice vertices z + m * (v - z).
        let triangles: Vec<[(i64, i64); 3]> = self
            .node_patch(z)
            .iter()
            .map(|t| {
                self.coarse.element_vertex_ij(t).map(|(vi, vj)| {
                    (zf.0 + m * (vi as i64 - zi as i64), zf.1 + m * (vj as i64 - zj as i64))
                })
            })
            .collect();
        let fine_patch = self.fine_elements_of(&self.node_patch(z));
        let selected = fine_patch.iter().filter(|&k| {
            let verts = self.fine.element_vertex_ij(k).map(|(i, j)| (i as i64, j as i64));
            triangles
                .iter()
                .any(|tri| verts.iter().all(|&p| point_in_triangle(p, tri)))
        });
        Ok(ElementSet::new(MeshLevel::Fine, selected))
    }

    /// Coarse-to-fine embedding: column `c` holds the fine nodal values of the
    /// coarse hat `φ_c`.
    pub fn prolongation(&self) -> SparseMatrix {
        let r = self.ratio;
        let nc = self.coarse.n;
        let mut t = Vec::with_capacity(self.fine.node_count() * 3);
        for node in 0..self.fine.node_count() {
            let (fi, fj) = self.fine.node_ij(node);
            let (ci, cj) = ((fi / r).min(nc - 1), (fj / r).min(nc - 1));
            let (a, b) = (fi - ci * r, fj - cj * r);
            let rf = r as f64;
            let (x, y) = (a as f64 / rf, b as f64 / rf);
            let entries = if a + b <= r {
                [((ci, cj), 1.0 - x - y), ((ci + 1, cj), x), ((ci, cj + 1), y)]
            } else {
                [((ci + 1, cj + 1), x + y - 1.0), ((ci, cj + 1), 1.0 - x), ((ci + 1, cj), 1.0 - y)]
            };
            for ((i, j), w) in entries {
                if w != 0.0 {
                    t.push((node, self.coarse.node_index(i, j), w));
                }
            }
        }
        SparseMatrix::from_triplets(self.fine.node_count(), self.coarse.node_count(), t, false)
    }

    /// Smallest `k` with `U_k(T) = Ω` for every coarse element.
    pub fn saturation_layers(&self) -> usize {
        2 * self.coarse.n
    }
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn point_in_triangle(p: (i64, i64), tri: &[(i64, i64); 3]) -> bool {
    let d1 = cross(tri[0], tri[1], p);
    let d2 = cross(tri[1], tri[2], p);
    let d3 = cross(tri[2], tri[0], p);
    let has_neg = d1 < 0 || d2 < 0 || d3 < 0;
    let has_pos = d1 > 0 || d2 > 0 || d3 > 0;
    !(has_neg && has_pos)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh(l: u32, f: u32) -> MeshHierarchy {
        MeshHierarchy::build(l, f, BoundarySpec::full()).unwrap()
    }

    #[test]
    fn counts_for_smallest_hierarchy() {
        let m = mesh(1, 2);
        assert_eq!(m.coarse().element_count(), 8);
        assert_eq!(m.coarse().node_count(), 9);
        assert_eq!(m.fine().element_count(), 32);
        assert_eq!(m.fine().node_count(), 25);
    }

    #[test]
    fn paper_geometry_counts() {
        let m = mesh(4, 10);
        assert_eq!(m.coarse().element_count(), 512);
        assert_eq!(m.fine().element_count(), 2_097_152);
    }

    #[test]
    fn level_ordering_is_validated() {
        assert!(matches!(
            MeshHierarchy::build(3, 2, BoundarySpec::full()),
            Err(Error::Parameter(_))
        ));
        assert!(MeshHierarchy::build(0, 2, BoundarySpec::full()).is_err());
        assert!(MeshHierarchy::build(2, 13, BoundarySpec::full()).is_err());
    }

    #[test]
    fn node_star_sizes() {
        let m = mesh(4, 5);
        let g = m.coarse();
        assert_eq!(g.node_elements(g.node_index(5, 7)).as_slice().len(), 6);
        assert_eq!(g.node_elements(g.node_index(0, 0)).as_slice().len(), 1);
        assert_eq!(g.node_elements(g.node_index(16, 16)).as_slice().len(), 1);
        assert_eq!(g.node_elements(g.node_index(16, 0)).as_slice().len(), 2);
        assert_eq!(g.node_elements(g.node_index(0, 16)).as_slice().len(), 2);
        assert_eq!(g.node_elements(g.node_index(0, 5)).as_slice().len(), 3);
        assert_eq!(g.node_elements(g.node_index(9, 16)).as_slice().len(), 3);
    }

    #[test]
    fn node_star_matches_vertex_scan() {
        let g = Grid::new(3);
        for node in 0..g.node_count() {
            let scan: Vec<usize> = (0..g.element_count())
                .filter(|&e| g.element_vertices(e).contains(&node))
                .collect();
            assert_eq!(g.node_elements(node).as_slice(), scan.as_slice());
        }
    }

    #[test]
    fn neighbors_share_an_edge() {
        let g = Grid::new(3);
        for e in 0..g.element_count() {
            let mine = g.element_vertices(e);
            for nb in g.element_neighbors(e).into_iter().flatten() {
                let shared = g.element_vertices(nb).iter().filter(|v| mine.contains(v)).count();
                assert_eq!(shared, 2);
                assert!(g.element_neighbors(nb).contains(&Some(e)));
            }
            let boundary_edges = g.element_neighbors(e).iter().filter(|n| n.is_none()).count();
            let edges_on_boundary = (0..3)
                .filter(|&a| {
                    let (p, q) = (g.element_vertex_ij(e)[a], g.element_vertex_ij(e)[(a + 1) % 3]);
                    let n = g.cells_per_side();
                    (p.0 == q.0 && (p.0 == 0 || p.0 == n)) || (p.1 == q.1 && (p.1 == 0 || p.1 == n))
                })
                .count();
            assert_eq!(boundary_edges, edges_on_boundary);
        }
    }

    #[test]
    fn children_tile_their_parent() {
        let m = mesh(2, 5);
        let mut seen = vec![0usize; m.fine().element_count()];
        for t in 0..m.coarse().element_count() {
            let kids = m.children(t);
            assert_eq!(kids.len(), m.ratio() * m.ratio());
            let area: f64 = kids.len() as f64 * m.fine().element_area();
            assert_eq!(area, m.coarse().element_area());
            for k in kids {
                assert_eq!(m.parent(k), t);
                seen[k] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn coarse_nodes_are_fine_nodes() {
        let m = mesh(2, 4);
        for z in 0..m.coarse().node_count() {
            assert_eq!(m.coarse().node_coords(z), m.fine().node_coords(m.coarse_node_to_fine(z)));
        }
    }

    #[test]
    fn one_layer_patch_of_interior_element() {
        let m = mesh(4, 5);
        let g = m.coarse();
        let t = g.element_index(7, 7, 0);
        let seed = ElementSet::new(MeshLevel::Coarse, [t]);
        let patch = m.element_patch(&seed, 1).unwrap();
        // Brute force: every element sharing a vertex with T.
        let verts = g.element_vertices(t);
        let brute: Vec<usize> = (0..g.element_count())
            .filter(|&e| g.element_vertices(e).iter().any(|v| verts.contains(v)))
            .collect();
        assert_eq!(patch.as_slice(), brute.as_slice());
        assert_eq!(patch.len(), 13);
        assert_eq!(m.element_patch(&seed, 0).unwrap(), seed);
    }

    #[test]
    fn patches_saturate() {
        let m = mesh(2, 3);
        let seed = ElementSet::new(MeshLevel::Coarse, [0]);
        let all = m.element_patch(&seed, m.saturation_layers()).unwrap();
        assert_eq!(all.len(), m.coarse().element_count());
        assert!(m.element_patch(&ElementSet::empty(MeshLevel::Coarse), 1).is_err());
    }

    #[test]
    fn scaled_patch_identity_and_errors() {
        let m = mesh(2, 5);
        let z = m.coarse().node_index(2, 2);
        let full = m.scaled_node_patch(z, ScaleFactor::ONE).unwrap();
        assert_eq!(full, m.fine_elements_of(&m.node_patch(z)));
        let m6 = mesh(1, 7);
        assert!(m6.scaled_node_patch(4, ScaleFactor::new(1, 3).unwrap()).is_err());
    }

    #[test]
    fn scale_factor_parsing() {
        assert_eq!("1/4".parse::<ScaleFactor>().unwrap(), ScaleFactor::QUARTER);
        assert_eq!("2/8".parse::<ScaleFactor>().unwrap(), ScaleFactor::QUARTER);
        assert_eq!("1".parse::<ScaleFactor>().unwrap(), ScaleFactor::ONE);
        assert!("5/4".parse::<ScaleFactor>().is_err());
        assert!("x".parse::<ScaleFactor>().is_err());
    }

    #[test]
    fn prolongation_center_hat() {
        let m = mesh(1, 2);
        let p = m.prolongation();
        let center = m.coarse().node_index(1, 1);
        let f = m.fine();
        let mut expected = vec![0.0; f.node_count()];
        expected[f.node_index(2, 2)] = 1.0;
        for (i, j) in [(1, 2), (3, 2), (2, 1), (2, 3), (1, 3), (3, 1)] {
            expected[f.node_index(i, j)] = 0.5;
        }
        let mut e = vec![0.0; m.coarse().node_count()];
        e[center] = 1.0;
        assert_eq!(p.mul_vec(&e), expected);
        let ones = p.mul_vec(&vec![1.0; m.coarse().node_count()]);
        assert!(ones.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn boundary_classification() {
        let m = MeshHierarchy::build(2, 3, BoundarySpec::from_edges(&[Edge::Top])).unwrap();
        // 5x5 coarse nodes, top row constrained.
        assert_eq!(m.free_coarse_nodes().len(), 20);
        assert!(m.is_fine_constrained(m.fine().node_index(3, 8)));
        assert!(!m.is_fine_constrained(m.fine().node_index(0, 3)));
        let none = MeshHierarchy::build(2, 3, BoundarySpec::none()).unwrap();
        assert_eq!(none.free_coarse_nodes().len(), 25);
    }
}
