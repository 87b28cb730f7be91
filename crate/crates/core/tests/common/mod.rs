//! Small dense oracles shared by the integration tests. Deliberately naive:
//! none of them touches the library's solvers.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use lod_core::{Coefficient, ElementSet, MeshHierarchy};

/// Gaussian elimination with partial pivoting; returns `(LU rows, perm, sign)`.
fn lu(mut a: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, Vec<usize>, f64) {
    let n = a.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        if pivot != col {
            a.swap(pivot, col);
            perm.swap(pivot, col);
            sign = -sign;
        }
        let p = a[col][col];
        if p == 0.0 {
            continue;
        }
        for r in col + 1..n {
            let f = a[r][col] / p;
            a[r][col] = f;
            for c in col + 1..n {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    (a, perm, sign)
}

pub fn det(a: &[Vec<f64>]) -> f64 {
    let (lu, _, sign) = lu(a.to_vec());
    (0..lu.len()).map(|i| lu[i][i]).product::<f64>() * sign
}

pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let (lu, perm, _) = lu(a.to_vec());
    let mut y: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        for j in 0..i {
            y[i] -= lu[i][j] * y[j];
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            y[i] -= lu[i][j] * y[j];
        }
        y[i] /= lu[i][i];
    }
    y
}

/// Solves the full KKT matrix `[[K, Cᵀ], [C, 0]]` densely.
pub fn kkt_oracle(k: &[Vec<f64>], c: &[Vec<f64>], b: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = k.len();
    let m = c.len();
    let mut a = vec![vec![0.0; n + m]; n + m];
    for i in 0..n {
        a[i][..n].copy_from_slice(&k[i]);
    }
    for (r, row) in c.iter().enumerate() {
        for j in 0..n {
            a[n + r][j] = row[j];
            a[j][n + r] = row[j];
        }
    }
    let rhs: Vec<f64> = b.iter().chain(g).copied().collect();
    let x = dense_solve(&a, &rhs);
    (x[..n].to_vec(), x[n..].to_vec())
}

pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Exhaustive depth-first search per element: is there a path inside
/// `region`, stepping across shared edges to elements of equal or larger
/// coefficient, that ends at an element touching fine node `zf`?
pub fn monotone_path_exists(mesh: &MeshHierarchy, coef: &Coefficient, region: &ElementSet, zf: usize) -> bool {
    let grid = mesh.fine();
    let members: HashSet<usize> = region.iter().collect();
    // Elements sharing an edge, found from vertex pairs rather than index arithmetic.
    let mut by_edge: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for &e in &members {
        let v = grid.element_vertices(e);
        for (a, b) in [(v[0], v[1]), (v[1], v[2]), (v[0], v[2])] {
            by_edge.entry((a.min(b), a.max(b))).or_default().push(e);
        }
    }
    let neighbors = |e: usize| {
        let v = grid.element_vertices(e);
        [(v[0], v[1]), (v[1], v[2]), (v[0], v[2])]
            .into_iter()
            .flat_map(|(a, b)| by_edge[&(a.min(b), a.max(b))].clone())
            .filter(move |&f| f != e)
            .collect::<Vec<_>>()
    };
    region.iter().all(|start| {
        let mut seen = HashSet::from([start]);
        let mut stack = vec![start];
        while let Some(e) = stack.pop() {
            if grid.element_vertices(e).contains(&zf) {
                return true;
            }
            for nb in neighbors(e) {
                if coef.value(nb) >= coef.value(e) && seen.insert(nb) {
                    stack.push(nb);
                }
            }
        }
        false
    })
}

/// `∫ u v` over `elements` for P1 nodal vectors, from the textbook element
/// mass matrix `|T|/12 (1 + δ_ab)`.
pub fn l2_product(mesh: &MeshHierarchy, elements: impl Iterator<Item = usize>, u: &[f64], v: &[f64]) -> f64 {
    let grid = mesh.fine();
    let area = grid.element_area();
    let mut s = 0.0;
    for e in elements {
        let nodes = grid.element_vertices(e);
        for a in 0..3 {
            for b in 0..3 {
                let m = if a == b { area / 6.0 } else { area / 12.0 };
                s += u[nodes[a]] * m * v[nodes[b]];
            }
        }
    }
    s
}

/// Fine nodal values of the coarse hat of `z`, by direct evaluation.
pub fn coarse_hat(mesh: &MeshHierarchy, z: usize) -> Vec<f64> {
    let (zi, zj) = mesh.coarse().node_ij(z);
    let (zx, zy) = (zi as f64 * mesh.coarse_h(), zj as f64 * mesh.coarse_h());
    let fine = mesh.fine();
    (0..fine.node_count())
        .map(|n| {
            let [x, y] = fine.node_coords(n);
            // Hat of the NW-SE diagonal mesh in local coordinates.
            let (dx, dy) = ((x - zx) / mesh.coarse_h(), (y - zy) / mesh.coarse_h());
            let v = if dx * dy >= 0.0 {
                1.0 - (dx.abs() + dy.abs())
            } else {
                1.0 - dx.abs().max(dy.abs())
            };
            v.max(0.0)
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}
