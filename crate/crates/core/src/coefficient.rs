//! Two-valued coefficients on the fine mesh and their generators.
//!
//! A coefficient stores one flag per fine element: `true` means the element
//! belongs to the high-conductivity set (value 1), `false` to the background
//! (value `alpha`).

use std::collections::VecDeque;
use std::io::{BufRead, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::{Grid, MeshHierarchy};
use crate::rng::{SplitMix64, UniformSource};

/// Stripe centre lines `y = j / STRIPE_SPACING_DENOM` for `j = 1..STRIPE_SPACING_DENOM`.
const STRIPE_SPACING_DENOM: usize = 16;
/// Nominal stripe half width is `1 / STRIPE_HALF_WIDTH_DENOM`.
const STRIPE_HALF_WIDTH_DENOM: usize = 256;
/// Finest level on which two neighbouring stripes are still separated.
pub const STRIPES_MIN_FINE_LEVEL: u32 = 6;

/// Ball centres sit on the nodes of a `BALL_LATTICE × BALL_LATTICE` grid.
const BALL_LATTICE: usize = 16;
const BALL_KEEP_PROBABILITY: f64 = 0.5;
const BALL_RADIUS_MIN: f64 = 1.0 / 128.0;
const BALL_RADIUS_MAX: f64 = 8.0 / 128.0;

pub const DEFAULT_SMOOTHING_PASSES: usize = 6;
pub const DEFAULT_ONE_FRACTION: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub enum CoefficientKind {
    Stripes,
    Balls { seed: u64 },
    Field { seed: u64, smoothing_passes: usize, one_fraction: f64 },
    Image,
    Custom,
}

impl CoefficientKind {
    pub fn name(&self) -> &'static str {
        match self {
            CoefficientKind::Stripes => "stripes",
            CoefficientKind::Balls { .. } => "balls",
            CoefficientKind::Field { .. } => "field",
            CoefficientKind::Image => "pgm",
            CoefficientKind::Custom => "custom",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            CoefficientKind::Balls { seed } | CoefficientKind::Field { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coefficient {
    alpha: f64,
    fine_level: u32,
    is_one: Vec<bool>,
    kind: CoefficientKind,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("alpha = {alpha} must lie in (0, 1]")))
    }
}

impl Coefficient {
    /// Wraps an explicit flag vector over the fine elements of `grid`.
    pub fn from_flags(grid: &Grid, alpha: f64, is_one: Vec<bool>) -> Result<Self> {
        check_alpha(alpha)?;
        if is_one.len() != grid.element_count() {
            return Err(Error::Dimension(format!(
                "{} flags for {} fine elements",
                is_one.len(),
                grid.element_count()
            )));
        }
        Ok(Self { alpha, fine_level: grid.level(), is_one, kind: CoefficientKind::Custom })
    }

    pub fn constant_one(grid: &Grid) -> Self {
        Self::from_flags(grid, 1.0, vec![true; grid.element_count()]).unwrap()
    }

    pub fn constant_alpha(grid: &Grid, alpha: f64) -> Result<Self> {
        Self::from_flags(grid, alpha, vec![false; grid.element_count()])
    }

    /// Horizontal stripes centred on the lines `y = j/16`, `j = 1..15`.
    ///
    /// Elements are flagged when their barycenter is within the half width
    /// `max(1/256, h)` of a centre line. The test is carried out in integer
    /// units of `h/3`, so it is exact.
    pub fn stripes(mesh: &MeshHierarchy, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let grid = mesh.fine();
        if grid.level() < STRIPES_MIN_FINE_LEVEL {
            return Err(Error::Parameter(format!(
                "stripes need fine level >= {STRIPES_MIN_FINE_LEVEL}, got {}",
                grid.level()
            )));
        }
        let n = grid.cells_per_side();
        let half_cells = (n / STRIPE_HALF_WIDTH_DENOM).max(1) as i64;
        let spacing_cells = (n / STRIPE_SPACING_DENOM) as i64;
        let is_one = (0..grid.element_count())
            .map(|e| {
                let (_, y) = grid.element_barycenter_thirds(e);
                let nearest = ((y + 3 * spacing_cells / 2) / (3 * spacing_cells))
                    .clamp(1, STRIPE_SPACING_DENOM as i64 - 1);
                (y - 3 * spacing_cells * nearest).abs() <= 3 * half_cells
            })
            .collect();
        Ok(Self { alpha, fine_level: grid.level(), is_one, kind: CoefficientKind::Stripes })
    }

    pub fn random_balls(mesh: &MeshHierarchy, alpha: f64, seed: u64) -> Result<Self> {
        let mut rng = SplitMix64::new(seed);
        let mut c = Self::random_balls_with(mesh, alpha, &mut rng)?;
        c.kind = CoefficientKind::Balls { seed };
        Ok(c)
    }

    /// Ball inclusions on the `1/16` lattice drawing from an arbitrary source.
    ///
    /// Every lattice node consumes exactly two samples, in lexicographic order
    /// (rows bottom to top): the first decides whether the ball is kept, the
    /// second its radius.
    pub fn random_balls_with(
        mesh: &MeshHierarchy,
        alpha: f64,
        rng: &mut dyn UniformSource,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        let grid = mesh.fine();
        let mut balls = Vec::new();
        for j in 0..=BALL_LATTICE {
            for i in 0..=BALL_LATTICE {
                let keep = rng.next_uniform() < BALL_KEEP_PROBABILITY;
                let radius = BALL_RADIUS_MIN + rng.next_uniform() * (BALL_RADIUS_MAX - BALL_RADIUS_MIN);
                if keep {
                    let s = 1.0 / BALL_LATTICE as f64;
                    balls.push(([i as f64 * s, j as f64 * s], radius));
                }
            }
        }
        let mut is_one = vec![false; grid.element_count()];
        let n = grid.cells_per_side();
        let h = grid.spacing();
        for ([cx, cy], r) in balls {
            let lo = |c: f64| (((c - r) / h).floor().max(0.0)) as usize;
            let hi = |c: f64| ((((c + r) / h).ceil()) as usize).min(n);
            for cj in lo(cy)..hi(cy) {
                for ci in lo(cx)..hi(cx) {
                    for t in 0..2 {
                        let e = grid.element_index(ci, cj, t);
                        let [x, y] = grid.element_barycenter(e);
                        if (x - cx).powi(2) + (y - cy).powi(2) <= r * r {
                            is_one[e] = true;
                        }
                    }
                }
            }
        }
        Ok(Self { alpha, fine_level: grid.level(), is_one, kind: CoefficientKind::Custom })
    }

    /// Spatially correlated random field thresholded to two values.
    ///
    /// Uniform noise per fine square cell is smoothed `smoothing_passes` times
    /// with the 5-point average (a missing neighbour at the boundary is
    /// replaced by the cell itself), and the `round(one_fraction · cells)`
    /// largest cells become the unit set, ties broken by cell index.
    pub fn random_field(
        mesh: &MeshHierarchy,
        alpha: f64,
        seed: u64,
        smoothing_passes: usize,
        one_fraction: f64,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        if !(0.0..=1.0).contains(&one_fraction) {
            return Err(Error::Parameter(format!("one_fraction = {one_fraction} must lie in [0, 1]")));
        }
        let grid = mesh.fine();
        let n = grid.cells_per_side();
        let mut rng = SplitMix64::new(seed);
        let mut field: Vec<f64> = (0..n * n).map(|_| rng.next_uniform()).collect();
        let mut next = vec![0.0; n * n];
        for _ in 0..smoothing_passes {
            for j in 0..n {
                for i in 0..n {
                    let at = |ii: usize, jj: usize| field[jj * n + ii];
                    let c = at(i, j);
                    let left = if i > 0 { at(i - 1, j) } else { c };
                    let right = if i + 1 < n { at(i + 1, j) } else { c };
                    let down = if j > 0 { at(i, j - 1) } else { c };
                    let up = if j + 1 < n { at(i, j + 1) } else { c };
                    next[j * n + i] = (c + left + right + down + up) / 5.0;
                }
            }
            std::mem::swap(&mut field, &mut next);
        }
        let count = (one_fraction * (n * n) as f64).round() as usize;
        let mut order: Vec<usize> = (0..n * n).collect();
        order.sort_by(|&a, &b| field[b].total_cmp(&field[a]).then(a.cmp(&b)));
        let mut cell_one = vec![false; n * n];
        for &c in &order[..count] {
            cell_one[c] = true;
        }
        let is_one = (0..grid.element_count()).map(|e| cell_one[e / 2]).collect();
        Ok(Self {
            alpha,
            fine_level: grid.level(),
            is_one,
            kind: CoefficientKind::Field { seed, smoothing_passes, one_fraction },
        })
    }

    /// Same geometry with a different contrast.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { alpha, ..self.clone() })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn contrast(&self) -> f64 {
        1.0 / self.alpha
    }

    pub fn kind(&self) -> &CoefficientKind {
        &self.kind
    }

    pub fn fine_level(&self) -> u32 {
        self.fine_level
    }

    pub fn element_count(&self) -> usize {
        self.is_one.len()
    }

    pub fn is_one(&self, e: usize) -> bool {
        self.is_one[e]
    }

    pub fn flags(&self) -> &[bool] {
        &self.is_one
    }

    pub fn value(&self, e: usize) -> f64 {
        if self.is_one[e] {
            1.0
        } else {
            self.alpha
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.is_one.len()).map(|e| self.value(e)).collect()
    }

    /// Fraction of fine elements (equivalently of area) flagged as unit.
    pub fn one_fraction(&self) -> f64 {
        self.is_one.iter().filter(|&&f| f).count() as f64 / self.is_one.len() as f64
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if grid.level() != self.fine_level || grid.element_count() != self.is_one.len() {
            return Err(Error::Dimension(format!(
                "coefficient built for fine level {}, mesh has level {}",
                self.fine_level,
                grid.level()
            )));
        }
        Ok(())
    }

    /// Edge-connected components of the elements whose flag equals `flag`.
    pub fn connected_components(&self, grid: &Grid, flag: bool) -> ComponentLabeling {
        let mut labels = vec![None; self.is_one.len()];
        let mut components = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..self.is_one.len() {
            if self.is_one[start] != flag || labels[start].is_some() {
                continue;
            }
            let label = components.len();
            let mut members = vec![start];
            labels[start] = Some(label);
            queue.push_back(start);
            while let Some(e) = queue.pop_front() {
                for nb in grid.element_neighbors(e).into_iter().flatten() {
                    if self.is_one[nb] == flag && labels[nb].is_none() {
                        labels[nb] = Some(label);
                        members.push(nb);
                        queue.push_back(nb);
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        ComponentLabeling { labels, components }
    }

    /// Writes a binary PGM with one pixel per fine square cell, top row first.
    /// A cell is black (unit set) when either of its triangles is flagged.
    pub fn save_pgm(&self, grid: &Grid, path: impl AsRef<Path>) -> Result<()> {
        self.check_grid(grid)?;
        let n = grid.cells_per_side();
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(out, "P5\n{n} {n}\n255\n")?;
        let mut row = vec![0u8; n];
        for r in 0..n {
            let j = n - 1 - r;
            for (i, px) in row.iter_mut().enumerate() {
                let one = self.is_one[grid.element_index(i, j, 0)] || self.is_one[grid.element_index(i, j, 1)];
                *px = if one { 0 } else { 255 };
            }
            out.write_all(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a PGM written by [`save_pgm`](Self::save_pgm) (or any P5 image
    /// of matching size). Pixels darker than mid-grey are the unit set.
    pub fn load_pgm(grid: &Grid, path: impl AsRef<Path>, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let file = std::fs::File::open(path)?;
        let mut reader = std::io::BufReader::new(file);
        let (width, height, maxval) = read_pgm_header(&mut reader)?;
        let n = grid.cells_per_side();
        if width != n || height != n {
            return Err(Error::Dimension(format!(
                "image is {width}x{height}, fine grid has {n}x{n} cells"
            )));
        }
        if maxval == 0 || maxval > 255 {
            return Err(Error::Format(format!("unsupported maxval {maxval}")));
        }
        let mut pixels = vec![0u8; n * n];
        reader
            .read_exact(&mut pixels)
            .map_err(|_| Error::Format("pixel data truncated".into()))?;
        let mut is_one = vec![false; grid.element_count()];
        for r in 0..n {
            let j = n - 1 - r;
            for i in 0..n {
                let one = (pixels[r * n + i] as usize) * 2 < maxval;
                is_one[grid.element_index(i, j, 0)] = one;
                is_one[grid.element_index(i, j, 1)] = one;
            }
        }
        Ok(Self { alpha, fine_level: grid.level(), is_one, kind: CoefficientKind::Image })
    }
}

fn read_pgm_header(reader: &mut impl BufRead) -> Result<(usize, usize, usize)> {
    let mut tokens = Vec::new();
    let mut byte = [0u8; 1];
    let mut current = String::new();
    let mut in_comment = false;
    while tokens.len() < 4 {
        if reader.read(&mut byte)? == 0 {
            return Err(Error::Format("truncated PGM header".into()));
        }
        let c = byte[0] as char;
        if in_comment {
            in_comment = c != '\n';
            continue;
        }
        if c == '#' {
            in_comment = true;
        } else if c.is_ascii_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else {
            current.push(c);
        }
    }
    if tokens[0] != "P5" {
        return Err(Error::Format(format!("expected P5 magic, found '{}'", tokens[0])));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad header field '{s}'")));
    Ok((num(&tokens[1])?, num(&tokens[2])?, num(&tokens[3])?))
}

/// Edge-connected components of one flag value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentLabeling {
    labels: Vec<Option<usize>>,
    components: Vec<Vec<usize>>,
}

impl ComponentLabeling {
    pub fn label(&self, e: usize) -> Option<usize> {
        self.labels[e]
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn count(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, label: usize) -> &[usize] {
        &self.components[label]
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }
}
