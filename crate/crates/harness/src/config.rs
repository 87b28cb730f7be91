//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lod_core::coefficient::{DEFAULT_ONE_FRACTION, DEFAULT_SMOOTHING_PASSES};
use lod_core::mesh::MAX_LEVEL;
use lod_core::{BoundarySpec, Coefficient, Edge, MeshHierarchy, OperatorKind, OperatorParams, ScaleFactor, Source};

use crate::error::{HarnessError, Result};

const KEYS: &[&str] = &[
    "coarse_level",
    "fine_level",
    "coefficient",
    "seed",
    "smoothing_passes",
    "one_fraction",
    "coefficient_image",
    "dirichlet",
    "rhs",
    "operators",
    "ks",
    "alphas",
    "rhs_correction",
    "output_csv",
    "plot_dir",
    "cache_dir",
    "record_wall_time",
    "ih_delta",
    "ih1_delta",
];

#[derive(Clone, Debug, PartialEq)]
pub enum CoefficientSpec {
    /// `A ≡ 1`, whatever the alpha.
    Uniform,
    Stripes,
    Balls,
    Field { smoothing_passes: usize, one_fraction: f64 },
    Image(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub coarse_level: u32,
    pub fine_level: u32,
    pub coefficient: CoefficientSpec,
    pub seed: u64,
    pub boundary: BoundarySpec,
    pub rhs: Source,
    pub operators: Vec<OperatorKind>,
    pub ks: Vec<usize>,
    pub alphas: Vec<f64>,
    pub rhs_correction: bool,
    pub params: OperatorParams,
    pub output_csv: Option<PathBuf>,
    pub plot_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub record_wall_time: bool,
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| invalid(format!("{key}: cannot parse '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(invalid(format!("{key}: expected true or false, got '{other}'"))),
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

/// `1,2,3` or `1..6` (inclusive) or a mix of both.
fn parse_ks(v: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (parse_num("ks", a)?, parse_num("ks", b)?);
                if a > b {
                    return Err(invalid(format!("ks: empty range '{part}'")));
                }
                out.extend(a..=b);
            }
            None => out.push(parse_num("ks", part)?),
        }
    }
    Ok(out)
}

fn parse_rhs(v: &str) -> Result<Source> {
    let (kind, args) = v.split_once(':').unwrap_or((v, ""));
    let nums: Vec<f64> = parse_list("rhs", args)?;
    match (kind.trim(), nums.as_slice()) {
        ("indicator", &[x0, x1, y0, y1]) => Ok(Source::Indicator { x0, x1, y0, y1 }),
        ("hat", &[x, y]) => Ok(Source::Hat { x, y }),
        ("constant", &[c]) => Ok(Source::Constant(c)),
        _ => Err(invalid(format!(
            "rhs: expected indicator:x0,x1,y0,y1 | hat:x,y | constant:c, got '{v}'"
        ))),
    }
}

fn parse_boundary(v: &str) -> Result<BoundarySpec> {
    if v.trim() == "all" {
        return Ok(BoundarySpec::full());
    }
    let edges = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| Edge::parse(s).ok_or_else(|| invalid(format!("dirichlet: unknown edge '{s}'"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundarySpec::from_edges(&edges))
}

fn check_unique<T: PartialEq + std::fmt::Debug>(key: &str, items: &[T]) -> Result<()> {
    for (i, a) in items.iter().enumerate() {
        if items[..i].contains(a) {
            return Err(invalid(format!("{key}: duplicate entry {a:?}")));
        }
    }
    Ok(())
}

impl ExperimentConfig {
    /// Desk-scale defaults: stripes on `L = 4`, `ℓ = 7`, every operator, six
    /// patch sizes and six contrasts.
    pub fn default_desk() -> Self {
        Self {
            coarse_level: 4,
            fine_level: 7,
            coefficient: CoefficientSpec::Stripes,
            seed: 0,
            boundary: BoundarySpec::full(),
            rhs: Source::Indicator { x0: 0.25, x1: 0.75, y0: 0.25, y1: 0.75 },
            operators: OperatorKind::ALL.to_vec(),
            ks: (1..=6).collect(),
            alphas: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            rhs_correction: true,
            params: OperatorParams::default(),
            output_csv: None,
            plot_dir: None,
            cache_dir: None,
            record_wall_time: false,
        }
    }

    /// Parses config text. Relative paths are resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| invalid(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(invalid(format!("unknown key '{key}' on line {}", lineno + 1)));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(invalid(format!("key '{key}' given twice")));
            }
        }

        let mut cfg = Self::default_desk();
        let get = |k: &str| entries.get(k).map(String::as_str);
        let path = |v: &str| base_dir.join(v);
        if let Some(v) = get("coarse_level") {
            cfg.coarse_level = parse_num("coarse_level", v)?;
        }
        if let Some(v) = get("fine_level") {
            cfg.fine_level = parse_num("fine_level", v)?;
        }
        if let Some(v) = get("seed") {
            cfg.seed = parse_num("seed", v)?;
        }
        let smoothing_passes = get("smoothing_passes")
            .map(|v| parse_num("smoothing_passes", v))
            .transpose()?
            .unwrap_or(DEFAULT_SMOOTHING_PASSES);
        let one_fraction = get("one_fraction")
            .map(|v| parse_num("one_fraction", v))
            .transpose()?
            .unwrap_or(DEFAULT_ONE_FRACTION);
        if let Some(v) = get("coefficient") {
            cfg.coefficient = match v {
                "uniform" => CoefficientSpec::Uniform,
                "stripes" => CoefficientSpec::Stripes,
                "balls" => CoefficientSpec::Balls,
                "field" => CoefficientSpec::Field { smoothing_passes, one_fraction },
                "pgm" => {
                    let img = get("coefficient_image")
                        .ok_or_else(|| invalid("coefficient = pgm needs coefficient_image"))?;
                    CoefficientSpec::Image(path(img))
                }
                other => return Err(invalid(format!("coefficient: unknown kind '{other}'"))),
            };
        }
        if let Some(v) = get("dirichlet") {
            cfg.boundary = parse_boundary(v)?;
        }
        if let Some(v) = get("rhs") {
            cfg.rhs = parse_rhs(v)?;
        }
        if let Some(v) = get("operators") {
            cfg.operators = v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| OperatorKind::parse(s).ok_or_else(|| invalid(format!("operators: unknown operator '{s}'"))))
                .collect::<Result<_>>()?;
        }
        if let Some(v) = get("ks") {
            cfg.ks = parse_ks(v)?;
        }
        if let Some(v) = get("alphas") {
            cfg.alphas = parse_list("alphas", v)?;
        }
        if let Some(v) = get("rhs_correction") {
            cfg.rhs_correction = parse_bool("rhs_correction", v)?;
        }
        if let Some(v) = get("record_wall_time") {
            cfg.record_wall_time = parse_bool("record_wall_time", v)?;
        }
        if let Some(v) = get("ih_delta") {
            cfg.params.ih_delta = v.parse::<ScaleFactor>()?;
        }
        if let Some(v) = get("ih1_delta") {
            cfg.params.ih1_delta = v.parse::<ScaleFactor>()?;
        }
        cfg.output_csv = get("output_csv").map(path);
        cfg.plot_dir = get("plot_dir").map(path);
        cfg.cache_dir = get("cache_dir").map(path);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(file: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(file)
            .map_err(|e| invalid(format!("cannot read {}: {e}", file.display())))?;
        Self::parse(&text, file.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.coarse_level && self.coarse_level < self.fine_level && self.fine_level <= MAX_LEVEL) {
            return Err(invalid(format!(
                "levels must satisfy 1 <= coarse_level < fine_level <= {MAX_LEVEL}"
            )));
        }
        if self.boundary.is_empty() {
            return Err(invalid("dirichlet: at least one edge is required"));
        }
        if self.operators.is_empty() || self.ks.is_empty() || self.alphas.is_empty() {
            return Err(invalid("operators, ks and alphas must be nonempty"));
        }
        check_unique("operators", &self.operators)?;
        check_unique("ks", &self.ks)?;
        check_unique("alphas", &self.alphas)?;
        if self.ks.contains(&0) {
            return Err(invalid("ks: patch sizes start at 1"));
        }
        if let Some(a) = self.alphas.iter().find(|&&a| !(a > 0.0 && a <= 1.0)) {
            return Err(invalid(format!("alphas: {a} is outside (0, 1]")));
        }
        if let CoefficientSpec::Field { one_fraction, .. } = self.coefficient {
            if !(0.0..=1.0).contains(&one_fraction) {
                return Err(invalid("one_fraction must lie in [0, 1]"));
            }
        }
        let ratio = 1usize << (self.fine_level - self.coarse_level);
        for (key, delta) in [("ih_delta", self.params.ih_delta), ("ih1_delta", self.params.ih1_delta)] {
            if delta.fine_multiple(ratio).is_none() {
                return Err(invalid(format!("{key}: {delta} is not a multiple of h/H = 1/{ratio}")));
            }
        }
        self.rhs.validate(&lod_core::Grid::new(self.fine_level))?;
        Ok(())
    }

    pub fn mesh(&self) -> Result<MeshHierarchy> {
        Ok(MeshHierarchy::build(self.coarse_level, self.fine_level, self.boundary)?)
    }

    /// Coefficient geometry of this config with contrast `alpha`.
    pub fn coefficient(&self, mesh: &MeshHierarchy, alpha: f64) -> Result<Coefficient> {
        let c = match &self.coefficient {
            CoefficientSpec::Uniform => Coefficient::constant_one(mesh.fine()),
            CoefficientSpec::Stripes => Coefficient::stripes(mesh, alpha)?,
            CoefficientSpec::Balls => Coefficient::random_balls(mesh, alpha, self.seed)?,
            CoefficientSpec::Field { smoothing_passes, one_fraction } => {
                Coefficient::random_field(mesh, alpha, self.seed, *smoothing_passes, *one_fraction)?
            }
            CoefficientSpec::Image(p) => Coefficient::load_pgm(mesh.fine(), p, alpha)?,
        };
        Ok(c)
    }

    /// Stable description of everything the fine reference solution depends on.
    pub fn reference_key(&self, alpha: f64) -> String {
        let coef = match &self.coefficient {
            CoefficientSpec::Uniform => "uniform".to_string(),
            CoefficientSpec::Stripes => "stripes".to_string(),
            CoefficientSpec::Balls => format!("balls:{}", self.seed),
            CoefficientSpec::Field { smoothing_passes, one_fraction } => {
                format!("field:{}:{}:{:e}", self.seed, smoothing_passes, one_fraction)
            }
            CoefficientSpec::Image(p) => {
                let bytes = std::fs::read(p).unwrap_or_default();
                format!("pgm:{}", crate::cache::digest(&bytes))
            }
        };
        let edges: Vec<&str> = self.boundary.edges().into_iter().map(Edge::name).collect();
        format!(
            "v1|fine={}|coef={}|alpha={:e}|dirichlet={}|rhs={:?}",
            self.fine_level,
            coef,
            alpha,
            edges.join(","),
            self.rhs
        )
    }
}
