//! Seeded synthetic sources, closed-form optimal maps, and point-cloud CSV I/O.
//!
//! Every sampler draws from a `ChaCha8Rng` seeded with the caller's `u64`, so a
//! `(spec, n, seed)` triple names the same cloud on every platform.
//!
//! The ground-truth maps apply a strictly increasing scalar function to every
//! coordinate. Such a map is the gradient of a separable convex potential, so
//! it is the optimal transport map from `P` to its push-forward.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ot::{EmpiricalMeasure, TransportMap};
use crate::tensor::Matrix;

/// The pinned generator behind every seeded sampler.
pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Which half-circle(s) of the two-moons source to draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Moon {
    Upper,
    Lower,
    /// First `ceil(n/2)` points on the upper arc, the rest on the lower arc.
    Both,
}

impl Moon {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "upper" => Ok(Moon::Upper),
            "lower" => Ok(Moon::Lower),
            "both" => Ok(Moon::Both),
            _ => Err(Error::Config(format!("unknown moon `{s}` (upper, lower, both)"))),
        }
    }
}

/// Two-moons geometry: upper arc `(cos t, sin t)`, lower arc
/// `(1 − cos t, 0.5 − sin t)`, `t ∈ [0, π]`. The noiseless union has mean
/// `(0.5, 0.25)` and after centering spans `[−1.5, 1.5] × [−0.75, 0.75]`, so
/// the scale that fits it in `[−1.5, 1.5]²` is 1.
pub const MOONS_CENTER: [f64; 2] = [0.5, 0.25];
pub const MOONS_SCALE: f64 = 1.0;
pub const MOONS_DEFAULT_NOISE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    /// Uniform on `[−h, h]^dim`.
    UniformCube { dim: usize, half_width: f64 },
    /// Two interleaved half-circles with isotropic Gaussian noise of std `noise`.
    TwoMoons { noise: f64, moon: Moon },
    /// Points read from a CSV file.
    CsvFile { path: PathBuf },
}

impl SourceSpec {
    pub fn uniform_cube(dim: usize) -> Self {
        SourceSpec::UniformCube { dim, half_width: 1.0 }
    }

    pub fn two_moons(moon: Moon) -> Self {
        SourceSpec::TwoMoons {
            noise: MOONS_DEFAULT_NOISE,
            moon,
        }
    }

    /// Dimension of the samples, when known without reading a file.
    pub fn dim(&self) -> Option<usize> {
        match self {
            SourceSpec::UniformCube { dim, .. } => Some(*dim),
            SourceSpec::TwoMoons { .. } => Some(2),
            SourceSpec::CsvFile { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SourceSpec::UniformCube { dim, half_width } => {
                if *dim == 0 {
                    return Err(Error::Config("cube dimension must be >= 1".into()));
                }
                if !(*half_width > 0.0 && half_width.is_finite()) {
                    return Err(Error::Config("cube half-width must be positive".into()));
                }
            }
            SourceSpec::TwoMoons { noise, .. } => {
                if !(*noise >= 0.0 && noise.is_finite()) {
                    return Err(Error::Config("moons noise must be >= 0".into()));
                }
            }
            SourceSpec::CsvFile { .. } => {}
        }
        Ok(())
    }
}

/// Draws `n` points. CSV sources return the first `n` rows of the file.
pub fn sample(spec: &SourceSpec, n: usize, seed: u64) -> Result<EmpiricalMeasure> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Config("sample size must be >= 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    match spec {
        SourceSpec::UniformCube { dim, half_width } => {
            let h = *half_width;
            let data = (0..n * dim).map(|_| rng.gen_range(-h..=h)).collect();
            EmpiricalMeasure::new(Matrix::from_vec(n, *dim, data)?)
        }
        SourceSpec::TwoMoons { noise, moon } => {
            let mut data = Vec::with_capacity(2 * n);
            let n_upper = match moon {
                Moon::Upper => n,
                Moon::Lower => 0,
                Moon::Both => n.div_ceil(2),
            };
            for i in 0..n {
                let t = rng.gen_range(0.0..=std::f64::consts::PI);
                let (px, py) = if i < n_upper {
                    (t.cos(), t.sin())
                } else {
                    (1.0 - t.cos(), 0.5 - t.sin())
                };
                let ex: f64 = rng.sample(StandardNormal);
                let ey: f64 = rng.sample(StandardNormal);
                data.push(MOONS_SCALE * (px + noise * ex - MOONS_CENTER[0]));
                data.push(MOONS_SCALE * (py + noise * ey - MOONS_CENTER[1]));
            }
            EmpiricalMeasure::new(Matrix::from_vec(n, 2, data)?)
        }
        SourceSpec::CsvFile { path } => {
            let cloud = load_csv(path)?;
            if n > cloud.len() {
                return Err(Error::Data(format!(
                    "{} holds {} points, {n} requested",
                    path.display(),
                    cloud.len()
                )));
            }
            Ok(cloud.head(n))
        }
    }
}

/// Piecewise-linear strictly increasing scalar function, extended linearly
/// beyond its end knots.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl ScalarTable {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::Config("scalar table needs >= 2 knots of matching length".into()));
        }
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&xs) || !increasing(&ys) {
            return Err(Error::Config("scalar table must be strictly increasing".into()));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("scalar table knot".into()));
        }
        Ok(ScalarTable { xs, ys })
    }

    pub fn identity() -> Self {
        ScalarTable {
            xs: vec![-1.0, 1.0],
            ys: vec![-1.0, 1.0],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = self.xs.partition_point(|&v| v <= x).clamp(1, self.xs.len() - 1);
        let (x0, x1, y0, y1) = (self.xs[k - 1], self.xs[k], self.ys[k - 1], self.ys[k]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

/// A closed-form optimal map applied coordinate-wise.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruthMap {
    /// `x ↦ (exp x − 1.18) / 1.18`
    CoordwiseExp,
    /// `x ↦ x² sign(x)`
    CoordwiseSignedSquare,
    Table(ScalarTable),
}

pub const EXP_MAP_SHIFT: f64 = 1.18;

impl GroundTruthMap {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exp" => Ok(GroundTruthMap::CoordwiseExp),
            "signed_square" => Ok(GroundTruthMap::CoordwiseSignedSquare),
            "identity" => Ok(GroundTruthMap::Table(ScalarTable::identity())),
            _ => Err(Error::Config(format!(
                "unknown map `{s}` (exp, signed_square, identity)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GroundTruthMap::CoordwiseExp => "exp",
            GroundTruthMap::CoordwiseSignedSquare => "signed_square",
            GroundTruthMap::Table(_) => "table",
        }
    }

    pub fn scalar(&self, x: f64) -> f64 {
        match self {
            GroundTruthMap::CoordwiseExp => (x.exp() - EXP_MAP_SHIFT) / EXP_MAP_SHIFT,
            GroundTruthMap::CoordwiseSignedSquare => x * x * x.signum(),
            GroundTruthMap::Table(t) => t.eval(x),
        }
    }

    /// `T₀(x)`
    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&v| self.scalar(v)).collect()
    }
}

impl TransportMap for GroundTruthMap {
    fn apply_batch(&self, x: &Matrix) -> Result<Matrix> {
        let data = x.as_slice().iter().map(|&v| self.scalar(v)).collect();
        Matrix::from_vec(x.rows(), x.cols(), data)
    }
}

/// Pointwise image `T₀♯X`.
pub fn apply_map(map: &GroundTruthMap, x: &EmpiricalMeasure) -> Result<EmpiricalMeasure> {
    map.push_forward(x)
}

pub fn parse_csv(text: &str) -> Result<EmpiricalMeasure> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|cell| {
                let cell = cell.trim();
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Data(format!("line {}: `{cell}` is not a finite number", lineno + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Data(format!(
                    "line {}: {} columns, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Data("no points in CSV input".into()));
    }
    EmpiricalMeasure::from_points(&rows)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<EmpiricalMeasure> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text).map_err(|e| match e {
        Error::Data(msg) => Error::Data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// One point per line with 17 significant digits, optionally preceded by a
/// `# dim=d n=N seed=S` header.
pub fn to_csv(cloud: &EmpiricalMeasure, seed: Option<u64>) -> String {
    let mut out = String::new();
    if let Some(seed) = seed {
        writeln!(out, "# dim={} n={} seed={seed}", cloud.dim(), cloud.len()).unwrap();
    }
    for p in cloud.iter() {
        let cells: Vec<String> = p.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn save_csv(path: impl AsRef<Path>, cloud: &EmpiricalMeasure, seed: Option<u64>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_csv(cloud, seed)).map_err(|e| Error::io(path, e))
}
