//! Flat `key = value` run configuration.
//!
//! ```text
//! # exp map in two dimensions
//! source = uniform_cube
//! target = exp
//! dim = 2
//! n = 4096
//! lambda = 10
//! widths = 80,80,80
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown or repeated keys are errors.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::datasets::{apply_map, sample, GroundTruthMap, Moon, SourceSpec, MOONS_DEFAULT_NOISE};
use crate::error::{Error, Result};
use crate::lipschitz::L1Projection;
use crate::nn::{InitScheme, OptimizerKind};
use crate::ot::EmpiricalMeasure;
use crate::training::{LambdaSchedule, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum SourceKind {
    UniformCube,
    Moons(Moon),
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetKind {
    /// `Q = T₀♯P'` for an independent source sample `P'`.
    Map(GroundTruthMap),
    Moons(Moon),
    Csv,
}

/// Where the training and evaluation clouds come from.
#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub source: SourceKind,
    pub target: TargetKind,
    pub dim: usize,
    pub n: usize,
    pub source_csv: Option<PathBuf>,
    pub target_csv: Option<PathBuf>,
    pub moons_noise: f64,
    /// Base seed: `P` uses it, `Q` uses `+1`, the held-out sample `+2`.
    pub data_seed: u64,
    /// Held-out points for the MSE against the ground-truth map.
    pub holdout_n: usize,
    /// Points per cloud for the exact W1 logged during training; 0 disables it.
    pub w1_eval_n: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            source: SourceKind::UniformCube,
            target: TargetKind::Map(GroundTruthMap::CoordwiseExp),
            dim: 2,
            n: 4096,
            source_csv: None,
            target_csv: None,
            moons_noise: MOONS_DEFAULT_NOISE,
            data_seed: 1,
            holdout_n: 2000,
            w1_eval_n: 0,
        }
    }
}

/// Training clouds plus the optional evaluation material derived from them.
#[derive(Debug, Clone)]
pub struct RunData {
    pub p: EmpiricalMeasure,
    pub q: EmpiricalMeasure,
    pub ground_truth: Option<GroundTruthMap>,
    pub holdout: Option<EmpiricalMeasure>,
}

impl DataConfig {
    pub fn source_spec(&self) -> Result<SourceSpec> {
        Ok(match &self.source {
            SourceKind::UniformCube => SourceSpec::uniform_cube(self.dim),
            SourceKind::Moons(moon) => SourceSpec::TwoMoons {
                noise: self.moons_noise,
                moon: *moon,
            },
            SourceKind::Csv => SourceSpec::CsvFile {
                path: self
                    .source_csv
                    .clone()
                    .ok_or_else(|| Error::Config("source = csv needs source_csv".into()))?,
            },
        })
    }

    pub fn ground_truth(&self) -> Option<GroundTruthMap> {
        match &self.target {
            TargetKind::Map(m) => Some(m.clone()),
            _ => None,
        }
    }

    pub fn load(&self) -> Result<RunData> {
        let spec = self.source_spec()?;
        let p = sample(&spec, self.n, self.data_seed)?;
        let q = match &self.target {
            TargetKind::Map(m) => apply_map(m, &sample(&spec, self.n, self.data_seed + 1)?)?,
            TargetKind::Moons(moon) => sample(
                &SourceSpec::TwoMoons {
                    noise: self.moons_noise,
                    moon: *moon,
                },
                self.n,
                self.data_seed + 1,
            )?,
            TargetKind::Csv => sample(
                &SourceSpec::CsvFile {
                    path: self
                        .target_csv
                        .clone()
                        .ok_or_else(|| Error::Config("target = csv needs target_csv".into()))?,
                },
                self.n,
                0,
            )?,
        };
        if p.dim() != q.dim() {
            return Err(Error::Dimension(format!(
                "source dim {} vs target dim {}",
                p.dim(),
                q.dim()
            )));
        }
        let ground_truth = self.ground_truth();
        let holdout = match (&ground_truth, &spec) {
            (Some(_), SourceSpec::CsvFile { .. }) | (None, _) => None,
            (Some(_), _) if self.holdout_n == 0 => None,
            (Some(_), _) => Some(sample(&spec, self.holdout_n, self.data_seed + 2)?),
        };
        Ok(RunData {
            p,
            q,
            ground_truth,
            holdout,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub data: DataConfig,
    pub train: TrainConfig,
}

pub(crate) fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected true or false, got `{v}`"))),
    }
}

fn parse_opt(key: &str, v: &str) -> Result<Option<f64>> {
    if v == "auto" {
        Ok(None)
    } else {
        parse_num(key, v).map(Some)
    }
}

fn parse_l1(v: &str) -> Result<L1Projection> {
    match v {
        "exact" => Ok(L1Projection::Exact),
        "rescale" => Ok(L1Projection::Rescale),
        _ => Err(Error::Config(format!("unknown l1_projection `{v}` (exact, rescale)"))),
    }
}

fn parse_moons(v: &str) -> Option<Moon> {
    v.strip_prefix("moons_").and_then(|m| Moon::parse(m).ok())
}

fn moon_name(m: Moon) -> &'static str {
    match m {
        Moon::Upper => "moons_upper",
        Moon::Lower => "moons_lower",
        Moon::Both => "moons_both",
    }
}

/// Splits `key = value` lines, dropping blanks and `#` comments. Returns
/// `(line number, key, value)`; a repeated key is an error.
pub fn key_values(text: &str) -> Result<Vec<(usize, &str, &str)>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        if !seen.insert(key) {
            return Err(Error::Config(format!("line {}: `{key}` given twice", i + 1)));
        }
        out.push((i + 1, key, value));
    }
    Ok(out)
}

/// Prefixes a configuration error with its line number.
pub fn at_line(lineno: usize, e: Error) -> Error {
    match e {
        Error::Config(msg) => Error::Config(format!("line {lineno}: {msg}")),
        other => other,
    }
}

/// Reads a config file; a missing file is a usage error.
pub fn read_config_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::Config(format!("config file {} not found", path.display())),
        _ => Error::io(path, e),
    })
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (lineno, key, value) in key_values(text)? {
            cfg.set(key, value).map_err(|e| at_line(lineno, e))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&read_config_text(path.as_ref())?)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let t = &mut self.train;
        let d = &mut self.data;
        match key {
            "source" => {
                d.source = match v {
                    "uniform_cube" => SourceKind::UniformCube,
                    "csv" => SourceKind::Csv,
                    _ => SourceKind::Moons(parse_moons(v).ok_or_else(|| {
                        Error::Config(format!(
                            "unknown source `{v}` (uniform_cube, moons_upper, moons_lower, moons_both, csv)"
                        ))
                    })?),
                }
            }
            "target" => {
                d.target = match v {
                    "csv" => TargetKind::Csv,
                    _ => match parse_moons(v) {
                        Some(m) => TargetKind::Moons(m),
                        None => TargetKind::Map(GroundTruthMap::parse(v)?),
                    },
                }
            }
            "dim" => d.dim = parse_num(key, v)?,
            "n" => d.n = parse_num(key, v)?,
            "source_csv" => d.source_csv = Some(PathBuf::from(v)),
            "target_csv" => d.target_csv = Some(PathBuf::from(v)),
            "moons_noise" => d.moons_noise = parse_num(key, v)?,
            "data_seed" => d.data_seed = parse_num(key, v)?,
            "holdout_n" => d.holdout_n = parse_num(key, v)?,
            "w1_eval_n" => d.w1_eval_n = parse_num(key, v)?,
            "lambda" => t.lambda = parse_num(key, v)?,
            "lambda_schedule" => t.lambda_schedule = LambdaSchedule::parse(v)?,
            "eta_d" => t.eta_d = parse_num(key, v)?,
            "eta_g" => t.eta_g = parse_num(key, v)?,
            "optimizer_d" => t.optimizer_d = OptimizerKind::parse(v)?,
            "optimizer_g" => t.optimizer_g = OptimizerKind::parse(v)?,
            "adam_beta1" => t.adam_beta1 = parse_num(key, v)?,
            "adam_beta2" => t.adam_beta2 = parse_num(key, v)?,
            "lr_final_fraction" => t.lr_final_fraction = parse_num(key, v)?,
            "batch_size" => t.batch_size = parse_num(key, v)?,
            "n_critic" => t.n_critic = parse_num(key, v)?,
            "max_outer_steps" => t.max_outer_steps = parse_num(key, v)?,
            "eval_every" => t.eval_every = parse_num(key, v)?,
            "output_scale" => t.output_scale = parse_num(key, v)?,
            "seed" => t.seed = parse_num(key, v)?,
            "widths" => {
                t.widths = v
                    .split(',')
                    .map(|w| parse_num(key, w.trim()))
                    .collect::<Result<Vec<usize>>>()?
            }
            "init" => t.init = InitScheme::parse(v)?,
            "c_d" => t.c_d = parse_opt(key, v)?,
            "c_g" => t.c_g = parse_opt(key, v)?,
            "domain_half_width" => t.domain_half_width = parse_num(key, v)?,
            "bound_eps" => t.bound_eps = parse_num(key, v)?,
            "l1_projection" => t.l1_projection = parse_l1(v)?,
            "early_stop" => t.early_stop = parse_bool(key, v)?,
            "time_budget_secs" => t.time_budget_secs = parse_opt(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        let d = &self.data;
        if d.dim == 0 {
            return Err(Error::Config("dim must be >= 1".into()));
        }
        if d.n < 2 {
            return Err(Error::Config("n must be >= 2".into()));
        }
        if self.train.batch_size > d.n {
            return Err(Error::Config(format!(
                "batch_size {} exceeds n {}",
                self.train.batch_size, d.n
            )));
        }
        let moons = matches!(d.source, SourceKind::Moons(_)) || matches!(d.target, TargetKind::Moons(_));
        if moons && d.dim != 2 {
            return Err(Error::Config("two-moons data needs dim = 2".into()));
        }
        if matches!(d.source, SourceKind::Csv) && d.source_csv.is_none() {
            return Err(Error::Config("source = csv needs source_csv".into()));
        }
        if matches!(d.target, TargetKind::Csv) && d.target_csv.is_none() {
            return Err(Error::Config("target = csv needs target_csv".into()));
        }
        Ok(())
    }

    /// Canonical text form; `parse(to_text())` gives back an equal config.
    pub fn to_text(&self) -> String {
        let d = &self.data;
        let t = &self.train;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
        kv(
            "source",
            match &d.source {
                SourceKind::UniformCube => "uniform_cube".into(),
                SourceKind::Moons(m) => moon_name(*m).into(),
                SourceKind::Csv => "csv".into(),
            },
        );
        kv(
            "target",
            match &d.target {
                TargetKind::Map(GroundTruthMap::Table(_)) => "identity".into(),
                TargetKind::Map(m) => m.name().into(),
                TargetKind::Moons(m) => moon_name(*m).into(),
                TargetKind::Csv => "csv".into(),
            },
        );
        kv("dim", d.dim.to_string());
        kv("n", d.n.to_string());
        if let Some(p) = &d.source_csv {
            kv("source_csv", p.display().to_string());
        }
        if let Some(p) = &d.target_csv {
            kv("target_csv", p.display().to_string());
        }
        kv("moons_noise", format!("{:e}", d.moons_noise));
        kv("data_seed", d.data_seed.to_string());
        kv("holdout_n", d.holdout_n.to_string());
        kv("w1_eval_n", d.w1_eval_n.to_string());
        kv("lambda", format!("{:e}", t.lambda));
        kv("lambda_schedule", t.lambda_schedule.name().into());
        kv("eta_d", format!("{:e}", t.eta_d));
        kv("eta_g", format!("{:e}", t.eta_g));
        kv("optimizer_d", t.optimizer_d.name().into());
        kv("optimizer_g", t.optimizer_g.name().into());
        kv("adam_beta1", format!("{:e}", t.adam_beta1));
        kv("adam_beta2", format!("{:e}", t.adam_beta2));
        kv("lr_final_fraction", format!("{:e}", t.lr_final_fraction));
        kv("batch_size", t.batch_size.to_string());
        kv("n_critic", t.n_critic.to_string());
        kv("max_outer_steps", t.max_outer_steps.to_string());
        kv("eval_every", t.eval_every.to_string());
        kv("output_scale", format!("{:e}", t.output_scale));
        kv("seed", t.seed.to_string());
        kv(
            "widths",
            t.widths.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(","),
        );
        kv("init", t.init.name().into());
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_else(|| "auto".into());
        kv("c_d", opt(t.c_d));
        kv("c_g", opt(t.c_g));
        kv("domain_half_width", format!("{:e}", t.domain_half_width));
        kv("bound_eps", format!("{:e}", t.bound_eps));
        kv(
            "l1_projection",
            match t.l1_projection {
                L1Projection::Exact => "exact".into(),
                L1Projection::Rescale => "rescale".into(),
            },
        );
        kv("early_stop", t.early_stop.to_string());
        kv("time_budget_secs", opt(t.time_budget_secs));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn parses_values_and_comments() {
        let cfg = RunConfig::parse(
            "# comment\n\nsource = moons_upper\ntarget = moons_lower  # trailing\nn = 500\nbatch_size = 250\n\
             widths = 16, 16\nc_d = 3.5\nlambda_schedule = consistent\nearly_stop = true\noptimizer_d = sgd\n",
        )
        .unwrap();
        assert_eq!(cfg.data.source, SourceKind::Moons(Moon::Upper));
        assert_eq!(cfg.data.target, TargetKind::Moons(Moon::Lower));
        assert_eq!(cfg.train.widths, vec![16, 16]);
        assert_eq!(cfg.train.c_d, Some(3.5));
        assert_eq!(cfg.train.c_g, None);
        assert_eq!(cfg.train.lambda_schedule, LambdaSchedule::Consistent);
        assert_eq!(cfg.train.optimizer_d, OptimizerKind::Sgd);
        assert!(cfg.train.early_stop);
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "bogus = 1",
            "n = many",
            "lambda = 1\nlambda = 2",
            "no equals sign",
            "widths = 3,3",
            "source = moons_upper\ndim = 3",
            "source = csv",
            "batch_size = 5000\nn = 100",
            "l1_projection = fast",
            "lambda = -1",
        ] {
            assert!(matches!(RunConfig::parse(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn data_seeds_are_distinct() {
        let cfg = RunConfig::parse("n = 64\nbatch_size = 8\nholdout_n = 32").unwrap();
        let data = cfg.data.load().unwrap();
        assert_eq!(data.p.len(), 64);
        assert_eq!(data.holdout.as_ref().unwrap().len(), 32);
        assert_ne!(data.p.point(0), data.holdout.unwrap().point(0));
        assert!(data.ground_truth.is_some());
    }
}
