//! Command-line front end: `train`, `eval`, `baseline`, `approx`, `plot`, `audit`.
//!
//! Failures print one line to stderr,
//! `error: kind=<kind> code=<exit code> msg=<message>`, and exit with 2
//! (usage), 3 (data) or 4 (non-finite value).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{self, RunConfig, SourceKind, TargetKind};
use crate::datasets::{apply_map, load_csv, sample, save_csv, SourceSpec};
use crate::error::{Error, Result};
use crate::eval::{self, ApproxBudget, ApproxTarget, EvalReport};
use crate::lipschitz::{audit_lipschitz, BoxDomain};
use crate::nn::checkpoint;
use crate::ot::{solve_assignment, CostKind, EmpiricalMeasure, TransportMap};
use crate::plot;
use crate::training::{metrics_to_csv, parse_metrics_csv, Trainer};

#[derive(Debug, Parser)]
#[command(
    name = "otmap",
    version,
    about = "Optimal transport maps with Lipschitz GroupSort networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags every subcommand accepts.
#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Seed overriding the one in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file or directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a generator and discriminator; writes metrics, checkpoints and clouds to --out.
    Train {
        #[command(flatten)]
        common: Common,
        /// Extra `key=value` settings applied after the config file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Held-out MSE and discrete-matching comparison for a trained run.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        run: PathBuf,
        /// Fresh points for the held-out MSE.
        #[arg(long, default_value_t = 10_000)]
        n_eval: usize,
        /// Points per cloud for the exact matching comparison.
        #[arg(long, default_value_t = 500)]
        n_compare: usize,
    },
    /// Exact discrete optimal matching between two clouds.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        x: Option<PathBuf>,
        #[arg(long)]
        y: Option<PathBuf>,
        /// `w1` (Euclidean) or `w2` (squared Euclidean).
        #[arg(long, default_value = "w2")]
        cost: String,
        /// Points per cloud when sampling from --config instead of CSV files.
        #[arg(long, default_value_t = 500)]
        n: usize,
    },
    /// Fit constrained networks to 1-Lipschitz targets and report sup errors per width.
    Approx {
        #[command(flatten)]
        common: Common,
        /// Target name, or `all` for the built-in suite.
        #[arg(long, default_value = "all")]
        target: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Ascending hidden widths; each one starts from the previous fit.
        #[arg(long, value_delimiter = ',', default_values_t = [16usize, 32, 80])]
        widths: Vec<usize>,
        /// Number of seeds, counting up from --seed.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
    },
    /// SVG figures and their CSVs from a training run directory.
    Plot {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        run: PathBuf,
    },
    /// Empirical Lipschitz audit of a checkpoint.
    Audit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        pairs: usize,
        /// Audit domain `[−h, h]^d`; defaults to the config's domain or 1.5.
        #[arg(long)]
        half_width: Option<f64>,
    },
}

/// Parses `args`, runs the command, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.kind().as_str().unwrap_or("invalid arguments").to_string();
            let detail = e.to_string();
            let first = detail.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: kind=usage code=2 msg={}", one_line(&format!("{msg}: {first}")));
            return 2;
        }
    };
    match run(cli.command) {
        Ok(summary) => {
            print!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("{}", error_line(&e));
            e.exit_code()
        }
    }
}

/// `error: kind=<kind> code=<code> msg=<message>` on a single line.
pub fn error_line(e: &Error) -> String {
    format!(
        "error: kind={} code={} msg={}",
        e.kind(),
        e.exit_code(),
        one_line(&e.to_string())
    )
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Runs one command; the returned text is what the binary prints to stdout.
pub fn run(command: Command) -> Result<String> {
    match command {
        Command::Train { common, set } => train(&common, &set),
        Command::Eval {
            common,
            run,
            n_eval,
            n_compare,
        } => eval_run(&common, &run, n_eval, n_compare),
        Command::Baseline { common, x, y, cost, n } => baseline(&common, x.as_deref(), y.as_deref(), &cost, n),
        Command::Approx {
            common,
            target,
            dim,
            widths,
            seeds,
        } => approx(&common, &target, dim, &widths, seeds),
        Command::Plot { common, run } => {
            let out = common.out.clone().unwrap_or_else(|| run.clone());
            let files = plot::emit_figures(&run, &out)?;
            Ok(files.iter().map(|f| format!("{}\n", f.display())).collect())
        }
        Command::Audit {
            common,
            checkpoint,
            pairs,
            half_width,
        } => audit(&common, &checkpoint, pairs, half_width),
    }
}

fn load_run_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn train(common: &Common, set: &[String]) -> Result<String> {
    let mut cfg = load_run_config(common.config.as_deref())?;
    for kv in set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = common.seed {
        cfg.train.seed = seed;
    }
    cfg.validate()?;
    let out = common
        .out
        .clone()
        .ok_or_else(|| Error::Config("train needs --out".into()))?;
    create_dir(&out)?;
    write_file(&out.join("config.cfg"), &cfg.to_text())?;

    let data = cfg.data.load()?;
    let mut trainer = Trainer::new(cfg.train.clone()).checkpoint_dir(&out);
    if let (Some(h), Some(map)) = (&data.holdout, &data.ground_truth) {
        trainer = trainer.holdout(h.clone(), map.clone());
    }
    if cfg.data.w1_eval_n > 0 {
        let k = cfg.data.w1_eval_n;
        let (pe, qe) = match (&data.holdout, &data.ground_truth) {
            (Some(h), Some(map)) => {
                let pe = h.head(k);
                let qe = apply_map(map, &pe)?;
                (pe, qe)
            }
            _ => (data.p.head(k), data.q.head(k)),
        };
        trainer = trainer.w1_eval(pe, qe);
    }
    let outcome = trainer.run(&data.p, &data.q)?;
    write_file(&out.join("metrics.csv"), &metrics_to_csv(&outcome.log))?;
    checkpoint::save(&outcome.state.generator, out.join("generator.ckpt"))?;
    checkpoint::save(&outcome.state.discriminator, out.join("discriminator.ckpt"))?;
    save_csv(out.join("source.csv"), &data.p, Some(cfg.data.data_seed))?;
    save_csv(out.join("target.csv"), &data.q, Some(cfg.data.data_seed + 1))?;
    save_csv(
        out.join("pushforward.csv"),
        &outcome.state.generator.push_forward(&data.p)?,
        None,
    )?;

    let last = outcome.log.last().expect("log has the initial row");
    let mut s = format!(
        "steps={} stop={:?} quad_cost={:e} ipm_estimate={:e}",
        last.step, outcome.stop_reason, last.quad_cost, last.ipm_estimate
    );
    if let Some(m) = last.holdout_mse {
        write!(s, " holdout_mse={m:e}").unwrap();
    }
    if let Some(w) = last.w1_exact {
        write!(s, " w1_exact={w:e}").unwrap();
    }
    s.push('\n');
    Ok(s)
}

/// Evaluation clouds of size `k`: a fresh source sample and, for map targets,
/// its image under the ground-truth map; two-moons targets get a fresh sample
/// and CSV targets their first `k` rows.
fn comparison_clouds(cfg: &RunConfig, k: usize, seed: u64) -> Result<(EmpiricalMeasure, EmpiricalMeasure)> {
    let d = &cfg.data;
    let spec = d.source_spec()?;
    let x = match spec {
        SourceSpec::CsvFile { .. } => sample(&spec, k, 0)?,
        _ => sample(&spec, k, seed)?,
    };
    let y = match &d.target {
        TargetKind::Map(map) => apply_map(map, &x)?,
        TargetKind::Moons(moon) => sample(
            &SourceSpec::TwoMoons {
                noise: d.moons_noise,
                moon: *moon,
            },
            k,
            seed.wrapping_add(1),
        )?,
        TargetKind::Csv => {
            let path = d
                .target_csv
                .clone()
                .ok_or_else(|| Error::Config("target = csv needs target_csv".into()))?;
            sample(&SourceSpec::CsvFile { path }, k, 0)?
        }
    };
    Ok((x, y))
}

fn eval_run(common: &Common, run: &Path, n_eval: usize, n_compare: usize) -> Result<String> {
    let cfg_path = common.config.clone().unwrap_or_else(|| run.join("config.cfg"));
    let cfg = RunConfig::load(&cfg_path)?;
    let generator = checkpoint::load(run.join("generator.ckpt"))?;
    if generator.input_dim() != cfg.data.dim {
        return Err(Error::Dimension(format!(
            "checkpoint dim {} vs config dim {}",
            generator.input_dim(),
            cfg.data.dim
        )));
    }
    let seed = common.seed.unwrap_or(cfg.data.data_seed + 3);
    if seed <= cfg.data.data_seed + 2 && seed >= cfg.data.data_seed {
        return Err(Error::Config(format!(
            "evaluation seed {seed} collides with the training data seeds"
        )));
    }
    let steps = match std::fs::read_to_string(run.join("metrics.csv")) {
        Ok(text) => parse_metrics_csv(&text)?.last().map_or(0, |r| r.step),
        Err(_) => 0,
    };
    let holdout_mse = match (cfg.data.ground_truth(), &cfg.data.source) {
        (Some(map), SourceKind::UniformCube | SourceKind::Moons(_)) => Some(eval::holdout_mse(
            &generator,
            &map,
            &cfg.data.source_spec()?,
            n_eval,
            seed,
        )?),
        _ => None,
    };
    let (x, y) = comparison_clouds(&cfg, n_compare, seed.wrapping_add(1))?;
    let comparison = eval::compare_to_discrete(&generator, &x, &y)?;
    let report = EvalReport {
        n: cfg.data.n,
        d: cfg.data.dim,
        seed,
        steps,
        holdout_mse,
        comparison,
    };
    let csv = report.to_csv();
    let out = common.out.clone().unwrap_or_else(|| run.join("eval.csv"));
    write_file(&out, &csv)?;
    Ok(csv)
}

fn baseline(common: &Common, x: Option<&Path>, y: Option<&Path>, cost: &str, n: usize) -> Result<String> {
    let kind = CostKind::parse(cost)?;
    let (xs, ys) = match (x, y) {
        (Some(x), Some(y)) => (load_csv(x)?, load_csv(y)?),
        (None, None) => {
            let mut cfg = load_run_config(common.config.as_deref())?;
            if let Some(seed) = common.seed {
                cfg.data.data_seed = seed;
            }
            let data = cfg.data.load()?;
            (data.p.head(n), data.q.head(n))
        }
        _ => return Err(Error::Config("baseline needs both --x and --y, or neither".into())),
    };
    let matching = solve_assignment(&xs, &ys, kind)?;
    if let Some(out) = &common.out {
        matching.write_csv(out)?;
    }
    Ok(format!(
        "cost_kind={} n={} cost={:e}\n",
        kind.name(),
        xs.len(),
        matching.cost
    ))
}

fn approx(common: &Common, target: &str, dim: usize, widths: &[usize], seeds: u64) -> Result<String> {
    let budget = match &common.config {
        Some(p) => ApproxBudget::parse(&config::read_config_text(p)?)?,
        None => ApproxBudget::default(),
    };
    if widths.is_empty() || seeds == 0 {
        return Err(Error::Config("approx needs at least one width and one seed".into()));
    }
    let targets = if target == "all" {
        eval::suite(dim)
    } else {
        vec![ApproxTarget::parse(target, dim)?]
    };
    let base = common.seed.unwrap_or(0);
    let seed_list: Vec<u64> = (0..seeds).map(|k| base + k).collect();
    let mut csv = String::from("target,width,median_sup_error,seeds\n");
    for t in &targets {
        for (w, err) in eval::width_sweep(t, dim, widths, &seed_list, &budget)? {
            writeln!(csv, "{},{w},{err:e},{seeds}", t.name()).unwrap();
        }
    }
    if let Some(out) = &common.out {
        write_file(out, &csv)?;
    }
    Ok(csv)
}

fn audit(common: &Common, path: &Path, pairs: usize, half_width: Option<f64>) -> Result<String> {
    let params = checkpoint::load(path)?;
    let h = match (half_width, &common.config) {
        (Some(h), _) => h,
        (None, Some(c)) => RunConfig::load(c)?.train.domain_half_width,
        (None, None) => 1.5,
    };
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(format!("half width must be positive, got {h}")));
    }
    let report = audit_lipschitz(
        &params,
        &BoxDomain::cube(params.input_dim(), h),
        pairs,
        common.seed.unwrap_or(0),
    );
    let norms = report
        .layer_norms
        .iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(";");
    let line = format!(
        "max_ratio={:e} samples={} constraints_satisfied={} max_bias={:e} layer_norms={norms}\n",
        report.max_ratio, report.samples, report.constraints_satisfied, report.max_bias
    );
    if let Some(out) = &common.out {
        write_file(out, &line)?;
    }
    Ok(line)
}
