//! Adversarial estimation of the optimal transport map.
//!
//! The generator `G(x) = P_{B_L}(L · N(x))` minimizes
//!
//! ```text
//! C(φ) + λ W_G(φ),   C(φ) = (1/m) Σ ‖x_i − G(x_i)‖²,   W_G(φ) = (1/m) Σ D(G(x_i))
//! ```
//!
//! while the discriminator `D` (a 1-Lipschitz GroupSort net) maximizes
//! `W_D(ψ) = (1/m) Σ D(G(x_i)) − (1/m) Σ D(y_i)`. Each outer step runs
//! `n_critic` projected ascent steps on `D`, then one projected descent step on
//! `G`. Both updates use Adam followed by projection onto the constraint set.

use std::path::PathBuf;
use std::time::Instant;

use rand::Rng;

use crate::datasets::{rng_from_seed, GroundTruthMap, SeededRng};
use crate::error::{Error, Result};
use crate::lipschitz::{project_params, ConstraintSpec, L1Projection};
use crate::nn::{
    checkpoint, AdamConfig, Architecture, InitScheme, NetworkParams, Optimizer, OptimizerKind, ParamGrads,
};
use crate::ot::{transport_cost, wasserstein1, EmpiricalMeasure, TransportMap};
use crate::tensor::{sq_dist, Matrix};

/// How the penalty weight depends on the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaSchedule {
    /// `λ = c`
    Fixed,
    /// Grows with `n` strictly inside the admissible envelope:
    /// `c n^{1/d} / log n` for `d > 2`, `c √n / (log n)²` for `d = 2`,
    /// `c √n / log n` for `d = 1`.
    Consistent,
}

impl LambdaSchedule {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(LambdaSchedule::Fixed),
            "consistent" => Ok(LambdaSchedule::Consistent),
            _ => Err(Error::Config(format!(
                "unknown lambda schedule `{s}` (fixed, consistent)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LambdaSchedule::Fixed => "fixed",
            LambdaSchedule::Consistent => "consistent",
        }
    }
}

pub fn lambda_schedule(kind: LambdaSchedule, n: usize, dim: usize, c: f64) -> f64 {
    match kind {
        LambdaSchedule::Fixed => c,
        LambdaSchedule::Consistent => {
            assert!(n >= 2, "lambda schedule needs n >= 2");
            let n = n as f64;
            let log_n = n.ln();
            match dim {
                0 => panic!("dimension must be >= 1"),
                1 => c * n.sqrt() / log_n,
                2 => c * n.sqrt() / (log_n * log_n),
                d => c * n.powf(1.0 / d as f64) / log_n,
            }
        }
    }
}

/// Discriminator bias bound `diam(Ω) + √d (sup‖x‖ + 1) + ε` for `Ω = [−h, h]^d`.
pub fn discriminator_bias_bound(dim: usize, half_width: f64, eps: f64) -> f64 {
    let sd = (dim as f64).sqrt();
    let diam = 2.0 * half_width * sd;
    let radius = half_width * sd;
    diam + sd * (radius + 1.0) + eps
}

/// Generator bias bound `L diam(Ω) + (√d + 1) sup‖x‖ + √d + ε` for `Ω = [−h, h]^d`.
pub fn generator_bias_bound(dim: usize, half_width: f64, output_scale: f64, eps: f64) -> f64 {
    let sd = (dim as f64).sqrt();
    let diam = 2.0 * half_width * sd;
    let radius = half_width * sd;
    output_scale * diam + (sd + 1.0) * radius + sd + eps
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Fixed penalty weight, or the constant `c` of the consistent schedule.
    pub lambda: f64,
    pub lambda_schedule: LambdaSchedule,
    pub eta_d: f64,
    pub eta_g: f64,
    pub optimizer_d: OptimizerKind,
    pub optimizer_g: OptimizerKind,
    /// Adam moment decay rates, shared by both networks.
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    /// Both learning rates follow a cosine decay from their initial value to
    /// this fraction of it at `max_outer_steps`; 1 keeps them constant.
    pub lr_final_fraction: f64,
    pub batch_size: usize,
    pub n_critic: usize,
    pub max_outer_steps: usize,
    pub eval_every: usize,
    /// Generator output bound `L`.
    pub output_scale: f64,
    pub seed: u64,
    pub widths: Vec<usize>,
    pub init: InitScheme,
    /// Bias bounds; `None` derives them from the domain.
    pub c_d: Option<f64>,
    pub c_g: Option<f64>,
    /// Half-width `h` of the domain `[−h, h]^d` used for the default bias bounds.
    pub domain_half_width: f64,
    /// Approximation slack `ε` in the default bias bounds.
    pub bound_eps: f64,
    pub l1_projection: L1Projection,
    /// Stop once the logged total loss changes by less than 1e-4 (relative)
    /// over 50 evaluations.
    pub early_stop: bool,
    /// Wall-clock budget; when exceeded the run checkpoints and stops.
    pub time_budget_secs: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 10.0,
            lambda_schedule: LambdaSchedule::Fixed,
            eta_d: 1e-3,
            eta_g: 1e-3,
            optimizer_d: OptimizerKind::Adam,
            optimizer_g: OptimizerKind::Adam,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            lr_final_fraction: 1.0,
            batch_size: 512,
            n_critic: 5,
            max_outer_steps: 2000,
            eval_every: 20,
            output_scale: 2.0,
            seed: 0,
            widths: vec![80, 80, 80],
            init: InitScheme::Uniform,
            c_d: None,
            c_g: None,
            domain_half_width: 1.5,
            bound_eps: 0.1,
            l1_projection: L1Projection::Exact,
            early_stop: false,
            time_budget_secs: None,
        }
    }
}

pub const PLATEAU_WINDOW: usize = 50;
pub const PLATEAU_TOLERANCE: f64 = 1e-4;

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        let positive = [
            ("eta_d", self.eta_d),
            ("eta_g", self.eta_g),
            ("domain_half_width", self.domain_half_width),
            ("bound_eps", self.bound_eps),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.lr_final_fraction > 0.0 && self.lr_final_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "lr_final_fraction must lie in (0, 1], got {}",
                self.lr_final_fraction
            )));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        for (name, v) in [
            ("batch_size", self.batch_size),
            ("n_critic", self.n_critic),
            ("eval_every", self.eval_every),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        if !(self.output_scale >= 1.0 && self.output_scale.is_finite()) {
            return Err(Error::Config(format!(
                "output_scale must be >= 1, got {}",
                self.output_scale
            )));
        }
        for (name, c) in [("c_d", self.c_d), ("c_g", self.c_g)] {
            if let Some(c) = c {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(Error::Config(format!("{name} must be positive, got {c}")));
                }
            }
        }
        if let Some(t) = self.time_budget_secs {
            if t.is_nan() || t <= 0.0 {
                return Err(Error::Config("time_budget_secs must be positive".into()));
            }
        }
        Architecture::new(1, 1, self.widths.clone()).validate()
    }

    /// Multiplier applied to both learning rates before outer step `step`.
    pub fn lr_factor(&self, step: usize) -> f64 {
        if self.lr_final_fraction >= 1.0 || self.max_outer_steps <= 1 {
            return 1.0;
        }
        let progress = (step as f64 / (self.max_outer_steps - 1) as f64).min(1.0);
        let cosine = 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
        self.lr_final_fraction + (1.0 - self.lr_final_fraction) * cosine
    }

    pub fn effective_lambda(&self, n: usize, dim: usize) -> f64 {
        lambda_schedule(self.lambda_schedule, n.max(2), dim, self.lambda)
    }

    pub fn adam(&self, lr: f64) -> AdamConfig {
        AdamConfig {
            lr,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            ..AdamConfig::default()
        }
    }

    pub fn discriminator_arch(&self, dim: usize) -> Architecture {
        let c = self
            .c_d
            .unwrap_or_else(|| discriminator_bias_bound(dim, self.domain_half_width, self.bound_eps));
        Architecture::new(dim, 1, self.widths.clone()).with_bias_bound(c)
    }

    pub fn generator_arch(&self, dim: usize) -> Architecture {
        let c = self
            .c_g
            .unwrap_or_else(|| generator_bias_bound(dim, self.domain_half_width, self.output_scale, self.bound_eps));
        Architecture::new(dim, dim, self.widths.clone())
            .with_bias_bound(c)
            .with_output_ball(self.output_scale)
    }
}

/// Terms of the generator objective on one minibatch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    /// `C(φ)`
    pub quad_cost: f64,
    /// `W_G(φ)`
    pub ipm_term: f64,
    /// Latest `W_D(ψ)`.
    pub disc_objective: f64,
    /// `C(φ) + λ W_G(φ)`
    pub total: f64,
}

/// Networks, optimizers and RNG of a training run.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub generator: NetworkParams,
    pub discriminator: NetworkParams,
    pub opt_g: Optimizer,
    pub opt_d: Optimizer,
    pub lambda: f64,
    /// Completed generator steps.
    pub step: usize,
    spec_g: ConstraintSpec,
    spec_d: ConstraintSpec,
    rng: SeededRng,
    last_disc_objective: f64,
}

fn check_finite(what: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric(format!("{what} is {v}")))
    }
}

impl TrainState {
    /// Fresh networks for data of dimension `dim` and sample size `n`.
    pub fn new(cfg: &TrainConfig, dim: usize, n: usize) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng_from_seed(cfg.seed);
        let generator = NetworkParams::init_with(cfg.generator_arch(dim), rng.gen(), cfg.init)?;
        let discriminator = NetworkParams::init_with(cfg.discriminator_arch(dim), rng.gen(), cfg.init)?;
        let spec_g = ConstraintSpec::for_network(&generator).with_l1_projection(cfg.l1_projection);
        let spec_d = ConstraintSpec::for_network(&discriminator).with_l1_projection(cfg.l1_projection);
        Ok(TrainState {
            opt_g: Optimizer::new(cfg.optimizer_g, cfg.adam(cfg.eta_g), &generator),
            opt_d: Optimizer::new(cfg.optimizer_d, cfg.adam(cfg.eta_d), &discriminator),
            generator,
            discriminator,
            lambda: cfg.effective_lambda(n, dim),
            step: 0,
            spec_g,
            spec_d,
            rng,
            last_disc_objective: 0.0,
        })
    }

    pub fn generator_constraints(&self) -> &ConstraintSpec {
        &self.spec_g
    }

    pub fn discriminator_constraints(&self) -> &ConstraintSpec {
        &self.spec_d
    }

    /// `W_D(ψ)` on the given batches, without updating anything.
    pub fn disc_objective(&self, batch_x: &Matrix, batch_y: &Matrix) -> Result<f64> {
        let gx = self.generator.apply_batch(batch_x)?;
        let fake = self.discriminator.apply_batch(&gx)?;
        let real = self.discriminator.apply_batch(batch_y)?;
        Ok(mean(fake.as_slice()) - mean(real.as_slice()))
    }

    /// `W_D(ψ)` and its gradient with respect to the discriminator parameters.
    pub fn discriminator_gradient(&self, batch_x: &Matrix, batch_y: &Matrix) -> Result<(f64, ParamGrads)> {
        let m_fake = batch_x.rows();
        let m_real = batch_y.rows();
        if m_fake == 0 || m_real == 0 {
            return Err(Error::Data("empty minibatch".into()));
        }
        let gx = self.generator.apply_batch(batch_x)?;
        // one pass over the stacked batch [G(x); y]
        let dim = gx.cols();
        let mut stacked = Vec::with_capacity((m_fake + m_real) * dim);
        stacked.extend_from_slice(gx.as_slice());
        stacked.extend_from_slice(batch_y.as_slice());
        let stacked = Matrix::from_vec(m_fake + m_real, dim, stacked)?;
        let (out, tape) = self.discriminator.forward_batch(&stacked, true)?;
        let vals = out.as_slice();
        let objective = check_finite("discriminator objective", mean(&vals[..m_fake]) - mean(&vals[m_fake..]))?;
        let mut upstream = Matrix::zeros(m_fake + m_real, 1);
        for (i, u) in upstream.as_mut_slice().iter_mut().enumerate() {
            *u = if i < m_fake {
                1.0 / m_fake as f64
            } else {
                -1.0 / m_real as f64
            };
        }
        let (grads, _) = self.discriminator.backward_batch(&tape.expect("recorded"), &upstream)?;
        if !grads.is_finite() {
            return Err(Error::Numeric("discriminator gradient".into()));
        }
        Ok((objective, grads))
    }

    /// One projected ascent step on `W_D`. Returns `W_D` before the step.
    pub fn discriminator_step(&mut self, batch_x: &Matrix, batch_y: &Matrix) -> Result<f64> {
        let (objective, mut grads) = self.discriminator_gradient(batch_x, batch_y)?;
        // the optimizers minimize
        grads.scale(-1.0);
        self.opt_d.step(&mut self.discriminator, &grads)?;
        project_params(&mut self.discriminator, &self.spec_d);
        self.last_disc_objective = objective;
        Ok(objective)
    }

    /// Generator objective on a batch, without updating anything.
    pub fn loss_breakdown(&self, batch_x: &Matrix) -> Result<LossBreakdown> {
        let gx = self.generator.apply_batch(batch_x)?;
        let d = self.discriminator.apply_batch(&gx)?;
        let quad_cost = mean_sq_dist(batch_x, &gx);
        let ipm_term = mean(d.as_slice());
        Ok(LossBreakdown {
            quad_cost,
            ipm_term,
            disc_objective: self.last_disc_objective,
            total: quad_cost + self.lambda * ipm_term,
        })
    }

    /// Losses on a batch and the gradient of `C + λ W_G` with respect to the
    /// generator parameters.
    pub fn generator_gradient(&self, batch_x: &Matrix) -> Result<(LossBreakdown, ParamGrads)> {
        let m = batch_x.rows();
        if m == 0 {
            return Err(Error::Data("empty minibatch".into()));
        }
        let (gx, g_tape) = self.generator.forward_batch(batch_x, true)?;
        let (d, d_tape) = self.discriminator.forward_batch(&gx, true)?;
        let quad_cost = mean_sq_dist(batch_x, &gx);
        let ipm_term = mean(d.as_slice());
        let total = check_finite("generator loss", quad_cost + self.lambda * ipm_term)?;

        let inv_m = 1.0 / m as f64;
        let d_up = Matrix::from_vec(m, 1, vec![self.lambda * inv_m; m])?;
        let mut upstream = self.discriminator.input_gradient(&d_tape.expect("recorded"), &d_up)?;
        for ((u, g), x) in upstream
            .as_mut_slice()
            .iter_mut()
            .zip(gx.as_slice())
            .zip(batch_x.as_slice())
        {
            *u += 2.0 * inv_m * (g - x);
        }
        let (grads, _) = self.generator.backward_batch(&g_tape.expect("recorded"), &upstream)?;
        if !grads.is_finite() {
            return Err(Error::Numeric("generator gradient".into()));
        }
        let losses = LossBreakdown {
            quad_cost,
            ipm_term,
            disc_objective: self.last_disc_objective,
            total,
        };
        Ok((losses, grads))
    }

    /// One projected descent step on `C + λ W_G`. Returns the losses before the step.
    pub fn generator_step(&mut self, batch_x: &Matrix) -> Result<LossBreakdown> {
        let (losses, grads) = self.generator_gradient(batch_x)?;
        self.opt_g.step(&mut self.generator, &grads)?;
        project_params(&mut self.generator, &self.spec_g);
        self.step += 1;
        Ok(losses)
    }

    /// Minibatch of `m` rows drawn with replacement.
    pub fn sample_batch(&mut self, cloud: &EmpiricalMeasure, m: usize) -> Matrix {
        let idx: Vec<usize> = (0..m).map(|_| self.rng.gen_range(0..cloud.len())).collect();
        cloud.points().select_rows(&idx)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn mean_sq_dist(a: &Matrix, b: &Matrix) -> f64 {
    let total: f64 = a.row_iter().zip(b.row_iter()).map(|(x, y)| sq_dist(x, y)).sum();
    total / a.rows() as f64
}

/// One line of the metric log.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub step: usize,
    /// Quadratic cost of `G` over the monitored training points.
    pub quad_cost: f64,
    /// `W_D` of the current discriminator over the monitored training points.
    pub ipm_estimate: f64,
    pub w1_exact: Option<f64>,
    pub holdout_mse: Option<f64>,
    pub lambda: f64,
}

pub const METRIC_HEADER: &str = "step,quad_cost,ipm_estimate,w1_exact,holdout_mse,lambda";

impl MetricRow {
    pub fn total_loss(&self) -> f64 {
        self.quad_cost + self.lambda * self.ipm_estimate
    }

    pub fn csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        format!(
            "{},{:e},{:e},{},{},{:e}",
            self.step,
            self.quad_cost,
            self.ipm_estimate,
            opt(self.w1_exact),
            opt(self.holdout_mse),
            self.lambda
        )
    }
}

pub fn metrics_to_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from(METRIC_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricRow>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(METRIC_HEADER) {
        return Err(Error::Data(format!("metric log must start with `{METRIC_HEADER}`")));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let bad = || Error::Data(format!("metric log line {}: `{line}`", i + 2));
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 6 {
                return Err(bad());
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
            let opt = |s: &str| {
                if s.trim().is_empty() {
                    Ok(None)
                } else {
                    num(s).map(Some)
                }
            };
            Ok(MetricRow {
                step: cells[0].trim().parse().map_err(|_| bad())?,
                quad_cost: num(cells[1])?,
                ipm_estimate: num(cells[2])?,
                w1_exact: opt(cells[3])?,
                holdout_mse: opt(cells[4])?,
                lambda: num(cells[5])?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxSteps,
    Plateau,
    TimeBudget,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub state: TrainState,
    pub log: Vec<MetricRow>,
    pub stop_reason: StopReason,
}

/// Points of the training clouds used for the logged `quad_cost` / `ipm_estimate`.
pub const MONITOR_POINTS: usize = 4096;

/// Runs the alternating training loop on fixed clouds `P_n`, `Q_n`.
///
/// ```no_run
/// # use otmap::{datasets::*, training::*};
/// let p = sample(&SourceSpec::uniform_cube(2), 4096, 1)?;
/// let q = apply_map(&GroundTruthMap::CoordwiseExp, &sample(&SourceSpec::uniform_cube(2), 4096, 2)?)?;
/// let holdout = sample(&SourceSpec::uniform_cube(2), 1000, 3)?;
/// let run = Trainer::new(TrainConfig::default())
///     .holdout(holdout, GroundTruthMap::CoordwiseExp)
///     .run(&p, &q)?;
/// println!("{:?}", run.log.last());
/// # Ok::<(), otmap::Error>(())
/// ```
#[derive(Debug, Clone)]
pub struct Trainer {
    cfg: TrainConfig,
    holdout: Option<(EmpiricalMeasure, GroundTruthMap)>,
    w1_pair: Option<(EmpiricalMeasure, EmpiricalMeasure)>,
    checkpoint_dir: Option<PathBuf>,
}

impl Trainer {
    pub fn new(cfg: TrainConfig) -> Self {
        Trainer {
            cfg,
            holdout: None,
            w1_pair: None,
            checkpoint_dir: None,
        }
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    /// Logs `(1/n) Σ ‖G(x) − T₀(x)‖²` over `points` at every evaluation.
    pub fn holdout(mut self, points: EmpiricalMeasure, map: GroundTruthMap) -> Self {
        self.holdout = Some((points, map));
        self
    }

    /// Logs the exact `W1(G♯p_eval, q_eval)` at every evaluation.
    pub fn w1_eval(mut self, p_eval: EmpiricalMeasure, q_eval: EmpiricalMeasure) -> Self {
        self.w1_pair = Some((p_eval, q_eval));
        self
    }

    /// Writes `generator.ckpt` and `discriminator.ckpt` here at every evaluation.
    pub fn checkpoint_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.checkpoint_dir = Some(dir.into());
        self
    }

    pub fn run(&self, p: &EmpiricalMeasure, q: &EmpiricalMeasure) -> Result<TrainOutcome> {
        let cfg = &self.cfg;
        cfg.validate()?;
        if p.len() != q.len() {
            return Err(Error::Dimension(format!(
                "source and target need the same size, got {} and {}",
                p.len(),
                q.len()
            )));
        }
        if p.dim() != q.dim() {
            return Err(Error::Dimension(format!(
                "dimensions differ: {} vs {}",
                p.dim(),
                q.dim()
            )));
        }
        if p.is_empty() {
            return Err(Error::Data("empty training clouds".into()));
        }
        if cfg.batch_size > p.len() {
            return Err(Error::Config(format!(
                "batch_size {} exceeds sample size {}",
                cfg.batch_size,
                p.len()
            )));
        }
        if let Some((h, _)) = &self.holdout {
            if h.dim() != p.dim() {
                return Err(Error::Dimension("holdout dimension differs from training data".into()));
            }
        }
        if let Some((pe, qe)) = &self.w1_pair {
            if pe.len() != qe.len() || pe.dim() != p.dim() || qe.dim() != p.dim() {
                return Err(Error::Dimension(
                    "W1 evaluation clouds must match in size and dimension".into(),
                ));
            }
        }

        let started = Instant::now();
        let mut state = TrainState::new(cfg, p.dim(), p.len())?;
        let p_mon = p.head(MONITOR_POINTS);
        let q_mon = q.head(MONITOR_POINTS);
        let mut log = vec![self.evaluate(&state, &p_mon, &q_mon)?];
        let mut stop_reason = StopReason::MaxSteps;

        while state.step < cfg.max_outer_steps {
            let factor = cfg.lr_factor(state.step);
            state.opt_d.set_lr(cfg.eta_d * factor);
            state.opt_g.set_lr(cfg.eta_g * factor);
            for _ in 0..cfg.n_critic {
                let bx = state.sample_batch(p, cfg.batch_size);
                let by = state.sample_batch(q, cfg.batch_size);
                state.discriminator_step(&bx, &by)?;
            }
            let bx = state.sample_batch(p, cfg.batch_size);
            state.generator_step(&bx)?;

            let over_budget = cfg
                .time_budget_secs
                .is_some_and(|t| started.elapsed().as_secs_f64() > t);
            if state.step % cfg.eval_every == 0 || state.step == cfg.max_outer_steps || over_budget {
                log.push(self.evaluate(&state, &p_mon, &q_mon)?);
                self.write_checkpoints(&state)?;
                if over_budget {
                    stop_reason = StopReason::TimeBudget;
                    break;
                }
                if cfg.early_stop && plateaued(&log) {
                    stop_reason = StopReason::Plateau;
                    break;
                }
            }
        }
        Ok(TrainOutcome {
            state,
            log,
            stop_reason,
        })
    }

    fn evaluate(&self, state: &TrainState, p_mon: &EmpiricalMeasure, q_mon: &EmpiricalMeasure) -> Result<MetricRow> {
        let quad_cost = transport_cost(&state.generator, p_mon)?;
        let ipm_estimate = state.disc_objective(p_mon.points(), q_mon.points())?;
        let holdout_mse = match &self.holdout {
            Some((x, map)) => Some(crate::eval::map_mse(&state.generator, map, x)?),
            None => None,
        };
        let w1_exact = match &self.w1_pair {
            Some((pe, qe)) => Some(wasserstein1(&state.generator.push_forward(pe)?, qe)?),
            None => None,
        };
        Ok(MetricRow {
            step: state.step,
            quad_cost,
            ipm_estimate,
            w1_exact,
            holdout_mse,
            lambda: state.lambda,
        })
    }

    fn write_checkpoints(&self, state: &TrainState) -> Result<()> {
        if let Some(dir) = &self.checkpoint_dir {
            checkpoint::save(&state.generator, dir.join("generator.ckpt"))?;
            checkpoint::save(&state.discriminator, dir.join("discriminator.ckpt"))?;
        }
        Ok(())
    }
}

fn plateaued(log: &[MetricRow]) -> bool {
    if log.len() <= PLATEAU_WINDOW {
        return false;
    }
    let now = log[log.len() - 1].total_loss();
    let then = log[log.len() - 1 - PLATEAU_WINDOW].total_loss();
    (now - then).abs() <= PLATEAU_TOLERANCE * then.abs().max(f64::MIN_POSITIVE)
}

/// Settings for [`fit_critic`].
#[derive(Debug, Clone, PartialEq)]
pub struct CriticConfig {
    pub widths: Vec<usize>,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    /// Cosine decay target as a fraction of `lr`.
    pub final_lr_fraction: f64,
    pub steps: usize,
    pub restarts: usize,
    pub seed: u64,
    pub init: InitScheme,
    pub domain_half_width: f64,
    pub bound_eps: f64,
}

impl Default for CriticConfig {
    fn default() -> Self {
        CriticConfig {
            widths: vec![80, 80, 80],
            optimizer: OptimizerKind::Sgd,
            lr: 1.0,
            final_lr_fraction: 0.01,
            steps: 2000,
            restarts: 5,
            seed: 0,
            init: InitScheme::Uniform,
            domain_half_width: 1.5,
            bound_eps: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CriticFit {
    pub params: NetworkParams,
    /// `(1/n) Σ D(x_i) − (1/m) Σ D(y_j)`, a lower bound on `W1(p, q)`.
    pub ipm: f64,
    /// Final value of every restart, in order.
    pub restart_values: Vec<f64>,
}

/// Maximizes `E_p D − E_q D` over the constrained discriminator class by
/// full-batch projected gradient ascent, keeping the best of several restarts.
pub fn fit_critic(p: &EmpiricalMeasure, q: &EmpiricalMeasure, cfg: &CriticConfig) -> Result<CriticFit> {
    if p.dim() != q.dim() {
        return Err(Error::Dimension(format!(
            "dimensions differ: {} vs {}",
            p.dim(),
            q.dim()
        )));
    }
    if p.is_empty() || q.is_empty() {
        return Err(Error::Data("empty cloud".into()));
    }
    if cfg.restarts == 0 || cfg.steps == 0 || !(cfg.lr > 0.0 && cfg.lr.is_finite()) {
        return Err(Error::Config("critic needs restarts, steps, lr > 0".into()));
    }
    let (n, m, dim) = (p.len(), q.len(), p.dim());
    let mut both = Matrix::zeros(n + m, dim);
    for (i, x) in p.iter().chain(q.iter()).enumerate() {
        both.row_mut(i).copy_from_slice(x);
    }
    // Descent on the negated objective.
    let mut upstream = Matrix::zeros(n + m, 1);
    for (i, u) in upstream.as_mut_slice().iter_mut().enumerate() {
        *u = if i < n { -1.0 / n as f64 } else { 1.0 / m as f64 };
    }
    let value = |out: &Matrix| mean(&out.as_slice()[..n]) - mean(&out.as_slice()[n..]);
    let arch = Architecture::new(dim, 1, cfg.widths.clone()).with_bias_bound(discriminator_bias_bound(
        dim,
        cfg.domain_half_width,
        cfg.bound_eps,
    ));
    let mut rng = rng_from_seed(cfg.seed);
    let mut best: Option<(f64, NetworkParams)> = None;
    let mut restart_values = Vec::with_capacity(cfg.restarts);
    for _ in 0..cfg.restarts {
        let mut d = NetworkParams::init_with(arch.clone(), rng.gen(), cfg.init)?;
        let spec = ConstraintSpec::for_network(&d);
        let mut opt = Optimizer::new(cfg.optimizer, AdamConfig::with_lr(cfg.lr), &d);
        for step in 0..cfg.steps {
            let progress = step as f64 / cfg.steps.max(2).saturating_sub(1) as f64;
            let cosine = 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
            opt.set_lr(cfg.lr * (cfg.final_lr_fraction + (1.0 - cfg.final_lr_fraction) * cosine));
            let (_, tape) = d.forward_batch(&both, true)?;
            let (grads, _) = d.backward_batch(&tape.expect("recorded"), &upstream)?;
            if !grads.is_finite() {
                return Err(Error::Numeric("critic gradient".into()));
            }
            opt.step(&mut d, &grads)?;
            project_params(&mut d, &spec);
        }
        let v = check_finite("critic objective", value(&d.apply_batch(&both)?))?;
        restart_values.push(v);
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, d));
        }
    }
    let (ipm, params) = best.expect("at least one restart");
    Ok(CriticFit {
        params,
        ipm,
        restart_values,
    })
}
