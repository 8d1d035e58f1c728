//! Evaluation metrics and the approximation harness for constrained networks.

use std::fmt::Write as _;

use rand::Rng;

use crate::config;
use crate::datasets::{rng_from_seed, sample, GroundTruthMap, SeededRng, SourceSpec};
use crate::error::{Error, Result};
use crate::lipschitz::{project_params, ConstraintSpec};
use crate::nn::{AdamConfig, Architecture, InitScheme, NetworkParams, Optimizer, OptimizerKind};
use crate::ot::{solve_assignment, transport_cost, wasserstein1, CostKind, EmpiricalMeasure, TransportMap};
use crate::tensor::{l2_norm, sq_dist, Matrix};

/// `(1/n) Σ ‖G(x_i) − T₀(x_i)‖²` over the given points.
pub fn map_mse(g: &dyn TransportMap, map: &GroundTruthMap, x: &EmpiricalMeasure) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::Data("empty evaluation cloud".into()));
    }
    let gx = g.apply_batch(x.points())?;
    let tx = map.apply_batch(x.points())?;
    if gx.shape() != tx.shape() {
        return Err(Error::Dimension(format!(
            "map output shape {:?} does not match target {:?}",
            gx.shape(),
            tx.shape()
        )));
    }
    let total: f64 = gx.row_iter().zip(tx.row_iter()).map(|(a, b)| sq_dist(a, b)).sum();
    Ok(total / x.len() as f64)
}

/// [`map_mse`] on a fresh sample of `n_eval` points from `spec`.
pub fn holdout_mse(
    g: &dyn TransportMap,
    map: &GroundTruthMap,
    spec: &SourceSpec,
    n_eval: usize,
    seed: u64,
) -> Result<f64> {
    map_mse(g, map, &sample(spec, n_eval, seed)?)
}

pub const DISCRETE_MAX_POINTS: usize = 2000;

/// Generator against the exact empirical matching on the same clouds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteComparison {
    /// `(1/n) Σ ‖x_i − G(x_i)‖²`
    pub quad_cost_gen: f64,
    /// Minimal `(1/n) Σ ‖x_i − y_σ(i)‖²` over permutations.
    pub quad_cost_matching: f64,
    /// Exact `W1(G♯X, Y)`.
    pub w1_gen_vs_target: f64,
}

pub fn compare_to_discrete(
    g: &dyn TransportMap,
    x: &EmpiricalMeasure,
    y: &EmpiricalMeasure,
) -> Result<DiscreteComparison> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "cloud sizes differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() > DISCRETE_MAX_POINTS {
        return Err(Error::Data(format!(
            "exact comparison is capped at {DISCRETE_MAX_POINTS} points, got {}",
            x.len()
        )));
    }
    let gx = g.push_forward(x)?;
    Ok(DiscreteComparison {
        quad_cost_gen: transport_cost(g, x)?,
        quad_cost_matching: solve_assignment(x, y, CostKind::SquaredEuclidean)?.cost,
        w1_gen_vs_target: wasserstein1(&gx, y)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub steps: usize,
    pub holdout_mse: Option<f64>,
    pub comparison: DiscreteComparison,
}

pub const EVAL_HEADER: &str = "n,d,seed,steps,holdout_mse,w1_gen_vs_target,quad_cost_gen,quad_cost_matching";

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(EVAL_HEADER);
        out.push('\n');
        let c = &self.comparison;
        writeln!(
            out,
            "{},{},{},{},{},{:e},{:e},{:e}",
            self.n,
            self.d,
            self.seed,
            self.steps,
            self.holdout_mse.map(|v| format!("{v:e}")).unwrap_or_default(),
            c.w1_gen_vs_target,
            c.quad_cost_gen,
            c.quad_cost_matching
        )
        .unwrap();
        out
    }
}

/// Built-in 1-Lipschitz regression targets on `[−1, 1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum ApproxTarget {
    /// `x ↦ a·x + b`
    Affine { slope: Vec<f64>, offset: f64 },
    /// `x ↦ ‖x‖₂ − c`
    NormShift { c: f64 },
    /// `x ↦ max_k (a_k·x + b_k)`
    MaxAffine { pieces: Vec<(Vec<f64>, f64)> },
    /// `x ↦ max(x₁, x₂)`
    MaxCoords,
}

impl ApproxTarget {
    pub fn name(&self) -> &'static str {
        match self {
            ApproxTarget::Affine { .. } => "affine",
            ApproxTarget::NormShift { .. } => "norm",
            ApproxTarget::MaxAffine { .. } => "max_affine",
            ApproxTarget::MaxCoords => "max_coords",
        }
    }

    pub fn parse(s: &str, dim: usize) -> Result<Self> {
        suite(dim).into_iter().find(|t| t.name() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown approximation target `{s}` (affine, norm, max_affine, max_coords)"
            ))
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let affine = |a: &[f64], b: f64| a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>() + b;
        match self {
            ApproxTarget::Affine { slope, offset } => affine(slope, *offset),
            ApproxTarget::NormShift { c } => l2_norm(x) - c,
            ApproxTarget::MaxAffine { pieces } => pieces
                .iter()
                .map(|(a, b)| affine(a, *b))
                .fold(f64::NEG_INFINITY, f64::max),
            ApproxTarget::MaxCoords => x[0].max(x[1]),
        }
    }

    /// Checks the target is defined on `R^dim` and 1-Lipschitz: slopes must lie
    /// in the unit ball, and a sampled difference-quotient audit must agree.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let slopes: Vec<&[f64]> = match self {
            ApproxTarget::Affine { slope, .. } => vec![slope],
            ApproxTarget::MaxAffine { pieces } if pieces.is_empty() => {
                return Err(Error::Config("max_affine target needs at least one piece".into()))
            }
            ApproxTarget::MaxAffine { pieces } => pieces.iter().map(|(a, _)| a.as_slice()).collect(),
            ApproxTarget::MaxCoords if dim < 2 => {
                return Err(Error::Dimension("max_coords target needs dim >= 2".into()))
            }
            _ => vec![],
        };
        for a in slopes {
            if a.len() != dim {
                return Err(Error::Dimension(format!(
                    "target slope has dim {}, expected {dim}",
                    a.len()
                )));
            }
            if l2_norm(a) > 1.0 + 1e-12 {
                return Err(Error::Config(format!(
                    "target `{}` is not 1-Lipschitz: slope norm {}",
                    self.name(),
                    l2_norm(a)
                )));
            }
        }
        let mut rng = rng_from_seed(0x5eed);
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let den = crate::tensor::dist(&x, &y);
            if den > 0.0 && (self.eval(&x) - self.eval(&y)).abs() > (1.0 + 1e-9) * den {
                return Err(Error::Config(format!(
                    "target `{}` failed the Lipschitz audit",
                    self.name()
                )));
            }
        }
        Ok(())
    }
}

/// Built-in targets; `max_coords` is included only when `dim >= 2`.
pub fn suite(dim: usize) -> Vec<ApproxTarget> {
    let unit = |k: usize| {
        let mut a = vec![0.0; dim];
        a[k % dim] = 1.0;
        a
    };
    let diag: Vec<f64> = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut pieces = vec![(diag.clone(), 0.0)];
    pieces.push((diag.iter().map(|v| -v).collect(), 0.0));
    pieces.push((unit(0).iter().map(|v| 0.5 * v).collect(), 0.3));
    if dim >= 2 {
        let mut a = unit(1);
        a[0] = -0.6;
        a[1] = 0.8;
        pieces.push((a, -0.2));
    }
    let mut out = vec![
        ApproxTarget::Affine {
            slope: diag,
            offset: 0.25,
        },
        ApproxTarget::NormShift { c: 1.0 },
        ApproxTarget::MaxAffine { pieces },
    ];
    if dim >= 2 {
        out.push(ApproxTarget::MaxCoords);
    }
    out
}

/// Network size and optimizer settings for one regression fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxBudget {
    pub widths: Vec<usize>,
    pub optimizer: OptimizerKind,
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Learning rate at the last step relative to `lr` (cosine decay).
    pub final_lr_fraction: f64,
    pub probe_points: usize,
    pub init: InitScheme,
    /// Independent fits per call; the one with the lowest sup error on a
    /// fixed selection sample is kept.
    pub restarts: usize,
}

impl ApproxBudget {
    pub fn width(w: usize) -> Self {
        ApproxBudget {
            widths: vec![w, w],
            ..Self::default()
        }
    }

    /// Reads `key = value` lines over the defaults. Keys: `widths`, `optimizer`,
    /// `steps`, `batch_size`, `lr`, `final_lr_fraction`, `probe_points`, `init`, `restarts`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut b = ApproxBudget::default();
        for (lineno, key, v) in config::key_values(text)? {
            b.set(key, v).map_err(|e| config::at_line(lineno, e))?;
        }
        Ok(b)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "widths" => {
                self.widths = v
                    .split(',')
                    .map(|w| config::parse_num(key, w.trim()))
                    .collect::<Result<_>>()?
            }
            "optimizer" => self.optimizer = OptimizerKind::parse(v)?,
            "steps" => self.steps = config::parse_num(key, v)?,
            "batch_size" => self.batch_size = config::parse_num(key, v)?,
            "lr" => self.lr = config::parse_num(key, v)?,
            "final_lr_fraction" => self.final_lr_fraction = config::parse_num(key, v)?,
            "probe_points" => self.probe_points = config::parse_num(key, v)?,
            "init" => self.init = InitScheme::parse(v)?,
            "restarts" => self.restarts = config::parse_num(key, v)?,
            _ => return Err(Error::Config(format!("unknown approx key `{key}`"))),
        }
        Ok(())
    }
}

impl Default for ApproxBudget {
    fn default() -> Self {
        ApproxBudget {
            widths: vec![32, 32],
            optimizer: OptimizerKind::Adam,
            steps: 3000,
            batch_size: 256,
            lr: 5e-3,
            final_lr_fraction: 0.01,
            probe_points: 10_000,
            init: InitScheme::default(),
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ApproxProbe {
    pub target: ApproxTarget,
    pub params: NetworkParams,
    /// `max |N(x) − f(x)|` over the probe cloud.
    pub sup_error: f64,
    pub rmse: f64,
}

/// Bias bound used for the fitted networks on `[−1, 1]^dim`.
pub fn approx_bias_bound(dim: usize) -> f64 {
    crate::training::discriminator_bias_bound(dim, 1.0, 0.1)
}

/// Probe cloud: the `2^dim` cube corners followed by uniform points.
pub fn probe_cloud(dim: usize, n: usize, seed: u64) -> Result<Matrix> {
    let corners = if dim <= 12 { 1usize << dim } else { 0 };
    let mut data = Vec::with_capacity((corners + n) * dim);
    for c in 0..corners {
        data.extend((0..dim).map(|k| if c >> k & 1 == 1 { 1.0 } else { -1.0 }));
    }
    let mut rng = rng_from_seed(seed);
    data.extend((0..n * dim).map(|_| rng.gen_range(-1.0..=1.0)));
    Matrix::from_vec(corners + n, dim, data)
}

/// Sample size for choosing among restarts.
const SELECTION_POINTS: usize = 4096;

fn fit_once(
    target: &ApproxTarget,
    mut params: NetworkParams,
    budget: &ApproxBudget,
    rng: &mut SeededRng,
) -> Result<NetworkParams> {
    let dim = params.input_dim();
    let spec = ConstraintSpec::for_network(&params);
    let mut opt = Optimizer::new(budget.optimizer, AdamConfig::with_lr(budget.lr), &params);
    let m = budget.batch_size;
    let mut xb = Matrix::zeros(m, dim);
    let mut upstream = Matrix::zeros(m, 1);
    for step in 0..budget.steps {
        let progress = step as f64 / budget.steps.max(2).saturating_sub(1) as f64;
        let cosine = 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
        opt.set_lr(budget.lr * (budget.final_lr_fraction + (1.0 - budget.final_lr_fraction) * cosine));
        for v in xb.as_mut_slice() {
            *v = rng.gen_range(-1.0..=1.0);
        }
        let (out, tape) = params.forward_batch(&xb, true)?;
        for (k, u) in upstream.as_mut_slice().iter_mut().enumerate() {
            *u = 2.0 * (out.as_slice()[k] - target.eval(xb.row(k))) / m as f64;
        }
        let (grads, _) = params.backward_batch(&tape.expect("recorded"), &upstream)?;
        if !grads.is_finite() {
            return Err(Error::Numeric("approximation gradient".into()));
        }
        opt.step(&mut params, &grads)?;
        project_params(&mut params, &spec);
    }
    Ok(params)
}

/// Fits a constrained scalar network to `target` on `[−1, 1]^dim` by squared-loss
/// regression with Adam, projecting after every step, and estimates the sup error.
pub fn approx_harness(target: &ApproxTarget, dim: usize, budget: &ApproxBudget, seed: u64) -> Result<ApproxProbe> {
    approx_harness_from(target, dim, budget, seed, None)
}

fn sup_and_rmse(params: &NetworkParams, target: &ApproxTarget, xs: &Matrix) -> Result<(f64, f64)> {
    let (out, _) = params.forward_batch(xs, false)?;
    let mut sup = 0.0_f64;
    let mut sq = 0.0;
    for (k, x) in xs.row_iter().enumerate() {
        let e = (out.as_slice()[k] - target.eval(x)).abs();
        sup = sup.max(e);
        sq += e * e;
    }
    Ok((sup, (sq / xs.rows() as f64).sqrt()))
}

/// Like [`approx_harness`], optionally continuing from a smaller fit.
///
/// `warm` is widened to `budget.widths` and enters the selection twice, as is
/// and after further training, next to `budget.restarts` fresh fits. The
/// candidate with the smallest sup error on a selection sample (disjoint from
/// the reported probe cloud) is kept.
pub fn approx_harness_from(
    target: &ApproxTarget,
    dim: usize,
    budget: &ApproxBudget,
    seed: u64,
    warm: Option<&NetworkParams>,
) -> Result<ApproxProbe> {
    target.validate(dim)?;
    if budget.steps == 0 || budget.batch_size == 0 || budget.restarts == 0 || budget.lr.is_nan() || budget.lr <= 0.0 {
        return Err(Error::Config(
            "approximation budget needs steps, batch_size, restarts, lr > 0".into(),
        ));
    }
    let arch = Architecture::new(dim, 1, budget.widths.clone()).with_bias_bound(approx_bias_bound(dim));
    let mut rng = rng_from_seed(seed);
    let check = probe_cloud(dim, SELECTION_POINTS, rng.gen())?;
    let mut candidates = Vec::with_capacity(budget.restarts + 2);
    if let Some(w) = warm {
        if w.arch().input_dim != dim || w.arch().output_dim != 1 || w.arch().bias_bound != arch.bias_bound {
            return Err(Error::Dimension(
                "warm start does not match the approximation setting".into(),
            ));
        }
        let widened = w.widen(&budget.widths, rng.gen())?;
        candidates.push(fit_once(target, widened.clone(), budget, &mut rng)?);
        candidates.push(widened);
    }
    for _ in 0..budget.restarts {
        let fresh = NetworkParams::init_with(arch.clone(), rng.gen(), budget.init)?;
        candidates.push(fit_once(target, fresh, budget, &mut rng)?);
    }
    let mut best: Option<(f64, NetworkParams)> = None;
    for params in candidates {
        let (sup, _) = sup_and_rmse(&params, target, &check)?;
        if best.as_ref().is_none_or(|(b, _)| sup < *b) {
            best = Some((sup, params));
        }
    }
    let (_, params) = best.expect("at least one candidate");
    let probes = probe_cloud(dim, budget.probe_points, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let (sup_error, rmse) = sup_and_rmse(&params, target, &probes)?;
    Ok(ApproxProbe {
        target: target.clone(),
        params,
        sup_error,
        rmse,
    })
}

/// Median over `seeds` of the sup error, for each width in `widths` (ascending;
/// depth and other settings from `base`). Per seed the sweep is nested: each
/// width starts from the previous width's fit, so a wider budget always
/// contains the narrower solution.
pub fn width_sweep(
    target: &ApproxTarget,
    dim: usize,
    widths: &[usize],
    seeds: &[u64],
    base: &ApproxBudget,
) -> Result<Vec<(usize, f64)>> {
    if widths.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("width sweep needs ascending widths".into()));
    }
    let depth = base.widths.len().max(1);
    let mut errs = vec![Vec::with_capacity(seeds.len()); widths.len()];
    for &s in seeds {
        let mut prev: Option<NetworkParams> = None;
        for (k, &w) in widths.iter().enumerate() {
            let budget = ApproxBudget {
                widths: vec![w; depth],
                ..base.clone()
            };
            let probe = approx_harness_from(target, dim, &budget, s, prev.as_ref())?;
            errs[k].push(probe.sup_error);
            prev = Some(probe.params);
        }
    }
    Ok(widths.iter().copied().zip(errs.into_iter().map(median)).collect())
}

pub fn median(mut v: Vec<f64>) -> f64 {
    assert!(!v.is_empty(), "median of empty set");
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::{FnMap, IdentityMap};

    #[test]
    fn mse_zero_for_exact_map() {
        let spec = SourceSpec::uniform_cube(3);
        let m = GroundTruthMap::CoordwiseExp;
        assert_eq!(holdout_mse(&m.clone(), &m, &spec, 500, 7).unwrap(), 0.0);
    }

    #[test]
    fn mse_of_translated_map() {
        let t = [0.3, -0.4];
        let map = GroundTruthMap::CoordwiseSignedSquare;
        let shifted = FnMap(|x: &[f64]| {
            let v = GroundTruthMap::CoordwiseSignedSquare.value(x);
            vec![v[0] + t[0], v[1] + t[1]]
        });
        let mse = holdout_mse(&shifted, &map, &SourceSpec::uniform_cube(2), 300, 1).unwrap();
        assert!((mse - 0.25).abs() < 1e-12);
    }

    #[test]
    fn identity_mse_matches_quadrature() {
        // E (x − T₀(x))² for x ~ U[−1, 1], by composite Simpson
        let map = GroundTruthMap::CoordwiseExp;
        let f = |x: f64| (x - map.scalar(x)).powi(2) / 2.0;
        let k = 2000;
        let h = 2.0 / k as f64;
        let mut s = f(-1.0) + f(1.0);
        for i in 1..k {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(-1.0 + i as f64 * h);
        }
        let exact = s * h / 3.0;

        let x = sample(&SourceSpec::uniform_cube(1), 20_000, 11).unwrap();
        let errs: Vec<f64> = x.iter().map(|p| (p[0] - map.scalar(p[0])).powi(2)).collect();
        let mean = errs.iter().sum::<f64>() / errs.len() as f64;
        let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (errs.len() - 1) as f64;
        let sigma = (var / errs.len() as f64).sqrt();
        let mse = map_mse(&IdentityMap, &map, &x).unwrap();
        assert!((mse - mean).abs() < 1e-15);
        assert!(
            (mse - exact).abs() < 3.0 * sigma,
            "mse {mse} exact {exact} sigma {sigma}"
        );
    }

    #[test]
    fn discrete_matching_lower_bounds_other_pairings() {
        let x = sample(&SourceSpec::uniform_cube(2), 60, 1).unwrap();
        let y = target_cloud(2);
        let cmp = compare_to_discrete(&IdentityMap, &x, &y).unwrap();
        assert_eq!(cmp.quad_cost_gen, 0.0);
        // greedy pairing of G(x_i) = x_i with the nearest unused y
        let mut used = vec![false; y.len()];
        let mut greedy = 0.0;
        for p in x.iter() {
            let (j, c) = (0..y.len())
                .filter(|&j| !used[j])
                .map(|j| (j, sq_dist(p, y.point(j))))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            used[j] = true;
            greedy += c;
        }
        assert!(cmp.quad_cost_matching <= greedy / x.len() as f64 + 1e-12);
    }

    fn target_cloud(seed: u64) -> EmpiricalMeasure {
        crate::datasets::apply_map(
            &GroundTruthMap::CoordwiseExp,
            &sample(&SourceSpec::uniform_cube(2), 60, seed).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn matching_interpolant_has_matching_cost() {
        let x = sample(&SourceSpec::uniform_cube(2), 60, 3).unwrap();
        let y = target_cloud(4);
        let m = solve_assignment(&x, &y, CostKind::SquaredEuclidean).unwrap();
        let table: Vec<(Vec<f64>, Vec<f64>)> = m
            .permutation
            .iter()
            .enumerate()
            .map(|(i, &j)| (x.point(i).to_vec(), y.point(j).to_vec()))
            .collect();
        let interp = FnMap(move |p: &[f64]| table.iter().find(|(a, _)| a == p).unwrap().1.clone());
        let cmp = compare_to_discrete(&interp, &x, &y).unwrap();
        assert!((cmp.quad_cost_gen - cmp.quad_cost_matching).abs() < 1e-12);
        assert!(cmp.w1_gen_vs_target < 1e-12);
    }

    #[test]
    fn comparison_size_checks() {
        let x = sample(&SourceSpec::uniform_cube(2), 10, 1).unwrap();
        let y = sample(&SourceSpec::uniform_cube(2), 9, 2).unwrap();
        assert!(matches!(
            compare_to_discrete(&IdentityMap, &x, &y),
            Err(Error::Dimension(_))
        ));
        let big = sample(&SourceSpec::uniform_cube(1), DISCRETE_MAX_POINTS + 1, 1).unwrap();
        assert!(matches!(
            compare_to_discrete(&IdentityMap, &big, &big),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn report_csv_layout() {
        let r = EvalReport {
            n: 500,
            d: 2,
            seed: 1,
            steps: 800,
            holdout_mse: None,
            comparison: DiscreteComparison {
                quad_cost_gen: 0.5,
                quad_cost_matching: 0.25,
                w1_gen_vs_target: 0.125,
            },
        };
        assert_eq!(r.to_csv(), format!("{EVAL_HEADER}\n500,2,1,800,,1.25e-1,5e-1,2.5e-1\n"));
    }

    #[test]
    fn non_lipschitz_targets_rejected() {
        let steep = ApproxTarget::Affine {
            slope: vec![1.2, 0.0],
            offset: 0.0,
        };
        assert!(approx_harness(&steep, 2, &ApproxBudget::default(), 0).is_err());
        let bad_piece = ApproxTarget::MaxAffine {
            pieces: vec![(vec![0.0, 1.0], 0.0), (vec![1.0, 1.0], 0.0)],
        };
        assert!(bad_piece.validate(2).is_err());
        assert!(ApproxTarget::MaxCoords.validate(1).is_err());
        for t in suite(2).iter().chain(&suite(3)) {
            t.validate(t_dim(t)).unwrap();
        }
    }

    fn t_dim(t: &ApproxTarget) -> usize {
        match t {
            ApproxTarget::Affine { slope, .. } => slope.len(),
            ApproxTarget::MaxAffine { pieces } => pieces[0].0.len(),
            _ => 2,
        }
    }

    #[test]
    fn affine_target_fits_with_tiny_budget() {
        let t = ApproxTarget::Affine {
            slope: vec![0.6, -0.8],
            offset: 0.1,
        };
        let budget = ApproxBudget {
            widths: vec![],
            steps: 1500,
            lr: 0.02,
            ..ApproxBudget::default()
        };
        let probe = approx_harness(&t, 2, &budget, 1).unwrap();
        assert!(probe.sup_error < 1e-3, "sup error {}", probe.sup_error);
    }

    #[test]
    fn max_of_coordinates_fits() {
        let budget = ApproxBudget {
            widths: vec![4],
            steps: 4000,
            lr: 0.02,
            ..ApproxBudget::default()
        };
        let probe = approx_harness(&ApproxTarget::MaxCoords, 2, &budget, 2).unwrap();
        assert!(probe.sup_error < 1e-2, "sup error {}", probe.sup_error);
    }

    #[test]
    fn warm_start_never_loses_on_the_selection_sample() {
        let budget = ApproxBudget {
            widths: vec![4, 4],
            steps: 200,
            probe_points: 500,
            ..ApproxBudget::default()
        };
        let t = ApproxTarget::MaxCoords;
        let small = approx_harness(&t, 2, &budget, 3).unwrap();
        let wide_budget = ApproxBudget {
            widths: vec![8, 8],
            ..budget.clone()
        };
        let wide = approx_harness_from(&t, 2, &wide_budget, 3, Some(&small.params)).unwrap();
        assert_eq!(wide.params.arch().widths, vec![8, 8]);
        // the untrained widened copy is a candidate, and both calls share the selection sample
        let (small_sel, _) = sup_and_rmse(
            &small.params,
            &t,
            &probe_cloud(2, SELECTION_POINTS, rng_from_seed(3).gen()).unwrap(),
        )
        .unwrap();
        let (wide_sel, _) = sup_and_rmse(
            &wide.params,
            &t,
            &probe_cloud(2, SELECTION_POINTS, rng_from_seed(3).gen()).unwrap(),
        )
        .unwrap();
        assert!(wide_sel <= small_sel);
        assert!(width_sweep(&t, 2, &[8, 4], &[0], &budget).is_err());
    }

    #[test]
    fn median_values() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn probe_cloud_has_corners() {
        let p = probe_cloud(2, 5, 0).unwrap();
        assert_eq!(p.rows(), 9);
        assert_eq!(p.row(0), &[-1.0, -1.0]);
        assert_eq!(p.row(3), &[1.0, 1.0]);
    }
}
