//! Operator norms, projection onto the 1-Lipschitz parameter set, and an
//! empirical Lipschitz auditor.
//!
//! The constraint set is
//!
//! - `‖W_1‖_{2,∞} ≤ 1` (every row of the first weight matrix in the unit l2 ball),
//! - `‖W_i‖_∞ ≤ 1` for `i ≥ 2` (every later row in the unit l1 ball),
//! - `‖b_i‖_∞ ≤ C`.
//!
//! Under it the network is 1-Lipschitz from `(R^d, ‖·‖_2)` to `(R^p, ‖·‖_∞)`:
//! the first layer is 2→∞ contractive, GroupSort and the later layers are
//! ∞→∞ contractive. That is the pairing [`audit_lipschitz`] measures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::nn::NetworkParams;
use crate::tensor::{inf_norm, l2_norm, Matrix};

/// Relative slack under which a row counts as feasible and is left untouched.
/// Makes projection exactly idempotent despite rounding in the projected norm.
const FEASIBILITY_SLACK: f64 = 1e-13;

/// `sup_{‖x‖_2 = 1} ‖W x‖_∞`, i.e. the largest row l2 norm.
pub fn norm_2_inf(w: &Matrix) -> f64 {
    w.row_iter().map(l2_norm).fold(0.0, f64::max)
}

/// `sup_{‖x‖_∞ = 1} ‖W x‖_∞`, i.e. the largest absolute row sum.
pub fn norm_inf(w: &Matrix) -> f64 {
    w.row_iter().map(l1_norm).fold(0.0, f64::max)
}

fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// How rows of the hidden weight matrices are brought into the unit l1 ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum L1Projection {
    /// Euclidean projection (sort and soft-threshold).
    #[default]
    Exact,
    /// Rescale the row by `r / ‖row‖_1`; feasible but not the nearest point.
    Rescale,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSpec {
    pub first_layer_norm_bound: f64,
    pub hidden_norm_bound: f64,
    pub bias_bound: f64,
    pub l1_projection: L1Projection,
}

impl ConstraintSpec {
    pub fn new(bias_bound: f64) -> Self {
        assert!(bias_bound > 0.0, "bias bound must be positive");
        ConstraintSpec {
            first_layer_norm_bound: 1.0,
            hidden_norm_bound: 1.0,
            bias_bound,
            l1_projection: L1Projection::Exact,
        }
    }

    pub fn for_network(params: &NetworkParams) -> Self {
        ConstraintSpec::new(params.arch().bias_bound)
    }

    pub fn with_l1_projection(mut self, method: L1Projection) -> Self {
        self.l1_projection = method;
        self
    }

    /// Whether `params` satisfies the constraints up to `tol` (relative on the
    /// norm bounds, absolute on biases).
    pub fn is_satisfied(&self, params: &NetworkParams, tol: f64) -> bool {
        params.layers().iter().enumerate().all(|(i, l)| {
            let (norm, bound) = if i == 0 {
                (norm_2_inf(&l.weight), self.first_layer_norm_bound)
            } else {
                (norm_inf(&l.weight), self.hidden_norm_bound)
            };
            norm <= bound * (1.0 + tol) && inf_norm(l.bias.as_slice()) <= self.bias_bound + tol
        })
    }
}

/// Projects `row` onto the l2 ball of radius `r` (radial scaling).
pub fn project_l2_ball(row: &mut [f64], r: f64) {
    let limit = r * (1.0 + FEASIBILITY_SLACK);
    let mut norm = l2_norm(row);
    while norm > limit {
        let f = r / norm;
        row.iter_mut().for_each(|v| *v *= f);
        norm = l2_norm(row);
    }
}

/// Euclidean projection of `row` onto the l1 ball of radius `r`.
///
/// Sorts magnitudes in decreasing order, finds the largest `ρ` with
/// `u_ρ > (Σ_{j≤ρ} u_j − r) / ρ`, and soft-thresholds every coordinate by
/// `τ = (Σ_{j≤ρ} u_j − r) / ρ`.
pub fn project_l1_ball(row: &mut [f64], r: f64) {
    let limit = r * (1.0 + FEASIBILITY_SLACK);
    if l1_norm(row) <= limit {
        return;
    }
    let mut u: Vec<f64> = row.iter().map(|v| v.abs()).collect();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - r) / (j + 1) as f64;
        if uj > t {
            tau = t;
        } else {
            break;
        }
    }
    for v in row.iter_mut() {
        *v = v.signum() * (v.abs() - tau).max(0.0);
    }
    rescale_l1(row, r);
}

fn rescale_l1(row: &mut [f64], r: f64) {
    let limit = r * (1.0 + FEASIBILITY_SLACK);
    let mut norm = l1_norm(row);
    while norm > limit {
        let f = r / norm;
        row.iter_mut().for_each(|v| *v *= f);
        norm = l1_norm(row);
    }
}

/// Projects every parameter onto the constraint set, in place. Idempotent.
pub fn project_params(params: &mut NetworkParams, spec: &ConstraintSpec) {
    for (i, layer) in params.layers_mut().iter_mut().enumerate() {
        for row in layer.weight.rows_mut() {
            if i == 0 {
                project_l2_ball(row, spec.first_layer_norm_bound);
            } else {
                match spec.l1_projection {
                    L1Projection::Exact => project_l1_ball(row, spec.hidden_norm_bound),
                    L1Projection::Rescale => rescale_l1(row, spec.hidden_norm_bound),
                }
            }
        }
        let c = spec.bias_bound;
        layer.bias.as_mut_slice().iter_mut().for_each(|b| *b = b.clamp(-c, c));
    }
}

/// Axis-aligned box `[lower, upper]` to draw audit points from.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn cube(dim: usize, half_width: f64) -> Self {
        BoxDomain {
            lower: vec![-half_width; dim],
            upper: vec![half_width; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn sample(&self, rng: &mut impl Rng, out: &mut [f64]) {
        for ((o, lo), hi) in out.iter_mut().zip(&self.lower).zip(&self.upper) {
            *o = if hi > lo { rng.gen_range(*lo..*hi) } else { *lo };
        }
    }

    fn clamp(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

#[derive(Debug, Clone)]
pub struct AuditReport {
    /// Largest observed `‖N(x) − N(y)‖_∞ / ‖x − y‖_2`.
    pub max_ratio: f64,
    pub argmax: Option<(Vec<f64>, Vec<f64>)>,
    /// Non-degenerate pairs evaluated.
    pub samples: usize,
    /// `‖W_1‖_{2,∞}` followed by `‖W_i‖_∞` for the later layers.
    pub layer_norms: Vec<f64>,
    pub max_bias: f64,
    /// Whether the parameters satisfy the 1-Lipschitz constraint set.
    pub constraints_satisfied: bool,
}

const AUDIT_CHUNK: usize = 2048;

/// Samples `n_pairs` point pairs in `domain` and reports the largest difference
/// quotient of the raw network (output scaling and projection removed).
///
/// Even-numbered pairs are drawn independently; odd-numbered pairs are local
/// perturbations, which probe the gradient norm rather than secants.
pub fn audit_lipschitz(params: &NetworkParams, domain: &BoxDomain, n_pairs: usize, seed: u64) -> AuditReport {
    assert_eq!(domain.dim(), params.input_dim(), "audit domain dimension");
    let raw = params.unscaled();
    let d = domain.dim();
    let diam = domain
        .lower
        .iter()
        .zip(&domain.upper)
        .map(|(l, u)| (u - l) * (u - l))
        .sum::<f64>()
        .sqrt();
    let local_radius = 1e-3 * diam.max(f64::MIN_POSITIVE);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio = 0.0_f64;
    let mut argmax = None;
    let mut samples = 0;
    let mut done = 0;
    while done < n_pairs {
        let chunk = AUDIT_CHUNK.min(n_pairs - done);
        let mut xs = Matrix::zeros(chunk, d);
        let mut ys = Matrix::zeros(chunk, d);
        for k in 0..chunk {
            domain.sample(&mut rng, xs.row_mut(k));
            if (done + k) % 2 == 0 {
                domain.sample(&mut rng, ys.row_mut(k));
            } else {
                let dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let scale = rng.gen_range(0.0..local_radius);
                let y = ys.row_mut(k);
                for ((yi, xi), di) in y.iter_mut().zip(xs.row(k)).zip(&dir) {
                    *yi = xi + scale * di;
                }
                domain.clamp(y);
            }
        }
        let (nx, _) = raw.forward_batch(&xs, false).expect("audit forward");
        let (ny, _) = raw.forward_batch(&ys, false).expect("audit forward");
        for k in 0..chunk {
            let den = crate::tensor::dist(xs.row(k), ys.row(k));
            if den == 0.0 {
                continue;
            }
            samples += 1;
            let num = nx
                .row(k)
                .iter()
                .zip(ny.row(k))
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            let ratio = num / den;
            if ratio > max_ratio {
                max_ratio = ratio;
                argmax = Some((xs.row(k).to_vec(), ys.row(k).to_vec()));
            }
        }
        done += chunk;
    }

    let layer_norms = params
        .layers()
        .iter()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                norm_2_inf(&l.weight)
            } else {
                norm_inf(&l.weight)
            }
        })
        .collect();
    let max_bias = params
        .layers()
        .iter()
        .map(|l| inf_norm(l.bias.as_slice()))
        .fold(0.0, f64::max);
    AuditReport {
        max_ratio,
        argmax,
        samples,
        layer_norms,
        max_bias,
        constraints_satisfied: ConstraintSpec::for_network(params).is_satisfied(params, 1e-12),
    }
}
