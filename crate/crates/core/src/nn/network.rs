//! GroupSort feed-forward networks with exact reverse-mode gradients.
//!
//! A network of depth `l` computes `h_l ∘ ... ∘ h_1` where `h_1(x) = W_1 x + b_1`
//! and `h_i(x) = W_i σ(x) + b_i` for `i ≥ 2`, `σ` being [`groupsort2`]. The output
//! may additionally be scaled by `L` and radially projected onto the ball of
//! radius `L`, which is how generators are made `L`-Lipschitz and bounded.
//!
//! Everything runs on batches (one sample per row) so the affine layers are a
//! single GEMM each; the single-sample entry points are thin wrappers.
//!
//! [`groupsort2`]: super::groupsort::groupsort2

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use super::groupsort::{sort_pairs_in_place, unsort_pairs_in_place, GROUP_SIZE};
use crate::error::{Error, Result};
use crate::lipschitz::{project_params, ConstraintSpec};
use crate::tensor::{gemm, Matrix, Op, Vector};

/// Shape and constraint metadata of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    pub input_dim: usize,
    pub output_dim: usize,
    /// Hidden widths `w_1 .. w_{l-1}`; empty for a single affine layer.
    pub widths: Vec<usize>,
    /// Bound `C` on every bias coordinate.
    pub bias_bound: f64,
    /// Output multiplier `L` (1 for discriminators).
    pub output_scale: f64,
    /// Project the scaled output onto the ball of radius `output_scale`.
    pub project_output: bool,
}

impl Architecture {
    pub fn new(input_dim: usize, output_dim: usize, widths: Vec<usize>) -> Self {
        Architecture {
            input_dim,
            output_dim,
            widths,
            bias_bound: 1.0,
            output_scale: 1.0,
            project_output: false,
        }
    }

    pub fn with_bias_bound(mut self, c: f64) -> Self {
        self.bias_bound = c;
        self
    }

    /// Generator output map `x -> P_{B_L}(L x)`.
    pub fn with_output_ball(mut self, radius: f64) -> Self {
        self.output_scale = radius;
        self.project_output = true;
        self
    }

    pub fn depth(&self) -> usize {
        self.widths.len() + 1
    }

    pub fn grouping_size(&self) -> usize {
        GROUP_SIZE
    }

    /// `(rows, cols)` of every weight matrix, in layer order.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.widths.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.widths);
        dims.push(self.output_dim);
        dims.windows(2).map(|w| (w[1], w[0])).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::Config("network dimensions must be positive".into()));
        }
        if let Some(w) = self.widths.iter().find(|&&w| w == 0 || w % GROUP_SIZE != 0) {
            return Err(Error::Config(format!(
                "hidden width {w} is not a positive multiple of the grouping size {GROUP_SIZE}"
            )));
        }
        if !(self.bias_bound > 0.0 && self.bias_bound.is_finite()) {
            return Err(Error::Config(format!(
                "bias bound must be positive, got {}",
                self.bias_bound
            )));
        }
        if !(self.output_scale >= 1.0 && self.output_scale.is_finite()) {
            return Err(Error::Config(format!(
                "output scale must be >= 1, got {}",
                self.output_scale
            )));
        }
        Ok(())
    }
}

/// How fresh weights are drawn. Biases always start at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitScheme {
    /// Uniform in `[−1/√fan_in, 1/√fan_in]`, then projected.
    #[default]
    Uniform,
    /// First-layer rows uniform then scaled to unit Euclidean norm; every later
    /// row has a single `±1` entry at a random column.
    SparseSigned,
}

impl InitScheme {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(InitScheme::Uniform),
            "sparse_signed" => Ok(InitScheme::SparseSigned),
            _ => Err(Error::Config(format!("unknown init `{s}` (uniform, sparse_signed)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InitScheme::Uniform => "uniform",
            InitScheme::SparseSigned => "sparse_signed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Matrix,
    pub bias: Vector,
}

impl Layer {
    fn zeros(rows: usize, cols: usize) -> Self {
        Layer {
            weight: Matrix::zeros(rows, cols),
            bias: Vector::zeros(rows),
        }
    }
}

/// Network parameters `θ = (W_1..W_l, b_1..b_l)` together with their architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    arch: Architecture,
    layers: Vec<Layer>,
}

/// Gradients with the same layout as [`NetworkParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub layers: Vec<Layer>,
}

impl ParamGrads {
    pub fn zeros(arch: &Architecture) -> Self {
        ParamGrads {
            layers: arch
                .layer_shapes()
                .into_iter()
                .map(|(r, c)| Layer::zeros(r, c))
                .collect(),
        }
    }

    pub fn slices(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
    }

    pub fn is_finite(&self) -> bool {
        self.slices().all(|s| s.iter().all(|v| v.is_finite()))
    }

    pub fn scale(&mut self, alpha: f64) {
        for l in &mut self.layers {
            l.weight.as_mut_slice().iter_mut().for_each(|v| *v *= alpha);
            l.bias.as_mut_slice().iter_mut().for_each(|v| *v *= alpha);
        }
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: f64, other: &ParamGrads) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weight.as_mut_slice().iter_mut().zip(b.weight.as_slice()) {
                *x += alpha * y;
            }
            for (x, y) in a.bias.as_mut_slice().iter_mut().zip(b.bias.as_slice()) {
                *x += alpha * y;
            }
        }
    }
}

/// Forward intermediates needed by [`NetworkParams::backward_batch`].
#[derive(Debug, Clone)]
pub struct Tape {
    batch: usize,
    /// Input of every affine layer (post-activation for layers after the first).
    layer_inputs: Vec<Matrix>,
    /// Per layer after the first: pair swaps of the activation feeding it.
    swaps: Vec<Vec<bool>>,
    /// Network output before the scaling / ball projection.
    raw_output: Matrix,
    /// Rows whose scaled output was radially projected.
    projected: Vec<bool>,
}

impl Tape {
    pub fn batch_size(&self) -> usize {
        self.batch
    }

    pub fn depth(&self) -> usize {
        self.layer_inputs.len()
    }

    pub fn raw_output(&self) -> &Matrix {
        &self.raw_output
    }

    pub fn projected(&self) -> &[bool] {
        &self.projected
    }
}

impl NetworkParams {
    /// Assembles a network from explicit layers, checking that the shapes chain.
    pub fn from_layers(arch: Architecture, layers: Vec<Layer>) -> Result<Self> {
        arch.validate()?;
        let shapes = arch.layer_shapes();
        if shapes.len() != layers.len() {
            return Err(Error::Dimension(format!(
                "architecture has {} layers, got {}",
                shapes.len(),
                layers.len()
            )));
        }
        for (i, (layer, &(r, c))) in layers.iter().zip(&shapes).enumerate() {
            if layer.weight.shape() != (r, c) || layer.bias.dim() != r {
                return Err(Error::Dimension(format!(
                    "layer {i}: expected weight {r}x{c} and bias {r}, got {:?} and {}",
                    layer.weight.shape(),
                    layer.bias.dim()
                )));
            }
            if !layer.weight.is_finite() || layer.bias.as_slice().iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("layer {i} has non-finite parameters")));
            }
        }
        Ok(NetworkParams { arch, layers })
    }

    /// Seeded initialization with [`InitScheme::Uniform`].
    pub fn init(arch: Architecture, seed: u64) -> Result<Self> {
        Self::init_with(arch, seed, InitScheme::Uniform)
    }

    /// Seeded initialization with zero biases, projected onto the constraint set
    /// so the fresh network is already 1-Lipschitz.
    pub fn init_with(arch: Architecture, seed: u64, scheme: InitScheme) -> Result<Self> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = arch
            .layer_shapes()
            .into_iter()
            .enumerate()
            .map(|(i, (rows, cols))| {
                let a = 1.0 / (cols as f64).sqrt();
                let dist = Uniform::new_inclusive(-a, a);
                let mut data: Vec<f64> = (0..rows * cols).map(|_| dist.sample(&mut rng)).collect();
                if scheme == InitScheme::SparseSigned {
                    if i == 0 {
                        for row in data.chunks_mut(cols) {
                            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                            if norm > 0.0 {
                                row.iter_mut().for_each(|v| *v /= norm);
                            }
                        }
                    } else {
                        for row in data.chunks_mut(cols) {
                            let k = rng.gen_range(0..cols);
                            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                            row.iter_mut().for_each(|v| *v = 0.0);
                            row[k] = sign;
                        }
                    }
                }
                Layer {
                    weight: Matrix::from_vec(rows, cols, data).expect("shape"),
                    bias: Vector::zeros(rows),
                }
            })
            .collect();
        let mut params = NetworkParams { arch, layers };
        let spec = ConstraintSpec::for_network(&params);
        project_params(&mut params, &spec);
        Ok(params)
    }

    /// Embeds the network in one with wider hidden layers computing the same
    /// function. Added units get fresh incoming weights and zero outgoing
    /// weights, so they can start learning without changing the output.
    pub fn widen(&self, widths: &[usize], seed: u64) -> Result<Self> {
        let old = &self.arch.widths;
        if widths.len() != old.len() {
            return Err(Error::Dimension(format!(
                "cannot widen {} hidden layers into {}",
                old.len(),
                widths.len()
            )));
        }
        for (&w0, &w) in old.iter().zip(widths) {
            if w < w0 || (w > w0 && w0 % 2 == 1) {
                return Err(Error::Dimension(format!("cannot widen a layer of width {w0} to {w}")));
            }
        }
        let arch = Architecture {
            widths: widths.to_vec(),
            ..self.arch.clone()
        };
        let mut wide = Self::init_with(arch, seed, InitScheme::Uniform)?;
        for (big, small) in wide.layers.iter_mut().zip(&self.layers) {
            let (r0, c0) = small.weight.shape();
            let cols = big.weight.cols();
            for i in 0..r0 {
                let row = &mut big.weight.as_mut_slice()[i * cols..(i + 1) * cols];
                row[..c0].copy_from_slice(small.weight.row(i));
                row[c0..].iter_mut().for_each(|v| *v = 0.0);
            }
            big.bias.as_mut_slice()[..r0].copy_from_slice(small.bias.as_slice());
        }
        Ok(wide)
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.arch.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.arch.output_dim
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.as_slice().len() + l.bias.dim())
            .sum()
    }

    /// All parameter tensors in a fixed order (weight then bias, per layer).
    pub fn slices_mut(&mut self) -> impl Iterator<Item = &mut [f64]> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
    }

    pub fn slices(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
    }

    /// The same network without output scaling or ball projection.
    pub fn unscaled(&self) -> NetworkParams {
        let mut raw = self.clone();
        raw.arch.output_scale = 1.0;
        raw.arch.project_output = false;
        raw
    }

    pub fn forward(&self, x: &Vector, record: bool) -> Result<(Vector, Option<Tape>)> {
        let batch = Matrix::from_vec(1, x.dim(), x.as_slice().to_vec())?;
        let (y, tape) = self.forward_batch(&batch, record)?;
        Ok((Vector::from(y.row(0).to_vec()), tape))
    }

    /// Evaluates the network on every row of `x`.
    pub fn forward_batch(&self, x: &Matrix, record: bool) -> Result<(Matrix, Option<Tape>)> {
        if x.cols() != self.arch.input_dim {
            return Err(Error::Dimension(format!(
                "network expects inputs of dimension {}, got {}",
                self.arch.input_dim,
                x.cols()
            )));
        }
        let batch = x.rows();
        let mut layer_inputs = Vec::new();
        let mut swaps = Vec::new();
        let mut act = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            if i > 0 {
                let mut s = if record {
                    vec![false; act.as_slice().len() / GROUP_SIZE]
                } else {
                    Vec::new()
                };
                sort_pairs_in_place(act.as_mut_slice(), record.then_some(s.as_mut_slice()));
                if record {
                    swaps.push(s);
                }
            }
            let mut z = Matrix::zeros(batch, layer.weight.rows());
            let b = layer.bias.as_slice();
            for row in z.rows_mut() {
                row.copy_from_slice(b);
            }
            gemm(1.0, &act, Op::N, &layer.weight, Op::T, 1.0, &mut z);
            let input = std::mem::replace(&mut act, z);
            if record {
                layer_inputs.push(input);
            }
        }

        let raw_output = act;
        let mut y = raw_output.clone();
        let mut projected = vec![false; batch];
        let scale = self.arch.output_scale;
        if scale != 1.0 || self.arch.project_output {
            for (row, flag) in y.rows_mut().zip(projected.iter_mut()) {
                row.iter_mut().for_each(|v| *v *= scale);
                if self.arch.project_output {
                    let norm = crate::tensor::l2_norm(row);
                    if norm > scale {
                        let f = scale / norm;
                        row.iter_mut().for_each(|v| *v *= f);
                        *flag = true;
                    }
                }
            }
        }
        if !y.is_finite() {
            return Err(Error::Numeric("network output".into()));
        }

        let tape = record.then_some(Tape {
            batch,
            layer_inputs,
            swaps,
            raw_output,
            projected,
        });
        Ok((y, tape))
    }

    pub fn backward(&self, tape: &Tape, upstream: &Vector) -> Result<(ParamGrads, Vector)> {
        let up = Matrix::from_vec(1, upstream.dim(), upstream.as_slice().to_vec())?;
        let (grads, gx) = self.backward_batch(tape, &up)?;
        Ok((grads, Vector::from(gx.row(0).to_vec())))
    }

    /// Gradients of `Σ_rows <upstream_row, output_row>` with respect to every
    /// parameter (summed over the batch) and to every input row.
    pub fn backward_batch(&self, tape: &Tape, upstream: &Matrix) -> Result<(ParamGrads, Matrix)> {
        let (grads, gx) = self.backward_impl(tape, upstream, true)?;
        Ok((grads.expect("parameter gradients requested"), gx))
    }

    /// Like [`backward_batch`](Self::backward_batch) but only returns the input gradient.
    pub fn input_gradient(&self, tape: &Tape, upstream: &Matrix) -> Result<Matrix> {
        Ok(self.backward_impl(tape, upstream, false)?.1)
    }

    fn backward_impl(&self, tape: &Tape, upstream: &Matrix, want_params: bool) -> Result<(Option<ParamGrads>, Matrix)> {
        self.check_tape(tape)?;
        if upstream.shape() != (tape.batch, self.arch.output_dim) {
            return Err(Error::Dimension(format!(
                "upstream gradient is {:?}, expected ({}, {})",
                upstream.shape(),
                tape.batch,
                self.arch.output_dim
            )));
        }

        let mut delta = upstream.clone();
        let scale = self.arch.output_scale;
        if scale != 1.0 || self.arch.project_output {
            for (i, g) in delta.rows_mut().enumerate() {
                if tape.projected[i] {
                    // d/dv [L v / |v|] = L (I/|v| - v vᵀ/|v|³)
                    let v = tape.raw_output.row(i);
                    let norm = crate::tensor::l2_norm(v);
                    let vg = crate::tensor::dot(v, g);
                    let inv3 = vg / (norm * norm * norm);
                    for (gj, vj) in g.iter_mut().zip(v) {
                        *gj = scale * (*gj / norm - vj * inv3);
                    }
                } else {
                    g.iter_mut().for_each(|gj| *gj *= scale);
                }
            }
        }

        let mut grads = want_params.then(|| ParamGrads::zeros(&self.arch));
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            if let Some(grads) = grads.as_mut() {
                let g = &mut grads.layers[i];
                gemm(1.0, &delta, Op::T, &tape.layer_inputs[i], Op::N, 0.0, &mut g.weight);
                let gb = g.bias.as_mut_slice();
                for row in delta.row_iter() {
                    for (b, d) in gb.iter_mut().zip(row) {
                        *b += d;
                    }
                }
            }
            let mut prev = Matrix::zeros(tape.batch, layer.weight.cols());
            gemm(1.0, &delta, Op::N, &layer.weight, Op::N, 0.0, &mut prev);
            if i > 0 {
                unsort_pairs_in_place(prev.as_mut_slice(), &tape.swaps[i - 1]);
            }
            delta = prev;
        }
        Ok((grads, delta))
    }

    fn check_tape(&self, tape: &Tape) -> Result<()> {
        let stale = tape.layer_inputs.len() != self.layers.len()
            || tape.swaps.len() + 1 != self.layers.len()
            || tape.raw_output.shape() != (tape.batch, self.arch.output_dim)
            || tape
                .layer_inputs
                .iter()
                .zip(&self.layers)
                .any(|(inp, l)| inp.shape() != (tape.batch, l.weight.cols()));
        if stale {
            return Err(Error::Dimension("tape does not match network shape".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lipschitz::{norm_2_inf, norm_inf};
    use rand::Rng;

    fn two_layer() -> NetworkParams {
        let arch = Architecture::new(2, 1, vec![2]).with_bias_bound(10.0);
        NetworkParams::from_layers(
            arch,
            vec![
                Layer {
                    weight: Matrix::identity(2),
                    bias: Vector::zeros(2),
                },
                Layer {
                    weight: Matrix::from_rows(&[[1.0, 1.0]]).unwrap(),
                    bias: Vector::zeros(1),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn widening_keeps_the_function() {
        let arch = Architecture::new(2, 2, vec![4, 6])
            .with_bias_bound(3.0)
            .with_output_ball(2.0);
        let mut small = NetworkParams::init(arch, 3).unwrap();
        small.layers[0].bias = Vector::new(vec![0.5, -0.2, 0.1, 0.0]).unwrap();
        let wide = small.widen(&[10, 6], 8).unwrap();
        assert_eq!(wide.arch().widths, vec![10, 6]);
        assert!(ConstraintSpec::for_network(&wide).is_satisfied(&wide, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs = Matrix::from_vec(50, 2, (0..100).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap();
        let (a, _) = small.forward_batch(&xs, false).unwrap();
        let (b, _) = wide.forward_batch(&xs, false).unwrap();
        assert_eq!(a, b);
        assert!(small.widen(&[2, 6], 0).is_err());
        assert!(small.widen(&[4], 0).is_err());
    }

    fn linear(weight: Matrix, bias: Vec<f64>) -> NetworkParams {
        let arch = Architecture::new(weight.cols(), weight.rows(), vec![]).with_bias_bound(10.0);
        NetworkParams::from_layers(
            arch,
            vec![Layer {
                weight,
                bias: Vector::from(bias),
            }],
        )
        .unwrap()
    }

    #[test]
    fn identity_affine_layer() {
        let net = linear(Matrix::identity(2), vec![0.0, 0.0]);
        let (y, tape) = net.forward(&Vector::from(vec![0.3, -0.2]), false).unwrap();
        assert_eq!(y.as_slice(), &[0.3, -0.2]);
        assert!(tape.is_none());
    }

    #[test]
    fn hand_computed_two_layer() {
        let (y, _) = two_layer().forward(&Vector::from(vec![1.0, 3.0]), false).unwrap();
        assert_eq!(y.as_slice(), &[4.0]);
    }

    #[test]
    fn output_ball_projection() {
        let arch = Architecture::new(2, 2, vec![])
            .with_bias_bound(10.0)
            .with_output_ball(2.0);
        let net = NetworkParams::from_layers(
            arch,
            vec![Layer {
                weight: Matrix::zeros(2, 2),
                bias: Vector::from(vec![3.0, 4.0]),
            }],
        )
        .unwrap();
        let (y, _) = net.forward(&Vector::from(vec![0.0, 0.0]), false).unwrap();
        assert!((y.as_slice()[0] - 1.2).abs() < 1e-15);
        assert!((y.as_slice()[1] - 1.6).abs() < 1e-15);
    }

    #[test]
    fn dimension_errors() {
        let net = two_layer();
        assert!(net.forward(&Vector::from(vec![1.0]), false).is_err());
        let (_, tape) = net.forward(&Vector::from(vec![1.0, 2.0]), true).unwrap();
        let other = linear(Matrix::identity(2), vec![0.0; 2]);
        assert!(other.backward(&tape.unwrap(), &Vector::from(vec![1.0, 1.0])).is_err());
    }

    #[test]
    fn linear_gradient_is_outer_product() {
        let net = linear(Matrix::from_rows(&[[0.5, -0.25]]).unwrap(), vec![0.1]);
        let x = Vector::from(vec![2.0, -3.0]);
        let (_, tape) = net.forward(&x, true).unwrap();
        let (g, gx) = net.backward(&tape.unwrap(), &Vector::from(vec![1.0])).unwrap();
        assert_eq!(g.layers[0].weight.as_slice(), x.as_slice());
        assert_eq!(g.layers[0].bias.as_slice(), &[1.0]);
        assert_eq!(gx.as_slice(), &[0.5, -0.25]);
    }

    #[test]
    fn odd_widths_rejected() {
        let arch = Architecture::new(2, 2, vec![3]);
        assert!(NetworkParams::init(arch, 0).is_err());
    }

    #[test]
    fn init_is_deterministic_and_feasible() {
        let arch = Architecture::new(3, 2, vec![8, 6]).with_bias_bound(0.5);
        let a = NetworkParams::init(arch.clone(), 7).unwrap();
        let b = NetworkParams::init(arch.clone(), 7).unwrap();
        let c = NetworkParams::init(arch, 8).unwrap();
        assert!(a
            .slices()
            .zip(b.slices())
            .all(|(x, y)| x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits())));
        assert_ne!(a, c);
        assert!(norm_2_inf(&a.layers()[0].weight) <= 1.0 + 1e-12);
        for l in &a.layers()[1..] {
            assert!(norm_inf(&l.weight) <= 1.0 + 1e-12);
        }
        for l in a.layers() {
            assert!(l.bias.as_slice().iter().all(|b| b.abs() <= 0.5));
        }
    }

    #[test]
    fn batch_rows_match_single_sample_calls() {
        let arch = Architecture::new(2, 2, vec![6, 4])
            .with_bias_bound(1.0)
            .with_output_ball(1.5);
        let net = NetworkParams::init(arch, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows: Vec<[f64; 2]> = (0..5)
            .map(|_| [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)])
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let up = Matrix::from_rows(&[[1.0, 0.5], [-1.0, 0.0], [0.3, 0.3], [2.0, -1.0], [0.0, 1.0]]).unwrap();
        let (y, tape) = net.forward_batch(&x, true).unwrap();
        let (g, gx) = net.backward_batch(&tape.unwrap(), &up).unwrap();
        let mut acc = ParamGrads::zeros(net.arch());
        for i in 0..5 {
            let (yi, ti) = net.forward(&Vector::from(x.row(i).to_vec()), true).unwrap();
            assert_eq!(yi.as_slice(), y.row(i));
            let (gi, gxi) = net.backward(&ti.unwrap(), &Vector::from(up.row(i).to_vec())).unwrap();
            for (a, b) in gxi.as_slice().iter().zip(gx.row(i)) {
                assert!((a - b).abs() < 1e-14);
            }
            acc.add_scaled(1.0, &gi);
        }
        for (a, b) in acc.slices().zip(g.slices()) {
            for (p, q) in a.iter().zip(b) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }
}
