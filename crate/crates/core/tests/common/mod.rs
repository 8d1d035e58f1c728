#![allow(dead_code)]

use otmap::nn::{Architecture, Layer, NetworkParams, ParamGrads};
use otmap::tensor::{Matrix, Vector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Forward pass written out from the definition, with the smallest pair gap
/// seen by any GroupSort and the distance of `‖L·N(x)‖` to `L`.
pub struct Naive {
    pub out: Vec<f64>,
    pub min_gap: f64,
    pub boundary_gap: f64,
    pub projected: bool,
}

pub fn naive_forward(params: &NetworkParams, x: &[f64]) -> Naive {
    let arch = params.arch();
    let mut h = x.to_vec();
    let mut min_gap = f64::INFINITY;
    for (i, layer) in params.layers().iter().enumerate() {
        if i > 0 {
            for pair in h.chunks_mut(2) {
                min_gap = min_gap.min((pair[0] - pair[1]).abs());
                if pair[1] > pair[0] {
                    pair.swap(0, 1);
                }
            }
        }
        let w = &layer.weight;
        h = (0..w.rows())
            .map(|r| w.row(r).iter().zip(&h).map(|(a, b)| a * b).sum::<f64>() + layer.bias.as_slice()[r])
            .collect();
    }
    let l = arch.output_scale;
    let mut out: Vec<f64> = h.iter().map(|v| l * v).collect();
    let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut projected = false;
    let mut boundary_gap = f64::INFINITY;
    if arch.project_output {
        boundary_gap = (norm - l).abs();
        if norm > l {
            projected = true;
            out.iter_mut().for_each(|v| *v *= l / norm);
        }
    }
    Naive {
        out,
        min_gap,
        boundary_gap,
        projected,
    }
}

/// Random architecture with `d, p ∈ 1..=3`, up to three hidden layers of even
/// width up to `max_width`, and random parameters with biases spread over
/// `[−C, C]`. Not projected.
pub fn random_params(rng: &mut ChaCha8Rng, max_width: usize, output_ball: Option<f64>) -> NetworkParams {
    let d = rng.gen_range(1..=3);
    let p = rng.gen_range(1..=3);
    let depth = rng.gen_range(0..=3);
    let widths: Vec<usize> = (0..depth).map(|_| 2 * rng.gen_range(1..=max_width / 2)).collect();
    let c = rng.gen_range(0.5..2.0);
    let mut arch = Architecture::new(d, p, widths).with_bias_bound(c);
    if let Some(l) = output_ball {
        arch = arch.with_output_ball(l);
    }
    let layers = arch
        .layer_shapes()
        .into_iter()
        .map(|(r, k)| Layer {
            weight: Matrix::from_vec(r, k, (0..r * k).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap(),
            bias: Vector::new((0..r).map(|_| rng.gen_range(-c..c)).collect()).unwrap(),
        })
        .collect();
    NetworkParams::from_layers(arch, layers).unwrap()
}

pub fn random_point(rng: &mut ChaCha8Rng, d: usize, half_width: f64) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-half_width..half_width)).collect()
}

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(1.0)
}

pub const FD_STEP: f64 = 1e-5;

fn coord(p: &mut NetworkParams, layer: usize, k: usize) -> &mut f64 {
    let l = &mut p.layers_mut()[layer];
    let n_w = l.weight.as_slice().len();
    if k < n_w {
        &mut l.weight.as_mut_slice()[k]
    } else {
        &mut l.bias.as_mut_slice()[k - n_w]
    }
}

/// Largest relative error between `grads` and central differences of
/// `f(θ)` taken over every parameter coordinate.
pub fn param_fd_error(params: &NetworkParams, grads: &ParamGrads, f: impl Fn(&NetworkParams) -> f64) -> f64 {
    let mut worst = 0.0_f64;
    let mut probe = params.clone();
    for (li, g) in grads.layers.iter().enumerate() {
        let analytic: Vec<f64> = g.weight.as_slice().iter().chain(g.bias.as_slice()).copied().collect();
        for (k, a) in analytic.into_iter().enumerate() {
            let orig = *coord(&mut probe, li, k);
            *coord(&mut probe, li, k) = orig + FD_STEP;
            let up = f(&probe);
            *coord(&mut probe, li, k) = orig - FD_STEP;
            let down = f(&probe);
            *coord(&mut probe, li, k) = orig;
            worst = worst.max(rel_err(a, (up - down) / (2.0 * FD_STEP)));
        }
    }
    worst
}

/// Minimum pair gap and ball-boundary distance a point must keep so that a
/// central difference at [`FD_STEP`] never crosses a kink.
pub const KINK_MARGIN: f64 = 1e-3;

/// Checks the library's backward pass at `x` against central differences of
/// `⟨u, N(x)⟩` computed with [`naive_forward`]. Returns `None` when `x` is too
/// close to a GroupSort tie or to the output ball boundary; otherwise the
/// largest relative error over parameters and input, and whether the output
/// was projected.
pub fn network_fd_check(params: &NetworkParams, x: &[f64], u: &[f64]) -> Option<(f64, bool)> {
    let base = naive_forward(params, x);
    if base.min_gap < KINK_MARGIN || base.boundary_gap < KINK_MARGIN {
        return None;
    }
    let f = |p: &NetworkParams, x: &[f64]| naive_forward(p, x).out.iter().zip(u).map(|(a, b)| a * b).sum::<f64>();
    let (y, tape) = params.forward(&Vector::new(x.to_vec()).unwrap(), true).unwrap();
    for (a, b) in y.as_slice().iter().zip(&base.out) {
        assert!(
            (a - b).abs() <= 1e-12 * b.abs().max(1.0),
            "forward disagrees with the definition"
        );
    }
    let (grads, gx) = params
        .backward(&tape.unwrap(), &Vector::new(u.to_vec()).unwrap())
        .unwrap();
    let mut worst = param_fd_error(params, &grads, |p| f(p, x));
    for k in 0..x.len() {
        let mut xp = x.to_vec();
        xp[k] += FD_STEP;
        let up = f(params, &xp);
        xp[k] -= 2.0 * FD_STEP;
        let down = f(params, &xp);
        worst = worst.max(rel_err(gx.as_slice()[k], (up - down) / (2.0 * FD_STEP)));
    }
    Some((worst, base.projected))
}

/// Projection of `v` onto the ℓ₁ ball by bisection on the soft threshold.
pub fn l1_bisection(v: &[f64], r: f64) -> Vec<f64> {
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= r {
        return v.to_vec();
    }
    let shrink = |t: f64| v.iter().map(|x| (x.abs() - t).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, v.iter().fold(0.0_f64, |m, x| m.max(x.abs())));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if shrink(mid) > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    v.iter().map(|x| x.signum() * (x.abs() - t).max(0.0)).collect()
}
