mod common;

use common::*;
use otmap::nn::{groupsort2_backward, Architecture, Layer, NetworkParams};
use otmap::ot::TransportMap;
use otmap::tensor::{Matrix, Vector};
use otmap::training::{TrainConfig, TrainState};
use rand::Rng;

#[test]
fn random_nets_match_finite_differences() {
    let mut rng = rng(7);
    let mut checked = 0;
    let mut projected = 0;
    while checked < 40 {
        let ball = if rng.gen_bool(0.5) {
            Some(rng.gen_range(1.0..3.0))
        } else {
            None
        };
        let params = random_params(&mut rng, 8, ball);
        let x = random_point(&mut rng, params.input_dim(), 1.5);
        let u = random_point(&mut rng, params.output_dim(), 1.0);
        if let Some((err, proj)) = network_fd_check(&params, &x, &u) {
            assert!(err < 1e-5, "relative error {err}");
            checked += 1;
            projected += proj as usize;
        }
    }
    assert!(projected > 0 && projected < checked, "both output branches exercised");
}

#[test]
fn linear_layer_gradient_is_input() {
    let arch = Architecture::new(3, 1, vec![]);
    let layer = Layer {
        weight: Matrix::from_vec(1, 3, vec![0.2, -0.4, 0.1]).unwrap(),
        bias: Vector::new(vec![0.3]).unwrap(),
    };
    let net = NetworkParams::from_layers(arch, vec![layer]).unwrap();
    let x = Vector::new(vec![0.5, -1.0, 2.0]).unwrap();
    let (_, tape) = net.forward(&x, true).unwrap();
    let (g, gx) = net.backward(&tape.unwrap(), &Vector::new(vec![1.0]).unwrap()).unwrap();
    assert_eq!(g.layers[0].weight.as_slice(), x.as_slice());
    assert_eq!(g.layers[0].bias.as_slice(), &[1.0]);
    assert_eq!(gx.as_slice(), &[0.2, -0.4, 0.1]);
}

#[test]
fn groupsort_backward_transposes_the_swap() {
    let input = Vector::new(vec![1.0, 3.0]).unwrap();
    let g = groupsort2_backward(&input, &Vector::new(vec![0.7, -2.0]).unwrap()).unwrap();
    assert_eq!(g.as_slice(), &[-2.0, 0.7]);
}

fn small_state(seed: u64, lambda: f64) -> TrainState {
    let cfg = TrainConfig {
        widths: vec![6, 6],
        batch_size: 4,
        lambda,
        output_scale: 3.0,
        seed,
        ..TrainConfig::default()
    };
    TrainState::new(&cfg, 2, 16).unwrap()
}

fn batch(rng: &mut rand_chacha::ChaCha8Rng, m: usize, h: f64) -> Matrix {
    Matrix::from_vec(m, 2, (0..2 * m).map(|_| rng.gen_range(-h..h)).collect()).unwrap()
}

fn far_from_kinks(net: &NetworkParams, x: &Matrix) -> bool {
    x.row_iter().all(|r| {
        let n = naive_forward(net, r);
        n.min_gap > KINK_MARGIN && n.boundary_gap > KINK_MARGIN
    })
}

#[test]
fn discriminator_objective_gradient_on_four_points() {
    let mut rng = rng(11);
    let mut checked = 0;
    for seed in 0..20 {
        let state = small_state(seed, 10.0);
        let bx = batch(&mut rng, 4, 1.0);
        let by = batch(&mut rng, 4, 1.3);
        let gx = state.generator.apply_batch(&bx).unwrap();
        if !far_from_kinks(&state.discriminator, &gx) || !far_from_kinks(&state.discriminator, &by) {
            continue;
        }
        let (value, grads) = state.discriminator_gradient(&bx, &by).unwrap();
        assert!((value - state.disc_objective(&bx, &by).unwrap()).abs() < 1e-14);
        let err = param_fd_error(&state.discriminator, &grads, |d| {
            let mut s = state.clone();
            s.discriminator = d.clone();
            s.disc_objective(&bx, &by).unwrap()
        });
        assert!(err < 1e-5, "seed {seed}: relative error {err}");
        checked += 1;
    }
    assert!(checked >= 10, "only {checked} fixtures away from kinks");
}

#[test]
fn generator_loss_gradient_includes_penalty() {
    let mut rng = rng(12);
    let mut checked = 0;
    for seed in 0..20 {
        let state = small_state(seed, 10.0);
        let bx = batch(&mut rng, 4, 1.0);
        let gx = state.generator.apply_batch(&bx).unwrap();
        if !far_from_kinks(&state.generator, &bx) || !far_from_kinks(&state.discriminator, &gx) {
            continue;
        }
        let (losses, grads) = state.generator_gradient(&bx).unwrap();
        assert!((losses.total - losses.quad_cost - 10.0 * losses.ipm_term).abs() < 1e-12);
        let err = param_fd_error(&state.generator, &grads, |g| {
            let mut s = state.clone();
            s.generator = g.clone();
            s.loss_breakdown(&bx).unwrap().total
        });
        assert!(err < 1e-5, "seed {seed}: relative error {err}");
        checked += 1;
    }
    assert!(checked >= 10, "only {checked} fixtures away from kinks");
}
