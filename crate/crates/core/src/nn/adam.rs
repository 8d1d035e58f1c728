//! Adam with bias correction.

use super::network::{NetworkParams, ParamGrads};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        AdamConfig {
            lr,
            ..Default::default()
        }
    }
}

/// Moment accumulators, one buffer per parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, sizes: impl IntoIterator<Item = usize>) -> Self {
        let (m, v) = sizes.into_iter().map(|n| (vec![0.0; n], vec![0.0; n])).unzip();
        AdamState { config, m, v, t: 0 }
    }

    pub fn for_network(config: AdamConfig, params: &NetworkParams) -> Self {
        AdamState::new(config, params.slices().map(<[f64]>::len))
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// One descent step `θ ← θ - lr · m̂ / (√v̂ + ε)` over every tensor.
    pub fn update<'a, 'b>(
        &mut self,
        params: impl IntoIterator<Item = &'a mut [f64]>,
        grads: impl IntoIterator<Item = &'b [f64]>,
    ) -> Result<()> {
        let params: Vec<&mut [f64]> = params.into_iter().collect();
        let grads: Vec<&[f64]> = grads.into_iter().collect();
        let shapes_ok = params.len() == self.m.len()
            && grads.len() == self.m.len()
            && params
                .iter()
                .zip(&grads)
                .zip(&self.m)
                .all(|((p, g), m)| p.len() == m.len() && g.len() == m.len());
        if !shapes_ok {
            return Err(Error::Dimension(
                "adam: parameter/gradient shapes do not match state".into(),
            ));
        }

        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }

    pub fn step(&mut self, params: &mut NetworkParams, grads: &ParamGrads) -> Result<()> {
        self.update(params.slices_mut(), grads.slices())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_step(state: &mut AdamState, theta: &mut f64, g: f64) {
        let mut p = [*theta];
        state.update([&mut p[..]], [&[g][..]]).unwrap();
        *theta = p[0];
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m̂ = g, v̂ = g², so Δθ = -η g / (|g| + ε)
        let mut s = AdamState::new(AdamConfig::default(), [1]);
        let mut theta = 0.0;
        scalar_step(&mut s, &mut theta, 2.0);
        assert!((theta + 1e-3).abs() < 1e-6);
        assert_eq!(s.steps(), 1);
    }

    #[test]
    fn zero_gradient_is_no_move() {
        let mut s = AdamState::new(AdamConfig::default(), [1]);
        let mut theta = 0.7;
        scalar_step(&mut s, &mut theta, 0.0);
        assert_eq!(theta, 0.7);
    }

    #[test]
    fn constant_gradient_moves_monotonically() {
        let mut s = AdamState::new(AdamConfig::default(), [1]);
        let mut theta = 1.0;
        scalar_step(&mut s, &mut theta, -3.0);
        let after_one = theta;
        scalar_step(&mut s, &mut theta, -3.0);
        assert!(after_one > 1.0 && theta > after_one);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut s = AdamState::new(AdamConfig::default(), [2]);
        let mut p = [0.0];
        assert!(s.update([&mut p[..]], [&[1.0][..]]).is_err());
    }
}
