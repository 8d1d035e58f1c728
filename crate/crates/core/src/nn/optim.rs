//! Per-network optimizer choice.

use super::adam::{AdamConfig, AdamState};
use super::network::{NetworkParams, ParamGrads};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OptimizerKind {
    #[default]
    Adam,
    /// Plain gradient step `θ ← θ − lr · g`.
    Sgd,
}

impl OptimizerKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(OptimizerKind::Adam),
            "sgd" => Ok(OptimizerKind::Sgd),
            _ => Err(Error::Config(format!("unknown optimizer `{s}` (adam, sgd)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::Sgd => "sgd",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    adam: AdamState,
}

impl Optimizer {
    /// `config.lr` is used by both kinds; the moment settings only by Adam.
    pub fn new(kind: OptimizerKind, config: AdamConfig, params: &NetworkParams) -> Self {
        Optimizer {
            kind,
            adam: AdamState::for_network(config, params),
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn lr(&self) -> f64 {
        self.adam.config.lr
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.adam.config.lr = lr;
    }

    /// Descent step on `params`.
    pub fn step(&mut self, params: &mut NetworkParams, grads: &ParamGrads) -> Result<()> {
        match self.kind {
            OptimizerKind::Adam => self.adam.step(params, grads),
            OptimizerKind::Sgd => {
                let lr = self.lr();
                let shapes_ok = params.slices().zip(grads.slices()).all(|(p, g)| p.len() == g.len())
                    && params.slices().count() == grads.slices().count();
                if !shapes_ok {
                    return Err(Error::Dimension("sgd: parameter/gradient shapes differ".into()));
                }
                for (p, g) in params.slices_mut().zip(grads.slices()) {
                    for (pi, gi) in p.iter_mut().zip(g) {
                        *pi -= lr * gi;
                    }
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Architecture;

    #[test]
    fn sgd_moves_against_gradient() {
        let mut net = NetworkParams::init(Architecture::new(2, 1, vec![2]), 0).unwrap();
        let before: Vec<f64> = net.slices().flatten().copied().collect();
        let mut grads = ParamGrads::zeros(net.arch());
        grads.layers[0].bias.as_mut_slice()[1] = 2.0;
        let mut opt = Optimizer::new(OptimizerKind::Sgd, AdamConfig::with_lr(0.25), &net);
        opt.step(&mut net, &grads).unwrap();
        let after: Vec<f64> = net.slices().flatten().copied().collect();
        // layer 0 holds 4 weights then 2 biases
        for (i, (a, b)) in before.iter().zip(&after).enumerate() {
            let expected = if i == 5 { a - 0.5 } else { *a };
            assert_eq!(*b, expected);
        }
    }

    #[test]
    fn parse_names() {
        for k in [OptimizerKind::Adam, OptimizerKind::Sgd] {
            assert_eq!(OptimizerKind::parse(k.name()).unwrap(), k);
        }
        assert!(OptimizerKind::parse("rmsprop").is_err());
    }
}
