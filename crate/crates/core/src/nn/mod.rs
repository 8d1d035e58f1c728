//! GroupSort networks, their gradients, and optimizers.

pub mod adam;
pub mod checkpoint;
pub mod groupsort;
pub mod network;
pub mod optim;

pub use adam::{AdamConfig, AdamState};
pub use groupsort::{groupsort2, groupsort2_backward};
pub use network::{Architecture, InitScheme, Layer, NetworkParams, ParamGrads, Tape};
pub use optim::{Optimizer, OptimizerKind};
