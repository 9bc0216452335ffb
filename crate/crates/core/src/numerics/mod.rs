//! Dense double-precision tensors, a reverse-mode tape, parameter
//! storage with Adadelta state, and a finite-difference gradient checker.

mod gradcheck;
mod optim;
mod params;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, relative_error, GradCheckReport, ParamCheck};
pub use optim::{adadelta_step, clip_global_norm, Adadelta};
pub use params::{ParamId, Parameter, ParameterStore, PARAM_FORMAT};
pub use tape::{Gradients, NodeId, Tape};
pub use tensor::Tensor;
