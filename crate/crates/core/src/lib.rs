#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angle;
pub mod coefficients;
pub mod error;
pub mod ode;
pub mod problem;
pub mod prufer;
pub mod wronskian;
pub mod spectra;
pub mod floquet;
pub mod stroboscopic;
pub mod experiments;
