//! Minimal reverse-mode differentiation over `channels x length` tensors.
//!
//! A [`Graph`] is rebuilt for every forward pass. Each op evaluates eagerly,
//! records what it needs for the reverse pass, and returns a [`Var`] handle.
//! [`Graph::backward`] walks the tape in reverse and returns [`Gradients`];
//! parameter gradients are then accumulated into their stores by the
//! caller, which lets independent batch elements run on separate tapes and
//! be reduced in a fixed order.
//!
//! ```
//! use abas::autodiff::{Graph, Tensor};
//!
//! let mut g = Graph::<f64>::new();
//! let x = g.input(Tensor::scalar(0.0), true);
//! let y = g.tanh(x).unwrap();
//! let grads = g.backward(y).unwrap();
//! assert_eq!(grads.wrt(x).unwrap().item(), 1.0);
//! ```

pub mod conv;
mod gradcheck;
mod graph;
mod scalar;
mod tensor;

pub use conv::{ConvGeometry, TConvGeometry};
pub use gradcheck::{grad_check, GradCheckOptions, GradCheckReport};
pub use graph::{Gradients, Graph, ParamRef, Var};
pub use scalar::{flush_subnormals, Scalar};
pub use tensor::Tensor;
