//! Finite-difference verification of every differentiable op, layer and
//! (optionally) the small end-to-end models, in 64-bit precision.

use std::cell::Cell;

use rand::RngExt;

use crate::autodiff::{grad_check, ConvGeometry, GradCheckOptions, GradCheckReport, Graph, TConvGeometry, Tensor, Var};
use crate::error::{Error, Result};
use crate::model::{ArchConfig, Discriminator, Generator};
use crate::nn::{Conv1d, GateKind, GatedConv, PRelu, PadMode, ParamStore, TConv1d};
use crate::rng::rng_for;
use crate::train::{generator_loss_graph, hinge_d_loss_graph};

/// Largest relative error accepted by the suite.
pub const TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteScope {
    /// Primitive ops and single layers.
    Layer,
    /// Layers plus the tiny generator, discriminator and losses.
    Model,
}

impl std::str::FromStr for SuiteScope {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "layer" => Ok(SuiteScope::Layer),
            "model" => Ok(SuiteScope::Model),
            other => Err(Error::invalid(format!("unknown scope {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteEntry {
    pub name: &'static str,
    pub report: GradCheckReport,
}

impl SuiteEntry {
    pub fn passed(&self) -> bool {
        self.report.max_rel_error <= TOLERANCE
    }
}

/// `channels x length` uniform values in `±[lo, 1)`, bounded away from
/// zero so kinks of piecewise-linear ops stay out of the difference stencil.
fn rand_tensor(seed: u64, tag: u64, channels: usize, length: usize, lo: f64) -> Tensor<f64> {
    let mut rng = rng_for(seed, &[0x9c, tag]);
    let data = (0..channels * length)
        .map(|_| {
            let m: f64 = rng.random_range(lo..1.0);
            if rng.random_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    Tensor::from_vec(channels, length, data).expect("positive dims")
}

/// `mean(y * R)` for a fixed pseudo-random `R`; every output coordinate
/// contributes a distinct weight to the loss.
fn project(g: &mut Graph<f64>, y: Var, seed: u64) -> Result<Var> {
    let (c, l) = g.shape(y);
    let r = g.input(rand_tensor(seed, 0xff, c, l, 0.2), false);
    let p = g.mul(y, r)?;
    g.mean(p)
}

fn opts(seed: u64) -> GradCheckOptions {
    GradCheckOptions {
        seed,
        ..GradCheckOptions::default()
    }
}

/// Checks a function of plain input tensors.
fn check_inputs<F>(seed: u64, inputs: Vec<Tensor<f64>>, f: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    grad_check(
        &inputs,
        |g, vals| {
            let xs: Vec<Var> = vals.iter().map(|v| g.input(v.clone(), true)).collect();
            let y = f(g, &xs)?;
            let loss = if g.value(y).is_scalar() { y } else { project(g, y, seed)? };
            Ok((loss, xs))
        },
        opts(seed),
    )
}

/// Checks a function of input tensors and every parameter of `store`.
fn check_store<F>(seed: u64, store: &ParamStore<f64>, inputs: Vec<Tensor<f64>>, f: F) -> Result<GradCheckReport>
where
    F: Fn(&ParamStore<f64>, &mut Graph<f64>, &[Var]) -> Result<Var>,
{
    let n_in = inputs.len();
    let mut all = inputs;
    all.extend(store.iter().map(|p| p.value.clone()));
    grad_check(
        &all,
        |g, vals| {
            let mut st = store.clone();
            for (p, v) in st.iter_mut().zip(&vals[n_in..]) {
                p.value = v.clone();
            }
            let xs: Vec<Var> = vals[..n_in].iter().map(|v| g.input(v.clone(), true)).collect();
            let y = f(&st, g, &xs)?;
            let loss = if g.value(y).is_scalar() { y } else { project(g, y, seed)? };
            let bound = g.bound_params();
            let mut leaves = xs;
            for (i, p) in st.iter().enumerate() {
                let v = bound
                    .iter()
                    .find(|(r, _)| r.store == st.key() && r.index == i)
                    .map(|&(_, v)| v)
                    .ok_or_else(|| Error::invalid(format!("parameter {} never bound", p.name)))?;
                leaves.push(v);
            }
            Ok((loss, leaves))
        },
        opts(seed),
    )
}

fn unit_vector(seed: u64, tag: u64, n: usize) -> Vec<f64> {
    let v = rand_tensor(seed, tag, 1, n, 0.1).into_vec();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

fn op_entries(seed: u64) -> Result<Vec<SuiteEntry>> {
    let t = |tag, c, l| rand_tensor(seed, tag, c, l, 0.05);
    let mut out = Vec::new();
    let mut push = |name, report| out.push(SuiteEntry { name, report });

    let geom = ConvGeometry {
        kernel: 3,
        stride: 2,
        pad_left: 1,
        pad_right: 2,
    };
    push(
        "conv1d",
        check_inputs(seed, vec![t(1, 2, 9), t(2, 3, 6), t(3, 3, 1)], |g, x| g.conv1d(x[0], x[1], Some(x[2]), geom))?,
    );
    let tgeom = TConvGeometry {
        kernel: 4,
        stride: 2,
        crop_left: 1,
        crop_right: 1,
    };
    push(
        "tconv1d",
        check_inputs(seed, vec![t(4, 2, 5), t(5, 2, 12), t(6, 3, 1)], |g, x| g.tconv1d(x[0], x[1], Some(x[2]), tgeom))?,
    );
    push("reflect_pad", check_inputs(seed, vec![t(7, 2, 6)], |g, x| g.reflect_pad(x[0], 2, 3))?);
    push("channel_softmax", check_inputs(seed, vec![t(8, 3, 5)], |g, x| g.channel_softmax(x[0]))?);
    push("tanh", check_inputs(seed, vec![t(9, 2, 5)], |g, x| g.tanh(x[0]))?);
    push("sigmoid", check_inputs(seed, vec![t(10, 2, 5)], |g, x| g.sigmoid(x[0]))?);
    push("relu", check_inputs(seed, vec![t(11, 2, 5)], |g, x| g.relu(x[0]))?);
    push(
        "prelu",
        check_inputs(seed, vec![t(12, 2, 5), Tensor::scalar(0.25)], |g, x| g.prelu(x[0], x[1]))?,
    );
    push("leaky_relu", check_inputs(seed, vec![t(13, 2, 5)], |g, x| g.leaky_relu(x[0], 0.2))?);
    push("add", check_inputs(seed, vec![t(14, 2, 4), t(15, 2, 4)], |g, x| g.add(x[0], x[1]))?);
    push("sub", check_inputs(seed, vec![t(16, 2, 4), t(17, 2, 4)], |g, x| g.sub(x[0], x[1]))?);
    push("mul", check_inputs(seed, vec![t(18, 2, 4), t(19, 2, 4)], |g, x| g.mul(x[0], x[1]))?);
    push(
        "concat_channels",
        check_inputs(seed, vec![t(20, 2, 4), t(21, 3, 4)], |g, x| g.concat_channels(x[0], x[1]))?,
    );
    push("scale", check_inputs(seed, vec![t(22, 2, 4)], |g, x| g.scale(x[0], -1.7))?);
    push("add_scalar", check_inputs(seed, vec![t(23, 2, 4)], |g, x| g.add_scalar(x[0], 0.3))?);
    push("abs_mean", check_inputs(seed, vec![t(24, 2, 4)], |g, x| g.abs_mean(x[0]))?);
    push("mean", check_inputs(seed, vec![t(25, 2, 4)], |g, x| g.mean(x[0]))?);
    let (u, v) = (unit_vector(seed, 26, 3), unit_vector(seed, 27, 4));
    push(
        "spectral_norm",
        check_inputs(seed, vec![t(28, 3, 4)], |g, x| g.spectral_norm(x[0], &u, &v))?,
    );
    Ok(out)
}

fn layer_entries(seed: u64) -> Result<Vec<SuiteEntry>> {
    let mut out = Vec::new();
    let mut rng = rng_for(seed, &[0x1a7]);
    let x = |tag, c, l| rand_tensor(seed, tag, c, l, 0.05);

    for (name, kind) in [
        ("gated_conv_softmax", GateKind::SoftmaxChannel),
        ("gated_conv_sigmoid", GateKind::Sigmoid),
    ] {
        let mut store = ParamStore::<f64>::new(0);
        let layer = GatedConv::new(&mut store, "gated", 3, 4, 5, true, &mut rng)?;
        let report = check_store(seed, &store, vec![x(30, 3, 12)], |st, g, xs| {
            layer.forward(&st.binder(true), g, xs[0], kind)
        })?;
        out.push(SuiteEntry { name, report });
    }

    let mut store = ParamStore::<f64>::new(0);
    let conv = Conv1d::new(&mut store, "conv", 2, 3, 4, 2, (1, 1), PadMode::Zero, true, &mut rng)?;
    let report = check_store(seed, &store, vec![x(31, 2, 10)], |st, g, xs| conv.forward(&st.binder(true), g, xs[0]))?;
    out.push(SuiteEntry {
        name: "sn_conv1d",
        report,
    });

    let mut store = ParamStore::<f64>::new(0);
    let conv = Conv1d::new(&mut store, "conv", 2, 2, 5, 1, (2, 2), PadMode::Reflect, true, &mut rng)?;
    let report = check_store(seed, &store, vec![x(32, 2, 8)], |st, g, xs| conv.forward(&st.binder(true), g, xs[0]))?;
    out.push(SuiteEntry {
        name: "reflect_conv1d",
        report,
    });

    let mut store = ParamStore::<f64>::new(0);
    let tconv = TConv1d::new(&mut store, "tconv", 2, 3, 4, 2, (1, 1), true, &mut rng)?;
    let report = check_store(seed, &store, vec![x(33, 2, 6)], |st, g, xs| tconv.forward(&st.binder(true), g, xs[0]))?;
    out.push(SuiteEntry {
        name: "sn_tconv_crop",
        report,
    });

    let mut store = ParamStore::<f64>::new(0);
    let act = PRelu::new(&mut store, "act")?;
    let report = check_store(seed, &store, vec![x(34, 2, 6)], |st, g, xs| act.forward(&st.binder(true), g, xs[0]))?;
    out.push(SuiteEntry {
        name: "prelu_layer",
        report,
    });
    Ok(out)
}

fn model_entries(seed: u64) -> Result<Vec<SuiteEntry>> {
    let mut out = Vec::new();
    let len = 64;
    let arch = ArchConfig::tiny();
    let residual = rand_tensor(seed, 40, 1, len, 0.0);

    let gen = Generator::<f64>::new(arch.clone(), GateKind::SoftmaxChannel, seed)?;
    let noise = gen.draw_noise(len, seed);
    let report = check_store(seed, &gen.store, vec![residual.clone()], |st, g, xs| {
        let mut gen = gen.clone();
        gen.store = st.clone();
        gen.forward(g, xs[0], &noise, true, None)
    })?;
    out.push(SuiteEntry {
        name: "generator_tiny_l64",
        report,
    });

    let disc = Discriminator::<f64>::new(arch, seed)?;
    let candidate = rand_tensor(seed, 41, 1, len, 0.0);
    let report = check_store(seed, &disc.store, vec![candidate, residual], |st, g, xs| {
        let mut disc = disc.clone();
        disc.store = st.clone();
        disc.forward(g, xs[0], xs[1], true, None)
    })?;
    out.push(SuiteEntry {
        name: "discriminator_tiny_l64",
        report,
    });

    out.push(SuiteEntry {
        name: "hinge_d_loss",
        report: check_inputs(seed, vec![Tensor::scalar(0.3), Tensor::scalar(-0.6)], |g, x| {
            hinge_d_loss_graph(g, x[0], x[1])
        })?,
    });
    out.push(SuiteEntry {
        name: "generator_loss",
        report: check_inputs(seed, vec![Tensor::scalar(0.4), Tensor::scalar(0.7)], |g, x| {
            generator_loss_graph(g, x[0], x[1], 0.00015)
        })?,
    });
    Ok(out)
}

/// A check whose analytic gradient is deliberately wrong, used to exercise
/// the failure path.
fn injected_fault(seed: u64) -> Result<SuiteEntry> {
    let calls = Cell::new(0usize);
    let report = grad_check(
        &[rand_tensor(seed, 50, 1, 4, 0.1)],
        |g, vals| {
            let x = g.input(vals[0].clone(), true);
            let c = if calls.get() == 0 { 2.0 } else { 3.0 };
            calls.set(calls.get() + 1);
            let y = g.scale(x, c)?;
            Ok((g.mean(y)?, vec![x]))
        },
        opts(seed),
    )?;
    Ok(SuiteEntry {
        name: "injected_fault",
        report,
    })
}

/// Runs the suite. `inject_fault` appends one entry that must fail.
pub fn run_grad_suite(scope: SuiteScope, seed: u64, inject_fault: bool) -> Result<Vec<SuiteEntry>> {
    let mut entries = op_entries(seed)?;
    entries.extend(layer_entries(seed)?);
    if scope == SuiteScope::Model {
        entries.extend(model_entries(seed)?);
    }
    if inject_fault {
        entries.push(injected_fault(seed)?);
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_scope_passes_and_names_unique() {
        let entries = run_grad_suite(SuiteScope::Layer, 0, false).unwrap();
        let mut names: Vec<_> = entries.iter().map(|e| e.name).collect();
        for e in &entries {
            assert!(e.passed(), "{} {:e}", e.name, e.report.max_rel_error);
        }
        let n = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), n);
    }

    #[test]
    fn model_scope_passes() {
        for e in run_grad_suite(SuiteScope::Model, 1, false).unwrap() {
            assert!(e.passed(), "{} {:e}", e.name, e.report.max_rel_error);
        }
    }

    #[test]
    fn fault_is_detected() {
        let e = injected_fault(0).unwrap();
        assert!(!e.passed());
    }
}
