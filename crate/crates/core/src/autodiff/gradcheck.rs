use rand::seq::index::sample;
use rand::SeedableRng;
use rand::rngs::ChaCha8Rng;

use super::{Graph, Tensor, Var};
use crate::error::{Error, Result};

/// Settings for a central-difference gradient check.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    /// Relative step: each coordinate moves by `epsilon * max(1, |theta|)`.
    pub epsilon: f64,
    /// Coordinates checked per input tensor (all of them when the tensor is
    /// smaller than this).
    pub max_coords: usize,
    /// Magnitudes below this floor are compared absolutely.
    pub floor: f64,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            max_coords: 24,
            floor: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(input index, flat coordinate)` of the worst coordinate.
    pub worst: Option<(usize, usize)>,
    pub coords_checked: usize,
}

/// Compares reverse-mode gradients with central finite differences.
///
/// `build` records a scalar loss on the given graph from the input values
/// and returns the loss together with the leaf handle of every input, in
/// the same order as `inputs`. It is re-run for every perturbed evaluation.
pub fn grad_check<F>(inputs: &[Tensor<f64>], build: F, opts: GradCheckOptions) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph<f64>, &[Tensor<f64>]) -> Result<(Var, Vec<Var>)>,
{
    let mut g = Graph::new();
    let (loss, leaves) = build(&mut g, inputs)?;
    if leaves.len() != inputs.len() {
        return Err(Error::invalid("grad_check: builder must return one leaf per input"));
    }
    let grads = g.backward(loss)?;
    let analytic: Vec<Tensor<f64>> = leaves
        .iter()
        .zip(inputs)
        .map(|(&v, x)| {
            grads
                .wrt(v)
                .cloned()
                .unwrap_or_else(|| Tensor::zeros(x.channels(), x.length()))
        })
        .collect();

    let eval = |vals: &[Tensor<f64>]| -> Result<f64> {
        let mut g = Graph::new();
        let (loss, _) = build(&mut g, vals)?;
        Ok(g.value(loss).item())
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut work: Vec<Tensor<f64>> = inputs.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        coords_checked: 0,
    };
    for (ti, input) in inputs.iter().enumerate() {
        let n = input.len();
        let coords: Vec<usize> = if n <= opts.max_coords {
            (0..n).collect()
        } else {
            let mut c = sample(&mut rng, n, opts.max_coords).into_vec();
            c.sort_unstable();
            c
        };
        for idx in coords {
            let theta = input.data()[idx];
            let h = opts.epsilon * theta.abs().max(1.0);
            work[ti].data_mut()[idx] = theta + h;
            let plus = eval(&work)?;
            work[ti].data_mut()[idx] = theta - h;
            let minus = eval(&work)?;
            work[ti].data_mut()[idx] = theta;

            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[ti].data()[idx];
            let denom = a.abs().max(numeric.abs()).max(opts.floor);
            let rel = (a - numeric).abs() / denom;
            report.coords_checked += 1;
            if rel > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(rel);
                report.worst = Some((ti, idx));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_loss_is_exact() {
        let w = Tensor::from_vec(1, 5, vec![0.3, -1.2, 2.5, 0.0, 7.0]).unwrap();
        let rep = grad_check(
            &[w],
            |g, vals| {
                let w = g.input(vals[0].clone(), true);
                let m = g.mean(w)?;
                let s = g.scale(m, 5.0)?;
                Ok((s, vec![w]))
            },
            GradCheckOptions::default(),
        )
        .unwrap();
        assert_eq!(rep.coords_checked, 5);
        assert!(rep.max_rel_error <= 1e-10, "{}", rep.max_rel_error);
    }

    #[test]
    fn detects_wrong_gradient() {
        // loss = mean(x)*x0 has gradient the builder does not expose through
        // the returned leaf for x0 (it is a separate constant leaf).
        let x = Tensor::from_vec(1, 3, vec![1.0, 2.0, 3.0]).unwrap();
        let rep = grad_check(
            &[x],
            |g, vals| {
                let x = g.input(vals[0].clone(), true);
                let c = g.input(vals[0].clone(), false);
                let y = g.mul(x, c)?;
                let m = g.mean(y)?;
                Ok((m, vec![x]))
            },
            GradCheckOptions::default(),
        )
        .unwrap();
        assert!(rep.max_rel_error > 0.4);
    }
}
