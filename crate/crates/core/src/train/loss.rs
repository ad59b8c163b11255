use crate::autodiff::{Graph, Scalar, Var};
use crate::error::{Error, Result};

/// Batch mean of `max(0, 1 - d_real) + max(0, 1 + d_fake)`.
pub fn hinge_d_loss(d_real: &[f64], d_fake: &[f64]) -> Result<f64> {
    if d_real.len() != d_fake.len() {
        return Err(Error::LengthMismatch(format!(
            "{} real scores, {} fake scores",
            d_real.len(),
            d_fake.len()
        )));
    }
    if d_real.is_empty() {
        return Err(Error::EmptyInput);
    }
    let total: f64 = d_real
        .iter()
        .zip(d_fake)
        .map(|(&r, &f)| (1.0 - r).max(0.0) + (1.0 + f).max(0.0))
        .sum();
    Ok(total / d_real.len() as f64)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    Ok(())
}

/// `gamma * l1 - (1 - gamma) * d_fake`.
pub fn generator_loss(l1: f64, d_fake: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(gamma * l1 - (1.0 - gamma) * d_fake)
}

/// Hinge terms of one batch element on a tape.
pub fn hinge_d_loss_graph<T: Scalar>(g: &mut Graph<T>, d_real: Var, d_fake: Var) -> Result<Var> {
    let neg_real = g.scale(d_real, -1.0)?;
    let r = g.add_scalar(neg_real, 1.0)?;
    let r = g.relu(r)?;
    let f = g.add_scalar(d_fake, 1.0)?;
    let f = g.relu(f)?;
    g.add(r, f)
}

/// Generator objective of one batch element on a tape.
pub fn generator_loss_graph<T: Scalar>(g: &mut Graph<T>, l1: Var, d_fake: Var, gamma: f64) -> Result<Var> {
    check_gamma(gamma)?;
    let a = g.scale(l1, gamma)?;
    let b = g.scale(d_fake, 1.0 - gamma)?;
    g.sub(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    #[test]
    fn hinge_table() {
        assert_eq!(hinge_d_loss(&[2.0], &[-2.0]).unwrap(), 0.0);
        assert_eq!(hinge_d_loss(&[0.0], &[0.0]).unwrap(), 2.0);
        assert_eq!(hinge_d_loss(&[-1.0], &[1.0]).unwrap(), 4.0);
        assert_eq!(hinge_d_loss(&[2.0, 0.0], &[-2.0, 0.0]).unwrap(), 1.0);
        assert!(hinge_d_loss(&[], &[]).is_err());
        assert!(hinge_d_loss(&[1.0], &[]).is_err());
    }

    #[test]
    fn generator_table() {
        assert_eq!(generator_loss(0.0, 0.0, 0.00015).unwrap(), 0.0);
        assert!((generator_loss(1.0, 0.0, 0.00015).unwrap() - 0.00015).abs() < 1e-12);
        assert!((generator_loss(2.0, 1.0, 0.00015).unwrap() + 0.99955).abs() < 1e-12);
        assert!(generator_loss(1.0, 0.0, 0.0).is_err());
        assert!(generator_loss(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn graph_versions_agree() {
        for (r, f) in [(2.0, -2.0), (0.0, 0.0), (-1.0, 1.0), (0.3, -0.7)] {
            let mut g = Graph::<f64>::new();
            let dr = g.input(Tensor::scalar(r), true);
            let df = g.input(Tensor::scalar(f), true);
            let h = hinge_d_loss_graph(&mut g, dr, df).unwrap();
            assert_eq!(g.value(h).item(), hinge_d_loss(&[r], &[f]).unwrap());
            let gl = generator_loss_graph(&mut g, dr, df, 0.25).unwrap();
            assert!((g.value(gl).item() - generator_loss(r, f, 0.25).unwrap()).abs() < 1e-15);
        }
    }
}
