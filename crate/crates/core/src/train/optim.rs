use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::nn::ParamStore;

/// Per-parameter AMSGrad moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub vmax: Vec<T>,
}

impl<T: Scalar> Moments<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            m: vec![T::zero(); n],
            v: vec![T::zero(); n],
            vmax: vec![T::zero(); n],
        }
    }
}

/// Bias-corrected Adam with the AMSGrad running maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub lr: f64,
    pub betas: (f64, f64),
    pub eps: f64,
    pub t: u64,
    pub moments: Vec<Moments<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(sizes: impl IntoIterator<Item = usize>, lr: f64, betas: (f64, f64), eps: f64) -> Self {
        Self {
            lr,
            betas,
            eps,
            t: 0,
            moments: sizes.into_iter().map(Moments::zeros).collect(),
        }
    }

    pub fn for_store(store: &ParamStore<T>, lr: f64, betas: (f64, f64), eps: f64) -> Self {
        Self::new(store.iter().map(|p| p.numel()), lr, betas, eps)
    }

    /// One update of `params[i]` against `grads[i]`.
    pub fn update(&mut self, params: &mut [&mut [T]], grads: &[&[T]]) -> Result<()> {
        if params.len() != self.moments.len() || grads.len() != self.moments.len() {
            return Err(Error::shape("optimizer state does not match parameter list"));
        }
        self.t += 1;
        let (b1, b2) = self.betas;
        let t = self.t as i32;
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        let (b1t, b2t) = (T::from_f64(b1), T::from_f64(b2));
        let (one, lr, eps) = (T::one(), T::from_f64(self.lr), T::from_f64(self.eps));
        let (c1, c2) = (T::from_f64(c1), T::from_f64(c2));
        for ((theta, grad), st) in params.iter_mut().zip(grads).zip(&mut self.moments) {
            if theta.len() != st.m.len() || grad.len() != st.m.len() {
                return Err(Error::shape("parameter size changed under the optimizer"));
            }
            for i in 0..theta.len() {
                let g = grad[i];
                st.m[i] = b1t * st.m[i] + (one - b1t) * g;
                st.v[i] = b2t * st.v[i] + (one - b2t) * g * g;
                if st.v[i] > st.vmax[i] {
                    st.vmax[i] = st.v[i];
                }
                let m_hat = st.m[i] / c1;
                let v_hat = st.vmax[i] / c2;
                theta[i] = theta[i] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }

    /// Applies the accumulated gradients of a store.
    pub fn step(&mut self, store: &mut ParamStore<T>) -> Result<()> {
        let (mut values, grads): (Vec<&mut [T]>, Vec<&[T]>) = store
            .iter_mut()
            .map(|p| (p.value.data_mut(), p.grad.data()))
            .unzip();
        self.update(&mut values, &grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_step(theta: f64, g: f64) -> f64 {
        let mut st = AdamState::<f64>::new([1], 0.0006, (0.5, 0.99), 1e-8);
        let mut p = [theta];
        st.update(&mut [&mut p[..]], &[&[g][..]]).unwrap();
        p[0]
    }

    #[test]
    fn first_step_matches_hand_update() {
        // m = 0.5, v = 0.01, m_hat = 1, v_hat = 1
        let want = -0.0006 / (1.0 + 1e-8);
        assert!((one_step(0.0, 1.0) - want).abs() < 1e-12);
        assert_eq!(one_step(0.7, 0.0), 0.7);
    }

    #[test]
    fn vmax_never_decreases() {
        let mut st = AdamState::<f64>::new([3], 0.01, (0.9, 0.999), 1e-8);
        let mut p = vec![0.0; 3];
        let mut prev = vec![0.0; 3];
        for k in 0..50 {
            let g: Vec<f64> = (0..3).map(|i| ((k * 7 + i * 13) % 11) as f64 - 5.0).collect();
            st.update(&mut [&mut p[..]], &[&g[..]]).unwrap();
            let mo = &st.moments[0];
            for i in 0..3 {
                assert!(mo.vmax[i] >= prev[i] && mo.vmax[i] >= mo.v[i] && mo.v[i] >= 0.0);
            }
            prev = mo.vmax.clone();
        }
        assert_eq!(st.t, 50);
    }

    #[test]
    fn quadratic_descends() {
        let mut st = AdamState::<f64>::new([1], 0.01, (0.5, 0.99), 1e-8);
        let mut p = [1.0];
        let mut last = f64::INFINITY;
        for _ in 0..60 {
            let g = [2.0 * p[0]];
            st.update(&mut [&mut p[..]], &[&g[..]]).unwrap();
            assert!(p[0].abs() < last);
            last = p[0].abs();
        }
    }

    #[test]
    fn mismatched_sizes_error() {
        let mut st = AdamState::<f64>::new([2], 0.01, (0.5, 0.99), 1e-8);
        let mut p = [0.0];
        assert!(st.update(&mut [&mut p[..]], &[&[1.0][..]]).is_err());
    }
}
