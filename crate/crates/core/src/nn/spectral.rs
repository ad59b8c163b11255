use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::autodiff::{Scalar, Tensor};

/// Power-iteration estimate of a weight matrix's top singular pair.
///
/// The weight is viewed as `channels x length` (for conv weights:
/// `out_channels x (in_channels * kernel)`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralNormState<T> {
    pub u: Vec<T>,
    pub v: Vec<T>,
}

/// Iterations run once at construction before training starts.
pub const WARMUP_ITERATIONS: usize = 15;

const NORM_EPS: f64 = 1e-12;

impl<T: Scalar> SpectralNormState<T> {
    pub fn new<R: Rng + ?Sized>(w: &Tensor<T>, rng: &mut R) -> Self {
        let mut u: Vec<T> = (0..w.channels())
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                T::from_f64(z)
            })
            .collect();
        if !normalize(&mut u) {
            u = unit(w.channels());
        }
        let mut state = Self {
            u,
            v: unit(w.length()),
        };
        state.refresh_v(w);
        for _ in 0..WARMUP_ITERATIONS {
            state.power_iterate(w);
        }
        state
    }

    fn refresh_v(&mut self, w: &Tensor<T>) {
        let mut v = mat_t_vec(w, &self.u);
        if normalize(&mut v) {
            self.v = v;
        }
    }

    /// One power-iteration update: `v <- W^T u / |.|`, `u <- W v / |.|`.
    /// A zero product leaves the corresponding vector unchanged so both
    /// stay unit length.
    pub fn power_iterate(&mut self, w: &Tensor<T>) {
        self.refresh_v(w);
        let mut u = mat_vec(w, &self.v);
        if normalize(&mut u) {
            self.u = u;
        }
    }

    /// Current estimate `u^T W v` of the top singular value.
    pub fn sigma(&self, w: &Tensor<T>) -> T {
        self.u
            .iter()
            .zip(mat_vec(w, &self.v))
            .map(|(&a, b)| a * b)
            .sum()
    }
}

/// One power-iteration step followed by `W / sigma` (sigma floored at
/// 1e-12, so a zero matrix maps to zeros).
pub fn spectral_normalize<T: Scalar>(w: &Tensor<T>, state: &mut SpectralNormState<T>) -> Tensor<T> {
    state.power_iterate(w);
    let sigma = state.sigma(w).max(T::from_f64(NORM_EPS));
    w.map(|x| x / sigma)
}

fn unit<T: Scalar>(n: usize) -> Vec<T> {
    let mut v = vec![T::zero(); n];
    if n > 0 {
        v[0] = T::one();
    }
    v
}

fn normalize<T: Scalar>(v: &mut [T]) -> bool {
    let norm = v.iter().map(|x| x.as_f64() * x.as_f64()).sum::<f64>().sqrt();
    if norm < NORM_EPS {
        return false;
    }
    let inv = T::from_f64(1.0 / norm);
    v.iter_mut().for_each(|x| *x = *x * inv);
    true
}

fn mat_vec<T: Scalar>(w: &Tensor<T>, v: &[T]) -> Vec<T> {
    (0..w.channels())
        .map(|r| w.row(r).iter().zip(v).map(|(&a, &b)| a * b).sum())
        .collect()
}

fn mat_t_vec<T: Scalar>(w: &Tensor<T>, u: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); w.length()];
    for (r, &ur) in u.iter().enumerate() {
        for (o, &a) in out.iter_mut().zip(w.row(r)) {
            *o = *o + a * ur;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand::rngs::ChaCha8Rng;

    fn unit_norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn converges_on_diagonal() {
        let w = Tensor::<f64>::from_vec(2, 2, vec![2.0, 0.0, 0.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = SpectralNormState::new(&w, &mut rng);
        for _ in 0..20 {
            s.power_iterate(&w);
        }
        assert!((s.sigma(&w) - 2.0).abs() < 1e-6);
        assert!((unit_norm(&s.u) - 1.0).abs() < 1e-12);
        assert!((unit_norm(&s.v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = Tensor::<f64>::from_vec(2, 2, vec![1.0, 0.0, 0.0, 0.5]).unwrap();
        let mut s = SpectralNormState::new(&w, &mut rng);
        let y = spectral_normalize(&w, &mut s);
        for (a, b) in y.data().iter().zip(w.data()) {
            assert!((a - b).abs() < 1e-9);
        }

        let w = Tensor::<f64>::from_vec(2, 2, vec![2.0, 0.0, 0.0, 1.0]).unwrap();
        let mut s = SpectralNormState::new(&w, &mut rng);
        let mut y = w.clone();
        for _ in 0..20 {
            y = spectral_normalize(&w, &mut s);
        }
        let want = [1.0, 0.0, 0.0, 0.5];
        for (a, b) in y.data().iter().zip(want) {
            assert!((a - b).abs() < 1e-3);
        }

        // scale cancels
        let c = w.map(|x| 7.5 * x);
        let mut sc = SpectralNormState::new(&c, &mut rng);
        let mut yc = c.clone();
        for _ in 0..20 {
            yc = spectral_normalize(&c, &mut sc);
        }
        for (a, b) in yc.data().iter().zip(y.data()) {
            assert!((a - b).abs() < 1e-9);
        }

        let z = Tensor::<f64>::zeros(2, 3);
        let mut sz = SpectralNormState::new(&z, &mut rng);
        assert!(spectral_normalize(&z, &mut sz).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_matrix_keeps_unit_vectors() {
        let w = Tensor::<f64>::zeros(3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = SpectralNormState::new(&w, &mut rng);
        s.power_iterate(&w);
        assert!((unit_norm(&s.u) - 1.0).abs() < 1e-12);
        assert_eq!(s.sigma(&w), 0.0);
    }
}
