use rand::{Rng, RngExt};

/// Half-width of the Xavier/Glorot uniform range.
pub fn xavier_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// `n` draws from `U[-L, L]`, `L = sqrt(6 / (fan_in + fan_out))`.
pub fn xavier_uniform<R: Rng + ?Sized>(n: usize, fan_in: usize, fan_out: usize, rng: &mut R) -> Vec<f64> {
    let limit = xavier_limit(fan_in, fan_out);
    (0..n).map(|_| rng.random_range(-limit..=limit)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;

    #[test]
    fn limit_and_bounds() {
        assert_eq!(xavier_limit(3, 3), 1.0);
        let v = xavier_uniform(10_000, 32 * 64, 64 * 64, &mut rng_for(3, &[]));
        let l = xavier_limit(32 * 64, 64 * 64);
        assert!(v.iter().all(|x| x.abs() <= l));
        // uniform on [-L, L] has variance L^2/3
        let var = v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
        assert!((var / (l * l / 3.0) - 1.0).abs() < 0.05);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = xavier_uniform(64, 4, 4, &mut rng_for(11, &[1]));
        let b = xavier_uniform(64, 4, 4, &mut rng_for(11, &[1]));
        let c = xavier_uniform(64, 4, 4, &mut rng_for(12, &[1]));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
