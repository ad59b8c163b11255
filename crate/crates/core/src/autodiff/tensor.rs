use super::Scalar;
use crate::error::{Error, Result};

/// A `channels x length` array stored row-major (one row per channel).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    channels: usize,
    length: usize,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(channels: usize, length: usize) -> Self {
        Self {
            channels,
            length,
            data: vec![T::zero(); channels * length],
        }
    }

    pub fn from_vec(channels: usize, length: usize, data: Vec<T>) -> Result<Self> {
        if channels == 0 || length == 0 {
            return Err(Error::shape(format!(
                "tensor dims must be positive, got {channels}x{length}"
            )));
        }
        if data.len() != channels * length {
            return Err(Error::shape(format!(
                "{} values do not fill {channels}x{length}",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            length,
            data,
        })
    }

    /// Single-channel tensor wrapping a signal.
    pub fn from_signal(samples: &[T]) -> Result<Self> {
        Self::from_vec(1, samples.len(), samples.to_vec())
    }

    pub fn scalar(value: T) -> Self {
        Self {
            channels: 1,
            length: 1,
            data: vec![value],
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.channels, self.length)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.data.len() == 1
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, c: usize) -> &[T] {
        &self.data[c * self.length..(c + 1) * self.length]
    }

    pub fn row_mut(&mut self, c: usize) -> &mut [T] {
        &mut self.data[c * self.length..(c + 1) * self.length]
    }

    pub fn get(&self, c: usize, t: usize) -> T {
        self.data[c * self.length + t]
    }

    pub fn item(&self) -> T {
        self.data[0]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            channels: self.channels,
            length: self.length,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + b;
        }
    }

    pub fn fill(&mut self, v: T) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn dot(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            channels: self.channels,
            length: self.length,
            data: self.data.iter().map(|v| U::from_f64(v.as_f64())).collect(),
        }
    }
}
