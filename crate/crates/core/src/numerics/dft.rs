use std::ops::Deref;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};
use crate::scalar::{all_finite, Cx, Real};

/// Non-empty block of finite complex samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexBlock<T: Real>(Vec<Cx<T>>);

impl<T: Real> ComplexBlock<T> {
    pub fn new(values: Vec<Cx<T>>) -> Result<Self> {
        if values.is_empty() {
            return invalid("complex block must be non-empty");
        }
        if !all_finite(&values) {
            return invalid("complex block contains NaN or infinite samples");
        }
        Ok(Self(values))
    }

    pub fn into_inner(self) -> Vec<Cx<T>> {
        self.0
    }
}

impl<T: Real> Deref for ComplexBlock<T> {
    type Target = [Cx<T>];

    fn deref(&self) -> &[Cx<T>] {
        &self.0
    }
}

/// Pre-planned unitary DFT of a fixed length.
///
/// Forward applies `W` with `W(p, q) = exp(-j 2 pi p q / N) / sqrt(N)`,
/// inverse applies `W^H`. The same plan always executes the same sequence
/// of floating point operations, so results are bit-stable across runs and
/// threads.
#[derive(Clone)]
pub struct DftPlan<T: Real> {
    len: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    scale: T,
}

impl<T: Real> std::fmt::Debug for DftPlan<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DftPlan").field("len", &self.len).finish()
    }
}

impl<T: Real> DftPlan<T> {
    pub fn new(len: usize) -> Result<Self> {
        if len == 0 {
            return invalid("DFT length must be at least 1");
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            scale: T::one() / T::from_usize_lossy(len).sqrt(),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward_in_place(&self, buf: &mut [Cx<T>]) {
        assert_eq!(buf.len(), self.len, "DFT buffer length mismatch");
        self.forward.process(buf);
        for v in buf.iter_mut() {
            *v = *v * self.scale;
        }
    }

    pub fn inverse_in_place(&self, buf: &mut [Cx<T>]) {
        assert_eq!(buf.len(), self.len, "DFT buffer length mismatch");
        self.inverse.process(buf);
        for v in buf.iter_mut() {
            *v = *v * self.scale;
        }
    }

    pub fn forward(&self, x: &[Cx<T>]) -> Vec<Cx<T>> {
        let mut out = x.to_vec();
        self.forward_in_place(&mut out);
        out
    }

    pub fn inverse(&self, x: &[Cx<T>]) -> Vec<Cx<T>> {
        let mut out = x.to_vec();
        self.inverse_in_place(&mut out);
        out
    }
}

/// Unitary DFT `W x`.
pub fn dft<T: Real>(x: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
    Ok(DftPlan::new(x.len())?.forward(x))
}

/// Inverse unitary DFT `W^H X`.
pub fn idft<T: Real>(x: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
    Ok(DftPlan::new(x.len())?.inverse(x))
}

/// Length-N cyclic convolution evaluated directly in the time domain.
///
/// O(N^2) on purpose: it is the reference the DFT-based paths are checked
/// against.
pub fn circular_convolve<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
    if a.len() != b.len() {
        return invalid(format!("circular convolution needs equal lengths, got {} and {}", a.len(), b.len()));
    }
    let n = a.len();
    let out =
        (0..n).map(|i| (0..n).fold(Cx::new(T::zero(), T::zero()), |acc, j| acc + a[j] * b[(i + n - j) % n])).collect();
    Ok(out)
}
