//! Column and row transforms over complex matrices.
//!
//! Forward transforms are unnormalized; inverse transforms are unnormalized
//! too, callers apply whatever scale their convention needs.

use std::sync::Arc;

use ndarray::{Array2, Axis};
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

pub(crate) struct Dft<T: Real> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> Dft<T> {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn forward(&self, buf: &mut [Complex<T>]) {
        self.forward.process(buf);
    }

    pub fn inverse(&self, buf: &mut [Complex<T>]) {
        self.inverse.process(buf);
    }
}

#[derive(Clone, Copy)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

/// Transforms every column of `m`, then multiplies by `scale`.
pub(crate) fn columns<T: Real>(m: &Array2<Complex<T>>, dir: Direction, scale: T) -> Array2<Complex<T>> {
    transform_axis(m, Axis(1), dir, scale)
}

/// Transforms every row of `m`, then multiplies by `scale`.
pub(crate) fn rows<T: Real>(m: &Array2<Complex<T>>, dir: Direction, scale: T) -> Array2<Complex<T>> {
    transform_axis(m, Axis(0), dir, scale)
}

fn transform_axis<T: Real>(
    m: &Array2<Complex<T>>,
    lane_axis: Axis,
    dir: Direction,
    scale: T,
) -> Array2<Complex<T>> {
    // lanes along the other axis
    let len = m.len_of(Axis(1 - lane_axis.index()));
    let dft = Dft::new(len);
    let mut out = m.clone();
    let mut buf = vec![Complex::new(T::zero(), T::zero()); len];
    for mut lane in out.axis_iter_mut(lane_axis) {
        for (b, v) in buf.iter_mut().zip(lane.iter()) {
            *b = *v;
        }
        match dir {
            Direction::Forward => dft.forward(&mut buf),
            Direction::Inverse => dft.inverse(&mut buf),
        }
        for (v, b) in lane.iter_mut().zip(buf.iter()) {
            *v = *b * scale;
        }
    }
    out
}
