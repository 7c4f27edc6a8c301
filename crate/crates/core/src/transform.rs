//! FFT plumbing and the continuum-normalized Fourier transform on boxes.
//!
//! Forward: `û(ξ) = ∫ e^{-ixξ} u(x) dx`; inverse carries `(2π)^{-d}`. The
//! frequency box of a space box with `n` nodes and width `W` has spacing
//! `2π/W` and nodes `ξ_k = (k − n/2)·2π/W`.

use std::f64::consts::PI;

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::grid::{GridBox, GridError, GridFunction};
use crate::scalar::Real;

/// In-place unnormalized FFT of every line along `axis`.
pub fn fft_axis<T: Real>(data: &mut [Complex<T>], n: &[usize], axis: usize, inverse: bool) {
    let mut planner = FftPlanner::<T>::new();
    let len = n[axis];
    let fft = if inverse { planner.plan_fft_inverse(len) } else { planner.plan_fft_forward(len) };
    if n.len() == 1 || axis == n.len() - 1 {
        fft.process(data);
        return;
    }
    // Axis 0 of a 2-D array: gather blocks of columns into contiguous lines.
    let (n0, n1) = (n[0], n[1]);
    const BLOCK: usize = 16;
    let mut buf = vec![Complex::<T>::default(); BLOCK * n0];
    let mut scratch = vec![Complex::<T>::default(); fft.get_inplace_scratch_len()];
    let mut c0 = 0;
    while c0 < n1 {
        let w = BLOCK.min(n1 - c0);
        for r in 0..n0 {
            let row = &data[r * n1 + c0..r * n1 + c0 + w];
            for (c, v) in row.iter().enumerate() {
                buf[c * n0 + r] = *v;
            }
        }
        fft.process_with_scratch(&mut buf[..w * n0], &mut scratch);
        for r in 0..n0 {
            let row = &mut data[r * n1 + c0..r * n1 + c0 + w];
            for (c, v) in row.iter_mut().enumerate() {
                *v = buf[c * n0 + r];
            }
        }
        c0 += w;
    }
}

/// Signed FFT frequency index of bin `m` for length `n`.
#[inline]
pub fn signed_index(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Applies the Fourier multiplier `mult(ξ, is_nyquist)` along one axis.
///
/// Shift-invariant operators are exact on periodic band-limited data; the
/// box offset cancels between forward and inverse transforms.
pub fn apply_multiplier<T: Real>(
    g: &GridFunction<T>,
    axis: usize,
    mult: impl Fn(f64, bool) -> Complex<f64>,
) -> GridFunction<T> {
    let n = g.grid.n[axis];
    let dxi = 2.0 * PI / g.grid.width(axis);
    let factors: Vec<Complex<f64>> = (0..n).map(|m| mult(signed_index(m, n) as f64 * dxi, m == n / 2)).collect();
    apply_factors(g, axis, &factors)
}

/// Like [`apply_multiplier`] with the multiplier given per FFT bin.
pub fn apply_factors<T: Real>(g: &GridFunction<T>, axis: usize, factors: &[Complex<f64>]) -> GridFunction<T> {
    let grid = &g.grid;
    let n = grid.n[axis];
    let factors: Vec<Complex<T>> = factors
        .iter()
        .map(|c| {
            let c = c / n as f64;
            Complex::new(T::of(c.re), T::of(c.im))
        })
        .collect();
    let mut data = g.samples.clone();
    fft_axis(&mut data, &grid.n, axis, false);
    scale_along_axis(&mut data, &grid.n, axis, &factors);
    fft_axis(&mut data, &grid.n, axis, true);
    GridFunction { grid: grid.clone(), samples: data }
}

/// Like [`apply_factors`], but first zeroes the bins of `g` whose magnitude is
/// at most `rel` times the largest bin, so a growing multiplier does not
/// amplify the transform's roundoff floor.
pub fn apply_factors_above<T: Real>(g: &GridFunction<T>, axis: usize, factors: &[Complex<f64>], rel: f64) -> GridFunction<T> {
    let grid = &g.grid;
    let n = grid.n[axis];
    let factors: Vec<Complex<T>> = factors
        .iter()
        .map(|c| {
            let c = c / n as f64;
            Complex::new(T::of(c.re), T::of(c.im))
        })
        .collect();
    let mut data = g.samples.clone();
    fft_axis(&mut data, &grid.n, axis, false);
    let top = data.iter().map(|v| v.norm().f64()).fold(0.0, f64::max);
    let cut = rel * top;
    data.iter_mut().filter(|v| v.norm().f64() <= cut).for_each(|v| *v = Complex::default());
    scale_along_axis(&mut data, &grid.n, axis, &factors);
    fft_axis(&mut data, &grid.n, axis, true);
    GridFunction { grid: grid.clone(), samples: data }
}

/// The continuum transform of a one-dimensional sampled function, listed
/// per FFT bin (bin `m` holds frequency `signed_index(m)·2π/W`).
pub fn transform_by_bin(f: &GridFunction<f64>) -> Vec<Complex<f64>> {
    let n = f.grid.n[0];
    let fhat = forward(f);
    (0..n).map(|m| fhat.samples[(m + n / 2) % n]).collect()
}

pub(crate) fn scale_along_axis<T: Real>(data: &mut [Complex<T>], n: &[usize], axis: usize, factors: &[Complex<T>]) {
    if n.len() == 1 {
        data.iter_mut().zip(factors).for_each(|(v, f)| *v = *v * *f);
    } else if axis == 1 {
        for row in data.chunks_mut(n[1]) {
            row.iter_mut().zip(factors).for_each(|(v, f)| *v = *v * *f);
        }
    } else {
        for (r, row) in data.chunks_mut(n[1]).enumerate() {
            let f = factors[r];
            row.iter_mut().for_each(|v| *v = *v * f);
        }
    }
}

/// The frequency box dual to `space`.
pub fn frequency_grid(space: &GridBox) -> GridBox {
    let lo: Vec<f64> = (0..space.dim()).map(|a| -(space.n[a] as f64 / 2.0) * 2.0 * PI / space.width(a)).collect();
    let hi: Vec<f64> = lo.iter().map(|l| -l).collect();
    GridBox { lo, hi, n: space.n.clone() }
}

/// `e^{-i·lo·ξ_k}` for every frequency node of one axis.
fn phases(space: &GridBox, axis: usize) -> Vec<Complex<f64>> {
    let n = space.n[axis];
    let c = space.lo[axis] / space.width(axis);
    (0..n)
        .map(|k| {
            let t = c * (k as f64 - n as f64 / 2.0);
            let frac = t - t.round();
            Complex::from_polar(1.0, -2.0 * PI * frac)
        })
        .collect()
}

fn shift_axes<T: Real>(data: &[Complex<T>], n: &[usize]) -> Vec<Complex<T>> {
    let mut out = vec![Complex::<T>::default(); data.len()];
    match n.len() {
        1 => {
            let h = n[0] / 2;
            for (m, v) in data.iter().enumerate() {
                out[(m + h) % n[0]] = *v;
            }
        }
        _ => {
            let (n0, n1) = (n[0], n[1]);
            for r in 0..n0 {
                let rr = (r + n0 / 2) % n0;
                for c in 0..n1 {
                    out[rr * n1 + (c + n1 / 2) % n1] = data[r * n1 + c];
                }
            }
        }
    }
    out
}

fn axis_factors<T: Real>(space: &GridBox, inverse: bool) -> Vec<Vec<Complex<T>>> {
    (0..space.dim())
        .map(|a| {
            let h = space.h(a);
            let nh = space.width(a);
            phases(space, a)
                .into_iter()
                .map(|p| {
                    let f = if inverse { p.conj() / nh } else { p * h };
                    Complex::new(T::of(f.re), T::of(f.im))
                })
                .collect()
        })
        .collect()
}

fn apply_axis_factors<T: Real>(data: &mut [Complex<T>], n: &[usize], factors: &[Vec<Complex<T>>]) {
    for (axis, f) in factors.iter().enumerate() {
        scale_along_axis(data, n, axis, f);
    }
}

/// Continuum forward transform onto the dual frequency box.
pub fn forward<T: Real>(g: &GridFunction<T>) -> GridFunction<T> {
    let mut data = g.samples.clone();
    for axis in 0..g.grid.dim() {
        fft_axis(&mut data, &g.grid.n, axis, false);
    }
    let mut out = shift_axes(&data, &g.grid.n);
    apply_axis_factors(&mut out, &g.grid.n, &axis_factors(&g.grid, false));
    GridFunction { grid: frequency_grid(&g.grid), samples: out }
}

/// Continuum inverse transform of frequency samples back onto `space`.
pub fn inverse<T: Real>(g: &GridFunction<T>, space: &GridBox) -> Result<GridFunction<T>, GridError> {
    if g.grid.n != space.n {
        return Err(GridError::Mismatch("frequency and space grids differ in size".into()));
    }
    let mut data = g.samples.clone();
    apply_axis_factors(&mut data, &space.n, &axis_factors(space, true));
    // The shift by n/2 is its own inverse for even n.
    let mut data = shift_axes(&data, &space.n);
    for axis in 0..space.dim() {
        fft_axis(&mut data, &space.n, axis, true);
    }
    Ok(GridFunction { grid: space.clone(), samples: data })
}
