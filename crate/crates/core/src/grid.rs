//! Sampled nets `(f_ε)_ε` on uniform boxes, their derivatives and seminorms,
//! and growth-exponent regression.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;
use crate::serde_ext;
use crate::transform;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("invalid ladder: {0}")]
    InvalidLadder(String),
    #[error("shape mismatch: {0}")]
    Mismatch(String),
    #[error("derivative order {0} exceeds 6")]
    OrderTooHigh(usize),
    #[error("frame does not decay at the box boundary (relative boundary value {0:.3e})")]
    BoundaryDecay(f64),
    #[error("sub-box lies outside the grid box")]
    SubboxOutOfRange,
    #[error("insufficient points for a fit: {0} usable, need 4")]
    InsufficientPoints(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("net is on the {0:?} side, operation needs the other")]
    WrongSide(Side),
}

/// Relative size below which a boundary layer counts as decayed.
pub const BOUNDARY_DECAY: f64 = 1e-10;
/// Default absolute floor for growth fits.
pub const DEFAULT_FLOOR: f64 = 1e-13;
/// Default residual (RMS in log units) above which a fit is not power-law.
pub const DEFAULT_VALIDITY: f64 = 0.5;

/// A uniform periodic-style box: nodes `lo + j·h`, `j < n`, `h = (hi − lo)/n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub n: Vec<usize>,
}

impl GridBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, n: Vec<usize>) -> Result<Self, GridError> {
        let g = Self { lo, hi, n };
        g.validate()?;
        Ok(g)
    }

    pub fn new_1d(lo: f64, hi: f64, n: usize) -> Result<Self, GridError> {
        Self::new(vec![lo], vec![hi], vec![n])
    }

    pub fn new_2d(lo: [f64; 2], hi: [f64; 2], n: [usize; 2]) -> Result<Self, GridError> {
        Self::new(lo.to_vec(), hi.to_vec(), n.to_vec())
    }

    /// Symmetric box `[-half, half]^d` with `n` nodes per axis.
    pub fn centered(dim: usize, half: f64, n: usize) -> Result<Self, GridError> {
        Self::new(vec![-half; dim], vec![half; dim], vec![n; dim])
    }

    pub fn validate(&self) -> Result<(), GridError> {
        let d = self.lo.len();
        if !(d == 1 || d == 2) || self.hi.len() != d || self.n.len() != d {
            return Err(GridError::InvalidBox("dimension must be 1 or 2 with matching extents".into()));
        }
        for a in 0..d {
            if !(self.lo[a].is_finite() && self.hi[a].is_finite()) || self.lo[a] >= self.hi[a] {
                return Err(GridError::InvalidBox(format!("axis {a}: need lo < hi")));
            }
            if self.n[a] < 64 || !self.n[a].is_power_of_two() {
                return Err(GridError::InvalidBox(format!("axis {a}: n = {} must be a power of two ≥ 64", self.n[a])));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn h(&self, axis: usize) -> f64 {
        self.width(axis) / self.n[axis] as f64
    }

    pub fn point(&self, axis: usize, j: usize) -> f64 {
        self.lo[axis] + j as f64 * self.h(axis)
    }

    /// Coordinates of the node with flat index `i`.
    pub fn coords(&self, i: usize) -> [f64; 2] {
        if self.dim() == 1 {
            [self.point(0, i), 0.0]
        } else {
            [self.point(0, i / self.n[1]), self.point(1, i % self.n[1])]
        }
    }

    /// Euclidean norm of the node with flat index `i`.
    pub fn radius(&self, i: usize) -> f64 {
        let c = self.coords(i);
        if self.dim() == 1 {
            c[0].abs()
        } else {
            c[0].hypot(c[1])
        }
    }

    /// Inclusive node index range per axis covering `k`.
    pub fn node_range(&self, k: &SubBox) -> Result<Vec<(usize, usize)>, GridError> {
        if k.lo.len() != self.dim() || k.hi.len() != self.dim() {
            return Err(GridError::SubboxOutOfRange);
        }
        let mut out = Vec::with_capacity(self.dim());
        for a in 0..self.dim() {
            let h = self.h(a);
            let slack = 1e-9 * h;
            if k.lo[a] < self.lo[a] - slack || k.hi[a] > self.hi[a] + slack || k.lo[a] > k.hi[a] {
                return Err(GridError::SubboxOutOfRange);
            }
            let first = ((k.lo[a] - self.lo[a]) / h - 1e-9).ceil().max(0.0) as usize;
            let last = (((k.hi[a] - self.lo[a]) / h + 1e-9).floor() as usize).min(self.n[a] - 1);
            if first > last {
                return Err(GridError::SubboxOutOfRange);
            }
            out.push((first, last));
        }
        Ok(out)
    }

    /// The central half of the box (default compact set for space profiles).
    pub fn central_half(&self) -> SubBox {
        let lo = (0..self.dim()).map(|a| self.lo[a] + 0.25 * self.width(a)).collect();
        let hi = (0..self.dim()).map(|a| self.hi[a] - 0.25 * self.width(a)).collect();
        SubBox { lo, hi }
    }

    /// Largest spacing over the axes.
    pub fn max_h(&self) -> f64 {
        (0..self.dim()).map(|a| self.h(a)).fold(0.0, f64::max)
    }
}

/// A compact set `K`, given as a closed axis-aligned box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SubBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self { lo, hi }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self { lo: vec![lo], hi: vec![hi] }
    }

    /// The cube of half-width `r` around `center`.
    pub fn around(center: &[f64], r: f64) -> Self {
        Self { lo: center.iter().map(|c| c - r).collect(), hi: center.iter().map(|c| c + r).collect() }
    }
}

/// One frame: complex samples on a box, row-major with axis 0 slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T> {
    pub grid: GridBox,
    pub samples: Vec<Complex<T>>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(grid: GridBox, samples: Vec<Complex<T>>) -> Result<Self, GridError> {
        if samples.len() != grid.len() {
            return Err(GridError::Mismatch(format!("{} samples for {} nodes", samples.len(), grid.len())));
        }
        if samples.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(GridError::NonFinite("samples"));
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: &GridBox) -> Self {
        Self { grid: grid.clone(), samples: vec![Complex::default(); grid.len()] }
    }

    pub fn from_fn(grid: &GridBox, f: impl Fn(&[f64]) -> Complex<f64> + Sync) -> Self {
        let d = grid.dim();
        let samples = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let c = grid.coords(i);
                let v = f(&c[..d]);
                Complex::new(T::of(v.re), T::of(v.im))
            })
            .collect();
        Self { grid: grid.clone(), samples }
    }

    pub fn from_real_fn(grid: &GridBox, f: impl Fn(&[f64]) -> f64 + Sync) -> Self {
        Self::from_fn(grid, |x| Complex::new(f(x), 0.0))
    }

    pub fn sup(&self) -> f64 {
        self.samples.iter().map(|v| v.norm().f64()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: f64) -> Self {
        let c = T::of(c);
        Self { grid: self.grid.clone(), samples: self.samples.iter().map(|v| v * c).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>) -> Result<Self, GridError> {
        if self.grid != other.grid {
            return Err(GridError::Mismatch("frames live on different boxes".into()));
        }
        Ok(Self { grid: self.grid.clone(), samples: self.samples.iter().zip(&other.samples).map(|(a, b)| f(*a, *b)).collect() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, GridError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self, GridError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self, GridError> {
        self.zip_with(other, |a, b| a * b)
    }

    /// Largest `|g|` on the two outermost node layers of every axis,
    /// relative to `sup |g|` (zero for the zero frame).
    pub fn boundary_ratio(&self) -> f64 {
        let sup = self.sup();
        if sup == 0.0 {
            return 0.0;
        }
        let n = &self.grid.n;
        let on_edge = |j: usize, len: usize| j < 2 || j + 2 >= len;
        let mut edge: f64 = 0.0;
        for (i, v) in self.samples.iter().enumerate() {
            let hit = if n.len() == 1 { on_edge(i, n[0]) } else { on_edge(i / n[1], n[0]) || on_edge(i % n[1], n[1]) };
            if hit {
                edge = edge.max(v.norm().f64());
            }
        }
        edge / sup
    }

    pub fn require_decay(&self) -> Result<(), GridError> {
        let r = self.boundary_ratio();
        if r > BOUNDARY_DECAY {
            Err(GridError::BoundaryDecay(r))
        } else {
            Ok(())
        }
    }

    /// Quadrature `h^d Σ w(x) g(x)`.
    pub fn integrate_with(&self, w: impl Fn(&[f64]) -> f64) -> Complex<f64> {
        let d = self.grid.dim();
        let cell: f64 = (0..d).map(|a| self.grid.h(a)).product();
        let mut acc = Complex::new(0.0, 0.0);
        for (i, v) in self.samples.iter().enumerate() {
            let c = self.grid.coords(i);
            acc += Complex::new(v.re.f64(), v.im.f64()) * w(&c[..d]);
        }
        acc * cell
    }

    /// Converts the scalar type of the samples.
    pub fn cast<U: Real>(&self) -> GridFunction<U> {
        GridFunction {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|v| Complex::new(U::of(v.re.f64()), U::of(v.im.f64()))).collect(),
        }
    }
}

/// Which variable the frames are sampled in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Space,
    Frequency,
}

/// A strictly decreasing list of `ε` values in `(0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ladder(pub Vec<f64>);

impl Ladder {
    pub fn new(eps: Vec<f64>) -> Result<Self, GridError> {
        if eps.iter().any(|e| !(e.is_finite() && *e > 0.0 && *e <= 1.0)) {
            return Err(GridError::InvalidLadder("values must lie in (0, 1]".into()));
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(GridError::InvalidLadder("values must be strictly decreasing".into()));
        }
        Ok(Self(eps))
    }

    /// `ε_k = 2^{-k}` for `k = k_min..=k_max`.
    pub fn dyadic(k_min: u32, k_max: u32) -> Result<Self, GridError> {
        if k_max < k_min {
            return Err(GridError::InvalidLadder("k_max < k_min".into()));
        }
        Self::new((k_min..=k_max).map(|k| 0.5f64.powi(k as i32)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        *self.0.last().expect("nonempty ladder")
    }
}

/// The computational representative `(f_ε)_ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonNet<T> {
    pub grid: GridBox,
    pub ladder: Ladder,
    pub frames: Vec<GridFunction<T>>,
    pub side: Side,
    /// For frequency-side nets, the space box they were transformed from.
    pub space_grid: Option<GridBox>,
}

impl<T: Real> EpsilonNet<T> {
    pub fn new(grid: GridBox, ladder: Ladder, frames: Vec<GridFunction<T>>, side: Side) -> Result<Self, GridError> {
        if ladder.len() < 6 {
            return Err(GridError::InvalidLadder(format!("length {} < 6", ladder.len())));
        }
        if frames.len() != ladder.len() {
            return Err(GridError::Mismatch(format!("{} frames for {} ladder values", frames.len(), ladder.len())));
        }
        if frames.iter().any(|f| f.grid != grid) {
            return Err(GridError::Mismatch("frames must share the net's box".into()));
        }
        Ok(Self { grid, ladder, frames, side, space_grid: None })
    }

    /// Builds one frame per ladder value; frames are computed concurrently
    /// and assembled in ladder order.
    pub fn build(
        grid: &GridBox,
        ladder: &Ladder,
        side: Side,
        frame: impl Fn(f64) -> Result<GridFunction<T>, GridError> + Sync,
    ) -> Result<Self, GridError> {
        let frames = ladder.0.par_iter().map(|e| frame(*e)).collect::<Result<Vec<_>, _>>()?;
        Self::new(grid.clone(), ladder.clone(), frames, side)
    }

    /// The ε-independent net `f_ε = f`.
    pub fn constant(f: &GridFunction<T>, ladder: &Ladder) -> Result<Self, GridError> {
        Self::new(f.grid.clone(), ladder.clone(), vec![f.clone(); ladder.len()], Side::Space)
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(&GridFunction<T>, &GridFunction<T>) -> Result<GridFunction<T>, GridError>) -> Result<Self, GridError> {
        if self.ladder != other.ladder || self.grid != other.grid || self.side != other.side {
            return Err(GridError::Mismatch("nets differ in box, ladder or side".into()));
        }
        let frames = self.frames.iter().zip(&other.frames).map(|(a, b)| f(a, b)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { frames, ..self.clone_meta() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, GridError> {
        self.zip_with(other, |a, b| a.sub(b))
    }

    pub fn add(&self, other: &Self) -> Result<Self, GridError> {
        self.zip_with(other, |a, b| a.add(b))
    }

    pub fn mul(&self, other: &Self) -> Result<Self, GridError> {
        self.zip_with(other, |a, b| a.mul(b))
    }

    /// Frame-wise `c(ε)·f_ε`.
    pub fn scale_by(&self, c: impl Fn(f64) -> f64) -> Self {
        let frames = self.ladder.0.iter().zip(&self.frames).map(|(e, f)| f.scale(c(*e))).collect();
        Self { frames, ..self.clone_meta() }
    }

    /// Frame-wise multiplication by one fixed function.
    pub fn multiply_by(&self, g: &GridFunction<T>) -> Result<Self, GridError> {
        let frames = self.frames.iter().map(|f| f.mul(g)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { frames, ..self.clone_meta() })
    }

    pub fn map_frames(&self, f: impl Fn(&GridFunction<T>) -> Result<GridFunction<T>, GridError> + Sync) -> Result<Self, GridError> {
        let frames = self.frames.par_iter().map(&f).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { frames, ..self.clone_meta() })
    }

    fn clone_meta(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            ladder: self.ladder.clone(),
            frames: Vec::new(),
            side: self.side,
            space_grid: self.space_grid.clone(),
        }
    }

    pub fn require_decay(&self) -> Result<(), GridError> {
        self.frames.iter().try_for_each(|f| f.require_decay())
    }
}

/// Discrete differentiation scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Fd4,
    Spectral,
}

/// Fornberg's finite-difference weights for derivative `m` at `z` over
/// nodes `x`.
fn fornberg(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// A fourth-order stencil with one-sided closures at both ends.
struct Stencil {
    order: usize,
    interior: Vec<f64>,
    /// `(node, first offset, weights)` for the two nodes at the left edge.
    left: Vec<(usize, Vec<f64>)>,
}

impl Stencil {
    fn new(order: usize) -> Self {
        let offsets: Vec<f64> = (-2..=2).map(|o| o as f64).collect();
        let interior = fornberg(0.0, &offsets, order);
        let width = if order == 1 { 5 } else { 6 };
        let nodes: Vec<f64> = (0..width).map(|o| o as f64).collect();
        let left = (0..2).map(|j| (j, fornberg(j as f64, &nodes, order))).collect();
        Self { order, interior, left }
    }

    fn apply<T: Real>(&self, line: &[Complex<T>], out: &mut [Complex<T>], h: f64) {
        let n = line.len();
        let scale = 1.0 / h.powi(self.order as i32);
        let dot = |w: &[f64], start: usize, reversed: bool| {
            let mut acc = Complex::<f64>::new(0.0, 0.0);
            for (k, c) in w.iter().enumerate() {
                let idx = if reversed { start - k } else { start + k };
                let v = line[idx];
                acc += Complex::new(v.re.f64(), v.im.f64()) * *c;
            }
            acc
        };
        let sign = if self.order % 2 == 1 { -1.0 } else { 1.0 };
        for (j, w) in &self.left {
            let v = dot(w, 0, false) * scale;
            out[*j] = Complex::new(T::of(v.re), T::of(v.im));
            // Mirror image at the right edge; odd orders flip sign.
            let v = dot(w, n - 1, true) * (scale * sign);
            out[n - 1 - j] = Complex::new(T::of(v.re), T::of(v.im));
        }
        let w: Vec<T> = self.interior.iter().map(|c| T::of(c * scale)).collect();
        for j in 2..n - 2 {
            let mut acc = Complex::<T>::default();
            for (k, c) in w.iter().enumerate() {
                acc = acc + line[j + k - 2] * *c;
            }
            out[j] = acc;
        }
    }
}

fn fd_pass<T: Real>(g: &GridFunction<T>, axis: usize, stencil: &Stencil) -> GridFunction<T> {
    let grid = &g.grid;
    let h = grid.h(axis);
    let mut out = vec![Complex::<T>::default(); g.samples.len()];
    if grid.dim() == 1 || axis == 1 {
        let len = grid.n[axis];
        out.par_chunks_mut(len).zip(g.samples.par_chunks(len)).for_each(|(o, l)| stencil.apply(l, o, h));
    } else {
        let (n0, n1) = (grid.n[0], grid.n[1]);
        let mut line = vec![Complex::<T>::default(); n0];
        let mut res = vec![Complex::<T>::default(); n0];
        for c in 0..n1 {
            for r in 0..n0 {
                line[r] = g.samples[r * n1 + c];
            }
            stencil.apply(&line, &mut res, h);
            for r in 0..n0 {
                out[r * n1 + c] = res[r];
            }
        }
    }
    GridFunction { grid: grid.clone(), samples: out }
}

fn spectral_pass<T: Real>(g: &GridFunction<T>, axis: usize, order: usize) -> GridFunction<T> {
    transform::apply_multiplier(g, axis, |xi, nyquist| {
        if nyquist && order % 2 == 1 {
            Complex::new(0.0, 0.0)
        } else {
            Complex::new(0.0, xi).powu(order as u32)
        }
    })
}

/// `∂^order` along `axis`.
///
/// Fourth-order differences compose `D2` passes followed by one `D1` pass
/// for odd orders.
pub fn derivative<T: Real>(g: &GridFunction<T>, axis: usize, order: usize, scheme: Scheme) -> Result<GridFunction<T>, GridError> {
    if order > 6 {
        return Err(GridError::OrderTooHigh(order));
    }
    if axis >= g.grid.dim() {
        return Err(GridError::Mismatch(format!("axis {axis} out of range")));
    }
    if order == 0 {
        return Ok(g.clone());
    }
    match scheme {
        Scheme::Spectral => {
            g.require_decay()?;
            Ok(spectral_pass(g, axis, order))
        }
        Scheme::Fd4 => {
            let d2 = Stencil::new(2);
            let mut cur = g.clone();
            for _ in 0..order / 2 {
                cur = fd_pass(&cur, axis, &d2);
            }
            if order % 2 == 1 {
                cur = fd_pass(&cur, axis, &Stencil::new(1));
            }
            Ok(cur)
        }
    }
}

/// Calls `f(α, ∂^α g)` for every multi-index `|α| ≤ l`, computing each
/// derivative once and keeping at most two intermediate frames alive.
pub fn for_each_derivative<T: Real>(
    g: &GridFunction<T>,
    l: usize,
    scheme: Scheme,
    mut f: impl FnMut(&[usize], &GridFunction<T>),
) -> Result<(), GridError> {
    if l > 6 {
        return Err(GridError::OrderTooHigh(l));
    }
    if scheme == Scheme::Spectral {
        g.require_decay()?;
    }
    // Orders along one axis in the sequence 0, 1, 2, …, built incrementally.
    let chain = |base: &GridFunction<T>, axis: usize, max: usize, f: &mut dyn FnMut(usize, &GridFunction<T>)| {
        match scheme {
            Scheme::Spectral => {
                f(0, base);
                for k in 1..=max {
                    f(k, &spectral_pass(base, axis, k));
                }
            }
            Scheme::Fd4 => {
                let (d1, d2) = (Stencil::new(1), Stencil::new(2));
                let mut even = base.clone();
                for k in 0..=max {
                    if k % 2 == 0 {
                        if k > 0 {
                            even = fd_pass(&even, axis, &d2);
                        }
                        f(k, &even);
                    } else {
                        f(k, &fd_pass(&even, axis, &d1));
                    }
                }
            }
        }
    };
    if g.grid.dim() == 1 {
        chain(g, 0, l, &mut |k, d| f(&[k], d));
    } else {
        chain(g, 0, l, &mut |a0, d0| {
            chain(d0, 1, l - a0, &mut |a1, d| f(&[a0, a1], d));
        });
    }
    Ok(())
}

/// Ignores samples this far below the frame maximum in weighted sups, so
/// that polynomial weights do not amplify transform roundoff.
pub fn noise_fraction<T: Real>() -> f64 {
    1e3 * T::EPSILON_F64
}

fn sup_in<T: Real>(g: &GridFunction<T>, ranges: &[(usize, usize)]) -> f64 {
    let mut m: f64 = 0.0;
    if ranges.len() == 1 {
        for v in &g.samples[ranges[0].0..=ranges[0].1] {
            m = m.max(v.norm().f64());
        }
    } else {
        let n1 = g.grid.n[1];
        for r in ranges[0].0..=ranges[0].1 {
            for v in &g.samples[r * n1 + ranges[1].0..=r * n1 + ranges[1].1] {
                m = m.max(v.norm().f64());
            }
        }
    }
    m
}

/// `sup (1+|x|)^q |g|` for each `q ≤ q_max`, over the nodes selected by
/// `keep`.
pub fn weighted_sups<T: Real>(g: &GridFunction<T>, q_max: usize, keep: impl Fn(usize) -> bool) -> Vec<f64> {
    let max = g.sup();
    let cut = noise_fraction::<T>() * max;
    let mut out = vec![0.0f64; q_max + 1];
    for (i, v) in g.samples.iter().enumerate() {
        let a = v.norm().f64();
        if a == 0.0 || !keep(i) {
            continue;
        }
        if a < cut {
            out[0] = out[0].max(a);
            continue;
        }
        let w = 1.0 + g.grid.radius(i);
        let mut wq = 1.0;
        for o in out.iter_mut() {
            *o = o.max(wq * a);
            wq *= w;
        }
    }
    out
}

/// `p_{K,l}(g) = max_{|α| ≤ l} sup_K |∂^α g|`.
pub fn seminorm_p<T: Real>(g: &GridFunction<T>, k: &SubBox, l: usize, scheme: Scheme) -> Result<f64, GridError> {
    Ok(*space_sups(g, std::slice::from_ref(k), l, scheme)?[0].last().expect("l+1 entries"))
}

/// Roundoff level of an order-`order` derivative of `g`: the frame noise
/// amplified by the largest resolvable frequency `π/h` per derivative.
pub fn derivative_noise<T: Real>(g: &GridFunction<T>, order: usize) -> f64 {
    let h = (0..g.grid.dim()).map(|a| g.grid.h(a)).fold(f64::INFINITY, f64::min);
    noise_fraction::<T>() * g.sup() * (std::f64::consts::PI / h).powi(order as i32)
}

/// `[K][l] ↦ p_{K,l}(g)` for several compact sets at once.
///
/// Sups at or below [`derivative_noise`] are reported as 0: on fine grids
/// the differentiated roundoff of a frame would otherwise register as
/// growth where the frame is numerically zero.
pub fn space_sups<T: Real>(g: &GridFunction<T>, ks: &[SubBox], l: usize, scheme: Scheme) -> Result<Vec<Vec<f64>>, GridError> {
    let ranges = ks.iter().map(|k| g.grid.node_range(k)).collect::<Result<Vec<_>, _>>()?;
    let mut out = vec![vec![0.0f64; l + 1]; ks.len()];
    let noise: Vec<f64> = (0..=l).map(|o| derivative_noise(g, o)).collect();
    for_each_derivative(g, l, scheme, |alpha, d| {
        let order: usize = alpha.iter().sum();
        for (row, r) in out.iter_mut().zip(&ranges) {
            let s = sup_in(d, r);
            let s = if s <= noise[order] { 0.0 } else { s };
            for v in row[order..].iter_mut() {
                *v = v.max(s);
            }
        }
    })?;
    Ok(out)
}

/// `μ_{q,l}(g) = max_{|α| ≤ l} sup (1+|x|)^q |∂^α g|` over the whole box.
pub fn seminorm_mu<T: Real>(g: &GridFunction<T>, q: usize, l: usize, scheme: Scheme) -> Result<f64, GridError> {
    Ok(decay_sups(g, q, l, scheme)?[q][l])
}

/// `[q][l] ↦ μ_{q,l}(g)` for all `q ≤ q_max`, `l ≤ l_max`.
pub fn decay_sups<T: Real>(g: &GridFunction<T>, q_max: usize, l_max: usize, scheme: Scheme) -> Result<Vec<Vec<f64>>, GridError> {
    if q_max > 12 {
        return Err(GridError::Mismatch(format!("weight order {q_max} exceeds 12")));
    }
    let mut out = vec![vec![0.0f64; l_max + 1]; q_max + 1];
    for_each_derivative(g, l_max, scheme, |alpha, d| {
        let order: usize = alpha.iter().sum();
        let sups = weighted_sups(d, q_max, |_| true);
        for (q, s) in sups.into_iter().enumerate() {
            for v in out[q][order..].iter_mut() {
                *v = v.max(s);
            }
        }
    })?;
    Ok(out)
}

/// A fitted growth law `value ≈ C·ε^{-N}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    #[serde(with = "serde_ext::ext_f64")]
    pub exponent: f64,
    #[serde(with = "serde_ext::ext_f64")]
    pub log_c: f64,
    pub residual: f64,
    pub used: usize,
}

impl GrowthFit {
    pub fn negligible() -> Self {
        Self { exponent: f64::NEG_INFINITY, log_c: f64::NEG_INFINITY, residual: 0.0, used: 0 }
    }

    pub fn is_negligible(&self) -> bool {
        self.exponent == f64::NEG_INFINITY
    }
}

/// Least-squares fit of `ln value` against `ln(1/ε)`.
///
/// Values at or below `floor` are excluded; when more than half are, or
/// fewer than four remain, the negligible sentinel `N̂ = −∞` is returned.
pub fn fit_growth(values: &[f64], ladder: &[f64], floor: f64) -> Result<GrowthFit, GridError> {
    if values.len() != ladder.len() {
        return Err(GridError::Mismatch(format!("{} values for {} ladder points", values.len(), ladder.len())));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(GridError::NonFinite("fit values"));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = values
        .iter()
        .zip(ladder)
        .filter(|(v, _)| **v > floor && v.is_finite())
        .map(|(v, e)| (-e.ln(), v.ln()))
        .unzip();
    let dropped = values.len() - xs.len();
    // Too few points left because the values sank below the floor: they
    // vanish within the ladder, which no fit could tell from negligible.
    if 2 * dropped > values.len() || (dropped > 0 && xs.len() < 4) {
        return Ok(GrowthFit::negligible());
    }
    if xs.len() < 4 {
        return Err(GridError::InsufficientPoints(xs.len()));
    }
    let (slope, icpt) = crate::scales::least_squares(&xs, &ys);
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - slope * x - icpt).powi(2)).sum();
    Ok(GrowthFit { exponent: slope, log_c: icpt, residual: (rss / xs.len() as f64).sqrt(), used: xs.len() })
}

/// Options shared by every profile computation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub floor: f64,
    /// Half-open range of ladder indices used for fitting.
    pub window: Option<(usize, usize)>,
    pub scheme: Scheme,
    pub validity: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { floor: DEFAULT_FLOOR, window: None, scheme: Scheme::Fd4, validity: DEFAULT_VALIDITY }
    }
}

impl FitOptions {
    pub fn with_scheme(self, scheme: Scheme) -> Self {
        Self { scheme, ..self }
    }

    fn range(&self, len: usize) -> Result<(usize, usize), GridError> {
        let (a, b) = self.window.unwrap_or((0, len));
        if a >= b || b > len {
            return Err(GridError::InvalidLadder(format!("fit window {a}..{b} outside 0..{len}")));
        }
        Ok((a, b))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileAxis {
    SpaceL,
    WeightQ,
    TwoIndex,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub index: Vec<usize>,
    pub fit: GrowthFit,
    /// The seminorm value per ladder point in the fit window.
    pub values: Vec<f64>,
}

/// Fitted exponents indexed by `l`, `q` or `(q, l)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthProfile {
    pub axis: ProfileAxis,
    pub entries: Vec<ProfileEntry>,
    pub ladder_used: Vec<f64>,
    pub validity_threshold: f64,
}

impl GrowthProfile {
    /// Fits every row of `table[index] = values per ε`.
    pub fn from_values(
        axis: ProfileAxis,
        rows: Vec<(Vec<usize>, Vec<f64>)>,
        ladder: &Ladder,
        opts: &FitOptions,
    ) -> Result<Self, GridError> {
        let (a, b) = opts.range(ladder.len())?;
        let eps = &ladder.0[a..b];
        let entries = rows
            .into_iter()
            .map(|(index, values)| {
                let values = values[a..b].to_vec();
                let fit = fit_growth(&values, eps, opts.floor)?;
                Ok(ProfileEntry { index, fit, values })
            })
            .collect::<Result<Vec<_>, GridError>>()?;
        Ok(Self { axis, entries, ladder_used: eps.to_vec(), validity_threshold: opts.validity })
    }

    /// `(exponent, residual)` in index order for one-index profiles.
    pub fn one_index_exponents(&self) -> Result<Vec<(f64, f64)>, String> {
        if self.axis == ProfileAxis::TwoIndex {
            return Err("two-index profile given where a one-index profile is required".into());
        }
        Ok(self.entries.iter().map(|e| (e.fit.exponent, e.fit.residual)).collect())
    }

    pub fn exponents(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.fit.exponent).collect()
    }

    pub fn get(&self, index: &[usize]) -> Option<&GrowthFit> {
        self.entries.iter().find(|e| e.index == index).map(|e| &e.fit)
    }

    /// `[q][l]` table of exponents of a two-index profile.
    pub fn table(&self) -> Vec<Vec<f64>> {
        let nq = self.entries.iter().map(|e| e.index[0]).max().map_or(0, |m| m + 1);
        let nl = self.entries.iter().map(|e| e.index[1]).max().map_or(0, |m| m + 1);
        let mut t = vec![vec![f64::NAN; nl]; nq];
        for e in &self.entries {
            t[e.index[0]][e.index[1]] = e.fit.exponent;
        }
        t
    }

    /// A one-index profile from column `l` (or row `q`) of a two-index one.
    pub fn slice(&self, axis: ProfileAxis, fixed: usize) -> GrowthProfile {
        let (pick, keep) = match axis {
            ProfileAxis::WeightQ => (1, 0),
            _ => (0, 1),
        };
        let entries = self
            .entries
            .iter()
            .filter(|e| e.index[pick] == fixed)
            .map(|e| ProfileEntry { index: vec![e.index[keep]], ..e.clone() })
            .collect();
        GrowthProfile { axis, entries, ladder_used: self.ladder_used.clone(), validity_threshold: self.validity_threshold }
    }

    /// Largest residual over entries that are not decaying.
    pub fn max_residual(&self) -> f64 {
        self.entries.iter().filter(|e| e.fit.exponent >= 0.0).map(|e| e.fit.residual).fold(0.0, f64::max)
    }

    fn headers(&self) -> Vec<&'static str> {
        let idx: &[&str] = match self.axis {
            ProfileAxis::SpaceL => &["l"],
            ProfileAxis::WeightQ => &["q"],
            ProfileAxis::TwoIndex => &["q", "l"],
        };
        idx.iter().copied().chain(["exponent", "intercept", "residual"]).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.headers()).expect("in-memory write");
        for e in &self.entries {
            let mut rec: Vec<String> = e.index.iter().map(|i| i.to_string()).collect();
            rec.push(serde_ext::ext_f64::format(e.fit.exponent));
            rec.push(serde_ext::ext_f64::format(e.fit.log_c));
            rec.push(serde_ext::ext_f64::format(e.fit.residual));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    /// Parses the CSV written by [`GrowthProfile::to_csv`]. Raw values and
    /// the ladder are not part of the CSV and come back empty.
    pub fn from_csv(text: &str) -> Result<Self, GridError> {
        let bad = |m: String| GridError::Mismatch(format!("profile csv: {m}"));
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let headers = r.headers().map_err(|e| bad(e.to_string()))?.clone();
        let n_idx = headers.len().checked_sub(3).ok_or_else(|| bad("too few columns".into()))?;
        let axis = match (n_idx, headers.get(0)) {
            (1, Some("l")) => ProfileAxis::SpaceL,
            (1, Some("q")) => ProfileAxis::WeightQ,
            (2, _) => ProfileAxis::TwoIndex,
            _ => return Err(bad("unrecognized header".into())),
        };
        let mut entries = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let index = (0..n_idx).map(|i| rec[i].parse::<usize>().map_err(|e| bad(e.to_string()))).collect::<Result<Vec<_>, _>>()?;
            let num = |i: usize| serde_ext::ext_f64::parse(&rec[i]).ok_or_else(|| bad(format!("bad number `{}`", &rec[i])));
            let fit = GrowthFit { exponent: num(n_idx)?, log_c: num(n_idx + 1)?, residual: num(n_idx + 2)?, used: 0 };
            entries.push(ProfileEntry { index, fit, values: Vec::new() });
        }
        Ok(Self { axis, entries, ladder_used: Vec::new(), validity_threshold: DEFAULT_VALIDITY })
    }
}

fn transpose_rows(per_frame: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = per_frame.first().map_or(0, |r| r.len());
    (0..n).map(|i| per_frame.iter().map(|r| r[i]).collect()).collect()
}

/// `l ↦ fit of p_{K,l}(f_ε)` for `l ≤ L`.
pub fn profile_space<T: Real>(net: &EpsilonNet<T>, k: &SubBox, l: usize, opts: &FitOptions) -> Result<GrowthProfile, GridError> {
    Ok(profile_space_multi(net, std::slice::from_ref(k), l, opts)?.remove(0))
}

/// Space profiles for several compact sets, one derivative sweep per frame.
pub fn profile_space_multi<T: Real>(net: &EpsilonNet<T>, ks: &[SubBox], l: usize, opts: &FitOptions) -> Result<Vec<GrowthProfile>, GridError> {
    if net.side != Side::Space {
        return Err(GridError::WrongSide(net.side));
    }
    // [frame][K][l]
    let per_frame = net.frames.par_iter().map(|f| space_sups(f, ks, l, opts.scheme)).collect::<Result<Vec<_>, _>>()?;
    (0..ks.len())
        .map(|ki| {
            let rows = transpose_rows(per_frame.iter().map(|f| f[ki].clone()).collect());
            let rows = rows.into_iter().enumerate().map(|(li, v)| (vec![li], v)).collect();
            GrowthProfile::from_values(ProfileAxis::SpaceL, rows, &net.ladder, opts)
        })
        .collect()
}

/// `(q, l) ↦ fit of μ_{q,l}(f_ε)`.
pub fn profile_decay<T: Real>(net: &EpsilonNet<T>, q: usize, l: usize, opts: &FitOptions) -> Result<GrowthProfile, GridError> {
    net.require_decay()?;
    let per_frame = net.frames.par_iter().map(|f| decay_sups(f, q, l, opts.scheme)).collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for qi in 0..=q {
        for li in 0..=l {
            rows.push((vec![qi, li], per_frame.iter().map(|t| t[qi][li]).collect()));
        }
    }
    GrowthProfile::from_values(ProfileAxis::TwoIndex, rows, &net.ladder, opts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum NegligibilityMode {
    Space { k: SubBox },
    Decay { q: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegligibilityReport {
    pub negligible: bool,
    pub m_max: usize,
    pub floor: f64,
    /// One row per tested seminorm (`l = 0`, and `q ≤ Q` in decay mode).
    pub rows: Vec<ProfileEntry>,
}

/// Zero-derivative-order negligibility: every tested seminorm decays with
/// fitted slope at least `m_max`, or stays below `floor`.
pub fn negligibility<T: Real>(net: &EpsilonNet<T>, mode: &NegligibilityMode, m_max: usize, floor: f64) -> Result<NegligibilityReport, GridError> {
    let opts = FitOptions { floor, ..FitOptions::default() };
    let profile = match mode {
        NegligibilityMode::Space { k } => {
            let per_frame = net
                .frames
                .par_iter()
                .map(|f| Ok(sup_in(f, &f.grid.node_range(k)?)))
                .collect::<Result<Vec<_>, GridError>>()?;
            GrowthProfile::from_values(ProfileAxis::SpaceL, vec![(vec![0], per_frame)], &net.ladder, &opts)?
        }
        NegligibilityMode::Decay { q } => {
            let per_frame: Vec<Vec<f64>> = net.frames.par_iter().map(|f| weighted_sups(f, *q, |_| true)).collect();
            GrowthProfile::from_values(ProfileAxis::WeightQ, transpose_rows(per_frame).into_iter().enumerate().map(|(i, v)| (vec![i], v)).collect(), &net.ladder, &opts)?
        }
    };
    let negligible = profile
        .entries
        .iter()
        .all(|e| e.fit.is_negligible() || e.values.iter().all(|v| *v <= floor) || -e.fit.exponent >= m_max as f64);
    Ok(NegligibilityReport { negligible, m_max, floor, rows: profile.entries })
}

/// The absolute floor raised to `floor · S`, `S ≥ 1`, where `S` bounds the
/// tested seminorms of spatially uniform roundoff on frames of `refs`:
/// the frame sup on `K` in space mode, and the frame sup times the
/// largest weight `(1+|x|)^q` on the box in decay mode. Two numerical
/// routes to the same net differ by roundoff of this size, which an
/// absolute floor cannot absorb once frames grow.
pub fn roundoff_floor<T: Real>(refs: &[&EpsilonNet<T>], mode: &NegligibilityMode, floor: f64) -> Result<f64, GridError> {
    let mut s: f64 = 1.0;
    for net in refs {
        for f in &net.frames {
            let m = match mode {
                NegligibilityMode::Space { k } => sup_in(f, &f.grid.node_range(k)?),
                NegligibilityMode::Decay { q } => {
                    let r = (0..f.grid.len()).map(|i| f.grid.radius(i)).fold(0.0, f64::max);
                    f.sup() * (1.0 + r).powi(*q as i32)
                }
            };
            s = s.max(m);
        }
    }
    Ok(floor * s)
}

/// Boolean form of [`negligibility`]; unfittable nets count as not negligible.
pub fn is_negligible<T: Real>(net: &EpsilonNet<T>, mode: &NegligibilityMode, m_max: usize, floor: f64) -> bool {
    negligibility(net, mode, m_max, floor).map(|r| r.negligible).unwrap_or(false)
}
