//! Catalog distributions and their embeddings as ε-nets: `σ`, `ι`, `ι_S`,
//! `ι_{S′}` and the compact-support embedding `ι_{C,S}`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{profile_space, EpsilonNet, FitOptions, GridBox, GridError, GridFunction, GrowthProfile, Ladder, Side, SubBox};
use crate::mollifier::{Mollifier, MollifierError, SmoothStep};
use crate::scalar::Real;
use crate::scales::affine_fit;
use crate::transform;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbedError {
    #[error("{0} has no convolution rule on a {1}-dimensional box")]
    RuleMissing(String, usize),
    #[error("{spec} is not in class {class:?}")]
    NotInClass { spec: String, class: DistClass },
    #[error("frame {index} exceeds the cutoff plateau by {excess:.3e}")]
    SupportNotContained { index: usize, excess: f64 },
    #[error(transparent)]
    Mollifier(#[from] MollifierError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// A distribution space a catalog entry belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DistClass {
    /// Compactly supported distributions.
    #[serde(rename = "E'")]
    EPrime,
    /// Rapidly decreasing distributions (convolutors).
    #[serde(rename = "O'_C")]
    OPrimeC,
    /// Multipliers' duals: sums of derivatives of rapidly decreasing continuous functions.
    #[serde(rename = "O'_M")]
    OPrimeM,
    /// Tempered distributions.
    #[serde(rename = "S'")]
    SPrime,
    /// Schwartz functions.
    S,
    /// Smooth functions.
    #[serde(rename = "C_inf")]
    CInf,
}

/// Smooth catalog functions of one variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum SmoothFn {
    /// `exp(-x²/w²)`.
    Gaussian {
        #[serde(default = "one")]
        width: f64,
    },
    /// `exp(1 − 1/(1 − (x/r)²))` on `|x| < r`.
    Bump {
        #[serde(default = "one")]
        radius: f64,
    },
    /// `Σ c_k x^k`.
    Polynomial { coeffs: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl SmoothFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SmoothFn::Gaussian { width } => (-(x / width).powi(2)).exp(),
            SmoothFn::Bump { radius } => bump(x / radius),
            SmoothFn::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
        }
    }
}

/// `exp(1 − 1/(1 − t²))` for `|t| < 1`, else 0.
pub fn bump(t: f64) -> f64 {
    let s = 1.0 - t * t;
    if s <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / s).exp()
    }
}

/// Continuous, non-smooth catalog functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContFn {
    /// `|x|`.
    Abs,
    /// `max(x, 0)`.
    Ramp,
}

impl ContFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ContFn::Abs => x.abs(),
            ContFn::Ramp => x.max(0.0),
        }
    }
}

/// A catalog distribution. One-dimensional entries act along a single
/// axis; two-dimensional distributions are tensor products or linear
/// combinations of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum DistributionSpec {
    /// `δ^{(k)}(x − at)`.
    DeltaDeriv {
        k: usize,
        #[serde(default)]
        at: f64,
    },
    /// `H(x − at)`.
    Heaviside {
        #[serde(default)]
        at: f64,
    },
    Smooth { f: SmoothFn },
    /// `∂^α f` for a continuous `f`.
    ContDeriv { f: ContFn, alpha: usize },
    /// `P(x)·e^{-|x|}`: one rapidly decreasing continuous term.
    WeightedPoly { coeffs: Vec<f64> },
    /// `T₁(x₁) ⊗ T₂(x₂)`.
    Tensor { factors: Vec<DistributionSpec> },
    /// `Σ c_i T_i`.
    Combination { terms: Vec<(f64, DistributionSpec)> },
    Zero,
}

impl DistributionSpec {
    pub fn delta() -> Self {
        Self::DeltaDeriv { k: 0, at: 0.0 }
    }

    pub fn delta_deriv(k: usize) -> Self {
        Self::DeltaDeriv { k, at: 0.0 }
    }

    pub fn heaviside() -> Self {
        Self::Heaviside { at: 0.0 }
    }

    pub fn gaussian() -> Self {
        Self::Smooth { f: SmoothFn::Gaussian { width: 1.0 } }
    }

    pub fn bump() -> Self {
        Self::Smooth { f: SmoothFn::Bump { radius: 1.0 } }
    }

    /// Short names accepted on the command line.
    pub fn named(name: &str) -> Option<Self> {
        Some(match name {
            "delta" => Self::delta(),
            "delta1" | "delta'" => Self::delta_deriv(1),
            "delta2" | "delta''" => Self::delta_deriv(2),
            "heaviside" | "H" => Self::heaviside(),
            "gaussian" => Self::gaussian(),
            "bump" => Self::bump(),
            "zero" => Self::Zero,
            "abs2" => Self::ContDeriv { f: ContFn::Abs, alpha: 2 },
            "weighted_poly" => Self::WeightedPoly { coeffs: vec![1.0, 1.0] },
            "bump_x2_heaviside_x1" => Self::Tensor { factors: vec![Self::heaviside(), Self::Smooth { f: SmoothFn::Bump { radius: 2.0 } }] },
            "delta_2d" => Self::Tensor { factors: vec![Self::delta(), Self::delta()] },
            "gaussian_2d" => Self::Tensor { factors: vec![Self::gaussian(), Self::gaussian()] },
            "bump_2d" => Self::Tensor { factors: vec![Self::bump(), Self::bump()] },
            _ => return None,
        })
    }

    pub fn label(&self) -> String {
        serde_json::to_string(self).expect("serializable spec")
    }

    /// The spaces this entry belongs to.
    pub fn classes(&self) -> Vec<DistClass> {
        use DistClass::*;
        let mut c = match self {
            DistributionSpec::DeltaDeriv { .. } | DistributionSpec::Zero => vec![EPrime, OPrimeC, OPrimeM, SPrime],
            DistributionSpec::Heaviside { .. } => vec![SPrime],
            DistributionSpec::Smooth { f: SmoothFn::Gaussian { .. } } => vec![S, CInf, OPrimeC, OPrimeM, SPrime],
            DistributionSpec::Smooth { f: SmoothFn::Bump { .. } } => vec![S, CInf, EPrime, OPrimeC, OPrimeM, SPrime],
            DistributionSpec::Smooth { f: SmoothFn::Polynomial { .. } } => vec![CInf, SPrime],
            DistributionSpec::ContDeriv { .. } => vec![SPrime],
            DistributionSpec::WeightedPoly { .. } => vec![OPrimeC, OPrimeM, SPrime],
            DistributionSpec::Tensor { factors } => intersect(factors.iter()),
            DistributionSpec::Combination { terms } => intersect(terms.iter().map(|(_, t)| t)),
        };
        if matches!(self, DistributionSpec::Zero) {
            c.extend([S, CInf]);
        }
        c.sort();
        c.dedup();
        c
    }

    pub fn has_class(&self, class: DistClass) -> bool {
        self.classes().contains(&class)
    }

    /// Dimension the spec is written for.
    pub fn dim(&self) -> usize {
        match self {
            DistributionSpec::Tensor { factors } => factors.len(),
            DistributionSpec::Combination { terms } => terms.first().map_or(1, |(_, t)| t.dim()),
            _ => 1,
        }
    }

    fn require(&self, class: DistClass) -> Result<(), EmbedError> {
        if self.has_class(class) {
            Ok(())
        } else {
            Err(EmbedError::NotInClass { spec: self.label(), class })
        }
    }

    /// Pointwise value of a smooth spec.
    pub fn eval_smooth(&self, x: &[f64]) -> Result<f64, EmbedError> {
        match self {
            DistributionSpec::Smooth { f } if x.len() == 1 => Ok(f.eval(x[0])),
            DistributionSpec::Zero => Ok(0.0),
            DistributionSpec::Tensor { factors } if factors.len() == x.len() => {
                factors.iter().zip(x).try_fold(1.0, |acc, (f, xi)| Ok(acc * f.eval_smooth(std::slice::from_ref(xi))?))
            }
            DistributionSpec::Combination { terms } => {
                terms.iter().try_fold(0.0, |acc, (c, t)| Ok(acc + c * t.eval_smooth(x)?))
            }
            _ => Err(EmbedError::NotInClass { spec: self.label(), class: DistClass::CInf }),
        }
    }
}

fn intersect<'a>(specs: impl Iterator<Item = &'a DistributionSpec>) -> Vec<DistClass> {
    let mut acc: Option<Vec<DistClass>> = None;
    for s in specs {
        let c = s.classes();
        acc = Some(match acc {
            None => c,
            Some(a) => a.into_iter().filter(|x| c.contains(x)).collect(),
        });
    }
    acc.unwrap_or_default()
}

fn line_box(grid: &GridBox, axis: usize) -> Result<GridBox, GridError> {
    GridBox::new_1d(grid.lo[axis], grid.hi[axis], grid.n[axis])
}

fn sampled_multiplier(grid: &GridBox, axis: usize, f: impl Fn(f64) -> f64 + Sync) -> Result<Vec<Complex<f64>>, GridError> {
    let line = GridFunction::<f64>::from_real_fn(&line_box(grid, axis)?, |x| f(x[0]));
    Ok(transform::transform_by_bin(&line))
}

/// `∫_{lo}^{x} K` along `axis`, exact for band-limited periodic data plus
/// the linear ramp carrying each line's mass.
fn antiderivative<T: Real>(k: &GridFunction<T>, axis: usize) -> GridFunction<T> {
    let p = transform::apply_multiplier(k, axis, |xi, nyq| if xi == 0.0 || nyq { Complex::new(0.0, 0.0) } else { Complex::new(0.0, -1.0 / xi) });
    let grid = &k.grid;
    let n = grid.n[axis];
    let h = T::of(grid.h(axis));
    let mut out = p.samples.clone();
    let mut apply_line = |idx: &dyn Fn(usize) -> usize| {
        let mut mass = T::zero();
        for j in 0..n {
            mass = mass + k.samples[idx(j)].re;
        }
        let mut mass_im = T::zero();
        for j in 0..n {
            mass_im = mass_im + k.samples[idx(j)].im;
        }
        let (m_re, m_im) = (mass * h, mass_im * h);
        let base = p.samples[idx(0)];
        for j in 0..n {
            let t = T::of(j as f64 / n as f64);
            let i = idx(j);
            out[i] = p.samples[i] - base + Complex::new(m_re * t, m_im * t);
        }
    };
    if grid.dim() == 1 {
        apply_line(&|j| j);
    } else if axis == 1 {
        for r in 0..grid.n[0] {
            let n1 = grid.n[1];
            apply_line(&|j| r * n1 + j);
        }
    } else {
        for c in 0..grid.n[1] {
            let n1 = grid.n[1];
            apply_line(&|j| j * n1 + c);
        }
    }
    GridFunction { grid: grid.clone(), samples: out }
}

fn delta_factor(k: usize, at: f64, xi: f64, nyquist: bool) -> Complex<f64> {
    if nyquist && (k % 2 == 1 || at != 0.0) {
        return Complex::new(0.0, 0.0);
    }
    Complex::new(0.0, xi).powu(k as u32) * Complex::from_polar(1.0, -at * xi)
}

/// `T ∗ K` along one axis for a one-dimensional catalog entry.
fn convolve_axis<T: Real>(spec: &DistributionSpec, kernel: &GridFunction<T>, axis: usize) -> Result<GridFunction<T>, EmbedError> {
    let grid = &kernel.grid;
    Ok(match spec {
        DistributionSpec::Zero => GridFunction::zeros(grid),
        DistributionSpec::DeltaDeriv { k, at } => {
            if *k > 6 {
                return Err(GridError::OrderTooHigh(*k).into());
            }
            let n = grid.n[axis];
            let dxi = 2.0 * std::f64::consts::PI / grid.width(axis);
            let factors: Vec<Complex<f64>> =
                (0..n).map(|m| delta_factor(*k, *at, transform::signed_index(m, n) as f64 * dxi, m == n / 2)).collect();
            // Kernel bins at roundoff level carry no signal; (iξ)^k would amplify them.
            transform::apply_factors_above(kernel, axis, &factors, 16.0 * T::EPSILON_F64)
        }
        DistributionSpec::Heaviside { at } => {
            let shifted = if *at == 0.0 { kernel.clone() } else { transform::apply_multiplier(kernel, axis, |xi, nyq| delta_factor(0, *at, xi, nyq)) };
            antiderivative(&shifted, axis)
        }
        DistributionSpec::Smooth { f } => transform::apply_factors(kernel, axis, &sampled_multiplier(grid, axis, |x| f.eval(x))?),
        DistributionSpec::WeightedPoly { coeffs } => {
            let p = SmoothFn::Polynomial { coeffs: coeffs.clone() };
            transform::apply_factors(kernel, axis, &sampled_multiplier(grid, axis, |x| p.eval(x) * (-x.abs()).exp())?)
        }
        DistributionSpec::ContDeriv { f, alpha } => {
            let n = grid.n[axis];
            let dxi = 2.0 * std::f64::consts::PI / grid.width(axis);
            let base = sampled_multiplier(grid, axis, |x| f.eval(x))?;
            let factors: Vec<Complex<f64>> = base
                .iter()
                .enumerate()
                .map(|(m, b)| b * delta_factor(*alpha, 0.0, transform::signed_index(m, n) as f64 * dxi, m == n / 2))
                .collect();
            transform::apply_factors(kernel, axis, &factors)
        }
        DistributionSpec::Combination { terms } => {
            let mut acc = GridFunction::zeros(grid);
            for (c, t) in terms {
                acc = acc.add(&convolve_axis(t, kernel, axis)?.scale(*c))?;
            }
            acc
        }
        DistributionSpec::Tensor { .. } => return Err(EmbedError::RuleMissing(spec.label(), 1)),
    })
}

/// `T ∗ K` on the kernel's box using the analytic rule of each factor.
pub fn convolve<T: Real>(spec: &DistributionSpec, kernel: &GridFunction<T>) -> Result<GridFunction<T>, EmbedError> {
    let d = kernel.grid.dim();
    match (spec, d) {
        (DistributionSpec::Zero, _) => Ok(GridFunction::zeros(&kernel.grid)),
        (DistributionSpec::Combination { terms }, 2) => {
            let mut acc = GridFunction::zeros(&kernel.grid);
            for (c, t) in terms {
                acc = acc.add(&convolve(t, kernel)?.scale(*c))?;
            }
            Ok(acc)
        }
        (DistributionSpec::Tensor { factors }, 2) if factors.len() == 2 => {
            let first = convolve_axis(&factors[0], kernel, 0)?;
            convolve_axis(&factors[1], &first, 1)
        }
        (DistributionSpec::Tensor { factors }, 1) if factors.len() == 1 => convolve_axis(&factors[0], kernel, 0),
        (DistributionSpec::Tensor { .. }, _) => Err(EmbedError::RuleMissing(spec.label(), d)),
        (_, 1) => convolve_axis(spec, kernel, 0),
        _ => Err(EmbedError::RuleMissing(spec.label(), d)),
    }
}

/// Which embedding produced a net.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Embedding {
    Sigma,
    Iota,
    IotaS,
    IotaSprime,
    IotaCs,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingResult<T> {
    pub net: EpsilonNet<T>,
    pub which: Embedding,
    pub source: Option<DistributionSpec>,
}

/// `σ(f)`: the constant net `f_ε = f`.
pub fn embed_sigma<T: Real>(f: &DistributionSpec, ladder: &Ladder, grid: &GridBox) -> Result<EmbeddingResult<T>, EmbedError> {
    f.require(DistClass::CInf)?;
    f.eval_smooth(&vec![0.0; grid.dim()])?;
    let frame = GridFunction::<T>::from_real_fn(grid, |x| f.eval_smooth(x).unwrap_or(0.0));
    Ok(EmbeddingResult { net: EpsilonNet::constant(&frame, ladder)?, which: Embedding::Sigma, source: Some(f.clone()) })
}

/// `σ_S(f)`: as [`embed_sigma`], for Schwartz `f`; frames must decay.
pub fn embed_sigma_s<T: Real>(f: &DistributionSpec, ladder: &Ladder, grid: &GridBox) -> Result<EmbeddingResult<T>, EmbedError> {
    f.require(DistClass::S)?;
    let r = embed_sigma(f, ladder, grid)?;
    r.net.require_decay()?;
    Ok(r)
}

/// `ι(T) = (T ∗ θ_ε)_ε`.
pub fn embed_iota<T: Real>(spec: &DistributionSpec, m: &Mollifier, ladder: &Ladder, grid: &GridBox) -> Result<EmbeddingResult<T>, EmbedError> {
    let net = build(grid, ladder, |eps| convolve(spec, &m.theta::<T>(eps, grid)?))?;
    Ok(EmbeddingResult { net, which: Embedding::Iota, source: Some(spec.clone()) })
}

/// `ι_S(u) = (u ∗ ρ_ε)_ε` for `u ∈ O′_C`.
pub fn embed_iota_s<T: Real>(spec: &DistributionSpec, m: &Mollifier, ladder: &Ladder, grid: &GridBox) -> Result<EmbeddingResult<T>, EmbedError> {
    spec.require(DistClass::OPrimeC)?;
    let net = build(grid, ladder, |eps| convolve(spec, &m.rho_eps::<T>(eps, grid)?))?;
    net.require_decay()?;
    Ok(EmbeddingResult { net, which: Embedding::IotaS, source: Some(spec.clone()) })
}

/// `ι_{S′}(u) = ((u ∗ ρ_ε)·ψ(ε·))_ε` for `u ∈ S′`.
pub fn embed_iota_sprime<T: Real>(spec: &DistributionSpec, m: &Mollifier, ladder: &Ladder, grid: &GridBox) -> Result<EmbeddingResult<T>, EmbedError> {
    spec.require(DistClass::SPrime)?;
    let net = build(grid, ladder, |eps| {
        let conv = convolve(spec, &m.rho_eps::<T>(eps, grid)?)?;
        let window = GridFunction::<T>::from_real_fn(grid, |x| x.iter().map(|c| m.psi_at(eps * c)).product());
        Ok(conv.mul(&window)?)
    })?;
    net.require_decay()?;
    Ok(EmbeddingResult { net, which: Embedding::IotaSprime, source: Some(spec.clone()) })
}

/// `ι_{C,S}`: frames `κ·u_ε` of a net whose frames are supported in the
/// plateau `{κ = 1}`.
pub fn embed_iota_cs<T: Real>(u: &EpsilonNet<T>, kappa: &GridFunction<T>, floor: f64) -> Result<EmbeddingResult<T>, EmbedError> {
    for (index, f) in u.frames.iter().enumerate() {
        let scale = f.sup().max(1.0);
        let excess = f
            .samples
            .iter()
            .zip(&kappa.samples)
            .filter(|(_, k)| (k.re.f64() - 1.0).abs() > 1e-12)
            .map(|(v, _)| v.norm().f64())
            .fold(0.0, f64::max);
        if excess > floor * scale {
            return Err(EmbedError::SupportNotContained { index, excess });
        }
    }
    let net = u.multiply_by(kappa)?;
    Ok(EmbeddingResult { net, which: Embedding::IotaCs, source: None })
}

fn build<T: Real>(grid: &GridBox, ladder: &Ladder, frame: impl Fn(f64) -> Result<GridFunction<T>, EmbedError> + Sync) -> Result<EpsilonNet<T>, EmbedError> {
    let frames = {
        use rayon::prelude::*;
        ladder.0.par_iter().map(|e| frame(*e)).collect::<Result<Vec<_>, _>>()?
    };
    Ok(EpsilonNet::new(grid.clone(), ladder.clone(), frames, Side::Space)?)
}

/// A radial cutoff: 1 within `inner` of `center`, 0 beyond `outer`.
pub fn cutoff<T: Real>(grid: &GridBox, center: &[f64], inner: f64, outer: f64) -> GridFunction<T> {
    let step = SmoothStep::new(1.0);
    GridFunction::from_real_fn(grid, |x| {
        let r = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
        step.plateau(r, inner, outer)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct G1Report {
    pub b_hat: f64,
    pub slope: f64,
    pub b_max: f64,
    pub pass: bool,
    pub profile: GrowthProfile,
}

/// Default intercept bound of the `G^(1)` check.
pub const G1_B_MAX: f64 = 3.0;

/// Checks `N̂(l) ≤ l + b` with `b̂ = max(N̂(l) − l)`: passes when
/// `b̂ ≤ b_max + tol` and the fitted slope is at most `1 + tol`.
pub fn check_g1<T: Real>(net: &EpsilonNet<T>, k: &SubBox, l: usize, b_max: f64, tol: f64, opts: &FitOptions) -> Result<G1Report, EmbedError> {
    let profile = profile_space(net, k, l, opts)?;
    let exps: Vec<f64> = profile.exponents().into_iter().map(|e| e.max(0.0)).collect();
    let b_hat = exps.iter().enumerate().map(|(i, e)| e - i as f64).fold(f64::NEG_INFINITY, f64::max);
    let (slope, _) = affine_fit(&exps);
    let pass = b_hat <= b_max + tol && slope <= 1.0 + tol;
    Ok(G1Report { b_hat, slope, b_max, pass, profile })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{is_negligible, profile_decay, roundoff_floor, NegligibilityMode, DEFAULT_FLOOR};
    use std::sync::OnceLock;

    fn moll() -> &'static Mollifier {
        static M: OnceLock<Mollifier> = OnceLock::new();
        M.get_or_init(|| Mollifier::standard().unwrap())
    }

    fn small() -> (GridBox, Ladder) {
        (GridBox::new_1d(-2.0, 2.0, 1 << 15).unwrap(), Ladder::dyadic(4, 12).unwrap())
    }

    fn k1() -> SubBox {
        SubBox::interval(-1.0, 1.0)
    }

    #[test]
    fn json_specs_parse() {
        let s: DistributionSpec = serde_json::from_str(r#"{"tag": "delta_deriv", "k": 1}"#).unwrap();
        assert_eq!(s, DistributionSpec::delta_deriv(1));
        let s: DistributionSpec = serde_json::from_str(r#"{"tag": "smooth", "f": {"name": "gaussian"}}"#).unwrap();
        assert_eq!(s, DistributionSpec::gaussian());
        assert!(DistributionSpec::delta().has_class(DistClass::OPrimeC));
        assert_eq!(DistributionSpec::heaviside().classes(), vec![DistClass::SPrime]);
        assert!(DistributionSpec::gaussian().has_class(DistClass::S));
        let t = DistributionSpec::named("bump_x2_heaviside_x1").unwrap();
        assert_eq!(t.classes(), vec![DistClass::SPrime]);
    }

    #[test]
    fn sigma_nets_are_flat() {
        let grid = GridBox::new_1d(-8.0, 8.0, 4096).unwrap();
        let ladder = Ladder::dyadic(4, 10).unwrap();
        for f in [DistributionSpec::gaussian(), DistributionSpec::Smooth { f: SmoothFn::Polynomial { coeffs: vec![0.0, 0.0, 1.0] } }] {
            let r = embed_sigma::<f64>(&f, &ladder, &grid).unwrap();
            let p = profile_space(&r.net, &k1(), 3, &FitOptions::default()).unwrap();
            assert!(p.exponents().iter().all(|e| e.abs() < 1e-9));
        }
        let z = embed_sigma::<f64>(&DistributionSpec::Zero, &ladder, &grid).unwrap();
        assert!(is_negligible(&z.net, &NegligibilityMode::Space { k: k1() }, 4, DEFAULT_FLOOR));
        assert!(embed_sigma::<f64>(&DistributionSpec::delta(), &ladder, &grid).is_err());
    }

    #[test]
    fn iota_delta_frames_are_theta() {
        let (grid, ladder) = small();
        let r = embed_iota::<f64>(&DistributionSpec::delta(), moll(), &ladder, &grid).unwrap();
        for (e, f) in ladder.0.iter().zip(&r.net.frames) {
            let th = moll().theta::<f64>(*e, &grid).unwrap();
            let err = f.sub(&th).unwrap().sup() / th.sup();
            assert!(err < 1e-12);
        }
        let p = profile_space(&r.net, &k1(), 3, &FitOptions::default()).unwrap();
        for (l, e) in p.exponents().iter().enumerate() {
            assert!((e - (l as f64 + 1.0)).abs() <= 0.25, "l={l}: {e}");
        }
    }

    #[test]
    fn iota_heaviside_profile() {
        let (grid, ladder) = small();
        let r = embed_iota::<f64>(&DistributionSpec::heaviside(), moll(), &ladder, &grid).unwrap();
        // H ∗ θ_ε rises from 0 to ∫θ_ε across the origin.
        let f = &r.net.frames[0];
        let mass = moll().theta::<f64>(ladder.0[0], &grid).unwrap().integrate_with(|_| 1.0).re;
        assert!(f.samples[100].re.abs() < 1e-12);
        assert!((f.samples[(1 << 15) - 100].re - mass).abs() < 1e-12);
        assert!((mass - 1.0).abs() < 1e-2);
        let p = profile_space(&r.net, &k1(), 2, &FitOptions::default()).unwrap();
        let e = p.exponents();
        assert!(e[0].abs() <= 0.25 && (e[1] - 1.0).abs() <= 0.25, "{e:?}");
    }

    #[test]
    fn iota_agrees_with_sigma_on_smooth_functions() {
        let grid = GridBox::new_1d(-8.0, 8.0, 1 << 17).unwrap();
        let (_, ladder) = small();
        for f in [DistributionSpec::gaussian(), DistributionSpec::bump()] {
            let a = embed_iota::<f64>(&f, moll(), &ladder, &grid).unwrap();
            let b = embed_sigma::<f64>(&f, &ladder, &grid).unwrap();
            let d = a.net.sub(&b.net).unwrap();
            assert!(is_negligible(&d, &NegligibilityMode::Space { k: k1() }, 4, DEFAULT_FLOOR), "{f:?}");
        }
    }

    #[test]
    fn iota_is_linear() {
        let (grid, ladder) = small();
        let combo = DistributionSpec::Combination { terms: vec![(2.0, DistributionSpec::delta()), (-1.0, DistributionSpec::heaviside())] };
        let a = embed_iota::<f64>(&combo, moll(), &ladder, &grid).unwrap().net;
        let d = embed_iota::<f64>(&DistributionSpec::delta(), moll(), &ladder, &grid).unwrap().net;
        let h = embed_iota::<f64>(&DistributionSpec::heaviside(), moll(), &ladder, &grid).unwrap().net;
        let b = d.scale_by(|_| 2.0).sub(&h).unwrap();
        assert!(is_negligible(&a.sub(&b).unwrap(), &NegligibilityMode::Space { k: k1() }, 4, DEFAULT_FLOOR));
    }

    #[test]
    fn second_derivative_of_abs_is_twice_delta() {
        let grid = GridBox::new_1d(-2.0, 2.0, 1 << 15).unwrap();
        let ladder = Ladder::dyadic(3, 8).unwrap();
        let a = embed_iota::<f64>(&DistributionSpec::ContDeriv { f: ContFn::Abs, alpha: 2 }, moll(), &ladder, &grid).unwrap().net;
        let d = embed_iota::<f64>(&DistributionSpec::delta(), moll(), &ladder, &grid).unwrap().net;
        let rng = grid.node_range(&k1()).unwrap()[0];
        for (fa, fd) in a.frames.iter().zip(&d.frames) {
            let err = (rng.0..=rng.1).map(|j| (fa.samples[j] - fd.samples[j] * 2.0).norm()).fold(0.0, f64::max);
            assert!(err <= 1e-2 * fd.sup(), "{err}");
        }
    }

    fn s_regime() -> (GridBox, Ladder) {
        (GridBox::new_1d(-8.0, 8.0, 1 << 15).unwrap(), Ladder::dyadic(5, 10).unwrap())
    }

    #[test]
    fn iota_s_delta_profiles() {
        let (grid, ladder) = s_regime();
        let opts = FitOptions::default().with_scheme(crate::grid::Scheme::Spectral);
        for (k, shift) in [(0usize, 1.0), (1, 2.0)] {
            let r = embed_iota_s::<f64>(&DistributionSpec::delta_deriv(k), moll(), &ladder, &grid).unwrap();
            let p = profile_decay(&r.net, 4, 2, &opts).unwrap();
            for e in &p.entries {
                assert!((e.fit.exponent - (e.index[1] as f64 + shift)).abs() <= 0.25, "k={k} {:?}: {}", e.index, e.fit.exponent);
            }
        }
        assert!(embed_iota_s::<f64>(&DistributionSpec::heaviside(), moll(), &ladder, &grid).is_err());
    }

    #[test]
    fn iota_s_commutes_with_derivatives() {
        let (grid, ladder) = s_regime();
        let d0 = embed_iota_s::<f64>(&DistributionSpec::delta(), moll(), &ladder, &grid).unwrap().net;
        let d1 = embed_iota_s::<f64>(&DistributionSpec::delta_deriv(1), moll(), &ladder, &grid).unwrap().net;
        let dd = d0.map_frames(|f| crate::grid::derivative(f, 0, 1, crate::grid::Scheme::Spectral)).unwrap();
        // The two routes differ by roundoff, which scales with the frame size.
        let mode = NegligibilityMode::Decay { q: 4 };
        let floor = roundoff_floor(&[&d1], &mode, DEFAULT_FLOOR).unwrap();
        assert!(is_negligible(&dd.sub(&d1).unwrap(), &mode, 4, floor));
    }

    #[test]
    fn iota_sprime_truncates_heaviside() {
        let grid = GridBox::new_1d(-64.0, 64.0, 8192).unwrap();
        let ladder = Ladder::dyadic(0, 5).unwrap();
        let r = embed_iota_sprime::<f64>(&DistributionSpec::heaviside(), moll(), &ladder, &grid).unwrap();
        for f in &r.net.frames {
            assert!(f.boundary_ratio() <= 1e-10);
        }
        let z = embed_iota_sprime::<f64>(&DistributionSpec::Zero, moll(), &ladder, &grid).unwrap();
        assert!(is_negligible(&z.net, &NegligibilityMode::Decay { q: 2 }, 4, DEFAULT_FLOOR));
    }

    #[test]
    fn iota_sprime_matches_iota_s_locally() {
        let (grid, ladder) = s_regime();
        let a = embed_iota_sprime::<f64>(&DistributionSpec::delta(), moll(), &ladder, &grid).unwrap().net;
        let b = embed_iota_s::<f64>(&DistributionSpec::delta(), moll(), &ladder, &grid).unwrap().net;
        assert!(is_negligible(&a.sub(&b).unwrap(), &NegligibilityMode::Space { k: k1() }, 4, DEFAULT_FLOOR));
    }

    #[test]
    fn compact_support_embedding() {
        let grid = GridBox::new_1d(-4.0, 4.0, 1 << 15).unwrap();
        let ladder = Ladder::dyadic(4, 11).unwrap();
        let opts = FitOptions::default();
        let kappa = cutoff::<f64>(&grid, &[0.0], 1.0, 2.0);
        let bump = embed_sigma::<f64>(&DistributionSpec::bump(), &ladder, &grid).unwrap().net;
        let wide = cutoff::<f64>(&grid, &[0.0], 1.5, 2.5);
        let r = embed_iota_cs(&bump, &wide, DEFAULT_FLOOR).unwrap();
        let p = profile_decay(&r.net, 3, 2, &opts).unwrap();
        assert!(p.exponents().iter().all(|e| e.abs() < 1e-6));
        let delta = embed_iota::<f64>(&DistributionSpec::delta(), moll(), &ladder, &grid).unwrap().net;
        let a = embed_iota_cs(&delta, &kappa, DEFAULT_FLOOR).unwrap().net;
        let p = profile_decay(&a, 3, 2, &opts).unwrap();
        let t = p.table();
        for l in 0..=2 {
            for q in 0..=3 {
                assert!((t[q][l] - t[0][l]).abs() <= 0.25);
            }
            assert!((t[0][l] - (l as f64 + 1.0)).abs() <= 0.25, "l={l}: {}", t[0][l]);
        }
        let b = embed_iota_cs(&delta, &wide, DEFAULT_FLOOR).unwrap().net;
        let mode = NegligibilityMode::Decay { q: 3 };
        let floor = roundoff_floor(&[&a], &mode, DEFAULT_FLOOR).unwrap();
        assert!(is_negligible(&a.sub(&b).unwrap(), &mode, 4, floor));
        let narrow = cutoff::<f64>(&grid, &[0.0], 0.1, 0.2);
        assert!(matches!(embed_iota_cs(&delta, &narrow, DEFAULT_FLOOR), Err(EmbedError::SupportNotContained { .. })));
    }

    #[test]
    fn g1_bounds() {
        let (grid, ladder) = small();
        let opts = FitOptions::default();
        let r = embed_iota::<f64>(&DistributionSpec::delta(), moll(), &ladder, &grid).unwrap();
        let g = check_g1(&r.net, &k1(), 3, G1_B_MAX, 0.25, &opts).unwrap();
        assert!(g.pass && (0.75..=1.25).contains(&g.b_hat), "{}", g.b_hat);
        let r = embed_iota::<f64>(&DistributionSpec::delta_deriv(2), moll(), &ladder, &grid).unwrap();
        let g = check_g1(&r.net, &k1(), 3, G1_B_MAX, 0.25, &opts).unwrap();
        assert!(g.pass && (g.b_hat - 3.0).abs() <= 0.25, "{}", g.b_hat);
        let r = embed_sigma::<f64>(&DistributionSpec::gaussian(), &ladder, &grid).unwrap();
        let g = check_g1(&r.net, &k1(), 3, G1_B_MAX, 0.25, &opts).unwrap();
        assert!(g.pass && g.b_hat.abs() < 1e-9);
    }
}
