//! Fourier transform of nets, the seminorm inequality between a net and
//! its transform, exchange and regularity checks, rough profiles and the
//! global classification of compactly supported nets.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{
    decay_sups, fit_growth, profile_decay, profile_space, weighted_sups, EpsilonNet, FitOptions, GridError, GridFunction,
    GrowthProfile, ProfileAxis, Side, SubBox,
};
use crate::scalar::Real;
use crate::scales::{classify_profile, l_variation, q_variation, Classification, MembershipParams, RegularScaleFamily, ScaleError};
use crate::transform;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FourierError {
    #[error("expected a {expected:?}-side net, got {got:?}")]
    WrongSide { expected: Side, got: Side },
    #[error("frequency net carries no space grid")]
    MissingSpaceGrid,
    #[error("denominator seminorm μ_({w},{d}) vanishes at frame {index}")]
    DivisionByFloor { w: usize, d: usize, index: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Scale(#[from] ScaleError),
}

fn expect_side<T>(net: &EpsilonNet<T>, side: Side) -> Result<(), FourierError> {
    if net.side == side {
        Ok(())
    } else {
        Err(FourierError::WrongSide { expected: side, got: net.side })
    }
}

/// `(û_ε)_ε` on the dual frequency grid.
pub fn ft_net<T: Real>(net: &EpsilonNet<T>) -> Result<EpsilonNet<T>, FourierError> {
    expect_side(net, Side::Space)?;
    net.require_decay()?;
    let frames: Vec<GridFunction<T>> = net.frames.par_iter().map(transform::forward).collect();
    let mut out = EpsilonNet::new(transform::frequency_grid(&net.grid), net.ladder.clone(), frames, Side::Frequency)?;
    out.space_grid = Some(net.grid.clone());
    Ok(out)
}

/// `((2π)^{-d} ∫ e^{ixξ} v_ε(ξ) dξ)_ε` back on the originating space grid.
pub fn ift_net<T: Real>(net: &EpsilonNet<T>) -> Result<EpsilonNet<T>, FourierError> {
    expect_side(net, Side::Frequency)?;
    let space = net.space_grid.clone().ok_or(FourierError::MissingSpaceGrid)?;
    net.require_decay()?;
    let frames = net.frames.par_iter().map(|f| transform::inverse(f, &space)).collect::<Result<Vec<_>, _>>()?;
    Ok(EpsilonNet::new(space, net.ladder.clone(), frames, Side::Space)?)
}

/// The transform in whichever direction leaves `net`'s side.
pub fn transform_net<T: Real>(net: &EpsilonNet<T>) -> Result<EpsilonNet<T>, FourierError> {
    match net.side {
        Side::Space => ft_net(net),
        Side::Frequency => ift_net(net),
    }
}

/// Largest relative sup error of `ift(ft(net))` over the frames.
pub fn round_trip_defect<T: Real>(net: &EpsilonNet<T>) -> Result<f64, FourierError> {
    let back = ift_net(&ft_net(net)?)?;
    Ok(net
        .frames
        .iter()
        .zip(&back.frames)
        .map(|(a, b)| {
            let s = a.sup();
            if s == 0.0 {
                b.sup()
            } else {
                a.sub(b).expect("same grid").sup() / s
            }
        })
        .fold(0.0, f64::max))
}

/// Relative gap in `h^d Σ|u|² = (2π)^{-d} (Δξ)^d Σ|û|²` for one frame.
pub fn plancherel_defect<T: Real>(u: &GridFunction<T>) -> f64 {
    let g = &u.grid;
    let d = g.dim();
    let hd: f64 = (0..d).map(|a| g.h(a)).product();
    let dxi: f64 = (0..d).map(|a| 2.0 * std::f64::consts::PI / g.width(a)).product();
    let norm2 = |f: &GridFunction<T>| f.samples.iter().map(|v| v.norm_sqr().f64()).sum::<f64>();
    let lhs = hd * norm2(u);
    let rhs = dxi / (2.0 * std::f64::consts::PI).powi(d as i32) * norm2(&transform::forward(u));
    if lhs == 0.0 {
        rhs
    } else {
        (lhs - rhs).abs() / lhs
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaRow {
    pub q: usize,
    pub l: usize,
    /// `μ_{q,l}(û_ε) / μ_{l+d+1,q}(u_ε)` per ε.
    pub ratios: Vec<f64>,
    /// `max_ε r_ε / min_ε r_ε`.
    pub spread: f64,
    /// Fitted growth exponent of `r_ε` in `1/ε`.
    pub growth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub rows: Vec<LemmaRow>,
    pub max_spread: f64,
    pub envelope: f64,
    /// Every ratio is finite and its spread over the ladder at most `envelope`.
    pub pass: bool,
    /// Every ratio stays bounded as ε → 0: fitted growth at most `tol`.
    pub uniform_bound: bool,
}

/// Default envelope factor for [`check_lemma_bound`].
pub const LEMMA_ENVELOPE: f64 = 10.0;

/// Ratios `μ_{q,l}(û_ε) / μ_{l+d+1,q}(u_ε)` for `(q, l) ≤ (Q, L)`.
pub fn check_lemma_bound<T: Real>(net: &EpsilonNet<T>, q_max: usize, l_max: usize, tol: f64, opts: &FitOptions) -> Result<LemmaReport, FourierError> {
    expect_side(net, Side::Space)?;
    let d = net.grid.dim();
    let fnet = ft_net(net)?;
    let num = fnet.frames.par_iter().map(|f| decay_sups(f, q_max, l_max, opts.scheme)).collect::<Result<Vec<_>, _>>()?;
    let den = net.frames.par_iter().map(|f| decay_sups(f, l_max + d + 1, q_max, opts.scheme)).collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for q in 0..=q_max {
        for l in 0..=l_max {
            let mut ratios = Vec::with_capacity(net.ladder.len());
            for (index, (n, m)) in num.iter().zip(&den).enumerate() {
                let denom = m[l + d + 1][q];
                if denom <= opts.floor {
                    return Err(FourierError::DivisionByFloor { w: l + d + 1, d: q, index });
                }
                ratios.push(n[q][l] / denom);
            }
            let max = ratios.iter().cloned().fold(0.0, f64::max);
            let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let spread = if min > 0.0 { max / min } else { f64::INFINITY };
            let growth = fit_growth(&ratios, &net.ladder.0, 0.0).map(|f| f.exponent).unwrap_or(f64::NAN);
            rows.push(LemmaRow { q, l, ratios, spread, growth });
        }
    }
    let max_spread = rows.iter().map(|r| r.spread).fold(0.0, f64::max);
    let finite = rows.iter().all(|r| r.ratios.iter().all(|v| v.is_finite()));
    let pass = finite && max_spread <= LEMMA_ENVELOPE;
    let uniform_bound = finite && rows.iter().all(|r| r.growth <= tol);
    Ok(LemmaReport { rows, max_spread, envelope: LEMMA_ENVELOPE, pass, uniform_bound })
}

/// Which index a two-index growth table is uniform in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Signature {
    /// Uniform in the weight index: growth depends on `l` only.
    #[serde(rename = "R_u")]
    RU,
    /// Uniform in the derivative order: growth depends on `q` only.
    #[serde(rename = "R_partial")]
    RPartial,
    /// Uniform in both (flat).
    #[serde(rename = "both")]
    Both,
    #[serde(rename = "neither")]
    Neither,
}

impl Signature {
    pub fn of_table(table: &[Vec<f64>], tol: f64) -> Self {
        let u = q_variation(table) <= tol;
        let p = l_variation(table) <= tol;
        match (u, p) {
            (true, true) => Signature::Both,
            (true, false) => Signature::RU,
            (false, true) => Signature::RPartial,
            (false, false) => Signature::Neither,
        }
    }

    /// The signature the transform is expected to carry.
    pub fn swapped(self) -> Self {
        match self {
            Signature::RU => Signature::RPartial,
            Signature::RPartial => Signature::RU,
            other => other,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExchangeReport {
    pub input_signature: Signature,
    pub output_signature: Signature,
    /// Largest excess, over the side that must be uniform, of either table.
    pub uniformity_defect: f64,
    pub pass: bool,
    pub input_q_variation: f64,
    pub input_l_variation: f64,
    pub output_q_variation: f64,
    pub output_l_variation: f64,
    pub input: GrowthProfile,
    pub output: GrowthProfile,
}

/// Profiles `net` and its transform and checks that the signatures swap.
pub fn check_exchange<T: Real>(net: &EpsilonNet<T>, q_max: usize, l_max: usize, tol: f64, opts: &FitOptions) -> Result<ExchangeReport, FourierError> {
    let other = transform_net(net)?;
    let input = profile_decay(net, q_max, l_max, opts)?;
    let output = profile_decay(&other, q_max, l_max, opts)?;
    let (ti, to) = (input.table(), output.table());
    let input_signature = Signature::of_table(&ti, tol);
    let output_signature = Signature::of_table(&to, tol);
    let (iq, il, oq, ol) = (q_variation(&ti), l_variation(&ti), q_variation(&to), l_variation(&to));
    let uniformity_defect = match input_signature {
        Signature::RU => iq.max(ol),
        Signature::RPartial => il.max(oq),
        Signature::Both => iq.max(il).max(oq).max(ol),
        Signature::Neither => iq.min(il),
    };
    let pass = input_signature != Signature::Neither && output_signature == input_signature.swapped();
    Ok(ExchangeReport {
        input_signature,
        output_signature,
        uniformity_defect,
        pass,
        input_q_variation: iq,
        input_l_variation: il,
        output_q_variation: oq,
        output_l_variation: ol,
        input,
        output,
    })
}

/// `q ↦ N̂(q)` from the zero-order weighted sups `μ_{q,0}`.
pub fn rough_profile<T: Real>(net: &EpsilonNet<T>, q_max: usize, opts: &FitOptions) -> Result<GrowthProfile, FourierError> {
    net.require_decay()?;
    let per_frame: Vec<Vec<f64>> = net.frames.par_iter().map(|f| weighted_sups(f, q_max, |_| true)).collect();
    let rows = (0..=q_max).map(|q| (vec![q], per_frame.iter().map(|r| r[q]).collect())).collect();
    Ok(GrowthProfile::from_values(ProfileAxis::WeightQ, rows, &net.ladder, opts)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalReport {
    pub space: Classification,
    pub fourier: Classification,
    pub space_profile: GrowthProfile,
    pub fourier_profile: GrowthProfile,
    pub agree: bool,
    /// `max_q N̂(q) − N̂(0)` of the Fourier-side profile.
    pub fourier_rise: f64,
}

/// Classifies a compactly supported net on both sides: `profile_space` on
/// `k`, and the rough profile of `ft(κ·u)`.
#[allow(clippy::too_many_arguments)]
pub fn classify_global<T: Real>(
    u: &EpsilonNet<T>,
    kappa: &GridFunction<T>,
    k: &SubBox,
    q_max: usize,
    l_max: usize,
    params: MembershipParams,
    a_grid: &[f64],
    opts: &FitOptions,
) -> Result<GlobalReport, FourierError> {
    let space_profile = profile_space(u, k, l_max, opts)?;
    let space = classify_profile(&space_profile, params, a_grid)?;
    let fourier_profile = rough_profile(&ft_net(&u.multiply_by(kappa)?)?, q_max, opts)?;
    let fourier = classify_profile(&fourier_profile, params, a_grid)?;
    let e = &fourier.exponents;
    let fourier_rise = e.iter().map(|v| v - e[0]).fold(0.0, f64::max);
    Ok(GlobalReport { agree: space.family == fourier.family, space, fourier, space_profile, fourier_profile, fourier_rise })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub input_level: f64,
    pub input_spread: f64,
    pub output_spread: f64,
    pub pass: bool,
    pub output: GrowthProfile,
}

fn spread(table: &[Vec<f64>]) -> (f64, f64) {
    let base = table[0][0];
    (base, table.iter().flatten().map(|v| (v - base).abs()).fold(0.0, f64::max))
}

/// A net with a flat two-index profile must have a flat transform.
pub fn check_regularity_theorem<T: Real>(net: &EpsilonNet<T>, q_max: usize, l_max: usize, tol: f64, opts: &FitOptions) -> Result<RegularityReport, FourierError> {
    let input = profile_decay(net, q_max, l_max, opts)?;
    let (input_level, input_spread) = spread(&input.table());
    if input_spread > tol {
        return Err(FourierError::Precondition(format!("input profile is not flat: spread {input_spread:.3} > {tol}")));
    }
    let output = profile_decay(&transform_net(net)?, q_max, l_max, opts)?;
    let (_, output_spread) = spread(&output.table());
    Ok(RegularityReport { input_level, input_spread, output_spread, pass: output_spread <= tol, output })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallExchangeReport {
    pub rough: Classification,
    pub bounded_profile: GrowthProfile,
    pub bounded_exponents: Vec<f64>,
    pub pass: bool,
}

/// For a frequency-side net in the rough regime: the sups `μ_{0,l}` of its
/// inverse transform must grow within the family the rough profile lands in.
pub fn check_small_exchange<T: Real>(
    freq: &EpsilonNet<T>,
    q_max: usize,
    l_max: usize,
    params: MembershipParams,
    a_grid: &[f64],
    opts: &FitOptions,
) -> Result<SmallExchangeReport, FourierError> {
    expect_side(freq, Side::Frequency)?;
    let rough = classify_profile(&rough_profile(freq, q_max, opts)?, params, a_grid)?;
    let space = ift_net(freq)?;
    let bounded_profile = profile_decay(&space, 0, l_max, opts)?.slice(ProfileAxis::SpaceL, 0);
    let bounded_exponents: Vec<f64> = bounded_profile.exponents().into_iter().map(|e| e.max(0.0)).collect();
    let pass = RegularScaleFamily::with_defaults(rough.family).accepts_values(&bounded_exponents, params);
    Ok(SmallExchangeReport { rough, bounded_profile, bounded_exponents, pass })
}

/// `ft(∂u) − (iξ)·ft(u)` relative to `ft(∂u)`, frame by frame.
pub fn derivative_rule_defect<T: Real>(u: &GridFunction<T>, axis: usize, du: &GridFunction<T>) -> f64 {
    let a = transform::forward(du);
    let b = transform::forward(u);
    let fg = &a.grid;
    let mut err: f64 = 0.0;
    for (i, (x, y)) in a.samples.iter().zip(&b.samples).enumerate() {
        let xi = fg.coords(i)[axis];
        let want = Complex::new(-xi * y.im.f64(), xi * y.re.f64());
        err = err.max((Complex::new(x.re.f64(), x.im.f64()) - want).norm());
    }
    let s = a.sup();
    if s == 0.0 {
        err
    } else {
        err / s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{cutoff, embed_iota, embed_iota_s, embed_sigma, embed_sigma_s, DistributionSpec};
    use crate::grid::{derivative, GridBox, Ladder, Scheme};
    use crate::mollifier::Mollifier;
    use crate::scales::{default_a_grid, FamilyName};
    use std::f64::consts::PI;
    use std::sync::OnceLock;

    fn moll() -> &'static Mollifier {
        static M: OnceLock<Mollifier> = OnceLock::new();
        M.get_or_init(|| Mollifier::standard().unwrap())
    }

    fn s_regime() -> (GridBox, Ladder) {
        (GridBox::new_1d(-8.0, 8.0, 1 << 15).unwrap(), Ladder::dyadic(4, 10).unwrap())
    }

    fn spectral() -> FitOptions {
        FitOptions::default().with_scheme(Scheme::Spectral)
    }

    #[test]
    fn gaussian_pair() {
        let grid = GridBox::new_1d(-8.0, 8.0, 1024).unwrap();
        let g = GridFunction::<f64>::from_real_fn(&grid, |x| (-x[0] * x[0] / 2.0).exp());
        let net = EpsilonNet::constant(&g, &Ladder::dyadic(1, 6).unwrap()).unwrap();
        let f = ft_net(&net).unwrap();
        assert_eq!(f.side, Side::Frequency);
        for (k, v) in f.frames[0].samples.iter().enumerate() {
            let xi = f.grid.point(0, k);
            assert!((v - Complex::new((2.0 * PI).sqrt() * (-xi * xi / 2.0).exp(), 0.0)).norm() <= 1e-9);
        }
        assert!(round_trip_defect(&net).unwrap() <= 1e-9);
        assert!(plancherel_defect(&g) <= 1e-9);
        let z = EpsilonNet::constant(&GridFunction::<f64>::zeros(&grid), &net.ladder).unwrap();
        assert_eq!(ift_net(&ft_net(&z).unwrap()).unwrap().frames[0].sup(), 0.0);
        assert!(matches!(ift_net(&net), Err(FourierError::WrongSide { .. })));
    }

    #[test]
    fn rho_transforms_to_psi() {
        let (grid, ladder) = s_regime();
        let net = embed_iota_s::<f64>(&DistributionSpec::delta(), moll(), &ladder, &grid).unwrap().net;
        let f = ft_net(&net).unwrap();
        for (e, fr) in ladder.0.iter().zip(&f.frames) {
            for (k, v) in fr.samples.iter().enumerate().step_by(7) {
                let want = moll().psi_at(e * f.grid.point(0, k));
                assert!((v - Complex::new(want, 0.0)).norm() <= 1e-8);
            }
        }
        assert!(round_trip_defect(&net).unwrap() <= 1e-9);
    }

    #[test]
    fn derivative_rule() {
        let (grid, _) = s_regime();
        let g = GridFunction::<f64>::from_real_fn(&grid, |x| (-x[0] * x[0]).exp() * (1.0 + x[0]));
        let dg = derivative(&g, 0, 1, Scheme::Spectral).unwrap();
        assert!(derivative_rule_defect(&g, 0, &dg) <= 1e-8);
    }

    #[test]
    fn lemma_ratios() {
        let (grid, ladder) = s_regime();
        let g = embed_sigma_s::<f64>(&DistributionSpec::gaussian(), &ladder, &grid).unwrap().net;
        let r = check_lemma_bound(&g, 3, 2, 0.25, &spectral()).unwrap();
        assert!(r.pass && r.uniform_bound);
        assert!(r.max_spread - 1.0 <= 1e-6);
        // ρ_ε: the ratio shrinks like ε^{l+1}, so it is bounded but not ε-flat.
        let d = embed_iota_s::<f64>(&DistributionSpec::delta(), moll(), &ladder, &grid).unwrap().net;
        let r = check_lemma_bound(&d, 3, 2, 0.25, &spectral()).unwrap();
        assert!(r.uniform_bound);
        assert!(!r.pass);
        for row in &r.rows {
            assert!(row.growth <= -0.75, "{row:?}");
        }
    }

    #[test]
    fn exchange_swaps_signatures() {
        let (grid, ladder) = s_regime();
        let opts = spectral();
        let d = embed_iota_s::<f64>(&DistributionSpec::delta(), moll(), &ladder, &grid).unwrap().net;
        let r = check_exchange(&d, 3, 2, 0.25, &opts).unwrap();
        assert_eq!(r.input_signature, Signature::RU, "{:?}", r.input.table());
        assert_eq!(r.output_signature, Signature::RPartial, "{:?}", r.output.table());
        assert!(r.pass);
        let back = check_exchange(&ft_net(&d).unwrap(), 3, 2, 0.25, &opts).unwrap();
        assert_eq!(back.input_signature, Signature::RPartial);
        assert_eq!(back.output_signature, Signature::RU);
        let g = embed_sigma_s::<f64>(&DistributionSpec::gaussian(), &ladder, &grid).unwrap().net;
        let r = check_exchange(&g, 3, 2, 0.25, &opts).unwrap();
        assert!(r.pass && r.input_signature == Signature::Both);
        let scaled = g.scale_by(|e| e.powi(-2));
        let r = check_exchange(&scaled, 3, 2, 0.25, &opts).unwrap();
        assert!(r.pass);
        assert!(r.output.exponents().iter().all(|e| (e - 2.0).abs() <= 0.25));
    }

    #[test]
    fn regularity_theorem() {
        let (grid, ladder) = s_regime();
        let g = embed_sigma_s::<f64>(&DistributionSpec::gaussian(), &ladder, &grid).unwrap().net;
        assert!(check_regularity_theorem(&g, 3, 2, 0.25, &spectral()).unwrap().pass);
        let r = check_regularity_theorem(&g.scale_by(|e| 1.0 / e), 3, 2, 0.25, &spectral()).unwrap();
        assert!(r.pass && (r.input_level - 1.0).abs() <= 0.25);
        let d = embed_iota_s::<f64>(&DistributionSpec::delta(), moll(), &ladder, &grid).unwrap().net;
        assert!(matches!(check_regularity_theorem(&d, 3, 2, 0.25, &spectral()), Err(FourierError::Precondition(_))));
    }

    fn compact() -> (GridBox, Ladder, GridFunction<f64>, SubBox) {
        let grid = GridBox::new_1d(-4.0, 4.0, 1 << 15).unwrap();
        (grid.clone(), Ladder::dyadic(4, 11).unwrap(), cutoff(&grid, &[0.0], 1.0, 2.0), SubBox::interval(-1.0, 1.0))
    }

    #[test]
    fn global_classification() {
        let (grid, ladder, kappa, k) = compact();
        let (p, a) = (MembershipParams::default(), default_a_grid());
        let opts = FitOptions::default();
        let bump = embed_sigma::<f64>(&DistributionSpec::bump(), &ladder, &grid).unwrap().net;
        let r = classify_global(&bump, &kappa, &k, 6, 4, p, &a, &opts).unwrap();
        assert!(r.agree && r.space.family == FamilyName::B, "{r:?}");
        let r = classify_global(&bump.scale_by(|e| e.powi(-3)), &kappa, &k, 6, 4, p, &a, &opts).unwrap();
        assert!(r.agree && r.fourier.family == FamilyName::B);
        assert!(r.fourier_profile.exponents().iter().all(|e| (e - 3.0).abs() <= 0.25));
        let delta = embed_iota::<f64>(&DistributionSpec::delta(), moll(), &ladder, &grid).unwrap().net.multiply_by(&kappa).unwrap();
        let r = classify_global(&delta, &kappa, &k, 6, 4, p, &a, &opts).unwrap();
        assert!(r.agree && r.space.family == FamilyName::R1, "{:?} {:?}", r.space, r.fourier);
        assert!(r.fourier_rise > 0.5);
        for (q, e) in r.fourier_profile.exponents().iter().enumerate() {
            assert!((e - q as f64).abs() <= 0.25, "q={q}: {e}");
        }
    }

    #[test]
    fn rough_regime_small_exchange() {
        let (grid, ladder, kappa, _) = compact();
        let (p, a) = (MembershipParams::default(), default_a_grid());
        let opts = FitOptions::default();
        let delta = embed_iota::<f64>(&DistributionSpec::delta(), moll(), &ladder, &grid).unwrap().net.multiply_by(&kappa).unwrap();
        let r = check_small_exchange(&ft_net(&delta).unwrap(), 6, 2, p, &a, &opts).unwrap();
        assert_eq!(r.rough.family, FamilyName::R1);
        assert!(r.pass, "{:?}", r.bounded_exponents);
        let bump = embed_sigma::<f64>(&DistributionSpec::bump(), &ladder, &grid).unwrap().net;
        let r = check_small_exchange(&ft_net(&bump).unwrap(), 6, 2, p, &a, &opts).unwrap();
        assert!(r.pass && r.rough.family == FamilyName::B);
    }
}
