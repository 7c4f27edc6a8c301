use std::sync::OnceLock;

use genfunc::embed::{embed_iota, embed_sigma, DistributionSpec};
use genfunc::grid::{fit_growth, profile_space, seminorm_mu, seminorm_p, FitOptions, Scheme};
use genfunc::mollifier::Mollifier;
use genfunc::{EpsilonNet, GridBox, GridFunction, Ladder, Side, SubBox};
use proptest::prelude::*;

fn moll() -> &'static Mollifier {
    static M: OnceLock<Mollifier> = OnceLock::new();
    M.get_or_init(|| Mollifier::standard().unwrap())
}

/// A smooth frame with random Fourier content under a Gaussian envelope.
fn wiggle(grid: &GridBox, coeffs: &[(f64, f64)]) -> GridFunction<f64> {
    GridFunction::from_real_fn(grid, |x| {
        let s: f64 = coeffs.iter().enumerate().map(|(k, (a, p))| a * ((k + 1) as f64 * x[0] + p).sin()).sum();
        (1.0 + s) * (-x[0] * x[0]).exp()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fit_recovers_power_laws(a in -3.0..8.0f64, log_c in -5.0..5.0f64, k_min in 2u32..6, len in 4u32..10) {
        let ladder = Ladder::dyadic(k_min, k_min + len).unwrap();
        let values: Vec<f64> = ladder.0.iter().map(|e| log_c.exp() * e.powf(-a)).collect();
        let fit = fit_growth(&values, &ladder.0, 0.0).unwrap();
        prop_assert!((fit.exponent - a).abs() <= 1e-9, "{} vs {}", fit.exponent, a);
        prop_assert!((fit.log_c - log_c).abs() <= 1e-9);
        prop_assert!(fit.residual <= 1e-9);
    }

    #[test]
    fn seminorms_are_monotone(coeffs in prop::collection::vec((-1.0..1.0f64, 0.0..6.3f64), 1..4), lo in -1.5..-0.2f64, hi in 0.2..1.5f64) {
        let grid = GridBox::new_1d(-6.0, 6.0, 2048).unwrap();
        let g = wiggle(&grid, &coeffs);
        let (inner, outer) = (SubBox::interval(lo, hi), SubBox::interval(lo - 0.5, hi + 0.5));
        for scheme in [Scheme::Fd4, Scheme::Spectral] {
            for l in 0..3 {
                let p = seminorm_p(&g, &inner, l, scheme).unwrap();
                prop_assert!(p <= seminorm_p(&g, &inner, l + 1, scheme).unwrap());
                prop_assert!(p <= seminorm_p(&g, &outer, l, scheme).unwrap());
                for q in 0..3 {
                    let m = seminorm_mu(&g, q, l, scheme).unwrap();
                    prop_assert!(m <= seminorm_mu(&g, q + 1, l, scheme).unwrap());
                    prop_assert!(m <= seminorm_mu(&g, q, l + 1, scheme).unwrap());
                }
            }
        }
    }

    #[test]
    fn scaling_by_a_power_of_eps_shifts_exponents(c in -2.0..3.0f64) {
        let grid = GridBox::new_1d(-4.0, 4.0, 4096).unwrap();
        let ladder = Ladder::dyadic(1, 6).unwrap();
        let net = EpsilonNet::build(&grid, &ladder, Side::Space, |e| {
            Ok(GridFunction::<f64>::from_real_fn(&grid, |x| (-(x[0] / e).powi(2)).exp() / e))
        })
        .unwrap();
        let k = SubBox::interval(-1.0, 1.0);
        let opts = FitOptions::default();
        let base = profile_space(&net, &k, 3, &opts).unwrap();
        let scaled = profile_space(&net.scale_by(|e| e.powf(-c)), &k, 3, &opts).unwrap();
        for (a, b) in base.entries.iter().zip(&scaled.entries) {
            prop_assert!((b.fit.exponent - a.fit.exponent - c).abs() <= 1e-6, "{:?}: {} vs {}", a.index, a.fit.exponent, b.fit.exponent);
            prop_assert!((b.fit.residual - a.fit.residual).abs() <= 1e-6);
        }
    }
}

/// `N̂_{fg}(l) ≤ max_{l1+l2=l} N̂_f(l1) + N̂_g(l2) + 0.3` for pointwise products.
#[test]
fn product_estimate_on_catalog_pairs() {
    let grid = GridBox::new_1d(-2.0, 2.0, 1 << 15).unwrap();
    let ladder = Ladder::dyadic(4, 10).unwrap();
    let k = SubBox::interval(-1.0, 1.0);
    let opts = FitOptions::default();
    let iota = |s: DistributionSpec| embed_iota::<f64>(&s, moll(), &ladder, &grid).unwrap().net;
    let delta = iota(DistributionSpec::delta());
    let delta1 = iota(DistributionSpec::delta_deriv(1));
    let heaviside = iota(DistributionSpec::heaviside());
    let gaussian = embed_sigma::<f64>(&DistributionSpec::gaussian(), &ladder, &grid).unwrap().net;
    let pairs = [
        ("delta*delta", &delta, &delta),
        ("delta*gaussian", &delta, &gaussian),
        ("heaviside*delta", &heaviside, &delta),
        ("delta1*heaviside", &delta1, &heaviside),
        ("heaviside*heaviside", &heaviside, &heaviside),
    ];
    let l_max = 3;
    for (name, f, g) in pairs {
        let nf = profile_space(f, &k, l_max, &opts).unwrap().exponents();
        let ng = profile_space(g, &k, l_max, &opts).unwrap().exponents();
        let nfg = profile_space(&f.mul(g).unwrap(), &k, l_max, &opts).unwrap().exponents();
        for l in 0..=l_max {
            let bound = (0..=l).map(|l1| nf[l1].max(0.0) + ng[l - l1].max(0.0)).fold(f64::NEG_INFINITY, f64::max);
            assert!(nfg[l] <= bound + 0.3, "{name} l={l}: {} > {bound}", nfg[l]);
        }
    }
}
