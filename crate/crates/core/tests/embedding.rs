use std::sync::OnceLock;

use genfunc::embed::{cutoff, embed_iota, embed_iota_s, embed_sigma_s, DistributionSpec};
use genfunc::grid::{derivative, is_negligible, roundoff_floor, NegligibilityMode, Scheme, DEFAULT_FLOOR};
use genfunc::mollifier::Mollifier;
use genfunc::{EpsilonNet, GridBox, Ladder, SubBox};
use proptest::prelude::*;

fn moll() -> &'static Mollifier {
    static M: OnceLock<Mollifier> = OnceLock::new();
    M.get_or_init(|| Mollifier::standard().unwrap())
}

fn local() -> (GridBox, Ladder) {
    (GridBox::new_1d(-2.0, 2.0, 1 << 14).unwrap(), Ladder::dyadic(4, 10).unwrap())
}

fn s_regime() -> (GridBox, Ladder) {
    (GridBox::new_1d(-8.0, 8.0, 1 << 15).unwrap(), Ladder::dyadic(4, 10).unwrap())
}

/// Negligibility of `a − b` with the floor raised to the roundoff of the
/// larger input.
fn same_class(a: &EpsilonNet<f64>, b: &EpsilonNet<f64>, mode: &NegligibilityMode) -> bool {
    let floor = roundoff_floor(&[a, b], mode, DEFAULT_FLOOR).unwrap();
    is_negligible(&a.sub(b).unwrap(), mode, 4, floor)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rho_eps_has_unit_mass_and_is_even(k in 2.0..8.0f64) {
        let eps = 2f64.powf(-k);
        let target = GridBox::new_1d(-8.0, 8.0, 1 << 14).unwrap();
        let r = moll().rho_eps::<f64>(eps, &target).unwrap();
        let n = target.n[0];
        let mass: f64 = r.samples.iter().map(|v| v.re).sum::<f64>() * target.h(0);
        prop_assert!((mass - 1.0).abs() <= 1e-9, "mass {}", mass);
        let sup = r.sup();
        for j in 1..n {
            prop_assert!((r.samples[j] - r.samples[n - j]).norm() <= 1e-12 * sup);
        }
    }
}

#[test]
fn iota_is_linear_on_catalog_pairs() {
    let (grid, ladder) = local();
    let mode = NegligibilityMode::Space { k: SubBox::interval(-1.0, 1.0) };
    let catalog = [
        DistributionSpec::delta(),
        DistributionSpec::delta_deriv(1),
        DistributionSpec::heaviside(),
        DistributionSpec::gaussian(),
        DistributionSpec::WeightedPoly { coeffs: vec![1.0, 1.0] },
    ];
    let nets: Vec<_> = catalog.iter().map(|s| embed_iota::<f64>(s, moll(), &ladder, &grid).unwrap().net).collect();
    for i in 0..catalog.len() {
        for j in i + 1..catalog.len() {
            for (a, b) in [(-1.0, 2.0), (2.0, -1.0), (2.0, 2.0), (-1.0, -1.0)] {
                let combo = DistributionSpec::Combination { terms: vec![(a, catalog[i].clone()), (b, catalog[j].clone())] };
                let direct = embed_iota::<f64>(&combo, moll(), &ladder, &grid).unwrap().net;
                let summed = nets[i].scale_by(|_| a).add(&nets[j].scale_by(|_| b)).unwrap();
                assert!(same_class(&direct, &summed, &mode), "{a}·{:?} + {b}·{:?}", catalog[i], catalog[j]);
            }
        }
    }
}

#[test]
fn iota_s_is_linear_on_catalog_pairs() {
    let (grid, ladder) = s_regime();
    let mode = NegligibilityMode::Decay { q: 4 };
    let catalog = [DistributionSpec::delta(), DistributionSpec::delta_deriv(1), DistributionSpec::gaussian(), DistributionSpec::bump()];
    let nets: Vec<_> = catalog.iter().map(|s| embed_iota_s::<f64>(s, moll(), &ladder, &grid).unwrap().net).collect();
    for i in 0..catalog.len() {
        for j in i + 1..catalog.len() {
            for (a, b) in [(-1.0, 2.0), (2.0, -1.0)] {
                let combo = DistributionSpec::Combination { terms: vec![(a, catalog[i].clone()), (b, catalog[j].clone())] };
                let direct = embed_iota_s::<f64>(&combo, moll(), &ladder, &grid).unwrap().net;
                let summed = nets[i].scale_by(|_| a).add(&nets[j].scale_by(|_| b)).unwrap();
                assert!(same_class(&direct, &summed, &mode), "{a}·{:?} + {b}·{:?}", catalog[i], catalog[j]);
            }
        }
    }
}

/// `∂ι(δ^(k)) = ι(δ^(k+1))`: spectral differentiation of one embedding
/// against the analytic rule for the next.
#[test]
fn derivatives_commute_with_iota() {
    let (grid, ladder) = local();
    let mode = NegligibilityMode::Space { k: SubBox::interval(-1.0, 1.0) };
    for k in 0..2 {
        let u = embed_iota::<f64>(&DistributionSpec::delta_deriv(k), moll(), &ladder, &grid).unwrap().net;
        let du = embed_iota::<f64>(&DistributionSpec::delta_deriv(k + 1), moll(), &ladder, &grid).unwrap().net;
        let spectral = u.map_frames(|f| derivative(f, 0, 1, Scheme::Spectral)).unwrap();
        assert!(same_class(&spectral, &du, &mode), "k={k}");
    }
}

/// The class of `κ·u` does not depend on the admissible cutoff.
#[test]
fn cutoff_choice_does_not_change_the_class() {
    let grid = GridBox::new_1d(-4.0, 4.0, 1 << 14).unwrap();
    let ladder = Ladder::dyadic(4, 10).unwrap();
    let mode = NegligibilityMode::Decay { q: 4 };
    let narrow = cutoff::<f64>(&grid, &[0.0], 1.0, 2.0);
    let wide = cutoff::<f64>(&grid, &[0.0], 1.5, 3.0);
    for spec in [DistributionSpec::delta(), DistributionSpec::delta_deriv(1), DistributionSpec::delta_deriv(2), DistributionSpec::bump()] {
        let u = embed_iota::<f64>(&spec, moll(), &ladder, &grid).unwrap().net;
        let (a, b) = (u.multiply_by(&narrow).unwrap(), u.multiply_by(&wide).unwrap());
        assert!(same_class(&a, &b, &mode), "{spec:?}");
    }
}

#[test]
fn iota_s_restricts_to_sigma_s_on_schwartz_functions() {
    let (grid, ladder) = s_regime();
    let mode = NegligibilityMode::Decay { q: 4 };
    for spec in [DistributionSpec::gaussian(), DistributionSpec::bump()] {
        let a = embed_iota_s::<f64>(&spec, moll(), &ladder, &grid).unwrap().net;
        let b = embed_sigma_s::<f64>(&spec, &ladder, &grid).unwrap().net;
        assert!(same_class(&a, &b, &mode), "{spec:?}");
    }
    // Negative control: ι_S(δ) and σ_S(gaussian) differ by a non-negligible net.
    let d = embed_iota_s::<f64>(&DistributionSpec::delta(), moll(), &ladder, &grid).unwrap().net;
    let g = embed_sigma_s::<f64>(&DistributionSpec::gaussian(), &ladder, &grid).unwrap().net;
    assert!(!same_class(&d, &g, &mode));
}
