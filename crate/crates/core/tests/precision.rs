use std::sync::OnceLock;

use genfunc::embed::{check_g1, embed_iota, DistributionSpec, G1_B_MAX};
use genfunc::grid::{profile_space, FitOptions};
use genfunc::io::{read_embedding, read_mollifier, write_embedding, write_mollifier};
use genfunc::mollifier::Mollifier;
use genfunc::scales::{classify_profile, default_a_grid, FamilyName, MembershipParams};
use genfunc::{GridBox, Ladder, Real, SubBox};

fn moll() -> &'static Mollifier {
    static M: OnceLock<Mollifier> = OnceLock::new();
    M.get_or_init(|| Mollifier::standard().unwrap())
}

fn setup() -> (GridBox, Ladder, SubBox) {
    (GridBox::new_1d(-2.0, 2.0, 1 << 13).unwrap(), Ladder::dyadic(3, 9).unwrap(), SubBox::interval(-1.0, 1.0))
}

fn delta_exponents<T: Real>(l: usize) -> Vec<f64> {
    let (grid, ladder, k) = setup();
    let net = embed_iota::<T>(&DistributionSpec::delta(), moll(), &ladder, &grid).unwrap().net;
    profile_space(&net, &k, l, &FitOptions::default()).unwrap().exponents()
}

/// Single precision reproduces the double-precision growth of `ι(δ)` for
/// `l ≤ 1`. Higher orders at the largest ε fall below the f32 derivative
/// noise level and are zeroed, which steepens the fit.
#[test]
fn single_precision_tracks_double_precision() {
    let (e32, e64) = (delta_exponents::<f32>(1), delta_exponents::<f64>(1));
    for (l, (a, b)) in e32.iter().zip(&e64).enumerate() {
        assert!((a - b).abs() <= 0.25, "l={l}: f32 {a} vs f64 {b}");
        assert!((b - (l as f64 + 1.0)).abs() <= 0.25, "l={l}: {b}");
    }
}

#[test]
fn stored_embedding_reclassifies_identically() {
    let (grid, ladder, k) = setup();
    let dir = tempfile::tempdir().unwrap();
    let m = moll();
    let record = write_mollifier(m, &dir.path().join("mollifier")).unwrap();
    let result = embed_iota::<f64>(&DistributionSpec::heaviside(), m, &ladder, &grid).unwrap();
    write_embedding(&result, Some(record.digest.clone()), &dir.path().join("net")).unwrap();

    let rebuilt = read_mollifier(&dir.path().join("mollifier")).unwrap();
    assert_eq!(rebuilt.digest(), record.digest);
    let (loaded, meta) = read_embedding::<f64>(&dir.path().join("net")).unwrap();
    assert_eq!(meta.mollifier_digest.as_deref(), Some(record.digest.as_str()));
    assert_eq!(loaded.source, Some(DistributionSpec::heaviside()));

    let opts = FitOptions::default();
    let before = profile_space(&result.net, &k, 3, &opts).unwrap();
    let after = profile_space(&loaded.net, &k, 3, &opts).unwrap();
    assert_eq!(before, after);
    let class = classify_profile(&after, MembershipParams::default(), &default_a_grid()).unwrap();
    assert_eq!(class.family, FamilyName::R1);
    let g1 = check_g1(&loaded.net, &k, 3, G1_B_MAX, 0.25, &opts).unwrap();
    assert!(g1.pass && g1.b_hat.abs() <= 0.25, "{}", g1.b_hat);
}
