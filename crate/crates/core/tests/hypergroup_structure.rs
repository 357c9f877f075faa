use lhk_core::geometry::MultiIndex;
use lhk_core::hyperops::{convolve, TranslationRule};
use lhk_core::profile::{BumpPoly, FnProfile, Gaussian, Profile};
use lhk_core::quadrature::{GridFunction, PhysicalGrid, SpectralGrid};
use lhk_core::transform::forward;
use num_complex::Complex64;
use std::sync::Arc;

fn convolution_theorem_defect(alpha: f64, f: &dyn Profile, g: &dyn Profile) -> f64 {
    let out = Arc::new(PhysicalGrid::build(alpha, 6.0, 7.0, 120, 120).unwrap());
    let gg = Arc::new(PhysicalGrid::build(alpha, 1.0, 0.5, 20, 20).unwrap());
    let spec = Arc::new(SpectralGrid::build(alpha, 1e-6, 6.0, 200, 64).unwrap());
    let g = GridFunction::sample(gg, g);
    let rule = TranslationRule::build(alpha, 4, 24).unwrap();
    let fg = convolve(&rule, &out, f, &g).unwrap();
    let lhs = forward(&fg, &spec).unwrap();
    let fh = forward(&GridFunction::sample(out.clone(), f), &spec).unwrap();
    let gh = forward(&g, &spec).unwrap();
    let prod: Vec<Complex64> = fh.values().iter().zip(gh.values()).map(|(a, b)| a * b).collect();
    let diff: Vec<f64> = lhs.values().iter().zip(&prod).map(|(a, b)| (a - b).norm_sqr()).collect();
    let den: Vec<f64> = prod.iter().map(|b| b.norm_sqr()).collect();
    (spec.integrate(&diff) / spec.integrate(&den)).sqrt()
}

#[test]
fn convolution_theorem_on_even_profiles() {
    for &alpha in &[0.0, 1.0] {
        let d = convolution_theorem_defect(alpha, &Gaussian, &BumpPoly::bump(4, 1.0));
        assert!(d < 1e-3, "alpha {alpha}: {d}");
    }
}

#[test]
fn convolution_theorem_fixes_the_involution_sign() {
    // both factors odd-asymmetric in t, so the sign of the translation matters
    let shifted = FnProfile {
        label: "shifted".into(),
        f: |x: f64, t: f64| Complex64::new((-x * x - (t - 0.5) * (t - 0.5)).exp(), 0.0),
    };
    let g = BumpPoly { k: 4, r: 1.0, terms: vec![(MultiIndex::new(0, 0), 1.0), (MultiIndex::new(0, 1), 1.5)] };
    let d = convolution_theorem_defect(0.0, &shifted, &g);
    assert!(d < 1e-3, "{d}");
}
