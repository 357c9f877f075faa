use lhk_core::atoms::{atom_grid, default_profile, make_atom, min_moment_order, Atom, AtomSpec};
use lhk_core::multipliers::{build_multiplier, MultiplierKind, RadialFn};
use lhk_core::profile::Profile;
use lhk_core::{DualPoint, Params};
use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::OnceLock;

fn atoms() -> &'static [Atom] {
    static ATOMS: OnceLock<Vec<Atom>> = OnceLock::new();
    ATOMS.get_or_init(|| {
        let mut out = Vec::new();
        for alpha in [0.0, 1.0] {
            let params = Params::new(alpha).unwrap();
            for p in [1.0, 2.0 / 3.0] {
                let spec = AtomSpec::new(&params, p, 2.0, min_moment_order(params.q_dim(), p), 1.0).unwrap();
                let grid = atom_grid(alpha, 1.0, 100).unwrap();
                out.push(make_atom(&default_profile(&spec, 6), &spec, &grid).unwrap());
            }
        }
        out
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dilation_moves_support_and_scales_values(
        which in 0usize..4,
        delta in 0.2f64..5.0,
        x in 0.0f64..1.2,
        t in -0.7f64..0.7,
    ) {
        let a = &atoms()[which];
        let d = a.dilated(delta).unwrap();
        let q = 2.0 * a.alpha + 4.0;
        let want = a.eval(x, t) * delta.powf(-q / a.spec.p);
        let got = d.eval(delta * x, delta * delta * t);
        prop_assert!((got - want).norm() <= 1e-12 * want.norm().max(1e-300) + 1e-300);
        prop_assert_eq!(d.support_radius(), Some(delta));
    }

    #[test]
    fn imaginary_powers_are_unimodular(
        s in -3.0f64..3.0,
        lambda in -100.0f64..100.0,
        m in 0usize..500,
        alpha in 0.0f64..3.0,
    ) {
        prop_assume!(lambda != 0.0);
        let d = DualPoint { lambda, m };
        for kind in [MultiplierKind::FractionalL { s }, MultiplierKind::FractionalIplusL { s }] {
            let v = build_multiplier(kind).unwrap().eval(alpha, d);
            prop_assert!((v.norm() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn analytic_lambda_derivatives_match_differences(
        lambda in 0.05f64..5.0,
        sign in prop::bool::ANY,
        m in 0usize..20,
        k in 1usize..4,
        t in 0.05f64..0.5,
    ) {
        let d = DualPoint { lambda: if sign { lambda } else { -lambda }, m };
        for kind in [MultiplierKind::Radial(RadialFn::Inv1p), MultiplierKind::Radial(RadialFn::Exp { t }), MultiplierKind::FractionalIplusL { s: 0.7 }] {
            let mult = build_multiplier(kind).unwrap();
            let exact = mult.dlambda(1.0, d, k).unwrap();
            let fd = mult.dlambda_fd(1.0, d, k);
            let tol = if k == 3 { 1e-3 } else { 1e-6 };
            prop_assert!((exact - fd).norm() <= tol * exact.norm().max(1.0), "{:?} k {}: {} vs {}", mult.kind, k, exact, fd);
        }
    }

    #[test]
    fn constant_multiplier_is_constant(re in -5.0f64..5.0, im in -5.0f64..5.0, lambda in -50.0f64..50.0, m in 0usize..100) {
        let c = Complex64::new(re, im);
        let mult = build_multiplier(MultiplierKind::Constant(c)).unwrap();
        prop_assert_eq!(mult.eval(0.0, DualPoint { lambda, m }), c);
    }
}
