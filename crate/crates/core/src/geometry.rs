//! Homogeneous structure: norms, dilations, ball volumes, and the polynomial
//! spaces used for moment conditions.

use num_complex::Complex64;
use statrs::function::beta::beta;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

use crate::error::{LhkError, Result};
use crate::point::{DualPoint, HypergroupPoint, Params};
use crate::quadrature::GridFunction;

/// Monomial x^{i1} t^{i0}; its homogeneous degree is i1 + 2 i0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    pub i1: usize,
    pub i0: usize,
}

impl MultiIndex {
    pub fn new(i1: usize, i0: usize) -> Self {
        Self { i1, i0 }
    }

    pub fn degree(&self) -> usize {
        self.i1 + 2 * self.i0
    }

    #[inline]
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        x.powi(self.i1 as i32) * t.powi(self.i0 as i32)
    }
}

/// The span of monomials of homogeneous degree <= s, sorted by (degree, i1).
#[derive(Debug, Clone, PartialEq)]
pub struct PolySpace {
    pub s: usize,
    pub basis: Vec<MultiIndex>,
}

pub fn monomial_basis(s: usize) -> PolySpace {
    let mut basis = Vec::new();
    for d in 0..=s {
        for i0 in (0..=d / 2).rev() {
            basis.push(MultiIndex::new(d - 2 * i0, i0));
        }
    }
    PolySpace { s, basis }
}

/// Density of the Haar measure with respect to dx dt.
#[inline]
pub fn haar_density(alpha: f64, x: f64) -> f64 {
    x.powf(2.0 * alpha + 1.0) / (PI * gamma(alpha + 1.0))
}

/// N(x,t) = (x^4 + 4 t^2)^{1/4}.
#[inline]
pub fn homogeneous_norm(p: HypergroupPoint) -> f64 {
    norm_xt(p.x, p.t)
}

#[inline]
pub fn norm_xt(x: f64, t: f64) -> f64 {
    (x.powi(4) + 4.0 * t * t).sqrt().sqrt()
}

/// 4 |lambda| (m + (alpha+1)/2), the eigenvalue of -L on the character.
pub fn dual_quasinorm(params: &Params, dual: DualPoint) -> f64 {
    quasinorm(params.alpha(), dual.lambda, dual.m)
}

#[inline]
pub(crate) fn quasinorm(alpha: f64, lambda: f64, m: usize) -> f64 {
    4.0 * lambda.abs() * (m as f64 + 0.5 * (alpha + 1.0))
}

/// m_alpha of the unit ball {N < 1}: B((alpha+1)/2, 3/2) / (4 pi Gamma(alpha+1)).
pub fn unit_ball_volume(params: &Params) -> f64 {
    let a = params.alpha();
    beta((a + 1.0) / 2.0, 1.5) / (4.0 * PI * gamma(a + 1.0))
}

/// m_alpha(B(e, r)) = C_Q r^Q.
pub fn ball_volume(params: &Params, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(LhkError::InvalidParameter(format!("radius must be > 0, got {r}")));
    }
    Ok(unit_ball_volume(params) * r.powf(params.q_dim()))
}

/// delta^{-1}(x,t) = (x/delta, t/delta^2).
pub fn dilate_point(delta: f64, p: HypergroupPoint) -> Result<HypergroupPoint> {
    if !(delta > 0.0) {
        return Err(LhkError::InvalidParameter(format!("dilation must be > 0, got {delta}")));
    }
    Ok(HypergroupPoint { x: p.x / delta, t: p.t / (delta * delta) })
}

/// The involution (x,t) -> (x,-t).
pub fn involution(p: HypergroupPoint) -> HypergroupPoint {
    HypergroupPoint { x: p.x, t: -p.t }
}

/// Moments int f (x,t)^I dm_alpha over a polynomial space.
///
/// Fails when f does not vanish on the outer edge of its grid, since then the
/// grid cannot contain the support.
pub fn moment_vector(f: &GridFunction, space: &PolySpace) -> Result<Vec<Complex64>> {
    f.check_edge_decay(1e-8)?;
    let g = f.grid();
    Ok(space
        .basis
        .iter()
        .map(|mi| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (idx, (x, t, w)) in g.iter().enumerate() {
                acc += f.values()[idx] * (w * mi.eval(x, t));
            }
            acc
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basis_example() {
        let b = monomial_basis(2).basis;
        assert_eq!(b.len(), 4);
        for mi in [MultiIndex::new(0, 0), MultiIndex::new(1, 0), MultiIndex::new(2, 0), MultiIndex::new(0, 1)] {
            assert!(b.contains(&mi));
        }
        for w in b.windows(2) {
            assert!((w[0].degree(), w[0].i1) < (w[1].degree(), w[1].i1));
        }
    }

    #[test]
    fn unit_ball_closed_forms() {
        let v0 = unit_ball_volume(&Params::new(0.0).unwrap());
        assert!((v0 - 0.125).abs() < 1e-12);
        let v1 = unit_ball_volume(&Params::new(1.0).unwrap());
        assert!((v1 - 1.0 / (6.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn quasinorm_example() {
        let p = Params::new(0.0).unwrap();
        assert!((dual_quasinorm(&p, DualPoint::new(1.0, 0).unwrap()) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_radius() {
        let p = Params::new(0.0).unwrap();
        assert!(ball_volume(&p, 0.0).is_err());
        assert!(ball_volume(&p, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn norm_is_homogeneous(x in 0.0f64..5.0, t in -5.0f64..5.0, d in 0.1f64..10.0) {
            let p = HypergroupPoint::new(x, t).unwrap();
            let q = dilate_point(d, p).unwrap();
            let lhs = homogeneous_norm(q);
            let rhs = homogeneous_norm(p) / d;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }

        #[test]
        fn involution_preserves_norm(x in 0.0f64..5.0, t in -5.0f64..5.0) {
            let p = HypergroupPoint::new(x, t).unwrap();
            prop_assert_eq!(homogeneous_norm(p), homogeneous_norm(involution(p)));
        }

        #[test]
        fn ball_volume_scales_with_q(r in 0.1f64..5.0, alpha in 0.0f64..3.0) {
            let p = Params::new(alpha).unwrap();
            let lhs = ball_volume(&p, 2.0 * r).unwrap();
            let rhs = 2f64.powf(p.q_dim()) * ball_volume(&p, r).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }

        #[test]
        fn quasinorm_scales_linearly(l in 0.01f64..10.0, m in 0usize..50, alpha in 0.0f64..3.0) {
            let p = Params::new(alpha).unwrap();
            let a = dual_quasinorm(&p, DualPoint::new(l, m).unwrap());
            let b = dual_quasinorm(&p, DualPoint::new(-3.0 * l, m).unwrap());
            prop_assert!((b - 3.0 * a).abs() <= 1e-12 * b);
        }
    }
}
