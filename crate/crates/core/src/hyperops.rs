//! Generalized translation, convolution and dilation on K.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{LhkError, Result};
use crate::point::HypergroupPoint;
use crate::profile::{Dilated, Profile};
use crate::quadrature::{gauss_jacobi, GridFunction, PhysicalGrid};

/// Quadrature for the translation kernel.
///
/// For alpha > 0 the measure is (alpha/pi) r (1-r^2)^{alpha-1} dr dtheta on
/// (0,1) x (0,2pi); in u = r^2 it becomes (alpha/2pi) (1-u)^{alpha-1} du dtheta,
/// handled by Gauss-Jacobi in u and the periodic trapezoid in theta.
/// For alpha = 0 it is the normalized circle measure at r = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationRule {
    pub alpha: f64,
    /// (r cos theta, r sin theta, weight)
    pub nodes: Vec<(f64, f64, f64)>,
}

impl TranslationRule {
    pub fn build(alpha: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(LhkError::InvalidParameter(format!("alpha must be >= 0, got {alpha}")));
        }
        if n_theta == 0 || (alpha > 0.0 && n_r == 0) {
            return Err(LhkError::InvalidParameter("translation rule needs nodes".into()));
        }
        let thetas: Vec<f64> = (0..n_theta).map(|j| 2.0 * PI * j as f64 / n_theta as f64).collect();
        let mut nodes = Vec::new();
        if alpha == 0.0 {
            for th in &thetas {
                nodes.push((th.cos(), th.sin(), 1.0 / n_theta as f64));
            }
        } else {
            let (y, w) = gauss_jacobi(n_r, alpha - 1.0, 0.0)?;
            for (yi, wi) in y.iter().zip(&w) {
                let r = (0.5 * (1.0 + yi)).sqrt();
                let wr = alpha * wi * 2f64.powf(-alpha) / n_theta as f64;
                for th in &thetas {
                    nodes.push((r * th.cos(), r * th.sin(), wr));
                }
            }
        }
        Ok(Self { alpha, nodes })
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|n| n.2).sum()
    }

    /// T_(x,t) f (y,s).
    pub fn translate_at(&self, p: HypergroupPoint, f: &dyn Profile, y: f64, s: f64) -> Complex64 {
        if p.x == 0.0 {
            return f.eval(y, p.t + s);
        }
        if y == 0.0 {
            return f.eval(p.x, p.t + s);
        }
        let (x, t) = (p.x, p.t);
        let base = x * x + y * y;
        let xy = x * y;
        let mut acc = Complex64::new(0.0, 0.0);
        for &(rc, rs, w) in &self.nodes {
            let xi = (base + 2.0 * xy * rc).max(0.0).sqrt();
            acc += f.eval(xi, t + s + xy * rs) * w;
        }
        acc
    }
}

/// Checks that translating by p keeps evaluations inside the profile's domain.
fn check_domain(f: &dyn Profile, p: HypergroupPoint, y_max: f64, s_max: f64) -> Result<()> {
    if let Some((xm, tm)) = f.domain() {
        let xi = p.x + y_max;
        let eta = p.t.abs() + s_max + p.x * y_max;
        if xi > xm || eta > tm {
            return Err(LhkError::OutsideDomain(format!(
                "translation reaches ({xi:.3}, {eta:.3}) beyond the interpolation box ({xm}, {tm})"
            )));
        }
    }
    Ok(())
}

/// (y,s) -> T_(x,t) f (y,s) on every node of `grid`. At the identity the values are f itself.
pub fn translate(
    rule: &TranslationRule,
    p: HypergroupPoint,
    f: &dyn Profile,
    grid: &Arc<PhysicalGrid>,
) -> Result<GridFunction> {
    if p.x < 0.0 {
        return Err(LhkError::OutsideDomain(format!("x = {} < 0", p.x)));
    }
    let (_, ym) = grid.x_range();
    let (t0, t1) = grid.t_range();
    check_domain(f, p, ym, t0.abs().max(t1.abs()))?;
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let q = grid.node(i);
            rule.translate_at(p, f, q.x, q.t)
        })
        .collect();
    GridFunction::new(grid.clone(), values)
}

/// f *_alpha g (x,t) = int T_(y,-s) f(x,t) g(y,s) dm_alpha(y,s), on the nodes of `out`.
///
/// The translation point is the involution (y,-s) of the integration variable.
pub fn convolve(
    rule: &TranslationRule,
    out: &Arc<PhysicalGrid>,
    f: &dyn Profile,
    g: &GridFunction,
) -> Result<GridFunction> {
    let gg = g.grid();
    let (_, ym) = gg.x_range();
    let (s0, s1) = gg.t_range();
    let (_, xm) = out.x_range();
    let (t0, t1) = out.t_range();
    check_domain(f, HypergroupPoint { x: ym, t: s0.abs().max(s1.abs()) }, xm, t0.abs().max(t1.abs()))?;
    // only nodes where g is nonzero contribute
    let src: Vec<(f64, f64, Complex64)> = (0..gg.len())
        .filter(|&i| g.values()[i] != Complex64::new(0.0, 0.0))
        .map(|i| {
            let q = gg.node(i);
            (q.x, q.t, g.values()[i] * gg.weight(i))
        })
        .collect();
    let values = (0..out.len())
        .into_par_iter()
        .map(|i| {
            let q = out.node(i);
            let mut acc = Complex64::new(0.0, 0.0);
            for &(y, s, gw) in &src {
                acc += rule.translate_at(HypergroupPoint { x: y, t: -s }, f, q.x, q.t) * gw;
            }
            acc
        })
        .collect();
    GridFunction::new(out.clone(), values)
}

/// f_delta(x,t) = delta^{-Q} f(x/delta, t/delta^2), which preserves the L^1 norm.
pub fn dilate_function(delta: f64, f: Arc<dyn Profile>, q_dim: f64) -> Result<Dilated> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(LhkError::InvalidParameter(format!("dilation must be > 0, got {delta}")));
    }
    Ok(Dilated { inner: f, delta, q_dim })
}

/// Tensor-product cubic Lagrange interpolation of a grid function.
/// Evaluation outside the node box returns zero; translation refuses to reach there.
pub struct GridInterpolant {
    f: GridFunction,
}

impl GridInterpolant {
    pub fn new(f: GridFunction) -> Self {
        Self { f }
    }
}

fn stencil(nodes: &[f64], v: f64) -> (usize, [f64; 4]) {
    let n = nodes.len();
    let k = nodes.partition_point(|&z| z < v);
    let start = k.saturating_sub(2).min(n.saturating_sub(4));
    let mut w = [0.0; 4];
    let m = n.min(4);
    for (i, wi) in w.iter_mut().enumerate().take(m) {
        let mut l = 1.0;
        for j in 0..m {
            if j != i {
                l *= (v - nodes[start + j]) / (nodes[start + i] - nodes[start + j]);
            }
        }
        *wi = l;
    }
    (start, w)
}

impl Profile for GridInterpolant {
    fn name(&self) -> String {
        "interpolant".into()
    }

    fn domain(&self) -> Option<(f64, f64)> {
        let g = self.f.grid();
        Some((g.x_range().1, g.t_range().1.min(-g.t_range().0)))
    }

    fn eval(&self, x: f64, t: f64) -> Complex64 {
        let g = self.f.grid();
        let (x0, x1) = g.x_range();
        let (t0, t1) = g.t_range();
        if x > x1 || t < t0 || t > t1 || x < 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let x = x.max(x0);
        let (ix, wx) = stencil(&g.xs, x);
        let (it, wt) = stencil(&g.ts, t);
        let nt = g.nt();
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, wa) in wx.iter().enumerate() {
            if ix + a >= g.nx() {
                break;
            }
            for (b, wb) in wt.iter().enumerate() {
                if it + b >= nt {
                    break;
                }
                acc += self.f.values()[(ix + a) * nt + it + b] * (wa * wb);
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::{DualPoint, Params};
    use crate::profile::{BumpPoly, FnProfile, Gaussian};
    use crate::specfun::character;
    use proptest::prelude::*;

    #[test]
    fn rule_has_unit_mass() {
        for &alpha in &[0.0, 0.3, 1.0, 2.5] {
            let r = TranslationRule::build(alpha, 12, 16).unwrap();
            assert!((r.total_weight() - 1.0).abs() < 1e-12);
            assert!(r.nodes.iter().all(|n| n.2 > 0.0));
        }
        assert!(TranslationRule::build(-1.0, 4, 4).is_err());
    }

    #[test]
    fn identity_translation_is_exact() {
        let rule = TranslationRule::build(1.0, 8, 16).unwrap();
        let grid = Arc::new(PhysicalGrid::build(1.0, 2.0, 2.0, 20, 20).unwrap());
        let out = translate(&rule, HypergroupPoint::IDENTITY, &Gaussian, &grid).unwrap();
        let direct = GridFunction::sample(grid, &Gaussian);
        assert_eq!(out.values(), direct.values());
    }

    #[test]
    fn characters_are_multiplicative() {
        for &alpha in &[0.0, 1.0] {
            let params = Params::new(alpha).unwrap();
            let rule = TranslationRule::build(alpha, 24, 64).unwrap();
            let d = DualPoint::new(0.9, 3).unwrap();
            let chi = FnProfile { label: "chi".into(), f: move |x, t| character(&params, d, HypergroupPoint { x, t }) };
            for &(x, t, y, s) in &[(0.5, 0.2, 0.7, -0.4), (1.2, -1.0, 0.3, 0.8), (1.5, 0.0, 1.1, 2.0)] {
                let p = HypergroupPoint { x, t };
                let lhs = rule.translate_at(p, &chi, y, s);
                let rhs = character(&params, d, p) * character(&params, d, HypergroupPoint { x: y, t: s });
                assert!((lhs - rhs).norm() < 1e-10, "alpha {alpha}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn dilation_preserves_l1_and_scales_l2() {
        let grid = Arc::new(PhysicalGrid::build(0.0, 3.0, 5.0, 120, 200).unwrap());
        let bump: Arc<dyn Profile> = Arc::new(BumpPoly::bump(6, 1.0));
        let f = GridFunction::sample(grid.clone(), bump.as_ref());
        let fd = GridFunction::sample(grid, &dilate_function(2.0, bump, 4.0).unwrap());
        assert!((fd.lp_norm(1.0) / f.lp_norm(1.0) - 1.0).abs() < 1e-6);
        assert!((fd.lp_norm(2.0) / f.lp_norm(2.0) - 0.25).abs() < 1e-6);
        assert!(dilate_function(0.0, Arc::new(Gaussian), 4.0).is_err());
    }

    #[test]
    fn interpolant_reproduces_smooth_functions_and_guards_domain() {
        let grid = Arc::new(PhysicalGrid::build(0.0, 3.0, 3.0, 60, 60).unwrap());
        let interp = GridInterpolant::new(GridFunction::sample(grid.clone(), &Gaussian));
        for &(x, t) in &[(0.37, 0.11), (1.9, -1.3), (0.05, 2.2)] {
            assert!((interp.eval(x, t) - Gaussian.eval(x, t)).norm() < 1e-4);
        }
        let rule = TranslationRule::build(0.0, 1, 16).unwrap();
        let res = translate(&rule, HypergroupPoint { x: 1.0, t: 1.0 }, &interp, &grid);
        assert!(matches!(res, Err(LhkError::OutsideDomain(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn translation_is_an_averaging(x in 0.0f64..2.0, t in -2.0f64..2.0, y in 0.0f64..2.0, s in -2.0f64..2.0) {
            let rule = TranslationRule::build(1.0, 6, 12).unwrap();
            let v = rule.translate_at(HypergroupPoint { x, t }, &Gaussian, y, s);
            prop_assert!(v.norm() <= 1.0 + 1e-12);
            prop_assert!(v.re >= 0.0);
        }

        #[test]
        fn translation_commutes_for_alpha_zero(x in 0.0f64..1.5, t in -1.0f64..1.0, y in 0.0f64..1.5, s in -1.0f64..1.0) {
            // T_(x,t) f (y,s) = T_(y,s) f (x,t)
            let rule = TranslationRule::build(0.0, 1, 64).unwrap();
            let a = rule.translate_at(HypergroupPoint { x, t }, &Gaussian, y, s);
            let b = rule.translate_at(HypergroupPoint { x: y, t: s }, &Gaussian, x, t);
            prop_assert!((a - b).norm() < 1e-10);
        }
    }
}
