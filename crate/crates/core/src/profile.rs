//! Analytic test functions on K.

use num_complex::Complex64;
use std::sync::Arc;

use crate::geometry::{norm_xt, MultiIndex};

/// A function on K that can be evaluated anywhere.
pub trait Profile: Send + Sync {
    fn name(&self) -> String;

    fn eval(&self, x: f64, t: f64) -> Complex64;

    /// The Laguerre operator applied in closed form, when available.
    fn laguerre(&self, _alpha: f64, _x: f64, _t: f64) -> Option<Complex64> {
        None
    }

    /// Radius of a homogeneous ball containing the support, if compact.
    fn support_radius(&self) -> Option<f64> {
        None
    }

    /// Box [0, X] x [-T, T] outside which the profile cannot be evaluated, if any.
    fn domain(&self) -> Option<(f64, f64)> {
        None
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Zero;

impl Profile for Zero {
    fn name(&self) -> String {
        "zero".into()
    }
    fn eval(&self, _x: f64, _t: f64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    fn laguerre(&self, _alpha: f64, _x: f64, _t: f64) -> Option<Complex64> {
        Some(Complex64::new(0.0, 0.0))
    }
    fn support_radius(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// e^{-x^2 - t^2}.
#[derive(Debug, Clone, Copy)]
pub struct Gaussian;

impl Profile for Gaussian {
    fn name(&self) -> String {
        "gaussian".into()
    }
    fn eval(&self, x: f64, t: f64) -> Complex64 {
        Complex64::new((-x * x - t * t).exp(), 0.0)
    }
    fn laguerre(&self, alpha: f64, x: f64, t: f64) -> Option<Complex64> {
        let x2 = x * x;
        let f = (-x2 - t * t).exp();
        Some(Complex64::new((2.0 * x2 + 4.0 * x2 * t * t - 4.0 * alpha - 4.0) * f, 0.0))
    }
}

/// Polynomial times bump: sum_I c_I (x/r)^{i1} (t/r^2)^{i0} (1 - N^4/r^4)_+^k.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpPoly {
    pub k: u32,
    pub r: f64,
    pub terms: Vec<(MultiIndex, f64)>,
}

impl BumpPoly {
    /// The plain bump ((1 - N^4/r^4)_+)^k.
    pub fn bump(k: u32, r: f64) -> Self {
        Self { k, r, terms: vec![(MultiIndex::new(0, 0), 1.0)] }
    }

    pub fn monomial(k: u32, r: f64, mi: MultiIndex) -> Self {
        Self { k, r, terms: vec![(mi, 1.0)] }
    }

    /// (1 - rho)^k with rho = N^4 / r^4, or 0 outside the ball.
    #[inline]
    pub fn bump_value(&self, x: f64, t: f64) -> f64 {
        let r4 = self.r.powi(4);
        let rho = (x.powi(4) + 4.0 * t * t) / r4;
        if rho >= 1.0 {
            0.0
        } else {
            (1.0 - rho).powi(self.k as i32)
        }
    }

    #[inline]
    pub fn poly_value(&self, x: f64, t: f64) -> f64 {
        let (u, v) = (x / self.r, t / (self.r * self.r));
        self.terms.iter().map(|(mi, c)| c * mi.eval(u, v)).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { k: self.k, r: self.r, terms: self.terms.iter().map(|(mi, c)| (*mi, c * factor)).collect() }
    }
}

fn dpow(base: f64, e: usize, d: usize) -> f64 {
    // d-th derivative of base^e
    if d > e {
        return 0.0;
    }
    let mut c = 1.0;
    for j in 0..d {
        c *= (e - j) as f64;
    }
    c * base.powi((e - d) as i32)
}

impl Profile for BumpPoly {
    fn name(&self) -> String {
        format!("bumppoly_k{}_r{}", self.k, self.r)
    }

    fn eval(&self, x: f64, t: f64) -> Complex64 {
        let b = self.bump_value(x, t);
        if b == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(b * self.poly_value(x, t), 0.0)
    }

    fn laguerre(&self, alpha: f64, x: f64, t: f64) -> Option<Complex64> {
        if self.k < 2 || self.terms.iter().any(|(mi, c)| mi.i1 == 1 && *c != 0.0) {
            return None;
        }
        let r = self.r;
        let r4 = r.powi(4);
        let rho = (x.powi(4) + 4.0 * t * t) / r4;
        if rho >= 1.0 {
            return Some(Complex64::new(0.0, 0.0));
        }
        let k = self.k as f64;
        let om = 1.0 - rho;
        let b = om.powi(self.k as i32);
        let b1 = om.powi(self.k as i32 - 1);
        let b2 = om.powi(self.k as i32 - 2);
        let rho_x = 4.0 * x.powi(3) / r4;
        let rho_xx = 12.0 * x * x / r4;
        let rho_t = 8.0 * t / r4;
        let rho_tt = 8.0 / r4;
        let bx = -k * b1 * rho_x;
        let bx_over_x = -k * b1 * 4.0 * x * x / r4;
        let bxx = k * (k - 1.0) * b2 * rho_x * rho_x - k * b1 * rho_xx;
        let bt = -k * b1 * rho_t;
        let btt = k * (k - 1.0) * b2 * rho_t * rho_t - k * b1 * rho_tt;

        let (u, v) = (x / r, t / (r * r));
        let (mut p, mut px, mut px_over_x, mut pxx, mut pt, mut ptt) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (mi, c) in &self.terms {
            let (a, e) = (mi.i1, mi.i0);
            let tu = dpow(v, e, 0);
            p += c * dpow(u, a, 0) * tu;
            px += c * dpow(u, a, 1) / r * tu;
            // x^{a-2} factor of the 1/x term, fine for a = 0 (vanishes) and a >= 2
            if a >= 2 {
                px_over_x += c * a as f64 * u.powi(a as i32 - 2) / (r * r) * tu;
            }
            pxx += c * dpow(u, a, 2) / (r * r) * tu;
            pt += c * dpow(u, a, 0) * dpow(v, e, 1) / (r * r);
            ptt += c * dpow(u, a, 0) * dpow(v, e, 2) / r4;
        }
        let fxx = pxx * b + 2.0 * px * bx + p * bxx;
        let fx_over_x = px_over_x * b + p * bx_over_x;
        let ftt = ptt * b + 2.0 * pt * bt + p * btt;
        Some(Complex64::new(fxx + (2.0 * alpha + 1.0) * fx_over_x + x * x * ftt, 0.0))
    }

    fn support_radius(&self) -> Option<f64> {
        Some(self.r)
    }
}

/// f_delta(x,t) = delta^{-Q} f(x/delta, t/delta^2).
#[derive(Clone)]
pub struct Dilated {
    pub inner: Arc<dyn Profile>,
    pub delta: f64,
    pub q_dim: f64,
}

impl Profile for Dilated {
    fn name(&self) -> String {
        format!("{}_dilated_{}", self.inner.name(), self.delta)
    }
    fn eval(&self, x: f64, t: f64) -> Complex64 {
        let d = self.delta;
        self.inner.eval(x / d, t / (d * d)) * d.powf(-self.q_dim)
    }
    fn laguerre(&self, alpha: f64, x: f64, t: f64) -> Option<Complex64> {
        let d = self.delta;
        self.inner.laguerre(alpha, x / d, t / (d * d)).map(|v| v * d.powf(-self.q_dim - 2.0))
    }
    fn support_radius(&self) -> Option<f64> {
        self.inner.support_radius().map(|r| r * self.delta)
    }
}

/// A profile given by a closure, mainly for tests and oracles.
pub struct FnProfile<F> {
    pub label: String,
    pub f: F,
}

impl<F: Fn(f64, f64) -> Complex64 + Send + Sync> Profile for FnProfile<F> {
    fn name(&self) -> String {
        self.label.clone()
    }
    fn eval(&self, x: f64, t: f64) -> Complex64 {
        (self.f)(x, t)
    }
}

#[inline]
pub fn inside_ball(x: f64, t: f64, r: f64) -> bool {
    norm_xt(x, t) < r
}
