//! Laguerre polynomials, normalized Laguerre functions and the characters
//! phi_(lambda,m)(x,t) = e^{i lambda t} L_m(|lambda| x^2) of the hypergroup.

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::error::{LhkError, Result};
use crate::point::{DualPoint, HypergroupPoint, Params};

/// Largest derivative order served by the analytic derivative routines.
pub const MAX_DERIVATIVE_ORDER: usize = 8;

pub(crate) fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc.round()
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc * j as f64)
}

/// L^alpha_m(x) by the three-term recurrence.
pub fn laguerre_poly(alpha: f64, m: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if m == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..m {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// L^alpha_m(0) = Gamma(m+alpha+1) / (Gamma(m+1) Gamma(alpha+1)).
///
/// Exact for integer alpha and small m, log-gamma otherwise.
pub fn laguerre_at_zero(alpha: f64, m: usize) -> f64 {
    if alpha.fract() == 0.0 && alpha <= 40.0 && m <= 40 {
        let n = m + alpha as usize;
        let mut acc: u128 = 1;
        let k = m.min(n - m);
        for j in 0..k {
            acc = acc * (n - j) as u128 / (j + 1) as u128;
        }
        return acc as f64;
    }
    (ln_gamma(m as f64 + alpha + 1.0) - ln_gamma(m as f64 + 1.0) - ln_gamma(alpha + 1.0)).exp()
}

/// Fills `out[m]` with the normalized Laguerre function e^{-u/2} L_m(u) / L_m(0)
/// for m = 0..out.len().
///
/// The recurrence runs directly on the normalized quantities, so nothing
/// overflows for large m.
pub fn laguerre_fn_table(alpha: f64, u: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let e = (-0.5 * u).exp();
    out[0] = e;
    if out.len() == 1 {
        return;
    }
    out[1] = e * (1.0 + alpha - u) / (1.0 + alpha);
    for m in 1..out.len() - 1 {
        let mf = m as f64;
        out[m + 1] = ((2.0 * mf + 1.0 + alpha - u) * out[m] - mf * out[m - 1]) / (mf + 1.0 + alpha);
    }
}

/// The normalized Laguerre function e^{-u/2} L^alpha_m(u) / L^alpha_m(0), bounded by 1 on u >= 0.
pub fn laguerre_fn(alpha: f64, m: usize, u: f64) -> f64 {
    let mut buf = vec![0.0; m + 1];
    laguerre_fn_table(alpha, u, &mut buf);
    buf[m]
}

/// L^{alpha+i}_{m-i}(0) / L^alpha_m(0) = prod_{j<i} (m-j)/(alpha+1+j).
fn level_ratio(alpha: f64, m: usize, i: usize) -> f64 {
    let mut r = 1.0;
    for j in 0..i {
        if j >= m {
            return 0.0;
        }
        r *= (m - j) as f64 / (alpha + 1.0 + j as f64);
    }
    r
}

/// Derivative tables of the normalized Laguerre functions in u.
///
/// After `fill(u)`, `get(j, m)` is the j-th u-derivative of e^{-u/2} L_m(u)/L_m(0).
pub struct LaguerreDerivatives {
    alpha: f64,
    m_max: usize,
    order: usize,
    // shifted[i][n] = e^{-u/2} L^{alpha+i}_n(u) / L^{alpha+i}_n(0)
    shifted: Vec<Vec<f64>>,
    table: Vec<Vec<f64>>,
    // coef[j][i] = C(j,i) (-1/2)^{j-i} (-1)^i
    coef: Vec<Vec<f64>>,
    ratio: Vec<Vec<f64>>,
}

impl LaguerreDerivatives {
    pub fn new(alpha: f64, m_max: usize, order: usize) -> Self {
        let coef = (0..=order)
            .map(|j| {
                (0..=j)
                    .map(|i| binom(j, i) * (-0.5f64).powi((j - i) as i32) * if i % 2 == 0 { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        let ratio = (0..=order).map(|i| (0..=m_max).map(|m| level_ratio(alpha, m, i)).collect()).collect();
        Self {
            alpha,
            m_max,
            order,
            shifted: vec![vec![0.0; m_max + 1]; order + 1],
            table: vec![vec![0.0; m_max + 1]; order + 1],
            coef,
            ratio,
        }
    }

    pub fn fill(&mut self, u: f64) {
        for i in 0..=self.order {
            laguerre_fn_table(self.alpha + i as f64, u, &mut self.shifted[i]);
        }
        for j in 0..=self.order {
            for m in 0..=self.m_max {
                let mut acc = 0.0;
                for i in 0..=j.min(m) {
                    acc += self.coef[j][i] * self.ratio[i][m] * self.shifted[i][m - i];
                }
                self.table[j][m] = acc;
            }
        }
    }

    #[inline]
    pub fn get(&self, j: usize, m: usize) -> f64 {
        self.table[j][m]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.table[j]
    }
}

/// j-th u-derivative of the normalized Laguerre function at u.
pub fn laguerre_fn_derivative(alpha: f64, m: usize, u: f64, j: usize) -> f64 {
    let mut d = LaguerreDerivatives::new(alpha, m, j);
    d.fill(u);
    d.get(j, m)
}

/// phi_(lambda,m)(x,t) = e^{i lambda t} L^alpha_m(|lambda| x^2) (normalized).
pub fn character(params: &Params, dual: DualPoint, point: HypergroupPoint) -> Complex64 {
    let u = dual.lambda.abs() * point.x * point.x;
    Complex64::from_polar(1.0, dual.lambda * point.t) * laguerre_fn(params.alpha(), dual.m, u)
}

/// I-th lambda-derivative of the character, by Leibniz over the two factors.
pub fn character_dlambda(params: &Params, dual: DualPoint, point: HypergroupPoint, order: usize) -> Result<Complex64> {
    if dual.lambda == 0.0 {
        return Err(LhkError::ZeroLambda);
    }
    if order > MAX_DERIVATIVE_ORDER {
        return Err(LhkError::OrderTooHigh { order, max: MAX_DERIVATIVE_ORDER });
    }
    let sigma = dual.lambda.signum();
    let x2 = point.x * point.x;
    let u = dual.lambda.abs() * x2;
    let mut d = LaguerreDerivatives::new(params.alpha(), dual.m, order);
    d.fill(u);
    let it = Complex64::new(0.0, point.t);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..=order {
        acc += binom(order, j) * it.powu((order - j) as u32) * (sigma * x2).powi(j as i32) * d.get(j, dual.m);
    }
    Ok(acc * Complex64::from_polar(1.0, dual.lambda * point.t))
}

/// Taylor polynomial of a character at the identity, in the monomials x^k t^l
/// with k + l <= s. Odd powers of x never appear.
#[derive(Debug, Clone)]
pub struct CharacterTaylor {
    pub dual: DualPoint,
    pub s: usize,
    pub quasinorm: f64,
    /// (k, l, coefficient of x^k t^l)
    pub coeffs: Vec<(usize, usize, Complex64)>,
}

impl CharacterTaylor {
    pub fn eval(&self, x: f64, t: f64) -> Complex64 {
        self.coeffs.iter().map(|&(k, l, c)| c * x.powi(k as i32) * t.powi(l as i32)).sum()
    }

    /// sum over k + l = s + 1 of x^k |t|^l N^{k/2 + l}, the scale of the remainder.
    pub fn remainder_envelope(&self, x: f64, t: f64) -> f64 {
        let n = self.quasinorm;
        let d = self.s + 1;
        (0..=d)
            .map(|k| {
                let l = d - k;
                x.powi(k as i32) * t.abs().powi(l as i32) * n.powf(k as f64 / 2.0 + l as f64)
            })
            .sum()
    }
}

pub fn character_taylor(params: &Params, dual: DualPoint, s: usize) -> Result<CharacterTaylor> {
    if dual.lambda == 0.0 {
        return Err(LhkError::ZeroLambda);
    }
    let alpha = params.alpha();
    let lam = dual.lambda;
    let mut coeffs = Vec::new();
    for k in (0..=s).step_by(2) {
        let n = k / 2;
        // n-th derivative of the normalized Laguerre function at u = 0
        let mut dn = 0.0;
        for i in 0..=n.min(dual.m) {
            dn += binom(n, i)
                * (-0.5f64).powi((n - i) as i32)
                * if i % 2 == 0 { 1.0 } else { -1.0 }
                * level_ratio(alpha, dual.m, i);
        }
        let xpart = dn * lam.abs().powi(n as i32) / factorial(n);
        for l in 0..=(s - k) {
            let tpart = Complex64::new(0.0, lam).powu(l as u32) / factorial(l);
            coeffs.push((k, l, tpart * xpart));
        }
    }
    Ok(CharacterTaylor { dual, s, quasinorm: crate::geometry::dual_quasinorm(params, dual), coeffs })
}
