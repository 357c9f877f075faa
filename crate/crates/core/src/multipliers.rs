//! Spectral multipliers M(lambda, m), the operator T_M and the Mihlin and
//! Hormander condition checks.
//!
//! Every catalog multiplier is radial, M = f(N(lambda, m)). Since
//! N = c_m |lambda| with c_m = 4 (m + (alpha + 1)/2), lambda-derivatives are
//! f^{(k)}(N) (c_m sgn lambda)^k.

use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{LhkError, Result};
use crate::geometry::quasinorm;
use crate::point::DualPoint;
use crate::quadrature::{gauss_legendre, GridFunction, PhysicalGrid, SpectralGrid};
use crate::specfun::binom;
use crate::transform::{forward, inverse, spectral_derivative, SpectralFunction, SymbolPlan};

/// Highest order served by the finite-difference fallback.
pub const MAX_FD_ORDER: usize = 4;
/// Highest order of the closed-form derivatives.
pub const MAX_ANALYTIC_ORDER: usize = 8;

/// f(r) for the radial_f_of_N kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialFn {
    /// (1 + r)^{-1}
    Inv1p,
    /// e^{-t r}
    Exp { t: f64 },
}

/// phi for f(r) = int_0^inf e^{-r s} phi(s) ds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phi {
    /// 1 on [0, b]
    Indicator { b: f64 },
    /// s e^{-s}
    SExp,
}

#[derive(Clone)]
pub enum MultiplierKind {
    Constant(Complex64),
    /// N^{is}
    FractionalL {
        s: f64,
    },
    /// (1 + N)^{is}
    FractionalIplusL {
        s: f64,
    },
    Radial(RadialFn),
    LaplaceOfPhi(Phi),
    /// Any symbol without closed-form derivatives.
    Custom {
        label: String,
        f: Arc<dyn Fn(f64, DualPoint) -> Complex64 + Send + Sync>,
    },
}

impl fmt::Debug for MultiplierKind {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MultiplierKind::Custom { label, .. } => write!(fm, "Custom({label})"),
            MultiplierKind::Constant(c) => write!(fm, "Constant({c})"),
            MultiplierKind::FractionalL { s } => write!(fm, "FractionalL(s={s})"),
            MultiplierKind::FractionalIplusL { s } => write!(fm, "FractionalIplusL(s={s})"),
            MultiplierKind::Radial(r) => write!(fm, "Radial({r:?})"),
            MultiplierKind::LaplaceOfPhi(p) => write!(fm, "LaplaceOfPhi({p:?})"),
        }
    }
}

impl MultiplierKind {
    /// Catalog lookup. `function` names f for radial_f_of_N and phi for laplace_of_phi.
    pub fn parse(kind: &str, params: &BTreeMap<String, f64>, function: Option<&str>) -> Result<Self> {
        let get = |k: &str, default: Option<f64>| {
            params
                .get(k)
                .copied()
                .or(default)
                .ok_or_else(|| LhkError::InvalidParameter(format!("multiplier {kind} needs parameter '{k}'")))
        };
        Ok(match kind {
            "constant" => MultiplierKind::Constant(Complex64::new(get("re", Some(1.0))?, get("im", Some(0.0))?)),
            "fractional_L" => MultiplierKind::FractionalL { s: get("s", None)? },
            "fractional_IplusL" => MultiplierKind::FractionalIplusL { s: get("s", None)? },
            "radial_f_of_N" => match function.unwrap_or("inv1p") {
                "inv1p" => MultiplierKind::Radial(RadialFn::Inv1p),
                "exp" => MultiplierKind::Radial(RadialFn::Exp { t: get("t", Some(1.0))? }),
                other => return Err(LhkError::InvalidParameter(format!("unknown radial function '{other}'"))),
            },
            "laplace_of_phi" => match function.unwrap_or("indicator") {
                "indicator" => MultiplierKind::LaplaceOfPhi(Phi::Indicator { b: get("b", Some(1.0))? }),
                "sexp" => MultiplierKind::LaplaceOfPhi(Phi::SExp),
                other => return Err(LhkError::InvalidParameter(format!("unknown phi '{other}'"))),
            },
            other => return Err(LhkError::InvalidParameter(format!("unknown multiplier kind '{other}'"))),
        })
    }
}

#[derive(Debug, Clone)]
pub struct MultiplierSpec {
    pub name: String,
    pub params: Vec<(String, f64)>,
    pub kind: MultiplierKind,
    /// Use finite differences where no closed form exists.
    pub fd_fallback: bool,
}

pub fn build_multiplier(kind: MultiplierKind) -> Result<MultiplierSpec> {
    let finite = |v: f64, what: &str| {
        if v.is_finite() {
            Ok(())
        } else {
            Err(LhkError::InvalidParameter(format!("{what} must be finite")))
        }
    };
    let (name, params) = match &kind {
        MultiplierKind::Constant(c) => {
            finite(c.re, "constant")?;
            finite(c.im, "constant")?;
            ("constant".to_string(), vec![("re".into(), c.re), ("im".into(), c.im)])
        }
        MultiplierKind::FractionalL { s } => {
            finite(*s, "s")?;
            ("fractional_L".into(), vec![("s".into(), *s)])
        }
        MultiplierKind::FractionalIplusL { s } => {
            finite(*s, "s")?;
            ("fractional_IplusL".into(), vec![("s".into(), *s)])
        }
        MultiplierKind::Radial(RadialFn::Inv1p) => ("radial_f_of_N:inv1p".into(), vec![]),
        MultiplierKind::Radial(RadialFn::Exp { t }) => {
            if !(*t > 0.0) || !t.is_finite() {
                return Err(LhkError::InvalidParameter(format!("t must be > 0, got {t}")));
            }
            ("radial_f_of_N:exp".into(), vec![("t".into(), *t)])
        }
        MultiplierKind::LaplaceOfPhi(Phi::Indicator { b }) => {
            if !(*b > 0.0) || !b.is_finite() {
                return Err(LhkError::InvalidParameter(format!("b must be > 0, got {b}")));
            }
            ("laplace_of_phi:indicator".into(), vec![("b".into(), *b)])
        }
        MultiplierKind::LaplaceOfPhi(Phi::SExp) => ("laplace_of_phi:sexp".into(), vec![]),
        MultiplierKind::Custom { label, .. } => (label.clone(), vec![]),
    };
    Ok(MultiplierSpec { name, params, kind, fd_fallback: true })
}

/// (z)(z-1)...(z-k+1)
fn falling(z: Complex64, k: usize) -> Complex64 {
    (0..k).fold(Complex64::new(1.0, 0.0), |acc, j| acc * (z - j as f64))
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

/// int_0^S g(s) ds for g concentrated on e^{-kappa s}: GL16 on panels of width <= 2/kappa.
fn decaying_integral(s_max: f64, kappa: f64, g: impl Fn(f64) -> f64) -> f64 {
    let (gx, gw) = gauss_legendre(16);
    let npan = ((s_max * kappa / 2.0).ceil() as usize).clamp(1, 64);
    let h = s_max / npan as f64;
    let mut acc = 0.0;
    for p in 0..npan {
        let c = (p as f64 + 0.5) * h;
        for (x, w) in gx.iter().zip(&gw) {
            acc += 0.5 * h * w * g(c + 0.5 * h * x);
        }
    }
    acc
}

impl Phi {
    /// f^{(k)}(r) = int_0^inf (-s)^k e^{-r s} phi(s) ds by quadrature.
    pub fn laplace(&self, r: f64, k: usize) -> f64 {
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        match *self {
            Phi::Indicator { b } => {
                // beyond s = (60 + k)/r the integrand is below e^{-60} of its peak
                let s_max = if r > 0.0 { b.min((60.0 + 2.0 * k as f64) / r) } else { b };
                sign * decaying_integral(s_max, r.max(1.0 / b), |s| s.powi(k as i32) * (-r * s).exp())
            }
            Phi::SExp => {
                let kappa = 1.0 + r;
                let s_max = (80.0 + 2.0 * k as f64) / kappa;
                sign * decaying_integral(s_max, kappa, |s| s.powi(k as i32 + 1) * (-kappa * s).exp())
            }
        }
    }
}

impl MultiplierSpec {
    pub fn with_fd_fallback(mut self, on: bool) -> Self {
        self.fd_fallback = on;
        self
    }

    /// Whether closed-form lambda-derivatives of this order exist.
    pub fn has_analytic(&self, k: usize) -> bool {
        !matches!(self.kind, MultiplierKind::Custom { .. }) && k <= MAX_ANALYTIC_ORDER
    }

    /// Fails unless derivatives up to `order` are available, analytically or by fallback.
    pub fn ensure_derivatives(&self, order: usize) -> Result<()> {
        for k in 0..=order {
            if !(self.has_analytic(k) || k == 0 || (self.fd_fallback && k <= MAX_FD_ORDER)) {
                return Err(LhkError::NoDerivative(format!(
                    "{}: no lambda-derivative of order {k}{}",
                    self.name,
                    if self.fd_fallback { " within the finite-difference cap" } else { " and fallback disabled" }
                )));
            }
        }
        Ok(())
    }

    /// f^{(k)}(r) for the radial kinds.
    fn radial_derivative(&self, r: f64, k: usize) -> Complex64 {
        let i = Complex64::i();
        match &self.kind {
            MultiplierKind::Constant(c) => {
                if k == 0 {
                    *c
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            MultiplierKind::FractionalL { s } => {
                let z = i * *s;
                falling(z, k) * (z * r.ln()).exp() / r.powi(k as i32)
            }
            MultiplierKind::FractionalIplusL { s } => {
                let z = i * *s;
                falling(z, k) * (z * (1.0 + r).ln()).exp() / (1.0 + r).powi(k as i32)
            }
            MultiplierKind::Radial(RadialFn::Inv1p) => {
                let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
                Complex64::new(sign * factorial(k) / (1.0 + r).powi(k as i32 + 1), 0.0)
            }
            MultiplierKind::Radial(RadialFn::Exp { t }) => Complex64::new((-t).powi(k as i32) * (-t * r).exp(), 0.0),
            MultiplierKind::LaplaceOfPhi(phi) => Complex64::new(phi.laplace(r, k), 0.0),
            MultiplierKind::Custom { .. } => unreachable!("custom multipliers are not radial"),
        }
    }

    pub fn eval(&self, alpha: f64, d: DualPoint) -> Complex64 {
        match &self.kind {
            MultiplierKind::Custom { f, .. } => f(alpha, d),
            _ => self.radial_derivative(quasinorm(alpha, d.lambda, d.m), 0),
        }
    }

    /// d^k/dlambda^k M at d.
    pub fn dlambda(&self, alpha: f64, d: DualPoint, k: usize) -> Result<Complex64> {
        if k == 0 {
            return Ok(self.eval(alpha, d));
        }
        if self.has_analytic(k) {
            let cm = 4.0 * (d.m as f64 + 0.5 * (alpha + 1.0));
            let chain = (cm * d.lambda.signum()).powi(k as i32);
            return Ok(self.radial_derivative(cm * d.lambda.abs(), k) * chain);
        }
        if self.fd_fallback && k <= MAX_FD_ORDER {
            return Ok(self.dlambda_fd(alpha, d, k));
        }
        self.ensure_derivatives(k).map(|_| Complex64::new(0.0, 0.0))
    }

    /// Five-point central differences with h = 1e-3 |lambda|.
    pub fn dlambda_fd(&self, alpha: f64, d: DualPoint, k: usize) -> Complex64 {
        let h = 1e-3 * d.lambda.abs();
        let f = |j: f64| self.eval(alpha, DualPoint { lambda: d.lambda + j * h, m: d.m });
        let (m2, m1, z, p1, p2) = (f(-2.0), f(-1.0), f(0.0), f(1.0), f(2.0));
        match k {
            0 => z,
            1 => (m2 - p2 + (p1 - m1) * 8.0) / (12.0 * h),
            2 => (-m2 - p2 + (p1 + m1) * 16.0 - z * 30.0) / (12.0 * h * h),
            3 => (p2 - m2 - (p1 - m1) * 2.0) / (2.0 * h.powi(3)),
            4 => (p2 + m2 - (p1 + m1) * 4.0 + z * 6.0) / h.powi(4),
            _ => Complex64::new(f64::NAN, f64::NAN),
        }
    }

    /// The symbol sampled on a spectral grid.
    pub fn symbol(&self, spec: &Arc<SpectralGrid>) -> SpectralFunction {
        let alpha = spec.alpha;
        SpectralFunction::from_fn(spec.clone(), |d| self.eval(alpha, d))
    }

    /// d^k/dlambda^k M on a spectral grid.
    pub fn symbol_derivative(&self, spec: &Arc<SpectralGrid>, k: usize) -> Result<SpectralFunction> {
        self.ensure_derivatives(k)?;
        let alpha = spec.alpha;
        Ok(SpectralFunction::from_fn(spec.clone(), |d| self.dlambda(alpha, d, k).unwrap()))
    }
}

/// T_M f = (M f^)^v evaluated on `out`.
///
/// On the grid of `f` itself this goes through [`SymbolPlan`], which keeps the levels
/// beyond the spectral cut. On any other grid it is the truncated inverse of M f^.
pub fn apply_multiplier(
    m: &MultiplierSpec,
    f: &GridFunction,
    spec: &Arc<SpectralGrid>,
    out: &Arc<PhysicalGrid>,
) -> Result<GridFunction> {
    if f.grid().alpha != spec.alpha || out.alpha != spec.alpha {
        return Err(LhkError::GridMismatch(format!(
            "alpha differs between input grid ({}), spectral grid ({}) and output grid ({})",
            f.grid().alpha,
            spec.alpha,
            out.alpha
        )));
    }
    if out.as_ref() == f.grid() {
        let alpha = spec.alpha;
        return SymbolPlan::new(f, spec)?.apply(|d| m.eval(alpha, d));
    }
    let fhat = forward(f, spec)?;
    inverse(&multiply(m, &fhat), out)
}

/// M fhat on the grid of fhat.
pub fn multiply(m: &MultiplierSpec, fhat: &SpectralFunction) -> SpectralFunction {
    let alpha = fhat.grid().alpha;
    fhat.map(|d, v| v * m.eval(alpha, d))
}

/// d^k/dlambda^k (M fhat) by the Leibniz rule.
pub fn product_derivative(
    m: &MultiplierSpec,
    f: &GridFunction,
    spec: &Arc<SpectralGrid>,
    k: usize,
) -> Result<SpectralFunction> {
    m.ensure_derivatives(k)?;
    let mut acc = vec![Complex64::new(0.0, 0.0); spec.len()];
    for j in 0..=k {
        let dm = m.symbol_derivative(spec, k - j)?;
        let df = spectral_derivative(f, spec, j)?;
        let c = binom(k, j);
        for ((a, x), y) in acc.iter_mut().zip(dm.values()).zip(df.values()) {
            *a += x * y * c;
        }
    }
    SpectralFunction::new(spec.clone(), acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    Mihlin,
    Hormander,
}

impl Condition {
    pub fn as_str(&self) -> &'static str {
        match self {
            Condition::Mihlin => "mihlin",
            Condition::Hormander => "hormander",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShellRow {
    pub r: f64,
    pub integral: f64,
    pub normalized: f64,
    /// level terms did not decay, no tail added
    pub divergent: bool,
    /// the shell reaches beyond lambda_max at m = 0
    pub clipped: bool,
    /// no grid level meets the shell
    pub empty: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub condition: Condition,
    /// order k of the lambda-derivative
    pub order: usize,
    /// graded degree d = 2k
    pub degree: usize,
    /// sup of the normalized quantity
    pub defect: f64,
    /// Mihlin: sup over lambda of N^{k} |d^k M| at each level m
    pub per_m: Vec<f64>,
    /// Hormander: rows sorted by R
    pub shells: Vec<ShellRow>,
    /// exponent of R used for normalization
    pub exponent: f64,
    /// least-squares slope of log(shell integral) against log R
    pub slope: Option<f64>,
}

impl ConditionReport {
    /// slope minus the normalizing exponent; nonzero means the normalization does not match the growth
    pub fn exponent_gap(&self) -> Option<f64> {
        self.slope.map(|s| s - self.exponent)
    }
}

/// sup over the grid of N^{d/2} |d^k_lambda M| with d = 2k, and the per-level sups.
pub fn mihlin_defect(m: &MultiplierSpec, k: usize, spec: &Arc<SpectralGrid>) -> Result<ConditionReport> {
    m.ensure_derivatives(k)?;
    let alpha = spec.alpha;
    let levels = spec.levels();
    let per_m: Vec<f64> = (0..levels)
        .into_par_iter()
        .map(|lev| {
            let mut sup: f64 = 0.0;
            for s in 0..spec.n_signed() {
                let d = spec.dual(s * levels + lev);
                let v = m.dlambda(alpha, d, k).unwrap().norm() * quasinorm(alpha, d.lambda, d.m).powi(k as i32);
                sup = if v.is_nan() { f64::NAN } else { sup.max(v) };
            }
            sup
        })
        .collect();
    let defect = per_m.iter().copied().fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) });
    Ok(ConditionReport {
        condition: Condition::Mihlin,
        order: k,
        degree: 2 * k,
        defect,
        per_m,
        shells: vec![],
        exponent: 0.0,
        slope: None,
    })
}

/// Least-squares slope of ln y against ln x.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Shell integrals int_{R/2 < N <= R} |d^k M|^2 dgamma divided by R^exponent, with
/// exponent Q - 2k unless overridden, and the fitted growth slope.
pub fn hormander_defect(
    m: &MultiplierSpec,
    k: usize,
    radii: &[f64],
    spec: &Arc<SpectralGrid>,
    exponent: Option<f64>,
) -> Result<ConditionReport> {
    m.ensure_derivatives(k)?;
    if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(LhkError::InvalidParameter("shell radii must be positive".into()));
    }
    let alpha = spec.alpha;
    let q_dim = 2.0 * alpha + 4.0;
    let exponent = exponent.unwrap_or(q_dim - 2.0 * k as f64);
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| a.total_cmp(b));
    radii.dedup();
    let mu0 = 2.0 * (alpha + 1.0);
    let mu_top = 4.0 * (spec.m_max as f64 + 0.5 * (alpha + 1.0));
    let shells: Vec<ShellRow> = radii
        .par_iter()
        .map(|&r| {
            let sh = spec.shell_integral(0.5 * r, r, |d| m.dlambda(alpha, d, k).unwrap().norm_sqr());
            let empty = r / mu_top >= spec.lambda_max || r / mu0 <= spec.lambda_min;
            ShellRow {
                r,
                integral: sh.value(),
                normalized: sh.value() / r.powf(exponent),
                divergent: sh.divergent,
                clipped: r / mu0 > spec.lambda_max,
                empty,
            }
        })
        .collect();
    let fit: Vec<(f64, f64)> =
        shells.iter().filter(|s| !s.divergent && !s.clipped && !s.empty).map(|s| (s.r, s.integral)).collect();
    let defect = shells.iter().map(|s| s.normalized).fold(0.0, f64::max);
    Ok(ConditionReport {
        condition: Condition::Hormander,
        order: k,
        degree: 2 * k,
        defect,
        per_m: vec![],
        shells,
        exponent,
        slope: loglog_slope(&fit),
    })
}
