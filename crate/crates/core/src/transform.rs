//! Forward and inverse Fourier-Laguerre transform.
//!
//! On a tensor physical grid the forward transform separates: a t-sum against
//! e^{-i lambda t} for every lambda, then the Laguerre recurrence over all levels
//! at every x node. The inverse separates the same way in the other order.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{LhkError, Result};
use crate::geometry::quasinorm;
use crate::point::{DualPoint, HypergroupPoint};
use crate::profile::Profile;
use crate::quadrature::{GridFunction, NeumaierC, PhysicalGrid, SpectralGrid};
use crate::specfun::{binom, laguerre_at_zero, laguerre_fn_table, LaguerreDerivatives, MAX_DERIVATIVE_ORDER};

/// Values on a spectral grid, in node order.
#[derive(Debug, Clone)]
pub struct SpectralFunction {
    grid: Arc<SpectralGrid>,
    values: Vec<Complex64>,
}

impl SpectralFunction {
    pub fn new(grid: Arc<SpectralGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LhkError::GridMismatch(format!(
                "{} values for a spectral grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples a function of the dual point.
    pub fn from_fn(grid: Arc<SpectralGrid>, f: impl Fn(DualPoint) -> Complex64 + Sync) -> Self {
        let values = (0..grid.len()).into_par_iter().map(|i| f(grid.dual(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Value at signed lambda index s and level m.
    pub fn at(&self, s: usize, m: usize) -> Complex64 {
        self.values[s * self.grid.levels() + m]
    }

    pub fn map(&self, f: impl Fn(DualPoint, Complex64) -> Complex64 + Sync) -> Self {
        let values = self.values.par_iter().enumerate().map(|(i, v)| f(self.grid.dual(i), *v)).collect();
        Self { grid: self.grid.clone(), values }
    }

    pub fn check_same_grid(&self, other: &SpectralFunction) -> Result<()> {
        if self.grid.fingerprint() != other.grid.fingerprint() {
            return Err(LhkError::GridMismatch("functions live on different spectral grids".into()));
        }
        Ok(())
    }

    /// (int |F|^p dgamma)^{1/p}, tail included.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.max_abs();
        }
        let v: Vec<f64> = self.values.iter().map(|z| z.norm().powf(p)).collect();
        self.grid.integrate(&v).max(0.0).powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        self.lp_norm(2.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn integrate(&self, g: impl Fn(DualPoint, Complex64) -> f64) -> f64 {
        let v: Vec<f64> = self.values.iter().enumerate().map(|(i, z)| g(self.grid.dual(i), *z)).collect();
        self.grid.integrate(&v)
    }
}

fn check_alpha(phys: &PhysicalGrid, spec: &SpectralGrid) -> Result<()> {
    if phys.alpha != spec.alpha {
        return Err(LhkError::GridMismatch(format!(
            "physical grid has alpha {} but spectral grid has alpha {}",
            phys.alpha, spec.alpha
        )));
    }
    Ok(())
}

/// t-sums sum_t w_t (-i t)^j e^{-i lambda t} f(x, t) for j = 0..=order, one vector over x per j.
fn t_sums(phys: &PhysicalGrid, f: &[Complex64], lambda: f64, order: usize) -> Vec<Vec<Complex64>> {
    let nt = phys.nt();
    let mut kern: Vec<Vec<Complex64>> = vec![Vec::with_capacity(nt); order + 1];
    for (&t, &w) in phys.ts.iter().zip(&phys.wt) {
        let e = Complex64::from_polar(w, -lambda * t);
        let mit = Complex64::new(0.0, -t);
        let mut acc = e;
        for k in kern.iter_mut() {
            k.push(acc);
            acc *= mit;
        }
    }
    kern.iter()
        .map(|k| {
            (0..phys.nx())
                .map(|ix| {
                    let row = &f[ix * nt..(ix + 1) * nt];
                    row.iter().zip(k).map(|(a, b)| a * b).sum()
                })
                .collect()
        })
        .collect()
}

/// Transform at one lambda for all levels 0..=m_max.
fn forward_one_lambda(phys: &PhysicalGrid, f: &[Complex64], lambda: f64, m_max: usize) -> Vec<Complex64> {
    let alpha = phys.alpha;
    let tsum = t_sums(phys, f, lambda, 0).pop().unwrap();
    let mut q = vec![0.0; m_max + 1];
    let mut acc = vec![NeumaierC::default(); m_max + 1];
    let l = lambda.abs();
    for (ix, (&x, &wx)) in phys.xs.iter().zip(&phys.wx).enumerate() {
        let g = tsum[ix] * wx;
        if g == Complex64::new(0.0, 0.0) {
            continue;
        }
        laguerre_fn_table(alpha, l * x * x, &mut q);
        for (a, qm) in acc.iter_mut().zip(&q) {
            a.add(g * *qm);
        }
    }
    acc.iter().map(|a| a.value()).collect()
}

/// Transform at arbitrary lambdas (one row of m_max + 1 levels per lambda).
pub fn forward_lambdas(f: &GridFunction, lambdas: &[f64], m_max: usize) -> Result<Vec<Vec<Complex64>>> {
    if lambdas.contains(&0.0) {
        return Err(LhkError::ZeroLambda);
    }
    let phys = f.grid();
    Ok(lambdas.par_iter().map(|&l| forward_one_lambda(phys, f.values(), l, m_max)).collect())
}

/// Transform at arbitrary dual points.
pub fn forward_at(f: &GridFunction, duals: &[DualPoint]) -> Result<Vec<Complex64>> {
    let m_max = duals.iter().map(|d| d.m).max().unwrap_or(0);
    let lams: Vec<f64> = duals.iter().map(|d| d.lambda).collect();
    let rows = forward_lambdas(f, &lams, m_max)?;
    Ok(rows.iter().zip(duals).map(|(r, d)| r[d.m]).collect())
}

/// f^(lambda, m) = int phi_(-lambda, m) f dm_alpha on every node of the spectral grid.
pub fn forward(f: &GridFunction, spec: &Arc<SpectralGrid>) -> Result<SpectralFunction> {
    check_alpha(f.grid(), spec)?;
    let rows = forward_lambdas(f, &spec.signed_lambdas(), spec.m_max)?;
    SpectralFunction::new(spec.clone(), rows.into_iter().flatten().collect())
}

/// Per signed lambda: G(x) = w_lambda sum_m w_m L_m(|lambda| x^2) F(lambda, m) at each x.
fn level_sums_per_lambda(fhat: &SpectralFunction, xs: &[f64]) -> Vec<Vec<Complex64>> {
    let spec = fhat.grid();
    let levels = spec.levels();
    (0..spec.n_signed())
        .into_par_iter()
        .map(|s| {
            let (lambda, ia) = spec.signed_lambda(s);
            let wl = spec.wlam[ia];
            let row = &fhat.values()[s * levels..(s + 1) * levels];
            let weighted: Vec<Complex64> = row.iter().zip(&spec.level_w).map(|(v, w)| v * (w * wl)).collect();
            let mut q = vec![0.0; levels];
            xs.iter()
                .map(|&x| {
                    laguerre_fn_table(spec.alpha, lambda.abs() * x * x, &mut q);
                    weighted.iter().zip(&q).map(|(v, q)| v * *q).sum()
                })
                .collect()
        })
        .collect()
}

/// g^v(x,t) = int phi_(lambda, m)(x,t) g dgamma_alpha on every node of `target`.
pub fn inverse(fhat: &SpectralFunction, target: &Arc<PhysicalGrid>) -> Result<GridFunction> {
    check_alpha(target, fhat.grid())?;
    let g = level_sums_per_lambda(fhat, &target.xs);
    synthesize_t(&g, &fhat.grid().signed_lambdas(), target)
}

/// sum_k (c_k + i s_k)(gr_k + i gi_k) in one pass, with two partial sums per part.
fn rotate_sum(c: &[f64], s: &[f64], gr: &[f64], gi: &[f64]) -> Complex64 {
    let (mut re, mut im) = ([0.0; 2], [0.0; 2]);
    let n = c.len() / 2 * 2;
    for k in (0..n).step_by(2) {
        for j in 0..2 {
            re[j] += c[k + j] * gr[k + j] - s[k + j] * gi[k + j];
            im[j] += c[k + j] * gi[k + j] + s[k + j] * gr[k + j];
        }
    }
    for k in n..c.len() {
        re[0] += c[k] * gr[k] - s[k] * gi[k];
        im[0] += c[k] * gi[k] + s[k] * gr[k];
    }
    Complex64::new(re[0] + re[1], im[0] + im[1])
}

/// sum_s e^{i lambda_s t} g[s][ix] on every node of `target`.
fn synthesize_t(g: &[Vec<Complex64>], lams: &[f64], target: &Arc<PhysicalGrid>) -> Result<GridFunction> {
    // cos and sin rows per t, and g transposed to real and imaginary rows per x
    let phase: Vec<(Vec<f64>, Vec<f64>)> =
        target.ts.iter().map(|&t| lams.iter().map(|&l| (l * t).sin_cos()).map(|(s, c)| (c, s)).unzip()).collect();
    let values: Vec<Complex64> = (0..target.nx())
        .into_par_iter()
        .flat_map_iter(|ix| {
            let (gr, gi): (Vec<f64>, Vec<f64>) = g.iter().map(|row| (row[ix].re, row[ix].im)).unzip();
            phase.iter().map(|(c, s)| rotate_sum(c, s, &gr, &gi)).collect::<Vec<_>>()
        })
        .collect();
    GridFunction::new(target.clone(), values)
}

/// Multiplier-independent data for applying symbols to one function: the partial
/// Fourier transform f~(x, lambda) = int f(x,t) e^{-i lambda t} dt at every signed
/// lambda node, and the levels f^(lambda, m) for m below a per-lambda level count.
///
/// On the slice e^{i lambda t} g(x) the operator -L acts as H_lambda = -D_alpha + lambda^2 x^2,
/// with eigenfunctions L_m(|lambda| x^2) and eigenvalues N(lambda, m). At small |lambda|
/// the levels m <= m_max only reach N = 4 |lambda| (m_max + (alpha+1)/2), far below
/// the content of a localized f, so each slice gets clamp(n_cut / (4 |lambda|), m_max + 1, max_levels)
/// levels. Below lambda_0 = n_cut / (4 max_levels) that would exceed max_levels; there
/// H_lambda is replaced by H_{lambda_0}, which differs by the potential
/// (lambda_0^2 - lambda^2) x^2, and S(H_{lambda_0}) is applied as one matrix on x.
pub struct SymbolPlan {
    phys: Arc<PhysicalGrid>,
    spec: Arc<SpectralGrid>,
    values: Vec<Complex64>,
    lambda0: f64,
    /// L_m(0) for m < max_levels
    l0: Vec<f64>,
    /// f~(x, lambda) per signed lambda, per x
    ft: Vec<Vec<Complex64>>,
    /// f^(lambda, m) per signed lambda; empty below lambda_0
    fm: Vec<Vec<Complex64>>,
    /// x rows where f is not identically zero
    support: Vec<usize>,
    /// L_m(lambda_0 x^2) per x, m < max_levels
    basis0: Vec<Vec<f64>>,
    inv: Vec<f64>,
}

/// Level count per lambda slice in `apply_symbol`, as a spectral cut in N.
pub const DEFAULT_N_CUT_FACTOR: f64 = 128.0;
pub const DEFAULT_MAX_LEVELS: usize = 32768;

/// Dot product with four partial sums.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// e^{-u/2} L_m(u) / L_m(0) for m = 0, 1, ..., fed to `visit` without a table.
/// `inv[m]` holds 1 / (m + 1 + alpha).
#[inline]
fn laguerre_fn_visit(alpha: f64, inv: &[f64], u: f64, levels: usize, mut visit: impl FnMut(usize, f64)) {
    let mut prev = (-0.5 * u).exp();
    if levels == 0 {
        return;
    }
    visit(0, prev);
    if levels == 1 {
        return;
    }
    let mut cur = prev * (1.0 + alpha - u) * inv[0];
    visit(1, cur);
    for m in 1..levels - 1 {
        let mf = m as f64;
        let next = ((2.0 * mf + 1.0 + alpha - u) * cur - mf * prev) * inv[m];
        prev = cur;
        cur = next;
        visit(m + 1, cur);
    }
}

/// Four independent recurrences of [`laguerre_fn_visit`] run side by side.
#[inline]
fn laguerre_fn_visit4(alpha: f64, inv: &[f64], u: [f64; 4], levels: usize, mut visit: impl FnMut(usize, [f64; 4])) {
    if levels == 0 {
        return;
    }
    let mut prev = u.map(|v| (-0.5 * v).exp());
    visit(0, prev);
    if levels == 1 {
        return;
    }
    let mut cur = [0.0; 4];
    for k in 0..4 {
        cur[k] = prev[k] * (1.0 + alpha - u[k]) * inv[0];
    }
    visit(1, cur);
    for m in 1..levels - 1 {
        let mf = m as f64;
        let a = 2.0 * mf + 1.0 + alpha;
        let mut next = [0.0; 4];
        for k in 0..4 {
            next[k] = ((a - u[k]) * cur[k] - mf * prev[k]) * inv[m];
        }
        prev = cur;
        cur = next;
        visit(m + 1, cur);
    }
}

impl SymbolPlan {
    /// Plan with the default cut n_cut = 128 lambda_max and 32768 levels at most.
    /// Both scale with the grid, so dilated inputs on dilated grids give dilated outputs.
    pub fn new(f: &GridFunction, spec: &Arc<SpectralGrid>) -> Result<Self> {
        let n_cut = DEFAULT_N_CUT_FACTOR * spec.lambda_max;
        Self::with_cut(f, spec, n_cut, DEFAULT_MAX_LEVELS)
    }

    pub fn with_cut(f: &GridFunction, spec: &Arc<SpectralGrid>, n_cut: f64, max_levels: usize) -> Result<Self> {
        check_alpha(f.grid(), spec)?;
        if !(n_cut > 0.0) || !n_cut.is_finite() || max_levels < spec.levels() {
            return Err(LhkError::InvalidParameter(format!(
                "need n_cut > 0 and max_levels >= {} (got {n_cut}, {max_levels})",
                spec.levels()
            )));
        }
        let phys = f.grid_arc().clone();
        let (nx, nt) = (phys.nx(), phys.nt());
        let alpha = spec.alpha;
        let lambda0 = n_cut / (4.0 * max_levels as f64);
        let inv: Vec<f64> = (0..max_levels).map(|m| 1.0 / (m as f64 + 1.0 + alpha)).collect();
        // nonzero samples per x row, as (t index, weighted value)
        let rows: Vec<Vec<(usize, Complex64)>> = (0..nx)
            .map(|ix| {
                (0..nt)
                    .filter_map(|it| {
                        let v = f.values()[ix * nt + it];
                        (v != Complex64::new(0.0, 0.0)).then_some((it, v * phys.wt[it]))
                    })
                    .collect()
            })
            .collect();
        let support: Vec<usize> = (0..nx).filter(|&ix| !rows[ix].is_empty()).collect();
        let (ft, fm): (Vec<_>, Vec<_>) = (0..spec.n_signed())
            .into_par_iter()
            .map(|s| {
                let (lambda, _) = spec.signed_lambda(s);
                let l = lambda.abs();
                let phase: Vec<Complex64> = phys.ts.iter().map(|t| Complex64::from_polar(1.0, -lambda * t)).collect();
                let ft: Vec<Complex64> = rows
                    .iter()
                    .map(|row| {
                        let mut acc = NeumaierC::default();
                        for (it, v) in row {
                            acc.add(v * phase[*it]);
                        }
                        acc.value()
                    })
                    .collect();
                if l < lambda0 {
                    return (ft, Vec::new());
                }
                let levels = ((n_cut / (4.0 * l)).ceil() as usize).clamp(spec.levels(), max_levels);
                let mut acc = vec![Complex64::new(0.0, 0.0); levels];
                for &ix in &support {
                    let g = ft[ix] * phys.wx[ix];
                    let x = phys.xs[ix];
                    laguerre_fn_visit(alpha, &inv, l * x * x, levels, |m, q| acc[m] += g * q);
                }
                (ft, acc)
            })
            .unzip();
        let any_small = fm.iter().any(|v: &Vec<Complex64>| v.is_empty());
        let basis0 = if any_small {
            phys.xs
                .par_iter()
                .map(|&x| {
                    let mut q = vec![0.0; max_levels];
                    laguerre_fn_table(alpha, lambda0 * x * x, &mut q);
                    q
                })
                .collect()
        } else {
            Vec::new()
        };
        let l0 = (0..max_levels).map(|m| laguerre_at_zero(alpha, m)).collect();
        Ok(Self { phys, spec: spec.clone(), values: f.values().to_vec(), lambda0, l0, inv, ft, fm, support, basis0 })
    }

    /// Slices with |lambda| below this use the operator at lambda_0.
    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// Largest level count used by any lambda slice.
    pub fn max_levels(&self) -> usize {
        self.l0.len()
    }

    fn levels_of(&self, s: usize) -> usize {
        if self.fm[s].is_empty() {
            self.l0.len()
        } else {
            self.fm[s].len()
        }
    }

    /// Lambda at which the symbol of slice s is evaluated.
    fn symbol_lambda(&self, s: usize) -> f64 {
        let lambda = self.spec.signed_lambda(s).0;
        if self.fm[s].is_empty() {
            self.lambda0.copysign(lambda)
        } else {
            lambda
        }
    }

    /// S(H_{lambda_0}) - S_ref as a matrix from support rows to all rows, with the
    /// Plancherel factor 2 pi lambda_0^{alpha+1} and the x weights folded in.
    fn small_lambda_matrix(
        &self,
        lambda: f64,
        symbol: &(impl Fn(DualPoint) -> Complex64 + Sync),
    ) -> Vec<Vec<Complex64>> {
        let alpha = self.spec.alpha;
        let levels = self.l0.len();
        let sref = symbol(DualPoint { lambda, m: levels - 1 });
        let c: Vec<Complex64> = (0..levels)
            .map(|m| {
                (symbol(DualPoint { lambda, m }) - sref) * (self.l0[m] * 2.0 * PI * self.lambda0.powf(alpha + 1.0))
            })
            .collect();
        let last = c.iter().rposition(|v| *v != Complex64::new(0.0, 0.0)).map_or(0, |i| i + 1);
        // real and imaginary columns, so that each entry is two real dot products
        let cols: Vec<(Vec<f64>, Vec<f64>)> = self
            .support
            .iter()
            .map(|&j| {
                let w = self.phys.wx[j];
                let b = &self.basis0[j];
                (0..last).map(|m| (c[m].re * b[m] * w, c[m].im * b[m] * w)).unzip()
            })
            .collect();
        self.basis0
            .par_iter()
            .map(|b| {
                let b = &b[..last];
                cols.iter().map(|(re, im)| Complex64::new(dot(b, re), dot(b, im))).collect()
            })
            .collect()
    }

    /// The operator with symbol S(lambda, m), evaluated on the grid of the planned function.
    ///
    /// For each lambda the value S_ref = S(lambda, M_lambda - 1) at the last planned level
    /// is applied to the whole lambda-slice through the partial Fourier transform in t,
    /// 2 pi sum_m L_m(0) |lambda|^{alpha+1} f^(lambda, m) L_m(|lambda| x^2) = f~(x, lambda),
    /// and only S - S_ref goes through the truncated sum over m. The levels beyond the
    /// cut are thereby taken with the symbol frozen instead of being dropped. The mean
    /// S_edge of S_ref at the two outermost lambda nodes is applied exactly, as S_edge f,
    /// so that only S_ref - S_edge is cut off at lambda_max. A constant symbol therefore
    /// reproduces f up to rounding.
    pub fn apply(&self, symbol: impl Fn(DualPoint) -> Complex64 + Sync) -> Result<GridFunction> {
        let spec = &self.spec;
        let phys = &self.phys;
        let alpha = spec.alpha;
        let zero = Complex64::new(0.0, 0.0);
        let top = |s: usize| DualPoint { lambda: self.symbol_lambda(s), m: self.levels_of(s) - 1 };
        let sedge = (symbol(top(0)) + symbol(top(spec.n_signed() - 1))) * 0.5;
        let small: Vec<usize> = (0..spec.n_signed()).filter(|&s| self.fm[s].is_empty()).collect();
        let (kneg, kpos) = if small.is_empty() {
            (Vec::new(), Vec::new())
        } else {
            let same = (0..self.l0.len()).all(|m| {
                symbol(DualPoint { lambda: self.lambda0, m }) == symbol(DualPoint { lambda: -self.lambda0, m })
            });
            let kpos = self.small_lambda_matrix(self.lambda0, &symbol);
            let kneg = if same { kpos.clone() } else { self.small_lambda_matrix(-self.lambda0, &symbol) };
            (kneg, kpos)
        };
        let g: Vec<Vec<Complex64>> = (0..spec.n_signed())
            .into_par_iter()
            .map(|s| {
                let (lambda, ia) = spec.signed_lambda(s);
                let l = lambda.abs();
                let wl = spec.wlam[ia];
                let w_plain = wl / l.powf(alpha + 1.0) / (2.0 * PI);
                let sref = symbol(top(s));
                let sfree = sref - sedge;
                let ft = &self.ft[s];
                if self.fm[s].is_empty() {
                    let k = if lambda < 0.0 { &kneg } else { &kpos };
                    return (0..phys.nx())
                        .map(|ix| {
                            let mut acc = NeumaierC::default();
                            for (kv, &j) in k[ix].iter().zip(&self.support) {
                                acc.add(kv * ft[j]);
                            }
                            (acc.value() + sfree * ft[ix]) * w_plain
                        })
                        .collect();
                }
                let coef: Vec<Complex64> = self.fm[s]
                    .iter()
                    .enumerate()
                    .map(|(m, v)| {
                        let d = symbol(DualPoint { lambda, m }) - sref;
                        if d == zero {
                            zero
                        } else {
                            d * v * (self.l0[m] * wl)
                        }
                    })
                    .collect();
                let last = coef.iter().rposition(|c| *c != zero).map_or(0, |i| i + 1);
                let mut row: Vec<Complex64> = (0..phys.nx()).map(|ix| sfree * ft[ix] * w_plain).collect();
                if last == 0 {
                    return row;
                }
                for (xs, out) in phys.xs.chunks(4).zip(row.chunks_mut(4)) {
                    let mut u = [0.0; 4];
                    for (k, x) in xs.iter().enumerate() {
                        u[k] = l * x * x;
                    }
                    let mut acc = [zero; 4];
                    laguerre_fn_visit4(alpha, &self.inv, u, last, |m, q| {
                        for k in 0..4 {
                            acc[k] += coef[m] * q[k];
                        }
                    });
                    for (o, a) in out.iter_mut().zip(acc) {
                        *o += a;
                    }
                }
                row
            })
            .collect();
        let mut out = synthesize_t(&g, &spec.signed_lambdas(), phys)?;
        out.values_mut().iter_mut().zip(&self.values).for_each(|(o, v)| *o += sedge * v);
        Ok(out)
    }
}

/// The operator with symbol S(lambda, m) on the grid of `f`; see [`SymbolPlan::apply`].
pub fn apply_symbol(
    f: &GridFunction,
    spec: &Arc<SpectralGrid>,
    symbol: impl Fn(DualPoint) -> Complex64 + Sync,
) -> Result<GridFunction> {
    SymbolPlan::new(f, spec)?.apply(symbol)
}

/// Inverse transform at arbitrary points.
pub fn inverse_at(fhat: &SpectralFunction, points: &[HypergroupPoint]) -> Vec<Complex64> {
    let spec = fhat.grid();
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let g = level_sums_per_lambda(fhat, &xs);
    let lams = spec.signed_lambdas();
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| lams.iter().enumerate().map(|(s, l)| Complex64::from_polar(1.0, l * p.t) * g[s][i]).sum())
        .collect()
}

/// D^I_lambda f^ by differentiating the kernel phi_(-lambda, m) under the integral.
pub fn spectral_derivative(f: &GridFunction, spec: &Arc<SpectralGrid>, order: usize) -> Result<SpectralFunction> {
    check_alpha(f.grid(), spec)?;
    if order > MAX_DERIVATIVE_ORDER {
        return Err(LhkError::OrderTooHigh { order, max: MAX_DERIVATIVE_ORDER });
    }
    if order == 0 {
        return forward(f, spec);
    }
    let phys = f.grid();
    let m_max = spec.m_max;
    let rows: Vec<Vec<Complex64>> = spec
        .signed_lambdas()
        .par_iter()
        .map(|&lambda| {
            let sigma = lambda.signum();
            let tsum = t_sums(phys, f.values(), lambda, order);
            let mut d = LaguerreDerivatives::new(phys.alpha, m_max, order);
            let mut acc = vec![NeumaierC::default(); m_max + 1];
            for (ix, (&x, &wx)) in phys.xs.iter().zip(&phys.wx).enumerate() {
                let x2 = x * x;
                d.fill(lambda.abs() * x2);
                for j in 0..=order {
                    let c = tsum[order - j][ix] * (wx * binom(order, j) * (sigma * x2).powi(j as i32));
                    if c == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for (a, q) in acc.iter_mut().zip(d.row(j)) {
                        a.add(c * *q);
                    }
                }
            }
            acc.iter().map(|a| a.value()).collect()
        })
        .collect();
    SpectralFunction::new(spec.clone(), rows.into_iter().flatten().collect())
}

/// Multiplies by -N(lambda, m), the symbol of the Laguerre operator.
pub fn apply_laguerre_spectral(fhat: &SpectralFunction) -> SpectralFunction {
    let alpha = fhat.grid().alpha;
    fhat.map(|d, v| v * -quasinorm(alpha, d.lambda, d.m))
}

/// A function and its transform on a pair of grids.
#[derive(Debug, Clone)]
pub struct TransformPair {
    pub f: GridFunction,
    pub fhat: SpectralFunction,
}

impl TransformPair {
    pub fn compute(f: GridFunction, spec: &Arc<SpectralGrid>) -> Result<Self> {
        let fhat = forward(&f, spec)?;
        Ok(Self { f, fhat })
    }
}

/// |‖f‖₂ - ‖f^‖₂| / ‖f‖₂, or 0 for the zero function.
pub fn plancherel_defect(pair: &TransformPair) -> f64 {
    let a = pair.f.lp_norm(2.0);
    let b = pair.fhat.l2_norm();
    if a == 0.0 {
        return b;
    }
    (a - b).abs() / a
}

/// ‖f‖₁ - ‖f^‖_inf.
pub fn riemann_lebesgue_margin(pair: &TransformPair) -> f64 {
    pair.f.lp_norm(1.0) - pair.fhat.max_abs()
}

/// ‖(L f)^ + N f^‖₂ / ‖N f^‖₂ with L f taken from the profile's closed form.
pub fn eigenrelation_defect(profile: &dyn Profile, phys: &Arc<PhysicalGrid>, spec: &Arc<SpectralGrid>) -> Result<f64> {
    let alpha = phys.alpha;
    let probe = phys.node(0);
    if profile.laguerre(alpha, probe.x, probe.t).is_none() {
        return Err(LhkError::InvalidParameter(format!(
            "profile {} has no closed-form Laguerre operator",
            profile.name()
        )));
    }
    let lf_values = (0..phys.len())
        .into_par_iter()
        .map(|i| {
            let p = phys.node(i);
            profile.laguerre(alpha, p.x, p.t).unwrap_or_default()
        })
        .collect();
    let lf = GridFunction::new(phys.clone(), lf_values)?;
    let f = GridFunction::sample(phys.clone(), profile);
    let lf_hat = forward(&lf, spec)?;
    let nf_hat = apply_laguerre_spectral(&forward(&f, spec)?);
    let denom = nf_hat.l2_norm();
    let diff =
        SpectralFunction::new(spec.clone(), lf_hat.values().iter().zip(nf_hat.values()).map(|(a, b)| a - b).collect())?;
    if denom == 0.0 {
        return Ok(diff.l2_norm());
    }
    Ok(diff.l2_norm() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{BumpPoly, Gaussian, Zero};
    use std::f64::consts::PI;

    fn gaussian_hat(alpha: f64, lam: f64, m: usize) -> f64 {
        let l = lam.abs();
        (-l * l / 4.0).exp() * (1.0 - l / 2.0).powi(m as i32)
            / (2.0 * PI.sqrt() * (1.0 + l / 2.0).powf(m as f64 + alpha + 1.0))
    }

    fn grids(alpha: f64) -> (Arc<PhysicalGrid>, Arc<SpectralGrid>) {
        (
            Arc::new(PhysicalGrid::build(alpha, 6.0, 6.0, 200, 200).unwrap()),
            Arc::new(SpectralGrid::build(alpha, 1e-6, 12.0, 400, 128).unwrap()),
        )
    }

    #[test]
    fn gaussian_matches_closed_form() {
        for &alpha in &[0.0, 1.0] {
            let (phys, _) = grids(alpha);
            let f = GridFunction::sample(phys, &Gaussian);
            let duals: Vec<DualPoint> = [0.1, 0.7, 2.0, 3.5, -1.3]
                .iter()
                .flat_map(|&l| (0..6).map(move |m| DualPoint { lambda: l, m }))
                .collect();
            let got = forward_at(&f, &duals).unwrap();
            for (d, v) in duals.iter().zip(&got) {
                let exact = gaussian_hat(alpha, d.lambda, d.m);
                assert!((v - exact).norm() < 1e-12, "{d:?}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn zero_function_has_zero_transform_and_defects() {
        let (phys, spec) = grids(0.0);
        let pair = TransformPair::compute(GridFunction::sample(phys.clone(), &Zero), &spec).unwrap();
        assert_eq!(pair.fhat.max_abs(), 0.0);
        assert_eq!(plancherel_defect(&pair), 0.0);
        assert_eq!(riemann_lebesgue_margin(&pair), 0.0);
        let back = inverse(&pair.fhat, &phys).unwrap();
        assert_eq!(back.max_abs(), 0.0);
    }

    #[test]
    fn gaussian_plancherel_and_round_trip() {
        let (phys, spec) = grids(0.0);
        let f = GridFunction::sample(phys.clone(), &Gaussian);
        let pair = TransformPair::compute(f.clone(), &spec).unwrap();
        assert!(plancherel_defect(&pair) < 1e-8, "{}", plancherel_defect(&pair));
        assert!(riemann_lebesgue_margin(&pair) > 0.0);
        let back = inverse(&pair.fhat, &phys).unwrap();
        let diff = GridFunction::new(phys, back.values().iter().zip(f.values()).map(|(a, b)| a - b).collect()).unwrap();
        assert!(diff.lp_norm(2.0) / f.lp_norm(2.0) < 1e-4);
    }

    #[test]
    fn derivative_agrees_with_difference_quotients() {
        let alpha = 1.0;
        let phys = Arc::new(PhysicalGrid::build(alpha, 6.0, 6.0, 120, 120).unwrap());
        let spec = Arc::new(SpectralGrid::build(alpha, 0.05, 3.0, 16, 6).unwrap());
        let f = GridFunction::sample(phys, &Gaussian);
        for order in 1..=3 {
            let d = spectral_derivative(&f, &spec, order).unwrap();
            for s in [3usize, 10, 20, 28] {
                let (lambda, _) = spec.signed_lambda(s);
                let h = 1e-2 * lambda.abs();
                let pts: Vec<f64> = (-2..=2).map(|k| lambda + k as f64 * h).collect();
                let rows = forward_lambdas(&f, &pts, 6).unwrap();
                for m in 0..=6 {
                    let v: Vec<Complex64> = rows.iter().map(|r| r[m]).collect();
                    let fd = match order {
                        1 => (v[0] - 8.0 * v[1] + 8.0 * v[3] - v[4]) / (12.0 * h),
                        2 => (-v[0] + 16.0 * v[1] - 30.0 * v[2] + 16.0 * v[3] - v[4]) / (12.0 * h * h),
                        _ => (-v[0] + 2.0 * v[1] - 2.0 * v[3] + v[4]) / (2.0 * h.powi(3)),
                    };
                    let an = d.at(s, m);
                    let tol = if order == 3 { 1e-3 } else { 1e-6 };
                    assert!((an - fd).norm() < tol * (1.0 + an.norm()), "order {order} s {s} m {m}: {an} vs {fd}");
                }
            }
        }
    }

    #[test]
    fn eigenrelation_holds_for_catalog_profiles() {
        let (phys, spec) = grids(0.0);
        let d = eigenrelation_defect(&Gaussian, &phys, &spec).unwrap();
        assert!(d < 1e-6, "{d}");
        let odd = BumpPoly::monomial(6, 1.0, crate::geometry::MultiIndex::new(1, 0));
        assert!(eigenrelation_defect(&odd, &phys, &spec).is_err());
    }

    #[test]
    fn grids_with_different_alpha_are_rejected() {
        let (phys, _) = grids(0.0);
        let spec1 = Arc::new(SpectralGrid::build(1.0, 1e-3, 4.0, 16, 4).unwrap());
        let f = GridFunction::sample(phys, &Gaussian);
        assert!(matches!(forward(&f, &spec1), Err(LhkError::GridMismatch(_))));
    }

    #[test]
    fn applying_the_symbol_twice_squares_it() {
        let spec = Arc::new(SpectralGrid::build(0.0, 1e-3, 4.0, 16, 4).unwrap());
        let one = SpectralFunction::from_fn(spec.clone(), |_| Complex64::new(1.0, 0.0));
        let twice = apply_laguerre_spectral(&apply_laguerre_spectral(&one));
        for i in 0..spec.len() {
            let n = spec.quasinorm(i);
            assert!((twice.values()[i].re - n * n).abs() < 1e-12 * (1.0 + n * n));
        }
    }

    /// (e^{-s N} g^)^v for the Gaussian at (x, t), summed over m in closed form with the
    /// Laguerre generating function and integrated over lambda by panels of Gauss nodes.
    fn heat_gaussian_oracle(alpha: f64, s: f64, x: f64, t: f64) -> f64 {
        let (gx, gw) = crate::quadrature::gauss_legendre(40);
        let mut total = 0.0;
        for k in 0..120 {
            let (a, b) = (k as f64 * 0.25, (k + 1) as f64 * 0.25);
            for (z, w) in gx.iter().zip(&gw) {
                let l = 0.5 * (a + b) + 0.5 * (b - a) * z;
                let u = l * x * x;
                let h = 1.0 + l / 2.0;
                let e = (-4.0 * s * l).exp();
                let zr = (1.0 - l / 2.0) / h * e;
                let one_minus = (h - (1.0 - l / 2.0) * e) / h;
                let c = (-l * l / 4.0 - 2.0 * s * l * (alpha + 1.0)).exp() / (2.0 * PI.sqrt() * h.powf(alpha + 1.0));
                let sum = (-u / 2.0).exp() * one_minus.powf(-alpha - 1.0) * (-u * zr / one_minus).exp();
                // lambda and -lambda together
                total += 0.5 * (b - a) * w * c * sum * l.powf(alpha + 1.0) * 2.0 * (l * t).cos();
            }
        }
        total
    }

    fn heat(alpha: f64, s: f64) -> impl Fn(DualPoint) -> Complex64 + Sync {
        move |d: DualPoint| Complex64::new((-s * 4.0 * d.lambda.abs() * (d.m as f64 + (alpha + 1.0) / 2.0)).exp(), 0.0)
    }

    fn imag_power(alpha: f64) -> impl Fn(DualPoint) -> Complex64 + Sync {
        move |d: DualPoint| {
            let n = 4.0 * d.lambda.abs() * (d.m as f64 + (alpha + 1.0) / 2.0);
            Complex64::new(0.0, (1.0 + n).ln()).exp()
        }
    }

    fn small_grids(alpha: f64) -> (Arc<PhysicalGrid>, Arc<SpectralGrid>) {
        (
            Arc::new(PhysicalGrid::build(alpha, 6.0, 6.0, 100, 100).unwrap()),
            Arc::new(SpectralGrid::build(alpha, 1e-6, 12.0, 400, 64).unwrap()),
        )
    }

    #[test]
    fn heat_oracle_reduces_to_the_gaussian() {
        for &alpha in &[0.0, 1.0] {
            for &(x, t) in &[(0.0f64, 0.0f64), (0.7, -0.4), (1.5, 1.1)] {
                let want: f64 = (-x * x - t * t).exp();
                assert!((heat_gaussian_oracle(alpha, 0.0, x, t) - want).abs() < 1e-10, "{alpha} {x} {t}");
            }
        }
    }

    #[test]
    fn constant_symbol_reproduces_the_input() {
        let (phys, spec) = small_grids(1.0);
        let f = GridFunction::sample(phys, &BumpPoly::monomial(4, 1.0, crate::geometry::MultiIndex::new(2, 1)));
        let plan = SymbolPlan::new(&f, &spec).unwrap();
        let g = plan.apply(|_| Complex64::new(-2.5, 0.5)).unwrap();
        let c = Complex64::new(-2.5, 0.5);
        let err = g.values().iter().zip(f.values()).map(|(a, b)| (a - c * b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12 * f.max_abs(), "{err}");
    }

    #[test]
    fn heat_symbol_matches_the_closed_form() {
        for &alpha in &[0.0, 1.0] {
            let (phys, spec) = small_grids(alpha);
            let f = GridFunction::sample(phys.clone(), &Gaussian);
            let g = SymbolPlan::new(&f, &spec).unwrap().apply(heat(alpha, 0.1)).unwrap();
            let mut err: f64 = 0.0;
            for ix in (0..phys.nx()).step_by(9) {
                for it in (0..phys.nt()).step_by(7) {
                    let (x, t) = (phys.xs[ix], phys.ts[it]);
                    let v = g.values()[ix * phys.nt() + it];
                    err = err.max((v - heat_gaussian_oracle(alpha, 0.1, x, t)).norm());
                }
            }
            assert!(err < 1e-6, "alpha {alpha}: {err}");
        }
    }

    #[test]
    fn plan_is_linear_and_composes() {
        let alpha = 0.0;
        let (phys, spec) = small_grids(alpha);
        let f = GridFunction::sample(phys.clone(), &Gaussian);
        let plan = SymbolPlan::new(&f, &spec).unwrap();
        let a = plan.apply(heat(alpha, 0.05)).unwrap();
        let b = plan.apply(imag_power(alpha)).unwrap();
        let ab = plan.apply(|d| heat(alpha, 0.05)(d) * 2.0 + imag_power(alpha)(d)).unwrap();
        let lin = ab
            .values()
            .iter()
            .zip(a.values().iter().zip(b.values()))
            .map(|(s, (x, y))| (s - 2.0 * x - y).norm())
            .fold(0.0, f64::max);
        assert!(lin < 1e-12, "{lin}");
        let twice = SymbolPlan::new(&a, &spec).unwrap().apply(heat(alpha, 0.05)).unwrap();
        let once = plan.apply(heat(alpha, 0.1)).unwrap();
        let comp = twice.values().iter().zip(once.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(comp < 1e-6, "{comp}");
    }
}
