//! Quadrature rules, the tensor physical grid on K and the spectral grid on
//! the dual, with compensated and order-fixed summation.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use statrs::function::beta::beta;
use statrs::function::gamma::gamma;
use std::collections::hash_map::DefaultHasher;
use std::f64::consts::PI;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::error::{LhkError, Result};
use crate::geometry::quasinorm;
use crate::point::{DualPoint, HypergroupPoint};
use crate::profile::Profile;
use crate::specfun::laguerre_at_zero;

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated complex sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierC {
    re: Neumaier,
    im: Neumaier,
}

impl NeumaierC {
    #[inline]
    pub fn add(&mut self, v: Complex64) {
        self.re.add(v.re);
        self.im.add(v.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

pub fn neumaier_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = Neumaier::default();
    for v in it {
        s.add(v);
    }
    s.value()
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre needs at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            dp = 1.0;
            z = 0.0;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss-Jacobi rule on [-1, 1] for the weight (1-x)^a (1+x)^b, by Golub-Welsch.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || !(a > -1.0) || !(b > -1.0) {
        return Err(LhkError::InvalidParameter(format!(
            "Gauss-Jacobi needs n >= 1 and a, b > -1 (n={n}, a={a}, b={b})"
        )));
    }
    let mut j = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        let diag = if k == 0 { (b - a) / (a + b + 2.0) } else { (b * b - a * a) / (s * (s + 2.0)) };
        j[(k, k)] = diag;
        if k + 1 < n {
            let k1 = kf + 1.0;
            let s1 = 2.0 * k1 + a + b;
            let num = 4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b);
            let den = s1 * s1 * (s1 + 1.0) * (s1 - 1.0);
            let off = (num / den).sqrt();
            j[(k, k + 1)] = off;
            j[(k + 1, k)] = off;
        }
    }
    let mu0 = 2f64.powf(a + b + 1.0) * beta(a + 1.0, b + 1.0);
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    Ok(pairs.into_iter().unzip())
}

/// Composite Gauss-Legendre rule over consecutive breakpoints.
pub fn composite_rule(breaks: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let mut xs = Vec::with_capacity(order * breaks.len());
    let mut ws = Vec::with_capacity(order * breaks.len());
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(c + h * x);
            ws.push(h * w);
        }
    }
    (xs, ws)
}

fn uniform_breaks(a: f64, b: f64, panels: usize) -> Vec<f64> {
    (0..=panels).map(|k| a + (b - a) * k as f64 / panels as f64).collect()
}

/// Hurwitz zeta(s, a) for s > 1, a > 0, by Euler-Maclaurin.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    const B2J: [f64; 8] =
        [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0, -3617.0 / 510.0];
    let n = 12usize;
    let mut acc = Neumaier::default();
    for k in 0..n {
        acc.add((k as f64 + a).powf(-s));
    }
    let z = n as f64 + a;
    acc.add(z.powf(1.0 - s) / (s - 1.0));
    acc.add(0.5 * z.powf(-s));
    // rising product s (s+1) ... (s+2j-2) / (2j)!
    let mut fac = s / 2.0;
    let mut zp = z.powf(-s - 1.0);
    for (j, b) in B2J.iter().enumerate() {
        acc.add(b * fac * zp);
        let jj = 2.0 * (j as f64 + 1.0);
        fac *= (s + jj - 1.0) * (s + jj) / ((jj + 1.0) * (jj + 2.0));
        zp /= z * z;
    }
    acc.value()
}

/// Extrapolation of the level sum beyond m_max.
///
/// Level contributions behave like sum_k c_k mu^{-k}, mu = m + (alpha+1)/2,
/// k = 2..K+1. Fitting at K spread levels and summing the fitted series with
/// Hurwitz zeta gives tail ~ sum_j omega_j S_{m_j}.
#[derive(Debug, Clone, PartialEq)]
pub struct TailRule {
    pub levels: Vec<usize>,
    pub weights: Vec<f64>,
}

impl TailRule {
    pub fn none() -> Self {
        Self { levels: Vec::new(), weights: Vec::new() }
    }

    pub fn build(alpha: f64, m_max: usize) -> Self {
        const K: usize = 3;
        if m_max < 8 {
            return Self::none();
        }
        let step = m_max / 4;
        let levels: Vec<usize> = (0..K).map(|j| m_max - j * step).collect();
        let shift = 0.5 * (alpha + 1.0);
        let v = DMatrix::from_fn(K, K, |k, j| (levels[j] as f64 + shift).powi(-(k as i32 + 2)));
        let z = nalgebra::DVector::from_fn(K, |k, _| hurwitz_zeta(k as f64 + 2.0, m_max as f64 + 1.0 + shift));
        let w = v.lu().solve(&z).expect("tail Vandermonde system is nonsingular");
        Self { levels, weights: w.iter().copied().collect() }
    }

    /// Extra weight this rule puts on level m.
    pub fn weight_of(&self, m: usize) -> f64 {
        self.levels.iter().zip(&self.weights).filter(|(l, _)| **l == m).map(|(_, w)| *w).sum()
    }
}

fn fingerprint(parts: &[&[f64]]) -> u64 {
    let mut h = DefaultHasher::new();
    for p in parts {
        p.len().hash(&mut h);
        for v in p.iter() {
            v.to_bits().hash(&mut h);
        }
    }
    h.finish()
}

/// Tensor product grid on [0, X] x [-T, T]. The Haar density is folded into the x weights.
/// Nodes are ordered x-major: index = ix * nt + it.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalGrid {
    pub alpha: f64,
    pub xs: Vec<f64>,
    pub wx: Vec<f64>,
    pub ts: Vec<f64>,
    pub wt: Vec<f64>,
    fingerprint: u64,
}

pub const PANEL_ORDER: usize = 10;

impl PhysicalGrid {
    /// Composite Gauss-Legendre grid with about `nx` x `nt` nodes (rounded up to whole panels).
    pub fn build(alpha: f64, x_max: f64, t_max: f64, nx: usize, nt: usize) -> Result<Self> {
        if !(x_max > 0.0) || !(t_max > 0.0) || !x_max.is_finite() || !t_max.is_finite() {
            return Err(LhkError::InvalidParameter(format!("grid extents must be positive (X={x_max}, T={t_max})")));
        }
        if nx == 0 || nt == 0 {
            return Err(LhkError::InvalidParameter("grid needs at least one node per axis".into()));
        }
        let px = nx.div_ceil(PANEL_ORDER);
        let pt = nt.div_ceil(PANEL_ORDER);
        Self::from_breakpoints(alpha, &uniform_breaks(0.0, x_max, px), &uniform_breaks(-t_max, t_max, pt), PANEL_ORDER)
    }

    pub fn from_breakpoints(alpha: f64, xbreaks: &[f64], tbreaks: &[f64], order: usize) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(LhkError::InvalidParameter(format!("alpha must be >= 0, got {alpha}")));
        }
        let monotone = |b: &[f64]| b.len() >= 2 && b.windows(2).all(|w| w[1] > w[0]);
        if !monotone(xbreaks) || !monotone(tbreaks) || xbreaks[0] < 0.0 || order == 0 {
            return Err(LhkError::InvalidParameter("breakpoints must increase and x must be >= 0".into()));
        }
        let (xs, wx0) = composite_rule(xbreaks, order);
        let (ts, wt) = composite_rule(tbreaks, order);
        let c = 1.0 / (PI * gamma(alpha + 1.0));
        let wx: Vec<f64> = xs.iter().zip(&wx0).map(|(x, w)| w * c * x.powf(2.0 * alpha + 1.0)).collect();
        let fingerprint = fingerprint(&[&[alpha], &xs, &wx, &ts, &wt]);
        Ok(Self { alpha, xs, wx, ts, wt, fingerprint })
    }

    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn nt(&self) -> usize {
        self.ts.len()
    }

    pub fn len(&self) -> usize {
        self.nx() * self.nt()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.ts[0], *self.ts.last().unwrap())
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    #[inline]
    pub fn node(&self, idx: usize) -> HypergroupPoint {
        let (ix, it) = (idx / self.nt(), idx % self.nt());
        HypergroupPoint { x: self.xs[ix], t: self.ts[it] }
    }

    #[inline]
    pub fn weight(&self, idx: usize) -> f64 {
        let (ix, it) = (idx / self.nt(), idx % self.nt());
        self.wx[ix] * self.wt[it]
    }

    /// (x, t, weight) in node order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.xs
            .iter()
            .zip(&self.wx)
            .flat_map(move |(&x, &wx)| self.ts.iter().zip(&self.wt).map(move |(&t, &wt)| (x, t, wx * wt)))
    }

    /// Largest |lambda| that keeps at least eight t-nodes per half period of e^{i lambda t}.
    pub fn max_resolved_lambda(&self) -> f64 {
        let (a, b) = self.t_range();
        PI * self.nt() as f64 / (4.0 * (b - a))
    }

    pub fn integrate(&self, values: &[Complex64]) -> Complex64 {
        let mut s = NeumaierC::default();
        for (idx, v) in values.iter().enumerate() {
            s.add(v * self.weight(idx));
        }
        s.value()
    }
}

/// Number of t-nodes needed on [-T, T] to resolve e^{i lambda t} up to lambda_max.
pub fn required_t_nodes(t_max: f64, lambda_max: f64) -> usize {
    let n = (8.0 * lambda_max * t_max / PI).ceil() as usize;
    n.div_ceil(PANEL_ORDER) * PANEL_ORDER
}

/// Values on a physical grid, in node order.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<PhysicalGrid>,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Arc<PhysicalGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LhkError::GridMismatch(format!("{} values for a grid of {} nodes", values.len(), grid.len())));
        }
        Ok(Self { grid, values })
    }

    pub fn sample(grid: Arc<PhysicalGrid>, f: &dyn Profile) -> Self {
        use rayon::prelude::*;
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let p = grid.node(idx);
                f.eval(p.x, p.t)
            })
            .collect();
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<PhysicalGrid>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn grid(&self) -> &PhysicalGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<PhysicalGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn map(&self, f: impl Fn(HypergroupPoint, Complex64) -> Complex64) -> Self {
        let values = self.values.iter().enumerate().map(|(i, v)| f(self.grid.node(i), *v)).collect();
        Self { grid: self.grid.clone(), values }
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid.fingerprint() != other.grid.fingerprint() {
            return Err(LhkError::GridMismatch("functions live on different physical grids".into()));
        }
        Ok(())
    }

    pub fn integral(&self) -> Complex64 {
        self.grid.integrate(&self.values)
    }

    /// (int |f|^p dm)^{1/p}; p = inf gives the max over nodes.
    pub fn lp_norm(&self, p: f64) -> f64 {
        self.weighted_lp_norm(p, |_| 1.0)
    }

    /// ‖f w‖_p for a pointwise weight w(x,t).
    pub fn weighted_lp_norm(&self, p: f64, w: impl Fn(HypergroupPoint) -> f64) -> f64 {
        if p.is_infinite() {
            return self.values.iter().enumerate().map(|(i, v)| v.norm() * w(self.grid.node(i))).fold(0.0, f64::max);
        }
        let mut s = Neumaier::default();
        for (i, v) in self.values.iter().enumerate() {
            let a = v.norm();
            if a > 0.0 {
                s.add((a * w(self.grid.node(i))).powf(p) * self.grid.weight(i));
            }
        }
        s.value().powf(1.0 / p)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Errors when |f| on the outermost node lines exceeds `rel` times max |f|.
    pub fn check_edge_decay(&self, rel: f64) -> Result<()> {
        let g = &self.grid;
        let (nx, nt) = (g.nx(), g.nt());
        let peak = self.max_abs();
        if peak == 0.0 {
            return Ok(());
        }
        let mut edge: f64 = 0.0;
        for it in 0..nt {
            edge = edge.max(self.values[(nx - 1) * nt + it].norm());
        }
        for ix in 0..nx {
            edge = edge.max(self.values[ix * nt].norm()).max(self.values[ix * nt + nt - 1].norm());
        }
        if edge > rel * peak {
            return Err(LhkError::GridCoverage(format!("edge magnitude {edge:.3e} against peak {peak:.3e}")));
        }
        Ok(())
    }
}

/// Nodes of the dual: symmetric lambda nodes times levels m = 0..=m_max.
///
/// Node index = s * (m_max + 1) + m, where s runs over the signed lambda nodes
/// in increasing order. Level weights carry L_m(0) and the tail extrapolation,
/// so a few of them exceed L_m(0).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    pub alpha: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub m_max: usize,
    /// positive lambda nodes, increasing
    pub lams: Vec<f64>,
    /// dlambda weights times lambda^{alpha+1}
    pub wlam: Vec<f64>,
    /// L_m(0) (1 + tail weight)
    pub level_w: Vec<f64>,
    pub tail: TailRule,
    fingerprint: u64,
}

pub const LAMBDA_PANEL_ORDER: usize = 8;
const GEOMETRIC_RATIO: f64 = 1.5;

/// Panel breakpoints on [lmin, lmax]: geometric with ratio 1.5 from lmin, then
/// uniform once the uniform width would not exceed the last geometric width.
fn lambda_breaks(lmin: f64, lmax: f64, panels: usize) -> Vec<f64> {
    for pg in 1..panels {
        let lg = lmin * GEOMETRIC_RATIO.powi(pg as i32);
        if lg >= lmax {
            break;
        }
        let h = (lmax - lg) / (panels - pg) as f64;
        if h <= (GEOMETRIC_RATIO - 1.0) * lg {
            let mut b: Vec<f64> = (0..=pg).map(|k| lmin * GEOMETRIC_RATIO.powi(k as i32)).collect();
            b.extend((1..=panels - pg).map(|k| lg + h * k as f64));
            *b.last_mut().unwrap() = lmax;
            return b;
        }
    }
    let r = (lmax / lmin).powf(1.0 / panels as f64);
    let mut b: Vec<f64> = (0..=panels).map(|k| lmin * r.powi(k as i32)).collect();
    *b.last_mut().unwrap() = lmax;
    b
}

impl SpectralGrid {
    /// `n_lambda` nodes per half line (rounded up to whole panels of eight).
    pub fn build(alpha: f64, lambda_min: f64, lambda_max: f64, n_lambda: usize, m_max: usize) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(LhkError::InvalidParameter(format!("alpha must be >= 0, got {alpha}")));
        }
        if !(lambda_min > 0.0) || !(lambda_max > lambda_min) || !lambda_max.is_finite() {
            return Err(LhkError::InvalidParameter(format!(
                "need 0 < lambda_min < lambda_max (got {lambda_min}, {lambda_max})"
            )));
        }
        if n_lambda == 0 {
            return Err(LhkError::InvalidParameter("n_lambda must be positive".into()));
        }
        let panels = n_lambda.div_ceil(LAMBDA_PANEL_ORDER).max(2);
        let breaks = lambda_breaks(lambda_min, lambda_max, panels);
        let (lams, w) = composite_rule(&breaks, LAMBDA_PANEL_ORDER);
        let wlam = lams.iter().zip(&w).map(|(l, w)| w * l.powf(alpha + 1.0)).collect::<Vec<_>>();
        let tail = TailRule::build(alpha, m_max);
        let level_w = (0..=m_max).map(|m| laguerre_at_zero(alpha, m) * (1.0 + tail.weight_of(m))).collect::<Vec<_>>();
        let fingerprint = fingerprint(&[&[alpha, m_max as f64], &lams, &wlam, &level_w]);
        Ok(Self { alpha, lambda_min, lambda_max, m_max, lams, wlam, level_w, tail, fingerprint })
    }

    /// Smallest node count per half line whose widest lambda panel resolves
    /// e^{i lambda t} for |t| <= t_extent.
    pub fn required_n_lambda(lambda_min: f64, lambda_max: f64, t_extent: f64, at_least: usize) -> usize {
        let mut n = at_least.div_ceil(LAMBDA_PANEL_ORDER).max(2) * LAMBDA_PANEL_ORDER;
        loop {
            let b = lambda_breaks(lambda_min, lambda_max, n / LAMBDA_PANEL_ORDER);
            let widest = b.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            if widest * t_extent <= 4.0 || n > 1 << 16 {
                return n;
            }
            n += LAMBDA_PANEL_ORDER;
        }
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn n_half(&self) -> usize {
        self.lams.len()
    }

    pub fn n_signed(&self) -> usize {
        2 * self.lams.len()
    }

    pub fn levels(&self) -> usize {
        self.m_max + 1
    }

    pub fn len(&self) -> usize {
        self.n_signed() * self.levels()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Signed lambda of signed index s, and the index of |lambda| among the positive nodes.
    #[inline]
    pub fn signed_lambda(&self, s: usize) -> (f64, usize) {
        let n = self.n_half();
        if s < n {
            (-self.lams[n - 1 - s], n - 1 - s)
        } else {
            (self.lams[s - n], s - n)
        }
    }

    pub fn signed_lambdas(&self) -> Vec<f64> {
        (0..self.n_signed()).map(|s| self.signed_lambda(s).0).collect()
    }

    #[inline]
    pub fn dual(&self, idx: usize) -> DualPoint {
        let (s, m) = (idx / self.levels(), idx % self.levels());
        DualPoint { lambda: self.signed_lambda(s).0, m }
    }

    #[inline]
    pub fn weight(&self, idx: usize) -> f64 {
        let (s, m) = (idx / self.levels(), idx % self.levels());
        self.wlam[self.signed_lambda(s).1] * self.level_w[m]
    }

    #[inline]
    pub fn quasinorm(&self, idx: usize) -> f64 {
        let d = self.dual(idx);
        quasinorm(self.alpha, d.lambda, d.m)
    }

    /// int g dgamma over the grid, tail included.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        let mut s = Neumaier::default();
        for (idx, v) in values.iter().enumerate() {
            s.add(v * self.weight(idx));
        }
        s.value()
    }

    /// Size of the neglected levels: the tail term relative to the whole sum, for a level profile.
    pub fn tail_fraction(&self, level_sums: &[f64]) -> f64 {
        let tail: f64 = self.tail.levels.iter().zip(&self.tail.weights).map(|(&l, &w)| w * level_sums[l]).sum();
        let total: f64 = level_sums.iter().sum::<f64>() + tail;
        if total == 0.0 {
            0.0
        } else {
            (tail / total).abs()
        }
    }

    /// Per-level integrals sum_s w_s g(s, m), without the level weights.
    pub fn level_sums(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![Neumaier::default(); self.levels()];
        for (idx, v) in values.iter().enumerate() {
            let (s, m) = (idx / self.levels(), idx % self.levels());
            out[m].add(v * self.wlam[self.signed_lambda(s).1] * laguerre_at_zero(self.alpha, m));
        }
        out.iter().map(|s| s.value()).collect()
    }

    /// gamma({lo < N <= hi}) for a radial weight g(N), integrated level by level on
    /// the exact lambda interval of each level and extrapolated in m.
    pub fn shell_integral(&self, lo: f64, hi: f64, g: impl Fn(DualPoint) -> f64) -> ShellIntegral {
        let (gx, gw) = gauss_legendre(16);
        let mut levels = Vec::with_capacity(self.levels());
        for m in 0..=self.m_max {
            let mu = 4.0 * (m as f64 + 0.5 * (self.alpha + 1.0));
            let a = (lo / mu).max(self.lambda_min);
            let b = (hi / mu).min(self.lambda_max);
            let mut acc = Neumaier::default();
            if b > a {
                // geometric sub-panels keep the relative accuracy when the interval spans decades
                let npan = ((b / a).ln() / 2f64.ln()).ceil().max(1.0) as usize;
                let r = (b / a).powf(1.0 / npan as f64);
                for p in 0..npan {
                    let (pa, pb) = (a * r.powi(p as i32), if p + 1 == npan { b } else { a * r.powi(p as i32 + 1) });
                    let h = 0.5 * (pb - pa);
                    let c = 0.5 * (pa + pb);
                    for (x, w) in gx.iter().zip(&gw) {
                        let l = c + h * x;
                        let v = g(DualPoint { lambda: l, m }) + g(DualPoint { lambda: -l, m });
                        acc.add(h * w * l.powf(self.alpha + 1.0) * v);
                    }
                }
            }
            levels.push(acc.value() * laguerre_at_zero(self.alpha, m));
        }
        ShellIntegral::from_levels(levels, &self.tail)
    }

    /// gamma({N <= r}).
    pub fn sublevel_measure(&self, r: f64) -> ShellIntegral {
        self.shell_integral(0.0, r, |_| 1.0)
    }
}

/// Level-resolved integral over the dual with its extrapolated tail.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellIntegral {
    pub levels: Vec<f64>,
    pub truncated: f64,
    pub tail: f64,
    /// true when the level terms do not decay towards m_max, so the tail is not added
    pub divergent: bool,
}

impl ShellIntegral {
    fn from_levels(levels: Vec<f64>, rule: &TailRule) -> Self {
        let truncated = neumaier_sum(levels.iter().copied());
        let m = levels.len() - 1;
        let divergent = m >= 8 && levels[m].abs() > 0.5 * levels[m / 2].abs() && levels[m].abs() > 1e-300;
        let tail =
            if divergent { 0.0 } else { rule.levels.iter().zip(&rule.weights).map(|(&l, &w)| w * levels[l]).sum() };
        Self { levels, truncated, tail, divergent }
    }

    pub fn value(&self) -> f64 {
        self.truncated + self.tail
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for k in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-14, "n {n} k {k}");
            }
        }
    }

    #[test]
    fn jacobi_reproduces_weighted_moments() {
        // int_{-1}^1 (1-x)^a (1+x)^b x dx has a beta closed form
        for &(a, b) in &[(0.0, 0.0), (-0.5, 0.0), (1.5, 0.5), (0.3, -0.4)] {
            let (x, w) = gauss_jacobi(8, a, b).unwrap();
            let m0: f64 = w.iter().sum();
            let exact0 = 2f64.powf(a + b + 1.0) * beta(a + 1.0, b + 1.0);
            assert!((m0 - exact0).abs() < 1e-13 * exact0);
            let m1: f64 = x.iter().zip(&w).map(|(x, w)| w * x).sum();
            let exact1 = exact0 * (b - a) / (a + b + 2.0);
            assert!((m1 - exact1).abs() < 1e-13 * exact0, "{a} {b}: {m1} vs {exact1}");
        }
        assert!(gauss_jacobi(4, -1.0, 0.0).is_err());
    }

    #[test]
    fn legendre_and_jacobi_agree_at_zero_exponents() {
        let (x1, w1) = gauss_legendre(9);
        let (x2, w2) = gauss_jacobi(9, 0.0, 0.0).unwrap();
        for i in 0..9 {
            assert!((x1[i] - x2[i]).abs() < 1e-13 && (w1[i] - w2[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn hurwitz_zeta_known_values() {
        let z2 = PI * PI / 6.0;
        assert!((hurwitz_zeta(2.0, 1.0) - z2).abs() < 1e-14);
        assert!((hurwitz_zeta(2.0, 3.0) - (z2 - 1.0 - 0.25)).abs() < 1e-14);
        assert!((hurwitz_zeta(4.0, 1.0) - PI.powi(4) / 90.0).abs() < 1e-14);
    }

    #[test]
    fn physical_grid_mass_of_box() {
        for &alpha in &[0.0, 1.0] {
            let g = PhysicalGrid::build(alpha, 6.0, 6.0, 200, 200).unwrap();
            let total: f64 = g.iter().map(|(_, _, w)| w).sum();
            let exact = 6f64.powf(2.0 * alpha + 2.0) / (2.0 * alpha + 2.0) * 12.0 / (PI * gamma(alpha + 1.0));
            assert!((total - exact).abs() < 1e-12 * exact);
        }
        assert!(PhysicalGrid::build(0.0, -1.0, 1.0, 10, 10).is_err());
        assert!(PhysicalGrid::build(0.0, 1.0, 1.0, 0, 10).is_err());
    }

    #[test]
    fn tail_rule_sums_model_series() {
        // a series that is exactly of the fitted form
        let alpha = 1.0;
        let shift = 1.0;
        let s = |m: usize| {
            let mu = m as f64 + shift;
            3.0 / mu.powi(2) - 2.0 / mu.powi(3) + 0.5 / mu.powi(4)
        };
        let rule = TailRule::build(alpha, 64);
        let truncated: f64 = (0..=64).map(s).sum();
        let est = truncated + rule.levels.iter().zip(&rule.weights).map(|(&l, &w)| w * s(l)).sum::<f64>();
        let exact = 3.0 * PI * PI / 6.0 - 2.0 * 1.2020569031595942 + 0.5 * PI.powi(4) / 90.0;
        assert!((est - exact).abs() < 1e-12, "{est} vs {exact}");
    }

    #[test]
    fn sublevel_measure_matches_closed_form() {
        let g = SpectralGrid::build(0.0, 1e-6, 12.0, 400, 128).unwrap();
        let v = g.sublevel_measure(1.0).value();
        assert!((v - PI * PI / 32.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn spectral_grid_rejects_bad_ranges() {
        assert!(SpectralGrid::build(0.0, 0.0, 1.0, 10, 4).is_err());
        assert!(SpectralGrid::build(0.0, 2.0, 1.0, 10, 4).is_err());
    }

    proptest! {
        #[test]
        fn neumaier_is_order_insensitive(v in proptest::collection::vec(-1e10f64..1e10, 1..60)) {
            let a = neumaier_sum(v.iter().copied());
            let b = neumaier_sum(v.iter().rev().copied());
            let scale: f64 = v.iter().map(|x| x.abs()).sum();
            prop_assert!((a - b).abs() <= 1e-15 * scale + 1e-300);
        }

        #[test]
        fn composite_rule_integrates_cubics(a in -5.0f64..0.0, len in 0.1f64..5.0, p in 1usize..6) {
            let b = a + len;
            let (x, w) = composite_rule(&uniform_breaks(a, b, p), 4);
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(3)).sum();
            let exact = (b.powi(4) - a.powi(4)) / 4.0;
            prop_assert!((q - exact).abs() < 1e-11 * (1.0 + exact.abs()));
        }
    }
}
