//! Hardy space estimates: atoms and their molecular norms, pointwise and
//! integral bounds on the transform of atoms and atomic combinations, the
//! order of vanishing at the origin, weak type, Paley and Pitt.
//!
//! Constants without closed form are checked by their spread over the radius
//! sweep. Atoms of radius r live on the box of radius r and are transformed on
//! lambda in [lambda_min, lambda_max] / r^2, so every quantity here is exactly
//! dilation invariant up to discretization.

use std::sync::Arc;

use lhk_core::atoms::{atom_grid, atomic_combination, molecule_norm, validate_atom, Atom};
use lhk_core::multipliers::loglog_slope;
use lhk_core::profile::Gaussian;
use lhk_core::quadrature::{GridFunction, PhysicalGrid, SpectralGrid};
use lhk_core::report::{Check, EstimateReport, Metric};
use lhk_core::transform::{forward, spectral_derivative, SpectralFunction};
use lhk_core::Result;
use num_complex::Complex64;
use rayon::prelude::*;

use super::common::{add_grid_checksum, default_atom, label, molecule_exponents, new_report, q_dim, stability, tau};
use crate::config::Config;

/// lambda nodes on each side of the origin whose ratios must decrease towards 0
pub const ORIGIN_NODES: usize = 5;
/// the near-origin slope is fitted on |lambda| <= ORIGIN_SPAN lambda_min
const ORIGIN_SPAN: f64 = 10.0;
pub const WEAK_TYPE_POINTS: usize = 12;
const WEAK_TYPE_DECADES: f64 = 4.0;
/// the largest beta is this quantile of the node values
const WEAK_TYPE_ANCHOR: f64 = 0.9;
/// q' of the integral form of the derivative bound
const DUAL_EXPONENTS: [f64; 3] = [1.0, 2.0, f64::INFINITY];
pub const LP_BOUND_TOL: f64 = 1e-8;

fn build_atom(config: &Config, alpha: f64, p: f64, r: f64) -> Result<(Atom, Arc<PhysicalGrid>)> {
    default_atom(config, alpha, p, r, config.hp.atom_n)
}

/// Dual grid for atoms with radii in [r_lo, r_hi]. Integrals need the lambda
/// panels to resolve e^{i lambda t} over the support; node values do not.
fn atom_spectral_grid(config: &Config, alpha: f64, r_lo: f64, r_hi: f64, integrals: bool) -> Result<Arc<SpectralGrid>> {
    let h = &config.hp;
    let (lmin, lmax) = (h.lambda_min / (r_hi * r_hi), h.lambda_max / (r_lo * r_lo));
    let n = if integrals {
        SpectralGrid::required_n_lambda(lmin, lmax, r_hi * r_hi, config.grid.n_lambda)
    } else {
        config.grid.n_lambda
    };
    Ok(Arc::new(SpectralGrid::build(alpha, lmin, lmax, n, h.m_max)?))
}

fn abs_values(f: &SpectralFunction) -> Vec<f64> {
    f.values().iter().map(|z| z.norm()).collect()
}

fn quasinorms(spec: &SpectralGrid) -> Vec<f64> {
    (0..spec.len()).map(|i| spec.quasinorm(i)).collect()
}

/// sup |F| N^{-e}
fn sup_ratio(abs: &[f64], n: &[f64], e: f64) -> f64 {
    abs.iter().zip(n).map(|(a, n)| a * n.powf(-e)).fold(0.0, f64::max)
}

/// sup over the beta grid of gamma({N^{(Q/2)(1 - 2/p)} |F| >= beta}) beta^p.
fn weak_type(spec: &SpectralGrid, abs: &[f64], n: &[f64], p: f64) -> f64 {
    let q = q_dim(spec.alpha);
    let g: Vec<f64> = abs.iter().zip(n).map(|(a, n)| n.powf(0.5 * q * (1.0 - 2.0 / p)) * a).collect();
    let mut sorted = g.clone();
    sorted.sort_by(f64::total_cmp);
    let top = sorted[((sorted.len() - 1) as f64 * WEAK_TYPE_ANCHOR) as usize];
    if !(top > 0.0) {
        return 0.0;
    }
    (0..WEAK_TYPE_POINTS)
        .map(|j| {
            let beta = top * 10f64.powf(-WEAK_TYPE_DECADES * j as f64 / (WEAK_TYPE_POINTS - 1) as f64);
            let ind: Vec<f64> = g.iter().map(|v| if *v >= beta { 1.0 } else { 0.0 }).collect();
            spec.integrate(&ind) * beta.powf(p)
        })
        .fold(0.0, f64::max)
}

/// int |F|^p N^{-(Q/2)(2 - p)} dgamma
fn paley(spec: &SpectralGrid, abs: &[f64], n: &[f64], p: f64) -> f64 {
    let q = q_dim(spec.alpha);
    let v: Vec<f64> = abs.iter().zip(n).map(|(a, n)| a.powf(p) * n.powf(-0.5 * q * (2.0 - p))).collect();
    spec.integrate(&v)
}

/// Metrics of one atom, and the values whose spread over the sweep is checked.
struct RadiusRun {
    metrics: Vec<Metric>,
    sweep: Vec<(String, f64)>,
}

fn radius_run(config: &Config, alpha: f64, p: f64, r: f64) -> Result<RadiusRun> {
    let tol = &config.tolerances;
    let (atom, grid) = build_atom(config, alpha, p, r)?;
    let tag = format!("p={},r={}", label(p), label(r));
    let mut metrics = Vec::new();
    let mut sweep = Vec::new();

    for m in validate_atom(&atom, &atom.spec, alpha).metrics {
        metrics.push(Metric { name: format!("atom_{}[{tag}]", m.name), ..m });
    }
    metrics.push(Metric::measured(format!("atom_gram_condition[{tag}]"), atom.gram_condition));

    let fa = GridFunction::sample(grid, &atom);
    let (s_mol, eps) = molecule_exponents(alpha, p, tau(config, alpha, p));
    let mol = molecule_norm(&fa, p, config.hp.q, s_mol, eps)?.molecular_norm;
    metrics.push(Metric::new(format!("molecular_norm[{tag}]"), mol, Check::Finite));
    sweep.push(("molecular_norm".to_string(), mol));

    let spec = atom_spectral_grid(config, alpha, r, r, true)?;
    let ah = forward(&fa, &spec)?;
    let abs = abs_values(&ah);
    let n = quasinorms(&spec);
    let q = q_dim(alpha);
    let e = 0.5 * q * (1.0 / p - 1.0);

    let growth = sup_ratio(&abs, &n, e);
    metrics.push(Metric::new(format!("growth_sup_ratio[{tag}]"), growth, Check::Finite));
    sweep.push(("growth_sup_ratio".to_string(), growth));

    // derivative bounds, with d(I) = 2k for the k-th lambda derivative
    let d = 2.0 * p / (2.0 - p);
    let norm2 = fa.lp_norm(2.0);
    let s = atom.spec.s as f64;
    for k in 0..=atom.spec.s / 2 {
        let dk = if k == 0 { ah.clone() } else { spectral_derivative(&fa, &spec, k)? };
        let dabs = abs_values(&dk);
        let di = 2.0 * k as f64;
        let sup = sup_ratio(&dabs, &n, 0.5 * (s - di + 1.0));
        let v = sup / norm2.powf(1.0 - d * ((s + 1.0) / q + 0.5));
        metrics.push(Metric::new(format!("derivative_sup_ratio[k={k},{tag}]"), v, Check::Finite));
        sweep.push((format!("derivative_sup_ratio[k={k}]"), v));
        for qp in DUAL_EXPONENTS {
            let (lhs, inv_q) = if qp.is_infinite() {
                (dabs.iter().fold(0.0f64, |a, v| a.max(v * v)), 1.0)
            } else {
                let pw: Vec<f64> = dabs.iter().map(|v| v.powf(2.0 * qp)).collect();
                (spec.integrate(&pw).powf(1.0 / qp), 1.0 - 1.0 / qp)
            };
            let v = lhs / norm2.powf(2.0 - d * (2.0 * di / q + inv_q));
            let ql = if qp.is_infinite() { "inf".to_string() } else { label(qp) };
            metrics.push(Metric::new(format!("derivative_int_ratio[k={k},q'={ql},{tag}]"), v, Check::Finite));
            sweep.push((format!("derivative_int_ratio[k={k},q'={ql}]"), v));
        }
    }

    // ratio at the nodes closest to the origin, listed by increasing |lambda|
    let levels = spec.levels();
    let nh = spec.n_half();
    let sides: [(&str, Vec<usize>); 2] =
        [("+", (0..ORIGIN_NODES).map(|i| nh + i).collect()), ("-", (0..ORIGIN_NODES).map(|i| nh - 1 - i).collect())];
    let row_ratio = |s: usize| sup_ratio(&abs[s * levels..(s + 1) * levels], &n[s * levels..(s + 1) * levels], e);
    let mut increase = f64::NEG_INFINITY;
    for (sign, idx) in &sides {
        let rs: Vec<f64> = idx.iter().map(|&s| row_ratio(s)).collect();
        for (i, v) in rs.iter().enumerate() {
            metrics.push(Metric::measured(format!("origin_ratio[{tag},node={sign}{i}]"), *v));
        }
        for w in rs.windows(2) {
            increase = increase.max(w[0] - w[1]);
        }
    }
    metrics.push(Metric::new(
        format!("origin_monotonicity_violation[{tag}]"),
        increase,
        Check::AtMost(tol.noise_floor),
    ));

    // log-log slope of sup_m |a^| against N(lambda, 0) near the origin, the smaller side
    let cutoff = ORIGIN_SPAN * spec.lambda_min;
    let mut slope = f64::INFINITY;
    for (_, idx) in &sides {
        let all: Vec<usize> = if idx[0] >= nh { (nh..2 * nh).collect() } else { (0..nh).rev().collect() };
        let pts: Vec<(f64, f64)> = all
            .into_iter()
            .filter(|&s| spec.signed_lambda(s).0.abs() <= cutoff)
            .map(|s| (n[s * levels], abs[s * levels..(s + 1) * levels].iter().copied().fold(0.0, f64::max)))
            .collect();
        let sl = loglog_slope(&pts).unwrap_or(f64::NAN);
        slope = if sl.is_nan() || slope.is_nan() { f64::NAN } else { slope.min(sl) };
    }
    metrics.push(Metric::new(format!("origin_slope[{tag}]"), slope, Check::AtLeast(e - tol.slope_slack)));

    let pl = paley(&spec, &abs, &n, p);
    metrics.push(Metric::new(format!("paley_ratio[{tag}]"), pl, Check::Finite));
    sweep.push(("paley_ratio".to_string(), pl));

    let wt = weak_type(&spec, &abs, &n, p);
    metrics.push(Metric::new(format!("weak_type_sup[{tag}]"), wt, Check::Finite));
    sweep.push(("weak_type_sup".to_string(), wt));
    Ok(RadiusRun { metrics, sweep })
}

/// The pointwise bound for a finite atomic combination, divided by the proxy
/// norm, over dilations of the whole combination; and its L^p norm.
fn combination(config: &Config, alpha: f64, p: f64) -> Result<Vec<Metric>> {
    let h = &config.hp;
    let mut terms = Vec::new();
    for (&r, &c) in h.combination_radii.iter().zip(&h.combination_coefficients) {
        terms.push((Complex64::new(c, 0.0), build_atom(config, alpha, p, r)?.0));
    }
    let comb = atomic_combination(terms)?;
    let proxy = comb.proxy_norm();
    let r_hi = comb.max_radius();
    let r_lo = h.combination_radii.iter().copied().fold(f64::INFINITY, f64::min);
    let tag = format!("p={}", label(p));
    let mut out = Vec::new();

    // atoms normalized by m(B)^{1/q - 1/p} have ‖a‖_p <= 1, so ‖f‖_p <= proxy for p <= 1
    let n_fine = ((h.atom_n as f64 * r_hi / r_lo).ceil() as usize).min(4 * h.atom_n);
    let f = comb.synthesize(&Arc::new(atom_grid(alpha, r_hi, n_fine)?))?;
    out.push(Metric::new(
        format!("combination_lp_over_proxy[{tag}]"),
        f.lp_norm(p) / proxy,
        Check::AtMost(1.0 + LP_BOUND_TOL),
    ));
    out.push(Metric::measured(format!("combination_cq_bound_over_proxy[{tag}]"), comb.reference_lp_bound() / proxy));
    out.push(Metric::measured(format!("combination_proxy_norm[{tag}]"), proxy));

    // equal radii give equal atoms: transform each radius once
    let mut groups: Vec<(f64, Complex64, &Atom)> = Vec::new();
    for (b, a) in &comb.terms {
        match groups.iter_mut().find(|g| g.0 == a.spec.r) {
            Some(g) => g.1 += b,
            None => groups.push((a.spec.r, *b, a)),
        }
    }
    let e = 0.5 * q_dim(alpha) * (1.0 / p - 1.0);
    let ratios: Vec<Result<f64>> = h
        .radii
        .par_iter()
        .map(|&delta| {
            let spec = atom_spectral_grid(config, alpha, delta * r_lo, delta * r_hi, false)?;
            let mut total = vec![Complex64::new(0.0, 0.0); spec.len()];
            for (r, b, a) in &groups {
                let ad = a.dilated(delta)?;
                let grid = Arc::new(atom_grid(alpha, delta * r, h.atom_n)?);
                let ah = forward(&GridFunction::sample(grid, &ad), &spec)?;
                for (t, v) in total.iter_mut().zip(ah.values()) {
                    *t += b * v;
                }
            }
            let abs: Vec<f64> = total.iter().map(|z| z.norm()).collect();
            Ok(sup_ratio(&abs, &quasinorms(&spec), e) / proxy)
        })
        .collect();
    let ratios = ratios.into_iter().collect::<Result<Vec<f64>>>()?;
    for (delta, v) in h.radii.iter().zip(&ratios) {
        out.push(Metric::new(format!("combination_growth_ratio[{tag},delta={}]", label(*delta)), *v, Check::Finite));
    }
    out.push(Metric::new(
        format!("combination_growth_ratio_stability[{tag}]"),
        stability(&ratios),
        Check::AtMost(config.tolerances.stability),
    ));
    Ok(out)
}

/// The Pitt integral of the Gaussian on the configured grids.
fn pitt(config: &Config, alpha: f64) -> Result<Vec<Metric>> {
    let pp = config.hp.pitt_p;
    let phys = Arc::new(config.physical_grid(alpha)?);
    let spec = Arc::new(config.spectral_grid(alpha)?);
    let f = GridFunction::sample(phys, &Gaussian);
    let fh = forward(&f, &spec)?;
    let integral = paley(&spec, &abs_values(&fh), &quasinorms(&spec), pp);
    let tag = format!("gaussian,p={}", label(pp));
    Ok(vec![
        Metric::new(format!("pitt_integral[{tag}]"), integral, Check::Finite),
        Metric::measured(format!("pitt_ratio[{tag}]"), integral / f.lp_norm(pp).powf(pp)),
    ])
}

/// One report per alpha.
pub fn verify_hp(config: &Config) -> Result<Vec<EstimateReport>> {
    config.alphas().iter().map(|&alpha| verify_hp_alpha(config, alpha)).collect()
}

pub fn verify_hp_alpha(config: &Config, alpha: f64) -> Result<EstimateReport> {
    let h = &config.hp;
    let tol = &config.tolerances;
    let mut r = new_report("hp", config, alpha);
    r.param("q", h.q);
    r.param("radii", h.radii.iter().map(|v| label(*v)).collect::<Vec<_>>().join(" "));
    for &p in &h.p {
        let t = tau(config, alpha, p);
        let (s, eps) = molecule_exponents(alpha, p, t);
        r.param(format!("s[p={}]", label(p)), s);
        r.param(format!("tau[p={}]", label(p)), t);
        r.param(format!("eps[p={}]", label(p)), eps);
        let runs: Vec<Result<RadiusRun>> = h.radii.par_iter().map(|&rad| radius_run(config, alpha, p, rad)).collect();
        let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
        for run in &runs {
            for m in &run.metrics {
                r.push(m.clone());
            }
        }
        for (j, (key, _)) in runs[0].sweep.iter().enumerate() {
            let vals: Vec<f64> = runs.iter().map(|run| run.sweep[j].1).collect();
            let limit = if key == "weak_type_sup" { tol.weak_type_stability } else { tol.stability };
            let name = match key.strip_suffix(']').and_then(|k| k.split_once('[')) {
                Some((base, args)) => format!("{base}_stability[{args},p={}]", label(p)),
                None => format!("{key}_stability[p={}]", label(p)),
            };
            r.push(Metric::new(name, stability(&vals), Check::AtMost(limit)));
        }
        for m in combination(config, alpha, p)? {
            r.push(m);
        }
    }
    for m in pitt(config, alpha)? {
        r.push(m);
    }
    let grids = h.radii.iter().map(|&rad| atom_grid(alpha, rad, h.atom_n)).collect::<Result<Vec<_>>>()?;
    add_grid_checksum(&mut r, &grids.iter().collect::<Vec<_>>());
    Ok(r)
}
