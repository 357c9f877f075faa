//! Identities of the transform and the hypergroup: special functions, measures,
//! Plancherel, Riemann-Lebesgue, the eigen-relation, dilation, translation,
//! multiplicativity of characters and the convolution theorem.

use std::f64::consts::PI;
use std::sync::Arc;

use lhk_core::geometry::ball_volume;
use lhk_core::hyperops::{convolve, dilate_function, TranslationRule};
use lhk_core::profile::{inside_ball, BumpPoly, FnProfile, Gaussian, Profile};
use lhk_core::quadrature::{GridFunction, PhysicalGrid, SpectralGrid};
use lhk_core::report::{Check, EstimateReport, Metric};
use lhk_core::specfun::{character, character_dlambda, laguerre_fn, laguerre_poly};
use lhk_core::transform::{
    eigenrelation_defect, forward, forward_at, plancherel_defect, riemann_lebesgue_margin, TransformPair,
};
use lhk_core::{DualPoint, HypergroupPoint, Params, Result};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use super::common::{add_grid_checksum, label, new_report, q_dim};
use crate::catalog;
use crate::config::Config;
use crate::oracle::laguerre_series;

const SEED: u64 = 0x4c48_4b00;
pub const LAGUERRE_SERIES_TOL: f64 = 1e-10;
pub const BALL_CLOSED_FORM_TOL: f64 = 1e-10;
pub const BALL_QUADRATURE_TOL: f64 = 1e-3;
pub const MEASURE_TOL: f64 = 1e-4;
pub const CHARACTER_FD_TOL: f64 = 1e-6;
pub const MULTIPLICATIVITY_TOL: f64 = 1e-6;
pub const GOLDEN_TOL: f64 = 1e-5;
pub const GOLDEN_ZERO_TOL: f64 = 1e-6;
/// |L_m| <= 1 is checked up to this rounding allowance.
pub const UNIMODULAR_BOUND_SLACK: f64 = 1e-12;

fn special_functions(r: &mut EstimateReport, alpha: f64) -> Result<()> {
    // explicit series in exact arithmetic, m <= 30, x in [0, 50]
    let worst = (0..=30usize)
        .into_par_iter()
        .map(|m| {
            (0..=200)
                .map(|j| {
                    let x = 0.25 * j as f64;
                    let exact = laguerre_series(alpha, m, x);
                    (laguerre_poly(alpha, m, x) - exact).abs() / exact.abs()
                })
                .fold(0.0, f64::max)
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0, f64::max);
    r.push(Metric::new("laguerre_series_max_rel_err", worst, Check::AtMost(LAGUERRE_SERIES_TOL)));

    let mut rng = StdRng::seed_from_u64(SEED);
    let mut sup: f64 = 0.0;
    for _ in 0..100_000 {
        let m = rng.gen_range(0..=400usize);
        let v: f64 = rng.gen_range(0.0..1.0);
        let u = 400.0 * v * v * v;
        sup = sup.max(laguerre_fn(alpha, m, u).abs());
    }
    r.push(Metric::new("laguerre_fn_sup_abs", sup, Check::AtMost(1.0 + UNIMODULAR_BOUND_SLACK)));

    let params = Params::new(alpha)?;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let lambda = rng.gen_range(0.2..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let d = DualPoint::new(lambda, rng.gen_range(0..=8))?;
        let p = HypergroupPoint::new(rng.gen_range(0.0..2.0), rng.gen_range(-2.0..2.0))?;
        let h = 1e-3 * lambda.abs();
        let at = |k: f64| character(&params, DualPoint { lambda: lambda + k * h, m: d.m }, p);
        let (m2, m1, z, p1, p2) = (at(-2.0), at(-1.0), at(0.0), at(1.0), at(2.0));
        let fd1 = (m2 - p2 + (p1 - m1) * 8.0) / (12.0 * h);
        let fd2 = (-m2 - p2 + (p1 + m1) * 16.0 - z * 30.0) / (12.0 * h * h);
        for (k, fd) in [(1usize, fd1), (2, fd2)] {
            let an = character_dlambda(&params, d, p, k)?;
            worst = worst.max((an - fd).norm() / an.norm());
        }
    }
    r.push(Metric::new("character_dlambda_fd_max_rel_err", worst, Check::AtMost(CHARACTER_FD_TOL)));
    Ok(())
}

/// Closed forms of gamma({N <= 1}) and int e^{-N} dgamma, known for alpha = 0 and 1.
fn measure_references(alpha: f64) -> Option<(f64, f64)> {
    let pi2 = PI * PI;
    if alpha == 0.0 {
        Some((pi2 / 32.0, pi2 / 16.0))
    } else if alpha == 1.0 {
        Some((pi2 / 576.0, pi2 / 96.0))
    } else {
        None
    }
}

fn measures(r: &mut EstimateReport, alpha: f64, spec: &SpectralGrid, n: usize) -> Result<()> {
    let params = Params::new(alpha)?;
    let closed = ball_volume(&params, 1.0)?;
    r.push(if alpha == 0.0 {
        Metric::new("ball_volume_r1", closed, Check::Within { reference: 0.125, tolerance: BALL_CLOSED_FORM_TOL })
    } else {
        Metric::measured("ball_volume_r1", closed)
    });
    let box_grid = PhysicalGrid::build(alpha, 1.0, 0.5, 2 * n, 2 * n)?;
    let quad: f64 = box_grid.iter().filter(|&(x, t, _)| inside_ball(x, t, 1.0)).map(|(_, _, w)| w).sum();
    r.push(Metric::new("ball_volume_quadrature_err", (quad - closed).abs(), Check::AtMost(BALL_QUADRATURE_TOL)));

    let sub = spec.sublevel_measure(1.0).value();
    let e: Vec<f64> = (0..spec.len()).map(|i| (-spec.quasinorm(i)).exp()).collect();
    let int_e = spec.integrate(&e);
    match measure_references(alpha) {
        Some((s_ref, e_ref)) => {
            r.push(Metric::new(
                "sublevel_measure_N_le_1",
                sub,
                Check::Within { reference: s_ref, tolerance: MEASURE_TOL },
            ));
            r.push(Metric::new(
                "spectral_integral_exp_neg_N",
                int_e,
                Check::Within { reference: e_ref, tolerance: MEASURE_TOL },
            ));
        }
        None => {
            r.push(Metric::measured("sublevel_measure_N_le_1", sub));
            r.push(Metric::measured("spectral_integral_exp_neg_N", int_e));
        }
    }
    Ok(())
}

fn golden(r: &mut EstimateReport, phys: &Arc<PhysicalGrid>) -> Result<()> {
    let f = GridFunction::sample(phys.clone(), &Gaussian);
    let duals: Vec<DualPoint> = (0..=10).map(|m| DualPoint { lambda: 2.0, m }).collect();
    let v = forward_at(&f, &duals)?;
    let reference = (-1.0f64).exp() / (4.0 * PI.sqrt());
    r.push(Metric::new("gaussian_hat_2_0", v[0].re, Check::Within { reference, tolerance: GOLDEN_TOL }));
    let rest = v[1..].iter().map(|z| z.norm()).fold(0.0, f64::max);
    r.push(Metric::new("gaussian_hat_2_m1_to_10_max_abs", rest, Check::AtMost(GOLDEN_ZERO_TOL)));
    Ok(())
}

/// Grids on which a profile is transformed: the configured box for unbounded
/// profiles, the unit ball box with a wider lambda range for compact ones.
pub struct ProfileGrids {
    pub phys: Arc<PhysicalGrid>,
    pub spec: Arc<SpectralGrid>,
    /// box [0, X] x [-T, T]
    extent: (f64, f64),
    compact: bool,
}

pub fn profile_grids(config: &Config, alpha: f64, profile: &dyn Profile) -> Result<ProfileGrids> {
    let g = &config.grid;
    match profile.support_radius().filter(|r| *r > 0.0) {
        Some(rad) => {
            let lmax = g.compact_lambda_max / (rad * rad);
            let n_l = SpectralGrid::required_n_lambda(g.lambda_min, lmax, rad * rad, g.n_lambda);
            Ok(ProfileGrids {
                phys: Arc::new(PhysicalGrid::build(alpha, rad, 0.5 * rad * rad, g.nx, g.nt)?),
                spec: Arc::new(SpectralGrid::build(alpha, g.lambda_min, lmax, n_l, g.m_max)?),
                extent: (rad, 0.5 * rad * rad),
                compact: true,
            })
        }
        None => Ok(ProfileGrids {
            phys: Arc::new(config.physical_grid(alpha)?),
            spec: Arc::new(config.spectral_grid(alpha)?),
            extent: (g.x_max, g.t_max),
            compact: false,
        }),
    }
}

/// max |(f_delta)^(lambda, m) - f^(delta^2 lambda, m)| / max |f^| over a set of duals,
/// with f_delta sampled on the dilated box with its own node counts.
fn dilation_defect(profile: Arc<dyn Profile>, grids: &ProfileGrids, delta: f64) -> Result<f64> {
    let alpha = grids.phys.alpha;
    let (xm, tm) = grids.extent;
    let (nx, nt) = (grids.phys.nx() + 17, grids.phys.nt() + 23);
    let dil_grid = Arc::new(PhysicalGrid::build(alpha, delta * xm, delta * delta * tm, nx, nt)?);
    let dilated = dilate_function(delta, profile.clone(), q_dim(alpha))?;
    let fd = GridFunction::sample(dil_grid, &dilated);
    let f = GridFunction::sample(grids.phys.clone(), profile.as_ref());
    let mut duals_d = Vec::new();
    let mut duals = Vec::new();
    for mu in [0.1, 0.5, 1.0, 2.0, 4.0] {
        for sign in [1.0, -1.0] {
            for m in [0usize, 1, 3, 8] {
                duals_d.push(DualPoint { lambda: sign * mu / (delta * delta), m });
                duals.push(DualPoint { lambda: sign * mu, m });
            }
        }
    }
    let a = forward_at(&fd, &duals_d)?;
    let b = forward_at(&f, &duals)?;
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let diff = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    Ok(if scale == 0.0 { diff } else { diff / scale })
}

fn profile_metrics(config: &Config, alpha: f64, name: &str) -> Result<Vec<Metric>> {
    let tol = &config.tolerances;
    let profile = catalog::profile(name)?;
    let grids = profile_grids(config, alpha, profile.as_ref())?;
    let f = GridFunction::sample(grids.phys.clone(), profile.as_ref());
    let pair = TransformPair::compute(f, &grids.spec)?;
    let mut out = Vec::new();
    let ptol = if grids.compact { tol.plancherel_compact } else { tol.plancherel_smooth };
    out.push(Metric::new(format!("plancherel_defect[{name}]"), plancherel_defect(&pair), Check::AtMost(ptol)));
    out.push(Metric::new(
        format!("riemann_lebesgue_margin[{name}]"),
        riemann_lebesgue_margin(&pair),
        Check::AtLeast(-tol.riemann_lebesgue),
    ));
    if pair.f.max_abs() == 0.0 {
        out.push(Metric::new(format!("transform_max_abs[{name}]"), pair.fhat.max_abs(), Check::AtMost(0.0)));
        out.push(Metric::new(format!("eigenrelation_defect[{name}]"), 0.0, Check::AtMost(tol.eigenrelation)));
        for delta in [0.5, 2.0] {
            out.push(Metric::new(
                format!("dilation_rel_err[{name},delta={}]", label(delta)),
                0.0,
                Check::AtMost(tol.dilation),
            ));
        }
        return Ok(out);
    }
    let eig = eigenrelation_defect(profile.as_ref(), &grids.phys, &grids.spec)?;
    out.push(Metric::new(format!("eigenrelation_defect[{name}]"), eig, Check::AtMost(tol.eigenrelation)));
    for delta in [0.5, 2.0] {
        let d = dilation_defect(profile.clone(), &grids, delta)?;
        out.push(Metric::new(
            format!("dilation_rel_err[{name},delta={}]", label(delta)),
            d,
            Check::AtMost(tol.dilation),
        ));
    }
    Ok(out)
}

/// Relative L^2(dgamma) distance between (f * g)^ and f^ g^ for the Gaussian and bump_4.
fn convolution_defect(alpha: f64) -> Result<f64> {
    let out = Arc::new(PhysicalGrid::build(alpha, 6.0, 7.0, 120, 120)?);
    let small = Arc::new(PhysicalGrid::build(alpha, 1.0, 0.5, 20, 20)?);
    let spec = Arc::new(SpectralGrid::build(alpha, 1e-6, 6.0, 200, 64)?);
    let g = GridFunction::sample(small, &BumpPoly::bump(4, 1.0));
    let rule = TranslationRule::build(alpha, 4, 24)?;
    let fg = convolve(&rule, &out, &Gaussian, &g)?;
    let lhs = forward(&fg, &spec)?;
    let fh = forward(&GridFunction::sample(out, &Gaussian), &spec)?;
    let gh = forward(&g, &spec)?;
    let prod: Vec<Complex64> = fh.values().iter().zip(gh.values()).map(|(a, b)| a * b).collect();
    let diff: Vec<f64> = lhs.values().iter().zip(&prod).map(|(a, b)| (a - b).norm_sqr()).collect();
    let den: Vec<f64> = prod.iter().map(|b| b.norm_sqr()).collect();
    Ok((spec.integrate(&diff) / spec.integrate(&den)).sqrt())
}

fn hypergroup(r: &mut EstimateReport, config: &Config, alpha: f64) -> Result<()> {
    let params = Params::new(alpha)?;
    let rule = TranslationRule::build(alpha, 32, 64)?;
    let mut rng = StdRng::seed_from_u64(SEED + 1);
    let e = HypergroupPoint::new(0.0, 0.0)?;
    let mut ident: f64 = 0.0;
    for name in &config.profiles {
        let f = catalog::profile(name)?;
        for _ in 0..20 {
            let (y, s) = (rng.gen_range(0.0..1.5), rng.gen_range(-1.0..1.0));
            ident = ident.max((rule.translate_at(e, f.as_ref(), y, s) - f.eval(y, s)).norm());
        }
    }
    r.push(Metric::new("translation_identity_max_err", ident, Check::AtMost(0.0)));

    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let lambda = rng.gen_range(0.1..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let d = DualPoint::new(lambda, rng.gen_range(0..=6))?;
        let p = HypergroupPoint::new(rng.gen_range(0.0..1.5), rng.gen_range(-1.5..1.5))?;
        let (y, s) = (rng.gen_range(0.0..1.5), rng.gen_range(-1.5..1.5));
        let phi = FnProfile {
            label: "character".into(),
            f: move |x: f64, t: f64| character(&params, d, HypergroupPoint { x, t }),
        };
        let lhs = rule.translate_at(p, &phi, y, s);
        let rhs = character(&params, d, p) * character(&params, d, HypergroupPoint { x: y, t: s });
        worst = worst.max((lhs - rhs).norm() / rhs.norm());
    }
    r.push(Metric::new("character_multiplicativity_max_rel_err", worst, Check::AtMost(MULTIPLICATIVITY_TOL)));

    let conv = convolution_defect(alpha)?;
    r.push(Metric::new("convolution_rel_err[gaussian*bump_4]", conv, Check::AtMost(config.tolerances.convolution)));
    Ok(())
}

/// One report per alpha.
pub fn verify_core(config: &Config) -> Result<Vec<EstimateReport>> {
    config.alphas().iter().map(|&alpha| verify_core_alpha(config, alpha)).collect()
}

pub fn verify_core_alpha(config: &Config, alpha: f64) -> Result<EstimateReport> {
    let mut r = new_report("core", config, alpha);
    for w in config.warnings() {
        r.param("warning", w);
    }
    r.param("profiles", config.profiles.join(" "));
    let phys = Arc::new(config.physical_grid(alpha)?);
    let spec = config.spectral_grid(alpha)?;
    special_functions(&mut r, alpha)?;
    measures(&mut r, alpha, &spec, config.grid.nx)?;
    if alpha == 0.0 {
        golden(&mut r, &phys)?;
    }
    let per_profile: Vec<Result<Vec<Metric>>> =
        config.profiles.par_iter().map(|name| profile_metrics(config, alpha, name)).collect();
    for m in per_profile {
        for metric in m? {
            r.push(metric);
        }
    }
    hypergroup(&mut r, config, alpha)?;
    add_grid_checksum(&mut r, &[&phys]);
    Ok(r)
}
