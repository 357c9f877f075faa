//! Pieces shared by the suites: exponents, stability ratios and report headers.

use std::sync::Arc;

use lhk_core::atoms::{atom_grid, default_profile, make_atom, min_moment_order, Atom, AtomSpec};
use lhk_core::quadrature::PhysicalGrid;
use lhk_core::report::EstimateReport;
use lhk_core::{Params, Result};

use crate::config::Config;
use crate::emit::{grid_checksum, text_checksum};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Stated in every report.
pub const PROXY_NOTE: &str = "H^p norms are the atomic proxy (sum |beta_k|^p)^(1/p) over the atomic decomposition, \
not the maximal-function norm. Constants that have no closed form are checked by stability across the dilation sweep.";

/// sup / inf of the values; infinite when some value is zero, NaN when one is not finite.
pub fn stability(values: &[f64]) -> f64 {
    if values.iter().any(|v| !v.is_finite()) {
        return f64::NAN;
    }
    let hi = values.iter().copied().fold(0.0, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    if hi == 0.0 {
        1.0
    } else {
        hi / lo
    }
}

/// Homogeneous dimension Q = 2 alpha + 4.
pub fn q_dim(alpha: f64) -> f64 {
    2.0 * alpha + 4.0
}

/// The smallest even integer tau with tau > Q (1/p - 1/2).
pub fn default_tau(alpha: f64, p: f64) -> f64 {
    let bound = q_dim(alpha) * (1.0 / p - 0.5);
    let mut tau = 2.0;
    while tau <= bound {
        tau += 2.0;
    }
    tau
}

/// The configured molecule decay, or the default for (alpha, p).
pub fn tau(config: &Config, alpha: f64, p: f64) -> f64 {
    config.multiplier.tau.unwrap_or_else(|| default_tau(alpha, p))
}

/// Molecule exponents (s, eps) for decay tau: s = [Q (1/p - 1)], eps = tau / Q - 1/2.
pub fn molecule_exponents(alpha: f64, p: f64, tau: f64) -> (usize, f64) {
    let q = q_dim(alpha);
    let s = (q * (1.0 / p - 1.0) + 1e-9).floor().max(0.0) as usize;
    (s, tau / q - 0.5)
}

/// Short label for parameter values in metric names: 0.25, 1, 0.6667.
pub fn label(v: f64) -> String {
    let r = (v * 1e4).round() / 1e4;
    format!("{r}")
}

/// The default (p, q, s)-atom of radius r with s = [Q (1/p - 1)], built on its
/// n x n construction grid, and that grid.
pub fn default_atom(config: &Config, alpha: f64, p: f64, r: f64, n: usize) -> Result<(Atom, Arc<PhysicalGrid>)> {
    let params = Params::new(alpha)?;
    let spec = AtomSpec::new(&params, p, config.hp.q, min_moment_order(params.q_dim(), p), r)?;
    let grid = Arc::new(atom_grid(alpha, r, n)?);
    let atom = make_atom(&default_profile(&spec, config.hp.bump_k), &spec, &grid)?;
    Ok((atom, grid))
}

/// Header, parameters and provenance common to all reports.
pub fn new_report(suite: &str, config: &Config, alpha: f64) -> EstimateReport {
    let mut r = EstimateReport::new(suite);
    r.note = PROXY_NOTE.to_string();
    r.param("alpha", alpha);
    r.param("Q", q_dim(alpha));
    r.provenance.push(("code_version".into(), CODE_VERSION.into()));
    let cfg = serde_json::to_string(config).expect("config serializes");
    r.provenance.push(("config_sha256".into(), text_checksum(&cfg)));
    r
}

/// Appends the checksum of the grids a report was computed on.
pub fn add_grid_checksum(r: &mut EstimateReport, grids: &[&PhysicalGrid]) {
    r.provenance.push(("grid_sha256".into(), grid_checksum(grids)));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_and_exponents() {
        assert_eq!(default_tau(0.0, 1.0), 4.0);
        assert_eq!(default_tau(1.0, 1.0), 4.0);
        assert_eq!(default_tau(0.0, 2.0 / 3.0), 6.0);
        assert_eq!(default_tau(1.0, 2.0 / 3.0), 8.0);
        assert_eq!(molecule_exponents(0.0, 2.0 / 3.0, 6.0), (2, 1.0));
        let (s, eps) = molecule_exponents(1.0, 2.0 / 3.0, 8.0);
        assert_eq!(s, 3);
        assert!((eps - (8.0 / 6.0 - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn stability_ratio() {
        assert_eq!(stability(&[1.0, 2.0, 1.5]), 2.0);
        assert!(stability(&[1.0, f64::NAN]).is_nan());
        assert_eq!(stability(&[0.0, 0.0]), 1.0);
        assert!(stability(&[0.0, 1.0]).is_infinite());
    }

    proptest::proptest! {
        #[test]
        fn stability_is_scale_free(v in proptest::collection::vec(1e-3f64..1e3, 1..8), c in 1e-3f64..1e3) {
            let s = stability(&v);
            proptest::prop_assert!(s >= 1.0);
            let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
            proptest::prop_assert!((stability(&scaled) / s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn labels_are_short() {
        assert_eq!(label(0.25), "0.25");
        assert_eq!(label(1.0), "1");
        assert_eq!(label(2.0 / 3.0), "0.6667");
    }
}
