//! Run configuration, read from a single JSON document.
//!
//! Every field has a default, so `{}` is a valid configuration.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use lhk_core::quadrature::{required_t_nodes, PhysicalGrid, SpectralGrid};
use lhk_core::{LhkError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub x_max: f64,
    pub t_max: f64,
    pub nx: usize,
    pub nt: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub n_lambda: usize,
    pub m_max: usize,
    /// lambda_max for compactly supported profiles, which are sampled on [0, 1] x [-1/2, 1/2]
    pub compact_lambda_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            x_max: 6.0,
            t_max: 6.0,
            nx: 200,
            nt: 200,
            lambda_min: 1e-6,
            lambda_max: 12.0,
            n_lambda: 400,
            m_max: 128,
            compact_lambda_max: 48.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub plancherel_smooth: f64,
    pub plancherel_compact: f64,
    pub riemann_lebesgue: f64,
    pub eigenrelation: f64,
    pub dilation: f64,
    pub convolution: f64,
    pub stability: f64,
    pub weak_type_stability: f64,
    pub noise_floor: f64,
    pub slope_slack: f64,
    pub identity_ratio: f64,
    pub unimodular_l2: f64,
    pub mihlin_order0: f64,
    pub hormander_slope: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            plancherel_smooth: 1e-6,
            plancherel_compact: 1e-4,
            riemann_lebesgue: 1e-8,
            eigenrelation: 1e-4,
            dilation: 1e-5,
            convolution: 1e-3,
            stability: 2.0,
            weak_type_stability: 3.0,
            noise_floor: 1e-8,
            slope_slack: 0.1,
            identity_ratio: 1e-3,
            unimodular_l2: 1e-4,
            mihlin_order0: 1e-12,
            hormander_slope: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HpConfig {
    /// atom exponents p
    pub p: Vec<f64>,
    pub q: f64,
    /// atom radii of the dilation sweep
    pub radii: Vec<f64>,
    /// bump power of the default atom profile
    pub bump_k: u32,
    /// atom grid nodes per direction
    pub atom_n: usize,
    /// lambda range of the atom spectral grid at r = 1, scaled by r^-2
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub m_max: usize,
    /// radii and coefficients of the atomic combination
    pub combination_radii: Vec<f64>,
    pub combination_coefficients: Vec<f64>,
    pub pitt_p: f64,
}

impl Default for HpConfig {
    fn default() -> Self {
        Self {
            p: vec![1.0, 2.0 / 3.0],
            q: 2.0,
            radii: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            bump_k: 6,
            atom_n: 100,
            lambda_min: 1e-3,
            lambda_max: 48.0,
            m_max: 128,
            combination_radii: vec![1.0, 0.5, 0.75, 0.25, 1.0],
            combination_coefficients: vec![1.0, -0.5, 0.25, 0.8, -0.3],
            pitt_p: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplierEntry {
    /// kind: constant, fractional_L, fractional_IplusL, radial_f_of_N, laplace_of_phi
    pub name: String,
    #[serde(default)]
    pub params: std::collections::BTreeMap<String, f64>,
    /// f for radial_f_of_N (inv1p, exp), phi for laplace_of_phi (indicator, sexp)
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiplierConfig {
    /// multipliers applied to atoms over the radius sweep
    pub catalog: Vec<MultiplierEntry>,
    /// atom exponents p for the molecule sweep
    pub p: Vec<f64>,
    pub radii: Vec<f64>,
    /// molecule decay exponent, checked against tau > Q (1/p - 1/2) for every p and alpha;
    /// the smallest even integer above the bound when absent
    pub tau: Option<f64>,
    pub atom_n: usize,
    /// lambda range of the molecule spectral grid at r = 1, scaled by r^-2
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub m_max: usize,
    /// dyadic radii of the Hormander shells: 2^k for k in the range
    pub shell_exponents: (i32, i32),
}

impl Default for MultiplierConfig {
    fn default() -> Self {
        let entry = |name: &str, params: &[(&str, f64)], function: Option<&str>| MultiplierEntry {
            name: name.into(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            function: function.map(String::from),
        };
        Self {
            catalog: vec![
                entry("fractional_IplusL", &[("s", 1.0)], None),
                entry("fractional_L", &[("s", 1.0)], None),
                entry("radial_f_of_N", &[], Some("inv1p")),
            ],
            p: vec![1.0, 2.0 / 3.0],
            radii: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            tau: None,
            atom_n: 100,
            lambda_min: 1e-6,
            lambda_max: 32.0,
            m_max: 128,
            shell_exponents: (-2, 5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub alpha: OneOrMany,
    pub grid: GridConfig,
    pub tolerances: Tolerances,
    /// catalog profile names for the core suite
    pub profiles: Vec<String>,
    /// suites run by `verify all`
    pub suites: Vec<String>,
    pub hp: HpConfig,
    pub multiplier: MultiplierConfig,
    pub out_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            alpha: OneOrMany::Many(vec![0.0, 1.0]),
            grid: GridConfig::default(),
            tolerances: Tolerances::default(),
            profiles: vec!["gaussian".into(), "bump_4".into(), "polybump_6".into(), "zero".into()],
            suites: vec!["core".into(), "hp".into(), "multiplier".into()],
            hp: HpConfig::default(),
            multiplier: MultiplierConfig::default(),
            out_dir: None,
        }
    }
}

fn invalid(msg: String) -> LhkError {
    LhkError::InvalidParameter(msg)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Config = serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.alpha.values()
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.alphas();
        if a.is_empty() || a.iter().any(|a| !(*a >= 0.0) || !a.is_finite()) {
            return Err(invalid(format!("alpha must be a nonempty list of finite values >= 0, got {a:?}")));
        }
        let g = &self.grid;
        positive("grid.x_max", g.x_max)?;
        positive("grid.t_max", g.t_max)?;
        positive("grid.lambda_min", g.lambda_min)?;
        positive("grid.lambda_max", g.lambda_max)?;
        if g.lambda_min >= g.lambda_max {
            return Err(invalid("grid.lambda_min must be below grid.lambda_max".into()));
        }
        for (name, n) in [("grid.nx", g.nx), ("grid.nt", g.nt), ("grid.n_lambda", g.n_lambda)] {
            if n == 0 {
                return Err(invalid(format!("{name} must be positive")));
            }
        }
        if g.m_max < 8 {
            return Err(invalid(format!("grid.m_max must be at least 8, got {}", g.m_max)));
        }
        let h = &self.hp;
        if h.p.is_empty() || h.p.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
            return Err(invalid(format!("hp.p must lie in (0, 1], got {:?}", h.p)));
        }
        if h.radii.is_empty() {
            return Err(invalid("hp.radii must not be empty".into()));
        }
        for r in h.radii.iter().chain(&h.combination_radii).chain(&self.multiplier.radii) {
            positive("radius", *r)?;
        }
        if h.combination_radii.len() != h.combination_coefficients.len() || h.combination_radii.is_empty() {
            return Err(invalid(
                "hp.combination_radii and hp.combination_coefficients must have equal nonzero length".into(),
            ));
        }
        if !(h.pitt_p > 1.0 && h.pitt_p <= 2.0) {
            return Err(invalid(format!("hp.pitt_p must lie in (1, 2], got {}", h.pitt_p)));
        }
        positive("grid.compact_lambda_max", g.compact_lambda_max)?;
        for (name, lo, hi) in
            [("hp", h.lambda_min, h.lambda_max), ("multiplier", self.multiplier.lambda_min, self.multiplier.lambda_max)]
        {
            positive(&format!("{name}.lambda_min"), lo)?;
            positive(&format!("{name}.lambda_max"), hi)?;
            if lo >= hi {
                return Err(invalid(format!("{name}.lambda_min must be below {name}.lambda_max")));
            }
        }
        if h.atom_n < 20 || self.multiplier.atom_n < 20 {
            return Err(invalid("atom_n must be at least 20".into()));
        }
        let m = &self.multiplier;
        if m.p.is_empty() || m.p.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
            return Err(invalid(format!("multiplier.p must lie in (0, 1], got {:?}", m.p)));
        }
        if m.radii.is_empty() {
            return Err(invalid("multiplier.radii must not be empty".into()));
        }
        if let Some(tau) = m.tau {
            for &alpha in &a {
                let q_dim = 2.0 * alpha + 4.0;
                for &p in &m.p {
                    let bound = q_dim * (1.0 / p - 0.5);
                    if !(tau > bound) || !tau.is_finite() {
                        return Err(invalid(format!(
                            "multiplier.tau = {tau} must exceed Q (1/p - 1/2) = {bound} (alpha {alpha}, p {p})"
                        )));
                    }
                }
            }
        }
        if m.shell_exponents.0 >= m.shell_exponents.1 {
            return Err(invalid("multiplier.shell_exponents must be increasing".into()));
        }
        for s in &self.suites {
            if !["core", "hp", "multiplier"].contains(&s.as_str()) {
                return Err(invalid(format!("unknown suite {s}")));
            }
        }
        Ok(())
    }

    /// Warnings about the grid that do not stop a run.
    pub fn warnings(&self) -> Vec<String> {
        let g = &self.grid;
        let need = required_t_nodes(g.t_max, g.lambda_max);
        if g.nt < need {
            vec![format!(
                "oscillation: nt = {} does not resolve e^(i lambda t) up to lambda_max = {} on [-{}, {}]; need nt >= {need}",
                g.nt, g.lambda_max, g.t_max, g.t_max
            )]
        } else {
            Vec::new()
        }
    }

    pub fn physical_grid(&self, alpha: f64) -> Result<PhysicalGrid> {
        let g = &self.grid;
        PhysicalGrid::build(alpha, g.x_max, g.t_max, g.nx, g.nt)
    }

    pub fn spectral_grid(&self, alpha: f64) -> Result<SpectralGrid> {
        let g = &self.grid;
        SpectralGrid::build(alpha, g.lambda_min, g.lambda_max, g.n_lambda, g.m_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = Config::from_json("{}").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.alphas(), vec![0.0, 1.0]);
        assert!(c.warnings().is_empty());
    }

    #[test]
    fn scalar_alpha_and_partial_blocks() {
        let c = Config::from_json(r#"{"alpha": 1, "grid": {"nx": 50}}"#).unwrap();
        assert_eq!(c.alphas(), vec![1.0]);
        assert_eq!(c.grid.nx, 50);
        assert_eq!(c.grid.nt, 200);
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            r#"{"alpha": -1}"#,
            r#"{"grid": {"lambda_min": 2, "lambda_max": 1}}"#,
            r#"{"grid": {"nx": 0}}"#,
            r#"{"hp": {"p": [1.5]}}"#,
            r#"{"multiplier": {"tau": 3}}"#,
            r#"{"hp": {"lambda_min": 50}}"#,
            r#"{"suites": ["nope"]}"#,
            r#"{"unknown_key": 1}"#,
        ] {
            assert!(Config::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn odd_tau_above_the_bound_is_accepted() {
        // alpha = 0, p = 1: Q (1/p - 1/2) = 2
        let c = Config::from_json(r#"{"alpha": 0, "multiplier": {"p": [1], "tau": 3}}"#).unwrap();
        assert_eq!(c.multiplier.tau, Some(3.0));
    }

    #[test]
    fn doubling_lambda_max_warns_about_oscillation() {
        let mut c = Config::default();
        c.grid.lambda_max *= 2.0;
        assert_eq!(c.warnings().len(), 1);
        assert!(c.warnings()[0].starts_with("oscillation"));
    }
}
