//! Named test profiles and multipliers.

use std::sync::Arc;

use lhk_core::geometry::MultiIndex;
use lhk_core::multipliers::{build_multiplier, MultiplierKind, MultiplierSpec};
use lhk_core::profile::{BumpPoly, Gaussian, Profile, Zero};
use lhk_core::{LhkError, Result};

use crate::config::MultiplierEntry;

/// Smallest bump power accepted by the catalog.
pub const MIN_BUMP_POWER: u32 = 4;

/// gaussian, zero, bump_k = ((1 - N^4)_+)^k, polybump_k = x^2 t bump_k; all bumps have radius 1.
pub fn profile(name: &str) -> Result<Arc<dyn Profile>> {
    let power = |rest: &str| -> Result<u32> {
        let k: u32 =
            rest.parse().map_err(|_| LhkError::InvalidParameter(format!("bad bump power in profile '{name}'")))?;
        if k < MIN_BUMP_POWER {
            return Err(LhkError::InvalidParameter(format!(
                "profile '{name}': bump power must be at least {MIN_BUMP_POWER}"
            )));
        }
        Ok(k)
    };
    Ok(match name {
        "gaussian" => Arc::new(Gaussian),
        "zero" => Arc::new(Zero),
        _ => {
            if let Some(rest) = name.strip_prefix("bump_") {
                Arc::new(BumpPoly::bump(power(rest)?, 1.0))
            } else if let Some(rest) = name.strip_prefix("polybump_") {
                Arc::new(BumpPoly::monomial(power(rest)?, 1.0, MultiIndex::new(2, 1)))
            } else {
                return Err(LhkError::InvalidParameter(format!("unknown profile '{name}'")));
            }
        }
    })
}

pub fn multiplier(entry: &MultiplierEntry) -> Result<MultiplierSpec> {
    build_multiplier(MultiplierKind::parse(&entry.name, &entry.params, entry.function.as_deref())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lhk_core::DualPoint;
    use std::collections::BTreeMap;

    #[test]
    fn profiles_by_name() {
        assert_eq!(profile("gaussian").unwrap().eval(0.0, 0.0).re, 1.0);
        assert_eq!(profile("bump_4").unwrap().support_radius(), Some(1.0));
        let pb = profile("polybump_6").unwrap();
        assert!((pb.eval(0.5, 0.1).re - 0.25 * 0.1 * (1.0 - 0.0625 - 0.04f64).powi(6)).abs() < 1e-15);
        assert!(profile("bump_2").is_err());
        assert!(profile("bump_x").is_err());
        assert!(profile("nope").is_err());
    }

    #[test]
    fn multipliers_by_entry() {
        let e = MultiplierEntry { name: "radial_f_of_N".into(), params: BTreeMap::new(), function: None };
        let m = multiplier(&e).unwrap();
        let v = m.eval(0.0, DualPoint { lambda: 1.0, m: 0 });
        assert!((v.re - 1.0 / 3.0).abs() < 1e-15);
        let bad = MultiplierEntry { name: "fractional_L".into(), params: BTreeMap::new(), function: None };
        assert!(multiplier(&bad).is_err());
    }
}
