//! Run configuration, read from TOML.

use std::path::{Path, PathBuf};

use averager_core::{IntegratorSpec, QuadratureSpec, ShootSettings, SystemParams, UnfoldingParams};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a run needs. Exactly one of `unfolding` and `params` must be set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Recorded with every run; randomized test drivers derive their draws from it.
    /// At most `i64::MAX`, the TOML integer range.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unfolding: Option<UnfoldingParams>,
    /// Direct `(a, b, c)`; only `classify` accepts this mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<SystemParams>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub shooting: ShootSettings,
}

impl Default for RunConfig {
    /// The three-orbit case at `ε = 0.1`.
    fn default() -> Self {
        Self {
            eps: Some(0.1),
            eps_list: None,
            output_dir: None,
            seed: 0,
            unfolding: Some(UnfoldingParams::three_orbit_example()),
            params: None,
            quadrature: QuadratureSpec::default(),
            integrator: IntegratorSpec::default(),
            shooting: ShootSettings::default(),
        }
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Serializes a config that passed [`RunConfig::validate`].
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("validated configs serialize")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        match (&self.unfolding, &self.params) {
            (Some(_), Some(_)) => return bad("set either [unfolding] or [params], not both".into()),
            (None, None) => return bad("one of [unfolding] or [params] is required".into()),
            (Some(u), None) => u.validate().map_err(|e| CliError::Config(e.to_string()))?,
            (None, Some(p)) => {
                if ![p.a, p.b, p.c].iter().all(|v| v.is_finite()) {
                    return bad(format!("non-finite params {p:?}"));
                }
            }
        }
        if self.eps.is_some() && self.eps_list.is_some() {
            return bad("set either eps or eps_list, not both".into());
        }
        if let Some(e) = self.eps {
            if !positive(e) {
                return bad(format!("eps must be positive, got {e}"));
            }
        }
        if let Some(list) = &self.eps_list {
            if list.is_empty() || !list.iter().all(|&e| positive(e)) {
                return bad("eps_list must be a non-empty list of positive numbers".into());
            }
            if !list.windows(2).all(|w| w[1] < w[0]) {
                return bad("eps_list must be strictly decreasing".into());
            }
        }
        if i64::try_from(self.seed).is_err() {
            return bad(format!("seed {} exceeds the TOML integer range", self.seed));
        }
        self.quadrature.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.integrator.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let s = &self.shooting;
        if !(positive(s.shoot_tol) && positive(s.fd_rel) && positive(s.max_return_time) && s.max_iter > 0) {
            return bad(format!("invalid shooting settings {s:?}"));
        }
        Ok(())
    }

    pub fn unfolding(&self, command: &str) -> Result<UnfoldingParams, CliError> {
        self.unfolding
            .ok_or_else(|| CliError::Config(format!("`{command}` needs an [unfolding] section")))
    }

    /// The ε values to run, in order.
    pub fn eps_values(&self, command: &str) -> Result<Vec<f64>, CliError> {
        match (&self.eps, &self.eps_list) {
            (Some(e), None) => Ok(vec![*e]),
            (None, Some(list)) => Ok(list.clone()),
            _ => Err(CliError::Config(format!("`{command}` needs eps or eps_list"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let cfg = RunConfig::from_toml("eps = 0.1\n[unfolding]\na2 = 1.0\nb2 = 5.0\ndelta = 2.0\n").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn partial_sections_fill_defaults() {
        let cfg = RunConfig::from_toml(
            "eps = 0.1\n[unfolding]\na2 = 1.0\nb2 = 5.0\ndelta = 2.0\n[integrator]\nabs_tol = 1e-9\n",
        )
        .unwrap();
        assert_eq!(cfg.integrator.abs_tol, 1e-9);
        assert_eq!(cfg.integrator.rel_tol, IntegratorSpec::default().rel_tol);
    }

    #[test]
    fn rejects_unknown_keys() {
        for text in [
            "eps = 0.1\nfoo = 1\n[unfolding]\na2 = 1.0\nb2 = 5.0\ndelta = 2.0\n",
            "eps = 0.1\n[unfolding]\na2 = 1.0\nb2 = 5.0\ndelta = 2.0\nd = 3.0\n",
            "eps = 0.1\n[unfolding]\na2 = 1.0\nb2 = 5.0\ndelta = 2.0\n[integrator]\ntol = 1.0\n",
        ] {
            assert!(matches!(RunConfig::from_toml(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn rejects_inconsistent_modes() {
        let both = "[unfolding]\na2 = 1.0\nb2 = 5.0\ndelta = 2.0\n[params]\na = 0.0\nb = 0.0\nc = -1.0\n";
        assert!(RunConfig::from_toml(both).is_err());
        assert!(RunConfig::from_toml("eps = 0.1\n").is_err());
        let eps_both = "eps = 0.1\neps_list = [0.1]\n[params]\na = 0.0\nb = 0.0\nc = -1.0\n";
        assert!(RunConfig::from_toml(eps_both).is_err());
        let increasing = "eps_list = [0.05, 0.1]\n[params]\na = 0.0\nb = 0.0\nc = -1.0\n";
        assert!(RunConfig::from_toml(increasing).is_err());
    }

    #[test]
    fn rejects_seed_outside_toml_range() {
        let cfg = RunConfig { seed: u64::MAX, ..RunConfig::default() };
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = RunConfig {
            eps: None,
            eps_list: Some(vec![0.1, 0.05, 0.025, 0.0125]),
            output_dir: Some("out/run".into()),
            seed: 7,
            ..RunConfig::default()
        };
        cfg.integrator.abs_tol = 1.0 / 3.0 * 1e-10;
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
