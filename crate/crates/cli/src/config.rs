//! Scenario configuration: a single JSON document describing the users,
//! their covariances, the SNR grid, and the methods to run.

use serde::{Deserialize, Serialize};
use statbeam_core::channel::{exponential_correlation, random_spectrum_covariance};
use statbeam_core::CovarianceMatrix;

/// One covariance, either given literally or built from a named family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceSpec {
    /// Literal Hermitian PSD matrix, `{"dim": M, "re": [[..]], "im": [[..]]}`.
    Inline(CovarianceMatrix),
    /// `Σ_{kl} = scale · r^|k−l|`.
    ExponentialCorrelation { r: f64, scale: f64 },
    /// Given eigenvalues in a seeded Haar-random eigenbasis.
    RandomSpectrum { eigenvalues: Vec<f64>, seed: u64 },
}

impl CovarianceSpec {
    pub fn build(&self, users: usize) -> anyhow::Result<CovarianceMatrix> {
        match self {
            CovarianceSpec::Inline(sigma) => {
                if sigma.dim() != users {
                    anyhow::bail!(
                        "covariances: inline matrix is {}x{} but users = {users}",
                        sigma.dim(),
                        sigma.dim()
                    );
                }
                Ok(sigma.clone())
            }
            CovarianceSpec::ExponentialCorrelation { r, scale } => {
                exponential_correlation(users, *r, *scale)
                    .map_err(|e| anyhow::anyhow!("covariances: {e}"))
            }
            CovarianceSpec::RandomSpectrum { eigenvalues, seed } => {
                if eigenvalues.len() != users {
                    anyhow::bail!(
                        "covariances: spectrum has {} eigenvalues but users = {users}",
                        eigenvalues.len()
                    );
                }
                random_spectrum_covariance(eigenvalues, *seed)
                    .map_err(|e| anyhow::anyhow!("covariances: {e}"))
            }
        }
    }
}

/// Sweep and design methods selectable in a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MethodTag {
    #[serde(rename = "closed-form")]
    ClosedForm,
    #[serde(rename = "monte-carlo")]
    MonteCarlo,
    #[serde(rename = "low-snr")]
    LowSnr,
    #[serde(rename = "high-snr")]
    HighSnr,
    #[serde(rename = "large-M")]
    LargeM,
    #[serde(rename = "design-low-snr")]
    DesignLowSnr,
    #[serde(rename = "design-high-snr")]
    DesignHighSnr,
    #[serde(rename = "design-common-basis")]
    DesignCommonBasis,
    #[serde(rename = "design-fixed-point")]
    DesignFixedPoint,
}

impl MethodTag {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodTag::ClosedForm => "closed-form",
            MethodTag::MonteCarlo => "monte-carlo",
            MethodTag::LowSnr => "low-snr",
            MethodTag::HighSnr => "high-snr",
            MethodTag::LargeM => "large-M",
            MethodTag::DesignLowSnr => "design-low-snr",
            MethodTag::DesignHighSnr => "design-high-snr",
            MethodTag::DesignCommonBasis => "design-common-basis",
            MethodTag::DesignFixedPoint => "design-fixed-point",
        }
    }

    pub fn is_design(self) -> bool {
        matches!(
            self,
            MethodTag::DesignLowSnr
                | MethodTag::DesignHighSnr
                | MethodTag::DesignCommonBasis
                | MethodTag::DesignFixedPoint
        )
    }
}

impl std::fmt::Display for MethodTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MethodTag {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| anyhow::anyhow!("unknown method `{s}`"))
    }
}

fn default_mc_samples() -> usize {
    100_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub users: usize,
    pub covariances: Vec<CovarianceSpec>,
    pub snr_grid_db: Vec<f64>,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// May stay empty for `design`, which takes its method on the command
    /// line; sweeps reject an empty list.
    #[serde(default)]
    pub methods: Vec<MethodTag>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> anyhow::Result<ScenarioConfig> {
        let config = ScenarioConfig::parse(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Parse for the design command, which ignores the method list.
    pub fn from_json_design(text: &str) -> anyhow::Result<ScenarioConfig> {
        let config = ScenarioConfig::parse(text)?;
        config.scenario_checks()?;
        Ok(config)
    }

    fn parse(text: &str) -> anyhow::Result<ScenarioConfig> {
        serde_json::from_str(text).map_err(|e| anyhow::anyhow!("config: {e}"))
    }

    fn scenario_checks(&self) -> anyhow::Result<()> {
        if self.users < 2 {
            anyhow::bail!("users: need at least 2, got {}", self.users);
        }
        if self.covariances.len() != self.users {
            anyhow::bail!(
                "covariances: {} entries for {} users",
                self.covariances.len(),
                self.users
            );
        }
        if self.snr_grid_db.is_empty() {
            anyhow::bail!("snr_grid_db: must not be empty");
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            anyhow::bail!("snr_grid_db: entries must be finite");
        }
        Ok(())
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.scenario_checks()?;
        if self.methods.is_empty() {
            anyhow::bail!("methods: must not be empty");
        }
        if self.methods.contains(&MethodTag::MonteCarlo) && self.mc_samples < 1_000 {
            anyhow::bail!(
                "mc_samples: need at least 1000 for monte-carlo, got {}",
                self.mc_samples
            );
        }
        Ok(())
    }

    /// Materializes the covariance specs, checking dimensions against `users`.
    pub fn build_covariances(&self) -> anyhow::Result<Vec<CovarianceMatrix>> {
        self.covariances.iter().map(|spec| spec.build(self.users)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_json() -> serde_json::Value {
        serde_json::json!({
            "users": 2,
            "covariances": [
                {"exponential-correlation": {"r": 0.5, "scale": 1.0}},
                {"random-spectrum": {"eigenvalues": [2.0, 1.0], "seed": 7}}
            ],
            "snr_grid_db": [0.0, 10.0],
            "mc_samples": 2000,
            "seed": 42,
            "methods": ["closed-form", "monte-carlo"]
        })
    }

    #[test]
    fn parses_and_builds_covariances() {
        let config = ScenarioConfig::from_json(&base_json().to_string()).unwrap();
        let sigmas = config.build_covariances().unwrap();
        assert_eq!(sigmas.len(), 2);
        assert_eq!(sigmas[0].dim(), 2);
        assert!((sigmas[0].entries()[(0, 1)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn inline_covariance_round_trips() {
        let mut value = base_json();
        value["covariances"][0] = serde_json::json!({
            "inline": {"dim": 2, "re": [[2.0, 0.0], [0.0, 1.0]], "im": [[0.0, 0.0], [0.0, 0.0]]}
        });
        let config = ScenarioConfig::from_json(&value.to_string()).unwrap();
        let sigmas = config.build_covariances().unwrap();
        assert_eq!(sigmas[0].entries()[(0, 0)].re, 2.0);
    }

    #[test]
    fn rejects_wrong_covariance_count() {
        let mut value = base_json();
        value["users"] = serde_json::json!(3);
        let err = ScenarioConfig::from_json(&value.to_string()).unwrap_err();
        assert!(err.to_string().contains("covariances"), "{err}");
    }

    #[test]
    fn rejects_empty_snr_grid() {
        let mut value = base_json();
        value["snr_grid_db"] = serde_json::json!([]);
        let err = ScenarioConfig::from_json(&value.to_string()).unwrap_err();
        assert!(err.to_string().contains("snr_grid_db"), "{err}");
    }

    #[test]
    fn rejects_small_mc_sample_count_only_when_mc_requested() {
        let mut value = base_json();
        value["mc_samples"] = serde_json::json!(10);
        let err = ScenarioConfig::from_json(&value.to_string()).unwrap_err();
        assert!(err.to_string().contains("mc_samples"), "{err}");

        value["methods"] = serde_json::json!(["closed-form"]);
        ScenarioConfig::from_json(&value.to_string()).unwrap();
    }

    #[test]
    fn rejects_unknown_method() {
        let mut value = base_json();
        value["methods"] = serde_json::json!(["closed-form", "psychic"]);
        assert!(ScenarioConfig::from_json(&value.to_string()).is_err());
    }

    #[test]
    fn rejects_unknown_top_level_field() {
        let mut value = base_json();
        value["snr_grid"] = serde_json::json!([1.0]);
        let err = ScenarioConfig::from_json(&value.to_string()).unwrap_err();
        assert!(err.to_string().contains("snr_grid"), "{err}");
    }

    #[test]
    fn method_tags_round_trip_spelling() {
        for (tag, text) in [
            (MethodTag::LargeM, "large-M"),
            (MethodTag::DesignFixedPoint, "design-fixed-point"),
            (MethodTag::HighSnr, "high-snr"),
        ] {
            assert_eq!(tag.to_string(), text);
            assert_eq!(text.parse::<MethodTag>().unwrap(), tag);
        }
        assert!("large-m".parse::<MethodTag>().is_err());
    }

    #[test]
    fn mismatched_inline_dimension_fails_at_build() {
        let mut value = base_json();
        value["covariances"][1] = serde_json::json!({
            "inline": {
                "dim": 3,
                "re": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
                "im": [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
            }
        });
        let config = ScenarioConfig::from_json(&value.to_string()).unwrap();
        let err = config.build_covariances().unwrap_err();
        assert!(err.to_string().contains("3x3"), "{err}");
    }
}
