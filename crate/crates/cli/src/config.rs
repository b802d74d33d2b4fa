//! Run configuration: strict JSON files, flag overrides, range validation.
//!
//! A configuration names one campaign plus the parameters it needs. Files
//! are JSON with unknown top-level keys rejected; command-line flags
//! override file values field by field. `parse` then `emit` then `parse`
//! is the identity on validated configurations.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// The campaign to run.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "kebab-case")]
#[clap(rename_all = "kebab-case")]
pub enum Command {
    /// Evaluate the fractional Laplacian of the first field at sample radii.
    Eval,
    /// Verify (or, in the failing regime, demonstrate the breakdown of)
    /// the integration-by-parts identity.
    Ibp,
    /// Classify a list of weight decay exponents as HOLD/FAIL/UNRESOLVED.
    ScanGamma,
    /// Measure the decay of the cutoff-remainder integral.
    Remainder,
    /// Verify mollification convergence in the weighted norm, or its
    /// divergence witness at the window edge.
    Mollify,
    /// Fit far-field decay slopes of the operators against predictions.
    Decay,
    /// Classify weighted-space membership of the first field.
    Membership,
    /// Check symmetry and nonnegativity of the weighted operator.
    Symmetry,
    /// Cross-check quadrature against closed forms and the spectral route.
    OracleCheck,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Eval => "eval",
            Command::Ibp => "ibp",
            Command::ScanGamma => "scan-gamma",
            Command::Remainder => "remainder",
            Command::Mollify => "mollify",
            Command::Decay => "decay",
            Command::Membership => "membership",
            Command::Symmetry => "symmetry",
            Command::OracleCheck => "oracle-check",
        }
    }
}

/// Output format for the main report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[clap(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

/// Construction recipe for a test field (all radial about the origin).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldRecipe {
    /// Smooth nonnegative bump supported on the ball of this radius.
    Bump { radius: f64 },
    /// Gaussian of this width.
    Gaussian { width: f64 },
    /// Riesz potential of a unit bump (needs `d > 2s`).
    Potential { radius: f64 },
    /// `|x|^{-lambda/p}` on the unit ball — the mollification witness.
    InnerPower { lambda: f64 },
}

fn default_fields() -> Vec<FieldRecipe> {
    vec![
        FieldRecipe::Bump { radius: 1.0 },
        FieldRecipe::Bump { radius: 1.0 },
    ]
}

fn default_eps() -> Vec<f64> {
    vec![0.2, 0.1, 0.05]
}

fn default_true() -> bool {
    true
}

/// One validated run: campaign, parameters, weight, fields, quadrature
/// overrides. Serializes to the strict JSON config format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub d: usize,
    pub s: f64,
    pub p: f64,
    #[serde(default)]
    pub gamma0: f64,
    #[serde(default)]
    pub gamma: f64,
    /// Exponent list for `scan-gamma`.
    #[serde(default)]
    pub gammas: Vec<f64>,
    /// Plateau scales for `remainder`.
    #[serde(default)]
    pub scales: Vec<f64>,
    /// Mollification scales for `mollify` (strictly decreasing).
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    /// Weight exponent for `mollify` (the pure power `|x|^lambda`).
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Test fields; campaigns use the first one or two.
    #[serde(default = "default_fields")]
    pub fields: Vec<FieldRecipe>,
    /// Relative quadrature tolerance override.
    #[serde(default)]
    pub tol: Option<f64>,
    /// Subdivision budget override.
    #[serde(default)]
    pub budget: Option<usize>,
    /// Enforce the weighted-space membership precondition for `ibp`
    /// (on by default; waiving it is the explicit act).
    #[serde(default = "default_true")]
    pub require_membership: bool,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config: RunConfig = serde_json::from_str(&text)?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("config serializes");
        out.push('\n');
        out
    }

    /// Range validation shared by file and flag paths. Field recipes are
    /// validated structurally; campaign-specific domain conditions (for
    /// example the breakdown window) stay with the campaigns themselves.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.d >= 1 && self.d <= 3) {
            return Err(ConfigError::Invalid(format!(
                "d must be 1, 2, or 3, got {}",
                self.d
            )));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(ConfigError::Invalid(format!(
                "s must lie in (0, 1), got {}",
                self.s
            )));
        }
        let needs_p_two = matches!(
            self.command,
            Command::Ibp | Command::ScanGamma | Command::Remainder | Command::Symmetry
        );
        if needs_p_two && !(self.p >= 2.0) {
            return Err(ConfigError::Invalid(format!(
                "{} requires p >= 2, got {}",
                self.command.as_str(),
                self.p
            )));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(ConfigError::Invalid(format!(
                "p must be a finite number above 1, got {}",
                self.p
            )));
        }
        if !(self.gamma0 >= 0.0 && self.gamma0 < self.d as f64) {
            return Err(ConfigError::Invalid(format!(
                "gamma0 must lie in [0, d) = [0, {}), got {}",
                self.d, self.gamma0
            )));
        }
        if !self.gamma.is_finite() {
            return Err(ConfigError::Invalid(format!(
                "gamma must be finite, got {}",
                self.gamma
            )));
        }
        for recipe in &self.fields {
            match recipe {
                FieldRecipe::Bump { radius } | FieldRecipe::Potential { radius } => {
                    if !(*radius > 0.0 && radius.is_finite()) {
                        return Err(ConfigError::Invalid(format!(
                            "field radius must be positive, got {radius}"
                        )));
                    }
                }
                FieldRecipe::Gaussian { width } => {
                    if !(*width > 0.0 && width.is_finite()) {
                        return Err(ConfigError::Invalid(format!(
                            "gaussian width must be positive, got {width}"
                        )));
                    }
                }
                FieldRecipe::InnerPower { lambda } => {
                    if !lambda.is_finite() {
                        return Err(ConfigError::Invalid(
                            "inner-power exponent must be finite".into(),
                        ));
                    }
                }
            }
        }
        match self.command {
            Command::ScanGamma => {
                if self.gammas.is_empty() {
                    return Err(ConfigError::Invalid(
                        "scan-gamma needs a nonempty gammas list".into(),
                    ));
                }
            }
            Command::Remainder => {
                if self.scales.len() < 4 {
                    return Err(ConfigError::Invalid(
                        "remainder needs at least 4 scales".into(),
                    ));
                }
            }
            Command::Mollify => {
                if self.lambda.is_none() {
                    return Err(ConfigError::Invalid(
                        "mollify needs a lambda exponent".into(),
                    ));
                }
                if self.eps.is_empty() {
                    return Err(ConfigError::Invalid(
                        "mollify needs a nonempty eps list".into(),
                    ));
                }
            }
            Command::Ibp | Command::Symmetry => {
                if self.fields.len() < 2 {
                    return Err(ConfigError::Invalid(format!(
                        "{} needs two field recipes",
                        self.command.as_str()
                    )));
                }
            }
            _ => {}
        }
        if self.fields.is_empty() {
            return Err(ConfigError::Invalid("at least one field is required".into()));
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(ConfigError::Invalid(format!(
                    "tol must lie in (0, 1), got {tol}"
                )));
            }
        }
        if self.budget == Some(0) {
            return Err(ConfigError::Invalid("budget must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> RunConfig {
        RunConfig {
            command: Command::Ibp,
            d: 1,
            s: 0.5,
            p: 2.0,
            gamma0: 0.0,
            gamma: 0.0,
            gammas: vec![],
            scales: vec![],
            eps: default_eps(),
            lambda: None,
            fields: default_fields(),
            tol: None,
            budget: None,
            require_membership: false,
        }
    }

    #[test]
    fn minimal_ibp_config_is_valid() {
        minimal().validate().unwrap();
    }

    #[test]
    fn range_guards_reject_bad_values() {
        let mut c = minimal();
        c.s = 1.2;
        assert!(c.validate().is_err());
        let mut c = minimal();
        c.gamma0 = 1.0; // = d
        assert!(c.validate().is_err());
        let mut c = minimal();
        c.p = 1.5; // ibp needs p >= 2
        assert!(c.validate().is_err());
        let mut c = minimal();
        c.command = Command::Decay;
        c.p = 1.25; // decay allows p in (1, 2)
        c.validate().unwrap();
    }

    #[test]
    fn json_round_trip_is_identity() {
        let mut c = minimal();
        c.command = Command::ScanGamma;
        c.gammas = vec![1.0, 2.0, 3.5];
        c.validate().unwrap();
        let text = c.to_json();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"command":"ibp","d":1,"s":0.5,"p":2.0,"frobnicate":1}"#;
        let parsed: Result<RunConfig, _> = serde_json::from_str(text);
        assert!(parsed.is_err());
    }
}
