//! Experiment configuration: a flat `key = value` text format with dotted
//! section keys.
//!
//! Grammar: one `section.key = value` pair per line; `#` starts a comment;
//! blank lines are ignored; unknown keys are errors. Values are plain
//! literals (no quoting): numbers, enum tokens in kebab-case, `none`, or a
//! comma-separated list for the explicit covariance spectrum. The exact key
//! set is documented in the README and mirrored by `ExperimentConfig::to_text`.
//!
//! Every report embeds `config_hash`, the SHA-256 of the canonical JSON
//! serialization of the parsed config, so outputs are traceable to their
//! exact inputs.

use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::dynamics::{Scheme, SolverConfig};
use crate::error::{Error, Result};
use crate::noise::CovarianceSpec;
use crate::spectral::{BasisConvention, DomainSpec};

/// Noise section: covariance profile, seeding and ensemble size.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseConfig {
    /// Spectral decay exponent γ of q_k = amplitude²·λ_k^{−γ}.
    pub gamma: f64,
    /// Overall noise amplitude (scales √q).
    pub amplitude: f64,
    /// Explicit spectrum overriding the decay profile.
    pub q: Option<Vec<f64>>,
    pub seed: u64,
    pub ensemble_size: usize,
    /// ε of the discrete trace-condition check.
    pub trace_epsilon: f64,
}

impl NoiseConfig {
    pub fn covariance(&self, domain: DomainSpec) -> Result<CovarianceSpec> {
        match &self.q {
            Some(q) => CovarianceSpec::from_modes(domain, q.clone()),
            None => Ok(CovarianceSpec::from_scaled_decay(
                domain,
                self.gamma,
                self.amplitude,
            )),
        }
    }
}

/// Analysis section: horizons, event levels, cone and report tolerances.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AnalysisConfig {
    /// Largest wedge grade reported.
    pub k_max: usize,
    /// Forward horizon T.
    pub horizon: f64,
    /// Event smallness level ε on ‖a(θ^s ω)‖_V.
    pub epsilon: f64,
    /// Defect δ of the lower-bound checks.
    pub delta: f64,
    /// Safety factor M > 1 of the tight cone.
    pub safety_m: f64,
    /// Lower-bound checks run on [t_floor, T].
    pub t_floor: f64,
    /// Rejection-sampling budget.
    pub max_trials: u64,
    /// Accepted events collected before stopping early.
    pub target_events: usize,
    pub pullback_tol: f64,
    pub pullback_depth_initial: f64,
    pub pullback_depth_max: f64,
    pub pullback_spread: f64,
    /// Probe frame size for the top exponent.
    pub probe: usize,
    pub reorth_every: usize,
    /// Spacing of recorded report times.
    pub record_every: f64,
    /// Discretization allowance of the upper-bound checks.
    pub tol_disc: f64,
    /// Residual tolerance of cone certificates.
    pub cone_tol: f64,
    /// Sample count of the cutoff-Lipschitz estimator.
    pub lipschitz_samples: usize,
}

/// Output section.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Any of `csv`, `json`.
    pub formats: Vec<String>,
}

/// Full experiment configuration.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub solver: SolverConfig,
    pub noise: NoiseConfig,
    pub analysis: AnalysisConfig,
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Desk-scale defaults: L = 2π in the two-pi convention (λ_k = k²),
    /// N = 64, dt = 1e-3, α = λ₁ + 1.
    pub fn default_desk() -> Self {
        let domain = DomainSpec::new(
            2.0 * std::f64::consts::PI,
            64,
            BasisConvention::PaperTwoPi,
        )
        .expect("static default");
        Self {
            domain,
            solver: SolverConfig::new(1e-3, 2.0),
            noise: NoiseConfig {
                gamma: 1.0,
                amplitude: 1.0,
                q: None,
                seed: 42,
                ensemble_size: 100,
                trace_epsilon: 0.01,
            },
            analysis: AnalysisConfig {
                k_max: 3,
                horizon: 5.0,
                epsilon: 0.2,
                delta: 0.1,
                safety_m: 10.0,
                t_floor: 0.1,
                max_trials: 10_000,
                target_events: 12,
                pullback_tol: 1e-9,
                pullback_depth_initial: 5.0,
                pullback_depth_max: 40.0,
                pullback_spread: 5.0,
                probe: 4,
                reorth_every: 10,
                record_every: 0.1,
                tol_disc: 0.02,
                cone_tol: 1e-4,
                lipschitz_samples: 200,
            },
            output: OutputConfig {
                directory: PathBuf::from("out"),
                formats: vec!["csv".into(), "json".into()],
            },
        }
    }

    /// Re-validate all module-level invariants.
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        self.noise
            .covariance(self.domain)?
            .validate(self.noise.trace_epsilon)?;
        let a = &self.analysis;
        if a.k_max == 0 || a.k_max >= self.domain.modes() {
            return Err(Error::Config(format!(
                "analysis.k_max must lie in 1..N, got {}",
                a.k_max
            )));
        }
        if !(a.horizon > 0.0 && a.t_floor >= 0.0 && a.t_floor < a.horizon) {
            return Err(Error::Config(
                "analysis horizons must satisfy 0 <= t_floor < horizon".into(),
            ));
        }
        if !(a.epsilon > 0.0 && a.delta > 0.0 && a.safety_m > 1.0) {
            return Err(Error::Config(
                "analysis.epsilon, delta must be positive and safety_m > 1".into(),
            ));
        }
        if !(a.pullback_tol > 0.0
            && a.pullback_depth_initial > 0.0
            && a.pullback_depth_max >= a.pullback_depth_initial)
        {
            return Err(Error::Config("pullback settings inconsistent".into()));
        }
        if a.probe == 0 || a.record_every <= 0.0 {
            return Err(Error::Config("probe and record_every must be positive".into()));
        }
        for f in &self.output.formats {
            if f != "csv" && f != "json" {
                return Err(Error::Config(format!("unknown output format {f}")));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex-encoded (first 16 bytes).
    pub fn config_hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canon.as_bytes());
        digest[..16].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Render in the flat key-value format (parse-round-trippable).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let basis = match self.domain.basis() {
            BasisConvention::PaperTwoPi => "paper-two-pi",
            BasisConvention::StandardDirichlet => "standard-dirichlet",
        };
        let scheme = match self.solver.scheme {
            Scheme::ExponentialEuler => "exponential-euler",
            Scheme::SemiImplicitEuler => "semi-implicit-euler",
        };
        s.push_str(&format!("domain.length = {:?}\n", self.domain.length()));
        s.push_str(&format!("domain.modes = {}\n", self.domain.modes()));
        s.push_str(&format!("domain.basis = {basis}\n"));
        s.push_str(&format!("solver.dt = {:?}\n", self.solver.dt));
        s.push_str(&format!("solver.alpha = {:?}\n", self.solver.alpha));
        s.push_str(&format!("solver.scheme = {scheme}\n"));
        match self.solver.cutoff_radius {
            Some(r) => s.push_str(&format!("solver.cutoff_radius = {r:?}\n")),
            None => s.push_str("solver.cutoff_radius = none\n"),
        }
        s.push_str(&format!("noise.gamma = {:?}\n", self.noise.gamma));
        s.push_str(&format!("noise.amplitude = {:?}\n", self.noise.amplitude));
        match &self.noise.q {
            Some(q) => {
                let list: Vec<String> = q.iter().map(|v| format!("{v:?}")).collect();
                s.push_str(&format!("noise.q = {}\n", list.join(",")));
            }
            None => s.push_str("noise.q = none\n"),
        }
        s.push_str(&format!("noise.seed = {}\n", self.noise.seed));
        s.push_str(&format!("noise.ensemble_size = {}\n", self.noise.ensemble_size));
        s.push_str(&format!("noise.trace_epsilon = {:?}\n", self.noise.trace_epsilon));
        let a = &self.analysis;
        s.push_str(&format!("analysis.k_max = {}\n", a.k_max));
        s.push_str(&format!("analysis.horizon = {:?}\n", a.horizon));
        s.push_str(&format!("analysis.epsilon = {:?}\n", a.epsilon));
        s.push_str(&format!("analysis.delta = {:?}\n", a.delta));
        s.push_str(&format!("analysis.safety_m = {:?}\n", a.safety_m));
        s.push_str(&format!("analysis.t_floor = {:?}\n", a.t_floor));
        s.push_str(&format!("analysis.max_trials = {}\n", a.max_trials));
        s.push_str(&format!("analysis.target_events = {}\n", a.target_events));
        s.push_str(&format!("analysis.pullback_tol = {:?}\n", a.pullback_tol));
        s.push_str(&format!(
            "analysis.pullback_depth_initial = {:?}\n",
            a.pullback_depth_initial
        ));
        s.push_str(&format!(
            "analysis.pullback_depth_max = {:?}\n",
            a.pullback_depth_max
        ));
        s.push_str(&format!("analysis.pullback_spread = {:?}\n", a.pullback_spread));
        s.push_str(&format!("analysis.probe = {}\n", a.probe));
        s.push_str(&format!("analysis.reorth_every = {}\n", a.reorth_every));
        s.push_str(&format!("analysis.record_every = {:?}\n", a.record_every));
        s.push_str(&format!("analysis.tol_disc = {:?}\n", a.tol_disc));
        s.push_str(&format!("analysis.cone_tol = {:?}\n", a.cone_tol));
        s.push_str(&format!("analysis.lipschitz_samples = {}\n", a.lipschitz_samples));
        s.push_str(&format!(
            "output.directory = {}\n",
            self.output.directory.display()
        ));
        s.push_str(&format!("output.formats = {}\n", self.output.formats.join(",")));
        s
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("{key}: expected a number, got `{value}`")))
}

fn parse_int<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| Error::Config(format!("{key}: expected an integer, got `{value}`")))
}

/// Parse the flat key-value text into a config, starting from the desk
/// defaults so partial files are valid.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default_desk();
    let mut length = cfg.domain.length();
    let mut modes = cfg.domain.modes();
    let mut basis = cfg.domain.basis();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected `key = value`, got `{raw}`",
                lineno + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "domain.length" => length = parse_f64(key, value)?,
            "domain.modes" => modes = parse_int(key, value)?,
            "domain.basis" => {
                basis = match value {
                    "paper-two-pi" => BasisConvention::PaperTwoPi,
                    "standard-dirichlet" => BasisConvention::StandardDirichlet,
                    other => {
                        return Err(Error::Config(format!("{key}: unknown basis `{other}`")))
                    }
                }
            }
            "solver.dt" => cfg.solver.dt = parse_f64(key, value)?,
            "solver.alpha" => cfg.solver.alpha = parse_f64(key, value)?,
            "solver.scheme" => {
                cfg.solver.scheme = match value {
                    "exponential-euler" => Scheme::ExponentialEuler,
                    "semi-implicit-euler" => Scheme::SemiImplicitEuler,
                    other => {
                        return Err(Error::Config(format!("{key}: unknown scheme `{other}`")))
                    }
                }
            }
            "solver.cutoff_radius" => {
                cfg.solver.cutoff_radius = if value == "none" {
                    None
                } else {
                    Some(parse_f64(key, value)?)
                }
            }
            "noise.gamma" => cfg.noise.gamma = parse_f64(key, value)?,
            "noise.amplitude" => cfg.noise.amplitude = parse_f64(key, value)?,
            "noise.q" => {
                cfg.noise.q = if value == "none" {
                    None
                } else {
                    Some(
                        value
                            .split(',')
                            .map(|v| parse_f64(key, v.trim()))
                            .collect::<Result<_>>()?,
                    )
                }
            }
            "noise.seed" => cfg.noise.seed = parse_int(key, value)?,
            "noise.ensemble_size" => cfg.noise.ensemble_size = parse_int(key, value)?,
            "noise.trace_epsilon" => cfg.noise.trace_epsilon = parse_f64(key, value)?,
            "analysis.k_max" => cfg.analysis.k_max = parse_int(key, value)?,
            "analysis.horizon" => cfg.analysis.horizon = parse_f64(key, value)?,
            "analysis.epsilon" => cfg.analysis.epsilon = parse_f64(key, value)?,
            "analysis.delta" => cfg.analysis.delta = parse_f64(key, value)?,
            "analysis.safety_m" => cfg.analysis.safety_m = parse_f64(key, value)?,
            "analysis.t_floor" => cfg.analysis.t_floor = parse_f64(key, value)?,
            "analysis.max_trials" => cfg.analysis.max_trials = parse_int(key, value)?,
            "analysis.target_events" => cfg.analysis.target_events = parse_int(key, value)?,
            "analysis.pullback_tol" => cfg.analysis.pullback_tol = parse_f64(key, value)?,
            "analysis.pullback_depth_initial" => {
                cfg.analysis.pullback_depth_initial = parse_f64(key, value)?
            }
            "analysis.pullback_depth_max" => {
                cfg.analysis.pullback_depth_max = parse_f64(key, value)?
            }
            "analysis.pullback_spread" => cfg.analysis.pullback_spread = parse_f64(key, value)?,
            "analysis.probe" => cfg.analysis.probe = parse_int(key, value)?,
            "analysis.reorth_every" => cfg.analysis.reorth_every = parse_int(key, value)?,
            "analysis.record_every" => cfg.analysis.record_every = parse_f64(key, value)?,
            "analysis.tol_disc" => cfg.analysis.tol_disc = parse_f64(key, value)?,
            "analysis.cone_tol" => cfg.analysis.cone_tol = parse_f64(key, value)?,
            "analysis.lipschitz_samples" => {
                cfg.analysis.lipschitz_samples = parse_int(key, value)?
            }
            "output.directory" => cfg.output.directory = PathBuf::from(value),
            "output.formats" => {
                cfg.output.formats = value.split(',').map(|v| v.trim().to_string()).collect()
            }
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
    }
    cfg.domain = DomainSpec::new(length, modes, basis)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Load and parse a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = ExperimentConfig::default_desk();
        cfg.validate().unwrap();
        let text = cfg.to_text();
        let back = parse_config(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(cfg.config_hash(), back.config_hash());
    }

    #[test]
    fn partial_config_overrides_defaults() {
        let text = "
# overrides only
solver.alpha = 1.5    # supercritical
noise.seed = 7
analysis.k_max = 2
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.solver.alpha, 1.5);
        assert_eq!(cfg.noise.seed, 7);
        assert_eq!(cfg.analysis.k_max, 2);
        // untouched keys keep their defaults
        assert_eq!(cfg.domain.modes(), 64);
        assert_ne!(
            cfg.config_hash(),
            ExperimentConfig::default_desk().config_hash()
        );
    }

    #[test]
    fn explicit_spectrum_and_none_tokens() {
        let text = "
domain.modes = 4
noise.q = 1.0, 0.5, 0.01, 0.0001
solver.cutoff_radius = 0.5
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.noise.q.as_deref(), Some(&[1.0, 0.5, 0.01, 0.0001][..]));
        assert_eq!(cfg.solver.cutoff_radius, Some(0.5));
        let cov = cfg.noise.covariance(cfg.domain).unwrap();
        assert_eq!(cov.q()[2], 0.01);
    }

    #[test]
    fn bad_inputs_are_config_errors() {
        assert!(matches!(
            parse_config("unknown.key = 3"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            parse_config("solver.dt = fast"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            parse_config("solver.dt -> 0.001"),
            Err(Error::Config(_))
        ));
        // trace condition enforced at validation
        assert!(parse_config("noise.gamma = 0.0").is_err());
        // invariants re-validated
        assert!(parse_config("analysis.k_max = 64").is_err());
    }
}
