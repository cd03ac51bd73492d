//! `key = value` run configuration.
//!
//! ```text
//! # Benchmark data
//! shock.gamma   = 1.5
//! shock.mu      = 0.1
//! shock.k       = 0.5
//! shock.P_plus  = 0.519
//! shock.epsilon = 0.2
//! shock.J_plus  = -0.418
//! ```
//!
//! Exactly one of `shock.P_minus` / `shock.P_plus` and one of `shock.s` /
//! `shock.J_plus` is required. Everything else has a default.

use std::collections::BTreeMap;
use std::path::PathBuf;

use qhd_lab_core::profile::{default_half_length, linear_rates};
use qhd_lab_core::shock_data::lax_end_states;
use qhd_lab_core::ShockParams;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

fn err<T>(line: Option<usize>, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError { line, message: message.into() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainConfig {
    pub half_length: f64,
    /// false when L was defaulted to 40/ε (sweep members then rescale it)
    pub half_length_explicit: bool,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileConfig {
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectraConfig {
    pub xi_max: f64,
    pub n_xi: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenConfig {
    pub n: usize,
    pub half_length: f64,
    pub half_length_explicit: bool,
    pub localization_threshold: f64,
    pub tol_margin: f64,
    pub max_dense: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub shock: ShockParams,
    pub domain: DomainConfig,
    pub profile: ProfileConfig,
    pub spectra: SpectraConfig,
    pub eigen: EigenConfig,
    pub sweep: Option<Vec<f64>>,
    pub output_dir: PathBuf,
}

pub const DEFAULT_OUTPUT_DIR: &str = "qhd-lab-output";

const KEYS: &[&str] = &[
    "shock.gamma",
    "shock.mu",
    "shock.k",
    "shock.P_minus",
    "shock.P_plus",
    "shock.epsilon",
    "shock.s",
    "shock.J_plus",
    "domain.L",
    "domain.n_points",
    "profile.tol",
    "profile.max_iter",
    "spectra.xi_max",
    "spectra.n_xi",
    "eigen.n",
    "eigen.L",
    "eigen.localization_threshold",
    "eigen.tol_margin",
    "eigen.max_dense",
    "sweep.epsilon",
    "output_dir",
];

/// Default eigen-domain half length: ten e-folds of the slowest tail, capped by L.
pub fn default_eigen_half_length(params: &ShockParams, profile_half_length: f64) -> f64 {
    match lax_end_states(params) {
        Ok(es) => (10.0 / linear_rates(params, &es).slowest()).min(profile_half_length),
        Err(_) => profile_half_length,
    }
}

impl RunConfig {
    /// Configuration for the same run at another amplitude (sweep member).
    pub fn member(&self, epsilon: f64) -> Result<RunConfig, ConfigError> {
        let shock = self.shock.with_epsilon(epsilon).map_err(|e| ConfigError { line: None, message: e.to_string() })?;
        let mut out = self.clone();
        out.shock = shock;
        out.sweep = None;
        if !self.domain.half_length_explicit {
            out.domain.half_length = default_half_length(epsilon);
        }
        if !self.eigen.half_length_explicit {
            out.eigen.half_length = default_eigen_half_length(&shock, out.domain.half_length);
        }
        Ok(out)
    }
}

struct Entry {
    line: usize,
    value: String,
}

fn number(e: &Entry, key: &str) -> Result<f64, ConfigError> {
    match e.value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => err(Some(e.line), format!("malformed number for {key}: {:?}", e.value)),
    }
}

fn count(e: &Entry, key: &str) -> Result<usize, ConfigError> {
    e.value
        .parse::<usize>()
        .map_err(|_| ConfigError { line: Some(e.line), message: format!("malformed integer for {key}: {:?}", e.value) })
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
    for (q, raw) in text.lines().enumerate() {
        let line = q + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return err(Some(line), format!("expected `key = value`, got {content:?}"));
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return err(Some(line), format!("unknown key {k:?}"));
        }
        if v.is_empty() {
            return err(Some(line), format!("missing value for {k}"));
        }
        if let Some(prev) = entries.get(k) {
            return err(Some(line), format!("duplicate key {k} (first set on line {})", prev.line));
        }
        entries.insert(k.to_string(), Entry { line, value: v.to_string() });
    }

    let get = |k: &str| entries.get(k);
    let required = |k: &str| -> Result<f64, ConfigError> {
        match get(k) {
            Some(e) => number(e, k),
            None => err(None, format!("missing required key {k}")),
        }
    };
    let either = |a: &'static str, b: &'static str| -> Result<(&'static str, &Entry), ConfigError> {
        match (get(a), get(b)) {
            (Some(e), None) => Ok((a, e)),
            (None, Some(e)) => Ok((b, e)),
            (Some(_), Some(e)) => err(Some(e.line), format!("give only one of {a} and {b}")),
            (None, None) => err(None, format!("missing required key {a} (or {b})")),
        }
    };

    let gamma = required("shock.gamma")?;
    let mu = required("shock.mu")?;
    let k = required("shock.k")?;
    let epsilon = required("shock.epsilon")?;
    let (pk, pe) = either("shock.P_minus", "shock.P_plus")?;
    let (sk, se) = either("shock.s", "shock.J_plus")?;
    let pv = number(pe, pk)?;
    let sv = number(se, sk)?;
    let eps_line = get("shock.epsilon").map(|e| e.line);
    let shock = match (pk, sk) {
        ("shock.P_minus", "shock.s") => ShockParams::new(gamma, mu, k, pv, epsilon, sv),
        ("shock.P_plus", "shock.J_plus") => ShockParams::from_right_state(gamma, mu, k, pv, epsilon, sv),
        ("shock.P_minus", _) => {
            // J⁺ with P⁻: P⁺ = P⁻ − ε, then the same speed solve
            ShockParams::from_right_state(gamma, mu, k, pv - epsilon, epsilon, sv)
        }
        _ => {
            let p_minus = pv + epsilon;
            ShockParams::new(gamma, mu, k, p_minus, epsilon, sv)
        }
    }
    .map_err(|e| ConfigError { line: eps_line, message: e.to_string() })?;

    let opt_num = |key: &str, default: f64| get(key).map(|e| number(e, key)).unwrap_or(Ok(default));
    let opt_count = |key: &str, default: usize| get(key).map(|e| count(e, key)).unwrap_or(Ok(default));
    let positive = |key: &str, v: f64| -> Result<f64, ConfigError> {
        if v > 0.0 {
            Ok(v)
        } else {
            err(get(key).map(|e| e.line), format!("{key} must be > 0, got {v}"))
        }
    };
    let at_least = |key: &str, v: usize, min: usize| -> Result<usize, ConfigError> {
        if v >= min {
            Ok(v)
        } else {
            err(get(key).map(|e| e.line), format!("{key} must be >= {min}, got {v}"))
        }
    };

    let half_length_explicit = get("domain.L").is_some();
    let half_length = positive("domain.L", opt_num("domain.L", default_half_length(epsilon))?)?;
    let domain = DomainConfig {
        half_length,
        half_length_explicit,
        n_points: at_least("domain.n_points", opt_count("domain.n_points", 4001)?, 7)?,
    };
    let profile = ProfileConfig {
        tol: positive("profile.tol", opt_num("profile.tol", 1e-10)?)?,
        max_iter: at_least("profile.max_iter", opt_count("profile.max_iter", 50)?, 1)?,
    };
    let spectra = SpectraConfig {
        xi_max: positive("spectra.xi_max", opt_num("spectra.xi_max", 20.0)?)?,
        n_xi: at_least("spectra.n_xi", opt_count("spectra.n_xi", 4001)?, 3)?,
    };
    let eigen_l_explicit = get("eigen.L").is_some();
    let eigen = EigenConfig {
        n: at_least("eigen.n", opt_count("eigen.n", 2000)?, 7)?,
        half_length: positive("eigen.L", opt_num("eigen.L", default_eigen_half_length(&shock, half_length))?)?,
        half_length_explicit: eigen_l_explicit,
        localization_threshold: positive(
            "eigen.localization_threshold",
            opt_num("eigen.localization_threshold", 0.05)?,
        )?,
        tol_margin: positive("eigen.tol_margin", opt_num("eigen.tol_margin", 1e-6)?)?,
        max_dense: at_least("eigen.max_dense", opt_count("eigen.max_dense", 6000)?, 2)?,
    };
    let sweep = match get("sweep.epsilon") {
        None => None,
        Some(e) => {
            let mut v = Vec::new();
            for part in e.value.split(',') {
                let part = part.trim();
                match part.parse::<f64>() {
                    Ok(x) if x.is_finite() => {
                        if let Err(msg) = shock.with_epsilon(x) {
                            return err(Some(e.line), format!("sweep value {part}: {msg}"));
                        }
                        v.push(x)
                    }
                    _ => return err(Some(e.line), format!("malformed number in sweep.epsilon: {part:?}")),
                }
            }
            Some(v)
        }
    };
    let output_dir = PathBuf::from(get("output_dir").map(|e| e.value.as_str()).unwrap_or(DEFAULT_OUTPUT_DIR));
    Ok(RunConfig { shock, domain, profile, spectra, eigen, sweep, output_dir })
}
