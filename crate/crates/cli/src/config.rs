//! Config parsing and validation.
//!
//! Configs are TOML with flat scalar keys plus a handful of nested
//! tables (`[initial]`, `[manufactured]`, `[tolerances]`). Unknown keys
//! are rejected, every scalar has a documented default, and validation
//! reports *all* violated invariants, not just the first. Dotted
//! `--set key=value` overrides are applied to the parsed document before
//! deserialization, so they obey exactly the same rules.

use serde::{Deserialize, Serialize};

/// Time-integration scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeChoice {
    Rk4,
    Imex,
}

/// Initial-data family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Random,
    Shear,
    Snapshot,
}

/// Forcing selector for plain runs (the manufactured experiment builds
/// its own forcing).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForcingChoice {
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialData {
    pub family: Family,
    pub amplitude: f64,
    pub seed: u64,
    pub decay: f64,
    /// Snapshot file to start from (required for `family = "snapshot"`).
    pub path: Option<String>,
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData {
            family: Family::Random,
            amplitude: 0.3,
            seed: 1,
            decay: 0.5,
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManufacturedConfig {
    pub amplitude: f64,
    /// Horizontal wavenumber of the stream function.
    pub wave: usize,
    /// Odd power of the vertical profile.
    pub power: u32,
    /// Exponential decay rate of the exact solution.
    pub lambda: f64,
}

impl Default for ManufacturedConfig {
    fn default() -> Self {
        ManufacturedConfig {
            amplitude: 0.05,
            wave: 1,
            power: 5,
            lambda: 5.0,
        }
    }
}

/// Property-check tolerances; every experiment reads its bounds from
/// here so they can be tightened or relaxed per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Max weighted-divergence residual along a run.
    pub constraint: f64,
    /// Max spread of the floor-sweep energy/dissipation score.
    pub uniformity: f64,
    /// Allowed relative deviation of the perturbation ratio from 4.
    pub stability_window: f64,
    /// Allowed relative change of D(T)/D(0) under dt halving.
    pub growth_drift: f64,
    /// Absolute tolerance for the analytic inequality spot values.
    pub spot: f64,
    /// Saturation window for the deepest-floor inequality step.
    pub saturation_low: f64,
    pub saturation_high: f64,
    /// Max ratio variation across the last three floor decades.
    pub variation: f64,
    /// Allowed relative error of fitted decay rates.
    pub decay_rate: f64,
    /// Required error drop per refinement step of the manufactured study.
    pub min_refinement_drop: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            constraint: 1e-6,
            uniformity: 10.0,
            stability_window: 0.2,
            growth_drift: 0.05,
            spot: 1e-10,
            saturation_low: 0.8,
            saturation_high: 1.25,
            variation: 2.0,
            decay_rate: 0.05,
            min_refinement_drop: 2.0,
        }
    }
}

/// Full experiment configuration. Scalar keys sit at the top level;
/// `T` is accepted as an alias for `t_end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Density exponent (ρ = (s+ε)^α).
    pub alpha: f64,
    /// Density floor.
    pub eps: f64,
    /// Smoothing length of the distance mollifier.
    pub delta: f64,
    /// Spectral order of the velocity space.
    pub m: usize,
    /// Spectral order of the density representation (≥ 2·m).
    pub m_rho: usize,
    pub dt: f64,
    #[serde(alias = "T")]
    pub t_end: f64,
    pub scheme: SchemeChoice,
    /// Implicit weight for the imex scheme (1/2 = Crank–Nicolson).
    pub theta: f64,
    /// Record a sample every this many steps.
    pub sample_every: usize,
    /// Re-project onto the constraint every this many steps (0 = off).
    pub reproject_every: usize,
    /// Instability guard: abort when ‖a‖ exceeds this multiple of 1+‖a₀‖.
    pub guard_factor: f64,
    pub initial: InitialData,
    pub forcing: ForcingChoice,
    /// Output directory (joined under `ANELASTIC_OUTPUT_ROOT` when set).
    pub output_dir: String,
    /// Floor values for `sweep-eps` (descending).
    pub eps_list: Vec<f64>,
    /// Orders for `sweep-m` and `manufactured` (ascending).
    pub m_list: Vec<usize>,
    /// Inequality exponents for `hardy`.
    pub hardy_k_list: Vec<f64>,
    /// Floor values for `hardy` (descending).
    pub hardy_eps_list: Vec<f64>,
    /// Perturbation size for `stability`.
    pub perturbation: f64,
    pub perturbation_seed: u64,
    pub manufactured: ManufacturedConfig,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: 2.0,
            eps: 0.5,
            delta: 0.1,
            m: 8,
            m_rho: 32,
            dt: 1e-3,
            t_end: 1.0,
            scheme: SchemeChoice::Imex,
            theta: 0.5,
            sample_every: 10,
            reproject_every: 0,
            guard_factor: 100.0,
            initial: InitialData::default(),
            forcing: ForcingChoice::None,
            output_dir: "out".to_string(),
            eps_list: vec![1.0, 0.1, 0.01],
            m_list: vec![4, 8],
            hardy_k_list: vec![1.0, 0.5, -2.0, -3.0],
            hardy_eps_list: vec![1e-1, 1e-2, 1e-3, 1e-4],
            perturbation: 1e-5,
            perturbation_seed: 77,
            manufactured: ManufacturedConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl RunConfig {
    /// Collect every violated invariant; an empty list means the config
    /// is valid.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            v.push(format!("invariant alpha > 0 violated (got {})", self.alpha));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            v.push("eps must be positive; use sweep-eps toward 0".to_string());
        }
        if !(0.0..=0.45).contains(&self.delta) {
            v.push(format!(
                "invariant 0 ≤ delta ≤ 0.45 violated (got {})",
                self.delta
            ));
        }
        if self.m < 1 {
            v.push(format!("invariant m ≥ 1 violated (got {})", self.m));
        }
        if self.m_rho < 2 * self.m {
            v.push(format!(
                "invariant m_rho ≥ 2·m violated (got m_rho = {}, m = {}): products of order-m fields with the density must be exactly representable",
                self.m_rho, self.m
            ));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            v.push(format!("invariant dt > 0 violated (got {})", self.dt));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            v.push(format!("invariant T ≥ 0 violated (got {})", self.t_end));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            v.push(format!("invariant 0 ≤ theta ≤ 1 violated (got {})", self.theta));
        }
        if self.sample_every < 1 {
            v.push(format!(
                "invariant sample_every ≥ 1 violated (got {})",
                self.sample_every
            ));
        }
        if !(self.guard_factor > 1.0) {
            v.push(format!(
                "invariant guard_factor > 1 violated (got {})",
                self.guard_factor
            ));
        }
        if !(self.initial.amplitude > 0.0) {
            v.push(format!(
                "invariant initial.amplitude > 0 violated (got {})",
                self.initial.amplitude
            ));
        }
        if self.initial.decay < 0.0 {
            v.push(format!(
                "invariant initial.decay ≥ 0 violated (got {})",
                self.initial.decay
            ));
        }
        if self.initial.family == Family::Snapshot && self.initial.path.is_none() {
            v.push("initial.family = \"snapshot\" requires initial.path".to_string());
        }
        if self.eps_list.iter().any(|&e| !(e > 0.0)) {
            v.push("invariant eps_list entries > 0 violated".to_string());
        }
        if self.m_list.iter().any(|&m| m < 1) {
            v.push("invariant m_list entries ≥ 1 violated".to_string());
        }
        if self.hardy_eps_list.iter().any(|&e| !(e > 0.0)) {
            v.push("invariant hardy_eps_list entries > 0 violated".to_string());
        }
        if self
            .hardy_k_list
            .iter()
            .any(|&k| (k + 1.0).abs() < 1e-9 || !k.is_finite())
        {
            v.push(
                "hardy_k_list must avoid the excluded borderline exponent k = -1".to_string(),
            );
        }
        if !(self.perturbation > 0.0) {
            v.push(format!(
                "invariant perturbation > 0 violated (got {})",
                self.perturbation
            ));
        }
        if self.manufactured.power % 2 == 0 || self.manufactured.power == 0 {
            v.push(format!(
                "invariant manufactured.power odd and ≥ 1 violated (got {})",
                self.manufactured.power
            ));
        }
        if !(self.manufactured.lambda > 0.0) {
            v.push(format!(
                "invariant manufactured.lambda > 0 violated (got {})",
                self.manufactured.lambda
            ));
        }
        if !(self.manufactured.amplitude > 0.0) {
            v.push(format!(
                "invariant manufactured.amplitude > 0 violated (got {})",
                self.manufactured.amplitude
            ));
        }
        v
    }

    /// Canonical TOML rendering; hashing and the manifest use this, and
    /// it round-trips through [`parse_config`].
    pub fn canonical_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Apply one `key=value` override with a dotted path into the document.
fn apply_override(doc: &mut toml::Table, spec: &str) -> Result<(), String> {
    let (path, raw_value) = spec
        .split_once('=')
        .ok_or_else(|| format!("override '{spec}' is not of the form key=value"))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(format!("override '{spec}' has an empty key"));
    }
    // Parse the value with TOML syntax; fall back to a bare string.
    let value: toml::Value = match format!("v = {}", raw_value.trim()).parse::<toml::Table>() {
        Ok(t) => t["v"].clone(),
        Err(_) => toml::Value::String(raw_value.trim().to_string()),
    };
    let mut node = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        node = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| format!("override '{spec}': '{part}' is not a table"))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Parse, override, and validate a config. Returns the config or the
/// complete list of problems.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, Vec<String>> {
    let mut doc: toml::Table = text
        .parse()
        .map_err(|e| vec![format!("config is not valid TOML: {e}")])?;
    for spec in overrides {
        apply_override(&mut doc, spec).map_err(|e| vec![e])?;
    }
    let config: RunConfig = toml::Value::Table(doc)
        .try_into()
        .map_err(|e| vec![format!("config rejected: {e}")])?;
    let violations = config.validate();
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(violations)
    }
}
