//! Run configuration.
//!
//! A run file holds a `[domain]` table (see `qortho::config`) and optional
//! `[params]`; every key has a default except the domain itself.
//!
//! ```toml
//! [domain]
//! shape = "radial"
//! cos = [1.0]
//! bc = "dirichlet"
//!
//! [params]
//! emax = 200.0
//! ```

use std::path::Path;

use anyhow::{bail, Context, Result};
use qortho::config::DomainConfig;
use qortho::geometry::Domain;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum WeightKind {
    /// `D = r_n`
    Rn,
    /// `D = 1`
    Const,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// Number of lowest analytic modes; overrides `emax` when set.
    pub modes: Option<usize>,
    pub emax: Option<f64>,
    pub krange: Option<[f64; 2]>,
    pub beta: f64,
    /// Window half-width constant `c` in `|E_i - E| <= c E^beta`.
    pub window_c: f64,
    /// Window centers for the decay table.
    pub ladder: Vec<f64>,
    pub weight: WeightKind,
    pub seed: u64,
    /// Boundary nodes; chosen from the largest wavenumber when absent.
    pub nodes: Option<usize>,
    pub interior: usize,
    pub traces: bool,
    pub pairs: usize,
    pub trajectories: usize,
    pub duration: f64,
    pub dt: f64,
    pub segment: usize,
    pub bin_width: f64,
    pub max_omega: f64,
    /// Reference energy of the prediction; the middle of the sweep by default.
    pub fp_energy: Option<f64>,
    /// Largest `|E_i - E_j|` in the generic-weight medians.
    pub max_gap: f64,
    /// Largest `|ω|` in the near-diagonal slope fit.
    pub slope_window: f64,
    /// Allowed `|N - Weyl|`; 3 for closed-form spectra and 2 for sweeps by default.
    pub weyl_tolerance: Option<f64>,
    /// Estimate `C̃(0)` at each candidate origin (`origin` command).
    pub spectra: bool,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            modes: None,
            emax: None,
            krange: None,
            beta: 0.0,
            window_c: 40.0,
            ladder: vec![100.0, 200.0, 400.0],
            weight: WeightKind::Rn,
            seed: 42,
            nodes: None,
            interior: 160,
            traces: false,
            pairs: 20,
            trajectories: 64,
            duration: 1e4,
            dt: 0.05,
            segment: 2048,
            bin_width: 0.2,
            max_omega: 4.0,
            fp_energy: None,
            max_gap: 20.0,
            slope_window: 0.5,
            weyl_tolerance: None,
            spectra: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainConfig>,
    #[serde(default)]
    pub params: Params,
}

impl RunFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn domain(&self) -> Result<Domain> {
        match &self.domain {
            Some(d) => Ok(d.to_domain()?),
            None => bail!("this command needs a domain: pass --config with a [domain] table"),
        }
    }
}

/// Overrides from flags and environment variables.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub emax: Option<f64>,
    pub modes: Option<usize>,
    pub krange: Option<[f64; 2]>,
    pub beta: Option<f64>,
    pub origin: Option<[f64; 2]>,
    pub weight: Option<WeightKind>,
}

impl Overrides {
    pub fn apply(&self, f: &mut RunFile) {
        let p = &mut f.params;
        if let Some(v) = self.seed {
            p.seed = v;
        }
        if let Some(v) = self.emax {
            p.emax = Some(v);
            p.modes = None;
        }
        if let Some(v) = self.modes {
            p.modes = Some(v);
        }
        if let Some(v) = self.krange {
            p.krange = Some(v);
        }
        if let Some(v) = self.beta {
            p.beta = v;
        }
        if let Some(v) = self.weight {
            p.weight = v;
        }
        if let (Some(o), Some(d)) = (self.origin, f.domain.as_mut()) {
            d.origin = o;
        }
    }
}

/// `"x,y"` into two numbers.
pub fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected two comma-separated numbers, got `{s}`"));
    }
    let x = parts[0].parse::<f64>().map_err(|e| format!("`{}`: {e}", parts[0]))?;
    let y = parts[1].parse::<f64>().map_err(|e| format!("`{}`: {e}", parts[1]))?;
    Ok([x, y])
}
