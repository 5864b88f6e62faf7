//! Mission parameters and the quantities derived from them before any trial
//! runs: active fleet size, recovery ratio, and single-sortie feasibility.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::geometry::Point;

fn default_reserve_fraction() -> f64 {
    0.15
}

fn default_timestep() -> f64 {
    0.5
}

fn default_wind_cv() -> f64 {
    0.15
}

fn default_per_leg_noise_halfwidth() -> f64 {
    0.10
}

fn default_cluster_scatter() -> f64 {
    0.3
}

/// Physical mission parameters for one scenario. Durations are minutes,
/// lengths kilometres, speeds km/min.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub site_count: usize,
    pub area_width: f64,
    pub area_height: f64,
    pub base_position: Point,
    pub t_active: f64,
    pub t_charge: f64,
    pub t_scan: f64,
    pub flight_speed: f64,
    #[serde(default = "default_reserve_fraction")]
    pub reserve_fraction: f64,
    #[serde(default = "default_timestep")]
    pub timestep: f64,
    #[serde(default = "default_wind_cv")]
    pub wind_cv: f64,
    #[serde(default = "default_per_leg_noise_halfwidth")]
    pub per_leg_noise_halfwidth: f64,
    /// Standard deviation of the Gaussian scatter of sites around their
    /// generation centre (km).
    #[serde(default = "default_cluster_scatter")]
    pub cluster_scatter: f64,
    /// Number of generation centres; `max(2, m)` when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_centers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_override: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_override: Option<f64>,
}

impl ScenarioConfig {
    /// Minimal config with library defaults for every optional field.
    pub fn new(
        site_count: usize,
        area: (f64, f64),
        base_position: Point,
        t_active: f64,
        t_charge: f64,
        t_scan: f64,
        flight_speed: f64,
    ) -> Self {
        Self {
            name: None,
            site_count,
            area_width: area.0,
            area_height: area.1,
            base_position,
            t_active,
            t_charge,
            t_scan,
            flight_speed,
            reserve_fraction: default_reserve_fraction(),
            timestep: default_timestep(),
            wind_cv: default_wind_cv(),
            per_leg_noise_halfwidth: default_per_leg_noise_halfwidth(),
            cluster_scatter: default_cluster_scatter(),
            cluster_centers: None,
            m_override: None,
            r_override: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, field: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(config(format!("{field} must be positive, got {v}")))
            }
        };
        positive(self.t_active, "t_active")?;
        positive(self.t_charge, "t_charge")?;
        positive(self.flight_speed, "flight_speed")?;
        positive(self.timestep, "timestep")?;
        if !(self.area_width.is_finite() && self.area_width >= 0.0)
            || !(self.area_height.is_finite() && self.area_height >= 0.0)
        {
            return Err(config("area dimensions must be non-negative"));
        }
        if !(self.t_scan.is_finite() && self.t_scan >= 0.0) {
            return Err(config(format!(
                "t_scan must be non-negative, got {}",
                self.t_scan
            )));
        }
        let b = self.base_position;
        if !(0.0..=self.area_width).contains(&b.x) || !(0.0..=self.area_height).contains(&b.y) {
            return Err(config(format!(
                "base_position ({}, {}) lies outside the {}x{} area",
                b.x, b.y, self.area_width, self.area_height
            )));
        }
        if !(0.0..1.0).contains(&self.reserve_fraction) {
            return Err(config(format!(
                "reserve_fraction must lie in [0, 1), got {}",
                self.reserve_fraction
            )));
        }
        if self.timestep > self.t_active {
            return Err(config("timestep must not exceed t_active"));
        }
        if !(self.wind_cv.is_finite() && self.wind_cv >= 0.0) {
            return Err(config(format!(
                "wind_cv must be non-negative, got {}",
                self.wind_cv
            )));
        }
        if !(0.0..1.0).contains(&self.per_leg_noise_halfwidth) {
            return Err(config("per_leg_noise_halfwidth must lie in [0, 1)"));
        }
        if !(self.cluster_scatter.is_finite() && self.cluster_scatter >= 0.0) {
            return Err(config("cluster_scatter must be non-negative"));
        }
        if self.cluster_centers == Some(0) {
            return Err(config("cluster_centers must be at least 1"));
        }
        if self.m_override == Some(0) {
            return Err(config("m_override must be a positive integer"));
        }
        if let Some(r) = self.r_override {
            positive(r, "r_override")?;
        }
        Ok(())
    }

    /// Usable flight time per sortie once the reserve is held back.
    pub fn sortie_budget(&self) -> f64 {
        (1.0 - self.reserve_fraction) * self.t_active
    }

    pub fn reserve_time(&self) -> f64 {
        self.reserve_fraction * self.t_active
    }

    pub fn corners(&self) -> [Point; 4] {
        let (w, h) = (self.area_width, self.area_height);
        [
            Point::new(0.0, 0.0),
            Point::new(w, 0.0),
            Point::new(0.0, h),
            Point::new(w, h),
        ]
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.area_width).contains(&p.x) && (0.0..=self.area_height).contains(&p.y)
    }

    /// Reads a TOML scenario file. Parse errors carry the offending line.
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Parse { line, message, .. } => Error::Parse {
                path: path.to_path_buf(),
                line,
                message,
            },
            Error::Config(message) => Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                message,
            },
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::Parse {
                path: "<string>".into(),
                line,
                message: e.message().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config always serializes")
    }
}

/// Quantities derived from a scenario before simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedMission {
    pub m: u32,
    pub r: f64,
    pub nominal_return_time: f64,
}

/// Transit-aware workload estimate: one scan per site plus one mean
/// nearest-neighbour hop per site under uniform density.
pub fn workload_estimate(cfg: &ScenarioConfig) -> f64 {
    let n = cfg.site_count as f64;
    if n == 0.0 {
        return 0.0;
    }
    let area = cfg.area_width * cfg.area_height;
    let mean_hop = 0.5 * (area / n).sqrt();
    n * cfg.t_scan + n * mean_hop / cfg.flight_speed
}

pub fn derive_active_count(cfg: &ScenarioConfig, workload_estimate: f64) -> Result<u32> {
    if let Some(m) = cfg.m_override {
        return Ok(m);
    }
    let capacity = cfg.sortie_budget();
    if !(capacity > 0.0) {
        return Err(config(format!(
            "per-sortie capacity must be positive, got {capacity}"
        )));
    }
    if !(workload_estimate.is_finite() && workload_estimate > 0.0) {
        return Err(config(format!(
            "workload estimate must be positive, got {workload_estimate}"
        )));
    }
    let m = (workload_estimate / capacity).ceil();
    if m > f64::from(u32::MAX) {
        return Err(config("derived active count overflows"));
    }
    Ok((m as u32).max(1))
}

/// Flight time from base to the farthest corner of the area.
pub fn nominal_return_time(cfg: &ScenarioConfig) -> f64 {
    cfg.corners()
        .iter()
        .map(|c| c.dist(cfg.base_position))
        .fold(0.0, f64::max)
        / cfg.flight_speed
}

pub fn derive_recovery_ratio(cfg: &ScenarioConfig) -> Result<f64> {
    cfg.validate()?;
    if let Some(r) = cfg.r_override {
        return Ok(r);
    }
    let r = (cfg.t_charge + nominal_return_time(cfg)) / cfg.t_active;
    if !(r > 0.0) {
        return Err(config("recovery ratio must be positive"));
    }
    Ok(r)
}

pub fn derive_mission(cfg: &ScenarioConfig) -> Result<DerivedMission> {
    cfg.validate()?;
    if cfg.site_count == 0 {
        return Err(config("site_count must be positive"));
    }
    Ok(DerivedMission {
        m: derive_active_count(cfg, workload_estimate(cfg))?,
        r: derive_recovery_ratio(cfg)?,
        nominal_return_time: nominal_return_time(cfg),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    Feasible,
    /// Indices (into the checked list) of points that cannot be visited and
    /// scanned within one sortie.
    Infeasible {
        offending: Vec<usize>,
    },
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }
}

/// Every site must admit an out-and-back sortie with one scan inside the
/// reserve-adjusted battery budget.
pub fn check_feasibility(cfg: &ScenarioConfig, sites: &[Point]) -> Result<Feasibility> {
    cfg.validate()?;
    if sites.is_empty() {
        return Err(config("site list is empty"));
    }
    let budget = cfg.sortie_budget();
    let offending: Vec<usize> = sites
        .iter()
        .enumerate()
        .filter(|(_, s)| 2.0 * s.dist(cfg.base_position) / cfg.flight_speed + cfg.t_scan > budget)
        .map(|(i, _)| i)
        .collect();
    Ok(if offending.is_empty() {
        Feasibility::Feasible
    } else {
        Feasibility::Infeasible { offending }
    })
}
