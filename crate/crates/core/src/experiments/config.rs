use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::ChannelParams;
use crate::sgpso::{CodecKind, PsoParams, PsoScale};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Ima,
    Uma,
    Ula,
    Ura,
}

impl Architecture {
    pub const ALL: [Architecture; 4] = [Self::Ima, Self::Uma, Self::Ula, Self::Ura];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Ima => "ima",
            Self::Uma => "uma",
            Self::Ula => "ula",
            Self::Ura => "ura",
        }
    }

    /// Swarm codec for movable architectures.
    pub fn codec_kind(&self) -> Option<CodecKind> {
        match self {
            Self::Ima => Some(CodecKind::Ima),
            Self::Uma => Some(CodecKind::Uma),
            Self::Ula | Self::Ura => None,
        }
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ima" => Ok(Self::Ima),
            "uma" => Ok(Self::Uma),
            "ula" => Ok(Self::Ula),
            "ura" => Ok(Self::Ura),
            other => Err(Error::Config(format!("unknown architecture '{other}'"))),
        }
    }
}

/// A scalar or a list in the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            Self::One(v) => vec![v.clone()],
            Self::Many(v) => v.clone(),
        }
    }
}

impl<T> From<Vec<T>> for OneOrMany<T> {
    fn from(v: Vec<T>) -> Self {
        Self::Many(v)
    }
}

/// Experiment description as written by the user. Every field is optional;
/// [`Settings::resolve`] fills in defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub architecture: Option<OneOrMany<Architecture>>,
    pub n_antennas: Option<OneOrMany<usize>>,
    pub n_devices: Option<OneOrMany<usize>>,
    pub freq_hz: Option<f64>,
    pub kappa: Option<f64>,
    pub side_l: Option<f64>,
    /// Minimum antenna spacing; half a wavelength when absent.
    pub delta: Option<f64>,
    /// Device plane widths. `a_y` defaults to `a_x`; lists pair up.
    pub a_x: Option<OneOrMany<f64>>,
    pub a_y: Option<OneOrMany<f64>>,
    pub a_z: Option<f64>,
    pub p_th: Option<f64>,
    pub pso_scale: Option<PsoScale>,
    pub pso_particles: Option<usize>,
    pub pso_iterations: Option<usize>,
    pub pso_omega_min: Option<f64>,
    pub pso_omega_max: Option<f64>,
    pub pso_c1: Option<f64>,
    pub pso_c2: Option<f64>,
    pub pso_tau: Option<f64>,
    pub pso_skip_sdp_when_penalized: Option<bool>,
    pub sdp_tolerance: Option<f64>,
    pub randomization_count: Option<usize>,
    pub n_deployments: Option<usize>,
}

impl ExperimentConfig {
    /// Parses TOML, or JSON when the file ends in `.json`.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
        .map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Device plane dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub a_x: f64,
    pub a_y: f64,
}

/// Swarm settings before the per-architecture sizing rule is applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsoSettings {
    pub scale: PsoScale,
    pub n_particles: Option<usize>,
    pub n_iterations: Option<usize>,
    pub omega_min: f64,
    pub omega_max: f64,
    pub c1: f64,
    pub c2: f64,
    pub tau: f64,
    pub skip_sdp_when_penalized: bool,
}

impl PsoSettings {
    /// Parameters for search dimension `s` with the given seed.
    pub fn params(&self, s: usize, seed: u64) -> PsoParams {
        let base = PsoParams::for_scale(self.scale, s, seed);
        PsoParams {
            n_particles: self.n_particles.unwrap_or(base.n_particles),
            n_iterations: self.n_iterations.unwrap_or(base.n_iterations),
            omega_min: self.omega_min,
            omega_max: self.omega_max,
            c1: self.c1,
            c2: self.c2,
            tau: self.tau,
            seed,
            skip_sdp_when_penalized: self.skip_sdp_when_penalized,
        }
    }
}

/// Fully resolved experiment settings; written next to the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub seed: u64,
    pub architectures: Vec<Architecture>,
    pub n_antennas: Vec<usize>,
    pub n_devices: Vec<usize>,
    pub freq_hz: f64,
    pub wavelength_m: f64,
    pub kappa: f64,
    pub side_l: f64,
    pub delta: f64,
    pub areas: Vec<Area>,
    pub a_z: f64,
    pub p_th: f64,
    pub pso: PsoSettings,
    pub sdp_tolerance: f64,
    pub randomization_count: usize,
    pub n_deployments: usize,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn non_empty<T>(name: &str, v: Vec<T>) -> Result<Vec<T>> {
    if v.is_empty() {
        Err(Error::Config(format!("{name} must not be empty")))
    } else {
        Ok(v)
    }
}

impl Settings {
    /// Fills defaults: all four architectures, `N = 9`, `K = 3`, 1 GHz,
    /// `κ = 2`, `l = 1 m`, `δ = λ/2`, an 8 m × 8 m plane at 3 m, 1 mW per
    /// device, desk-scale swarm, 10⁴ candidates and 10 deployments.
    pub fn resolve(config: &ExperimentConfig) -> Result<Self> {
        let seed = config
            .seed
            .ok_or_else(|| Error::Config("a seed is required".into()))?;
        let mut architectures = non_empty(
            "architecture",
            config.architecture.as_ref().map(|a| a.to_vec()).unwrap_or_else(|| Architecture::ALL.to_vec()),
        )?;
        architectures.sort();
        architectures.dedup();
        let n_antennas = non_empty("n_antennas", config.n_antennas.as_ref().map(|a| a.to_vec()).unwrap_or(vec![9]))?;
        let n_devices = non_empty("n_devices", config.n_devices.as_ref().map(|a| a.to_vec()).unwrap_or(vec![3]))?;
        if n_antennas.contains(&0) {
            return Err(Error::Config("n_antennas entries must be at least 1".into()));
        }
        if n_devices.contains(&0) {
            return Err(Error::Config("n_devices entries must be at least 1".into()));
        }

        let freq_hz = positive("freq_hz", config.freq_hz.unwrap_or(1e9))?;
        let kappa = config.kappa.unwrap_or(2.0);
        let channel = ChannelParams::from_frequency(freq_hz, kappa).map_err(|e| Error::Config(e.to_string()))?;
        let wavelength_m = channel.wavelength();
        let side_l = positive("side_l", config.side_l.unwrap_or(1.0))?;
        let delta = positive("delta", config.delta.unwrap_or(wavelength_m / 2.0))?;

        let a_x = non_empty("a_x", config.a_x.as_ref().map(|a| a.to_vec()).unwrap_or(vec![8.0]))?;
        let a_y = match &config.a_y {
            Some(v) => non_empty("a_y", v.to_vec())?,
            None => a_x.clone(),
        };
        let a_y = if a_y.len() == 1 && a_x.len() > 1 { vec![a_y[0]; a_x.len()] } else { a_y };
        if a_x.len() != a_y.len() {
            return Err(Error::Config(format!(
                "a_x and a_y pair up and must have equal lengths ({} vs {})",
                a_x.len(),
                a_y.len()
            )));
        }
        let areas: Vec<Area> = a_x.into_iter().zip(a_y).map(|(a_x, a_y)| Area { a_x, a_y }).collect();
        for a in &areas {
            if !(a.a_x >= 0.0 && a.a_y >= 0.0 && a.a_x.is_finite() && a.a_y.is_finite()) {
                return Err(Error::Config(format!("plane dimensions must be non-negative, got {} x {}", a.a_x, a.a_y)));
            }
        }
        let a_z = positive("a_z", config.a_z.unwrap_or(3.0))?;
        let p_th = positive("p_th", config.p_th.unwrap_or(1e-3))?;

        let pso = PsoSettings {
            scale: config.pso_scale.unwrap_or(PsoScale::Desk),
            n_particles: config.pso_particles,
            n_iterations: config.pso_iterations,
            omega_min: config.pso_omega_min.unwrap_or(0.1),
            omega_max: config.pso_omega_max.unwrap_or(1.0),
            c1: config.pso_c1.unwrap_or(1.49),
            c2: config.pso_c2.unwrap_or(1.49),
            tau: config.pso_tau.unwrap_or(1e4),
            skip_sdp_when_penalized: config.pso_skip_sdp_when_penalized.unwrap_or(false),
        };
        pso.params(2, 0).validate().map_err(|e| Error::Config(e.to_string()))?;

        let sdp_tolerance = positive("sdp_tolerance", config.sdp_tolerance.unwrap_or(1e-8))?;
        let randomization_count = config.randomization_count.unwrap_or(10_000);
        if randomization_count == 0 {
            return Err(Error::Config("randomization_count must be at least 1".into()));
        }
        let n_deployments = config.n_deployments.unwrap_or(10);
        if n_deployments == 0 {
            return Err(Error::Config("n_deployments must be at least 1".into()));
        }

        let settings = Self {
            seed,
            architectures,
            n_antennas,
            n_devices,
            freq_hz,
            wavelength_m,
            kappa,
            side_l,
            delta,
            areas,
            a_z,
            p_th,
            pso,
            sdp_tolerance,
            randomization_count,
            n_deployments,
        };
        settings.region().map_err(|e| Error::Config(e.to_string()))?;
        Ok(settings)
    }

    pub fn channel(&self) -> ChannelParams {
        ChannelParams::new(self.wavelength_m, self.kappa).expect("validated on resolve")
    }

    pub fn region(&self) -> Result<crate::geometry::Region> {
        crate::geometry::Region::new(self.side_l, self.delta)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("settings serialize");
        hex::encode(Sha256::digest(&json))
    }
}
