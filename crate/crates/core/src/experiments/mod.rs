//! Seeded Monte-Carlo sweeps over antenna count, device count and device
//! area, for the movable and fixed architectures, plus result persistence.
//!
//! Deployments depend only on the seed, the plane dimensions and the
//! deployment index, so every architecture and antenna count sees the same
//! devices, and a sweep over `K` uses nested device sets.

mod config;
mod output;

pub use config::{Architecture, Area, ExperimentConfig, OneOrMany, PsoSettings, Settings};
pub use output::{
    nearfield_probability, read_results, sidecar_path, summarize, write_nearfield, write_results, write_summary,
    NearFieldRow, ResultRow, SummaryRow, RESULTS_HEADER,
};

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{channel_matrix, ChannelParams};
use crate::geometry::{
    count_spacing_violations, fixed_ula_positions, fixed_ura_positions, is_near_field, sample_deployment,
    AntennaLayout, Deployment, Region,
};
use crate::precoder::PowerAllocator;
use crate::rng::{derive_seed, stream, Purpose};
use crate::sgpso::{run_sgpso, Codec};
use crate::Result;

/// One point of the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub architecture: Architecture,
    pub n_antennas: usize,
    pub n_devices: usize,
    pub area: Area,
    pub deployment: usize,
}

/// Outcome of one instance. Failures keep `p_t = NaN` and carry a message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub config_hash: String,
    pub architecture: Architecture,
    pub n_antennas: usize,
    pub n_devices: usize,
    pub a_x: f64,
    pub a_y: f64,
    pub a_z: f64,
    pub deployment: usize,
    pub seed: u64,
    pub p_t: f64,
    pub near_field: Vec<bool>,
    pub wall_s: f64,
    pub layout: Option<AntennaLayout>,
    pub violations: usize,
    pub fitness_trace: Vec<f64>,
    pub failure: Option<String>,
}

impl ExperimentRecord {
    pub fn is_success(&self) -> bool {
        self.failure.is_none()
    }

    /// Fraction of this instance's devices in the near field.
    pub fn nf_fraction(&self) -> f64 {
        if self.near_field.is_empty() {
            return f64::NAN;
        }
        self.near_field.iter().filter(|&&f| f).count() as f64 / self.near_field.len() as f64
    }

    pub fn row(&self) -> ResultRow {
        ResultRow {
            arch: self.architecture,
            n: self.n_antennas,
            k: self.n_devices,
            ax: self.a_x,
            ay: self.a_y,
            az: self.a_z,
            deployment: self.deployment,
            seed: self.seed,
            p_t_watts: self.p_t,
            nf_fraction: self.nf_fraction(),
            wall_s: self.wall_s,
        }
    }

    fn sort_key(&self) -> (Architecture, usize, usize, u64, u64, usize) {
        (self.architecture, self.n_antennas, self.n_devices, order_bits(self.a_x), order_bits(self.a_y), self.deployment)
    }
}

/// Monotone map from non-negative floats to integers, for sorting.
fn order_bits(v: f64) -> u64 {
    v.to_bits()
}

/// A validated experiment ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    settings: Settings,
    channel: ChannelParams,
    region: Region,
    allocator: PowerAllocator,
    hash: String,
}

impl Experiment {
    pub fn new(settings: Settings) -> Result<Self> {
        let region = settings.region()?;
        let channel = settings.channel();
        let allocator = PowerAllocator {
            sdp_tolerance: settings.sdp_tolerance,
            candidates: settings.randomization_count,
        };
        let hash = settings.hash();
        Ok(Self { settings, channel, region, allocator, hash })
    }

    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        Self::new(Settings::resolve(config)?)
    }

    pub fn settings(&self) -> &Settings {
        &self.settings
    }

    pub fn channel(&self) -> &ChannelParams {
        &self.channel
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    /// Devices for deployment `d` on the given plane: the first `k` of a
    /// sequence drawn from a stream keyed by the seed, the plane and `d`.
    pub fn deployment(&self, area: Area, k: usize, d: usize) -> Result<Deployment> {
        let s = &self.settings;
        let key = derive_seed(s.seed, &[area.a_x.to_bits(), area.a_y.to_bits(), s.a_z.to_bits()]);
        let mut rng = stream(key, Purpose::Deployment, d as u32, 0);
        sample_deployment(&mut rng, k, area.a_x, area.a_y, s.a_z, s.p_th)
    }

    /// Seed for one instance's optimizer and randomization streams.
    pub fn instance_seed(&self, spec: &InstanceSpec) -> u64 {
        derive_seed(
            self.settings.seed,
            &[
                spec.architecture as u64,
                spec.n_antennas as u64,
                spec.n_devices as u64,
                spec.area.a_x.to_bits(),
                spec.area.a_y.to_bits(),
                self.settings.a_z.to_bits(),
                spec.deployment as u64,
            ],
        )
    }

    /// The Cartesian product of the sweep axes in canonical order.
    pub fn instances(&self) -> Vec<InstanceSpec> {
        let s = &self.settings;
        let mut out = Vec::new();
        for &architecture in &s.architectures {
            for &n_antennas in &s.n_antennas {
                for &n_devices in &s.n_devices {
                    for &area in &s.areas {
                        for deployment in 0..s.n_deployments {
                            out.push(InstanceSpec { architecture, n_antennas, n_devices, area, deployment });
                        }
                    }
                }
            }
        }
        out
    }

    /// Optimizes (movable) or fixes (ULA/URA) the layout for one instance and
    /// allocates power. Errors become a failure record.
    pub fn run_instance(&self, spec: &InstanceSpec, deployment: &Deployment) -> ExperimentRecord {
        let start = Instant::now();
        let seed = self.instance_seed(spec);
        let mut record = ExperimentRecord {
            config_hash: self.hash.clone(),
            architecture: spec.architecture,
            n_antennas: spec.n_antennas,
            n_devices: deployment.len(),
            a_x: spec.area.a_x,
            a_y: spec.area.a_y,
            a_z: self.settings.a_z,
            deployment: spec.deployment,
            seed,
            p_t: f64::NAN,
            near_field: Vec::new(),
            wall_s: 0.0,
            layout: None,
            violations: 0,
            fitness_trace: Vec::new(),
            failure: None,
        };
        match self.solve(spec, deployment, seed) {
            Ok((layout, p_t, violations, trace)) => {
                let lambda = self.channel.wavelength();
                record.near_field = deployment.devices().iter().map(|u| is_near_field(&layout, u, lambda)).collect();
                record.p_t = p_t;
                record.layout = Some(layout);
                record.violations = violations;
                record.fitness_trace = trace;
            }
            Err(e) => record.failure = Some(e.to_string()),
        }
        record.wall_s = start.elapsed().as_secs_f64();
        record
    }

    fn solve(
        &self,
        spec: &InstanceSpec,
        deployment: &Deployment,
        seed: u64,
    ) -> Result<(AntennaLayout, f64, usize, Vec<f64>)> {
        let n = spec.n_antennas;
        if let Some(kind) = spec.architecture.codec_kind() {
            let codec = Codec::new(kind, n, self.region)?;
            let params = self.settings.pso.params(codec.dimension(), seed);
            let out = run_sgpso(deployment, &codec, &params, &self.channel, &self.allocator)?;
            return Ok((out.layout, out.allocation.p_tx, out.violations, out.fitness_trace));
        }
        let layout = match spec.architecture {
            Architecture::Ula => fixed_ula_positions(n, self.settings.delta)?,
            _ => fixed_ura_positions(n, self.settings.delta)?,
        };
        let h = channel_matrix(&layout, deployment, &self.channel)?;
        let mut rng = stream(seed, Purpose::Randomization, 0, 0);
        let a = self.allocator.allocate(&h, deployment.power_requirements(), &mut rng)?;
        let violations = count_spacing_violations(&layout, self.settings.delta);
        Ok((layout, a.p_tx, violations, Vec::new()))
    }

    /// Runs every instance, calling `progress` as each one finishes, and
    /// returns the records in canonical order.
    pub fn sweep_with<F>(&self, progress: F) -> Result<Vec<ExperimentRecord>>
    where
        F: Fn(&ExperimentRecord) + Sync,
    {
        let k_max = self.settings.n_devices.iter().copied().max().unwrap_or(1);
        let mut pools = Vec::new();
        for &area in &self.settings.areas {
            for d in 0..self.settings.n_deployments {
                pools.push(((order_bits(area.a_x), order_bits(area.a_y), d), self.deployment(area, k_max, d)?));
            }
        }
        let lookup = |spec: &InstanceSpec| -> Result<Deployment> {
            let key = (order_bits(spec.area.a_x), order_bits(spec.area.a_y), spec.deployment);
            let full = &pools.iter().find(|(k, _)| *k == key).expect("pool covers every instance").1;
            full.prefix(spec.n_devices)
        };
        let specs = self.instances();
        let mut records = specs
            .par_iter()
            .map(|spec| {
                let record = self.run_instance(spec, &lookup(spec)?);
                progress(&record);
                Ok(record)
            })
            .collect::<Result<Vec<_>>>()?;
        records.sort_by_key(|r| r.sort_key());
        Ok(records)
    }

    pub fn sweep(&self) -> Result<Vec<ExperimentRecord>> {
        self.sweep_with(|_| {})
    }
}
