//! SDP-guided particle swarm over antenna layouts.
//!
//! Each particle encodes a layout (see [`Codec`]). Its fitness is the
//! transmit power the precoder module allocates for that layout plus a
//! penalty `τ` per pair of antennas closer than the minimum spacing. All
//! randomness comes from per-(particle, iteration) streams, so a run is
//! reproducible regardless of how evaluations are scheduled.

mod codec;

pub use codec::{Codec, CodecKind};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{channel_matrix, ChannelParams};
use crate::geometry::{count_spacing_violations, AntennaLayout, Deployment};
use crate::precoder::{PowerAllocation, PowerAllocator};
use crate::rng::{stream, Purpose};
use crate::{Error, Result};

/// Preset swarm sizes as a function of the search dimension `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsoScale {
    /// `M = min(30, 10S)`, `I = 50S`.
    Desk,
    /// `M = min(150, 10S)`, `I = 200S`.
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsoParams {
    pub n_particles: usize,
    pub n_iterations: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub c1: f64,
    pub c2: f64,
    /// Penalty per violating antenna pair.
    pub tau: f64,
    pub seed: u64,
    /// Skip the power allocation for penalized particles.
    pub skip_sdp_when_penalized: bool,
}

impl PsoParams {
    /// Defaults for search dimension `s`: `ω ∈ [0.1, 1]`, `c1 = c2 = 1.49`,
    /// `τ = 10⁴`.
    pub fn for_scale(scale: PsoScale, s: usize, seed: u64) -> Self {
        let (cap, per_dim) = match scale {
            PsoScale::Desk => (30, 50),
            PsoScale::Paper => (150, 200),
        };
        Self {
            n_particles: cap.min(10 * s),
            n_iterations: per_dim * s,
            omega_min: 0.1,
            omega_max: 1.0,
            c1: 1.49,
            c2: 1.49,
            tau: 1e4,
            seed,
            skip_sdp_when_penalized: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::invalid("the swarm needs at least one particle"));
        }
        if !(0.0 < self.omega_min && self.omega_min <= self.omega_max && self.omega_max.is_finite()) {
            return Err(Error::invalid(format!(
                "inertia range must satisfy 0 < ω_min ≤ ω_max, got [{}, {}]",
                self.omega_min, self.omega_max
            )));
        }
        if !(self.c1 >= 0.0 && self.c2 >= 0.0 && self.c1.is_finite() && self.c2.is_finite()) {
            return Err(Error::invalid("learning factors must be finite and non-negative"));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::invalid(format!("penalty must be positive, got {}", self.tau)));
        }
        Ok(())
    }
}

/// `ω_max − (ω_max − ω_min)·i/I`; `ω_max` when `I = 0`.
pub fn inertia_weight(iteration: usize, params: &PsoParams) -> f64 {
    if params.n_iterations == 0 {
        return params.omega_max;
    }
    let t = iteration as f64 / params.n_iterations as f64;
    params.omega_max - (params.omega_max - params.omega_min) * t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub pbest: Vec<f64>,
    pub pbest_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub gbest: Vec<f64>,
    pub gbest_fitness: f64,
    pub iteration: usize,
    pub fitness_trace: Vec<f64>,
}

impl SwarmState {
    /// Particles at the given positions with zero velocity and no bests yet.
    pub fn new(positions: Vec<Vec<f64>>) -> Self {
        let gbest = positions.first().cloned().unwrap_or_default();
        let particles = positions
            .into_iter()
            .map(|q| Particle {
                velocity: vec![0.0; q.len()],
                pbest: q.clone(),
                position: q,
                pbest_fitness: f64::INFINITY,
            })
            .collect();
        Self { particles, gbest, gbest_fitness: f64::INFINITY, iteration: 0, fitness_trace: Vec::new() }
    }

    /// Personal and global best updates for one round of fitness values,
    /// then appends the global best to the trace. Improvements must be
    /// strict; among equal minima the lowest index wins. Returns the index
    /// of the particle that became the global best, if any.
    pub fn update_bests(&mut self, fitnesses: &[f64]) -> Result<Option<usize>> {
        if fitnesses.len() != self.particles.len() {
            return Err(Error::invalid("one fitness value per particle"));
        }
        for (p, &f) in self.particles.iter_mut().zip(fitnesses) {
            if f < p.pbest_fitness {
                p.pbest_fitness = f;
                p.pbest.clone_from(&p.position);
            }
        }
        let mut winner = None;
        let mut best = self.gbest_fitness;
        for (m, &f) in fitnesses.iter().enumerate() {
            if f < best {
                best = f;
                winner = Some(m);
            }
        }
        if let Some(m) = winner {
            self.gbest_fitness = best;
            self.gbest.clone_from(&self.particles[m].position);
        }
        self.fitness_trace.push(self.gbest_fitness);
        Ok(winner)
    }
}

/// `ωV + c1·E1⊙(pbest − Q) + c2·E2⊙(gbest − Q)` with `E1`, `E2` uniform on
/// `[0, 1)`, drawn coordinate by coordinate (`E1` then `E2`).
pub fn update_velocity<R: rand::Rng + ?Sized>(
    particle: &Particle,
    gbest: &[f64],
    omega: f64,
    params: &PsoParams,
    rng: &mut R,
) -> Vec<f64> {
    particle
        .velocity
        .iter()
        .zip(&particle.position)
        .zip(particle.pbest.iter().zip(gbest))
        .map(|((v, q), (pb, gb))| {
            let e1: f64 = rng.random();
            let e2: f64 = rng.random();
            omega * v + params.c1 * e1 * (pb - q) + params.c2 * e2 * (gb - q)
        })
        .collect()
}

/// `P(Q + V)` under the codec's projection.
pub fn update_position(position: &[f64], velocity: &[f64], codec: &Codec) -> Vec<f64> {
    let mut q: Vec<f64> = position.iter().zip(velocity).map(|(q, v)| q + v).collect();
    codec.project(&mut q);
    q
}

/// Everything needed to score a layout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessContext<'a> {
    pub deployment: &'a Deployment,
    pub channel: &'a ChannelParams,
    pub allocator: &'a PowerAllocator,
    pub tau: f64,
    pub skip_sdp_when_penalized: bool,
}

/// Outcome of scoring one position.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// `p_tx + τ·|D|`, or `+∞` when no allocation could be found.
    pub fitness: f64,
    pub violations: usize,
    pub allocation: Option<PowerAllocation>,
    pub failure: Option<String>,
}

impl Evaluation {
    fn failed(violations: usize, err: Error) -> Self {
        Self { fitness: f64::INFINITY, violations, allocation: None, failure: Some(err.to_string()) }
    }
}

/// Penalized fitness of a position. Solver failures yield `+∞` and a
/// diagnostic rather than an error.
pub fn evaluate_fitness<R: rand::Rng + ?Sized>(
    position: &[f64],
    codec: &Codec,
    ctx: &FitnessContext<'_>,
    rng: &mut R,
) -> Evaluation {
    let layout = match codec.decode(position) {
        Ok(l) => l,
        Err(e) => return Evaluation::failed(0, e),
    };
    let violations = match codec.kind() {
        CodecKind::Ima => count_spacing_violations(&layout, codec.region().min_spacing()),
        CodecKind::Uma => 0,
    };
    let penalty = ctx.tau * violations as f64;
    if violations > 0 && ctx.skip_sdp_when_penalized {
        return Evaluation { fitness: penalty, violations, allocation: None, failure: None };
    }
    let allocation = channel_matrix(&layout, ctx.deployment, ctx.channel)
        .and_then(|h| ctx.allocator.allocate(&h, ctx.deployment.power_requirements(), rng));
    match allocation {
        Ok(a) if a.p_tx.is_finite() => {
            Evaluation { fitness: a.p_tx + penalty, violations, allocation: Some(a), failure: None }
        }
        Ok(_) => Evaluation::failed(violations, Error::NoFeasibleCandidate),
        Err(e) => Evaluation::failed(violations, e),
    }
}

/// Result of a swarm run.
#[derive(Debug, Clone, PartialEq)]
pub struct SgpsoOutcome {
    pub layout: AntennaLayout,
    pub position: Vec<f64>,
    pub allocation: PowerAllocation,
    pub fitness: f64,
    pub violations: usize,
    /// Global best after the initial evaluation and after every iteration.
    pub fitness_trace: Vec<f64>,
    pub failed_evaluations: usize,
}

/// Runs the swarm for `params.n_iterations` iterations after scoring the
/// random initial swarm. Fails only when no particle ever had finite fitness.
pub fn run_sgpso(
    deployment: &Deployment,
    codec: &Codec,
    params: &PsoParams,
    channel: &ChannelParams,
    allocator: &PowerAllocator,
) -> Result<SgpsoOutcome> {
    params.validate()?;
    let ctx = FitnessContext {
        deployment,
        channel,
        allocator,
        tau: params.tau,
        skip_sdp_when_penalized: params.skip_sdp_when_penalized,
    };
    let m_count = params.n_particles;
    let positions = (0..m_count)
        .map(|m| codec.random_position(&mut stream(params.seed, Purpose::SwarmInit, m as u32, 0)))
        .collect();
    let mut swarm = SwarmState::new(positions);
    let mut best_eval: Option<Evaluation> = None;
    let mut failed = 0usize;

    for i in 0..=params.n_iterations {
        if i > 0 {
            let omega = inertia_weight(i, params);
            let gbest = swarm.gbest.clone();
            for (m, p) in swarm.particles.iter_mut().enumerate() {
                let mut rng = stream(params.seed, Purpose::Velocity, m as u32, i as u32);
                p.velocity = update_velocity(p, &gbest, omega, params, &mut rng);
                p.position = update_position(&p.position, &p.velocity, codec);
            }
        }
        let evals: Vec<Evaluation> = swarm
            .particles
            .par_iter()
            .enumerate()
            .map(|(m, p)| {
                let mut rng = stream(params.seed, Purpose::Randomization, m as u32, i as u32);
                evaluate_fitness(&p.position, codec, &ctx, &mut rng)
            })
            .collect();
        failed += evals.iter().filter(|e| e.failure.is_some()).count();
        let fitnesses: Vec<f64> = evals.iter().map(|e| e.fitness).collect();
        swarm.iteration = i;
        if let Some(m) = swarm.update_bests(&fitnesses)? {
            best_eval = evals.into_iter().nth(m);
        }
    }

    let best = best_eval.ok_or(Error::NoFeasibleParticle)?;
    let layout = codec.decode(&swarm.gbest)?;
    let allocation = match best.allocation {
        Some(a) => a,
        // Only reachable when penalized particles skipped the allocation.
        None => {
            let h = channel_matrix(&layout, deployment, channel)?;
            let mut rng = stream(params.seed, Purpose::Randomization, u32::MAX, u32::MAX);
            allocator.allocate(&h, deployment.power_requirements(), &mut rng)?
        }
    };
    Ok(SgpsoOutcome {
        layout,
        position: swarm.gbest,
        allocation,
        fitness: swarm.gbest_fitness,
        violations: best.violations,
        fitness_trace: swarm.fitness_trace,
        failed_evaluations: failed,
    })
}
