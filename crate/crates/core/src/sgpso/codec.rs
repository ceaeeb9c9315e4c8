use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{
    uma_delta_max, uma_positions, uma_ref_interval, AntennaLayout, Point2, Region, UmaParams,
};
use crate::{Error, Result};

/// How a particle's position vector maps to an antenna layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodecKind {
    /// Independently movable antennas: `[x_0, y_0, x_1, y_1, …]`.
    Ima,
    /// Rigid uniformly-spaced array: `[r_0x, r_0y, β, δ_U]`.
    Uma,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Codec {
    kind: CodecKind,
    n_antennas: usize,
    region: Region,
}

impl Codec {
    pub fn new(kind: CodecKind, n_antennas: usize, region: Region) -> Result<Self> {
        if n_antennas == 0 {
            return Err(Error::invalid("a layout needs at least one antenna"));
        }
        Ok(Self { kind, n_antennas, region })
    }

    pub fn ima(n_antennas: usize, region: Region) -> Result<Self> {
        Self::new(CodecKind::Ima, n_antennas, region)
    }

    pub fn uma(n_antennas: usize, region: Region) -> Result<Self> {
        Self::new(CodecKind::Uma, n_antennas, region)
    }

    pub fn kind(&self) -> CodecKind {
        self.kind
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    /// Number of real coordinates per particle (`S`).
    pub fn dimension(&self) -> usize {
        match self.kind {
            CodecKind::Ima => 2 * self.n_antennas,
            CodecKind::Uma => 4,
        }
    }

    fn spacing_bounds(&self, beta: f64) -> (f64, f64) {
        let lo = self.region.min_spacing();
        let hi = uma_delta_max(beta, self.n_antennas, self.region.side_length());
        // δ_U is immaterial for a single antenna.
        (lo, if hi.is_finite() { hi } else { lo })
    }

    /// Uniform draw within the codec bounds.
    pub fn random_position<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let half = self.region.half_side();
        let mut uniform = |lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
        match self.kind {
            CodecKind::Ima => (0..self.dimension()).map(|_| uniform(-half, half)).collect(),
            CodecKind::Uma => {
                let beta = uniform(0.0, TAU);
                let (lo, hi) = self.spacing_bounds(beta);
                let delta_u = if lo <= hi { uniform(lo, hi) } else { hi };
                let (x, y) = match uma_ref_interval(beta, delta_u, self.n_antennas, self.region.side_length()) {
                    Ok((ix, iy)) => (uniform(ix.lo, ix.hi), uniform(iy.lo, iy.hi)),
                    Err(_) => (0.0, 0.0),
                };
                vec![x, y, beta, delta_u]
            }
        }
    }

    /// Maps a position back into the codec bounds in place.
    ///
    /// IMA clamps every coordinate to the region. UMA wraps `β` to
    /// `[0, 2π)`, clamps `δ_U` to `[δ, δ_U,max(β)]`, then clamps `r_0` to the
    /// admissible interval for that `β` and `δ_U`.
    pub fn project(&self, q: &mut [f64]) {
        let side = self.region.side_length();
        match self.kind {
            CodecKind::Ima => {
                let half = self.region.half_side();
                for v in q.iter_mut() {
                    *v = v.clamp(-half, half);
                }
            }
            CodecKind::Uma => {
                q[2] = q[2].rem_euclid(TAU);
                if q[2] >= TAU {
                    q[2] = 0.0;
                }
                let (lo, hi) = self.spacing_bounds(q[2]);
                q[3] = if lo <= hi { q[3].clamp(lo, hi) } else { hi };
                if let Ok((ix, iy)) = uma_ref_interval(q[2], q[3], self.n_antennas, side) {
                    q[0] = ix.clamp(q[0]);
                    q[1] = iy.clamp(q[1]);
                }
            }
        }
    }

    /// Antenna layout for an in-bounds position.
    pub fn decode(&self, q: &[f64]) -> Result<AntennaLayout> {
        if q.len() != self.dimension() {
            return Err(Error::invalid(format!(
                "position has {} coordinates, codec expects {}",
                q.len(),
                self.dimension()
            )));
        }
        match self.kind {
            CodecKind::Ima => {
                AntennaLayout::new(q.chunks_exact(2).map(|c| Point2::new(c[0], c[1])).collect())
            }
            CodecKind::Uma => {
                let (lo, _) = self.spacing_bounds(q[2]);
                if self.n_antennas > 1 && q[3] < lo * (1.0 - 1e-12) {
                    return Err(Error::invalid(format!(
                        "UMA spacing {} is below the minimum {lo}",
                        q[3]
                    )));
                }
                let params = UmaParams { reference: Point2::new(q[0], q[1]), rotation: q[2], spacing: q[3] };
                uma_positions(&params, self.n_antennas, self.region.side_length())
            }
        }
    }
}
