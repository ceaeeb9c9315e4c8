//! Power allocation for a fixed antenna layout.
//!
//! Given channels, find a constant-modulus precoder and the smallest transmit
//! power that meets every device's requirement. For several devices this goes
//! through the semidefinite relaxation followed by Gaussian randomization; a
//! single device is served optimally by maximum-ratio phases.

mod oracle;
mod randomization;
mod sdp;

pub use oracle::grid_oracle;
pub use randomization::gaussian_randomization;
pub use sdp::{solve_maxmin_sdp, solve_maxmin_sdp_with, SdpOptions, SdpSolution};

use nalgebra::DVectorView;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{beam_gain, ChannelMatrix, Precoder};
use crate::{Error, Result, C64};

/// A precoder and the transmit power that satisfies every device with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub precoder: Precoder,
    pub p_tx: f64,
    pub candidates_evaluated: usize,
}

/// Maximum-ratio phases with `p_tx = N·p_th/‖h‖₁²`.
pub fn single_device_power(h: DVectorView<'_, C64>, p_th: f64) -> Result<PowerAllocation> {
    let l1: f64 = h.iter().map(|c| c.norm()).sum();
    if !(l1 > 0.0) {
        return Err(Error::ZeroChannel);
    }
    let precoder = Precoder::matched_to(h);
    let p_tx = h.len() as f64 * p_th / (l1 * l1);
    let channels = ChannelMatrix::from_columns(&[h.iter().copied().collect()])?;
    let p_tx = settle_power(&channels, &[p_th], &precoder, p_tx);
    Ok(PowerAllocation { precoder, p_tx, candidates_evaluated: 1 })
}

/// `max_k p_k / |h_kᴴw|²`, infinite if some device gets nothing.
pub fn required_power(channels: &ChannelMatrix, p_th: &[f64], precoder: &Precoder) -> f64 {
    let w = precoder.weights();
    p_th.iter()
        .enumerate()
        .map(|(k, p)| {
            let g = beam_gain(channels.column(k), &w);
            if g > 0.0 { p / g } else { f64::INFINITY }
        })
        .fold(0.0, f64::max)
}

/// Smallest representable power at or above `p_tx` that makes
/// `p_tx·|h_kᴴw|² ≥ p_k` hold in floating point for every device.
pub(crate) fn settle_power(channels: &ChannelMatrix, p_th: &[f64], precoder: &Precoder, p_tx: f64) -> f64 {
    let w = precoder.weights();
    let gains: Vec<f64> = (0..channels.n_devices()).map(|k| beam_gain(channels.column(k), &w)).collect();
    let mut p = p_tx.max(
        p_th.iter()
            .zip(&gains)
            .map(|(p, g)| if *g > 0.0 { p / g } else { f64::INFINITY })
            .fold(0.0, f64::max),
    );
    while p.is_finite() && p_th.iter().zip(&gains).any(|(req, g)| p * g < *req) {
        p = p.next_up();
    }
    p
}

/// How the power-allocation subproblem is solved inside the optimizer and
/// the benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocator {
    pub sdp_tolerance: f64,
    pub candidates: usize,
}

impl Default for PowerAllocator {
    fn default() -> Self {
        Self { sdp_tolerance: 1e-8, candidates: 10_000 }
    }
}

impl PowerAllocator {
    /// Closed form for one device; relaxation plus randomization otherwise.
    pub fn allocate<R: Rng + ?Sized>(
        &self,
        channels: &ChannelMatrix,
        p_th: &[f64],
        rng: &mut R,
    ) -> Result<PowerAllocation> {
        if p_th.len() != channels.n_devices() {
            return Err(Error::invalid("one power requirement per device"));
        }
        if channels.n_devices() == 1 {
            return single_device_power(channels.column(0), p_th[0]);
        }
        let sdp = solve_maxmin_sdp(channels, self.sdp_tolerance)?;
        gaussian_randomization(&sdp, channels, p_th, self.candidates, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::received_power;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    #[test]
    fn single_device_examples() {
        let h = DVector::from_vec(vec![C64::from_polar(0.02, 1.1)]);
        let a = single_device_power(h.column(0), 1e-3).unwrap();
        assert_relative_eq!(a.p_tx, 2.5, max_relative = 1e-12);

        let h = DVector::from_vec(vec![C64::new(0.01, 0.0), C64::new(0.01, 0.0)]);
        let a = single_device_power(h.column(0), 1e-3).unwrap();
        assert_relative_eq!(a.p_tx, 5.0, max_relative = 1e-12);

        let rotated = &h * C64::from_polar(1.0, 0.77);
        let b = single_device_power(rotated.column(0), 1e-3).unwrap();
        assert_relative_eq!(a.p_tx, b.p_tx, max_relative = 1e-12);

        let zero = DVector::from_vec(vec![C64::new(0.0, 0.0); 3]);
        assert!(matches!(single_device_power(zero.column(0), 1e-3), Err(Error::ZeroChannel)));
    }

    #[test]
    fn allocations_meet_requirements_exactly() {
        let h = DVector::from_vec(vec![C64::new(0.013, -0.004), C64::new(-0.002, 0.011), C64::new(0.007, 0.007)]);
        let a = single_device_power(h.column(0), 1e-3).unwrap();
        assert!(received_power(h.column(0), &a.precoder, a.p_tx) >= 1e-3);
    }

    #[test]
    fn allocator_checks_requirement_count() {
        let ch = ChannelMatrix::from_columns(&[vec![C64::new(1.0, 0.0)]]).unwrap();
        let mut rng = crate::rng::stream(0, crate::rng::Purpose::Randomization, 0, 0);
        assert!(PowerAllocator::default().allocate(&ch, &[1e-3, 1e-3], &mut rng).is_err());
    }
}
