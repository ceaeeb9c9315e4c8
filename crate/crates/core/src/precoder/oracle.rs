use std::f64::consts::TAU;

use super::{settle_power, PowerAllocation};
use crate::channel::{ChannelMatrix, Precoder};
use crate::{Error, Result, C64};

/// Exhaustive search over quantized phases: `θ_0 = 0` (a common rotation
/// changes nothing) and `θ_n ∈ {2πq/L}` for the remaining antennas.
///
/// Only meant for verification at small `N`; the search visits `L^(N−1)`
/// precoders.
pub fn grid_oracle(channels: &ChannelMatrix, p_th: &[f64], phase_levels: usize) -> Result<PowerAllocation> {
    if phase_levels == 0 {
        return Err(Error::invalid("at least one phase level is required"));
    }
    let n = channels.n_antennas();
    let k = channels.n_devices();
    if p_th.len() != k {
        return Err(Error::invalid("one power requirement per device"));
    }
    let free = n - 1;
    let total = (phase_levels as u128).checked_pow(free as u32).filter(|t| *t <= 1 << 32).ok_or_else(|| {
        Error::invalid(format!("{phase_levels}^{free} precoders is too many to enumerate"))
    })? as u64;

    let levels: Vec<C64> = (0..phase_levels)
        .map(|q| C64::from_polar(1.0, TAU * q as f64 / phase_levels as f64))
        .collect();
    let conj_h: Vec<Vec<C64>> = (0..k).map(|j| channels.column(j).iter().map(|c| c.conj()).collect()).collect();
    let inv_n = 1.0 / n as f64;

    let mut digits = vec![0usize; free];
    let mut best_cost = f64::INFINITY;
    let mut best_digits = digits.clone();
    for _ in 0..total {
        let mut cost = 0.0f64;
        for (h, p) in conj_h.iter().zip(p_th) {
            let mut acc = h[0];
            for (i, d) in digits.iter().enumerate() {
                acc += h[i + 1] * levels[*d];
            }
            let gain = acc.norm_sqr() * inv_n;
            cost = cost.max(if gain > 0.0 { p / gain } else { f64::INFINITY });
        }
        if cost < best_cost {
            best_cost = cost;
            best_digits.clone_from(&digits);
        }
        // Odometer increment.
        for d in digits.iter_mut() {
            *d += 1;
            if *d < phase_levels {
                break;
            }
            *d = 0;
        }
    }
    if !best_cost.is_finite() {
        return Err(Error::NoFeasibleCandidate);
    }
    let phases: Vec<f64> = std::iter::once(0.0)
        .chain(best_digits.iter().map(|d| TAU * *d as f64 / phase_levels as f64))
        .collect();
    let precoder = Precoder::new(phases)?;
    let p_tx = settle_power(channels, p_th, &precoder, 0.0);
    Ok(PowerAllocation { precoder, p_tx, candidates_evaluated: total as usize })
}
