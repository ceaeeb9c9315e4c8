//! Gaussian randomization: recover a constant-modulus precoder from the
//! relaxed covariance.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{settle_power, PowerAllocation, SdpSolution};
use crate::channel::{ChannelMatrix, Precoder};
use crate::{Error, Result, C64};

/// Eigen-directions of `W` weaker than this (relative to the strongest) are
/// interior-point residue and are dropped from the sampling factor.
const RANK_REL_TOL: f64 = 1e-6;

/// Draws `n_candidates` vectors `z ~ CN(0, W)`, keeps the phases of each and
/// returns the candidate minimizing `max_k p_k / |h_kᴴŵ|²`.
///
/// Candidates are drawn one after another from `rng`; a longer run extends a
/// shorter one, so the returned power never increases with `n_candidates`.
/// When `W` is numerically rank one every draw yields the same phases up to a
/// common rotation and a single candidate is evaluated.
pub fn gaussian_randomization<R: Rng + ?Sized>(
    sdp: &SdpSolution,
    channels: &ChannelMatrix,
    p_th: &[f64],
    n_candidates: usize,
    rng: &mut R,
) -> Result<PowerAllocation> {
    if n_candidates == 0 {
        return Err(Error::invalid("at least one randomization candidate is required"));
    }
    let n = channels.n_antennas();
    let k = channels.n_devices();
    if sdp.w.nrows() != n || sdp.w.ncols() != n {
        return Err(Error::invalid("SDP solution does not match the channel dimensions"));
    }
    if p_th.len() != k {
        return Err(Error::invalid("one power requirement per device"));
    }

    let factor = sampling_factor(&sdp.w);
    let rank = factor.ncols();
    if rank == 0 {
        return Err(Error::NoFeasibleCandidate);
    }
    // hᴴ as rows, stored contiguously: conj_h[k * n + i] = conj(h_{k,i}).
    let conj_h: Vec<C64> = (0..k)
        .flat_map(|j| channels.column(j).iter().map(|c| c.conj()).collect::<Vec<_>>())
        .collect();
    // factor stored row-major for the inner loop.
    let f_rows: Vec<C64> = (0..n).flat_map(|i| (0..rank).map(move |r| (i, r))).map(|(i, r)| factor[(i, r)]).collect();

    let draws = if rank == 1 { 1 } else { n_candidates };
    let inv_n = 1.0 / n as f64;
    let mut g = vec![C64::new(0.0, 0.0); rank];
    let mut unit = vec![C64::new(0.0, 0.0); n];
    let mut best_cost = f64::INFINITY;
    let mut best_unit: Option<Vec<C64>> = None;

    for _ in 0..draws {
        for gr in g.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *gr = C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
        }
        for i in 0..n {
            let row = &f_rows[i * rank..(i + 1) * rank];
            let z: C64 = row.iter().zip(&g).map(|(f, g)| f * g).sum();
            let mag2 = z.re * z.re + z.im * z.im;
            unit[i] = if mag2 > 0.0 { z * (1.0 / mag2.sqrt()) } else { C64::new(1.0, 0.0) };
        }
        let mut cost = 0.0f64;
        for j in 0..k {
            let hrow = &conj_h[j * n..(j + 1) * n];
            let (mut re, mut im) = (0.0, 0.0);
            for (h, u) in hrow.iter().zip(&unit) {
                re += h.re * u.re - h.im * u.im;
                im += h.re * u.im + h.im * u.re;
            }
            let gain = (re * re + im * im) * inv_n;
            let c = if gain > 0.0 { p_th[j] / gain } else { f64::INFINITY };
            cost = cost.max(c);
            if cost >= best_cost {
                break;
            }
        }
        if cost < best_cost {
            best_cost = cost;
            best_unit = Some(unit.clone());
        }
    }

    let unit = best_unit.ok_or(Error::NoFeasibleCandidate)?;
    let precoder = Precoder::new(unit.iter().map(|u| u.arg()).collect())?;
    let p_tx = settle_power(channels, p_th, &precoder, 0.0);
    if !p_tx.is_finite() {
        return Err(Error::NoFeasibleCandidate);
    }
    Ok(PowerAllocation { precoder, p_tx, candidates_evaluated: draws })
}

/// `F` with `F Fᴴ ≈ W`, columns `√λ_r u_r` over the significant eigenpairs.
fn sampling_factor(w: &DMatrix<C64>) -> DMatrix<C64> {
    let n = w.nrows();
    let eig = SymmetricEigen::new(w.clone());
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..n).filter(|&r| eig.eigenvalues[r] > RANK_REL_TOL * max).collect();
    DMatrix::from_fn(n, keep.len(), |i, c| {
        let r = keep[c];
        eig.eigenvectors[(i, r)] * eig.eigenvalues[r].sqrt()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::received_power;
    use crate::precoder::solve_maxmin_sdp;
    use crate::rng::{stream, Purpose};
    use approx::assert_relative_eq;

    fn rank_one(phases: &[f64]) -> SdpSolution {
        let n = phases.len();
        let w = nalgebra::DVector::from_iterator(n, phases.iter().map(|t| C64::from_polar(1.0 / (n as f64).sqrt(), *t)));
        SdpSolution { w: &w * w.adjoint(), xi: 0.0, feasibility_gap: 0.0, duality_gap: 0.0, iterations: 0 }
    }

    fn channels() -> ChannelMatrix {
        ChannelMatrix::from_columns(&[
            vec![C64::new(0.010, 0.002), C64::new(-0.004, 0.008), C64::new(0.006, -0.006)],
            vec![C64::new(0.003, -0.009), C64::new(0.007, 0.001), C64::new(-0.002, -0.005)],
        ])
        .unwrap()
    }

    #[test]
    fn rank_one_covariance_reproduces_its_precoder() {
        let phases = [0.3, -1.2, 2.5];
        let ch = channels();
        let sdp = rank_one(&phases);
        let a = gaussian_randomization(&sdp, &ch, &[1e-3, 1e-3], 50, &mut stream(1, Purpose::Randomization, 0, 0)).unwrap();
        let w = Precoder::new(phases.to_vec()).unwrap();
        let expected = (0..2)
            .map(|k| 1e-3 / received_power(ch.column(k), &w, 1.0))
            .fold(0.0, f64::max);
        assert_relative_eq!(a.p_tx, expected, max_relative = 1e-9);
        assert_eq!(a.candidates_evaluated, 1);
    }

    #[test]
    fn deterministic_per_stream_and_monotone_in_candidates() {
        let ch = channels();
        let sdp = solve_maxmin_sdp(&ch, 1e-8).unwrap();
        let p = [1e-3, 2e-3];
        let run = |n| gaussian_randomization(&sdp, &ch, &p, n, &mut stream(5, Purpose::Randomization, 1, 2)).unwrap();
        assert_eq!(run(1), run(1));
        let mut prev = f64::INFINITY;
        for n in [1, 2, 5, 20, 100, 1000] {
            let a = run(n);
            assert!(a.p_tx <= prev);
            prev = a.p_tx;
            for k in 0..2 {
                assert!(received_power(ch.column(k), &a.precoder, a.p_tx) >= p[k]);
            }
        }
    }

    #[test]
    fn zero_candidates_rejected() {
        let ch = channels();
        let sdp = rank_one(&[0.0, 0.0, 0.0]);
        assert!(gaussian_randomization(&sdp, &ch, &[1e-3, 1e-3], 0, &mut stream(0, Purpose::Randomization, 0, 0)).is_err());
    }

    #[test]
    fn silent_device_means_no_candidate() {
        let ch = ChannelMatrix::from_columns(&[
            vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
        ])
        .unwrap();
        let sdp = solve_maxmin_sdp(&ch, 1e-8).unwrap();
        let r = gaussian_randomization(&sdp, &ch, &[1e-3, 1e-3], 10, &mut stream(0, Purpose::Randomization, 0, 0));
        assert!(matches!(r, Err(Error::NoFeasibleCandidate)));
    }
}
