//! Line-of-sight near-field channel with a `cos^κ` element pattern.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector, DVectorView};
use serde::{Deserialize, Serialize};

use crate::geometry::{AntennaLayout, Deployment, Point2, Point3};
use crate::{Error, Result, C64};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Carrier wavelength and element boresight gain exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    wavelength: f64,
    kappa: f64,
}

impl ChannelParams {
    pub fn new(wavelength: f64, kappa: f64) -> Result<Self> {
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::invalid(format!("wavelength must be positive, got {wavelength}")));
        }
        if !(kappa >= 2.0 && kappa.is_finite()) {
            return Err(Error::invalid(format!("boresight gain exponent must be >= 2, got {kappa}")));
        }
        Ok(Self { wavelength, kappa })
    }

    pub fn from_frequency(freq_hz: f64, kappa: f64) -> Result<Self> {
        if !(freq_hz > 0.0) {
            return Err(Error::invalid(format!("frequency must be positive, got {freq_hz}")));
        }
        Self::new(SPEED_OF_LIGHT / freq_hz, kappa)
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

impl Default for ChannelParams {
    /// 1 GHz carrier, `κ = 2`.
    fn default() -> Self {
        Self { wavelength: SPEED_OF_LIGHT / 1e9, kappa: 2.0 }
    }
}

/// Element gain `2(κ+1)cos^κ θ` on the front hemisphere, zero behind it.
pub fn radiation_profile(theta: f64, kappa: f64) -> f64 {
    if (0.0..=FRAC_PI_2).contains(&theta) {
        gain_from_cos(theta.cos(), kappa)
    } else {
        0.0
    }
}

fn gain_from_cos(cos_theta: f64, kappa: f64) -> f64 {
    if cos_theta <= 0.0 {
        0.0
    } else {
        2.0 * (kappa + 1.0) * cos_theta.powf(kappa)
    }
}

/// Complex gain between an antenna in the `z = 0` plane and a device.
///
/// Magnitude `√F(ϑ)·λ/(4πd)`, phase `−2πd/λ`; boresight is `+z`.
pub fn channel_coefficient(antenna: &Point2, device: &Point3, params: &ChannelParams) -> Result<C64> {
    let diff = Point3::new(antenna.x, antenna.y, 0.0) - device;
    let d = diff.norm();
    if !(d > 0.0) {
        return Err(Error::Coincident { antenna: 0, device: 0 });
    }
    Ok(coefficient_at_distance(d, device.z / d, params))
}

fn coefficient_at_distance(d: f64, cos_theta: f64, params: &ChannelParams) -> C64 {
    let gain = gain_from_cos(cos_theta, params.kappa);
    if gain == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let lambda = params.wavelength;
    let magnitude = gain.sqrt() * lambda / (4.0 * PI * d);
    // Reduce the path length to a fraction of a wavelength before taking the
    // phase; d/λ is O(10²) here.
    let cycles = d / lambda;
    let phase = -2.0 * PI * (cycles - cycles.floor());
    C64::from_polar(magnitude, phase)
}

/// `N × K` matrix whose column `k` is the channel vector of device `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    coefficients: DMatrix<C64>,
}

impl ChannelMatrix {
    pub fn from_matrix(coefficients: DMatrix<C64>) -> Result<Self> {
        if coefficients.nrows() == 0 || coefficients.ncols() == 0 {
            return Err(Error::invalid("channel matrix needs at least one antenna and one device"));
        }
        if coefficients.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::invalid("channel coefficients must be finite"));
        }
        Ok(Self { coefficients })
    }

    /// Builds a matrix from per-device channel vectors.
    pub fn from_columns(columns: &[Vec<C64>]) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("all channel vectors must have the same length"));
        }
        Self::from_matrix(DMatrix::from_fn(n, columns.len(), |i, k| columns[k][i]))
    }

    pub fn n_antennas(&self) -> usize {
        self.coefficients.nrows()
    }

    pub fn n_devices(&self) -> usize {
        self.coefficients.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.coefficients
    }

    pub fn column(&self, k: usize) -> DVectorView<'_, C64> {
        self.coefficients.column(k)
    }

    /// Multiplies every coefficient by `c`.
    pub fn scaled(&self, c: C64) -> Self {
        Self { coefficients: self.coefficients.map(|h| h * c) }
    }
}

pub fn channel_matrix(
    layout: &AntennaLayout,
    deployment: &Deployment,
    params: &ChannelParams,
) -> Result<ChannelMatrix> {
    let antennas = layout.positions();
    let devices = deployment.devices();
    let mut m = DMatrix::zeros(antennas.len(), devices.len());
    for (k, u) in devices.iter().enumerate() {
        for (n, r) in antennas.iter().enumerate() {
            let d = (Point3::new(r.x, r.y, 0.0) - u).norm();
            if !(d > 0.0) {
                return Err(Error::Coincident { antenna: n, device: k });
            }
            m[(n, k)] = coefficient_at_distance(d, u.z / d, params);
        }
    }
    ChannelMatrix::from_matrix(m)
}

/// Constant-modulus analog precoder `w_n = e^{jθ_n}/√N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Precoder {
    phases: Vec<f64>,
}

impl Precoder {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::invalid("precoder needs at least one phase"));
        }
        if phases.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("precoder phases must be finite"));
        }
        Ok(Self { phases })
    }

    /// Maximum-ratio phases `θ_n = arg h_n`.
    pub fn matched_to(h: DVectorView<'_, C64>) -> Self {
        Self { phases: h.iter().map(|c| c.arg()).collect() }
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn weights(&self) -> DVector<C64> {
        let scale = 1.0 / (self.phases.len() as f64).sqrt();
        DVector::from_iterator(
            self.phases.len(),
            self.phases.iter().map(|&t| C64::from_polar(scale, t)),
        )
    }
}

/// `|h^H w|²` for unit-power weights `w`.
pub fn beam_gain(h: DVectorView<'_, C64>, w: &DVector<C64>) -> f64 {
    h.iter().zip(w.iter()).map(|(h, w)| h.conj() * w).sum::<C64>().norm_sqr()
}

/// Received power `p_T |h^H w|²`.
pub fn received_power(h: DVectorView<'_, C64>, precoder: &Precoder, p_t: f64) -> f64 {
    p_t * beam_gain(h, &precoder.weights())
}
