//! Antenna-placement geometry.
//!
//! The movable region is the square `[-l/2, l/2]²` in the `z = 0` plane.
//! Devices live in a plane parallel to it at height `a_z`. Layouts are plain
//! point sets; whether a layout must stay inside the region depends on the
//! architecture (fixed benchmark arrays may extend beyond it).

use nalgebra::{Matrix2, Vector2, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Point2 = Vector2<f64>;
pub type Point3 = Vector3<f64>;

/// Distances within this relative margin of the minimum spacing count as
/// satisfying it, so grids built at exactly `δ` are not flagged by rounding.
const SPACING_REL_TOL: f64 = 1e-12;

/// Absolute slack (relative to the side length) accepted when checking that
/// a constructed array lies inside the region.
const REGION_REL_TOL: f64 = 1e-9;

/// Clamps one coordinate to `[-side_l/2, side_l/2]`.
pub fn project_to_region(coord: f64, side_l: f64) -> f64 {
    let half = 0.5 * side_l;
    coord.clamp(-half, half)
}

/// The square movable region `T` and the minimum inter-antenna spacing `δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    side_length: f64,
    min_spacing: f64,
}

impl Region {
    pub fn new(side_length: f64, min_spacing: f64) -> Result<Self> {
        if !(side_length > 0.0 && side_length.is_finite()) {
            return Err(Error::invalid(format!("side length must be positive, got {side_length}")));
        }
        if !(min_spacing > 0.0 && min_spacing.is_finite()) {
            return Err(Error::invalid(format!("min spacing must be positive, got {min_spacing}")));
        }
        if min_spacing > side_length * std::f64::consts::SQRT_2 {
            return Err(Error::invalid(format!(
                "min spacing {min_spacing} exceeds the region diagonal"
            )));
        }
        Ok(Self { side_length, min_spacing })
    }

    pub fn side_length(&self) -> f64 {
        self.side_length
    }

    pub fn min_spacing(&self) -> f64 {
        self.min_spacing
    }

    pub fn half_side(&self) -> f64 {
        0.5 * self.side_length
    }

    pub fn contains(&self, p: &Point2) -> bool {
        let h = self.half_side();
        p.x.abs() <= h && p.y.abs() <= h
    }

    pub fn project(&self, p: &Point2) -> Point2 {
        Point2::new(
            project_to_region(p.x, self.side_length),
            project_to_region(p.y, self.side_length),
        )
    }
}

/// Positions of `N ≥ 1` antennas in the array plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaLayout {
    positions: Vec<Point2>,
}

impl AntennaLayout {
    pub fn new(positions: Vec<Point2>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::invalid("a layout needs at least one antenna"));
        }
        if positions.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::invalid("antenna positions must be finite"));
        }
        Ok(Self { positions })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point2] {
        &self.positions
    }

    pub fn centroid(&self) -> Point2 {
        let sum = self.positions.iter().fold(Point2::zeros(), |acc, p| acc + p);
        sum / self.positions.len() as f64
    }

    /// Largest pairwise distance, i.e. the diameter of the convex hull.
    pub fn aperture_diameter(&self) -> f64 {
        aperture_diameter(self)
    }

    pub fn spacing_violations(&self, delta: f64) -> Vec<(usize, usize)> {
        spacing_violations(self, delta)
    }

    /// Index of the first antenna outside `region`, if any.
    pub fn first_outside(&self, region: &Region) -> Option<usize> {
        self.positions.iter().position(|p| !region.contains(p))
    }
}

/// All pairs `(n, n')`, `n < n'`, closer than `delta`.
pub fn spacing_violations(layout: &AntennaLayout, delta: f64) -> Vec<(usize, usize)> {
    let threshold = delta * (1.0 - SPACING_REL_TOL);
    let pos = layout.positions();
    let mut out = Vec::new();
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            if (pos[i] - pos[j]).norm() < threshold {
                out.push((i, j));
            }
        }
    }
    out
}

/// Number of violating pairs without allocating the pair list.
pub fn count_spacing_violations(layout: &AntennaLayout, delta: f64) -> usize {
    let threshold = delta * (1.0 - SPACING_REL_TOL);
    let pos = layout.positions();
    let mut count = 0;
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            if (pos[i] - pos[j]).norm() < threshold {
                count += 1;
            }
        }
    }
    count
}

/// Column/row counts of the rectangular grid that hosts `N` antennas:
/// `N_x = ⌈√N⌉` columns and `N_y = ⌈N/N_x⌉` rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridShape {
    pub cols: usize,
    pub rows: usize,
}

impl GridShape {
    pub fn for_count(n: usize) -> Self {
        if n == 0 {
            return Self { cols: 0, rows: 0 };
        }
        let mut cols = (n as f64).sqrt() as usize;
        while cols * cols < n {
            cols += 1;
        }
        while cols > 1 && (cols - 1) * (cols - 1) >= n {
            cols -= 1;
        }
        let rows = n.div_ceil(cols);
        Self { cols, rows }
    }

    /// Grid slot of antenna `n` (row-major): `(column, row)`.
    pub fn slot(&self, n: usize) -> (usize, usize) {
        (n % self.cols, n / self.cols)
    }
}

/// Counter-clockwise rotation by `beta` radians.
pub fn rotation_matrix(beta: f64) -> Matrix2<f64> {
    let (s, c) = beta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Rigid uniformly-spaced array: reference corner, rotation and spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UmaParams {
    pub reference: Point2,
    pub rotation: f64,
    pub spacing: f64,
}

/// Antenna positions of a uniformly-spaced movable array.
///
/// Antenna `n` sits in column `n mod N_x`, row `⌊n/N_x⌋` of the grid; its
/// local offset `(col·δ_U, row·δ_U)` is rotated by `β` and translated by
/// `r_0`. Fails when any antenna ends up outside the region.
pub fn uma_positions(params: &UmaParams, n_antennas: usize, side_l: f64) -> Result<AntennaLayout> {
    if n_antennas == 0 {
        return Err(Error::invalid("a layout needs at least one antenna"));
    }
    if !(params.spacing > 0.0) {
        return Err(Error::invalid(format!("UMA spacing must be positive, got {}", params.spacing)));
    }
    let shape = GridShape::for_count(n_antennas);
    let rot = rotation_matrix(params.rotation);
    let half = 0.5 * side_l;
    let slack = REGION_REL_TOL * side_l;
    let mut positions = Vec::with_capacity(n_antennas);
    for n in 0..n_antennas {
        let (col, row) = shape.slot(n);
        let local = Point2::new(col as f64 * params.spacing, row as f64 * params.spacing);
        let p = params.reference + rot * local;
        if p.x.abs() > half + slack || p.y.abs() > half + slack {
            return Err(Error::OutsideRegion { index: n, side: side_l });
        }
        positions.push(Point2::new(p.x.clamp(-half, half), p.y.clamp(-half, half)));
    }
    AntennaLayout::new(positions)
}

/// Largest UMA spacing whose x and y projections both fit in `side_l`.
/// Infinite for a single antenna.
pub fn uma_delta_max(beta: f64, n_antennas: usize, side_l: f64) -> f64 {
    let shape = GridShape::for_count(n_antennas);
    let (s, c) = beta.sin_cos();
    let (s, c) = (s.abs(), c.abs());
    let w = (shape.cols.saturating_sub(1)) as f64;
    let h = (shape.rows.saturating_sub(1)) as f64;
    let extent = (c * w + s * h).max(s * w + c * h);
    if extent == 0.0 {
        f64::INFINITY
    } else {
        side_l / extent
    }
}

/// Closed interval on the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.lo).min(self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Admissible intervals for the x and y coordinates of the UMA reference
/// position, from the rotated corners of the `W_U × H_U` grid box.
pub fn uma_ref_interval(
    beta: f64,
    delta_u: f64,
    n_antennas: usize,
    side_l: f64,
) -> Result<(Interval, Interval)> {
    let shape = GridShape::for_count(n_antennas);
    let width = (shape.cols.saturating_sub(1)) as f64 * delta_u;
    let height = (shape.rows.saturating_sub(1)) as f64 * delta_u;
    let rot = rotation_matrix(beta);
    let corners = [
        Point2::new(0.0, 0.0),
        Point2::new(width, 0.0),
        Point2::new(0.0, height),
        Point2::new(width, height),
    ];
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in &corners {
        let r = rot * c;
        x_min = x_min.min(r.x);
        x_max = x_max.max(r.x);
        y_min = y_min.min(r.y);
        y_max = y_max.max(r.y);
    }
    let half = 0.5 * side_l;
    let slack = REGION_REL_TOL * side_l;
    let fix = |lo: f64, hi: f64| -> Result<Interval> {
        if lo > hi + slack {
            return Err(Error::EmptyInterval { lo, hi });
        }
        // Rounding can invert a zero-width interval by a few ulps.
        Ok(if lo > hi { Interval::new(0.5 * (lo + hi), 0.5 * (lo + hi)) } else { Interval::new(lo, hi) })
    };
    let x = fix(-half - x_min, half - x_max)?;
    let y = fix(-half - y_min, half - y_max)?;
    Ok((x, y))
}

/// Uniform linear array along x with spacing `delta`, centred at the origin.
pub fn fixed_ula_positions(n_antennas: usize, delta: f64) -> Result<AntennaLayout> {
    if n_antennas == 0 {
        return Err(Error::invalid("a layout needs at least one antenna"));
    }
    let mid = 0.5 * (n_antennas as f64 - 1.0);
    let positions = (0..n_antennas)
        .map(|n| Point2::new((n as f64 - mid) * delta, 0.0))
        .collect();
    AntennaLayout::new(positions)
}

/// Uniform rectangular array with spacing `delta`: the first `N` slots of the
/// `N_x × N_y` grid in row-major order, translated so the centroid of the
/// populated slots is the origin.
pub fn fixed_ura_positions(n_antennas: usize, delta: f64) -> Result<AntennaLayout> {
    if n_antennas == 0 {
        return Err(Error::invalid("a layout needs at least one antenna"));
    }
    let shape = GridShape::for_count(n_antennas);
    let raw: Vec<Point2> = (0..n_antennas)
        .map(|n| {
            let (col, row) = shape.slot(n);
            Point2::new(col as f64 * delta, row as f64 * delta)
        })
        .collect();
    let centroid = raw.iter().fold(Point2::zeros(), |acc, p| acc + p) / n_antennas as f64;
    AntennaLayout::new(raw.into_iter().map(|p| p - centroid).collect())
}

/// Maximum pairwise distance; 0 for a single antenna.
pub fn aperture_diameter(layout: &AntennaLayout) -> f64 {
    let pos = layout.positions();
    let mut best = 0.0f64;
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            best = best.max((pos[i] - pos[j]).norm());
        }
    }
    best
}

/// Rayleigh distance `2D²/λ` of the layout.
pub fn rayleigh_distance(layout: &AntennaLayout, lambda: f64) -> f64 {
    let d = aperture_diameter(layout);
    2.0 * d * d / lambda
}

/// Whether `device` is within the Rayleigh distance of the layout centroid.
pub fn is_near_field(layout: &AntennaLayout, device: &Point3, lambda: f64) -> bool {
    let c = layout.centroid();
    let dist = (Point3::new(c.x, c.y, 0.0) - device).norm();
    dist <= rayleigh_distance(layout, lambda)
}

/// `K` devices and their power requirements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    devices: Vec<Point3>,
    power_requirements: Vec<f64>,
    plane: (f64, f64),
    standoff: f64,
}

impl Deployment {
    pub fn new(
        devices: Vec<Point3>,
        power_requirements: Vec<f64>,
        plane: (f64, f64),
        standoff: f64,
    ) -> Result<Self> {
        if devices.is_empty() {
            return Err(Error::invalid("a deployment needs at least one device"));
        }
        if devices.len() != power_requirements.len() {
            return Err(Error::invalid("one power requirement per device"));
        }
        if power_requirements.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::invalid("power requirements must be positive"));
        }
        if !(standoff > 0.0) {
            return Err(Error::invalid(format!("standoff must be positive, got {standoff}")));
        }
        if devices.iter().any(|d| (d.z - standoff).abs() > 1e-12 * standoff.max(1.0)) {
            return Err(Error::invalid("every device must sit at the standoff height"));
        }
        Ok(Self { devices, power_requirements, plane, standoff })
    }

    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    pub fn devices(&self) -> &[Point3] {
        &self.devices
    }

    pub fn power_requirements(&self) -> &[f64] {
        &self.power_requirements
    }

    pub fn plane(&self) -> (f64, f64) {
        self.plane
    }

    pub fn standoff(&self) -> f64 {
        self.standoff
    }

    /// The first `k` devices, as a deployment of its own.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        let k = k.min(self.len());
        Self::new(
            self.devices[..k].to_vec(),
            self.power_requirements[..k].to_vec(),
            self.plane,
            self.standoff,
        )
    }
}

/// Samples `k` devices uniformly on `[-a_x/2, a_x/2] × [-a_y/2, a_y/2]` at
/// height `a_z`. Devices are drawn one after another, so the first `k'`
/// devices of a `k`-device draw equal a `k'`-device draw from the same stream.
pub fn sample_deployment<R: Rng + ?Sized>(
    rng: &mut R,
    k_devices: usize,
    a_x: f64,
    a_y: f64,
    a_z: f64,
    p_th: f64,
) -> Result<Deployment> {
    if !(a_x >= 0.0 && a_y >= 0.0) {
        return Err(Error::invalid("area dimensions must be non-negative"));
    }
    let devices = (0..k_devices)
        .map(|_| {
            let x = (rng.random::<f64>() - 0.5) * a_x;
            let y = (rng.random::<f64>() - 0.5) * a_y;
            Point3::new(x, y, a_z)
        })
        .collect();
    Deployment::new(devices, vec![p_th; k_devices], (a_x, a_y), a_z)
}
