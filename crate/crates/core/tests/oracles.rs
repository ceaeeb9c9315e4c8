//! Values computed outside this crate (an independent numpy channel model and
//! a general-purpose conic solver) and frozen here.

use approx::assert_relative_eq;

use mawet::channel::{channel_matrix, ChannelParams};
use mawet::geometry::{AntennaLayout, Deployment, Point2, Point3};
use mawet::precoder::{gaussian_randomization, grid_oracle, solve_maxmin_sdp, PowerAllocator};
use mawet::rng::{stream, Purpose};

fn layout(points: &[(f64, f64)]) -> AntennaLayout {
    AntennaLayout::new(points.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
}

fn deployment(points: &[(f64, f64, f64)]) -> Deployment {
    let devices: Vec<Point3> = points.iter().map(|&(x, y, z)| Point3::new(x, y, z)).collect();
    let k = devices.len();
    Deployment::new(devices, vec![1e-3; k], (8.0, 8.0), 3.0).unwrap()
}

fn instance_a() -> (AntennaLayout, Deployment) {
    (
        layout(&[(-0.31, -0.27), (0.22, -0.4), (-0.05, 0.33), (0.41, 0.18)]),
        deployment(&[(1.0, 2.0, 3.0), (-2.5, 0.5, 3.0), (0.7, -3.1, 3.0)]),
    )
}

fn instance_b() -> (AntennaLayout, Deployment) {
    let d = ChannelParams::default().wavelength() / 2.0;
    let grid: Vec<(f64, f64)> = (0..9).map(|i| (((i % 3) as f64 - 1.0) * d, ((i / 3) as f64 - 1.0) * d)).collect();
    (layout(&grid), deployment(&[(3.2, -1.1, 3.0), (-0.4, 2.7, 3.0)]))
}

#[test]
fn channel_coefficients_match_reference_model() {
    let ch = ChannelParams::default();
    let (l, d) = instance_a();
    let h = channel_matrix(&l, &d, &ch).unwrap();
    assert_relative_eq!(h.matrix()[(0, 0)].re, -0.0026012492431835613, max_relative = 1e-9);
    assert_relative_eq!(h.matrix()[(0, 0)].im, -0.010736734597192004, max_relative = 1e-9);
    let (l, d) = instance_b();
    let h = channel_matrix(&l, &d, &ch).unwrap();
    assert_relative_eq!(h.matrix()[(0, 0)].re, -0.004046945263109557, max_relative = 1e-9);
    assert_relative_eq!(h.matrix()[(0, 0)].im, -0.007245288143725419, max_relative = 1e-9);
}

#[test]
fn sdp_values_match_reference_solver() {
    let ch = ChannelParams::default();
    for ((l, d), xi) in [(instance_a(), 2.3301991928e-4), (instance_b(), 4.042966932e-4)] {
        let h = channel_matrix(&l, &d, &ch).unwrap();
        let sol = solve_maxmin_sdp(&h, 1e-8).unwrap();
        assert_relative_eq!(sol.xi, xi, max_relative = 1e-7);
    }
}

#[test]
fn single_device_bound_matches_reference() {
    let ch = ChannelParams::default();
    let (l, d) = instance_a();
    let expected = [0.0006225177023801054, 0.0004842557056203888, 0.000349514506281316];
    for (k, &v) in expected.iter().enumerate() {
        let single = d.prefix(k + 1).unwrap();
        let only = Deployment::new(vec![single.devices()[k]], vec![1e-3], (8.0, 8.0), 3.0).unwrap();
        let h = channel_matrix(&l, &only, &ch).unwrap();
        assert_relative_eq!(solve_maxmin_sdp(&h, 1e-8).unwrap().xi, v, max_relative = 1e-7);
        let p = PowerAllocator::default().allocate(&h, &[1e-3], &mut stream(0, Purpose::Randomization, 0, 0)).unwrap();
        assert_relative_eq!(p.p_tx, 1e-3 / v, max_relative = 1e-12);
    }
}

#[test]
fn randomization_within_relaxation_bound() {
    let ch = ChannelParams::default();
    for (l, d) in [instance_a(), instance_b()] {
        let h = channel_matrix(&l, &d, &ch).unwrap();
        let sol = solve_maxmin_sdp(&h, 1e-8).unwrap();
        let a = gaussian_randomization(&sol, &h, d.power_requirements(), 10_000, &mut stream(1, Purpose::Randomization, 0, 0)).unwrap();
        // The relaxation bounds the achievable power from below.
        assert!(a.p_tx >= 1e-3 / sol.xi * (1.0 - 1e-6));
        assert!(a.p_tx <= 1e-3 / sol.xi * 1.5);
    }
}

#[test]
fn quantized_search_close_to_randomization_for_small_arrays() {
    let ch = ChannelParams::default();
    let l = layout(&[(-0.2, 0.1), (0.3, -0.25), (0.05, 0.4)]);
    let d = deployment(&[(1.5, -2.0, 3.0), (-3.0, 1.0, 3.0)]);
    let h = channel_matrix(&l, &d, &ch).unwrap();
    let sol = solve_maxmin_sdp(&h, 1e-8).unwrap();
    let rand = gaussian_randomization(&sol, &h, d.power_requirements(), 10_000, &mut stream(9, Purpose::Randomization, 0, 0)).unwrap();
    let grid = grid_oracle(&h, d.power_requirements(), 64).unwrap();
    assert!(grid.p_tx >= 1e-3 / sol.xi * (1.0 - 1e-6));
    assert!(grid.p_tx >= rand.p_tx * 0.95);
}
