//! Primal-dual interior-point solver for the max-min precoding SDP
//!
//! ```text
//!   max ξ   s.t.  h_kᴴ W h_k ≥ ξ  (k = 1..K),   W_nn = 1/N,   W ⪰ 0.
//! ```
//!
//! The problem is written in standard primal form over the cone
//! `H₊ᴺ × R₊ᴷ⁺¹` with variables `(W, s, ξ)`:
//!
//! ```text
//!   min −ξ   s.t.  W_nn = 1/N,   h_kᴴ W h_k − s_k − ξ = 0.
//! ```
//!
//! It has `N + K` equality constraints, so the Schur complement system is
//! tiny. The diagonal constraints and the rank-one channel constraints let
//! the Schur matrix be assembled in `O(N²(N + K))` without forming any
//! constraint matrix. Search directions are HKM with Mehrotra's
//! predictor-corrector; the iteration starts infeasible.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::channel::ChannelMatrix;
use crate::{Error, Result, C64};

/// Stopping rule and iteration cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    /// Bound on the relative duality gap and on the relative primal/dual
    /// infeasibilities.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iterations: 100 }
    }
}

/// ε-optimal solution of the relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    /// Hermitian PSD covariance with `diag(W) = 1/N`.
    pub w: DMatrix<C64>,
    /// `min_k h_kᴴ W h_k`, the relaxed max-min beam gain.
    pub xi: f64,
    /// Largest relative primal or dual residual at termination.
    pub feasibility_gap: f64,
    /// Relative duality gap at termination.
    pub duality_gap: f64,
    pub iterations: usize,
}

pub fn solve_maxmin_sdp(channels: &ChannelMatrix, tolerance: f64) -> Result<SdpSolution> {
    solve_maxmin_sdp_with(channels, &SdpOptions { tolerance, ..SdpOptions::default() })
}

pub fn solve_maxmin_sdp_with(channels: &ChannelMatrix, options: &SdpOptions) -> Result<SdpSolution> {
    if !(options.tolerance > 0.0) {
        return Err(Error::invalid("SDP tolerance must be positive"));
    }
    let n = channels.n_antennas();
    let k = channels.n_devices();
    let columns: Vec<DVector<C64>> = (0..k).map(|j| channels.column(j).into_owned()).collect();
    let norms: Vec<f64> = columns.iter().map(|h| h.norm_squared()).collect();

    // Single feasible point: W = [1].
    if n == 1 {
        let xi = norms.iter().cloned().fold(f64::INFINITY, f64::min);
        return Ok(SdpSolution {
            w: DMatrix::from_element(1, 1, C64::new(1.0, 0.0)),
            xi,
            feasibility_gap: 0.0,
            duality_gap: 0.0,
            iterations: 0,
        });
    }
    // A silent device pins ξ* = 0 and leaves no strictly feasible point.
    if norms.iter().any(|&v| v == 0.0) {
        return Ok(SdpSolution {
            w: DMatrix::identity(n, n) / C64::new(n as f64, 0.0),
            xi: 0.0,
            feasibility_gap: 0.0,
            duality_gap: 0.0,
            iterations: 0,
        });
    }

    // Global rescale so that max_k tr(H_k)/N = 1. The optimal W does not
    // depend on it; ξ is recomputed from the unscaled channels.
    let max_norm = norms.iter().cloned().fold(0.0, f64::max);
    let scale = (n as f64 / max_norm).sqrt();
    let scaled: Vec<DVector<C64>> = columns.iter().map(|h| h * C64::new(scale, 0.0)).collect();

    let problem = Problem { n, k, h: scaled };
    let (w, iterations, duality_gap, feasibility_gap) = problem.solve(options)?;
    let w = normalize_diagonal(w);
    let xi = columns
        .iter()
        .map(|h| quad_form(&w, h))
        .fold(f64::INFINITY, f64::min);
    Ok(SdpSolution { w, xi, feasibility_gap, duality_gap, iterations })
}

/// `Re(hᴴ A h)`.
pub(crate) fn quad_form(a: &DMatrix<C64>, h: &DVector<C64>) -> f64 {
    h.dotc(&(a * h)).re
}

/// Hermitian part, then `D W D` with `D = diag(1/√(N W_nn))` so the diagonal
/// equals `1/N` exactly. Congruence keeps `W ⪰ 0`.
fn normalize_diagonal(mut w: DMatrix<C64>) -> DMatrix<C64> {
    let n = w.nrows();
    let wh = w.adjoint();
    w = (w + wh) * C64::new(0.5, 0.0);
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let v = w[(i, i)].re;
            if v > 0.0 { (1.0 / (n as f64 * v)).sqrt() } else { 0.0 }
        })
        .collect();
    for i in 0..n {
        for j in 0..n {
            w[(i, j)] *= d[i] * d[j];
        }
        w[(i, i)] = C64::new(w[(i, i)].re, 0.0);
    }
    w
}

struct Problem {
    n: usize,
    k: usize,
    h: Vec<DVector<C64>>,
}

/// Primal `(W, [s; ξ])`, dual `y`, dual slack `(Z, z_lp)`.
#[derive(Clone)]
struct Iterate {
    xw: DMatrix<C64>,
    xl: DVector<f64>,
    y: DVector<f64>,
    zw: DMatrix<C64>,
    zl: DVector<f64>,
}

struct Direction {
    xw: DMatrix<C64>,
    xl: DVector<f64>,
    y: DVector<f64>,
    zw: DMatrix<C64>,
    zl: DVector<f64>,
}

/// Things that stay fixed within one iteration.
struct Linearization {
    g: DMatrix<C64>,
    /// Cholesky factor of the dual slack block.
    lz: DMatrix<C64>,
    rdw: DMatrix<C64>,
    rdl: DVector<f64>,
    /// Matrix part of `A(X R_d G)`.
    a_xrdg: DVector<f64>,
    /// Matrix part of `A(G)`.
    a_g: DVector<f64>,
    schur: Cholesky<f64, nalgebra::Dyn>,
}

impl Problem {
    fn m(&self) -> usize {
        self.n + self.k
    }

    fn b(&self) -> DVector<f64> {
        DVector::from_fn(self.m(), |i, _| if i < self.n { 1.0 / self.n as f64 } else { 0.0 })
    }

    fn c_lp(&self) -> DVector<f64> {
        DVector::from_fn(self.k + 1, |i, _| if i == self.k { -1.0 } else { 0.0 })
    }

    /// `A(Y)` for a (not necessarily Hermitian) matrix block and an LP block.
    fn apply_a(&self, yw: &DMatrix<C64>, yl: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.m());
        for i in 0..self.n {
            out[i] = yw[(i, i)].re;
        }
        for (j, h) in self.h.iter().enumerate() {
            out[self.n + j] = h.dotc(&(yw * h)).re - yl[j] - yl[self.k];
        }
        out
    }

    /// `Aᵀ(y)`.
    fn apply_at(&self, y: &DVector<f64>) -> (DMatrix<C64>, DVector<f64>) {
        let mut w = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            w[(i, i)] = C64::new(y[i], 0.0);
        }
        let mut lp = DVector::zeros(self.k + 1);
        for (j, h) in self.h.iter().enumerate() {
            let coef = y[self.n + j];
            w.gerc(C64::new(coef, 0.0), h, h, C64::new(1.0, 0.0));
            lp[j] = -coef;
            lp[self.k] -= coef;
        }
        (w, lp)
    }

    fn initial(&self) -> Iterate {
        let n = self.n;
        Iterate {
            xw: DMatrix::identity(n, n) / C64::new(n as f64, 0.0),
            xl: DVector::from_element(self.k + 1, 1.0),
            y: DVector::zeros(self.m()),
            zw: DMatrix::identity(n, n),
            zl: DVector::from_element(self.k + 1, 1.0),
        }
    }

    fn solve(&self, options: &SdpOptions) -> Result<(DMatrix<C64>, usize, f64, f64)> {
        let b = self.b();
        let c_lp = self.c_lp();
        let nu = (self.n + self.k + 1) as f64;
        let mut it = self.initial();
        let mut last = (f64::INFINITY, f64::INFINITY);

        for iteration in 0..=options.max_iterations {
            // Residuals.
            let rp = &b - self.apply_a(&it.xw, &it.xl);
            let (atw, atl) = self.apply_at(&it.y);
            let rdw = -(&it.zw + atw);
            let rdl = &c_lp - &it.zl - atl;

            let pobj = -it.xl[self.k];
            let dobj = b.dot(&it.y);
            let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
            let pinf = rp.norm() / (1.0 + b.norm());
            let dinf = (rdw.norm_squared() + rdl.norm_squared()).sqrt() / (1.0 + c_lp.norm());
            let infeas = pinf.max(dinf);
            last = (gap, infeas);
            if gap <= options.tolerance && infeas <= options.tolerance {
                return Ok((it.xw, iteration, gap, infeas));
            }
            if iteration == options.max_iterations {
                break;
            }

            let mu = (inner(&it.xw, &it.zw) + it.xl.dot(&it.zl)) / nu;
            let lin = self.linearize(&it, rdw, rdl)?;
            let lx = it
                .xw
                .clone()
                .cholesky()
                .ok_or_else(|| Error::SdpNumerical("primal iterate lost definiteness".into()))?
                .unpack();

            // Predictor (affine scaling).
            let pred = self.direction(&it, &lin, &b, 0.0, None);
            let ap = step_to_boundary(&lx, &pred.xw, &it.xl, &pred.xl)?.min(1.0);
            let ad = step_to_boundary(&lin.lz, &pred.zw, &it.zl, &pred.zl)?.min(1.0);
            let mu_aff = (inner_stepped(&it.xw, &pred.xw, ap, &it.zw, &pred.zw, ad)
                + (&it.xl + &pred.xl * ap).dot(&(&it.zl + &pred.zl * ad)))
                / nu;
            let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

            // Corrector.
            let dir = self.direction(&it, &lin, &b, sigma * mu, Some(&pred));
            let gamma = 0.95;
            let ap = (gamma * step_to_boundary(&lx, &dir.xw, &it.xl, &dir.xl)?).min(1.0);
            let ad = (gamma * step_to_boundary(&lin.lz, &dir.zw, &it.zl, &dir.zl)?).min(1.0);

            it.xw += &dir.xw * C64::new(ap, 0.0);
            it.xl += &dir.xl * ap;
            it.y += &dir.y * ad;
            it.zw += &dir.zw * C64::new(ad, 0.0);
            it.zl += &dir.zl * ad;
            hermitianize(&mut it.xw);
            hermitianize(&mut it.zw);
        }
        Err(Error::SdpNotConverged {
            iterations: options.max_iterations,
            duality_gap: last.0,
            infeasibility: last.1,
        })
    }

    fn linearize(&self, it: &Iterate, rdw: DMatrix<C64>, rdl: DVector<f64>) -> Result<Linearization> {
        let n = self.n;
        let m = self.m();
        let chol_z = it
            .zw
            .clone()
            .cholesky()
            .ok_or_else(|| Error::SdpNumerical("dual slack lost definiteness".into()))?;
        let g = chol_z.inverse();
        let lz = chol_z.unpack();

        let xh: Vec<DVector<C64>> = self.h.iter().map(|h| &it.xw * h).collect();
        let gh: Vec<DVector<C64>> = self.h.iter().map(|h| &g * h).collect();

        let mut schur = DMatrix::<f64>::zeros(m, m);
        for i in 0..n {
            for j in i..n {
                let v = (it.xw[(i, j)] * g[(j, i)]).re;
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        for a in 0..self.k {
            for i in 0..n {
                let v = (xh[a][i] * gh[a][i].conj()).re;
                schur[(i, n + a)] = v;
                schur[(n + a, i)] = v;
            }
            for c in a..self.k {
                let v = (self.h[a].dotc(&xh[c]) * self.h[c].dotc(&gh[a])).re
                    + it.xl[self.k] / it.zl[self.k]
                    + if a == c { it.xl[a] / it.zl[a] } else { 0.0 };
                schur[(n + a, n + c)] = v;
                schur[(n + c, n + a)] = v;
            }
        }
        let schur = match schur.clone().cholesky() {
            Some(ch) => ch,
            None => {
                let bump = 1e-14 * (0..m).map(|i| schur[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
                let mut reg = schur;
                for i in 0..m {
                    reg[(i, i)] += bump;
                }
                reg.cholesky()
                    .ok_or_else(|| Error::SdpNumerical("Schur complement is not positive definite".into()))?
            }
        };
        let rdg = &rdw * &g;
        let mut a_xrdg = DVector::zeros(m);
        let mut a_g = DVector::zeros(m);
        for i in 0..n {
            a_xrdg[i] = diag_of_product(&it.xw, &rdg, i);
            a_g[i] = g[(i, i)].re;
        }
        for (j, h) in self.h.iter().enumerate() {
            a_xrdg[n + j] = xh[j].dotc(&(&rdw * &gh[j])).re;
            a_g[n + j] = h.dotc(&gh[j]).re;
        }
        Ok(Linearization { g, lz, rdw, rdl, a_xrdg, a_g, schur })
    }

    /// HKM direction targeting `σμ`; with `corr`, includes Mehrotra's
    /// second-order term from the predictor step.
    fn direction(
        &self,
        it: &Iterate,
        lin: &Linearization,
        b: &DVector<f64>,
        sigma_mu: f64,
        corr: Option<&Direction>,
    ) -> Direction {
        let g = &lin.g;
        let n = self.n;
        let k = self.k;
        // Matrix part of A(R) for R = X R_d G (+ ΔX_p ΔZ_p G), LP part rl.
        let mut a_r = lin.a_xrdg.clone();
        let mut rl = it.xl.component_mul(&lin.rdl).component_div(&it.zl);
        let mut second_order = None;
        if let Some(p) = corr {
            let zg = &p.zw * g;
            for i in 0..n {
                a_r[i] += diag_of_product(&p.xw, &zg, i);
            }
            for (j, h) in self.h.iter().enumerate() {
                a_r[n + j] += (&p.xw * h).dotc(&(&zg * h)).re;
            }
            rl += p.xl.component_mul(&p.zl).component_div(&it.zl);
            second_order = Some(&p.xw * zg);
        }
        let mut rhs = b - &lin.a_g * sigma_mu + a_r;
        for j in 0..k {
            rhs[n + j] -= sigma_mu * (-1.0 / it.zl[j] - 1.0 / it.zl[k]) + rl[j] + rl[k];
        }
        let dy = lin.schur.solve(&rhs);

        let (atw, atl) = self.apply_at(&dy);
        let dzw = &lin.rdw - atw;
        let dzl = &lin.rdl - atl;

        let mut dxw = g * C64::new(sigma_mu, 0.0) - &it.xw - &it.xw * &dzw * g;
        if let Some(so) = &second_order {
            dxw -= so;
        }
        hermitianize(&mut dxw);
        let mut dxl = DVector::from_fn(self.k + 1, |i, _| {
            sigma_mu / it.zl[i] - it.xl[i] - it.xl[i] * dzl[i] / it.zl[i]
        });
        if let Some(p) = corr {
            dxl -= p.xl.component_mul(&p.zl).component_div(&it.zl);
        }
        Direction { xw: dxw, xl: dxl, y: dy, zw: dzw, zl: dzl }
    }
}

/// `Re (A B)_ii`.
fn diag_of_product(a: &DMatrix<C64>, b: &DMatrix<C64>, i: usize) -> f64 {
    (0..a.ncols()).map(|j| (a[(i, j)] * b[(j, i)]).re).sum()
}

/// `Re tr(A B)` for Hermitian `A`, `B`.
fn inner(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum()
}

fn hermitianize(a: &mut DMatrix<C64>) {
    let n = a.nrows();
    for i in 0..n {
        a[(i, i)].im = 0.0;
        for j in i + 1..n {
            let v = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = v;
            a[(j, i)] = v.conj();
        }
    }
}

/// `Re tr((X + a ΔX)(Z + b ΔZ))` without forming the stepped matrices.
fn inner_stepped(
    x: &DMatrix<C64>,
    dx: &DMatrix<C64>,
    a: f64,
    z: &DMatrix<C64>,
    dz: &DMatrix<C64>,
    b: f64,
) -> f64 {
    inner(x, z) + a * inner(dx, z) + b * inner(x, dz) + a * b * inner(dx, dz)
}

/// Largest `α` with `X + α ΔX ⪰ 0` and `x + α Δx ≥ 0` (may be infinite),
/// given the lower Cholesky factor `L` of `X`.
fn step_to_boundary(
    l: &DMatrix<C64>,
    dx: &DMatrix<C64>,
    xl: &DVector<f64>,
    dxl: &DVector<f64>,
) -> Result<f64> {
    let mut alpha = f64::INFINITY;
    for (v, d) in xl.iter().zip(dxl.iter()) {
        if *d < 0.0 {
            alpha = alpha.min(-v / d);
        }
    }
    let t = l
        .solve_lower_triangular(dx)
        .ok_or_else(|| Error::SdpNumerical("singular Cholesky factor".into()))?;
    let mut s = l
        .solve_lower_triangular(&t.adjoint())
        .ok_or_else(|| Error::SdpNumerical("singular Cholesky factor".into()))?;
    hermitianize(&mut s);
    let lambda_min = s.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    if lambda_min < 0.0 {
        alpha = alpha.min(-1.0 / lambda_min);
    }
    Ok(alpha)
}
