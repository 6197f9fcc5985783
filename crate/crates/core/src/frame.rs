//! Moving frames: the coefficient matrices of the x- and t-systems, frame
//! transport, the curvature-torsion compatibility conditions and the M-0
//! reduction residual.
//!
//! A triad is stored as a `Matrix3` whose rows are `e1, e2, e3`, so the linear
//! systems read `E_x = A E` and `E_t = B E`.
//!
//! The Gram matrix of a triad is `E η E^T`, where `η` is the ambient metric:
//! the identity for `β = +1` and `diag(-1, 1, 1)` for `β = -1`. Both `A` and
//! `B` satisfy `M G + G M^T = 0` for `G = diag(β, 1, 1)`, so transport keeps
//! the Gram matrix equal to `G` once it starts there.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numgrid::{diff_axis, step_rk4, Axis, Boundary, Field2D, Grid1D, Grid2D};
use crate::spin::{build_frame, SpinField, SpinOptions};
use crate::Beta;

pub type Triad = Matrix3<f64>;

/// Coefficient matrix of the x-system.
pub fn matrix_a(k: f64, tau: f64, beta: Beta) -> Matrix3<f64> {
    let b = beta.value();
    Matrix3::new(
        0.0,
        k,
        0.0, //
        -b * k,
        0.0,
        tau, //
        0.0,
        -tau,
        0.0,
    )
}

/// Coefficient matrix of the t-system.
pub fn matrix_b(omega1: f64, omega2: f64, omega3: f64, beta: Beta) -> Matrix3<f64> {
    let b = beta.value();
    Matrix3::new(
        0.0,
        omega3,
        -omega2, //
        -b * omega3,
        0.0,
        omega1, //
        b * omega2,
        -omega1,
        0.0,
    )
}

pub fn triad(e1: Vector3<f64>, e2: Vector3<f64>, e3: Vector3<f64>) -> Triad {
    Matrix3::from_rows(&[e1.transpose(), e2.transpose(), e3.transpose()])
}

fn ambient_metric(beta: Beta) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(beta.value(), 1.0, 1.0))
}

/// Gram matrix the frame systems preserve: `diag(β, 1, 1)`.
pub fn target_gram(beta: Beta) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(beta.value(), 1.0, 1.0))
}

pub fn gram(e: &Triad, beta: Beta) -> Matrix3<f64> {
    e * ambient_metric(beta) * e.transpose()
}

pub fn gram_deviation(e: &Triad, beta: Beta) -> f64 {
    (gram(e, beta) - target_gram(beta)).amax()
}

/// Gram-Schmidt in row order. Euclidean, so only meaningful for `β = +1`.
pub fn reorthonormalize(e: &Triad) -> Triad {
    let r = |i: usize| e.row(i).transpose();
    let e1 = r(0).normalize();
    let e2 = (r(1) - e1 * r(1).dot(&e1)).normalize();
    let e3 = (r(2) - e1 * r(2).dot(&e1) - e2 * r(2).dot(&e2)).normalize();
    triad(e1, e2, e3)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportOptions {
    /// `None` re-orthonormalizes for `β = +1` only.
    pub reorthonormalize: Option<bool>,
    /// Gram deviation of an un-projected step that counts as blow-up.
    pub drift_limit: f64,
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions {
            reorthonormalize: None,
            drift_limit: 1e-4,
        }
    }
}

impl TransportOptions {
    fn project(&self, beta: Beta) -> bool {
        self.reorthonormalize.unwrap_or(beta == Beta::Plus)
    }
}

/// Transports `frame0` through `n` nodes of spacing `h` under `E' = C(i) E`,
/// with the coefficient at step midpoints taken as the mean of the two nodes.
/// Returns the frames and the Gram deviation of each step before projection.
fn transport_line(
    frame0: &Triad,
    coeff: impl Fn(usize) -> Matrix3<f64>,
    n: usize,
    h: f64,
    beta: Beta,
    opts: &TransportOptions,
) -> Result<(Vec<Triad>, Vec<f64>)> {
    let project = opts.project(beta);
    let mut frames = Vec::with_capacity(n);
    let mut drift = Vec::with_capacity(n.saturating_sub(1));
    frames.push(*frame0);
    let mut c_next = coeff(0);
    for i in 0..n - 1 {
        let c0 = c_next;
        c_next = coeff(i + 1);
        let c_mid = (c0 + c_next) * 0.5;
        let c1 = c_next;
        let next = step_rk4(&frames[i], h, |off, e: &Triad| {
            let c = if off == 0.0 {
                c0
            } else if off == h {
                c1
            } else {
                c_mid
            };
            Ok(c * e)
        })?;
        let dev = gram_deviation(&next, beta);
        if dev > opts.drift_limit {
            return Err(Error::GramDrift {
                index: i + 1,
                deviation: dev,
                limit: opts.drift_limit,
            });
        }
        drift.push(dev);
        frames.push(if project { reorthonormalize(&next) } else { next });
    }
    Ok((frames, drift))
}

/// Orthonormal triad with curvature, torsion and time rates on a 1-D grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameState {
    pub grid: Grid1D,
    pub beta: Beta,
    pub e1: Vec<Vector3<f64>>,
    pub e2: Vec<Vector3<f64>>,
    pub e3: Vec<Vector3<f64>>,
    pub k: Vec<f64>,
    pub tau: Vec<f64>,
    pub omega1: Vec<f64>,
    pub omega2: Vec<f64>,
    pub omega3: Vec<f64>,
}

impl FrameState {
    pub fn from_triads(grid: Grid1D, beta: Beta, frames: &[Triad], k: Vec<f64>, tau: Vec<f64>) -> Result<Self> {
        grid.check_len(frames.len())?;
        grid.check_len(k.len())?;
        grid.check_len(tau.len())?;
        let row = |i: usize| frames.iter().map(|e| e.row(i).transpose()).collect();
        let n = frames.len();
        Ok(FrameState {
            grid,
            beta,
            e1: row(0),
            e2: row(1),
            e3: row(2),
            k,
            tau,
            omega1: vec![0.0; n],
            omega2: vec![0.0; n],
            omega3: vec![0.0; n],
        })
    }

    pub fn triad(&self, i: usize) -> Triad {
        triad(self.e1[i], self.e2[i], self.e3[i])
    }

    /// Largest Gram deviation over the grid.
    pub fn gram_deviation(&self) -> f64 {
        (0..self.grid.n)
            .map(|i| gram_deviation(&self.triad(i), self.beta))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameTransport {
    pub state: FrameState,
    /// Gram deviation after each RK4 step, before re-orthonormalization.
    pub drift: Vec<f64>,
}

/// Integrates `E_x = A(k, τ) E` from `frame0` at `x0` across the grid.
pub fn transport_frame_x(
    frame0: &Triad,
    k: &[f64],
    tau: &[f64],
    grid: &Grid1D,
    beta: Beta,
    opts: &TransportOptions,
) -> Result<FrameTransport> {
    grid.check_len(k.len())?;
    grid.check_len(tau.len())?;
    let dev0 = gram_deviation(frame0, beta);
    if dev0 > opts.drift_limit {
        return Err(Error::GramDrift {
            index: 0,
            deviation: dev0,
            limit: opts.drift_limit,
        });
    }
    let (frames, drift) = transport_line(frame0, |i| matrix_a(k[i], tau[i], beta), grid.n, grid.dx, beta, opts)?;
    let state = FrameState::from_triads(*grid, beta, &frames, k.to_vec(), tau.to_vec())?;
    Ok(FrameTransport { state, drift })
}

/// Curvature, torsion and rates over an (x, t) grid; `ω1` is identically zero.
///
/// `k` is signed here: curvature data imported from surfaces (the sphere's
/// `k = cos θ`, for instance) changes sign, and the compatibility conditions
/// do not care.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtFields {
    pub grid: Grid2D,
    pub k: Vec<f64>,
    pub tau: Vec<f64>,
    pub omega2: Vec<f64>,
    pub omega3: Vec<f64>,
}

impl CtFields {
    pub fn new(grid: Grid2D, k: Vec<f64>, tau: Vec<f64>, omega2: Vec<f64>, omega3: Vec<f64>) -> Result<Self> {
        for (what, f) in [("k", &k), ("tau", &tau), ("omega2", &omega2), ("omega3", &omega3)] {
            grid.check_len(f.len())?;
            if let Some(index) = f.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what, index });
            }
        }
        Ok(CtFields {
            grid,
            k,
            tau,
            omega2,
            omega3,
        })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        let n = grid.len();
        CtFields {
            grid,
            k: vec![0.0; n],
            tau: vec![0.0; n],
            omega2: vec![0.0; n],
            omega3: vec![0.0; n],
        }
    }

    /// Imports a spin trajectory, identifying `τ = v`, `ω2 = -u` and
    /// `ω3 = -sqrt(k² - u²)` with `k = |S_x|`.
    pub fn from_spin_trajectory(traj: &[SpinField], opts: &SpinOptions) -> Result<Self> {
        let gt = time_grid(traj)?;
        let gx = traj[0].grid;
        let grid = Grid2D::new(gx, gt)?;
        let mut out = CtFields::zeros(grid);
        for (it, f) in traj.iter().enumerate() {
            let fr = build_frame(f, opts)?;
            for ix in 0..gx.n {
                let idx = grid.index(ix, it);
                out.k[idx] = fr.k[ix];
                out.tau[idx] = f.v[ix];
                out.omega2[idx] = fr.omega2[ix];
                out.omega3[idx] = fr.omega3[ix];
            }
        }
        Ok(out)
    }

    fn column(&self, f: &[f64], it: usize) -> Vec<f64> {
        (0..self.grid.gx.n).map(|ix| f[self.grid.index(ix, it)]).collect()
    }

    /// `(k, τ)` along x at time index `it`.
    pub fn curvature_at(&self, it: usize) -> (Vec<f64>, Vec<f64>) {
        (self.column(&self.k, it), self.column(&self.tau, it))
    }
}

pub(crate) fn time_grid(traj: &[SpinField]) -> Result<Grid1D> {
    let first = traj
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty trajectory".into()))?;
    if let Some(bad) = traj.iter().position(|f| f.grid != first.grid) {
        return Err(Error::GridMismatch(format!(
            "slice {bad} has a different x grid from slice 0"
        )));
    }
    let times: Vec<f64> = traj.iter().map(|f| f.t).collect();
    Grid1D::from_samples(&times, Boundary::OneSided)
}

/// Residuals of the compatibility conditions:
/// `r1 = k_t - ω3_x - τ ω2`, `r2 = τ_t + k ω2`, `r3 = ω2_x - τ ω3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatResidual {
    pub grid: Grid2D,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub r3: Vec<f64>,
}

impl CompatResidual {
    pub fn max_norms(&self) -> [f64; 3] {
        use crate::convergence::max_abs;
        [max_abs(&self.r1), max_abs(&self.r2), max_abs(&self.r3)]
    }

    pub fn max_norm(&self) -> f64 {
        self.max_norms().into_iter().fold(0.0, f64::max)
    }
}

pub fn compatibility_residual(ct: &CtFields) -> Result<CompatResidual> {
    let g = &ct.grid;
    let k_t = diff_axis(&ct.k, g, Axis::T)?;
    let tau_t = diff_axis(&ct.tau, g, Axis::T)?;
    let w3_x = diff_axis(&ct.omega3, g, Axis::X)?;
    let w2_x = diff_axis(&ct.omega2, g, Axis::X)?;
    let n = g.len();
    let mut r = CompatResidual {
        grid: *g,
        r1: Vec::with_capacity(n),
        r2: Vec::with_capacity(n),
        r3: Vec::with_capacity(n),
    };
    for i in 0..n {
        r.r1.push(k_t[i] - w3_x[i] - ct.tau[i] * ct.omega2[i]);
        r.r2.push(tau_t[i] + ct.k[i] * ct.omega2[i]);
        r.r3.push(w2_x[i] - ct.tau[i] * ct.omega3[i]);
    }
    Ok(r)
}

/// Frames at a sequence of uniformly spaced times.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSeries {
    pub gt: Grid1D,
    pub slices: Vec<FrameState>,
}

impl FrameSeries {
    pub fn grid(&self) -> Grid2D {
        Grid2D {
            gx: self.slices[0].grid,
            gt: self.gt,
        }
    }

    /// Frames of each slice of a spin trajectory, with `τ = v` as in
    /// [`CtFields::from_spin_trajectory`].
    pub fn from_spin_trajectory(traj: &[SpinField], opts: &SpinOptions) -> Result<Self> {
        let gt = time_grid(traj)?;
        let slices = traj
            .iter()
            .map(|f| {
                let mut fr = build_frame(f, opts)?;
                fr.tau = f.v.clone();
                Ok(fr)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FrameSeries { gt, slices })
    }

    fn gather<T: Copy>(&self, pick: impl Fn(&FrameState) -> &Vec<T>) -> Vec<T> {
        let g = self.grid();
        let mut out = Vec::with_capacity(g.len());
        for ix in 0..g.gx.n {
            for s in &self.slices {
                out.push(pick(s)[ix]);
            }
        }
        out
    }
}

/// Builds the frame field over `ct.grid` from `frame0` at `(x0, t0)`:
/// first along `t` at `x0` with `B(0, ω2, ω3)`, then along `x` at every time
/// with `A(k, τ)`. On compatible data the result solves both systems.
pub fn frame_field(frame0: &Triad, ct: &CtFields, beta: Beta, opts: &TransportOptions) -> Result<FrameSeries> {
    let g = ct.grid;
    let (column, _) = transport_line(
        frame0,
        |it| {
            let i = g.index(0, it);
            matrix_b(0.0, ct.omega2[i], ct.omega3[i], beta)
        },
        g.gt.n,
        g.gt.dx,
        beta,
        opts,
    )?;
    let mut slices = Vec::with_capacity(g.gt.n);
    for (it, start) in column.iter().enumerate() {
        let (k, tau) = ct.curvature_at(it);
        let mut state = transport_frame_x(start, &k, &tau, &g.gx, beta, opts)?.state;
        state.omega2 = ct.column(&ct.omega2, it);
        state.omega3 = ct.column(&ct.omega3, it);
        slices.push(state);
    }
    Ok(FrameSeries { gt: g.gt, slices })
}

/// `τ_t - ω1_x - e1 · (e1_x ∧ e1_t)` over the series grid.
///
/// With `ω1 = 0` and `τ = v` this vanishes on M-LXIX solutions, since
/// `e1 · (e1_x ∧ e1_t) = -k ω2 = τ_t` there.
pub fn m0_residual(series: &FrameSeries) -> Result<Field2D<f64>> {
    let g = series.grid();
    if let Some(bad) = series.slices.iter().position(|s| s.grid != g.gx) {
        return Err(Error::GridMismatch(format!("frame slice {bad} has a different x grid")));
    }
    let e1 = series.gather(|s| &s.e1);
    let tau = series.gather(|s| &s.tau);
    let omega1 = series.gather(|s| &s.omega1);
    let e1_x = diff_axis(&e1, &g, Axis::X)?;
    let e1_t = diff_axis(&e1, &g, Axis::T)?;
    let tau_t = diff_axis(&tau, &g, Axis::T)?;
    let w1_x = diff_axis(&omega1, &g, Axis::X)?;
    let values = (0..g.len())
        .map(|i| tau_t[i] - w1_x[i] - e1[i].dot(&e1_x[i].cross(&e1_t[i])))
        .collect();
    Field2D::new(g, values)
}
