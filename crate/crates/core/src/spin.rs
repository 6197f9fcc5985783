//! The M-LXIX spin system
//!
//! ```text
//! S_t = (-sqrt(S_x² - u²) S_x + u S ∧ S_x) / sqrt(S_x²)
//! u_x = v sqrt(S_t² - u²)
//! v_t = -S · (S_t ∧ S_x)
//! ```
//!
//! `S` and `v` are evolved in time. `u` carries no time derivative, so it is
//! treated as a constraint: every RK4 stage re-solves `u_x = v sqrt(k² - u²)`
//! across the grid from the left boundary value. The radicand uses `k² = S_x²`
//! in place of `S_t²`; the two agree on solutions, and using `k` avoids making
//! `u` depend on the rate it feeds into.
//!
//! Only `β = +1` is representable here (`S · S = -1` has no real solution).

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::FrameState;
use crate::numgrid::{diff_x, step_rk4, Boundary, Grid1D, Rk4State};
use crate::Beta;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpinOptions {
    /// Smallest admissible curvature `k = |S_x|`.
    pub k_min: f64,
    /// Radicands in `[-clamp_slack, 0)` clamp to zero.
    pub clamp_slack: f64,
    /// Left boundary value for the `u` constraint; `None` keeps the field's `u[0]`.
    pub u_left: Option<f64>,
}

impl Default for SpinOptions {
    fn default() -> Self {
        SpinOptions {
            k_min: 1e-8,
            clamp_slack: 1e-12,
            u_left: None,
        }
    }
}

impl SpinOptions {
    fn radicand(&self, k: f64, u: f64, index: usize) -> Result<f64> {
        clamp_radicand(k * k - u * u, self.clamp_slack, index)
    }
}

fn clamp_radicand(r: f64, slack: f64, index: usize) -> Result<f64> {
    if r >= 0.0 {
        Ok(r)
    } else if r >= -slack {
        Ok(0.0)
    } else {
        Err(Error::SqrtDomain { index, radicand: r })
    }
}

/// Spin vector and scalar fields on a 1-D grid at one time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinField {
    pub grid: Grid1D,
    pub t: f64,
    pub beta: Beta,
    pub s: Vec<Vector3<f64>>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl SpinField {
    pub fn new(grid: Grid1D, t: f64, beta: Beta, s: Vec<Vector3<f64>>, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        let f = SpinField { grid, t, beta, s, u, v };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.beta == Beta::Minus {
            return Err(Error::UnsupportedBeta(-1));
        }
        self.grid.check_len(self.s.len())?;
        self.grid.check_len(self.u.len())?;
        self.grid.check_len(self.v.len())?;
        if !self.t.is_finite() {
            return Err(Error::InvalidArgument("t must be finite".into()));
        }
        if let Some(index) = self.s.iter().position(|s| !s.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite { what: "S", index });
        }
        for (what, f) in [("u", &self.u), ("v", &self.v)] {
            if let Some(index) = f.iter().position(|c| !c.is_finite()) {
                return Err(Error::NonFinite { what, index });
            }
        }
        Ok(())
    }

    /// `max | |S|² - 1 |` over the grid.
    pub fn sphere_drift(&self) -> f64 {
        self.s
            .iter()
            .map(|s| (s.norm_squared() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Projects `S` back to the unit sphere.
    pub fn renormalize(&mut self) {
        for s in &mut self.s {
            *s /= s.norm();
        }
    }

    /// `S = (cos mx, sin mx, 0)`, `u = v = 0`: translates rigidly with unit speed.
    pub fn traveling_circle(grid: Grid1D, wavenumber: f64) -> Result<Self> {
        let s = grid
            .coords()
            .iter()
            .map(|x| Vector3::new((wavenumber * x).cos(), (wavenumber * x).sin(), 0.0))
            .collect();
        let n = grid.n;
        SpinField::new(grid, 0.0, Beta::Plus, s, vec![0.0; n], vec![0.0; n])
    }

    /// Tangent indicatrix of a helix: `S = (κ cos x, κ sin x, sqrt(1 - κ²))`,
    /// with constant curvature `κ` and torsion `sqrt(1 - κ²)`. `v` is set to
    /// the torsion and `u` solved from the constraint starting at `u_left`.
    pub fn helix(grid: Grid1D, curvature: f64, u_left: f64, opts: &SpinOptions) -> Result<Self> {
        if !(curvature > 0.0 && curvature < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "helix curvature {curvature} must lie in (0, 1)"
            )));
        }
        let lift = (1.0 - curvature * curvature).sqrt();
        let s: Vec<Vector3<f64>> = grid
            .coords()
            .iter()
            .map(|x| Vector3::new(curvature * x.cos(), curvature * x.sin(), lift))
            .collect();
        let v = vec![lift; grid.n];
        let (_, k) = tangent_derivative(&s, &grid, opts)?;
        let u = solve_u(&k, &v, &grid, u_left, opts)?;
        SpinField::new(grid, 0.0, Beta::Plus, s, u, v)
    }

    /// A closed circle perturbed by random low Fourier modes. `v` is the
    /// torsion of the initial curve, scaled down if needed so the constraint
    /// solve from `u(x0) = 0` cannot reach `|u| = k`.
    ///
    /// On a periodic grid `u` generally fails to close up, since the flux of
    /// `v sqrt(k² - u²)` around the curve is not zero, and the seam then
    /// carries a jump in `u`. Evolve on a one-sided grid to avoid it.
    pub fn random_smooth(grid: Grid1D, seed: u64, amplitude: f64, opts: &SpinOptions) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes: Vec<(Vector3<f64>, Vector3<f64>)> = (0..3)
            .map(|_| {
                let mut draw = || {
                    Vector3::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    )
                };
                (draw(), draw())
            })
            .collect();
        let period = grid.length();
        let s: Vec<Vector3<f64>> = grid
            .coords()
            .iter()
            .map(|x| {
                let th = 2.0 * std::f64::consts::PI * (x - grid.x0) / period;
                let mut p = Vector3::new(th.cos(), th.sin(), 0.0);
                for (m, (a, b)) in modes.iter().enumerate() {
                    let w = (m + 1) as f64 * th;
                    p += (a * w.cos() + b * w.sin()) * (amplitude / (m + 1) as f64);
                }
                p.normalize()
            })
            .collect();
        let n = grid.n;
        let mut f = SpinField::new(grid, 0.0, Beta::Plus, s, vec![0.0; n], vec![0.0; n])?;
        let frame = build_frame(&f, opts)?;
        // |u| <= k_max ∫|v| dx, so capping that at k_min / 2 keeps the
        // constraint clear of its turning point.
        let (k_lo, k_hi) = frame
            .k
            .iter()
            .fold((f64::MAX, 0.0f64), |(a, b), k| (a.min(*k), b.max(*k)));
        let mass: f64 = frame.tau.iter().map(|t| t.abs()).sum::<f64>() * grid.dx;
        let scale = if mass * k_hi > 0.5 * k_lo {
            0.5 * k_lo / (mass * k_hi)
        } else {
            1.0
        };
        f.v = frame.tau.iter().map(|t| t * scale).collect();
        f.u = solve_u(&frame.k, &f.v, &grid, 0.0, opts)?;
        Ok(f)
    }
}

/// `S_x` projected onto the tangent plane of `S`, and `k = |S_x|`.
///
/// Central differences of a unit field are tangent only to second order; the
/// projection makes `S · S_x = 0` hold to round-off, which keeps the frame
/// orthonormal and the rate tangent.
pub fn tangent_derivative(
    s: &[Vector3<f64>],
    grid: &Grid1D,
    opts: &SpinOptions,
) -> Result<(Vec<Vector3<f64>>, Vec<f64>)> {
    let mut sx = diff_x(s, grid)?;
    let mut k = Vec::with_capacity(s.len());
    for (i, (d, si)) in sx.iter_mut().zip(s).enumerate() {
        *d -= si * (d.dot(si) / si.norm_squared());
        let ki = d.norm();
        if !(ki >= opts.k_min) {
            return Err(Error::DegenerateFrame { index: i, k: ki });
        }
        k.push(ki);
    }
    Ok((sx, k))
}

/// Integrates `u_x = v sqrt(k² - u²)` from `u(x0) = u_left` with Heun's method.
pub fn solve_u(k: &[f64], v: &[f64], grid: &Grid1D, u_left: f64, opts: &SpinOptions) -> Result<Vec<f64>> {
    grid.check_len(k.len())?;
    grid.check_len(v.len())?;
    let rate = |i: usize, u: f64| -> Result<f64> { Ok(v[i] * opts.radicand(k[i], u, i)?.sqrt()) };
    let mut u = Vec::with_capacity(grid.n);
    u.push(u_left);
    let h = grid.dx;
    for i in 0..grid.n - 1 {
        let f0 = rate(i, u[i])?;
        let pred = u[i] + h * f0;
        let f1 = rate(i + 1, pred)?;
        u.push(u[i] + 0.5 * h * (f0 + f1));
    }
    let last = grid.n - 1;
    opts.radicand(k[last], u[last], last)?;
    Ok(u)
}

/// Time rates of a spin field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinRates {
    pub ds: Vec<Vector3<f64>>,
    /// Constraint residual `u_x - v sqrt(S_t² - u²)`; `u` has no time rate.
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
    pub k: Vec<f64>,
    /// `k² - u²`, the radicand used by the dynamics.
    pub radicand_k: Vec<f64>,
    /// `S_t² - u²`, the radicand as written in the constraint.
    pub radicand_st: Vec<f64>,
}

fn spin_velocity(s: &Vector3<f64>, sx: &Vector3<f64>, k: f64, u: f64, root: f64) -> Vector3<f64> {
    (sx * (-root) + s.cross(sx) * u) / k
}

/// Rates of `S` and `v`, plus the constraint residual for `u`.
pub fn spin_rhs(f: &SpinField, opts: &SpinOptions) -> Result<SpinRates> {
    f.validate()?;
    let (sx, k) = tangent_derivative(&f.s, &f.grid, opts)?;
    let n = f.grid.n;
    let mut rates = SpinRates {
        ds: Vec::with_capacity(n),
        du: Vec::with_capacity(n),
        dv: Vec::with_capacity(n),
        k: k.clone(),
        radicand_k: Vec::with_capacity(n),
        radicand_st: Vec::with_capacity(n),
    };
    let mut roots_st = Vec::with_capacity(n);
    for i in 0..n {
        let u = f.u[i];
        let raw = k[i] * k[i] - u * u;
        let root = clamp_radicand(raw, opts.clamp_slack, i)?.sqrt();
        let ds = spin_velocity(&f.s[i], &sx[i], k[i], u, root);
        rates.dv.push(-f.s[i].dot(&ds.cross(&sx[i])));
        let raw_st = ds.norm_squared() - u * u;
        roots_st.push(clamp_radicand(raw_st, opts.clamp_slack, i)?.sqrt());
        rates.radicand_k.push(raw);
        rates.radicand_st.push(raw_st);
        rates.ds.push(ds);
    }
    let u_x = diff_x(&f.u, &f.grid)?;
    rates.du = (0..n).map(|i| u_x[i] - f.v[i] * roots_st[i]).collect();
    Ok(rates)
}

#[derive(Debug, Clone, PartialEq)]
struct SpinState {
    s: Vec<Vector3<f64>>,
    v: Vec<f64>,
}

impl Rk4State for SpinState {
    fn add_scaled(&self, a: f64, rate: &Self) -> Self {
        SpinState {
            s: self.s.add_scaled(a, &rate.s),
            v: self.v.add_scaled(a, &rate.v),
        }
    }

    fn all_finite(&self) -> bool {
        self.s.all_finite() && self.v.all_finite()
    }
}

/// Rates of `(S, v)` with `u` re-solved from the constraint.
fn evolved_rates(state: &SpinState, grid: &Grid1D, u_left: f64, opts: &SpinOptions) -> Result<SpinState> {
    let (sx, k) = tangent_derivative(&state.s, grid, opts)?;
    let u = solve_u(&k, &state.v, grid, u_left, opts)?;
    let mut rate = SpinState {
        s: Vec::with_capacity(grid.n),
        v: Vec::with_capacity(grid.n),
    };
    for i in 0..grid.n {
        let root = opts.radicand(k[i], u[i], i)?.sqrt();
        let ds = spin_velocity(&state.s[i], &sx[i], k[i], u[i], root);
        rate.v.push(-state.s[i].dot(&ds.cross(&sx[i])));
        rate.s.push(ds);
    }
    Ok(rate)
}

/// Advances by `steps` RK4 steps of size `dt`, calling `visit` after each.
fn run(
    f: &SpinField,
    dt: f64,
    steps: usize,
    renorm: bool,
    opts: &SpinOptions,
    mut visit: impl FnMut(usize, &SpinField),
) -> Result<SpinField> {
    f.validate()?;
    if dt == 0.0 || steps == 0 {
        return Ok(f.clone());
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt = {dt} must be positive")));
    }
    let grid = f.grid;
    let u_left = opts.u_left.unwrap_or(f.u[0]);
    let mut state = SpinState {
        s: f.s.clone(),
        v: f.v.clone(),
    };
    let mut out = f.clone();
    for step in 1..=steps {
        state =
            step_rk4(&state, dt, |_, y| evolved_rates(y, &grid, u_left, opts)).map_err(|e| Error::at_step(step, e))?;
        if renorm {
            for s in &mut state.s {
                *s /= s.norm();
            }
        }
        if grid.boundary == Boundary::Periodic {
            let n = grid.n;
            state.s[n - 1] = state.s[0];
            state.v[n - 1] = state.v[0];
        }
        out.s.clone_from(&state.s);
        out.v.clone_from(&state.v);
        out.t = f.t + step as f64 * dt;
        let (_, k) = tangent_derivative(&out.s, &grid, opts).map_err(|e| Error::at_step(step, e))?;
        out.u = solve_u(&k, &out.v, &grid, u_left, opts).map_err(|e| Error::at_step(step, e))?;
        visit(step, &out);
    }
    Ok(out)
}

/// RK4 evolution of `(S, v)` with `u` held on its constraint.
pub fn evolve(f: &SpinField, dt: f64, steps: usize, renorm: bool, opts: &SpinOptions) -> Result<SpinField> {
    run(f, dt, steps, renorm, opts, |_, _| {})
}

/// Like [`evolve`], keeping the initial field and every `save_every`-th step.
pub fn evolve_trajectory(
    f: &SpinField,
    dt: f64,
    steps: usize,
    renorm: bool,
    save_every: usize,
    opts: &SpinOptions,
) -> Result<Vec<SpinField>> {
    let every = save_every.max(1);
    let mut traj = vec![f.clone()];
    run(f, dt, steps, renorm, opts, |step, g| {
        if step % every == 0 {
            traj.push(g.clone());
        }
    })?;
    Ok(traj)
}

/// Frame `e1 = S`, `e2 = S_x / k`, `e3 = S ∧ S_x / k` with `k = +|S_x|`,
/// torsion `τ = e2_x · e3` and rates `ω1 = 0`, `ω2 = -u`, `ω3 = -sqrt(k² - u²)`.
pub fn build_frame(f: &SpinField, opts: &SpinOptions) -> Result<FrameState> {
    f.validate()?;
    let (sx, k) = tangent_derivative(&f.s, &f.grid, opts)?;
    let n = f.grid.n;
    let e2: Vec<Vector3<f64>> = sx.iter().zip(&k).map(|(d, ki)| d / *ki).collect();
    let e3: Vec<Vector3<f64>> =
        f.s.iter()
            .zip(&sx)
            .zip(&k)
            .map(|((s, d), ki)| s.cross(d) / *ki)
            .collect();
    let e2_x = diff_x(&e2, &f.grid)?;
    let tau = e2_x.iter().zip(&e3).map(|(a, b)| a.dot(b)).collect();
    let omega3 = (0..n)
        .map(|i| Ok(-opts.radicand(k[i], f.u[i], i)?.sqrt()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(FrameState {
        grid: f.grid,
        beta: f.beta,
        e1: f.s.clone(),
        e2,
        e3,
        tau,
        omega1: vec![0.0; n],
        omega2: f.u.iter().map(|u| -u).collect(),
        omega3,
        k,
    })
}
