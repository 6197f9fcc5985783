//! Uniform grids, second-order finite differences, trapezoid quadrature and a
//! fixed-step RK4 integrator.
//!
//! Fields are flat arrays indexed by grid point. Two-dimensional fields are
//! x-major: the value at `(ix, it)` lives at `ix * nt + it`.
//!
//! A periodic [`Grid1D`] stores the closing point: point `n - 1` coincides with
//! point `0`, so the period is `(n - 1) * dx`. Stencils at either end wrap to
//! the interior neighbours `1` and `n - 2`.

use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    OneSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
    pub boundary: Boundary,
}

impl Grid1D {
    pub fn new(x0: f64, dx: f64, n: usize, boundary: Boundary) -> Result<Self> {
        let g = Grid1D { x0, dx, n, boundary };
        g.validate()?;
        Ok(g)
    }

    /// Grid with `n` points spanning `[a, b]` inclusive.
    pub fn spanning(a: f64, b: f64, n: usize, boundary: Boundary) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGrid(format!("n = {n} is below 3")));
        }
        Self::new(a, (b - a) / (n - 1) as f64, n, boundary)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dx.is_finite() && self.dx > 0.0) {
            return Err(Error::InvalidGrid(format!("dx = {} must be positive", self.dx)));
        }
        if !self.x0.is_finite() {
            return Err(Error::InvalidGrid("x0 must be finite".into()));
        }
        if self.n < 3 {
            return Err(Error::InvalidGrid(format!("n = {} is below 3", self.n)));
        }
        Ok(())
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn length(&self) -> f64 {
        (self.n - 1) as f64 * self.dx
    }

    /// The grid with spacing halved over the same interval.
    pub fn refined(&self) -> Grid1D {
        Grid1D {
            x0: self.x0,
            dx: self.dx / 2.0,
            n: 2 * self.n - 1,
            boundary: self.boundary,
        }
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: len,
            });
        }
        Ok(())
    }
}

impl Grid1D {
    /// Uniform grid through the given sample coordinates.
    pub fn from_samples(points: &[f64], boundary: Boundary) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidGrid(format!(
                "{} samples, at least 3 needed",
                points.len()
            )));
        }
        let g = Grid1D::new(points[0], points[1] - points[0], points.len(), boundary)?;
        let tol = 1e-9 * g.dx.max(1.0) * points.len() as f64;
        for (i, p) in points.iter().enumerate() {
            if (p - g.coord(i)).abs() > tol {
                return Err(Error::InvalidGrid(format!(
                    "sample {i} at {p} breaks uniform spacing {}",
                    g.dx
                )));
            }
        }
        Ok(g)
    }
}

/// Values on a [`Grid2D`], x-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field2D<T> {
    pub grid: Grid2D,
    pub values: Vec<T>,
}

impl<T> Field2D<T> {
    pub fn new(grid: Grid2D, values: Vec<T>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Field2D { grid, values })
    }

    pub fn at(&self, ix: usize, it: usize) -> &T {
        &self.values[self.grid.index(ix, it)]
    }
}

impl Field2D<f64> {
    pub fn max_abs(&self) -> f64 {
        crate::convergence::max_abs(&self.values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub gx: Grid1D,
    pub gt: Grid1D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    T,
}

impl Grid2D {
    pub fn new(gx: Grid1D, gt: Grid1D) -> Result<Self> {
        gx.validate()?;
        gt.validate()?;
        Ok(Grid2D { gx, gt })
    }

    pub fn len(&self) -> usize {
        self.gx.n * self.gt.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, ix: usize, it: usize) -> usize {
        ix * self.gt.n + it
    }

    #[inline]
    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.gt.n, idx % self.gt.n)
    }

    pub fn point(&self, idx: usize) -> (f64, f64) {
        let (ix, it) = self.split(idx);
        (self.gx.coord(ix), self.gt.coord(it))
    }

    pub fn refined(&self) -> Grid2D {
        Grid2D {
            gx: self.gx.refined(),
            gt: self.gt.refined(),
        }
    }

    /// Samples `f(x, t)` at every grid point in x-major order.
    pub fn sample<T>(&self, mut f: impl FnMut(f64, f64) -> T) -> Vec<T> {
        let mut out = Vec::with_capacity(self.len());
        for ix in 0..self.gx.n {
            let x = self.gx.coord(ix);
            for it in 0..self.gt.n {
                out.push(f(x, self.gt.coord(it)));
            }
        }
        out
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: len,
            });
        }
        Ok(())
    }

    fn axis(&self, axis: Axis) -> (&Grid1D, usize, usize) {
        // (grid along axis, stride, number of lines)
        match axis {
            Axis::X => (&self.gx, self.gt.n, self.gt.n),
            Axis::T => (&self.gt, 1, self.gx.n),
        }
    }

    fn line_offset(&self, axis: Axis, line: usize) -> usize {
        match axis {
            Axis::X => line,
            Axis::T => line * self.gt.n,
        }
    }
}

/// Values that finite differences, quadrature and RK4 can combine linearly.
pub trait Linear: Copy {
    fn zero() -> Self;
    fn plus(self, other: Self) -> Self;
    fn minus(self, other: Self) -> Self;
    fn scaled(self, a: f64) -> Self;
    fn finite(&self) -> bool;
}

impl Linear for f64 {
    fn zero() -> Self {
        0.0
    }
    fn plus(self, o: Self) -> Self {
        self + o
    }
    fn minus(self, o: Self) -> Self {
        self - o
    }
    fn scaled(self, a: f64) -> Self {
        self * a
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
}

impl Linear for Vector3<f64> {
    fn zero() -> Self {
        Vector3::zeros()
    }
    fn plus(self, o: Self) -> Self {
        self + o
    }
    fn minus(self, o: Self) -> Self {
        self - o
    }
    fn scaled(self, a: f64) -> Self {
        self * a
    }
    fn finite(&self) -> bool {
        self.iter().all(|c| c.is_finite())
    }
}

impl Linear for Matrix3<f64> {
    fn zero() -> Self {
        Matrix3::zeros()
    }
    fn plus(self, o: Self) -> Self {
        self + o
    }
    fn minus(self, o: Self) -> Self {
        self - o
    }
    fn scaled(self, a: f64) -> Self {
        self * a
    }
    fn finite(&self) -> bool {
        self.iter().all(|c| c.is_finite())
    }
}

impl Linear for Matrix2<Complex64> {
    fn zero() -> Self {
        Matrix2::zeros()
    }
    fn plus(self, o: Self) -> Self {
        self + o
    }
    fn minus(self, o: Self) -> Self {
        self - o
    }
    fn scaled(self, a: f64) -> Self {
        self.map(|z| z * a)
    }
    fn finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

fn check_finite<T: Linear>(f: &[T], what: &'static str) -> Result<()> {
    match f.iter().position(|v| !v.finite()) {
        Some(index) => Err(Error::NonFinite { what, index }),
        None => Ok(()),
    }
}

/// First derivative along one strided line of `n` values.
fn diff_line<T: Linear>(f: &[T], out: &mut [T], offset: usize, stride: usize, g: &Grid1D) {
    let n = g.n;
    let at = |i: usize| f[offset + i * stride];
    let inv2h = 1.0 / (2.0 * g.dx);
    for i in 1..n - 1 {
        out[offset + i * stride] = at(i + 1).minus(at(i - 1)).scaled(inv2h);
    }
    match g.boundary {
        Boundary::Periodic => {
            let d = at(1).minus(at(n - 2)).scaled(inv2h);
            out[offset] = d;
            out[offset + (n - 1) * stride] = d;
        }
        Boundary::OneSided => {
            // (-3 f0 + 4 f1 - f2) / 2h and its mirror
            out[offset] = at(1).scaled(4.0).minus(at(0).scaled(3.0)).minus(at(2)).scaled(inv2h);
            out[offset + (n - 1) * stride] = at(n - 1)
                .scaled(3.0)
                .minus(at(n - 2).scaled(4.0))
                .plus(at(n - 3))
                .scaled(inv2h);
        }
    }
}

/// Second derivative along one strided line of `n` values.
fn diff2_line<T: Linear>(f: &[T], out: &mut [T], offset: usize, stride: usize, g: &Grid1D) {
    let n = g.n;
    let at = |i: usize| f[offset + i * stride];
    let inv_h2 = 1.0 / (g.dx * g.dx);
    let centred = |l: T, c: T, r: T| l.plus(r).minus(c.scaled(2.0)).scaled(inv_h2);
    for i in 1..n - 1 {
        out[offset + i * stride] = centred(at(i - 1), at(i), at(i + 1));
    }
    match g.boundary {
        Boundary::Periodic => {
            let d = centred(at(n - 2), at(0), at(1));
            out[offset] = d;
            out[offset + (n - 1) * stride] = d;
        }
        Boundary::OneSided if n >= 4 => {
            // (2 f0 - 5 f1 + 4 f2 - f3) / h^2, second order
            let one_sided = |a: T, b: T, c: T, d: T| {
                a.scaled(2.0)
                    .minus(b.scaled(5.0))
                    .plus(c.scaled(4.0))
                    .minus(d)
                    .scaled(inv_h2)
            };
            out[offset] = one_sided(at(0), at(1), at(2), at(3));
            out[offset + (n - 1) * stride] = one_sided(at(n - 1), at(n - 2), at(n - 3), at(n - 4));
        }
        Boundary::OneSided => {
            let d = centred(at(0), at(1), at(2));
            out[offset] = d;
            out[offset + (n - 1) * stride] = d;
        }
    }
}

/// Second-order first derivative on a 1-D grid.
pub fn diff_x<T: Linear>(f: &[T], g: &Grid1D) -> Result<Vec<T>> {
    g.check_len(f.len())?;
    check_finite(f, "diff_x input")?;
    let mut out = vec![T::zero(); f.len()];
    diff_line(f, &mut out, 0, 1, g);
    Ok(out)
}

/// Second-order second derivative on a 1-D grid.
pub fn diff2_x<T: Linear>(f: &[T], g: &Grid1D) -> Result<Vec<T>> {
    g.check_len(f.len())?;
    check_finite(f, "diff2_x input")?;
    let mut out = vec![T::zero(); f.len()];
    diff2_line(f, &mut out, 0, 1, g);
    Ok(out)
}

/// Second-order first derivative of an x-major 2-D field along `axis`.
pub fn diff_axis<T: Linear>(f: &[T], g: &Grid2D, axis: Axis) -> Result<Vec<T>> {
    g.check_len(f.len())?;
    check_finite(f, "diff_axis input")?;
    let mut out = vec![T::zero(); f.len()];
    let (g1, stride, lines) = g.axis(axis);
    for line in 0..lines {
        diff_line(f, &mut out, g.line_offset(axis, line), stride, g1);
    }
    Ok(out)
}

/// Second-order second derivative of an x-major 2-D field along `axis`.
pub fn diff2_axis<T: Linear>(f: &[T], g: &Grid2D, axis: Axis) -> Result<Vec<T>> {
    g.check_len(f.len())?;
    check_finite(f, "diff2_axis input")?;
    let mut out = vec![T::zero(); f.len()];
    let (g1, stride, lines) = g.axis(axis);
    for line in 0..lines {
        diff2_line(f, &mut out, g.line_offset(axis, line), stride, g1);
    }
    Ok(out)
}

/// Cumulative trapezoid integral from `x0`, taking the value `anchor` there.
pub fn integrate_x<T: Linear>(f: &[T], g: &Grid1D, anchor: T) -> Result<Vec<T>> {
    g.check_len(f.len())?;
    check_finite(f, "integrate_x input")?;
    let half = 0.5 * g.dx;
    let mut out = Vec::with_capacity(f.len());
    let mut acc = anchor;
    out.push(acc);
    for w in f.windows(2) {
        acc = acc.plus(w[0].plus(w[1]).scaled(half));
        out.push(acc);
    }
    Ok(out)
}

/// A state that RK4 can advance.
pub trait Rk4State: Clone {
    /// `self + a * rate`
    fn add_scaled(&self, a: f64, rate: &Self) -> Self;
    fn all_finite(&self) -> bool;
}

impl<T: Linear> Rk4State for T {
    fn add_scaled(&self, a: f64, rate: &Self) -> Self {
        self.plus(rate.scaled(a))
    }
    fn all_finite(&self) -> bool {
        self.finite()
    }
}

impl<T: Linear> Rk4State for Vec<T> {
    fn add_scaled(&self, a: f64, rate: &Self) -> Self {
        self.iter().zip(rate).map(|(y, k)| y.plus(k.scaled(a))).collect()
    }
    fn all_finite(&self) -> bool {
        self.iter().all(Linear::finite)
    }
}

/// One classical RK4 step.
///
/// `rhs` receives the stage offset from the start of the step (`0`, `dt/2`,
/// `dt/2`, `dt`) and the stage state. Autonomous systems ignore the offset.
pub fn step_rk4<S, F>(state: &S, dt: f64, mut rhs: F) -> Result<S>
where
    S: Rk4State,
    F: FnMut(f64, &S) -> Result<S>,
{
    if !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt = {dt} is not finite")));
    }
    let finite = |k: S, stage: usize| {
        if k.all_finite() {
            Ok(k)
        } else {
            Err(Error::Rk4NonFinite { stage })
        }
    };
    let half = 0.5 * dt;
    let k1 = finite(rhs(0.0, state)?, 1)?;
    let k2 = finite(rhs(half, &state.add_scaled(half, &k1))?, 2)?;
    let k3 = finite(rhs(half, &state.add_scaled(half, &k2))?, 3)?;
    let k4 = finite(rhs(dt, &state.add_scaled(dt, &k3))?, 4)?;
    let sixth = dt / 6.0;
    let next = state
        .add_scaled(sixth, &k1)
        .add_scaled(2.0 * sixth, &k2)
        .add_scaled(2.0 * sixth, &k3)
        .add_scaled(sixth, &k4);
    finite(next, 5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn max_err(a: &[f64], b: impl Fn(usize) -> f64) -> f64 {
        a.iter().enumerate().map(|(i, v)| (v - b(i)).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        for boundary in [Boundary::Periodic, Boundary::OneSided] {
            let g = Grid1D::new(0.0, 0.1, 17, boundary).unwrap();
            let d = diff_x(&[3.5; 17], &g).unwrap();
            assert!(d.iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn derivative_of_linear_is_exact_one_sided() {
        let g = Grid1D::new(-1.0, 0.125, 21, Boundary::OneSided).unwrap();
        let d = diff_x(&g.coords(), &g).unwrap();
        assert!(max_err(&d, |_| 1.0) < 1e-13);
    }

    #[test]
    fn periodic_sine_derivative_is_second_order() {
        let errs: Vec<f64> = [33usize, 65, 129]
            .iter()
            .map(|&n| {
                let g = Grid1D::spanning(0.0, 2.0 * PI, n, Boundary::Periodic).unwrap();
                let f: Vec<f64> = g.coords().iter().map(|x| x.sin()).collect();
                let d = diff_x(&f, &g).unwrap();
                max_err(&d, |i| g.coord(i).cos())
            })
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.7..4.3).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn one_sided_boundaries_are_second_order() {
        let errs: Vec<f64> = [21usize, 41, 81]
            .iter()
            .map(|&n| {
                let g = Grid1D::spanning(0.2, 1.7, n, Boundary::OneSided).unwrap();
                let f: Vec<f64> = g.coords().iter().map(|x| x.exp()).collect();
                let d = diff_x(&f, &g).unwrap();
                max_err(&d, |i| g.coord(i).exp())
            })
            .collect();
        let order = (errs[1] / errs[2]).log2();
        assert!((order - 2.0).abs() < 0.3, "order {order}");
    }

    #[test]
    fn second_derivative_converges() {
        let errs: Vec<f64> = [21usize, 41, 81]
            .iter()
            .map(|&n| {
                let g = Grid1D::spanning(0.0, 1.5, n, Boundary::OneSided).unwrap();
                let f: Vec<f64> = g.coords().iter().map(|x| x.sin()).collect();
                let d = diff2_x(&f, &g).unwrap();
                max_err(&d, |i| -g.coord(i).sin())
            })
            .collect();
        let order = (errs[1] / errs[2]).log2();
        assert!((order - 2.0).abs() < 0.3, "order {order}");
    }

    #[test]
    fn diff_rejects_bad_input() {
        let g = Grid1D::new(0.0, 1.0, 5, Boundary::OneSided).unwrap();
        assert!(matches!(
            diff_x(&[0.0; 4], &g),
            Err(Error::LengthMismatch { expected: 5, found: 4 })
        ));
        assert!(matches!(
            diff_x(&[0.0, 1.0, f64::NAN, 0.0, 0.0], &g),
            Err(Error::NonFinite { index: 2, .. })
        ));
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(0.0, 0.0, 5, Boundary::OneSided).is_err());
        assert!(Grid1D::new(0.0, -1.0, 5, Boundary::OneSided).is_err());
        assert!(Grid1D::new(0.0, 1.0, 2, Boundary::OneSided).is_err());
    }

    #[test]
    fn axis_derivatives_follow_layout() {
        let gx = Grid1D::spanning(0.0, 1.0, 11, Boundary::OneSided).unwrap();
        let gt = Grid1D::spanning(0.0, 2.0, 7, Boundary::OneSided).unwrap();
        let g = Grid2D::new(gx, gt).unwrap();
        let f = g.sample(|x, t| 3.0 * x - 2.0 * t);
        let fx = diff_axis(&f, &g, Axis::X).unwrap();
        let ft = diff_axis(&f, &g, Axis::T).unwrap();
        assert!(fx.iter().all(|v| (v - 3.0).abs() < 1e-12));
        assert!(ft.iter().all(|v| (v + 2.0).abs() < 1e-12));
    }

    #[test]
    fn integrate_examples() {
        let g = Grid1D::spanning(0.0, 2.0, 9, Boundary::OneSided).unwrap();
        let a = Vector3::new(1.0, -2.0, 0.5);
        let r = integrate_x(&vec![Vector3::zeros(); 9], &g, a).unwrap();
        assert!(r.iter().all(|v| *v == a));

        let ones = integrate_x(&[1.0; 9], &g, 0.0).unwrap();
        assert!(max_err(&ones, |i| g.coord(i)) < 1e-14);
    }

    #[test]
    fn integrate_circle_is_second_order() {
        let errs: Vec<f64> = [33usize, 65, 129]
            .iter()
            .map(|&n| {
                let g = Grid1D::spanning(0.0, 3.0, n, Boundary::OneSided).unwrap();
                let f: Vec<Vector3<f64>> = g.coords().iter().map(|x| Vector3::new(x.cos(), x.sin(), 0.0)).collect();
                let r = integrate_x(&f, &g, Vector3::zeros()).unwrap();
                r.iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let x = g.coord(i);
                        (v - Vector3::new(x.sin(), 1.0 - x.cos(), 0.0)).norm()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() < 0.3, "order {order}");
        }
    }

    #[test]
    fn rk4_zero_rate_keeps_state() {
        let y = vec![1.0, 2.0, 3.0];
        let out = step_rk4(&y, 0.1, |_, s: &Vec<f64>| Ok(vec![0.0; s.len()])).unwrap();
        assert_eq!(out, y);
    }

    #[test]
    fn rk4_exponential_local_error_is_fifth_order() {
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&dt: &f64| {
                let y = step_rk4(&1.0f64, dt, |_, y| Ok(*y)).unwrap();
                (y - dt.exp()).abs()
            })
            .collect();
        assert!(errs[0] < 1e-7);
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 5.0).abs() < 0.3, "local order {order}");
        }
    }

    #[test]
    fn rk4_global_order_four() {
        let global = |dt: f64| {
            let steps = (2.0 / dt).round() as usize;
            let mut y = 1.0f64;
            for _ in 0..steps {
                y = step_rk4(&y, dt, |_, y| Ok(-*y)).unwrap();
            }
            (y - (-2.0f64).exp()).abs()
        };
        let e = [global(0.1), global(0.05), global(0.025)];
        for w in e.windows(2) {
            let ratio = w[0] / w[1];
            assert!((14.0..18.0).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn rk4_reports_non_finite_stage() {
        let err = step_rk4(&1.0f64, 0.1, |off, y| if off > 0.0 { Ok(f64::NAN) } else { Ok(*y) }).unwrap_err();
        assert!(matches!(err, Error::Rk4NonFinite { stage: 2 }));
    }

    #[test]
    fn rk4_is_bit_deterministic() {
        let f = |_: f64, y: &Vec<f64>| Ok(y.iter().map(|v| (v * 1.3).sin()).collect::<Vec<_>>());
        let y0 = vec![0.1, 0.7, -2.0];
        let a = step_rk4(&y0, 0.37, f).unwrap();
        let b = step_rk4(&y0, 0.37, f).unwrap();
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn diff_and_integrate_are_linear(
                a in -3.0f64..3.0, b in -3.0f64..3.0,
                f in proptest::collection::vec(-5.0f64..5.0, 12),
                h in proptest::collection::vec(-5.0f64..5.0, 12),
            ) {
                let g = Grid1D::new(0.3, 0.2, 12, Boundary::OneSided).unwrap();
                let mix: Vec<f64> = f.iter().zip(&h).map(|(p, q)| a * p + b * q).collect();
                let df = diff_x(&f, &g).unwrap();
                let dh = diff_x(&h, &g).unwrap();
                let dm = diff_x(&mix, &g).unwrap();
                for i in 0..12 {
                    prop_assert!((dm[i] - (a * df[i] + b * dh[i])).abs() < 1e-11);
                }
                let i_f = integrate_x(&f, &g, 0.0).unwrap();
                let i_h = integrate_x(&h, &g, 0.0).unwrap();
                let i_m = integrate_x(&mix, &g, 0.0).unwrap();
                for i in 0..12 {
                    prop_assert!((i_m[i] - (a * i_f[i] + b * i_h[i])).abs() < 1e-11);
                }
            }
        }
    }
}
