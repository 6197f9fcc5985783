//! Gauss-Codazzi data in curvature-line coordinates.
//!
//! With `I = g11 dt² + g22 dx²` and `II = d11 dt² + d22 dx²` the surface is
//! described by
//!
//! ```text
//! ψ1 = d11 / sqrt(g11)     ψ2 = d22 / sqrt(g22)
//! ψ̃1 = sqrt(g11)           ψ̃2 = sqrt(g22)
//! p  = ψ̃1_x / ψ̃2           q  = ψ̃2_t / ψ̃1
//! ```
//!
//! and the Gauss-Codazzi equations read `ψ1_x = p ψ2`, `ψ2_t = q ψ1`,
//! `q_t + p_x + ψ1 ψ2 = 0`, with the metric roots obeying `ψ̃1_x = p ψ̃2`,
//! `ψ̃2_t = q ψ̃1`. Note `q` carries a `t`-derivative.
//!
//! The change of variables to the curvature-torsion system is
//!
//! ```text
//! k = q,   τ = ψ2,   ω2 = -ψ1,   ω3 = -p
//! ```
//!
//! Under it the three Gauss-Codazzi residuals are, componentwise,
//! `(-r3, r2, r1)` of the compatibility residual, so either system holds
//! exactly when the other does.

use serde::{Deserialize, Serialize};

use crate::convergence::max_abs;
use crate::error::{Error, Result};
use crate::frame::CtFields;
use crate::numgrid::{diff_axis, Axis, Grid2D};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcData {
    pub grid: Grid2D,
    pub psi1: Vec<f64>,
    pub psi2: Vec<f64>,
    pub tpsi1: Vec<f64>,
    pub tpsi2: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl GcData {
    pub fn new(
        grid: Grid2D,
        psi1: Vec<f64>,
        psi2: Vec<f64>,
        tpsi1: Vec<f64>,
        tpsi2: Vec<f64>,
        p: Vec<f64>,
        q: Vec<f64>,
    ) -> Result<Self> {
        let d = GcData {
            grid,
            psi1,
            psi2,
            tpsi1,
            tpsi2,
            p,
            q,
        };
        d.validate()?;
        Ok(d)
    }

    /// Builds `p` and `q` from the metric roots by finite differences.
    pub fn from_metric(grid: Grid2D, psi1: Vec<f64>, psi2: Vec<f64>, tpsi1: Vec<f64>, tpsi2: Vec<f64>) -> Result<Self> {
        check_metric_roots(&grid, &tpsi1, &tpsi2)?;
        let (p, q) = rotation_coefficients(&grid, &tpsi1, &tpsi2)?;
        GcData::new(grid, psi1, psi2, tpsi1, tpsi2, p, q)
    }

    pub fn validate(&self) -> Result<()> {
        for (what, f) in [
            ("psi1", &self.psi1),
            ("psi2", &self.psi2),
            ("p", &self.p),
            ("q", &self.q),
        ] {
            self.grid.check_len(f.len())?;
            if let Some(index) = f.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what, index });
            }
        }
        check_metric_roots(&self.grid, &self.tpsi1, &self.tpsi2)
    }
}

fn check_metric_roots(grid: &Grid2D, tpsi1: &[f64], tpsi2: &[f64]) -> Result<()> {
    for (which, f) in [("tpsi1", tpsi1), ("tpsi2", tpsi2)] {
        grid.check_len(f.len())?;
        if let Some(index) = f.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::NonPositiveMetricRoot { which, index });
        }
    }
    Ok(())
}

/// `p = ψ̃1_x / ψ̃2` and `q = ψ̃2_t / ψ̃1` by finite differences.
pub fn rotation_coefficients(grid: &Grid2D, tpsi1: &[f64], tpsi2: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let t1_x = diff_axis(tpsi1, grid, Axis::X)?;
    let t2_t = diff_axis(tpsi2, grid, Axis::T)?;
    let p = t1_x.iter().zip(tpsi2).map(|(a, b)| a / b).collect();
    let q = t2_t.iter().zip(tpsi1).map(|(a, b)| a / b).collect();
    Ok((p, q))
}

/// Derivatives entering the residuals, either analytic or finite-difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcDerivatives {
    pub psi1_x: Vec<f64>,
    pub psi2_t: Vec<f64>,
    pub q_t: Vec<f64>,
    pub p_x: Vec<f64>,
    pub tpsi1_x: Vec<f64>,
    pub tpsi2_t: Vec<f64>,
}

impl GcDerivatives {
    pub fn numerical(d: &GcData) -> Result<Self> {
        let g = &d.grid;
        Ok(GcDerivatives {
            psi1_x: diff_axis(&d.psi1, g, Axis::X)?,
            psi2_t: diff_axis(&d.psi2, g, Axis::T)?,
            q_t: diff_axis(&d.q, g, Axis::T)?,
            p_x: diff_axis(&d.p, g, Axis::X)?,
            tpsi1_x: diff_axis(&d.tpsi1, g, Axis::X)?,
            tpsi2_t: diff_axis(&d.tpsi2, g, Axis::T)?,
        })
    }

    fn check(&self, g: &Grid2D) -> Result<()> {
        for f in [
            &self.psi1_x,
            &self.psi2_t,
            &self.q_t,
            &self.p_x,
            &self.tpsi1_x,
            &self.tpsi2_t,
        ] {
            g.check_len(f.len())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcResidual {
    pub grid: Grid2D,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub r3: Vec<f64>,
}

impl GcResidual {
    pub fn max_norms(&self) -> [f64; 3] {
        [max_abs(&self.r1), max_abs(&self.r2), max_abs(&self.r3)]
    }

    pub fn max_norm(&self) -> f64 {
        self.max_norms().into_iter().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricResidual {
    pub grid: Grid2D,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
}

impl MetricResidual {
    pub fn max_norm(&self) -> f64 {
        max_abs(&self.r1).max(max_abs(&self.r2))
    }
}

/// `r1 = ψ1_x - p ψ2`, `r2 = ψ2_t - q ψ1`, `r3 = q_t + p_x + ψ1 ψ2`.
pub fn gc_residual(d: &GcData) -> Result<GcResidual> {
    gc_residual_with(d, &GcDerivatives::numerical(d)?)
}

pub fn gc_residual_with(d: &GcData, dd: &GcDerivatives) -> Result<GcResidual> {
    dd.check(&d.grid)?;
    let n = d.grid.len();
    Ok(GcResidual {
        grid: d.grid,
        r1: (0..n).map(|i| dd.psi1_x[i] - d.p[i] * d.psi2[i]).collect(),
        r2: (0..n).map(|i| dd.psi2_t[i] - d.q[i] * d.psi1[i]).collect(),
        r3: (0..n).map(|i| dd.q_t[i] + dd.p_x[i] + d.psi1[i] * d.psi2[i]).collect(),
    })
}

/// `r1 = ψ̃1_x - p ψ̃2`, `r2 = ψ̃2_t - q ψ̃1`.
pub fn metric_residual(d: &GcData) -> Result<MetricResidual> {
    metric_residual_with(d, &GcDerivatives::numerical(d)?)
}

pub fn metric_residual_with(d: &GcData, dd: &GcDerivatives) -> Result<MetricResidual> {
    dd.check(&d.grid)?;
    let n = d.grid.len();
    Ok(MetricResidual {
        grid: d.grid,
        r1: (0..n).map(|i| dd.tpsi1_x[i] - d.p[i] * d.tpsi2[i]).collect(),
        r2: (0..n).map(|i| dd.tpsi2_t[i] - d.q[i] * d.tpsi1[i]).collect(),
    })
}

/// Coefficients of a diagonal quadratic form `a dt² + b dx²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalForm {
    pub dt2: Vec<f64>,
    pub dx2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormTriple {
    pub first: DiagonalForm,
    pub second: DiagonalForm,
    pub third: DiagonalForm,
}

impl FormTriple {
    /// The first and second forms as curvature-line coefficients.
    pub fn fundamental_forms(&self) -> FundamentalForms {
        FundamentalForms::Diagonal {
            g11: self.first.dt2.clone(),
            g22: self.first.dx2.clone(),
            d11: self.second.dt2.clone(),
            d22: self.second.dx2.clone(),
        }
    }
}

/// `I = ψ̃1² dt² + ψ̃2² dx²`, `II = ψ̃1 ψ1 dt² + ψ̃2 ψ2 dx²`, `III = ψ1² dt² + ψ2² dx²`.
pub fn forms_from_psi(d: &GcData) -> Result<FormTriple> {
    d.validate()?;
    let zip = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x * y).collect() };
    Ok(FormTriple {
        first: DiagonalForm {
            dt2: zip(&d.tpsi1, &d.tpsi1),
            dx2: zip(&d.tpsi2, &d.tpsi2),
        },
        second: DiagonalForm {
            dt2: zip(&d.tpsi1, &d.psi1),
            dx2: zip(&d.tpsi2, &d.psi2),
        },
        third: DiagonalForm {
            dt2: zip(&d.psi1, &d.psi1),
            dx2: zip(&d.psi2, &d.psi2),
        },
    })
}

/// First and second fundamental form coefficients, per point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FundamentalForms {
    /// Curvature-line coordinates: `I = g11 dt² + g22 dx²`, `II = d11 dt² + d22 dx²`.
    Diagonal {
        g11: Vec<f64>,
        g22: Vec<f64>,
        d11: Vec<f64>,
        d22: Vec<f64>,
    },
    /// `I = E du² + 2F du dv + G dv²`, `II = L du² + 2M du dv + N dv²`.
    General {
        e: Vec<f64>,
        f: Vec<f64>,
        g: Vec<f64>,
        l: Vec<f64>,
        m: Vec<f64>,
        n: Vec<f64>,
    },
}

/// `(E, F, G, L, M, N)` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormCoefficients {
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub l: f64,
    pub m: f64,
    pub n: f64,
}

impl FormCoefficients {
    pub fn diagonal(g11: f64, g22: f64, d11: f64, d22: f64) -> Self {
        FormCoefficients {
            e: g11,
            f: 0.0,
            g: g22,
            l: d11,
            m: 0.0,
            n: d22,
        }
    }

    pub fn metric_det(&self) -> f64 {
        self.e * self.g - self.f * self.f
    }

    /// Gaussian and mean curvature, `None` when `EG - F² <= 0`.
    pub fn curvatures(&self) -> Option<(f64, f64)> {
        let det = self.metric_det();
        if !(det > 0.0) {
            return None;
        }
        let k = (self.l * self.n - self.m * self.m) / det;
        let h = (self.e * self.n - 2.0 * self.f * self.m + self.g * self.l) / (2.0 * det);
        Some((k, h))
    }
}

impl FundamentalForms {
    pub fn len(&self) -> usize {
        match self {
            FundamentalForms::Diagonal { g11, .. } => g11.len(),
            FundamentalForms::General { e, .. } => e.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn at(&self, i: usize) -> FormCoefficients {
        match self {
            FundamentalForms::Diagonal { g11, g22, d11, d22 } => {
                FormCoefficients::diagonal(g11[i], g22[i], d11[i], d22[i])
            }
            FundamentalForms::General { e, f, g, l, m, n } => FormCoefficients {
                e: e[i],
                f: f[i],
                g: g[i],
                l: l[i],
                m: m[i],
                n: n[i],
            },
        }
    }

    fn check(&self) -> Result<()> {
        let len = self.len();
        let same = match self {
            FundamentalForms::Diagonal { g11, g22, d11, d22 } => [g11, g22, d11, d22].iter().all(|v| v.len() == len),
            FundamentalForms::General { e, f, g, l, m, n } => [e, f, g, l, m, n].iter().all(|v| v.len() == len),
        };
        if !same {
            return Err(Error::InvalidArgument(
                "fundamental form coefficients differ in length".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curvatures {
    pub gaussian: Vec<f64>,
    pub mean: Vec<f64>,
}

/// `K = (LN - M²)/(EG - F²)`, `H = (EN - 2FM + GL)/(2(EG - F²))`.
pub fn curvatures(forms: &FundamentalForms) -> Result<Curvatures> {
    forms.check()?;
    let mut out = Curvatures {
        gaussian: Vec::with_capacity(forms.len()),
        mean: Vec::with_capacity(forms.len()),
    };
    for i in 0..forms.len() {
        let c = forms.at(i);
        let (k, h) = c.curvatures().ok_or(Error::DegenerateMetric {
            index: i,
            det: c.metric_det(),
        })?;
        out.gaussian.push(k);
        out.mean.push(h);
    }
    Ok(out)
}

/// Gaussian curvature from the metric alone:
/// `K = -[(ψ̃1_x/ψ̃2)_x + (ψ̃2_t/ψ̃1)_t] / (ψ̃1 ψ̃2)`.
pub fn intrinsic_curvature(grid: &Grid2D, tpsi1: &[f64], tpsi2: &[f64]) -> Result<Vec<f64>> {
    check_metric_roots(grid, tpsi1, tpsi2)?;
    let (p, q) = rotation_coefficients(grid, tpsi1, tpsi2)?;
    let p_x = diff_axis(&p, grid, Axis::X)?;
    let q_t = diff_axis(&q, grid, Axis::T)?;
    Ok((0..grid.len())
        .map(|i| -(p_x[i] + q_t[i]) / (tpsi1[i] * tpsi2[i]))
        .collect())
}

/// Curvature-torsion fields of a Gauss-Codazzi surface:
/// `k = q`, `τ = ψ2`, `ω2 = -ψ1`, `ω3 = -p`.
pub fn map_gc_to_frame(d: &GcData) -> Result<CtFields> {
    d.validate()?;
    CtFields::new(
        d.grid,
        d.q.clone(),
        d.psi2.clone(),
        d.psi1.iter().map(|v| -v).collect(),
        d.p.iter().map(|v| -v).collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapOptions {
    /// Relative max-norm tolerance on `k = ψ̃2_t/ψ̃1` and `ω3 = -ψ̃1_x/ψ̃2`.
    pub tolerance: f64,
}

impl Default for MapOptions {
    fn default() -> Self {
        MapOptions { tolerance: 1e-6 }
    }
}

/// `max|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_max_deviation(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = max_abs(a).max(max_abs(b));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Inverse of [`map_gc_to_frame`] given the metric roots.
///
/// Four relations fix `ψ1, ψ2, p, q` from the frame data; the remaining two,
/// `k = ψ̃2_t/ψ̃1` and `ω3 = -ψ̃1_x/ψ̃2`, constrain the supplied metric roots
/// and are checked by finite differences against `opts.tolerance`.
pub fn map_frame_to_gc(ct: &CtFields, tpsi1: &[f64], tpsi2: &[f64], opts: &MapOptions) -> Result<GcData> {
    let grid = ct.grid;
    check_metric_roots(&grid, tpsi1, tpsi2)?;
    let (p_metric, q_metric) = rotation_coefficients(&grid, tpsi1, tpsi2)?;
    let p: Vec<f64> = ct.omega3.iter().map(|w| -w).collect();
    for (relation, from_ct, from_metric) in [
        ("k = tpsi2_t / tpsi1", &ct.k, &q_metric),
        ("omega3 = -tpsi1_x / tpsi2", &p, &p_metric),
    ] {
        let deviation = relative_max_deviation(from_ct, from_metric);
        if !(deviation <= opts.tolerance) {
            return Err(Error::MapInconsistent {
                relation,
                deviation,
                tolerance: opts.tolerance,
            });
        }
    }
    GcData::new(
        grid,
        ct.omega2.iter().map(|w| -w).collect(),
        ct.tau.clone(),
        tpsi1.to_vec(),
        tpsi2.to_vec(),
        p,
        ct.k.clone(),
    )
}

/// Analytic surfaces in curvature-line coordinates, with exact derivatives
/// and curvatures.
pub mod fixtures {
    use super::*;

    #[derive(Debug, Clone, PartialEq)]
    pub struct GcFixture {
        pub name: String,
        pub data: GcData,
        pub derivs: GcDerivatives,
        pub gaussian: Vec<f64>,
        pub mean: Vec<f64>,
    }

    /// Sphere of radius `radius`; `t` is the polar angle, `x` the azimuth.
    pub fn sphere(radius: f64, grid: Grid2D) -> GcFixture {
        let s = |f: fn(f64) -> f64| grid.sample(|_, t| f(t));
        let r = radius;
        let n = grid.len();
        GcFixture {
            name: format!("sphere R={radius}"),
            data: GcData {
                grid,
                psi1: vec![1.0; n],
                psi2: s(f64::sin),
                tpsi1: vec![r; n],
                tpsi2: s(f64::sin).iter().map(|v| r * v).collect(),
                p: vec![0.0; n],
                q: s(f64::cos),
            },
            derivs: GcDerivatives {
                psi1_x: vec![0.0; n],
                psi2_t: s(f64::cos),
                q_t: s(f64::sin).iter().map(|v| -v).collect(),
                p_x: vec![0.0; n],
                tpsi1_x: vec![0.0; n],
                tpsi2_t: s(f64::cos).iter().map(|v| r * v).collect(),
            },
            gaussian: vec![1.0 / (r * r); n],
            mean: vec![1.0 / r; n],
        }
    }

    /// Torus with tube radius `minor` around a circle of radius `major`;
    /// `t` is the tube angle, `x` the angle around the axis.
    pub fn torus(major: f64, minor: f64, grid: Grid2D) -> GcFixture {
        let (big, a) = (major, minor);
        let n = grid.len();
        let ring = grid.sample(|_, t| big + a * t.cos());
        GcFixture {
            name: format!("torus R={major} a={minor}"),
            data: GcData {
                grid,
                psi1: vec![1.0; n],
                psi2: grid.sample(|_, t| t.cos()),
                tpsi1: vec![a; n],
                tpsi2: ring.clone(),
                p: vec![0.0; n],
                q: grid.sample(|_, t| -t.sin()),
            },
            derivs: GcDerivatives {
                psi1_x: vec![0.0; n],
                psi2_t: grid.sample(|_, t| -t.sin()),
                q_t: grid.sample(|_, t| -t.cos()),
                p_x: vec![0.0; n],
                tpsi1_x: vec![0.0; n],
                tpsi2_t: grid.sample(|_, t| -a * t.sin()),
            },
            gaussian: grid.sample(|_, t| t.cos() / (a * (big + a * t.cos()))),
            mean: grid.sample(|_, t| 0.5 * (1.0 / a + t.cos() / (big + a * t.cos()))),
        }
    }

    /// Cylinder of radius `radius`; `t` runs along the axis, `x` is the angle.
    pub fn cylinder(radius: f64, grid: Grid2D) -> GcFixture {
        let n = grid.len();
        GcFixture {
            name: format!("cylinder R={radius}"),
            data: GcData {
                grid,
                psi1: vec![0.0; n],
                psi2: vec![1.0; n],
                tpsi1: vec![1.0; n],
                tpsi2: vec![radius; n],
                p: vec![0.0; n],
                q: vec![0.0; n],
            },
            derivs: zero_derivs(n),
            gaussian: vec![0.0; n],
            mean: vec![0.5 / radius; n],
        }
    }

    pub fn plane(grid: Grid2D) -> GcFixture {
        let n = grid.len();
        GcFixture {
            name: "plane".into(),
            data: GcData {
                grid,
                psi1: vec![0.0; n],
                psi2: vec![0.0; n],
                tpsi1: vec![1.0; n],
                tpsi2: vec![1.0; n],
                p: vec![0.0; n],
                q: vec![0.0; n],
            },
            derivs: zero_derivs(n),
            gaussian: vec![0.0; n],
            mean: vec![0.0; n],
        }
    }

    fn zero_derivs(n: usize) -> GcDerivatives {
        GcDerivatives {
            psi1_x: vec![0.0; n],
            psi2_t: vec![0.0; n],
            q_t: vec![0.0; n],
            p_x: vec![0.0; n],
            tpsi1_x: vec![0.0; n],
            tpsi2_t: vec![0.0; n],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::frame::compatibility_residual;
    use crate::numgrid::{Boundary, Grid1D};
    use std::f64::consts::PI;

    fn sphere_grid(n: usize) -> Grid2D {
        Grid2D::new(
            Grid1D::spanning(0.0, 2.0 * PI, n, Boundary::Periodic).unwrap(),
            Grid1D::spanning(0.3, PI - 0.3, n, Boundary::OneSided).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn sphere_residuals_vanish_analytically() {
        for r in [0.5, 1.0, 2.0] {
            let fx = sphere(r, sphere_grid(33));
            assert!(gc_residual_with(&fx.data, &fx.derivs).unwrap().max_norm() < 1e-15);
            assert!(metric_residual_with(&fx.data, &fx.derivs).unwrap().max_norm() < 1e-15);
        }
    }

    #[test]
    fn torus_residuals_vanish_analytically() {
        let fx = torus(3.0, 1.0, sphere_grid(33));
        assert!(gc_residual_with(&fx.data, &fx.derivs).unwrap().max_norm() < 1e-15);
        assert!(metric_residual_with(&fx.data, &fx.derivs).unwrap().max_norm() < 1e-15);
    }

    #[test]
    fn flat_plane_has_zero_residuals() {
        let fx = plane(sphere_grid(9));
        assert_eq!(gc_residual(&fx.data).unwrap().max_norm(), 0.0);
        assert_eq!(metric_residual(&fx.data).unwrap().max_norm(), 0.0);
    }

    #[test]
    fn perturbation_shifts_r2_and_r3_linearly() {
        let g = sphere_grid(33);
        let base = sphere(1.0, g);
        let shift = |eps: f64| {
            let mut d = base.data.clone();
            let mut dd = base.derivs.clone();
            for i in 0..g.len() {
                let (_, t) = g.point(i);
                d.psi2[i] += eps * t.sin();
                dd.psi2_t[i] += eps * t.cos();
            }
            gc_residual_with(&d, &dd).unwrap()
        };
        let (a, b) = (shift(1e-3), shift(2e-3));
        assert!(a.max_norms()[0] < 1e-15);
        for j in 1..3 {
            let ratio = b.max_norms()[j] / a.max_norms()[j];
            assert!((ratio - 2.0).abs() < 1e-6, "component {j}: {ratio}");
        }
    }

    #[test]
    fn random_metric_is_not_a_surface() {
        let g = sphere_grid(21);
        let d = GcData::new(
            g,
            g.sample(|x, t| (x + t).sin()),
            g.sample(|x, t| x * t),
            g.sample(|x, _| 2.0 + x.cos()),
            g.sample(|_, t| 1.0 + t),
            g.sample(|x, _| x.sin()),
            g.sample(|_, t| t.cos() * 3.0),
        )
        .unwrap();
        assert!(metric_residual(&d).unwrap().max_norm() > 0.1);
        assert!(gc_residual(&d).unwrap().max_norm() > 0.1);
    }

    #[test]
    fn sphere_forms_coincide() {
        let fx = sphere(1.0, sphere_grid(17));
        let f = forms_from_psi(&fx.data).unwrap();
        for i in 0..fx.data.grid.len() {
            let (_, t) = fx.data.grid.point(i);
            for form in [&f.first, &f.second, &f.third] {
                assert!((form.dt2[i] - 1.0).abs() < 1e-15);
                assert!((form.dx2[i] - t.sin().powi(2)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn plane_forms_and_scaling() {
        let fx = plane(sphere_grid(9));
        let f = forms_from_psi(&fx.data).unwrap();
        assert!(f.second.dt2.iter().chain(&f.third.dx2).all(|v| *v == 0.0));

        let base = torus(3.0, 1.0, sphere_grid(9)).data;
        let lam = 2.5;
        let mut scaled = base.clone();
        scaled.tpsi1.iter_mut().for_each(|v| *v *= lam);
        scaled.tpsi2.iter_mut().for_each(|v| *v *= lam);
        let (a, b) = (forms_from_psi(&base).unwrap(), forms_from_psi(&scaled).unwrap());
        for i in 0..base.grid.len() {
            assert!((b.first.dx2[i] - lam * lam * a.first.dx2[i]).abs() < 1e-12);
            assert!((b.second.dx2[i] - lam * a.second.dx2[i]).abs() < 1e-12);
            assert_eq!(b.third.dx2[i], a.third.dx2[i]);
        }
    }

    #[test]
    fn curvature_of_standard_surfaces() {
        let g = sphere_grid(17);
        for r in [0.5, 1.0, 2.0] {
            let fx = sphere(r, g);
            let c = curvatures(&forms_from_psi(&fx.data).unwrap().fundamental_forms()).unwrap();
            for i in 0..g.len() {
                assert!((c.gaussian[i] - 1.0 / (r * r)).abs() <= 1e-12 / (r * r));
                assert!((c.mean[i] - 1.0 / r).abs() <= 1e-12 / r);
            }
        }
        let cyl = cylinder(1.5, g);
        let c = curvatures(&forms_from_psi(&cyl.data).unwrap().fundamental_forms()).unwrap();
        assert!(c.gaussian.iter().all(|k| *k == 0.0));
        assert!(c.mean.iter().all(|h| (h - 1.0 / 3.0).abs() < 1e-15));

        let tor = torus(3.0, 1.0, g);
        let c = curvatures(&forms_from_psi(&tor.data).unwrap().fundamental_forms()).unwrap();
        for i in 0..g.len() {
            assert!((c.gaussian[i] - tor.gaussian[i]).abs() < 1e-14);
            assert!((c.mean[i] - tor.mean[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let forms = FundamentalForms::General {
            e: vec![1.0, 1.0],
            f: vec![0.0, 1.0],
            g: vec![1.0, 1.0],
            l: vec![0.0; 2],
            m: vec![0.0; 2],
            n: vec![0.0; 2],
        };
        assert!(matches!(
            curvatures(&forms),
            Err(Error::DegenerateMetric { index: 1, .. })
        ));
    }

    #[test]
    fn gauss_equation_matches_form_curvature() {
        let errs: Vec<f64> = [17usize, 33, 65]
            .iter()
            .map(|&n| {
                let tor = torus(3.0, 1.0, sphere_grid(n));
                let g = tor.data.grid;
                let k = intrinsic_curvature(&g, &tor.data.tpsi1, &tor.data.tpsi2).unwrap();
                // nested one-sided differences lose an order on the t boundary rows
                (0..g.len())
                    .filter(|&i| (2..g.gt.n - 2).contains(&g.split(i).1))
                    .map(|i| (k[i] - tor.gaussian[i]).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.7, "{errs:?}");
        }
    }

    #[test]
    fn sphere_maps_to_known_frame_data() {
        let g = sphere_grid(17);
        let ct = map_gc_to_frame(&sphere(1.0, g).data).unwrap();
        for i in 0..g.len() {
            let (_, t) = g.point(i);
            assert_eq!(ct.k[i], t.cos());
            assert_eq!(ct.tau[i], t.sin());
            assert_eq!(ct.omega2[i], -1.0);
            assert_eq!(ct.omega3[i], 0.0);
        }
    }

    #[test]
    fn flat_frame_data_maps_to_flat_surface() {
        let g = sphere_grid(9);
        let n = g.len();
        let d = map_frame_to_gc(
            &CtFields::zeros(g),
            &vec![1.0; n],
            &vec![2.0; n],
            &MapOptions::default(),
        )
        .unwrap();
        assert!(d.psi1.iter().chain(&d.psi2).chain(&d.p).chain(&d.q).all(|v| *v == 0.0));
        let back = map_gc_to_frame(&d).unwrap();
        assert_eq!(back, CtFields::zeros(g));
    }

    #[test]
    fn inconsistent_metric_is_reported() {
        let g = sphere_grid(33);
        let fx = sphere(1.0, g);
        let ct = map_gc_to_frame(&fx.data).unwrap();
        let flat = vec![1.0; g.len()];
        let err = map_frame_to_gc(&ct, &flat, &flat, &MapOptions { tolerance: 1e-3 }).unwrap_err();
        assert!(matches!(err, Error::MapInconsistent { .. }));
    }

    #[test]
    fn sphere_round_trip_is_exact() {
        let g = sphere_grid(257);
        let fx = sphere(2.0, g);
        let ct = map_gc_to_frame(&fx.data).unwrap();
        let back = map_frame_to_gc(&ct, &fx.data.tpsi1, &fx.data.tpsi2, &MapOptions { tolerance: 1e-4 }).unwrap();
        assert_eq!(back, fx.data);
    }

    #[test]
    fn maps_are_mutually_inverse_on_frame_data() {
        let g = sphere_grid(65);
        let tpsi1 = g.sample(|x, t| 1.0 + 0.2 * (x + t).sin());
        let tpsi2 = g.sample(|x, t| 1.5 + 0.3 * (x - 2.0 * t).cos());
        let (p, q) = rotation_coefficients(&g, &tpsi1, &tpsi2).unwrap();
        let ct = CtFields::new(
            g,
            q,
            g.sample(|x, t| x.sin() * t),
            g.sample(|x, t| (x * t).cos()),
            p.iter().map(|v| -v).collect(),
        )
        .unwrap();
        let d = map_frame_to_gc(&ct, &tpsi1, &tpsi2, &MapOptions::default()).unwrap();
        assert_eq!(map_gc_to_frame(&d).unwrap(), ct);
    }

    #[test]
    fn gc_residual_is_compatibility_residual_permuted() {
        let g = sphere_grid(41);
        let tpsi1 = g.sample(|x, t| 1.2 + 0.3 * (2.0 * x + t).sin());
        let tpsi2 = g.sample(|x, t| 2.0 + 0.5 * (x * t).cos());
        let d = GcData::from_metric(
            g,
            g.sample(|x, t| (x - t).sin()),
            g.sample(|x, t| 0.5 + x.cos() * t),
            tpsi1,
            tpsi2,
        )
        .unwrap();
        let gc = gc_residual(&d).unwrap();
        let cr = compatibility_residual(&map_gc_to_frame(&d).unwrap()).unwrap();
        for i in 0..g.len() {
            assert!((gc.r1[i] + cr.r3[i]).abs() < 1e-12);
            assert!((gc.r2[i] - cr.r2[i]).abs() < 1e-12);
            assert!((gc.r3[i] - cr.r1[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn change_of_variables_as_printed_breaks_compatibility() {
        // τ = ψ1, ω2 = -ψ2 leaves r2 = -sinθ cosθ on the unit sphere.
        let g = sphere_grid(65);
        let fx = sphere(1.0, g);
        let d = &fx.data;
        let swapped = CtFields::new(
            g,
            d.q.clone(),
            d.psi1.clone(),
            d.psi2.iter().map(|v| -v).collect(),
            d.p.iter().map(|v| -v).collect(),
        )
        .unwrap();
        let r = compatibility_residual(&swapped).unwrap();
        assert!((r.max_norms()[1] - 0.5).abs() < 1e-2);
    }
}
