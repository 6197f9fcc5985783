//! The surface swept by the spin curve, its discrete fundamental forms, and
//! mesh export.
//!
//! Each time slice is integrated as `r_x = S`, so `x` is arclength along
//! every curve and `e1 = S` is the unit tangent. The time gauge is fixed by
//! `r(x0, t) = 0`: the reconstruction is a family of curves, faithful up to a
//! rigid translation per time. Curvatures along each curve do not depend on
//! that choice.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::time_grid;
use crate::gc::{FormCoefficients, FundamentalForms};
use crate::numgrid::{diff2_axis, diff_axis, integrate_x, Axis, Boundary, Grid1D, Grid2D};
use crate::spin::SpinField;

/// Points with `|r_x ∧ r_t|` below this have no tangent plane.
pub const DEGENERATE_AREA: f64 = 1e-10;

/// Positions over an (x, t) grid, x-major. Faces are the grid quads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMesh {
    pub grid: Grid2D,
    pub r: Vec<Vector3<f64>>,
}

impl SurfaceMesh {
    pub fn new(grid: Grid2D, r: Vec<Vector3<f64>>) -> Result<Self> {
        grid.check_len(r.len())?;
        if let Some(index) = r.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite { what: "r", index });
        }
        Ok(SurfaceMesh { grid, r })
    }

    /// Mesh of an explicit parameterization `r(x, t)`.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> Vector3<f64>) -> Result<Self> {
        let r = (0..grid.len())
            .map(|i| {
                let (x, t) = grid.point(i);
                f(x, t)
            })
            .collect();
        SurfaceMesh::new(grid, r)
    }

    /// Quads `[a, b, c, d]` (0-based) walking `x`, then `t`, then back.
    pub fn faces(&self) -> Vec<[usize; 4]> {
        let g = &self.grid;
        let mut out = Vec::with_capacity((g.gx.n - 1) * (g.gt.n - 1));
        for ix in 0..g.gx.n - 1 {
            for it in 0..g.gt.n - 1 {
                out.push([
                    g.index(ix, it),
                    g.index(ix + 1, it),
                    g.index(ix + 1, it + 1),
                    g.index(ix, it + 1),
                ]);
            }
        }
        out
    }

    /// Largest `||r_x| - 1|`.
    pub fn arclength_deviation(&self) -> Result<f64> {
        let r_x = diff_axis(&self.r, &self.grid, Axis::X)?;
        Ok(r_x.iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max))
    }
}

/// `r(x, t) = ∫_{x0}^{x} S(x', t) dx'` by the trapezoid rule, slice by slice.
///
/// The x grid of the mesh is one-sided even for periodic spin fields, since
/// the swept curves need not close.
pub fn reconstruct(series: &[SpinField]) -> Result<SurfaceMesh> {
    let gt = time_grid(series)?;
    let gx = series[0].grid;
    let mut columns = Vec::with_capacity(series.len());
    for f in series {
        if f.grid != gx {
            return Err(Error::GridMismatch(format!(
                "slice at t = {} has grid {:?}, expected {:?}",
                f.t, f.grid, gx
            )));
        }
        columns.push(integrate_x(&f.s, &gx, Vector3::zeros())?);
    }
    let grid = Grid2D::new(Grid1D::new(gx.x0, gx.dx, gx.n, Boundary::OneSided)?, gt)?;
    let mut r = Vec::with_capacity(grid.len());
    for ix in 0..gx.n {
        for col in &columns {
            r.push(col[ix]);
        }
    }
    SurfaceMesh::new(grid, r)
}

/// Finite-difference fundamental forms with per-point curvature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshForms {
    pub grid: Grid2D,
    pub forms: FundamentalForms,
    /// `true` where `|r_x ∧ r_t| < DEGENERATE_AREA`; `L, M, N` are zero there.
    pub degenerate: Vec<bool>,
    pub gaussian: Vec<Option<f64>>,
    pub mean: Vec<Option<f64>>,
}

impl MeshForms {
    pub fn degenerate_count(&self) -> usize {
        self.degenerate.iter().filter(|d| **d).count()
    }

    /// Mean of `|K - k0|` over points where `K` is defined.
    pub fn mean_gaussian_error(&self, k0: f64) -> Option<f64> {
        let errs: Vec<f64> = self.gaussian.iter().flatten().map(|k| (k - k0).abs()).collect();
        (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64)
    }
}

/// `E, F, G` from `r_x, r_t`, and `L, M, N` from second differences against
/// the unit normal `(r_x ∧ r_t)/|r_x ∧ r_t|`.
pub fn mesh_forms(m: &SurfaceMesh) -> Result<MeshForms> {
    let g = &m.grid;
    let r_x = diff_axis(&m.r, g, Axis::X)?;
    let r_t = diff_axis(&m.r, g, Axis::T)?;
    let r_xx = diff2_axis(&m.r, g, Axis::X)?;
    let r_tt = diff2_axis(&m.r, g, Axis::T)?;
    let r_xt = diff_axis(&r_x, g, Axis::T)?;
    let n = g.len();
    let mut c: [Vec<f64>; 6] = std::array::from_fn(|_| Vec::with_capacity(n));
    let mut degenerate = Vec::with_capacity(n);
    let mut gaussian = Vec::with_capacity(n);
    let mut mean = Vec::with_capacity(n);
    for i in 0..n {
        let cross = r_x[i].cross(&r_t[i]);
        let area = cross.norm();
        let flat = !(area >= DEGENERATE_AREA);
        let (l, mm, nn) = if flat {
            (0.0, 0.0, 0.0)
        } else {
            let nrm = cross / area;
            (r_xx[i].dot(&nrm), r_xt[i].dot(&nrm), r_tt[i].dot(&nrm))
        };
        let fc = FormCoefficients {
            e: r_x[i].dot(&r_x[i]),
            f: r_x[i].dot(&r_t[i]),
            g: r_t[i].dot(&r_t[i]),
            l,
            m: mm,
            n: nn,
        };
        for (v, x) in c.iter_mut().zip([fc.e, fc.f, fc.g, fc.l, fc.m, fc.n]) {
            v.push(x);
        }
        let kh = if flat { None } else { fc.curvatures() };
        degenerate.push(flat);
        gaussian.push(kh.map(|p| p.0));
        mean.push(kh.map(|p| p.1));
    }
    let [e, f, gg, l, mm, nn] = c;
    Ok(MeshForms {
        grid: *g,
        forms: FundamentalForms::General {
            e,
            f,
            g: gg,
            l,
            m: mm,
            n: nn,
        },
        degenerate,
        gaussian,
        mean,
    })
}

/// Explicit patches for checking [`mesh_forms`].
pub mod patches {
    use super::*;
    use std::f64::consts::PI;

    fn grid(x: (f64, f64), t: (f64, f64), h: f64) -> Result<Grid2D> {
        let count = |(a, b): (f64, f64)| ((b - a) / h).round() as usize + 1;
        Grid2D::new(
            Grid1D::new(x.0, h, count(x), Boundary::OneSided)?,
            Grid1D::new(t.0, h, count(t), Boundary::OneSided)?,
        )
    }

    /// Sphere `R (sin x cos t, sin x sin t, cos x)` with polar angle
    /// `x ∈ [π/4, 3π/4]` and azimuth `t ∈ [0, π/2]`, at spacing `h`.
    pub fn sphere(radius: f64, h: f64) -> Result<SurfaceMesh> {
        let g = grid((PI / 4.0, 3.0 * PI / 4.0), (0.0, PI / 2.0), h)?;
        SurfaceMesh::from_fn(g, |x, t| {
            Vector3::new(x.sin() * t.cos(), x.sin() * t.sin(), x.cos()) * radius
        })
    }

    pub fn unit_sphere(h: f64) -> Result<SurfaceMesh> {
        sphere(1.0, h)
    }

    /// Torus `((R + a cos x) cos t, (R + a cos x) sin t, a sin x)` over
    /// `x, t ∈ [0, π]`.
    pub fn torus(major: f64, minor: f64, h: f64) -> Result<SurfaceMesh> {
        SurfaceMesh::from_fn(grid((0.0, PI), (0.0, PI), h)?, |x, t| {
            let ring = major + minor * x.cos();
            Vector3::new(ring * t.cos(), ring * t.sin(), minor * x.sin())
        })
    }

    /// `r = (x, t, 0)` on the unit square.
    pub fn plane(h: f64) -> Result<SurfaceMesh> {
        SurfaceMesh::from_fn(grid((0.0, 1.0), (0.0, 1.0), h)?, |x, t| Vector3::new(x, t, 0.0))
    }

    /// `(R cos x, R sin x, t)` for `x ∈ [0, π]`, `t ∈ [0, 1]`.
    pub fn cylinder(radius: f64, h: f64) -> Result<SurfaceMesh> {
        SurfaceMesh::from_fn(grid((0.0, PI), (0.0, 1.0), h)?, |x, t| {
            Vector3::new(radius * x.cos(), radius * x.sin(), t)
        })
    }
}

fn boundary_tag(b: Boundary) -> &'static str {
    match b {
        Boundary::Periodic => "periodic",
        Boundary::OneSided => "one_sided",
    }
}

/// Wavefront OBJ text: a `# grid` comment carrying the parameter grid, one
/// `v` line per node in grid order, and 1-based quad faces.
pub fn obj_string(m: &SurfaceMesh) -> String {
    let (gx, gt) = (&m.grid.gx, &m.grid.gt);
    let mut s = String::new();
    writeln!(
        s,
        "# grid {:.16e} {:.16e} {} {} {:.16e} {:.16e} {} {}",
        gx.x0,
        gx.dx,
        gx.n,
        boundary_tag(gx.boundary),
        gt.x0,
        gt.dx,
        gt.n,
        boundary_tag(gt.boundary)
    )
    .expect("write to String");
    for p in &m.r {
        writeln!(s, "v {:.16e} {:.16e} {:.16e}", p.x, p.y, p.z).expect("write to String");
    }
    for [a, b, c, d] in m.faces() {
        writeln!(s, "f {} {} {} {}", a + 1, b + 1, c + 1, d + 1).expect("write to String");
    }
    s
}

pub fn export_obj(m: &SurfaceMesh, path: &Path) -> Result<()> {
    std::fs::write(path, obj_string(m)).map_err(|e| Error::io(path, e))
}

/// Parses text written by [`obj_string`].
pub fn parse_obj(text: &str) -> Result<SurfaceMesh> {
    let bad = |msg: String| Error::Parse(format!("OBJ: {msg}"));
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number {s:?}")));
    let count = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad count {s:?}")));
    let tag = |s: &str| match s {
        "periodic" => Ok(Boundary::Periodic),
        "one_sided" => Ok(Boundary::OneSided),
        _ => Err(bad(format!("unknown boundary {s:?}"))),
    };
    let mut grid = None;
    let mut r = Vec::new();
    let mut faces = Vec::new();
    for line in text.lines() {
        let w: Vec<&str> = line.split_whitespace().collect();
        match w.as_slice() {
            ["#", "grid", x0, dx, nx, bx, t0, dt, nt, bt] => {
                grid = Some(Grid2D::new(
                    Grid1D::new(num(x0)?, num(dx)?, count(nx)?, tag(bx)?)?,
                    Grid1D::new(num(t0)?, num(dt)?, count(nt)?, tag(bt)?)?,
                )?);
            }
            ["v", x, y, z] => r.push(Vector3::new(num(x)?, num(y)?, num(z)?)),
            ["f", rest @ ..] => faces.push(
                rest.iter()
                    .map(|s| count(s).map(|i| i.wrapping_sub(1)))
                    .collect::<Result<Vec<_>>>()?,
            ),
            [] => {}
            [first, ..] if first.starts_with('#') => {}
            _ => return Err(bad(format!("unexpected line {line:?}"))),
        }
    }
    let grid = grid.ok_or_else(|| bad("missing '# grid' header".into()))?;
    let mesh = SurfaceMesh::new(grid, r)?;
    let expected: Vec<Vec<usize>> = mesh.faces().iter().map(|f| f.to_vec()).collect();
    if faces != expected {
        return Err(bad("faces do not match the grid quads".into()));
    }
    Ok(mesh)
}

pub fn import_obj(path: &Path) -> Result<SurfaceMesh> {
    parse_obj(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}
