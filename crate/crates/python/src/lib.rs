//! Python bindings: spin fields, Gauss-Codazzi surfaces, residual checks and
//! meshes. Arrays cross the boundary as lists; anything structured goes as JSON.

use std::f64::consts::PI;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use solsurf::cli::{run_check, RunConfig, Which};
use solsurf::convergence::ConvergenceStudy;
use solsurf::frame::compatibility_residual;
use solsurf::gc::{self, fixtures};
use solsurf::lax::{build_lax, zero_curvature_residual};
use solsurf::spin::{evolve, evolve_trajectory, SpinOptions};
use solsurf::surface::{self, mesh_forms, patches};
use solsurf::{io, Boundary, Grid1D, Grid2D};

create_exception!(solsurf, SolsurfError, PyException, "Invalid input or configuration.");
create_exception!(solsurf, NumericalError, SolsurfError, "A numerical guard tripped.");

fn err(e: solsurf::Error) -> PyErr {
    if e.is_numerical() {
        NumericalError::new_err(e.to_string())
    } else {
        SolsurfError::new_err(e.to_string())
    }
}

fn grid(n: usize, length: f64, periodic: bool) -> PyResult<Grid1D> {
    let b = if periodic {
        Boundary::Periodic
    } else {
        Boundary::OneSided
    };
    Grid1D::spanning(0.0, length, n, b).map_err(err)
}

/// Unit spin field `S` with its constrained `u` and evolved `v`.
#[pyclass(name = "SpinField", module = "solsurf", from_py_object)]
#[derive(Clone)]
pub struct PySpinField {
    inner: solsurf::spin::SpinField,
}

#[pymethods]
impl PySpinField {
    /// `S = (cos kx, sin kx, 0)` on a periodic grid over `[0, 2π]`.
    #[staticmethod]
    #[pyo3(signature = (n, wavenumber = 1.0))]
    fn traveling_circle(n: usize, wavenumber: f64) -> PyResult<Self> {
        let inner = solsurf::spin::SpinField::traveling_circle(grid(n, 2.0 * PI, true)?, wavenumber).map_err(err)?;
        Ok(PySpinField { inner })
    }

    /// Perturbed closed curve over `[0, 2π]`, one-sided unless `periodic`.
    #[staticmethod]
    #[pyo3(signature = (n, seed, amplitude = 0.2, periodic = false))]
    fn random_smooth(n: usize, seed: u64, amplitude: f64, periodic: bool) -> PyResult<Self> {
        let g = grid(n, 2.0 * PI, periodic)?;
        let inner =
            solsurf::spin::SpinField::random_smooth(g, seed, amplitude, &SpinOptions::default()).map_err(err)?;
        Ok(PySpinField { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (n, length, curvature, u_left = 0.0))]
    fn helix(n: usize, length: f64, curvature: f64, u_left: f64) -> PyResult<Self> {
        let g = grid(n, length, false)?;
        let inner = solsurf::spin::SpinField::helix(g, curvature, u_left, &SpinOptions::default()).map_err(err)?;
        Ok(PySpinField { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: solsurf::spin::SpinField =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(err)?;
        Ok(PySpinField { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        io::to_json(&self.inner).map_err(err)
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.t
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.grid.coords()
    }

    #[getter]
    fn s(&self) -> Vec<[f64; 3]> {
        self.inner.s.iter().map(|v| [v.x, v.y, v.z]).collect()
    }

    #[getter]
    fn u(&self) -> Vec<f64> {
        self.inner.u.clone()
    }

    #[getter]
    fn v(&self) -> Vec<f64> {
        self.inner.v.clone()
    }

    fn sphere_drift(&self) -> f64 {
        self.inner.sphere_drift()
    }

    #[pyo3(signature = (dt, steps, renormalize = true))]
    fn evolve(&self, dt: f64, steps: usize, renormalize: bool) -> PyResult<Self> {
        let inner = evolve(&self.inner, dt, steps, renormalize, &SpinOptions::default()).map_err(err)?;
        Ok(PySpinField { inner })
    }

    /// Every `save_every`-th field of an evolution, starting with this one.
    #[pyo3(signature = (dt, steps, save_every = 1, renormalize = true))]
    fn trajectory(&self, dt: f64, steps: usize, save_every: usize, renormalize: bool) -> PyResult<Vec<Self>> {
        let traj =
            evolve_trajectory(&self.inner, dt, steps, renormalize, save_every, &SpinOptions::default()).map_err(err)?;
        Ok(traj.into_iter().map(|inner| PySpinField { inner }).collect())
    }

    fn __len__(&self) -> usize {
        self.inner.grid.n
    }

    fn __repr__(&self) -> String {
        format!("SpinField(n={}, t={})", self.inner.grid.n, self.inner.t)
    }
}

/// Gauss-Codazzi data of an analytic surface, with exact derivatives.
#[pyclass(name = "GcSurface", module = "solsurf", from_py_object)]
#[derive(Clone)]
pub struct PyGcSurface {
    fx: fixtures::GcFixture,
}

fn surface_grid(n: usize, t0: f64, t1: f64) -> PyResult<Grid2D> {
    Grid2D::new(
        grid(n, 2.0 * PI, true)?,
        Grid1D::spanning(t0, t1, n, Boundary::OneSided).map_err(err)?,
    )
    .map_err(err)
}

#[pymethods]
impl PyGcSurface {
    /// Polar angle in `[0.3, π - 0.3]` against azimuth, `n` nodes each.
    #[staticmethod]
    #[pyo3(signature = (n, radius = 1.0))]
    fn sphere(n: usize, radius: f64) -> PyResult<Self> {
        Ok(PyGcSurface {
            fx: fixtures::sphere(radius, surface_grid(n, 0.3, PI - 0.3)?),
        })
    }

    #[staticmethod]
    fn torus(n: usize, major: f64, minor: f64) -> PyResult<Self> {
        Ok(PyGcSurface {
            fx: fixtures::torus(major, minor, surface_grid(n, 0.3, PI - 0.3)?),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, radius = 1.0))]
    fn cylinder(n: usize, radius: f64) -> PyResult<Self> {
        Ok(PyGcSurface {
            fx: fixtures::cylinder(radius, surface_grid(n, 0.0, 1.0)?),
        })
    }

    #[staticmethod]
    fn plane(n: usize) -> PyResult<Self> {
        Ok(PyGcSurface {
            fx: fixtures::plane(surface_grid(n, 0.0, 1.0)?),
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.fx.name.clone()
    }

    /// Max norm of the Gauss-Codazzi residual, numerical or analytic derivatives.
    #[pyo3(signature = (analytic = false))]
    fn gc_residual(&self, analytic: bool) -> PyResult<f64> {
        let r = if analytic {
            gc::gc_residual_with(&self.fx.data, &self.fx.derivs)
        } else {
            gc::gc_residual(&self.fx.data)
        };
        Ok(r.map_err(err)?.max_norm())
    }

    #[pyo3(signature = (analytic = false))]
    fn metric_residual(&self, analytic: bool) -> PyResult<f64> {
        let r = if analytic {
            gc::metric_residual_with(&self.fx.data, &self.fx.derivs)
        } else {
            gc::metric_residual(&self.fx.data)
        };
        Ok(r.map_err(err)?.max_norm())
    }

    /// Compatibility residual of the frame fields the surface maps to.
    fn compatibility_residual(&self) -> PyResult<f64> {
        let ct = gc::map_gc_to_frame(&self.fx.data).map_err(err)?;
        Ok(compatibility_residual(&ct).map_err(err)?.max_norm())
    }

    /// Max norm of the zero-curvature residual of the mapped Lax pair.
    fn lax_residual(&self) -> PyResult<f64> {
        let ct = gc::map_gc_to_frame(&self.fx.data).map_err(err)?;
        let r = zero_curvature_residual(&build_lax(&ct)).map_err(err)?;
        Ok(solsurf::convergence::max_abs(&r.values))
    }

    /// Gaussian and mean curvature from the fundamental forms.
    fn curvatures(&self) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let forms = gc::forms_from_psi(&self.fx.data).map_err(err)?;
        let c = gc::curvatures(&forms.fundamental_forms()).map_err(err)?;
        Ok((c.gaussian, c.mean))
    }

    /// Exact Gaussian and mean curvature.
    fn exact_curvatures(&self) -> (Vec<f64>, Vec<f64>) {
        (self.fx.gaussian.clone(), self.fx.mean.clone())
    }

    fn to_json(&self) -> PyResult<String> {
        io::to_json(&self.fx.data).map_err(err)
    }
}

/// Quad mesh of a surface patch.
#[pyclass(name = "Mesh", module = "solsurf", from_py_object)]
#[derive(Clone)]
pub struct PyMesh {
    inner: surface::SurfaceMesh,
}

#[pymethods]
impl PyMesh {
    #[staticmethod]
    #[pyo3(signature = (h, radius = 1.0))]
    fn sphere_patch(h: f64, radius: f64) -> PyResult<Self> {
        Ok(PyMesh {
            inner: patches::sphere(radius, h).map_err(err)?,
        })
    }

    #[staticmethod]
    fn torus_patch(h: f64, major: f64, minor: f64) -> PyResult<Self> {
        Ok(PyMesh {
            inner: patches::torus(major, minor, h).map_err(err)?,
        })
    }

    /// Surface swept by a spin trajectory (`r_x = S`).
    #[staticmethod]
    fn reconstruct(trajectory: Vec<PySpinField>) -> PyResult<Self> {
        let series: Vec<_> = trajectory.into_iter().map(|f| f.inner).collect();
        Ok(PyMesh {
            inner: surface::reconstruct(&series).map_err(err)?,
        })
    }

    #[getter]
    fn vertices(&self) -> Vec<[f64; 3]> {
        self.inner.r.iter().map(|v| [v.x, v.y, v.z]).collect()
    }

    #[getter]
    fn faces(&self) -> Vec<[usize; 4]> {
        self.inner.faces()
    }

    /// Per-vertex `(K, H)`; `None` on degenerate points.
    fn curvatures(&self) -> PyResult<Vec<Option<(f64, f64)>>> {
        let mf = mesh_forms(&self.inner).map_err(err)?;
        Ok(mf.gaussian.iter().zip(&mf.mean).map(|(k, h)| k.zip(*h)).collect())
    }

    fn mean_gaussian_error(&self, reference: f64) -> PyResult<Option<f64>> {
        Ok(mesh_forms(&self.inner).map_err(err)?.mean_gaussian_error(reference))
    }

    fn to_obj(&self) -> String {
        surface::obj_string(&self.inner)
    }
}

fn parse_which(which: &str) -> PyResult<Which> {
    Ok(match which {
        "compat" => Which::Compat,
        "gc" => Which::Gc,
        "metric" => Which::Metric,
        "lax" => Which::Lax,
        "m0" => Which::M0,
        other => return Err(PyValueError::new_err(format!("unknown residual suite {other:?}"))),
    })
}

/// Runs a residual suite at `levels` resolutions from a JSON run config
/// (empty for the defaults) and returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (config, which, levels = 2))]
fn check(config: &str, which: &str, levels: u32) -> PyResult<String> {
    let cfg = if config.trim().is_empty() {
        RunConfig::default()
    } else {
        RunConfig::from_json(config).map_err(err)?
    };
    let cfg = cfg.resolve().map_err(err)?;
    let report = run_check(&cfg, parse_which(which)?, levels).map_err(err)?;
    io::to_json(&report).map_err(err)
}

/// Least-squares order of `errors` against `spacings` on log axes.
#[pyfunction]
fn observed_order(spacings: Vec<f64>, errors: Vec<f64>) -> PyResult<Option<f64>> {
    if spacings.len() != errors.len() || spacings.len() < 2 {
        return Err(PyValueError::new_err("need two or more matching spacings and errors"));
    }
    Ok(ConvergenceStudy::new(spacings, errors).fitted_order())
}

#[pymodule]
#[pyo3(name = "solsurf")]
fn solsurf_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", solsurf::VERSION)?;
    m.add("SolsurfError", m.py().get_type::<SolsurfError>())?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_class::<PySpinField>()?;
    m.add_class::<PyGcSurface>()?;
    m.add_class::<PyMesh>()?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(observed_order, m)?)?;
    Ok(())
}
