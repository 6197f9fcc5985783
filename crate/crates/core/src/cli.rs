//! Command-line driver: JSON run configs, presets, and the `simulate`,
//! `check`, `surface` and `convergence` pipelines.
//!
//! Exit codes: `0` success, `1` a residual or acceptance check failed, `2`
//! usage, config or I/O error, `3` numerical failure. Every summary embeds the
//! resolved config and the toolkit version, and nothing time- or
//! host-dependent is written, so identical configs give identical files.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convergence::{loglog_slope, max_abs, ConvergenceStudy};
use crate::error::{Error, Result};
use crate::frame::{compatibility_residual, frame_field, m0_residual, CtFields, FrameSeries, TransportOptions};
use crate::gc::{self, fixtures, GcData};
use crate::io;
use crate::lax::{build_lax, holonomy_defect, zero_curvature_residual};
use crate::numgrid::{Boundary, Grid1D, Grid2D};
use crate::spin::{evolve_trajectory, spin_rhs, SpinField, SpinOptions};
use crate::surface::{self, mesh_forms, patches, SurfaceMesh};
use crate::{Beta, VERSION};

pub const OUT_ENV: &str = "SOLSURF_OUT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_RESIDUAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub x0: f64,
    /// Defaults to `2π/(n-1)`, or `0.01` for the helix.
    pub dx: Option<f64>,
    pub n: usize,
    pub t0: f64,
    /// Defaults to `dx/4`.
    pub dt: Option<f64>,
    pub steps: Option<i64>,
    /// Alternative to `steps`: `dt` is shrunk so an integer number of steps lands on it.
    pub t_final: Option<f64>,
    pub save_every: usize,
    /// Defaults to the preset's natural boundary.
    pub boundary: Option<Boundary>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            x0: 0.0,
            dx: None,
            n: 129,
            t0: 0.0,
            dt: None,
            steps: None,
            t_final: Some(1.0),
            save_every: 1,
            boundary: None,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_amplitude() -> f64 {
    0.2
}

/// Initial spin fields and analytic surfaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    TravelingCircle {
        #[serde(default = "one")]
        wavenumber: f64,
    },
    Helix {
        curvature: f64,
        #[serde(default)]
        u_left: f64,
    },
    /// Seeded by the config's `seed`.
    RandomSmooth {
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    /// A `SpinField` JSON file.
    SpinFile {
        path: PathBuf,
    },
    Sphere {
        #[serde(default = "one")]
        radius: f64,
    },
    Torus {
        major: f64,
        minor: f64,
    },
    Cylinder {
        #[serde(default = "one")]
        radius: f64,
    },
    Plane,
}

impl Preset {
    pub fn is_spin(&self) -> bool {
        matches!(
            self,
            Preset::TravelingCircle { .. }
                | Preset::Helix { .. }
                | Preset::RandomSmooth { .. }
                | Preset::SpinFile { .. }
        )
    }

    fn natural_boundary(&self) -> Boundary {
        match self {
            Preset::TravelingCircle { .. } => Boundary::Periodic,
            // `u` is integrated from the left end and does not wrap around a
            // closed random curve, so a periodic grid would carry a seam
            _ => Boundary::OneSided,
        }
    }

    /// Parses `"name key=value ..."`, e.g. `"traveling_circle k=2"`.
    /// `seed=` is returned separately since it lives at the config top level.
    pub fn parse(text: &str) -> Result<(Preset, Option<u64>)> {
        let mut words = text.split_whitespace();
        let name = words.next().ok_or_else(|| Error::Parse("empty preset".into()))?;
        let mut obj = serde_json::Map::new();
        obj.insert("name".into(), name.into());
        let mut seed = None;
        for w in words {
            let (key, value) = w
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("preset parameter {w:?} is not key=value")))?;
            let key = match key {
                "k" => "wavenumber",
                "R" => "radius",
                "a" => "minor",
                other => other,
            };
            if key == "seed" {
                seed = Some(value.parse().map_err(|_| Error::Parse(format!("bad seed {value:?}")))?);
                continue;
            }
            let v = match value.parse::<f64>() {
                Ok(x) => serde_json::json!(x),
                Err(_) => serde_json::json!(value),
            };
            obj.insert(key.into(), v);
        }
        let preset = serde_json::from_value(obj.into()).map_err(|e| Error::Parse(format!("preset {text:?}: {e}")))?;
        Ok((preset, seed))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub k_min: f64,
    pub clamp_slack: f64,
    pub map_tolerance: f64,
    /// Largest finest-level residual a check accepts.
    pub residual_threshold: f64,
    /// Largest residual accepted on the analytic-derivative path.
    pub analytic_threshold: f64,
    pub min_order: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            k_min: 1e-8,
            clamp_slack: 1e-12,
            map_tolerance: 1e-6,
            residual_threshold: 1e-2,
            analytic_threshold: 1e-10,
            min_order: 1.7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Obj,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub scenario: String,
    pub grid: GridConfig,
    pub preset: Preset,
    pub beta: i32,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
    pub formats: Vec<Format>,
    pub seed: u64,
    /// Project `S` back onto the sphere after every step.
    pub renormalize: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: "traveling_circle".into(),
            grid: GridConfig::default(),
            preset: Preset::TravelingCircle { wavenumber: 1.0 },
            beta: 1,
            tolerances: Tolerances::default(),
            output_dir: PathBuf::from("out"),
            formats: vec![Format::Json, Format::Csv, Format::Obj],
            seed: 0,
            renormalize: true,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))
    }

    pub fn load(path: &Path) -> Result<Self> {
        RunConfig::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    /// Every violated constraint, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut need = |ok: bool, msg: String| {
            if !ok {
                v.push(msg);
            }
        };
        let pos = |x: f64| x.is_finite() && x > 0.0;
        need(
            !self.scenario.is_empty()
                && !self.scenario.contains(['/', '\\'])
                && self.scenario != ".."
                && self.scenario != ".",
            format!("scenario {:?} must be a plain non-empty name", self.scenario),
        );
        let g = &self.grid;
        need(g.n >= 3, format!("grid.n = {} must be at least 3", g.n));
        need(g.x0.is_finite(), "grid.x0 must be finite".into());
        need(g.t0.is_finite(), "grid.t0 must be finite".into());
        if let Some(dx) = g.dx {
            need(pos(dx), format!("grid.dx = {dx} must be positive"));
        }
        if let Some(dt) = g.dt {
            need(pos(dt), format!("grid.dt = {dt} must be positive"));
        }
        if let Some(s) = g.steps {
            need(s >= 0, format!("grid.steps = {s} must be non-negative"));
        }
        if let Some(t) = g.t_final {
            need(pos(t), format!("grid.t_final = {t} must be positive"));
        }
        need(
            !(g.steps.is_some() && g.t_final.is_some()),
            "grid.steps and grid.t_final are mutually exclusive".into(),
        );
        need(g.save_every >= 1, "grid.save_every must be at least 1".into());
        need(
            self.beta == 1 || self.beta == -1,
            format!("beta = {} must be +1 or -1", self.beta),
        );
        let t = &self.tolerances;
        for (name, x) in [
            ("k_min", t.k_min),
            ("clamp_slack", t.clamp_slack),
            ("map_tolerance", t.map_tolerance),
            ("residual_threshold", t.residual_threshold),
            ("analytic_threshold", t.analytic_threshold),
            ("min_order", t.min_order),
        ] {
            need(pos(x), format!("tolerances.{name} = {x} must be positive"));
        }
        need(!self.formats.is_empty(), "formats must not be empty".into());
        match &self.preset {
            Preset::TravelingCircle { wavenumber: k } => {
                need(
                    k.is_finite() && *k != 0.0,
                    format!("preset.wavenumber = {k} must be non-zero"),
                );
                if g.boundary.unwrap_or(Boundary::Periodic) == Boundary::Periodic {
                    need(
                        k.fract() == 0.0,
                        format!("preset.wavenumber = {k} must be an integer on a periodic grid"),
                    );
                }
            }
            Preset::Helix { curvature, u_left } => {
                need(
                    *curvature > 0.0 && *curvature < 1.0,
                    format!("preset.curvature = {curvature} must lie in (0, 1)"),
                );
                need(u_left.is_finite(), "preset.u_left must be finite".into());
            }
            Preset::RandomSmooth { amplitude } => {
                need(
                    pos(*amplitude),
                    format!("preset.amplitude = {amplitude} must be positive"),
                );
            }
            Preset::SpinFile { path } => {
                need(!path.as_os_str().is_empty(), "preset.path must not be empty".into());
            }
            Preset::Sphere { radius } | Preset::Cylinder { radius } => {
                need(pos(*radius), format!("preset.radius = {radius} must be positive"));
            }
            Preset::Torus { major, minor } => {
                need(pos(*minor), format!("preset.minor = {minor} must be positive"));
                need(
                    major.is_finite() && major > minor,
                    format!("preset.major = {major} must exceed minor"),
                );
            }
            Preset::Plane => {}
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    /// Fills every defaulted grid value so the summary records what ran.
    pub fn resolve(&self) -> Result<RunConfig> {
        self.validate()?;
        let mut c = self.clone();
        let boundary = c.grid.boundary.unwrap_or_else(|| c.preset.natural_boundary());
        c.grid.boundary = Some(boundary);
        match &c.preset {
            Preset::SpinFile { path } => {
                let f: SpinField = io::read_json(path)?;
                c.grid.x0 = f.grid.x0;
                c.grid.dx = Some(f.grid.dx);
                c.grid.n = f.grid.n;
                c.grid.t0 = f.t;
                c.grid.boundary = Some(f.grid.boundary);
            }
            p if p.is_spin() => {
                let dx = c.grid.dx.unwrap_or(match c.preset {
                    Preset::Helix { .. } => 0.01,
                    _ => 2.0 * PI / (c.grid.n - 1) as f64,
                });
                c.grid.dx = Some(dx);
            }
            _ => {
                let (gx, gt) = surface_grid(&c.preset, c.grid.n)?;
                c.grid.x0 = gx.x0;
                c.grid.dx = Some(gx.dx);
                c.grid.t0 = gt.x0;
                c.grid.dt = Some(gt.dx);
                c.grid.boundary = Some(gx.boundary);
                c.grid.steps = Some(0);
                c.grid.t_final = None;
                return Ok(c);
            }
        }
        let dx = c.grid.dx.expect("resolved above");
        let dt = c.grid.dt.unwrap_or(dx / 4.0);
        match c.grid.t_final.take() {
            Some(t) => {
                let steps = (t / dt - 1e-9).ceil().max(1.0);
                c.grid.steps = Some(steps as i64);
                c.grid.dt = Some(t / steps);
            }
            None => {
                c.grid.steps = Some(c.grid.steps.unwrap_or(0));
                c.grid.dt = Some(dt);
            }
        }
        Ok(c)
    }

    fn spin_options(&self) -> SpinOptions {
        SpinOptions {
            k_min: self.tolerances.k_min,
            clamp_slack: self.tolerances.clamp_slack,
            u_left: None,
        }
    }

    fn beta(&self) -> Result<Beta> {
        Beta::try_from(self.beta).map_err(|e| Error::Config(vec![e]))
    }

    fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    fn steps(&self) -> usize {
        self.grid.steps.unwrap_or(0).max(0) as usize
    }
}

/// Parameter grid of an analytic surface: `x` around the axis (periodic),
/// `t` across it. Both axes carry `n` nodes.
fn surface_grid(p: &Preset, n: usize) -> Result<(Grid1D, Grid1D)> {
    let gx = Grid1D::spanning(0.0, 2.0 * PI, n, Boundary::Periodic)?;
    let gt = match p {
        Preset::Sphere { .. } | Preset::Torus { .. } => Grid1D::spanning(0.3, PI - 0.3, n, Boundary::OneSided)?,
        _ => Grid1D::spanning(0.0, 1.0, n, Boundary::OneSided)?,
    };
    Ok((gx, gt))
}

fn refine_n(n: usize, level: u32) -> usize {
    (n - 1) * (1 << level) + 1
}

/// Spin field and stepping of a resolved config, refined `level` times.
fn spin_setup(cfg: &RunConfig, level: u32) -> Result<(SpinField, f64, usize, usize)> {
    let opts = cfg.spin_options();
    let scale = (1u64 << level) as f64;
    let g = &cfg.grid;
    let dt = g.dt.expect("resolved") / scale;
    let steps = cfg.steps() << level;
    let save = g.save_every;
    let f = match &cfg.preset {
        Preset::SpinFile { path } => {
            if level > 0 {
                return Err(Error::InvalidArgument("a spin_file preset cannot be refined".into()));
            }
            io::read_json(path)?
        }
        p => {
            let grid = Grid1D::new(
                g.x0,
                g.dx.expect("resolved") / scale,
                refine_n(g.n, level),
                g.boundary.expect("resolved"),
            )?;
            let mut f = match p {
                Preset::TravelingCircle { wavenumber } => SpinField::traveling_circle(grid, *wavenumber)?,
                Preset::Helix { curvature, u_left } => SpinField::helix(grid, *curvature, *u_left, &opts)?,
                Preset::RandomSmooth { amplitude } => SpinField::random_smooth(grid, cfg.seed, *amplitude, &opts)?,
                _ => return Err(Error::InvalidArgument("not a spin preset".into())),
            };
            f.t = g.t0;
            f
        }
    };
    if cfg.beta()? != Beta::Plus {
        return Err(Error::UnsupportedBeta(cfg.beta));
    }
    Ok((f, dt, steps, save))
}

fn spin_trajectory(cfg: &RunConfig, level: u32) -> Result<Vec<SpinField>> {
    let (f, dt, steps, save) = spin_setup(cfg, level)?;
    evolve_trajectory(&f, dt, steps, cfg.renormalize, save, &cfg.spin_options())
}

/// Random fields of the random preset: one fresh random curve per time level
/// instead of an evolution, so no equation holds.
fn random_slices(cfg: &RunConfig, level: u32, amplitude: f64) -> Result<Vec<SpinField>> {
    let (f, dt, steps, save) = spin_setup(cfg, level)?;
    let opts = cfg.spin_options();
    let count = steps / save + 1;
    (0..count)
        .map(|j| {
            let t = f.t + (j * save) as f64 * dt;
            let mut s = SpinField::random_smooth(f.grid, cfg.seed, amplitude * (1.0 + t), &opts)?;
            s.t = t;
            Ok(s)
        })
        .collect()
}

fn random_gc(cfg: &RunConfig, grid: Grid2D) -> Result<GcData> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut field = |base: f64| {
        let terms: Vec<(f64, f64, f64, f64)> = (1..=3)
            .map(|j| {
                (
                    rng.gen_range(-0.3..0.3),
                    j as f64,
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(0.0..2.0 * PI),
                )
            })
            .collect();
        grid.sample(|x, t| {
            base + terms
                .iter()
                .map(|(a, j, b, c)| a * (j * x + b * t + c).sin())
                .sum::<f64>()
        })
    };
    GcData::new(
        grid,
        field(0.0),
        field(0.5),
        field(1.5),
        field(2.0),
        field(0.0),
        field(0.0),
    )
}

fn fixture(p: &Preset, grid: Grid2D) -> Option<fixtures::GcFixture> {
    Some(match p {
        Preset::Sphere { radius } => fixtures::sphere(*radius, grid),
        Preset::Torus { major, minor } => fixtures::torus(*major, *minor, grid),
        Preset::Cylinder { radius } => fixtures::cylinder(*radius, grid),
        Preset::Plane => fixtures::plane(grid),
        _ => return None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    Compat,
    Gc,
    Metric,
    Lax,
    M0,
}

impl Which {
    fn name(self) -> &'static str {
        match self {
            Which::Compat => "compat",
            Which::Gc => "gc",
            Which::Metric => "metric",
            Which::Lax => "lax",
            Which::M0 => "m0",
        }
    }
}

/// Residual of one suite at one resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub nx: usize,
    pub nt: usize,
    pub dx: f64,
    pub dt: f64,
    pub max_norm: f64,
    /// Per-component max norms, where the suite has components.
    pub components: Vec<f64>,
    /// Residual on the analytic-derivative path, for surface fixtures.
    pub analytic_max_norm: Option<f64>,
    /// Cell holonomy defect `‖H - I‖` at a fixed physical cell, for `lax`.
    pub holonomy_defect: Option<f64>,
    #[serde(skip)]
    columns: Vec<(String, Vec<f64>)>,
}

impl Level {
    fn new(grid: &Grid2D, components: Vec<(&str, Vec<f64>)>) -> Self {
        let comps: Vec<f64> = components.iter().map(|(_, c)| max_abs(c)).collect();
        Level {
            nx: grid.gx.n,
            nt: grid.gt.n,
            dx: grid.gx.dx,
            dt: grid.gt.dx,
            max_norm: comps.iter().copied().fold(0.0, f64::max),
            components: comps,
            analytic_max_norm: None,
            holonomy_defect: None,
            columns: components.into_iter().map(|(n, c)| (n.to_string(), c)).collect(),
        }
    }
}

fn fixed_cell(grid: &Grid2D) -> (usize, usize) {
    ((grid.gx.n - 1) / 8, (grid.gt.n - 1) / 4)
}

fn lax_level(ct: &CtFields) -> Result<Level> {
    let l = build_lax(ct);
    let r = zero_curvature_residual(&l)?;
    let mut level = Level::new(&ct.grid, vec![("lax", r.values)]);
    let (ix, it) = fixed_cell(&ct.grid);
    level.holonomy_defect = Some(holonomy_defect(&l, ix, it)?);
    Ok(level)
}

fn compat_level(ct: &CtFields) -> Result<Level> {
    let r = compatibility_residual(ct)?;
    Ok(Level::new(&ct.grid, vec![("r1", r.r1), ("r2", r.r2), ("r3", r.r3)]))
}

/// One resolution of the selected suite.
fn check_level(cfg: &RunConfig, which: Which, level: u32) -> Result<Level> {
    let opts = cfg.spin_options();
    if cfg.preset.is_spin() {
        let traj = match cfg.preset {
            Preset::RandomSmooth { amplitude } => random_slices(cfg, level, amplitude)?,
            _ => spin_trajectory(cfg, level)?,
        };
        if traj.len() < 3 {
            return Err(Error::Config(vec![format!(
                "check needs at least 3 saved time levels, the run saves {}",
                traj.len()
            )]));
        }
        return match which {
            Which::Compat => compat_level(&CtFields::from_spin_trajectory(&traj, &opts)?),
            Which::Lax => lax_level(&CtFields::from_spin_trajectory(&traj, &opts)?),
            Which::M0 => {
                let series = FrameSeries::from_spin_trajectory(&traj, &opts)?;
                let r = m0_residual(&series)?;
                Ok(Level::new(&r.grid, vec![("m0", r.values)]))
            }
            Which::Gc | Which::Metric => {
                if let Preset::RandomSmooth { .. } = cfg.preset {
                    let ct = CtFields::from_spin_trajectory(&traj, &opts)?;
                    let d = random_gc(cfg, ct.grid)?;
                    return gc_level(&d, None, which);
                }
                Err(Error::Config(vec![format!(
                    "check {} needs a surface preset (sphere, torus, cylinder, plane)",
                    which.name()
                )]))
            }
        };
    }
    let (gx, gt) = surface_grid(&cfg.preset, refine_n(cfg.grid.n, level))?;
    let grid = Grid2D::new(gx, gt)?;
    let fx = fixture(&cfg.preset, grid).expect("surface preset");
    match which {
        Which::Gc | Which::Metric => gc_level(&fx.data, Some(&fx.derivs), which),
        Which::Compat => compat_level(&gc::map_gc_to_frame(&fx.data)?),
        Which::Lax => lax_level(&gc::map_gc_to_frame(&fx.data)?),
        Which::M0 => {
            let ct = gc::map_gc_to_frame(&fx.data)?;
            let series = frame_field(
                &nalgebra::Matrix3::identity(),
                &ct,
                cfg.beta()?,
                &TransportOptions::default(),
            )?;
            let r = m0_residual(&series)?;
            Ok(Level::new(&r.grid, vec![("m0", r.values)]))
        }
    }
}

fn gc_level(d: &GcData, analytic: Option<&gc::GcDerivatives>, which: Which) -> Result<Level> {
    if which == Which::Gc {
        let r = gc::gc_residual(d)?;
        let mut level = Level::new(&d.grid, vec![("r1", r.r1), ("r2", r.r2), ("r3", r.r3)]);
        if let Some(dd) = analytic {
            level.analytic_max_norm = Some(gc::gc_residual_with(d, dd)?.max_norm());
        }
        Ok(level)
    } else {
        let r = gc::metric_residual(d)?;
        let mut level = Level::new(&d.grid, vec![("r1", r.r1), ("r2", r.r2)]);
        if let Some(dd) = analytic {
            level.analytic_max_norm = Some(gc::metric_residual_with(d, dd)?.max_norm());
        }
        Ok(level)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub version: String,
    pub config: RunConfig,
    pub which: Which,
    pub levels: Vec<Level>,
    pub pairwise_orders: Vec<f64>,
    pub fitted_order: Option<f64>,
    /// Every level at round-off, so no order is measurable or needed.
    pub at_roundoff: bool,
    /// Log-log slope of the holonomy defect against cell area, for `lax`.
    pub holonomy_area_slope: Option<f64>,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Runs the suite at `levels` resolutions and judges order and size.
pub fn run_check(cfg: &RunConfig, which: Which, levels: u32) -> Result<CheckReport> {
    let lv = (0..levels)
        .map(|l| check_level(cfg, which, l))
        .collect::<Result<Vec<_>>>()?;
    let study = ConvergenceStudy::new(
        lv.iter().map(|l| l.dx).collect(),
        lv.iter().map(|l| l.max_norm).collect(),
    );
    let tol = &cfg.tolerances;
    let mut failures = Vec::new();
    if !study.converges_at(tol.min_order) {
        failures.push(format!(
            "observed orders {:?} fall below {}",
            study.pairwise(),
            tol.min_order
        ));
    }
    if !(study.finest() <= tol.residual_threshold) {
        failures.push(format!(
            "finest residual {:e} exceeds {:e}",
            study.finest(),
            tol.residual_threshold
        ));
    }
    for l in &lv {
        if let Some(a) = l.analytic_max_norm {
            if !(a <= tol.analytic_threshold) {
                failures.push(format!(
                    "analytic residual {a:e} at nx = {} exceeds {:e}",
                    l.nx, tol.analytic_threshold
                ));
            }
        }
    }
    let holonomy_area_slope = if lv.len() >= 2 && lv.iter().all(|l| l.holonomy_defect.is_some_and(|d| d > 0.0)) {
        Some(loglog_slope(
            &lv.iter().map(|l| l.dx * l.dt).collect::<Vec<_>>(),
            &lv.iter()
                .map(|l| l.holonomy_defect.expect("checked"))
                .collect::<Vec<_>>(),
        ))
    } else {
        None
    };
    Ok(CheckReport {
        version: VERSION.into(),
        config: cfg.clone(),
        which,
        pairwise_orders: study.pairwise(),
        fitted_order: study.fitted_order(),
        at_roundoff: study.at_roundoff(),
        levels: lv,
        holonomy_area_slope,
        passed: failures.is_empty(),
        failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub version: String,
    pub config: RunConfig,
    pub steps: usize,
    pub saved_slices: usize,
    pub final_time: f64,
    pub max_sphere_drift: f64,
    /// Largest `|u_x - v sqrt(S_t² - u²)|` over the saved slices.
    pub max_u_constraint_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSummary {
    pub version: String,
    pub config: RunConfig,
    pub vertices: usize,
    pub faces: usize,
    pub degenerate_points: usize,
    pub max_arclength_deviation: f64,
    /// Exact Gaussian curvature of an analytic patch, where it is constant.
    pub reference_gaussian: Option<f64>,
    /// Mean of `|K - K_ref|` over non-degenerate points.
    pub mean_gaussian_error: Option<f64>,
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir.join(&cfg.scenario);
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulateSummary> {
    if !cfg.preset.is_spin() {
        return Err(Error::Config(vec!["simulate needs a spin preset".into()]));
    }
    let traj = spin_trajectory(cfg, 0)?;
    let opts = cfg.spin_options();
    let mut max_u = 0.0f64;
    for f in &traj {
        max_u = max_u.max(max_abs(&spin_rhs(f, &opts)?.du));
    }
    let last = traj.last().expect("trajectory holds the initial field");
    let summary = SimulateSummary {
        version: VERSION.into(),
        config: cfg.clone(),
        steps: cfg.steps(),
        saved_slices: traj.len(),
        final_time: last.t,
        max_sphere_drift: traj.iter().map(SpinField::sphere_drift).fold(0.0, f64::max),
        max_u_constraint_residual: max_u,
    };
    let dir = output_dir(cfg)?;
    if cfg.wants(Format::Json) {
        io::write_json(&dir.join("trajectory.json"), &traj)?;
    }
    if cfg.wants(Format::Csv) {
        io::write_spin_csv(&dir.join("trajectory.csv"), &traj)?;
    }
    io::write_json(&dir.join("simulate_summary.json"), &summary)?;
    Ok(summary)
}

fn write_check(cfg: &RunConfig, report: &CheckReport, stem: &str) -> Result<()> {
    let dir = output_dir(cfg)?;
    io::write_json(&dir.join(format!("{stem}.json")), report)?;
    if cfg.wants(Format::Csv) {
        if let Some(finest) = report.levels.last() {
            let (gx, gt) = if cfg.preset.is_spin() {
                (
                    Grid1D::new(cfg.grid.x0, finest.dx, finest.nx, cfg.grid.boundary.expect("resolved"))?,
                    Grid1D::new(cfg.grid.t0, finest.dt, finest.nt, Boundary::OneSided)?,
                )
            } else {
                surface_grid(&cfg.preset, finest.nx)?
            };
            let grid = Grid2D::new(gx, gt)?;
            let names: Vec<&str> = finest.columns.iter().map(|(n, _)| n.as_str()).collect();
            let cols: Vec<&[f64]> = finest.columns.iter().map(|(_, c)| c.as_slice()).collect();
            io::write_grid_csv(&dir.join(format!("{stem}.csv")), &grid, &names, &cols)?;
        }
    }
    Ok(())
}

pub fn cmd_check(cfg: &RunConfig, which: Which) -> Result<CheckReport> {
    let report = run_check(cfg, which, 2)?;
    write_check(cfg, &report, &format!("check_{}", which.name()))?;
    Ok(report)
}

pub fn cmd_convergence(cfg: &RunConfig, which: Which, levels: u32) -> Result<CheckReport> {
    if levels < 2 {
        return Err(Error::Config(vec![format!("levels = {levels} must be at least 2")]));
    }
    let report = run_check(cfg, which, levels)?;
    write_check(cfg, &report, &format!("convergence_{}", which.name()))?;
    Ok(report)
}

fn surface_mesh(cfg: &RunConfig) -> Result<(SurfaceMesh, Option<f64>)> {
    let n = cfg.grid.n;
    let h = |span: f64| span / (n - 1) as f64;
    Ok(match &cfg.preset {
        Preset::Sphere { radius } => (patches::sphere(*radius, h(PI / 2.0))?, Some(1.0 / (radius * radius))),
        Preset::Torus { major, minor } => (patches::torus(*major, *minor, h(PI))?, None),
        Preset::Cylinder { radius } => (patches::cylinder(*radius, h(PI))?, Some(0.0)),
        Preset::Plane => (patches::plane(h(1.0))?, Some(0.0)),
        _ => (surface::reconstruct(&spin_trajectory(cfg, 0)?)?, None),
    })
}

pub fn cmd_surface(cfg: &RunConfig) -> Result<SurfaceSummary> {
    let (mesh, reference) = surface_mesh(cfg)?;
    let mf = mesh_forms(&mesh)?;
    let summary = SurfaceSummary {
        version: VERSION.into(),
        config: cfg.clone(),
        vertices: mesh.r.len(),
        faces: mesh.faces().len(),
        degenerate_points: mf.degenerate_count(),
        max_arclength_deviation: mesh.arclength_deviation()?,
        reference_gaussian: reference,
        mean_gaussian_error: reference.and_then(|k| mf.mean_gaussian_error(k)),
    };
    let dir = output_dir(cfg)?;
    if cfg.wants(Format::Obj) {
        surface::export_obj(&mesh, &dir.join("surface.obj"))?;
    }
    if cfg.wants(Format::Csv) {
        io::write_positions_csv(&dir.join("surface.csv"), &mesh)?;
        io::write_curvature_csv(&dir.join("curvature.csv"), &mf)?;
    }
    if cfg.wants(Format::Json) {
        io::write_json(&dir.join("surface.json"), &mesh)?;
        io::write_json(&dir.join("forms.json"), &mf)?;
    }
    io::write_json(&dir.join("surface_summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Parser)]
#[command(
    name = "solsurf",
    version,
    about = "Spin evolution, frame and surface residual checks"
)]
pub struct Cli {
    /// JSON run config; flags below override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub scenario: Option<String>,
    /// Preset with parameters, e.g. "traveling_circle k=1" or "random_smooth seed=3".
    #[arg(long, global = true)]
    pub preset: Option<String>,
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub dx: Option<f64>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true)]
    pub steps: Option<i64>,
    #[arg(long, global = true)]
    pub t_final: Option<f64>,
    #[arg(long, global = true)]
    pub save_every: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub beta: Option<i32>,
    /// Output directory; takes precedence over SOLSURF_OUT and the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long = "format", value_enum, global = true)]
    pub formats: Vec<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve the spin field and write the trajectory.
    Simulate,
    /// Residual suite at two resolutions.
    Check {
        #[arg(long, value_enum)]
        which: Which,
    },
    /// Reconstruct or sample a surface and export the mesh.
    Surface,
    /// Residual suite at several resolutions with a fitted order.
    Convergence {
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long, default_value_t = 3)]
        levels: u32,
    },
}

impl Cli {
    /// Config file, then flags, then the output directory precedence.
    pub fn config(&self, env_out: Option<PathBuf>) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = &self.scenario {
            cfg.scenario.clone_from(s);
        }
        if let Some(p) = &self.preset {
            let (preset, seed) = Preset::parse(p)?;
            if self.scenario.is_none() && self.config.is_none() {
                cfg.scenario = p.split_whitespace().next().unwrap_or_default().to_string();
            }
            cfg.preset = preset;
            if let Some(s) = seed {
                cfg.seed = s;
            }
        }
        let g = &mut cfg.grid;
        if let Some(n) = self.n {
            g.n = n;
        }
        if self.dx.is_some() {
            g.dx = self.dx;
        }
        if self.dt.is_some() {
            g.dt = self.dt;
        }
        if self.steps.is_some() {
            g.steps = self.steps;
            g.t_final = None;
        }
        if self.t_final.is_some() {
            g.t_final = self.t_final;
            g.steps = None;
        }
        if let Some(s) = self.save_every {
            g.save_every = s;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(b) = self.beta {
            cfg.beta = b;
        }
        if !self.formats.is_empty() {
            cfg.formats.clone_from(&self.formats);
        }
        if let Some(o) = self.out.clone().or(env_out) {
            cfg.output_dir = o;
        }
        cfg.resolve()
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

/// Runs one command and returns its exit code; messages go to stdout/stderr.
pub fn run(cli: &Cli, env_out: Option<PathBuf>) -> i32 {
    let result = cli.config(env_out).and_then(|cfg| -> Result<i32> {
        match &cli.command {
            Command::Simulate => {
                let s = cmd_simulate(&cfg)?;
                println!(
                    "simulate {}: t = {}, sphere drift {:e}, u-constraint residual {:e}",
                    cfg.scenario, s.final_time, s.max_sphere_drift, s.max_u_constraint_residual
                );
                Ok(EXIT_OK)
            }
            Command::Surface => {
                let s = cmd_surface(&cfg)?;
                println!(
                    "surface {}: {} vertices, {} faces, {} degenerate points{}",
                    cfg.scenario,
                    s.vertices,
                    s.faces,
                    s.degenerate_points,
                    s.mean_gaussian_error
                        .map(|e| format!(", mean |K - K_ref| = {e:e}"))
                        .unwrap_or_default()
                );
                Ok(EXIT_OK)
            }
            Command::Check { which } => Ok(report_check(&cmd_check(&cfg, *which)?)),
            Command::Convergence { which, levels } => Ok(report_check(&cmd_convergence(&cfg, *which, *levels)?)),
        }
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn report_check(r: &CheckReport) -> i32 {
    for l in &r.levels {
        println!(
            "{} nx = {:4} nt = {:4}: max residual {:.3e}{}",
            r.which.name(),
            l.nx,
            l.nt,
            l.max_norm,
            l.analytic_max_norm
                .map(|a| format!(" (analytic {a:.3e})"))
                .unwrap_or_default()
        );
    }
    match r.fitted_order {
        Some(o) => println!("observed order {o:.3} (pairwise {:?})", r.pairwise_orders),
        None => println!("residual at round-off on every level"),
    }
    if r.passed {
        println!("PASS");
        EXIT_OK
    } else {
        for f in &r.failures {
            println!("FAIL: {f}");
        }
        EXIT_RESIDUAL
    }
}

/// Parses `args` and runs, mapping clap usage errors to exit code 2.
pub fn main_with_args<I, T>(args: I, env_out: Option<PathBuf>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, env_out),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
