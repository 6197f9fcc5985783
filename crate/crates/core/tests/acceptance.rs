//! Acceptance criteria, one line each. Runs with its own `main` so every
//! criterion reports even when an earlier one fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;

use nalgebra::{Matrix3, Vector3};
use solsurf::convergence::{loglog_slope, max_abs, ConvergenceStudy};
use solsurf::frame::{
    compatibility_residual, frame_field, m0_residual, transport_frame_x, FrameSeries, TransportOptions,
};
use solsurf::gc::{
    curvatures, fixtures, forms_from_psi, gc_residual, gc_residual_with, map_frame_to_gc, map_gc_to_frame,
    metric_residual, metric_residual_with, relative_max_deviation, MapOptions,
};
use solsurf::lax::{build_lax, holonomy_defect, zero_curvature_residual};
use solsurf::spin::{evolve, evolve_trajectory, spin_rhs, tangent_derivative, SpinField, SpinOptions};
use solsurf::surface::{mesh_forms, patches};
use solsurf::{Beta, Boundary, Grid1D, Grid2D};

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn periodic(n: usize) -> Grid1D {
    Grid1D::spanning(0.0, 2.0 * PI, n, Boundary::Periodic).unwrap()
}

fn sphere_grid(n: usize) -> Grid2D {
    Grid2D::new(
        periodic(n),
        Grid1D::spanning(0.3, PI - 0.3, n, Boundary::OneSided).unwrap(),
    )
    .unwrap()
}

const SPHERE_LEVELS: [usize; 4] = [17, 33, 65, 129];

fn sphere_study(mut f: impl FnMut(&fixtures::GcFixture) -> f64) -> ConvergenceStudy {
    let (mut h, mut e) = (Vec::new(), Vec::new());
    for n in SPHERE_LEVELS {
        let fx = fixtures::sphere(1.0, sphere_grid(n));
        h.push(fx.data.grid.gx.dx);
        e.push(f(&fx));
    }
    ConvergenceStudy::new(h, e)
}

fn describe(s: &ConvergenceStudy) -> String {
    match s.min_order() {
        Some(o) => format!("errors {:.2e} .. {:.2e}, min order {o:.2}", s.errors[0], s.finest()),
        None => format!(
            "at round-off (max {:.1e})",
            s.errors.iter().copied().fold(0.0, f64::max)
        ),
    }
}

/// Evolves to `t_final` with `dt ≤ dx/4` chosen so the step count is an integer.
fn steps_for(dx: f64, t_final: f64) -> (f64, usize) {
    let steps = (t_final / (dx / 4.0) - 1e-9).ceil() as usize;
    (t_final / steps as f64, steps)
}

fn criterion_1() -> Outcome {
    let opts = SpinOptions::default();
    let err = |n: usize| {
        let f = SpinField::traveling_circle(periodic(n), 1.0).unwrap();
        let (dt, steps) = steps_for(f.grid.dx, 1.0);
        let end = evolve(&f, dt, steps, true, &opts).unwrap();
        (0..n)
            .map(|i| {
                let a = f.grid.coord(i) - end.t;
                (end.s[i] - Vector3::new(a.cos(), a.sin(), 0.0)).norm()
            })
            .fold(0.0, f64::max)
    };
    let (coarse, fine) = (err(129), err(257));
    let ratio = coarse / fine;
    (
        coarse <= 5e-4 && (3.2..=4.8).contains(&ratio),
        format!("traveling circle L∞ error {coarse:.3e} (≤ 5e-4), refinement ratio {ratio:.3} (in [3.2, 4.8])"),
    )
}

fn criterion_2() -> Outcome {
    let mut analytic = 0.0f64;
    let gc = sphere_study(|fx| {
        analytic = analytic
            .max(gc_residual_with(&fx.data, &fx.derivs).unwrap().max_norm())
            .max(metric_residual_with(&fx.data, &fx.derivs).unwrap().max_norm());
        gc_residual(&fx.data).unwrap().max_norm()
    });
    let metric = sphere_study(|fx| metric_residual(&fx.data).unwrap().max_norm());
    (
        analytic <= 1e-10 && gc.converges_at(1.7) && metric.converges_at(1.7),
        format!(
            "sphere GC analytic max {analytic:.1e} (≤ 1e-10); numerical gc {}; metric {}",
            describe(&gc),
            describe(&metric)
        ),
    )
}

fn criterion_3() -> Outcome {
    let compat = sphere_study(|fx| {
        compatibility_residual(&map_gc_to_frame(&fx.data).unwrap())
            .unwrap()
            .max_norm()
    });
    let fx = fixtures::sphere(1.0, sphere_grid(129));
    let ct = map_gc_to_frame(&fx.data).unwrap();
    // the two metric relations are checked by finite differences, so the
    // tolerance is a discretization bound, not a round-trip bound
    let back = map_frame_to_gc(&ct, &fx.data.tpsi1, &fx.data.tpsi2, &MapOptions { tolerance: 1e-3 }).unwrap();
    let d = &fx.data;
    let trip = [
        relative_max_deviation(&back.psi1, &d.psi1),
        relative_max_deviation(&back.psi2, &d.psi2),
        relative_max_deviation(&back.p, &d.p),
        relative_max_deviation(&back.q, &d.q),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    (
        compat.converges_at(1.7) && trip <= 1e-12,
        format!(
            "compatibility of mapped sphere {}; round-trip relative error {trip:.1e} (≤ 1e-12)",
            describe(&compat)
        ),
    )
}

fn criterion_4() -> Outcome {
    let zc = sphere_study(|fx| {
        let l = build_lax(&map_gc_to_frame(&fx.data).unwrap());
        max_abs(&zero_curvature_residual(&l).unwrap().values)
    });
    // the same physical cell, with three refinements
    let (mut area, mut defect) = (Vec::new(), Vec::new());
    for n in [33, 65, 129, 257] {
        let g = sphere_grid(n);
        let l = build_lax(&map_gc_to_frame(&fixtures::sphere(1.0, g).data).unwrap());
        area.push(g.gx.dx * g.gt.dx);
        defect.push(holonomy_defect(&l, (n - 1) / 8, (n - 1) / 4).unwrap());
    }
    let slope = loglog_slope(&area, &defect);
    (
        zc.converges_at(1.7) && (0.8..=1.2).contains(&slope),
        format!(
            "zero-curvature residual {}; cell holonomy defects {:.2e} .. {:.2e}, area slope {slope:.3} (target 1.0 ± 0.2)",
            describe(&zc),
            defect[0],
            defect[defect.len() - 1]
        ),
    )
}

fn criterion_5() -> Outcome {
    let raw = TransportOptions {
        reorthonormalize: Some(false),
        drift_limit: 1e-4,
    };
    let line = |h: f64, n: usize, opts: &TransportOptions| {
        let g = Grid1D::new(0.0, h, n, Boundary::OneSided).unwrap();
        transport_frame_x(&Matrix3::identity(), &vec![1.0; n], &vec![0.5; n], &g, Beta::Plus, opts).unwrap()
    };
    let long = line(1e-2, 1001, &raw);
    // coarse probe steps drift more than the blow-up guard allows
    let probe = TransportOptions {
        drift_limit: 1.0,
        ..raw
    };
    let drift = long
        .drift
        .iter()
        .copied()
        .fold(0.0, f64::max)
        .max(long.state.gram_deviation());
    let hs = [0.4, 0.2, 0.1];
    let per_step: Vec<f64> = hs.iter().map(|&h| line(h, 3, &probe).drift[0]).collect();
    let order = ConvergenceStudy::new(hs.to_vec(), per_step.clone()).min_order();
    (
        drift <= 1e-6 && order.is_none_or(|o| o >= 3.7),
        format!(
            "Gram deviation over length 10 at dx = 1e-2: {drift:.1e} (≤ 1e-6); per-step drift {:.1e} .. {:.1e}, order {} (≥ 3.7)",
            per_step[0],
            per_step[2],
            order.map_or("round-off".into(), |o| format!("{o:.2}"))
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut worst = 0.0f64;
    for r in [0.5, 1.0, 2.0] {
        let fx = fixtures::sphere(r, sphere_grid(33));
        let k = curvatures(&forms_from_psi(&fx.data).unwrap().fundamental_forms()).unwrap();
        let k0 = 1.0 / (r * r);
        worst = worst.max(k.gaussian.iter().map(|g| (g - k0).abs() / k0).fold(0.0, f64::max));
    }
    let mesh = patches::unit_sphere(PI / 256.0).unwrap();
    let mean = mesh_forms(&mesh)
        .unwrap()
        .mean_gaussian_error(1.0)
        .unwrap_or(f64::INFINITY);
    (
        worst <= 1e-12 && mean <= 0.01,
        format!("analytic |K - 1/R²|/K max {worst:.1e} (≤ 1e-12); unit-sphere mesh mean |K - 1| {mean:.2e} (≤ 1e-2)"),
    )
}

/// Coarse random curves are pre-asymptotic, so their levels start finer.
const CIRCLE_LEVELS: [usize; 3] = [33, 65, 129];
const RANDOM_LEVELS: [usize; 3] = [129, 257, 513];

fn spin_levels(make: &dyn Fn(usize) -> SpinField, levels: [usize; 3], t_final: f64) -> Vec<Vec<SpinField>> {
    levels
        .into_iter()
        .map(|n| {
            let f = make(n);
            let (dt, steps) = steps_for(f.grid.dx, t_final);
            evolve_trajectory(&f, dt, steps, true, 1, &SpinOptions::default()).unwrap()
        })
        .collect()
}

fn circle(n: usize) -> SpinField {
    SpinField::traveling_circle(periodic(n), 1.0).unwrap()
}

/// One-sided: `u` does not close up around a random curve.
fn random(n: usize) -> SpinField {
    let g = Grid1D::spanning(0.0, 2.0 * PI, n, Boundary::OneSided).unwrap();
    SpinField::random_smooth(g, 11, 0.3, &SpinOptions::default()).unwrap()
}

fn criterion_7() -> Outcome {
    let opts = SpinOptions::default();
    let trajectory_study = |levels: &[Vec<SpinField>]| {
        ConvergenceStudy::new(
            levels.iter().map(|t| t[0].grid.dx).collect(),
            levels
                .iter()
                .map(|t| {
                    max_abs(
                        &m0_residual(&FrameSeries::from_spin_trajectory(t, &opts).unwrap())
                            .unwrap()
                            .values,
                    )
                })
                .collect(),
        )
    };
    let circle_study = trajectory_study(&spin_levels(&circle, CIRCLE_LEVELS, 0.5));
    let random_study = trajectory_study(&spin_levels(&random, RANDOM_LEVELS, 0.5));
    let sphere = sphere_study(|fx| {
        let ct = map_gc_to_frame(&fx.data).unwrap();
        let series = frame_field(&Matrix3::identity(), &ct, Beta::Plus, &TransportOptions::default()).unwrap();
        max_abs(&m0_residual(&series).unwrap().values)
    });
    (
        circle_study.converges_at(1.7) && sphere.converges_at(1.7) && random_study.converges_at(1.7),
        format!(
            "M-0 residual: traveling circle {}; random smooth {}; sphere frames {}",
            describe(&circle_study),
            describe(&random_study),
            describe(&sphere)
        ),
    )
}

#[allow(clippy::needless_range_loop)]
/// Largest `| |S_t|² - k² |` and `|v_t - k u|` with time rates taken from the
/// saved trajectory by central differences.
fn trajectory_identities(traj: &[SpinField]) -> (f64, f64) {
    let opts = SpinOptions::default();
    let dt = traj[1].t - traj[0].t;
    let (mut shell, mut dv) = (0.0f64, 0.0f64);
    for j in 1..traj.len() - 1 {
        let f = &traj[j];
        let (_, k) = tangent_derivative(&f.s, &f.grid, &opts).unwrap();
        for i in 0..f.grid.n {
            let st = (traj[j + 1].s[i] - traj[j - 1].s[i]) / (2.0 * dt);
            let vt = (traj[j + 1].v[i] - traj[j - 1].v[i]) / (2.0 * dt);
            shell = shell.max((st.norm_squared() - k[i] * k[i]).abs());
            dv = dv.max((vt - k[i] * f.u[i]).abs());
        }
    }
    (shell, dv)
}

fn criterion_8() -> Outcome {
    let opts = SpinOptions::default();
    let mut ok = true;
    let mut parts = Vec::new();
    let (mut rates_max, mut drift) = (0.0f64, 0.0f64);
    for (name, make, lv) in [
        ("circle", &circle as &dyn Fn(usize) -> SpinField, CIRCLE_LEVELS),
        ("random", &random, RANDOM_LEVELS),
    ] {
        let levels = spin_levels(make, lv, 0.5);
        for traj in &levels {
            for f in traj {
                drift = drift.max(f.sphere_drift());
                let r = spin_rhs(f, &opts).unwrap();
                for i in 0..f.grid.n {
                    rates_max = rates_max
                        .max((r.ds[i].norm_squared() - r.k[i] * r.k[i]).abs())
                        .max((r.dv[i] - r.k[i] * f.u[i]).abs());
                }
            }
        }
        let h: Vec<f64> = levels.iter().map(|t| t[0].grid.dx).collect();
        let ids: Vec<(f64, f64)> = levels.iter().map(|t| trajectory_identities(t)).collect();
        let shell = ConvergenceStudy::new(h.clone(), ids.iter().map(|p| p.0).collect());
        let dv = ConvergenceStudy::new(h, ids.iter().map(|p| p.1).collect());
        ok &= shell.converges_at(1.7) && dv.converges_at(1.7);
        parts.push(format!(
            "{name}: |S_t² - k²| {}, |v_t - k u| {}",
            describe(&shell),
            describe(&dv)
        ));
    }
    ok &= drift <= 1e-12;
    (
        ok,
        format!(
            "{}; from the rates {rates_max:.1e}; sphere drift {drift:.1e} (≤ 1e-12)",
            parts.join("; ")
        ),
    )
}

fn snapshot(dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            snapshot(&path, out);
        } else {
            out.insert(path.display().to_string(), std::fs::read(&path).unwrap());
        }
    }
}

fn criterion_9() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_solsurf");
    let scenarios: [&[&str]; 5] = [
        &["simulate", "--n", "65"],
        &[
            "simulate",
            "--preset",
            "random_smooth seed=5",
            "--n",
            "65",
            "--t-final",
            "0.5",
        ],
        &["check", "--which", "compat", "--preset", "sphere", "--n", "17"],
        &["surface", "--n", "33", "--t-final", "0.5"],
        &[
            "convergence",
            "--which",
            "lax",
            "--preset",
            "torus major=2 minor=0.5",
            "--n",
            "17",
        ],
    ];
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("out");
    let mut files = 0;
    for args in scenarios {
        let mut runs = Vec::new();
        for _ in 0..2 {
            let _ = std::fs::remove_dir_all(&out);
            let status = Command::new(bin).args(args).env("SOLSURF_OUT", &out).output().unwrap();
            if !status.status.success() {
                return (false, format!("{args:?} exited with {}", status.status));
            }
            let mut snap = BTreeMap::new();
            snapshot(&out, &mut snap);
            runs.push(snap);
        }
        if runs[0] != runs[1] {
            return (false, format!("{args:?} produced different files on re-run"));
        }
        files += runs[0].len();
    }
    (
        true,
        format!(
            "{} scenarios re-run, {files} output files byte-identical",
            scenarios.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("traveling-circle oracle", criterion_1),
        ("sphere Gauss-Codazzi suite", criterion_2),
        ("equivalence chain", criterion_3),
        ("Lax zero curvature", criterion_4),
        ("frame transport", criterion_5),
        ("curvature formulas", criterion_6),
        ("M-0 reduction", criterion_7),
        ("spin-side identities", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (ok, detail) = run();
        failed += usize::from(!ok);
        println!(
            "criterion {} {} {name}: {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
