//! JSON and CSV serialization of fields, residuals and eigenfunctions.
//!
//! JSON goes through `serde_json` with exact float round-tripping, so a field
//! written and read back is bit-identical. CSV files carry one row per grid
//! point with the coordinates first.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{CompatResidual, CtFields};
use crate::gc::GcData;
use crate::lax::{Eigenfunction, Mat2};
use crate::numgrid::{Field2D, Grid2D};
use crate::spin::SpinField;
use crate::surface::{MeshForms, SurfaceMesh};

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes `header` and then `rows` to `path`.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .flush()
        .map_err(|e| Error::io(path, e))
}

/// Shortest representation that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn grid_rows<'a>(grid: &'a Grid2D, columns: &'a [&'a [f64]]) -> impl Iterator<Item = Vec<String>> + 'a {
    (0..grid.len()).map(move |i| {
        let (x, t) = grid.point(i);
        let mut row = vec![num(x), num(t)];
        row.extend(columns.iter().map(|c| num(c[i])));
        row
    })
}

/// Scalar columns over a 2-D grid: `x, t, names...`.
pub fn write_grid_csv(path: &Path, grid: &Grid2D, names: &[&str], columns: &[&[f64]]) -> Result<()> {
    if names.len() != columns.len() {
        return Err(Error::InvalidArgument("column names and data differ in count".into()));
    }
    for c in columns {
        grid.check_len(c.len())?;
    }
    let mut header = vec!["x", "t"];
    header.extend_from_slice(names);
    write_csv(path, &header, grid_rows(grid, columns))
}

pub const SPIN_HEADER: [&str; 7] = ["t", "x", "sx", "sy", "sz", "u", "v"];

fn spin_rows(f: &SpinField) -> impl Iterator<Item = Vec<String>> + '_ {
    (0..f.grid.n).map(move |i| {
        let s = f.s[i];
        vec![
            num(f.t),
            num(f.grid.coord(i)),
            num(s.x),
            num(s.y),
            num(s.z),
            num(f.u[i]),
            num(f.v[i]),
        ]
    })
}

/// One row per grid point and time slice.
pub fn write_spin_csv(path: &Path, series: &[SpinField]) -> Result<()> {
    write_csv(path, &SPIN_HEADER, series.iter().flat_map(spin_rows))
}

pub fn write_ct_csv(path: &Path, ct: &CtFields) -> Result<()> {
    write_grid_csv(
        path,
        &ct.grid,
        &["k", "tau", "omega2", "omega3"],
        &[&ct.k, &ct.tau, &ct.omega2, &ct.omega3],
    )
}

pub fn write_gc_csv(path: &Path, d: &GcData) -> Result<()> {
    write_grid_csv(
        path,
        &d.grid,
        &["psi1", "psi2", "tpsi1", "tpsi2", "p", "q"],
        &[&d.psi1, &d.psi2, &d.tpsi1, &d.tpsi2, &d.p, &d.q],
    )
}

pub fn write_compat_csv(path: &Path, r: &CompatResidual) -> Result<()> {
    write_grid_csv(path, &r.grid, &["r1", "r2", "r3"], &[&r.r1, &r.r2, &r.r3])
}

pub fn write_scalar_csv(path: &Path, name: &str, f: &Field2D<f64>) -> Result<()> {
    write_grid_csv(path, &f.grid, &[name], &[&f.values])
}

/// Positions as `x, t, rx, ry, rz`.
pub fn write_positions_csv(path: &Path, m: &SurfaceMesh) -> Result<()> {
    let rows = (0..m.grid.len()).map(|i| {
        let (x, t) = m.grid.point(i);
        let r = m.r[i];
        vec![num(x), num(t), num(r.x), num(r.y), num(r.z)]
    });
    write_csv(path, &["x", "t", "rx", "ry", "rz"], rows)
}

/// Per-point `K`, `H`; both are empty on degenerate points.
pub fn write_curvature_csv(path: &Path, mf: &MeshForms) -> Result<()> {
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    let rows = (0..mf.grid.len()).map(|i| {
        let (x, t) = mf.grid.point(i);
        vec![
            num(x),
            num(t),
            mf.degenerate[i].to_string(),
            opt(mf.gaussian[i]),
            opt(mf.mean[i]),
        ]
    });
    write_csv(path, &["x", "t", "degenerate", "K", "H"], rows)
}

/// Real and imaginary parts of `φ` along a path, as `[[a, b], [c, d]]` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiSnapshot {
    pub nodes: Vec<(usize, usize)>,
    pub re: Vec<[[f64; 2]; 2]>,
    pub im: Vec<[[f64; 2]; 2]>,
}

impl From<&Eigenfunction> for PhiSnapshot {
    fn from(e: &Eigenfunction) -> Self {
        let part = |m: &Mat2, f: fn(&num_complex::Complex64) -> f64| {
            [[f(&m[(0, 0)]), f(&m[(0, 1)])], [f(&m[(1, 0)]), f(&m[(1, 1)])]]
        };
        PhiSnapshot {
            nodes: e.nodes.clone(),
            re: e.values.iter().map(|m| part(m, |c| c.re)).collect(),
            im: e.values.iter().map(|m| part(m, |c| c.im)).collect(),
        }
    }
}

impl PhiSnapshot {
    pub fn to_eigenfunction(&self) -> Eigenfunction {
        let values = self
            .re
            .iter()
            .zip(&self.im)
            .map(|(r, i)| {
                let c = |a: usize, b: usize| num_complex::Complex64::new(r[a][b], i[a][b]);
                Mat2::new(c(0, 0), c(0, 1), c(1, 0), c(1, 1))
            })
            .collect();
        Eigenfunction {
            nodes: self.nodes.clone(),
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gc::fixtures::sphere;
    use crate::lax::{build_lax, propagate_phi, Move};
    use crate::numgrid::{Boundary, Grid1D};
    use crate::spin::SpinOptions;
    use std::f64::consts::PI;

    fn grid() -> Grid2D {
        Grid2D::new(
            Grid1D::spanning(0.0, 2.0 * PI, 9, Boundary::Periodic).unwrap(),
            Grid1D::spanning(0.3, PI - 0.3, 7, Boundary::OneSided).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn json_round_trips_bit_exactly() {
        let f = SpinField::random_smooth(
            Grid1D::spanning(0.0, 2.0 * PI, 33, Boundary::Periodic).unwrap(),
            7,
            0.2,
            &SpinOptions::default(),
        )
        .unwrap();
        let back: SpinField = serde_json::from_str(&to_json(&f).unwrap()).unwrap();
        assert_eq!(back, f);

        let d = sphere(0.7, grid()).data;
        let back: GcData = serde_json::from_str(&to_json(&d).unwrap()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn grid_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gc.csv");
        let d = sphere(1.0, grid()).data;
        write_gc_csv(&path, &d).unwrap();
        let mut rdr = csv::Reader::from_path(&path).unwrap();
        let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
        assert_eq!(header, ["x", "t", "psi1", "psi2", "tpsi1", "tpsi2", "p", "q"]);
        let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), d.grid.len());
        // x-major: the second row advances t
        let t1: f64 = rows[1][1].parse().unwrap();
        assert_eq!(t1, d.grid.gt.coord(1));
        let q: f64 = rows[5][7].parse().unwrap();
        assert_eq!(q, d.q[5]);
    }

    #[test]
    fn mismatched_columns_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let g = grid();
        let short = vec![0.0; 3];
        assert!(write_grid_csv(&dir.path().join("a.csv"), &g, &["a"], &[&short]).is_err());
        assert!(write_grid_csv(&dir.path().join("b.csv"), &g, &["a", "b"], &[&short]).is_err());
    }

    #[test]
    fn phi_snapshot_round_trip() {
        let g = grid();
        let l = build_lax(&crate::gc::map_gc_to_frame(&sphere(1.0, g).data).unwrap());
        let e = propagate_phi(&l, &Mat2::identity(), (1, 1), &[Move::XPlus, Move::TPlus]).unwrap();
        let snap = PhiSnapshot::from(&e);
        let text = to_json(&snap).unwrap();
        let back: PhiSnapshot = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_eigenfunction(), e);
    }
}
