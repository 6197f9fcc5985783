//! The 2x2 zero-curvature representation of the frame system.
//!
//! ```text
//! U = 1/(2i) [[τ, k], [k, -τ]]                   = 1/(2i) (k σ1 + τ σ3)
//! V = 1/(2i) [[ω1, ω3 + iω2], [ω3 - iω2, -ω1]]   = 1/(2i) (ω3 σ1 - ω2 σ2 + ω1 σ3)
//! ```
//!
//! Expanding with `ω1 = 0`,
//!
//! ```text
//! U_t - V_x - [U, V] = 1/(2i) (r1 σ1 + r3 σ2 + r2 σ3)
//! ```
//!
//! where `(r1, r2, r3)` is the compatibility residual of the frame system, so
//! `‖R‖_F = |r| / √2`. The other orientation `U_t - V_x + [U, V]` leaves
//! `τ k ω2`-type terms behind and does not vanish on solutions. `R = 0` is the
//! compatibility condition of the right action `φ_x = φ U`, `φ_t = φ V`,
//! which is how eigenfunctions are transported here.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::CtFields;
use crate::numgrid::{diff_axis, step_rk4, Axis, Field2D, Grid2D};

pub type Mat2 = Matrix2<Complex64>;

const HALF_OVER_I: Complex64 = Complex64::new(0.0, -0.5);

pub fn pauli() -> [Mat2; 3] {
    let (o, l, i) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::i());
    [Mat2::new(o, l, l, o), Mat2::new(o, -i, i, o), Mat2::new(l, o, o, -l)]
}

/// `U` at one point.
pub fn u_matrix(k: f64, tau: f64) -> Mat2 {
    let c = |v: f64| Complex64::new(v, 0.0);
    Mat2::new(c(tau), c(k), c(k), c(-tau)) * HALF_OVER_I
}

/// `V` at one point.
pub fn v_matrix(omega1: f64, omega2: f64, omega3: f64) -> Mat2 {
    Mat2::new(
        Complex64::new(omega1, 0.0),
        Complex64::new(omega3, omega2),
        Complex64::new(omega3, -omega2),
        Complex64::new(-omega1, 0.0),
    ) * HALF_OVER_I
}

/// Real coefficients `(a1, a2, a3)` of `M = 1/(2i) Σ aj σj`, assuming that form.
pub fn sigma_components(m: &Mat2) -> [f64; 3] {
    let two_i = Complex64::new(0.0, 2.0);
    let s = pauli();
    [0, 1, 2].map(|j| ((m * s[j]).trace() * two_i * 0.5).re)
}

fn commutator(a: &Mat2, b: &Mat2) -> Mat2 {
    a * b - b * a
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaxPairField {
    pub grid: Grid2D,
    pub u: Vec<Mat2>,
    pub v: Vec<Mat2>,
}

impl LaxPairField {
    /// Arbitrary `U`, `V` fields, for instance a spectral-parameter family
    /// evaluated at one `λ`.
    pub fn from_parts(grid: Grid2D, u: Vec<Mat2>, v: Vec<Mat2>) -> Result<Self> {
        grid.check_len(u.len())?;
        grid.check_len(v.len())?;
        for (what, f) in [("U", &u), ("V", &v)] {
            if let Some(index) = f.iter().position(|m| m.iter().any(|c| !c.is_finite())) {
                return Err(Error::NonFinite { what, index });
            }
        }
        Ok(LaxPairField { grid, u, v })
    }
}

/// `U` and `V` from curvature-torsion data, with `ω1 = 0`.
pub fn build_lax(ct: &CtFields) -> LaxPairField {
    LaxPairField {
        grid: ct.grid,
        u: ct.k.iter().zip(&ct.tau).map(|(k, t)| u_matrix(*k, *t)).collect(),
        v: ct
            .omega2
            .iter()
            .zip(&ct.omega3)
            .map(|(w2, w3)| v_matrix(0.0, *w2, *w3))
            .collect(),
    }
}

/// `R = U_t - V_x - [U, V]` at every grid point.
pub fn zero_curvature_matrix(l: &LaxPairField) -> Result<Field2D<Mat2>> {
    let g = &l.grid;
    let u_t = diff_axis(&l.u, g, Axis::T)?;
    let v_x = diff_axis(&l.v, g, Axis::X)?;
    let values = (0..g.len())
        .map(|i| u_t[i] - v_x[i] - commutator(&l.u[i], &l.v[i]))
        .collect();
    Field2D::new(*g, values)
}

/// Pointwise Frobenius norm of [`zero_curvature_matrix`].
pub fn zero_curvature_residual(l: &LaxPairField) -> Result<Field2D<f64>> {
    let r = zero_curvature_matrix(l)?;
    Ok(Field2D {
        grid: r.grid,
        values: r.values.iter().map(|m| m.norm()).collect(),
    })
}

/// One grid step of an eigenfunction path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Move {
    XPlus,
    XMinus,
    TPlus,
    TMinus,
}

impl Move {
    fn apply(self, (ix, it): (usize, usize), g: &Grid2D) -> Option<(usize, usize)> {
        let (nx, nt) = (g.gx.n, g.gt.n);
        match self {
            Move::XPlus if ix + 1 < nx => Some((ix + 1, it)),
            Move::XMinus if ix > 0 => Some((ix - 1, it)),
            Move::TPlus if it + 1 < nt => Some((ix, it + 1)),
            Move::TMinus if it > 0 => Some((ix, it - 1)),
            _ => None,
        }
    }

    /// Counter-clockwise loop around the cell with lower-left node at the start.
    pub const CELL: [Move; 4] = [Move::XPlus, Move::TPlus, Move::XMinus, Move::TMinus];
}

/// `φ` at each node visited by a path, starting node included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenfunction {
    pub nodes: Vec<(usize, usize)>,
    pub values: Vec<Mat2>,
}

impl Eigenfunction {
    pub fn end(&self) -> &Mat2 {
        self.values.last().expect("path always holds its start")
    }
}

/// RK4 transport of `φ` along grid moves under `φ_x = φ U`, `φ_t = φ V`.
///
/// Coefficients between nodes are the mean of the two end values, which is
/// second-order accurate at the stage midpoint.
pub fn propagate_phi(l: &LaxPairField, phi0: &Mat2, start: (usize, usize), path: &[Move]) -> Result<Eigenfunction> {
    let g = &l.grid;
    if start.0 >= g.gx.n || start.1 >= g.gt.n {
        return Err(Error::PathOutOfGrid { step: 0 });
    }
    if !(phi0.determinant().norm() > 0.0) || phi0.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument(
            "initial eigenfunction must be invertible".into(),
        ));
    }
    let mut out = Eigenfunction {
        nodes: vec![start],
        values: vec![*phi0],
    };
    let mut node = start;
    for (step, mv) in path.iter().enumerate() {
        let next = mv.apply(node, g).ok_or(Error::PathOutOfGrid { step: step + 1 })?;
        let (field, h) = match mv {
            Move::XPlus | Move::XMinus => (&l.u, g.gx.dx),
            Move::TPlus | Move::TMinus => (&l.v, g.gt.dx),
        };
        let h = if matches!(mv, Move::XMinus | Move::TMinus) {
            -h
        } else {
            h
        };
        let c0 = field[g.index(node.0, node.1)];
        let c1 = field[g.index(next.0, next.1)];
        let c_mid = (c0 + c1) * Complex64::new(0.5, 0.0);
        let phi = out.values.last().expect("non-empty");
        let value = step_rk4(phi, h, |off, p: &Mat2| {
            let c = if off == 0.0 {
                c0
            } else if off == h {
                c1
            } else {
                c_mid
            };
            Ok(p * c)
        })
        .map_err(|e| Error::at_step(step + 1, e))?;
        out.nodes.push(next);
        out.values.push(value);
        node = next;
    }
    Ok(out)
}

/// Transport of the identity once around the cell at `(ix, it)`.
pub fn cell_holonomy(l: &LaxPairField, ix: usize, it: usize) -> Result<Mat2> {
    Ok(*propagate_phi(l, &Mat2::identity(), (ix, it), &Move::CELL)?.end())
}

/// `‖H - I‖_F` for the cell at `(ix, it)`.
pub fn holonomy_defect(l: &LaxPairField, ix: usize, it: usize) -> Result<f64> {
    Ok((cell_holonomy(l, ix, it)? - Mat2::identity()).norm())
}
