//! Finite-difference stencils and assembly of the explicit time-marching
//! operator `A = I + dt M` in compressed-sparse-row form.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::{AddAssign, Mul};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Axis, Boundary, Grid2D, VelocityField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StencilFamily {
    Central,
    /// Points taken on the side the flow comes from.
    OneSidedUpwind,
    /// Points taken on the side the flow goes to (classically unstable).
    OneSidedDownwind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stencil {
    pub family: StencilFamily,
    pub order: usize,
}

impl Stencil {
    pub const CENTRAL2: Stencil = Stencil {
        family: StencilFamily::Central,
        order: 2,
    };
    pub const CENTRAL4: Stencil = Stencil {
        family: StencilFamily::Central,
        order: 4,
    };
    pub const UPWIND2: Stencil = Stencil {
        family: StencilFamily::OneSidedUpwind,
        order: 2,
    };
    pub const DOWNWIND2: Stencil = Stencil {
        family: StencilFamily::OneSidedDownwind,
        order: 2,
    };

    pub fn validate(&self) -> Result<()> {
        match (self.family, self.order) {
            (StencilFamily::Central, 2 | 4) => Ok(()),
            (StencilFamily::OneSidedUpwind | StencilFamily::OneSidedDownwind, 2) => Ok(()),
            (f, k) => Err(Error::UnsupportedStencil(format!("{f:?} of order {k}"))),
        }
    }
}

/// Stencil choice for a whole operator, optionally different along `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StencilSpec {
    pub x: Stencil,
    pub y: Stencil,
}

impl StencilSpec {
    pub fn uniform(stencil: Stencil) -> Self {
        Self {
            x: stencil,
            y: stencil,
        }
    }

    pub fn for_axis(&self, axis: Axis) -> Stencil {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
        }
    }
}

/// Points on the negative side: `(0, 3/2), (-1, -2), (-2, 1/2)`.
const BACKWARD2: [(isize, f64); 3] = [(0, 1.5), (-1, -2.0), (-2, 0.5)];
const FORWARD2: [(isize, f64); 3] = [(0, -1.5), (1, 2.0), (2, -0.5)];
const CENTRAL2: [(isize, f64); 2] = [(-1, -0.5), (1, 0.5)];
const CENTRAL4: [(isize, f64); 4] = [
    (-2, 1.0 / 12.0),
    (-1, -8.0 / 12.0),
    (1, 8.0 / 12.0),
    (2, -1.0 / 12.0),
];

/// First-derivative coefficients for unit spacing.
///
/// `direction_sign` is the sign of the local velocity; it selects the side of
/// a one-sided stencil and is ignored by central stencils. A zero sign on a
/// one-sided stencil falls back to second-order central.
pub fn derivative_coeffs(stencil: Stencil, direction_sign: i8) -> Result<Vec<(isize, f64)>> {
    stencil.validate()?;
    if !(-1..=1).contains(&direction_sign) {
        return Err(Error::OutOfRange(format!(
            "direction sign {direction_sign}"
        )));
    }
    let coeffs: &[(isize, f64)] = match (stencil.family, stencil.order, direction_sign) {
        (StencilFamily::Central, 2, _) => &CENTRAL2,
        (StencilFamily::Central, _, _) => &CENTRAL4,
        (_, _, 0) => &CENTRAL2,
        (StencilFamily::OneSidedUpwind, _, 1) | (StencilFamily::OneSidedDownwind, _, -1) => {
            &BACKWARD2
        }
        _ => &FORWARD2,
    };
    Ok(coeffs.to_vec())
}

/// Real square matrix in compressed-sparse-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from rows of `(column, value)`; duplicate columns are summed.
    pub fn from_rows(rows: Vec<BTreeMap<usize, f64>>) -> Result<Self> {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                if c >= n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: c + 1,
                    });
                }
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let rows = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .filter(|&j| m[(i, j)] != 0.0)
                    .map(|j| (j, m[(i, j)]))
                    .collect()
            })
            .collect();
        Self::from_rows(rows)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    /// Sparsity `s`: the largest number of stored entries in a row.
    pub fn max_row_nnz(&self) -> usize {
        self.row_ptr
            .windows(2)
            .map(|w| w[1] - w[0])
            .max()
            .unwrap_or(0)
    }

    /// Same pattern, values replaced through `f(row, col, value)`.
    pub fn map_values(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.values[k] = f(i, self.col_idx[k], self.values[k]);
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..self.n {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // rows visited in order, so transposed columns come out sorted
        for i in 0..self.n {
            for (c, v) in self.row(i) {
                let k = next[c];
                col_idx[k] = i;
                values[k] = v;
                next[c] += 1;
            }
        }
        Self {
            n: self.n,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Extends to `dim` with identity rows so padded amplitudes stay inert.
    pub fn padded(&self, dim: usize) -> Self {
        if dim <= self.n {
            return self.clone();
        }
        let mut out = self.clone();
        for i in self.n..dim {
            out.col_idx.push(i);
            out.values.push(1.0);
            out.row_ptr.push(out.col_idx.len());
        }
        out.n = dim;
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (c, v) in self.row(i) {
                m[(i, c)] = v;
            }
        }
        m
    }

    /// `y = A x` for any scalar type that real entries can scale.
    pub fn apply<T>(&self, x: &[T], y: &mut [T])
    where
        T: Copy + Default + AddAssign + Mul<f64, Output = T>,
    {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let mut acc = T::default();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += x[self.col_idx[k]] * self.values[k];
            }
            *yi = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        let mut y = vec![0.0; self.n];
        self.apply(x, &mut y);
        Ok(y)
    }

    pub fn matvec_complex(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        let mut y = vec![Complex64::default(); self.n];
        self.apply(x, &mut y);
        Ok(y)
    }

    /// MatrixMarket coordinate dump (1-based indices).
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
        writeln!(s, "{} {} {}", self.n, self.n, self.nnz()).unwrap();
        for i in 0..self.n {
            for (c, v) in self.row(i) {
                writeln!(s, "{} {} {:e}", i + 1, c + 1, v).unwrap();
            }
        }
        s
    }
}

/// CFL number `max|u| dt / min(dx, dy)`.
pub fn cfl_number(velocity: &VelocityField, dt: f64) -> f64 {
    velocity.max_component() * dt / velocity.grid.min_spacing()
}

/// Time step giving a target CFL number (`max|u|` must be non-zero).
pub fn dt_for_cfl(velocity: &VelocityField, r_max: f64) -> f64 {
    r_max * velocity.grid.min_spacing() / velocity.max_component()
}

/// Resolves a stencil at position `pos` along an axis of `n` nodes.
///
/// Stencils that would reach across a wall become the second-order
/// one-sided stencil pointing into the domain.
fn axis_coeffs(
    stencil: Stencil,
    sign: i8,
    pos: usize,
    n: usize,
    bc: Boundary,
) -> Result<Vec<(isize, f64)>> {
    let coeffs = derivative_coeffs(stencil, sign)?;
    if bc == Boundary::Periodic {
        return Ok(coeffs);
    }
    let reach_lo = coeffs.iter().map(|c| c.0).min().unwrap_or(0);
    let reach_hi = coeffs.iter().map(|c| c.0).max().unwrap_or(0);
    if (pos as isize) + reach_lo < 0 {
        Ok(FORWARD2.to_vec())
    } else if pos as isize + reach_hi > n as isize - 1 {
        Ok(BACKWARD2.to_vec())
    } else {
        Ok(coeffs)
    }
}

fn wrap(pos: usize, offset: isize, n: usize) -> usize {
    (pos as isize + offset).rem_euclid(n as isize) as usize
}

/// Assembles `A = I - dt * sum_axes u_axis D_axis` with identity rows on
/// Dirichlet wall nodes.
pub fn assemble_advection(
    grid: &Grid2D,
    velocity: &VelocityField,
    spec: &StencilSpec,
    dt: f64,
) -> Result<SparseOperator> {
    if velocity.grid.nx != grid.nx || velocity.grid.ny != grid.ny {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: velocity.grid.len(),
        });
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::OutOfRange(format!("time step {dt}")));
    }
    spec.x.validate()?;
    spec.y.validate()?;
    let r = cfl_number(velocity, dt);
    if r > 1.0 + 1e-12 {
        return Err(Error::CflViolation { r });
    }
    if r > 0.5 {
        log::warn!("CFL number {r:.3} is above 0.5");
    }

    let mut rows = Vec::with_capacity(grid.len());
    for m in 0..grid.len() {
        let mut row = BTreeMap::new();
        row.insert(m, 1.0);
        if grid.is_wall_node(m) {
            rows.push(row);
            continue;
        }
        let (i, j) = grid.coords(m);
        for axis in grid.active_axes() {
            let u = velocity.component(axis)[m];
            if u == 0.0 {
                continue;
            }
            let n = grid.nodes(axis);
            let pos = if axis == Axis::X { i } else { j };
            let sign = if u > 0.0 { 1 } else { -1 };
            let coeffs = axis_coeffs(spec.for_axis(axis), sign, pos, n, grid.boundary(axis))?;
            let scale = -dt * u / grid.spacing(axis);
            for (off, c) in coeffs {
                let p = wrap(pos, off, n);
                let col = if axis == Axis::X {
                    grid.index(p, j)
                } else {
                    grid.index(i, p)
                };
                *row.entry(col).or_insert(0.0) += scale * c;
            }
        }
        row.retain(|&c, v| c == m || *v != 0.0);
        rows.push(row);
    }
    SparseOperator::from_rows(rows)
}

/// Periodic tridiagonal `[r_h, 1 - 2 r_h, r_h]` explicit heat operator.
pub fn assemble_heat_1d(n: usize, r_h: f64) -> Result<SparseOperator> {
    if n < 4 {
        return Err(Error::InvalidGrid(format!("n = {n}, need at least 4")));
    }
    if !(r_h > 0.0 && r_h <= 0.5) {
        return Err(Error::OutOfRange(format!("r_h = {r_h} outside (0, 0.5]")));
    }
    let rows = (0..n)
        .map(|m| {
            let mut row = BTreeMap::new();
            row.insert(m, 1.0 - 2.0 * r_h);
            row.insert((m + n - 1) % n, r_h);
            row.insert((m + 1) % n, r_h);
            row
        })
        .collect();
    SparseOperator::from_rows(rows)
}
