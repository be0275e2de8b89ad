//! Uniform Cartesian grids, nodal fields and the plain CSV field format.
//!
//! Nodes are flattened row-major with `x` fastest: `m = i + nx * j`.
//! A periodic axis holds `n` nodes on `[0, 1)` with spacing `1/n`; a wall
//! axis holds `n` nodes on `[0, 1]` with spacing `1/(n-1)`, so both walls
//! are grid rows.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest solution register the emulator will allocate (2^28 amplitudes).
pub const MAX_REGISTER_QUBITS: u32 = 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Periodic,
    DirichletWall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub bc_x: Boundary,
    pub bc_y: Boundary,
    pub dx: f64,
    pub dy: f64,
}

fn spacing(n: usize, bc: Boundary) -> f64 {
    match bc {
        Boundary::Periodic => 1.0 / n as f64,
        Boundary::DirichletWall => 1.0 / (n - 1) as f64,
    }
}

impl Grid2D {
    /// Builds a grid; `ny = 1` gives a one-dimensional grid along `x`.
    pub fn new(nx: usize, ny: usize, bc_x: Boundary, bc_y: Boundary) -> Result<Self> {
        if nx < 4 {
            return Err(Error::InvalidGrid(format!("nx = {nx}, need at least 4")));
        }
        if ny != 1 && ny < 4 {
            return Err(Error::InvalidGrid(format!(
                "ny = {ny}, need 1 or at least 4"
            )));
        }
        let n = nx
            .checked_mul(ny)
            .ok_or_else(|| Error::InvalidGrid("node count overflows".into()))?;
        if n.next_power_of_two() > 1usize << MAX_REGISTER_QUBITS {
            return Err(Error::InvalidGrid(format!(
                "{n} nodes do not fit a {MAX_REGISTER_QUBITS}-qubit register"
            )));
        }
        let dy = if ny == 1 { 1.0 } else { spacing(ny, bc_y) };
        Ok(Self {
            nx,
            ny,
            bc_x,
            bc_y,
            dx: spacing(nx, bc_x),
            dy,
        })
    }

    pub fn one_d(n: usize, bc: Boundary) -> Result<Self> {
        Self::new(n, 1, bc, Boundary::Periodic)
    }

    /// Total node count `N`.
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of axes with more than one node.
    pub fn dimension(&self) -> usize {
        if self.ny > 1 {
            2
        } else {
            1
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.nx * j
    }

    #[inline]
    pub fn coords(&self, m: usize) -> (usize, usize) {
        (m % self.nx, m / self.nx)
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    pub fn y(&self, j: usize) -> f64 {
        if self.ny == 1 {
            0.0
        } else {
            j as f64 * self.dy
        }
    }

    pub fn nodes(&self, axis: Axis) -> usize {
        match axis {
            Axis::X => self.nx,
            Axis::Y => self.ny,
        }
    }

    pub fn boundary(&self, axis: Axis) -> Boundary {
        match axis {
            Axis::X => self.bc_x,
            Axis::Y => self.bc_y,
        }
    }

    pub fn spacing(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.dx,
            Axis::Y => self.dy,
        }
    }

    /// Axes that carry a derivative (more than one node).
    pub fn active_axes(&self) -> Vec<Axis> {
        if self.ny > 1 {
            vec![Axis::X, Axis::Y]
        } else {
            vec![Axis::X]
        }
    }

    /// Smallest spacing over the active axes.
    pub fn min_spacing(&self) -> f64 {
        self.active_axes()
            .into_iter()
            .map(|a| self.spacing(a))
            .fold(f64::INFINITY, f64::min)
    }

    /// True if node `m` lies on a Dirichlet wall of any active axis.
    pub fn is_wall_node(&self, m: usize) -> bool {
        let (i, j) = self.coords(m);
        let on_wall = |pos: usize, n: usize, bc: Boundary| {
            n > 1 && bc == Boundary::DirichletWall && (pos == 0 || pos == n - 1)
        };
        on_wall(i, self.nx, self.bc_x) || on_wall(j, self.ny, self.bc_y)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: len,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutOfRange("field contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|m| {
                let (i, j) = grid.coords(m);
                f(grid.x(i), grid.y(j))
            })
            .collect();
        Self { grid, values }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub grid: Grid2D,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl VelocityField {
    pub fn new(grid: Grid2D, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        grid.check_len(u.len())?;
        grid.check_len(v.len())?;
        if u.iter().chain(v.iter()).any(|c| !c.is_finite()) {
            return Err(Error::OutOfRange(
                "velocity contains non-finite values".into(),
            ));
        }
        Ok(Self { grid, u, v })
    }

    pub fn uniform(grid: Grid2D, u: f64, v: f64) -> Self {
        Self {
            grid,
            u: vec![u; grid.len()],
            v: vec![v; grid.len()],
        }
    }

    pub fn component(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::X => &self.u,
            Axis::Y => &self.v,
        }
    }

    /// Largest single velocity component magnitude.
    pub fn max_component(&self) -> f64 {
        self.u
            .iter()
            .chain(self.v.iter())
            .fold(0.0_f64, |acc, c| acc.max(c.abs()))
    }

    pub fn max_speed(&self) -> f64 {
        self.u
            .iter()
            .zip(&self.v)
            .fold(0.0_f64, |acc, (u, v)| acc.max(u.hypot(*v)))
    }

    /// Rescales so that the largest component magnitude is 1.
    pub fn normalized(&self) -> Self {
        let s = self.max_component();
        if s == 0.0 {
            return self.clone();
        }
        Self {
            grid: self.grid,
            u: self.u.iter().map(|c| c / s).collect(),
            v: self.v.iter().map(|c| c / s).collect(),
        }
    }
}

/// Plane Poiseuille profile `u = u_max * 4y(1-y)`, `v = 0`.
pub fn poiseuille_velocity(grid: &Grid2D, u_max: f64) -> Result<VelocityField> {
    if grid.ny < 4 || grid.bc_y != Boundary::DirichletWall {
        return Err(Error::InvalidGrid(
            "Poiseuille flow needs a wall-bounded y axis".into(),
        ));
    }
    let mut u = vec![0.0; grid.len()];
    for j in 0..grid.ny {
        // exact mirror symmetry about the centreline
        let y = grid.y(j.min(grid.ny - 1 - j));
        let uj = u_max * 4.0 * y * (1.0 - y);
        for i in 0..grid.nx {
            u[grid.index(i, j)] = uj;
        }
    }
    Ok(VelocityField {
        grid: *grid,
        u,
        v: vec![0.0; grid.len()],
    })
}

/// `sin(2 pi s) + 1` along `axis`, constant along the other.
pub fn init_sine(grid: &Grid2D, axis: Axis) -> ScalarField {
    use std::f64::consts::TAU;
    ScalarField::from_fn(*grid, |x, y| match axis {
        Axis::X => (TAU * x).sin() + 1.0,
        Axis::Y => (TAU * y).sin() + 1.0,
    })
}

/// Amplitude-encoded solution register.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    pub amplitudes: Vec<Complex64>,
    /// 2-norm of the field the state was encoded from.
    pub source_norm: f64,
}

impl Statevector {
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: len.next_power_of_two(),
                found: len,
            });
        }
        let norm = l2_norm(&amplitudes);
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(Self {
            amplitudes,
            source_norm: norm,
        })
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn qubits(&self) -> u32 {
        self.amplitudes.len().trailing_zeros()
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.amplitudes)
    }

    /// Real parts of the first `grid.len()` amplitudes.
    pub fn to_field(&self, grid: &Grid2D) -> Result<ScalarField> {
        amplitudes_to_field(&self.amplitudes, grid)
    }
}

pub fn amplitudes_to_field(amplitudes: &[Complex64], grid: &Grid2D) -> Result<ScalarField> {
    if amplitudes.len() < grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: amplitudes.len(),
        });
    }
    Ok(ScalarField {
        grid: *grid,
        values: amplitudes[..grid.len()].iter().map(|a| a.re).collect(),
    })
}

pub fn l2_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Normalizes a field into a zero-padded power-of-two register.
pub fn to_statevector(field: &ScalarField) -> Result<Statevector> {
    let norm = field.norm();
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let len = field.values.len().next_power_of_two();
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); len];
    for (a, v) in amplitudes.iter_mut().zip(&field.values) {
        *a = Complex64::new(v / norm, 0.0);
    }
    Ok(Statevector {
        amplitudes,
        source_norm: norm,
    })
}

fn format_rows(values: &[f64], nx: usize, ny: usize) -> String {
    let mut out = String::with_capacity(values.len() * 20);
    for j in 0..ny {
        for i in 0..nx {
            if i > 0 {
                out.push(',');
            }
            // `Display` for f64 is the shortest representation that round-trips.
            write!(out, "{}", values[i + nx * j]).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn save_field_csv(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    fs::write(
        path,
        format_rows(&field.values, field.grid.nx, field.grid.ny),
    )?;
    Ok(())
}

pub fn save_velocity_csv(
    velocity: &VelocityField,
    path_u: impl AsRef<Path>,
    path_v: impl AsRef<Path>,
) -> Result<()> {
    let g = velocity.grid;
    fs::write(path_u, format_rows(&velocity.u, g.nx, g.ny))?;
    fs::write(path_v, format_rows(&velocity.v, g.nx, g.ny))?;
    Ok(())
}

fn read_matrix(path: &Path, grid: &Grid2D) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if rows.len() != grid.ny {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: rows.len(),
            msg: format!("expected {} rows, found {}", grid.ny, rows.len()),
        });
    }
    let mut values = Vec::with_capacity(grid.len());
    for (line, row) in rows.iter().enumerate() {
        let start = values.len();
        for cell in row.split(',') {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: line + 1,
                msg: format!("non-numeric cell {:?}", cell.trim()),
            })?;
            values.push(v);
        }
        if values.len() - start != grid.nx {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: line + 1,
                msg: format!(
                    "expected {} columns, found {}",
                    grid.nx,
                    values.len() - start
                ),
            });
        }
    }
    Ok(values)
}

pub fn load_field_csv(path: impl AsRef<Path>, grid: &Grid2D) -> Result<ScalarField> {
    let values = read_matrix(path.as_ref(), grid)?;
    ScalarField::new(*grid, values)
}

pub fn load_velocity_csv(
    path_u: impl AsRef<Path>,
    path_v: impl AsRef<Path>,
    grid: &Grid2D,
) -> Result<VelocityField> {
    let u = read_matrix(path_u.as_ref(), grid)?;
    let v = read_matrix(path_v.as_ref(), grid)?;
    VelocityField::new(*grid, u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spacing_rules() {
        let g = Grid2D::new(64, 64, Boundary::Periodic, Boundary::DirichletWall).unwrap();
        assert_eq!(g.dx, 1.0 / 64.0);
        assert_eq!(g.dy, 1.0 / 63.0);
        assert_eq!(g.len(), 4096);
        assert_eq!(g.dimension(), 2);

        let g = Grid2D::one_d(8, Boundary::Periodic).unwrap();
        assert_eq!(g.dx, 0.125);
        assert_eq!(g.dimension(), 1);

        let g = Grid2D::new(4, 4, Boundary::Periodic, Boundary::Periodic).unwrap();
        assert_eq!((g.len(), g.dx, g.dy), (16, 0.25, 0.25));
    }

    #[test]
    fn rejects_small_grids() {
        assert!(Grid2D::new(3, 1, Boundary::Periodic, Boundary::Periodic).is_err());
        assert!(Grid2D::new(8, 2, Boundary::Periodic, Boundary::DirichletWall).is_err());
        assert!(Grid2D::new(1 << 15, 1 << 14, Boundary::Periodic, Boundary::Periodic).is_err());
    }

    #[test]
    fn wall_nodes() {
        let g = Grid2D::new(4, 5, Boundary::Periodic, Boundary::DirichletWall).unwrap();
        assert!(g.is_wall_node(g.index(2, 0)));
        assert!(g.is_wall_node(g.index(0, 4)));
        assert!(!g.is_wall_node(g.index(0, 2)));
    }

    #[test]
    fn poiseuille_profile() {
        let g = Grid2D::new(4, 5, Boundary::Periodic, Boundary::DirichletWall).unwrap();
        let vel = poiseuille_velocity(&g, 1.0).unwrap();
        // y = 0, 0.25, 0.5
        assert_eq!(vel.u[g.index(1, 0)], 0.0);
        assert_eq!(vel.u[g.index(1, 1)], 0.75);
        assert_eq!(vel.u[g.index(1, 2)], 1.0);
        assert!(vel.v.iter().all(|&v| v == 0.0));

        let g = Grid2D::new(8, 64, Boundary::Periodic, Boundary::DirichletWall).unwrap();
        let vel = poiseuille_velocity(&g, 1.0).unwrap();
        for j in 0..64 {
            assert_eq!(vel.u[g.index(3, j)], vel.u[g.index(3, 63 - j)]);
        }

        let periodic = Grid2D::new(8, 8, Boundary::Periodic, Boundary::Periodic).unwrap();
        assert!(poiseuille_velocity(&periodic, 1.0).is_err());
    }

    #[test]
    fn sine_initial_conditions() {
        let g = Grid2D::new(8, 8, Boundary::Periodic, Boundary::Periodic).unwrap();
        let fx = init_sine(&g, Axis::X);
        assert_eq!(fx.get(0, 3), 1.0);
        assert!((fx.get(2, 5) - 2.0).abs() < 1e-15);
        let fy = init_sine(&g, Axis::Y);
        assert!(fy.get(4, 6).abs() < 1e-15);
        assert_eq!(fy.get(0, 2), fy.get(7, 2));
    }

    #[test]
    fn statevector_encoding() {
        let g = Grid2D::one_d(4, Boundary::Periodic).unwrap();
        let sv = to_statevector(&ScalarField::new(g, vec![1.0; 4]).unwrap()).unwrap();
        assert_eq!(sv.source_norm, 2.0);
        assert!(sv.amplitudes.iter().all(|a| *a == Complex64::new(0.5, 0.0)));

        let g = Grid2D::new(64, 64, Boundary::Periodic, Boundary::DirichletWall).unwrap();
        let sv = to_statevector(&init_sine(&g, Axis::X)).unwrap();
        assert_eq!((sv.len(), sv.qubits()), (4096, 12));

        // 5 nodes pad to 8
        let g = Grid2D::new(5, 1, Boundary::Periodic, Boundary::Periodic).unwrap();
        let sv =
            to_statevector(&ScalarField::new(g, vec![3.0, 4.0, 0.0, 0.0, 0.0]).unwrap()).unwrap();
        assert_eq!(sv.len(), 8);
        assert!((sv.amplitudes[0].re - 0.6).abs() < 1e-15);
        assert!((sv.amplitudes[1].re - 0.8).abs() < 1e-15);
        assert!(sv.amplitudes[5..]
            .iter()
            .all(|a| *a == Complex64::new(0.0, 0.0)));

        let sv =
            Statevector::from_amplitudes(vec![Complex64::new(3.0, 0.0), Complex64::new(4.0, 0.0)])
                .unwrap();
        assert!(
            (sv.amplitudes[0].re - 0.6).abs() < 1e-15 && (sv.amplitudes[1].re - 0.8).abs() < 1e-15
        );

        let zero = ScalarField::zeros(g);
        assert!(matches!(to_statevector(&zero), Err(Error::ZeroNorm)));
    }

    #[test]
    fn csv_format_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid2D::new(4, 4, Boundary::Periodic, Boundary::Periodic).unwrap();
        let path = dir.path().join("f.csv");
        let field = ScalarField::from_fn(g, |x, y| x + 10.0 * y);
        save_field_csv(&field, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "0,0.25,0.5,0.75");

        let small = dir.path().join("small.csv");
        fs::write(&small, "1,2\n3\n").unwrap();
        let g2 = Grid2D::new(4, 1, Boundary::Periodic, Boundary::Periodic).unwrap();
        assert!(load_field_csv(&small, &g2).is_err());

        let bad = dir.path().join("bad.csv");
        fs::write(&bad, "1,2,x,4\n").unwrap();
        assert!(matches!(
            load_field_csv(&bad, &g2),
            Err(Error::Parse { .. })
        ));

        // 63 rows against a 64 x 64 grid
        let g64 = Grid2D::new(64, 64, Boundary::Periodic, Boundary::DirichletWall).unwrap();
        let short = dir.path().join("short.csv");
        fs::write(&short, "0\n".repeat(63)).unwrap();
        assert!(load_velocity_csv(&short, &short, &g64).is_err());
    }

    #[test]
    fn two_by_two_format() {
        let text = format_rows(&[1.0, 2.0, 3.0, 4.0], 2, 2);
        assert_eq!(text, "1,2\n3,4\n");
    }

    proptest! {
        #[test]
        fn statevector_is_unit_norm(values in proptest::collection::vec(-1e3f64..1e3, 4..40)) {
            prop_assume!(values.iter().any(|v| v.abs() > 1e-6));
            let g = Grid2D::new(values.len(), 1, Boundary::Periodic, Boundary::Periodic).unwrap();
            let sv = to_statevector(&ScalarField::new(g, values.clone()).unwrap()).unwrap();
            prop_assert!((sv.norm() - 1.0).abs() <= 1e-12);
            prop_assert!(sv.amplitudes[values.len()..].iter().all(|a| *a == Complex64::new(0.0, 0.0)));
        }

        #[test]
        fn csv_round_trip(values in proptest::collection::vec(-1e6f64..1e6, 16)) {
            let dir = tempfile::tempdir().unwrap();
            let g = Grid2D::new(4, 4, Boundary::Periodic, Boundary::Periodic).unwrap();
            let field = ScalarField::new(g, values).unwrap();
            let path = dir.path().join("rt.csv");
            save_field_csv(&field, &path).unwrap();
            let back = load_field_csv(&path, &g).unwrap();
            for (a, b) in field.values.iter().zip(&back.values) {
                prop_assert!((a - b).abs() <= 1e-15 * a.abs().max(1e-300));
            }
        }
    }
}
