//! Artifact writers: field CSVs, 8-bit PGM images with a scaling sidecar,
//! JSON documents and sweep tables.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qadvect::grid::save_field_csv;
use qadvect::ScalarField;
use serde::Serialize;

use crate::error::CliError;

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes `<stem>.csv`, `<stem>.pgm` and `<stem>.pgm.txt`.
    pub fn field(&self, stem: &str, field: &ScalarField) -> Result<(), CliError> {
        save_field_csv(field, self.path(&format!("{stem}.csv")))?;
        let (bytes, lo, hi) = pgm_bytes(field);
        fs::write(self.path(&format!("{stem}.pgm")), bytes)?;
        let sidecar = format!(
            "format P5 8-bit\nscaling linear\nmin {lo}\nmax {hi}\ngray = round(255 * (value - min) / (max - min))\ntop row is the last grid row (largest y)\n"
        );
        fs::write(self.path(&format!("{stem}.pgm.txt")), sidecar)?;
        Ok(())
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.into()))?;
        fs::write(self.path(name), text + "\n")?;
        Ok(())
    }

    pub fn text(&self, name: &str, text: &str) -> Result<(), CliError> {
        fs::write(self.path(name), text)?;
        Ok(())
    }
}

/// Binary PGM with linear min-max scaling; constant fields map to 0.
pub fn pgm_bytes(field: &ScalarField) -> (Vec<u8>, f64, f64) {
    let (nx, ny) = (field.grid.nx, field.grid.ny);
    let (lo, hi) = (field.min(), field.max());
    let span = hi - lo;
    let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    for j in (0..ny).rev() {
        for i in 0..nx {
            let v = field.get(i, j);
            let g = if span > 0.0 {
                (255.0 * (v - lo) / span).round()
            } else {
                0.0
            };
            out.push(g.clamp(0.0, 255.0) as u8);
        }
    }
    (out, lo, hi)
}

/// `header` then one row per `(r, theta, value)`; infinities print as `inf`.
pub fn sweep_csv(header: &str, rows: &[(f64, f64, f64)]) -> String {
    let mut s = format!("{header}\n");
    for (r, t, v) in rows {
        writeln!(s, "{r},{t},{v}").unwrap();
    }
    s
}
