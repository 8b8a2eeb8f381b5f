//! Field maps on regular grids.

use serde::{Deserialize, Serialize};
use std::io::Write;

use super::source::FieldSource;
use crate::{Error, Result, Vec3};

/// Regular grid `origin + i*dx + j*dy + k*dz`. Rows are written with the
/// last index varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMapGrid {
    pub min: Vec3,
    pub max: Vec3,
    pub counts: [usize; 3],
}

impl FieldMapGrid {
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Result<Vec<Vec3>> {
        if self.counts.contains(&0) {
            return Err(Error::invalid("field-map grid counts must be at least 1"));
        }
        let coord = |axis: usize, i: usize| {
            let n = self.counts[axis];
            if n == 1 {
                self.min[axis]
            } else {
                self.min[axis] + (self.max[axis] - self.min[axis]) * i as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.counts[0] {
            for j in 0..self.counts[1] {
                for k in 0..self.counts[2] {
                    out.push(Vec3::new(coord(0, i), coord(1, j), coord(2, k)));
                }
            }
        }
        Ok(out)
    }
}

pub const FIELD_MAP_HEADER: &str = "x_m,y_m,z_m,Bx_T,By_T,Bz_T,Bnorm_T";

/// Write one CSV row per grid point. Returns the number of data rows.
pub fn write_field_map<S: FieldSource + ?Sized, W: Write>(
    source: &S,
    grid: &FieldMapGrid,
    t: f64,
    preamble: &[String],
    mut out: W,
) -> Result<usize> {
    let pts = grid.points()?;
    for line in preamble {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{FIELD_MAP_HEADER}")?;
    for p in &pts {
        let b = source.field(p, t)?;
        writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            p.x,
            p.y,
            p.z,
            b.x,
            b.y,
            b.z,
            b.norm()
        )?;
    }
    Ok(pts.len())
}
