use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::threshold::{eval_g, PhasePoint};

use super::integrator::{integrate_equality, IntegrationOptions, Outcome};

/// Cells with `|G|` at or below this are reported but not scored.
pub const SEPARATRIX_BAND: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub ix: usize,
    pub iy: usize,
    pub point: PhasePoint,
    pub g: f64,
    /// `Err` holds the message of a per-cell integration failure.
    pub outcome: std::result::Result<Outcome, String>,
    /// `Some(BlowUp == (G < 0))` for scored cells.
    pub agrees: Option<bool>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GridStats {
    pub total: usize,
    pub in_band: usize,
    pub failures: usize,
    pub scored: usize,
    pub agreeing: usize,
}

impl GridStats {
    pub fn agreement(&self) -> f64 {
        if self.scored == 0 {
            1.0
        } else {
            self.agreeing as f64 / self.scored as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMap {
    pub nx: usize,
    pub ny: usize,
    /// Row-major with `x` fastest.
    pub cells: Vec<GridCell>,
    pub stats: GridStats,
}

impl ClassificationMap {
    pub fn cell(&self, ix: usize, iy: usize) -> &GridCell {
        &self.cells[iy * self.nx + ix]
    }

    /// The cell whose node is closest to `p`.
    pub fn nearest(&self, p: PhasePoint) -> &GridCell {
        self.cells
            .iter()
            .min_by(|a, b| {
                let da = (a.point.m1 - p.m1).hypot(a.point.m2 - p.m2);
                let db = (b.point.m1 - p.m1).hypot(b.point.m2 - p.m2);
                da.total_cmp(&db)
            })
            .expect("grids have at least four cells")
    }
}

fn linspace(range: (f64, f64), n: usize, i: usize) -> f64 {
    range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64
}

/// Integrates the equality system from every node of an `nx × ny` grid and
/// scores the outcome against the sign of `G`.
///
/// Cells run in parallel on the current rayon pool.
pub fn classify_grid(
    x_range: (f64, f64),
    y_range: (f64, f64),
    nx: usize,
    ny: usize,
    opts: &IntegrationOptions,
) -> Result<ClassificationMap> {
    if nx < 2 || ny < 2 {
        return Err(Error::parameter("nx/ny", format!("grid {nx}x{ny} needs at least 2 nodes per axis")));
    }
    let in_quadrant = x_range.0 < x_range.1
        && y_range.0 < y_range.1
        && x_range.1 <= 0.0
        && y_range.0 >= 0.0
        && x_range.0.is_finite()
        && y_range.1.is_finite();
    if !in_quadrant {
        return Err(Error::parameter(
            "range",
            format!("{x_range:?} x {y_range:?} must be an increasing box in the second quadrant"),
        ));
    }
    opts.validate()?;

    let cells: Vec<GridCell> = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let (ix, iy) = (idx % nx, idx / nx);
            let point = PhasePoint::new(linspace(x_range, nx, ix), linspace(y_range, ny, iy));
            let g = eval_g(point).unwrap_or(f64::NAN);
            let outcome = integrate_equality(point, opts)
                .map(|t| t.outcome)
                .map_err(|e| e.to_string());
            let agrees = match &outcome {
                Ok(o) if g.abs() > SEPARATRIX_BAND => Some(o.is_blow_up() == (g < 0.0)),
                _ => None,
            };
            GridCell {
                ix,
                iy,
                point,
                g,
                outcome,
                agrees,
            }
        })
        .collect();

    let mut stats = GridStats {
        total: cells.len(),
        ..GridStats::default()
    };
    for c in &cells {
        if c.outcome.is_err() {
            stats.failures += 1;
        }
        if c.g.abs() <= SEPARATRIX_BAND {
            stats.in_band += 1;
        }
        if let Some(ok) = c.agrees {
            stats.scored += 1;
            stats.agreeing += usize::from(ok);
        }
    }
    Ok(ClassificationMap { nx, ny, cells, stats })
}
