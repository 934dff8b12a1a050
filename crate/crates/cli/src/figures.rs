//! Plot-ready data for the phase portrait and the blow-up region, with
//! gnuplot scripts that render them.

use std::path::Path;

use wavebreak_core::ode::{
    classify_grid, rhs_equality, trace_stable_manifold, trace_unstable_manifold, Outcome,
};
use wavebreak_core::threshold::{
    first_integral_residual, separatrix_y, PhasePoint, SEPARATRIX_X_INTERCEPT,
};

use crate::error::CliResult;
use crate::output::{fmt_f64, write_atomic, Table};
use crate::runner::{abscissae, separatrix_table, Summary};
use crate::scenario::{Figure, PortraitSpec};

/// Branch ids in `fig1_contour.csv`.
pub const CONTOUR_BRANCHES: [&str; 4] = [
    "stable, upper",
    "stable, lower",
    "unstable, outer",
    "unstable, inner",
];

fn in_frame(p: &PhasePoint, s: &PortraitSpec) -> bool {
    p.m1 >= s.x_range[0] && p.m1 <= s.x_range[1] && p.m2 >= s.y_range[0] && p.m2 <= s.y_range[1]
}

fn field_table(s: &PortraitSpec) -> Table {
    let mut table = Table::new(&["x", "y", "dx", "dy", "speed"]);
    let [nx, ny] = s.arrows;
    let hx = (s.x_range[1] - s.x_range[0]) / nx as f64;
    let hy = (s.y_range[1] - s.y_range[0]) / ny as f64;
    for j in 0..ny {
        for i in 0..nx {
            let x = s.x_range[0] + (i as f64 + 0.5) * hx;
            let y = s.y_range[0] + (j as f64 + 0.5) * hy;
            let (f, h) = rhs_equality(PhasePoint::new(x, y));
            let speed = f.hypot(h);
            // Arrows of uniform length, 80% of a cell.
            let (dx, dy) = if speed > 0.0 {
                (0.8 * hx * f / speed, 0.8 * hy * h / speed)
            } else {
                (0.0, 0.0)
            };
            table.push(vec![fmt_f64(x), fmt_f64(y), fmt_f64(dx), fmt_f64(dy), fmt_f64(speed)]);
        }
    }
    table
}

/// The level set of the first integral through the saddle: both stable and
/// both unstable branches, each starting at the saddle.
fn contour_table(s: &PortraitSpec) -> CliResult<Table> {
    let extent = (s.x_range[1] - s.x_range[0]) + (s.y_range[1] - s.y_range[0]);
    let arc = 4.0 * extent;
    let step = extent / 2000.0;
    let stable = trace_stable_manifold(arc, step)?;
    let unstable = trace_unstable_manifold(arc, step)?;
    let saddle = PhasePoint::new(-2.0, 2.0);
    let mut table = Table::new(&["branch", "x", "y", "residual"]);
    for (id, branch) in [&stable.upper, &stable.lower, &unstable.outer, &unstable.inner]
        .into_iter()
        .enumerate()
    {
        for p in std::iter::once(&saddle).chain(branch.iter()) {
            if !in_frame(p, s) {
                continue;
            }
            table.push(vec![
                id.to_string(),
                fmt_f64(p.m1),
                fmt_f64(p.m2),
                fmt_f64(first_integral_residual(*p)?),
            ]);
        }
    }
    Ok(table)
}

/// Separatrix samples inside the frame, through the saddle and the intercept.
fn frame_separatrix(s: &PortraitSpec) -> CliResult<Table> {
    let x_hi = s.x_range[1].min(SEPARATRIX_X_INTERCEPT);
    // Leftmost x whose separatrix height is still inside the frame.
    let mut x_lo = s.x_range[0];
    if separatrix_y(x_lo)? > s.y_range[1] {
        let (mut a, mut b) = (x_lo, x_hi);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if separatrix_y(mid)? > s.y_range[1] {
                a = mid;
            } else {
                b = mid;
            }
        }
        x_lo = b;
    }
    let xs = abscissae(x_lo, x_hi, s.separatrix_points, &[-2.0]);
    separatrix_table(&xs)
}

/// End points of `m1 + m2 = -2` on the frame boundary.
pub fn seliger_segment(s: &PortraitSpec) -> Vec<PhasePoint> {
    let [x0, x1] = s.x_range;
    let [y0, y1] = s.y_range;
    let candidates = [
        PhasePoint::new(x0, -2.0 - x0),
        PhasePoint::new(x1, -2.0 - x1),
        PhasePoint::new(-2.0 - y0, y0),
        PhasePoint::new(-2.0 - y1, y1),
    ];
    let mut pts: Vec<PhasePoint> = candidates.into_iter().filter(|p| in_frame(p, s)).collect();
    pts.sort_by(|a, b| a.m1.total_cmp(&b.m1));
    pts.dedup_by(|a, b| (a.m1 - b.m1).abs() < 1e-12 && (a.m2 - b.m2).abs() < 1e-12);
    match (pts.first(), pts.last()) {
        (Some(a), Some(b)) if pts.len() >= 2 => vec![*a, *b],
        _ => Vec::new(),
    }
}

fn raster_table(s: &PortraitSpec) -> CliResult<(Table, usize)> {
    let [nx, ny] = s.raster;
    let hx = (s.x_range[1] - s.x_range[0]) / nx as f64;
    let hy = (s.y_range[1] - s.y_range[0]) / ny as f64;
    // Cell centres.
    let map = classify_grid(
        (s.x_range[0] + 0.5 * hx, s.x_range[1] - 0.5 * hx),
        (s.y_range[0] + 0.5 * hy, s.y_range[1] - 0.5 * hy),
        nx,
        ny,
        &s.tolerance.options(),
    )?;
    let mut table = Table::new(&["m1", "m2", "G", "outcome", "blowup"]);
    let mut blowups = 0;
    for c in &map.cells {
        let (label, flag) = match &c.outcome {
            Ok(Outcome::BlowUp { .. }) => ("blow-up", 1),
            Ok(_) => ("bounded", 0),
            Err(_) => ("failed", -1),
        };
        blowups += usize::from(flag == 1);
        table.push(vec![
            fmt_f64(c.point.m1),
            fmt_f64(c.point.m2),
            fmt_f64(c.g),
            label.to_string(),
            flag.to_string(),
        ]);
    }
    Ok((table, blowups))
}

fn ranges(s: &PortraitSpec) -> String {
    format!(
        "set xrange [{}:{}]\nset yrange [{}:{}]\n",
        s.x_range[0], s.x_range[1], s.y_range[0], s.y_range[1]
    )
}

const PREAMBLE: &str = "set datafile separator ','\nset key autotitle columnhead\nset size ratio -1\nset xlabel 'm_1'\nset ylabel 'm_2'\n";

fn fig1_script(s: &PortraitSpec) -> String {
    format!(
        "# Phase portrait of x' = -x^2 + y - x, y' = -y^2 + y - x.\n\
         set terminal pngcairo size 900,900\nset output 'fig1.png'\n{PREAMBLE}{}\
         set key bottom left\n\
         plot 'fig1_field.csv' using 1:2:3:4 with vectors head filled size graph 0.008,20 lc rgb '#9a9a9a' title 'direction field', \\\n\
         \x20    for [b=0:3] 'fig1_contour.csv' using ($1==b ? $2 : 1/0):3 with lines lw 2 lc rgb '#1f4e9a' title (b==0 ? 'first integral at saddle level' : ''), \\\n\
         \x20    'fig1_separatrix.csv' using 1:2 with lines dt 2 lw 2 lc rgb '#c03030' title 'separatrix G = 0', \\\n\
         \x20    '+' using (-2):(2) every ::0::0 with points pt 7 ps 1.5 lc rgb 'black' title 'saddle (-2, 2)'\n",
        ranges(s)
    )
}

fn fig2_script(s: &PortraitSpec) -> String {
    format!(
        "# Blow-up region of the auxiliary system.\n\
         set terminal pngcairo size 900,900\nset output 'fig2.png'\n{PREAMBLE}{}\
         set palette defined (-1 '#ffffff', 0 '#e8eef8', 1 '#f4c7a1')\nset cbrange [-1:1]\nunset colorbox\n\
         set key top left\n\
         plot 'fig2_raster.csv' using 1:2:5 with image notitle, \\\n\
         \x20    'fig2_separatrix.csv' using 1:2 with lines lw 2 lc rgb '#1f4e9a' title 'separatrix G = 0', \\\n\
         \x20    'fig2_seliger.csv' using 1:2 with lines dt 2 lw 2 lc rgb '#303030' title 'm_1 + m_2 = -2'\n",
        ranges(s)
    )
}

pub fn emit(s: &PortraitSpec, out: &Path) -> CliResult<Summary> {
    let mut files = Vec::new();
    let mut parts = Vec::new();
    let separatrix = frame_separatrix(s)?;
    if matches!(s.figure, Figure::PhasePortrait | Figure::Both) {
        let contour = contour_table(s)?;
        let worst = contour
            .rows
            .iter()
            .map(|r| r[3].parse::<f64>().map(f64::abs).unwrap_or(f64::NAN))
            .fold(0.0, f64::max);
        files.push(write_atomic(out, "fig1_field.csv", &field_table(s).to_bytes())?);
        files.push(write_atomic(out, "fig1_contour.csv", &contour.to_bytes())?);
        files.push(write_atomic(out, "fig1_separatrix.csv", &separatrix.to_bytes())?);
        files.push(write_atomic(out, "fig1.gp", fig1_script(s).as_bytes())?);
        parts.push(format!(
            "fig1 contour {} points (max |residual| {worst:.2e})",
            contour.len()
        ));
    }
    if matches!(s.figure, Figure::Region | Figure::Both) {
        let (raster, blowups) = raster_table(s)?;
        let mut seliger = Table::new(&["x", "y"]);
        for p in seliger_segment(s) {
            seliger.push(vec![fmt_f64(p.m1), fmt_f64(p.m2)]);
        }
        files.push(write_atomic(out, "fig2_raster.csv", &raster.to_bytes())?);
        files.push(write_atomic(out, "fig2_separatrix.csv", &separatrix.to_bytes())?);
        files.push(write_atomic(out, "fig2_seliger.csv", &seliger.to_bytes())?);
        files.push(write_atomic(out, "fig2.gp", fig2_script(s).as_bytes())?);
        parts.push(format!("fig2 raster {} cells, {blowups} blow up", raster.len()));
    }
    Ok(Summary {
        line: format!("portrait: {}", parts.join("; ")),
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seliger_segment_on_default_frame() {
        let seg = seliger_segment(&PortraitSpec::default());
        assert_eq!(seg, vec![PhasePoint::new(-8.0, 6.0), PhasePoint::new(-2.0, 0.0)]);
    }

    #[test]
    fn seliger_segment_missing_frame() {
        let s = PortraitSpec {
            x_range: [-1.0, 0.0],
            y_range: [0.0, 0.5],
            ..PortraitSpec::default()
        };
        assert!(seliger_segment(&s).is_empty());
    }
}
