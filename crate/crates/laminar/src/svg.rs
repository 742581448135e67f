//! Standalone SVG emission for the two plot artifacts: polarity region maps
//! and tissue snapshots (two rows of disks coloured by expression level).
//! Byte-deterministic for identical input; no plotting dependencies.

use crate::stability::SweepGrid;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvgError {
    #[error("nothing to render: {0}")]
    EmptyData(String),
}

pub type Result<T> = std::result::Result<T, SvgError>;

const REGION_FILL_OUTSIDE: &str = "#ffffff";
const REGION_FILL_EXISTS: &str = "#b0b0b0";
const REGION_FILL_CONVERGES: &str = "#57b560";
const REGION_FILL_FAILED: &str = "#d97642";

fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

/// Region map over the polarity plane: grey cells satisfy the existence
/// condition, green cells additionally satisfy the convergence conditions.
/// Axes are drawn in the log scale the sweep was taken in.
pub fn render_region_map(grid: &SweepGrid) -> Result<String> {
    if grid.cells.is_empty() {
        return Err(SvgError::EmptyData("empty sweep grid".to_string()));
    }
    let n1 = grid.axis1.len();
    let n2 = grid.axis2.len();
    let plot_w = 520.0;
    let plot_h = 520.0;
    let margin_left = 70.0;
    let margin_bottom = 55.0;
    let margin_top = 25.0;
    let margin_right = 160.0;
    let width = margin_left + plot_w + margin_right;
    let height = margin_top + plot_h + margin_bottom;

    // cell boundaries at log-midpoints between consecutive axis values
    let bounds = |axis: &[f64]| -> Vec<f64> {
        let n = axis.len();
        let mut b = Vec::with_capacity(n + 1);
        let lg: Vec<f64> = axis.iter().map(|v| v.ln()).collect();
        if n == 1 {
            b.push(lg[0] - 0.5);
            b.push(lg[0] + 0.5);
        } else {
            b.push(lg[0] - 0.5 * (lg[1] - lg[0]));
            for i in 1..n {
                b.push(0.5 * (lg[i - 1] + lg[i]));
            }
            b.push(lg[n - 1] + 0.5 * (lg[n - 1] - lg[n - 2]));
        }
        b
    };
    let bx = bounds(&grid.axis1);
    let by = bounds(&grid.axis2);
    let (x_lo, x_hi) = (bx[0], bx[n1]);
    let (y_lo, y_hi) = (by[0], by[n2]);
    let to_x = |lg: f64| margin_left + (lg - x_lo) / (x_hi - x_lo) * plot_w;
    let to_y = |lg: f64| margin_top + plot_h - (lg - y_lo) / (y_hi - y_lo) * plot_h;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    s.push_str("<!-- region map: x = intra-layer weight of signal 1, y = intra-layer weight of signal 2 (log scale) -->\n");
    s.push_str(&format!(
        "<!-- fills: outside={REGION_FILL_OUTSIDE} existence={REGION_FILL_EXISTS} convergence={REGION_FILL_CONVERGES} failed={REGION_FILL_FAILED} -->\n"
    ));
    s.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#ffffff\" stroke=\"none\"/>\n",
        fmt2(0.0),
        fmt2(0.0),
        fmt2(width),
        fmt2(height)
    ));

    for i in 0..n1 {
        for j in 0..n2 {
            let cell = grid.cell(i, j);
            let fill = if cell.error.is_some() {
                REGION_FILL_FAILED
            } else if cell.converges {
                REGION_FILL_CONVERGES
            } else if cell.exists {
                REGION_FILL_EXISTS
            } else {
                REGION_FILL_OUTSIDE
            };
            let x0 = to_x(bx[i]);
            let x1 = to_x(bx[i + 1]);
            let y0 = to_y(by[j + 1]);
            let y1 = to_y(by[j]);
            s.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{fill}\"/>\n",
                fmt2(x0),
                fmt2(y0),
                fmt2(x1 - x0),
                fmt2(y1 - y0)
            ));
        }
    }

    // frame and axis labels
    s.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>\n",
        fmt2(margin_left),
        fmt2(margin_top),
        fmt2(plot_w),
        fmt2(plot_h)
    ));
    for &(value, label) in &[(grid.axis1[0], true), (grid.axis1[n1 - 1], true)] {
        let _ = label;
        let x = to_x(value.ln());
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            fmt2(x),
            fmt2(margin_top + plot_h + 18.0),
            crate::fmt_sig12(value)
        ));
    }
    for &value in &[grid.axis2[0], grid.axis2[n2 - 1]] {
        let y = to_y(value.ln());
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            fmt2(margin_left - 6.0),
            fmt2(y + 4.0),
            crate::fmt_sig12(value)
        ));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">w1 (signal 1)</text>\n",
        fmt2(margin_left + plot_w / 2.0),
        fmt2(height - 12.0)
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">w1 (signal 2)</text>\n",
        fmt2(16.0),
        fmt2(margin_top + plot_h / 2.0),
        fmt2(16.0),
        fmt2(margin_top + plot_h / 2.0)
    ));

    // legend
    let lx = margin_left + plot_w + 18.0;
    let entries = [
        (REGION_FILL_CONVERGES, "convergence"),
        (REGION_FILL_EXISTS, "existence only"),
        (REGION_FILL_OUTSIDE, "no pattern"),
        (REGION_FILL_FAILED, "evaluation failed"),
    ];
    for (row, (fill, label)) in entries.iter().enumerate() {
        let y = margin_top + 16.0 + row as f64 * 24.0;
        s.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"16\" height=\"16\" fill=\"{fill}\" stroke=\"#000000\" stroke-width=\"0.5\"/>\n",
            fmt2(lx),
            fmt2(y)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\">{label}</text>\n",
            fmt2(lx + 22.0),
            fmt2(y + 12.0)
        ));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn diverging_color(t: f64) -> String {
    // blue (-1) through white (0) to red (+1)
    let t = t.clamp(-1.0, 1.0);
    let (r, g, b) = if t < 0.0 {
        let u = 1.0 + t;
        (54.0 + (255.0 - 54.0) * u, 97.0 + (255.0 - 97.0) * u, 160.0 + (255.0 - 160.0) * u)
    } else {
        let u = 1.0 - t;
        (176.0 + (255.0 - 176.0) * u, 32.0 + (255.0 - 32.0) * u, 38.0 + (255.0 - 38.0) * u)
    };
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

/// Tissue snapshot: layer 1 as the top row of disks, layer 2 as the bottom
/// row, fill mapped from the deviation of each cell's value from `reference`
/// on a symmetric blue-white-red scale.
pub fn render_tissue_snapshot(
    values: &[f64],
    layer1_cells: usize,
    reference: f64,
) -> Result<String> {
    if values.is_empty() {
        return Err(SvgError::EmptyData("empty snapshot".to_string()));
    }
    let layer2_cells = values.len() - layer1_cells;
    let max_dev = values
        .iter()
        .map(|v| (v - reference).abs())
        .fold(0.0_f64, f64::max);
    let spacing = 30.0;
    let radius = 12.0;
    let cols = layer1_cells.max(layer2_cells).max(1);
    let width = 40.0 + cols as f64 * spacing;
    let height = 130.0;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    ));
    s.push_str(&format!(
        "<!-- tissue snapshot: fill = deviation from {} on blue-white-red scale, max |dev| = {} -->\n",
        crate::fmt_sig12(reference),
        crate::fmt_sig12(max_dev)
    ));
    s.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>\n"
    ));
    for (idx, &v) in values.iter().enumerate() {
        let (row, col) = if idx < layer1_cells {
            (0, idx)
        } else {
            (1, idx - layer1_cells)
        };
        let cx = 25.0 + col as f64 * spacing;
        let cy = 35.0 + row as f64 * 55.0;
        let t = if max_dev > 0.0 {
            (v - reference) / max_dev
        } else {
            0.0
        };
        s.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"{radius}\" fill=\"{}\" stroke=\"#333333\" stroke-width=\"0.8\"/>\n",
            fmt2(cx),
            fmt2(cy),
            diverging_color(t)
        ));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::{CellVerdict, SweepGrid};

    fn cell(w1: f64, w2: f64, exists: bool, converges: bool) -> CellVerdict {
        CellVerdict {
            w1_sig1: w1,
            w1_sig2: w2,
            margin: 0.0,
            exists,
            monotone: converges,
            lambda2_min: [converges, converges],
            converges,
            sim_class: None,
            error: None,
        }
    }

    #[test]
    fn single_cell_grid_renders_one_region_rect() {
        let grid = SweepGrid {
            axis1: vec![0.5],
            axis2: vec![0.5],
            cells: vec![cell(0.5, 0.5, true, false)],
        };
        let svg = render_region_map(&grid).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains(REGION_FILL_EXISTS));
        assert!(svg.contains("legend") || svg.contains("existence only"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn convergence_cells_render_green_inside_grey() {
        let grid = SweepGrid {
            axis1: vec![0.1, 1.0],
            axis2: vec![0.1, 1.0],
            cells: vec![
                cell(0.1, 0.1, true, true),
                cell(0.1, 1.0, true, false),
                cell(1.0, 0.1, false, false),
                cell(1.0, 1.0, false, false),
            ],
        };
        let svg = render_region_map(&grid).unwrap();
        assert!(svg.contains(REGION_FILL_CONVERGES));
        assert!(svg.contains(REGION_FILL_EXISTS));
        // determinism
        assert_eq!(svg, render_region_map(&grid).unwrap());
    }

    #[test]
    fn failed_cells_get_their_own_fill() {
        let mut failed = cell(0.5, 0.5, false, false);
        failed.error = Some("polarity weights must be positive".to_string());
        let grid = SweepGrid {
            axis1: vec![0.5, 1.0],
            axis2: vec![0.5],
            cells: vec![cell(0.5, 0.5, false, false), failed],
        };
        let svg = render_region_map(&grid).unwrap();
        assert!(svg.contains(REGION_FILL_FAILED));
    }

    #[test]
    fn empty_grid_is_rejected() {
        let grid = SweepGrid {
            axis1: vec![],
            axis2: vec![],
            cells: vec![],
        };
        assert!(matches!(
            render_region_map(&grid),
            Err(SvgError::EmptyData(_))
        ));
    }

    #[test]
    fn homogeneous_snapshot_renders_identical_fills() {
        let values = vec![0.18; 10];
        let svg = render_tissue_snapshot(&values, 5, 0.18).unwrap();
        let fills: Vec<&str> = svg.matches("#ffffff\" stroke=\"#333333\"").collect();
        assert_eq!(fills.len(), 10);
    }

    #[test]
    fn contrasting_layers_render_red_and_blue() {
        let mut values = vec![0.3; 4];
        values.extend(vec![0.06; 4]);
        let svg = render_tissue_snapshot(&values, 4, 0.18).unwrap();
        assert!(svg.contains("#b02026")); // saturated red
        assert!(svg.contains("#3661a0")); // saturated blue
        assert_eq!(svg, render_tissue_snapshot(&values, 4, 0.18).unwrap());
    }
}
