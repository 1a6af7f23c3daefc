//! Deterministic SVG rendering of region sets on the equilateral simplex
//! triangle. Barycentric points are projected via
//! `(p1, p2, p3) -> (p2 + p3/2, (sqrt(3)/2) p3)` and scaled to the requested
//! width; rationals become doubles only here.

use crate::decision::ProbVector;
use crate::rational::to_f64;

use super::{RegionError, RegionLabel, RegionSet};

const SQRT3_2: f64 = 0.866_025_403_784_438_6;

#[derive(Debug, Clone)]
pub struct RenderOptions {
    /// Total image width in pixels.
    pub width: u32,
    /// Fill colors, cycled per polygon within each set.
    pub palette: Vec<String>,
    /// Draw light gridlines at tenths.
    pub show_grid: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            width: 640,
            palette: [
                "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1", "#76b7b2",
            ]
            .iter()
            .map(|s| (*s).to_owned())
            .collect(),
            show_grid: false,
        }
    }
}

struct Frame {
    margin: f64,
    side: f64,
    tri_height: f64,
}

impl Frame {
    fn point(&self, p: &ProbVector) -> (f64, f64) {
        let x = to_f64(p.prob(2)) + to_f64(p.prob(3)) / 2.0;
        let y = to_f64(p.prob(3)) * SQRT3_2;
        (
            self.margin + x * self.side,
            self.margin + self.tri_height - y * self.side,
        )
    }

    fn bary(&self, _p1: f64, p2: f64, p3: f64) -> (f64, f64) {
        let x = p2 + p3 / 2.0;
        let y = p3 * SQRT3_2;
        (
            self.margin + x * self.side,
            self.margin + self.tri_height - y * self.side,
        )
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.4}")
}

fn label_text(label: RegionLabel, degenerate: bool) -> String {
    let base = match label {
        RegionLabel::Mode(t) => format!("mode {t}"),
        RegionLabel::Bayes(t) => format!("bayes {t}"),
        RegionLabel::Disagreement { mode, better } => {
            format!("disagreement {mode}->{better}")
        }
    };
    if degenerate {
        format!("{base} (degenerate)")
    } else {
        base
    }
}

/// Render region sets as a standalone SVG 1.1 document. Output is
/// byte-identical for identical input.
pub fn render_svg(sets: &[RegionSet], options: &RenderOptions) -> Result<String, RegionError> {
    if sets.is_empty() {
        return Err(RegionError::EmptyInput);
    }
    let width = f64::from(options.width.max(64));
    let margin = width / 16.0;
    let side = width - 2.0 * margin;
    let frame = Frame {
        margin,
        side,
        tri_height: side * SQRT3_2,
    };

    let legend_entries: usize = sets.iter().map(|s| s.polygons().len()).sum();
    let legend_top = margin + frame.tri_height + 24.0;
    let height = legend_top + 18.0 * legend_entries as f64 + margin;

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" \
         viewBox=\"0 0 {} {}\">\n",
        fmt(width),
        fmt(height),
        fmt(width),
        fmt(height)
    ));

    if options.show_grid {
        out.push_str("  <g stroke=\"#cccccc\" stroke-width=\"0.5\">\n");
        for i in 1..10 {
            let c = f64::from(i) / 10.0;
            let lines = [
                // p1 = c, p2 = c, p3 = c.
                (frame.bary(c, 1.0 - c, 0.0), frame.bary(c, 0.0, 1.0 - c)),
                (frame.bary(1.0 - c, c, 0.0), frame.bary(0.0, c, 1.0 - c)),
                (frame.bary(1.0 - c, 0.0, c), frame.bary(0.0, 1.0 - c, c)),
            ];
            for ((x1, y1), (x2, y2)) in lines {
                out.push_str(&format!(
                    "    <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n",
                    fmt(x1),
                    fmt(y1),
                    fmt(x2),
                    fmt(y2)
                ));
            }
        }
        out.push_str("  </g>\n");
    }

    let palette = &options.palette;
    let mut legend: Vec<(String, String)> = Vec::new();
    for set in sets {
        out.push_str(&format!("  <g id=\"{}\">\n", set.rule().as_str()));
        for (idx, poly) in set.polygons().iter().enumerate() {
            let color = &palette[idx % palette.len()];
            let points: Vec<String> = poly
                .vertices()
                .iter()
                .map(|v| {
                    let (x, y) = frame.point(v);
                    format!("{},{}", fmt(x), fmt(y))
                })
                .collect();
            let d = format!("M {} Z", points.join(" L "));
            if poly.is_degenerate() {
                out.push_str(&format!(
                    "    <path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>\n"
                ));
            } else {
                out.push_str(&format!(
                    "    <path d=\"{d}\" fill=\"{color}\" fill-opacity=\"0.55\" \
                     stroke=\"{color}\" stroke-width=\"1\"/>\n"
                ));
            }
            legend.push((color.clone(), label_text(poly.label(), poly.is_degenerate())));
        }
        out.push_str("  </g>\n");
    }

    // Triangle outline and corner labels.
    let corners = [
        frame.bary(1.0, 0.0, 0.0),
        frame.bary(0.0, 1.0, 0.0),
        frame.bary(0.0, 0.0, 1.0),
    ];
    out.push_str(&format!(
        "  <path d=\"M {},{} L {},{} L {},{} Z\" fill=\"none\" stroke=\"#000000\" \
         stroke-width=\"1.5\"/>\n",
        fmt(corners[0].0),
        fmt(corners[0].1),
        fmt(corners[1].0),
        fmt(corners[1].1),
        fmt(corners[2].0),
        fmt(corners[2].1)
    ));
    let offsets = [(-10.0, 14.0), (4.0, 14.0), (0.0, -8.0)];
    for (i, ((x, y), (dx, dy))) in corners.iter().zip(offsets).enumerate() {
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
            fmt(x + dx),
            fmt(y + dy),
            i + 1
        ));
    }

    for (i, (color, text)) in legend.iter().enumerate() {
        let y = legend_top + 18.0 * i as f64;
        out.push_str(&format!(
            "  <rect x=\"{}\" y=\"{}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n",
            fmt(margin),
            fmt(y)
        ));
        out.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{text}</text>\n",
            fmt(margin + 18.0),
            fmt(y + 10.0)
        ));
    }

    out.push_str("</svg>\n");
    Ok(out)
}
