//! Minimal static SVG line charts for the per-flight comparison plots.
//! No external services or libraries; output is deterministic.

use std::fmt::Write as _;

pub struct Series {
    pub label: &'static str,
    pub color: &'static str,
    pub dashed: bool,
    /// (x, y) samples; NaN-free.
    pub points: Vec<(f64, f64)>,
}

pub struct Panel {
    pub title: &'static str,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 900.0;
const PANEL_HEIGHT: f64 = 200.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 25.0;

/// Render stacked panels sharing one x axis.
pub fn render(panels: &[Panel], x_label: &str) -> String {
    let total_h = panels.len() as f64 * PANEL_HEIGHT + MARGIN_BOTTOM;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{total_h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in panels {
        for s in &p.series {
            for &(x, _) in &s.points {
                x_min = x_min.min(x);
                x_max = x_max.max(x);
            }
        }
    }
    if !x_min.is_finite() || x_max <= x_min {
        x_min = 0.0;
        x_max = 1.0;
    }

    for (i, panel) in panels.iter().enumerate() {
        let top = i as f64 * PANEL_HEIGHT + MARGIN_TOP;
        let bottom = (i + 1) as f64 * PANEL_HEIGHT - MARGIN_BOTTOM;
        let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &panel.series {
            for &(_, y) in &s.points {
                y_min = y_min.min(y);
                y_max = y_max.max(y);
            }
        }
        if !y_min.is_finite() || y_max <= y_min {
            y_min -= 1.0;
            y_max = y_min + 2.0;
        }
        let pad = 0.05 * (y_max - y_min);
        let (y_min, y_max) = (y_min - pad, y_max + pad);

        let x_of = |x: f64| {
            MARGIN_LEFT + (x - x_min) / (x_max - x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
        };
        let y_of = |y: f64| bottom - (y - y_min) / (y_max - y_min) * (bottom - top);

        let _ = writeln!(
            out,
            r#"<text x="{MARGIN_LEFT}" y="{:.2}" font-weight="bold">{}</text>"#,
            top - 8.0,
            panel.title
        );
        // Frame and y extrema.
        let _ = writeln!(
            out,
            r##"<rect x="{MARGIN_LEFT}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#ccc"/>"##,
            WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
            bottom - top
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.1}</text>"#,
            MARGIN_LEFT - 4.0,
            top + 10.0,
            y_max
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.1}</text>"#,
            MARGIN_LEFT - 4.0,
            bottom,
            y_min
        );

        for s in &panel.series {
            if s.points.is_empty() {
                continue;
            }
            let mut d = String::new();
            for &(x, y) in &s.points {
                let _ = write!(d, "{:.2},{:.2} ", x_of(x), y_of(y));
            }
            let dash = if s.dashed {
                r#" stroke-dasharray="6 4""#
            } else {
                ""
            };
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.3"{dash} points="{}"/>"#,
                s.color,
                d.trim_end()
            );
        }
        // Legend.
        let mut lx = MARGIN_LEFT + 8.0;
        for s in &panel.series {
            let _ = writeln!(
                out,
                r#"<rect x="{lx:.2}" y="{:.2}" width="14" height="3" fill="{}"/>"#,
                top + 4.0,
                s.color
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 18.0,
                top + 9.0,
                s.label
            );
            lx += 18.0 + 7.0 * s.label.len() as f64 + 14.0;
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        total_h - 6.0,
        x_label
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_deterministic_svg() {
        let panels = vec![Panel {
            title: "Altitude [m]",
            series: vec![Series {
                label: "ref",
                color: "#d62728",
                dashed: false,
                points: vec![(0.0, 100.0), (4.0, 110.0), (8.0, 130.0)],
            }],
        }];
        let a = render(&panels, "time [s]");
        let b = render(&panels, "time [s]");
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("polyline"));
        assert!(a.trim_end().ends_with("</svg>"));
    }
}
