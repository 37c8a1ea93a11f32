//! Minimal static SVG rendering of result curves and sample scatters.
//!
//! Pure string assembly, no dependencies: a fixed-size canvas, one axis
//! box, and either a polyline through (x, y) points or a scatter of dots.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn from_points(points: &[(f64, f64)]) -> Self {
        let mut f = Frame {
            x_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_min: f64::INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for &(x, y) in points {
            f.x_min = f.x_min.min(x);
            f.x_max = f.x_max.max(x);
            f.y_min = f.y_min.min(y);
            f.y_max = f.y_max.max(y);
        }
        // Degenerate ranges get a unit pad so division stays safe.
        if f.x_max - f.x_min < 1e-12 {
            f.x_min -= 0.5;
            f.x_max += 0.5;
        }
        if f.y_max - f.y_min < 1e-12 {
            f.y_min -= 0.5;
            f.y_max += 0.5;
        }
        f
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn svg_open(title: &str) -> String {
    format!(
        concat!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" "#,
            r#"viewBox="0 0 {w} {h}">"#,
            "\n",
            r#"<rect width="{w}" height="{h}" fill="white"/>"#,
            "\n",
            r#"<text x="{cx}" y="24" text-anchor="middle" font-family="sans-serif" "#,
            r#"font-size="15">{title}</text>"#,
            "\n"
        ),
        w = WIDTH,
        h = HEIGHT,
        cx = WIDTH / 2.0,
        title = title
    )
}

fn axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        MARGIN,
        MARGIN,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(
        out,
        concat!(
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" "#,
            r#"font-size="13">{}</text>"#
        ),
        WIDTH / 2.0,
        HEIGHT - 18.0,
        x_label
    );
    let _ = writeln!(
        out,
        concat!(
            r#"<text x="18" y="{}" text-anchor="middle" font-family="sans-serif" "#,
            r#"font-size="13" transform="rotate(-90 18 {})">{}</text>"#
        ),
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        y_label
    );
    // Corner tick labels give the data range.
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{:.3}</text>"#,
        MARGIN,
        HEIGHT - MARGIN + 16.0,
        frame.x_min
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{:.3}</text>"#,
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 16.0,
        frame.x_max
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{:.3}</text>"#,
        MARGIN - 6.0,
        HEIGHT - MARGIN,
        frame.y_min
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{:.3}</text>"#,
        MARGIN - 6.0,
        MARGIN + 4.0,
        frame.y_max
    );
}

/// A single curve through `points` (sorted by the caller).
pub fn render_curve(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let frame = Frame::from_points(points);
    let mut out = svg_open(title);
    axes(&mut out, &frame, x_label, y_label);
    if points.len() > 1 {
        let path: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#1f6fb2" stroke-width="2"/>"##,
            path.join(" ")
        );
    }
    for &(x, y) in points {
        let _ = writeln!(
            out,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3.4" fill="#1f6fb2"/>"##,
            frame.px(x),
            frame.py(y)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// A scatter of `points`.
pub fn render_scatter(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let frame = Frame::from_points(points);
    let mut out = svg_open(title);
    axes(&mut out, &frame, x_label, y_label);
    for &(x, y) in points {
        let _ = writeln!(
            out,
            r##"<circle cx="{:.2}" cy="{:.2}" r="2.2" fill="#1f6fb2" fill-opacity="0.55"/>"##,
            frame.px(x),
            frame.py(y)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_renders_all_points() {
        let svg = render_curve("t", "x", "y", &[(0.0, 1.0), (0.5, 0.5), (1.0, 2.0)]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("<polyline"));
    }

    #[test]
    fn degenerate_ranges_do_not_break() {
        let svg = render_scatter("t", "x", "y", &[(1.0, 1.0), (1.0, 1.0)]);
        assert!(!svg.contains("NaN"));
    }
}
