//! Minimal SVG rendering for fields and curves.

use std::fmt::Write;

use crate::geometry::Mesh;

const PANEL: f64 = 320.0;
const MARGIN: f64 = 30.0;

/// Blue-white-red map on `[-1, 1]`.
fn diverging(x: f64) -> String {
    let x = x.clamp(-1.0, 1.0);
    let (r, g, b) = if x < 0.0 {
        let s = 1.0 + x;
        (s, s, 1.0)
    } else {
        let s = 1.0 - x;
        (1.0, s, s)
    };
    format!(
        "#{:02x}{:02x}{:02x}",
        (r * 255.0) as u8,
        (g * 255.0) as u8,
        (b * 255.0) as u8
    )
}

/// Black-to-yellow ramp on `[0, 1]`.
fn sequential(x: f64) -> String {
    let x = x.clamp(0.0, 1.0);
    let r = (1.5 * x).min(1.0);
    let g = x * x;
    let b = (0.5 - (x - 0.3).abs()).max(0.0);
    format!(
        "#{:02x}{:02x}{:02x}",
        (r * 255.0) as u8,
        (g * 255.0) as u8,
        (b * 255.0) as u8
    )
}

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

/// One panel per `(title, nodal values)`, triangles filled with the mean of
/// their vertex values on a symmetric colour scale.
pub fn mesh_heatmaps(mesh: &Mesh, panels: &[(String, Vec<f64>)]) -> String {
    let width = panels.len() as f64 * (PANEL + MARGIN) + MARGIN;
    let height = PANEL + 2.0 * MARGIN;
    let mut out = String::new();
    header(&mut out, width, height);
    for (k, (title, values)) in panels.iter().enumerate() {
        let x0 = MARGIN + k as f64 * (PANEL + MARGIN);
        let y0 = MARGIN;
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let _ = writeln!(
            out,
            r#"<text x="{x0}" y="{}" font-size="14">{title} (max |v| = {scale:.3e})</text>"#,
            y0 - 8.0
        );
        let _ = writeln!(out, "<g>");
        for tri in &mesh.triangles {
            let v = (values[tri[0]] + values[tri[1]] + values[tri[2]]) / 3.0 / scale;
            let pts: Vec<String> = tri
                .iter()
                .map(|&i| {
                    let p = mesh.vertices[i];
                    format!("{:.2},{:.2}", x0 + p[0] * PANEL, y0 + (1.0 - p[1]) * PANEL)
                })
                .collect();
            let c = diverging(v);
            let _ = writeln!(
                out,
                r#"<polygon points="{}" fill="{c}" stroke="{c}" stroke-width="0.3"/>"#,
                pts.join(" ")
            );
        }
        for seg in &mesh.interface_segments {
            let (a, b) = (mesh.vertices[seg.start], mesh.vertices[seg.end]);
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="1.5"/>"#,
                x0 + a[0] * PANEL,
                y0 + (1.0 - a[1]) * PANEL,
                x0 + b[0] * PANEL,
                y0 + (1.0 - b[1]) * PANEL
            );
        }
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    out
}

/// Colour scale for grid heat maps.
#[derive(Debug, Clone, Copy)]
pub enum Scale {
    /// `[0, max]`.
    Magnitude,
    /// `[-pi, pi]`.
    Phase,
}

/// Heat map of a row-major `nx * ny` grid (row `j` is `y`).
pub fn grid_heatmaps(nx: usize, ny: usize, panels: &[(String, Vec<f64>, Scale)]) -> String {
    let aspect = ny as f64 / nx as f64;
    let pw = PANEL;
    let ph = PANEL * aspect;
    let width = panels.len() as f64 * (pw + MARGIN) + MARGIN;
    let height = ph + 2.0 * MARGIN;
    let cw = pw / nx as f64;
    let chh = ph / ny as f64;
    let mut out = String::new();
    header(&mut out, width, height);
    for (k, (title, values, scale)) in panels.iter().enumerate() {
        let x0 = MARGIN + k as f64 * (pw + MARGIN);
        let y0 = MARGIN;
        let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let _ = writeln!(out, r#"<text x="{x0}" y="{}" font-size="14">{title}</text>"#, y0 - 8.0);
        for j in 0..ny {
            for i in 0..nx {
                let v = values[j * nx + i];
                let c = match scale {
                    Scale::Magnitude => sequential(v / max),
                    Scale::Phase => diverging(v / std::f64::consts::PI),
                };
                let _ = writeln!(
                    out,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{c}"/>"#,
                    x0 + i as f64 * cw,
                    y0 + (ny - 1 - j) as f64 * chh,
                    cw + 0.05,
                    chh + 0.05
                );
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

/// A polyline series.
pub struct Series<'a> {
    pub label: &'a str,
    pub colour: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

/// Line plot with optional shaded x-intervals.
pub fn line_plot(title: &str, x_label: &str, series: &[Series], shaded: &[(f64, f64)]) -> String {
    let (w, h) = (640.0, 400.0);
    let (l, r, t, b) = (60.0, 20.0, 30.0, 40.0);
    let finite = |v: &&f64| v.is_finite();
    let xs = series.iter().flat_map(|s| s.x.iter()).filter(finite);
    let (xmin, xmax) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let ys = series.iter().flat_map(|s| s.y.iter()).filter(finite);
    let (mut ymin, mut ymax) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(xmin < xmax) || !ymin.is_finite() {
        return format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\"></svg>\n");
    }
    if ymin == ymax {
        ymin -= 1.0;
        ymax += 1.0;
    }
    let px = |x: f64| l + (x - xmin) / (xmax - xmin) * (w - l - r);
    let py = |y: f64| t + (ymax - y) / (ymax - ymin) * (h - t - b);
    let mut out = String::new();
    header(&mut out, w, h);
    for &(a, c) in shaded {
        let _ = writeln!(
            out,
            r##"<rect x="{:.2}" y="{t}" width="{:.2}" height="{}" fill="#dddddd"/>"##,
            px(a),
            (px(c) - px(a)).max(0.5),
            h - t - b
        );
    }
    if ymin < 0.0 && ymax > 0.0 {
        let _ = writeln!(
            out,
            r#"<line x1="{l}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="gray"/>"#,
            py(0.0),
            w - r
        );
    }
    let _ = writeln!(
        out,
        r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - l - r,
        h - t - b
    );
    let _ = writeln!(out, r#"<text x="{l}" y="20" font-size="14">{title}</text>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12">{x_label}</text>"#,
        w / 2.0,
        h - 8.0
    );
    let _ = writeln!(out, r#"<text x="4" y="{}" font-size="11">{ymax:.3}</text>"#, t + 10.0);
    let _ = writeln!(out, r#"<text x="4" y="{}" font-size="11">{ymin:.3}</text>"#, h - b);
    let _ = writeln!(
        out,
        r#"<text x="{l}" y="{}" font-size="11">{xmin:.3}</text>"#,
        h - b + 14.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="11">{xmax:.3}</text>"#,
        w - r - 30.0,
        h - b + 14.0
    );
    for (k, s) in series.iter().enumerate() {
        let mut d = String::new();
        let mut pen_up = true;
        for (&x, &y) in s.x.iter().zip(s.y) {
            if !(x.is_finite() && y.is_finite()) {
                pen_up = true;
                continue;
            }
            let _ = write!(d, "{}{:.2},{:.2} ", if pen_up { "M" } else { "L" }, px(x), py(y));
            pen_up = false;
        }
        let _ = writeln!(
            out,
            r#"<path d="{d}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            s.colour
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="12" fill="{}">{}</text>"#,
            w - r - 120.0,
            t + 16.0 * (k + 1) as f64,
            s.colour,
            s.label
        );
    }
    out.push_str("</svg>\n");
    out
}
