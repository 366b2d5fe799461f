//! Static SVG figures: coefficient heatmaps and error plots.

use std::fmt::Write;

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Diverging blue–white–red on `[-limit, limit]`, clipped outside.
fn diverging(v: f64, limit: f64) -> String {
    let t = if limit > 0.0 { (v / limit).clamp(-1.0, 1.0) } else { 0.0 };
    let fade = |t: f64| (255.0 * (1.0 - t.abs())).round() as u8;
    let (r, g, b) = if t >= 0.0 {
        (255, fade(t), fade(t))
    } else {
        (fade(t), fade(t), 255)
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Side-by-side heatmaps of coefficient vectors laid out `cols` per row, on a
/// shared linear color scale clipped to `±limit`.
pub fn heatmap_panels(panels: &[(&str, &[f64])], cols: usize, limit: f64) -> String {
    let cols = cols.max(1);
    let cell = 18.0;
    let p = panels.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    let rows = p.div_ceil(cols).max(1);
    let panel_w = cols as f64 * cell;
    let panel_h = rows as f64 * cell;
    let gap = 30.0;
    let width = panels.len() as f64 * (panel_w + gap) + gap;
    let height = panel_h + 90.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="12">"#
    );
    for (k, (title, values)) in panels.iter().enumerate() {
        let x0 = gap + k as f64 * (panel_w + gap);
        let y0 = 40.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="25" text-anchor="middle">{}</text>"#,
            x0 + panel_w / 2.0,
            escape(title)
        );
        for (j, &v) in values.iter().enumerate() {
            let (r, c) = (j / cols, j % cols);
            let _ = writeln!(
                s,
                r##"<rect x="{:.1}" y="{:.1}" width="{cell:.0}" height="{cell:.0}" fill="{}" stroke="#999" stroke-width="0.5"><title>{} {}: {:.4}</title></rect>"##,
                x0 + c as f64 * cell,
                y0 + r as f64 * cell,
                diverging(v, limit),
                escape(title),
                j + 1,
                v
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{gap:.0}" y="{:.0}">linear color scale, blue −{limit:.3} to red +{limit:.3}, clipped</text>"#,
        height - 15.0
    );
    s.push_str("</svg>\n");
    s
}

pub struct Series {
    pub name: String,
    /// `(x, y, half-width of the error bar)`.
    pub points: Vec<(f64, f64, f64)>,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_axes: bool,
    pub series: Vec<Series>,
    /// Extra straight segment in data coordinates, drawn dashed.
    pub reference: Option<((f64, f64), (f64, f64))>,
}

impl Plot {
    pub fn render(&self) -> String {
        let (w, h) = (640.0, 420.0);
        let (left, right, top, bottom) = (70.0, 160.0, 40.0, 50.0);
        let tf = |v: f64| if self.log_axes { v.max(1e-300).log10() } else { v };
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for s in &self.series {
            for &(x, y, e) in &s.points {
                xs.push(tf(x));
                ys.push(tf(if self.log_axes { y } else { y + e }));
                ys.push(tf(if self.log_axes { y } else { y - e }));
            }
        }
        if let Some((a, b)) = self.reference {
            ys.push(tf(a.1));
            ys.push(tf(b.1));
        }
        let range = |v: &[f64]| {
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !lo.is_finite() || !hi.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        let (x_lo, x_hi) = range(&xs);
        let (y_lo, y_hi) = range(&ys);
        let px = |x: f64| left + (tf(x) - x_lo) / (x_hi - x_lo) * (w - left - right);
        let py = |y: f64| h - bottom - (tf(y) - y_lo) / (y_hi - y_lo) * (h - top - bottom);

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            (left + w - right) / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{left:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
            w - left - right,
            h - top - bottom
        );
        for k in 0..=4 {
            let fx = x_lo + (x_hi - x_lo) * k as f64 / 4.0;
            let fy = y_lo + (y_hi - y_lo) * k as f64 / 4.0;
            let (vx, vy) = if self.log_axes {
                (10f64.powf(fx), 10f64.powf(fy))
            } else {
                (fx, fy)
            };
            let gx = left + (w - left - right) * k as f64 / 4.0;
            let gy = h - bottom - (h - top - bottom) * k as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{gx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                h - bottom + 16.0,
                tick(vx)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                left - 6.0,
                gy + 4.0,
                tick(vy)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            (left + w - right) / 2.0,
            h - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            (top + h - bottom) / 2.0,
            (top + h - bottom) / 2.0,
            escape(&self.y_label)
        );
        for (k, series) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let path: Vec<String> = series
                .points
                .iter()
                .map(|&(x, y, _)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                path.join(" ")
            );
            for &(x, y, e) in &series.points {
                if e > 0.0 && !self.log_axes {
                    let _ = writeln!(
                        s,
                        r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="{color}"/>"#,
                        px(x),
                        py(y - e),
                        py(y + e)
                    );
                }
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                    px(x),
                    py(y)
                );
            }
            let ly = top + 16.0 + 18.0 * k as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="12" height="12" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                w - right + 12.0,
                ly - 10.0,
                w - right + 30.0,
                ly,
                escape(&series.name)
            );
        }
        if let Some((a, b)) = self.reference {
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#555" stroke-dasharray="5,4"/>"##,
                px(a.0),
                py(a.1),
                px(b.0),
                py(b.1)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}
