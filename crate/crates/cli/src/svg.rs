//! Minimal line plots as standalone SVG.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 60.0;

pub struct Series {
    pub label: String,
    pub colour: &'static str,
    pub points: Vec<(f64, f64)>,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Same scale on both axes (orbits).
    pub equal_aspect: bool,
    pub series: Vec<Series>,
    pub notes: Vec<String>,
}

fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let mut b = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for s in series {
        for &(x, y) in &s.points {
            b.0 = b.0.min(x);
            b.1 = b.1.max(x);
            b.2 = b.2.min(y);
            b.3 = b.3.max(y);
        }
    }
    if b.0 == b.1 {
        b.0 -= 0.5;
        b.1 += 0.5;
    }
    if b.2 == b.3 {
        b.2 -= 0.5;
        b.3 += 0.5;
    }
    b
}

/// Round tick spacing giving roughly five ticks over `span`.
fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    mag * if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    }
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    format!("{v:.decimals$}")
}

impl Plot {
    pub fn render(&self) -> String {
        let (mut x0, mut x1, mut y0, mut y1) = bounds(&self.series);
        let (pw, ph) = (W - 2.0 * MARGIN, H - 2.0 * MARGIN);
        if self.equal_aspect {
            let scale = ((x1 - x0) / pw).max((y1 - y0) / ph);
            let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
            x0 = cx - scale * pw / 2.0;
            x1 = cx + scale * pw / 2.0;
            y0 = cy - scale * ph / 2.0;
            y1 = cy + scale * ph / 2.0;
        }
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * ph;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            W / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );

        let step = tick_step(x1 - x0);
        let mut t = (x0 / step).ceil() * step;
        while t <= x1 + 1e-9 * step {
            let _ = writeln!(
                out,
                r#"<line x1="{0:.2}" y1="{1}" x2="{0:.2}" y2="{2}" stroke="black"/><text x="{0:.2}" y="{3}" text-anchor="middle">{4}</text>"#,
                sx(t),
                H - MARGIN,
                H - MARGIN + 5.0,
                H - MARGIN + 18.0,
                fmt_tick(t, step)
            );
            t += step;
        }
        let step = tick_step(y1 - y0);
        let mut t = (y0 / step).ceil() * step;
        while t <= y1 + 1e-9 * step {
            let _ = writeln!(
                out,
                r#"<line x1="{0}" y1="{2:.2}" x2="{1}" y2="{2:.2}" stroke="black"/><text x="{3}" y="{4:.2}" text-anchor="end">{5}</text>"#,
                MARGIN - 5.0,
                MARGIN,
                sy(t),
                MARGIN - 8.0,
                sy(t) + 4.0,
                fmt_tick(t, step)
            );
            t += step;
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            W / 2.0,
            H - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            H / 2.0,
            escape(&self.y_label)
        );

        for (i, s) in self.series.iter().enumerate() {
            let mut pts = String::new();
            for &(x, y) in &s.points {
                let _ = write!(pts, "{:.2},{:.2} ", sx(x), sy(y));
            }
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.2" points="{}"/>"#,
                s.colour,
                pts.trim_end()
            );
            let ly = MARGIN + 16.0 + 16.0 * i as f64;
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{ly}" fill="{}">{}</text>"#,
                MARGIN + 8.0,
                s.colour,
                escape(&s.label)
            );
        }
        for (i, n) in self.notes.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                W - MARGIN - 8.0,
                MARGIN + 16.0 + 16.0 * i as f64,
                escape(n)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
