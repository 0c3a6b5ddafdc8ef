//! Self-contained SVG line plots of the two strategies.

use std::fmt::Write;

use crate::format::num;

pub struct Series {
    pub label: String,
    pub dashed: bool,
    /// `(θ, a)`; non-finite `a` breaks the line
    pub points: Vec<(f64, f64)>,
}

pub struct Plot {
    pub title: String,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub series: Vec<Series>,
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn coord(x: f64) -> String {
    format!("{x:.2}")
}

impl Plot {
    fn sx(&self, x: f64) -> f64 {
        let (a, b) = self.x_range;
        LEFT + (x - a) / (b - a) * (W - LEFT - RIGHT)
    }

    fn sy(&self, y: f64) -> f64 {
        let (a, b) = self.y_range;
        let v = H - BOTTOM - (y - a) / (b - a) * (H - TOP - BOTTOM);
        // far outside the frame the clip path hides it anyway
        v.clamp(-10.0 * H, 10.0 * H)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let (x0, y0) = (LEFT, H - BOTTOM);
        let (x1, y1) = (W - RIGHT, TOP);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="serif" font-size="14">"#
        );
        let _ = writeln!(
            s,
            r#"<defs><clipPath id="frame"><rect x="{}" y="{}" width="{}" height="{}"/></clipPath></defs>"#,
            coord(x0),
            coord(y1),
            coord(x1 - x0),
            coord(y0 - y1)
        );
        let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle">{}</text>"#, coord(W / 2.0), esc(&self.title));
        // axes
        let _ = writeln!(
            s,
            r#"<path d="M{} {} L{} {} M{} {} L{} {}" stroke="black" stroke-width="1" fill="none"/>"#,
            coord(x0),
            coord(y0),
            coord(x1),
            coord(y0),
            coord(x0),
            coord(y0),
            coord(x0),
            coord(y1)
        );
        for (v, anchor) in [(self.x_range.0, "start"), (self.x_range.1, "end")] {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="{anchor}" font-size="12">{}</text>"#,
                coord(self.sx(v)),
                coord(y0 + 18.0),
                num(v)
            );
        }
        for v in [self.y_range.0, self.y_range.1] {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end" font-size="12">{}</text>"#,
                coord(x0 - 6.0),
                coord(self.sy(v) + 4.0),
                num(v)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">Type θ</text>"#,
            coord((x0 + x1) / 2.0),
            coord(H - 18.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">Stopping point a_i</text>"#,
            coord((y0 + y1) / 2.0),
            coord((y0 + y1) / 2.0)
        );
        // curves
        let _ = writeln!(s, r#"<g clip-path="url(#frame)" fill="none" stroke="black">"#);
        for ser in &self.series {
            let style = if ser.dashed {
                r#"stroke-width="1.5" stroke-dasharray="6 4""#
            } else {
                r#"stroke-width="2""#
            };
            for run in ser.points.split(|p| !p.1.is_finite()).filter(|r| r.len() >= 2) {
                let pts: Vec<String> = run
                    .iter()
                    .map(|&(x, y)| format!("{},{}", coord(self.sx(x)), coord(self.sy(y))))
                    .collect();
                let _ = writeln!(s, r#"<polyline {style} points="{}"/>"#, pts.join(" "));
            }
        }
        let _ = writeln!(s, "</g>");
        // legend, top left
        for (i, ser) in self.series.iter().enumerate() {
            let y = TOP + 18.0 + 20.0 * i as f64;
            let dash = if ser.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black" stroke-width="1.5"{dash}/>"#,
                coord(x0 + 12.0),
                coord(y),
                coord(x0 + 42.0),
                coord(y)
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-size="12">{}</text>"#,
                coord(x0 + 48.0),
                coord(y + 4.0),
                esc(&ser.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_labels_and_breaks_at_infinity() {
        let p = Plot {
            title: "t".into(),
            x_range: (0.0, 1.0),
            y_range: (0.0, 1.0),
            series: vec![Series {
                label: "σ₂".into(),
                dashed: true,
                points: vec![(0.0, 0.0), (0.3, 0.2), (0.5, f64::INFINITY), (0.7, 0.5), (0.9, 0.6)],
            }],
        };
        let s = p.render();
        assert!(s.contains("Type θ") && s.contains("Stopping point a_i"));
        assert_eq!(s.matches("<polyline").count(), 2);
        assert!(!s.contains("http://") || s.matches("http://").count() == 1);
    }
}
