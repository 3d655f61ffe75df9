//! Minimal SVG polar plot of one or more patterns, dB radial axis.

use std::fmt::Write as _;

use crate::farfield::RadiationPattern;

pub const CANVAS: f64 = 800.0;
pub const FLOOR_DB: f64 = -40.0;
const RADIUS: f64 = 340.0;
const COLORS: [&str; 9] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf",
];

fn point(db: f64, deg: f64) -> (f64, f64) {
    let r = RADIUS * (db.max(FLOOR_DB) - FLOOR_DB) / -FLOOR_DB;
    let a = deg.to_radians();
    (CANVAS / 2.0 + r * a.cos(), CANVAS / 2.0 - r * a.sin())
}

/// Patterns are drawn relative to the strongest peak among them, so
/// directivity differences between beams stay visible.
pub fn polar_svg(patterns: &[(String, &RadiationPattern)], title: &str) -> String {
    let mut s = String::new();
    let c = CANVAS / 2.0;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 {0} {0}">"#,
        CANVAS
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{c}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        escape(title)
    );
    for k in 0..=4 {
        let db = FLOOR_DB * k as f64 / 4.0;
        let r = RADIUS * (db - FLOOR_DB) / -FLOOR_DB;
        let _ = writeln!(s, r##"<circle cx="{c}" cy="{c}" r="{r:.2}" fill="none" stroke="#ccc"/>"##);
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="#666">{db:.0} dB</text>"##,
            c + 3.0,
            c - r - 2.0
        );
    }
    for k in 0..12 {
        let deg = 30.0 * k as f64;
        let (x, y) = point(0.0, deg);
        let _ = writeln!(s, r##"<line x1="{c}" y1="{c}" x2="{x:.2}" y2="{y:.2}" stroke="#eee"/>"##);
        let (tx, ty) = point(2.5, deg);
        let _ = writeln!(
            s,
            r#"<text x="{tx:.2}" y="{ty:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{deg:.0}°</text>"#
        );
    }

    let peak_abs = patterns
        .iter()
        .flat_map(|(_, p)| p.amplitude.iter().map(move |a| a.norm_sqr() * p.absolute_scale))
        .fold(0.0, f64::max);
    for (k, (label, p)) in patterns.iter().enumerate() {
        let mut d = String::new();
        for (i, a) in p.amplitude.iter().enumerate() {
            let v = a.norm_sqr() * p.absolute_scale / peak_abs;
            let db = if v > 0.0 { 10.0 * v.log10() } else { FLOOR_DB };
            let (x, y) = point(db, p.angle(i));
            let _ = write!(d, "{}{x:.2},{y:.2} ", if i == 0 { "M" } else { "L" });
        }
        d.push('Z');
        let color = COLORS[k % COLORS.len()];
        let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.2"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="12" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#,
            48 + 16 * k,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::farfield::Engine;
    use num_complex::Complex64;

    #[test]
    fn overlay_is_well_formed() {
        let a = RadiationPattern::from_fn(1.0, Engine::Analytic, |x| Complex64::new(x.to_radians().cos().abs(), 0.0)).unwrap();
        let b = a.rotated(30);
        let svg = polar_svg(&[("F1".into(), &a), ("F2 <b>".into(), &b)], "test");
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(svg.contains("F2 &lt;b&gt;"));
        assert!(svg.contains(r#"width="800""#));
        assert_eq!(svg, polar_svg(&[("F1".into(), &a), ("F2 <b>".into(), &b)], "test"));
    }
}
