//! CSV and SVG renderings of decay curves.

use std::fmt::Write;

use super::fit::{DecayCurve, FitKind};

/// `t,tv,phi_tag` rows; floats use the shortest round-trip representation.
pub fn curve_csv(c: &DecayCurve) -> String {
    let mut s = String::from("t,tv,phi_tag\n");
    for (t, v) in c.times.iter().zip(&c.tv_values) {
        writeln!(s, "{t:?},{v:?},{}", c.phi_tag).unwrap();
    }
    s
}

/// Self-contained SVG line chart of the curve with its fit; logarithmic
/// ordinate, and logarithmic abscissa in `1 + t` for power fits.
pub fn curve_svg(c: &DecayCurve) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let loglog = c.fit.kind == FitKind::Power;
    let fx = |t: f64| if loglog { (1.0 + t).log10() } else { t };
    let pts: Vec<(f64, f64)> = c
        .times
        .iter()
        .zip(&c.tv_values)
        .filter(|(_, v)| **v > 0.0)
        .map(|(t, v)| (fx(*t), v.log10()))
        .collect();
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    if pts.is_empty() {
        writeln!(s, r#"<text x="{m}" y="{m}">no positive values</text></svg>"#).unwrap();
        return s;
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in &pts {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    y0 = y0.floor();
    y1 = y1.ceil().max(y0 + 1.0);
    let px = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let py = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    writeln!(
        s,
        r#"<path d="M{m} {m} V{} H{}" fill="none" stroke="black"/>"#,
        h - m,
        w - m
    )
    .unwrap();
    for e in (y0 as i32)..=(y1 as i32) {
        let y = py(e as f64);
        writeln!(
            s,
            r##"<path d="M{} {y:.2} H{}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">1e{e}</text>"##,
            m,
            w - m,
            m - 6.0,
            y + 4.0
        )
        .unwrap();
    }
    let mut d = String::new();
    for (i, (x, y)) in pts.iter().enumerate() {
        write!(d, "{}{:.2} {:.2} ", if i == 0 { "M" } else { "L" }, px(*x), py(*y)).unwrap();
    }
    writeln!(s, r##"<path d="{}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>"##, d.trim_end()).unwrap();
    if c.fit.kind != FitKind::None {
        let (a, b) = c.fit.t_range;
        let (ya, yb) = (c.fit.predict(a).log10(), c.fit.predict(b).log10());
        writeln!(
            s,
            r##"<path d="M{:.2} {:.2} L{:.2} {:.2}" stroke="#d62728" stroke-dasharray="6 4"/>"##,
            px(fx(a)),
            py(ya),
            px(fx(b)),
            py(yb)
        )
        .unwrap();
    }
    let xlabel = if loglog { "log10(1 + t)" } else { "t" };
    let fit = match c.fit.kind {
        FitKind::Exponential => format!("exponential fit, rate {:.4}", c.fit.rate_or_exponent),
        FitKind::Power => format!("power fit, exponent {:.4}", c.fit.rate_or_exponent),
        FitKind::None => "no fit".into(),
    };
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#,
        w / 2.0,
        h - 20.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{m}" y="30">weighted distance ({}), {fit}</text>"#,
        escape(&c.phi_tag)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{x0:.3}</text><text x="{}" y="{}" text-anchor="middle">{x1:.3}</text>"#,
        px(x0),
        h - m + 16.0,
        px(x1),
        h - m + 16.0
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
