//! Standalone SVG ROC plot.

use std::fmt::Write;

const SIZE: f64 = 400.0;
const MARGIN: f64 = 50.0;

fn px(v: f64) -> f64 {
    MARGIN + v * SIZE
}

fn py(v: f64) -> f64 {
    MARGIN + (1.0 - v) * SIZE
}

/// ROC curve through `points` (FPR, TPR) with the chance diagonal.
pub fn roc_svg(title: &str, auc: f64, points: &[(f64, f64)]) -> String {
    let w = SIZE + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{w}" viewBox="0 0 {w} {w}">"#);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{w}" fill="white"/>"#);
    let _ =
        writeln!(s, r#"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{t:.2}</text>"#,
            px(t),
            py(0.0) + 16.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{t:.2}</text>"#,
            px(0.0) - 6.0,
            py(t) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#999" stroke-dasharray="4 4"/>"##,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    let mut path = String::new();
    for &(x, y) in points {
        let _ = write!(path, "{:.2},{:.2} ", px(x), py(y));
    }
    let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#c0392b" stroke-width="2"/>"##, path.trim_end());
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="30" font-size="14" text-anchor="middle">{} (AUC = {auc:.4})</text>"#,
        w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">False positive rate</text>"#,
        w / 2.0,
        w - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.1})">True positive rate</text>"#,
        w / 2.0,
        w / 2.0
    );
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
