use std::fmt::Write;

use sdp_core::Scalar;
use sdp_geometry::Point;

const SIZE: f64 = 400.0;
const PAD: f64 = 40.0;

fn xy(p: &[f64]) -> (f64, f64) {
    (PAD + p[0] * SIZE, PAD + (1.0 - p[1]) * SIZE)
}

/// Outline of a downward closed set in the unit square:
/// the vertices sorted by `x`, closed along both axes.
fn outline(points: &[Vec<f64>]) -> String {
    let mut ps = points.to_vec();
    ps.sort_by(|a, b| a[0].partial_cmp(&b[0]).expect("finite"));
    let mut path = Vec::new();
    path.push(vec![0.0, 0.0]);
    if let Some(first) = ps.first() {
        path.push(vec![0.0, first[1]]);
    }
    path.extend(ps.iter().cloned());
    if let Some(last) = ps.last() {
        path.push(vec![last[0], 0.0]);
    }
    path.iter()
        .map(|p| {
            let (x, y) = xy(p);
            format!("{x:.2},{y:.2}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Lower set filled, upper set outlined.
pub fn plot<T: Scalar>(lower: &[Point<T>], upper: &[Point<T>]) -> String {
    let f = |ps: &[Point<T>]| -> Vec<Vec<f64>> {
        ps.iter().map(|p| p.iter().map(Scalar::to_f64).collect()).collect()
    };
    let (lo, up) = (f(lower), f(upper));
    let full = SIZE + 2.0 * PAD;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{full}" height="{full}" viewBox="0 0 {full} {full}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r##"<polygon points="{}" fill="#cfe8cf" stroke="none"/>"##,
        outline(&up)
    );
    let _ = writeln!(
        s,
        r##"<polygon points="{}" fill="#3a7d44" fill-opacity="0.7" stroke="#1e4d26"/>"##,
        outline(&lo)
    );
    for p in &lo {
        let (x, y) = xy(p);
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="black"/>"#);
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12">exit 1</text>"#,
        PAD + SIZE - 30.0,
        PAD + SIZE + 25.0
    );
    let _ = writeln!(s, r#"<text x="5" y="{}" font-size="12">exit 2</text>"#, PAD - 10.0);
    s.push_str("</svg>\n");
    s
}
