//! Deterministic SVG output: radar fingerprints and the PC1/PC2 scatter.

use std::fmt::Write;

use crate::atlas::{PoetProfile, Projection};
use crate::error::{Error, Result};
use crate::metrics::MetricKind;

pub const FINGERPRINTS_PER_PAGE: usize = 12;

const PALETTE: [&str; 12] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2", "#bcbd22", "#7f7f7f",
    "#393b79", "#637939",
];

const COLS: usize = 4;
const CELL_W: f64 = 240.0;
const CELL_H: f64 = 250.0;
const RADIUS: f64 = 80.0;
const HEADER: f64 = 40.0;
const FOOTER: f64 = 50.0;

/// Fixed-precision number with no negative zero.
fn num(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Position of `value` on axis `k` of a radar centered at (cx, cy).
pub fn radar_point(cx: f64, cy: f64, k: usize, value: f64) -> (f64, f64) {
    let angle = -std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::TAU / MetricKind::ALL.len() as f64;
    (cx + value * RADIUS * angle.cos(), cy + value * RADIUS * angle.sin())
}

fn radar(out: &mut String, p: &PoetProfile, cx: f64, cy: f64, color: &str) -> bool {
    let axes = MetricKind::ALL.len();
    for ring in [0.25, 0.5, 0.75, 1.0] {
        let pts: Vec<String> = (0..axes)
            .map(|k| {
                let (x, y) = radar_point(cx, cy, k, ring);
                format!("{},{}", num(x), num(y))
            })
            .collect();
        let _ = writeln!(
            out,
            r##"<polygon class="grid" points="{}" fill="none" stroke="#dddddd" stroke-width="0.8"/>"##,
            pts.join(" ")
        );
    }
    for (k, m) in MetricKind::ALL.iter().enumerate() {
        let (x, y) = radar_point(cx, cy, k, 1.0);
        let (lx, ly) = radar_point(cx, cy, k, 1.18);
        let _ = writeln!(
            out,
            r##"<line class="axis" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#999999" stroke-width="0.8"/>"##,
            num(cx),
            num(cy),
            num(x),
            num(y)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="9" text-anchor="middle" dominant-baseline="middle">{}</text>"#,
            num(lx),
            num(ly),
            m.label()
        );
    }
    let mut missing = false;
    let pts: Vec<String> = p
        .normalized
        .iter()
        .enumerate()
        .map(|(k, v)| {
            missing |= v.is_none();
            let (x, y) = radar_point(cx, cy, k, v.unwrap_or(0.0).clamp(0.0, 1.0));
            format!("{},{}", num(x), num(y))
        })
        .collect();
    let _ = writeln!(
        out,
        r#"<polygon class="profile" data-poet="{}" points="{}" fill="{color}" fill-opacity="0.25" stroke="{color}" stroke-width="1.5"/>"#,
        escape(&p.poet_id),
        pts.join(" ")
    );
    for (k, v) in p.normalized.iter().enumerate() {
        if v.is_none() {
            let (x, y) = radar_point(cx, cy, k, 0.08);
            let _ = writeln!(
                out,
                r##"<circle class="missing" cx="{}" cy="{}" r="3.5" fill="none" stroke="#d62728" stroke-width="1.2"/>"##,
                num(x),
                num(y)
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle" font-weight="bold">{}</text>"#,
        num(cx),
        num(cy - RADIUS - 28.0),
        escape(&p.poet_id)
    );
    missing
}

/// Radar charts on the shared 0-1 scale, `per_page` to a page.
pub fn render_fingerprint(profiles: &[PoetProfile], per_page: usize) -> Result<Vec<String>> {
    if per_page == 0 || per_page > FINGERPRINTS_PER_PAGE {
        return Err(Error::Config(format!(
            "fingerprints per page must be 1..={FINGERPRINTS_PER_PAGE}, got {per_page}"
        )));
    }
    if profiles.is_empty() {
        return Err(Error::Invalid("no profiles to render".into()));
    }
    let pages = profiles.len().div_ceil(per_page);
    let mut out = Vec::with_capacity(pages);
    for (page, chunk) in profiles.chunks(per_page).enumerate() {
        let cols = COLS.min(chunk.len());
        let rows = chunk.len().div_ceil(COLS);
        let width = cols as f64 * CELL_W;
        let height = HEADER + rows as f64 * CELL_H + FOOTER;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
            num(width),
            num(height),
            num(width),
            num(height)
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="12" y="24" font-size="14">Phonetic fingerprints, page {} of {}</text>"#,
            page + 1,
            pages
        );
        let mut any_missing = false;
        for (i, p) in chunk.iter().enumerate() {
            let cx = (i % COLS) as f64 * CELL_W + CELL_W / 2.0;
            let cy = HEADER + (i / COLS) as f64 * CELL_H + CELL_H / 2.0 + 10.0;
            let color = PALETTE[(page * per_page + i) % PALETTE.len()];
            let _ = writeln!(s, r#"<g class="fingerprint" data-poet="{}">"#, escape(&p.poet_id));
            any_missing |= radar(&mut s, p, cx, cy, color);
            let _ = writeln!(s, "</g>");
        }
        let mut legend = String::from("Axes: ");
        legend.push_str(&MetricKind::ALL.iter().map(|m| m.label()).collect::<Vec<_>>().join(", "));
        legend.push_str("; radial scale 0 to 1 shared across poets.");
        let _ = writeln!(
            s,
            r#"<text class="legend" x="12" y="{}" font-size="10">{}</text>"#,
            num(height - 28.0),
            legend
        );
        if any_missing {
            let _ = writeln!(
                s,
                r##"<text class="legend-missing" x="12" y="{}" font-size="10" fill="#d62728">Red ring: value missing, drawn at 0.</text>"##,
                num(height - 12.0)
            );
        }
        s.push_str("</svg>\n");
        out.push(s);
    }
    Ok(out)
}

/// Affine map from PC space onto the plot rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewport {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
}

impl Viewport {
    pub fn fit(points: &[(f64, f64)], left: f64, top: f64, width: f64, height: f64) -> Self {
        let range = |vals: Vec<f64>| {
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !lo.is_finite() {
                (-1.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 1.0, hi + 1.0)
            } else {
                let pad = 0.08 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        Viewport {
            x_range: range(points.iter().map(|p| p.0).collect()),
            y_range: range(points.iter().map(|p| p.1).collect()),
            left,
            top,
            width,
            height,
        }
    }

    pub fn to_px(&self, x: f64, y: f64) -> (f64, f64) {
        let fx = (x - self.x_range.0) / (self.x_range.1 - self.x_range.0);
        let fy = (y - self.y_range.0) / (self.y_range.1 - self.y_range.0);
        (self.left + fx * self.width, self.top + (1.0 - fy) * self.height)
    }

    pub fn from_px(&self, px: f64, py: f64) -> (f64, f64) {
        let fx = (px - self.left) / self.width;
        let fy = 1.0 - (py - self.top) / self.height;
        (
            self.x_range.0 + fx * (self.x_range.1 - self.x_range.0),
            self.y_range.0 + fy * (self.y_range.1 - self.y_range.0),
        )
    }
}

pub const SPACE_WIDTH: f64 = 760.0;
pub const SPACE_HEIGHT: f64 = 540.0;

/// The viewport [`render_space`] uses for `projection`.
pub fn space_viewport(projection: &Projection) -> Viewport {
    let pts: Vec<(f64, f64)> = projection.coordinates.iter().map(|c| projection.pc(&c.poet_id).unwrap()).collect();
    Viewport::fit(&pts, 60.0, 40.0, 480.0, 440.0)
}

/// PC1/PC2 scatter: grey field points, colored labelled highlights and a
/// legend to the right of the plot area.
pub fn render_space(projection: &Projection, highlight: &[String]) -> String {
    let vp = space_viewport(projection);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        num(SPACE_WIDTH),
        num(SPACE_HEIGHT),
        num(SPACE_WIDTH),
        num(SPACE_HEIGHT)
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<rect class="plot" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#444444"/>"##,
        num(vp.left),
        num(vp.top),
        num(vp.width),
        num(vp.height)
    );
    let (zx, zy) = vp.to_px(0.0, 0.0);
    if (vp.left..=vp.left + vp.width).contains(&zx) {
        let _ = writeln!(
            s,
            r##"<line class="zero" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#cccccc" stroke-dasharray="4 3"/>"##,
            num(zx),
            num(vp.top),
            num(zx),
            num(vp.top + vp.height)
        );
    }
    if (vp.top..=vp.top + vp.height).contains(&zy) {
        let _ = writeln!(
            s,
            r##"<line class="zero" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#cccccc" stroke-dasharray="4 3"/>"##,
            num(vp.left),
            num(zy),
            num(vp.left + vp.width),
            num(zy)
        );
    }
    let ratio = |i: usize| projection.explained_variance_ratio.get(i).copied().unwrap_or(0.0) * 100.0;
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">PC1 ({:.1}%)</text>"#,
        num(vp.left + vp.width / 2.0),
        num(vp.top + vp.height + 32.0),
        ratio(0)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 18 {})">PC2 ({:.1}%)</text>"#,
        num(vp.top + vp.height / 2.0),
        num(vp.top + vp.height / 2.0),
        ratio(1)
    );

    let focal: Vec<&String> = highlight
        .iter()
        .filter(|h| projection.coordinates.iter().any(|c| &c.poet_id == *h))
        .collect();
    for c in projection.coordinates.iter().filter(|c| !focal.contains(&&c.poet_id)) {
        let (x, y) = projection.pc(&c.poet_id).unwrap();
        let (px, py) = vp.to_px(x, y);
        let _ = writeln!(
            s,
            r##"<circle class="field" data-poet="{}" cx="{}" cy="{}" r="3.5" fill="#b5b5b5"/>"##,
            escape(&c.poet_id),
            num(px),
            num(py)
        );
    }
    for (i, poet) in focal.iter().enumerate() {
        let (x, y) = projection.pc(poet).unwrap();
        let (px, py) = vp.to_px(x, y);
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<circle class="focal" data-poet="{}" cx="{}" cy="{}" r="5" fill="{color}"/>"#,
            escape(poet),
            num(px),
            num(py)
        );
        let _ = writeln!(
            s,
            r#"<text class="label" x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            num(px + 7.0),
            num(py - 6.0),
            escape(poet)
        );
    }

    let lx = vp.left + vp.width + 30.0;
    let _ = writeln!(s, r#"<g class="legend">"#);
    let _ = writeln!(
        s,
        r##"<circle cx="{}" cy="{}" r="3.5" fill="#b5b5b5"/><text x="{}" y="{}" font-size="11">other poets</text>"##,
        num(lx),
        num(vp.top + 10.0),
        num(lx + 10.0),
        num(vp.top + 14.0)
    );
    for (i, poet) in focal.iter().enumerate() {
        let y = vp.top + 30.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<circle cx="{}" cy="{}" r="5" fill="{}"/><text x="{}" y="{}" font-size="11">{}</text>"#,
            num(lx),
            num(y),
            PALETTE[i % PALETTE.len()],
            num(lx + 10.0),
            num(y + 4.0),
            escape(poet)
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::PoetCoordinates;

    fn profile(id: &str, v: f64) -> PoetProfile {
        PoetProfile {
            poet_id: id.into(),
            raw: vec![Some(v); 6],
            normalized: vec![Some(v); 6],
            n_mesras: 1,
            n_poems: 1,
        }
    }

    fn attr<'a>(el: &'a str, name: &str) -> &'a str {
        let key = format!(" {name}=\"");
        let start = el.find(&key).unwrap() + key.len();
        &el[start..start + el[start..].find('"').unwrap()]
    }

    #[test]
    fn half_profile_is_regular_hexagon() {
        let page = &render_fingerprint(&[profile("a", 0.5)], 12).unwrap()[0];
        let poly = page.lines().find(|l| l.contains(r#"class="profile""#)).unwrap();
        let pts: Vec<(f64, f64)> = attr(poly, "points")
            .split(' ')
            .map(|p| {
                let (x, y) = p.split_once(',').unwrap();
                (x.parse().unwrap(), y.parse().unwrap())
            })
            .collect();
        let (cx, cy) = (CELL_W / 2.0, HEADER + CELL_H / 2.0 + 10.0);
        for &(x, y) in &pts {
            let r = ((x - cx).powi(2) + (y - cy).powi(2)).sqrt();
            assert!((r - RADIUS / 2.0).abs() < 2e-3, "{r}");
        }
        for w in pts.windows(2) {
            let side = ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt();
            assert!((side - RADIUS / 2.0).abs() < 3e-3);
        }
    }

    #[test]
    fn pagination_and_missing_marker() {
        let mut ps: Vec<_> = (0..83).map(|i| profile(&format!("p{i:02}"), 0.3)).collect();
        assert_eq!(render_fingerprint(&ps, 12).unwrap().len(), 7);
        ps[0].normalized[2] = None;
        let first = &render_fingerprint(&ps, 12).unwrap()[0];
        assert!(first.contains(r#"class="missing""#) && first.contains("legend-missing"));
        assert!(render_fingerprint(&ps, 13).is_err());
    }

    #[test]
    fn scatter_parse_back() {
        let proj = Projection {
            metrics: MetricKind::ALL.to_vec(),
            means: vec![],
            sds: vec![],
            eigenvalues: vec![2.0, 1.0],
            explained_variance_ratio: vec![0.6, 0.3],
            loadings: vec![],
            coordinates: (0..6)
                .map(|i| PoetCoordinates {
                    poet_id: format!("p<{i}>"),
                    scores: vec![i as f64 * 0.7 - 1.3, (i as f64).sin()],
                })
                .collect(),
            excluded_poets: vec![],
            warnings: vec![],
        };
        let svg = render_space(&proj, &["p<2>".to_string()]);
        let vp = space_viewport(&proj);
        let circles: Vec<&str> = svg.lines().filter(|l| l.contains("data-poet")).collect();
        assert_eq!(circles.len(), 6);
        assert!(svg.contains("p&lt;2&gt;"));
        for c in &circles {
            let id = attr(c, "data-poet").replace("&lt;", "<").replace("&gt;", ">");
            let (x, y) = proj.pc(&id).unwrap();
            let (ex, ey) = vp.to_px(x, y);
            let (px, py): (f64, f64) = (attr(c, "cx").parse().unwrap(), attr(c, "cy").parse().unwrap());
            assert!((px - ex).abs() <= 0.5 && (py - ey).abs() <= 0.5);
            let (bx, by) = vp.from_px(ex, ey);
            assert!((bx - x).abs() < 1e-9 && (by - y).abs() < 1e-9);
        }
        assert_eq!(svg, render_space(&proj, &["p<2>".to_string()]));
        assert!(!render_space(&proj, &[]).contains(r#"class="focal""#));
    }
}
