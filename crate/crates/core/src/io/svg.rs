use std::fmt::Write as _;
use std::path::Path;

use super::{format_g, write_text, DataError};
use crate::spectra::SpectrumRecord;

/// Canvas size and labels of a curve plot.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveStyle {
    pub width: u32,
    pub height: u32,
    pub title: Option<String>,
    pub betti_color: String,
    pub lambda_color: String,
}

impl Default for CurveStyle {
    fn default() -> Self {
        CurveStyle {
            width: 640,
            height: 400,
            title: None,
            betti_color: "#1f4e9c".into(),
            lambda_color: "#c0392b".into(),
        }
    }
}

const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 70.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const TICKS: usize = 5;

struct Axis {
    lo: f64,
    hi: f64,
    from: f64,
    to: f64,
}

impl Axis {
    fn map(&self, v: f64) -> f64 {
        if self.hi == self.lo {
            (self.from + self.to) / 2.0
        } else {
            self.from + (v - self.lo) / (self.hi - self.lo) * (self.to - self.from)
        }
    }
}

/// Dual-axis plot: Betti number as a step curve on the left axis and the
/// smallest non-zero eigenvalue as a line on the right axis, both against α.
/// Records must share one `q`. Missing eigenvalues break the line.
pub fn curves_svg(records: &[SpectrumRecord], style: &CurveStyle) -> Result<String, DataError> {
    if let Some(first) = records.first() {
        if let Some(other) = records.iter().find(|r| r.q != first.q) {
            return Err(DataError::MixedOrders { first: first.q, other: other.q });
        }
    }
    let mut recs: Vec<&SpectrumRecord> = records.iter().collect();
    recs.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));

    let (w, h) = (style.width as f64, style.height as f64);
    let (left, right, top, bottom) = (MARGIN_LEFT, w - MARGIN_RIGHT, MARGIN_TOP, h - MARGIN_BOTTOM);
    let x = Axis {
        lo: recs.first().map_or(0.0, |r| r.alpha),
        hi: recs.last().map_or(1.0, |r| r.alpha),
        from: left,
        to: right,
    };
    let betti_max = recs.iter().map(|r| r.betti).max().unwrap_or(0).max(1) as f64;
    let yb = Axis { lo: 0.0, hi: betti_max, from: bottom, to: top };
    let lambda_max = recs.iter().filter_map(|r| r.lambda_min_nonzero).fold(0.0_f64, f64::max);
    let yl = Axis { lo: 0.0, hi: if lambda_max > 0.0 { lambda_max } else { 1.0 }, from: bottom, to: top };

    let mut s = String::new();
    let q = recs.first().map_or(String::from("q"), |r| r.q.to_string());
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">"#,
        style.width, style.height, style.width, style.height
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    if let Some(title) = &style.title {
        writeln!(s, r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title)).unwrap();
    }
    writeln!(
        s,
        r#"<path d="M{left:.2} {top:.2}V{bottom:.2}H{right:.2}V{top:.2}" fill="none" stroke="black"/>"#
    )
    .unwrap();

    for k in 0..=TICKS {
        let t = k as f64 / TICKS as f64;
        let xv = x.lo + t * (x.hi - x.lo);
        let px = x.map(xv);
        writeln!(s, r#"<line x1="{px:.2}" y1="{bottom:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, bottom + 4.0).unwrap();
        writeln!(s, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, bottom + 18.0, format_g(round3(xv))).unwrap();
        let lv = yl.lo + t * (yl.hi - yl.lo);
        let py = yl.map(lv);
        writeln!(s, r#"<line x1="{right:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="{}"/>"#, right + 4.0, style.lambda_color).unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" fill="{}">{}</text>"#,
            right + 7.0,
            py + 4.0,
            style.lambda_color,
            format_g(round3(lv))
        )
        .unwrap();
    }
    let betti_step = (betti_max / TICKS as f64).ceil().max(1.0) as usize;
    for b in (0..=betti_max as usize).step_by(betti_step) {
        let py = yb.map(b as f64);
        writeln!(s, r#"<line x1="{:.2}" y1="{py:.2}" x2="{left:.2}" y2="{py:.2}" stroke="{}"/>"#, left - 4.0, style.betti_color).unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" fill="{}">{b}</text>"#,
            left - 7.0,
            py + 4.0,
            style.betti_color
        )
        .unwrap();
    }
    writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">alpha</text>"#, (left + right) / 2.0, h - 10.0).unwrap();
    writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" fill="{}" transform="rotate(-90 15 {:.2})">betti_{q}</text>"#,
        (top + bottom) / 2.0,
        style.betti_color,
        (top + bottom) / 2.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" fill="{}" transform="rotate(90 {:.2} {:.2})">lambda_{q}</text>"#,
        w - 12.0,
        (top + bottom) / 2.0,
        style.lambda_color,
        w - 12.0,
        (top + bottom) / 2.0
    )
    .unwrap();

    if let Some(first) = recs.first() {
        let mut d = format!("M{:.2} {:.2}", x.map(first.alpha), yb.map(first.betti as f64));
        for r in &recs[1..] {
            write!(d, "H{:.2}V{:.2}", x.map(r.alpha), yb.map(r.betti as f64)).unwrap();
        }
        if recs.len() == 1 {
            write!(d, "h0.01").unwrap();
        }
        writeln!(s, r#"<path class="betti" d="{d}" fill="none" stroke="{}" stroke-width="2"/>"#, style.betti_color).unwrap();
    }

    let mut d = String::new();
    let mut pen_down = false;
    for r in &recs {
        match r.lambda_min_nonzero {
            Some(l) => {
                write!(d, "{}{:.2} {:.2}", if pen_down { "L" } else { "M" }, x.map(r.alpha), yl.map(l)).unwrap();
                pen_down = true;
            }
            None => pen_down = false,
        }
    }
    if !d.is_empty() {
        writeln!(s, r#"<path class="lambda" d="{d}" fill="none" stroke="{}" stroke-width="1.5"/>"#, style.lambda_color).unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_curves_svg(records: &[SpectrumRecord], path: impl AsRef<Path>, style: &CurveStyle) -> Result<(), DataError> {
    write_text(path.as_ref(), &curves_svg(records, style)?)
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
