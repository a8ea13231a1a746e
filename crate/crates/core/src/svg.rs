//! Minimal deterministic SVG chart writer for the report plots.
//!
//! Deliberately tiny: fixed canvas, fixed palette, five ticks per axis,
//! optional log scales. Output depends only on the plot contents, so
//! re-rendering identical data is byte-identical — the property the
//! report emitters are tested on.

use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 56.0;
const TICKS: usize = 5;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f",
];

#[derive(Clone, Debug)]
struct Series {
    name: String,
    points: Vec<(f64, f64)>,
    line: bool,
    markers: bool,
}

/// A single chart: title, axis labels, and any number of series.
#[derive(Clone, Debug)]
pub struct Plot {
    title: String,
    x_label: String,
    y_label: String,
    log_x: bool,
    log_y: bool,
    series: Vec<Series>,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            log_x: false,
            log_y: false,
            series: Vec::new(),
        }
    }

    /// Use log10 scales; every plotted coordinate must then be positive.
    pub fn log_log(mut self) -> Self {
        self.log_x = true;
        self.log_y = true;
        self
    }

    /// Connected polyline with point markers.
    pub fn line_series(mut self, name: &str, points: &[(f64, f64)]) -> Self {
        self.push(name, points, true, true);
        self
    }

    /// Markers only (scatter).
    pub fn scatter_series(mut self, name: &str, points: &[(f64, f64)]) -> Self {
        self.push(name, points, false, true);
        self
    }

    /// Line only, no markers — reference lines such as a roofline.
    pub fn ref_line(mut self, name: &str, points: &[(f64, f64)]) -> Self {
        self.push(name, points, true, false);
        self
    }

    fn push(&mut self, name: &str, points: &[(f64, f64)], line: bool, markers: bool) {
        self.series.push(Series {
            name: name.to_string(),
            points: points.to_vec(),
            line,
            markers,
        });
    }

    /// Render the document. Errors if there is nothing to draw or a log
    /// axis sees a non-positive coordinate.
    pub fn render(&self) -> Result<String> {
        let tx = |v: f64| if self.log_x { v.log10() } else { v };
        let ty = |v: f64| if self.log_y { v.log10() } else { v };
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for s in &self.series {
            for &(x, y) in &s.points {
                if (self.log_x && x <= 0.0) || (self.log_y && y <= 0.0) {
                    return Err(Error::Param(format!(
                        "log-scale plot cannot place point ({x}, {y})"
                    )));
                }
                xs.push(tx(x));
                ys.push(ty(y));
            }
        }
        if xs.is_empty() {
            return Err(Error::Param("plot has no points".into()));
        }
        let (x_min, x_max) = padded_bounds(&xs);
        let (y_min, y_max) = padded_bounds(&ys);
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let px = |v: f64| MARGIN_LEFT + (tx(v) - x_min) / (x_max - x_min) * plot_w;
        let py = |v: f64| MARGIN_TOP + (1.0 - (ty(v) - y_min) / (y_max - y_min)) * plot_h;

        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
        ));
        out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
            MARGIN_LEFT + plot_w / 2.0,
            escape(&self.title)
        ));

        // ticks, grid, and tick labels
        for i in 0..TICKS {
            let f = i as f64 / (TICKS - 1) as f64;
            let gx = MARGIN_LEFT + f * plot_w;
            let gy = MARGIN_TOP + plot_h - f * plot_h;
            let xv = x_min + f * (x_max - x_min);
            let yv = y_min + f * (y_max - y_min);
            let x_label = fmt_num(if self.log_x { 10f64.powf(xv) } else { xv });
            let y_label = fmt_num(if self.log_y { 10f64.powf(yv) } else { yv });
            out.push_str(&format!(
                "<line x1=\"{gx:.2}\" y1=\"{MARGIN_TOP}\" x2=\"{gx:.2}\" y2=\"{:.2}\" \
                 stroke=\"#dddddd\"/>\n",
                MARGIN_TOP + plot_h
            ));
            out.push_str(&format!(
                "<line x1=\"{MARGIN_LEFT}\" y1=\"{gy:.2}\" x2=\"{:.2}\" y2=\"{gy:.2}\" \
                 stroke=\"#dddddd\"/>\n",
                MARGIN_LEFT + plot_w
            ));
            out.push_str(&format!(
                "<text x=\"{gx:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{x_label}</text>\n",
                MARGIN_TOP + plot_h + 18.0
            ));
            out.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{y_label}</text>\n",
                MARGIN_LEFT - 8.0,
                gy + 4.0
            ));
        }
        out.push_str(&format!(
            "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w:.2}\" \
             height=\"{plot_h:.2}\" fill=\"none\" stroke=\"#333333\"/>\n"
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_LEFT + plot_w / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"20\" y=\"{:.2}\" text-anchor=\"middle\" \
             transform=\"rotate(-90 20 {:.2})\">{}</text>\n",
            MARGIN_TOP + plot_h / 2.0,
            MARGIN_TOP + plot_h / 2.0,
            escape(&self.y_label)
        ));

        for (si, s) in self.series.iter().enumerate() {
            let color = PALETTE[si % PALETTE.len()];
            if s.line && s.points.len() > 1 {
                let pts: Vec<String> = s
                    .points
                    .iter()
                    .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                    .collect();
                out.push_str(&format!(
                    "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" \
                     points=\"{}\"/>\n",
                    pts.join(" ")
                ));
            }
            if s.markers {
                for &(x, y) in &s.points {
                    out.push_str(&format!(
                        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.2\" fill=\"{color}\"/>\n",
                        px(x),
                        py(y)
                    ));
                }
            }
            let ly = MARGIN_TOP + 14.0 + 18.0 * si as f64;
            let lx = MARGIN_LEFT + plot_w + 14.0;
            out.push_str(&format!(
                "<line x1=\"{lx:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
                 stroke=\"{color}\" stroke-width=\"3\"/>\n",
                ly - 4.0,
                lx + 18.0,
                ly - 4.0
            ));
            out.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{ly:.2}\">{}</text>\n",
                lx + 24.0,
                escape(&s.name)
            ));
        }
        out.push_str("</svg>\n");
        Ok(out)
    }
}

/// Data bounds with 4% padding; a degenerate span widens to ±0.5 so the
/// scale never divides by zero.
fn padded_bounds(vals: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.04 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Compact tick-label formatting: plain decimals in a readable range,
/// scientific notation outside it, no trailing zeros.
fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        return format!("{v:.2e}");
    }
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
