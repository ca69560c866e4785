//! Minimal deterministic SVG rendering of per-step curves on a log-scaled y
//! axis. The CSVs are the normative output; these panels are a convenience
//! view with no timestamps, no randomness, and fixed geometry, so rerendering
//! the same data yields byte-identical files.

/// One labeled curve of `(step, value)` points. Non-positive values are
/// skipped when drawing (the y axis is logarithmic).
#[derive(Clone, Debug)]
pub struct Curve {
    /// Legend label.
    pub label: String,
    /// `(x, y)` samples in x order.
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 76.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 56.0;

/// Fixed color cycle (wraps for > 8 curves).
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render one panel: title, linear x axis, log10 y axis with decade
/// gridlines, one polyline per curve, legend on the right.
pub fn render_log_panel(title: &str, x_label: &str, y_label: &str, curves: &[Curve]) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for curve in curves {
        for &(x, y) in &curve.points {
            if y > 0.0 && y.is_finite() && x.is_finite() {
                x_min = x_min.min(x);
                x_max = x_max.max(x);
                y_min = y_min.min(y);
                y_max = y_max.max(y);
            }
        }
    }
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n",
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" font-family=\"monospace\" font-size=\"16\" \
         text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        escape(title),
    ));
    if !(x_min.is_finite() && x_max.is_finite()) {
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"14\" \
             text-anchor=\"middle\">no positive data</text>\n",
            MARGIN_LEFT + plot_w / 2.0,
            MARGIN_TOP + plot_h / 2.0,
        ));
        svg.push_str("</svg>\n");
        return svg;
    }
    if x_max == x_min {
        x_max = x_min + 1.0;
    }
    // Decade bounds for the log axis.
    let dec_lo = y_min.log10().floor() as i64;
    let dec_hi = y_max.log10().ceil() as i64;
    let dec_hi = if dec_hi == dec_lo { dec_lo + 1 } else { dec_hi };
    let log_lo = dec_lo as f64;
    let log_hi = dec_hi as f64;
    let x_of = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let y_of = |y: f64| MARGIN_TOP + (log_hi - y.log10()) / (log_hi - log_lo) * plot_h;

    // Frame.
    svg.push_str(&format!(
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n",
    ));
    // Decade gridlines and y tick labels (thin the labels if many decades).
    let decades = (dec_hi - dec_lo) as usize;
    let label_stride = decades.div_ceil(10).max(1);
    for (index, dec) in (dec_lo..=dec_hi).enumerate() {
        let y = y_of(10f64.powi(dec as i32));
        svg.push_str(&format!(
            "<line x1=\"{MARGIN_LEFT}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            MARGIN_LEFT + plot_w,
        ));
        if index % label_stride == 0 {
            svg.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"12\" \
                 text-anchor=\"end\">1e{dec}</text>\n",
                MARGIN_LEFT - 6.0,
                y + 4.0,
            ));
        }
    }
    // X ticks: six evenly spaced values.
    for k in 0..=5 {
        let x_val = x_min + (x_max - x_min) * k as f64 / 5.0;
        let x = x_of(x_val);
        svg.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" \
             stroke=\"black\" stroke-width=\"1\"/>\n",
            MARGIN_TOP + plot_h,
            MARGIN_TOP + plot_h + 5.0,
        ));
        let tick = if x_val == x_val.trunc() {
            format!("{}", x_val as i64)
        } else {
            format!("{x_val:.2}")
        };
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"12\" \
             text-anchor=\"middle\">{tick}</text>\n",
            MARGIN_TOP + plot_h + 18.0,
        ));
    }
    // Axis labels.
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"13\" \
         text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 14.0,
        escape(x_label),
    ));
    svg.push_str(&format!(
        "<text x=\"20\" y=\"{:.1}\" font-family=\"monospace\" font-size=\"13\" \
         text-anchor=\"middle\" transform=\"rotate(-90 20 {:.1})\">{}</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(y_label),
    ));
    // Curves and legend.
    for (index, curve) in curves.iter().enumerate() {
        let color = PALETTE[index % PALETTE.len()];
        let mut path = String::new();
        for &(x, y) in &curve.points {
            if !(y > 0.0 && y.is_finite() && x.is_finite()) {
                continue;
            }
            if !path.is_empty() {
                path.push(' ');
            }
            path.push_str(&format!("{:.2},{:.2}", x_of(x), y_of(y)));
        }
        if !path.is_empty() {
            svg.push_str(&format!(
                "<polyline points=\"{path}\" fill=\"none\" stroke=\"{color}\" \
                 stroke-width=\"1.5\"/>\n",
            ));
        }
        let ly = MARGIN_TOP + 14.0 + 20.0 * index as f64;
        let lx = MARGIN_LEFT + plot_w + 14.0;
        svg.push_str(&format!(
            "<line x1=\"{lx:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" \
             stroke=\"{color}\" stroke-width=\"3\"/>\n",
            ly - 4.0,
            lx + 22.0,
            ly - 4.0,
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{ly:.1}\" font-family=\"monospace\" \
             font-size=\"12\">{}</text>\n",
            lx + 28.0,
            escape(&curve.label),
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_deterministically() {
        let curves = vec![
            Curve {
                label: "ema:0.9".to_string(),
                points: (0..50).map(|t| (t as f64, 1.0 / (t as f64 + 1.0))).collect(),
            },
            Curve {
                label: "none <&>".to_string(),
                points: (0..50).map(|t| (t as f64, 0.5f64.powi(t))).collect(),
            },
        ];
        let a = render_log_panel("variance", "step t", "H-risk", &curves);
        let b = render_log_panel("variance", "step t", "H-risk", &curves);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.ends_with("</svg>\n"));
        assert_eq!(a.matches("<polyline").count(), 2);
        assert!(a.contains("&lt;&amp;&gt;"));
        // Zero values are dropped, not log-crashed.
        let with_zero = vec![Curve {
            label: "z".to_string(),
            points: vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.1)],
        }];
        let rendered = render_log_panel("t", "x", "y", &with_zero);
        assert_eq!(rendered.matches("<polyline").count(), 1);
        // All-nonpositive data produces a valid placeholder panel.
        let empty = vec![Curve {
            label: "none".to_string(),
            points: vec![(0.0, 0.0)],
        }];
        let rendered = render_log_panel("t", "x", "y", &empty);
        assert!(rendered.contains("no positive data"));
    }
}
