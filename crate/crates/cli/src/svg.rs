//! Minimal self-contained SVG line plots: fixed 800x600 viewport, linear
//! axes, one polyline per series. NaN values break the polyline.

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 25.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series<'a> {
    pub label: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

fn finite_bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let mut bounds: Option<(f64, f64)> = None;
    for v in values.filter(|v| v.is_finite()) {
        bounds = Some(match bounds {
            None => (v, v),
            Some((lo, hi)) => (lo.min(v), hi.max(v)),
        });
    }
    bounds
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    (0..=5).map(|i| lo + (hi - lo) * i as f64 / 5.0).collect()
}

/// Render a set of series to one SVG document.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let (x_lo, x_hi) =
        finite_bounds(series.iter().flat_map(|s| s.x.iter().copied())).unwrap_or((0.0, 1.0));
    let (mut y_lo, mut y_hi) =
        finite_bounds(series.iter().flat_map(|s| s.y.iter().copied())).unwrap_or((0.0, 1.0));
    if y_hi - y_lo < 1e-12 {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let pad = 0.03 * (y_hi - y_lo);
    let (y_lo, y_hi) = (y_lo - pad, y_hi + pad);
    let x_span = if x_hi > x_lo { x_hi - x_lo } else { 1.0 };

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_px = |x: f64, y: f64| {
        (
            MARGIN_LEFT + (x - x_lo) / x_span * plot_w,
            MARGIN_TOP + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h,
        )
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        title
    ));

    // axes
    let (ax0, ay0) = (MARGIN_LEFT, MARGIN_TOP + plot_h);
    svg.push_str(&format!(
        "<line x1=\"{ax0:.1}\" y1=\"{ay0:.1}\" x2=\"{:.1}\" y2=\"{ay0:.1}\" stroke=\"black\"/>\n",
        MARGIN_LEFT + plot_w
    ));
    svg.push_str(&format!(
        "<line x1=\"{ax0:.1}\" y1=\"{ay0:.1}\" x2=\"{ax0:.1}\" y2=\"{MARGIN_TOP:.1}\" stroke=\"black\"/>\n"
    ));
    for t in ticks(x_lo, x_hi) {
        let (px, _) = to_px(t, y_lo);
        svg.push_str(&format!(
            "<line x1=\"{px:.1}\" y1=\"{ay0:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
            ay0 + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{px:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{t:.3}</text>\n",
            ay0 + 20.0
        ));
    }
    for t in ticks(y_lo, y_hi) {
        let (_, py) = to_px(x_lo, t);
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{ax0:.1}\" y2=\"{py:.1}\" stroke=\"black\"/>\n",
            ax0 - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{t:.3}</text>\n",
            ax0 - 9.0,
            py + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        x_label
    ));
    svg.push_str(&format!(
        "<text x=\"20\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.1})\">{}</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        y_label
    ));

    for (index, s) in series.iter().enumerate() {
        let color = COLORS[index % COLORS.len()];
        let mut points = String::new();
        let mut segments: Vec<String> = Vec::new();
        for (&x, &y) in s.x.iter().zip(s.y.iter()) {
            if x.is_finite() && y.is_finite() {
                let (px, py) = to_px(x, y);
                points.push_str(&format!("{px:.2},{py:.2} "));
            } else if !points.is_empty() {
                segments.push(std::mem::take(&mut points));
            }
        }
        if !points.is_empty() {
            segments.push(points);
        }
        for seg in segments {
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                seg.trim_end()
            ));
        }
        let ly = MARGIN_TOP + 16.0 * index as f64 + 12.0;
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            WIDTH - 165.0,
            WIDTH - 140.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            WIDTH - 133.0,
            ly + 4.0,
            s.label
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_is_self_contained_and_has_polylines() {
        let x = [0.0, 0.5, 1.0];
        let y = [0.0, 1.0, 0.25];
        let svg = line_plot(
            "t",
            "x",
            "y",
            &[Series {
                label: "R",
                x: &x,
                y: &y,
            }],
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<polyline"));
        assert!(!svg.contains("href"));
        assert!(!svg.contains("url("));
    }

    #[test]
    fn nan_breaks_the_polyline() {
        let x = [0.0, 0.25, 0.5, 0.75, 1.0];
        let y = [0.1, 0.2, f64::NAN, 0.3, 0.4];
        let svg = line_plot(
            "t",
            "x",
            "y",
            &[Series {
                label: "R",
                x: &x,
                y: &y,
            }],
        );
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
