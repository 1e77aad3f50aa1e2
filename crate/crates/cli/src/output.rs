//! Output emitters: CSV with conventional quoting, and small
//! self-contained SVG line plots (linear or log-log axes).

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

/// Quote a CSV field when it contains a comma, quote, or newline;
/// embedded quotes are doubled.
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Join fields into one CSV record, quoting each as needed.
pub fn csv_record(fields: &[String]) -> String {
    fields
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",")
}

/// Write `content` to `path`, creating parent directories as needed.
pub fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating directory {}", parent.display()))?;
        }
    }
    fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

/// One named polyline of a plot.
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Render a line plot as a standalone SVG document. With `log_log` both
/// axes are base-10 logarithmic and non-positive points are dropped.
pub fn line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    log_log: bool,
) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const L: f64 = 78.0;
    const R: f64 = 24.0;
    const T: f64 = 46.0;
    const B: f64 = 58.0;
    const PALETTE: [&str; 6] = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
    ];

    let transform = |v: f64| if log_log { v.log10() } else { v };
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let cleaned: Vec<(usize, &str, Vec<(f64, f64)>)> = series
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let pts: Vec<(f64, f64)> = s
                .points
                .iter()
                .filter(|(x, y)| {
                    x.is_finite() && y.is_finite() && (!log_log || (*x > 0.0 && *y > 0.0))
                })
                .map(|&(x, y)| (transform(x), transform(y)))
                .collect();
            xs.extend(pts.iter().map(|p| p.0));
            ys.extend(pts.iter().map(|p| p.1));
            (i, s.name.as_str(), pts)
        })
        .collect();

    let range = |vals: &[f64]| -> (f64, f64) {
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || !hi.is_finite() {
            return (0.0, 1.0);
        }
        let pad = 0.05 * (hi - lo).max(1e-12);
        (lo - pad, hi + pad)
    };
    let (x_lo, x_hi) = range(&xs);
    let (y_lo, y_hi) = range(&ys);
    let map_x = |v: f64| L + (v - x_lo) / (x_hi - x_lo) * (W - L - R);
    let map_y = |v: f64| H - B - (v - y_lo) / (y_hi - y_lo) * (H - T - B);

    let tick_label = |t: f64| -> String {
        if log_log {
            tick_text(10f64.powf(t))
        } else {
            tick_text(t)
        }
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "  <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        W / 2.0,
        escape(title)
    ));

    // Axes with five ticks per side.
    svg.push_str(&format!(
        "  <line x1=\"{L}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        H - B,
        W - R,
        H - B
    ));
    svg.push_str(&format!(
        "  <line x1=\"{L}\" y1=\"{T}\" x2=\"{L}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        H - B
    ));
    for k in 0..=4 {
        let fx = x_lo + (x_hi - x_lo) * k as f64 / 4.0;
        let fy = y_lo + (y_hi - y_lo) * k as f64 / 4.0;
        let px = map_x(fx);
        let py = map_y(fy);
        svg.push_str(&format!(
            "  <line x1=\"{px:.1}\" y1=\"{:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
            H - B,
            H - B + 5.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            H - B + 20.0,
            tick_label(fx)
        ));
        svg.push_str(&format!(
            "  <line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{L}\" y2=\"{py:.1}\" stroke=\"black\"/>\n",
            L - 5.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            L - 9.0,
            py + 4.0,
            tick_label(fy)
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
        (L + W - R) / 2.0,
        H - 14.0,
        escape(x_label)
    ));
    svg.push_str(&format!(
        "  <text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">{}</text>\n",
        (T + H - B) / 2.0,
        (T + H - B) / 2.0,
        escape(y_label)
    ));

    for (i, name, pts) in &cleaned {
        let color = PALETTE[i % PALETTE.len()];
        if !pts.is_empty() {
            let path: Vec<String> = pts
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", map_x(x), map_y(y)))
                .collect();
            svg.push_str(&format!(
                "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
                path.join(" ")
            ));
            for &(x, y) in pts {
                svg.push_str(&format!(
                    "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.4\" fill=\"{color}\"/>\n",
                    map_x(x),
                    map_y(y)
                ));
            }
        }
        let ly = T + 16.0 * *i as f64;
        svg.push_str(&format!(
            "  <rect x=\"{:.1}\" y=\"{:.1}\" width=\"12\" height=\"4\" fill=\"{color}\"/>\n",
            W - R - 150.0,
            ly - 4.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{ly:.1}\">{}</text>\n",
            W - R - 132.0,
            escape(name)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Compact tick label: fixed point in a middle range, scientific outside
/// it, trailing zeros trimmed.
fn tick_text(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let magnitude = v.abs();
    if (1e-3..1e4).contains(&magnitude) {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn plots_are_well_formed() {
        let s = [Series {
            name: "curve".into(),
            points: vec![(1.0, 1.0), (2.0, 0.25), (4.0, 0.0625)],
        }];
        let svg = line_plot("t", "n", "value", &s, false);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert!(svg.contains("polyline"));
        let log = line_plot("t", "n", "value", &s, true);
        assert!(log.contains("polyline"));
    }
}
