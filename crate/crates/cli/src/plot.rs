//! Minimal deterministic SVG plotting: line charts and overlay histograms.
//! No timestamps or randomness, so output bytes are digest-stable.

use lvbench::error::Result;
use std::fmt::Write as _;
use std::path::Path;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

const COLORS: [&str; 6] = [
    "#d95f02", "#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#e377c2",
];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let ax = x.abs();
    if ax >= 1e4 || ax < 1e-3 {
        format!("{x:.1e}")
    } else if ax >= 10.0 {
        format!("{x:.0}")
    } else {
        let s = format!("{x:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn axis_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi <= lo {
        return (lo - 0.5, lo + 0.5);
    }
    let pad = (hi - lo) * 0.06;
    (lo - pad, hi + pad)
}

fn svg_header(title: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        WIDTH / 2.0,
        xml_escape(title)
    );
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(s: &mut String, x_label: &str, y_label: &str) {
    let (x0, y0) = (MARGIN_L, HEIGHT - MARGIN_B);
    let (x1, y1) = (WIDTH - MARGIN_R, MARGIN_T);
    let _ = write!(
        s,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n\
         <text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"13\" \
         transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        xml_escape(x_label),
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        xml_escape(y_label)
    );
}

/// Line chart over one or more series. With `log_x`, x values must be
/// positive and are mapped logarithmically (sweep-count axes).
pub fn write_line_chart(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    log_x: bool,
) -> Result<()> {
    let map_x = |x: f64| if log_x { x.log10() } else { x };
    let (x_lo, x_hi) = axis_range(series.iter().flat_map(|s| s.points.iter().map(|p| map_x(p.0))));
    let (y_lo, y_hi) = axis_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let px = |x: f64| MARGIN_L + (map_x(x) - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |y: f64| HEIGHT - MARGIN_B - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut s = svg_header(title);
    axes(&mut s, x_label, y_label);
    // ticks: 5 per axis
    for k in 0..=4 {
        let xv = x_lo + (x_hi - x_lo) * k as f64 / 4.0;
        let xp = MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) * k as f64 / 4.0;
        let label = if log_x { fmt_num(10f64.powf(xv)) } else { fmt_num(xv) };
        let _ = write!(
            s,
            "<line x1=\"{xp:.1}\" y1=\"{:.1}\" x2=\"{xp:.1}\" y2=\"{:.1}\" stroke=\"#999\"/>\n\
             <text x=\"{xp:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"11\">{label}</text>\n",
            HEIGHT - MARGIN_B,
            HEIGHT - MARGIN_B + 5.0,
            HEIGHT - MARGIN_B + 18.0
        );
        let yv = y_lo + (y_hi - y_lo) * k as f64 / 4.0;
        let yp = HEIGHT - MARGIN_B - (HEIGHT - MARGIN_T - MARGIN_B) * k as f64 / 4.0;
        let _ = write!(
            s,
            "<line x1=\"{:.1}\" y1=\"{yp:.1}\" x2=\"{:.1}\" y2=\"{yp:.1}\" stroke=\"#999\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"11\">{}</text>\n",
            MARGIN_L - 5.0,
            MARGIN_L,
            MARGIN_L - 8.0,
            yp + 4.0,
            fmt_num(yv)
        );
    }
    for (idx, ser) in series.iter().enumerate() {
        let color = COLORS[idx % COLORS.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = write!(
            s,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            pts.join(" ")
        );
        for &(x, y) in &ser.points {
            let _ = write!(
                s,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                px(x),
                py(y)
            );
        }
        let ly = MARGIN_T + 16.0 * idx as f64;
        let _ = write!(
            s,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"12\" height=\"4\" fill=\"{color}\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\">{}</text>\n",
            WIDTH - MARGIN_R - 150.0,
            ly,
            WIDTH - MARGIN_R - 132.0,
            ly + 6.0,
            xml_escape(&ser.name)
        );
    }
    s.push_str("</svg>\n");
    std::fs::write(path, s)?;
    Ok(())
}

/// Overlay histogram: `all` bars behind, `shared` bars in front, shared
/// bin edges.
pub fn write_histogram(
    path: &Path,
    title: &str,
    x_label: &str,
    edges: &[f64],
    all: &[u64],
    shared: &[u64],
    all_name: &str,
    shared_name: &str,
) -> Result<()> {
    let y_hi = all.iter().copied().max().unwrap_or(1).max(1) as f64 * 1.08;
    let x_lo = edges.first().copied().unwrap_or(0.0);
    let x_hi = edges.last().copied().unwrap_or(1.0);
    let px = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |y: f64| HEIGHT - MARGIN_B - y / y_hi * (HEIGHT - MARGIN_T - MARGIN_B);

    let mut s = svg_header(title);
    axes(&mut s, x_label, "LV count");
    for k in 0..=4 {
        let xv = x_lo + (x_hi - x_lo) * k as f64 / 4.0;
        let _ = write!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"11\">{}</text>\n",
            px(xv),
            HEIGHT - MARGIN_B + 18.0,
            fmt_num(xv)
        );
        let yv = y_hi * k as f64 / 4.0;
        let _ = write!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"11\">{}</text>\n",
            MARGIN_L - 8.0,
            py(yv) + 4.0,
            fmt_num(yv)
        );
    }
    for (counts, color, opacity) in [(all, "#d95f02", 0.9), (shared, "#1f77b4", 0.85)] {
        for (k, &count) in counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let x = px(edges[k]);
            let w = (px(edges[k + 1]) - x).max(0.5);
            let y = py(count as f64);
            let h = HEIGHT - MARGIN_B - y;
            let _ = write!(
                s,
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" \
                 fill=\"{color}\" fill-opacity=\"{opacity}\"/>\n"
            );
        }
    }
    for (idx, name) in [(0usize, all_name), (1, shared_name)] {
        let color = if idx == 0 { "#d95f02" } else { "#1f77b4" };
        let ly = MARGIN_T + 16.0 * idx as f64;
        let _ = write!(
            s,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"12\" height=\"8\" fill=\"{color}\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\">{}</text>\n",
            WIDTH - MARGIN_R - 190.0,
            ly,
            WIDTH - MARGIN_R - 172.0,
            ly + 8.0,
            xml_escape(name)
        );
    }
    s.push_str("</svg>\n");
    std::fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_output_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let series = vec![Series {
            name: "a".into(),
            points: vec![(10.0, 0.5), (100.0, 0.7), (1000.0, 0.9)],
        }];
        let p1 = dir.path().join("a.svg");
        let p2 = dir.path().join("b.svg");
        write_line_chart(&p1, "t", "x", "y", &series, true).unwrap();
        write_line_chart(&p2, "t", "x", "y", &series, true).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn histogram_writes_bars() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.svg");
        write_histogram(
            &p,
            "hist",
            "energy",
            &[0.0, 1.0, 2.0],
            &[3, 1],
            &[1, 0],
            "all",
            "shared",
        )
        .unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("<rect"));
        assert!(text.ends_with("</svg>\n"));
    }
}
