//! Static SVG rendering of detection-probability curves: one polyline per
//! design series, linear axes, integer K ticks, and gaps at rows where no
//! threshold met the false-alarm budget.

use etf_fingerprints::experiment::ExperimentCurve;

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 28.0;
const BOTTOM: f64 = 52.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Series {
    label: String,
    points: Vec<(usize, Option<f64>)>,
}

fn series_of(curve: &ExperimentCurve) -> Vec<Series> {
    let mut series: Vec<Series> = Vec::new();
    for p in &curve.points {
        let entry = match series.iter_mut().find(|s| s.label == p.design) {
            Some(s) => s,
            None => {
                series.push(Series { label: p.design.clone(), points: Vec::new() });
                series.last_mut().expect("just pushed")
            }
        };
        entry.points.push((p.k, p.sample.as_ref().map(|s| s.p_d)));
    }
    series
}

/// Renders the curve table to a complete SVG document.
pub fn render_svg(curve: &ExperimentCurve) -> String {
    let series = series_of(curve);
    let ks: Vec<usize> = curve.points.iter().map(|p| p.k).collect();
    let k_min = ks.iter().copied().min().unwrap_or(1);
    let k_max = ks.iter().copied().max().unwrap_or(1).max(k_min + 1);

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x_of = |k: f64| LEFT + (k - k_min as f64) / (k_max - k_min) as f64 * plot_w;
    let y_of = |p: f64| TOP + (1.0 - p) * plot_h;

    let mut svg = String::new();
    svg.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));

    // Frame and y grid/ticks every 0.2.
    svg.push_str(&format!(
        "  <rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" \
         stroke=\"black\"/>\n"
    ));
    for i in 0..=5 {
        let p = i as f64 / 5.0;
        let y = y_of(p);
        svg.push_str(&format!(
            "  <line x1=\"{LEFT}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#cccccc\" \
             stroke-dasharray=\"3 3\"/>\n",
            LEFT + plot_w
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"end\" \
             font-family=\"sans-serif\">{p:.1}</text>\n",
            LEFT - 8.0,
            y + 4.0
        ));
    }

    // Integer K ticks, thinned when the range is wide.
    let tick_step = ((k_max - k_min) as f64 / 12.0).ceil().max(1.0) as usize;
    let mut k = k_min;
    while k <= k_max {
        let x = x_of(k as f64);
        svg.push_str(&format!(
            "  <line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            TOP + plot_h,
            TOP + plot_h + 5.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" \
             font-family=\"sans-serif\">{k}</text>\n",
            TOP + plot_h + 20.0
        ));
        k += tick_step;
    }

    // Axis labels.
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"14\" text-anchor=\"middle\" \
         font-family=\"sans-serif\">K (coalition size)</text>\n",
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    ));
    svg.push_str(&format!(
        "  <text x=\"16\" y=\"{:.2}\" font-size=\"14\" text-anchor=\"middle\" \
         font-family=\"sans-serif\" transform=\"rotate(-90 16 {:.2})\">P_d</text>\n",
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    ));

    // One polyline per run of consecutive feasible points; infeasible rows
    // split the line into segments, leaving visible gaps.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut segment: Vec<(f64, f64)> = Vec::new();
        let flush = |seg: &mut Vec<(f64, f64)>, svg: &mut String| {
            if seg.len() >= 2 {
                let pts: Vec<String> =
                    seg.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                svg.push_str(&format!(
                    "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" \
                     points=\"{}\"/>\n",
                    pts.join(" ")
                ));
            }
            seg.clear();
        };
        for &(k, p_d) in &s.points {
            match p_d {
                Some(p) => {
                    let (x, y) = (x_of(k as f64), y_of(p));
                    segment.push((x, y));
                    svg.push_str(&format!(
                        "  <circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"{color}\"/>\n"
                    ));
                }
                None => flush(&mut segment, &mut svg),
            }
        }
        flush(&mut segment, &mut svg);

        // Legend entry.
        let ly = TOP + 12.0 + i as f64 * 20.0;
        let lx = WIDTH - RIGHT + 18.0;
        svg.push_str(&format!(
            "  <line x1=\"{lx}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>\n",
            lx + 22.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" font-family=\"sans-serif\">{}</text>\n",
            lx + 28.0,
            ly + 4.0,
            xml_escape(&s.label)
        ));
    }

    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
