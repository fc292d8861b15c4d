//! Minimal self-contained SVG renderer: one polyline per cell over the
//! trajectory's time span, fixed palette, labeled axes. Output is plain
//! SVG 1.1 text with no external references, and byte-identical for
//! identical inputs.

use sicnn::{SicnnError, Trajectory};

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 540.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 48.0;

const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#393b79", "#ad494a",
];

/// Sample times: every `stride` from `t0`, endpoint always included.
fn sample_times(t0: f64, t1: f64, stride: f64) -> Vec<f64> {
    let mut ts = Vec::new();
    let mut k = 0usize;
    loop {
        let t = t0 + k as f64 * stride;
        if t >= t1 - 1e-12 {
            break;
        }
        ts.push(t);
        k += 1;
    }
    ts.push(t1);
    ts
}

/// Round an axis span to a "nice" tick step (1, 2, 2.5 or 5 times a power
/// of ten) targeting roughly `target` intervals.
fn tick_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.abs().log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 2.5 {
        2.5
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let step = tick_step(hi - lo, target);
    let mut v = Vec::new();
    let mut k = (lo / step).ceil() as i64;
    loop {
        let t = k as f64 * step;
        if t > hi + 1e-9 * step {
            break;
        }
        // Snap values at rounding distance of zero to exact zero so labels
        // print "0" rather than a stray "-0".
        v.push(if t.abs() < 1e-9 * step { 0.0 } else { t });
        k += 1;
    }
    v
}

fn fmt(v: f64) -> String {
    // Shortest round-trip float formatting keeps labels clean ("0.5", "2").
    format!("{v}")
}

/// Render every cell of `traj` as a polyline over its full stored span.
pub fn render_svg(traj: &Trajectory, stride: f64) -> Result<String, SicnnError> {
    if !(stride > 0.0) {
        return Err(SicnnError::InvalidSpec(
            "plot stride must be positive".into(),
        ));
    }
    let (t0, t1) = (traj.start(), traj.end());
    let times = sample_times(t0, t1, stride);
    let cells = traj.cell_count();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(times.len());
    let mut buf = vec![0.0; cells];
    for &t in &times {
        traj.row_into(t, &mut buf)?;
        rows.push(buf.clone());
    }
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for row in &rows {
        for &v in row {
            y_lo = y_lo.min(v);
            y_hi = y_hi.max(v);
        }
    }
    // Pad the value range so curves never touch the frame; keep a visible
    // band even for constant trajectories.
    let pad = (0.05 * (y_hi - y_lo)).max(1e-6);
    y_lo -= pad;
    y_hi += pad;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |t: f64| MARGIN_LEFT + (t - t0) / (t1 - t0) * plot_w;
    let y_of = |v: f64| MARGIN_TOP + (y_hi - v) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // Grid lines and tick labels.
    svg.push_str("<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">\n");
    for tx in ticks(t0, t1, 8) {
        let x = x_of(tx);
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
             stroke=\"#ddd\" stroke-width=\"1\"/>\n",
            MARGIN_TOP,
            MARGIN_TOP + plot_h
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            MARGIN_TOP + plot_h + 18.0,
            fmt(tx)
        ));
    }
    for ty in ticks(y_lo, y_hi, 6) {
        let y = y_of(ty);
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
             stroke=\"#ddd\" stroke-width=\"1\"/>\n",
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT - 8.0,
            y + 4.0,
            fmt(ty)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">t</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    ));
    svg.push_str("</g>\n");

    // Frame.
    svg.push_str(&format!(
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#333\" stroke-width=\"1\"/>\n"
    ));

    // One polyline per cell, row-major, palette cycling.
    let n = traj.cols();
    for c in 0..cells {
        let color = PALETTE[c % PALETTE.len()];
        let mut points = String::new();
        for (k, &t) in times.iter().enumerate() {
            if k > 0 {
                points.push(' ');
            }
            points.push_str(&format!("{:.2},{:.2}", x_of(t), y_of(rows[k][c])));
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{points}\"/>\n"
        ));
        // Legend entry.
        let (i, j) = (c / n + 1, c % n + 1);
        let lx = MARGIN_LEFT + plot_w - 70.0;
        let ly = MARGIN_TOP + 16.0 + 16.0 * c as f64;
        svg.push_str(&format!(
            "<line x1=\"{lx:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
             stroke=\"{color}\" stroke-width=\"2\"/>\n",
            ly - 4.0,
            lx + 22.0,
            ly - 4.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{ly:.2}\" font-family=\"sans-serif\" \
             font-size=\"12\" fill=\"#333\">x{i}{j}</text>\n",
            lx + 28.0
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
