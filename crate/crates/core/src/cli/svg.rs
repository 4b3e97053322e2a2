//! Minimal hand-rolled SVG emitters for the two standard plots: the
//! observed-vs-simulated fight-size overlay and the edge-magnitude bars.
//! Output is plain text with fixed-precision coordinates, so plots are
//! byte-stable across runs.

use std::fmt::Write;

use crate::metrics::FightSizeDistribution;
use crate::strategy::DeltaPEdge;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 48.0;

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        s,
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Grouped-bar overlay of two size distributions.
pub fn size_overlay(
    observed: &FightSizeDistribution,
    simulated: Option<&FightSizeDistribution>,
    title: &str,
) -> String {
    let mut svg = header(title);
    let po = observed.probabilities();
    let ps = simulated.map(|d| d.probabilities()).unwrap_or_default();
    let mut sizes: Vec<usize> = po.keys().chain(ps.keys()).copied().collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let max_p = po
        .values()
        .chain(ps.values())
        .copied()
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let slot = plot_w / sizes.len() as f64;
    let bar = if simulated.is_some() { slot * 0.38 } else { slot * 0.7 };

    for (i, size) in sizes.iter().enumerate() {
        let x0 = MARGIN + i as f64 * slot;
        let o = po.get(size).copied().unwrap_or(0.0);
        let oh = o / max_p * plot_h;
        let _ = writeln!(
            svg,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#4878a8\"><title>size {} observed {:.6}</title></rect>",
            x0 + slot * 0.1,
            HEIGHT - MARGIN - oh,
            bar,
            oh,
            size,
            o
        );
        if simulated.is_some() {
            let sv = ps.get(size).copied().unwrap_or(0.0);
            let sh = sv / max_p * plot_h;
            let _ = writeln!(
                svg,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#c87941\"><title>size {} simulated {:.6}</title></rect>",
                x0 + slot * 0.1 + bar,
                HEIGHT - MARGIN - sh,
                bar,
                sh,
                size,
                sv
            );
        }
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            x0 + slot / 2.0,
            HEIGHT - MARGIN + 16.0,
            size
        );
    }
    let _ = writeln!(
        svg,
        "<line x1=\"{MARGIN}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
        HEIGHT - MARGIN,
        WIDTH - MARGIN,
        HEIGHT - MARGIN
    );
    let _ = writeln!(
        svg,
        "<text x=\"{MARGIN}\" y=\"40\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#4878a8\">observed</text>"
    );
    if simulated.is_some() {
        let _ = writeln!(
            svg,
            "<text x=\"{MARGIN}\" y=\"54\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#c87941\">simulated</text>"
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Horizontal bars of the strongest edges by |dp|, sign-colored.
pub fn edge_magnitudes(edges: &[DeltaPEdge], top_n: usize, title: &str) -> String {
    let mut svg = header(title);
    let shown = &edges[..edges.len().min(top_n)];
    if shown.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let max_abs = shown
        .iter()
        .map(|e| e.delta_p.abs())
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let row = plot_h / shown.len() as f64;
    let label_w = 150.0;
    let plot_w = WIDTH - MARGIN - label_w - 20.0;
    for (i, e) in shown.iter().enumerate() {
        let y = MARGIN + i as f64 * row;
        let w = e.delta_p.abs() / max_abs * plot_w;
        let color = if e.delta_p >= 0.0 { "#4878a8" } else { "#a84848" };
        let label = format!("{}→{}", e.source.join("+"), e.target.join("+"));
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"end\">{}</text>",
            label_w,
            y + row * 0.65,
            escape(&label)
        );
        let _ = writeln!(
            svg,
            "<rect x=\"{:.1}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"><title>dp {:.6} z {:.3} p {:.4}</title></rect>",
            label_w + 8.0,
            y + row * 0.15,
            w,
            row * 0.7,
            color,
            e.delta_p,
            e.z_score,
            e.p_value
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_store::parse_lines;
    use crate::metrics::fight_size_distribution;

    #[test]
    fn svg_output_is_deterministic_and_well_formed() {
        let s = parse_lines("A,B\nB,C\nA\nA,B,C\n").unwrap();
        let d = fight_size_distribution(&s);
        let a = size_overlay(&d, Some(&d), "sizes");
        let b = size_overlay(&d, Some(&d), "sizes");
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.trim_end().ends_with("</svg>"));
        assert_eq!(a.matches("<rect").count() - 1, 2 * 3); // bg + 2 bars x 3 sizes
    }

    #[test]
    fn empty_edge_list_still_renders() {
        let svg = edge_magnitudes(&[], 10, "edges");
        assert!(svg.contains("</svg>"));
    }
}
