//! Minimal static SVG charts: line charts for equity and drawdown, and a pie
//! of average weights.

use std::fmt::Write;

use super::EquityCurve;

const W: f64 = 800.0;
const H: f64 = 400.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        escape(title)
    );
}

/// Line chart of several named series sharing one x axis.
pub fn line_chart(title: &str, series: &[(&str, &[f64])]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let n = series.iter().map(|(_, s)| s.len()).max().unwrap_or(0);
    let (mut lo, mut hi) = series
        .iter()
        .flat_map(|(_, s)| s.iter().copied())
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let x = |i: usize| MARGIN + (W - 2.0 * MARGIN) * i as f64 / (n.max(2) - 1) as f64;
    let y = |v: f64| H - MARGIN - (H - 2.0 * MARGIN) * (v - lo) / (hi - lo);
    let _ = writeln!(
        out,
        "<g stroke=\"#444\" stroke-width=\"1\"><line x1=\"{MARGIN}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\"/><line x1=\"{MARGIN}\" y1=\"{MARGIN}\" x2=\"{MARGIN}\" y2=\"{0}\"/></g>",
        H - MARGIN,
        W - MARGIN
    );
    for (v, anchor) in [(lo, H - MARGIN), (hi, MARGIN)] {
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{:.3}</text>",
            MARGIN - 4.0,
            anchor + 4.0,
            v
        );
    }
    for (k, (name, s)) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = s
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, &v)| format!("{:.2},{:.2}", x(i), y(v)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\" points=\"{}\"/>",
            points.join(" ")
        );
        let ly = MARGIN + 14.0 * k as f64;
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{ly}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{colour}\">{}</text>",
            W - MARGIN + 4.0 - 120.0,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn equity_chart(curves: &[(&str, &EquityCurve)]) -> String {
    let series: Vec<(&str, &[f64])> = curves.iter().map(|(n, c)| (*n, c.equity.as_slice())).collect();
    line_chart("Equity", &series)
}

pub fn drawdown_chart(curves: &[(&str, &EquityCurve)]) -> String {
    let series: Vec<(&str, &[f64])> = curves.iter().map(|(n, c)| (*n, c.drawdowns.as_slice())).collect();
    line_chart("Drawdown", &series)
}

/// Pie of average weights; slices below 0.5% are folded into "other".
pub fn weights_pie(title: &str, assets: &[String], weights: &[f64]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let total: f64 = weights.iter().filter(|w| **w > 0.0).sum();
    let mut slices: Vec<(String, f64)> = Vec::new();
    let mut other = 0.0;
    for (a, &w) in assets.iter().zip(weights) {
        if w <= 0.0 || total <= 0.0 {
            continue;
        }
        if w / total < 0.005 {
            other += w / total;
        } else {
            slices.push((a.clone(), w / total));
        }
    }
    if other > 0.0 {
        slices.push(("other".into(), other));
    }
    let (cx, cy, r) = (W / 2.0 - 100.0, H / 2.0 + 10.0, 150.0);
    let mut angle = -std::f64::consts::FRAC_PI_2;
    for (k, (name, frac)) in slices.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        if *frac > 1.0 - 1e-9 {
            let _ = writeln!(out, "<circle cx=\"{cx}\" cy=\"{cy}\" r=\"{r}\" fill=\"{colour}\"/>");
        } else {
            let end = angle + frac * std::f64::consts::TAU;
            let large = if *frac > 0.5 { 1 } else { 0 };
            let _ = writeln!(
                out,
                "<path d=\"M{cx},{cy} L{:.2},{:.2} A{r},{r} 0 {large} 1 {:.2},{:.2} Z\" fill=\"{colour}\" stroke=\"white\"/>",
                cx + r * angle.cos(),
                cy + r * angle.sin(),
                cx + r * end.cos(),
                cy + r * end.sin()
            );
            angle = end;
        }
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{colour}\">{} {:.1}%</text>",
            W - 250.0,
            60.0 + 14.0 * k as f64,
            escape(name),
            100.0 * frac
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_svg() {
        let s = line_chart("t<1>", &[("a", &[1.0, 1.1, 0.9]), ("b", &[1.0, 1.0, 1.0])]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<polyline").count(), 2);
        assert!(s.contains("t&lt;1&gt;"));
        let p = weights_pie("w", &["x".into(), "y".into(), "z".into()], &[0.5, 0.5, 0.0]);
        assert_eq!(p.matches("<path").count(), 2);
        let full = weights_pie("w", &["x".into()], &[1.0]);
        assert!(full.contains("<circle"));
    }
}
