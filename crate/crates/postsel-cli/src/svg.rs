//! Minimal static SVG line charts: axes, tick labels, one or more series,
//! and an optional dashed horizontal reference line.

const WIDTH: f64 = 840.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 56.0;

pub struct Series<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub color: &'a str,
    pub label: &'a str,
}

pub struct LineChart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub series: Vec<Series<'a>>,
    /// Dashed horizontal reference line (e.g. the nominal level delta).
    pub reference: Option<(f64, &'a str)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect()
}

impl LineChart<'_> {
    pub fn render(&self) -> String {
        let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in &self.series {
            for &x in s.x {
                x_lo = x_lo.min(x);
                x_hi = x_hi.max(x);
            }
            for &y in s.y {
                y_lo = y_lo.min(y);
                y_hi = y_hi.max(y);
            }
        }
        if let Some((r, _)) = self.reference {
            y_lo = y_lo.min(r);
            y_hi = y_hi.max(r);
        }
        if !(x_lo < x_hi) {
            x_hi = x_lo + 1.0;
        }
        if !(y_lo < y_hi) {
            y_hi = y_lo + 1.0;
        }
        let pad = 0.06 * (y_hi - y_lo);
        y_lo -= pad;
        y_hi += pad;

        let px = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * (WIDTH - MARGIN_L - MARGIN_R);
        let py = |y: f64| HEIGHT - MARGIN_B - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - MARGIN_T - MARGIN_B);

        let mut out = String::with_capacity(4096);
        out.push_str(&format!(
            r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{:.1}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>
"#,
            WIDTH / 2.0,
            escape(self.title)
        ));

        // axes
        out.push_str(&format!(
            "<line x1=\"{l:.1}\" y1=\"{b:.1}\" x2=\"{r:.1}\" y2=\"{b:.1}\" stroke=\"black\"/>\n\
             <line x1=\"{l:.1}\" y1=\"{t:.1}\" x2=\"{l:.1}\" y2=\"{b:.1}\" stroke=\"black\"/>\n",
            l = MARGIN_L,
            r = WIDTH - MARGIN_R,
            t = MARGIN_T,
            b = HEIGHT - MARGIN_B
        ));
        for x in ticks(x_lo, x_hi, 6) {
            out.push_str(&format!(
                "<line x1=\"{0:.1}\" y1=\"{1:.1}\" x2=\"{0:.1}\" y2=\"{2:.1}\" stroke=\"black\"/>\n\
                 <text x=\"{0:.1}\" y=\"{3:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{4}</text>\n",
                px(x),
                HEIGHT - MARGIN_B,
                HEIGHT - MARGIN_B + 5.0,
                HEIGHT - MARGIN_B + 20.0,
                format_tick(x)
            ));
        }
        for y in ticks(y_lo, y_hi, 5) {
            out.push_str(&format!(
                "<line x1=\"{1:.1}\" y1=\"{0:.1}\" x2=\"{2:.1}\" y2=\"{0:.1}\" stroke=\"black\"/>\n\
                 <text x=\"{3:.1}\" y=\"{4:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{5}</text>\n",
                py(y),
                MARGIN_L - 5.0,
                MARGIN_L,
                MARGIN_L - 9.0,
                py(y) + 4.0,
                format_tick(y)
            ));
        }
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
            (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
            HEIGHT - 14.0,
            escape(self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"18\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">{}</text>\n",
            (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
            (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
            escape(self.y_label)
        ));

        if let Some((r, label)) = self.reference {
            out.push_str(&format!(
                "<line x1=\"{1:.1}\" y1=\"{0:.1}\" x2=\"{2:.1}\" y2=\"{0:.1}\" stroke=\"firebrick\" stroke-dasharray=\"6 4\"/>\n",
                py(r),
                MARGIN_L,
                WIDTH - MARGIN_R
            ));
            out.push_str(&format!(
                "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"firebrick\">{}</text>\n",
                WIDTH - MARGIN_R - 80.0,
                py(r) - 5.0,
                escape(label)
            ));
        }

        for s in &self.series {
            let pts: Vec<String> = s
                .x
                .iter()
                .zip(s.y)
                .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            out.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\" points=\"{}\"/>\n",
                s.color,
                pts.join(" ")
            ));
        }
        let mut ly = MARGIN_T + 10.0;
        for s in &self.series {
            out.push_str(&format!(
                "<line x1=\"{0:.1}\" y1=\"{1:.1}\" x2=\"{2:.1}\" y2=\"{1:.1}\" stroke=\"{3}\" stroke-width=\"1.6\"/>\n\
                 <text x=\"{4:.1}\" y=\"{5:.1}\" font-family=\"sans-serif\" font-size=\"11\">{6}</text>\n",
                MARGIN_L + 8.0,
                ly,
                MARGIN_L + 30.0,
                s.color,
                MARGIN_L + 36.0,
                ly + 4.0,
                escape(s.label)
            ));
            ly += 16.0;
        }

        out.push_str("</svg>\n");
        out
    }
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn balanced_xml(s: &str) -> bool {
        // tiny well-formedness check: every opened tag closes in order
        let mut stack: Vec<String> = Vec::new();
        let mut rest = s;
        while let Some(start) = rest.find('<') {
            rest = &rest[start + 1..];
            let end = match rest.find('>') {
                Some(e) => e,
                None => return false,
            };
            let tag = &rest[..end];
            rest = &rest[end + 1..];
            if tag.starts_with('?') || tag.ends_with('/') || tag.starts_with('!') {
                continue;
            }
            if let Some(name) = tag.strip_prefix('/') {
                match stack.pop() {
                    Some(open) if open == name => {}
                    _ => return false,
                }
            } else {
                let name: String = tag.chars().take_while(|c| !c.is_whitespace()).collect();
                stack.push(name);
            }
        }
        stack.is_empty()
    }

    #[test]
    fn renders_wellformed_svg_with_reference_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [0.05, 0.07, 0.11, 0.05];
        let chart = LineChart {
            title: "size of the <bootstrap> test",
            x_label: "gamma",
            y_label: "rejection probability",
            series: vec![Series {
                x: &x,
                y: &y,
                color: "steelblue",
                label: "bootstrap",
            }],
            reference: Some((0.05, "delta = 0.05")),
        };
        let svg = chart.render();
        assert!(svg.starts_with("<?xml"));
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("&lt;bootstrap&gt;"));
        assert!(balanced_xml(&svg), "unbalanced tags in:\n{svg}");
    }

    #[test]
    fn degenerate_ranges_still_render() {
        let x = [1.0, 1.0];
        let y = [0.3, 0.3];
        let chart = LineChart {
            title: "flat",
            x_label: "x",
            y_label: "y",
            series: vec![Series {
                x: &x,
                y: &y,
                color: "black",
                label: "s",
            }],
            reference: None,
        };
        assert!(balanced_xml(&chart.render()));
    }
}
