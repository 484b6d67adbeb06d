//! Deterministic SVG figures: min/max segment charts of error difference
//! against log10(p), and Same/Other/All error dot plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::resampling::TrainPolicy;
use crate::stats::{summarize_dataset, Comparison, ErrorSummary, SubsetComparison, LOG10_P_FLOOR};

const PANEL_W: f64 = 360.0;
const MARGIN_L: f64 = 110.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 45.0;
const ROW_H: f64 = 26.0;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Scale {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, px_lo: f64, px_hi: f64) -> Self {
        let (lo, hi) = if hi - lo < 1e-9 { (lo - 1.0, hi + 1.0) } else { (lo, hi) };
        Scale { lo, hi, px_lo, px_hi }
    }

    fn map(&self, v: f64) -> f64 {
        let v = v.clamp(self.lo, self.hi);
        self.px_lo + (v - self.lo) / (self.hi - self.lo) * (self.px_hi - self.px_lo)
    }

    fn ticks(&self) -> Vec<f64> {
        let span = self.hi - self.lo;
        let raw = span / 4.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let mut t = (self.lo / step).ceil() * step;
        let mut out = Vec::new();
        while t <= self.hi + 1e-9 * span {
            out.push(if t.abs() < 1e-12 { 0.0 } else { t });
            t += step;
        }
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.1}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

/// One dataset's marks on a segment chart, already in pixel space.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentMark {
    pub data: String,
    pub learner: String,
    pub comparison: Comparison,
    /// Error difference range on the x axis.
    pub x_min: f64,
    pub x_max: f64,
    pub x_mean: f64,
    /// log10(p) range on the y axis.
    pub y_min: f64,
    pub y_max: f64,
    pub y_mean: f64,
}

/// Pixel extent of a segment chart's plotting area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotArea {
    pub left: f64,
    pub right: f64,
    pub top: f64,
    pub bottom: f64,
}

#[derive(Debug, Clone)]
pub struct SegmentLayout {
    pub area: PlotArea,
    pub width: f64,
    pub height: f64,
    pub marks: Vec<SegmentMark>,
    x: Scale,
    y: Scale,
}

/// Lay out one segment per comparison group: a horizontal bar over the
/// error differences of its subsets and a vertical bar over their log10(p)
/// range, crossing at the means.
pub fn segment_layout(comparisons: &[SubsetComparison]) -> Result<SegmentLayout> {
    let summaries = summarize_dataset(comparisons);
    if summaries.is_empty() {
        return Err(Error::NothingToPlot);
    }
    let y_lo = summaries
        .iter()
        .map(|s| s.min_log10p.max(LOG10_P_FLOOR))
        .fold(f64::INFINITY, f64::min)
        .min(-1.0)
        .floor();
    let x_lo = summaries.iter().map(|s| s.min_diff).fold(f64::INFINITY, f64::min).min(0.0);
    let x_hi = summaries.iter().map(|s| s.max_diff).fold(f64::NEG_INFINITY, f64::max).max(0.0);
    let pad = ((x_hi - x_lo) * 0.05).max(0.5);

    let width = MARGIN_L + PANEL_W + MARGIN_R;
    let height = MARGIN_T + 300.0 + MARGIN_B;
    let area = PlotArea {
        left: MARGIN_L,
        right: MARGIN_L + PANEL_W,
        top: MARGIN_T,
        bottom: MARGIN_T + 300.0,
    };
    let x = Scale::new(x_lo - pad, x_hi + pad, area.left, area.right);
    let y = Scale::new(y_lo, 0.0, area.bottom, area.top);
    let marks = summaries
        .iter()
        .map(|s| SegmentMark {
            data: s.data.clone(),
            learner: s.learner.clone(),
            comparison: s.comparison,
            x_min: x.map(s.min_diff),
            x_max: x.map(s.max_diff),
            x_mean: x.map(s.mean_diff),
            y_min: y.map(s.min_log10p),
            y_max: y.map(s.max_log10p),
            y_mean: y.map(s.mean_log10p),
        })
        .collect();
    Ok(SegmentLayout {
        area,
        width,
        height,
        marks,
        x,
        y,
    })
}

const PALETTE: [&str; 8] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"];

fn svg_open(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{w:.0}" height="{h:.0}" fill="white"/>"#);
}

fn x_axis(out: &mut String, s: &Scale, y_px: f64, label: &str) {
    let _ = writeln!(
        out,
        r##"<line x1="{:.2}" y1="{y_px:.2}" x2="{:.2}" y2="{y_px:.2}" stroke="#333"/>"##,
        s.px_lo, s.px_hi
    );
    for t in s.ticks() {
        let px = s.map(t);
        let _ = writeln!(
            out,
            r##"<line x1="{px:.2}" y1="{y_px:.2}" x2="{px:.2}" y2="{:.2}" stroke="#333"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            y_px + 4.0,
            y_px + 16.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (s.px_lo + s.px_hi) / 2.0,
        y_px + 32.0,
        escape(label)
    );
}

/// One SVG per comparison kind present in the input, keyed by its name.
pub fn segment_charts(comparisons: &[SubsetComparison]) -> Result<Vec<(String, String)>> {
    let mut by_kind: BTreeMap<Comparison, Vec<SubsetComparison>> = BTreeMap::new();
    for c in comparisons {
        by_kind.entry(c.comparison).or_default().push(c.clone());
    }
    if by_kind.is_empty() {
        return Err(Error::NothingToPlot);
    }
    by_kind
        .into_iter()
        .map(|(kind, rows)| Ok((kind.to_string(), segment_chart(&rows)?)))
        .collect()
}

pub fn segment_chart(comparisons: &[SubsetComparison]) -> Result<String> {
    let layout = segment_layout(comparisons)?;
    let a = layout.area;
    let mut out = String::new();
    svg_open(&mut out, layout.width, layout.height + 14.0 * layout.marks.len() as f64);
    let kinds: Vec<&str> = {
        let mut k: Vec<&str> = layout.marks.iter().map(|m| m.comparison.as_str()).collect();
        k.dedup();
        k
    };
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        (a.left + a.right) / 2.0,
        escape(&kinds.join(", "))
    );
    let zero = layout.x.map(0.0);
    let _ = writeln!(
        out,
        r##"<line x1="{zero:.2}" y1="{:.2}" x2="{zero:.2}" y2="{:.2}" stroke="#bbb" stroke-dasharray="4 3"/>"##,
        a.top, a.bottom
    );
    x_axis(&mut out, &layout.x, a.bottom, "error difference (percent)");
    let _ = writeln!(
        out,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#333"/>"##,
        a.left, a.top, a.left, a.bottom
    );
    for t in layout.y.ticks() {
        let py = layout.y.map(t);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            a.left - 6.0,
            py + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" transform="rotate(-90 16 {:.2})" text-anchor="middle">log10(p)</text>"#,
        (a.top + a.bottom) / 2.0,
        (a.top + a.bottom) / 2.0
    );
    for (i, m) in layout.marks.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            out,
            r#"<g stroke="{color}" stroke-width="2"><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/></g><circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#,
            m.x_min, m.y_mean, m.x_max, m.y_mean, m.x_mean, m.y_min, m.x_mean, m.y_max, m.x_mean, m.y_mean
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" fill="{color}">{} ({})</text>"#,
            a.left,
            layout.height + 14.0 * i as f64,
            escape(&m.data),
            escape(&m.learner)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Same/Other/All mean ± SD error dot plots for one dataset and learner,
/// one panel per test subset.
pub fn error_dot_plot(errors: &[ErrorSummary]) -> Result<String> {
    if errors.is_empty() {
        return Err(Error::NothingToPlot);
    }
    let mut panels: BTreeMap<&str, Vec<&ErrorSummary>> = BTreeMap::new();
    for e in errors {
        panels.entry(e.test_subset.as_str()).or_default().push(e);
    }
    let lo = errors
        .iter()
        .map(|e| e.mean_error - e.sd_error)
        .fold(f64::INFINITY, f64::min)
        .max(0.0)
        .floor();
    let hi = errors
        .iter()
        .map(|e| e.mean_error + e.sd_error)
        .fold(f64::NEG_INFINITY, f64::max)
        .ceil();
    let x = Scale::new(lo, hi, MARGIN_L, MARGIN_L + PANEL_W);
    let panel_h = ROW_H * TrainPolicy::ALL.len() as f64 + 20.0;
    let width = MARGIN_L + PANEL_W + MARGIN_R;
    let height = MARGIN_T + panel_h * panels.len() as f64 + MARGIN_B;

    let mut out = String::new();
    svg_open(&mut out, width, height);
    let first = &errors[0];
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="13">{} ({})</text>"#,
        MARGIN_L + PANEL_W / 2.0,
        escape(&first.data),
        escape(&first.learner)
    );
    for (pi, (subset, rows)) in panels.iter().enumerate() {
        let top = MARGIN_T + panel_h * pi as f64;
        let _ = writeln!(
            out,
            r##"<rect x="{MARGIN_L:.2}" y="{top:.2}" width="{PANEL_W:.2}" height="{:.2}" fill="#f4f4f4"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-weight="bold">{}</text>"##,
            panel_h - 8.0,
            width - MARGIN_R,
            top + 12.0,
            escape(subset)
        );
        for (ri, policy) in TrainPolicy::ALL.iter().enumerate() {
            let cy = top + ROW_H * (ri as f64 + 0.6);
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{policy}</text>"#,
                MARGIN_L - 6.0,
                cy + 4.0
            );
            if let Some(e) = rows.iter().find(|e| e.policy == *policy) {
                let _ = writeln!(
                    out,
                    r##"<line x1="{:.2}" y1="{cy:.2}" x2="{:.2}" y2="{cy:.2}" stroke="#222"/><circle cx="{:.2}" cy="{cy:.2}" r="3.5" fill="#222"/>"##,
                    x.map(e.mean_error - e.sd_error),
                    x.map(e.mean_error + e.sd_error),
                    x.map(e.mean_error)
                );
            }
        }
    }
    x_axis(&mut out, &x, height - MARGIN_B + 4.0, "test error (percent), mean ± SD over folds");
    out.push_str("</svg>\n");
    Ok(out)
}

/// [`error_dot_plot`] for every (dataset, learner) pair, keyed `data_learner`.
pub fn error_dot_plots(errors: &[ErrorSummary]) -> Result<Vec<(String, String)>> {
    let mut groups: BTreeMap<(String, String), Vec<ErrorSummary>> = BTreeMap::new();
    for e in errors {
        groups.entry((e.data.clone(), e.learner.clone())).or_default().push(e.clone());
    }
    if groups.is_empty() {
        return Err(Error::NothingToPlot);
    }
    groups
        .into_iter()
        .map(|((d, l), rows)| Ok((format!("{d}_{l}"), error_dot_plot(&rows)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cmp(subset: &str, diff: f64, log10_p: f64) -> SubsetComparison {
        SubsetComparison {
            data: "d".into(),
            learner: "featureless".into(),
            test_subset: subset.into(),
            comparison: Comparison::AllVsSame,
            mean_diff: diff,
            t_stat: None,
            p_value: 10f64.powf(log10_p),
            log10_p,
            k_used: 10,
        }
    }

    #[test]
    fn clamped_p_sits_on_the_left_edge() {
        let rows = vec![cmp("a", 12.0, -300.0), cmp("b", -2.0, -1.5)];
        let layout = segment_layout(&rows).unwrap();
        let m = &layout.marks[0];
        assert_eq!(m.y_min, layout.area.bottom);
        let svg = segment_chart(&rows).unwrap();
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn negative_diffs_left_of_zero() {
        let rows = vec![cmp("a", -2.0, -1.0), cmp("b", -1.5, -0.8)];
        let layout = segment_layout(&rows).unwrap();
        assert_eq!(layout.marks.len(), 1);
        let zero = layout.x.map(0.0);
        assert!(layout.marks[0].x_max < zero);
        assert!(layout.marks[0].x_min < layout.marks[0].x_max);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(segment_chart(&[]), Err(Error::NothingToPlot)));
        assert!(matches!(error_dot_plots(&[]), Err(Error::NothingToPlot)));
    }

    #[test]
    fn deterministic_output() {
        let rows = vec![cmp("a", 1.0, -2.0), cmp("b", -3.0, -0.5)];
        assert_eq!(segment_chart(&rows).unwrap(), segment_chart(&rows).unwrap());
    }
}
