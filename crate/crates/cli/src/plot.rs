//! Self-contained SVG rendering of regret reports and rate fits.

use std::fmt::Write as _;
use std::path::Path;

use schatten_core::analysis::{experts_envelope, RateFit, RegretReport};
use serde_json::Value;

use crate::error::{CliError, CliResult};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 4] = ["#d62728", "#2ca02c", "#9467bd", "#8c564b"];

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - TOP - BOTTOM)
    }
}

fn header(svg: &mut String, title: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#, WIDTH / 2.0, escape(title));
}

fn axes(svg: &mut String, frame: &Frame, x_label: &str, y_label: &str, ticks_x: &[(f64, String)], ticks_y: &[(f64, String)]) {
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for (v, label) in ticks_x {
        let x = frame.px(*v);
        let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{}" stroke="black"/>"#, y0 + 4.0);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{label}</text>"#, y0 + 16.0);
    }
    for (v, label) in ticks_y {
        let y = frame.py(*v);
        let _ = writeln!(svg, r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#, x0 - 4.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#, x0 - 6.0, y + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 12.0, escape(x_label));
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn polyline(svg: &mut String, frame: &Frame, points: &[(f64, f64)], color: &str, attrs: &str) {
    let mut coords = String::new();
    for (x, y) in points {
        let _ = write!(coords, "{:.2},{:.2} ", frame.px(*x), frame.py(*y));
    }
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{attrs}/>"#,
        coords.trim_end()
    );
}

fn legend(svg: &mut String, entries: &[(String, &str)]) {
    for (i, (label, color)) in entries.iter().enumerate() {
        let y = TOP + 12.0 + 14.0 * i as f64;
        let x = LEFT + 12.0;
        let _ = writeln!(svg, r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/>"#, x + 18.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, x + 24.0, y + 4.0, escape(label));
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn linear_ticks(min: f64, max: f64) -> Vec<(f64, String)> {
    (0..=4)
        .map(|i| {
            let v = min + (max - min) * i as f64 / 4.0;
            (v, format_tick(v))
        })
        .collect()
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn envelope_value(entry: &Value, t: f64) -> Option<f64> {
    if entry.get("experts").and_then(Value::as_bool) == Some(true) {
        return Some(experts_envelope(t as usize));
    }
    let coefficient = entry.get("coefficient")?.as_f64()?;
    let exponent = entry.get("exponent")?.as_f64()?;
    let offset = entry.get("offset").and_then(Value::as_f64).unwrap_or(0.0);
    Some(offset + coefficient * t.powf(exponent))
}

/// Cumulative learner loss against the comparator loss prorated over rounds.
/// Envelopes listed under `metadata.envelopes` are drawn on top of the
/// comparator line, so the gap to the learner curve reads as regret.
pub fn render_regret(report: &RegretReport) -> CliResult<String> {
    if report.per_round.is_empty() {
        return Err(CliError::config("report.per_round: empty, nothing to plot"));
    }
    let horizon = report.per_round.len() as f64;
    let prorated = |t: f64| report.comparator_loss * t / horizon;
    let samples: Vec<f64> = (0..=100).map(|i| (horizon * i as f64 / 100.0).max(1.0)).collect();
    let envelopes: Vec<(String, Vec<(f64, f64)>)> = report
        .metadata
        .get("envelopes")
        .and_then(Value::as_array)
        .map(|list| {
            list.iter()
                .filter_map(|e| {
                    let label = e.get("label").and_then(Value::as_str).unwrap_or("envelope").to_string();
                    let points = samples
                        .iter()
                        .map(|&t| envelope_value(e, t).map(|v| (t, prorated(t) + v)))
                        .collect::<Option<Vec<_>>>()?;
                    Some((label, points))
                })
                .collect()
        })
        .unwrap_or_default();

    let curve: Vec<(f64, f64)> = std::iter::once((0.0, 0.0))
        .chain(report.per_round.iter().map(|r| (r.t as f64, r.cumulative)))
        .collect();
    let mut y_max = curve.iter().map(|p| p.1).fold(report.comparator_loss, f64::max);
    for (_, points) in &envelopes {
        y_max = points.iter().map(|p| p.1).fold(y_max, f64::max);
    }
    let y_min = curve.iter().map(|p| p.1).fold(report.comparator_loss.min(0.0), f64::min);
    if !(y_max.is_finite() && y_min.is_finite()) {
        return Err(CliError::config("report: non-finite losses"));
    }
    let y_max = if y_max > y_min { y_max * 1.05 } else { y_min + 1.0 };
    let frame = Frame {
        x_min: 0.0,
        x_max: horizon,
        y_min,
        y_max,
    };

    let mut svg = String::new();
    header(&mut svg, &format!("Cumulative loss, T = {}, regret = {:.4}", report.per_round.len(), report.regret));
    axes(&mut svg, &frame, "round t", "loss", &linear_ticks(0.0, horizon), &linear_ticks(y_min, y_max));
    let mut legend_entries = vec![("learner cumulative loss".to_string(), "#1f77b4")];
    polyline(&mut svg, &frame, &curve, "#1f77b4", r#" data-series="learner""#);
    polyline(
        &mut svg,
        &frame,
        &[(0.0, 0.0), (horizon, report.comparator_loss)],
        "#ff7f0e",
        r#" stroke-dasharray="6 3" data-series="comparator""#,
    );
    legend_entries.push((format!("comparator loss {:.4}", report.comparator_loss), "#ff7f0e"));
    for (i, (label, points)) in envelopes.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        polyline(&mut svg, &frame, points, color, r#" stroke-dasharray="2 2" data-series="envelope""#);
        legend_entries.push((format!("comparator + {label}"), color));
    }
    legend(&mut svg, &legend_entries);
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Log-log plot of mean regret with error bars, the fitted line and a
/// reference line of slope 1/2 through the first point.
pub fn render_rate_fit(fit: &RateFit) -> CliResult<String> {
    if fit.horizons.is_empty() || fit.horizons.len() != fit.means.len() || fit.means.len() != fit.stderrs.len() {
        return Err(CliError::config("rate fit: horizons, means and stderrs must be nonempty and of equal length"));
    }
    if fit.means.iter().any(|m| !(*m > 0.0 && m.is_finite())) || fit.horizons.contains(&0) {
        return Err(CliError::config("rate fit: horizons and means must be positive for log axes"));
    }
    let lx: Vec<f64> = fit.horizons.iter().map(|&t| (t as f64).log10()).collect();
    let lo = |m: f64, s: f64| (m - s).max(m * 1e-3).log10();
    let hi = |m: f64, s: f64| (m + s).log10();
    let x_min = lx[0] - 0.1;
    let x_max = lx[lx.len() - 1] + 0.1;
    let first = (fit.horizons[0] as f64, fit.means[0]);
    let reference = |t: f64| first.1 * (t / first.0).sqrt();
    let fitted = |t: f64| fit.predict(t);
    let (t_lo, t_hi) = (10f64.powf(x_min), 10f64.powf(x_max));
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for (m, s) in fit.means.iter().zip(&fit.stderrs) {
        y_min = y_min.min(lo(*m, *s));
        y_max = y_max.max(hi(*m, *s));
    }
    for t in [t_lo, t_hi] {
        for v in [reference(t), fitted(t)] {
            if v > 0.0 && v.is_finite() {
                y_min = y_min.min(v.log10());
                y_max = y_max.max(v.log10());
            }
        }
    }
    let pad = ((y_max - y_min) * 0.05).max(0.05);
    let frame = Frame {
        x_min,
        x_max,
        y_min: y_min - pad,
        y_max: y_max + pad,
    };
    let decade_ticks = |a: f64, b: f64| -> Vec<(f64, String)> {
        (a.ceil() as i32..=b.floor() as i32).map(|k| (k as f64, format!("1e{k}"))).collect()
    };

    let mut svg = String::new();
    header(&mut svg, &format!("Regret rate fit, slope = {:.4}, r2 = {:.4}", fit.slope, fit.r2));
    let mut x_ticks = decade_ticks(x_min, x_max);
    if x_ticks.len() < 2 {
        x_ticks = fit.horizons.iter().map(|&t| ((t as f64).log10(), t.to_string())).collect();
    }
    let mut y_ticks = decade_ticks(frame.y_min, frame.y_max);
    if y_ticks.len() < 2 {
        y_ticks = linear_ticks(frame.y_min, frame.y_max)
            .into_iter()
            .map(|(v, _)| (v, format_tick(10f64.powf(v))))
            .collect();
    }
    axes(&mut svg, &frame, "horizon T (log)", "mean regret (log)", &x_ticks, &y_ticks);

    for (i, &x) in lx.iter().enumerate() {
        let (m, s) = (fit.means[i], fit.stderrs[i]);
        let px = frame.px(x);
        let _ = writeln!(
            svg,
            r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#1f77b4"/>"##,
            frame.py(lo(m, s)),
            frame.py(hi(m, s))
        );
        let _ = writeln!(svg, r##"<circle cx="{px:.2}" cy="{:.2}" r="3" fill="#1f77b4"/>"##, frame.py(m.log10()));
    }
    let fit_points = [(x_min, fitted(t_lo).log10()), (x_max, fitted(t_hi).log10())];
    polyline(
        &mut svg,
        &frame,
        &fit_points,
        "#d62728",
        &format!(r#" data-series="fit" data-slope="{}""#, fit.slope),
    );
    let ref_points = [(x_min, reference(t_lo).log10()), (x_max, reference(t_hi).log10())];
    polyline(&mut svg, &frame, &ref_points, "#7f7f7f", r#" stroke-dasharray="5 3" data-series="reference" data-slope="0.5""#);
    legend(
        &mut svg,
        &[
            ("mean regret ± stderr".to_string(), "#1f77b4"),
            (format!("fit, slope {:.3}", fit.slope), "#d62728"),
            ("reference slope 0.5".to_string(), "#7f7f7f"),
        ],
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Renders whichever of a regret report or a rate fit the JSON holds.
pub fn render_json(text: &str) -> CliResult<String> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| CliError::config(format!("report: line {} column {}: {e}", e.line(), e.column())))?;
    if value.get("per_round").is_some() {
        let report: RegretReport =
            serde_json::from_value(value).map_err(|e| CliError::config(format!("report: not a regret report: {e}")))?;
        render_regret(&report)
    } else if value.get("slope").is_some() {
        let fit: RateFit =
            serde_json::from_value(value).map_err(|e| CliError::config(format!("report: not a rate fit: {e}")))?;
        render_rate_fit(&fit)
    } else {
        Err(CliError::config("report: expected a regret report (per_round) or a rate fit (slope)"))
    }
}

/// Reads `report_path` and writes the SVG to `out_svg`. Nothing is written on error.
pub fn cmd_plot(report_path: &Path, out_svg: &Path) -> CliResult<()> {
    let text = std::fs::read_to_string(report_path).map_err(|e| CliError::io(report_path, e))?;
    let svg = render_json(&text)?;
    let dir = match out_svg.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = out_svg
        .file_name()
        .ok_or_else(|| CliError::config(format!("output path {} has no file name", out_svg.display())))?;
    crate::run::write_outputs(dir, &[(name.to_string_lossy().into_owned(), svg.into_bytes())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use schatten_core::analysis::{rate_fit, ComparatorSource, RoundRecord};

    fn report(rounds: usize) -> RegretReport {
        let per_round = (1..=rounds)
            .map(|t| RoundRecord {
                t,
                learner_loss: 1.0,
                cumulative: t as f64,
            })
            .collect();
        RegretReport {
            per_round,
            comparator_loss: 2.0,
            regret: rounds as f64 - 2.0,
            comparator_source: ComparatorSource::ClosedForm,
            metadata: serde_json::json!({"envelopes": [{"label": "sqrt", "coefficient": 1.0, "exponent": 0.5, "offset": 0.0}]}),
        }
    }

    #[test]
    fn regret_plot_has_all_series() {
        let svg = render_regret(&report(10)).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        for series in ["learner", "comparator", "envelope"] {
            assert!(svg.contains(&format!(r#"data-series="{series}""#)), "{series}");
        }
        assert!(render_regret(&report(0)).is_err());
    }

    #[test]
    fn rate_plot_has_reference_slope() {
        let hs = [16, 64, 256, 1024];
        let means: Vec<f64> = hs.iter().map(|&t| (t as f64).sqrt()).collect();
        let fit = rate_fit(&hs, &means, &[0.5; 4]).unwrap();
        let svg = render_rate_fit(&fit).unwrap();
        assert!(svg.contains(r#"data-slope="0.5""#));
        assert_eq!(svg.matches("<circle").count(), 4);
    }

    #[test]
    fn dispatch_rejects_unknown_documents() {
        assert!(render_json("{}").is_err());
        assert!(render_json("[").is_err());
        assert!(render_json(&serde_json::to_string(&report(3)).unwrap()).is_ok());
    }
}
