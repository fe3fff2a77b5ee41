//! Self-contained SVG line charts. Each file embeds its plotted series as
//! JSON inside `<metadata>` so the numbers travel with the picture.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::EvalResult;
use crate::error::Error;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 130.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

const ACTION_COLOURS: [&str; 3] = ["#1f77b4", "#7f7f7f", "#d62728"];
const POLICY_COLOURS: [(&str, &str); 3] = [("learned", "#2ca02c"), ("random", "#9467bd"), ("bandit", "#ff7f0e")];

struct Series<'a> {
    label: &'a str,
    colour: &'a str,
    values: Vec<f64>,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn fmt_num(x: f64) -> String {
    format!("{:.2}", x)
}

fn line_chart(title: &str, y_label: &str, y_max: f64, series: &[Series<'_>]) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    let x_of = |t: usize| MARGIN_LEFT + if n > 1 { plot_w * t as f64 / (n - 1) as f64 } else { 0.0 };
    let y_of = |v: f64| MARGIN_TOP + plot_h * (1.0 - (v / y_max).clamp(0.0, 1.0));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let data: Vec<serde_json::Value> =
        series.iter().map(|s| serde_json::json!({ "label": s.label, "values": s.values })).collect();
    let _ = writeln!(svg, "<metadata>{}</metadata>", escape(&serde_json::Value::Array(data).to_string()));
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    // axes and grid
    let x0 = MARGIN_LEFT;
    let y0 = MARGIN_TOP + plot_h;
    let _ = writeln!(svg, r##"<g stroke="#cccccc" stroke-width="1">"##);
    for i in 0..=4 {
        let v = y_max * f64::from(i) / 4.0;
        let y = y_of(v);
        let _ =
            writeln!(svg, r#"<line x1="{x0}" y1="{}" x2="{}" y2="{}"/>"#, fmt_num(y), fmt_num(x0 + plot_w), fmt_num(y));
    }
    let _ = writeln!(svg, "</g>");
    let _ =
        writeln!(svg, r#"<path d="M{x0},{MARGIN_TOP} L{x0},{y0} L{},{y0}" fill="none" stroke="black"/>"#, x0 + plot_w);
    for i in 0..=4 {
        let v = y_max * f64::from(i) / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            fmt_num(x0 - 6.0),
            fmt_num(y_of(v) + 4.0),
            fmt_num(v)
        );
    }
    if n > 0 {
        let step = (n / 6).max(1);
        for t in (0..n).step_by(step) {
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="middle">{t}</text>"#,
                fmt_num(x_of(t)),
                fmt_num(y0 + 16.0)
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">time-step</text>"#,
        fmt_num(x0 + plot_w / 2.0),
        fmt_num(HEIGHT - 10.0)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        fmt_num(MARGIN_TOP + plot_h / 2.0),
        fmt_num(MARGIN_TOP + plot_h / 2.0),
        escape(y_label)
    );

    for (i, s) in series.iter().enumerate() {
        let points: Vec<String> =
            s.values.iter().enumerate().map(|(t, v)| format!("{},{}", fmt_num(x_of(t)), fmt_num(y_of(*v)))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
            s.colour,
            points.join(" ")
        );
        let ly = MARGIN_TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"/>"#,
            lx + 18.0,
            s.colour
        );
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 24.0, ly + 4.0, escape(s.label));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Per-step probability of each source under one policy.
pub fn render_action_chart(result: &EvalResult) -> String {
    let series: Vec<Series<'_>> = ["left", "centre", "right"]
        .iter()
        .enumerate()
        .map(|(i, label)| Series {
            label,
            colour: ACTION_COLOURS[i],
            values: result.action_freq.iter().map(|row| row[i]).collect(),
        })
        .collect();
    let title = format!("{}: action probabilities ({})", result.profile, result.policy);
    line_chart(&title, "probability", 1.0, &series)
}

/// Cumulative reward curves of several policies against the same user.
pub fn render_reward_chart(profile: &str, results: &[&EvalResult]) -> String {
    let series: Vec<Series<'_>> = results
        .iter()
        .enumerate()
        .map(|(i, r)| Series {
            label: &r.policy,
            colour: POLICY_COLOURS.iter().find(|(tag, _)| *tag == r.policy).map_or(ACTION_COLOURS[i % 3], |(_, c)| c),
            values: r.cum_reward_mean.clone(),
        })
        .collect();
    let top = results.iter().flat_map(|r| r.cum_reward_mean.iter().copied()).fold(0.0, f64::max);
    let y_max = if top > 0.0 { top.ceil() } else { 1.0 };
    line_chart(&format!("{profile}: expected cumulative reward"), "reward", y_max, &series)
}

fn file_stem(profile: &str) -> String {
    profile.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Writes `<prefix><profile>_actions.svg` and `<prefix><profile>_reward.svg`
/// for each profile in `results`, in first-seen order. The action chart
/// shows the learned policy when present, otherwise the first result for
/// that profile.
pub fn emit_svg_charts(results: &[EvalResult], path_prefix: &Path) -> Result<Vec<PathBuf>, Error> {
    let mut profiles: Vec<&str> = Vec::new();
    for r in results {
        if !profiles.contains(&r.profile.as_str()) {
            profiles.push(&r.profile);
        }
    }
    let prefix = path_prefix.to_string_lossy();
    let mut written = Vec::new();
    for profile in profiles {
        let mine: Vec<&EvalResult> = results.iter().filter(|r| r.profile == profile).collect();
        let shown = mine.iter().find(|r| r.policy == "learned").unwrap_or(&mine[0]);
        let stem = file_stem(profile);
        let actions = PathBuf::from(format!("{prefix}{stem}_actions.svg"));
        std::fs::write(&actions, render_action_chart(shown))?;
        let reward = PathBuf::from(format!("{prefix}{stem}_reward.svg"));
        std::fs::write(&reward, render_reward_chart(profile, &mine))?;
        written.push(actions);
        written.push(reward);
    }
    Ok(written)
}
