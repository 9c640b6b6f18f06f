//! Bar charts derived from the results CSV.
//!
//! One chart per metric: UUAS for the perceptron probe, DSpr for the
//! structural probe. Each model gets a pair of bars, plain for normal test
//! data and hatched for Jabberwocky data. For probed models the bars show
//! the layer with the lowest dev loss, with the layer-0 score drawn as a
//! white lower portion.

use std::fmt::Write as _;

use crate::artifacts::write_atomic;
use crate::config::Config;
use crate::error::{CliError, Result};

use super::eval::{read_results, results_path, ResultRow};

const PALETTE: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub model: String,
    /// Normal, then Jabberwocky.
    pub values: [f64; 2],
    /// Layer-0 scores, when the chosen layer is not 0 itself.
    pub layer0: Option<[f64; 2]>,
}

fn value(rows: &[ResultRow], model: &str, layer: &str, probe: &str, dataset: &str, metric: &str) -> Option<f64> {
    rows.iter()
        .find(|r| {
            r.model == model && r.layer == layer && r.probe == probe && r.dataset == dataset && r.metric == metric
        })
        .map(|r| r.value)
}

/// Bars for one chart, in the CSV's model order.
pub fn groups(rows: &[ResultRow], metric: &str, probe: &str) -> Vec<Group> {
    let mut models: Vec<&str> = Vec::new();
    for r in rows {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }
    let pair = |model: &str, layer: &str, probe: &str| -> Option<[f64; 2]> {
        Some([
            value(rows, model, layer, probe, "normal", metric)?,
            value(rows, model, layer, probe, "jabberwocky", metric)?,
        ])
    };
    models
        .into_iter()
        .filter_map(|model| {
            if let Some(values) = pair(model, "-", "-") {
                return Some(Group {
                    model: model.to_string(),
                    values,
                    layer0: None,
                });
            }
            let best = rows
                .iter()
                .filter(|r| r.model == model && r.probe == probe && r.metric == "dev_loss")
                .fold(None::<&ResultRow>, |best, r| match best {
                    Some(b) if b.value <= r.value => Some(b),
                    _ => Some(r),
                })?;
            Some(Group {
                model: model.to_string(),
                values: pair(model, &best.layer, probe)?,
                layer0: if best.layer == "0" {
                    None
                } else {
                    pair(model, "0", probe)
                },
            })
        })
        .collect()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(title: &str, provenance: &str, groups: &[Group]) -> String {
    let (left, top, plot_h, bar_w, group_w) = (60.0, 50.0, 240.0, 28.0, 84.0);
    let width = left + group_w * groups.len().max(1) as f64 + 20.0;
    let height = top + plot_h + 70.0;
    let y = |v: f64| top + plot_h * (1.0 - v.clamp(0.0, 1.0));
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, "<!-- {} -->", escape(provenance.trim_start_matches('#').trim()));
    svg.push_str(
        r##"<defs><pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" patternTransform="rotate(45)"><line x1="0" y1="0" x2="0" y2="6" stroke="#000" stroke-width="1.5"/></pattern></defs>
"##,
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        width / 2.0,
        escape(title)
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{left}" y1="{0:.1}" x2="{1:.1}" y2="{0:.1}" stroke="#ddd"/><text x="{2}" y="{3:.1}" text-anchor="end">{v:.2}</text>"##,
            y(v),
            width - 20.0,
            left - 6.0,
            y(v) + 4.0
        );
    }
    for (g, group) in groups.iter().enumerate() {
        let color = PALETTE[g % PALETTE.len()];
        let x0 = left + group_w * g as f64 + 12.0;
        for (k, &v) in group.values.iter().enumerate() {
            let x = x0 + bar_w * k as f64;
            let h = y(0.0) - y(v);
            let _ = writeln!(
                svg,
                r##"<rect x="{x:.1}" y="{:.1}" width="{bar_w}" height="{h:.1}" fill="{color}" stroke="#000"/>"##,
                y(v)
            );
            if let Some(l0) = group.layer0 {
                let h0 = y(0.0) - y(l0[k]);
                let _ = writeln!(
                    svg,
                    r##"<rect x="{x:.1}" y="{:.1}" width="{bar_w}" height="{h0:.1}" fill="#fff" stroke="#000"/>"##,
                    y(l0[k])
                );
            }
            if k == 1 {
                let _ = writeln!(
                    svg,
                    r##"<rect x="{x:.1}" y="{:.1}" width="{bar_w}" height="{h:.1}" fill="url(#hatch)" stroke="#000"/>"##,
                    y(v)
                );
            }
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="9">{v:.2}</text>"#,
                x + bar_w / 2.0,
                y(v) - 3.0
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            x0 + bar_w,
            y(0.0) + 16.0,
            escape(&group.model)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{left}" y="{:.1}" font-size="10">plain: normal test data; hatched: Jabberwocky; white: layer 0</text>"#,
        height - 12.0
    );
    svg.push_str("</svg>\n");
    svg
}

pub const CHARTS: [(&str, &str, &str, &str); 2] = [
    (
        "uuas.svg",
        "uuas",
        "perceptron",
        "UUAS results from the perceptron probe",
    ),
    (
        "dspr.svg",
        "dspr",
        "structural",
        "DSpr results from the structural probe",
    ),
];

pub fn run(config: &Config) -> Result<()> {
    let path = results_path(&config.output_dir);
    if !path.exists() {
        return Err(CliError::Config(format!(
            "no results at {}; run `eval` first",
            path.display()
        )));
    }
    let (provenance, rows) = read_results(&path)?;
    for (file, metric, probe, title) in CHARTS {
        let svg = render_svg(title, &provenance, &groups(&rows, metric, probe));
        write_atomic(&config.output_dir.join("eval").join(file), svg.as_bytes())?;
    }
    Ok(())
}
