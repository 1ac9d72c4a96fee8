//! CSV tables and an SVG line plot of a model's filters.

use std::fmt::Write as _;
use std::path::Path;

use sacsp_core::classify::SacspModel;

use crate::error::CliError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn filter_name(model: &SacspModel, j: usize) -> String {
    let class = model.bank.pairs[j].class_id.label();
    let rank = model.bank.pairs[..j].iter().filter(|p| p.class_id == model.bank.pairs[j].class_id).count();
    format!("class{class}_filter{}", rank + 1)
}

/// Rows `k = 0..=t/2`: frequency then one weight per filter.
pub fn spectral_rows(model: &SacspModel) -> (Vec<String>, Vec<Vec<f64>>) {
    let pairs = &model.bank.pairs;
    let mut header = vec!["frequency_hz".to_string()];
    header.extend((0..pairs.len()).map(|j| filter_name(model, j)));
    let t = pairs[0].spectral.len();
    let rows = (0..=t / 2)
        .map(|k| {
            let mut row = vec![pairs[0].spectral.bin_hz(k)];
            row.extend(pairs.iter().map(|p| p.spectral.weights()[k]));
            row
        })
        .collect();
    (header, rows)
}

/// Rows per channel: channel index then one pattern entry per filter.
pub fn pattern_rows(model: &SacspModel) -> (Vec<String>, Vec<Vec<f64>>) {
    let p = &model.bank.patterns;
    let mut header = vec!["channel_index".to_string()];
    header.extend((0..p.cols()).map(|j| filter_name(model, j)));
    let rows = (0..p.rows())
        .map(|c| {
            let mut row = vec![c as f64];
            row.extend(p.row(c).iter().copied());
            row
        })
        .collect();
    (header, rows)
}

fn write_csv(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// One polyline per filter over `0..fs/2`; the y axis spans `0..1` (unit-norm weights).
pub fn spectral_svg(model: &SacspModel) -> String {
    let (header, rows) = spectral_rows(model);
    let nyquist = model.bank.pairs[0].spectral.fs() / 2.0;
    let y_max = rows
        .iter()
        .flat_map(|r| r[1..].iter().copied())
        .fold(1.0f64, f64::max);
    let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let x = |hz: f64| MARGIN + pw * hz / nyquist;
    let y = |v: f64| HEIGHT - MARGIN - ph * v / y_max;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1, y0, y1) = (x(0.0), x(nyquist), y(0.0), y(y_max));
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for i in 0..=5 {
        let hz = nyquist * i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{hz:.0}</text>"#,
            x(hz),
            y0 + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">frequency (Hz)</text>"#,
        WIDTH / 2.0,
        HEIGHT - 8.0
    );
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{y_max:.2}</text>"#, x0 - 4.0, y1 + 4.0);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">0</text>"#, x0 - 4.0, y0 + 4.0);
    for (j, name) in header[1..].iter().enumerate() {
        let points: Vec<String> = rows.iter().map(|r| format!("{:.3},{:.3}", x(r[0]), y(r[j + 1]))).collect();
        let _ = writeln!(
            s,
            r#"<polyline id="{name}" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            COLORS[j % COLORS.len()],
            points.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn export_all(model: &SacspModel, out_dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let (h, r) = spectral_rows(model);
    write_csv(&out_dir.join("spectral_filters.csv"), &h, &r)?;
    let (h, r) = pattern_rows(model);
    write_csv(&out_dir.join("spatial_patterns.csv"), &h, &r)?;
    let svg = out_dir.join("spectral_filters.svg");
    std::fs::write(&svg, spectral_svg(model)).map_err(|e| CliError::io(&svg, e))
}
