//! Heat maps of segment risk: a snapshot grid (segments by actual/predicted
//! at each horizon) and a timeline grid (segments by time window). Both render
//! to SVG and to a long-format CSV.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::risk::{bin_level, window_average, RiskLevel, ScoreRow};

const CELL_W: f64 = 96.0;
const CELL_H: f64 = 28.0;
const LABEL_W: f64 = 110.0;
const HEADER_H: f64 = 36.0;
const LEGEND_H: f64 = 40.0;
const PAD: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cells,
    Timeline,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cells" => Some(Mode::Cells),
            "timeline" => Some(Mode::Timeline),
            _ => None,
        }
    }
}

/// A colored grid ready to render. `None` cells had no score.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub title: String,
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
}

fn segment_order(rows: &[ScoreRow]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for r in rows {
        if !out.contains(&r.segment_id) {
            out.push(r.segment_id.clone());
        }
    }
    out
}

/// Snapshot at time `at`. By default, the latest timestamp with an actual
/// score, or the latest timestamp when there is none (the end of a
/// recording has no known future). Columns are actual and predicted scores
/// at 1 s and 2 s.
pub fn cells_grid(rows: &[ScoreRow], at: Option<f64>) -> Result<Grid> {
    let latest = |rows: &mut dyn Iterator<Item = &ScoreRow>| rows.map(|r| r.t).fold(f64::NEG_INFINITY, f64::max);
    let at = match at {
        Some(t) => t,
        None => {
            let known = latest(&mut rows.iter().filter(|r| r.actual_1s.is_some() || r.actual_2s.is_some()));
            if known.is_finite() { known } else { latest(&mut rows.iter()) }
        }
    };
    let segments = segment_order(rows);
    let mut cells = Vec::with_capacity(segments.len());
    for seg in &segments {
        let row = rows.iter().filter(|r| &r.segment_id == seg && (r.t - at).abs() < 1e-6).last();
        cells.push(match row {
            Some(r) => vec![r.actual_1s, r.predicted_1s, r.actual_2s, r.predicted_2s],
            None => vec![None; 4],
        });
    }
    Ok(Grid {
        title: if rows.is_empty() { "Segment risk".into() } else { format!("Segment risk at t = {at:.2} s") },
        rows: segments,
        columns: ["actual 1s", "predicted 1s", "actual 2s", "predicted 2s"].map(String::from).to_vec(),
        cells,
    })
}

/// Window means of one score column per segment.
pub fn timeline_grid(rows: &[ScoreRow], horizon: u8, predicted: bool, window: f64) -> Result<Grid> {
    let pick = |r: &ScoreRow| match (horizon, predicted) {
        (1, false) => r.actual_1s,
        (1, true) => r.predicted_1s,
        (2, false) => r.actual_2s,
        (2, true) => r.predicted_2s,
        _ => None,
    };
    if !(1..=2).contains(&horizon) {
        return Err(Error::Domain(format!("unsupported horizon {horizon}")));
    }
    let segments = segment_order(rows);
    let mut series = Vec::with_capacity(segments.len());
    let mut starts: Vec<f64> = Vec::new();
    for seg in &segments {
        let samples: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| &r.segment_id == seg)
            .filter_map(|r| Some((r.t, pick(r)?)))
            .collect();
        let means = window_average(&samples, window)?;
        for &(s, _) in &means {
            if !starts.iter().any(|&x| (x - s).abs() < 1e-9) {
                starts.push(s);
            }
        }
        series.push(means);
    }
    starts.sort_by(f64::total_cmp);
    let cells = series
        .iter()
        .map(|means| {
            starts
                .iter()
                .map(|&s| means.iter().find(|(x, _)| (x - s).abs() < 1e-9).map(|&(_, v)| v))
                .collect()
        })
        .collect();
    let kind = if predicted { "predicted" } else { "actual" };
    Ok(Grid {
        title: format!("Mean {kind} risk, {horizon} s horizon, {window} s windows"),
        rows: segments,
        columns: starts.iter().map(|s| format!("{s:.0} s")).collect(),
        cells,
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Deterministic SVG rendering; every filled cell uses one of the five level
/// colors.
pub fn render_svg(grid: &Grid) -> Result<String> {
    let width = PAD * 2.0 + LABEL_W + CELL_W * grid.columns.len().max(1) as f64;
    let width = width.max(PAD * 2.0 + 5.0 * CELL_W);
    let height = PAD * 2.0 + HEADER_H + CELL_H * grid.rows.len() as f64 + LEGEND_H;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(&grid.title));
    let _ = writeln!(s, r#"<text x="{PAD}" y="{}" font-size="14">{}</text>"#, PAD + 12.0, escape(&grid.title));
    let top = PAD + HEADER_H;
    for (j, col) in grid.columns.iter().enumerate() {
        let x = PAD + LABEL_W + CELL_W * (j as f64 + 0.5);
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#, top - 6.0, escape(col));
    }
    for (i, row) in grid.rows.iter().enumerate() {
        let y = top + CELL_H * i as f64;
        let _ = writeln!(s, r#"<text x="{PAD}" y="{}">{}</text>"#, y + CELL_H * 0.65, escape(row));
        for (j, cell) in grid.cells[i].iter().enumerate() {
            let x = PAD + LABEL_W + CELL_W * j as f64;
            match cell {
                Some(v) => {
                    let level = bin_level(*v)?;
                    let ink = if matches!(level, RiskLevel::Medium | RiskLevel::Large) { "#000000" } else { "#ffffff" };
                    let _ = writeln!(
                        s,
                        r##"<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{}" stroke="#ffffff"/>"##,
                        level.hex()
                    );
                    let _ = writeln!(
                        s,
                        r#"<text x="{}" y="{}" text-anchor="middle" fill="{ink}">{v:.1}</text>"#,
                        x + CELL_W / 2.0,
                        y + CELL_H * 0.65
                    );
                }
                None => {
                    let _ = writeln!(
                        s,
                        r##"<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="none" stroke="#999999" stroke-dasharray="4 3"/>"##
                    );
                }
            }
        }
    }
    let legend_y = top + CELL_H * grid.rows.len() as f64 + 12.0;
    for (k, level) in RiskLevel::ALL.into_iter().enumerate() {
        let x = PAD + CELL_W * k as f64;
        let _ = writeln!(s, r#"<rect x="{x}" y="{legend_y}" width="14" height="14" fill="{}"/>"#, level.hex());
        let label = format!("{} ({}-{})", level.name().replace('_', " "), 20 * k, 20 * (k + 1));
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, x + 18.0, legend_y + 11.0, escape(&label));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Long-format CSV: one line per cell.
pub fn write_grid_csv<W: Write>(w: W, grid: &Grid) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["segment_id", "column", "score", "level", "color"])?;
    for (i, row) in grid.rows.iter().enumerate() {
        for (j, col) in grid.columns.iter().enumerate() {
            let (score, level, color) = match grid.cells[i][j] {
                Some(v) => {
                    let l = bin_level(v)?;
                    (format!("{v:.3}"), l.name().to_string(), l.hex().to_string())
                }
                None => Default::default(),
            };
            out.write_record([row.as_str(), col.as_str(), &score, &level, &color])?;
        }
    }
    out.flush()?;
    Ok(())
}
