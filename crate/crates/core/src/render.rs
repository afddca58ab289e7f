//! SVG rendering of experiment CSVs.
//!
//! Two table shapes are understood. Vertex tables (columns `x0, x1, ...`,
//! optionally grouped by a `path` column) become polylines projected onto
//! a coordinate pair and cut where they cross the boundary of the unit
//! square. Matrix tables (first column `row`) become heat grids.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{invalid, Error, Result};

/// Artifact names the runner renders when asked to.
pub const RENDERABLE: [&str; 5] = [
    "leaf.csv",
    "refined.csv",
    "class_paths.csv",
    "matrix.csv",
    "residuals.csv",
];

const SIZE: f64 = 512.0;
const MARGIN: f64 = 16.0;

type Pt = (f64, f64);

fn parse_cell(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidInput(format!("non-numeric cell {s:?}")))
}

pub fn render_file(input: &Path, projection: (usize, usize), output: &Path) -> Result<()> {
    let text = std::fs::read_to_string(input)?;
    let svg = render_svg(&text, projection)?;
    std::fs::write(output, svg)?;
    Ok(())
}

pub fn render_svg(csv_text: &str, projection: (usize, usize)) -> Result<String> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::InvalidInput(format!("csv header: {e}")))?
        .iter()
        .map(String::from)
        .collect();
    let records = reader
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| r.iter().map(String::from).collect())
        .collect();
    if header.first().map(String::as_str) == Some("row") {
        let matrix = rows
            .iter()
            .map(|r| r[1..].iter().map(|c| parse_cell(c)).collect())
            .collect::<Result<Vec<Vec<f64>>>>()?;
        return Ok(heat_grid(&matrix));
    }

    let (a, b) = projection;
    let col = |name: String| header.iter().position(|h| *h == name);
    let (Some(ca), Some(cb)) = (col(format!("x{a}")), col(format!("x{b}"))) else {
        return invalid(format!("table has no columns x{a} and x{b}"));
    };
    if a == b {
        return invalid("projection needs two distinct coordinates");
    }
    let group = header.iter().position(|h| h == "path");
    let mut groups: Vec<Vec<Pt>> = Vec::new();
    let mut last_key: Option<&str> = None;
    for r in &rows {
        let key = group.map(|g| r[g].as_str());
        if groups.is_empty() || key != last_key {
            groups.push(Vec::new());
            last_key = key;
        }
        let p = (parse_cell(&r[ca])?, parse_cell(&r[cb])?);
        groups.last_mut().expect("pushed above").push(p);
    }
    Ok(polylines(&groups))
}

fn shortest(d: f64) -> f64 {
    d - d.round()
}

/// Cuts a projected torus curve into pieces lying in the unit square.
/// Consecutive points are joined along the shortest displacement.
pub fn split_at_wraps(points: &[Pt]) -> Vec<Vec<Pt>> {
    let Some(&first) = points.first() else {
        return Vec::new();
    };
    let mut pieces = Vec::new();
    let mut cur = vec![first];
    // the walk continues from where the previous segment ended, which may be
    // on the face x = 1 while the stored vertex reads 0
    let mut pos = first;
    for w in points.windows(2) {
        let mut start = pos;
        let mut rem = (shortest(w[1].0 - w[0].0), shortest(w[1].1 - w[0].1));
        loop {
            let end = (start.0 + rem.0, start.1 + rem.1);
            // first exit through a face of [0,1]^2, if any
            let mut exit: Option<(f64, usize, f64)> = None;
            for (axis, (s, e)) in [(start.0, end.0), (start.1, end.1)].into_iter().enumerate() {
                let hit = if e > 1.0 {
                    Some(((1.0 - s) / (e - s), -1.0))
                } else if e < 0.0 {
                    Some(((0.0 - s) / (e - s), 1.0))
                } else {
                    None
                };
                if let Some((t, shift)) = hit {
                    if exit.is_none_or(|(best, _, _)| t < best) {
                        exit = Some((t, axis, shift));
                    }
                }
            }
            let Some((t, axis, shift)) = exit else {
                cur.push(end);
                pos = end;
                break;
            };
            let boundary = (start.0 + t * rem.0, start.1 + t * rem.1);
            cur.push(boundary);
            pieces.push(std::mem::take(&mut cur));
            let mut wrapped = boundary;
            if axis == 0 {
                wrapped.0 += shift;
            } else {
                wrapped.1 += shift;
            }
            cur.push(wrapped);
            start = wrapped;
            rem = (rem.0 * (1.0 - t), rem.1 * (1.0 - t));
        }
    }
    pieces.push(cur);
    pieces
}

fn to_screen(p: Pt) -> Pt {
    let span = SIZE - 2.0 * MARGIN;
    (MARGIN + p.0 * span, SIZE - MARGIN - p.1 * span)
}

fn header_svg() -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(
        s,
        r##"<rect width="{SIZE}" height="{SIZE}" fill="#ffffff"/>"##
    );
    let span = SIZE - 2.0 * MARGIN;
    let _ = writeln!(
        s,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{span}" height="{span}" fill="none" stroke="#888888"/>"##
    );
    s
}

fn polylines(groups: &[Vec<Pt>]) -> String {
    let mut s = header_svg();
    for g in groups {
        if g.len() == 1 {
            let (x, y) = to_screen(g[0]);
            let _ = writeln!(
                s,
                r##"<circle cx="{x:.9}" cy="{y:.9}" r="3" fill="#1f4e9c"/>"##
            );
            continue;
        }
        for piece in split_at_wraps(g) {
            let pts: Vec<String> = piece
                .iter()
                .map(|&p| {
                    let (x, y) = to_screen(p);
                    format!("{x:.9},{y:.9}")
                })
                .collect();
            let _ = writeln!(
                s,
                r##"<polyline points="{}" fill="none" stroke="#1f4e9c" stroke-width="1"/>"##,
                pts.join(" ")
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Blue-to-red ramp on [0,1].
fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (40.0 + 200.0 * t).round() as u8;
    let g = (80.0 + 80.0 * (1.0 - (2.0 * t - 1.0).abs())).round() as u8;
    let b = (220.0 - 180.0 * t).round() as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn heat_grid(m: &[Vec<f64>]) -> String {
    let mut s = header_svg();
    let rows = m.len();
    let cols = m.iter().map(Vec::len).max().unwrap_or(0);
    if rows == 0 || cols == 0 {
        s.push_str("</svg>\n");
        return s;
    }
    let finite = m.iter().flatten().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    let span = SIZE - 2.0 * MARGIN;
    let (w, h) = (span / cols as f64, span / rows as f64);
    for (i, row) in m.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let fill = if !v.is_finite() {
                "#000000".to_string()
            } else if hi > lo {
                color((v - lo) / (hi - lo))
            } else {
                color(0.5)
            };
            // row 0 at the bottom, matching the vertex plots
            let x = MARGIN + j as f64 * w;
            let y = SIZE - MARGIN - (i + 1) as f64 * h;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.9}" y="{y:.9}" width="{w:.9}" height="{h:.9}" fill="{fill}"/>"#
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
