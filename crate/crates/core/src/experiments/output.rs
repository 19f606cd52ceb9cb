use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::run::{ResultRow, PRETRAINED_LABEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Svg,
}

impl OutputFormat {
    /// `.svg` paths plot; anything else is written as CSV.
    pub fn for_path(path: &Path) -> Self {
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("svg")) {
            OutputFormat::Svg
        } else {
            OutputFormat::Csv
        }
    }
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn to_csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    csv::Reader::from_reader(input).deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(f)
}

/// Writes `rows` to `path` as CSV or as an SVG plot.
pub fn emit_results(rows: &[ResultRow], path: &Path, format: OutputFormat) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyResults);
    }
    let text = match format {
        OutputFormat::Csv => to_csv_string(rows)?,
        OutputFormat::Svg => render_svg(rows)?,
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

struct Point {
    label: String,
    brackets: f64,
    accuracy: f64,
}

/// Mean bracket count and accuracy per supervision label, in first-seen order.
fn means(rows: &[&ResultRow]) -> Vec<Point> {
    let mut out: Vec<(String, f64, f64, usize)> = Vec::new();
    for r in rows {
        let Some(acc) = r.accuracy.filter(|_| r.is_ok()) else { continue };
        match out.iter_mut().find(|p| p.0 == r.supervision) {
            Some(p) => {
                p.1 += r.bracket_count as f64;
                p.2 += acc;
                p.3 += 1;
            }
            None => out.push((r.supervision.clone(), r.bracket_count as f64, acc, 1)),
        }
    }
    out.into_iter().map(|(label, b, a, n)| Point { label, brackets: b / n as f64, accuracy: a / n as f64 }).collect()
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Accuracy against supplied bracket count. Fraction conditions of each
/// strategy form a polyline; class conditions are labeled markers; the
/// pretrained-only score is a dashed horizontal line.
pub fn render_svg(rows: &[ResultRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyResults);
    }
    let (w, h, left, right, top, bottom) = (720.0, 480.0, 70.0, 160.0, 40.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);

    let mut strategies: Vec<&str> = Vec::new();
    for r in rows {
        if !strategies.contains(&r.strategy.as_str()) {
            strategies.push(&r.strategy);
        }
    }
    let groups: Vec<(&str, Vec<Point>)> =
        strategies.iter().map(|s| (*s, means(&rows.iter().filter(|r| r.strategy == *s).collect::<Vec<_>>()))).collect();
    let max_x = groups
        .iter()
        .flat_map(|(_, ps)| ps.iter().filter(|p| p.label != PRETRAINED_LABEL).map(|p| p.brackets))
        .fold(0.0f64, f64::max)
        .max(1.0);
    let sx = |x: f64| left + pw * x / max_x;
    let sy = |y: f64| top + ph * (1.0 - y);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">Non-crossing accuracy by supervision</text>"#,
        left + pw / 2.0
    );
    let _ = writeln!(s, r#"<path d="M{left} {top} V{} H{}" fill="none" stroke="black"/>"#, top + ph, left + pw);
    for i in 0..=5 {
        let y = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="11">{:.1}</text>"#,
            left - 6.0,
            sy(y) + 4.0,
            y
        );
        let x = max_x * i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{:.0}</text>"#,
            sx(x),
            top + ph + 16.0,
            x
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">bracket count</text>"#,
        left + pw / 2.0,
        h - 18.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 18 {})">accuracy</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );

    for (gi, (strategy, points)) in groups.iter().enumerate() {
        let color = COLORS[gi % COLORS.len()];
        let mut line: Vec<&Point> = points.iter().filter(|p| p.label.starts_with("fraction=")).collect();
        line.sort_by(|a, b| a.brackets.total_cmp(&b.brackets));
        if !line.is_empty() {
            let pts: Vec<String> =
                line.iter().map(|p| format!("{:.1},{:.1}", sx(p.brackets), sy(p.accuracy))).collect();
            let _ = writeln!(
                s,
                r#"<polyline class="baseline" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                pts.join(" ")
            );
        }
        for p in points.iter().filter(|p| !p.label.starts_with("fraction=") && p.label != PRETRAINED_LABEL) {
            let (x, y) = (sx(p.brackets), sy(p.accuracy));
            let _ = writeln!(s, r#"<circle class="category" cx="{x:.1}" cy="{y:.1}" r="4" fill="{color}"/>"#);
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
                x + 6.0,
                y - 6.0,
                p.label
            );
        }
        if let Some(p) = points.iter().find(|p| p.label == PRETRAINED_LABEL) {
            let y = sy(p.accuracy);
            let _ = writeln!(
                s,
                r#"<line class="pretrained" x1="{left}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="{color}" stroke-dasharray="5,4"/>"#,
                left + pw
            );
        }
        let ly = top + 18.0 * gi as f64 + 10.0;
        let lx = left + pw + 16.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{strategy}</text>"#,
            lx + 26.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
