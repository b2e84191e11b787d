//! Result tables, their CSV form and a minimal SVG line plot.

use std::fmt::Write as _;
use std::io::{self, Write};

/// One CSV field. Text is always quoted on output, so a parsed table has the
/// same cell kinds as the one written.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(u64),
    Real(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(v) => Some(*v as f64),
            Cell::Real(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => format!("{v:.16e}"),
            Cell::Text(s) => format!("\"{}\"", s.replace('"', "\"\"")),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// One output row, in the column order of its table.
pub type ResultRow = Vec<Cell>;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<ResultRow>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn values(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column(name)?;
        self.rows.iter().map(|r| r.get(k).and_then(Cell::as_f64)).collect()
    }
}

fn header_field(name: &str) -> String {
    if name.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", name.replace('"', "\"\""))
    } else {
        name.to_string()
    }
}

pub fn header_line(columns: &[String]) -> String {
    columns.iter().map(|c| header_field(c)).collect::<Vec<_>>().join(",")
}

pub fn row_line(row: &[Cell]) -> String {
    row.iter().map(Cell::render).collect::<Vec<_>>().join(",")
}

/// Writes `#` comment lines, the header and every row, CRLF-terminated.
pub fn write_csv<W: Write>(out: &mut W, comments: &[String], table: &Table) -> io::Result<()> {
    for c in comments {
        write!(out, "# {c}\r\n")?;
    }
    write!(out, "{}\r\n", header_line(&table.columns))?;
    for r in &table.rows {
        write!(out, "{}\r\n", row_line(r))?;
    }
    Ok(())
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CsvError {
    #[error("line {0}: unterminated quoted field")]
    Unterminated(usize),
    #[error("line {0}: unexpected character after closing quote")]
    AfterQuote(usize),
    #[error("line {line}: expected {expected} fields, found {found}")]
    Width { line: usize, expected: usize, found: usize },
    #[error("missing header row")]
    NoHeader,
}

/// Splits CSV text into records, keeping whether each field was quoted.
fn records(text: &str) -> Result<Vec<(usize, Vec<(String, bool)>)>, CsvError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1;
    while chars.peek().is_some() {
        let start = line;
        if chars.peek() == Some(&'#') {
            for c in chars.by_ref() {
                if c == '\n' {
                    break;
                }
            }
            line += 1;
            continue;
        }
        let mut fields = Vec::new();
        let mut field = String::new();
        let mut quoted = false;
        loop {
            match chars.next() {
                None => {
                    fields.push((std::mem::take(&mut field), quoted));
                    break;
                }
                Some('"') if field.is_empty() && !quoted => {
                    quoted = true;
                    loop {
                        match chars.next() {
                            None => return Err(CsvError::Unterminated(start)),
                            Some('"') if chars.peek() == Some(&'"') => {
                                chars.next();
                                field.push('"');
                            }
                            Some('"') => break,
                            Some(c) => {
                                if c == '\n' {
                                    line += 1;
                                }
                                field.push(c);
                            }
                        }
                    }
                    match chars.peek() {
                        None | Some(',') | Some('\r') | Some('\n') => {}
                        Some(_) => return Err(CsvError::AfterQuote(line)),
                    }
                }
                Some(',') => {
                    fields.push((std::mem::take(&mut field), quoted));
                    quoted = false;
                }
                Some('\r') if chars.peek() == Some(&'\n') => {}
                Some('\n') => {
                    fields.push((std::mem::take(&mut field), quoted));
                    line += 1;
                    break;
                }
                Some(c) => field.push(c),
            }
        }
        if !(fields.len() == 1 && fields[0].0.is_empty() && !fields[0].1) {
            out.push((start, fields));
        }
    }
    Ok(out)
}

fn parse_cell(field: String, quoted: bool) -> Cell {
    if quoted {
        return Cell::Text(field);
    }
    if let Ok(v) = field.parse::<u64>() {
        return Cell::Int(v);
    }
    match field.parse::<f64>() {
        Ok(v) => Cell::Real(v),
        Err(_) => Cell::Text(field),
    }
}

/// Parses text written by [`write_csv`], skipping comment lines.
pub fn parse_csv(text: &str) -> Result<Table, CsvError> {
    let mut recs = records(text)?.into_iter();
    let (_, header) = recs.next().ok_or(CsvError::NoHeader)?;
    let columns: Vec<String> = header.into_iter().map(|(f, _)| f).collect();
    let mut rows = Vec::new();
    for (line, fields) in recs {
        if fields.len() != columns.len() {
            return Err(CsvError::Width { line, expected: columns.len(), found: fields.len() });
        }
        rows.push(fields.into_iter().map(|(f, q)| parse_cell(f, q)).collect());
    }
    Ok(Table { columns, rows })
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * (1.0 + lo.abs()) {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Line plot of the `series` columns against column `x`. The root element
/// and the `<text>` labels carry content; every other element is self-closed.
pub fn render_svg(table: &Table, x: &str, series: &[&str], title: &str) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (70.0, 150.0, 40.0, 50.0);
    let xs = table.values(x).unwrap_or_default();
    let ys: Vec<(&str, Vec<f64>)> = series.iter().filter_map(|s| table.values(s).map(|v| (*s, v))).collect();
    let finite = |v: &&f64| v.is_finite();
    let (x0, x1) = nice_range(
        xs.iter().filter(finite).copied().fold(f64::INFINITY, f64::min),
        xs.iter().filter(finite).copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let all_y = ys.iter().flat_map(|(_, v)| v.iter().filter(finite).copied());
    let (y0, y1) = nice_range(all_y.clone().fold(f64::INFINITY, f64::min), all_y.fold(f64::NEG_INFINITY, f64::max));
    let (pw, ph) = (w - left - right, h - top - bottom);
    let px = |v: f64| left + (v - x0) / (x1 - x0) * pw;
    let py = |v: f64| top + (y1 - v) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let (gx, gy) = (px(fx), py(fy));
        let _ = writeln!(s, r#"<line x1="{gx:.2}" y1="{:.2}" x2="{gx:.2}" y2="{:.2}" stroke="black"/>"#, top + ph, top + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{gx:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#, top + ph + 18.0, tick(fx));
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{gy:.2}" x2="{left}" y2="{gy:.2}" stroke="black"/>"#, left - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#, left - 8.0, gy + 4.0, tick(fy));
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#, left + pw / 2.0, h - 12.0, escape_xml(x));
    let ylabel = if series.iter().all(|c| c.starts_with("eta")) { "eta" } else { "gamma / eta" };
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {:.2})">{ylabel}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    let _ = writeln!(s, r#"<text x="{:.2}" y="24" font-size="14" text-anchor="middle">{}</text>"#, left + pw / 2.0, escape_xml(title));
    for (k, (name, v)) in ys.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = xs
            .iter()
            .zip(v)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(&a, &b)| format!("{:.2},{:.2}", px(a), py(b)))
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
        let ly = top + 14.0 + 18.0 * k as f64;
        let lx = left + pw + 10.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{:.2}" y2="{ly}" stroke="{color}" stroke-width="1.5"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#, lx + 25.0, ly + 4.0, escape_xml(name));
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    let t = format!("{v:.3}");
    let t = t.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" { "0".into() } else { t.to_string() }
}
