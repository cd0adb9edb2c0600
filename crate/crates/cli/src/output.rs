//! Result files: tables with a provenance header, JSON summaries, SVG charts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Format;
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// What produced a file: tool version, subcommand, master seed and the full
/// resolved configuration.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config: Value,
}

impl Provenance {
    pub fn new<C: Serialize, M: Serialize>(command: &'static str, common: &C, cfg: &M) -> Self {
        let mut config = serde_json::to_value(common).expect("config serializes");
        if let (Value::Object(a), Value::Object(b)) = (&mut config, serde_json::to_value(cfg).expect("config serializes")) {
            a.extend(b);
        }
        let seed = config.get("seed").and_then(Value::as_u64).unwrap_or(0);
        Provenance {
            tool: "ststore",
            version: VERSION,
            command,
            seed,
            config,
        }
    }

    pub fn header_lines(&self) -> String {
        format!(
            "# {} {}\n# command: {}\n# seed: {}\n# config: {}\n",
            self.tool, self.version, self.command, self.seed, self.config
        )
    }
}

/// A table with a fixed column list; cells are preformatted strings.
pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &'static [&'static str]) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, prov: &Provenance) -> String {
        let mut out = prov.header_lines();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, prov: &Provenance) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj = self
                    .columns
                    .iter()
                    .zip(r)
                    .map(|(c, v)| {
                        let val = v.parse::<f64>().ok().and_then(|x| serde_json::Number::from_f64(x).map(Value::Number));
                        (c.to_string(), val.unwrap_or_else(|| Value::String(v.clone())))
                    })
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let doc = json!({ "provenance": prov, "columns": self.columns, "rows": rows });
        serde_json::to_string_pretty(&doc).expect("json") + "\n"
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Writes `<stem>.csv` or `<stem>.json` into `dir` and returns the path.
pub fn write_table(dir: &Path, stem: &str, format: Format, table: &Table, prov: &Provenance) -> Result<PathBuf, CliError> {
    let (path, text) = match format {
        Format::Csv => (dir.join(format!("{stem}.csv")), table.to_csv(prov)),
        Format::Json => (dir.join(format!("{stem}.json")), table.to_json(prov)),
    };
    write_file(&path, &text)?;
    Ok(path)
}

pub fn write_summary(dir: &Path, stem: &str, prov: &Provenance, body: Value) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{stem}_summary.json"));
    let doc = json!({ "provenance": prov, "summary": body });
    write_file(&path, &(serde_json::to_string_pretty(&doc).expect("json") + "\n"))?;
    Ok(path)
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Line chart with linear axes starting at the origin.
pub fn svg_line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (64.0, 24.0, 40.0, 56.0);
    let x_max = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).fold(0.0, f64::max).max(1e-12);
    let y_max = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).fold(0.0, f64::max).max(1e-12);
    let px = |x: f64| left + x / x_max * (w - left - right);
    let py = |y: f64| h - bottom - y / y_max * (h - top - bottom);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{title}</text>"#, w / 2.0);
    let (x0, y0) = (px(0.0), py(0.0));
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{:.2}" y2="{y0}" stroke="black"/>"#, px(x_max));
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{:.2}" stroke="black"/>"#, py(y_max));
    for i in 0..=5 {
        let (xv, yv) = (x_max * i as f64 / 5.0, y_max * i as f64 / 5.0);
        let _ = writeln!(s, r#"<line x1="{0:.2}" y1="{y0}" x2="{0:.2}" y2="{1:.2}" stroke="black"/>"#, px(xv), y0 + 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{:.3}</text>"#, px(xv), y0 + 20.0, xv);
        let _ = writeln!(s, r#"<line x1="{x0}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="black"/>"#, py(yv), x0 - 5.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.2}</text>"#, x0 - 8.0, py(yv) + 4.0, yv);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#, (left + w - right) / 2.0, h - 14.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0:.2}" text-anchor="middle" transform="rotate(-90 16 {0:.2})">{y_label}</text>"#,
        (top + h - bottom) / 2.0
    );
    for (i, ser) in series.iter().enumerate() {
        let pts: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let dash = if i == 1 { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{}" stroke-width="2"{dash} points="{}"/>"#, ser.color, pts.join(" "));
        let ly = top + 12.0 + 18.0 * i as f64;
        let lx = w - right - 170.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"{dash}/>"#, lx + 24.0, ser.color);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 30.0, ly + 4.0, ser.label);
    }
    s.push_str("</svg>\n");
    s
}
