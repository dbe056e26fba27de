//! Static SVG line plots of the report tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::report::{ENTROPY_HEADER, TABLE_HEADER};

type Series = Vec<(String, Vec<(f64, f64)>)>;

const W: f64 = 720.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn parse(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn table_series(body: &str) -> Series {
    let mut map: BTreeMap<String, (Vec<(f64, f64)>, Vec<(f64, f64)>)> = BTreeMap::new();
    for line in body.lines() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 7 {
            continue;
        }
        let Some(t) = parse(f[0]) else { continue };
        let e = map.entry(f[2].to_string()).or_default();
        if let Some(y) = parse(f[3]) {
            e.0.push((t, y));
        }
        if let Some(b) = parse(f[5]) {
            e.1.push((t, b));
        }
    }
    let mut out = Vec::new();
    for (q, (vals, bounds)) in map {
        if !bounds.is_empty() {
            out.push((format!("{q} bound"), bounds));
        }
        out.push((q, vals));
    }
    out
}

fn entropy_series(body: &str) -> Series {
    let names = ["W", "dW/dt", "production"];
    let cols = [2usize, 3, 4];
    let mut out: Series = names.iter().map(|n| (n.to_string(), Vec::new())).collect();
    for line in body.lines() {
        let f: Vec<&str> = line.split(',').collect();
        let Some(t) = f.first().and_then(|s| parse(s)) else { continue };
        for (j, &c) in cols.iter().enumerate() {
            if let Some(y) = f.get(c).and_then(|s| parse(s)) {
                out[j].1.push((t, y));
            }
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn svg(title: &str, series: &Series) -> String {
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for (v, x, y, anchor) in [
        (x0, PAD, H - PAD + 16.0, "start"),
        (x1, W - PAD, H - PAD + 16.0, "end"),
        (y0, PAD - 4.0, H - PAD, "end"),
        (y1, PAD - 4.0, PAD + 10.0, "end"),
    ] {
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{v:.4e}</text>"#);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">t</text>"#, W / 2.0, H - PAD + 30.0);
    for (j, (name, p)) in series.iter().enumerate() {
        let color = COLORS[j % COLORS.len()];
        let dash = if name.ends_with(" bound") { r#" stroke-dasharray="6 4""# } else { "" };
        let path: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            path.join(" ")
        );
        let ly = PAD + 14.0 + 16.0 * j as f64;
        let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}"{dash}/>"#, W - PAD - 150.0, W - PAD - 130.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, W - PAD - 125.0, ly + 4.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

/// Write one SVG next to every table in `dir`; returns the files written.
pub fn plot_dir(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    let mut written = Vec::new();
    for path in files {
        let text = std::fs::read_to_string(&path)?;
        let Some((header, body)) = text.split_once('\n') else { continue };
        let series = match header {
            TABLE_HEADER => table_series(body),
            ENTROPY_HEADER => entropy_series(body),
            _ => continue,
        };
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table").to_string();
        let out = path.with_extension("svg");
        std::fs::write(&out, svg(&stem, &series))?;
        written.push(out);
    }
    Ok(written)
}
