//! File formats: JSON for maps and reports, CSV tables, SVG figures.
//!
//! Every writer goes through [`write_atomic`], so a crashed run never leaves a
//! half-written file behind.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::combinatorics::LorenzPermutation;
use crate::domains::{dt_boundary, Flower};
use crate::flow::FlowRecord;
use crate::machinery::LevelIntervals;
use crate::{Interval, LorenzMap, Result};

/// Writes `bytes` to a temporary file next to `path` and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

/// Reads JSON; parse and schema errors carry line and column.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_map(path: &Path) -> Result<LorenzMap> {
    read_json(path)
}

pub fn write_map(path: &Path, map: &LorenzMap) -> Result<()> {
    write_json(path, map)
}

/// A combinatorics filter file: a JSON list of permutations.
pub fn read_thetas(path: &Path) -> Result<Vec<LorenzPermutation>> {
    read_json(path)
}

/// `level,name,left,right,length` rows for each level.
pub fn interval_table_csv(levels: &[LevelIntervals]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["level", "name", "left", "right", "length"])?;
    for li in levels {
        for (name, iv) in li.as_named() {
            w.write_record([
                li.level.to_string(),
                name.to_string(),
                iv.lo.to_string(),
                iv.hi.to_string(),
                iv.len().to_string(),
            ])?;
        }
    }
    finish_csv(w)
}

fn theta_cell(p: &[usize]) -> String {
    p.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" ")
}

fn opt_cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// One row per level of a flow record.
pub fn flow_csv(record: &FlowRecord) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "level",
        "c",
        "u",
        "v",
        "theta_minus",
        "theta_plus",
        "c_length",
        "c0_distance",
        "delta",
        "big_delta",
        "delta_envelope",
        "big_delta_envelope",
    ])?;
    for l in &record.levels {
        let (tm, tp) = match &l.theta {
            Some(t) => (theta_cell(&t.theta_minus), theta_cell(&t.theta_plus)),
            None => (String::new(), String::new()),
        };
        w.write_record([
            l.level.to_string(),
            l.map.c().to_string(),
            l.map.u().to_string(),
            l.map.v().to_string(),
            tm,
            tp,
            opt_cell(l.c_length),
            opt_cell(l.c0_distance),
            l.bounds.delta.to_string(),
            l.bounds.big_delta.to_string(),
            l.delta_envelope.to_string(),
            l.big_delta_envelope.to_string(),
        ])?;
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Polylines in map coordinates, rendered as an SVG 1.1 document with the
/// imaginary axis pointing up.
#[derive(Clone, Debug, Default)]
pub struct SvgPlot {
    items: Vec<(Vec<Complex64>, bool, String)>,
    segments: Vec<(Interval, String)>,
}

impl SvgPlot {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn polyline(&mut self, pts: Vec<Complex64>, color: &str) -> &mut Self {
        self.items.push((pts, false, color.to_string()));
        self
    }

    pub fn polygon(&mut self, pts: Vec<Complex64>, color: &str) -> &mut Self {
        self.items.push((pts, true, color.to_string()));
        self
    }

    /// A real interval drawn on the axis.
    pub fn interval(&mut self, iv: Interval, color: &str) -> &mut Self {
        self.segments.push((iv, color.to_string()));
        self
    }

    pub fn hyperbolic_neighborhood(&mut self, j: &Interval, t: f64, color: &str) -> &mut Self {
        self.polygon(dt_boundary(j, t, 512), color)
    }

    pub fn flower(&mut self, f: &Flower, color: &str) -> &mut Self {
        for (j, t) in f.petals() {
            self.hyperbolic_neighborhood(&j, t, color);
        }
        self
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        let pts = self.items.iter().flat_map(|(p, _, _)| p.iter().copied()).chain(
            self.segments
                .iter()
                .flat_map(|(iv, _)| [Complex64::new(iv.lo, 0.0), Complex64::new(iv.hi, 0.0)]),
        );
        for z in pts.filter(|z| z.re.is_finite() && z.im.is_finite()) {
            b = (b.0.min(z.re), b.1.max(z.re), b.2.min(z.im), b.3.max(z.im));
        }
        if !b.0.is_finite() {
            return (-1.0, 1.0, -1.0, 1.0);
        }
        b
    }

    pub fn render(&self, width_px: f64) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let pad = 0.05 * (x1 - x0).max(y1 - y0).max(1e-12);
        let (x0, x1, y0, y1) = (x0 - pad, x1 + pad, y0 - pad, y1 + pad);
        let height_px = width_px * (y1 - y0) / (x1 - x0);
        let stroke = 1.5 * (x1 - x0) / width_px;
        let mut s = String::new();
        writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
        writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width_px:.0}" height="{height_px:.0}" viewBox="{x0} {} {} {}">"#,
            -y1,
            x1 - x0,
            y1 - y0
        )
        .unwrap();
        writeln!(
            s,
            r#"<line x1="{x0}" y1="0" x2="{x1}" y2="0" stroke="gray" stroke-width="{}"/>"#,
            0.5 * stroke
        )
        .unwrap();
        for (pts, closed, color) in &self.items {
            let coords: Vec<String> = pts.iter().map(|z| format!("{},{}", z.re, -z.im)).collect();
            let tag = if *closed { "polygon" } else { "polyline" };
            writeln!(
                s,
                r#"<{tag} points="{}" fill="none" stroke="{color}" stroke-width="{stroke}"/>"#,
                coords.join(" ")
            )
            .unwrap();
        }
        for (iv, color) in &self.segments {
            writeln!(
                s,
                r#"<line x1="{}" y1="0" x2="{}" y2="0" stroke="{color}" stroke-width="{}"/>"#,
                iv.lo,
                iv.hi,
                2.0 * stroke
            )
            .unwrap();
        }
        s.push_str("</svg>\n");
        s
    }

    pub fn write(&self, path: &Path, width_px: f64) -> Result<()> {
        write_atomic(path, self.render(width_px).as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::standard_family;

    #[test]
    fn map_json_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("map.json");
        let f = standard_family(0.8125, 0.1875, 0.5, 2.0).unwrap();
        write_map(&p, &f).unwrap();
        let g = read_map(&p).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn malformed_json_reports_position() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.json");
        std::fs::write(&p, "{\n  \"alpha\": 2.0,\n  \"c\": }").unwrap();
        let msg = read_map(&p).unwrap_err().to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn svg_of_unit_parameter_is_a_circle() {
        let mut plot = SvgPlot::new();
        plot.hyperbolic_neighborhood(&Interval::new(-1.0, 1.0), 1.0, "black");
        let s = plot.render(400.0);
        assert!(s.starts_with("<?xml") && s.contains("<polygon") && s.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn atomic_writes_replace_the_target() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.txt");
        write_atomic(&p, b"first").unwrap();
        write_atomic(&p, b"second").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
