//! File formats: a JSON document with a typed header and a CSV payload string.
//!
//! ```text
//! {"format": "pwm.sampled_function", "version": 1, "header": {...}, "payload": "j0,re,im\n0,0,0\n..."}
//! ```
//!
//! Floats are written in shortest round-trip form, so write → read is lossless.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use pwm_core::group::RepresentationPoint;
use pwm_core::ThetaEnvelope;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{PwmError, Result};
use crate::grid::{Grid, SampledFunction, Sinogram, Spectrum, CONVENTION};
use crate::motion::{GroupFourierMatrix, MotionGroupFunction};

pub const VERSION: u32 = 1;

pub const SAMPLED_FUNCTION: &str = "pwm.sampled_function";
pub const SPECTRUM: &str = "pwm.spectrum";
pub const SINOGRAM: &str = "pwm.sinogram";
pub const MOTION_FUNCTION: &str = "pwm.motion_group_function";
pub const GROUP_MATRIX: &str = "pwm.group_fourier_matrix";

#[derive(Debug, Serialize, Deserialize)]
struct Document<H> {
    format: String,
    version: u32,
    header: H,
    payload: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridHeader {
    pub dim: usize,
    pub half_width: f64,
    /// Nodes per axis; grids are cubic so all entries agree.
    pub n: Vec<usize>,
    pub support_radius: f64,
    pub convention: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

impl GridHeader {
    fn new(grid: &Grid, support_radius: f64, t: Option<f64>) -> Self {
        GridHeader {
            dim: grid.dim,
            half_width: grid.half_width,
            n: vec![grid.n; grid.dim],
            support_radius,
            convention: CONVENTION.to_string(),
            t,
        }
    }

    fn grid(&self) -> Result<Grid> {
        if self.n.len() != self.dim || self.n.iter().any(|&k| k != self.n[0]) {
            return Err(PwmError::Config { field: "header.n".into(), reason: "one equal node count per axis expected".into() });
        }
        if self.convention != CONVENTION {
            return Err(PwmError::Config { field: "header.convention".into(), reason: format!("unsupported {:?}", self.convention) });
        }
        Grid::new(self.dim, self.n[0], self.half_width)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SinogramHeader {
    pub directions: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MotionHeader {
    #[serde(flatten)]
    pub grid: GridHeader,
    pub angles: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub r: f64,
    #[serde(rename = "B")]
    pub band: i64,
    pub hs_norm: f64,
    pub convention: String,
}

fn csv_text(columns: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(columns)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| PwmError::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| PwmError::Invalid(e.to_string()))
}

fn csv_rows(payload: &str, columns: usize) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(payload.as_bytes());
    let width = r.headers()?.len();
    if width != columns {
        return Err(PwmError::Config { field: "payload".into(), reason: format!("expected {columns} columns, found {width}") });
    }
    r.records().map(|x| x.map_err(PwmError::from)).collect()
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    rec.get(i).and_then(|s| s.trim().parse().ok()).ok_or_else(|| PwmError::Config {
        field: format!("payload line {line}, column {}", i + 1),
        reason: format!("cannot parse {:?}", rec.get(i).unwrap_or("")),
    })
}

fn complex_columns(rows: &[csv::StringRecord], index_cols: usize, expect: &[Vec<i64>]) -> Result<Vec<Complex64>> {
    if rows.len() != expect.len() {
        return Err(PwmError::Config { field: "payload".into(), reason: format!("expected {} rows, found {}", expect.len(), rows.len()) });
    }
    rows.iter()
        .zip(expect)
        .enumerate()
        .map(|(i, (rec, idx))| {
            let line = i + 2;
            for (c, want) in idx.iter().enumerate() {
                if field::<i64>(rec, c, line)? != *want {
                    return Err(PwmError::Config { field: format!("payload line {line}"), reason: format!("index {idx:?} expected") });
                }
            }
            Ok(Complex64::new(field(rec, index_cols, line)?, field(rec, index_cols + 1, line)?))
        })
        .collect()
}

fn complex_row(idx: &[i64], v: Complex64) -> Vec<String> {
    let mut r: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
    r.push(v.re.to_string());
    r.push(v.im.to_string());
    r
}

fn columns(prefix: &[&str], dim_prefix: &str, dim: usize) -> Vec<String> {
    let mut c: Vec<String> = prefix.iter().map(|s| s.to_string()).collect();
    c.extend((0..dim).map(|a| format!("{dim_prefix}{a}")));
    c.push("re".into());
    c.push("im".into());
    c
}

fn grid_indices(g: &Grid) -> Vec<Vec<i64>> {
    (0..g.len()).map(|i| g.unflatten(i)[..g.dim].iter().map(|&k| k as i64).collect()).collect()
}

fn document<H: Serialize>(format: &str, header: H, payload: String) -> Result<String> {
    let doc = Document { format: format.to_string(), version: VERSION, header, payload };
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

fn open<H: DeserializeOwned>(text: &str, format: &str) -> Result<Document<H>> {
    let doc: Document<H> = serde_json::from_str(text)?;
    if doc.format != format {
        return Err(PwmError::Config { field: "format".into(), reason: format!("expected {format}, found {}", doc.format) });
    }
    if doc.version != VERSION {
        return Err(PwmError::Config { field: "version".into(), reason: format!("unsupported version {}", doc.version) });
    }
    Ok(doc)
}

fn grid_payload(g: &Grid, prefix: &str, values: &[Complex64]) -> Result<String> {
    let idx = grid_indices(g);
    csv_text(&columns(&[], prefix, g.dim), idx.iter().zip(values).map(|(i, v)| complex_row(i, *v)))
}

/// Serializes f, optionally tagged with an evolution time.
pub fn write_sampled(f: &SampledFunction, t: Option<f64>) -> Result<String> {
    let payload = grid_payload(&f.grid, "j", &f.values)?;
    document(SAMPLED_FUNCTION, GridHeader::new(&f.grid, f.support_radius, t), payload)
}

pub fn read_sampled(text: &str) -> Result<(SampledFunction, Option<f64>)> {
    let doc: Document<GridHeader> = open(text, SAMPLED_FUNCTION)?;
    let g = doc.header.grid()?;
    let rows = csv_rows(&doc.payload, g.dim + 2)?;
    let values = complex_columns(&rows, g.dim, &grid_indices(&g))?;
    Ok((SampledFunction::new(g, values, doc.header.support_radius)?, doc.header.t))
}

/// Spectra share the grid header; the index columns are frequency nodes k with ξ_k = (k − N/2)π/L.
pub fn write_spectrum(s: &Spectrum) -> Result<String> {
    let payload = grid_payload(&s.grid, "k", &s.values)?;
    document(SPECTRUM, GridHeader::new(&s.grid, s.support_radius, None), payload)
}

pub fn read_spectrum(text: &str) -> Result<Spectrum> {
    let doc: Document<GridHeader> = open(text, SPECTRUM)?;
    let g = doc.header.grid()?;
    let rows = csv_rows(&doc.payload, g.dim + 2)?;
    let values = complex_columns(&rows, g.dim, &grid_indices(&g))?;
    Ok(Spectrum { grid: g, values, support_radius: doc.header.support_radius })
}

pub fn write_sinogram(s: &Sinogram) -> Result<String> {
    let t = s.offsets.len();
    let rows = s.values.iter().enumerate().map(|(i, v)| complex_row(&[(i / t) as i64, (i % t) as i64], *v));
    let payload = csv_text(&columns(&["direction", "offset"], "", 0), rows)?;
    document(SINOGRAM, SinogramHeader { directions: s.directions.clone(), offsets: s.offsets.clone() }, payload)
}

pub fn read_sinogram(text: &str) -> Result<Sinogram> {
    let doc: Document<SinogramHeader> = open(text, SINOGRAM)?;
    let (d, t) = (doc.header.directions.len(), doc.header.offsets.len());
    let expect: Vec<Vec<i64>> = (0..d * t).map(|i| vec![(i / t) as i64, (i % t) as i64]).collect();
    let values = complex_columns(&csv_rows(&doc.payload, 4)?, 2, &expect)?;
    Ok(Sinogram { directions: doc.header.directions, offsets: doc.header.offsets, values })
}

pub fn write_motion(f: &MotionGroupFunction, t: Option<f64>) -> Result<String> {
    let idx = grid_indices(&f.grid);
    let npts = f.grid.len();
    let rows = f.values.iter().enumerate().map(|(i, v)| {
        let mut k = vec![(i / npts) as i64];
        k.extend_from_slice(&idx[i % npts]);
        complex_row(&k, *v)
    });
    let payload = csv_text(&columns(&["q"], "j", 2), rows)?;
    document(MOTION_FUNCTION, MotionHeader { grid: GridHeader::new(&f.grid, f.support_radius, t), angles: f.angles }, payload)
}

pub fn read_motion(text: &str) -> Result<(MotionGroupFunction, Option<f64>)> {
    let doc: Document<MotionHeader> = open(text, MOTION_FUNCTION)?;
    let g = doc.header.grid.grid()?;
    let idx = grid_indices(&g);
    let expect: Vec<Vec<i64>> = (0..doc.header.angles * g.len())
        .map(|i| {
            let mut k = vec![(i / g.len()) as i64];
            k.extend_from_slice(&idx[i % g.len()]);
            k
        })
        .collect();
    let values = complex_columns(&csv_rows(&doc.payload, 5)?, 3, &expect)?;
    let f = MotionGroupFunction::new(g, doc.header.angles, values, doc.header.grid.support_radius)?;
    Ok((f, doc.header.grid.t))
}

pub fn write_matrix(a: &GroupFourierMatrix) -> Result<String> {
    let b = a.band;
    let rows = (-b..=b).flat_map(|mp| (-b..=b).map(move |m| (m, mp))).map(|(m, mp)| complex_row(&[m, mp], a.entry(mp, m)));
    let payload = csv_text(&columns(&["m", "m_prime"], "", 0), rows)?;
    let header = MatrixHeader { r: a.rep.r, band: b, hs_norm: a.hs_norm, convention: CONVENTION.to_string() };
    document(GROUP_MATRIX, header, payload)
}

pub fn read_matrix(text: &str) -> Result<GroupFourierMatrix> {
    let doc: Document<MatrixHeader> = open(text, GROUP_MATRIX)?;
    let b = doc.header.band;
    if b < 0 {
        return Err(PwmError::Config { field: "header.B".into(), reason: "band must be non-negative".into() });
    }
    let expect: Vec<Vec<i64>> = (-b..=b).flat_map(|mp| (-b..=b).map(move |m| vec![m, mp])).collect();
    let entries = complex_columns(&csv_rows(&doc.payload, 4)?, 2, &expect)?;
    Ok(GroupFourierMatrix { rep: RepresentationPoint::new(doc.header.r)?, band: b, entries, hs_norm: doc.header.hs_norm })
}

/// Two-column CSV curve with a header row.
pub fn curve_csv(names: [&str; 2], points: &[(f64, f64)]) -> Result<String> {
    let cols = [names[0].to_string(), names[1].to_string()];
    csv_text(&cols, points.iter().map(|(a, b)| vec![a.to_string(), b.to_string()]))
}

/// Reads a t,θ table; a non-numeric first row is taken as a header.
pub fn read_envelope_table(text: &str) -> Result<ThetaEnvelope> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes());
    let (mut t, mut theta) = (Vec::new(), Vec::new());
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            return Err(PwmError::Config { field: format!("table line {}", i + 1), reason: "two columns t,theta expected".into() });
        }
        match (rec[0].trim().parse::<f64>(), rec[1].trim().parse::<f64>()) {
            (Ok(a), Ok(b)) => {
                t.push(a);
                theta.push(b);
            }
            _ if i == 0 => continue,
            _ => return Err(PwmError::Config { field: format!("table line {}", i + 1), reason: "non-numeric entry".into() }),
        }
    }
    Ok(ThetaEnvelope::table(t, theta)?)
}

/// Resolves the envelope mini-language: built-in names, `pow:a`, or `table:<path>`.
pub fn parse_envelope(key: &str) -> Result<ThetaEnvelope> {
    if let Some(path) = key.strip_prefix("table:") {
        let text = fs::read_to_string(path)?;
        let mut env = read_envelope_table(&text)?;
        env.name = key.to_string();
        return Ok(env);
    }
    ThetaEnvelope::builtin(key).ok_or_else(|| PwmError::Config { field: "theta".into(), reason: format!("unknown envelope {key:?}") })
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(dim: usize) -> SampledFunction {
        let g = Grid::new(dim, 8, 2.0).unwrap();
        SampledFunction::from_fn(g, 1.5, |x| Complex64::new(x[0] / 3.0, -(x[..dim].iter().sum::<f64>()).cos() * 0.1)).unwrap()
    }

    #[test]
    fn sampled_round_trip_is_lossless() {
        for dim in 1..=3 {
            let f = sample(dim);
            let text = write_sampled(&f, Some(0.25)).unwrap();
            let (back, t) = read_sampled(&text).unwrap();
            assert_eq!(back, f);
            assert_eq!(t, Some(0.25));
        }
    }

    #[test]
    fn spectrum_and_sinogram_round_trip() {
        let f = sample(2);
        let s = crate::euclid::fourier(&f).unwrap();
        assert_eq!(read_spectrum(&write_spectrum(&s).unwrap()).unwrap(), s);
        let sino = Sinogram {
            directions: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            offsets: vec![-0.5, 0.0, 0.5],
            values: (0..6).map(|i| Complex64::new(i as f64 * 0.1, 1.0 / (i + 1) as f64)).collect(),
        };
        let back = read_sinogram(&write_sinogram(&sino).unwrap()).unwrap();
        assert_eq!(back.values, sino.values);
        assert_eq!(back.offsets, sino.offsets);
    }

    #[test]
    fn rejects_wrong_format_and_bad_rows() {
        let text = write_sampled(&sample(1), None).unwrap();
        assert!(matches!(read_spectrum(&text), Err(PwmError::Config { .. })));
        let broken = text.replacen("\\n3,", "\\n9,", 1);
        assert!(matches!(read_sampled(&broken), Err(PwmError::Config { .. })));
    }

    #[test]
    fn envelope_table_with_header() {
        let env = read_envelope_table("t,theta\n0,0\n1,1\n2,4\n").unwrap();
        assert!((env.evaluate(1.5) - 2.5).abs() < 1e-12);
        assert!(parse_envelope("pow:0.5").is_ok());
        assert!(matches!(parse_envelope("nonsense"), Err(PwmError::Config { .. })));
    }
}
