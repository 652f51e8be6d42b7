//! Iteration log lines and density-field export: binary PGM and CSV for 2D
//! fields, legacy ASCII VTK for 3D fields.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{IgaError, Result};
use crate::optimize::{DensityField, IterationRecord};

/// `(iteration, compliance, mean density, change)` as printed in the log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub iteration: usize,
    pub compliance: f64,
    pub volume: f64,
    pub change: f64,
}

impl From<&IterationRecord> for LogEntry {
    fn from(r: &IterationRecord) -> Self {
        LogEntry {
            iteration: r.iteration,
            compliance: r.compliance,
            volume: r.volume,
            change: r.change,
        }
    }
}

/// ` It.:<i> Obj.:<%11.4f> Vol.:<%7.3f> ch.:<%7.3f>`
pub fn format_log_line(entry: &LogEntry) -> String {
    format!(
        " It.:{} Obj.:{:11.4} Vol.:{:7.3} ch.:{:7.3}",
        entry.iteration, entry.compliance, entry.volume, entry.change
    )
}

pub fn parse_log_line(line: &str) -> Result<LogEntry> {
    let bad = || IgaError::Parse(format!("not an iteration log line: {line:?}"));
    let rest = line.trim_end().strip_prefix(" It.:").ok_or_else(bad)?;
    let (it, rest) = rest.split_once(" Obj.:").ok_or_else(bad)?;
    let (obj, rest) = rest.split_once(" Vol.:").ok_or_else(bad)?;
    let (vol, ch) = rest.split_once(" ch.:").ok_or_else(bad)?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    Ok(LogEntry {
        iteration: it.parse().map_err(|_| bad())?,
        compliance: num(obj)?,
        volume: num(vol)?,
        change: num(ch)?,
    })
}

fn require_2d(field: &DensityField) -> Result<(usize, usize)> {
    match field.dims() {
        &[nx, ny] => Ok((nx, ny)),
        d => Err(IgaError::invalid(format!(
            "expected a 2D density field, got dimensions {d:?}"
        ))),
    }
}

fn require_3d(field: &DensityField) -> Result<(usize, usize, usize)> {
    match field.dims() {
        &[nx, ny, nz] => Ok((nx, ny, nz)),
        d => Err(IgaError::invalid(format!(
            "expected a 3D density field, got dimensions {d:?}"
        ))),
    }
}

/// Binary greyscale image, `nelx` wide and `nely` high, void white and
/// solid black. The first image row is the top of the domain (`j = nely`).
pub fn pgm_bytes(field: &DensityField) -> Result<Vec<u8>> {
    let (nx, ny) = require_2d(field)?;
    let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    for j in (0..ny).rev() {
        for i in 0..nx {
            out.push((255.0 * (1.0 - field.get(i, j, 0))).round() as u8);
        }
    }
    Ok(out)
}

/// Greyscale image read back from binary PGM bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub max_value: u16,
    /// Row-major, top row first.
    pub pixels: Vec<u8>,
}

pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let bad = |msg: &str| IgaError::Parse(format!("PGM: {msg}"));
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields
            .push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not text"))?);
    }
    if fields[0] != "P5" {
        return Err(bad("only binary greyscale (P5) is supported"));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad("invalid header number"));
    let (width, height, max_value) = (parse(fields[1])?, parse(fields[2])?, parse(fields[3])?);
    if max_value == 0 || max_value > 255 {
        return Err(bad("only 8-bit images are supported"));
    }
    let data = bytes
        .get(pos + 1..)
        .ok_or_else(|| bad("missing pixel data"))?;
    if data.len() != width * height {
        return Err(bad(&format!(
            "expected {} pixels, found {}",
            width * height,
            data.len()
        )));
    }
    Ok(GrayImage {
        width,
        height,
        max_value: max_value as u16,
        pixels: data.to_vec(),
    })
}

/// `nely` lines of `nelx` comma-separated densities, top row first, each
/// value printed in its shortest round-trip form.
pub fn csv_string(field: &DensityField) -> Result<String> {
    let (nx, ny) = require_2d(field)?;
    let mut out = String::new();
    for j in (0..ny).rev() {
        for i in 0..nx {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{}", field.get(i, j, 0)).expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_csv(text: &str) -> Result<DensityField> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(r, line)| {
            line.split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| {
                        IgaError::Parse(format!("CSV row {}: invalid number {s:?}", r + 1))
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let ny = rows.len();
    let nx = rows.first().map_or(0, Vec::len);
    if ny == 0 || nx == 0 || rows.iter().any(|r| r.len() != nx) {
        return Err(IgaError::Parse("CSV rows are empty or ragged".into()));
    }
    let mut values = vec![0.0; nx * ny];
    for (r, row) in rows.iter().enumerate() {
        let j = ny - 1 - r;
        values[j * nx..(j + 1) * nx].copy_from_slice(row);
    }
    DensityField::new(&[nx, ny], values)
}

/// Legacy ASCII VTK structured points, one point per element, carrying the
/// raw densities as `density`. The display threshold is recorded in the
/// header; with `binarized` an extra `solid` field holds `x > threshold`.
pub fn vtk_string(field: &DensityField, threshold: f64, binarized: bool) -> Result<String> {
    let (nx, ny, nz) = require_3d(field)?;
    if !(0.0..=1.0).contains(&threshold) {
        return Err(IgaError::Domain {
            name: "threshold",
            value: threshold,
            range: "[0, 1]",
        });
    }
    let n = nx * ny * nz;
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    writeln!(
        out,
        "igatopt element densities, display threshold {threshold}"
    )
    .unwrap();
    out.push_str("ASCII\nDATASET STRUCTURED_POINTS\n");
    writeln!(out, "DIMENSIONS {nx} {ny} {nz}").unwrap();
    out.push_str("ORIGIN 0.5 0.5 0.5\nSPACING 1 1 1\n");
    writeln!(out, "POINT_DATA {n}").unwrap();
    out.push_str("SCALARS density double 1\nLOOKUP_TABLE default\n");
    for v in field.values() {
        writeln!(out, "{v}").unwrap();
    }
    if binarized {
        out.push_str("SCALARS solid int 1\nLOOKUP_TABLE default\n");
        for &v in field.values() {
            out.push_str(if v > threshold { "1\n" } else { "0\n" });
        }
    }
    Ok(out)
}

pub fn write_pgm(field: &DensityField, path: &Path) -> Result<()> {
    Ok(std::fs::write(path, pgm_bytes(field)?)?)
}

pub fn write_csv(field: &DensityField, path: &Path) -> Result<()> {
    Ok(std::fs::write(path, csv_string(field)?)?)
}

pub fn read_csv(path: &Path) -> Result<DensityField> {
    parse_csv(&std::fs::read_to_string(path)?)
}

pub fn write_vtk(field: &DensityField, path: &Path, threshold: f64, binarized: bool) -> Result<()> {
    Ok(std::fs::write(
        path,
        vtk_string(field, threshold, binarized)?,
    )?)
}
