//! Reading and writing 8-bit PGM images (ASCII `P2` and binary `P5`).
//!
//! Intensities map linearly to `[0, 1]` on read (dividing by the header's
//! maxval) and back on write (clamping first, then rounding). Only 8-bit
//! files are supported: a maxval above 255 is rejected.

use super::ImageGrid;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed pgm at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
}

fn parse_err(offset: usize, message: impl Into<String>) -> PgmError {
    PgmError::Parse {
        offset,
        message: message.into(),
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_separators(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn read_number(&mut self, what: &str) -> Result<u32, PgmError> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(parse_err(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("digits are utf8")
            .parse::<u32>()
            .map_err(|_| parse_err(start, format!("{what} out of range")))
    }
}

/// Reads a `P2` or `P5` grayscale image and rescales it to `[0, 1]`.
pub fn pgm_read(path: impl AsRef<Path>) -> Result<ImageGrid, PgmError> {
    let bytes = std::fs::read(path)?;
    let mut cur = Cursor {
        bytes: &bytes,
        pos: 0,
    };
    if bytes.len() < 2 {
        return Err(parse_err(0, "file too short for a pgm header"));
    }
    let binary = match &bytes[0..2] {
        b"P2" => false,
        b"P5" => true,
        _ => return Err(parse_err(0, "expected magic 'P2' or 'P5'")),
    };
    cur.pos = 2;
    let width = cur.read_number("width")? as usize;
    let height = cur.read_number("height")? as usize;
    let maxval_at = {
        cur.skip_separators();
        cur.pos
    };
    let maxval = cur.read_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(parse_err(2, "image dimensions must be positive"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(parse_err(
            maxval_at,
            format!("maxval {maxval} unsupported (8-bit only, 1..=255)"),
        ));
    }
    let scale = 1.0 / maxval as f64;
    let n = width * height;
    let mut data = Vec::with_capacity(n);
    if binary {
        // Exactly one whitespace byte separates the header from raster data.
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(parse_err(cur.pos, "expected whitespace before raster"));
        }
        cur.pos += 1;
        if bytes.len() - cur.pos < n {
            return Err(parse_err(
                bytes.len(),
                format!(
                    "raster truncated: need {n} bytes, found {}",
                    bytes.len() - cur.pos
                ),
            ));
        }
        for &b in &bytes[cur.pos..cur.pos + n] {
            if b as u32 > maxval {
                return Err(parse_err(cur.pos, format!("sample {b} exceeds maxval")));
            }
            data.push(b as f64 * scale);
        }
    } else {
        for _ in 0..n {
            let at = cur.pos;
            let v = cur.read_number("pixel value")?;
            if v > maxval {
                return Err(parse_err(at, format!("sample {v} exceeds maxval")));
            }
            data.push(v as f64 * scale);
        }
    }
    ImageGrid::new(height, width, data)
        .map_err(|e| parse_err(bytes.len(), format!("invalid raster: {e}")))
}

fn quantize(grid: &ImageGrid, maxval: u8) -> Vec<u8> {
    grid.as_slice()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * maxval as f64).round() as u8)
        .collect()
}

/// Writes a binary `P5` file, clamping intensities into `[0, 1]` first.
pub fn pgm_write(path: impl AsRef<Path>, grid: &ImageGrid, maxval: u8) -> Result<(), PgmError> {
    assert!(maxval >= 1);
    let mut f = std::fs::File::create(path)?;
    write!(f, "P5\n{} {}\n{}\n", grid.cols(), grid.rows(), maxval)?;
    f.write_all(&quantize(grid, maxval))?;
    Ok(())
}

/// Writes an ASCII `P2` file with one raster row per line.
pub fn pgm_write_ascii(
    path: impl AsRef<Path>,
    grid: &ImageGrid,
    maxval: u8,
) -> Result<(), PgmError> {
    assert!(maxval >= 1);
    let q = quantize(grid, maxval);
    let mut out = format!("P2\n{} {}\n{}\n", grid.cols(), grid.rows(), maxval);
    for i in 0..grid.rows() {
        let row: Vec<String> = (0..grid.cols())
            .map(|j| q[i * grid.cols() + j].to_string())
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
