//! Binary PGM (P5, maxval 255) export for frames and saliency maps.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::Frame;

/// Writes values clamped to [0,1] as an 8-bit P5 file.
pub fn write_pgm(path: &Path, width: usize, height: usize, values: &[f32]) -> Result<()> {
    if values.len() != width * height {
        return Err(Error::shape(
            "write_pgm",
            format!("{}x{} image wants {} values, got {}", width, height, width * height, values.len()),
        ));
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(w, "P5\n{} {}\n255\n", width, height)?;
    let bytes: Vec<u8> = values
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    w.write_all(&bytes)?;
    Ok(())
}

pub fn write_frame_pgm(path: &Path, frame: &Frame) -> Result<()> {
    write_pgm(path, frame.width(), frame.height(), frame.data())
}

/// Parses a P5 file back into normalized floats. Used by tests and debug
/// tooling; only the exact header layout written above is accepted.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<f32>)> {
    let raw = std::fs::read(path)?;
    let header_end = raw
        .windows(1)
        .enumerate()
        .scan(0usize, |newlines, (i, w)| {
            if w[0] == b'\n' {
                *newlines += 1;
            }
            Some((*newlines, i))
        })
        .find(|(n, _)| *n == 3)
        .map(|(_, i)| i + 1)
        .ok_or_else(|| Error::format("pgm", "missing header"))?;
    let header = std::str::from_utf8(&raw[..header_end])
        .map_err(|_| Error::format("pgm", "non-UTF8 header"))?;
    let mut lines = header.lines();
    if lines.next() != Some("P5") {
        return Err(Error::format("pgm", "not a P5 file"));
    }
    let dims = lines.next().ok_or_else(|| Error::format("pgm", "missing dims"))?;
    let mut it = dims.split_whitespace();
    let width: usize = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::format("pgm", "bad width"))?;
    let height: usize = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::format("pgm", "bad height"))?;
    let maxval = lines.next().ok_or_else(|| Error::format("pgm", "missing maxval"))?;
    if maxval.trim() != "255" {
        return Err(Error::format("pgm", "maxval must be 255"));
    }
    let body = &raw[header_end..];
    if body.len() != width * height {
        return Err(Error::format(
            "pgm",
            format!("expected {} pixels, got {}", width * height, body.len()),
        ));
    }
    Ok((
        width,
        height,
        body.iter().map(|&b| b as f32 / 255.0).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.pgm");
        let vals = vec![0.0, 0.5, 1.0, 0.25, 0.75, 0.1];
        write_pgm(&path, 3, 2, &vals).unwrap();
        let (w, h, back) = read_pgm(&path).unwrap();
        assert_eq!((w, h), (3, 2));
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b).abs() < 1.0 / 255.0 + 1e-6);
        }
    }
}
