//! Plain-text PGM (P2) image output for the reconstruction/generation demos.

use lvbench::bits::BitVec;
use lvbench::error::{Error, Result};
use std::path::Path;

/// Writes a square binary image: bit 1 renders black on white.
pub fn write_pgm(path: &Path, pixels: &BitVec, side: usize) -> Result<()> {
    if pixels.len() != side * side {
        return Err(Error::DimensionMismatch {
            what: "image pixels",
            expected: side * side,
            found: pixels.len(),
        });
    }
    let mut out = format!("P2\n{side} {side}\n255\n");
    for r in 0..side {
        let row: Vec<&str> = (0..side)
            .map(|c| if pixels.get(r * side + c) { "0" } else { "255" })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Three-level variant for clamp-mask illustrations: clamped-on pixels are
/// black, clamped-off white, and free pixels mid gray.
pub fn write_mask_pgm(path: &Path, clamped: &BitVec, values: &BitVec, side: usize) -> Result<()> {
    if clamped.len() < side * side {
        return Err(Error::DimensionMismatch {
            what: "mask bits",
            expected: side * side,
            found: clamped.len(),
        });
    }
    let mut out = format!("P2\n{side} {side}\n255\n");
    for r in 0..side {
        let row: Vec<&str> = (0..side)
            .map(|c| {
                let i = r * side + c;
                if !clamped.get(i) {
                    "128"
                } else if values.get(i) {
                    "0"
                } else {
                    "255"
                }
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let px = BitVec::from_bools(&[true, false, false, true]);
        write_pgm(&path, &px, 2).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "P2\n2 2\n255\n0 255\n255 0\n");
        assert!(write_pgm(&path, &px, 3).is_err());
    }
}
