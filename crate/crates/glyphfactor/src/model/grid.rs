use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::corpus::GLYPH_SIZE;
use crate::{GlyphError, Result};

use super::ModelParams;

/// Render a reconstruction grid: one row per requested scribe, one column per
/// requested sign, each cell decoded purely from the embedding pair. Pairs
/// never observed in training render like any other, which is the
/// matrix-completion use. Written as PGM (P5), cell values scaled to 0-255.
pub fn reconstruct_grid(
    model: &ModelParams,
    scribe_ids: &[usize],
    sign_ids: &[usize],
    out_path: &Path,
) -> Result<()> {
    if scribe_ids.is_empty() || sign_ids.is_empty() {
        return Err(GlyphError::Invalid("grid needs at least one scribe and one sign".into()));
    }
    for &k in scribe_ids {
        model.check_scribe(k)?;
    }
    for &j in sign_ids {
        model.check_sign(j)?;
    }
    let rows = scribe_ids.len();
    let cols = sign_ids.len();
    let (w, h) = (cols * GLYPH_SIZE, rows * GLYPH_SIZE);
    let mut canvas = vec![0u8; w * h];
    for (r, &scribe) in scribe_ids.iter().enumerate() {
        for (c, &sign) in sign_ids.iter().enumerate() {
            let cell = model.decode(sign, scribe)?;
            if !cell.all_finite() {
                return Err(GlyphError::Invalid(format!(
                    "non-finite reconstruction for (scribe {scribe}, sign {sign})"
                )));
            }
            for y in 0..GLYPH_SIZE {
                let dst_row = (r * GLYPH_SIZE + y) * w + c * GLYPH_SIZE;
                for x in 0..GLYPH_SIZE {
                    let v = cell.data()[y * GLYPH_SIZE + x];
                    canvas[dst_row + x] = (v * 255.0).round().clamp(0.0, 255.0) as u8;
                }
            }
        }
    }
    let mut buf = Vec::with_capacity(canvas.len() + 32);
    write!(buf, "P5\n{w} {h}\n255\n").expect("in-memory write");
    buf.extend_from_slice(&canvas);
    fs::write(out_path, buf).map_err(|e| GlyphError::io(out_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::image::read_pgm;

    #[test]
    fn two_by_three_grid_has_six_cells() {
        let model = ModelParams::init(3, 2, 4, 1.0 / 128.0, 5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.pgm");
        reconstruct_grid(&model, &[0, 1], &[0, 1, 2], &path).unwrap();
        let img = read_pgm(&path).unwrap();
        assert_eq!(img.width(), 3 * GLYPH_SIZE);
        assert_eq!(img.height(), 2 * GLYPH_SIZE);
    }

    #[test]
    fn grid_is_deterministic() {
        let model = ModelParams::init(2, 2, 4, 1.0 / 128.0, 6);
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.pgm");
        let b = dir.path().join("b.pgm");
        reconstruct_grid(&model, &[0], &[0, 1], &a).unwrap();
        reconstruct_grid(&model, &[0], &[0, 1], &b).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }

    #[test]
    fn unknown_ids_rejected() {
        let model = ModelParams::init(2, 2, 4, 1.0 / 128.0, 7);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.pgm");
        assert!(reconstruct_grid(&model, &[5], &[0], &path).is_err());
        assert!(reconstruct_grid(&model, &[0], &[9], &path).is_err());
    }
}
