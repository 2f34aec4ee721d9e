use std::fs;
use std::io::Write;
use std::path::Path;

use crate::nncore::Tensor;
use crate::{GlyphError, Result};

/// Side length of a model-ready glyph raster.
pub const GLYPH_SIZE: usize = 64;

/// 8-bit grayscale raster as read from disk, any size.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<GrayImage> {
        if width == 0 || height == 0 {
            return Err(GlyphError::Image(format!(
                "zero-dimension image ({width}x{height})"
            )));
        }
        if data.len() != width * height {
            return Err(GlyphError::Image(format!(
                "pixel buffer has {} bytes, expected {}",
                data.len(),
                width * height
            )));
        }
        Ok(GrayImage { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }
}

/// A 64x64 glyph raster with pixel values in [0, 1]; 1.0 marks ink.
/// After binarization every value is exactly 0.0 or 1.0.
#[derive(Clone, Debug, PartialEq)]
pub struct GlyphImage {
    pixels: Vec<f64>,
}

impl GlyphImage {
    pub fn zeros() -> GlyphImage {
        GlyphImage {
            pixels: vec![0.0; GLYPH_SIZE * GLYPH_SIZE],
        }
    }

    pub fn from_pixels(pixels: Vec<f64>) -> Result<GlyphImage> {
        if pixels.len() != GLYPH_SIZE * GLYPH_SIZE {
            return Err(GlyphError::Image(format!(
                "glyph image needs {} pixels, got {}",
                GLYPH_SIZE * GLYPH_SIZE,
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(GlyphError::Image(format!(
                "glyph pixel {bad} outside [0, 1]"
            )));
        }
        Ok(GlyphImage { pixels })
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * GLYPH_SIZE + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.pixels[y * GLYPH_SIZE + x] = v;
    }

    pub fn is_binary(&self) -> bool {
        self.pixels.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn ink_count(&self) -> usize {
        self.pixels.iter().filter(|&&v| v > 0.5).count()
    }

    /// View as a (1, 64, 64) tensor for the model.
    pub fn to_tensor(&self) -> Tensor {
        Tensor::from_vec(&[1, GLYPH_SIZE, GLYPH_SIZE], self.pixels.clone())
            .expect("fixed glyph dimensions")
    }
}

/// Write a binary glyph as PGM (P5), ink mapped to 255.
pub fn write_glyph_pgm(path: &Path, glyph: &GlyphImage) -> Result<()> {
    let mut buf = Vec::with_capacity(GLYPH_SIZE * GLYPH_SIZE + 32);
    write!(buf, "P5\n{GLYPH_SIZE} {GLYPH_SIZE}\n255\n").expect("in-memory write");
    buf.extend(glyph.pixels.iter().map(|&v| if v > 0.5 { 255u8 } else { 0u8 }));
    fs::write(path, buf).map_err(|e| GlyphError::io(path, e))
}

/// Parse a PGM (P5) file.
pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| GlyphError::io(path, e))?;
    parse_pgm(&bytes).map_err(|msg| GlyphError::Image(format!("{}: {msg}", path.display())))
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let mut pos = 0usize;
    let mut token = |bytes: &[u8]| -> std::result::Result<String, String> {
        // skip whitespace and '#' comments
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    if token(bytes)? != "P5" {
        return Err("not a P5 PGM".into());
    }
    let width: usize = token(bytes)?.parse().map_err(|_| "bad width")?;
    let height: usize = token(bytes)?.parse().map_err(|_| "bad height")?;
    let maxval: usize = token(bytes)?.parse().map_err(|_| "bad maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(format!("unsupported maxval {maxval}"));
    }
    // exactly one whitespace byte separates the header from pixel data
    pos += 1;
    let need = width * height;
    if bytes.len() < pos + need {
        return Err(format!("expected {need} pixel bytes, found {}", bytes.len().saturating_sub(pos)));
    }
    let mut data = bytes[pos..pos + need].to_vec();
    if maxval != 255 {
        for v in &mut data {
            *v = ((*v as usize * 255) / maxval) as u8;
        }
    }
    GrayImage::new(width, height, data).map_err(|e| e.to_string())
}

/// Load an 8-bit grayscale image: PGM (P5) or PNG, chosen by extension.
pub fn read_gray_image(path: &Path) -> Result<GrayImage> {
    match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
        Some(ext) if ext == "pgm" => read_pgm(path),
        Some(ext) if ext == "png" => read_png(path),
        _ => Err(GlyphError::Image(format!(
            "{}: unsupported image format (expected .pgm or .png)",
            path.display()
        ))),
    }
}

fn read_png(path: &Path) -> Result<GrayImage> {
    let img = image::open(path)
        .map_err(|e| GlyphError::Image(format!("{}: {e}", path.display())))?
        .into_luma8();
    GrayImage::new(img.width() as usize, img.height() as usize, img.into_raw())
}

/// Read a persisted binary glyph (PGM with values {0, 255}, ink = 255).
pub fn read_glyph_pgm(path: &Path) -> Result<GlyphImage> {
    let gray = read_pgm(path)?;
    if gray.width() != GLYPH_SIZE || gray.height() != GLYPH_SIZE {
        return Err(GlyphError::Image(format!(
            "{}: expected {GLYPH_SIZE}x{GLYPH_SIZE} glyph, got {}x{}",
            path.display(),
            gray.width(),
            gray.height()
        )));
    }
    let mut pixels = Vec::with_capacity(GLYPH_SIZE * GLYPH_SIZE);
    for &v in gray.data() {
        match v {
            0 => pixels.push(0.0),
            255 => pixels.push(1.0),
            other => {
                return Err(GlyphError::Image(format!(
                    "{}: pixel value {other} is not binary (run ingest first)",
                    path.display()
                )))
            }
        }
    }
    GlyphImage::from_pixels(pixels)
}
