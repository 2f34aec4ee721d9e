//! Deterministic 27-variant augmentation: the cross product of 9 translations
//! ({-5, 0, +5} on each axis) and 3 morphologies (none, erode, dilate with a
//! 2x2 structuring element). Morphology runs before translation.

use crate::corpus::{GlyphImage, GLYPH_SIZE};
use crate::{GlyphError, Result};

pub const TRANSLATION_STEPS: [i32; 3] = [-5, 0, 5];
pub const VARIANT_COUNT: usize = 27;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Morphology {
    None,
    Erode,
    Dilate,
}

impl Morphology {
    pub const ALL: [Morphology; 3] = [Morphology::None, Morphology::Erode, Morphology::Dilate];

    pub fn name(self) -> &'static str {
        match self {
            Morphology::None => "none",
            Morphology::Erode => "erode",
            Morphology::Dilate => "dilate",
        }
    }
}

/// One of the 27 augmentation variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AugmentationSpec {
    pub dx: i32,
    pub dy: i32,
    pub morph: Morphology,
}

impl AugmentationSpec {
    /// Canonical order: morphology-major (none, erode, dilate), then dy, then
    /// dx ascending. Exactly 27 distinct specs.
    pub fn all() -> Vec<AugmentationSpec> {
        let mut specs = Vec::with_capacity(VARIANT_COUNT);
        for morph in Morphology::ALL {
            for dy in TRANSLATION_STEPS {
                for dx in TRANSLATION_STEPS {
                    specs.push(AugmentationSpec { dx, dy, morph });
                }
            }
        }
        specs
    }

    pub fn is_identity(self) -> bool {
        self.dx == 0 && self.dy == 0 && self.morph == Morphology::None
    }

    /// File-name fragment, e.g. `mnone_dx-5_dy0`.
    pub fn tag(self) -> String {
        format!("m{}_dx{}_dy{}", self.morph.name(), self.dx, self.dy)
    }
}

/// Shift ink by (dx, dy): output pixel (x, y) reads input (x - dx, y - dy);
/// cells shifted in from outside the frame are background; ink shifted out is
/// dropped.
pub fn translate(img: &GlyphImage, dx: i32, dy: i32) -> Result<GlyphImage> {
    if dx.abs() > 5 || dy.abs() > 5 {
        return Err(GlyphError::Invalid(format!(
            "translation ({dx}, {dy}) exceeds the 5-pixel augmentation range"
        )));
    }
    let n = GLYPH_SIZE as i32;
    let mut out = GlyphImage::zeros();
    for y in 0..n {
        let sy = y - dy;
        if sy < 0 || sy >= n {
            continue;
        }
        for x in 0..n {
            let sx = x - dx;
            if sx < 0 || sx >= n {
                continue;
            }
            out.set(x as usize, y as usize, img.get(sx as usize, sy as usize));
        }
    }
    Ok(out)
}

/// Erosion with the 2x2 structuring element anchored at its top-left cell:
/// output pixel p is ink iff all four element cells placed at p lie inside
/// the frame and on ink.
pub fn erode(img: &GlyphImage) -> GlyphImage {
    let n = GLYPH_SIZE;
    let mut out = GlyphImage::zeros();
    for y in 0..n - 1 {
        for x in 0..n - 1 {
            let all_ink = img.get(x, y) == 1.0
                && img.get(x + 1, y) == 1.0
                && img.get(x, y + 1) == 1.0
                && img.get(x + 1, y + 1) == 1.0;
            if all_ink {
                out.set(x, y, 1.0);
            }
        }
    }
    out
}

/// Dilation with the same element: output pixel p is ink iff any placement of
/// the element covering p sits on ink, i.e. any of p, p-(1,0), p-(0,1),
/// p-(1,1) is ink.
pub fn dilate(img: &GlyphImage) -> GlyphImage {
    let n = GLYPH_SIZE;
    let mut out = GlyphImage::zeros();
    for y in 0..n {
        for x in 0..n {
            let any_ink = img.get(x, y) == 1.0
                || (x > 0 && img.get(x - 1, y) == 1.0)
                || (y > 0 && img.get(x, y - 1) == 1.0)
                || (x > 0 && y > 0 && img.get(x - 1, y - 1) == 1.0);
            if any_ink {
                out.set(x, y, 1.0);
            }
        }
    }
    out
}

fn apply_morph(img: &GlyphImage, morph: Morphology) -> GlyphImage {
    match morph {
        Morphology::None => img.clone(),
        Morphology::Erode => erode(img),
        Morphology::Dilate => dilate(img),
    }
}

/// All 27 variants in canonical spec order. Morphology is applied before
/// translation, so border effects are identical across translations of the
/// same morphed glyph.
pub fn augment_all(img: &GlyphImage) -> Vec<GlyphImage> {
    let morphed: Vec<GlyphImage> = Morphology::ALL.iter().map(|&m| apply_morph(img, m)).collect();
    let mut out = Vec::with_capacity(VARIANT_COUNT);
    for (mi, _) in Morphology::ALL.iter().enumerate() {
        for dy in TRANSLATION_STEPS {
            for dx in TRANSLATION_STEPS {
                out.push(translate(&morphed[mi], dx, dy).expect("steps within range"));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn glyph_with(points: &[(usize, usize)]) -> GlyphImage {
        let mut g = GlyphImage::zeros();
        for &(x, y) in points {
            g.set(x, y, 1.0);
        }
        g
    }

    fn solid_square(x0: usize, y0: usize, side: usize) -> GlyphImage {
        let mut g = GlyphImage::zeros();
        for y in y0..y0 + side {
            for x in x0..x0 + side {
                g.set(x, y, 1.0);
            }
        }
        g
    }

    fn subset(a: &GlyphImage, b: &GlyphImage) -> bool {
        a.pixels().iter().zip(b.pixels()).all(|(x, y)| *x <= *y)
    }

    #[test]
    fn zero_translation_is_identity() {
        let g = solid_square(20, 20, 5);
        assert_eq!(translate(&g, 0, 0).unwrap(), g);
    }

    #[test]
    fn point_translates() {
        let g = glyph_with(&[(10, 10)]);
        let t = translate(&g, 5, 0).unwrap();
        assert_eq!(t.ink_count(), 1);
        assert_eq!(t.get(15, 10), 1.0);
    }

    #[test]
    fn ink_near_border_drops_out_of_frame() {
        let g = glyph_with(&[(62, 62), (10, 10)]);
        let t = translate(&g, 5, 0).unwrap();
        assert_eq!(t.ink_count(), g.ink_count() - 1);
        assert_eq!(t.get(15, 10), 1.0);
    }

    #[test]
    fn out_of_range_translation_rejected() {
        let g = GlyphImage::zeros();
        assert!(translate(&g, 6, 0).is_err());
        assert!(translate(&g, 0, -6).is_err());
    }

    #[test]
    fn morphology_fixes_empty_image() {
        let g = GlyphImage::zeros();
        assert_eq!(erode(&g), g);
        assert_eq!(dilate(&g), g);
    }

    #[test]
    fn erode_3x3_square_leaves_top_left_2x2() {
        let g = solid_square(10, 10, 3);
        let e = erode(&g);
        assert_eq!(e.ink_count(), 4);
        for (x, y) in [(10, 10), (11, 10), (10, 11), (11, 11)] {
            assert_eq!(e.get(x, y), 1.0, "expected ink at ({x},{y})");
        }
    }

    #[test]
    fn opening_is_anti_extensive_on_solid_square() {
        let g = solid_square(20, 20, 10);
        let opened = dilate(&erode(&g));
        assert!(subset(&opened, &g));
        // For a solid square the opening recovers it exactly.
        assert_eq!(opened, g);
    }

    #[test]
    fn augment_emits_27_with_identity_at_its_slot() {
        let g = solid_square(25, 25, 6);
        let variants = augment_all(&g);
        assert_eq!(variants.len(), VARIANT_COUNT);
        let specs = AugmentationSpec::all();
        assert_eq!(specs.len(), VARIANT_COUNT);
        let identity_idx = specs.iter().position(|s| s.is_identity()).unwrap();
        assert_eq!(variants[identity_idx], g);
        // All 27 specs are distinct.
        let mut unique = specs.clone();
        unique.dedup();
        assert_eq!(unique.len(), VARIANT_COUNT);
    }

    #[test]
    fn empty_image_is_fixed_by_every_variant() {
        let g = GlyphImage::zeros();
        for v in augment_all(&g) {
            assert_eq!(v, g);
        }
    }

    #[test]
    fn spec_tags_are_filename_fragments() {
        let spec = AugmentationSpec { dx: -5, dy: 0, morph: Morphology::Erode };
        assert_eq!(spec.tag(), "merode_dx-5_dy0");
    }

    fn arb_glyph() -> impl Strategy<Value = GlyphImage> {
        proptest::collection::vec(any::<bool>(), 64 * 64).prop_map(|bits| {
            GlyphImage::from_pixels(bits.into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect()).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn erode_subset_image_subset_dilate(g in arb_glyph()) {
            let e = erode(&g);
            let d = dilate(&g);
            prop_assert!(subset(&e, &g));
            prop_assert!(subset(&g, &d));
        }

        #[test]
        fn translate_round_trip_inside_margin(g in arb_glyph(), dx in -5i32..=5, dy in -5i32..=5) {
            // Clear a 5px border so no ink can fall off the frame.
            let mut inner = GlyphImage::zeros();
            for y in 5..59 {
                for x in 5..59 {
                    inner.set(x, y, g.get(x, y));
                }
            }
            let back = translate(&translate(&inner, dx, dy).unwrap(), -dx, -dy).unwrap();
            prop_assert_eq!(back, inner);
        }

        #[test]
        fn variants_stay_binary_64x64(g in arb_glyph()) {
            for v in augment_all(&g) {
                prop_assert!(v.is_binary());
            }
        }
    }
}
