//! Binary morphology used by the closing baseline.
//!
//! Closing (dilation followed by erosion) fills gaps up to roughly the
//! structuring-element radius, which makes it the classic repair step to
//! compare gap-aware connectivity filtering against. Pixels outside the
//! image are background for both operations.

use crate::raster::BinaryMask;

/// A set of offsets probed around each pixel. The origin offset `(0, 0)`
/// is required: it makes dilation extensive and erosion anti-extensive,
/// which the pipeline's repair-only contract relies on.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StructuringElement {
    offsets: Vec<(i32, i32)>,
}

impl StructuringElement {
    /// The four axis neighbors plus the origin; one closing with this
    /// element fills single-pixel gaps.
    pub fn cross() -> Self {
        Self { offsets: vec![(0, 0), (0, -1), (1, 0), (0, 1), (-1, 0)] }
    }

    /// Builds an element from explicit offsets; the origin is added when
    /// missing and duplicates are dropped.
    pub fn from_offsets(offsets: impl IntoIterator<Item = (i32, i32)>) -> Self {
        let mut all = vec![(0, 0)];
        for o in offsets {
            if !all.contains(&o) {
                all.push(o);
            }
        }
        Self { offsets: all }
    }

    /// The element mirrored through the origin, as used by the erosion
    /// dual.
    pub fn reflect(&self) -> Self {
        Self { offsets: self.offsets.iter().map(|&(x, y)| (-x, -y)).collect() }
    }

    pub fn offsets(&self) -> &[(i32, i32)] {
        &self.offsets
    }
}

/// A pixel `p` is white after dilation iff `mask(p - o)` is white for
/// some offset `o`.
pub fn dilate(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    map_neighborhood(mask, se, true, -1)
}

/// A pixel `p` is white after erosion iff `mask(p + o)` is white for
/// every offset `o`; probes outside the image are background, so erosion
/// always clears the pixels whose element pokes past the frame.
pub fn erode(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    map_neighborhood(mask, se, false, 1)
}

/// Morphological closing: dilation then erosion with the same element.
///
/// Always idempotent. Extensive on masks whose white content stays off
/// the image border (the field-of-view border of retinal images is
/// black); white pixels touching the frame can be eroded away because
/// out-of-bounds probes read background.
pub fn close(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    erode(&dilate(mask, se), se)
}

fn map_neighborhood(mask: &BinaryMask, se: &StructuringElement, any: bool, sign: i64) -> BinaryMask {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let px = mask.pixels();
    let mut out = vec![0u8; px.len()];
    for y in 0..h {
        for x in 0..w {
            let mut hit = !any;
            for &(dx, dy) in se.offsets() {
                let (nx, ny) = (x + sign * dx as i64, y + sign * dy as i64);
                let white = nx >= 0
                    && ny >= 0
                    && nx < w
                    && ny < h
                    && px[ny as usize * w as usize + nx as usize] != 0;
                if white == any {
                    hit = any;
                    break;
                }
            }
            out[y as usize * w as usize + x as usize] = u8::from(hit);
        }
    }
    BinaryMask::from_raw(mask.width(), mask.height(), out).expect("same dimensions")
}
