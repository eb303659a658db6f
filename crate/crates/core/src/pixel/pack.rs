//! Packing of the Y, Cb and Cr planes into one single-channel image.

use serde::{Deserialize, Serialize};

use super::Image;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutKind {
    /// Y | Cb | Cr side by side: `3X x Y`.
    Horizontal,
    /// Y over Cb over Cr: `X x 3Y`.
    Vertical,
}

impl LayoutKind {
    pub fn packed_dims(self, w: usize, h: usize) -> (usize, usize) {
        match self {
            LayoutKind::Horizontal => (3 * w, h),
            LayoutKind::Vertical => (w, 3 * h),
        }
    }

    /// Recovers the plane size from a packed size, if it divides evenly.
    pub fn plane_dims(self, packed_w: usize, packed_h: usize) -> Option<(usize, usize)> {
        match self {
            LayoutKind::Horizontal if packed_w.is_multiple_of(3) => Some((packed_w / 3, packed_h)),
            LayoutKind::Vertical if packed_h.is_multiple_of(3) => Some((packed_w, packed_h / 3)),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlaneLayout {
    pub kind: LayoutKind,
    pub original_w: usize,
    pub original_h: usize,
}

impl PlaneLayout {
    pub fn new(kind: LayoutKind, original_w: usize, original_h: usize) -> Self {
        Self { kind, original_w, original_h }
    }

    pub fn packed_dims(&self) -> (usize, usize) {
        self.kind.packed_dims(self.original_w, self.original_h)
    }
}

pub fn pack_planes(y: &Image, cb: &Image, cr: &Image, layout: LayoutKind) -> Result<Image> {
    // from_planes validates that all three are equally sized single-channel planes
    let stacked = Image::from_planes(&[y, cb, cr])?;
    let (w, h) = stacked.dims();
    match layout {
        // planar storage already is the vertical stack
        LayoutKind::Vertical => Image::new(w, 3 * h, 1, stacked.into_samples()),
        LayoutKind::Horizontal => {
            let mut out = Vec::with_capacity(3 * w * h);
            for row in 0..h {
                for c in 0..3 {
                    let start = (c * h + row) * w;
                    out.extend_from_slice(&stacked.samples()[start..start + w]);
                }
            }
            Image::new(3 * w, h, 1, out)
        }
    }
}

pub fn unpack_planes(img: &Image, layout: PlaneLayout) -> Result<[Image; 3]> {
    if img.channels() != 1 {
        return Err(Error::ChannelCount { expected: "1", got: img.channels() });
    }
    let (w, h) = (layout.original_w, layout.original_h);
    if img.dims() != layout.packed_dims() {
        return Err(Error::Layout(format!(
            "{:?} layout of {}x{} planes needs a {}x{} image, got {}x{}",
            layout.kind,
            w,
            h,
            layout.packed_dims().0,
            layout.packed_dims().1,
            img.width(),
            img.height()
        )));
    }
    let s = img.samples();
    let plane = |c: usize| -> Result<Image> {
        let data = match layout.kind {
            LayoutKind::Vertical => s[c * w * h..(c + 1) * w * h].to_vec(),
            LayoutKind::Horizontal => {
                let mut d = Vec::with_capacity(w * h);
                for row in 0..h {
                    let start = row * 3 * w + c * w;
                    d.extend_from_slice(&s[start..start + w]);
                }
                d
            }
        };
        Image::new(w, h, 1, data)
    };
    Ok([plane(0)?, plane(1)?, plane(2)?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn plane(w: usize, h: usize, v: u8) -> Image {
        Image::filled(w, h, 1, v).unwrap()
    }

    #[test]
    fn one_pixel_horizontal() {
        let out = pack_planes(&plane(1, 1, 10), &plane(1, 1, 20), &plane(1, 1, 30), LayoutKind::Horizontal).unwrap();
        assert_eq!(out.dims(), (3, 1));
        assert_eq!(out.samples(), &[10, 20, 30]);
    }

    #[test]
    fn packed_sizes() {
        let p = plane(384, 512, 0);
        let h = pack_planes(&p, &p, &p, LayoutKind::Horizontal).unwrap();
        assert_eq!(h.dims(), (1152, 512));
        let v = pack_planes(&p, &p, &p, LayoutKind::Vertical).unwrap();
        assert_eq!(v.dims(), (384, 1536));
    }

    #[test]
    fn unpack_checks_dimensions() {
        let img = plane(10, 4, 0);
        let layout = PlaneLayout::new(LayoutKind::Horizontal, 3, 4);
        assert!(matches!(unpack_planes(&img, layout), Err(Error::Layout(_))));
    }

    #[test]
    fn pack_rejects_mismatched_planes() {
        assert!(pack_planes(&plane(2, 2, 0), &plane(2, 2, 0), &plane(2, 3, 0), LayoutKind::Vertical).is_err());
    }

    proptest! {
        #[test]
        fn pack_unpack_inverse(w in 1usize..20, h in 1usize..20, seed in any::<u64>(), vertical in any::<bool>()) {
            let gen = |k: u64| -> Image {
                let data = (0..w * h).map(|i| (((i as u64 * 2654435761) ^ seed ^ k) % 256) as u8).collect();
                Image::new(w, h, 1, data).unwrap()
            };
            let (y, cb, cr) = (gen(1), gen(2), gen(3));
            let kind = if vertical { LayoutKind::Vertical } else { LayoutKind::Horizontal };
            let packed = pack_planes(&y, &cb, &cr, kind).unwrap();
            let [y2, cb2, cr2] = unpack_planes(&packed, PlaneLayout::new(kind, w, h)).unwrap();
            prop_assert_eq!(y, y2);
            prop_assert_eq!(cb, cb2);
            prop_assert_eq!(cr, cr2);
        }
    }
}
