//! Planar 8-bit images and the pixel-level plumbing the ciphers are built on:
//! color conversion, plane packing, block partitioning, and PNM I/O.

mod blocks;
mod color;
mod pack;
pub mod pnm;

pub use blocks::{merge_blocks, split_blocks, BlockGrid};
pub use color::{rgb_to_ycbcr, ycbcr_to_rgb, COLOR_ROUNDTRIP_BOUND};
pub use pack::{pack_planes, unpack_planes, LayoutKind, PlaneLayout};

use crate::error::{Error, Result};

/// An 8-bit image with one or three channels, stored plane by plane.
///
/// Sample `(x, y)` of channel `c` lives at `c * width * height + y * width + x`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for Image {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Image")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::ChannelCount { expected: "1 or 3", got: channels });
        }
        if data.len() != width * height * channels {
            return Err(Error::Dimension(format!(
                "{}x{}x{} image needs {} samples, got {}",
                width,
                height,
                channels,
                width * height * channels,
                data.len()
            )));
        }
        Ok(Self { width, height, channels, data })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds an image by stacking equally sized single-channel planes.
    pub fn from_planes(planes: &[&Image]) -> Result<Self> {
        let first = planes.first().ok_or_else(|| Error::Dimension("no planes".into()))?;
        let (w, h) = first.dims();
        let mut data = Vec::with_capacity(w * h * planes.len());
        for p in planes {
            if p.channels != 1 {
                return Err(Error::ChannelCount { expected: "1", got: p.channels });
            }
            if p.dims() != (w, h) {
                return Err(Error::Dimension(format!("plane {}x{} does not match {}x{}", p.width, p.height, w, h)));
            }
            data.extend_from_slice(&p.data);
        }
        Self::new(w, h, planes.len(), data)
    }

    /// Converts interleaved samples (`RGBRGB...` or gray) into a planar image.
    pub fn from_interleaved(width: usize, height: usize, channels: usize, src: &[u8]) -> Result<Self> {
        if src.len() != width * height * channels {
            return Err(Error::Dimension(format!(
                "interleaved buffer has {} samples, expected {}",
                src.len(),
                width * height * channels
            )));
        }
        let area = width * height;
        let mut data = vec![0u8; src.len()];
        for (i, px) in src.chunks_exact(channels).enumerate() {
            for (c, &v) in px.iter().enumerate() {
                data[c * area + i] = v;
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn to_interleaved(&self) -> Vec<u8> {
        let area = self.width * self.height;
        let mut out = vec![0u8; self.data.len()];
        for c in 0..self.channels {
            let plane = &self.data[c * area..(c + 1) * area];
            for (i, &v) in plane.iter().enumerate() {
                out[i * self.channels + c] = v;
            }
        }
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> &[u8] {
        &self.data
    }

    pub fn samples_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.data
    }

    pub fn plane(&self, c: usize) -> &[u8] {
        let area = self.width * self.height;
        &self.data[c * area..(c + 1) * area]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [u8] {
        let area = self.width * self.height;
        &mut self.data[c * area..(c + 1) * area]
    }

    /// Copies channel `c` out as its own single-channel image.
    pub fn channel(&self, c: usize) -> Image {
        Image { width: self.width, height: self.height, channels: 1, data: self.plane(c).to_vec() }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: u8) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    /// Copies the `w`x`h` window at `(x0, y0)` into a new image.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Image> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::Dimension(format!(
                "crop {}x{}+{}+{} outside {}x{}",
                w, h, x0, y0, self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h * self.channels);
        for c in 0..self.channels {
            for y in y0..y0 + h {
                let row = (c * self.height + y) * self.width;
                data.extend_from_slice(&self.data[row + x0..row + x0 + w]);
            }
        }
        Image::new(w, h, self.channels, data)
    }

    /// Writes `tile` into this image with its top-left corner at `(x0, y0)`.
    pub fn paste(&mut self, tile: &Image, x0: usize, y0: usize) -> Result<()> {
        if tile.channels != self.channels || x0 + tile.width > self.width || y0 + tile.height > self.height {
            return Err(Error::Dimension(format!(
                "cannot paste {}x{}x{} at ({x0},{y0}) into {}x{}x{}",
                tile.width, tile.height, tile.channels, self.width, self.height, self.channels
            )));
        }
        for c in 0..self.channels {
            for y in 0..tile.height {
                let src = (c * tile.height + y) * tile.width;
                let dst = (c * self.height + y0 + y) * self.width + x0;
                self.data[dst..dst + tile.width].copy_from_slice(&tile.data[src..src + tile.width]);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_channel_counts_and_lengths() {
        assert!(matches!(Image::new(2, 2, 2, vec![0; 8]), Err(Error::ChannelCount { .. })));
        assert!(matches!(Image::new(2, 2, 1, vec![0; 3]), Err(Error::Dimension(_))));
    }

    #[test]
    fn interleave_roundtrip() {
        let src: Vec<u8> = (0..2 * 3 * 3).map(|v| v as u8).collect();
        let img = Image::from_interleaved(2, 3, 3, &src).unwrap();
        assert_eq!(img.get(1, 0, 0), 3);
        assert_eq!(img.get(0, 0, 2), 2);
        assert_eq!(img.to_interleaved(), src);
    }

    #[test]
    fn crop_then_paste_restores() {
        let data: Vec<u8> = (0..6 * 4 * 3).map(|v| (v * 7 % 251) as u8).collect();
        let img = Image::new(6, 4, 3, data).unwrap();
        let tile = img.crop(2, 1, 3, 2).unwrap();
        assert_eq!(tile.get(0, 0, 1), img.get(2, 1, 1));
        let mut blank = Image::filled(6, 4, 3, 0).unwrap();
        blank.paste(&tile, 2, 1).unwrap();
        assert_eq!(blank.get(4, 2, 2), img.get(4, 2, 2));
        assert!(img.crop(5, 0, 2, 1).is_err());
    }
}
