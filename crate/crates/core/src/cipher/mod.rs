//! Block-scrambling ciphers.
//!
//! The conventional scheme works on RGB blocks: permute, pose, complement,
//! and shuffle channels. The grayscale scheme converts to YCbCr, packs the
//! three planes into one single-channel image and applies the first three
//! steps to that image, so blocks can be as small as a JPEG DCT block.
//!
//! The draws of the pose, complement and channel steps are indexed by the
//! block's scrambled position, so decryption simply walks the steps
//! backwards: undo channels, undo complement, undo pose, then un-permute.

mod pose;

pub use pose::{apply_pose, D4Pose, BOTTOM, LEFT, RIGHT, TOP};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keys::{invert_channel_perm, StepKeys, TransformRecord};
use crate::pixel::{
    merge_blocks, pack_planes, rgb_to_ycbcr, split_blocks, unpack_planes, ycbcr_to_rgb, BlockGrid, Image, LayoutKind,
    PlaneLayout,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Conventional,
    Grayscale,
}

impl Scheme {
    /// Smallest block edge that stays aligned with JPEG's chroma handling.
    pub fn min_block(self) -> usize {
        match self {
            // 4:2:0 MCUs span 16x16 pixels
            Scheme::Conventional => 16,
            Scheme::Grayscale => 8,
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Conventional => "conventional",
            Scheme::Grayscale => "grayscale",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CipherConfig {
    pub scheme: Scheme,
    pub block_w: usize,
    pub block_h: usize,
    /// Plane packing; only used by the grayscale scheme.
    pub layout: LayoutKind,
    /// Permit block sizes that are not multiples of the scheme minimum.
    /// Such sizes straddle JPEG blocks and compress worse.
    pub nonstandard: bool,
}

impl CipherConfig {
    pub fn new(scheme: Scheme, block_w: usize, block_h: usize, layout: LayoutKind) -> Self {
        Self { scheme, block_w, block_h, layout, nonstandard: false }
    }

    pub fn conventional() -> Self {
        Self::new(Scheme::Conventional, 16, 16, LayoutKind::Horizontal)
    }

    pub fn grayscale() -> Self {
        Self::new(Scheme::Grayscale, 8, 8, LayoutKind::Horizontal)
    }

    pub fn with_block(mut self, size: usize) -> Self {
        self.block_w = size;
        self.block_h = size;
        self
    }

    pub fn with_layout(mut self, layout: LayoutKind) -> Self {
        self.layout = layout;
        self
    }

    pub fn allow_nonstandard(mut self) -> Self {
        self.nonstandard = true;
        self
    }

    /// Whether the block size is a multiple of the scheme's minimum.
    pub fn is_recommended(&self) -> bool {
        let m = self.scheme.min_block();
        self.block_w.is_multiple_of(m) && self.block_h.is_multiple_of(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_w == 0 || self.block_h == 0 {
            return Err(Error::Config("block size must be at least 1x1".into()));
        }
        if !self.nonstandard && !self.is_recommended() {
            return Err(Error::Config(format!(
                "{}x{} blocks are not a multiple of {} for the {} scheme; \
                 enable non-standard block sizes to use them anyway",
                self.block_w,
                self.block_h,
                self.scheme.min_block(),
                self.scheme
            )));
        }
        Ok(())
    }

    fn expect_scheme(&self, scheme: Scheme) -> Result<()> {
        self.validate()?;
        if self.scheme != scheme {
            return Err(Error::Config(format!("config is for the {} scheme, not {}", self.scheme, scheme)));
        }
        Ok(())
    }
}

/// Complements every sample (`p XOR 255`) when `bit` is set.
pub fn apply_negpos(block: &Image, bit: bool) -> Image {
    let mut out = block.clone();
    if bit {
        out.samples_mut().iter_mut().for_each(|p| *p ^= 0xFF);
    }
    out
}

/// Output channel `c` takes input channel `perm[c]`.
pub fn apply_channel_perm(block: &Image, perm: [u8; 3]) -> Result<Image> {
    if block.channels() != 3 {
        return Err(Error::ChannelCount { expected: "3", got: block.channels() });
    }
    let planes = [block.channel(perm[0] as usize), block.channel(perm[1] as usize), block.channel(perm[2] as usize)];
    Image::from_planes(&[&planes[0], &planes[1], &planes[2]])
}

fn check_record(grid: &BlockGrid, record: &TransformRecord) -> Result<()> {
    record.validate()?;
    if (record.cols, record.rows) != (grid.cols, grid.rows) {
        return Err(Error::Layout(format!(
            "record describes a {}x{} grid, image has {}x{}",
            record.cols, record.rows, grid.cols, grid.rows
        )));
    }
    Ok(())
}

/// Applies the steps of `record` to every block of `grid`.
pub fn scramble(grid: &BlockGrid, record: &TransformRecord) -> Result<Image> {
    check_record(grid, record)?;
    let mut blocks = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let tile = apply_pose(&grid.blocks[record.permutation[i]], record.poses[i])?;
        let mut tile = apply_negpos(&tile, record.polarity[i]);
        if let Some(perms) = &record.channel_perm {
            tile = apply_channel_perm(&tile, perms[i])?;
        }
        blocks.push(tile);
    }
    merge_blocks(&grid.with_blocks(blocks)?)
}

/// Exact inverse of [`scramble`].
pub fn unscramble(grid: &BlockGrid, record: &TransformRecord) -> Result<Image> {
    check_record(grid, record)?;
    let mut blocks = grid.blocks.clone();
    for i in 0..grid.len() {
        let mut tile = grid.blocks[i].clone();
        if let Some(perms) = &record.channel_perm {
            tile = apply_channel_perm(&tile, invert_channel_perm(perms[i]))?;
        }
        let tile = apply_negpos(&tile, record.polarity[i]);
        blocks[record.permutation[i]] = apply_pose(&tile, record.poses[i].inverse())?;
    }
    merge_blocks(&grid.with_blocks(blocks)?)
}

pub fn encrypt_conventional(img: &Image, keys: &StepKeys, cfg: &CipherConfig) -> Result<(Image, TransformRecord)> {
    cfg.expect_scheme(Scheme::Conventional)?;
    if img.channels() != 3 {
        return Err(Error::ChannelCount { expected: "3", got: img.channels() });
    }
    let grid = split_blocks(img, cfg.block_w, cfg.block_h)?;
    let record = TransformRecord::generate(keys, grid.cols, grid.rows, true)?;
    Ok((scramble(&grid, &record)?, record))
}

pub fn decrypt_conventional(enc: &Image, keys: &StepKeys, cfg: &CipherConfig) -> Result<Image> {
    cfg.expect_scheme(Scheme::Conventional)?;
    if enc.channels() != 3 {
        return Err(Error::ChannelCount { expected: "3", got: enc.channels() });
    }
    let grid = split_blocks(enc, cfg.block_w, cfg.block_h)?;
    let record = TransformRecord::generate(keys, grid.cols, grid.rows, true)?;
    unscramble(&grid, &record)
}

/// RGB to YCbCr, then the three planes packed into one image.
pub fn to_grayscale_based(img: &Image, layout: LayoutKind) -> Result<Image> {
    let [y, cb, cr] = rgb_to_ycbcr(img)?;
    pack_planes(&y, &cb, &cr, layout)
}

pub fn from_grayscale_based(packed: &Image, layout: LayoutKind) -> Result<Image> {
    if packed.channels() != 1 {
        return Err(Error::ChannelCount { expected: "1", got: packed.channels() });
    }
    let (w, h) = layout.plane_dims(packed.width(), packed.height()).ok_or_else(|| {
        Error::Layout(format!(
            "{}x{} cannot hold three equal planes in {:?} layout",
            packed.width(),
            packed.height(),
            layout
        ))
    })?;
    let [y, cb, cr] = unpack_planes(packed, PlaneLayout::new(layout, w, h))?;
    ycbcr_to_rgb(&y, &cb, &cr)
}

pub fn encrypt_grayscale(img: &Image, keys: &StepKeys, cfg: &CipherConfig) -> Result<(Image, TransformRecord)> {
    cfg.expect_scheme(Scheme::Grayscale)?;
    let packed = to_grayscale_based(img, cfg.layout)?;
    let grid = split_blocks(&packed, cfg.block_w, cfg.block_h)?;
    let record = TransformRecord::generate(keys, grid.cols, grid.rows, false)?;
    Ok((scramble(&grid, &record)?, record))
}

pub fn decrypt_grayscale(enc: &Image, keys: &StepKeys, cfg: &CipherConfig) -> Result<Image> {
    cfg.expect_scheme(Scheme::Grayscale)?;
    if enc.channels() != 1 {
        return Err(Error::ChannelCount { expected: "1", got: enc.channels() });
    }
    if cfg.layout.plane_dims(enc.width(), enc.height()).is_none() {
        return Err(Error::Layout(format!(
            "{}x{} is not a {:?} packing of three planes",
            enc.width(),
            enc.height(),
            cfg.layout
        )));
    }
    let grid = split_blocks(enc, cfg.block_w, cfg.block_h)?;
    let record = TransformRecord::generate(keys, grid.cols, grid.rows, false)?;
    from_grayscale_based(&unscramble(&grid, &record)?, cfg.layout)
}

pub fn encrypt(img: &Image, keys: &StepKeys, cfg: &CipherConfig) -> Result<(Image, TransformRecord)> {
    match cfg.scheme {
        Scheme::Conventional => encrypt_conventional(img, keys, cfg),
        Scheme::Grayscale => encrypt_grayscale(img, keys, cfg),
    }
}

pub fn decrypt(enc: &Image, keys: &StepKeys, cfg: &CipherConfig) -> Result<Image> {
    match cfg.scheme {
        Scheme::Conventional => decrypt_conventional(enc, keys, cfg),
        Scheme::Grayscale => decrypt_grayscale(enc, keys, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keys::{derive_step_keys, SecretKey};
    use crate::pixel::COLOR_ROUNDTRIP_BOUND;

    fn noise(w: usize, h: usize, c: usize, seed: u64) -> Image {
        let mut s = seed | 1;
        let data = (0..w * h * c)
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                s as u8
            })
            .collect();
        Image::new(w, h, c, data).unwrap()
    }

    fn keys(seed: u8) -> StepKeys {
        derive_step_keys(&SecretKey::from_seed(&[seed]))
    }

    #[test]
    fn negpos_values_and_involution() {
        let b = Image::new(2, 1, 1, vec![0, 100]).unwrap();
        let n = apply_negpos(&b, true);
        assert_eq!(n.samples(), &[255, 155]);
        assert_eq!(apply_negpos(&n, true), b);
        assert_eq!(apply_negpos(&b, false), b);
    }

    #[test]
    fn conventional_roundtrip_is_exact() {
        let img = noise(64, 48, 3, 7);
        let cfg = CipherConfig::conventional();
        let (enc, rec) = encrypt_conventional(&img, &keys(1), &cfg).unwrap();
        assert_eq!(rec.len(), 12);
        assert_ne!(enc, img);
        assert_eq!(decrypt_conventional(&enc, &keys(1), &cfg).unwrap(), img);
    }

    #[test]
    fn identity_record_is_a_noop() {
        let img = noise(32, 32, 3, 3);
        let grid = split_blocks(&img, 16, 16).unwrap();
        let rec = TransformRecord::identity(2, 2);
        assert_eq!(scramble(&grid, &rec).unwrap(), img);

        let packed = to_grayscale_based(&img, LayoutKind::Horizontal).unwrap();
        let grid = split_blocks(&packed, 8, 8).unwrap();
        let rec = TransformRecord::identity(grid.cols, grid.rows);
        assert_eq!(scramble(&grid, &rec).unwrap(), packed);
    }

    #[test]
    fn reference_block_counts() {
        let img = noise(384, 512, 3, 11);
        let (_, conv) = encrypt_conventional(&img, &keys(2), &CipherConfig::conventional()).unwrap();
        assert_eq!(conv.len(), 768);
        let (enc, gray) = encrypt_grayscale(&img, &keys(2), &CipherConfig::grayscale()).unwrap();
        assert_eq!(gray.len(), 9216);
        assert_eq!(gray.len(), 12 * conv.len());
        assert_eq!((enc.width(), enc.height(), enc.channels()), (1152, 512, 1));
        assert_eq!(enc.samples().len(), 3 * 384 * 512);
    }

    #[test]
    fn grayscale_roundtrip_within_color_bound() {
        for layout in [LayoutKind::Horizontal, LayoutKind::Vertical] {
            let img = noise(40, 24, 3, 5);
            let cfg = CipherConfig::grayscale().with_layout(layout);
            let (enc, _) = encrypt_grayscale(&img, &keys(3), &cfg).unwrap();
            let dec = decrypt_grayscale(&enc, &keys(3), &cfg).unwrap();
            let worst = img.samples().iter().zip(dec.samples()).map(|(a, b)| a.abs_diff(*b)).max().unwrap();
            assert!(worst <= COLOR_ROUNDTRIP_BOUND, "{layout:?}: {worst}");
        }
    }

    #[test]
    fn grayscale_decrypt_checks_dimensions() {
        let enc = noise(40, 8, 1, 1);
        assert!(matches!(decrypt_grayscale(&enc, &keys(1), &CipherConfig::grayscale()), Err(Error::Layout(_))));
        let rgb = noise(48, 8, 3, 1);
        assert!(decrypt_grayscale(&rgb, &keys(1), &CipherConfig::grayscale()).is_err());
    }

    #[test]
    fn permutation_and_pose_keep_the_histogram() {
        let img = noise(32, 32, 1, 9).channel(0);
        let grid = split_blocks(&img, 8, 8).unwrap();
        let mut rec = TransformRecord::generate(&keys(4), 4, 4, false).unwrap();
        rec.polarity.iter_mut().for_each(|b| *b = false);
        let enc = scramble(&grid, &rec).unwrap();
        let mut a = img.samples().to_vec();
        let mut b = enc.samples().to_vec();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }

    #[test]
    fn complemented_blocks_mirror_their_histogram() {
        let img = noise(16, 16, 1, 2);
        let grid = split_blocks(&img, 8, 8).unwrap();
        let rec = TransformRecord::generate(&keys(5), 2, 2, false).unwrap();
        let enc_grid = split_blocks(&scramble(&grid, &rec).unwrap(), 8, 8).unwrap();
        for i in 0..4 {
            let mut src: Vec<u8> = grid.blocks[rec.permutation[i]].samples().to_vec();
            if rec.polarity[i] {
                src.iter_mut().for_each(|v| *v = 255 - *v);
            }
            let mut dst = enc_grid.blocks[i].samples().to_vec();
            src.sort_unstable();
            dst.sort_unstable();
            assert_eq!(src, dst);
        }
    }

    #[test]
    fn block_size_policy() {
        let cfg = CipherConfig::conventional().with_block(8);
        assert!(cfg.validate().is_err());
        assert!(cfg.allow_nonstandard().validate().is_ok());
        assert!(CipherConfig::conventional().with_block(32).validate().is_ok());
        assert!(CipherConfig::grayscale().with_block(4).validate().is_err());
        assert!(!CipherConfig::grayscale().with_block(10).allow_nonstandard().is_recommended());
    }

    #[test]
    fn too_small_images_and_wrong_scheme() {
        let tiny = noise(8, 8, 3, 1);
        assert!(matches!(
            encrypt_conventional(&tiny, &keys(1), &CipherConfig::conventional()),
            Err(Error::EmptyGrid { .. })
        ));
        assert!(encrypt_conventional(&noise(16, 16, 1, 1), &keys(1), &CipherConfig::conventional()).is_err());
        assert!(encrypt_grayscale(&tiny, &keys(1), &CipherConfig::conventional()).is_err());
    }

    #[test]
    fn channel_perm_moves_planes() {
        let b = Image::new(1, 1, 3, vec![10, 20, 30]).unwrap();
        let p = apply_channel_perm(&b, [2, 0, 1]).unwrap();
        assert_eq!(p.samples(), &[30, 10, 20]);
        assert_eq!(apply_channel_perm(&p, invert_channel_perm([2, 0, 1])).unwrap(), b);
    }
}
