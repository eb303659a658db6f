use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pixel::Image;

/// Side of a square tile, clockwise from the top.
pub const TOP: usize = 0;
pub const RIGHT: usize = 1;
pub const BOTTOM: usize = 2;
pub const LEFT: usize = 3;

/// One of the eight symmetries of a square: a clockwise quarter-turn count
/// followed by an optional horizontal (left-right) mirror.
///
/// 180 degrees equals flipping both horizontally and vertically, so the
/// group has exactly eight distinct elements and no rotation/flip pair is
/// counted twice.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct D4Pose {
    /// Clockwise quarter turns, 0..4.
    pub rotation: u8,
    pub flip_h: bool,
}

impl D4Pose {
    pub const IDENTITY: D4Pose = D4Pose { rotation: 0, flip_h: false };

    pub fn new(rotation: u8, flip_h: bool) -> Self {
        Self { rotation: rotation % 4, flip_h }
    }

    pub fn all() -> impl Iterator<Item = D4Pose> {
        (0..8u8).map(D4Pose::from_index)
    }

    /// `index = rotation + 4 * flip`.
    pub fn from_index(index: u8) -> Self {
        Self::new(index & 3, index & 4 != 0)
    }

    pub fn index(self) -> u8 {
        self.rotation + if self.flip_h { 4 } else { 0 }
    }

    pub fn is_identity(self) -> bool {
        self == Self::IDENTITY
    }

    pub fn inverse(self) -> Self {
        if self.flip_h {
            // mirrored elements are involutions
            self
        } else {
            Self::new((4 - self.rotation) % 4, false)
        }
    }

    /// The pose equivalent to applying `self` first and then `next`.
    pub fn then(self, next: D4Pose) -> D4Pose {
        // Element (r, f) acts as H^f . R^r. Moving R^a past H negates it.
        if self.flip_h {
            D4Pose::new((self.rotation + 4 - next.rotation) % 4, !next.flip_h)
        } else {
            D4Pose::new(self.rotation + next.rotation, next.flip_h)
        }
    }

    /// Where an original side ends up after the pose.
    pub fn map_side(self, side: usize) -> usize {
        let turned = (side + self.rotation as usize) % 4;
        if self.flip_h {
            match turned {
                RIGHT => LEFT,
                LEFT => RIGHT,
                s => s,
            }
        } else {
            turned
        }
    }

    /// The original side that faces `dir` after the pose.
    pub fn side_facing(self, dir: usize) -> usize {
        (0..4).find(|&s| self.map_side(s) == dir).expect("pose maps sides bijectively")
    }

    /// The unique pose with the given mirror flag that turns `side` to face `dir`.
    pub fn turning(side: usize, dir: usize, flip_h: bool) -> D4Pose {
        (0..4u8)
            .map(|r| D4Pose::new(r, flip_h))
            .find(|p| p.map_side(side) == dir)
            .expect("some rotation aligns any side")
    }

    /// Output dimensions for a `w x h` input.
    pub fn output_dims(self, w: usize, h: usize) -> (usize, usize) {
        if self.rotation % 2 == 1 {
            (h, w)
        } else {
            (w, h)
        }
    }

    /// Source coordinate feeding output pixel `(x, y)` of a `w x h` input.
    #[inline]
    pub fn source(self, x: usize, y: usize, w: usize, h: usize) -> (usize, usize) {
        let (ow, _) = self.output_dims(w, h);
        // undo the mirror first (it was applied last)
        let x = if self.flip_h { ow - 1 - x } else { x };
        match self.rotation {
            0 => (x, y),
            1 => (y, h - 1 - x),
            2 => (w - 1 - x, h - 1 - y),
            _ => (w - 1 - y, x),
        }
    }
}

/// Rotates `block` clockwise by the pose's quarter turns, then mirrors it if requested.
pub fn apply_pose(block: &Image, pose: D4Pose) -> Result<Image> {
    let (w, h) = block.dims();
    if pose.rotation % 2 == 1 && w != h {
        return Err(Error::Shape { w, h });
    }
    if pose.is_identity() {
        return Ok(block.clone());
    }
    let (ow, oh) = pose.output_dims(w, h);
    let mut out = Vec::with_capacity(block.samples().len());
    for c in 0..block.channels() {
        for y in 0..oh {
            for x in 0..ow {
                let (sx, sy) = pose.source(x, y, w, h);
                out.push(block.get(sx, sy, c));
            }
        }
    }
    Image::new(ow, oh, block.channels(), out)
}
