use super::Image;
use crate::error::{Error, Result};

/// An image cut into `cols x rows` non-overlapping tiles of `block_w x block_h`.
///
/// Pixels right of the last full column or below the last full row are not
/// part of any tile; they are kept in `canvas` and restored by [`merge_blocks`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockGrid {
    pub block_w: usize,
    pub block_h: usize,
    pub cols: usize,
    pub rows: usize,
    /// Tiles in row-major block order.
    pub blocks: Vec<Image>,
    canvas: Image,
}

impl BlockGrid {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn image_dims(&self) -> (usize, usize) {
        self.canvas.dims()
    }

    /// Same grid geometry and margins with a different set of tiles.
    pub fn with_blocks(&self, blocks: Vec<Image>) -> Result<BlockGrid> {
        if blocks.len() != self.blocks.len() {
            return Err(Error::Dimension(format!("grid holds {} blocks, got {}", self.blocks.len(), blocks.len())));
        }
        Ok(BlockGrid { blocks, ..self.clone() })
    }
}

pub fn split_blocks(img: &Image, block_w: usize, block_h: usize) -> Result<BlockGrid> {
    let (w, h) = img.dims();
    if block_w == 0 || block_h == 0 || block_w > w || block_h > h {
        return Err(Error::EmptyGrid { w, h, bw: block_w, bh: block_h });
    }
    let (cols, rows) = (w / block_w, h / block_h);
    let mut blocks = Vec::with_capacity(cols * rows);
    for by in 0..rows {
        for bx in 0..cols {
            blocks.push(img.crop(bx * block_w, by * block_h, block_w, block_h)?);
        }
    }
    Ok(BlockGrid { block_w, block_h, cols, rows, blocks, canvas: img.clone() })
}

pub fn merge_blocks(grid: &BlockGrid) -> Result<Image> {
    if grid.blocks.len() != grid.cols * grid.rows {
        return Err(Error::Dimension(format!("{}x{} grid has {} blocks", grid.cols, grid.rows, grid.blocks.len())));
    }
    let mut out = grid.canvas.clone();
    for (i, tile) in grid.blocks.iter().enumerate() {
        if tile.dims() != (grid.block_w, grid.block_h) {
            return Err(Error::Dimension(format!(
                "block {i} is {}x{}, grid expects {}x{}",
                tile.width(),
                tile.height(),
                grid.block_w,
                grid.block_h
            )));
        }
        out.paste(tile, (i % grid.cols) * grid.block_w, (i / grid.cols) * grid.block_h)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn noise(w: usize, h: usize, c: usize, seed: u64) -> Image {
        let data = (0..w * h * c)
            .map(|i| ((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ seed).rotate_left(17) as u8)
            .collect();
        Image::new(w, h, c, data).unwrap()
    }

    #[test]
    fn block_counts() {
        assert_eq!(split_blocks(&noise(384, 512, 3, 1), 16, 16).unwrap().len(), 768);
        assert_eq!(split_blocks(&noise(1152, 512, 1, 1), 8, 8).unwrap().len(), 9216);
        let one = noise(16, 16, 1, 2);
        let grid = split_blocks(&one, 16, 16).unwrap();
        assert_eq!(grid.len(), 1);
        assert_eq!(grid.blocks[0], one);
    }

    #[test]
    fn oversized_block_is_an_error() {
        assert!(matches!(split_blocks(&noise(15, 15, 1, 0), 16, 16), Err(Error::EmptyGrid { .. })));
        assert!(split_blocks(&noise(15, 15, 1, 0), 0, 4).is_err());
    }

    #[test]
    fn margins_survive_merge() {
        let img = noise(37, 21, 3, 5);
        let grid = split_blocks(&img, 8, 8).unwrap();
        assert_eq!((grid.cols, grid.rows), (4, 2));
        let blank: Vec<Image> = grid.blocks.iter().map(|_| Image::filled(8, 8, 3, 0).unwrap()).collect();
        let merged = merge_blocks(&grid.with_blocks(blank).unwrap()).unwrap();
        // margin column 32..37 and row 16..21 untouched, tiles zeroed
        assert_eq!(merged.get(36, 20, 2), img.get(36, 20, 2));
        assert_eq!(merged.get(33, 3, 0), img.get(33, 3, 0));
        assert_eq!(merged.get(31, 15, 1), 0);
    }

    proptest! {
        #[test]
        fn split_merge_inverse(w in 1usize..40, h in 1usize..40, bw in 1usize..12, bh in 1usize..12,
                               three in any::<bool>(), seed in any::<u64>()) {
            prop_assume!(bw <= w && bh <= h);
            let img = noise(w, h, if three { 3 } else { 1 }, seed);
            let grid = split_blocks(&img, bw, bh).unwrap();
            prop_assert_eq!(grid.len(), (w / bw) * (h / bh));
            prop_assert_eq!(merge_blocks(&grid).unwrap(), img);
        }
    }
}
