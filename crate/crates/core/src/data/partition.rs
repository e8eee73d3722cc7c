use std::ops::Range;

use crate::error::{Error, Result};
use crate::sparse::SupportSet;

/// Consecutive coordinate blocks of a fixed width covering `0..d`; the last
/// block is clipped at `d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    width: usize,
    dim: usize,
    blocks: Vec<Range<usize>>,
}

impl BlockPartition {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of blocks, `ceil(d / width)`.
    pub fn count(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &Range<usize> {
        &self.blocks[i]
    }

    pub fn block_support(&self, i: usize) -> SupportSet {
        let r = &self.blocks[i];
        SupportSet::range(r.start, r.end)
    }

    /// Index of the block containing coordinate `j`.
    pub fn block_of(&self, j: usize) -> usize {
        j / self.width
    }
}

pub fn make_block_partition(d: usize, width: usize) -> Result<BlockPartition> {
    if width == 0 || width > d {
        return Err(Error::InvalidBlockWidth { width, dim: d });
    }
    let blocks = (0..d.div_ceil(width))
        .map(|i| i * width..((i + 1) * width).min(d))
        .collect();
    Ok(BlockPartition {
        width,
        dim: d,
        blocks,
    })
}
