//! 3D Morton codes and block ordering of samples.

/// Exclusive bound on each coordinate.
pub const MORTON_LIMIT: u32 = 1 << 21;

#[inline]
fn spread(v: u32) -> u64 {
    let mut x = v as u64 & 0x1f_ffff;
    x = (x | x << 32) & 0x1f00000000ffff;
    x = (x | x << 16) & 0x1f0000ff0000ff;
    x = (x | x << 8) & 0x100f00f00f00f00f;
    x = (x | x << 4) & 0x10c30c30c30c30c3;
    x = (x | x << 2) & 0x1249249249249249;
    x
}

/// Interleaves the bits of `x`, `y`, `z`; `x` takes the lowest bit of each
/// triple. Panics when a coordinate is `>= 2^21`.
#[inline]
pub fn morton3(x: u32, y: u32, z: u32) -> u64 {
    assert!(
        x < MORTON_LIMIT && y < MORTON_LIMIT && z < MORTON_LIMIT,
        "morton coordinate out of range: ({x},{y},{z})"
    );
    spread(x) | spread(y) << 1 | spread(z) << 2
}

/// `(block id, morton code)` for a cell, with blocks of edge `ell` laid out
/// x-fastest over a box of `nblocks` blocks starting at cell `origin`.
#[inline]
pub fn block_key(cell: [i64; 3], origin: [i64; 3], ell: usize, nblocks: [usize; 3]) -> (u64, u64) {
    let mut b = [0usize; 3];
    let mut l = [0u32; 3];
    for a in 0..3 {
        let r = (cell[a] - origin[a]).max(0) as usize;
        b[a] = (r / ell).min(nblocks[a] - 1);
        l[a] = (r - b[a] * ell) as u32;
    }
    let id = (b[2] * nblocks[1] + b[1]) * nblocks[0] + b[0];
    (id as u64, morton3(l[0], l[1], l[2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive(x: u32, y: u32, z: u32) -> u64 {
        let mut out = 0u64;
        for bit in 0..21 {
            out |= ((x as u64 >> bit) & 1) << (3 * bit);
            out |= ((y as u64 >> bit) & 1) << (3 * bit + 1);
            out |= ((z as u64 >> bit) & 1) << (3 * bit + 2);
        }
        out
    }

    #[test]
    fn small_codes() {
        assert_eq!(morton3(0, 0, 0), 0);
        assert_eq!(morton3(1, 1, 1), 7);
        assert_eq!(morton3(1, 0, 0), 1);
        assert_eq!(morton3(0, 1, 0), 2);
        assert_eq!(morton3(3, 5, 7), naive(3, 5, 7));
    }

    #[test]
    #[should_panic]
    fn overflow_panics() {
        morton3(MORTON_LIMIT, 0, 0);
    }

    proptest! {
        #[test]
        fn matches_bit_loop(x in 0u32..MORTON_LIMIT, y in 0u32..MORTON_LIMIT, z in 0u32..MORTON_LIMIT) {
            prop_assert_eq!(morton3(x, y, z), naive(x, y, z));
        }
    }
}
