/// JPEG-style zig-zag scan of a `rows x cols` coefficient grid.
///
/// Anti-diagonals are visited in order of increasing `row + col`; odd
/// diagonals run top-right to bottom-left, even ones bottom-left to top-right.
/// Returns `(row, col)` pairs, starting at `(0, 0)`.
pub fn zigzag_indices(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(rows * cols);
    if rows == 0 || cols == 0 {
        return out;
    }
    for d in 0..rows + cols - 1 {
        let lo = d.saturating_sub(cols - 1);
        let hi = d.min(rows - 1);
        if d % 2 == 1 {
            out.extend((lo..=hi).map(|r| (r, d - r)));
        } else {
            out.extend((lo..=hi).rev().map(|r| (r, d - r)));
        }
    }
    out
}
