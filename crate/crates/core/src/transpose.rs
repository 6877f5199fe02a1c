//! In-place recursive transpose of square power-of-two matrices, with traffic
//! accounting that mirrors a three-level in-memory transpose-unit hierarchy.
//!
//! The matrix is divided into quadrants [[A, B], [C, D]]; B and C are
//! physically exchanged, then each quadrant is transposed recursively down to
//! the 2x2 base case, which is the flat index permutation j = (2i mod 3) with
//! i = 3 fixed. Every element move is charged to the cheapest level that can
//! perform it under a row-block bank placement: an E x E matrix is striped so
//! each bank holds E^2/bank_count contiguous elements, and each bank splits
//! into four sub-array regions.

use crate::Error;

/// Flat row-major view of an E x E matrix whose elements are
/// `element_words` machine words each. element[r][c] starts at word
/// (r*E + c) * element_words.
pub struct MatrixView<'a> {
    data: &'a mut [u64],
    e: usize,
    element_words: usize,
}

impl<'a> MatrixView<'a> {
    pub fn new(data: &'a mut [u64], e: usize, element_words: usize) -> Self {
        Self::try_new(data, e, element_words).expect("invalid matrix view")
    }

    pub fn try_new(data: &'a mut [u64], e: usize, element_words: usize) -> Result<Self, Error> {
        if !e.is_power_of_two() || e < 2 {
            return Err(Error::InvalidParameter(format!("matrix side {e} must be a power of two >= 2")));
        }
        if element_words == 0 || data.len() != e * e * element_words {
            return Err(Error::InvalidParameter(format!(
                "backing length {} does not hold {e}x{e} elements of {element_words} words",
                data.len()
            )));
        }
        Ok(MatrixView { data, e, element_words })
    }

    pub fn side(&self) -> usize {
        self.e
    }

    pub fn element_words(&self) -> usize {
        self.element_words
    }

    pub fn element(&self, r: usize, c: usize) -> &[u64] {
        let w = self.element_words;
        let base = (r * self.e + c) * w;
        &self.data[base..base + w]
    }

    pub fn element_mut(&mut self, r: usize, c: usize) -> &mut [u64] {
        let w = self.element_words;
        let base = (r * self.e + c) * w;
        &mut self.data[base..base + w]
    }

    fn swap_elements(&mut self, ar: usize, ac: usize, br: usize, bc: usize) {
        let w = self.element_words;
        let a = (ar * self.e + ac) * w;
        let b = (br * self.e + bc) * w;
        for k in 0..w {
            self.data.swap(a + k, b + k);
        }
    }
}

/// Three-level transpose-unit traffic counters. Level 1 moves stay inside one
/// sub-array, level 2 crosses sub-arrays within a bank, level 3 crosses
/// banks. Counters only ever increase; one counted move is one element
/// changing address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TuHierarchy {
    bank_count: usize,
    pub sub_array_moves: u64,
    pub bank_moves: u64,
    pub inter_bank_moves: u64,
}

pub const SUBARRAYS_PER_BANK: usize = 4;

impl TuHierarchy {
    pub fn new(bank_count: usize) -> Self {
        assert!(
            bank_count.is_power_of_two(),
            "bank count {bank_count} must be a power of two"
        );
        TuHierarchy { bank_count, sub_array_moves: 0, bank_moves: 0, inter_bank_moves: 0 }
    }

    /// Hierarchy sized for a standalone E x E transpose: at most 64 banks,
    /// never fewer elements per bank than sub-arrays.
    pub fn for_matrix(e: usize) -> Self {
        Self::new((e * e / SUBARRAYS_PER_BANK).clamp(1, 64))
    }

    pub fn bank_count(&self) -> usize {
        self.bank_count
    }

    pub fn total_moves(&self) -> u64 {
        self.sub_array_moves + self.bank_moves + self.inter_bank_moves
    }

    /// Charges both halves of a pairwise element swap at flat element
    /// addresses a and b.
    fn charge_swap(&mut self, a: usize, b: usize, per_bank: usize, per_sub: usize) {
        if a / per_bank != b / per_bank {
            self.inter_bank_moves += 2;
        } else if a / per_sub != b / per_sub {
            self.bank_moves += 2;
        } else {
            self.sub_array_moves += 2;
        }
    }
}

/// Transposes the view in place, charging every element move to `tu`.
pub fn transpose_recursive(m: &mut MatrixView, tu: &mut TuHierarchy) {
    let e = m.e;
    let per_bank = (e * e / tu.bank_count).max(1);
    let per_sub = (per_bank / SUBARRAYS_PER_BANK).max(1);
    transpose_block(m, 0, 0, e, tu, per_bank, per_sub);
}

fn transpose_block(
    m: &mut MatrixView,
    row0: usize,
    col0: usize,
    side: usize,
    tu: &mut TuHierarchy,
    per_bank: usize,
    per_sub: usize,
) {
    let e = m.e;
    if side == 2 {
        // Base case permutation: j = (2i mod 3), i = 3 fixed. Only flat
        // indices 1 and 2 move; that is the off-diagonal swap.
        for i in 0..4usize {
            let j = if i == 3 { 3 } else { (2 * i) % 3 };
            if j <= i {
                continue;
            }
            let (ar, ac) = (row0 + i / 2, col0 + i % 2);
            let (br, bc) = (row0 + j / 2, col0 + j % 2);
            tu.charge_swap(ar * e + ac, br * e + bc, per_bank, per_sub);
            m.swap_elements(ar, ac, br, bc);
        }
        return;
    }
    let h = side / 2;
    // Physically exchange quadrants B and C, then transpose all four in place.
    for i in 0..h {
        for j in 0..h {
            let (ar, ac) = (row0 + i, col0 + h + j);
            let (br, bc) = (row0 + h + i, col0 + j);
            tu.charge_swap(ar * e + ac, br * e + bc, per_bank, per_sub);
            m.swap_elements(ar, ac, br, bc);
        }
    }
    transpose_block(m, row0, col0, h, tu, per_bank, per_sub);
    transpose_block(m, row0, col0 + h, h, tu, per_bank, per_sub);
    transpose_block(m, row0 + h, col0, h, tu, per_bank, per_sub);
    transpose_block(m, row0 + h, col0 + h, h, tu, per_bank, per_sub);
}

/// Direct double-loop transpose, the oracle for the recursive path.
pub fn transpose_naive(m: &mut MatrixView) {
    for r in 0..m.e {
        for c in 0..r {
            m.swap_elements(r, c, c, r);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn fill_distinct(e: usize, w: usize) -> Vec<u64> {
        (0..(e * e * w) as u64).map(|i| i * 2 + 1).collect()
    }

    #[test]
    fn base_case_follows_index_rule() {
        let mut data = vec![10u64, 11, 12, 13];
        let mut m = MatrixView::new(&mut data, 2, 1);
        let mut tu = TuHierarchy::for_matrix(2);
        transpose_recursive(&mut m, &mut tu);
        // i=0 -> 0, i=1 -> 2, i=2 -> 1, i=3 -> 3.
        assert_eq!(data, vec![10, 12, 11, 13]);
    }

    #[test]
    fn matches_naive_exhaustive_sizes() {
        for e in [2usize, 4, 8, 16] {
            for w in [1usize, 3] {
                let mut a = fill_distinct(e, w);
                let mut b = a.clone();
                let mut tu = TuHierarchy::for_matrix(e);
                transpose_recursive(&mut MatrixView::new(&mut a, e, w), &mut tu);
                transpose_naive(&mut MatrixView::new(&mut b, e, w));
                assert_eq!(a, b, "mismatch at e={e} w={w}");
            }
        }
    }

    #[test]
    fn involution_and_oracle_on_random_256() {
        let mut rng = StdRng::seed_from_u64(7);
        let e = 256;
        let mut a: Vec<u64> = (0..e * e).map(|_| rng.gen()).collect();
        let original = a.clone();
        let mut b = a.clone();
        let mut tu = TuHierarchy::for_matrix(e);
        transpose_recursive(&mut MatrixView::new(&mut a, e, 1), &mut tu);
        transpose_naive(&mut MatrixView::new(&mut b, e, 1));
        assert_eq!(a, b);
        transpose_recursive(&mut MatrixView::new(&mut a, e, 1), &mut tu);
        assert_eq!(a, original);
    }

    #[test]
    fn traffic_conservation() {
        // Exchanges move E^2/2 elements per recursion depth: total
        // (E^2/2) * log2(E).
        for e in [2usize, 4, 8, 16, 64] {
            let mut data = fill_distinct(e, 1);
            let mut tu = TuHierarchy::for_matrix(e);
            transpose_recursive(&mut MatrixView::new(&mut data, e, 1), &mut tu);
            let expected = (e * e / 2) as u64 * e.trailing_zeros() as u64;
            assert_eq!(tu.total_moves(), expected, "move count at e={e}");
        }
    }

    #[test]
    fn counters_accumulate_across_calls() {
        let mut data = fill_distinct(8, 1);
        let mut tu = TuHierarchy::for_matrix(8);
        transpose_recursive(&mut MatrixView::new(&mut data, 8, 1), &mut tu);
        let after_one = tu.total_moves();
        transpose_recursive(&mut MatrixView::new(&mut data, 8, 1), &mut tu);
        assert_eq!(tu.total_moves(), 2 * after_one);
    }

    #[test]
    fn level_split_tracks_placement() {
        // 4 banks over a 64x64 matrix: each bank spans 16 rows and each
        // sub-array 4, so top-level quadrant exchanges cross banks while the
        // deepest swaps stay inside one sub-array.
        let mut data = fill_distinct(64, 1);
        let mut tu = TuHierarchy::new(4);
        transpose_recursive(&mut MatrixView::new(&mut data, 64, 1), &mut tu);
        assert!(tu.inter_bank_moves > 0);
        assert!(tu.bank_moves > 0);
        assert!(tu.sub_array_moves > 0);

        // A single bank never produces inter-bank traffic.
        let mut data = fill_distinct(16, 1);
        let mut tu = TuHierarchy::new(1);
        transpose_recursive(&mut MatrixView::new(&mut data, 16, 1), &mut tu);
        assert_eq!(tu.inter_bank_moves, 0);
        assert!(tu.total_moves() > 0);
    }

    #[test]
    fn view_shape_validation() {
        let mut data = vec![0u64; 9];
        assert!(MatrixView::try_new(&mut data, 3, 1).is_err());
        let mut data = vec![0u64; 7];
        assert!(MatrixView::try_new(&mut data, 2, 2).is_err());
    }
}
