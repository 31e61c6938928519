//! Sylvester-construction Hadamard matrices.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Largest supported doubling exponent; orders beyond 2^20 are refused.
pub const MAX_SYLVESTER_EXPONENT: u32 = 20;

/// A square ±1 matrix with mutually orthogonal rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HadamardMatrix {
    entries: Array2<i8>,
}

impl HadamardMatrix {
    pub fn order(&self) -> usize {
        self.entries.nrows()
    }

    /// Entry matrix; every value is +1 or -1.
    pub fn entries(&self) -> &Array2<i8> {
        &self.entries
    }

    /// The `i`-th row (0-based).
    pub fn row(&self, i: usize) -> ndarray::ArrayView1<'_, i8> {
        self.entries.row(i)
    }
}

/// Builds the order-2^k Hadamard matrix by Sylvester doubling:
/// H_1 = [+1], H_{2n} = [[H_n, H_n], [H_n, -H_n]].
///
/// The first row and first column are all +1.
pub fn sylvester_hadamard(k: u32) -> Result<HadamardMatrix> {
    if k > MAX_SYLVESTER_EXPONENT {
        return Err(Error::capacity(format!(
            "sylvester_hadamard exponent {k} exceeds the guard of {MAX_SYLVESTER_EXPONENT}"
        )));
    }
    let n = 1usize << k;
    let mut h = Array2::from_elem((n, n), 1i8);
    // Grow the top-left block in place, doubling until it fills the matrix.
    let mut size = 1;
    while size < n {
        for i in 0..size {
            for j in 0..size {
                let v = h[[i, j]];
                h[[i, j + size]] = v;
                h[[i + size, j]] = v;
                h[[i + size, j + size]] = -v;
            }
        }
        size *= 2;
    }
    Ok(HadamardMatrix { entries: h })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_orthogonal_rows(h: &HadamardMatrix) {
        let n = h.order();
        for i in 0..n {
            for j in (i + 1)..n {
                let dot: i64 = (0..n)
                    .map(|c| i64::from(h.entries()[[i, c]]) * i64::from(h.entries()[[j, c]]))
                    .sum();
                assert_eq!(dot, 0, "rows {i} and {j} of order-{n} matrix not orthogonal");
            }
        }
    }

    #[test]
    fn base_case_is_single_plus_one() {
        let h = sylvester_hadamard(0).unwrap();
        assert_eq!(h.order(), 1);
        assert_eq!(h.entries()[[0, 0]], 1);
    }

    #[test]
    fn one_doubling_step() {
        let h = sylvester_hadamard(1).unwrap();
        assert_eq!(h.order(), 2);
        assert_eq!(h.entries().as_slice().unwrap(), &[1, 1, 1, -1]);
    }

    #[test]
    fn order_four_matches_known_rows() {
        let h = sylvester_hadamard(2).unwrap();
        let expected: [[i8; 4]; 4] = [
            [1, 1, 1, 1],
            [1, -1, 1, -1],
            [1, 1, -1, -1],
            [1, -1, -1, 1],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(h.entries()[[i, j]], expected[i][j], "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn first_row_and_column_all_plus_one() {
        for k in 0..=6 {
            let h = sylvester_hadamard(k).unwrap();
            for j in 0..h.order() {
                assert_eq!(h.entries()[[0, j]], 1);
                assert_eq!(h.entries()[[j, 0]], 1);
            }
        }
    }

    #[test]
    fn rows_pairwise_orthogonal_up_to_k10() {
        for k in 0..=10 {
            assert_orthogonal_rows(&sylvester_hadamard(k).unwrap());
        }
    }

    #[test]
    fn exponent_guard() {
        assert!(matches!(
            sylvester_hadamard(MAX_SYLVESTER_EXPONENT + 1),
            Err(Error::Capacity(_))
        ));
    }
}
