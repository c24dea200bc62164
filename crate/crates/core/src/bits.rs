/// Dense square bit matrix, row-major, one bit per entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    n: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn new(n: usize) -> Self {
        let words_per_row = n.div_ceil(64);
        Self {
            n,
            words_per_row,
            words: vec![0; words_per_row * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn locate(&self, i: usize, j: usize) -> (usize, u64) {
        debug_assert!(i < self.n && j < self.n);
        (i * self.words_per_row + j / 64, 1u64 << (j % 64))
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        let (w, mask) = self.locate(i, j);
        self.words[w] & mask != 0
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        let (w, mask) = self.locate(i, j);
        if value {
            self.words[w] |= mask;
        } else {
            self.words[w] &= !mask;
        }
    }

    /// Number of set bits in row `i`.
    pub fn row_count(&self, i: usize) -> usize {
        let start = i * self.words_per_row;
        self.words[start..start + self.words_per_row]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    /// Whether rows `i` and `j` share at least one set column.
    pub fn rows_intersect(&self, i: usize, j: usize) -> bool {
        let a = &self.words[i * self.words_per_row..(i + 1) * self.words_per_row];
        let b = &self.words[j * self.words_per_row..(j + 1) * self.words_per_row];
        a.iter().zip(b).any(|(x, y)| x & y != 0)
    }
}
