use crate::error::{Error, Result};

/// Binary `n_x × n_y` cross-modal supervision: entry `(i, j)` is 1 when
/// image `i` and text `j` are similar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<bool>,
}

impl SimilarityMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![false; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self {
            rows,
            cols,
            entries,
        }
    }

    /// Row-major 0/1 values; anything else is rejected.
    pub fn from_binary(rows: usize, cols: usize, values: &[u8]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::invalid(format!(
                "similarity data has {} entries, expected {rows}x{cols}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|&&v| v > 1) {
            return Err(Error::invalid(format!("similarity entry {v} is not 0 or 1")));
        }
        Ok(Self {
            rows,
            cols,
            entries: values.iter().map(|&v| v == 1).collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, similar: bool) {
        self.entries[i * self.cols + j] = similar;
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn count_similar(&self) -> usize {
        self.entries.iter().filter(|&&s| s).count()
    }

    /// Sub-matrix on the given rows and columns.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j]))
    }
}

/// `S_ij = 1` iff the label sets `a[i]` and `b[j]` intersect.
pub fn build_similarity<L: AsRef<[u32]>>(a: &[L], b: &[L]) -> SimilarityMatrix {
    let sorted = |sets: &[L]| -> Vec<Vec<u32>> {
        sets.iter()
            .map(|s| {
                let mut v = s.as_ref().to_vec();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect()
    };
    let (a, b) = (sorted(a), sorted(b));
    SimilarityMatrix::from_fn(a.len(), b.len(), |i, j| sorted_intersect(&a[i], &b[j]))
}

fn sorted_intersect(a: &[u32], b: &[u32]) -> bool {
    let (mut p, mut q) = (0, 0);
    while p < a.len() && q < b.len() {
        match a[p].cmp(&b[q]) {
            std::cmp::Ordering::Less => p += 1,
            std::cmp::Ordering::Greater => q += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}
