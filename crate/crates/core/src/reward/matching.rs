//! Maximum-weight bipartite matching over a dense similarity matrix.

/// Dense row-major matrix of pairwise similarities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SimilarityMatrix { rows, cols, values: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged similarity matrix");
        SimilarityMatrix { rows: rows.len(), cols, values: rows.concat() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        if self.cols == 0 {
            return vec![Vec::new(); self.rows];
        }
        self.values.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }
}

/// One matched (row, column) pair and its similarity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair {
    pub row: usize,
    pub col: usize,
    pub similarity: f64,
}

/// A partial injection between rows and columns. Zero-similarity pairs are
/// left out; they do not change the weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub pairs: Vec<MatchedPair>,
    pub weight: f64,
}

/// Maximum-weight matching via the O(n³) Hungarian method on the zero-padded
/// square matrix.
pub fn optimal_matching(s: &SimilarityMatrix) -> Matching {
    let n = s.rows.max(s.cols);
    if n == 0 {
        return Matching { pairs: Vec::new(), weight: 0.0 };
    }
    let cost = |i: usize, j: usize| -> f64 {
        if i < s.rows && j < s.cols {
            -s.get(i, j)
        } else {
            0.0
        }
    };

    // Potentials and column assignment use 1-based indices; index 0 is the
    // virtual column the augmenting path starts from.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs: Vec<MatchedPair> = (1..=n)
        .filter(|&j| owner[j] != 0)
        .map(|j| (owner[j] - 1, j - 1))
        .filter(|&(row, col)| row < s.rows && col < s.cols && s.get(row, col) > 0.0)
        .map(|(row, col)| MatchedPair { row, col, similarity: s.get(row, col) })
        .collect();
    pairs.sort_by_key(|p| p.row);
    let weight = pairs.iter().map(|p| p.similarity).sum();
    Matching { pairs, weight }
}
