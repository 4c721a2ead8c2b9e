//! Row-major product grids `supp μ_1 × … × supp μ_n`.
//!
//! The last coordinate varies fastest, so for a prefix of length `i` the
//! section over coordinate `i + 1` is a contiguous block of the level-`i + 1`
//! tensor: entries `p·m_{i+1} .. (p+1)·m_{i+1}` for prefix index `p`.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductGrid {
    shape: Vec<usize>,
}

impl ProductGrid {
    pub fn new(shape: Vec<usize>) -> Self {
        Self { shape }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    /// Number of prefixes of length `level` (`level = ndim` gives all paths).
    pub fn level_len(&self, level: usize) -> usize {
        self.shape[..level].iter().product()
    }

    pub fn num_paths(&self) -> usize {
        self.level_len(self.ndim())
    }

    /// Writes the multi-index of `flat` at the given level into `out`.
    pub fn unravel_into(&self, level: usize, mut flat: usize, out: &mut [usize]) {
        for d in (0..level).rev() {
            out[d] = flat % self.shape[d];
            flat /= self.shape[d];
        }
    }

    pub fn unravel(&self, level: usize, flat: usize) -> Vec<usize> {
        let mut out = vec![0; level];
        self.unravel_into(level, flat, &mut out);
        out
    }

    pub fn ravel(&self, index: &[usize]) -> usize {
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &m)| acc * m + i)
    }

    /// Iterates over all multi-indices of the given level in row-major order.
    pub fn indices(&self, level: usize) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.level_len(level)).map(move |flat| self.unravel(level, flat))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ravel_round_trip() {
        let g = ProductGrid::new(vec![2, 3, 4]);
        assert_eq!(g.num_paths(), 24);
        assert_eq!(g.level_len(1), 2);
        assert_eq!(g.level_len(0), 1);
        for flat in 0..24 {
            assert_eq!(g.ravel(&g.unravel(3, flat)), flat);
        }
        assert_eq!(g.unravel(3, 5), vec![0, 1, 1]);
        assert_eq!(g.indices(2).nth(4), Some(vec![1, 1]));
    }
}
