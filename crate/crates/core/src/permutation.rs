//! Agent renumbering.
//!
//! A [`Permutation`] stores where each agent goes: `forward[i]` is the new
//! index of agent `i`. Applied to a square matrix it realizes `P Z Pᵀ`,
//! i.e. `out[(forward[i], forward[j])] = z[(i, j)]`. The permutation matrix
//! has `P[(forward[i], i)] = 1`.

use nalgebra::{DMatrix, Scalar};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<usize>,
}

impl Permutation {
    pub fn new(forward: Vec<usize>) -> Result<Self> {
        let n = forward.len();
        let mut seen = vec![false; n];
        for &t in &forward {
            if t >= n {
                return Err(Error::InvalidPermutation(format!(
                    "target {t} out of range for length {n}"
                )));
            }
            if std::mem::replace(&mut seen[t], true) {
                return Err(Error::InvalidPermutation(format!("target {t} repeated")));
            }
        }
        Ok(Self { forward })
    }

    /// Builds a permutation from 1-based targets, the numbering used in the
    /// CSV formats.
    pub fn from_one_based(targets: &[usize]) -> Result<Self> {
        let forward = targets
            .iter()
            .map(|&t| {
                t.checked_sub(1)
                    .ok_or_else(|| Error::InvalidPermutation("1-based index 0".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(forward)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            forward: (0..n).collect(),
        }
    }

    /// Exchanges agents `a` and `b`.
    pub fn swap(n: usize, a: usize, b: usize) -> Result<Self> {
        if a >= n || b >= n {
            return Err(Error::IndexOutOfRange {
                index: a.max(b),
                len: n,
            });
        }
        let mut forward: Vec<usize> = (0..n).collect();
        forward.swap(a, b);
        Ok(Self { forward })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut forward: Vec<usize> = (0..n).collect();
        forward.shuffle(rng);
        Self { forward }
    }

    /// Reads a 0/1 permutation matrix `P`.
    pub fn from_matrix(p: &DMatrix<f64>) -> Result<Self> {
        if !p.is_square() {
            return Err(Error::InvalidPermutation("matrix is not square".into()));
        }
        let n = p.nrows();
        let mut forward = vec![usize::MAX; n];
        for col in 0..n {
            let mut hits = (0..n).filter(|&row| p[(row, col)] == 1.0);
            let row = hits
                .next()
                .ok_or_else(|| Error::InvalidPermutation(format!("column {col} has no unit entry")))?;
            if hits.next().is_some() {
                return Err(Error::InvalidPermutation(format!(
                    "column {col} has several unit entries"
                )));
            }
            forward[col] = row;
        }
        if p.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidPermutation("entries must be 0 or 1".into()));
        }
        Self::new(forward)
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut p = DMatrix::zeros(n, n);
        for (i, &t) in self.forward.iter().enumerate() {
            p[(t, i)] = 1.0;
        }
        p
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// New index of agent `i`.
    pub fn target(&self, i: usize) -> usize {
        self.forward[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> Self {
        let mut back = vec![0; self.len()];
        for (i, &t) in self.forward.iter().enumerate() {
            back[t] = i;
        }
        Self { forward: back }
    }

    /// `P Z Pᵀ`.
    pub fn apply<T: Scalar + Copy>(&self, z: &DMatrix<T>) -> Result<DMatrix<T>> {
        let n = self.len();
        if z.nrows() != n || z.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: format!("{n}x{n}"),
                actual: format!("{}x{}", z.nrows(), z.ncols()),
            });
        }
        let inv = self.inverse();
        Ok(DMatrix::from_fn(n, n, |r, c| z[(inv.forward[r], inv.forward[c])]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    /// The 4x4 renumbering used to illustrate permutation equivariance.
    fn example_matrix() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            4,
            4,
            &[
                0., 0., 0., 1., //
                0., 1., 0., 0., //
                1., 0., 0., 0., //
                0., 0., 1., 0.,
            ],
        )
    }

    #[test]
    fn matrix_round_trip() {
        let p = Permutation::from_matrix(&example_matrix()).unwrap();
        assert_eq!(p.as_slice(), &[2, 1, 3, 0]);
        assert_eq!(p.to_matrix(), example_matrix());
    }

    #[test]
    fn apply_matches_explicit_product() {
        let p = Permutation::from_matrix(&example_matrix()).unwrap();
        let z = DMatrix::from_fn(4, 4, |r, c| (10 * r + c) as f64);
        let pm = p.to_matrix();
        let explicit = &pm * &z * pm.transpose();
        assert_eq!(p.apply(&z).unwrap(), explicit);
    }

    #[test]
    fn inverse_undoes() {
        let mut rng = rng_from_seed(3);
        let p = Permutation::random(9, &mut rng);
        let z = DMatrix::from_fn(9, 9, |r, c| (r * 9 + c) as f64);
        let back = p.inverse().apply(&p.apply(&z).unwrap()).unwrap();
        assert_eq!(back, z);
    }

    #[test]
    fn rejects_invalid() {
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::new(vec![0, 3, 1]).is_err());
        assert!(Permutation::from_one_based(&[0, 1]).is_err());
        let bad = DMatrix::from_row_slice(2, 2, &[1., 1., 0., 0.]);
        assert!(Permutation::from_matrix(&bad).is_err());
    }
}
