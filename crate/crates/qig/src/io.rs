//! Matrix interchange format and helpers for report serialization.
//!
//! Matrices travel as `{"dim": n, "re": [[...]], "im": [[...]]}` with
//! row-major n x n real arrays at full precision.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::{HermitianMatrix, C64};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_herm(h: &HermitianMatrix) -> Self {
        let n = h.dim();
        let re = (0..n)
            .map(|i| (0..n).map(|j| h.entry(i, j).re).collect())
            .collect();
        let im = (0..n)
            .map(|i| (0..n).map(|j| h.entry(i, j).im).collect())
            .collect();
        Self { dim: n, re, im }
    }

    pub fn to_herm(&self) -> Result<HermitianMatrix> {
        let n = self.dim;
        if self.re.len() != n
            || self.im.len() != n
            || self.re.iter().any(|r| r.len() != n)
            || self.im.iter().any(|r| r.len() != n)
        {
            return Err(Error::NotSquare {
                rows: self.re.len(),
                cols: self.re.first().map_or(0, |r| r.len()),
            });
        }
        let mat = DMatrix::from_fn(n, n, |i, j| C64::new(self.re[i][j], self.im[i][j]));
        HermitianMatrix::new(mat)
    }
}

pub fn read_matrix(path: &std::path::Path) -> Result<HermitianMatrix> {
    let text = std::fs::read_to_string(path)?;
    let json: MatrixJson = serde_json::from_str(&text)?;
    json.to_herm()
}

pub fn write_matrix(path: &std::path::Path, h: &HermitianMatrix) -> Result<()> {
    let json = MatrixJson::from_herm(h);
    std::fs::write(path, serde_json::to_string_pretty(&json)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::random_hermitian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn round_trip_preserves_entries() {
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let h = random_hermitian(4, &mut rng).unwrap();
        let json = MatrixJson::from_herm(&h);
        let text = serde_json::to_string(&json).unwrap();
        let back: MatrixJson = serde_json::from_str(&text).unwrap();
        let h2 = back.to_herm().unwrap();
        assert_eq!(h, h2);
    }

    #[test]
    fn rejects_ragged_arrays() {
        let json = MatrixJson {
            dim: 2,
            re: vec![vec![1.0, 0.0], vec![0.0]],
            im: vec![vec![0.0; 2]; 2],
        };
        assert!(json.to_herm().is_err());
    }
}
