//! Serialisation helpers shared by the JSON artifact formats.

use serde::{Deserialize, Serialize};

use crate::error::{FermError, Result};
use crate::linalg::{c, CMat};

/// Serialises a complex number as `[re, im]`.
pub mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

/// Matrix stored as separate real and imaginary row arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMat) -> Self {
        let rows = |f: fn(&num_complex::Complex64) -> f64| {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
        };
        Self { re: rows(|z| z.re), im: rows(|z| z.im) }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        let r = self.re.len();
        let cols = self.re.first().map_or(0, Vec::len);
        let rect = |rows: &Vec<Vec<f64>>| rows.len() == r && rows.iter().all(|x| x.len() == cols);
        if !rect(&self.re) || !rect(&self.im) {
            return Err(FermError::Json("matrix rows are ragged or re/im shapes differ".into()));
        }
        Ok(CMat::from_fn(r, cols, |i, j| c(self.re[i][j], self.im[i][j])))
    }
}

/// `{"n": int, "re": [[...]], "im": [[...]]}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrixJson {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl DensityMatrixJson {
    pub fn from_matrix(n: usize, m: &CMat) -> Self {
        let mj = MatrixJson::from_matrix(m);
        Self { n, re: mj.re, im: mj.im }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        let m = MatrixJson { re: self.re.clone(), im: self.im.clone() }.to_matrix()?;
        crate::linalg::ensure_square(&m, 1usize << self.n)?;
        Ok(m)
    }
}
