//! Column-oriented sample container joined to graphs by variable name.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// `d` named real-valued columns of `N` observations from one environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    id: String,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(id: impl Into<String>, names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidData("dataset has no variables".into()));
        }
        if names.len() != columns.len() {
            return Err(Error::InvalidData(format!(
                "{} names but {} columns",
                names.len(),
                columns.len()
            )));
        }
        for (k, name) in names.iter().enumerate() {
            if names[..k].contains(name) {
                return Err(Error::InvalidData(format!("duplicate variable name `{name}`")));
            }
        }
        let n = columns[0].len();
        if n == 0 {
            return Err(Error::InvalidData("dataset has no observations".into()));
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::InvalidData(format!(
                    "column `{name}` has {} values, expected {n}",
                    col.len()
                )));
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!(
                    "non-finite value in column `{name}` at row {row}"
                )));
            }
        }
        Ok(Dataset {
            id: id.into(),
            names,
            columns,
        })
    }

    /// Builds a dataset from `(name, column)` pairs.
    pub fn from_columns<S: ToString>(
        id: impl Into<String>,
        cols: impl IntoIterator<Item = (S, Vec<f64>)>,
    ) -> Result<Self> {
        let (names, columns) = cols
            .into_iter()
            .map(|(n, c)| (n.to_string(), c))
            .unzip();
        Dataset::new(id, names, columns)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn n_samples(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_variables(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn has_variable(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|k| self.columns[k].as_slice())
            .ok_or_else(|| Error::UnknownVariable(name.into()))
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.columns.iter().map(Vec::as_slice))
    }

    pub fn mean(&self, name: &str) -> Result<f64> {
        let col = self.column(name)?;
        Ok(col.iter().sum::<f64>() / col.len() as f64)
    }

    /// Empirical quantile with linear interpolation between order statistics
    /// (position `q * (N - 1)` in the sorted column).
    pub fn quantile(&self, name: &str, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidConfig(format!("quantile level {q} outside [0, 1]")));
        }
        let mut sorted = self.column(name)?.to_vec();
        sorted.sort_by(f64::total_cmp);
        let pos = q * (sorted.len() - 1) as f64;
        let lo = libm::floor(pos) as usize;
        let hi = (lo + 1).min(sorted.len() - 1);
        let frac = pos - lo as f64;
        Ok(sorted[lo] + frac * (sorted[hi] - sorted[lo]))
    }

    /// Content hash of the named columns, used to key cached Gram matrices and
    /// factorizations independently of the dataset id.
    pub(crate) fn fingerprint(&self, names: &[&str]) -> Result<u64> {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |b: u8| {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        };
        for name in names {
            for b in name.bytes() {
                eat(b);
            }
            eat(0xff);
            for v in self.column(name)? {
                for b in v.to_bits().to_le_bytes() {
                    eat(b);
                }
            }
        }
        Ok(h)
    }
}
