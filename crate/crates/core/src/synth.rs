//! Deterministic sampling from linear-Gaussian structural causal models.
//!
//! Each node draws its noise from its own ChaCha8 stream, selected by a hash
//! of the node name, so a dataset depends only on the model, `n` and the seed
//! and not on the order in which nodes were declared.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::Dag;

/// `V = intercept + sum_{P in Pa(V)} coefficient(P -> V) * P + N(0, noise_variance)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianScm {
    dag: Dag,
    coefficients: BTreeMap<(String, String), f64>,
    noise_variances: BTreeMap<String, f64>,
    intercepts: BTreeMap<String, f64>,
}

impl LinearGaussianScm {
    /// Edges without a coefficient get weight 1; nodes without an intercept get 0.
    pub fn new(
        dag: Dag,
        coefficients: BTreeMap<(String, String), f64>,
        noise_variances: BTreeMap<String, f64>,
        intercepts: BTreeMap<String, f64>,
    ) -> Result<Self> {
        for ((p, c), w) in &coefficients {
            if !dag.parents(c)?.contains(&p.as_str()) {
                return Err(Error::InvalidConfig(format!("coefficient for `{p} -> {c}`, which is not an edge")));
            }
            if !w.is_finite() {
                return Err(Error::InvalidConfig(format!("coefficient for `{p} -> {c}` is not finite")));
            }
        }
        for node in dag.nodes() {
            match noise_variances.get(node) {
                Some(v) if v.is_finite() && *v > 0.0 => {}
                Some(v) => return Err(Error::InvalidConfig(format!("noise variance of `{node}` must be positive, got {v}"))),
                None => return Err(Error::InvalidConfig(format!("no noise variance for `{node}`"))),
            }
        }
        for name in noise_variances.keys().chain(intercepts.keys()) {
            if !dag.contains(name) {
                return Err(Error::UnknownNode(name.clone()));
            }
        }
        if let Some((n, _)) = intercepts.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("intercept of `{n}` is not finite")));
        }
        Ok(LinearGaussianScm {
            dag,
            coefficients,
            noise_variances,
            intercepts,
        })
    }

    /// `X ~ N(0, 1)`, `Y = a X + N(0, 1)`.
    pub fn m1(a: f64) -> Result<Self> {
        Self::new(
            Dag::new(["X", "Y"], [("X", "Y")])?,
            [(("X".to_string(), "Y".to_string()), a)].into(),
            [("X".to_string(), 1.0), ("Y".to_string(), 1.0)].into(),
            BTreeMap::new(),
        )
    }

    /// The reversal of [`LinearGaussianScm::m1`] with the same joint law:
    /// `Y ~ N(0, 1 + a^2)`, `X = a / (1 + a^2) Y + N(0, 1 / (1 + a^2))`.
    pub fn m2(a: f64) -> Result<Self> {
        let t = 1.0 + a * a;
        Self::new(
            Dag::new(["X", "Y"], [("Y", "X")])?,
            [(("Y".to_string(), "X".to_string()), a / t)].into(),
            [("X".to_string(), 1.0 / t), ("Y".to_string(), t)].into(),
            BTreeMap::new(),
        )
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn coefficient(&self, parent: &str, child: &str) -> f64 {
        self.coefficients
            .get(&(parent.to_string(), child.to_string()))
            .copied()
            .unwrap_or(1.0)
    }

    pub fn noise_variance(&self, node: &str) -> Result<f64> {
        self.noise_variances
            .get(node)
            .copied()
            .ok_or_else(|| Error::UnknownNode(node.into()))
    }

    pub fn intercept(&self, node: &str) -> f64 {
        self.intercepts.get(node).copied().unwrap_or(0.0)
    }
}

fn stream_id(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h: u64, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Ancestral sampling of `n` draws. Columns follow the DAG's node order.
pub fn sample_scm(m: &LinearGaussianScm, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidConfig("sample size must be positive".into()));
    }
    let mut cols: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for node in m.dag.topological_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id(node));
        let sd = libm::sqrt(m.noise_variance(node)?);
        let mut col: Vec<f64> = (0..n)
            .map(|_| m.intercept(node) + sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        for p in m.dag.parents(node)? {
            let w = m.coefficient(p, node);
            for (v, pv) in col.iter_mut().zip(&cols[p]) {
                *v += w * pv;
            }
        }
        cols.insert(node, col);
    }
    let names: Vec<String> = m.dag.nodes().to_vec();
    let columns = names.iter().map(|k| cols.remove(k.as_str()).unwrap_or_default()).collect();
    Dataset::new("synth", names, columns)
}

pub fn sample_m1(a: f64, n: usize, seed: u64) -> Result<Dataset> {
    sample_scm(&LinearGaussianScm::m1(a)?, n, seed)
}

pub fn sample_m2(a: f64, n: usize, seed: u64) -> Result<Dataset> {
    sample_scm(&LinearGaussianScm::m2(a)?, n, seed)
}
