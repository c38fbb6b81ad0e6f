//! MIMD and the SCMD family, the empirical MMD baseline and pairwise
//! environment matrices.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::data::Dataset;
use crate::embedding::{Estimator, EstimatorConfig, WeightVector};
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::kernel::KernelConfig;

/// Quantile levels used by E-SCMD when none are given.
pub const DEFAULT_LEVELS: [f64; 5] = [0.2, 0.35, 0.5, 0.65, 0.8];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterventionOrigin {
    User,
    PerVariableMean,
    Quantile(f64),
}

/// One intervention value per variable for one environment.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionSpec {
    pub values: BTreeMap<String, f64>,
    pub origin: InterventionOrigin,
}

impl InterventionSpec {
    pub fn user<S: ToString>(values: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (name, v) in values {
            let name = name.to_string();
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!("intervention value for `{name}` is not finite")));
            }
            if map.insert(name.clone(), v).is_some() {
                return Err(Error::InvalidConfig(format!("intervention on `{name}` given twice")));
            }
        }
        Ok(InterventionSpec {
            values: map,
            origin: InterventionOrigin::User,
        })
    }

    /// Each variable set to its sample mean.
    pub fn per_variable_mean(data: &Dataset) -> Self {
        InterventionSpec {
            values: data
                .columns()
                .map(|(n, c)| (n.to_string(), c.iter().sum::<f64>() / c.len() as f64))
                .collect(),
            origin: InterventionOrigin::PerVariableMean,
        }
    }

    /// Each variable set to its empirical `level`-quantile.
    pub fn quantile(data: &Dataset, level: f64) -> Result<Self> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidConfig(format!("quantile level {level} outside (0, 1)")));
        }
        let mut values = BTreeMap::new();
        for name in data.names() {
            values.insert(name.clone(), data.quantile(name, level)?);
        }
        Ok(InterventionSpec {
            values,
            origin: InterventionOrigin::Quantile(level),
        })
    }

    pub fn get(&self, name: &str) -> Result<f64> {
        self.values
            .get(name)
            .copied()
            .ok_or_else(|| Error::InvalidConfig(format!("no intervention value for `{name}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DistanceKind {
    Scmd,
    PScmd { target: String },
    EScmd { levels: Vec<f64> },
    Mmd,
}

impl DistanceKind {
    pub fn name(&self) -> &'static str {
        match self {
            DistanceKind::Scmd => "scmd",
            DistanceKind::PScmd { .. } => "pscmd",
            DistanceKind::EScmd { .. } => "escmd",
            DistanceKind::Mmd => "mmd",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceReport {
    pub kind: DistanceKind,
    pub value: f64,
    /// MIMD per ordered `(intervened, target)` pair; empty for MMD.
    pub pair_terms: BTreeMap<(String, String), f64>,
    pub config: EstimatorConfig,
    /// Intervention vectors of the two environments, one entry per level.
    pub interventions: Vec<(InterventionSpec, InterventionSpec)>,
    pub dataset_ids: (String, String),
}

impl DistanceReport {
    fn from_terms(
        kind: DistanceKind,
        pair_terms: BTreeMap<(String, String), f64>,
        config: EstimatorConfig,
        interventions: Vec<(InterventionSpec, InterventionSpec)>,
        ids: (&str, &str),
    ) -> Self {
        DistanceReport {
            kind,
            value: pair_terms.values().sum(),
            pair_terms,
            config,
            interventions,
            dataset_ids: (ids.0.into(), ids.1.into()),
        }
    }
}

/// Which metric fills a pairwise matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairwiseMetric {
    Scmd,
    Mmd,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InterventionPolicy {
    PerVariableMean,
    /// One spec per environment, in environment order.
    User(Vec<InterventionSpec>),
}

/// Symmetric matrix of environment distances with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseMatrix {
    pub ids: Vec<String>,
    /// Row-major `n x n`.
    pub values: Vec<f64>,
    /// Report of each unordered pair `(a, b)`, `a < b`.
    pub reports: BTreeMap<(usize, usize), DistanceReport>,
}

impl PairwiseMatrix {
    /// Assembles the matrix from reports of the pairs listed by [`pair_jobs`].
    pub fn from_reports(ids: Vec<String>, reports: impl IntoIterator<Item = ((usize, usize), DistanceReport)>) -> Result<Self> {
        let n = ids.len();
        let mut values = alloc::vec![0.0; n * n];
        let mut map = BTreeMap::new();
        for ((a, b), r) in reports {
            if a >= b || b >= n {
                return Err(Error::InvalidConfig(format!("pair ({a}, {b}) out of range for {n} environments")));
            }
            values[a * n + b] = r.value;
            values[b * n + a] = r.value;
            map.insert((a, b), r);
        }
        if map.len() != n * (n - 1) / 2 {
            return Err(Error::InvalidConfig("pairwise matrix is missing entries".into()));
        }
        Ok(PairwiseMatrix { ids, values, reports: map })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.ids.len() + b]
    }

    pub fn row(&self, a: usize) -> &[f64] {
        let n = self.ids.len();
        &self.values[a * n..(a + 1) * n]
    }
}

/// Unordered environment pairs `(a, b)`, `a < b`, in row-major order.
pub fn pair_jobs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
}

/// Biased V-statistic MMD between the joint laws of two datasets, with the
/// product Gaussian kernel over all columns (matched by name).
pub fn mmd_vstat(d1: &Dataset, d2: &Dataset, cfg: KernelConfig) -> Result<f64> {
    let mut names: Vec<&str> = d1.names().iter().map(String::as_str).collect();
    names.sort_unstable();
    let mut other: Vec<&str> = d2.names().iter().map(String::as_str).collect();
    other.sort_unstable();
    if names != other {
        return Err(Error::InvalidData(format!(
            "datasets `{}` and `{}` have different variables",
            d1.id(),
            d2.id()
        )));
    }
    let rows = |d: &Dataset| -> Result<Vec<f64>> {
        let cols = names.iter().map(|n| d.column(n)).collect::<Result<Vec<_>>>()?;
        let n = d.n_samples();
        let mut out = Vec::with_capacity(n * cols.len());
        for s in 0..n {
            out.extend(cols.iter().map(|c| c[s]));
        }
        Ok(out)
    };
    let (a, b) = (rows(d1)?, rows(d2)?);
    let dim = names.len();
    let scale = -0.5 / cfg.bandwidth_sq();
    let k = |x: &[f64], y: &[f64]| {
        let sq: f64 = x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum();
        libm::exp(scale * sq)
    };
    let self_sum = |m: &[f64]| {
        let n = m.len() / dim;
        let mut total = n as f64;
        for s in 0..n {
            let x = &m[s * dim..(s + 1) * dim];
            let mut row = 0.0;
            for t in s + 1..n {
                row += k(x, &m[t * dim..(t + 1) * dim]);
            }
            total += 2.0 * row;
        }
        total / (n as f64 * n as f64)
    };
    let (n1, n2) = (d1.n_samples(), d2.n_samples());
    let mut cross = 0.0;
    for s in 0..n1 {
        let x = &a[s * dim..(s + 1) * dim];
        let mut row = 0.0;
        for t in 0..n2 {
            row += k(x, &b[t * dim..(t + 1) * dim]);
        }
        cross += row;
    }
    let sq = self_sum(&a) + self_sum(&b) - 2.0 * cross / (n1 as f64 * n2 as f64);
    Ok(libm::sqrt(sq.max(0.0)))
}

/// One side of a comparison: a graph, its data and its intervention values.
#[derive(Debug, Clone, Copy)]
pub struct Environment<'a> {
    pub graph: &'a Dag,
    pub data: &'a Dataset,
}

impl<'a> Environment<'a> {
    pub fn new(graph: &'a Dag, data: &'a Dataset) -> Self {
        Environment { graph, data }
    }
}

fn weight_order(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .map(|v| v.to_bits())
        .cmp(b.iter().map(|v| v.to_bits()))
}

impl Estimator {
    /// Squared RKHS distance between two weighted embeddings of `var`,
    /// before any clamping. The cross term is always evaluated in one
    /// canonical orientation so the result is bitwise symmetric in its sides.
    pub fn squared_embedding_distance(
        &mut self,
        d1: &Dataset,
        w1: &WeightVector,
        d2: &Dataset,
        w2: &WeightVector,
        var: &str,
    ) -> Result<f64> {
        for (d, w) in [(d1, w1), (d2, w2)] {
            if w.len() != d.n_samples() {
                return Err(Error::ShapeMismatch {
                    expected: (d.n_samples(), 1),
                    found: (w.len(), 1),
                });
            }
        }
        let t1 = self.kernel_op(d1, d1, var)?.bilinear(&w1.weights, &w1.weights);
        let t2 = self.kernel_op(d2, d2, var)?.bilinear(&w2.weights, &w2.weights);
        let (f1, f2) = (d1.fingerprint(&[var])?, d2.fingerprint(&[var])?);
        let flip = match f1.cmp(&f2) {
            Ordering::Equal => weight_order(&w1.weights, &w2.weights) == Ordering::Greater,
            o => o == Ordering::Greater,
        };
        let cross = if flip {
            self.kernel_op(d2, d1, var)?.bilinear(&w2.weights, &w1.weights)
        } else {
            self.kernel_op(d1, d2, var)?.bilinear(&w1.weights, &w2.weights)
        };
        Ok((t1 + t2) - 2.0 * cross)
    }

    /// Distance between the embeddings of `V_j` under `do(V_i = v1)` in the
    /// first environment and `do(V_i = v2)` in the second.
    pub fn mimd(&mut self, e1: Environment<'_>, e2: Environment<'_>, i: &str, j: &str, v1: f64, v2: f64) -> Result<f64> {
        let w1 = self.omega(e1.graph, e1.data, i, j, v1)?;
        let w2 = self.omega(e2.graph, e2.data, i, j, v2)?;
        let sq = self.squared_embedding_distance(e1.data, &w1, e2.data, &w2, j)?;
        let tolerance = self.config().clamp_tol * e1.data.n_samples().max(e2.data.n_samples()) as f64;
        if sq < -tolerance {
            return Err(Error::NegativeSquaredDistance {
                intervened: i.into(),
                target: j.into(),
                squared: sq,
                tolerance,
                lambda: self.config().ridge_lambda,
                bandwidth_sq: self.config().kernel.bandwidth_sq(),
            });
        }
        Ok(libm::sqrt(sq.max(0.0)))
    }

    fn variables(e1: Environment<'_>, e2: Environment<'_>) -> Result<Vec<String>> {
        if !e1.graph.same_node_set(e2.graph) {
            return Err(Error::NodeSetMismatch("the two graphs have different nodes".into()));
        }
        let mut names: Vec<String> = e1.graph.nodes().to_vec();
        names.sort_unstable();
        for d in [e1.data, e2.data] {
            for n in &names {
                if !d.has_variable(n) {
                    return Err(Error::UnknownVariable(format!("{n} (missing from dataset `{}`)", d.id())));
                }
            }
        }
        if names.len() < 2 {
            return Err(Error::InvalidGraph("need at least two variables".into()));
        }
        Ok(names)
    }

    fn pair_terms<'n>(
        &mut self,
        e1: Environment<'_>,
        e2: Environment<'_>,
        pairs: impl Iterator<Item = (&'n str, &'n str)>,
        v1: &InterventionSpec,
        v2: &InterventionSpec,
    ) -> Result<BTreeMap<(String, String), f64>> {
        let mut terms = BTreeMap::new();
        for (i, j) in pairs {
            let m = self.mimd(e1, e2, i, j, v1.get(i)?, v2.get(i)?)?;
            terms.insert((i.to_string(), j.to_string()), m);
        }
        Ok(terms)
    }

    /// Sum of MIMD over all ordered pairs of distinct variables.
    pub fn scmd(&mut self, e1: Environment<'_>, e2: Environment<'_>, v1: &InterventionSpec, v2: &InterventionSpec) -> Result<DistanceReport> {
        let names = Self::variables(e1, e2)?;
        let pairs = names
            .iter()
            .flat_map(|i| names.iter().filter(move |j| *j != i).map(move |j| (i.as_str(), j.as_str())));
        let terms = self.pair_terms(e1, e2, pairs, v1, v2)?;
        Ok(DistanceReport::from_terms(
            DistanceKind::Scmd,
            terms,
            *self.config(),
            alloc::vec![(v1.clone(), v2.clone())],
            (e1.data.id(), e2.data.id()),
        ))
    }

    /// Sum of MIMD over pairs with `target` as the outcome.
    pub fn p_scmd(
        &mut self,
        e1: Environment<'_>,
        e2: Environment<'_>,
        target: &str,
        v1: &InterventionSpec,
        v2: &InterventionSpec,
    ) -> Result<DistanceReport> {
        let names = Self::variables(e1, e2)?;
        if !names.iter().any(|n| n == target) {
            return Err(Error::UnknownVariable(target.into()));
        }
        let pairs = names.iter().filter(|i| *i != target).map(|i| (i.as_str(), target));
        let terms = self.pair_terms(e1, e2, pairs, v1, v2)?;
        Ok(DistanceReport::from_terms(
            DistanceKind::PScmd { target: target.into() },
            terms,
            *self.config(),
            alloc::vec![(v1.clone(), v2.clone())],
            (e1.data.id(), e2.data.id()),
        ))
    }

    /// Mean of SCMD over quantile levels, each environment intervened at its
    /// own per-variable quantiles of the same level.
    pub fn e_scmd(&mut self, e1: Environment<'_>, e2: Environment<'_>, levels: &[f64]) -> Result<DistanceReport> {
        if levels.is_empty() {
            return Err(Error::InvalidConfig("E-SCMD needs at least one quantile level".into()));
        }
        let mut sums: BTreeMap<(String, String), f64> = BTreeMap::new();
        let mut interventions = Vec::with_capacity(levels.len());
        let mut total = 0.0;
        for &q in levels {
            let v1 = InterventionSpec::quantile(e1.data, q)?;
            let v2 = InterventionSpec::quantile(e2.data, q)?;
            let r = self.scmd(e1, e2, &v1, &v2)?;
            total += r.value;
            for (k, m) in r.pair_terms {
                *sums.entry(k).or_insert(0.0) += m;
            }
            interventions.push((v1, v2));
        }
        let l = levels.len() as f64;
        sums.values_mut().for_each(|v| *v /= l);
        Ok(DistanceReport {
            kind: DistanceKind::EScmd { levels: levels.to_vec() },
            value: total / l,
            pair_terms: sums,
            config: *self.config(),
            interventions,
            dataset_ids: (e1.data.id().into(), e2.data.id().into()),
        })
    }

    pub fn mmd(&self, d1: &Dataset, d2: &Dataset) -> Result<DistanceReport> {
        Ok(DistanceReport {
            kind: DistanceKind::Mmd,
            value: mmd_vstat(d1, d2, self.config().kernel)?,
            pair_terms: BTreeMap::new(),
            config: *self.config(),
            interventions: Vec::new(),
            dataset_ids: (d1.id().into(), d2.id().into()),
        })
    }

    /// The report for environments `a` and `b` of a pairwise matrix.
    pub fn pairwise_entry(
        &mut self,
        envs: &[Dataset],
        g: &Dag,
        metric: PairwiseMetric,
        policy: &InterventionPolicy,
        (a, b): (usize, usize),
    ) -> Result<DistanceReport> {
        let (da, db) = (&envs[a], &envs[b]);
        match metric {
            PairwiseMetric::Mmd => self.mmd(da, db),
            PairwiseMetric::Scmd => {
                let (va, vb) = match policy {
                    InterventionPolicy::PerVariableMean => {
                        (InterventionSpec::per_variable_mean(da), InterventionSpec::per_variable_mean(db))
                    }
                    InterventionPolicy::User(specs) => {
                        if specs.len() != envs.len() {
                            return Err(Error::InvalidConfig(format!(
                                "{} intervention specs for {} environments",
                                specs.len(),
                                envs.len()
                            )));
                        }
                        (specs[a].clone(), specs[b].clone())
                    }
                };
                self.scmd(Environment::new(g, da), Environment::new(g, db), &va, &vb)
            }
        }
    }

    /// Distances between every pair of environments under one graph.
    pub fn pairwise_matrix(
        &mut self,
        envs: &[Dataset],
        g: &Dag,
        metric: PairwiseMetric,
        policy: &InterventionPolicy,
    ) -> Result<PairwiseMatrix> {
        if envs.len() < 2 {
            return Err(Error::InvalidConfig("pairwise comparison needs at least two environments".into()));
        }
        let mut reports = Vec::new();
        for job in pair_jobs(envs.len()) {
            reports.push((job, self.pairwise_entry(envs, g, metric, policy, job)?));
        }
        PairwiseMatrix::from_reports(envs.iter().map(|d| d.id().to_string()).collect(), reports)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelConfig;
    use alloc::vec;

    fn cfg() -> EstimatorConfig {
        EstimatorConfig::new(KernelConfig::new(0.5).unwrap())
    }

    fn pseudo(seed: u64, n: usize) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
            })
            .collect()
    }

    fn chain_data(id: &str, seed: u64, n: usize, slope: f64) -> Dataset {
        let z = pseudo(seed, n);
        let e = pseudo(seed + 1, n);
        let f = pseudo(seed + 2, n);
        let x: Vec<f64> = z.iter().zip(&e).map(|(z, e)| 0.8 * z + 0.3 * e).collect();
        let y: Vec<f64> = x.iter().zip(&f).map(|(x, f)| slope * x + 0.3 * f).collect();
        Dataset::from_columns(id, [("Z", z), ("X", x), ("Y", y)]).unwrap()
    }

    fn chain() -> Dag {
        Dag::new(["Z", "X", "Y"], [("Z", "X"), ("X", "Y")]).unwrap()
    }

    #[test]
    fn mimd_matches_double_sum() {
        let g = chain();
        let d1 = chain_data("a", 1, 25, 1.0);
        let d2 = chain_data("b", 7, 25, -0.5);
        let mut est = Estimator::new(cfg()).unwrap();
        let kern = cfg().kernel;
        for (i, j) in [("X", "Y"), ("Z", "Y"), ("Y", "X"), ("Z", "X")] {
            let w1 = est.omega(&g, &d1, i, j, 0.4).unwrap().weights;
            let w2 = est.omega(&g, &d2, i, j, -0.2).unwrap().weights;
            let (c1, c2) = (d1.column(j).unwrap(), d2.column(j).unwrap());
            let mut sq = 0.0;
            for s in 0..25 {
                for t in 0..25 {
                    sq += w1[s] * w1[t] * kern.eval(c1[s], c1[t]);
                    sq += w2[s] * w2[t] * kern.eval(c2[s], c2[t]);
                    sq -= 2.0 * w1[s] * w2[t] * kern.eval(c1[s], c2[t]);
                }
            }
            let m = est
                .mimd(Environment::new(&g, &d1), Environment::new(&g, &d2), i, j, 0.4, -0.2)
                .unwrap();
            assert!((m * m - sq.max(0.0)).abs() < 1e-10, "{i}->{j}: {} vs {sq}", m * m);
        }
    }

    #[test]
    fn self_distance_is_zero() {
        let g = chain();
        let d = chain_data("a", 3, 40, 1.0);
        let v = InterventionSpec::per_variable_mean(&d);
        let mut est = Estimator::new(cfg()).unwrap();
        let e = Environment::new(&g, &d);
        let r = est.scmd(e, e, &v, &v).unwrap();
        assert!(r.value.abs() < 1e-6);
        assert_eq!(r.pair_terms.len(), 6);
    }

    #[test]
    fn swap_is_exact_and_pscmd_sums_to_scmd() {
        let g = chain();
        let d1 = chain_data("a", 3, 40, 1.0);
        let d2 = chain_data("b", 11, 30, 2.0);
        let (v1, v2) = (InterventionSpec::per_variable_mean(&d1), InterventionSpec::per_variable_mean(&d2));
        let mut est = Estimator::new(cfg()).unwrap();
        let (e1, e2) = (Environment::new(&g, &d1), Environment::new(&g, &d2));
        let fwd = est.scmd(e1, e2, &v1, &v2).unwrap();
        let bwd = est.scmd(e2, e1, &v2, &v1).unwrap();
        assert_eq!(fwd.value.to_bits(), bwd.value.to_bits());
        let total: f64 = ["X", "Y", "Z"]
            .iter()
            .map(|t| est.p_scmd(e1, e2, t, &v1, &v2).unwrap().value)
            .sum();
        assert!((total - fwd.value).abs() <= 1e-9 * fwd.value.max(1.0));
        assert!(fwd.pair_terms.values().all(|v| *v >= 0.0));
    }

    #[test]
    fn missing_intervention_value_is_reported() {
        let g = chain();
        let d = chain_data("a", 3, 20, 1.0);
        let v = InterventionSpec::user([("X", 0.0), ("Y", 1.0)]).unwrap();
        let mut est = Estimator::new(cfg()).unwrap();
        let e = Environment::new(&g, &d);
        assert!(est.scmd(e, e, &v, &v).is_err());
        assert!(InterventionSpec::user([("X", 0.0), ("X", 1.0)]).is_err());
        assert!(est.p_scmd(e, e, "Q", &v, &v).is_err());
    }

    #[test]
    fn escmd_single_level_is_quantile_scmd() {
        let g = chain();
        let d1 = chain_data("a", 3, 30, 1.0);
        let d2 = chain_data("b", 5, 30, 0.5);
        let mut est = Estimator::new(cfg()).unwrap();
        let (e1, e2) = (Environment::new(&g, &d1), Environment::new(&g, &d2));
        let e = est.e_scmd(e1, e2, &[0.5]).unwrap();
        let v1 = InterventionSpec::quantile(&d1, 0.5).unwrap();
        let v2 = InterventionSpec::quantile(&d2, 0.5).unwrap();
        let s = est.scmd(e1, e2, &v1, &v2).unwrap();
        assert!((e.value - s.value).abs() < 1e-12);
        assert!(est.e_scmd(e1, e2, &[]).is_err());
        assert!(est.e_scmd(e1, e2, &[1.0]).is_err());
    }

    #[test]
    fn mmd_identical_and_aligned_by_name() {
        let d = chain_data("a", 3, 50, 1.0);
        let kern = KernelConfig::new(0.1).unwrap();
        assert!(mmd_vstat(&d, &d, kern).unwrap() < 1e-7);
        let names: Vec<String> = d.names().iter().rev().cloned().collect();
        let cols = names.iter().map(|n| d.column(n).unwrap().to_vec()).collect();
        let permuted = Dataset::new("p", names, cols).unwrap();
        let other = chain_data("b", 9, 40, -1.0);
        let a = mmd_vstat(&d, &other, kern).unwrap();
        let b = mmd_vstat(&permuted, &other, kern).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(a > 0.0);
    }

    #[test]
    fn mmd_single_points() {
        let a = Dataset::from_columns("a", [("X", vec![0.0])]).unwrap();
        let b = Dataset::from_columns("b", [("X", vec![1.0])]).unwrap();
        let kern = KernelConfig::new(1.0).unwrap();
        let expected = libm::sqrt(2.0 - 2.0 * libm::exp(-0.5));
        assert!((mmd_vstat(&a, &b, kern).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn pairwise_is_symmetric_with_zero_diagonal() {
        let g = chain();
        let envs = vec![
            chain_data("a", 1, 30, 1.0),
            chain_data("b", 2, 30, 1.0),
            chain_data("c", 3, 30, 3.0),
        ];
        let mut est = Estimator::new(cfg()).unwrap();
        for metric in [PairwiseMetric::Scmd, PairwiseMetric::Mmd] {
            let m = est
                .pairwise_matrix(&envs, &g, metric, &InterventionPolicy::PerVariableMean)
                .unwrap();
            for a in 0..3 {
                assert_eq!(m.get(a, a), 0.0);
                for b in 0..3 {
                    assert_eq!(m.get(a, b), m.get(b, a));
                }
            }
            assert_eq!(m.reports.len(), 3);
        }
        assert!(est
            .pairwise_matrix(&envs[..1], &g, PairwiseMetric::Scmd, &InterventionPolicy::PerVariableMean)
            .is_err());
        assert_eq!(pair_jobs(3), vec![(0, 1), (0, 2), (1, 2)]);
    }
}
