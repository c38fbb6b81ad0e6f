#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scmd_core::synth::{sample_scm, LinearGaussianScm};
use scmd_core::{Dag, Dataset, InterventionSpec};
use std::collections::BTreeMap;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Adjacency-matrix view of a DAG used by the exhaustive oracles.
pub struct Adj {
    pub n: usize,
    pub edge: Vec<Vec<bool>>,
}

impl Adj {
    pub fn of(g: &Dag, order: &[String]) -> Adj {
        let n = order.len();
        let idx = |s: &str| order.iter().position(|o| o == s).unwrap();
        let mut edge = vec![vec![false; n]; n];
        for (p, c) in g.edges() {
            edge[idx(p)][idx(c)] = true;
        }
        Adj { n, edge }
    }

    /// Transitive closure including the trivial path from a node to itself.
    pub fn closure(&self) -> Vec<Vec<bool>> {
        let mut r = self.edge.clone();
        for (v, row) in r.iter_mut().enumerate() {
            row[v] = true;
        }
        for k in 0..self.n {
            for i in 0..self.n {
                if r[i][k] {
                    for j in 0..self.n {
                        if r[k][j] {
                            r[i][j] = true;
                        }
                    }
                }
            }
        }
        r
    }

    fn adjacent(&self, a: usize, b: usize) -> bool {
        self.edge[a][b] || self.edge[b][a]
    }

    /// All simple paths from `a` to `b` in the skeleton.
    pub fn paths(&self, a: usize, b: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut stack = vec![a];
        self.extend(b, &mut stack, &mut out);
        out
    }

    fn extend(&self, b: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let last = *path.last().unwrap();
        if last == b {
            out.push(path.clone());
            return;
        }
        for next in 0..self.n {
            if self.adjacent(last, next) && !path.contains(&next) {
                path.push(next);
                self.extend(b, path, out);
                path.pop();
            }
        }
    }

    pub fn blocked(&self, path: &[usize], s: &[bool], de: &[Vec<bool>]) -> bool {
        (1..path.len() - 1).any(|k| {
            let (p, m, q) = (path[k - 1], path[k], path[k + 1]);
            let collider = self.edge[p][m] && self.edge[q][m];
            if collider {
                !(0..self.n).any(|w| de[m][w] && s[w])
            } else {
                s[m]
            }
        })
    }

    pub fn d_separated(&self, a: usize, b: usize, s: &[bool]) -> bool {
        let de = self.closure();
        self.paths(a, b).iter().all(|p| self.blocked(p, s, &de))
    }

    fn directed(&self, path: &[usize]) -> bool {
        path.windows(2).all(|w| self.edge[w[0]][w[1]])
    }

    /// Adjustment criterion: no member of `z` descends from a non-source node
    /// of a causal path, and `z` blocks every non-causal path.
    pub fn valid_adjustment(&self, x: usize, y: usize, z: &[bool]) -> bool {
        let de = self.closure();
        for w in 0..self.n {
            let on_causal_path = w != x && de[x][w] && de[w][y];
            if on_causal_path && (0..self.n).any(|v| de[w][v] && z[v]) {
                return false;
            }
        }
        self.paths(x, y)
            .iter()
            .filter(|p| !self.directed(p))
            .all(|p| self.blocked(p, z, &de))
    }
}

/// SID by enumeration; `guess` and `truth` share the node list `order`.
pub fn sid_oracle(guess: &Adj, truth: &Adj) -> usize {
    let de = truth.closure();
    let mut wrong = 0;
    for i in 0..truth.n {
        let pa: Vec<bool> = (0..truth.n).map(|p| guess.edge[p][i]).collect();
        for j in 0..truth.n {
            if i == j {
                continue;
            }
            let bad = if pa[j] {
                de[i][j]
            } else {
                !truth.valid_adjustment(i, j, &pa)
            };
            wrong += bad as usize;
        }
    }
    wrong
}

/// Random DAG on `d` nodes named `V0..`, declared in a shuffled order.
pub fn random_dag(rng: &mut ChaCha8Rng, d: usize) -> Dag {
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(rng);
    let p = rng.random_range(0.2..0.8);
    let mut edges = Vec::new();
    for a in 0..d {
        for b in a + 1..d {
            if rng.random_bool(p) {
                edges.push((format!("V{}", order[a]), format!("V{}", order[b])));
            }
        }
    }
    let mut names: Vec<String> = (0..d).map(|v| format!("V{v}")).collect();
    names.shuffle(rng);
    Dag::new(names, edges).unwrap()
}

pub fn sorted_names(g: &Dag) -> Vec<String> {
    let mut n = g.nodes().to_vec();
    n.sort();
    n
}

/// A random linear-Gaussian dataset over X, Y, Z with its generating graph.
pub fn triple(seed: u64) -> (Dag, Dataset, InterventionSpec) {
    let mut r = rng(seed);
    let g = random_dag(&mut r, 3);
    let rename = |s: &str| match s {
        "V0" => "X",
        "V1" => "Y",
        _ => "Z",
    };
    let edges: Vec<(&str, &str)> = g.edges().map(|(p, c)| (rename(p), rename(c))).collect();
    let g = Dag::new(["X", "Y", "Z"], edges).unwrap();
    let mut coef = BTreeMap::new();
    for (p, c) in g.edges() {
        coef.insert((p.to_string(), c.to_string()), r.random_range(-2.0..2.0));
    }
    let var = ["X", "Y", "Z"]
        .iter()
        .map(|v| (v.to_string(), r.random_range(0.3..2.0)))
        .collect();
    let m = LinearGaussianScm::new(g.clone(), coef, var, BTreeMap::new()).unwrap();
    let n = r.random_range(15..40);
    let d = sample_scm(&m, n, seed).unwrap().with_id(format!("d{seed}"));
    let v = InterventionSpec::user(["X", "Y", "Z"].map(|k| (k, r.random_range(-2.0..2.0)))).unwrap();
    (g, d, v)
}
