//! Named DAGs: parents, reachability, d-separation and the structural
//! intervention distance.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Directed acyclic graph over named variables. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    nodes: Vec<String>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl Dag {
    /// Validates endpoints, self-loops, duplicate edges and acyclicity.
    pub fn new<N, A, B>(nodes: impl IntoIterator<Item = N>, edges: impl IntoIterator<Item = (A, B)>) -> Result<Self>
    where
        N: ToString,
        A: AsRef<str>,
        B: AsRef<str>,
    {
        let nodes: Vec<String> = nodes.into_iter().map(|n| n.to_string()).collect();
        for (k, n) in nodes.iter().enumerate() {
            if nodes[..k].contains(n) {
                return Err(Error::InvalidGraph(format!("duplicate node `{n}`")));
            }
        }
        let d = nodes.len();
        let mut parents = vec![Vec::new(); d];
        let mut children = vec![Vec::new(); d];
        let index = |name: &str| {
            nodes
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::UnknownNode(name.into()))
        };
        for (a, b) in edges {
            let (u, v) = (index(a.as_ref())?, index(b.as_ref())?);
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop on `{}`", nodes[u])));
            }
            if parents[v].contains(&u) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge `{} -> {}`",
                    nodes[u], nodes[v]
                )));
            }
            parents[v].push(u);
            children[u].push(v);
        }
        for p in parents.iter_mut().chain(children.iter_mut()) {
            p.sort_unstable();
        }
        let g = Dag {
            nodes,
            parents,
            children,
        };
        if let Some(cycle) = g.find_cycle() {
            return Err(Error::Cycle(cycle));
        }
        Ok(g)
    }

    fn find_cycle(&self) -> Option<Vec<String>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let d = self.nodes.len();
        let mut state = vec![0u8; d];
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for root in 0..d {
            if state[root] != 0 {
                continue;
            }
            state[root] = 1;
            stack.push((root, 0));
            while let Some(&mut (u, ref mut next)) = stack.last_mut() {
                if let Some(&v) = self.children[u].get(*next) {
                    *next += 1;
                    match state[v] {
                        0 => {
                            state[v] = 1;
                            stack.push((v, 0));
                        }
                        1 => {
                            let start = stack.iter().position(|&(w, _)| w == v).unwrap();
                            let mut cycle: Vec<String> =
                                stack[start..].iter().map(|&(w, _)| self.nodes[w].clone()).collect();
                            cycle.push(self.nodes[v].clone());
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    state[u] = 2;
                    stack.pop();
                }
            }
        }
        None
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// Edges as `(parent, child)`, ordered by child then parent declaration order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.parents.iter().enumerate().flat_map(move |(v, ps)| {
            ps.iter()
                .map(move |&u| (self.nodes[u].as_str(), self.nodes[v].as_str()))
        })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.nodes.iter().any(|n| n == name)
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownNode(name.into()))
    }

    pub fn parents(&self, v: &str) -> Result<Vec<&str>> {
        let k = self.index_of(v)?;
        Ok(self.parents[k].iter().map(|&u| self.nodes[u].as_str()).collect())
    }

    pub fn children(&self, v: &str) -> Result<Vec<&str>> {
        let k = self.index_of(v)?;
        Ok(self.children[k].iter().map(|&u| self.nodes[u].as_str()).collect())
    }

    /// True iff a directed path `i -> ... -> j` exists.
    pub fn reachable(&self, i: &str, j: &str) -> Result<bool> {
        let (a, b) = (self.index_of(i)?, self.index_of(j)?);
        if a == b {
            return Err(Error::InvalidConfig(format!(
                "reachable needs two distinct nodes, got `{i}` twice"
            )));
        }
        Ok(self.descendants_of(&[a])[b])
    }

    /// Nodes in an order where every parent precedes its children.
    pub fn topological_order(&self) -> Vec<&str> {
        let d = self.nodes.len();
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..d).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(d);
        while let Some(u) = queue.pop_front() {
            order.push(self.nodes[u].as_str());
            for &v in &self.children[u] {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    queue.push_back(v);
                }
            }
        }
        order
    }

    /// Membership mask of the nodes reachable from `from` (inclusive).
    fn descendants_of(&self, from: &[usize]) -> Vec<bool> {
        closure(from, &self.children, self.nodes.len())
    }

    fn ancestors_of(&self, from: &[usize]) -> Vec<bool> {
        closure(from, &self.parents, self.nodes.len())
    }

    /// d-separation of `a` and `b` given `s`.
    pub fn d_separated(&self, a: &str, b: &str, s: &[&str]) -> Result<bool> {
        let (x, y) = (self.index_of(a)?, self.index_of(b)?);
        let z = s
            .iter()
            .map(|n| self.index_of(n))
            .collect::<Result<Vec<_>>>()?;
        if x == y {
            return Err(Error::InvalidConfig(format!(
                "d-separation needs two distinct nodes, got `{a}` twice"
            )));
        }
        if z.contains(&x) || z.contains(&y) {
            return Err(Error::InvalidConfig(format!(
                "conditioning set contains an endpoint (`{a}` or `{b}`)"
            )));
        }
        Ok(self.d_separated_idx(x, y, &z))
    }

    /// Reachability in the moralized graph of the ancestral set of
    /// `{x, y} ∪ z` with `z` removed.
    fn d_separated_idx(&self, x: usize, y: usize, z: &[usize]) -> bool {
        let d = self.nodes.len();
        let mut seeds = vec![x, y];
        seeds.extend_from_slice(z);
        let anc = self.ancestors_of(&seeds);
        let mut blocked = vec![false; d];
        for &v in z {
            blocked[v] = true;
        }
        let mut adj = vec![Vec::new(); d];
        for v in (0..d).filter(|&v| anc[v]) {
            let ps = &self.parents[v];
            for (k, &p) in ps.iter().enumerate() {
                adj[p].push(v);
                adj[v].push(p);
                for &q in &ps[..k] {
                    adj[p].push(q);
                    adj[q].push(p);
                }
            }
        }
        let mut seen = vec![false; d];
        seen[x] = true;
        let mut queue = VecDeque::from([x]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if v == y {
                    return false;
                }
                if !seen[v] && !blocked[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        true
    }

    /// Whether `z` is a valid adjustment set for the total effect of `x` on
    /// `y` (generalized adjustment criterion): `z` avoids the descendants of
    /// every non-`x` node on a causal path, and blocks every path from `x` to
    /// `y` once the first edges of the causal paths are cut.
    fn is_valid_adjustment(&self, x: usize, y: usize, z: &[usize]) -> bool {
        let d = self.nodes.len();
        let de_x = self.descendants_of(&[x]);
        let an_y = self.ancestors_of(&[y]);
        let causal: Vec<usize> = (0..d).filter(|&w| w != x && de_x[w] && an_y[w]).collect();
        let forbidden = self.descendants_of(&causal);
        if z.iter().any(|&v| forbidden[v] || v == x) {
            return false;
        }
        let mut cut = self.clone();
        for &c in &causal {
            cut.parents[c].retain(|&p| p != x);
            cut.children[x].retain(|&ch| ch != c);
        }
        cut.d_separated_idx(x, y, z)
    }

    pub fn same_node_set(&self, other: &Dag) -> bool {
        self.nodes.len() == other.nodes.len() && self.nodes.iter().all(|n| other.contains(n))
    }
}

fn closure(from: &[usize], next: &[Vec<usize>], d: usize) -> Vec<bool> {
    let mut seen = vec![false; d];
    let mut stack: Vec<usize> = from.to_vec();
    while let Some(u) = stack.pop() {
        if seen[u] {
            continue;
        }
        seen[u] = true;
        stack.extend(next[u].iter().copied().filter(|&v| !seen[v]));
    }
    seen
}

/// Structural intervention distance: the number of ordered pairs `(i, j)`,
/// `i != j`, for which adjusting for the parents of `i` in `guess` does not
/// give the effect of `i` on `j` implied by `truth`. When `j` is itself a
/// parent of `i` in `guess`, the guess implies no effect, which is wrong iff
/// `j` descends from `i` in `truth`. Not symmetric.
pub fn sid(guess: &Dag, truth: &Dag) -> Result<usize> {
    if !guess.same_node_set(truth) {
        return Err(Error::NodeSetMismatch(format!(
            "{:?} vs {:?}",
            guess.nodes, truth.nodes
        )));
    }
    let d = truth.nodes.len();
    // guess index -> truth index
    let map: Vec<usize> = guess
        .nodes
        .iter()
        .map(|n| truth.index_of(n))
        .collect::<Result<_>>()?;
    let mut count = 0;
    for gi in 0..d {
        let i = map[gi];
        let pa: Vec<usize> = guess.parents[gi].iter().map(|&p| map[p]).collect();
        let de_i = truth.descendants_of(&[i]);
        for j in (0..d).filter(|&j| j != i) {
            let wrong = if pa.contains(&j) {
                de_i[j]
            } else {
                !truth.is_valid_adjustment(i, j, &pa)
            };
            count += wrong as usize;
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dag(nodes: &[&str], edges: &[(&str, &str)]) -> Dag {
        Dag::new(nodes.iter().copied(), edges.iter().copied()).unwrap()
    }

    #[test]
    fn parents_and_roots() {
        let g = dag(&["X", "Y", "Z"], &[("X", "Y"), ("Y", "Z")]);
        assert_eq!(g.parents("Z").unwrap(), ["Y"]);
        assert!(g.parents("X").unwrap().is_empty());
        assert!(matches!(g.parents("W"), Err(Error::UnknownNode(_))));
        assert_eq!(g.n_edges(), 2);
    }

    #[test]
    fn rejects_bad_graphs() {
        let cyc = Dag::new(["X", "Y", "Z"], [("X", "Y"), ("Y", "Z"), ("Z", "X")]);
        match cyc {
            Err(Error::Cycle(c)) => {
                assert_eq!(c.first(), c.last());
                assert_eq!(c.len(), 4);
            }
            other => panic!("expected cycle, got {other:?}"),
        }
        assert!(matches!(Dag::new(["X"], [("X", "X")]), Err(Error::InvalidGraph(_))));
        assert!(matches!(
            Dag::new(["X", "Y"], [("X", "Y"), ("X", "Y")]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(Dag::new(["X"], [("X", "Q")]), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn reachability() {
        let g = dag(&["X", "Y", "W"], &[("X", "Y")]);
        assert!(g.reachable("X", "Y").unwrap());
        assert!(!g.reachable("Y", "X").unwrap());
        assert!(!g.reachable("X", "W").unwrap());
        assert!(g.reachable("X", "X").is_err());
    }

    #[test]
    fn collider_rules() {
        let g = dag(&["X", "Y", "Z"], &[("X", "Z"), ("Y", "Z")]);
        assert!(g.d_separated("X", "Y", &[]).unwrap());
        assert!(!g.d_separated("X", "Y", &["Z"]).unwrap());
        assert!(g.d_separated("X", "X", &[]).is_err());
        assert!(g.d_separated("X", "Y", &["X"]).is_err());
    }

    #[test]
    fn descendant_of_collider_opens_path() {
        let g = dag(&["X", "Y", "Z", "W"], &[("X", "Z"), ("Y", "Z"), ("Z", "W")]);
        assert!(!g.d_separated("X", "Y", &["W"]).unwrap());
    }

    #[test]
    fn sid_two_node_reversal() {
        let g1 = dag(&["X", "Y"], &[("X", "Y")]);
        let g2 = dag(&["X", "Y"], &[("Y", "X")]);
        assert_eq!(sid(&g1, &g2).unwrap(), 2);
        assert_eq!(sid(&g2, &g1).unwrap(), 2);
        assert_eq!(sid(&g1, &g1).unwrap(), 0);
    }

    #[test]
    fn sid_is_asymmetric() {
        // empty guess vs chain truth differs from the reverse direction
        let truth = dag(&["X", "Y", "Z"], &[("X", "Y"), ("Y", "Z")]);
        let empty = dag(&["X", "Y", "Z"], &[]);
        let a = sid(&empty, &truth).unwrap();
        let b = sid(&truth, &empty).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn sid_node_set_mismatch() {
        let g1 = dag(&["X", "Y"], &[]);
        let g2 = dag(&["X", "Z"], &[]);
        assert!(matches!(sid(&g1, &g2), Err(Error::NodeSetMismatch(_))));
    }

    #[test]
    fn node_order_does_not_matter_for_sid() {
        let g1 = dag(&["X", "Y", "Z"], &[("X", "Y"), ("Z", "Y")]);
        let g2 = dag(&["Z", "Y", "X"], &[("Y", "X"), ("Z", "Y")]);
        let g2_reordered = dag(&["X", "Y", "Z"], &[("Y", "X"), ("Z", "Y")]);
        assert_eq!(sid(&g1, &g2).unwrap(), sid(&g1, &g2_reordered).unwrap());
    }
}
