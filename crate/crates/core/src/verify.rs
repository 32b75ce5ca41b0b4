//! Certificate checks and a small-n Hamiltonicity oracle.

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Graph, Vertex};
use crate::matching::{decompose, TwoMatching};

/// True iff `seq` visits every vertex once and closes into a cycle of `g`.
pub fn check_hamilton(g: &Graph, seq: &[Vertex]) -> bool {
    let n = g.n();
    if n < 3 || seq.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &v in seq {
        if v as usize >= n || seen[v as usize] {
            return false;
        }
        seen[v as usize] = true;
    }
    (0..n).all(|i| g.has_edge(seq[i], seq[(i + 1) % n]))
}

/// Cycle check on an arbitrary vertex subset (length ≥ 3, no repeats).
pub fn check_cycle_edges(g: &Graph, seq: &[Vertex]) -> bool {
    let k = seq.len();
    if k < 3 {
        return false;
    }
    let mut seen = vec![false; g.n()];
    for &v in seq {
        if v as usize >= g.n() || seen[v as usize] {
            return false;
        }
        seen[v as usize] = true;
    }
    (0..k).all(|i| g.has_edge(seq[i], seq[(i + 1) % k]))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Violation {
    NotAnEdge { u: Vertex, v: Vertex },
    DegreeTooHigh { v: Vertex, degree: usize },
    Duplicate { u: Vertex, v: Vertex },
    BadComponents,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TwoMatchingReport {
    pub paths: usize,
    pub cycles: usize,
    pub sizes: Vec<usize>,
    pub violations: Vec<Violation>,
}

impl TwoMatchingReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Degree and edge checks, then a component census recomputed from the edges.
pub fn check_two_matching(g: &Graph, tm: &TwoMatching) -> TwoMatchingReport {
    let n = g.n();
    let mut rep = TwoMatchingReport::default();
    let mut deg = vec![0usize; n];
    let mut seen = std::collections::HashSet::new();
    for &[u, v] in &tm.edges {
        if u as usize >= n || v as usize >= n || !g.has_edge(u, v) {
            rep.violations.push(Violation::NotAnEdge { u, v });
            continue;
        }
        if !seen.insert((u.min(v), u.max(v))) {
            rep.violations.push(Violation::Duplicate { u, v });
            continue;
        }
        deg[u as usize] += 1;
        deg[v as usize] += 1;
    }
    for (v, &d) in deg.iter().enumerate() {
        if d > 2 {
            rep.violations.push(Violation::DegreeTooHigh { v: v as Vertex, degree: d });
        }
    }
    if !rep.ok() {
        return rep;
    }
    match decompose(n, &tm.edges) {
        Ok(comps) => {
            for c in &comps {
                if c.cycle {
                    rep.cycles += 1;
                } else {
                    rep.paths += 1;
                }
                rep.sizes.push(c.len());
            }
            let mut a: Vec<_> = comps.iter().map(|c| (c.len(), c.cycle)).collect();
            let mut b: Vec<_> = tm.components.iter().map(|c| (c.len(), c.cycle)).collect();
            a.sort_unstable();
            b.sort_unstable();
            if a != b {
                rep.violations.push(Violation::BadComponents);
            }
        }
        Err(_) => rep.violations.push(Violation::BadComponents),
    }
    rep
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("oracle supports at most {max} vertices, got {n}")]
pub struct TooLarge {
    pub n: usize,
    pub max: usize,
}

pub const ORACLE_MAX: usize = 20;

/// Held-Karp over subsets containing vertex 0; `reach[S]` is the set of
/// possible endpoints of a path from 0 covering `S`.
pub fn oracle_hamiltonian(g: &Graph) -> Result<bool, TooLarge> {
    let n = g.n();
    if n > ORACLE_MAX {
        return Err(TooLarge { n, max: ORACLE_MAX });
    }
    if n < 3 {
        return Ok(false);
    }
    let adj: Vec<u32> = (0..n as u32)
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, a| m | (1 << a.to)))
        .collect();
    let full = (1u32 << n) - 1;
    let mut reach = vec![0u32; 1 << n];
    reach[1] = 1;
    for s in (1..=full).filter(|s| s & 1 == 1) {
        let ends = reach[s as usize];
        if ends == 0 {
            continue;
        }
        let mut e = ends;
        while e != 0 {
            let v = e.trailing_zeros();
            e &= e - 1;
            let mut out = adj[v as usize] & !s;
            while out != 0 {
                let w = out.trailing_zeros();
                out &= out - 1;
                reach[(s | 1 << w) as usize] |= 1 << w;
            }
        }
    }
    Ok(reach[full as usize] & adj[0] != 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::builders;
    use rand::{Rng, SeedableRng};

    fn permutation_brute_force(g: &Graph) -> bool {
        let n = g.n();
        if n < 3 {
            return false;
        }
        let mut rest: Vec<u32> = (1..n as u32).collect();
        fn go(g: &Graph, seq: &mut Vec<u32>, rest: &mut Vec<u32>) -> bool {
            if rest.is_empty() {
                return g.has_edge(*seq.last().unwrap(), seq[0]);
            }
            for i in 0..rest.len() {
                let v = rest.remove(i);
                if g.has_edge(*seq.last().unwrap(), v) {
                    seq.push(v);
                    if go(g, seq, rest) {
                        return true;
                    }
                    seq.pop();
                }
                rest.insert(i, v);
            }
            false
        }
        go(g, &mut vec![0], &mut rest)
    }

    #[test]
    fn hamilton_examples() {
        let c5 = builders::cycle(5);
        assert!(check_hamilton(&c5, &[0, 1, 2, 3, 4]));
        assert!(!check_hamilton(&c5, &[0, 2, 1, 3, 4]));
        let k4 = builders::complete(4);
        assert!(!check_hamilton(&k4, &[0, 1, 2]));
        assert!(check_hamilton(&k4, &[0, 1, 3, 2]));
        assert!(!check_hamilton(&k4, &[0, 1, 1, 2]));
        assert!(check_cycle_edges(&k4, &[0, 1, 2]));
    }

    #[test]
    fn two_matching_examples() {
        let k4 = builders::complete(4);
        let tm = TwoMatching {
            n: 4,
            edges: vec![[0, 1], [2, 3]],
            components: decompose(4, &[[0, 1], [2, 3]]).unwrap(),
        };
        let r = check_two_matching(&k4, &tm);
        assert!(r.ok());
        assert_eq!((r.paths, r.cycles), (2, 0));
        let c5 = builders::cycle(5);
        let tm = TwoMatching {
            n: 5,
            edges: c5.edges().to_vec(),
            components: decompose(5, c5.edges()).unwrap(),
        };
        let r = check_two_matching(&c5, &tm);
        assert_eq!((r.paths, r.cycles), (0, 1));
        let star = builders::star(3);
        let tm = TwoMatching {
            n: 4,
            edges: star.edges().to_vec(),
            components: vec![],
        };
        let r = check_two_matching(&star, &tm);
        assert!(r.violations.contains(&Violation::DegreeTooHigh { v: 0, degree: 3 }));
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(oracle_hamiltonian(&builders::complete(4)), Ok(true));
        assert_eq!(oracle_hamiltonian(&builders::star(3)), Ok(false));
        let p = builders::petersen();
        assert_eq!(oracle_hamiltonian(&p), Ok(false));
        assert!(!permutation_brute_force(&p));
        assert!(oracle_hamiltonian(&builders::complete(21)).is_err());
    }

    #[test]
    fn oracle_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..300 {
            let n = rng.random_range(3..=8);
            let p = rng.random_range(0.2..0.8);
            let mut edges = Vec::new();
            for u in 0..n as u32 {
                for v in u + 1..n as u32 {
                    if rng.random_bool(p) {
                        edges.push([u, v]);
                    }
                }
            }
            let g = Graph::from_edges(n, edges).unwrap();
            assert_eq!(oracle_hamiltonian(&g).unwrap(), permutation_brute_force(&g));
        }
    }
}
