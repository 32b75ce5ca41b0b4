//! Static simple graph with a global edge ordering.
//!
//! Edge `e` is the `e`-th entry of the ordering (0-based internally). Every
//! adjacency list is sorted by edge index, so "the first alive edge in the
//! ordering" at a vertex is found by walking its list from the front.

use std::fmt;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

pub type Vertex = u32;
pub type EdgeId = u32;

/// Sentinel for "no vertex / no position / no edge".
pub const NONE: u32 = u32::MAX;

/// One entry of an adjacency list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arc {
    pub to: Vertex,
    pub edge: EdgeId,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("vertex {vertex} out of range for n = {n}")]
    OutOfRange { vertex: u64, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(Vertex),
    #[error("parallel edge between {0} and {1}")]
    ParallelEdge(Vertex, Vertex),
    #[error("graph too large: {0}")]
    TooLarge(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<[Vertex; 2]>,
    offsets: Vec<usize>,
    adj: Vec<Arc>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("m", &self.edges.len())
            .finish()
    }
}

impl Graph {
    /// Builds a simple graph whose edge ordering is the order of `edges`.
    pub fn from_edges(n: usize, edges: Vec<[Vertex; 2]>) -> Result<Self, GraphError> {
        if n >= NONE as usize || edges.len() >= NONE as usize {
            return Err(GraphError::TooLarge(format!(
                "n = {n}, m = {}",
                edges.len()
            )));
        }
        for &[u, v] in &edges {
            for w in [u, v] {
                if w as usize >= n {
                    return Err(GraphError::OutOfRange {
                        vertex: w as u64,
                        n,
                    });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
        }
        let mut deg = vec![0usize; n];
        for &[u, v] in &edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &deg {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut adj = vec![Arc { to: 0, edge: 0 }; 2 * edges.len()];
        for (e, &[u, v]) in edges.iter().enumerate() {
            adj[fill[u as usize]] = Arc { to: v, edge: e as EdgeId };
            fill[u as usize] += 1;
            adj[fill[v as usize]] = Arc { to: u, edge: e as EdgeId };
            fill[v as usize] += 1;
        }
        let g = Graph {
            n,
            edges,
            offsets,
            adj,
        };
        g.check_no_parallel()?;
        Ok(g)
    }

    fn check_no_parallel(&self) -> Result<(), GraphError> {
        let mut seen = vec![NONE; self.n];
        for v in 0..self.n {
            for a in self.neighbors(v as Vertex) {
                if seen[a.to as usize] == v as u32 {
                    return Err(GraphError::ParallelEdge(v as Vertex, a.to));
                }
                seen[a.to as usize] = v as u32;
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[[Vertex; 2]] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> [Vertex; 2] {
        self.edges[e as usize]
    }

    /// Adjacency of `v`, ascending by edge index.
    pub fn neighbors(&self, v: Vertex) -> &[Arc] {
        let v = v as usize;
        &self.adj[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        let v = v as usize;
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n as Vertex)
            .map(|v| self.degree(v))
            .min()
            .unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n as Vertex)
            .map(|v| self.degree(v))
            .max()
            .unwrap_or(0)
    }

    /// Index of the edge `{u, v}`, if present.
    pub fn find_edge(&self, u: Vertex, v: Vertex) -> Option<EdgeId> {
        if u as usize >= self.n || v as usize >= self.n {
            return None;
        }
        let (a, b) = if self.degree(u) <= self.degree(v) { (u, v) } else { (v, u) };
        self.neighbors(a).iter().find(|arc| arc.to == b).map(|arc| arc.edge)
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.find_edge(u, v).is_some()
    }

    /// The other endpoint of edge `e`.
    pub fn opposite(&self, e: EdgeId, v: Vertex) -> Vertex {
        let [a, b] = self.edges[e as usize];
        if a == v {
            b
        } else {
            a
        }
    }

    /// Copy of this graph with edge `e` removed; later edges shift down by one.
    pub fn without_edge(&self, e: EdgeId) -> Graph {
        let mut edges = self.edges.clone();
        edges.remove(e as usize);
        Graph::from_edges(self.n, edges).expect("subgraph of a simple graph is simple")
    }

    /// Writes the text format: `n m` then one `u v` line per edge, 1-based, in order.
    pub fn write_to<W: Write>(&self, w: W) -> io::Result<()> {
        let mut w = BufWriter::new(w);
        writeln!(w, "{} {}", self.n, self.m())?;
        for &[u, v] in &self.edges {
            writeln!(w, "{} {}", u + 1, v + 1)?;
        }
        w.flush()
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Graph, GraphError> {
        let mut lines = r.lines().enumerate();
        let (n, m) = loop {
            let Some((i, line)) = lines.next() else {
                return Err(GraphError::Parse {
                    line: 1,
                    msg: "missing header".into(),
                });
            };
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let nums = parse_pair(&line, i + 1)?;
            break (nums.0 as usize, nums.1 as usize);
        };
        let mut edges = Vec::with_capacity(m);
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (u, v) = parse_pair(&line, i + 1)?;
            if u == 0 || v == 0 || u > n as u64 || v > n as u64 {
                return Err(GraphError::OutOfRange {
                    vertex: if u == 0 || u > n as u64 { u } else { v },
                    n,
                });
            }
            edges.push([(u - 1) as Vertex, (v - 1) as Vertex]);
        }
        if edges.len() != m {
            return Err(GraphError::Parse {
                line: 1,
                msg: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        Graph::from_edges(n, edges)
    }

    pub fn load(path: &Path) -> Result<Graph, GraphError> {
        let f = std::fs::File::open(path)?;
        Graph::read_from(io::BufReader::new(f))
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(f)
    }
}

fn parse_pair(line: &str, lineno: usize) -> Result<(u64, u64), GraphError> {
    let mut it = line.split_whitespace();
    let mut next = || -> Result<u64, GraphError> {
        it.next()
            .ok_or_else(|| GraphError::Parse {
                line: lineno,
                msg: "expected two integers".into(),
            })?
            .parse::<u64>()
            .map_err(|e| GraphError::Parse {
                line: lineno,
                msg: e.to_string(),
            })
    };
    let a = next()?;
    let b = next()?;
    if it.next().is_some() {
        return Err(GraphError::Parse {
            line: lineno,
            msg: "trailing tokens".into(),
        });
    }
    Ok((a, b))
}

/// Convenience constructors used by tests and examples.
pub mod builders {
    use super::*;

    pub fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n as Vertex {
            for v in u + 1..n as Vertex {
                edges.push([u, v]);
            }
        }
        Graph::from_edges(n, edges).unwrap()
    }

    pub fn cycle(n: usize) -> Graph {
        let edges = (0..n as Vertex).map(|i| [i, (i + 1) % n as Vertex]).collect();
        Graph::from_edges(n, edges).unwrap()
    }

    pub fn path(n: usize) -> Graph {
        let edges = (0..n.saturating_sub(1) as Vertex).map(|i| [i, i + 1]).collect();
        Graph::from_edges(n, edges).unwrap()
    }

    pub fn star(leaves: usize) -> Graph {
        let edges = (1..=leaves as Vertex).map(|i| [0, i]).collect();
        Graph::from_edges(leaves + 1, edges).unwrap()
    }

    pub fn petersen() -> Graph {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push([i, (i + 1) % 5]);
            edges.push([i, i + 5]);
            edges.push([5 + i, 5 + (i + 2) % 5]);
        }
        Graph::from_edges(10, edges).unwrap()
    }
}
