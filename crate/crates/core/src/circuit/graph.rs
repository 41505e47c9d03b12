use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "EdgeRepr", into = "EdgeRepr")]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

// Edge lists accept `[u, v]` (unit weight) or `[u, v, w]`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EdgeRepr {
    Weighted(usize, usize, f64),
    Pair(usize, usize),
}

impl From<EdgeRepr> for Edge {
    fn from(r: EdgeRepr) -> Self {
        match r {
            EdgeRepr::Weighted(u, v, w) => Edge { u, v, w },
            EdgeRepr::Pair(u, v) => Edge { u, v, w: 1.0 },
        }
    }
}

impl From<Edge> for EdgeRepr {
    fn from(e: Edge) -> Self {
        if e.w == 1.0 {
            EdgeRepr::Pair(e.u, e.v)
        } else {
            EdgeRepr::Weighted(e.u, e.v, e.w)
        }
    }
}

/// Weighted MaxCut instance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    pub n_nodes: usize,
    pub edges: Vec<Edge>,
}

impl Graph {
    pub fn new(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let g = Graph {
            n_nodes,
            edges: edges.iter().map(|&(u, v)| Edge { u, v, w: 1.0 }).collect(),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn triangle() -> Self {
        Graph::new(3, &[(0, 1), (1, 2), (0, 2)]).expect("valid")
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            if e.u == e.v || e.u >= self.n_nodes || e.v >= self.n_nodes {
                return Err(Error::InvalidArgument(format!(
                    "bad edge ({}, {}) for {} nodes",
                    e.u, e.v, self.n_nodes
                )));
            }
            if !e.w.is_finite() {
                return Err(Error::InvalidArgument("non-finite edge weight".into()));
            }
            let key = (e.u.min(e.v), e.u.max(e.v));
            if seen.contains(&key) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate edge ({}, {})",
                    key.0, key.1
                )));
            }
            seen.push(key);
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: Graph = serde_json::from_str(text)?;
        g.validate()?;
        Ok(g)
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    /// Cut weight of an assignment; character `i` of `bits` is node `i`.
    pub fn cut_value(&self, bits: &str) -> f64 {
        let b = bits.as_bytes();
        self.edges
            .iter()
            .filter(|e| b.get(e.u) != b.get(e.v))
            .map(|e| e.w)
            .sum()
    }
}
