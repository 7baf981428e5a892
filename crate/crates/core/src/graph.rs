//! Unweighted, undirected MaxCut instances.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Largest vertex count accepted by the exhaustive and dense routines.
pub const MAX_DENSE_VERTICES: usize = 22;

/// Vertices are `0..n`; edges are stored as `(i, j)` with `i < j` in
/// lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph, normalising edge orientation and dropping duplicates.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("a graph needs at least one vertex".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::Domain(format!("self-loop on vertex {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::Domain(format!(
                    "edge ({a}, {b}) references a vertex outside 0..{n}"
                )));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self {
            n,
            edges: set.into_iter().collect(),
        })
    }

    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("complete graph needs n >= 2, got {n}")));
        }
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        Self::new(n, edges)
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Domain(format!("cycle graph needs n >= 3, got {n}")));
        }
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    /// Parses the edge-list text format: one `i j` pair per line, `#`
    /// comments, and an optional leading `n <count>` header.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut declared: Option<usize> = None;
        let mut edges = Vec::new();
        let mut seen_content = false;

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let at = || format!("line {lineno}");

            if fields[0] == "n" {
                if seen_content {
                    return Err(Error::parse(at(), "vertex-count header must precede edges"));
                }
                if fields.len() != 2 {
                    return Err(Error::parse(at(), "expected `n <count>`"));
                }
                declared = Some(parse_index(fields[1], lineno)?);
                seen_content = true;
                continue;
            }
            seen_content = true;
            if fields.len() != 2 {
                return Err(Error::parse(
                    at(),
                    format!("expected two vertex indices, found {} fields", fields.len()),
                ));
            }
            let a = parse_index(fields[0], lineno)?;
            let b = parse_index(fields[1], lineno)?;
            if a == b {
                return Err(Error::parse(at(), format!("self-loop on vertex {a}")));
            }
            if let Some(n) = declared {
                if a >= n || b >= n {
                    return Err(Error::parse(
                        at(),
                        format!("edge ({a}, {b}) exceeds declared vertex count {n}"),
                    ));
                }
            }
            edges.push((a, b));
        }

        let n = match declared {
            Some(n) => n,
            None => edges
                .iter()
                .map(|&(a, b)| a.max(b) + 1)
                .max()
                .ok_or_else(|| Error::parse("line 1", "edge list has no edges and no header"))?,
        };
        Self::new(n, edges)
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `(n_beta, n_c)`: control observables (two per edge) and cost observables.
    pub fn operator_counts(&self) -> (usize, usize) {
        (2 * self.edges.len(), self.edges.len())
    }

    /// Number of edges cut by a partition given as a basis-state index
    /// (vertex 0 is the most significant bit).
    pub fn cut_size(&self, index: usize) -> usize {
        let n = self.n;
        self.edges
            .iter()
            .filter(|&&(a, b)| ((index >> (n - 1 - a)) ^ (index >> (n - 1 - b))) & 1 == 1)
            .count()
    }

    /// Exhaustive maximum cut over the 2^(n-1) bipartitions with vertex 0 on side 0.
    pub fn max_cut_brute_force(&self) -> Result<MaxCut> {
        if self.n > MAX_DENSE_VERTICES {
            return Err(Error::Size(format!(
                "brute-force MaxCut limited to {MAX_DENSE_VERTICES} vertices, got {}",
                self.n
            )));
        }
        let half = 1usize << (self.n - 1);
        let (index, value) = (0..half)
            .map(|idx| (idx, self.cut_size(idx)))
            .fold((0, 0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let partition = (0..self.n).map(|v| ((index >> (self.n - 1 - v)) & 1) as u8).collect();
        Ok(MaxCut { value, partition })
    }
}

fn parse_index(field: &str, lineno: usize) -> Result<usize> {
    if field.starts_with('-') {
        return Err(Error::parse(
            format!("line {lineno}"),
            format!("negative vertex index {field}"),
        ));
    }
    field
        .parse::<usize>()
        .map_err(|_| Error::parse(format!("line {lineno}"), format!("invalid vertex index {field:?}")))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxCut {
    pub value: usize,
    /// Side (0 or 1) of each vertex.
    pub partition: Vec<u8>,
}

impl MaxCut {
    pub fn bitstring(&self) -> String {
        self.partition.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
    }
}
