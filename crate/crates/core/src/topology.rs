//! Network topologies: adjacency matrices G_kl for the three ring variants
//! plus validation and edge-list I/O for user-supplied matrices.
//!
//! Conventions: `G[k][l]` weights the delayed input that node `k` receives
//! from node `l`. Generator entries are integers; link strengths are not
//! row-normalized, so total input degree varies with topology.

use crate::error::{Error, Result};

/// Square real adjacency matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl AdjacencyMatrix {
    /// Build from row-major entries; validates shape and finiteness.
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("node count must be at least 1".into()));
        }
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {}x{} = {} entries, got {}",
                n,
                n,
                n * n,
                entries.len()
            )));
        }
        if entries.iter().any(|w| !w.is_finite()) {
            return Err(Error::DegenerateData("non-finite adjacency entry".into()));
        }
        Ok(Self { n, entries })
    }

    fn zeros(n: usize) -> Result<Self> {
        Self::from_entries(n, vec![0.0; n * n])
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.entries[k * self.n + l]
    }

    fn set(&mut self, k: usize, l: usize, w: f64) {
        self.entries[k * self.n + l] = w;
    }

    fn add(&mut self, k: usize, l: usize, w: f64) {
        self.entries[k * self.n + l] += w;
    }

    /// Row `k` as a slice of length `n`.
    pub fn row(&self, k: usize) -> &[f64] {
        &self.entries[k * self.n..(k + 1) * self.n]
    }

    /// Sparse rows `(col, weight)` of nonzero entries, for the integration hot path.
    pub fn sparse_rows(&self) -> Vec<Vec<(usize, f64)>> {
        (0..self.n)
            .map(|k| {
                self.row(k)
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w != 0.0)
                    .map(|(l, &w)| (l, w))
                    .collect()
            })
            .collect()
    }

    /// Serialize as plain-text edge list: a `# nodes N` header, then one
    /// `src dst weight` line per nonzero entry.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# nodes {}\n", self.n);
        for k in 0..self.n {
            for l in 0..self.n {
                let w = self.get(k, l);
                if w != 0.0 {
                    out.push_str(&format!("{} {} {}\n", k, l, w));
                }
            }
        }
        out
    }

    /// Parse the edge-list format written by [`to_edge_list`](Self::to_edge_list).
    /// Without a `# nodes` header the node count is inferred from the largest index.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                if it.next() == Some("nodes") {
                    let v = it
                        .next()
                        .ok_or_else(|| Error::Parse("missing count after '# nodes'".into()))?;
                    n = Some(v.parse().map_err(|_| {
                        Error::Parse(format!("line {}: bad node count '{}'", lineno + 1, v))
                    })?);
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!(
                    "line {}: expected 'src dst weight', got '{}'",
                    lineno + 1,
                    line
                )));
            }
            let src: usize = fields[0]
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad src index", lineno + 1)))?;
            let dst: usize = fields[1]
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad dst index", lineno + 1)))?;
            let w: f64 = fields[2]
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad weight", lineno + 1)))?;
            edges.push((src, dst, w));
        }
        let inferred = edges
            .iter()
            .map(|&(s, d, _)| s.max(d) + 1)
            .max()
            .unwrap_or(0);
        let n = n.unwrap_or(inferred).max(inferred);
        let mut m = Self::zeros(n)?;
        for (src, dst, w) in edges {
            m.set(src, dst, w);
        }
        Ok(m)
    }
}

/// Unidirectional ring: node k receives from node (k−1) mod n.
/// For n = 1 this degenerates to a single node with self-feedback,
/// the pure virtual-network limit.
pub fn unidirectional_ring(n: usize) -> Result<AdjacencyMatrix> {
    let mut m = AdjacencyMatrix::zeros(n)?;
    for k in 0..n {
        m.set(k, (k + n - 1) % n, 1.0);
    }
    Ok(m)
}

/// Unidirectional ring plus forward jump links: every source node k with
/// k ≡ 0 (mod 4) additionally feeds node (k+4) mod n. Identical to the plain
/// ring for n ≤ 4 by construction.
pub fn ring_with_jumps(n: usize) -> Result<AdjacencyMatrix> {
    let mut m = unidirectional_ring(n)?;
    if n > 4 {
        for k in (0..n).step_by(4) {
            m.set((k + 4) % n, k, 1.0);
        }
    }
    Ok(m)
}

/// Bidirectional ring with self-feedback of double strength and opposite
/// sign, mimicking difference coupling: each row holds +1 to both neighbors
/// and −2 on the diagonal, so row sums vanish for n ≥ 2. Parallel neighbor
/// links merge (n = 2 yields ±2 off-diagonal entries). For n = 1 everything
/// collapses onto the diagonal and cancels to the zero matrix; such a
/// configuration has no coupling at all and is excluded from sweeps.
pub fn bidirectional_ring_selffeedback(n: usize) -> Result<AdjacencyMatrix> {
    let mut m = AdjacencyMatrix::zeros(n)?;
    for k in 0..n {
        m.add(k, (k + 1) % n, 1.0);
        m.add(k, (k + n - 1) % n, 1.0);
        m.add(k, k, -2.0);
    }
    if n == 1 {
        log::warn!("bidirectional ring with self-feedback collapses to the zero matrix for n = 1");
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ring_n1_is_self_loop() {
        let m = unidirectional_ring(1).unwrap();
        assert_eq!(m.node_count(), 1);
        assert_eq!(m.get(0, 0), 1.0);
    }

    #[test]
    fn ring_n2_is_mutual_pair() {
        let m = unidirectional_ring(2).unwrap();
        assert_eq!(m.row(0), &[0.0, 1.0]);
        assert_eq!(m.row(1), &[1.0, 0.0]);
    }

    #[test]
    fn ring_n4_is_cyclic_shift() {
        // Hand-constructed 4-cycle: ones on the sub-diagonal plus the corner.
        let m = unidirectional_ring(4).unwrap();
        let expected = [
            [0.0, 0.0, 0.0, 1.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ];
        for k in 0..4 {
            assert_eq!(m.row(k), &expected[k]);
        }
    }

    #[test]
    fn zero_size_rejected() {
        assert!(matches!(unidirectional_ring(0), Err(Error::InvalidSize(_))));
        assert!(matches!(ring_with_jumps(0), Err(Error::InvalidSize(_))));
        assert!(matches!(
            bidirectional_ring_selffeedback(0),
            Err(Error::InvalidSize(_))
        ));
    }

    #[test]
    fn jumps_reduce_to_ring_for_small_n() {
        for n in 1..=4 {
            assert_eq!(ring_with_jumps(n).unwrap(), unidirectional_ring(n).unwrap());
        }
    }

    #[test]
    fn jumps_n8_adds_two_links() {
        // Sources k ∈ {0, 4}: extra entries at (4,0) and (0,4).
        let m = ring_with_jumps(8).unwrap();
        let ring = unidirectional_ring(8).unwrap();
        for k in 0..8 {
            for l in 0..8 {
                let expected = if (k, l) == (4, 0) || (k, l) == (0, 4) {
                    1.0
                } else {
                    ring.get(k, l)
                };
                assert_eq!(m.get(k, l), expected, "entry ({k},{l})");
            }
        }
    }

    #[test]
    fn bidirectional_n3() {
        let m = bidirectional_ring_selffeedback(3).unwrap();
        let expected = [[-2.0, 1.0, 1.0], [1.0, -2.0, 1.0], [1.0, 1.0, -2.0]];
        for k in 0..3 {
            assert_eq!(m.row(k), &expected[k]);
        }
    }

    #[test]
    fn bidirectional_n2_merges_parallel_links() {
        let m = bidirectional_ring_selffeedback(2).unwrap();
        assert_eq!(m.row(0), &[-2.0, 2.0]);
        assert_eq!(m.row(1), &[2.0, -2.0]);
    }

    #[test]
    fn bidirectional_n1_collapses_to_zero() {
        let m = bidirectional_ring_selffeedback(1).unwrap();
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn edge_list_roundtrip_with_header() {
        let m = ring_with_jumps(8).unwrap();
        let text = m.to_edge_list();
        assert!(text.starts_with("# nodes 8\n"));
        let back = AdjacencyMatrix::from_edge_list(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn edge_list_infers_size_without_header() {
        let back = AdjacencyMatrix::from_edge_list("0 1 1.0\n1 0 -2.5\n").unwrap();
        assert_eq!(back.node_count(), 2);
        assert_eq!(back.get(1, 0), -2.5);
    }

    #[test]
    fn edge_list_rejects_garbage() {
        assert!(AdjacencyMatrix::from_edge_list("0 1\n").is_err());
        assert!(AdjacencyMatrix::from_edge_list("0 x 1.0\n").is_err());
    }

    proptest! {
        #[test]
        fn ring_is_permutation_matrix(n in 1usize..40) {
            let m = unidirectional_ring(n).unwrap();
            for k in 0..n {
                let row_nnz = (0..n).filter(|&l| m.get(k, l) != 0.0).count();
                let col_nnz = (0..n).filter(|&l| m.get(l, k) != 0.0).count();
                prop_assert_eq!(row_nnz, 1);
                prop_assert_eq!(col_nnz, 1);
            }
        }

        #[test]
        fn bidirectional_rows_sum_to_zero(n in 2usize..40) {
            let m = bidirectional_ring_selffeedback(n).unwrap();
            for k in 0..n {
                let s: f64 = m.row(k).iter().sum();
                prop_assert!(s.abs() < 1e-12);
                // Symmetric by construction.
                for l in 0..n {
                    prop_assert_eq!(m.get(k, l), m.get(l, k));
                }
            }
        }

        #[test]
        fn jump_entries_follow_rule(n in 5usize..60) {
            // Entry-wise oracle: G[k][l] = 1 iff l is k's ring predecessor, or
            // l is a jump source (l ≡ 0 mod 4) landing on k = (l+4) mod n.
            let m = ring_with_jumps(n).unwrap();
            for k in 0..n {
                for l in 0..n {
                    let ring_link = l == (k + n - 1) % n;
                    let jump_link = l % 4 == 0 && k == (l + 4) % n;
                    let expected = if ring_link || jump_link { 1.0 } else { 0.0 };
                    prop_assert_eq!(m.get(k, l), expected, "entry ({},{})", k, l);
                }
            }
        }

        #[test]
        fn edge_list_roundtrip(n in 1usize..20, which in 0u8..3) {
            let m = match which {
                0 => unidirectional_ring(n).unwrap(),
                1 => ring_with_jumps(n).unwrap(),
                _ => bidirectional_ring_selffeedback(n).unwrap(),
            };
            let back = AdjacencyMatrix::from_edge_list(&m.to_edge_list()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
