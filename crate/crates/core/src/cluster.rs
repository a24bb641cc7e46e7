//! Ward agglomerative clustering, agglomerative coefficient and tree cuts.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::DistanceMatrix;

/// Relative tolerance under which two linkage values count as tied.
pub const TIE_RTOL: f64 = 1e-12;

/// Which dissimilarities the Ward recurrence runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Linkage {
    /// Recurrence on squared dissimilarities, heights reported as square
    /// roots (`ward.D2`).
    #[default]
    WardSquared,
    /// Recurrence on the dissimilarities as given (`ward.D`).
    WardRaw,
}

impl FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "ward2" => Ok(Linkage::WardSquared),
            "ward1" => Ok(Linkage::WardRaw),
            other => Err(format!("unknown linkage `{other}`")),
        }
    }
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::WardSquared => "ward2",
            Linkage::WardRaw => "ward1",
        })
    }
}

/// One agglomeration step. Nodes `0..n` are leaves; merge `i` creates node `n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

impl Merge {
    /// Increase in within-cluster sum of squares `n1·n2/(n1+n2)·d²(G1, G2)`
    /// for a squared-input Ward merge on Euclidean input.
    pub fn ward_criterion(&self) -> f64 {
        self.height * self.height / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub leaves: Vec<String>,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Builds a dendrogram from an explicit merge list, checking structure
    /// and height monotonicity.
    pub fn from_merges(leaves: Vec<String>, merges: Vec<Merge>) -> Result<Self> {
        let n = leaves.len();
        if n < 1 || merges.len() + 1 != n {
            return Err(Error::InvalidArgument(format!(
                "{n} leaves need {} merges, got {}",
                n.saturating_sub(1),
                merges.len()
            )));
        }
        let mut used = vec![false; 2 * n - 1];
        let mut sizes: Vec<usize> = vec![1; n];
        for (i, m) in merges.iter().enumerate() {
            let node = n + i;
            for child in [m.left, m.right] {
                if child >= node || used[child] {
                    return Err(Error::InvalidArgument(format!("merge {i} references node {child} illegally")));
                }
                used[child] = true;
            }
            if m.size != sizes[m.left] + sizes[m.right] {
                return Err(Error::InvalidArgument(format!("merge {i} has inconsistent size")));
            }
            if !m.height.is_finite() || m.height < 0.0 {
                return Err(Error::InvalidArgument(format!("merge {i} has invalid height")));
            }
            if i > 0 && m.height < merges[i - 1].height {
                return Err(Error::InvalidArgument(format!("merge {i} decreases the height")));
            }
            sizes.push(m.size);
        }
        Ok(Dendrogram { leaves, merges })
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn root(&self) -> usize {
        2 * self.n_leaves() - 2
    }

    /// Children of an internal node, `None` for leaves.
    pub fn children(&self, node: usize) -> Option<(usize, usize)> {
        let n = self.n_leaves();
        (node >= n).then(|| {
            let m = &self.merges[node - n];
            (m.left, m.right)
        })
    }

    pub fn node_height(&self, node: usize) -> f64 {
        let n = self.n_leaves();
        if node < n {
            0.0
        } else {
            self.merges[node - n].height
        }
    }

    /// Leaves in left-to-right drawing order.
    pub fn leaf_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n_leaves());
        let mut stack = vec![self.root()];
        while let Some(node) = stack.pop() {
            match self.children(node) {
                Some((l, r)) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => out.push(node),
            }
        }
        out
    }

    /// Height of the first merge each leaf takes part in.
    pub fn first_merge_heights(&self) -> Vec<f64> {
        let n = self.n_leaves();
        let mut h = vec![0.0; n];
        for m in &self.merges {
            for c in [m.left, m.right] {
                if c < n {
                    h[c] = m.height;
                }
            }
        }
        h
    }

    /// Leaf ids under every node, in node order.
    pub fn node_members(&self) -> Vec<Vec<usize>> {
        let n = self.n_leaves();
        let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for m in &self.merges {
            let mut joined = members[m.left].clone();
            joined.extend(&members[m.right]);
            joined.sort_unstable();
            members.push(joined);
        }
        members
    }
}

/// Ward clustering of a dissimilarity matrix with the Lance–Williams
/// recurrence.
///
/// Equal linkage values (within [`TIE_RTOL`]) are resolved by merging the
/// pair whose (smaller, larger) representative doc ids sort first, a
/// cluster being represented by its smallest member id.
pub fn ward_cluster(d: &DistanceMatrix, linkage: Linkage) -> Result<Dendrogram> {
    d.validate()?;
    let n = d.len();
    if n < 2 {
        return Err(Error::TooFewDocuments { needed: 2, got: n });
    }
    let mut sorted: Vec<usize> = (0..n).collect();
    sorted.sort_by(|&a, &b| d.doc_ids[a].cmp(&d.doc_ids[b]));
    let mut key = vec![0usize; n];
    for (rank, &i) in sorted.iter().enumerate() {
        key[i] = rank;
        if rank > 0 && d.doc_ids[i] == d.doc_ids[sorted[rank - 1]] {
            return Err(Error::DuplicateId(d.doc_ids[i].clone()));
        }
    }

    let mut w: Vec<f64> = d
        .values
        .iter()
        .map(|&v| match linkage {
            Linkage::WardSquared => v * v,
            Linkage::WardRaw => v,
        })
        .collect();
    let mut node: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);

    while active.len() > 1 {
        let mut min = f64::INFINITY;
        for (ai, &i) in active.iter().enumerate() {
            for &j in &active[ai + 1..] {
                min = min.min(w[i * n + j]);
            }
        }
        let limit = min + TIE_RTOL * min.abs();
        let mut best: Option<((usize, usize), usize, usize)> = None;
        for (ai, &i) in active.iter().enumerate() {
            for &j in &active[ai + 1..] {
                if w[i * n + j] <= limit {
                    let pair = (key[i].min(key[j]), key[i].max(key[j]));
                    if best.is_none_or(|(p, _, _)| pair < p) {
                        best = Some((pair, i, j));
                    }
                }
            }
        }
        let (_, i, j) = best.expect("at least one active pair");
        let (a, b) = if key[i] < key[j] { (i, j) } else { (j, i) };
        let dab = w[a * n + b];
        let height = match linkage {
            Linkage::WardSquared => dab.max(0.0).sqrt(),
            Linkage::WardRaw => dab,
        };
        if let Some(prev) = merges.last().map(|m: &Merge| m.height) {
            assert!(
                height >= prev - 1e-9 * prev.abs().max(1.0),
                "Ward heights must be non-decreasing ({prev} then {height})"
            );
        }
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for &x in &active {
            if x == a || x == b {
                continue;
            }
            let nx = size[x] as f64;
            let updated = ((na + nx) * w[a * n + x] + (nb + nx) * w[b * n + x] - nx * dab) / (na + nb + nx);
            w[a * n + x] = updated;
            w[x * n + a] = updated;
        }
        merges.push(Merge { left: node[a], right: node[b], height, size: size[a] + size[b] });
        node[a] = n + merges.len() - 1;
        size[a] += size[b];
        active.retain(|&x| x != b);
    }
    // Monotonicity is asserted above; clamp rounding-level dips.
    for i in 1..merges.len() {
        if merges[i].height < merges[i - 1].height {
            merges[i].height = merges[i - 1].height;
        }
    }
    Ok(Dendrogram { leaves: d.doc_ids.clone(), merges })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AcMode {
    /// First-merge heights divided by the final merge height.
    #[default]
    Normalized,
    /// First-merge heights used as they are.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgglomerativeCoefficient {
    pub value: f64,
    /// Set when the final merge height is zero and the value is 0 by convention.
    pub degenerate: bool,
}

/// Mean over leaves of `1 - d(i)`, `d(i)` being the height at which leaf `i`
/// is first merged.
pub fn agglomerative_coefficient(dend: &Dendrogram, mode: AcMode) -> Result<AgglomerativeCoefficient> {
    let n = dend.n_leaves();
    if n < 2 {
        return Err(Error::TooFewDocuments { needed: 2, got: n });
    }
    let first = dend.first_merge_heights();
    let scale = match mode {
        AcMode::Normalized => {
            let top = dend.merges.last().expect("n >= 2").height;
            if top <= 0.0 {
                return Ok(AgglomerativeCoefficient { value: 0.0, degenerate: true });
            }
            top
        }
        AcMode::Literal => 1.0,
    };
    let value = first.iter().map(|h| 1.0 - h / scale).sum::<f64>() / n as f64;
    Ok(AgglomerativeCoefficient { value, degenerate: false })
}

/// Cluster label (1-based) per document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub doc_ids: Vec<String>,
    pub labels: Vec<usize>,
    pub k: usize,
}

impl ClusterAssignment {
    /// Builds an assignment from explicit labels, relabelling them 1..k by
    /// smallest member id.
    pub fn from_labels<L: Ord + Clone>(doc_ids: Vec<String>, raw: &[L]) -> Self {
        let mut first: BTreeMap<L, &String> = BTreeMap::new();
        for (id, l) in doc_ids.iter().zip(raw) {
            let e = first.entry(l.clone()).or_insert(id);
            if id < *e {
                *e = id;
            }
        }
        let mut order: Vec<(&String, L)> = first.into_iter().map(|(l, id)| (id, l)).collect();
        order.sort();
        let relabel: BTreeMap<L, usize> = order.into_iter().enumerate().map(|(i, (_, l))| (l, i + 1)).collect();
        let labels: Vec<usize> = raw.iter().map(|l| relabel[l]).collect();
        let k = relabel.len();
        ClusterAssignment { doc_ids, labels, k }
    }

    pub fn label_of(&self, doc_id: &str) -> Option<usize> {
        self.doc_ids.iter().position(|d| d == doc_id).map(|i| self.labels[i])
    }

    pub fn as_map(&self) -> BTreeMap<String, usize> {
        self.doc_ids.iter().cloned().zip(self.labels.iter().copied()).collect()
    }

    /// Member ids of each cluster, label order, ids sorted.
    pub fn clusters(&self) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new(); self.k];
        for (id, &l) in self.doc_ids.iter().zip(&self.labels) {
            out[l - 1].push(id.clone());
        }
        for c in &mut out {
            c.sort();
        }
        out
    }

    /// `doc_id,cluster`
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["doc_id", "cluster"])?;
        for (id, l) in self.doc_ids.iter().zip(&self.labels) {
            w.write_record([id.clone(), l.to_string()])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Removes the `k - 1` last (highest) merges and labels the resulting
/// components 1..k in order of their smallest member id.
pub fn cut(dend: &Dendrogram, k: usize) -> Result<ClusterAssignment> {
    let n = dend.n_leaves();
    if k < 1 || k > n {
        return Err(Error::InvalidArgument(format!("k must lie in 1..={n}, got {k}")));
    }
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, m) in dend.merges.iter().take(n - k).enumerate() {
        let node = n + i;
        let l = find(&mut parent, m.left);
        let r = find(&mut parent, m.right);
        parent[l] = node;
        parent[r] = node;
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut parent, i)).collect();
    Ok(ClusterAssignment::from_labels(dend.leaves.clone(), &roots))
}
