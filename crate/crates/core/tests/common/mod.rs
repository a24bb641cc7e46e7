//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stylo_core::cluster::{Dendrogram, Linkage};
use stylo_core::features::{FeatureMatrix, Scale};
use stylo_core::metrics::{DistanceMatrix, Measure};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("d{i:02}")).collect()
}

/// Symmetric matrix with zero diagonal and off-diagonal entries in [0.1, 1).
pub fn random_dissimilarity(rng: &mut ChaCha8Rng, n: usize) -> DistanceMatrix {
    let mut v = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let x = rng.random_range(0.1..1.0);
            v[[i, j]] = x;
            v[[j, i]] = x;
        }
    }
    DistanceMatrix::new(ids(n), v, Measure::Euclidean).unwrap()
}

/// Relative-frequency-like matrix with every column varying.
pub fn random_frequencies(rng: &mut ChaCha8Rng, docs: usize, features: usize) -> FeatureMatrix {
    loop {
        let mut v = Array2::zeros((docs, features));
        for x in v.iter_mut() {
            *x = if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.0..0.05) };
        }
        let varying = (0..features).all(|j| {
            let c = v.column(j);
            c.iter().any(|&x| x != c[0])
        });
        if varying {
            return FeatureMatrix::new(
                ids(docs),
                (0..features).map(|j| format!("f{j:03}")).collect(),
                v,
                Scale::RelativeFrequency,
            )
            .unwrap();
        }
    }
}

/// One merge as (members of one side, members of the other, height), sides
/// sorted so the comparison is order-free.
pub type OracleMerge = (Vec<usize>, Vec<usize>, f64);

fn canonical(a: Vec<usize>, b: Vec<usize>, h: f64) -> OracleMerge {
    if a[0] < b[0] {
        (a, b, h)
    } else {
        (b, a, h)
    }
}

/// Ward merges recomputed from scratch at every step.
///
/// The linkage between clusters A and B is
/// `|A||B| / (|A| + |B|) · (2·mean_{A×B} w − mean_{A×A} w − mean_{B×B} w)`
/// with `w = d²` (squared mode, height `sqrt`) or `w = d` (raw mode). The
/// means run over ordered pairs, diagonal included.
pub fn ward_oracle(d: &DistanceMatrix, linkage: Linkage) -> Vec<OracleMerge> {
    let n = d.len();
    let w = |i: usize, j: usize| match linkage {
        Linkage::WardSquared => d.get(i, j).powi(2),
        Linkage::WardRaw => d.get(i, j),
    };
    let mean_between = |a: &[usize], b: &[usize]| {
        let mut s = 0.0;
        for &i in a {
            for &j in b {
                s += w(i, j);
            }
        }
        s / (a.len() * b.len()) as f64
    };
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut out = Vec::new();
    while clusters.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for x in 0..clusters.len() {
            for y in (x + 1)..clusters.len() {
                let (a, b) = (&clusters[x], &clusters[y]);
                let (na, nb) = (a.len() as f64, b.len() as f64);
                let link = na * nb / (na + nb) * (2.0 * mean_between(a, b) - mean_between(a, a) - mean_between(b, b));
                if best.is_none_or(|(v, _, _)| link < v) {
                    best = Some((link, x, y));
                }
            }
        }
        let (link, x, y) = best.unwrap();
        let b = clusters.remove(y);
        let a = clusters.remove(x);
        let height = match linkage {
            Linkage::WardSquared => link.max(0.0).sqrt(),
            Linkage::WardRaw => link,
        };
        let mut joined = a.clone();
        joined.extend(&b);
        joined.sort_unstable();
        out.push(canonical(a, b, height));
        clusters.push(joined);
    }
    out
}

/// Merges of a dendrogram in the oracle's representation.
pub fn dendrogram_merges(dend: &Dendrogram) -> Vec<OracleMerge> {
    let members = dend.node_members();
    dend.merges.iter().map(|m| canonical(members[m.left].clone(), members[m.right].clone(), m.height)).collect()
}

/// Greedy minimum-increase-of-within-cluster-sum-of-squares clustering of
/// points, reporting each merge's increase.
pub fn ward_by_variance(points: &[Vec<f64>]) -> Vec<(Vec<usize>, Vec<usize>, f64)> {
    let ess = |members: &[usize]| {
        let dim = points[0].len();
        let mut c = vec![0.0; dim];
        for &i in members {
            for k in 0..dim {
                c[k] += points[i][k];
            }
        }
        c.iter_mut().for_each(|x| *x /= members.len() as f64);
        members.iter().map(|&i| (0..dim).map(|k| (points[i][k] - c[k]).powi(2)).sum::<f64>()).sum::<f64>()
    };
    let mut clusters: Vec<Vec<usize>> = (0..points.len()).map(|i| vec![i]).collect();
    let mut out = Vec::new();
    while clusters.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for x in 0..clusters.len() {
            for y in (x + 1)..clusters.len() {
                let mut u = clusters[x].clone();
                u.extend(&clusters[y]);
                let inc = ess(&u) - ess(&clusters[x]) - ess(&clusters[y]);
                if best.is_none_or(|(v, _, _)| inc < v) {
                    best = Some((inc, x, y));
                }
            }
        }
        let (inc, x, y) = best.unwrap();
        let b = clusters.remove(y);
        let a = clusters.remove(x);
        let mut joined = a.clone();
        joined.extend(&b);
        joined.sort_unstable();
        let (a, b, inc) = canonical(a, b, inc);
        out.push((a, b, inc));
        clusters.push(joined);
    }
    out
}

/// Delta distances with plain loops: column z-scores with the n − 1
/// standard deviation, unit-length rows, then L1.
pub fn delta_oracle(m: &FeatureMatrix) -> Vec<Vec<f64>> {
    let (n, p) = (m.n_docs(), m.n_features());
    let mut z = vec![vec![0.0; p]; n];
    for j in 0..p {
        let mut mean = 0.0;
        for i in 0..n {
            mean += m.values[[i, j]];
        }
        mean /= n as f64;
        let mut ss = 0.0;
        for i in 0..n {
            ss += (m.values[[i, j]] - mean).powi(2);
        }
        let sd = (ss / (n - 1) as f64).sqrt();
        for i in 0..n {
            z[i][j] = (m.values[[i, j]] - mean) / sd;
        }
    }
    for row in &mut z {
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        row.iter_mut().for_each(|x| *x /= norm);
    }
    (0..n).map(|a| (0..n).map(|b| (0..p).map(|k| (z[a][k] - z[b][k]).abs()).sum()).collect()).collect()
}

/// Between-group over total sum of squares, computed group by group.
pub fn eta_oracle(groups: &[Vec<f64>]) -> (f64, f64, f64) {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = all.len() as f64;
    let grand = all.iter().sum::<f64>() / n;
    let mut between = 0.0;
    let mut within = 0.0;
    for g in groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        between += g.len() as f64 * (m - grand).powi(2);
        within += g.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    let total: f64 = all.iter().map(|x| (x - grand).powi(2)).sum();
    (between / total, between, within)
}

fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    eps: f64,
    whole: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, eps / 2.0, left, fa, flm, fm, depth - 1)
        + adaptive_simpson(f, m, b, eps / 2.0, right, fm, frm, fb, depth - 1)
}

/// Adaptive Simpson over 32 equal panels, so an accidental agreement on
/// the coarsest level cannot stop the refinement early.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, eps: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    const PANELS: usize = 32;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, if i + 1 == PANELS { b } else { a + (i + 1) as f64 * h });
            let (fa, fb, fm) = (f(lo), f(hi), f(0.5 * (lo + hi)));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            adaptive_simpson(&f, lo, hi, eps / PANELS as f64, whole, fa, fm, fb, 50)
        })
        .sum()
}

/// Upper tail of the F(d1, d2) distribution by quadrature of its density.
///
/// The density is proportional to `u^(d1/2 - 1) (d2 + d1 u)^(-(d1+d2)/2)`;
/// with `u = (d2/d1) tan²φ` this becomes `sin^(d1-1) φ · cos^(d2-1) φ` on
/// `[0, π/2)`, which is bounded, so the tail is a ratio of two integrals
/// of that integrand.
pub fn f_tail_oracle(f: f64, d1: u32, d2: u32) -> f64 {
    let g = |phi: f64| phi.sin().powi(d1 as i32 - 1) * phi.cos().powi(d2 as i32 - 1);
    let lower = (d1 as f64 * f / d2 as f64).sqrt().atan();
    let half_pi = std::f64::consts::FRAC_PI_2;
    let total = integrate(g, 0.0, half_pi, 1e-15);
    integrate(g, lower, half_pi, 1e-15) / total
}

/// Partition of ids as a set of member sets.
pub fn partition(labels: &[usize]) -> BTreeSet<Vec<usize>> {
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    groups.into_values().collect()
}
