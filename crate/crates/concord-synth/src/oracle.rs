//! Brute-force reference implementations.
//!
//! Everything here favors obviousness over speed: dense matrices, explicit
//! double sums, exhaustive enumeration. Test suites compare the production
//! implementations against these on small instances.

use std::collections::HashMap;

/// Modularity straight from the definition: the full double sum
/// `(1/2m) * sum_ij (A_ij - gamma * k_i * k_j / 2m) * [c_i == c_j]`
/// over a dense adjacency matrix, diagonal included.
pub fn modularity_direct(nodes: u32, edges: &[(u32, u32, f64)], labels: &[u32], gamma: f64) -> f64 {
    let n = nodes as usize;
    assert_eq!(labels.len(), n);
    let mut a = vec![0.0f64; n * n];
    let mut k = vec![0.0f64; n];
    let mut two_m = 0.0f64;
    for &(u, v, w) in edges {
        let (u, v) = (u as usize, v as usize);
        assert!(u != v, "oracle graphs must not contain self-loops");
        a[u * n + v] += w;
        a[v * n + u] += w;
        k[u] += w;
        k[v] += w;
        two_m += 2.0 * w;
    }
    assert!(two_m > 0.0, "modularity undefined on an edgeless graph");
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += a[i * n + j] - gamma * k[i] * k[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Calls `visit` with every partition of `{0, .., n-1}` exactly once,
/// encoded as a label vector in restricted-growth form (label of node 0 is 0,
/// each later label is at most one greater than the max seen so far).
pub fn enumerate_partitions(n: usize, mut visit: impl FnMut(&[u32])) {
    assert!(n >= 1);
    let mut labels = vec![0u32; n];
    // max_below[i] = max label among nodes 0..i.
    let mut max_below = vec![0u32; n];
    visit_rec(0, &mut labels, &mut max_below, &mut visit, n);
}

fn visit_rec(
    i: usize,
    labels: &mut [u32],
    max_below: &mut [u32],
    visit: &mut impl FnMut(&[u32]),
    n: usize,
) {
    if i == n {
        visit(labels);
        return;
    }
    let cap = if i == 0 { 0 } else { max_below[i - 1] + 1 };
    for l in 0..=cap {
        labels[i] = l;
        max_below[i] = if i == 0 { 0 } else { max_below[i - 1].max(l) };
        visit_rec(i + 1, labels, max_below, visit, n);
    }
}

/// Number of partitions of an `n`-set (the Bell number), by counting.
pub fn count_partitions(n: usize) -> u64 {
    let mut c = 0u64;
    enumerate_partitions(n, |_| c += 1);
    c
}

/// Exhaustive search for the modularity-optimal partition. Returns
/// `(best_q, best_labels)`; ties resolved in favor of the first partition
/// visited, which is irrelevant to callers that only compare `best_q`.
pub fn best_partition(nodes: u32, edges: &[(u32, u32, f64)], gamma: f64) -> (f64, Vec<u32>) {
    let n = nodes as usize;
    let mut best_q = f64::NEG_INFINITY;
    let mut best = vec![0u32; n];
    enumerate_partitions(n, |labels| {
        let q = modularity_direct(nodes, edges, labels, gamma);
        if q > best_q {
            best_q = q;
            best.copy_from_slice(labels);
        }
    });
    (best_q, best)
}

/// Textbook NMI with arithmetic-mean normalization, built from explicit
/// member sets and set intersections.
///
/// Conventions for degenerate inputs: if both partitions are single-block,
/// returns 1; if exactly one is, returns 0.
pub fn nmi_reference(a: &[u32], b: &[u32]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let blocks = |labels: &[u32]| -> Vec<Vec<usize>> {
        let mut m: HashMap<u32, Vec<usize>> = HashMap::new();
        for (i, &l) in labels.iter().enumerate() {
            m.entry(l).or_default().push(i);
        }
        let mut v: Vec<_> = m.into_values().collect();
        v.sort();
        v
    };
    let ba = blocks(a);
    let bb = blocks(b);
    let entropy = |bs: &[Vec<usize>]| -> f64 {
        bs.iter()
            .map(|blk| {
                let p = blk.len() as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let ha = entropy(&ba);
    let hb = entropy(&bb);
    if ba.len() == 1 && bb.len() == 1 {
        return 1.0;
    }
    if ba.len() == 1 || bb.len() == 1 {
        return 0.0;
    }
    let mut mi = 0.0;
    for x in &ba {
        for y in &bb {
            let inter = x.iter().filter(|i| y.contains(i)).count();
            if inter > 0 {
                let pxy = inter as f64 / n;
                let px = x.len() as f64 / n;
                let py = y.len() as f64 / n;
                mi += pxy * (pxy / (px * py)).ln();
            }
        }
    }
    (2.0 * mi / (ha + hb)).clamp(0.0, 1.0)
}

/// Connected-component labels via union-find, smallest-index component
/// first. Labels are dense, in order of each component's minimum node.
pub fn components(nodes: u32, edges: &[(u32, u32, f64)]) -> Vec<u32> {
    let n = nodes as usize;
    let mut parent: Vec<u32> = (0..nodes).collect();
    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }
    for &(u, v, _) in edges {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru != rv {
            // Attach the larger root to the smaller so roots stay minimal.
            let (lo, hi) = if ru < rv { (ru, rv) } else { (rv, ru) };
            parent[hi as usize] = lo;
        }
    }
    let mut label_of_root: HashMap<u32, u32> = HashMap::new();
    let mut labels = vec![0u32; n];
    for i in 0..nodes {
        let r = find(&mut parent, i);
        let next = label_of_root.len() as u32;
        labels[i as usize] = *label_of_root.entry(r).or_insert(next);
    }
    labels
}

/// Spearman rank correlation: average ranks for ties, then a plain Pearson
/// correlation of the rank vectors. `None` when either input is constant.
pub fn spearman_reference(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return None;
    }
    let rank = |v: &[f64]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut ranks = vec![0.0; n];
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &ii in &idx[i..=j] {
                ranks[ii] = avg;
            }
            i = j + 1;
        }
        ranks
    };
    let rx = rank(x);
    let ry = rank(y);
    let mean = (n as f64 + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let dx = rx[i] - mean;
        let dy = ry[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers_match() {
        // B(1..8) = 1, 2, 5, 15, 52, 203, 877, 4140.
        let expect = [1u64, 2, 5, 15, 52, 203, 877, 4140];
        for (i, &b) in expect.iter().enumerate() {
            assert_eq!(count_partitions(i + 1), b);
        }
    }

    #[test]
    fn enumeration_yields_distinct_canonical_labelings() {
        let mut seen = std::collections::HashSet::new();
        enumerate_partitions(5, |labels| {
            assert_eq!(labels[0], 0);
            assert!(seen.insert(labels.to_vec()));
        });
        assert_eq!(seen.len(), 52);
    }

    #[test]
    fn direct_modularity_on_a_single_edge() {
        // One edge, both nodes together: Q = 1/1 - ((1+1)/2)^2 / 1 ... easier:
        // w_in/m - (d/2m)^2 summed over the single community = 1 - 1 = 0.
        let edges = [(0u32, 1u32, 1.0f64)];
        let q = modularity_direct(2, &edges, &[0, 0], 1.0);
        assert!((q - 0.0).abs() < 1e-15);
        // Split: each singleton contributes -(1/2)^2, so Q = -1/2.
        let q2 = modularity_direct(2, &edges, &[0, 1], 1.0);
        assert!((q2 + 0.5).abs() < 1e-15);
    }

    #[test]
    fn nmi_reference_analytic_cases() {
        assert_eq!(nmi_reference(&[0, 0, 1, 1], &[1, 1, 0, 0]), 1.0);
        let v = nmi_reference(&[0, 0, 1, 1], &[0, 1, 0, 1]);
        assert!(v.abs() < 1e-12, "crossed halves should carry no information, got {v}");
        assert_eq!(nmi_reference(&[0, 0, 0, 0], &[0, 0, 0, 0]), 1.0);
        assert_eq!(nmi_reference(&[0, 0, 0, 0], &[0, 1, 2, 3]), 0.0);
    }

    #[test]
    fn components_label_in_min_index_order() {
        let edges = [(3u32, 4u32, 1.0f64), (0, 1, 1.0)];
        assert_eq!(components(5, &edges), vec![0, 0, 1, 2, 2]);
    }

    #[test]
    fn spearman_reference_basics() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [10.0, 20.0, 30.0, 40.0];
        assert!((spearman_reference(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let yr = [40.0, 30.0, 20.0, 10.0];
        assert!((spearman_reference(&x, &yr).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(spearman_reference(&x, &[5.0, 5.0, 5.0, 5.0]), None);
    }
}
