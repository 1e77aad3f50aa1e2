//! Direct level-set computations on the mesh graph, independent of the tree
//! construction.  These are the reference answers the tree is tested against.

use super::build::UnionFind;
use crate::geometry::ScalarField;
use crate::{Error, Result};

/// Connected components of {F ≤ c} and {F ≥ c} over mesh vertices
/// (edge-connectivity), as summed vertex weights sorted largest first.
pub fn brute_force_components(field: &ScalarField, c: f64) -> (Vec<f64>, Vec<f64>) {
    (
        component_areas(field, |v| v <= c),
        component_areas(field, |v| v >= c),
    )
}

fn component_areas(field: &ScalarField, keep: impl Fn(f64) -> bool) -> Vec<f64> {
    let mesh = field.mesh();
    let values = field.values();
    let n = mesh.n_vertices();
    let mut uf = UnionFind::new(n);
    for v in 0..n {
        if !keep(values[v]) {
            continue;
        }
        for &u in mesh.neighbors(v) {
            if (u as usize) < v && keep(values[u as usize]) {
                uf.union(u, v as u32);
            }
        }
    }
    let mut mass = vec![0.0; n];
    for v in 0..n {
        if keep(values[v]) {
            mass[uf.find(v as u32) as usize] += mesh.vertex_weights()[v];
        }
    }
    let mut areas: Vec<f64> = (0..n)
        .filter(|&v| keep(values[v]) && uf.find(v as u32) as usize == v)
        .map(|v| mass[v])
        .collect();
    areas.sort_by(|a, b| b.total_cmp(a));
    areas
}

/// Whether the weighted median region of the cut at `c` lies on the high
/// side.  Regions are the components of {F ≤ c} and {F > c}; on a genus-0
/// mesh their adjacency graph is a tree, and the median region is the one
/// minimizing the largest complementary branch weight.  As `c` rises the
/// median flips from high to low exactly once, which is what the level
/// bisection exploits.
pub(crate) fn region_median_is_high(field: &ScalarField, c: f64) -> Result<bool> {
    let mesh = field.mesh();
    let values = field.values();
    let weights = mesh.vertex_weights();
    let n = mesh.n_vertices();

    let low = |v: usize| values[v] <= c;
    let mut uf = UnionFind::new(n);
    for v in 0..n {
        for &u in mesh.neighbors(v) {
            let u = u as usize;
            if u < v && low(u) == low(v) {
                uf.union(u as u32, v as u32);
            }
        }
    }

    let mut region_id = vec![usize::MAX; n];
    let mut region_mass: Vec<f64> = Vec::new();
    let mut region_high: Vec<bool> = Vec::new();
    for (v, &weight) in weights.iter().enumerate() {
        let root = uf.find(v as u32) as usize;
        if region_id[root] == usize::MAX {
            region_id[root] = region_mass.len();
            region_mass.push(0.0);
            region_high.push(!low(root));
        }
        region_mass[region_id[root]] += weight;
    }
    let region_of = |uf: &mut UnionFind, v: usize| region_id[uf.find(v as u32) as usize];

    let mut edges: Vec<(usize, usize)> = Vec::new();
    for v in 0..n {
        for &u in mesh.neighbors(v) {
            let u = u as usize;
            if u < v && low(u) != low(v) {
                let a = region_of(&mut uf, u);
                let b = region_of(&mut uf, v);
                edges.push((a.min(b), a.max(b)));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();

    let r = region_mass.len();
    if edges.len() != r - 1 {
        return Err(Error::Topology(format!(
            "{r} regions with {} adjacencies do not form a tree",
            edges.len()
        )));
    }
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); r];
    for (i, &(a, b)) in edges.iter().enumerate() {
        adj[a].push((b, i));
        adj[b].push((a, i));
    }

    // Subtree masses from a rooted traversal give, per region, the largest
    // complementary branch.
    let mut parent = vec![usize::MAX; r];
    let mut parent_edge = vec![usize::MAX; r];
    let mut bfs = vec![0usize];
    let mut seen = vec![false; r];
    seen[0] = true;
    let mut head = 0;
    while head < bfs.len() {
        let x = bfs[head];
        head += 1;
        for &(y, e) in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                parent[y] = x;
                parent_edge[y] = e;
                bfs.push(y);
            }
        }
    }
    if bfs.len() != r {
        return Err(Error::Topology("region graph is disconnected".into()));
    }
    let total: f64 = region_mass.iter().sum();
    let mut below = region_mass.clone();
    for &x in bfs.iter().rev() {
        if parent[x] != usize::MAX {
            below[parent[x]] += below[x];
        }
    }
    let mut best = (f64::INFINITY, 0usize);
    for x in 0..r {
        let mut worst = 0.0_f64;
        for &(y, e) in &adj[x] {
            let branch = if parent_edge[y] == e {
                below[y]
            } else {
                total - below[x]
            };
            worst = worst.max(branch);
        }
        if worst < best.0 {
            best = (worst, x);
        }
    }
    Ok(region_high[best.1])
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{sample_field, SphereMesh};

    #[test]
    fn median_region_flips_once_along_the_height_field() {
        let m = Arc::new(SphereMesh::build_icosphere(3).unwrap());
        let f = sample_field(&m, |p| p.z).unwrap();
        let mut flips = 0;
        let mut prev = region_median_is_high(&f, -0.95).unwrap();
        assert!(prev, "just above the minimum the high side dominates");
        for i in 1..40 {
            let c = -0.95 + 1.9 * (i as f64) / 39.0;
            let cur = region_median_is_high(&f, c).unwrap();
            if cur != prev {
                flips += 1;
                prev = cur;
            }
        }
        assert!(!prev, "just below the maximum the low side dominates");
        assert_eq!(flips, 1);
    }

    #[test]
    fn caps_count_as_separate_superlevel_components() {
        let m = Arc::new(SphereMesh::build_icosphere(3).unwrap());
        let f = sample_field(&m, |p| p.x * p.x).unwrap();
        let (sub, sup) = brute_force_components(&f, 0.25);
        assert_eq!(sub.len(), 1);
        assert_eq!(sup.len(), 2);
        let total: f64 = sub.iter().chain(sup.iter()).sum();
        // Overlap at equality is allowed, so the total can exceed 1 slightly.
        assert!(total >= 1.0 - 1e-10);
    }
}
