//! Contour-tree construction: join/split union-find sweeps over the
//! (value, index) order, leaf-plucking merge, then reduction of regular
//! chains into measured edges.

use super::{AreaProfile, ContourTree, NodeKind, TreeEdge, TreeNode};
use crate::geometry::ScalarField;
use crate::{Error, Result};

pub(crate) struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let up = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = up;
            x = up;
        }
        x
    }

    /// Merges the two classes; returns false if already joined.
    pub(crate) fn union(&mut self, a: u32, b: u32) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return false;
        }
        self.parent[ra as usize] = rb;
        true
    }
}

/// Builds the measure-augmented contour tree of `field`.
///
/// Vertices are ordered by (value, index); the join and split sweeps record
/// how sublevel and superlevel components merge, and leaf plucking combines
/// the two trees.  Regular chains are then collapsed into edges whose
/// profiles carry the chain's vertex weights; each critical vertex's weight
/// goes to a single incident edge (extrema to their only edge, saddles to
/// their lone opposite-side edge).
pub fn build_contour_tree(field: &ScalarField) -> Result<ContourTree> {
    let mesh = field.mesh();
    let n = mesh.n_vertices();
    let values = field.values();

    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by(|&a, &b| {
        values[a as usize]
            .total_cmp(&values[b as usize])
            .then(a.cmp(&b))
    });
    let mut rank_of = vec![0u32; n];
    for (r, &v) in order.iter().enumerate() {
        rank_of[v as usize] = r as u32;
    }

    // Closure over the mesh adjacency; lifetimes are simpler with a local fn.
    let sweep = |ascending: bool| {
        let mut uf = UnionFind::new(n);
        let mut top: Vec<u32> = (0..n as u32).collect();
        let mut parent = vec![u32::MAX; n];
        let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
        let ranks: Box<dyn Iterator<Item = usize>> = if ascending {
            Box::new(0..n)
        } else {
            Box::new((0..n).rev())
        };
        for r in ranks {
            let v = order[r];
            for &u in mesh.neighbors(v as usize) {
                let ru = rank_of[u as usize] as usize;
                let processed = if ascending { ru < r } else { ru > r };
                if !processed {
                    continue;
                }
                let root = uf.find(ru as u32);
                let t = top[root as usize];
                if t as usize == r {
                    continue;
                }
                parent[t as usize] = r as u32;
                children[r].push(t);
                uf.union(root, r as u32);
                let nr = uf.find(r as u32);
                top[nr as usize] = r as u32;
            }
        }
        (parent, children)
    };
    let (mut jt_parent, mut jt_children) = sweep(true);
    let (mut st_parent, mut st_children) = sweep(false);

    // Leaf plucking: a rank is removable as a lower leaf when it has no join
    // children and at most one split child (mirrored for upper leaves).  Each
    // removal emits one contour-tree arc.
    let mut alive = vec![true; n];
    let mut remaining = n;
    let mut arcs: Vec<(u32, u32)> = Vec::with_capacity(n.saturating_sub(1));
    let lower_ready =
        |r: usize, jt_c: &[Vec<u32>], st_c: &[Vec<u32>]| jt_c[r].is_empty() && st_c[r].len() <= 1;
    let upper_ready =
        |r: usize, jt_c: &[Vec<u32>], st_c: &[Vec<u32>]| st_c[r].is_empty() && jt_c[r].len() <= 1;
    let mut queue: std::collections::VecDeque<u32> = (0..n as u32)
        .filter(|&r| {
            lower_ready(r as usize, &jt_children, &st_children)
                || upper_ready(r as usize, &jt_children, &st_children)
        })
        .collect();

    while remaining > 1 {
        let r = queue
            .pop_front()
            .ok_or_else(|| Error::Topology("merge queue exhausted early".into()))?
            as usize;
        if !alive[r] {
            continue;
        }
        let as_lower = lower_ready(r, &jt_children, &st_children);
        let as_upper = upper_ready(r, &jt_children, &st_children);
        let mut touched: [u32; 3] = [u32::MAX; 3];
        if as_lower && jt_parent[r] != u32::MAX {
            let w = jt_parent[r] as usize;
            arcs.push((r as u32, w as u32));
            jt_children[w].retain(|&c| c as usize != r);
            touched[0] = w as u32;
            // Splice r out of the split tree.
            let p = st_parent[r];
            if let Some(&c) = st_children[r].first() {
                st_parent[c as usize] = p;
                if p != u32::MAX {
                    let list = &mut st_children[p as usize];
                    let pos = list.iter().position(|&x| x as usize == r).unwrap();
                    list[pos] = c;
                }
                touched[1] = c;
            } else if p != u32::MAX {
                st_children[p as usize].retain(|&c| c as usize != r);
            }
            touched[2] = if p == u32::MAX { u32::MAX } else { p };
        } else if as_upper && st_parent[r] != u32::MAX {
            let w = st_parent[r] as usize;
            arcs.push((w as u32, r as u32));
            st_children[w].retain(|&c| c as usize != r);
            touched[0] = w as u32;
            let p = jt_parent[r];
            if let Some(&c) = jt_children[r].first() {
                jt_parent[c as usize] = p;
                if p != u32::MAX {
                    let list = &mut jt_children[p as usize];
                    let pos = list.iter().position(|&x| x as usize == r).unwrap();
                    list[pos] = c;
                }
                touched[1] = c;
            } else if p != u32::MAX {
                jt_children[p as usize].retain(|&c| c as usize != r);
            }
            touched[2] = if p == u32::MAX { u32::MAX } else { p };
        } else {
            // Not currently removable; it will be requeued when a neighbor is.
            continue;
        }
        alive[r] = false;
        remaining -= 1;
        for t in touched {
            if t != u32::MAX
                && alive[t as usize]
                && (lower_ready(t as usize, &jt_children, &st_children)
                    || upper_ready(t as usize, &jt_children, &st_children))
            {
                queue.push_back(t);
            }
        }
    }
    if arcs.len() != n - 1 {
        return Err(Error::Topology(format!(
            "merge produced {} arcs for {} vertices",
            arcs.len(),
            n
        )));
    }

    reduce(field, &order, &rank_of, &arcs)
}

/// Collapses regular chains of the augmented tree (in rank space) into
/// measured edges between critical nodes.
fn reduce(
    field: &ScalarField,
    order: &[u32],
    rank_of: &[u32],
    arcs: &[(u32, u32)],
) -> Result<ContourTree> {
    let mesh = field.mesh();
    let n = order.len();
    let values = field.values();
    let weights = mesh.vertex_weights();

    let mut up: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut down: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &(a, b) in arcs {
        up[a as usize].push(b);
        down[b as usize].push(a);
    }
    for list in up.iter_mut().chain(down.iter_mut()) {
        list.sort_unstable();
    }

    let is_regular = |r: usize| up[r].len() == 1 && down[r].len() == 1;
    let mut node_id = vec![usize::MAX; n];
    let mut nodes = Vec::new();
    for r in 0..n {
        if !is_regular(r) {
            let kind = if down[r].is_empty() {
                NodeKind::Minimum
            } else if up[r].is_empty() {
                NodeKind::Maximum
            } else {
                NodeKind::Saddle
            };
            node_id[r] = nodes.len();
            let vertex = order[r] as usize;
            nodes.push(TreeNode {
                vertex,
                level: values[vertex],
                kind,
            });
        }
    }

    struct RawEdge {
        lower: usize,
        upper: usize,
        samples: Vec<(f64, f64)>,
    }
    let mut raw: Vec<RawEdge> = Vec::with_capacity(nodes.len().saturating_sub(1));
    let mut up_edges: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    let mut down_edges: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (id, node) in nodes.iter().enumerate() {
        let start = node.vertex;
        for &first in &up[rank_of[start] as usize] {
            let mut samples = Vec::new();
            let mut cur = first as usize;
            while is_regular(cur) {
                let v = order[cur] as usize;
                samples.push((values[v], weights[v]));
                cur = up[cur][0] as usize;
            }
            let upper = node_id[cur];
            let e = raw.len();
            raw.push(RawEdge {
                lower: id,
                upper,
                samples,
            });
            up_edges[id].push(e);
            down_edges[upper].push(e);
        }
    }

    // Critical vertices put their own weight on one incident edge: extrema
    // on their only edge, saddles on the single opposite-side edge.  A saddle
    // with several edges on both sides splits its weight evenly over all of
    // them — the one choice that does not depend on sweep direction, so
    // negating the field mirrors every profile exactly.
    for (id, node) in nodes.iter().enumerate() {
        let v = node.vertex;
        let sample = (values[v], weights[v]);
        match node.kind {
            NodeKind::Minimum => raw[up_edges[id][0]].samples.push(sample),
            NodeKind::Maximum => raw[down_edges[id][0]].samples.push(sample),
            NodeKind::Saddle => {
                if up_edges[id].len() == 1 {
                    raw[up_edges[id][0]].samples.push(sample);
                } else if down_edges[id].len() == 1 {
                    raw[down_edges[id][0]].samples.push(sample);
                } else {
                    let k = (up_edges[id].len() + down_edges[id].len()) as f64;
                    let share = (sample.0, sample.1 / k);
                    for &e in up_edges[id].iter().chain(&down_edges[id]) {
                        raw[e].samples.push(share);
                    }
                }
            }
        }
    }

    let edges: Vec<TreeEdge> = raw
        .into_iter()
        .map(|e| {
            let lo = nodes[e.lower].level;
            let hi = nodes[e.upper].level;
            TreeEdge {
                lower: e.lower,
                upper: e.upper,
                profile: AreaProfile::from_samples(e.samples, lo, hi),
            }
        })
        .collect();

    let tree = ContourTree::new(nodes, edges);
    if (tree.total_area() - 1.0).abs() > 1e-8 {
        return Err(Error::Topology(format!(
            "swept area {} differs from 1",
            tree.total_area()
        )));
    }
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn union_find_tracks_components() {
        let mut uf = UnionFind::new(5);
        assert!(uf.union(0, 1));
        assert!(uf.union(3, 4));
        assert!(!uf.union(1, 0));
        assert_eq!(uf.find(0), uf.find(1));
        assert_ne!(uf.find(0), uf.find(3));
        assert!(uf.union(1, 4));
        assert_eq!(uf.find(0), uf.find(3));
    }
}
