//! Measure-augmented contour trees of scalar fields on the sphere mesh.
//!
//! The level sets of a field on a genus-0 surface organize into a tree whose
//! nodes are critical points and whose edges sweep monotone families of level
//! components.  Each edge here carries the area it sweeps as a cumulative
//! profile, so tree points know how the sphere's measure splits around them.
//! That split is what the median quasi-state reads off.
//!
//! Ties in vertex values are broken by vertex index, so every field behaves
//! like one with distinct critical values.

pub(crate) mod bruteforce;
mod build;

use std::io::Write;

use crate::{Error, Result};

pub use bruteforce::brute_force_components;
pub use build::build_contour_tree;

/// Critical-point classification by tree degree and arc direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Minimum,
    Saddle,
    Maximum,
}

#[derive(Clone, Copy, Debug)]
pub struct TreeNode {
    /// Mesh vertex realizing the critical point.
    pub vertex: usize,
    /// Field value there.
    pub level: f64,
    pub kind: NodeKind,
}

#[derive(Clone, Debug)]
pub struct TreeEdge {
    pub lower: usize,
    pub upper: usize,
    pub profile: AreaProfile,
}

/// A point of the tree: a node, or an interior point of an edge at a level.
///
/// Interior levels normally lie strictly between the edge's endpoint levels;
/// when ties collapse an edge to a single level the endpoints are allowed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TreePoint {
    Node(usize),
    EdgeInterior { edge: usize, level: f64 },
}

/// Cumulative area swept along one tree edge, as a function of level.
///
/// Vertex weights are attributed at their own level, so the underlying data
/// is a step function; the profile interpolates it piecewise-linearly between
/// breakpoints.  Queries that must agree with vertex counting exactly
/// (`mass_at_or_below`) use the step form; the balancing solve and splits use
/// the linear form, which ramps half of each breakpoint's weight through the
/// gap below it and half through the gap above.  Centering the weight keeps
/// the linear form symmetric under negating the field, so medians negate
/// exactly; weight tied at an endpoint of the interval shows up as a jump.
#[derive(Clone, Debug)]
pub struct AreaProfile {
    /// (level, cumulative mass at or below), levels strictly increasing.
    points: Vec<(f64, f64)>,
    lo: f64,
    hi: f64,
    total: f64,
}

impl AreaProfile {
    /// `samples` are (level, weight) contributions; levels must lie in [lo, hi].
    pub(crate) fn from_samples(mut samples: Vec<(f64, f64)>, lo: f64, hi: f64) -> Self {
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut points: Vec<(f64, f64)> = Vec::with_capacity(samples.len());
        let mut cum = 0.0;
        for (level, weight) in samples {
            cum += weight;
            match points.last_mut() {
                Some(last) if last.0 == level => last.1 = cum,
                _ => points.push((level, cum)),
            }
        }
        AreaProfile {
            points,
            lo,
            hi,
            total: cum,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Breakpoints (level, cumulative area), for export and inspection.
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Step-form mass: total weight attributed at levels ≤ c.
    pub fn mass_at_or_below(&self, c: f64) -> f64 {
        match self.points.partition_point(|p| p.0 <= c) {
            0 => 0.0,
            i => self.points[i - 1].1,
        }
    }

    /// Step-form mass at levels ≥ c.
    pub fn mass_at_or_above(&self, c: f64) -> f64 {
        match self.points.partition_point(|p| p.0 < c) {
            0 => self.total,
            i => self.total - self.points[i - 1].1,
        }
    }

    /// Vertices of the linear form: (lo, 0) and (hi, total) plus one anchor
    /// per breakpoint at the midpoint of its step riser.  Anchors sharing a
    /// level (possible only at lo or hi) form a jump.
    fn anchors(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let head = std::iter::once((self.lo, 0.0));
        let mid = self.points.iter().scan(0.0, |prev, &(l, m)| {
            let half = 0.5 * (*prev + m);
            *prev = m;
            Some((l, half))
        });
        head.chain(mid)
            .chain(std::iter::once((self.hi, self.total)))
    }

    /// Linear-form split of the edge's mass at a cut level: (below, above).
    /// Mass sitting in a jump exactly at `c` belongs to neither side.
    pub fn split_at(&self, c: f64) -> (f64, f64) {
        // Left and right limits of the piecewise-linear cumulative at c;
        // they differ only across a jump.
        let mut left = 0.0;
        let mut right = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for (l, m) in self.anchors() {
            if l < c {
                left = m;
                right = m;
            } else if l == c {
                if prev.is_none_or(|p| p.0 < c) {
                    left = m; // bottom of any jump at c
                }
                right = m; // top of the jump
            } else {
                if let Some((pl, pm)) = prev {
                    if pl < c {
                        let v = pm + (c - pl) / (l - pl) * (m - pm);
                        left = v;
                        right = v;
                    }
                }
                break;
            }
            prev = Some((l, m));
        }
        (left, self.total - right)
    }

    /// Level at which the linear-form cumulative mass reaches `target`.
    /// A target inside a jump resolves to the jump's level.
    pub fn solve_level(&self, target: f64) -> f64 {
        let t = target.clamp(0.0, self.total);
        let mut prev = (self.lo, 0.0);
        for (l, m) in self.anchors() {
            if m >= t {
                let (pl, pm) = prev;
                if m == pm || l == pl {
                    return l;
                }
                return pl + (t - pm) / (m - pm) * (l - pl);
            }
            prev = (l, m);
        }
        self.hi
    }
}

/// Contour tree with per-edge swept-area profiles.  Total area is 1 for
/// fields on a valid mesh.  Immutable after construction; queries are pure.
#[derive(Clone, Debug)]
pub struct ContourTree {
    nodes: Vec<TreeNode>,
    edges: Vec<TreeEdge>,
    incident: Vec<Vec<usize>>,
    total_area: f64,
}

impl ContourTree {
    pub(crate) fn new(nodes: Vec<TreeNode>, edges: Vec<TreeEdge>) -> Self {
        let mut incident = vec![Vec::new(); nodes.len()];
        let mut total_area = 0.0;
        for (i, e) in edges.iter().enumerate() {
            incident[e.lower].push(i);
            incident[e.upper].push(i);
            total_area += e.profile.total();
        }
        ContourTree {
            nodes,
            edges,
            incident,
            total_area,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[TreeEdge] {
        &self.edges
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    pub fn edge(&self, i: usize) -> &TreeEdge {
        &self.edges[i]
    }

    pub fn incident_edges(&self, node: usize) -> &[usize] {
        &self.incident[node]
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    pub fn point_level(&self, point: TreePoint) -> f64 {
        match point {
            TreePoint::Node(i) => self.nodes[i].level,
            TreePoint::EdgeInterior { level, .. } => level,
        }
    }

    /// Per-edge side masses, excluding the edge's own profile:
    /// (mass on the lower-node side, mass on the upper-node side).
    pub fn side_masses(&self) -> Vec<(f64, f64)> {
        let n = self.nodes.len();
        if self.edges.is_empty() {
            return Vec::new();
        }
        // Root at node 0; away[e] = profile mass strictly beyond e, seen from
        // the root side.
        let mut parent_edge = vec![usize::MAX; n];
        let mut order = Vec::with_capacity(n);
        let mut visited = vec![false; n];
        visited[0] = true;
        order.push(0);
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &e in &self.incident[u] {
                let v = self.other_end(e, u);
                if !visited[v] {
                    visited[v] = true;
                    parent_edge[v] = e;
                    order.push(v);
                }
            }
        }
        let mut away = vec![0.0; self.edges.len()];
        for &u in order.iter().rev().take(n - 1) {
            let pe = parent_edge[u];
            let mut sum = 0.0;
            for &e in &self.incident[u] {
                if e != pe {
                    sum += away[e] + self.edges[e].profile.total();
                }
            }
            away[pe] = sum;
        }
        self.edges
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let p = e.profile.total();
                let near = self.total_area - away[i] - p;
                // `away` is the subtree side; the subtree hangs off whichever
                // endpoint is farther from the root.
                if parent_edge[e.lower] == i {
                    (away[i], near)
                } else {
                    (near, away[i])
                }
            })
            .collect()
    }

    fn other_end(&self, edge: usize, node: usize) -> usize {
        let e = &self.edges[edge];
        if e.lower == node {
            e.upper
        } else {
            e.lower
        }
    }

    /// Areas of the connected components of {F ≤ c}, largest first.
    pub fn sublevel_components(&self, c: f64) -> Vec<f64> {
        self.cross_section(c, true)
    }

    /// Areas of the connected components of {F ≥ c}, largest first.
    pub fn superlevel_components(&self, c: f64) -> Vec<f64> {
        self.cross_section(c, false)
    }

    fn cross_section(&self, c: f64, sublevel: bool) -> Vec<f64> {
        let keep = |i: usize| {
            if sublevel {
                self.nodes[i].level <= c
            } else {
                self.nodes[i].level >= c
            }
        };
        let mut uf = build::UnionFind::new(self.nodes.len());
        for e in &self.edges {
            if keep(e.lower) && keep(e.upper) {
                uf.union(e.lower as u32, e.upper as u32);
            }
        }
        let mut mass = vec![0.0; self.nodes.len()];
        for e in &self.edges {
            let (anchor, kept) = if sublevel {
                (e.lower, keep(e.lower))
            } else {
                (e.upper, keep(e.upper))
            };
            if !kept {
                continue;
            }
            let m = if keep(e.lower) && keep(e.upper) {
                e.profile.total()
            } else if sublevel {
                e.profile.mass_at_or_below(c)
            } else {
                e.profile.mass_at_or_above(c)
            };
            mass[uf.find(anchor as u32) as usize] += m;
        }
        let mut areas: Vec<f64> = (0..self.nodes.len())
            .filter(|&i| keep(i) && uf.find(i as u32) as usize == i)
            .map(|i| mass[i])
            .collect();
        areas.sort_by(|a, b| b.total_cmp(a));
        areas
    }

    /// Structural checks: tree shape, monotone profiles, conserved area,
    /// node kinds consistent with arc directions.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(Error::Topology("empty tree".into()));
        }
        if self.edges.len() != n - 1 {
            return Err(Error::Topology(format!(
                "{} nodes but {} edges",
                n,
                self.edges.len()
            )));
        }
        let mut uf = build::UnionFind::new(n);
        let mut components = n;
        for e in &self.edges {
            if uf.union(e.lower as u32, e.upper as u32) {
                components -= 1;
            }
        }
        if components != 1 {
            return Err(Error::Topology("tree is disconnected".into()));
        }
        if (self.total_area - 1.0).abs() > 1e-8 {
            return Err(Error::Topology(format!(
                "swept area {} differs from 1",
                self.total_area
            )));
        }
        for (i, e) in self.edges.iter().enumerate() {
            let lo = &self.nodes[e.lower];
            let hi = &self.nodes[e.upper];
            if (lo.level, lo.vertex) >= (hi.level, hi.vertex) {
                return Err(Error::Topology(format!("edge {i} is not upward")));
            }
            if e.profile.lo() != lo.level || e.profile.hi() != hi.level {
                return Err(Error::Topology(format!(
                    "edge {i} profile interval disagrees with endpoints"
                )));
            }
            let mut prev_level = f64::NEG_INFINITY;
            let mut prev_cum = 0.0;
            for &(l, m) in e.profile.points() {
                if l <= prev_level || l < lo.level || l > hi.level || m < prev_cum {
                    return Err(Error::Topology(format!("edge {i} profile is not monotone")));
                }
                prev_level = l;
                prev_cum = m;
            }
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let degree = self.incident[i].len();
            let ups = self.incident[i]
                .iter()
                .filter(|&&e| self.edges[e].lower == i)
                .count();
            let ok = match node.kind {
                NodeKind::Minimum => degree == 1 && ups == 1,
                NodeKind::Maximum => degree == 1 && ups == 0,
                // Simple saddles have degree 3; multifold merges can exceed it.
                NodeKind::Saddle => degree >= 3,
            };
            if !ok {
                return Err(Error::Topology(format!(
                    "node {i} kind disagrees with degree"
                )));
            }
        }
        Ok(())
    }
}

/// Largest branch area of the tree minus the given point.
///
/// At an interior point the containing edge's profile splits at the level;
/// mass in a jump exactly there belongs to the point's own component and to
/// no branch.
pub fn complement_max_area(tree: &ContourTree, point: TreePoint) -> Result<f64> {
    let side = tree.side_masses();
    match point {
        TreePoint::Node(i) => {
            if i >= tree.n_nodes() {
                return Err(Error::InvalidArgument(format!("node {i} not in tree")));
            }
            let mut best = 0.0_f64;
            for &e in tree.incident_edges(i) {
                let edge = tree.edge(e);
                let far = if edge.lower == i {
                    side[e].1
                } else {
                    side[e].0
                };
                best = best.max(far + edge.profile.total());
            }
            Ok(best)
        }
        TreePoint::EdgeInterior { edge, level } => {
            if edge >= tree.n_edges() {
                return Err(Error::InvalidArgument(format!("edge {edge} not in tree")));
            }
            let e = tree.edge(edge);
            if level < e.profile.lo() || level > e.profile.hi() {
                return Err(Error::InvalidArgument(format!(
                    "level {level} outside edge {edge}"
                )));
            }
            let (below, above) = e.profile.split_at(level);
            Ok((side[edge].0 + below).max(side[edge].1 + above))
        }
    }
}

/// Writes the tree as text: per node `id level kind`, per edge
/// `lo hi n_samples` followed by `level area` breakpoint pairs.
pub fn export_tree(tree: &ContourTree, out: &mut impl Write) -> Result<()> {
    for (i, n) in tree.nodes().iter().enumerate() {
        let kind = match n.kind {
            NodeKind::Minimum => "min",
            NodeKind::Saddle => "saddle",
            NodeKind::Maximum => "max",
        };
        writeln!(out, "{} {:.16e} {}", i, n.level, kind)?;
    }
    for e in tree.edges() {
        writeln!(out, "{} {} {}", e.lower, e.upper, e.profile.points().len())?;
        for &(level, area) in e.profile.points() {
            writeln!(out, "{:.16e} {:.16e}", level, area)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{sample_field, SphereMesh};

    fn mesh(level: u32) -> Arc<SphereMesh> {
        Arc::new(SphereMesh::build_icosphere(level).unwrap())
    }

    #[test]
    fn profile_split_and_solve_are_consistent() {
        let p = AreaProfile::from_samples(vec![(0.25, 0.3), (0.5, 0.4), (0.75, 0.3)], 0.0, 1.0);
        assert_eq!(p.total(), 1.0);
        // Breakpoint weight straddles its level: half of the 0.4 at 0.5 lies
        // below it, so the split there is exactly even.
        let (below, above) = p.split_at(0.5);
        assert!((below - 0.5).abs() < 1e-15);
        assert!((above - 0.5).abs() < 1e-15);
        assert!((p.split_at(0.25).0 - 0.15).abs() < 1e-15);
        let c = p.solve_level(0.5);
        let (b2, a2) = p.split_at(c);
        assert!((b2 - 0.5).abs() < 1e-12 && (a2 - 0.5).abs() < 1e-12);
        assert_eq!(p.mass_at_or_below(0.5), 0.7);
        assert_eq!(p.mass_at_or_above(0.5), 0.7);
    }

    #[test]
    fn profile_splits_mirror_under_negation() {
        let samples = vec![(0.1, 0.2), (0.34, 0.25), (0.5, 0.15), (0.9, 0.4)];
        let p = AreaProfile::from_samples(samples.clone(), 0.0, 1.0);
        let q =
            AreaProfile::from_samples(samples.iter().map(|&(l, w)| (-l, w)).collect(), -1.0, 0.0);
        for c in [0.05, 0.1, 0.3, 0.34, 0.62, 0.9, 0.97] {
            let (b, a) = p.split_at(c);
            let (nb, na) = q.split_at(-c);
            assert!((b - na).abs() < 1e-15, "c={c}");
            assert!((a - nb).abs() < 1e-15, "c={c}");
        }
        for t in [0.1, 0.4, 0.5, 0.77] {
            assert!((p.solve_level(t) + q.solve_level(1.0 - t)).abs() < 1e-15);
        }
    }

    #[test]
    fn profile_jump_absorbs_tied_mass() {
        // All mass at one level: the split at that level sees none of it.
        let p = AreaProfile::from_samples(vec![(0.3, 1.0)], 0.3, 0.3);
        assert_eq!(p.split_at(0.3), (0.0, 0.0));
        assert_eq!(p.solve_level(0.5), 0.3);
    }

    #[test]
    fn height_field_tree_is_a_single_edge() {
        let m = mesh(4);
        let f = sample_field(&m, |p| p.z).unwrap();
        let tree = build_contour_tree(&f).unwrap();
        tree.validate().unwrap();
        assert_eq!(tree.n_nodes(), 2);
        assert_eq!(tree.n_edges(), 1);
        assert_eq!(tree.node(0).kind, NodeKind::Minimum);
        assert_eq!(tree.node(1).kind, NodeKind::Maximum);
        assert!((tree.node(0).level + 1.0).abs() < 1e-12);
        assert!((tree.node(1).level - 1.0).abs() < 1e-12);
        // Sublevel {z ≤ c} is a cap of area (1+c)/2.
        for c in [-0.5, 0.0, 0.5] {
            let (below, _) = tree.edge(0).profile.split_at(c);
            assert!(
                (below - (1.0 + c) / 2.0).abs() < 0.01,
                "c={c} below={below}"
            );
        }
    }

    #[test]
    fn constant_field_collapses_to_a_single_level() {
        // Index-order tie-breaking manufactures many formal critical vertices
        // out of a flat field, so the node count is mesh-dependent; what must
        // hold is that the whole tree sits at the constant's level.
        let m = mesh(3);
        let f = sample_field(&m, |_| 0.7).unwrap();
        let tree = build_contour_tree(&f).unwrap();
        tree.validate().unwrap();
        assert!((tree.total_area() - 1.0).abs() < 1e-10);
        assert!(tree.nodes().iter().all(|n| n.level == 0.7));
        for e in tree.edges() {
            assert_eq!(e.profile.lo(), 0.7);
            assert_eq!(e.profile.hi(), 0.7);
            assert_eq!(e.profile.solve_level(e.profile.total() / 2.0), 0.7);
        }
        // Cross-sections are closed on both sides, so at the constant's own
        // level each one sees the whole sphere.
        for comps in [
            tree.sublevel_components(0.7),
            tree.superlevel_components(0.7),
        ] {
            assert_eq!(comps.len(), 1);
            assert!((comps[0] - 1.0).abs() < 1e-10);
        }
        assert!(tree.sublevel_components(0.69).is_empty());
        assert!(tree.superlevel_components(0.71).is_empty());
    }

    #[test]
    fn two_bump_field_has_two_maxima_and_a_saddle() {
        // Two peaks of different heights ~88° apart, over a weak linear tilt.
        // The tilt steers the whole far field downhill to one minimum; on a
        // flat background that basin is so shallow that mesh quantization
        // scatters several formal minima across its floor.  Near the peaks
        // and the col the bump slopes dwarf the tilt, so the intended
        // structure — and nothing else — survives discretization.
        let m = mesh(4);
        let c1 = crate::Vec3::new(1.0, 0.15, 0.1).normalized();
        let c2 = crate::Vec3::new(-0.1, 1.0, -0.2).normalized();
        let tilt = (c1 + c2).normalized();
        let f = sample_field(&m, |p| {
            let d1 = p.angle_to(c1);
            let d2 = p.angle_to(c2);
            (-(d1 * d1) / 0.4).exp() + 0.6 * (-(d2 * d2) / 0.3).exp() + 0.05 * p.dot(tilt)
        })
        .unwrap();
        let tree = build_contour_tree(&f).unwrap();
        tree.validate().unwrap();
        assert_eq!(tree.n_nodes(), 4);
        assert_eq!(tree.n_edges(), 3);
        let count = |k: NodeKind| tree.nodes().iter().filter(|n| n.kind == k).count();
        assert_eq!(count(NodeKind::Maximum), 2);
        assert_eq!(count(NodeKind::Saddle), 1);
        assert_eq!(count(NodeKind::Minimum), 1);

        // Cross-check the claimed structure against direct region counting:
        // between the saddle and the lower peak the superlevel set has two
        // pieces; between the minimum and the saddle everything is connected.
        let mut levels: Vec<f64> = tree.nodes().iter().map(|n| n.level).collect();
        levels.sort_by(f64::total_cmp);
        let c_high = 0.5 * (levels[1] + levels[2]);
        let (sub, sup) = brute_force_components(&f, c_high);
        assert_eq!(sup.len(), 2);
        assert_eq!(sub.len(), 1);
        let c_low = 0.5 * (levels[0] + levels[1]);
        let (sub, sup) = brute_force_components(&f, c_low);
        assert_eq!(sup.len(), 1);
        assert_eq!(sub.len(), 1);
    }

    #[test]
    fn cross_sections_match_brute_force_on_a_bumpy_field() {
        let m = mesh(3);
        let f = sample_field(&m, |p| (3.0 * p.x).sin() * (2.0 * p.y).cos() + 0.5 * p.z).unwrap();
        let tree = build_contour_tree(&f).unwrap();
        tree.validate().unwrap();
        for c in [-0.9, -0.3, 0.0, 0.2, 0.8] {
            let (sub, sup) = brute_force_components(&f, c);
            let tsub = tree.sublevel_components(c);
            let tsup = tree.superlevel_components(c);
            assert_eq!(tsub.len(), sub.len(), "sublevel count at c={c}");
            assert_eq!(tsup.len(), sup.len(), "superlevel count at c={c}");
            for (a, b) in tsub.iter().zip(&sub) {
                assert!((a - b).abs() < 1e-8);
            }
            for (a, b) in tsup.iter().zip(&sup) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn saddle_degrees_balance_leaf_count() {
        use rand::SeedableRng;
        let m = mesh(3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..8 {
            let f = crate::fields::random_polynomial(&m, 3, &mut rng);
            let tree = build_contour_tree(&f).unwrap();
            tree.validate().unwrap();
            let leaves = tree
                .nodes()
                .iter()
                .filter(|n| n.kind != NodeKind::Saddle)
                .count();
            let excess: usize = (0..tree.n_nodes())
                .filter(|&i| tree.node(i).kind == NodeKind::Saddle)
                .map(|i| tree.incident_edges(i).len() - 2)
                .sum();
            assert_eq!(excess, leaves - 2);
            assert!((tree.total_area() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn complement_areas_for_the_height_field() {
        let m = mesh(4);
        let f = sample_field(&m, |p| p.z).unwrap();
        let tree = build_contour_tree(&f).unwrap();
        let mid = complement_max_area(
            &tree,
            TreePoint::EdgeInterior {
                edge: 0,
                level: 0.0,
            },
        )
        .unwrap();
        assert!((mid - 0.5).abs() < 0.01);
        let at_max = complement_max_area(&tree, TreePoint::Node(1)).unwrap();
        assert!((at_max - 1.0).abs() < 1e-9);
        let tilted = complement_max_area(
            &tree,
            TreePoint::EdgeInterior {
                edge: 0,
                level: 0.4,
            },
        )
        .unwrap();
        assert!((tilted - 0.7).abs() < 0.01);
        assert!(complement_max_area(&tree, TreePoint::Node(7)).is_err());
        assert!(complement_max_area(
            &tree,
            TreePoint::EdgeInterior {
                edge: 0,
                level: 2.0
            }
        )
        .is_err());
    }

    #[test]
    fn brute_force_component_shapes() {
        let m = mesh(4);
        let z = sample_field(&m, |p| p.z).unwrap();
        // {z ≤ 0} is closed, so the ring of vertices exactly on the equator
        // (weight ≈ 0.03 at this resolution) counts below.
        let (sub, sup) = brute_force_components(&z, 0.0);
        assert_eq!(sub.len(), 1);
        assert_eq!(sup.len(), 1);
        assert!((sub[0] - 0.5).abs() < 0.02);
        assert!((sup[0] - 0.5).abs() < 0.02);
        // Both sides are closed, so the ring's weight appears in each.
        let ring = sub[0] + sup[0] - 1.0;
        assert!(ring > 0.0 && ring < 0.04, "equator ring weight {ring}");

        let (sub, sup) = brute_force_components(&z, -2.0);
        assert!(sub.is_empty());
        assert_eq!(sup.len(), 1);
        assert!((sup[0] - 1.0).abs() < 1e-10);

        let x2 = sample_field(&m, |p| p.x * p.x).unwrap();
        let (sub, sup) = brute_force_components(&x2, 0.25);
        assert_eq!(sub.len(), 1, "band around x = 0");
        assert_eq!(sup.len(), 2, "caps x > 1/2 and x < -1/2");
        for cap in &sup {
            assert!((cap - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn export_lists_nodes_then_edge_samples() {
        let m = mesh(2);
        let f = sample_field(&m, |p| p.z).unwrap();
        let tree = build_contour_tree(&f).unwrap();
        let mut buf = Vec::new();
        export_tree(&tree, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].ends_with("min"));
        assert!(lines[1].ends_with("max"));
        let header: Vec<&str> = lines[2].split_whitespace().collect();
        let n_samples: usize = header[2].parse().unwrap();
        assert_eq!(lines.len(), 3 + n_samples);
        for line in &lines[3..] {
            let pair: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse().unwrap())
                .collect();
            assert_eq!(pair.len(), 2);
        }
    }
}
