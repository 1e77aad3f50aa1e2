//! Icosphere meshes on the unit sphere.
//!
//! The mesh is produced by recursive 4-way midpoint subdivision of a
//! pole-aligned icosahedron, with every vertex pushed back onto the unit
//! sphere. Triangle areas are spherical (l'Huilier) and normalized so the
//! whole sphere has measure 1; vertex weights lump one third of each
//! incident triangle, so they also sum to 1.
//!
//! Subdivision keeps the full level hierarchy: the children of triangle `t`
//! at the next level are `4t..4t+4`, and every child's spherical region is
//! contained in its parent's. Point location therefore walks up the
//! hierarchy from a hint triangle and back down, never scanning the mesh.

mod calculus;
mod field;
mod format;

pub(crate) use calculus::triangle_gradients;
pub use calculus::{ambient_gradient, hamiltonian_vector_field, poisson_bracket};
pub use field::{sample_field, ScalarField, VectorField};
pub use format::{export_mesh, import_mesh};

use crate::{Error, Result, Vec3};

pub(crate) const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Highest supported subdivision level (5.2M faces).
pub const MAX_LEVEL: u32 = 9;

/// Inclusion tolerance for the spherical point-in-triangle sign tests.
/// Slightly negative so points numerically on an edge are accepted by the
/// first triangle tried instead of falling through.
const CONTAINS_TOL: f64 = -1e-12;

/// Triangulated unit sphere with normalized spherical measure.
#[derive(Debug, Clone)]
pub struct SphereMesh {
    vertices: Vec<Vec3>,
    /// Triangle vertex indices per subdivision level; the last entry is the
    /// finest level, in canonical child order.
    level_triangles: Vec<Vec<[u32; 3]>>,
    /// Normalized spherical areas of the finest-level triangles (sum 1).
    triangle_areas: Vec<f64>,
    /// Lumped vertex measures (sum 1).
    vertex_weights: Vec<f64>,
    /// CSR vertex adjacency: `adj_flat[adj_offsets[v]..adj_offsets[v+1]]`.
    adj_offsets: Vec<u32>,
    adj_flat: Vec<u32>,
    subdivision_level: u32,
}

impl SphereMesh {
    /// Builds the icosphere at the given subdivision level.
    ///
    /// Level `k` has `10 * 4^k + 2` vertices and `20 * 4^k` triangles;
    /// level 6 (40 962 vertices) is the default working resolution.
    pub fn build_icosphere(level: u32) -> Result<SphereMesh> {
        if level > MAX_LEVEL {
            return Err(Error::InvalidArgument(format!(
                "subdivision level {level} exceeds maximum {MAX_LEVEL}"
            )));
        }
        let (mut vertices, base) = icosahedron();
        let mut level_triangles = Vec::with_capacity(level as usize + 1);
        level_triangles.push(base);
        for _ in 0..level {
            let next = subdivide(&mut vertices, level_triangles.last().unwrap());
            level_triangles.push(next);
        }
        Self::assemble(vertices, level_triangles, level)
    }

    /// Finishes construction from positions and the triangle hierarchy:
    /// areas, weights, adjacency, and the closed-surface checks.
    fn assemble(
        vertices: Vec<Vec3>,
        level_triangles: Vec<Vec<[u32; 3]>>,
        level: u32,
    ) -> Result<SphereMesh> {
        let triangles = level_triangles.last().unwrap();
        let mut triangle_areas = Vec::with_capacity(triangles.len());
        let mut vertex_weights = vec![0.0; vertices.len()];
        for tri in triangles {
            let [a, b, c] = corner_positions(&vertices, tri);
            let area = spherical_triangle_area(a, b, c) / FOUR_PI;
            triangle_areas.push(area);
            for &v in tri {
                vertex_weights[v as usize] += area / 3.0;
            }
        }
        let (adj_offsets, adj_flat) = build_adjacency(vertices.len(), triangles);

        let mesh = SphereMesh {
            vertices,
            level_triangles,
            triangle_areas,
            vertex_weights,
            adj_offsets,
            adj_flat,
            subdivision_level: level,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Structural invariants: unit vertices, Euler characteristic 2, and
    /// both measures summing to 1.
    pub fn validate(&self) -> Result<()> {
        for (i, v) in self.vertices.iter().enumerate() {
            if !v.is_finite() || (v.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::Topology(format!(
                    "vertex {i} is not on the unit sphere"
                )));
            }
        }
        let v = self.vertices.len() as i64;
        let f = self.triangles().len() as i64;
        let e = self.adj_flat.len() as i64 / 2;
        if v - e + f != 2 {
            return Err(Error::Topology(format!(
                "Euler characteristic {} (V={v} E={e} F={f}), expected 2",
                v - e + f
            )));
        }
        let area_sum: f64 = self.triangle_areas.iter().sum();
        if (area_sum - 1.0).abs() > 1e-10 {
            return Err(Error::Topology(format!(
                "triangle areas sum to {area_sum}, expected 1"
            )));
        }
        let weight_sum: f64 = self.vertex_weights.iter().sum();
        if (weight_sum - 1.0).abs() > 1e-10 {
            return Err(Error::Topology(format!(
                "vertex weights sum to {weight_sum}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn subdivision_level(&self) -> u32 {
        self.subdivision_level
    }

    pub fn vertex(&self, v: usize) -> Vec3 {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    /// Finest-level triangles in canonical subdivision order.
    pub fn triangles(&self) -> &[[u32; 3]] {
        self.level_triangles.last().unwrap()
    }

    /// Normalized spherical triangle areas (finest level, sum 1).
    pub fn triangle_areas(&self) -> &[f64] {
        &self.triangle_areas
    }

    /// Lumped vertex measures (sum 1).
    pub fn vertex_weights(&self) -> &[f64] {
        &self.vertex_weights
    }

    /// Vertices sharing an edge with `v`.
    pub fn neighbors(&self, v: usize) -> &[u32] {
        let lo = self.adj_offsets[v] as usize;
        let hi = self.adj_offsets[v + 1] as usize;
        &self.adj_flat[lo..hi]
    }

    pub fn corner_positions(&self, tri: usize) -> [Vec3; 3] {
        corner_positions(&self.vertices, &self.triangles()[tri])
    }

    /// Finds the finest-level triangle whose spherical projection contains
    /// the direction `dir`. `hint` warm-starts the search.
    pub fn locate(&self, dir: Vec3, hint: Option<usize>) -> Result<usize> {
        if !dir.is_finite() || dir.norm_sq() < 1e-300 {
            return Err(Error::PointLocation(format!(
                "direction {dir:?} is not usable"
            )));
        }
        let u = dir.normalized();
        Ok(self.locate_unit(u, hint.unwrap_or(0).min(self.triangles().len() - 1)))
    }

    /// Point location for a unit vector, infallible. Tries the hint, climbs
    /// the subdivision hierarchy until an ancestor contains `u`, then
    /// descends picking the best child per level.
    pub(crate) fn locate_unit(&self, u: Vec3, hint: usize) -> usize {
        let finest = self.subdivision_level as usize;
        if self.min_det(finest, hint, u) >= CONTAINS_TOL {
            return hint;
        }
        let mut t = hint;
        for level in (0..finest).rev() {
            t >>= 2;
            if self.min_det(level, t, u) >= CONTAINS_TOL {
                return self.descend(level, t, u);
            }
        }
        // Base scan: the 20 icosahedron faces tile the sphere, so the one
        // with the largest worst-case side wins even on an edge.
        let base = (0..self.level_triangles[0].len())
            .max_by(|&a, &b| self.min_det(0, a, u).total_cmp(&self.min_det(0, b, u)))
            .unwrap();
        self.descend(0, base, u)
    }

    fn descend(&self, mut level: usize, mut t: usize, u: Vec3) -> usize {
        let finest = self.subdivision_level as usize;
        while level < finest {
            let first = 4 * t;
            let mut best = first;
            let mut best_det = f64::NEG_INFINITY;
            for child in first..first + 4 {
                let d = self.min_det(level + 1, child, u);
                if d >= CONTAINS_TOL {
                    best = child;
                    break;
                }
                if d > best_det {
                    best_det = d;
                    best = child;
                }
            }
            t = best;
            level += 1;
        }
        t
    }

    /// Smallest of the three oriented edge-plane tests for `u` against a
    /// triangle; nonnegative means `u` is inside its spherical region.
    fn min_det(&self, level: usize, t: usize, u: Vec3) -> f64 {
        let [a, b, c] = corner_positions(&self.vertices, &self.level_triangles[level][t]);
        let d0 = a.cross(b).dot(u);
        let d1 = b.cross(c).dot(u);
        let d2 = c.cross(a).dot(u);
        d0.min(d1).min(d2)
    }

    /// Barycentric coordinates of the radial projection of `u` onto the
    /// (flat) triangle `t`. Values may fall slightly outside [0,1] when `u`
    /// sits on an edge of the spherical region.
    pub(crate) fn barycentric(&self, t: usize, u: Vec3) -> [f64; 3] {
        let [a, b, c] = self.corner_positions(t);
        let n = (b - a).cross(c - a);
        let nn = n.norm_sq();
        let denom = n.dot(u);
        // The ray meets the triangle plane at y = u * (n.a / n.u); for a
        // located triangle denom is bounded away from 0.
        let y = u * (n.dot(a) / denom);
        let l0 = n.dot((b - y).cross(c - y)) / nn;
        let l1 = n.dot((c - y).cross(a - y)) / nn;
        [l0, l1, 1.0 - l0 - l1]
    }

    /// Raw constructor for imported meshes; callers supply the canonical
    /// triangle hierarchy implicitly through the finest-level ordering.
    pub(crate) fn from_parts(
        vertices: Vec<Vec3>,
        level_triangles: Vec<Vec<[u32; 3]>>,
        level: u32,
    ) -> Result<SphereMesh> {
        Self::assemble(vertices, level_triangles, level)
    }

    #[cfg(test)]
    pub(crate) fn corrupt_vertex_for_test(&mut self, v: usize, p: Vec3) {
        self.vertices[v] = p;
    }
}

fn corner_positions(vertices: &[Vec3], tri: &[u32; 3]) -> [Vec3; 3] {
    [
        vertices[tri[0] as usize],
        vertices[tri[1] as usize],
        vertices[tri[2] as usize],
    ]
}

/// Spherical triangle area on the unit sphere via l'Huilier's theorem.
fn spherical_triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let sa = b.angle_to(c);
    let sb = c.angle_to(a);
    let sc = a.angle_to(b);
    let s = 0.5 * (sa + sb + sc);
    let t =
        (0.5 * s).tan() * (0.5 * (s - sa)).tan() * (0.5 * (s - sb)).tan() * (0.5 * (s - sc)).tan();
    4.0 * t.max(0.0).sqrt().atan()
}

/// Pole-aligned icosahedron: poles at z = +-1, two pentagonal rings at
/// z = +-1/sqrt(5). All faces wind counterclockwise seen from outside.
fn icosahedron() -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let h = 1.0 / 5.0_f64.sqrt();
    let r = 2.0 * h;
    let mut vertices = Vec::with_capacity(12);
    vertices.push(Vec3::Z);
    for i in 0..5 {
        let phi = 2.0 * std::f64::consts::PI * i as f64 / 5.0;
        vertices.push(Vec3::new(r * phi.cos(), r * phi.sin(), h));
    }
    for i in 0..5 {
        let phi = 2.0 * std::f64::consts::PI * (i as f64 + 0.5) / 5.0;
        vertices.push(Vec3::new(r * phi.cos(), r * phi.sin(), -h));
    }
    vertices.push(-Vec3::Z);

    let up = |i: u32| 1 + i % 5;
    let dn = |i: u32| 6 + i % 5;
    let mut faces = Vec::with_capacity(20);
    for i in 0..5u32 {
        faces.push([0, up(i), up(i + 1)]);
        faces.push([up(i), dn(i), up(i + 1)]);
        faces.push([up(i + 1), dn(i), dn(i + 1)]);
        faces.push([11, dn(i + 1), dn(i)]);
    }
    (vertices, faces)
}

/// One 4-way midpoint subdivision step. New midpoint vertices are appended
/// (normalized to the sphere), children of triangle `t` land at `4t..4t+4`.
fn subdivide(vertices: &mut Vec<Vec3>, triangles: &[[u32; 3]]) -> Vec<[u32; 3]> {
    use std::collections::HashMap;
    let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
    let mut next = Vec::with_capacity(triangles.len() * 4);
    for tri in triangles {
        let mut mid = |a: u32, b: u32, vertices: &mut Vec<Vec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let p = (vertices[a as usize] + vertices[b as usize]).normalized();
                vertices.push(p);
                (vertices.len() - 1) as u32
            })
        };
        let [a, b, c] = *tri;
        let ab = mid(a, b, vertices);
        let bc = mid(b, c, vertices);
        let ca = mid(c, a, vertices);
        next.push([a, ab, ca]);
        next.push([ab, b, bc]);
        next.push([ca, bc, c]);
        next.push([ab, bc, ca]);
    }
    next
}

fn build_adjacency(n_vertices: usize, triangles: &[[u32; 3]]) -> (Vec<u32>, Vec<u32>) {
    let mut pairs = Vec::with_capacity(triangles.len() * 6);
    for tri in triangles {
        let [a, b, c] = *tri;
        pairs.push((a, b));
        pairs.push((b, a));
        pairs.push((b, c));
        pairs.push((c, b));
        pairs.push((c, a));
        pairs.push((a, c));
    }
    pairs.sort_unstable();
    pairs.dedup();
    let mut offsets = vec![0u32; n_vertices + 1];
    for &(a, _) in &pairs {
        offsets[a as usize + 1] += 1;
    }
    for i in 0..n_vertices {
        offsets[i + 1] += offsets[i];
    }
    let flat = pairs.into_iter().map(|(_, b)| b).collect();
    (offsets, flat)
}
