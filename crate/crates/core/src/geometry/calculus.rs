//! First-order calculus on sampled fields.
//!
//! The symplectic form is the standard area form divided by 4*pi (total
//! measure 1). With tangential gradients this gives
//!
//!   {F,G}(p)   = 4*pi * <p, grad F(p) x grad G(p)>
//!   sgrad G(p) = 4*pi * (grad G(p) x p)
//!
//! and the sign convention is fixed by the identity {F,G} = dF(sgrad G),
//! which holds verbatim for the two formulas above. Radial components of
//! the gradients drop out of both expressions, so using projected or raw
//! per-triangle gradients changes nothing.

use super::field::{ScalarField, VectorField};
use super::SphereMesh;
use crate::{Error, Result, Vec3};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Per-vertex tangential gradient of the piecewise-linear interpolant.
///
/// Each triangle knows only the in-plane projection `(I - n n^t) grad f` of
/// the ambient gradient, so area-averaging those projections systematically
/// shortens the tangential part by O(h^2) — visible as a phase lag once the
/// field drives a flow. Solving the weighted moment system
///
///   sum_T w_T (I - n_T n_T^t) g  =  sum_T w_T g_T
///
/// per vertex undoes the projections instead: fields that restrict an
/// ambient-linear function come back exactly, smooth fields gain an order
/// constant. The system's radial eigenvalue is only O(h^2) but strictly
/// positive on a valid vertex star, and radial noise is discarded by the
/// final projection onto the tangent plane.
pub fn ambient_gradient(field: &ScalarField) -> Result<VectorField> {
    let mesh = field.mesh();
    let tri_grads = triangle_gradients(mesh, field.values())?;
    Ok(VectorField::new(
        mesh.clone(),
        solve_vertex_gradients(mesh, &tri_grads),
    ))
}

/// Hamiltonian vector field `sgrad G = 4*pi * (grad G x p)`.
///
/// For `G = z` this is the rotation field about the z-axis with angular
/// speed `4*pi`, one full turn per half unit of time.
pub fn hamiltonian_vector_field(field: &ScalarField) -> Result<VectorField> {
    let mesh = field.mesh();
    let grad = ambient_gradient(field)?;
    let vectors = mesh
        .vertices()
        .iter()
        .zip(grad.vectors())
        .map(|(&p, &g)| g.cross(p) * FOUR_PI)
        .collect();
    Ok(VectorField::new(mesh.clone(), vectors))
}

/// Poisson bracket `{F,G}(p) = 4*pi * <p, grad F x grad G>` per vertex.
pub fn poisson_bracket(f: &ScalarField, g: &ScalarField) -> Result<ScalarField> {
    f.check_same_mesh(g)?;
    let mesh = f.mesh();
    let gf = ambient_gradient(f)?;
    let gg = ambient_gradient(g)?;
    let values: Vec<f64> = mesh
        .vertices()
        .iter()
        .zip(gf.vectors().iter().zip(gg.vectors()))
        .map(|(&p, (&a, &b))| FOUR_PI * p.dot(a.cross(b)))
        .collect();
    ScalarField::from_values(mesh.clone(), values)
}

/// Flat P1 gradient per triangle. Errors on triangles whose flat area
/// degenerates below 1e-14.
pub(crate) fn triangle_gradients(mesh: &SphereMesh, values: &[f64]) -> Result<Vec<Vec3>> {
    let mut grads = Vec::with_capacity(mesh.triangles().len());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let [a, b, c] = [
            mesh.vertex(tri[0] as usize),
            mesh.vertex(tri[1] as usize),
            mesh.vertex(tri[2] as usize),
        ];
        let n = (b - a).cross(c - a);
        let len = n.norm();
        if len * 0.5 < 1e-14 {
            return Err(Error::DegenerateTriangle {
                triangle: t,
                area: len * 0.5,
            });
        }
        let nh = n * (1.0 / len);
        let [fa, fb, fc] = [
            values[tri[0] as usize],
            values[tri[1] as usize],
            values[tri[2] as usize],
        ];
        // grad of the hat at vertex i is nh x (opposite edge) / |n|.
        let g = (nh.cross(c - b) * fa + nh.cross(a - c) * fb + nh.cross(b - a) * fc) * (1.0 / len);
        grads.push(g);
    }
    Ok(grads)
}

fn solve_vertex_gradients(mesh: &SphereMesh, tri_grads: &[Vec3]) -> Vec<Vec3> {
    let nv = mesh.n_vertices();
    let mut rhs = vec![Vec3::ZERO; nv];
    // Upper triangle of sum w (I - n n^t), stored xx, xy, xz, yy, yz, zz.
    let mut moment = vec![[0.0f64; 6]; nv];
    let mut wsum = vec![0.0f64; nv];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let w = mesh.triangle_areas()[t];
        let a = mesh.vertex(tri[0] as usize);
        let n = (mesh.vertex(tri[1] as usize) - a).cross(mesh.vertex(tri[2] as usize) - a);
        let nh = n.normalized();
        let proj = [
            w * (1.0 - nh.x * nh.x),
            w * (-nh.x * nh.y),
            w * (-nh.x * nh.z),
            w * (1.0 - nh.y * nh.y),
            w * (-nh.y * nh.z),
            w * (1.0 - nh.z * nh.z),
        ];
        for &v in tri {
            let v = v as usize;
            rhs[v] += tri_grads[t] * w;
            for k in 0..6 {
                moment[v][k] += proj[k];
            }
            wsum[v] += w;
        }
    }
    (0..nv)
        .map(|v| solve_sym3(&moment[v], rhs[v], wsum[v]).reject_from_unit(mesh.vertex(v)))
        .collect()
}

/// Solve `M x = b` for symmetric `M` given as [xx, xy, xz, yy, yz, zz].
/// Falls back to the plain weighted average when the star's normals
/// degenerate and the moment matrix loses rank.
fn solve_sym3(m: &[f64; 6], b: Vec3, wsum: f64) -> Vec3 {
    let [xx, xy, xz, yy, yz, zz] = *m;
    let cof_xx = yy * zz - yz * yz;
    let cof_xy = xz * yz - xy * zz;
    let cof_xz = xy * yz - xz * yy;
    let det = xx * cof_xx + xy * cof_xy + xz * cof_xz;
    if det.abs() < 1e-14 * wsum * wsum * wsum {
        return b * (1.0 / wsum);
    }
    let cof_yy = xx * zz - xz * xz;
    let cof_yz = xy * xz - xx * yz;
    let cof_zz = xx * yy - xy * xy;
    Vec3::new(
        cof_xx * b.x + cof_xy * b.y + cof_xz * b.z,
        cof_xy * b.x + cof_yy * b.y + cof_yz * b.z,
        cof_xz * b.x + cof_yz * b.y + cof_zz * b.z,
    ) * (1.0 / det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_field;
    use std::sync::Arc;

    fn mesh(level: u32) -> Arc<SphereMesh> {
        Arc::new(SphereMesh::build_icosphere(level).unwrap())
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let m = mesh(3);
        let g = ambient_gradient(&sample_field(&m, |_| 4.2).unwrap()).unwrap();
        assert!(g.max_norm() < 1e-12);
    }

    #[test]
    fn gradient_of_z_matches_tangential_unit_field() {
        let m = mesh(5);
        let g = ambient_gradient(&sample_field(&m, |p| p.z).unwrap()).unwrap();
        let mut worst = 0.0f64;
        for v in 0..m.n_vertices() {
            let p = m.vertex(v);
            let expected = Vec3::Z.reject_from_unit(p);
            worst = worst.max((g.vector(v) - expected).norm());
        }
        // First-order scheme on a smooth field: O(h) worst case, much
        // better on the regular interior vertices.
        assert!(worst < 5e-3, "worst deviation {worst}");
    }

    #[test]
    fn gradient_is_tangential() {
        let m = mesh(4);
        let g = ambient_gradient(&sample_field(&m, |p| p.x * p.y + p.z).unwrap()).unwrap();
        for v in 0..m.n_vertices() {
            assert!(g.vector(v).dot(m.vertex(v)).abs() < 1e-13);
        }
    }

    #[test]
    fn degenerate_triangle_is_reported() {
        let m = mesh(1);
        let mut broken = (*m).clone();
        // Collapse one edge: triangle 0 keeps indices but loses its area.
        let tri = broken.triangles()[0];
        let p = broken.vertex(tri[0] as usize);
        broken.corrupt_vertex_for_test(tri[1] as usize, p);
        let values = vec![0.0; broken.n_vertices()];
        match triangle_gradients(&broken, &values) {
            Err(Error::DegenerateTriangle { .. }) => {}
            other => panic!("expected degenerate triangle, got {other:?}"),
        }
    }

    #[test]
    fn hamiltonian_field_of_z_is_rotation() {
        let m = mesh(5);
        let v = hamiltonian_vector_field(&sample_field(&m, |p| p.z).unwrap()).unwrap();
        for idx in (0..m.n_vertices()).step_by(97) {
            let p = m.vertex(idx);
            let expected = Vec3::Z.cross(p) * FOUR_PI;
            assert!(
                (v.vector(idx) - expected).norm() < FOUR_PI * 6e-3,
                "vertex {idx}: {:?} vs {:?}",
                v.vector(idx),
                expected
            );
        }
    }

    #[test]
    fn hamiltonian_field_is_tangent_to_level_sets() {
        let m = mesh(4);
        let f = sample_field(&m, |p| p.x * p.x - p.y * p.z).unwrap();
        let grad = ambient_gradient(&f).unwrap();
        let ham = hamiltonian_vector_field(&f).unwrap();
        for v in 0..m.n_vertices() {
            let dot = ham.vector(v).dot(grad.vector(v)).abs();
            let scale = ham.vector(v).norm() * grad.vector(v).norm();
            assert!(dot <= 1e-12 * (1.0 + scale));
        }
    }

    #[test]
    fn bracket_with_itself_is_exactly_zero() {
        let m = mesh(3);
        let f = sample_field(&m, |p| p.x * p.y * p.z + p.z).unwrap();
        let b = poisson_bracket(&f, &f).unwrap();
        assert_eq!(b.uniform_norm(), 0.0);
    }

    #[test]
    fn bracket_antisymmetry_is_exact() {
        let m = mesh(3);
        let f = sample_field(&m, |p| p.x * p.x + 0.3 * p.y).unwrap();
        let g = sample_field(&m, |p| p.z * p.y - p.x).unwrap();
        let fg = poisson_bracket(&f, &g).unwrap();
        let gf = poisson_bracket(&g, &f).unwrap();
        for v in 0..m.n_vertices() {
            assert_eq!(fg.value(v) + gf.value(v), 0.0);
        }
    }

    #[test]
    fn bracket_bilinearity_is_exact_to_rounding() {
        let m = mesh(3);
        let f1 = sample_field(&m, |p| p.x * p.z).unwrap();
        let f2 = sample_field(&m, |p| p.y * p.y - p.x).unwrap();
        let g = sample_field(&m, |p| p.z * p.z * p.z + p.y).unwrap();
        let combo = f1
            .affine(1.75, 0.0)
            .unwrap()
            .try_add(&f2.affine(-0.5, 0.0).unwrap())
            .unwrap();
        let lhs = poisson_bracket(&combo, &g).unwrap();
        let b1 = poisson_bracket(&f1, &g).unwrap();
        let b2 = poisson_bracket(&f2, &g).unwrap();
        let scale = b1.uniform_norm().max(b2.uniform_norm());
        for v in 0..m.n_vertices() {
            let rhs = 1.75 * b1.value(v) - 0.5 * b2.value(v);
            assert!((lhs.value(v) - rhs).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn bracket_of_coordinates_closes_the_algebra() {
        // {x,y} = 4*pi*z on the normalized sphere; check in sup norm.
        let m = mesh(5);
        let x = sample_field(&m, |p| p.x).unwrap();
        let y = sample_field(&m, |p| p.y).unwrap();
        let b = poisson_bracket(&x, &y).unwrap();
        let mut worst = 0.0f64;
        for v in 0..m.n_vertices() {
            worst = worst.max((b.value(v) - FOUR_PI * m.vertex(v).z).abs());
        }
        assert!(worst < FOUR_PI * 0.01, "sup deviation {worst}");
    }

    #[test]
    fn bracket_of_squares_has_known_norm() {
        // {x^2,y^2} = 16*pi*xyz, whose sup over the sphere is
        // 16*pi/(3*sqrt(3)) at |x|=|y|=|z|=1/sqrt(3).
        let m = mesh(5);
        let f = sample_field(&m, |p| p.x * p.x).unwrap();
        let g = sample_field(&m, |p| p.y * p.y).unwrap();
        let norm = poisson_bracket(&f, &g).unwrap().uniform_norm();
        let exact = 16.0 * std::f64::consts::PI / (3.0 * 3.0f64.sqrt());
        assert!(
            (norm - exact).abs() < 0.02 * exact,
            "norm {norm} vs exact {exact}"
        );
    }

    #[test]
    fn bracket_converges_under_refinement() {
        let exact = 16.0 * std::f64::consts::PI / (3.0 * 3.0f64.sqrt());
        let mut errs = Vec::new();
        for level in [3u32, 4, 5] {
            let m = mesh(level);
            let f = sample_field(&m, |p| p.x * p.x).unwrap();
            let g = sample_field(&m, |p| p.y * p.y).unwrap();
            let norm = poisson_bracket(&f, &g).unwrap().uniform_norm();
            errs.push((norm - exact).abs());
        }
        assert!(errs[2] < errs[1] && errs[1] < errs[0], "errors {errs:?}");
    }
}
