//! Ready-made scalar fields: coordinate functions, seeded random
//! polynomials for property sweeps, and cap-supported bumps.

use std::sync::Arc;

use rand::Rng;

use crate::geometry::{sample_field, ScalarField, SphereMesh};
use crate::{Result, Vec3};

/// The linear field p ↦ ⟨p, direction⟩; covers x, y, z and tilted heights.
pub fn linear(mesh: &Arc<SphereMesh>, direction: Vec3) -> Result<ScalarField> {
    sample_field(mesh, |p| p.dot(direction))
}

/// A random polynomial in x, y, z of total degree ≤ `max_degree`, with
/// monomial coefficients drawn uniformly from [−1, 1].  Fields drawn this
/// way are smooth with generic critical points, which is what the property
/// sweeps want.
pub fn random_polynomial(
    mesh: &Arc<SphereMesh>,
    max_degree: u32,
    rng: &mut impl Rng,
) -> ScalarField {
    let mut monomials: Vec<([u32; 3], f64)> = Vec::new();
    for a in 0..=max_degree {
        for b in 0..=max_degree - a {
            for c in 0..=max_degree - a - b {
                monomials.push(([a, b, c], rng.gen_range(-1.0..1.0)));
            }
        }
    }
    let values = mesh
        .vertices()
        .iter()
        .map(|p| {
            monomials
                .iter()
                .map(|&([a, b, c], coeff)| {
                    coeff * p.x.powi(a as i32) * p.y.powi(b as i32) * p.z.powi(c as i32)
                })
                .sum()
        })
        .collect();
    ScalarField::from_values(mesh.clone(), values).expect("polynomial values are finite")
}

/// Gaussian profile in geodesic distance: height · exp(−(θ/width)²).
pub fn gaussian_bump(
    mesh: &Arc<SphereMesh>,
    center: Vec3,
    width: f64,
    height: f64,
) -> Result<ScalarField> {
    let c = center.normalized();
    sample_field(mesh, |p| {
        let t = p.angle_to(c) / width;
        height * (-t * t).exp()
    })
}

/// Smooth compactly supported bump: height · (1 − (θ/radius)²)³ inside the
/// geodesic cap of radius `radius`, zero outside.
pub fn cap_bump(
    mesh: &Arc<SphereMesh>,
    center: Vec3,
    radius: f64,
    height: f64,
) -> Result<ScalarField> {
    let c = center.normalized();
    sample_field(mesh, |p| height * bump_profile(p.angle_to(c) / radius))
}

/// (1 − t²)³ on [0, 1), zero beyond; C² across the support boundary. This
/// is the radial profile of [`cap_bump`], exposed for pointwise evaluators
/// that cannot go through a mesh.
pub fn bump_profile(t: f64) -> f64 {
    if t >= 1.0 {
        0.0
    } else {
        let s = 1.0 - t * t;
        s * s * s
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn mesh() -> Arc<SphereMesh> {
        Arc::new(SphereMesh::build_icosphere(3).unwrap())
    }

    #[test]
    fn linear_field_matches_coordinates() {
        let m = mesh();
        let f = linear(&m, Vec3::Z).unwrap();
        for (v, &p) in m.vertices().iter().enumerate() {
            assert_eq!(f.value(v), p.z);
        }
    }

    #[test]
    fn random_polynomial_is_deterministic_per_seed() {
        let m = mesh();
        let f1 = random_polynomial(&m, 3, &mut ChaCha8Rng::seed_from_u64(7));
        let f2 = random_polynomial(&m, 3, &mut ChaCha8Rng::seed_from_u64(7));
        let f3 = random_polynomial(&m, 3, &mut ChaCha8Rng::seed_from_u64(8));
        assert_eq!(f1.values(), f2.values());
        assert_ne!(f1.values(), f3.values());
    }

    #[test]
    fn cap_bump_is_supported_in_its_cap() {
        let m = mesh();
        let f = cap_bump(&m, Vec3::Z, 0.8, 2.0).unwrap();
        for (v, &p) in m.vertices().iter().enumerate() {
            if p.angle_to(Vec3::Z) >= 0.8 {
                assert_eq!(f.value(v), 0.0);
            } else {
                assert!(f.value(v) > 0.0);
            }
        }
        assert!(
            (f.max_value() - 2.0).abs() < 0.05,
            "peak of the bump sits at the center"
        );
    }

    #[test]
    fn gaussian_bump_peaks_at_center() {
        let m = mesh();
        // Vertex 0 is the north pole at every subdivision level.
        let f = gaussian_bump(&m, Vec3::Z, 0.5, 1.0).unwrap();
        assert_eq!(f.value(0), 1.0);
        assert_eq!(f.max_value(), 1.0);
        assert!(f.min_value() > 0.0);
    }
}
