use std::sync::Arc;

use super::SphereMesh;
use crate::{Error, Result, Vec3};

/// Real-valued function sampled at mesh vertices, interpolated linearly
/// within triangles. Immutable after construction.
#[derive(Debug, Clone)]
pub struct ScalarField {
    mesh: Arc<SphereMesh>,
    values: Vec<f64>,
}

/// Ambient `R^3`-vector per vertex (gradients, Hamiltonian fields).
#[derive(Debug, Clone)]
pub struct VectorField {
    mesh: Arc<SphereMesh>,
    vectors: Vec<Vec3>,
}

/// Samples an analytic function at every mesh vertex.
///
/// Fails with the offending vertex index if the evaluator returns a
/// non-finite value.
pub fn sample_field(mesh: &Arc<SphereMesh>, f: impl Fn(Vec3) -> f64) -> Result<ScalarField> {
    let values: Vec<f64> = mesh.vertices().iter().map(|&p| f(p)).collect();
    ScalarField::from_values(mesh.clone(), values)
}

impl ScalarField {
    pub fn from_values(mesh: Arc<SphereMesh>, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::InvalidArgument(format!(
                "{} values for a mesh with {} vertices",
                values.len(),
                mesh.n_vertices()
            )));
        }
        if let Some(v) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteValue { vertex: v });
        }
        Ok(ScalarField { mesh, values })
    }

    pub fn constant(mesh: &Arc<SphereMesh>, c: f64) -> Result<ScalarField> {
        ScalarField::from_values(mesh.clone(), vec![c; mesh.n_vertices()])
    }

    pub fn mesh(&self) -> &Arc<SphereMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, vertex: usize) -> f64 {
        self.values[vertex]
    }

    /// Mean against the normalized spherical measure.
    pub fn mean_value(&self) -> f64 {
        self.values
            .iter()
            .zip(self.mesh.vertex_weights())
            .map(|(v, w)| v * w)
            .sum()
    }

    pub fn uniform_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn oscillation(&self) -> f64 {
        self.max_value() - self.min_value()
    }

    /// Uniform norm of `F - mean(F)`.
    pub fn deviation_norm(&self) -> f64 {
        let m = self.mean_value();
        self.values
            .iter()
            .fold(0.0, |acc, v| acc.max((v - m).abs()))
    }

    pub fn try_add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.check_same_mesh(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        ScalarField::from_values(self.mesh.clone(), values)
    }

    /// `a * F + b`.
    pub fn affine(&self, a: f64, b: f64) -> Result<ScalarField> {
        let values = self.values.iter().map(|v| a * v + b).collect();
        ScalarField::from_values(self.mesh.clone(), values)
    }

    /// Pointwise composition `u(F)`.
    pub fn compose(&self, u: impl Fn(f64) -> f64) -> Result<ScalarField> {
        let values = self.values.iter().map(|&v| u(v)).collect();
        ScalarField::from_values(self.mesh.clone(), values)
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> Result<f64> {
        self.check_same_mesh(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Piecewise-linear value at an arbitrary direction on the sphere.
    pub fn interpolate(&self, dir: Vec3) -> Result<f64> {
        let t = self.mesh.locate(dir, None)?;
        let l = self.mesh.barycentric(t, dir.normalized());
        let tri = self.mesh.triangles()[t];
        Ok(l[0] * self.values[tri[0] as usize]
            + l[1] * self.values[tri[1] as usize]
            + l[2] * self.values[tri[2] as usize])
    }

    pub(crate) fn check_same_mesh(&self, other: &ScalarField) -> Result<()> {
        if !Arc::ptr_eq(&self.mesh, &other.mesh) {
            return Err(Error::MeshMismatch {
                left: self.mesh.n_vertices(),
                right: other.mesh.n_vertices(),
            });
        }
        Ok(())
    }
}

impl VectorField {
    pub(crate) fn new(mesh: Arc<SphereMesh>, vectors: Vec<Vec3>) -> VectorField {
        VectorField { mesh, vectors }
    }

    pub fn mesh(&self) -> &Arc<SphereMesh> {
        &self.mesh
    }

    pub fn vectors(&self) -> &[Vec3] {
        &self.vectors
    }

    pub fn vector(&self, vertex: usize) -> Vec3 {
        self.vectors[vertex]
    }

    /// Largest vector magnitude over vertices.
    pub fn max_norm(&self) -> f64 {
        self.vectors.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}
