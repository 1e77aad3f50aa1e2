//! Partitions of unity subordinate to covers by small spherical caps, and
//! the bracket-scaling experiment built on them.
//!
//! A family ρ₁..ρ_N of non-negative fields with Σρᵢ ≥ 1, each supported in a
//! cap of normalized area < 1/2, cannot consist of pairwise almost-commuting
//! functions: the quasi-state vanishes on every member, so the pairwise
//! bracket norms obey max‖{ρᵢ,ρⱼ}‖ ≥ 1/(2C(Σ_{k=2}^N √(k−1))²) ~ N⁻³.
//! Duplicating members m times at amplitude 1/m drives the max bracket down
//! by exactly m⁻², which is the best decay such duplication can give. This
//! module constructs the covers, certifies the hypotheses, measures the
//! pairwise brackets, and runs the N vs m scaling table.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::Error;
use crate::fields::cap_bump;
use crate::geometry::{ambient_gradient, ScalarField, SphereMesh, FOUR_PI};
use crate::quasistate::QuasiStateConfig;
use crate::vec3::Vec3;
use crate::Result;

/// Cover sums may dip below 1 by at most this much before the cover check
/// fails; covers built here hit 1 exactly at the worst vertex.
const COVER_TOL: f64 = 1e-9;

/// Support certificate of one partition member: the member vanishes at every
/// vertex whose geodesic distance from `center` is at least `radius`.
#[derive(Clone, Copy, Debug)]
pub struct CapCertificate {
    pub center: Vec3,
    pub radius: f64,
}

impl CapCertificate {
    /// Normalized area of the cap, (1 − cos r)/2 of the unit measure.
    pub fn normalized_area(&self) -> f64 {
        0.5 * (1.0 - self.radius.cos())
    }

    fn contains(&self, p: Vec3) -> bool {
        p.angle_to(self.center) < self.radius
    }

    fn is_disjoint_from(&self, other: &CapCertificate) -> bool {
        self.center.angle_to(other.center) >= self.radius + other.radius
    }
}

/// Non-negative fields with certified cap supports. Construction checks the
/// per-member certificates; covering (Σ ≥ 1) is certified separately by
/// [`PartitionOfUnity::verify_cover`] so that deliberately non-covering
/// families can still be assembled for bracket measurements.
#[derive(Clone, Debug)]
pub struct PartitionOfUnity {
    members: Vec<ScalarField>,
    caps: Vec<CapCertificate>,
}

impl PartitionOfUnity {
    /// Assembles a family from fields and their support certificates,
    /// checking non-negativity, vanishing outside each cap, and the
    /// displaceability bound area < 1/2 per cap.
    pub fn from_parts(
        members: Vec<ScalarField>,
        caps: Vec<CapCertificate>,
    ) -> Result<PartitionOfUnity> {
        if members.is_empty() || members.len() != caps.len() {
            return Err(Error::InvalidArgument(format!(
                "need equally many members and caps, at least one each; \
                 got {} members and {} caps",
                members.len(),
                caps.len()
            )));
        }
        let mesh = members[0].mesh().clone();
        for (i, (member, cap)) in members.iter().zip(&caps).enumerate() {
            if !Arc::ptr_eq(member.mesh(), &mesh) {
                return Err(Error::MeshMismatch {
                    left: mesh.n_vertices(),
                    right: member.mesh().n_vertices(),
                });
            }
            if cap.normalized_area() >= 0.5 {
                return Err(Error::Construction(format!(
                    "cap {i} has normalized area {:.4} >= 1/2 and is not displaceable",
                    cap.normalized_area()
                )));
            }
            for (v, &p) in mesh.vertices().iter().enumerate() {
                let value = member.value(v);
                if value < 0.0 {
                    return Err(Error::Construction(format!(
                        "member {i} is negative ({value:e}) at vertex {v}"
                    )));
                }
                if value != 0.0 && !cap.contains(p) {
                    return Err(Error::Construction(format!(
                        "member {i} is nonzero ({value:e}) outside its cap at vertex {v}"
                    )));
                }
            }
        }
        Ok(PartitionOfUnity { members, caps })
    }

    pub fn members(&self) -> &[ScalarField] {
        &self.members
    }

    pub fn caps(&self) -> &[CapCertificate] {
        &self.caps
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn mesh(&self) -> &Arc<SphereMesh> {
        self.members[0].mesh()
    }

    /// Certifies the covering hypothesis: Σᵢ ρᵢ ≥ 1 (within rounding) at
    /// every vertex.
    pub fn verify_cover(&self) -> Result<()> {
        let mesh = self.mesh();
        for v in 0..mesh.n_vertices() {
            let sum: f64 = self.members.iter().map(|m| m.value(v)).sum();
            if sum < 1.0 - COVER_TOL {
                return Err(Error::Construction(format!(
                    "cover sum {sum:.12} < 1 at vertex {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Evenly spread unit vectors: latitudes split the measure into N equal
/// bands, longitudes advance by the golden angle.
fn fibonacci_lattice(n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            Vec3::new(rho * phi.cos(), rho * phi.sin(), z)
        })
        .collect()
}

/// Largest distance from a mesh vertex to its nearest center: caps of this
/// radius centered at the lattice already touch every vertex.
fn covering_radius(mesh: &SphereMesh, centers: &[Vec3]) -> f64 {
    mesh.vertices()
        .iter()
        .map(|&p| {
            centers
                .iter()
                .map(|&c| p.angle_to(c))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Builds a partition of unity from `n` bump functions on Fibonacci-lattice
/// caps of radius (1 + `overlap`) times the lattice covering radius.
///
/// Raw bumps b((d/r)²-profile) are scaled by one common constant so the
/// pointwise sum is ≥ 1 with equality at the worst vertex; per-member
/// normalization would entangle the supports. Fails when the caps would
/// reach area 1/2 (radius π/2): such caps carry no displaceability
/// certificate, which is the whole point of the construction.
pub fn build_cap_partition(
    mesh: &Arc<SphereMesh>,
    n: usize,
    overlap: f64,
) -> Result<PartitionOfUnity> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!(
            "covering the sphere by caps of area < 1/2 needs at least 4 caps, got {n}"
        )));
    }
    if !(overlap > 0.0 && overlap < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "overlap must lie strictly between 0 and 1, got {overlap}"
        )));
    }
    let centers = fibonacci_lattice(n);
    let radius = (1.0 + overlap) * covering_radius(mesh, &centers);
    let caps: Vec<CapCertificate> = centers
        .iter()
        .map(|&center| CapCertificate { center, radius })
        .collect();
    if caps[0].normalized_area() >= 0.5 {
        return Err(Error::Construction(format!(
            "{n} caps need radius {radius:.3} to cover, area {:.3} >= 1/2; \
             more caps or less overlap required",
            caps[0].normalized_area()
        )));
    }
    let raw: Vec<ScalarField> = centers
        .iter()
        .map(|&c| cap_bump(mesh, c, radius, 1.0))
        .collect::<Result<_>>()?;
    // Covering radius < r keeps every vertex strictly inside some cap, so
    // the worst-vertex sum is positive and the common scale is finite.
    let worst = (0..mesh.n_vertices())
        .map(|v| raw.iter().map(|b| b.value(v)).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let members = raw
        .into_iter()
        .map(|b| b.affine(1.0 / worst, 0.0))
        .collect::<Result<_>>()?;
    let partition = PartitionOfUnity { members, caps };
    partition.verify_cover()?;
    Ok(partition)
}

/// Largest uniform norm of {ρᵢ, ρⱼ} over member pairs i < j. Pairs whose
/// support certificates are disjoint commute identically and are skipped.
pub fn max_pairwise_bracket(partition: &PartitionOfUnity) -> Result<f64> {
    let mesh = partition.mesh();
    let grads: Vec<_> = partition
        .members
        .iter()
        .map(ambient_gradient)
        .collect::<Result<Vec<_>>>()?;
    let mut pairs = Vec::new();
    for i in 0..partition.len() {
        for j in i + 1..partition.len() {
            if !partition.caps[i].is_disjoint_from(&partition.caps[j]) {
                pairs.push((i, j));
            }
        }
    }
    Ok(pairs
        .par_iter()
        .map(|&(i, j)| {
            mesh.vertices()
                .iter()
                .zip(grads[i].vectors().iter().zip(grads[j].vectors()))
                .map(|(&p, (&a, &b))| (FOUR_PI * p.dot(a.cross(b))).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

/// Replaces each member by m copies at amplitude 1/m: the pointwise sum is
/// unchanged, every certificate survives, and bilinearity sends each
/// pairwise bracket to 1/m² of its old value.
pub fn duplicate_partition(partition: &PartitionOfUnity, m: usize) -> Result<PartitionOfUnity> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "duplication multiplicity must be at least 1".into(),
        ));
    }
    if m == 1 {
        return Ok(partition.clone());
    }
    let mut members = Vec::with_capacity(partition.len() * m);
    let mut caps = Vec::with_capacity(partition.len() * m);
    for (member, &cap) in partition.members.iter().zip(&partition.caps) {
        let scaled = member.affine(1.0 / m as f64, 0.0)?;
        for _ in 0..m {
            members.push(scaled.clone());
            caps.push(cap);
        }
    }
    Ok(PartitionOfUnity { members, caps })
}

/// The explicit constant forced on max‖{ρᵢ,ρⱼ}‖ by vanishing + partial
/// quasi-additivity: 1/(2C(Σ_{k=2}^N √(k−1))²), asymptotically (9/8)/(CN³).
pub fn proof_lower_bound(n: usize, config: QuasiStateConfig) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "the bound needs at least two members, got {n}"
        )));
    }
    let sum: f64 = (2..=n).map(|k| ((k - 1) as f64).sqrt()).sum();
    Ok(1.0 / (2.0 * config.defect_c * sum * sum))
}

/// One row of the scaling experiment: base size, multiplicity, effective
/// member count, the measured max bracket and the bound it must clear.
#[derive(Clone, Copy, Debug)]
pub struct ScalingRow {
    pub n: usize,
    pub m: usize,
    pub n_eff: usize,
    pub measured: f64,
    pub bound: f64,
    pub slack: f64,
    pub satisfied: bool,
}

/// Scaling experiment rows plus per-base slope fits.
#[derive(Clone, Debug)]
pub struct ScalingExperiment {
    rows: Vec<ScalingRow>,
}

impl ScalingExperiment {
    pub const CSV_HEADER: &'static str = "N,m,N_eff,measured_max_bracket,proof_bound,satisfied";

    pub fn rows(&self) -> &[ScalingRow] {
        &self.rows
    }

    pub fn all_satisfied(&self) -> bool {
        self.rows.iter().all(|r| r.satisfied)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        for r in &self.rows {
            out.push_str(&format!(
                "\n{},{},{},{:.12e},{:.12e},{}",
                r.n, r.m, r.n_eff, r.measured, r.bound, r.satisfied
            ));
        }
        out
    }

    /// Least-squares slope of log(measured) against log(N_eff) over the
    /// duplication family of one base size; −2 up to fit noise, because the
    /// measured bracket scales as exactly m⁻². None if the family has fewer
    /// than two rows.
    pub fn slope_for_base(&self, n: usize) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.n == n && r.measured > 0.0)
            .map(|r| ((r.n_eff as f64).ln(), r.measured.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let (mx, my) = pts.iter().fold((0.0, 0.0), |(x, y), p| (x + p.0, y + p.1));
        let (mx, my) = (mx / n, my / n);
        let (num, den) = pts.iter().fold((0.0, 0.0), |(u, v), p| {
            (u + (p.0 - mx) * (p.1 - my), v + (p.0 - mx) * (p.0 - mx))
        });
        Some(num / den)
    }
}

/// Builds each base partition, measures its max pairwise bracket, and
/// repeats for every duplication multiplicity. Each row must clear the
/// proof bound at its effective member count minus twice the estimated
/// bracket discretization error (the change of the base measurement under
/// one mesh coarsening, rescaled by m⁻² along the duplication family).
pub fn scaling_experiment(
    mesh: &Arc<SphereMesh>,
    n_list: &[usize],
    m_list: &[usize],
    overlap: f64,
    config: QuasiStateConfig,
) -> Result<ScalingExperiment> {
    if n_list.is_empty() || m_list.is_empty() {
        return Err(Error::InvalidArgument(
            "scaling experiment needs at least one base size and one multiplicity".into(),
        ));
    }
    let level = mesh.subdivision_level();
    if level == 0 {
        return Err(Error::InvalidArgument(
            "slack estimation compares against one mesh coarsening; \
             use a mesh of subdivision level >= 1"
                .into(),
        ));
    }
    let coarse = Arc::new(SphereMesh::build_icosphere(level - 1)?);
    let mut rows = Vec::with_capacity(n_list.len() * m_list.len());
    for &n in n_list {
        let base = build_cap_partition(mesh, n, overlap)?;
        let measured_base = max_pairwise_bracket(&base)?;
        let coarse_base = build_cap_partition(&coarse, n, overlap)?;
        let error_estimate = (measured_base - max_pairwise_bracket(&coarse_base)?).abs();
        for &m in m_list {
            let duplicated = duplicate_partition(&base, m)?;
            let measured = max_pairwise_bracket(&duplicated)?;
            let bound = proof_lower_bound(n * m, config)?;
            let slack = 2.0 * error_estimate / (m * m) as f64;
            rows.push(ScalingRow {
                n,
                m,
                n_eff: n * m,
                measured,
                bound,
                slack,
                satisfied: measured >= bound - slack,
            });
        }
    }
    Ok(ScalingExperiment { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::poisson_bracket;
    use crate::quasistate::zeta;

    fn mesh(level: u32) -> Arc<SphereMesh> {
        Arc::new(SphereMesh::build_icosphere(level).unwrap())
    }

    fn config() -> QuasiStateConfig {
        QuasiStateConfig::default()
    }

    #[test]
    fn standard_partition_satisfies_all_certificates() {
        let m = mesh(3);
        let p = build_cap_partition(&m, 8, 0.3).unwrap();
        assert_eq!(p.len(), 8);
        p.verify_cover().unwrap();
        for (member, cap) in p.members().iter().zip(p.caps()) {
            assert!(cap.normalized_area() < 0.5);
            for (v, &x) in m.vertices().iter().enumerate() {
                assert!(member.value(v) >= 0.0);
                if x.angle_to(cap.center) >= cap.radius {
                    assert_eq!(member.value(v), 0.0);
                }
            }
        }
        // Worst-vertex normalization leaves no headroom below 1.
        let worst = (0..m.n_vertices())
            .map(|v| p.members().iter().map(|f| f.value(v)).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        assert!((worst - 1.0).abs() < 1e-12, "worst cover sum {worst}");
    }

    #[test]
    fn too_few_caps_or_bad_overlap_is_rejected() {
        let m = mesh(2);
        assert!(build_cap_partition(&m, 1, 0.3).is_err());
        assert!(build_cap_partition(&m, 3, 0.3).is_err());
        assert!(build_cap_partition(&m, 8, 0.0).is_err());
        assert!(build_cap_partition(&m, 8, 1.0).is_err());
    }

    #[test]
    fn members_vanish_under_the_quasi_state() {
        // Each support sits in a cap of area < 1/2, so the median lives in
        // the complement where the member is exactly zero.
        let m = mesh(3);
        let p = build_cap_partition(&m, 8, 0.3).unwrap();
        for member in p.members() {
            assert_eq!(zeta(member).unwrap(), 0.0);
        }
    }

    #[test]
    fn disjoint_supports_commute() {
        let m = mesh(3);
        let caps = vec![
            CapCertificate {
                center: Vec3::new(0.0, 0.0, 1.0),
                radius: 0.4,
            },
            CapCertificate {
                center: Vec3::new(0.0, 0.0, -1.0),
                radius: 0.4,
            },
        ];
        let members = vec![
            cap_bump(&m, caps[0].center, caps[0].radius, 1.0).unwrap(),
            cap_bump(&m, caps[1].center, caps[1].radius, 1.0).unwrap(),
        ];
        let p = PartitionOfUnity::from_parts(members, caps).unwrap();
        assert!(p.verify_cover().is_err(), "two small caps do not cover");
        assert_eq!(max_pairwise_bracket(&p).unwrap(), 0.0);
    }

    #[test]
    fn from_parts_rejects_broken_certificates() {
        let m = mesh(2);
        let wide = CapCertificate {
            center: Vec3::new(0.0, 0.0, 1.0),
            radius: 0.4,
        };
        // Field escapes its claimed (smaller) cap.
        let field = cap_bump(&m, wide.center, 0.8, 1.0).unwrap();
        let err = PartitionOfUnity::from_parts(vec![field], vec![wide]).unwrap_err();
        assert!(matches!(err, Error::Construction(_)), "{err}");
        // Cap past the equator carries no displaceability certificate.
        let huge = CapCertificate {
            center: Vec3::new(0.0, 0.0, 1.0),
            radius: 1.7,
        };
        let field = cap_bump(&m, huge.center, 0.4, 1.0).unwrap();
        let err = PartitionOfUnity::from_parts(vec![field], vec![huge]).unwrap_err();
        assert!(matches!(err, Error::Construction(_)), "{err}");
    }

    #[test]
    fn pairwise_bracket_matches_the_direct_computation() {
        let m = mesh(3);
        let p = build_cap_partition(&m, 8, 0.3).unwrap();
        let mut direct = 0.0f64;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                let b = poisson_bracket(&p.members()[i], &p.members()[j]).unwrap();
                direct = direct.max(b.uniform_norm());
            }
        }
        let measured = max_pairwise_bracket(&p).unwrap();
        assert_eq!(measured, direct);
        assert!(measured > 0.0, "overlapping bumps must not all commute");
    }

    #[test]
    fn duplication_preserves_the_sum_and_scales_the_bracket() {
        let m = mesh(3);
        let p = build_cap_partition(&m, 8, 0.3).unwrap();
        let a = max_pairwise_bracket(&p).unwrap();

        let same = duplicate_partition(&p, 1).unwrap();
        assert_eq!(same.len(), p.len());
        for (f, g) in same.members().iter().zip(p.members()) {
            assert_eq!(f.values(), g.values());
        }

        let doubled = duplicate_partition(&p, 2).unwrap();
        assert_eq!(doubled.len(), 16);
        doubled.verify_cover().unwrap();
        for v in 0..m.n_vertices() {
            let before: f64 = p.members().iter().map(|f| f.value(v)).sum();
            let after: f64 = doubled.members().iter().map(|f| f.value(v)).sum();
            // Halving is exact in binary; only the summation order differs.
            assert!((before - after).abs() <= 1e-12 * before.abs());
        }
        // Bilinearity at power-of-two amplitude: exactly a/4.
        assert_eq!(max_pairwise_bracket(&doubled).unwrap(), a / 4.0);

        assert!(duplicate_partition(&p, 0).is_err());
    }

    #[test]
    fn proof_bound_matches_hand_computed_values() {
        let cfg = config();
        assert!((proof_lower_bound(2, cfg).unwrap() - 1.0).abs() < 1e-15);
        let three = 1.0 / (1.0 + std::f64::consts::SQRT_2).powi(2);
        assert!((proof_lower_bound(3, cfg).unwrap() - three).abs() < 1e-12);
        assert!(proof_lower_bound(1, cfg).is_err());
        // Σ√(k−1) ~ (2/3)N^{3/2} makes the bound ~ (9/8)/(C N³).
        let n = 400;
        let asymptote = 9.0 / (8.0 * cfg.defect_c * (n as f64).powi(3));
        let exact = proof_lower_bound(n, cfg).unwrap();
        assert!(
            (exact / asymptote - 1.0).abs() < 0.01,
            "ratio {}",
            exact / asymptote
        );
    }

    #[test]
    fn standard_partition_clears_the_proof_bound() {
        let m = mesh(3);
        let p = build_cap_partition(&m, 8, 0.3).unwrap();
        let measured = max_pairwise_bracket(&p).unwrap();
        let bound = proof_lower_bound(8, config()).unwrap();
        assert!(
            measured >= bound,
            "measured {measured} below bound {bound} with no slack"
        );
    }

    #[test]
    fn scaling_experiment_reports_exact_inverse_square_decay() {
        let m = mesh(3);
        let table = scaling_experiment(&m, &[8], &[1, 2, 4], 0.3, config()).unwrap();
        assert_eq!(table.rows().len(), 3);
        assert!(table.all_satisfied());
        let slope = table.slope_for_base(8).unwrap();
        assert!((slope + 2.0).abs() < 1e-9, "slope {slope}");
        let csv = table.csv();
        assert!(csv.starts_with(ScalingExperiment::CSV_HEADER));
        assert!(csv.contains("\n8,2,16,"));
        assert_eq!(csv.lines().count(), 4);

        assert!(scaling_experiment(&m, &[], &[1], 0.3, config()).is_err());
        assert!(scaling_experiment(&m, &[8], &[], 0.3, config()).is_err());
    }
}
