//! Self-verification: the ten numbered claims this library promises, each
//! runnable at a chosen resolution and sweep size.
//!
//! Every check returns a [`ClaimOutcome`] carrying a stable key, a pass
//! flag, and a one-line detail string with the measured numbers, so callers
//! (the acceptance test target, the `verify` subcommand) can render a
//! scoreboard without recomputing anything.
//!
//! Tolerances are calibrated for subdivision levels 5–6; coarser meshes may
//! fail honestly. Sweeps are seeded and single-run deterministic.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{
    flow_composition_residual, scaling_checks, simulate_measurement, MeasurementSettings,
    DEFAULT_STEP_SIZE,
};
use crate::fields::{cap_bump, random_polynomial};
use crate::geometry::{poisson_bracket, sample_field, ScalarField, SphereMesh};
use crate::partitions::scaling_experiment;
use crate::quasistate::{
    bracket_inequality_report, pi_functional, robustness_report, zeta, zeta_bruteforce,
    QuasiStateConfig, DISCRETIZATION_SLACK,
};
use crate::{Result, Vec3};

/// Result of one numbered claim check.
#[derive(Clone, Debug)]
pub struct ClaimOutcome {
    /// 1-based claim number, stable across releases.
    pub number: u32,
    /// Short stable identifier for tables and logs.
    pub key: &'static str,
    pub pass: bool,
    /// One line of measured values and the windows they had to hit.
    pub detail: String,
}

impl ClaimOutcome {
    pub fn status(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

/// ‖{x², y²}‖ in closed form: 16π/(3√3).
fn ideal_bracket_norm() -> f64 {
    16.0 * PI / (3.0 * 3.0_f64.sqrt())
}

/// Meshes are immutable, so checks running in one process share them.
fn shared_mesh(level: u32) -> Result<Arc<SphereMesh>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<SphereMesh>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("mesh cache lock");
    if let Some(mesh) = map.get(&level) {
        return Ok(mesh.clone());
    }
    let mesh = Arc::new(SphereMesh::build_icosphere(level)?);
    map.insert(level, mesh.clone());
    Ok(mesh)
}

/// The model quartet: x², y², z², and x² + y².
fn coordinate_squares(
    mesh: &Arc<SphereMesh>,
) -> Result<(ScalarField, ScalarField, ScalarField, ScalarField)> {
    let fx = sample_field(mesh, |p| p.x * p.x)?;
    let fy = sample_field(mesh, |p| p.y * p.y)?;
    let fz = sample_field(mesh, |p| p.z * p.z)?;
    let sum = fx.try_add(&fy)?;
    Ok((fx, fy, fz, sum))
}

fn random_unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v.normalized();
        }
    }
}

/// Claim 1: quasi-state values of the coordinate squares.
pub fn coordinate_square_values(level: u32) -> Result<ClaimOutcome> {
    let mesh = shared_mesh(level)?;
    let (fx, fy, fz, sum) = coordinate_squares(&mesh)?;
    let zx = zeta(&fx)?;
    let zy = zeta(&fy)?;
    let zz = zeta(&fz)?;
    let zs = zeta(&sum)?;
    let pi_xy = pi_functional(&fx, &fy)?;
    let pass = zx.abs() <= 0.02
        && zy.abs() <= 0.02
        && zz.abs() <= 0.02
        && (zs - 1.0).abs() <= 0.02
        && (pi_xy - 1.0).abs() <= 0.05;
    Ok(ClaimOutcome {
        number: 1,
        key: "coordinate-squares",
        pass,
        detail: format!(
            "zeta(x^2)={zx:.5}, zeta(y^2)={zy:.5}, zeta(z^2)={zz:.5} (each 0 +/- 0.02); \
             zeta(x^2+y^2)={zs:.5} (1 +/- 0.02); Pi(x^2,y^2)={pi_xy:.5} (1 +/- 0.05)"
        ),
    })
}

/// Claim 2: the model pair's bracket norm against its closed form.
pub fn model_bracket_norm(level: u32) -> Result<ClaimOutcome> {
    let mesh = shared_mesh(level)?;
    let (fx, fy, _, _) = coordinate_squares(&mesh)?;
    let norm = poisson_bracket(&fx, &fy)?.uniform_norm();
    let ideal = ideal_bracket_norm();
    let rel = (norm - ideal).abs() / ideal;
    Ok(ClaimOutcome {
        number: 2,
        key: "model-bracket-norm",
        pass: rel <= 0.02,
        detail: format!(
            "||{{x^2,y^2}}|| = {norm:.5} vs closed form {ideal:.5}, \
             relative error {rel:.2e} (allow 2%)"
        ),
    })
}

/// Claim 3: Pi ≤ √(2C‖{F,G}‖) plus discretization slack over a random sweep.
pub fn bracket_inequality_sweep(level: u32, cases: usize, seed: u64) -> Result<ClaimOutcome> {
    let mesh = shared_mesh(level)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(ScalarField, ScalarField)> = (0..cases)
        .map(|_| {
            (
                random_polynomial(&mesh, 3, &mut rng),
                random_polynomial(&mesh, 3, &mut rng),
            )
        })
        .collect();
    let reports = pairs
        .par_iter()
        .map(|(f, g)| bracket_inequality_report(f, g, QuasiStateConfig::default()))
        .collect::<Result<Vec<_>>>()?;
    let violations = reports.iter().filter(|r| !r.satisfied).count();
    let worst = reports
        .iter()
        .map(|r| r.pi - r.bound)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ClaimOutcome {
        number: 3,
        key: "bracket-inequality",
        pass: violations == 0,
        detail: format!(
            "{cases} random degree-<=3 pairs at C=1/2: {violations} violations of \
             Pi <= sqrt(2C||bracket||) + {DISCRETIZATION_SLACK}; worst margin used {worst:.4}"
        ),
    })
}

/// Claim 4: at C = 2 the perturbation-robustness curve is exact arithmetic
/// on the measured Pi and tracks the closed form (1−2ε)²/4.
pub fn robustness_curve(level: u32) -> Result<ClaimOutcome> {
    let mesh = shared_mesh(level)?;
    let (fx, fy, _, _) = coordinate_squares(&mesh)?;
    let eps: Vec<f64> = (1..=9).map(|k| 0.05 * k as f64).collect();
    let cfg = QuasiStateConfig::new(2.0)?;
    let report = robustness_report(&fx, &fy, cfg, &eps)?;
    let pi = report.pi_value;
    let mut worst_arith = 0.0_f64;
    let mut worst_rel = 0.0_f64;
    for &(e, lower) in &report.upsilon_curve {
        let arithmetic = (pi - 2.0 * e).max(0.0).powi(2) / 4.0;
        worst_arith = worst_arith.max((lower - arithmetic).abs() / arithmetic.abs().max(1e-300));
        let closed_form = (1.0 - 2.0 * e).powi(2) / 4.0;
        worst_rel = worst_rel.max((lower - closed_form).abs() / closed_form);
    }
    let pass = !report.vacuous
        && (pi - 1.0).abs() <= 0.05
        && worst_arith <= 1e-8
        && worst_rel <= 0.10;
    Ok(ClaimOutcome {
        number: 4,
        key: "robustness-curve",
        pass,
        detail: format!(
            "Pi={pi:.5}; curve vs (Pi-2e)^2/4 agrees to {worst_arith:.1e} (allow 1e-8); \
             vs closed form (1-2e)^2/4 within {:.2}% (allow 10%) over 9 samples",
            100.0 * worst_rel
        ),
    })
}

/// Claim 5: the contour-tree median agrees with the independent
/// region-median bisection oracle.
pub fn median_oracle_agreement(level: u32, cases: usize, seed: u64) -> Result<ClaimOutcome> {
    let mesh = shared_mesh(level)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields: Vec<ScalarField> = (0..cases)
        .map(|_| random_polynomial(&mesh, 3, &mut rng))
        .collect();
    let worst = fields
        .par_iter()
        .map(|f| Ok((zeta(f)? - zeta_bruteforce(f, 512)?).abs()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(ClaimOutcome {
        number: 5,
        key: "median-oracle",
        pass: worst <= 1e-3,
        detail: format!(
            "contour-tree median vs region-median bisection on {cases} seeded fields at \
             level {level}: worst |difference| = {worst:.2e} (allow 1e-3)"
        ),
    })
}

/// Claim 6: the five quasi-state axioms over seeded sweeps.
pub fn quasi_state_axioms(level: u32, cases: usize, seed: u64) -> Result<ClaimOutcome> {
    let mesh = shared_mesh(level)?;

    // Quasi-linearity: zeta(aF + b) = a zeta(F) + b, including negative a.
    let mut rng = ChaCha8Rng::seed_from_u64(seed * 10 + 1);
    let linear_cases: Vec<(ScalarField, f64, f64)> = (0..cases)
        .map(|_| {
            (
                random_polynomial(&mesh, 3, &mut rng),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-2.0..2.0),
            )
        })
        .collect();
    let linearity = linear_cases
        .par_iter()
        .map(|(f, a, b)| {
            let direct = zeta(&f.affine(*a, *b)?)?;
            Ok((direct - (a * zeta(f)? + b)).abs())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    // Monotonicity: F <= F + h^2 implies zeta(F) <= zeta(F + h^2).
    let mut rng = ChaCha8Rng::seed_from_u64(seed * 10 + 2);
    let mono_cases: Vec<(ScalarField, ScalarField)> = (0..cases)
        .map(|_| {
            let f = random_polynomial(&mesh, 3, &mut rng);
            let h = random_polynomial(&mesh, 2, &mut rng);
            let g = f.try_add(&h.compose(|s| s * s).unwrap()).unwrap();
            (f, g)
        })
        .collect();
    let monotonicity = mono_cases
        .par_iter()
        .map(|(f, g)| Ok(zeta(f)? - zeta(g)?))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);

    // Lipschitz: |zeta(F) - zeta(G)| <= ||F - G||.
    let mut rng = ChaCha8Rng::seed_from_u64(seed * 10 + 3);
    let lip_cases: Vec<(ScalarField, ScalarField)> = (0..cases)
        .map(|_| {
            (
                random_polynomial(&mesh, 3, &mut rng),
                random_polynomial(&mesh, 3, &mut rng),
            )
        })
        .collect();
    let lipschitz = lip_cases
        .par_iter()
        .map(|(f, g)| Ok((zeta(f)? - zeta(g)?).abs() - f.max_abs_diff(g)?))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);

    // Vanishing: a bump supported in a cap of area <= 0.45 has zeta = 0.
    let mut rng = ChaCha8Rng::seed_from_u64(seed * 10 + 4);
    let bump_cases: Vec<ScalarField> = (0..cases)
        .map(|_| {
            let center = random_unit(&mut rng);
            let area: f64 = rng.gen_range(0.05..=0.45);
            let radius = (1.0 - 2.0 * area).acos();
            let height = rng.gen_range(0.2..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            cap_bump(&mesh, center, radius, height).unwrap()
        })
        .collect();
    let vanishing = bump_cases
        .par_iter()
        .map(|f| Ok(zeta(f)?.abs()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    // Composition: zeta(u o F) = u(zeta(F)) for strictly increasing u.
    let mut rng = ChaCha8Rng::seed_from_u64(seed * 10 + 5);
    let comp_cases: Vec<(ScalarField, f64, f64, f64)> = (0..cases)
        .map(|_| {
            (
                random_polynomial(&mesh, 3, &mut rng),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.0..0.5),
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect();
    let composition = comp_cases
        .par_iter()
        .map(|(f, alpha, gamma, beta)| {
            let u = |s: f64| beta + alpha * s + gamma * s * s * s;
            Ok((zeta(&f.compose(u)?)? - u(zeta(f)?)).abs())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let pass = linearity <= 1e-9
        && monotonicity <= 1e-9
        && lipschitz <= 1e-9
        && vanishing <= 0.02
        && composition <= 0.02;
    Ok(ClaimOutcome {
        number: 6,
        key: "quasi-state-axioms",
        pass,
        detail: format!(
            "{cases} seeded cases per axiom: quasi-linearity {linearity:.1e} (allow 1e-9); \
             monotonicity violation {monotonicity:.1e} (allow 1e-9); \
             Lipschitz excess {lipschitz:.1e} (allow 1e-9); \
             vanishing {vanishing:.1e} (allow 0.02); \
             composition {composition:.1e} (allow 0.02)"
        ),
    })
}

/// Claim 7: flowing along x² moves y² by at most t·‖{x²,y²}‖.
pub fn flow_composition_bound(level: u32) -> Result<ClaimOutcome> {
    let mesh = shared_mesh(level)?;
    let (fx, fy, _, _) = coordinate_squares(&mesh)?;
    let mut rows = Vec::new();
    let mut pass = true;
    for k in 1..=10 {
        let t = 0.1 * k as f64;
        let rep = flow_composition_residual(&fx, &fy, t, DEFAULT_STEP_SIZE)?;
        pass &= rep.satisfied;
        rows.push(format!(
            "t={t:.1}: ||G o f_t - G||={:.4} <= {:.4} (conservation {:.1e})",
            rep.residual,
            rep.bound + 3.0 * rep.conservation_residual,
            rep.conservation_residual
        ));
    }
    Ok(ClaimOutcome {
        number: 7,
        key: "flow-composition",
        pass,
        detail: format!("flow of x^2 moving y^2, 10 horizons: {}", rows.join("; ")),
    })
}

/// Claim 8: the pointer-measurement protocol — exactness at zero coupling,
/// the distortion lower bound, conservation of the summed observable, and
/// both rescaling identities.
pub fn measurement_protocol(level: u32) -> Result<ClaimOutcome> {
    let mesh = shared_mesh(level)?;
    let (f1, f2, _, sum) = coordinate_squares(&mesh)?;
    let settings = MeasurementSettings::default();

    let frozen = simulate_measurement(&f1, &f2, 50.0, 0.0, &settings)?;
    let part_a = frozen.delta == 0.0
        && frozen.f1_out.max_abs_diff(&f1)? == 0.0
        && frozen.f2_out.max_abs_diff(&f2)? == 0.0;

    let mut part_b = true;
    let mut part_c = true;
    let mut bound_200 = f64::NAN;
    let mut rows = Vec::new();
    for &(t, eps) in &[(50.0, 1.0), (200.0, 1.0), (50.0, 0.5)] {
        let rep = simulate_measurement(&f1, &f2, t, eps, &settings)?;
        part_b &= rep.satisfied();
        if t == 200.0 && eps == 1.0 {
            bound_200 = rep.bound;
        }
        let sum_drift = rep.f1_out.try_add(&rep.f2_out)?.max_abs_diff(&sum)?;
        part_c &= sum_drift <= 1e-4;
        rows.push(format!(
            "(T={t}, eps={eps}): delta={:.4} >= bound {:.4} - 3 x {:.1e}; sum drift {:.1e}",
            rep.delta, rep.bound, rep.conservation_residual, sum_drift
        ));
    }
    let bound_ok = (bound_200 - 0.459).abs() <= 3e-3;

    let scaling = scaling_checks(&f1, &f2, 10.0, 0.5, 2.0, &settings)?;
    let part_d = scaling.time_residual <= 1e-4 && scaling.amplitude_residual <= 1e-4;

    Ok(ClaimOutcome {
        number: 8,
        key: "measurement-protocol",
        pass: part_a && part_b && bound_ok && part_c && part_d,
        detail: format!(
            "eps=0 exact: {part_a}; {}; bound(200,1)={bound_200:.4} (0.459 +/- 0.003); \
             scaling residuals time={:.1e} amplitude={:.1e} (allow 1e-4)",
            rows.join("; "),
            scaling.time_residual,
            scaling.amplitude_residual
        ),
    })
}

/// Claim 9: partition brackets clear the N⁻³ proof bound and duplication
/// scales them by exactly m⁻².
pub fn partition_scaling(level: u32) -> Result<ClaimOutcome> {
    let mesh = shared_mesh(level)?;
    let bases = [8usize, 16, 32];
    let exp = scaling_experiment(&mesh, &bases, &[1, 2, 4, 8], 0.3, QuasiStateConfig::default())?;

    let mut worst_margin = f64::INFINITY;
    for row in exp.rows() {
        worst_margin = worst_margin.min(row.measured - (row.bound - row.slack));
    }
    let all_cleared = exp.all_satisfied();

    let mut worst_rel = 0.0_f64;
    let mut worst_slope_dev = 0.0_f64;
    for &n in &bases {
        let base = exp
            .rows()
            .iter()
            .find(|r| r.n == n && r.m == 1)
            .expect("m=1 row")
            .measured;
        for row in exp.rows().iter().filter(|r| r.n == n && r.m > 1) {
            let rel = (row.measured * (row.m * row.m) as f64 - base).abs() / base;
            worst_rel = worst_rel.max(rel);
        }
        let slope = exp.slope_for_base(n).expect("slope fit");
        worst_slope_dev = worst_slope_dev.max((slope + 2.0).abs());
    }

    Ok(ClaimOutcome {
        number: 9,
        key: "partition-scaling",
        pass: all_cleared && worst_rel < 1e-10 && worst_slope_dev <= 0.15,
        detail: format!(
            "bases N in {{8,16,32}}, duplication m in {{1,2,4,8}}: all rows clear the proof \
             bound minus slack (worst margin {worst_margin:.2e}); duplication deviates from \
             m^-2 by {worst_rel:.1e} (allow 1e-10); slope off -2 by {worst_slope_dev:.1e} \
             (allow 0.15)"
        ),
    })
}

/// Claim 10: refining the mesh one level must not increase the errors of
/// claims 1 and 2.
pub fn refinement_convergence(level: u32) -> Result<ClaimOutcome> {
    if level < 2 {
        return Err(crate::Error::InvalidArgument(
            "refinement comparison needs level >= 2".into(),
        ));
    }
    let per_level = [level - 1, level]
        .iter()
        .map(|&lvl| {
            let mesh = shared_mesh(lvl)?;
            let (fx, fy, fz, sum) = coordinate_squares(&mesh)?;
            let quasi_state_err = zeta(&fx)?
                .abs()
                .max(zeta(&fy)?.abs())
                .max(zeta(&fz)?.abs())
                .max((zeta(&sum)? - 1.0).abs())
                .max((pi_functional(&fx, &fy)? - 1.0).abs());
            let bracket_err =
                (poisson_bracket(&fx, &fy)?.uniform_norm() - ideal_bracket_norm()).abs();
            Ok((quasi_state_err, bracket_err))
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = per_level[1].0 <= per_level[0].0 && per_level[1].1 <= per_level[0].1;
    Ok(ClaimOutcome {
        number: 10,
        key: "refinement-convergence",
        pass,
        detail: format!(
            "refinement level {} -> {}: quasi-state error {:.3e} -> {:.3e}, \
             bracket error {:.3e} -> {:.3e} (neither may grow)",
            level - 1,
            level,
            per_level[0].0,
            per_level[1].0,
            per_level[0].1,
            per_level[1].1
        ),
    })
}

/// Run the selected claims (1-based numbers; empty = all ten) at one
/// resolution. `cases` sizes the random sweeps (claims 3, 5, 6); `seed`
/// offsets every sweep seed, with 0 reproducing the canonical acceptance
/// run. The oracle comparison (claim 5) is capped at level 5, where its
/// tolerance is calibrated and the bisection stays affordable.
pub fn run_claims(
    level: u32,
    cases: usize,
    seed: u64,
    numbers: &[u32],
) -> Result<Vec<ClaimOutcome>> {
    let all: Vec<u32> = if numbers.is_empty() {
        (1..=10).collect()
    } else {
        numbers.to_vec()
    };
    let mut outcomes = Vec::with_capacity(all.len());
    for n in all {
        let outcome = match n {
            1 => coordinate_square_values(level)?,
            2 => model_bracket_norm(level)?,
            3 => bracket_inequality_sweep(level, cases, seed * 1000 + 3)?,
            4 => robustness_curve(level)?,
            5 => median_oracle_agreement(level.min(5), cases.min(50), seed * 1000 + 5)?,
            6 => quasi_state_axioms(level, cases, seed * 1000 + 6)?,
            7 => flow_composition_bound(level)?,
            8 => measurement_protocol(level)?,
            9 => partition_scaling(level)?,
            10 => refinement_convergence(level)?,
            other => {
                return Err(crate::Error::InvalidArgument(format!(
                    "no claim numbered {other}; valid numbers are 1..=10"
                )))
            }
        };
        outcomes.push(outcome);
    }
    Ok(outcomes)
}
