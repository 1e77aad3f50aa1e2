//! The median quasi-state ζ, the non-commutativity functional Π, and the
//! reports built on them.
//!
//! ζ(F) is the level of the unique tree point whose complementary branches
//! all carry area ≤ 1/2.  Π(F,G) = |ζ(F+G) − ζ(F) − ζ(G)| measures how far ζ
//! is from linear on a pair, and is controlled by the Poisson bracket:
//! Π(F,G) ≤ √(2C·‖{F,G}‖).

use std::fmt::Write as _;

use crate::geometry::{poisson_bracket, ScalarField};
use crate::reeb::{build_contour_tree, ContourTree, TreePoint};
use crate::{Error, Result};

/// Slack added to the bracket bound before calling a pair violated; covers
/// discretization error in both ζ and the bracket norm.
pub const DISCRETIZATION_SLACK: f64 = 0.05;

/// Acceptance tolerance on the median's defining predicate.
const NODE_TOL: f64 = 1e-6;

/// Configuration of the bracket-defect constant C.
#[derive(Clone, Copy, Debug)]
pub struct QuasiStateConfig {
    pub defect_c: f64,
}

impl Default for QuasiStateConfig {
    fn default() -> Self {
        QuasiStateConfig { defect_c: 0.5 }
    }
}

impl QuasiStateConfig {
    pub fn new(defect_c: f64) -> Result<Self> {
        if defect_c <= 0.0 || !defect_c.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "defect constant must be positive, got {defect_c}"
            )));
        }
        Ok(QuasiStateConfig { defect_c })
    }
}

/// The tree point all of whose complementary branches weigh ≤ 1/2.
///
/// Descends from any node toward the unique too-heavy branch; the final step
/// solves the balancing equation on one edge's area profile.  On a tree with
/// total area 1 the result satisfies `complement_max_area ≤ 1/2 + 1e−6`.
pub fn median_point(tree: &ContourTree) -> TreePoint {
    if tree.n_edges() == 0 {
        return TreePoint::Node(0);
    }
    let side = tree.side_masses();
    let half = tree.total_area() / 2.0;
    let mut node = 0usize;
    for _ in 0..=tree.n_nodes() {
        let mut heaviest = (f64::NEG_INFINITY, usize::MAX);
        for &e in tree.incident_edges(node) {
            let edge = tree.edge(e);
            let far = if edge.lower == node {
                side[e].1
            } else {
                side[e].0
            };
            let branch = far + edge.profile.total();
            if branch > heaviest.0 {
                heaviest = (branch, e);
            }
        }
        if heaviest.0 <= half + NODE_TOL {
            return TreePoint::Node(node);
        }
        let e = heaviest.1;
        let edge = tree.edge(e);
        let p = edge.profile.total();
        if edge.lower == node {
            // Moving up: the cut must leave `half` below.
            let target = half - side[e].0;
            if target >= p {
                node = edge.upper;
            } else {
                let level = edge.profile.solve_level(target);
                return TreePoint::EdgeInterior { edge: e, level };
            }
        } else {
            // Moving down: cumulative-below at the balanced cut.
            let target = p - (half - side[e].1);
            if target <= 0.0 {
                node = edge.lower;
            } else {
                let level = edge.profile.solve_level(target);
                return TreePoint::EdgeInterior { edge: e, level };
            }
        }
    }
    // Each move strictly shrinks the far-side mass, so the walk cannot cycle.
    unreachable!("median descent exceeded the node count");
}

/// ζ(F): the field's value on the median component of its level sets.
pub fn zeta(field: &ScalarField) -> Result<f64> {
    let tree = build_contour_tree(field)?;
    Ok(tree.point_level(median_point(&tree)))
}

/// Independent ζ oracle: bisection on the cut level, deciding each level by
/// whether the weighted median region of {F ≤ c} / {F > c} lies on the high
/// side.  `n_levels` sets the minimum bisection resolution; iteration
/// continues to floating-point convergence.
pub fn zeta_bruteforce(field: &ScalarField, n_levels: u32) -> Result<f64> {
    if n_levels < 2 {
        return Err(Error::InvalidArgument(
            "bisection needs at least 2 levels".into(),
        ));
    }
    let mut lo = field.min_value();
    let mut hi = field.max_value();
    if lo == hi {
        return Ok(lo);
    }
    let min_iters = (n_levels as f64).log2().ceil() as u32;
    for _ in 0..min_iters.max(60) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if crate::reeb::bruteforce::region_median_is_high(field, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Π(F,G) = |ζ(F+G) − ζ(F) − ζ(G)|.
pub fn pi_functional(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    let sum = f.try_add(g)?;
    Ok((zeta(&sum)? - zeta(f)? - zeta(g)?).abs())
}

/// Π against its Poisson-bracket bound √(2C·‖{F,G}‖).
#[derive(Clone, Copy, Debug)]
pub struct BracketReport {
    pub pi: f64,
    pub bracket_norm: f64,
    pub bound: f64,
    pub defect_c: f64,
    pub satisfied: bool,
}

pub fn bracket_inequality_report(
    f: &ScalarField,
    g: &ScalarField,
    cfg: QuasiStateConfig,
) -> Result<BracketReport> {
    let pi = pi_functional(f, g)?;
    let bracket_norm = poisson_bracket(f, g)?.uniform_norm();
    let bound = (2.0 * cfg.defect_c * bracket_norm).sqrt();
    Ok(BracketReport {
        pi,
        bracket_norm,
        bound,
        defect_c: cfg.defect_c,
        satisfied: pi <= bound + DISCRETIZATION_SLACK,
    })
}

impl BracketReport {
    pub const CSV_HEADER: &'static str = "pi,bracket_norm,bound,C,satisfied";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.pi, self.bracket_norm, self.bound, self.defect_c, self.satisfied
        )
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "pi = {}", self.pi);
        let _ = writeln!(s, "bracket_norm = {}", self.bracket_norm);
        let _ = writeln!(s, "bound = {}", self.bound);
        let _ = writeln!(s, "C = {}", self.defect_c);
        let _ = writeln!(s, "satisfied = {}", self.satisfied);
        s
    }
}

/// Lower bounds on how much uniform perturbation a non-commuting pair
/// tolerates: Υ ≥ Π²/2C, ε_max ≥ Π/2, and the profile
/// Υ(ε) ≥ (Π−2ε)²/2C for ε < Π/2.
#[derive(Clone, Debug)]
pub struct RobustnessReport {
    pub pi_value: f64,
    pub upsilon_lower: f64,
    pub eps_max_lower: f64,
    /// (ε, lower bound) samples; zero once ε ≥ Π/2.
    pub upsilon_curve: Vec<(f64, f64)>,
    /// Set when Π vanishes within tolerance and the bounds say nothing.
    pub vacuous: bool,
}

pub fn robustness_report(
    f: &ScalarField,
    g: &ScalarField,
    cfg: QuasiStateConfig,
    eps_samples: &[f64],
) -> Result<RobustnessReport> {
    let pi = pi_functional(f, g)?;
    let two_c = 2.0 * cfg.defect_c;
    let curve = eps_samples
        .iter()
        .map(|&eps| {
            let slack = pi - 2.0 * eps;
            let lower = if slack > 0.0 {
                slack * slack / two_c
            } else {
                0.0
            };
            (eps, lower)
        })
        .collect();
    Ok(RobustnessReport {
        pi_value: pi,
        upsilon_lower: pi * pi / two_c,
        eps_max_lower: pi / 2.0,
        upsilon_curve: curve,
        vacuous: pi <= 1e-9,
    })
}

impl RobustnessReport {
    pub fn text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "pi = {}", self.pi_value);
        let _ = writeln!(s, "upsilon_lower = {}", self.upsilon_lower);
        let _ = writeln!(s, "eps_max_lower = {}", self.eps_max_lower);
        let _ = writeln!(s, "vacuous = {}", self.vacuous);
        for (eps, lower) in &self.upsilon_curve {
            let _ = writeln!(s, "upsilon({eps}) = {lower}");
        }
        s
    }
}
