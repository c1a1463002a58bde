//! On-shell kinematics of the two-body break-up observed by a detector pair.
//!
//! All quantities are in natural units (ħ = c = 1): masses, energies and
//! momenta share one unit, lengths carry its inverse. The frame is fixed by
//! the incoming momentum `p ∥ ẑ` and the detector separation
//! `r = x₁ − x₂ = r (sin α, 0, cos α)`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative tolerance on the energy-closure equality `P² + M² = (Δ₁ + Δ₂)²`.
pub const DEFAULT_CLOSURE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        Vec3::new(self * v.x, self * v.y, self * v.z)
    }
}

/// The decaying particle and the species it decays into.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProcessParams {
    /// Mass `m` of each outgoing particle.
    pub m: f64,
    /// Mass `M` of the decaying particle.
    pub mass_parent: f64,
    /// Magnitude `P = |p|` of the incoming spatial momentum.
    pub momentum: f64,
}

impl ProcessParams {
    pub fn new(m: f64, mass_parent: f64, momentum: f64) -> Self {
        Self {
            m,
            mass_parent,
            momentum,
        }
    }

    /// Incoming energy `ω_p = √(M² + P²)`.
    pub fn omega_p(&self) -> f64 {
        self.mass_parent.hypot(self.momentum)
    }

    /// Outgoing dispersion relation `E_k = √(m² + k²)`.
    pub fn energy(&self, k: f64) -> f64 {
        self.m.hypot(k)
    }

    pub fn momentum_vector(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, self.momentum)
    }
}

/// Two point-like (or spherical) detectors sharing the gaps `Δ₁`, `Δ₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectorPair {
    pub delta1: f64,
    pub delta2: f64,
    /// Separation `|x₁ − x₂|`.
    pub r: f64,
    /// Angle between the separation and the incoming momentum, in `[0, π]`.
    pub alpha: f64,
    pub eps1: f64,
    pub eps2: f64,
    /// Radius of a spherical detector; `None` means point-like.
    pub radius_a: Option<f64>,
}

impl DetectorPair {
    pub fn new(delta1: f64, delta2: f64, r: f64, alpha: f64) -> Self {
        Self {
            delta1,
            delta2,
            r,
            alpha,
            eps1: 1.0,
            eps2: 1.0,
            radius_a: None,
        }
    }

    pub fn with_geometry(self, r: f64, alpha: f64) -> Self {
        Self { r, alpha, ..self }
    }

    pub fn with_radius(self, radius_a: f64) -> Self {
        Self {
            radius_a: Some(radius_a),
            ..self
        }
    }

    /// `x₁ − x₂` in the frame where the incoming momentum points along `ẑ`.
    pub fn separation(&self) -> Vec3 {
        let (s, c) = self.alpha.sin_cos();
        Vec3::new(self.r * s, 0.0, self.r * c)
    }

    /// Overall coupling factor `ε₁²ε₂²/2`. It cancels in every normalized quantity.
    pub fn coupling_prefactor(&self) -> f64 {
        0.5 * (self.eps1 * self.eps2).powi(2)
    }

    /// Gaps assigned to (particle 1, particle 2) on a branch.
    pub fn gaps(&self, branch: Branch) -> (f64, f64) {
        match branch {
            Branch::OneTwo => (self.delta1, self.delta2),
            Branch::TwoOne => (self.delta2, self.delta1),
        }
    }
}

/// Assignment `(i, j)` of the gap `Δ_i` to particle 1 and `Δ_j` to particle 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Branch {
    OneTwo,
    TwoOne,
}

impl Branch {
    pub const ALL: [Branch; 2] = [Branch::OneTwo, Branch::TwoOne];

    pub fn swapped(self) -> Branch {
        match self {
            Branch::OneTwo => Branch::TwoOne,
            Branch::TwoOne => Branch::OneTwo,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::OneTwo => f.write_str("(1,2)"),
            Branch::TwoOne => f.write_str("(2,1)"),
        }
    }
}

/// On-shell magnitude `κ = √(Δ² − m²)` of a particle absorbed with energy `Δ`.
pub fn kappa(delta: f64, m: f64) -> Result<f64> {
    if !(delta.is_finite() && m.is_finite()) {
        return Err(Error::Domain(format!("non-finite gap {delta} or mass {m}")));
    }
    if delta < m {
        return Err(Error::Domain(format!(
            "detection channel closed: gap {delta} below mass {m}"
        )));
    }
    Ok(((delta - m) * (delta + m)).sqrt())
}

/// Cosine of the polar angle of `k₁` relative to `p` on branch `(i, j)`.
///
/// The caller gates on `|cos θ| ≤ 1`.
pub fn cos_theta(momentum: f64, kappa_i: f64, kappa_j: f64) -> Result<f64> {
    if momentum == 0.0 || kappa_i == 0.0 {
        return Err(Error::DegenerateGeometry(format!(
            "polar angle undefined for P = {momentum}, kappa_i = {kappa_i}"
        )));
    }
    Ok((momentum * momentum + kappa_i * kappa_i - kappa_j * kappa_j) / (2.0 * momentum * kappa_i))
}

/// On-shell quantities of one branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchKinematics {
    pub branch: Branch,
    /// `κ_i`; NaN when `Δ_i < m`.
    pub kappa_i: f64,
    /// `κ_j`; NaN when `Δ_j < m`.
    pub kappa_j: f64,
    /// `cos θ_ij`; NaN when undefined.
    pub cos_theta: f64,
    /// `sin θ_ij = √(1 − cos²θ_ij)`, meaningful when `open`.
    pub sin_theta: f64,
    /// Both Heaviside gates pass.
    pub open: bool,
}

impl BranchKinematics {
    pub fn compute(process: &ProcessParams, detectors: &DetectorPair, branch: Branch) -> Self {
        let (delta_i, delta_j) = detectors.gaps(branch);
        let m = process.m;
        let kappa_i = kappa(delta_i, m).unwrap_or(f64::NAN);
        let kappa_j = kappa(delta_j, m).unwrap_or(f64::NAN);
        let cos_theta = if kappa_i.is_nan() || kappa_j.is_nan() {
            f64::NAN
        } else {
            cos_theta(process.momentum, kappa_i, kappa_j).unwrap_or(f64::NAN)
        };
        let open = delta_i > m && !kappa_j.is_nan() && cos_theta.abs() <= 1.0;
        let sin_theta = if cos_theta.is_nan() {
            f64::NAN
        } else {
            (1.0 - cos_theta * cos_theta).max(0.0).sqrt()
        };
        Self {
            branch,
            kappa_i,
            kappa_j,
            cos_theta,
            sin_theta,
            open,
        }
    }

    /// Unit vector of `k₁` at azimuth `psi` (frame `p ∥ ẑ`).
    pub fn direction(&self, psi: f64) -> Vec3 {
        let (s, c) = psi.sin_cos();
        Vec3::new(self.sin_theta * c, self.sin_theta * s, self.cos_theta)
    }
}

/// One row of a [`ValidationReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    pub name: &'static str,
    pub relation: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub constraints: Vec<Constraint>,
    pub feasible: bool,
}

impl ValidationReport {
    pub fn get(&self, name: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<16} {:>24} {:^4} {:<24} {}",
            "constraint", "lhs", "", "rhs", "status"
        )?;
        for c in &self.constraints {
            writeln!(
                f,
                "{:<16} {:>24.16e} {:^4} {:<24.16e} {}",
                c.name,
                c.lhs,
                c.relation,
                c.rhs,
                if c.passed { "pass" } else { "FAIL" }
            )?;
        }
        write!(f, "feasible: {}", self.feasible)
    }
}

/// Checks every kinematic constraint with the default closure tolerance.
pub fn validate_params(process: &ProcessParams, detectors: &DetectorPair) -> ValidationReport {
    validate_params_with(process, detectors, DEFAULT_CLOSURE_TOLERANCE)
}

/// Checks every kinematic constraint; energy closure is accepted when
/// `|P² + M² − (Δ₁ + Δ₂)²| ≤ closure_rel · (Δ₁ + Δ₂)²`.
pub fn validate_params_with(
    process: &ProcessParams,
    detectors: &DetectorPair,
    closure_rel: f64,
) -> ValidationReport {
    let ProcessParams {
        m,
        mass_parent,
        momentum,
    } = *process;
    let (d1, d2) = (detectors.delta1, detectors.delta2);
    let k1 = kappa(d1, m).unwrap_or(f64::NAN);
    let k2 = kappa(d2, m).unwrap_or(f64::NAN);
    let total = (d1 + d2) * (d1 + d2);
    let invariant = momentum * momentum + mass_parent * mass_parent;

    let row = |name, relation, lhs: f64, rhs: f64, passed: bool| Constraint {
        name,
        relation,
        lhs,
        rhs,
        passed,
    };
    let constraints = vec![
        row("mass", ">", m, 0.0, m > 0.0),
        row("gap_1", ">", d1, m, d1 > m),
        row("gap_2", ">", d2, m, d2 > m),
        row("decay_threshold", ">=", mass_parent, 2.0 * m, mass_parent >= 2.0 * m),
        row(
            "energy_closure",
            "==",
            invariant,
            total,
            (invariant - total).abs() <= closure_rel * total,
        ),
        row("momentum_axis", ">", momentum, 0.0, momentum > 0.0),
        row("band_lower", "<=", (k1 - k2).abs(), momentum, (k1 - k2).abs() <= momentum),
        row("band_upper", "<=", momentum, k1 + k2, momentum <= k1 + k2),
        row("separation", ">=", detectors.r, 0.0, detectors.r >= 0.0),
        row(
            "tilt",
            "in",
            detectors.alpha,
            std::f64::consts::PI,
            (0.0..=std::f64::consts::PI).contains(&detectors.alpha),
        ),
    ];
    let feasible = constraints.iter().all(|c| c.passed);
    ValidationReport {
        constraints,
        feasible,
    }
}

/// Full momenta `(k₁, k₂)` on a branch at azimuth `psi`, with `k₁ + k₂ = p`.
pub fn reconstruct_momenta(
    process: &ProcessParams,
    detectors: &DetectorPair,
    branch: Branch,
    psi: f64,
) -> Result<(Vec3, Vec3)> {
    let kin = BranchKinematics::compute(process, detectors, branch);
    if !kin.open {
        return Err(Error::InfeasibleBranch(branch));
    }
    let k1 = kin.kappa_i * kin.direction(psi);
    let k2 = process.momentum_vector() - k1;
    Ok((k1, k2))
}

/// One solution of the classical planar break-up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalSolution {
    pub k1: [f64; 2],
    pub k2: [f64; 2],
    /// `false`: `|k₁|² = 2mΔ₁`; `true`: the particle labels are exchanged, `|k₁|² = 2mΔ₂`.
    pub swapped: bool,
}

/// Relative slack allowed on circle tangency before declaring no intersection.
const TANGENCY_SLACK: f64 = 1e-12;

/// Solves the nonrelativistic planar system `p = k₁ + k₂`, `|k₁|² = 2mΔ₁`,
/// `|k₂|² = 2mΔ₂` for both particle labelings.
///
/// Solutions are expressed in the input frame; the mirror pair about the
/// `p` axis is returned whenever it is distinct. For `p = 0` and equal radii
/// the back-to-back family is represented by `k₁ = (±R, 0)`.
pub fn solve_classical_2d(p: [f64; 2], m: f64, delta1: f64, delta2: f64) -> Vec<ClassicalSolution> {
    let mut out: Vec<ClassicalSolution> = Vec::new();
    if !(m > 0.0 && delta1 > 0.0 && delta2 > 0.0) {
        return out;
    }
    for (swapped, (da, db)) in [(false, (delta1, delta2)), (true, (delta2, delta1))] {
        for (k1, k2) in circle_intersections(p, (2.0 * m * da).sqrt(), (2.0 * m * db).sqrt()) {
            let candidate = ClassicalSolution { k1, k2, swapped };
            if !out.iter().any(|s| s.k1 == k1 && s.k2 == k2) {
                out.push(candidate);
            }
        }
    }
    out
}

/// Intersections of `|k₁| = r1` with `|p − k₁| = r2`.
fn circle_intersections(p: [f64; 2], r1: f64, r2: f64) -> Vec<([f64; 2], [f64; 2])> {
    let big_p = p[0].hypot(p[1]);
    if big_p == 0.0 {
        if (r1 - r2).abs() > TANGENCY_SLACK * r1.max(r2) {
            return Vec::new();
        }
        return vec![([r1, 0.0], [-r1, 0.0]), ([-r1, 0.0], [r1, 0.0])];
    }
    let along = [p[0] / big_p, p[1] / big_p];
    let across = [-along[1], along[0]];
    let a = (big_p * big_p + r1 * r1 - r2 * r2) / (2.0 * big_p);
    let h2 = r1 * r1 - a * a;
    if h2 < -TANGENCY_SLACK * r1 * r1 {
        return Vec::new();
    }
    let h = h2.max(0.0).sqrt();
    let make = |sign: f64| {
        let k1 = [
            a * along[0] + sign * h * across[0],
            a * along[1] + sign * h * across[1],
        ];
        (k1, [p[0] - k1[0], p[1] - k1[1]])
    };
    if h == 0.0 {
        vec![make(1.0)]
    } else {
        vec![make(1.0), make(-1.0)]
    }
}
