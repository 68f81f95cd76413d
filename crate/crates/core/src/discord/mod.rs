//! Minimal average entropy, classical correlation and discord.
//!
//! Bob measures his qubit with a two-outcome rank-1 projective measurement
//! `M+- = (I +- n.sigma) / 2`; Alice's qubit is left in the ensemble
//! `{p+-, y+-}` and the average entropy `sum p h(|y|)` is minimized over `n`.
//! Measurements with more outcomes are not searched, so numeric results are
//! optimal within the projective class only.

mod oracle;

use std::f64::consts::PI;

use nalgebra::{Vector3, Vector4};

use crate::qstate::{
    binary_entropy, mutual_information, BellDiagonalParams, BlochVector, CorrelationMatrix, Party,
    TwoQubitState, XStateParams,
};
use crate::{Error, Result};

pub use oracle::{
    brute_force_min_entropy, minimize_on_hemisphere, EntropyObjective, GridSpec, HemisphereMinimum, OracleResult,
};

/// Outcome probabilities at or below this are dropped from the ensemble.
pub const NEGLIGIBLE_PROBABILITY: f64 = 1e-14;

/// Entries outside the X pattern must be at most this large for the
/// closed form to be selected automatically.
pub const X_STRUCTURE_TOL: f64 = 1e-12;

/// Two-outcome projective measurement along a unit Bloch direction.
/// `n` and `-n` describe the same measurement with outcomes relabeled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectiveMeasurement {
    direction: Vector3<f64>,
}

impl ProjectiveMeasurement {
    pub fn new(direction: Vector3<f64>) -> Result<Self> {
        let norm = direction.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter("measurement direction must be nonzero".into()));
        }
        Ok(Self { direction: direction / norm })
    }

    pub fn from_angles(polar: f64, azimuth: f64) -> Self {
        let (st, ct) = polar.sin_cos();
        let (sp, cp) = azimuth.sin_cos();
        Self { direction: Vector3::new(st * cp, st * sp, ct) }
    }

    pub fn direction(&self) -> &Vector3<f64> {
        &self.direction
    }

    /// Pauli-basis vectors `x+- = (1/2, +-n/2)` of the two elements.
    pub fn x_vectors(&self) -> [Vector4<f64>; 2] {
        let n = self.direction * 0.5;
        [Vector4::new(0.5, n[0], n[1], n[2]), Vector4::new(0.5, -n[0], -n[1], -n[2])]
    }
}

/// One member `{p_k, y_k}` of Alice's postmeasurement ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleMember {
    pub probability: f64,
    pub bloch: BlochVector,
    /// Set when the outcome probability is at most [`NEGLIGIBLE_PROBABILITY`];
    /// the member then has probability 0 and contributes no entropy.
    pub negligible: bool,
}

impl EnsembleMember {
    pub fn new(probability: f64, bloch: BlochVector) -> Self {
        if probability <= NEGLIGIBLE_PROBABILITY {
            Self { probability: 0.0, bloch: BlochVector::zeros(), negligible: true }
        } else {
            Self { probability, bloch, negligible: false }
        }
    }

    pub(crate) fn from_weighted(probability: f64, weighted: BlochVector) -> Self {
        if probability <= NEGLIGIBLE_PROBABILITY {
            Self::new(probability, BlochVector::zeros())
        } else {
            Self::new(probability, weighted / probability)
        }
    }
}

/// `p_k y_k = x_k R^T` for both outcomes of `m`.
pub fn post_measurement_ensemble(r: &CorrelationMatrix, m: &ProjectiveMeasurement) -> [EnsembleMember; 2] {
    m.x_vectors().map(|x| {
        let py = r.0 * x;
        EnsembleMember::from_weighted(py[0], Vector3::new(py[1], py[2], py[3]))
    })
}

/// `sum_k p_k h(|y_k|)` in bits.
pub fn avg_entropy(ensemble: &[EnsembleMember]) -> f64 {
    ensemble
        .iter()
        .filter(|m| !m.negligible)
        .map(|m| m.probability * binary_entropy(m.bloch.norm()))
        .sum()
}

/// Which decomposition of Alice's state attains the minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Two equiprobable states of equal entropy (horizontal chord `EF`).
    EquiEntropy,
    /// Two states sharing Alice's eigenbasis (vertical chord `GH`).
    QuasiEigen,
    /// Found by the brute-force search.
    Numeric,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::EquiEntropy => "equi_entropy",
            Branch::QuasiEigen => "quasi_eigen",
            Branch::Numeric => "numeric",
        }
    }
}

/// Both candidate average entropies of an X state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XStateEntropies {
    /// Quasi-eigendecomposition, measurement along `z`.
    pub s_gh: f64,
    /// Equi-entropy decomposition, in-plane measurement.
    pub s_ef: f64,
    pub min: f64,
    pub branch: Branch,
}

/// Quasi-eigendecomposition ensemble `{a+c, (a-c)/(a+c); b+d, (b-d)/(b+d)}`.
pub fn quasi_eigen_ensemble(p: &XStateParams) -> [EnsembleMember; 2] {
    [
        EnsembleMember::from_weighted(p.a + p.c, Vector3::new(0.0, 0.0, p.a - p.c)),
        EnsembleMember::from_weighted(p.b + p.d, Vector3::new(0.0, 0.0, p.b - p.d)),
    ]
}

/// Bloch length `sqrt(4 (u+v)^2 + r3^2)` of both equi-entropy members.
pub fn equi_entropy_radius(p: &XStateParams) -> f64 {
    (4.0 * (p.u + p.v).powi(2) + p.alice_z().powi(2)).sqrt()
}

/// The equi-entropy measurement `n = (sin t, cos t, 0)`, `t = (pi + mu - nu) / 2`.
pub fn equi_entropy_measurement(p: &XStateParams) -> ProjectiveMeasurement {
    let theta = 0.5 * (PI + p.mu - p.nu);
    ProjectiveMeasurement { direction: Vector3::new(theta.sin(), theta.cos(), 0.0) }
}

pub fn quasi_eigen_measurement() -> ProjectiveMeasurement {
    ProjectiveMeasurement { direction: Vector3::z() }
}

/// `min{S_GH, S_EF}`; exact ties are reported as quasi-eigen.
pub fn x_state_entropies(p: &XStateParams) -> XStateEntropies {
    let s_gh = avg_entropy(&quasi_eigen_ensemble(p));
    let s_ef = binary_entropy(equi_entropy_radius(p));
    let (min, branch) = if s_ef < s_gh - 1e-12 {
        (s_ef, Branch::EquiEntropy)
    } else {
        (s_gh.min(s_ef), Branch::QuasiEigen)
    };
    XStateEntropies { s_gh, s_ef, min, branch }
}

pub fn x_state_min_entropy(p: &XStateParams) -> (f64, Branch) {
    let e = x_state_entropies(p);
    (e.min, e.branch)
}

/// `min{h(|t1|), h(|t2|), h(|t3|)}`.
pub fn bell_diagonal_min_entropy(t: &BellDiagonalParams) -> f64 {
    [t.t1, t.t2, t.t3]
        .iter()
        .map(|x| binary_entropy(x.abs()))
        .fold(f64::INFINITY, f64::min)
}

/// Which party is measured: `BToA` is Bob measuring to learn about Alice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    BToA,
    AToB,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::BToA => "b-to-a",
            Direction::AToB => "a-to-b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Closed form for X states, brute force otherwise.
    Auto,
    Analytic,
    Numeric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub direction: Direction,
    pub mutual_info: f64,
    pub classical: f64,
    pub discord: f64,
    pub min_avg_entropy: f64,
    /// Entropy of the marginal being learned about.
    pub marginal_entropy: f64,
    pub optimal_measurement: ProjectiveMeasurement,
    pub optimal_ensemble: [EnsembleMember; 2],
    pub branch: Branch,
}

impl CorrelationReport {
    /// The minimization ranges over two-outcome projective measurements only.
    pub const SEARCH_SPACE: &'static str = "two_outcome_projective";
}

pub fn correlation_report(
    rho: &TwoQubitState,
    direction: Direction,
    method: Method,
    grid: &GridSpec,
) -> Result<CorrelationReport> {
    // Reorder so the learned-about party is always A and the measured one B.
    let oriented = match direction {
        Direction::BToA => rho.clone(),
        Direction::AToB => rho.swap_parties(),
    };
    let r = oriented.correlation_matrix();
    let mutual_info = mutual_information(rho)?;
    let marginal_entropy = oriented.reduced(Party::A).entropy();
    let x = oriented.x_params(X_STRUCTURE_TOL);

    let analytic = match (method, x) {
        (Method::Numeric, _) | (Method::Auto, None) => None,
        (Method::Analytic, None) => return Err(Error::UnsupportedStructure),
        (_, Some(p)) => Some(p),
    };

    let (min_avg_entropy, optimal_measurement, branch) = match analytic {
        Some(p) => {
            let e = x_state_entropies(&p);
            let m = match e.branch {
                Branch::EquiEntropy => equi_entropy_measurement(&p),
                _ => quasi_eigen_measurement(),
            };
            (e.min, m, e.branch)
        }
        None => {
            let found = brute_force_min_entropy(&r, grid);
            (found.min_entropy, found.measurement, Branch::Numeric)
        }
    };
    let optimal_ensemble = post_measurement_ensemble(&r, &optimal_measurement);
    let classical = marginal_entropy - min_avg_entropy;
    Ok(CorrelationReport {
        direction,
        mutual_info,
        classical,
        discord: mutual_info - classical,
        min_avg_entropy,
        marginal_entropy,
        optimal_measurement,
        optimal_ensemble,
        branch,
    })
}
