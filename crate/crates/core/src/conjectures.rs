//! Monte-Carlo probes of two state families where no closed form is known.
//!
//! The first family mixes `|00>` with an arbitrary real product state. Every
//! measurement on Bob leaves Alice's two conditional states on a fixed line
//! through `(0, 1)`, and the optimal pair is conjectured to sit at equal
//! distance from the origin. The second family shifts an axis-aligned
//! ellipsoid along `y3` and moves Alice's point off that axis; the optimal
//! chord is then either horizontal or not, and the two cases behave
//! differently.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Matrix2, Matrix4, Vector3, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discord::{
    brute_force_min_entropy, minimize_on_hemisphere, post_measurement_ensemble, Branch, CorrelationReport, Direction,
    EnsembleMember, GridSpec, ProjectiveMeasurement,
};
use crate::qstate::{binary_entropy, kron, mutual_information, BlochVector, CorrelationMatrix, Party, TwoQubitState};
use crate::steering::{steering_ellipsoid, SteeringEllipsoid, SINGULARITY_THRESHOLD};
use crate::{Error, Result, C64};

/// `rho = lambda |00><00| + (1 - lambda) |psi phi><psi phi|` with
/// `|psi> = cos(alpha)|0> + sin(alpha)|1>` and `|phi>` likewise with `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl MixtureParams {
    pub fn new(lambda: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = Self { lambda, alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let angle = |x: f64| (0.0..=FRAC_PI_2 + 1e-12).contains(&x);
        if !(0.0..=1.0).contains(&self.lambda) || !angle(self.alpha) || !angle(self.beta) {
            return Err(Error::InvalidParameter(format!(
                "mixture needs lambda in [0, 1] and alpha, beta in [0, pi/2], got ({}, {}, {})",
                self.lambda, self.alpha, self.beta
            )));
        }
        Ok(())
    }

    /// Alice's Bloch vector `((1-l) sin 2a, 0, l + (1-l) cos 2a)`.
    pub fn alice_bloch(&self) -> BlochVector {
        let w = 1.0 - self.lambda;
        let a2 = 2.0 * self.alpha;
        Vector3::new(w * a2.sin(), 0.0, self.lambda + w * a2.cos())
    }

    /// Implicit form `y1 sin(alpha) + y3 cos(alpha) - cos(alpha)` of the line
    /// every conditional state lies on; zero on the line.
    pub fn line_residual(&self, y: &BlochVector) -> f64 {
        let (s, c) = self.alpha.sin_cos();
        y.x * s + y.z * c - c
    }
}

pub fn make_mixture_state(p: &MixtureParams) -> Result<TwoQubitState> {
    p.validate()?;
    let (sa, ca) = p.alpha.sin_cos();
    let (sb, cb) = p.beta.sin_cos();
    let psi = Vector4::new(ca * cb, ca * sb, sa * cb, sa * sb).map(C64::from);
    let mut m: Matrix4<C64> = psi * psi.adjoint() * C64::from(1.0 - p.lambda);
    m[(0, 0)] += C64::from(p.lambda);
    TwoQubitState::new(m)
}

/// Conditional states of Alice from the closed-form expressions for this
/// family, with Bob's measurement written as `x = n / 2`.
pub fn mixture_ensemble(p: &MixtureParams, m: &ProjectiveMeasurement) -> [EnsembleMember; 2] {
    let w = 1.0 - p.lambda;
    let (s2a, c2a) = (2.0 * p.alpha).sin_cos();
    let (s2b, c2b) = (2.0 * p.beta).sin_cos();
    let x = m.direction() * 0.5;
    [1.0, -1.0].map(|sign| {
        let prob = 0.5 + sign * (x.x * w * s2b + x.z * (p.lambda + w * c2b));
        let y1 = 0.5 * w * s2a + sign * (x.x * w * s2a * s2b + x.z * w * s2a * c2b);
        let y3 = 0.5 * (p.lambda + w * c2a) + sign * (x.x * w * c2a * s2b + x.z * (p.lambda + w * c2a * c2b));
        EnsembleMember::from_weighted(prob, Vector3::new(y1, 0.0, y3))
    })
}

fn report_from_parts(
    rho: &TwoQubitState,
    min_avg_entropy: f64,
    optimal_measurement: ProjectiveMeasurement,
    optimal_ensemble: [EnsembleMember; 2],
    branch: Branch,
) -> Result<CorrelationReport> {
    let mutual_info = mutual_information(rho)?;
    let marginal_entropy = rho.reduced(Party::A).entropy();
    let classical = marginal_entropy - min_avg_entropy;
    Ok(CorrelationReport {
        direction: Direction::BToA,
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

/// Constrained and unconstrained optima may differ by this much before the
/// equi-entropy conjecture is reported as violated.
pub const CONJECTURE_TOLERANCE: f64 = 1e-4;

const EQUI_SCAN_NODES: usize = 2048;

/// Largest `|y+|` over measurements with `|y+| = |y-|`, and where it occurs.
///
/// Measurements with a `y` component only blur an `xz` measurement with an
/// uninformative one, so the search runs over the `xz` great circle. The
/// difference `|y+| - |y-|` flips sign under `n -> -n`, so a root always
/// exists on the half circle; every sign change is bisected.
pub fn equi_entropy_optimum(p: &MixtureParams) -> (f64, ProjectiveMeasurement) {
    let at = |theta: f64| ProjectiveMeasurement::from_angles(theta, 0.0);
    let split = |theta: f64| -> Option<(f64, f64)> {
        let [plus, minus] = mixture_ensemble(p, &at(theta));
        if plus.negligible || minus.negligible {
            return None;
        }
        let (a, b) = (plus.bloch.norm(), minus.bloch.norm());
        Some((a - b, 0.5 * (a + b)))
    };

    let step = PI / EQUI_SCAN_NODES as f64;
    let mut best: Option<(f64, f64)> = None;
    let mut consider = |theta: f64, radius: f64| {
        if best.is_none_or(|(r, _)| radius > r) {
            best = Some((radius, theta));
        }
    };
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=EQUI_SCAN_NODES {
        let theta = i as f64 * step;
        let Some((g, radius)) = split(theta) else {
            prev = None;
            continue;
        };
        if g.abs() <= 1e-13 {
            consider(theta, radius);
        }
        if let Some((t0, g0)) = prev {
            if g0 * g < 0.0 {
                let (mut lo, mut hi, mut glo) = (t0, theta, g0);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    match split(mid) {
                        Some((gm, _)) if (gm < 0.0) == (glo < 0.0) => {
                            lo = mid;
                            glo = gm;
                        }
                        Some(_) => hi = mid,
                        None => break,
                    }
                }
                let root = 0.5 * (lo + hi);
                if let Some((_, radius)) = split(root) {
                    consider(root, radius);
                }
            }
        }
        prev = Some((theta, g));
    }
    let (radius, theta) = best.expect("|y+| - |y-| changes sign on the half circle");
    (radius, at(theta))
}

/// Correlations of a mixture state assuming the optimal conditional states are
/// equidistant from the origin, cross-checked against the brute-force search.
pub fn mixture_correlations_via_conjecture(p: &MixtureParams, grid: &GridSpec) -> Result<CorrelationReport> {
    let rho = make_mixture_state(p)?;
    let (radius, m) = equi_entropy_optimum(p);
    let constrained = binary_entropy(radius);
    let unconstrained = brute_force_min_entropy(&rho.correlation_matrix(), grid).min_entropy;
    if (constrained - unconstrained).abs() > CONJECTURE_TOLERANCE {
        return Err(Error::ConjectureViolation {
            lambda: p.lambda,
            alpha: p.alpha,
            beta: p.beta,
            constrained,
            unconstrained,
        });
    }
    report_from_parts(&rho, constrained, m, mixture_ensemble(p, &m), Branch::EquiEntropy)
}

/// Unconstrained correlations of a mixture state.
pub fn mixture_correlations_numeric(p: &MixtureParams, grid: &GridSpec) -> Result<CorrelationReport> {
    let rho = make_mixture_state(p)?;
    let r = rho.correlation_matrix();
    let found = brute_force_min_entropy(&r, grid);
    let ensemble = post_measurement_ensemble(&r, &found.measurement);
    report_from_parts(&rho, found.min_entropy, found.measurement, ensemble, Branch::Numeric)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSample {
    pub index: usize,
    pub params: MixtureParams,
    pub optimal_measurement: ProjectiveMeasurement,
    /// `| |y+| - |y-| |` at the numerical optimum.
    pub gap: f64,
    pub min_entropy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapSummary {
    pub samples: usize,
    pub max_gap: f64,
    pub fraction_within_1e6: f64,
    pub fraction_within_1e5: f64,
    pub percentile_999: f64,
    /// Samples whose gap exceeds the counterexample threshold.
    pub counterexamples: Vec<GapSample>,
}

/// Gap above which a sample is recorded as a counterexample.
pub const COUNTEREXAMPLE_GAP: f64 = 1e-5;

impl GapSummary {
    pub fn from_samples(samples: &[GapSample]) -> Self {
        let mut gaps: Vec<f64> = samples.iter().map(|s| s.gap).collect();
        gaps.sort_by(f64::total_cmp);
        let n = gaps.len();
        let frac = |t: f64| if n == 0 { 0.0 } else { gaps.iter().filter(|&&g| g <= t).count() as f64 / n as f64 };
        let percentile_999 = if n == 0 { 0.0 } else { gaps[((0.999 * n as f64).ceil() as usize).clamp(1, n) - 1] };
        Self {
            samples: n,
            max_gap: gaps.last().copied().unwrap_or(0.0),
            fraction_within_1e6: frac(1e-6),
            fraction_within_1e5: frac(1e-5),
            percentile_999,
            counterexamples: samples.iter().filter(|s| s.gap > COUNTEREXAMPLE_GAP).copied().collect(),
        }
    }
}

/// Independent generator for sample `index`, so results do not depend on
/// how the work is split across threads.
pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// `lambda` uniform on `[0, 1]`, `alpha` and `beta` uniform on `[0, pi/2]`.
pub fn random_mixture<R: Rng + ?Sized>(rng: &mut R) -> MixtureParams {
    MixtureParams {
        lambda: rng.random_range(0.0..=1.0),
        alpha: rng.random_range(0.0..=FRAC_PI_2),
        beta: rng.random_range(0.0..=FRAC_PI_2),
    }
}

pub fn gap_sample(index: usize, params: MixtureParams, grid: &GridSpec) -> Result<GapSample> {
    let r = make_mixture_state(&params)?.correlation_matrix();
    let found = brute_force_min_entropy(&r, grid);
    let [plus, minus] = mixture_ensemble(&params, &found.measurement);
    let gap = if plus.negligible || minus.negligible { 0.0 } else { (plus.bloch.norm() - minus.bloch.norm()).abs() };
    Ok(GapSample { index, params, optimal_measurement: found.measurement, gap, min_entropy: found.min_entropy })
}

/// Draws `samples` random mixture states and measures `| |y+| - |y-| |` at
/// each brute-force optimum. Output is ordered by sample index.
pub fn test_equi_entropy_conjecture(samples: usize, seed: u64, grid: &GridSpec) -> Result<Vec<GapSample>> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    (0..samples)
        .into_par_iter()
        .map(|i| gap_sample(i, random_mixture(&mut sample_rng(seed, i)), grid))
        .collect()
}

/// Parameters of a state whose correlation matrix is
///
/// ```text
/// 1   s1  0   s3
/// r1  t11 0   t13
/// 0   0   t22 0
/// r3  t31 0   t33
/// ```
///
/// with `t11` and `t33` fixed by the other entries so that the steering
/// ellipsoid is axis aligned and centered on the `y3` axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralRParams {
    pub r1: f64,
    pub r3: f64,
    pub s1: f64,
    pub s3: f64,
    pub t13: f64,
    pub t22: f64,
    pub t31: f64,
}

/// `l1^2, l2^2, l3^2` and center height `Y3` of a general-R ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralREllipsoid {
    pub l1_sq: f64,
    pub l2_sq: f64,
    pub l3_sq: f64,
    pub y3: f64,
}

impl GeneralRParams {
    pub fn t11(&self) -> f64 {
        (self.r1 - self.s3 * self.t13) / self.s1
    }

    pub fn t33(&self) -> f64 {
        (self.r1 * self.r3 * self.s1 - self.r1 * self.t31 + self.s3 * self.t13 * self.t31) / (self.s1 * self.t13)
    }

    pub fn alice_bloch(&self) -> BlochVector {
        Vector3::new(self.r1, 0.0, self.r3)
    }

    pub fn correlation_matrix(&self) -> CorrelationMatrix {
        #[rustfmt::skip]
        let r = Matrix4::new(
            1.0,     self.s1,    0.0,      self.s3,
            self.r1, self.t11(), 0.0,      self.t13,
            0.0,     0.0,        self.t22, 0.0,
            self.r3, self.t31,   0.0,      self.t33(),
        );
        CorrelationMatrix(r)
    }

    /// Closed-form ellipsoid parameters of this family.
    pub fn ellipsoid(&self) -> GeneralREllipsoid {
        let Self { r1, r3, s1, s3, t13, t22, t31 } = *self;
        let bob = 1.0 - s1 * s1 - s3 * s3;
        let spread = r1 * r1 * (1.0 - s1 * s1) - 2.0 * r1 * s3 * t13 + (s1 * s1 + s3 * s3) * t13 * t13;
        GeneralREllipsoid {
            l1_sq: spread / (s1 * s1 * bob),
            l2_sq: t22 * t22 / bob,
            l3_sq: spread * (r3 * s1 - t31).powi(2) / (s1 * s1 * t13 * t13 * bob * bob),
            y3: (r3 * s1 * t13 - r1 * s3 * (r3 * s1 - t31) - t13 * t31 * (s1 * s1 + s3 * s3)) / (s1 * t13 * bob),
        }
    }
}

pub fn make_general_r_state(p: &GeneralRParams) -> Result<TwoQubitState> {
    let all = [p.r1, p.r3, p.s1, p.s3, p.t13, p.t22, p.t31];
    if all.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("general-R parameters must be finite".into()));
    }
    if p.s1.abs() < 1e-12 || p.t13.abs() < 1e-12 {
        return Err(Error::InvalidParameter("general-R family needs s1 != 0 and t13 != 0".into()));
    }
    let r = p.correlation_matrix();
    let det = r.det();
    if det.abs() <= SINGULARITY_THRESHOLD {
        return Err(Error::SingularCorrelationMatrix { det });
    }
    TwoQubitState::from_correlation_matrix(&r)
}

/// Uniform draws on `[-1, 1]^7`, rejected until the state is valid.
/// Returns the parameters and the number of draws used, or `None` after
/// `max_draws` rejections.
pub fn random_general_r<R: Rng + ?Sized>(rng: &mut R, max_draws: usize) -> Option<(GeneralRParams, usize)> {
    for draw in 1..=max_draws {
        let mut u = || rng.random_range(-1.0..=1.0);
        let p = GeneralRParams { r1: u(), r3: u(), s1: u(), s3: u(), t13: u(), t22: u(), t31: u() };
        if make_general_r_state(&p).is_ok() {
            return Some((p, draw));
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineClass {
    /// The optimal chord is horizontal and equi-entropic.
    I,
    II,
}

impl LineClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            LineClass::I => "I",
            LineClass::II => "II",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassThresholds {
    /// Largest `|y3|` component of the unit chord direction still called horizontal.
    pub chord_y3: f64,
    pub gap: f64,
}

impl Default for ClassThresholds {
    fn default() -> Self {
        Self { chord_y3: 1e-6, gap: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineClassification {
    pub class: LineClass,
    /// `| |y+| - |y-| |` of the optimal pair.
    pub gap: f64,
    /// `|y3|` component of the unit direction of the optimal chord.
    pub chord_y3: f64,
    pub s_min_a: f64,
    /// Quasi-eigen entropy of the projection `(0, 0, r3)` onto the axis,
    /// decomposed into the two apexes; only filled in for Class II.
    pub s_min_a_tilde: Option<f64>,
    pub optimal_measurement: ProjectiveMeasurement,
}

/// Average entropy of `(0, 0, z)` split between the apexes `(0, 0, Y3 +- l3)`.
pub fn apex_entropy(e: &GeneralREllipsoid, z: f64) -> f64 {
    let l3 = e.l3_sq.sqrt();
    let (top, bottom) = (e.y3 + l3, e.y3 - l3);
    let p_top = ((z - bottom) / (top - bottom)).clamp(0.0, 1.0);
    p_top * binary_entropy(top.abs()) + (1.0 - p_top) * binary_entropy(bottom.abs())
}

/// Entropy of the horizontal chords through Alice's point, along `y1` or `y2`,
/// whichever reaches farther from the origin.
pub fn horizontal_chord_entropy(p: &GeneralRParams) -> f64 {
    let e = p.ellipsoid();
    let height = 1.0 - (p.r3 - e.y3).powi(2) / e.l3_sq;
    let along_y1 = e.l1_sq * height;
    let along_y2 = p.r1 * p.r1 + e.l2_sq * (height - p.r1 * p.r1 / e.l1_sq);
    let reach = along_y1.max(along_y2).max(0.0) + p.r3 * p.r3;
    binary_entropy(reach.sqrt())
}

pub fn classify_optimal_line(p: &GeneralRParams, grid: &GridSpec, thresholds: &ClassThresholds) -> Result<LineClassification> {
    let rho = make_general_r_state(p)?;
    let r = rho.correlation_matrix();
    let found = brute_force_min_entropy(&r, grid);
    let [plus, minus] = post_measurement_ensemble(&r, &found.measurement);
    let chord = plus.bloch - minus.bloch;
    let chord_y3 = if chord.norm() > 0.0 { (chord.z / chord.norm()).abs() } else { 0.0 };
    let gap = (plus.bloch.norm() - minus.bloch.norm()).abs();
    let class =
        if chord_y3 <= thresholds.chord_y3 && gap <= thresholds.gap { LineClass::I } else { LineClass::II };
    let s_min_a_tilde = match class {
        LineClass::I => None,
        LineClass::II => Some(apex_entropy(&p.ellipsoid(), p.r3)),
    };
    Ok(LineClassification {
        class,
        gap,
        chord_y3,
        s_min_a: found.min_entropy,
        s_min_a_tilde,
        optimal_measurement: found.measurement,
    })
}

/// Smallest `p_M h(|M|) + p_N h(|N|)` over chords `MN` of the ellipsoid
/// through `point`, which must lie strictly inside.
pub fn chord_min_entropy(e: &SteeringEllipsoid, point: &BlochVector, grid: &GridSpec) -> Result<f64> {
    if e.semi_axes.iter().any(|&a| a <= 0.0) {
        return Err(Error::NotAnEllipsoid("chords need a solid ellipsoid".into()));
    }
    let local = e.to_local(point);
    let scale = Vector3::from(e.semi_axes).map(|a| 1.0 / a);
    let q = local.component_mul(&scale);
    if q.norm_squared() >= 1.0 {
        return Err(Error::InvalidParameter("point is not inside the ellipsoid".into()));
    }
    let objective = |d: &Vector3<f64>| {
        // Solve |q + t D|^2 = 1 with D the direction in unit-ball coordinates.
        let dl = (e.rotation.transpose() * d).component_mul(&scale);
        let (a, b, c) = (dl.norm_squared(), 2.0 * q.dot(&dl), q.norm_squared() - 1.0);
        let root = (b * b - 4.0 * a * c).sqrt();
        let (t_far, t_near) = ((-b + root) / (2.0 * a), (-b - root) / (2.0 * a));
        let (m, n) = (point + d * t_far, point + d * t_near);
        let p_m = -t_near / (t_far - t_near);
        p_m * binary_entropy(m.norm()) + (1.0 - p_m) * binary_entropy(n.norm())
    };
    Ok(minimize_on_hemisphere(objective, grid, |n, f| (f, n)).value)
}

/// The state obtained by sending one half of
/// `(|+>|0> + (0.8|0> + 0.6|1>)|1>) / sqrt 2` through the channel
/// `{|0><0| + |1><1| / sqrt 2, |0><1| / sqrt 2}` on qubit A.
pub fn synak_state() -> TwoQubitState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let psi0 = [h, h];
    let psi1 = [0.8, 0.6];
    // Basis order |a b> -> 2a + b.
    let psi = Vector4::new(psi0[0], psi1[0], psi0[1], psi1[1]).map(|x| C64::from(x * h));
    let pure = psi * psi.adjoint();
    let z = C64::from(0.0);
    let k1 = Matrix2::new(C64::from(1.0), z, z, C64::from(h));
    let k2 = Matrix2::new(z, C64::from(h), z, z);
    let id = Matrix2::identity();
    let mut m = Matrix4::zeros();
    for k in [k1, k2] {
        let kk = kron(&k, &id);
        m += kk * pure * kk.adjoint();
    }
    TwoQubitState::new(m).expect("channel output is a state")
}

/// Synak state parameters in the general-R template.
pub fn synak_params() -> GeneralRParams {
    let r = synak_state().correlation_matrix();
    let e = r.entries();
    GeneralRParams { r1: e[(1, 0)], r3: e[(3, 0)], s1: e[(0, 1)], s3: e[(0, 3)], t13: e[(1, 3)], t22: e[(2, 2)], t31: e[(3, 1)] }
}

/// Steering ellipsoid of a general-R state via the generic quadric route.
pub fn general_r_steering_ellipsoid(p: &GeneralRParams) -> Result<SteeringEllipsoid> {
    steering_ellipsoid(&p.correlation_matrix())
}
