//! Brute-force minimization of the average entropy over measurement directions.

use std::f64::consts::{FRAC_PI_2, PI};
use std::str::FromStr;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use rayon::prelude::*;

use super::{ProjectiveMeasurement, NEGLIGIBLE_PROBABILITY};
use crate::qstate::{binary_entropy, BlochVector, CorrelationMatrix};
use crate::Error;

/// Hemisphere grid followed by local pattern-search refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Polar nodes on `[0, pi/2]`, endpoints included.
    pub polar: usize,
    /// Azimuth nodes on `[0, 2 pi)`.
    pub azimuth: usize,
    /// Refinement stops once the step drops below this (radians).
    pub min_step: f64,
    /// Number of grid minima refined independently.
    pub starts: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { polar: 181, azimuth: 360, min_step: 1e-6, starts: 4 }
    }
}

impl GridSpec {
    pub fn new(polar: usize, azimuth: usize) -> Self {
        Self { polar: polar.max(2), azimuth: azimuth.max(3), ..Self::default() }
    }

    /// Cheap grid for tests and large sweeps.
    pub fn coarse() -> Self {
        Self::new(31, 60)
    }

    pub fn nodes(&self) -> usize {
        self.polar * self.azimuth
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    /// Parses `<polar>x<azimuth>`, e.g. `181x360`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::InvalidParameter(format!("grid `{s}` is not of the form <polar>x<azimuth>"));
        let (p, a) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let polar: usize = p.trim().parse().map_err(|_| bad())?;
        let azimuth: usize = a.trim().parse().map_err(|_| bad())?;
        if polar < 2 || azimuth < 3 {
            return Err(Error::InvalidParameter(format!(
                "grid `{s}` needs at least 2 polar and 3 azimuth nodes"
            )));
        }
        Ok(Self::new(polar, azimuth))
    }
}

/// `n -> sum_+- p h(|y|)` with the pieces of `R` it needs precomputed.
#[derive(Debug, Clone, Copy)]
pub struct EntropyObjective {
    alice: BlochVector,
    bob: BlochVector,
    correlations: Matrix3<f64>,
}

impl EntropyObjective {
    pub fn new(r: &CorrelationMatrix) -> Self {
        Self { alice: r.alice_bloch(), bob: r.bob_bloch(), correlations: r.correlations() }
    }

    pub fn eval(&self, n: &Vector3<f64>) -> f64 {
        let sn = self.bob.dot(n);
        let tn = self.correlations * n;
        let mut total = 0.0;
        for sign in [1.0, -1.0] {
            let p = 0.5 * (1.0 + sign * sn);
            if p > NEGLIGIBLE_PROBABILITY {
                let weighted = 0.5 * (self.alice + sign * tn);
                total += p * binary_entropy(weighted.norm() / p);
            }
        }
        total
    }

    /// Euclidean gradient of [`Self::eval`] with respect to `n`.
    pub fn gradient(&self, n: &Vector3<f64>) -> Vector3<f64> {
        let sn = self.bob.dot(n);
        let tn = self.correlations * n;
        let mut grad = Vector3::zeros();
        for sign in [1.0, -1.0] {
            let p = 0.5 * (1.0 + sign * sn);
            if p <= NEGLIGIBLE_PROBABILITY {
                continue;
            }
            let w = 0.5 * (self.alice + sign * tn);
            let wn = w.norm();
            let x = (wn / p).min(1.0);
            // d/dx h(x) = log2((1 - x) / (1 + x)) / 2, finite only below 1.
            let slope = if x < 1.0 - 1e-15 {
                0.5 * ((1.0 - x) / (1.0 + x)).log2()
            } else {
                0.0
            };
            let dp = 0.5 * sign * self.bob;
            let dw_hat = if wn > 0.0 {
                0.5 * sign * self.correlations.transpose() * (w / wn)
            } else {
                Vector3::zeros()
            };
            grad += binary_entropy(x) * dp + slope * (dw_hat - x * dp);
        }
        grad
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub min_entropy: f64,
    pub measurement: ProjectiveMeasurement,
    pub evaluations: usize,
}

fn direction(polar: f64, azimuth: f64) -> Vector3<f64> {
    let (st, ct) = polar.sin_cos();
    let (sp, cp) = azimuth.sin_cos();
    Vector3::new(st * cp, st * sp, ct)
}

/// Minimizes the average entropy over two-outcome projective measurements.
///
/// Every node of the hemisphere grid is evaluated, then the best
/// `grid.starts` grid-local minima are refined by an 8-direction pattern
/// search in the tangent plane, halving the step until it falls below
/// `grid.min_step`, and finally polished with Newton steps on the analytic
/// gradient. The returned value never exceeds any grid node's value.
pub fn brute_force_min_entropy(r: &CorrelationMatrix, grid: &GridSpec) -> OracleResult {
    let objective = EntropyObjective::new(r);
    let mut polish_evals = 0;
    let found = minimize_on_hemisphere(|n| objective.eval(n), grid, |n, f| {
        let (f, n, evals) = newton_polish(&objective, n, f);
        polish_evals += evals;
        (f, n)
    });
    OracleResult {
        min_entropy: found.value,
        measurement: ProjectiveMeasurement::new(found.direction).expect("unit direction"),
        evaluations: found.evaluations + polish_evals,
    }
}

/// Minimum of a function on the unit sphere that is even under `n -> -n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HemisphereMinimum {
    pub value: f64,
    pub direction: Vector3<f64>,
    pub evaluations: usize,
}

/// Grid scan plus pattern search for any objective with `f(n) = f(-n)`.
///
/// `refine` gets each pattern-search result and may improve it further; pass
/// `|n, f| (f, n)` to skip that stage.
pub fn minimize_on_hemisphere<F, G>(f: F, grid: &GridSpec, mut refine: G) -> HemisphereMinimum
where
    F: Fn(&Vector3<f64>) -> f64 + Sync,
    G: FnMut(Vector3<f64>, f64) -> (f64, Vector3<f64>),
{
    let (np, na) = (grid.polar.max(2), grid.azimuth.max(3));
    let polar_step = FRAC_PI_2 / (np - 1) as f64;
    let azimuth_step = 2.0 * PI / na as f64;

    let values: Vec<f64> = (0..np)
        .into_par_iter()
        .flat_map_iter(|i| {
            let theta = i as f64 * polar_step;
            let f = &f;
            (0..na).map(move |j| f(&direction(theta, j as f64 * azimuth_step)))
        })
        .collect();
    let at = |i: usize, j: usize| values[i * na + j];

    let mut minima: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..np {
        for j in 0..na {
            let v = at(i, j);
            let mut neighbours = vec![at(i, (j + 1) % na), at(i, (j + na - 1) % na)];
            if i > 0 {
                neighbours.push(at(i - 1, j));
            }
            if i + 1 < np {
                neighbours.push(at(i + 1, j));
            }
            if neighbours.iter().all(|&w| v <= w) {
                minima.push((v, i, j));
            }
        }
    }
    minima.sort_by(|x, y| x.0.total_cmp(&y.0));
    minima.truncate(grid.starts.max(1));

    let step0 = polar_step.max(azimuth_step * 0.5);
    let mut best: Option<(f64, Vector3<f64>)> = None;
    let mut evaluations = values.len();
    for &(v, i, j) in &minima {
        let start = direction(i as f64 * polar_step, j as f64 * azimuth_step);
        let (fv, n, evals) = pattern_search(&f, start, v, step0, grid.min_step);
        let (fv, n) = refine(n, fv);
        evaluations += evals;
        if best.is_none_or(|(b, _)| fv < b) {
            best = Some((fv, n));
        }
    }
    let (value, direction) = best.expect("grid has at least one node");
    HemisphereMinimum { value, direction, evaluations }
}

fn tangent_basis(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = (helper - n * n.dot(&helper)).normalize();
    (e1, n.cross(&e1))
}

fn pattern_search<F: Fn(&Vector3<f64>) -> f64>(
    objective: &F,
    start: Vector3<f64>,
    start_value: f64,
    initial_step: f64,
    min_step: f64,
) -> (f64, Vector3<f64>, usize) {
    const MOVES: [(f64, f64); 8] = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (0.7071067811865476, 0.7071067811865476),
        (-0.7071067811865476, 0.7071067811865476),
        (0.7071067811865476, -0.7071067811865476),
        (-0.7071067811865476, -0.7071067811865476),
    ];
    let (mut n, mut f) = (start, start_value);
    let mut step = initial_step;
    let mut evals = 0;
    while step >= min_step {
        let (e1, e2) = tangent_basis(&n);
        let mut moved = false;
        for (a, b) in MOVES {
            let candidate = (n + (e1 * a + e2 * b) * step).normalize();
            let value = objective(&candidate);
            evals += 1;
            if value < f {
                n = candidate;
                f = value;
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (f, n, evals)
}

/// Gradient of `f(normalize(n0 + a e1 + b e2))` at `(a, b) = (0, 0)` shifted by `(a, b)`.
fn chart_gradient(
    objective: &EntropyObjective,
    n0: &Vector3<f64>,
    (e1, e2): (Vector3<f64>, Vector3<f64>),
    a: f64,
    b: f64,
) -> Vector2<f64> {
    let v = n0 + e1 * a + e2 * b;
    let len = v.norm();
    let n = v / len;
    let g = objective.gradient(&n);
    let along = |e: Vector3<f64>| g.dot(&((e - n * n.dot(&e)) / len));
    Vector2::new(along(e1), along(e2))
}

/// Drives the tangential gradient to zero with Newton steps.
///
/// Near a flat minimum the objective itself only resolves the direction to
/// about the square root of machine precision, while its gradient vanishes
/// linearly and pins the stationary point down much more tightly. Steps that
/// raise the objective beyond rounding noise are rejected.
fn newton_polish(objective: &EntropyObjective, start: Vector3<f64>, start_value: f64) -> (f64, Vector3<f64>, usize) {
    const FD: f64 = 1e-6;
    const ROUNDING: f64 = 1e-14;
    let (mut n, mut f) = (start, start_value);
    let mut evals = 0;
    for _ in 0..12 {
        let basis = tangent_basis(&n);
        let g0 = chart_gradient(objective, &n, basis, 0.0, 0.0);
        if g0.norm() < 1e-15 {
            break;
        }
        let ga = (chart_gradient(objective, &n, basis, FD, 0.0) - chart_gradient(objective, &n, basis, -FD, 0.0)) / (2.0 * FD);
        let gb = (chart_gradient(objective, &n, basis, 0.0, FD) - chart_gradient(objective, &n, basis, 0.0, -FD)) / (2.0 * FD);
        evals += 5;
        let hessian = Matrix2::from_columns(&[ga, gb]);
        let Some(step) = hessian.lu().solve(&(-g0)) else { break };
        if !step.iter().all(|x| x.is_finite()) || step.norm() > 1e-2 {
            break;
        }
        let candidate = (n + basis.0 * step.x + basis.1 * step.y).normalize();
        let value = objective.eval(&candidate);
        evals += 1;
        if value > f + ROUNDING {
            break;
        }
        let g1 = chart_gradient(objective, &candidate, tangent_basis(&candidate), 0.0, 0.0);
        if g1.norm() >= g0.norm() {
            break;
        }
        n = candidate;
        f = value.min(f);
    }
    (f, n, evals)
}
