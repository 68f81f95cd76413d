//! Quantum steering ellipsoids.
//!
//! For a two-qubit state with correlation matrix `R`, Bob's measurement
//! element `x = (x0, x1, x2, x3)` steers Alice to `p y = x R^T` with
//! `y = (1, y1, y2, y3)`. Positivity of the measurement element (`x0^2 >= |x|^2`)
//! becomes `y Q y^T >= 0` with `Q = R^{-T} eta R^{-1}`, `eta = diag(1,-1,-1,-1)`,
//! which cuts out an ellipsoid in Alice's Bloch ball.

use nalgebra::{Matrix3, Matrix4, SymmetricEigen, Vector3};
use serde::Serialize;

use crate::qstate::{BlochVector, CorrelationMatrix, TwoQubitState, XStateParams};
use crate::{Error, Result};

/// `|det R|` at or below this value routes to the degenerate classification.
pub const SINGULARITY_THRESHOLD: f64 = 1e-10;

/// Tolerance on the vanishing factors `ad - bc` and `u - v` of `det R`.
const FACTOR_TOL: f64 = 1e-9;

/// Semi-axes at or below this length are treated as collapsed.
const AXIS_EPS: f64 = 1e-12;

/// Points this far off a collapsed axis are outside a degenerate body.
const FLAT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneracy {
    Full,
    Ellipse,
    Segment,
    PointPair,
    Point,
}

impl Degeneracy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Degeneracy::Full => "full",
            Degeneracy::Ellipse => "ellipse",
            Degeneracy::Segment => "segment",
            Degeneracy::PointPair => "point_pair",
            Degeneracy::Point => "point",
        }
    }
}

/// Steering ellipsoid `{c + rotation * (a1 z1, a2 z2, a3 z3) : |z| <= 1}`.
///
/// Columns of `rotation` are the principal directions, paired with
/// `semi_axes` in order. `orientation` is the azimuth `phi` of the first
/// principal direction, measured so that `y1' = y1 cos phi - y2 sin phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringEllipsoid {
    pub center: BlochVector,
    pub semi_axes: [f64; 3],
    pub rotation: Matrix3<f64>,
    pub orientation: f64,
    pub degeneracy: Degeneracy,
}

/// Result of a membership test; `margin > 0` strictly inside, `~0` on the
/// surface and `< 0` outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Containment {
    pub inside: bool,
    pub margin: f64,
}

impl SteeringEllipsoid {
    fn about_y3(center_z: f64, semi_axes: [f64; 3], phi: f64, degeneracy: Degeneracy) -> Self {
        let (s, c) = phi.sin_cos();
        Self {
            center: Vector3::new(0.0, 0.0, center_z),
            semi_axes,
            rotation: Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0),
            orientation: phi,
            degeneracy,
        }
    }

    /// Coordinates of `y` in the principal frame centered on the ellipsoid.
    pub fn to_local(&self, y: &BlochVector) -> Vector3<f64> {
        self.rotation.transpose() * (y - self.center)
    }

    pub fn surface_point(&self, unit: &Vector3<f64>) -> BlochVector {
        let scaled = Vector3::from_fn(|i, _| self.semi_axes[i] * unit[i]);
        self.center + self.rotation * scaled
    }

    /// `rotation * diag(a^2) * rotation^T`; independent of axis ordering and
    /// of the sign or tie-breaking of principal directions.
    pub fn gram(&self) -> Matrix3<f64> {
        let d = Matrix3::from_diagonal(&Vector3::from_fn(|i, _| self.semi_axes[i].powi(2)));
        self.rotation * d * self.rotation.transpose()
    }

    pub fn contains(&self, y: &BlochVector) -> Containment {
        contains(self, y)
    }

    /// Upper and lower points where the vertical line through the center
    /// meets the surface. `None` when the body is flat along that line.
    pub fn vertical_apexes(&self) -> Option<(BlochVector, BlochVector)> {
        let mut inv = Matrix3::zeros();
        for i in 0..3 {
            if self.semi_axes[i] <= AXIS_EPS {
                return None;
            }
            inv[(i, i)] = self.semi_axes[i].powi(-2);
        }
        let shape = self.rotation * inv * self.rotation.transpose();
        let half = 1.0 / shape[(2, 2)].sqrt();
        let up = Vector3::new(0.0, 0.0, half);
        Some((self.center + up, self.center - up))
    }
}

/// Signed membership margin of `y` with respect to `e`.
pub fn contains(e: &SteeringEllipsoid, y: &BlochVector) -> Containment {
    let z = e.to_local(y);
    let mut q = 0.0;
    let mut off = 0.0f64;
    let mut any_axis = false;
    for i in 0..3 {
        let a = e.semi_axes[i];
        if a > AXIS_EPS {
            any_axis = true;
            q += (z[i] / a).powi(2);
        } else {
            off = off.max(z[i].abs());
        }
    }
    let mut margin = if any_axis { 1.0 - q } else { 0.0 };
    if off > FLAT_TOL {
        margin = margin.min(-off);
    }
    Containment { inside: margin >= -FLAT_TOL, margin }
}

/// The 4x4 quadric `Q = R^{-T} eta R^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadricForm(pub Matrix4<f64>);

impl QuadricForm {
    /// `y Q y^T` for `y = (1, point)`.
    pub fn evaluate(&self, point: &BlochVector) -> f64 {
        let y = nalgebra::Vector4::new(1.0, point[0], point[1], point[2]);
        (y.transpose() * self.0 * y)[(0, 0)]
    }
}

pub fn steering_quadric(r: &CorrelationMatrix) -> Result<QuadricForm> {
    let det = r.det();
    if det.abs() <= SINGULARITY_THRESHOLD {
        return Err(Error::SingularCorrelationMatrix { det });
    }
    let inv = r.0.try_inverse().ok_or(Error::SingularCorrelationMatrix { det })?;
    let eta = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, -1.0, -1.0, -1.0));
    let q = inv.transpose() * eta * inv;
    Ok(QuadricForm(0.5 * (q + q.transpose())))
}

pub fn quadric_to_ellipsoid(quadric: &QuadricForm) -> Result<SteeringEllipsoid> {
    let q = &quadric.0;
    // y Q y^T = q00 + 2 b.y - y^T N y
    let n: Matrix3<f64> = -q.fixed_view::<3, 3>(1, 1).into_owned();
    let b: Vector3<f64> = q.fixed_view::<3, 1>(1, 0).into_owned();
    let eig = SymmetricEigen::new(n);
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if eig.eigenvalues.iter().any(|&l| l <= 1e-12 * scale.max(1e-300)) {
        return Err(Error::NotAnEllipsoid(format!(
            "spatial block is not definite (eigenvalues {:?})",
            eig.eigenvalues.as_slice()
        )));
    }
    let center = eig.eigenvectors
        * Matrix3::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l))
        * eig.eigenvectors.transpose()
        * b;
    let k = q[(0, 0)] + center.dot(&(n * center));
    if k <= 0.0 {
        return Err(Error::NotAnEllipsoid(format!("empty region (level {k:e})")));
    }

    // Ascending eigenvalues give descending semi-axes.
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let lambdas: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut dirs: Vec<Vector3<f64>> = order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
    canonicalize_eigenspaces(&lambdas, &mut dirs);

    let mut rotation = Matrix3::from_columns(&[dirs[0], dirs[1], dirs[2]]);
    if rotation.determinant() < 0.0 {
        rotation.set_column(2, &(-rotation.column(2)));
    }
    let semi_axes = [0, 1, 2].map(|i| (k / lambdas[i]).sqrt());
    let first = rotation.column(0);
    Ok(SteeringEllipsoid {
        center,
        semi_axes,
        rotation,
        orientation: (-first[1]).atan2(first[0]),
        degeneracy: Degeneracy::Full,
    })
}

/// Replaces eigenvectors inside each repeated eigenspace by the basis closest
/// to the coordinate axes, and fixes signs so the dominant component is
/// positive.
fn canonicalize_eigenspaces(lambdas: &[f64], dirs: &mut [Vector3<f64>]) {
    let scale = lambdas.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut start = 0;
    while start < lambdas.len() {
        let mut end = start + 1;
        while end < lambdas.len() && (lambdas[end] - lambdas[start]).abs() <= 1e-9 * scale {
            end += 1;
        }
        if end - start > 1 {
            let projector: Matrix3<f64> = dirs[start..end].iter().map(|v| v * v.transpose()).sum();
            let mut axes: Vec<(usize, f64)> =
                (0..3).map(|i| (i, projector.column(i).norm())).collect();
            axes.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
            let mut basis: Vec<Vector3<f64>> = Vec::new();
            for &(i, _) in &axes {
                if basis.len() == end - start {
                    break;
                }
                let mut v = projector.column(i).into_owned();
                for w in &basis {
                    v -= w * w.dot(&v);
                }
                if v.norm() > 1e-6 {
                    basis.push(v.normalize());
                }
            }
            if basis.len() == end - start {
                // Keep coordinate order for the tie so ties map onto the identity.
                basis.sort_by_key(|v| v.iamax());
                dirs[start..end].copy_from_slice(&basis);
            }
        }
        start = end;
    }
    for v in dirs.iter_mut() {
        if v[v.iamax()] < 0.0 {
            *v = -*v;
        }
    }
}

/// Semi-axes `l1, l2, l3` and center height `Y3` of an X state's ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XEllipsoidParams {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub y3: f64,
    pub phi: f64,
}

impl XEllipsoidParams {
    /// `None` when Bob's marginal is pure, `(a+c)(b+d) = 0`.
    pub fn from_x_state(p: &XStateParams) -> Option<Self> {
        let denom = (p.a + p.c) * (p.b + p.d);
        if denom <= 1e-300 {
            return None;
        }
        let root = denom.sqrt();
        Some(Self {
            l1: (p.u + p.v) / root,
            l2: (p.u - p.v).abs() / root,
            l3: (p.a * p.d - p.b * p.c).abs() / denom,
            y3: (p.a * p.b - p.c * p.d) / denom,
            phi: 0.5 * (p.mu + p.nu),
        })
    }
}

/// Closed-form steering ellipsoid of an X state; degenerate parameter sets
/// are delegated to [`classify_degenerate`].
pub fn ellipsoid_from_x_state(p: &XStateParams) -> SteeringEllipsoid {
    if p.det_r().abs() <= SINGULARITY_THRESHOLD {
        return classify_degenerate(p);
    }
    let e = XEllipsoidParams::from_x_state(p).expect("nonsingular R implies mixed Bob marginal");
    SteeringEllipsoid::about_y3(e.y3, [e.l1, e.l2, e.l3], e.phi, Degeneracy::Full)
}

/// Steering body of an X state with `det R = 0`.
///
/// - `ad = bc`, `u != v`: flat ellipse (axes `l1, l2`) centered on Alice's point.
/// - `ad = bc`, `u = v != 0`: segment with endpoints `y1' = +-l1`.
/// - `ad != bc`, `u = v != 0`: ellipse in the `y1' y3` plane.
/// - `u = v = 0`, `ad != bc`: the point pair `G`, `H` on the `y3` axis.
/// - `u = v = 0`, `ad = bc`: product state, a single point.
///
/// Nonsingular input is returned with degeneracy `Full`.
pub fn classify_degenerate(p: &XStateParams) -> SteeringEllipsoid {
    let Some(e) = XEllipsoidParams::from_x_state(p) else {
        return SteeringEllipsoid::about_y3(p.alice_z(), [0.0; 3], 0.0, Degeneracy::Point);
    };
    let ad_bc = (p.a * p.d - p.b * p.c).abs();
    let u_minus_v = (p.u - p.v).abs();
    let u_plus_v = p.u + p.v;

    let (mut ad_bc_zero, mut u_eq_v) = (ad_bc <= FACTOR_TOL, u_minus_v <= FACTOR_TOL);
    if !ad_bc_zero && !u_eq_v && p.det_r().abs() <= SINGULARITY_THRESHOLD {
        // Both factors small but above tolerance: collapse the smaller one.
        if ad_bc <= u_minus_v * u_plus_v {
            ad_bc_zero = true;
        } else {
            u_eq_v = true;
        }
    }
    let coherent = u_plus_v > FACTOR_TOL;

    let (axes, degeneracy) = match (ad_bc_zero, u_eq_v, coherent) {
        (_, _, false) if ad_bc_zero => ([0.0; 3], Degeneracy::Point),
        (_, _, false) => ([0.0, 0.0, e.l3], Degeneracy::PointPair),
        (true, false, true) => ([e.l1, e.l2, 0.0], Degeneracy::Ellipse),
        (true, true, true) => ([e.l1, 0.0, 0.0], Degeneracy::Segment),
        (false, true, true) => ([e.l1, 0.0, e.l3], Degeneracy::Ellipse),
        (false, false, true) => ([e.l1, e.l2, e.l3], Degeneracy::Full),
    };
    let center = if degeneracy == Degeneracy::Point { p.alice_z() } else { e.y3 };
    SteeringEllipsoid::about_y3(center, axes, e.phi, degeneracy)
}

/// Steering ellipsoid from a correlation matrix via the quadric.
pub fn steering_ellipsoid(r: &CorrelationMatrix) -> Result<SteeringEllipsoid> {
    quadric_to_ellipsoid(&steering_quadric(r)?)
}

/// Closed form for X states (within 1e-12), quadric path otherwise.
pub fn ellipsoid_for_state(rho: &TwoQubitState) -> Result<SteeringEllipsoid> {
    match rho.x_params(1e-12) {
        Some(p) => Ok(ellipsoid_from_x_state(&p)),
        None => steering_ellipsoid(&rho.correlation_matrix()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{make_x_state, BellDiagonalParams};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn bell_state_quadric_is_unit_sphere() {
        let r = CorrelationMatrix(Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, -1.0, 1.0)));
        let q = steering_quadric(&r).unwrap();
        for y in [Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 0.6, 0.8)] {
            assert!(q.evaluate(&y).abs() < 1e-14);
        }
        let e = quadric_to_ellipsoid(&q).unwrap();
        assert!(e.center.norm() < 1e-14);
        assert!(e.semi_axes.iter().all(|&a| close(a, 1.0, 1e-14)));
        assert!((e.rotation - Matrix3::identity()).abs().max() < 1e-14);
    }

    #[test]
    fn bell_diagonal_quadric_has_standard_form() {
        let t = BellDiagonalParams::new(0.5, 0.2, 0.1).unwrap();
        let e = steering_ellipsoid(&t.to_state().unwrap().correlation_matrix()).unwrap();
        assert!(e.center.norm() < 1e-12);
        for (a, x) in e.semi_axes.iter().zip([0.5, 0.2, 0.1]) {
            assert!(close(*a, x, 1e-12), "{:?}", e.semi_axes);
        }
        assert!((e.rotation - Matrix3::identity()).abs().max() < 1e-12);
    }

    #[test]
    fn x_state_closed_form_values() {
        let p = XStateParams { a: 0.4, b: 0.1, c: 0.2, d: 0.3, u: 0.1, v: 0.1, mu: 0.0, nu: 0.0 };
        let e = ellipsoid_from_x_state(&p);
        assert_eq!(e.degeneracy, Degeneracy::Ellipse);
        assert!(close(e.semi_axes[0], 0.2 / 0.24f64.sqrt(), 1e-15));
        assert!(close(e.semi_axes[0], 0.40825, 1e-5));
        assert_eq!(e.semi_axes[1], 0.0);
        assert!(close(e.semi_axes[2], 0.1 / 0.24, 1e-15));
        assert!(close(e.center[2], -0.02 / 0.24, 1e-15));
    }

    #[test]
    fn bell_diagonal_as_x_state() {
        for (t1, t2, t3) in [(0.5, 0.2, 0.1), (-0.3, 0.5, -0.15), (0.1, -0.7, 0.2)] {
            let t = BellDiagonalParams::new(t1, t2, t3).unwrap();
            let e = ellipsoid_from_x_state(&t.to_x_params());
            assert_eq!(e.degeneracy, Degeneracy::Full);
            assert!(e.center.norm() < 1e-15);
            let mut axes = e.semi_axes;
            axes.sort_by(f64::total_cmp);
            let mut expected = [t1.abs(), t2.abs(), t3.abs()];
            expected.sort_by(f64::total_cmp);
            for (a, x) in axes.iter().zip(expected) {
                assert!(close(*a, x, 1e-14));
            }
        }
    }

    #[test]
    fn quadric_and_closed_form_agree() {
        let p = XStateParams { a: 0.4, b: 0.1, c: 0.2, d: 0.3, u: 0.1, v: 0.05, mu: 0.4, nu: -0.9 };
        let closed = ellipsoid_from_x_state(&p);
        let numeric = steering_ellipsoid(&make_x_state(&p).unwrap().correlation_matrix()).unwrap();
        assert!((closed.center - numeric.center).norm() < 1e-10);
        assert!((closed.gram() - numeric.gram()).abs().max() < 1e-10);
    }

    #[test]
    fn pure_bell_x_params_fill_the_bloch_sphere() {
        // det R = 16 (bc - ad)(u^2 - v^2) = -1 for |Phi+>.
        let p = XStateParams { a: 0.5, b: 0.0, c: 0.0, d: 0.5, u: 0.5, v: 0.0, mu: 0.0, nu: 0.0 };
        assert!((p.det_r() + 1.0).abs() < 1e-15);
        let e = ellipsoid_from_x_state(&p);
        assert_eq!(e.degeneracy, Degeneracy::Full);
        assert!(e.semi_axes.iter().all(|&a| close(a, 1.0, 1e-15)));
        assert!(e.center.norm() < 1e-15);
    }

    #[test]
    fn degenerate_cases() {
        let seg = XStateParams { a: 0.25, b: 0.25, c: 0.25, d: 0.25, u: 0.25, v: 0.25, mu: 0.0, nu: 0.0 };
        let e = classify_degenerate(&seg);
        assert_eq!(e.degeneracy, Degeneracy::Segment);
        assert!(close(e.semi_axes[0], 1.0, 1e-15));
        let ends = [Vector3::new(1.0, 0.0, 0.0), Vector3::new(-1.0, 0.0, 0.0)];
        for y in ends {
            assert!(e.contains(&y).margin.abs() < 1e-12);
        }

        let (a, b, c, d) = (0.4, 0.1, 0.2, 0.3);
        let pair = XStateParams { a, b, c, d, u: 0.0, v: 0.0, mu: 0.0, nu: 0.0 };
        let e = classify_degenerate(&pair);
        assert_eq!(e.degeneracy, Degeneracy::PointPair);
        let g = e.center[2] + e.semi_axes[2];
        let h = e.center[2] - e.semi_axes[2];
        assert!(close(g, (a - c) / (a + c), 1e-15));
        assert!(close(h, (b - d) / (b + d), 1e-15));

        // ad = bc, u = v = 0 is a product state.
        let prod = XStateParams { a: 0.3, b: 0.2, c: 0.3, d: 0.2, u: 0.0, v: 0.0, mu: 0.0, nu: 0.0 };
        assert_eq!(classify_degenerate(&prod).degeneracy, Degeneracy::Point);

        // ad = bc with u != v: flat ellipse.
        let flat = XStateParams { a: 0.3, b: 0.2, c: 0.3, d: 0.2, u: 0.2, v: 0.1, mu: 0.0, nu: 0.0 };
        let e = classify_degenerate(&flat);
        assert_eq!(e.degeneracy, Degeneracy::Ellipse);
        assert_eq!(e.semi_axes[2], 0.0);
        assert!(close(e.center[2], flat.alice_z(), 1e-15));
    }

    #[test]
    fn degeneracy_flips_under_perturbation() {
        // ad != bc, u = v: ellipse; pull v off u until |det R| >= 10x threshold.
        let base = XStateParams { a: 0.4, b: 0.1, c: 0.2, d: 0.3, u: 0.1, v: 0.1, mu: 0.0, nu: 0.0 };
        assert_eq!(ellipsoid_from_x_state(&base).degeneracy, Degeneracy::Ellipse);
        let delta = 10.0 * SINGULARITY_THRESHOLD / (16.0 * 0.1 * 2.0 * 0.1) * 1.01;
        let moved = XStateParams { v: 0.1 - delta, ..base };
        assert!(moved.det_r().abs() >= 10.0 * SINGULARITY_THRESHOLD);
        assert_eq!(ellipsoid_from_x_state(&moved).degeneracy, Degeneracy::Full);
    }

    #[test]
    fn singular_r_is_rejected_by_quadric() {
        let p = XStateParams { a: 0.4, b: 0.1, c: 0.2, d: 0.3, u: 0.1, v: 0.1, mu: 0.0, nu: 0.0 };
        let r = make_x_state(&p).unwrap().correlation_matrix();
        assert!(matches!(steering_quadric(&r), Err(Error::SingularCorrelationMatrix { .. })));
    }

    #[test]
    fn indefinite_quadric_is_rejected() {
        let q = QuadricForm(Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, -1.0, 1.0, -1.0)));
        assert!(matches!(quadric_to_ellipsoid(&q), Err(Error::NotAnEllipsoid(_))));
    }

    #[test]
    fn containment_signs() {
        let p = XStateParams { a: 0.4, b: 0.1, c: 0.2, d: 0.3, u: 0.1, v: 0.05, mu: 0.4, nu: -0.9 };
        let e = ellipsoid_from_x_state(&p);
        assert!(e.contains(&e.center).margin > 0.99);
        let s = e.surface_point(&Vector3::new(0.6, 0.0, 0.8));
        assert!(e.contains(&s).margin.abs() < 1e-12);
        assert!(e.contains(&Vector3::new(0.0, 0.0, 0.99)).margin < 0.0);
    }

    #[test]
    fn x_state_orientation_tracks_phases() {
        let p = XStateParams { a: 0.3, b: 0.2, c: 0.2, d: 0.3, u: 0.15, v: 0.05, mu: 0.8, nu: 0.2 };
        let e = ellipsoid_from_x_state(&p);
        assert!(close(e.orientation, 0.5, 1e-15));
        let numeric = steering_ellipsoid(&make_x_state(&p).unwrap().correlation_matrix()).unwrap();
        assert!((e.gram() - numeric.gram()).abs().max() < 1e-10);
    }
}
