//! Two-qubit density matrices and their single-qubit marginals.
//!
//! Basis ordering is |00>, |01>, |10>, |11> with qubit A as the left tensor
//! factor. The X-state parameterization depends on this ordering.

use nalgebra::{DMatrix, Matrix2, Matrix4, Vector3, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Tolerance for Hermiticity, trace and positivity checks.
pub const VALIDITY_TOL: f64 = 1e-10;

/// Bloch vector of a single qubit, `rho = (I + y.sigma) / 2`.
pub type BlochVector = Vector3<f64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Pauli matrix `sigma_index`, with `sigma_0` the identity.
pub fn pauli(index: usize) -> Matrix2<C64> {
    match index {
        0 => Matrix2::new(ONE, ZERO, ZERO, ONE),
        1 => Matrix2::new(ZERO, ONE, ONE, ZERO),
        2 => Matrix2::new(ZERO, -I, I, ZERO),
        3 => Matrix2::new(ONE, ZERO, ZERO, -ONE),
        _ => panic!("pauli index {index} out of range"),
    }
}

/// Kronecker product of two 2x2 matrices, left factor acting on qubit A.
pub fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// One of the two parties sharing the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

/// Binary entropy `h(x)` of a qubit whose Bloch vector has length `x`, in bits.
///
/// `x` is clamped to `[0, 1]`; rounding can push Bloch norms slightly past 1.
pub fn binary_entropy(x: f64) -> f64 {
    let x = x.abs().min(1.0);
    let plus = 0.5 * (1.0 + x);
    let minus = 0.5 * (1.0 - x);
    -xlog2x(plus) - xlog2x(minus)
}

fn xlog2x(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * p.log2()
    }
}

/// Entropy in bits of a spectrum, with `0 log 0 = 0`.
///
/// Eigenvalues in `[-1e-10, 0)` are treated as zero; anything lower is an
/// invalid state.
pub fn entropy_from_eigenvalues(eigenvalues: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &lambda in eigenvalues {
        if lambda < -VALIDITY_TOL || !lambda.is_finite() {
            return Err(Error::NotPositive { eigenvalue: lambda });
        }
        let lambda = if (1.0..=1.0 + 1e-12).contains(&lambda) {
            1.0
        } else {
            lambda.max(0.0)
        };
        s -= xlog2x(lambda);
    }
    Ok(s.max(0.0))
}

/// Von Neumann entropy `-Tr rho log2 rho` of a Hermitian matrix of any size.
pub fn von_neumann_entropy(state: &DMatrix<C64>) -> Result<f64> {
    if !state.is_square() {
        return Err(Error::InvalidParameter("density matrix must be square".into()));
    }
    let eig = state.clone().symmetric_eigenvalues();
    entropy_from_eigenvalues(eig.as_slice())
}

/// A single-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitState {
    matrix: Matrix2<C64>,
}

impl QubitState {
    pub fn from_bloch(y: &BlochVector) -> Self {
        let mut m = pauli(0);
        for i in 0..3 {
            m += pauli(i + 1) * C64::from(y[i]);
        }
        Self { matrix: m * C64::from(0.5) }
    }

    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.matrix
    }

    pub fn bloch(&self) -> BlochVector {
        BlochVector::from_fn(|i, _| (self.matrix * pauli(i + 1)).trace().re)
    }

    pub fn entropy(&self) -> f64 {
        binary_entropy(self.bloch().norm())
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        let r = self.bloch().norm();
        [0.5 * (1.0 - r), 0.5 * (1.0 + r)]
    }
}

/// Two-qubit density matrix, validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    matrix: Matrix4<C64>,
}

impl TwoQubitState {
    /// Validates Hermiticity, unit trace and positivity (tolerance 1e-10).
    pub fn new(matrix: Matrix4<C64>) -> Result<Self> {
        for r in 0..4 {
            for c in 0..4 {
                let z = matrix[(r, c)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { row: r, col: c });
                }
            }
        }
        for r in 0..4 {
            for c in r..4 {
                let deviation = (matrix[(r, c)] - matrix[(c, r)].conj()).norm();
                if deviation > VALIDITY_TOL {
                    return Err(Error::NotHermitian { row: r, col: c, deviation });
                }
            }
        }
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > VALIDITY_TOL {
            return Err(Error::TraceNotOne { trace });
        }
        let state = Self { matrix };
        let min = state.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -VALIDITY_TOL {
            return Err(Error::NotPositive { eigenvalue: min });
        }
        Ok(state)
    }

    pub fn maximally_mixed() -> Self {
        Self { matrix: Matrix4::identity() * C64::from(0.25) }
    }

    /// Projector onto a (not necessarily normalized) pure state.
    pub fn pure(psi: &Vector4<C64>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidParameter("pure state vector must be nonzero".into()));
        }
        let psi = psi / C64::from(norm);
        Self::new(psi * psi.adjoint())
    }

    pub fn product(a: &QubitState, b: &QubitState) -> Self {
        Self { matrix: kron(a.matrix(), b.matrix()) }
    }

    /// Rebuilds `rho = 1/4 sum R_ab sigma_a (x) sigma_b` and validates it.
    pub fn from_correlation_matrix(r: &CorrelationMatrix) -> Result<Self> {
        Self::new(r.reconstruct())
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.matrix.symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    pub fn entropy(&self) -> Result<f64> {
        entropy_from_eigenvalues(&self.eigenvalues())
    }

    pub fn correlation_matrix(&self) -> CorrelationMatrix {
        pauli_expansion(self)
    }

    pub fn reduced(&self, keep: Party) -> QubitState {
        partial_trace(self, keep)
    }

    /// The same state with the roles of A and B exchanged.
    pub fn swap_parties(&self) -> Self {
        let swap = |k: usize| ((k & 1) << 1) | (k >> 1);
        Self { matrix: Matrix4::from_fn(|r, c| self.matrix[(swap(r), swap(c))]) }
    }

    /// `(U (x) V) rho (U (x) V)^dagger`.
    pub fn local_unitary(&self, u: &Matrix2<C64>, v: &Matrix2<C64>) -> Self {
        let w = kron(u, v);
        Self { matrix: w * self.matrix * w.adjoint() }
    }

    /// X-state parameters when every entry off the diagonal and anti-diagonal
    /// is at most `tol` in magnitude.
    pub fn x_params(&self, tol: f64) -> Option<XStateParams> {
        const NON_X: [(usize, usize); 8] =
            [(0, 1), (0, 2), (1, 0), (1, 3), (2, 0), (2, 3), (3, 1), (3, 2)];
        if NON_X.iter().any(|&(r, c)| self.matrix[(r, c)].norm() > tol) {
            return None;
        }
        let m = &self.matrix;
        let (u, mu) = m[(0, 3)].to_polar();
        let (v, nu) = m[(1, 2)].to_polar();
        Some(XStateParams {
            a: m[(0, 0)].re,
            b: m[(1, 1)].re,
            c: m[(2, 2)].re,
            d: m[(3, 3)].re,
            u,
            v,
            mu,
            nu,
        })
    }
}

/// Pauli-basis coefficients `R_ab = Tr[rho (sigma_a (x) sigma_b)]`.
///
/// Row 0 holds Bob's Bloch vector, column 0 Alice's, and the lower-right 3x3
/// block the correlation tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationMatrix(pub nalgebra::Matrix4<f64>);

impl CorrelationMatrix {
    pub fn entries(&self) -> &nalgebra::Matrix4<f64> {
        &self.0
    }

    pub fn alice_bloch(&self) -> BlochVector {
        BlochVector::new(self.0[(1, 0)], self.0[(2, 0)], self.0[(3, 0)])
    }

    pub fn bob_bloch(&self) -> BlochVector {
        BlochVector::new(self.0[(0, 1)], self.0[(0, 2)], self.0[(0, 3)])
    }

    pub fn correlations(&self) -> nalgebra::Matrix3<f64> {
        self.0.fixed_view::<3, 3>(1, 1).into_owned()
    }

    pub fn det(&self) -> f64 {
        self.0.determinant()
    }

    /// Correlation matrix with A and B exchanged.
    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn reconstruct(&self) -> Matrix4<C64> {
        let mut m = Matrix4::zeros();
        for a in 0..4 {
            for b in 0..4 {
                let coeff = self.0[(a, b)];
                if coeff != 0.0 {
                    m += kron(&pauli(a), &pauli(b)) * C64::from(coeff);
                }
            }
        }
        m * C64::from(0.25)
    }
}

pub fn pauli_expansion(rho: &TwoQubitState) -> CorrelationMatrix {
    let m = rho.matrix();
    CorrelationMatrix(nalgebra::Matrix4::from_fn(|a, b| {
        (m * kron(&pauli(a), &pauli(b))).trace().re
    }))
}

pub fn partial_trace(rho: &TwoQubitState, keep: Party) -> QubitState {
    let m = rho.matrix();
    let matrix = match keep {
        Party::A => Matrix2::from_fn(|i, j| m[(2 * i, 2 * j)] + m[(2 * i + 1, 2 * j + 1)]),
        Party::B => Matrix2::from_fn(|i, j| m[(i, j)] + m[(i + 2, j + 2)]),
    };
    QubitState { matrix }
}

/// `I = S(A) + S(B) - S(AB)` in bits.
pub fn mutual_information(rho: &TwoQubitState) -> Result<f64> {
    let sa = partial_trace(rho, Party::A).entropy();
    let sb = partial_trace(rho, Party::B).entropy();
    Ok(sa + sb - rho.entropy()?)
}

/// Parameters of a two-qubit X state: populations `a, b, c, d` on the
/// diagonal and coherences `u e^{i mu}` (|00><11|), `v e^{i nu}` (|01><10|).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XStateParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub u: f64,
    pub v: f64,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub nu: f64,
}

impl XStateParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.a, self.b, self.c, self.d, self.u, self.v, self.mu, self.nu];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("X-state parameters must be finite".into()));
        }
        if [self.a, self.b, self.c, self.d].iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidParameter("populations a, b, c, d must be nonnegative".into()));
        }
        let total = self.a + self.b + self.c + self.d;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("a+b+c+d = {total}, expected 1")));
        }
        if self.u < 0.0 || self.v < 0.0 {
            return Err(Error::InvalidParameter("coherence magnitudes u, v must be nonnegative".into()));
        }
        if self.u * self.u > self.a * self.d + 1e-12 {
            return Err(Error::PositivityViolation(format!(
                "u^2 = {} exceeds ad = {}",
                self.u * self.u,
                self.a * self.d
            )));
        }
        if self.v * self.v > self.b * self.c + 1e-12 {
            return Err(Error::PositivityViolation(format!(
                "v^2 = {} exceeds bc = {}",
                self.v * self.v,
                self.b * self.c
            )));
        }
        Ok(())
    }

    /// Bloch component `r_3` of Alice's marginal.
    pub fn alice_z(&self) -> f64 {
        self.a + self.b - self.c - self.d
    }

    /// Bloch component `s_3` of Bob's marginal.
    pub fn bob_z(&self) -> f64 {
        self.a - self.b + self.c - self.d
    }

    /// Closed form of `det R`.
    pub fn det_r(&self) -> f64 {
        16.0 * (self.b * self.c - self.a * self.d) * (self.u * self.u - self.v * self.v)
    }
}

pub fn make_x_state(params: &XStateParams) -> Result<TwoQubitState> {
    params.validate()?;
    let XStateParams { a, b, c, d, u, v, mu, nu } = *params;
    let w = C64::from_polar(u, mu);
    let z = C64::from_polar(v, nu);
    let mut m = Matrix4::zeros();
    m[(0, 0)] = C64::from(a);
    m[(1, 1)] = C64::from(b);
    m[(2, 2)] = C64::from(c);
    m[(3, 3)] = C64::from(d);
    m[(0, 3)] = w;
    m[(3, 0)] = w.conj();
    m[(1, 2)] = z;
    m[(2, 1)] = z.conj();
    TwoQubitState::new(m)
}

/// Bell-diagonal state `1/4 (I + sum_i t_i sigma_i (x) sigma_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellDiagonalParams {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
}

impl BellDiagonalParams {
    pub fn new(t1: f64, t2: f64, t3: f64) -> Result<Self> {
        let p = Self { t1, t2, t3 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { t1, t2, t3 } = *self;
        if ![t1, t2, t3].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter("Bell-diagonal coefficients must be finite".into()));
        }
        if 1.0 + t3 < (t1 - t2).abs() - 1e-12 || 1.0 - t3 < (t1 + t2).abs() - 1e-12 {
            return Err(Error::PositivityViolation(format!(
                "(t1, t2, t3) = ({t1}, {t2}, {t3}) violates 1 +- t3 >= |t1 -+ t2|"
            )));
        }
        Ok(())
    }

    /// The same state in X-state form (real coherences, phases 0 or pi).
    pub fn to_x_params(&self) -> XStateParams {
        let Self { t1, t2, t3 } = *self;
        let w = (t1 - t2) / 4.0;
        let z = (t1 + t2) / 4.0;
        let phase = |x: f64| if x < 0.0 { std::f64::consts::PI } else { 0.0 };
        XStateParams {
            a: (1.0 + t3) / 4.0,
            b: (1.0 - t3) / 4.0,
            c: (1.0 - t3) / 4.0,
            d: (1.0 + t3) / 4.0,
            u: w.abs(),
            v: z.abs(),
            mu: phase(w),
            nu: phase(z),
        }
    }

    pub fn to_state(&self) -> Result<TwoQubitState> {
        self.validate()?;
        let mut r = nalgebra::Matrix4::zeros();
        r[(0, 0)] = 1.0;
        r[(1, 1)] = self.t1;
        r[(2, 2)] = self.t2;
        r[(3, 3)] = self.t3;
        TwoQubitState::from_correlation_matrix(&CorrelationMatrix(r))
    }
}

/// Haar-random single-qubit unitary.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R) -> Matrix2<C64> {
    let mut q = [0.0f64; 4];
    for x in q.iter_mut() {
        *x = rng.sample(StandardNormal);
    }
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|c| c / n);
    Matrix2::new(
        C64::new(w, z),
        C64::new(y, x),
        C64::new(-y, x),
        C64::new(w, -z),
    )
}

/// Random X state: populations uniform on the simplex, coherence magnitudes
/// uniform up to their positivity bounds, phases uniform.
pub fn random_x_params<R: Rng + ?Sized>(rng: &mut R) -> XStateParams {
    let mut w = [0.0f64; 4];
    for x in w.iter_mut() {
        *x = -(1.0 - rng.random::<f64>()).ln();
    }
    let total: f64 = w.iter().sum();
    let [a, b, c, d] = w.map(|x| x / total);
    let tau = 2.0 * std::f64::consts::PI;
    XStateParams {
        a,
        b,
        c,
        d,
        u: (a * d).sqrt() * rng.random::<f64>(),
        v: (b * c).sqrt() * rng.random::<f64>(),
        mu: tau * rng.random::<f64>(),
        nu: tau * rng.random::<f64>(),
    }
}

/// Bell-diagonal coefficients uniform over the tetrahedron of valid states.
pub fn random_bell_diagonal<R: Rng + ?Sized>(rng: &mut R) -> BellDiagonalParams {
    loop {
        let t = [0; 3].map(|_| rng.random_range(-1.0..=1.0));
        if let Ok(p) = BellDiagonalParams::new(t[0], t[1], t[2]) {
            return p;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi_plus() -> TwoQubitState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        TwoQubitState::pure(&Vector4::new(C64::from(s), ZERO, ZERO, C64::from(s))).unwrap()
    }

    fn classical_bit() -> TwoQubitState {
        let p = XStateParams { a: 0.5, b: 0.0, c: 0.0, d: 0.5, u: 0.0, v: 0.0, mu: 0.0, nu: 0.0 };
        make_x_state(&p).unwrap()
    }

    fn max_abs_diff(a: &Matrix4<C64>, b: &Matrix4<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn uniform_x_state_is_maximally_mixed() {
        let p = XStateParams { a: 0.25, b: 0.25, c: 0.25, d: 0.25, u: 0.0, v: 0.0, mu: 0.0, nu: 0.0 };
        let rho = make_x_state(&p).unwrap();
        assert!(max_abs_diff(rho.matrix(), TwoQubitState::maximally_mixed().matrix()) < 1e-15);
    }

    #[test]
    fn pure_limit_x_state_is_phi_plus() {
        let p = XStateParams { a: 0.5, b: 0.0, c: 0.0, d: 0.5, u: 0.5, v: 0.0, mu: 0.0, nu: 0.0 };
        let rho = make_x_state(&p).unwrap();
        assert!(max_abs_diff(rho.matrix(), phi_plus().matrix()) < 1e-15);
    }

    #[test]
    fn generic_x_state_is_positive() {
        let p = XStateParams { a: 0.4, b: 0.1, c: 0.2, d: 0.3, u: 0.1, v: 0.1, mu: 0.0, nu: 0.0 };
        let rho = make_x_state(&p).unwrap();
        let eig = rho.eigenvalues();
        assert!(eig.iter().all(|&e| e >= 0.0), "{eig:?}");
        // Blocks {00,11} and {01,10}: eigenvalues (a+d)/2 +- sqrt(((a-d)/2)^2 + u^2).
        let expected = [
            0.35 - (0.05f64.powi(2) + 0.01).sqrt(),
            0.15 - (0.05f64.powi(2) + 0.01).sqrt(),
            0.15 + (0.05f64.powi(2) + 0.01).sqrt(),
            0.35 + (0.05f64.powi(2) + 0.01).sqrt(),
        ];
        let mut expected = expected.to_vec();
        expected.sort_by(f64::total_cmp);
        for (e, x) in eig.iter().zip(&expected) {
            assert!((e - x).abs() < 1e-12);
        }
    }

    #[test]
    fn x_state_rejects_excess_coherence() {
        let p = XStateParams { a: 0.4, b: 0.1, c: 0.2, d: 0.3, u: 0.4, v: 0.0, mu: 0.0, nu: 0.0 };
        assert!(matches!(make_x_state(&p), Err(Error::PositivityViolation(_))));
        let p = XStateParams { v: 0.2, u: 0.0, ..p };
        assert!(matches!(make_x_state(&p), Err(Error::PositivityViolation(_))));
    }

    #[test]
    fn maximally_mixed_has_trivial_expansion() {
        let r = pauli_expansion(&TwoQubitState::maximally_mixed());
        let mut expected = nalgebra::Matrix4::zeros();
        expected[(0, 0)] = 1.0;
        assert!((r.0 - expected).abs().max() < 1e-15);
    }

    #[test]
    fn phi_plus_expansion_is_diagonal() {
        let r = pauli_expansion(&phi_plus());
        let expected = nalgebra::Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, -1.0, 1.0));
        assert!((r.0 - expected).abs().max() < 1e-15);
    }

    #[test]
    fn x_state_expansion_matches_closed_form() {
        let p = XStateParams { a: 0.35, b: 0.15, c: 0.2, d: 0.3, u: 0.12, v: 0.08, mu: 0.7, nu: -1.1 };
        let r = pauli_expansion(&make_x_state(&p).unwrap()).0;
        let XStateParams { a, b, c, d, u, v, mu, nu } = p;
        let expected = nalgebra::Matrix4::new(
            1.0, 0.0, 0.0, a - b + c - d,
            0.0, 2.0 * u * mu.cos() + 2.0 * v * nu.cos(), -2.0 * u * mu.sin() + 2.0 * v * nu.sin(), 0.0,
            0.0, -2.0 * u * mu.sin() - 2.0 * v * nu.sin(), -2.0 * u * mu.cos() + 2.0 * v * nu.cos(), 0.0,
            a + b - c - d, 0.0, 0.0, a - b - c + d,
        );
        assert!((r - expected).abs().max() < 1e-14, "{r}");
        assert!((r.determinant() - p.det_r()).abs() < 1e-14);
    }

    #[test]
    fn marginals_of_simple_states() {
        let half = Matrix2::identity() * C64::from(0.5);
        let ra = TwoQubitState::maximally_mixed().reduced(Party::A);
        assert!((ra.matrix() - half).norm() < 1e-15);
        let ra = phi_plus().reduced(Party::A);
        assert!((ra.matrix() - half).norm() < 1e-15);

        let p = XStateParams { a: 0.4, b: 0.1, c: 0.2, d: 0.3, u: 0.1, v: 0.1, mu: 0.0, nu: 0.0 };
        let rho = make_x_state(&p).unwrap();
        let ra = rho.reduced(Party::A);
        assert!((ra.matrix() - half).norm() < 1e-15);
        assert!(ra.bloch().norm() < 1e-15);
        let rb = rho.reduced(Party::B);
        assert!((rb.bloch() - BlochVector::new(0.0, 0.0, p.bob_z())).norm() < 1e-15);
    }

    #[test]
    fn entropies() {
        assert!(phi_plus().entropy().unwrap().abs() < 1e-12);
        let half = QubitState::from_bloch(&BlochVector::zeros());
        assert!((half.entropy() - 1.0).abs() < 1e-15);
        // h(0.5) = -0.75 log2 0.75 - 0.25 log2 0.25
        let expected = -0.75 * 0.75f64.log2() - 0.25 * 0.25f64.log2();
        assert!((binary_entropy(0.5) - expected).abs() < 1e-15);
        assert!((binary_entropy(0.5) - 0.811278).abs() < 1e-6);
        let dm = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::from(0.75),
            C64::from(0.25),
        ]));
        assert!((von_neumann_entropy(&dm).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn entropy_rejects_negative_spectrum() {
        assert!(entropy_from_eigenvalues(&[1.1, -0.1]).is_err());
        assert!(entropy_from_eigenvalues(&[1.0 + 1e-11, -1e-11]).unwrap().abs() < 1e-9);
    }

    #[test]
    fn h_endpoints_and_monotonicity() {
        assert_eq!(binary_entropy(0.0), 1.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        let grid: Vec<f64> = (0..=1000).map(|k| binary_entropy(k as f64 / 1000.0)).collect();
        assert!(grid.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn mutual_information_examples() {
        let a = QubitState::from_bloch(&BlochVector::new(0.3, -0.2, 0.5));
        let b = QubitState::from_bloch(&BlochVector::new(0.0, 0.6, 0.1));
        let product = TwoQubitState::product(&a, &b);
        assert!(mutual_information(&product).unwrap().abs() < 1e-12);
        assert!((mutual_information(&phi_plus()).unwrap() - 2.0).abs() < 1e-12);
        assert!((mutual_information(&classical_bit()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validation_reports_offending_entry() {
        let mut m = *TwoQubitState::maximally_mixed().matrix();
        m[(1, 3)] = C64::new(0.1, 0.0);
        match TwoQubitState::new(m) {
            Err(Error::NotHermitian { row, col, .. }) => assert_eq!((row, col), (1, 3)),
            other => panic!("unexpected {other:?}"),
        }
        let m = Matrix4::identity() * C64::from(0.3);
        assert!(matches!(TwoQubitState::new(m), Err(Error::TraceNotOne { .. })));
        let mut m = Matrix4::zeros();
        m[(0, 0)] = C64::from(1.5);
        m[(1, 1)] = C64::from(-0.5);
        assert!(matches!(TwoQubitState::new(m), Err(Error::NotPositive { .. })));
    }

    #[test]
    fn bell_diagonal_round_trip_through_x_form() {
        let t = BellDiagonalParams::new(0.5, -0.2, 0.1).unwrap();
        let direct = t.to_state().unwrap();
        let via_x = make_x_state(&t.to_x_params()).unwrap();
        assert!(max_abs_diff(direct.matrix(), via_x.matrix()) < 1e-15);
        assert!(BellDiagonalParams::new(0.5, -0.5, 0.5).is_ok());
        assert!(BellDiagonalParams::new(1.0, 1.0, 0.5).is_err());
        let bell = BellDiagonalParams::new(1.0, -1.0, 1.0).unwrap().to_state().unwrap();
        assert!(max_abs_diff(bell.matrix(), phi_plus().matrix()) < 1e-15);
    }

    #[test]
    fn swap_parties_transposes_r() {
        let p = XStateParams { a: 0.35, b: 0.15, c: 0.2, d: 0.3, u: 0.12, v: 0.08, mu: 0.7, nu: -1.1 };
        let rho = make_x_state(&p).unwrap();
        let r = rho.correlation_matrix();
        let rs = rho.swap_parties().correlation_matrix();
        assert!((r.transpose().0 - rs.0).abs().max() < 1e-14);
        let xs = rho.swap_parties().x_params(1e-12).unwrap();
        assert!((xs.b - p.c).abs() < 1e-15 && (xs.nu + p.nu).abs() < 1e-12);
    }

    #[test]
    fn x_params_round_trip() {
        let p = XStateParams { a: 0.35, b: 0.15, c: 0.2, d: 0.3, u: 0.12, v: 0.08, mu: 0.7, nu: -1.1 };
        let q = make_x_state(&p).unwrap().x_params(1e-12).unwrap();
        for (x, y) in [(p.a, q.a), (p.u, q.u), (p.v, q.v), (p.mu, q.mu), (p.nu, q.nu)] {
            assert!((x - y).abs() < 1e-14);
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = TwoQubitState::pure(&Vector4::new(C64::from(s), C64::from(s), ZERO, ZERO)).unwrap();
        assert!(plus.x_params(1e-12).is_none());
    }
}
