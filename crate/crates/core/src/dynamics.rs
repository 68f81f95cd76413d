//! Local decoherence channels and correlation trajectories.
//!
//! Under phase damping on both qubits the X-state coherences decay as
//! `gamma^2`, so the steering ellipsoid shrinks in the `y1 y2` plane while its
//! height and center stay put. The equi-entropy branch then loses to the
//! quasi-eigendecomposition at a single critical time, after which the
//! classical correlation freezes.

use nalgebra::{Matrix2, Matrix4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discord::{
    correlation_report, x_state_entropies, CorrelationReport, Direction, GridSpec, Method, X_STRUCTURE_TOL,
};
use crate::qstate::{kron, pauli, BellDiagonalParams, TwoQubitState, XStateParams};
use crate::steering::{ellipsoid_for_state, XEllipsoidParams};
use crate::{Error, Result, C64};

/// Which qubits a local channel acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelTarget {
    A,
    B,
    #[default]
    Both,
}

/// Phase damping with coherence factor `gamma = exp(-rate t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDampingChannel {
    pub gamma: f64,
    /// Zero when the channel was built directly from `gamma`.
    pub rate: f64,
}

impl PhaseDampingChannel {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!("phase damping gamma = {gamma} is outside [0, 1]")));
        }
        Ok(Self { gamma, rate: 0.0 })
    }

    pub fn at_time(rate: f64, t: f64) -> Result<Self> {
        if !(rate >= 0.0 && t >= 0.0) {
            return Err(Error::InvalidParameter(format!("rate {rate} and time {t} must be nonnegative")));
        }
        Ok(Self { gamma: (-rate * t).exp(), rate })
    }

    /// `K1 = diag(gamma, 1)`, `K2 = diag(sqrt(1 - gamma^2), 0)`.
    pub fn kraus(&self) -> [Matrix2<C64>; 2] {
        let g = self.gamma;
        [
            Matrix2::new(C64::from(g), C64::from(0.0), C64::from(0.0), C64::from(1.0)),
            Matrix2::new(
                C64::from((1.0 - g * g).max(0.0).sqrt()),
                C64::from(0.0),
                C64::from(0.0),
                C64::from(0.0),
            ),
        ]
    }
}

/// A single-qubit channel with concrete strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Channel {
    PhaseDamping(PhaseDampingChannel),
    /// Decay probability `p` from `|1>` to `|0>`.
    AmplitudeDamping { p: f64 },
    /// Pauli errors with probabilities `px, py, pz`.
    Pauli { px: f64, py: f64, pz: f64 },
}

impl Channel {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        match *self {
            Channel::PhaseDamping(ch) => PhaseDampingChannel::new(ch.gamma).map(|_| ()),
            Channel::AmplitudeDamping { p } if unit(p) => Ok(()),
            Channel::AmplitudeDamping { p } => {
                Err(Error::InvalidParameter(format!("amplitude damping p = {p} is outside [0, 1]")))
            }
            Channel::Pauli { px, py, pz } if unit(px) && unit(py) && unit(pz) && px + py + pz <= 1.0 + 1e-12 => {
                Ok(())
            }
            Channel::Pauli { px, py, pz } => Err(Error::InvalidParameter(format!(
                "Pauli probabilities ({px}, {py}, {pz}) must be nonnegative and sum to at most 1"
            ))),
        }
    }

    pub fn kraus(&self) -> Vec<Matrix2<C64>> {
        let zero = C64::from(0.0);
        let re = C64::from;
        match *self {
            Channel::PhaseDamping(ch) => ch.kraus().to_vec(),
            Channel::AmplitudeDamping { p } => vec![
                Matrix2::new(re(1.0), zero, zero, re((1.0 - p).sqrt())),
                Matrix2::new(zero, re(p.sqrt()), zero, zero),
            ],
            Channel::Pauli { px, py, pz } => {
                let p0 = (1.0 - px - py - pz).max(0.0);
                [(p0, 0), (px, 1), (py, 2), (pz, 3)]
                    .into_iter()
                    .filter(|&(p, _)| p > 0.0)
                    .map(|(p, k)| pauli(k) * re(p.sqrt()))
                    .collect()
            }
        }
    }
}

/// Channel families that can be swept in time at a fixed rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    PhaseDamping,
    AmplitudeDamping,
    /// Pauli channel with equal error probabilities, shrinking Bloch vectors
    /// by `exp(-rate t)`.
    Depolarizing,
}

impl ChannelKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "phase_damping" => Ok(Self::PhaseDamping),
            "amplitude_damping" => Ok(Self::AmplitudeDamping),
            "depolarizing" | "pauli" => Ok(Self::Depolarizing),
            other => Err(Error::UnknownChannel(other.to_string())),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::PhaseDamping => "phase_damping",
            Self::AmplitudeDamping => "amplitude_damping",
            Self::Depolarizing => "depolarizing",
        }
    }

    pub fn at_time(&self, rate: f64, t: f64) -> Result<Channel> {
        let decay = (-rate * t).exp();
        Ok(match self {
            Self::PhaseDamping => Channel::PhaseDamping(PhaseDampingChannel::at_time(rate, t)?),
            Self::AmplitudeDamping => Channel::AmplitudeDamping { p: 1.0 - decay },
            Self::Depolarizing => {
                // Equal Pauli probabilities q shrink every Bloch component by 1 - 4q.
                let q = (1.0 - decay) / 4.0;
                Channel::Pauli { px: q, py: q, pz: q }
            }
        })
    }
}

fn apply_kraus(rho: &TwoQubitState, kraus: &[Matrix2<C64>], target: ChannelTarget) -> Result<TwoQubitState> {
    let identity = [Matrix2::<C64>::identity()];
    let (left, right): (&[Matrix2<C64>], &[Matrix2<C64>]) = match target {
        ChannelTarget::A => (kraus, &identity),
        ChannelTarget::B => (&identity, kraus),
        ChannelTarget::Both => (kraus, kraus),
    };
    let mut out = Matrix4::<C64>::zeros();
    for ka in left {
        for kb in right {
            let k = kron(ka, kb);
            out += k * rho.matrix() * k.adjoint();
        }
    }
    // Restore exact Hermiticity lost to rounding before validation.
    let out = (out + out.adjoint()) * C64::from(0.5);
    TwoQubitState::new(out)
}

pub fn apply_channel(rho: &TwoQubitState, ch: &PhaseDampingChannel, target: ChannelTarget) -> Result<TwoQubitState> {
    PhaseDampingChannel::new(ch.gamma)?;
    apply_kraus(rho, &ch.kraus(), target)
}

pub fn apply_local_channel(rho: &TwoQubitState, ch: &Channel, target: ChannelTarget) -> Result<TwoQubitState> {
    ch.validate()?;
    let out = apply_kraus(rho, &ch.kraus(), target)?;
    debug_assert!(
        rho.x_params(X_STRUCTURE_TOL).is_none() || out.x_params(1e-10).is_some(),
        "channel broke the X form"
    );
    Ok(out)
}

/// Looks up a channel by name: `phase_damping` and `amplitude_damping` take
/// one strength (`gamma` and decay probability), `pauli` takes `px, py, pz`.
pub fn apply_named_channel(
    rho: &TwoQubitState,
    name: &str,
    strength: &[f64],
    target: ChannelTarget,
) -> Result<TwoQubitState> {
    let arity = |n: usize| {
        if strength.len() == n {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("channel `{name}` takes {n} parameter(s), got {}", strength.len())))
        }
    };
    let ch = match name {
        "phase_damping" => {
            arity(1)?;
            Channel::PhaseDamping(PhaseDampingChannel::new(strength[0])?)
        }
        "amplitude_damping" => {
            arity(1)?;
            Channel::AmplitudeDamping { p: strength[0] }
        }
        "pauli" => {
            arity(3)?;
            Channel::Pauli { px: strength[0], py: strength[1], pz: strength[2] }
        }
        other => return Err(Error::UnknownChannel(other.to_string())),
    };
    apply_local_channel(rho, &ch, target)
}

/// X-state parameters after two-sided phase damping with factor `gamma`.
pub fn dephase_x_params(p: &XStateParams, gamma: f64) -> XStateParams {
    let g2 = gamma * gamma;
    XStateParams { u: p.u * g2, v: p.v * g2, ..*p }
}

/// Time at which the equi-entropy and quasi-eigen entropies cross under
/// two-sided phase damping.
///
/// `S_GH` does not depend on the coherences and `S_EF` grows as they decay,
/// so the difference is monotone in time and a bisection on `t` suffices.
/// Returns `None` when the quasi-eigendecomposition is already optimal at
/// `t = 0` or the crossing only happens in the limit of total dephasing.
pub fn critical_time(p: &XStateParams, rate: f64) -> Result<Option<f64>> {
    if !(rate > 0.0) {
        return Err(Error::InvalidParameter(format!("rate {rate} must be positive")));
    }
    p.validate()?;
    let excess = |t: f64| {
        let e = x_state_entropies(&dephase_x_params(p, (-rate * t).exp()));
        e.s_ef - e.s_gh
    };
    if excess(0.0) >= 0.0 {
        return Ok(None);
    }
    // With no coherences left S_EF = h(|r3|). If S_GH already matches that,
    // the two only meet in the limit and there is no finite crossing.
    let dephased = x_state_entropies(&dephase_x_params(p, 0.0));
    if dephased.s_ef - dephased.s_gh <= 1e-12 {
        return Ok(None);
    }
    // gamma^2 below 1e-300 is total dephasing for every practical purpose.
    let horizon = 345.0 / rate;
    let mut hi = 1.0 / rate;
    while excess(hi) < 0.0 {
        if hi >= horizon {
            return Ok(None);
        }
        hi = (hi * 2.0).min(horizon);
    }
    let mut lo = 0.0;
    while hi - lo > 1e-13 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Closed form of [`critical_time`] for Bell-diagonal states:
/// `gamma^2 max(|t1|, |t2|) = |t3|`.
pub fn bell_diagonal_critical_time(t: &BellDiagonalParams, rate: f64) -> Result<Option<f64>> {
    if !(rate > 0.0) {
        return Err(Error::InvalidParameter(format!("rate {rate} must be positive")));
    }
    t.validate()?;
    let top = t.t1.abs().max(t.t2.abs());
    let t3 = t.t3.abs();
    if t3 == 0.0 || t3 >= top {
        return Ok(None);
    }
    Ok(Some((top / t3).ln() / (2.0 * rate)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    /// Decay factor `exp(-rate t)` of the channel at this time.
    pub gamma: f64,
    pub report: CorrelationReport,
    /// `(l1, l2, l3)` for X states, descending semi-axes otherwise; `None` if
    /// the ellipsoid could not be formed.
    pub axes: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub channel: ChannelKind,
    pub rate: f64,
    pub points: Vec<TrajectoryPoint>,
    /// Only detected for phase damping on X states.
    pub critical_time: Option<f64>,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.t)
    }
}

fn ellipsoid_axes(rho: &TwoQubitState) -> Option<[f64; 3]> {
    if let Some(x) = rho.x_params(X_STRUCTURE_TOL) {
        if let Some(e) = XEllipsoidParams::from_x_state(&x) {
            return Some([e.l1, e.l2, e.l3]);
        }
    }
    ellipsoid_for_state(rho).ok().map(|e| e.semi_axes)
}

/// Evolves `rho0` on `steps` evenly spaced times in `[0, t_max]`, both qubits
/// under the same channel, and reports `C` and `Q` for Bob measuring.
pub fn evolve_trajectory(
    rho0: &TwoQubitState,
    channel: ChannelKind,
    rate: f64,
    t_max: f64,
    steps: usize,
    method: Method,
    grid: &GridSpec,
) -> Result<Trajectory> {
    if steps < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 time steps, got {steps}")));
    }
    if !(rate >= 0.0 && t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("rate {rate} and t_max {t_max} are out of range")));
    }
    let dt = t_max / (steps - 1) as f64;
    let points = (0..steps)
        .into_par_iter()
        .map(|i| {
            let t = if i + 1 == steps { t_max } else { i as f64 * dt };
            let ch = channel.at_time(rate, t)?;
            let rho = apply_local_channel(rho0, &ch, ChannelTarget::Both)?;
            let report = correlation_report(&rho, Direction::BToA, method, grid)?;
            Ok(TrajectoryPoint { t, gamma: (-rate * t).exp(), report, axes: ellipsoid_axes(&rho) })
        })
        .collect::<Result<Vec<_>>>()?;
    let critical_time = match (channel, rho0.x_params(X_STRUCTURE_TOL)) {
        (ChannelKind::PhaseDamping, Some(x)) if rate > 0.0 => critical_time(&x, rate)?,
        _ => None,
    };
    Ok(Trajectory { channel, rate, points, critical_time })
}
