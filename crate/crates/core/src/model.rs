//! System parameters, basis bookkeeping, and the bare Hamiltonians.
//!
//! Single-node state space, in the fixed index order used everywhere:
//!
//! ```text
//!   index 0: |0> = ground level holding the target qubit state
//!   index 1: |1> = ground level + cavity photon (the initial excitation)
//!   index 2: |e> = excited level, the only state that dephases
//! ```
//!
//! The drive envelope is a half-cosine-squared pulse `Delta cos^2(a t)` over
//! `t in [0, T]`, `T = pi/(2a)`, so the protocol starts at full drive and ends
//! with the drive off. All rates are in units of the cavity coupling g; all
//! times in 1/g. Configs accept explicit g and normalize, so nothing depends on
//! its absolute value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cr, herm_defect, max_abs_diff, CMat};

/// Which Hamiltonian the run integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    /// Rotating frame at the common resonance, counter-rotating terms dropped.
    #[serde(rename = "rwa")]
    RotatingRwa,
    /// Full lab-frame Hamiltonian with the `cos(epsilon t)` carrier kept.
    #[serde(rename = "lab")]
    Lab,
}

/// Which dephasing generator the run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseModel {
    /// Collective projector onto the dressed excited component, valid in the
    /// superadiabatic frame (requires `Frame::RotatingRwa`).
    #[serde(rename = "super")]
    SuperadiabaticProjector,
    /// Bare |e><e| projector, used with the lab-frame Hamiltonian.
    #[serde(rename = "lab")]
    LabExcitedProjector,
    /// No dissipator (gamma ignored).
    #[serde(rename = "none")]
    None,
}

/// Basis/frame a matrix or state is expressed in. Dimensions are fixed per tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisTag {
    /// (|0>, |1>, |e>).
    Bare,
    /// (|0>, |1>, |e>, |r>) with an uncoupled reference level appended.
    BareWithReference,
    /// Adiabatic index order (0~, e~, 1~): the order the closed-form transform
    /// lists its columns and the order the correction operator w is written in.
    AdiabaticOrder,
    /// Superadiabatic levels in canonical index order (0~~, 1~~, e~~); the
    /// Hamiltonian is diagonal here and this is the integrator's working basis.
    SuperadiabaticDiag,
    /// SuperadiabaticDiag plus the uncoupled reference level.
    SuperadiabaticDiagWithReference,
    /// Two-node single-excitation sector, bare labels:
    /// (|0m>, |1m>, |em>, |m0>, |m1>, |me>).
    JointBare,
    /// Two-node sector in each node's superadiabatic order.
    JointSuperadiabaticDiag,
    /// JointBare plus the zero-excitation loss state |mm> appended last.
    JointBareWithLoss,
}

impl BasisTag {
    pub fn dim(self) -> usize {
        match self {
            BasisTag::Bare | BasisTag::AdiabaticOrder | BasisTag::SuperadiabaticDiag => 3,
            BasisTag::BareWithReference | BasisTag::SuperadiabaticDiagWithReference => 4,
            BasisTag::JointBare | BasisTag::JointSuperadiabaticDiag => 6,
            BasisTag::JointBareWithLoss => 7,
        }
    }

    /// Population column labels for serialization.
    pub fn labels(self) -> &'static [&'static str] {
        match self {
            BasisTag::Bare => &["P0", "P1", "Pe"],
            BasisTag::BareWithReference => &["P0", "P1", "Pe", "Pr"],
            BasisTag::AdiabaticOrder => &["Pa0", "Pae", "Pa1"],
            BasisTag::SuperadiabaticDiag => &["Ps0", "Ps1", "Pse"],
            BasisTag::SuperadiabaticDiagWithReference => &["Ps0", "Ps1", "Pse", "Psr"],
            BasisTag::JointBare | BasisTag::JointSuperadiabaticDiag => {
                &["P0m", "P1m", "Pem", "Pm0", "Pm1", "Pme"]
            }
            BasisTag::JointBareWithLoss => &["P0m", "P1m", "Pem", "Pm0", "Pm1", "Pme", "Pmm"],
        }
    }
}

/// A square matrix together with the basis its indices refer to.
#[derive(Clone, Debug)]
pub struct Operator {
    mat: CMat,
    basis: BasisTag,
}

impl Operator {
    pub fn new(mat: CMat, basis: BasisTag) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::domain(format!(
                "operator must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.nrows() != basis.dim() {
            return Err(Error::domain(format!(
                "operator dimension {} does not match basis {:?} (dim {})",
                mat.nrows(),
                basis,
                basis.dim()
            )));
        }
        Ok(Operator { mat, basis })
    }

    pub fn zeros(basis: BasisTag) -> Self {
        Operator { mat: CMat::zeros(basis.dim(), basis.dim()), basis }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        herm_defect(&self.mat) <= tol
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        max_abs_diff(&self.mat, &other.mat)
    }
}

/// Physical parameters of one node. Everything is in units of g even though g
/// is carried explicitly; the closed forms keep g symbolic so callers may pass
/// unnormalized values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    /// Cavity coupling (the unit rate).
    pub g: f64,
    /// Peak drive amplitude.
    pub delta: f64,
    /// Sweep rate a of the envelope cos^2(a t).
    pub ramp: f64,
    /// Pure-dephasing rate of |e>.
    pub gamma: f64,
    /// Common resonance frequency (drive = cavity = atomic splitting), used by
    /// the lab-frame Hamiltonian only.
    pub epsilon: f64,
    pub frame: Frame,
    pub noise: NoiseModel,
}

impl SystemParams {
    /// Single-node run defaults: Delta = 50 g, a = 0.01 g, gamma = 0.1 g,
    /// superadiabatic noise in the rotating frame.
    pub fn single_defaults() -> Self {
        SystemParams {
            g: 1.0,
            delta: 50.0,
            ramp: 0.01,
            gamma: 0.1,
            epsilon: 1000.0,
            frame: Frame::RotatingRwa,
            noise: NoiseModel::SuperadiabaticProjector,
        }
    }

    /// Two-node run defaults: Delta = 70 g, otherwise as `single_defaults`.
    pub fn network_defaults() -> Self {
        SystemParams { delta: 70.0, ..SystemParams::single_defaults() }
    }

    /// Protocol duration T = pi/(2a): the envelope's quarter period.
    pub fn duration(&self) -> f64 {
        std::f64::consts::PI / (2.0 * self.ramp)
    }

    /// Field-level sanity. Rates must be finite; g, delta, ramp positive;
    /// gamma nonnegative; lab frame needs a positive carrier frequency.
    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| -> Result<()> {
            if !v.is_finite() || v <= 0.0 {
                Err(Error::config(key, format!("must be finite and > 0, got {v}")))
            } else {
                Ok(())
            }
        };
        positive("g", self.g)?;
        positive("delta", self.delta)?;
        positive("ramp", self.ramp)?;
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(Error::config("gamma", format!("must be finite and >= 0, got {}", self.gamma)));
        }
        if !self.epsilon.is_finite() {
            return Err(Error::config("epsilon", format!("must be finite, got {}", self.epsilon)));
        }
        if self.frame == Frame::Lab && self.epsilon <= 0.0 {
            return Err(Error::config(
                "epsilon",
                format!("lab frame requires a positive carrier frequency, got {}", self.epsilon),
            ));
        }
        Ok(())
    }

    /// Rejects t outside [0, T] (up to a relative slack of a few ulps so the
    /// integrator's final clipped step cannot trip it).
    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        let t_max = self.duration();
        let slack = t_max * 1e-12;
        if !t.is_finite() || t < -slack || t > t_max + slack {
            return Err(Error::domain(format!(
                "t = {t} outside the protocol window [0, {t_max}]"
            )));
        }
        Ok(())
    }

    /// cos(a t), clamped to exactly 0 near the endpoint so the envelope and
    /// every frame coefficient vanish identically at t = T instead of holding
    /// an O(1e-16) sign-noise residue.
    pub(crate) fn envelope_cos(&self, t: f64) -> f64 {
        let c = (self.ramp * t).cos();
        if c.abs() < 1e-15 {
            0.0
        } else {
            c
        }
    }
}

/// Drive amplitude Delta cos^2(a t). Exactly 0 at t = T.
pub fn drive_envelope(params: &SystemParams, t: f64) -> Result<f64> {
    params.check_time(t)?;
    let c = params.envelope_cos(t);
    Ok(params.delta * c * c)
}

/// Rotating-frame Hamiltonian on resonance, diagonal rescaled to zero:
///
/// ```text
///   H = g (|1><e| + |e><1|) + (Delta cos^2(a t)/2) (|e><0| + |0><e|)
/// ```
pub fn hamiltonian_rwa(params: &SystemParams, t: f64) -> Result<Operator> {
    let half_drive = 0.5 * drive_envelope(params, t)?;
    let mut m = CMat::zeros(3, 3);
    m[(0, 2)] = cr(half_drive);
    m[(2, 0)] = cr(half_drive);
    m[(1, 2)] = cr(params.g);
    m[(2, 1)] = cr(params.g);
    Operator::new(m, BasisTag::Bare)
}

/// Lab-frame Hamiltonian with the carrier kept:
///
/// ```text
///   H = diag(0, epsilon, epsilon)
///     + g (|1><e| + |e><1|)
///     + Delta cos^2(a t) cos(epsilon t) (|e><0| + |0><e|)
/// ```
///
/// The photon energy (index 1) and the atomic splitting (index 2) sit at the
/// common resonance epsilon; |0> holds no excitation and stays at zero.
pub fn hamiltonian_lab(params: &SystemParams, t: f64) -> Result<Operator> {
    if !params.epsilon.is_finite() || params.epsilon <= 0.0 {
        return Err(Error::config(
            "epsilon",
            format!("lab-frame Hamiltonian requires epsilon > 0, got {}", params.epsilon),
        ));
    }
    let drive = drive_envelope(params, t)? * (params.epsilon * t).cos();
    let mut m = CMat::zeros(3, 3);
    m[(1, 1)] = cr(params.epsilon);
    m[(2, 2)] = cr(params.epsilon);
    m[(0, 2)] = cr(drive);
    m[(2, 0)] = cr(drive);
    m[(1, 2)] = cr(params.g);
    m[(2, 1)] = cr(params.g);
    Operator::new(m, BasisTag::Bare)
}
