//! Master-equation integration and the single-node transfer experiments.
//!
//! The equation of motion everywhere is the double-commutator dephasing form
//!
//! ```text
//!   d rho/dt = -i [H(t), rho] - (gamma/2) [L(t), [L(t), rho]]
//! ```
//!
//! with Hermitian L. For the superadiabatic noise model H is the diagonal
//! level matrix from [`crate::frames`] and L is the rank-1 collective operator
//! phi phi^H; for the lab model H is the full carrier-resolved Hamiltonian and
//! L the bare |e><e| projector. Both specializations cost O(n^2) per
//! right-hand side.
//!
//! Stepping is classical RK4 with step-doubling control: a step of size h is
//! accepted when the max-norm difference between one full step and two half
//! steps is within tolerance, and the half-step composition is kept. The
//! step level is sticky (halving persists across steps) and relaxes one level
//! when the error estimate falls far below tolerance, so the integrator finds
//! the carrier-resolving step for lab runs on the first step and stays there.
//! Accepted states are re-Hermitized; validity (trace, positivity) is checked
//! at every record point and failures carry the offending time.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frames::{coeffs_raw, phi_components, superadiabatic_canonical, superadiabatic_levels};
use crate::linalg::{
    c, cr, herm_defect, hermitize, lin_comb_into, max_abs_diff, min_eig_hermitian, outer,
    rk4_combine_into, trace_re, CMat, CVec,
};
use crate::model::{BasisTag, Frame, NoiseModel, Operator, SystemParams};

/// Integration-control knobs. `base_step = None` resolves to the frame's
/// default: min(0.01/Delta, 0.01/g) for rotating-frame runs, one twentieth of
/// the carrier period 2 pi / epsilon for lab runs (which the error control
/// then typically halves 3 more times; the default is a ceiling, not the
/// converged step).
#[derive(Clone, Copy, Debug)]
pub struct IntegratorConfig {
    pub base_step: Option<f64>,
    /// Step-doubling acceptance threshold on the max-norm of (two half steps
    /// minus one full step).
    pub tolerance: f64,
    /// How far below base_step the controller may halve before giving up.
    pub max_halvings: u32,
    /// Record every this-many accepted steps (t = 0 and t_end always).
    pub record_stride: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            base_step: None,
            tolerance: 1e-9,
            max_halvings: 12,
            record_stride: 1000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(h) = self.base_step {
            if !h.is_finite() || h <= 0.0 {
                return Err(Error::config(
                    "integrator.base_step",
                    format!("must be finite and > 0, got {h}"),
                ));
            }
        }
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(Error::config(
                "integrator.tolerance",
                format!("must be finite and > 0, got {}", self.tolerance),
            ));
        }
        if self.max_halvings > 60 {
            return Err(Error::config(
                "integrator.max_halvings",
                format!("must be <= 60, got {}", self.max_halvings),
            ));
        }
        if self.record_stride == 0 {
            return Err(Error::config("integrator.record_stride", "must be >= 1".to_string()));
        }
        Ok(())
    }

    pub(crate) fn resolved_base_step(&self, params: &SystemParams) -> f64 {
        self.base_step.unwrap_or(match params.frame {
            Frame::RotatingRwa => (0.01 / params.delta).min(0.01 / params.g),
            Frame::Lab => 2.0 * std::f64::consts::PI / params.epsilon / 20.0,
        })
    }
}

/// A validated density matrix: Hermitian to 1e-10, unit trace to 1e-10,
/// minimum eigenvalue >= -1e-8 (small negativity from the first-order frame
/// truncation is physical; anything larger is an integration failure upstream).
#[derive(Clone, Debug)]
pub struct DensityOperator {
    op: Operator,
}

impl DensityOperator {
    pub fn new(op: Operator) -> Result<Self> {
        let m = op.matrix();
        let defect = herm_defect(m);
        if defect > 1e-10 {
            return Err(Error::domain(format!(
                "density matrix not Hermitian (defect {defect:.3e})"
            )));
        }
        let tr = trace_re(m);
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::domain(format!("density matrix trace {tr} != 1")));
        }
        let lam = min_eig_hermitian(m);
        if lam < -1e-8 {
            return Err(Error::domain(format!(
                "density matrix has negative eigenvalue {lam:.3e}"
            )));
        }
        Ok(DensityOperator { op })
    }

    /// |v><v| for a normalized vector.
    pub fn pure(v: &DVector<Complex64>, basis: BasisTag) -> Result<Self> {
        let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("pure-state vector has norm^2 {norm2} != 1")));
        }
        DensityOperator::new(Operator::new(outer(v), basis)?)
    }

    /// Hermitize, renormalize the trace, then validate. Used on integrator
    /// output and on back-transformed states (the superadiabatic transform is
    /// unitary only to O(|x|^2), so raw back-transformed traces are 1+O(|x|^2)).
    pub(crate) fn from_matrix_normalized(mut m: CMat, basis: BasisTag) -> Result<Self> {
        hermitize(&mut m);
        let tr = trace_re(&m);
        if !(tr.is_finite() && tr > 0.0) {
            return Err(Error::domain(format!("state trace {tr} not positive")));
        }
        m /= cr(tr);
        DensityOperator::new(Operator::new(m, basis)?)
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn matrix(&self) -> &CMat {
        self.op.matrix()
    }

    pub fn basis(&self) -> BasisTag {
        self.op.basis()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Diagonal in the state's own basis, as real numbers.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix()[(i, i)].re).collect()
    }

    pub fn trace(&self) -> f64 {
        trace_re(self.matrix())
    }

    /// tr(rho^2).
    pub fn purity(&self) -> f64 {
        let m = self.matrix();
        let n = self.dim();
        let mut p = 0.0;
        for i in 0..n {
            for j in 0..n {
                p += (m[(i, j)] * m[(j, i)]).re;
            }
        }
        p
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eig_hermitian(self.matrix())
    }

    /// <v|rho|v> for a (typically normalized) vector.
    pub fn expectation(&self, v: &DVector<Complex64>) -> f64 {
        let m = self.matrix();
        let n = self.dim();
        let mut acc = c(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += v[i].conj() * m[(i, j)] * v[j];
            }
        }
        acc.re
    }
}

/// Controller/validity counters for one integration.
#[derive(Clone, Copy, Debug)]
pub struct TrajectoryDiagnostics {
    pub steps_accepted: u64,
    pub steps_rejected: u64,
    /// Base step after resolution (the controller's ceiling).
    pub base_step: f64,
    /// Smallest accepted step.
    pub min_step: f64,
    /// max |tr(rho) - 1| over record points, before renormalization.
    pub max_trace_drift: f64,
    /// max Hermiticity defect of accepted states, before re-Hermitization.
    pub max_hermiticity_drift: f64,
    /// Smallest eigenvalue seen at any record point (integration basis).
    pub min_eigenvalue: f64,
}

/// Recorded evolution. `states` and `populations` are in `basis`; for
/// superadiabatic runs that is the bare basis after undoing the frame
/// transform at each record point.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityOperator>,
    pub populations: Vec<Vec<f64>>,
    pub basis: BasisTag,
    pub diagnostics: TrajectoryDiagnostics,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityOperator {
        self.states.last().expect("trajectory has at least the initial record")
    }

    pub fn final_populations(&self) -> &[f64] {
        self.populations.last().expect("trajectory has at least the initial record")
    }

    /// CSV with header `t,<labels>`, one row per record point, 12 significant
    /// digits, '.' decimal separator, '\n' line ends.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * self.times.len());
        out.push('t');
        for label in self.basis.labels() {
            out.push(',');
            out.push_str(label);
        }
        out.push('\n');
        for (t, pops) in self.times.iter().zip(&self.populations) {
            out.push_str(&fmt12(*t));
            for p in pops {
                out.push(',');
                out.push_str(&fmt12(*p));
            }
            out.push('\n');
        }
        out
    }
}

/// 12 significant digits, scientific; the one number format every emitted
/// artifact uses.
pub(crate) fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Right-hand side of a master equation; implementations own their scratch.
pub(crate) trait MasterEq {
    fn dim(&self) -> usize;
    fn rhs(&mut self, t: f64, rho: &CMat, out: &mut CMat);
}

/// Diagonal-Hamiltonian frame equation with one rank-1 dephasing channel per
/// node block. Block layout: 3 consecutive indices per node starting at the
/// block offset, in the canonical superadiabatic order (0~~, 1~~, e~~); any
/// trailing indices (reference level, loss state) evolve freely.
pub(crate) struct FrameEq {
    pub blocks: Vec<(usize, SystemParams)>,
    pub n: usize,
    diag: Vec<f64>,
    w: Vec<Complex64>,
    u: Vec<Complex64>,
    coeffs: Vec<crate::frames::Coeffs>,
}

impl FrameEq {
    pub(crate) fn new(n: usize, blocks: Vec<(usize, SystemParams)>) -> Self {
        let n_blocks = blocks.len();
        FrameEq {
            blocks,
            n,
            diag: vec![0.0; n],
            w: vec![c(0.0, 0.0); n],
            u: vec![c(0.0, 0.0); n],
            coeffs: Vec::with_capacity(n_blocks),
        }
    }
}

impl MasterEq for FrameEq {
    fn dim(&self) -> usize {
        self.n
    }

    fn rhs(&mut self, t: f64, rho: &CMat, out: &mut CMat) {
        let n = self.n;
        self.coeffs.clear();
        self.diag.iter_mut().for_each(|d| *d = 0.0);
        for (off, p) in &self.blocks {
            let co = coeffs_raw(p, t);
            let lev = superadiabatic_levels(&co);
            self.diag[*off] = lev[0];
            self.diag[*off + 1] = lev[1];
            self.diag[*off + 2] = lev[2];
            self.coeffs.push(co);
        }
        for j in 0..n {
            for i in 0..n {
                let d = self.diag[i] - self.diag[j];
                let r = rho[(i, j)];
                // -i * d * r
                out[(i, j)] = c(d * r.im, -d * r.re);
            }
        }
        for ((off, p), co) in self.blocks.iter().zip(self.coeffs.iter()) {
            if p.gamma == 0.0 {
                continue;
            }
            let o = *off;
            let phi = phi_components(co);
            let nv = 1.0 + 2.0 * co.x_im * co.x_im;
            // w = rho phi, u = phi^H rho (restricted sums: phi lives on o..o+3)
            for i in 0..n {
                self.w[i] = rho[(i, o)] * phi[0] + rho[(i, o + 1)] * phi[1] + rho[(i, o + 2)] * phi[2];
            }
            for j in 0..n {
                self.u[j] = phi[0].conj() * rho[(o, j)]
                    + phi[1].conj() * rho[(o + 1, j)]
                    + phi[2].conj() * rho[(o + 2, j)];
            }
            let q = phi[0].conj() * self.w[o] + phi[1].conj() * self.w[o + 1] + phi[2].conj() * self.w[o + 2];
            let hg = 0.5 * p.gamma;
            // -(gamma/2) [nv (phi u + w phi^H) - 2 q phi phi^H]
            for j in 0..n {
                let uj = self.u[j];
                for (k, ph) in phi.iter().enumerate() {
                    out[(o + k, j)] -= cr(hg * nv) * ph * uj;
                }
            }
            for (k, ph) in phi.iter().enumerate() {
                let pc = ph.conj();
                for i in 0..n {
                    out[(i, o + k)] -= cr(hg * nv) * self.w[i] * pc;
                }
            }
            for (kj, phj) in phi.iter().enumerate() {
                let pjc = phj.conj();
                for (ki, phi_i) in phi.iter().enumerate() {
                    out[(o + ki, o + kj)] += cr(2.0 * hg) * q * phi_i * pjc;
                }
            }
        }
    }
}

/// Lab-frame equation: sparse Hamiltonian (diagonal + two symmetric pairs per
/// block) and the bare |e><e| projector dephasing per block.
pub(crate) struct LabEq {
    pub blocks: Vec<(usize, SystemParams)>,
    pub n: usize,
    diag: Vec<f64>,
}

impl LabEq {
    pub(crate) fn new(n: usize, blocks: Vec<(usize, SystemParams)>) -> Self {
        LabEq { blocks, n, diag: vec![0.0; n] }
    }
}

impl MasterEq for LabEq {
    fn dim(&self) -> usize {
        self.n
    }

    fn rhs(&mut self, t: f64, rho: &CMat, out: &mut CMat) {
        let n = self.n;
        self.diag.iter_mut().for_each(|d| *d = 0.0);
        for (off, p) in &self.blocks {
            self.diag[*off + 1] = p.epsilon;
            self.diag[*off + 2] = p.epsilon;
        }
        for j in 0..n {
            for i in 0..n {
                let d = self.diag[i] - self.diag[j];
                let r = rho[(i, j)];
                out[(i, j)] = c(d * r.im, -d * r.re);
            }
        }
        for (off, p) in &self.blocks {
            let o = *off;
            let cos = p.envelope_cos(t);
            let drive = p.delta * cos * cos * (p.epsilon * t).cos();
            // symmetric pairs (o+1, o+2): g and (o, o+2): drive
            for (pq, v) in [((o + 1, o + 2), p.g), ((o, o + 2), drive)] {
                let (pi, qi) = pq;
                for j in 0..n {
                    let a = rho[(qi, j)];
                    let b = rho[(pi, j)];
                    out[(pi, j)] += c(v * a.im, -v * a.re);
                    out[(qi, j)] += c(v * b.im, -v * b.re);
                }
                for i in 0..n {
                    let a = rho[(i, qi)];
                    let b = rho[(i, pi)];
                    out[(i, pi)] += c(-v * a.im, v * a.re);
                    out[(i, qi)] += c(-v * b.im, v * b.re);
                }
            }
            if p.gamma > 0.0 {
                let hg = 0.5 * p.gamma;
                let e = o + 2;
                for k in 0..n {
                    if k != e {
                        out[(e, k)] -= cr(hg) * rho[(e, k)];
                        out[(k, e)] -= cr(hg) * rho[(k, e)];
                    }
                }
            }
        }
    }
}

/// Dense generic equation for caller-supplied generators; used by the public
/// [`evolve_master_equation`].
struct GenericEq<'a> {
    h_of_t: &'a dyn Fn(f64) -> Operator,
    l_of_t: &'a dyn Fn(f64) -> Operator,
    gamma: f64,
    n: usize,
}

impl MasterEq for GenericEq<'_> {
    fn dim(&self) -> usize {
        self.n
    }

    fn rhs(&mut self, t: f64, rho: &CMat, out: &mut CMat) {
        let h = (self.h_of_t)(t);
        let comm = h.matrix() * rho - rho * h.matrix();
        out.zip_apply(&comm, |o, v| *o = c(v.im, -v.re));
        if self.gamma > 0.0 {
            let l = (self.l_of_t)(t);
            let lr = l.matrix() * rho - rho * l.matrix();
            let inner = l.matrix() * &lr - &lr * l.matrix();
            let hg = 0.5 * self.gamma;
            out.zip_apply(&inner, |o, v| *o -= cr(hg) * v);
        }
    }
}

fn rk4_step(
    eq: &mut dyn MasterEq,
    t: f64,
    rho: &CMat,
    h: f64,
    k1: &mut CMat,
    k2: &mut CMat,
    k3: &mut CMat,
    k4: &mut CMat,
    stage: &mut CMat,
    out: &mut CMat,
) {
    eq.rhs(t, rho, k1);
    lin_comb_into(stage, rho, 0.5 * h, k1);
    eq.rhs(t + 0.5 * h, stage, k2);
    lin_comb_into(stage, rho, 0.5 * h, k2);
    eq.rhs(t + 0.5 * h, stage, k3);
    lin_comb_into(stage, rho, h, k3);
    eq.rhs(t + h, stage, k4);
    rk4_combine_into(out, rho, h, k1, k2, k3, k4);
}

pub(crate) struct RawTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMat>,
    pub diagnostics: TrajectoryDiagnostics,
}

/// Core driver: RK4 + step doubling from t = 0 to t_end.
pub(crate) fn integrate(
    eq: &mut dyn MasterEq,
    rho0: CMat,
    t_end: f64,
    base_step: f64,
    cfg: &IntegratorConfig,
) -> Result<RawTrajectory> {
    cfg.validate()?;
    let n = eq.dim();
    if rho0.nrows() != n || rho0.ncols() != n {
        return Err(Error::domain(format!(
            "initial state is {}x{}, equation dimension is {n}",
            rho0.nrows(),
            rho0.ncols()
        )));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::domain(format!("t_end = {t_end} must be finite and > 0")));
    }

    let mut diag = TrajectoryDiagnostics {
        steps_accepted: 0,
        steps_rejected: 0,
        base_step,
        min_step: f64::INFINITY,
        max_trace_drift: 0.0,
        max_hermiticity_drift: 0.0,
        min_eigenvalue: f64::INFINITY,
    };
    let mut times = Vec::new();
    let mut states = Vec::new();

    let record = |t: f64,
                      rho: &CMat,
                      diag: &mut TrajectoryDiagnostics,
                      times: &mut Vec<f64>,
                      states: &mut Vec<CMat>|
     -> Result<()> {
        let drift = (trace_re(rho) - 1.0).abs();
        diag.max_trace_drift = diag.max_trace_drift.max(drift);
        if drift > 1e-6 {
            return Err(Error::integration(t, format!("trace drift {drift:.3e} exceeds 1e-6")));
        }
        let lam = min_eig_hermitian(rho);
        diag.min_eigenvalue = diag.min_eigenvalue.min(lam);
        if lam < -1e-6 {
            return Err(Error::integration(
                t,
                format!("negative eigenvalue {lam:.3e} below -1e-6"),
            ));
        }
        times.push(t);
        states.push(rho.clone());
        Ok(())
    };

    let mut rho = rho0;
    hermitize(&mut rho);
    record(0.0, &rho, &mut diag, &mut times, &mut states)?;

    let mut k1 = CMat::zeros(n, n);
    let mut k2 = CMat::zeros(n, n);
    let mut k3 = CMat::zeros(n, n);
    let mut k4 = CMat::zeros(n, n);
    let mut stage = CMat::zeros(n, n);
    let mut full = CMat::zeros(n, n);
    let mut half_mid = CMat::zeros(n, n);
    let mut next = CMat::zeros(n, n);

    let mut t = 0.0f64;
    let mut level: u32 = 0;
    while t < t_end {
        let remaining = t_end - t;
        let (h, clipped, err) = loop {
            let h_nominal = base_step / (1u64 << level) as f64;
            let clipped = h_nominal >= remaining;
            let h = if clipped { remaining } else { h_nominal };
            rk4_step(eq, t, &rho, h, &mut k1, &mut k2, &mut k3, &mut k4, &mut stage, &mut full);
            rk4_step(
                eq, t, &rho, 0.5 * h, &mut k1, &mut k2, &mut k3, &mut k4, &mut stage, &mut half_mid,
            );
            rk4_step(
                eq,
                t + 0.5 * h,
                &half_mid,
                0.5 * h,
                &mut k1,
                &mut k2,
                &mut k3,
                &mut k4,
                &mut stage,
                &mut next,
            );
            let err = max_abs_diff(&next, &full);
            if err <= cfg.tolerance {
                break (h, clipped, err);
            }
            diag.steps_rejected += 1;
            if level >= cfg.max_halvings {
                return Err(Error::integration(
                    t,
                    format!(
                        "step error {err:.3e} above tolerance {:.3e} after {} halvings",
                        cfg.tolerance, cfg.max_halvings
                    ),
                ));
            }
            level += 1;
        };
        diag.max_hermiticity_drift = diag.max_hermiticity_drift.max(herm_defect(&next));
        hermitize(&mut next);
        std::mem::swap(&mut rho, &mut next);
        t = if clipped { t_end } else { t + h };
        diag.steps_accepted += 1;
        diag.min_step = diag.min_step.min(h);
        if level > 0 && err < cfg.tolerance / 64.0 {
            level -= 1;
        }
        if t >= t_end {
            record(t_end, &rho, &mut diag, &mut times, &mut states)?;
        } else if diag.steps_accepted % cfg.record_stride as u64 == 0 {
            record(t, &rho, &mut diag, &mut times, &mut states)?;
        }
    }
    Ok(RawTrajectory { times, states, diagnostics: diag })
}

/// Optional per-record change of basis: rho_out(t) = B(t) rho B(t)^H.
pub(crate) fn assemble_trajectory(
    raw: RawTrajectory,
    basis: BasisTag,
    transform: Option<&dyn Fn(f64) -> CMat>,
) -> Result<Trajectory> {
    let mut states = Vec::with_capacity(raw.states.len());
    let mut populations = Vec::with_capacity(raw.states.len());
    for (t, m) in raw.times.iter().zip(raw.states.into_iter()) {
        let mapped = match transform {
            Some(b) => {
                let bt = b(*t);
                &bt * m * bt.adjoint()
            }
            None => m,
        };
        let state = DensityOperator::from_matrix_normalized(mapped, basis)?;
        populations.push(state.populations());
        states.push(state);
    }
    Ok(Trajectory { times: raw.times, states, populations, basis, diagnostics: raw.diagnostics })
}

/// Integrate `d rho/dt = -i[H(t), rho] - (gamma/2)[L(t),[L(t), rho]]` for
/// caller-supplied Hermitian generators. Dense fallback path; the built-in
/// run modes use structured equations with the same stepper.
pub fn evolve_master_equation(
    h_of_t: &dyn Fn(f64) -> Operator,
    l_of_t: &dyn Fn(f64) -> Operator,
    gamma: f64,
    rho0: &DensityOperator,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::domain(format!("gamma = {gamma} must be finite and >= 0")));
    }
    let n = rho0.dim();
    for (name, op) in [("h_of_t", h_of_t(0.0)), ("l_of_t", l_of_t(0.0))] {
        if op.dim() != n {
            return Err(Error::domain(format!(
                "{name} dimension {} does not match state dimension {n}",
                op.dim()
            )));
        }
        if !op.is_hermitian(1e-10) {
            return Err(Error::domain(format!("{name} is not Hermitian")));
        }
    }
    let base = cfg.base_step.unwrap_or(t_end / 1000.0);
    let mut eq = GenericEq { h_of_t, l_of_t, gamma, n };
    let raw = integrate(&mut eq, rho0.matrix().clone(), t_end, base, cfg)?;
    assemble_trajectory(raw, rho0.basis(), None)
}

fn bare_one_ket(n: usize, index: usize) -> CVec {
    let mut v = CVec::zeros(n);
    v[index] = cr(1.0);
    v
}

/// Single-node transfer from rho(0) = |1><1| over [0, T].
///
/// Noise-model dispatch:
/// * `SuperadiabaticProjector` (requires `Frame::RotatingRwa`): integrates the
///   diagonal frame equation with the rank-1 collective dephasing channel; the
///   initial state is conjugated into the frame and every record point is
///   conjugated back to the bare basis (and trace-renormalized, since the
///   transform is unitary only to O(|x|^2); at t = 0 and t = T it is exactly
///   unitary, so endpoint observables are unaffected).
/// * `LabExcitedProjector` (requires `Frame::Lab`): integrates the bare
///   carrier-resolved equation with L = |e><e| directly.
/// * `None`: either frame, dissipator off.
pub fn run_single_transfer(params: &SystemParams, cfg: &IntegratorConfig) -> Result<Trajectory> {
    params.validate()?;
    cfg.validate()?;
    match params.noise {
        NoiseModel::SuperadiabaticProjector => {
            if params.frame != Frame::RotatingRwa {
                return Err(Error::config(
                    "noise",
                    "superadiabatic noise model requires the rwa frame".to_string(),
                ));
            }
            run_single_frame(params, cfg)
        }
        NoiseModel::LabExcitedProjector => {
            if params.frame != Frame::Lab {
                return Err(Error::config(
                    "noise",
                    "lab noise model requires the lab frame".to_string(),
                ));
            }
            run_single_lab(params, cfg)
        }
        NoiseModel::None => {
            let mut quiet = *params;
            quiet.gamma = 0.0;
            match params.frame {
                Frame::RotatingRwa => run_single_frame(&quiet, cfg),
                Frame::Lab => run_single_lab(&quiet, cfg),
            }
        }
    }
}

fn run_single_frame(params: &SystemParams, cfg: &IntegratorConfig) -> Result<Trajectory> {
    let t_end = params.duration();
    let b0 = superadiabatic_canonical(&coeffs_raw(params, 0.0));
    let rho_bare = outer(&bare_one_ket(3, 1));
    let rho0 = b0.adjoint() * rho_bare * &b0;
    let mut eq = FrameEq::new(3, vec![(0, *params)]);
    let raw = integrate(&mut eq, rho0, t_end, cfg.resolved_base_step(params), cfg)?;
    let back = |t: f64| superadiabatic_canonical(&coeffs_raw(params, t));
    assemble_trajectory(raw, BasisTag::Bare, Some(&back))
}

fn run_single_lab(params: &SystemParams, cfg: &IntegratorConfig) -> Result<Trajectory> {
    if params.epsilon <= 0.0 {
        return Err(Error::config(
            "epsilon",
            format!("lab run requires epsilon > 0, got {}", params.epsilon),
        ));
    }
    let t_end = params.duration();
    let rho0 = outer(&bare_one_ket(3, 1));
    let mut eq = LabEq::new(3, vec![(0, *params)]);
    let mut lab_params = *params;
    lab_params.frame = Frame::Lab;
    let raw = integrate(&mut eq, rho0, t_end, cfg.resolved_base_step(&lab_params), cfg)?;
    assemble_trajectory(raw, BasisTag::Bare, None)
}

/// Transfer fidelity against a dephasing-free reference level.
///
/// The system is extended by an uncoupled level |r> (zero energy, untouched by
/// the dissipator) and prepared in (|E_00~(0)> + |r>)/sqrt(2), i.e. the frame
/// state (e_0 + e_r)/sqrt(2). With gamma = 0 the frame evolution leaves that
/// vector invariant (both components sit at zero energy), so the fidelity
/// against the gamma = 0 evolved state is simply <psi(0)| rho(T) |psi(0)>.
pub fn dephasing_fidelity_reference(params: &SystemParams, cfg: &IntegratorConfig) -> Result<f64> {
    params.validate()?;
    cfg.validate()?;
    let t_end = params.duration();
    let mut psi = CVec::zeros(4);
    psi[0] = cr(std::f64::consts::FRAC_1_SQRT_2);
    psi[3] = cr(std::f64::consts::FRAC_1_SQRT_2);
    let rho0 = outer(&psi);
    let mut frame_params = *params;
    frame_params.frame = Frame::RotatingRwa;
    let mut eq = FrameEq::new(4, vec![(0, frame_params)]);
    let raw = integrate(&mut eq, rho0, t_end, cfg.resolved_base_step(&frame_params), cfg)?;
    let final_state = raw.states.last().expect("integration records the final state");
    let mut f = c(0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            f += psi[i].conj() * final_state[(i, j)] * psi[j];
        }
    }
    Ok(f.re)
}

/// First-order infidelity estimate.
#[derive(Clone, Copy, Debug)]
pub struct PerturbativeFidelity {
    /// integral of |x(t)|^2 over [0, T].
    pub integral: f64,
    /// 1 - gamma * integral.
    pub fidelity: f64,
}

/// Composite-Simpson quadrature of |x(t)|^2, panel count doubled until the
/// result changes by less than 1e-8 relative. The integrand is smooth and
/// vanishes at both endpoints, so convergence is fast (a few hundred panels).
pub fn perturbative_fidelity(params: &SystemParams) -> Result<PerturbativeFidelity> {
    params.validate()?;
    let t_end = params.duration();
    let f = |t: f64| {
        let co = coeffs_raw(params, t);
        co.x_im * co.x_im
    };
    let simpson = |n: usize| {
        let h = t_end / n as f64;
        let mut acc = f(0.0) + f(t_end);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(h * k as f64);
        }
        acc * h / 3.0
    };
    let mut n = 8;
    let mut prev = simpson(n);
    loop {
        n *= 2;
        let cur = simpson(n);
        let scale = cur.abs().max(f64::MIN_POSITIVE);
        if ((cur - prev) / scale).abs() < 1e-8 || n >= (1 << 24) {
            return Ok(PerturbativeFidelity { integral: cur, fidelity: 1.0 - params.gamma * cur });
        }
        prev = cur;
    }
}

/// Analytic O(a) bound on the infidelity.
#[derive(Clone, Copy, Debug)]
pub struct FidelityBound {
    /// (25 sqrt(5)/216) * gamma * (window/a) * sqrt(g/Delta) * (a^2 Delta / g^3).
    pub bound: f64,
    /// bound / a: the slope of the bound as a function of the sweep rate.
    pub scaling_coefficient: f64,
    /// The time-window constant used (defaults to pi/2).
    pub window: f64,
}

/// Upper bound 1 - F <= (25 sqrt(5)/216) gamma (n/a) sqrt(g/Delta) (a^2 Delta/g^3).
///
/// `window` is the constant n in the effective integration window n/a; the
/// default pi/2 corresponds to bounding the integrand over the quarter period
/// where the drive exceeds a few g (drive threshold c = 5 in the same
/// derivation). Both constants are loose by design: the bound must only
/// dominate the perturbative estimate, which it does by a factor ~1.7 at the
/// default parameters.
pub fn fidelity_bound(params: &SystemParams, window: Option<f64>) -> Result<FidelityBound> {
    params.validate()?;
    let n = window.unwrap_or(std::f64::consts::FRAC_PI_2);
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::domain(format!("window constant {n} must be finite and > 0")));
    }
    let a = params.ramp;
    let bound = 25.0 * 5.0_f64.sqrt() / 216.0
        * params.gamma
        * (n / a)
        * (params.g / params.delta).sqrt()
        * (a * a * params.delta / (params.g * params.g * params.g));
    Ok(FidelityBound { bound, scaling_coefficient: bound / a, window: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p() -> SystemParams {
        SystemParams::single_defaults()
    }

    fn zero_h() -> Operator {
        Operator::zeros(BasisTag::Bare)
    }

    fn e_projector() -> Operator {
        let mut m = CMat::zeros(3, 3);
        m[(2, 2)] = cr(1.0);
        Operator::new(m, BasisTag::Bare).unwrap()
    }

    #[test]
    fn pure_dephasing_closed_form() {
        // H = 0, L = |e><e|: the (0,e) coherence obeys d/dt = -(gamma/2) rho_0e,
        // so rho_0e(t) = (1/2) exp(-gamma t / 2).
        let mut psi = CVec::zeros(3);
        psi[0] = cr(std::f64::consts::FRAC_1_SQRT_2);
        psi[2] = cr(std::f64::consts::FRAC_1_SQRT_2);
        let rho0 = DensityOperator::pure(&psi, BasisTag::Bare).unwrap();
        let gamma = 0.5;
        let t_end = 2.0; // gamma * t = 1
        let cfg = IntegratorConfig { base_step: Some(0.01), ..Default::default() };
        let traj =
            evolve_master_equation(&|_| zero_h(), &|_| e_projector(), gamma, &rho0, t_end, &cfg)
                .unwrap();
        let got = traj.final_state().matrix()[(0, 2)].re;
        assert_abs_diff_eq!(got, 0.5 * (-0.5f64).exp(), epsilon = 1e-6);
        // populations untouched by pure dephasing
        assert_abs_diff_eq!(traj.final_populations()[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(traj.final_populations()[2], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn unitary_evolution_conserves_purity() {
        let h = crate::model::hamiltonian_rwa(&p(), 30.0).unwrap();
        // a mixed diagonal state
        let mut m = CMat::zeros(3, 3);
        m[(0, 0)] = cr(0.5);
        m[(1, 1)] = cr(0.3);
        m[(2, 2)] = cr(0.2);
        let rho0 = DensityOperator::new(Operator::new(m, BasisTag::Bare).unwrap()).unwrap();
        let cfg = IntegratorConfig { base_step: Some(2e-4), ..Default::default() };
        let traj =
            evolve_master_equation(&|_| h.clone(), &|_| e_projector(), 0.0, &rho0, 100.0, &cfg)
                .unwrap();
        let p0 = rho0.purity();
        let pt = traj.final_state().purity();
        assert!((pt - p0).abs() <= 1e-9, "purity drift {}", (pt - p0).abs());
    }

    #[test]
    fn integrator_rejects_unreachable_tolerance() {
        let rho0 = DensityOperator::pure(&bare_one_ket(3, 1), BasisTag::Bare).unwrap();
        let h = crate::model::hamiltonian_rwa(&p(), 0.0).unwrap();
        let cfg = IntegratorConfig {
            base_step: Some(0.5),
            tolerance: 1e-300,
            max_halvings: 2,
            record_stride: 1,
        };
        let err = evolve_master_equation(&|_| h.clone(), &|_| e_projector(), 0.0, &rho0, 10.0, &cfg)
            .unwrap_err();
        assert!(matches!(err, Error::Integration { .. }));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn evolve_validates_generators_and_gamma() {
        let rho0 = DensityOperator::pure(&bare_one_ket(3, 1), BasisTag::Bare).unwrap();
        let mut bad = CMat::zeros(3, 3);
        bad[(0, 1)] = cr(1.0); // not Hermitian
        let bad_h = Operator::new(bad, BasisTag::Bare).unwrap();
        let cfg = IntegratorConfig::default();
        assert!(evolve_master_equation(&|_| bad_h.clone(), &|_| e_projector(), 0.1, &rho0, 1.0, &cfg)
            .is_err());
        let h = zero_h();
        assert!(
            evolve_master_equation(&|_| h.clone(), &|_| e_projector(), -1.0, &rho0, 1.0, &cfg)
                .is_err()
        );
    }

    #[test]
    fn density_operator_validation() {
        // non-unit trace
        let mut m = CMat::zeros(3, 3);
        m[(0, 0)] = cr(0.7);
        assert!(DensityOperator::new(Operator::new(m, BasisTag::Bare).unwrap()).is_err());
        // negative eigenvalue
        let mut m = CMat::zeros(3, 3);
        m[(0, 0)] = cr(1.5);
        m[(1, 1)] = cr(-0.5);
        assert!(DensityOperator::new(Operator::new(m, BasisTag::Bare).unwrap()).is_err());
        // non-Hermitian
        let mut m = CMat::zeros(3, 3);
        m[(0, 0)] = cr(1.0);
        m[(0, 1)] = cr(1e-3);
        assert!(DensityOperator::new(Operator::new(m, BasisTag::Bare).unwrap()).is_err());
        // valid pure state
        let psi = bare_one_ket(3, 0);
        let rho = DensityOperator::pure(&psi, BasisTag::Bare).unwrap();
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-15);
        assert_eq!(rho.populations(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn integrator_config_validation() {
        assert!(IntegratorConfig::default().validate().is_ok());
        let bad = IntegratorConfig { tolerance: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = IntegratorConfig { base_step: Some(-1.0), ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = IntegratorConfig { record_stride: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = IntegratorConfig { max_halvings: 61, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn trajectory_grid_structure() {
        let traj = run_single_transfer(&p(), &IntegratorConfig::default()).unwrap();
        assert_eq!(traj.times[0], 0.0);
        assert_eq!(*traj.times.last().unwrap(), p().duration());
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
        for pops in &traj.populations {
            let sum: f64 = pops.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-8);
        }
        assert!(traj.diagnostics.max_trace_drift <= 1e-8);
        assert!(traj.diagnostics.max_hermiticity_drift <= 1e-8);
        assert!(traj.diagnostics.min_eigenvalue >= -1e-8);
    }

    #[test]
    fn noise_frame_consistency_enforced() {
        let mut params = p();
        params.frame = Frame::Lab; // super noise + lab frame
        assert!(run_single_transfer(&params, &IntegratorConfig::default()).is_err());
        let mut params = p();
        params.noise = NoiseModel::LabExcitedProjector; // lab noise + rwa frame
        assert!(run_single_transfer(&params, &IntegratorConfig::default()).is_err());
    }

    #[test]
    fn quiet_frame_run_conserves_reported_purity_at_endpoints() {
        // gamma = 0: the frame evolution is unitary; the bare-basis report is
        // exactly unitary at t = 0 and t = T where x vanishes.
        let mut params = p();
        params.noise = NoiseModel::None;
        let traj = run_single_transfer(&params, &IntegratorConfig::default()).unwrap();
        let first = traj.states.first().unwrap().purity();
        let last = traj.final_state().purity();
        assert!((first - 1.0).abs() <= 1e-12);
        assert!((last - 1.0).abs() <= 1e-9, "purity drift {}", (last - 1.0).abs());
    }

    #[test]
    fn perturbative_fidelity_frozen_integral_and_affinity() {
        // integral for (g=1, Delta=50, a=0.01), frozen from two independent
        // quadratures (Simpson doubling and 1e6-point midpoint agree to 1e-10).
        let pf = perturbative_fidelity(&p()).unwrap();
        assert_abs_diff_eq!(pf.integral, 0.0171445924876, epsilon = 2e-10);
        assert_abs_diff_eq!(pf.fidelity, 1.0 - 0.1 * pf.integral, epsilon = 1e-15);
        let mut q = p();
        q.gamma = 0.0;
        assert_eq!(perturbative_fidelity(&q).unwrap().fidelity, 1.0);
        q.gamma = 0.2;
        let double = perturbative_fidelity(&q).unwrap();
        assert_abs_diff_eq!(double.fidelity - 1.0, 2.0 * (pf.fidelity - 1.0), epsilon = 1e-12);
    }

    #[test]
    fn integral_scales_linearly_in_ramp() {
        // The substitution u = a t makes the integral exactly proportional to a.
        let base = perturbative_fidelity(&p()).unwrap().integral;
        for scale in [0.2, 0.5, 2.0] {
            let mut q = p();
            q.ramp *= scale;
            let got = perturbative_fidelity(&q).unwrap().integral;
            assert_abs_diff_eq!(got / base, scale, epsilon = 1e-7);
        }
    }

    #[test]
    fn bound_linear_in_ramp_and_gamma_and_dominates_estimate() {
        let params = p();
        let b = fidelity_bound(&params, None).unwrap();
        let mut q = params;
        q.ramp *= 2.0;
        let b2 = fidelity_bound(&q, None).unwrap();
        assert_abs_diff_eq!(b2.bound / b.bound, 2.0, epsilon = 1e-12);
        q = params;
        q.gamma *= 3.0;
        let b3 = fidelity_bound(&q, None).unwrap();
        assert_abs_diff_eq!(b3.bound / b.bound, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.scaling_coefficient, b.bound / params.ramp, epsilon = 1e-18);
        // the bound must dominate the first-order estimate (ratio ~1.68 here)
        let pf = perturbative_fidelity(&params).unwrap();
        assert!(b.bound >= params.gamma * pf.integral);
    }

    #[test]
    fn reference_fidelity_without_noise_is_unity() {
        let mut params = p();
        params.gamma = 0.0;
        let f = dephasing_fidelity_reference(&params, &IntegratorConfig::default()).unwrap();
        assert!((f - 1.0).abs() <= 1e-8, "F = {f}");
    }

    #[test]
    fn csv_shape_and_format() {
        let mut params = p();
        params.ramp = 0.5; // short run to keep the test cheap
        let traj = run_single_transfer(&params, &IntegratorConfig::default()).unwrap();
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,P0,P1,Pe");
        let first = lines.next().unwrap();
        let fields: Vec<&str> = first.split(',').collect();
        assert_eq!(fields.len(), 4);
        assert_eq!(fields[0], "0.00000000000e0");
        // 12 significant digits on a population
        assert!(fields[1].contains('e'));
        assert_eq!(csv.lines().count(), traj.times.len() + 1);
    }

    #[test]
    fn generic_and_structured_lab_paths_agree() {
        // short horizon so the dense generic path stays cheap
        let mut params = p();
        params.ramp = 2.0;
        params.frame = Frame::Lab;
        params.noise = NoiseModel::LabExcitedProjector;
        params.epsilon = 200.0;
        let cfg = IntegratorConfig {
            base_step: Some(2.0 * std::f64::consts::PI / params.epsilon / 40.0),
            ..Default::default()
        };
        let fast = run_single_transfer(&params, &cfg).unwrap();
        let rho0 = DensityOperator::pure(&bare_one_ket(3, 1), BasisTag::Bare).unwrap();
        let h = |t: f64| crate::model::hamiltonian_lab(&params, t).unwrap();
        let dense = evolve_master_equation(
            &h,
            &|_| e_projector(),
            params.gamma,
            &rho0,
            params.duration(),
            &cfg,
        )
        .unwrap();
        assert_eq!(fast.times.len(), dense.times.len());
        let d = max_abs_diff(fast.final_state().matrix(), dense.final_state().matrix());
        assert!(d <= 1e-12, "paths differ by {d}");
    }

    #[test]
    fn fmt12_is_twelve_significant_digits() {
        assert_eq!(fmt12(0.5), "5.00000000000e-1");
        assert_eq!(fmt12(12345.0), "1.23450000000e4");
        assert_eq!(fmt12(0.0), "0.00000000000e0");
    }
}
