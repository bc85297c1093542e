//! Closed-form adiabatic eigensystem of the rotating-frame Hamiltonian, the
//! non-adiabatic correction w, and the first-order superadiabatic transform.
//!
//! With the abbreviations
//!
//! ```text
//!   S(t)  = sqrt(4 g^2 + Delta^2 cos^4(a t))          (bright-pair splitting)
//!   y(t)  = Delta cos^2(a t) / S(t)
//!   z(t)  = 2 g / S(t)                                 (y^2 + z^2 = 1)
//!   x(t)  = 4 sqrt(2) i g a Delta cos(a t) sin(a t) / S(t)^3   (purely imaginary)
//! ```
//!
//! the instantaneous eigenvectors of H (columns, bare rows (|0>,|1>,|e>)) are
//!
//! ```text
//!   |E_0~> = (-z,      y,       0     )    E = 0        (dark state)
//!   |E_e~> = ( y/sq2,  z/sq2,  -1/sq2 )    E = -S/2
//!   |E_1~> = ( y/sq2,  z/sq2,  +1/sq2 )    E = +S/2
//! ```
//!
//! Everything is evaluated through y and z, never through the raw ratio
//! 2g/(Delta cos^2), so t = T is a regular point.
//!
//! Moving to that time-dependent basis generates the correction
//! w = -i D^H dD/dt, which couples the dark state to both bright states with
//! equal weight kappa = 2 sqrt(2) g a Delta cos sin / S^2 = |x| S / 2.
//! Diagonalizing H~ + w to first order in x gives the superadiabatic transform
//! Ds; in that frame the Hamiltonian is diagonal (0, -S/2, +S/2 in the listed
//! column order) and bare |e><e| dephasing becomes the rank-1 projector-like
//! operator built from the collective vector phi returned by
//! [`lindblad_vector_phi`]. The conjugation identity
//! Ds^H |e><e| Ds = phi phi^H holds exactly for the printed truncation, not
//! just to O(|x|^2); the unit tests pin it at 1e-14.
//!
//! Column-order convention: the public transforms list columns in the adiabatic
//! order (0~, e~, 1~) the closed forms are usually written in
//! ([`BasisTag::AdiabaticOrder`]); the integrator-facing helpers reorder to the
//! canonical (0, 1, e)-aligned order ([`BasisTag::SuperadiabaticDiag`]) so that
//! population indices line up with the bare basis.

use nalgebra::DVector;
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::error::Result;
use crate::linalg::{c, cr, CMat, CVec};
use crate::model::{BasisTag, Operator, SystemParams};

/// Scalar frame coefficients at one instant. `x_im` is the imaginary part of
/// x (its real part is identically zero); `kappa = |x| S / 2` is the dark-to-
/// bright coupling rate of w.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Coeffs {
    pub x_im: f64,
    pub y: f64,
    pub z: f64,
    pub s: f64,
    pub kappa: f64,
}

/// Closed-form coefficients without the time-domain check; the integrator and
/// quadrature loops call this at trusted stage times.
pub(crate) fn coeffs_raw(params: &SystemParams, t: f64) -> Coeffs {
    let g = params.g;
    let cos = params.envelope_cos(t);
    let sin = (params.ramp * t).sin();
    let c2 = cos * cos;
    let s2 = 4.0 * g * g + params.delta * params.delta * c2 * c2;
    let s = s2.sqrt();
    let kappa = 2.0 * SQRT_2 * g * params.ramp * params.delta * cos * sin / s2;
    Coeffs {
        x_im: 2.0 * kappa / s,
        y: params.delta * c2 / s,
        z: 2.0 * g / s,
        s,
        kappa,
    }
}

/// (x, y, z) with x purely imaginary. x is the superadiabatic excited-state
/// amplitude (up to the sqrt(2) in the transform columns); y and z satisfy
/// y^2 + z^2 = 1 identically.
pub fn coefficients_xyz(params: &SystemParams, t: f64) -> Result<(Complex64, f64, f64)> {
    params.check_time(t)?;
    let co = coeffs_raw(params, t);
    Ok((c(0.0, co.x_im), co.y, co.z))
}

fn adiabatic_columns(co: &Coeffs) -> CMat {
    let mut d = CMat::zeros(3, 3);
    // dark column
    d[(0, 0)] = cr(-co.z);
    d[(1, 0)] = cr(co.y);
    // lower bright column (E = -S/2)
    d[(0, 1)] = cr(co.y * FRAC_1_SQRT_2);
    d[(1, 1)] = cr(co.z * FRAC_1_SQRT_2);
    d[(2, 1)] = cr(-FRAC_1_SQRT_2);
    // upper bright column (E = +S/2)
    d[(0, 2)] = cr(co.y * FRAC_1_SQRT_2);
    d[(1, 2)] = cr(co.z * FRAC_1_SQRT_2);
    d[(2, 2)] = cr(FRAC_1_SQRT_2);
    d
}

/// Instantaneous eigensystem of the rotating-frame Hamiltonian: eigenvalues
/// (E_0~, E_e~, E_1~) = (0, -S/2, +S/2) and the unitary D whose columns are
/// the closed-form eigenvectors in that order (bare rows).
pub fn adiabatic_eigensystem(params: &SystemParams, t: f64) -> Result<((f64, f64, f64), Operator)> {
    params.check_time(t)?;
    let co = coeffs_raw(params, t);
    let d = Operator::new(adiabatic_columns(&co), BasisTag::AdiabaticOrder)?;
    Ok(((0.0, -0.5 * co.s, 0.5 * co.s), d))
}

/// Non-adiabatic correction w = -i D^H dD/dt in the adiabatic index order
/// (0~, e~, 1~):
///
/// ```text
///   w = -i kappa ( |0~><1~| + |0~><e~| - |1~><0~| - |e~><0~| )
/// ```
///
/// Hermitian; vanishes at t = 0 and t = T where the sweep stalls.
pub fn correction_w(params: &SystemParams, t: f64) -> Result<Operator> {
    params.check_time(t)?;
    let co = coeffs_raw(params, t);
    let mut w = CMat::zeros(3, 3);
    w[(0, 1)] = c(0.0, -co.kappa);
    w[(0, 2)] = c(0.0, -co.kappa);
    w[(1, 0)] = c(0.0, co.kappa);
    w[(2, 0)] = c(0.0, co.kappa);
    Operator::new(w, BasisTag::AdiabaticOrder)
}

fn superadiabatic_columns(co: &Coeffs) -> CMat {
    let x = co.x_im;
    let (y, z) = (co.y, co.z);
    let mut ds = CMat::zeros(3, 3);
    // |E_00~> = -z|0> + y|1> - sq2 x|e>
    ds[(0, 0)] = cr(-z);
    ds[(1, 0)] = cr(y);
    ds[(2, 0)] = c(0.0, -SQRT_2 * x);
    // |E_ee~> = (y/sq2 - xz)|0> + (z/sq2 + xy)|1> - (1/sq2)|e>
    ds[(0, 1)] = c(y * FRAC_1_SQRT_2, -x * z);
    ds[(1, 1)] = c(z * FRAC_1_SQRT_2, x * y);
    ds[(2, 1)] = cr(-FRAC_1_SQRT_2);
    // |E_11~> = (y/sq2 + xz)|0> + (z/sq2 - xy)|1> + (1/sq2)|e>
    ds[(0, 2)] = c(y * FRAC_1_SQRT_2, x * z);
    ds[(1, 2)] = c(z * FRAC_1_SQRT_2, -x * y);
    ds[(2, 2)] = cr(FRAC_1_SQRT_2);
    ds
}

/// First-order superadiabatic transform Ds: columns are the eigenvectors of
/// H~ + w through first order in x, in the order (0~~, e~~, 1~~), bare rows.
/// Used as printed: unitary only to O(|x|^2), and deliberately not
/// re-orthonormalized (that would change the dephasing operator at the same
/// order the truncation lives at). ||Ds^H Ds - I||_max = 2|x|^2 exactly.
pub fn superadiabatic_transform(params: &SystemParams, t: f64) -> Result<Operator> {
    params.check_time(t)?;
    let co = coeffs_raw(params, t);
    Operator::new(superadiabatic_columns(&co), BasisTag::AdiabaticOrder)
}

/// The collective dephasing vector phi in the canonical superadiabatic order
/// (0~~, 1~~, e~~):
///
/// ```text
///   phi = ( sqrt(2) x,  1/sqrt(2),  -1/sqrt(2) )
/// ```
///
/// Bare |e><e| dephasing conjugated into the superadiabatic frame is exactly
/// phi phi^H. Norm^2 = 1 + 2|x|^2; kept unnormalized to match the frame
/// truncation.
pub fn lindblad_vector_phi(params: &SystemParams, t: f64) -> Result<DVector<Complex64>> {
    params.check_time(t)?;
    let co = coeffs_raw(params, t);
    Ok(CVec::from_vec(phi_components(&co).to_vec()))
}

pub(crate) fn phi_components(co: &Coeffs) -> [Complex64; 3] {
    [c(0.0, SQRT_2 * co.x_im), cr(FRAC_1_SQRT_2), cr(-FRAC_1_SQRT_2)]
}

/// Superadiabatic level energies in canonical order (0~~, 1~~, e~~):
/// (0, +S/2, -S/2).
pub(crate) fn superadiabatic_levels(co: &Coeffs) -> [f64; 3] {
    [0.0, 0.5 * co.s, -0.5 * co.s]
}

/// Ds with columns permuted to the canonical order (0~~, 1~~, e~~) so that the
/// transformed population indices line up with (|0>, |1>, |e>).
pub(crate) fn superadiabatic_canonical(co: &Coeffs) -> CMat {
    let ds = superadiabatic_columns(co);
    let mut out = CMat::zeros(3, 3);
    out.column_mut(0).copy_from(&ds.column(0));
    out.column_mut(1).copy_from(&ds.column(2));
    out.column_mut(2).copy_from(&ds.column(1));
    out
}

/// Everything the frame machinery knows about one instant, bundled.
#[derive(Clone, Debug)]
pub struct FrameData {
    pub t: f64,
    /// (E_0~, E_e~, E_1~) = (0, -S/2, +S/2).
    pub eigenvalues: (f64, f64, f64),
    /// Adiabatic transform, columns (0~, e~, 1~).
    pub d: Operator,
    /// Correction w in the adiabatic index order.
    pub w: Operator,
    /// Superadiabatic transform, columns (0~~, e~~, 1~~).
    pub ds: Operator,
    pub x: Complex64,
    pub y: f64,
    pub z: f64,
}

pub fn frame_data(params: &SystemParams, t: f64) -> Result<FrameData> {
    let (eigenvalues, d) = adiabatic_eigensystem(params, t)?;
    let w = correction_w(params, t)?;
    let ds = superadiabatic_transform(params, t)?;
    let (x, y, z) = coefficients_xyz(params, t)?;
    Ok(FrameData { t, eigenvalues, d, w, ds, x, y, z })
}

/// Instantaneous excited-state population of the transferred state in the
/// superadiabatic picture: P_e(t) = 2|x(t)|^2. Zero at both endpoints.
pub fn excited_population_formula(params: &SystemParams, t: f64) -> Result<f64> {
    params.check_time(t)?;
    let co = coeffs_raw(params, t);
    Ok(2.0 * co.x_im * co.x_im)
}

/// Closed-form and numerically maximized peak of 2|x(t)|^2.
#[derive(Clone, Copy, Debug)]
pub struct ExcitedPopulationMax {
    /// (25 sqrt(5) / 108) a^2 Delta / g^3, the strong-drive closed form.
    pub closed_form: f64,
    /// arccos(sqrt(2g / (sqrt(5) Delta))) / a, where the closed form peaks.
    pub closed_form_time: f64,
    /// Grid-scan + golden-section maximum of the exact 2|x|^2.
    pub numeric: f64,
    pub numeric_time: f64,
    /// Set when g/Delta > 0.1: the closed form is outside its validity regime.
    pub regime_warning: bool,
}

/// Golden-section maximization of a smooth single-peaked function.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut m1 = hi - INV_PHI * (hi - lo);
    let mut m2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(m1);
    let mut f2 = f(m2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = m1;
            m1 = m2;
            f1 = f2;
            m2 = lo + INV_PHI * (hi - lo);
            f2 = f(m2);
        } else {
            hi = m2;
            m2 = m1;
            f2 = f1;
            m1 = hi - INV_PHI * (hi - lo);
            f1 = f(m1);
        }
    }
    let tm = 0.5 * (lo + hi);
    (tm, f(tm))
}

/// Peak excited-state population: the closed-form pair and a numerically
/// maximized pair, side by side. The numeric search runs a 1000-point grid
/// scan followed by golden-section refinement on
/// [0.8 t*, min(T, 1.2 t*)] (t* from the closed form), tolerance 1e-10 in t;
/// if the grid finds a larger value outside that window (possible outside the
/// strong-drive regime) the search recenters on the grid peak.
pub fn max_excited_population(params: &SystemParams) -> Result<ExcitedPopulationMax> {
    params.validate()?;
    let t_end = params.duration();
    let closed_form =
        25.0 * 5.0_f64.sqrt() / 108.0 * params.ramp * params.ramp * params.delta
            / (params.g * params.g * params.g);
    let arg = (2.0 * params.g / (5.0_f64.sqrt() * params.delta)).sqrt();
    let closed_form_time = if arg <= 1.0 { arg.acos() / params.ramp } else { 0.0 };
    let regime_warning = params.g / params.delta > 0.1;

    let f = |t: f64| {
        let co = coeffs_raw(params, t);
        2.0 * co.x_im * co.x_im
    };
    let n_grid = 1000;
    let (mut grid_t, mut grid_v) = (0.0, 0.0);
    for k in 0..=n_grid {
        let t = t_end * k as f64 / n_grid as f64;
        let v = f(t);
        if v > grid_v {
            grid_v = v;
            grid_t = t;
        }
    }
    let lo = (0.8 * closed_form_time).max(0.0);
    let hi = (1.2 * closed_form_time).min(t_end);
    let (mut numeric_time, mut numeric) = if hi > lo {
        golden_max(f, lo, hi, 1e-10)
    } else {
        (grid_t, grid_v)
    };
    if grid_v > numeric {
        let cell = t_end / n_grid as f64;
        let (tg, vg) =
            golden_max(f, (grid_t - cell).max(0.0), (grid_t + cell).min(t_end), 1e-10);
        if vg > numeric {
            numeric = vg;
            numeric_time = tg;
        }
    }
    Ok(ExcitedPopulationMax { closed_form, closed_form_time, numeric, numeric_time, regime_warning })
}
