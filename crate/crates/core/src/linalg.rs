//! Small dense complex-matrix helpers used by the integrator hot loop.
//!
//! Everything operates on `DMatrix<Complex64>` through its contiguous
//! column-major slice; the integrator runs on 3x3..7x7 matrices, so plain loops
//! beat anything clever.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub(crate) type C64 = Complex64;
pub(crate) type CMat = DMatrix<C64>;
pub(crate) type CVec = DVector<C64>;

#[cfg(test)]
pub(crate) const ZERO: C64 = Complex64::new(0.0, 0.0);

pub(crate) fn c(re: f64, im: f64) -> C64 {
    Complex64::new(re, im)
}

pub(crate) fn cr(re: f64) -> C64 {
    Complex64::new(re, 0.0)
}

pub(crate) fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).norm()))
}

/// max_ij |m_ij - conj(m_ji)|.
pub(crate) fn herm_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// m <- (m + m^H)/2 in place.
pub(crate) fn hermitize(m: &mut CMat) {
    let n = m.nrows();
    for j in 0..n {
        let d = m[(j, j)];
        m[(j, j)] = cr(d.re);
        for i in 0..j {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

pub(crate) fn trace_re(m: &CMat) -> f64 {
    let n = m.nrows();
    (0..n).map(|i| m[(i, i)].re).sum()
}

/// out = a + s * b, elementwise.
pub(crate) fn lin_comb_into(out: &mut CMat, a: &CMat, s: f64, b: &CMat) {
    let (oa, ob, oo) = (a.as_slice(), b.as_slice(), out.as_mut_slice());
    for k in 0..oo.len() {
        oo[k] = oa[k] + s * ob[k];
    }
}

/// out = rho + (h/6)(k1 + 2 k2 + 2 k3 + k4), the RK4 update.
pub(crate) fn rk4_combine_into(
    out: &mut CMat,
    rho: &CMat,
    h: f64,
    k1: &CMat,
    k2: &CMat,
    k3: &CMat,
    k4: &CMat,
) {
    let w = h / 6.0;
    let (s0, s1, s2, s3, s4, oo) = (
        rho.as_slice(),
        k1.as_slice(),
        k2.as_slice(),
        k3.as_slice(),
        k4.as_slice(),
        out.as_mut_slice(),
    );
    for k in 0..oo.len() {
        oo[k] = s0[k] + w * (s1[k] + 2.0 * s2[k] + 2.0 * s3[k] + s4[k]);
    }
}

/// Smallest eigenvalue of a Hermitian matrix (input is hermitized first so
/// round-off asymmetry cannot poison the solver).
pub(crate) fn min_eig_hermitian(m: &CMat) -> f64 {
    let mut h = m.clone();
    hermitize(&mut h);
    let eig = h.symmetric_eigen();
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// v v^H.
pub(crate) fn outer(v: &CVec) -> CMat {
    let n = v.len();
    CMat::from_fn(n, n, |i, j| v[i] * v[j].conj())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitize_is_projection_onto_hermitian_part() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 2.0), c(3.0, 4.0), c(5.0, -1.0), c(2.0, -7.0)]);
        let mut h = m.clone();
        hermitize(&mut h);
        assert_eq!(herm_defect(&h), 0.0);
        // (m + m^H)/2 reproduced entrywise
        assert_eq!(h[(0, 1)], 0.5 * (m[(0, 1)] + m[(1, 0)].conj()));
        assert_eq!(h[(0, 0)], cr(1.0));
        assert_eq!(h[(1, 1)], cr(2.0));
    }

    #[test]
    fn min_eig_of_known_matrix() {
        // Pauli X has eigenvalues +-1.
        let x = CMat::from_row_slice(2, 2, &[ZERO, cr(1.0), cr(1.0), ZERO]);
        assert!((min_eig_hermitian(&x) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn outer_product_shape_and_values() {
        let v = CVec::from_vec(vec![cr(1.0), c(0.0, 1.0)]);
        let p = outer(&v);
        assert_eq!(p[(0, 1)], c(0.0, -1.0));
        assert_eq!(p[(1, 0)], c(0.0, 1.0));
        assert_eq!(p[(1, 1)], cr(1.0));
        assert!((trace_re(&p) - 2.0).abs() < 1e-15);
    }
}
