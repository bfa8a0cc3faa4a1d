//! Real-valued bilinear forms on complex numbers.
//!
//! `[u, v] = (u conj(v) - v conj(u)) / 2i` is antisymmetric and
//! `{u, v} = (u conj(v) + v conj(u)) / 2` is symmetric. For unit complex
//! numbers `[e^{ia}, e^{ib}] = sin(a - b)` and `{e^{ia}, e^{ib}} = cos(a - b)`.

use num_complex::Complex64;

use crate::state::Vec3;

/// `[u, v] = Im(u conj(v))`.
#[inline]
pub fn antisym_form(u: Complex64, v: Complex64) -> f64 {
    let w = u * v.conj() - v * u.conj();
    // w is purely imaginary; w / 2i = Im(w) / 2
    w.im / 2.0
}

/// `{u, v} = Re(u conj(v))`.
#[inline]
pub fn sym_form(u: Complex64, v: Complex64) -> f64 {
    let w = u * v.conj() + v * u.conj();
    w.re / 2.0
}

/// Bracket of a complex number with a real scalar `c`, read through real
/// homogeneity: `[u, c] = c [u, 1]`.
#[inline]
pub fn antisym_with_real(u: Complex64, c: f64) -> f64 {
    c * antisym_form(u, Complex64::new(1.0, 0.0))
}

/// Cyclic sum `[u,[v,w]] + [w,[u,v]] + [v,[w,u]]`.
pub fn jacobi_sum(u: Complex64, v: Complex64, w: Complex64) -> f64 {
    antisym_with_real(u, antisym_form(v, w))
        + antisym_with_real(w, antisym_form(u, v))
        + antisym_with_real(v, antisym_form(w, u))
}

/// Planar vector image `(Re z, Im z, 0)`.
#[inline]
pub fn planar_vector(z: Complex64) -> Vec3 {
    Vec3::new(z.re, z.im, 0.0)
}
