//! Holomorphic and pluriharmonic reproducing kernels.
//!
//! `K_α(z, w) = e^{⟨z, w⟩/α}` and `K_ph(z, w) = K_α(z, w) + K_α(w, z) − 1`,
//! which is real: `2 e^{Re⟨z,w⟩/α} cos(Im⟨z,w⟩/α) − 1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{eval_basis, eval_basis_weighted, BasisTruncation, ComplexPoint, FockParams};
use crate::error::{FockError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: Complex64,
    /// `2e^{|z|²/α} − 1` when both arguments are the same point.
    pub at_diagonal: Option<f64>,
}

fn check_pair(z: &ComplexPoint, w: &ComplexPoint, params: &FockParams) -> Result<()> {
    params.check_point(z)?;
    params.check_point(w)
}

/// `e^{⟨z, w⟩/α}` with `⟨z, w⟩ = Σ zᵢ w̄ᵢ`.
pub fn k_alpha(z: &ComplexPoint, w: &ComplexPoint, params: &FockParams) -> Result<Complex64> {
    check_pair(z, w, params)?;
    Ok((z.inner(w) / params.alpha()).exp())
}

/// `ln(2e^{s} − 1)` for `s ≥ 0`, stable for large `s`.
pub fn ln_diagonal(s: f64) -> f64 {
    if s < 1.0 {
        (2.0 * s.exp_m1() + 1.0).ln()
    } else {
        s + (2.0 - (-s).exp()).ln()
    }
}

/// `K_ph(z, z) = 2e^{|z|²/α} − 1`.
pub fn k_ph_diagonal(z: &ComplexPoint, params: &FockParams) -> f64 {
    let s = z.norm_sqr() / params.alpha();
    2.0 * s.exp_m1() + 1.0
}

/// Real value of `K_ph(z, w)`.
///
/// The real part of `⟨z, w⟩` is symmetric in its arguments bit for bit and the
/// imaginary part only flips sign, so `K_ph(z, w) = K_ph(w, z)` exactly.
fn k_ph_real(z: &ComplexPoint, w: &ComplexPoint, alpha: f64) -> f64 {
    let ip = z.inner(w);
    2.0 * (ip.re / alpha).exp() * (ip.im.abs() / alpha).cos() - 1.0
}

pub fn k_ph(z: &ComplexPoint, w: &ComplexPoint, params: &FockParams) -> Result<KernelValue> {
    check_pair(z, w, params)?;
    if z == w {
        let d = k_ph_diagonal(z, params);
        return Ok(KernelValue {
            value: Complex64::new(d, 0.0),
            at_diagonal: Some(d),
        });
    }
    Ok(KernelValue {
        value: Complex64::new(k_ph_real(z, w, params.alpha()), 0.0),
        at_diagonal: None,
    })
}

/// `K_ph(z, w) · e^{-shift}`, computed without overflow.
fn k_ph_scaled(z: &ComplexPoint, w: &ComplexPoint, alpha: f64, shift: f64) -> f64 {
    let ip = z.inner(w);
    let x = ip.re / alpha;
    2.0 * (x - shift).exp() * (ip.im.abs() / alpha).cos() - (-shift).exp()
}

/// `K_ph(z, w) / sqrt(K_ph(w, w))`, the unit-norm kernel at `w` evaluated at `z`.
pub fn k_ph_normalized(z: &ComplexPoint, w: &ComplexPoint, params: &FockParams) -> Result<Complex64> {
    check_pair(z, w, params)?;
    let alpha = params.alpha();
    let half_log = 0.5 * ln_diagonal(w.norm_sqr() / alpha);
    Ok(Complex64::new(k_ph_scaled(z, w, alpha, half_log), 0.0))
}

/// `⟨k(·, z), k(·, w)⟩ = K_ph(w, z) / sqrt(K_ph(z, z) K_ph(w, w))`.
pub fn normalized_pairing(z: &ComplexPoint, w: &ComplexPoint, params: &FockParams) -> Result<f64> {
    check_pair(z, w, params)?;
    let alpha = params.alpha();
    let shift = 0.5 * (ln_diagonal(z.norm_sqr() / alpha) + ln_diagonal(w.norm_sqr() / alpha));
    Ok(k_ph_scaled(w, z, alpha, shift))
}

/// Coefficients `conj(b_m(w))` of `K_ph(·, w)` in the truncated basis.
pub fn kernel_coeff_vector(
    w: &ComplexPoint,
    trunc: &BasisTruncation,
    params: &FockParams,
) -> Result<Vec<Complex64>> {
    check_dims(w, trunc, params)?;
    Ok(trunc
        .indices()
        .iter()
        .map(|idx| eval_basis(idx, w, params).conj())
        .collect())
}

/// `conj(b_m(w)) e^{-|w|²/(2α)}`; stays finite where [`kernel_coeff_vector`] overflows.
pub fn kernel_coeff_vector_weighted(
    w: &ComplexPoint,
    trunc: &BasisTruncation,
    params: &FockParams,
) -> Result<Vec<Complex64>> {
    check_dims(w, trunc, params)?;
    Ok(trunc
        .indices()
        .iter()
        .map(|idx| eval_basis_weighted(idx, w, params).conj())
        .collect())
}

/// Partial sum `Σ_m |b_m(w)|²` of the kernel diagonal over the truncation.
pub fn kernel_partial_diagonal(
    w: &ComplexPoint,
    trunc: &BasisTruncation,
    params: &FockParams,
) -> Result<f64> {
    Ok(kernel_coeff_vector(w, trunc, params)?
        .iter()
        .map(|c| c.norm_sqr())
        .sum())
}

/// Partial sum `Σ_m b_m(z) conj(b_m(w))`.
pub fn kernel_partial_sum(
    z: &ComplexPoint,
    w: &ComplexPoint,
    trunc: &BasisTruncation,
    params: &FockParams,
) -> Result<Complex64> {
    check_dims(z, trunc, params)?;
    let coeffs = kernel_coeff_vector(w, trunc, params)?;
    Ok(trunc
        .indices()
        .iter()
        .zip(coeffs)
        .map(|(idx, c)| eval_basis(idx, z, params) * c)
        .sum())
}

fn check_dims(w: &ComplexPoint, trunc: &BasisTruncation, params: &FockParams) -> Result<()> {
    params.check_point(w)?;
    if trunc.dim() != params.n() {
        return Err(FockError::DimensionMismatch {
            expected: params.n(),
            got: trunc.dim(),
        });
    }
    Ok(())
}
