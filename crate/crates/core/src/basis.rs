//! Parameters, multi-indices and the orthonormal monomial basis of the
//! truncated pluriharmonic Fock space.
//!
//! The basis is `b_m(z) = z^m / sqrt(α^{|m|} m!)` for holomorphic indices and
//! its complex conjugate for anti-holomorphic ones. It is orthonormal for the
//! probability inner product `⟨f, g⟩ = (απ)^{-n} ∫ f ḡ e^{-|z|²/α} dA`.
//! The constant function appears once, on the holomorphic side.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{FockError, Result};
use crate::quadrature::{self, RefinementSchedule};

/// Log-magnitude below which weighted basis values are flushed to zero.
pub const DEFAULT_UNDERFLOW_FLOOR: f64 = -700.0;

/// Gaussian weight scale `α` and complex dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockParams {
    alpha: f64,
    n: usize,
}

impl FockParams {
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(FockError::InvalidParameter(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        if n == 0 {
            return Err(FockError::InvalidParameter(
                "complex dimension n must be at least 1".into(),
            ));
        }
        Ok(Self { alpha, n })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `(απ)^{-n}`, the density turning `e^{-|z|²/α} dA` into a probability measure.
    pub fn gaussian_normalizer(&self) -> f64 {
        (self.alpha * std::f64::consts::PI).powi(-(self.n as i32))
    }

    /// `e^{-|z|²/α}`.
    pub fn gaussian_weight(&self, z: &ComplexPoint) -> f64 {
        (-z.norm_sqr() / self.alpha).exp()
    }

    pub(crate) fn check_point(&self, z: &ComplexPoint) -> Result<()> {
        if z.dim() != self.n {
            return Err(FockError::DimensionMismatch {
                expected: self.n,
                got: z.dim(),
            });
        }
        Ok(())
    }
}

/// Multi-index `m ∈ ℕⁿ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn zero(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total degree `|m|`.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `log m! = Σ log(mᵢ!)`.
    pub fn ln_factorial(&self) -> f64 {
        self.0.iter().map(|&k| ln_factorial(k as u64)).sum()
    }

    /// `log ‖z^m‖² = |m| log α + log m!`, the squared norm of the raw monomial.
    pub fn ln_norm_sqr(&self, alpha: f64) -> f64 {
        self.degree() as f64 * alpha.ln() + self.ln_factorial()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

/// Holomorphic monomial `b_m` or its conjugate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisIndex {
    Holo(MultiIndex),
    /// Requires `|m| ≥ 1`; the constant lives only on the holomorphic side.
    Anti(MultiIndex),
}

impl BasisIndex {
    pub fn multi_index(&self) -> &MultiIndex {
        match self {
            BasisIndex::Holo(m) | BasisIndex::Anti(m) => m,
        }
    }

    pub fn is_holo(&self) -> bool {
        matches!(self, BasisIndex::Holo(_))
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisIndex::Holo(m) => write!(f, "Holo{m}"),
            BasisIndex::Anti(m) => write!(f, "Anti{m}"),
        }
    }
}

/// The ordered basis of the space truncated at total degree `D`:
/// every `Holo(m)` with `|m| ≤ D` in graded-lexicographic order, then every
/// `Anti(m)` with `1 ≤ |m| ≤ D` in the same order.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisTruncation {
    degree: usize,
    n: usize,
    indices: Vec<BasisIndex>,
    holo_len: usize,
}

impl BasisTruncation {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Number of holomorphic indices; they occupy positions `0..holo_len`.
    pub fn holo_len(&self) -> usize {
        self.holo_len
    }

    pub fn indices(&self) -> &[BasisIndex] {
        &self.indices
    }

    pub fn position(&self, idx: &BasisIndex) -> Option<usize> {
        self.indices.iter().position(|b| b == idx)
    }

    /// `2·C(n+D, n) − 1`.
    pub fn expected_size(n: usize, degree: usize) -> usize {
        2 * binomial(n + degree, n) - 1
    }
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Multi-indices of total degree exactly `d`, graded-lexicographic (first entry largest first).
pub fn compositions(n: usize, d: u32) -> Vec<MultiIndex> {
    fn rec(n: usize, d: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if prefix.len() + 1 == n {
            prefix.push(d);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in (0..=d).rev() {
            prefix.push(first);
            rec(n, d - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, d, &mut Vec::with_capacity(n), &mut out);
    out
}

pub fn enumerate_basis(params: &FockParams, degree: usize) -> BasisTruncation {
    let n = params.n();
    let holo: Vec<MultiIndex> = (0..=degree as u32)
        .flat_map(|d| compositions(n, d))
        .collect();
    let holo_len = holo.len();
    let mut indices: Vec<BasisIndex> = holo.iter().cloned().map(BasisIndex::Holo).collect();
    indices.extend(holo.into_iter().skip(1).map(BasisIndex::Anti));
    BasisTruncation {
        degree,
        n,
        indices,
        holo_len,
    }
}

/// A point of `ℂⁿ` with its squared norm cached.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoint {
    coords: Vec<Complex64>,
    norm_sqr: f64,
}

impl ComplexPoint {
    pub fn new(coords: Vec<Complex64>) -> Self {
        let norm_sqr = coords.iter().map(|c| c.norm_sqr()).sum();
        Self { coords, norm_sqr }
    }

    pub fn origin(n: usize) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); n])
    }

    /// One-dimensional point.
    pub fn scalar(re: f64, im: f64) -> Self {
        Self::new(vec![Complex64::new(re, im)])
    }

    /// From interleaved `[re₁, im₁, re₂, im₂, …]`.
    pub fn from_interleaved(values: &[f64]) -> Result<Self> {
        if values.len() % 2 != 0 || values.is_empty() {
            return Err(FockError::Schema(format!(
                "a point needs an even, non-zero number of reals, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FockError::Schema("point coordinates must be finite".into()));
        }
        Ok(Self::new(
            values
                .chunks(2)
                .map(|c| Complex64::new(c[0], c[1]))
                .collect(),
        ))
    }

    pub fn to_interleaved(&self) -> Vec<f64> {
        self.coords.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.norm_sqr
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr.sqrt()
    }

    /// `⟨z, w⟩ = Σ zᵢ w̄ᵢ`.
    pub fn inner(&self, w: &ComplexPoint) -> Complex64 {
        self.coords
            .iter()
            .zip(&w.coords)
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    pub fn distance_sqr(&self, w: &ComplexPoint) -> f64 {
        self.coords
            .iter()
            .zip(&w.coords)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum()
    }

    pub fn translate(&self, by: &ComplexPoint) -> ComplexPoint {
        ComplexPoint::new(
            self.coords
                .iter()
                .zip(&by.coords)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> ComplexPoint {
        ComplexPoint::new(self.coords.iter().map(|c| c * s).collect())
    }
}

/// Log-magnitude and phase of the raw monomial part `z^m / sqrt(α^{|m|} m!)`.
/// `None` when some `zᵢ = 0` with `mᵢ > 0`.
fn log_monomial(m: &MultiIndex, z: &ComplexPoint, alpha: f64) -> Option<(f64, f64)> {
    let mut log_mag = -0.5 * m.ln_norm_sqr(alpha);
    let mut phase = 0.0;
    for (&k, c) in m.entries().iter().zip(z.coords()) {
        if k == 0 {
            continue;
        }
        let r = c.norm();
        if r == 0.0 {
            return None;
        }
        log_mag += k as f64 * r.ln();
        phase += k as f64 * c.arg();
    }
    Some((log_mag, phase))
}

fn from_polar_signed(log_mag: f64, phase: f64, conjugate: bool) -> Complex64 {
    let v = Complex64::from_polar(log_mag.exp(), phase);
    if conjugate {
        v.conj()
    } else {
        v
    }
}

/// `b_idx(z)`.
pub fn eval_basis(idx: &BasisIndex, z: &ComplexPoint, params: &FockParams) -> Complex64 {
    debug_assert_eq!(idx.multi_index().dim(), params.n());
    match log_monomial(idx.multi_index(), z, params.alpha()) {
        None => Complex64::new(0.0, 0.0),
        Some((log_mag, phase)) => from_polar_signed(log_mag, phase, !idx.is_holo()),
    }
}

/// `b_idx(z)·e^{-|z|²/(2α)}` evaluated jointly in the log domain.
pub fn eval_basis_weighted(idx: &BasisIndex, z: &ComplexPoint, params: &FockParams) -> Complex64 {
    eval_basis_weighted_with_floor(idx, z, params, DEFAULT_UNDERFLOW_FLOOR)
}

pub fn eval_basis_weighted_with_floor(
    idx: &BasisIndex,
    z: &ComplexPoint,
    params: &FockParams,
    floor: f64,
) -> Complex64 {
    match log_monomial(idx.multi_index(), z, params.alpha()) {
        None => Complex64::new(0.0, 0.0),
        Some((log_mag, phase)) => {
            let log_mag = log_mag - z.norm_sqr() / (2.0 * params.alpha());
            if log_mag < floor {
                Complex64::new(0.0, 0.0)
            } else {
                from_polar_signed(log_mag, phase, !idx.is_holo())
            }
        }
    }
}

/// All basis values at `z`, optionally times `e^{-|z|²/(2α)}`, written into `out`.
///
/// Uses the per-coordinate recurrence `e_{a+1} = e_a·z/sqrt(α(a+1))`, which is
/// what the quadrature loops need; point queries should prefer [`eval_basis_weighted`].
pub fn basis_values_into(
    trunc: &BasisTruncation,
    z: &ComplexPoint,
    params: &FockParams,
    weighted: bool,
    powers: &mut Vec<Vec<Complex64>>,
    out: &mut [Complex64],
) {
    let d = trunc.degree();
    let alpha = params.alpha();
    powers.resize_with(z.dim(), Vec::new);
    for (row, c) in powers.iter_mut().zip(z.coords()) {
        row.clear();
        let start = if weighted {
            (-c.norm_sqr() / (2.0 * alpha)).exp()
        } else {
            1.0
        };
        let mut cur = Complex64::new(start, 0.0);
        row.push(cur);
        for a in 1..=d {
            cur = cur * c / (alpha * a as f64).sqrt();
            row.push(cur);
        }
    }
    for (slot, idx) in out.iter_mut().zip(trunc.indices()) {
        let mut v = Complex64::new(1.0, 0.0);
        for (row, &k) in powers.iter().zip(idx.multi_index().entries()) {
            v *= row[k as usize];
        }
        *slot = if idx.is_holo() { v } else { v.conj() };
    }
}

/// Coefficients `⟨f, b_m⟩` of `f` against the truncated basis, by Gaussian quadrature.
///
/// Nodes and cutoff are refined until two successive levels agree to `tol`
/// relative to the largest coefficient.
pub fn project<F>(f: F, trunc: &BasisTruncation, params: &FockParams, tol: f64) -> Result<Vec<Complex64>>
where
    F: Fn(&ComplexPoint) -> Complex64 + Sync,
{
    if trunc.dim() != params.n() {
        return Err(FockError::DimensionMismatch {
            expected: params.n(),
            got: trunc.dim(),
        });
    }
    let schedule = RefinementSchedule::for_space(params, trunc.degree());
    let norm = params.gaussian_normalizer();
    quadrature::refine(
        &schedule,
        tol,
        |level| {
            let nodes = quadrature::gaussian_space_nodes(params, trunc.degree(), &level, None);
            let size = trunc.len();
            let half = 1.0 / (2.0 * params.alpha());
            let total = nodes.sum_vectors(size, |z, w, acc| {
                let fz = f(z);
                if !fz.re.is_finite() || !fz.im.is_finite() {
                    return Err(FockError::InputDomain(z.coords().to_vec()));
                }
                // f·conj(b_m)·e^{-|z|²/α}: split the Gaussian between f and b_m.
                let mut powers = Vec::new();
                let mut vals = vec![Complex64::new(0.0, 0.0); size];
                basis_values_into(trunc, z, params, true, &mut powers, &mut vals);
                let fw = fz * (w * (-z.norm_sqr() * half).exp());
                for (a, v) in acc.iter_mut().zip(&vals) {
                    *a += fw * v.conj();
                }
                Ok(())
            })?;
            Ok(total.into_iter().map(|c| c * norm).collect::<Vec<_>>())
        },
        quadrature::compare_vectors,
    )
}
