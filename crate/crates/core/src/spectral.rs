//! Spectra, Schatten norms and trace/Schatten/compactness probes of truncated Toeplitz matrices.

use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{enumerate_basis, FockParams};
use crate::carleson::{carleson_scan, LatticeWindow, ScanOptions, Verdict};
use crate::error::{FockError, Result};
use crate::measures::{integrate, IntegrationOptions, MeasureSpec};
use crate::toeplitz::{assemble, from_bounded_symbol, AssemblyOptions, BoundedSymbol, ToeplitzMatrix};
use num_complex::Complex64;

/// Eigenpair residual bound relative to `‖T‖`.
pub const RESIDUAL_BOUND: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchattenNorm {
    pub p: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub degree: usize,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Descending.
    pub singular_values: Vec<f64>,
    pub operator_norm: f64,
    pub trace: f64,
    pub schatten_norms: Vec<SchattenNorm>,
    pub max_residual: f64,
}

impl SpectralSummary {
    pub fn schatten(&self, p: f64) -> Option<f64> {
        self.schatten_norms.iter().find(|s| s.p == p).map(|s| s.value)
    }
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(FockError::InvalidParameter(format!(
            "Schatten exponent must be at least 1, got {p}"
        )))
    }
}

/// `(Σ σᵢ^p)^{1/p}`; `p = ∞` gives the largest value.
pub fn schatten_norm(singular_values: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    if p.is_infinite() {
        return Ok(singular_values.iter().copied().fold(0.0, f64::max));
    }
    Ok(singular_values.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p))
}

pub fn spectral_summary(t: &ToeplitzMatrix, p_list: &[f64]) -> Result<SpectralSummary> {
    for &p in p_list {
        check_p(p)?;
    }
    let size = t.size();
    if size == 0 {
        return Err(FockError::InvalidParameter("empty matrix".into()));
    }
    let eig = SymmetricEigen::try_new(t.entries.clone(), f64::EPSILON, 10_000).ok_or(
        FockError::Eigensolver {
            residual: f64::NAN,
            bound: RESIDUAL_BOUND,
        },
    )?;
    let norm_bound = eig.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
    let mut max_residual: f64 = 0.0;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let r = &t.entries * v - v * Complex64::new(lambda, 0.0);
        max_residual = max_residual.max(r.norm());
    }
    let bound = RESIDUAL_BOUND * norm_bound.max(f64::MIN_POSITIVE);
    if !(max_residual <= bound) && norm_bound > 0.0 {
        return Err(FockError::Eigensolver {
            residual: max_residual,
            bound,
        });
    }
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    let mut singular_values: Vec<f64> = eigenvalues.iter().map(|l| l.abs()).collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let trace = t.entries.diagonal().iter().map(|c| c.re).sum();
    let schatten_norms = p_list
        .iter()
        .map(|&p| {
            Ok(SchattenNorm {
                p,
                value: schatten_norm(&singular_values, p)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SpectralSummary {
        degree: t.degree(),
        operator_norm: singular_values[0],
        eigenvalues,
        singular_values,
        trace,
        schatten_norms,
        max_residual,
    })
}

fn assemble_all(
    spec: &MeasureSpec,
    params: &FockParams,
    degrees: &[usize],
    opts: &AssemblyOptions,
) -> Result<Vec<ToeplitzMatrix>> {
    degrees
        .par_iter()
        .map(|&d| assemble(spec, &enumerate_basis(params, d), params, opts))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceVerdict {
    TraceClass,
    NotTraceClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedTrace {
    pub degree: usize,
    pub trace: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceClassReport {
    pub verdict: TraceVerdict,
    /// `∫ (2e^{|u|²/α} − 1) e^{-|u|²/α} dμ(u)`, absent when it diverges.
    pub target: Option<f64>,
    pub traces: Vec<TruncatedTrace>,
    pub monotone: bool,
    /// `target/2 ≤ last truncated trace ≤ target`.
    pub within_bounds: Option<bool>,
    pub total_mass: Option<f64>,
    /// `μ(ℂⁿ) ≤ target ≤ 2μ(ℂⁿ)`.
    pub sandwich: Option<bool>,
    pub pass: bool,
}

/// Relative slack for the comparisons in the trace report.
pub const TRACE_SLACK: f64 = 1e-9;

pub fn trace_class_check(
    spec: &MeasureSpec,
    params: &FockParams,
    degrees: &[usize],
    tol: f64,
) -> Result<TraceClassReport> {
    spec.validate(params)?;
    let alpha = params.alpha();
    let g = |u: &crate::basis::ComplexPoint| Complex64::new(2.0 - (-u.norm_sqr() / alpha).exp(), 0.0);
    let target = match integrate(g, spec, params, &IntegrationOptions::new(tol).degree(0)) {
        Ok(v) => Some(v.re),
        Err(FockError::Divergent { .. }) => None,
        Err(e) => return Err(e),
    };
    let mats = assemble_all(spec, params, degrees, &AssemblyOptions::new(tol))?;
    let traces: Vec<TruncatedTrace> = mats
        .iter()
        .map(|m| TruncatedTrace {
            degree: m.degree(),
            trace: m.entries.diagonal().iter().map(|c| c.re).sum(),
        })
        .collect();
    let mut ordered = traces.clone();
    ordered.sort_by_key(|t| t.degree);
    let monotone = ordered
        .windows(2)
        .all(|w| w[1].trace >= w[0].trace * (1.0 - TRACE_SLACK));
    let total_mass = spec.total_mass(params);
    let slack = 1.0 + TRACE_SLACK.max(10.0 * tol);
    let within_bounds = target.zip(ordered.last()).map(|(t, last)| {
        last.trace <= t * slack && last.trace * slack >= 0.5 * t
    });
    let sandwich = target
        .zip(total_mass)
        .map(|(t, m)| m <= t * slack && t <= 2.0 * m * slack);
    let verdict = if target.is_some() {
        TraceVerdict::TraceClass
    } else {
        TraceVerdict::NotTraceClass
    };
    let pass = monotone && within_bounds.unwrap_or(true) && sandwich.unwrap_or(true);
    Ok(TraceClassReport {
        verdict,
        target,
        traces: ordered,
        monotone,
        within_bounds,
        total_mass,
        sandwich,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalComparison {
    pub degree: usize,
    /// `(Σ_k |⟨T e_k, e_k⟩|^p)^{1/p}` over the holomorphic block.
    pub holo_diagonal: f64,
    /// Same over every basis vector.
    pub full_diagonal: f64,
    pub schatten: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchattenProbe {
    pub p: f64,
    pub comparisons: Vec<DiagonalComparison>,
    /// Relative change of the Schatten norm between the two largest degrees.
    pub cauchy_difference: f64,
    pub converging: bool,
    /// `Σ μ(B(z_k, r))^p` over the window.
    pub ball_mass_sum: f64,
    pub ball_mass_norm: f64,
    pub pass: bool,
}

/// Relative Cauchy difference below which truncated norms count as converged.
pub const CAUCHY_TOL: f64 = 1e-3;

pub fn schatten_necessity_probe(
    spec: &MeasureSpec,
    params: &FockParams,
    p: f64,
    window: &LatticeWindow,
    degrees: &[usize],
    tol: f64,
) -> Result<SchattenProbe> {
    check_p(p)?;
    let mut degrees = degrees.to_vec();
    degrees.sort_unstable();
    let mats = assemble_all(spec, params, &degrees, &AssemblyOptions::new(tol))?;
    let mut comparisons = Vec::with_capacity(mats.len());
    for m in &mats {
        let summary = spectral_summary(m, &[p])?;
        let s = summary.schatten_norms[0].value;
        let diag: Vec<f64> = m.entries.diagonal().iter().map(|c| c.norm()).collect();
        let h = m.trunc.holo_len();
        let holo = schatten_norm(&diag[..h], p)?;
        let full = schatten_norm(&diag, p)?;
        comparisons.push(DiagonalComparison {
            degree: m.degree(),
            holo_diagonal: holo,
            full_diagonal: full,
            schatten: s,
            holds: full <= s * (1.0 + 1e-12) + 1e-300,
        });
    }
    let cauchy_difference = match comparisons.as_slice() {
        [.., a, b] => (b.schatten - a.schatten).abs() / b.schatten.max(f64::MIN_POSITIVE),
        _ => f64::INFINITY,
    };
    let scan = carleson_scan(spec, params, window, &[p], &ScanOptions::default())?;
    Ok(SchattenProbe {
        p,
        pass: comparisons.iter().all(|c| c.holds),
        comparisons,
        cauchy_difference,
        converging: cauchy_difference <= CAUCHY_TOL,
        ball_mass_sum: scan.lp_sums[0].sum,
        ball_mass_norm: scan.lp_sums[0].norm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueSum {
    pub degree: usize,
    /// `Σ |λ|^p`
    pub sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolBoundReport {
    pub p: f64,
    /// `2(απ)^{-n} ∫ |φ|^p dA`
    pub bound: f64,
    pub sums: Vec<EigenvalueSum>,
    pub pass: bool,
}

pub fn lp_symbol_sufficiency_check(
    symbol: &BoundedSymbol,
    p: f64,
    params: &FockParams,
    degrees: &[usize],
    tol: f64,
) -> Result<SymbolBoundReport> {
    check_p(p)?;
    if p.is_infinite() {
        return Err(FockError::InvalidParameter("p must be finite".into()));
    }
    let integral = match symbol {
        BoundedSymbol::Zero => 0.0,
        BoundedSymbol::Catalog(spec) => spec.lp_norm_pow(p, params).ok_or_else(|| {
            FockError::Contract(format!("{} is not in L^{p}(dA)", spec.kind()))
        })?,
    };
    let bound = 2.0 * params.gaussian_normalizer() * integral;
    let opts = AssemblyOptions::new(tol);
    let sums = degrees
        .par_iter()
        .map(|&d| {
            let t = from_bounded_symbol(symbol, &enumerate_basis(params, d), params, &opts)?;
            let s = spectral_summary(&t, &[])?;
            Ok(EigenvalueSum {
                degree: d,
                sum: s.eigenvalues.iter().map(|l| l.abs().powf(p)).sum(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = sums.iter().all(|s| s.sum <= bound * (1.0 + 1e-9) + 1e-300);
    Ok(SymbolBoundReport { p, bound, sums, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailDecay {
    pub degree: usize,
    pub singular_values: Vec<f64>,
    /// `σ_{j+1}/σ_j` over the tail, `None` once the tail is exactly zero.
    pub ratios: Vec<Option<f64>>,
    /// `σ_last / σ_1`
    pub tail_fraction: f64,
    pub decays: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactnessReport {
    pub head: usize,
    pub tails: Vec<TailDecay>,
    pub tail_decays: bool,
    pub vanishing: Verdict,
    /// Whether the tail decay and the vanishing verdict agree; reported only.
    pub agree: Option<bool>,
}

/// Ratio `σ_last/σ_1` below which a truncated spectrum counts as decaying.
pub const DECAY_FRACTION: f64 = 1e-2;

pub fn compactness_probe(
    spec: &MeasureSpec,
    params: &FockParams,
    degrees: &[usize],
    window: &LatticeWindow,
    head: usize,
    tol: f64,
) -> Result<CompactnessReport> {
    let mut degrees = degrees.to_vec();
    degrees.sort_unstable();
    let mats = assemble_all(spec, params, &degrees, &AssemblyOptions::new(tol))?;
    let mut tails = Vec::with_capacity(mats.len());
    for m in &mats {
        let s = spectral_summary(m, &[])?;
        let sv = s.singular_values;
        let top = sv[0];
        let start = head.min(sv.len().saturating_sub(1));
        let ratios = sv[start..]
            .windows(2)
            .map(|w| if w[0] > 0.0 { Some(w[1] / w[0]) } else { None })
            .collect();
        let last = *sv.last().expect("non-empty spectrum");
        let tail_fraction = if top > 0.0 { last / top } else { 0.0 };
        tails.push(TailDecay {
            degree: m.degree(),
            decays: tail_fraction <= DECAY_FRACTION,
            singular_values: sv,
            ratios,
            tail_fraction,
        });
    }
    let tail_decays = tails.last().is_some_and(|t| t.decays);
    let scan = carleson_scan(spec, params, window, &[], &ScanOptions::default())?;
    let agree = match scan.vanishing {
        Verdict::Yes => Some(tail_decays),
        Verdict::No => Some(!tail_decays),
        Verdict::Inconclusive => None,
    };
    Ok(CompactnessReport {
        head,
        tails,
        tail_decays,
        vanishing: scan.vanishing,
        agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::ComplexPoint;
    use crate::measures::Atom;
    use std::f64::consts::PI;

    fn p1() -> FockParams {
        FockParams::new(1.0, 1).unwrap()
    }

    fn gauss() -> MeasureSpec {
        MeasureSpec::GaussianDensity {
            c: 1.0,
            beta: 1.0,
            center: None,
        }
    }

    #[test]
    fn identity_and_atom_summaries() {
        let p = p1();
        let s = spectral_summary(&ToeplitzMatrix::identity(&p, 2), &[1.0, 2.0]).unwrap();
        assert_eq!(s.eigenvalues.len(), 5);
        assert!((s.operator_norm - 1.0).abs() < 1e-12);
        assert!((s.trace - 5.0).abs() < 1e-12);
        assert!((s.schatten(1.0).unwrap() - 5.0).abs() < 1e-12);
        assert!((s.schatten(2.0).unwrap() - 5f64.sqrt()).abs() < 1e-12);

        let atom = MeasureSpec::AtomSet(vec![Atom {
            point: ComplexPoint::scalar(0.0, 0.0),
            weight: 2.5,
        }]);
        let t = assemble(&atom, &enumerate_basis(&p, 4), &p, &AssemblyOptions::new(1e-10)).unwrap();
        let s = spectral_summary(&t, &[1.0, 2.0, 3.5]).unwrap();
        assert!((s.eigenvalues[0] - 2.5).abs() < 1e-12);
        assert!(s.eigenvalues[1..].iter().all(|l| l.abs() < 1e-12));
        for n in &s.schatten_norms {
            assert!((n.value - 2.5).abs() < 1e-10);
        }
        assert!(spectral_summary(&t, &[0.5]).is_err());
    }

    #[test]
    fn gaussian_trace_series() {
        let p = p1();
        let rep = trace_class_check(&gauss(), &p, &[4, 8, 12], 1e-10).unwrap();
        assert_eq!(rep.verdict, TraceVerdict::TraceClass);
        assert!((rep.target.unwrap() - 1.5 * PI).abs() < 1e-8);
        assert!(rep.monotone && rep.pass);
        for t in &rep.traces {
            let d = t.degree as i32;
            let oracle = PI / 2.0 + 2.0 * (1..=d).map(|m| PI / 2f64.powi(m + 1)).sum::<f64>();
            assert!((t.trace - oracle).abs() < 1e-9, "{} vs {oracle}", t.trace);
        }
        let last = rep.traces.last().unwrap().trace;
        assert!((last - 1.5 * PI).abs() / (1.5 * PI) < 1e-3);
    }

    #[test]
    fn lebesgue_not_trace_class() {
        let p = p1();
        let rep = trace_class_check(&MeasureSpec::ScaledLebesgue { c: 1.0 }, &p, &[2, 4], 1e-9).unwrap();
        assert_eq!(rep.verdict, TraceVerdict::NotTraceClass);
        assert!(rep.target.is_none());
    }

    #[test]
    fn symbol_bounds() {
        let p = p1();
        let ball = BoundedSymbol::Catalog(MeasureSpec::BallIndicator {
            c: 1.0,
            center: None,
            radius: 1.0,
        });
        let rep = lp_symbol_sufficiency_check(&ball, 1.0, &p, &[4, 8], 1e-10).unwrap();
        assert!((rep.bound - 2.0).abs() < 1e-12);
        assert!(rep.pass);
        // Σ over both blocks of P(m+1, 1) tends to 1 + e^{-1}
        let last = rep.sums.last().unwrap().sum;
        assert!((last - (1.0 + (-1f64).exp())).abs() < 1e-4, "{last}");

        let g = BoundedSymbol::Catalog(gauss());
        let rep = lp_symbol_sufficiency_check(&g, 2.0, &p, &[4, 8], 1e-10).unwrap();
        assert!((rep.bound - 1.0).abs() < 1e-12);
        assert!(rep.pass);
        let zero = lp_symbol_sufficiency_check(&BoundedSymbol::Zero, 1.0, &p, &[3], 1e-10).unwrap();
        assert_eq!(zero.sums[0].sum, 0.0);
        assert!(zero.pass);
    }

    #[test]
    fn compactness_examples() {
        let p = p1();
        let w = LatticeWindow::new(1.0, 8.0).unwrap();
        let rep = compactness_probe(&gauss(), &p, &[8], &w, 2, 1e-10).unwrap();
        assert!(rep.tail_decays);
        assert_eq!(rep.vanishing, Verdict::Yes);
        assert_eq!(rep.agree, Some(true));
        let id = MeasureSpec::ScaledLebesgue { c: 1.0 / PI };
        let rep = compactness_probe(&id, &p, &[6], &w, 2, 1e-10).unwrap();
        assert!(!rep.tail_decays);
        assert!(rep.tails[0].singular_values.iter().all(|s| (s - 1.0).abs() < 1e-9));
        assert_eq!(rep.vanishing, Verdict::No);
        assert_eq!(rep.agree, Some(true));
    }

    #[test]
    fn schatten_diagonal_gaussian() {
        let p = p1();
        let w = LatticeWindow::new(1.0, 6.0).unwrap();
        let rep = schatten_necessity_probe(&gauss(), &p, 2.0, &w, &[4, 6, 8], 1e-10).unwrap();
        assert!(rep.pass);
        assert!(rep.ball_mass_sum.is_finite());
    }
}
