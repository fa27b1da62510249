//! Berezin transforms of measures and truncated matrices.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{ComplexPoint, FockParams};
use crate::error::{FockError, Result};
use crate::kernels::{k_ph_normalized, kernel_coeff_vector_weighted, ln_diagonal};
use crate::measures::{integrate, integrate_weighted_with, sphere_area, IntegrationOptions, MeasureSpec};
use crate::quadrature::{envelope_cutoff, gauss_legendre_unit, gaussian_space_nodes, refine, sphere_nodes, Comparison, RefinementSchedule};
use crate::toeplitz::{quadratic_form, ToeplitzMatrix};

/// `∫ |K_ph(z,u)|² e^{-|u|²/α} dμ(u) / K_ph(z,z)`.
pub fn berezin_of_measure(spec: &MeasureSpec, z: &ComplexPoint, params: &FockParams, tol: f64) -> Result<f64> {
    spec.validate(params)?;
    params.check_point(z)?;
    let g = |u: &ComplexPoint| {
        let k = k_ph_normalized(u, z, params).map(|v| v.re).unwrap_or(f64::NAN);
        Complex64::new(k * k, 0.0)
    };
    // |K_ph(z,u)|² oscillates in the angle of u with frequency up to about 2|z||u|/α
    let r = z.norm();
    let degree = (r * (r + 3.0) / params.alpha()).ceil() as usize;
    let opts = IntegrationOptions::new(tol).degree(degree).reach(r);
    Ok(integrate_weighted_with(g, spec, params, &opts)?.re)
}

/// `v* T v / v* v` with `v` the truncated kernel coefficients at `z`.
pub fn berezin_of_matrix(t: &ToeplitzMatrix, z: &ComplexPoint) -> Result<f64> {
    let v = kernel_coeff_vector_weighted(z, &t.trunc, &t.params)?;
    let denom: f64 = v.iter().map(|c| c.norm_sqr()).sum();
    if denom == 0.0 {
        return Err(FockError::InputDomain(z.coords().to_vec()));
    }
    Ok(quadratic_form(t, &v)?.re / denom)
}

/// `(2e^{|z|²/α} − 1) e^{-|z|²/α}`.
pub fn trace_weight(z: &ComplexPoint, params: &FockParams) -> f64 {
    2.0 - (-z.norm_sqr() / params.alpha()).exp()
}

/// `K_D(z,z) e^{-|z|²/α}`, the weight of a matrix truncated at degree `D`.
pub fn partial_trace_weight(t: &ToeplitzMatrix, z: &ComplexPoint) -> Result<f64> {
    Ok(kernel_coeff_vector_weighted(z, &t.trunc, &t.params)?
        .iter()
        .map(|c| c.norm_sqr())
        .sum())
}

fn compare(a: &(f64, f64), b: &(f64, f64)) -> Comparison {
    Comparison {
        error: (a.0 - b.0).abs(),
        scale: b.0.abs().max(b.1),
        previous: Complex64::new(a.0, 0.0),
        last: Complex64::new(b.0, 0.0),
    }
}

/// Sums `Σ w h(z)` and `Σ w |h(z)|` over full-space nodes, refining until stable.
fn space_integral<H>(params: &FockParams, schedule: &RefinementSchedule, degree: usize, tol: f64, h: H) -> Result<f64>
where
    H: Fn(&ComplexPoint) -> Result<f64> + Sync,
{
    refine(
        schedule,
        tol,
        |level| {
            let nodes = gaussian_space_nodes(params, degree, &level, None);
            let parts = nodes.fold_chunks(
                || (0.0, 0.0),
                |acc, z, w| {
                    let v = h(z)?;
                    if !v.is_finite() {
                        return Err(FockError::InputDomain(z.coords().to_vec()));
                    }
                    acc.0 += v * w;
                    acc.1 += v.abs() * w;
                    Ok(())
                },
            )?;
            Ok(parts.into_iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1)))
        },
        compare,
    )
    .map(|v| v.0)
}

/// `(απ)^{-n} ∫ T̃(z) K_D(z,z) e^{-|z|²/α} dA(z)`.
pub fn trace_via_berezin_matrix(t: &ToeplitzMatrix, tol: f64) -> Result<f64> {
    let params = t.params;
    let schedule = RefinementSchedule::for_space(&params, t.degree());
    let integral = space_integral(&params, &schedule, t.degree(), tol, |z| {
        Ok(berezin_of_matrix(t, z)? * partial_trace_weight(t, z)?)
    })?;
    Ok(params.gaussian_normalizer() * integral)
}

fn outer_schedule(params: &FockParams) -> RefinementSchedule {
    match params.n() {
        1 => RefinementSchedule {
            base_radial: 32,
            base_angular: 16,
            max_level: 3,
            cutoff_growth: 0.5,
        },
        _ => RefinementSchedule {
            base_radial: 12,
            base_angular: 8,
            max_level: 2,
            cutoff_growth: 0.5,
        },
    }
}

/// `(απ)^{-n} ∫ μ̃(z) (2e^{|z|²/α} − 1) e^{-|z|²/α} dA(z)`.
///
/// Fails with [`FockError::Divergent`] when the measure is not trace class,
/// detected first from the unweighted total mass.
pub fn trace_via_berezin_measure(spec: &MeasureSpec, params: &FockParams, tol: f64) -> Result<f64> {
    spec.validate(params)?;
    integrate(|_| Complex64::new(1.0, 0.0), spec, params, &IntegrationOptions::new(tol).degree(0))?;
    let inner_tol = 0.1 * tol;
    let h = |z: &ComplexPoint| Ok(berezin_of_measure(spec, z, params, inner_tol)? * trace_weight(z, params));
    let integral = if spec.is_unitary_invariant() {
        radial_integral(params, tol, h)?
    } else {
        space_integral(params, &outer_schedule(params), 0, tol, h)?
    };
    Ok(params.gaussian_normalizer() * integral)
}

/// `∫ h dA` for radial `h`, sampled along the first coordinate axis.
fn radial_integral<H>(params: &FockParams, tol: f64, h: H) -> Result<f64>
where
    H: Fn(&ComplexPoint) -> Result<f64> + Sync,
{
    let n = params.n();
    let area = sphere_area(n) / 2.0;
    let schedule = RefinementSchedule {
        base_radial: 32,
        base_angular: 1,
        max_level: 3,
        cutoff_growth: 0.5,
    };
    refine(
        &schedule,
        tol,
        |level| {
            let t_max = envelope_cutoff(1.0 / params.alpha(), 0, 0.0) * level.cutoff_factor;
            let nodes = gauss_legendre_unit(level.radial);
            let vals = nodes
                .par_iter()
                .map(|&(x, w)| {
                    let t = t_max * x;
                    let mut coords = vec![Complex64::new(0.0, 0.0); n];
                    coords[0] = Complex64::new(t.sqrt(), 0.0);
                    let v = h(&ComplexPoint::new(coords))?;
                    Ok(v * w * t_max * t.powi(n as i32 - 1) * area)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((vals.iter().sum(), vals.iter().map(|v| v.abs()).sum()))
        },
        compare,
    )
    .map(|v| v.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerezinNorms {
    pub p: f64,
    /// `((απ)^{-n} ∫ |T̃|^p K_D(z,z) e^{-|z|²/α} dA)^{1/p}`
    pub weighted: f64,
    /// `(∫ |T̃|^p dA)^{1/p}`; absent when the quadrature does not settle.
    pub plain: Option<f64>,
}

pub fn berezin_lp_norm(t: &ToeplitzMatrix, p: f64, tol: f64) -> Result<BerezinNorms> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(FockError::InvalidParameter(format!("p must be finite and at least 1, got {p}")));
    }
    let params = t.params;
    let schedule = RefinementSchedule::for_space(&params, t.degree());
    let weighted = space_integral(&params, &schedule, t.degree(), tol, |z| {
        Ok(berezin_of_matrix(t, z)?.abs().powf(p) * partial_trace_weight(t, z)?)
    })? * params.gaussian_normalizer();
    let plain = match space_integral(&params, &schedule, t.degree(), tol, |z| {
        Ok(berezin_of_matrix(t, z)?.abs().powf(p))
    }) {
        Ok(v) => Some(v.powf(1.0 / p)),
        Err(FockError::Divergent { .. } | FockError::NotConverged { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(BerezinNorms {
        p,
        weighted: weighted.powf(1.0 / p),
        plain,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerezinProfile {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// `(2e^{|z|²/α} − 1) e^{-|z|²/α}` at each point.
    pub weights: Vec<f64>,
}

/// Evaluates a Berezin transform at every point, in parallel.
pub fn berezin_profile<F>(f: F, points: &[ComplexPoint], params: &FockParams) -> Result<BerezinProfile>
where
    F: Fn(&ComplexPoint) -> Result<f64> + Sync,
{
    let values = points.par_iter().map(&f).collect::<Result<Vec<_>>>()?;
    Ok(BerezinProfile {
        points: points.iter().map(ComplexPoint::to_interleaved).collect(),
        values,
        weights: points.iter().map(|z| trace_weight(z, params)).collect(),
    })
}

/// Fraction of the closed-form kernel diagonal defining the truncation knee.
pub const KNEE_FRACTION: f64 = 0.9;

/// Largest radius at which `K_D(z,z) ≥ 0.9 K_ph(z,z)`.
pub fn truncation_knee(params: &FockParams, degree: usize) -> f64 {
    let alpha = params.alpha();
    // by the multinomial theorem K_D(z,z) = 1 + 2 Σ_{1≤d≤D} s^d/d! with s = |z|²/α, in any dimension
    let ratio = |r: f64| {
        let s = r * r / alpha;
        let ln_full = ln_diagonal(s);
        let mut total = 0.0;
        let mut term_ln = 0.0f64;
        for d in 0..=degree {
            if d > 0 {
                term_ln += s.ln() - (d as f64).ln();
            }
            let mult = if d == 0 { 1.0 } else { 2.0 };
            total += mult * (term_ln - ln_full).exp();
        }
        total
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while ratio(hi) >= KNEE_FRACTION {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) >= KNEE_FRACTION {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub radii: Vec<f64>,
    /// `sup |B̃|` over the angular sample at each radius.
    pub values: Vec<f64>,
    pub knee: Option<f64>,
    pub truncation_limited: Vec<bool>,
    /// Strictly decreasing over the radii at or beyond `from`.
    pub decays: bool,
}

/// Deterministic sample of the sphere `|z| = radius`.
pub fn sphere_sample(n: usize, radius: f64) -> Vec<ComplexPoint> {
    if radius == 0.0 {
        return vec![ComplexPoint::origin(n)];
    }
    sphere_nodes(n, radius, 3, 8).to_vec().into_iter().map(|(z, _)| z).collect()
}

pub fn decay_profile<F>(f: F, n: usize, radii: &[f64], knee: Option<f64>, from: f64) -> Result<DecayProfile>
where
    F: Fn(&ComplexPoint) -> Result<f64> + Sync,
{
    let values = radii
        .iter()
        .map(|&r| {
            let sample = sphere_sample(n, r);
            let vals = sample.par_iter().map(&f).collect::<Result<Vec<_>>>()?;
            Ok(vals.into_iter().map(f64::abs).fold(0.0, f64::max))
        })
        .collect::<Result<Vec<_>>>()?;
    let scale = values.iter().copied().fold(0.0, f64::max);
    let tail: Vec<f64> = radii
        .iter()
        .zip(&values)
        .filter(|(r, _)| **r >= from)
        .map(|(_, v)| *v)
        .collect();
    let decays = tail.len() >= 2 && tail.windows(2).all(|w| w[1] < w[0] - 1e-12 * scale);
    Ok(DecayProfile {
        radii: radii.to_vec(),
        truncation_limited: radii.iter().map(|r| knee.is_some_and(|k| *r > k)).collect(),
        values,
        knee,
        decays,
    })
}

/// Profile of a truncated matrix with the knee at [`truncation_knee`].
pub fn matrix_decay_profile(t: &ToeplitzMatrix, radii: &[f64]) -> Result<DecayProfile> {
    let knee = truncation_knee(&t.params, t.degree());
    decay_profile(|z| berezin_of_matrix(t, z), t.params.n(), radii, Some(knee), 0.0)
}

pub fn measure_decay_profile(spec: &MeasureSpec, params: &FockParams, radii: &[f64], tol: f64) -> Result<DecayProfile> {
    decay_profile(|z| berezin_of_measure(spec, z, params, tol), params.n(), radii, None, 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSample {
    pub point: Vec<f64>,
    /// Berezin transform of `T^p`.
    pub of_power: f64,
    /// `p`-th power of the Berezin transform of `T`.
    pub power_of: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerComparison {
    pub power: u32,
    pub samples: Vec<PowerSample>,
    /// `of_power ≤ power_of + 1e-10` at every sample.
    pub upper_holds: bool,
    /// `of_power ≥ power_of − 1e-10` at every sample.
    pub lower_holds: bool,
    pub worst_upper_excess: f64,
}

/// Compares the Berezin transform of `T^p` against the `p`-th power of that of `T`.
pub fn power_comparison(t: &ToeplitzMatrix, power: u32, points: &[ComplexPoint]) -> Result<PowerComparison> {
    if power == 0 {
        return Err(FockError::InvalidParameter("power must be positive".into()));
    }
    let mut tp = t.clone();
    for _ in 1..power {
        tp = tp.compose(t)?;
    }
    let samples = points
        .par_iter()
        .map(|z| {
            Ok(PowerSample {
                point: z.to_interleaved(),
                of_power: berezin_of_matrix(&tp, z)?,
                power_of: berezin_of_matrix(t, z)?.powi(power as i32),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_upper_excess = samples
        .iter()
        .map(|s| s.of_power - s.power_of)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(PowerComparison {
        power,
        upper_holds: samples.iter().all(|s| s.of_power <= s.power_of + 1e-10),
        lower_holds: samples.iter().all(|s| s.of_power >= s.power_of - 1e-10),
        worst_upper_excess,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::enumerate_basis;
    use crate::measures::Atom;
    use crate::toeplitz::{assemble, AssemblyOptions};
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

    fn atom(c: f64) -> MeasureSpec {
        MeasureSpec::AtomSet(vec![Atom {
            point: ComplexPoint::scalar(0.0, 0.0),
            weight: c,
        }])
    }

    #[test]
    fn measure_examples() {
        let p = p1();
        let o = ComplexPoint::scalar(0.0, 0.0);
        assert!((berezin_of_measure(&atom(3.0), &o, &p, 1e-10).unwrap() - 3.0).abs() < 1e-14);
        let id = MeasureSpec::ScaledLebesgue { c: 1.0 / PI };
        for z in [o.clone(), ComplexPoint::scalar(1.3, -0.4), ComplexPoint::scalar(-2.5, 2.0)] {
            let v = berezin_of_measure(&id, &z, &p, 1e-10).unwrap();
            assert!((v - 1.0).abs() < 1e-7, "{v}");
        }
        assert!((berezin_of_measure(&gauss(), &o, &p, 1e-10).unwrap() - PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn matrix_examples() {
        let p = p1();
        let z = ComplexPoint::scalar(0.7, 1.2);
        let id = ToeplitzMatrix::identity(&p, 5);
        assert!((berezin_of_matrix(&id, &z).unwrap() - 1.0).abs() < 1e-14);
        let t = assemble(&atom(2.0), &enumerate_basis(&p, 6), &p, &AssemblyOptions::new(1e-10)).unwrap();
        assert!((berezin_of_matrix(&t, &ComplexPoint::scalar(0.0, 0.0)).unwrap() - 2.0).abs() < 1e-14);
        let g = assemble(&gauss(), &enumerate_basis(&p, 8), &p, &AssemblyOptions::new(1e-10)).unwrap();
        let one = ComplexPoint::scalar(1.0, 0.0);
        let a = berezin_of_matrix(&g, &one).unwrap();
        let b = berezin_of_measure(&gauss(), &one, &p, 1e-10).unwrap();
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }

    #[test]
    fn trace_formulas() {
        let p = p1();
        let id = ToeplitzMatrix::identity(&p, 4);
        assert!((trace_via_berezin_matrix(&id, 1e-10).unwrap() - 9.0).abs() < 1e-6);
        let t = assemble(&atom(1.5), &enumerate_basis(&p, 4), &p, &AssemblyOptions::new(1e-10)).unwrap();
        assert!((trace_via_berezin_matrix(&t, 1e-10).unwrap() - 1.5).abs() < 1e-8);
        assert!((trace_via_berezin_measure(&atom(1.5), &p, 1e-8).unwrap() - 1.5).abs() < 1e-6);
        let g = trace_via_berezin_measure(&gauss(), &p, 1e-8).unwrap();
        assert!((g - 1.5 * PI).abs() < 1e-5, "{g}");
        assert!(matches!(
            trace_via_berezin_measure(&MeasureSpec::ScaledLebesgue { c: 1.0 }, &p, 1e-8),
            Err(FockError::Divergent { .. })
        ));
    }

    #[test]
    fn norms_and_profiles() {
        let p = p1();
        let t = assemble(&atom(1.5), &enumerate_basis(&p, 4), &p, &AssemblyOptions::new(1e-10)).unwrap();
        let n = berezin_lp_norm(&t, 1.0, 1e-9).unwrap();
        assert!((n.weighted - 1.5).abs() < 1e-7);
        let radii = [0.5, 1.0, 1.5, 2.0];
        let prof = matrix_decay_profile(&t, &radii).unwrap();
        assert!(prof.decays);
        let knee = prof.knee.unwrap();
        assert!(knee > 1.0 && knee < 3.0, "{knee}");
        let id = ToeplitzMatrix::identity(&p, 4);
        let prof = matrix_decay_profile(&id, &radii).unwrap();
        assert!(!prof.decays);
        let prof = measure_decay_profile(&gauss(), &p, &[1.0, 2.0, 3.0, 4.0], 1e-9).unwrap();
        assert!(prof.decays);
    }

    #[test]
    fn power_transform_comparison() {
        let p = p1();
        let t = assemble(&gauss(), &enumerate_basis(&p, 6), &p, &AssemblyOptions::new(1e-10)).unwrap();
        let pts = [ComplexPoint::scalar(0.5, 0.2), ComplexPoint::scalar(1.0, -1.0)];
        let cmp = power_comparison(&t, 2, &pts).unwrap();
        assert!(cmp.lower_holds);
    }
}
