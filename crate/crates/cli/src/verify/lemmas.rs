//! Point-evaluation inequalities over balls, for harmonic and entire test functions.

use std::f64::consts::PI;

use phfock::quadrature::{ball_nodes, NodeSet};
use phfock::{enumerate_basis, eval_basis, BasisIndex, Complex64, ComplexPoint, FockParams, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{random_point, Ctx, VerifyOutcome};

const R: f64 = 2.0;
const SPAN_DEGREE: usize = 4;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `n!/πⁿ`, the reciprocal volume of the unit ball of `ℂⁿ`.
pub fn sub_mean_constant(n: usize) -> f64 {
    factorial(n) / PI.powi(n as i32)
}

fn rule(center: &ComplexPoint, r: f64, fine: bool) -> NodeSet {
    match (center.dim(), fine) {
        (1, true) => ball_nodes(center, r, 20, 48),
        (1, false) => ball_nodes(center, r, 14, 32),
        (_, true) => ball_nodes(center, r, 10, 24),
        (_, false) => ball_nodes(center, r, 7, 16),
    }
}

/// A finite combination of basis functions.
struct Combination {
    terms: Vec<(BasisIndex, Complex64)>,
}

impl Combination {
    fn random(rng: &mut ChaCha8Rng, params: &FockParams, holo_only: bool) -> Self {
        let trunc = enumerate_basis(params, SPAN_DEGREE);
        let terms = trunc
            .indices()
            .iter()
            .filter(|idx| !holo_only || idx.is_holo())
            .map(|idx| {
                let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                (idx.clone(), c)
            })
            .collect();
        Self { terms }
    }

    fn single(idx: BasisIndex) -> Self {
        Self {
            terms: vec![(idx, Complex64::new(1.0, 0.0))],
        }
    }

    fn eval(&self, z: &ComplexPoint, params: &FockParams) -> Complex64 {
        self.terms.iter().map(|(idx, c)| c * eval_basis(idx, z, params)).sum()
    }
}

/// `∫_{B(a,r)} |f(z) e^{-s|z|²}|^p dA(z)`.
fn ball_integral(f: &Combination, a: &ComplexPoint, r: f64, p: f64, s: f64, params: &FockParams, fine: bool) -> Result<f64> {
    let (v, _) = rule(a, r, fine).sum(|z| {
        let w = (f.eval(z, params).norm() * (-s * z.norm_sqr()).exp()).powf(p);
        Complex64::new(w, 0.0)
    })?;
    Ok(v.re)
}

#[derive(Debug, Serialize)]
struct Sample {
    n: usize,
    a: Vec<f64>,
    r: f64,
    p: f64,
    /// `r^{2n} |f(a) e^{-|a|²/(2α)}|^p / ∫_{B(a,r)} |f e^{-|z|²/(2α)}|^p dA`
    harmonic_ratio: f64,
    harmonic_constant: f64,
    entire_ratio: f64,
    entire_safer_constant: f64,
    entire_literal_constant: f64,
}

pub fn point_evaluation(ctx: &Ctx, o: &mut VerifyOutcome) -> Result<()> {
    let mut rng = ctx.rng();
    let alpha = ctx.alpha;

    // brute-force C_p: sup of r^{2n}|f(a)|^p / ∫_{B(a,r)} |f|^p over single basis functions
    let mut calibrated = Vec::new();
    for n in [1usize, 2] {
        let params = ctx.params(n)?;
        let trunc = enumerate_basis(&params, 3);
        let mut sup = 0.0f64;
        for idx in trunc.indices() {
            let f = Combination::single(idx.clone());
            for _ in 0..3 {
                let a = random_point(&mut rng, n, 1.5);
                let r = rng.random_range(0.2..=R);
                let integral = ball_integral(&f, &a, r, 2.0, 0.0, &params, true)?;
                if integral > 0.0 {
                    sup = sup.max(r.powi(2 * n as i32) * f.eval(&a, &params).norm_sqr() / integral);
                }
            }
        }
        let exact = sub_mean_constant(n);
        o.value(format!("n{n}.calibrated_c_p"), sup);
        o.value(format!("n{n}.c_p"), exact);
        o.at_most(format!("n{n}.calibration_excess"), (sup - exact) / exact, 1e-9);
        calibrated.push(sup);
    }

    let mut samples = Vec::new();
    let mut quadrature_gap = 0.0f64;
    for i in 0..60 {
        let n = if i < 50 { 1 } else { 2 };
        let params = ctx.params(n)?;
        let a = random_point(&mut rng, n, if n == 1 { 2.0 } else { 1.5 });
        let r = rng.random_range(0.1..=R);
        let p = [1.0, 2.0, 3.0][i % 3];
        let f = Combination::random(&mut rng, &params, false);
        let g = Combination::random(&mut rng, &params, true);
        let s = 1.0 / (2.0 * alpha);
        let weight = (-s * a.norm_sqr()).exp();
        let r2n = r.powi(2 * n as i32);
        let mut ratio = |h: &Combination| -> Result<f64> {
            let fine = ball_integral(h, &a, r, p, s, &params, true)?;
            let coarse = ball_integral(h, &a, r, p, s, &params, false)?;
            quadrature_gap = quadrature_gap.max((fine - coarse).abs() / fine);
            Ok(r2n * (h.eval(&a, &params).norm() * weight).powf(p) / fine)
        };
        let harmonic_ratio = ratio(&f)?;
        let entire_ratio = ratio(&g)?;
        let am = a.norm();
        samples.push(Sample {
            n,
            a: a.to_interleaved(),
            r,
            p,
            harmonic_ratio,
            harmonic_constant: calibrated[n - 1] * (p * (R * R + 2.0 * R * am) / (2.0 * alpha)).exp(),
            entire_ratio,
            entire_safer_constant: 2.0 * n as f64 * (R * (R + 2.0 * am) * p / (2.0 * alpha)).exp(),
            entire_literal_constant: 2.0 * n as f64 * (R * p / (2.0 * alpha)).exp(),
        });
    }
    let harmonic_bad = samples.iter().filter(|s| s.harmonic_ratio > s.harmonic_constant).count();
    let safer_bad = samples.iter().filter(|s| s.entire_ratio > s.entire_safer_constant).count();
    let literal_bad = samples.iter().filter(|s| s.entire_ratio > s.entire_literal_constant).count();
    let worst = |f: &dyn Fn(&Sample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    o.value("samples", samples.len());
    o.value("radius_cap", R);
    o.value("quadrature_relative_gap", quadrature_gap);
    o.value("harmonic.worst_ratio_over_constant", worst(&|s| s.harmonic_ratio / s.harmonic_constant));
    o.value("harmonic.violations", harmonic_bad);
    o.value("entire_safer.worst_ratio_over_constant", worst(&|s| s.entire_ratio / s.entire_safer_constant));
    o.value("entire_safer.violations", safer_bad);
    o.value("entire_literal.worst_ratio_over_constant", worst(&|s| s.entire_ratio / s.entire_literal_constant));
    o.value("entire_literal.violations", literal_bad);
    o.value("detail", &samples);
    o.require(harmonic_bad == 0, format!("harmonic bound fails at {harmonic_bad} samples"));
    o.require(safer_bad == 0, format!("entire bound with 2n e^{{R(R+2|a|)p/(2α)}} fails at {safer_bad} samples"));
    o.note(format!(
        "constant 2n e^{{Rp/(2α)}} (not asserted) fails at {literal_bad} of {} samples",
        samples.len()
    ));
    Ok(())
}
