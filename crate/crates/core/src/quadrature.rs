//! Polar product quadrature on `ℂⁿ`.
//!
//! Each complex coordinate is integrated in polar form with `t = |u|²`:
//! Gauss–Legendre in `t` on `[0, t_max]` and the periodic trapezoid rule in
//! the angle. Since `dA = ½ dt dθ`, a rule with `A` angles integrates
//! `u^a ū^b` exactly (up to the radial rule) whenever `|a − b| < A`.
//! Refinement doubles both node counts and widens the cutoff; successive
//! levels are compared until they agree to the requested tolerance.

use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;
use statrs::function::factorial::ln_factorial;

use crate::basis::{ComplexPoint, FockParams};
use crate::error::{FockError, Result};

/// Nodes per parallel work unit. Fixed so that reductions are bit-stable for any thread count.
pub const CHUNK: usize = 2048;

/// Default tail allowance: the cutoff is placed where the Gaussian envelope
/// has decayed by `e^{-(degree + TAIL_EXPONENT)}`.
pub const TAIL_EXPONENT: f64 = 40.0;

/// Gauss–Legendre nodes and weights on `[0, 1]` (weights sum to 1).
pub fn gauss_legendre_unit(points: usize) -> Vec<(f64, f64)> {
    if points == 1 {
        return vec![(0.5, 1.0)];
    }
    let rule = GaussLegendre::new(points).expect("at least two Gauss-Legendre nodes");
    rule.as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

/// One refinement level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub index: usize,
    pub radial: usize,
    pub angular: usize,
    /// Multiplier applied to the base cutoff `t_max`.
    pub cutoff_factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinementSchedule {
    pub base_radial: usize,
    pub base_angular: usize,
    pub max_level: usize,
    pub cutoff_growth: f64,
}

impl RefinementSchedule {
    /// Schedule for integrands of polynomial degree up to `2·degree` per coordinate
    /// against a Gaussian envelope.
    pub fn for_space(params: &FockParams, degree: usize) -> Self {
        let angular = min_angular(degree);
        match params.n() {
            1 => Self {
                base_radial: 48,
                base_angular: angular.max(32),
                max_level: 4,
                cutoff_growth: 0.5,
            },
            2 => Self {
                base_radial: 24,
                base_angular: angular,
                max_level: 2,
                cutoff_growth: 0.5,
            },
            _ => Self {
                base_radial: 12,
                base_angular: angular,
                max_level: 1,
                cutoff_growth: 0.5,
            },
        }
    }

    /// Schedule for one-coordinate moment tables.
    pub fn for_disk(degree: usize) -> Self {
        Self {
            base_radial: 48,
            base_angular: min_angular(2 * degree).max(32),
            max_level: 4,
            cutoff_growth: 0.5,
        }
    }

    pub fn level(&self, index: usize) -> Level {
        Level {
            index,
            radial: self.base_radial << index,
            angular: self.base_angular << index,
            cutoff_factor: 1.0 + self.cutoff_growth * index as f64,
        }
    }
}

/// Smallest even angular count (multiple of 4) resolving frequencies up to `2·degree`.
fn min_angular(degree: usize) -> usize {
    let a = 2 * degree + 4;
    a.div_ceil(4) * 4
}

/// Polar rule on one complex coordinate: `u = center + √t e^{iθ}`, `t ∈ [0, t_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskRule {
    pub center: Complex64,
    pub t_max: f64,
    pub radial: usize,
    pub angular: usize,
}

impl DiskRule {
    /// Nodes with weights for `dA` (they sum to `π t_max`).
    pub fn nodes(&self) -> Vec<(Complex64, f64)> {
        let gl = gauss_legendre_unit(self.radial);
        let dtheta = 2.0 * PI / self.angular as f64;
        let angles: Vec<Complex64> = (0..self.angular)
            .map(|k| Complex64::from_polar(1.0, k as f64 * dtheta))
            .collect();
        let mut out = Vec::with_capacity(self.radial * self.angular);
        for (x, w) in gl {
            let t = self.t_max * x;
            let rho = t.sqrt();
            let weight = 0.5 * self.t_max * w * dtheta;
            for e in &angles {
                out.push((self.center + e * rho, weight));
            }
        }
        out
    }
}

/// Quadrature nodes over (a region of) `ℂⁿ` with weights for `dA`.
///
/// Tensor-product sets are never materialized; points are decoded from their
/// flat index inside each work chunk.
#[derive(Debug, Clone)]
pub enum NodeSet {
    Explicit(Vec<(ComplexPoint, f64)>),
    Tensor(Vec<Vec<(Complex64, f64)>>),
}

impl Default for NodeSet {
    fn default() -> Self {
        NodeSet::Explicit(Vec::new())
    }
}

impl NodeSet {
    pub fn len(&self) -> usize {
        match self {
            NodeSet::Explicit(v) => v.len(),
            NodeSet::Tensor(coords) => coords.iter().map(Vec::len).product(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn node(&self, index: usize) -> (ComplexPoint, f64) {
        match self {
            NodeSet::Explicit(v) => v[index].clone(),
            NodeSet::Tensor(coords) => {
                let mut rest = index;
                let mut w = 1.0;
                let mut z = vec![Complex64::new(0.0, 0.0); coords.len()];
                for (slot, axis) in z.iter_mut().zip(coords).rev() {
                    let (c, cw) = axis[rest % axis.len()];
                    rest /= axis.len();
                    *slot = c;
                    w *= cw;
                }
                (ComplexPoint::new(z), w)
            }
        }
    }

    /// Node list, materialized.
    pub fn to_vec(&self) -> Vec<(ComplexPoint, f64)> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// Folds every chunk of [`CHUNK`] consecutive nodes in parallel and returns
    /// the per-chunk accumulators in node order.
    pub fn fold_chunks<T, I, F>(&self, init: I, step: F) -> Result<Vec<T>>
    where
        T: Send,
        I: Fn() -> T + Sync,
        F: Fn(&mut T, &ComplexPoint, f64) -> Result<()> + Sync,
    {
        let len = self.len();
        let chunks = len.div_ceil(CHUNK);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = init();
                for i in c * CHUNK..((c + 1) * CHUNK).min(len) {
                    match self {
                        NodeSet::Explicit(v) => step(&mut acc, &v[i].0, v[i].1)?,
                        NodeSet::Tensor(_) => {
                            let (z, w) = self.node(i);
                            step(&mut acc, &z, w)?
                        }
                    }
                }
                Ok(acc)
            })
            .collect()
    }

    /// `Σ w g(z)` with fixed-chunk parallel summation, plus `Σ w |g(z)|`.
    pub fn sum<F>(&self, g: F) -> Result<(Complex64, f64)>
    where
        F: Fn(&ComplexPoint) -> Complex64 + Sync,
    {
        let parts = self.fold_chunks(
            || (Complex64::new(0.0, 0.0), 0.0),
            |acc, z, w| {
                let v = g(z);
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(FockError::InputDomain(z.coords().to_vec()));
                }
                acc.0 += v * w;
                acc.1 += v.norm() * w.abs();
                Ok(())
            },
        )?;
        let mut total = Complex64::new(0.0, 0.0);
        let mut abs = 0.0;
        for (a, b) in parts {
            total += a;
            abs += b;
        }
        Ok((total, abs))
    }

    /// Element-wise sum of vector-valued node contributions.
    pub fn sum_vectors<F>(&self, size: usize, g: F) -> Result<Vec<Complex64>>
    where
        F: Fn(&ComplexPoint, f64, &mut [Complex64]) -> Result<()> + Sync,
    {
        let parts = self.fold_chunks(
            || vec![Complex64::new(0.0, 0.0); size],
            |acc, z, w| g(z, w, acc),
        )?;
        let mut total = vec![Complex64::new(0.0, 0.0); size];
        for part in parts {
            for (t, p) in total.iter_mut().zip(part) {
                *t += p;
            }
        }
        Ok(total)
    }
}

/// Tensor product of one disk rule per coordinate.
pub fn tensor_nodes(rules: &[DiskRule]) -> NodeSet {
    NodeSet::Tensor(rules.iter().map(DiskRule::nodes).collect())
}

/// Base cutoff `t_max` for an envelope `e^{-κ|u|²}` and integrand degree `degree`.
pub fn envelope_cutoff(decay: f64, degree: usize, reach: f64) -> f64 {
    let r = ((degree as f64 + TAIL_EXPONENT) / decay).sqrt() + reach;
    r * r
}

/// Full-space rule for the Gaussian `e^{-|z|²/α}`; cutoff `α(2D+40)` at level 0.
pub fn gaussian_space_nodes(
    params: &FockParams,
    degree: usize,
    level: &Level,
    center: Option<&ComplexPoint>,
) -> NodeSet {
    let t_max = envelope_cutoff(1.0 / params.alpha(), 2 * degree, 0.0) * level.cutoff_factor;
    let origin = ComplexPoint::origin(params.n());
    let center = center.unwrap_or(&origin);
    let rules: Vec<DiskRule> = center
        .coords()
        .iter()
        .map(|&c| DiskRule {
            center: c,
            t_max,
            radial: level.radial,
            angular: level.angular,
        })
        .collect();
    tensor_nodes(&rules)
}

/// Collapsed (Duffy) rule on the simplex `{x ≥ 0, Σx ≤ 1}` in `dim` dimensions;
/// weights sum to its volume `1/dim!`.
pub fn simplex_rule(dim: usize, points: usize) -> Vec<(Vec<f64>, f64)> {
    if dim == 0 {
        return vec![(Vec::new(), 1.0)];
    }
    let gl = gauss_legendre_unit(points);
    let mut out: Vec<(Vec<f64>, f64, f64)> = vec![(Vec::new(), 1.0, 1.0)];
    // third field: remaining length Π(1 - u_j)
    for _ in 0..dim {
        let mut next = Vec::with_capacity(out.len() * gl.len());
        for (xs, w, remaining) in &out {
            for &(u, gw) in &gl {
                let mut x = xs.clone();
                x.push(u * remaining);
                // Jacobian factor of this coordinate: the remaining length.
                next.push((x, w * gw * remaining, remaining * (1.0 - u)));
            }
        }
        out = next;
    }
    out.into_iter().map(|(x, w, _)| (x, w)).collect()
}

/// Rule over the closed ball `B(center, radius)` in `ℂⁿ`, weights for `dA`.
pub fn ball_nodes(center: &ComplexPoint, radius: f64, radial: usize, angular: usize) -> NodeSet {
    let n = center.dim();
    let r2 = radius * radius;
    let dtheta = 2.0 * PI / angular as f64;
    let angle_grid = angle_tuples(n, angular);
    let mut nodes = Vec::new();
    for (x, w) in simplex_rule(n, radial) {
        let radii: Vec<f64> = x.iter().map(|xi| (r2 * xi).sqrt()).collect();
        let weight = w * r2.powi(n as i32) * (0.5 * dtheta).powi(n as i32);
        for angles in &angle_grid {
            let coords = center
                .coords()
                .iter()
                .zip(&radii)
                .zip(angles)
                .map(|((c, rho), e)| c + e * rho)
                .collect();
            nodes.push((ComplexPoint::new(coords), weight));
        }
    }
    NodeSet::Explicit(nodes)
}

/// Normalized rule on the sphere `|z| = radius` of `ℂⁿ` (weights sum to 1).
///
/// Uses `tᵢ = |zᵢ|²`, uniform on the simplex `Σtᵢ = radius²`, times independent
/// uniform angles; it is exact for polynomials in `z, z̄` of degree `< angular`
/// in each coordinate once the simplex rule has enough points.
pub fn sphere_nodes(n: usize, radius: f64, radial: usize, angular: usize) -> NodeSet {
    let r2 = radius * radius;
    let angle_grid = angle_tuples(n, angular);
    let norm = (ln_factorial((n - 1) as u64)).exp() / (angular as f64).powi(n as i32);
    let mut nodes = Vec::new();
    for (x, w) in simplex_rule(n - 1, radial) {
        let last = (1.0 - x.iter().sum::<f64>()).max(0.0);
        let radii: Vec<f64> = x
            .iter()
            .chain(std::iter::once(&last))
            .map(|xi| (r2 * xi).sqrt())
            .collect();
        for angles in &angle_grid {
            let coords = radii.iter().zip(angles).map(|(rho, e)| e * rho).collect();
            nodes.push((ComplexPoint::new(coords), w * norm));
        }
    }
    NodeSet::Explicit(nodes)
}

fn angle_tuples(n: usize, angular: usize) -> Vec<Vec<Complex64>> {
    let dtheta = 2.0 * PI / angular as f64;
    let unit: Vec<Complex64> = (0..angular)
        .map(|k| Complex64::from_polar(1.0, k as f64 * dtheta))
        .collect();
    let mut out: Vec<Vec<Complex64>> = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * angular);
        for prefix in &out {
            for e in &unit {
                let mut p = prefix.clone();
                p.push(*e);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Outcome of comparing two successive refinement levels.
#[derive(Debug, Clone, Copy)]
pub struct Comparison {
    /// Largest absolute change between the levels.
    pub error: f64,
    /// Magnitude the change is measured against.
    pub scale: f64,
    pub previous: Complex64,
    pub last: Complex64,
}

pub fn compare_vectors(prev: &Vec<Complex64>, last: &Vec<Complex64>) -> Comparison {
    let scale = last.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut worst = Comparison {
        error: 0.0,
        scale,
        previous: Complex64::new(0.0, 0.0),
        last: Complex64::new(0.0, 0.0),
    };
    for (a, b) in prev.iter().zip(last) {
        let e = (a - b).norm();
        if e > worst.error || (worst.error == 0.0 && b.norm() > worst.last.norm()) {
            worst.error = e;
            worst.previous = *a;
            worst.last = *b;
        }
    }
    worst
}

/// Runs `eval` at increasing levels until `compare(prev, cur).error ≤ tol·scale`.
///
/// A sequence whose magnitude keeps growing without shrinking increments is
/// reported as [`FockError::Divergent`]; any other failure as
/// [`FockError::NotConverged`] with the last two estimates.
pub fn refine<T, F, C>(schedule: &RefinementSchedule, tol: f64, mut eval: F, compare: C) -> Result<T>
where
    F: FnMut(Level) -> Result<T>,
    C: Fn(&T, &T) -> Comparison,
{
    if !(tol.is_finite() && tol > 0.0) {
        return Err(FockError::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let mut prev = eval(schedule.level(0))?;
    let mut history: Vec<Comparison> = Vec::new();
    for index in 1..=schedule.max_level {
        let cur = eval(schedule.level(index))?;
        let cmp = compare(&prev, &cur);
        if cmp.error <= tol * cmp.scale {
            return Ok(cur);
        }
        history.push(cmp);
        prev = cur;
    }
    let last = *history.last().expect("max_level is at least one");
    if is_divergent(&history) {
        return Err(FockError::Divergent {
            previous: last.previous.norm(),
            last: last.last.norm(),
        });
    }
    Err(FockError::NotConverged {
        previous: last.previous,
        last: last.last,
        tol,
    })
}

fn is_divergent(history: &[Comparison]) -> bool {
    if history.len() < 2 {
        return false;
    }
    history.windows(2).all(|w| {
        let (a, b) = (w[0], w[1]);
        b.last.norm() > a.last.norm() && a.last.norm() > a.previous.norm() && b.error >= 0.5 * a.error
    })
}

/// A validated per-coordinate Gaussian rule.
///
/// Valid when every radial moment `∫ |z|^{2m} e^{-|z|²/α} dA = π α^{m+1} m!`
/// with `m ≤ 2·d_max` is reproduced to the declared relative tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub n: usize,
    pub radial_nodes: Vec<f64>,
    pub radial_weights: Vec<f64>,
    pub angular: usize,
    /// `R_max = sqrt(t_max)`.
    pub cutoff_radius: f64,
    pub tolerance: f64,
    pub level: Level,
}

impl QuadratureRule {
    pub fn at_level(params: &FockParams, d_max: usize, level: Level, tolerance: f64) -> Self {
        let t_max = envelope_cutoff(1.0 / params.alpha(), 2 * d_max, 0.0) * level.cutoff_factor;
        let (radial_nodes, radial_weights) = gauss_legendre_unit(level.radial)
            .into_iter()
            .map(|(x, w)| (t_max * x, t_max * w))
            .unzip();
        Self {
            n: params.n(),
            radial_nodes,
            radial_weights,
            angular: level.angular,
            cutoff_radius: t_max.sqrt(),
            tolerance,
            level,
        }
    }

    /// Lowest level of the default schedule whose moments pass validation.
    pub fn validated(params: &FockParams, d_max: usize, tolerance: f64) -> Result<Self> {
        let schedule = RefinementSchedule::for_space(params, d_max);
        let mut worst = 0.0;
        for index in 0..=schedule.max_level + 2 {
            let rule = Self::at_level(params, d_max, schedule.level(index), tolerance);
            worst = rule.max_moment_error(params, 2 * d_max);
            if worst <= tolerance {
                return Ok(rule);
            }
        }
        Err(FockError::NotConverged {
            previous: Complex64::new(worst, 0.0),
            last: Complex64::new(worst, 0.0),
            tol: tolerance,
        })
    }

    /// Largest relative error over the radial moments `m = 0..=max_power`.
    pub fn max_moment_error(&self, params: &FockParams, max_power: usize) -> f64 {
        let alpha = params.alpha();
        (0..=max_power)
            .map(|m| {
                let approx: f64 = self
                    .radial_nodes
                    .iter()
                    .zip(&self.radial_weights)
                    .map(|(t, w)| w * 0.5 * 2.0 * PI * t.powi(m as i32) * (-t / alpha).exp())
                    .sum();
                let exact = PI * (ln_factorial(m as u64) + (m as f64 + 1.0) * alpha.ln()).exp();
                (approx - exact).abs() / exact
            })
            .fold(0.0, f64::max)
    }

    pub fn disk_rule(&self, center: Complex64) -> DiskRule {
        DiskRule {
            center,
            t_max: self.cutoff_radius * self.cutoff_radius,
            radial: self.radial_nodes.len(),
            angular: self.angular,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_rule_area_and_gaussian_moments() {
        let rule = DiskRule {
            center: Complex64::new(0.0, 0.0),
            t_max: 60.0,
            radial: 64,
            angular: 16,
        };
        let nodes = rule.nodes();
        let area: f64 = nodes.iter().map(|(_, w)| w).sum();
        assert!((area - PI * 60.0).abs() < 1e-10);
        for m in 0..8 {
            let v: f64 = nodes
                .iter()
                .map(|(z, w)| w * z.norm_sqr().powi(m) * (-z.norm_sqr()).exp())
                .sum();
            let exact = PI * (1..=m).map(|k| k as f64).product::<f64>();
            assert!((v - exact).abs() < 1e-12 * exact, "m={m}: {v} vs {exact}");
        }
    }

    #[test]
    fn simplex_volumes() {
        for dim in 0..4 {
            let vol: f64 = simplex_rule(dim, 6).iter().map(|(_, w)| w).sum();
            let exact = 1.0 / (1..=dim).map(|k| k as f64).product::<f64>();
            assert!((vol - exact).abs() < 1e-14);
        }
        // ∫ x₁ x₂ over the 2-simplex = 1/24
        let v: f64 = simplex_rule(2, 4).iter().map(|(x, w)| w * x[0] * x[1]).sum();
        assert!((v - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn ball_volume_in_c2() {
        let c = ComplexPoint::new(vec![Complex64::new(0.5, 0.1), Complex64::new(-1.0, 2.0)]);
        let nodes = ball_nodes(&c, 1.5, 6, 8);
        let vol: f64 = nodes.to_vec().iter().map(|(_, w)| w).sum();
        let exact = PI * PI * 1.5f64.powi(4) / 2.0;
        assert!((vol - exact).abs() < 1e-12 * exact);
        assert!(nodes
            .to_vec()
            .iter()
            .all(|(z, _)| z.distance_sqr(&c) <= 1.5 * 1.5 + 1e-12));
    }

    #[test]
    fn sphere_rule_moments() {
        // mean of |z₁|² over the unit sphere of ℂ² is 1/2; of |z₁|²|z₂|² is 1/6
        let s = sphere_nodes(2, 1.0, 4, 8);
        let total: f64 = s.to_vec().iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-14);
        let m1: f64 = s.to_vec().iter().map(|(z, w)| w * z.coords()[0].norm_sqr()).sum();
        assert!((m1 - 0.5).abs() < 1e-14);
        let m2: f64 = s
            .to_vec()
            .iter()
            .map(|(z, w)| w * z.coords()[0].norm_sqr() * z.coords()[1].norm_sqr())
            .sum();
        assert!((m2 - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn refine_reports_two_estimates() {
        let schedule = RefinementSchedule {
            base_radial: 2,
            base_angular: 4,
            max_level: 3,
            cutoff_growth: 0.0,
        };
        // oscillating, never settling
        let err = refine(
            &schedule,
            1e-12,
            |l| Ok(vec![Complex64::new(if l.index % 2 == 0 { 1.0 } else { 2.0 }, 0.0)]),
            compare_vectors,
        )
        .unwrap_err();
        match err {
            FockError::NotConverged { previous, last, .. } => {
                assert_eq!(previous.re, 1.0);
                assert_eq!(last.re, 2.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn refine_flags_growth_as_divergence() {
        let schedule = RefinementSchedule {
            base_radial: 2,
            base_angular: 4,
            max_level: 4,
            cutoff_growth: 0.5,
        };
        let err = refine(
            &schedule,
            1e-9,
            |l| Ok(vec![Complex64::new(l.cutoff_factor * 10.0, 0.0)]),
            compare_vectors,
        )
        .unwrap_err();
        assert!(matches!(err, FockError::Divergent { .. }));
    }

    #[test]
    fn validated_rule_meets_tolerance() {
        let p = FockParams::new(1.0, 1).unwrap();
        let rule = QuadratureRule::validated(&p, 8, 1e-11).unwrap();
        assert!(rule.max_moment_error(&p, 16) <= 1e-11);
        let p = FockParams::new(2.5, 1).unwrap();
        let rule = QuadratureRule::validated(&p, 12, 1e-11).unwrap();
        assert!(rule.max_moment_error(&p, 24) <= 1e-11);
    }

    #[test]
    fn rejects_non_positive_tolerance() {
        let schedule = RefinementSchedule::for_disk(2);
        assert!(refine(&schedule, 0.0, |_| Ok(vec![]), compare_vectors).is_err());
    }
}
