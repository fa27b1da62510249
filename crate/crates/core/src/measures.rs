//! Positive measure catalog, Gaussian-weighted integration and ball masses.
//!
//! A [`MeasureSpec`] describes `μ` itself; every integral that needs the
//! Gaussian factor `e^{-|w|²/α}` applies it explicitly.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::{gamma_lr, ln_gamma};

use crate::basis::{ComplexPoint, FockParams};
use crate::error::{FockError, Result};
use crate::kernels::k_ph;
use crate::quadrature::{
    self, ball_nodes, envelope_cutoff, gauss_legendre_unit, sphere_nodes, tensor_nodes,
    Comparison, DiskRule, Level, NodeSet, RefinementSchedule,
};

/// Default relative tolerance for integrals.
pub const DEFAULT_INTEGRAL_TOL: f64 = 1e-9;
/// Default relative tolerance for ball masses.
pub const DEFAULT_BALL_TOL: f64 = 1e-8;
/// Polynomial degree (in `|z|²`) assumed for integrands when none is given.
pub const DEFAULT_DEGREE_HINT: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub point: ComplexPoint,
    pub weight: f64,
}

/// Sphere `|z| = radius` carrying weight `weight` in the Gaussian-weighted sense.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shell {
    pub radius: f64,
    pub weight: f64,
}

/// A positive Borel measure on `ℂⁿ` from a fixed catalog.
///
/// Missing centers mean the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureDoc", into = "MeasureDoc")]
pub enum MeasureSpec {
    /// `c dA`
    ScaledLebesgue { c: f64 },
    /// `c e^{-β|z−w₀|²} dA`
    GaussianDensity {
        c: f64,
        beta: f64,
        center: Option<ComplexPoint>,
    },
    /// `c |z|^{2k} e^{-s|z|²} dA`
    RadialPowerGaussian { c: f64, k: u32, s: f64 },
    /// `c 1_{B(a, r)} dA`
    BallIndicator {
        c: f64,
        center: Option<ComplexPoint>,
        radius: f64,
    },
    /// `Σ cᵢ δ_{wᵢ}`
    AtomSet(Vec<Atom>),
    /// `∫ f e^{-|w|²/α} dμ = Σ cᵢ · (mean of f over |z| = rᵢ)`
    RadialShells(Vec<Shell>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum MeasureDoc {
    ScaledLebesgue {
        c: f64,
    },
    GaussianDensity {
        c: f64,
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    RadialPowerGaussian {
        c: f64,
        k: u32,
        s: f64,
    },
    BallIndicator {
        c: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        radius: f64,
    },
    AtomSet {
        atoms: Vec<Vec<f64>>,
    },
    RadialShells {
        shells: Vec<[f64; 2]>,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(FockError::InvalidParameter(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn parse_center(v: Option<Vec<f64>>) -> Result<Option<ComplexPoint>> {
    v.map(|c| ComplexPoint::from_interleaved(&c)).transpose()
}

impl TryFrom<MeasureDoc> for MeasureSpec {
    type Error = FockError;

    fn try_from(doc: MeasureDoc) -> Result<Self> {
        let spec = match doc {
            MeasureDoc::ScaledLebesgue { c } => MeasureSpec::ScaledLebesgue { c },
            MeasureDoc::GaussianDensity { c, beta, center } => MeasureSpec::GaussianDensity {
                c,
                beta,
                center: parse_center(center)?,
            },
            MeasureDoc::RadialPowerGaussian { c, k, s } => {
                MeasureSpec::RadialPowerGaussian { c, k, s }
            }
            MeasureDoc::BallIndicator { c, center, radius } => MeasureSpec::BallIndicator {
                c,
                center: parse_center(center)?,
                radius,
            },
            MeasureDoc::AtomSet { atoms } => MeasureSpec::AtomSet(
                atoms
                    .into_iter()
                    .map(|a| {
                        if a.len() < 3 || a.len() % 2 == 0 {
                            return Err(FockError::Schema(format!(
                                "atom must be [re, im, ..., weight], got {} numbers",
                                a.len()
                            )));
                        }
                        let (coords, weight) = a.split_at(a.len() - 1);
                        Ok(Atom {
                            point: ComplexPoint::from_interleaved(coords)?,
                            weight: weight[0],
                        })
                    })
                    .collect::<Result<_>>()?,
            ),
            MeasureDoc::RadialShells { shells } => MeasureSpec::RadialShells(
                shells
                    .into_iter()
                    .map(|[radius, weight]| Shell { radius, weight })
                    .collect(),
            ),
        };
        spec.check_amplitudes()?;
        Ok(spec)
    }
}

impl From<MeasureSpec> for MeasureDoc {
    fn from(spec: MeasureSpec) -> Self {
        match spec {
            MeasureSpec::ScaledLebesgue { c } => MeasureDoc::ScaledLebesgue { c },
            MeasureSpec::GaussianDensity { c, beta, center } => MeasureDoc::GaussianDensity {
                c,
                beta,
                center: center.map(|p| p.to_interleaved()),
            },
            MeasureSpec::RadialPowerGaussian { c, k, s } => {
                MeasureDoc::RadialPowerGaussian { c, k, s }
            }
            MeasureSpec::BallIndicator { c, center, radius } => MeasureDoc::BallIndicator {
                c,
                center: center.map(|p| p.to_interleaved()),
                radius,
            },
            MeasureSpec::AtomSet(atoms) => MeasureDoc::AtomSet {
                atoms: atoms
                    .into_iter()
                    .map(|a| {
                        let mut v = a.point.to_interleaved();
                        v.push(a.weight);
                        v
                    })
                    .collect(),
            },
            MeasureSpec::RadialShells(shells) => MeasureDoc::RadialShells {
                shells: shells.into_iter().map(|s| [s.radius, s.weight]).collect(),
            },
        }
    }
}

impl MeasureSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| FockError::Schema(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("measure documents always serialize")
    }

    /// Short name matching the `type` tag of the JSON form.
    pub fn kind(&self) -> &'static str {
        match self {
            MeasureSpec::ScaledLebesgue { .. } => "scaled_lebesgue",
            MeasureSpec::GaussianDensity { .. } => "gaussian_density",
            MeasureSpec::RadialPowerGaussian { .. } => "radial_power_gaussian",
            MeasureSpec::BallIndicator { .. } => "ball_indicator",
            MeasureSpec::AtomSet(_) => "atom_set",
            MeasureSpec::RadialShells(_) => "radial_shells",
        }
    }

    fn check_amplitudes(&self) -> Result<()> {
        match self {
            MeasureSpec::ScaledLebesgue { c } => positive("c", *c),
            MeasureSpec::GaussianDensity { c, beta, .. } => {
                positive("c", *c)?;
                positive("beta", *beta)
            }
            MeasureSpec::RadialPowerGaussian { c, s, .. } => {
                positive("c", *c)?;
                positive("s", *s)
            }
            MeasureSpec::BallIndicator { c, radius, .. } => {
                positive("c", *c)?;
                positive("radius", *radius)
            }
            MeasureSpec::AtomSet(atoms) => {
                if atoms.is_empty() {
                    return Err(FockError::InvalidParameter("atom set is empty".into()));
                }
                atoms.iter().try_for_each(|a| positive("atom weight", a.weight))
            }
            MeasureSpec::RadialShells(shells) => {
                if shells.is_empty() {
                    return Err(FockError::InvalidParameter("shell list is empty".into()));
                }
                shells.iter().try_for_each(|s| {
                    positive("shell weight", s.weight)?;
                    if s.radius.is_finite() && s.radius >= 0.0 {
                        Ok(())
                    } else {
                        Err(FockError::InvalidParameter(format!(
                            "shell radius must be non-negative, got {}",
                            s.radius
                        )))
                    }
                })
            }
        }
    }

    /// Checks amplitudes and that every point lives in `ℂⁿ` for `params.n()`.
    pub fn validate(&self, params: &FockParams) -> Result<()> {
        self.check_amplitudes()?;
        match self {
            MeasureSpec::GaussianDensity {
                center: Some(c), ..
            }
            | MeasureSpec::BallIndicator {
                center: Some(c), ..
            } => params.check_point(c),
            MeasureSpec::AtomSet(atoms) => atoms.iter().try_for_each(|a| params.check_point(&a.point)),
            _ => Ok(()),
        }
    }

    /// Center of a Gaussian or ball density, the origin when absent.
    pub fn center(&self, n: usize) -> ComplexPoint {
        match self {
            MeasureSpec::GaussianDensity {
                center: Some(c), ..
            }
            | MeasureSpec::BallIndicator {
                center: Some(c), ..
            } => c.clone(),
            _ => ComplexPoint::origin(n),
        }
    }

    /// Members whose definition is radial by construction.
    pub fn is_radial(&self) -> bool {
        matches!(
            self,
            MeasureSpec::RadialPowerGaussian { .. } | MeasureSpec::RadialShells(_)
        )
    }

    /// Invariant under `zᵢ ↦ e^{iθᵢ} zᵢ` for every coordinate separately.
    pub fn is_torus_invariant(&self) -> bool {
        match self {
            MeasureSpec::ScaledLebesgue { .. }
            | MeasureSpec::RadialPowerGaussian { .. }
            | MeasureSpec::RadialShells(_) => true,
            MeasureSpec::GaussianDensity { center, .. }
            | MeasureSpec::BallIndicator { center, .. } => {
                center.as_ref().is_none_or(|c| c.norm_sqr() == 0.0)
            }
            MeasureSpec::AtomSet(atoms) => atoms.iter().all(|a| a.point.norm_sqr() == 0.0),
        }
    }

    /// Invariant under every unitary map of `ℂⁿ`; within the catalog this
    /// coincides with torus invariance.
    pub fn is_unitary_invariant(&self) -> bool {
        self.is_torus_invariant()
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, MeasureSpec::AtomSet(_) | MeasureSpec::RadialShells(_))
    }

    /// Density of `μ` with respect to `dA`; `None` for discrete members.
    pub fn density_at(&self, z: &ComplexPoint) -> Option<f64> {
        match self {
            MeasureSpec::ScaledLebesgue { c } => Some(*c),
            MeasureSpec::GaussianDensity { c, beta, center } => {
                let d2 = center.as_ref().map_or(z.norm_sqr(), |w| z.distance_sqr(w));
                Some(c * (-beta * d2).exp())
            }
            MeasureSpec::RadialPowerGaussian { c, k, s } => {
                let r2 = z.norm_sqr();
                Some(c * r2.powi(*k as i32) * (-s * r2).exp())
            }
            MeasureSpec::BallIndicator { c, center, radius } => {
                let d2 = center.as_ref().map_or(z.norm_sqr(), |w| z.distance_sqr(w));
                Some(if d2 <= radius * radius { *c } else { 0.0 })
            }
            MeasureSpec::AtomSet(_) | MeasureSpec::RadialShells(_) => None,
        }
    }

    /// `μ(ℂⁿ)` in closed form; `None` when it is infinite.
    pub fn total_mass(&self, params: &FockParams) -> Option<f64> {
        let n = params.n() as i32;
        let nf = params.n() as f64;
        match self {
            MeasureSpec::ScaledLebesgue { .. } => None,
            MeasureSpec::GaussianDensity { c, beta, .. } => Some(c * (PI / beta).powi(n)),
            MeasureSpec::RadialPowerGaussian { c, k, s } => {
                let kf = *k as f64;
                Some(
                    c * PI.powi(n)
                        * (ln_gamma(nf + kf) - ln_factorial(params.n() as u64 - 1)
                            - (nf + kf) * s.ln())
                        .exp(),
                )
            }
            MeasureSpec::BallIndicator { c, radius, .. } => Some(ball_volume(params.n(), *radius) * c),
            MeasureSpec::AtomSet(atoms) => Some(atoms.iter().map(|a| a.weight).sum()),
            MeasureSpec::RadialShells(shells) => Some(
                shells
                    .iter()
                    .map(|s| s.weight * (s.radius * s.radius / params.alpha()).exp())
                    .sum(),
            ),
        }
    }

    /// Radius outside of which the measure has no structure worth resolving:
    /// translation invariant members report 0, decaying densities the radius
    /// where they have fallen below `e^{-25}` of their peak.
    pub fn feature_radius(&self, params: &FockParams) -> f64 {
        const DECAY: f64 = 25.0;
        match self {
            MeasureSpec::ScaledLebesgue { .. } => 0.0,
            MeasureSpec::GaussianDensity { beta, .. } => {
                self.center(params.n()).norm() + (DECAY / beta).sqrt()
            }
            MeasureSpec::RadialPowerGaussian { k, s, .. } => {
                let kf = *k as f64;
                ((kf + DECAY + (kf * DECAY).sqrt() * 2.0) / s).sqrt()
            }
            MeasureSpec::BallIndicator { radius, .. } => self.center(params.n()).norm() + radius,
            MeasureSpec::AtomSet(atoms) => atoms.iter().map(|a| a.point.norm()).fold(0.0, f64::max),
            MeasureSpec::RadialShells(shells) => shells.iter().map(|s| s.radius).fold(0.0, f64::max),
        }
    }
}

impl MeasureSpec {
    /// Same measure with its amplitude multiplied by `factor`; discrete members
    /// scale every weight.
    pub fn scaled(&self, factor: f64) -> MeasureSpec {
        let mut out = self.clone();
        match &mut out {
            MeasureSpec::ScaledLebesgue { c }
            | MeasureSpec::GaussianDensity { c, .. }
            | MeasureSpec::RadialPowerGaussian { c, .. }
            | MeasureSpec::BallIndicator { c, .. } => *c *= factor,
            MeasureSpec::AtomSet(atoms) => atoms.iter_mut().for_each(|a| a.weight *= factor),
            MeasureSpec::RadialShells(shells) => shells.iter_mut().for_each(|s| s.weight *= factor),
        }
        out
    }

    /// `sup |g|` of a density read as a function; `None` for discrete members.
    pub fn sup_norm(&self) -> Option<f64> {
        match self {
            MeasureSpec::ScaledLebesgue { c }
            | MeasureSpec::GaussianDensity { c, .. }
            | MeasureSpec::BallIndicator { c, .. } => Some(*c),
            MeasureSpec::RadialPowerGaussian { c, k, s } => {
                let kf = *k as f64;
                Some(if *k == 0 { *c } else { c * (kf / s).powf(kf) * (-kf).exp() })
            }
            MeasureSpec::AtomSet(_) | MeasureSpec::RadialShells(_) => None,
        }
    }

    /// `∫ |g|^p dA` of a density read as a function; `None` when infinite or discrete.
    pub fn lp_norm_pow(&self, p: f64, params: &FockParams) -> Option<f64> {
        let n = params.n();
        let nf = n as f64;
        match self {
            MeasureSpec::ScaledLebesgue { .. } => None,
            MeasureSpec::GaussianDensity { c, beta, .. } => {
                Some(c.powf(p) * (PI / (p * beta)).powi(n as i32))
            }
            MeasureSpec::BallIndicator { c, radius, .. } => Some(c.powf(p) * ball_volume(n, *radius)),
            MeasureSpec::RadialPowerGaussian { c, k, s } => {
                let e = nf + *k as f64 * p;
                Some(
                    c.powf(p)
                        * PI.powi(n as i32)
                        * (ln_gamma(e) - ln_factorial(n as u64 - 1) - e * (p * s).ln()).exp(),
                )
            }
            MeasureSpec::AtomSet(_) | MeasureSpec::RadialShells(_) => None,
        }
    }
}

/// Volume of the ball of radius `r` in `ℂⁿ`: `πⁿ r^{2n} / n!`.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    PI.powi(n as i32) * r.powi(2 * n as i32) / (ln_factorial(n as u64)).exp()
}

/// Surface area of the unit sphere of `ℂⁿ = ℝ^{2n}`: `2πⁿ/(n−1)!`.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powi(n as i32) / (ln_factorial(n as u64 - 1)).exp()
}

/// Options controlling the density quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationOptions {
    pub tol: f64,
    /// The integrand is assumed to grow at most like `|z|^{2·degree}`.
    pub degree: usize,
    /// Extra cutoff radius for integrands concentrated away from the density center.
    pub reach: f64,
}

impl IntegrationOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            degree: DEFAULT_DEGREE_HINT,
            reach: 0.0,
        }
    }

    pub fn degree(mut self, degree: usize) -> Self {
        self.degree = degree;
        self
    }

    pub fn reach(mut self, reach: f64) -> Self {
        self.reach = reach;
        self
    }
}

fn compare_scalar(a: &(Complex64, f64), b: &(Complex64, f64)) -> Comparison {
    Comparison {
        error: (a.0 - b.0).norm(),
        scale: b.0.norm().max(b.1),
        previous: a.0,
        last: b.0,
    }
}

fn check_finite(v: Complex64, z: &ComplexPoint) -> Result<()> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(())
    } else {
        Err(FockError::InputDomain(z.coords().to_vec()))
    }
}

/// Mean of `g` over the sphere `|z| = radius`, refined until stable.
pub fn sphere_mean<G>(g: &G, n: usize, radius: f64, tol: f64) -> Result<Complex64>
where
    G: Fn(&ComplexPoint) -> Complex64 + Sync,
{
    if radius == 0.0 {
        let z = ComplexPoint::origin(n);
        let v = g(&z);
        check_finite(v, &z)?;
        return Ok(v);
    }
    let schedule = RefinementSchedule {
        base_radial: 8,
        base_angular: 16,
        max_level: if n == 1 { 6 } else { 3 },
        cutoff_growth: 0.0,
    };
    quadrature::refine(
        &schedule,
        tol,
        |level| sphere_nodes(n, radius, level.radial, level.angular).sum(g),
        compare_scalar,
    )
    .map(|v| v.0)
}

/// Nodes for `μ` restricted to what the quadrature sees, with the density
/// (and the Gaussian factor when `weighted`) folded into the integrand by the caller.
fn density_nodes(
    spec: &MeasureSpec,
    params: &FockParams,
    level: &Level,
    opts: &IntegrationOptions,
    weighted: bool,
) -> NodeSet {
    let n = params.n();
    let inv_alpha = if weighted { 1.0 / params.alpha() } else { 0.0 };
    let disk = |center: Complex64, decay: f64, degree: usize| DiskRule {
        center,
        t_max: envelope_cutoff(decay, degree, opts.reach) * level.cutoff_factor,
        radial: level.radial,
        angular: level.angular,
    };
    match spec {
        MeasureSpec::ScaledLebesgue { .. } => {
            let decay = 1.0 / params.alpha();
            tensor_nodes(&vec![disk(Complex64::new(0.0, 0.0), decay, opts.degree); n])
        }
        MeasureSpec::GaussianDensity { beta, .. } => {
            let kappa = beta + inv_alpha;
            let w0 = spec.center(n);
            let rules: Vec<DiskRule> = w0
                .coords()
                .iter()
                .map(|c| disk(c * (beta / kappa), kappa, opts.degree))
                .collect();
            tensor_nodes(&rules)
        }
        MeasureSpec::RadialPowerGaussian { k, s, .. } => {
            let decay = s + inv_alpha;
            tensor_nodes(&vec![
                disk(Complex64::new(0.0, 0.0), decay, opts.degree + *k as usize);
                n
            ])
        }
        MeasureSpec::BallIndicator { radius, .. } => {
            ball_nodes(&spec.center(n), *radius, level.radial, level.angular)
        }
        MeasureSpec::AtomSet(_) | MeasureSpec::RadialShells(_) => NodeSet::default(),
    }
}

fn integrate_impl<G>(
    g: &G,
    spec: &MeasureSpec,
    params: &FockParams,
    opts: &IntegrationOptions,
    weighted: bool,
) -> Result<Complex64>
where
    G: Fn(&ComplexPoint) -> Complex64 + Sync,
{
    spec.validate(params)?;
    let alpha = params.alpha();
    match spec {
        MeasureSpec::AtomSet(atoms) => {
            let mut total = Complex64::new(0.0, 0.0);
            for a in atoms {
                let v = g(&a.point);
                check_finite(v, &a.point)?;
                let w = if weighted {
                    a.weight * (-a.point.norm_sqr() / alpha).exp()
                } else {
                    a.weight
                };
                total += v * w;
            }
            Ok(total)
        }
        MeasureSpec::RadialShells(shells) => {
            let mut total = Complex64::new(0.0, 0.0);
            for s in shells {
                let mean = sphere_mean(g, params.n(), s.radius, opts.tol)?;
                let w = if weighted {
                    s.weight
                } else {
                    s.weight * (s.radius * s.radius / alpha).exp()
                };
                total += mean * w;
            }
            Ok(total)
        }
        _ => {
            let schedule = match spec {
                MeasureSpec::BallIndicator { .. } => RefinementSchedule {
                    base_radial: if params.n() == 1 { 24 } else { 12 },
                    base_angular: quadrature::RefinementSchedule::for_space(params, opts.degree)
                        .base_angular,
                    max_level: if params.n() == 1 { 4 } else { 2 },
                    cutoff_growth: 0.0,
                },
                _ => RefinementSchedule::for_space(params, opts.degree),
            };
            quadrature::refine(
                &schedule,
                opts.tol,
                |level| {
                    let nodes = density_nodes(spec, params, &level, opts, weighted);
                    nodes.sum(|z| {
                        let rho = spec.density_at(z).unwrap_or(0.0);
                        let gauss = if weighted { (-z.norm_sqr() / alpha).exp() } else { 1.0 };
                        let d = rho * gauss;
                        if d == 0.0 {
                            // avoid 0·∞ from integrands evaluated far out
                            Complex64::new(0.0, 0.0)
                        } else {
                            g(z) * d
                        }
                    })
                },
                compare_scalar,
            )
            .map(|v| v.0)
        }
    }
}

/// `∫ g(w) e^{-|w|²/α} dμ(w)`.
pub fn integrate_weighted<G>(g: G, spec: &MeasureSpec, params: &FockParams, tol: f64) -> Result<Complex64>
where
    G: Fn(&ComplexPoint) -> Complex64 + Sync,
{
    integrate_impl(&g, spec, params, &IntegrationOptions::new(tol), true)
}

pub fn integrate_weighted_with<G>(
    g: G,
    spec: &MeasureSpec,
    params: &FockParams,
    opts: &IntegrationOptions,
) -> Result<Complex64>
where
    G: Fn(&ComplexPoint) -> Complex64 + Sync,
{
    integrate_impl(&g, spec, params, opts, true)
}

/// `∫ g dμ` without the Gaussian factor. Divergence is reported as [`FockError::Divergent`].
pub fn integrate<G>(g: G, spec: &MeasureSpec, params: &FockParams, opts: &IntegrationOptions) -> Result<Complex64>
where
    G: Fn(&ComplexPoint) -> Complex64 + Sync,
{
    integrate_impl(&g, spec, params, opts, false)
}

/// `∫ e^{-|w|²/α} dμ(w)`, closed form where available.
pub fn total_gaussian_mass(spec: &MeasureSpec, params: &FockParams) -> Result<f64> {
    spec.validate(params)?;
    let n = params.n() as i32;
    let nf = params.n() as f64;
    let alpha = params.alpha();
    match spec {
        MeasureSpec::ScaledLebesgue { c } => Ok(c * (alpha * PI).powi(n)),
        MeasureSpec::GaussianDensity { c, beta, .. } => {
            let kappa = beta + 1.0 / alpha;
            let w0 = spec.center(params.n()).norm_sqr();
            Ok(c * (PI / kappa).powi(n) * (-(beta / alpha) * w0 / kappa).exp())
        }
        MeasureSpec::RadialPowerGaussian { c, k, s } => {
            let kappa = s + 1.0 / alpha;
            let kf = *k as f64;
            Ok(c * PI.powi(n)
                * (ln_gamma(nf + kf) - ln_factorial(params.n() as u64 - 1) - (nf + kf) * kappa.ln())
                    .exp())
        }
        MeasureSpec::BallIndicator { c, radius, .. } if spec.center(params.n()).norm_sqr() == 0.0 => {
            Ok(c * (alpha * PI).powi(n) * gamma_lr(nf, radius * radius / alpha))
        }
        MeasureSpec::AtomSet(atoms) => Ok(atoms
            .iter()
            .map(|a| a.weight * (-a.point.norm_sqr() / alpha).exp())
            .sum()),
        MeasureSpec::RadialShells(shells) => Ok(shells.iter().map(|s| s.weight).sum()),
        MeasureSpec::BallIndicator { .. } => {
            match integrate_weighted(|_| Complex64::new(1.0, 0.0), spec, params, DEFAULT_INTEGRAL_TOL) {
                Ok(v) => Ok(v.re),
                Err(FockError::Divergent { previous, last }) => Err(FockError::Inadmissible(format!(
                    "Gaussian-weighted mass diverges ({previous} -> {last})"
                ))),
                Err(e) => Err(e),
            }
        }
    }
}

/// Fraction of the unit sphere of `ℝ^{2n}` with first coordinate `≥ c0`.
pub fn cap_fraction(n: usize, c0: f64) -> f64 {
    if c0 >= 1.0 {
        return 0.0;
    }
    if c0 <= -1.0 {
        return 1.0;
    }
    if n == 1 {
        return c0.acos() / PI;
    }
    let half = 0.5 * beta_reg(n as f64 - 0.5, 0.5, 1.0 - c0 * c0);
    if c0 >= 0.0 {
        half
    } else {
        1.0 - half
    }
}

/// `∫_{lo}^{hi} f(s) ds` with the substitution `s = lo + (hi−lo)(1 − cos πx)/2`,
/// which absorbs square-root behaviour at both ends. Refined until stable.
fn endpoint_smoothed_integral<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    let schedule = RefinementSchedule {
        base_radial: 32,
        base_angular: 1,
        max_level: 5,
        cutoff_growth: 0.0,
    };
    let half = 0.5 * (hi - lo);
    quadrature::refine(
        &schedule,
        tol,
        |level| {
            let mut sum = 0.0;
            let mut abs = 0.0;
            for (x, w) in gauss_legendre_unit(level.radial) {
                let s = lo + half * (1.0 - (PI * x).cos());
                let ds = half * PI * (PI * x).sin();
                let v = f(s) * ds * w;
                sum += v;
                abs += v.abs();
            }
            Ok((Complex64::new(sum, 0.0), abs))
        },
        compare_scalar,
    )
    .map(|v| v.0.re)
}

/// Mass inside `B(a, r)` of a measure radial about `center` with profile
/// `profile(s)` (density at distance `s`), supported in `s ≤ s_max`.
/// `inner(t)` must give the exact mass of the centered ball of radius `t`.
fn radial_ball_mass<P, I>(
    n: usize,
    profile: P,
    inner: I,
    d: f64,
    r: f64,
    s_max: f64,
    tol: f64,
) -> Result<f64>
where
    P: Fn(f64) -> f64,
    I: Fn(f64) -> f64,
{
    if d == 0.0 {
        return Ok(inner(r.min(s_max)));
    }
    let full = if r > d { inner((r - d).min(s_max)) } else { 0.0 };
    let lo = (d - r).abs();
    let hi = (d + r).min(s_max);
    let area = sphere_area(n);
    let partial = endpoint_smoothed_integral(
        |s| {
            if s <= 0.0 {
                return 0.0;
            }
            let c0 = (s * s + d * d - r * r) / (2.0 * s * d);
            profile(s) * area * s.powi(2 * n as i32 - 1) * cap_fraction(n, c0)
        },
        lo,
        hi,
        tol,
    )?;
    Ok(full + partial)
}

/// `μ(B(a, r))` for the closed ball.
pub fn ball_mass(spec: &MeasureSpec, a: &ComplexPoint, r: f64, params: &FockParams) -> Result<f64> {
    ball_mass_with_tol(spec, a, r, params, DEFAULT_BALL_TOL)
}

pub fn ball_mass_with_tol(
    spec: &MeasureSpec,
    a: &ComplexPoint,
    r: f64,
    params: &FockParams,
    tol: f64,
) -> Result<f64> {
    spec.validate(params)?;
    params.check_point(a)?;
    positive("ball radius", r)?;
    let n = params.n();
    let nf = n as f64;
    match spec {
        MeasureSpec::ScaledLebesgue { c } => Ok(c * ball_volume(n, r)),
        MeasureSpec::GaussianDensity { c, beta, .. } => {
            let d = a.distance_sqr(&spec.center(n)).sqrt();
            let scale = c * (PI / beta).powi(n as i32);
            radial_ball_mass(
                n,
                |s| c * (-beta * s * s).exp(),
                |t| scale * gamma_lr(nf, beta * t * t),
                d,
                r,
                f64::INFINITY,
                tol,
            )
        }
        MeasureSpec::RadialPowerGaussian { c, k, s } => {
            let kf = *k as f64;
            let total = spec.total_mass(params).expect("finite");
            radial_ball_mass(
                n,
                |t| c * t.powi(2 * *k as i32) * (-s * t * t).exp(),
                |t| total * gamma_lr(nf + kf, s * t * t),
                a.norm(),
                r,
                f64::INFINITY,
                tol,
            )
        }
        MeasureSpec::BallIndicator { c, radius, .. } => {
            let d = a.distance_sqr(&spec.center(n)).sqrt();
            if d + r <= *radius {
                return Ok(c * ball_volume(n, r));
            }
            if d + radius <= r {
                return Ok(c * ball_volume(n, *radius));
            }
            if d >= r + radius {
                return Ok(0.0);
            }
            radial_ball_mass(n, |_| *c, |t| c * ball_volume(n, t), d, r, *radius, tol)
        }
        MeasureSpec::AtomSet(atoms) => Ok(atoms
            .iter()
            .filter(|at| at.point.distance_sqr(a) <= r * r)
            .map(|at| at.weight)
            .sum()),
        MeasureSpec::RadialShells(shells) => {
            let d = a.norm();
            Ok(shells
                .iter()
                .map(|sh| {
                    let mass = sh.weight * (sh.radius * sh.radius / params.alpha()).exp();
                    let frac = if sh.radius == 0.0 || d == 0.0 {
                        if (sh.radius - d).abs() <= r {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        let c0 = (sh.radius * sh.radius + d * d - r * r) / (2.0 * sh.radius * d);
                        cap_fraction(n, c0)
                    };
                    mass * frac
                })
                .sum())
        }
    }
}

/// Outcome of the admissibility integral at one probe point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeValue {
    pub point: Vec<f64>,
    /// `∫ |K_ph(z, w)|² e^{-|w|²/α} dμ(w)`, absent when it failed to converge.
    pub value: Option<f64>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub pass: bool,
    pub probes: Vec<ProbeValue>,
}

/// Evaluates `∫ |K_ph(z, w)|² e^{-|w|²/α} dμ(w)` at each probe `z`.
pub fn admissibility_check(
    spec: &MeasureSpec,
    params: &FockParams,
    probes: &[ComplexPoint],
    tol: f64,
) -> AdmissibilityReport {
    let mut probe_values = Vec::with_capacity(probes.len());
    for z in probes {
        let g = |w: &ComplexPoint| {
            let k = k_ph(z, w, params).map(|v| v.value.re).unwrap_or(f64::NAN);
            Complex64::new(k * k, 0.0)
        };
        let opts = IntegrationOptions::new(tol).reach(2.0 * z.norm());
        let outcome = integrate_weighted_with(g, spec, params, &opts);
        probe_values.push(match outcome {
            Ok(v) if v.re.is_finite() => ProbeValue {
                point: z.to_interleaved(),
                value: Some(v.re),
                message: None,
            },
            Ok(v) => ProbeValue {
                point: z.to_interleaved(),
                value: None,
                message: Some(format!("non-finite value {v}")),
            },
            Err(e) => ProbeValue {
                point: z.to_interleaved(),
                value: None,
                message: Some(e.to_string()),
            },
        });
    }
    AdmissibilityReport {
        pass: probe_values.iter().all(|p| p.value.is_some()),
        probes: probe_values,
    }
}
