//! Ball-mass diagnostics over windows of the lattice `rℤ^{2n}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::basis::{ComplexPoint, FockParams};
use crate::error::{FockError, Result};
use crate::measures::{ball_mass_with_tol, integrate_weighted_with, IntegrationOptions, MeasureSpec};
use num_complex::Complex64;

/// Default cap on lattice points per window.
pub const DEFAULT_POINT_CAP: usize = 250_000;
/// Default ratio of outermost-annulus sup to global sup below which masses count as vanishing.
pub const DEFAULT_VANISH_THRESHOLD: f64 = 1e-2;
/// Default bound on the Theil–Sen slope of `ln sup` per unit radius.
pub const DEFAULT_SLOPE_EPS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeWindow {
    /// Lattice spacing, also the ball radius.
    pub spacing: f64,
    /// Every real coordinate lies in `[−L, L]`.
    pub half_width: f64,
}

impl LatticeWindow {
    pub fn new(spacing: f64, half_width: f64) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(FockError::InvalidParameter(format!(
                "lattice spacing must be positive, got {spacing}"
            )));
        }
        if !(half_width.is_finite() && half_width >= spacing) {
            return Err(FockError::InvalidParameter(format!(
                "half-width {half_width} must be at least the spacing {spacing}"
            )));
        }
        Ok(Self {
            spacing,
            half_width,
        })
    }

    /// Lattice steps per half axis, `⌊L/r⌋`.
    pub fn steps(&self) -> i64 {
        (self.half_width / self.spacing + 1e-9).floor() as i64
    }

    /// `(2⌊L/r⌋ + 1)^{2n}`, saturating.
    pub fn point_count(&self, n: usize) -> usize {
        let side = (2 * self.steps() + 1) as usize;
        (0..2 * n).fold(1usize, |acc, _| acc.saturating_mul(side))
    }
}

/// Lattice points of the window, sorted by `|z|` then lexicographically.
pub fn lattice_points(window: &LatticeWindow, n: usize, cap: usize) -> Result<Vec<ComplexPoint>> {
    let count = window.point_count(n);
    if count > cap {
        return Err(FockError::ResourceLimit(format!(
            "window has {count} lattice points (cap {cap}); use a larger spacing or a smaller half-width"
        )));
    }
    let k = window.steps();
    let dims = 2 * n;
    let side = 2 * k + 1;
    let mut ints: Vec<Vec<i64>> = Vec::with_capacity(count);
    for flat in 0..count {
        let mut rest = flat as i64;
        let mut v = vec![0i64; dims];
        for slot in v.iter_mut().rev() {
            *slot = rest % side - k;
            rest /= side;
        }
        ints.push(v);
    }
    ints.sort_by(|a, b| {
        let na: i64 = a.iter().map(|x| x * x).sum();
        let nb: i64 = b.iter().map(|x| x * x).sum();
        na.cmp(&nb).then_with(|| a.cmp(b))
    });
    Ok(ints
        .into_iter()
        .map(|v| {
            ComplexPoint::new(
                v.chunks(2)
                    .map(|p| Complex64::new(p[0] as f64 * window.spacing, p[1] as f64 * window.spacing))
                    .collect(),
            )
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub vanish_threshold: f64,
    pub slope_eps: f64,
    pub point_cap: usize,
    pub tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            vanish_threshold: DEFAULT_VANISH_THRESHOLD,
            slope_eps: DEFAULT_SLOPE_EPS,
            point_cap: DEFAULT_POINT_CAP,
            tol: crate::measures::DEFAULT_BALL_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub inner: f64,
    pub outer: f64,
    pub count: usize,
    pub sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSum {
    pub p: f64,
    /// `Σ μ(B(z_k, r))^p`
    pub sum: f64,
    /// `(Σ μ(B(z_k, r))^p)^{1/p}`
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarlesonReport {
    pub window: LatticeWindow,
    pub points: Vec<Vec<f64>>,
    pub masses: Vec<f64>,
    pub sup_mass: f64,
    pub annulus_width: f64,
    pub annuli: Vec<Annulus>,
    pub lp_sums: Vec<LpSum>,
    /// Theil–Sen slope of `ln sup` against annulus mid-radius.
    pub trend_slope: f64,
    pub feature_radius: f64,
    pub bounded: Verdict,
    pub vanishing: Verdict,
}

/// Median of pairwise slopes.
pub fn theil_sen_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let mut slopes = Vec::new();
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let dx = xs[j] - xs[i];
            if dx != 0.0 {
                slopes.push((ys[j] - ys[i]) / dx);
            }
        }
    }
    if slopes.is_empty() {
        return 0.0;
    }
    slopes.sort_by(f64::total_cmp);
    let m = slopes.len();
    if m % 2 == 1 {
        slopes[m / 2]
    } else {
        0.5 * (slopes[m / 2 - 1] + slopes[m / 2])
    }
}

pub fn carleson_scan(
    spec: &MeasureSpec,
    params: &FockParams,
    window: &LatticeWindow,
    p_list: &[f64],
    opts: &ScanOptions,
) -> Result<CarlesonReport> {
    spec.validate(params)?;
    if let Some(p) = p_list.iter().find(|p| !(**p >= 1.0)) {
        return Err(FockError::InvalidParameter(format!("p must be at least 1, got {p}")));
    }
    let r = window.spacing;
    let points = lattice_points(window, params.n(), opts.point_cap)?;
    let masses: Vec<f64> = points
        .par_iter()
        .map(|z| ball_mass_with_tol(spec, z, r, params, opts.tol))
        .collect::<Result<_>>()?;
    let sup_mass = masses.iter().copied().fold(0.0, f64::max);

    let width = 2.0 * r;
    let l_eff = window.half_width;
    let count = (l_eff / width).ceil().max(1.0) as usize;
    let mut annuli: Vec<Annulus> = (0..count)
        .map(|j| Annulus {
            inner: j as f64 * width,
            outer: ((j + 1) as f64 * width).min(l_eff),
            count: 0,
            sup: 0.0,
        })
        .collect();
    for (z, m) in points.iter().zip(&masses) {
        let rad = z.norm();
        if rad > l_eff * (1.0 + 1e-12) {
            continue;
        }
        let j = ((rad / width).floor() as usize).min(count - 1);
        annuli[j].count += 1;
        annuli[j].sup = annuli[j].sup.max(*m);
    }
    annuli.retain(|a| a.count > 0);

    let lp_sums = p_list
        .iter()
        .map(|&p| {
            let sum: f64 = masses.iter().map(|m| m.powf(p)).sum();
            LpSum {
                p,
                sum,
                norm: sum.powf(1.0 / p),
            }
        })
        .collect();

    let floor = f64::MIN_POSITIVE.ln();
    let xs: Vec<f64> = annuli.iter().map(|a| 0.5 * (a.inner + a.outer)).collect();
    let ys: Vec<f64> = annuli
        .iter()
        .map(|a| if a.sup > 0.0 { a.sup.ln() } else { floor })
        .collect();
    let slope = theil_sen_slope(&xs, &ys);
    let feature_radius = spec.feature_radius(params);
    let too_small = feature_radius > window.half_width - 2.0 * r;

    let (bounded, vanishing) = if too_small {
        (Verdict::Inconclusive, Verdict::Inconclusive)
    } else {
        let outer_three = annuli.iter().rev().take(3).map(|a| a.sup).fold(0.0, f64::max);
        let bounded = if outer_three <= sup_mass && slope <= opts.slope_eps {
            Verdict::Yes
        } else {
            Verdict::No
        };
        let last = annuli.last().map_or(0.0, |a| a.sup);
        let vanishing = if last <= opts.vanish_threshold * sup_mass {
            Verdict::Yes
        } else {
            Verdict::No
        };
        (bounded, vanishing)
    };

    Ok(CarlesonReport {
        window: *window,
        points: points.iter().map(ComplexPoint::to_interleaved).collect(),
        masses,
        sup_mass,
        annulus_width: width,
        annuli,
        lp_sums,
        trend_slope: slope,
        feature_radius,
        bounded,
        vanishing,
    })
}

/// Overlap bound `M = 5^{2n}` for the balls `B(z_k, 2r)`.
pub fn overlap_constant(n: usize) -> usize {
    5usize.pow(2 * n as u32)
}

/// Number of lattice balls `B(z_k, 2r)` containing `z`, over the whole lattice.
pub fn overlap_count(z: &ComplexPoint, spacing: f64) -> usize {
    let reals = z.to_interleaved();
    let reach = 2.0 * spacing;
    // candidate integer offsets per real axis
    let ranges: Vec<(i64, i64)> = reals
        .iter()
        .map(|x| (((x - reach) / spacing).ceil() as i64, ((x + reach) / spacing).floor() as i64))
        .collect();
    let mut count = 0;
    let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        let d2: f64 = idx
            .iter()
            .zip(&reals)
            .map(|(k, x)| (*k as f64 * spacing - x).powi(2))
            .sum();
        if d2 <= reach * reach {
            count += 1;
        }
        let mut axis = 0;
        loop {
            if axis == idx.len() {
                return count;
            }
            if idx[axis] < ranges[axis].1 {
                idx[axis] += 1;
                break;
            }
            idx[axis] = ranges[axis].0;
            axis += 1;
        }
    }
}

/// `K` with `‖T_μ‖ ≤ K · sup_k μ(B(z_k, r))`, valid while the balls `B(z_k, r)`
/// cover `ℂⁿ` (true for `n ≤ 2`).
pub fn upper_constant(params: &FockParams, spacing: f64) -> Option<f64> {
    let n = params.n();
    if n > 2 {
        return None;
    }
    let alpha = params.alpha();
    Some(
        2.0 * overlap_constant(n) as f64
            * alpha.powi(n as i32)
            * ln_factorial(n as u64).exp()
            * (spacing * spacing / alpha).exp()
            / spacing.powi(2 * n as i32),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessityCheck {
    pub center: Vec<f64>,
    pub radius: f64,
    /// `μ(B(a, r))`
    pub ball_mass: f64,
    /// `∫ |f_a|² e^{-|z|²/α} dμ` with `f_a(z) = e^{⟨z,a⟩/α − |a|²/(2α)}`
    pub kernel_integral: f64,
    /// `e^{r²/α} · kernel_integral`
    pub bound: f64,
    pub pass: bool,
}

/// Relative slack allowed in [`necessity_constant_check`].
pub const NECESSITY_SLACK: f64 = 1e-8;

pub fn necessity_constant_check(
    spec: &MeasureSpec,
    a: &ComplexPoint,
    r: f64,
    params: &FockParams,
    tol: f64,
) -> Result<NecessityCheck> {
    let alpha = params.alpha();
    let mass = ball_mass_with_tol(spec, a, r, params, tol)?;
    let a_sq = a.norm_sqr();
    let f_sq = |z: &ComplexPoint| {
        let ip = z.inner(a);
        Complex64::new((2.0 * ip.re / alpha - a_sq / alpha).exp(), 0.0)
    };
    let opts = IntegrationOptions::new(tol).degree(0).reach(a.norm());
    let integral = integrate_weighted_with(f_sq, spec, params, &opts)?.re;
    let bound = (r * r / alpha).exp() * integral;
    Ok(NecessityCheck {
        center: a.to_interleaved(),
        radius: r,
        ball_mass: mass,
        kernel_integral: integral,
        bound,
        pass: mass <= bound * (1.0 + NECESSITY_SLACK),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Atom;
    use std::f64::consts::PI;

    #[test]
    fn lattice_examples() {
        let w = LatticeWindow::new(1.0, 1.0).unwrap();
        let pts = lattice_points(&w, 1, 1000).unwrap();
        assert_eq!(pts.len(), 9);
        assert_eq!(pts[0].norm_sqr(), 0.0);
        let w2 = LatticeWindow::new(2.0, 3.0).unwrap();
        let pts2 = lattice_points(&w2, 1, 1000).unwrap();
        assert_eq!(pts2.len(), 9);
        assert!(pts2.iter().all(|z| z.to_interleaved().iter().all(|x| [-2.0, 0.0, 2.0].contains(x))));
        assert_eq!(lattice_points(&w, 2, 1000).unwrap().len(), 81);
        assert!(matches!(
            lattice_points(&LatticeWindow::new(0.1, 10.0).unwrap(), 2, 1000),
            Err(FockError::ResourceLimit(_))
        ));
        let norms: Vec<f64> = pts.iter().map(|z| z.norm()).collect();
        assert!(norms.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn lebesgue_and_atom_scans() {
        let p = FockParams::new(1.0, 1).unwrap();
        let w = LatticeWindow::new(1.0, 8.0).unwrap();
        let leb = carleson_scan(&MeasureSpec::ScaledLebesgue { c: 1.0 }, &p, &w, &[1.0, 2.0], &ScanOptions::default()).unwrap();
        assert!(leb.masses.iter().all(|m| (m - PI).abs() < 1e-12));
        assert_eq!(leb.bounded, Verdict::Yes);
        assert_eq!(leb.vanishing, Verdict::No);

        let atom = MeasureSpec::AtomSet(vec![Atom {
            point: ComplexPoint::scalar(0.0, 0.0),
            weight: 1.0,
        }]);
        let rep = carleson_scan(&atom, &p, &w, &[1.0], &ScanOptions::default()).unwrap();
        assert_eq!(rep.sup_mass, 1.0);
        assert_eq!(rep.masses.iter().filter(|m| **m > 0.0).count(), 5);
        assert_eq!(rep.vanishing, Verdict::Yes);
    }

    #[test]
    fn overlap_is_bounded() {
        for n in [1usize, 2] {
            let z = ComplexPoint::new(vec![Complex64::new(0.3, -0.1); n]);
            let c = overlap_count(&z, 1.0);
            assert!(c <= overlap_constant(n));
            assert!(c > 0);
        }
    }

    #[test]
    fn necessity_examples() {
        let p = FockParams::new(1.0, 1).unwrap();
        let leb = MeasureSpec::ScaledLebesgue { c: 1.0 };
        let o = ComplexPoint::scalar(0.0, 0.0);
        let chk = necessity_constant_check(&leb, &o, 1.0, &p, 1e-10).unwrap();
        assert!((chk.kernel_integral - PI).abs() < 1e-8);
        assert!((chk.bound - std::f64::consts::E * PI).abs() < 1e-7);
        assert!(chk.pass);
        let g = MeasureSpec::GaussianDensity {
            c: 1.0,
            beta: 1.0,
            center: None,
        };
        let chk = necessity_constant_check(&g, &ComplexPoint::scalar(2.0, 0.0), 1.0, &p, 1e-10).unwrap();
        assert!(chk.pass);
        // I(a) = ∫ e^{-|z-a|² - |z|²} dA = (π/2) e^{-|a|²/2}
        assert!((chk.kernel_integral - PI / 2.0 * (-2.0f64).exp()).abs() < 1e-9);
    }
}
