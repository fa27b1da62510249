//! Truncated Toeplitz matrices `M_{jk} = ∫ b_k conj(b_j) e^{-|w|²/α} dμ(w)`.
//!
//! Measure symbols carry no `(απ)^{-n}`; function symbols fold it into the
//! measure so that the constant symbol 1 gives the identity.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::{binomial, ln_factorial};
use statrs::function::gamma::ln_gamma;

use crate::basis::{
    basis_values_into, compositions, enumerate_basis, BasisIndex, BasisTruncation, ComplexPoint,
    FockParams,
};
use crate::error::{FockError, Result};
use crate::measures::MeasureSpec;
use crate::quadrature::{
    ball_nodes, envelope_cutoff, gaussian_space_nodes, sphere_nodes, DiskRule, Level,
    NodeSet, RefinementSchedule,
};

/// Relative Hermitian defect above which assembly is abandoned.
pub const MAX_HERMITIAN_DEFECT: f64 = 1e-6;

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyOptions {
    pub tol: f64,
    /// For measures invariant under coordinate rotations, entries whose
    /// angular frequencies differ are set to exactly zero.
    pub angular_selection: bool,
}

impl AssemblyOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            angular_selection: true,
        }
    }

    pub fn full_quadrature(tol: f64) -> Self {
        Self {
            tol,
            angular_selection: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyMeta {
    pub tolerance: f64,
    pub method: String,
    /// Refinement level at which successive estimates agreed (0 for exact sums).
    pub level: usize,
    /// Quadrature nodes used by the accepted level.
    pub nodes: usize,
    /// Largest relative change between the last two levels.
    pub estimated_error: f64,
    pub angular_selection: bool,
}

#[derive(Debug, Clone)]
pub struct ToeplitzMatrix {
    pub params: FockParams,
    pub trunc: BasisTruncation,
    pub entries: CMatrix,
    pub meta: AssemblyMeta,
    /// `max |M − M*|` before symmetrization.
    pub hermitian_defect: f64,
    pub spec: Option<MeasureSpec>,
}

impl ToeplitzMatrix {
    /// Wraps a matrix, symmetrizing it and recording the defect.
    pub fn from_entries(
        params: FockParams,
        trunc: BasisTruncation,
        entries: CMatrix,
        meta: AssemblyMeta,
        spec: Option<MeasureSpec>,
    ) -> Result<Self> {
        if entries.nrows() != trunc.len() || entries.ncols() != trunc.len() {
            return Err(FockError::DimensionMismatch {
                expected: trunc.len(),
                got: entries.nrows(),
            });
        }
        let adjoint = entries.adjoint();
        let defect = (&entries - &adjoint)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        let scale = max_abs(&entries);
        if defect > MAX_HERMITIAN_DEFECT * scale.max(f64::MIN_POSITIVE) {
            return Err(FockError::Contract(format!(
                "Hermitian defect {defect:e} exceeds {MAX_HERMITIAN_DEFECT:e} of max entry {scale:e}"
            )));
        }
        let entries = (&entries + &adjoint).map(|c| c * 0.5);
        Ok(Self {
            params,
            trunc,
            entries,
            meta,
            hermitian_defect: defect,
            spec,
        })
    }

    pub fn identity(params: &FockParams, degree: usize) -> Self {
        let trunc = enumerate_basis(params, degree);
        let size = trunc.len();
        Self {
            params: *params,
            trunc,
            entries: CMatrix::identity(size, size),
            meta: exact_meta("identity", 0.0, false),
            hermitian_defect: 0.0,
            spec: None,
        }
    }

    pub fn size(&self) -> usize {
        self.trunc.len()
    }

    pub fn degree(&self) -> usize {
        self.trunc.degree()
    }

    pub fn max_abs_entry(&self) -> f64 {
        max_abs(&self.entries)
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.size() {
            for k in 0..self.size() {
                if j != k {
                    worst = worst.max(self.entries[(j, k)].norm());
                }
            }
        }
        worst
    }

    /// Matrix product, used for powers of an operator.
    pub fn compose(&self, other: &ToeplitzMatrix) -> Result<ToeplitzMatrix> {
        if self.size() != other.size() {
            return Err(FockError::DimensionMismatch {
                expected: self.size(),
                got: other.size(),
            });
        }
        ToeplitzMatrix::from_entries(
            self.params,
            self.trunc.clone(),
            &self.entries * &other.entries,
            exact_meta("product", 0.0, false),
            None,
        )
    }

    pub fn export(&self) -> MatrixExport {
        let size = self.size();
        let mut rows = Vec::with_capacity(size);
        for j in 0..size {
            rows.push((0..size).map(|k| {
                let c = self.entries[(j, k)];
                [c.re, c.im]
            }).collect());
        }
        MatrixExport {
            alpha: self.params.alpha(),
            n: self.params.n(),
            degree: self.degree(),
            spec: self.spec.clone(),
            hermitian_defect: self.hermitian_defect,
            meta: self.meta.clone(),
            entries: rows,
        }
    }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn exact_meta(method: &str, tol: f64, angular_selection: bool) -> AssemblyMeta {
    AssemblyMeta {
        tolerance: tol,
        method: method.into(),
        level: 0,
        nodes: 0,
        estimated_error: 0.0,
        angular_selection,
    }
}

/// Text form of a matrix: row-major `[re, im]` pairs plus metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixExport {
    pub alpha: f64,
    pub n: usize,
    pub degree: usize,
    pub spec: Option<MeasureSpec>,
    pub hermitian_defect: f64,
    pub meta: AssemblyMeta,
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl MatrixExport {
    /// Rebuilds the matrix, checking its shape and Hermitian symmetry.
    pub fn import(&self) -> Result<ToeplitzMatrix> {
        let params = FockParams::new(self.alpha, self.n)?;
        let trunc = enumerate_basis(&params, self.degree);
        let size = trunc.len();
        if self.entries.len() != size || self.entries.iter().any(|r| r.len() != size) {
            return Err(FockError::Schema(format!(
                "expected a {size}×{size} matrix for n = {}, D = {}",
                self.n, self.degree
            )));
        }
        let entries = CMatrix::from_fn(size, size, |j, k| {
            let [re, im] = self.entries[j][k];
            Complex64::new(re, im)
        });
        let scale = max_abs(&entries);
        let defect = (&entries - entries.adjoint())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if defect > 1e-9 * scale.max(f64::MIN_POSITIVE) {
            return Err(FockError::Contract(format!(
                "imported matrix is not Hermitian (defect {defect:e})"
            )));
        }
        Ok(ToeplitzMatrix {
            params,
            trunc,
            entries,
            meta: self.meta.clone(),
            hermitian_defect: self.hermitian_defect,
            spec: self.spec.clone(),
        })
    }
}

/// Per-coordinate moment table `T(a, b) = ∫ e_a conj(e_b) ρ dA`, `a, b ∈ [0, 2D]`,
/// with `e_a(u) = u^a e^{-|u|²/(2α)} / sqrt(α^a a!)`.
#[derive(Debug, Clone)]
struct MomentTable {
    width: usize,
    values: Vec<Complex64>,
}

impl MomentTable {
    fn get(&self, a: usize, b: usize) -> Complex64 {
        self.values[a * self.width + b]
    }

    fn compute<F>(rule: &DiskRule, params: &FockParams, degree: usize, density: F, diagonal_only: bool) -> Self
    where
        F: Fn(Complex64) -> f64,
    {
        let width = 2 * degree + 1;
        let alpha = params.alpha();
        let mut values = vec![Complex64::new(0.0, 0.0); width * width];
        let mut e = vec![Complex64::new(0.0, 0.0); width];
        for (u, w) in rule.nodes() {
            let rho = density(u) * w;
            if rho == 0.0 {
                continue;
            }
            let mut cur = Complex64::new((-u.norm_sqr() / (2.0 * alpha)).exp(), 0.0);
            e[0] = cur;
            for (a, slot) in e.iter_mut().enumerate().skip(1) {
                cur = cur * u / (alpha * a as f64).sqrt();
                *slot = cur;
            }
            for a in 0..width {
                let ea = e[a] * rho;
                if diagonal_only {
                    values[a * width + a] += ea * e[a].conj();
                } else {
                    for b in 0..width {
                        values[a * width + b] += ea * e[b].conj();
                    }
                }
            }
        }
        Self { width, values }
    }
}

/// `M_{jk}` from one table per coordinate.
fn entry_from_tables(row: &BasisIndex, col: &BasisIndex, tables: &[&MomentTable]) -> Complex64 {
    let j = row.multi_index().entries();
    let k = col.multi_index().entries();
    let mut v = Complex64::new(1.0, 0.0);
    for (i, t) in tables.iter().enumerate() {
        let (ji, ki) = (j[i] as usize, k[i] as usize);
        v *= match (row.is_holo(), col.is_holo()) {
            (true, true) => t.get(ki, ji),
            (false, false) => t.get(ji, ki),
            (false, true) => t.get(ki + ji, 0) * binomial((ki + ji) as u64, ki as u64).sqrt(),
            (true, false) => t.get(0, ki + ji) * binomial((ki + ji) as u64, ki as u64).sqrt(),
        };
        if v == Complex64::new(0.0, 0.0) {
            break;
        }
    }
    v
}

/// Largest change between two matrices, relative to `sqrt(M_jj M_kk)`.
fn compare_matrices(prev: &CMatrix, last: &CMatrix) -> (f64, usize, usize) {
    let size = last.nrows();
    let diag_max = (0..size).map(|j| last[(j, j)].norm()).fold(0.0, f64::max);
    let floor = diag_max * 1e-300_f64.max(f64::EPSILON * 1e-3);
    let mut worst = (0.0, 0, 0);
    for j in 0..size {
        for k in 0..size {
            let scale = (last[(j, j)].norm() * last[(k, k)].norm()).sqrt().max(floor);
            let e = (prev[(j, k)] - last[(j, k)]).norm();
            let rel = if e == 0.0 { 0.0 } else { e / scale };
            if rel > worst.0 {
                worst = (rel, j, k);
            }
        }
    }
    worst
}

/// Refines a matrix-valued quadrature until successive levels agree.
fn refine_matrix<F>(schedule: &RefinementSchedule, tol: f64, mut eval: F) -> Result<(CMatrix, Level, usize, f64)>
where
    F: FnMut(&Level) -> Result<(CMatrix, usize)>,
{
    if !(tol.is_finite() && tol > 0.0) {
        return Err(FockError::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let mut level = schedule.level(0);
    let (mut prev, _) = eval(&level)?;
    let mut older = prev.clone();
    let mut worst = (0.0, 0, 0);
    for index in 1..=schedule.max_level {
        level = schedule.level(index);
        let (cur, nodes) = eval(&level)?;
        worst = compare_matrices(&prev, &cur);
        if worst.0 <= tol {
            return Ok((cur, level, nodes, worst.0));
        }
        older = std::mem::replace(&mut prev, cur);
    }
    let (_, row, col) = worst;
    Err(FockError::Entry {
        row,
        col,
        source: Box::new(FockError::NotConverged {
            previous: older[(row, col)],
            last: prev[(row, col)],
            tol,
        }),
    })
}

/// One product term `coeff · Π_i ρ_i(u_i)` of a separable density.
struct SeparableTerm {
    coeff: f64,
    /// `(center, decay, extra degree, density)` per coordinate.
    factors: Vec<(Complex64, f64, usize, Box<dyn Fn(Complex64) -> f64 + Sync>)>,
}

fn separable_terms(spec: &MeasureSpec, params: &FockParams) -> Option<Vec<SeparableTerm>> {
    let n = params.n();
    let inv_alpha = 1.0 / params.alpha();
    match spec {
        MeasureSpec::ScaledLebesgue { c } => Some(vec![SeparableTerm {
            coeff: *c,
            factors: (0..n)
                .map(|_| {
                    let f: Box<dyn Fn(Complex64) -> f64 + Sync> = Box::new(|_| 1.0);
                    (Complex64::new(0.0, 0.0), inv_alpha, 0, f)
                })
                .collect(),
        }]),
        MeasureSpec::GaussianDensity { c, beta, .. } => {
            let kappa = beta + inv_alpha;
            let beta = *beta;
            let w0 = spec.center(n);
            Some(vec![SeparableTerm {
                coeff: *c,
                factors: w0
                    .coords()
                    .iter()
                    .map(|&w| {
                        let f: Box<dyn Fn(Complex64) -> f64 + Sync> =
                            Box::new(move |u| (-beta * (u - w).norm_sqr()).exp());
                        (w * (beta / kappa), kappa, 0, f)
                    })
                    .collect(),
            }])
        }
        MeasureSpec::RadialPowerGaussian { c, k, s } => {
            let kappa = s + inv_alpha;
            let s = *s;
            let ln_k_fact = ln_factorial(*k as u64);
            Some(
                compositions(n, *k)
                    .into_iter()
                    .map(|m| {
                        let ln_multinomial = ln_k_fact - m.ln_factorial();
                        SeparableTerm {
                            coeff: c * ln_multinomial.exp(),
                            factors: m
                                .entries()
                                .iter()
                                .map(|&q| {
                                    let f: Box<dyn Fn(Complex64) -> f64 + Sync> = Box::new(move |u| {
                                        let t = u.norm_sqr();
                                        t.powi(q as i32) * (-s * t).exp()
                                    });
                                    (Complex64::new(0.0, 0.0), kappa, q as usize, f)
                                })
                                .collect(),
                        }
                    })
                    .collect(),
            )
        }
        _ => None,
    }
}

/// Assembles `T_μ` in the truncated basis.
pub fn assemble(
    spec: &MeasureSpec,
    trunc: &BasisTruncation,
    params: &FockParams,
    opts: &AssemblyOptions,
) -> Result<ToeplitzMatrix> {
    spec.validate(params)?;
    if trunc.dim() != params.n() {
        return Err(FockError::DimensionMismatch {
            expected: params.n(),
            got: trunc.dim(),
        });
    }
    let select = opts.angular_selection && spec.is_torus_invariant();
    let (entries, meta) = match spec {
        MeasureSpec::AtomSet(atoms) => (atom_matrix(atoms, trunc, params), exact_meta("atoms", opts.tol, false)),
        MeasureSpec::RadialShells(shells) => {
            let mut m = shell_matrix(shells, trunc, params);
            if select {
                apply_selection(&mut m, trunc);
            }
            (m, exact_meta("shells", opts.tol, select))
        }
        MeasureSpec::BallIndicator { .. } if params.n() > 1 => ball_matrix(spec, trunc, params, opts, select)?,
        MeasureSpec::BallIndicator { radius, .. } => {
            let center = spec.center(1).coords()[0];
            let r2 = radius * radius;
            let c = match spec {
                MeasureSpec::BallIndicator { c, .. } => *c,
                _ => unreachable!(),
            };
            let term = SeparableTerm {
                coeff: c,
                factors: vec![(center, 0.0, 0, Box::new(|_| 1.0))],
            };
            separable_matrix(&[term], trunc, params, opts, select, Some(r2))?
        }
        _ => {
            let terms = separable_terms(spec, params).expect("densities are separable");
            separable_matrix(&terms, trunc, params, opts, select, None)?
        }
    };
    ToeplitzMatrix::from_entries(*params, trunc.clone(), entries, meta, Some(spec.clone()))
}

/// Zeroes entries whose per-coordinate angular frequencies differ.
fn apply_selection(m: &mut CMatrix, trunc: &BasisTruncation) {
    for (j, row) in trunc.indices().iter().enumerate() {
        for (k, col) in trunc.indices().iter().enumerate() {
            if row != col && !(row.multi_index().is_zero() && col.multi_index().is_zero()) {
                m[(j, k)] = Complex64::new(0.0, 0.0);
            }
        }
    }
}

fn separable_matrix(
    terms: &[SeparableTerm],
    trunc: &BasisTruncation,
    params: &FockParams,
    opts: &AssemblyOptions,
    select: bool,
    disk_t_max: Option<f64>,
) -> Result<(CMatrix, AssemblyMeta)> {
    let degree = trunc.degree();
    let schedule = RefinementSchedule::for_disk(degree);
    let size = trunc.len();
    let (m, level, nodes, err) = refine_matrix(&schedule, opts.tol, |level| {
        let mut m = CMatrix::zeros(size, size);
        let mut nodes = 0;
        for term in terms {
            let tables: Vec<MomentTable> = term
                .factors
                .iter()
                .map(|(center, decay, extra, density)| {
                    let rule = DiskRule {
                        center: *center,
                        t_max: disk_t_max.unwrap_or_else(|| {
                            envelope_cutoff(*decay, 2 * degree + extra, center.norm()) * level.cutoff_factor
                        }),
                        radial: level.radial,
                        angular: level.angular,
                    };
                    nodes += rule.radial * rule.angular;
                    MomentTable::compute(&rule, params, degree, density, select)
                })
                .collect();
            let refs: Vec<&MomentTable> = tables.iter().collect();
            for (j, row) in trunc.indices().iter().enumerate() {
                for (k, col) in trunc.indices().iter().enumerate() {
                    if select && row != col {
                        continue;
                    }
                    m[(j, k)] += entry_from_tables(row, col, &refs) * term.coeff;
                }
            }
        }
        Ok((m, nodes))
    })?;
    Ok((
        m,
        AssemblyMeta {
            tolerance: opts.tol,
            method: "separable".into(),
            level: level.index,
            nodes,
            estimated_error: err,
            angular_selection: select,
        },
    ))
}

/// `Σ_i c_i x_i x_i*` with `x_i = conj(b(w_i)) e^{-|w_i|²/(2α)}`.
fn atom_matrix(atoms: &[crate::measures::Atom], trunc: &BasisTruncation, params: &FockParams) -> CMatrix {
    let size = trunc.len();
    let mut m = CMatrix::zeros(size, size);
    let mut powers = Vec::new();
    let mut u = vec![Complex64::new(0.0, 0.0); size];
    for a in atoms {
        basis_values_into(trunc, &a.point, params, true, &mut powers, &mut u);
        for j in 0..size {
            let cj = u[j].conj() * a.weight;
            for k in 0..size {
                m[(j, k)] += cj * u[k];
            }
        }
    }
    m
}

/// Exact sphere means of `b_k conj(b_j)` (polynomials of bounded degree).
fn shell_matrix(shells: &[crate::measures::Shell], trunc: &BasisTruncation, params: &FockParams) -> CMatrix {
    let size = trunc.len();
    let degree = trunc.degree();
    let angular = (2 * degree + 4).div_ceil(4) * 4;
    let mut m = CMatrix::zeros(size, size);
    for sh in shells {
        let nodes = sphere_nodes(params.n(), sh.radius, degree + 2, angular);
        let acc = node_accumulate(&nodes, trunc, params, false, |_| sh.weight)
            .expect("sphere nodes carry finite values");
        m += acc;
    }
    m
}

/// `Σ_nodes w ρ(z) b_k(z) conj(b_j(z))` (times `e^{-|z|²/α}` when `weighted`).
fn node_accumulate<D>(
    nodes: &NodeSet,
    trunc: &BasisTruncation,
    params: &FockParams,
    weighted: bool,
    density: D,
) -> Result<CMatrix>
where
    D: Fn(&ComplexPoint) -> f64 + Sync,
{
    let size = trunc.len();
    let flat = nodes.sum_vectors(size * size, |z, w, acc| {
        let rho = density(z) * w;
        if rho == 0.0 {
            return Ok(());
        }
        let mut powers = Vec::new();
        let mut u = vec![Complex64::new(0.0, 0.0); size];
        basis_values_into(trunc, z, params, weighted, &mut powers, &mut u);
        for j in 0..size {
            let cj = u[j].conj() * rho;
            for k in 0..size {
                acc[j * size + k] += cj * u[k];
            }
        }
        Ok(())
    })?;
    Ok(CMatrix::from_row_slice(size, size, &flat))
}

fn ball_matrix(
    spec: &MeasureSpec,
    trunc: &BasisTruncation,
    params: &FockParams,
    opts: &AssemblyOptions,
    select: bool,
) -> Result<(CMatrix, AssemblyMeta)> {
    let (c, radius) = match spec {
        MeasureSpec::BallIndicator { c, radius, .. } => (*c, *radius),
        _ => unreachable!(),
    };
    let center = spec.center(params.n());
    let schedule = RefinementSchedule {
        base_radial: 8,
        base_angular: (2 * trunc.degree() + 4).div_ceil(4) * 4,
        max_level: 2,
        cutoff_growth: 0.0,
    };
    let (mut m, level, nodes, err) = refine_matrix(&schedule, opts.tol, |level| {
        let nodes = ball_nodes(&center, radius, level.radial, level.angular);
        let m = node_accumulate(&nodes, trunc, params, true, |_| c)?;
        Ok((m, nodes.len()))
    })?;
    if select {
        apply_selection(&mut m, trunc);
    }
    Ok((
        m,
        AssemblyMeta {
            tolerance: opts.tol,
            method: "ball-nodes".into(),
            level: level.index,
            nodes,
            estimated_error: err,
            angular_selection: select,
        },
    ))
}

/// Diagonal matrix of a radial measure from its one-dimensional radial moments.
pub fn assemble_radial(
    spec: &MeasureSpec,
    trunc: &BasisTruncation,
    params: &FockParams,
) -> Result<ToeplitzMatrix> {
    spec.validate(params)?;
    let n = params.n();
    let nf = n as f64;
    let alpha = params.alpha();
    let ln_n1 = ln_factorial(n as u64 - 1);
    let diag = |deg: u32| -> f64 {
        let d = deg as f64;
        match spec {
            MeasureSpec::RadialPowerGaussian { c, k, s } => {
                let kappa = s + 1.0 / alpha;
                let kf = *k as f64;
                c * PI.powi(n as i32)
                    * (ln_gamma(d + kf + nf) - ln_gamma(nf + d) - d * alpha.ln() - (d + kf + nf) * kappa.ln())
                        .exp()
            }
            MeasureSpec::RadialShells(shells) => shells
                .iter()
                .map(|sh| {
                    sh.weight
                        * sh.radius.powi(2 * deg as i32)
                        * (ln_n1 - ln_factorial(n as u64 - 1 + deg as u64) - d * alpha.ln()).exp()
                })
                .sum(),
            _ => unreachable!(),
        }
    };
    if !spec.is_radial() {
        return Err(FockError::Contract(format!(
            "radial assembly needs a radial measure, got {}",
            spec.kind()
        )));
    }
    let size = trunc.len();
    let mut m = CMatrix::zeros(size, size);
    for (j, idx) in trunc.indices().iter().enumerate() {
        m[(j, j)] = Complex64::new(diag(idx.multi_index().degree()), 0.0);
    }
    ToeplitzMatrix::from_entries(*params, trunc.clone(), m, exact_meta("radial", 0.0, true), Some(spec.clone()))
}

/// Quadrature Gram matrix `⟨b_k, b_j⟩` over the full space, with no angular shortcuts.
pub fn gram_matrix(trunc: &BasisTruncation, params: &FockParams, tol: f64) -> Result<CMatrix> {
    let schedule = RefinementSchedule::for_space(params, trunc.degree());
    let norm = params.gaussian_normalizer();
    let (m, ..) = refine_matrix(&schedule, tol, |level| {
        let nodes = gaussian_space_nodes(params, trunc.degree(), level, None);
        let m = node_accumulate(&nodes, trunc, params, true, |_| norm)?;
        Ok((m, nodes.len()))
    })?;
    Ok(m)
}

/// A bounded function symbol: zero, or a catalog density read as a function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundedSymbol {
    Zero,
    Catalog(MeasureSpec),
}

/// `T_g` with `dμ = (απ)^{-n} g dA`.
pub fn from_bounded_symbol(
    g: &BoundedSymbol,
    trunc: &BasisTruncation,
    params: &FockParams,
    opts: &AssemblyOptions,
) -> Result<ToeplitzMatrix> {
    match g {
        BoundedSymbol::Zero => {
            let size = trunc.len();
            ToeplitzMatrix::from_entries(
                *params,
                trunc.clone(),
                CMatrix::zeros(size, size),
                exact_meta("zero", opts.tol, false),
                None,
            )
        }
        BoundedSymbol::Catalog(spec) => {
            if spec.is_discrete() {
                return Err(FockError::Contract(format!(
                    "{} is not a function symbol",
                    spec.kind()
                )));
            }
            assemble(&spec.scaled(params.gaussian_normalizer()), trunc, params, opts)
        }
    }
}

/// Index masks and blocks of the holomorphic/anti-holomorphic splitting.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub holo_len: usize,
    pub mm: CMatrix,
    pub mn: CMatrix,
    pub nm: CMatrix,
    pub nn: CMatrix,
}

impl BlockDecomposition {
    pub fn holo_mask(&self) -> Vec<bool> {
        let size = self.holo_len + self.nn.nrows();
        (0..size).map(|i| i < self.holo_len).collect()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let h = self.holo_len;
        let size = h + self.nn.nrows();
        let mut m = CMatrix::zeros(size, size);
        m.view_mut((0, 0), (h, h)).copy_from(&self.mm);
        m.view_mut((0, h), (h, size - h)).copy_from(&self.mn);
        m.view_mut((h, 0), (size - h, h)).copy_from(&self.nm);
        m.view_mut((h, h), (size - h, size - h)).copy_from(&self.nn);
        m
    }

    /// `max |T_MN − (T_NM)*|`.
    pub fn adjoint_defect(&self) -> f64 {
        (&self.mn - self.nm.adjoint())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

pub fn blocks(t: &ToeplitzMatrix) -> BlockDecomposition {
    let h = t.trunc.holo_len();
    let size = t.size();
    let e = &t.entries;
    BlockDecomposition {
        holo_len: h,
        mm: e.view((0, 0), (h, h)).into_owned(),
        mn: e.view((0, h), (h, size - h)).into_owned(),
        nm: e.view((h, 0), (size - h, h)).into_owned(),
        nn: e.view((h, h), (size - h, size - h)).into_owned(),
    }
}

/// `T c`.
pub fn apply(t: &ToeplitzMatrix, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    if coeffs.len() != t.size() {
        return Err(FockError::DimensionMismatch {
            expected: t.size(),
            got: coeffs.len(),
        });
    }
    let v = nalgebra::DVector::from_column_slice(coeffs);
    Ok((&t.entries * v).iter().copied().collect())
}

/// `⟨T c, c⟩`.
pub fn quadratic_form(t: &ToeplitzMatrix, coeffs: &[Complex64]) -> Result<Complex64> {
    let tc = apply(t, coeffs)?;
    Ok(tc.iter().zip(coeffs).map(|(a, b)| a * b.conj()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{Atom, Shell};

    fn p(n: usize) -> FockParams {
        FockParams::new(1.0, n).unwrap()
    }

    #[test]
    fn identity_from_normalized_lebesgue() {
        for n in [1, 2] {
            let params = p(n);
            let trunc = enumerate_basis(&params, 4);
            let spec = MeasureSpec::ScaledLebesgue {
                c: params.gaussian_normalizer(),
            };
            for opts in [AssemblyOptions::new(1e-12), AssemblyOptions::full_quadrature(1e-12)] {
                let t = assemble(&spec, &trunc, &params, &opts).unwrap();
                let err = (&t.entries - CMatrix::identity(t.size(), t.size()))
                    .iter()
                    .map(|c| c.norm())
                    .fold(0.0, f64::max);
                assert!(err < 1e-10, "n={n} {opts:?}: {err}");
            }
        }
    }

    #[test]
    fn atom_at_origin() {
        let params = p(1);
        let trunc = enumerate_basis(&params, 3);
        let spec = MeasureSpec::AtomSet(vec![Atom {
            point: ComplexPoint::scalar(0.0, 0.0),
            weight: 2.5,
        }]);
        let t = assemble(&spec, &trunc, &params, &AssemblyOptions::new(1e-10)).unwrap();
        assert_eq!(t.entries[(0, 0)].re, 2.5);
        assert_eq!(t.max_abs_entry(), 2.5);
        let out = apply(&t, &{
            let mut e = vec![Complex64::new(0.0, 0.0); t.size()];
            e[0] = Complex64::new(1.0, 0.0);
            e
        })
        .unwrap();
        assert_eq!(out[0].re, 2.5);
    }

    #[test]
    fn gaussian_diagonal() {
        let params = p(1);
        let trunc = enumerate_basis(&params, 6);
        let spec = MeasureSpec::GaussianDensity {
            c: 1.0,
            beta: 1.0,
            center: None,
        };
        let t = assemble(&spec, &trunc, &params, &AssemblyOptions::full_quadrature(1e-12)).unwrap();
        for (j, idx) in trunc.indices().iter().enumerate() {
            let m = idx.multi_index().degree() as i32;
            let exact = PI / 2f64.powi(m + 1);
            assert!((t.entries[(j, j)].re - exact).abs() < 1e-12, "{idx}");
        }
        assert!(t.max_off_diagonal() < 1e-13);
    }

    #[test]
    fn radial_paths_agree() {
        for n in [1, 2] {
            let params = p(n);
            let trunc = enumerate_basis(&params, 5);
            let specs = [
                MeasureSpec::RadialPowerGaussian { c: 1.5, k: 2, s: 0.7 },
                MeasureSpec::RadialShells(vec![
                    Shell { radius: 0.0, weight: 1.0 },
                    Shell { radius: 1.3, weight: 0.4 },
                ]),
            ];
            for spec in specs {
                let fast = assemble_radial(&spec, &trunc, &params).unwrap();
                let full = assemble(&spec, &trunc, &params, &AssemblyOptions::full_quadrature(1e-12)).unwrap();
                let diff = (&fast.entries - &full.entries)
                    .iter()
                    .map(|c| c.norm())
                    .fold(0.0, f64::max);
                assert!(diff < 1e-10 * fast.max_abs_entry(), "n={n} {spec:?}: {diff}");
                assert!(full.max_off_diagonal() < 1e-10);
            }
        }
    }

    #[test]
    fn off_center_gaussian_matches_nodes() {
        let params = p(1);
        let trunc = enumerate_basis(&params, 3);
        let spec = MeasureSpec::GaussianDensity {
            c: 0.8,
            beta: 1.3,
            center: Some(ComplexPoint::scalar(0.6, -0.4)),
        };
        let t = assemble(&spec, &trunc, &params, &AssemblyOptions::new(1e-12)).unwrap();
        let level = RefinementSchedule::for_space(&params, 8).level(2);
        let nodes = gaussian_space_nodes(&params, 8, &level, None);
        let brute = node_accumulate(&nodes, &trunc, &params, true, |z| spec.density_at(z).unwrap()).unwrap();
        let diff = (&t.entries - &brute).iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-10, "{diff}");
        let b = blocks(&t);
        assert!(b.mn.iter().any(|c| c.norm() > 1e-3));
        assert!(b.adjoint_defect() < 1e-15);
        assert_eq!(b.reconstruct(), t.entries);
    }

    #[test]
    fn bounded_symbol_ball() {
        let params = p(1);
        let trunc = enumerate_basis(&params, 2);
        let g = BoundedSymbol::Catalog(MeasureSpec::BallIndicator {
            c: 1.0,
            center: None,
            radius: 1.0,
        });
        let t = from_bounded_symbol(&g, &trunc, &params, &AssemblyOptions::new(1e-12)).unwrap();
        for (j, idx) in trunc.indices().iter().enumerate() {
            let m = idx.multi_index().degree() as f64;
            let exact = statrs::function::gamma::gamma_lr(m + 1.0, 1.0);
            assert!((t.entries[(j, j)].re - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn export_round_trip() {
        let params = p(1);
        let trunc = enumerate_basis(&params, 2);
        let spec = MeasureSpec::AtomSet(vec![Atom {
            point: ComplexPoint::scalar(1.0, 0.0),
            weight: 1.0,
        }]);
        let t = assemble(&spec, &trunc, &params, &AssemblyOptions::new(1e-10)).unwrap();
        let text = serde_json::to_string(&t.export()).unwrap();
        let back: MatrixExport = serde_json::from_str(&text).unwrap();
        let t2 = back.import().unwrap();
        assert_eq!(t2.entries, t.entries);
    }
}
