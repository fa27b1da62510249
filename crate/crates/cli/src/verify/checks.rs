use std::f64::consts::PI;

use phfock::berezin::{
    berezin_lp_norm, berezin_of_matrix, berezin_of_measure, power_comparison, trace_via_berezin_matrix,
    trace_via_berezin_measure,
};
use phfock::carleson::{
    carleson_scan, necessity_constant_check, upper_constant, LatticeWindow, ScanOptions, Verdict,
};
use phfock::kernels::{k_ph, k_ph_diagonal};
use phfock::measures::{Atom, Shell};
use phfock::spectral::{
    compactness_probe, lp_symbol_sufficiency_check, schatten_necessity_probe, spectral_summary,
    trace_class_check, TraceVerdict,
};
use phfock::toeplitz::{assemble, blocks, gram_matrix, AssemblyOptions, BoundedSymbol, ToeplitzMatrix};
use phfock::{enumerate_basis, ComplexPoint, MeasureSpec, Result};
use rand::Rng;

use super::{random_point, Ctx, VerifyOutcome};

fn gaussian(c: f64, beta: f64) -> MeasureSpec {
    MeasureSpec::GaussianDensity { c, beta, center: None }
}

fn ball(c: f64, center: Option<(f64, f64)>, radius: f64) -> MeasureSpec {
    MeasureSpec::BallIndicator {
        c,
        center: center.map(|(re, im)| ComplexPoint::scalar(re, im)),
        radius,
    }
}

fn atoms(list: &[(f64, f64, f64)]) -> MeasureSpec {
    MeasureSpec::AtomSet(
        list.iter()
            .map(|&(re, im, weight)| Atom {
                point: ComplexPoint::scalar(re, im),
                weight,
            })
            .collect(),
    )
}

fn label(spec: &MeasureSpec, i: usize) -> String {
    format!("{i}:{}", spec.kind())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn trace(t: &ToeplitzMatrix) -> f64 {
    t.entries.diagonal().iter().map(|c| c.re).sum()
}

pub fn orthonormality(ctx: &Ctx, o: &mut VerifyOutcome) -> Result<()> {
    let p = ctx.params(1)?;
    let trunc = enumerate_basis(&p, 6);
    let g = gram_matrix(&trunc, &p, ctx.tol)?;
    let (mut off, mut diag) = (0.0f64, 0.0f64);
    for j in 0..trunc.len() {
        for k in 0..trunc.len() {
            if j == k {
                diag = diag.max((g[(j, k)] - 1.0).norm());
            } else {
                off = off.max(g[(j, k)].norm());
            }
        }
    }
    o.value("size", trunc.len());
    o.at_most("max_off_diagonal", off, 1e-8);
    o.at_most("max_diagonal_defect", diag, 1e-8);
    Ok(())
}

pub fn identity_operator(ctx: &Ctx, o: &mut VerifyOutcome) -> Result<()> {
    let p = ctx.params(1)?;
    let spec = MeasureSpec::ScaledLebesgue {
        c: p.gaussian_normalizer(),
    };
    for d in [2usize, 6, 10] {
        let t = assemble(&spec, &enumerate_basis(&p, d), &p, &AssemblyOptions::new(ctx.tol))?;
        let size = t.size();
        let mut defect = 0.0f64;
        for j in 0..size {
            for k in 0..size {
                let want = if j == k { 1.0 } else { 0.0 };
                defect = defect.max((t.entries[(j, k)] - want).norm());
            }
        }
        let norm = spectral_summary(&t, &[])?.operator_norm;
        o.at_most(format!("D{d}.max_entry_defect"), defect, 1e-10);
        o.at_most(format!("D{d}.norm_defect"), (norm - 1.0).abs(), 1e-9);
    }
    Ok(())
}

pub fn kernel_trace_closed_form(ctx: &Ctx, o: &mut VerifyOutcome) -> Result<()> {
    let mut rng = ctx.rng();
    let mut worst = 0.0f64;
    for i in 0..50 {
        let n = if i < 25 { 1 } else { 2 };
        let p = ctx.params(n)?;
        let z = random_point(&mut rng, n, 2.0);
        let closed = 2.0 * (z.norm_sqr() / ctx.alpha).exp() - 1.0;
        let off = k_ph(&z, &z, &p)?.value;
        worst = worst
            .max(rel(k_ph_diagonal(&z, &p), closed))
            .max((off - closed).norm() / closed);
    }
    o.at_most("kernel_diagonal_max_relative_error", worst, 1e-12);

    let p = ctx.params(1)?;
    let c = 1.7;
    let atom = atoms(&[(0.0, 0.0, c)]);
    let mut last = None;
    for d in [4usize, 8] {
        let t = assemble(&atom, &enumerate_basis(&p, d), &p, &AssemblyOptions::new(ctx.tol))?;
        o.at_most(format!("atom_trace_D{d}_error"), (trace(&t) - c).abs(), 1e-12 * c);
        last = Some(t);
    }
    let via_measure = trace_via_berezin_measure(&atom, &p, ctx.tol)?;
    o.at_most("atom_trace_via_berezin_error", (via_measure - c).abs(), 1e-6);
    if let Some(t) = last {
        let via_matrix = trace_via_berezin_matrix(&t, ctx.tol)?;
        o.at_most("atom_trace_via_matrix_berezin_error", (via_matrix - c).abs(), 1e-6);
    }
    Ok(())
}

pub fn trace_formula_consistency(ctx: &Ctx, o: &mut VerifyOutcome) -> Result<()> {
    let p = ctx.params(1)?;
    let a = ctx.alpha;
    let spec = gaussian(1.0, 1.0);
    let report = trace_class_check(&spec, &p, &[4, 8, 12], ctx.tol)?;
    // ∫ (2 − e^{-|u|²/α}) e^{-|u|²} dA
    let closed = 2.0 * PI - PI * a / (1.0 + a);
    // diagonal entries of degree d equal πα/(1+α)^{d+1}
    let series = |d: usize| {
        let q = 1.0 / (1.0 + a);
        PI * a * q * (1.0 + 2.0 * (1..=d).map(|k| q.powi(k as i32)).sum::<f64>())
    };
    o.value("traces", &report.traces);
    o.value("closed_form_limit", closed);
    o.require(report.monotone, "truncated traces are not increasing");
    let target = report.target.unwrap_or(f64::NAN);
    o.at_most("integral_vs_closed_form", rel(target, closed), 1e-6);
    let mut series_err = 0.0f64;
    for tr in &report.traces {
        series_err = series_err.max(rel(tr.trace, series(tr.degree)));
    }
    o.at_most("trace_vs_diagonal_series", series_err, 1e-8);
    let last = report.traces.last().map_or(f64::NAN, |t| t.trace);
    o.at_most("D12_relative_gap", rel(last, target), 1e-3);
    Ok(())
}

fn finite_mass_specs() -> Vec<MeasureSpec> {
    vec![
        gaussian(1.0, 1.0),
        MeasureSpec::GaussianDensity {
            c: 2.0,
            beta: 0.5,
            center: Some(ComplexPoint::scalar(1.0, -0.5)),
        },
        MeasureSpec::RadialPowerGaussian { c: 1.0, k: 1, s: 1.0 },
        ball(1.0, Some((0.5, 0.0)), 1.0),
        atoms(&[(0.0, 0.0, 1.0), (1.0, 1.0, 0.5), (-2.0, 0.5, 0.25)]),
        MeasureSpec::RadialShells(vec![
            Shell {
                radius: 1.0,
                weight: 1.0,
            },
            Shell {
                radius: 2.0,
                weight: 0.5,
            },
        ]),
    ]
}

pub fn trace_sandwich(ctx: &Ctx, o: &mut VerifyOutcome) -> Result<()> {
    let p = ctx.params(1)?;
    for (i, spec) in finite_mass_specs().iter().enumerate() {
        let key = label(spec, i);
        let report = trace_class_check(spec, &p, &[4], ctx.tol)?;
        o.value(format!("{key}.total_mass"), report.total_mass);
        o.value(format!("{key}.trace_target"), report.target);
        o.require(report.total_mass.is_some(), format!("{key}: no closed-form mass"));
        o.require(report.verdict == TraceVerdict::TraceClass, format!("{key}: not trace class"));
        o.require(report.sandwich == Some(true), format!("{key}: sandwich violated"));
    }
    Ok(())
}

pub fn radial_diagonality(ctx: &Ctx, o: &mut VerifyOutcome) -> Result<()> {
    let p = ctx.params(1)?;
    let trunc = enumerate_basis(&p, 8);
    let specs = [
        MeasureSpec::RadialPowerGaussian { c: 1.0, k: 2, s: 0.5 },
        MeasureSpec::RadialShells(vec![
            Shell {
                radius: 0.7,
                weight: 1.0,
            },
            Shell {
                radius: 1.5,
                weight: 0.4,
            },
        ]),
    ];
    for (i, spec) in specs.iter().enumerate() {
        let key = label(spec, i);
        let full = assemble(spec, &trunc, &p, &AssemblyOptions::full_quadrature(ctx.tol))?;
        o.at_most(format!("{key}.full_max_off_diagonal"), full.max_off_diagonal(), 1e-10);
        let fast = assemble(spec, &trunc, &p, &AssemblyOptions::new(ctx.tol))?;
        let b = blocks(&fast);
        let mixed = b.mn.iter().chain(b.nm.iter()).map(|c| c.norm()).fold(0.0, f64::max);
        o.value(format!("{key}.fast_mixed_block_max"), mixed);
        o.require(mixed == 0.0, format!("{key}: mixed blocks are not exactly zero"));
        let diag = (0..fast.size())
            .map(|j| (fast.entries[(j, j)] - full.entries[(j, j)]).norm())
            .fold(0.0, f64::max);
        o.at_most(format!("{key}.diagonal_agreement"), diag, 1e-10);
    }
    Ok(())
}

pub fn carleson_necessity(ctx: &Ctx, o: &mut VerifyOutcome) -> Result<()> {
    let p = ctx.params(1)?;
    let mut rng = ctx.rng();
    let specs = [
        MeasureSpec::ScaledLebesgue { c: 1.0 },
        MeasureSpec::GaussianDensity {
            c: 1.0,
            beta: 1.0,
            center: Some(ComplexPoint::scalar(0.5, 0.5)),
        },
        ball(1.0, None, 1.5),
        MeasureSpec::RadialPowerGaussian { c: 1.0, k: 1, s: 1.0 },
    ];
    for (i, spec) in specs.iter().enumerate() {
        let key = label(spec, i);
        let mut worst = 0.0f64;
        let mut failed = 0;
        for _ in 0..20 {
            let a = random_point(&mut rng, 1, 2.5);
            let r = rng.random_range(0.1..=2.0);
            let c = necessity_constant_check(spec, &a, r, &p, ctx.tol)?;
            if c.bound > 0.0 {
                worst = worst.max(c.ball_mass / c.bound);
            }
            if !c.pass {
                failed += 1;
            }
        }
        o.value(format!("{key}.worst_mass_over_bound"), worst);
        o.value(format!("{key}.violations"), failed);
        o.require(failed == 0, format!("{key}: {failed} of 20 samples violate the bound"));
    }
    Ok(())
}

pub fn carleson_sufficiency(ctx: &Ctx, o: &mut VerifyOutcome) -> Result<()> {
    let p = ctx.params(1)?;
    let window = LatticeWindow::new(1.0, 8.0)?;
    let k = upper_constant(&p, window.spacing).unwrap_or(f64::NAN);
    o.value("upper_constant", k);
    let opts = ScanOptions {
        tol: ctx.tol,
        ..ScanOptions::default()
    };
    let lebesgue_c = 1.0;
    let specs = [
        MeasureSpec::ScaledLebesgue { c: lebesgue_c },
        gaussian(1.0, 1.0),
        ball(1.0, None, 1.0),
        atoms(&[(0.0, 0.0, 1.0), (1.5, -0.5, 2.0)]),
    ];
    for (i, spec) in specs.iter().enumerate() {
        let key = label(spec, i);
        let scan = carleson_scan(spec, &p, &window, &[], &opts)?;
        o.value(format!("{key}.bounded"), scan.bounded);
        o.value(format!("{key}.sup_mass"), scan.sup_mass);
        if scan.bounded != Verdict::Yes {
            o.fail(format!("{key}: bounded verdict {:?}", scan.bounded));
            continue;
        }
        let bound = k * scan.sup_mass;
        let mut norms = Vec::new();
        for d in [4usize, 6, 8, 10] {
            let t = assemble(spec, &enumerate_basis(&p, d), &p, &AssemblyOptions::new(ctx.tol))?;
            norms.push(spectral_summary(&t, &[])?.operator_norm);
        }
        o.value(format!("{key}.norms"), &norms);
        o.value(format!("{key}.bound"), bound);
        let monotone = norms.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9));
        o.require(monotone, format!("{key}: truncated norms decrease"));
        o.require(norms.iter().all(|nrm| *nrm <= bound), format!("{key}: norm exceeds the window bound"));
        if let MeasureSpec::ScaledLebesgue { c } = spec {
            let scale = c / p.gaussian_normalizer();
            let err = norms.iter().map(|nrm| rel(*nrm, scale)).fold(0.0, f64::max);
            o.at_most(format!("{key}.norm_vs_density_scale"), err, 1e-8);
        }
    }
    Ok(())
}

pub fn vanishing_compactness(ctx: &Ctx, o: &mut VerifyOutcome) -> Result<()> {
    let p = ctx.params(1)?;
    let window = LatticeWindow::new(1.0, 8.0)?;
    let compact = [
        gaussian(1.0, 1.0),
        ball(1.0, None, 1.0),
        atoms(&[(0.0, 0.0, 1.0), (1.0, 0.5, 0.7), (-1.2, 1.0, 0.4)]),
    ];
    for (i, spec) in compact.iter().enumerate() {
        let key = label(spec, i);
        let r = compactness_probe(spec, &p, &[6, 10], &window, 0, ctx.tol)?;
        let last = r.tails.last().map_or(f64::NAN, |t| t.tail_fraction);
        o.value(format!("{key}.vanishing"), r.vanishing);
        o.value(format!("{key}.tail_fraction"), last);
        o.require(r.vanishing == Verdict::Yes, format!("{key}: vanishing verdict {:?}", r.vanishing));
        o.require(r.tail_decays, format!("{key}: singular values do not decay"));
        o.require(r.agree == Some(true), format!("{key}: verdict and spectrum disagree"));
    }
    let c = 1.0;
    let lebesgue = MeasureSpec::ScaledLebesgue { c };
    let r = compactness_probe(&lebesgue, &p, &[6, 10], &window, 0, ctx.tol)?;
    let key = label(&lebesgue, compact.len());
    o.value(format!("{key}.vanishing"), r.vanishing);
    o.require(r.vanishing == Verdict::No, format!("{key}: vanishing verdict {:?}", r.vanishing));
    o.require(!r.tail_decays, format!("{key}: spectrum decays"));
    o.require(r.agree == Some(true), format!("{key}: verdict and spectrum disagree"));
    let scale = c / p.gaussian_normalizer();
    let flat = r
        .tails
        .iter()
        .flat_map(|t| t.singular_values.iter())
        .map(|s| rel(*s, scale))
        .fold(0.0, f64::max);
    o.at_most(format!("{key}.spectrum_flatness"), flat, 1e-8);
    Ok(())
}

pub fn berezin_bounds(ctx: &Ctx, o: &mut VerifyOutcome) -> Result<()> {
    let p = ctx.params(1)?;
    let mut rng = ctx.rng();
    let spec = MeasureSpec::GaussianDensity {
        c: 1.0,
        beta: 0.7,
        center: Some(ComplexPoint::scalar(0.5, -0.3)),
    };
    let trunc = enumerate_basis(&p, 8);
    let t = assemble(&spec, &trunc, &p, &AssemblyOptions::new(ctx.tol))?;
    let summary = spectral_summary(&t, &[])?;
    let id = ToeplitzMatrix::identity(&p, 8);
    let (mut sup, mut id_err) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let z = random_point(&mut rng, 1, 3.0);
        sup = sup.max(berezin_of_matrix(&t, &z)?.abs());
        id_err = id_err.max((berezin_of_matrix(&id, &z)? - 1.0).abs());
    }
    o.value("operator_norm", summary.operator_norm);
    o.at_most("sup_berezin_minus_norm", sup - summary.operator_norm, 1e-8);
    o.at_most("identity_matrix_berezin_error", id_err, 1e-12);

    let leb = MeasureSpec::ScaledLebesgue {
        c: p.gaussian_normalizer(),
    };
    let mut leb_err = 0.0f64;
    for _ in 0..5 {
        let z = random_point(&mut rng, 1, 1.5);
        leb_err = leb_err.max((berezin_of_measure(&leb, &z, &p, ctx.tol)? - 1.0).abs());
    }
    o.at_most("identity_measure_berezin_error", leb_err, 1e-6);

    let norms = berezin_lp_norm(&t, 1.0, ctx.tol)?;
    o.value("weighted_l1_norm", norms.weighted);
    o.value("trace", summary.trace);
    o.at_most("weighted_l1_vs_trace", rel(norms.weighted, summary.trace), 1e-6);
    Ok(())
}

pub fn berezin_power_inequality(ctx: &Ctx, o: &mut VerifyOutcome) -> Result<()> {
    let p = ctx.params(1)?;
    let mut rng = ctx.rng();
    let trunc = enumerate_basis(&p, 6);
    let (mut violations, mut worst) = (0usize, f64::NEG_INFINITY);
    let mut reverse_holds = true;
    for m in 0..5 {
        let list: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.random_range(-1.5..1.5),
                    rng.random_range(-1.5..1.5),
                    rng.random_range(0.2..2.0),
                )
            })
            .collect();
        let spec = atoms(&list);
        let t = assemble(&spec, &trunc, &p, &AssemblyOptions::new(ctx.tol))?;
        let points: Vec<ComplexPoint> = (0..20).map(|_| random_point(&mut rng, 1, 2.0)).collect();
        let cmp = power_comparison(&t, 2, &points)?;
        let bad = cmp
            .samples
            .iter()
            .filter(|s| s.of_power > s.power_of + 1e-10)
            .count();
        o.value(format!("matrix{m}.violations"), bad);
        o.value(format!("matrix{m}.worst_excess"), cmp.worst_upper_excess);
        violations += bad;
        worst = worst.max(cmp.worst_upper_excess);
        reverse_holds &= cmp.lower_holds;
    }
    o.value("samples", 100);
    o.value("reverse_inequality_holds", reverse_holds);
    o.at_most("worst_excess", worst, 1e-10);
    o.require(violations == 0, format!("{violations} of 100 samples violate the inequality"));
    if violations > 0 && reverse_holds {
        o.note("(T²)~(z) = ‖T k_z‖² ≥ ⟨T k_z, k_z⟩² = (T̃(z))² by Cauchy-Schwarz, so the reverse inequality holds at every sample");
    }
    Ok(())
}

pub fn symbol_schatten_bound(ctx: &Ctx, o: &mut VerifyOutcome) -> Result<()> {
    let p = ctx.params(1)?;
    let symbols = [
        BoundedSymbol::Catalog(ball(1.0, None, 1.0)),
        BoundedSymbol::Catalog(gaussian(1.0, 1.0)),
    ];
    for (i, symbol) in symbols.iter().enumerate() {
        let name = match symbol {
            BoundedSymbol::Catalog(s) => label(s, i),
            BoundedSymbol::Zero => format!("{i}:zero"),
        };
        for q in [1.0, 2.0] {
            let r = lp_symbol_sufficiency_check(symbol, q, &p, &[4, 8], ctx.tol)?;
            let key = format!("{name}.p{q}");
            o.value(format!("{key}.bound"), r.bound);
            o.value(format!("{key}.sums"), &r.sums);
            o.require(r.pass, format!("{key}: eigenvalue sum exceeds the bound"));
        }
    }
    Ok(())
}

pub fn schatten_diagonal(ctx: &Ctx, o: &mut VerifyOutcome) -> Result<()> {
    let p = ctx.params(1)?;
    let window = LatticeWindow::new(1.0, 4.0)?;
    let specs = [
        gaussian(1.0, 1.0),
        ball(1.0, Some((0.3, 0.0)), 1.0),
        MeasureSpec::RadialPowerGaussian { c: 1.0, k: 1, s: 1.0 },
        atoms(&[(0.0, 0.0, 1.0), (1.0, -1.0, 0.5)]),
    ];
    for (i, spec) in specs.iter().enumerate() {
        let name = label(spec, i);
        for q in [1.0, 2.0, 3.0] {
            let r = schatten_necessity_probe(spec, &p, q, &window, &[4, 6, 8], ctx.tol)?;
            let key = format!("{name}.p{q}");
            let worst = r
                .comparisons
                .iter()
                .map(|c| c.full_diagonal - c.schatten)
                .fold(f64::NEG_INFINITY, f64::max);
            o.value(format!("{key}.worst_diagonal_minus_norm"), worst);
            o.require(
                r.comparisons.iter().all(|c| c.holds),
                format!("{key}: diagonal sum exceeds the Schatten norm"),
            );
        }
    }
    Ok(())
}
