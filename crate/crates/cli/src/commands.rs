use phfock::berezin::{berezin_of_measure, measure_decay_profile, trace_via_berezin_measure, DecayProfile};
use phfock::carleson::{carleson_scan, overlap_constant, upper_constant, CarlesonReport, ScanOptions};
use phfock::kernels::{k_alpha, k_ph, k_ph_normalized, normalized_pairing};
use phfock::measures::{admissibility_check, AdmissibilityReport};
use phfock::spectral::{spectral_summary, SpectralSummary};
use phfock::toeplitz::{assemble, blocks, AssemblyMeta, AssemblyOptions, CMatrix};
use phfock::{enumerate_basis, Complex64, ComplexPoint, FockError, FockParams, MeasureSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{exit, CliError};
use crate::report::{out_dir, write_csv, write_json, Report};

pub const GENERATOR: &str = "ChaCha8Rng";

fn pair(c: Complex64) -> [f64; 2] {
    [c.re, c.im]
}

fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

#[derive(Debug, Serialize)]
pub struct KernelRecord {
    pub index: usize,
    pub z: Vec<f64>,
    pub w: Vec<f64>,
    pub k_alpha: [f64; 2],
    pub k_ph: [f64; 2],
    pub k_ph_normalized: [f64; 2],
    pub normalized_pairing: f64,
}

#[derive(Debug, Serialize)]
pub struct KernelResult {
    pub generator: &'static str,
    pub seed: u64,
    pub records: Vec<KernelRecord>,
}

pub fn kernel_records(config: &RunConfig) -> Result<KernelResult, CliError> {
    let params = config.params()?;
    let mut points: Vec<(ComplexPoint, ComplexPoint)> = config
        .pairs
        .iter()
        .map(|[z, w]| Ok((config.point(z).map_err(CliError::schema)?, config.point(w).map_err(CliError::schema)?)))
        .collect::<Result<_, CliError>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let draw = |rng: &mut ChaCha8Rng| {
        ComplexPoint::new(
            (0..config.n)
                .map(|_| Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)))
                .collect(),
        )
    };
    for _ in 0..config.random_pairs {
        let z = draw(&mut rng);
        let w = draw(&mut rng);
        points.push((z, w));
    }
    if points.is_empty() {
        return Err(CliError::schema("field `pairs`: kernel needs at least one pair or random_pairs > 0".into()));
    }
    let records = points
        .iter()
        .enumerate()
        .map(|(index, (z, w))| {
            Ok(KernelRecord {
                index,
                z: z.to_interleaved(),
                w: w.to_interleaved(),
                k_alpha: pair(k_alpha(z, w, &params)?),
                k_ph: pair(k_ph(z, w, &params)?.value),
                k_ph_normalized: pair(k_ph_normalized(z, w, &params)?),
                normalized_pairing: normalized_pairing(z, w, &params)?,
            })
        })
        .collect::<Result<_, FockError>>()?;
    Ok(KernelResult {
        generator: GENERATOR,
        seed: config.seed,
        records,
    })
}

pub fn cmd_kernel(config: &RunConfig) -> Result<(), CliError> {
    let result = kernel_records(config)?;
    let dir = out_dir(config)?;
    let report = Report::new(
        "kernel",
        config,
        &[
            ("k_alpha", "K_α(z,w) = exp(⟨z,w⟩/α)"),
            ("k_ph", "K_ph(z,w) = exp(⟨z,w⟩/α) + exp(⟨w,z⟩/α) − 1"),
            ("k_ph_normalized", "k_w(z) = K_ph(z,w) / sqrt(K_ph(w,w))"),
            ("normalized_pairing", "|⟨k_z, k_w⟩| = |K_ph(z,w)| / sqrt(K_ph(z,z) K_ph(w,w))"),
        ],
        result,
    );
    write_json(&dir.join("kernel.json"), &report)
}

#[derive(Debug, Serialize)]
pub struct CarlesonResult {
    pub spec: MeasureSpec,
    pub overlap_constant: usize,
    pub upper_constant: Option<f64>,
    pub norm_bound: Option<f64>,
    pub scan: CarlesonReport,
}

pub fn carleson_result(config: &RunConfig) -> Result<CarlesonResult, CliError> {
    let params = config.params()?;
    let spec = config.measure()?;
    let window = config.window()?;
    let opts = ScanOptions {
        point_cap: config.point_cap,
        tol: config.tol,
        ..ScanOptions::default()
    };
    let scan = carleson_scan(&spec, &params, &window, &config.p_list, &opts)?;
    let k = upper_constant(&params, window.spacing);
    Ok(CarlesonResult {
        spec,
        overlap_constant: overlap_constant(params.n()),
        upper_constant: k,
        norm_bound: k.map(|k| k * scan.sup_mass),
        scan,
    })
}

pub fn cmd_carleson(config: &RunConfig) -> Result<(), CliError> {
    let result = carleson_result(config)?;
    let dir = out_dir(config)?;
    let n = config.n;
    let mut header: Vec<String> = (0..n).flat_map(|i| [format!("re{i}"), format!("im{i}")]).collect();
    header.push("mass".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(
        &dir.join("masses.csv"),
        &header,
        result.scan.points.iter().zip(&result.scan.masses).map(|(z, m)| {
            z.iter().copied().chain(std::iter::once(*m)).map(fmt_f64).collect()
        }),
    )?;
    let report = Report::new(
        "carleson",
        config,
        &[
            ("masses", "μ(B(z_k, r)) over lattice points z_k ∈ rℤ²ⁿ with |Re, Im| ≤ L"),
            ("bounded", "μ is Carleson iff sup_k μ(B(z_k, r)) < ∞"),
            ("vanishing", "μ is vanishing Carleson iff μ(B(z, r)) → 0 as |z| → ∞"),
            ("lp_sums", "(Σ_k μ(B(z_k, r))^p)^{1/p}"),
            ("norm_bound", "‖T_μ‖ ≤ 2·5^{2n} αⁿ n! e^{r²/α} r^{-2n} sup_k μ(B(z_k, r)) for n ≤ 2"),
        ],
        &result,
    );
    write_json(&dir.join("carleson.json"), &report)
}

fn admissible(spec: &MeasureSpec, params: &FockParams, tol: f64) -> Result<AdmissibilityReport, CliError> {
    let mut probes = vec![ComplexPoint::origin(params.n())];
    let mut e1 = vec![Complex64::new(0.0, 0.0); params.n()];
    e1[0] = Complex64::new(1.0, 0.0);
    probes.push(ComplexPoint::new(e1));
    let report = admissibility_check(spec, params, &probes, tol.max(1e-9));
    if report.pass {
        Ok(report)
    } else {
        let why: Vec<String> = report.probes.iter().filter_map(|p| p.message.clone()).collect();
        Err(CliError::new(
            exit::INADMISSIBLE,
            format!("measure {} is not admissible: {}", spec.kind(), why.join("; ")),
        ))
    }
}

fn block_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

#[derive(Debug, Serialize)]
pub struct BlockNorms {
    pub mm: f64,
    pub mn: f64,
    pub nm: f64,
    pub nn: f64,
}

#[derive(Debug, Serialize)]
pub struct DegreeSummary {
    pub degree: usize,
    pub size: usize,
    pub max_off_diagonal: f64,
    pub hermitian_defect: f64,
    pub block_norms: BlockNorms,
    pub assembly: AssemblyMeta,
    pub spectrum: SpectralSummary,
}

#[derive(Debug, Serialize)]
pub struct ToeplitzResult {
    pub spec: MeasureSpec,
    pub admissibility: AdmissibilityReport,
    pub degrees: Vec<DegreeSummary>,
}

pub fn cmd_toeplitz(config: &RunConfig) -> Result<(), CliError> {
    let params = config.params()?;
    let spec = config.measure()?;
    let admissibility = admissible(&spec, &params, config.tol)?;
    let dir = out_dir(config)?;
    let mut degrees = Vec::with_capacity(config.degrees.len());
    for &d in &config.degrees {
        let trunc = enumerate_basis(&params, d);
        let t = assemble(&spec, &trunc, &params, &AssemblyOptions::new(config.tol))?;
        let s = spectral_summary(&t, &config.p_list)?;
        let b = blocks(&t);
        write_json(&dir.join(format!("matrix_D{d}.json")), &t.export())?;
        write_csv(
            &dir.join(format!("spectrum_D{d}.csv")),
            &["index", "eigenvalue", "singular_value"],
            s.eigenvalues
                .iter()
                .zip(&s.singular_values)
                .enumerate()
                .map(|(i, (e, sv))| vec![i.to_string(), fmt_f64(*e), fmt_f64(*sv)]),
        )?;
        degrees.push(DegreeSummary {
            degree: d,
            size: t.size(),
            max_off_diagonal: t.max_off_diagonal(),
            hermitian_defect: t.hermitian_defect,
            block_norms: BlockNorms {
                mm: block_norm(&b.mm),
                mn: block_norm(&b.mn),
                nm: block_norm(&b.nm),
                nn: block_norm(&b.nn),
            },
            assembly: t.meta.clone(),
            spectrum: s,
        });
    }
    let result = ToeplitzResult {
        spec,
        admissibility,
        degrees,
    };
    let report = Report::new(
        "toeplitz",
        config,
        &[
            ("matrix", "M_jk = ∫ b_k conj(b_j) e^{-|w|²/α} dμ(w) over the basis of total degree ≤ D"),
            ("operator_norm", "‖P_D T_μ P_D‖, nondecreasing in D"),
            ("trace", "Σ_j M_jj"),
            ("schatten_norms", "(Σ σ_k^p)^{1/p}"),
            ("block_norms", "norms of the holomorphic/anti-holomorphic blocks; mixed blocks vanish for radial μ"),
        ],
        &result,
    );
    write_json(&dir.join("summary.json"), &report)
}

#[derive(Debug, Serialize)]
pub struct ProfilePoint {
    pub point: Vec<f64>,
    pub radius: f64,
    pub value: f64,
}

#[derive(Debug, Serialize)]
pub struct BerezinResult {
    pub spec: MeasureSpec,
    pub admissibility: AdmissibilityReport,
    pub profile: Vec<ProfilePoint>,
    pub decay: DecayProfile,
    pub trace: Option<TraceOutcome>,
}

#[derive(Debug, Serialize)]
pub struct TraceOutcome {
    pub value: Option<f64>,
    pub diverges: bool,
}

pub fn berezin_result(config: &RunConfig) -> Result<BerezinResult, CliError> {
    let params = config.params()?;
    let spec = config.measure()?;
    let admissibility = admissible(&spec, &params, config.tol)?;
    let mut points: Vec<ComplexPoint> = config
        .radii
        .iter()
        .map(|&r| {
            let mut c = vec![Complex64::new(0.0, 0.0); config.n];
            c[0] = Complex64::new(r, 0.0);
            ComplexPoint::new(c)
        })
        .collect();
    for p in &config.points {
        points.push(config.point(p).map_err(CliError::schema)?);
    }
    let profile = points
        .iter()
        .map(|z| {
            Ok(ProfilePoint {
                point: z.to_interleaved(),
                radius: z.norm(),
                value: berezin_of_measure(&spec, z, &params, config.tol)?,
            })
        })
        .collect::<Result<Vec<_>, FockError>>()?;
    let decay = measure_decay_profile(&spec, &params, &config.radii, config.tol)?;
    let trace = if config.trace {
        Some(match trace_via_berezin_measure(&spec, &params, config.tol) {
            Ok(v) => TraceOutcome {
                value: Some(v),
                diverges: false,
            },
            Err(FockError::Divergent { .. } | FockError::Inadmissible(_)) => TraceOutcome {
                value: None,
                diverges: true,
            },
            Err(e) => return Err(e.into()),
        })
    } else {
        None
    };
    Ok(BerezinResult {
        spec,
        admissibility,
        profile,
        decay,
        trace,
    })
}

pub fn cmd_berezin(config: &RunConfig) -> Result<(), CliError> {
    let result = berezin_result(config)?;
    let dir = out_dir(config)?;
    write_csv(
        &dir.join("profile.csv"),
        &["radius", "value"],
        result.profile.iter().map(|p| vec![fmt_f64(p.radius), fmt_f64(p.value)]),
    )?;
    let report = Report::new(
        "berezin",
        config,
        &[
            ("profile", "μ̃(z) = ∫ |k_z(w)|² e^{-|w|²/α} dμ(w)"),
            ("decay", "sup of μ̃ over sample spheres, strictly decreasing in the radius"),
            ("trace", "tr T_μ = (απ)^{-n} ∫ μ̃(z) K_ph(z,z) e^{-|z|²/α} dA(z)"),
        ],
        &result,
    );
    write_json(&dir.join("berezin.json"), &report)
}
