//! The verification catalog behind `phfock verify`.

mod checks;
mod lemmas;

use std::collections::BTreeMap;
use std::time::Instant;

use phfock::{Complex64, ComplexPoint, FockParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::commands::GENERATOR;
use crate::config::RunConfig;
use crate::error::{exit, CliError};
use crate::report::{out_dir, write_json, TOOL, VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

/// Result of one catalog check.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutcome {
    pub id: &'static str,
    pub statement: &'static str,
    pub must: bool,
    pub status: Status,
    /// Random stream of the seeded generator used by this check.
    pub stream: u64,
    pub measured: BTreeMap<String, serde_json::Value>,
    pub tolerances: BTreeMap<String, f64>,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
    pub error: Option<String>,
}

impl VerifyOutcome {
    fn new(check: &Check, stream: u64) -> Self {
        Self {
            id: check.id,
            statement: check.statement,
            must: check.must,
            status: Status::Pass,
            stream,
            measured: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            failures: Vec::new(),
            notes: Vec::new(),
            error: None,
        }
    }

    pub fn value<T: Serialize>(&mut self, key: impl Into<String>, v: T) {
        let v = serde_json::to_value(v).unwrap_or(serde_json::Value::Null);
        self.measured.insert(key.into(), v);
    }

    /// Records `measured ≤ tol`; NaN fails.
    pub fn at_most(&mut self, key: impl Into<String>, measured: f64, tol: f64) {
        let key = key.into();
        if !(measured <= tol) {
            self.fail(format!("{key} = {measured:e} exceeds {tol:e}"));
        }
        self.tolerances.insert(key.clone(), tol);
        self.value(key, measured);
    }

    pub fn require(&mut self, cond: bool, what: impl Into<String>) {
        if !cond {
            self.fail(what.into());
        }
    }

    pub fn fail(&mut self, why: String) {
        self.status = Status::Fail;
        self.failures.push(why);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Shared inputs of every check.
pub struct Ctx {
    pub alpha: f64,
    pub tol: f64,
    pub seed: u64,
    stream: u64,
}

impl Ctx {
    pub fn params(&self, n: usize) -> phfock::Result<FockParams> {
        FockParams::new(self.alpha, n)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

pub fn random_point(rng: &mut ChaCha8Rng, n: usize, reach: f64) -> ComplexPoint {
    ComplexPoint::new(
        (0..n)
            .map(|_| Complex64::new(rng.random_range(-reach..reach), rng.random_range(-reach..reach)))
            .collect(),
    )
}

type CheckFn = fn(&Ctx, &mut VerifyOutcome) -> phfock::Result<()>;

pub struct Check {
    pub id: &'static str,
    pub statement: &'static str,
    pub must: bool,
    run: CheckFn,
}

pub const CATALOG: &[Check] = &[
    Check {
        id: "orthonormality",
        statement: "b_m(z) = z^m / sqrt(α^|m| m!) and conj(b_m), |m| ≥ 1, are orthonormal in L²((απ)^{-n} e^{-|z|²/α} dA)",
        must: true,
        run: checks::orthonormality,
    },
    Check {
        id: "identity-operator",
        statement: "T_1 = I for the symbol g = 1, i.e. dμ = (απ)^{-n} dA",
        must: true,
        run: checks::identity_operator,
    },
    Check {
        id: "kernel-trace-closed-form",
        statement: "K_ph(z,z) = 2e^{|z|²/α} − 1; tr T_μ = (απ)^{-n} ∫ μ̃(z) K_ph(z,z) e^{-|z|²/α} dA(z)",
        must: true,
        run: checks::kernel_trace_closed_form,
    },
    Check {
        id: "trace-formula-consistency",
        statement: "tr T_μ = ∫ K_ph(u,u) e^{-|u|²/α} dμ(u), the limit of the truncated traces",
        must: true,
        run: checks::trace_formula_consistency,
    },
    Check {
        id: "trace-sandwich",
        statement: "μ(ℂⁿ) ≤ tr T_μ ≤ 2μ(ℂⁿ), since 1 ≤ K_ph(u,u) e^{-|u|²/α} ≤ 2",
        must: true,
        run: checks::trace_sandwich,
    },
    Check {
        id: "radial-diagonality",
        statement: "for radial μ, T_μ maps each homogeneous component to itself and the mixed holomorphic/anti-holomorphic blocks vanish",
        must: true,
        run: checks::radial_diagonality,
    },
    Check {
        id: "carleson-necessity",
        statement: "μ(B(a,r)) ≤ e^{r²/α} ∫ |f_a(z)|² e^{-|z|²/α} dμ(z) with f_a(z) = e^{(⟨z,a⟩ − |a|²/2)/α}",
        must: true,
        run: checks::carleson_necessity,
    },
    Check {
        id: "carleson-sufficiency",
        statement: "bounded lattice ball masses give ‖T_μ‖ ≤ K sup_k μ(B(z_k,r)); truncated norms increase with D",
        must: true,
        run: checks::carleson_sufficiency,
    },
    Check {
        id: "vanishing-compactness",
        statement: "T_μ is compact iff μ(B(z,r)) → 0 as |z| → ∞",
        must: true,
        run: checks::vanishing_compactness,
    },
    Check {
        id: "berezin-bounds",
        statement: "|T̃(z)| ≤ ‖T‖, Ĩ = 1, and ∫ T̃(z) K_ph(z,z) e^{-|z|²/α} (απ)^{-n} dA = tr T for positive T",
        must: true,
        run: checks::berezin_bounds,
    },
    Check {
        id: "berezin-power-inequality",
        statement: "(T²)~(z) ≤ (T̃(z))² for positive T",
        must: true,
        run: checks::berezin_power_inequality,
    },
    Check {
        id: "symbol-schatten-bound",
        statement: "Σ |λ_k(T_φ)|^p ≤ 2 (απ)^{-n} ∫ |φ|^p dA for bounded φ ≥ 0, p ≥ 1",
        must: true,
        run: checks::symbol_schatten_bound,
    },
    Check {
        id: "schatten-diagonal",
        statement: "(Σ_k |⟨T e_k, e_k⟩|^p)^{1/p} ≤ ‖T‖_{S_p} for any orthonormal basis (e_k), p ≥ 1",
        must: true,
        run: checks::schatten_diagonal,
    },
    Check {
        id: "point-evaluation-lemmas",
        statement: "|f(a) e^{-|a|²/(2α)}|^p ≤ C r^{-2n} ∫_{B(a,r)} |f(z) e^{-|z|²/(2α)}|^p dA(z) for harmonic f, r ≤ R, C = C_p e^{p(R² + 2R|a|)/(2α)}",
        must: true,
        run: lemmas::point_evaluation,
    },
];

pub fn check_ids() -> Vec<&'static str> {
    CATALOG.iter().map(|c| c.id).collect()
}

#[derive(Debug, Serialize)]
pub struct VerifySummary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
    pub must_failed: Vec<&'static str>,
    pub errored: Vec<&'static str>,
}

/// Deterministic report; wall-clock timings live in a separate file.
#[derive(Debug, Serialize)]
pub struct VerifyReport<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: &'a RunConfig,
    pub generator: &'static str,
    pub seed: u64,
    pub checks: Vec<VerifyOutcome>,
    pub summary: VerifySummary,
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub id: &'static str,
    pub seconds: f64,
}

pub fn select(only: &[String]) -> Result<Vec<(u64, &'static Check)>, CliError> {
    for id in only {
        if !CATALOG.iter().any(|c| c.id == id) {
            return Err(CliError::schema(format!(
                "field `only`: unknown check id `{id}`; known ids: {}",
                check_ids().join(", ")
            )));
        }
    }
    Ok(CATALOG
        .iter()
        .enumerate()
        .filter(|(_, c)| only.is_empty() || only.iter().any(|o| o == c.id))
        .map(|(i, c)| (i as u64 + 1, c))
        .collect())
}

pub fn run_check(check: &Check, stream: u64, config: &RunConfig) -> VerifyOutcome {
    let ctx = Ctx {
        alpha: config.alpha,
        tol: config.tol,
        seed: config.seed,
        stream,
    };
    let mut outcome = VerifyOutcome::new(check, stream);
    if let Err(e) = (check.run)(&ctx, &mut outcome) {
        outcome.status = Status::Fail;
        outcome.error = Some(e.to_string());
    }
    outcome
}

pub fn run_verify(config: &RunConfig) -> Result<(VerifyReport<'_>, Vec<Timing>), CliError> {
    let selected = select(&config.only)?;
    let mut outcomes = Vec::with_capacity(selected.len());
    let mut timings = Vec::with_capacity(selected.len());
    for (stream, check) in selected {
        let start = Instant::now();
        outcomes.push(run_check(check, stream, config));
        timings.push(Timing {
            id: check.id,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let count = |s: Status| outcomes.iter().filter(|o| o.status == s).count();
    let summary = VerifySummary {
        total: outcomes.len(),
        passed: count(Status::Pass),
        failed: count(Status::Fail),
        inconclusive: count(Status::Inconclusive),
        must_failed: outcomes.iter().filter(|o| o.must && !o.passed()).map(|o| o.id).collect(),
        errored: outcomes.iter().filter(|o| o.error.is_some()).map(|o| o.id).collect(),
    };
    Ok((
        VerifyReport {
            tool: TOOL,
            version: VERSION,
            command: "verify",
            config,
            generator: GENERATOR,
            seed: config.seed,
            checks: outcomes,
            summary,
        },
        timings,
    ))
}

pub fn cmd_verify(config: &RunConfig) -> Result<(), CliError> {
    let (report, timings) = run_verify(config)?;
    let dir = out_dir(config)?;
    write_json(&dir.join("verify.json"), &report)?;
    write_json(&dir.join("timings.json"), &timings)?;
    for (o, t) in report.checks.iter().zip(&timings) {
        let tag = match o.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        };
        println!("{tag} {} ({:.1}s)", o.id, t.seconds);
        for f in &o.failures {
            println!("    {f}");
        }
        if let Some(e) = &o.error {
            println!("    error: {e}");
        }
    }
    let s = &report.summary;
    if !s.errored.is_empty() {
        return Err(CliError::new(
            exit::FAILURE,
            format!("check(s) failed to run: {}", s.errored.join(", ")),
        ));
    }
    if !s.must_failed.is_empty() {
        return Err(CliError::new(
            exit::FAILURE,
            format!("required check(s) failed: {}", s.must_failed.join(", ")),
        ));
    }
    Ok(())
}
