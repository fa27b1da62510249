use std::fmt;
use std::path::{Path, PathBuf};

use phfock::carleson::{LatticeWindow, DEFAULT_POINT_CAP};
use phfock::{ComplexPoint, FockParams, MeasureSpec};
use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

pub const DEFAULT_DEGREE_CAP: usize = 16;

/// The `measure` field: a catalog document, or the string `"identity"` for
/// `(απ)^{-n} dA`.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureField {
    Identity,
    Spec(MeasureSpec),
}

impl MeasureField {
    pub fn resolve(&self, params: &FockParams) -> MeasureSpec {
        match self {
            MeasureField::Identity => MeasureSpec::ScaledLebesgue {
                c: params.gaussian_normalizer(),
            },
            MeasureField::Spec(s) => s.clone(),
        }
    }
}

impl Serialize for MeasureField {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            MeasureField::Identity => s.serialize_str("identity"),
            MeasureField::Spec(spec) => spec.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for MeasureField {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct FieldVisitor;

        impl<'de> Visitor<'de> for FieldVisitor {
            type Value = MeasureField;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a measure object or the string \"identity\"")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<MeasureField, E> {
                match v {
                    "identity" => Ok(MeasureField::Identity),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }

            fn visit_map<A: MapAccess<'de>>(self, map: A) -> Result<MeasureField, A::Error> {
                MeasureSpec::deserialize(de::value::MapAccessDeserializer::new(map)).map(MeasureField::Spec)
            }
        }

        d.deserialize_any(FieldVisitor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub spacing: f64,
    pub half_width: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            spacing: 1.0,
            half_width: 6.0,
        }
    }
}

/// One JSON document drives every verb. Fields a verb does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub alpha: f64,
    pub n: usize,
    pub measure: Option<MeasureField>,
    pub degrees: Vec<usize>,
    pub degree_cap: usize,
    pub window: WindowConfig,
    pub point_cap: usize,
    pub p_list: Vec<f64>,
    /// Quadrature tolerance.
    pub tol: f64,
    pub seed: u64,
    pub out: PathBuf,
    /// `kernel`: point pairs, each point as interleaved `[re, im, ...]`.
    pub pairs: Vec<[Vec<f64>; 2]>,
    /// `kernel`: number of seeded random pairs added after `pairs`.
    pub random_pairs: usize,
    /// `berezin`: radii of the profile points `(r, 0, ..., 0)`.
    pub radii: Vec<f64>,
    /// `berezin`: extra profile points.
    pub points: Vec<Vec<f64>>,
    /// `berezin`: also compute the trace through the Berezin transform.
    pub trace: bool,
    /// `verify`: check ids to run; empty runs all.
    pub only: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            n: 1,
            measure: None,
            degrees: vec![4, 8],
            degree_cap: DEFAULT_DEGREE_CAP,
            window: WindowConfig::default(),
            point_cap: DEFAULT_POINT_CAP,
            p_list: vec![1.0, 2.0],
            tol: 1e-10,
            seed: 20240617,
            out: PathBuf::from("phfock-out"),
            pairs: Vec::new(),
            random_pairs: 0,
            radii: (0..=8).map(|k| 0.5 * k as f64).collect(),
            points: Vec::new(),
            trace: false,
            only: Vec::new(),
        }
    }
}

/// Command-line values that replace config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub only: Vec<String>,
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let (line, column) = (inner.line(), inner.column());
            let text = inner.to_string();
            let suffix = format!(" at line {line} column {column}");
            let message = text.strip_suffix(&suffix).unwrap_or(&text);
            CliError::schema(format!("{origin}:{line}:{column}: field `{path}`: {message}"))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(tol) = o.tol {
            self.tol = tol;
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if !o.only.is_empty() {
            self.only = o.only.clone();
        }
    }

    /// Schema-level checks that do not depend on the verb.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: String| Err(CliError::schema(format!("field `{field}`: {msg}")));
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return bad("alpha", format!("must be positive, got {}", self.alpha));
        }
        if self.n == 0 {
            return bad("n", "must be at least 1".into());
        }
        if self.degrees.is_empty() {
            return bad("degrees", "must not be empty".into());
        }
        if let Some((i, d)) = self.degrees.iter().enumerate().find(|(_, d)| **d > self.degree_cap) {
            return bad(
                &format!("degrees[{i}]"),
                format!("{d} exceeds degree_cap {}", self.degree_cap),
            );
        }
        if let Some((i, p)) = self.p_list.iter().enumerate().find(|(_, p)| !(**p >= 1.0)) {
            return bad(&format!("p_list[{i}]"), format!("p must be at least 1, got {p}"));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad("tol", format!("must be positive, got {}", self.tol));
        }
        if let Err(e) = LatticeWindow::new(self.window.spacing, self.window.half_width) {
            return bad("window", e.to_string());
        }
        let params = self.params()?;
        for (i, pair) in self.pairs.iter().enumerate() {
            for (j, p) in pair.iter().enumerate() {
                self.point(p).map_err(|e| CliError::schema(format!("field `pairs[{i}][{j}]`: {e}")))?;
            }
        }
        for (i, p) in self.points.iter().enumerate() {
            self.point(p).map_err(|e| CliError::schema(format!("field `points[{i}]`: {e}")))?;
        }
        if let Some((i, r)) = self.radii.iter().enumerate().find(|(_, r)| !(r.is_finite() && **r >= 0.0)) {
            return bad(&format!("radii[{i}]"), format!("must be non-negative, got {r}"));
        }
        if let Some(MeasureField::Spec(spec)) = &self.measure {
            spec.validate(&params)
                .map_err(|e| CliError::schema(format!("field `measure`: {e}")))?;
        }
        Ok(())
    }

    pub fn params(&self) -> Result<FockParams, CliError> {
        FockParams::new(self.alpha, self.n).map_err(|e| CliError::schema(e.to_string()))
    }

    pub fn window(&self) -> Result<LatticeWindow, CliError> {
        LatticeWindow::new(self.window.spacing, self.window.half_width)
            .map_err(|e| CliError::schema(format!("field `window`: {e}")))
    }

    pub fn point(&self, v: &[f64]) -> Result<ComplexPoint, String> {
        if v.len() != 2 * self.n {
            return Err(format!("expected {} numbers for a point of C^{}, got {}", 2 * self.n, self.n, v.len()));
        }
        ComplexPoint::from_interleaved(v).map_err(|e| e.to_string())
    }

    pub fn measure(&self) -> Result<MeasureSpec, CliError> {
        let params = self.params()?;
        self.measure
            .as_ref()
            .map(|m| m.resolve(&params))
            .ok_or_else(|| CliError::schema("field `measure`: required by this command".into()))
    }
}
