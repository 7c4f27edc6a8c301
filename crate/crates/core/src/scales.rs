//! Growth sequences, regular scale families and their finite-range checks.
//!
//! A growth sequence `N: ℕ → ℝ₊` bounds the ε-blow-up of a seminorm by
//! `O(ε^{-N(n)})`. A family of such sequences is *regular* when it is stable
//! under translation, maximum and superadditive combination. The families in
//! scope are finitely parameterized, so the axioms are checked on a finite
//! range with an explicit witness search over the family's parameters.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::GrowthProfile;
use crate::serde_ext;

/// Step of the slope and intercept grids used by witness searches.
pub const PARAM_STEP: f64 = 0.25;
/// Largest slope the witness search tries for unbounded-slope families.
pub const SLOPE_MAX: f64 = 5.0;
/// Length of the tables built for tabulated default generators.
const TABLE_LEN: usize = 513;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScaleError {
    #[error("sequence evaluated at n={n} beyond its table of length {len}")]
    OutOfRange { n: usize, len: usize },
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
    #[error("search range too small: {0}")]
    RangeTooSmall(String),
    #[error("family has no generators")]
    NoGenerators,
    #[error("profile is unclassifiable: {0}")]
    Unclassifiable(String),
    #[error("unknown family name `{0}`")]
    UnknownFamily(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceKind {
    Constant,
    Affine,
    LogAffine,
    Tabulated,
}

/// A growth sequence `n ↦ N(n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleSequence {
    pub kind: SequenceKind,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<f64>,
}

impl ScaleSequence {
    pub fn constant(b: f64) -> Self {
        Self { kind: SequenceKind::Constant, a: 0.0, b, table: Vec::new() }
    }

    pub fn affine(a: f64, b: f64) -> Self {
        Self { kind: SequenceKind::Affine, a, b, table: Vec::new() }
    }

    pub fn log_affine(a: f64, b: f64) -> Self {
        Self { kind: SequenceKind::LogAffine, a, b, table: Vec::new() }
    }

    pub fn tabulated(table: Vec<f64>) -> Self {
        Self { kind: SequenceKind::Tabulated, a: 0.0, b: 0.0, table }
    }

    /// Checks that the sequence is a genuine element of `ℝ₊^ℕ`.
    pub fn validate(&self) -> Result<(), ScaleError> {
        let bad = |what: &str| Err(ScaleError::InvalidSequence(what.to_string()));
        match self.kind {
            SequenceKind::Tabulated => {
                if self.table.is_empty() {
                    return bad("empty table");
                }
                if self.table.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return bad("table entries must be finite and nonnegative");
                }
            }
            _ => {
                if !(self.a.is_finite() && self.b.is_finite()) || self.a < 0.0 || self.b < 0.0 {
                    return bad("slope and intercept must be finite and nonnegative");
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, n: usize) -> Result<f64, ScaleError> {
        match self.kind {
            SequenceKind::Constant => Ok(self.b),
            SequenceKind::Affine => Ok(self.a * n as f64 + self.b),
            SequenceKind::LogAffine => Ok(self.a * log_index(n) + self.b),
            SequenceKind::Tabulated => self
                .table
                .get(n)
                .copied()
                .ok_or(ScaleError::OutOfRange { n, len: self.table.len() }),
        }
    }

    /// Values on `0..=n_max`.
    pub fn values(&self, n_max: usize) -> Result<Vec<f64>, ScaleError> {
        (0..=n_max).map(|n| self.eval(n)).collect()
    }

    /// The parametric slope, when the sequence has one.
    pub fn slope(&self) -> Option<f64> {
        match self.kind {
            SequenceKind::Constant => Some(0.0),
            SequenceKind::Affine | SequenceKind::LogAffine => Some(self.a),
            SequenceKind::Tabulated => None,
        }
    }
}

/// `ln(max(n, 1))`, the basis of log-affine sequences.
pub fn log_index(n: usize) -> f64 {
    (n.max(1) as f64).ln()
}

/// `N1 ≼ N2` on `0..=n_max`.
pub fn leq(n1: &ScaleSequence, n2: &ScaleSequence, n_max: usize) -> Result<bool, ScaleError> {
    for n in 0..=n_max {
        if n1.eval(n)? > n2.eval(n)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The built-in regular (and one non-regular) families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum FamilyName {
    /// Bounded sequences.
    B,
    /// Affine sequences.
    A,
    /// `N(l) ≤ l + b`.
    R1,
    /// Slow growth: `N(l) ≤ a′l + b` with `a′ < a`; `a = +∞` is the full set.
    Ra {
        #[serde(with = "serde_ext::ext_f64")]
        a: f64,
    },
    /// `a ln n + b`.
    Log1,
    /// `ln n + b`, which is not regular.
    Log,
    /// All of `ℝ₊^ℕ`.
    Full,
}

impl FamilyName {
    pub fn parse(s: &str) -> Result<Self, ScaleError> {
        let lower = s.trim().to_ascii_lowercase();
        let name = match lower.as_str() {
            "b" | "bounded" => FamilyName::B,
            "a" | "affine" => FamilyName::A,
            "r1" => FamilyName::R1,
            "ra" => FamilyName::Ra { a: 1.0 },
            "log1" => FamilyName::Log1,
            "log" | "l_og" => FamilyName::Log,
            "full" => FamilyName::Full,
            other => {
                let a = other
                    .strip_prefix("ra:")
                    .or_else(|| other.strip_prefix("ra="))
                    .ok_or_else(|| ScaleError::UnknownFamily(s.to_string()))?;
                let a = if a == "inf" {
                    f64::INFINITY
                } else {
                    a.parse::<f64>().map_err(|_| ScaleError::UnknownFamily(s.to_string()))?
                };
                if a.is_nan() || a < 0.0 {
                    return Err(ScaleError::UnknownFamily(s.to_string()));
                }
                FamilyName::Ra { a }
            }
        };
        Ok(name)
    }

    pub fn label(&self) -> String {
        match self {
            FamilyName::B => "B".into(),
            FamilyName::A => "A".into(),
            FamilyName::R1 => "R1".into(),
            FamilyName::Ra { a } if a.is_infinite() => "Ra(inf)".into(),
            FamilyName::Ra { a } => format!("Ra({a})"),
            FamilyName::Log1 => "Log1".into(),
            FamilyName::Log => "Log".into(),
            FamilyName::Full => "Full".into(),
        }
    }
}

/// Thresholds shared by membership predicates and classification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipParams {
    pub tol: f64,
    pub b_max: f64,
}

impl Default for MembershipParams {
    fn default() -> Self {
        Self { tol: 0.25, b_max: 20.0 }
    }
}

/// Least-squares line through `(n, values[n])`.
pub fn affine_fit(values: &[f64]) -> (f64, f64) {
    let xs: Vec<f64> = (0..values.len()).map(|n| n as f64).collect();
    least_squares(&xs, values)
}

pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

fn max_excess(values: &[f64], slope: f64, basis: impl Fn(usize) -> f64) -> f64 {
    values
        .iter()
        .enumerate()
        .map(|(n, v)| v - slope * basis(n))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// A regular scale family with the generators used by axiom checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularScaleFamily {
    pub name: FamilyName,
    pub generators: Vec<ScaleSequence>,
}

impl RegularScaleFamily {
    pub fn new(name: FamilyName, generators: Vec<ScaleSequence>) -> Self {
        Self { name, generators }
    }

    /// The family with its default generator set.
    pub fn with_defaults(name: FamilyName) -> Self {
        let generators = match name {
            FamilyName::B => vec![ScaleSequence::constant(0.0), ScaleSequence::constant(3.0)],
            FamilyName::A => vec![
                ScaleSequence::affine(1.0, 0.0),
                ScaleSequence::affine(2.0, 1.0),
                ScaleSequence::affine(0.5, 3.0),
            ],
            FamilyName::R1 => vec![
                ScaleSequence::affine(1.0, 0.0),
                ScaleSequence::affine(1.0, 1.0),
                ScaleSequence::affine(0.5, 2.0),
            ],
            FamilyName::Ra { a } => {
                let s = if a.is_infinite() { 2.0 } else { a * 0.5 };
                let t = if a.is_infinite() { 3.0 } else { a * 0.75 };
                vec![
                    ScaleSequence::affine(s, 1.0),
                    ScaleSequence::affine(t, 0.0),
                    ScaleSequence::constant(2.0),
                ]
            }
            FamilyName::Log1 => vec![ScaleSequence::log_affine(1.0, 1.0), ScaleSequence::log_affine(2.0, 0.0)],
            FamilyName::Log => vec![ScaleSequence::log_affine(1.0, 0.0), ScaleSequence::log_affine(1.0, 1.0)],
            FamilyName::Full => vec![
                ScaleSequence::tabulated((0..TABLE_LEN).map(|n| (n * n) as f64).collect()),
                ScaleSequence::affine(3.0, 0.0),
            ],
        };
        Self { name, generators }
    }

    /// Finite-range membership of a sequence.
    pub fn membership(&self, seq: &ScaleSequence, n_max: usize, params: MembershipParams) -> Result<bool, ScaleError> {
        Ok(self.accepts_values(&seq.values(n_max)?, params))
    }

    /// Membership of the finite table `values[n] = N(n)`, `n = 0..len`.
    ///
    /// Every predicate contains the bounded test, and `R1 ⊆ Ra(a)` for
    /// `a > 1`, so membership is monotone along `B ⊂ R1 ⊂ Ra ⊂ Full`.
    pub fn accepts_values(&self, values: &[f64], params: MembershipParams) -> bool {
        if values.is_empty() {
            return true;
        }
        let MembershipParams { tol, b_max } = params;
        let bounded = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - values[0] <= tol;
        if bounded {
            return true;
        }
        let (slope, _) = affine_fit(values);
        let linear = |n: usize| n as f64;
        let r1_core = slope <= 1.0 + tol && max_excess(values, 1.0, linear) <= b_max + tol;
        match self.name {
            FamilyName::B => false,
            FamilyName::R1 => r1_core,
            FamilyName::Ra { a } => {
                if a.is_infinite() {
                    return true;
                }
                if a == 0.0 {
                    return slope <= tol && max_excess(values, slope.max(0.0), linear) <= b_max + tol;
                }
                (a > 1.0 && r1_core) || (slope < a && max_excess(values, slope.max(0.0), linear) <= b_max + tol)
            }
            FamilyName::A => max_excess(values, slope.max(0.0), linear) <= b_max + tol,
            FamilyName::Log1 => {
                let steps = (SLOPE_MAX / PARAM_STEP).round() as usize;
                (0..=steps).any(|i| max_excess(values, i as f64 * PARAM_STEP, log_index) <= b_max + tol)
            }
            FamilyName::Log => max_excess(values, 1.0, log_index) <= b_max + tol,
            FamilyName::Full => true,
        }
    }

    /// The witness shapes, in lexicographic search order.
    fn witness_shapes(&self) -> Vec<Shape> {
        let grid = |limit: f64, strict: bool| -> Vec<f64> {
            let steps = (limit.min(SLOPE_MAX) / PARAM_STEP).floor() as usize;
            (0..=steps)
                .map(|i| i as f64 * PARAM_STEP)
                .filter(|s| if strict { *s < limit } else { *s <= limit })
                .collect()
        };
        let with_generators = |mut slopes: Vec<f64>, limit: f64, strict: bool| -> Vec<f64> {
            for g in &self.generators {
                if let Some(s) = g.slope() {
                    let ok = if strict { s < limit } else { s <= limit };
                    if ok {
                        slopes.push(s);
                    }
                }
            }
            slopes.sort_by(f64::total_cmp);
            slopes.dedup();
            slopes
        };
        match self.name {
            FamilyName::B => vec![Shape::Affine(0.0)],
            FamilyName::A => with_generators(grid(SLOPE_MAX, false), f64::INFINITY, false)
                .into_iter()
                .map(Shape::Affine)
                .collect(),
            FamilyName::R1 => with_generators(grid(1.0, false), 1.0, false).into_iter().map(Shape::Affine).collect(),
            FamilyName::Ra { a } => {
                let strict = a.is_finite();
                let limit = if a.is_finite() { a } else { SLOPE_MAX };
                let mut slopes = with_generators(grid(limit, strict), if a.is_finite() { a } else { f64::INFINITY }, strict);
                if slopes.is_empty() {
                    slopes.push(0.0);
                }
                slopes.into_iter().map(Shape::Affine).collect()
            }
            FamilyName::Log1 => with_generators(grid(SLOPE_MAX, false), f64::INFINITY, false)
                .into_iter()
                .map(Shape::LogAffine)
                .collect(),
            FamilyName::Log => vec![Shape::LogAffine(1.0)],
            FamilyName::Full => vec![Shape::Tabulated],
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Shape {
    Affine(f64),
    LogAffine(f64),
    Tabulated,
}

impl Shape {
    fn basis(&self, n: usize) -> f64 {
        match self {
            Shape::Affine(_) => n as f64,
            Shape::LogAffine(_) => log_index(n),
            Shape::Tabulated => 0.0,
        }
    }

    fn slope(&self) -> f64 {
        match self {
            Shape::Affine(s) | Shape::LogAffine(s) => *s,
            Shape::Tabulated => 0.0,
        }
    }

    fn sequence(&self, b: f64) -> ScaleSequence {
        match self {
            Shape::Affine(s) if *s == 0.0 => ScaleSequence::constant(b),
            Shape::Affine(s) => ScaleSequence::affine(*s, b),
            Shape::LogAffine(s) => ScaleSequence::log_affine(*s, b),
            Shape::Tabulated => ScaleSequence::constant(b),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    /// `N(n+k) + k′ ≤ N′(n)`.
    Translation,
    /// `max(N1, N2) ≤ N`.
    Max,
    /// `N1(l1) + N2(l2) ≤ N(l1 + l2)`.
    Superadditive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBounds {
    pub n_max: usize,
    pub k_max: usize,
    pub b_max: f64,
}

impl Default for SearchBounds {
    fn default() -> Self {
        Self { n_max: 50, k_max: 5, b_max: 20.0 }
    }
}

/// A concrete inequality `lhs ≤ rhs` at the given indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
    pub indices: Vec<usize>,
}

/// A witness found for one generator tuple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub generators: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift: Option<(usize, usize)>,
    pub witness: ScaleSequence,
}

/// A failing instance: the best candidate found on half the range, violated
/// on the full range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub generators: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift: Option<(usize, usize)>,
    pub candidate: ScaleSequence,
    pub inequality: Inequality,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub family: FamilyName,
    pub axiom: Axiom,
    pub passed: bool,
    pub witnesses: Vec<WitnessRecord>,
    pub violation: Option<Violation>,
    pub search_bounds: SearchBounds,
}

impl AxiomReport {
    /// Re-evaluates the recorded violation from the family's generators.
    /// Returns `Some(true)` when the inequality is reproduced exactly.
    pub fn recheck(&self, family: &RegularScaleFamily) -> Option<bool> {
        let v = self.violation.as_ref()?;
        let g = |i: usize| &family.generators[i];
        let lhs = match (self.axiom, v.inequality.indices.as_slice()) {
            (Axiom::Translation, [n]) => {
                let (k, kp) = v.shift?;
                g(v.generators[0]).eval(n + k).ok()? + kp as f64
            }
            (Axiom::Max, [n]) => g(v.generators[0]).eval(*n).ok()?.max(g(v.generators[1]).eval(*n).ok()?),
            (Axiom::Superadditive, [l1, l2]) => {
                g(v.generators[0]).eval(*l1).ok()? + g(v.generators[1]).eval(*l2).ok()?
            }
            _ => return Some(false),
        };
        let at = match self.axiom {
            Axiom::Superadditive => v.inequality.indices.iter().sum(),
            _ => v.inequality.indices[0],
        };
        let rhs = v.candidate.eval(at).ok()?;
        Some(lhs == v.inequality.lhs && rhs == v.inequality.rhs && lhs > rhs)
    }
}

/// One constraint `lhs ≤ N′(at)`; `half` marks membership in the half range.
struct Constraint {
    at: usize,
    lhs: f64,
    indices: Vec<usize>,
    half: bool,
}

fn round_up(b: f64) -> f64 {
    let b = b.max(0.0);
    ((b - 1e-12) / PARAM_STEP).ceil().max(0.0) * PARAM_STEP
}

enum Search {
    Found(ScaleSequence),
    Failed { candidate: ScaleSequence, inequality: Inequality },
}

/// Searches the family's parameter space for `N′` with `lhs ≤ N′(at)` on the
/// full range whose required intercept already stabilized on the half range.
fn search_witness(family: &RegularScaleFamily, constraints: &[Constraint], n_max: usize, b_max: f64) -> Search {
    let mut best: Option<(f64, Shape, f64)> = None;
    for shape in family.witness_shapes() {
        if let Shape::Tabulated = shape {
            let mut table = vec![0.0f64; n_max + 1];
            for c in constraints {
                table[c.at] = table[c.at].max(c.lhs);
            }
            return Search::Found(ScaleSequence::tabulated(table));
        }
        let s = shape.slope();
        let need = |half_only: bool| {
            constraints
                .iter()
                .filter(|c| !half_only || c.half)
                .map(|c| c.lhs - s * shape.basis(c.at))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let b_full = round_up(need(false));
        let b_half = round_up(need(true));
        if b_full == b_half && b_full <= b_max {
            return Search::Found(shape.sequence(b_full));
        }
        let drift = b_full - b_half;
        let candidate_b = if b_full == b_half { b_max } else { b_half.min(b_max) };
        if best.as_ref().map_or(true, |(d, _, _)| drift < *d) {
            best = Some((drift, shape, candidate_b));
        }
    }
    let (_, shape, b) = best.expect("every family has at least one witness shape");
    let candidate = shape.sequence(b);
    let worst = constraints
        .iter()
        .map(|c| (c, c.lhs - candidate.eval(c.at).unwrap_or(f64::INFINITY)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty constraint set");
    let c = worst.0;
    let rhs = candidate.eval(c.at).unwrap_or(f64::INFINITY);
    Search::Failed { candidate, inequality: Inequality { lhs: c.lhs, rhs, indices: c.indices.clone() } }
}

fn eval_all(g: &ScaleSequence, upto: usize) -> Result<Vec<f64>, ScaleError> {
    g.validate()?;
    g.values(upto)
}

/// Checks overstability by translation (`N(n+k) + k′ ≤ N′(n)`) for every
/// generator and every `(k, k′) ≤ k_max`.
pub fn check_overstability(family: &RegularScaleFamily, n_max: usize, k_max: usize) -> Result<AxiomReport, ScaleError> {
    check_translation(family, SearchBounds { n_max, k_max, b_max: SearchBounds::default().b_max })
}

pub fn check_translation(family: &RegularScaleFamily, bounds: SearchBounds) -> Result<AxiomReport, ScaleError> {
    let SearchBounds { n_max, k_max, b_max } = bounds;
    if n_max < 4 {
        return Err(ScaleError::RangeTooSmall(format!("n_max = {n_max} < 4")));
    }
    if k_max < 2 {
        return Err(ScaleError::RangeTooSmall(format!("k_max = {k_max} < 2")));
    }
    if family.generators.is_empty() {
        return Err(ScaleError::NoGenerators);
    }
    let mut witnesses = Vec::new();
    for (gi, g) in family.generators.iter().enumerate() {
        let vals = eval_all(g, n_max + k_max)?;
        for k in 0..=k_max {
            for kp in 0..=k_max {
                let constraints: Vec<Constraint> = (0..=n_max)
                    .map(|n| Constraint { at: n, lhs: vals[n + k] + kp as f64, indices: vec![n], half: n <= n_max / 2 })
                    .collect();
                match search_witness(family, &constraints, n_max, b_max) {
                    Search::Found(w) => witnesses.push(WitnessRecord { generators: vec![gi], shift: Some((k, kp)), witness: w }),
                    Search::Failed { candidate, inequality } => {
                        return Ok(AxiomReport {
                            family: family.name,
                            axiom: Axiom::Translation,
                            passed: false,
                            witnesses,
                            violation: Some(Violation { generators: vec![gi], shift: Some((k, kp)), candidate, inequality }),
                            search_bounds: bounds,
                        })
                    }
                }
            }
        }
    }
    Ok(AxiomReport { family: family.name, axiom: Axiom::Translation, passed: true, witnesses, violation: None, search_bounds: bounds })
}

/// Checks overstability by maximum for every generator pair.
pub fn check_max_closure(family: &RegularScaleFamily, bounds: SearchBounds) -> Result<AxiomReport, ScaleError> {
    let SearchBounds { n_max, b_max, .. } = bounds;
    if n_max < 4 {
        return Err(ScaleError::RangeTooSmall(format!("n_max = {n_max} < 4")));
    }
    if family.generators.is_empty() {
        return Err(ScaleError::NoGenerators);
    }
    let tables = family.generators.iter().map(|g| eval_all(g, n_max)).collect::<Result<Vec<_>, _>>()?;
    let mut witnesses = Vec::new();
    for i in 0..tables.len() {
        for j in i..tables.len() {
            let constraints: Vec<Constraint> = (0..=n_max)
                .map(|n| Constraint { at: n, lhs: tables[i][n].max(tables[j][n]), indices: vec![n], half: n <= n_max / 2 })
                .collect();
            match search_witness(family, &constraints, n_max, b_max) {
                Search::Found(w) => witnesses.push(WitnessRecord { generators: vec![i, j], shift: None, witness: w }),
                Search::Failed { candidate, inequality } => {
                    return Ok(AxiomReport {
                        family: family.name,
                        axiom: Axiom::Max,
                        passed: false,
                        witnesses,
                        violation: Some(Violation { generators: vec![i, j], shift: None, candidate, inequality }),
                        search_bounds: bounds,
                    })
                }
            }
        }
    }
    Ok(AxiomReport { family: family.name, axiom: Axiom::Max, passed: true, witnesses, violation: None, search_bounds: bounds })
}

/// Checks `N1(l1) + N2(l2) ≤ N(l1 + l2)` for all ordered generator pairs and
/// all `l1 + l2 ≤ n_max`.
pub fn check_superadditive_closure(family: &RegularScaleFamily, n_max: usize, b_max: f64) -> Result<AxiomReport, ScaleError> {
    let bounds = SearchBounds { n_max, k_max: 0, b_max };
    if n_max < 8 {
        return Err(ScaleError::RangeTooSmall(format!("n_max = {n_max} < 8")));
    }
    if family.generators.is_empty() {
        return Err(ScaleError::NoGenerators);
    }
    let tables = family.generators.iter().map(|g| eval_all(g, n_max)).collect::<Result<Vec<_>, _>>()?;
    let mut witnesses = Vec::new();
    for i in 0..tables.len() {
        for j in 0..tables.len() {
            let mut constraints = Vec::new();
            for l1 in 0..=n_max {
                for l2 in 0..=(n_max - l1) {
                    constraints.push(Constraint {
                        at: l1 + l2,
                        lhs: tables[i][l1] + tables[j][l2],
                        indices: vec![l1, l2],
                        half: l1 + l2 <= n_max / 2,
                    });
                }
            }
            match search_witness(family, &constraints, n_max, b_max) {
                Search::Found(w) => witnesses.push(WitnessRecord { generators: vec![i, j], shift: None, witness: w }),
                Search::Failed { candidate, inequality } => {
                    return Ok(AxiomReport {
                        family: family.name,
                        axiom: Axiom::Superadditive,
                        passed: false,
                        witnesses,
                        violation: Some(Violation { generators: vec![i, j], shift: None, candidate, inequality }),
                        search_bounds: bounds,
                    })
                }
            }
        }
    }
    Ok(AxiomReport { family: family.name, axiom: Axiom::Superadditive, passed: true, witnesses, violation: None, search_bounds: bounds })
}

/// All three axiom checks with shared bounds.
pub fn check_all_axioms(family: &RegularScaleFamily, bounds: SearchBounds) -> Result<Vec<AxiomReport>, ScaleError> {
    Ok(vec![
        check_translation(family, bounds)?,
        check_max_closure(family, bounds)?,
        check_superadditive_closure(family, bounds.n_max, bounds.b_max)?,
    ])
}

/// Result of [`classify_profile`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub family: FamilyName,
    pub slope: f64,
    pub intercept: f64,
    /// Exponents after clamping decaying entries to zero.
    pub exponents: Vec<f64>,
}

/// Default slope grid for `Ra(a)` candidates: `1.25, 1.5, …, 5`.
pub fn default_a_grid() -> Vec<f64> {
    (5..=20).map(|i| i as f64 * PARAM_STEP).collect()
}

/// Classifies a one-index growth profile into the smallest accepting family
/// along `B ⊂ R1 ⊂ Ra(a) ⊂ Full`.
///
/// Exponents below zero (decaying seminorms, including the negligible
/// sentinel) are clamped to zero: `O(ε^{-N})` with `N < 0` is already `O(1)`.
pub fn classify_profile(profile: &GrowthProfile, params: MembershipParams, a_grid: &[f64]) -> Result<Classification, ScaleError> {
    let fits = profile.one_index_exponents().map_err(ScaleError::Unclassifiable)?;
    if fits.len() < 4 {
        return Err(ScaleError::Unclassifiable(format!("profile has {} indices, need at least 4", fits.len())));
    }
    for (i, (exp, residual)) in fits.iter().enumerate() {
        if exp.is_nan() || (exp.is_infinite() && *exp > 0.0) {
            return Err(ScaleError::Unclassifiable(format!("exponent at index {i} is not finite")));
        }
        if *exp >= 0.0 && *residual > profile.validity_threshold {
            return Err(ScaleError::Unclassifiable(format!(
                "residual {residual:.3} at index {i} exceeds {:.3}",
                profile.validity_threshold
            )));
        }
    }
    let exponents: Vec<f64> = fits.iter().map(|(e, _)| e.max(0.0)).collect();
    let (slope, intercept) = affine_fit(&exponents);
    let mut candidates = vec![FamilyName::B, FamilyName::R1];
    let mut grid: Vec<f64> = a_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    candidates.extend(grid.into_iter().map(|a| FamilyName::Ra { a }));
    candidates.push(FamilyName::Full);
    let family = candidates
        .into_iter()
        .find(|name| RegularScaleFamily::new(*name, Vec::new()).accepts_values(&exponents, params))
        .unwrap_or(FamilyName::Full);
    Ok(Classification { family, slope, intercept, exponents })
}

/// How a one-index family is lifted to two indices `(q, l)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lift {
    /// `N′(q, l) = N(l)`.
    U,
    /// `N′(q, l) = N(q)`.
    Partial,
    Full,
    Bounded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoIndexScaleFamily {
    pub base: RegularScaleFamily,
    pub lift: Lift,
}

impl TwoIndexScaleFamily {
    /// Membership of a two-index table `table[q][l]`: the table must be
    /// dominated by a lifted element of the base family.
    pub fn accepts(&self, table: &[Vec<f64>], params: MembershipParams) -> bool {
        if table.is_empty() || table[0].is_empty() {
            return true;
        }
        let nq = table.len();
        let nl = table[0].len();
        match self.lift {
            Lift::Full => true,
            Lift::Bounded => {
                let max = table.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
                max - table[0][0] <= params.tol
            }
            Lift::U => {
                let dom: Vec<f64> = (0..nl).map(|l| (0..nq).map(|q| table[q][l]).fold(f64::NEG_INFINITY, f64::max)).collect();
                self.base.accepts_values(&dom, params)
            }
            Lift::Partial => {
                let dom: Vec<f64> = (0..nq).map(|q| table[q].iter().cloned().fold(f64::NEG_INFINITY, f64::max)).collect();
                self.base.accepts_values(&dom, params)
            }
        }
    }
}

/// Largest growth of `table[q][l]` above the `q = 0` row. Growth bounds
/// are upper bounds, so only excess over the base row breaks uniformity
/// in `q`.
pub fn q_variation(table: &[Vec<f64>]) -> f64 {
    let mut defect: f64 = 0.0;
    for row in table.iter() {
        for (l, v) in row.iter().enumerate() {
            defect = defect.max(v - table[0][l]);
        }
    }
    defect
}

/// Largest growth of `table[q][l]` above the `l = 0` column.
pub fn l_variation(table: &[Vec<f64>]) -> f64 {
    table
        .iter()
        .flat_map(|row| row.iter().map(move |v| v - row[0]))
        .fold(0.0, f64::max)
}
