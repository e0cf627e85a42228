//! Bianchi newform data model: ingestion of eigenvalue files, the
//! base-change level lemma, and curve-to-form matching through Euler
//! factors.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ellcurve::{
    reduction_type, trace_of_frobenius, EllCurveError, EllipticCurveOverK, ReductionKind,
    DEFAULT_COUNT_CAP,
};
use crate::quadint::{AlgebraicInteger, PrimeIdealData, QuadIntError, QuadraticField};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormsError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("form {label}: |a_P| = {value} exceeds 2√{norm} at a good prime")]
    EigenvalueBoundViolation { label: String, norm: u64, value: i64 },
    #[error("duplicate form label {0}")]
    DuplicateLabel(String),
    #[error("level norm is not integral: D² does not divide N₁·N₂")]
    NonIntegralLevel,
    #[error("only {available} comparable primes; at least {required} required")]
    InsufficientData { available: usize, required: usize },
    #[error(transparent)]
    Quad(#[from] QuadIntError),
    #[error(transparent)]
    Curve(#[from] EllCurveError),
}

/// One stored Hecke eigenvalue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApEntry {
    pub prime: AlgebraicInteger,
    pub norm: u64,
    pub value: i64,
}

#[derive(Debug, Clone)]
pub struct NewformRecord {
    pub label: String,
    /// Canonical generator of the level ideal.
    pub level: AlgebraicInteger,
    pub level_norm: u64,
    pub cm: bool,
    pub base_change: bool,
    /// Keyed by the coordinates of the canonical prime generator.
    pub eigenvalues: BTreeMap<(i64, i64), ApEntry>,
    /// Coefficients of a matched elliptic curve, when one is declared.
    pub curve: Option<EllipticCurveOverK>,
}

impl NewformRecord {
    /// Stored eigenvalue at `P`, looked up through the canonical generator.
    pub fn eigenvalue(&self, field: &QuadraticField, prime: &PrimeIdealData) -> Option<i64> {
        let g = field.canonical_associate(&prime.generator);
        let key = small_coords(&g)?;
        self.eigenvalues.get(&key).map(|e| e.value)
    }
}

#[derive(Debug, Clone)]
pub struct DimensionEntry {
    pub level: AlgebraicInteger,
    pub norm: u64,
    pub dimension: u32,
}

/// An immutable, validated eigenvalue dataset for one field.
#[derive(Debug, Clone)]
pub struct NewformDataset {
    pub d: i64,
    pub records: Vec<NewformRecord>,
    pub dimensions: Vec<DimensionEntry>,
    pub provenance: Vec<String>,
}

impl NewformDataset {
    pub fn forms_at_level(&self, field: &QuadraticField, level: &AlgebraicInteger) -> Vec<&NewformRecord> {
        let l = field.canonical_associate(level);
        self.records.iter().filter(|r| r.level == l).collect()
    }

    /// Declared cuspidal dimension at a level, if the file carries one.
    pub fn dimension_at(&self, field: &QuadraticField, level: &AlgebraicInteger) -> Option<u32> {
        let l = field.canonical_associate(level);
        self.dimensions
            .iter()
            .find(|e| e.level == l)
            .map(|e| e.dimension)
    }

    pub fn form_by_label(&self, label: &str) -> Option<&NewformRecord> {
        self.records.iter().find(|r| r.label == label)
    }
}

fn small_coords(x: &AlgebraicInteger) -> Option<(i64, i64)> {
    use num_traits::ToPrimitive;
    Some((x.a.to_i64()?, x.b.to_i64()?))
}

/// Parses the line-oriented newform file format.
///
/// Grammar (one directive per line, `#` starts a comment):
/// ```text
/// FIELD d=<int>
/// PROVENANCE <free text>
/// DIM <a>,<b> NORM <int> VALUE <int>
/// FORM <label> LEVEL <a>,<b> NORM <int> CM <0|1> BC <0|1>
/// AP <a>,<b> NORM <int> VALUE <int>
/// CURVE <a1a>,<a1b> <a2a>,<a2b> <a3a>,<a3b> <a4a>,<a4b> <a6a>,<a6b>
/// END
/// ```
/// `AP` and `CURVE` lines attach to the most recent `FORM`. Ideal
/// generators are written in coordinates with respect to `(1, ω)`.
pub fn parse_newform_file(input: &str) -> Result<NewformDataset, FormsError> {
    let mut field: Option<QuadraticField> = None;
    let mut d = 0i64;
    let mut records: Vec<NewformRecord> = Vec::new();
    let mut dimensions: Vec<DimensionEntry> = Vec::new();
    let mut provenance: Vec<String> = Vec::new();
    let mut ended = false;

    let bad = |line: usize, reason: &str| FormsError::MalformedRecord {
        line,
        reason: reason.to_string(),
    };

    for (idx, raw) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if ended {
            return Err(bad(line_no, "content after END"));
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens[0] {
            "FIELD" => {
                if field.is_some() {
                    return Err(bad(line_no, "duplicate FIELD header"));
                }
                let spec = tokens
                    .get(1)
                    .and_then(|t| t.strip_prefix("d="))
                    .ok_or_else(|| bad(line_no, "expected FIELD d=<int>"))?;
                d = spec
                    .parse()
                    .map_err(|_| bad(line_no, "unreadable field discriminant tag"))?;
                field = Some(crate::quadint::make_field(d)?);
            }
            "PROVENANCE" => {
                provenance.push(line["PROVENANCE".len()..].trim().to_string());
            }
            "DIM" => {
                let k = field
                    .as_ref()
                    .ok_or_else(|| bad(line_no, "DIM before FIELD"))?;
                if tokens.len() != 6 || tokens[2] != "NORM" || tokens[4] != "VALUE" {
                    return Err(bad(line_no, "expected DIM <a>,<b> NORM <int> VALUE <int>"));
                }
                let gen = parse_pair(tokens[1]).ok_or_else(|| bad(line_no, "bad generator"))?;
                let norm: u64 = tokens[3]
                    .parse()
                    .map_err(|_| bad(line_no, "bad norm"))?;
                let dimension: u32 = tokens[5]
                    .parse()
                    .map_err(|_| bad(line_no, "bad dimension"))?;
                let level = k.canonical_associate(&AlgebraicInteger::from_pair(gen.0, gen.1));
                if k.norm(&level) != norm.into() {
                    return Err(bad(line_no, "declared norm disagrees with generator"));
                }
                if dimensions.iter().any(|e| e.level == level) {
                    return Err(bad(line_no, "duplicate DIM for level"));
                }
                dimensions.push(DimensionEntry {
                    level,
                    norm,
                    dimension,
                });
            }
            "FORM" => {
                let k = field
                    .as_ref()
                    .ok_or_else(|| bad(line_no, "FORM before FIELD"))?;
                if tokens.len() != 10
                    || tokens[2] != "LEVEL"
                    || tokens[4] != "NORM"
                    || tokens[6] != "CM"
                    || tokens[8] != "BC"
                {
                    return Err(bad(
                        line_no,
                        "expected FORM <label> LEVEL <a>,<b> NORM <int> CM <0|1> BC <0|1>",
                    ));
                }
                let label = tokens[1].to_string();
                if records.iter().any(|r| r.label == label) {
                    return Err(FormsError::DuplicateLabel(label));
                }
                let gen = parse_pair(tokens[3]).ok_or_else(|| bad(line_no, "bad level"))?;
                let level_norm: u64 =
                    tokens[5].parse().map_err(|_| bad(line_no, "bad norm"))?;
                let level = k.canonical_associate(&AlgebraicInteger::from_pair(gen.0, gen.1));
                if k.norm(&level) != level_norm.into() {
                    return Err(bad(line_no, "declared norm disagrees with level generator"));
                }
                let cm = parse_flag(tokens[7]).ok_or_else(|| bad(line_no, "CM flag"))?;
                let bc = parse_flag(tokens[9]).ok_or_else(|| bad(line_no, "BC flag"))?;
                records.push(NewformRecord {
                    label,
                    level,
                    level_norm,
                    cm,
                    base_change: bc,
                    eigenvalues: BTreeMap::new(),
                    curve: None,
                });
            }
            "AP" => {
                let k = field
                    .as_ref()
                    .ok_or_else(|| bad(line_no, "AP before FIELD"))?;
                let rec = records
                    .last_mut()
                    .ok_or_else(|| bad(line_no, "AP before any FORM"))?;
                if tokens.len() != 6 || tokens[2] != "NORM" || tokens[4] != "VALUE" {
                    return Err(bad(line_no, "expected AP <a>,<b> NORM <int> VALUE <int>"));
                }
                let gen = parse_pair(tokens[1]).ok_or_else(|| bad(line_no, "bad prime"))?;
                let norm: u64 = tokens[3].parse().map_err(|_| bad(line_no, "bad norm"))?;
                let value: i64 = tokens[5]
                    .parse()
                    .map_err(|_| bad(line_no, "bad eigenvalue"))?;
                let prime = k.canonical_associate(&AlgebraicInteger::from_pair(gen.0, gen.1));
                if k.norm(&prime) != norm.into() {
                    return Err(bad(line_no, "declared norm disagrees with prime generator"));
                }
                // eigenvalue primes must be coprime to the level
                let g = k.gcd(&prime, &rec.level)?;
                if !k.is_unit(&g) {
                    return Err(bad(line_no, "eigenvalue prime divides the level"));
                }
                // Ramanujan/Hasse sanity bound at good primes
                if (value as i128) * (value as i128) > 4 * (norm as i128) {
                    return Err(FormsError::EigenvalueBoundViolation {
                        label: rec.label.clone(),
                        norm,
                        value,
                    });
                }
                let key = small_coords(&prime).ok_or_else(|| bad(line_no, "prime too large"))?;
                if rec
                    .eigenvalues
                    .insert(key, ApEntry { prime, norm, value })
                    .is_some()
                {
                    return Err(bad(line_no, "duplicate eigenvalue prime for this form"));
                }
            }
            "CURVE" => {
                let rec = records
                    .last_mut()
                    .ok_or_else(|| bad(line_no, "CURVE before any FORM"))?;
                if tokens.len() != 6 {
                    return Err(bad(line_no, "expected CURVE with five coefficient pairs"));
                }
                let mut coeffs = Vec::with_capacity(5);
                for t in &tokens[1..] {
                    let (a, b) = parse_pair(t).ok_or_else(|| bad(line_no, "bad coefficient"))?;
                    coeffs.push(AlgebraicInteger::from_pair(a, b));
                }
                let [a1, a2, a3, a4, a6]: [AlgebraicInteger; 5] =
                    coeffs.try_into().expect("length checked");
                rec.curve = Some(EllipticCurveOverK::new(a1, a2, a3, a4, a6));
            }
            "END" => {
                ended = true;
            }
            other => {
                return Err(bad(line_no, &format!("unknown directive {other}")));
            }
        }
    }

    if field.is_none() {
        return Err(bad(0, "missing FIELD header"));
    }
    if !ended {
        return Err(bad(input.lines().count(), "missing END"));
    }

    // declared dimensions cap the number of stored newforms at that level
    for dim in &dimensions {
        let count = records.iter().filter(|r| r.level == dim.level).count();
        if count as u32 > dim.dimension {
            return Err(bad(
                0,
                &format!(
                    "{count} forms at level of norm {} but declared dimension {}",
                    dim.norm, dim.dimension
                ),
            ));
        }
    }

    Ok(NewformDataset {
        d,
        records,
        dimensions,
        provenance,
    })
}

fn parse_pair(t: &str) -> Option<(i64, i64)> {
    let (a, b) = t.split_once(',')?;
    Some((a.parse().ok()?, b.parse().ok()?))
}

fn parse_flag(t: &str) -> Option<bool> {
    match t {
        "0" => Some(false),
        "1" => Some(true),
        _ => None,
    }
}

/// Norm of the level of the base change of a classical form of level norm
/// `n1` whose twist has level norm `n2`, over a field of absolute
/// discriminant `disc_abs`: `n1·n2 / disc_abs²`.
pub fn lift_level_norm(n1: u64, n2: u64, disc_abs: u64) -> Result<u64, FormsError> {
    let prod = u128::from(n1) * u128::from(n2);
    let d2 = u128::from(disc_abs) * u128::from(disc_abs);
    if d2 == 0 || prod % d2 != 0 {
        return Err(FormsError::NonIntegralLevel);
    }
    u64::try_from(prod / d2).map_err(|_| FormsError::NonIntegralLevel)
}

#[derive(Debug, Clone)]
pub struct BaseChangeCheck {
    pub p: u64,
    pub prime: PrimeIdealData,
    pub split: bool,
    pub trace: i64,
    pub expected: i64,
}

#[derive(Debug, Clone, Default)]
pub struct BaseChangeReport {
    pub checks: Vec<BaseChangeCheck>,
    pub mismatches: Vec<BaseChangeCheck>,
}

/// Compares Euler factors of a curve over `K` with rational `a_p` data of
/// its conjectural source: at a split prime `p = P·P̄` the trace at `P`
/// must equal `a_p`; at an inert `p` it must equal `a_p² − 2p`. Ramified
/// primes and primes of bad reduction are skipped.
pub fn base_change_consistency(
    field: &QuadraticField,
    rational_ap: &BTreeMap<u64, i64>,
    curve: &EllipticCurveOverK,
    bound: u64,
) -> Result<BaseChangeReport, FormsError> {
    let mut report = BaseChangeReport::default();
    for (&p, &ap) in rational_ap.range(..bound) {
        if p < 3 || p >= bound {
            continue;
        }
        for (prime, mult) in field.split_prime(p) {
            if mult > 1 {
                continue; // ramified
            }
            let info = reduction_type(field, curve, &prime)?;
            if info.kind != ReductionKind::Good {
                continue;
            }
            let Some(trace) = info.trace else { continue };
            let split = prime.residue_degree == 1;
            let expected = if split {
                ap
            } else {
                ap * ap - 2 * (p as i64)
            };
            let check = BaseChangeCheck {
                p,
                prime,
                split,
                trace,
                expected,
            };
            if check.trace != check.expected {
                report.mismatches.push(check.clone());
            }
            report.checks.push(check);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct MatchOutcome {
    pub matched: bool,
    pub compared: usize,
    /// `(prime, curve trace, stored eigenvalue)` of the first disagreement.
    pub first_mismatch: Option<(AlgebraicInteger, i64, i64)>,
}

/// Minimum number of agreeing Euler factors before a match claim means
/// anything.
pub const MIN_MATCH_PRIMES: usize = 5;

/// Checks `trace_of_frobenius(E, P) = a_P(f)` over every stored eigenvalue
/// prime of norm below `bound` at which the curve has good reduction.
pub fn match_curve_to_form(
    field: &QuadraticField,
    curve: &EllipticCurveOverK,
    form: &NewformRecord,
    bound: u64,
) -> Result<MatchOutcome, FormsError> {
    let mut compared = 0usize;
    let mut first_mismatch = None;
    // scan in increasing norm so the reported mismatch is the smallest one
    let mut entries: Vec<&ApEntry> = form.eigenvalues.values().collect();
    entries.sort_by_key(|e| (e.norm, e.prime.a.clone(), e.prime.b.clone()));
    for entry in entries {
        if entry.norm >= bound {
            continue;
        }
        let factors = field.split_prime(prime_char(entry.norm));
        let Some((prime, _)) = factors.into_iter().find(|(p, _)| {
            field.canonical_associate(&p.generator) == field.canonical_associate(&entry.prime)
        }) else {
            continue;
        };
        let info = reduction_type(field, curve, &prime)?;
        if info.kind != ReductionKind::Good {
            continue;
        }
        let trace = match info.trace {
            Some(t) => t,
            None => trace_of_frobenius(field, curve, &prime, DEFAULT_COUNT_CAP)?,
        };
        compared += 1;
        if trace != entry.value && first_mismatch.is_none() {
            first_mismatch = Some((entry.prime.clone(), trace, entry.value));
        }
    }
    if compared < MIN_MATCH_PRIMES {
        return Err(FormsError::InsufficientData {
            available: compared,
            required: MIN_MATCH_PRIMES,
        });
    }
    Ok(MatchOutcome {
        matched: first_mismatch.is_none(),
        compared,
        first_mismatch,
    })
}

/// The residue characteristic underlying a prime power `q = p` or `p²`.
fn prime_char(q: u64) -> u64 {
    let r = (q as f64).sqrt().round() as u64;
    if r * r == q && r > 1 {
        r
    } else {
        q
    }
}
