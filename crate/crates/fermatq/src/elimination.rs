//! The bound engine: per-field irreducibility thresholds, CM rejection,
//! Frobenius-trace elimination at auxiliary primes, and assembly of the
//! final conditional report.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ellcurve::{cm_status, possible_traces_full_2torsion, CmStatus, EllCurveError};
use crate::forms::{FormsError, NewformDataset, NewformRecord};
use crate::frey::{character_conductor_candidates, predicted_levels, FreyError, LevelIdeal};
use crate::quadint::{
    ray_class_group, PrimeIdealData, QuadIntError, QuadraticField, DEFAULT_ENUM_CAP,
};

#[derive(Debug, Error)]
pub enum EliminationError {
    #[error("ray class exponent {0} outside the supported cases {{1, 2, 4}}")]
    UnsupportedExponent(u64),
    #[error("form {label} has no stored eigenvalue at the prime of norm {norm}")]
    MissingEigenvalue { label: String, norm: u64 },
    #[error("CM elimination not applicable: CM status unknown or absent")]
    NotApplicable,
    #[error("dataset lacks a dimension declaration at a level of norm {norm} dividing a predicted level")]
    IncompleteDataset { norm: u64 },
    #[error("dataset is for d = {got}, pipeline field is d = {expected}")]
    FieldMismatch { expected: i64, got: i64 },
    #[error("auxiliary prime lies over 2 or divides the form level")]
    BadAuxiliaryPrime,
    #[error(transparent)]
    Quad(#[from] QuadIntError),
    #[error(transparent)]
    Curve(#[from] EllCurveError),
    #[error(transparent)]
    Forms(#[from] FormsError),
    #[error(transparent)]
    Frey(#[from] FreyError),
}

/// One case of the irreducibility argument, with the largest prime it
/// fails to exclude.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct IrreducibilityCase {
    pub id: String,
    pub bound: u64,
    pub citation: String,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2;
    while k * k <= n {
        if n % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

fn next_prime_above(n: u64) -> u64 {
    let mut c = n + 1;
    while !is_prime(c) {
        c += 1;
    }
    c
}

fn prime_divisors_i64(n: i64) -> BTreeSet<u64> {
    let mut n = n.unsigned_abs();
    let mut out = BTreeSet::new();
    let mut k = 2u64;
    while k * k <= n {
        if n % k == 0 {
            out.insert(k);
            while n % k == 0 {
                n /= k;
            }
        }
        k += 1;
    }
    if n > 1 {
        out.insert(n);
    }
    out
}

/// The least prime `p₀` such that the mod-`p` Frey representation is
/// irreducible for all `p ≥ p₀`, together with the cases that were
/// excluded to get there.
///
/// Composition: each candidate conductor of the diagonal character feeds a
/// ray class group whose exponent is mapped to a torsion bound (exponent 1
/// → 13, exponent 2 or 4 → 17); a degree-1 prime over 2 adds the split
/// case bound `norm² − 1`.
pub fn irreducibility_threshold(
    field: &QuadraticField,
) -> Result<(u64, Vec<IrreducibilityCase>), EliminationError> {
    let prediction = predicted_levels(field)?;
    let mut cases: Vec<IrreducibilityCase> = Vec::new();

    for level in &prediction.levels {
        let conductor = character_conductor_candidates(field, level)?;
        let exponent = if conductor.factors.is_empty() {
            1
        } else {
            let modulus = conductor.generator(field);
            let structure = ray_class_group(field, &modulus, DEFAULT_ENUM_CAP)?;
            structure.exponent
        };
        let (bound, citation) = match exponent {
            1 => (13, "torsion of elliptic curves over quadratic fields"),
            2 | 4 => (17, "torsion of elliptic curves over quartic fields"),
            e => return Err(EliminationError::UnsupportedExponent(e)),
        };
        let id = format!(
            "ray-class exponent {} at conductor of norm {}",
            exponent,
            conductor.norm()
        );
        if !cases.iter().any(|c| c.id == id) {
            cases.push(IrreducibilityCase {
                id,
                bound,
                citation: citation.to_string(),
            });
        }
    }

    for prime in field.primes_above_2() {
        if prime.residue_degree == 1 {
            let bound = prime.norm * prime.norm - 1;
            let id = format!("split character at degree-1 prime over 2, norm {}", prime.norm);
            if !cases.iter().any(|c| c.id == id) {
                cases.push(IrreducibilityCase {
                    id,
                    bound,
                    citation: "p divides norm² − 1 in the split case".to_string(),
                });
            }
        }
    }

    let max_bound = cases.iter().map(|c| c.bound).max().unwrap_or(2);
    Ok((next_prime_above(max_bound), cases))
}

/// Successful CM rejection of a form.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct CmElimination {
    pub label: String,
    pub reason: String,
}

/// Rejects a form whose attached representation has extra endomorphisms:
/// above the irreducibility threshold the Frey representation is
/// surjective, so it cannot match a CM form.
pub fn eliminate_by_cm(
    field: &QuadraticField,
    form: &NewformRecord,
) -> Result<CmElimination, EliminationError> {
    if form.cm {
        return Ok(CmElimination {
            label: form.label.clone(),
            reason: "form is flagged CM".to_string(),
        });
    }
    if let Some(curve) = &form.curve {
        return match cm_status(field, curve) {
            CmStatus::HasCm => Ok(CmElimination {
                label: form.label.clone(),
                reason: "matched curve has a CM j-invariant".to_string(),
            }),
            CmStatus::NoCm | CmStatus::Unknown => Err(EliminationError::NotApplicable),
        };
    }
    Err(EliminationError::NotApplicable)
}

/// Outcome of trace elimination at one auxiliary prime.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub enum TraceOutcome {
    /// Prime divisors of the obstruction product; exponents outside this
    /// set are excluded by this prime.
    Survivors(BTreeSet<u64>),
    /// The obstruction product vanished; this prime says nothing.
    NoInformation,
}

/// Trace elimination at an auxiliary prime `P` of norm `q`: an exponent
/// `p` survives only if it divides
/// `B = q · ((q+1)² − a_P²) · Π_{a ∈ T(q)} (a_P − a)`,
/// where `T(q)` is the set of traces of curves with full 2-torsion over
/// the residue field. The factor `q` covers `P | p`, the middle factor the
/// multiplicative case `a ≡ ±(q+1)`, and the product the good case.
pub fn eliminate_at_prime(
    field: &QuadraticField,
    form: &NewformRecord,
    prime: &PrimeIdealData,
) -> Result<TraceOutcome, EliminationError> {
    if prime.residue_char == 2 {
        return Err(EliminationError::BadAuxiliaryPrime);
    }
    let g = field.gcd(&prime.generator, &form.level)?;
    if !field.is_unit(&g) {
        return Err(EliminationError::BadAuxiliaryPrime);
    }
    let ap = form
        .eigenvalue(field, prime)
        .ok_or_else(|| EliminationError::MissingEigenvalue {
            label: form.label.clone(),
            norm: prime.norm,
        })?;
    let q = prime.norm as i64;

    let mut factors: Vec<i64> = vec![q, q + 1 - ap, q + 1 + ap];
    for a in possible_traces_full_2torsion(prime.norm, crate::ellcurve::DEFAULT_COUNT_CAP)? {
        factors.push(ap - a);
    }
    if factors.iter().any(|&f| f == 0) {
        return Ok(TraceOutcome::NoInformation);
    }
    // union of prime divisors, factor by factor: each factor is small even
    // though the full product need not be
    let mut survivors = BTreeSet::new();
    for f in factors {
        survivors.extend(prime_divisors_i64(f));
    }
    Ok(TraceOutcome::Survivors(survivors))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub enum FormOutcome {
    EliminatedByCm { reason: String },
    /// Intersection of survivor sets over the auxiliary primes used.
    Eliminated { survivors: BTreeSet<u64>, auxiliary_norms: Vec<u64> },
    /// No auxiliary prime gave information.
    NoInformation,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct FormReport {
    pub label: String,
    pub level_norm: u64,
    pub outcome: FormOutcome,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct LedgerEntry {
    pub exponent: u64,
    pub citation: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct LevelReport {
    /// Canonical generator coordinates of the level ideal.
    pub generator: (i64, i64),
    pub norm: u64,
}

/// The full, deterministic output of the pipeline for one field.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct EliminationReport {
    pub field_d: i64,
    pub predicted_levels: Vec<LevelReport>,
    pub irreducibility_threshold: u64,
    pub irreducibility_cases: Vec<IrreducibilityCase>,
    pub forms: Vec<FormReport>,
    /// Least prime at least the threshold and exceeding every survivor.
    pub p0: u64,
    /// True when no form ended in `NoInformation`.
    pub complete: bool,
    pub small_prime_ledger: Vec<LedgerEntry>,
    pub conditionality: String,
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Auxiliary primes of norm up to this bound are used.
    pub aux_norm_bound: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { aux_norm_bound: 50 }
    }
}

fn small_prime_ledger(d: i64) -> Vec<LedgerEntry> {
    let mut ledger = vec![
        LedgerEntry {
            exponent: 5,
            citation: "Gross–Rohrlich, Fermat quotients over small fields".to_string(),
        },
        LedgerEntry {
            exponent: 7,
            citation: "Gross–Rohrlich, Fermat quotients over small fields".to_string(),
        },
        LedgerEntry {
            exponent: 11,
            citation: "Gross–Rohrlich, Fermat quotients over small fields".to_string(),
        },
        LedgerEntry {
            exponent: 13,
            citation: "Tzermias, degree-13 Fermat points".to_string(),
        },
    ];
    if d == -1 || d == -2 {
        ledger.push(LedgerEntry {
            exponent: 17,
            citation: "Hao–Parry, Fermat over quadratic fields".to_string(),
        });
    }
    ledger
}

/// All divisor ideals of a level, as factorizations over the same primes.
fn divisor_levels(level: &LevelIdeal) -> Vec<LevelIdeal> {
    let mut out = vec![LevelIdeal { factors: Vec::new() }];
    for (prime, e) in &level.factors {
        let mut next = Vec::new();
        for partial in &out {
            for k in 0..=*e {
                let mut factors = partial.factors.clone();
                if k > 0 {
                    factors.push((prime.clone(), k));
                }
                next.push(LevelIdeal { factors });
            }
        }
        out = next;
    }
    out
}

/// Runs CM rejection and trace elimination over every form at every level
/// dividing a predicted level, combines the result with the
/// irreducibility threshold, and attaches the literature ledger for the
/// small exponents the analytic argument does not reach.
pub fn run_pipeline(
    field: &QuadraticField,
    dataset: &NewformDataset,
    config: &PipelineConfig,
) -> Result<EliminationReport, EliminationError> {
    if dataset.d != field.d() {
        return Err(EliminationError::FieldMismatch {
            expected: field.d(),
            got: dataset.d,
        });
    }

    let prediction = predicted_levels(field)?;
    let (threshold, cases) = irreducibility_threshold(field)?;

    // auxiliary primes: odd, unramified in the usable sense, norm-bounded
    let mut aux_primes: Vec<PrimeIdealData> = Vec::new();
    for p in 3..=config.aux_norm_bound {
        if !is_prime(p) {
            continue;
        }
        for (prime, _) in field.split_prime(p) {
            if prime.norm <= config.aux_norm_bound && prime.ram_index == 1 {
                aux_primes.push(prime);
            }
        }
    }
    aux_primes.sort_by_key(|p| (p.norm, p.generator.a.clone(), p.generator.b.clone()));
    aux_primes.dedup_by(|a, b| a.generator == b.generator);

    let mut forms: Vec<FormReport> = Vec::new();
    let mut seen_levels: BTreeSet<(i64, i64)> = BTreeSet::new();
    for level in &prediction.levels {
        for divisor in divisor_levels(level) {
            let gen = divisor.generator(field);
            let key = (
                gen.a.clone().try_into().unwrap_or(i64::MAX),
                gen.b.clone().try_into().unwrap_or(i64::MAX),
            );
            if !seen_levels.insert(key) {
                continue;
            }
            if dataset.dimension_at(field, &gen).is_none() {
                return Err(EliminationError::IncompleteDataset {
                    norm: divisor.norm(),
                });
            }
            for form in dataset.forms_at_level(field, &gen) {
                forms.push(process_form(field, form, &aux_primes)?);
            }
        }
    }

    let mut max_obstruction = 0u64;
    let mut complete = true;
    for f in &forms {
        match &f.outcome {
            FormOutcome::EliminatedByCm { .. } => {}
            FormOutcome::Eliminated { survivors, .. } => {
                if let Some(&m) = survivors.iter().max() {
                    max_obstruction = max_obstruction.max(m);
                }
            }
            FormOutcome::NoInformation => complete = false,
        }
    }
    // least prime at least the threshold and strictly above every survivor
    let p0 = if threshold > max_obstruction {
        threshold
    } else {
        next_prime_above(max_obstruction)
    };

    Ok(EliminationReport {
        field_d: field.d(),
        predicted_levels: prediction
            .levels
            .iter()
            .map(|l| {
                let g = l.generator(field);
                LevelReport {
                    generator: (
                        g.a.clone().try_into().expect("small level generator"),
                        g.b.clone().try_into().expect("small level generator"),
                    ),
                    norm: l.norm(),
                }
            })
            .collect(),
        irreducibility_threshold: threshold,
        irreducibility_cases: cases,
        forms,
        p0,
        complete,
        small_prime_ledger: small_prime_ledger(field.d()),
        conditionality: "conditional on Serre's modularity conjecture for GL(2) over the field"
            .to_string(),
    })
}

fn process_form(
    field: &QuadraticField,
    form: &NewformRecord,
    aux_primes: &[PrimeIdealData],
) -> Result<FormReport, EliminationError> {
    match eliminate_by_cm(field, form) {
        Ok(cm) => {
            return Ok(FormReport {
                label: form.label.clone(),
                level_norm: form.level_norm,
                outcome: FormOutcome::EliminatedByCm { reason: cm.reason },
            });
        }
        Err(EliminationError::NotApplicable) => {}
        Err(e) => return Err(e),
    }

    let mut survivors: Option<BTreeSet<u64>> = None;
    let mut used: Vec<u64> = Vec::new();
    for prime in aux_primes {
        // only primes coprime to the level with a stored eigenvalue help
        let g = field.gcd(&prime.generator, &form.level)?;
        if !field.is_unit(&g) || form.eigenvalue(field, prime).is_none() {
            continue;
        }
        match eliminate_at_prime(field, form, prime)? {
            TraceOutcome::NoInformation => {}
            TraceOutcome::Survivors(s) => {
                used.push(prime.norm);
                survivors = Some(match survivors {
                    None => s,
                    Some(prev) => prev.intersection(&s).copied().collect(),
                });
            }
        }
    }

    let outcome = match survivors {
        Some(s) => FormOutcome::Eliminated {
            survivors: s,
            auxiliary_norms: used,
        },
        None => FormOutcome::NoInformation,
    };
    Ok(FormReport {
        label: form.label.clone(),
        level_norm: form.level_norm,
        outcome,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::parse_newform_file;
    use crate::quadint::make_field;

    #[test]
    fn thresholds_per_field() {
        for (d, expect) in [(-1i64, 19u64), (-2, 19), (-7, 17)] {
            let k = make_field(d).unwrap();
            let (t, cases) = irreducibility_threshold(&k).unwrap();
            assert_eq!(t, expect, "d = {d}");
            assert!(!cases.is_empty());
            assert!(cases.iter().all(|c| c.bound >= 2));
            // the split case over a degree-1 prime above 2 always appears
            assert!(cases.iter().any(|c| c.bound == 3));
        }
    }

    fn dataset_256() -> NewformDataset {
        // eigenvalues are the traces of y² = x³ + x² + x + 1 and its
        // sign-flipped companion at the degree-1 primes of norm ≤ 50
        let k = make_field(-2).unwrap();
        let e2 = crate::ellcurve::EllipticCurveOverK::short(k.elt(1, 0), k.elt(1, 0), k.elt(1, 0));
        let e3 =
            crate::ellcurve::EllipticCurveOverK::short(k.elt(-1, 0), k.elt(1, 0), k.elt(-1, 0));
        let mut text = String::from("FIELD d=-2\n");
        for n in 0..=8u32 {
            let lv = k.canonical_associate(&k.pow(&k.elt(0, 1), u64::from(n)));
            let dim = match n {
                5 => 1,
                8 => 6,
                _ => 0,
            };
            text.push_str(&format!("DIM {},{} NORM {} VALUE {}\n", lv.a, lv.b, 1u64 << n, dim));
        }
        let a5 = k.canonical_associate(&k.pow(&k.elt(0, 1), 5));
        let a8 = k.canonical_associate(&k.pow(&k.elt(0, 1), 8));
        text.push_str(&format!(
            "FORM 32.1-a LEVEL {},{} NORM 32 CM 1 BC 1\nCURVE 0,0 0,0 0,0 1,0 0,0\n",
            a5.a, a5.b
        ));
        for (label, curve) in [("256.1-a", &e2), ("256.1-b", &e3)] {
            text.push_str(&format!(
                "FORM {label} LEVEL {},{} NORM 256 CM 0 BC 1\n",
                a8.a, a8.b
            ));
            text.push_str(&format!(
                "CURVE {},{} {},{} {},{} {},{} {},{}\n",
                curve.a1.a, curve.a1.b, curve.a2.a, curve.a2.b, curve.a3.a, curve.a3.b,
                curve.a4.a, curve.a4.b, curve.a6.a, curve.a6.b
            ));
            for p in [3u64, 11, 17, 19, 41, 43] {
                for (prime, _) in k.split_prime(p) {
                    if prime.residue_degree != 1 || prime.norm > 50 {
                        continue;
                    }
                    let t = crate::ellcurve::trace_of_frobenius(
                        &k,
                        curve,
                        &prime,
                        crate::ellcurve::DEFAULT_COUNT_CAP,
                    )
                    .unwrap();
                    let g = k.canonical_associate(&prime.generator);
                    text.push_str(&format!("AP {},{} NORM {} VALUE {}\n", g.a, g.b, p, t));
                }
            }
        }
        text.push_str("END\n");
        parse_newform_file(&text).unwrap()
    }

    #[test]
    fn trace_elimination_at_norm_3() {
        let k = make_field(-2).unwrap();
        let ds = dataset_256();
        let m1 = k
            .split_prime(3)
            .into_iter()
            .map(|(p, _)| p)
            .find(|p| {
                ds.form_by_label("256.1-a")
                    .unwrap()
                    .eigenvalue(&k, p)
                    .is_some()
            })
            .unwrap();
        let f2 = ds.form_by_label("256.1-a").unwrap();
        let f3 = ds.form_by_label("256.1-b").unwrap();
        assert_eq!(
            eliminate_at_prime(&k, f2, &m1).unwrap(),
            TraceOutcome::Survivors([2, 3].into())
        );
        assert_eq!(
            eliminate_at_prime(&k, f3, &m1).unwrap(),
            TraceOutcome::Survivors([2, 3].into())
        );
        // no stored eigenvalue at the auxiliary prime
        let cm = ds.form_by_label("32.1-a").unwrap();
        assert!(matches!(
            eliminate_at_prime(&k, cm, &m1),
            Err(EliminationError::MissingEigenvalue { .. })
        ));

        // a_P = 0 lies in T(3) = {0}: the obstruction product vanishes
        let g = k.canonical_associate(&m1.generator);
        let text = format!(
            "FIELD d=-2\nFORM cm-like LEVEL {},{} NORM 32 CM 0 BC 1\nAP {},{} NORM 3 VALUE 0\nEND\n",
            {
                let a5 = k.canonical_associate(&k.pow(&k.elt(0, 1), 5));
                a5.a.clone()
            },
            k.canonical_associate(&k.pow(&k.elt(0, 1), 5)).b,
            g.a,
            g.b
        );
        let ds0 = parse_newform_file(&text).unwrap();
        assert_eq!(
            eliminate_at_prime(&k, &ds0.records[0], &m1).unwrap(),
            TraceOutcome::NoInformation
        );
    }

    #[test]
    fn cm_rejection() {
        let k = make_field(-2).unwrap();
        let ds = dataset_256();
        assert!(eliminate_by_cm(&k, ds.form_by_label("32.1-a").unwrap()).is_ok());
        assert!(matches!(
            eliminate_by_cm(&k, ds.form_by_label("256.1-a").unwrap()),
            Err(EliminationError::NotApplicable)
        ));
    }

    #[test]
    fn pipeline_for_q_sqrt_minus_2() {
        let k = make_field(-2).unwrap();
        let ds = dataset_256();
        let report = run_pipeline(&k, &ds, &PipelineConfig::default()).unwrap();
        assert_eq!(report.p0, 19);
        assert!(report.complete);
        assert_eq!(report.forms.len(), 3);
        for f in &report.forms {
            match &f.outcome {
                FormOutcome::EliminatedByCm { .. } => assert_eq!(f.label, "32.1-a"),
                FormOutcome::Eliminated { survivors, .. } => {
                    assert!(survivors.iter().all(|&p| p < 19));
                }
                FormOutcome::NoInformation => panic!("incomplete elimination for {}", f.label),
            }
        }
        assert!(report.small_prime_ledger.iter().any(|l| l.exponent == 17));
    }

    #[test]
    fn pipeline_empty_datasets() {
        for (d, expect) in [(-1i64, 19u64), (-7, 17)] {
            let k = make_field(d).unwrap();
            let mut text = format!("FIELD d={d}\n");
            let prediction = predicted_levels(&k).unwrap();
            let mut seen = BTreeSet::new();
            for level in &prediction.levels {
                for div in divisor_levels(level) {
                    let g = div.generator(&k);
                    if seen.insert((g.a.clone(), g.b.clone())) {
                        text.push_str(&format!(
                            "DIM {},{} NORM {} VALUE 0\n",
                            g.a,
                            g.b,
                            div.norm()
                        ));
                    }
                }
            }
            text.push_str("END\n");
            let ds = parse_newform_file(&text).unwrap();
            let report = run_pipeline(&k, &ds, &PipelineConfig::default()).unwrap();
            assert_eq!(report.p0, expect);
            assert!(report.complete);
            assert!(report.forms.is_empty());
        }
    }

    #[test]
    fn pipeline_input_errors() {
        let k = make_field(-1).unwrap();
        let ds = parse_newform_file("FIELD d=-2\nEND\n").unwrap();
        assert!(matches!(
            run_pipeline(&k, &ds, &PipelineConfig::default()),
            Err(EliminationError::FieldMismatch { .. })
        ));
        // missing divisor-level dimension declarations
        let ds = parse_newform_file("FIELD d=-1\nEND\n").unwrap();
        assert!(matches!(
            run_pipeline(&k, &ds, &PipelineConfig::default()),
            Err(EliminationError::IncompleteDataset { .. })
        ));
    }

    #[test]
    fn report_json_round_trip() {
        let k = make_field(-2).unwrap();
        let ds = dataset_256();
        let report = run_pipeline(&k, &ds, &PipelineConfig::default()).unwrap();
        let json = serde_json::to_string_pretty(&report).unwrap();
        let back: EliminationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
        // determinism
        let json2 =
            serde_json::to_string_pretty(&run_pipeline(&k, &ds, &PipelineConfig::default()).unwrap())
                .unwrap();
        assert_eq!(json, json2);
    }
}
