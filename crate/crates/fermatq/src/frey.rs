//! Frey curves attached to putative Fermat solutions, semistability
//! checking away from the primes over 2, and the predicted Serre levels at
//! the primes over 2.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::ellcurve::{invariants, EllCurveError, EllipticCurveOverK};
use crate::localfields::{
    quad_char_conductor_exponent, unit_square_cokernel, CokernelReport, LocalFieldsError,
};
use crate::quadint::{
    AlgebraicInteger, PrimeIdealData, QuadIntError, QuadraticField, DEFAULT_ENUM_CAP,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FreyError {
    #[error("trivial triple: a·b·c = 0")]
    TrivialTriple,
    #[error("triple is not coprime")]
    NotCoprime,
    #[error("exact triple does not satisfy a^p + b^p + c^p = 0")]
    NotASolution,
    #[error("level has odd wild part; inconsistent input")]
    OddWildPart,
    #[error(transparent)]
    Quad(#[from] QuadIntError),
    #[error(transparent)]
    Curve(#[from] EllCurveError),
}

/// A triple `(a, b, c)` with exponent `p`. Synthetic triples skip the
/// Fermat identity and exist only to exercise the unconditional parts of
/// the machinery.
#[derive(Debug, Clone)]
pub struct FermatTriple {
    pub a: AlgebraicInteger,
    pub b: AlgebraicInteger,
    pub c: AlgebraicInteger,
    pub exponent: u64,
    pub synthetic: bool,
}

impl FermatTriple {
    pub fn synthetic(
        a: AlgebraicInteger,
        b: AlgebraicInteger,
        c: AlgebraicInteger,
        exponent: u64,
    ) -> Self {
        Self {
            a,
            b,
            c,
            exponent,
            synthetic: true,
        }
    }

    /// An exact solution; the sum identity is verified.
    pub fn exact(
        field: &QuadraticField,
        a: AlgebraicInteger,
        b: AlgebraicInteger,
        c: AlgebraicInteger,
        exponent: u64,
    ) -> Result<Self, FreyError> {
        let sum = field.add(
            &field.pow(&a, exponent),
            &field.add(&field.pow(&b, exponent), &field.pow(&c, exponent)),
        );
        if !sum.is_zero() {
            return Err(FreyError::NotASolution);
        }
        Ok(Self {
            a,
            b,
            c,
            exponent,
            synthetic: false,
        })
    }

    pub fn product_is_zero(&self) -> bool {
        self.a.is_zero() || self.b.is_zero() || self.c.is_zero()
    }
}

/// Divides out `gcd(a, gcd(b, c))` and unit-normalizes the coordinates.
pub fn normalize_solution(
    field: &QuadraticField,
    t: &FermatTriple,
) -> Result<FermatTriple, FreyError> {
    if t.product_is_zero() {
        return Err(FreyError::TrivialTriple);
    }
    let g = field.gcd(&t.a, &field.gcd(&t.b, &t.c)?)?;
    let div = |x: &AlgebraicInteger| field.div_exact(x, &g).expect("gcd divides all coordinates");
    Ok(FermatTriple {
        a: div(&t.a),
        b: div(&t.b),
        c: div(&t.c),
        exponent: t.exponent,
        synthetic: t.synthetic,
    })
}

pub fn is_coprime(field: &QuadraticField, t: &FermatTriple) -> bool {
    !t.product_is_zero()
        && field
            .gcd(&t.a, &field.gcd(&t.b, &t.c).unwrap())
            .map(|g| field.is_unit(&g))
            .unwrap_or(false)
}

/// The curve `Y² = X(X - a^p)(X + b^p)`.
pub fn frey_curve(
    field: &QuadraticField,
    t: &FermatTriple,
) -> Result<EllipticCurveOverK, FreyError> {
    if t.product_is_zero() {
        return Err(FreyError::Curve(EllCurveError::SingularCurve));
    }
    let ap = field.pow(&t.a, t.exponent);
    let bp = field.pow(&t.b, t.exponent);
    // X(X - A)(X + B) = X³ + (B - A)X² - AB·X
    let a2 = field.sub(&bp, &ap);
    let a4 = field.neg(&field.mul(&ap, &bp));
    let curve = EllipticCurveOverK::short(a2, a4, AlgebraicInteger::zero());
    // guards against a^p = -b^p (c = 0 in the exact world)
    invariants(field, &curve)?;
    Ok(curve)
}

/// `c4 = 2⁴(b^{2p} - a^p c^p)`, the closed form the Frey model satisfies.
pub fn frey_c4_formula(field: &QuadraticField, t: &FermatTriple) -> AlgebraicInteger {
    let ap = field.pow(&t.a, t.exponent);
    let bp = field.pow(&t.b, t.exponent);
    let cp = field.pow(&t.c, t.exponent);
    let b2p = field.mul(&bp, &bp);
    field.mul(
        &AlgebraicInteger::from_pair(16, 0),
        &field.sub(&b2p, &field.mul(&ap, &cp)),
    )
}

/// `Δ = 2⁴(abc)^{2p}`.
pub fn frey_delta_formula(field: &QuadraticField, t: &FermatTriple) -> AlgebraicInteger {
    let abc = field.mul(&t.a, &field.mul(&t.b, &t.c));
    let pow = field.pow(&abc, 2 * t.exponent);
    field.mul(&AlgebraicInteger::from_pair(16, 0), &pow)
}

/// Per-prime semistability data for an odd prime away from 2.
#[derive(Debug, Clone)]
pub struct SemistabilityEntry {
    pub prime: PrimeIdealData,
    pub v_delta: u32,
    pub v_c4: u32,
    pub multiplicative: bool,
    /// For exact triples: `p | v(Δ)`. Synthetic triples are checked
    /// against `2p | v(Δ)` at primes dividing `ab` and `2 | v(Δ)` at the
    /// remaining primes, which is what the model guarantees without the
    /// sum identity.
    pub exponent_divides: bool,
}

#[derive(Debug, Clone)]
pub struct SemistabilityReport {
    pub entries: Vec<SemistabilityEntry>,
    /// Entries failing multiplicativity or the divisibility requirement;
    /// must be empty for exact triples.
    pub violations: Vec<SemistabilityEntry>,
}

/// Checks semistability of the Frey curve at every odd prime dividing
/// `norm(abc)` outside `S`, and the divisibility of `v(Δ)` by the exponent.
pub fn semistability_report(
    field: &QuadraticField,
    t: &FermatTriple,
) -> Result<SemistabilityReport, FreyError> {
    if !is_coprime(field, t) {
        return Err(FreyError::NotCoprime);
    }
    let curve = frey_curve(field, t)?;
    let inv = invariants(field, &curve)?;
    // Δ = 16 a^{2p} b^{2p} (a^p + b^p)², so its odd prime support is that
    // of a·b·(a^p + b^p); for exact triples the last factor is ±c^p.
    let ap_bp = field.add(
        &field.pow(&t.a, t.exponent),
        &field.pow(&t.b, t.exponent),
    );
    let support = field.mul(&t.a, &field.mul(&t.b, &ap_bp));
    let nsupport = field.norm(&support).abs();

    let mut entries = Vec::new();
    let mut violations = Vec::new();
    for q in odd_prime_divisors(&nsupport) {
        for (prime, _) in field.split_prime(q) {
            let v_delta = field.valuation(&inv.delta, &prime).unwrap();
            if v_delta == 0 {
                continue;
            }
            let v_c4 = if inv.c4.is_zero() {
                u32::MAX
            } else {
                field.valuation(&inv.c4, &prime).unwrap()
            };
            let divisor = if !t.synthetic {
                t.exponent
            } else if field.valuation(&t.a, &prime).unwrap() > 0
                || field.valuation(&t.b, &prime).unwrap() > 0
            {
                2 * t.exponent
            } else {
                2
            };
            let entry = SemistabilityEntry {
                prime,
                v_delta,
                v_c4,
                multiplicative: v_c4 == 0,
                exponent_divides: u64::from(v_delta) % divisor == 0,
            };
            if !entry.multiplicative || !entry.exponent_divides {
                violations.push(entry.clone());
            }
            entries.push(entry);
        }
    }
    Ok(SemistabilityReport {
        entries,
        violations,
    })
}

fn odd_prime_divisors(n: &BigInt) -> Vec<u64> {
    use num_integer::Integer;
    let mut n = n.abs();
    let mut out = Vec::new();
    let two = BigInt::from(2);
    while n.is_even() {
        n /= &two;
    }
    let mut q = 3u64;
    loop {
        let qb = BigInt::from(q);
        if &qb * &qb > n {
            break;
        }
        if (&n % &qb).is_zero() {
            out.push(q);
            while (&n % &qb).is_zero() {
                n /= &qb;
            }
        }
        q += 2;
    }
    if n > BigInt::one() {
        out.push(n.to_u64().expect("remaining cofactor fits in u64"));
    }
    out
}

/// A level ideal supported on the primes over 2, kept as a factorization.
#[derive(Debug, Clone)]
pub struct LevelIdeal {
    pub factors: Vec<(PrimeIdealData, u32)>,
}

impl LevelIdeal {
    pub fn generator(&self, field: &QuadraticField) -> AlgebraicInteger {
        let mut g = AlgebraicInteger::one();
        for (p, e) in &self.factors {
            g = field.mul(&g, &field.pow(&p.generator, u64::from(*e)));
        }
        field.canonical_associate(&g)
    }

    pub fn norm(&self) -> u64 {
        self.factors
            .iter()
            .map(|(p, e)| p.norm.pow(*e))
            .product()
    }

    pub fn exponent_of(&self, prime: &PrimeIdealData) -> u32 {
        self.factors
            .iter()
            .find(|(p, _)| p.generator == prime.generator)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }
}

/// Audit evidence attached to a level prediction: the unit/square cokernel
/// at `P^(2e+1)` and the largest conductor exponent over its
/// representatives.
#[derive(Debug, Clone)]
pub struct LevelAudit {
    pub prime: PrimeIdealData,
    pub cokernel: CokernelReport,
    pub max_conductor_exponent: u32,
}

#[derive(Debug, Clone)]
pub struct LevelPrediction {
    pub field_d: i64,
    pub levels: Vec<LevelIdeal>,
    pub audit: Vec<LevelAudit>,
}

/// Predicted Serre conductors of the Frey representation at the primes
/// over 2, keyed on the field, with the supporting local computation run
/// and attached as audit evidence.
pub fn predicted_levels(field: &QuadraticField) -> Result<LevelPrediction, FreyError> {
    let s = field.primes_above_2();
    let levels = match field.d() {
        -1 | -2 => {
            debug_assert_eq!(s.len(), 1);
            vec![LevelIdeal {
                factors: vec![(s[0].clone(), 8)],
            }]
        }
        -7 => {
            debug_assert_eq!(s.len(), 2);
            vec![
                LevelIdeal {
                    factors: vec![(s[0].clone(), 4), (s[1].clone(), 1)],
                },
                LevelIdeal {
                    factors: vec![(s[0].clone(), 1), (s[1].clone(), 4)],
                },
            ]
        }
        d => return Err(FreyError::Quad(QuadIntError::UnsupportedField(d))),
    };

    let mut audit = Vec::new();
    for prime in &s {
        let e = prime.ram_index;
        let modulus = field.pow(&prime.generator, u64::from(2 * e + 1));
        let cokernel = unit_square_cokernel(field, &modulus, DEFAULT_ENUM_CAP)?;
        let max_conductor_exponent = cokernel
            .representatives
            .iter()
            .map(|l| match quad_char_conductor_exponent(field, l, prime) {
                Ok(v) => v,
                Err(LocalFieldsError::NonUnit) => unreachable!("representatives are units"),
                Err(LocalFieldsError::Quad(e)) => panic!("cap exceeded in audit: {e}"),
            })
            .max()
            .unwrap_or(0);
        audit.push(LevelAudit {
            prime: prime.clone(),
            cokernel,
            max_conductor_exponent,
        });
    }

    Ok(LevelPrediction {
        field_d: field.d(),
        levels,
        audit,
    })
}

/// Candidate conductors for the diagonal character `θ` of a hypothetical
/// reducible Frey representation: the wild part halves, the tame part of a
/// character's conductor exponent is at most 1 and vanishes in the cases in
/// play.
pub fn character_conductor_candidates(
    _field: &QuadraticField,
    level: &LevelIdeal,
) -> Result<LevelIdeal, FreyError> {
    let mut factors = Vec::new();
    for (prime, v) in &level.factors {
        let exponent = match v {
            0 => 0,
            1 | 2 => 0,
            v if (*v - 2) % 2 == 0 => (*v - 2) / 2 + 1,
            _ => return Err(FreyError::OddWildPart),
        };
        if exponent > 0 {
            factors.push((prime.clone(), exponent));
        }
    }
    Ok(LevelIdeal { factors })
}
