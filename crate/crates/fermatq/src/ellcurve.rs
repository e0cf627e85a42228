//! Elliptic curves over the supported imaginary quadratic fields:
//! Weierstrass invariants, reduction types at odd primes, brute-force point
//! counts over residue fields, traces of Frobenius, quadratic twists and CM
//! detection.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use crate::quadint::{
    AlgebraicInteger, PrimeIdealData, QuadIntError, QuadraticField, Residue, ResidueRing,
};

/// Default cap on the residue-field size for point counting.
pub const DEFAULT_COUNT_CAP: u64 = 10_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EllCurveError {
    #[error("discriminant is zero: singular curve")]
    SingularCurve,
    #[error("curve has bad reduction at the given prime")]
    BadReduction,
    #[error("residue field size {size} exceeds cap {cap}")]
    CapExceeded { size: u64, cap: u64 },
    #[error("primes above 2 are not handled by reduction_type")]
    UnsupportedPrime,
    #[error("q must be odd")]
    EvenQ,
    #[error("q must be p or p^2 for a prime p")]
    UnsupportedPrimePower,
    #[error("twist parameter is zero")]
    ZeroTwist,
    #[error("j-invariant is not a rational integer")]
    NonRationalJ,
    #[error(transparent)]
    Quad(#[from] QuadIntError),
}

/// A curve `y² + a1·xy + a3·y = x³ + a2·x² + a4·x + a6` with coefficients
/// in `O_K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EllipticCurveOverK {
    pub a1: AlgebraicInteger,
    pub a2: AlgebraicInteger,
    pub a3: AlgebraicInteger,
    pub a4: AlgebraicInteger,
    pub a6: AlgebraicInteger,
}

impl EllipticCurveOverK {
    pub fn new(
        a1: AlgebraicInteger,
        a2: AlgebraicInteger,
        a3: AlgebraicInteger,
        a4: AlgebraicInteger,
        a6: AlgebraicInteger,
    ) -> Self {
        Self { a1, a2, a3, a4, a6 }
    }

    /// Short form `y² = x³ + a2·x² + a4·x + a6`.
    pub fn short(a2: AlgebraicInteger, a4: AlgebraicInteger, a6: AlgebraicInteger) -> Self {
        Self::new(
            AlgebraicInteger::zero(),
            a2,
            AlgebraicInteger::zero(),
            a4,
            a6,
        )
    }

    pub fn coefficients(&self) -> [&AlgebraicInteger; 5] {
        [&self.a1, &self.a2, &self.a3, &self.a4, &self.a6]
    }
}

/// The standard quantities attached to a Weierstrass model; `j` is kept as
/// an exact fraction `(c4³, Δ)` of algebraic integers.
#[derive(Debug, Clone)]
pub struct Invariants {
    pub b2: AlgebraicInteger,
    pub b4: AlgebraicInteger,
    pub b6: AlgebraicInteger,
    pub b8: AlgebraicInteger,
    pub c4: AlgebraicInteger,
    pub c6: AlgebraicInteger,
    pub delta: AlgebraicInteger,
    pub j_num: AlgebraicInteger,
    pub j_den: AlgebraicInteger,
}

/// Computes `(c4, c6, Δ, j)`; errors on `Δ = 0`.
pub fn invariants(
    field: &QuadraticField,
    curve: &EllipticCurveOverK,
) -> Result<Invariants, EllCurveError> {
    let k = field;
    let int = |n: i64| AlgebraicInteger::from_pair(n, 0);
    let [a1, a2, a3, a4, a6] = curve.coefficients();

    let b2 = k.add(&k.mul(a1, a1), &k.mul(&int(4), a2));
    let b4 = k.add(&k.mul(&int(2), a4), &k.mul(a1, a3));
    let b6 = k.add(&k.mul(a3, a3), &k.mul(&int(4), a6));
    let b8 = {
        let t1 = k.mul(&k.mul(a1, a1), a6);
        let t2 = k.mul(&int(4), &k.mul(a2, a6));
        let t3 = k.mul(a1, &k.mul(a3, a4));
        let t4 = k.mul(a2, &k.mul(a3, a3));
        let t5 = k.mul(a4, a4);
        k.sub(&k.add(&k.sub(&k.add(&t1, &t2), &t3), &t4), &t5)
    };
    let c4 = k.sub(&k.mul(&b2, &b2), &k.mul(&int(24), &b4));
    let c6 = {
        let b2cubed = k.mul(&b2, &k.mul(&b2, &b2));
        let t = k.mul(&int(36), &k.mul(&b2, &b4));
        k.sub(&k.sub(&t, &b2cubed), &k.mul(&int(216), &b6))
    };
    let delta = {
        let t1 = k.mul(&k.mul(&b2, &b2), &b8);
        let t2 = k.mul(&int(8), &k.mul(&b4, &k.mul(&b4, &b4)));
        let t3 = k.mul(&int(27), &k.mul(&b6, &b6));
        let t4 = k.mul(&int(9), &k.mul(&b2, &k.mul(&b4, &b6)));
        k.add(&k.sub(&k.sub(&k.neg(&t1), &t2), &t3), &t4)
    };
    if delta.is_zero() {
        return Err(EllCurveError::SingularCurve);
    }
    let j_num = k.mul(&c4, &k.mul(&c4, &c4));
    Ok(Invariants {
        b2,
        b4,
        b6,
        b8,
        c4,
        c6,
        j_den: delta.clone(),
        delta,
        j_num,
    })
}

/// `j` as a rational integer, when it is one.
pub fn rational_j(
    field: &QuadraticField,
    inv: &Invariants,
) -> Result<BigInt, EllCurveError> {
    match field.div_exact(&inv.j_num, &inv.j_den) {
        Some(q) if q.b.is_zero() => Ok(q.a),
        _ => Err(EllCurveError::NonRationalJ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionKind {
    Good,
    Multiplicative,
    Additive,
    /// Residue characteristic 3 with positive minimal valuations of both
    /// `Δ` and `c4`; distinguishing additive from good would need the full
    /// Tate algorithm, which is out of scope.
    AdditiveOrUnknown,
}

#[derive(Debug, Clone)]
pub struct ReductionInfo {
    pub prime: PrimeIdealData,
    pub kind: ReductionKind,
    pub v_delta_min: u32,
    pub v_c4_min: u32,
    pub trace: Option<i64>,
}

/// Reduction type at an odd prime, after minimalizing the invariants by
/// `u`-scaling.
pub fn reduction_type(
    field: &QuadraticField,
    curve: &EllipticCurveOverK,
    prime: &PrimeIdealData,
) -> Result<ReductionInfo, EllCurveError> {
    if prime.residue_char == 2 {
        return Err(EllCurveError::UnsupportedPrime);
    }
    let inv = invariants(field, curve)?;
    const INF: u32 = u32::MAX;
    let v = |x: &AlgebraicInteger| -> u32 {
        if x.is_zero() {
            INF
        } else {
            field.valuation(x, prime).unwrap()
        }
    };
    let v_delta_model = v(&inv.delta);
    let mut v_c4 = v(&inv.c4);
    let mut v_c6 = v(&inv.c6);
    let mut v_delta = v_delta_model;
    while v_c4 >= 4 && v_c6 >= 6 && v_delta >= 12 {
        v_c4 = v_c4.saturating_sub(4).min(INF);
        v_c6 = v_c6.saturating_sub(6).min(INF);
        v_delta -= 12;
    }
    let kind = if v_delta == 0 {
        ReductionKind::Good
    } else if v_c4 == 0 {
        ReductionKind::Multiplicative
    } else if prime.residue_char == 3 {
        ReductionKind::AdditiveOrUnknown
    } else {
        ReductionKind::Additive
    };
    // trace only when the supplied model itself is good at P
    let trace = if kind == ReductionKind::Good
        && v_delta_model == 0
        && prime.norm <= DEFAULT_COUNT_CAP
    {
        Some(trace_of_frobenius(field, curve, prime, DEFAULT_COUNT_CAP)?)
    } else {
        None
    };
    Ok(ReductionInfo {
        prime: prime.clone(),
        kind,
        v_delta_min: v_delta,
        v_c4_min: if v_c4 == INF { 0 } else { v_c4 },
        trace,
    })
}

/// Number of points of the reduced curve over `O_K / P`, the point at
/// infinity included. Brute force: enumerate `x`, solve for `y` through a
/// precomputed square table (odd characteristic) or by direct enumeration
/// (characteristic 2).
pub fn count_points(
    field: &QuadraticField,
    curve: &EllipticCurveOverK,
    prime: &PrimeIdealData,
    cap: u64,
) -> Result<u64, EllCurveError> {
    if prime.norm > cap {
        return Err(EllCurveError::CapExceeded {
            size: prime.norm,
            cap,
        });
    }
    let inv = invariants(field, curve)?;
    if field.valuation(&inv.delta, prime).unwrap() != 0 {
        return Err(EllCurveError::BadReduction);
    }
    let ring = ResidueRing::prime_power(field, prime, 1, cap.max(prime.norm))?;
    let a1 = ring.reduce(&curve.a1);
    let a2 = ring.reduce(&curve.a2);
    let a3 = ring.reduce(&curve.a3);
    let a4 = ring.reduce(&curve.a4);
    let a6 = ring.reduce(&curve.a6);
    let q = prime.norm;

    let affine = if prime.residue_char == 2 {
        let elems: Vec<Residue> = ring.elements().collect();
        let mut n = 0u64;
        for &x in &elems {
            for &y in &elems {
                let lhs = ring.add(
                    ring.mul(y, y),
                    ring.add(ring.mul(a1, ring.mul(x, y)), ring.mul(a3, y)),
                );
                let x2 = ring.mul(x, x);
                let rhs = ring.add(
                    ring.mul(x, x2),
                    ring.add(ring.mul(a2, x2), ring.add(ring.mul(a4, x), a6)),
                );
                if lhs == rhs {
                    n += 1;
                }
            }
        }
        n
    } else {
        // square table: sqcnt[z²] = number of square roots of z²
        let mut sqcnt: HashMap<Residue, u64> = HashMap::new();
        for z in ring.elements() {
            *sqcnt.entry(ring.mul(z, z)).or_insert(0) += 1;
        }
        // completing the square needs 1/2
        let two = ring.reduce(&AlgebraicInteger::from_pair(2, 0));
        let inv2 = ring.pow(two, q - 2);
        debug_assert_eq!(ring.mul(two, inv2), ring.one());
        let mut n = 0u64;
        for x in ring.elements() {
            let x2 = ring.mul(x, x);
            let rhs = ring.add(
                ring.mul(x, x2),
                ring.add(ring.mul(a2, x2), ring.add(ring.mul(a4, x), a6)),
            );
            let half_lin = ring.mul(inv2, ring.add(ring.mul(a1, x), a3));
            let w = ring.add(rhs, ring.mul(half_lin, half_lin));
            n += sqcnt.get(&w).copied().unwrap_or(0);
        }
        n
    };
    let total = affine + 1;
    // Hasse bound sanity
    debug_assert!({
        let t = q as i64 + 1 - total as i64;
        (t * t) as u64 <= 4 * q
    });
    Ok(total)
}

/// `norm(P) + 1 - #E(O_K/P)` for a prime of good reduction.
pub fn trace_of_frobenius(
    field: &QuadraticField,
    curve: &EllipticCurveOverK,
    prime: &PrimeIdealData,
    cap: u64,
) -> Result<i64, EllCurveError> {
    let n = count_points(field, curve, prime, cap)?;
    Ok(prime.norm as i64 + 1 - n as i64)
}

/// The exact set of Frobenius traces realized over `F_q` by curves
/// `y² = x(x-A)(x+B)` with distinct roots, i.e. curves with full rational
/// 2-torsion, by exhaustive enumeration of `(A, B)`.
pub fn possible_traces_full_2torsion(q: u64, cap: u64) -> Result<BTreeSet<i64>, EllCurveError> {
    if q % 2 == 0 {
        return Err(EllCurveError::EvenQ);
    }
    if q > cap {
        return Err(EllCurveError::CapExceeded { size: q, cap });
    }
    let gf = Gf::new(q).ok_or(EllCurveError::UnsupportedPrimePower)?;
    let elems: Vec<GfElt> = gf.elements();
    let mut sqcnt: HashMap<GfElt, u64> = HashMap::new();
    for &z in &elems {
        *sqcnt.entry(gf.mul(z, z)).or_insert(0) += 1;
    }
    let mut out = BTreeSet::new();
    for &a in &elems {
        if a == gf.zero() {
            continue;
        }
        for &b in &elems {
            if b == gf.zero() || gf.add(a, b) == gf.zero() {
                continue;
            }
            let mut affine = 0u64;
            for &x in &elems {
                let rhs = gf.mul(x, gf.mul(gf.sub(x, a), gf.add(x, b)));
                affine += sqcnt.get(&rhs).copied().unwrap_or(0);
            }
            out.insert(q as i64 + 1 - (affine as i64 + 1));
        }
    }
    Ok(out)
}

/// Quadratic twist by `λ`, on the 2-isogeny-free model
/// `y² = x³ + λ·b2·x² + λ²·8·b4·x + λ³·16·b6`; preserves `j`.
pub fn quadratic_twist(
    field: &QuadraticField,
    curve: &EllipticCurveOverK,
    lambda: &AlgebraicInteger,
) -> Result<EllipticCurveOverK, EllCurveError> {
    if lambda.is_zero() {
        return Err(EllCurveError::ZeroTwist);
    }
    let inv = invariants(field, curve)?;
    let l2 = field.mul(lambda, lambda);
    let l3 = field.mul(&l2, lambda);
    let int = |n: i64| AlgebraicInteger::from_pair(n, 0);
    Ok(EllipticCurveOverK::short(
        field.mul(lambda, &inv.b2),
        field.mul(&l2, &field.mul(&int(8), &inv.b4)),
        field.mul(&l3, &field.mul(&int(16), &inv.b6)),
    ))
}

/// The thirteen rational j-invariants of elliptic curves with complex
/// multiplication.
pub fn cm_j_invariants() -> [BigInt; 13] {
    [
        BigInt::from(0),
        BigInt::from(1728),
        BigInt::from(-3375),
        BigInt::from(8000),
        BigInt::from(54000),
        BigInt::from(287496),
        BigInt::from(-32768),
        BigInt::from(16581375),
        BigInt::from(-884736),
        BigInt::from(-12288000),
        BigInt::from(-884736000),
        BigInt::from(-147197952000i64),
        BigInt::from(-262537412640768000i64),
    ]
}

pub fn has_cm_j(j: &BigInt) -> bool {
    cm_j_invariants().contains(j)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmStatus {
    HasCm,
    NoCm,
    /// `j` not a rational integer; the rational CM list does not apply.
    Unknown,
}

pub fn cm_status(field: &QuadraticField, curve: &EllipticCurveOverK) -> CmStatus {
    match invariants(field, curve).and_then(|inv| rational_j(field, &inv)) {
        Ok(j) => {
            if has_cm_j(&j) {
                CmStatus::HasCm
            } else {
                CmStatus::NoCm
            }
        }
        Err(_) => CmStatus::Unknown,
    }
}

/// `F_p` or `F_{p²}` with element-wise arithmetic, for the full-2-torsion
/// trace enumeration. Quadratic extensions are `F_p(θ)` with `θ² = n` for
/// the smallest non-residue `n`.
struct Gf {
    p: u64,
    deg: u32,
    nonres: u64,
}

type GfElt = (u64, u64);

impl Gf {
    fn new(q: u64) -> Option<Self> {
        if is_prime(q) {
            return Some(Self {
                p: q,
                deg: 1,
                nonres: 0,
            });
        }
        let p = (q as f64).sqrt().round() as u64;
        if p * p != q || !is_prime(p) || p == 2 {
            return None;
        }
        let squares: std::collections::HashSet<u64> = (0..p).map(|x| x * x % p).collect();
        let nonres = (2..p).find(|n| !squares.contains(n))?;
        Some(Self { p, deg: 2, nonres })
    }

    fn zero(&self) -> GfElt {
        (0, 0)
    }

    fn elements(&self) -> Vec<GfElt> {
        if self.deg == 1 {
            (0..self.p).map(|u| (u, 0)).collect()
        } else {
            (0..self.p)
                .flat_map(|u| (0..self.p).map(move |v| (u, v)))
                .collect()
        }
    }

    fn add(&self, a: GfElt, b: GfElt) -> GfElt {
        ((a.0 + b.0) % self.p, (a.1 + b.1) % self.p)
    }

    fn sub(&self, a: GfElt, b: GfElt) -> GfElt {
        (
            (a.0 + self.p - b.0) % self.p,
            (a.1 + self.p - b.1) % self.p,
        )
    }

    fn mul(&self, a: GfElt, b: GfElt) -> GfElt {
        if self.deg == 1 {
            (a.0 * b.0 % self.p, 0)
        } else {
            // (u1 + v1 θ)(u2 + v2 θ), θ² = nonres
            let u = (a.0 * b.0 + a.1 * b.1 % self.p * self.nonres) % self.p;
            let v = (a.0 * b.1 + a.1 * b.0) % self.p;
            (u, v)
        }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}
