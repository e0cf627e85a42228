//! Exact arithmetic in the ring of integers `O_K` of an imaginary quadratic
//! field of class number one.
//!
//! Only the fields with `d` in `{-1, -2, -7}` are supported. Elements are
//! pairs `a + b·ω` where `ω = √d` for `d ≡ 2, 3 (mod 4)` and
//! `ω = (1 + √d)/2` for `d ≡ 1 (mod 4)`. All three fields are norm-Euclidean,
//! so ideals are represented by a single canonical generator.

mod residue;

pub use residue::{
    abelian_structure, ray_class_group, AbelianGroupStructure, QuotientGroup, Residue, ResidueRing,
};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Default cap on residue-ring enumeration (number of elements).
pub const DEFAULT_ENUM_CAP: u64 = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QuadIntError {
    #[error("unsupported field d = {0}; supported: -1, -2, -7")]
    UnsupportedField(i64),
    #[error("gcd(0, 0) is undefined")]
    BothZero,
    #[error("valuation of zero is undefined")]
    ZeroElement,
    #[error("enumeration cap exceeded: need {required} elements, cap is {cap}")]
    CapExceeded { required: u128, cap: u64 },
}

/// Basis flag: which algebraic integer `ω` generates `O_K` over `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaKind {
    /// `ω = √d`, used when `d ≡ 2, 3 (mod 4)`.
    SqrtD,
    /// `ω = (1 + √d)/2`, used when `d ≡ 1 (mod 4)`.
    HalfOnePlusSqrtD,
}

/// An element `a + b·ω` of `O_K`, with arbitrary-precision coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AlgebraicInteger {
    pub a: BigInt,
    pub b: BigInt,
}

impl AlgebraicInteger {
    pub fn new(a: BigInt, b: BigInt) -> Self {
        Self { a, b }
    }

    pub fn from_pair(a: i64, b: i64) -> Self {
        Self {
            a: BigInt::from(a),
            b: BigInt::from(b),
        }
    }

    pub fn zero() -> Self {
        Self::from_pair(0, 0)
    }

    pub fn one() -> Self {
        Self::from_pair(1, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// Coordinates as `i64`, when they fit.
    pub fn to_pair(&self) -> Option<(i64, i64)> {
        Some((i64::try_from(&self.a).ok()?, i64::try_from(&self.b).ok()?))
    }
}

impl From<i64> for AlgebraicInteger {
    fn from(n: i64) -> Self {
        Self::from_pair(n, 0)
    }
}

/// A maximal ideal of `O_K`, given by a canonical principal generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeIdealData {
    pub generator: AlgebraicInteger,
    pub residue_char: u64,
    pub residue_degree: u32,
    pub ram_index: u32,
    pub norm: u64,
}

/// One of `Q(i)`, `Q(√-2)`, `Q(√-7)`, with its integral basis and unit group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticField {
    d: i64,
    disc: i64,
    omega_kind: OmegaKind,
    units: Vec<AlgebraicInteger>,
}

/// Constructs the field for squarefree negative `d`; only `-1`, `-2`, `-7`
/// are accepted.
pub fn make_field(d: i64) -> Result<QuadraticField, QuadIntError> {
    QuadraticField::new(d)
}

impl QuadraticField {
    pub fn new(d: i64) -> Result<Self, QuadIntError> {
        if !matches!(d, -1 | -2 | -7) {
            return Err(QuadIntError::UnsupportedField(d));
        }
        let (omega_kind, disc) = if d.rem_euclid(4) == 1 {
            (OmegaKind::HalfOnePlusSqrtD, d)
        } else {
            (OmegaKind::SqrtD, 4 * d)
        };
        let units = if d == -1 {
            vec![
                AlgebraicInteger::from_pair(1, 0),
                AlgebraicInteger::from_pair(-1, 0),
                AlgebraicInteger::from_pair(0, 1),
                AlgebraicInteger::from_pair(0, -1),
            ]
        } else {
            vec![
                AlgebraicInteger::from_pair(1, 0),
                AlgebraicInteger::from_pair(-1, 0),
            ]
        };
        Ok(Self {
            d,
            disc,
            omega_kind,
            units,
        })
    }

    pub fn d(&self) -> i64 {
        self.d
    }

    pub fn disc(&self) -> i64 {
        self.disc
    }

    pub fn omega_kind(&self) -> OmegaKind {
        self.omega_kind
    }

    pub fn units(&self) -> &[AlgebraicInteger] {
        &self.units
    }

    /// For `ω = (1+√d)/2`: the integer `(d-1)/4` with `ω² = ω + (d-1)/4`.
    fn omega_sq_const(&self) -> i64 {
        debug_assert_eq!(self.omega_kind, OmegaKind::HalfOnePlusSqrtD);
        (self.d - 1) / 4
    }

    pub fn elt(&self, a: i64, b: i64) -> AlgebraicInteger {
        AlgebraicInteger::from_pair(a, b)
    }

    pub fn add(&self, x: &AlgebraicInteger, y: &AlgebraicInteger) -> AlgebraicInteger {
        AlgebraicInteger::new(&x.a + &y.a, &x.b + &y.b)
    }

    pub fn sub(&self, x: &AlgebraicInteger, y: &AlgebraicInteger) -> AlgebraicInteger {
        AlgebraicInteger::new(&x.a - &y.a, &x.b - &y.b)
    }

    pub fn neg(&self, x: &AlgebraicInteger) -> AlgebraicInteger {
        AlgebraicInteger::new(-&x.a, -&x.b)
    }

    pub fn mul(&self, x: &AlgebraicInteger, y: &AlgebraicInteger) -> AlgebraicInteger {
        match self.omega_kind {
            OmegaKind::SqrtD => AlgebraicInteger::new(
                &x.a * &y.a + BigInt::from(self.d) * &x.b * &y.b,
                &x.a * &y.b + &x.b * &y.a,
            ),
            OmegaKind::HalfOnePlusSqrtD => AlgebraicInteger::new(
                &x.a * &y.a + BigInt::from(self.omega_sq_const()) * &x.b * &y.b,
                &x.a * &y.b + &x.b * &y.a + &x.b * &y.b,
            ),
        }
    }

    pub fn pow(&self, x: &AlgebraicInteger, n: u64) -> AlgebraicInteger {
        let mut acc = AlgebraicInteger::one();
        for _ in 0..n {
            acc = self.mul(&acc, x);
        }
        acc
    }

    pub fn conj(&self, x: &AlgebraicInteger) -> AlgebraicInteger {
        match self.omega_kind {
            OmegaKind::SqrtD => AlgebraicInteger::new(x.a.clone(), -&x.b),
            OmegaKind::HalfOnePlusSqrtD => AlgebraicInteger::new(&x.a + &x.b, -&x.b),
        }
    }

    /// The field norm `x · x̄`, a nonnegative rational integer.
    pub fn norm(&self, x: &AlgebraicInteger) -> BigInt {
        match self.omega_kind {
            OmegaKind::SqrtD => &x.a * &x.a - BigInt::from(self.d) * &x.b * &x.b,
            OmegaKind::HalfOnePlusSqrtD => {
                &x.a * &x.a
                    + &x.a * &x.b
                    + BigInt::from((1 - self.d) / 4) * &x.b * &x.b
            }
        }
    }

    pub fn is_unit(&self, x: &AlgebraicInteger) -> bool {
        self.norm(x).is_one()
    }

    /// Exact division: `Some(x / y)` when `y | x` in `O_K`.
    pub fn div_exact(&self, x: &AlgebraicInteger, y: &AlgebraicInteger) -> Option<AlgebraicInteger> {
        if y.is_zero() {
            return None;
        }
        let num = self.mul(x, &self.conj(y));
        let den = self.norm(y);
        let (qa, ra) = num.a.div_rem(&den);
        let (qb, rb) = num.b.div_rem(&den);
        if ra.is_zero() && rb.is_zero() {
            Some(AlgebraicInteger::new(qa, qb))
        } else {
            None
        }
    }

    pub fn divides(&self, y: &AlgebraicInteger, x: &AlgebraicInteger) -> bool {
        self.div_exact(x, y).is_some()
    }

    /// Euclidean division: returns `(q, r)` with `x = q·y + r` and
    /// `N(r) < N(y)`. The quotient is the nearest lattice point to `x/y`,
    /// ties rounded toward the smaller coordinate; if coordinate rounding
    /// does not shrink the norm (possible for `d = -7`), the neighbouring
    /// lattice points are scanned.
    pub fn div_rem(
        &self,
        x: &AlgebraicInteger,
        y: &AlgebraicInteger,
    ) -> (AlgebraicInteger, AlgebraicInteger) {
        assert!(!y.is_zero(), "division by zero");
        let num = self.mul(x, &self.conj(y));
        let den = self.norm(y);
        let q0 = AlgebraicInteger::new(
            round_half_down(&num.a, &den),
            round_half_down(&num.b, &den),
        );
        let ny = self.norm(y);
        let mut best: Option<(AlgebraicInteger, AlgebraicInteger, BigInt)> = None;
        for da in -1..=1i64 {
            for db in -1..=1i64 {
                let q = self.add(&q0, &AlgebraicInteger::from_pair(da, db));
                let r = self.sub(x, &self.mul(&q, y));
                let nr = self.norm(&r);
                match &best {
                    Some((_, _, n)) if *n <= nr => {}
                    _ => best = Some((q, r, nr)),
                }
            }
        }
        let (q, r, nr) = best.unwrap();
        debug_assert!(nr < ny, "Euclidean division failed to reduce the norm");
        (q, r)
    }

    /// Canonical representative among the associates of `x`: the
    /// lexicographically smallest `(a, b)` with `a > 0`, or `a = 0, b > 0`.
    pub fn canonical_associate(&self, x: &AlgebraicInteger) -> AlgebraicInteger {
        if x.is_zero() {
            return x.clone();
        }
        self.units
            .iter()
            .map(|u| self.mul(x, u))
            .filter(|y| y.a.is_positive() || (y.a.is_zero() && y.b.is_positive()))
            .min_by(|p, q| (&p.a, &p.b).cmp(&(&q.a, &q.b)))
            .expect("every nonzero element has a sign-normalized associate")
    }

    /// Generator of the ideal `(x, y)`, canonically normalized.
    pub fn gcd(
        &self,
        x: &AlgebraicInteger,
        y: &AlgebraicInteger,
    ) -> Result<AlgebraicInteger, QuadIntError> {
        if x.is_zero() && y.is_zero() {
            return Err(QuadIntError::BothZero);
        }
        let mut u = x.clone();
        let mut v = y.clone();
        while !v.is_zero() {
            let (_, r) = self.div_rem(&u, &v);
            u = v;
            v = r;
        }
        Ok(self.canonical_associate(&u))
    }

    /// The exact power of `P` dividing `x`, by repeated division by the
    /// generator.
    pub fn valuation(
        &self,
        x: &AlgebraicInteger,
        prime: &PrimeIdealData,
    ) -> Result<u32, QuadIntError> {
        if x.is_zero() {
            return Err(QuadIntError::ZeroElement);
        }
        let mut v = 0;
        let mut cur = x.clone();
        while let Some(next) = self.div_exact(&cur, &prime.generator) {
            cur = next;
            v += 1;
        }
        Ok(v)
    }

    /// Factorization of `(p)` into prime ideals, as `(prime, multiplicity)`
    /// pairs. Generators are found by bounded search over elements of norm
    /// `p`, falling back to the inert case `(p)` itself.
    pub fn split_prime(&self, p: u64) -> Vec<(PrimeIdealData, u32)> {
        let pb = BigInt::from(p);
        let bound = p as i64;
        let mut gen_of_norm_p = None;
        'search: for a in 0..=bound {
            for b in -bound..=bound {
                let x = AlgebraicInteger::from_pair(a, b);
                if self.norm(&x) == pb {
                    gen_of_norm_p = Some(self.canonical_associate(&x));
                    break 'search;
                }
            }
        }
        match gen_of_norm_p {
            Some(g) => {
                let ramified = self.disc.unsigned_abs() % p == 0;
                if ramified {
                    let prime = PrimeIdealData {
                        generator: g,
                        residue_char: p,
                        residue_degree: 1,
                        ram_index: 2,
                        norm: p,
                    };
                    vec![(prime, 2)]
                } else {
                    let gbar = self.canonical_associate(&self.conj(&g));
                    let p1 = PrimeIdealData {
                        generator: g,
                        residue_char: p,
                        residue_degree: 1,
                        ram_index: 1,
                        norm: p,
                    };
                    let p2 = PrimeIdealData {
                        generator: gbar,
                        residue_char: p,
                        residue_degree: 1,
                        ram_index: 1,
                        norm: p,
                    };
                    vec![(p1, 1), (p2, 1)]
                }
            }
            None => {
                let prime = PrimeIdealData {
                    generator: AlgebraicInteger::from_pair(bound, 0),
                    residue_char: p,
                    residue_degree: 2,
                    ram_index: 1,
                    norm: p * p,
                };
                vec![(prime, 1)]
            }
        }
    }

    /// The primes of `O_K` above 2.
    pub fn primes_above_2(&self) -> Vec<PrimeIdealData> {
        self.split_prime(2).into_iter().map(|(p, _)| p).collect()
    }

    /// Renders `a + b·ω` with the field's own symbol for `ω`.
    pub fn display(&self, x: &AlgebraicInteger) -> String {
        let sym = match self.d {
            -1 => "i",
            -2 => "√-2",
            _ => "ω",
        };
        if x.b.is_zero() {
            return x.a.to_string();
        }
        let btxt = if x.b.is_one() {
            sym.to_string()
        } else if (-&x.b).is_one() {
            format!("-{sym}")
        } else {
            format!("{}{sym}", x.b)
        };
        if x.a.is_zero() {
            btxt
        } else if x.b.is_positive() {
            format!("{}+{btxt}", x.a)
        } else {
            format!("{}{btxt}", x.a)
        }
    }
}

/// `round(n/d)` with `d > 0`, ties toward the smaller integer.
fn round_half_down(n: &BigInt, d: &BigInt) -> BigInt {
    debug_assert!(d.is_positive());
    let two = BigInt::from(2);
    (n * &two + d - BigInt::one()).div_floor(&(d * &two))
}
