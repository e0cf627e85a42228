//! 2-adic computations at the primes over 2: square classes in residue
//! rings, conductor exponents of quadratic characters, and cokernel
//! representatives of the global-unit map into `(O_K/b)* / squares`.

use std::collections::HashSet;

use thiserror::Error;

use crate::quadint::{
    AbelianGroupStructure, AlgebraicInteger, PrimeIdealData, QuadIntError, QuadraticField,
    QuotientGroup, Residue, ResidueRing, DEFAULT_ENUM_CAP,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LocalFieldsError {
    #[error("element is not a unit modulo the working prime power")]
    NonUnit,
    #[error(transparent)]
    Quad(#[from] QuadIntError),
}

/// Squares among the units of `(O_K / P^k)*`.
#[derive(Debug, Clone)]
pub struct SquareClassData {
    pub prime: PrimeIdealData,
    pub level: u32,
    ring: ResidueRing,
    squares: HashSet<Residue>,
    units: Vec<Residue>,
}

impl SquareClassData {
    pub fn ring(&self) -> &ResidueRing {
        &self.ring
    }

    pub fn units(&self) -> &[Residue] {
        &self.units
    }

    pub fn squares(&self) -> &HashSet<Residue> {
        &self.squares
    }

    /// Structure of `(O_K/P^k)* / squares`, always elementary 2-abelian.
    pub fn quotient_structure(&self) -> AbelianGroupStructure {
        let quot = QuotientGroup::new(
            &self.ring,
            &self.units,
            &self.squares.iter().copied().collect::<Vec<_>>(),
        );
        quot.structure(&self.ring)
    }
}

/// Enumerates the square subgroup of `(O_K / P^k)*`.
pub fn square_classes(
    field: &QuadraticField,
    prime: &PrimeIdealData,
    k: u32,
    cap: u64,
) -> Result<SquareClassData, QuadIntError> {
    let ring = ResidueRing::prime_power(field, prime, k, cap)?;
    let units = ring.units();
    let squares: HashSet<Residue> = units.iter().map(|&u| ring.mul(u, u)).collect();
    Ok(SquareClassData {
        prime: prime.clone(),
        level: k,
        ring,
        squares,
        units,
    })
}

/// Absolute ramification index of the local field `K_P / Q_2`.
pub fn absolute_ramification(prime: &PrimeIdealData) -> u32 {
    debug_assert_eq!(prime.residue_char, 2);
    prime.ram_index
}

/// Conductor exponent of the quadratic character attached to
/// `K_P(sqrt(lambda)) / K_P`, computed at the default working level
/// `P^(2e+1)`, where `e` is the absolute ramification index.
///
/// Equals the valuation of the discriminant of the quadratic extension;
/// zero exactly when the extension is trivial or unramified.
pub fn quad_char_conductor_exponent(
    field: &QuadraticField,
    lambda: &AlgebraicInteger,
    prime: &PrimeIdealData,
) -> Result<u32, LocalFieldsError> {
    let e = absolute_ramification(prime);
    quad_char_conductor_exponent_at_level(field, lambda, prime, 2 * e + 1)
}

/// Same computation with an explicit working level; used by the stability
/// checks. All congruences are decided modulo `P^level`; `level` must be at
/// least `2e + 1` for the answer to be meaningful.
///
/// The exponent is derived from the square defect of `lambda`: the largest
/// valuation `delta = v_P(lambda - s)` over unit squares `s`, enumerated in
/// `O_K / P^level`. Units congruent to a square modulo `P^(2e+1)` are
/// squares; `delta = 2e` marks the unramified quadratic extension; otherwise
/// `delta` is odd and the discriminant valuation is `2e + 1 - delta`.
pub fn quad_char_conductor_exponent_at_level(
    field: &QuadraticField,
    lambda: &AlgebraicInteger,
    prime: &PrimeIdealData,
    level: u32,
) -> Result<u32, LocalFieldsError> {
    let e = absolute_ramification(prime);
    assert!(level >= 2 * e + 1, "working level below P^(2e+1)");
    let ring = ResidueRing::prime_power(field, prime, level, DEFAULT_ENUM_CAP)?;
    let lam = ring.reduce(lambda);
    if !ring.is_unit(lam) {
        return Err(LocalFieldsError::NonUnit);
    }

    let mut delta = 0u32;
    for u in ring.units() {
        let s = ring.mul(u, u);
        let diff = field.sub(lambda, &ring.lift(s));
        let v = if ring.reduce(&diff) == ring.zero() {
            level
        } else {
            field.valuation(&diff, prime).unwrap().min(level)
        };
        delta = delta.max(v);
    }

    if delta >= 2 * e {
        // square (delta >= 2e+1) or unramified quadratic extension (delta = 2e)
        Ok(0)
    } else {
        Ok(2 * e + 1 - delta)
    }
}

/// `true` when `lambda` is a square in the completion `K_P`, decided by the
/// stable congruence `lambda ≡ x² mod P^(2e+1)`.
pub fn is_local_square(
    field: &QuadraticField,
    lambda: &AlgebraicInteger,
    prime: &PrimeIdealData,
) -> Result<bool, LocalFieldsError> {
    let e = absolute_ramification(prime);
    let ring = ResidueRing::prime_power(field, prime, 2 * e + 1, DEFAULT_ENUM_CAP)?;
    let lam = ring.reduce(lambda);
    if !ring.is_unit(lam) {
        return Err(LocalFieldsError::NonUnit);
    }
    Ok(ring.units().iter().any(|&u| ring.mul(u, u) == lam))
}

/// Report on `(O_K/b)* / squares` and the image of the global units in it.
#[derive(Debug, Clone)]
pub struct CokernelReport {
    pub modulus: AlgebraicInteger,
    pub codomain: AbelianGroupStructure,
    pub image_order: u64,
    /// Canonical coset representatives of the cokernel: smallest norm, then
    /// lexicographically smallest coordinates.
    pub representatives: Vec<AlgebraicInteger>,
}

impl CokernelReport {
    pub fn cokernel_order(&self) -> u64 {
        self.representatives.len() as u64
    }
}

/// The quotient `(O_K/b)* / squares` with its coset map, kept around so
/// callers can compare classes of explicit elements.
pub struct UnitSquareQuotient {
    ring: ResidueRing,
    quot: QuotientGroup,
    units: Vec<Residue>,
}

impl UnitSquareQuotient {
    pub fn new(
        field: &QuadraticField,
        modulus: &AlgebraicInteger,
        cap: u64,
    ) -> Result<Self, QuadIntError> {
        let ring = ResidueRing::new(field, modulus, cap)?;
        let units = ring.units();
        let squares: Vec<Residue> = units.iter().map(|&u| ring.mul(u, u)).collect();
        let quot = QuotientGroup::new(&ring, &units, &squares);
        Ok(Self { ring, quot, units })
    }

    pub fn ring(&self) -> &ResidueRing {
        &self.ring
    }

    /// Coset label of a unit element; `NonUnit` otherwise.
    pub fn class_of(&self, x: &AlgebraicInteger) -> Result<Residue, LocalFieldsError> {
        let r = self.ring.reduce(x);
        if !self.ring.is_unit(r) {
            return Err(LocalFieldsError::NonUnit);
        }
        Ok(self.quot.canon(r))
    }

    pub fn structure(&self) -> AbelianGroupStructure {
        self.quot.structure(&self.ring)
    }
}

/// Image of the global units under `O_K^* -> (O_K/b)*/squares`, together
/// with canonical cokernel representatives.
pub fn unit_square_cokernel(
    field: &QuadraticField,
    modulus: &AlgebraicInteger,
    cap: u64,
) -> Result<CokernelReport, QuadIntError> {
    let usq = UnitSquareQuotient::new(field, modulus, cap)?;
    let ring = &usq.ring;
    let quot = &usq.quot;

    let image: Vec<Residue> = {
        let mut v: Vec<Residue> = field
            .units()
            .iter()
            .map(|u| quot.canon(ring.reduce(u)))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let image_order = image.len() as u64;

    // Cosets of the image inside the square-class quotient.
    let mut seen: HashSet<Residue> = HashSet::new();
    let mut representatives = Vec::new();
    for &q in &quot.reps {
        if seen.contains(&q) {
            continue;
        }
        let coset: Vec<Residue> = image.iter().map(|&g| quot.canon(ring.mul(q, g))).collect();
        for &m in &coset {
            seen.insert(m);
        }
        // Canonical lift: among all unit residues in this coset of unit
        // classes, smallest norm then lexicographic coordinates.
        let rep = usq
            .units
            .iter()
            .filter(|&&u| coset.contains(&quot.canon(u)))
            .map(|&u| ring.lift(u))
            .min_by_key(|v| (field.norm(v), v.a.clone(), v.b.clone()))
            .expect("coset is nonempty");
        representatives.push(rep);
    }
    representatives.sort_by_key(|v| (field.norm(v), v.a.clone(), v.b.clone()));

    Ok(CokernelReport {
        modulus: modulus.clone(),
        codomain: usq.structure(),
        image_order,
        representatives,
    })
}

/// `true` when the given elements lie in pairwise distinct cosets of the
/// image of the global units in `(O_K/b)*/squares`.
pub fn distinct_cokernel_cosets(
    field: &QuadraticField,
    modulus: &AlgebraicInteger,
    elems: &[AlgebraicInteger],
    cap: u64,
) -> Result<bool, LocalFieldsError> {
    let usq = UnitSquareQuotient::new(field, modulus, cap)?;
    let image: Vec<Residue> = field
        .units()
        .iter()
        .map(|u| usq.quot.canon(usq.ring.reduce(u)))
        .collect();
    let mut keys: Vec<Residue> = Vec::new();
    for x in elems {
        let class = usq.class_of(x)?;
        // coset key: minimal member of class * image
        let key = image
            .iter()
            .map(|&g| usq.quot.canon(usq.ring.mul(class, g)))
            .min()
            .unwrap();
        keys.push(key);
    }
    let n = keys.len();
    keys.sort_unstable();
    keys.dedup();
    Ok(keys.len() == n)
}
