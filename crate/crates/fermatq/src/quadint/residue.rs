//! Residue rings `O_K / (m)` realized by explicit enumeration, and the
//! brute-force abelian group structure / ray class group computations built
//! on top of them.

use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use super::{AlgebraicInteger, OmegaKind, QuadIntError, QuadraticField};

/// A residue class, in reduced Hermite-normal-form coordinates
/// `x + y·ω` with `0 ≤ x < s`, `0 ≤ y < t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Residue {
    pub x: i64,
    pub y: i64,
}

/// The finite ring `O_K / (m)` for a nonzero modulus `m`.
///
/// The ideal lattice `(m)` in the basis `(1, ω)` is put in Hermite normal
/// form; representatives are the pairs `(x, y)` inside the fundamental box.
#[derive(Debug, Clone)]
pub struct ResidueRing {
    field: QuadraticField,
    modulus: AlgebraicInteger,
    /// HNF data: lattice = Z·(s, 0) + Z·(c, t).
    s: i64,
    c: i64,
    t: i64,
    size: u64,
}

impl ResidueRing {
    pub fn new(
        field: &QuadraticField,
        modulus: &AlgebraicInteger,
        cap: u64,
    ) -> Result<Self, QuadIntError> {
        assert!(!modulus.is_zero(), "residue ring modulus must be nonzero");
        let n = field.norm(modulus);
        let size = n.to_u64().filter(|&v| v <= cap).ok_or_else(|| {
            QuadIntError::CapExceeded {
                required: n.to_u128().unwrap_or(u128::MAX),
                cap,
            }
        })?;

        // Lattice generators: m and m·ω, in (1, ω) coordinates.
        let (ma, mb) = big_pair(modulus);
        let (wa, wb) = match field.omega_kind() {
            OmegaKind::SqrtD => (field.d() * mb, ma),
            OmegaKind::HalfOnePlusSqrtD => ((field.d() - 1) / 4 * mb, ma + mb),
        };

        // Column-combine to make the second coordinates (mb, wb) into (t, 0).
        let (t, u, v) = egcd(mb, wb);
        let c0 = u * ma + v * wa;
        let s = ((ma * wb - mb * wa) / t).abs();
        let t = t.abs();
        let c = c0.rem_euclid(s);
        debug_assert_eq!((s as u64) * (t as u64), size);

        Ok(Self {
            field: field.clone(),
            modulus: modulus.clone(),
            s,
            c,
            t,
            size,
        })
    }

    /// `O_K / P^k` for a prime ideal generator.
    pub fn prime_power(
        field: &QuadraticField,
        prime: &super::PrimeIdealData,
        k: u32,
        cap: u64,
    ) -> Result<Self, QuadIntError> {
        let m = field.pow(&prime.generator, k as u64);
        Self::new(field, &m, cap)
    }

    pub fn field(&self) -> &QuadraticField {
        &self.field
    }

    pub fn modulus(&self) -> &AlgebraicInteger {
        &self.modulus
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn zero(&self) -> Residue {
        Residue { x: 0, y: 0 }
    }

    pub fn one(&self) -> Residue {
        self.reduce_pair(1, 0)
    }

    fn reduce_pair(&self, x: i128, y: i128) -> Residue {
        let t = self.t as i128;
        let s = self.s as i128;
        let yr = y.rem_euclid(t);
        let k = (y - yr) / t;
        let xr = (x - k * self.c as i128).rem_euclid(s);
        Residue {
            x: xr as i64,
            y: yr as i64,
        }
    }

    pub fn reduce(&self, v: &AlgebraicInteger) -> Residue {
        let t = BigInt::from(self.t);
        let s = BigInt::from(self.s);
        let yr = v.b.mod_floor(&t);
        let k = (&v.b - &yr) / &t;
        let xr = (&v.a - k * BigInt::from(self.c)).mod_floor(&s);
        Residue {
            x: xr.to_i64().unwrap(),
            y: yr.to_i64().unwrap(),
        }
    }

    pub fn lift(&self, r: Residue) -> AlgebraicInteger {
        AlgebraicInteger::from_pair(r.x, r.y)
    }

    pub fn add(&self, a: Residue, b: Residue) -> Residue {
        self.reduce_pair(a.x as i128 + b.x as i128, a.y as i128 + b.y as i128)
    }

    pub fn sub(&self, a: Residue, b: Residue) -> Residue {
        self.reduce_pair(a.x as i128 - b.x as i128, a.y as i128 - b.y as i128)
    }

    pub fn neg(&self, a: Residue) -> Residue {
        self.reduce_pair(-(a.x as i128), -(a.y as i128))
    }

    pub fn mul(&self, a: Residue, b: Residue) -> Residue {
        let (xa, ya) = (a.x as i128, a.y as i128);
        let (xb, yb) = (b.x as i128, b.y as i128);
        let (x, y) = match self.field.omega_kind() {
            OmegaKind::SqrtD => (
                xa * xb + self.field.d() as i128 * ya * yb,
                xa * yb + ya * xb,
            ),
            OmegaKind::HalfOnePlusSqrtD => (
                xa * xb + ((self.field.d() - 1) / 4) as i128 * ya * yb,
                xa * yb + ya * xb + ya * yb,
            ),
        };
        self.reduce_pair(x, y)
    }

    pub fn pow(&self, a: Residue, mut n: u64) -> Residue {
        let mut base = a;
        let mut acc = self.one();
        while n > 0 {
            if n & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            n >>= 1;
        }
        acc
    }

    /// All residue classes, in a fixed enumeration order.
    pub fn elements(&self) -> impl Iterator<Item = Residue> + '_ {
        (0..self.s).flat_map(move |x| (0..self.t).map(move |y| Residue { x, y }))
    }

    pub fn is_unit(&self, r: Residue) -> bool {
        let v = self.lift(r);
        if v.is_zero() {
            return self.size == 1;
        }
        self.field
            .gcd(&v, &self.modulus)
            .map(|g| self.field.is_unit(&g))
            .unwrap_or(false)
    }

    /// The residues coprime to the modulus.
    pub fn units(&self) -> Vec<Residue> {
        if self.size == 1 {
            return vec![self.zero()];
        }
        self.elements().filter(|&r| self.is_unit(r)).collect()
    }
}

fn big_pair(x: &AlgebraicInteger) -> (i64, i64) {
    x.to_pair()
        .expect("residue ring modulus coordinates must fit in i64")
}

/// Extended gcd: returns `(g, u, v)` with `u·a + v·b = g` and `g` having the
/// sign of the nonzero inputs' gcd (`g > 0` unless both inputs are zero).
fn egcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, u, v) = egcd(b, a.rem_euclid(b));
        (g, v, u - a.div_euclid(b) * v)
    }
}

/// Invariant-factor decomposition `Z/d₁ × … × Z/dₖ` with `d₁ | d₂ | …`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AbelianGroupStructure {
    pub elementary_divisors: Vec<u64>,
    pub exponent: u64,
}

impl AbelianGroupStructure {
    pub fn trivial() -> Self {
        Self {
            elementary_divisors: vec![],
            exponent: 1,
        }
    }

    pub fn order(&self) -> u64 {
        self.elementary_divisors.iter().product()
    }

    pub fn is_trivial(&self) -> bool {
        self.elementary_divisors.is_empty()
    }
}

/// Structure of a finite abelian group given its elements and operation,
/// by brute-force element-order analysis.
pub fn abelian_structure<T, F>(elements: &[T], identity: &T, op: F) -> AbelianGroupStructure
where
    T: Clone + PartialEq,
    F: Fn(&T, &T) -> T,
{
    let n = elements.len() as u64;
    if n == 1 {
        return AbelianGroupStructure::trivial();
    }
    let orders: Vec<u64> = elements
        .iter()
        .map(|e| {
            let mut acc = e.clone();
            let mut k = 1u64;
            while acc != *identity {
                acc = op(&acc, e);
                k += 1;
            }
            k
        })
        .collect();

    // Per prime p | n: the count c_k of solutions of x^(p^k) = 1 determines
    // the number of cyclic p-factors of order >= p^k as log_p(c_k / c_{k-1}).
    let mut per_prime: Vec<Vec<u64>> = Vec::new();
    for p in prime_divisors(n) {
        let c = |k: u32| -> u64 {
            let pk = p.pow(k);
            orders
                .iter()
                .filter(|&&o| is_power_of(o, p) && pk % o == 0)
                .count() as u64
        };
        // f[k-1] = number of cyclic p-factors of order >= p^k
        let mut f = Vec::new();
        let mut k = 1;
        loop {
            let ratio = c(k) / c(k - 1);
            if ratio == 1 {
                break;
            }
            f.push(ilog(ratio, p));
            k += 1;
        }
        // factors of order exactly p^k, largest first
        let mut exps: Vec<u32> = Vec::new();
        for k in 0..f.len() {
            let next = if k + 1 < f.len() { f[k + 1] } else { 0 };
            for _ in 0..(f[k] - next) {
                exps.push((k + 1) as u32);
            }
        }
        exps.sort_unstable_by(|a, b| b.cmp(a));
        per_prime.push(exps.iter().map(|&e| p.pow(e)).collect());
    }

    let k = per_prime.iter().map(|v| v.len()).max().unwrap_or(0);
    let mut divisors = Vec::new();
    for i in 0..k {
        let mut d = 1u64;
        for pp in &per_prime {
            if i < pp.len() {
                d *= pp[i];
            }
        }
        divisors.push(d);
    }
    divisors.reverse();
    let exponent = *divisors.last().unwrap_or(&1);
    debug_assert_eq!(divisors.iter().product::<u64>(), n);
    AbelianGroupStructure {
        elementary_divisors: divisors,
        exponent,
    }
}

fn is_power_of(mut o: u64, p: u64) -> bool {
    while o % p == 0 {
        o /= p;
    }
    o == 1
}

fn ilog(mut v: u64, p: u64) -> u64 {
    let mut m = 0;
    while v > 1 {
        v /= p;
        m += 1;
    }
    m
}

fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// The quotient of a finite abelian group (given as residues) by the
/// subgroup generated by `sub`: returns canonical coset representatives and
/// the coset operation baked into a closure-friendly table.
pub struct QuotientGroup {
    /// Canonical (minimal) representative of each coset.
    pub reps: Vec<Residue>,
    /// Coset of each residue: residue -> canonical representative.
    canon: HashMap<Residue, Residue>,
}

impl QuotientGroup {
    pub fn new(ring: &ResidueRing, group: &[Residue], sub: &[Residue]) -> Self {
        // close the subgroup under multiplication
        let mut h: BTreeSet<Residue> = BTreeSet::new();
        let mut frontier: Vec<Residue> = sub.to_vec();
        while let Some(x) = frontier.pop() {
            if h.insert(x) {
                for s in sub {
                    frontier.push(ring.mul(x, *s));
                }
            }
        }
        let mut canon = HashMap::new();
        let mut reps = Vec::new();
        for &g in group {
            if canon.contains_key(&g) {
                continue;
            }
            let coset: Vec<Residue> = h.iter().map(|&s| ring.mul(g, s)).collect();
            let min = *coset.iter().min().unwrap();
            for m in coset {
                canon.insert(m, min);
            }
            reps.push(min);
        }
        reps.sort_unstable();
        reps.dedup();
        Self { reps, canon }
    }

    pub fn canon(&self, r: Residue) -> Residue {
        self.canon[&r]
    }

    pub fn order(&self) -> u64 {
        self.reps.len() as u64
    }

    /// Members of the coset of the identity (the closed subgroup itself has
    /// reps.len() * subgroup order = group order).
    pub fn structure(&self, ring: &ResidueRing) -> AbelianGroupStructure {
        let identity = self.canon(ring.one());
        abelian_structure(&self.reps, &identity, |a, b| self.canon(ring.mul(*a, *b)))
    }
}

/// Ray class group of conductor `(modulus)`: for class number one and no
/// real places this is `(O_K/m)*` modulo the image of the global units.
pub fn ray_class_group(
    field: &QuadraticField,
    modulus: &AlgebraicInteger,
    cap: u64,
) -> Result<AbelianGroupStructure, QuadIntError> {
    let ring = ResidueRing::new(field, modulus, cap)?;
    let units = ring.units();
    let global: Vec<Residue> = field.units().iter().map(|u| ring.reduce(u)).collect();
    let quot = QuotientGroup::new(&ring, &units, &global);
    Ok(quot.structure(&ring))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadint::make_field;

    #[test]
    fn ring_sizes() {
        let gauss = make_field(-1).unwrap();
        let a = &gauss.primes_above_2()[0];
        let ring = ResidueRing::prime_power(&gauss, a, 5, 1 << 20).unwrap();
        assert_eq!(ring.size(), 32);
        assert_eq!(ring.elements().count(), 32);
        assert_eq!(ring.units().len(), 16);

        let k2 = make_field(-2).unwrap();
        let m1 = k2.split_prime(3)[0].0.clone();
        let f3 = ResidueRing::prime_power(&k2, &m1, 1, 1 << 20).unwrap();
        assert_eq!(f3.size(), 3);
        assert_eq!(f3.units().len(), 2);

        let k7 = make_field(-7).unwrap();
        let p2 = k7.primes_above_2()[0].clone();
        let r4 = ResidueRing::prime_power(&k7, &p2, 2, 1 << 20).unwrap();
        assert_eq!(r4.size(), 4);
        assert_eq!(r4.units().len(), 2);
    }

    #[test]
    fn ring_ops_close() {
        let gauss = make_field(-1).unwrap();
        let a = &gauss.primes_above_2()[0];
        let ring = ResidueRing::prime_power(&gauss, a, 3, 1 << 20).unwrap();
        // reduce is a ring homomorphism on a few spot values
        let x = gauss.elt(5, -3);
        let y = gauss.elt(-2, 7);
        assert_eq!(
            ring.reduce(&gauss.mul(&x, &y)),
            ring.mul(ring.reduce(&x), ring.reduce(&y))
        );
        assert_eq!(
            ring.reduce(&gauss.add(&x, &y)),
            ring.add(ring.reduce(&x), ring.reduce(&y))
        );
    }

    #[test]
    fn cap_enforced() {
        let gauss = make_field(-1).unwrap();
        let err = ResidueRing::new(&gauss, &gauss.elt(3000, 0), 1000).unwrap_err();
        assert!(matches!(err, QuadIntError::CapExceeded { .. }));
    }

    #[test]
    fn abelian_structure_small() {
        // Z/6 realized as integers mod 6 under addition
        let elems: Vec<u64> = (0..6).collect();
        let s = abelian_structure(&elems, &0, |a, b| (a + b) % 6);
        assert_eq!(s.elementary_divisors, vec![6]);
        assert_eq!(s.exponent, 6);

        // Klein four group
        let elems: Vec<u64> = vec![0b00, 0b01, 0b10, 0b11];
        let s = abelian_structure(&elems, &0, |a, b| a ^ b);
        assert_eq!(s.elementary_divisors, vec![2, 2]);
    }

    #[test]
    fn ray_class_groups_match_known_values() {
        let gauss = make_field(-1).unwrap();
        let a = gauss.primes_above_2()[0].generator.clone();
        let m = gauss.pow(&a, 4);
        let s = ray_class_group(&gauss, &m, 1 << 20).unwrap();
        assert_eq!(s.elementary_divisors, vec![2]);

        let k2 = make_field(-2).unwrap();
        let a = k2.primes_above_2()[0].generator.clone();
        let m = k2.pow(&a, 4);
        let s = ray_class_group(&k2, &m, 1 << 20).unwrap();
        assert_eq!(s.elementary_divisors, vec![4]);

        let k7 = make_field(-7).unwrap();
        for p in k7.primes_above_2() {
            let m = k7.pow(&p.generator, 2);
            let s = ray_class_group(&k7, &m, 1 << 20).unwrap();
            assert!(s.is_trivial());
        }

        // trivial modulus
        let s = ray_class_group(&gauss, &AlgebraicInteger::one(), 1 << 20).unwrap();
        assert!(s.is_trivial());
    }
}
