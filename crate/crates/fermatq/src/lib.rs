//! Exact arithmetic and Frey-curve elimination over the imaginary quadratic
//! fields Q(i), Q(√-2) and Q(√-7).
//!
//! The crate is organised bottom-up:
//!
//! * [`quadint`] — rings of integers of the three fields: elements, ideals,
//!   residue rings and ray class groups;
//! * [`ellcurve`] — elliptic curves over these fields: invariants, reduction
//!   types, brute-force point counts and traces of Frobenius;
//! * [`localfields`] — 2-adic computations: square classes, conductor
//!   exponents of quadratic characters, unit/square cokernels;
//! * [`frey`] — Frey curves from putative Fermat solutions and predicted
//!   Serre levels at the primes over 2;
//! * [`forms`] — Bianchi newform records, file ingestion and curve matching
//!   via Euler factors;
//! * [`elimination`] — irreducibility thresholds and the trace-elimination
//!   engine producing the final exponent-bound report.

pub mod elimination;
pub mod ellcurve;
pub mod forms;
pub mod frey;
pub mod localfields;
pub mod quadint;
