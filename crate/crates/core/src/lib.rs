//! Rigorous upper (and companion lower) bounds for the growth rates of three
//! hard-squares-like lattice models, built from three ingredients:
//!
//! * exact strip/cylinder transfer matrices at small widths ([`exact`]),
//! * Collatz-Wielandt eigenvalue enclosures ([`hp::power`]),
//! * a corner-transfer-matrix eigenvector ansatz optimised by CTMRG
//!   ([`ctmrg`]) and evaluated over bracelets ([`bracelets`], [`bound`]).
//!
//! Everything numeric runs on arbitrary-precision floats ([`hp`]); all
//! iteration orders, tie-breaks and normalizations are deterministic so that
//! a run is bit-reproducible at fixed precision.

pub mod bound;
pub mod bracelets;
pub mod ctmrg;
pub mod exact;
pub mod hp;
pub mod spin;
