//! Large-drift limits of principal eigenvalues for planar advection–diffusion.
//!
//! For a drift field `b` on a bounded planar domain, the principal eigenvalue
//! `lambda(A)` of `-Δφ - A b·∇φ + cφ` (zero Neumann data) converges as the
//! drift rate `A` grows to the minimum of per-component values `Λ(K)` taken
//! over the connected components `K` of the limit set of `x' = b(x)`:
//!
//! * stable fixed point: `c` at the point;
//! * stable limit cycle: time average of `c` over one period;
//! * stable figure-eight of homoclinic loops: `c` at the saddle;
//! * family of closed orbits: Rayleigh quotient over first integrals;
//! * anything unstable: `+∞`.
//!
//! The crate classifies the limit set ([`dynamics`]), evaluates the predicted
//! limit ([`limits`]) and computes `lambda(A)` on masked grids ([`pde`]) so the
//! two can be compared across a sweep of drift rates ([`app`]).

pub mod app;
pub mod dynamics;
pub mod expr;
pub mod field;
pub mod geometry;
pub mod limits;
pub mod pde;
pub mod sparse;

/// A point (or vector) in the plane.
pub type Point = [f64; 2];
