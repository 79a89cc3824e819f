//! Harmonic analysis and maximal operators on the Boolean hypercube `{0,1}^n`.
//!
//! The crate works with real-valued functions on the vertex set (indexed by
//! integers whose bit `i` is coordinate `i`), their Walsh-Hadamard spectra,
//! and averaging operators that depend only on Hamming distance:
//!
//! * [`cube`] - cube functions, the Walsh-Hadamard transform, level energies,
//!   all-radii sphere means, and `L^p` norms under counting measure.
//! * [`krawtchouk`] - exact integer Krawtchouk tables with rational and float
//!   views, symmetry/orthogonality verification, root isolation, and
//!   empirical exponential-decay constants.
//! * [`radial`] - distance-radial operators in dual representation (sphere
//!   weights and a spectral profile): noise smoothing, running "senate"
//!   averages of operator families, and high-precision senate coefficients.
//! * [`maximal`] - pointwise-supremum operators over a family, their `L^1`,
//!   weak `(1,1)` and `L^2` norm estimation (alternating ascent plus a small
//!   exhaustive search), and the interpolation bound `2 (p/(p-1))^{1/p}`.
//! * [`comparison`] - identity and inequality checks that chain the maximal
//!   spherical operator through senate averages, square-function errors,
//!   binomial senate coefficients, and the ergodic weak bound, ending in an
//!   explicit dimension-free `L^2` constant.
//! * [`games`] - marking games on vertices and edges: density profiles, best
//!   centers, the edge-to-vertex reduction, and exhaustive/annealing
//!   adversaries.
//!
//! All floating-point reductions use fixed-shape pairwise trees and all
//! parallel loops write disjoint chunks, so results are bitwise identical
//! with the `parallel` feature on or off and for any thread count.

pub mod comparison;
pub mod cube;
pub mod error;
pub mod games;
pub mod krawtchouk;
pub mod maximal;
pub mod par;
pub mod radial;
pub mod report;

pub use error::{Error, Result};
