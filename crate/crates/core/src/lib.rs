//! Condition numbers of random homogeneous polynomial systems on the sphere.
//!
//! The crate works with systems `P = (p_1, ..., p_{n-1})` of real homogeneous
//! polynomials in `n` variables under the Bombieri-Weyl inner product, and
//! computes certified brackets for
//!
//! * the Bombieri-Weyl norm and the reproducing-kernel (Veronese) geometry ([`poly`], [`subspace`]),
//! * the dispersion constant `sigma(E)` of a coefficient subspace ([`subspace`]),
//! * the global condition number `kappa(P) = ||P||_W / min_x L(P, x)` ([`condition`]),
//! * covering nets and certified extrema on the sphere ([`sphere`]),
//! * seeded random models and Monte Carlo checks of tail bounds ([`random`], [`experiments`]).
//!
//! Runnable walkthroughs live in `examples/`: `bw_norm`, `sphere_nets`,
//! `dispersion`, `condition_number`, `random_models`, `tail_experiment`,
//! `smoothed_analysis`, `approximant`, `grassmann` and `veronese_complexity`.
//!
//! ```
//! use polycond::{global_kappa, HomogeneousPolynomial, PolynomialSystem};
//! let x1 = HomogeneousPolynomial::from_terms(2, 1, &[(vec![1, 0], 1.0)]).unwrap();
//! let p = PolynomialSystem::new(vec![x1]).unwrap();
//! let r = global_kappa(&p, 0.05, 50).unwrap();
//! assert!(r.kappa_lo <= 1.0 + 1e-9 && r.kappa_hi.unwrap() >= 1.0 - 1e-9);
//! ```

pub mod condition;
pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod poly;
pub mod random;
pub mod sphere;
pub mod subspace;

pub use condition::{global_kappa, global_l, global_l_with, local_l, ConditionOptions, GlobalConditionReport};
pub use error::{Error, Result};
pub use poly::{bw_inner, bw_norm, monomial_basis, HomogeneousPolynomial, MonomialBasis, PolynomialSystem};
pub use random::{RandomModel, SeedPlan, SmoothingMode};
pub use sphere::{build_antipodal_net, build_net, sup_norm_bound, SphereNet};
pub use subspace::{dispersion, dispersion_system, orthonormalize, PolySubspace, SystemSubspace};
