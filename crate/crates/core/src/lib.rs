//! Stochastic DC programming for large sums of DC functions.
//!
//! The crate is organised bottom-up:
//!
//! * [`dc`] holds the generic engines: full-batch DCA, stochastic DCA (SDCA)
//!   and inexact stochastic DCA (ISDCA) over any [`dc::DcProblem`], together
//!   with the block sampler, the stale-subgradient table and the
//!   ε-subgradient inequality checker used by the diagnostics.
//! * [`prox`] provides the closed-form proximal operators of scaled
//!   ℓ1, ℓ2 and ℓ∞ norms and the ℓ1-ball projection.
//! * [`mlr`] instantiates the engines for group-sparse multinomial logistic
//!   regression with exponential or capped-ℓ1 approximations of the
//!   ℓq,0 penalty.
//! * [`baselines`] implements the stochastic proximal gradient method for the
//!   convex ℓ2,1-regularised problem.
//! * [`data`] loads LibSVM/CSV files, generates the synthetic benchmarks,
//!   splits and standardizes.
//! * [`harness`] runs the solution-path protocol and writes reports.

pub mod baselines;
pub mod data;
pub mod dc;
pub mod harness;
pub mod mlr;
pub mod prox;
