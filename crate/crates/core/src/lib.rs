//! Compile Turing machines and two-stack pushdown automata into hybrid
//! dynamic Bayesian networks, and filter those networks exactly.
//!
//! Stacks are encoded as rationals in `[0, 1)`, pushes and pops are affine
//! maps, and the top/empty tests are hard thresholds, so every belief the
//! filter produces is a finite mixture of point masses. With rational
//! weights ([`ExactFilter`]) the filter tracks the machine with no error;
//! with floating weights ([`SoftFilter`]) the thresholds may be replaced by
//! logistics of finite steepness.
//!
//! ```
//! use dbnsim::{automata::{fixtures, inputs_from_bits}, inference::{decide, Decision, Mode}};
//! use dbnsim::{machine_compiler::pda_to_dbn, ExactFilter};
//!
//! let net = pda_to_dbn(&fixtures::parity()).unwrap();
//! let filter = ExactFilter::new(&net.spec, Mode::Exact).unwrap();
//! let inputs = inputs_from_bits(&"11".parse().unwrap());
//! assert_eq!(decide(&filter, &inputs, 10, |_| {}).unwrap(), Decision::Accept { slice: 4 });
//! ```

pub mod automata;
pub mod compare;
pub mod dbn_model;
pub mod hmm_collapse;
pub mod inference;
pub mod machine_compiler;
pub mod rational;
pub mod stack_codec;

pub use num_rational::BigRational;
pub use rational::Rational;

pub type ExactFilter = inference::Filter<Rational>;
pub type SoftFilter = inference::Filter<f64>;
pub type WideFilter = inference::Filter<inference::Wide>;
pub type ExactBelief = inference::Belief<Rational>;
pub type SoftBelief = inference::Belief<f64>;
pub type WideBelief = inference::Belief<inference::Wide>;
