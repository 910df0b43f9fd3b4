//! Forward filtering, decisions and a brute-force reference.

mod decide;
mod enumerate;
mod filter;
mod trace;
mod weight;

pub use decide::{decide, slice_evidence, Decision, SliceReport};
pub use enumerate::{enumerate_unrolled, EnumerateError, Enumerated, DEFAULT_SUPPORT_BOUND};
pub use filter::{
    filter_step, init, Belief, Evidence, Filter, FilterError, Marginal, Mode, Value,
    COMPONENT_CAP_ENV, DEFAULT_COMPONENT_CAP,
};
pub use trace::TraceRecord;
pub use weight::{Weight, Wide, WIDE_PRECISION};
