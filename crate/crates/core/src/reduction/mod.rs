//! Structural congruence and reduction semantics.

mod normal;
mod reduce;
pub(crate) mod soup;

pub use normal::{struct_equiv, struct_normal, struct_normal_with};
pub use reduce::{
    apply_step, barbs, barbs_bounded, first_trace, format_trace, housekeeping_closure, housekeeping_step, reduce_multi,
    reduce_step, reducts, trace_json, Reachable, RedexPath, ReductionStep, Rule,
};
pub use soup::Loc;
