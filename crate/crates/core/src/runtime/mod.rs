//! Execution of parsed programs with line-level tracing.

pub mod builtins;
mod interp;
mod literal;
pub mod ops;
mod trace;
pub mod value;

pub use literal::{bindings_from_repr, literal_value};
pub use interp::{execute, Execution, ExecutionLimits, InputError};
pub use trace::{render_trace, rendered_line_count, BudgetKind, ExecutionTrace, Outcome, TraceEvent};
pub use value::{bindings_from_json, bindings_repr, repr_value, Bindings, Key, Value};
