//! Bound formulas and trace checks.

mod bounds;
mod equivalence;
mod stability;

pub use bounds::{
    bounds_for, check_bounds, lis_bounds, lis_fixed_point, lis_transit_bound, lis_transit_bound_at, sis_bounds,
    sis_k_sequence, BoundParams, BoundReport, Bounds,
};
pub use equivalence::{
    compare_equivalent_traces, equivalent_network, route_links, simulate_wireline, transform_injections,
    EquivalenceMap, EquivalenceVerdict, WirelineInjection, WirelinePacketRecord, WirelineTrace,
};
pub use stability::{detect_instability, even_checkpoints, StabilityReport, StabilityVerdict};
