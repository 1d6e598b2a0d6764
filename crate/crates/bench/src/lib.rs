//! Shared fixtures for the criterion benchmarks.

use chipstack_core::{bundled, initial_placement, ArchitectureSpec, Placement};

/// A bundled architecture together with its seed-0 initial placement.
pub fn fixture(name: &str) -> (ArchitectureSpec, Placement) {
    let spec = match name {
        "toy4" => bundled::toy4(),
        "ascend910" => bundled::ascend910(),
        "micro150" => bundled::micro150(),
        "multigpu" => bundled::multigpu(),
        other => panic!("no bundled architecture named {other}"),
    };
    let placement = initial_placement(&spec, 0).expect("bundled architecture packs");
    (spec, placement)
}
