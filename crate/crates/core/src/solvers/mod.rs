//! Structure-specific solvers. Each runs per connected component and merges.

pub mod cycle;
pub mod star;
pub mod tree;

pub use cycle::{solve_multicycle, solve_multicycle_traced, CycleCase};
pub use star::solve_multistar;
pub use tree::{solve_multitree_d4_q2, solve_multitree_d4_q2_traced, TreeCase, TreeStep};

use crate::error::Result;
use crate::model::{Allocation, Instance};
use crate::structure::components;

/// Solves every component with `solve` and stitches the results together.
pub fn by_component(inst: &Instance, mut solve: impl FnMut(&Instance) -> Result<Allocation>) -> Result<Allocation> {
    let mut out = Allocation::empty_for(inst);
    for comp in components(inst) {
        let (sub, agents, edges) = inst.induced(&comp);
        let local = solve(&sub)?;
        out.merge_from(&local, &agents, &edges);
    }
    Ok(out)
}
