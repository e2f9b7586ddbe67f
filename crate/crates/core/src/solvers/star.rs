use crate::cut::cut;
use crate::error::{Error, Result};
use crate::model::{Allocation, Instance};
use crate::structure::{center_of, classify_component, Family};

fn solve_star_component(inst: &Instance) -> Result<Allocation> {
    let all: Vec<usize> = (0..inst.n()).collect();
    if classify_component(inst, &all, true) != Family::MultiStar {
        return Err(Error::Structure("skeleton is not a star".into()));
    }
    let hub = center_of(inst, &all);
    let mut x = Allocation::empty_for(inst);
    for &leaf in inst.neighbors(hub) {
        let cfg = cut(inst, hub, leaf);
        let pick = cfg.preferred_by(inst, leaf);
        x.give_all(leaf, cfg.bundle(pick));
        x.give_all(hub, cfg.bundle(1 - pick));
    }
    Ok(x)
}

/// EFX orientation of a multi-star with any multiplicity: the hub cuts every
/// E(hub, leaf) and the leaf chooses.
pub fn solve_multistar(inst: &Instance) -> Result<Allocation> {
    super::by_component(inst, solve_star_component)
}
