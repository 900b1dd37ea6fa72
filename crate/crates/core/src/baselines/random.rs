use crate::action::{Action, ActionKind};
use crate::rng::Pcg32;

/// Uniform draw over `space`. A `Drop` draw then picks an item type
/// uniformly from `0..item_types`.
pub fn random_action(space: &[ActionKind], item_types: u32, rng: &mut Pcg32) -> Action {
    assert!(!space.is_empty(), "empty action space");
    match space[rng.below(space.len() as u32) as usize] {
        ActionKind::MoveForward => Action::MoveForward,
        ActionKind::TurnLeft => Action::TurnLeft,
        ActionKind::TurnRight => Action::TurnRight,
        ActionKind::Collect => Action::Collect,
        ActionKind::Drop => Action::Drop(rng.below(item_types.max(1))),
        ActionKind::NoOp => Action::NoOp,
    }
}

#[derive(Debug, Clone)]
pub struct RandomAgent {
    space: Vec<ActionKind>,
    item_types: u32,
    rng: Pcg32,
}

impl RandomAgent {
    pub fn new(space: Vec<ActionKind>, item_types: u32, seed: u64) -> Self {
        RandomAgent { space, item_types, rng: Pcg32::from_seed(seed) }
    }

    pub fn act(&mut self) -> Action {
        random_action(&self.space, self.item_types, &mut self.rng)
    }
}
