use crate::config::WorldConfig;

use super::Item;

/// Unnormalized log-probability of `items` given fixed `context` items.
///
/// Sums the intensity of every item plus `g(i, j)` over ordered pairs with
/// `i` in `items` and `j != i` in `items ∪ context`. Pairs further apart
/// than one patch side (Chebyshev) do not interact.
pub fn log_density(items: &[Item], context: &[Item], config: &WorldConfig) -> f64 {
    let range = config.patch_size as i64;
    let mut total = 0.0;
    for (i, a) in items.iter().enumerate() {
        let ty = &config.item_types[a.item_type as usize];
        total += ty.intensity.eval(a.position);
        let others = items.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, b)| b).chain(context);
        for b in others {
            if a.position.chebyshev(b.position) <= range {
                total += ty.interactions[b.item_type as usize].eval(a.position, b.position);
            }
        }
    }
    total
}
