//! Arc projections for field of view and occlusion. A cell at distance `d`
//! projects onto the unit circle as an arc of half-angle `asin(min(1, 0.5/d))`
//! centered on its bearing.

use std::f64::consts::PI;

use crate::geom::{Direction, Position};

fn half_width(dist: f64) -> f64 {
    (0.5 / dist).min(1.0).asin()
}

/// Length of the intersection of the arc `[center - half, center + half]`
/// with the interval `[lo, hi]`, both taken on the circle.
fn arc_overlap(center: f64, half: f64, lo: f64, hi: f64) -> f64 {
    let mut total = 0.0;
    for k in [-1.0, 0.0, 1.0] {
        let c = center + 2.0 * PI * k;
        let a = (c - half).max(lo);
        let b = (c + half).min(hi);
        if b > a {
            total += b - a;
        }
    }
    total
}

/// Visible fraction of the cell at egocentric offset (`forward`, `right`)
/// under a field of view of `fov` degrees centered on the heading.
pub fn fov_factor_egocentric(fov: f64, forward: i64, right: i64) -> f64 {
    if fov >= 360.0 || (forward == 0 && right == 0) {
        return 1.0;
    }
    let (f, r) = (forward as f64, right as f64);
    let h = half_width((f * f + r * r).sqrt());
    let bearing = (-r).atan2(f);
    let span = fov.to_radians() / 2.0;
    (arc_overlap(bearing, h, -span, span) / (2.0 * h)).min(1.0)
}

/// Visible fraction of the cell at world offset `offset` from an agent
/// facing `direction`.
pub fn fov_factor(fov: f64, offset: Position, direction: Direction) -> f64 {
    let f = direction.forward();
    let r = direction.right();
    fov_factor_egocentric(fov, offset.x * f.x + offset.y * f.y, offset.x * r.x + offset.y * r.y)
}

/// Attenuation `max(1 - Σ o_i |θ_i ∩ θ| / |θ|, 0)` of the cell at `cell`
/// (offset from the agent) by `occluders` given as (offset, occlusion).
/// Only occluders strictly closer to the agent than the cell count; the
/// agent's own cell is never occluded.
pub fn occlusion_factor(cell: Position, occluders: &[(Position, f64)]) -> f64 {
    let cell_d2 = cell.x * cell.x + cell.y * cell.y;
    if cell_d2 == 0 {
        return 1.0;
    }
    let h = half_width((cell_d2 as f64).sqrt());
    let mut blocked = 0.0;
    for &(pos, o) in occluders {
        let d2 = pos.x * pos.x + pos.y * pos.y;
        if o == 0.0 || d2 == 0 || d2 >= cell_d2 {
            continue;
        }
        // bearing relative to the cell's bearing; collinear gives exactly 0
        let cross = (cell.x * pos.y - cell.y * pos.x) as f64;
        let dot = (cell.x * pos.x + cell.y * pos.y) as f64;
        let rel = cross.atan2(dot);
        let hi = half_width((d2 as f64).sqrt());
        blocked += o * arc_overlap(rel, hi, -h, h) / (2.0 * h);
    }
    (1.0 - blocked).max(0.0)
}
