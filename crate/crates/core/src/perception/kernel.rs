//! Precomputed impulse response of the scent recurrence
//! `S^t(p) = C^t(p) + λ S^{t-1}(p) + α Σ_{q ∈ N4(p)} S^{t-1}(q)`.
//!
//! `κ(τ)` is the field `τ` steps after a unit source appeared at the origin
//! (and stayed): `κ(τ) = δ + Lκ(τ-1)`. Past `τ_max` the steady state `κ∞`
//! is used; beyond Chebyshev radius `R` the kernel is treated as zero.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;

/// Bound on the tail mass `ρ^{τ+1}/(1-ρ)` that selects `τ_max`.
pub const TEMPORAL_EPSILON: f64 = 1e-9;
/// Bound on the steady-state mass outside the kernel window that selects `R`.
pub const SPATIAL_EPSILON: f64 = 1e-12;

type KernelCache = Mutex<HashMap<(u64, u64), Arc<DiffusionKernel>>>;

static CACHE: Lazy<KernelCache> = Lazy::new(|| Mutex::new(HashMap::new()));

#[derive(Debug)]
pub struct DiffusionKernel {
    decay: f64,
    diffusion: f64,
    tau_max: u64,
    radius: i64,
    side: usize,
    // quadrant tables (dx, dy >= 0), row-major by dy, one per τ
    table: Vec<f64>,
    steady: Vec<f64>,
}

/// One step of the recurrence on the quadrant `[0, g]^2`, mirrored at the
/// axes and zero beyond `g`.
fn step_quadrant(prev: &[f64], next: &mut [f64], g: usize, decay: f64, diffusion: f64) {
    let n = g + 1;
    let at = |x: isize, y: isize| -> f64 {
        let (x, y) = (x.unsigned_abs(), y.unsigned_abs());
        if x > g || y > g {
            0.0
        } else {
            prev[y * n + x]
        }
    };
    for y in 0..n {
        for x in 0..n {
            let (xi, yi) = (x as isize, y as isize);
            let around = at(xi - 1, yi) + at(xi + 1, yi) + at(xi, yi - 1) + at(xi, yi + 1);
            let source = if x == 0 && y == 0 { 1.0 } else { 0.0 };
            next[y * n + x] = source + decay * prev[y * n + x] + diffusion * around;
        }
    }
}

fn multiplicity(x: usize, y: usize) -> f64 {
    (if x == 0 { 1.0 } else { 2.0 }) * (if y == 0 { 1.0 } else { 2.0 })
}

impl DiffusionKernel {
    /// Builds the kernel; `decay + 4 * diffusion` must be below 1.
    pub fn new(decay: f64, diffusion: f64) -> Self {
        let rho = decay + 4.0 * diffusion;
        assert!((0.0..1.0).contains(&rho) && decay >= 0.0 && diffusion >= 0.0, "unstable scent parameters");
        let mut tau_max = 0u64;
        while rho.powi(tau_max as i32 + 1) / (1.0 - rho) >= TEMPORAL_EPSILON {
            tau_max += 1;
        }
        let total = 1.0 / (1.0 - rho);
        // steady state converged far below the spatial threshold
        let mut settle = tau_max;
        while rho.powi(settle as i32 + 1) / (1.0 - rho) >= SPATIAL_EPSILON * 1e-3 {
            settle += 1;
        }

        let mut g = 64usize;
        let (radius, steady_full) = loop {
            let n = g + 1;
            let mut cur = vec![0.0; n * n];
            let mut next = vec![0.0; n * n];
            cur[0] = 1.0;
            for _ in 0..settle {
                step_quadrant(&cur, &mut next, g, decay, diffusion);
                std::mem::swap(&mut cur, &mut next);
            }
            // mass outside Chebyshev radius r, including mass lost past the grid
            let mut ring_mass = vec![0.0; n];
            for y in 0..n {
                for x in 0..n {
                    ring_mass[x.max(y)] += multiplicity(x, y) * cur[y * n + x];
                }
            }
            let mut outside = (total - ring_mass.iter().sum::<f64>()).max(0.0);
            let mut radius = 0;
            for r in (0..n).rev() {
                if outside >= SPATIAL_EPSILON {
                    radius = r + 1;
                    break;
                }
                outside += ring_mass[r];
            }
            if 2 * radius + 8 <= g {
                break (radius, (g, cur));
            }
            g *= 2;
        };

        let side = radius + 1;
        let (g, steady_grid) = steady_full;
        let n = g + 1;
        let crop = |field: &[f64], out: &mut Vec<f64>| {
            for y in 0..side {
                out.extend_from_slice(&field[y * n..y * n + side]);
            }
        };
        let mut table = Vec::with_capacity((tau_max as usize + 1) * side * side);
        let mut cur = vec![0.0; n * n];
        let mut next = vec![0.0; n * n];
        cur[0] = 1.0;
        crop(&cur, &mut table);
        for _ in 1..=tau_max {
            step_quadrant(&cur, &mut next, g, decay, diffusion);
            std::mem::swap(&mut cur, &mut next);
            crop(&cur, &mut table);
        }
        let mut steady = Vec::with_capacity(side * side);
        crop(&steady_grid, &mut steady);
        DiffusionKernel { decay, diffusion, tau_max, radius: radius as i64, side, table, steady }
    }

    /// Shared kernel for the given parameters, built once per process.
    pub fn cached(decay: f64, diffusion: f64) -> Arc<Self> {
        let key = (decay.to_bits(), diffusion.to_bits());
        let mut cache = CACHE.lock().expect("kernel cache lock");
        cache.entry(key).or_insert_with(|| Arc::new(DiffusionKernel::new(decay, diffusion))).clone()
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    pub fn tau_max(&self) -> u64 {
        self.tau_max
    }

    /// Chebyshev radius beyond which the kernel is zero.
    pub fn radius(&self) -> i64 {
        self.radius
    }

    /// `κ(age)` at offset `(dx, dy)`.
    #[inline]
    pub fn value(&self, age: u64, dx: i64, dy: i64) -> f64 {
        let (ax, ay) = (dx.unsigned_abs() as usize, dy.unsigned_abs() as usize);
        if ax >= self.side || ay >= self.side {
            return 0.0;
        }
        let cell = ay * self.side + ax;
        if age > self.tau_max {
            self.steady[cell]
        } else {
            self.table[age as usize * self.side * self.side + cell]
        }
    }

    /// Quadrant table for `age` (row-major by `|dy|`, `radius + 1` per row).
    #[inline]
    pub fn quadrant(&self, age: u64) -> &[f64] {
        let n = self.side * self.side;
        if age > self.tau_max {
            &self.steady
        } else {
            &self.table[age as usize * n..(age as usize + 1) * n]
        }
    }

    pub fn steady_value(&self, dx: i64, dy: i64) -> f64 {
        self.value(u64::MAX, dx, dy)
    }

    /// Sum of `κ(age)` over the kernel window.
    pub fn mass(&self, age: u64) -> f64 {
        let r = self.radius;
        (-r..=r).flat_map(|dy| (-r..=r).map(move |dx| (dx, dy))).map(|(dx, dy)| self.value(age, dx, dy)).sum()
    }
}
