use serde::{Deserialize, Serialize};

use crate::geom::Position;

use super::DiffusionKernel;

/// A scent source appearing (`sign = +1`) or disappearing (`sign = -1`) at
/// `time`. A source present on `[a, b)` is the pair `(+1, a)`, `(-1, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScentEvent {
    pub position: Position,
    pub scent: Vec<f64>,
    pub sign: i8,
    pub time: u64,
}

/// Scent at `position` and `time` from an explicit event list:
/// `Σ sign · scent · κ(time - t_e, position - p_e)` over events with
/// `t_e <= time`.
pub fn scent_from_events(kernel: &DiffusionKernel, events: &[ScentEvent], position: Position, time: u64, dims: usize) -> Vec<f64> {
    let mut out = vec![0.0; dims];
    for e in events.iter().filter(|e| e.time <= time) {
        let k = kernel.value(time - e.time, position.x - e.position.x, position.y - e.position.y);
        if k != 0.0 {
            let w = e.sign as f64 * k;
            for (o, s) in out.iter_mut().zip(&e.scent) {
                *o += w * s;
            }
        }
    }
    out
}

/// Scent field on the square `[-extent, extent]^2`, `dims` values per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseField {
    pub extent: i64,
    pub dims: usize,
    pub values: Vec<f64>,
}

impl DenseField {
    fn zeros(extent: i64, dims: usize) -> Self {
        let side = (2 * extent + 1) as usize;
        DenseField { extent, dims, values: vec![0.0; side * side * dims] }
    }

    fn index(&self, p: Position) -> Option<usize> {
        let side = 2 * self.extent + 1;
        let (x, y) = (p.x + self.extent, p.y + self.extent);
        ((0..side).contains(&x) && (0..side).contains(&y)).then(|| ((y * side + x) as usize) * self.dims)
    }

    pub fn at(&self, p: Position) -> &[f64] {
        let i = self.index(p).expect("position inside dense field");
        &self.values[i..i + self.dims]
    }
}

/// Literal iteration of the scent recurrence on a bounded grid (zero
/// outside), returning `S^t` for `t = 0..=steps`. Test oracle.
pub fn scent_dense_reference(extent: i64, events: &[ScentEvent], steps: u64, decay: f64, diffusion: f64, dims: usize) -> Vec<DenseField> {
    let side = 2 * extent + 1;
    // C^t: sources active at t
    let mut active = DenseField::zeros(extent, dims);
    let mut prev = DenseField::zeros(extent, dims);
    let mut history = Vec::with_capacity(steps as usize + 1);
    for t in 0..=steps {
        for e in events.iter().filter(|e| e.time == t) {
            let i = active.index(e.position).expect("event inside dense grid");
            for d in 0..dims {
                active.values[i + d] += e.sign as f64 * e.scent[d];
            }
        }
        let mut cur = DenseField::zeros(extent, dims);
        for y in -extent..=extent {
            for x in -extent..=extent {
                let i = ((y + extent) * side + (x + extent)) as usize * dims;
                for d in 0..dims {
                    let mut around = 0.0;
                    for (dx, dy) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                        if let Some(j) = prev.index(Position::new(x + dx, y + dy)) {
                            around += prev.values[j + d];
                        }
                    }
                    cur.values[i + d] = active.values[i + d] + decay * prev.values[i + d] + diffusion * around;
                }
            }
        }
        history.push(cur.clone());
        prev = cur;
    }
    history
}

/// A source that no longer emits: present on `[start, end)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetiredSource {
    pub position: Position,
    pub scent: Vec<f64>,
    pub start: u64,
    pub end: u64,
}

impl RetiredSource {
    /// Adds `scent · (κ(t - start) - κ(t - end))` at `position` into `out`.
    #[inline]
    pub fn accumulate(&self, kernel: &DiffusionKernel, position: Position, time: u64, out: &mut [f64]) {
        let (dx, dy) = (position.x - self.position.x, position.y - self.position.y);
        if dx.abs() > kernel.radius() || dy.abs() > kernel.radius() || time < self.start {
            return;
        }
        let mut w = kernel.value(time - self.start, dx, dy);
        if time >= self.end {
            w -= kernel.value(time - self.end, dx, dy);
        }
        if w != 0.0 {
            for (o, s) in out.iter_mut().zip(&self.scent) {
                *o += w * s;
            }
        }
    }
}

/// Retired sources whose lingering scent has not yet fully decayed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScentLog {
    sources: Vec<RetiredSource>,
}

impl ScentLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_sources(sources: Vec<RetiredSource>) -> Self {
        ScentLog { sources }
    }

    /// Records a source; zero-scent or empty-interval sources are dropped.
    pub fn retire(&mut self, source: RetiredSource) {
        if source.end > source.start && source.scent.iter().any(|&s| s != 0.0) {
            self.sources.push(source);
        }
    }

    /// Drops sources whose both ends are older than `tau_max`: both kernel
    /// terms are then the steady state and cancel exactly.
    pub fn compact(&mut self, now: u64, tau_max: u64) {
        self.sources.retain(|s| now.saturating_sub(s.end) <= tau_max);
    }

    pub fn sources(&self) -> &[RetiredSource] {
        &self.sources
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn accumulate(&self, kernel: &DiffusionKernel, position: Position, time: u64, out: &mut [f64]) {
        for s in &self.sources {
            s.accumulate(kernel, position, time, out);
        }
    }

    /// The log as an explicit event list.
    pub fn events(&self) -> Vec<ScentEvent> {
        self.sources
            .iter()
            .flat_map(|s| {
                [
                    ScentEvent { position: s.position, scent: s.scent.clone(), sign: 1, time: s.start },
                    ScentEvent { position: s.position, scent: s.scent.clone(), sign: -1, time: s.end },
                ]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(position: Position, sign: i8, time: u64) -> ScentEvent {
        ScentEvent { position, scent: vec![1.0], sign, time }
    }

    #[test]
    fn no_events_is_zero() {
        let k = DiffusionKernel::cached(0.4, 0.14);
        assert_eq!(scent_from_events(&k, &[], Position::ORIGIN, 10, 3), vec![0.0; 3]);
    }

    #[test]
    fn single_source_examples() {
        let k = DiffusionKernel::cached(0.4, 0.14);
        let ev = [unit(Position::ORIGIN, 1, 0)];
        assert_eq!(scent_from_events(&k, &ev, Position::ORIGIN, 0, 1), vec![1.0]);
        assert!((scent_from_events(&k, &ev, Position::ORIGIN, 1, 1)[0] - 1.4).abs() < 1e-15);
        assert!((scent_from_events(&k, &ev, Position::new(1, 0), 1, 1)[0] - 0.14).abs() < 1e-15);
    }

    #[test]
    fn removal_cancels_tail() {
        let k = DiffusionKernel::cached(0.4, 0.14);
        let ev = [unit(Position::ORIGIN, 1, 0), unit(Position::ORIGIN, -1, 5)];
        let mut last = f64::INFINITY;
        for t in [10u64, 50, 100, 200, 400] {
            let v = scent_from_events(&k, &ev, Position::ORIGIN, t, 1)[0];
            assert!(v >= 0.0 && v < last);
            last = v;
        }
        assert!(scent_from_events(&k, &ev, Position::ORIGIN, 1000, 1)[0].abs() < 1e-9);
    }

    #[test]
    fn zero_parameters_give_instantaneous_sources() {
        let ev = [unit(Position::new(1, 1), 1, 2), unit(Position::new(1, 1), -1, 4)];
        let dense = scent_dense_reference(3, &ev, 6, 0.0, 0.0, 1);
        let observed: Vec<f64> = dense.iter().map(|f| f.at(Position::new(1, 1))[0]).collect();
        assert_eq!(observed, vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(dense[3].at(Position::new(0, 1))[0], 0.0);
    }

    #[test]
    fn log_roundtrips_to_events_and_compacts() {
        let k = DiffusionKernel::cached(0.4, 0.14);
        let mut log = ScentLog::new();
        log.retire(RetiredSource { position: Position::new(2, -1), scent: vec![1.0, 0.5], start: 3, end: 9 });
        log.retire(RetiredSource { position: Position::new(0, 0), scent: vec![0.0, 0.0], start: 3, end: 9 });
        assert_eq!(log.len(), 1);
        let events = log.events();
        for t in [3u64, 8, 9, 30, 700] {
            let mut direct = vec![0.0; 2];
            log.accumulate(&k, Position::new(1, 0), t, &mut direct);
            let via_events = scent_from_events(&k, &events, Position::new(1, 0), t, 2);
            for d in 0..2 {
                assert!((direct[d] - via_events[d]).abs() < 1e-15);
            }
        }
        log.compact(9 + k.tau_max(), k.tau_max());
        assert_eq!(log.len(), 1);
        log.compact(10 + k.tau_max(), k.tau_max());
        assert!(log.is_empty());
    }
}
