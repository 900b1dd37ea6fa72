//! Reward-rate metric and CSV export.

use std::io::Write;

use serde::Serialize;

/// Moving average of `rewards` over the last `window` steps. Early entries
/// average over the steps available so far.
pub fn reward_rate(rewards: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be positive");
    let mut out = Vec::with_capacity(rewards.len());
    // Kahan-compensated running sum so long histories do not drift.
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    let mut add = |sum: &mut f64, x: f64| {
        let y = x - comp;
        let t = *sum + y;
        comp = (t - *sum) - y;
        *sum = t;
    };
    for (t, &r) in rewards.iter().enumerate() {
        add(&mut sum, r);
        if t >= window {
            add(&mut sum, -rewards[t - window]);
        }
        out.push(sum / (t + 1).min(window) as f64);
    }
    out
}

#[derive(Debug, Serialize)]
struct Row {
    time: u64,
    reward: f64,
    reward_rate: f64,
}

/// Writes `time,reward,reward_rate` rows. Row `k` describes the step that
/// ended at `start_time + k + 1`; only every `stride`-th step is written,
/// always including the last.
pub fn write_metrics_csv<W: Write>(out: W, start_time: u64, rewards: &[f64], window: usize, stride: usize) -> csv::Result<()> {
    let stride = stride.max(1);
    let rates = reward_rate(rewards, window);
    let mut w = csv::Writer::from_writer(out);
    let n = rewards.len();
    for k in 0..n {
        if (k + 1) % stride == 0 || k + 1 == n {
            w.serialize(Row { time: start_time + k as u64 + 1, reward: rewards[k], reward_rate: rates[k] })?;
        }
    }
    if n == 0 {
        w.write_record(["time", "reward", "reward_rate"])?;
    }
    w.flush()?;
    Ok(())
}
