//! Reward schedules. Text form:
//!
//! ```text
//! <expr>                                   fixed
//! Curriculum(<expr> : <steps>; <expr> : <steps>; ...)
//! Cyclical(<expr> : <steps>; ...)
//! ```

use std::fmt;

use super::dsl::{parse_reward, DslError, RewardExpr};
use crate::config::WorldConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum RewardSchedule {
    Fixed(RewardExpr),
    /// Each expression for its step count in turn, the last one forever after.
    Curriculum(Vec<(RewardExpr, u64)>),
    /// Each expression for its step count in turn, repeating.
    Cyclical(Vec<(RewardExpr, u64)>),
}

fn window(stages: &[(RewardExpr, u64)], time: u64) -> usize {
    let mut end = 0u64;
    for (i, (_, len)) in stages.iter().enumerate() {
        end = end.saturating_add(*len);
        if time < end {
            return i;
        }
    }
    stages.len() - 1
}

impl RewardSchedule {
    /// The reward function in force at `time`.
    pub fn at(&self, time: u64) -> &RewardExpr {
        match self {
            RewardSchedule::Fixed(r) => r,
            RewardSchedule::Curriculum(stages) => &stages[window(stages, time)].0,
            RewardSchedule::Cyclical(stages) => {
                let period: u64 = stages.iter().map(|s| s.1).sum();
                &stages[window(stages, time % period)].0
            }
        }
    }

    /// Index of the active stage at `time` (0 for a fixed schedule).
    pub fn stage_at(&self, time: u64) -> usize {
        match self {
            RewardSchedule::Fixed(_) => 0,
            RewardSchedule::Curriculum(stages) => window(stages, time),
            RewardSchedule::Cyclical(stages) => window(stages, time % stages.iter().map(|s| s.1).sum::<u64>()),
        }
    }

    /// All distinct stage expressions in order.
    pub fn stages(&self) -> Vec<&RewardExpr> {
        match self {
            RewardSchedule::Fixed(r) => vec![r],
            RewardSchedule::Curriculum(s) | RewardSchedule::Cyclical(s) => s.iter().map(|(r, _)| r).collect(),
        }
    }
}

fn shift(e: DslError, by: usize) -> DslError {
    DslError::new(e.position + by, e.message)
}

/// Parses a schedule, checking item names against `config`.
pub fn parse_schedule(text: &str, config: &WorldConfig) -> Result<RewardSchedule, DslError> {
    let trimmed_start = text.len() - text.trim_start().len();
    let body = text.trim();
    let char_offset = |byte: usize| text[..byte].chars().count();
    for (keyword, cyclical) in [("Curriculum", false), ("Cyclical", true)] {
        let Some(rest) = body.strip_prefix(keyword) else { continue };
        let rest_trim = rest.trim_start();
        if !rest_trim.starts_with('(') {
            continue;
        }
        let open = trimmed_start + keyword.len() + (rest.len() - rest_trim.len());
        if !body.ends_with(')') {
            return Err(DslError::new(char_offset(text.trim_end().len()), format!("`{keyword}(` is not closed")));
        }
        let inner_start = open + 1;
        let inner = &text[inner_start..trimmed_start + body.len() - 1];
        let mut stages = Vec::new();
        let mut at = inner_start;
        for part in inner.split(';') {
            let part_start = at;
            at += part.len() + 1;
            if part.trim().is_empty() {
                return Err(DslError::new(char_offset(part_start), "empty schedule stage"));
            }
            let Some((expr, steps)) = part.rsplit_once(':') else {
                return Err(DslError::new(char_offset(part_start), "expected `<reward> : <steps>`"));
            };
            let steps_at = part_start + expr.len() + 1;
            let n: u64 = steps.trim().parse().map_err(|_| DslError::new(char_offset(steps_at), format!("invalid step count `{}`", steps.trim())))?;
            if n == 0 {
                return Err(DslError::new(char_offset(steps_at), "step counts must be positive"));
            }
            let reward = parse_reward(expr, config).map_err(|e| shift(e, char_offset(part_start)))?;
            stages.push((reward, n));
        }
        return Ok(if cyclical { RewardSchedule::Cyclical(stages) } else { RewardSchedule::Curriculum(stages) });
    }
    let inner = body.strip_prefix("Fixed(").and_then(|b| b.strip_suffix(')'));
    match inner {
        Some(expr) => parse_reward(expr, config).map(RewardSchedule::Fixed).map_err(|e| shift(e, char_offset(trimmed_start + 6))),
        None => parse_reward(text, config).map(RewardSchedule::Fixed),
    }
}

impl fmt::Display for RewardSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, name: &str, stages: &[(RewardExpr, u64)]| {
            write!(f, "{name}(")?;
            for (i, (r, n)) in stages.iter().enumerate() {
                if i > 0 {
                    f.write_str("; ")?;
                }
                write!(f, "{r} : {n}")?;
            }
            f.write_str(")")
        };
        match self {
            RewardSchedule::Fixed(r) => write!(f, "{r}"),
            RewardSchedule::Curriculum(s) => list(f, "Curriculum", s),
            RewardSchedule::Cyclical(s) => list(f, "Cyclical", s),
        }
    }
}
