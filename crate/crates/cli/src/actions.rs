//! Action logs: a header line, then one action per line in step order.
//!
//! ```text
//! # jbw-actions v1
//! MoveForward
//! TurnLeft
//! Drop 2
//! ```

use jbw_core::Action;

pub const HEADER: &str = "# jbw-actions v1";

pub fn format_action(a: Action) -> String {
    match a {
        Action::Drop(t) => format!("Drop {t}"),
        other => other.kind().name().to_string(),
    }
}

pub fn parse_action(line: &str) -> Option<Action> {
    let mut parts = line.split_whitespace();
    let action = match parts.next()? {
        "MoveForward" => Action::MoveForward,
        "TurnLeft" => Action::TurnLeft,
        "TurnRight" => Action::TurnRight,
        "Collect" => Action::Collect,
        "NoOp" => Action::NoOp,
        "Drop" => Action::Drop(parts.next()?.parse().ok()?),
        _ => return None,
    };
    parts.next().is_none().then_some(action)
}

pub fn render(actions: &[Action]) -> String {
    let mut out = String::with_capacity(actions.len() * 12 + HEADER.len() + 1);
    out.push_str(HEADER);
    out.push('\n');
    for &a in actions {
        out.push_str(&format_action(a));
        out.push('\n');
    }
    out
}

/// Parses a log; errors name the offending 1-based line.
pub fn parse(text: &str) -> Result<Vec<Action>, String> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        _ => return Err(format!("action log must start with `{HEADER}`")),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        out.push(parse_action(line).ok_or_else(|| format!("line {}: cannot parse action `{line}`", i + 1))?);
    }
    Ok(out)
}
