//! Intensity and interaction functions of the item point process.
//!
//! Both are written in configs with the bracket notation used throughout
//! the item tables, e.g. `Constant[1.5]` or `PiecewiseBox[10,100,0,-6]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::geom::Position;
use crate::hash::hash_interp;

/// Per-type log-intensity of an item at a position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum IntensityFn {
    Zero,
    Constant(f64),
    RadialHash { delta: f64, scale: f64, offset: f64, amplitude: f64 },
}

/// Pairwise log-interaction between two items of given types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InteractionFn {
    Zero,
    /// Squared-euclidean box: `near` inside `d < inner`, `far` inside `inner <= d < outer`.
    PiecewiseBox { inner: f64, outer: f64, near: f64, far: f64 },
    Cross(CrossParams),
    /// Cross with `U = c + k * hash(x1 / s)` and `V = U + width`.
    CrossHash { scale: f64, offset: f64, amplitude: f64, width: f64, on_axis_near: f64, on_axis_far: f64, off_axis_near: f64, off_axis_far: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossParams {
    pub inner: f64,
    pub outer: f64,
    pub on_axis_near: f64,
    pub on_axis_far: f64,
    pub off_axis_near: f64,
    pub off_axis_far: f64,
}

impl IntensityFn {
    pub fn eval(&self, pos: Position) -> f64 {
        match *self {
            IntensityFn::Zero => 0.0,
            IntensityFn::Constant(v) => v,
            IntensityFn::RadialHash { delta, scale, offset, amplitude } => {
                let r = ((pos.x * pos.x + pos.y * pos.y) as f64).sqrt();
                offset - amplitude * hash_interp(r / scale + delta)
            }
        }
    }
}

impl CrossParams {
    fn eval(&self, p1: Position, p2: Position) -> f64 {
        cross(p1, p2, self.inner, self.outer, self.on_axis_near, self.on_axis_far, self.off_axis_near, self.off_axis_far)
    }
}

#[allow(clippy::too_many_arguments)]
fn cross(p1: Position, p2: Position, inner: f64, outer: f64, u: f64, v: f64, alpha: f64, beta: f64) -> f64 {
    let ax = (p1.x - p2.x).abs();
    let ay = (p1.y - p2.y).abs();
    let d = ax.min(ay);
    let big = ax.max(ay) as f64;
    if big <= inner {
        if d == 0 {
            u
        } else {
            alpha
        }
    } else if big <= outer {
        if d == 0 {
            v
        } else {
            beta
        }
    } else {
        0.0
    }
}

impl InteractionFn {
    /// Evaluates `g(p1, p2)` without any range cutoff.
    pub fn eval(&self, p1: Position, p2: Position) -> f64 {
        match *self {
            InteractionFn::Zero => 0.0,
            InteractionFn::PiecewiseBox { inner, outer, near, far } => {
                let d = p1.squared_distance(p2) as f64;
                if d < inner {
                    near
                } else if d < outer {
                    far
                } else {
                    0.0
                }
            }
            InteractionFn::Cross(ref c) => c.eval(p1, p2),
            InteractionFn::CrossHash { scale, offset, amplitude, width, on_axis_near, on_axis_far, off_axis_near, off_axis_far } => {
                let inner = offset + amplitude * hash_interp(p1.x as f64 / scale);
                cross(p1, p2, inner, inner + width, on_axis_near, on_axis_far, off_axis_near, off_axis_far)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            InteractionFn::Zero => true,
            InteractionFn::PiecewiseBox { near, far, .. } => near == 0.0 && far == 0.0,
            InteractionFn::Cross(c) => [c.on_axis_near, c.on_axis_far, c.off_axis_near, c.off_axis_far].iter().all(|&v| v == 0.0),
            InteractionFn::CrossHash { on_axis_near, on_axis_far, off_axis_near, off_axis_far, .. } => {
                [on_axis_near, on_axis_far, off_axis_near, off_axis_far].iter().all(|&v| v == 0.0)
            }
        }
    }

    /// Conservative Chebyshev radius outside of which the function is zero,
    /// capped at `cap`.
    pub fn support_radius(&self, cap: i64) -> i64 {
        if self.is_zero() {
            return -1;
        }
        let radius = match *self {
            InteractionFn::Zero => return -1,
            InteractionFn::PiecewiseBox { inner, outer, .. } => {
                let reach = inner.max(outer).max(0.0);
                reach.sqrt().ceil()
            }
            InteractionFn::Cross(c) => c.inner.max(c.outer).max(0.0).floor(),
            InteractionFn::CrossHash { .. } => return cap,
        };
        if radius.is_finite() && radius < cap as f64 {
            radius as i64
        } else {
            cap
        }
    }
}

fn parse_call(text: &str) -> Result<(String, Vec<f64>), ConfigError> {
    let err = |reason: &str| ConfigError::Function { text: text.to_string(), reason: reason.to_string() };
    let trimmed = text.trim();
    let (name, args) = match trimmed.find('[') {
        Some(open) => {
            if !trimmed.ends_with(']') {
                return Err(err("missing closing `]`"));
            }
            let inner = &trimmed[open + 1..trimmed.len() - 1];
            let args = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner
                    .split(',')
                    .map(|a| a.trim().parse::<f64>().map_err(|_| err(&format!("bad number `{}`", a.trim()))))
                    .collect::<Result<Vec<_>, _>>()?
            };
            (trimmed[..open].trim().to_string(), args)
        }
        None => (trimmed.to_string(), Vec::new()),
    };
    Ok((name, args))
}

fn expect_args(text: &str, args: &[f64], n: usize) -> Result<(), ConfigError> {
    if args.len() != n {
        return Err(ConfigError::Function { text: text.to_string(), reason: format!("expected {n} arguments, got {}", args.len()) });
    }
    Ok(())
}

impl FromStr for IntensityFn {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let (name, a) = parse_call(text)?;
        match name.as_str() {
            "Zero" => {
                expect_args(text, &a, 0)?;
                Ok(IntensityFn::Zero)
            }
            "Constant" => {
                expect_args(text, &a, 1)?;
                Ok(IntensityFn::Constant(a[0]))
            }
            "RadialHash" => {
                expect_args(text, &a, 4)?;
                if a[1] == 0.0 {
                    return Err(ConfigError::Function { text: text.into(), reason: "scale must be nonzero".into() });
                }
                Ok(IntensityFn::RadialHash { delta: a[0], scale: a[1], offset: a[2], amplitude: a[3] })
            }
            other => Err(ConfigError::Function { text: text.into(), reason: format!("unknown intensity function `{other}`") }),
        }
    }
}

impl FromStr for InteractionFn {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let (name, a) = parse_call(text)?;
        match name.as_str() {
            "Zero" => {
                expect_args(text, &a, 0)?;
                Ok(InteractionFn::Zero)
            }
            "PiecewiseBox" => {
                expect_args(text, &a, 4)?;
                Ok(InteractionFn::PiecewiseBox { inner: a[0], outer: a[1], near: a[2], far: a[3] })
            }
            "Cross" => {
                expect_args(text, &a, 6)?;
                Ok(InteractionFn::Cross(CrossParams {
                    inner: a[0],
                    outer: a[1],
                    on_axis_near: a[2],
                    on_axis_far: a[3],
                    off_axis_near: a[4],
                    off_axis_far: a[5],
                }))
            }
            "CrossHash" => {
                expect_args(text, &a, 8)?;
                if a[0] == 0.0 {
                    return Err(ConfigError::Function { text: text.into(), reason: "scale must be nonzero".into() });
                }
                Ok(InteractionFn::CrossHash {
                    scale: a[0],
                    offset: a[1],
                    amplitude: a[2],
                    width: a[3],
                    on_axis_near: a[4],
                    on_axis_far: a[5],
                    off_axis_near: a[6],
                    off_axis_far: a[7],
                })
            }
            other => Err(ConfigError::Function { text: text.into(), reason: format!("unknown interaction function `{other}`") }),
        }
    }
}

fn write_call(f: &mut fmt::Formatter<'_>, name: &str, args: &[f64]) -> fmt::Result {
    write!(f, "{name}")?;
    if !args.is_empty() {
        write!(f, "[")?;
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, "]")?;
    }
    Ok(())
}

impl fmt::Display for IntensityFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            IntensityFn::Zero => write_call(f, "Zero", &[]),
            IntensityFn::Constant(v) => write_call(f, "Constant", &[v]),
            IntensityFn::RadialHash { delta, scale, offset, amplitude } => write_call(f, "RadialHash", &[delta, scale, offset, amplitude]),
        }
    }
}

impl fmt::Display for InteractionFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            InteractionFn::Zero => write_call(f, "Zero", &[]),
            InteractionFn::PiecewiseBox { inner, outer, near, far } => write_call(f, "PiecewiseBox", &[inner, outer, near, far]),
            InteractionFn::Cross(c) => write_call(
                f,
                "Cross",
                &[c.inner, c.outer, c.on_axis_near, c.on_axis_far, c.off_axis_near, c.off_axis_far],
            ),
            InteractionFn::CrossHash { scale, offset, amplitude, width, on_axis_near, on_axis_far, off_axis_near, off_axis_far } => write_call(
                f,
                "CrossHash",
                &[scale, offset, amplitude, width, on_axis_near, on_axis_far, off_axis_near, off_axis_far],
            ),
        }
    }
}

macro_rules! string_conversions {
    ($ty:ty) => {
        impl TryFrom<String> for $ty {
            type Error = ConfigError;
            fn try_from(s: String) -> Result<Self, Self::Error> {
                s.parse()
            }
        }
        impl From<$ty> for String {
            fn from(v: $ty) -> String {
                v.to_string()
            }
        }
    };
}

string_conversions!(IntensityFn);
string_conversions!(InteractionFn);
