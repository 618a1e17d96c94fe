//! Compactly supported piecewise-linear profiles, used both as initial
//! density profiles and as test functions.
//!
//! Text format: one knot per line, `x value`, whitespace separated. Blank
//! lines and lines starting with `#` are skipped.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("a profile needs at least two knots, got {0}")]
    TooFewKnots(usize),
    #[error("knots and values differ in length ({knots} vs {values})")]
    LengthMismatch { knots: usize, values: usize },
    #[error("knot {index} is not finite")]
    NonFiniteKnot { index: usize },
    #[error("knots must be strictly increasing (knot {index} = {x} after {prev})")]
    NotIncreasing { index: usize, x: f64, prev: f64 },
    #[error("negative or non-finite value {value} at x = {x}")]
    InvalidValue { x: f64, value: f64 },
    #[error("boundary knot at x = {x} has value {value}; profiles must vanish at both ends")]
    NonzeroBoundary { x: f64, value: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// Piecewise-linear function, identically zero outside `[knots[0], knots[last]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl Profile {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self, ProfileError> {
        if knots.len() != values.len() {
            return Err(ProfileError::LengthMismatch {
                knots: knots.len(),
                values: values.len(),
            });
        }
        if knots.len() < 2 {
            return Err(ProfileError::TooFewKnots(knots.len()));
        }
        for (index, &x) in knots.iter().enumerate() {
            if !x.is_finite() {
                return Err(ProfileError::NonFiniteKnot { index });
            }
            if index > 0 && x <= knots[index - 1] {
                return Err(ProfileError::NotIncreasing {
                    index,
                    x,
                    prev: knots[index - 1],
                });
            }
        }
        for (&x, &value) in knots.iter().zip(&values) {
            if !value.is_finite() || value < 0.0 {
                return Err(ProfileError::InvalidValue { x, value });
            }
        }
        for i in [0, knots.len() - 1] {
            if values[i] != 0.0 {
                return Err(ProfileError::NonzeroBoundary {
                    x: knots[i],
                    value: values[i],
                });
            }
        }
        Ok(Profile { knots, values })
    }

    /// Builds a profile from `(x, value)` pairs.
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self, ProfileError> {
        let (knots, values) = points.iter().copied().unzip();
        Profile::new(knots, values)
    }

    /// Tent of height `peak` on `[left, right]` with apex at `apex`.
    pub fn triangle(left: f64, apex: f64, right: f64, peak: f64) -> Result<Self, ProfileError> {
        Profile::new(vec![left, apex, right], vec![0.0, peak, 0.0])
    }

    /// Constant `level` on `[inner_left, inner_right]`, ramping linearly to
    /// zero at `outer_left` and `outer_right`.
    pub fn trapezoid(
        outer_left: f64,
        inner_left: f64,
        inner_right: f64,
        outer_right: f64,
        level: f64,
    ) -> Result<Self, ProfileError> {
        Profile::new(
            vec![outer_left, inner_left, inner_right, outer_right],
            vec![0.0, level, level, 0.0],
        )
    }

    /// The zero function on `[left, right]`.
    pub fn zero(left: f64, right: f64) -> Result<Self, ProfileError> {
        Profile::new(vec![left, right], vec![0.0, 0.0])
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Closed interval spanned by the knots; the function vanishes outside it.
    pub fn support(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(x > lo && x < hi) {
            return 0.0;
        }
        // First knot strictly greater than x; x is interior so 1 <= i <= last.
        let i = self.knots.partition_point(|&k| k <= x);
        let (x0, x1) = (self.knots[i - 1], self.knots[i]);
        let (y0, y1) = (self.values[i - 1], self.values[i]);
        let w = (x - x0) / (x1 - x0);
        y0 + w * (y1 - y0)
    }

    /// Exact integral (trapezoid rule is exact on linear pieces).
    pub fn integral(&self) -> f64 {
        self.knots
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }

    /// Same profile moved `by` to the right.
    pub fn translated(&self, by: f64) -> Profile {
        Profile {
            knots: self.knots.iter().map(|x| x + by).collect(),
            values: self.values.clone(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Result<Profile, ProfileError> {
        Profile::new(
            self.knots.clone(),
            self.values.iter().map(|v| v * factor).collect(),
        )
    }

    /// Parses the `x value` table.
    pub fn parse(text: &str) -> Result<Self, ProfileError> {
        let mut points = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let mut fields = content.split_whitespace();
            let mut next = |what: &str| -> Result<f64, ProfileError> {
                let tok = fields.next().ok_or_else(|| ProfileError::Parse {
                    line,
                    message: format!("missing {what}"),
                })?;
                tok.parse::<f64>().map_err(|e| ProfileError::Parse {
                    line,
                    message: format!("bad {what} `{tok}`: {e}"),
                })
            };
            let x = next("x")?;
            let v = next("value")?;
            if let Some(extra) = fields.next() {
                return Err(ProfileError::Parse {
                    line,
                    message: format!("unexpected trailing field `{extra}`"),
                });
            }
            if !v.is_finite() || v < 0.0 {
                return Err(ProfileError::Parse {
                    line,
                    message: format!("value {v} is negative or not finite"),
                });
            }
            points.push((x, v));
        }
        Profile::from_points(&points)
    }

    /// Writes the `x value` table. Uses the shortest representation that
    /// parses back to the same `f64`, so [`Profile::parse`] round-trips exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (x, v) in self.knots.iter().zip(&self.values) {
            let _ = writeln!(out, "{x:?} {v:?}");
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ProfileError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ProfileError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Profile::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ProfileError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| ProfileError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}
