//! Exact evolution of a single Hadamard walker on the integer line.
//!
//! A state is stored as two dense amplitude arrays (one per chirality) over a
//! finite window of sites. One step applies the Hadamard coin and then moves
//! the `|+1⟩` component one site right and the `|−1⟩` component one site left,
//! so the window grows by exactly one site on each side.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Complex amplitude of one basis state `e_k ⊗ |c⟩`.
pub type Amplitude = Complex64;

/// Coin basis state. The ordering `(Plus, Minus)` fixes the Hadamard matrix
/// as `(1/√2)[[1, 1], [1, −1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoinTag {
    Plus,
    Minus,
}

impl CoinTag {
    pub const ALL: [CoinTag; 2] = [CoinTag::Plus, CoinTag::Minus];

    pub fn flipped(self) -> CoinTag {
        match self {
            CoinTag::Plus => CoinTag::Minus,
            CoinTag::Minus => CoinTag::Plus,
        }
    }
}

impl fmt::Display for CoinTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoinTag::Plus => f.write_str("plus"),
            CoinTag::Minus => f.write_str("minus"),
        }
    }
}

impl std::str::FromStr for CoinTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "plus" | "+" | "+1" => Ok(CoinTag::Plus),
            "minus" | "-" | "-1" => Ok(CoinTag::Minus),
            other => Err(format!("unknown coin state `{other}` (expected plus or minus)")),
        }
    }
}

/// Pure state of one walker restricted to the window `[offset, offset + len)`.
///
/// Amplitudes outside the window are zero and not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorState {
    offset: i64,
    plus: Vec<Amplitude>,
    minus: Vec<Amplitude>,
    steps_taken: u64,
}

impl SpinorState {
    /// The basis state `e_site ⊗ |coin⟩`.
    pub fn from_localized(site: i64, coin: CoinTag) -> Self {
        let one = Amplitude::new(1.0, 0.0);
        let zero = Amplitude::new(0.0, 0.0);
        let (plus, minus) = match coin {
            CoinTag::Plus => (one, zero),
            CoinTag::Minus => (zero, one),
        };
        SpinorState {
            offset: site,
            plus: vec![plus],
            minus: vec![minus],
            steps_taken: 0,
        }
    }

    /// Leftmost site of the stored window.
    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Number of stored sites.
    pub fn len(&self) -> usize {
        self.plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plus.is_empty()
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    pub fn plus(&self) -> &[Amplitude] {
        &self.plus
    }

    pub fn minus(&self) -> &[Amplitude] {
        &self.minus
    }

    /// Amplitude at `(site, coin)`, zero outside the window.
    pub fn amplitude(&self, site: i64, coin: CoinTag) -> Amplitude {
        let idx = site - self.offset;
        if idx < 0 || idx as usize >= self.len() {
            return Amplitude::new(0.0, 0.0);
        }
        match coin {
            CoinTag::Plus => self.plus[idx as usize],
            CoinTag::Minus => self.minus[idx as usize],
        }
    }

    pub fn total_probability(&self) -> f64 {
        self.plus
            .iter()
            .zip(&self.minus)
            .map(|(p, m)| p.norm_sqr() + m.norm_sqr())
            .sum()
    }

    /// One application of `U = S ∘ (Id ⊗ H)`.
    pub fn step(&self) -> SpinorState {
        let mut next = self.clone();
        next.step_in_place(&mut Vec::new(), &mut Vec::new());
        next
    }

    /// `n` applications of [`SpinorState::step`]. Two scratch buffers are
    /// swapped with the state arrays so the loop allocates only while growing.
    pub fn evolve(&self, n: u64) -> SpinorState {
        let mut state = self.clone();
        let mut scratch_plus = Vec::with_capacity(self.len() + 2 * n as usize);
        let mut scratch_minus = Vec::with_capacity(self.len() + 2 * n as usize);
        for _ in 0..n {
            state.step_in_place(&mut scratch_plus, &mut scratch_minus);
        }
        state
    }

    fn step_in_place(&mut self, next_plus: &mut Vec<Amplitude>, next_minus: &mut Vec<Amplitude>) {
        let w = self.len();
        let zero = Amplitude::new(0.0, 0.0);
        next_plus.clear();
        next_plus.resize(w + 2, zero);
        next_minus.clear();
        next_minus.resize(w + 2, zero);
        // Old index i (site offset + i) lands at new index i + 2 (plus) or i (minus),
        // since the new window starts one site further left.
        for (i, (&p, &m)) in self.plus.iter().zip(&self.minus).enumerate() {
            next_plus[i + 2] = (p + m) * FRAC_1_SQRT_2;
            next_minus[i] = (p - m) * FRAC_1_SQRT_2;
        }
        std::mem::swap(&mut self.plus, next_plus);
        std::mem::swap(&mut self.minus, next_minus);
        self.offset -= 1;
        self.steps_taken += 1;
    }

    /// Measurement law of the position: `|plus_k|² + |minus_k|²` per site.
    pub fn position_distribution(&self) -> PositionDistribution {
        let probs = self
            .plus
            .iter()
            .zip(&self.minus)
            .map(|(p, m)| p.norm_sqr() + m.norm_sqr())
            .collect();
        PositionDistribution {
            offset: self.offset,
            probs,
        }
    }
}

/// Probability mass function on the window `[offset, offset + len)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionDistribution {
    offset: i64,
    probs: Vec<f64>,
}

impl PositionDistribution {
    /// Wraps raw masses. Returns `None` if the vector is empty or has a
    /// negative or non-finite entry.
    pub fn new(offset: i64, probs: Vec<f64>) -> Option<Self> {
        if probs.is_empty() || probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return None;
        }
        Some(PositionDistribution { offset, probs })
    }

    pub fn point_mass(site: i64) -> Self {
        PositionDistribution {
            offset: site,
            probs: vec![1.0],
        }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Last site of the window.
    pub fn last_site(&self) -> i64 {
        self.offset + self.probs.len() as i64 - 1
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, site: i64) -> f64 {
        let idx = site - self.offset;
        if idx < 0 || idx as usize >= self.probs.len() {
            0.0
        } else {
            self.probs[idx as usize]
        }
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `(site, probability)` pairs over the whole window, zeros included.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (self.offset + i as i64, p))
    }

    /// The same masses moved `by` sites to the right.
    pub fn shifted(&self, by: i64) -> PositionDistribution {
        PositionDistribution {
            offset: self.offset + by,
            probs: self.probs.clone(),
        }
    }

    /// Reflection `site ↦ −site`.
    pub fn mirrored(&self) -> PositionDistribution {
        let mut probs = self.probs.clone();
        probs.reverse();
        PositionDistribution {
            offset: -self.last_site(),
            probs,
        }
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(k, p)| k as f64 * p).sum()
    }
}

/// `p_n(0, ·)` for a walker started at site 0 with the given coin.
pub fn chirality_kernel(coin: CoinTag, n: u64) -> PositionDistribution {
    SpinorState::from_localized(0, coin)
        .evolve(n)
        .position_distribution()
}

/// Both chirality kernels after `n` steps, `(plus, minus)`.
pub fn chirality_kernels(n: u64) -> (PositionDistribution, PositionDistribution) {
    (chirality_kernel(CoinTag::Plus, n), chirality_kernel(CoinTag::Minus, n))
}

/// `q_n(m) = ½(p_n⁺(0, m) + p_n⁻(0, m))`, the position law of a walker whose
/// starting coin is `|+1⟩` or `|−1⟩` with equal weight. Even in `m`.
pub fn averaged_kernel(n: u64) -> PositionDistribution {
    let (plus, minus) = chirality_kernels(n);
    average_kernels(&plus, &minus)
}

pub(crate) fn average_kernels(
    plus: &PositionDistribution,
    minus: &PositionDistribution,
) -> PositionDistribution {
    debug_assert_eq!(plus.offset, minus.offset);
    debug_assert_eq!(plus.probs.len(), minus.probs.len());
    let probs = plus
        .probs
        .iter()
        .zip(&minus.probs)
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    PositionDistribution {
        offset: plus.offset,
        probs,
    }
}
