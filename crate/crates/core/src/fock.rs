//! Fock-space bookkeeping: coherent amplitudes, Poisson-tail truncation, the
//! conserved-charge sectors `N = n_a + k n_b` and two-mode states stored
//! sector by sector.

use std::fmt;

use rayon::prelude::*;

use crate::{Error, Result, C64};

/// Default truncation budget for discarded probability.
pub const DEFAULT_EPSILON: f64 = 1e-10;

/// Harmonic order `k` of the up-conversion `a^k b† + h.c.`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HarmonicOrder {
    Second,
    Third,
}

impl HarmonicOrder {
    pub fn new(k: u32) -> Result<Self> {
        match k {
            2 => Ok(Self::Second),
            3 => Ok(Self::Third),
            other => Err(Error::InvalidOrder(other)),
        }
    }

    pub fn k(self) -> usize {
        match self {
            Self::Second => 2,
            Self::Third => 3,
        }
    }
}

impl TryFrom<u32> for HarmonicOrder {
    type Error = Error;

    fn try_from(k: u32) -> Result<Self> {
        Self::new(k)
    }
}

impl fmt::Display for HarmonicOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.k())
    }
}

/// Single-mode amplitudes `values[n]` for `n = 0..=n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeAmplitudes {
    pub values: Vec<C64>,
}

impl ModeAmplitudes {
    pub fn new(values: Vec<C64>) -> Self {
        assert!(!values.is_empty(), "mode amplitudes need at least n = 0");
        Self { values }
    }

    pub fn vacuum(n_max: usize) -> Self {
        Self::fock(0, n_max)
    }

    /// Number state `|n⟩` embedded in a space of cutoff `n_max`.
    pub fn fock(n: usize, n_max: usize) -> Self {
        let mut values = vec![C64::new(0.0, 0.0); n_max.max(n) + 1];
        values[n] = C64::new(1.0, 0.0);
        Self { values }
    }

    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn normalized(mut self) -> Self {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            for c in &mut self.values {
                *c /= norm;
            }
        }
        self
    }

    /// Zero-pads (or truncates) to the cutoff `n_max`.
    pub fn resized(&self, n_max: usize) -> Self {
        let mut values = self.values.clone();
        values.resize(n_max + 1, C64::new(0.0, 0.0));
        Self { values }
    }

    /// `⟨self|other⟩`, padding the shorter side with zeros.
    pub fn inner(&self, other: &Self) -> C64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Truncated coherent state `e^{-|α|²/2} α^n / √(n!)`, left unnormalized.
///
/// The recurrence is seeded at the most probable photon number in log space,
/// so neither `n!` nor `e^{-|α|²/2}` over/underflows on its own.
pub fn coherent_amplitudes(alpha: C64, n_max: usize) -> ModeAmplitudes {
    let mut values = vec![C64::new(0.0, 0.0); n_max + 1];
    let r2 = alpha.norm_sqr();
    if r2 == 0.0 {
        values[0] = C64::new(1.0, 0.0);
        return ModeAmplitudes { values };
    }
    let seed = (r2.floor() as usize).min(n_max);
    let ln_r = r2.sqrt().ln();
    let ln_fact: f64 = (1..=seed).map(|j| (j as f64).ln()).sum();
    let ln_mag = -0.5 * r2 + seed as f64 * ln_r - 0.5 * ln_fact;
    values[seed] = C64::from_polar(ln_mag.exp(), seed as f64 * alpha.arg());
    for n in seed..n_max {
        values[n + 1] = values[n] * alpha / ((n + 1) as f64).sqrt();
    }
    for n in (1..=seed).rev() {
        values[n - 1] = values[n] * (n as f64).sqrt() / alpha;
    }
    ModeAmplitudes { values }
}

/// Photon-number cutoffs chosen from Poisson tails.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cutoffs {
    pub n_max_a: usize,
    pub n_max_b: usize,
    /// Largest sector retained, `n_max_a + k n_max_b`.
    pub n_max: usize,
}

/// Smallest `n` with `P(X > n) < epsilon` for `X ~ Poisson(mean)`.
pub fn poisson_cutoff(mean: f64, epsilon: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    // log-pmf up to where the tail is far below any representable epsilon
    let ln_mean = mean.ln();
    let mut ln_p = vec![-mean];
    let mut j = 0usize;
    loop {
        let next = ln_p[j] + ln_mean - ((j + 1) as f64).ln();
        j += 1;
        ln_p.push(next);
        if j as f64 > mean && next < -745.0 {
            break;
        }
    }
    let pmf: Vec<f64> = ln_p.iter().map(|l| l.exp()).collect();
    // tail[n] = P(X > n), summed from the top for accuracy
    let mut tail = vec![0.0; pmf.len()];
    let mut acc = 0.0;
    for n in (0..pmf.len()).rev() {
        tail[n] = acc;
        acc += pmf[n];
    }
    tail.iter().position(|&t| t < epsilon).unwrap_or(pmf.len() - 1)
}

/// Cutoffs for a product of coherent states with mean photon numbers
/// `nbar_a`, `nbar_b` such that the discarded probability stays below
/// `epsilon`. A mode in vacuum gets cutoff 0 and leaves the whole budget to
/// the other one; otherwise each mode gets `epsilon / 2`.
pub fn choose_cutoffs(
    nbar_a: f64,
    nbar_b: f64,
    epsilon: f64,
    order: HarmonicOrder,
) -> Result<Cutoffs> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    if !(nbar_a >= 0.0 && nbar_b >= 0.0) || !nbar_a.is_finite() || !nbar_b.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "mean photon numbers must be finite and non-negative (got {nbar_a}, {nbar_b})"
        )));
    }
    let share = if nbar_a > 0.0 && nbar_b > 0.0 {
        epsilon / 2.0
    } else {
        epsilon
    };
    let n_max_a = poisson_cutoff(nbar_a, share);
    let n_max_b = poisson_cutoff(nbar_b, share);
    Ok(Cutoffs {
        n_max_a,
        n_max_b,
        n_max: n_max_a + order.k() * n_max_b,
    })
}

/// The occupation pairs `(n_a, n_b)` with `n_a + k n_b = N`, ordered by
/// descending `n_a`. Adjacent entries are exactly the pairs the interaction
/// connects.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectorBasis {
    n: usize,
    order: HarmonicOrder,
    pairs: Vec<(usize, usize)>,
}

impl SectorBasis {
    pub fn new(n: usize, order: HarmonicOrder) -> Self {
        let k = order.k();
        let pairs = (0..=n / k).map(|j| (n - k * j, j)).collect();
        Self { n, order, pairs }
    }

    pub fn charge(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> HarmonicOrder {
        self.order
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// `sector_basis(N, k)` with the order given as a plain integer.
pub fn sector_basis(n: usize, k: u32) -> Result<SectorBasis> {
    Ok(SectorBasis::new(n, HarmonicOrder::new(k)?))
}

/// Dimension of the space spanned by sectors `0..=n_max`.
pub fn blocked_dimension(n_max: usize, order: HarmonicOrder) -> usize {
    (0..=n_max).map(|n| n / order.k() + 1).sum()
}

/// A pure two-mode state with amplitudes grouped by conserved charge.
///
/// Sector `N` holds `N / k + 1` amplitudes in [`SectorBasis`] order: entry `j`
/// is the amplitude of `(N - k j, j)`. Truncated probability is kept in
/// `norm_deficit` rather than renormalized away.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockedState {
    order: HarmonicOrder,
    sectors: Vec<Vec<C64>>,
    pub norm_deficit: f64,
}

impl BlockedState {
    pub fn zeros(order: HarmonicOrder, n_max: usize) -> Self {
        let sectors = (0..=n_max)
            .map(|n| vec![C64::new(0.0, 0.0); n / order.k() + 1])
            .collect();
        Self {
            order,
            sectors,
            norm_deficit: 1.0,
        }
    }

    /// Builds a state from explicit `((n_a, n_b), amplitude)` entries;
    /// the deficit is whatever probability is missing from a unit norm.
    pub fn from_entries<I>(order: HarmonicOrder, n_max: usize, entries: I) -> Self
    where
        I: IntoIterator<Item = ((usize, usize), C64)>,
    {
        let mut state = Self::zeros(order, n_max);
        for ((na, nb), amp) in entries {
            state.set(na, nb, amp);
        }
        state.norm_deficit = (1.0 - state.norm_sqr()).max(0.0);
        state
    }

    pub(crate) fn from_sectors(order: HarmonicOrder, sectors: Vec<Vec<C64>>, norm_deficit: f64) -> Self {
        Self {
            order,
            sectors,
            norm_deficit,
        }
    }

    pub fn order(&self) -> HarmonicOrder {
        self.order
    }

    /// Largest retained sector `N_max`.
    pub fn n_max(&self) -> usize {
        self.sectors.len() - 1
    }

    pub fn sectors(&self) -> &[Vec<C64>] {
        &self.sectors
    }

    pub fn sector(&self, n: usize) -> &[C64] {
        &self.sectors[n]
    }

    pub fn basis(&self, n: usize) -> SectorBasis {
        SectorBasis::new(n, self.order)
    }

    /// Amplitude of `|n_a, n_b⟩`; zero outside the retained sectors.
    pub fn amplitude(&self, na: usize, nb: usize) -> C64 {
        let n = na + self.order.k() * nb;
        self.sectors
            .get(n)
            .map(|s| s[nb])
            .unwrap_or(C64::new(0.0, 0.0))
    }

    /// Sets the amplitude of `|n_a, n_b⟩`.
    ///
    /// # Panics
    /// If `n_a + k n_b` exceeds `N_max`.
    pub fn set(&mut self, na: usize, nb: usize, amp: C64) {
        let n = na + self.order.k() * nb;
        assert!(n <= self.n_max(), "pair ({na}, {nb}) lies outside N <= {}", self.n_max());
        self.sectors[n][nb] = amp;
    }

    pub fn norm_sqr(&self) -> f64 {
        self.sectors
            .iter()
            .map(|s| s.iter().map(|c| c.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// Total number of retained two-mode basis states.
    pub fn dimension(&self) -> usize {
        self.sectors.iter().map(Vec::len).sum()
    }

    /// `⟨self|other⟩` over the common sectors.
    pub fn inner(&self, other: &Self) -> C64 {
        self.sectors
            .iter()
            .zip(&other.sectors)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>())
            .sum()
    }

    /// Iterates `((n_a, n_b), amplitude)` sector by sector.
    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), C64)> + '_ {
        let k = self.order.k();
        self.sectors.iter().enumerate().flat_map(move |(n, s)| {
            s.iter()
                .enumerate()
                .map(move |(j, &amp)| ((n - k * j, j), amp))
        })
    }
}

/// Embeds `|a⟩ ⊗ |b⟩` into the blocked layout, keeping every sector up to
/// `a.n_max + k b.n_max`.
pub fn embed_product_state(a: &ModeAmplitudes, b: &ModeAmplitudes, order: HarmonicOrder) -> BlockedState {
    let k = order.k();
    let n_max = a.n_max() + k * b.n_max();
    let sectors: Vec<Vec<C64>> = (0..=n_max)
        .into_par_iter()
        .map(|n| {
            (0..=n / k)
                .map(|j| {
                    let na = n - k * j;
                    match (a.values.get(na), b.values.get(j)) {
                        (Some(x), Some(y)) => x * y,
                        _ => C64::new(0.0, 0.0),
                    }
                })
                .collect()
        })
        .collect();
    let mut state = BlockedState::from_sectors(order, sectors, 0.0);
    state.norm_deficit = (1.0 - state.norm_sqr()).max(0.0);
    state
}
