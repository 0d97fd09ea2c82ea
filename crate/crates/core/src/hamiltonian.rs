//! Sector blocks of the interaction Hamiltonian and its diagonal effective
//! forms.
//!
//! With `ħ = g = 1` and the conserved part `∝ N` dropped, the interaction in
//! sector `N` reads
//!
//! ```text
//! H_int = Δ/(k+1) (n_b - n_a) + (a^k b† + a†^k b)
//! ```
//!
//! In the descending-`n_a` basis of [`SectorBasis`] this is a real symmetric
//! tridiagonal matrix with non-negative couplings
//! `√(n_a (n_a-1)…(n_a-k+1) (n_b+1))`.

use log::warn;
use num_complex::Complex64;

use crate::fock::{HarmonicOrder, SectorBasis};
use crate::linalg::DenseMatrix;
use crate::{Error, Result};

/// Default dispersive threshold: coupled levels must be separated by at
/// least this multiple of the block's largest coupling.
pub const DEFAULT_GAP_FACTOR: f64 = 10.0;

/// Interaction Hamiltonian restricted to one sector, in units of `g`.
#[derive(Clone, Debug, PartialEq)]
pub struct TridiagonalBlock {
    pub basis: SectorBasis,
    pub diag: Vec<f64>,
    /// `offdiag[j]` couples entries `j` and `j + 1`.
    pub offdiag: Vec<f64>,
    pub detuning_over_g: f64,
}

impl TridiagonalBlock {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn max_offdiag(&self) -> f64 {
        self.offdiag.iter().copied().fold(0.0, f64::max)
    }

    /// Infinity norm of the block.
    pub fn norm(&self) -> f64 {
        (0..self.dim())
            .map(|i| {
                let left = if i > 0 { self.offdiag[i - 1].abs() } else { 0.0 };
                let right = self.offdiag.get(i).map_or(0.0, |x| x.abs());
                self.diag[i].abs() + left + right
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.dim());
        for (i, &d) in self.diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        for (i, &e) in self.offdiag.iter().enumerate() {
            m[(i, i + 1)] = e;
            m[(i + 1, i)] = e;
        }
        m
    }

    /// `⟨ψ|H|ψ⟩` for sector amplitudes `ψ`.
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        let mut acc = 0.0;
        for (i, c) in psi.iter().enumerate() {
            acc += self.diag[i] * c.norm_sqr();
            if let Some(&e) = self.offdiag.get(i) {
                acc += 2.0 * e * (c.conj() * psi[i + 1]).re;
            }
        }
        acc
    }
}

/// Coefficient `c_k` of the detuning diagonal `c_k Δ (n_b - n_a)`.
///
/// Splitting `ω_a n_a + ω_b n_b` into a multiple of `N = n_a + k n_b` plus a
/// multiple of `n_b - n_a` fixes it to `1 / (k + 1)`.
pub fn detuning_coefficient(order: HarmonicOrder) -> f64 {
    1.0 / (order.k() as f64 + 1.0)
}

/// Matrix element between `(n_a, n_b)` and `(n_a - k, n_b + 1)`.
pub fn coupling(na: usize, nb: usize, order: HarmonicOrder) -> f64 {
    let k = order.k();
    if na < k {
        return 0.0;
    }
    let falling: f64 = (0..k).map(|i| (na - i) as f64).product();
    (falling * (nb + 1) as f64).sqrt()
}

fn detuning_energy(na: usize, nb: usize, order: HarmonicOrder, detuning_over_g: f64) -> f64 {
    detuning_coefficient(order) * detuning_over_g * (nb as f64 - na as f64)
}

/// Builds `H_int / g` for one sector.
pub fn build_sector_block(basis: &SectorBasis, detuning_over_g: f64) -> TridiagonalBlock {
    let order = basis.order();
    let pairs = basis.pairs();
    let diag = pairs
        .iter()
        .map(|&(na, nb)| detuning_energy(na, nb, order, detuning_over_g))
        .collect();
    let offdiag = pairs
        .iter()
        .take(pairs.len().saturating_sub(1))
        .map(|&(na, nb)| coupling(na, nb, order))
        .collect();
    TridiagonalBlock {
        basis: basis.clone(),
        diag,
        offdiag,
        detuning_over_g,
    }
}

/// Diagonal effective Hamiltonians valid for `|Δ| ≫ g`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EffectiveForm {
    /// `Δ/3 (n_b - n_a) - λ [4 n_b n_a - n_a²]`, exactly as printed for SHG.
    PaperEq12,
    /// `λ {9 n_b (n_a² + n_a) - n_a³ - 6 n_a²}` for THG, optionally with the
    /// `Δ/4 (n_b - n_a)` detuning diagonal added.
    PaperEq21 { detuning_diagonal: bool },
    /// Detuning diagonal plus the second-order level shifts; the reference
    /// form for quantitative checks.
    SecondOrderPt,
    /// `λ n_a²` alone, only meaningful with the harmonic mode in vacuum.
    KerrOnly,
}

impl EffectiveForm {
    pub fn name(&self) -> &'static str {
        match self {
            Self::PaperEq12 => "eq12",
            Self::PaperEq21 {
                detuning_diagonal: false,
            } => "eq21",
            Self::PaperEq21 {
                detuning_diagonal: true,
            } => "eq21-detuned",
            Self::SecondOrderPt => "pt",
            Self::KerrOnly => "kerr",
        }
    }

    pub fn supports(&self, order: HarmonicOrder) -> bool {
        match self {
            Self::PaperEq12 | Self::KerrOnly => order == HarmonicOrder::Second,
            Self::PaperEq21 { .. } => order == HarmonicOrder::Third,
            Self::SecondOrderPt => true,
        }
    }
}

impl std::str::FromStr for EffectiveForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eq12" => Ok(Self::PaperEq12),
            "eq21" => Ok(Self::PaperEq21 {
                detuning_diagonal: false,
            }),
            "eq21-detuned" => Ok(Self::PaperEq21 {
                detuning_diagonal: true,
            }),
            "pt" => Ok(Self::SecondOrderPt),
            "kerr" => Ok(Self::KerrOnly),
            other => Err(Error::InvalidParameter(format!("unknown effective form '{other}'"))),
        }
    }
}

/// Effective energy of `|n_a, n_b⟩` in units of `g`, with `λ/g = g/Δ`.
pub fn effective_energy(
    na: usize,
    nb: usize,
    order: HarmonicOrder,
    detuning_over_g: f64,
    form: EffectiveForm,
) -> Result<f64> {
    if detuning_over_g == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    if !form.supports(order) {
        return Err(Error::FormOrderMismatch {
            form: form.name(),
            order: order.k() as u32,
        });
    }
    let lambda = 1.0 / detuning_over_g;
    let (a, b) = (na as f64, nb as f64);
    let free = detuning_energy(na, nb, order, detuning_over_g);
    let energy = match form {
        EffectiveForm::PaperEq12 => free - lambda * (4.0 * b * a - a * a),
        EffectiveForm::PaperEq21 { detuning_diagonal } => {
            let kerr = lambda * (9.0 * b * (a * a + a) - a * a * a - 6.0 * a * a);
            if detuning_diagonal {
                free + kerr
            } else {
                kerr
            }
        }
        EffectiveForm::SecondOrderPt => {
            // every coupled pair is split by exactly ±Δ: up-conversion lies Δ
            // above, down-conversion Δ below
            let k = order.k();
            let rising: f64 = (1..=k).map(|i| a + i as f64).product();
            let falling: f64 = (0..k).map(|i| a - i as f64).product();
            free + lambda * (rising * b - falling * (b + 1.0))
        }
        EffectiveForm::KerrOnly => lambda * a * a,
    };
    Ok(energy)
}

pub fn effective_sector_diagonal(
    basis: &SectorBasis,
    detuning_over_g: f64,
    form: EffectiveForm,
) -> Result<Vec<f64>> {
    basis
        .pairs()
        .iter()
        .map(|&(na, nb)| effective_energy(na, nb, basis.order(), detuning_over_g, form))
        .collect()
}

/// Second-order corrected diagonal `E_j + Σ_i V_ij² / (E_j - E_i)` using
/// [`DEFAULT_GAP_FACTOR`].
pub fn second_order_pt_diagonal(block: &TridiagonalBlock) -> Result<Vec<f64>> {
    second_order_pt_diagonal_with_gap(block, DEFAULT_GAP_FACTOR * block.max_offdiag())
}

/// As [`second_order_pt_diagonal`] with an explicit minimum gap. A zero gap
/// between coupled levels is always rejected.
pub fn second_order_pt_diagonal_with_gap(block: &TridiagonalBlock, min_gap: f64) -> Result<Vec<f64>> {
    let e = &block.diag;
    for (j, &v) in block.offdiag.iter().enumerate() {
        let gap = (e[j] - e[j + 1]).abs();
        if v != 0.0 && (gap < min_gap || gap == 0.0) {
            return Err(Error::DegenerateGap {
                sector: block.basis.charge(),
                gap,
                threshold: min_gap,
            });
        }
    }
    let mut out = e.clone();
    for (j, &v) in block.offdiag.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let v2 = v * v;
        out[j] += v2 / (e[j] - e[j + 1]);
        out[j + 1] += v2 / (e[j + 1] - e[j]);
    }
    Ok(out)
}

/// Conjugates the block by `U = exp[(g/Δ)(X₊ - X₋)]`, `X₊ = b† a^k`, and
/// returns `U H Uᵀ` as a dense symmetric matrix.
///
/// For `g_over_delta = g/Δ` the first-order couplings cancel and what is left
/// off the diagonal is `O(g²/Δ)`.
pub fn small_rotation_transform(block: &TridiagonalBlock, g_over_delta: f64) -> DenseMatrix {
    if g_over_delta.abs() > 0.1 {
        warn!("small rotation with |g/Δ| = {} is outside the perturbative regime", g_over_delta.abs());
    }
    let n = block.dim();
    let h = block.to_dense();
    if g_over_delta == 0.0 {
        return h;
    }
    let mut gen = DenseMatrix::zeros(n);
    for (j, &v) in block.offdiag.iter().enumerate() {
        gen[(j + 1, j)] = g_over_delta * v;
        gen[(j, j + 1)] = -g_over_delta * v;
    }
    let u = expm(&gen);
    let out = u.matmul(&h).matmul(&u.transpose());
    DenseMatrix::from_fn(n, |i, j| 0.5 * (out[(i, j)] + out[(j, i)]))
}

/// Matrix exponential by scaling and squaring of a Taylor series.
fn expm(a: &DenseMatrix) -> DenseMatrix {
    let n = a.dim();
    let norm = a.norm();
    let mut squarings = 0;
    while norm / f64::powi(2.0, squarings) > 0.25 {
        squarings += 1;
    }
    let scale = f64::powi(2.0, squarings);
    let scaled = DenseMatrix::from_fn(n, |i, j| a[(i, j)] / scale);
    let mut sum = DenseMatrix::identity(n);
    let mut term = DenseMatrix::identity(n);
    for p in 1..=24 {
        term = term.matmul(&scaled);
        let inv = 1.0 / p as f64;
        term = DenseMatrix::from_fn(n, |i, j| term[(i, j)] * inv);
        sum = DenseMatrix::from_fn(n, |i, j| sum[(i, j)] + term[(i, j)]);
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}
