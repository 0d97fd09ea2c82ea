//! Time evolution.
//!
//! - [`evolve_exact`]: spectral propagation under the sector blocks. Each block
//!   is diagonalized once by [`SpectralPropagator::new`]; evolving to any `gt`
//!   is a phase multiplication, so cost does not grow with time.
//! - [`evolve_effective`]: phase evolution under a diagonal effective form.
//! - [`kerr_propagate`] and [`analytic_rho_a`]: closed forms for the Kerr
//!   limit, used as oracles.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::fock::{coherent_amplitudes, BlockedState, HarmonicOrder, ModeAmplitudes, SectorBasis};
use crate::hamiltonian::{build_sector_block, detuning_coefficient, effective_energy, EffectiveForm};
use crate::linalg::{tridiag_eigen, EigenDecomposition};
use crate::observables::SingleModeDensity;
use crate::{Error, Result, C64};

/// Sign of the Kerr phase.
///
/// `Plus` evolves `|n⟩ → e^{-iλt n²}|n⟩` (the Hamiltonian `+λ n²`); `Minus`
/// is the conjugate evolution. For `Δ > 0` the exact SHG dynamics realizes
/// `Minus`, which is also the convention of the two-component cat with
/// phases `e^{±iπ/4}` on `|±α⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Convention {
    Plus,
    Minus,
}

impl Convention {
    pub fn sign(self) -> f64 {
        match self {
            Self::Plus => 1.0,
            Self::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Self::Plus => Self::Minus,
            Self::Minus => Self::Plus,
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Plus => "+1",
            Self::Minus => "-1",
        })
    }
}

impl FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+1" | "1" | "+" | "plus" => Ok(Self::Plus),
            "-1" | "-" | "minus" => Ok(Self::Minus),
            other => Err(Error::InvalidParameter(format!("convention must be +1 or -1, got '{other}'"))),
        }
    }
}

/// Eigendecompositions of every sector block `N = 0..=n_max`.
#[derive(Clone, Debug)]
pub struct SpectralPropagator {
    order: HarmonicOrder,
    detuning_over_g: f64,
    sectors: Vec<EigenDecomposition>,
}

impl SpectralPropagator {
    pub fn new(order: HarmonicOrder, n_max: usize, detuning_over_g: f64) -> Result<Self> {
        let sectors = (0..=n_max)
            .into_par_iter()
            .map(|n| tridiag_eigen(&build_sector_block(&SectorBasis::new(n, order), detuning_over_g)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            order,
            detuning_over_g,
            sectors,
        })
    }

    pub fn order(&self) -> HarmonicOrder {
        self.order
    }

    pub fn detuning_over_g(&self) -> f64 {
        self.detuning_over_g
    }

    pub fn n_max(&self) -> usize {
        self.sectors.len() - 1
    }

    pub fn sector(&self, n: usize) -> &EigenDecomposition {
        &self.sectors[n]
    }
}

/// `ψ_N → V e^{-iE gt} Vᵀ ψ_N` in every sector.
pub fn evolve_exact(state: &BlockedState, prop: &SpectralPropagator, gt: f64) -> Result<BlockedState> {
    if prop.order != state.order() || prop.n_max() < state.n_max() {
        return Err(Error::SectorMismatch {
            propagator: prop.n_max(),
            prop_order: prop.order.k() as u32,
            state: state.n_max(),
            state_order: state.order().k() as u32,
        });
    }
    let sectors = state
        .sectors()
        .par_iter()
        .zip(prop.sectors.par_iter())
        .map(|(psi, eig)| {
            let v = &eig.eigenvectors;
            let n = psi.len();
            let spectral: Vec<C64> = (0..n)
                .map(|j| {
                    let c: C64 = (0..n).map(|i| v[(i, j)] * psi[i]).sum();
                    c * C64::from_polar(1.0, -eig.eigenvalues[j] * gt)
                })
                .collect();
            (0..n)
                .map(|i| (0..n).map(|j| v[(i, j)] * spectral[j]).sum())
                .collect()
        })
        .collect();
    Ok(BlockedState::from_sectors(state.order(), sectors, state.norm_deficit))
}

/// Multiplies each basis amplitude by `e^{-i E(n_a, n_b) gt}`.
pub fn evolve_effective(
    state: &BlockedState,
    form: EffectiveForm,
    detuning_over_g: f64,
    gt: f64,
) -> Result<BlockedState> {
    let order = state.order();
    if form == EffectiveForm::KerrOnly && state.entries().any(|((_, nb), amp)| nb > 0 && amp != C64::new(0.0, 0.0)) {
        return Err(Error::KerrOnlyNeedsVacuumHarmonic);
    }
    let k = order.k();
    let sectors = state
        .sectors()
        .par_iter()
        .enumerate()
        .map(|(n, psi)| {
            psi.iter()
                .enumerate()
                .map(|(j, amp)| {
                    let e = effective_energy(n - k * j, j, order, detuning_over_g, form)?;
                    Ok(amp * C64::from_polar(1.0, -e * gt))
                })
                .collect::<Result<Vec<C64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockedState::from_sectors(order, sectors, state.norm_deficit))
}

/// `⟨ψ|H_int|ψ⟩` summed over sectors, in units of `g`.
pub fn interaction_energy(state: &BlockedState, detuning_over_g: f64) -> f64 {
    state
        .sectors()
        .iter()
        .enumerate()
        .map(|(n, psi)| build_sector_block(&SectorBasis::new(n, state.order()), detuning_over_g).expectation(psi))
        .sum()
}

/// Mode-`a` phase-space rotation accumulated by the detuning diagonal over
/// `gt`. Passing it to [`SingleModeDensity::rotated`] undoes the free
/// rotation `e^{i c_k Δ t n_a}`.
pub fn free_rotation_angle(order: HarmonicOrder, detuning_over_g: f64, gt: f64) -> f64 {
    detuning_coefficient(order) * detuning_over_g * gt
}

/// `values[n] → e^{-i s λt n²} values[n]` with `s = convention.sign()`.
pub fn kerr_propagate(a: &ModeAmplitudes, lambda_t: f64, convention: Convention) -> ModeAmplitudes {
    let s = convention.sign();
    ModeAmplitudes::new(
        a.values
            .iter()
            .enumerate()
            .map(|(n, v)| {
                let n2 = (n * n) as f64;
                v * C64::from_polar(1.0, -s * lambda_t * n2)
            })
            .collect(),
    )
}

/// Which harmonic-mode overlap factor to use in [`analytic_rho_a`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OverlapExponent {
    /// `exp[|β|² (e^{4isλt(n-m)} - 1)]`, obtained by tracing a coherent
    /// harmonic mode out of `s λ (n_a² - 4 n_a n_b)`.
    Derived,
    /// The opposite sign, `exp[|β|² (1 - e^{4isλt(n-m)})]`. For `s = -1` this
    /// is the printed closed form; its off-diagonal elements grow instead of
    /// decaying.
    AsPrinted,
}

/// Closed-form reduced density matrix of mode `a` for `|α⟩ ⊗ |β⟩` evolved
/// under `s λ (n_a² - 4 n_a n_b)`:
///
/// ```text
/// ρ[n, m] = c_n c*_m e^{-isλt(n² - m²)} exp[|β|² (e^{4isλt(n-m)} - 1)]
/// ```
///
/// The result is renormalized to unit trace over `n ≤ n_max`; the second
/// return value is the truncated coherent probability that was divided out.
pub fn analytic_rho_a(
    alpha: C64,
    beta: C64,
    lambda_t: f64,
    convention: Convention,
    overlap: OverlapExponent,
    n_max: usize,
) -> (SingleModeDensity, f64) {
    let c = coherent_amplitudes(alpha, n_max).values;
    let s = convention.sign();
    let b2 = beta.norm_sqr();
    let flip = match overlap {
        OverlapExponent::Derived => 1.0,
        OverlapExponent::AsPrinted => -1.0,
    };
    let dim = n_max + 1;
    let rows: Vec<Vec<C64>> = (0..dim)
        .into_par_iter()
        .map(|n| {
            (0..dim)
                .map(|m| {
                    let (nf, mf) = (n as f64, m as f64);
                    let kerr = C64::from_polar(1.0, -s * lambda_t * (nf * nf - mf * mf));
                    let shift = C64::from_polar(1.0, 4.0 * s * lambda_t * (nf - mf)) - 1.0;
                    let overlap = (flip * b2 * shift).exp();
                    c[n] * c[m].conj() * kerr * overlap
                })
                .collect()
        })
        .collect();
    let raw = SingleModeDensity::from_matrix(dim, rows.concat(), 0.0);
    let trace = raw.trace();
    (raw.renormalized(), 1.0 - trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::embed_product_state;
    use std::f64::consts::PI;

    fn coherent_product(alpha: f64, n_max: usize) -> BlockedState {
        embed_product_state(
            &coherent_amplitudes(C64::new(alpha, 0.0), n_max),
            &ModeAmplitudes::vacuum(0),
            HarmonicOrder::Second,
        )
    }

    #[test]
    fn zero_time_is_identity() {
        let s = coherent_product(2.0, 30);
        let prop = SpectralPropagator::new(HarmonicOrder::Second, s.n_max(), 3.0).unwrap();
        let out = evolve_exact(&s, &prop, 0.0).unwrap();
        for (x, y) in out.entries().zip(s.entries()) {
            assert!((x.1 - y.1).norm() < 1e-14);
        }
        let eff = evolve_effective(&s, EffectiveForm::SecondOrderPt, 3.0, 0.0).unwrap();
        assert_eq!(eff, s);
    }

    #[test]
    fn exact_evolution_is_unitary() {
        let s = coherent_product(3.0, 40);
        let prop = SpectralPropagator::new(HarmonicOrder::Second, s.n_max(), 0.0).unwrap();
        for gt in [0.1, 1.0, 13.7] {
            let out = evolve_exact(&s, &prop, gt).unwrap();
            assert!((out.norm_sqr() - s.norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn sector_mismatch_is_rejected() {
        let s = coherent_product(2.0, 20);
        let prop = SpectralPropagator::new(HarmonicOrder::Second, 10, 0.0).unwrap();
        assert!(matches!(evolve_exact(&s, &prop, 1.0), Err(Error::SectorMismatch { .. })));
        let prop3 = SpectralPropagator::new(HarmonicOrder::Third, 30, 0.0).unwrap();
        assert!(matches!(evolve_exact(&s, &prop3, 1.0), Err(Error::SectorMismatch { .. })));
    }

    #[test]
    fn effective_evolution_keeps_populations() {
        let a = coherent_amplitudes(C64::new(1.5, 0.2), 25);
        let b = coherent_amplitudes(C64::new(0.7, 0.0), 10);
        let s = embed_product_state(&a, &b, HarmonicOrder::Second);
        let out = evolve_effective(&s, EffectiveForm::PaperEq12, 50.0, 31.4).unwrap();
        for (x, y) in out.entries().zip(s.entries()) {
            assert_eq!(x.0, y.0);
            assert!((x.1.norm() - y.1.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn kerr_only_requires_vacuum_harmonic() {
        let a = coherent_amplitudes(C64::new(1.0, 0.0), 10);
        let b = coherent_amplitudes(C64::new(0.5, 0.0), 5);
        let s = embed_product_state(&a, &b, HarmonicOrder::Second);
        assert_eq!(
            evolve_effective(&s, EffectiveForm::KerrOnly, 50.0, 1.0),
            Err(Error::KerrOnlyNeedsVacuumHarmonic)
        );
    }

    #[test]
    fn kerr_at_pi_flips_parity() {
        let a = coherent_amplitudes(C64::new(1.3, -0.4), 30);
        assert_eq!(kerr_propagate(&a, 0.0, Convention::Plus), a);
        let flipped = kerr_propagate(&a, PI, Convention::Plus);
        for (n, (x, y)) in flipped.values.iter().zip(&a.values).enumerate() {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((x - y * sign).norm() < 1e-12);
        }
    }

    #[test]
    fn analytic_rho_reduces_to_pure_kerr_without_harmonic() {
        let alpha = C64::new(2.0, 0.5);
        for lt in [0.0, 0.3, PI / 3.0] {
            for conv in [Convention::Plus, Convention::Minus] {
                let (rho, deficit) = analytic_rho_a(alpha, C64::new(0.0, 0.0), lt, conv, OverlapExponent::Derived, 40);
                let psi = kerr_propagate(&coherent_amplitudes(alpha, 40), lt, conv).normalized();
                let pure = SingleModeDensity::from_pure(&psi);
                assert!(rho.max_abs_diff(&pure) < 1e-12);
                assert!(deficit >= 0.0 && deficit < 1e-10);
            }
        }
    }

    #[test]
    fn analytic_rho_at_zero_time_is_coherent() {
        let alpha = C64::new(10f64.sqrt(), 0.0);
        let (rho, _) = analytic_rho_a(alpha, C64::new(1.0, 0.0), 0.0, Convention::Minus, OverlapExponent::AsPrinted, 40);
        let pure = SingleModeDensity::from_pure(&coherent_amplitudes(alpha, 40).normalized());
        assert!(rho.max_abs_diff(&pure) < 1e-14);
    }

    #[test]
    fn disentangled_at_quarter_period() {
        for overlap in [OverlapExponent::Derived, OverlapExponent::AsPrinted] {
            let (rho, _) = analytic_rho_a(
                C64::new(10f64.sqrt(), 0.0),
                C64::new(0.6, 0.8),
                PI / 2.0,
                Convention::Minus,
                overlap,
                40,
            );
            assert!((rho.purity() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn printed_overlap_is_not_a_state() {
        let (rho, _) = analytic_rho_a(
            C64::new(10f64.sqrt(), 0.0),
            C64::new(1.0, 0.0),
            PI / 4.0,
            Convention::Minus,
            OverlapExponent::AsPrinted,
            40,
        );
        assert!(rho.purity() > 1.0 + 1e-3);
    }
}
