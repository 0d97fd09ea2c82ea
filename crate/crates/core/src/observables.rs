//! Measurements on the fundamental mode: partial trace, Husimi Q function,
//! cat targets and fidelities, quadrature variances, purity and peak finding.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::evolution::{kerr_propagate, Convention};
use crate::fock::{coherent_amplitudes, BlockedState, ModeAmplitudes};
use crate::C64;

/// Default relative floor for [`find_peaks`].
pub const DEFAULT_PEAK_FLOOR: f64 = 0.05;

/// Reduced density matrix of mode `a`, row-major, `(n_max + 1)²` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleModeDensity {
    dim: usize,
    matrix: Vec<C64>,
    /// Probability lost to truncation: `trace = 1 - trace_deficit`.
    pub trace_deficit: f64,
}

impl SingleModeDensity {
    pub fn from_matrix(dim: usize, matrix: Vec<C64>, trace_deficit: f64) -> Self {
        assert_eq!(matrix.len(), dim * dim, "matrix must be dim x dim");
        Self {
            dim,
            matrix,
            trace_deficit,
        }
    }

    /// `|ψ⟩⟨ψ|`; the deficit is `1 - ⟨ψ|ψ⟩`.
    pub fn from_pure(psi: &ModeAmplitudes) -> Self {
        let dim = psi.values.len();
        let mut matrix = Vec::with_capacity(dim * dim);
        for x in &psi.values {
            for y in &psi.values {
                matrix.push(x * y.conj());
            }
        }
        Self {
            dim,
            matrix,
            trace_deficit: (1.0 - psi.norm_sqr()).max(0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_max(&self) -> usize {
        self.dim - 1
    }

    pub fn get(&self, n: usize, m: usize) -> C64 {
        if n < self.dim && m < self.dim {
            self.matrix[n * self.dim + m]
        } else {
            C64::new(0.0, 0.0)
        }
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|n| self.get(n, n).re).sum()
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn mean_photons(&self) -> f64 {
        (0..self.dim).map(|n| n as f64 * self.get(n, n).re).sum()
    }

    pub fn max_hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for n in 0..self.dim {
            for m in 0..=n {
                worst = worst.max((self.get(n, m) - self.get(m, n).conj()).norm());
            }
        }
        worst
    }

    /// Divides by the trace; the deficit becomes zero.
    pub fn renormalized(&self) -> Self {
        let t = self.trace();
        Self {
            dim: self.dim,
            matrix: self.matrix.iter().map(|c| c / t).collect(),
            trace_deficit: 0.0,
        }
    }

    /// `e^{-iθ a†a} ρ e^{iθ a†a}`: phase-space rotation `α → α e^{-iθ}`.
    pub fn rotated(&self, theta: f64) -> Self {
        let mut matrix = self.matrix.clone();
        for n in 0..self.dim {
            for m in 0..self.dim {
                matrix[n * self.dim + m] *= C64::from_polar(1.0, -theta * (n as f64 - m as f64));
            }
        }
        Self {
            dim: self.dim,
            matrix,
            trace_deficit: self.trace_deficit,
        }
    }

    /// `⟨a⟩ = Σ √n ρ[n, n-1]`.
    pub fn expect_a(&self) -> C64 {
        (1..self.dim)
            .map(|n| (n as f64).sqrt() * self.get(n, n - 1))
            .sum()
    }

    /// `⟨a²⟩ = Σ √(n(n-1)) ρ[n, n-2]`.
    pub fn expect_a2(&self) -> C64 {
        (2..self.dim)
            .map(|n| ((n * (n - 1)) as f64).sqrt() * self.get(n, n - 2))
            .sum()
    }

    /// Largest absolute element-wise difference, padding with zeros.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = self.dim.max(other.dim);
        let mut worst = 0.0f64;
        for n in 0..d {
            for m in 0..d {
                worst = worst.max((self.get(n, m) - other.get(n, m)).norm());
            }
        }
        worst
    }
}

/// Partial trace over the harmonic mode:
/// `ρ_a[n, m] = Σ_j ψ(n, j) ψ*(m, j)`.
pub fn reduce_mode_a(state: &BlockedState) -> SingleModeDensity {
    let k = state.order().k();
    let n_max = state.n_max();
    let dim = n_max + 1;
    // column vectors over n_a, one per harmonic occupation
    let columns: Vec<Vec<C64>> = (0..=n_max / k)
        .map(|nb| (0..dim).map(|na| state.amplitude(na, nb)).collect())
        .collect();
    let rows: Vec<Vec<C64>> = (0..dim)
        .into_par_iter()
        .map(|n| {
            (0..dim)
                .map(|m| {
                    columns
                        .iter()
                        .map(|col| col[n] * col[m].conj())
                        .sum::<C64>()
                })
                .collect()
        })
        .collect();
    SingleModeDensity {
        dim,
        matrix: rows.concat(),
        trace_deficit: state.norm_deficit,
    }
}

/// Uniform square grid `points × points` over `[min, max]²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            min: -6.0,
            max: 6.0,
            points: 121,
        }
    }
}

impl GridSpec {
    pub fn axis(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        let step = self.step();
        (0..self.points).map(|i| self.min + step * i as f64).collect()
    }

    pub fn step(&self) -> f64 {
        if self.points < 2 {
            0.0
        } else {
            (self.max - self.min) / (self.points - 1) as f64
        }
    }
}

/// Husimi Q function sampled on a grid; `values[i_im * re_axis.len() + i_re]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QGrid {
    pub re_axis: Vec<f64>,
    pub im_axis: Vec<f64>,
    pub values: Vec<f64>,
}

impl QGrid {
    pub fn at(&self, i_re: usize, i_im: usize) -> f64 {
        self.values[i_im * self.re_axis.len() + i_re]
    }

    pub fn cell_area(&self) -> f64 {
        let dx = self.re_axis.get(1).map_or(0.0, |x| x - self.re_axis[0]);
        let dy = self.im_axis.get(1).map_or(0.0, |y| y - self.im_axis[0]);
        dx * dy
    }

    /// Riemann sum of `Q` over the grid.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `Q(γ) = ⟨γ|ρ|γ⟩ / π` at a single point.
pub fn q_value(rho: &SingleModeDensity, gamma: C64) -> f64 {
    let v = coherent_amplitudes(gamma, rho.n_max()).values;
    let dim = rho.dim();
    let mut acc = C64::new(0.0, 0.0);
    for n in 0..dim {
        let row = &rho.as_slice()[n * dim..(n + 1) * dim];
        let inner: C64 = row.iter().zip(&v).map(|(r, x)| r * x).sum();
        acc += v[n].conj() * inner;
    }
    (acc.re / PI).max(0.0)
}

pub fn q_function(rho: &SingleModeDensity, grid: &GridSpec) -> QGrid {
    let axis = grid.axis();
    let rows: Vec<Vec<f64>> = axis
        .par_iter()
        .map(|&im| axis.iter().map(|&re| q_value(rho, C64::new(re, im))).collect())
        .collect();
    QGrid {
        re_axis: axis.clone(),
        im_axis: axis,
        values: rows.concat(),
    }
}

/// Normalized Kerr image of `|α⟩` at `λt = π/M`: the `M`-component cat.
///
/// `Convention::Minus` with `M = 2` gives `[e^{iπ/4}|α⟩ + e^{-iπ/4}|-α⟩]/√2`.
pub fn cat_state(alpha: C64, components: u32, convention: Convention, n_max: usize) -> ModeAmplitudes {
    assert!(components >= 1, "a cat needs at least one component");
    let coherent = coherent_amplitudes(alpha, n_max);
    kerr_propagate(&coherent, PI / components as f64, convention).normalized()
}

/// `⟨ψ|ρ|ψ⟩`, padding the shorter of the two with zeros.
pub fn fidelity(rho: &SingleModeDensity, psi: &ModeAmplitudes) -> f64 {
    let dim = rho.dim().min(psi.values.len());
    let mut acc = C64::new(0.0, 0.0);
    for n in 0..dim {
        let mut inner = C64::new(0.0, 0.0);
        for m in 0..dim {
            inner += rho.get(n, m) * psi.values[m];
        }
        acc += psi.values[n].conj() * inner;
    }
    acc.re
}

/// Best fidelity against a rotated cat target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatMatch {
    pub fidelity: f64,
    pub convention: Convention,
    /// Rotation `φ` of the cat amplitude `α e^{iφ}`.
    pub phase: f64,
}

/// `max_φ ⟨ψ(φ)|ρ|ψ(φ)⟩` for `ψ(φ)_n = ψ_n e^{inφ}`.
///
/// The objective is the trigonometric polynomial `Σ_d C_d e^{idφ}` with
/// `C_d = Σ_n ψ*_n ρ[n, n+d] ψ_{n+d}`; it is scanned on a fine grid and the
/// best bracket refined by golden section.
pub fn best_phase_fidelity(rho: &SingleModeDensity, psi: &ModeAmplitudes) -> (f64, f64) {
    let dim = rho.dim().min(psi.values.len());
    let p = &psi.values;
    let coeffs: Vec<(f64, C64)> = (1..dim)
        .map(|d| {
            let c: C64 = (0..dim - d).map(|n| p[n].conj() * rho.get(n, n + d) * p[n + d]).sum();
            (d as f64, c)
        })
        .collect();
    let c0: f64 = (0..dim).map(|n| (p[n].conj() * rho.get(n, n) * p[n]).re).sum();
    // ρ Hermitian: C_{-d} = conj(C_d)
    let objective = |phi: f64| -> f64 {
        c0 + 2.0
            * coeffs
                .iter()
                .map(|(d, c)| (c * C64::from_polar(1.0, d * phi)).re)
                .sum::<f64>()
    };
    let samples = 8 * dim.max(16);
    let step = 2.0 * PI / samples as f64;
    let (mut best_i, mut best_f) = (0, f64::NEG_INFINITY);
    for i in 0..samples {
        let f = objective(i as f64 * step);
        if f > best_f {
            best_f = f;
            best_i = i;
        }
    }
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = ((best_i as f64 - 1.0) * step, (best_i as f64 + 1.0) * step);
    let mut x1 = hi - golden * (hi - lo);
    let mut x2 = lo + golden * (hi - lo);
    let (mut f1, mut f2) = (objective(x1), objective(x2));
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = objective(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = objective(x1);
        }
    }
    let phi = 0.5 * (lo + hi);
    let f = objective(phi);
    if f >= best_f {
        (f, phi.rem_euclid(2.0 * PI))
    } else {
        (best_f, best_i as f64 * step)
    }
}

/// Fidelity against the `M`-component cat of amplitude `|α|`, maximized over
/// both phase conventions and the cat's orientation in phase space.
pub fn best_cat_fidelity(rho: &SingleModeDensity, alpha: C64, components: u32) -> CatMatch {
    [Convention::Minus, Convention::Plus]
        .into_iter()
        .map(|convention| {
            let cat = cat_state(alpha, components, convention, rho.n_max());
            let (fidelity, phase) = best_phase_fidelity(rho, &cat);
            CatMatch {
                fidelity,
                convention,
                phase,
            }
        })
        .fold(None, |best: Option<CatMatch>, m| match best {
            Some(b) if b.fidelity >= m.fidelity => Some(b),
            _ => Some(m),
        })
        .expect("two conventions")
}

/// Variance of `x_θ = (a e^{-iθ} + a† e^{iθ}) / √2`.
pub fn quadrature_variance(rho: &SingleModeDensity, theta: f64) -> f64 {
    let a = rho.expect_a();
    let a2 = rho.expect_a2();
    let rot = C64::from_polar(1.0, -2.0 * theta);
    0.5 + rho.mean_photons() - a.norm_sqr() + ((a2 - a * a) * rot).re
}

/// Smallest quadrature variance over `θ` and the angle attaining it.
pub fn min_quadrature_variance(rho: &SingleModeDensity) -> (f64, f64) {
    let a = rho.expect_a();
    let cov = rho.expect_a2() - a * a;
    let value = 0.5 + rho.mean_photons() - a.norm_sqr() - cov.norm();
    // Re[cov e^{-2iθ}] = -|cov| at 2θ = arg(cov) + π
    let theta = (0.5 * (cov.arg() + PI)).rem_euclid(PI);
    (theta, value)
}

pub fn purity(rho: &SingleModeDensity) -> f64 {
    rho.purity()
}

pub fn mean_photons(rho: &SingleModeDensity) -> f64 {
    rho.mean_photons()
}

/// Parameters of the short-time quadrature-variance closed form for real
/// coherent amplitudes `α`, `β`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarianceParams {
    /// `T = λt`.
    pub t: f64,
    /// `z² = α² + 4β²`.
    pub z2: f64,
    /// `Ω = 4α² - 8β²`.
    pub omega: f64,
}

impl VarianceParams {
    pub fn new(alpha: f64, beta: f64, t: f64) -> Self {
        let (a2, b2) = (alpha * alpha, beta * beta);
        Self {
            t,
            z2: a2 + 4.0 * b2,
            omega: 4.0 * a2 - 8.0 * b2,
        }
    }
}

/// Closed-form `σ_x²(T)` of the fundamental mode for `T = λt ≪ 1`.
pub fn variance_formula(params: VarianceParams, alpha: f64) -> f64 {
    let VarianceParams { t, z2, omega } = params;
    let a2 = alpha * alpha;
    let e8 = (-8.0 * z2 * t * t).exp();
    let e4 = (-4.0 * z2 * t * t).exp();
    let (s, c) = (omega * t).sin_cos();
    0.5 + a2 * (e8 - e4) * c - 2.0 * a2 * t * t * (4.0 * e8 - e4) * c - 2.0 * a2 * t * (2.0 * e8 - e4) * s
        + a2 * (1.0 - e4) * c
}

/// A local maximum of a Q grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub re: f64,
    pub im: f64,
    pub height: f64,
}

/// Local maxima above `floor_fraction × max`, highest first.
///
/// A node qualifies when no neighbour (8-connectivity) is higher and at least
/// one is strictly lower; qualifying nodes within one cell of a higher one are
/// merged into it.
pub fn find_peaks(grid: &QGrid, floor_fraction: f64) -> Vec<Peak> {
    let (nx, ny) = (grid.re_axis.len(), grid.im_axis.len());
    let global = grid.max();
    if !(global > 0.0) {
        return Vec::new();
    }
    let floor = floor_fraction * global;
    let mut candidates: Vec<(usize, usize, f64)> = Vec::new();
    for iy in 0..ny {
        for ix in 0..nx {
            let v = grid.at(ix, iy);
            if v < floor {
                continue;
            }
            let mut higher = false;
            let mut lower = false;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                    if jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                        continue;
                    }
                    let w = grid.at(jx as usize, jy as usize);
                    higher |= w > v;
                    lower |= w < v;
                }
            }
            if !higher && lower {
                candidates.push((ix, iy, v));
            }
        }
    }
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.1, a.0).cmp(&(b.1, b.0))));
    let mut kept: Vec<(usize, usize, f64)> = Vec::new();
    for c in candidates {
        let close = kept
            .iter()
            .any(|k| k.0.abs_diff(c.0) <= 1 && k.1.abs_diff(c.1) <= 1);
        if !close {
            kept.push(c);
        }
    }
    kept.into_iter()
        .map(|(ix, iy, height)| Peak {
            re: grid.re_axis[ix],
            im: grid.im_axis[iy],
            height,
        })
        .collect()
}
