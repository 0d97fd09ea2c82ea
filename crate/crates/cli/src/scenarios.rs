//! The six scenarios. Each returns a typed result for the manifest plus the
//! CSV tables it produced; nothing here touches the file system.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use shgcat_core::evolution::{
    evolve_effective, evolve_exact, free_rotation_angle, Convention, SpectralPropagator,
};
use shgcat_core::fock::{choose_cutoffs, coherent_amplitudes, embed_product_state, BlockedState, SectorBasis};
use shgcat_core::hamiltonian::{build_sector_block, effective_sector_diagonal, EffectiveForm, DEFAULT_GAP_FACTOR};
use shgcat_core::linalg::tridiag_eigen;
use shgcat_core::observables::{
    best_cat_fidelity, best_phase_fidelity, cat_state, find_peaks, min_quadrature_variance, q_function,
    quadrature_variance, reduce_mode_a, variance_formula, CatMatch, QGrid, SingleModeDensity, VarianceParams,
    DEFAULT_PEAK_FLOOR,
};
use shgcat_core::C64;

use crate::config::RunConfig;
use crate::output::{label, q_table, Cell, Table};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

/// Cutoffs and truncation loss of the initial product state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CutoffInfo {
    pub n_max_a: usize,
    pub n_max_b: usize,
    pub n_max: usize,
    pub norm_deficit: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeakOut {
    pub re: f64,
    pub im: f64,
    pub height: f64,
}

/// Result and tables of one scenario.
#[derive(Clone, Debug)]
pub struct Run<T> {
    pub result: T,
    pub tables: Vec<Table>,
    pub cutoffs: Option<CutoffInfo>,
}

/// Initial `|α⟩ ⊗ |β⟩` with per-mode cutoffs multiplied by `scale`.
pub fn initial_state(cfg: &RunConfig, scale: usize) -> Result<(BlockedState, CutoffInfo)> {
    let order = cfg.harmonic_order();
    let alpha = cfg.alpha_c();
    let beta = cfg.beta_c();
    let cut = choose_cutoffs(alpha.norm_sqr(), beta.norm_sqr(), cfg.epsilon_trunc, order)?;
    let (na, nb) = (cut.n_max_a * scale, cut.n_max_b * scale);
    let state = embed_product_state(&coherent_amplitudes(alpha, na), &coherent_amplitudes(beta, nb), order);
    let info = CutoffInfo {
        n_max_a: na,
        n_max_b: nb,
        n_max: state.n_max(),
        norm_deficit: state.norm_deficit,
    };
    Ok((state, info))
}

/// Cat fidelity over both conventions, or the configured one only.
pub fn cat_match(rho: &SingleModeDensity, alpha: C64, fixed: Option<Convention>) -> CatMatch {
    match fixed {
        None => best_cat_fidelity(rho, alpha, 2),
        Some(convention) => {
            let cat = cat_state(alpha, 2, convention, rho.n_max());
            let (fidelity, phase) = best_phase_fidelity(rho, &cat);
            CatMatch {
                fidelity,
                convention,
                phase,
            }
        }
    }
}

fn peaks_of(grid: &QGrid) -> Vec<PeakOut> {
    find_peaks(grid, DEFAULT_PEAK_FLOOR)
        .into_iter()
        .map(|p| PeakOut {
            re: p.re,
            im: p.im,
            height: p.height,
        })
        .collect()
}

fn reduced(state: &BlockedState) -> (SingleModeDensity, f64) {
    let raw = reduce_mode_a(state);
    let deficit = 1.0 - raw.trace();
    (raw.renormalized(), deficit)
}

/// Everything measured on one reduced state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Snapshot {
    pub gt: f64,
    pub tau: f64,
    pub n_peaks: usize,
    pub peaks: Vec<PeakOut>,
    pub min_variance: f64,
    pub squeeze_angle: f64,
    pub purity: f64,
    pub mean_photons: f64,
    pub cat_fidelity: f64,
    pub cat_convention: String,
    pub cat_phase: f64,
    pub q_max: f64,
    pub q_integral: f64,
    pub trace_deficit: f64,
}

fn snapshot(cfg: &RunConfig, state: &BlockedState, gt: f64) -> (Snapshot, QGrid) {
    let (rho, trace_deficit) = reduced(state);
    let grid = q_function(&rho, &cfg.grid_spec());
    let peaks = peaks_of(&grid);
    let (squeeze_angle, min_variance) = min_quadrature_variance(&rho);
    let cat = cat_match(&rho, cfg.alpha_c(), cfg.fixed_convention());
    let snap = Snapshot {
        gt,
        tau: cfg.tau_of(gt),
        n_peaks: peaks.len(),
        peaks,
        min_variance,
        squeeze_angle,
        purity: rho.purity(),
        mean_photons: rho.mean_photons(),
        cat_fidelity: cat.fidelity,
        cat_convention: cat.convention.to_string(),
        cat_phase: cat.phase,
        q_max: grid.max(),
        q_integral: grid.integral(),
        trace_deficit,
    };
    (snap, grid)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResonantResult {
    pub detuning_over_g: f64,
    pub snapshots: Vec<Snapshot>,
}

pub fn resonant(cfg: &RunConfig) -> Result<Run<ResonantResult>> {
    let (state, cutoffs) = initial_state(cfg, 1)?;
    let detuning = cfg.detuning_over_g;
    let prop = SpectralPropagator::new(cfg.harmonic_order(), state.n_max(), detuning)?;
    let measured = cfg
        .times
        .par_iter()
        .map(|&t| {
            let gt = cfg.to_gt(t, detuning);
            let out = evolve_exact(&state, &prop, gt)?;
            Ok(snapshot(cfg, &out, gt))
        })
        .collect::<Result<Vec<_>>>()?;
    let tables = measured
        .iter()
        .map(|(snap, grid)| q_table(format!("q_tau_{}.csv", label(snap.tau)), grid))
        .collect();
    Ok(Run {
        result: ResonantResult {
            detuning_over_g: detuning,
            snapshots: measured.into_iter().map(|(s, _)| s).collect(),
        },
        tables,
        cutoffs: Some(cutoffs),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub detuning_over_g: f64,
    #[serde(flatten)]
    pub snapshot: Snapshot,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

pub fn detuning_sweep(cfg: &RunConfig) -> Result<Run<SweepResult>> {
    let (state, cutoffs) = initial_state(cfg, 1)?;
    let t = cfg.times[0];
    let measured = cfg
        .detunings
        .par_iter()
        .map(|&detuning| {
            let prop = SpectralPropagator::new(cfg.harmonic_order(), state.n_max(), detuning)?;
            let gt = cfg.to_gt(t, detuning);
            let out = evolve_exact(&state, &prop, gt)?;
            let (snapshot, grid) = snapshot(cfg, &out, gt);
            Ok((
                SweepRow {
                    detuning_over_g: detuning,
                    snapshot,
                },
                grid,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut summary = Table::new("sweep.csv", vec!["detuning", "fidelity", "n_peaks"]);
    let mut tables = Vec::new();
    for (row, grid) in &measured {
        summary.push(vec![
            row.detuning_over_g.into(),
            row.snapshot.cat_fidelity.into(),
            row.snapshot.n_peaks.into(),
        ]);
        tables.push(q_table(format!("q_detuning_{}.csv", label(row.detuning_over_g)), grid));
    }
    tables.push(summary);
    Ok(Run {
        result: SweepResult {
            rows: measured.into_iter().map(|(r, _)| r).collect(),
        },
        tables,
        cutoffs: Some(cutoffs),
    })
}

/// Cat diagnostics of one branch of the dispersive comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Branch {
    pub fidelity_minus: f64,
    pub phase_minus: f64,
    pub fidelity_plus: f64,
    pub phase_plus: f64,
    pub best_convention: String,
    pub best_fidelity: f64,
    pub purity: f64,
    pub mean_photons: f64,
    pub n_peaks: usize,
    pub peaks: Vec<PeakOut>,
    pub trace_deficit: f64,
}

fn branch(cfg: &RunConfig, state: &BlockedState) -> (Branch, QGrid) {
    let (rho, trace_deficit) = reduced(state);
    let alpha = cfg.alpha_c();
    let fit = |convention| best_phase_fidelity(&rho, &cat_state(alpha, 2, convention, rho.n_max()));
    let (fidelity_minus, phase_minus) = fit(Convention::Minus);
    let (fidelity_plus, phase_plus) = fit(Convention::Plus);
    let (best_convention, best_fidelity) = if fidelity_minus >= fidelity_plus {
        (Convention::Minus, fidelity_minus)
    } else {
        (Convention::Plus, fidelity_plus)
    };
    let grid = q_function(&rho, &cfg.grid_spec());
    let peaks = peaks_of(&grid);
    let b = Branch {
        fidelity_minus,
        phase_minus,
        fidelity_plus,
        phase_plus,
        best_convention: best_convention.to_string(),
        best_fidelity,
        purity: rho.purity(),
        mean_photons: rho.mean_photons(),
        n_peaks: peaks.len(),
        peaks,
        trace_deficit,
    };
    (b, grid)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutoffCheck {
    pub n_max_a: usize,
    pub n_max_b: usize,
    pub best_fidelity: f64,
    pub fidelity_shift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DispersiveResult {
    pub detuning_over_g: f64,
    pub gt: f64,
    pub lambda_t: f64,
    pub form: String,
    pub baseline_fidelity: f64,
    pub exact: Branch,
    pub effective: Branch,
    pub exact_effective_overlap: f64,
    pub doubled_cutoffs: CutoffCheck,
}

pub fn dispersive_cat(cfg: &RunConfig) -> Result<Run<DispersiveResult>> {
    let detuning = cfg.detuning_over_g;
    let gt = cfg.to_gt(cfg.times[0], detuning);
    let (state, cutoffs) = initial_state(cfg, 1)?;
    let form = cfg.effective_form();

    let run_exact = |state: &BlockedState| -> Result<BlockedState> {
        let prop = SpectralPropagator::new(cfg.harmonic_order(), state.n_max(), detuning)?;
        Ok(evolve_exact(state, &prop, gt)?)
    };
    let (exact_state, (effective_state, doubled_state)) = rayon::join(
        || run_exact(&state),
        || {
            rayon::join(
                || evolve_effective(&state, form, detuning, gt).map_err(CliError::from),
                || -> Result<(BlockedState, CutoffInfo)> {
                    let (big, info) = initial_state(cfg, 2)?;
                    Ok((run_exact(&big)?, info))
                },
            )
        },
    );
    let (exact_state, effective_state, (doubled_state, doubled_info)) =
        (exact_state?, effective_state?, doubled_state?);

    let (rho0, _) = reduced(&state);
    let baseline = cat_match(&rho0, cfg.alpha_c(), cfg.fixed_convention()).fidelity;
    let (exact, exact_grid) = branch(cfg, &exact_state);
    let (effective, effective_grid) = branch(cfg, &effective_state);
    let (doubled_rho, _) = reduced(&doubled_state);
    let doubled_fidelity = cat_match(&doubled_rho, cfg.alpha_c(), None).fidelity;
    let overlap = exact_state.inner(&effective_state).norm_sqr() / (exact_state.norm_sqr() * effective_state.norm_sqr());
    let result = DispersiveResult {
        detuning_over_g: detuning,
        gt,
        lambda_t: gt / detuning,
        form: form.name().to_string(),
        baseline_fidelity: baseline,
        doubled_cutoffs: CutoffCheck {
            n_max_a: doubled_info.n_max_a,
            n_max_b: doubled_info.n_max_b,
            best_fidelity: doubled_fidelity,
            fidelity_shift: doubled_fidelity - exact.best_fidelity,
        },
        exact,
        effective,
        exact_effective_overlap: overlap,
    };
    Ok(Run {
        result,
        tables: vec![q_table("q_exact.csv", &exact_grid), q_table("q_effective.csv", &effective_grid)],
        cutoffs: Some(cutoffs),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanPoint {
    pub gt: f64,
    pub fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FidelityScanResult {
    pub detuning_over_g: f64,
    pub end_gt: f64,
    pub samples: usize,
    pub quarter_period_gt: f64,
    pub initial_fidelity: f64,
    pub argmax_gt: f64,
    pub peak_fidelity: f64,
    pub prominence: f64,
    pub half_prominence_width: f64,
    pub secondary_maxima: Vec<ScanPoint>,
}

/// Strict interior local maxima of `f` with index below `before`.
pub fn local_maxima(f: &[f64], before: usize) -> Vec<usize> {
    (1..before.min(f.len().saturating_sub(1)))
        .filter(|&i| f[i] > f[i - 1] && f[i] > f[i + 1])
        .collect()
}

/// Prominence of the sample at `peak` and its full width at half prominence,
/// with linear interpolation of the crossings.
pub fn half_prominence_width(x: &[f64], f: &[f64], peak: usize) -> (f64, f64) {
    let top = f[peak];
    let left_base = f[..=peak].iter().copied().fold(f64::INFINITY, f64::min);
    let right_base = f[peak..].iter().copied().fold(f64::INFINITY, f64::min);
    let prominence = top - left_base.max(right_base);
    let level = top - 0.5 * prominence;
    let cross = |i: usize, j: usize| x[i] + (level - f[i]) * (x[j] - x[i]) / (f[j] - f[i]);
    let mut left = x[0];
    for i in (0..peak).rev() {
        if f[i] <= level {
            left = cross(i, i + 1);
            break;
        }
    }
    let mut right = x[x.len() - 1];
    for i in peak + 1..f.len() {
        if f[i] <= level {
            right = cross(i - 1, i);
            break;
        }
    }
    (prominence, right - left)
}

pub fn fidelity_scan(cfg: &RunConfig) -> Result<Run<FidelityScanResult>> {
    let detuning = cfg.detuning_over_g;
    let end = cfg.to_gt(cfg.times[0], detuning);
    let (state, cutoffs) = initial_state(cfg, 1)?;
    let prop = SpectralPropagator::new(cfg.harmonic_order(), state.n_max(), detuning)?;
    let n = cfg.samples;
    let gts: Vec<f64> = (0..n).map(|i| end * i as f64 / (n - 1) as f64).collect();
    let fid = gts
        .par_iter()
        .map(|&gt| {
            let out = evolve_exact(&state, &prop, gt)?;
            let (rho, _) = reduced(&out);
            Ok(cat_match(&rho, cfg.alpha_c(), cfg.fixed_convention()).fidelity)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut table = Table::new("fidelity_scan.csv", vec!["gt", "fidelity"]);
    for (g, f) in gts.iter().zip(&fid) {
        table.push(vec![Cell::Float(*g), Cell::Float(*f)]);
    }
    let argmax = (0..n).fold(0, |best, i| if fid[i] > fid[best] { i } else { best });
    let (prominence, width) = half_prominence_width(&gts, &fid, argmax);
    let secondary = local_maxima(&fid, argmax)
        .into_iter()
        .map(|i| ScanPoint {
            gt: gts[i],
            fidelity: fid[i],
        })
        .collect();
    Ok(Run {
        result: FidelityScanResult {
            detuning_over_g: detuning,
            end_gt: end,
            samples: n,
            quarter_period_gt: 0.5 * PI * detuning.abs(),
            initial_fidelity: fid[0],
            argmax_gt: gts[argmax],
            peak_fidelity: fid[argmax],
            prominence,
            half_prominence_width: width,
            secondary_maxima: secondary,
        },
        tables: vec![table],
        cutoffs: Some(cutoffs),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarianceScanResult {
    pub detuning_over_g: f64,
    pub form: String,
    pub end_lambda_t: f64,
    pub max_relative_formula_vs_effective: f64,
    pub max_relative_formula_vs_exact: f64,
    pub min_formula: f64,
    pub min_effective: f64,
    pub min_exact: f64,
}

/// Rotation that brings a reduced state back to the frame where the
/// short-time variance formula applies.
fn variance_frame(cfg: &RunConfig, form: Option<EffectiveForm>, gt: f64, lambda_t: f64) -> f64 {
    let linear = match form {
        None | Some(EffectiveForm::SecondOrderPt) => -lambda_t,
        Some(_) => 0.0,
    };
    let free = match form {
        Some(EffectiveForm::KerrOnly) => 0.0,
        _ => free_rotation_angle(cfg.harmonic_order(), cfg.detuning_over_g, gt),
    };
    free + linear
}

pub fn variance_scan(cfg: &RunConfig) -> Result<Run<VarianceScanResult>> {
    let detuning = cfg.detuning_over_g;
    let end = cfg.to_gt(cfg.times[0], detuning) / detuning;
    let (state, cutoffs) = initial_state(cfg, 1)?;
    let prop = SpectralPropagator::new(cfg.harmonic_order(), state.n_max(), detuning)?;
    let form = cfg.effective_form();
    let (a, b) = (cfg.alpha_c().norm(), cfg.beta_c().norm());
    let n = cfg.samples;
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            let t = end * i as f64 / (n - 1) as f64;
            let gt = t * detuning;
            let formula = variance_formula(VarianceParams::new(a, b, t), a);
            let eff = evolve_effective(&state, form, detuning, gt)?;
            let (rho_eff, _) = reduced(&eff);
            let effective = quadrature_variance(&rho_eff.rotated(variance_frame(cfg, Some(form), gt, t)), 0.0);
            let ex = evolve_exact(&state, &prop, gt)?;
            let (rho_ex, _) = reduced(&ex);
            let exact = quadrature_variance(&rho_ex.rotated(variance_frame(cfg, None, gt, t)), 0.0);
            Ok([t, formula, effective, exact])
        })
        .collect::<Result<Vec<[f64; 4]>>>()?;
    let mut table = Table::new("variance_scan.csv", vec!["T", "formula", "effective", "exact"]);
    for r in &rows {
        table.push(r.iter().map(|&x| Cell::Float(x)).collect());
    }
    let rel = |j: usize| rows.iter().map(|r| (r[1] - r[j]).abs() / r[j].abs()).fold(0.0, f64::max);
    let min = |j: usize| rows.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
    Ok(Run {
        result: VarianceScanResult {
            detuning_over_g: detuning,
            form: form.name().to_string(),
            end_lambda_t: end,
            max_relative_formula_vs_effective: rel(2),
            max_relative_formula_vs_exact: rel(3),
            min_formula: min(1),
            min_effective: min(2),
            min_exact: min(3),
        },
        tables: vec![table],
        cutoffs: Some(cutoffs),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectrumSummary {
    pub detuning_over_g: f64,
    pub max_error: f64,
    pub max_error_up_to_12: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumResult {
    pub max_sector: usize,
    pub summaries: Vec<SpectrumSummary>,
    /// `max_error[i] / max_error[i + 1]` along the detuning list.
    pub ratios: Vec<f64>,
}

/// Largest `|exact − PT|` over sorted eigenvalues of sector `n`.
pub fn sector_spectral_error(cfg: &RunConfig, n: usize, detuning: f64) -> Result<(f64, bool)> {
    let basis = SectorBasis::new(n, cfg.harmonic_order());
    let block = build_sector_block(&basis, detuning);
    let exact = tridiag_eigen(&block)?.eigenvalues;
    let mut pt = effective_sector_diagonal(&basis, detuning, EffectiveForm::SecondOrderPt)?;
    pt.sort_by(f64::total_cmp);
    let err = exact.iter().zip(&pt).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok((err, detuning.abs() > DEFAULT_GAP_FACTOR * block.max_offdiag()))
}

pub fn spectrum_check(cfg: &RunConfig) -> Result<Run<SpectrumResult>> {
    let jobs: Vec<(f64, usize)> = cfg
        .detunings
        .iter()
        .flat_map(|&d| (0..=cfg.max_sector).map(move |n| (d, n)))
        .collect();
    let errors = jobs
        .par_iter()
        .map(|&(d, n)| sector_spectral_error(cfg, n, d))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new("spectrum.csv", vec!["detuning", "sector", "max_error", "dispersive"]);
    for (&(d, n), &(err, ok)) in jobs.iter().zip(&errors) {
        table.push(vec![d.into(), n.into(), err.into(), ok.into()]);
    }
    let summaries: Vec<SpectrumSummary> = cfg
        .detunings
        .iter()
        .map(|&d| {
            let of = |limit: usize| {
                jobs.iter()
                    .zip(&errors)
                    .filter(|((dd, n), _)| *dd == d && *n <= limit)
                    .map(|(_, (e, _))| *e)
                    .fold(0.0, f64::max)
            };
            SpectrumSummary {
                detuning_over_g: d,
                max_error: of(cfg.max_sector),
                max_error_up_to_12: of(12.min(cfg.max_sector)),
            }
        })
        .collect();
    let ratios = summaries.windows(2).map(|w| w[0].max_error / w[1].max_error).collect();
    Ok(Run {
        result: SpectrumResult {
            max_sector: cfg.max_sector,
            summaries,
            ratios,
        },
        tables: vec![table],
        cutoffs: None,
    })
}
