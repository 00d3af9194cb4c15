//! Monte Carlo risk estimation, rate sweeps, and edge diagnostics.
//!
//! Risk is estimated by averaging the per-trial mean squared error over
//! independent noise substreams. The across-trial mean estimate gives the
//! plug-in bias/variance split, accumulated with per-pixel Welford updates
//! so that `bias_sq + variance` reproduces `mean_risk` as an algebraic
//! identity (verified to 1e-10 in the tests).
//!
//! Trials run in parallel but are always folded in trial order, so every
//! estimate is reproducible bit-for-bit for a fixed master seed regardless
//! of the worker-thread count.

use rayon::prelude::*;
use serde::Serialize;

use crate::contour::EdgeContour;
use crate::denoiser::{DenoiserFamily, DenoiserSpec};
use crate::error::{domain, Error, Result};
use crate::grid::ImageGrid;
use crate::horizon::{edge_rows_of, render};
use crate::nlm::{patch_distance, nlm_denoise, NlmParams, OracleLevel, WeightKind};
use crate::noise::{add_noise, NoiseSpec};
use crate::stats::p0_reference;

/// A Monte Carlo risk estimate with its plug-in bias/variance split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub mean_risk: f64,
    pub stderr: f64,
    pub bias_sq: f64,
    pub variance: f64,
    pub trials: usize,
    pub n: usize,
    pub sigma: f64,
    /// Family tag, stable across grid sizes.
    pub denoiser: String,
    /// Instantiated parameters at this size.
    pub detail: String,
    pub master_seed: u64,
}

fn neumaier_mean(values: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = acc + v;
        comp += if acc.abs() >= v.abs() {
            (acc - t) + v
        } else {
            (v - t) + acc
        };
        acc = t;
    }
    (acc + comp) / values.len() as f64
}

/// Risk of one fixed denoiser on a pre-rendered clean image.
pub fn empirical_risk_on(
    spec: &DenoiserSpec,
    clean: &ImageGrid,
    sigma: f64,
    trials: usize,
    master_seed: u64,
) -> Result<RiskEstimate> {
    if trials < 2 {
        return Err(domain("risk estimation needs at least 2 trials"));
    }
    let n = clean.n();
    let pixels = n * n;
    let mut mean_est = vec![0.0; pixels];
    let mut m2_est = vec![0.0; pixels];
    let mut risks = Vec::with_capacity(trials);

    let batch = (2 * rayon::current_num_threads()).max(2);
    let mut done = 0usize;
    while done < trials {
        let upto = (done + batch).min(trials);
        let estimates: Vec<Result<ImageGrid>> = (done..upto)
            .into_par_iter()
            .map(|k| {
                let noisy = add_noise(clean, &NoiseSpec::new(sigma, master_seed, k as u64)?);
                spec.apply(&noisy, Some(clean))
            })
            .collect();
        for est in estimates {
            let est = est?;
            let count = (risks.len() + 1) as f64;
            for (idx, &v) in est.data().iter().enumerate() {
                let delta = v - mean_est[idx];
                mean_est[idx] += delta / count;
                m2_est[idx] += delta * (v - mean_est[idx]);
            }
            risks.push(clean.mse(&est));
        }
        done = upto;
    }

    let mean_risk = neumaier_mean(&risks);
    let tf = trials as f64;
    let risk_var =
        risks.iter().map(|r| (r - mean_risk) * (r - mean_risk)).sum::<f64>() / (tf - 1.0);
    let bias_sq = clean
        .data()
        .iter()
        .zip(&mean_est)
        .map(|(x, m)| (x - m) * (x - m))
        .sum::<f64>()
        / pixels as f64;
    let variance = m2_est.iter().sum::<f64>() / tf / pixels as f64;
    Ok(RiskEstimate {
        mean_risk,
        stderr: (risk_var / tf).sqrt(),
        bias_sq,
        variance,
        trials,
        n,
        sigma,
        denoiser: spec.describe(),
        detail: spec.describe(),
        master_seed,
    })
}

/// Renders the contour at size `n` and estimates the denoiser's risk.
pub fn empirical_risk(
    spec: &DenoiserSpec,
    contour: &EdgeContour,
    n: usize,
    sigma: f64,
    trials: usize,
    master_seed: u64,
) -> Result<RiskEstimate> {
    let clean = render(contour, n)?;
    empirical_risk_on(spec, &clean, sigma, trials, master_seed)
}

/// Oracle-tuned box filter: grid-searches the halfwidth over
/// `1..=ceil(2 n^(1/3))` under common noise substreams and returns the
/// risk-minimizing entry (smallest halfwidth on ties) with its halfwidth.
pub fn box_oracle_risk(
    clean: &ImageGrid,
    sigma: f64,
    trials: usize,
    master_seed: u64,
) -> Result<(RiskEstimate, usize)> {
    let n = clean.n();
    let mut best: Option<(RiskEstimate, usize)> = None;
    for hw in DenoiserFamily::box_halfwidth_grid(n) {
        let est = empirical_risk_on(
            &DenoiserSpec::Box { halfwidth: hw },
            clean,
            sigma,
            trials,
            master_seed,
        )?;
        if best
            .as_ref()
            .map(|(b, _)| est.mean_risk < b.mean_risk)
            .unwrap_or(true)
        {
            best = Some((est, hw));
        }
    }
    best.ok_or_else(|| domain("empty halfwidth grid"))
}

/// One risk estimate per grid size under the family's parameter rule.
pub fn rate_sweep(
    family: &DenoiserFamily,
    contour: &EdgeContour,
    n_list: &[usize],
    sigma: f64,
    trials: usize,
    master_seed: u64,
) -> Result<Vec<RiskEstimate>> {
    if n_list.len() < 3 {
        return Err(domain("rate sweeps need at least 3 grid sizes"));
    }
    if !n_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(domain("grid sizes must be strictly increasing"));
    }
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let clean = render(contour, n)?;
        let mut est = if family.is_box_oracle() {
            let (mut est, hw) = box_oracle_risk(&clean, sigma, trials, master_seed)?;
            est.detail = format!("box halfwidth={hw} (oracle-tuned)");
            est
        } else {
            let spec = family.instantiate(n, sigma)?;
            empirical_risk_on(&spec, &clean, sigma, trials, master_seed)?
        };
        est.denoiser = family.tag();
        out.push(est);
    }
    Ok(out)
}

/// A fitted log-log decay line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub n_values: Vec<f64>,
    pub risks: Vec<f64>,
}

/// Least-squares slope of `ln risk` against `ln n`.
pub fn fit_log_log(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit {
            points: points.len(),
        });
    }
    if points.iter().any(|&(n, r)| !(n > 0.0) || !(r > 0.0)) {
        return Err(domain("rate fits need positive sizes and risks"));
    }
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let resid = y - (intercept + slope * x);
            resid * resid
        })
        .sum();
    let slope_stderr = (ssr / (m - 2.0) / sxx).sqrt();
    Ok(RateFit {
        slope,
        intercept,
        slope_stderr,
        n_values: points.iter().map(|p| p.0).collect(),
        risks: points.iter().map(|p| p.1).collect(),
    })
}

/// Fits the decay slope of a sweep table.
pub fn fit_rate(table: &[RiskEstimate]) -> Result<RateFit> {
    let points: Vec<(f64, f64)> = table
        .iter()
        .map(|e| (e.n as f64, e.mean_risk))
        .collect();
    fit_log_log(&points)
}

/// Edge-mechanism measurements on the half-plane image.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeDiagnostics {
    /// Fraction of just-below-edge pixels whose hard weight is 1 when
    /// estimating a just-above-edge pixel, averaged over columns and trials.
    pub fraction_passing_j: f64,
    /// Mean nonlocal-means estimate at the just-above-edge row (clean value
    /// 0), averaged over columns and trials.
    pub mean_edge_estimate: f64,
    /// The closed-form limiting pass probability for comparison.
    pub p0_reference: f64,
    pub n: usize,
    pub sigma: f64,
    pub params: NlmParams,
    pub trials: usize,
    pub master_seed: u64,
}

/// Measures the edge-pixel failure mechanism: how often pixels just below
/// the edge pass the patch-distance threshold of a reference pixel just
/// above it, and the resulting bias of the estimate there.
pub fn edge_diagnostics(
    n: usize,
    sigma: f64,
    params: &NlmParams,
    trials: usize,
    master_seed: u64,
) -> Result<EdgeDiagnostics> {
    if n % 2 != 0 {
        return Err(Error::OddN { n });
    }
    if trials < 1 {
        return Err(domain("edge diagnostics need at least 1 trial"));
    }
    if params.weight_kind != WeightKind::Hard {
        return Err(domain("edge diagnostics are defined for hard weights"));
    }
    if params.oracle == OracleLevel::Full {
        return Err(domain(
            "edge diagnostics expect standard or semi-oracle weights",
        ));
    }
    let contour = EdgeContour::constant(0.5)?;
    let clean = render(&contour, n)?;
    let rows = edge_rows_of(&clean);
    let j_above = rows[0].above;
    let j_below = rows[0].below;
    let threshold = params.hard_threshold();

    let per_trial: Vec<Result<(f64, f64)>> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let noisy = add_noise(&clean, &NoiseSpec::new(sigma, master_seed, k as u64)?);
            let est = nlm_denoise(&noisy, Some(&clean), params)?;
            let (ref_img, cand_img): (&ImageGrid, &ImageGrid) = match params.oracle {
                OracleLevel::None => (&noisy, &noisy),
                OracleLevel::Semi => (&clean, &noisy),
                OracleLevel::Full => unreachable!(),
            };
            let mut passes = 0usize;
            for i in 0..n {
                for m in 0..n {
                    let d_sq =
                        patch_distance(ref_img, cand_img, i, j_above, m, j_below, params.delta);
                    if d_sq <= threshold {
                        passes += 1;
                    }
                }
            }
            let mean_est = (0..n).map(|i| est.get(i, j_above)).sum::<f64>() / n as f64;
            Ok((passes as f64 / (n * n) as f64, mean_est))
        })
        .collect();

    let mut fraction = 0.0;
    let mut mean_estimate = 0.0;
    for r in per_trial {
        let (f, e) = r?;
        fraction += f;
        mean_estimate += e;
    }
    Ok(EdgeDiagnostics {
        fraction_passing_j: fraction / trials as f64,
        mean_edge_estimate: mean_estimate / trials as f64,
        p0_reference: p0_reference(sigma),
        n,
        sigma,
        params: *params,
        trials,
        master_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nlm::SearchMode;

    fn half() -> EdgeContour {
        EdgeContour::constant(0.5).unwrap()
    }

    #[test]
    fn identity_risk_is_sigma_squared() {
        let est =
            empirical_risk(&DenoiserSpec::Identity, &half(), 32, 0.5, 60, 11).unwrap();
        assert!(
            (est.mean_risk - 0.25).abs() < 4.0 * est.stderr,
            "{est:?}"
        );
        // the plug-in bias estimate sits near variance/trials, not at zero
        assert!(est.bias_sq < 3.0 * 0.25 / 60.0, "{}", est.bias_sq);
    }

    #[test]
    fn global_mean_decomposition() {
        let n = 32;
        let sigma = 0.5;
        let est =
            empirical_risk(&DenoiserSpec::GlobalMean, &half(), n, sigma, 60, 5).unwrap();
        // clean values are 0/1 against a mean near 1/2
        assert!((est.bias_sq - 0.25).abs() < 0.01, "{}", est.bias_sq);
        let var_ref = sigma * sigma / (n * n) as f64;
        assert!(est.variance < 10.0 * var_ref);
    }

    #[test]
    fn decomposition_identity_is_exact() {
        for spec in [
            DenoiserSpec::Identity,
            DenoiserSpec::GlobalMean,
            DenoiserSpec::Box { halfwidth: 2 },
            DenoiserSpec::Wavelet { sigma: 0.5 },
        ] {
            let est = empirical_risk(&spec, &half(), 32, 0.5, 25, 7).unwrap();
            assert!(
                (est.bias_sq + est.variance - est.mean_risk).abs() < 1e-10,
                "{spec:?}: {est:?}"
            );
        }
    }

    #[test]
    fn estimates_replay_bit_identically() {
        let a = empirical_risk(&DenoiserSpec::Box { halfwidth: 1 }, &half(), 32, 0.5, 12, 99)
            .unwrap();
        let b = empirical_risk(&DenoiserSpec::Box { halfwidth: 1 }, &half(), 32, 0.5, 12, 99)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn box_risk_decreases_with_resolution() {
        let table = rate_sweep(
            &DenoiserFamily::BoxOracle,
            &half(),
            &[32, 64, 128],
            0.5,
            24,
            3,
        )
        .unwrap();
        assert!(table[0].mean_risk > table[1].mean_risk);
        assert!(table[1].mean_risk > table[2].mean_risk);
    }

    #[test]
    fn identity_sweep_is_flat() {
        let table = rate_sweep(
            &DenoiserFamily::Identity,
            &half(),
            &[16, 32, 64],
            0.5,
            24,
            3,
        )
        .unwrap();
        let fit = fit_rate(&table).unwrap();
        assert!(fit.slope.abs() < 0.05, "slope {}", fit.slope);
    }

    #[test]
    fn fit_recovers_exact_power_laws() {
        let points: Vec<(f64, f64)> = [32.0, 64.0, 128.0, 256.0]
            .iter()
            .map(|&n: &f64| (n, 3.0 * n.powf(-2.0 / 3.0)))
            .collect();
        let fit = fit_log_log(&points).unwrap();
        assert!((fit.slope + 2.0 / 3.0).abs() < 1e-12);
        assert!((fit.intercept - 3.0f64.ln()).abs() < 1e-12);
        assert!(fit.slope_stderr < 1e-12);
    }

    #[test]
    fn fit_sees_log_corrections_as_shallower_slopes() {
        let points: Vec<(f64, f64)> = [32.0, 64.0, 128.0, 256.0, 512.0]
            .iter()
            .map(|&n: &f64| (n, n.ln().sqrt() / n))
            .collect();
        let fit = fit_log_log(&points).unwrap();
        assert!(fit.slope > -1.0 && fit.slope < -0.85, "slope {}", fit.slope);
    }

    #[test]
    fn fit_on_constant_table_is_flat() {
        let points = vec![(32.0, 0.25), (64.0, 0.25), (128.0, 0.25)];
        let fit = fit_log_log(&points).unwrap();
        assert!(fit.slope.abs() < 1e-14);
    }

    #[test]
    fn degenerate_fits_are_rejected() {
        assert!(matches!(
            fit_log_log(&[(32.0, 0.1), (64.0, 0.05)]),
            Err(Error::DegenerateFit { points: 2 })
        ));
        assert!(fit_log_log(&[(32.0, 0.1), (64.0, 0.0), (128.0, 0.1)]).is_err());
    }

    #[test]
    fn sweep_validates_sizes() {
        let err = rate_sweep(&DenoiserFamily::Identity, &half(), &[32, 32, 64], 0.5, 4, 1)
            .unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn vanishing_noise_passes_nothing_across_the_edge() {
        // With near-zero noise and slack below the adjacent-row clean
        // distance 1/(2 (delta + 1)), no just-below-edge pixel passes and
        // the just-above-edge estimate collapses to the clean value 0.
        let params = NlmParams {
            delta: 2,
            t: 0.05,
            sigma: 1e-6,
            weight_kind: WeightKind::Hard,
            oracle: OracleLevel::Semi,
            search: SearchMode::Full,
            taper_alpha: 1.0,
            taper_bandwidth: 1.0,
        };
        let diag = edge_diagnostics(32, 1e-6, &params, 3, 17).unwrap();
        assert!(diag.fraction_passing_j < 1e-9, "{diag:?}");
        assert!(diag.mean_edge_estimate.abs() < 1e-4, "{diag:?}");
    }

    #[test]
    fn edge_diagnostics_validation() {
        let params = NlmParams::defaults(32, 0.1, 1.0);
        assert!(matches!(
            edge_diagnostics(31, 1.0, &params, 2, 1),
            Err(Error::OddN { .. })
        ));
        let mut full = params;
        full.oracle = OracleLevel::Full;
        assert!(edge_diagnostics(32, 1.0, &full, 2, 1).is_err());
    }
}
