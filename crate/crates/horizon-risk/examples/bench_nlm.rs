use std::time::Instant;
use horizon_risk::*;
use horizon_risk::horizon::render;
use horizon_risk::noise::add_noise;
use horizon_risk::risk::{rate_sweep, fit_rate, empirical_risk, edge_diagnostics, box_oracle_risk};

fn main() {
    let sinusoid = EdgeContour::sinusoid(0.05, 1.0, 0.5, 2.0, 4.0).unwrap();
    let half = EdgeContour::constant(0.5).unwrap();

    let t0 = Instant::now();
    let table = rate_sweep(&DenoiserFamily::BoxOracle, &sinusoid, &[32, 64, 128, 256, 512], 0.5, 50, 7).unwrap();
    let fit = fit_rate(&table).unwrap();
    println!("box_oracle sinusoid slope {:.4} +/- {:.4}  ({:?})", fit.slope, fit.slope_stderr, t0.elapsed());
    for e in &table { println!("  n={} risk={:.5e} ({})", e.n, e.mean_risk, e.detail); }

    let t0 = Instant::now();
    let table = rate_sweep(&DenoiserFamily::Wavelet, &sinusoid, &[32, 64, 128, 256, 512], 0.5, 50, 7).unwrap();
    let fit = fit_rate(&table).unwrap();
    println!("wavelet sinusoid slope {:.4} +/- {:.4}  ({:?})", fit.slope, fit.slope_stderr, t0.elapsed());
    for e in &table { println!("  n={} risk={:.5e}", e.n, e.mean_risk); }

    // ordering at n=128
    let clean128 = render(&half, 128).unwrap();
    let t0 = Instant::now();
    let (box_est, hw) = box_oracle_risk(&clean128, 0.5, 50, 7).unwrap();
    let nlm_spec = DenoiserFamily::Nlm { epsilon: 0.1, oracle: OracleLevel::None }.instantiate(128, 0.5).unwrap();
    let nlm_est = risk::empirical_risk_on(&nlm_spec, &clean128, 0.5, 30, 7).unwrap();
    let wav_est = risk::empirical_risk_on(&DenoiserSpec::Wavelet { sigma: 0.5 }, &clean128, 0.5, 50, 7).unwrap();
    println!("ordering at n=128 ({:?}): box(hw={hw}) {:.5e}±{:.2e}  nlm {:.5e}±{:.2e}  wavelet {:.5e}±{:.2e}",
        t0.elapsed(), box_est.mean_risk, box_est.stderr, nlm_est.mean_risk, nlm_est.stderr, wav_est.mean_risk, wav_est.stderr);
    let comb_nlm = (box_est.stderr.powi(2) + nlm_est.stderr.powi(2)).sqrt();
    let comb_wav = (box_est.stderr.powi(2) + wav_est.stderr.powi(2)).sqrt();
    println!("  nlm margin: {:.2} comb SE; wavelet margin: {:.2} comb SE",
        (box_est.mean_risk - nlm_est.mean_risk) / comb_nlm,
        (box_est.mean_risk - wav_est.mean_risk) / comb_wav);

    // edge diagnostics n=128 sigma=1 semi-oracle defaults
    let t0 = Instant::now();
    let mut params = NlmParams::defaults(128, 0.1, 1.0);
    params.oracle = OracleLevel::Semi;
    let diag = edge_diagnostics(128, 1.0, &params, 30, 7).unwrap();
    println!("edge diag ({:?}): fraction {:.4} (p0/2 = {:.4}), mean est {:.4}",
        t0.elapsed(), diag.fraction_passing_j, diag.p0_reference / 2.0, diag.mean_edge_estimate);

    // identity example for distance identity cost check
    let _ = empirical_risk(&DenoiserSpec::Identity, &half, 32, 0.5, 10, 1).unwrap();

    // NLM sweep (the heavy one)
    let t0 = Instant::now();
    let table = rate_sweep(&DenoiserFamily::Nlm { epsilon: 0.1, oracle: OracleLevel::None }, &half, &[32, 64, 128, 256], 0.5, 30, 7).unwrap();
    let fit = fit_rate(&table).unwrap();
    println!("nlm half slope {:.4} +/- {:.4}  ({:?})", fit.slope, fit.slope_stderr, t0.elapsed());
    for e in &table { println!("  n={} risk={:.5e}", e.n, e.mean_risk); }

    let t0 = Instant::now();
    let table = rate_sweep(&DenoiserFamily::NlmTapered, &half, &[32, 64, 128, 256], 0.5, 30, 7).unwrap();
    let fit = fit_rate(&table).unwrap();
    println!("nlm tapered half slope {:.4} +/- {:.4}  ({:?})", fit.slope, fit.slope_stderr, t0.elapsed());
    for e in &table { println!("  n={} risk={:.5e}", e.n, e.mean_risk); }
}
