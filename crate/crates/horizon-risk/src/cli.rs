//! Batch front end: render, denoise, sweep, fit, diagnose, selftest.
//!
//! Every command validates its configuration before computing, writes text
//! outputs only (CSV data, a JSON metadata sidecar, optionally a gnuplot
//! script), and prints floats with 17 significant digits so that CSV files
//! parse back losslessly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use crate::contour::EdgeContour;
use crate::denoiser::DenoiserFamily;
use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::horizon::render;
use crate::linear::{halfplane_dft, linear_bias_floor};
use crate::nlm::{NlmParams, OracleLevel};
use crate::noise::{add_noise, NoiseSpec, GENERATOR_NAME};
use crate::risk::{edge_diagnostics, fit_log_log, rate_sweep, RateFit, RiskEstimate};
use crate::stats::{chisq_upper_bound, g_variance, gaussian_sq_mgf, p0_reference};
use crate::wavelet::{haar2_forward, haar2_inverse};
use crate::yaroslavsky::yf_weight_mean;

/// Nonlocal-means sweeps above this size need an explicit opt-in (full
/// search cost grows like `n^4`).
pub const NLM_DEFAULT_MAX_N: usize = 256;

pub const RISK_CSV_HEADER: &str =
    "n,denoiser,sigma,trials,mean_risk,stderr,bias_sq,variance,slope_ref";

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub master_seed: u64,
    pub output: Option<PathBuf>,
    pub emit_plot: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Write the noise-free render as a CSV matrix.
    Render { contour: EdgeContour, n: usize },
    /// Denoise one noisy render (trial 0) and write the result matrix.
    Denoise {
        contour: EdgeContour,
        family: DenoiserFamily,
        n: usize,
        sigma: f64,
    },
    /// Risk sweep over grid sizes for one or more denoiser families.
    Sweep {
        contour: EdgeContour,
        families: Vec<DenoiserFamily>,
        n_list: Vec<usize>,
        sigma: f64,
        trials: usize,
        allow_large_nlm: bool,
    },
    /// Fit log-log decay slopes to a previously written sweep CSV.
    Fit { input: PathBuf },
    /// Edge-mechanism diagnostics on the half-plane image.
    Diagnose {
        n: usize,
        sigma: f64,
        epsilon: f64,
        oracle: bool,
        trials: usize,
    },
    /// Closed-form golden value suite.
    Selftest,
}

/// 17 significant digits: enough to reproduce any f64 exactly on parse.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn validate(config: &RunConfig) -> Result<()> {
    let needs_output = matches!(
        config.command,
        Command::Render { .. } | Command::Denoise { .. } | Command::Sweep { .. }
    );
    if needs_output && config.output.is_none() {
        return Err(config_err("this command requires --output"));
    }
    match &config.command {
        Command::Render { n, .. } => {
            if *n < 2 {
                return Err(config_err("render needs n >= 2"));
            }
        }
        Command::Denoise { n, sigma, family, .. } => {
            if *n < 2 {
                return Err(config_err("denoise needs n >= 2"));
            }
            if !(*sigma > 0.0) {
                return Err(config_err("sigma must be positive"));
            }
            if family.is_box_oracle() {
                return Err(config_err(
                    "box oracle tuning is a sweep-level rule; pass box:<halfwidth> to denoise",
                ));
            }
            family.instantiate(*n, *sigma).map_err(|e| config_err(e.to_string()))?;
        }
        Command::Sweep {
            families,
            n_list,
            sigma,
            trials,
            allow_large_nlm,
            ..
        } => {
            if families.is_empty() {
                return Err(config_err("sweep needs at least one denoiser family"));
            }
            if n_list.len() < 3 {
                return Err(config_err("sweep needs at least 3 grid sizes"));
            }
            if !n_list.windows(2).all(|w| w[0] < w[1]) {
                return Err(config_err("grid sizes must be strictly increasing"));
            }
            if !(*sigma > 0.0) {
                return Err(config_err("sigma must be positive"));
            }
            if *trials < 2 {
                return Err(config_err("sweep needs at least 2 trials"));
            }
            for family in families {
                let nlm_like = matches!(
                    family,
                    DenoiserFamily::Nlm { .. } | DenoiserFamily::NlmTapered
                );
                if nlm_like && !allow_large_nlm {
                    if let Some(&n) = n_list.iter().find(|&&n| n > NLM_DEFAULT_MAX_N) {
                        return Err(config_err(format!(
                            "nonlocal-means sweep at n = {n} exceeds the default cap {NLM_DEFAULT_MAX_N}; \
                             pass --allow-large-nlm to accept the runtime"
                        )));
                    }
                }
                if matches!(family, DenoiserFamily::Wavelet) {
                    if let Some(&n) = n_list.iter().find(|&&n| !n.is_power_of_two()) {
                        return Err(config_err(format!(
                            "the wavelet denoiser needs power-of-two sizes, got {n}"
                        )));
                    }
                }
            }
        }
        Command::Fit { input } => {
            if !input.exists() {
                return Err(config_err(format!("no such input file: {}", input.display())));
            }
        }
        Command::Diagnose { n, sigma, trials, .. } => {
            if *n < 4 || *n % 2 != 0 {
                return Err(config_err("diagnose needs an even n >= 4"));
            }
            if !(*sigma > 0.0) {
                return Err(config_err("sigma must be positive"));
            }
            if *trials < 1 {
                return Err(config_err("diagnose needs at least 1 trial"));
            }
        }
        Command::Selftest => {}
    }
    Ok(())
}

/// Executes a validated configuration.
pub fn run(config: &RunConfig) -> Result<()> {
    validate(config)?;
    let started = Instant::now();
    let payload = match &config.command {
        Command::Render { contour, n } => {
            let grid = render(contour, *n)?;
            let out = config.output.as_ref().unwrap();
            write_grid_csv(out, &grid)?;
            println!("wrote {}x{} render to {}", n, n, out.display());
            json!({ "n": n })
        }
        Command::Denoise {
            contour,
            family,
            n,
            sigma,
        } => {
            let spec = family.instantiate(*n, *sigma)?;
            let clean = render(contour, *n)?;
            let noisy = add_noise(&clean, &NoiseSpec::new(*sigma, config.master_seed, 0)?);
            let denoised = spec.apply(&noisy, Some(&clean))?;
            let out = config.output.as_ref().unwrap();
            write_grid_csv(out, &denoised)?;
            let noisy_mse = clean.mse(&noisy);
            let denoised_mse = clean.mse(&denoised);
            println!(
                "{}: noisy mse {:.6e} -> denoised mse {:.6e} ({})",
                family.tag(),
                noisy_mse,
                denoised_mse,
                out.display()
            );
            json!({
                "denoiser": spec,
                "noisy_mse": noisy_mse,
                "denoised_mse": denoised_mse,
            })
        }
        Command::Sweep {
            contour,
            families,
            n_list,
            sigma,
            trials,
            ..
        } => {
            let mut tables: Vec<(DenoiserFamily, Vec<RiskEstimate>)> = Vec::new();
            for family in families {
                let table =
                    rate_sweep(family, contour, n_list, *sigma, *trials, config.master_seed)?;
                tables.push((*family, table));
            }
            let out = config.output.as_ref().unwrap();
            write_risk_csv(out, &tables)?;
            let mut fits = Vec::new();
            for (family, table) in &tables {
                let fit = crate::risk::fit_rate(table)?;
                println!(
                    "{}: slope {:.4} +/- {:.4} (reference {:.4})",
                    family.tag(),
                    fit.slope,
                    fit.slope_stderr,
                    family.slope_ref()
                );
                fits.push((family.tag(), fit));
            }
            if config.emit_plot {
                let script = plot_script_path(out);
                write_plot_script(&script, out, &tables)?;
                println!("wrote gnuplot script to {}", script.display());
            }
            println!("wrote sweep table to {}", out.display());
            json!({
                "estimates": tables.iter().map(|(_, t)| t).collect::<Vec<_>>(),
                "fits": fits.iter().map(|(tag, fit)| json!({"denoiser": tag, "fit": fit})).collect::<Vec<_>>(),
            })
        }
        Command::Fit { input } => {
            let fits = fit_csv(input)?;
            for (tag, fit) in &fits {
                println!("{}: slope {:.4} +/- {:.4}", tag, fit.slope, fit.slope_stderr);
            }
            json!({
                "fits": fits.iter().map(|(tag, fit)| json!({"denoiser": tag, "fit": fit})).collect::<Vec<_>>(),
            })
        }
        Command::Diagnose {
            n,
            sigma,
            epsilon,
            oracle,
            trials,
        } => {
            let mut params = NlmParams::defaults(*n, *epsilon, *sigma);
            if *oracle {
                params.oracle = OracleLevel::Semi;
            }
            let diag = edge_diagnostics(*n, *sigma, &params, *trials, config.master_seed)?;
            println!(
                "n = {}, sigma = {}: fraction of just-below-edge pixels passing = {:.4} \
                 (p0 reference {:.4}), mean estimate just above the edge = {:.4}",
                n, sigma, diag.fraction_passing_j, diag.p0_reference, diag.mean_edge_estimate
            );
            let report = params.check_assumptions(*n);
            println!(
                "parameter flags: delta_fits = {}, threshold_positive = {}, delta_below_n03 = {}",
                report.delta_fits, report.threshold_positive, report.delta_below_n03
            );
            json!({ "diagnostics": diag, "assumptions": report })
        }
        Command::Selftest => {
            selftest()?;
            json!({ "selftest": "ok" })
        }
    };
    if let Some(out) = &config.output {
        write_sidecar(out, config, payload, started.elapsed().as_secs_f64())?;
    }
    Ok(())
}

fn write_grid_csv(path: &Path, grid: &ImageGrid) -> Result<()> {
    let n = grid.n();
    let mut text = String::new();
    for j in 0..n {
        for i in 0..n {
            if i > 0 {
                text.push(',');
            }
            text.push_str(&format_float(grid.get(i, j)));
        }
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn write_risk_csv(path: &Path, tables: &[(DenoiserFamily, Vec<RiskEstimate>)]) -> Result<()> {
    let mut text = String::from(RISK_CSV_HEADER);
    text.push('\n');
    for (family, table) in tables {
        for est in table {
            writeln!(
                text,
                "{},{},{},{},{},{},{},{},{}",
                est.n,
                est.denoiser,
                format_float(est.sigma),
                est.trials,
                format_float(est.mean_risk),
                format_float(est.stderr),
                format_float(est.bias_sq),
                format_float(est.variance),
                format_float(family.slope_ref()),
            )
            .expect("writing to a string cannot fail");
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Parses a sweep CSV back and fits one decay line per denoiser tag.
pub fn fit_csv(path: &Path) -> Result<Vec<(String, RateFit)>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == RISK_CSV_HEADER => {}
        _ => {
            return Err(config_err(format!(
                "{} does not look like a sweep CSV (expected header `{RISK_CSV_HEADER}`)",
                path.display()
            )))
        }
    }
    let mut groups: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(config_err(format!(
                "line {}: expected 9 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let n: f64 = fields[0]
            .parse()
            .map_err(|_| config_err(format!("line {}: bad n", lineno + 2)))?;
        let risk: f64 = fields[4]
            .parse()
            .map_err(|_| config_err(format!("line {}: bad mean_risk", lineno + 2)))?;
        let tag = fields[1].to_string();
        match groups.iter_mut().find(|(t, _)| *t == tag) {
            Some((_, points)) => points.push((n, risk)),
            None => groups.push((tag, vec![(n, risk)])),
        }
    }
    if groups.is_empty() {
        return Err(config_err("sweep CSV contains no data rows"));
    }
    groups
        .into_iter()
        .map(|(tag, points)| fit_log_log(&points).map(|fit| (tag, fit)))
        .collect()
}

fn plot_script_path(csv: &Path) -> PathBuf {
    csv.with_extension("gp")
}

fn write_plot_script(
    path: &Path,
    csv: &Path,
    tables: &[(DenoiserFamily, Vec<RiskEstimate>)],
) -> Result<()> {
    let mut s = String::new();
    s.push_str("set datafile separator \",\"\n");
    s.push_str("set logscale xy\n");
    s.push_str("set xlabel \"n (pixels per side)\"\n");
    s.push_str("set ylabel \"mean risk\"\n");
    s.push_str("set key bottom left\n");
    let csv_name = csv
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_else(|| csv.display().to_string());
    let mut plots: Vec<String> = Vec::new();
    for (family, table) in tables {
        let tag = family.tag();
        plots.push(format!(
            "\"{csv_name}\" using 1:(strcol(2) eq \"{tag}\" ? $5 : 1/0) \
             with linespoints title \"{tag}\""
        ));
        if let Some(first) = table.first() {
            let anchor = first.mean_risk / (first.n as f64).powf(family.slope_ref());
            plots.push(format!(
                "{anchor:.6e} * x ** ({:.6}) with lines dashtype 2 title \"{tag} reference slope {:.3}\"",
                family.slope_ref(),
                family.slope_ref()
            ));
        }
    }
    if let Some((_, table)) = tables.first() {
        if let Some(first) = table.first() {
            let anchor = first.mean_risk / (first.n as f64).powf(-4.0 / 3.0);
            plots.push(format!(
                "{anchor:.6e} * x ** (-4.0/3.0) with lines dashtype 3 title \"minimax reference -4/3\""
            ));
        }
    }
    s.push_str("plot \\\n    ");
    s.push_str(&plots.join(", \\\n    "));
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

fn write_sidecar(
    output: &Path,
    config: &RunConfig,
    payload: serde_json::Value,
    wall_time_secs: f64,
) -> Result<()> {
    let meta = json!({
        "config": config,
        "master_seed": config.master_seed,
        "noise_generator": GENERATOR_NAME,
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_secs": wall_time_secs,
        "threads": rayon::current_num_threads(),
        "result": payload,
    });
    let mut name = output
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push_str(".meta.json");
    let path = output.with_file_name(name);
    std::fs::write(&path, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Domain(format!("metadata serialization failed: {e}"))
    }
}

struct GoldenCheck {
    name: &'static str,
    got: f64,
    want: f64,
    tol: f64,
}

/// Runs the closed-form golden suite and reports one line per check.
pub fn selftest() -> Result<()> {
    let dft4 = halfplane_dft(4)?;
    let roundtrip = {
        let img = add_noise(
            &ImageGrid::zeros(8),
            &NoiseSpec::new(1.0, 0x5e1f7e57, 0)?,
        );
        let rec = haar2_inverse(&haar2_forward(&img)?);
        img.data()
            .iter()
            .zip(rec.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let checks = [
        GoldenCheck {
            name: "yf_weight_mean(1,1,1)",
            got: yf_weight_mean(1.0, 1.0, 1.0),
            want: 0.5506953149031837,
            tol: 1e-6,
        },
        GoldenCheck {
            name: "p0_reference(1)",
            got: p0_reference(1.0),
            want: 0.11987503054673837,
            tol: 1e-6,
        },
        GoldenCheck {
            name: "g_variance(1,2)",
            got: g_variance(1.0, 2),
            want: 2.56,
            tol: 1e-6,
        },
        GoldenCheck {
            name: "chisq_upper_bound(10,1)",
            got: chisq_upper_bound(10, 1.0)?,
            want: 0.21561430397073494,
            tol: 1e-6,
        },
        GoldenCheck {
            name: "gaussian_sq_mgf(0.25,1)",
            got: gaussian_sq_mgf(0.25, 1.0)?,
            want: std::f64::consts::SQRT_2,
            tol: 1e-6,
        },
        GoldenCheck {
            name: "|halfplane_dft(4)(0,1)|",
            got: dft4.get(0, 1).norm(),
            want: std::f64::consts::SQRT_2,
            tol: 1e-6,
        },
        GoldenCheck {
            name: "linear_bias_floor(64,1)",
            got: linear_bias_floor(64, 1.0),
            want: 1.554510472134953e-3,
            tol: 1e-9,
        },
        GoldenCheck {
            name: "haar round-trip max error",
            got: roundtrip,
            want: 0.0,
            tol: 1e-12,
        },
    ];
    let mut failures = 0;
    for check in &checks {
        let ok = (check.got - check.want).abs() <= check.tol;
        println!(
            "{} {:<28} got {:.12e} want {:.12e}",
            if ok { "ok  " } else { "FAIL" },
            check.name,
            check.got,
            check.want
        );
        if !ok {
            failures += 1;
        }
    }
    if failures > 0 {
        return Err(Error::Domain(format!("{failures} golden checks failed")));
    }
    Ok(())
}

/// Parses a contour description: `const:LEVEL`, `poly:C0,C1,...`, or
/// `sin:AMPLITUDE,FREQUENCY,OFFSET`, validated against the declared class.
pub fn parse_contour(text: &str, alpha: f64, c: f64) -> Result<EdgeContour> {
    let (kind, rest) = text
        .split_once(':')
        .ok_or_else(|| config_err(format!("contour `{text}` needs the form kind:params")))?;
    let params: Vec<f64> = rest
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| config_err(format!("bad contour parameter `{p}`")))
        })
        .collect::<Result<_>>()?;
    let contour = match (kind, params.as_slice()) {
        ("const", [level]) => EdgeContour::new(
            crate::contour::ContourShape::Constant { level: *level },
            alpha,
            c,
        ),
        ("poly", coeffs) if !coeffs.is_empty() => EdgeContour::new(
            crate::contour::ContourShape::Polynomial {
                coeffs: coeffs.to_vec(),
            },
            alpha,
            c,
        ),
        ("sin", [amplitude, frequency, offset]) => EdgeContour::new(
            crate::contour::ContourShape::Sinusoid {
                amplitude: *amplitude,
                frequency: *frequency,
                offset: *offset,
            },
            alpha,
            c,
        ),
        _ => {
            return Err(config_err(format!(
                "contour `{text}` not recognized; use const:L, poly:C0,C1,..., or sin:A,F,O"
            )))
        }
    };
    contour.map_err(|e| config_err(format!("contour rejected: {e}")))
}

/// Parses a denoiser family tag: `identity`, `global-mean`, `box`,
/// `box:H`, `yf:DELTA,TAU`, `syf:DELTA,TAU`, `nlm`, `snlm`, `fnlm`,
/// `nlm-tapered`, `wavelet`. `epsilon` feeds the nonlocal-means rule.
pub fn parse_family(text: &str, epsilon: f64) -> Result<DenoiserFamily> {
    let (head, args) = match text.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (text, None),
    };
    let parse_pair = |args: Option<&str>| -> Result<(usize, f64)> {
        let args = args.ok_or_else(|| config_err("yf needs `yf:DELTA,TAU`"))?;
        let (d, t) = args
            .split_once(',')
            .ok_or_else(|| config_err("yf needs `yf:DELTA,TAU`"))?;
        Ok((
            d.trim()
                .parse()
                .map_err(|_| config_err(format!("bad delta `{d}`")))?,
            t.trim()
                .parse()
                .map_err(|_| config_err(format!("bad tau `{t}`")))?,
        ))
    };
    match head {
        "identity" => Ok(DenoiserFamily::Identity),
        "global-mean" | "global_mean" | "mean" => Ok(DenoiserFamily::GlobalMean),
        "box" => match args {
            None => Ok(DenoiserFamily::BoxOracle),
            Some(h) => Ok(DenoiserFamily::BoxFixed {
                halfwidth: h
                    .trim()
                    .parse()
                    .map_err(|_| config_err(format!("bad box halfwidth `{h}`")))?,
            }),
        },
        "yf" | "syf" => {
            let oracle = head == "syf";
            match args {
                None => Ok(DenoiserFamily::Yf { oracle }),
                Some(_) => {
                    let (delta, tau) = parse_pair(args)?;
                    Ok(DenoiserFamily::YfFixed { delta, tau, oracle })
                }
            }
        }
        "nlm" => Ok(DenoiserFamily::Nlm {
            epsilon,
            oracle: OracleLevel::None,
        }),
        "snlm" => Ok(DenoiserFamily::Nlm {
            epsilon,
            oracle: OracleLevel::Semi,
        }),
        "fnlm" => Ok(DenoiserFamily::Nlm {
            epsilon,
            oracle: OracleLevel::Full,
        }),
        "nlm-tapered" | "nlm_tapered" | "tapered" => Ok(DenoiserFamily::NlmTapered),
        "wavelet" | "haar" => Ok(DenoiserFamily::Wavelet),
        other => Err(config_err(format!("unknown denoiser family `{other}`"))),
    }
}

/// Comma-separated strictly increasing grid sizes.
pub fn parse_n_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| config_err(format!("bad grid size `{p}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for &v in &[0.1, 1.0 / 3.0, 2.5e-13, 123456.789, f64::MIN_POSITIVE] {
            let s = format_float(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v, back, "{s}");
        }
    }

    #[test]
    fn contour_parsing() {
        assert!(parse_contour("const:0.5", 2.0, 1.0).is_ok());
        assert!(parse_contour("sin:0.05,1,0.5", 2.0, 4.0).is_ok());
        assert!(parse_contour("sin:0.5,4,0.5", 2.0, 400.0).is_err()); // leaves range
        assert!(parse_contour("blob:1", 2.0, 1.0).is_err());
        assert!(parse_contour("const", 2.0, 1.0).is_err());
    }

    #[test]
    fn family_parsing() {
        assert_eq!(parse_family("box", 0.1).unwrap(), DenoiserFamily::BoxOracle);
        assert_eq!(
            parse_family("box:3", 0.1).unwrap(),
            DenoiserFamily::BoxFixed { halfwidth: 3 }
        );
        assert!(matches!(
            parse_family("snlm", 0.2).unwrap(),
            DenoiserFamily::Nlm {
                oracle: OracleLevel::Semi,
                ..
            }
        ));
        assert!(parse_family("zigzag", 0.1).is_err());
    }

    #[test]
    fn selftest_passes() {
        selftest().unwrap();
    }
}
