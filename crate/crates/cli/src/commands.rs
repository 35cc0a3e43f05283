use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use sdred::io::{write_csv, write_mask, write_tensor};
use sdred::metrics::{default_peak, make_phantom, quality};
use sdred::objectives::{DataFidelity, TvSolverOptions};
use sdred::operators::{
    apply_forward, make_coil_operator, make_fourier_subsampling, make_radial_mask, synthesize_sensitivities,
    LinearOperator,
};
use sdred::priors::{
    estimate_mismatch_epsilon, perturb_prior, prior_registry, regularizer_registry, verify_theorem3_1d,
    LogConcaveDensity1D, PerturbationMode, PriorParams,
};
use sdred::solver::{run_sd_red, Problem, SolverConfig};
use sdred::theory::{family_registry, run_sweep, FamilyParams, SweepCell, VerifyOptions};
use sdred::{Error, Tensor};

use crate::config::RunConfig;
use crate::error::CliError;

type CmdResult = Result<String, CliError>;

fn finish_config(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    for key in cfg.unused() {
        log::warn!("key `{key}` is not used by this command");
    }
    cfg.write_resolved(out)
}

fn tv_options(cfg: &mut RunConfig, d: TvSolverOptions) -> Result<TvSolverOptions, CliError> {
    Ok(TvSolverOptions {
        inner_iters: cfg.optional("tv_inner_iters", d.inner_iters)?,
        inner_tol: cfg.optional("tv_tolerance", d.inner_tol)?,
        accelerated: cfg.optional("tv_accelerated", d.accelerated)?,
    })
}

fn gaussian_noise(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn recon(cfg: &mut RunConfig, out: &Path) -> CmdResult {
    let kind: String = cfg.required("problem")?;
    let prior_name = match kind.as_str() {
        "recon-tv" => "tv",
        "recon-gaussian-prior" => "gaussian",
        other => {
            return Err(CliError::Config(format!(
                "recon needs problem = recon-tv or recon-gaussian-prior, got `{other}`"
            )))
        }
    };
    let size: usize = cfg.optional("size", 128)?;
    let num_lines: usize = cfg.optional("num_lines", 42)?;
    let coils: usize = cfg.optional("coils", 1)?;
    let noise: f64 = cfg.optional("noise", 0.0)?;
    let seed: u64 = cfg.optional("seed", 0)?;
    let mut params = PriorParams { shape: vec![size, size], ..PriorParams::default() };
    if prior_name == "tv" {
        params.weight = cfg.optional("weight", 0.005)?;
        let recon_defaults = TvSolverOptions { inner_iters: 50, inner_tol: 1e-6, accelerated: true };
        params.tv = tv_options(cfg, recon_defaults)?;
    } else {
        params.variance = cfg.optional("variance", 1.0)?;
        params.mean = cfg.optional("mean", 0.0)?;
    }
    let epsilon: f64 = cfg.optional("epsilon", 0.0)?;
    let mode: PerturbationMode = cfg.optional("mode", PerturbationMode::FixedDirection)?;
    let tau: f64 = cfg.optional("tau", 1.0)?;
    let sigma: f64 = cfg.optional("sigma", 1.0)?;
    let gamma: Option<f64> = cfg.maybe("gamma")?;
    let iterations: usize = cfg.optional("iterations", 1000)?;
    let tolerance: f64 = cfg.optional("tolerance", 0.0)?;
    let stride: usize = cfg.optional("stride", 10)?;
    finish_config(cfg, out)?;

    let truth = make_phantom(size)?;
    let mask = make_radial_mask(size, size, num_lines)?;
    write_mask(out.join("mask.mask"), &mask)?;
    let ratio = mask.sampling_ratio();
    let op: Arc<dyn LinearOperator> = if coils <= 1 {
        Arc::new(make_fourier_subsampling(mask)?)
    } else {
        Arc::new(make_coil_operator(mask, &synthesize_sensitivities(size, size, coils)?)?)
    };
    let clean = apply_forward(op.as_ref(), &truth)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = if noise > 0.0 {
        let data = clean
            .to_complex_vec()
            .into_iter()
            .map(|v| v + Complex64::new(gaussian_noise(&mut rng), gaussian_noise(&mut rng)) * noise)
            .collect();
        Tensor::complex(clean.shape(), data)?
    } else {
        clean
    };
    let fidelity = DataFidelity::new(op, y)?;
    let lipschitz = fidelity.lipschitz();
    let adjoint = fidelity.adjoint_image()?.real_part();

    let prior = prior_registry().build(prior_name, &params)?;
    let mut problem = Problem::new(fidelity, prior.clone(), tau, sigma)?.with_ground_truth(truth.clone())?;
    if prior_name == "tv" {
        problem = problem.with_regularizer(regularizer_registry().build("tv", &params)?);
    }
    if epsilon > 0.0 {
        problem = problem.with_mismatched(Arc::new(perturb_prior(prior, epsilon, mode)?));
    }
    let mut config = SolverConfig::new(gamma.unwrap_or(0.99 / (lipschitz + 2.0 * tau)), iterations);
    config.tolerance = tolerance;
    config.stride = stride;
    config.use_mismatched = epsilon > 0.0;
    let trace = run_sd_red(&problem, &config)?;
    for w in &trace.warnings {
        log::warn!("{w}");
    }

    write_csv(out.join("trace.csv"), &trace.records)?;
    let estimate = trace.final_iterate.real_part();
    write_tensor(out.join("final.tensor"), &estimate)?;
    let peak = default_peak(&truth)?;
    let base = quality(&truth, &adjoint, peak)?;
    let fin = quality(&truth, &estimate, peak)?;
    let last = trace.records.last().expect("trace has records");
    let summary = format!(
        "{kind}: sampling {:.1}%, psnr {:.2} dB (adjoint {:.2} dB), ssim {:.4}, iterations {}, final ||G||^2 {:.3e}",
        100.0 * ratio,
        fin.psnr,
        base.psnr,
        fin.ssim,
        trace.iterations,
        last.g_norm_sq
    );
    std::fs::write(out.join("summary.txt"), format!("{summary}\n")).map_err(Error::from)?;
    Ok(summary)
}

#[derive(Debug, Serialize)]
struct CellFailure {
    index: usize,
    tau: f64,
    sigma: f64,
    epsilon: f64,
    error: String,
}

/// Family overrides shared by sweeps and verification; `sweep` pins the
/// mode and run length that a converged sweep needs.
fn family_overrides(cfg: &mut RunConfig, sweep: bool) -> Result<FamilyParams, CliError> {
    let (iterations, mode) = if sweep {
        (Some(cfg.optional("iterations", 20_000)?), Some(cfg.optional("mode", PerturbationMode::FixedDirection)?))
    } else {
        (cfg.maybe("iterations")?, cfg.maybe("mode")?)
    };
    Ok(FamilyParams {
        iterations,
        epsilon: None,
        epsilon_max: None,
        tau: None,
        sigma: None,
        lambda: cfg.maybe("lambda")?,
        weight: cfg.maybe("weight")?,
        mode,
    })
}

fn theory_kind(cfg: &mut RunConfig) -> Result<String, CliError> {
    let kind: String = cfg.required("problem")?;
    if !family_registry().contains(&kind) {
        return Err(CliError::Config(format!(
            "problem must be one of {:?}, got `{kind}`",
            family_registry().names().collect::<Vec<_>>()
        )));
    }
    Ok(kind)
}

pub fn sweep(cfg: &mut RunConfig, out: &Path) -> CmdResult {
    let kind = theory_kind(cfg)?;
    let taus = cfg.list("taus", None)?;
    let sigmas = cfg.list("sigmas", None)?;
    let epsilons = cfg.list("epsilons", None)?;
    let seed: u64 = cfg.optional("seed", 0)?;
    let base = family_overrides(cfg, true)?;
    let tolerance: f64 = cfg.optional("tolerance", 1e-12)?;
    let stride: usize = cfg.optional("stride", 10)?;
    let gamma: Option<f64> = cfg.maybe("gamma")?;
    finish_config(cfg, out)?;

    let registry = family_registry();
    let cells = SweepCell::grid(&taus, &sigmas, &epsilons);
    let outcomes = run_sweep(&cells, |c| {
        let params = FamilyParams { tau: Some(c.tau), sigma: Some(c.sigma), epsilon: Some(c.epsilon), ..base.clone() };
        let inst = registry.build(&kind, &params)?.instance(seed)?;
        let mut config = inst.config.clone();
        config.tolerance = tolerance;
        config.stride = stride;
        if let Some(g) = gamma {
            config.gamma = g;
        }
        Ok((inst.problem, config))
    });

    let traces = out.join("traces");
    std::fs::create_dir_all(&traces).map_err(Error::from)?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut worst_code = 0;
    for (index, o) in outcomes.into_iter().enumerate() {
        match o.result {
            Ok((row, trace)) => {
                write_csv(traces.join(format!("cell_{index:03}.csv")), &trace.records)?;
                rows.push(row);
            }
            Err(err) => {
                let err = CliError::from(err);
                log::error!("cell {index} {:?}: {err}", o.cell);
                worst_code = worst_code.max(err.exit_code());
                failures.push(CellFailure {
                    index,
                    tau: o.cell.tau,
                    sigma: o.cell.sigma,
                    epsilon: o.cell.epsilon,
                    error: err.to_string(),
                });
            }
        }
    }
    write_csv(out.join("summary.csv"), &rows)?;
    if !failures.is_empty() {
        write_csv(out.join("failures.csv"), &failures)?;
        let msg = format!("{} of {} sweep cells failed", failures.len(), cells.len());
        return Err(if worst_code == 3 {
            CliError::Numerical(msg)
        } else {
            CliError::Verification(msg)
        });
    }
    Ok(format!("sweep: {} cells over {kind}, seed {seed}", cells.len()))
}

pub fn prior_distance(cfg: &mut RunConfig, out: &Path) -> CmdResult {
    let name: String = cfg.required("prior")?;
    if !prior_registry().contains(&name) {
        return Err(CliError::Config(format!(
            "prior must be one of {:?}, got `{name}`",
            prior_registry().names().collect::<Vec<_>>()
        )));
    }
    let sigmas = cfg.list("sigmas", None)?;
    let epsilon: f64 = cfg.optional("epsilon", 0.1)?;
    let mode: PerturbationMode = cfg.optional("mode", PerturbationMode::InputHashed)?;
    let count: usize = cfg.optional("test_points", 20)?;
    let seed: u64 = cfg.optional("seed", 0)?;
    let shape = if name == "tv" {
        let size: usize = cfg.optional("size", 16)?;
        vec![size, size]
    } else {
        vec![cfg.optional("length", 64usize)?]
    };
    let mut params = PriorParams { shape: shape.clone(), ..PriorParams::default() };
    match name.as_str() {
        "l1" | "tv" => params.weight = cfg.optional("weight", 0.3)?,
        "scaling" => params.factor = cfg.optional("factor", 0.5)?,
        "gaussian" => {
            params.variance = cfg.optional("variance", 1.0)?;
            params.mean = cfg.optional("mean", 0.0)?;
        }
        _ => {}
    }
    if name == "tv" {
        params.tv = tv_options(cfg, TvSolverOptions::default())?;
    }
    finish_config(cfg, out)?;

    let base = prior_registry().build(&name, &params)?;
    let dhat = perturb_prior(base.clone(), epsilon, mode)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = shape.iter().product();
    let points = (0..count)
        .map(|_| Tensor::real(&shape, (0..n).map(|_| gaussian_noise(&mut rng)).collect()))
        .collect::<sdred::Result<Vec<_>>>()?;
    let rows = estimate_mismatch_epsilon(base.as_ref(), &dhat, &points, &sigmas)?;
    write_csv(out.join("prior_distance.csv"), &rows)?;
    let mut text = format!("prior-distance: {} with epsilon {epsilon} ({mode})\n  sigma  max_dist  epsilon_hat", base.describe());
    for r in &rows {
        text.push_str(&format!("\n  {:<6} {:<9.4} {:.6}", r.sigma, r.max_dist, r.epsilon_hat));
    }
    Ok(text)
}

#[derive(Debug, Serialize)]
struct VerifyRow {
    seed: u64,
    rule: String,
    max_violation: f64,
    pass: bool,
    constants: String,
}

pub fn verify_bounds(cfg: &mut RunConfig, out: &Path, a_scale: f64) -> CmdResult {
    let kind = theory_kind(cfg)?;
    let count: u64 = cfg.optional("seeds", 100)?;
    let first: u64 = cfg.optional("seed", 0)?;
    let slack: f64 = cfg.optional("slack", sdred::theory::DEFAULT_SLACK)?;
    let mut params = family_overrides(cfg, false)?;
    params.epsilon = cfg.maybe("epsilon")?;
    params.tau = cfg.maybe("tau")?;
    params.sigma = cfg.maybe("sigma")?;
    finish_config(cfg, out)?;

    let family = family_registry().build(&kind, &params)?;
    let reports_dir = out.join("reports");
    std::fs::create_dir_all(&reports_dir).map_err(Error::from)?;
    let opts = VerifyOptions { slack, a_scale };
    let mut summary = Vec::new();
    let mut failed = Vec::new();
    for seed in first..first + count {
        let outcome = family.instance(seed)?.run(&opts)?;
        for report in &outcome.reports {
            write_csv(reports_dir.join(format!("seed_{seed:04}_{}.csv", report.rule)), &report.rows)?;
            let constants: Vec<String> = report.constants.iter().map(|(k, v)| format!("{k}={v:e}")).collect();
            summary.push(VerifyRow {
                seed,
                rule: report.rule.clone(),
                max_violation: report.max_violation,
                pass: report.pass,
                constants: constants.join(" "),
            });
            if !report.pass {
                println!("seed {seed}: {}", report.summary());
            }
        }
        if !outcome.pass() {
            failed.push(seed);
        }
    }
    write_csv(out.join("summary.csv"), &summary)?;
    if !failed.is_empty() {
        return Err(CliError::Verification(format!(
            "{} of {count} instances violate a bound; seeds {failed:?}",
            failed.len()
        )));
    }
    Ok(format!("verify-bounds: {count}/{count} {kind} instances within bounds (slack {slack:e})"))
}

#[derive(Debug, Serialize)]
struct OracleRow {
    delta: f64,
    sigma: f64,
    log_gap: f64,
    epsilon: f64,
    bound: f64,
    max_distance: f64,
    worst_z: f64,
    margin: f64,
    pass: bool,
}

pub fn oracle_1d(cfg: &mut RunConfig, out: &Path) -> CmdResult {
    let delta: f64 = cfg.required("delta")?;
    let sigmas = cfg.list("sigmas", Some(&[0.5, 1.0, 2.0]))?;
    let points: usize = cfg.optional("grid_points", 201)?;
    let (zmin, zmax): (f64, f64) = (cfg.optional("grid_min", -5.0)?, cfg.optional("grid_max", 5.0)?);
    let (a, b): (f64, f64) = (cfg.optional("domain_min", -8.0)?, cfg.optional("domain_max", 8.0)?);
    let nodes: usize = cfg.optional("nodes", sdred::priors::DEFAULT_GRID_NODES)?;
    finish_config(cfg, out)?;
    if points < 2 || !(zmax > zmin) {
        return Err(CliError::Config("need grid_points >= 2 and grid_max > grid_min".into()));
    }

    let h = LogConcaveDensity1D::with_nodes(|x| x * x, a, b, nodes)?;
    let hhat = LogConcaveDensity1D::with_nodes(move |x: f64| x * x + delta * x.cos(), a, b, nodes)?;
    let step = (zmax - zmin) / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|i| zmin + step * i as f64).collect();
    let mut rows = Vec::new();
    for &sigma in &sigmas {
        let r = verify_theorem3_1d(&h, &hhat, sigma, &grid)?;
        rows.push(OracleRow {
            delta,
            sigma,
            log_gap: r.log_gap,
            epsilon: r.epsilon,
            bound: r.bound,
            max_distance: r.max_distance,
            worst_z: r.worst_z,
            margin: r.bound - r.max_distance,
            pass: r.pass,
        });
    }
    write_csv(out.join("oracle_1d.csv"), &rows)?;
    let mut text = format!("oracle-1d: h = x^2 vs x^2 + {delta} cos(x)");
    for r in &rows {
        text.push_str(&format!(
            "\n  sigma {:<5} bound {:.6e} max distance {:.6e} margin {:.3e} {}",
            r.sigma,
            r.bound,
            r.max_distance,
            r.margin,
            if r.pass { "pass" } else { "FAIL" }
        ));
    }
    if rows.iter().any(|r| !r.pass) {
        return Err(CliError::Verification(text));
    }
    Ok(text)
}
