//! Implementations of the six subcommands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ndarray::Array1;

use etf_fingerprints::analysis::{
    distance_exact_bruteforce, distance_lower_bound_coherence, distance_lower_bound_rip,
    error_exponent, ergun_scale, gershgorin_delta_bound, minmax_bounds, optimal_threshold,
    rip_delta_bruteforce, simplex_distance_exact, type1_bound, type2_bound, BoundInputs,
    GuiltySetSpec,
};
use etf_fingerprints::channel::{forge, wnr, AttackSpec, EmbeddingParams, HostSignal};
use etf_fingerprints::designs::{
    load_steiner_incidence, orthogonal_design, simplex_design, steiner_etf,
    steiner_pairs_incidence, sylvester_hadamard, welch_bound, DesignKind, DesignMatrix,
};
use etf_fingerprints::detection::{focused_detect, test_statistics};
use etf_fingerprints::experiment::{run_experiment, ExperimentConfig, ExperimentCurve};
use etf_fingerprints::{io, Error};

use crate::manifest::Manifest;
use crate::plot::render_svg;
use crate::{Command, DesignKindArg};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Design { kind, steiner_pairs, incidence, n, out } => {
            cmd_design(kind, steiner_pairs, incidence, n, &out)
        }
        Command::Analyze { design, k, d_f, sigma2, out } => {
            cmd_analyze(&design, k, d_f, sigma2, out.as_deref())
        }
        Command::Attack { design, attack, host, d_f, seed, out } => {
            cmd_attack(&design, &attack, host.as_deref(), d_f, seed, &out)
        }
        Command::Detect { design, forgery, host, tau, d_f, out } => {
            cmd_detect(&design, &forgery, host.as_deref(), tau, d_f, out.as_deref())
        }
        Command::Experiment { config, seed, out, plot } => {
            cmd_experiment(&config, seed, &out, plot.as_deref())
        }
        Command::Plot { csv, out } => cmd_plot(&csv, &out),
    }
}

/// Nine significant digits in plain decimal notation.
fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (8 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

fn cmd_design(
    kind: DesignKindArg,
    steiner_pairs: Option<usize>,
    incidence: Option<PathBuf>,
    n: Option<usize>,
    out: &Path,
) -> Result<()> {
    let mut manifest = Manifest::new("design");
    let design = match kind {
        DesignKindArg::Etf => {
            let inc = match (steiner_pairs, &incidence) {
                (Some(v), None) => {
                    manifest = manifest.setting("kind", "etf").setting("steiner_pairs", v);
                    steiner_pairs_incidence(v)?
                }
                (None, Some(path)) => {
                    manifest = manifest
                        .setting("kind", "etf")
                        .setting("incidence", path.display())
                        .input(path)?;
                    load_steiner_incidence(path)?
                }
                _ => bail!("etf kind needs exactly one of --steiner-pairs or --incidence"),
            };
            let order = inc.r() + 1;
            if !order.is_power_of_two() {
                bail!(
                    "incidence needs a Hadamard matrix of order {order}; only Sylvester orders \
                     (powers of two) are generated"
                );
            }
            steiner_etf(&inc, &sylvester_hadamard(order.trailing_zeros())?)?
        }
        DesignKindArg::Simplex => {
            let n = n.context("simplex kind needs --n")?;
            manifest = manifest.setting("kind", "simplex").setting("n", n);
            simplex_design(n)?
        }
        DesignKindArg::Orthogonal => {
            let n = n.context("orthogonal kind needs --n")?;
            manifest = manifest.setting("kind", "orthogonal").setting("n", n);
            orthogonal_design(n)?
        }
    };

    io::write_design(out, &design)?;
    manifest.write_for(out)?;

    println!("kind = {}", design.kind().as_str());
    println!("N = {}", design.n());
    println!("M = {}", design.m());
    println!("mu = {}", fmt_sig9(design.mu()));
    match welch_bound(design.n(), design.m()) {
        Ok(w) => println!("welch_bound = {}", fmt_sig9(w)),
        Err(_) => println!("welch_bound = undefined (M <= N)"),
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_analyze(
    design_path: &Path,
    k: usize,
    d_f: f64,
    sigma2: f64,
    out: Option<&Path>,
) -> Result<()> {
    let design = io::read_design(design_path)
        .with_context(|| format!("loading {}", design_path.display()))?;
    let report = analyze_report(&design, design_path, k, d_f, sigma2)?;
    print!("{report}");
    if let Some(path) = out {
        io::atomic_write(path, &report)?;
        Manifest::new("analyze")
            .setting("design", design_path.display())
            .setting("k", k)
            .setting("d_f", d_f)
            .setting("sigma2", sigma2)
            .input(design_path)?
            .write_for(path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn analyze_report(
    design: &DesignMatrix,
    design_path: &Path,
    k: usize,
    d_f: f64,
    sigma2: f64,
) -> Result<String> {
    if k < 1 {
        bail!("K must be at least 1");
    }
    let inputs = BoundInputs::for_design(design, k, d_f, sigma2)?;
    let mut r = String::new();
    let mut line = |key: &str, value: String| {
        writeln!(r, "{key} = {value}").expect("string write cannot fail");
    };

    line("design_file", design_path.display().to_string());
    line("kind", design.kind().as_str().to_string());
    line("n", design.n().to_string());
    line("m", design.m().to_string());
    line("k", k.to_string());
    line("d_f", fmt_sig9(d_f));
    line("sigma2", fmt_sig9(sigma2));
    line("gamma", fmt_sig9(inputs.gamma()));
    line("wnr_db", fmt_sig9(wnr(d_f, sigma2)?));
    line("mu", fmt_sig9(design.mu()));
    match welch_bound(design.n(), design.m()) {
        Ok(w) => line("welch_bound", fmt_sig9(w)),
        Err(_) => line("welch_bound", "undefined (M <= N)".to_string()),
    }

    line("delta_gershgorin_2K", fmt_sig9(gershgorin_delta_bound(design.mu(), k)));
    let brute_delta = rip_delta_bruteforce(design, 2 * k);
    match &brute_delta {
        Ok(delta) => line("delta_bruteforce_2K", fmt_sig9(*delta)),
        Err(Error::Capacity(_)) => line("delta_bruteforce_2K", "skipped (capacity)".to_string()),
        Err(Error::Domain(_)) => line("delta_bruteforce_2K", "undefined (2K > M)".to_string()),
        Err(e) => bail!("brute-force isometry constant failed: {e}"),
    }

    if k < 2 {
        line("dist_bound_rip", "undefined (K<2)".to_string());
        line("dist_bound_coherence", "undefined (K<2)".to_string());
        line("dist_exact_bruteforce", "undefined (K<2)".to_string());
    } else {
        match &brute_delta {
            Ok(delta) => {
                let b = distance_lower_bound_rip(*delta, k)?;
                let suffix = if b.vacuous { " (vacuous)" } else { "" };
                line("dist_bound_rip", format!("{}{suffix}", fmt_sig9(b.value)));
            }
            Err(_) => line("dist_bound_rip", "skipped (capacity)".to_string()),
        }
        let b = distance_lower_bound_coherence(design.mu(), k)?;
        let suffix = if b.vacuous { " (vacuous)" } else { "" };
        line("dist_bound_coherence", format!("{}{suffix}", fmt_sig9(b.value)));
        match GuiltySetSpec::new(design, 1, k).and_then(|s| distance_exact_bruteforce(&s)) {
            Ok(d) => line("dist_exact_bruteforce", fmt_sig9(d)),
            Err(Error::Capacity(_)) => {
                line("dist_exact_bruteforce", "skipped (capacity)".to_string())
            }
            Err(e) => bail!("brute-force distance failed: {e}"),
        }
        if design.kind() == DesignKind::Simplex {
            match simplex_distance_exact(design.m(), k) {
                Ok(d) => line("dist_simplex_formula", fmt_sig9(d)),
                Err(_) => line("dist_simplex_formula", format!("undefined (K > {})", design.m() - 1)),
            }
        }
    }

    let tau_star = optimal_threshold(design.mu(), k);
    line("tau_star", fmt_sig9(tau_star));
    line("type1_bound_at_tau_star", fmt_sig9(type1_bound(&inputs, tau_star)));
    line(
        "type2_bound_at_tau_star",
        fmt_sig9(type2_bound(&inputs, tau_star, 1.0 / k as f64)?),
    );

    let mm = minmax_bounds(&inputs);
    line("minmax_upper", fmt_sig9(mm.upper));
    match mm.lower {
        Some(p) => line("minmax_lower", fmt_sig9(p)),
        None => line("minmax_lower", "undefined (K<2)".to_string()),
    }
    line("d_up", fmt_sig9(mm.d_up));
    match mm.d_low {
        Some(d) => line("d_low", fmt_sig9(d)),
        None => line("d_low", "undefined (K<2)".to_string()),
    }
    line("d_star_orthogonal", fmt_sig9(mm.d_star_orthogonal));
    line("d_star_simplex", fmt_sig9(mm.d_star_simplex));
    line("error_exponent", fmt_sig9(error_exponent(k)));
    if design.n() >= 2 {
        line("ergun_scale", fmt_sig9(ergun_scale(design.n())));
    } else {
        line("ergun_scale", "undefined (N<2)".to_string());
    }
    Ok(r)
}

/// Attack spec file: flat `key = value` lines with keys `coalition`
/// (1-based users), optional `weights`, `noise_sigma2`, optional `seed`.
fn parse_attack_file(text: &str, seed_override: Option<u64>) -> Result<AttackSpec> {
    let mut coalition: Option<Vec<usize>> = None;
    let mut weights: Option<Vec<f64>> = None;
    let mut noise_sigma2: Option<f64> = None;
    let mut seed: Option<u64> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("line {}: expected key = value", lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "coalition" => {
                let users: std::result::Result<Vec<usize>, _> =
                    value.split_whitespace().map(str::parse).collect();
                coalition = Some(users.with_context(|| format!("bad coalition `{value}`"))?);
            }
            "weights" => {
                let ws: std::result::Result<Vec<f64>, _> =
                    value.split_whitespace().map(str::parse).collect();
                weights = Some(ws.with_context(|| format!("bad weights `{value}`"))?);
            }
            "noise_sigma2" => {
                noise_sigma2 =
                    Some(value.parse().with_context(|| format!("bad noise_sigma2 `{value}`"))?)
            }
            "seed" => seed = Some(value.parse().with_context(|| format!("bad seed `{value}`"))?),
            other => bail!("unknown attack spec key `{other}`"),
        }
    }
    let coalition = coalition.context("attack spec must define `coalition`")?;
    let noise_sigma2 = noise_sigma2.context("attack spec must define `noise_sigma2`")?;
    let seed = seed_override.or(seed).unwrap_or_else(rand::random);
    match weights {
        Some(ws) => {
            if ws.len() != coalition.len() {
                bail!("{} weights given for {} coalition members", ws.len(), coalition.len());
            }
            let map: BTreeMap<usize, f64> = coalition.into_iter().zip(ws).collect();
            Ok(AttackSpec::new(map, noise_sigma2, seed)?)
        }
        None => Ok(AttackSpec::uniform(coalition, noise_sigma2, seed)?),
    }
}

fn cmd_attack(
    design_path: &Path,
    attack_path: &Path,
    host_path: Option<&Path>,
    d_f: f64,
    seed: Option<u64>,
    out: &Path,
) -> Result<()> {
    let design = io::read_design(design_path)?;
    let text = std::fs::read_to_string(attack_path)
        .with_context(|| format!("reading {}", attack_path.display()))?;
    let spec = parse_attack_file(&text, seed)?;
    let host = match host_path {
        Some(p) => HostSignal::new(io::read_vector(p)?)?,
        None => HostSignal::zeros(design.n()),
    };
    let params = EmbeddingParams::new(design.n(), d_f)?;
    let forgery = forge(&host, &design, &params, &spec)?;
    io::write_vector(out, forgery.y())?;

    let mut manifest = Manifest::new("attack")
        .setting("design", design_path.display())
        .setting("attack", attack_path.display())
        .setting("d_f", d_f)
        .setting("coalition", spec.coalition().map(|u| u.to_string()).collect::<Vec<_>>().join(" "))
        .setting("noise_sigma2", spec.noise_sigma2())
        .seed(spec.seed())
        .input(design_path)?
        .input(attack_path)?;
    if let Some(p) = host_path {
        manifest = manifest.setting("host", p.display()).input(p)?;
    }
    manifest.write_for(out)?;

    println!(
        "coalition = {}",
        spec.coalition().map(|u| u.to_string()).collect::<Vec<_>>().join(" ")
    );
    println!("noise_sigma2 = {}", fmt_sig9(spec.noise_sigma2()));
    println!("seed = {}", spec.seed());
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_detect(
    design_path: &Path,
    forgery_path: &Path,
    host_path: Option<&Path>,
    tau: f64,
    d_f: f64,
    out: Option<&Path>,
) -> Result<()> {
    let design = io::read_design(design_path)?;
    let y = io::read_vector(forgery_path)?;
    let host = match host_path {
        Some(p) => HostSignal::new(io::read_vector(p)?)?,
        None => HostSignal::zeros(design.n()),
    };
    if y.len() != host.len() {
        bail!("forgery has {} samples, host has {}", y.len(), host.len());
    }
    let z: Array1<f64> = &y - host.samples();
    let params = EmbeddingParams::new(design.n(), d_f)?;
    let stats = test_statistics(&z, &design, &params)?;
    let outcome = focused_detect(&stats, tau);

    let mut report = String::new();
    writeln!(report, "n = {}", design.n())?;
    writeln!(report, "m = {}", design.m())?;
    writeln!(report, "tau = {}", fmt_sig9(tau))?;
    let accused: Vec<String> = outcome.accused().iter().map(|u| u.to_string()).collect();
    writeln!(
        report,
        "accused = {}",
        if accused.is_empty() { "(none)".to_string() } else { accused.join(" ") }
    )?;
    for (i, t) in stats.values().iter().enumerate() {
        writeln!(report, "t[{}] = {}", i + 1, fmt_sig9(*t))?;
    }
    print!("{report}");
    if let Some(path) = out {
        io::atomic_write(path, &report)?;
        let mut manifest = Manifest::new("detect")
            .setting("design", design_path.display())
            .setting("forgery", forgery_path.display())
            .setting("tau", tau)
            .setting("d_f", d_f)
            .input(design_path)?
            .input(forgery_path)?;
        if let Some(p) = host_path {
            manifest = manifest.setting("host", p.display()).input(p)?;
        }
        manifest.write_for(path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_experiment(
    config_path: &Path,
    seed: Option<u64>,
    out: &Path,
    plot: Option<&Path>,
) -> Result<()> {
    let text = std::fs::read_to_string(config_path)
        .with_context(|| format!("reading {}", config_path.display()))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    // Seed precedence: flag, then config file, then entropy.
    if let Some(s) = seed {
        cfg.master_seed = Some(s);
    }
    if cfg.master_seed.is_none() {
        cfg.master_seed = Some(rand::random());
    }
    let master_seed = cfg.master_seed.expect("seed resolved above");

    let curve = run_experiment(&cfg)?;
    let csv = curve.to_csv();
    io::atomic_write(out, &csv)?;
    Manifest::new("experiment")
        .setting("config", config_path.display())
        .setting("trials", cfg.trials)
        .setting("p_fa_max", cfg.p_fa_max)
        .setting("d_f", cfg.d_f)
        .setting("sigma2", cfg.sigma2)
        .setting("tau_points", cfg.tau_points)
        .setting("k_values", cfg.k_values.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" "))
        .seed(master_seed)
        .input(config_path)?
        .write_for(out)?;
    println!("wrote {} ({} rows, seed {master_seed})", out.display(), curve.points.len());

    if let Some(plot_path) = plot {
        let svg = render_svg(&curve);
        io::atomic_write(plot_path, &svg)?;
        Manifest::new("plot")
            .setting("csv", out.display())
            .seed(master_seed)
            .input(out)?
            .write_for(plot_path)?;
        println!("wrote {}", plot_path.display());
    }
    Ok(())
}

fn cmd_plot(csv_path: &Path, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(csv_path)
        .with_context(|| format!("reading {}", csv_path.display()))?;
    let curve = ExperimentCurve::parse_csv(&text)?;
    let svg = render_svg(&curve);
    io::atomic_write(out, &svg)?;
    Manifest::new("plot")
        .setting("csv", csv_path.display())
        .input(csv_path)?
        .write_for(out)?;
    println!("wrote {}", out.display());
    Ok(())
}
