//! Command implementations: resolve flags against the config file, run the
//! library inside a sized thread pool, and emit the report.

use std::path::PathBuf;

use serde_json::{json, Value};

use bnpchi::chisq::{
    calibrate_alpha, posterior_self_distance_draws, prior_distance_draws, CalibrationSpec,
    Representation,
};
use bnpchi::dp::sample_dirichlet_weights;
use bnpchi::kl::{kl_forward_parts, kl_reverse_parts};
use bnpchi::mc::map_replicates;
use bnpchi::special::chi_squared_quantile;
use bnpchi::{
    gof_composite, gof_simple, independence_test, AlphaChoice, BivariateMeasure, ChisqError,
    CompositeSettings, DpParams, EmpiricalSample, Family, Grid, InterleavedPartition, Measure,
    Partition, RngStream, TestSettings, ThetaSampler,
};

use crate::config::FileConfig;
use crate::emit::{csv_float, envelope, write_json, write_text};
use crate::{
    data, parse_number_list, AsymptoticsArgs, CalibrateArgs, CliError, Command, CommonArgs,
    DpSampleArgs, GofArgs, GofCompositeArgs, IndepArgs, KlMomentsArgs, Table1Args,
};

fn usage(m: impl Into<String>) -> CliError {
    CliError::Usage(m.into())
}

fn runtime(m: impl Into<String>) -> CliError {
    CliError::Runtime(m.into())
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| usage(format!("missing --{flag} (no flag and no config value)")))
}

fn parse_measure(spec: &str) -> Result<Measure<f64>, CliError> {
    spec.parse().map_err(|e| usage(format!("bad measure spec {spec:?}: {e}")))
}

fn parse_bivariate(spec: &str) -> Result<BivariateMeasure<f64>, CliError> {
    spec.parse().map_err(|e| usage(format!("bad measure spec {spec:?}: {e}")))
}

/// Edge list from a flag value or the config key, flag winning.
fn edge_list(
    flag: Option<&str>,
    cfg: &mut FileConfig,
    key: &str,
) -> Result<Option<Vec<f64>>, CliError> {
    match flag {
        Some(s) => {
            let flag_name = key.replace('_', "-");
            parse_number_list(s).map(Some).map_err(|e| usage(format!("--{flag_name}: {e}")))
        }
        None => cfg.number_list(key),
    }
}

fn partition_from(edges: Vec<f64>, what: &str) -> Result<Partition<f64>, CliError> {
    Partition::new(edges).map_err(|e| usage(format!("{what}: {e}")))
}

fn check_threshold(c: f64) -> Result<f64, CliError> {
    if !(c.is_finite() && c > 0.0) {
        return Err(usage(format!("--c must be a positive finite threshold, got {c}")));
    }
    Ok(c)
}

fn check_belief(q: f64) -> Result<f64, CliError> {
    if !(q.is_finite() && q > 0.0 && q < 1.0) {
        return Err(usage(format!("--q must lie strictly between 0 and 1, got {q}")));
    }
    Ok(q)
}

/// Values every command resolves the same way.
struct Shared {
    seed: u64,
    replicates: usize,
    workers: usize,
    out: Option<PathBuf>,
}

fn resolve_shared(
    common: &CommonArgs,
    cfg: &mut FileConfig,
    default_replicates: usize,
) -> Result<Shared, CliError> {
    let seed = match common.seed {
        Some(s) => s,
        None => cfg.u64("seed")?.unwrap_or(0),
    };
    let replicates = match common.replicates {
        Some(r) => r,
        None => cfg.usize("replicates")?.unwrap_or(default_replicates),
    };
    if replicates == 0 {
        return Err(usage("--replicates must be positive"));
    }
    let workers = match common.workers {
        Some(w) => w,
        None => cfg.usize("workers")?.unwrap_or(0),
    };
    Ok(Shared { seed, replicates, workers, out: common.out.clone() })
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| runtime(format!("thread pool: {e}")))
}

/// Mass-related flags shared by the three test commands.
struct MassFlags {
    alpha: Option<f64>,
    q: Option<f64>,
    alpha_lo: Option<f64>,
    alpha_hi: Option<f64>,
    cal_replicates: Option<usize>,
    cal_tolerance: Option<f64>,
}

/// Either a fixed mass or a calibration spec, plus the belief level used for
/// the decision. `--alpha` and `--q` are mutually exclusive; with neither,
/// the mass is calibrated to q = 0.5.
fn resolve_mass(
    flags: MassFlags,
    cfg: &mut FileConfig,
    default_lo: f64,
    replicates: usize,
) -> Result<(AlphaChoice<f64>, f64, Value), CliError> {
    let alpha = match flags.alpha {
        Some(a) => Some(a),
        None => cfg.f64("alpha")?,
    };
    let q = match flags.q {
        Some(v) => Some(v),
        None => cfg.f64("q")?,
    };
    let alpha_lo = match flags.alpha_lo {
        Some(v) => Some(v),
        None => cfg.f64("alpha_lo")?,
    };
    let alpha_hi = match flags.alpha_hi {
        Some(v) => Some(v),
        None => cfg.f64("alpha_hi")?,
    };
    let cal_replicates = match flags.cal_replicates {
        Some(v) => Some(v),
        None => cfg.usize("cal_replicates")?,
    };
    let cal_tolerance = match flags.cal_tolerance {
        Some(v) => Some(v),
        None => cfg.f64("cal_tolerance")?,
    };

    if alpha.is_some() && q.is_some() {
        return Err(usage(
            "--alpha fixes the mass and --q asks to calibrate it; give exactly one",
        ));
    }
    if let Some(a) = alpha {
        if !(a.is_finite() && a > 0.0) {
            return Err(usage(format!("--alpha must be positive and finite, got {a}")));
        }
        let config = json!({
            "mass": "fixed",
            "alpha": a,
            "q": 0.5,
        });
        return Ok((AlphaChoice::Fixed(a), 0.5, config));
    }

    let q = check_belief(q.unwrap_or(0.5))?;
    let spec = CalibrationSpec {
        alpha_lo: alpha_lo.unwrap_or(default_lo),
        alpha_hi: alpha_hi.unwrap_or(1e4),
        tolerance: cal_tolerance.unwrap_or(0.01),
        replicates: cal_replicates.unwrap_or(replicates),
        max_iterations: 40,
    };
    let config = json!({
        "mass": "calibrated",
        "q": q,
        "alpha_lo": spec.alpha_lo,
        "alpha_hi": spec.alpha_hi,
        "cal_replicates": spec.replicates,
        "cal_tolerance": spec.tolerance,
        "max_iterations": spec.max_iterations,
    });
    Ok((AlphaChoice::Calibrated(spec), q, config))
}

fn merge(base: &mut Value, extra: Value) {
    if let (Value::Object(b), Value::Object(e)) = (base, extra) {
        b.extend(e);
    }
}

fn to_value<T: serde::Serialize>(report: &T) -> Result<Value, CliError> {
    serde_json::to_value(report).map_err(|e| runtime(format!("serializing report: {e}")))
}

fn resolve_data_path(
    flag: Option<PathBuf>,
    cfg: &mut FileConfig,
) -> Result<PathBuf, CliError> {
    let path = match flag {
        Some(p) => Some(p),
        None => cfg.string("data")?.map(PathBuf::from),
    };
    require(path, "data")
}

fn resolve_header(flag: bool, cfg: &mut FileConfig) -> Result<bool, CliError> {
    Ok(flag || cfg.boolean("header")?.unwrap_or(false))
}

pub fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Gof(a) => cmd_gof(a),
        Command::GofComposite(a) => cmd_gof_composite(a),
        Command::Indep(a) => cmd_indep(a),
        Command::DpSample(a) => cmd_dp_sample(a),
        Command::KlMoments(a) => cmd_kl_moments(a),
        Command::Asymptotics(a) => cmd_asymptotics(a),
        Command::Table1(a) => cmd_table1(a),
    }
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    let mut cfg = FileConfig::load(args.common.config.as_ref())?;
    let shared = resolve_shared(&args.common, &mut cfg, 2000)?;

    let null_spec = require(args.null.or(cfg.string("null")?), "null")?;
    let c = check_threshold(require(args.c.or(cfg.f64("c")?), "c")?)?;
    let q = check_belief(require(args.q.or(cfg.f64("q")?), "q")?)?;
    let edges = require(edge_list(args.edges.as_deref(), &mut cfg, "edges")?, "edges")?;
    let n_atoms = args.n_atoms.or(cfg.usize("n_atoms")?).unwrap_or(2000);
    let alpha_lo = args.alpha_lo.or(cfg.f64("alpha_lo")?).unwrap_or(1e-2);
    let alpha_hi = args.alpha_hi.or(cfg.f64("alpha_hi")?).unwrap_or(1e4);
    let tolerance = args.tolerance.or(cfg.f64("tolerance")?).unwrap_or(0.01);
    let max_iterations = args.max_iterations.or(cfg.usize("max_iterations")?).unwrap_or(40);
    cfg.finish()?;

    let null = parse_measure(&null_spec)?;
    let bins = partition_from(edges.clone(), "--edges")?;
    let spec = CalibrationSpec {
        alpha_lo,
        alpha_hi,
        tolerance,
        replicates: shared.replicates,
        max_iterations,
    };

    let stream = RngStream::root(shared.seed);
    let pool = build_pool(shared.workers)?;
    let cal = pool
        .install(|| {
            calibrate_alpha::<f64, ChisqError, _>(&spec, c, q, &stream, |alpha, substream| {
                let params = DpParams::new(alpha, null.clone())?;
                let law =
                    prior_distance_draws(&params, &bins, n_atoms, spec.replicates, substream)?;
                Ok(law.distances)
            })
        })
        .map_err(|e| runtime(e.to_string()))?;

    let config = json!({
        "command": "calibrate",
        "null": null_spec,
        "c": c,
        "q": q,
        "edges": edges,
        "n_atoms": n_atoms,
        "alpha_lo": alpha_lo,
        "alpha_hi": alpha_hi,
        "tolerance": tolerance,
        "max_iterations": max_iterations,
        "replicates": shared.replicates,
        "seed": shared.seed,
    });
    let result = json!({
        "alpha": cal.alpha,
        "achieved_prob": cal.achieved,
        "iterations": cal.evaluations.len(),
        "converged": cal.converged,
        "evaluations": cal.evaluations,
    });
    write_json(shared.out.as_ref(), &envelope(config, result))
}

fn cmd_gof(args: GofArgs) -> Result<(), CliError> {
    let mut cfg = FileConfig::load(args.common.config.as_ref())?;
    let shared = resolve_shared(&args.common, &mut cfg, 2000)?;

    let data_path = resolve_data_path(args.data, &mut cfg)?;
    let header = resolve_header(args.header, &mut cfg)?;
    let null_spec = require(args.null.or(cfg.string("null")?), "null")?;
    let c = check_threshold(require(args.c.or(cfg.f64("c")?), "c")?)?;
    let edges = require(edge_list(args.edges.as_deref(), &mut cfg, "edges")?, "edges")?;
    let n_atoms = args.n_atoms.or(cfg.usize("n_atoms")?).unwrap_or(2000);
    let (alpha, q, mass_config) = resolve_mass(
        MassFlags {
            alpha: args.alpha,
            q: args.q,
            alpha_lo: args.alpha_lo,
            alpha_hi: args.alpha_hi,
            cal_replicates: args.cal_replicates,
            cal_tolerance: args.cal_tolerance,
        },
        &mut cfg,
        1e-2,
        shared.replicates,
    )?;
    cfg.finish()?;

    let observations = data::load_column(&data_path, header)?;
    let null = parse_measure(&null_spec)?;
    let bins = partition_from(edges.clone(), "--edges")?;
    let settings =
        TestSettings { c, q, alpha, n_atoms, replicates: shared.replicates };

    let stream = RngStream::root(shared.seed);
    let pool = build_pool(shared.workers)?;
    let report = pool.install(|| gof_simple(&observations, &null, &bins, &settings, &stream))?;

    let mut config = json!({
        "command": "gof",
        "data": data_path.display().to_string(),
        "header": header,
        "null": null_spec,
        "c": c,
        "edges": edges,
        "n_atoms": n_atoms,
        "replicates": shared.replicates,
        "seed": shared.seed,
    });
    merge(&mut config, mass_config);
    write_json(shared.out.as_ref(), &envelope(config, to_value(&report)?))
}

fn cmd_gof_composite(args: GofCompositeArgs) -> Result<(), CliError> {
    let mut cfg = FileConfig::load(args.common.config.as_ref())?;
    let shared = resolve_shared(&args.common, &mut cfg, 2000)?;

    let data_path = resolve_data_path(args.data, &mut cfg)?;
    let header = resolve_header(args.header, &mut cfg)?;
    let family_name = args.family.or(cfg.string("family")?).unwrap_or_else(|| "exp".into());
    let prior_spec = require(args.prior.or(cfg.string("prior")?), "prior")?;
    let bin_count = args.k.or(cfg.usize("k")?).unwrap_or(4);
    let c = check_threshold(require(args.c.or(cfg.f64("c")?), "c")?)?;
    let theta_draws = args.m_theta.or(cfg.usize("m_theta")?).unwrap_or(200);
    let mh = args.mh || cfg.boolean("mh")?.unwrap_or(false);
    let mh_step = args.mh_step.or(cfg.f64("mh_step")?);
    let mh_burn = args.mh_burn.or(cfg.usize("mh_burn")?);
    let n_atoms = args.n_atoms.or(cfg.usize("n_atoms")?).unwrap_or(2000);
    let (alpha, q, mass_config) = resolve_mass(
        MassFlags {
            alpha: args.alpha,
            q: args.q,
            alpha_lo: args.alpha_lo,
            alpha_hi: args.alpha_hi,
            cal_replicates: args.cal_replicates,
            cal_tolerance: args.cal_tolerance,
        },
        &mut cfg,
        1e-2,
        shared.replicates,
    )?;
    cfg.finish()?;

    let family = match family_name.as_str() {
        "exp" => Family::Exponential,
        other => return Err(usage(format!("unknown family {other:?}; expected \"exp\""))),
    };
    if !mh && (mh_step.is_some() || mh_burn.is_some()) {
        return Err(usage("--mh-step and --mh-burn require --mh"));
    }
    let sampler = if mh {
        ThetaSampler::RandomWalk { step: mh_step, burn_in: mh_burn.unwrap_or(500) }
    } else {
        ThetaSampler::Conjugate
    };

    let observations = data::load_column(&data_path, header)?;
    let prior = parse_measure(&prior_spec)?;
    let settings = CompositeSettings {
        test: TestSettings { c, q, alpha, n_atoms, replicates: shared.replicates },
        bin_count,
        theta_draws,
        sampler,
    };

    let stream = RngStream::root(shared.seed);
    let pool = build_pool(shared.workers)?;
    let report =
        pool.install(|| gof_composite(&observations, family, &prior, &settings, &stream))?;

    let mut config = json!({
        "command": "gof-composite",
        "data": data_path.display().to_string(),
        "header": header,
        "family": family_name,
        "prior": prior_spec,
        "k": bin_count,
        "c": c,
        "m_theta": theta_draws,
        "mh": mh,
        "mh_step": mh_step,
        "mh_burn": if mh { json!(mh_burn.unwrap_or(500)) } else { Value::Null },
        "n_atoms": n_atoms,
        "replicates": shared.replicates,
        "seed": shared.seed,
    });
    merge(&mut config, mass_config);
    write_json(shared.out.as_ref(), &envelope(config, to_value(&report)?))
}

fn cmd_indep(args: IndepArgs) -> Result<(), CliError> {
    let mut cfg = FileConfig::load(args.common.config.as_ref())?;
    let shared = resolve_shared(&args.common, &mut cfg, 2000)?;

    let data_path = resolve_data_path(args.data, &mut cfg)?;
    let header = resolve_header(args.header, &mut cfg)?;
    let base_spec = require(args.base.or(cfg.string("base")?), "base")?;
    let c = check_threshold(require(args.c.or(cfg.f64("c")?), "c")?)?;
    let x_edges = require(edge_list(args.x_edges.as_deref(), &mut cfg, "x_edges")?, "x-edges")?;
    let y_edges = require(edge_list(args.y_edges.as_deref(), &mut cfg, "y_edges")?, "y-edges")?;
    let n_atoms = args.n_atoms.or(cfg.usize("n_atoms")?).unwrap_or(2000);
    let (alpha, q, mass_config) = resolve_mass(
        MassFlags {
            alpha: args.alpha,
            q: args.q,
            alpha_lo: args.alpha_lo,
            alpha_hi: args.alpha_hi,
            cal_replicates: args.cal_replicates,
            cal_tolerance: args.cal_tolerance,
        },
        &mut cfg,
        1.0,
        shared.replicates,
    )?;
    cfg.finish()?;

    let pairs = data::load_pairs(&data_path, header)?;
    let base = parse_bivariate(&base_spec)?;
    let grid = Grid::new(
        partition_from(x_edges.clone(), "--x-edges")?,
        partition_from(y_edges.clone(), "--y-edges")?,
    );
    let settings =
        TestSettings { c, q, alpha, n_atoms, replicates: shared.replicates };

    let stream = RngStream::root(shared.seed);
    let pool = build_pool(shared.workers)?;
    let report = pool.install(|| independence_test(&pairs, &base, &grid, &settings, &stream))?;

    let mut config = json!({
        "command": "indep",
        "data": data_path.display().to_string(),
        "header": header,
        "base": base_spec,
        "c": c,
        "x_edges": x_edges,
        "y_edges": y_edges,
        "n_atoms": n_atoms,
        "replicates": shared.replicates,
        "seed": shared.seed,
    });
    merge(&mut config, mass_config);
    write_json(shared.out.as_ref(), &envelope(config, to_value(&report)?))
}

fn cmd_dp_sample(args: DpSampleArgs) -> Result<(), CliError> {
    let mut cfg = FileConfig::load(args.common.config.as_ref())?;
    let shared = resolve_shared(&args.common, &mut cfg, 1)?;

    let alpha = require(args.alpha.or(cfg.f64("alpha")?), "alpha")?;
    let base_spec = require(args.base.or(cfg.string("base")?), "base")?;
    let n_atoms = args.n_atoms.or(cfg.usize("n_atoms")?).unwrap_or(2000);
    let repr = args.repr.or(cfg.string("repr")?).unwrap_or_else(|| "decreasing".into());
    let format = args.format.or(cfg.string("format")?).unwrap_or_else(|| "csv".into());
    cfg.finish()?;

    if repr != "finite" && repr != "decreasing" {
        return Err(usage(format!("--repr must be \"finite\" or \"decreasing\", got {repr:?}")));
    }
    if format != "csv" && format != "json" {
        return Err(usage(format!("--format must be \"csv\" or \"json\", got {format:?}")));
    }
    let base = parse_measure(&base_spec)?;
    let params = DpParams::new(alpha, base).map_err(|e| runtime(e.to_string()))?;

    let stream = RngStream::root(shared.seed);
    let mut rng = stream.rng();
    let realization = if repr == "finite" {
        bnpchi::sample_dp_finite(&params, n_atoms, &mut rng)
    } else {
        bnpchi::sample_dp_decreasing(&params, n_atoms, &mut rng)
    }
    .map_err(|e| runtime(e.to_string()))?;

    if format == "csv" {
        let mut text = String::from("atom,weight\n");
        for (a, w) in realization.atoms().iter().zip(realization.weights()) {
            text.push_str(&csv_float(*a));
            text.push(',');
            text.push_str(&csv_float(*w));
            text.push('\n');
        }
        return write_text(shared.out.as_ref(), &text);
    }

    let config = json!({
        "command": "dp-sample",
        "alpha": alpha,
        "base": base_spec,
        "n_atoms": n_atoms,
        "repr": repr,
        "format": format,
        "seed": shared.seed,
    });
    let result = json!({
        "atoms": realization.atoms(),
        "weights": realization.weights(),
    });
    write_json(shared.out.as_ref(), &envelope(config, result))
}

fn cmd_kl_moments(args: KlMomentsArgs) -> Result<(), CliError> {
    let mut cfg = FileConfig::load(args.common.config.as_ref())?;
    let shared = resolve_shared(&args.common, &mut cfg, 2000)?;

    let alpha = require(args.alpha.or(cfg.f64("alpha")?), "alpha")?;
    let n = require(args.n.or(cfg.usize("n")?), "n")?;
    let base_spec = require(args.base.or(cfg.string("base")?), "base")?;
    let f_spec = args.f.or(cfg.string("f")?).unwrap_or_else(|| base_spec.clone());
    cfg.finish()?;

    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(usage(format!("--alpha must be positive and finite, got {alpha}")));
    }
    if n < 2 {
        return Err(usage("--n must be at least 2"));
    }

    let base = parse_measure(&base_spec)?;
    let f = parse_measure(&f_spec)?;

    // Fixed atoms from the base, one interleaving partition around them;
    // the divergence reference values are the masses f gives the cells.
    let stream = RngStream::root(shared.seed);
    let mut atom_rng = stream.child(0).rng();
    let atoms: Vec<f64> = (0..n).map(|_| base.sample(&mut atom_rng)).collect();
    let partition = InterleavedPartition::new(&atoms).map_err(|e| runtime(e.to_string()))?;
    let q_forward = partition.cell_masses(&f);
    if let Some(i) = q_forward.iter().position(|&x| x <= 0.0) {
        return Err(runtime(format!(
            "reference distribution puts no mass on cell {i}; move the atoms or widen f"
        )));
    }
    let total: f64 = q_forward.iter().sum();
    let q_reverse: Vec<f64> = q_forward.iter().map(|&x| x / total).collect();

    let forward =
        bnpchi::forward_kl_moments(alpha, n, &q_forward).map_err(|e| runtime(e.to_string()))?;
    let reverse =
        bnpchi::reverse_kl_moments(alpha, n, &q_reverse).map_err(|e| runtime(e.to_string()))?;

    let order = partition.order().to_vec();
    let pool = build_pool(shared.workers)?;
    let draws: Vec<(f64, f64)> = pool.install(|| {
        map_replicates(shared.replicates, &stream.child(1), |_, rng| {
            let w = sample_dirichlet_weights(alpha, n, rng)?;
            let p_sorted: Vec<f64> = order.iter().map(|&i| w.weights[i]).collect();
            let ln_sorted: Vec<f64> = order.iter().map(|&i| w.ln_weights[i]).collect();
            let fwd = kl_forward_parts(&p_sorted, &q_forward)?;
            let rev = kl_reverse_parts(&ln_sorted, &q_reverse)?;
            Ok::<_, bnpchi::Error>((fwd, rev))
        })
    })?;
    let mc_forward = EmpiricalSample::new(draws.iter().map(|d| d.0).collect())
        .map_err(|e| runtime(e.to_string()))?;
    let mc_reverse = EmpiricalSample::new(draws.iter().map(|d| d.1).collect())
        .map_err(|e| runtime(e.to_string()))?;

    let config = json!({
        "command": "kl-moments",
        "alpha": alpha,
        "n": n,
        "base": base_spec,
        "f": f_spec,
        "replicates": shared.replicates,
        "seed": shared.seed,
    });
    let mc = |s: &EmpiricalSample<f64>| {
        json!({
            "mean": s.mean(),
            "variance": s.variance(),
            "stderr_mean": (s.variance() / s.len() as f64).sqrt(),
        })
    };
    let result = json!({
        "atoms": atoms,
        "forward": { "mean": forward.mean, "variance": forward.variance },
        "reverse": { "mean": reverse.mean, "variance": reverse.variance },
        "monte_carlo": {
            "replicates": shared.replicates,
            "forward": mc(&mc_forward),
            "reverse": mc(&mc_reverse),
        },
    });
    write_json(shared.out.as_ref(), &envelope(config, result))
}

fn cmd_asymptotics(args: AsymptoticsArgs) -> Result<(), CliError> {
    let mut cfg = FileConfig::load(args.common.config.as_ref())?;
    let shared = resolve_shared(&args.common, &mut cfg, 2000)?;

    let m = args.m.or(cfg.usize("m")?).unwrap_or(0);
    let alpha = require(args.alpha.or(cfg.f64("alpha")?), "alpha")?;
    let edges = require(edge_list(args.edges.as_deref(), &mut cfg, "edges")?, "edges")?;
    let base_spec = require(args.base.or(cfg.string("base")?), "base")?;
    let f_spec = args.f.or(cfg.string("f")?).unwrap_or_else(|| base_spec.clone());
    let repr_name = args.repr.or(cfg.string("repr")?).unwrap_or_else(|| "exact".into());
    let n_atoms = args.n_atoms.or(cfg.usize("n_atoms")?).unwrap_or(2000);
    cfg.finish()?;

    let repr = match repr_name.as_str() {
        "exact" => Representation::ExactLaw,
        "decreasing" => Representation::Atoms,
        other => {
            return Err(usage(format!(
                "--repr must be \"exact\" or \"decreasing\", got {other:?}"
            )))
        }
    };
    let base = parse_measure(&base_spec)?;
    let f = parse_measure(&f_spec)?;
    let bins = partition_from(edges, "--edges")?;
    let params = DpParams::new(alpha, base).map_err(|e| runtime(e.to_string()))?;

    let stream = RngStream::root(shared.seed);
    let mut data_rng = stream.child(0).rng();
    let observations: Vec<f64> = (0..m).map(|_| f.sample(&mut data_rng)).collect();

    let pool = build_pool(shared.workers)?;
    let law = pool.install(|| {
        posterior_self_distance_draws(
            &params,
            &observations,
            &bins,
            repr,
            n_atoms,
            shared.replicates,
            &stream.child(1),
        )
    })?;

    let dof = (bins.bin_count() - 1) as f64;
    let total = law.distances.len();
    let mut text = String::from("draw,chisq_ref_quantile\n");
    for (i, d) in law.distances.sorted().iter().enumerate() {
        let p = (i as f64 + 0.5) / total as f64;
        text.push_str(&csv_float(*d));
        text.push(',');
        text.push_str(&csv_float(chi_squared_quantile(dof, p)));
        text.push('\n');
    }
    write_text(shared.out.as_ref(), &text)
}

fn cmd_table1(args: Table1Args) -> Result<(), CliError> {
    let mut cfg = FileConfig::load(args.common.config.as_ref())?;
    let shared = resolve_shared(&args.common, &mut cfg, 2000)?;

    let alphas = match args.alphas.as_deref() {
        Some(s) => Some(parse_number_list(s).map_err(|e| usage(format!("--alphas: {e}")))?),
        None => cfg.number_list("alphas")?,
    };
    let alphas = require(alphas, "alphas")?;
    let c_values = match args.c_values.as_deref() {
        Some(s) => Some(parse_number_list(s).map_err(|e| usage(format!("--c-values: {e}")))?),
        None => cfg.number_list("c_values")?,
    };
    let c_values = require(c_values, "c-values")?;
    let edges = require(edge_list(args.edges.as_deref(), &mut cfg, "edges")?, "edges")?;
    let base_spec = require(args.base.or(cfg.string("base")?), "base")?;
    let n_atoms = args.n_atoms.or(cfg.usize("n_atoms")?).unwrap_or(2000);
    let format = args.format.or(cfg.string("format")?).unwrap_or_else(|| "csv".into());
    cfg.finish()?;

    if format != "csv" && format != "json" {
        return Err(usage(format!("--format must be \"csv\" or \"json\", got {format:?}")));
    }
    if let Some(a) = alphas.iter().find(|&&a| !(a.is_finite() && a > 0.0)) {
        return Err(usage(format!("--alphas entries must be positive, got {a}")));
    }
    let base = parse_measure(&base_spec)?;
    let bins = partition_from(edges.clone(), "--edges")?;

    let stream = RngStream::root(shared.seed);
    let pool = build_pool(shared.workers)?;
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for (i, &alpha) in alphas.iter().enumerate() {
        let params = DpParams::new(alpha, base.clone()).map_err(|e| runtime(e.to_string()))?;
        let law = pool.install(|| {
            prior_distance_draws(
                &params,
                &bins,
                n_atoms,
                shared.replicates,
                &stream.child(i as u64),
            )
        })?;
        for &c in &c_values {
            rows.push((alpha, c, law.distances.probability_le(c)));
        }
    }

    if format == "csv" {
        let mut text = String::from("alpha,c,probability\n");
        for (alpha, c, p) in &rows {
            text.push_str(&format!("{},{},{}\n", csv_float(*alpha), csv_float(*c), csv_float(*p)));
        }
        return write_text(shared.out.as_ref(), &text);
    }

    let config = json!({
        "command": "table1",
        "alphas": alphas,
        "c_values": c_values,
        "edges": edges,
        "base": base_spec,
        "n_atoms": n_atoms,
        "format": format,
        "replicates": shared.replicates,
        "seed": shared.seed,
    });
    let result = json!({
        "rows": rows
            .iter()
            .map(|(a, c, p)| json!({ "alpha": a, "c": c, "probability": p }))
            .collect::<Vec<_>>(),
    });
    write_json(shared.out.as_ref(), &envelope(config, result))
}
