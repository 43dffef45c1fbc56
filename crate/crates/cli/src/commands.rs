use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::json;
use tgdp_core::audit::{
    empirical_mse, exact_statistic_audit, monte_carlo_view_audit, rtgdp_curve, McAuditConfig, Mechanism, MseConfig,
    MseInputs,
};
use tgdp_core::bounds::{
    gap_report, greedy_dominating_set, maximal_packing, rounded_robust_packing, validate_robust_packing,
    exact_min_dominating_set, GapOptions, PackingOrder, DEFAULT_DOMSET_CAP, DEFAULT_PACKING_CAP,
};
use tgdp_core::graph::{parse_edge_list, DatasetRecord};
use tgdp_core::lp::robust_dual_multipliers;
use tgdp_core::protocol::ProtocolKind;
use tgdp_core::rng::substream;
use tgdp_core::{
    make_threshold, solve_cover, solve_robust_cover, EdgeFormat, FractionalCover, NoiseMode, ThresholdVector,
    TrustGraph,
};

use crate::config::{self, pick, FileConfig};
use crate::error::CliError;
use crate::{AuditArgs, BoundsArgs, IngestArgs, InputFormat, LpArgs, OutputFormat, ProtocolArg, ReportArgs, SimulateArgs, Table, ThresholdArgs};

pub const DEFAULT_MC_TRIALS: usize = 1_000_000;
pub const TGDP_DATA_DIR: &str = "TGDP_DATA_DIR";

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Graph JSON, or a SNAP edge list when the file does not start with `{`.
pub fn load_graph(path: &Path) -> Result<TrustGraph, CliError> {
    let text = read_text(path)?;
    let parsed = if text.trim_start().starts_with('{') {
        TrustGraph::from_json_str(&text)
    } else {
        tgdp_core::graph::parse_edge_str(&text, EdgeFormat::Snap)
    };
    parsed.map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn graph_arg(flag: &Option<PathBuf>, file: &FileConfig) -> Result<TrustGraph, CliError> {
    let path = pick(flag.clone(), &file.graph).ok_or_else(|| CliError::Usage("--graph is required".into()))?;
    load_graph(&path)
}

fn seed_arg(flag: Option<u64>, file: &FileConfig) -> Result<u64, CliError> {
    pick(flag, &file.seed).ok_or_else(|| CliError::Usage("--seed is required for randomized commands".into()))
}

fn json_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn thresholds(g: &TrustGraph, args: &ThresholdArgs, file: &FileConfig) -> Result<Option<ThresholdVector>, CliError> {
    if let Some(path) = pick(args.t_file.clone(), &file.t_file) {
        let t: ThresholdVector = json_file(&path)?;
        t.check_len(g)?;
        return Ok(Some(t));
    }
    match pick(args.alpha, &file.alpha) {
        Some(alpha) => Ok(Some(make_threshold(g, alpha).map_err(|e| CliError::Usage(e.to_string()))?)),
        None => Ok(None),
    }
}

fn solve_for(g: &TrustGraph, t: Option<&ThresholdVector>) -> Result<FractionalCover, CliError> {
    Ok(match t {
        Some(t) if !t.is_zero() => solve_robust_cover(g, t)?,
        Some(t) => FractionalCover {
            robust_t: Some(t.clone()),
            ..solve_cover(g)?
        },
        None => solve_cover(g)?,
    })
}

fn load_cover(path: &Path, g: &TrustGraph) -> Result<FractionalCover, CliError> {
    let cover = FractionalCover::from_json_str(&read_text(path)?)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    if cover.len() != g.n() {
        return Err(CliError::Parse(format!(
            "{}: cover has {} weights, graph has {} vertices",
            path.display(),
            cover.len(),
            g.n()
        )));
    }
    Ok(cover)
}

/// Writes to `out`, or stdout when absent.
fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Parse(format!("stdout: {e}")))
        }
    }
}

fn pretty(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("reports are always serializable") + "\n"
}

pub fn ingest(a: &IngestArgs) -> Result<(), CliError> {
    let file = File::open(&a.edges).map_err(|e| CliError::io(&a.edges, e))?;
    let format = match a.format {
        InputFormat::Snap => EdgeFormat::Snap,
        InputFormat::SignedCsv => EdgeFormat::SignedCsv,
    };
    let g = parse_edge_list(BufReader::new(file), format)
        .map_err(|e| CliError::Parse(format!("{}: {e}", a.edges.display())))?;
    if let Some(out) = &a.out {
        std::fs::write(out, g.to_json_string()).map_err(|e| CliError::io(out, e))?;
    }
    println!("n={} edges={} maxdeg={}", g.n(), g.edge_count(), g.max_degree());
    Ok(())
}

pub fn lp(a: &LpArgs, file: &FileConfig) -> Result<(), CliError> {
    let g = graph_arg(&a.graph, file)?;
    let t = thresholds(&g, &a.thresholds, file)?;
    let cover = solve_for(&g, t.as_ref())?;
    if let Some(out) = pick(a.out.clone(), &file.out) {
        std::fs::write(&out, cover.to_json_string()).map_err(|e| CliError::io(&out, e))?;
    }
    let mut line = format!("OPT={:.2} ratio={:.3}", cover.objective, cover.objective / g.n().max(1) as f64);
    if let Some(exact) = &cover.exact_objective {
        line += &format!(" exact={exact}");
    }
    println!("{line}");
    Ok(())
}

fn mse_inputs(path: &Path, kind: ProtocolArg) -> Result<MseInputs, CliError> {
    Ok(match kind {
        ProtocolArg::Domset | ProtocolArg::Lp | ProtocolArg::Robust => MseInputs::Int(json_file(path)?),
        ProtocolArg::Real => MseInputs::Real(json_file(path)?),
        ProtocolArg::Vecsum => MseInputs::Vector(json_file(path)?),
    })
}

pub fn simulate(a: &SimulateArgs, file: &FileConfig, jobs: usize) -> Result<(), CliError> {
    let g = graph_arg(&a.graph, file)?;
    let trials = pick(a.trials, &file.trials).unwrap_or(config::DEFAULT_TRIALS);
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let seed = seed_arg(a.seed, file)?;
    let eps = pick(a.eps, &file.eps).unwrap_or(config::DEFAULT_EPS);
    let delta = pick(a.delta, &file.delta).unwrap_or(config::DEFAULT_DELTA);
    let t = thresholds(&g, &a.thresholds, file)?;
    let cover = |t: Option<&ThresholdVector>| match &a.cover {
        Some(path) => load_cover(path, &g),
        None => solve_for(&g, t),
    };
    let mech = match a.protocol {
        ProtocolArg::Domset => Mechanism::Domset {
            set: greedy_dominating_set(&g).vertices,
            eps,
            delta_sens: delta,
        },
        ProtocolArg::Lp => Mechanism::Lp {
            cover: cover(None)?,
            eps,
            delta_sens: delta,
        },
        ProtocolArg::Robust => {
            let t = t.ok_or_else(|| CliError::Usage("the robust protocol needs --alpha or --t-file".into()))?;
            let mut c = cover(Some(&t))?;
            c.robust_t.get_or_insert(t);
            Mechanism::Robust {
                cover: c,
                eps,
                delta_sens: delta,
            }
        }
        ProtocolArg::Vecsum => Mechanism::Vecsum {
            set: greedy_dominating_set(&g).vertices,
            rho: pick(a.rho, &file.rho).unwrap_or(config::DEFAULT_RHO),
            delta: delta as f64,
            dim: a.dim,
        },
        ProtocolArg::Real => Mechanism::Real {
            cover: cover(None)?,
            eps,
            grid: delta,
        },
    };
    let cfg = MseConfig {
        trials,
        seed,
        jobs,
        noise: if a.noise_disabled { NoiseMode::Disabled } else { NoiseMode::Enabled },
        inputs: a.inputs.as_deref().map(|p| mse_inputs(p, a.protocol)).transpose()?,
        keep_records: true,
    };
    let report = empirical_mse(&g, &mech, &cfg)?;
    let out = pick(a.out.clone(), &file.out);
    emit(out.as_deref(), &report.records_csv())?;
    if let Some(path) = &a.summary {
        let summary = tgdp_core::audit::MseReport {
            records: Vec::new(),
            ..report.clone()
        };
        std::fs::write(path, pretty(&summary)).map_err(|e| CliError::io(path, e))?;
    }
    let line = format!(
        "trials={} mse={:.4} se={:.4} predicted={:.4} bound={:.4} ratio={:.4} local_ratio={:.4}",
        report.trials,
        report.mse,
        report.mse_se,
        report.predicted_variance,
        report.error_bound,
        report.error_ratio,
        report.empirical_ratio
    );
    if a.noise_disabled {
        eprintln!("{}", tgdp_core::protocol::NOISE_DISABLED_LABEL);
    }
    if out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(())
}

pub fn bounds(a: &BoundsArgs, file: &FileConfig) -> Result<(), CliError> {
    let g = graph_arg(&a.graph, file)?;
    let cap = |flag: Option<usize>, conf: &Option<usize>, default: usize| {
        if a.force {
            usize::MAX
        } else {
            pick(flag, conf).unwrap_or(default)
        }
    };
    let t = match pick(a.t_file.clone(), &file.t_file) {
        Some(path) => {
            let t: ThresholdVector = json_file(&path)?;
            t.check_len(&g)?;
            Some(t)
        }
        None => None,
    };
    let opts = GapOptions {
        exact: a.exact,
        packing_cap: cap(a.packing_cap, &file.packing_cap, DEFAULT_PACKING_CAP),
        domset_cap: cap(a.domset_cap, &file.domset_cap, DEFAULT_DOMSET_CAP),
        order: PackingOrder::AscendingDegree,
    };
    let report = gap_report(&g, t.as_ref(), &opts)?;
    let mut value = serde_json::to_value(&report).expect("gap report serializes");
    if a.round {
        let alpha = pick(a.alpha, &file.alpha).ok_or_else(|| CliError::Usage("--round needs --alpha".into()))?;
        let seed = seed_arg(a.seed, file)?;
        if a.reps == 0 {
            return Err(CliError::Usage("--reps must be at least 1".into()));
        }
        let base = t.clone().unwrap_or_else(|| ThresholdVector::zeros(g.n()));
        let dual = robust_dual_multipliers(&g, &base)?;
        let mut sizes = Vec::with_capacity(a.reps);
        let mut valid = true;
        for i in 0..a.reps {
            let cert = rounded_robust_packing(&g, &base, alpha, &dual, &mut substream(seed, i as u64))?;
            let thresholds = cert.thresholds.clone().expect("rounding records thresholds");
            valid &= validate_robust_packing(&g, &thresholds, &cert);
            sizes.push(cert.size() as f64);
        }
        let m = sizes.len() as f64;
        let mean = sizes.iter().sum::<f64>() / m;
        let var = sizes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
        value["rounding"] = json!({
            "alpha": alpha,
            "reps": a.reps,
            "mean_size": mean,
            "se": (var / m).sqrt(),
            "min_size": sizes.iter().cloned().fold(f64::INFINITY, f64::min),
            "max_size": sizes.iter().cloned().fold(0.0, f64::max),
            "target": alpha / 8.0 * dual.objective,
            "all_valid": valid,
        });
    }
    emit(pick(a.out.clone(), &file.out).as_deref(), &pretty(&value))
}

pub fn audit(a: &AuditArgs, file: &FileConfig) -> Result<(), CliError> {
    let g = graph_arg(&a.graph, file)?;
    let eps = pick(a.eps, &file.eps).unwrap_or(config::DEFAULT_EPS);
    let delta = pick(a.delta, &file.delta).unwrap_or(config::DEFAULT_DELTA);
    let t = thresholds(&g, &a.thresholds, file)?;
    let mut cover = match &a.cover {
        Some(path) => load_cover(path, &g)?,
        None => solve_for(&g, t.as_ref())?,
    };
    let report = if a.mc {
        if delta != 1 {
            return Err(CliError::Usage("the monte-carlo audit requires --delta 1".into()));
        }
        let robust = t.as_ref().is_some_and(|t| !t.is_zero());
        if robust && cover.robust_t.is_none() {
            cover.robust_t = t.clone();
        }
        let kind = if robust { ProtocolKind::Robust } else { ProtocolKind::Lp };
        let cfg = McAuditConfig {
            excluded: a.excluded.clone(),
            noise: if a.noise_disabled { NoiseMode::Disabled } else { NoiseMode::Enabled },
            ..McAuditConfig::new(kind, eps, pick(a.trials, &file.trials).unwrap_or(DEFAULT_MC_TRIALS), seed_arg(a.seed, file)?)
        };
        monte_carlo_view_audit(&g, &cover, a.vertex, &cfg)?
    } else {
        exact_statistic_audit(&g, &cover, eps, delta, t.as_ref())?
    };
    let format = a.format.or(match file.format.as_deref() {
        Some("csv") => Some(OutputFormat::Csv),
        _ => None,
    });
    let text = match format {
        Some(OutputFormat::Csv) => report.to_csv(),
        _ => report.to_json_string() + "\n",
    };
    emit(pick(a.out.clone(), &file.out).as_deref(), &text)?;
    let worst = report.worst_vertex.map_or("-".into(), |v| v.to_string());
    eprintln!(
        "{} worst_vertex={worst} worst_ratio={} eps={eps}",
        if report.pass { "PASS" } else { "FAIL" },
        report.worst_ratio
    );
    if report.pass {
        Ok(())
    } else {
        Err(CliError::AuditFailed)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Registry {
    List(Vec<DatasetRecord>),
    Wrapped { datasets: Vec<DatasetRecord> },
}

fn load_registry(path: &Path) -> Result<Vec<(DatasetRecord, PathBuf)>, CliError> {
    let records = match json_file::<Registry>(path)? {
        Registry::List(r) | Registry::Wrapped { datasets: r } => r,
    };
    let root = std::env::var_os(TGDP_DATA_DIR)
        .map(PathBuf::from)
        .unwrap_or_else(|| path.parent().map(Path::to_path_buf).unwrap_or_default());
    Ok(records
        .into_iter()
        .map(|r| {
            let resolved = if r.path.is_absolute() { r.path.clone() } else { root.join(&r.path) };
            (r, resolved)
        })
        .collect())
}

fn load_record(record: &DatasetRecord, path: &Path) -> Result<TrustGraph, CliError> {
    let g = if path.extension().is_some_and(|e| e == "json") {
        load_graph(path)?
    } else {
        let f = File::open(path).map_err(|e| CliError::io(path, e))?;
        parse_edge_list(BufReader::new(f), record.format)
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?
    };
    for m in record.mismatches(&g) {
        eprintln!("warning: {m}");
    }
    Ok(g)
}

/// Named graphs for a table: every registry entry, or the single `--graph`.
fn table_sources(a: &ReportArgs, file: &FileConfig) -> Result<Vec<(String, Result<TrustGraph, CliError>)>, CliError> {
    if let Some(reg) = pick(a.datasets.clone(), &file.datasets) {
        return Ok(load_registry(&reg)?
            .into_iter()
            .map(|(r, path)| {
                let g = load_record(&r, &path);
                (r.name, g)
            })
            .collect());
    }
    let path = pick(a.graph.clone(), &file.graph)
        .ok_or_else(|| CliError::Usage("report needs --datasets or --graph".into()))?;
    let name = path.file_stem().map_or("graph".into(), |s| s.to_string_lossy().into_owned());
    Ok(vec![(name, load_graph(&path))])
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Parse(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn report(a: &ReportArgs, file: &FileConfig) -> Result<(), CliError> {
    let out = pick(a.out.clone(), &file.out);
    let text = match a.table {
        Table::Tgdp => {
            let mut rows = Vec::new();
            for (name, g) in table_sources(a, file)? {
                let row = g.and_then(|g| {
                    let cover = solve_cover(&g)?;
                    let packing = maximal_packing(&g, &PackingOrder::AscendingDegree).size();
                    Ok(vec![
                        g.n().to_string(),
                        format!("{:.4}", cover.objective),
                        format!("{:.4}", cover.objective / g.n().max(1) as f64),
                        packing.to_string(),
                    ])
                });
                rows.push(row_or_blank(name, row, 4));
            }
            csv_text(&["dataset", "n", "opt_lp", "ratio", "packing"], rows)?
        }
        Table::Rtgdp => {
            let alphas = pick(a.alphas.clone(), &file.alphas).unwrap_or_else(|| config::DEFAULT_ALPHAS.to_vec());
            let eps = pick(a.eps, &file.eps).unwrap_or(config::DEFAULT_EPS);
            let path = pick(a.graph.clone(), &file.graph)
                .ok_or_else(|| CliError::Usage("--table rtgdp needs --graph".into()))?;
            let g = load_graph(&path)?;
            let curve = rtgdp_curve(&g, &alphas, eps)?;
            let rows = curve
                .iter()
                .map(|p| {
                    vec![
                        p.alpha.to_string(),
                        format!("{:.4}", p.opt_lp),
                        format!("{:.4}", p.ratio),
                        format!("{:.4}", p.mse_bound),
                    ]
                })
                .collect();
            csv_text(&["alpha", "opt_lp", "ratio", "mse_bound"], rows)?
        }
        Table::Gaps => {
            let mut rows = Vec::new();
            for (name, g) in table_sources(a, file)? {
                let row = g.and_then(|g| {
                    let cover = solve_cover(&g)?;
                    let (gamma, exact) = if a.exact {
                        let cap = if a.force { usize::MAX } else { DEFAULT_DOMSET_CAP };
                        (exact_min_dominating_set(&g, cap)?.size(), true)
                    } else {
                        (greedy_dominating_set(&g).size(), false)
                    };
                    Ok(vec![
                        g.n().to_string(),
                        format!("{:.4}", cover.objective),
                        gamma.to_string(),
                        exact.to_string(),
                        format!("{:.4}", gamma as f64 / cover.objective),
                    ])
                });
                rows.push(row_or_blank(name, row, 5));
            }
            csv_text(&["dataset", "n", "opt_lp", "gamma", "gamma_exact", "ratio"], rows)?
        }
    };
    emit(out.as_deref(), &text)
}

/// A failed row keeps its name with blank fields; the error goes to stderr.
fn row_or_blank(name: String, row: Result<Vec<String>, CliError>, width: usize) -> Vec<String> {
    match row {
        Ok(cells) => std::iter::once(name).chain(cells).collect(),
        Err(e) => {
            eprintln!("warning: {name}: {e}");
            std::iter::once(name).chain(std::iter::repeat_n(String::new(), width)).collect()
        }
    }
}
