//! Command execution.

use std::fmt::Write as _;
use std::time::Instant;

use cannings_core::coalescent::{simulate_trace, CoalescentTrace};
use cannings_core::limit::LimitSampler;
use cannings_core::profile::discretize;
use cannings_core::rng::{replicate, stream};
use cannings_core::tree::build_tree;
use cannings_core::verify::{
    appendix_a_check, check_moment_asymptotics, check_transition_law, compare_fdd,
    contour_height_discrepancy, discrepancy_table, lineage_quantiles, ComparisonReport,
    DiscrepancyRow, MomentAsymptoticsReport, Probe, QuantileCurve,
};
use cannings_core::KPointTree;
use serde::Serialize;

use crate::command::Command;
use crate::config::ExperimentConfig;
use crate::error::RunError;
use crate::manifest::{sha256_hex, ArtifactWriter, CheckOutcome, Checkpoints, Manifest};

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub manifest: Manifest,
    /// artifacts were already complete and were not recomputed
    pub reused: bool,
    /// human-readable summary for the terminal
    pub summary: String,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.manifest.check.as_ref().is_none_or(|c| c.pass)
    }
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    sha256_hex(cfg.canonical_json().as_bytes())
}

/// Validates `cfg` for `command`, then runs it on a pool of `cfg.workers`
/// threads, writing artifacts and a manifest into `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig, command: Command) -> Result<Outcome, RunError> {
    cfg.validate_for(command)?;
    let hash = config_hash(cfg);
    if let Some(manifest) = Manifest::reusable(&cfg.out, command.name(), &hash) {
        let summary = format!(
            "{}: artifacts in {} are up to date\n",
            command.name(),
            cfg.out.display()
        );
        return Ok(Outcome {
            manifest,
            reused: true,
            summary,
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()?;
    let started = Instant::now();
    let checkpoints = Checkpoints::new(&cfg.out, &hash);
    let mut writer = ArtifactWriter::new(&cfg.out)?;
    writer.write_json("config.json", cfg)?;
    let (check, mut summary) =
        pool.install(|| execute(cfg, command, &mut writer, &checkpoints))?;
    let manifest = writer.finish(command.name(), cfg.seed, &hash, check)?;
    checkpoints.clear()?;
    let _ = writeln!(
        summary,
        "{}: {} files in {} ({:.1} s)",
        command.name(),
        manifest.files.len(),
        cfg.out.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(Outcome {
        manifest,
        reused: false,
        summary,
    })
}

type Executed = (Option<CheckOutcome>, String);

fn execute(
    cfg: &ExperimentConfig,
    command: Command,
    w: &mut ArtifactWriter,
    cp: &Checkpoints,
) -> Result<Executed, RunError> {
    match command {
        Command::SimulateTree => simulate_tree(cfg, w),
        Command::Trace => trace(cfg, w),
        Command::SampleLimit => sample_limit(cfg, w),
        Command::CompareFdd => {
            let report = compare_fdd(
                &cfg.pair,
                &cfg.law,
                cfg.single_n()?,
                cfg.k,
                cfg.reps,
                cfg.seed,
                cfg.thresholds,
                cfg.rate_multiplier,
            )?;
            write_report(w, report)
        }
        Command::Moments => moments(cfg, w, cp),
        Command::TransitionCheck => {
            let report = check_transition_law(
                &cfg.law,
                cfg.q_const.unwrap_or(8),
                cfg.h_star.unwrap_or(5),
                cfg.k as u64,
                cfg.reps,
                cfg.seed,
                cfg.thresholds,
            )?;
            write_report(w, report)
        }
        Command::Cdfi => quantiles(cfg, w, cp, Probe::Cdfi),
        Command::Counterexample => quantiles(cfg, w, cp, Probe::X1),
        Command::AppendixA => {
            let report = appendix_a_check(
                &cfg.law,
                cfg.single_n()?,
                cfg.k as u64,
                cfg.reps,
                cfg.seed,
                cfg.thresholds,
            )?;
            write_report(w, report)
        }
        Command::Discrepancy => discrepancy(cfg, w, cp),
    }
}

fn write_report(w: &mut ArtifactWriter, report: ComparisonReport) -> Result<Executed, RunError> {
    let table = report.table();
    w.write_json("report.json", &report)?;
    w.write("report.txt", table.as_bytes())?;
    let detail = format!(
        "{} of {} marginals within thresholds",
        report
            .marginals
            .iter()
            .filter(|m| m.passes(&report.thresholds))
            .count(),
        report.marginals.len()
    );
    Ok((
        Some(CheckOutcome {
            pass: report.pass,
            detail,
        }),
        table,
    ))
}

fn csv<I: IntoIterator<Item = String>>(header: &str, rows: I) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct TreeSummary {
    n: u64,
    vertices: usize,
    extinction: usize,
    discrepancy: f64,
}

fn simulate_tree(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<Executed, RunError> {
    let n = cfg.single_n()?;
    let profile = discretize(&cfg.profile.ell, n)?;
    let tree = build_tree(&profile, &cfg.law, &mut stream(cfg.seed, 0))?;
    let (mut buf, mut contour, mut height) = (Vec::new(), Vec::new(), Vec::new());
    tree.write_csv(&mut buf)?;
    let contour_path = tree.contour_function();
    let height_path = tree.height_function();
    contour_path.write_csv(&mut contour)?;
    height_path.write_csv(&mut height)?;
    w.write("tree.csv", &buf)?;
    w.write("contour.csv", &contour)?;
    w.write("height.csv", &height)?;
    let summary = TreeSummary {
        n,
        vertices: tree.vertex_count(),
        extinction: tree.extinction(),
        discrepancy: contour_height_discrepancy(&tree),
    };
    w.write_json("summary.json", &summary)?;
    let problems: Vec<String> = [
        contour_path.check(summary.vertices, summary.extinction),
        height_path.check(summary.vertices, summary.extinction),
    ]
    .into_iter()
    .filter_map(|r| r.err())
    .collect();
    let check = CheckOutcome {
        pass: problems.is_empty(),
        detail: if problems.is_empty() {
            "contour and height paths are well formed".into()
        } else {
            problems.join("; ")
        },
    };
    let text = format!(
        "tree with {} vertices, extinction generation {}, discrepancy {:.4}\n",
        summary.vertices, summary.extinction, summary.discrepancy
    );
    Ok((Some(check), text))
}

#[derive(Serialize)]
struct TraceSummary {
    n: u64,
    h_star: usize,
    k: u64,
    reps: usize,
    /// mean lineage count per generation `0..=h_star`
    mean: Vec<f64>,
}

fn trace(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<Executed, RunError> {
    let n = cfg.single_n()?;
    let profile = discretize(&cfg.profile.ell, n)?;
    let h_star = cfg.h_star.unwrap_or(profile.extinction() - 1);
    let k = cfg.k as u64;
    let traces: Vec<CoalescentTrace> = replicate(cfg.seed, cfg.reps, |rng| {
        simulate_trace(&profile, &cfg.law, h_star, k, rng)
    })?;
    let rows = traces.iter().enumerate().flat_map(|(r, t)| {
        (0..=h_star)
            .rev()
            .map(move |j| format!("{r},{j},{}", t.counts[j]))
    });
    w.write("traces.csv", csv("rep,j,x", rows).as_bytes())?;
    let mean: Vec<f64> = (0..=h_star)
        .map(|j| traces.iter().map(|t| t.counts[j] as f64).sum::<f64>() / traces.len() as f64)
        .collect();
    let text = format!(
        "{} traces of {k} lineages from generation {h_star}; mean X_1 = {:.3}\n",
        traces.len(),
        mean.get(1).copied().unwrap_or(1.0)
    );
    w.write_json(
        "summary.json",
        &TraceSummary {
            n,
            h_star,
            k,
            reps: cfg.reps,
            mean,
        },
    )?;
    Ok((None, text))
}

fn sample_limit(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<Executed, RunError> {
    let sampler = LimitSampler::new(&cfg.pair)?.with_rate_multiplier(cfg.rate_multiplier);
    let trees: Vec<KPointTree> =
        replicate(cfg.seed, cfg.reps, |rng| sampler.sample(cfg.k, rng))?;
    let rows = trees.iter().enumerate().flat_map(|(s, t)| {
        let branches = t.branch_heights();
        t.leaves.iter().enumerate().map(move |(i, h)| {
            let b = branches.get(i).map(|b| b.to_string()).unwrap_or_default();
            format!("{s},{i},{h},{b}")
        })
    });
    w.write(
        "samples.csv",
        csv("sample,leaf,height,branch_height", rows).as_bytes(),
    )?;
    w.write_json("samples.json", &trees)?;
    let text = format!("{} limit subtrees with k = {}\n", trees.len(), cfg.k);
    Ok((None, text))
}

fn moments(
    cfg: &ExperimentConfig,
    w: &mut ArtifactWriter,
    cp: &Checkpoints,
) -> Result<Executed, RunError> {
    let population = cfg.population();
    let mut rows = Vec::new();
    for n in cfg.grid()? {
        let part: MomentAsymptoticsReport = cp.get_or_run(&format!("n_{n}"), || {
            check_moment_asymptotics(&cfg.law, &population, &[n], cfg.reps, cfg.seed, cfg.thresholds)
                .map_err(RunError::from)
        })?;
        rows.extend(part.rows);
    }
    let pass = rows
        .iter()
        .all(|r| r.distinct3_z.abs() < cfg.thresholds.se_mult && r.cross_residual >= 0.0);
    let report = MomentAsymptoticsReport {
        law: cfg.law,
        seed: cfg.seed,
        reps: cfg.reps,
        rows,
        pass,
    };
    w.write_json("moments.json", &report)?;
    let header = "n,generation,q_s,q_s1,n_collision,sigma2,distinct3_exact,distinct3_estimate,\
                  distinct3_se,distinct3_z,cross_residual,third_over_n,third_log_ratio,tail_l2,merge_ratio";
    let lines = report.rows.iter().map(|r| {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.generation,
            r.q_s,
            r.q_s1,
            r.n_collision,
            r.sigma2,
            r.distinct3_exact,
            r.distinct3_estimate,
            r.distinct3_se,
            r.distinct3_z,
            r.cross_residual,
            r.third_over_n,
            r.predicates.third_log_ratio,
            r.predicates.tail_l2,
            r.predicates.merge_ratio
        )
    });
    w.write("moments.csv", csv(header, lines).as_bytes())?;
    let mut text = format!(
        "{:>8} {:>12} {:>14} {:>12} {:>8} {:>14}\n",
        "n", "sigma2", "distinct3", "se", "z", "cross_resid"
    );
    for r in &report.rows {
        let _ = writeln!(
            text,
            "{:>8} {:>12.6} {:>14.6} {:>12.6} {:>8.3} {:>14.6e}",
            r.n, r.sigma2, r.distinct3_estimate, r.distinct3_se, r.distinct3_z, r.cross_residual
        );
    }
    let detail = format!(
        "every |z| < {} and every cross-moment residual >= 0",
        cfg.thresholds.se_mult
    );
    Ok((Some(CheckOutcome { pass, detail }), text))
}

fn quantiles(
    cfg: &ExperimentConfig,
    w: &mut ArtifactWriter,
    cp: &Checkpoints,
    probe: Probe,
) -> Result<Executed, RunError> {
    let population = cfg.population();
    let quantile = cfg.quantile.unwrap_or(match probe {
        Probe::Cdfi => 0.95,
        Probe::X1 => 0.5,
    });
    let mut points = Vec::new();
    for n in cfg.grid()? {
        let part: QuantileCurve = cp.get_or_run(&format!("n_{n}"), || {
            lineage_quantiles(&cfg.law, &population, &[n], probe, quantile, cfg.reps, cfg.seed)
                .map_err(RunError::from)
        })?;
        points.extend(part.points);
    }
    let curve = QuantileCurve {
        probe,
        quantile,
        seed: cfg.seed,
        points,
    };
    w.write_json("quantiles.json", &curve)?;
    let lines = curve.points.iter().map(|p| {
        format!(
            "{},{},{},{},{}",
            p.n, p.estimate, p.ci_low, p.ci_high, p.samples
        )
    });
    w.write(
        "quantiles.csv",
        csv("n,estimate,ci_low,ci_high,samples", lines).as_bytes(),
    )?;
    let check = match probe {
        Probe::Cdfi => {
            let max = curve.max_estimate();
            CheckOutcome {
                pass: max <= cfg.thresholds.cdfi_quantile_max,
                detail: format!(
                    "largest {quantile} quantile {max} against bound {}",
                    cfg.thresholds.cdfi_quantile_max
                ),
            }
        }
        Probe::X1 => CheckOutcome {
            pass: curve.points.len() >= 2 && curve.strictly_increasing(),
            detail: format!("{quantile} quantile strictly increasing across the grid"),
        },
    };
    let mut text = format!("{:>8} {:>10} {:>18}\n", "n", "quantile", "95% bootstrap CI");
    for p in &curve.points {
        let _ = writeln!(
            text,
            "{:>8} {:>10} {:>18}",
            p.n,
            p.estimate,
            format!("[{}, {}]", p.ci_low, p.ci_high)
        );
    }
    Ok((Some(check), text))
}

fn discrepancy(
    cfg: &ExperimentConfig,
    w: &mut ArtifactWriter,
    cp: &Checkpoints,
) -> Result<Executed, RunError> {
    let population = cfg.population();
    let mut rows: Vec<DiscrepancyRow> = Vec::new();
    for n in cfg.grid()? {
        let part: Vec<DiscrepancyRow> = cp.get_or_run(&format!("n_{n}"), || {
            discrepancy_table(&cfg.law, &population, &[n], cfg.reps, cfg.seed)
                .map_err(RunError::from)
        })?;
        rows.extend(part);
    }
    w.write_json("discrepancy.json", &rows)?;
    let lines = rows.iter().flat_map(|r| {
        r.values
            .iter()
            .enumerate()
            .map(move |(i, v)| format!("{},{i},{v}", r.n))
    });
    w.write("discrepancy.csv", csv("n,tree,value", lines).as_bytes())?;
    let (first, last) = (rows[0].median, rows[rows.len() - 1].median);
    let check = CheckOutcome {
        pass: rows.len() < 2 || last < first,
        detail: format!("median discrepancy {first} at the smallest n, {last} at the largest"),
    };
    let mut text = format!("{:>8} {:>12}\n", "n", "median");
    for r in &rows {
        let _ = writeln!(text, "{:>8} {:>12.6}", r.n, r.median);
    }
    Ok((Some(check), text))
}
