//! CSV and config files written for each run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dgroups::analysis::{self, compare_runs, Buckets, Histogram, RunSummary};
use dgroups::RunMetrics;
use serde::Serialize;

use crate::scenario::{Cell, SEED_MIX};
use crate::CliError;

pub const CDF_HEADER: &str = "bucket_upper,count,cumulative_percent";
pub const SUMMARY_HEADER: &str =
    "metric,max_group_size,seed,rounds_to_convergence,frac_below_0.6_a1,median_a1,mean_a1,frac_below_0.6_a2,total_messages";
pub const COMPARISON_HEADER: &str = "run,metric,max_group_size,seed,peers,churn,converged,rounds_to_convergence,\
frac_below_0.6_a1,median_a1,mean_a1,frac_below_0.6_a2,mean_a2,total_messages,gap_frac_below_0.6_a1,cdf_below_random";

/// Shortest round-trip decimal, always with a fractional part.
pub fn num(x: f64) -> String {
    let s = x.to_string();
    if x.is_finite() && !s.contains(['.', 'e']) {
        s + ".0"
    } else {
        s
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn cdf_csv(h: &Histogram) -> String {
    let mut s = String::from(CDF_HEADER);
    s.push('\n');
    for (j, (count, pct)) in h.counts.iter().zip(&h.cumulative_percent).enumerate() {
        let _ = writeln!(s, "{},{},{}", num(h.upper_bound(j)), count, num(*pct));
    }
    s
}

pub fn groups_csv(m: &RunMetrics) -> String {
    let mut s = String::from("group_id,size");
    for k in 0..m.slots {
        let _ = write!(s, ",slot_{k}");
    }
    s.push('\n');
    for g in &m.groups {
        let _ = write!(s, "{},{}", g.id, g.members.len());
        for v in g.vector.iter() {
            let _ = write!(s, ",{}", num(v));
        }
        s.push('\n');
    }
    s
}

pub fn summary_csv(m: &RunMetrics) -> String {
    let sum = RunSummary::of(m);
    format!(
        "{SUMMARY_HEADER}\n{},{},{},{},{},{},{},{},{}\n",
        m.scheme.name(),
        m.max_group_size,
        m.seed,
        m.rounds_to_convergence,
        num(sum.frac_below_one),
        num(sum.median_one),
        num(sum.mean_one),
        num(sum.frac_below_two),
        m.total_messages
    )
}

#[derive(Serialize)]
struct ResolvedConfig<'a> {
    run: &'a str,
    peers: usize,
    slots: usize,
    degree_min: usize,
    degree_max: usize,
    knowncount: usize,
    max_group_size: usize,
    metric: &'a str,
    churn: &'a str,
    seed: u64,
    stream: u64,
    seed_mix: &'a str,
    max_rounds: u64,
    convergence_window: u64,
    min_contribution: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fixed_bins: Option<usize>,
    generator: Generator,
}

#[derive(Serialize)]
struct Generator {
    peak_level: f64,
    base_level: f64,
    spread: f64,
    noise: f64,
}

pub fn config_toml(cell: &Cell, buckets: Buckets) -> String {
    let c = &cell.config;
    let resolved = ResolvedConfig {
        run: &cell.name,
        peers: c.peer_count,
        slots: c.slots,
        degree_min: c.degree_min,
        degree_max: c.degree_max,
        knowncount: c.knowncount,
        max_group_size: c.max_group_size,
        metric: c.scheme.name(),
        churn: c.churn.name(),
        seed: c.seed,
        stream: c.stream,
        seed_mix: SEED_MIX,
        max_rounds: c.max_rounds,
        convergence_window: c.window(),
        min_contribution: c.min_contribution,
        fixed_bins: match buckets {
            Buckets::Fixed(n) => Some(n),
            Buckets::Scott => None,
        },
        generator: Generator {
            peak_level: c.generator.peak_level,
            base_level: c.generator.base_level,
            spread: c.generator.spread,
            noise: c.generator.noise,
        },
    };
    toml::to_string(&resolved).expect("config serializes")
}

/// Writes `cdf1.csv`, `cdf2.csv`, `groups.csv`, `summary.csv` and
/// `config.toml` into `<out>/<run name>/`.
pub fn emit_run(out: &Path, cell: &Cell, metrics: &RunMetrics, buckets: Buckets) -> Result<PathBuf, CliError> {
    let dir = out.join(&cell.name);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    for alpha in [1u8, 2] {
        let h = analysis::availability_cdf(metrics, alpha, buckets)
            .map_err(|e| CliError::Analysis(cell.name.clone(), e))?;
        write(&dir.join(format!("cdf{alpha}.csv")), &cdf_csv(&h))?;
    }
    write(&dir.join("groups.csv"), &groups_csv(metrics))?;
    write(&dir.join("summary.csv"), &summary_csv(metrics))?;
    write(&dir.join("config.toml"), &config_toml(cell, buckets))?;
    Ok(dir)
}

fn paired(a: &Cell, b: &Cell) -> bool {
    let (x, y) = (&a.config, &b.config);
    x.seed == y.seed
        && x.max_group_size == y.max_group_size
        && x.peer_count == y.peer_count
        && x.churn == y.churn
        && x.knowncount == y.knowncount
}

/// One row per run. Protocol runs are compared with the random-baseline run
/// sharing their seed, size cap and population, when the sweep has one.
pub fn comparison_csv(runs: &[(Cell, RunMetrics)]) -> String {
    let mut s = String::from(COMPARISON_HEADER);
    s.push('\n');
    for (cell, m) in runs {
        let sum = RunSummary::of(m);
        let baseline = runs.iter().find(|(c, bm)| {
            bm.scheme == dgroups::Scheme::Random && m.scheme != dgroups::Scheme::Random && paired(cell, c)
        });
        let (gap, below) = match baseline.map(|(_, b)| compare_runs(m, b)) {
            Some(Ok(r)) => (num(r.delta_frac_below), r.a_dominates.to_string()),
            _ => (String::new(), String::new()),
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            cell.name,
            m.scheme.name(),
            m.max_group_size,
            m.seed,
            m.peer_count,
            cell.config.churn.name(),
            m.converged,
            m.rounds_to_convergence,
            num(sum.frac_below_one),
            num(sum.median_one),
            num(sum.mean_one),
            num(sum.frac_below_two),
            num(sum.mean_two),
            m.total_messages,
            gap,
            below
        );
    }
    s
}

pub fn emit_comparison(out: &Path, runs: &[(Cell, RunMetrics)]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let path = out.join("comparison.csv");
    write(&path, &comparison_csv(runs))?;
    Ok(path)
}
