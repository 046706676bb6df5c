use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use expcli::config::SweepConfig;
use expcli::figures;
use expcli::oracle_check;
use expcli::sweep;

#[derive(Parser)]
#[command(name = "expcli", version, about = "CoAP congestion-control experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep and write sweep.csv plus any covered figure files.
    Run {
        /// Sweep config (TOML); omit to run the full evaluation matrix.
        config: Option<PathBuf>,
        /// Worker threads; 0 runs cells serially.
        #[arg(long, default_value_t = 0)]
        parallel: usize,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run exactly the cells behind one figure and write its data file.
    Figure {
        /// Figure id, fig8 through fig19.
        id: String,
        /// Optional config for loads/seeds/parameter overrides.
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        parallel: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config without running anything.
    Validate { config: PathBuf },
    /// Replay random traces through the policy state against the
    /// straight-line reference evaluator.
    Oracle {
        #[arg(long, default_value_t = 1000)]
        traces: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print a topology as text (positions, roles, routes).
    Topology { kind: String },
}

fn load_config(path: &Option<PathBuf>) -> Result<SweepConfig> {
    match path {
        None => Ok(SweepConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            SweepConfig::parse(&text).with_context(|| format!("in {}", p.display()))
        }
    }
}

fn resolve_out(cli_out: Option<PathBuf>, cfg: &SweepConfig) -> PathBuf {
    cli_out
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn cmd_run(config: Option<PathBuf>, parallel: usize, out: Option<PathBuf>) -> Result<()> {
    let cfg = load_config(&config)?;
    let out_dir = resolve_out(out, &cfg);
    let cells = sweep::expand_cells(&cfg);
    eprintln!("running {} cells...", cells.len());
    let started = std::time::Instant::now();
    let rows = sweep::run_cells(&cfg, &cells, parallel)?;
    let errors = rows.iter().filter(|r| r.outcome.is_err()).count();
    let csv = sweep::to_csv(&rows)?;
    let path = write_file(&out_dir, "sweep.csv", &csv)?;
    println!("{} ({} cells, {} errors, {:.1?})", path.display(), rows.len(), errors, started.elapsed());
    for row in rows.iter().filter(|r| r.outcome.is_err()) {
        eprintln!(
            "error cell {} {} ldr={} load={} seed={}: {}",
            row.key.policy,
            row.key.topology,
            row.key.ldr,
            row.key.offered_kbps,
            row.key.seed,
            row.outcome.as_ref().unwrap_err()
        );
    }
    for spec in figures::FIGURES {
        let covered = rows
            .iter()
            .any(|r| r.key.topology == spec.topology && r.key.ldr == spec.ldr);
        if !covered {
            continue;
        }
        let (text, warnings) = figures::render(&spec, &rows)?;
        let path = write_file(&out_dir, &figures::filename(&spec), &text)?;
        println!("{}", path.display());
        for warning in warnings {
            eprintln!("warning: {warning}");
        }
    }
    if errors > 0 {
        bail!("{errors} cells aborted; see error rows in sweep.csv");
    }
    Ok(())
}

fn cmd_figure(id: &str, config: Option<PathBuf>, parallel: usize, out: Option<PathBuf>) -> Result<()> {
    let spec = figures::lookup(id)?;
    let mut cfg = load_config(&config)?;
    cfg.topologies = vec![spec.topology];
    cfg.ldrs = vec![spec.ldr];
    let out_dir = resolve_out(out, &cfg);
    let cells = sweep::expand_cells(&cfg);
    eprintln!("running {} cells for {}...", cells.len(), spec.id);
    let rows = sweep::run_cells(&cfg, &cells, parallel)?;
    let (text, warnings) = figures::render(&spec, &rows)?;
    let path = write_file(&out_dir, &figures::filename(&spec), &text)?;
    println!("{}", path.display());
    for warning in warnings {
        eprintln!("warning: {warning}");
    }
    Ok(())
}

fn cmd_validate(config: &Path) -> Result<()> {
    let cfg = load_config(&Some(config.to_path_buf()))?;
    println!(
        "ok: {} policies x {} topologies x {} ldrs x {} loads x {} seeds = {} cells",
        cfg.policies.len(),
        cfg.topologies.len(),
        cfg.ldrs.len(),
        cfg.loads_kbps.len(),
        cfg.seeds.len(),
        cfg.cell_count()
    );
    Ok(())
}

fn cmd_oracle(traces: usize, seed: u64) -> Result<()> {
    const TOLERANCE_S: f64 = 1e-9;
    let report = oracle_check::replay_random_traces(traces, seed, TOLERANCE_S);
    println!(
        "{} traces, {} steps, max deviation {:.3e} s",
        report.traces, report.steps, report.max_abs_err_s
    );
    if !report.passed(TOLERANCE_S) {
        bail!("{} steps deviated beyond {TOLERANCE_S} s", report.mismatches);
    }
    println!("oracle agreement within {TOLERANCE_S} s");
    Ok(())
}

fn cmd_topology(kind: &str) -> Result<()> {
    let kind: coapsim::topology::TopologyKind =
        kind.parse().map_err(|e: String| anyhow::anyhow!(e))?;
    print!("{}", coapsim::topology::Topology::build(kind).export_text());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, parallel, out } => cmd_run(config, parallel, out),
        Command::Figure { id, config, parallel, out } => cmd_figure(&id, config, parallel, out),
        Command::Validate { config } => cmd_validate(&config),
        Command::Oracle { traces, seed } => cmd_oracle(traces, seed),
        Command::Topology { kind } => cmd_topology(&kind),
    }
}
