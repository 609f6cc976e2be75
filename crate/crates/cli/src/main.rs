#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use sbrp_core::cover::{write_lp, CoverProblem};
use sbrp_core::emit::{self, EmitFormat};
use sbrp_core::formats::{load_instance, InstanceFormat};
use sbrp_core::pipeline::{
    brute_force_oracle, run, sweep, SolveParams, SolverChoice, SweepParam, DEFAULT_VIRTUAL_WALK,
};
use sbrp_core::synthetic::{generate, SyntheticConfig};
use sbrp_core::tsp::{TspMode, DEFAULT_EXACT_LIMIT};
use sbrp_core::{Instance, SbrpError};

#[derive(Parser)]
#[command(
    name = "sbrp",
    version,
    about = "School bus routing by shareability-network decomposition"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one instance and print the solution as JSON.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
        /// Extra output, as `format:path` with format text, json, geojson or svg.
        #[arg(long = "emit", value_name = "FMT:PATH")]
        emit: Vec<String>,
        /// Shareability network as an edge list (`.graphml` paths get GraphML).
        #[arg(long, value_name = "PATH")]
        dump_network: Option<PathBuf>,
        /// Enumerated bus trips, one `nodes<TAB>time<TAB>distance` line each.
        #[arg(long, value_name = "PATH")]
        dump_trips: Option<PathBuf>,
        /// The set-cover model in LP format.
        #[arg(long, value_name = "PATH")]
        dump_lp: Option<PathBuf>,
    },
    /// Solve over a grid of beta or gamma values.
    Sweep {
        instance: PathBuf,
        #[arg(long, value_parser = ["beta", "gamma"])]
        param: String,
        /// Comma-separated values, or `start:stop:step`.
        #[arg(long)]
        grid: String,
        #[command(flatten)]
        opts: SolveOpts,
        /// Print rows as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Exhaustive reference solution (at most 10 students).
    Oracle {
        instance: PathBuf,
        #[arg(long)]
        format: Option<InstanceFormat>,
        /// Use insertion routing instead of the exact path-TSP.
        #[arg(long)]
        insertion: bool,
    },
    /// Solve every instance file in a directory and print one table row each.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
    },
    /// Write a seeded synthetic instance as native JSON.
    Generate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        students: usize,
        #[arg(long, default_value_t = 60)]
        stops: usize,
        #[arg(long, default_value_t = 20)]
        capacity: u32,
        #[arg(long, default_value_t = 2400.0)]
        t_max: f64,
        /// Side of the square area in meters.
        #[arg(long, default_value_t = 10_000.0)]
        side: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args, Clone)]
struct SolveOpts {
    /// Input format; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<InstanceFormat>,
    /// Edge-compression budget factor (> 1).
    #[arg(long)]
    beta: Option<f64>,
    /// Quasi-clique tolerance in [0, 1].
    #[arg(long)]
    gamma: Option<f64>,
    /// Split stops above this many students.
    #[arg(long)]
    nmax: Option<u32>,
    /// Stop radius for door-to-door students, in instance distance units.
    #[arg(long, default_value_t = DEFAULT_VIRTUAL_WALK)]
    virtual_walk: f64,
    /// Pick up every student at home.
    #[arg(long)]
    no_compression: bool,
    /// Route small trips with the exact path-TSP.
    #[arg(long)]
    exact_tsp: bool,
    #[arg(long, default_value_t = DEFAULT_EXACT_LIMIT)]
    exact_tsp_limit: usize,
    #[arg(long, default_value_t = sbrp_core::trips::DEFAULT_TRIP_CAP)]
    trip_cap: usize,
    /// Seconds for the set-cover search; 0 means unlimited.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
    /// Relative optimality gap at which the search stops.
    #[arg(long, default_value_t = 0.0)]
    gap: f64,
    /// `internal` or `external:<command>`.
    #[arg(long, default_value = "internal")]
    solver: SolverChoice,
}

impl SolveOpts {
    fn params(&self) -> SolveParams {
        SolveParams {
            beta: self.beta,
            gamma: self.gamma,
            virtual_walk: self.virtual_walk,
            node_compression: !self.no_compression,
            tsp: if self.exact_tsp {
                TspMode::Exact {
                    limit: self.exact_tsp_limit,
                }
            } else {
                TspMode::Insertion
            },
            split_cap: self.nmax,
            trip_cap: self.trip_cap,
            time_limit: (self.time_limit > 0.0).then(|| Duration::from_secs_f64(self.time_limit)),
            gap: self.gap,
            node_limit: None,
            solver: self.solver.clone(),
        }
    }

    fn load(&self, path: &Path) -> anyhow::Result<Instance> {
        let format = self.format.unwrap_or_else(|| InstanceFormat::from_path(path));
        load_instance(path, format).with_context(|| format!("loading {}", path.display()))
    }
}

fn parse_grid(text: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let [a, b, s] = [parts[0], parts[1], parts[2]].map(|p| p.trim().parse::<f64>());
        let (a, b, s) = (a?, b?, s?);
        if !(s > 0.0) {
            bail!("grid step must be positive");
        }
        let n = ((b - a) / s + 1e-9).floor() as usize;
        // integer multiples avoid drift in the printed grid values
        return Ok((0..=n).map(|k| ((a + k as f64 * s) * 1e9).round() / 1e9).collect());
    }
    text.split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad grid value {v:?}")))
        .collect()
}

fn write_emits(items: &[String], solution: &sbrp_core::pipeline::Solution, instance: &Instance) -> anyhow::Result<()> {
    for item in items {
        let (fmt, path) = item
            .split_once(':')
            .with_context(|| format!("--emit expects FMT:PATH, got {item:?}"))?;
        let format: EmitFormat = fmt.parse().map_err(anyhow::Error::msg)?;
        emit::emit(solution, instance, format, Path::new(path)).with_context(|| format!("writing {path}"))?;
    }
    Ok(())
}

fn main_inner(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Cmd::Solve {
            instance,
            opts,
            emit,
            dump_network,
            dump_trips,
            dump_lp,
        } => {
            let inst = opts.load(&instance)?;
            let params = opts.params();
            let result = run(&inst, &params)?;
            if let Some(path) = dump_network {
                let net = result.pruned.as_ref().unwrap_or(&result.network);
                let text = if path.extension().is_some_and(|e| e == "graphml") {
                    net.to_graphml(Some(&result.pickup_coords()))
                } else {
                    net.to_edge_list()
                };
                std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(path) = dump_trips {
                std::fs::write(&path, result.trips.dump_text())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(path) = dump_lp {
                let problem = CoverProblem::from_trips(&result.trips, inst.students.len(), inst.params.fleet_limit);
                std::fs::write(&path, write_lp(&problem)).with_context(|| format!("writing {}", path.display()))?;
            }
            write_emits(&emit, &result.solution, &inst)?;
            println!("{}", result.solution.to_json());
        }
        Cmd::Sweep {
            instance,
            param,
            grid,
            opts,
            json,
        } => {
            let inst = opts.load(&instance)?;
            let param: SweepParam = param.parse().map_err(anyhow::Error::msg)?;
            let rows = sweep(&inst, &opts.params(), param, &parse_grid(&grid)?)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&rows)?);
            } else {
                println!(
                    "{:>8} {:>12} {:>5} {:>10} {:>9}  status",
                    "value", "objective", "N_B", "|T_b|", "T(s)"
                );
                for r in rows {
                    let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
                    println!(
                        "{:>8.3} {:>12} {:>5} {:>10} {:>9.2}  {}",
                        r.value,
                        opt(r.objective.map(|o| format!("{o:.2}"))),
                        opt(r.bus_count.map(|b| b.to_string())),
                        opt(r.trip_count.map(|t| t.to_string())),
                        r.seconds,
                        r.status
                    );
                }
            }
        }
        Cmd::Oracle {
            instance,
            format,
            insertion,
        } => {
            let format = format.unwrap_or_else(|| InstanceFormat::from_path(&instance));
            let inst = load_instance(&instance, format).with_context(|| format!("loading {}", instance.display()))?;
            let tsp = if insertion {
                TspMode::Insertion
            } else {
                TspMode::Exact {
                    limit: DEFAULT_EXACT_LIMIT,
                }
            };
            println!("{}", brute_force_oracle(&inst, tsp)?.to_json());
        }
        Cmd::Bench { dir, opts } => {
            let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
                .with_context(|| format!("reading {}", dir.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            files.sort();
            print!("{}", emit::table_header());
            for path in files {
                let inst = match opts.load(&path) {
                    Ok(i) => i,
                    Err(e) => {
                        eprintln!("skipping {}: {e:#}", path.display());
                        continue;
                    }
                };
                match run(&inst, &opts.params()) {
                    Ok(r) => print!("{}", emit::table_row(&r.solution, &inst)),
                    Err(e) => eprintln!("{}: {e}", path.display()),
                }
            }
        }
        Cmd::Generate {
            seed,
            students,
            stops,
            capacity,
            t_max,
            side,
            output,
        } => {
            let inst = generate(&SyntheticConfig {
                seed,
                students,
                stops,
                capacity,
                t_max,
                side,
                ..Default::default()
            });
            inst.save(&output)
                .with_context(|| format!("writing {}", output.display()))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let infeasible = matches!(
                e.downcast_ref::<SbrpError>(),
                Some(SbrpError::Infeasible { .. } | SbrpError::Unsolved(_) | SbrpError::UncoveredStudents { .. })
            );
            ExitCode::from(if infeasible { 3 } else { 1 })
        }
    }
}
