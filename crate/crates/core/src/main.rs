// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use uil::ir::{validate, Program, Severity};
use uil::lower::LowerOptions;
use uil::opt::PromotionConfig;
use uil::pipeline::{self, Pipeline, PipelineOptions, StatsReport, STATS_VERSION};
use uil::sim::{simulate, FinalState, MemoryData, SimConfig};
use uil::text::{parse_named, print};

const DIAGNOSTICS: u8 = 1;
const SIM_ERROR: u8 = 2;

#[derive(Parser)]
#[command(
    name = "uil",
    version,
    about = "Compiler and simulator for the unified static/dynamic IL"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a pipeline and print the resulting program.
    Compile {
        input: PathBuf,
        #[command(flatten)]
        passes: PassArgs,
        /// Print the program right after this pass instead of the final one.
        #[arg(long, value_name = "after:PASS")]
        emit: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Simulate a program, optionally after a pipeline, and print its final state.
    Sim {
        input: PathBuf,
        #[command(flatten)]
        passes: PassArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Write one JSON object per cycle to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Structural statistics after a pipeline, plus cycles when simulating.
    Stats {
        input: PathBuf,
        #[command(flatten)]
        passes: PassArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Simulate even without `--data`.
        #[arg(long)]
        simulate: bool,
        #[arg(long)]
        json: bool,
    },
    /// Differential refinement check on random programs.
    Fuzz {
        #[arg(long, env = "UIL_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        count: u64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct PassArgs {
    /// Preset: B, SH, SC, SH-SC or SC-SH.
    #[arg(long, conflicts_with = "passes")]
    pipeline: Option<String>,
    /// Explicit pass list, comma separated or repeated.
    #[arg(short = 'p', long = "pass", value_delimiter = ',')]
    passes: Vec<String>,
    #[arg(long)]
    no_while_fastpath: bool,
    #[arg(long, default_value_t = PromotionConfig::default().threshold)]
    promote_threshold: u64,
    #[arg(long, default_value_t = PromotionConfig::default().max_cycles)]
    promote_max_cycles: u64,
}

#[derive(Args)]
struct RunArgs {
    /// Memory and input values as JSON.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = SimConfig::default().cycle_limit)]
    cycle_limit: u64,
}

enum Failure {
    Diagnostics(String),
    Sim(String),
}

type Outcome<T> = Result<T, Failure>;

fn diag(msg: impl ToString) -> Failure {
    Failure::Diagnostics(msg.to_string())
}

impl PassArgs {
    fn pipeline(&self, default: Option<&str>) -> Outcome<Option<Pipeline>> {
        if !self.passes.is_empty() {
            return Pipeline::custom(&self.passes).map(Some).map_err(diag);
        }
        match self.pipeline.as_deref().or(default) {
            Some(name) => Pipeline::preset(name).map(Some).map_err(diag),
            None => Ok(None),
        }
    }

    fn options(&self) -> PipelineOptions {
        PipelineOptions {
            promotion: PromotionConfig {
                threshold: self.promote_threshold,
                max_cycles: self.promote_max_cycles,
            },
            lower: LowerOptions {
                while_fastpath: !self.no_while_fastpath,
            },
        }
    }

    fn apply(
        &self,
        pipeline: &Pipeline,
        program: &Program,
        emit: Option<&str>,
    ) -> Outcome<(Program, Option<Program>)> {
        let out = pipeline::run(pipeline, program, &self.options(), emit).map_err(diag)?;
        for w in &out.warnings {
            eprintln!("{w}");
        }
        Ok((out.program, out.snapshot))
    }
}

fn load(path: &Path) -> Outcome<Program> {
    let src = fs::read_to_string(path).map_err(|e| diag(format!("{}: {e}", path.display())))?;
    let program = parse_named(&src, Some(&path.display().to_string())).map_err(diag)?;
    let diags = validate(&program);
    let mut errors = 0;
    for d in &diags {
        eprintln!("{d}");
        errors += usize::from(d.severity == Severity::Error);
    }
    if errors > 0 {
        return Err(diag(format!("{errors} error(s) in {}", path.display())));
    }
    Ok(program)
}

fn load_data(run: &RunArgs) -> Outcome<MemoryData> {
    match &run.data {
        None => Ok(MemoryData::default()),
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| diag(format!("{}: {e}", path.display())))?;
            MemoryData::from_json(&text).map_err(|e| diag(format!("{}: {e}", path.display())))
        }
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Outcome<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| diag(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(diag),
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct SimReport<'a> {
    version: u32,
    cycles: u64,
    final_state: &'a FinalState,
}

fn run(cli: Cli) -> Outcome<()> {
    match cli.command {
        Command::Compile {
            input,
            passes,
            emit,
            output,
        } => {
            let program = load(&input)?;
            let pipeline = passes.pipeline(Some("B"))?.expect("default preset");
            let after = match emit.as_deref() {
                None => None,
                Some(e) => Some(
                    e.strip_prefix("after:")
                        .ok_or_else(|| diag(format!("--emit expects after:<pass>, got `{e}`")))?,
                ),
            };
            let (out, snapshot) = passes.apply(&pipeline, &program, after)?;
            let shown = match (after, snapshot) {
                (Some(p), None) => {
                    return Err(diag(format!("pass `{p}` is not part of the pipeline")))
                }
                (_, Some(s)) => s,
                (None, None) => out,
            };
            write_out(output.as_deref(), &print(&shown))
        }
        Command::Sim {
            input,
            passes,
            run,
            trace,
            output,
        } => {
            let mut program = load(&input)?;
            if let Some(pl) = passes.pipeline(None)? {
                program = passes.apply(&pl, &program, None)?.0;
            }
            let data = load_data(&run)?;
            let config = SimConfig {
                cycle_limit: run.cycle_limit,
                record_cycles: trace.is_some(),
                ..SimConfig::default()
            };
            let t = simulate(&program, &data, &config).map_err(|e| Failure::Sim(e.to_string()))?;
            if let Some(path) = trace {
                let f = fs::File::create(&path)
                    .map_err(|e| diag(format!("{}: {e}", path.display())))?;
                t.write_jsonl(std::io::BufWriter::new(f)).map_err(diag)?;
            }
            let report = SimReport {
                version: STATS_VERSION,
                cycles: t.cycles,
                final_state: &t.final_state,
            };
            write_out(output.as_deref(), &json(&report))
        }
        Command::Stats {
            input,
            passes,
            run,
            simulate: force,
            json: as_json,
        } => {
            let program = load(&input)?;
            let pipeline = passes.pipeline(Some("B"))?.expect("default preset");
            let (out, _) = passes.apply(&pipeline, &program, None)?;
            let cycles = if force || run.data.is_some() {
                let data = load_data(&run)?;
                let config = SimConfig {
                    cycle_limit: run.cycle_limit,
                    ..SimConfig::default()
                };
                Some(
                    simulate(&out, &data, &config)
                        .map_err(|e| Failure::Sim(e.to_string()))?
                        .cycles,
                )
            } else {
                None
            };
            let s = StatsReport::new(&pipeline, &out, cycles);
            if as_json {
                return write_out(None, &json(&s));
            }
            let mut text = format!("pipeline        {} ({})\n", s.pipeline, s.passes.join(", "));
            if let Some(c) = s.cycles {
                text += &format!("cycles          {c}\n");
            }
            text += &format!(
                "groups          {}\nstatic groups   {}\nwrappers        {}\nfsm bits        {}\ncells           {} ({} datapath)\n",
                s.groups, s.static_groups, s.wrappers, s.fsm_bits, s.cells_total, s.datapath_cells
            );
            for (proto, n) in &s.cells_by_prototype {
                text += &format!("  {proto:<14}{n}\n");
            }
            write_out(None, &text)
        }
        Command::Fuzz {
            seed,
            count,
            json: as_json,
        } => {
            let r = uil::fuzz::fuzz(seed, count);
            if as_json {
                write_out(None, &json(&r))?;
            } else {
                println!(
                    "seed {} trials {} checks {} equal {} not slower {} failures {}",
                    r.seed,
                    r.trials,
                    r.checks,
                    r.equal,
                    r.not_slower,
                    r.failures.len()
                );
                for f in &r.failures {
                    eprintln!("seed {} [{}]: {}", f.seed, f.pipeline, f.reason);
                }
            }
            if r.ok() {
                Ok(())
            } else {
                Err(diag(format!("{} refinement failure(s)", r.failures.len())))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage {
                ExitCode::from(DIAGNOSTICS)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Diagnostics(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(DIAGNOSTICS)
        }
        Err(Failure::Sim(m)) => {
            eprintln!("simulation error: {m}");
            ExitCode::from(SIM_ERROR)
        }
    }
}
