//! `hdc`: build and query hierarchical datacubes over a CSV star schema.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hdcube::cube::{format_measure, write_csv};
use hdcube::ingest::{load_star, validate, StarConfig};
use hdcube::verify::verify;
use hdcube::{
    cube_classic, cube_hierarchical, naive_query, stats, ClosedCube, CubeRelation, Error, QueryAnswer, SizeGuard,
    Warehouse,
};

#[derive(Parser)]
#[command(name = "hdc", version, about = "Hierarchical and closed datacubes over a CSV star schema")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Star-schema config file (TOML).
    #[arg(short, long)]
    config: PathBuf,
}

#[derive(Args)]
struct Output {
    /// Output CSV path; standard output if omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Classic CUBE over the fact table's own values.
    Cube {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
    },
    /// Every populated cell of the hierarchical space.
    Hcube {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
    },
    /// The closed hierarchical cube.
    Closed {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
    },
    /// Measures of one cell, answered from the closed cube.
    Query {
        #[command(flatten)]
        input: Input,
        /// Comma-separated labels, `#id`, or `*`/`ALL` per dimension.
        #[arg(short, long)]
        tuple: String,
        /// Scan the fact table instead of the closed cube.
        #[arg(long)]
        naive: bool,
    },
    /// Cell counts, byte sizes and compression ratios.
    Stats {
        #[command(flatten)]
        input: Input,
    },
    /// Brute-force self-checks on the loaded instance.
    Verify {
        #[command(flatten)]
        input: Input,
    },
    /// Load and summarize the star schema.
    Validate {
        #[command(flatten)]
        input: Input,
    },
}

enum Failure {
    Engine(Error),
    Io(PathBuf, io::Error),
    Mismatch,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

fn load(input: &Input) -> Result<Warehouse, Failure> {
    let cfg = StarConfig::from_path(&input.config)?;
    Ok(load_star(&cfg)?)
}

fn with_output(output: &Output, f: impl FnOnce(&mut dyn Write) -> Result<(), Failure>) -> Result<(), Failure> {
    let stdout_path = || PathBuf::from("<stdout>");
    match &output.output {
        Some(path) => {
            let file = File::create(path).map_err(|e| Failure::Io(path.clone(), e))?;
            let mut out = BufWriter::new(file);
            f(&mut out)?;
            out.flush().map_err(|e| Failure::Io(path.clone(), e))
        }
        None => {
            let stdout = io::stdout();
            let mut out = BufWriter::new(stdout.lock());
            f(&mut out)?;
            out.flush().map_err(|e| Failure::Io(stdout_path(), e))
        }
    }
}

fn write_relation(w: &Warehouse, rel: &CubeRelation, output: &Output) -> Result<(), Failure> {
    with_output(output, |out| Ok(write_csv(w, rel, out)?))
}

fn print(out: &mut dyn Write, text: std::fmt::Arguments) -> Result<(), Failure> {
    writeln!(out, "{text}").map_err(|e| Failure::Io(PathBuf::from("<stdout>"), e))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let guard = SizeGuard::from_env();
    let stdout = Output { output: None };
    match cli.command {
        Command::Cube { input, output } => {
            let w = load(&input)?;
            write_relation(&w, &cube_classic(&w), &output)
        }
        Command::Hcube { input, output } => {
            let w = load(&input)?;
            write_relation(&w, &cube_hierarchical(&w, guard)?, &output)
        }
        Command::Closed { input, output } => {
            let w = load(&input)?;
            write_relation(&w, &ClosedCube::build(&w).to_relation(), &output)
        }
        Command::Query { input, tuple, naive } => {
            let w = load(&input)?;
            let t = w.context().parse_tuple(&tuple)?;
            let answer = if naive {
                naive_query(&w, &t)?
            } else {
                ClosedCube::build(&w).query(&w, &t)?
            };
            let line = match answer {
                QueryAnswer::EmptyCell => "EMPTY-CELL".to_string(),
                QueryAnswer::Measures(m) => w
                    .measures()
                    .iter()
                    .zip(m)
                    .map(|(spec, v)| format!("{}={}", spec.name, format_measure(v)))
                    .collect::<Vec<_>>()
                    .join(" "),
            };
            with_output(&stdout, |out| print(out, format_args!("{line}")))
        }
        Command::Stats { input } => {
            let w = load(&input)?;
            let cc = ClosedCube::build(&w);
            let s = stats(&w, &cc, guard);
            with_output(&stdout, |out| {
                print(out, format_args!("dimensions={} measures={} facts={}", s.dimensions, s.measures, s.facts))?;
                print(out, format_args!("classic cells={} bytes={}", s.classic_cells, s.classic_bytes()))?;
                match (s.hierarchical_cells, s.hierarchical_bytes()) {
                    (Some(c), Some(b)) => print(out, format_args!("hierarchical cells={c} bytes={b}"))?,
                    _ => print(out, format_args!("hierarchical cells=refused-by-size-guard"))?,
                }
                print(out, format_args!("closed cells={} bytes={}", s.closed_cells, s.closed_bytes()))?;
                print(out, format_args!("ratio classic/closed={:.3}", s.classic_ratio()))?;
                if let Some(r) = s.hierarchical_ratio() {
                    print(out, format_args!("ratio hierarchical/closed={r:.3}"))?;
                }
                Ok(())
            })
        }
        Command::Verify { input } => {
            let w = load(&input)?;
            let report = verify(&w, guard)?;
            with_output(&stdout, |out| print(out, format_args!("{}", report.to_string().trim_end())))?;
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Mismatch)
            }
        }
        Command::Validate { input } => {
            let w = load(&input)?;
            let report = validate(&w)?;
            with_output(&stdout, |out| {
                for d in &report.dimensions {
                    let levels: Vec<String> = d.per_level.iter().map(|(n, c)| format!("{n}:{c}")).collect();
                    let used: Vec<String> = d.fact_levels.iter().map(usize::to_string).collect();
                    print(
                        out,
                        format_args!(
                            "dimension {} depth={} domain={} levels={} fact-levels={}",
                            d.name,
                            d.depth,
                            d.domain_size,
                            levels.join(","),
                            used.join(",")
                        ),
                    )?;
                }
                print(out, format_args!("facts={}", report.facts))
            })?;
            for warning in &report.warnings {
                eprintln!("warning: {}", one_line(warning));
            }
            Ok(())
        }
    }
}

fn one_line(s: &str) -> String {
    s.replace('\n', " ")
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Csv(_) | Error::SizeGuard { .. } => 3,
        _ => 1,
    }
}

fn report(failure: Failure) -> ExitCode {
    match failure {
        Failure::Engine(Error::Invalid(issues)) => {
            for i in &issues {
                let line = i.line.map_or(String::new(), |l| format!(" line={l}"));
                eprintln!(
                    "error: kind=validation source={}{line} message={}",
                    i.source,
                    one_line(&i.message)
                );
            }
            ExitCode::from(1)
        }
        Failure::Engine(e) => {
            eprintln!("error: kind={} message={}", e.kind(), one_line(&e.to_string()));
            ExitCode::from(exit_code(&e))
        }
        Failure::Io(path, e) => {
            eprintln!("error: kind=io path={} message={}", display(&path), one_line(&e.to_string()));
            ExitCode::from(3)
        }
        Failure::Mismatch => {
            eprintln!("error: kind=verify message=one or more checks failed");
            ExitCode::from(2)
        }
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(f),
    }
}
