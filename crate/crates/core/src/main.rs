use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use num_bigint::BigInt;

use polyopt::count::CountOps;
use polyopt::driver::{
    optimize, parse_groups, scatter_experiment, shift_search, write_csv, BracketedExpression, HornerSource, Level,
    OptimizerSettings, Overrides, ScatterSpec,
};
use polyopt::error::Error;
use polyopt::eval::{equivalent, MERSENNE_31};
use polyopt::frontend::{emit, emit_comment, emit_debug_substitutions, parse_file, Dialect, EmitSettings, TempNaming};
use polyopt::horner::{fixed_scheme, Direction};
use polyopt::poly::{Polynomial, VarId};
use polyopt::program::Program;
use polyopt::simplify::Method;

/// Optimizes polynomials into short straight-line code.
#[derive(Parser, Debug)]
#[command(name = "polyopt", version)]
struct Cli {
    /// Input file: a `symbols:` line, then `name = expression;` lines.
    input: PathBuf,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Optimization level 0-3.
    #[arg(short = 'O', value_parser = clap::value_parser!(u8).range(0..=3), default_value_t = 1)]
    level: u8,
    #[arg(long, value_enum)]
    horner: Option<HornerSource>,
    #[arg(long, value_enum)]
    direction: Option<Direction>,
    #[arg(long)]
    mcts_constant: Option<f64>,
    #[arg(long)]
    mcts_num_expand: Option<usize>,
    #[arg(long)]
    mcts_num_keep: Option<usize>,
    #[arg(long)]
    mcts_num_repeat: Option<usize>,
    /// Seconds.
    #[arg(long)]
    mcts_time_limit: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    #[arg(long)]
    greedy_max_perc: Option<f64>,
    #[arg(long)]
    greedy_min_num: Option<usize>,
    /// Seconds.
    #[arg(long)]
    greedy_time_limit: Option<f64>,
    /// Seconds, split evenly between the search and the greedy pass.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Print operation counts to standard error.
    #[arg(long)]
    stats: bool,
    /// Fixed Horner order, comma separated, outermost first.
    #[arg(long)]
    scheme: Option<String>,
    /// Write the chosen Horner order as a comment.
    #[arg(long)]
    print_scheme: bool,
    /// Print the instructions as reverse substitutions to standard error.
    #[arg(long)]
    debug: bool,
    /// Random seed; falls back to POLYOPT_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Dialect::Plain)]
    dialect: Dialect,
    /// Store temporaries in an array of this name instead of scalars.
    #[arg(long)]
    temp_name: Option<String>,
    /// Maximum Fortran line length.
    #[arg(long, default_value_t = 72)]
    line_width: usize,
    /// Bracket outputs in these variables (comma separated) and optimize the
    /// bracket contents together.
    #[arg(long)]
    bracket: Option<String>,
    /// Look for variable shifts within groups, e.g. `x,y;z,w`.
    #[arg(long)]
    shift_groups: Option<String>,
    /// Run `lo:hi:log|lin:N` exploration constants and write CSV instead of code.
    #[arg(long)]
    scatter: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("polyopt: {}", e);
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 1,
        Error::Internal(_) | Error::UndefinedTemp(_) | Error::Cycle(_) | Error::MissingVariable(_) => 3,
        _ => 2,
    }
}

fn level(n: u8) -> Level {
    match n {
        0 => Level::O0,
        1 => Level::O1,
        2 => Level::O2,
        _ => Level::O3,
    }
}

fn seed(cli: &Cli) -> Result<u64, Error> {
    if let Some(s) = cli.seed {
        return Ok(s);
    }
    match std::env::var("POLYOPT_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| Error::InvalidSetting(format!("POLYOPT_SEED `{}` is not a number", v))),
        Err(_) => Ok(0),
    }
}

/// One optimized output before emission: name, polynomial, denominator.
struct Job {
    name: String,
    poly: Polynomial,
    denominator: BigInt,
}

fn run(cli: &Cli) -> Result<(), Error> {
    let text = fs::read_to_string(&cli.input)?;
    let input = parse_file(&text)?;
    let symbols = &input.symbols;
    if input.outputs.is_empty() {
        return Err(Error::EmptyInput);
    }

    let mut jobs: Vec<Job> = Vec::new();
    let mut reassembly = Vec::new();
    match &cli.bracket {
        Some(spec) => {
            let vars: Vec<VarId> = spec
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| symbols.id(s).ok_or_else(|| Error::UnknownSymbol(s.to_string())))
                .collect::<Result<_, _>>()?;
            for out in &input.outputs {
                let b = BracketedExpression::new(&out.numerator, &vars);
                let mut parts = Vec::new();
                for (key, content) in &b.entries {
                    let name = format!("{}_{}", out.name, BracketedExpression::key_label(key, symbols));
                    let key_text = Polynomial::monomial(1, key.clone()).display(symbols).to_string();
                    parts.push(format!("{}*{}", key_text, name));
                    jobs.push(Job { name, poly: content.clone(), denominator: out.denominator.clone() });
                }
                reassembly.push(format!("{} = {}", out.name, if parts.is_empty() { "0".into() } else { parts.join(" + ") }));
            }
        }
        None => {
            for out in &input.outputs {
                jobs.push(Job { name: out.name.clone(), poly: out.numerator.clone(), denominator: out.denominator.clone() });
            }
        }
    }
    let original: Vec<Polynomial> = jobs.iter().map(|j| j.poly.clone()).collect();

    let shifted = match &cli.shift_groups {
        Some(spec) => Some(shift_search(&original, &parse_groups(spec, symbols)?)?),
        None => None,
    };
    let polys: Vec<Polynomial> = shifted.as_ref().map(|s| s.polys.clone()).unwrap_or_else(|| original.clone());

    let overrides = Overrides {
        horner: cli.horner,
        direction: cli.direction,
        mcts_constant: cli.mcts_constant,
        mcts_num_expand: cli.mcts_num_expand,
        mcts_num_keep: cli.mcts_num_keep,
        mcts_num_repeat: cli.mcts_num_repeat,
        mcts_time_limit: cli.mcts_time_limit,
        method: cli.method,
        greedy_max_perc: cli.greedy_max_perc,
        greedy_min_num: cli.greedy_min_num,
        greedy_time_limit: cli.greedy_time_limit,
        time_limit: cli.time_limit,
        stats: Some(cli.stats),
        scheme: match &cli.scheme {
            Some(list) => Some(fixed_scheme(&list.split(',').map(str::trim).collect::<Vec<_>>(), symbols, &polys)?),
            None => None,
        },
        print_scheme: Some(cli.print_scheme),
        debug: Some(cli.debug),
        seed: Some(seed(cli)?),
    };
    let settings = overrides.apply(&OptimizerSettings::preset(level(cli.level)));
    settings.validate()?;

    let mut sink: Box<dyn Write> = match &cli.output {
        Some(path) => Box::new(io::BufWriter::new(fs::File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    };

    if let Some(spec) = &cli.scatter {
        let spec: ScatterSpec = spec.parse()?;
        let rows = scatter_experiment(&polys, &settings, &spec, settings.seed)?;
        write_csv(&rows, &mut sink)?;
        sink.flush()?;
        return Ok(());
    }

    let result = optimize(&polys, &settings)?;
    let mut program: Program = result.program.clone();
    for (o, job) in program.outputs.iter_mut().zip(&jobs) {
        o.name = job.name.clone();
        o.denominator = job.denominator.clone();
    }
    if let Some(s) = &shifted {
        program = s.compose(&program);
    }
    if !equivalent(&original[..], &without_denominators(&program), 20, MERSENNE_31) {
        return Err(Error::Internal("optimized code does not match the input".into()));
    }

    let mut emit_settings = EmitSettings::new(cli.dialect);
    emit_settings.line_width = cli.line_width;
    if let Some(name) = &cli.temp_name {
        emit_settings.temps = TempNaming::Array(name.clone());
    }
    emit_settings.validate()?;

    if settings.stats {
        eprintln!("*** STATS: original  {}", result.before);
        if let Some(s) = &shifted {
            eprintln!("*** STATS: shifts    {} rule(s), {}", s.rules.len(), s.unshift.count_ops());
        }
        eprintln!("*** STATS: optimized {}", program.count_ops());
        if result.timed_out {
            eprintln!("*** time limit reached, best result so far");
        }
    }
    if settings.debug {
        eprint!("{}", emit_debug_substitutions(&program, symbols));
    }
    if let Some(s) = &shifted {
        for rule in &s.rules {
            write!(sink, "{}", emit_comment(&format!("shift {}", rule.display(symbols)), &emit_settings))?;
        }
    }
    if settings.print_scheme {
        if let Some(order) = &result.order {
            write!(sink, "{}", emit_comment(&format!("Horner scheme: {}", order.display(symbols)), &emit_settings))?;
        }
    }
    write!(sink, "{}", emit(&program, symbols, &emit_settings))?;
    for line in &reassembly {
        write!(sink, "{}", emit_comment(line, &emit_settings))?;
    }
    sink.flush()?;
    Ok(())
}

/// The program with the output divisions dropped, to compare against the
/// numerators.
fn without_denominators(prog: &Program) -> Program {
    let mut p = prog.clone();
    for o in &mut p.outputs {
        o.denominator = BigInt::from(1);
    }
    p
}
