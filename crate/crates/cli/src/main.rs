use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use dbnsim::automata::{
    inputs_from_bits, load_machine, validate_pda, validate_tm, InputSymbol, MachineFile, PdaFile, TmFile,
    TwoStackPda, Verdict,
};
use dbnsim::compare::{compare_run, CompareError, CompareReport};
use dbnsim::dbn_model::{validate, NetworkFile};
use dbnsim::hmm_collapse::{collapse, CollapseError};
use dbnsim::inference::{decide, Decision, Filter, Mode, TraceRecord, Weight, Wide};
use dbnsim::machine_compiler::{pda_to_dbn, tm_to_pda, StepAlignment, STATE};
use dbnsim::rational;
use dbnsim::stack_codec::BitString;
use dbnsim::Rational;
use serde::Serialize;

mod failure;

use failure::{Failure, ResultExt};

#[derive(Parser, Debug)]
#[command(name = "dbnsim", version, about = "Compile machines into dynamic Bayesian networks and filter them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compile a machine file.
    Compile {
        #[command(subcommand)]
        target: CompileTarget,
    },
    /// Check a machine or network file and list every violation.
    Validate { file: PathBuf },
    /// Filter a network on an input string until it halts.
    Run {
        network: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Write one JSON record per slice to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a machine and its network side by side.
    Compare {
        machine: PathBuf,
        network: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Turn a fully discrete network into a hidden Markov model.
    Collapse {
        network: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum CompileTarget {
    /// Turing machine to two-stack PDA.
    Tm {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Two-stack PDA to network.
    Pda {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Exact,
    Soft,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScalarArg {
    F64,
    Wide,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Input word over {0,1}; `end` padding is added automatically.
    #[arg(long, default_value = "")]
    input: String,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    max_steps: u64,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ModeArg,
    /// Logistic steepness in soft mode.
    #[arg(long, default_value_t = 50.0)]
    k: f64,
    /// Floating-point scalar for soft mode.
    #[arg(long, value_enum, default_value = "f64")]
    scalar: ScalarArg,
}

impl RunArgs {
    fn inputs(&self) -> Result<Vec<InputSymbol>, Failure> {
        let bits: BitString = self
            .input
            .parse()
            .map_err(|_| Failure::usage(anyhow!("--input must be a string of 0s and 1s, got {:?}", self.input)))?;
        Ok(inputs_from_bits(&bits))
    }

    fn mode(&self) -> Result<Mode, Failure> {
        match self.mode {
            ModeArg::Exact => Ok(Mode::Exact),
            ModeArg::Soft if self.k.is_finite() && self.k > 0.0 => Ok(Mode::Soft { steepness: self.k }),
            ModeArg::Soft => Err(Failure::usage(anyhow!("--k must be a positive number"))),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Compile { target: CompileTarget::Tm { input, output } } => compile_tm(&input, output.as_deref()),
        Command::Compile { target: CompileTarget::Pda { input, output } } => compile_pda(&input, output.as_deref()),
        Command::Validate { file } => validate_file(&file),
        Command::Run { network, run, trace } => run_network(&network, &run, trace.as_deref()),
        Command::Compare { machine, network, run } => compare(&machine, &network, &run),
        Command::Collapse { network, output } => collapse_network(&network, output.as_deref()),
    }
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(path) => std::fs::write(path, format!("{text}\n"))
            .with_context(|| format!("cannot write {}", path.display()))
            .usage(),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn read_machine(path: &Path) -> Result<MachineFile, Failure> {
    load_machine(path).usage()
}

fn read_network(path: &Path) -> Result<NetworkFile, Failure> {
    NetworkFile::load(path).usage()
}

fn violations<T: std::fmt::Display>(what: &str, list: &[T]) -> Failure {
    for v in list {
        eprintln!("{v}");
    }
    Failure::semantic(anyhow!("{what} has {} violation(s)", list.len()))
}

fn pda_of(file: &PdaFile) -> Result<TwoStackPda, Failure> {
    let pda = file.to_pda().semantic()?;
    let list = validate_pda(&pda);
    if !list.is_empty() {
        return Err(violations("machine", &list));
    }
    Ok(pda)
}

fn tm_pda(file: &TmFile) -> Result<(TwoStackPda, StepAlignment), Failure> {
    let tm = file.to_tm().semantic()?;
    let list = validate_tm(&tm);
    if !list.is_empty() {
        return Err(violations("machine", &list));
    }
    tm_to_pda(&tm).semantic()
}

fn compile_tm(input: &Path, output: Option<&Path>) -> Result<(), Failure> {
    let MachineFile::Tm(file) = read_machine(input)? else {
        return Err(Failure::usage(anyhow!("{} is not a Turing machine", input.display())));
    };
    let (pda, alignment) = tm_pda(&file)?;
    let out = MachineFile::Pda(PdaFile::from_pda(&pda, Some(alignment)));
    emit(output, &serde_json::to_string_pretty(&out).expect("machine serializes"))
}

fn compile_pda(input: &Path, output: Option<&Path>) -> Result<(), Failure> {
    let MachineFile::Pda(file) = read_machine(input)? else {
        return Err(Failure::usage(anyhow!("{} is not a two-stack PDA", input.display())));
    };
    let pda = pda_of(&file)?;
    let compiled = pda_to_dbn(&pda).semantic()?;
    let mut metadata = compiled.metadata;
    let alignment = file.metadata.map(|a| serde_json::to_value(a).expect("alignment serializes"));
    metadata["dilation"] = match &alignment {
        Some(a) => a["dilation"].clone(),
        None => 1.into(),
    };
    if let Some(a) = alignment {
        metadata["step_alignment"] = a;
    }
    let out = NetworkFile { spec: compiled.spec, metadata: Some(metadata) };
    emit(output, &out.to_json())
}

fn validate_file(path: &Path) -> Result<(), Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .usage()?;
    let json: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("{} is not JSON", path.display()))
        .usage()?;
    if json.get("kind").is_some() {
        match dbnsim::automata::parse_machine(&text).semantic()? {
            MachineFile::Pda(file) => {
                pda_of(&file)?;
            }
            MachineFile::Tm(file) => {
                tm_pda(&file)?;
            }
        }
    } else {
        let file = NetworkFile::parse(&text).semantic()?;
        let list = validate(&file.spec);
        if !list.is_empty() {
            return Err(violations("network", &list));
        }
    }
    println!("ok");
    Ok(())
}

fn verdict_line(d: &Decision) -> String {
    match d {
        Decision::Accept { .. } => format!("ACCEPT t={}", d.step().expect("halted")),
        Decision::Reject { .. } => format!("REJECT t={}", d.step().expect("halted")),
        Decision::Timeout { .. } => "TIMEOUT".to_string(),
    }
}

fn run_with<W: Weight>(
    file: &NetworkFile,
    args: &RunArgs,
    trace: Option<&Path>,
) -> Result<Decision, Failure> {
    let filter: Filter<W> = Filter::new(&file.spec, args.mode()?).semantic()?;
    let inputs = args.inputs()?;
    let mut sink = match trace {
        Some(path) => Some(BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display())).usage()?,
        )),
        None => None,
    };
    let mut write_error: Option<std::io::Error> = None;
    let decision = decide(&filter, &inputs, args.max_steps as usize, |report| {
        if let (Some(out), None) = (sink.as_mut(), &write_error) {
            let record = TraceRecord::new(&filter, report);
            let line = serde_json::to_string(&record).expect("trace record serializes");
            if let Err(e) = writeln!(out, "{line}") {
                write_error = Some(e);
            }
        }
    })
    .semantic()?;
    if let Some(mut out) = sink {
        if let Some(e) = write_error {
            return Err(Failure::usage(anyhow!(e).context("cannot write trace")));
        }
        out.flush().context("cannot write trace").usage()?;
    }
    Ok(decision)
}

fn run_network(path: &Path, args: &RunArgs, trace: Option<&Path>) -> Result<(), Failure> {
    let file = read_network(path)?;
    let decision = match (args.mode, args.scalar) {
        (ModeArg::Exact, _) => run_with::<Rational>(&file, args, trace)?,
        (ModeArg::Soft, ScalarArg::F64) => run_with::<f64>(&file, args, trace)?,
        (ModeArg::Soft, ScalarArg::Wide) => run_with::<Wide>(&file, args, trace)?,
    };
    println!("{}", verdict_line(&decision));
    Ok(())
}

fn compare_with<W: Weight>(pda: &TwoStackPda, file: &NetworkFile, args: &RunArgs) -> Result<CompareReport, Failure> {
    let filter: Filter<W> = Filter::new(&file.spec, args.mode()?).semantic()?;
    let inputs = args.inputs()?;
    compare_run(pda, &filter, &inputs, args.max_steps as usize).map_err(|e| match e {
        CompareError::MissingNode(_) | CompareError::UnknownState(_) => {
            Failure::usage(anyhow!(e).context("machine and network do not belong together"))
        }
        e => Failure::semantic(anyhow!(e)),
    })
}

fn compare(machine: &Path, network: &Path, args: &RunArgs) -> Result<(), Failure> {
    let pda = match read_machine(machine)? {
        MachineFile::Pda(file) => pda_of(&file)?,
        MachineFile::Tm(file) => tm_pda(&file)?.0,
    };
    let file = read_network(network)?;
    let states = file.spec.node(STATE).and_then(|n| n.kind.outcomes()).unwrap_or_default();
    if states != pda.states() {
        return Err(Failure::usage(anyhow!(
            "{} was not compiled from {}",
            network.display(),
            machine.display()
        )));
    }
    let report = match (args.mode, args.scalar) {
        (ModeArg::Exact, _) => compare_with::<Rational>(&pda, &file, args)?,
        (ModeArg::Soft, ScalarArg::F64) => compare_with::<f64>(&pda, &file, args)?,
        (ModeArg::Soft, ScalarArg::Wide) => compare_with::<Wide>(&pda, &file, args)?,
    };
    let machine_line = match &report.machine {
        dbnsim::automata::RunOutcome::Halted { verdict: Verdict::Accept, step } => format!("ACCEPT t={step}"),
        dbnsim::automata::RunOutcome::Halted { verdict: Verdict::Reject, step } => format!("REJECT t={step}"),
        dbnsim::automata::RunOutcome::Timeout { .. } => "TIMEOUT".to_string(),
    };
    println!("machine {machine_line}");
    println!("network {}", verdict_line(&report.network));
    if let Some(slice) = report.divergence {
        let check = report.slices.iter().find(|c| c.slice == slice).expect("divergent slice is checked");
        return Err(Failure::semantic(anyhow!(
            "first divergence at step {}: weight on the machine configuration is {}",
            slice - 1,
            check.weight
        )));
    }
    if !report.verdicts_agree {
        return Err(Failure::semantic(anyhow!("verdicts differ")));
    }
    println!("match: {} steps", report.slices.len());
    Ok(())
}

#[derive(Serialize)]
struct HmmFile {
    hidden: Vec<String>,
    /// Each joint state as one label per hidden node.
    states: Vec<Vec<String>>,
    inputs: Vec<String>,
    input_values: Vec<Vec<String>>,
    input_prior_first: Vec<String>,
    input_prior: Vec<String>,
    initial: Vec<Vec<String>>,
    transition: Vec<Vec<Vec<String>>>,
    outputs: Vec<String>,
    emission: Vec<Vec<Vec<String>>>,
}

fn strings(v: &[Rational]) -> Vec<String> {
    v.iter().map(rational::format).collect()
}

fn collapse_network(path: &Path, output: Option<&Path>) -> Result<(), Failure> {
    let file = read_network(path)?;
    let hmm = collapse(&file.spec).map_err(|e| match e {
        CollapseError::ValidationFailed(list) => violations("network", &list),
        e => Failure::semantic(anyhow!(e)),
    })?;
    let name = |nodes: &[String], values: &[Vec<usize>]| -> Vec<Vec<String>> {
        values
            .iter()
            .map(|v| v.iter().zip(nodes).map(|(&i, n)| hmm.labels(n).expect("known node")[i].clone()).collect())
            .collect()
    };
    let out = HmmFile {
        states: name(&hmm.hidden, &hmm.states),
        input_values: name(&hmm.inputs, &hmm.input_values),
        hidden: hmm.hidden.clone(),
        inputs: hmm.inputs.clone(),
        input_prior_first: strings(&hmm.input_prior[0]),
        input_prior: strings(&hmm.input_prior[1]),
        initial: hmm.initial.iter().map(|r| strings(r)).collect(),
        transition: hmm.transition.iter().map(|m| m.iter().map(|r| strings(r)).collect()).collect(),
        outputs: hmm.outputs.clone(),
        emission: hmm.emission.iter().map(|m| m.iter().map(|r| strings(r)).collect()).collect(),
    };
    emit(output, &serde_json::to_string_pretty(&out).expect("hmm serializes"))
}
