use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use alspg_harness::{
    collect_scenarios, emit_plotdata, records_csv, run_scenario, run_suite, summary_csv, summary_table, suite,
    HarnessError, PlotKind, RunOutput, Scenario,
};
use clap::{Parser, Subcommand};
use regex::Regex;

#[derive(Parser)]
#[command(name = "alspg-bench", version, about = "Run ALSPG benchmark scenarios")]
struct Cli {
    /// Output directory for records, traces and tables.
    #[arg(long, global = true, default_value = "alspg-out")]
    out: PathBuf,
    /// Override the seed of every scenario.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run { file: PathBuf },
    /// Run every `*.scenario` file under a directory and tabulate the results.
    Suite {
        dir: PathBuf,
        /// Regex on the relative path or the scenario id.
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Write plot data for one run of a record file written by `run`.
    Plot {
        record: PathBuf,
        #[arg(long)]
        kind: PlotKind,
        #[arg(long, default_value_t = 0)]
        run: usize,
    },
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn override_seed(s: &mut Scenario, seed: Option<u64>) {
    if let Some(seed) = seed {
        s.seed = seed;
    }
}

/// Writes the record file, the records CSV and one convergence trace per run.
fn save_runs(out: &Path, id: &str, outputs: &[RunOutput]) -> Result<(), HarnessError> {
    let json = serde_json::to_string_pretty(outputs).expect("outputs serialize");
    write(&out.join(format!("{id}.json")), &json)?;
    let records: Vec<_> = outputs.iter().map(|o| o.record.clone()).collect();
    write(&out.join(format!("{id}.csv")), &records_csv(&records))?;
    for o in outputs {
        if let Ok(csv) = emit_plotdata(o, PlotKind::Convergence) {
            write(&out.join(format!("{id}_run{}_trace.csv", o.record.run)), &csv)?;
        }
    }
    Ok(())
}

fn all_converged<'a>(mut outputs: impl Iterator<Item = &'a RunOutput>) -> bool {
    outputs.all(|o| o.record.converged)
}

fn execute(cli: Cli) -> Result<bool, HarnessError> {
    match cli.command {
        Command::Run { file } => {
            let mut scenario = Scenario::load(&file)?;
            override_seed(&mut scenario, cli.seed);
            let outputs = run_scenario(&scenario)?;
            save_runs(&cli.out, &scenario.id, &outputs)?;
            print!("{}", summary_table(&suite::summarize(outputs.iter())));
            Ok(all_converged(outputs.iter()))
        }
        Command::Suite { dir, filter, jobs } => {
            let re = filter
                .map(|f| Regex::new(&f).map_err(|e| HarnessError::Usage(format!("bad filter: {e}"))))
                .transpose()?;
            let mut scenarios = collect_scenarios(&dir, re.as_ref())?;
            for (_, s) in &mut scenarios {
                override_seed(s, cli.seed);
            }
            let result = run_suite(scenarios, jobs)?;
            for (s, outputs) in &result.scenarios {
                save_runs(&cli.out, &s.id, outputs)?;
            }
            let records: Vec<_> = result.outputs().map(|o| o.record.clone()).collect();
            write(&cli.out.join("suite_records.csv"), &records_csv(&records))?;
            write(&cli.out.join("suite_summary.csv"), &summary_csv(&result.summary))?;
            let table = summary_table(&result.summary);
            write(&cli.out.join("suite_summary.txt"), &table)?;
            print!("{table}");
            Ok(all_converged(result.outputs()))
        }
        Command::Plot { record, kind, run } => {
            let text = fs::read_to_string(&record)
                .map_err(|e| HarnessError::Usage(format!("cannot read {}: {e}", record.display())))?;
            let outputs: Vec<RunOutput> = serde_json::from_str(&text)
                .map_err(|e| HarnessError::Parse(format!("{}: {e}", record.display())))?;
            let o = outputs
                .iter()
                .find(|o| o.record.run == run)
                .ok_or_else(|| HarnessError::Usage(format!("no run {run} in {}", record.display())))?;
            let csv = emit_plotdata(o, kind)?;
            let path = cli.out.join(format!("{}_run{run}_{}.csv", o.record.scenario, kind.name()));
            write(&path, &csv)?;
            println!("{}", path.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("alspg-bench: some runs did not converge");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("alspg-bench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
