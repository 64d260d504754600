//! `depthstip`: batch runs of the depth action-recognition pipeline.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use depth_stip::pipeline::{
    inspect, parse_subject_list, run_gridsearch, run_pipeline, run_robustness, write_benchmark, BenchmarkSpec,
    InspectStage, PipelineConfig, PipelineError, RobustnessMode, SplitSpec,
};

#[derive(Parser)]
#[command(name = "depthstip", version, about = "Depth-video action recognition with interest points and bags of words")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// `key = value` config file; missing keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Split {
    /// Training subjects, e.g. `1,3,5` or `1-3`.
    #[arg(long, value_parser = subjects)]
    train_subjects: Subjects,
    /// Test subjects.
    #[arg(long, value_parser = subjects)]
    test_subjects: Subjects,
}

#[derive(Subcommand)]
enum Command {
    /// Writes the synthetic three-class benchmark as .dseq files.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 6)]
        subjects: usize,
        #[arg(long, default_value_t = 4)]
        repetitions: usize,
        #[arg(long, default_value_t = 20)]
        frames: usize,
    },
    /// Trains on the train subjects and evaluates on the test subjects.
    Pipeline {
        dataset: PathBuf,
        #[command(flatten)]
        split: Split,
        #[command(flatten)]
        common: Common,
    },
    /// Accuracy of the trained baseline under perturbed test sequences.
    Robustness {
        dataset: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Pepper-noise percentages, overriding `pepper_levels`.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
        #[command(flatten)]
        split: Split,
        #[command(flatten)]
        common: Common,
    },
    /// Dumps the intermediate products of one sequence.
    Inspect {
        sequence: PathBuf,
        #[arg(long, value_parser = stage)]
        stage: InspectStage,
        /// Reference depth for descriptor scales (default: the sequence's own).
        #[arg(long)]
        z_bar0: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Cross-validated search over scales, k1, k2 and C.
    Gridsearch {
        dataset: PathBuf,
        #[arg(long, value_parser = subjects)]
        train_subjects: Subjects,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Pepper,
    Occlusion,
}

#[derive(Clone)]
struct Subjects(Vec<i32>);

fn subjects(s: &str) -> Result<Subjects, String> {
    parse_subject_list(s).map(Subjects)
}

fn stage(s: &str) -> Result<InspectStage, String> {
    s.parse()
}

fn config(common: &Common) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn split(s: &Split) -> Result<SplitSpec, PipelineError> {
    SplitSpec::new(s.train_subjects.0.clone(), s.test_subjects.0.clone())
}

fn print_matrix(classes: &[u32], confusion: &[Vec<usize>]) {
    for (c, row) in classes.iter().zip(confusion) {
        let cells: Vec<String> = row.iter().map(|n| format!("{n:4}")).collect();
        println!("  {c:>4} | {}", cells.join(" "));
    }
}

fn run(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Synth {
            seed,
            out,
            subjects,
            repetitions,
            frames,
        } => {
            let spec = BenchmarkSpec {
                subjects,
                repetitions,
                frames,
                ..BenchmarkSpec::default()
            };
            let files = write_benchmark(&out, &spec, seed)?;
            println!("wrote {} sequences to {}", files.len(), out.display());
        }
        Command::Pipeline { dataset, split: s, common } => {
            let cfg = config(&common)?;
            let r = run_pipeline(&cfg, &dataset, &split(&s)?, &common.out)?;
            println!(
                "train {} / test {} sequences, representation length {}",
                r.train_sequences, r.test_sequences, r.representation_len
            );
            print_matrix(&r.evaluation.classes, &r.evaluation.confusion);
            println!("accuracy {:.4}", r.accuracy);
        }
        Command::Robustness {
            dataset,
            mode,
            levels,
            split: s,
            common,
        } => {
            let mut cfg = config(&common)?;
            let mode = match mode {
                Mode::Pepper => RobustnessMode::Pepper,
                Mode::Occlusion => RobustnessMode::Occlusion,
            };
            if let Some(l) = levels {
                cfg.pepper_levels = l;
            }
            let r = run_robustness(&cfg, &dataset, &split(&s)?, &common.out, mode)?;
            println!("baseline {:.4}", r.baseline);
            for (level, acc) in &r.rows {
                println!("{level:>6} {acc:.4}");
            }
        }
        Command::Inspect {
            sequence,
            stage,
            z_bar0,
            common,
        } => {
            let cfg = config(&common)?;
            for p in inspect(&sequence, stage, &cfg, &common.out, z_bar0)? {
                println!("{}", p.display());
            }
        }
        Command::Gridsearch {
            dataset,
            train_subjects,
            common,
        } => {
            let cfg = config(&common)?;
            let r = run_gridsearch(&cfg, &dataset, &train_subjects.0.into_iter().collect(), &common.out)?;
            let best = r
                .mean_accuracy
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            println!(
                "best: scales {:?} k1 {} k2 {} C {} (mean accuracy {best:.4})",
                r.best.scales, r.best.k1, r.best.k2, r.best.c
            );
            println!("{}", Path::new(&common.out).join("best.conf").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
