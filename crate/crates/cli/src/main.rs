use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ener::corpus::{GeneratorConfig, LabelSchema};
use ener::harness::{
    detect_cmd, eval_cmd, gen_data, inspect_cmd, select_cmd, train_cmd, Aggregation, EvalOptions, Retrain,
    SelectOptions, SplitInput, Strategy,
};
use ener::metrics::TieRule;
use ener::model::{Head, TrainConfig};
use ener::Error;

#[derive(Parser)]
#[command(name = "ener", version, about = "Evidential uncertainty for named entity recognition")]
struct Cli {
    /// Root seed; overrides the seed in --config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON config: generator config for gen-data, training config otherwise.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum HeadArg {
    Evidential,
    Softmax,
}

#[derive(Clone, Copy, ValueEnum)]
enum TiesArg {
    Literal,
    Standard,
}

impl From<TiesArg> for TieRule {
    fn from(t: TiesArg) -> Self {
        match t {
            TiesArg::Literal => TieRule::Literal,
            TiesArg::Standard => TieRule::Standard,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Random,
    Entropy,
    Edl,
    #[value(name = "e_ner")]
    ENer,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Random => Strategy::Random,
            StrategyArg::Entropy => Strategy::Entropy,
            StrategyArg::Edl => Strategy::Edl,
            StrategyArg::ENer => Strategy::ENer,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic corpus splits.
    GenData,
    /// Train a tagger and keep the best checkpoint by dev F1.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: PathBuf,
        #[arg(long, value_enum)]
        head: Option<HeadArg>,
        /// Plain evidential classification loss instead of the importance-weighted one.
        #[arg(long)]
        no_iw: bool,
        /// Drop the uncertainty-mass penalty.
        #[arg(long)]
        no_unm: bool,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, value_delimiter = ',', default_value = "PER,LOC,ORG,MISC")]
        entity_types: Vec<String>,
    },
    /// Per-split F1, ECE and AUC, with reliability tables.
    Eval {
        checkpoint: PathBuf,
        /// Data files as `NAME=PATH` or `PATH`; test_oov_typo, test_oov_unseen
        /// and test_ood names mark shifted splits.
        #[arg(required = true)]
        splits: Vec<String>,
        /// Training file to check against the checkpoint vocabulary.
        #[arg(long)]
        train: Option<PathBuf>,
        /// Do not require a pooled Unc AUC.
        #[arg(long)]
        skip_unc: bool,
        #[arg(long, value_enum, default_value = "literal")]
        ties: TiesArg,
    },
    /// Select pool sentences for labelling, optionally retraining on them.
    Select {
        checkpoint: PathBuf,
        pool: PathBuf,
        #[arg(long, value_enum)]
        strategy: StrategyArg,
        #[arg(long)]
        ratio: f64,
        /// Score a sentence by its most uncertain token instead of the mean.
        #[arg(long)]
        max: bool,
        /// Already labeled sentences merged with the selection before retraining.
        #[arg(long)]
        labeled: Option<PathBuf>,
        /// Retrain after selecting; needs --dev and --test.
        #[arg(long)]
        retrain: bool,
        /// Fine-tune the checkpoint on the selection instead of retraining from scratch.
        #[arg(long)]
        cross_domain: bool,
        #[arg(long)]
        dev: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
    },
    /// Con/Unc AUC table for the typo, unseen and out-of-domain splits.
    Detect {
        checkpoint: PathBuf,
        #[arg(long)]
        id: PathBuf,
        #[arg(long)]
        typo: PathBuf,
        #[arg(long)]
        unseen: PathBuf,
        #[arg(long)]
        ood: PathBuf,
        #[arg(long, value_enum, default_value = "literal")]
        ties: TiesArg,
    },
    /// Most uncertain tokens and most confident errors.
    Inspect {
        checkpoint: PathBuf,
        data: String,
        #[arg(short, long, default_value_t = 10)]
        k: usize,
    },
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn read_config(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| {
        Failure::Run(Error::Data(format!("cannot read config {}: {e}", path.display())))
    })
}

fn train_config(cli: &Cli) -> Result<TrainConfig, Failure> {
    let mut config = match &cli.config {
        Some(p) => TrainConfig::from_json(&read_config(p)?)?,
        None => TrainConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn print_json(value: &impl serde::Serialize) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(value).map_err(Error::from)?);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let out = cli.out.as_path();
    match &cli.command {
        Command::GenData => {
            let mut config = match &cli.config {
                Some(p) => GeneratorConfig::from_json(&read_config(p)?)?,
                None => GeneratorConfig::default(),
            };
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            let manifest = gen_data(&config, out)?;
            print_json(&manifest.corpus)?;
        }
        Command::Train {
            train,
            dev,
            head,
            no_iw,
            no_unm,
            epochs,
            entity_types,
        } => {
            let mut config = train_config(&cli)?;
            match head {
                Some(HeadArg::Evidential) => config.head = Head::Evidential,
                Some(HeadArg::Softmax) => config.head = Head::Softmax,
                None => {}
            }
            if config.head == Head::Softmax && (*no_iw || *no_unm) {
                return Err(Failure::Usage("--no-iw and --no-unm apply to the evidential head only".into()));
            }
            config.disable_iw |= *no_iw;
            config.disable_unm |= *no_unm;
            if let Some(e) = epochs {
                config.epochs = *e;
            }
            let schema = LabelSchema::new(entity_types)?;
            let manifest = train_cmd(train, dev, &schema, &config, out)?;
            if let Some(p) = &manifest.protocol {
                println!("{p}");
            }
        }
        Command::Eval {
            checkpoint,
            splits,
            train,
            skip_unc,
            ties,
        } => {
            let splits = splits.iter().map(|s| SplitInput::parse(s)).collect::<Result<Vec<_>, _>>()?;
            let options = EvalOptions {
                train: train.clone(),
                require_unc: !skip_unc,
                ties: (*ties).into(),
            };
            print_json(&eval_cmd(checkpoint, &splits, &options, out)?)?;
        }
        Command::Select {
            checkpoint,
            pool,
            strategy,
            ratio,
            max,
            labeled,
            retrain,
            cross_domain,
            dev,
            test,
        } => {
            let retrain = if *retrain || *cross_domain {
                let (Some(dev), Some(test)) = (dev.clone(), test.clone()) else {
                    return Err(Failure::Usage("retraining needs --dev and --test".into()));
                };
                let config = train_config(&cli)?;
                Some(if *cross_domain {
                    if labeled.is_some() {
                        return Err(Failure::Usage("--labeled does not apply to --cross-domain".into()));
                    }
                    Retrain::CrossDomain { dev, test, config }
                } else {
                    Retrain::InDomain {
                        labeled: labeled.clone(),
                        dev,
                        test,
                        config,
                    }
                })
            } else {
                None
            };
            let options = SelectOptions {
                strategy: (*strategy).into(),
                ratio: *ratio,
                aggregation: if *max { Aggregation::Max } else { Aggregation::Mean },
                seed: cli.seed.unwrap_or(0),
            };
            print_json(&select_cmd(checkpoint, pool, options, retrain.as_ref(), out)?)?;
        }
        Command::Detect {
            checkpoint,
            id,
            typo,
            unseen,
            ood,
            ties,
        } => {
            let table = detect_cmd(checkpoint, id, [typo, unseen, ood], (*ties).into(), out)?;
            print!("{}", table.to_text());
        }
        Command::Inspect { checkpoint, data, k } => {
            let table = inspect_cmd(checkpoint, &SplitInput::parse(data)?, *k, out)?;
            print!("{}", table.to_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
