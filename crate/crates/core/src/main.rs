use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use oqs_lab::cli::{emit_csv, file_stem, parse_config, run, ExperimentConfig, Subcommand};
use oqs_lab::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "oqs-lab", version, about = "Open quantum system experiments from JSON configs")]
struct Args {
    /// kernels, realize, gle, kz-compare, lindblad, dilation, qnoise or fock-check
    subcommand: String,
    /// JSON parameter block; keys left out take their defaults
    #[arg(long, required_unless_present = "print_defaults")]
    config: Option<PathBuf>,
    /// Directory for the CSV outputs
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides "seed" from the config
    #[arg(long)]
    seed: Option<u64>,
    /// Print the full default config for the subcommand and exit
    #[arg(long)]
    print_defaults: bool,
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("OQS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("OQS_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot size the worker pool: {e}")))
}

fn execute(args: Args) -> Result<()> {
    configure_threads()?;
    let sub = Subcommand::from_name(&args.subcommand)?;
    if args.print_defaults {
        println!("{}", ExperimentConfig::defaults(sub).to_json_pretty());
        return Ok(());
    }
    let path = args.config.expect("clap enforces --config");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let mut config = parse_config(sub, &text)?;
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    std::fs::create_dir_all(&args.out)?;
    let start = Instant::now();
    let outputs = run(&config)?;
    let wall = start.elapsed().as_secs_f64();
    let mut info = format!("# config: {}\nsubcommand,file,wall_time_s\n", config.to_json());
    for o in &outputs {
        let file = args.out.join(format!("{}.csv", file_stem(sub, &o.name)));
        emit_csv(&o.table, &file)?;
        info.push_str(&format!("{sub},{},{wall:.6}\n", file.display()));
        eprintln!("wrote {}", file.display());
    }
    std::fs::write(args.out.join(format!("{}_run_info.txt", sub.name())), info)?;
    Ok(())
}

fn main() -> ExitCode {
    match execute(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
