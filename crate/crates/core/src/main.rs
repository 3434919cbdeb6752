use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use blind_mimo::analysis::{asymptotic_ver_bound, ver_upper_low_snr};
use blind_mimo::channel::{gaussian_distortion, optimal_standard_step, NoiseSpec};
use blind_mimo::design::{closure, d_min, exhaustive_design, greedy_design, DEFAULT_RESTARTS, DEFAULT_SEARCH_CAP};
use blind_mimo::harness::output::{gnuplot_script, write_bounds_csv, write_results_csv, BoundRow};
use blind_mimo::harness::{run_scenario, ScenarioConfig};
use blind_mimo::labels::{Constellation, LabelSet, Modulation};

#[derive(Parser)]
#[command(
    name = "blind-mimo",
    version,
    about = "Blind MIMO detection with low-resolution ADCs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundType {
    LowSnr,
    Asymptotic,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Greedy,
    Exhaustive,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo scenario and write one CSV row per point.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the SNR list of the config.
        #[arg(long, num_args = 1.., allow_negative_numbers = true)]
        snr_db: Option<Vec<f64>>,
        #[arg(long)]
        detector: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write elapsed_ms as 0 so identical runs give identical files.
        #[arg(long)]
        no_timing: bool,
        /// Also write a gnuplot script for the CSV.
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },
    /// Evaluate the analytical VER bounds.
    Bound {
        #[arg(long = "type", value_enum)]
        kind: BoundType,
        #[arg(long = "mod")]
        modulation: Modulation,
        #[arg(long)]
        nt: usize,
        #[arg(long)]
        nr: usize,
        #[arg(long, num_args = 1.., allow_negative_numbers = true)]
        snr_db: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Choose a transmit subset with maximal minimum Hamming distance.
    Design {
        #[arg(long)]
        nt: usize,
        #[arg(long)]
        ktilde: usize,
        #[arg(long = "mod", default_value = "bpsk")]
        modulation: Modulation,
        #[arg(long, value_enum, default_value = "greedy")]
        method: Method,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the optimal step size and distortion of a b-bit quantizer.
    Quantizer {
        #[arg(long)]
        bits: u32,
    },
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Simulate {
            config,
            snr_db,
            detector,
            trials,
            seed,
            workers,
            out,
            no_timing,
            gnuplot,
        } => {
            let mut cfg = ScenarioConfig::from_file(&config)?;
            if let Some(s) = snr_db {
                cfg.snr_db = s;
            }
            if let Some(d) = detector {
                cfg.detector = d.parse()?;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            let result = run_scenario(&cfg)?;
            let mut w = output(&out)?;
            write_results_csv(&mut w, &result.points, !no_timing)?;
            w.flush()?;
            if let Some(script) = gnuplot {
                let Some(csv) = &out else {
                    bail!("--gnuplot needs --out so the script can reference the CSV");
                };
                std::fs::write(&script, gnuplot_script(&csv.display().to_string(), &cfg.scenario_id))
                    .with_context(|| format!("writing {}", script.display()))?;
            }
        }
        Command::Bound {
            kind,
            modulation,
            nt,
            nr,
            snr_db,
            out,
        } => {
            let rows = match kind {
                BoundType::Asymptotic => vec![BoundRow {
                    kind: "asymptotic",
                    modulation: modulation.name().into(),
                    nt,
                    nr,
                    snr_db: None,
                    bound: asymptotic_ver_bound(modulation, nt, nr)?,
                }],
                BoundType::LowSnr => {
                    if snr_db.is_empty() {
                        bail!("--type low-snr needs at least one --snr-db value");
                    }
                    let labels = LabelSet::enumerate(&Constellation::new(modulation), nt)?;
                    snr_db
                        .iter()
                        .map(|&s| {
                            Ok(BoundRow {
                                kind: "low-snr",
                                modulation: modulation.name().into(),
                                nt,
                                nr,
                                snr_db: Some(s),
                                bound: ver_upper_low_snr(&labels, NoiseSpec::from_snr_db(nt, s).n0, nr)?,
                            })
                        })
                        .collect::<Result<_>>()?
                }
            };
            let mut w = output(&out)?;
            write_bounds_csv(&mut w, &rows)?;
            w.flush()?;
        }
        Command::Design {
            nt,
            ktilde,
            modulation,
            method,
            restarts,
            seed,
        } => {
            let labels = LabelSet::enumerate(&Constellation::new(modulation), nt)?;
            let design = match method {
                Method::Greedy => greedy_design(&labels, ktilde, restarts, seed)?.best,
                Method::Exhaustive => exhaustive_design(&labels, ktilde, DEFAULT_SEARCH_CAP)?,
            };
            let symmetry = if ktilde.is_power_of_two() {
                format!("{:?}", closure(&labels, &design.indices)?).to_lowercase()
            } else {
                "n/a".into()
            };
            let mut w = io::stdout().lock();
            writeln!(w, "d_min {}", d_min(&labels, &design.indices)?)?;
            writeln!(w, "closure {symmetry}")?;
            let dims = if modulation == Modulation::Bpsk { nt } else { 2 * nt };
            for &k in &design.indices {
                let signs: String = labels
                    .real_label(k)
                    .0
                    .iter()
                    .take(dims)
                    .map(|&v| {
                        if v > 0.0 {
                            '+'
                        } else if v < 0.0 {
                            '-'
                        } else {
                            '0'
                        }
                    })
                    .collect();
                writeln!(w, "{k:>6} {signs}")?;
            }
        }
        Command::Quantizer { bits } => {
            let step = optimal_standard_step(bits)?;
            println!("bits {bits}");
            println!("step {step:.6}");
            println!("distortion {:.6}", gaussian_distortion(bits, step));
        }
    }
    Ok(())
}
