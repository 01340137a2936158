use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use orbfuse::dynamics::{read_ephemeris, ForceModel, IntegratorConfig, PhysicalConstants};
use orbfuse::scenario::{self, Mode, ScenarioConfig};
use orbfuse::tle::scan_tles;

#[derive(Parser)]
#[command(name = "orbfuse", version, about = "Radar and TLE fusion tracking scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a TOML config.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        mc_runs: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// radar, fused or both.
        #[arg(long)]
        mode: Option<Mode>,
        /// Also write every particle at every epoch.
        #[arg(long)]
        particles: bool,
    },
    /// Fit TLE model parameters from a TLE file and a reference ephemeris CSV
    /// (epoch,px,py,pz,vx,vy,vz). Prints the parameters as TOML.
    Calibrate {
        tle_file: PathBuf,
        ephemeris_file: PathBuf,
        /// Write the per-pair offsets to this CSV.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Highest zonal term used to move ephemeris samples to TLE epochs.
        #[arg(long, default_value_t = 2)]
        zonal_degree: u8,
    },
    /// Validate every record of a TLE file.
    Parse { tle_file: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            seed,
            mc_runs,
            out_dir,
            mode,
            particles,
        } => {
            let mut cfg = ScenarioConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = mc_runs {
                cfg.mc_runs = n;
            }
            if let Some(d) = out_dir {
                cfg.output_dir = d;
            }
            if let Some(m) = mode {
                cfg.mode = m;
            }
            cfg.write_particles |= particles;
            cfg.validate()?;
            let out = scenario::run(&cfg)?;
            let passes = out.setup.timeline.iter().filter(|e| e.tags.radar).count();
            println!(
                "{} epochs, {} radar observations per run, {} filter runs; results in {}",
                out.setup.timeline.len(),
                passes,
                out.runs.len(),
                cfg.output_dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Calibrate {
            tle_file,
            ephemeris_file,
            report,
            zonal_degree,
        } => {
            let text = std::fs::read_to_string(&tle_file).with_context(|| format!("reading {}", tle_file.display()))?;
            let eph = read_ephemeris(BufReader::new(
                File::open(&ephemeris_file).with_context(|| format!("opening {}", ephemeris_file.display()))?,
            ))?;
            let force = ForceModel { zonal_degree };
            force.validate()?;
            let cal = scenario::calibrate_from_files(
                &text,
                &eph,
                &PhysicalConstants::default(),
                &force,
                &IntegratorConfig::default(),
            )?;
            if cal.floored {
                eprintln!("warning: degenerate training set, tolerances raised to their floors");
            }
            if let Some(path) = report {
                cal.write_report(File::create(&path).with_context(|| format!("creating {}", path.display()))?)?;
            }
            print!("{}", toml::to_string(&cal.params)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Parse { tle_file } => {
            let text = std::fs::read_to_string(&tle_file).with_context(|| format!("reading {}", tle_file.display()))?;
            let records = scan_tles(&text);
            if records.is_empty() {
                bail!("no records in {}", tle_file.display());
            }
            let mut bad = 0;
            for (line, rec) in &records {
                match rec {
                    Ok(r) => println!(
                        "line {line}: ok catalog {} epoch {:.3} s i {:.4} deg e {:.7} n {:.8e} rad/s",
                        r.catalog_id, r.epoch, r.elements.inclination_deg, r.elements.eccentricity, r.elements.mean_motion
                    ),
                    Err(e) => {
                        bad += 1;
                        println!("line {line}: invalid: {e}");
                    }
                }
            }
            println!("{} records, {} invalid", records.len(), bad);
            Ok(if bad == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}
