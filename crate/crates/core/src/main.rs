use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use log::info;

use nfvom::harness::{self, ExperimentConfig, ExperimentContext, ResultsTable};
use nfvom::vom::{build_vom, roi_grid, Vom};

#[derive(Parser)]
#[command(name = "nfvom", version, about = "Near-field channel estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the virtual object map for a configuration.
    BuildVom {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the configured trials at a single pilot length.
    Run {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Pilot length; defaults to the first configured value.
        #[arg(long)]
        t_p: Option<usize>,
        /// Prebuilt map file instead of building one.
        #[arg(long)]
        vom: Option<PathBuf>,
    },
    /// Run the full pilot-length sweep and write results and plot data.
    Sweep {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        vom: Option<PathBuf>,
    },
    /// Check the configuration and that the ROI lies in the radiative near field.
    Validate { config: PathBuf },
    /// Turn a results CSV into per-figure plot-data files.
    Plot {
        results: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn context(cfg: &ExperimentConfig, vom: Option<&PathBuf>) -> anyhow::Result<ExperimentContext> {
    Ok(match vom {
        None => ExperimentContext::new(cfg)?,
        Some(p) => {
            let geom = cfg.array.build()?;
            let scene = cfg.scene.resolve()?;
            let vom = Vom::load(p)?;
            ExperimentContext::with_vom(cfg, geom, scene, vom)?
        }
    })
}

fn print_table(table: &ResultsTable) {
    println!("{:<12} {:>5} {:>12} {:>10} {:>9} {:>9}", "scheme", "t_p", "nmse", "stderr", "rate", "stderr");
    for r in &table.rows {
        println!(
            "{:<12} {:>5} {:>12.5} {:>10.5} {:>9.4} {:>9.4}",
            r.scheme.as_str(),
            r.t_p,
            r.nmse_mean,
            r.nmse_stderr,
            r.rate_mean,
            r.rate_stderr
        );
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::BuildVom { config, output } => {
            let cfg = ExperimentConfig::load(&config)?;
            let geom = cfg.array.build()?;
            let scene = cfg.scene.resolve()?;
            let vom = build_vom(&scene, &geom, &cfg.vom, &cfg.coefficients)?;
            vom.save(&output)?;
            println!(
                "wrote {} (L = {}, {} grid entries)",
                output.display(),
                vom.library.len(),
                vom.comm_entries.len()
            );
        }
        Command::Run {
            config,
            output,
            t_p,
            vom,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let t_p = t_p.unwrap_or(cfg.pilot_lengths[0]);
            if t_p == 0 || t_p > cfg.block_length {
                bail!("pilot length {t_p} must lie in [1, {}]", cfg.block_length);
            }
            let ctx = context(&cfg, vom.as_ref())?;
            let out = harness::run_blocks(&ctx, &[t_p], 0, cfg.trials)?;
            harness::emit_results(&ctx, &out, &output)?;
            print_table(&out.table);
        }
        Command::Sweep { config, output, vom } => {
            let cfg = ExperimentConfig::load(&config)?;
            let ctx = context(&cfg, vom.as_ref())?;
            info!("sweeping {} pilot lengths x {} trials", cfg.pilot_lengths.len(), cfg.trials);
            let out = harness::run_sweep(&ctx)?;
            harness::emit_results(&ctx, &out, &output)?;
            out.table.write_plot_data(&output)?;
            print_table(&out.table);
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let geom = cfg.array.build()?;
            let scene = cfg.scene.resolve()?;
            let mut pts = roi_grid(&scene.roi, cfg.vom.grid_spacing);
            pts.extend(scene.roi.corners());
            let report = geom.validate_roi(&pts);
            println!(
                "aperture {:.4} m, wavelength {:.4} m, near field [{:.3}, {:.3}] m",
                geom.aperture(),
                geom.wavelength(),
                report.r_lower,
                report.r_upper
            );
            for v in &report.violations {
                println!("  {} element {} distance {:.3} m: {:?}", v.point, v.element, v.distance, v.side);
            }
            let scene_warnings = scene.warn_near_field(&geom);
            if report.is_valid() {
                println!("ROI lies in the radiative near field ({scene_warnings} scene points outside)");
            } else {
                println!("ROI violates the near-field bounds at {} element pairs", report.violations.len());
                return Ok(false);
            }
        }
        Command::Plot { results, output } => {
            let table = ResultsTable::read_csv(&results).with_context(|| format!("reading {}", results.display()))?;
            for p in table.write_plot_data(&output)? {
                println!("wrote {}", p.display());
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
