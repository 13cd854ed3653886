use anyhow::Result;
use clap::{Parser, Subcommand};
use pendular_cli::experiments::{execute, validate, Experiment};
use pendular_cli::presets::{load_target, preset_text, PRESET_NAMES};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "pendular",
    version,
    about = "Quantum phase-space simulator for a pumped cavity with an oscillating mirror"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment from a config file or `preset:NAME`.
    Run {
        /// Config path, or `preset:NAME` for a built-in configuration.
        target: String,
        /// Override the base random seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the trajectory count.
        #[arg(long)]
        trajectories: Option<usize>,
        /// Override the simulated end time in seconds.
        #[arg(long)]
        t_end_s: Option<f64>,
        /// Override the integration step in seconds.
        #[arg(long)]
        dt_s: Option<f64>,
        /// Worker threads; 0 means one per available CPU.
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory (default: the config's output_dir, else runs/<label>).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Parse and check a config without running anything.
    Validate {
        /// Config path, or `preset:NAME` for a built-in configuration.
        target: String,
    },
    /// Inspect the built-in configurations.
    Presets {
        #[command(subcommand)]
        action: PresetsAction,
    },
}

#[derive(Subcommand)]
enum PresetsAction {
    /// List the built-in configuration names.
    List,
    /// Print the config text of one built-in configuration.
    Show { name: String },
}

fn apply_overrides(
    exp: &mut Experiment,
    seed: Option<u64>,
    trajectories: Option<usize>,
    t_end_s: Option<f64>,
    dt_s: Option<f64>,
    workers: Option<usize>,
) {
    if let Some(seed) = seed {
        exp.ensemble.base_seed = seed;
    }
    if let Some(n) = trajectories {
        exp.ensemble.trajectories = n;
    }
    if let Some(t) = t_end_s {
        exp.ensemble.t_end_s = t;
    }
    if let Some(dt) = dt_s {
        exp.ensemble.dt_s = dt;
    }
    if let Some(w) = workers {
        exp.workers = w;
    }
}

fn print_params(params: &pendular_core::params::PhysicalParams) {
    println!("cavity decay rate       {:.6e} /s", params.cavity_decay_rate);
    println!(
        "optical frequency       {:.6e} rad/s",
        params.optical_angular_frequency
    );
    println!("optomechanical coupling {:.6e} rad/s/m", params.coupling);
    println!("pump amplitude          {:.6e} /s", params.pump_amplitude);
    println!(
        "mirror damping rate     {:.6e} /s",
        params.mirror_damping_rate
    );
    println!("position scale          {:.6e} m", params.position_scale_m);
    println!("momentum scale          {:.6e} kg m/s", params.momentum_scale);
    println!(
        "thermal de Broglie      {:.6e} m",
        params.thermal_de_broglie_m
    );
    println!("mean phonon occupation  {:.6e}", params.mean_occupation);
}

fn main() -> Result<()> {
    // Die quietly when a downstream pipe (head, less) closes early.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            target,
            seed,
            trajectories,
            t_end_s,
            dt_s,
            workers,
            out_dir,
        } => {
            let (mut exp, label) = load_target(&target)?;
            apply_overrides(&mut exp, seed, trajectories, t_end_s, dt_s, workers);
            let out_dir = out_dir
                .or_else(|| exp.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("runs").join(&label));
            let summary = execute(&exp, &out_dir)?;
            for (key, value) in &summary.notes {
                println!("{key} = {value}");
            }
            for name in &summary.files {
                println!("wrote {}", summary.out_dir.join(name).display());
            }
            if summary.degraded {
                eprintln!(
                    "warning: divergence above budget; results flagged degraded in the manifest"
                );
            }
        }
        Command::Validate { target } => {
            let (exp, _) = load_target(&target)?;
            let report = validate(&exp)?;
            println!("ok: {}", exp.kind.name());
            print_params(&report.params);
        }
        Command::Presets { action } => match action {
            PresetsAction::List => {
                for name in PRESET_NAMES {
                    println!("{name}");
                }
            }
            PresetsAction::Show { name } => match preset_text(&name) {
                Some(text) => print!("{text}"),
                None => anyhow::bail!(
                    "unknown preset {name:?}; available: {}",
                    PRESET_NAMES.join(", ")
                ),
            },
        },
    }
    Ok(())
}
