use std::path::{Path, PathBuf};

use anyhow::Context;
use chromafold::{demo, run_2d, run_3d, server, ProjectConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(version, about = "Filter-revealed prints and papercraft from closed meshes")]
struct Cli {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Composite and red/green/blue filtered PNGs.
    Render2d { config: PathBuf },
    /// Print sheet SVG, atlas, folded preview and assembly notes.
    Render3d { config: PathBuf },
    /// Local preview service.
    Serve {
        config: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
    /// Writes the demo meshes and configs into the output directory.
    Demo,
}

fn load(path: &Path, seed: Option<u64>) -> anyhow::Result<ProjectConfig> {
    let mut cfg =
        ProjectConfig::load(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn report(paths: Vec<PathBuf>) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Render2d { config } => report(run_2d(&load(&config, cli.seed)?, &cli.out)?),
        Command::Render3d { config } => report(run_3d(&load(&config, cli.seed)?, &cli.out)?),
        Command::Demo => report(demo::write_demo(&cli.out)?),
        Command::Serve { config, port } => {
            let cfg = load(&config, cli.seed)?;
            tokio::runtime::Runtime::new()?.block_on(server::serve(cfg, port, &cli.out))?;
        }
    }
    Ok(())
}
