use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use fourtran_core::harness::{
    bench, bench_inputs, gen_scene, run_scene, verify, Scene, SceneOptions, ShapeId, VerifyMode, GRID_2D, GRID_3D,
};
use fourtran_core::transporter::Config;

const THREADS_ENV: &str = "FOURTRAN_THREADS";

#[derive(Parser)]
#[command(name = "fourtran", version, about = "Bi-equivariant pick-and-place inference on synthetic scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scene: an SFLD observation plus a `.json` sidecar.
    GenScene {
        /// l_block_2d, kit_shape_2d(k), peg_cube_3d or l_bracket_3d.
        #[arg(long)]
        shape: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Draw poses from the grid-exact subgroup.
        #[arg(long)]
        grid_exact: bool,
        /// Put the slot where the object already is.
        #[arg(long)]
        null_task: bool,
        /// Cells per axis, comma separated.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<usize>>,
        /// Meters per cell.
        #[arg(long)]
        cell_size: Option<f64>,
        /// Use the full-size 72×96×56 grid at 0.94 cm (3D only).
        #[arg(long)]
        full_size: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run inference on a scene and score it; exit code 2 below the low threshold.
    Run {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory for actions.json, summaries.json and eval.json.
        #[arg(long, default_value = "fourtran-run")]
        out: PathBuf,
    },
    /// Run an invariant suite on a scene and print a JSON report.
    Verify {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// equivariance, oracle or steerability.
        #[arg(long)]
        mode: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time every pipeline stage at each thread count and compare output hashes.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<usize>>,
        /// Thread counts, comma separated; defaults to 1 and the configured count.
        #[arg(long, value_delimiter = ',')]
        threads: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
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
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV}={v} is not a thread count"))?;
            if n == 0 {
                bail!("{THREADS_ENV} must be at least 1");
            }
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    let Some(path) = path else {
        return Ok(Config::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config = Config::from_json_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(config)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

fn print_json(value: &impl Serialize, out: Option<&Path>) -> Result<()> {
    if let Some(path) = out {
        write_json(path, value)?;
    }
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

/// `Ok(false)` is a task failure (exit 2); errors are usage or IO failures (exit 1).
fn execute(cli: Cli) -> Result<bool> {
    let env_threads = threads_from_env()?;
    if let Some(n) = env_threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::GenScene { shape, seed, grid_exact, null_task, grid, cell_size, full_size, out } => {
            let shape: ShapeId = shape.parse()?;
            let (grid, cell_size) = if full_size {
                if shape.dim() != 3 {
                    bail!("--full-size applies to 3D shapes only");
                }
                (Some(vec![72, 96, 56]), Some(0.0094))
            } else {
                (grid, cell_size)
            };
            let opts = SceneOptions { grid_exact, null_task, grid, cell_size };
            let scene = gen_scene(shape, seed, &opts)?;
            scene.save(&out)?;
            println!("{}", serde_json::to_string_pretty(&scene.ground_truth)?);
            Ok(true)
        }
        Command::Run { scene, config, out } => {
            let config = load_config(config.as_deref())?;
            let scene = Scene::load(&scene).with_context(|| format!("loading scene {}", scene.display()))?;
            let pipeline = fourtran_core::transporter::Pipeline::new(&config, scene.meta.dim)?;
            let (inference, eval) = run_scene(&scene, &pipeline)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            #[derive(Serialize)]
            struct Actions<'a> {
                pick: &'a fourtran_core::transporter::Action,
                place: &'a fourtran_core::transporter::Action,
                pick_coarse: &'a fourtran_core::transporter::Action,
                place_coarse: &'a fourtran_core::transporter::Action,
            }
            write_json(
                &out.join("actions.json"),
                &Actions {
                    pick: &inference.pick,
                    place: &inference.place,
                    pick_coarse: &inference.pick_coarse,
                    place_coarse: &inference.place_coarse,
                },
            )?;
            write_json(
                &out.join("summaries.json"),
                &serde_json::json!({ "pick": inference.pick_summary, "place": inference.place_summary }),
            )?;
            write_json(&out.join("eval.json"), &eval)?;
            println!("{}", serde_json::to_string_pretty(&eval)?);
            Ok(eval.success_low)
        }
        Command::Verify { scene, config, mode, out } => {
            let config = load_config(config.as_deref())?;
            let mode: VerifyMode = mode.parse()?;
            let scene = Scene::load(&scene).with_context(|| format!("loading scene {}", scene.display()))?;
            let report = verify(&scene, &config, mode)?;
            print_json(&report, out.as_deref())?;
            Ok(report.pass)
        }
        Command::Bench { config, dim, grid, threads, seed, out } => {
            let config = load_config(config.as_deref())?;
            let grid = grid.unwrap_or_else(|| if dim == 2 { GRID_2D.to_vec() } else { GRID_3D.to_vec() });
            let threads = threads.unwrap_or_else(|| {
                let n = env_threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
                if n == 1 {
                    vec![1]
                } else {
                    vec![1, n]
                }
            });
            if threads.contains(&0) {
                bail!("thread counts must be at least 1");
            }
            let (o, template) = bench_inputs(&config, dim, &grid, seed)?;
            let report = bench(&config, &o, &template, &threads)?;
            print_json(&report, out.as_deref())?;
            Ok(report.deterministic)
        }
    }
}
