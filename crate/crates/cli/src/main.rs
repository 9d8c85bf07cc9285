//! `antibunch`: simulate photon-counting stacks of antibunching emitters and
//! reconstruct correlation maps from them.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use antibunch::analysis::{
    defocus_series_with, resolution_report, DefocusOptions, REFERENCE_DEFOCUS_NM,
};
use antibunch::camera::{simulate_stack, FrameStack};
use antibunch::config::RunConfig;
use antibunch::correlator::{
    mean_image_map, offset_from_moments, second_order_from_moments, temporal_g2_blocks,
    temporal_g3_blocks, third_order_from_moments, CorrelationMap, MapOptions, MomentAccumulator,
    MomentPlan, PairConfig, Roi, TripleConfig, DEFAULT_MIN_SEPARATION,
};
use antibunch::io::{read_map, read_stack, write_map, write_png_preview, write_stack};
use antibunch::{par, Error, Result};
use clap::{Args, Parser, Subcommand};

const STACK_FILE: &str = "stack.absk";
const CONFIG_FILE: &str = "run.toml";

#[derive(Parser)]
#[command(name = "antibunch", version, about)]
struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunOverrides {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    frames: Option<u64>,
}

impl RunOverrides {
    fn load(&self) -> Result<RunConfig> {
        let text = std::fs::read_to_string(&self.config).map_err(|e| io_err(&self.config, e))?;
        let mut cfg = RunConfig::from_toml(&text)?;
        if let Some(s) = self.seed {
            cfg.camera.seed = s;
        }
        if let Some(n) = self.frames {
            cfg.acquisition.n_frames = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a frame stack; writes stack.absk and run.toml into --out.
    Simulate {
        #[command(flatten)]
        run: RunOverrides,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Build order-1 and order-N maps from a stack.
    Correlate {
        stack: PathBuf,
        #[arg(long, default_value_t = 2)]
        order: u8,
        /// Fixed offset; estimated from distant pixel pairs when omitted.
        #[arg(long)]
        offset: Option<f64>,
        /// Run config of the stack; defaults to run.toml beside it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        interpolation: usize,
    },
    /// FWHM ladder of an order-1 map and its antibunching maps.
    Analyze {
        maps: Vec<PathBuf>,
        /// Accept maps from different runs.
        #[arg(long)]
        force: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrated signal versus focal offset.
    Defocus {
        #[command(flatten)]
        run: RunOverrides,
        /// Focal offsets (nm), comma separated; must include 0.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        z: Option<Vec<f64>>,
        #[arg(long)]
        offset: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Temporal g2 (or g3 with --order 3) of a pixel region, as a table.
    G2 {
        stack: PathBuf,
        #[arg(long, default_value_t = 10)]
        max_lag: usize,
        /// Region `x0,y0,width,height` in pixels; the whole frame by default.
        #[arg(long, value_delimiter = ',')]
        roi: Option<Vec<usize>>,
        #[arg(long, default_value_t = 10)]
        blocks: usize,
        #[arg(long, default_value_t = 2)]
        order: u8,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_)
        | Error::Validation { .. }
        | Error::InvalidArgument(_)
        | Error::ResourceExhausted { .. }
        | Error::DigestMismatch { .. } => 2,
        Error::Io { .. } | Error::Format(_) => 3,
        Error::Statistical(_) | Error::FitDidNotConverge { .. } => 4,
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn hex(d: &[u8; 32]) -> String {
    d.iter().map(|b| format!("{b:02x}")).collect()
}

fn sibling_config(stack: &Path, explicit: &Option<PathBuf>) -> PathBuf {
    explicit.clone().unwrap_or_else(|| {
        stack
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(CONFIG_FILE)
    })
}

/// Reads a stack together with its run config and checks that they belong
/// to the same run.
fn load_stack(stack: &Path, config: &Option<PathBuf>) -> Result<(FrameStack, RunConfig)> {
    let cfg_path = sibling_config(stack, config);
    let text = std::fs::read_to_string(&cfg_path).map_err(|e| io_err(&cfg_path, e))?;
    let cfg = RunConfig::from_toml(&text)?;
    let s = read_stack(stack, Some(cfg.grid))?;
    if s.meta.digest != cfg.digest() {
        return Err(Error::DigestMismatch {
            first: stack.display().to_string(),
            second: cfg_path.display().to_string(),
        });
    }
    Ok((s, cfg))
}

fn cmd_simulate(run: &RunOverrides, out: &Path) -> Result<()> {
    let cfg = run.load()?;
    create_dir(out)?;
    let start = Instant::now();
    let stack = simulate_stack(
        &cfg.scene,
        &cfg.psf,
        &cfg.grid,
        &cfg.camera,
        &cfg.acquisition,
        cfg.digest(),
    )?;
    let stack_path = out.join(STACK_FILE);
    write_stack(&stack, &stack_path)?;
    write_text(&out.join(CONFIG_FILE), &cfg.to_toml())?;
    println!("frames = {}", stack.n_frames());
    println!(
        "mean_events_per_frame = {:.6}",
        stack.mean_events_per_frame()
    );
    println!("seed = {}", stack.meta.seed);
    println!("digest = \"{}\"", hex(&stack.meta.digest));
    println!("elapsed_s = {:.3}", start.elapsed().as_secs_f64());
    println!("stack = \"{}\"", stack_path.display());
    Ok(())
}

fn cmd_correlate(
    stack_path: &Path,
    order: u8,
    offset: Option<f64>,
    config: &Option<PathBuf>,
    out: &Path,
    interpolation: usize,
) -> Result<()> {
    if order != 2 && order != 3 {
        return Err(Error::InvalidArgument(format!(
            "unsupported order {order}; expected 2 or 3"
        )));
    }
    let (stack, _) = load_stack(stack_path, config)?;
    let opts = MapOptions {
        interpolation,
        ..MapOptions::default()
    };
    let pairs = PairConfig::defaults();
    let triples = TripleConfig::defaults();
    let mut plan_pairs = if order == 2 {
        pairs.clone()
    } else {
        Vec::new()
    };
    if offset.is_none() {
        let s = DEFAULT_MIN_SEPARATION as i32;
        plan_pairs.extend([PairConfig { offset: [s, 0] }, PairConfig { offset: [0, s] }]);
    }
    let plan = MomentPlan::new(
        stack.layout(),
        &plan_pairs,
        if order == 3 { &triples } else { &[] },
    );
    let acc = MomentAccumulator::from_stack(&stack, plan);
    let offset = match offset {
        Some(o) => o,
        None => {
            let est = offset_from_moments(&acc, DEFAULT_MIN_SEPARATION)?;
            println!("offset_estimate = {:e}", est.value);
            println!("offset_stderr = {:e}", est.stderr);
            println!("offset_pairs = {}", est.pairs);
            est.value
        }
    };
    let m1 = mean_image_map(&acc, &stack.grid, &stack.meta, &opts)?;
    let mn = if order == 2 {
        second_order_from_moments(&acc, &stack.grid, &stack.meta, &pairs, offset, &opts)?
    } else {
        third_order_from_moments(&acc, &stack.grid, &stack.meta, &triples, offset, &opts)?
    };
    create_dir(out)?;
    for m in [&m1, &mn] {
        let base = out.join(format!("order{}", m.order));
        write_map(m, &base.with_extension("abcm"))?;
        write_png_preview(m, &base.with_extension("png"))?;
        println!(
            "order{} = \"{}\"  # {}x{} at {} nm",
            m.order,
            base.with_extension("abcm").display(),
            m.width,
            m.height,
            m.pitch_nm
        );
    }
    Ok(())
}

fn cmd_analyze(paths: &[PathBuf], force: bool, out: &Option<PathBuf>) -> Result<()> {
    if paths.is_empty() {
        return Err(Error::InvalidArgument("no maps given".into()));
    }
    let maps: Vec<CorrelationMap> = paths.iter().map(|p| read_map(p)).collect::<Result<_>>()?;
    if !force {
        for (p, m) in paths.iter().zip(&maps).skip(1) {
            if m.digest != maps[0].digest || m.seed != maps[0].seed {
                return Err(Error::DigestMismatch {
                    first: paths[0].display().to_string(),
                    second: p.display().to_string(),
                });
            }
        }
    }
    let base = maps
        .iter()
        .find(|m| m.order == 1)
        .ok_or_else(|| Error::InvalidArgument("an order-1 map is required".into()))?;
    let others: Vec<&CorrelationMap> = maps.iter().filter(|m| m.order != 1).collect();
    let report = resolution_report(base, &others, None)?;
    let json = report.to_json();
    println!("{json}");
    if let Some(path) = out {
        write_text(path, &json)?;
    }
    Ok(())
}

fn cmd_defocus(
    run: &RunOverrides,
    z: &Option<Vec<f64>>,
    offset: Option<f64>,
    out: &Option<PathBuf>,
) -> Result<()> {
    let cfg = run.load()?;
    let z_list = z.clone().unwrap_or_else(|| REFERENCE_DEFOCUS_NM.to_vec());
    let opts = DefocusOptions {
        offset,
        ..DefocusOptions::default()
    };
    let series = defocus_series_with(
        &cfg.scene,
        &cfg.psf,
        &cfg.grid,
        &cfg.camera,
        &z_list,
        cfg.acquisition.n_frames,
        &opts,
    )?;
    let mut table = String::from("# z_nm\torder1\torder2\n");
    for i in 0..series.z_nm.len() {
        let _ = writeln!(
            table,
            "{}\t{:.6}\t{:.6}",
            series.z_nm[i], series.order1[i], series.order2[i]
        );
    }
    print!("{table}");
    if let Some(path) = out {
        let json =
            serde_json::to_string_pretty(&series).map_err(|e| Error::Format(e.to_string()))?;
        write_text(path, &json)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_g2(
    stack_path: &Path,
    max_lag: usize,
    roi: &Option<Vec<usize>>,
    blocks: usize,
    order: u8,
    config: &Option<PathBuf>,
    out: &Option<PathBuf>,
) -> Result<()> {
    let (stack, _) = load_stack(stack_path, config)?;
    let roi = match roi.as_deref() {
        None => Roi::rect(0, 0, stack.grid.width, stack.grid.height),
        Some([x0, y0, w, h]) => Roi::rect(*x0, *y0, *w, *h),
        Some(_) => {
            return Err(Error::InvalidArgument(
                "--roi takes x0,y0,width,height".into(),
            ))
        }
    };
    let l = max_lag as i64;
    let mut table = String::new();
    match order {
        2 => {
            let b = temporal_g2_blocks(&stack, &roi, max_lag, blocks)?;
            let g = b.combined();
            table.push_str("# tau\tg2\tstderr\n");
            for tau in -l..=l {
                let se = b.jackknife(|x| x.at(tau)).stderr;
                let _ = writeln!(table, "{tau}\t{:.6}\t{:.6}", g.at(tau), se);
            }
            let dip = b.jackknife(|x| x.dip_ratio());
            let _ = writeln!(
                table,
                "# g2(0)/plateau = {:.6} +- {:.6}",
                dip.value, dip.stderr
            );
        }
        3 => {
            let b = temporal_g3_blocks(&stack, &roi, max_lag, blocks)?;
            let g = b.combined();
            table.push_str("# tau1\ttau2\tg3\n");
            for t1 in -l..=l {
                for t2 in -l..=l {
                    let _ = writeln!(table, "{t1}\t{t2}\t{:.6}", g.at(t1, t2));
                }
            }
            let _ = writeln!(
                table,
                "# center = {:.6}, ridge = {:.6}, plateau = {:.6}",
                g.center(),
                g.ridge(),
                g.plateau()
            );
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "unsupported order {order}; expected 2 or 3"
            )))
        }
    }
    match out {
        Some(path) => write_text(path, &table),
        None => {
            print!("{table}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let threads = cli.threads;
    if threads == Some(0) {
        return Err(Error::InvalidArgument(
            "--threads must be at least 1".into(),
        ));
    }
    par::with_threads(threads.unwrap_or(0), || match &cli.command {
        Command::Simulate { run, out } => cmd_simulate(run, out),
        Command::Correlate {
            stack,
            order,
            offset,
            config,
            out,
            interpolation,
        } => cmd_correlate(stack, *order, *offset, config, out, *interpolation),
        Command::Analyze { maps, force, out } => cmd_analyze(maps, *force, out),
        Command::Defocus {
            run,
            z,
            offset,
            out,
        } => cmd_defocus(run, z, *offset, out),
        Command::G2 {
            stack,
            max_lag,
            roi,
            blocks,
            order,
            config,
            out,
        } => cmd_g2(stack, *max_lag, roi, *blocks, *order, config, out),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
