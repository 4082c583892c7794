//! `palmiom` command-line front end.
//!
//! Exit codes: 0 success or accept, 1 reject, 2 any error (usage errors included).

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use palmiom::eval::{evaluate, EvalOptions};
use palmiom::imaging::{pad_and_block, save_pgm_with_comments};
use palmiom::keypoints::{bin_keypoints, detect_surf, point_feature};
use palmiom::orientation::{orientation_map, FusionParams, MfratBank};
use palmiom::{
    collision_rate, deserialize, load_pgm, parse_seed, post_transform_score, scan_dataset,
    serialize, synth_palm, Config, GrayImage, HessianParams, Pipeline, Protocol, RevocableTemplate,
    SynthSpec,
};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "palmiom", version, about = "Cancelable palmprint templates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus as `<out>/<id>/<sample>.pgm`.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..))]
        ids: u32,
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
        samples: u32,
        #[arg(long, value_parser = seed_arg, default_value = "0x5eed")]
        seed: u64,
    },
    /// Extract, fuse and hash one image into a template file.
    Enroll {
        image: PathBuf,
        #[arg(long, value_parser = seed_arg)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Hash a probe image and match it against an enrolled template.
    Verify {
        image: PathBuf,
        #[arg(long)]
        template: PathBuf,
        #[arg(long, value_parser = seed_arg)]
        seed: u64,
        /// Accept when the score is at least this value.
        #[arg(long)]
        threshold: f64,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Run the plain and hashed protocols over a dataset directory.
    Evaluate {
        dataset: PathBuf,
        #[arg(long, value_parser = seed_arg)]
        seed: u64,
        /// Output directory for report.csv, summary.txt and the ROC tables.
        #[arg(long)]
        report: PathBuf,
        /// Score every cross-identity sample pair instead of first samples only.
        #[arg(long)]
        full_cross: bool,
        /// Impostor pair cap for `--full-cross`.
        #[arg(long, default_value_t = 20_000, requires = "full_cross")]
        cap: usize,
        #[arg(long, default_value_t = 20)]
        timing_samples: usize,
        #[arg(long, default_value_t = 10)]
        revocation_pairs: usize,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Reissue a template under a new seed and report its similarity to the old one.
    Revoke {
        image: PathBuf,
        #[arg(long, value_parser = seed_arg)]
        old_seed: u64,
        #[arg(long, value_parser = seed_arg)]
        new_seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Write the per-pixel orientation code map as a PGM (intensity 21 * code).
    DumpOrientation {
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Write one CSV row per block: representative point, LBP code, detections.
    DumpKeypoints {
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
    },
}

#[derive(Args)]
struct ConfigArg {
    /// `key=value` config file; missing keys keep their defaults.
    #[arg(long = "config")]
    path: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<Config> {
        let Some(path) = &self.path else {
            return Ok(Config::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Config::parse(&text).with_context(|| format!("config {}", path.display()))
    }

    fn pipeline(&self) -> Result<Pipeline> {
        Ok(Pipeline::new(self.load()?)?)
    }
}

fn seed_arg(text: &str) -> Result<u64, String> {
    parse_seed(text).map_err(|e| format!("{e} (expected decimal or 0x-prefixed hex)"))
}

fn read_image(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    load_pgm(&bytes).with_context(|| format!("decoding {}", path.display()))
}

fn read_template(path: &Path) -> Result<RevocableTemplate> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    deserialize(&bytes).with_context(|| format!("decoding template {}", path.display()))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn synth_echo(spec: &SynthSpec, id: usize, sample: usize) -> Vec<String> {
    vec![
        format!("seed={:#x}", spec.seed),
        format!("identity={id} sample={sample}"),
        format!("size={} lines={} wrinkles={}", spec.size, spec.lines, spec.wrinkles),
        format!("translate_px={} rotate_rad={}", spec.translate_px, spec.rotate_rad),
        format!("noise_sigma={}", spec.noise_sigma),
        format!("texture_amplitude={} texture_waves={}", spec.texture_amplitude, spec.texture_waves),
    ]
}

fn synth(out: &Path, ids: usize, samples: usize, seed: u64) -> Result<()> {
    let spec = SynthSpec {
        identities: ids,
        samples,
        seed,
        ..SynthSpec::default()
    };
    for id in 0..ids {
        for s in 0..samples {
            let img = synth_palm(&spec, id, s);
            let path = out.join(format!("{id:04}")).join(format!("{s:04}.pgm"));
            write(&path, save_pgm_with_comments(&img, &synth_echo(&spec, id, s)))?;
        }
    }
    println!("wrote {} images ({ids} identities x {samples} samples) to {}", ids * samples, out.display());
    Ok(())
}

fn enroll(image: &Path, seed: u64, out: &Path, config: &ConfigArg) -> Result<()> {
    let pipeline = config.pipeline()?;
    let template = pipeline.enroll(&read_image(image)?, seed)?;
    let bytes = serialize(&template);
    write(out, &bytes)?;
    println!("d={} l={} k={}", template.dimension(), template.l(), template.k());
    println!("wrote {} ({} bytes)", out.display(), bytes.len());
    Ok(())
}

/// Returns whether the probe was accepted.
fn verify(image: &Path, template: &Path, seed: u64, threshold: f64, config: &ConfigArg) -> Result<bool> {
    ensure!(!threshold.is_nan(), "threshold must be a number");
    let enrolled = read_template(template)?;
    // A different seed is a protocol error, never a silent reject.
    ensure!(
        enrolled.seed() == seed,
        "template was enrolled with seed {:#x}, probe seed is {seed:#x}",
        enrolled.seed()
    );
    let probe = config.pipeline()?.enroll(&read_image(image)?, seed)?;
    let score = post_transform_score(&probe, &enrolled)?;
    let accept = score.value() >= threshold;
    println!("score={score} threshold={threshold} {}", if accept { "accept" } else { "reject" });
    Ok(accept)
}

struct EvaluateArgs<'a> {
    dataset: &'a Path,
    seed: u64,
    report: &'a Path,
    options: EvalOptions,
    config: &'a ConfigArg,
}

fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let pipeline = args.config.pipeline()?;
    let ds = scan_dataset(args.dataset)?;
    let report = evaluate(&ds, &pipeline, args.seed, &args.options)?;
    let written = report.write_to(args.report)?;
    print!("{}", report.summary());
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn revoke(image: &Path, old_seed: u64, new_seed: u64, out: &Path, config: &ConfigArg) -> Result<()> {
    if old_seed == new_seed {
        bail!("--old-seed and --new-seed must differ");
    }
    let pipeline = config.pipeline()?;
    let img = read_image(image)?;
    let old = pipeline.enroll(&img, old_seed)?;
    let new = pipeline.enroll(&img, new_seed)?;
    write(out, serialize(&new))?;
    let rate = collision_rate(&old, &new)?.value();
    let k = new.k() as f64;
    let expected = 1.0 / k;
    let spread = (expected * (1.0 - expected) / new.l() as f64).sqrt();
    println!("cross_seed_score={rate:.4} expected={expected:.4} std={spread:.4}");
    println!("wrote {} (seed {new_seed:#x})", out.display());
    Ok(())
}

fn dump_orientation(image: &Path, out: &Path, config: &ConfigArg) -> Result<()> {
    let cfg = config.load()?;
    let pipeline = Pipeline::new(cfg.clone())?;
    let grid = pad_and_block(&read_image(image)?, cfg.block_size, cfg.block_count)?;
    let bank = MfratBank::new(cfg.mfrat_window)?;
    let fusion = FusionParams {
        r: cfg.fusion_r,
        cyclic_wrap: cfg.cyclic_wrap,
    };
    let map = orientation_map(grid.image(), &bank, &fusion);
    let mut echo = pipeline.config().echo_lines();
    echo.push("intensity=21*code".into());
    write(out, save_pgm_with_comments(&map.to_image(), &echo))?;
    println!("wrote {} ({}x{})", out.display(), map.width(), map.height());
    Ok(())
}

fn dump_keypoints(image: &Path, out: &Path, config: &ConfigArg) -> Result<()> {
    let cfg = config.load()?;
    Pipeline::new(cfg.clone())?;
    let grid = pad_and_block(&read_image(image)?, cfg.block_size, cfg.block_count)?;
    let params = HessianParams {
        filter_sizes: cfg.hessian_sizes.clone(),
        threshold: cfg.hessian_threshold,
        ..HessianParams::default()
    };
    let detections = detect_surf(grid.image(), &params);
    let bins = bin_keypoints(&grid, &detections);
    let feature = point_feature(&grid, &params);
    let mut csv = String::new();
    for line in cfg.echo_lines() {
        let _ = writeln!(csv, "# {line}");
    }
    csv.push_str("block,x,y,lbp,detections\n");
    for (b, (&(x, y), &code)) in feature.points().iter().zip(feature.codes()).enumerate() {
        let _ = writeln!(csv, "{b},{x},{y},{code},{}", bins[b].len());
    }
    write(out, csv)?;
    println!("wrote {} ({} blocks, {} detections)", out.display(), feature.len(), detections.len());
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Synth { out, ids, samples, seed } => synth(&out, ids as usize, samples as usize, seed)?,
        Command::Enroll { image, seed, out, config } => enroll(&image, seed, &out, &config)?,
        Command::Verify {
            image,
            template,
            seed,
            threshold,
            config,
        } => {
            if !verify(&image, &template, seed, threshold, &config)? {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Evaluate {
            dataset,
            seed,
            report,
            full_cross,
            cap,
            timing_samples,
            revocation_pairs,
            config,
        } => {
            let protocol = if full_cross {
                Protocol::FullCross { cap, seed }
            } else {
                Protocol::FirstSample
            };
            let options = EvalOptions {
                protocol,
                timing_samples,
                revocation_pairs,
                ..EvalOptions::default()
            };
            run_evaluate(EvaluateArgs {
                dataset: &dataset,
                seed,
                report: &report,
                options,
                config: &config,
            })?
        }
        Command::Revoke {
            image,
            old_seed,
            new_seed,
            out,
            config,
        } => revoke(&image, old_seed, new_seed, &out, &config)?,
        Command::DumpOrientation { image, out, config } => dump_orientation(&image, &out, &config)?,
        Command::DumpKeypoints { image, out, config } => dump_keypoints(&image, &out, &config)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with status 2 on usage errors, matching the error code below.
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
