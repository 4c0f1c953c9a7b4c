//! Command-line front end. Every subcommand is a thin wrapper over library
//! calls; [`run`] returns the process exit code (0 ok, 1 processing error,
//! 2 bad arguments).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bench::{run_bench, BenchConfig, SuiteKind};
use crate::decode::{decode_boundary, decode_sdt, decode_ss, DecodeParams, DEFAULT_MIN_SIZE};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, write_reports_csv};
use crate::raster::{
    energy_paths, read_energy_map, read_label_map, read_raw_f32, write_energy_map, write_label_map, write_raw_f32,
    BinaryMask, EnergyMap, BACKGROUND,
};
use crate::representations::{
    boundary_energy, dequantize, encode_boundary, encode_dt, encode_sdt, encode_ss, quantize, QuantParams, SdtParams,
    SkeletonScales, DEFAULT_LEVEL,
};
use crate::synth::{generate, KeyValues, SceneSpec};

#[derive(Parser, Debug)]
#[command(
    name = "sdt",
    version,
    about = "Skeleton-aware distance transform for instance label maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Repr {
    Sdt,
    Dt,
    Boundary,
    Ss,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Suite {
    Roundtrip,
    Robustness,
    Ablation,
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("must be > 0".into())
    }
}

fn non_negative(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("must be >= 0".into())
    }
}

fn open_unit(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err("must lie strictly between 0 and 1".into())
    }
}

fn bins(s: &str) -> std::result::Result<u16, String> {
    let v: u16 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 1 {
        Ok(v)
    } else {
        Err("must be >= 1".into())
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Encode a label map into an energy map (or boundary mask / skeleton with scales).
    Encode {
        #[arg(long = "in")]
        input: PathBuf,
        /// Output base path; `.f32` and `.json` are appended.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "sdt")]
        repr: Repr,
        #[arg(long, default_value = "0.8", value_parser = positive)]
        alpha: f64,
        #[arg(long, default_value = "2.0", value_parser = non_negative)]
        sigma: f64,
        /// Quantize to K bins and store bin midpoints.
        #[arg(long, value_parser = bins)]
        bins: Option<u16>,
        /// Seed threshold recorded in the sidecar.
        #[arg(long, default_value = "0.7", value_parser = open_unit)]
        theta: f64,
    },
    /// Decode an energy map back into a label map.
    Decode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "0.7", value_parser = open_unit)]
        theta: f64,
        #[arg(long = "min-size", default_value_t = DEFAULT_MIN_SIZE)]
        min_size: usize,
        #[arg(long = "fill-holes")]
        fill_holes: bool,
    },
    /// Compare a predicted label map with ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// CSV report (one image row plus the aggregate row).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate synthetic scenes from a key-value config.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment suite.
    Bench {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
}

/// Extra description written next to every encoded output as `<base>.repr.json`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReprMeta {
    representation: Repr,
    /// How to read the raster values.
    convention: String,
}

fn repr_path(base: &Path) -> PathBuf {
    let (raster, _) = energy_paths(base);
    raster.with_extension("repr.json")
}

fn scales_path(base: &Path) -> PathBuf {
    let (raster, _) = energy_paths(base);
    raster.with_extension("scales.f32")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Parses `args` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Encode {
            input,
            out,
            repr,
            alpha,
            sigma,
            bins,
            theta,
        } => encode(&input, &out, repr, alpha, sigma, bins, theta),
        Command::Decode {
            input,
            out,
            theta,
            min_size,
            fill_holes,
        } => {
            let params = DecodeParams::new(theta, min_size, fill_holes)?;
            let labels = decode(&input, &params)?;
            write_label_map(&labels, &out)
        }
        Command::Eval { pred, gt, out } => {
            let (p, g) = (read_label_map(&pred)?, read_label_map(&gt)?);
            let report = evaluate(&p, &g)?;
            for d in &report.diagnostics {
                eprintln!("note: {d}");
            }
            if let Some(out) = out {
                let name = pred
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let file = fs::File::create(&out).map_err(|e| Error::io(&out, e))?;
                write_reports_csv(file, &[(name, report.clone())])?;
            }
            println!("{:?},{:?},{:?}", report.f1, report.obj_dice, report.obj_hausdorff);
            Ok(())
        }
        Command::Synth { config, out } => synth(config.as_deref(), &out),
        Command::Bench {
            suite,
            config,
            out,
            jobs,
        } => {
            let kind = match suite {
                Suite::Roundtrip => SuiteKind::Roundtrip,
                Suite::Robustness => SuiteKind::Robustness,
                Suite::Ablation => SuiteKind::Ablation,
            };
            let cfg = BenchConfig::load(config.as_deref())?;
            let result = run_bench(kind, &cfg, &out, jobs)?;
            println!("{}", result.manifest.display());
            Ok(())
        }
    }
}

fn encode(input: &Path, out: &Path, repr: Repr, alpha: f64, sigma: f64, bins: Option<u16>, theta: f64) -> Result<()> {
    let map = read_label_map(input)?;
    let params = SdtParams::new(alpha, SdtParams::<f64>::default().epsilon, sigma, DEFAULT_LEVEL)?;
    let quantized = |e: EnergyMap<f64>| -> Result<EnergyMap<f64>> {
        match bins {
            Some(k) => {
                let q = QuantParams::new(k)?;
                dequantize(&quantize(&e, q), q)
            }
            None => Ok(e),
        }
    };
    let (energy, convention) = match repr {
        Repr::Sdt | Repr::Dt => {
            let enc = if repr == Repr::Sdt {
                encode_sdt(&map, &params)?
            } else {
                encode_dt(&map)?
            };
            for d in &enc.diagnostics {
                eprintln!("note: {d}");
            }
            (
                quantized(enc.energy)?,
                "energy in [0, 1] on foreground, -1 on background",
            )
        }
        Repr::Boundary => (
            boundary_energy(&encode_boundary(&map), &map.foreground())?,
            "0 = boundary, 1 = interior, -1 = background",
        ),
        Repr::Ss => {
            let ss = encode_ss(&map, &params)?;
            let (prob, scale) = ss.to_channels();
            let fg = map.foreground();
            let prob = prob
                .iter()
                .zip(fg.bits())
                .map(|(&p, &f)| if f { p } else { BACKGROUND })
                .collect();
            let scale32: Vec<f32> = scale.iter().map(|&s| s as f32).collect();
            write_raw_f32(scales_path(out), &scale32)?;
            (
                EnergyMap::new(map.width(), map.height(), prob)?,
                "1 = skeleton, 0 = other foreground, -1 = background; scales in <base>.scales.f32",
            )
        }
    };
    write_energy_map(&energy.cast::<f32>(), alpha, theta, u32::from(bins.unwrap_or(0)), out)?;
    write_json(
        &repr_path(out),
        &ReprMeta {
            representation: repr,
            convention: convention.into(),
        },
    )
}

/// Decodes whatever `encode` wrote at `input`. Without a `.repr.json` file the
/// raster is treated as an energy map.
pub fn decode(input: &Path, params: &DecodeParams<f64>) -> Result<crate::raster::LabelMap> {
    let (energy, _) = read_energy_map(input)?;
    let meta_path = repr_path(input);
    let repr = if meta_path.exists() {
        let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        serde_json::from_str::<ReprMeta>(&text)?.representation
    } else {
        Repr::Sdt
    };
    let p32 = DecodeParams::<f32>::new(params.theta as f32, params.min_size, params.fill_holes)?;
    let decoded = match repr {
        Repr::Sdt | Repr::Dt => decode_sdt(&energy, &p32)?,
        Repr::Boundary => {
            let fg = energy.foreground();
            let boundary = BinaryMask::new(
                energy.width(),
                energy.height(),
                energy.values().iter().map(|&v| (0.0..0.5).contains(&v)).collect(),
            )?;
            decode_boundary(&boundary, &fg, &p32)?
        }
        Repr::Ss => {
            let (w, h) = (energy.width(), energy.height());
            let scales = read_raw_f32(scales_path(input), w * h)?;
            let prob: Vec<f32> = energy.values().iter().map(|&v| v.max(0.0)).collect();
            decode_ss(&SkeletonScales::from_channels(w, h, &prob, &scales)?, &p32)?
        }
    };
    for d in &decoded.diagnostics {
        eprintln!("note: {d}");
    }
    Ok(decoded.labels)
}

fn synth(config: Option<&Path>, out: &Path) -> Result<()> {
    let mut kv = match config {
        Some(p) => KeyValues::load(p)?,
        None => KeyValues::default(),
    };
    let scenes: usize = kv.take_or("scenes", 1)?;
    let spec = SceneSpec::from_key_values(&mut kv, &SceneSpec::default())?;
    kv.finish()?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let resolved = format!("scenes = {scenes}\n{}", spec.to_key_values());
    let resolved_path = out.join("spec.resolved.cfg");
    fs::write(&resolved_path, resolved).map_err(|e| Error::io(&resolved_path, e))?;
    for i in 0..scenes {
        let s = SceneSpec {
            seed: spec.seed + i as u64,
            ..spec.clone()
        };
        write_label_map(&generate(&s)?, out.join(format!("scene_{i:03}.png")))?;
    }
    Ok(())
}
