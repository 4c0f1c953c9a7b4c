//! Experiment driver: round-trip fidelity, robustness of each representation
//! under perturbation, and parameter sweeps. Results go to CSV files, SVG
//! charts drawn from those files, and a manifest with seeds and hashes.
//!
//! Scenes run in parallel on a pool of `jobs` threads; results are collected
//! in scene order, so outputs do not depend on the thread count.

mod plot;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

pub use plot::{plot_csv, PlotSpec};

use crate::decode::{decode_boundary, decode_sdt, decode_ss, extract_seeds, DecodeParams};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, per_instance_iou, EvalReport};
use crate::raster::{BinaryMask, EnergyMap, LabelMap, PixelSet};
use crate::representations::{
    boundary_energy, dequantize, encode_boundary, encode_dt, encode_sdt, encode_ss, quantize, QuantParams, SdtParams,
    SkeletonScales,
};
use crate::synth::{
    dropout_mask, family_suite, generate, perturb_boundary, perturb_energy, perturb_energy_dropout, standard_suite,
    Family, KeyValues, PerturbKind, PerturbSpec, SceneSpec,
};

/// Version of the CSV column layouts written here.
pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Representation {
    Boundary,
    Dt,
    Sdt,
    Ss,
}

impl Representation {
    pub const ALL: [Representation; 4] = [
        Representation::Boundary,
        Representation::Dt,
        Representation::Sdt,
        Representation::Ss,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Representation::Boundary => "boundary",
            Representation::Dt => "dt",
            Representation::Sdt => "sdt",
            Representation::Ss => "ss",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown representation `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuiteKind {
    Roundtrip,
    Robustness,
    Ablation,
}

impl FromStr for SuiteKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "roundtrip" => Ok(SuiteKind::Roundtrip),
            "robustness" => Ok(SuiteKind::Robustness),
            "ablation" => Ok(SuiteKind::Ablation),
            _ => Err(Error::Config(format!("unknown suite `{s}`"))),
        }
    }
}

impl fmt::Display for SuiteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SuiteKind::Roundtrip => "roundtrip",
            SuiteKind::Robustness => "robustness",
            SuiteKind::Ablation => "ablation",
        })
    }
}

/// Maps `f` over `items` on a pool of `jobs` threads (0 = one per core),
/// returning results in input order.
pub fn run_parallel<I, O, F>(jobs: usize, items: &[I], f: F) -> Result<Vec<O>>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> Result<O> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParam(format!("thread pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

// ---------------------------------------------------------------- round trip

/// Outcome of one scene's encode/decode round trip.
#[derive(Clone, Debug)]
pub struct SceneOutcome {
    pub spec: SceneSpec,
    pub instances: usize,
    pub decoded: usize,
    /// Best IoU of each ground-truth instance, in id order.
    pub ious: Vec<f64>,
    /// Number of pixels above the seed threshold.
    pub seed_pixels: usize,
    pub report: EvalReport,
}

/// Options of one round trip beyond the encoder and decoder parameters.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RoundtripOptions {
    pub bins: Option<QuantParams>,
    /// Uniform noise amplitude added to the energy before quantization.
    pub noise: f64,
    /// Added to each scene seed to seed its noise.
    pub noise_seed: u64,
}

pub fn roundtrip_scene(
    spec: &SceneSpec,
    sdt: &SdtParams<f64>,
    dec: &DecodeParams<f64>,
    opts: &RoundtripOptions,
) -> Result<SceneOutcome> {
    let gt = generate(spec)?;
    let mut energy = encode_sdt(&gt, sdt)?.energy;
    if opts.noise > 0.0 {
        let p = PerturbSpec::new(
            PerturbKind::EnergyNoise,
            opts.noise,
            opts.noise_seed.wrapping_add(spec.seed),
        )?;
        energy = perturb_energy(&energy, &p)?;
    }
    if let Some(q) = opts.bins {
        energy = dequantize(&quantize(&energy, q), q)?;
    }
    let seed_pixels = extract_seeds(&energy, dec.theta).foreground().count();
    let decoded = decode_sdt(&energy, dec)?.labels;
    Ok(SceneOutcome {
        spec: spec.clone(),
        instances: gt.instance_count(),
        decoded: decoded.instance_count(),
        ious: per_instance_iou(&decoded, &gt)?.into_values().collect(),
        seed_pixels,
        report: evaluate(&decoded, &gt)?,
    })
}

#[derive(Clone, Debug)]
pub struct RoundtripSummary {
    pub scenes: Vec<SceneOutcome>,
    pub aggregate: EvalReport,
    /// Mean over all ground-truth instances; `None` for an empty suite.
    pub mean_iou: Option<f64>,
    /// Fraction of scenes decoded to the right number of instances.
    pub count_accuracy: Option<f64>,
}

impl RoundtripSummary {
    fn from_outcomes(scenes: Vec<SceneOutcome>) -> Self {
        let ious: Vec<f64> = scenes.iter().flat_map(|s| s.ious.iter().copied()).collect();
        let mean_iou = (!ious.is_empty()).then(|| ious.iter().sum::<f64>() / ious.len() as f64);
        let count_accuracy = (!scenes.is_empty())
            .then(|| scenes.iter().filter(|s| s.decoded == s.instances).count() as f64 / scenes.len() as f64);
        let aggregate = crate::metrics::aggregate(&scenes.iter().map(|s| s.report.clone()).collect::<Vec<_>>());
        Self {
            scenes,
            aggregate,
            mean_iou,
            count_accuracy,
        }
    }
}

/// Round trip of every scene, scored against the scene it came from.
pub fn roundtrip_suite(
    scenes: &[SceneSpec],
    sdt: &SdtParams<f64>,
    dec: &DecodeParams<f64>,
    opts: &RoundtripOptions,
    jobs: usize,
) -> Result<RoundtripSummary> {
    let outcomes = run_parallel(jobs, scenes, |s| roundtrip_scene(s, sdt, dec, opts))?;
    Ok(RoundtripSummary::from_outcomes(outcomes))
}

// ---------------------------------------------------------------- robustness

/// A perturbation level; `kind = None` means the exact encoding.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Perturbation {
    pub kind: Option<PerturbKind>,
    pub level: f64,
}

impl Perturbation {
    pub fn exact() -> Self {
        Self { kind: None, level: 0.0 }
    }

    fn label(&self) -> &'static str {
        self.kind.map_or("none", PerturbKind::name)
    }
}

struct Encodings {
    foreground: BinaryMask,
    boundary: BinaryMask,
    dt: EnergyMap<f64>,
    sdt: EnergyMap<f64>,
    ss: SkeletonScales<f64>,
}

impl Encodings {
    fn new(gt: &LabelMap, sdt: &SdtParams<f64>, reps: &[Representation]) -> Result<Self> {
        let (w, h) = (gt.width(), gt.height());
        let empty = EnergyMap::background(w, h)?;
        Ok(Self {
            foreground: gt.foreground(),
            boundary: encode_boundary(gt),
            dt: if reps.contains(&Representation::Dt) {
                encode_dt(gt)?.energy
            } else {
                empty.clone()
            },
            sdt: if reps.contains(&Representation::Sdt) {
                encode_sdt(gt, sdt)?.energy
            } else {
                empty
            },
            ss: if reps.contains(&Representation::Ss) {
                encode_ss(gt, sdt)?
            } else {
                SkeletonScales::new(PixelSet::empty(w, h), Vec::new())?
            },
        })
    }
}

/// Applies an energy-style perturbation to a binary channel stored as 0/1
/// energy and reads it back with a 0.5 threshold.
fn perturb_binary_channel(channel: &EnergyMap<f64>, spec: &PerturbSpec) -> Result<Vec<bool>> {
    Ok(perturb_energy(channel, spec)?
        .values()
        .iter()
        .map(|&v| v >= 0.5)
        .collect())
}

fn decode_perturbed(
    rep: Representation,
    enc: &Encodings,
    pert: &Perturbation,
    seed: u64,
    dec: &DecodeParams<f64>,
) -> Result<LabelMap> {
    let spec = match pert.kind {
        Some(kind) => Some(PerturbSpec::new(kind, pert.level, seed)?),
        None => None,
    };
    let (w, h) = (enc.foreground.width(), enc.foreground.height());
    let decoded = match rep {
        Representation::Sdt | Representation::Dt => {
            let energy = if rep == Representation::Sdt { &enc.sdt } else { &enc.dt };
            let energy = match &spec {
                None => energy.clone(),
                Some(s) if s.kind == PerturbKind::BoundaryDropout => perturb_energy_dropout(energy, &enc.boundary, s)?,
                Some(s) => perturb_energy(energy, s)?,
            };
            decode_sdt(&energy, dec)?
        }
        Representation::Boundary => {
            let boundary = match &spec {
                None => enc.boundary.clone(),
                Some(s) if s.kind == PerturbKind::BoundaryDropout => perturb_boundary(&enc.boundary, s)?,
                Some(s) => {
                    // 0 on boundary, 1 on interior; low values read back as boundary
                    let e = boundary_energy::<f64>(&enc.boundary, &enc.foreground)?;
                    let interior = perturb_binary_channel(&e, s)?;
                    BinaryMask::new(w, h, interior.into_iter().map(|i| !i).collect())?.and(&enc.foreground)?
                }
            };
            decode_boundary(&boundary, &enc.foreground, dec)?
        }
        Representation::Ss => {
            let ss = match &spec {
                None => enc.ss.clone(),
                Some(s) if s.kind == PerturbKind::BoundaryDropout => {
                    // the skeleton is what this representation encodes, so it is what gets dropped
                    let dropped = dropout_mask(&enc.ss.skeleton().to_mask(), s)?;
                    let keep: Vec<usize> = enc
                        .ss
                        .skeleton()
                        .iter()
                        .enumerate()
                        .filter(|&(_, (r, c))| !dropped.get(r, c))
                        .map(|(i, _)| i)
                        .collect();
                    let pixels: Vec<_> = enc.ss.skeleton().iter().collect();
                    SkeletonScales::new(
                        PixelSet::new(w, h, keep.iter().map(|&i| pixels[i]))?,
                        keep.iter().map(|&i| enc.ss.scales()[i]).collect(),
                    )?
                }
                Some(s) => {
                    let (prob, scale) = enc.ss.to_channels();
                    let on = perturb_binary_channel(&EnergyMap::new(w, h, prob)?, s)?;
                    let prob: Vec<f64> = on.into_iter().map(f64::from).collect();
                    SkeletonScales::from_channels(w, h, &prob, &scale)?
                }
            };
            decode_ss(&ss, dec)?
        }
    };
    Ok(decoded.labels)
}

/// Per representation and perturbation level, summed over a suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustnessRow {
    pub suite: String,
    pub representation: String,
    pub perturbation: String,
    pub level: f64,
    pub scenes: usize,
    pub instances: usize,
    pub splits: usize,
    pub merges: usize,
    /// Splits per ground-truth instance.
    pub split_rate: f64,
    /// Merges per ground-truth instance.
    pub merge_rate: f64,
    pub mean_f1: f64,
}

/// Decodes every representation under every perturbation on every scene.
/// Perturbation seeds are `perturb_seed + scene seed`, shared across
/// representations so they see the same dropped pixels.
#[allow(clippy::too_many_arguments)]
pub fn robustness_suite(
    name: &str,
    scenes: &[SceneSpec],
    perturbations: &[Perturbation],
    reps: &[Representation],
    sdt: &SdtParams<f64>,
    dec: &DecodeParams<f64>,
    perturb_seed: u64,
    jobs: usize,
) -> Result<Vec<RobustnessRow>> {
    if reps.is_empty() {
        return Err(Error::InvalidParam("at least one representation is required".into()));
    }
    // per scene: [rep][perturbation] -> (instances, splits, merges, f1)
    let per_scene = run_parallel(jobs, scenes, |spec| {
        let gt = generate(spec)?;
        let enc = Encodings::new(&gt, sdt, reps)?;
        let seed = perturb_seed.wrapping_add(spec.seed);
        reps.iter()
            .map(|&rep| {
                perturbations
                    .iter()
                    .map(|p| {
                        let decoded = decode_perturbed(rep, &enc, p, seed, dec)?;
                        let r = evaluate(&decoded, &gt)?;
                        Ok((gt.instance_count(), r.splits, r.merges, r.f1))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut rows = Vec::new();
    for (ri, rep) in reps.iter().enumerate() {
        for (pi, p) in perturbations.iter().enumerate() {
            let (mut inst, mut splits, mut merges, mut f1) = (0, 0, 0, 0.0);
            for scene in &per_scene {
                let (n, s, m, f) = scene[ri][pi];
                inst += n;
                splits += s;
                merges += m;
                f1 += f;
            }
            let rate = |k: usize| if inst == 0 { 0.0 } else { k as f64 / inst as f64 };
            rows.push(RobustnessRow {
                suite: name.to_string(),
                representation: rep.name().to_string(),
                perturbation: p.label().to_string(),
                level: p.level,
                scenes: scenes.len(),
                instances: inst,
                splits,
                merges,
                split_rate: rate(splits),
                merge_rate: rate(merges),
                mean_f1: if scenes.is_empty() {
                    1.0
                } else {
                    f1 / scenes.len() as f64
                },
            });
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------- ablation

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AblationParam {
    Alpha,
    Theta,
    Bins,
}

impl AblationParam {
    pub fn name(self) -> &'static str {
        match self {
            AblationParam::Alpha => "alpha",
            AblationParam::Theta => "theta",
            AblationParam::Bins => "bins",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AblationRow {
    pub parameter: String,
    pub value: f64,
    pub scenes: usize,
    pub instances: usize,
    pub count_accuracy: Option<f64>,
    pub mean_iou: Option<f64>,
    pub f1: f64,
    pub obj_dice: f64,
    pub obj_hausdorff: f64,
    pub splits: usize,
    pub merges: usize,
    pub seed_pixels: usize,
}

/// One round-trip suite per value of `param`, all other settings fixed.
pub fn ablation_sweep(
    param: AblationParam,
    values: &[f64],
    scenes: &[SceneSpec],
    sdt: &SdtParams<f64>,
    dec: &DecodeParams<f64>,
    base: &RoundtripOptions,
    jobs: usize,
) -> Result<Vec<AblationRow>> {
    if values.is_empty() {
        return Err(Error::InvalidParam(format!("no values to sweep for {}", param.name())));
    }
    values
        .iter()
        .map(|&v| {
            let (mut s, mut d, mut o) = (*sdt, *dec, *base);
            match param {
                AblationParam::Alpha => s = SdtParams::new(v, sdt.epsilon, sdt.sigma, sdt.level)?,
                AblationParam::Theta => d = DecodeParams::new(v, dec.min_size, dec.fill_holes)?,
                AblationParam::Bins => {
                    if v.fract() != 0.0 || !(1.0..=f64::from(u16::MAX)).contains(&v) {
                        return Err(Error::InvalidParam(format!("bins value {v} is not a positive integer")));
                    }
                    o.bins = Some(QuantParams::new(v as u16)?);
                }
            }
            let summary = roundtrip_suite(scenes, &s, &d, &o, jobs)?;
            let a = &summary.aggregate;
            Ok(AblationRow {
                parameter: param.name().to_string(),
                value: v,
                scenes: scenes.len(),
                instances: summary.scenes.iter().map(|x| x.instances).sum(),
                count_accuracy: summary.count_accuracy,
                mean_iou: summary.mean_iou,
                f1: a.f1,
                obj_dice: a.obj_dice,
                obj_hausdorff: a.obj_hausdorff,
                splits: a.splits,
                merges: a.merges,
                seed_pixels: summary.scenes.iter().map(|x| x.seed_pixels).sum(),
            })
        })
        .collect()
}

// ---------------------------------------------------------------- config

/// Everything a bench run reads from its config file.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub scenes: usize,
    pub seed: u64,
    pub perturb_seed: u64,
    pub alpha: f64,
    pub theta: f64,
    pub bins: u16,
    pub min_size: usize,
    pub sigma: f64,
    pub level: f64,
    pub representations: Vec<Representation>,
    pub dropout: Vec<f64>,
    pub noise: Vec<f64>,
    pub blur: Vec<f64>,
    pub alphas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub bins_sweep: Vec<f64>,
    pub ablation_noise: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            scenes: 100,
            seed: 0,
            perturb_seed: 1000,
            alpha: 0.8,
            theta: 0.7,
            bins: 10,
            min_size: crate::decode::DEFAULT_MIN_SIZE,
            sigma: crate::representations::DEFAULT_SIGMA,
            level: crate::representations::DEFAULT_LEVEL,
            representations: Representation::ALL.to_vec(),
            dropout: vec![0.01, 0.02, 0.05],
            noise: vec![0.1, 0.2, 0.3],
            blur: vec![1.0, 2.0],
            alphas: vec![0.6, 0.8, 1.0],
            thetas: vec![0.5, 0.6, 0.7, 0.8, 0.9],
            bins_sweep: vec![5.0, 10.0, 20.0],
            ablation_noise: 0.1,
        }
    }
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl BenchConfig {
    pub fn from_key_values(kv: &mut KeyValues) -> Result<Self> {
        let d = Self::default();
        let cfg = Self {
            scenes: kv.take_or("scenes", d.scenes)?,
            seed: kv.take_or("seed", d.seed)?,
            perturb_seed: kv.take_or("perturb_seed", d.perturb_seed)?,
            alpha: kv.take_or("alpha", d.alpha)?,
            theta: kv.take_or("theta", d.theta)?,
            bins: kv.take_or("bins", d.bins)?,
            min_size: kv.take_or("min_size", d.min_size)?,
            sigma: kv.take_or("sigma", d.sigma)?,
            level: kv.take_or("level", d.level)?,
            representations: kv.take_list("representations")?.unwrap_or(d.representations),
            dropout: kv.take_list("dropout")?.unwrap_or(d.dropout),
            noise: kv.take_list("noise")?.unwrap_or(d.noise),
            blur: kv.take_list("blur")?.unwrap_or(d.blur),
            alphas: kv.take_list("alphas")?.unwrap_or(d.alphas),
            thetas: kv.take_list("thetas")?.unwrap_or(d.thetas),
            bins_sweep: kv.take_list("bins_sweep")?.unwrap_or(d.bins_sweep),
            ablation_noise: kv.take_or("ablation_noise", d.ablation_noise)?,
        };
        cfg.sdt()?;
        cfg.decode()?;
        QuantParams::new(cfg.bins)?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        let mut kv = match path {
            Some(p) => KeyValues::load(p)?,
            None => KeyValues::default(),
        };
        let cfg = Self::from_key_values(&mut kv)?;
        kv.finish()?;
        Ok(cfg)
    }

    pub fn to_key_values(&self) -> String {
        let reps: Vec<&str> = self.representations.iter().map(|r| r.name()).collect();
        format!(
            "scenes = {}\nseed = {}\nperturb_seed = {}\nalpha = {}\ntheta = {}\nbins = {}\nmin_size = {}\n\
             sigma = {}\nlevel = {}\nrepresentations = {}\ndropout = {}\nnoise = {}\nblur = {}\n\
             alphas = {}\nthetas = {}\nbins_sweep = {}\nablation_noise = {}\n",
            self.scenes,
            self.seed,
            self.perturb_seed,
            self.alpha,
            self.theta,
            self.bins,
            self.min_size,
            self.sigma,
            self.level,
            reps.join(", "),
            join(&self.dropout),
            join(&self.noise),
            join(&self.blur),
            join(&self.alphas),
            join(&self.thetas),
            join(&self.bins_sweep),
            self.ablation_noise
        )
    }

    pub fn sdt(&self) -> Result<SdtParams<f64>> {
        SdtParams::new(self.alpha, SdtParams::<f64>::default().epsilon, self.sigma, self.level)
    }

    pub fn decode(&self) -> Result<DecodeParams<f64>> {
        DecodeParams::new(self.theta, self.min_size, false)
    }

    /// Touching pairs of squares, many per scene so contact lines are plentiful.
    pub fn touching_pairs(&self) -> Vec<SceneSpec> {
        family_suite(Family::TouchingSquares, self.scenes, self.seed, 128, 12)
    }

    pub fn dumbbells(&self, neck: usize) -> Vec<SceneSpec> {
        family_suite(Family::Dumbbell, self.scenes, self.seed, 96, 4)
            .into_iter()
            .map(|s| SceneSpec { neck, ..s })
            .collect()
    }

    pub fn perturbations(&self) -> Vec<Perturbation> {
        let mut out = vec![Perturbation::exact()];
        let kinds = [
            (PerturbKind::BoundaryDropout, &self.dropout),
            (PerturbKind::EnergyNoise, &self.noise),
            (PerturbKind::EnergyBlur, &self.blur),
        ];
        for (kind, levels) in kinds {
            out.extend(levels.iter().map(|&level| Perturbation {
                kind: Some(kind),
                level,
            }));
        }
        out
    }
}

// ---------------------------------------------------------------- outputs

#[derive(Serialize)]
struct RoundtripCsvRow {
    scene: String,
    family: String,
    seed: Option<u64>,
    instances: usize,
    decoded: usize,
    count_ok: bool,
    mean_iou: Option<f64>,
    quantized_decoded: usize,
    quantized_mean_iou: Option<f64>,
    f1: f64,
    obj_dice: f64,
    obj_hausdorff: f64,
    splits: usize,
    merges: usize,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn sha256_of(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// What a bench run wrote.
#[derive(Clone, Debug)]
pub struct BenchOutput {
    pub manifest: PathBuf,
    pub artifacts: Vec<PathBuf>,
    pub summary: serde_json::Value,
}

fn run_roundtrip(cfg: &BenchConfig, out: &Path, jobs: usize) -> Result<(Vec<String>, serde_json::Value)> {
    let scenes = standard_suite(cfg.scenes, cfg.seed);
    let (sdt, dec) = (cfg.sdt()?, cfg.decode()?);
    let exact = roundtrip_suite(&scenes, &sdt, &dec, &RoundtripOptions::default(), jobs)?;
    let q = RoundtripOptions {
        bins: Some(QuantParams::new(cfg.bins)?),
        ..Default::default()
    };
    let quant = roundtrip_suite(&scenes, &sdt, &dec, &q, jobs)?;
    let mut rows: Vec<RoundtripCsvRow> = exact
        .scenes
        .iter()
        .zip(&quant.scenes)
        .enumerate()
        .map(|(i, (e, q))| RoundtripCsvRow {
            scene: format!("{i:03}"),
            family: e.spec.family.to_string(),
            seed: Some(e.spec.seed),
            instances: e.instances,
            decoded: e.decoded,
            count_ok: e.decoded == e.instances,
            mean_iou: mean(&e.ious),
            quantized_decoded: q.decoded,
            quantized_mean_iou: mean(&q.ious),
            f1: e.report.f1,
            obj_dice: e.report.obj_dice,
            obj_hausdorff: e.report.obj_hausdorff,
            splits: e.report.splits,
            merges: e.report.merges,
        })
        .collect();
    let a = &exact.aggregate;
    rows.push(RoundtripCsvRow {
        scene: "aggregate".into(),
        family: "all".into(),
        seed: None,
        instances: exact.scenes.iter().map(|s| s.instances).sum(),
        decoded: exact.scenes.iter().map(|s| s.decoded).sum(),
        count_ok: exact.count_accuracy.is_none_or(|c| c == 1.0),
        mean_iou: exact.mean_iou,
        quantized_decoded: quant.scenes.iter().map(|s| s.decoded).sum(),
        quantized_mean_iou: quant.mean_iou,
        f1: a.f1,
        obj_dice: a.obj_dice,
        obj_hausdorff: a.obj_hausdorff,
        splits: a.splits,
        merges: a.merges,
    });
    write_csv(&out.join("roundtrip.csv"), &rows)?;
    let drop = match (exact.mean_iou, quant.mean_iou) {
        (Some(e), Some(q)) => Some(e - q),
        _ => None,
    };
    let summary = json!({
        "scenes": scenes.len(),
        "count_accuracy": exact.count_accuracy,
        "mean_iou": exact.mean_iou,
        "quantized_mean_iou": quant.mean_iou,
        "quantized_iou_drop": drop,
        "f1": a.f1,
        "obj_dice": a.obj_dice,
        "obj_hausdorff": a.obj_hausdorff,
    });
    Ok((vec!["roundtrip.csv".into()], summary))
}

fn run_robustness(cfg: &BenchConfig, out: &Path, jobs: usize) -> Result<(Vec<String>, serde_json::Value)> {
    let (sdt, dec) = (cfg.sdt()?, cfg.decode()?);
    let perts = cfg.perturbations();
    let suites = [
        ("touching-pairs", cfg.touching_pairs()),
        ("dumbbell-neck2", cfg.dumbbells(2)),
        ("dumbbell-neck3", cfg.dumbbells(3)),
        ("standard", standard_suite(cfg.scenes, cfg.seed)),
    ];
    let mut rows = Vec::new();
    for (name, scenes) in &suites {
        rows.extend(robustness_suite(
            name,
            scenes,
            &perts,
            &cfg.representations,
            &sdt,
            &dec,
            cfg.perturb_seed,
            jobs,
        )?);
    }
    let csv_path = out.join("robustness.csv");
    write_csv(&csv_path, &rows)?;
    let mut artifacts = vec!["robustness.csv".to_string()];
    for (name, _) in &suites {
        for kind in [
            PerturbKind::BoundaryDropout,
            PerturbKind::EnergyNoise,
            PerturbKind::EnergyBlur,
        ] {
            for y in ["merge_rate", "split_rate"] {
                let file = format!("robustness_{name}_{kind}_{y}.svg");
                let svg = plot_csv(
                    &csv_path,
                    &PlotSpec {
                        title: format!("{name}: {y} under {kind}"),
                        x: "level",
                        y,
                        series: &["representation"],
                        // the exact encoding is drawn at level 0
                        filters: vec![
                            ("suite", vec![name.to_string()]),
                            ("perturbation", vec!["none".into(), kind.name().into()]),
                        ],
                    },
                )?;
                write_text(&out.join(&file), &svg)?;
                artifacts.push(file);
            }
        }
    }
    let summary: Vec<serde_json::Value> = rows
        .iter()
        .filter(|r| r.perturbation == "none" || (r.perturbation == "boundary-dropout" && r.level == 0.01))
        .map(|r| {
            json!({
                "suite": r.suite, "representation": r.representation, "perturbation": r.perturbation,
                "level": r.level, "split_rate": r.split_rate, "merge_rate": r.merge_rate, "mean_f1": r.mean_f1,
            })
        })
        .collect();
    Ok((artifacts, json!(summary)))
}

fn run_ablation(cfg: &BenchConfig, out: &Path, jobs: usize) -> Result<(Vec<String>, serde_json::Value)> {
    let scenes = standard_suite(cfg.scenes, cfg.seed);
    let (sdt, dec) = (cfg.sdt()?, cfg.decode()?);
    let base = RoundtripOptions {
        bins: None,
        noise: cfg.ablation_noise,
        noise_seed: cfg.perturb_seed,
    };
    let mut rows = Vec::new();
    let sweeps = [
        (AblationParam::Alpha, &cfg.alphas),
        (AblationParam::Theta, &cfg.thetas),
        (AblationParam::Bins, &cfg.bins_sweep),
    ];
    for (param, values) in sweeps {
        if !values.is_empty() {
            rows.extend(ablation_sweep(param, values, &scenes, &sdt, &dec, &base, jobs)?);
        }
    }
    let csv_path = out.join("ablation.csv");
    write_csv(&csv_path, &rows)?;
    let mut artifacts = vec!["ablation.csv".to_string()];
    for (param, values) in sweeps {
        if values.is_empty() {
            continue;
        }
        for y in ["mean_iou", "f1", "obj_dice"] {
            let file = format!("ablation_{}_{y}.svg", param.name());
            let svg = plot_csv(
                &csv_path,
                &PlotSpec {
                    title: format!("{y} vs {}", param.name()),
                    x: "value",
                    y,
                    series: &["parameter"],
                    filters: vec![("parameter", vec![param.name().to_string()])],
                },
            )?;
            write_text(&out.join(&file), &svg)?;
            artifacts.push(file);
        }
    }
    let summary: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| json!({"parameter": r.parameter, "value": r.value, "mean_iou": r.mean_iou, "f1": r.f1}))
        .collect();
    Ok((artifacts, json!(summary)))
}

/// Runs one suite, writing CSV, SVG, the resolved config and `manifest.json`
/// into `out`.
pub fn run_bench(kind: SuiteKind, cfg: &BenchConfig, out: &Path, jobs: usize) -> Result<BenchOutput> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_text(&out.join("config.resolved.cfg"), &cfg.to_key_values())?;
    let (mut artifacts, summary) = match kind {
        SuiteKind::Roundtrip => run_roundtrip(cfg, out, jobs)?,
        SuiteKind::Robustness => run_robustness(cfg, out, jobs)?,
        SuiteKind::Ablation => run_ablation(cfg, out, jobs)?,
    };
    artifacts.insert(0, "config.resolved.cfg".into());
    let hashes = artifacts
        .iter()
        .map(|a| Ok(json!({"path": a, "sha256": sha256_of(&out.join(a))?})))
        .collect::<Result<Vec<_>>>()?;
    let manifest = json!({
        "suite": kind.to_string(),
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "config": cfg.to_key_values(),
        "seeds": {
            "scene_seeds": format!("{}..{}", cfg.seed, cfg.seed + cfg.scenes as u64),
            "perturb_seed_offset": cfg.perturb_seed,
        },
        "hausdorff_unmatched_rule": "nearest opposing instance; image frame when the opposing map is empty",
        "summary": summary,
        "artifacts": hashes,
    });
    let manifest_path = out.join("manifest.json");
    write_text(&manifest_path, &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    Ok(BenchOutput {
        manifest: manifest_path,
        artifacts: artifacts.iter().map(|a| out.join(a)).collect(),
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_suite_is_an_empty_report() {
        let s = roundtrip_suite(
            &[],
            &SdtParams::default(),
            &DecodeParams::default(),
            &RoundtripOptions::default(),
            1,
        )
        .unwrap();
        assert!(s.scenes.is_empty());
        assert_eq!(s.mean_iou, None);
        assert_eq!(s.aggregate.f1, 1.0);
    }

    #[test]
    fn config_round_trips() {
        let cfg = BenchConfig {
            scenes: 3,
            noise: vec![],
            representations: vec![Representation::Sdt],
            ..Default::default()
        };
        let mut kv = KeyValues::parse(&cfg.to_key_values()).unwrap();
        let back = BenchConfig::from_key_values(&mut kv).unwrap();
        kv.finish().unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn bad_config_values() {
        let mut kv = KeyValues::parse("alpha = 0").unwrap();
        assert!(BenchConfig::from_key_values(&mut kv).is_err());
        let mut kv = KeyValues::parse("representations = sdt, nope").unwrap();
        assert!(BenchConfig::from_key_values(&mut kv).is_err());
    }

    #[test]
    fn robustness_needs_a_representation() {
        let scenes = standard_suite(1, 0);
        let r = robustness_suite(
            "x",
            &scenes,
            &[Perturbation::exact()],
            &[],
            &SdtParams::default(),
            &DecodeParams::default(),
            0,
            1,
        );
        assert!(r.is_err());
    }

    #[test]
    fn jobs_do_not_change_results() {
        let scenes = standard_suite(7, 3);
        let opts = RoundtripOptions {
            noise: 0.1,
            noise_seed: 9,
            ..Default::default()
        };
        let a = roundtrip_suite(&scenes, &SdtParams::default(), &DecodeParams::default(), &opts, 1).unwrap();
        let b = roundtrip_suite(&scenes, &SdtParams::default(), &DecodeParams::default(), &opts, 4).unwrap();
        assert_eq!(a.mean_iou, b.mean_iou);
        assert_eq!(a.aggregate, b.aggregate);
    }
}
