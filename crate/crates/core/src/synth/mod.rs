//! Seeded synthetic scenes and perturbation models.
//!
//! Every output is a pure function of its spec, seed included; randomness
//! comes from ChaCha8.

mod config;
mod shapes;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use config::KeyValues;

use crate::error::{Error, Result};
use crate::geometry::{blur_masked, dilate_square, neighbors, N8};
use crate::raster::{BinaryMask, EnergyMap, LabelMap, Transform};
use crate::scalar::Real;
use shapes::Group;

/// Attempts per shape before placement gives up.
const PLACEMENT_RETRIES: usize = 500;
/// Minimum free pixels between shapes that are not meant to touch.
const CLEARANCE: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    TouchingSquares,
    Dumbbell,
    UShape,
    SCurve,
    Ring,
    RandomBlob,
    LShape,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::TouchingSquares,
        Family::Dumbbell,
        Family::UShape,
        Family::SCurve,
        Family::Ring,
        Family::RandomBlob,
        Family::LShape,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::TouchingSquares => "touching-squares",
            Family::Dumbbell => "dumbbell",
            Family::UShape => "u-shape",
            Family::SCurve => "s-curve",
            Family::Ring => "ring",
            Family::RandomBlob => "random-blob",
            Family::LShape => "l-shape",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown shape family `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub family: Family,
    /// Number of instances.
    pub count: usize,
    /// Columns between the squares of a touching pair (0 = adjacent labels).
    pub gap: usize,
    pub seed: u64,
    pub neck: usize,
    pub bulb: usize,
}

impl SceneSpec {
    pub fn new(width: usize, height: usize, family: Family, count: usize, seed: u64) -> Self {
        Self {
            width,
            height,
            family,
            count,
            gap: 0,
            seed,
            neck: 3,
            bulb: 11,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 8 || self.height < 8 {
            return Err(Error::InvalidParam(format!(
                "scene {}x{} is smaller than 8x8",
                self.width, self.height
            )));
        }
        if self.count == 0 {
            return Err(Error::InvalidParam("count must be >= 1".into()));
        }
        if self.bulb < 3 || self.neck == 0 || self.neck >= self.bulb {
            return Err(Error::InvalidParam(format!(
                "need 1 <= neck < bulb and bulb >= 3, got neck {} bulb {}",
                self.neck, self.bulb
            )));
        }
        Ok(())
    }

    /// Reads the scene keys from `kv`, falling back to `base` for absent ones.
    pub fn from_key_values(kv: &mut KeyValues, base: &SceneSpec) -> Result<Self> {
        let spec = Self {
            width: kv.take_or("width", base.width)?,
            height: kv.take_or("height", base.height)?,
            family: kv.take_or("family", base.family)?,
            count: kv.take_or("count", base.count)?,
            gap: kv.take_or("gap", base.gap)?,
            seed: kv.take_or("seed", base.seed)?,
            neck: kv.take_or("neck", base.neck)?,
            bulb: kv.take_or("bulb", base.bulb)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// This scene in the config format read by [`from_key_values`](Self::from_key_values).
    pub fn to_key_values(&self) -> String {
        format!(
            "width = {}\nheight = {}\nfamily = {}\ncount = {}\ngap = {}\nseed = {}\nneck = {}\nbulb = {}\n",
            self.width, self.height, self.family, self.count, self.gap, self.seed, self.neck, self.bulb
        )
    }
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self::new(96, 96, Family::RandomBlob, 4, 0)
    }
}

/// Groups of instances to place for a spec, largest first.
fn groups(spec: &SceneSpec, rng: &mut ChaCha8Rng) -> Vec<Group> {
    let mut out = Vec::new();
    let mut left = spec.count;
    while left > 0 {
        let g = match spec.family {
            Family::TouchingSquares if left >= 2 => shapes::touching_pair(rng, spec.gap),
            Family::TouchingSquares => shapes::square(rng),
            Family::Dumbbell => shapes::dumbbell(rng, spec.neck, spec.bulb),
            Family::UShape => shapes::u_shape(rng),
            Family::SCurve => shapes::s_curve(rng),
            Family::Ring => shapes::ring(rng),
            Family::RandomBlob => shapes::random_blob(rng),
            Family::LShape => shapes::l_shape(rng),
        };
        left -= g.instances.len();
        out.push(g);
    }
    out
}

/// Draws a scene. Shapes get a random dihedral orientation and position, keep a
/// one-pixel margin from the image border and two free pixels from each other.
pub fn generate(spec: &SceneSpec) -> Result<LabelMap> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut labels = vec![0u32; w * h];
    let mut next_id = 1u32;
    for group in groups(spec, &mut rng) {
        let t = Transform::ALL[rng.random_range(0..Transform::ALL.len())];
        let (gw, gh) = t.dims(group.width, group.height);
        if gw + 2 > w || gh + 2 > h {
            return Err(Error::Placement(format!(
                "{} shape of {gw}x{gh} does not fit a {w}x{h} scene",
                spec.family
            )));
        }
        let occupied = BinaryMask::new(w, h, labels.iter().map(|&l| l != 0).collect())?;
        let blocked = dilate_square(&occupied, CLEARANCE);
        let mut placed = false;
        for _ in 0..PLACEMENT_RETRIES {
            let r0 = rng.random_range(1..=h - gh - 1);
            let c0 = rng.random_range(1..=w - gw - 1);
            let at = |p| {
                let (r, c) = t.map_pixel(p, group.width, group.height);
                (r + r0, c + c0)
            };
            if group.instances.iter().flatten().any(|&p| {
                let (r, c) = at(p);
                blocked.get(r, c)
            }) {
                continue;
            }
            for inst in &group.instances {
                for &p in inst {
                    let (r, c) = at(p);
                    labels[r * w + c] = next_id;
                }
                next_id += 1;
            }
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::Placement(format!(
                "no free spot for a {} shape after {PLACEMENT_RETRIES} attempts ({} of {} instances placed)",
                spec.family,
                next_id - 1,
                spec.count
            )));
        }
    }
    LabelMap::new(w, h, labels)
}

/// `n` scenes cycling through all families, seeds `base_seed..base_seed + n`.
pub fn standard_suite(n: usize, base_seed: u64) -> Vec<SceneSpec> {
    (0..n)
        .map(|i| {
            let family = Family::ALL[i % Family::ALL.len()];
            SceneSpec::new(96, 96, family, 4, base_seed + i as u64)
        })
        .collect()
}

/// `n` scenes of one family with consecutive seeds.
pub fn family_suite(family: Family, n: usize, base_seed: u64, width: usize, count: usize) -> Vec<SceneSpec> {
    (0..n)
        .map(|i| SceneSpec::new(width, width, family, count, base_seed + i as u64))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PerturbKind {
    BoundaryDropout,
    EnergyNoise,
    EnergyBlur,
}

impl PerturbKind {
    pub fn name(self) -> &'static str {
        match self {
            PerturbKind::BoundaryDropout => "boundary-dropout",
            PerturbKind::EnergyNoise => "energy-noise",
            PerturbKind::EnergyBlur => "energy-blur",
        }
    }
}

impl fmt::Display for PerturbKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PerturbKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            PerturbKind::BoundaryDropout,
            PerturbKind::EnergyNoise,
            PerturbKind::EnergyBlur,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown perturbation `{s}`")))
    }
}

/// A perturbation: dropout rate, noise amplitude or blur sigma depending on `kind`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbSpec {
    pub kind: PerturbKind,
    pub amount: f64,
    pub seed: u64,
}

impl PerturbSpec {
    pub fn new(kind: PerturbKind, amount: f64, seed: u64) -> Result<Self> {
        let ok = match kind {
            PerturbKind::BoundaryDropout => (0.0..=1.0).contains(&amount),
            _ => amount >= 0.0 && amount.is_finite(),
        };
        if !ok {
            return Err(Error::InvalidParam(format!("{kind} amount {amount} out of range")));
        }
        Ok(Self { kind, amount, seed })
    }
}

/// Pixels of `boundary` dropped under `spec`: each independently with
/// probability `amount`, drawn in row-major order.
pub fn dropout_mask(boundary: &BinaryMask, spec: &PerturbSpec) -> Result<BinaryMask> {
    if spec.kind != PerturbKind::BoundaryDropout {
        return Err(Error::InvalidParam(format!(
            "expected boundary-dropout, got {}",
            spec.kind
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let bits = boundary
        .bits()
        .iter()
        .map(|&b| b && rng.random::<f64>() < spec.amount)
        .collect();
    BinaryMask::new(boundary.width(), boundary.height(), bits)
}

/// Deletes boundary pixels at random.
pub fn perturb_boundary(boundary: &BinaryMask, spec: &PerturbSpec) -> Result<BinaryMask> {
    boundary.and_not(&dropout_mask(boundary, spec)?)
}

/// Dropout applied to an energy map. Dropped boundary pixels that the map
/// marks as boundary (energy 0) take the mean energy of their foreground
/// 8-neighbors in the unperturbed map, the way a missing boundary pixel looks
/// to a predictor that interpolates its surroundings. Boundary pixels carrying
/// a nonzero energy have no boundary mark to lose and are left alone.
pub fn perturb_energy_dropout<T: Real>(
    energy: &EnergyMap<T>,
    boundary: &BinaryMask,
    spec: &PerturbSpec,
) -> Result<EnergyMap<T>> {
    let dropped = dropout_mask(boundary, spec)?;
    let (w, h) = (energy.width(), energy.height());
    let src = energy.values();
    Ok(energy.map_foreground(|i, e| {
        if !dropped.bits()[i] || e != T::zero() {
            return e;
        }
        let (sum, n) = neighbors(i / w, i % w, w, h, &N8)
            .map(|(r, c)| src[r * w + c])
            .filter(|&v| v >= T::zero())
            .fold((T::zero(), 0usize), |(s, n), v| (s + v, n + 1));
        if n == 0 {
            e
        } else {
            sum / T::from_usize_lossy(n)
        }
    }))
}

/// Uniform noise (clamped to `[0, 1]`) or Gaussian blur of the foreground energy.
pub fn perturb_energy<T: Real>(energy: &EnergyMap<T>, spec: &PerturbSpec) -> Result<EnergyMap<T>> {
    match spec.kind {
        PerturbKind::EnergyNoise => {
            if spec.amount == 0.0 {
                return Ok(energy.clone());
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let a = spec.amount;
            Ok(energy.map_foreground(|_, e| {
                let v = e + T::lit(rng.random_range(-a..=a));
                v.max(T::zero()).min(T::one())
            }))
        }
        PerturbKind::EnergyBlur => {
            if spec.amount == 0.0 {
                return Ok(energy.clone());
            }
            let fg = energy.foreground();
            let vals: Vec<T> = energy
                .values()
                .iter()
                .map(|&v| if v >= T::zero() { v } else { T::zero() })
                .collect();
            let blurred = blur_masked(&vals, &fg, spec.amount)?;
            Ok(energy.map_foreground(|i, _| blurred[i].max(T::zero()).min(T::one())))
        }
        PerturbKind::BoundaryDropout => Err(Error::InvalidParam(
            "boundary-dropout needs the boundary set; use perturb_energy_dropout".into(),
        )),
    }
}
