//! Shape builders. Each returns a small local canvas with one or more
//! instances on it; placement into a scene happens in the parent module.

use rand::Rng;

use crate::raster::Pixel;

/// Instances drawn on a `height x width` canvas.
#[derive(Clone, Debug)]
pub(crate) struct Group {
    pub height: usize,
    pub width: usize,
    pub instances: Vec<Vec<Pixel>>,
}

fn rect(rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Vec<Pixel> {
    rows.flat_map(|r| cols.clone().map(move |c| (r, c))).collect()
}

fn merge(parts: impl IntoIterator<Item = Vec<Pixel>>) -> Vec<Pixel> {
    let mut all: Vec<Pixel> = parts.into_iter().flatten().collect();
    all.sort_unstable();
    all.dedup();
    all
}

/// Disk of pixels within `radius` of `(cr, cc)`.
fn disk(cr: usize, cc: usize, radius: usize) -> Vec<Pixel> {
    let r2 = (radius * radius) as i64;
    let mut out = Vec::new();
    for r in cr.saturating_sub(radius)..=cr + radius {
        for c in cc.saturating_sub(radius)..=cc + radius {
            let (dr, dc) = (r as i64 - cr as i64, c as i64 - cc as i64);
            if dr * dr + dc * dc <= r2 {
                out.push((r, c));
            }
        }
    }
    out
}

pub(crate) fn square<R: Rng>(rng: &mut R) -> Group {
    let s = rng.random_range(9..=15);
    Group {
        height: s,
        width: s,
        instances: vec![rect(0..s, 0..s)],
    }
}

/// Two squares side by side, `gap` columns apart; the smaller one's rows lie
/// within the larger one's, so with `gap = 0` they share a full contact line.
pub(crate) fn touching_pair<R: Rng>(rng: &mut R, gap: usize) -> Group {
    let a = rng.random_range(11..=17);
    let b = rng.random_range(11..=17);
    let h = a.max(b);
    let off_a = rng.random_range(0..=h - a);
    let off_b = rng.random_range(0..=h - b);
    Group {
        height: h,
        width: a + gap + b,
        instances: vec![
            rect(off_a..off_a + a, 0..a),
            rect(off_b..off_b + b, a + gap..a + gap + b),
        ],
    }
}

/// Two round bulbs of diameter `bulb` joined by a straight neck `neck` pixels wide.
pub(crate) fn dumbbell<R: Rng>(rng: &mut R, neck: usize, bulb: usize) -> Group {
    let radius = bulb / 2;
    let length = rng.random_range(4..=8);
    let height = 2 * radius + 1;
    let width = 2 * (2 * radius + 1) + length;
    let (left, right) = (radius, width - 1 - radius);
    let top = radius - (neck - 1) / 2;
    Group {
        height,
        width,
        instances: vec![merge([
            disk(radius, left, radius),
            disk(radius, right, radius),
            rect(top..top + neck, left..right + 1),
        ])],
    }
}

pub(crate) fn u_shape<R: Rng>(rng: &mut R) -> Group {
    let h = rng.random_range(16..=24);
    let w = rng.random_range(16..=24);
    let t = rng.random_range(4..=6);
    Group {
        height: h,
        width: w,
        instances: vec![merge([rect(0..h, 0..t), rect(0..h, w - t..w), rect(h - t..h, 0..w)])],
    }
}

pub(crate) fn l_shape<R: Rng>(rng: &mut R) -> Group {
    let h = rng.random_range(16..=24);
    let w = rng.random_range(16..=24);
    let t = rng.random_range(5..=7);
    Group {
        height: h,
        width: w,
        instances: vec![merge([rect(0..h, 0..t), rect(h - t..h, 0..w)])],
    }
}

/// Thick band around one period of a sine wave.
pub(crate) fn s_curve<R: Rng>(rng: &mut R) -> Group {
    let length = rng.random_range(24..=32) as f64;
    let amp = rng.random_range(4..=6) as f64;
    let half = rng.random_range(2.0..=3.0f64);
    let pad = half.ceil() as usize + 1;
    let height = 2 * amp as usize + 2 * pad + 1;
    let width = length as usize + 2 * pad + 1;
    let (r0, c0) = (pad as f64 + amp, pad as f64);
    let samples: Vec<(f64, f64)> = (0..=(length as usize * 8))
        .map(|k| {
            let x = k as f64 / 8.0;
            (r0 + amp * (std::f64::consts::TAU * x / length).sin(), c0 + x)
        })
        .collect();
    let mut pixels = Vec::new();
    for r in 0..height {
        for c in 0..width {
            let near = samples
                .iter()
                .any(|&(sr, sc)| (r as f64 - sr).powi(2) + (c as f64 - sc).powi(2) <= half * half);
            if near {
                pixels.push((r, c));
            }
        }
    }
    Group {
        height,
        width,
        instances: vec![pixels],
    }
}

/// Annulus with outer radius 8..=12 and thickness 4..=5.
pub(crate) fn ring<R: Rng>(rng: &mut R) -> Group {
    let outer = rng.random_range(8..=12usize);
    let inner = outer - rng.random_range(4..=5usize);
    let (o2, i2) = ((outer * outer) as i64, (inner * inner) as i64);
    let size = 2 * outer + 1;
    let pixels = rect(0..size, 0..size)
        .into_iter()
        .filter(|&(r, c)| {
            let (dr, dc) = (r as i64 - outer as i64, c as i64 - outer as i64);
            let d2 = dr * dr + dc * dc;
            d2 <= o2 && d2 > i2
        })
        .collect();
    Group {
        height: size,
        width: size,
        instances: vec![pixels],
    }
}

/// Union of 2..=4 disks, each centered inside the previous one.
pub(crate) fn random_blob<R: Rng>(rng: &mut R) -> Group {
    let k = rng.random_range(2..=4);
    let mut disks: Vec<(i64, i64, i64)> = vec![(0, 0, rng.random_range(4..=7))];
    for _ in 1..k {
        let &(pr, pc, prad) = disks.last().expect("non-empty");
        let radius = rng.random_range(4..=7);
        let reach = prad - 1;
        disks.push((
            pr + rng.random_range(-reach..=reach),
            pc + rng.random_range(-reach..=reach),
            radius,
        ));
    }
    let rmin = disks.iter().map(|&(r, _, d)| r - d).min().expect("non-empty");
    let cmin = disks.iter().map(|&(_, c, d)| c - d).min().expect("non-empty");
    let rmax = disks.iter().map(|&(r, _, d)| r + d).max().expect("non-empty");
    let cmax = disks.iter().map(|&(_, c, d)| c + d).max().expect("non-empty");
    let pixels = merge(
        disks
            .iter()
            .map(|&(r, c, d)| disk((r - rmin) as usize, (c - cmin) as usize, d as usize)),
    );
    Group {
        height: (rmax - rmin + 1) as usize,
        width: (cmax - cmin + 1) as usize,
        instances: vec![pixels],
    }
}
