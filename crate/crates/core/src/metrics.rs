//! Object-level evaluation of a predicted label map against ground truth.
//!
//! All real-valued results are `f64`. Degenerate inputs (empty maps, instances
//! with no counterpart at all) produce conventional values plus a
//! [`Diagnostic`], never NaN.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::diagnostic::Diagnostic;
use crate::error::{Error, Result};
use crate::geometry::{neighbors, squared_distance_transform, N8};
use crate::raster::{BinaryMask, LabelMap, Pixel, Rect};

/// IoU a prediction must exceed to count as a true positive.
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// Overlap fraction of a ground-truth area below which a piece is ignored by
/// [`split_merge_counts`].
pub const SPLIT_MERGE_FLOOR: f64 = 0.1;

fn check_same(pred: &LabelMap, gt: &LabelMap) -> Result<()> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(Error::Dimensions(format!(
            "prediction {}x{} vs ground truth {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    Ok(())
}

/// Pixel counts of every (pred id, gt id) pair with non-empty intersection.
struct Overlaps {
    pairs: BTreeMap<(u32, u32), usize>,
    pred_area: BTreeMap<u32, usize>,
    gt_area: BTreeMap<u32, usize>,
}

impl Overlaps {
    fn new(pred: &LabelMap, gt: &LabelMap) -> Result<Self> {
        check_same(pred, gt)?;
        let mut pairs = BTreeMap::new();
        for (&p, &g) in pred.labels().iter().zip(gt.labels()) {
            if p != 0 && g != 0 {
                *pairs.entry((p, g)).or_insert(0) += 1;
            }
        }
        Ok(Self {
            pairs,
            pred_area: pred.areas(),
            gt_area: gt.areas(),
        })
    }

    fn iou(&self, p: u32, g: u32, inter: usize) -> f64 {
        let union = self.pred_area[&p] + self.gt_area[&g] - inter;
        inter as f64 / union as f64
    }

    /// For each instance of one side, the partner on the other side with the
    /// largest overlap (ties to the lowest id), with the overlap size.
    fn best_partners(&self, gt_side: bool) -> HashMap<u32, (u32, usize)> {
        let mut best: HashMap<u32, (u32, usize)> = HashMap::new();
        for (&(p, g), &n) in &self.pairs {
            let (me, other) = if gt_side { (g, p) } else { (p, g) };
            let slot = best.entry(me).or_insert((other, n));
            if n > slot.1 || (n == slot.1 && other < slot.0) {
                *slot = (other, n);
            }
        }
        best
    }
}

/// One-to-one assignment of predicted to ground-truth instances.
#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    /// `(pred id, gt id, iou)` for every true positive.
    pub pairs: Vec<(u32, u32, f64)>,
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
}

/// Greedy matching by descending IoU. A pair is accepted when neither side is
/// matched yet and its IoU exceeds `iou_thresh`.
pub fn match_instances(pred: &LabelMap, gt: &LabelMap, iou_thresh: f64) -> Result<Matching> {
    Ok(matching_from(&Overlaps::new(pred, gt)?, iou_thresh))
}

fn matching_from(ov: &Overlaps, iou_thresh: f64) -> Matching {
    let mut candidates: Vec<(u32, u32, f64)> = ov
        .pairs
        .iter()
        .map(|(&(p, g), &n)| (p, g, ov.iou(p, g, n)))
        .filter(|&(_, _, iou)| iou > iou_thresh)
        .collect();
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.1.cmp(&b.1)).then(a.0.cmp(&b.0)));
    let mut used_pred = std::collections::HashSet::new();
    let mut used_gt = std::collections::HashSet::new();
    let mut pairs = Vec::new();
    for (p, g, iou) in candidates {
        if used_pred.contains(&p) || used_gt.contains(&g) {
            continue;
        }
        used_pred.insert(p);
        used_gt.insert(g);
        pairs.push((p, g, iou));
    }
    let tp = pairs.len();
    Matching {
        pairs,
        true_pos: tp,
        false_pos: ov.pred_area.len() - tp,
        false_neg: ov.gt_area.len() - tp,
    }
}

/// `2TP / (2TP + FP + FN)`, or 1 when all counts are zero.
pub fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        1.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

pub fn f1_score(m: &Matching) -> f64 {
    f1_from_counts(m.true_pos, m.false_pos, m.false_neg)
}

/// A metric value with any conventions that were applied to reach it.
#[derive(Clone, Debug, PartialEq)]
pub struct Scored {
    pub value: f64,
    pub diagnostics: Vec<Diagnostic>,
}

/// Symmetric area-weighted object Dice.
///
/// Each instance is compared with the instance of the other map it overlaps
/// most (Dice 0 if it overlaps none); each direction is weighted by instance
/// area and the two directions are averaged. Two empty maps score 1 (flagged).
pub fn object_dice(pred: &LabelMap, gt: &LabelMap) -> Result<Scored> {
    Ok(dice_from(&Overlaps::new(pred, gt)?))
}

fn dice_from(ov: &Overlaps) -> Scored {
    if ov.pred_area.is_empty() && ov.gt_area.is_empty() {
        return Scored {
            value: 1.0,
            diagnostics: vec![Diagnostic::EmptyMaps { metric: "obj_dice" }],
        };
    }
    let side = |areas: &BTreeMap<u32, usize>, others: &BTreeMap<u32, usize>, gt_side: bool| {
        let total: usize = areas.values().sum();
        if total == 0 {
            return 0.0;
        }
        let best = ov.best_partners(gt_side);
        areas
            .iter()
            .map(|(id, &a)| {
                let dice = match best.get(id) {
                    Some(&(o, n)) => 2.0 * n as f64 / (a + others[&o]) as f64,
                    None => 0.0,
                };
                a as f64 / total as f64 * dice
            })
            .sum::<f64>()
    };
    let g = side(&ov.gt_area, &ov.pred_area, true);
    let s = side(&ov.pred_area, &ov.gt_area, false);
    Scored {
        value: 0.5 * (g + s),
        diagnostics: Vec::new(),
    }
}

/// Contour of a mask: set pixels with an unset 8-neighbor or on the image border.
pub fn contour(mask: &BinaryMask) -> Vec<Pixel> {
    let (w, h) = (mask.width(), mask.height());
    mask.pixels()
        .filter(|&(r, c)| {
            r == 0 || c == 0 || r + 1 == h || c + 1 == w || neighbors(r, c, w, h, &N8).any(|(nr, nc)| !mask.get(nr, nc))
        })
        .collect()
}

/// [`contour`] of every instance of `map`, in one pass.
fn contours(map: &LabelMap) -> BTreeMap<u32, Vec<Pixel>> {
    let (w, h) = (map.width(), map.height());
    let mut out: BTreeMap<u32, Vec<Pixel>> = BTreeMap::new();
    for r in 0..h {
        for c in 0..w {
            let id = map.get(r, c);
            if id == 0 {
                continue;
            }
            let edge = r == 0 || c == 0 || r + 1 == h || c + 1 == w;
            if edge || neighbors(r, c, w, h, &N8).any(|(nr, nc)| map.get(nr, nc) != id) {
                out.entry(id).or_default().push((r, c));
            }
        }
    }
    out
}

fn frame_pixels(w: usize, h: usize) -> Vec<Pixel> {
    (0..h)
        .flat_map(|r| (0..w).map(move |c| (r, c)))
        .filter(|&(r, c)| r == 0 || c == 0 || r + 1 == h || c + 1 == w)
        .collect()
}

fn bounds(points: &[Pixel]) -> Rect {
    let mut rect = Rect {
        row0: usize::MAX,
        col0: usize::MAX,
        row1: 0,
        col1: 0,
    };
    for &(r, c) in points {
        rect.row0 = rect.row0.min(r);
        rect.col0 = rect.col0.min(c);
        rect.row1 = rect.row1.max(r + 1);
        rect.col1 = rect.col1.max(c + 1);
    }
    rect
}

/// `max_{a in from} min_{b in to} |a - b|`, via an exact transform over the
/// joint bounding box.
fn directed_hausdorff(from: &[Pixel], to: &[Pixel]) -> f64 {
    let mut all = from.to_vec();
    all.extend_from_slice(to);
    let b = bounds(&all);
    let (w, h) = (b.width(), b.height());
    let mut bits = vec![false; w * h];
    for &(r, c) in to {
        bits[(r - b.row0) * w + c - b.col0] = true;
    }
    let source = BinaryMask::new(w, h, bits).expect("non-empty box");
    let d2 = squared_distance_transform(&source).expect("non-empty target");
    let worst = from
        .iter()
        .map(|&(r, c)| d2[(r - b.row0) * w + c - b.col0])
        .max()
        .unwrap_or(0);
    (worst as f64).sqrt()
}

/// Symmetric Hausdorff distance between two non-empty point sets.
pub fn hausdorff(a: &[Pixel], b: &[Pixel]) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// Id of the instance in `others` closest to `mask` (ties to the lowest id).
fn nearest_instance(mask: &BinaryMask, others: &LabelMap) -> Option<u32> {
    let d2 = squared_distance_transform(mask)?;
    let mut best: Option<(i64, u32)> = None;
    for (i, &id) in others.labels().iter().enumerate() {
        if id != 0 && best.is_none_or(|(d, b)| d2[i] < d || (d2[i] == d && id < b)) {
            best = Some((d2[i], id));
        }
    }
    best.map(|(_, id)| id)
}

/// Symmetric area-weighted object Hausdorff distance between instance contours.
///
/// Partners are chosen as for [`object_dice`]. An instance overlapping nothing
/// is paired with the nearest instance of the other map; when the other map is
/// empty it is measured against the image frame and flagged.
pub fn object_hausdorff(pred: &LabelMap, gt: &LabelMap) -> Result<Scored> {
    Ok(hausdorff_from(&Overlaps::new(pred, gt)?, pred, gt))
}

fn hausdorff_from(ov: &Overlaps, pred: &LabelMap, gt: &LabelMap) -> Scored {
    let mut diagnostics = Vec::new();
    if ov.pred_area.is_empty() && ov.gt_area.is_empty() {
        diagnostics.push(Diagnostic::EmptyMaps {
            metric: "obj_hausdorff",
        });
        return Scored {
            value: 0.0,
            diagnostics,
        };
    }
    let frame = frame_pixels(gt.width(), gt.height());
    let (gt_contours, pred_contours) = (contours(gt), contours(pred));
    let mut side = |mine: &LabelMap,
                    areas: &BTreeMap<u32, usize>,
                    my_contours: &BTreeMap<u32, Vec<Pixel>>,
                    theirs: &LabelMap,
                    their_contours: &BTreeMap<u32, Vec<Pixel>>,
                    gt_side: bool| {
        let total: usize = areas.values().sum();
        let best = ov.best_partners(gt_side);
        let mut acc = 0.0;
        for (&id, &a) in areas {
            let partner = match best.get(&id) {
                Some(&(o, _)) => Some(o),
                None => nearest_instance(&mine.mask_of(id), theirs),
            };
            let target = match partner {
                Some(o) => &their_contours[&o],
                None => {
                    diagnostics.push(Diagnostic::FramePairing { id });
                    &frame
                }
            };
            acc += a as f64 / total as f64 * hausdorff(&my_contours[&id], target);
        }
        acc
    };
    let g = if ov.gt_area.is_empty() {
        0.0
    } else {
        side(gt, &ov.gt_area, &gt_contours, pred, &pred_contours, true)
    };
    let s = if ov.pred_area.is_empty() {
        0.0
    } else {
        side(pred, &ov.pred_area, &pred_contours, gt, &gt_contours, false)
    };
    let value = if ov.gt_area.is_empty() || ov.pred_area.is_empty() {
        g + s
    } else {
        0.5 * (g + s)
    };
    Scored { value, diagnostics }
}

/// `(splits, merges)`: ground-truth instances covered by two or more
/// predictions, and predictions covering two or more ground-truth instances.
/// A piece counts only if it covers at least 10% of the ground-truth area.
pub fn split_merge_counts(pred: &LabelMap, gt: &LabelMap) -> Result<(usize, usize)> {
    Ok(split_merge_from(&Overlaps::new(pred, gt)?))
}

fn split_merge_from(ov: &Overlaps) -> (usize, usize) {
    let significant = |g: u32, n: usize| n as f64 >= SPLIT_MERGE_FLOOR * ov.gt_area[&g] as f64;
    let mut per_gt: BTreeMap<u32, usize> = BTreeMap::new();
    let mut per_pred: BTreeMap<u32, usize> = BTreeMap::new();
    for (&(p, g), &n) in &ov.pairs {
        if significant(g, n) {
            *per_gt.entry(g).or_insert(0) += 1;
            *per_pred.entry(p).or_insert(0) += 1;
        }
    }
    let splits = per_gt.values().filter(|&&k| k >= 2).count();
    let merges = per_pred.values().filter(|&&k| k >= 2).count();
    (splits, merges)
}

/// Best IoU of each ground-truth instance with any prediction (0 if none).
pub fn per_instance_iou(pred: &LabelMap, gt: &LabelMap) -> Result<BTreeMap<u32, f64>> {
    let ov = Overlaps::new(pred, gt)?;
    let mut out: BTreeMap<u32, f64> = ov.gt_area.keys().map(|&g| (g, 0.0)).collect();
    for (&(p, g), &n) in &ov.pairs {
        let iou = ov.iou(p, g, n);
        let slot = out.get_mut(&g).expect("gt id present");
        *slot = slot.max(iou);
    }
    Ok(out)
}

/// Metrics of one image.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub f1: f64,
    pub obj_dice: f64,
    pub obj_hausdorff: f64,
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub splits: usize,
    pub merges: usize,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn evaluate(pred: &LabelMap, gt: &LabelMap) -> Result<EvalReport> {
    let ov = Overlaps::new(pred, gt)?;
    let m = matching_from(&ov, DEFAULT_IOU_THRESHOLD);
    let dice = dice_from(&ov);
    let haus = hausdorff_from(&ov, pred, gt);
    let (splits, merges) = split_merge_from(&ov);
    let mut diagnostics = dice.diagnostics;
    diagnostics.extend(haus.diagnostics);
    Ok(EvalReport {
        f1: f1_score(&m),
        obj_dice: dice.value,
        obj_hausdorff: haus.value,
        true_pos: m.true_pos,
        false_pos: m.false_pos,
        false_neg: m.false_neg,
        splits,
        merges,
        diagnostics,
    })
}

/// One CSV row. Column order: image, f1, obj_dice, obj_hausdorff, true_pos,
/// false_pos, false_neg, splits, merges.
#[derive(Serialize)]
struct Row<'a> {
    image: &'a str,
    f1: f64,
    obj_dice: f64,
    obj_hausdorff: f64,
    true_pos: usize,
    false_pos: usize,
    false_neg: usize,
    splits: usize,
    merges: usize,
}

/// Pooled report: counts summed, F1 recomputed from the summed counts, Dice and
/// Hausdorff averaged over images.
pub fn aggregate(reports: &[EvalReport]) -> EvalReport {
    let n = reports.len().max(1) as f64;
    let sum = |f: fn(&EvalReport) -> usize| reports.iter().map(f).sum::<usize>();
    let (tp, fp, fn_) = (sum(|r| r.true_pos), sum(|r| r.false_pos), sum(|r| r.false_neg));
    EvalReport {
        f1: f1_from_counts(tp, fp, fn_),
        obj_dice: reports.iter().map(|r| r.obj_dice).sum::<f64>() / n,
        obj_hausdorff: reports.iter().map(|r| r.obj_hausdorff).sum::<f64>() / n,
        true_pos: tp,
        false_pos: fp,
        false_neg: fn_,
        splits: sum(|r| r.splits),
        merges: sum(|r| r.merges),
        diagnostics: reports.iter().flat_map(|r| r.diagnostics.iter().cloned()).collect(),
    }
}

/// Writes one row per named report followed by an `aggregate` row.
pub fn write_reports_csv<W: Write>(out: W, reports: &[(String, EvalReport)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let pooled = aggregate(&reports.iter().map(|(_, r)| r.clone()).collect::<Vec<_>>());
    let all = reports
        .iter()
        .map(|(n, r)| (n.as_str(), r))
        .chain([("aggregate", &pooled)]);
    for (image, r) in all {
        w.serialize(Row {
            image,
            f1: r.f1,
            obj_dice: r.obj_dice,
            obj_hausdorff: r.obj_hausdorff,
            true_pos: r.true_pos,
            false_pos: r.false_pos,
            false_neg: r.false_neg,
            splits: r.splits,
            merges: r.merges,
        })?;
    }
    w.flush().map_err(|e| Error::io(Path::new("<csv>"), e))?;
    Ok(())
}
