mod common;

use proptest::prelude::*;

use sdt::geometry::{count_background_components, count_components, distance_to_set, Connectivity};
use sdt::metrics::{evaluate, f1_from_counts, match_instances, object_dice, object_hausdorff};
use sdt::raster::{read_label_map, write_label_map};
use sdt::representations::{dequantize, encode_sdt, quantize, sdt_value, QuantParams, SdtParams};
use sdt::skeleton::skeletonize;
use sdt::synth::{generate, perturb_energy, Family, PerturbKind, PerturbSpec, SceneSpec};
use sdt::{BinaryMask, EnergyMap, LabelMap, Transform};

use common::*;

fn label_map(max_side: usize, max_id: u32) -> impl Strategy<Value = LabelMap> {
    (1..=max_side, 1..=max_side).prop_flat_map(move |(w, h)| {
        prop::collection::vec(0..=max_id, w * h).prop_map(move |l| LabelMap::new(w, h, l).unwrap())
    })
}

fn mask(max_side: usize) -> impl Strategy<Value = BinaryMask> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<bool>(), w * h).prop_map(move |b| BinaryMask::new(w, h, b).unwrap())
    })
}

/// Union of a few rectangles, so shapes have thick parts to thin.
fn blocky_mask(side: usize) -> impl Strategy<Value = BinaryMask> {
    prop::collection::vec((0..side, 0..side, 1..side, 1..side), 1..5).prop_map(move |rects| {
        BinaryMask::from_fn(side, side, |r, c| {
            rects
                .iter()
                .any(|&(r0, c0, h, w)| r >= r0 && r < r0 + h && c >= c0 && c < c0 + w)
        })
        .unwrap()
    })
}

fn family() -> impl Strategy<Value = Family> {
    prop::sample::select(Family::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn label_png_round_trips(map in label_map(20, 65535)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        write_label_map(&map, &path).unwrap();
        prop_assert_eq!(read_label_map(&path).unwrap(), map);
    }

    #[test]
    fn distance_matches_all_pairs(source in mask(16), domain_bits in prop::collection::vec(any::<bool>(), 256)) {
        prop_assume!(!source.is_empty());
        let (w, h) = (source.width(), source.height());
        let domain = BinaryMask::new(w, h, domain_bits[..w * h].to_vec()).unwrap();
        let field = distance_to_set::<f64>(&domain, &source.to_pixel_set()).unwrap();
        let pts: Vec<_> = source.pixels().collect();
        let oracle = brute_distance(w, h, &pts);
        for r in 0..h {
            for c in 0..w {
                match field.get(r, c) {
                    Some(d) => {
                        prop_assert!(domain.get(r, c));
                        prop_assert!((d - oracle[r * w + c]).abs() <= 1e-9);
                    }
                    None => prop_assert!(!domain.get(r, c)),
                }
            }
        }
    }

    #[test]
    fn component_counts_match_flood_fill(m in mask(14)) {
        prop_assert_eq!(count_components(&m, Connectivity::Eight), foreground_components(&m));
        prop_assert_eq!(count_background_components(&m), background_components(&m));
    }

    #[test]
    fn thinning_keeps_topology_and_stays_inside(m in mask(14)) {
        let s = skeletonize(&m);
        let skel = s.skeleton.to_mask();
        prop_assert!(skel.and_not(&m).unwrap().is_empty());
        prop_assert_eq!(foreground_components(&skel), foreground_components(&m));
        prop_assert_eq!(background_components(&skel), background_components(&m));
        prop_assert_eq!(s.skeleton_components, s.source_components);
    }

    #[test]
    fn parallel_thinning_is_equivariant(m in blocky_mask(20)) {
        let s = skeletonize(&m);
        prop_assume!(!s.used_directional_step);
        for t in Transform::ALL {
            prop_assert_eq!(skeletonize(&m.transformed(t)).skeleton, s.skeleton.transformed(t));
        }
    }

    #[test]
    fn quantization_is_stable(values in prop::collection::vec(prop_oneof![Just(-1.0f64), 0.0f64..=1.0], 1..200), k in 1u16..=40) {
        let q = QuantParams::new(k).unwrap();
        let e = EnergyMap::new(values.len(), 1, values).unwrap();
        let once = quantize(&e, q);
        let twice = quantize(&dequantize::<f64>(&once, q).unwrap(), q);
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn larger_alpha_lowers_interior_energy(db in 0.5f64..50.0, ds in 0.5f64..50.0, a1 in 0.1f64..3.0, gap in 0.01f64..2.0) {
        let p1 = SdtParams::with_alpha(a1).unwrap();
        let p2 = SdtParams::with_alpha(a1 + gap).unwrap();
        prop_assert!(sdt_value(db, ds, &p1) > sdt_value(db, ds, &p2));
    }

    #[test]
    fn energy_of_one_instance_ignores_a_distant_one(
        (h1, w1) in (3usize..12, 3usize..12),
        (h2, w2, h3, w3) in (1usize..12, 1usize..12, 1usize..12, 1usize..12),
    ) {
        // instance 1 on the left, instance 2 at least two columns to the right in two shapes
        let build = |h2: usize, w2: usize| {
            let mut l = vec![0u32; 16 * 32];
            for r in 2..2 + h1 {
                for c in 2..2 + w1 {
                    l[r * 32 + c] = 1;
                }
            }
            for r in 2..2 + h2 {
                for c in 16..16 + w2 {
                    l[r * 32 + c] = 2;
                }
            }
            LabelMap::new(32, 16, l).unwrap()
        };
        let p = SdtParams::<f64>::default();
        let (a, b) = (build(h2, w2), build(h3, w3));
        let (ea, eb) = (encode_sdt(&a, &p).unwrap().energy, encode_sdt(&b, &p).unwrap().energy);
        for (i, &id) in a.labels().iter().enumerate() {
            if id == 1 {
                prop_assert_eq!(ea.values()[i], eb.values()[i]);
            }
        }
    }

    #[test]
    fn metrics_are_symmetric_and_label_blind(a in label_map(12, 4), b_bits in prop::collection::vec(0u32..=4, 144), perm in Just([0u32, 7, 3, 9, 5]).prop_shuffle()) {
        let b = LabelMap::new(a.width(), a.height(), b_bits[..a.len()].to_vec()).unwrap();
        let d = (object_dice(&a, &b).unwrap().value, object_dice(&b, &a).unwrap().value);
        prop_assert!((d.0 - d.1).abs() < 1e-12);
        let h = (object_hausdorff(&a, &b).unwrap().value, object_hausdorff(&b, &a).unwrap().value);
        prop_assert!((h.0 - h.1).abs() < 1e-9);
        prop_assert!((h.0 - oracle_object_hausdorff(&a, &b)).abs() < 1e-9);

        // relabel the prediction with distinct nonzero ids
        let ids = [0u32, perm[0].max(1), perm[1].max(2) + 10, perm[2] + 20, perm[3] + 30];
        let relabelled = LabelMap::new(a.width(), a.height(), a.labels().iter().map(|&l| ids[l as usize]).collect()).unwrap();
        let (m0, m1) = (match_instances(&a, &b, 0.5).unwrap(), match_instances(&relabelled, &b, 0.5).unwrap());
        prop_assert_eq!((m0.true_pos, m0.false_pos, m0.false_neg), (m1.true_pos, m1.false_pos, m1.false_neg));

        let r = evaluate(&a, &b).unwrap();
        prop_assert_eq!(r.f1, f1_from_counts(r.true_pos, r.false_pos, r.false_neg));
        prop_assert!((0.0..=1.0).contains(&r.f1) && (0.0..=1.0).contains(&r.obj_dice) && r.obj_hausdorff >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generation_is_a_pure_function_of_the_spec(f in family(), seed in any::<u64>(), count in 1usize..5) {
        let spec = SceneSpec::new(96, 96, f, count, seed);
        if let Ok(map) = generate(&spec) {
            prop_assert_eq!(generate(&spec).unwrap(), map.clone());
            prop_assert_eq!(map.ids(), (1..=count as u32).collect::<Vec<_>>());
            prop_assert!(map.areas().values().all(|&a| a > 0));
        }
    }

    #[test]
    fn noise_stays_in_range_and_zero_is_identity(seed in any::<u64>(), amount in 0.0f64..=1.0) {
        let map = generate(&SceneSpec::new(48, 48, Family::RandomBlob, 2, seed % 1000)).unwrap();
        let e = encode_sdt(&map, &SdtParams::<f64>::default()).unwrap().energy;
        let noisy = perturb_energy(&e, &PerturbSpec::new(PerturbKind::EnergyNoise, amount, seed).unwrap()).unwrap();
        for (&v, &orig) in noisy.values().iter().zip(e.values()) {
            if orig < 0.0 {
                prop_assert_eq!(v, orig);
            } else {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
        let same = perturb_energy(&e, &PerturbSpec::new(PerturbKind::EnergyNoise, 0.0, seed).unwrap()).unwrap();
        prop_assert_eq!(same, e);
    }
}
