mod common;

use subsearch::bench::{compare_methods, format_table, generate, MethodConfig, Shape, SyntheticSpec};
use subsearch::patches::{build_patches, cluster_candidates};
use subsearch::profile::ProfileCost;
use subsearch::search::{scan_top_m, CostSource, SsdCost, Warning};
use subsearch::*;

fn planted() -> (PreparedImage, Image, Vec<(usize, usize)>) {
    let scene = generate(&SyntheticSpec::planted_disks()).unwrap();
    let reference = scene.image.crop(61, 83, 30, 30).unwrap();
    let truth = scene.truth.iter().map(|b| (b.x, b.y)).collect();
    (PreparedImage::new(scene.image), reference, truth)
}

fn positions(cands: &[Candidate]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = cands.iter().map(|c| (c.x, c.y)).collect();
    out.sort_unstable();
    out
}

#[test]
fn every_method_finds_the_planted_disks_exactly() {
    let (prepared, reference, mut truth) = planted();
    truth.sort_unstable();
    for method in Method::ALL {
        let outcome = run(method, &prepared, &reference, &SearchParams::default()).unwrap();
        assert_eq!(positions(&outcome.candidates), truth, "{method}");
        assert!(outcome.warnings.is_empty());
    }
}

#[test]
fn comparison_reports_agree_at_stride_one() {
    let (prepared, reference, _) = planted();
    let configs: Vec<MethodConfig> = Method::ALL
        .iter()
        .map(|&method| MethodConfig {
            method,
            params: SearchParams::default(),
            link_factor: Some(2.0),
        })
        .collect();
    let reports = compare_methods(&prepared, &reference, &configs);
    assert_eq!(reports.len(), 3);
    let first = positions(&reports[0].accepted);
    for r in &reports {
        assert!(r.error.is_none());
        assert_eq!(positions(&r.accepted), first);
        assert_eq!(r.patch_count, Some(3));
        assert_eq!(r.exhaustive_size, 347 * 403);
    }
    assert!(reports[2].cost_terms < reports[1].cost_terms && reports[1].cost_terms < reports[0].cost_terms);
    let table = format_table(&reports);
    assert_eq!(table.lines().count(), 4);
    assert!(table.contains("apts-v2"));
}

#[test]
fn comparison_records_failures_per_method() {
    let (prepared, _, _) = planted();
    let too_big = Image::filled(400, 10, [0, 0, 0]).unwrap();
    let reports = compare_methods(
        &prepared,
        &too_big,
        &[MethodConfig {
            method: Method::AptsV1,
            params: SearchParams::default(),
            link_factor: None,
        }],
    );
    assert!(reports[0].error.as_deref().unwrap().contains("larger than image"));
}

#[test]
fn synthetic_scenes_are_reproducible() {
    let mut spec = SyntheticSpec::planted_disks();
    spec.noise = 12;
    let a = generate(&spec).unwrap();
    let b = generate(&spec).unwrap();
    assert_eq!(a.image, b.image);
    spec.seed += 1;
    assert_ne!(generate(&spec).unwrap().image, a.image);
}

#[test]
fn noisy_scene_still_resolves_all_disks() {
    let mut spec = SyntheticSpec::planted_disks();
    spec.noise = 20;
    let scene = generate(&spec).unwrap();
    let reference = scene.image.crop(61, 83, 30, 30).unwrap();
    let prepared = PreparedImage::new(scene.image);
    for method in Method::ALL {
        let outcome = run(method, &prepared, &reference, &SearchParams::default()).unwrap();
        for b in &scene.truth {
            assert!(
                outcome
                    .candidates
                    .iter()
                    .any(|c| c.x.abs_diff(b.x) <= 3 && c.y.abs_diff(b.y) <= 3),
                "{method} missed the disk at ({}, {})",
                b.x,
                b.y
            );
        }
    }
}

#[test]
fn profile_terms_grow_linearly_with_reference_side() {
    let img = common::random_image(&mut common::rng(11), 64, 64, 3);
    let prepared = PreparedImage::new(img.clone());
    let space = SearchSpace {
        xs: vec![0, 10, 20, 30],
        ys: vec![0, 5, 40],
        stride_x: 1,
        stride_y: 1,
    };
    for side in [4usize, 8, 16] {
        let reference = img.crop(3, 3, side, side).unwrap();
        let profile = reduce_reference(&reference, Axis::Rows);
        let cost = ProfileCost::new(prepared.integral(), &profile, side, side).unwrap();
        let scan = scan_top_m(&space, 3, &cost).unwrap();
        assert_eq!(scan.evaluations, 12);
        assert_eq!(scan.terms, 12 * side as u64 * 3);
        let full = scan_top_m(&space, 3, &SsdCost::new(&img, &reference).unwrap()).unwrap();
        assert_eq!(full.terms, 12 * (side * side) as u64 * 3);
    }
}

#[test]
fn segmentation_falls_back_to_largest_changes() {
    // 20 alternating swings whose magnitudes are a permutation of 905..=1000
    let mut values = vec![1000u64];
    for t in 0..20u64 {
        let magnitude = 905 + 5 * ((7 * t) % 20);
        let last = *values.last().unwrap();
        values.push(if t % 2 == 0 { last + magnitude } else { last - magnitude });
    }
    let series = MultiSeries::new(Axis::Rows, 1, values);
    let seg = segment(&series, &AptsParams::default().with_k_max(4)).unwrap();
    assert!(seg.truncated);
    assert_eq!(seg.instants, vec![8, 11, 14, 17]);

    let relaxed = segment(&series, &AptsParams::default().with_k_max(20)).unwrap();
    assert!(!relaxed.truncated);
    assert_eq!(relaxed.instants, (0..20).collect::<Vec<_>>());
}

#[test]
fn truncation_is_reported_as_a_warning() {
    // row and column sums swing by the full range every two indices
    let img = Image::from_fn(40, 40, |x, y| {
        let v = (((x / 2) % 2) * 120 + ((y / 2) % 2) * 120) as u8;
        [v, v, v]
    })
    .unwrap();
    let reference = img.crop(0, 0, 4, 4).unwrap();
    let params = SearchParams {
        apts: AptsParams::default().with_k_max(2),
        ..SearchParams::default()
    };
    let outcome = run(Method::AptsV1, &PreparedImage::new(img), &reference, &params).unwrap();
    assert!(outcome
        .warnings
        .contains(&Warning::SegmentationTruncated { axis: Axis::Rows }));
    assert!(outcome
        .warnings
        .contains(&Warning::SegmentationTruncated { axis: Axis::Cols }));
}

#[test]
fn uniform_image_gives_empty_space_warning() {
    let img = Image::filled(30, 30, [9, 9, 9]).unwrap();
    let reference = img.crop(0, 0, 5, 5).unwrap();
    let outcome = run(
        Method::AptsV2,
        &PreparedImage::new(img),
        &reference,
        &SearchParams::default(),
    )
    .unwrap();
    assert!(outcome.candidates.is_empty());
    assert_eq!(outcome.cost_evals(), 0);
    assert_eq!(outcome.warnings, vec![Warning::EmptySearchSpace]);
}

#[test]
fn stride_aligned_results() {
    let (prepared, reference, _) = planted();
    let params = SearchParams {
        stride_x: 4,
        stride_y: 3,
        ..SearchParams::default()
    };
    for method in Method::ALL {
        let outcome = run(method, &prepared, &reference, &params).unwrap();
        assert_eq!(outcome.candidates.len(), 3, "{method}");
        assert!(outcome.candidates.iter().all(|c| c.x % 4 == 0 && c.y % 3 == 0));
    }
}

#[test]
fn single_candidate_when_m_is_one() {
    let (prepared, reference, _) = planted();
    let params = SearchParams {
        top_m: 1,
        ..SearchParams::default()
    };
    for method in Method::ALL {
        let outcome = run(method, &prepared, &reference, &params).unwrap();
        assert_eq!(outcome.candidates.len(), 1, "{method}");
    }
}

#[test]
fn v2_candidates_come_from_profile_costs() {
    let (prepared, reference, _) = planted();
    let outcome = run(Method::AptsV2, &prepared, &reference, &SearchParams::default()).unwrap();
    assert_eq!(outcome.scans.len(), 2);
    assert!(outcome
        .candidates
        .iter()
        .all(|c| matches!(c.source, CostSource::Axis0 | CostSource::Axis1)));
    let scalar = SearchParams {
        scalar_profile: true,
        ..SearchParams::default()
    };
    let outcome = run(Method::AptsV2, &prepared, &reference, &scalar).unwrap();
    assert_eq!(outcome.scans.len(), 1);
    assert!(outcome.candidates.iter().all(|c| c.source == CostSource::Scalar));
}

#[test]
fn warm_and_cold_caches_give_identical_reports() {
    let (prepared, reference, _) = planted();
    let cold = PreparedImage::new(prepared.image().clone());
    prepared.warm();
    assert!(prepared.is_warm() && !cold.is_warm());
    for method in Method::ALL {
        let mut options = RunOptions::new(method, SearchParams::default());
        options.link_factor = Some(2.0);
        let (warm_report, _) = execute(&prepared, &reference, &options).unwrap();
        let (cold_report, _) = execute(&cold, &reference, &options).unwrap();
        assert_eq!(warm_report.without_timing(), cold_report.without_timing());
    }
}

fn blob_candidates(origin: (usize, usize), count: usize) -> Vec<Candidate> {
    (0..count)
        .map(|i| Candidate {
            x: origin.0 + 4 * (i % 3),
            y: origin.1 + 5 * (i / 3),
            cost: i as f64,
            source: CostSource::Full,
        })
        .collect()
}

#[test]
fn two_blobs_give_two_contours() {
    let mut cands = blob_candidates((10, 10), 5);
    cands.extend(blob_candidates((200, 300), 5));
    let patches = build_patches(&cands, 4, 5, 2.0);
    assert_eq!(patches.len(), 2);
    for patch in &patches {
        assert_eq!(patch.members.len(), 5);
        assert_eq!(patch.contour.vertices.len(), 5);
    }
    let clusters = cluster_candidates(&cands, 4, 5, 2.0);
    let mut all: Vec<usize> = clusters.iter().flat_map(|c| c.members.clone()).collect();
    all.sort_unstable();
    assert_eq!(all, (0..10).collect::<Vec<_>>());
}

#[test]
fn rectangles_in_scene_are_painted() {
    let spec = SyntheticSpec {
        rows: 20,
        cols: 20,
        background: [255, 255, 255],
        shapes: vec![Shape::Rect {
            x: 2,
            y: 3,
            h: 4,
            w: 5,
            color: [10, 20, 30],
        }],
        noise: 0,
        seed: 0,
    };
    let scene = generate(&spec).unwrap();
    assert_eq!(scene.image.pixel(2, 3), &[10, 20, 30]);
    assert_eq!(scene.image.pixel(5, 7), &[10, 20, 30]);
    assert_eq!(scene.image.pixel(6, 7), &[255, 255, 255]);
}
