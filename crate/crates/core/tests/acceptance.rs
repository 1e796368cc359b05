//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::Vector3;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use wayfind_core::direction::{optimal_direction, sector_awards, DirectionConfig, SectorScan, WalkAction};
use wayfind_core::eval::bench::{benchmark, REFERENCE_MS, ROW_TOTAL};
use wayfind_core::eval::config::Config;
use wayfind_core::eval::dataset::Dataset;
use wayfind_core::eval::evaluate_ground;
use wayfind_core::eval::metrics::ground_iou;
use wayfind_core::eval::pipeline::Detections;
use wayfind_core::eval::synth::{generate_synthetic_scene, AttitudeKey, Hit, Primitive, PrimitiveKind, Renderer, SceneSpec};
use wayfind_core::feedback::{beeps_alternate, navigation_feedback, non_ground_feedback, EventKind, FeedbackState};
use wayfind_core::fusion::{
    close_and_extract_contours, extract_contours, fuse_detections, map_detection_to_depth, remove_ground, BBox,
    Detection2D, DirectionBucket, Extrinsics, FusionConfig, UNLABELED,
};
use wayfind_core::geometry::{
    project_pixel, reconstruct_pixel, reconstruct_pointcloud, Attitude, CameraIntrinsics, DepthFrame, Point3,
    PointCloud,
};
use wayfind_core::ground::{detect_ground, fit_plane_ransac, otsu_split, GroundConfig, GroundState};
use wayfind_core::mask::{Mask, Region};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scene(name: &str) -> SceneSpec {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenes").join(name);
    SceneSpec::load(&path).expect("bundled scene")
}

fn geometry_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let k = CameraIntrinsics::new(525.0, 525.0, 319.5, 239.5).unwrap();
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let u = rng.random_range(0.0..640.0);
        let v = rng.random_range(0.0..480.0);
        let z = rng.random_range(0.1..10.0);
        let att = Attitude::from_degrees(rng.random_range(-85.0..85.0), rng.random_range(-85.0..85.0)).unwrap();
        let p = reconstruct_pixel(u, v, z, &k, &att);
        let back = project_pixel(&Point3::new(p.x, p.y, p.z), &k, &att).map_err(|e| e.to_string())?;
        worst = worst.max((back.u - u).abs()).max((back.v - v).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst < 1e-6 && secs < 5.0,
        format!("max pixel error {worst:.2e} over 100000 triples in {secs:.3} s"),
    )
}

/// Between-class variance `(μT·ω0 − μ(k))² / (ω0·(1 − ω0))` in exact rationals.
fn otsu_oracle(hist: &[u64]) -> Option<usize> {
    let big = |x: u64| BigRational::from_integer(BigInt::from(x));
    let n: u64 = hist.iter().sum();
    if hist.len() < 2 {
        return None;
    }
    let total = big(n.max(1));
    let mu_t = hist.iter().enumerate().map(|(i, &h)| big(i as u64 * h)).sum::<BigRational>() / &total;
    let mut best: Option<(usize, BigRational)> = None;
    for k in 1..hist.len() {
        let omega = hist[..k].iter().map(|&h| big(h)).sum::<BigRational>() / &total;
        let mu_k = hist[..k]
            .iter()
            .enumerate()
            .map(|(i, &h)| big(i as u64 * h))
            .sum::<BigRational>()
            / &total;
        let one = big(1);
        let score = if omega == big(0) || omega == one {
            big(0)
        } else {
            let diff = &mu_t * &omega - mu_k;
            &diff * &diff / (&omega * (one - &omega))
        };
        if best.as_ref().is_none_or(|(_, s)| score > *s) {
            best = Some((k, score));
        }
    }
    best.map(|(k, _)| k)
}

fn otsu_exact() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    for t in 0..1000 {
        let bins: usize = [64, 64, 64, 16, 7][t % 5];
        let hist: Vec<u64> = match t % 4 {
            // sparse, mostly empty
            0 => (0..bins).map(|_| if rng.random_bool(0.15) { rng.random_range(1..50) } else { 0 }).collect(),
            // two clusters
            1 => {
                let (a, b) = (rng.random_range(0..bins / 2), rng.random_range(bins / 2..bins));
                (0..bins)
                    .map(|i| {
                        let d = (i as i64 - a as i64).abs().min((i as i64 - b as i64).abs());
                        (1000 / (1 + d * d)) as u64
                    })
                    .collect()
            }
            // mirror-symmetric, invites ties
            2 => {
                let half: Vec<u64> = (0..bins.div_ceil(2)).map(|_| rng.random_range(0..5)).collect();
                (0..bins).map(|i| half[i.min(bins - 1 - i)]).collect()
            }
            _ => (0..bins).map(|_| rng.random_range(0..1_000_000)).collect(),
        };
        if otsu_split(&hist) != otsu_oracle(&hist) {
            mismatches += 1;
        }
    }
    check(mismatches == 0, format!("{mismatches} mismatches on 1000 histograms"))
}

fn plane_fit_recovery() -> Outcome {
    let cfg = GroundConfig::default();
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut ok = 0;
    let mut worst = (0.0f64, 0.0f64);
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
        let tilt = rng.random_range(0.0..10.0f64).to_radians();
        let az = rng.random_range(0.0..2.0 * PI);
        let normal = Vector3::new(tilt.sin() * az.cos(), tilt.cos(), tilt.sin() * az.sin());
        let h = rng.random_range(-1.6..-1.2);
        // plane through (0, h, 0)
        let d = -normal.y * h;
        let mut pts = Vec::new();
        for _ in 0..300 {
            let (x, z) = (rng.random_range(-1.5..1.5), rng.random_range(0.5..3.0));
            let y = -(normal.x * x + normal.z * z + d) / normal.y;
            let p = Vector3::new(x, y, z) + normal * noise.sample(&mut rng);
            pts.push(Point3::new(p.x, p.y, p.z));
        }
        for _ in 0..34 {
            pts.push(Point3::new(
                rng.random_range(-1.5..1.5),
                rng.random_range(h..h + 1.5),
                rng.random_range(0.5..3.0),
            ));
        }
        let Ok(plane) = fit_plane_ransac(&PointCloud::new(pts), &cfg, trial) else {
            continue;
        };
        let n = plane.normal();
        let angle = n.dot(&normal).abs().min(1.0).acos().to_degrees();
        let height = -plane.d / n.y;
        let herr = (height - h).abs();
        worst = (worst.0.max(angle), worst.1.max(herr));
        if angle < 2.0 && herr < 0.02 {
            ok += 1;
        }
    }
    check(
        ok >= 95,
        format!(
            "{ok}/100 trials within 2 deg and 2 cm (worst {:.3} deg, {:.2} cm)",
            worst.0,
            worst.1 * 100.0
        ),
    )
}

fn temporal_robustness() -> Outcome {
    let spec = scene("distractor.toml");
    let seed = 11;
    let cabinet = spec
        .objects
        .iter()
        .position(|o| o.label.as_deref() == Some("cabinet"))
        .ok_or("distractor scene has no cabinet")?;
    let top_y = spec.objects[cabinet].max[1];
    let k = spec.intrinsics();
    let tz = GroundConfig::default().tz;
    let mut top_share = 0.0f64;
    for f in Renderer::new(&spec, seed).map_err(|e| e.to_string())? {
        let f = f.map_err(|e| e.to_string())?;
        let cloud = reconstruct_pointcloud(&f.exact_depth, &k, &f.attitude).map_err(|e| e.to_string())?;
        let (mut top, mut all) = (0usize, 0usize);
        for p in cloud.iter().filter(|p| p.z > 0.0 && p.z < tz) {
            all += 1;
            let (u, v) = p.pixel.unwrap();
            let hit = f.hits[v as usize * spec.width + u as usize];
            if hit == Hit::Object(cabinet) && (p.y - top_y).abs() < 1e-4 {
                top += 1;
            }
        }
        top_share = top_share.max(top as f64 / all.max(1) as f64);
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    generate_synthetic_scene(&spec, seed, dir.path()).map_err(|e| e.to_string())?;
    let ds = Dataset::open(dir.path()).map_err(|e| e.to_string())?;
    let cfg = Config::default();
    let rep = evaluate_ground(&ds, &cfg).map_err(|e| e.to_string())?;
    let win = rep.temporal_win_rate().unwrap_or(0.0);
    let table = &rep.precision;
    let t = table.thresholds.iter().position(|&x| x == 0.4).ok_or("0.4 not among thresholds")?;
    let bands: Vec<String> = (0..table.bands.len())
        .map(|b| {
            format!(
                "[{},{}) {:.2}/{:.2} n={}",
                table.bands[b][0], table.bands[b][1], table.temporal[b][t], table.baseline[b][t], table.frames[b]
            )
        })
        .collect();
    let dominates = table.temporal_dominates_at(0.4) == Some(true);
    check(
        rep.frames.len() == 100 && win >= 0.9 && top_share <= 0.4 && dominates,
        format!(
            "win rate {:.2} over {} frames, distractor share <= {:.3}, precision@0.4 temporal/baseline {}",
            win,
            rep.frames.len(),
            top_share,
            bands.join(", ")
        ),
    )
}

/// Independent scorer: every sector recomputed from scratch, then a full
/// scan for the maximum under the tie rules.
fn direction_oracle(z: &[f64], cfg: &DirectionConfig) -> (usize, WalkAction) {
    let n = z.len();
    let half = (n / 2) as f64;
    let award: Vec<f64> = (0..n)
        .map(|i| {
            let ratio = if cfg.w_sw / z[i] > 1.0 { 1.0 } else { cfg.w_sw / z[i] };
            let span = (ratio.asin().to_degrees() / cfg.theta).floor() as usize;
            let mut reach = f64::INFINITY;
            for &zj in z.iter().skip(i).take(span + 1) {
                if zj < reach {
                    reach = zj;
                }
            }
            cfg.award_angle_weight * (90.0 - cfg.theta * (i as f64 - half).abs()) + cfg.award_dist_weight * reach
        })
        .collect();
    let top = award.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let best = (0..n)
        .filter(|&i| award[i] == top)
        .min_by_key(|&i| ((i as i64 - n as i64 / 2).abs(), i))
        .unwrap();
    let gamma = cfg.theta * (best as f64 - half);
    let action = if z[best] < cfg.tau {
        WalkAction::Blocked
    } else if gamma.abs() <= cfg.straight_band {
        WalkAction::Straight
    } else {
        WalkAction::Turn(gamma)
    };
    (best, action)
}

fn direction_search_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut mismatches, mut blocked, mut straight, mut turn) = (0, 0, 0, 0);
    for t in 0..1000 {
        let mut cfg = DirectionConfig::default();
        if t % 2 == 1 {
            cfg.n_sectors = 2 * rng.random_range(5..100);
            cfg.theta = [0.5, 1.0, 0.25][t % 3];
            cfg.w_sw = rng.random_range(0.2..1.2);
            cfg.award_angle_weight = rng.random_range(0.0..3.0);
            cfg.award_dist_weight = rng.random_range(0.0..60.0);
            cfg.tau = rng.random_range(0.3..1.5);
        }
        let tz = 3.0;
        let style = t % 4;
        let nearest: Vec<f64> = (0..cfg.n_sectors)
            .map(|_| match style {
                // quantized values produce exact award ties
                0 => [0.5, 1.0, 1.5, 3.0][rng.random_range(0..4)],
                // cluttered close range, often blocked
                1 => rng.random_range(0.1..1.0),
                2 => if rng.random_bool(0.4) { tz } else { rng.random_range(0.2..tz) },
                _ => rng.random_range(0.05..tz),
            })
            .collect();
        let scan = SectorScan { nearest, tz };
        let awards = sector_awards(&scan, &cfg);
        let got = optimal_direction(&scan, &awards, &cfg).map_err(|e| e.to_string())?;
        let (sector, action) = direction_oracle(&scan.nearest, &cfg);
        if got.sector != sector || got.action != action {
            mismatches += 1;
        }
        match action {
            WalkAction::Blocked => blocked += 1,
            WalkAction::Straight => straight += 1,
            WalkAction::Turn(_) => turn += 1,
        }
    }
    check(
        mismatches == 0 && blocked > 0 && straight > 0 && turn > 0,
        format!("{mismatches} mismatches on 1000 scans ({blocked} blocked, {straight} straight, {turn} turn)"),
    )
}

fn box_detection(w: usize, h: usize, x: i64, y: i64, bw: i64, bh: i64) -> (Detection2D, Region) {
    let det = Detection2D {
        label: "box".into(),
        score: 1.0,
        bbox: BBox { x, y, w: bw, h: bh },
        frame_index: 0,
    };
    (det, Region::rect(w, h, x, y, bw, bh))
}

fn fusion_rules() -> Outcome {
    let (w, h) = (64usize, 48usize);
    let k = CameraIntrinsics::new(60.0, 60.0, 31.5, 23.5).unwrap();
    let cfg = FusionConfig {
        min_contour_area: 50,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut failures = Vec::new();
    for trial in 0..100 {
        // 20x20 obstacle with random depths and a few holes
        let mut values = vec![0.0; w * h];
        let mut mask = Mask::new(w, h);
        for y in 10..30 {
            for x in 20..40 {
                mask.set(x, y, true);
                values[y * w + x] = if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.5..4.0) };
            }
        }
        values[20 * w + 30] = rng.random_range(0.5..4.0);
        let depth = DepthFrame::new(w, h, values, 0).unwrap();
        let contours = extract_contours(&mask, &depth, cfg.min_contour_area, cfg.close_kernel);
        if contours.len() != 1 {
            failures.push(format!("trial {trial}: {} contours", contours.len()));
            continue;
        }
        // 15 of 20 columns -> 0.75, 10 of 20 -> 0.5
        for (cols, fuses) in [(15, true), (10, false)] {
            let pair = box_detection(w, h, 20, 10, cols, 20);
            let c = pair.1.intersection(&contours[0].region);
            let expect = c
                .pixels
                .iter()
                .map(|&i| depth.values[i as usize])
                .filter(|&z| z > 0.0)
                .fold(f64::INFINITY, f64::min);
            let objs = fuse_detections(&[pair], &contours, &depth, &cfg, &k);
            let labeled = objs.iter().any(|o| o.label == "box");
            if labeled != fuses {
                failures.push(format!("trial {trial}: ratio {} fused={labeled}", cols as f64 / 20.0));
            }
            if fuses && !objs.iter().any(|o| o.label == "box" && o.distance == expect) {
                failures.push(format!("trial {trial}: fused distance is not {expect}"));
            }
            if !fuses && !objs.iter().all(|o| o.label == UNLABELED) {
                failures.push(format!("trial {trial}: unfused contour lost its placeholder label"));
            }
        }
    }

    // floor with a painted rug only; the synthetic detector still reports it
    let spec = SceneSpec {
        frames: 10,
        attitude: vec![AttitudeKey {
            frame: 0,
            pitch_deg: 40.0,
            roll_deg: 0.0,
        }],
        ground_height: -1.4,
        noise_sigma: 0.003,
        walk_speed: 0.02,
        objects: vec![Primitive {
            kind: PrimitiveKind::Decal,
            label: Some("rug".into()),
            min: [-0.4, -1.4, 1.2],
            max: [0.4, -1.4, 2.0],
            color: Some([180, 30, 30]),
        }],
        ..Default::default()
    };
    let k = spec.intrinsics();
    let gcfg = GroundConfig::default();
    let fcfg = FusionConfig {
        min_contour_area: cfg.min_area_for(spec.width, spec.height),
        ..Default::default()
    };
    let mut state = GroundState::default();
    let (mut decal_dets, mut fused) = (0, 0);
    for f in Renderer::new(&spec, 6).map_err(|e| e.to_string())? {
        let f = f.map_err(|e| e.to_string())?;
        let cloud = reconstruct_pointcloud(&f.depth, &k, &f.attitude).map_err(|e| e.to_string())?;
        let ground = detect_ground(&cloud, &mut state, &gcfg, f.frame_index);
        if !ground.is_ground() {
            return Err(format!("decal frame {}: ground not found", f.frame_index));
        }
        let mask = remove_ground(&f.depth, &ground, &k, &f.attitude, gcfg.sigma).map_err(|e| e.to_string())?;
        let contours = close_and_extract_contours(&mask, &f.depth, &fcfg).map_err(|e| e.to_string())?;
        let regions: Vec<_> = f
            .detections
            .iter()
            .filter_map(|r| {
                let d = Detection2D {
                    label: r.label.clone(),
                    score: r.score,
                    bbox: BBox {
                        x: r.bbox[0],
                        y: r.bbox[1],
                        w: r.bbox[2],
                        h: r.bbox[3],
                    },
                    frame_index: f.frame_index,
                };
                map_detection_to_depth(&d, &Extrinsics::identity(), &k, &k, &f.depth).ok().map(|reg| (d, reg))
            })
            .collect();
        decal_dets += regions.len();
        fused += fuse_detections(&regions, &contours, &f.depth, &fcfg, &k).len();
    }
    if decal_dets == 0 {
        failures.push("the rug was never detected in RGB".into());
    }
    if fused != 0 {
        failures.push(format!("{fused} objects fused on a painted-only floor"));
    }
    let detail = format!(
        "100 constructed frames at ratios 0.75/0.5, rug detected {decal_dets} times, {fused} fused objects"
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failures.join("; ")))
    }
}

fn iou_metric() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bad = Vec::new();
    for t in 0..1000 {
        let (w, h) = (rng.random_range(1..40), rng.random_range(1..40));
        let pa = rng.random_range(0.0..1.0);
        let pb = if t % 3 == 0 { pa } else { rng.random_range(0.0..1.0) };
        let a = Mask::from_bits(w, h, (0..w * h).map(|_| rng.random_bool(pa)).collect()).unwrap();
        let b = Mask::from_bits(w, h, (0..w * h).map(|_| rng.random_bool(pb)).collect()).unwrap();
        let ab = ground_iou(&a, &b).unwrap();
        let ba = ground_iou(&b, &a).unwrap();
        if ab != ba || !(0.0..=0.5).contains(&ab) {
            bad.push(format!("pair {t}: {ab} vs {ba}"));
        }
        if !a.is_empty() && ground_iou(&a, &a).unwrap() != 0.5 {
            bad.push(format!("pair {t}: self overlap {}", ground_iou(&a, &a).unwrap()));
        }
    }
    check(bad.is_empty(), format!("{} violations on 1000 pairs {}", bad.len(), bad.join("; ")))
}

fn latency_harness() -> Outcome {
    let spec = SceneSpec {
        frames: 30,
        ..scene("office.toml")
    };
    if (spec.width, spec.height) != (320, 240) {
        return Err(format!("bench scene is {}x{}", spec.width, spec.height));
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    generate_synthetic_scene(&spec, 8, dir.path()).map_err(|e| e.to_string())?;
    let ds = Dataset::open(dir.path()).map_err(|e| e.to_string())?;
    let cfg = Config::default();
    let det = Detections::dataset_default(&ds).map_err(|e| e.to_string())?;
    let triggers: BTreeSet<u64> = [5, 15, 25].into();
    let rep = benchmark(&ds, &cfg, &det, &triggers, 3, true).map_err(|e| e.to_string())?;
    let missing: Vec<&str> = REFERENCE_MS.iter().map(|r| r.0).filter(|n| rep.row(n).is_none()).collect();
    let text = rep.to_string();
    let ms = rep.ground_and_direction_mean_ms();
    eprintln!("{text}");
    check(
        missing.is_empty() && text.contains(ROW_TOTAL) && ms <= 35.0,
        format!("{} rows, missing {missing:?}; ground + direction mean {ms:.2} ms/frame at 320x240", rep.rows.len()),
    )
}

fn feedback_protocol() -> Outcome {
    let cfg = DirectionConfig::default();
    let tz = 3.0;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut state = FeedbackState::default();
    let mut events = Vec::new();
    let (mut episodes, mut was_blocked) = (0, false);
    for frame in 0..500u64 {
        // 20-frame phases: open, wall ahead with a gap off to one side, boxed in
        let phase = (frame / 20) % 4;
        let nearest: Vec<f64> = (0..cfg.n_sectors)
            .map(|i| match phase {
                0 => tz,
                1 | 3 => {
                    if (i as i64 - 20 - 60 * (phase as i64 / 3)).abs() < 6 {
                        tz
                    } else {
                        1.0
                    }
                }
                _ => rng.random_range(0.2..0.7),
            })
            .collect();
        if frame % 37 == 36 {
            events.push(non_ground_feedback(frame, frame * 33_333));
            continue;
        }
        let scan = SectorScan { nearest, tz };
        let awards = sector_awards(&scan, &cfg);
        let d = optimal_direction(&scan, &awards, &cfg).map_err(|e| e.to_string())?;
        let blocked = d.action == WalkAction::Blocked;
        episodes += usize::from(blocked && !was_blocked);
        was_blocked = blocked;
        events.extend(navigation_feedback(&d, &mut state, frame, frame * 33_333));
    }
    let starts = events.iter().filter(|e| e.kind == EventKind::BeepStart).count();
    let buckets = [
        (5.0, DirectionBucket::Front),
        (-5.0, DirectionBucket::Front),
        (5.0 + 1e-9, DirectionBucket::RightFront),
        (-5.0 - 1e-9, DirectionBucket::LeftFront),
    ]
    .iter()
    .all(|&(a, b)| DirectionBucket::from_angle(a, 5.0) == b);
    // sector N/2 + 10 is exactly +5 degrees and must read as straight
    let edge: Vec<f64> = (0..cfg.n_sectors).map(|i| if i >= cfg.center() + 10 { tz } else { 0.5 }).collect();
    let scan = SectorScan { nearest: edge, tz };
    let d = optimal_direction(&scan, &sector_awards(&scan, &cfg), &cfg).map_err(|e| e.to_string())?;
    let straight_edge = d.sector == cfg.center() + 10 && d.action == WalkAction::Straight;
    check(
        episodes >= 5 && beeps_alternate(&events) && starts == episodes && buckets && straight_edge,
        format!(
            "{episodes} blocked episodes, {starts} beep starts, alternation {}, closed +-5 deg buckets {buckets}, +5.0 deg turn is straight {straight_edge}",
            beeps_alternate(&events)
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("geometry round-trip", geometry_round_trip),
        ("OTSU oracle", otsu_exact),
        ("plane-fit recovery", plane_fit_recovery),
        ("temporal robustness", temporal_robustness),
        ("direction-search oracle", direction_search_oracle),
        ("fusion rules", fusion_rules),
        ("intersection-over-sum metric", iou_metric),
        ("latency harness", latency_harness),
        ("feedback protocol", feedback_protocol),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = run();
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(d) => println!("PASS {} {name}: {d} ({secs:.1} s)", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {} {name}: {d} ({secs:.1} s)", i + 1)
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
