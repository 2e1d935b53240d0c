//! Acceptance checks. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line; exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use dsm_core::config::{FusionConfig, GroundingConfig, PipelineConfig, QueryGenConfig, RenderConfig, WindowConfig};
use dsm_core::evalgen::{
    class_list, eval_grounding, generate_queries, gt_labeled_cloud, labeled_cloud, map_labels, seg_metrics, suites,
    synth_scene, Attribute, QueryKind, SceneSpec, SynthScene,
};
use dsm_core::fusion::MatchScore;
use dsm_core::grounding::MockReasoner;
use dsm_core::perception::FeatureVector;
use dsm_core::pipeline::{Backends, MapBuilder};
use dsm_core::scene::{
    load_map, save_map, DsmMap, Fragment, ObjectId, ObservedRelation, Point3, PointCloud, Relation, SceneObject,
    SemanticCaption, SpatialDescriptor, SIDECAR_THRESHOLD,
};
use dsm_core::window::{bounding_sphere, cone_contains, observation_cone, vote_filter, Cone, Sphere};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn build(scene: &SynthScene) -> DsmMap {
    let mut b = MapBuilder::new(PipelineConfig::default(), Backends::mock()).unwrap();
    for f in &scene.frames {
        b.process_frame(&f.record, &f.color, &f.depth).unwrap();
    }
    b.finish().unwrap().0
}

fn build_spec(spec: &SceneSpec) -> (SynthScene, DsmMap) {
    let scene = synth_scene(spec, 0).unwrap();
    let map = build(&scene);
    (scene, map)
}

// 1 -------------------------------------------------------------------------

fn fusion_arithmetic() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut disagreements = 0;
    let mut matched = 0;
    for i in 0..1000 {
        // Every other tuple sits on a 0.05 grid so gate and threshold ties occur.
        let mut draw = |lo: f64, hi: f64| {
            let v: f64 = rng.random_range(lo..=hi);
            if i % 2 == 0 {
                (v * 20.0).round() / 20.0
            } else {
                v
            }
        };
        let (s_v, s_g, s_c) = (draw(-1.0, 1.0), draw(0.0, 1.0), draw(-1.0, 1.0));
        let cfg = FusionConfig {
            t_v: draw(0.0, 1.0),
            t_x: draw(0.0, 1.0),
            t_g: draw(0.0, 1.0),
            total_threshold: draw(0.0, 3.0),
            ..FusionConfig::default()
        };
        let expect = s_v >= cfg.t_v && s_c >= cfg.t_x && s_g >= cfg.t_g && s_v + s_g + s_c > cfg.total_threshold;
        let got = MatchScore::from_components(s_v, s_g, s_c, &cfg);
        if got.matched != expect {
            disagreements += 1;
        }
        matched += expect as usize;
    }
    // Fixed defaults at the boundaries.
    let d = FusionConfig::default();
    for (s_v, s_g, s_c, expect) in [
        (0.4, 0.3, 0.8, false),
        (0.4, 0.3, 0.81, true),
        (0.39, 1.0, 1.0, false),
        (1.0, 0.29, 1.0, false),
        (1.0, 1.0, 0.79, false),
        (0.4, 0.3, 0.8000001, true),
    ] {
        if MatchScore::from_components(s_v, s_g, s_c, &d).matched != expect {
            disagreements += 1;
        }
    }
    ensure(disagreements == 0, || format!("{disagreements} disagreements"))?;
    Ok(format!("1006 tuples, 0 disagreements, {matched} random matches"))
}

// 2 -------------------------------------------------------------------------

fn duplicate_collapse() -> Outcome {
    let (_, one) = build_spec(&suites::single_object(10));
    ensure(one.len() == 1, || format!("single orbit gave {} objects", one.len()))?;
    let frags = one.objects.values().next().unwrap().fragments.len();
    ensure(frags == 10, || format!("{frags} fragments"))?;
    let (_, two) = build_spec(&suites::two_objects(10));
    ensure(two.len() == 2, || format!("two-object scene gave {} objects", two.len()))?;
    Ok("1 object / 10 fragments; 2 objects".into())
}

// 3 -------------------------------------------------------------------------

fn angle_oracle(c: &Cone, p: &Point3) -> bool {
    let v = *p - c.apex;
    let n = v.norm();
    if n == 0.0 {
        return true;
    }
    (v.dot(&c.axis) / n).clamp(-1.0, 1.0).acos() <= c.half_angle
}

fn random_point(rng: &mut ChaCha8Rng, r: f64) -> Point3 {
    Point3::new(rng.random_range(-r..r), rng.random_range(-r..r), rng.random_range(-r..r))
}

fn box_surface(rng: &mut ChaCha8Rng, half: Point3, n: usize) -> Vec<(Point3, Point3)> {
    // (point, outward normal)
    (0..n)
        .map(|_| {
            let axis = rng.random_range(0..3);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let mut p = [
                rng.random_range(-half.x..half.x),
                rng.random_range(-half.y..half.y),
                rng.random_range(-half.z..half.z),
            ];
            p[axis] = sign * half.get(axis);
            let mut nrm = [0.0; 3];
            nrm[axis] = sign;
            (Point3::from(p), Point3::from(nrm))
        })
        .collect()
}

fn cone_voting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    let mut near_boundary = 0;
    for _ in 0..100_000 {
        let apex = random_point(&mut rng, 3.0);
        let sphere = Sphere {
            center: random_point(&mut rng, 1.0),
            radius: rng.random_range(0.05..1.0),
        };
        let cone = observation_cone(apex, &sphere);
        let p = random_point(&mut rng, 4.0);
        let got = cone_contains(&cone, &p);
        let want = cone.degenerate || angle_oracle(&cone, &p);
        if got != want {
            // acos loses precision within ~1e-8 rad of the boundary.
            let v = p - cone.apex;
            let gap = ((v.dot(&cone.axis) / v.norm()).clamp(-1.0, 1.0).acos() - cone.half_angle).abs();
            if gap < 1e-7 {
                near_boundary += 1;
            } else {
                mismatches += 1;
            }
        }
    }
    ensure(mismatches == 0, || format!("{mismatches} cone disagreements"))?;

    // Three views of a box, 120 degrees apart.
    let half = Point3::new(0.2, 0.15, 0.15);
    let surface = box_surface(&mut rng, half, 6000);
    let mut clouds = Vec::new();
    let mut cones = Vec::new();
    for k in 0..3 {
        let a = k as f64 * 2.0 * std::f64::consts::PI / 3.0;
        let eye = Point3::new(2.0 * a.cos(), 2.0 * a.sin(), 0.8);
        let visible: Vec<Point3> = surface.iter().filter(|(p, n)| n.dot(&(eye - *p)) > 0.0).map(|(p, _)| *p).collect();
        let sphere = bounding_sphere(&visible, 512, k as u64);
        cones.push(observation_cone(eye, &sphere));
        clouds.push(visible);
    }
    let mut outliers = Vec::new();
    while outliers.len() < 50 {
        let p = random_point(&mut rng, 3.0);
        if !cones.iter().any(|c| angle_oracle(c, &p)) {
            outliers.push(p);
        }
    }
    let true_counts: Vec<usize> = clouds.iter().map(Vec::len).collect();
    for (i, p) in outliers.iter().enumerate() {
        clouds[i % 3].push(*p);
    }
    let pcs: Vec<PointCloud> = clouds.iter().map(|c| PointCloud::from_points(c.iter().copied())).collect();
    let window: Vec<(&PointCloud, Cone)> = pcs.iter().zip(&cones).map(|(c, k)| (c, *k)).collect();
    let out = vote_filter(&window, &WindowConfig::default());
    let (mut kept_true, mut kept_outliers) = (0, 0);
    for (f, kept) in out.kept.iter().enumerate() {
        for &i in kept {
            if (i as usize) < true_counts[f] {
                kept_true += 1;
            } else {
                kept_outliers += 1;
            }
        }
    }
    let total_true: usize = true_counts.iter().sum();
    let keep_rate = kept_true as f64 / total_true as f64;
    ensure(kept_outliers == 0, || format!("{kept_outliers} outliers survived"))?;
    ensure(keep_rate >= 0.99, || format!("kept {:.2}% of true points", 100.0 * keep_rate))?;
    Ok(format!(
        "1e5 cone tests exact ({near_boundary} within 1e-7 rad of the boundary); 50/50 outliers removed; {:.2}% true points kept",
        100.0 * keep_rate
    ))
}

// 4 -------------------------------------------------------------------------

fn encloses(c: Point3, r2: f64, pts: &[Point3]) -> bool {
    let tol = 1e-9 * (1.0 + r2);
    pts.iter().all(|p| p.distance_squared(&c) <= r2 + tol)
}

fn circumcenter3(a: Point3, b: Point3, c: Point3) -> Option<Point3> {
    let (ab, ac) = (b - a, c - a);
    let n = ab.cross(&ac);
    let d = 2.0 * n.norm_squared();
    if d < 1e-18 {
        return None;
    }
    Some(a + (n.cross(&ab) * ac.norm_squared() + ac.cross(&n) * ab.norm_squared()) / d)
}

fn circumcenter4(a: Point3, b: Point3, c: Point3, d: Point3) -> Option<Point3> {
    let rows = [b - a, c - a, d - a];
    let rhs: Vec<f64> = rows.iter().map(|r| 0.5 * r.norm_squared()).collect();
    let det = |m: [Point3; 3]| m[0].dot(&m[1].cross(&m[2]));
    let m = rows;
    let den = det(m);
    if den.abs() < 1e-15 {
        return None;
    }
    // Cramer's rule on columns.
    let col = |i: usize| Point3::new(m[0].get(i), m[1].get(i), m[2].get(i));
    let r = Point3::new(rhs[0], rhs[1], rhs[2]);
    let cols = [col(0), col(1), col(2)];
    let solve = |k: usize| {
        let mut c = cols;
        c[k] = r;
        det(c) / den
    };
    Some(a + Point3::new(solve(0), solve(1), solve(2)))
}

/// Smallest sphere through every subset of at most four points that encloses all.
fn exact_min_sphere(pts: &[Point3]) -> f64 {
    let n = pts.len();
    if n == 1 {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    let mut consider = |c: Point3, r2: f64| {
        if r2 < best && encloses(c, r2, pts) {
            best = r2;
        }
    };
    for i in 0..n {
        for j in i + 1..n {
            let c = (pts[i] + pts[j]) * 0.5;
            consider(c, c.distance_squared(&pts[i]));
            for k in j + 1..n {
                if let Some(c) = circumcenter3(pts[i], pts[j], pts[k]) {
                    consider(c, c.distance_squared(&pts[i]));
                }
                for l in k + 1..n {
                    if let Some(c) = circumcenter4(pts[i], pts[j], pts[k], pts[l]) {
                        consider(c, c.distance_squared(&pts[i]));
                    }
                }
            }
        }
    }
    best.sqrt()
}

fn bounding_spheres() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut sphere_time = Duration::ZERO;
    for case in 0..200 {
        let n = rng.random_range(1..=50);
        let scale = rng.random_range(0.1..5.0);
        let pts: Vec<Point3> = (0..n).map(|_| random_point(&mut rng, scale)).collect();
        let t = Instant::now();
        let s = bounding_sphere(&pts, 512, case);
        sphere_time += t.elapsed();
        ensure(pts.iter().all(|p| s.contains(p)), || format!("case {case}: point outside the sphere"))?;
        let exact = exact_min_sphere(&pts);
        if exact > 1e-6 {
            worst = worst.max(s.radius / exact);
        }
        ensure(s.radius <= 1.3 * exact + 1e-4, || format!("case {case}: radius {} vs exact {exact}", s.radius))?;
    }
    ensure(sphere_time < Duration::from_secs(10), || format!("spheres took {sphere_time:?}"))?;
    Ok(format!("200 clouds enclosed; worst radius ratio {worst:.4}; {:.1} ms total", sphere_time.as_secs_f64() * 1e3))
}

// 5 -------------------------------------------------------------------------

fn grounding_end_to_end() -> Outcome {
    let (scene, map) = build_spec(&suites::grounding_suite());
    let run = || {
        let q = generate_queries(&scene.gt, &QueryGenConfig::default()).unwrap();
        let r = eval_grounding(
            &map,
            &scene.gt,
            &q,
            &GroundingConfig::default(),
            &RenderConfig::default(),
            &MockReasoner,
        )
        .unwrap();
        (q, r)
    };
    let (q, r) = run();
    let count = |k| q.iter().filter(|q| q.kind == k).count();
    ensure(count(QueryKind::Unique) == 10 && count(QueryKind::Multiple) == 30, || "query counts".into())?;
    ensure(r.unique.acc_at_05 == 1.0, || format!("unique Acc@0.5 {}", r.unique.acc_at_05))?;
    ensure(r.multiple.acc_at_05 >= 0.9, || format!("multiple Acc@0.5 {}", r.multiple.acc_at_05))?;
    let (q2, r2) = run();
    ensure(q == q2 && r == r2, || "second run differs".into())?;
    Ok(format!(
        "unique Acc@0.5 {:.1}%, multiple Acc@0.5 {:.1}%, repeat identical",
        100.0 * r.unique.acc_at_05,
        100.0 * r.multiple.acc_at_05
    ))
}

// 6 -------------------------------------------------------------------------

fn labeled(points: &[(f64, u32)]) -> PointCloud {
    let mut c = PointCloud::new();
    for &(x, label) in points {
        let mut p = PointCloud::from_points([Point3::new(x, 0.0, 0.0)]);
        p.set_uniform_label(label);
        c.extend_from(&p);
    }
    c
}

fn segmentation() -> Outcome {
    let (scene, map) = build_spec(&suites::grounding_suite());
    let classes = class_list(&scene.gt);
    let captions: Vec<_> = map.objects.values().map(|o| o.caption.clone()).collect();
    let labels: Vec<u32> = map_labels(&captions, &classes, &MockReasoner)
        .unwrap()
        .iter()
        .map(|l| l.class_index)
        .collect();
    let seg = seg_metrics(&labeled_cloud(&map, &labels), &gt_labeled_cloud(&scene.gt, &classes), &classes).unwrap();
    ensure(seg.m_acc == 1.0 && seg.f_miou == 1.0, || format!("mAcc {} F-mIoU {}", seg.m_acc, seg.f_miou))?;

    // Ten points one meter apart. GT: 4 x class 0, 3 x class 1, 3 x class 2.
    let gt_labels = [0, 0, 0, 0, 1, 1, 1, 2, 2, 2];
    let pred_labels = [0, 0, 0, 1, 1, 1, 2, 2, 0, 0];
    let gt = labeled(&gt_labels.iter().enumerate().map(|(i, &l)| (i as f64, l)).collect::<Vec<_>>());
    let pred = labeled(&pred_labels.iter().enumerate().map(|(i, &l)| (i as f64, l)).collect::<Vec<_>>());
    let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let r = seg_metrics(&pred, &gt, &names).unwrap();
    // Per class: correct / GT count = 3/4, 2/3, 1/3.
    let m_acc = (3.0 / 4.0 + 2.0 / 3.0 + 1.0 / 3.0) / 3.0;
    // IoU = TP / (GT + FP): 3/(4+2), 2/(3+1), 1/(3+1); weights 0.4, 0.3, 0.3.
    let f_miou = 0.4 * 0.5 + 0.3 * 0.5 + 0.3 * 0.25;
    ensure((r.m_acc - m_acc).abs() <= 1e-9, || format!("hand mAcc {} vs {m_acc}", r.m_acc))?;
    ensure((r.f_miou - f_miou).abs() <= 1e-9, || format!("hand F-mIoU {} vs {f_miou}", r.f_miou))?;
    Ok(format!(
        "synthetic build mAcc 100% F-mIoU 100%; hand case mAcc {:.6} F-mIoU {:.6}",
        r.m_acc, r.f_miou
    ))
}

// 7 -------------------------------------------------------------------------

fn query_statistics() -> Outcome {
    let scene = synth_scene(&suites::grounding_suite(), 0).unwrap();
    let cfg = QueryGenConfig {
        n_unique: 10_000,
        n_multiple: 0,
        ..QueryGenConfig::default()
    };
    let q = generate_queries(&scene.gt, &cfg).unwrap();
    ensure(q.len() == 10_000, || format!("{} queries", q.len()))?;
    let mut line = Vec::new();
    for (attr, gate) in [
        (Attribute::Appearance, cfg.appearance),
        (Attribute::Physical, cfg.physical),
        (Attribute::Affordance, cfg.affordance),
    ] {
        let p = 1.0 - Normal::new(gate.mu, gate.sigma).unwrap().cdf(cfg.gate_cutoff);
        let rate = q.iter().filter(|q| q.included_attrs.contains(&attr)).count() as f64 / q.len() as f64;
        ensure((rate - p).abs() <= 0.02, || format!("{attr:?}: rate {rate} vs {p}"))?;
        line.push(format!("{attr:?} {:.2}% (p {:.1}%)", 100.0 * rate, 100.0 * p));
    }
    Ok(line.join(", "))
}

// 8 -------------------------------------------------------------------------

fn ablation_direction() -> Outcome {
    let (scene, map) = build_spec(&suites::ablation_suite());
    let q = generate_queries(&scene.gt, &QueryGenConfig::default()).unwrap();
    let full = GroundingConfig::default();
    let no_filter = GroundingConfig {
        use_relation_filter: false,
        ..full.clone()
    };
    let bare = no_filter.clone().without_attributes();
    let acc: Vec<f64> = [full, no_filter, bare]
        .iter()
        .map(|cfg| {
            eval_grounding(&map, &scene.gt, &q, cfg, &RenderConfig::default(), &MockReasoner)
                .unwrap()
                .multiple
                .acc_at_05
        })
        .collect();
    ensure(acc[0] > acc[1] && acc[1] > acc[2], || format!("multiple Acc@0.5 not strictly decreasing: {acc:?}"))?;
    Ok(format!(
        "multiple Acc@0.5: full {:.1}% > no relation filter {:.1}% > no filter, no attributes {:.1}%",
        100.0 * acc[0],
        100.0 * acc[1],
        100.0 * acc[2]
    ))
}

// 9 -------------------------------------------------------------------------

fn dsm(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_dsm"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("dsm {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr).trim()));
    }
    Ok(out.stdout)
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let s = |p: &Path| p.to_str().unwrap().to_string();
    let scene = d.join("scene");
    dsm(&["synth-scene", "--suite", "grounding", "--out", &s(&scene), "--seed", "11"])?;
    let manifest = s(&scene.join("manifest.jsonl"));
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let map = d.join(format!("{run}.dsm"));
        let ground = d.join(format!("{run}.json"));
        dsm(&["build-map", "--manifest", &manifest, "--out", &s(&map), "--seed", "11", "--report", &s(&d.join("build.json"))])?;
        dsm(&[
            "ground",
            "--map",
            &s(&map),
            "--query",
            "the book that is on top of the basket",
            "--seed",
            "11",
            "--out",
            &s(&ground),
        ])?;
        outputs.push((read(&map), read(&ground)));
    }
    ensure(outputs[0].0 == outputs[1].0, || "map files differ".into())?;
    ensure(outputs[0].1 == outputs[1].1, || "grounding reports differ".into())?;
    Ok(format!(
        "map {} bytes and grounding report {} bytes identical across runs",
        outputs[0].0.len(),
        outputs[0].1.len()
    ))
}

// 10 ------------------------------------------------------------------------

fn random_text(rng: &mut ChaCha8Rng) -> String {
    const WORDS: [&str; 10] = ["red", "chair", "wooden", "soft", "lamp", "used for", "ÿ", "\"quoted\"", "tall", "naïve"];
    let n = rng.random_range(0..5);
    (0..n).map(|_| WORDS[rng.random_range(0..WORDS.len())]).collect::<Vec<_>>().join(" ")
}

fn random_map(rng: &mut ChaCha8Rng, big: bool) -> DsmMap {
    let cfg = PipelineConfig {
        seed: rng.random(),
        fusion: FusionConfig {
            t_v: rng.random_range(0.0..1.0),
            ..FusionConfig::default()
        },
        ..PipelineConfig::default()
    };
    let mut map = DsmMap::new(cfg);
    let n_obj = rng.random_range(1..6);
    for i in 0..n_obj {
        let n_pts = if big && i == 0 { SIDECAR_THRESHOLD + 17 } else { rng.random_range(1..400) };
        let points: Vec<[f32; 3]> = (0..n_pts).map(|_| std::array::from_fn(|_| rng.random_range(-5.0..5.0))).collect();
        let colors = rng.random_bool(0.5).then(|| (0..n_pts).map(|_| rng.random()).collect());
        let labels = rng.random_bool(0.3).then(|| (0..n_pts).map(|_| rng.random_range(0..8)).collect());
        let cloud = PointCloud::from_parts(points, colors, labels).unwrap();
        let dim = rng.random_range(2..64);
        let feat = |rng: &mut ChaCha8Rng| {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            FeatureVector::from_unnormalized(&v).unwrap()
        };
        let caption = SemanticCaption::new(
            format!("thing {i} {}", random_text(rng)),
            random_text(rng),
            random_text(rng),
            random_text(rng),
        );
        let mut obj = SceneObject::new(ObjectId(i * 3 + 1), caption, cloud, feat(rng), feat(rng)).unwrap();
        let n_frag = rng.random_range(0..4usize);
        let mut start = 0u32;
        for f in 0..n_frag {
            let end = if f + 1 == n_frag { n_pts as u32 } else { rng.random_range(start..=n_pts as u32) };
            obj.fragments.push(Fragment {
                frame_id: f as u64 * 2,
                viewpoint: random_point(rng, 3.0),
                point_indices: (start..end).collect(),
                observed: end - start + rng.random_range(0..5),
                caption: SemanticCaption::name_only(format!("thing {i}")),
                relations: vec![ObservedRelation {
                    anchor_label: random_text(rng),
                    spatial: "close by".into(),
                    semantic: random_text(rng),
                }],
            });
            start = end;
        }
        obj.tentative = rng.random_bool(0.2);
        obj.finalized = rng.random_bool(0.5);
        map.insert(obj);
    }
    let ids: Vec<ObjectId> = map.objects.keys().copied().collect();
    for (a, &s) in ids.iter().enumerate() {
        for &t in &ids[a + 1..] {
            if rng.random_bool(0.4) {
                map.relations.push(Relation {
                    subject_id: s,
                    anchor_id: t,
                    r_g_distance: rng.random_range(0.0..4.0),
                    r_g_descriptor: SpatialDescriptor::ALL[rng.random_range(0..SpatialDescriptor::ALL.len())],
                    r_s: random_text(rng),
                });
            }
        }
    }
    if rng.random_bool(0.7) {
        map.scene_center = Some(random_point(rng, 2.0));
    }
    map
}

fn persistence() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for i in 0..100 {
        let map = random_map(&mut rng, i == 0);
        let path = dir.path().join(format!("m{i}.dsm"));
        save_map(&map, &path).map_err(|e| format!("map {i}: save: {e}"))?;
        let back = load_map(&path).map_err(|e| format!("map {i}: load: {e}"))?;
        ensure(back == map, || format!("map {i} differs after reload"))?;
    }
    Ok("100 maps (one with a sidecar cloud) reload equal".into())
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: [Criterion; 10] = [
        ("fusion arithmetic", Some(Duration::from_secs(1)), fusion_arithmetic),
        ("duplicate collapse", Some(Duration::from_secs(30)), duplicate_collapse),
        ("cone voting", None, cone_voting),
        ("bounding sphere", None, bounding_spheres),
        ("grounding end to end", Some(Duration::from_secs(60)), grounding_end_to_end),
        ("segmentation metrics", None, segmentation),
        ("query generation statistics", None, query_statistics),
        ("ablation direction", None, ablation_direction),
        ("determinism", None, determinism),
        ("persistence", None, persistence),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = t.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(l)) if elapsed > *l => Err(format!("took {elapsed:.2?}, limit {l:?}")),
            (r, _) => r,
        };
        let (tag, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failed += result.is_err() as usize;
        println!("{tag} [{:>2}] {name} ({:.2}s): {detail}", i + 1, elapsed.as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
