//! End-to-end runs of the frame pipeline on rendered scenes.

use std::collections::BTreeSet;
use std::path::Path;

use wayfind_core::eval::config::Config;
use wayfind_core::eval::dataset::Dataset;
use wayfind_core::eval::pipeline::{run_pipeline, Detections, EventRecord};
use wayfind_core::eval::synth::{generate_synthetic_scene, SceneSpec};
use wayfind_core::feedback::EventKind;

fn scene(name: &str) -> SceneSpec {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenes").join(name);
    SceneSpec::load(&path).unwrap()
}

fn run(name: &str, triggers: &[u64]) -> Vec<EventRecord> {
    let dir = tempfile::tempdir().unwrap();
    generate_synthetic_scene(&scene(name), 7, dir.path()).unwrap();
    let ds = Dataset::open(dir.path()).unwrap();
    let det = Detections::dataset_default(&ds).unwrap();
    let mut out = Vec::new();
    let triggers: BTreeSet<u64> = triggers.iter().copied().collect();
    run_pipeline(&ds, &Config::default(), &det, &triggers, false, &mut out).unwrap();
    String::from_utf8(out)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn kinds_at(ev: &[EventRecord], frame: u64) -> Vec<(EventKind, &str)> {
    ev.iter()
        .filter(|e| e.frame == frame)
        .map(|e| (e.kind, e.payload.as_str()))
        .collect()
}

#[test]
fn corridor_box_starts_beeping_with_a_hint() {
    let ev = run("corridor.toml", &[]);
    let start = ev
        .iter()
        .find(|e| e.kind == EventKind::BeepStart)
        .expect("walker gets blocked by the box");
    // the box front is at 2.5 m and the walker covers 0.03 m per frame
    let gap = 2.5 - 0.03 * start.frame as f64;
    assert!(gap > 0.0 && gap < 0.9, "beep at {gap:.2} m");
    assert_eq!(
        kinds_at(&ev, start.frame),
        vec![(EventKind::BeepStart, "blocked"), (EventKind::TurnHint, "search left or right")]
    );
    assert!(ev.iter().all(|e| e.kind != EventKind::Speech));
}

#[test]
fn ramp_reports_cannot_move_on_every_frame() {
    let ev = run("ramp.toml", &[]);
    assert_eq!(ev.len(), 10);
    for (i, e) in ev.iter().enumerate() {
        assert_eq!(e.frame, i as u64);
        assert_eq!((e.kind, e.payload.as_str()), (EventKind::TurnHint, "cannot move on"));
        assert_eq!(e.elapsed_us.direction, 0);
    }
}

#[test]
fn trigger_speaks_on_that_frame_only() {
    let ev = run("office.toml", &[40]);
    let speech: Vec<_> = ev.iter().filter(|e| e.kind == EventKind::Speech).collect();
    assert!(!speech.is_empty());
    assert!(speech.iter().all(|e| e.frame == 40));
    let texts: Vec<_> = speech.iter().map(|e| e.payload.as_str()).collect();
    assert!(texts.contains(&"chair, 1.8 meters, left-front"), "{texts:?}");
    // the rug is painted on the floor and must not become an object
    assert!(texts.iter().all(|t| !t.starts_with("rug")));
}

#[test]
fn replay_is_deterministic() {
    let a = run("office.toml", &[10, 30]);
    let b = run("office.toml", &[10, 30]);
    assert_eq!(a, b);
}

#[test]
fn timing_fields_are_the_only_difference() {
    let dir = tempfile::tempdir().unwrap();
    generate_synthetic_scene(&scene("corridor.toml"), 7, dir.path()).unwrap();
    let ds = Dataset::open(dir.path()).unwrap();
    let det = Detections::dataset_default(&ds).unwrap();
    let mut timed = Vec::new();
    let mut plain = Vec::new();
    run_pipeline(&ds, &Config::default(), &det, &BTreeSet::new(), true, &mut timed).unwrap();
    run_pipeline(&ds, &Config::default(), &det, &BTreeSet::new(), false, &mut plain).unwrap();
    let strip = |bytes: Vec<u8>| -> Vec<(u64, EventKind, String)> {
        String::from_utf8(bytes)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str::<EventRecord>(l).unwrap())
            .map(|e| (e.frame, e.kind, e.payload))
            .collect()
    };
    assert_eq!(strip(timed), strip(plain));
}
