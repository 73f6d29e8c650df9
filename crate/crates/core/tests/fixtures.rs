use hand_twin::bus::{Master, Network};
use hand_twin::kinematics::{Actuator, HandState};
use hand_twin::model::{default_hand, load_config, DigitId, HandDescription};
use hand_twin::teleop::{
    mapped_targets, opposition_trace, parse_trace, run_pipeline, sample_trace, write_trace, HoldSegment, Mapping,
    PipelineOptions, RetargetFrame,
};

fn data(name: &str) -> String {
    std::fs::read_to_string(format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn assert_traces_close(a: &[RetargetFrame], b: &[RetargetFrame], tol: f64) {
    assert_eq!(a.len(), b.len());
    for (fa, fb) in a.iter().zip(b) {
        assert_eq!(fa.t_ms, fb.t_ms);
        assert_eq!(fa.fingers.keys().collect::<Vec<_>>(), fb.fingers.keys().collect::<Vec<_>>());
        for (ta, tb) in fa.fingers.values().zip(fb.fingers.values()) {
            for (x, y) in ta.dip.iter().chain(&ta.tip).zip(tb.dip.iter().chain(&tb.tip)) {
                assert!((x - y).abs() <= tol, "t = {} ms: {x} vs {y}", fa.t_ms);
            }
        }
        match (fa.wrist, fb.wrist) {
            (Some(wa), Some(wb)) => {
                assert!((wa.fe_deg - wb.fe_deg).abs() <= tol && (wa.rud_deg - wb.rud_deg).abs() <= tol);
            }
            (None, None) => {}
            _ => panic!("wrist hint presence differs at {} ms", fa.t_ms),
        }
    }
}

#[test]
fn bundled_config_is_the_default_hand() {
    let desc = load_config(&data("default_hand.json")).unwrap();
    assert_eq!(desc, default_hand());
}

#[test]
fn config_round_trips_through_json() {
    let desc = default_hand();
    let back = load_config(&desc.to_json()).unwrap();
    assert_eq!(back, desc);
    assert_eq!(back.to_json(), desc.to_json());
}

#[test]
fn bundled_sample_trace_matches_regeneration() {
    let bundled = parse_trace(&data("sample_trace.jsonl")).unwrap();
    assert_eq!(bundled.len(), 600);
    assert_eq!(bundled.last().unwrap().t_ms, 9983);
    let regen = sample_trace(&default_hand(), &Mapping::default());
    assert_traces_close(&bundled, &regen, 1e-9);
}

#[test]
fn bundled_opposition_trace_matches_regeneration() {
    let bundled = parse_trace(&data("opposition_trace.jsonl")).unwrap();
    let segments: Vec<HoldSegment> = serde_json::from_str(&data("opposition_segments.json")).unwrap();
    let (regen, regen_segments) = opposition_trace(&default_hand(), &Mapping::default()).unwrap();
    assert_eq!(segments, regen_segments);
    assert_eq!(
        segments.iter().map(|s| s.finger).collect::<Vec<_>>(),
        DigitId::FINGERS.to_vec()
    );
    assert_traces_close(&bundled, &regen, 1e-6);
}

#[test]
fn trace_text_round_trips() {
    let frames = sample_trace(&default_hand(), &Mapping::default());
    let back = parse_trace(&write_trace(&frames[..50])).unwrap();
    assert_eq!(back, frames[..50].to_vec());
}

/// Largest change among `acts` in joint degrees; the abduction servo is
/// converted to the abduction angle of each coupled digit in `digits`.
fn joint_jump(desc: &HandDescription, acts: &[Actuator], digits: &[DigitId], a: &HandState, b: &HandState) -> f64 {
    let mut worst: f64 = 0.0;
    for &act in acts {
        if act == Actuator::AbductionServo {
            for &d in digits {
                worst = worst.max((a.abduction_deg(desc, d) - b.abduction_deg(desc, d)).abs());
            }
        } else {
            worst = worst.max((a.get(act) - b.get(act)).abs());
        }
    }
    worst
}

/// Largest DIP or tip target displacement per digit, hand frame.
fn target_shift(mapping: &Mapping, a: &RetargetFrame, b: &RetargetFrame) -> Vec<(DigitId, f64)> {
    mapped_targets(a, mapping)
        .iter()
        .zip(mapped_targets(b, mapping))
        .map(|(&(d, da, ta), (_, db, tb))| (d, (da - db).norm().max((ta - tb).norm())))
        .collect()
}

/// Returns how many frame pairs and how many digit pairs qualified.
fn check_continuity(frames: &[RetargetFrame]) -> (usize, usize) {
    let desc = default_hand();
    let mapping = Mapping::default();
    let mut m = Master::new(Network::new(&desc).unwrap());
    let out = run_pipeline(frames, &mapping, &desc, &mut m, &PipelineOptions::default()).unwrap();
    assert_eq!(out.frames.len(), frames.len());
    let (mut whole, mut per_digit) = (0, 0);
    for k in 1..frames.len() {
        let (a, b) = (&out.frames[k - 1].commanded, &out.frames[k].commanded);
        let shifts = target_shift(&mapping, &frames[k - 1], &frames[k]);
        if shifts.iter().all(|&(_, s)| s < 1.0) {
            let jump = joint_jump(&desc, &Actuator::ALL, &DigitId::ALL, a, b);
            assert!(jump < 5.0, "frame {k} at {} ms: joint jump {jump} deg", frames[k].t_ms);
            whole += 1;
        }
        for &(d, s) in shifts.iter().filter(|&&(_, s)| s < 1.0) {
            let jump = joint_jump(&desc, &Actuator::of_digit(d), &[d], a, b);
            assert!(jump < 5.0, "{d} at {} ms: joint jump {jump} deg for {s} mm", frames[k].t_ms);
            per_digit += 1;
        }
    }
    (whole, per_digit)
}

#[test]
fn warm_start_has_no_solution_jumps_on_sample_trace() {
    let frames = parse_trace(&data("sample_trace.jsonl")).unwrap();
    // Every finger moves on every frame here, so only single digits qualify.
    let (_, per_digit) = check_continuity(&frames);
    assert!(per_digit > 900, "{per_digit}");
}

#[test]
fn warm_start_has_no_solution_jumps_on_opposition_trace() {
    let frames = parse_trace(&data("opposition_trace.jsonl")).unwrap();
    let (whole, per_digit) = check_continuity(&frames);
    assert!(whole >= 250 && per_digit >= whole, "{whole} {per_digit}");
}
