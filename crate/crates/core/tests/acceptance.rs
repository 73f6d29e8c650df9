//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; the process fails if any criterion
//! fails.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hand_twin::actuation::{
    back_drive, friction_angle, joint_angle_to_nut_travel, lead_angle, mid_flexion_force, mid_flexion_state,
    nut_travel_to_joint_angle, self_lock_margin, worm_self_lock, ScrewParams, WormParams,
};
use hand_twin::bus::{LossyConfig, Master, Network, Telemetry};
use hand_twin::kinematics::{
    jacobian, opposition_check, proximity, rom_report, sample_workspace, solve_ik, Actuator, HandKinematics,
    HandState, IkOptions, Objective, OppositionOptions, Site, DIP_WEIGHT, TIP_WEIGHT,
};
use hand_twin::model::{default_hand, scale_hand, DigitId, HandDescription, JointKind};
use hand_twin::teleop::{parse_trace, run_pipeline, HoldSegment, Mapping, PipelineOptions, RetargetFrame};
use hand_twin::wrist::wrist_envelope;

type Outcome = Result<String, String>;

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn random_state(desc: &HandDescription, rng: &mut ChaCha8Rng) -> HandState {
    let mut q = HandState::zero();
    for a in Actuator::ALL {
        let lim = desc.actuator_limits(a);
        q.set(a, rng.random_range(lim.min_deg..=lim.max_deg));
    }
    q
}

fn self_lock() -> Outcome {
    let finger = ScrewParams::finger(16.0);
    let worm = WormParams::thumb_cmc();
    // Independent evaluation of atan(l / (pi d)) and atan(mu).
    let alpha = (0.35f64 / (PI * 2.50)).atan().to_degrees();
    let alpha_cmc = (2.5f64 / (PI * 9.49)).atan().to_degrees();
    let cases = [
        ("alpha", lead_angle(0.35, 2.50).unwrap(), 2.55, alpha),
        ("alpha_cmc", lead_angle(2.5, 9.49).unwrap(), 4.80, alpha_cmc),
        ("phi(0.46)", friction_angle(0.46).unwrap(), 24.70, 0.46f64.atan().to_degrees()),
        ("phi(0.42)", friction_angle(0.42).unwrap(), 22.78, 0.42f64.atan().to_degrees()),
    ];
    for (name, got, published, oracle) in cases {
        check((got - published).abs() <= 0.01, format!("{name} = {got:.4}, expected {published} +- 0.01"))?;
        check((got - oracle).abs() < 1e-12, format!("{name} disagrees with oracle"))?;
    }
    let s = self_lock_margin(&finger).unwrap();
    let w = worm_self_lock(&worm).unwrap();
    check(s.locking && w.locking, "screw and worm must both lock")?;
    Ok(format!(
        "alpha {:.2}, alpha_cmc {:.2}, phi(0.46) {:.2}, phi(0.42) {:.2}; screw and worm LOCKING",
        cases[0].1, cases[1].1, cases[2].1, cases[3].1
    ))
}

/// Measured ranges: (part, joint, hand, human).
const TABLE: [(&str, &str, f64, f64); 22] = [
    ("D1", "cmc", 106.24, 55.00),
    ("D1", "mcp", 52.72, 57.27),
    ("D1", "ip", 45.02, 65.00),
    ("D2", "mcp", 103.13, 49.20),
    ("D2", "pip", 75.07, 86.60),
    ("D2", "dip", 68.09, 57.95),
    ("D2", "abduction", 26.73, 19.19),
    ("D3", "mcp", 101.92, 66.33),
    ("D3", "pip", 73.46, 85.08),
    ("D3", "dip", 73.04, 55.62),
    ("D4", "mcp", 100.56, 65.30),
    ("D4", "pip", 72.93, 93.67),
    ("D4", "dip", 73.57, 58.43),
    ("D4", "abduction", 26.73, 17.29),
    ("D5", "mcp", 98.93, 52.76),
    ("D5", "pip", 72.03, 91.81),
    ("D5", "dip", 72.05, 56.71),
    ("D5", "abduction", 39.37, 45.01),
    ("wrist", "flexion", 52.00, 60.00),
    ("wrist", "extension", 18.00, 60.00),
    ("wrist", "radial", 18.00, 20.00),
    ("wrist", "ulnar", 18.00, 30.00),
];

const TOTALS: [(&str, f64, f64); 6] = [
    ("D1", 203.98, 177.27),
    ("D2", 273.02, 212.94),
    ("D3", 248.42, 207.03),
    ("D4", 273.79, 234.69),
    ("D5", 282.38, 246.29),
    ("wrist", 106.00, 170.00),
];

fn rom() -> Outcome {
    let r = rom_report(&default_hand());
    check(r.joint_rows().count() == 20, "expected 20 joint rows")?;
    for (part, joint, hand, human) in TABLE {
        let row = r.row(part, joint).ok_or(format!("missing row {part} {joint}"))?;
        check(
            (row.robot_deg - hand).abs() < 1e-9 && (row.human_deg - human).abs() < 1e-9,
            format!("{part} {joint}: {} / {} vs {hand} / {human}", row.robot_deg, row.human_deg),
        )?;
    }
    for (part, hand, human) in TOTALS {
        let row = r.row(part, "total").ok_or(format!("missing total {part}"))?;
        check(
            (row.robot_deg - hand).abs() < 1e-9 && (row.human_deg - human).abs() < 1e-9,
            format!("{part} total: {} / {}", row.robot_deg, row.human_deg),
        )?;
    }
    // Oracle: sum of all table rows.
    let hand: f64 = TOTALS.iter().map(|t| t.1).sum();
    let human: f64 = TOTALS.iter().map(|t| t.2).sum();
    let oracle = (hand / human - 1.0) * 100.0;
    check((r.aggregate_with_wrist_pct - oracle).abs() < 1e-9, "aggregate disagrees with oracle")?;
    let hit = [r.aggregate_with_wrist_pct, r.aggregate_digits_only_pct]
        .iter()
        .any(|v| (v - 11.2).abs() <= 0.5);
    check(hit, format!("aggregates {:.2} / {:.2}", r.aggregate_with_wrist_pct, r.aggregate_digits_only_pct))?;
    Ok(format!(
        "42 table values exact; aggregate {:.2}% with wrist, {:.2}% digits only",
        r.aggregate_with_wrist_pct, r.aggregate_digits_only_pct
    ))
}

fn rocker() -> Outcome {
    let start = Instant::now();
    let desc = default_hand();
    let mut joints = 0;
    let mut worst_end: f64 = 0.0;
    let mut worst_trip: f64 = 0.0;
    for d in &desc.digits {
        for j in d.joints.iter().filter(|j| j.kind == JointKind::LeadscrewFlexion) {
            joints += 1;
            let g = j.rocker.as_ref().ok_or(format!("{} {} has no rocker", d.id, j.name))?;
            let lo = nut_travel_to_joint_angle(g, 0.0).map_err(|e| e.to_string())?;
            let hi = nut_travel_to_joint_angle(g, g.stroke_mm).map_err(|e| e.to_string())?;
            worst_end = worst_end.max((lo - j.limits.min_deg).abs()).max((hi - j.limits.max_deg).abs());
            check(((hi - lo) - j.limits.total()).abs() <= 1e-6, format!("{} {} total {}", d.id, j.name, hi - lo))?;
            let n = 2000;
            let mut prev = f64::NEG_INFINITY;
            for k in 0..=n {
                let s = g.stroke_mm * k as f64 / n as f64;
                let th = nut_travel_to_joint_angle(g, s).map_err(|e| e.to_string())?;
                check(th > prev, format!("{} {} not strictly monotone at s = {s}", d.id, j.name))?;
                prev = th;
                let s2 = joint_angle_to_nut_travel(g, th).map_err(|e| e.to_string())?;
                let th2 = nut_travel_to_joint_angle(g, s2).map_err(|e| e.to_string())?;
                worst_trip = worst_trip.max((s2 - s).abs()).max((th2 - th).abs());
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(joints == 14, format!("{joints} calibrated joints"))?;
    check(worst_end <= 1e-6, format!("endpoint error {worst_end:e}"))?;
    check(worst_trip <= 1e-9, format!("round trip error {worst_trip:e}"))?;
    check(elapsed < 1.0, format!("took {elapsed:.2} s"))?;
    Ok(format!(
        "14 joints, endpoint error {worst_end:.1e} deg, round trip {worst_trip:.1e}, {elapsed:.3} s"
    ))
}

fn statics() -> Outcome {
    let desc = default_hand();
    let torque = desc.statics.nominal_motor_torque_nmm;
    let mut weakest = f64::INFINITY;
    for id in DigitId::ALL {
        let f = mid_flexion_force(&desc, id, torque).map_err(|e| e.to_string())?;
        weakest = weakest.min(f.force_n);
        check(f.force_n >= 10.0, format!("{id}: {:.3} N at {torque} N mm", f.force_n))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    let mut poses = vec![mid_flexion_state(&desc), HandState::zero()];
    poses.extend((0..50).map(|_| random_state(&desc, &mut rng)));
    let mut checked = 0;
    for q in &poses {
        for id in DigitId::ALL {
            let distal = desc.digit(id).joints.last().unwrap().link_mm;
            let r = back_drive(&desc, id, q, desc.statics.payload_n, distal).map_err(|e| e.to_string())?;
            for j in r.joints.iter().filter(|j| j.locking) {
                checked += 1;
                check(j.nut_motion_mm == 0.0, format!("{} moved {} mm", j.actuator, j.nut_motion_mm))?;
            }
            check(r.joints.iter().all(|j| j.locking), format!("{id}: non-locking joint"))?;
        }
    }
    // Bus-level holding: drive off, large torque, locking channels stay put.
    let mut m = Master::new(Network::new(&desc).map_err(|e| e.to_string())?);
    for a in Actuator::ALL.iter().filter(|a| !a.is_wrist()) {
        m.set_target(*a, desc.actuator_limits(*a).mid()).map_err(|e| e.to_string())?;
    }
    m.run_for(3.0);
    let held = m.network().true_state();
    for a in Actuator::ALL.iter().filter(|a| !a.is_wrist()) {
        m.set_drive(*a, false).map_err(|e| e.to_string())?;
        m.network_mut().inject_torque(*a, 1e4);
    }
    m.run_for(2.0);
    check(m.network().true_state() == held, "self-locking channel moved under external torque")?;
    Ok(format!(
        "weakest digit {weakest:.2} N at {torque} N mm; {checked} locking joints hold 44.5 N with zero nut motion"
    ))
}

fn envelope() -> Outcome {
    let start = Instant::now();
    let desc = default_hand();
    let g = desc.wrist.geometry;
    let env = wrist_envelope(&g, 0.5).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let got = [
        ("flexion", env.max_flexion.angle_deg, 52.0),
        ("extension", env.max_extension.angle_deg, 18.0),
        ("radial", env.max_radial.angle_deg, 18.0),
        ("ulnar", env.max_ulnar.angle_deg, 18.0),
    ];
    for (name, v, want) in got {
        check((v - want).abs() <= 1.0, format!("{name} {v} vs {want} +- 1"))?;
    }
    for p in env.points.iter().filter(|p| p.feasible) {
        for i in 0..2 {
            let travel = p.lengths_mm[i] - g.min_length_mm;
            check(
                (-1e-9..=26.92 + 1e-9).contains(&travel),
                format!("travel {travel} at ({}, {})", p.fe_deg, p.rud_deg),
            )?;
            check(p.swivel_deg[i] <= 40.0 + 1e-9, format!("swivel {} at ({}, {})", p.swivel_deg[i], p.fe_deg, p.rud_deg))?;
        }
    }
    check(elapsed < 10.0, format!("took {elapsed:.2} s"))?;
    Ok(format!(
        "flexion {:.1}, extension {:.1}, radial {:.1}, ulnar {:.1}; {} feasible points checked; {elapsed:.2} s",
        got[0].1,
        got[1].1,
        got[2].1,
        got[3].1,
        env.feasible_count()
    ))
}

fn all_targets(kin: &HandKinematics, q: &HandState, scale: f64) -> Vec<Objective> {
    let mut out = Vec::new();
    for d in DigitId::ALL {
        out.push(Objective::reach(d, Site::Dip, kin.site(q, d, Site::Dip) * scale, DIP_WEIGHT));
        out.push(Objective::reach(d, Site::Tip, kin.site(q, d, Site::Tip) * scale, TIP_WEIGHT));
    }
    out
}

fn kinematics() -> Outcome {
    let desc = default_hand();
    let kin = HandKinematics::new(&desc);
    let mut rng = ChaCha8Rng::seed_from_u64(48);

    let h: f64 = 1e-5;
    let mut worst_jac: f64 = 0.0;
    for _ in 0..1000 {
        let q = random_state(&desc, &mut rng);
        let digit = DigitId::ALL[rng.random_range(0..5)];
        let site = if rng.random_bool(0.5) { Site::Tip } else { Site::Dip };
        let (acts, _) = jacobian(&desc, &q, digit, site).map_err(|e| e.to_string())?;
        for (c, a) in acts.iter().enumerate() {
            let lim = desc.actuator_limits(*a);
            let x = q.get(*a).clamp(lim.min_deg + 1e-3, lim.max_deg - 1e-3);
            let base = q.with(*a, x);
            let p = kin.site(&base.with(*a, x + h.to_degrees()), digit, site);
            let m = kin.site(&base.with(*a, x - h.to_degrees()), digit, site);
            let col = (p - m) / (2.0 * h);
            let (_, jb) = jacobian(&desc, &base, digit, site).map_err(|e| e.to_string())?;
            let diff = (jb.column(c) - col).norm() / jb.norm().max(1e-12);
            worst_jac = worst_jac.max(diff);
        }
    }
    check(worst_jac < 1e-5, format!("Jacobian relative error {worst_jac:e}"))?;

    // Round trips: all ten DIP and tip targets of a random pose, solved from
    // the mid-range pose. The wrist stays at the sampled value.
    let mut worst_ik: f64 = 0.0;
    let mut mid = HandState::zero();
    for a in Actuator::ALL.iter().filter(|a| !a.is_wrist()) {
        mid.set(*a, desc.actuator_limits(*a).mid());
    }
    let opts = IkOptions {
        tol_mm: 1e-6,
        max_iter: 500,
        free: Some(std::array::from_fn(|i| !Actuator::ALL[i].is_wrist())),
        ..Default::default()
    };
    let mut fails = 0;
    for _ in 0..200 {
        let q = random_state(&desc, &mut rng);
        let targets = all_targets(&kin, &q, 1.0);
        let seed = mid.with(Actuator::WristFe, q.get(Actuator::WristFe)).with(Actuator::WristRud, q.get(Actuator::WristRud));
        let r = solve_ik(&desc, &targets, &seed, &opts).map_err(|e| e.to_string())?;
        let err = r.objective_residuals_mm.iter().fold(0.0f64, |m, v| m.max(*v));
        if err >= 1e-3 {
            fails += 1;
        }
        worst_ik = worst_ik.max(err);
    }
    check(fails == 0, format!("{fails} of 200 round trips above 1e-3 mm (worst {worst_ik:e})"))?;

    // Uniform scale: same joint angles for a scaled hand and scaled targets.
    let k = 1.7;
    let big = scale_hand(&desc, k).map_err(|e| e.to_string())?;
    let mut worst_scale: f64 = 0.0;
    for _ in 0..20 {
        let q = random_state(&desc, &mut rng);
        let seed = mid.with(Actuator::WristFe, q.get(Actuator::WristFe)).with(Actuator::WristRud, q.get(Actuator::WristRud));
        let a = solve_ik(&desc, &all_targets(&kin, &q, 1.0), &seed, &opts).map_err(|e| e.to_string())?;
        let b = solve_ik(&big, &all_targets(&kin, &q, k), &seed, &opts).map_err(|e| e.to_string())?;
        for i in 0..18 {
            worst_scale = worst_scale.max((a.state.values()[i] - b.state.values()[i]).abs());
        }
    }
    check(worst_scale < 1e-6, format!("scale invariance error {worst_scale:e} deg"))?;
    Ok(format!(
        "Jacobian rel err {worst_jac:.1e}; IK worst {worst_ik:.1e} mm over 200; scale error {worst_scale:.1e} deg"
    ))
}

fn opposition() -> Outcome {
    let start = Instant::now();
    let desc = default_hand();
    let mut dists = Vec::new();
    for f in DigitId::FINGERS {
        let c = opposition_check(&desc, f, &OppositionOptions::default()).map_err(|e| format!("{f}: {e}"))?;
        check(c.distance_mm <= 5.0, format!("{f}: {}", c.distance_mm))?;
        dists.push(format!("{f} {:.3}", c.distance_mm));
    }
    let thumb = sample_workspace(&desc, DigitId::D1, 50_000, 1).map_err(|e| e.to_string())?;
    let mut pairs = Vec::new();
    for (k, f) in DigitId::FINGERS.into_iter().enumerate() {
        let cloud = sample_workspace(&desc, f, 50_000, 2 + k as u64).map_err(|e| e.to_string())?;
        let p = proximity(&thumb.points, &cloud.points, 5.0);
        check(p.pairs > 0, format!("thumb/{f} clouds do not meet within 5 mm"))?;
        pairs.push(format!("{f} {}", p.pairs));
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(elapsed < 60.0, format!("took {elapsed:.1} s"))?;
    Ok(format!(
        "contact mm [{}]; 5 mm pairs [{}]; {elapsed:.1} s",
        dists.join(", "),
        pairs.join(", ")
    ))
}

/// Closed-form rate-limited first-order response, computed here from the
/// ODE `x' = sign(e) min(kp |e|, v)`.
fn oracle(target: f64, v: f64, kp: f64, t: f64) -> f64 {
    let knee = v / kp;
    let t_ramp = (target - knee) / v;
    if t <= t_ramp {
        v * t
    } else {
        target - knee * (-kp * (t - t_ramp)).exp()
    }
}

fn scenario(desc: &HandDescription) -> Vec<Telemetry> {
    let mut m = Master::new(Network::new(desc).unwrap());
    let mut log = Vec::new();
    m.set_target(Actuator::D2Mcp, 60.0).unwrap();
    m.set_target(Actuator::AbductionServo, -300.0).unwrap();
    log.extend(m.run_for(0.4));
    m.set_target(Actuator::WristFe, 30.0).unwrap();
    m.set_target(Actuator::D2Mcp, 10.0).unwrap();
    log.extend(m.run_for(1.0));
    log
}

fn bus() -> Outcome {
    let desc = default_hand();
    let mut m = Master::new(Network::new(&desc).map_err(|e| e.to_string())?);
    let q = m.network().quantum_deg();
    let cfg = m.network().config().clone();
    m.set_target(Actuator::D2Mcp, 91.5).map_err(|e| e.to_string())?;
    let dt = 1.0 / cfg.tick_hz;
    let mut prev = 0.0;
    let mut worst_ref: f64 = 0.0;
    let mut worst_speed: f64 = 0.0;
    let ticks = ((1.0 + cfg.settle_margin_s) * cfg.tick_hz).round() as usize;
    for k in 1..=ticks {
        m.tick(dt);
        let x = m.network().channel(Actuator::D2Mcp).true_deg;
        let reading = m.read_encoder(Actuator::D2Mcp).map_err(|e| e.to_string())?;
        check((reading - x).abs() <= q + 1e-12, "encoder error above one quantum")?;
        check(x >= prev && x <= 91.5 + q, "non-monotone or overshoot")?;
        worst_speed = worst_speed.max((x - prev) / dt);
        worst_ref = worst_ref.max((x - oracle(91.5, cfg.finger_speed_deg_s, cfg.kp_per_s, k as f64 * dt)).abs());
        prev = x;
    }
    let final_reading = m.read_encoder(Actuator::D2Mcp).map_err(|e| e.to_string())?;
    check((final_reading - 91.5).abs() <= 0.5, format!("after 1.2 s reading {final_reading}"))?;
    check(worst_speed <= 91.5 * (1.0 + 1e-9), format!("speed {worst_speed}"))?;
    check(worst_ref < q, format!("deviation from closed form {worst_ref:e}"))?;

    let a = serde_json::to_string(&scenario(&desc)).unwrap();
    let b = serde_json::to_string(&scenario(&desc)).unwrap();
    check(a == b && !a.is_empty(), "telemetry differs between identical runs")?;

    let mut lossy = Master::new(Network::new(&desc).map_err(|e| e.to_string())?).with_lossy(LossyConfig {
        drop_probability: 0.05,
        seed: 50,
        max_attempts: 10,
    });
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let n = 2000;
    let mut applied = 0;
    for _ in 0..n {
        let act = Actuator::ALL[rng.random_range(0..18)];
        let lim = desc.actuator_limits(act);
        let v = rng.random_range(lim.min_deg..=lim.max_deg);
        if lossy.set_target(act, v).is_ok() && (lossy.network().channel(act).target_deg - v).abs() < 1e-6 {
            applied += 1;
        }
        lossy.tick(dt);
    }
    let s = lossy.stats();
    check(applied == n, format!("{applied}/{n} commands applied"))?;
    check(s.dropped_requests + s.dropped_replies > 0, "no frames were dropped")?;
    Ok(format!(
        "step reading {final_reading:.3} deg at 1.2 s, max speed {worst_speed:.2} deg/s, closed-form dev {worst_ref:.1e}; \
         deterministic telemetry; lossy {applied}/{n} applied ({} drops, {} retries)",
        s.dropped_requests + s.dropped_replies,
        s.retries
    ))
}

fn data(name: &str) -> String {
    std::fs::read_to_string(format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn scaled(frames: &[RetargetFrame], k: f64) -> Vec<RetargetFrame> {
    let mut out = frames.to_vec();
    for f in &mut out {
        for t in f.fingers.values_mut() {
            for v in t.dip.iter_mut().chain(t.tip.iter_mut()) {
                *v *= k;
            }
        }
    }
    out
}

fn teleop() -> Outcome {
    let desc = default_hand();
    let frames = parse_trace(&data("opposition_trace.jsonl")).map_err(|e| e.to_string())?;
    let segments: Vec<HoldSegment> = serde_json::from_str(&data("opposition_segments.json")).map_err(|e| e.to_string())?;
    let mapping = Mapping::default();
    let mut m = Master::new(Network::new(&desc).map_err(|e| e.to_string())?);
    let q = m.network().quantum_deg();
    let out = run_pipeline(&frames, &mapping, &desc, &mut m, &PipelineOptions::default()).map_err(|e| e.to_string())?;
    let kin = HandKinematics::new(&desc);
    let mut contacts = Vec::new();
    for seg in &segments {
        let rec = out
            .frames
            .iter()
            .rev()
            .find(|r| r.t_ms <= seg.hold_end_ms)
            .ok_or("no frame before hold end")?;
        let worst = rec.tracking_error_deg.iter().fold(0.0f64, |a, b| a.max(*b));
        check(worst <= q, format!("{}: tracking error {worst} at {} ms", seg.finger, rec.t_ms))?;
        let d = (kin.site(&rec.measured, DigitId::D1, Site::Tip) - kin.site(&rec.measured, seg.finger, Site::Tip)).norm();
        check(d <= 5.0, format!("{}: simulated contact distance {d} mm", seg.finger))?;
        contacts.push(format!("{} {d:.2}", seg.finger));
    }
    check(out.held_frames == 0, format!("{} frames held", out.held_frames))?;

    let k = 0.37;
    let scaled_map = Mapping {
        scale: mapping.scale / k,
        ..mapping.clone()
    };
    let mut m2 = Master::new(Network::new(&desc).map_err(|e| e.to_string())?);
    let out2 = run_pipeline(&scaled(&frames, k), &scaled_map, &desc, &mut m2, &PipelineOptions::default())
        .map_err(|e| e.to_string())?;
    let mut worst_scale: f64 = 0.0;
    for (a, b) in out.frames.iter().zip(&out2.frames) {
        for i in 0..18 {
            worst_scale = worst_scale.max((a.commanded.values()[i] - b.commanded.values()[i]).abs());
        }
    }
    check(out.frames.len() == out2.frames.len(), "frame counts differ")?;
    check(worst_scale < 1e-6, format!("whole-trace scale error {worst_scale:e} deg"))?;
    Ok(format!(
        "{} frames, {} commands; contact mm at hold end [{}]; whole-trace scale error {worst_scale:.1e} deg",
        out.frames.len(),
        out.commands.len(),
        contacts.join(", ")
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("self-lock analysis", self_lock),
        ("range-of-motion report", rom),
        ("rocker transmission", rocker),
        ("statics", statics),
        ("wrist envelope", envelope),
        ("kinematics properties", kinematics),
        ("opposition", opposition),
        ("bus", bus),
        ("teleop replay", teleop),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {name} ({secs:.2} s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({secs:.2} s): {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
