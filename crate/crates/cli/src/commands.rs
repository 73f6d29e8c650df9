use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hand_twin::actuation::{
    back_drive, calibrate_wheel_radius, mid_flexion_force, mid_flexion_state, self_lock_margin, ScrewParams,
    SelfLock,
};
use hand_twin::bus::{LossyConfig, Master, Network};
use hand_twin::kinematics::{
    opposition_check, rom_report, sample_workspace, solve_ik, targets_to_objectives, IkOptions, OppositionError,
    OppositionOptions,
};
use hand_twin::model::{fill_rockers, JointKind};
use hand_twin::teleop::{opposition_trace, parse_trace, run_pipeline, sample_trace, Mapping, PipelineOptions};
use hand_twin::wrist::{calibrate_wrist, wrist_envelope, WristTargets};
use hand_twin::{default_hand, load_config, Actuator, DigitId, HandDescription, HandState};
use serde_json::json;

use crate::cli::*;
use crate::server::{self, ServeOptions};

/// A command that ran but did not achieve its goal (exit status 1).
#[derive(Debug)]
pub struct Unsuccessful(pub String);

impl std::fmt::Display for Unsuccessful {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Unsuccessful {}

pub fn load_description(path: Option<&Path>) -> Result<HandDescription> {
    match path {
        None => Ok(default_hand()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            load_config(&text).with_context(|| format!("loading {}", p.display()))
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

pub fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Selflock(a) => selflock(config, a),
        Command::Rom(a) => {
            let report = rom_report(&load_description(config)?);
            let text = match a.format {
                RomFormat::Text => report.text(),
                RomFormat::Csv => report.joint_csv(),
                RomFormat::Json => pretty(&report),
            };
            emit(a.out.as_deref(), &text)
        }
        Command::Workspace(a) => workspace(config, a),
        Command::Envelope(a) => envelope(config, a),
        Command::Calibrate(a) => calibrate(config, a),
        Command::Ik(a) => ik(config, a),
        Command::Opposition(a) => opposition(config, a),
        Command::Simulate(a) => simulate(config, a),
        Command::Replay(a) => replay(config, a),
        Command::Serve(a) => serve(config, a),
        Command::Force(a) => force(config, a),
    }
}

fn verdict(s: &SelfLock) -> &'static str {
    if s.locking {
        "LOCKING"
    } else {
        "NOT LOCKING"
    }
}

fn selflock(config: Option<&Path>, a: SelflockArgs) -> Result<()> {
    if let (Some(lead), Some(dia), Some(mu)) = (a.lead, a.dia, a.mu) {
        let s = self_lock_margin(&ScrewParams {
            lead_mm: lead,
            mean_diameter_mm: dia,
            friction: mu,
            stroke_mm: 1.0,
        })?;
        let text = if a.json {
            pretty(&json!({ "lead_mm": lead, "diameter_mm": dia, "friction": mu, "analysis": s }))
        } else {
            format!(
                "lead angle     α = {:.2}°\nfriction angle φ = {:.2}°\nmargin φ - α   = {:.2}°\nverdict: {}\n",
                s.lead_angle_deg,
                s.friction_angle_deg,
                s.margin_deg,
                verdict(&s)
            )
        };
        return emit(None, &text);
    }
    let desc = load_description(config)?;
    let rows: Vec<(Actuator, SelfLock)> = Actuator::ALL
        .into_iter()
        .filter_map(|act| desc.self_lock(act).map(|s| (act, s)))
        .collect();
    if a.json {
        let v: serde_json::Map<String, serde_json::Value> =
            rows.iter().map(|(act, s)| (act.name().to_string(), json!(s))).collect();
        return emit(None, &pretty(&v));
    }
    let mut out = format!("{:<10} {:>8} {:>8} {:>9}  verdict\n", "actuator", "α °", "φ °", "margin °");
    for (act, s) in &rows {
        let _ = writeln!(
            out,
            "{:<10} {:>8.2} {:>8.2} {:>9.2}  {}",
            act.name(),
            s.lead_angle_deg,
            s.friction_angle_deg,
            s.margin_deg,
            verdict(s)
        );
    }
    emit(None, &out)
}

fn workspace(config: Option<&Path>, a: WorkspaceArgs) -> Result<()> {
    let desc = load_description(config)?;
    let digits = if a.digits.is_empty() { DigitId::ALL.to_vec() } else { a.digits.clone() };
    if a.format == CloudFormat::Binary && a.out.is_none() {
        bail!("binary output needs --out");
    }
    for &d in &digits {
        let cloud = sample_workspace(&desc, d, a.samples, a.seed)?;
        match &a.out {
            None => {
                let stdout = std::io::stdout();
                cloud.write_csv(stdout.lock())?;
            }
            Some(base) => {
                let path = if digits.len() > 1 { suffixed(base, d.name()) } else { base.clone() };
                let w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
                match a.format {
                    CloudFormat::Csv => cloud.write_csv(w)?,
                    CloudFormat::Binary => cloud.write_binary(w)?,
                }
                eprintln!("{d}: {} points -> {}", cloud.len(), path.display());
            }
        }
    }
    Ok(())
}

fn suffixed(base: &Path, tag: &str) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}_{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{tag}"),
    };
    base.with_file_name(name)
}

fn envelope(config: Option<&Path>, a: EnvelopeArgs) -> Result<()> {
    let desc = load_description(config)?;
    let env = wrist_envelope(&desc.wrist.geometry, a.step)?;
    if let Some(p) = &a.csv {
        std::fs::write(p, env.csv()).with_context(|| format!("writing {}", p.display()))?;
    }
    let g = &desc.wrist.geometry;
    let text = if a.json {
        pretty(&json!({
            "step_deg": env.step_deg,
            "feasible_points": env.feasible_count(),
            "max_flexion": env.max_flexion,
            "max_extension": env.max_extension,
            "max_radial": env.max_radial,
            "max_ulnar": env.max_ulnar,
            "region_bounds_deg": env.region_bounds_deg,
        }))
    } else {
        let b = env.region_bounds_deg;
        format!(
            "grid step {} deg, {} feasible points\nflexion   {:.1} deg\nextension {:.1} deg\nradial    {:.1} deg\nulnar     {:.1} deg\nfeasible region fe [{:.1}, {:.1}] rud [{:.1}, {:.1}] deg\nstroke [{:.2}, {:.2}] mm, swivel limit {} deg\n",
            env.step_deg,
            env.feasible_count(),
            env.max_flexion.angle_deg,
            env.max_extension.angle_deg,
            env.max_radial.angle_deg,
            env.max_ulnar.angle_deg,
            b[0],
            b[1],
            b[2],
            b[3],
            g.min_length_mm,
            g.max_length_mm(),
            g.swivel_limit_deg
        )
    };
    emit(None, &text)
}

fn calibrate(config: Option<&Path>, a: CalibrateArgs) -> Result<()> {
    let mut desc = load_description(config)?;
    let mut log = String::new();
    if !a.skip_rockers {
        for d in &mut desc.digits {
            for j in &mut d.joints {
                if j.kind == JointKind::LeadscrewFlexion {
                    j.rocker = None;
                }
            }
        }
        fill_rockers(&mut desc)?;
        let n = desc.digits.iter().flat_map(|d| &d.joints).filter(|j| j.rocker.is_some()).count();
        let _ = writeln!(log, "rockers: {n} joints calibrated");
    }
    if !a.skip_wheels {
        let span = desc.abduction.servo_max_deg - desc.abduction.servo_min_deg;
        let gear = desc.abduction.gear_ratio();
        let totals: Vec<(DigitId, f64)> = desc
            .digits
            .iter()
            .filter_map(|d| d.abduction().map(|j| (d.id, j.limits.total())))
            .collect();
        for w in &mut desc.abduction.worms {
            let total = totals
                .iter()
                .find(|(d, _)| *d == w.digit)
                .map(|(_, t)| *t)
                .with_context(|| format!("{} has a worm but no abduction joint", w.digit))?;
            w.wheel_radius_mm = calibrate_wheel_radius(w.pitch_mm, total, span, gear)?;
            let _ = writeln!(log, "wheel {}: radius {:.6} mm for {:.2} deg", w.digit, w.wheel_radius_mm, total);
        }
    }
    if !a.skip_wrist {
        let (fe, rud) = (desc.wrist.fe, desc.wrist.rud);
        let targets = WristTargets {
            flexion_deg: fe.max_deg,
            extension_deg: -fe.min_deg,
            radial_deg: rud.max_deg,
            ulnar_deg: -rud.min_deg,
        };
        desc.wrist.geometry = calibrate_wrist(&desc.wrist.geometry, &targets, a.step)?;
        let env = wrist_envelope(&desc.wrist.geometry, a.step)?;
        let _ = writeln!(
            log,
            "wrist: anchor radius {:.6} mm, min length {:.6} mm; envelope {:.1}/{:.1}/{:.1}/{:.1} deg",
            desc.wrist.geometry.anchor_radius_mm,
            desc.wrist.geometry.min_length_mm,
            env.max_flexion.angle_deg,
            env.max_extension.angle_deg,
            env.max_radial.angle_deg,
            env.max_ulnar.angle_deg
        );
    }
    desc.validate()?;
    let text = desc.to_json();
    load_config(&text).context("calibrated config does not re-parse")?;
    std::fs::write(&a.out, text + "\n").with_context(|| format!("writing {}", a.out.display()))?;
    let _ = writeln!(log, "wrote {}", a.out.display());
    emit(None, &log)
}

fn ik(config: Option<&Path>, a: IkArgs) -> Result<()> {
    let desc = load_description(config)?;
    let objectives = targets_to_objectives(&[(a.digit, a.dip.map(Into::into), Some(a.tip.into()))]);
    let mut free = [false; 18];
    for act in Actuator::of_digit(a.digit) {
        free[act.index()] = true;
    }
    if a.wrist {
        free[Actuator::WristFe.index()] = true;
        free[Actuator::WristRud.index()] = true;
    }
    let opts = IkOptions {
        tol_mm: a.tol,
        max_iter: a.max_iter,
        free: Some(free),
        ..Default::default()
    };
    let report = solve_ik(&desc, &objectives, &mid_flexion_state(&desc), &opts)?;
    emit(
        None,
        &pretty(&json!({
            "digit": a.digit,
            "status": report.status,
            "residual_mm": report.residual_mm,
            "iterations": report.iterations,
            "state": report.state,
        })),
    )?;
    if !report.success() {
        return Err(Unsuccessful(format!("no solution within {} mm (residual {:.6} mm)", a.tol, report.residual_mm)).into());
    }
    Ok(())
}

fn opposition(config: Option<&Path>, a: OppositionArgs) -> Result<()> {
    let desc = load_description(config)?;
    let fingers = if a.fingers.is_empty() { DigitId::FINGERS.to_vec() } else { a.fingers.clone() };
    let opts = OppositionOptions {
        tol_mm: a.tol,
        thumb_only: a.thumb_only,
        ..Default::default()
    };
    let mut failed = Vec::new();
    let mut results = Vec::new();
    let mut text = String::new();
    for f in fingers {
        match opposition_check(&desc, f, &opts) {
            Ok(c) => {
                let _ = writeln!(text, "{f}: contact at {:.3} mm ({} starts, {} iterations)", c.distance_mm, c.starts, c.iterations);
                results.push(json!({ "finger": f, "success": true, "distance_mm": c.distance_mm, "state": c.state }));
            }
            Err(OppositionError::NoContact {
                best_distance_mm,
                best_state,
                ..
            }) => {
                let _ = writeln!(text, "{f}: FAILED, best distance {best_distance_mm:.3} mm");
                results.push(json!({ "finger": f, "success": false, "distance_mm": best_distance_mm, "state": best_state }));
                failed.push(f);
            }
            Err(e) => return Err(e.into()),
        }
    }
    if a.json {
        text = pretty(&results);
    }
    emit(None, &text)?;
    if !failed.is_empty() {
        let names: Vec<String> = failed.iter().map(|f| f.to_string()).collect();
        return Err(Unsuccessful(format!("no contact within {} mm for {}", a.tol, names.join(", "))).into());
    }
    Ok(())
}

fn master_for(desc: &HandDescription, drop: Option<f64>, seed: u64) -> Result<Master> {
    let mut m = Master::new(Network::new(desc)?);
    if let Some(p) = drop {
        if !(0.0..1.0).contains(&p) {
            bail!("drop probability must be in [0, 1), got {p}");
        }
        m = m.with_lossy(LossyConfig {
            drop_probability: p,
            seed,
            ..Default::default()
        });
    }
    Ok(m)
}

fn simulate(config: Option<&Path>, a: SimulateArgs) -> Result<()> {
    let desc = load_description(config)?;
    if !(a.duration > 0.0 && a.duration.is_finite()) {
        bail!("duration must be positive, got {}", a.duration);
    }
    let mut m = master_for(&desc, a.drop, a.seed)?;
    let mut log = match &a.telemetry {
        Some(p) => Some(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => None,
    };
    let mut applied = Vec::new();
    for &(act, deg) in &a.sets {
        let ack = m.set_target(act, deg)?;
        applied.push((act, ack));
    }
    let q = m.network().quantum_deg();
    let dt = m.network().tick_period_s();
    let ticks = (a.duration / dt).round() as u64;
    // Last time each channel was outside one quantum of its target.
    let mut unsettled_at = vec![0.0; applied.len()];
    for _ in 0..ticks {
        let batch = m.tick(dt);
        if let Some(w) = log.as_mut() {
            for t in &batch {
                serde_json::to_writer(&mut *w, t)?;
                w.write_all(b"\n")?;
            }
        }
        let snap = m.snapshot();
        let now = m.network().time_s();
        for (k, (act, ack)) in applied.iter().enumerate() {
            if (snap.get(*act) - ack.applied_deg).abs() > q {
                unsettled_at[k] = now;
            }
        }
    }
    if let Some(mut w) = log {
        w.flush()?;
    }
    let snap = m.snapshot();
    let rows: Vec<serde_json::Value> = applied
        .iter()
        .zip(&unsettled_at)
        .map(|((act, ack), t)| {
            let settled = (snap.get(*act) - ack.applied_deg).abs() <= q;
            json!({
                "actuator": act,
                "target_deg": ack.applied_deg,
                "clamped": ack.clamped,
                "reading_deg": snap.get(*act),
                "settled": settled,
                "settle_time_s": if settled { Some(*t) } else { None },
            })
        })
        .collect();
    let text = if a.json {
        pretty(&json!({ "duration_s": m.network().time_s(), "quantum_deg": q, "channels": rows, "bus": m.stats() }))
    } else {
        let mut s = format!("simulated {:.3} s, encoder quantum {:.5} deg\n", m.network().time_s(), q);
        for r in &rows {
            let _ = writeln!(
                s,
                "{}: target {:.4} deg{}, reading {:.4} deg, {}",
                r["actuator"].as_str().unwrap_or_default(),
                r["target_deg"].as_f64().unwrap_or_default(),
                if r["clamped"].as_bool() == Some(true) { " (clamped)" } else { "" },
                r["reading_deg"].as_f64().unwrap_or_default(),
                match r["settle_time_s"].as_f64() {
                    Some(t) => format!("settled at {t:.3} s"),
                    None => "not settled".into(),
                }
            );
        }
        let st = m.stats();
        let _ = writeln!(
            s,
            "bus: {} requests, {} transmissions, {} retries, {} timeouts",
            st.requests, st.transmissions, st.retries, st.timeouts
        );
        s
    };
    emit(None, &text)
}

fn replay(config: Option<&Path>, a: ReplayArgs) -> Result<()> {
    let desc = load_description(config)?;
    let mapping: Mapping = match &a.mapping {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => Mapping::default(),
    };
    let frames = match (&a.trace, a.bundled) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_trace(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        (None, Some(Bundled::Sample)) => sample_trace(&desc, &mapping),
        (None, Some(Bundled::Opposition)) => opposition_trace(&desc, &mapping)?.0,
        (None, None) => unreachable!("clap requires a trace source"),
    };
    let mut m = master_for(&desc, a.drop, a.seed)?;
    let opts = PipelineOptions {
        rate_hz: a.rate_hz,
        ..Default::default()
    };
    let out = run_pipeline(&frames, &mapping, &desc, &mut m, &opts)?;
    if let Some(p) = &a.out {
        std::fs::write(p, pretty(&out)).with_context(|| format!("writing {}", p.display()))?;
    }
    let q = m.network().quantum_deg();
    let worst = |e: &[f64; 18]| e.iter().cloned().fold(0.0, f64::max);
    let processed = out.frames.iter().filter(|f| f.processed).count();
    let stale = out.frames.iter().filter(|f| f.stale).count();
    let text = format!(
        "{} frames ({} retargeted, {} held, {} stale), {} commands\nmax tracking error {:.4} deg, final {:.5} deg (quantum {:.5} deg)\n",
        out.frames.len(),
        processed,
        out.held_frames,
        stale,
        out.commands.len(),
        worst(&out.max_tracking_error_deg),
        worst(&out.final_tracking_error_deg),
        q
    );
    emit(None, &text)
}

fn serve(config: Option<&Path>, a: ServeArgs) -> Result<()> {
    let desc = load_description(config)?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting the async runtime")?;
    rt.block_on(async move {
        let running = server::start(
            desc,
            ServeOptions {
                host: a.host,
                port: a.port,
                publish_hz: a.publish_hz,
                log: a.log,
            },
        )
        .await?;
        println!("listening on http://{}", running.addr);
        std::io::stdout().flush()?;
        tokio::select! {
            r = running.handle => r.context("server task")?,
            r = tokio::signal::ctrl_c() => r.context("waiting for interrupt"),
        }
    })
}

fn force(config: Option<&Path>, a: ForceArgs) -> Result<()> {
    let desc = load_description(config)?;
    let digits = if a.digits.is_empty() { DigitId::ALL.to_vec() } else { a.digits.clone() };
    let torque = a.torque.unwrap_or(desc.statics.nominal_motor_torque_nmm);
    let load = a.load.unwrap_or(desc.statics.payload_n);
    let state: HandState = mid_flexion_state(&desc);
    let mut rows = Vec::new();
    let mut text = format!("mid-flexion fingertip force at {torque} N mm per motor\n");
    for &d in &digits {
        let f = mid_flexion_force(&desc, d, torque)?;
        let limiting = f.limiting.map(|x| x.name()).unwrap_or("-");
        let _ = writeln!(text, "{d}: {:.2} N (limited by {limiting})", f.force_n);
        let mut row = json!({ "digit": d, "force_n": f.force_n, "limiting": f.limiting });
        if a.backdrive {
            let distal = desc.digit(d).flexion_joints().last().map(|(_, j)| j.link_mm).unwrap_or_default();
            let r = back_drive(&desc, d, &state, load, desc.statics.contact_fraction * distal)?;
            let all_locking = r.joints.iter().all(|j| j.locking);
            let _ = writeln!(
                text,
                "    {load} N unpowered: max nut motion {:.3} mm, {}",
                r.max_motion_mm(),
                if all_locking { "all joints self-locking" } else { "back-drivable joint present" }
            );
            row["backdrive"] = json!(r);
        }
        rows.push(row);
    }
    if a.json {
        text = pretty(&rows);
    }
    emit(None, &text)
}
