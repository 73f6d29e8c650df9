use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use hand_twin::{Actuator, DigitId};

#[derive(Debug, Parser)]
#[command(name = "hand-twin", version, about = "Digital twin of an 18-DoF leadscrew hand")]
pub struct Cli {
    /// Hand description (JSON); the built-in default hand when absent.
    #[arg(long, global = true, env = "HAND_TWIN_CONFIG", value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lead angle, friction angle and self-locking verdict of a screw or worm.
    Selflock(SelflockArgs),
    /// Range-of-motion comparison against the human reference.
    Rom(RomArgs),
    /// Sample fingertip workspace clouds.
    Workspace(WorkspaceArgs),
    /// Scan the wrist envelope.
    Envelope(EnvelopeArgs),
    /// Recalibrate rockers, abduction wheels and wrist geometry and write the config.
    Calibrate(CalibrateArgs),
    /// One-shot inverse kinematics for a digit.
    Ik(IkArgs),
    /// Thumb opposition checks against D2..D5.
    Opposition(OppositionArgs),
    /// Drive the simulated bus through a step scenario.
    Simulate(SimulateArgs),
    /// Replay a glove trace through retargeting and the bus.
    Replay(ReplayArgs),
    /// Host the simulator over HTTP and WebSocket.
    Serve(ServeArgs),
    /// Fingertip force and back-drive statics.
    Force(ForceArgs),
}

#[derive(Debug, Args)]
pub struct SelflockArgs {
    /// Screw lead, mm.
    #[arg(long, requires_all = ["dia", "mu"])]
    pub lead: Option<f64>,
    /// Mean (pitch) diameter, mm.
    #[arg(long, requires_all = ["lead", "mu"])]
    pub dia: Option<f64>,
    /// Static friction coefficient.
    #[arg(long, requires_all = ["lead", "dia"])]
    pub mu: Option<f64>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RomFormat {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct RomArgs {
    #[arg(long, value_enum, default_value = "text")]
    pub format: RomFormat,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CloudFormat {
    Csv,
    Binary,
}

#[derive(Debug, Args)]
pub struct WorkspaceArgs {
    /// Digits to sample; all five when omitted.
    #[arg(long = "digit", value_parser = parse_digit)]
    pub digits: Vec<DigitId>,
    #[arg(long, default_value_t = 50_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: CloudFormat,
    /// Output file; with several digits the digit name is appended to the stem.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnvelopeArgs {
    /// Grid step, degrees.
    #[arg(long, default_value_t = 0.5)]
    pub step: f64,
    /// Write every grid point as CSV.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Where to write the calibrated config.
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    #[arg(long)]
    pub skip_rockers: bool,
    #[arg(long)]
    pub skip_wheels: bool,
    #[arg(long)]
    pub skip_wrist: bool,
    /// Envelope grid step the wrist calibration is tuned for, degrees.
    #[arg(long, default_value_t = 0.5)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct IkArgs {
    #[arg(long, value_parser = parse_digit)]
    pub digit: DigitId,
    /// Tip target `x,y,z` in mm, hand frame.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub tip: [f64; 3],
    /// Optional DIP target `x,y,z` in mm.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub dip: Option<[f64; 3]>,
    /// Let the wrist move as well.
    #[arg(long)]
    pub wrist: bool,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct OppositionArgs {
    /// Fingers to check; D2..D5 when omitted.
    #[arg(long = "finger", value_parser = parse_digit)]
    pub fingers: Vec<DigitId>,
    /// Contact tolerance, mm.
    #[arg(long, default_value_t = 5.0)]
    pub tol: f64,
    /// Move only the thumb.
    #[arg(long)]
    pub thumb_only: bool,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Step command `ACTUATOR=DEG` issued at t = 0; repeatable.
    #[arg(long = "set", value_parser = parse_set, required = true, allow_hyphen_values = true)]
    pub sets: Vec<(Actuator, f64)>,
    /// Simulated time, seconds.
    #[arg(long, default_value_t = 1.5)]
    pub duration: f64,
    /// Drop probability for request and reply frames (lossy bus).
    #[arg(long)]
    pub drop: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write tick telemetry as JSON Lines.
    #[arg(long, value_name = "PATH")]
    pub telemetry: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Bundled {
    Opposition,
    Sample,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["trace", "bundled"])))]
pub struct ReplayArgs {
    /// JSON Lines trace file.
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    /// Synthesize one of the bundled traces instead.
    #[arg(long, value_enum)]
    pub bundled: Option<Bundled>,
    /// Glove-to-hand mapping (JSON); identity rotation and default scale when absent.
    #[arg(long, value_name = "PATH")]
    pub mapping: Option<PathBuf>,
    /// Retarget at most this often, Hz.
    #[arg(long)]
    pub rate_hz: Option<f64>,
    #[arg(long)]
    pub drop: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the full per-frame result as JSON.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Telemetry publish rate, Hz.
    #[arg(long, default_value_t = 30.0)]
    pub publish_hz: f64,
    /// Telemetry log, JSON Lines.
    #[arg(long, value_name = "PATH")]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ForceArgs {
    #[arg(long = "digit", value_parser = parse_digit)]
    pub digits: Vec<DigitId>,
    /// Motor torque, N mm; the configured nominal torque when absent.
    #[arg(long)]
    pub torque: Option<f64>,
    /// Also check unpowered back-drive under an external load.
    #[arg(long)]
    pub backdrive: bool,
    /// External load, N; the configured payload when absent.
    #[arg(long)]
    pub load: Option<f64>,
    #[arg(long)]
    pub json: bool,
}

fn parse_digit(s: &str) -> Result<DigitId, String> {
    s.parse::<DigitId>().map_err(|e| e.to_string())
}

fn parse_point(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z, got {s:?}"));
    }
    let mut p = [0.0f64; 3];
    for (v, t) in p.iter_mut().zip(parts) {
        *v = t.parse().map_err(|_| format!("{t:?} is not a number"))?;
        if !v.is_finite() {
            return Err(format!("{t:?} is not finite"));
        }
    }
    Ok(p)
}

fn parse_set(s: &str) -> Result<(Actuator, f64), String> {
    let (name, deg) = s.split_once('=').ok_or_else(|| format!("expected ACTUATOR=DEG, got {s:?}"))?;
    let a = Actuator::from_name(name.trim()).ok_or_else(|| format!("unknown actuator {name:?}"))?;
    let v: f64 = deg.trim().parse().map_err(|_| format!("{deg:?} is not a number"))?;
    if !v.is_finite() {
        return Err(format!("{deg:?} is not finite"));
    }
    Ok((a, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsers() {
        assert_eq!(parse_point("1, -2,3.5").unwrap(), [1.0, -2.0, 3.5]);
        assert!(parse_point("1,2").is_err());
        assert_eq!(parse_set("d2_mcp=45").unwrap(), (Actuator::D2Mcp, 45.0));
        assert!(parse_set("D9=1").is_err());
        assert_eq!(parse_digit("index").unwrap(), DigitId::D2);
    }

    #[test]
    fn selflock_requires_all_three() {
        assert!(Cli::try_parse_from(["hand-twin", "selflock", "--lead", "0.35"]).is_err());
        assert!(Cli::try_parse_from(["hand-twin", "selflock", "--lead", "0.35", "--dia", "2.5", "--mu", "0.42"]).is_ok());
    }

    #[test]
    fn clap_definition() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
