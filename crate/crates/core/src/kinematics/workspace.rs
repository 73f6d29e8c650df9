use std::collections::HashMap;
use std::io::{Read, Write};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::fk::{HandKinematics, Site};
use super::state::{Actuator, HandState};
use crate::model::{DigitId, HandDescription};

pub const WORKSPACE_MAGIC: &[u8; 4] = b"HTWS";
const WORKSPACE_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("sample count must be positive")]
    EmptyRequest,
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad workspace file: {0}")]
    Format(String),
}

/// Tip positions of one digit over states drawn uniformly from its joint
/// limit box, wrist neutral.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkspaceCloud {
    pub digit: DigitId,
    pub seed: u64,
    pub points: Vec<[f64; 3]>,
    /// The state behind each point; empty for clouds read back from disk.
    pub states: Vec<HandState>,
}

impl WorkspaceCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "digit,x_mm,y_mm,z_mm")?;
        for p in &self.points {
            writeln!(w, "{},{},{},{}", self.digit, p[0], p[1], p[2])?;
        }
        Ok(())
    }

    /// Parses CSV written by [`write_csv`](Self::write_csv). The seed is not
    /// part of the CSV format and reads back as zero.
    pub fn read_csv<R: Read>(mut r: R) -> Result<Self, WorkspaceError> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("digit,x_mm,y_mm,z_mm") {
            return Err(WorkspaceError::Format("missing CSV header".into()));
        }
        let mut digit = None;
        let mut points = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(WorkspaceError::Format(format!("line {}: expected 4 fields", i + 2)));
            }
            let d: DigitId = f[0].parse().map_err(|e| WorkspaceError::Format(format!("line {}: {e}", i + 2)))?;
            if digit.is_some_and(|x| x != d) {
                return Err(WorkspaceError::Format(format!("line {}: mixed digits", i + 2)));
            }
            digit = Some(d);
            let mut p = [0.0; 3];
            for k in 0..3 {
                p[k] = f[k + 1]
                    .trim()
                    .parse()
                    .map_err(|e| WorkspaceError::Format(format!("line {}: {e}", i + 2)))?;
            }
            points.push(p);
        }
        Ok(Self {
            digit: digit.ok_or_else(|| WorkspaceError::Format("no points".into()))?,
            seed: 0,
            points,
            states: Vec::new(),
        })
    }

    /// `HTWS`, version, digit index, two reserved bytes, seed (u64 LE),
    /// count (u32 LE), then `count` little-endian f32 triples.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(WORKSPACE_MAGIC)?;
        w.write_all(&[WORKSPACE_VERSION, self.digit.index() as u8, 0, 0])?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&(self.points.len() as u32).to_le_bytes())?;
        for p in &self.points {
            for v in p {
                w.write_all(&(*v as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, WorkspaceError> {
        let mut head = [0u8; 20];
        r.read_exact(&mut head)?;
        if &head[0..4] != WORKSPACE_MAGIC {
            return Err(WorkspaceError::Format("bad magic".into()));
        }
        if head[4] != WORKSPACE_VERSION {
            return Err(WorkspaceError::Format(format!("unsupported version {}", head[4])));
        }
        let digit = *DigitId::ALL
            .get(head[5] as usize)
            .ok_or_else(|| WorkspaceError::Format(format!("bad digit index {}", head[5])))?;
        let seed = u64::from_le_bytes(head[8..16].try_into().expect("8 bytes"));
        let count = u32::from_le_bytes(head[16..20].try_into().expect("4 bytes")) as usize;
        let mut body = vec![0u8; count * 12];
        r.read_exact(&mut body)?;
        let points = body
            .chunks_exact(12)
            .map(|c| {
                let f = |k: usize| f32::from_le_bytes(c[4 * k..4 * k + 4].try_into().expect("4 bytes")) as f64;
                [f(0), f(1), f(2)]
            })
            .collect();
        Ok(Self {
            digit,
            seed,
            points,
            states: Vec::new(),
        })
    }
}

/// Draws `n` states uniformly over the joint limits of the digit's actuators
/// (other actuators and the wrist stay at zero) and maps them to tip points.
/// States are drawn sequentially from a seeded ChaCha stream; forward
/// kinematics runs in parallel with order preserved.
pub fn sample_workspace(desc: &HandDescription, digit: DigitId, n: usize, seed: u64) -> Result<WorkspaceCloud, WorkspaceError> {
    if n == 0 {
        return Err(WorkspaceError::EmptyRequest);
    }
    let kin = HandKinematics::new(desc);
    let acts = Actuator::of_digit(digit);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<HandState> = (0..n)
        .map(|_| {
            let mut st = HandState::zero();
            for &a in &acts {
                let lim = kin.limits(a);
                st.set(a, rng.random_range(lim.min_deg..=lim.max_deg));
            }
            st
        })
        .collect();
    let points = states
        .par_iter()
        .map(|st| {
            let p = kin.site(st, digit, Site::Tip);
            [p.x, p.y, p.z]
        })
        .collect();
    Ok(WorkspaceCloud {
        digit,
        seed,
        points,
        states,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proximity {
    /// Point pairs closer than the radius.
    pub pairs: usize,
    /// Closest pair, `(index in a, index in b, distance)`.
    pub closest: Option<(usize, usize, f64)>,
}

/// Counts pairs from `a` and `b` within `radius_mm` using a uniform hash grid
/// with cell size equal to the radius.
pub fn proximity(a: &[[f64; 3]], b: &[[f64; 3]], radius_mm: f64) -> Proximity {
    let cell = |p: &[f64; 3]| {
        (
            (p[0] / radius_mm).floor() as i64,
            (p[1] / radius_mm).floor() as i64,
            (p[2] / radius_mm).floor() as i64,
        )
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in b.iter().enumerate() {
        grid.entry(cell(p)).or_default().push(i);
    }
    let r2 = radius_mm * radius_mm;
    let per_point: Vec<(usize, Option<(usize, usize, f64)>)> = a
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let (cx, cy, cz) = cell(p);
            let pv = Vector3::from(*p);
            let mut count = 0;
            let mut best: Option<(usize, usize, f64)> = None;
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        let Some(bucket) = grid.get(&(cx + dx, cy + dy, cz + dz)) else {
                            continue;
                        };
                        for &j in bucket {
                            let d2 = (pv - Vector3::from(b[j])).norm_squared();
                            if d2 <= r2 {
                                count += 1;
                                let d = d2.sqrt();
                                if best.is_none_or(|(_, _, bd)| d < bd) {
                                    best = Some((i, j, d));
                                }
                            }
                        }
                    }
                }
            }
            (count, best)
        })
        .collect();
    let mut out = Proximity {
        pairs: 0,
        closest: None,
    };
    for (count, best) in per_point {
        out.pairs += count;
        if let Some(b) = best {
            if out.closest.is_none_or(|(_, _, d)| b.2 < d) {
                out.closest = Some(b);
            }
        }
    }
    out
}
