use std::fmt::Write as _;

use serde::Serialize;

use crate::model::{DigitId, HandDescription, JointKind};

/// Human range of motion per joint in degrees, in the row order of the
/// report: thumb CMC, MCP, IP; then MCP, PIP, DIP and abduction per finger;
/// then wrist flexion, extension, radial and ulnar deviation.
pub const HUMAN_REFERENCE: [(&str, &str, f64); 22] = [
    ("D1", "cmc", 55.00),
    ("D1", "mcp", 57.27),
    ("D1", "ip", 65.00),
    ("D2", "mcp", 49.20),
    ("D2", "pip", 86.60),
    ("D2", "dip", 57.95),
    ("D2", "abduction", 19.19),
    ("D3", "mcp", 66.33),
    ("D3", "pip", 85.08),
    ("D3", "dip", 55.62),
    ("D4", "mcp", 65.30),
    ("D4", "pip", 93.67),
    ("D4", "dip", 58.43),
    ("D4", "abduction", 17.29),
    ("D5", "mcp", 52.76),
    ("D5", "pip", 91.81),
    ("D5", "dip", 56.71),
    ("D5", "abduction", 45.01),
    ("wrist", "flexion", 60.0),
    ("wrist", "extension", 60.0),
    ("wrist", "radial", 20.0),
    ("wrist", "ulnar", 30.0),
];

fn human(part: &str, joint: &str) -> f64 {
    HUMAN_REFERENCE
        .iter()
        .find(|(p, j, _)| *p == part && *j == joint)
        .map(|r| r.2)
        .unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RomKind {
    /// One row per joint of the 20-joint hand.
    Joint,
    /// Sum over a digit's joints.
    DigitTotal,
    /// One direction of a wrist axis.
    WristDirection,
    /// Ratio of summed ranges minus one, in percent.
    Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RomRow {
    pub kind: RomKind,
    pub part: String,
    pub joint: String,
    pub robot_deg: f64,
    pub human_deg: f64,
    pub delta_deg: f64,
    pub relative_pct: f64,
}

impl RomRow {
    fn new(kind: RomKind, part: &str, joint: &str, robot: f64, human: f64) -> Self {
        Self {
            kind,
            part: part.into(),
            joint: joint.into(),
            robot_deg: robot,
            human_deg: human,
            delta_deg: robot - human,
            relative_pct: (robot / human - 1.0) * 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RomReport {
    pub rows: Vec<RomRow>,
    /// Sum over all 20 joints (wrist directions included) against the human
    /// reference.
    pub aggregate_with_wrist_pct: f64,
    /// Same over the 18 digit joints only.
    pub aggregate_digits_only_pct: f64,
}

impl RomReport {
    pub fn joint_rows(&self) -> impl Iterator<Item = &RomRow> {
        self.rows.iter().filter(|r| r.kind == RomKind::Joint)
    }

    pub fn row(&self, part: &str, joint: &str) -> Option<&RomRow> {
        self.rows.iter().find(|r| r.part == part && r.joint == joint)
    }

    /// Every row: joints, digit totals, wrist directions and both aggregates.
    pub fn csv(&self) -> String {
        csv_of(self.rows.iter())
    }

    /// The 20 joint rows followed by the all-joint aggregate.
    pub fn joint_csv(&self) -> String {
        csv_of(
            self.rows
                .iter()
                .filter(|r| r.kind == RomKind::Joint || (r.kind == RomKind::Aggregate && r.joint == "with-wrist")),
        )
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<6} {:<16} {:>10} {:>10} {:>10} {:>9}",
            "part", "joint", "robot", "human", "delta", "rel %"
        );
        for r in &self.rows {
            if r.kind == RomKind::Aggregate {
                continue;
            }
            let label = match r.kind {
                RomKind::DigitTotal => "total".to_string(),
                RomKind::WristDirection => format!("  {}", r.joint),
                _ => r.joint.clone(),
            };
            let _ = writeln!(
                out,
                "{:<6} {:<16} {:>10.2} {:>10.2} {:>+10.2} {:>+9.2}",
                r.part, label, r.robot_deg, r.human_deg, r.delta_deg, r.relative_pct
            );
        }
        let _ = writeln!(
            out,
            "average RoM advantage: {:+.2}% (all joints incl. wrist), {:+.2}% (digits only)",
            self.aggregate_with_wrist_pct, self.aggregate_digits_only_pct
        );
        out
    }
}


fn csv_of<'a>(rows: impl Iterator<Item = &'a RomRow>) -> String {
    let mut out = String::from("kind,part,joint,robot_deg,human_deg,delta_deg,relative_pct\n");
    for r in rows {
        let kind = match r.kind {
            RomKind::Joint => "joint",
            RomKind::DigitTotal => "digit-total",
            RomKind::WristDirection => "wrist-direction",
            RomKind::Aggregate => "aggregate",
        };
        let _ = writeln!(
            out,
            "{kind},{},{},{:.2},{:.2},{:.2},{:.2}",
            r.part, r.joint, r.robot_deg, r.human_deg, r.delta_deg, r.relative_pct
        );
    }
    out
}

/// Per-joint ranges of motion of a description against the human reference.
pub fn rom_report(desc: &HandDescription) -> RomReport {
    let mut rows = Vec::new();
    let (mut robot_digits, mut human_digits) = (0.0, 0.0);
    for id in DigitId::ALL {
        let d = desc.digit(id);
        // Table order: flexion joints first, abduction last.
        let mut joints: Vec<_> = d.joints.iter().filter(|j| j.kind != JointKind::CoupledAbduction).collect();
        joints.extend(d.joints.iter().filter(|j| j.kind == JointKind::CoupledAbduction));
        let (mut rt, mut ht) = (0.0, 0.0);
        for j in joints {
            let h = human(id.name(), &j.name);
            rows.push(RomRow::new(RomKind::Joint, id.name(), &j.name, j.limits.total(), h));
            rt += j.limits.total();
            ht += h;
        }
        rows.push(RomRow::new(RomKind::DigitTotal, id.name(), "total", rt, ht));
        robot_digits += rt;
        human_digits += ht;
    }

    let fe = desc.wrist.fe;
    let rud = desc.wrist.rud;
    rows.push(RomRow::new(
        RomKind::Joint,
        "wrist",
        "fe",
        fe.total(),
        human("wrist", "flexion") + human("wrist", "extension"),
    ));
    rows.push(RomRow::new(
        RomKind::Joint,
        "wrist",
        "rud",
        rud.total(),
        human("wrist", "radial") + human("wrist", "ulnar"),
    ));
    let directions = [
        ("flexion", fe.max_deg),
        ("extension", -fe.min_deg),
        ("radial", rud.max_deg),
        ("ulnar", -rud.min_deg),
    ];
    for (name, v) in directions {
        rows.push(RomRow::new(RomKind::WristDirection, "wrist", name, v, human("wrist", name)));
    }
    let robot_wrist = fe.total() + rud.total();
    let human_wrist: f64 = directions.iter().map(|(n, _)| human("wrist", n)).sum();
    rows.push(RomRow::new(RomKind::DigitTotal, "wrist", "total", robot_wrist, human_wrist));

    let with_wrist = RomRow::new(
        RomKind::Aggregate,
        "all",
        "with-wrist",
        robot_digits + robot_wrist,
        human_digits + human_wrist,
    );
    let digits_only = RomRow::new(RomKind::Aggregate, "all", "digits-only", robot_digits, human_digits);
    let aggregate_with_wrist_pct = with_wrist.relative_pct;
    let aggregate_digits_only_pct = digits_only.relative_pct;
    rows.push(with_wrist);
    rows.push(digits_only);
    RomReport {
        rows,
        aggregate_with_wrist_pct,
        aggregate_digits_only_pct,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_hand;

    #[test]
    fn rows_and_aggregate() {
        let r = rom_report(&default_hand());
        assert_eq!(r.joint_rows().count(), 20);
        let idx = r.row("D2", "mcp").unwrap();
        assert_eq!(idx.robot_deg, 103.13);
        assert_eq!(idx.human_deg, 49.20);
        let wrist = r.row("wrist", "total").unwrap();
        assert_eq!(wrist.robot_deg, 106.0);
        assert_eq!(wrist.human_deg, 170.0);
        assert!((r.aggregate_with_wrist_pct - 11.2).abs() < 0.1);
    }

    #[test]
    fn digit_totals_match_table() {
        let r = rom_report(&default_hand());
        let totals = [("D1", 203.98, 177.27), ("D2", 273.02, 212.94), ("D3", 248.42, 207.03), ("D4", 273.79, 234.69), ("D5", 282.38, 246.29)];
        for (part, robot, human) in totals {
            let row = r.row(part, "total").unwrap();
            assert!((row.robot_deg - robot).abs() < 1e-9, "{part}");
            assert!((row.human_deg - human).abs() < 1e-9, "{part}");
        }
    }
}
