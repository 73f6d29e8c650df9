use std::f64::consts::PI;

use hand_twin::actuation::{
    holding_torque, joint_angle_to_nut_travel, mid_flexion_force, moment_arm, raising_torque, screw_axial_force,
    ScrewParams,
};
use hand_twin::model::{default_hand, DigitId, JointKind};
use proptest::prelude::*;

fn screw(lead: f64, dia: f64, mu: f64) -> ScrewParams {
    ScrewParams {
        lead_mm: lead,
        mean_diameter_mm: dia,
        friction: mu,
        stroke_mm: 5.0,
    }
}

proptest! {
    // Square-thread force balance written with the lead and friction angles.
    #[test]
    fn axial_force_matches_angle_form(lead in 0.1f64..3.0, dia in 1.0f64..12.0, mu in 0.05f64..0.6, t in 1.0f64..200.0) {
        let s = screw(lead, dia, mu);
        let alpha = (lead / (PI * dia)).atan();
        let phi = mu.atan();
        let oracle = 2.0 * t / (dia * (alpha + phi).tan());
        let w = screw_axial_force(t, &s);
        prop_assert!((w - oracle).abs() <= 1e-9 * oracle.max(1.0));
        prop_assert!((raising_torque(w, &s) - t).abs() <= 1e-9 * t);
    }

    #[test]
    fn holding_torque_matches_angle_form(lead in 0.1f64..3.0, dia in 1.0f64..12.0, mu in 0.05f64..0.6, w in 1.0f64..100.0) {
        let alpha = (lead / (PI * dia)).atan();
        let phi = mu.atan();
        let oracle = w * dia / 2.0 * (phi - alpha).tan();
        let h = holding_torque(w, lead, dia, mu);
        prop_assert!((h - oracle).abs() <= 1e-9 * oracle.abs().max(1.0));
        prop_assert_eq!(h > 0.0, phi > alpha);
    }
}

#[test]
fn moment_arm_is_screw_length_derivative() {
    let desc = default_hand();
    let mut checked = 0;
    for d in &desc.digits {
        for j in d.joints.iter().filter(|j| j.kind == JointKind::LeadscrewFlexion) {
            let g = j.rocker.as_ref().unwrap();
            let h = 1e-4;
            for k in 1..20 {
                let th = j.limits.min_deg + j.limits.total() * k as f64 / 20.0;
                let ds = joint_angle_to_nut_travel(g, th + h).unwrap() - joint_angle_to_nut_travel(g, th - h).unwrap();
                let fd = (ds / (2.0 * h).to_radians()).abs();
                let r = moment_arm(g, th).unwrap();
                assert!((r - fd).abs() <= 1e-5 * r.max(1.0), "{} {} at {th}: {r} vs {fd}", d.id, j.name);
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 14 * 19);
}

#[test]
fn finger_screw_force_at_nominal_torque() {
    let s = ScrewParams::finger(5.0);
    let t = default_hand().statics.nominal_motor_torque_nmm;
    let alpha = (0.35f64 / (PI * 2.5)).atan();
    let phi = 0.42f64.atan();
    let w = screw_axial_force(t, &s);
    assert!((w - 2.0 * t / (2.5 * (alpha + phi).tan())).abs() < 1e-9);
}

#[test]
fn force_scales_linearly_with_torque() {
    let desc = default_hand();
    for id in DigitId::ALL {
        let a = mid_flexion_force(&desc, id, 20.0).unwrap();
        let b = mid_flexion_force(&desc, id, 40.0).unwrap();
        assert!((b.force_n - 2.0 * a.force_n).abs() < 1e-9 * b.force_n);
        assert_eq!(a.limiting, b.limiting);
    }
}
