use nalgebra::{DMatrix, Rotation3, Vector3};

use super::fk::{HandKinematics, Site};
use super::state::{Actuator, HandState, StateError};
use crate::model::{DigitId, HandDescription};

/// Position sensitivity of a site, mm per radian of each actuator, for all 18
/// actuators. Columns of actuators that do not move the site are zero.
pub(crate) fn site_columns(kin: &HandKinematics, state: &HandState, digit: DigitId, site: Site) -> [Vector3<f64>; 18] {
    let f = kin.frames(state, digit);
    let x = f.site(site);
    let mut cols = [Vector3::zeros(); 18];
    for (link, (origin, axis)) in kin.chain(digit).links.iter().zip(f.origins.iter().zip(&f.axes)) {
        cols[link.actuator.index()] += axis.cross(&(x - origin)) * link.ratio;
    }
    let fe = state.get(Actuator::WristFe).to_radians();
    cols[Actuator::WristFe.index()] = Vector3::y().cross(&x);
    let rud_axis = Rotation3::from_axis_angle(&Vector3::y_axis(), fe) * Vector3::z();
    cols[Actuator::WristRud.index()] = rud_axis.cross(&x);
    cols
}

/// Columns of the site Jacobian for the digit's own actuators followed by the
/// two wrist actuators. D3 and D1 have no abduction column.
pub fn jacobian(
    desc: &HandDescription,
    state: &HandState,
    digit: DigitId,
    site: Site,
) -> Result<(Vec<Actuator>, DMatrix<f64>), StateError> {
    state.validate(desc)?;
    let kin = HandKinematics::new(desc);
    let cols = site_columns(&kin, state, digit, site);
    let mut acts = Actuator::of_digit(digit);
    acts.push(Actuator::WristFe);
    acts.push(Actuator::WristRud);
    let mut m = DMatrix::zeros(3, acts.len());
    for (k, a) in acts.iter().enumerate() {
        m.set_column(k, &cols[a.index()]);
    }
    Ok((acts, m))
}
