//! Conversions between logarithmic and linear units.

/// dBm to Watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Path loss in dB to the corresponding amplitude gain, e.g. 60 dB -> 1e-3.
pub fn path_loss_amplitude(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 20.0)
}

/// `10 log10(x)`; used for CRB columns in plot-oriented outputs.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(50.0) - 100.0).abs() < 1e-12);
        assert!((dbm_to_watts(-80.0) - 1e-11).abs() < 1e-25);
        assert!((path_loss_amplitude(60.0) - 1e-3).abs() < 1e-18);
        assert!((path_loss_amplitude(120.0).powi(2) - 1e-12).abs() < 1e-26);
        assert!((watts_to_dbm(dbm_to_watts(-13.5)) + 13.5).abs() < 1e-12);
        assert!((from_db(to_db(3.3)) - 3.3).abs() < 1e-12);
    }
}
