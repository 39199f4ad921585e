//! Power-unit conversions.

use crate::scalar::Scalar;

/// dBm to watts.
pub fn dbm_to_watts<T: Scalar>(dbm: T) -> T {
    let ten = T::of(10.0);
    ten.powf((dbm - T::of(30.0)) / ten)
}

/// dB to linear power ratio.
pub fn db_to_linear<T: Scalar>(db: T) -> T {
    let ten = T::of(10.0);
    ten.powf(db / ten)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_conversions() {
        assert!((dbm_to_watts(0.0f64) - 1e-3).abs() < 1e-18);
        assert!((dbm_to_watts(30.0f64) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(-100.0f64) - 1e-13).abs() < 1e-25);
    }

    #[test]
    fn db_conversions() {
        assert!((db_to_linear(-40.0f64) - 1e-4).abs() < 1e-16);
        assert!((db_to_linear(0.0f64) - 1.0).abs() < 1e-15);
    }
}
