//! Conversions between the design units used in configs and tables and SI.

use std::f64::consts::PI;

pub fn rpm_to_rad_s(rpm: f64) -> f64 {
    rpm * PI / 30.0
}

pub fn rad_s_to_rpm(omega: f64) -> f64 {
    omega * 30.0 / PI
}

pub fn mm_to_m(mm: f64) -> f64 {
    mm / 1000.0
}

pub fn m_to_mm(m: f64) -> f64 {
    m * 1000.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rpm_round_trip() {
        assert!((rpm_to_rad_s(4800.0) - 502.654_824_574).abs() < 1e-8);
        assert!((rad_s_to_rpm(rpm_to_rad_s(3000.0)) - 3000.0).abs() < 1e-9);
        assert_eq!(mm_to_m(47.0), 0.047);
    }
}
