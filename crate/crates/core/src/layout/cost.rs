use serde::{Deserialize, Serialize};

use crate::config::HraidConfig;
use crate::error::{Error, Result};

/// Read/write mix and mean disk access time (milliseconds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkloadParams {
    read_fraction: f64,
    write_fraction: f64,
    disk_access_ms: f64,
}

impl WorkloadParams {
    pub fn new(read_fraction: f64, write_fraction: f64, disk_access_ms: f64) -> Result<Self> {
        for (name, f) in [("0 <= f_r <= 1", read_fraction), ("0 <= f_w <= 1", write_fraction)] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::invalid(name, format!("{f}")));
            }
        }
        if (read_fraction + write_fraction - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "f_r + f_w = 1",
                format!("f_r={read_fraction}, f_w={write_fraction}"),
            ));
        }
        if !(disk_access_ms.is_finite() && disk_access_ms > 0.0) {
            return Err(Error::invalid("x_d > 0", format!("x_d={disk_access_ms}")));
        }
        Ok(WorkloadParams {
            read_fraction,
            write_fraction,
            disk_access_ms,
        })
    }

    pub fn read_fraction(&self) -> f64 {
        self.read_fraction
    }

    pub fn write_fraction(&self) -> f64 {
        self.write_fraction
    }

    pub fn disk_access_ms(&self) -> f64 {
        self.disk_access_ms
    }
}

/// Mean disk time per logical request, `[f_r + 2 f_w (k+1)(ℓ+1)] x_d`.
///
/// A small write reads and rewrites the data strip and each of its
/// `(k+1)(ℓ+1) - 1` dependent check strips. Time spent shipping the data
/// difference between nodes is not included.
pub fn small_write_cost(w: &WorkloadParams, config: &HraidConfig) -> f64 {
    let touched = ((config.k() + 1) * (config.l() + 1)) as f64;
    (w.read_fraction + 2.0 * w.write_fraction * touched) * w.disk_access_ms
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_cost_one_access() {
        let w = WorkloadParams::new(1.0, 0.0, 7.5).unwrap();
        for (k, l) in [(0, 0), (1, 1), (3, 3)] {
            let c = HraidConfig::new(12, 12, k, l).unwrap();
            assert_eq!(small_write_cost(&w, &c), 7.5);
        }
    }

    #[test]
    fn raid5_small_write_penalty() {
        let w = WorkloadParams::new(0.0, 1.0, 1.0).unwrap();
        let c = HraidConfig::new(4, 4, 0, 1).unwrap();
        assert_eq!(small_write_cost(&w, &c), 4.0);
    }

    #[test]
    fn even_mix_hraid11() {
        let w = WorkloadParams::new(0.5, 0.5, 5.0).unwrap();
        let c = HraidConfig::new(4, 4, 1, 1).unwrap();
        assert!((small_write_cost(&w, &c) - 22.5).abs() < 1e-12);
    }

    #[test]
    fn linear_in_write_fraction() {
        let c = HraidConfig::new(12, 12, 2, 1).unwrap();
        let xd = 3.0;
        let slope = 2.0 * 3.0 * 2.0 * xd - xd;
        let base = small_write_cost(&WorkloadParams::new(1.0, 0.0, xd).unwrap(), &c);
        for i in 0..=10 {
            let fw = i as f64 / 10.0;
            let w = WorkloadParams::new(1.0 - fw, fw, xd).unwrap();
            assert!((small_write_cost(&w, &c) - (base + slope * fw)).abs() < 1e-9);
        }
    }

    #[test]
    fn fractions_must_sum_to_one() {
        let err = WorkloadParams::new(0.5, 0.4, 1.0).unwrap_err();
        assert!(err.to_string().contains("f_r + f_w = 1"));
        assert!(WorkloadParams::new(0.5, 0.5, 0.0).is_err());
        assert!(WorkloadParams::new(1.5, -0.5, 1.0).is_err());
    }
}
