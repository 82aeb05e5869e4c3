use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported per-level tolerance (`k` and `ℓ`).
pub const MAX_TOLERANCE: usize = 3;

/// Geometry and redundancy apportionment of an HRAID k/ℓ array.
///
/// Construction enforces the bounds every reliability computation needs:
/// `N, M >= 1`, `k, ℓ <= 3`, `k < N` and `ℓ < M`. Laying out strips also needs
/// room for a data strip in every node row (`k + ℓ < M`), which
/// [`HraidConfig::require_layout`] checks separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct HraidConfig {
    n_nodes: usize,
    disks_per_node: usize,
    inter_tolerance: usize,
    intra_tolerance: usize,
}

#[derive(Serialize, Deserialize)]
struct RawConfig {
    n: usize,
    m: usize,
    k: usize,
    l: usize,
}

impl TryFrom<RawConfig> for HraidConfig {
    type Error = Error;

    fn try_from(raw: RawConfig) -> Result<Self> {
        HraidConfig::new(raw.n, raw.m, raw.k, raw.l)
    }
}

impl From<HraidConfig> for RawConfig {
    fn from(c: HraidConfig) -> Self {
        RawConfig {
            n: c.n_nodes,
            m: c.disks_per_node,
            k: c.inter_tolerance,
            l: c.intra_tolerance,
        }
    }
}

impl HraidConfig {
    pub fn new(n: usize, m: usize, k: usize, l: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("N >= 1", format!("N={n}")));
        }
        if m < 1 {
            return Err(Error::invalid("M >= 1", format!("M={m}")));
        }
        if k > MAX_TOLERANCE {
            return Err(Error::invalid("0 <= k <= 3", format!("k={k}")));
        }
        if l > MAX_TOLERANCE {
            return Err(Error::invalid("0 <= l <= 3", format!("l={l}")));
        }
        if k >= n {
            return Err(Error::invalid("k < N", format!("k={k}, N={n}")));
        }
        if l >= m {
            return Err(Error::invalid("l < M", format!("l={l}, M={m}")));
        }
        Ok(HraidConfig {
            n_nodes: n,
            disks_per_node: m,
            inter_tolerance: k,
            intra_tolerance: l,
        })
    }

    /// Like [`HraidConfig::new`], additionally requiring `k + ℓ < M`.
    pub fn with_layout(n: usize, m: usize, k: usize, l: usize) -> Result<Self> {
        let c = Self::new(n, m, k, l)?;
        c.require_layout()?;
        Ok(c)
    }

    /// Check strips of one node row must leave room for at least one data strip.
    pub fn require_layout(&self) -> Result<()> {
        let (m, k, l) = (self.m(), self.k(), self.l());
        if k + l >= m {
            return Err(Error::invalid(
                "k + l < M",
                format!("k={k}, l={l}, M={m}"),
            ));
        }
        Ok(())
    }

    /// Number of storage nodes, `N`.
    pub fn n(&self) -> usize {
        self.n_nodes
    }

    /// Disks per node, `M`.
    pub fn m(&self) -> usize {
        self.disks_per_node
    }

    /// Tolerated node failures, `k`.
    pub fn k(&self) -> usize {
        self.inter_tolerance
    }

    /// Tolerated disk failures per node, `ℓ`.
    pub fn l(&self) -> usize {
        self.intra_tolerance
    }

    pub fn total_disks(&self) -> usize {
        self.n_nodes * self.disks_per_node
    }

    /// Same geometry with a different apportionment.
    pub fn with_tolerances(&self, k: usize, l: usize) -> Result<Self> {
        Self::new(self.n_nodes, self.disks_per_node, k, l)
    }
}

impl std::fmt::Display for HraidConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "HRAID{}/{}(N={}, M={})",
            self.inter_tolerance, self.intra_tolerance, self.n_nodes, self.disks_per_node
        )
    }
}

/// Exponential failure rates, per hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRates", into = "RawRates")]
pub struct FailureModel {
    disk_rate: f64,
    controller_rate: f64,
}

#[derive(Serialize, Deserialize)]
struct RawRates {
    delta_per_hour: f64,
    gamma_per_hour: f64,
}

impl TryFrom<RawRates> for FailureModel {
    type Error = Error;

    fn try_from(raw: RawRates) -> Result<Self> {
        FailureModel::new(raw.delta_per_hour, raw.gamma_per_hour)
    }
}

impl From<FailureModel> for RawRates {
    fn from(r: FailureModel) -> Self {
        RawRates {
            delta_per_hour: r.disk_rate,
            gamma_per_hour: r.controller_rate,
        }
    }
}

impl Default for FailureModel {
    /// Disk MTTF of one million hours, controllers that never fail.
    fn default() -> Self {
        FailureModel {
            disk_rate: 1e-6,
            controller_rate: 0.0,
        }
    }
}

impl FailureModel {
    pub fn new(disk_rate: f64, controller_rate: f64) -> Result<Self> {
        if !(disk_rate.is_finite() && disk_rate > 0.0) {
            return Err(Error::invalid("delta > 0", format!("delta={disk_rate}")));
        }
        if !(controller_rate.is_finite() && controller_rate >= 0.0) {
            return Err(Error::invalid(
                "gamma >= 0",
                format!("gamma={controller_rate}"),
            ));
        }
        Ok(FailureModel {
            disk_rate,
            controller_rate,
        })
    }

    /// Disk failure rate δ (per hour).
    pub fn disk_rate(&self) -> f64 {
        self.disk_rate
    }

    /// Controller failure rate γ (per hour).
    pub fn controller_rate(&self) -> f64 {
        self.controller_rate
    }

    /// Disk mean time to failure, `1/δ` hours.
    pub fn disk_mttf(&self) -> f64 {
        1.0 / self.disk_rate
    }

    /// Both rates multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.disk_rate * factor, self.controller_rate * factor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds_are_named() {
        let err = HraidConfig::new(3, 4, 3, 0).unwrap_err();
        assert!(err.to_string().contains("k < N"), "{err}");
        let err = HraidConfig::new(4, 4, 0, 4).unwrap_err();
        assert!(err.to_string().contains("0 <= l <= 3"), "{err}");
        let err = HraidConfig::with_layout(4, 4, 2, 2).unwrap_err();
        assert!(err.to_string().contains("k + l < M"), "{err}");
        assert!(HraidConfig::new(0, 4, 0, 0).is_err());
        assert!(HraidConfig::new(4, 2, 0, 2).is_err());
    }

    #[test]
    fn reliability_configs_may_fill_a_node() {
        // No data strip left, but still a well-defined failure model.
        let c = HraidConfig::new(3, 3, 2, 2).unwrap();
        assert!(c.require_layout().is_err());
    }

    #[test]
    fn rates_validate() {
        assert!(FailureModel::new(0.0, 0.0).is_err());
        assert!(FailureModel::new(1e-6, -1.0).is_err());
        assert!(FailureModel::new(f64::NAN, 0.0).is_err());
        assert_eq!(FailureModel::default().disk_mttf(), 1e6);
    }

    #[test]
    fn serde_rechecks_bounds() {
        let c: HraidConfig = serde_json::from_str(r#"{"n":12,"m":12,"k":1,"l":2}"#).unwrap();
        assert_eq!((c.n(), c.m(), c.k(), c.l()), (12, 12, 1, 2));
        assert!(serde_json::from_str::<HraidConfig>(r#"{"n":2,"m":12,"k":2,"l":0}"#).is_err());
    }
}
