use serde::{Deserialize, Serialize};

use crate::math;

/// Inclusive range used to normalize one configuration field to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRange {
    pub name: &'static str,
    pub min: u64,
    pub max: u64,
}

impl ParamRange {
    const fn new(name: &'static str, min: u64, max: u64) -> Self {
        Self { name, min, max }
    }

    fn normalize(&self, raw: u64) -> Result<f64, ConfigError> {
        if raw < self.min || raw > self.max {
            return Err(ConfigError::OutOfRange {
                field: self.name,
                value: raw,
                min: self.min,
                max: self.max,
            });
        }
        Ok((raw - self.min) as f64 / (self.max - self.min) as f64)
    }

    fn denormalize(&self, x: f64) -> Result<u64, ConfigError> {
        if !(0.0..=1.0).contains(&x) {
            return Err(ConfigError::BadVector(self.name));
        }
        let span = (self.max - self.min) as f64;
        Ok(self.min + math::round(x * span) as u64)
    }
}

/// Buffer size per switch port, bytes.
pub const BUFFER_RANGE: ParamRange = ParamRange::new("buffer_bytes", 100_000, 160_000);
/// Initial congestion window, bytes.
pub const INIT_WINDOW_RANGE: ParamRange = ParamRange::new("init_window_bytes", 5_000, 15_000);
/// DCTCP marking threshold K, bytes.
pub const DCTCP_K_RANGE: ParamRange = ParamRange::new("dctcp_k_bytes", 10_000, 30_000);
/// DCQCN K_min, bytes.
pub const DCQCN_KMIN_RANGE: ParamRange = ParamRange::new("dcqcn_kmin_bytes", 10_000, 30_000);
/// DCQCN K_max, bytes.
pub const DCQCN_KMAX_RANGE: ParamRange = ParamRange::new("dcqcn_kmax_bytes", 30_000, 50_000);
/// TIMELY T_low, nanoseconds.
pub const TIMELY_TLOW_RANGE: ParamRange = ParamRange::new("timely_tlow_ns", 40_000, 60_000);
/// TIMELY T_high, nanoseconds.
pub const TIMELY_THIGH_RANGE: ParamRange = ParamRange::new("timely_thigh_ns", 100_000, 150_000);

pub const CONFIG_VECTOR_LEN: usize = 8;

/// Congestion-control protocol with its thresholds in raw units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "lowercase")]
pub enum CcProtocol {
    Dctcp { k_bytes: u64 },
    Timely { t_low_ns: u64, t_high_ns: u64 },
    Dcqcn { k_min_bytes: u64, k_max_bytes: u64 },
}

/// Network configuration in raw units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub cc: CcProtocol,
    pub buffer_bytes: u64,
    pub init_window_bytes: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            cc: CcProtocol::Dctcp { k_bytes: 20_000 },
            buffer_bytes: 100_000,
            init_window_bytes: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{field} = {value} outside [{min}, {max}]")]
    OutOfRange {
        field: &'static str,
        value: u64,
        min: u64,
        max: u64,
    },
    #[error("malformed configuration vector at {0}")]
    BadVector(&'static str),
}

/// Fixed-length network configuration vector:
/// `[dctcp, timely, dcqcn, buffer, init_window, cc_param_0, cc_param_1]`
/// padded to eight slots. Layout:
///
/// | slot | meaning                                         |
/// |------|-------------------------------------------------|
/// | 0..3 | one-hot protocol (DCTCP, TIMELY, DCQCN)         |
/// | 3    | buffer size                                     |
/// | 4    | initial window                                  |
/// | 5    | DCTCP K / TIMELY T_low / DCQCN K_min            |
/// | 6    | 0 for DCTCP / TIMELY T_high / DCQCN K_max       |
/// | 7    | reserved, always 0                              |
///
/// Continuous slots are affine-normalized to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NetworkConfigVector(pub [f64; CONFIG_VECTOR_LEN]);

impl NetworkConfigVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_f32(&self) -> [f32; CONFIG_VECTOR_LEN] {
        self.0.map(|x| x as f32)
    }

    /// Inverse of [`encode_config`].
    pub fn decode(&self) -> Result<NetworkConfig, ConfigError> {
        let v = &self.0;
        let hot: [bool; 3] = [v[0] == 1.0, v[1] == 1.0, v[2] == 1.0];
        let n_hot = hot.iter().filter(|&&h| h).count();
        let n_zero = v[..3].iter().filter(|&&x| x == 0.0).count();
        if n_hot != 1 || n_zero != 2 {
            return Err(ConfigError::BadVector("cc_onehot"));
        }
        let cc = if hot[0] {
            if v[6] != 0.0 {
                return Err(ConfigError::BadVector("cc_param_1"));
            }
            CcProtocol::Dctcp {
                k_bytes: DCTCP_K_RANGE.denormalize(v[5])?,
            }
        } else if hot[1] {
            CcProtocol::Timely {
                t_low_ns: TIMELY_TLOW_RANGE.denormalize(v[5])?,
                t_high_ns: TIMELY_THIGH_RANGE.denormalize(v[6])?,
            }
        } else {
            CcProtocol::Dcqcn {
                k_min_bytes: DCQCN_KMIN_RANGE.denormalize(v[5])?,
                k_max_bytes: DCQCN_KMAX_RANGE.denormalize(v[6])?,
            }
        };
        Ok(NetworkConfig {
            cc,
            buffer_bytes: BUFFER_RANGE.denormalize(v[3])?,
            init_window_bytes: INIT_WINDOW_RANGE.denormalize(v[4])?,
        })
    }
}

/// Normalizes a raw configuration; every field must lie inside its range.
pub fn encode_config(raw: &NetworkConfig) -> Result<NetworkConfigVector, ConfigError> {
    let mut v = [0.0; CONFIG_VECTOR_LEN];
    v[3] = BUFFER_RANGE.normalize(raw.buffer_bytes)?;
    v[4] = INIT_WINDOW_RANGE.normalize(raw.init_window_bytes)?;
    match raw.cc {
        CcProtocol::Dctcp { k_bytes } => {
            v[0] = 1.0;
            v[5] = DCTCP_K_RANGE.normalize(k_bytes)?;
        }
        CcProtocol::Timely {
            t_low_ns,
            t_high_ns,
        } => {
            v[1] = 1.0;
            v[5] = TIMELY_TLOW_RANGE.normalize(t_low_ns)?;
            v[6] = TIMELY_THIGH_RANGE.normalize(t_high_ns)?;
        }
        CcProtocol::Dcqcn {
            k_min_bytes,
            k_max_bytes,
        } => {
            v[2] = 1.0;
            v[5] = DCQCN_KMIN_RANGE.normalize(k_min_bytes)?;
            v[6] = DCQCN_KMAX_RANGE.normalize(k_max_bytes)?;
        }
    }
    Ok(NetworkConfigVector(v))
}
