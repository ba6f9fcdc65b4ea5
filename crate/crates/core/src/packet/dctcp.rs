use crate::netmodel::MTU_BYTES;

/// DCTCP EWMA gain.
pub const DCTCP_G: f64 = 1.0 / 16.0;

/// Sender congestion state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcState {
    /// Congestion window in bytes, never below one MTU.
    pub cwnd: f64,
    /// EWMA of the marked fraction.
    pub alpha: f64,
}

impl CcState {
    pub fn new(init_window: f64) -> Self {
        Self {
            cwnd: init_window.max(MTU_BYTES as f64),
            alpha: 0.0,
        }
    }
}

/// Once-per-window DCTCP update with marked fraction `f`.
///
/// `alpha' = (1−g)·alpha + g·f`; on any marking the window shrinks by
/// `alpha'/2`, otherwise it grows by one MTU.
pub fn dctcp_window_update(cc: CcState, f: f64) -> CcState {
    let f = f.clamp(0.0, 1.0);
    let alpha = (1.0 - DCTCP_G) * cc.alpha + DCTCP_G * f;
    let mtu = MTU_BYTES as f64;
    let cwnd = if f > 0.0 {
        (cc.cwnd * (1.0 - alpha / 2.0)).max(mtu)
    } else {
        cc.cwnd + mtu
    };
    CcState { cwnd, alpha }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unmarked_windows_grow_linearly() {
        let mut cc = CcState { cwnd: 5000.0, alpha: 0.5 };
        for i in 1..=20 {
            cc = dctcp_window_update(cc, 0.0);
            assert_eq!(cc.cwnd, 5000.0 + 1000.0 * i as f64);
        }
        assert!(cc.alpha < 0.5 * (15.0f64 / 16.0).powi(19));
    }

    #[test]
    fn full_marking_halves() {
        let cc = dctcp_window_update(CcState { cwnd: 20000.0, alpha: 1.0 }, 1.0);
        assert_eq!(cc.alpha, 1.0);
        assert_eq!(cc.cwnd, 10000.0);
        let floor = dctcp_window_update(CcState { cwnd: 1200.0, alpha: 1.0 }, 1.0);
        assert_eq!(floor.cwnd, 1000.0);
    }

    #[test]
    fn alpha_converges_to_marked_fraction() {
        for f in [0.1, 0.37, 0.9] {
            let mut cc = CcState::new(10000.0);
            for _ in 0..1000 {
                cc = dctcp_window_update(cc, f);
            }
            assert!((cc.alpha - f).abs() < 1e-12, "{f}: {}", cc.alpha);
            assert!(cc.cwnd >= 1000.0);
        }
    }
}
