//! Closed-form capacity anchors for channels with encoder-side state: the
//! Gaussian dirty-paper bounds and the stuck-at defective-memory bounds.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitsError {
    #[error("power P must be finite and >= 0, got {0}")]
    BadPower(f64),
    #[error("interference variance must be finite and >= 0, got {0}")]
    BadInterferenceVariance(f64),
    #[error("noise variance must be finite and > 0, got {0}")]
    BadNoiseVariance(f64),
    #[error("defect probability must lie in [0, 1], got {0}")]
    BadDefectProbability(f64),
    #[error("crossover probability must lie in [0, 1/2], got {0}")]
    BadCrossoverProbability(f64),
}

/// Binary entropy in bits, with the 0 log 0 = 0 convention so h(0) = h(1) = 0.
pub fn binary_entropy(x: f64) -> f64 {
    assert!((0.0..=1.0).contains(&x), "entropy argument {x} out of [0,1]");
    let term = |p: f64| if p == 0.0 { 0.0 } else { -p * p.log2() };
    term(x) + term(1.0 - x)
}

/// Capacity bounds for the power-constrained Gaussian channel with additive
/// interference of variance `sigma_s_sq` known at the encoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpcCapacities {
    /// Interference treated as noise (neither side knows it).
    pub c_min: f64,
    /// Interference fully pre-subtracted by the encoder.
    pub c_max: f64,
}

pub fn dpc_capacities(
    power: f64,
    sigma_s_sq: f64,
    sigma_z_sq: f64,
) -> Result<DpcCapacities, LimitsError> {
    if !power.is_finite() || power < 0.0 {
        return Err(LimitsError::BadPower(power));
    }
    if !sigma_s_sq.is_finite() || sigma_s_sq < 0.0 {
        return Err(LimitsError::BadInterferenceVariance(sigma_s_sq));
    }
    if !sigma_z_sq.is_finite() || sigma_z_sq <= 0.0 {
        return Err(LimitsError::BadNoiseVariance(sigma_z_sq));
    }
    let half_log = |snr: f64| 0.5 * (1.0 + snr).log2();
    Ok(DpcCapacities {
        c_min: half_log(power / (sigma_s_sq + sigma_z_sq)),
        c_max: half_log(power / sigma_z_sq),
    })
}

/// Capacity bounds for a binary memory where each cell is stuck (uniformly at
/// 0 or 1) with probability `epsilon` and healthy cells pass through a BSC
/// with crossover `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefectCapacities {
    /// Defect locations unknown to both sides: the composite BSC bound.
    pub c_min_plus: f64,
    /// Defect locations known at the encoder.
    pub c_max_plus: f64,
}

pub fn defect_capacities(epsilon: f64, p: f64) -> Result<DefectCapacities, LimitsError> {
    if !epsilon.is_finite() || !(0.0..=1.0).contains(&epsilon) {
        return Err(LimitsError::BadDefectProbability(epsilon));
    }
    if !p.is_finite() || !(0.0..=0.5).contains(&p) {
        return Err(LimitsError::BadCrossoverProbability(p));
    }
    let composite = (1.0 - epsilon) * p + epsilon / 2.0;
    Ok(DefectCapacities {
        c_min_plus: 1.0 - binary_entropy(composite),
        c_max_plus: (1.0 - epsilon) * (1.0 - binary_entropy(p)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn entropy_anchors() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < TOL);
        // h(0.05) and h(0.1), evaluated independently once and frozen.
        assert!((binary_entropy(0.05) - 0.2863969571159562).abs() < TOL);
        assert!((binary_entropy(0.1) - 0.4689955935892812).abs() < TOL);
    }

    #[test]
    fn entropy_is_symmetric() {
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert!((binary_entropy(x) - binary_entropy(1.0 - x)).abs() < TOL);
        }
    }

    #[test]
    fn dpc_anchor_values() {
        let c = dpc_capacities(1.0, 0.0, 1.0).unwrap();
        assert!((c.c_min - 0.5).abs() < TOL);
        assert!((c.c_max - 0.5).abs() < TOL);

        let c = dpc_capacities(0.0, 3.0, 1.0).unwrap();
        assert_eq!((c.c_min, c.c_max), (0.0, 0.0));

        // 0.5 log2(1.5), frozen from an independent evaluation.
        let c = dpc_capacities(1.0, 1.0, 1.0).unwrap();
        assert!((c.c_min - 0.2924812503605781).abs() < TOL);
        assert!((c.c_max - 0.5).abs() < TOL);
    }

    #[test]
    fn dpc_rejects_bad_inputs() {
        assert!(dpc_capacities(1.0, 0.0, 0.0).is_err());
        assert!(dpc_capacities(-1.0, 0.0, 1.0).is_err());
        assert!(dpc_capacities(1.0, -0.5, 1.0).is_err());
        assert!(dpc_capacities(f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn defect_anchor_values() {
        let c = defect_capacities(0.0, 0.0).unwrap();
        assert_eq!((c.c_min_plus, c.c_max_plus), (1.0, 1.0));

        let c = defect_capacities(0.1, 0.0).unwrap();
        assert!((c.c_max_plus - 0.9).abs() < TOL);
        assert!((c.c_min_plus - 0.7136030428840438).abs() < TOL);

        let c = defect_capacities(0.0, 0.1).unwrap();
        let expect = 1.0 - binary_entropy(0.1);
        assert!((c.c_min_plus - expect).abs() < TOL);
        assert!((c.c_max_plus - expect).abs() < TOL);
        assert!((expect - 0.5310044064107188).abs() < TOL);
    }

    #[test]
    fn defect_rejects_bad_inputs() {
        assert!(defect_capacities(-0.1, 0.0).is_err());
        assert!(defect_capacities(1.1, 0.0).is_err());
        assert!(defect_capacities(0.0, 0.6).is_err());
        assert!(defect_capacities(0.0, f64::NAN).is_err());
    }

    #[test]
    fn bounds_order_and_monotonicity() {
        for i in 0..=20 {
            let eps = i as f64 / 20.0;
            let mut prev_min = f64::INFINITY;
            let mut prev_max = f64::INFINITY;
            for j in 0..=25 {
                let p = j as f64 / 50.0;
                let c = defect_capacities(eps, p).unwrap();
                assert!(c.c_max_plus >= c.c_min_plus - TOL, "eps={eps} p={p}");
                // Non-increasing in p.
                assert!(c.c_min_plus <= prev_min + TOL);
                assert!(c.c_max_plus <= prev_max + TOL);
                prev_min = c.c_min_plus;
                prev_max = c.c_max_plus;
            }
        }
        // Non-increasing in epsilon at fixed p.
        for j in 0..=25 {
            let p = j as f64 / 50.0;
            let mut prev_min = f64::INFINITY;
            let mut prev_max = f64::INFINITY;
            for i in 0..=20 {
                let eps = i as f64 / 20.0;
                let c = defect_capacities(eps, p).unwrap();
                assert!(c.c_min_plus <= prev_min + TOL);
                assert!(c.c_max_plus <= prev_max + TOL);
                prev_min = c.c_min_plus;
                prev_max = c.c_max_plus;
            }
        }
        for i in 0..=10 {
            for j in 1..=10 {
                let c = dpc_capacities(2.0, i as f64, j as f64).unwrap();
                assert!(c.c_max >= c.c_min - TOL);
            }
        }
    }
}
