//! SLC flash wordline neighborhood simulator: erase, ISPP programming,
//! inter-cell interference, pre-read defect extraction, and noisy reads.
//!
//! Voltages only ever move upward between erases: programming raises a cell
//! to the verify level and every interference term is nonnegative. That
//! asymmetry is what makes "already above the read level" cells permanent
//! stuck-at-1 defects for the duration of the block.

use crate::gf2::Gf2Vector;
use crate::pbch::DefectVector;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("channel parameter {name} = {value} is invalid")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("pre-read level {eta_pre} exceeds read level {eta}")]
    PreReadAboveRead { eta_pre: f64, eta: f64 },
    #[error("block needs at least one wordline and one bitline")]
    EmptyBlock,
    #[error("wordline {0} out of range, block has {1}")]
    WordlineOutOfRange(usize, usize),
    #[error("data has {got} bits, wordline has {expected} cells")]
    DataLength { expected: usize, got: usize },
    #[error("wordline {0} was already written")]
    WordlineAlreadyWritten(usize),
    #[error("wordline {index} written after wordline {last}; writes must ascend")]
    OutOfOrderWrite { index: usize, last: usize },
    #[error("wordline {0} cannot be pre-read after being written")]
    PreReadAfterWrite(usize),
}

/// Physical parameters of the block. Defaults reproduce the reference
/// simulation setup: erase distribution N(-3, 1), verify level 1 V, 1 V
/// program step, coupling ratios (0.08, 0.1, 0.006), read level 0 V.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub init_mean: f64,
    pub init_std: f64,
    pub v_verify_s1: f64,
    pub delta_vpp: f64,
    /// Coupling ratio to bitline neighbors (same wordline).
    pub gamma_x: f64,
    /// Coupling ratio to wordline neighbors (same bitline).
    pub gamma_y: f64,
    /// Coupling ratio to the four diagonal neighbors.
    pub gamma_xy: f64,
    /// Overall ICI scaling factor.
    pub alpha: f64,
    pub sigma_read: f64,
    /// Hard-decision read level.
    pub eta: f64,
    /// Defect pre-read level; must not exceed `eta`.
    pub eta_pre: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            init_mean: -3.0,
            init_std: 1.0,
            v_verify_s1: 1.0,
            delta_vpp: 1.0,
            gamma_x: 0.08,
            gamma_y: 0.1,
            gamma_xy: 0.006,
            alpha: 0.6,
            sigma_read: 0.1,
            eta: 0.0,
            eta_pre: 0.0,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let checks: [(&'static str, f64, bool); 11] = [
            ("init_mean", self.init_mean, self.init_mean.is_finite()),
            ("init_std", self.init_std, self.init_std.is_finite() && self.init_std > 0.0),
            ("v_verify_s1", self.v_verify_s1, self.v_verify_s1.is_finite()),
            ("delta_vpp", self.delta_vpp, self.delta_vpp.is_finite() && self.delta_vpp > 0.0),
            ("gamma_x", self.gamma_x, self.gamma_x.is_finite() && self.gamma_x >= 0.0),
            ("gamma_y", self.gamma_y, self.gamma_y.is_finite() && self.gamma_y >= 0.0),
            ("gamma_xy", self.gamma_xy, self.gamma_xy.is_finite() && self.gamma_xy >= 0.0),
            ("alpha", self.alpha, self.alpha.is_finite() && self.alpha >= 0.0),
            (
                "sigma_read",
                self.sigma_read,
                self.sigma_read.is_finite() && self.sigma_read >= 0.0,
            ),
            ("eta", self.eta, self.eta.is_finite()),
            ("eta_pre", self.eta_pre, self.eta_pre.is_finite()),
        ];
        for (name, value, ok) in checks {
            if !ok {
                return Err(ChannelError::InvalidParameter { name, value });
            }
        }
        if self.eta_pre > self.eta {
            return Err(ChannelError::PreReadAboveRead { eta_pre: self.eta_pre, eta: self.eta });
        }
        Ok(())
    }
}

/// Threshold-voltage shifts of the 8 neighbors of a victim cell, each
/// recorded at that neighbor's own programming instant. Missing neighbors
/// stay 0. "Up" is the higher wordline index.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeighborDeltas {
    pub left: f64,
    pub right: f64,
    pub up: f64,
    pub down: f64,
    pub up_left: f64,
    pub up_right: f64,
    pub down_left: f64,
    pub down_right: f64,
}

/// Capacitive-coupling voltage shift seen by the victim cell.
pub fn ici_shift(params: &ChannelParams, d: &NeighborDeltas) -> f64 {
    debug_assert!(
        [d.left, d.right, d.up, d.down, d.up_left, d.up_right, d.down_left, d.down_right]
            .iter()
            .all(|&v| v >= 0.0),
        "neighbor shifts are nonnegative"
    );
    params.alpha
        * (params.gamma_x * (d.left + d.right)
            + params.gamma_y * (d.up + d.down)
            + params.gamma_xy * (d.up_left + d.up_right + d.down_left + d.down_right))
}

/// Outcome of programming one cell: the settled voltage and how far it moved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsppResult {
    pub v_final: f64,
    pub delta_v: f64,
}

/// Incremental-step programming: raise the voltage by whole `delta_vpp`
/// steps until it passes the verify level. A cell already past verify does
/// not move.
pub fn ispp_program(params: &ChannelParams, v_current: f64) -> IsppResult {
    if v_current >= params.v_verify_s1 {
        return IsppResult { v_final: v_current, delta_v: 0.0 };
    }
    let mut steps = ((params.v_verify_s1 - v_current) / params.delta_vpp).ceil();
    let mut v_final = v_current + steps * params.delta_vpp;
    if v_final < params.v_verify_s1 {
        // ceil landed one step short due to rounding.
        steps += 1.0;
        v_final = v_current + steps * params.delta_vpp;
    }
    IsppResult { v_final, delta_v: v_final - v_current }
}

/// One erase block: a wordline-major grid of cell voltages plus per-cell
/// programming bookkeeping.
#[derive(Debug, Clone)]
pub struct FlashBlock {
    wordlines: usize,
    bitlines: usize,
    vth: Vec<f64>,
    programmed: Vec<bool>,
    /// Shift recorded when the cell itself was programmed; 0 for erased
    /// cells. This is the quantity neighbors couple to.
    delta_v: Vec<f64>,
    written: Vec<bool>,
    last_written: Option<usize>,
}

impl FlashBlock {
    pub fn wordlines(&self) -> usize {
        self.wordlines
    }

    pub fn bitlines(&self) -> usize {
        self.bitlines
    }

    #[inline]
    fn idx(&self, wl: usize, bl: usize) -> usize {
        debug_assert!(wl < self.wordlines && bl < self.bitlines);
        wl * self.bitlines + bl
    }

    pub fn vth(&self, wl: usize, bl: usize) -> f64 {
        self.vth[self.idx(wl, bl)]
    }

    pub fn is_programmed(&self, wl: usize, bl: usize) -> bool {
        self.programmed[self.idx(wl, bl)]
    }

    pub fn delta_v(&self, wl: usize, bl: usize) -> f64 {
        self.delta_v[self.idx(wl, bl)]
    }

    pub fn is_written(&self, wl: usize) -> bool {
        self.written[wl]
    }

    fn check_wordline(&self, wl: usize) -> Result<(), ChannelError> {
        if wl >= self.wordlines {
            return Err(ChannelError::WordlineOutOfRange(wl, self.wordlines));
        }
        Ok(())
    }
}

/// Fresh block with every cell drawn independently from the erase
/// distribution; draws run wordline-major so a fixed seed fixes the block.
pub fn erase_block<R: Rng + ?Sized>(
    params: &ChannelParams,
    wordlines: usize,
    bitlines: usize,
    rng: &mut R,
) -> Result<FlashBlock, ChannelError> {
    params.validate()?;
    if wordlines == 0 || bitlines == 0 {
        return Err(ChannelError::EmptyBlock);
    }
    let cells = wordlines * bitlines;
    let mut vth = Vec::with_capacity(cells);
    for _ in 0..cells {
        let z: f64 = rng.sample(StandardNormal);
        vth.push(params.init_mean + params.init_std * z);
    }
    Ok(FlashBlock {
        wordlines,
        bitlines,
        vth,
        programmed: vec![false; cells],
        delta_v: vec![0.0; cells],
        written: vec![false; wordlines],
        last_written: None,
    })
}

/// Writes one wordline with all-bitline programming: program the data-1
/// cells, then couple this write's shifts into the same wordline's still
/// erased cells (programmed cells were verified against them) and into both
/// adjacent wordlines, where nothing can compensate.
#[allow(clippy::needless_range_loop)] // bl addresses data, shifts, and both neighbors
pub fn write_wordline(
    block: &mut FlashBlock,
    wl: usize,
    data: &Gf2Vector,
    params: &ChannelParams,
) -> Result<(), ChannelError> {
    params.validate()?;
    block.check_wordline(wl)?;
    if data.len() != block.bitlines {
        return Err(ChannelError::DataLength { expected: block.bitlines, got: data.len() });
    }
    if block.written[wl] {
        return Err(ChannelError::WordlineAlreadyWritten(wl));
    }
    if let Some(last) = block.last_written {
        if wl < last {
            return Err(ChannelError::OutOfOrderWrite { index: wl, last });
        }
    }

    let nb = block.bitlines;
    let mut shifts = vec![0.0f64; nb];
    for bl in 0..nb {
        if data.get(bl) {
            let programmed = ispp_program(params, block.vth[block.idx(wl, bl)]);
            let i = block.idx(wl, bl);
            block.vth[i] = programmed.v_final;
            block.delta_v[i] = programmed.delta_v;
            block.programmed[i] = true;
            shifts[bl] = programmed.delta_v;
        }
    }

    let side = |bl: usize, off: isize| -> f64 {
        bl.checked_add_signed(off).and_then(|j| shifts.get(j).copied()).unwrap_or(0.0)
    };
    for bl in 0..nb {
        if !data.get(bl) {
            let d = NeighborDeltas { left: side(bl, -1), right: side(bl, 1), ..Default::default() };
            let i = block.idx(wl, bl);
            block.vth[i] += ici_shift(params, &d);
        }
    }
    if wl > 0 {
        for bl in 0..nb {
            // The victim sits one wordline below the aggressors.
            let d = NeighborDeltas {
                up: shifts[bl],
                up_left: side(bl, -1),
                up_right: side(bl, 1),
                ..Default::default()
            };
            let i = block.idx(wl - 1, bl);
            block.vth[i] += ici_shift(params, &d);
        }
    }
    if wl + 1 < block.wordlines {
        for bl in 0..nb {
            let d = NeighborDeltas {
                down: shifts[bl],
                down_left: side(bl, -1),
                down_right: side(bl, 1),
                ..Default::default()
            };
            let i = block.idx(wl + 1, bl);
            block.vth[i] += ici_shift(params, &d);
        }
    }

    block.written[wl] = true;
    block.last_written = Some(wl);
    Ok(())
}

/// Noiseless scan of a wordline before writing it: any cell already above
/// the pre-read level can never be brought back below the read level, so it
/// is reported as stuck-at-1.
pub fn pre_read(
    block: &FlashBlock,
    wl: usize,
    params: &ChannelParams,
) -> Result<DefectVector, ChannelError> {
    params.validate()?;
    block.check_wordline(wl)?;
    if block.written[wl] {
        return Err(ChannelError::PreReadAfterWrite(wl));
    }
    let positions: Vec<usize> = (0..block.bitlines)
        .filter(|&bl| block.vth[wl * block.bitlines + bl] > params.eta_pre)
        .collect();
    Ok(DefectVector::from_stuck_ones(block.bitlines, &positions))
}

/// Hard-decision read with fresh Gaussian read noise; one noise draw per
/// cell regardless of `sigma_read` so the rng stream does not depend on it.
pub fn read_wordline<R: Rng + ?Sized>(
    block: &FlashBlock,
    wl: usize,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<Gf2Vector, ChannelError> {
    params.validate()?;
    block.check_wordline(wl)?;
    let mut out = Gf2Vector::zeros(block.bitlines);
    for bl in 0..block.bitlines {
        let z: f64 = rng.sample(StandardNormal);
        let v = block.vth[wl * block.bitlines + bl] + params.sigma_read * z;
        out.set(bl, v > params.eta);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quiet_params() -> ChannelParams {
        ChannelParams { sigma_read: 0.0, ..ChannelParams::default() }
    }

    #[test]
    fn params_validation() {
        assert!(ChannelParams::default().validate().is_ok());
        let cases = [
            ChannelParams { init_std: 0.0, ..Default::default() },
            ChannelParams { init_std: -1.0, ..Default::default() },
            ChannelParams { delta_vpp: 0.0, ..Default::default() },
            ChannelParams { gamma_x: -0.1, ..Default::default() },
            ChannelParams { gamma_y: f64::NAN, ..Default::default() },
            ChannelParams { gamma_xy: -1e-9, ..Default::default() },
            ChannelParams { alpha: -0.5, ..Default::default() },
            ChannelParams { sigma_read: -0.1, ..Default::default() },
            ChannelParams { eta: f64::INFINITY, ..Default::default() },
            ChannelParams { eta_pre: 0.5, ..Default::default() },
        ];
        for (i, p) in cases.iter().enumerate() {
            assert!(p.validate().is_err(), "case {i} should fail");
        }
        // eta_pre below eta is the intended configuration.
        let p = ChannelParams { eta_pre: -1.0, ..Default::default() };
        assert!(p.validate().is_ok());
    }

    #[test]
    fn erase_statistics_match_the_distribution() {
        let params = ChannelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let block = erase_block(&params, 100, 10_000, &mut rng).unwrap();
        let n = (block.wordlines() * block.bitlines()) as f64;
        let mean: f64 = block.vth.iter().sum::<f64>() / n;
        let var: f64 = block.vth.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!((mean + 3.0).abs() < 0.01, "mean {mean}");
        assert!((var.sqrt() - 1.0).abs() < 0.01, "std {}", var.sqrt());
        assert!(block.vth.iter().all(|v| v.is_finite()));
        assert!(!block.is_written(0));
    }

    #[test]
    fn erase_is_deterministic_per_seed() {
        let params = ChannelParams::default();
        let a = erase_block(&params, 3, 64, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = erase_block(&params, 3, 64, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a.vth, b.vth);
        assert!(erase_block(&params, 0, 5, &mut ChaCha8Rng::seed_from_u64(5)).is_err());
    }

    #[test]
    fn ispp_staircase_arithmetic() {
        let p = ChannelParams::default();
        let r = ispp_program(&p, -3.0);
        assert_eq!((r.v_final, r.delta_v), (1.0, 4.0));
        let r = ispp_program(&p, 0.5);
        assert_eq!((r.v_final, r.delta_v), (1.5, 1.0));
        let r = ispp_program(&p, 1.2);
        assert_eq!((r.v_final, r.delta_v), (1.2, 0.0));
        let r = ispp_program(&p, 1.0);
        assert_eq!((r.v_final, r.delta_v), (1.0, 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..2000 {
            let v: f64 = -6.0 + 8.0 * rng.random::<f64>();
            let r = ispp_program(&p, v);
            assert!(r.v_final >= p.v_verify_s1);
            assert!(r.delta_v >= 0.0);
            if v < p.v_verify_s1 {
                assert!(r.v_final < p.v_verify_s1 + p.delta_vpp);
                // Whole number of steps.
                let steps = r.delta_v / p.delta_vpp;
                assert!((steps - steps.round()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ici_shift_worked_examples() {
        let p = ChannelParams { alpha: 1.0, ..Default::default() };
        let d = NeighborDeltas { left: 1.0, right: 1.0, ..Default::default() };
        assert!((ici_shift(&p, &d) - 0.16).abs() < 1e-12);

        let p = ChannelParams { alpha: 0.6, ..Default::default() };
        let d = NeighborDeltas { up: 1.0, down: 1.0, up_left: 1.0, ..Default::default() };
        assert!((ici_shift(&p, &d) - 0.1236).abs() < 1e-12);

        assert_eq!(ici_shift(&p, &NeighborDeltas::default()), 0.0);
    }

    #[test]
    fn ici_shift_matches_brute_force_sum() {
        // Independent formulation: weight table applied term by term.
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..10_000 {
            let p = ChannelParams {
                alpha: rng.random::<f64>() * 2.0,
                gamma_x: rng.random::<f64>() * 0.2,
                gamma_y: rng.random::<f64>() * 0.2,
                gamma_xy: rng.random::<f64>() * 0.02,
                ..Default::default()
            };
            let vals: [f64; 8] = std::array::from_fn(|_| rng.random::<f64>() * 5.0);
            let d = NeighborDeltas {
                left: vals[0],
                right: vals[1],
                up: vals[2],
                down: vals[3],
                up_left: vals[4],
                up_right: vals[5],
                down_left: vals[6],
                down_right: vals[7],
            };
            let weights =
                [p.gamma_x, p.gamma_x, p.gamma_y, p.gamma_y, p.gamma_xy, p.gamma_xy, p.gamma_xy, p.gamma_xy];
            let mut expect = 0.0;
            for (v, w) in vals.iter().zip(weights) {
                expect += p.alpha * w * v;
            }
            let got = ici_shift(&p, &d);
            assert!((got - expect).abs() <= 1e-12 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn write_guards() {
        let params = quiet_params();
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let mut block = erase_block(&params, 3, 8, &mut rng).unwrap();
        let zeros = Gf2Vector::zeros(8);
        assert!(matches!(
            write_wordline(&mut block, 0, &Gf2Vector::zeros(7), &params),
            Err(ChannelError::DataLength { .. })
        ));
        assert!(matches!(
            write_wordline(&mut block, 3, &zeros, &params),
            Err(ChannelError::WordlineOutOfRange(3, 3))
        ));
        write_wordline(&mut block, 1, &zeros, &params).unwrap();
        assert!(matches!(
            write_wordline(&mut block, 1, &zeros, &params),
            Err(ChannelError::WordlineAlreadyWritten(1))
        ));
        assert!(matches!(
            write_wordline(&mut block, 0, &zeros, &params),
            Err(ChannelError::OutOfOrderWrite { index: 0, last: 1 })
        ));
        write_wordline(&mut block, 2, &zeros, &params).unwrap();
    }

    #[test]
    fn all_zero_write_changes_no_voltage() {
        let params = quiet_params();
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let mut block = erase_block(&params, 3, 32, &mut rng).unwrap();
        let before = block.vth.clone();
        write_wordline(&mut block, 1, &Gf2Vector::zeros(32), &params).unwrap();
        assert_eq!(block.vth, before);
        assert!(block.is_written(1));
    }

    #[test]
    fn single_programmed_cell_couples_to_each_neighbor_class() {
        let params = quiet_params();
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let mut block = erase_block(&params, 3, 5, &mut rng).unwrap();
        let before = block.clone();
        let mut data = Gf2Vector::zeros(5);
        data.set(2, true);
        write_wordline(&mut block, 1, &data, &params).unwrap();
        let dv = block.delta_v(1, 2);
        assert!(dv > 0.0);
        assert_eq!(block.vth(1, 2), ispp_program(&params, before.vth(1, 2)).v_final);

        let a = params.alpha;
        let tol = 1e-12;
        // Same wordline, bitline neighbors.
        assert!((block.vth(1, 1) - before.vth(1, 1) - a * params.gamma_x * dv).abs() < tol);
        assert!((block.vth(1, 3) - before.vth(1, 3) - a * params.gamma_x * dv).abs() < tol);
        assert!((block.vth(1, 0) - before.vth(1, 0)).abs() < tol);
        // Adjacent wordlines, same bitline.
        assert!((block.vth(0, 2) - before.vth(0, 2) - a * params.gamma_y * dv).abs() < tol);
        assert!((block.vth(2, 2) - before.vth(2, 2) - a * params.gamma_y * dv).abs() < tol);
        // Diagonals.
        for (wl, bl) in [(0, 1), (0, 3), (2, 1), (2, 3)] {
            assert!((block.vth(wl, bl) - before.vth(wl, bl) - a * params.gamma_xy * dv).abs() < tol);
        }
        // Beyond the 8-neighborhood.
        assert!((block.vth(0, 0) - before.vth(0, 0)).abs() < tol);
        assert!((block.vth(2, 4) - before.vth(2, 4)).abs() < tol);
    }

    #[test]
    fn erased_cell_between_two_programmed_neighbors() {
        let params = quiet_params();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mut block = erase_block(&params, 1, 3, &mut rng).unwrap();
        let v_mid_before = block.vth(0, 1);
        let data = Gf2Vector::from_bits(&[1, 0, 1]);
        write_wordline(&mut block, 0, &data, &params).unwrap();
        let expect = params.alpha * params.gamma_x * (block.delta_v(0, 0) + block.delta_v(0, 2));
        assert!((block.vth(0, 1) - v_mid_before - expect).abs() < 1e-12);
        // Both program shifts are around 4 V for a typical erased cell, so
        // the victim shift lands near 0.6 * 0.08 * 8.
        assert!(expect > 0.3 && expect < 0.5, "shift {expect}");
    }

    #[test]
    fn programmed_cells_absorb_their_own_wordline_ici() {
        let params = quiet_params();
        let mut rng = ChaCha8Rng::seed_from_u64(38);
        let mut block = erase_block(&params, 1, 4, &mut rng).unwrap();
        let before = block.clone();
        write_wordline(&mut block, 0, &Gf2Vector::from_bits(&[1, 1, 1, 1]), &params).unwrap();
        for bl in 0..4 {
            // Exactly the verify staircase result, no x-ICI on top.
            assert_eq!(block.vth(0, bl), ispp_program(&params, before.vth(0, bl)).v_final);
        }
    }

    #[test]
    fn pre_read_defect_fraction_matches_gaussian_tail() {
        let params = ChannelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(39);
        let block = erase_block(&params, 1, 1_000_000, &mut rng).unwrap();
        let defects = pre_read(&block, 0, &params).unwrap();
        let frac = defects.defect_count() as f64 / 1e6;
        // 1 - Phi(3) = 0.0013499 for the default erase distribution.
        assert!((frac - 0.0013499).abs() < 2e-4, "fraction {frac}");
    }

    #[test]
    fn pre_read_grows_as_the_level_drops_and_rejects_written_lines() {
        let params = ChannelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let mut block = erase_block(&params, 2, 4096, &mut rng).unwrap();
        let at0 = pre_read(&block, 0, &params).unwrap();
        let lower = ChannelParams { eta_pre: -1.0, ..params };
        let at_m1 = pre_read(&block, 0, &lower).unwrap();
        let set0: Vec<usize> = at0.defect_positions().collect();
        let set1: Vec<usize> = at_m1.defect_positions().collect();
        assert!(set1.len() > set0.len());
        assert!(set0.iter().all(|u| set1.contains(u)));

        write_wordline(&mut block, 0, &Gf2Vector::zeros(4096), &params).unwrap();
        assert!(matches!(pre_read(&block, 0, &params), Err(ChannelError::PreReadAfterWrite(0))));
        assert!(pre_read(&block, 1, &params).is_ok());
    }

    #[test]
    fn pre_read_at_read_level_equals_noiseless_read() {
        let params = quiet_params();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let block = erase_block(&params, 1, 100_000, &mut rng).unwrap();
        let defects = pre_read(&block, 0, &params).unwrap();
        let read = read_wordline(&block, 0, &params, &mut rng).unwrap();
        for bl in 0..block.bitlines() {
            assert_eq!(defects.stuck_bit(bl) == Some(true), read.get(bl));
        }
    }

    #[test]
    fn noiseless_read_decides_by_threshold() {
        let params = quiet_params();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut block = erase_block(&params, 1, 2, &mut rng).unwrap();
        block.vth[0] = 0.5;
        block.vth[1] = -3.0;
        let read = read_wordline(&block, 0, &params, &mut rng).unwrap();
        assert!(read.get(0));
        assert!(!read.get(1));
    }

    #[test]
    fn read_at_the_level_is_a_coin_flip() {
        let params = ChannelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let mut block = erase_block(&params, 1, 100_000, &mut rng).unwrap();
        for v in block.vth.iter_mut() {
            *v = params.eta;
        }
        let read = read_wordline(&block, 0, &params, &mut rng).unwrap();
        let ones = read.weight() as f64 / 1e5;
        assert!((ones - 0.5).abs() < 0.01, "fraction {ones}");
    }

    #[test]
    fn voltages_never_decrease_across_the_write_sequence() {
        let params = ChannelParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let mut block = erase_block(&params, 3, 256, &mut rng).unwrap();
        let mut prev = block.vth.clone();
        for wl in 0..3 {
            let data = Gf2Vector::random(256, &mut rng);
            write_wordline(&mut block, wl, &data, &params).unwrap();
            for (a, b) in block.vth.iter().zip(&prev) {
                assert!(a >= b);
            }
            prev = block.vth.clone();
        }
        // Programmed cells always read 1 without noise.
        let quiet = quiet_params();
        for wl in 0..3 {
            let read = read_wordline(&block, wl, &quiet, &mut rng).unwrap();
            for bl in 0..256 {
                if block.is_programmed(wl, bl) {
                    assert!(read.get(bl));
                }
            }
        }
    }

    #[test]
    fn alpha_zero_reads_back_exactly_outside_the_tail() {
        let params = ChannelParams { alpha: 0.0, sigma_read: 0.0, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let mut block = erase_block(&params, 3, 512, &mut rng).unwrap();
        // Cells already above the read level before any write are the only
        // possible mismatches; everything else must read back exactly.
        let tail: Vec<Vec<usize>> = (0..3)
            .map(|wl| {
                (0..512).filter(|&bl| block.vth(wl, bl) > params.eta).collect()
            })
            .collect();
        let mut written = Vec::new();
        for wl in 0..3 {
            let data = Gf2Vector::random(512, &mut rng);
            write_wordline(&mut block, wl, &data, &params).unwrap();
            written.push(data);
        }
        for wl in 0..3 {
            let read = read_wordline(&block, wl, &params, &mut rng).unwrap();
            for bl in 0..512 {
                if read.get(bl) != written[wl].get(bl) {
                    assert!(!written[wl].get(bl), "only 0-writes can misread");
                    assert!(tail[wl].contains(&bl), "mismatch outside the erase tail");
                }
            }
        }
    }
}
