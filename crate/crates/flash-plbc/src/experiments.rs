//! Monte Carlo harness for the coded wordline experiments: failure-rate
//! sweeps over redundancy allocation, ICI strength, pre-read level, and
//! threshold-voltage histograms.
//!
//! Reproducibility contract: every trial draws from a ChaCha stream keyed by
//! (master seed, grid point index, trial index), so results are independent
//! of thread count and execution order. Early stopping only happens at batch
//! boundaries, which keeps stopped runs deterministic too.

use crate::bch::FieldContext;
use crate::channel::{erase_block, pre_read, read_wordline, write_wordline, ChannelError, ChannelParams, FlashBlock};
use crate::gf2::Gf2Vector;
use crate::pbch::{PbchCode, PbchError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Code(#[from] PbchError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("allocation (l={l}, r={r}) leaves no message bits at n={n}")]
    BadAllocation { l: usize, r: usize, n: usize },
    #[error("grid of {0} points exceeds the 2^32 stream indexing limit")]
    TooManyPoints(usize),
    #[error("{0} trials per point exceeds the 2^32 stream indexing limit")]
    TooManyTrials(u64),
}

/// Outcome of one end-to-end write/read trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub l: usize,
    pub r: usize,
    pub alpha: f64,
    pub sigma_read: f64,
    pub eta_pre: f64,
    /// Stuck-at-1 cells reported by the pre-read.
    pub defect_count: usize,
    /// Defects the encoder could not mask.
    pub unmasked_count: usize,
    /// Decoder declared failure or delivered the wrong message.
    pub failure: bool,
}

/// [`TrialRecord`] plus the intermediate quantities useful for debugging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialDetail {
    pub record: TrialRecord,
    /// Bit mismatches between the read word and the written codeword.
    pub read_errors: usize,
    pub decoder_failed: bool,
    pub message_mismatch: bool,
}

struct TrialExecution {
    detail: TrialDetail,
    block: FlashBlock,
    codeword: Gf2Vector,
}

/// The rng stream for one trial: seed picks the experiment, the stream id
/// packs (grid point, trial index).
pub fn trial_rng(master_seed: u64, point_index: u32, trial_index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((point_index as u64) << 32) | trial_index as u64);
    rng
}

fn execute_trial<R: Rng + ?Sized>(
    code: &PbchCode,
    params: &ChannelParams,
    rng: &mut R,
) -> TrialExecution {
    let n = code.n();
    let mut block = erase_block(params, 3, n, rng).expect("valid channel parameters");

    let below = Gf2Vector::random(n, rng);
    write_wordline(&mut block, 0, &below, params).expect("fresh wordline 0");

    let defects = pre_read(&block, 1, params).expect("wordline 1 unwritten");
    let message = Gf2Vector::random(code.k(), rng);
    let encoded = code.encode(&message, &defects).expect("dimensions fixed by code");
    write_wordline(&mut block, 1, &encoded.codeword, params).expect("fresh wordline 1");

    let above = Gf2Vector::random(n, rng);
    write_wordline(&mut block, 2, &above, params).expect("fresh wordline 2");

    let received = read_wordline(&block, 1, params, rng).expect("read wordline 1");
    let mut diff = received.clone();
    diff ^= &encoded.codeword;
    let read_errors = diff.weight();

    let decoded = code.decode(&received).expect("length fixed by code");
    let decoder_failed = decoded.is_none();
    let message_mismatch = decoded.is_some_and(|m| m != message);

    TrialExecution {
        detail: TrialDetail {
            record: TrialRecord {
                l: code.l(),
                r: code.r(),
                alpha: params.alpha,
                sigma_read: params.sigma_read,
                eta_pre: params.eta_pre,
                defect_count: defects.defect_count(),
                unmasked_count: encoded.unmasked_count,
                failure: decoder_failed || message_mismatch,
            },
            read_errors,
            decoder_failed,
            message_mismatch,
        },
        block,
        codeword: encoded.codeword,
    }
}

/// One trial of the full timeline: erase a 3-wordline block, write random
/// data below, pre-read the middle wordline, encode against the reported
/// defects, write the codeword, write random data above, then read back and
/// decode. Panics on invalid `params`; validate them first.
pub fn run_trial<R: Rng + ?Sized>(
    code: &PbchCode,
    params: &ChannelParams,
    rng: &mut R,
) -> TrialRecord {
    execute_trial(code, params, rng).detail.record
}

/// [`run_trial`] with the debugging intermediates kept.
pub fn run_trial_detailed<R: Rng + ?Sized>(
    code: &PbchCode,
    params: &ChannelParams,
    rng: &mut R,
) -> TrialDetail {
    execute_trial(code, params, rng).detail
}

/// Monte Carlo budget for one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarloOpts {
    pub trials: u64,
    /// Stop a point once this many failures have accumulated (checked at
    /// batch boundaries). None disables early stopping.
    pub stop_after_failures: Option<u64>,
    /// Trials per parallel batch; also the early-stop granularity.
    pub batch: u64,
}

impl Default for MonteCarloOpts {
    fn default() -> Self {
        Self { trials: 100_000, stop_after_failures: Some(100), batch: 1024 }
    }
}

/// Runs up to `opts.trials` trials of one grid point, in parallel batches.
/// Returns (trials run, failures seen).
pub fn run_point(
    code: &PbchCode,
    params: &ChannelParams,
    master_seed: u64,
    point_index: u32,
    opts: &MonteCarloOpts,
) -> Result<(u64, u64), ExperimentError> {
    params.validate()?;
    if opts.trials > u32::MAX as u64 {
        return Err(ExperimentError::TooManyTrials(opts.trials));
    }
    let batch_size = opts.batch.max(1);
    let mut done = 0u64;
    let mut failures = 0u64;
    while done < opts.trials {
        let batch = batch_size.min(opts.trials - done);
        failures += (done..done + batch)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(master_seed, point_index, t as u32);
                u64::from(run_trial(code, params, &mut rng).failure)
            })
            .sum::<u64>();
        done += batch;
        if opts.stop_after_failures.is_some_and(|stop| failures >= stop) {
            break;
        }
    }
    Ok((done, failures))
}

/// Failure estimate at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub alpha: f64,
    pub sigma_read: f64,
    pub eta_pre: f64,
    pub l: usize,
    pub r: usize,
    pub trials: u64,
    pub failures: u64,
}

impl SweepPoint {
    pub fn p_fail(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.failures as f64 / self.trials as f64
        }
    }

    /// Binomial standard error of the estimate.
    pub fn stderr(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            let p = self.p_fail();
            (p * (1.0 - p) / self.trials as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// CSV with a fixed header and one row per grid point, in grid order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,sigma_read,eta_pre,l,r,trials,failures,p_fail,stderr\n");
        for p in &self.points {
            writeln!(
                out,
                "{:.6},{:.6},{:.6},{},{},{},{},{:.6},{:.6}",
                p.alpha,
                p.sigma_read,
                p.eta_pre,
                p.l,
                p.r,
                p.trials,
                p.failures,
                p.p_fail(),
                p.stderr()
            )
            .expect("string write");
        }
        out
    }
}

/// The redundancy allocations of the length-1023 study: l masking bits plus
/// r correction bits, always summing to 100.
pub fn table_allocations() -> Vec<(usize, usize)> {
    (0..=10).map(|i| (10 * i, 100 - 10 * i)).collect()
}

/// Default ICI scaling grid, bracketing the nominal 0.6 operating point.
pub fn default_alpha_grid() -> Vec<f64> {
    vec![0.4, 0.5, 0.6, 0.7, 0.8]
}

/// Default pre-read levels: the read level itself plus two lower settings.
pub fn default_eta_pre_grid() -> Vec<f64> {
    vec![0.0, -1.0, -2.0]
}

fn build_codes(
    ctx: &FieldContext,
    allocations: &[(usize, usize)],
) -> Result<Vec<PbchCode>, ExperimentError> {
    let n = ctx.n();
    allocations
        .iter()
        .map(|&(l, r)| {
            if l + r >= n {
                return Err(ExperimentError::BadAllocation { l, r, n });
            }
            Ok(PbchCode::construct(n, n - l - r, l, ctx.clone())?)
        })
        .collect()
}

fn check_grid(points: usize) -> Result<(), ExperimentError> {
    if points > u32::MAX as usize {
        return Err(ExperimentError::TooManyPoints(points));
    }
    Ok(())
}

/// Failure-rate grid over ICI scaling x allocation, rows in that order.
/// `base.alpha` is overridden per point.
pub fn sweep_allocation(
    ctx: &FieldContext,
    base: &ChannelParams,
    allocations: &[(usize, usize)],
    alphas: &[f64],
    master_seed: u64,
    opts: &MonteCarloOpts,
) -> Result<SweepResult, ExperimentError> {
    check_grid(alphas.len() * allocations.len())?;
    if opts.trials == 0 {
        return Ok(SweepResult::default());
    }
    let codes = build_codes(ctx, allocations)?;
    let mut points = Vec::new();
    let mut point_index = 0u32;
    for &alpha in alphas {
        for (code, &(l, r)) in codes.iter().zip(allocations) {
            let params = ChannelParams { alpha, ..*base };
            let (trials, failures) = run_point(code, &params, master_seed, point_index, opts)?;
            points.push(SweepPoint {
                alpha,
                sigma_read: params.sigma_read,
                eta_pre: params.eta_pre,
                l,
                r,
                trials,
                failures,
            });
            point_index += 1;
        }
    }
    Ok(SweepResult { points })
}

/// Failure-rate grid over pre-read level x allocation at fixed `base.alpha`,
/// rows in that order. `base.eta_pre` is overridden per point.
pub fn sweep_preread(
    ctx: &FieldContext,
    base: &ChannelParams,
    eta_pre_levels: &[f64],
    allocations: &[(usize, usize)],
    master_seed: u64,
    opts: &MonteCarloOpts,
) -> Result<SweepResult, ExperimentError> {
    check_grid(eta_pre_levels.len() * allocations.len())?;
    if opts.trials == 0 {
        return Ok(SweepResult::default());
    }
    let codes = build_codes(ctx, allocations)?;
    let mut points = Vec::new();
    let mut point_index = 0u32;
    for &eta_pre in eta_pre_levels {
        for (code, &(l, r)) in codes.iter().zip(allocations) {
            let params = ChannelParams { eta_pre, ..*base };
            let (trials, failures) = run_point(code, &params, master_seed, point_index, opts)?;
            points.push(SweepPoint {
                alpha: params.alpha,
                sigma_read: params.sigma_read,
                eta_pre,
                l,
                r,
                trials,
                failures,
            });
            point_index += 1;
        }
    }
    Ok(SweepResult { points })
}

/// Final threshold-voltage distribution of the coded wordline, split by the
/// bit that was written to each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramResult {
    /// bins + 1 edges; out-of-range voltages land in the edge bins.
    pub edges: Vec<f64>,
    pub count_bit0: Vec<u64>,
    pub count_bit1: Vec<u64>,
    /// Bit-0 cells whose final voltage sits in the dead zone (eta, verify
    /// level): these read as 1 even without read noise.
    pub dead_zone_bit0: u64,
}

impl HistogramResult {
    pub fn bit0_total(&self) -> u64 {
        self.count_bit0.iter().sum()
    }

    pub fn bit1_total(&self) -> u64 {
        self.count_bit1.iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.bit0_total() + self.bit1_total()
    }

    /// Fraction of bit-0 cells in the dead zone.
    pub fn dead_zone_fraction(&self) -> f64 {
        let total = self.bit0_total();
        if total == 0 {
            0.0
        } else {
            self.dead_zone_bit0 as f64 / total as f64
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count_bit0,count_bit1\n");
        for i in 0..self.count_bit0.len() {
            writeln!(
                out,
                "{:.6},{:.6},{},{}",
                self.edges[i],
                self.edges[i + 1],
                self.count_bit0[i],
                self.count_bit1[i]
            )
            .expect("string write");
        }
        out
    }
}

/// Accumulates the coded wordline's post-write voltages over `trials`, using
/// the same per-trial streams as the sweeps (point index 0). The bin range
/// spans the erase distribution's 4-sigma tail up to the program level plus
/// worst-case interference headroom.
pub fn emit_histogram(
    ctx: &FieldContext,
    params: &ChannelParams,
    allocation: (usize, usize),
    trials: u64,
    bins: usize,
    master_seed: u64,
) -> Result<HistogramResult, ExperimentError> {
    params.validate()?;
    let (l, r) = allocation;
    let n = ctx.n();
    if l + r >= n {
        return Err(ExperimentError::BadAllocation { l, r, n });
    }
    if trials > u32::MAX as u64 {
        return Err(ExperimentError::TooManyTrials(trials));
    }
    assert!(bins >= 1, "need at least one bin");
    let code = PbchCode::construct(n, n - l - r, l, ctx.clone())?;

    let lo = params.init_mean - 4.0 * params.init_std;
    let hi = params.v_verify_s1 + params.delta_vpp + 2.0;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect();
    let width = (hi - lo) / bins as f64;

    let mut count_bit0 = vec![0u64; bins];
    let mut count_bit1 = vec![0u64; bins];
    let mut dead_zone_bit0 = 0u64;
    for t in 0..trials {
        let mut rng = trial_rng(master_seed, 0, t as u32);
        let exec = execute_trial(&code, params, &mut rng);
        for bl in 0..n {
            let v = exec.block.vth(1, bl);
            let bin = (((v - lo) / width).floor() as i64).clamp(0, bins as i64 - 1) as usize;
            if exec.codeword.get(bl) {
                count_bit1[bin] += 1;
            } else {
                count_bit0[bin] += 1;
                if v > params.eta && v < params.v_verify_s1 {
                    dead_zone_bit0 += 1;
                }
            }
        }
    }
    Ok(HistogramResult { edges, count_bit0, count_bit1, dead_zone_bit0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_ctx() -> FieldContext {
        FieldContext::new(4).unwrap()
    }

    fn toy_code() -> PbchCode {
        PbchCode::construct(15, 6, 5, toy_ctx()).unwrap()
    }

    #[test]
    fn ici_free_noiseless_trials_never_fail() {
        let ctx = FieldContext::new(10).unwrap();
        let code = PbchCode::construct(1023, 923, 20, ctx).unwrap();
        let params = ChannelParams { alpha: 0.0, sigma_read: 0.0, ..Default::default() };
        let mut defect_sum = 0usize;
        let trials = 300;
        for t in 0..trials {
            let mut rng = trial_rng(7, 0, t);
            let rec = run_trial(&code, &params, &mut rng);
            assert!(!rec.failure, "trial {t}");
            assert_eq!(rec.unmasked_count, 0, "trial {t}");
            defect_sum += rec.defect_count;
        }
        // Expected defects per wordline: 1023 * (1 - Phi(3)) = 1.381.
        let mean = defect_sum as f64 / trials as f64;
        assert!((mean - 1.381).abs() < 0.35, "mean defect count {mean}");
    }

    #[test]
    fn trials_are_reproducible_from_their_stream() {
        let code = toy_code();
        let params = ChannelParams::default();
        for t in [0u32, 5, 99] {
            let a = run_trial_detailed(&code, &params, &mut trial_rng(3, 2, t));
            let b = run_trial_detailed(&code, &params, &mut trial_rng(3, 2, t));
            assert_eq!(a, b);
        }
        let opts = MonteCarloOpts { trials: 200, stop_after_failures: None, batch: 64 };
        let a = run_point(&code, &params, 3, 2, &opts).unwrap();
        let b = run_point(&code, &params, 3, 2, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.0, 200);
    }

    #[test]
    fn defect_count_is_monotone_in_alpha_per_stream() {
        let code = toy_code();
        let lo = ChannelParams { alpha: 0.2, ..Default::default() };
        let hi = ChannelParams { alpha: 0.9, ..Default::default() };
        for t in 0..200 {
            let a = run_trial(&code, &lo, &mut trial_rng(11, 0, t));
            let b = run_trial(&code, &hi, &mut trial_rng(11, 0, t));
            // Same erase noise and neighbor data; stronger coupling can only
            // push more cells over the pre-read level.
            assert!(b.defect_count >= a.defect_count, "trial {t}");
        }
    }

    #[test]
    fn consistent_detail_accounting() {
        let code = toy_code();
        let params = ChannelParams { sigma_read: 0.3, ..Default::default() };
        for t in 0..500 {
            let d = run_trial_detailed(&code, &params, &mut trial_rng(13, 0, t));
            assert_eq!(d.record.failure, d.decoder_failed || d.message_mismatch);
            if d.record.unmasked_count == 0 && d.read_errors == 0 {
                assert!(!d.record.failure, "clean trial {t} cannot fail");
            }
            assert!(d.record.defect_count >= d.record.unmasked_count);
        }
    }

    #[test]
    fn early_stop_halts_on_batch_boundary() {
        let code = toy_code();
        // Huge read noise: essentially every trial fails.
        let params = ChannelParams { sigma_read: 50.0, ..Default::default() };
        let opts = MonteCarloOpts { trials: 10_000, stop_after_failures: Some(5), batch: 100 };
        let (trials, failures) = run_point(&code, &params, 17, 0, &opts).unwrap();
        assert_eq!(trials, 100);
        assert!(failures >= 5);
    }

    #[test]
    fn sweep_grid_order_and_csv_schema() {
        let ctx = toy_ctx();
        let params = ChannelParams::default();
        let opts = MonteCarloOpts { trials: 50, stop_after_failures: None, batch: 32 };
        let allocations = [(5usize, 4usize), (0, 4)];
        let alphas = [0.2, 0.6];
        let result = sweep_allocation(&ctx, &params, &allocations, &alphas, 23, &opts).unwrap();
        assert_eq!(result.points.len(), 4);
        let keys: Vec<(f64, usize)> = result.points.iter().map(|p| (p.alpha, p.l)).collect();
        assert_eq!(keys, vec![(0.2, 5), (0.2, 0), (0.6, 5), (0.6, 0)]);
        for p in &result.points {
            assert_eq!(p.trials, 50);
            assert!(p.p_fail() >= 0.0 && p.p_fail() <= 1.0);
            assert!(p.stderr() >= 0.0);
        }
        let csv = result.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "alpha,sigma_read,eta_pre,l,r,trials,failures,p_fail,stderr"
        );
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().nth(1).unwrap().starts_with("0.200000,0.100000,0.000000,5,4,50,"));

        // Zero budget short-circuits to an empty result.
        let empty = sweep_allocation(
            &ctx,
            &params,
            &allocations,
            &alphas,
            23,
            &MonteCarloOpts { trials: 0, stop_after_failures: None, batch: 32 },
        )
        .unwrap();
        assert!(empty.points.is_empty());
    }

    #[test]
    fn preread_sweep_orders_rows_by_level_then_allocation() {
        let ctx = toy_ctx();
        let params = ChannelParams::default();
        let opts = MonteCarloOpts { trials: 20, stop_after_failures: None, batch: 20 };
        let result =
            sweep_preread(&ctx, &params, &[0.0, -1.0], &[(5, 4)], 29, &opts).unwrap();
        let keys: Vec<(f64, usize)> = result.points.iter().map(|p| (p.eta_pre, p.l)).collect();
        assert_eq!(keys, vec![(0.0, 5), (-1.0, 5)]);
        // The override must actually reach the channel.
        assert!(result.points.iter().all(|p| p.alpha == params.alpha));
    }

    #[test]
    fn sweeps_reject_bad_allocations() {
        let ctx = toy_ctx();
        let params = ChannelParams::default();
        let opts = MonteCarloOpts { trials: 10, stop_after_failures: None, batch: 10 };
        assert!(matches!(
            sweep_allocation(&ctx, &params, &[(10, 5)], &[0.6], 1, &opts),
            Err(ExperimentError::BadAllocation { .. })
        ));
        // r = 2 is not realizable at n = 15.
        assert!(matches!(
            sweep_allocation(&ctx, &params, &[(5, 2)], &[0.6], 1, &opts),
            Err(ExperimentError::Code(_))
        ));
    }

    #[test]
    fn table_allocations_span_the_split() {
        let table = table_allocations();
        assert_eq!(table.len(), 11);
        assert_eq!(table[0], (0, 100));
        assert_eq!(table[10], (100, 0));
        assert!(table.iter().all(|&(l, r)| l + r == 100));
        assert_eq!(default_alpha_grid().len(), 5);
        assert_eq!(default_eta_pre_grid(), vec![0.0, -1.0, -2.0]);
    }

    #[test]
    fn histogram_conserves_cells_and_respects_program_bounds() {
        let ctx = FieldContext::new(10).unwrap();
        let params = ChannelParams { alpha: 0.0, sigma_read: 0.0, ..Default::default() };
        let trials = 20u64;
        let hist = emit_histogram(&ctx, &params, (100, 0), trials, 60, 31).unwrap();
        assert_eq!(hist.total(), trials * 1023);
        assert_eq!(hist.edges.len(), 61);

        // Without ICI, programmed cells stay inside [verify, verify + step).
        for (i, &c) in hist.count_bit1.iter().enumerate() {
            if c > 0 {
                assert!(hist.edges[i + 1] > params.v_verify_s1);
                assert!(hist.edges[i] < params.v_verify_s1 + params.delta_vpp);
            }
        }
        // Erased cells center on the erase mean.
        let mut acc = 0.0;
        for (i, &c) in hist.count_bit0.iter().enumerate() {
            acc += (hist.edges[i] + hist.edges[i + 1]) / 2.0 * c as f64;
        }
        let mean = acc / hist.bit0_total() as f64;
        assert!((mean - params.init_mean).abs() < 0.1, "bit-0 mean {mean}");
        assert!(hist.dead_zone_bit0 <= hist.bit0_total());

        let again = emit_histogram(&ctx, &params, (100, 0), trials, 60, 31).unwrap();
        assert_eq!(hist, again);
    }

    #[test]
    fn histogram_rejects_bad_allocation() {
        let ctx = toy_ctx();
        let params = ChannelParams::default();
        assert!(matches!(
            emit_histogram(&ctx, &params, (15, 0), 5, 10, 1),
            Err(ExperimentError::BadAllocation { .. })
        ));
    }
}
