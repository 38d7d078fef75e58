//! Constructive channel reductions.
//!
//! A reduction turns an arbitrary channel `Q` into an s-ary uniform-noise
//! channel `U_s(rho)` by a pre-channel recoder `R` and a post-channel
//! recoder `S` with `R Q S = U_s(rho)`. Channels with positive zero-error
//! capacity reduce to the identity exactly. Whole lines are reduced link by
//! link so the end-to-end batch channel becomes a power of a single
//! uniform-noise matrix, whose capacity has a closed form.
//!
//! Canonicalization is the converse-side construction: chaining enough
//! links of a channel with positive pairwise overlap always yields a
//! channel with an output reachable from every input.

use crate::channel::{self, Dmc};
use crate::matrix::{self, Mat};
use crate::sim::MatrixPlan;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

const CAPACITY_FLOOR: f64 = 1e-6;
const RANK_TOL: f64 = 1e-9;

/// A pair of row indices of a channel matrix together with the diagonal
/// `rho1` of the `U_2` channel their Eq.-style two-column merge produces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowPair {
    pub first: usize,
    pub second: usize,
    pub rho1: f64,
}

/// `sum_k a_k^2 / (a_k + b_k)` over columns with positive mass: the diagonal
/// of the 2x2 channel obtained by merging outputs toward rows `a` and `b`.
/// Symmetric in the two rows when both are stochastic.
pub fn row_pair_rho1(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .filter(|(&x, &y)| x + y > 0.0)
        .map(|(&x, &y)| x * x / (x + y))
        .sum()
}

/// Scans all row pairs of the channel and returns the pair maximizing
/// `rho1`. `None` for channels with fewer than two inputs.
pub fn best_row_pair(q: &Dmc) -> Option<RowPair> {
    let rows = q.transition_rows();
    let mut best: Option<RowPair> = None;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let rho1 = row_pair_rho1(&rows[i], &rows[j]);
            if best.is_none_or(|b| rho1 > b.rho1) {
                best = Some(RowPair { first: i, second: j, rho1 });
            }
        }
    }
    best
}

/// The n x 2 merge matrix for two rows: output `k` votes for the first row
/// with weight `a_k / (a_k + b_k)`. Outputs unreachable from both rows get
/// a fixed vote for the first column.
fn two_row_merge(a: &[f64], b: &[f64]) -> Mat {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            if x + y > 0.0 {
                vec![x / (x + y), y / (x + y)]
            } else {
                vec![1.0, 0.0]
            }
        })
        .collect()
}

fn row_selector(indices: &[usize], width: usize) -> Mat {
    indices
        .iter()
        .map(|&i| {
            let mut row = vec![0.0; width];
            row[i] = 1.0;
            row
        })
        .collect()
}

/// A uniform reduction `R Q S = U_s(rho)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    /// Pre-channel recoder, `s x m` row-stochastic.
    pub pre: Mat,
    /// Post-channel recoder, `n x s` row-stochastic.
    pub post: Mat,
    /// Target order s.
    pub order: usize,
    /// Target diagonal.
    pub rho: f64,
    /// Largest diagonal this construction could have reached for the same
    /// channel (`rho1` of the best row pair, or the `rho_s` bound).
    pub rho_best: f64,
    /// Channel rows selected by the pre-recoder, in selection order.
    pub selected_rows: Vec<usize>,
}

impl Reduction {
    /// `max |R Q S - U_s(rho)|` entrywise.
    pub fn residual(&self, q: &Dmc) -> f64 {
        let got = matrix::matmul(&matrix::matmul(&self.pre, q.transition_rows()), &self.post);
        matrix::inf_norm_diff(&got, &matrix::uniform_noise(self.order, self.rho))
    }
}

/// Uniform reduction to `U_2(rho)` for `1/2 < rho <= rho1` of the best row
/// pair. The merge of the best pair gives `U_2(rho1)`; composing with
/// `U_2((rho1 + rho - 1)/(2 rho1 - 1))` lowers the diagonal to `rho`.
pub fn reduce_to_u2(q: &Dmc, rho: f64) -> Result<Reduction> {
    let cap = channel::capacity(q, 1e-8)?;
    if cap <= CAPACITY_FLOOR {
        return Err(Error::Domain(format!(
            "degenerate channel: capacity {cap:.2e} is numerically zero"
        )));
    }
    let pair = best_row_pair(q)
        .ok_or_else(|| Error::InvalidParameter("channel needs at least two inputs".into()))?;
    if rho <= 0.5 || rho > pair.rho1 + 1e-12 {
        return Err(Error::NotReducible { rho, rho_best: pair.rho1 });
    }
    let rows = q.transition_rows();
    let merge = two_row_merge(&rows[pair.first], &rows[pair.second]);
    let correction = ((pair.rho1 + rho - 1.0) / (2.0 * pair.rho1 - 1.0)).min(1.0);
    let post = matrix::matmul(&merge, &matrix::uniform_noise(2, correction));
    Ok(Reduction {
        pre: row_selector(&[pair.first, pair.second], q.num_inputs()),
        post,
        order: 2,
        rho,
        rho_best: pair.rho1,
        selected_rows: vec![pair.first, pair.second],
    })
}

/// Exact reduction to the 2x2 identity for channels with positive
/// zero-error capacity: a non-adjacent input pair has disjoint row
/// supports, so the two-row merge is lossless.
pub fn reduce_to_identity(q: &Dmc) -> Result<Reduction> {
    let (a, b) = channel::non_adjacent_pair(q).ok_or_else(|| {
        Error::NotApplicable("no non-adjacent input pair: zero-error capacity is 0".into())
    })?;
    let rows = q.transition_rows();
    Ok(Reduction {
        pre: row_selector(&[a, b], q.num_inputs()),
        post: two_row_merge(&rows[a], &rows[b]),
        order: 2,
        rho: 1.0,
        rho_best: 1.0,
        selected_rows: vec![a, b],
    })
}

/// Uniform reduction to `U_s(rho)` for `1/s < rho <= rho_hat`, where
/// `rho_hat` is the achievable bound of this construction (not claimed to
/// match the channel's true supremum).
///
/// `R` selects `s` independent rows greedily by residual norm. Two merge
/// candidates are tried: the column-normalized transpose `D (RQ)^T` (always
/// invertible) and the hard assignment of each output to its likeliest
/// selected row; whichever yields the larger achievable `rho_hat` wins.
/// Then `S = W B U_s(rho)` with `B = (RQW)^(-1)`.
pub fn reduce_to_us(q: &Dmc, s: usize, rho: f64) -> Result<Reduction> {
    if s < 2 {
        return Err(Error::InvalidParameter("target order must be at least 2".into()));
    }
    if rho <= 1.0 / s as f64 || rho > 1.0 {
        return Err(Error::InvalidParameter(format!("rho {rho} not in (1/{s}, 1]")));
    }
    let rows = q.transition_rows();
    let selected = matrix::greedy_independent_rows(rows, s, RANK_TOL);
    if selected.len() < s {
        return Err(Error::RankDeficient(format!(
            "channel rank {} is below the target order {s}",
            selected.len()
        )));
    }
    let picked: Mat = selected.iter().map(|&i| rows[i].clone()).collect();
    let n_out = q.num_outputs();

    // candidate 1: W = D (RQ)^T with D the reciprocal column sums
    let normalized: Mat = (0..n_out)
        .map(|k| {
            let colsum: f64 = picked.iter().map(|r| r[k]).sum();
            if colsum > 0.0 {
                picked.iter().map(|r| r[k] / colsum).collect()
            } else {
                let mut row = vec![0.0; s];
                row[0] = 1.0;
                row
            }
        })
        .collect();
    // candidate 2: send each output to its likeliest selected row
    let hard: Mat = (0..n_out)
        .map(|k| {
            let winner = (0..s)
                .max_by(|&i, &j| picked[i][k].total_cmp(&picked[j][k]))
                .unwrap();
            let mut row = vec![0.0; s];
            row[winner] = 1.0;
            row
        })
        .collect();

    let mut best: Option<(Mat, Mat, f64)> = None; // (W, B, rho_hat)
    for merge in [normalized, hard] {
        let gram = matrix::matmul(&picked, &merge);
        let Ok(inv) = matrix::invert(&gram) else {
            continue;
        };
        let kappa = inv.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
        let k0 = kappa.min(0.0);
        let rho_hat = (k0 - 1.0) / (s as f64 * k0 - 1.0);
        if best.as_ref().is_none_or(|b| rho_hat > b.2) {
            best = Some((merge, inv, rho_hat));
        }
    }
    let (merge, inv, rho_hat) = best.expect("normalized candidate is positive definite");
    if rho > rho_hat + 1e-12 {
        return Err(Error::NotReducible { rho, rho_best: rho_hat });
    }
    let mut k_mat = matrix::matmul(&inv, &matrix::uniform_noise(s, rho));
    for row in k_mat.iter_mut() {
        for v in row.iter_mut() {
            if *v < 0.0 {
                debug_assert!(*v > -1e-10, "K entry {v} below tolerance");
                *v = 0.0;
            }
        }
    }
    matrix::check_row_stochastic(&k_mat, 1e-9)?;
    Ok(Reduction {
        pre: row_selector(&selected, q.num_inputs()),
        post: matrix::matmul(&merge, &k_mat),
        order: s,
        rho,
        rho_best: rho_hat,
        selected_rows: selected,
    })
}

/// One stage of a canonicalization: the live input tuples, the chosen
/// output tuples, and the pairing that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalizationStage {
    pub input_set: Vec<Vec<usize>>,
    pub output_set: Vec<Vec<usize>>,
    pub pairs: Vec<PairChoice>,
}

/// A pair of input tuples and the output tuple both can reach. Self-pairs
/// (odd stage sizes) repeat the same tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct PairChoice {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
    pub output: Vec<usize>,
}

/// Result of canonicalizing a chain: after `stages.len()` links the set of
/// reachable outputs under the recorded channel-status event is a single
/// tuple, reachable from every starting input with probability at least
/// `exp(ln_prob_bound)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalizationTrace {
    pub stages: Vec<CanonicalizationStage>,
    pub terminal_output: Vec<usize>,
    pub ln_prob_bound: f64,
}

impl CanonicalizationTrace {
    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }
}

fn tuple_space(card: usize, len: usize) -> Result<Vec<Vec<usize>>> {
    let total = card.checked_pow(len as u32).filter(|&t| t <= 1_000_000).ok_or_else(|| {
        Error::ResourceLimit(format!("tuple space {card}^{len} too large to enumerate"))
    })?;
    let mut out = Vec::with_capacity(total);
    let mut cur = vec![0usize; len];
    loop {
        out.push(cur.clone());
        let mut pos = len;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            cur[pos] += 1;
            if cur[pos] < card {
                break;
            }
            cur[pos] = 0;
        }
    }
}

fn tensor_prob(q: &Dmc, x: &[usize], y: &[usize]) -> f64 {
    x.iter().zip(y).map(|(&u, &v)| q.prob(u, v)).product()
}

/// Canonicalizes a chain of channels with deterministic symbol-wise
/// recoders between them, for inner block-length `inner_len`.
///
/// Starting from all input tuples, each stage pairs the live tuples (one
/// self-pair when the count is odd), picks for every pair the output tuple
/// with the best worst-case probability, and maps the chosen outputs
/// through the recoder into the next stage. After
/// `K = ceil(N log2 |Qi|)` stages a single output remains.
pub fn canonicalize_chain(
    channels: &[Dmc],
    recoders: &[Vec<usize>],
    inner_len: usize,
) -> Result<CanonicalizationTrace> {
    if channels.is_empty() || inner_len == 0 {
        return Err(Error::InvalidParameter("need at least one channel and N >= 1".into()));
    }
    let card_in = channels[0].num_inputs();
    let stages_needed =
        ((inner_len as f64) * (card_in as f64).log2() - 1e-9).ceil().max(1.0) as usize;
    if channels.len() < stages_needed {
        return Err(Error::InvalidParameter(format!(
            "need at least K = {stages_needed} channels, got {}",
            channels.len()
        )));
    }
    if recoders.len() + 1 < stages_needed {
        return Err(Error::InvalidParameter(format!(
            "need at least K - 1 = {} recoders, got {}",
            stages_needed - 1,
            recoders.len()
        )));
    }
    for (i, q) in channels.iter().take(stages_needed).enumerate() {
        if channel::epsilon_q(q) <= 0.0 {
            return Err(Error::NotApplicable(format!(
                "channel {i} has a zero pairwise overlap (positive zero-error capacity)"
            )));
        }
    }

    let mut live: Vec<Vec<usize>> = tuple_space(card_in, inner_len)?;
    let mut stages = Vec::with_capacity(stages_needed);
    let mut ln_prob_bound = 0.0;
    for stage_idx in 0..stages_needed {
        let q = &channels[stage_idx];
        let out_tuples = tuple_space(q.num_outputs(), inner_len)?;
        let mut pairs = Vec::new();
        let mut outputs: Vec<Vec<usize>> = Vec::new();
        for c in live.chunks(2) {
            let (first, second) = match c {
                [a, b] => (a.clone(), b.clone()),
                [a] => (a.clone(), a.clone()),
                _ => unreachable!(),
            };
            let mut best_y: Option<(&Vec<usize>, f64)> = None;
            for y in &out_tuples {
                let floor = tensor_prob(q, &first, y).min(tensor_prob(q, &second, y));
                if best_y.is_none_or(|(_, f)| floor > f) {
                    best_y = Some((y, floor));
                }
            }
            let (y, floor) = best_y.expect("output space is non-empty");
            assert!(floor > 0.0, "positive pairwise overlap guarantees a shared output");
            ln_prob_bound += tensor_prob(q, &first, y).ln();
            if second != first {
                ln_prob_bound += tensor_prob(q, &second, y).ln();
            }
            if !outputs.contains(y) {
                outputs.push(y.clone());
            }
            pairs.push(PairChoice { first, second, output: y.clone() });
        }
        outputs.sort();
        assert!(outputs.len() <= live.len().div_ceil(2));
        stages.push(CanonicalizationStage {
            input_set: live.clone(),
            output_set: outputs.clone(),
            pairs,
        });
        if stage_idx + 1 < stages_needed {
            let map = &recoders[stage_idx];
            let next_card = channels[stage_idx + 1].num_inputs();
            if map.len() != q.num_outputs() || map.iter().any(|&t| t >= next_card) {
                return Err(Error::DimensionMismatch(format!(
                    "recoder {stage_idx} must map {} outputs into {} inputs",
                    q.num_outputs(),
                    next_card
                )));
            }
            let mut next: Vec<Vec<usize>> =
                outputs.iter().map(|y| y.iter().map(|&v| map[v]).collect()).collect();
            next.sort();
            next.dedup();
            live = next;
        } else {
            live = outputs;
        }
    }
    assert_eq!(live.len(), 1, "canonicalization must end in a single output");
    Ok(CanonicalizationTrace {
        stages,
        terminal_output: live.pop().unwrap(),
        ln_prob_bound,
    })
}

/// Per-node recoding plan reducing a whole line to a power of `U_2(rho)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineReductionPlan {
    /// Source recoder `F = R_1`, batch alphabet {0,1}.
    pub source_recoder: Mat,
    /// Relay recoders `S_l R_(l+1)` for the L-1 intermediate nodes.
    pub relay_recoders: Vec<Mat>,
    /// Destination recoder `S_L`.
    pub dest_recoder: Mat,
    /// Number of links with zero zero-error capacity; these reduce to
    /// `U_2(rho)`, the others to the identity.
    pub noisy_link_count: usize,
    /// Common diagonal used for the noisy links.
    pub rho: f64,
    /// `max | end-to-end - U_2(rho)^noisy |`, computed at construction.
    pub residual: f64,
}

#[derive(Serialize, Deserialize)]
struct PlanFile {
    source_recoder: Mat,
    relay_recoders: Vec<Mat>,
    dest_recoder: Option<Mat>,
    noisy_link_count: usize,
    rho: f64,
}

impl LineReductionPlan {
    /// End-to-end matrix `F Q_1 Phi_1 ... Q_L Phi_L` at inner block-length 1.
    pub fn end_to_end(&self, channels: &[Dmc]) -> Mat {
        let mut acc = self.source_recoder.clone();
        for (l, q) in channels.iter().enumerate() {
            acc = matrix::matmul(&acc, q.transition_rows());
            let recoder =
                if l + 1 < channels.len() { &self.relay_recoders[l] } else { &self.dest_recoder };
            acc = matrix::matmul(&acc, recoder);
        }
        acc
    }

    /// The plan as a replayable simulator object.
    pub fn to_matrix_plan(&self) -> MatrixPlan {
        MatrixPlan {
            source_recoder: self.source_recoder.clone(),
            relay_recoders: self.relay_recoders.clone(),
            dest_recoder: Some(self.dest_recoder.clone()),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&PlanFile {
            source_recoder: self.source_recoder.clone(),
            relay_recoders: self.relay_recoders.clone(),
            dest_recoder: Some(self.dest_recoder.clone()),
            noisy_link_count: self.noisy_link_count,
            rho: self.rho,
        })
        .expect("serializable")
    }
}

/// Reduces every link of a line: links with positive zero-error capacity
/// to the identity, the rest to `U_2(rho)` at the common
/// `rho = min` of their per-link best diagonals. Per-link failures carry
/// the link index.
pub fn reduce_line(channels: &[Dmc]) -> Result<LineReductionPlan> {
    if channels.is_empty() {
        return Err(Error::InvalidParameter("empty line network".into()));
    }
    let mut classes = Vec::with_capacity(channels.len());
    let mut rho = 1.0f64;
    let mut noisy = 0usize;
    for (l, q) in channels.iter().enumerate() {
        let cap = channel::capacity(q, 1e-8)
            .map_err(|e| Error::Domain(format!("link {l}: {e}")))?;
        if cap <= CAPACITY_FLOOR {
            return Err(Error::Domain(format!(
                "link {l}: capacity {cap:.2e} is numerically zero"
            )));
        }
        if channel::zero_error_positive(q) {
            classes.push(true);
        } else {
            let pair = best_row_pair(q)
                .ok_or_else(|| Error::Domain(format!("link {l}: single-input channel")))?;
            rho = rho.min(pair.rho1);
            classes.push(false);
            noisy += 1;
        }
    }
    rho = rho.min(1.0 - 1e-12);
    let reductions: Vec<Reduction> = channels
        .iter()
        .zip(&classes)
        .enumerate()
        .map(|(l, (q, &exact))| {
            let red = if exact { reduce_to_identity(q) } else { reduce_to_u2(q, rho) };
            red.map_err(|e| Error::Domain(format!("link {l}: {e}")))
        })
        .collect::<Result<_>>()?;

    let relay_recoders: Vec<Mat> = reductions
        .windows(2)
        .map(|w| matrix::matmul(&w[0].post, &w[1].pre))
        .collect();
    let plan_rho = if noisy == 0 { 1.0 } else { rho };
    let mut plan = LineReductionPlan {
        source_recoder: reductions[0].pre.clone(),
        relay_recoders,
        dest_recoder: reductions.last().unwrap().post.clone(),
        noisy_link_count: noisy,
        rho: plan_rho,
        residual: 0.0,
    };
    let target = matrix::mat_pow(&matrix::uniform_noise(2, plan_rho), noisy);
    plan.residual = matrix::inf_norm_diff(&plan.end_to_end(channels), &target);
    Ok(plan)
}

/// Capacity in bits of the L-fold self-composition of `U_2(rho)`:
/// `U_2(rho)^L = U_2((1 + (2 rho - 1)^L) / 2)`, and the capacity of a
/// binary symmetric channel follows in closed form. Exact to machine
/// precision even deep in the decay where `1 - H2` would cancel.
pub fn u2_chain_capacity(rho: f64, hops: usize) -> f64 {
    debug_assert!(rho > 0.5 && rho <= 1.0);
    let delta = 0.5 * (2.0 * rho - 1.0).powi(hops as i32);
    u2_capacity(0.5 + delta)
}

/// `1 - H2(rho)` in bits, stable near `rho = 1/2`.
pub fn u2_capacity(rho: f64) -> f64 {
    let d = (rho - 0.5).abs();
    if d >= 0.5 {
        return 1.0;
    }
    if d < 1e-5 {
        // series of (1/2+d) ln(1+2d) + (1/2-d) ln(1-2d)
        let d2 = d * d;
        return (2.0 * d2 + (4.0 / 3.0) * d2 * d2 + (32.0 / 15.0) * d2 * d2 * d2) / LN_2;
    }
    ((0.5 + d) * (2.0 * d).ln_1p() + (0.5 - d) * (-2.0 * d).ln_1p()) / LN_2
}
