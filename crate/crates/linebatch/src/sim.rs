//! Recoding-protocol simulators and the exact small-instance engine.
//!
//! Monte Carlo: per-hop repetition with ML decoding, and random linear
//! recoding tracked through batch coefficient matrices. Trials draw from
//! counter-split RNG streams and merge by integer counts, so a report is a
//! pure function of its seed regardless of the thread count.
//!
//! Exact: end-to-end transition matrices of explicit matrix recoding plans,
//! brute-force maximization over deterministic recoders, and the
//! erasure-bottleneck decomposition by exhaustive status conditioning.

use crate::channel::{self, Dmc, InputDistribution};
use crate::gf::Field;
use crate::matrix::{self, Mat};
use crate::rng::SplitMix64;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

const EXACT_STATE_LIMIT: usize = 4096;
const BRUTE_FORCE_BUDGET: u128 = 10_000_000;
const STATUS_PATTERN_LIMIT: u128 = 1 << 20;

/// A recoding scheme a line-network node can run.
#[derive(Debug, Clone)]
pub enum RecodingScheme {
    Repetition(RepetitionScheme),
    RandomLinear(RlncConfig),
    MatrixPlan(MatrixPlan),
}

/// Per-hop repetition with ML decoding over a decode alphabet embedded in
/// the channel inputs. The first `message_alphabet` decode symbols carry
/// information; extra symbols (the erasure input, typically) only propagate
/// decoder state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepetitionScheme {
    pub message_alphabet: usize,
    /// One embedding per link: decode symbol -> channel input index.
    pub embeddings: Vec<Vec<usize>>,
}

impl RepetitionScheme {
    /// Identity embedding of each link's full input alphabet. All links
    /// must share an input alphabet size.
    pub fn identity(network: &[Dmc], message_alphabet: usize) -> Result<Self> {
        let first = network
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty network".into()))?;
        let domain = first.num_inputs();
        if network.iter().any(|q| q.num_inputs() != domain) {
            return Err(Error::InvalidParameter(
                "identity embedding needs a common input alphabet size".into(),
            ));
        }
        let scheme = RepetitionScheme {
            message_alphabet,
            embeddings: vec![(0..domain).collect(); network.len()],
        };
        scheme.validate(network)?;
        Ok(scheme)
    }

    pub fn domain(&self) -> usize {
        self.embeddings.first().map_or(0, Vec::len)
    }

    pub fn validate(&self, network: &[Dmc]) -> Result<()> {
        let domain = self.domain();
        if self.message_alphabet < 2 || self.message_alphabet > domain {
            return Err(Error::InvalidEmbedding(format!(
                "message alphabet {} must lie in [2, decode domain {domain}]",
                self.message_alphabet
            )));
        }
        if self.embeddings.len() != network.len() {
            return Err(Error::InvalidEmbedding(format!(
                "{} embeddings for {} links",
                self.embeddings.len(),
                network.len()
            )));
        }
        for (l, (embedding, q)) in self.embeddings.iter().zip(network).enumerate() {
            if embedding.len() != domain {
                return Err(Error::InvalidEmbedding(format!(
                    "link {l}: embedding domain {} differs from {domain}",
                    embedding.len()
                )));
            }
            let mut seen = vec![false; q.num_inputs()];
            for &x in embedding {
                if x >= q.num_inputs() {
                    return Err(Error::InvalidEmbedding(format!(
                        "link {l}: input index {x} out of range"
                    )));
                }
                if std::mem::replace(&mut seen[x], true) {
                    return Err(Error::InvalidEmbedding(format!(
                        "link {l}: input index {x} repeated"
                    )));
                }
            }
            for a in 0..embedding.len() {
                for b in a + 1..embedding.len() {
                    let (ra, rb) = (q.row(embedding[a]), q.row(embedding[b]));
                    if ra.iter().zip(rb).all(|(&u, &v)| (u - v).abs() <= 1e-15) {
                        return Err(Error::InvalidEmbedding(format!(
                            "link {l}: embedded inputs {a} and {b} have identical rows"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Random linear recoding on a homogeneous line of packet erasure links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlncConfig {
    pub batch_size: usize,
    pub inner_len: usize,
    pub hops: usize,
    pub epsilon: f64,
    pub field_order: u32,
    pub packet_len: usize,
}

impl RlncConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 1 || self.inner_len < 1 {
            return Err(Error::InvalidParameter("batch size and inner length must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidParameter(format!("epsilon {} not in [0,1]", self.epsilon)));
        }
        if self.batch_size >= self.packet_len {
            return Err(Error::InvalidParameter(format!(
                "batch size {} must be smaller than the packet length {}",
                self.batch_size, self.packet_len
            )));
        }
        Field::new(self.field_order).map(|_| ())
    }
}

/// Explicit matrix recoders: a source recoder, one relay recoder per
/// intermediate node, and an optional destination recoder. The exact engine
/// accepts only this variant; randomized recoders have no fixed end-to-end
/// matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixPlan {
    pub source_recoder: Mat,
    pub relay_recoders: Vec<Mat>,
    #[serde(default)]
    pub dest_recoder: Option<Mat>,
}

impl MatrixPlan {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("recoding plan: {e}")))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    fn validate(&self, hops: usize) -> Result<()> {
        if self.relay_recoders.len() + 1 != hops {
            return Err(Error::DimensionMismatch(format!(
                "{} relay recoders for {hops} links",
                self.relay_recoders.len()
            )));
        }
        matrix::check_row_stochastic(&self.source_recoder, 1e-9)?;
        for r in &self.relay_recoders {
            matrix::check_row_stochastic(r, 1e-9)?;
        }
        if let Some(d) = &self.dest_recoder {
            matrix::check_row_stochastic(d, 1e-9)?;
        }
        Ok(())
    }
}

/// Outcome counts of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimOutcome {
    Successes(u64),
    RankHistogram(Vec<u64>),
}

/// Result of a simulation run; a pure function of the scheme, network and
/// seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub scheme: &'static str,
    pub trials: u64,
    pub hops: usize,
    pub inner_len: usize,
    pub seed: u64,
    pub outcome: SimOutcome,
    pub empirical_rate: f64,
    pub buffer_content_bits: u64,
    pub buffer_counter_bits: u64,
}

impl SimReport {
    pub fn success_fraction(&self) -> Option<f64> {
        match &self.outcome {
            SimOutcome::Successes(s) => Some(*s as f64 / self.trials as f64),
            SimOutcome::RankHistogram(_) => None,
        }
    }

    pub fn rank_frequencies(&self) -> Option<Vec<f64>> {
        match &self.outcome {
            SimOutcome::RankHistogram(h) => {
                Some(h.iter().map(|&c| c as f64 / self.trials as f64).collect())
            }
            SimOutcome::Successes(_) => None,
        }
    }

    pub fn mean_rank(&self) -> Option<f64> {
        self.rank_frequencies()
            .map(|f| f.iter().enumerate().map(|(j, &p)| j as f64 * p).sum())
    }

    /// Line-oriented `key=value` text plus, for rank histograms, a CSV block
    /// with an optional analytic column.
    pub fn to_text(&self, analytic: Option<&[f64]>) -> String {
        let mut out = String::new();
        out.push_str(&format!("scheme={}\n", self.scheme));
        out.push_str(&format!("trials={}\n", self.trials));
        out.push_str(&format!("hops={}\n", self.hops));
        out.push_str(&format!("inner_len={}\n", self.inner_len));
        out.push_str(&format!("seed={}\n", self.seed));
        out.push_str(&format!("buffer_content_bits={}\n", self.buffer_content_bits));
        out.push_str(&format!("buffer_counter_bits={}\n", self.buffer_counter_bits));
        match &self.outcome {
            SimOutcome::Successes(s) => {
                out.push_str(&format!("success_count={s}\n"));
                out.push_str(&format!(
                    "success_fraction={}\n",
                    crate::sig12(self.success_fraction().unwrap())
                ));
                out.push_str(&format!(
                    "empirical_rate_bits_per_use={}\n",
                    crate::sig12(self.empirical_rate)
                ));
            }
            SimOutcome::RankHistogram(h) => {
                out.push_str(&format!(
                    "mean_rank={}\n",
                    crate::sig12(self.mean_rank().unwrap())
                ));
                out.push_str(&format!(
                    "empirical_rate_bits_per_use={}\n",
                    crate::sig12(self.empirical_rate)
                ));
                match analytic {
                    Some(pmf) => {
                        out.push_str("rank,count,frequency,analytic\n");
                        for (j, &c) in h.iter().enumerate() {
                            out.push_str(&format!(
                                "{j},{c},{},{}\n",
                                crate::sig12(c as f64 / self.trials as f64),
                                crate::sig12(pmf.get(j).copied().unwrap_or(0.0))
                            ));
                        }
                    }
                    None => {
                        out.push_str("rank,count,frequency\n");
                        for (j, &c) in h.iter().enumerate() {
                            out.push_str(&format!(
                                "{j},{c},{}\n",
                                crate::sig12(c as f64 / self.trials as f64)
                            ));
                        }
                    }
                }
            }
        }
        out
    }
}

fn ceil_log2(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros() as u64
    }
}

/// Runs `trials` independent trials, each classified into one of `bins`
/// outcomes, across `threads` workers (0 = available parallelism). The
/// result depends only on the seed: each trial draws from its own
/// counter-derived stream and counts merge by addition.
fn binned_trials<F>(trials: u64, bins: usize, seed: u64, threads: usize, per_trial: F) -> Vec<u64>
where
    F: Fn(&mut SplitMix64) -> usize + Sync,
{
    let threads = if threads == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        threads
    };
    let threads = threads.min(trials.max(1) as usize).max(1);
    let chunk = trials.div_ceil(threads as u64);
    let mut counts = vec![0u64; bins];
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|w| {
                let per_trial = &per_trial;
                scope.spawn(move || {
                    let lo = w as u64 * chunk;
                    let hi = (lo + chunk).min(trials);
                    let mut local = vec![0u64; bins];
                    for t in lo..hi {
                        let mut rng = SplitMix64::for_trial(seed, t);
                        local[per_trial(&mut rng)] += 1;
                    }
                    local
                })
            })
            .collect();
        for h in handles {
            for (c, l) in counts.iter_mut().zip(h.join().expect("worker panicked")) {
                *c += l;
            }
        }
    });
    counts
}

/// Simulates per-hop repetition with ML decoding: each trial sends one
/// uniform message symbol down the line, every node repeats its decision
/// `inner_len` times and the next node decodes by per-symbol frequency
/// counts against the link's log-likelihoods. Ties break toward the lowest
/// decode symbol.
pub fn simulate_repetition(
    network: &[Dmc],
    scheme: &RepetitionScheme,
    inner_len: usize,
    trials: u64,
    seed: u64,
    threads: usize,
) -> Result<SimReport> {
    if inner_len < 1 || trials < 1 {
        return Err(Error::InvalidParameter("need inner_len >= 1 and trials >= 1".into()));
    }
    scheme.validate(network)?;
    let domain = scheme.domain();
    // per link: row to transmit and log-likelihood table per decode symbol
    let rows: Vec<Vec<&[f64]>> = network
        .iter()
        .zip(&scheme.embeddings)
        .map(|(q, emb)| emb.iter().map(|&x| q.row(x)).collect())
        .collect();
    let ln_tables: Vec<Vec<Vec<f64>>> = rows
        .iter()
        .map(|link| {
            link.iter()
                .map(|row| row.iter().map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY }).collect())
                .collect()
        })
        .collect();
    let max_outputs = network.iter().map(Dmc::num_outputs).max().unwrap_or(0);

    let counts = binned_trials(trials, 2, seed, threads, |rng| {
        let message = rng.next_below(scheme.message_alphabet as u64) as usize;
        let mut decision = message;
        let mut freq = vec![0u32; max_outputs];
        for (link_rows, link_ln) in rows.iter().zip(&ln_tables) {
            freq.iter_mut().for_each(|c| *c = 0);
            for _ in 0..inner_len {
                freq[rng.sample_row(link_rows[decision])] += 1;
            }
            let mut best = 0usize;
            let mut best_score = f64::NEG_INFINITY;
            for d in 0..domain {
                let mut score = 0.0;
                for (y, &c) in freq.iter().enumerate() {
                    if c > 0 {
                        score += c as f64 * link_ln[d][y];
                    }
                }
                if score > best_score {
                    best_score = score;
                    best = d;
                }
            }
            decision = best;
        }
        usize::from(decision == message)
    });

    let successes = counts[1];
    let log_message = (scheme.message_alphabet as f64).log2();
    Ok(SimReport {
        scheme: "repetition",
        trials,
        hops: network.len(),
        inner_len,
        seed,
        outcome: SimOutcome::Successes(successes),
        empirical_rate: successes as f64 / trials as f64 / inner_len as f64 * log_message,
        buffer_content_bits: max_outputs as u64 * ceil_log2(inner_len as u64 + 1),
        buffer_counter_bits: ceil_log2(2 * inner_len as u64),
    })
}

/// Simulates random linear recoding through the batch coefficient matrices:
/// the source emits `inner_len` uniform combinations of the identity block,
/// every link erases packets independently, every node re-combines whatever
/// arrived, and the destination records the coefficient-matrix rank.
pub fn simulate_random_linear(
    cfg: &RlncConfig,
    trials: u64,
    seed: u64,
    threads: usize,
) -> Result<SimReport> {
    if trials < 1 {
        return Err(Error::InvalidParameter("need trials >= 1".into()));
    }
    cfg.validate()?;
    let field = Field::new(cfg.field_order)?;
    let m = cfg.batch_size;

    let counts = binned_trials(trials, m + 1, seed, threads, |rng| {
        let mut packets: Vec<Vec<u16>> =
            (0..m).map(|i| (0..m).map(|j| u16::from(i == j)).collect()).collect();
        for _ in 0..cfg.hops {
            let mut arrived: Vec<Vec<u16>> = Vec::with_capacity(cfg.inner_len);
            for _ in 0..cfg.inner_len {
                let mut combo = vec![0u16; m];
                for packet in &packets {
                    let c = field.uniform(rng);
                    if c != 0 {
                        field.axpy(&mut combo, c, packet);
                    }
                }
                if rng.next_f64() >= cfg.epsilon {
                    arrived.push(combo);
                }
            }
            packets = arrived;
        }
        field.rank(&packets)
    });

    let histogram = counts;
    let mean: f64 = histogram
        .iter()
        .enumerate()
        .map(|(j, &c)| j as f64 * c as f64 / trials as f64)
        .sum();
    let t = cfg.packet_len as f64;
    let log_alphabet = t * (cfg.field_order as f64).log2();
    Ok(SimReport {
        scheme: "rlnc",
        trials,
        hops: cfg.hops,
        inner_len: cfg.inner_len,
        seed,
        outcome: SimOutcome::RankHistogram(histogram),
        empirical_rate: (1.0 - m as f64 / t) * mean / cfg.inner_len as f64 * log_alphabet,
        buffer_content_bits: m as u64 * cfg.packet_len as u64 * ceil_log2(cfg.field_order as u64),
        buffer_counter_bits: ceil_log2(2 * cfg.inner_len as u64),
    })
}

/// `F Q_1^(xN) Phi_1 ... Q_L^(xN) [Phi_L]` as an explicit channel.
pub fn exact_end_to_end(plan: &MatrixPlan, network: &[Dmc], inner_len: usize) -> Result<Dmc> {
    if network.is_empty() || inner_len < 1 {
        return Err(Error::InvalidParameter("need at least one link and N >= 1".into()));
    }
    plan.validate(network.len())?;
    if plan.source_recoder.len() > EXACT_STATE_LIMIT {
        return Err(Error::ResourceLimit(format!(
            "batch alphabet {} exceeds the exact-engine limit",
            plan.source_recoder.len()
        )));
    }
    for (l, q) in network.iter().enumerate() {
        let states = q.num_inputs().max(q.num_outputs()).checked_pow(inner_len as u32);
        if states.is_none_or(|s| s > EXACT_STATE_LIMIT) {
            return Err(Error::ResourceLimit(format!(
                "link {l}: tuple space exceeds the exact-engine limit"
            )));
        }
    }
    let mut acc = plan.source_recoder.clone();
    for (l, q) in network.iter().enumerate() {
        let tensor = channel::kron_power(q, inner_len)?;
        if acc[0].len() != tensor.num_inputs() {
            return Err(Error::DimensionMismatch(format!(
                "link {l}: recoder emits {} symbols, channel expects {}",
                acc[0].len(),
                tensor.num_inputs()
            )));
        }
        acc = matrix::matmul(&acc, tensor.transition_rows());
        let recoder = if l + 1 < network.len() {
            Some(&plan.relay_recoders[l])
        } else {
            plan.dest_recoder.as_ref()
        };
        if let Some(r) = recoder {
            if acc[0].len() != r.len() {
                return Err(Error::DimensionMismatch(format!(
                    "recoder after link {l} expects {} symbols, got {}",
                    r.len(),
                    acc[0].len()
                )));
            }
            acc = matrix::matmul(&acc, r);
        }
    }
    Dmc::from_rows(acc)
}

/// Deterministic repetition recoding as an explicit matrix plan: the source
/// embeds the message, every relay ML-decodes its received tuple and
/// re-embeds the decision, and the destination decodes to the decode
/// alphabet.
pub fn repetition_matrix_plan(
    network: &[Dmc],
    scheme: &RepetitionScheme,
    inner_len: usize,
) -> Result<MatrixPlan> {
    scheme.validate(network)?;
    let domain = scheme.domain();
    let decode_map = |q: &Dmc, emb: &[usize]| -> Vec<usize> {
        let ln: Vec<Vec<f64>> = emb
            .iter()
            .map(|&x| {
                q.row(x).iter().map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY }).collect()
            })
            .collect();
        let tuples = q.num_outputs().pow(inner_len as u32);
        (0..tuples)
            .map(|idx| {
                let digits = unrank(idx, q.num_outputs(), inner_len);
                let mut best = 0usize;
                let mut best_score = f64::NEG_INFINITY;
                for (d, row) in ln.iter().enumerate() {
                    let score: f64 = digits.iter().map(|&y| row[y]).sum();
                    if score > best_score {
                        best_score = score;
                        best = d;
                    }
                }
                best
            })
            .collect()
    };
    let embed_tuple = |q: &Dmc, emb: &[usize], d: usize| -> usize {
        let mut idx = 0usize;
        for _ in 0..inner_len {
            idx = idx * q.num_inputs() + emb[d];
        }
        idx
    };

    let first = &network[0];
    let source_recoder: Mat = (0..scheme.message_alphabet)
        .map(|x| {
            let mut row = vec![0.0; first.num_inputs().pow(inner_len as u32)];
            row[embed_tuple(first, &scheme.embeddings[0], x)] = 1.0;
            row
        })
        .collect();
    let mut relay_recoders = Vec::with_capacity(network.len() - 1);
    for l in 0..network.len() - 1 {
        let decisions = decode_map(&network[l], &scheme.embeddings[l]);
        let next = &network[l + 1];
        let cols = next.num_inputs().pow(inner_len as u32);
        relay_recoders.push(
            decisions
                .iter()
                .map(|&d| {
                    let mut row = vec![0.0; cols];
                    row[embed_tuple(next, &scheme.embeddings[l + 1], d)] = 1.0;
                    row
                })
                .collect(),
        );
    }
    let last = network.len() - 1;
    let decisions = decode_map(&network[last], &scheme.embeddings[last]);
    let dest_recoder: Mat = decisions
        .iter()
        .map(|&d| {
            let mut row = vec![0.0; domain];
            row[d] = 1.0;
            row
        })
        .collect();
    Ok(MatrixPlan { source_recoder, relay_recoders, dest_recoder: Some(dest_recoder) })
}

fn unrank(mut idx: usize, card: usize, len: usize) -> Vec<usize> {
    let mut digits = vec![0usize; len];
    for d in digits.iter_mut().rev() {
        *d = idx % card;
        idx /= card;
    }
    digits
}

/// Lifts a symbol-wise deterministic map to tuple indices.
fn lift_symbol_map(map: &[usize], in_card: usize, out_card: usize, len: usize) -> Vec<usize> {
    (0..in_card.pow(len as u32))
        .map(|idx| {
            unrank(idx, in_card, len)
                .into_iter()
                .fold(0usize, |acc, digit| acc * out_card + map[digit])
        })
        .collect()
}

/// `out[i][target[j]] += a[i][j]`: right-multiplication by a deterministic
/// transition matrix given as an index map.
fn apply_det_map(a: &Mat, target: &[usize], out_cols: usize) -> Mat {
    a.iter()
        .map(|row| {
            let mut out = vec![0.0; out_cols];
            for (&v, &t) in row.iter().zip(target) {
                out[t] += v;
            }
            out
        })
        .collect()
}

/// The best deterministic recoding found by exhaustive search.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    /// `max capacity(W) / N` in bits per use.
    pub rate: f64,
    /// Source map: batch state -> input tuple index of link 1.
    pub source_map: Vec<usize>,
    /// Per intermediate node: output symbol -> next input symbol.
    pub relay_maps: Vec<Vec<usize>>,
}

/// Exhausts deterministic recodings of a batched code: the source map is
/// arbitrary on batch states, relay maps are symbol-wise (fully general at
/// `N = 1`), and each end-to-end matrix is scored by its capacity. The
/// enumeration budget is checked up front.
pub fn brute_force_capacity(
    network: &[Dmc],
    alphabet_size: usize,
    batch_size: usize,
    inner_len: usize,
    tol: f64,
) -> Result<BruteForceResult> {
    if network.is_empty() || alphabet_size < 2 || batch_size < 1 || inner_len < 1 {
        return Err(Error::InvalidParameter("degenerate brute-force instance".into()));
    }
    let batch_states = alphabet_size
        .checked_pow(batch_size as u32)
        .filter(|&s| s <= EXACT_STATE_LIMIT)
        .ok_or_else(|| Error::ResourceLimit("batch alphabet too large".into()))?;
    let tuple_in: Vec<usize> =
        network.iter().map(|q| q.num_inputs().pow(inner_len as u32)).collect();

    let mut budget: u128 = (tuple_in[0] as u128).pow(batch_states as u32);
    for l in 1..network.len() {
        budget = budget.saturating_mul((network[l].num_inputs() as u128).pow(
            network[l - 1].num_outputs() as u32,
        ));
    }
    if budget > BRUTE_FORCE_BUDGET {
        return Err(Error::ResourceLimit(format!(
            "brute-force enumeration needs {budget} recoder combinations (budget {BRUTE_FORCE_BUDGET})"
        )));
    }

    let tensors: Vec<Dmc> =
        network.iter().map(|q| channel::kron_power(q, inner_len)).collect::<Result<_>>()?;

    // enumerate relay maps with an odometer; for each combination compute
    // T_1 Phi_1 T_2 ... T_L once, then try every source map on its rows
    let relay_domains: Vec<(usize, usize)> = network
        .windows(2)
        .map(|w| (w[0].num_outputs(), w[1].num_inputs()))
        .collect();
    let mut relay_maps: Vec<Vec<usize>> =
        relay_domains.iter().map(|&(out, _)| vec![0usize; out]).collect();
    let mut best = BruteForceResult { rate: f64::NEG_INFINITY, source_map: vec![], relay_maps: vec![] };
    loop {
        let mut chain = tensors[0].transition_rows().clone();
        for (l, map) in relay_maps.iter().enumerate() {
            let lifted = lift_symbol_map(map, network[l].num_outputs(), network[l + 1].num_inputs(), inner_len);
            chain = apply_det_map(&chain, &lifted, tuple_in[l + 1]);
            chain = matrix::matmul(&chain, tensors[l + 1].transition_rows());
        }
        // all source maps over the chain's rows
        let mut source_map = vec![0usize; batch_states];
        loop {
            let w: Mat = source_map.iter().map(|&t| chain[t].clone()).collect();
            let dmc = Dmc::from_rows(w)?;
            let cap = channel::capacity(&dmc, tol)? / inner_len as f64;
            if cap > best.rate {
                best = BruteForceResult {
                    rate: cap,
                    source_map: source_map.clone(),
                    relay_maps: relay_maps.clone(),
                };
            }
            if !advance(&mut source_map, tuple_in[0]) {
                break;
            }
        }
        if !advance_mixed(&mut relay_maps, &relay_domains) {
            break;
        }
    }
    Ok(best)
}

fn advance(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

fn advance_mixed(maps: &mut [Vec<usize>], domains: &[(usize, usize)]) -> bool {
    for (map, &(_, base)) in maps.iter_mut().zip(domains) {
        if advance(map, base) {
            return true;
        }
    }
    false
}

/// The erasure-bottleneck split of an end-to-end channel: `p0` is the
/// probability some link erases all `N` uses of a batch, and conditioned on
/// that event the end-to-end channel carries no information.
#[derive(Debug, Clone, PartialEq)]
pub struct BottleneckDecomposition {
    pub p0: f64,
    pub p1: f64,
    /// `I(uniform, W^(0))` in bits, computed by exhaustive conditioning.
    pub info_given_bottleneck: f64,
    /// The conditioned transition matrix `W^(0)` itself.
    pub bottleneck_channel: Mat,
}

/// Exhaustively conditions the end-to-end channel of a matrix plan over a
/// homogeneous erasure line on the per-link erasure patterns.
pub fn erasure_bottleneck_decomposition(
    network: &[Dmc],
    plan: &MatrixPlan,
    inner_len: usize,
) -> Result<BottleneckDecomposition> {
    let shapes: Vec<_> = network.iter().map(Dmc::as_erasure).collect();
    let Some(shapes) = shapes.into_iter().collect::<Option<Vec<_>>>() else {
        return Err(Error::NotApplicable("every link must be a packet erasure channel".into()));
    };
    let first = shapes
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty network".into()))?;
    if shapes.iter().any(|s| s != first) {
        return Err(Error::NotApplicable("links must be identical erasure channels".into()));
    }
    plan.validate(network.len())?;
    let hops = network.len();
    let n = inner_len;
    let card = first.alphabet_size + 1;
    let tuples = card
        .checked_pow(n as u32)
        .filter(|&t| t <= EXACT_STATE_LIMIT)
        .ok_or_else(|| Error::ResourceLimit("tuple space too large".into()))?;
    let patterns_per_link = 1u128 << n;
    if patterns_per_link.pow(hops as u32) > STATUS_PATTERN_LIMIT {
        return Err(Error::ResourceLimit("too many erasure patterns to enumerate".into()));
    }

    // deterministic channel action for each erasure pattern of one link
    let pattern_maps: Vec<Vec<usize>> = (0..1usize << n)
        .map(|mask| {
            (0..tuples)
                .map(|idx| {
                    unrank(idx, card, n)
                        .into_iter()
                        .enumerate()
                        .fold(0usize, |acc, (t, digit)| {
                            let y = if mask >> t & 1 == 1 { first.erasure_index } else { digit };
                            acc * card + y
                        })
                })
                .collect()
        })
        .collect();
    let eps = first.epsilon;
    let pattern_weight: Vec<f64> = (0..1usize << n)
        .map(|mask| {
            let erased = mask.count_ones() as i32;
            eps.powi(erased) * (1.0 - eps).powi(n as i32 - erased)
        })
        .collect();
    let full_mask = (1usize << n) - 1;

    if plan.source_recoder[0].len() != tuples {
        return Err(Error::DimensionMismatch(format!(
            "source recoder emits {} symbols, links expect {tuples}",
            plan.source_recoder[0].len()
        )));
    }
    let batch_states = plan.source_recoder.len();
    let out_cols = plan
        .dest_recoder
        .as_ref()
        .map_or(tuples, |d| d[0].len());
    let mut w0 = vec![vec![0.0; out_cols]; batch_states];
    let mut p0_enumerated = 0.0;
    let mut masks = vec![0usize; hops];
    loop {
        let weight: f64 = masks.iter().map(|&m| pattern_weight[m]).product();
        let bottleneck = masks.contains(&full_mask);
        if bottleneck && weight > 0.0 {
            let mut acc = plan.source_recoder.clone();
            for (l, &mask) in masks.iter().enumerate() {
                acc = apply_det_map(&acc, &pattern_maps[mask], tuples);
                let recoder = if l + 1 < hops {
                    Some(&plan.relay_recoders[l])
                } else {
                    plan.dest_recoder.as_ref()
                };
                if let Some(r) = recoder {
                    if acc[0].len() != r.len() {
                        return Err(Error::DimensionMismatch(format!(
                            "recoder after link {l} expects {} symbols, got {}",
                            r.len(),
                            acc[0].len()
                        )));
                    }
                    acc = matrix::matmul(&acc, r);
                }
            }
            p0_enumerated += weight;
            for (w_row, a_row) in w0.iter_mut().zip(&acc) {
                for (w, &a) in w_row.iter_mut().zip(a_row) {
                    *w += weight * a;
                }
            }
        }
        if !advance(&mut masks, 1 << n) {
            break;
        }
    }

    let p1 = (1.0 - eps.powi(n as i32)).powi(hops as i32);
    let p0 = 1.0 - p1;
    debug_assert!((p0 - p0_enumerated).abs() < 1e-12);
    for row in w0.iter_mut() {
        for v in row.iter_mut() {
            *v /= p0_enumerated;
        }
    }
    let dmc = Dmc::from_rows(w0.clone())?;
    let info =
        channel::mutual_information(&InputDistribution::uniform(batch_states), &dmc)?;
    Ok(BottleneckDecomposition { p0, p1, info_given_bottleneck: info, bottleneck_channel: w0 })
}
