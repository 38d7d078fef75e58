//! Discrete memoryless channels.
//!
//! A [`Dmc`] is a finite row-stochastic matrix with named input and output
//! alphabets. This module provides the standard constructions (erasure,
//! binary symmetric, uniform-noise, the 3x3 non-canonical example channel),
//! composition and tensor powers, mutual information and capacity, the
//! pairwise-overlap quantity `epsilon_q`, canonical-output detection, the
//! zero-error dichotomy via input adjacency, and channel-status sampling.

use crate::matrix::{self, Mat};
use crate::rng::SplitMix64;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::f64::consts::LN_2;

/// Row sums must match 1 within this tolerance at construction; smaller
/// deviations are renormalized, larger ones are rejected.
pub const ROW_SUM_TOL: f64 = 1e-12;

const MAX_CAPACITY_ITERS: usize = 100_000;
const MAX_TENSOR_ENTRIES: usize = 1 << 24;

/// A discrete memoryless channel: transition probabilities from an input
/// alphabet to an output alphabet. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Dmc {
    inputs: Vec<String>,
    outputs: Vec<String>,
    rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct DmcFile {
    inputs: Vec<String>,
    outputs: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Dmc {
    /// Builds a channel, validating alphabets and row stochasticity.
    pub fn new(inputs: Vec<String>, outputs: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.is_empty() || outputs.is_empty() {
            return Err(Error::InvalidParameter("alphabets must be non-empty".into()));
        }
        for (name, alphabet) in [("input", &inputs), ("output", &outputs)] {
            let mut seen = HashSet::new();
            if !alphabet.iter().all(|s| seen.insert(s)) {
                return Err(Error::InvalidParameter(format!("duplicate {name} symbol")));
            }
        }
        if rows.len() != inputs.len() || rows.iter().any(|r| r.len() != outputs.len()) {
            return Err(Error::DimensionMismatch(format!(
                "expected {}x{} transition matrix",
                inputs.len(),
                outputs.len()
            )));
        }
        let mut rows = rows;
        for (i, row) in rows.iter_mut().enumerate() {
            if row.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                return Err(Error::NotStochastic(format!("row {i} has an entry outside [0,1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::NotStochastic(format!("row {i} sums to {sum}")));
            }
            for p in row.iter_mut() {
                *p /= sum;
            }
        }
        Ok(Dmc { inputs, outputs, rows })
    }

    /// Builds a channel with synthesized symbol names `i0..`, `o0..`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_in = rows.len();
        let n_out = rows.first().map_or(0, |r| r.len());
        Dmc::new(
            (0..n_in).map(|i| format!("i{i}")).collect(),
            (0..n_out).map(|j| format!("o{j}")).collect(),
            rows,
        )
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn prob(&self, input: usize, output: usize) -> f64 {
        self.rows[input][output]
    }

    pub fn row(&self, input: usize) -> &[f64] {
        &self.rows[input]
    }

    pub fn transition_rows(&self) -> &Mat {
        &self.rows
    }

    /// Parses the JSON channel-definition format
    /// (`{"inputs": [...], "outputs": [...], "rows": [[...]]}`).
    pub fn from_json_str(text: &str) -> Result<Self> {
        let f: DmcFile = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("channel definition: {e}")))?;
        Dmc::new(f.inputs, f.outputs, f.rows)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&DmcFile {
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            rows: self.rows.clone(),
        })
        .expect("serializable")
    }

    /// Resolves a built-in channel name: `erasure(k,eps)`, `bsc(p)`, `q3x3`,
    /// `uniform(s,rho)`, `identity(k)`.
    pub fn builtin(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (name, args) = match spec.find('(') {
            Some(open) => {
                if !spec.ends_with(')') {
                    return Err(Error::Parse(format!("unbalanced parentheses in `{spec}`")));
                }
                let inner = &spec[open + 1..spec.len() - 1];
                let args: Vec<&str> = if inner.trim().is_empty() {
                    Vec::new()
                } else {
                    inner.split(',').map(str::trim).collect()
                };
                (&spec[..open], args)
            }
            None => (spec, Vec::new()),
        };
        let want = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::Parse(format!("`{name}` takes {n} argument(s), got {}", args.len())))
            }
        };
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{s}` in `{spec}`")))
        };
        let int = |s: &str| -> Result<usize> {
            s.parse::<usize>().map_err(|_| Error::Parse(format!("bad integer `{s}` in `{spec}`")))
        };
        match name {
            "erasure" => {
                want(2)?;
                make_erasure(int(args[0])?, num(args[1])?)
            }
            "bsc" => {
                want(1)?;
                make_bsc(num(args[0])?)
            }
            "q3x3" => {
                want(0)?;
                Ok(make_q3x3())
            }
            "uniform" => {
                want(2)?;
                make_uniform_noise(int(args[0])?, num(args[1])?)
            }
            "identity" => {
                want(1)?;
                Ok(identity(int(args[0])?))
            }
            other => Err(Error::Parse(format!("unknown channel `{other}`"))),
        }
    }

    /// Recognizes channels with the packet-erasure shape produced by
    /// [`make_erasure`]: the last symbol is an erasure reachable from every
    /// input with a common probability, every other input keeps its own
    /// symbol otherwise, and the erasure input is absorbing.
    pub fn as_erasure(&self) -> Option<ErasureShape> {
        if self.inputs != self.outputs || self.num_inputs() < 3 {
            return None;
        }
        let e = self.num_inputs() - 1;
        if self.inputs[e] != "e" {
            return None;
        }
        let eps = self.rows[0][e];
        for (x, row) in self.rows.iter().enumerate() {
            for (y, &p) in row.iter().enumerate() {
                let expect = if x == e {
                    if y == e { 1.0 } else { 0.0 }
                } else if y == x {
                    1.0 - eps
                } else if y == e {
                    eps
                } else {
                    0.0
                };
                if (p - expect).abs() > 1e-12 {
                    return None;
                }
            }
        }
        Some(ErasureShape { alphabet_size: e, epsilon: eps, erasure_index: e })
    }
}

/// Structural description of a packet-erasure channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErasureShape {
    pub alphabet_size: usize,
    pub epsilon: f64,
    pub erasure_index: usize,
}

/// A probability distribution over a channel's input alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDistribution {
    probs: Vec<f64>,
}

impl InputDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("empty distribution".into()));
        }
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::NotStochastic("negative probability".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::NotStochastic(format!("distribution sums to {sum}")));
        }
        let mut probs = probs;
        for p in probs.iter_mut() {
            *p /= sum;
        }
        Ok(InputDistribution { probs })
    }

    pub fn uniform(n: usize) -> Self {
        InputDistribution { probs: vec![1.0 / n as f64; n] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// One sample of the channel status variable: an output assignment per input
/// symbol. Applying [`apply_status`] reproduces the channel law.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelStatusSample {
    pub assignments: Vec<usize>,
}

/// Packet erasure channel over `alphabet_size` symbols plus an erasure symbol
/// `e`. Inputs and outputs share the alphabet; the erasure input is absorbing.
pub fn make_erasure(alphabet_size: usize, epsilon: f64) -> Result<Dmc> {
    if alphabet_size < 2 {
        return Err(Error::InvalidParameter("erasure alphabet needs at least 2 symbols".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("erasure probability {epsilon} not in (0,1)")));
    }
    let mut labels: Vec<String> = (0..alphabet_size).map(|i| i.to_string()).collect();
    labels.push("e".into());
    let n = alphabet_size + 1;
    let mut rows = vec![vec![0.0; n]; n];
    for (x, row) in rows.iter_mut().enumerate().take(alphabet_size) {
        row[x] = 1.0 - epsilon;
        row[alphabet_size] = epsilon;
    }
    rows[alphabet_size][alphabet_size] = 1.0;
    Dmc::new(labels.clone(), labels, rows)
}

/// Binary symmetric channel with crossover probability `p`.
pub fn make_bsc(p: f64) -> Result<Dmc> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("crossover {p} not in [0,1]")));
    }
    let labels = vec!["0".to_string(), "1".to_string()];
    Dmc::new(labels.clone(), labels, vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
}

/// The 3x3 channel in which every pair of inputs shares an output but no
/// single output is reachable from all three inputs.
pub fn make_q3x3() -> Dmc {
    let labels: Vec<String> = ["0", "1", "2"].iter().map(|s| s.to_string()).collect();
    let h = 0.5;
    Dmc::new(
        labels.clone(),
        labels,
        vec![vec![h, h, 0.0], vec![h, 0.0, h], vec![0.0, h, h]],
    )
    .expect("static definition")
}

/// s-ary uniform-noise channel with diagonal `rho` in `(1/s, 1]`.
pub fn make_uniform_noise(s: usize, rho: f64) -> Result<Dmc> {
    if s < 2 {
        return Err(Error::InvalidParameter("uniform-noise channel needs s >= 2".into()));
    }
    if !(rho > 1.0 / s as f64 && rho <= 1.0) {
        return Err(Error::InvalidParameter(format!("rho {rho} not in (1/{s}, 1]")));
    }
    let labels: Vec<String> = (0..s).map(|i| i.to_string()).collect();
    Dmc::new(labels.clone(), labels, matrix::uniform_noise(s, rho))
}

/// Noiseless k-ary channel.
pub fn identity(k: usize) -> Dmc {
    let labels: Vec<String> = (0..k).map(|i| i.to_string()).collect();
    Dmc::new(labels.clone(), labels, matrix::identity(k)).expect("static definition")
}

/// N-fold tensor power: alphabets become N-tuples in lexicographic order and
/// entries are products of per-coordinate entries.
pub fn kron_power(q: &Dmc, n: usize) -> Result<Dmc> {
    if n < 1 {
        return Err(Error::InvalidParameter("tensor power needs n >= 1".into()));
    }
    let rows_n = q.num_inputs().checked_pow(n as u32);
    let cols_n = q.num_outputs().checked_pow(n as u32);
    match (rows_n, cols_n) {
        (Some(r), Some(c)) if r.saturating_mul(c) <= MAX_TENSOR_ENTRIES => {}
        _ => {
            return Err(Error::ResourceLimit(format!(
                "tensor power {}^{n} x {}^{n} exceeds the in-memory budget",
                q.num_inputs(),
                q.num_outputs()
            )))
        }
    }
    let mut out = q.clone();
    for _ in 1..n {
        let inputs = tuple_labels(out.inputs(), q.inputs());
        let outputs = tuple_labels(out.outputs(), q.outputs());
        let mut rows = Vec::with_capacity(inputs.len());
        for big in &out.rows {
            for small in &q.rows {
                let mut row = Vec::with_capacity(outputs.len());
                for &b in big {
                    for &s in small {
                        row.push(b * s);
                    }
                }
                rows.push(row);
            }
        }
        out = Dmc::new(inputs, outputs, rows)?;
    }
    Ok(out)
}

fn tuple_labels(a: &[String], b: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(format!("{x}.{y}"));
        }
    }
    out
}

/// Chains two channels: the output of `a` feeds `b`. Alphabets must agree.
pub fn compose(a: &Dmc, b: &Dmc) -> Result<Dmc> {
    if a.outputs != b.inputs {
        return Err(Error::DimensionMismatch(
            "output alphabet of the first channel must equal the input alphabet of the second"
                .into(),
        ));
    }
    Dmc::new(a.inputs.clone(), b.outputs.clone(), matrix::matmul(&a.rows, &b.rows))
}

/// Mutual information `I(X;Y)` in bits for input distribution `p`; `0 log 0`
/// resolves to 0.
pub fn mutual_information(p: &InputDistribution, q: &Dmc) -> Result<f64> {
    if p.probs.len() != q.num_inputs() {
        return Err(Error::DimensionMismatch(format!(
            "distribution over {} symbols against a {}-input channel",
            p.probs.len(),
            q.num_inputs()
        )));
    }
    let mut out_dist = vec![0.0; q.num_outputs()];
    for (px, row) in p.probs.iter().zip(&q.rows) {
        for (o, &w) in out_dist.iter_mut().zip(row) {
            *o += px * w;
        }
    }
    let mut nats = 0.0;
    for (px, row) in p.probs.iter().zip(&q.rows) {
        if *px == 0.0 {
            continue;
        }
        for (&w, &oy) in row.iter().zip(&out_dist) {
            if w > 0.0 {
                nats += px * w * (w / oy).ln();
            }
        }
    }
    Ok(nats / LN_2)
}

/// Channel capacity in bits by alternating maximization (Blahut-Arimoto)
/// with the standard duality-gap stopping rule; the returned value is within
/// `tol` of C(Q).
pub fn capacity(q: &Dmc, tol: f64) -> Result<f64> {
    let all: Vec<usize> = (0..q.num_inputs()).collect();
    capacity_restricted(q, &all, tol)
}

/// Capacity with the input distribution restricted to a subset of inputs.
/// The erasure channel's `e` input is the motivating case: it is a legal
/// channel input but not used to carry information.
pub fn capacity_restricted(q: &Dmc, active_inputs: &[usize], tol: f64) -> Result<f64> {
    if tol <= 0.0 {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    if active_inputs.is_empty() || active_inputs.iter().any(|&x| x >= q.num_inputs()) {
        return Err(Error::InvalidParameter("bad input restriction".into()));
    }
    let tol_nats = tol * LN_2;
    let ny = q.num_outputs();
    let mut p = vec![1.0 / active_inputs.len() as f64; active_inputs.len()];
    let mut relative_entropies = vec![0.0; active_inputs.len()];
    for _ in 0..MAX_CAPACITY_ITERS {
        let mut out_dist = vec![0.0; ny];
        for (&px, &x) in p.iter().zip(active_inputs) {
            for (o, &w) in out_dist.iter_mut().zip(&q.rows[x]) {
                *o += px * w;
            }
        }
        for (d, &x) in relative_entropies.iter_mut().zip(active_inputs) {
            *d = q.rows[x]
                .iter()
                .zip(&out_dist)
                .filter(|(&w, _)| w > 0.0)
                .map(|(&w, &oy)| w * (w / oy).ln())
                .sum();
        }
        let upper = relative_entropies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lower: f64 = p.iter().zip(&relative_entropies).map(|(&px, &d)| px * d).sum();
        if upper - lower <= tol_nats {
            return Ok(0.5 * (upper + lower) / LN_2);
        }
        let mut norm = 0.0;
        for (px, &d) in p.iter_mut().zip(&relative_entropies) {
            *px *= (d - upper).exp();
            norm += *px;
        }
        for px in p.iter_mut() {
            *px /= norm;
        }
    }
    Err(Error::NoConvergence(MAX_CAPACITY_ITERS))
}

/// The largest `eps` such that every pair of distinct inputs shares some
/// output with probability at least `eps` under both. Zero exactly when some
/// pair has disjoint row supports; by Shannon's condition this is positive
/// iff the zero-error capacity is zero.
pub fn epsilon_q(q: &Dmc) -> f64 {
    let n = q.num_inputs();
    if n < 2 {
        return 1.0;
    }
    let mut overall = f64::INFINITY;
    for a in 0..n {
        for b in a + 1..n {
            let best = q.rows[a]
                .iter()
                .zip(&q.rows[b])
                .map(|(&x, &y)| x.min(y))
                .fold(0.0, f64::max);
            overall = overall.min(best);
        }
    }
    overall
}

/// A canonical output of a channel, if one exists: reachable from every
/// input with probability at least `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalOutput {
    pub output: usize,
    pub epsilon: f64,
}

/// Returns the output column maximizing the minimum-over-inputs entry,
/// provided that minimum is positive.
pub fn is_canonical(q: &Dmc) -> Option<CanonicalOutput> {
    let mut best: Option<CanonicalOutput> = None;
    for y in 0..q.num_outputs() {
        let col_min = (0..q.num_inputs()).map(|x| q.rows[x][y]).fold(f64::INFINITY, f64::min);
        if col_min > 0.0 && best.is_none_or(|b| col_min > b.epsilon) {
            best = Some(CanonicalOutput { output: y, epsilon: col_min });
        }
    }
    best
}

/// True iff some pair of inputs is non-adjacent (shares no output of
/// positive probability), i.e. the zero-error capacity is positive.
pub fn zero_error_positive(q: &Dmc) -> bool {
    let n = q.num_inputs();
    for a in 0..n {
        for b in a + 1..n {
            let adjacent = q.rows[a].iter().zip(&q.rows[b]).any(|(&x, &y)| x * y > 0.0);
            if !adjacent {
                return true;
            }
        }
    }
    false
}

/// Finds a non-adjacent input pair if one exists.
pub fn non_adjacent_pair(q: &Dmc) -> Option<(usize, usize)> {
    let n = q.num_inputs();
    for a in 0..n {
        for b in a + 1..n {
            let adjacent = q.rows[a].iter().zip(&q.rows[b]).any(|(&x, &y)| x * y > 0.0);
            if !adjacent {
                return Some((a, b));
            }
        }
    }
    None
}

/// Draws one channel status sample: an independent output for every input
/// symbol, each from that input's transition row.
pub fn sample_status(q: &Dmc, rng: &mut SplitMix64) -> ChannelStatusSample {
    ChannelStatusSample {
        assignments: q.rows.iter().map(|row| rng.sample_row(row)).collect(),
    }
}

/// The channel function: the output produced for `input` under a given
/// status sample.
pub fn apply_status(input: usize, status: &ChannelStatusSample) -> usize {
    status.assignments[input]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn binary_entropy_bits(p: f64) -> f64 {
        let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
        term(p) + term(1.0 - p)
    }

    #[test]
    fn erasure_rows_match_definition() {
        let q = make_erasure(2, 0.2).unwrap();
        assert_eq!(q.inputs(), &["0", "1", "e"]);
        assert_eq!(q.row(0), &[0.8, 0.0, 0.2]);
        assert_eq!(q.row(1), &[0.0, 0.8, 0.2]);
        assert_eq!(q.row(2), &[0.0, 0.0, 1.0]);
        assert!((q.prob(0, 2) - 0.2).abs() < 1e-15);
        let q3 = make_erasure(3, 0.2).unwrap();
        assert!((q3.prob(0, 3) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn erasure_rows_are_stochastic() {
        let q = make_erasure(2, 0.5).unwrap();
        for x in 0..q.num_inputs() {
            let s: f64 = q.row(x).iter().sum();
            assert!(close(s, 1.0, 1e-12));
        }
    }

    #[test]
    fn erasure_rejects_small_alphabet() {
        assert!(matches!(make_erasure(1, 0.2), Err(Error::InvalidParameter(_))));
        assert!(matches!(make_erasure(2, 1.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn q3x3_matches_definition() {
        let q = make_q3x3();
        assert_eq!(q.row(0), &[0.5, 0.5, 0.0]);
        assert_eq!(q.row(1), &[0.5, 0.0, 0.5]);
        assert_eq!(q.row(2), &[0.0, 0.5, 0.5]);
        for x in 0..3 {
            assert!(close(q.row(x).iter().sum(), 1.0, 1e-15));
        }
        // every column has a zero, so no canonical output exists
        assert!(is_canonical(&q).is_none());
    }

    #[test]
    fn uniform_noise_cases() {
        let id = make_uniform_noise(2, 1.0).unwrap();
        assert_eq!(id.transition_rows(), &vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let u = make_uniform_noise(2, 0.8).unwrap();
        assert!(close(u.prob(0, 0), 0.8, 1e-15));
        assert!(close(u.prob(0, 1), 0.2, 1e-15));
        assert!(close(u.prob(1, 0), 0.2, 1e-15));
        let u3 = make_uniform_noise(3, 0.5).unwrap();
        assert_eq!(u3.row(0), &[0.5, 0.25, 0.25]);
        for x in 0..3 {
            assert!(close(u3.row(x).iter().sum(), 1.0, 1e-15));
        }
        assert!(make_uniform_noise(3, 1.0 / 3.0).is_err());
    }

    #[test]
    fn construction_rejects_bad_rows() {
        let labels = vec!["a".to_string(), "b".to_string()];
        let bad = Dmc::new(labels.clone(), labels.clone(), vec![vec![0.9, 0.2], vec![0.5, 0.5]]);
        assert!(matches!(bad, Err(Error::NotStochastic(_))));
        let dup = Dmc::new(
            vec!["a".to_string(), "a".to_string()],
            labels,
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        );
        assert!(matches!(dup, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn kron_power_identity_case() {
        let q = make_bsc(0.1).unwrap();
        assert_eq!(kron_power(&q, 1).unwrap(), q);
    }

    #[test]
    fn kron_power_product_law() {
        let q2 = kron_power(&make_bsc(0.1).unwrap(), 2).unwrap();
        // ((0,0) -> (0,1)) = 0.9 * 0.1
        assert!(close(q2.prob(0, 1), 0.09, 1e-15));
        assert_eq!(q2.inputs()[1], "0.1");

        let e2 = kron_power(&make_erasure(2, 0.2).unwrap(), 2).unwrap();
        let x = e2.inputs().iter().position(|s| s == "0.1").unwrap();
        let y = e2.outputs().iter().position(|s| s == "e.e").unwrap();
        assert!(close(e2.prob(x, y), 0.04, 1e-15));
    }

    #[test]
    fn compose_with_identity_is_noop() {
        let q = make_q3x3();
        let id = identity(3);
        assert_eq!(compose(&q, &id).unwrap().transition_rows(), q.transition_rows());
    }

    #[test]
    fn compose_uniform_noise() {
        let u = make_uniform_noise(2, 0.8).unwrap();
        let uu = compose(&u, &u).unwrap();
        // 0.8^2 + 0.2^2 = 0.68
        assert!(close(uu.prob(0, 0), 0.68, 1e-15));
        assert!(close(uu.prob(0, 1), 0.32, 1e-15));
    }

    #[test]
    fn compose_two_q3x3_has_positive_column() {
        let q = make_q3x3();
        let w = compose(&compose(&q, &identity(3)).unwrap(), &q).unwrap();
        for y in 0..3 {
            assert!((0..3).all(|x| w.prob(x, y) > 0.0));
        }
    }

    #[test]
    fn compose_rejects_mismatched_alphabets() {
        let a = make_bsc(0.1).unwrap();
        let b = make_q3x3();
        assert!(matches!(compose(&a, &b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn kron_power_resource_limit() {
        let q = make_erasure(2, 0.2).unwrap();
        assert!(matches!(kron_power(&q, 12), Err(Error::ResourceLimit(_))));
        assert!(matches!(kron_power(&q, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn capacity_rejects_bad_tolerance() {
        assert!(matches!(capacity(&identity(2), 0.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(
            capacity_restricted(&identity(2), &[5], 1e-6),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn mutual_information_identity_and_degenerate() {
        let id = identity(2);
        let u = InputDistribution::uniform(2);
        assert!(close(mutual_information(&u, &id).unwrap(), 1.0, 1e-12));

        let flat = Dmc::from_rows(vec![vec![0.3, 0.7], vec![0.3, 0.7]]).unwrap();
        let p = InputDistribution::new(vec![0.6, 0.4]).unwrap();
        assert!(close(mutual_information(&p, &flat).unwrap(), 0.0, 1e-12));
    }

    #[test]
    fn mutual_information_bsc_closed_form() {
        // oracle: I(uniform, BSC(p)) = 1 - H2(p)
        let expected = 1.0 - binary_entropy_bits(0.1);
        assert!(close(expected, 0.531_004_406_410_718_8, 1e-12));
        let got =
            mutual_information(&InputDistribution::uniform(2), &make_bsc(0.1).unwrap()).unwrap();
        assert!(close(got, expected, 1e-12));
    }

    #[test]
    fn capacity_identity_and_bsc() {
        assert!(close(capacity(&identity(2), 1e-9).unwrap(), 1.0, 1e-9));
        let c = capacity(&make_bsc(0.1).unwrap(), 1e-6).unwrap();
        assert!(close(c, 0.531_004_406_410_718_8, 1e-6));
    }

    #[test]
    fn capacity_of_erasure_restricted_to_message_inputs() {
        let q = make_erasure(2, 0.2).unwrap();
        let c = capacity_restricted(&q, &[0, 1], 1e-6).unwrap();
        assert!(close(c, 0.8, 1e-6));
        // with the absorbing erasure input allowed, capacity cannot drop
        let c_full = capacity(&q, 1e-6).unwrap();
        assert!(c_full >= c - 1e-6);
    }

    #[test]
    fn epsilon_q_values() {
        assert!(close(epsilon_q(&make_q3x3()), 0.5, 1e-15));
        assert_eq!(epsilon_q(&identity(2)), 0.0);
        // oracle: exhaustive pair/output scan; rows share mass only on e
        let q = make_erasure(2, 0.2).unwrap();
        assert!(close(epsilon_q(&q), 0.2, 1e-15));
    }

    #[test]
    fn canonical_output_detection() {
        let q = make_erasure(2, 0.2).unwrap();
        let c = is_canonical(&q).unwrap();
        assert_eq!(c.output, 2);
        assert!(close(c.epsilon, 0.2, 1e-15));

        let b = is_canonical(&make_bsc(0.1).unwrap()).unwrap();
        assert!(close(b.epsilon, 0.1, 1e-15));

        // canonical epsilon never exceeds the pairwise overlap bound
        assert!(epsilon_q(&q) >= c.epsilon - 1e-15);
    }

    #[test]
    fn zero_error_dichotomy() {
        assert!(zero_error_positive(&identity(2)));
        assert!(!zero_error_positive(&make_erasure(2, 0.2).unwrap()));
        assert!(!zero_error_positive(&make_q3x3()));
    }

    #[test]
    fn status_sampling_deterministic_channel() {
        let id = identity(3);
        let mut rng = SplitMix64::new(5);
        let s = sample_status(&id, &mut rng);
        assert_eq!(s.assignments, vec![0, 1, 2]);
        assert_eq!(apply_status(1, &s), 1);
    }

    #[test]
    fn status_sampling_erasure_joint_probability() {
        let q = make_erasure(2, 0.5).unwrap();
        let mut rng = SplitMix64::new(11);
        let trials = 100_000;
        let mut both_erased = 0u32;
        for _ in 0..trials {
            let s = sample_status(&q, &mut rng);
            if s.assignments[0] == 2 && s.assignments[1] == 2 {
                both_erased += 1;
            }
        }
        // P(z0 = e and z1 = e) = eps^2 = 0.25; 4 sigma of a binomial
        let p = 0.25;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!(close(both_erased as f64 / trials as f64, p, 4.0 * sigma));
    }

    #[test]
    fn status_sampling_reproduces_channel_law() {
        let q = make_bsc(0.1).unwrap();
        let mut rng = SplitMix64::new(9);
        let trials = 100_000;
        let mut counts = [0u32; 2];
        for _ in 0..trials {
            let s = sample_status(&q, &mut rng);
            counts[apply_status(0, &s)] += 1;
        }
        for (y, &c) in counts.iter().enumerate() {
            let p = q.prob(0, y);
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            assert!(close(c as f64 / trials as f64, p, 4.0 * sigma));
        }
    }

    #[test]
    fn json_round_trip_and_builtin_grammar() {
        let q = make_erasure(2, 0.25).unwrap();
        let back = Dmc::from_json_str(&q.to_json_string()).unwrap();
        assert_eq!(q, back);

        assert_eq!(Dmc::builtin("bsc(0.1)").unwrap(), make_bsc(0.1).unwrap());
        assert_eq!(Dmc::builtin("q3x3").unwrap(), make_q3x3());
        assert_eq!(Dmc::builtin(" uniform(3, 0.5) ").unwrap(), make_uniform_noise(3, 0.5).unwrap());
        assert_eq!(Dmc::builtin("identity(2)").unwrap(), identity(2));
        assert!(matches!(Dmc::builtin("dmc(1,2)"), Err(Error::Parse(_))));
        assert!(matches!(Dmc::builtin("bsc(x)"), Err(Error::Parse(_))));
    }
}
