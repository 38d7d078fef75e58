//! Rank-distribution Markov chain for random linear recoding on a line
//! network of packet erasure channels, and the BATS achievable rate.
//!
//! A batch of `M` packets recoded with `N` random linear combinations per
//! hop has a coefficient-matrix rank that evolves as a Markov chain on
//! `{0..M}`. The transition matrix is lower-triangular and admits a
//! closed-form eigendecomposition, which this module builds explicitly.

use crate::gf::Field;
use crate::matrix::{self, Mat};
use crate::{Error, Result};

/// `prod_{k=0}^{r-1} (1 - q^(k-m))`: the probability that `r` independent
/// uniform vectors in `GF(q)^m` are linearly independent. `zeta(0, m, q) = 1`.
pub fn zeta(r: usize, m: usize, q: u32) -> Result<f64> {
    if r > m {
        return Err(Error::Domain(format!("zeta needs r <= m, got r={r}, m={m}")));
    }
    debug_assert!(q >= 2);
    let inv_q = 1.0 / q as f64;
    let mut out = 1.0;
    for k in 0..r {
        out *= 1.0 - inv_q.powi((m - k) as i32);
    }
    Ok(out)
}

/// Probability that a uniform `i x k` matrix over `GF(q)` has rank exactly
/// `j`; zero when `j > min(i, k)`.
pub fn zeta_rank(j: usize, i: usize, k: usize, q: u32) -> f64 {
    if j > i.min(k) {
        return 0.0;
    }
    let zi = zeta(j, i, q).expect("j <= i");
    let zk = zeta(j, k, q).expect("j <= k");
    let zj = zeta(j, j, q).expect("trivial");
    let inv_q_pow = (1.0 / q as f64).powi(((i - j) * (k - j)) as i32);
    zi * zk / zj * inv_q_pow
}

/// Binomial pmf `C(n,k) p^k (1-p)^(n-k)`; log-gamma route for large n.
fn binomial_pmf(k: usize, n: usize, p: f64) -> f64 {
    if n <= 60 {
        let mut c = 1.0;
        for t in 0..k {
            c = c * (n - t) as f64 / (t + 1) as f64;
        }
        c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
    } else {
        if p == 0.0 {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        if p == 1.0 {
            return if k == n { 1.0 } else { 0.0 };
        }
        let ln_fact = |m: usize| -> f64 { (1..=m).map(|t| (t as f64).ln()).sum() };
        (ln_fact(n) - ln_fact(k) - ln_fact(n - k)
            + k as f64 * p.ln()
            + (n - k) as f64 * (1.0 - p).ln())
        .exp()
    }
}

/// A probability vector over batch ranks `0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankPmf {
    probs: Vec<f64>,
}

impl RankPmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("empty pmf".into()));
        }
        if probs.iter().any(|&p| p < 0.0) {
            return Err(Error::NotStochastic("negative rank probability".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::NotStochastic(format!("rank pmf sums to {sum}")));
        }
        let mut probs = probs;
        for p in probs.iter_mut() {
            *p /= sum;
        }
        Ok(RankPmf { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn max_rank(&self) -> usize {
        self.probs.len() - 1
    }

    /// `E[rank] = sum_j j pi(j)`.
    pub fn expected_rank(&self) -> f64 {
        self.probs.iter().enumerate().map(|(j, &p)| j as f64 * p).sum()
    }

    /// Total-variation distance to another pmf of the same support.
    pub fn tv_distance(&self, other: &[f64]) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(other)
            .map(|(&a, &b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// The rank Markov chain for batch size `M`, inner block-length `N`,
/// erasure probability `epsilon` and field order `q`, with its
/// eigendecomposition `P = V diag(lambda) V^-1` attached.
#[derive(Debug, Clone)]
pub struct RankChain {
    pub batch_size: usize,
    pub inner_len: usize,
    pub epsilon: f64,
    pub q: u32,
    transition: Mat,
    eigenvalues: Vec<f64>,
    eigvec: Mat,
    eigvec_inv: Mat,
}

impl RankChain {
    pub fn new(batch_size: usize, inner_len: usize, epsilon: f64, q: u32) -> Result<Self> {
        if batch_size < 1 || inner_len < 1 {
            return Err(Error::InvalidParameter("batch size and inner length must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidParameter(format!("epsilon {epsilon} not in [0,1]")));
        }
        Field::new(q)?; // validate the field order only
        let (m, n) = (batch_size, inner_len);
        let dim = m + 1;
        let pmf: Vec<f64> = (0..=n).map(|k| binomial_pmf(k, n, 1.0 - epsilon)).collect();

        let mut transition = vec![vec![0.0; dim]; dim];
        for (i, row) in transition.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate().take(i + 1) {
                *cell = (j..=n).map(|k| pmf[k] * zeta_rank(j, i, k, q)).sum();
            }
        }

        let eigenvalues: Vec<f64> = (0..dim)
            .map(|j| (j..=n).map(|k| pmf[k] * zeta(j, k, q).unwrap_or(0.0)).sum())
            .collect();
        let mut eigvec = vec![vec![0.0; dim]; dim];
        for (i, row) in eigvec.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate().take(i + 1) {
                *cell = zeta(j, i, q).expect("j <= i");
            }
        }
        // V is lower-triangular with positive diagonal: invert by forward
        // substitution, column by column.
        let mut eigvec_inv = vec![vec![0.0; dim]; dim];
        for j in 0..dim {
            eigvec_inv[j][j] = 1.0 / eigvec[j][j];
            for i in j + 1..dim {
                let s: f64 = (j..i).map(|t| eigvec[i][t] * eigvec_inv[t][j]).sum();
                eigvec_inv[i][j] = -s / eigvec[i][i];
            }
        }

        Ok(RankChain {
            batch_size,
            inner_len,
            epsilon,
            q,
            transition,
            eigenvalues,
            eigvec,
            eigvec_inv,
        })
    }

    pub fn transition(&self) -> &Mat {
        &self.transition
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigvec(&self) -> &Mat {
        &self.eigvec
    }

    pub fn eigvec_inv(&self) -> &Mat {
        &self.eigvec_inv
    }

    /// Rank distribution at node 0: all batches have full rank `M`.
    pub fn initial_pmf(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.batch_size + 1];
        v[self.batch_size] = 1.0;
        v
    }

    /// Advances a rank distribution by one hop.
    pub fn step(&self, pmf: &[f64]) -> Vec<f64> {
        let dim = self.batch_size + 1;
        let mut out = vec![0.0; dim];
        for (i, &p) in pmf.iter().enumerate() {
            if p != 0.0 {
                for (o, &t) in out.iter_mut().zip(&self.transition[i]) {
                    *o += p * t;
                }
            }
        }
        // keep stochastic against rounding drift; larger drift is a bug
        let sum: f64 = out.iter().sum();
        if (sum - 1.0).abs() < 1e-12 {
            for o in out.iter_mut() {
                *o /= sum;
            }
        }
        out
    }

    /// Rank distribution after `hops` links by iterated multiplication.
    pub fn rank_pmf_at(&self, hops: usize) -> RankPmf {
        let mut pmf = self.initial_pmf();
        for _ in 0..hops {
            pmf = self.step(&pmf);
        }
        RankPmf::new(pmf).expect("propagation preserves stochasticity")
    }

    /// Rank distribution after `hops` links through the eigendecomposition:
    /// `pi_0 V Lambda^hops V^-1`.
    pub fn rank_pmf_eigen(&self, hops: usize) -> Vec<f64> {
        let dim = self.batch_size + 1;
        let top = &self.eigvec[self.batch_size];
        let mut out = vec![0.0; dim];
        for i in 0..dim {
            let scale = top[i] * self.eigenvalues[i].powi(hops as i32);
            if scale != 0.0 {
                for (o, &u) in out.iter_mut().zip(&self.eigvec_inv[i]) {
                    *o += scale * u;
                }
            }
        }
        out
    }

    /// `E[rank]` after `hops` links via the eigendecomposition.
    pub fn expected_rank_eigen(&self, hops: usize) -> f64 {
        self.rank_pmf_eigen(hops)
            .iter()
            .enumerate()
            .map(|(j, &p)| j as f64 * p)
            .sum()
    }

    /// `E[rank]` after each of `0..=max_hops` links, in one sweep.
    pub fn expectation_table(&self, max_hops: usize) -> Vec<f64> {
        let mut pmf = self.initial_pmf();
        let expect = |v: &[f64]| v.iter().enumerate().map(|(j, &p)| j as f64 * p).sum::<f64>();
        let mut out = Vec::with_capacity(max_hops + 1);
        out.push(expect(&pmf));
        for _ in 0..max_hops {
            pmf = self.step(&pmf);
            out.push(expect(&pmf));
        }
        out
    }

    /// Achievable rate of the batched code in bits per channel use, for
    /// packets of `packet_len` field symbols: the coefficient-vector
    /// overhead costs a factor `1 - M/T`.
    pub fn rate(&self, hops: usize, packet_len: usize) -> Result<f64> {
        rate_from_expected_rank(
            self.batch_size,
            self.inner_len,
            self.q,
            packet_len,
            self.rank_pmf_at(hops).expected_rank(),
        )
    }
}

fn rate_from_expected_rank(
    m: usize,
    n: usize,
    q: u32,
    packet_len: usize,
    expected_rank: f64,
) -> Result<f64> {
    if m >= packet_len {
        return Err(Error::InvalidParameter(format!(
            "batch size {m} must be smaller than the packet length {packet_len}"
        )));
    }
    let log_alphabet = packet_len as f64 * (q as f64).log2();
    Ok((1.0 - m as f64 / packet_len as f64) * expected_rank / n as f64 * log_alphabet)
}

/// `BATS_L(M,N)` in bits per use.
pub fn bats_rate(
    m: usize,
    n: usize,
    hops: usize,
    epsilon: f64,
    q: u32,
    packet_len: usize,
) -> Result<f64> {
    if m >= packet_len {
        return Err(Error::InvalidParameter(format!(
            "batch size {m} must be smaller than the packet length {packet_len}"
        )));
    }
    RankChain::new(m, n, epsilon, q)?.rate(hops, packet_len)
}

/// Second-largest eigenvalue of the rank chain in closed form:
/// `1 - (eps + (1-eps)/q)^N`.
pub fn lambda1_closed_form(n: usize, epsilon: f64, q: u32) -> f64 {
    1.0 - (epsilon + (1.0 - epsilon) / q as f64).powi(n as i32)
}

/// Scan window for the optimal inner block-length: the optimum grows like
/// `ln L / ln(1/lambda-base)`, so an 8x window with slack is ample.
pub fn optimal_n_window(hops: usize, epsilon: f64, q: u32) -> usize {
    let base = epsilon + (1.0 - epsilon) / q as f64;
    let ln_l = (hops.max(1) as f64).ln();
    (8.0 * ln_l / (1.0 / base).ln()).ceil() as usize + 8
}

/// Maximizes `BATS_L(M,N)` over the inner block-length `N`; returns the
/// argmax (smallest on ties) and the rate there.
pub fn optimal_n_for_bats(
    m: usize,
    hops: usize,
    epsilon: f64,
    q: u32,
    packet_len: usize,
) -> Result<(usize, f64)> {
    if m >= packet_len {
        return Err(Error::InvalidParameter(format!(
            "batch size {m} must be smaller than the packet length {packet_len}"
        )));
    }
    let cap = optimal_n_window(hops, epsilon, q);
    let mut best = (1usize, f64::NEG_INFINITY);
    for n in 1..=cap {
        let rate = bats_rate(m, n, hops, epsilon, q, packet_len)?;
        if rate > best.1 {
            best = (n, rate);
        }
    }
    Ok(best)
}

#[allow(dead_code)]
pub(crate) fn eigen_reconstruction_residual(chain: &RankChain) -> f64 {
    let dim = chain.batch_size + 1;
    let mut lam = vec![vec![0.0; dim]; dim];
    for (j, row) in lam.iter_mut().enumerate() {
        row[j] = chain.eigenvalues[j];
    }
    let rebuilt = matrix::matmul(&matrix::matmul(&chain.eigvec, &lam), &chain.eigvec_inv);
    matrix::inf_norm_diff(&rebuilt, &chain.transition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix;
    use crate::rng::SplitMix64;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn zeta_values() {
        assert_eq!(zeta(0, 5, 2).unwrap(), 1.0);
        assert!(close(zeta(1, 1, 2).unwrap(), 0.5, 1e-15));
        // (1 - 1/4)(1 - 1/2) = 0.375
        assert!(close(zeta(2, 2, 2).unwrap(), 0.375, 1e-15));
        assert!(zeta(3, 2, 2).is_err());
    }

    #[test]
    fn zeta_rank_one_by_one() {
        assert!(close(zeta_rank(0, 1, 1, 2), 0.5, 1e-15));
        assert!(close(zeta_rank(1, 1, 1, 2), 0.5, 1e-15));
        assert_eq!(zeta_rank(2, 1, 3, 2), 0.0);
    }

    #[test]
    fn zeta_rank_sums_to_one() {
        for &(i, k, q) in &[(3usize, 5usize, 2u32), (4, 4, 3), (2, 6, 256)] {
            let total: f64 = (0..=i.min(k)).map(|j| zeta_rank(j, i, k, q)).sum();
            assert!(close(total, 1.0, 1e-12), "i={i} k={k} q={q}: {total}");
        }
    }

    #[test]
    fn zeta_rank_against_sampled_ranks() {
        // oracle: rank of uniform random matrices by Gaussian elimination
        let q = 2u32;
        let field = Field::new(q).unwrap();
        let mut rng = SplitMix64::new(17);
        let (i, k) = (3usize, 4usize);
        let trials = 100_000usize;
        let mut counts = vec![0u32; i.min(k) + 1];
        for _ in 0..trials {
            let m: Vec<Vec<u16>> = (0..i)
                .map(|_| (0..k).map(|_| field.uniform(&mut rng)).collect())
                .collect();
            counts[field.rank(&m)] += 1;
        }
        for (j, &c) in counts.iter().enumerate() {
            let p = zeta_rank(j, i, k, q);
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            assert!(
                close(c as f64 / trials as f64, p, 4.0 * sigma + 1e-9),
                "rank {j}: {} vs {p}",
                c as f64 / trials as f64
            );
        }
    }

    #[test]
    fn transition_matrix_m1_n1() {
        let chain = RankChain::new(1, 1, 0.5, 2).unwrap();
        let p = chain.transition();
        assert!(close(p[0][0], 1.0, 1e-15));
        assert!(close(p[0][1], 0.0, 1e-15));
        assert!(close(p[1][0], 0.75, 1e-15));
        assert!(close(p[1][1], 0.25, 1e-15));
        assert!(close(chain.eigenvalues()[1], 0.25, 1e-15));
        assert!(close(chain.eigenvalues()[1], lambda1_closed_form(1, 0.5, 2), 1e-15));
    }

    #[test]
    fn transition_rows_are_stochastic_on_grid() {
        for &m in &[1usize, 2, 4, 8] {
            for n in 1..=6 {
                for &q in &[2u32, 256] {
                    for &eps in &[0.2, 0.5] {
                        let chain = RankChain::new(m, n, eps, q).unwrap();
                        matrix::check_row_stochastic(chain.transition(), 1e-9).unwrap();
                        // lower-triangular
                        for i in 0..=m {
                            for j in i + 1..=m {
                                assert_eq!(chain.transition()[i][j], 0.0);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn long_block_binomials_stay_stochastic() {
        // exercises the log-factorial route for N > 60
        let chain = RankChain::new(1, 200, 0.3, 2).unwrap();
        matrix::check_row_stochastic(chain.transition(), 1e-9).unwrap();
        assert!(close(chain.eigenvalues()[1], lambda1_closed_form(200, 0.3, 2), 1e-9));
    }

    #[test]
    fn eigenvalues_strictly_decreasing_when_m_at_most_n() {
        for &(m, n) in &[(2usize, 2usize), (4, 6), (8, 8)] {
            for &q in &[2u32, 256] {
                let chain = RankChain::new(m, n, 0.2, q).unwrap();
                let lam = chain.eigenvalues();
                for j in 0..m {
                    assert!(lam[j] > lam[j + 1], "lambda not decreasing at {j}: {lam:?}");
                }
            }
        }
    }

    #[test]
    fn eigendecomposition_reconstructs_transition() {
        for &(m, n) in &[(4usize, 4usize), (8, 8), (3, 1)] {
            let chain = RankChain::new(m, n, 0.3, 256).unwrap();
            assert!(eigen_reconstruction_residual(&chain) < 1e-12);
        }
    }

    #[test]
    fn eigvec_inverse_is_inverse() {
        for m in [4usize, 8, 16] {
            let chain = RankChain::new(m, m, 0.2, 256).unwrap();
            let prod = matrix::matmul(chain.eigvec(), chain.eigvec_inv());
            assert!(matrix::inf_norm_diff(&prod, &matrix::identity(m + 1)) < 1e-9);
            // diagonal of V^-1 is 1/zeta_i^i
            for i in 0..=m {
                let z = zeta(i, i, 256).unwrap();
                assert!(close(chain.eigvec_inv()[i][i], 1.0 / z, 1e-9));
            }
        }
    }

    #[test]
    fn rank_pmf_examples() {
        let chain = RankChain::new(1, 1, 0.5, 2).unwrap();
        assert_eq!(chain.rank_pmf_at(0).probs(), &[0.0, 1.0]);
        // rank-1 mass decays as 0.25^L
        let pmf3 = chain.rank_pmf_at(3);
        assert!(close(pmf3.probs()[1], 0.015625, 1e-15));
        let pmf2 = chain.rank_pmf_at(2);
        assert!(close(pmf2.expected_rank(), 0.0625, 1e-15));
    }

    #[test]
    fn expected_rank_direct_cases() {
        let full = RankPmf::new(vec![0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(full.expected_rank(), 4.0);
        let uniform = RankPmf::new(vec![1.0 / 3.0; 3]).unwrap();
        assert!(close(uniform.expected_rank(), 1.0, 1e-15));
    }

    #[test]
    fn eigen_and_power_routes_agree() {
        let chain = RankChain::new(8, 8, 0.2, 256).unwrap();
        let by_power = chain.rank_pmf_at(100);
        let by_eigen = chain.rank_pmf_eigen(100);
        for (a, b) in by_power.probs().iter().zip(&by_eigen) {
            assert!(close(*a, *b, 1e-9));
        }
        assert!(close(chain.expected_rank_eigen(100), by_power.expected_rank(), 1e-9));
    }

    #[test]
    fn pmf_stays_normalized_for_long_lines() {
        let chain = RankChain::new(4, 4, 0.2, 2).unwrap();
        let pmf = chain.rank_pmf_at(10_000);
        assert!(pmf.probs().iter().all(|&p| p >= 0.0));
        assert!(close(pmf.probs().iter().sum(), 1.0, 1e-9));
    }

    #[test]
    fn bats_rate_small_case() {
        // E[rank after 2 hops] = 0.0625; (1 - 1/4) * 0.0625 * 4 * log2(2)
        let r = bats_rate(1, 1, 2, 0.5, 2, 4).unwrap();
        assert!(close(r, 0.1875, 1e-15));
        assert!(bats_rate(4, 1, 2, 0.5, 2, 4).is_err());
    }

    #[test]
    fn bats_rate_full_rank_limit() {
        // nearly noiseless, big field: E[rank] ~ M after one hop with N >= M
        let m = 3;
        let t = 1024;
        let r = bats_rate(m, 3, 1, 1e-9, 256, t).unwrap();
        let ideal = (1.0 - m as f64 / t as f64) * (m as f64 / 3.0) * t as f64 * 8.0;
        // E[rank] misses M by O(1/q) at N = M
        assert!((r - ideal).abs() / ideal < 1e-2);
    }

    #[test]
    fn lambda1_closed_form_value() {
        assert!(close(lambda1_closed_form(2, 0.2, 256), 0.958740234375, 1e-15));
        assert_eq!(lambda1_closed_form(3, 1.0, 256), 0.0);
    }

    #[test]
    fn lambda1_matches_chain_on_grid() {
        for &m in &[1usize, 2, 4, 8] {
            for n in 1..=8 {
                for &q in &[2u32, 256] {
                    for &eps in &[0.2, 0.5] {
                        let chain = RankChain::new(m, n, eps, q).unwrap();
                        let closed = lambda1_closed_form(n, eps, q);
                        assert!(
                            close(chain.eigenvalues()[1], closed, 1e-9),
                            "m={m} n={n} q={q} eps={eps}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn optimal_n_is_a_local_and_window_maximum() {
        let (n_star, rate) = optimal_n_for_bats(2, 100, 0.2, 256, 1024).unwrap();
        for n in [n_star.saturating_sub(1).max(1), n_star + 1] {
            let r = bats_rate(2, n, 100, 0.2, 256, 1024).unwrap();
            assert!(rate >= r);
        }
        // at L = 1 the rate decreases in N, so the optimum is N = 1
        let (n1, _) = optimal_n_for_bats(2, 1, 0.2, 256, 1024).unwrap();
        assert_eq!(n1, 1);
    }

    #[test]
    fn expectation_ratio_converges_to_lambda1_power() {
        // E[pi_L] = Theta(lambda_1^L): the ratio at L=500 and L=1000 agrees
        // within 1% after normalizing by lambda_1^L
        let chain = RankChain::new(4, 4, 0.2, 256).unwrap();
        let lam1 = chain.eigenvalues()[1];
        let table = chain.expectation_table(1000);
        let r500 = table[500] / lam1.powi(500);
        let r1000 = table[1000] / lam1.powi(1000);
        assert!((r500 - r1000).abs() / r500 < 0.01);
        assert!(r1000 > 0.0);
    }
}
