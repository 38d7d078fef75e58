//! CSV reproduction of the batched-code experiment grids over line length.
//!
//! The three grids share the packet-erasure setting `eps = 0.2`, `q = 256`,
//! `T = 1024` (packets of 8192 bits) and lengths up to 1000:
//!
//! * `era1` — achievable BATS rate and the erasure upper bound for fixed
//!   `M = N` in {2,3,4}.
//! * `era3` — the optimal inner block-length `N*` per length, for
//!   `M` in {2,4,8,16,32}.
//! * `era2` — rate and upper bound evaluated at `N*`, for `M` in
//!   {2,4,8,16}.

use crate::{CliError, CliResult};
use linebatch::bats::{self, RankChain};
use linebatch::bounds::{self, BatchParams};
use linebatch::sig12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    Era1,
    Era2,
    Era3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FigureSpec {
    pub id: FigureId,
    pub epsilon: f64,
    pub q: u32,
    pub packet_len: usize,
    pub max_hops: usize,
}

impl Default for FigureSpec {
    fn default() -> Self {
        FigureSpec { id: FigureId::Era1, epsilon: 0.2, q: 256, packet_len: 1024, max_hops: 1000 }
    }
}

const ERA1_SIZES: [usize; 3] = [2, 3, 4];
const ERA3_SIZES: [usize; 5] = [2, 4, 8, 16, 32];
const ERA2_SIZES: [usize; 4] = [2, 4, 8, 16];

fn validate(spec: &FigureSpec) -> CliResult<f64> {
    if !(spec.epsilon > 0.0 && spec.epsilon < 1.0) {
        return Err(CliError::Usage(format!("epsilon {} not in (0,1)", spec.epsilon)));
    }
    if spec.max_hops == 0 {
        return Err(CliError::Usage("lmax must be at least 1".into()));
    }
    Ok(spec.packet_len as f64 * (spec.q as f64).log2())
}

/// `BATS_L(M,N)` for every length `0..=max_hops` in one chain sweep.
fn rate_table(m: usize, n: usize, spec: &FigureSpec) -> CliResult<Vec<f64>> {
    let chain = RankChain::new(m, n, spec.epsilon, spec.q)?;
    let t = spec.packet_len as f64;
    let log_alphabet = t * (spec.q as f64).log2();
    let scale = (1.0 - m as f64 / t) / n as f64 * log_alphabet;
    Ok(chain
        .expectation_table(spec.max_hops)
        .into_iter()
        .map(|e| e * scale)
        .collect())
}

/// Per-length argmax of the rate over `N`, scanning each length's own
/// window (ties go to the smaller N). Returns `(n_star, rate)` per length.
fn optimal_n_sweep(m: usize, spec: &FigureSpec) -> CliResult<Vec<(usize, f64)>> {
    let window_max = bats::optimal_n_window(spec.max_hops, spec.epsilon, spec.q);
    let tables: Vec<Vec<f64>> =
        (1..=window_max).map(|n| rate_table(m, n, spec)).collect::<CliResult<_>>()?;
    (1..=spec.max_hops)
        .map(|hops| {
            let window = bats::optimal_n_window(hops, spec.epsilon, spec.q).min(window_max);
            let mut best = (1usize, f64::NEG_INFINITY);
            for n in 1..=window {
                let rate = tables[n - 1][hops];
                if rate > best.1 {
                    best = (n, rate);
                }
            }
            Ok(best)
        })
        .collect()
}

pub fn figure_csv(spec: &FigureSpec) -> CliResult<String> {
    let alphabet_bits = validate(spec)?;
    match spec.id {
        FigureId::Era1 => {
            let rates: Vec<Vec<f64>> =
                ERA1_SIZES.iter().map(|&s| rate_table(s, s, spec)).collect::<CliResult<_>>()?;
            let params: Vec<BatchParams> = ERA1_SIZES
                .iter()
                .map(|&s| BatchParams::erasure(s, s, alphabet_bits))
                .collect::<Result<_, _>>()?;
            let mut csv = String::from("L,bats_mn2,bats_mn3,bats_mn4,ub_mn2,ub_mn3,ub_mn4\n");
            for hops in 1..=spec.max_hops {
                let mut row = format!("{hops}");
                for r in &rates {
                    row.push_str(&format!(",{}", sig12(r[hops])));
                }
                for p in &params {
                    row.push_str(&format!(",{}", sig12(bounds::pec_ub(p, hops, spec.epsilon))));
                }
                csv.push_str(&row);
                csv.push('\n');
            }
            Ok(csv)
        }
        FigureId::Era3 => {
            let sweeps: Vec<Vec<(usize, f64)>> =
                ERA3_SIZES.iter().map(|&m| optimal_n_sweep(m, spec)).collect::<CliResult<_>>()?;
            let mut csv = String::from("L,nstar_m2,nstar_m4,nstar_m8,nstar_m16,nstar_m32\n");
            for hops in 1..=spec.max_hops {
                let mut row = format!("{hops}");
                for sweep in &sweeps {
                    row.push_str(&format!(",{}", sweep[hops - 1].0));
                }
                csv.push_str(&row);
                csv.push('\n');
            }
            Ok(csv)
        }
        FigureId::Era2 => {
            let sweeps: Vec<Vec<(usize, f64)>> =
                ERA2_SIZES.iter().map(|&m| optimal_n_sweep(m, spec)).collect::<CliResult<_>>()?;
            let mut csv = String::from(
                "L,bats_m2,bats_m4,bats_m8,bats_m16,ub_m2,ub_m4,ub_m8,ub_m16\n",
            );
            for hops in 1..=spec.max_hops {
                let mut row = format!("{hops}");
                for sweep in &sweeps {
                    row.push_str(&format!(",{}", sig12(sweep[hops - 1].1)));
                }
                for (&m, sweep) in ERA2_SIZES.iter().zip(&sweeps) {
                    let n_star = sweep[hops - 1].0;
                    let p = BatchParams::erasure(m, n_star, alphabet_bits)?;
                    row.push_str(&format!(",{}", sig12(bounds::pec_ub(&p, hops, spec.epsilon))));
                }
                csv.push_str(&row);
                csv.push('\n');
            }
            Ok(csv)
        }
    }
}
