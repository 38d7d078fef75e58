//! Command implementations for the `linebatch` binary.
//!
//! Four subcommands: `bounds` sweeps the closed-form bounds over the line
//! length, `figure` reproduces the batched-code experiment grids as CSV,
//! `simulate` drives the Monte Carlo and exact engines, and `reduce` builds
//! and verifies whole-line reduction plans.
//!
//! Usage problems (unknown or missing flags, malformed values) exit with
//! code 2; domain and runtime failures exit with code 1. All CSV output
//! uses `.` decimals with 12 significant digits and is byte-identical
//! across runs for identical flags and seed.

use linebatch::bats::RankChain;
use linebatch::bounds::{self, BatchParams};
use linebatch::channel::{self, Dmc};
use linebatch::reduction;
use linebatch::sig12;
use linebatch::sim::{self, MatrixPlan, RepetitionScheme, RlncConfig};
use std::collections::BTreeMap;
use std::fmt;

pub mod figures;

/// Environment variable selecting the simulator thread count
/// (0 or unset: available parallelism).
pub const THREADS_ENV: &str = "LINEBATCH_THREADS";

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: exit code 2.
    Usage(String),
    /// Domain or runtime failure: exit code 1.
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<linebatch::Error> for CliError {
    fn from(e: linebatch::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Parsed `--flag value` pairs. Flags are unique; every command checks for
/// leftovers so typos fail loudly.
pub struct Flags {
    values: BTreeMap<String, String>,
}

impl Flags {
    pub fn parse(args: &[String]) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        let mut it = args.iter();
        while let Some(arg) = it.next() {
            let name = arg
                .strip_prefix("--")
                .ok_or_else(|| CliError::Usage(format!("expected a --flag, got `{arg}`")))?;
            let value = it
                .next()
                .ok_or_else(|| CliError::Usage(format!("flag --{name} needs a value")))?;
            if values.insert(name.to_string(), value.clone()).is_some() {
                return Err(CliError::Usage(format!("flag --{name} given twice")));
            }
        }
        Ok(Flags { values })
    }

    pub fn take(&mut self, name: &str) -> Option<String> {
        self.values.remove(name)
    }

    pub fn require(&mut self, name: &str) -> CliResult<String> {
        self.take(name)
            .ok_or_else(|| CliError::Usage(format!("missing required flag --{name}")))
    }

    pub fn require_parsed<T: std::str::FromStr>(&mut self, name: &str) -> CliResult<T> {
        parse_flag(name, &self.require(name)?)
    }

    pub fn parsed_or<T: std::str::FromStr>(&mut self, name: &str, default: T) -> CliResult<T> {
        match self.take(name) {
            Some(v) => parse_flag(name, &v),
            None => Ok(default),
        }
    }

    pub fn finish(self) -> CliResult<()> {
        match self.values.into_keys().next() {
            Some(stray) => Err(CliError::Usage(format!("unknown flag --{stray}"))),
            None => Ok(()),
        }
    }
}

fn parse_flag<T: std::str::FromStr>(name: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("flag --{name}: cannot parse `{value}`")))
}

/// Inclusive range of line lengths: `7` or `1..100`.
pub fn parse_length_range(text: &str) -> CliResult<(usize, usize)> {
    let parse = |s: &str| parse_flag::<usize>("L", s);
    match text.split_once("..") {
        Some((a, b)) => {
            let (lo, hi) = (parse(a)?, parse(b)?);
            if lo == 0 || hi < lo {
                return Err(CliError::Usage(format!("flag --L: empty range `{text}`")));
            }
            Ok((lo, hi))
        }
        None => {
            let l = parse(text)?;
            if l == 0 {
                return Err(CliError::Usage("flag --L: must be at least 1".into()));
            }
            Ok((l, l))
        }
    }
}

/// Parses a comma-separated link list. Each entry is a built-in
/// `name(args)`, optionally repeated with an `xK` suffix
/// (`erasure(2,0.2)x10`), or `@path` loading a JSON channel definition.
pub fn parse_links(text: &str) -> CliResult<Vec<Dmc>> {
    let entries = split_top_level(text);
    if entries.is_empty() {
        return Err(CliError::Usage("empty link list".into()));
    }
    let mut out = Vec::new();
    for entry in entries {
        let entry = entry.trim();
        if entry.is_empty() {
            return Err(CliError::Usage("empty link entry".into()));
        }
        let (base, copies) = split_repeat_suffix(entry);
        let channel = if let Some(path) = base.strip_prefix('@') {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Runtime(format!("{path}: {e}")))?;
            Dmc::from_json_str(&text)
                .map_err(|e| CliError::Runtime(format!("{path}: {e}")))?
        } else {
            Dmc::builtin(base).map_err(|e| CliError::Runtime(e.to_string()))?
        };
        for _ in 0..copies {
            out.push(channel.clone());
        }
    }
    Ok(out)
}

fn split_top_level(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                out.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if start < text.len() {
        out.push(&text[start..]);
    }
    out
}

/// Recognizes a trailing `xK` repetition, provided the prefix itself parses
/// as a channel (so the built-in name `q3x3` survives).
fn split_repeat_suffix(entry: &str) -> (&str, usize) {
    if let Some(pos) = entry.rfind('x') {
        let digits = &entry[pos + 1..];
        let prefix = &entry[..pos];
        if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) && !prefix.is_empty() {
            let prefix_parses =
                prefix.starts_with('@') || Dmc::builtin(prefix).is_ok();
            if prefix_parses {
                return (prefix, digits.parse().unwrap_or(0).max(1));
            }
        }
    }
    (entry, 1)
}

fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()).unwrap_or(0)
}

fn write_output(path: Option<&str>, content: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(CliError::from),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// `bounds`: one CSV row per line length with the four closed-form curves.
pub fn cmd_bounds(mut flags: Flags) -> CliResult<String> {
    let epsilon: f64 = flags.require_parsed("erasure")?;
    let batch_size: usize = flags.require_parsed("M")?;
    let inner_len: usize = flags.require_parsed("N")?;
    let (lo, hi) = parse_length_range(&flags.require("L")?)?;
    let packet_len: usize = flags.parsed_or("T", 1024)?;
    let q: u32 = flags.parsed_or("q", 256)?;
    let default_bits = packet_len as f64 * (q as f64).log2();
    let alphabet_bits: f64 = flags.parsed_or("alphabet-bits", default_bits)?;
    let out = flags.take("out");
    flags.finish()?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(CliError::Usage(format!("flag --erasure: {epsilon} not in (0,1)")));
    }

    let params = BatchParams::erasure(batch_size, inner_len, alphabet_bits)?;
    let min_cut = bounds::min_cut_erasure(epsilon, alphabet_bits);
    let mut csv = String::from("L,pec_ub,canonical_ub,general_ub,rep_rate\n");
    let mut loose_rows = 0usize;
    for hops in lo..=hi {
        let pec = bounds::pec_ub(&params, hops, epsilon);
        let canonical = bounds::canonical_ub(&params, hops, epsilon);
        let general = bounds::general_ub(&params, hops, epsilon);
        let rep = bounds::rep_rate(inner_len, hops, epsilon, alphabet_bits);
        if bounds::exceeds_min_cut(pec, min_cut) {
            loose_rows += 1;
        }
        csv.push_str(&format!(
            "{hops},{},{},{},{}\n",
            sig12(pec),
            sig12(canonical),
            sig12(general),
            sig12(rep)
        ));
    }
    if loose_rows > 0 {
        eprintln!(
            "note: pec_ub exceeds the min-cut {} on {loose_rows} row(s); \
             the bound is loose there but still valid",
            sig12(min_cut)
        );
    }
    write_output(out.as_deref(), &csv)?;
    Ok(csv)
}

/// `figure`: reproduces an experiment grid (`era1`, `era2`, `era3`) as CSV.
pub fn cmd_figure(mut flags: Flags) -> CliResult<String> {
    let id = flags.require("id")?;
    let out = flags.require("out")?;
    let mut spec = figures::FigureSpec::default();
    spec.epsilon = flags.parsed_or("eps", spec.epsilon)?;
    spec.q = flags.parsed_or("q", spec.q)?;
    spec.packet_len = flags.parsed_or("T", spec.packet_len)?;
    spec.max_hops = flags.parsed_or("lmax", spec.max_hops)?;
    flags.finish()?;
    spec.id = match id.as_str() {
        "era1" => figures::FigureId::Era1,
        "era2" => figures::FigureId::Era2,
        "era3" => figures::FigureId::Era3,
        other => return Err(CliError::Usage(format!("unknown figure id `{other}`"))),
    };
    let csv = figures::figure_csv(&spec)?;
    write_output(Some(&out), &csv)?;
    Ok(csv)
}

/// `simulate`: Monte Carlo runs or exact plan replay.
pub fn cmd_simulate(mut flags: Flags) -> CliResult<String> {
    let scheme = flags.require("scheme")?;
    match scheme.as_str() {
        "repetition" => {
            let links = parse_links(&flags.require("links")?)?;
            let inner_len: usize = flags.require_parsed("N")?;
            let trials: u64 = flags.require_parsed("trials")?;
            let seed: u64 = flags.parsed_or("seed", 0)?;
            let alphabet = flags.take("alphabet");
            flags.finish()?;
            if trials == 0 {
                return Err(CliError::Usage("flag --trials: must be at least 1".into()));
            }
            let message = match alphabet {
                Some(a) => parse_flag("alphabet", &a)?,
                None => match links[0].as_erasure() {
                    Some(shape) => shape.alphabet_size,
                    None => links[0].num_inputs(),
                },
            };
            let scheme = RepetitionScheme::identity(&links, message)?;
            let report = sim::simulate_repetition(
                &links,
                &scheme,
                inner_len,
                trials,
                seed,
                threads_from_env(),
            )?;
            let mut text = report.to_text(None);
            if let Some(shape) = links[0].as_erasure() {
                if links.iter().all(|q| q.as_erasure() == Some(shape)) {
                    let analytic = (1.0 - shape.epsilon.powi(inner_len as i32))
                        .powi(links.len() as i32);
                    text.push_str(&format!("analytic_success={}\n", sig12(analytic)));
                }
            }
            print!("{text}");
            Ok(text)
        }
        "rlnc" => {
            let cfg = RlncConfig {
                batch_size: flags.require_parsed("M")?,
                inner_len: flags.require_parsed("N")?,
                hops: flags.require_parsed("L")?,
                epsilon: flags.require_parsed("eps")?,
                field_order: flags.require_parsed("q")?,
                packet_len: flags.parsed_or("T", 1024)?,
            };
            let trials: u64 = flags.require_parsed("trials")?;
            let seed: u64 = flags.parsed_or("seed", 0)?;
            flags.finish()?;
            if trials == 0 {
                return Err(CliError::Usage("flag --trials: must be at least 1".into()));
            }
            let report = sim::simulate_random_linear(&cfg, trials, seed, threads_from_env())?;
            let chain = RankChain::new(cfg.batch_size, cfg.inner_len, cfg.epsilon, cfg.field_order)?;
            let analytic = chain.rank_pmf_at(cfg.hops);
            let text = report.to_text(Some(analytic.probs()));
            print!("{text}");
            Ok(text)
        }
        "plan" => {
            let path = flags.require("plan")?;
            let links = parse_links(&flags.require("links")?)?;
            let inner_len: usize = flags.require_parsed("N")?;
            flags.finish()?;
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Runtime(format!("{path}: {e}")))?;
            let plan = MatrixPlan::from_json_str(&text)
                .map_err(|e| CliError::Runtime(format!("{path}: {e}")))?;
            let w = sim::exact_end_to_end(&plan, &links, inner_len)?;
            let capacity = channel::capacity(&w, 1e-9)?;
            let mut out = String::new();
            out.push_str("scheme=plan\n");
            out.push_str(&format!("hops={}\n", links.len()));
            out.push_str(&format!("inner_len={inner_len}\n"));
            out.push_str(&format!("capacity_bits={}\n", sig12(capacity)));
            out.push_str(&format!(
                "capacity_bits_per_use={}\n",
                sig12(capacity / inner_len as f64)
            ));
            out.push_str(&w.to_json_string());
            out.push('\n');
            print!("{out}");
            Ok(out)
        }
        other => Err(CliError::Usage(format!("unknown scheme `{other}`"))),
    }
}

/// `reduce`: builds a whole-line reduction plan, writes it as JSON and
/// prints the verification report.
pub fn cmd_reduce(mut flags: Flags) -> CliResult<String> {
    let links = parse_links(&flags.require("links")?)?;
    let out = flags.take("out").unwrap_or_else(|| "reduction_plan.json".to_string());
    flags.finish()?;
    let plan = reduction::reduce_line(&links)?;
    std::fs::write(&out, plan.to_json_string())?;
    let mut text = String::new();
    text.push_str(&format!("links={}\n", links.len()));
    text.push_str(&format!("noisy_links={}\n", plan.noisy_link_count));
    text.push_str(&format!("rho={}\n", sig12(plan.rho)));
    text.push_str(&format!("residual={}\n", sig12(plan.residual)));
    text.push_str(&format!("plan_written={out}\n"));
    print!("{text}");
    Ok(text)
}

/// Entry point shared by `main` and the integration tests.
pub fn run(args: &[String]) -> CliResult<String> {
    let (command, rest) = args
        .split_first()
        .ok_or_else(|| CliError::Usage(USAGE.trim_start().to_string()))?;
    let flags = Flags::parse(rest)?;
    match command.as_str() {
        "bounds" => cmd_bounds(flags),
        "figure" => cmd_figure(flags),
        "simulate" => cmd_simulate(flags),
        "reduce" => cmd_reduce(flags),
        other => Err(CliError::Usage(format!("unknown command `{other}`\n{USAGE}"))),
    }
}

pub const USAGE: &str = "
usage: linebatch <command> [flags]

commands:
  bounds    --erasure <eps> --M <m> --N <n> --L <a..b> [--T 1024] [--q 256]
            [--alphabet-bits <bits>] [--out <path>]
  figure    --id <era1|era2|era3> --out <path> [--eps 0.2] [--q 256]
            [--T 1024] [--lmax 1000]
  simulate  --scheme repetition --links <list> --N <n> --trials <t>
            [--seed 0] [--alphabet <k>]
            --scheme rlnc --M <m> --N <n> --q <q> --eps <eps> --L <l>
            --trials <t> [--T 1024] [--seed 0]
            --scheme plan --plan <file> --links <list> --N <n>
  reduce    --links <list> [--out reduction_plan.json]

links are comma-separated built-ins: erasure(k,eps), bsc(p), q3x3,
uniform(s,rho), identity(k); append xK to repeat a link K times or use
@path to load a JSON channel definition.
";
