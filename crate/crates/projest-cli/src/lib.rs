//! Command implementations behind the `projest` binary: exact error tables,
//! stochastic (n, N) grids, bound-constant fitting, conditional-optimization
//! plans, sample dumps and single estimates.
//!
//! Everything here is deterministic given its configuration: each grid cell
//! derives its own seed from (base seed, family, n, m, replicate), cells are
//! computed in parallel but emitted in (n, m, replicate) order, and floats
//! are printed as shortest round-trip decimals, so identical configurations
//! produce byte-identical output.

use rayon::prelude::*;
use serde::Serialize;

use projest::analysis::{self, BoundConstants, BoundFlavor, ErrorPoint};
use projest::estimator::{
    estimate_error_vs_truth, Algorithm, ErrorReport, ProjectionEstimate, Target,
};
use projest::sampler::{sample, RngStream};
use projest::testfam::{deterministic_errors, TestFamilyParams};

/// Error taxonomy mirrored in the process exit code: usage errors exit 1,
/// numerical or I/O failures exit 2.
#[derive(Debug)]
pub enum Error {
    Usage(String),
    Failure(String),
}

impl std::fmt::Display for Error {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Error::Usage(msg) | Error::Failure(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

fn failure(err: impl std::fmt::Display) -> Error {
    Error::Failure(err.to_string())
}

/// Output encoding selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// One record of encodable output.
pub trait CsvRecord {
    fn header() -> &'static str;
    fn record(&self) -> String;
}

/// Render records as CSV (header + LF rows) or a JSON array.
pub fn render<T: CsvRecord + Serialize>(rows: &[T], format: OutputFormat) -> Result<String, Error> {
    match format {
        OutputFormat::Csv => {
            let mut out = String::from(T::header());
            out.push('\n');
            for row in rows {
                out.push_str(&row.record());
                out.push('\n');
            }
            Ok(out)
        }
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(rows).map_err(failure)?;
            s.push('\n');
            Ok(s)
        }
    }
}

fn family(nu1: u32, nu2: u32) -> Result<TestFamilyParams, Error> {
    TestFamilyParams::new(nu1, nu2).map_err(|e| usage(e.to_string()))
}

/// Largest accepted sample-size exponent (N = 2^49 is already far past any
/// practical budget; anything bigger would overflow the shift).
pub const HARD_MAX_M: u32 = 40;

/// Sample size of grid row m.
pub fn sample_size_for(m: u32) -> usize {
    assert!(m <= HARD_MAX_M, "m={m} out of range");
    1usize << (m + 9)
}

/// Stable per-cell seed: a splitmix chain over the identifying fields, so
/// any cell can be recomputed in isolation.
pub fn derive_cell_seed(seed: u64, nu1: u32, nu2: u32, n: usize, m: u32, replicate: u32) -> u64 {
    const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    let mut h = mix(seed ^ GOLDEN);
    for field in [nu1 as u64, nu2 as u64, n as u64, m as u64, replicate as u64] {
        h = mix(h.wrapping_add(field.wrapping_mul(GOLDEN)));
    }
    h
}

// ---------------------------------------------------------------------------
// exact
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct ExactRow {
    pub nu1: u32,
    pub nu2: u32,
    pub n: usize,
    pub target: char,
    pub eps_det: f64,
    pub display: String,
}

impl CsvRecord for ExactRow {
    fn header() -> &'static str {
        "nu1,nu2,n,target,eps_det,display"
    }
    fn record(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.nu1, self.nu2, self.n, self.target, self.eps_det, self.display
        )
    }
}

/// Table-style 6-decimal cell, switching to scientific notation once fixed
/// point would keep fewer than two significant digits.
fn table_display(v: f64) -> String {
    if v >= 1e-5 {
        format!("{v:.6}")
    } else {
        format!("{v:.2e}")
    }
}

/// Deterministic truncation errors for each requested expansion length.
pub fn cmd_exact(nu1: u32, nu2: u32, n_list: &[usize]) -> Result<Vec<ExactRow>, Error> {
    let p = family(nu1, nu2)?;
    if n_list.is_empty() {
        return Err(usage("exact mode needs at least one --n"));
    }
    let mut rows = Vec::with_capacity(2 * n_list.len());
    for &n in n_list {
        let (eg, ef) = deterministic_errors(&p, n).map_err(failure)?;
        rows.push(ExactRow { nu1, nu2, n, target: 'g', eps_det: eg, display: table_display(eg) });
        rows.push(ExactRow { nu1, nu2, n, target: 'f', eps_det: ef, display: table_display(ef) });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// table
// ---------------------------------------------------------------------------

/// Grid experiment configuration shared by the table and fit commands.
#[derive(Debug, Clone)]
pub struct GridConfig {
    pub nu1: u32,
    pub nu2: u32,
    pub n_list: Vec<usize>,
    pub m_list: Vec<u32>,
    pub seed: u64,
    pub replicates: u32,
    pub algorithm: Algorithm,
    pub max_m: u32,
}

impl GridConfig {
    fn validate(&self) -> Result<TestFamilyParams, Error> {
        let p = family(self.nu1, self.nu2)?;
        if self.n_list.is_empty() || self.m_list.is_empty() {
            return Err(usage("grid modes need non-empty --n and --m lists"));
        }
        if self.replicates < 1 {
            return Err(usage("--replicates must be at least 1"));
        }
        if self.max_m > HARD_MAX_M {
            return Err(usage(format!("--max-m cannot exceed {HARD_MAX_M}")));
        }
        Ok(p)
    }

    /// m values within the cap; over-cap requests are skipped with a warning
    /// (N = 2^{m+9} grows past any desk-scale budget quickly).
    fn admitted_m(&self) -> Vec<u32> {
        let mut kept = Vec::with_capacity(self.m_list.len());
        for &m in &self.m_list {
            if m > self.max_m {
                eprintln!(
                    "warning: skipping m={m} (N=2^{}): above --max-m {}",
                    m + 9,
                    self.max_m
                );
            } else {
                kept.push(m);
            }
        }
        kept
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub nu1: u32,
    pub nu2: u32,
    pub n: usize,
    pub m: u32,
    pub sample_size: usize,
    pub target: char,
    pub eps_det: f64,
    pub eps_stoch: f64,
    pub eps_total: f64,
    pub seed: u64,
    pub replicate: u32,
}

impl CsvRecord for TableRow {
    fn header() -> &'static str {
        "nu1,nu2,n,m,N,target,eps_det,eps_stoch,eps_total,seed,replicate"
    }
    fn record(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.nu1,
            self.nu2,
            self.n,
            self.m,
            self.sample_size,
            self.target,
            self.eps_det,
            self.eps_stoch,
            self.eps_total,
            self.seed,
            self.replicate
        )
    }
}

fn report_to_row(
    cfg: &GridConfig,
    n: usize,
    m: u32,
    replicate: u32,
    seed: u64,
    r: &ErrorReport,
) -> TableRow {
    TableRow {
        nu1: cfg.nu1,
        nu2: cfg.nu2,
        n,
        m,
        sample_size: r.sample_size,
        target: match r.target {
            Target::Density => 'g',
            Target::Distribution => 'f',
        },
        eps_det: r.eps_det,
        eps_stoch: r.eps_stoch,
        eps_total: r.eps_total,
        seed,
        replicate,
    }
}

/// Run one independently seeded grid cell and report errors for g and f.
pub fn run_cell(
    cfg: &GridConfig,
    p: &TestFamilyParams,
    n: usize,
    m: u32,
    replicate: u32,
) -> Result<(TableRow, TableRow), Error> {
    let cell_seed = derive_cell_seed(cfg.seed, cfg.nu1, cfg.nu2, n, m, replicate);
    let rng = RngStream::new(cell_seed, 0);
    let batch = sample(p, &rng, sample_size_for(m)).map_err(failure)?;
    let est = ProjectionEstimate::from_batch(&batch, n, cfg.algorithm).map_err(failure)?;
    let (rg, rf) = estimate_error_vs_truth(&est, p).map_err(failure)?;
    Ok((
        report_to_row(cfg, n, m, replicate, cell_seed, &rg),
        report_to_row(cfg, n, m, replicate, cell_seed, &rf),
    ))
}

/// Full (n, m, replicate) grid. Cells run in parallel; rows come out in
/// deterministic (n, m, replicate) order with g before f.
pub fn cmd_table(cfg: &GridConfig) -> Result<Vec<TableRow>, Error> {
    let p = cfg.validate()?;
    let m_list = cfg.admitted_m();
    let mut cells = Vec::new();
    for &n in &cfg.n_list {
        for &m in &m_list {
            for replicate in 0..cfg.replicates {
                cells.push((n, m, replicate));
            }
        }
    }
    let results: Result<Vec<(TableRow, TableRow)>, Error> = cells
        .par_iter()
        .map(|&(n, m, replicate)| run_cell(cfg, &p, n, m, replicate))
        .collect();
    let mut rows = Vec::with_capacity(2 * cells.len());
    for (g, f) in results? {
        rows.push(g);
        rows.push(f);
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct FitRow {
    pub nu1: u32,
    pub nu2: u32,
    pub k: i32,
    pub m: u32,
    pub n: usize,
    pub sample_size: usize,
    pub surface: &'static str,
    pub value: f64,
    pub c1: f64,
    pub c2: f64,
    pub s: f64,
}

impl CsvRecord for FitRow {
    fn header() -> &'static str {
        "nu1,nu2,k,m,n,N,surface,value,c1,c2,s"
    }
    fn record(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.nu1,
            self.nu2,
            self.k,
            self.m,
            self.n,
            self.sample_size,
            self.surface,
            self.value,
            self.c1,
            self.c2,
            self.s
        )
    }
}

/// Run (or reuse) a grid, fit the density bound constants at the family's
/// limit smoothness, and emit the measured and fitted surfaces in long form.
pub fn cmd_fit(cfg: &GridConfig) -> Result<(BoundConstants, Vec<FitRow>), Error> {
    let rows = cmd_table(cfg)?;
    fit_from_rows(cfg, &rows)
}

/// Fit constants from already-computed grid rows (density target g).
pub fn fit_from_rows(
    cfg: &GridConfig,
    rows: &[TableRow],
) -> Result<(BoundConstants, Vec<FitRow>), Error> {
    let p = family(cfg.nu1, cfg.nu2)?;
    let s = p.smoothness_sup();
    let g_rows: Vec<&TableRow> = rows.iter().filter(|r| r.target == 'g').collect();
    let points: Vec<ErrorPoint> = g_rows
        .iter()
        .map(|r| ErrorPoint { n: r.n, sample_size: r.sample_size as u64, eps: r.eps_total })
        .collect();
    let constants = analysis::fit_constants(&points, s).map_err(failure)?;

    let mut out = Vec::with_capacity(2 * g_rows.len());
    for r in &g_rows {
        let k = (r.n as f64).log2().round() as i32 - 2;
        let theoretical =
            analysis::error_bound(&constants, r.n, r.sample_size as u64, Target::Density)
                .map_err(failure)?;
        out.push(FitRow {
            nu1: cfg.nu1,
            nu2: cfg.nu2,
            k,
            m: r.m,
            n: r.n,
            sample_size: r.sample_size,
            surface: "computational",
            value: r.eps_total,
            c1: constants.c1,
            c2: constants.c2,
            s,
        });
        out.push(FitRow {
            nu1: cfg.nu1,
            nu2: cfg.nu2,
            k,
            m: r.m,
            n: r.n,
            sample_size: r.sample_size,
            surface: "theoretical",
            value: theoretical,
            c1: constants.c1,
            c2: constants.c2,
            s,
        });
    }
    Ok((constants, out))
}

// ---------------------------------------------------------------------------
// optimize
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct PlanRow {
    pub target: char,
    pub gamma: f64,
    pub s: f64,
    pub c1: f64,
    pub c2: f64,
    pub n_opt: usize,
    pub sample_size_opt: u64,
    pub relation_exponent: f64,
    pub bound: f64,
}

impl CsvRecord for PlanRow {
    fn header() -> &'static str {
        "target,gamma,s,c1,c2,n_opt,N_opt,relation_exponent,bound"
    }
    fn record(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.target,
            self.gamma,
            self.s,
            self.c1,
            self.c2,
            self.n_opt,
            self.sample_size_opt,
            self.relation_exponent,
            self.bound
        )
    }
}

/// Conditionally optimal (n, N) for a target accuracy.
pub fn cmd_optimize(
    c1: f64,
    c2: f64,
    s: f64,
    gamma: f64,
    target: Target,
) -> Result<PlanRow, Error> {
    let constants =
        BoundConstants::new(c1, c2, s, BoundFlavor::PowerLaw).map_err(|e| usage(e.to_string()))?;
    let plan = analysis::optimize(&constants, gamma, target).map_err(|e| usage(e.to_string()))?;
    let bound = analysis::error_bound(&constants, plan.n_opt, plan.sample_size_opt, target)
        .map_err(failure)?;
    Ok(PlanRow {
        target: match target {
            Target::Density => 'g',
            Target::Distribution => 'f',
        },
        gamma,
        s,
        c1,
        c2,
        n_opt: plan.n_opt,
        sample_size_opt: plan.sample_size_opt,
        relation_exponent: plan.relation_exponent,
        bound,
    })
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

/// Newline-delimited samples with a provenance header line.
pub fn sample_file_content(
    nu1: u32,
    nu2: u32,
    count: usize,
    seed: u64,
    stream: u64,
) -> Result<String, Error> {
    let p = family(nu1, nu2)?;
    if count < 1 {
        return Err(usage("--count must be at least 1"));
    }
    let batch = sample(&p, &RngStream::new(seed, stream), count).map_err(failure)?;
    let mut out = format!("# nu1={nu1} nu2={nu2} seed={seed} stream={stream} count={count}\n");
    for v in batch.values() {
        out.push_str(&format!("{v}\n"));
    }
    Ok(out)
}

/// Draw samples and write them to a file.
pub fn cmd_sample(
    nu1: u32,
    nu2: u32,
    count: usize,
    seed: u64,
    stream: u64,
    out: &std::path::Path,
) -> Result<(), Error> {
    let content = sample_file_content(nu1, nu2, count, seed, stream)?;
    std::fs::write(out, content)
        .map_err(|e| Error::Failure(format!("cannot write {}: {e}", out.display())))
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct EstimateRow {
    pub nu1: u32,
    pub nu2: u32,
    pub n: usize,
    pub m: u32,
    pub sample_size: usize,
    pub seed: u64,
    pub algorithm: u8,
    pub index: usize,
    pub g_coeff: f64,
    pub f_coeff: Option<f64>,
}

impl CsvRecord for EstimateRow {
    fn header() -> &'static str {
        "nu1,nu2,n,m,N,seed,algorithm,index,g_coeff,f_coeff"
    }
    fn record(&self) -> String {
        let f = self.f_coeff.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.nu1,
            self.nu2,
            self.n,
            self.m,
            self.sample_size,
            self.seed,
            self.algorithm,
            self.index,
            self.g_coeff,
            f
        )
    }
}

/// One seeded estimation run, emitting the coefficient pair per index.
/// The density column carries one extra coefficient (the transform input),
/// so its last row has no distribution partner.
pub fn cmd_estimate(
    nu1: u32,
    nu2: u32,
    n: usize,
    m: u32,
    seed: u64,
    algorithm: Algorithm,
) -> Result<Vec<EstimateRow>, Error> {
    let p = family(nu1, nu2)?;
    if m > HARD_MAX_M {
        return Err(usage(format!("--m cannot exceed {HARD_MAX_M}")));
    }
    let sample_size = sample_size_for(m);
    let batch = sample(&p, &RngStream::new(seed, 0), sample_size).map_err(failure)?;
    let est = ProjectionEstimate::from_batch(&batch, n, algorithm).map_err(failure)?;
    let g = est.g_coeffs().as_slice();
    let f = est.f_coeffs().as_slice();
    Ok((0..g.len())
        .map(|index| EstimateRow {
            nu1,
            nu2,
            n,
            m,
            sample_size,
            seed,
            algorithm: algorithm.id(),
            index,
            g_coeff: g[index],
            f_coeff: f.get(index).copied(),
        })
        .collect())
}
