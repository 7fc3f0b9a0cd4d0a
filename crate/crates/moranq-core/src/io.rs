//! Machine-readable output: CSV and JSONL writers for every report type.
//!
//! All floating-point values are written with 17 significant digits
//! (`{:.16e}`), enough to round-trip f64 exactly, so identical inputs
//! always produce byte-identical files. CSV headers are stable contracts:
//!
//! - atoms: `position,weight`
//! - antichain: `word,lo,hi,c,p,E`
//! - quantizer: sidecar `# n=<n> r=<r> cost=<e^r> method=<m>`, then
//!   `index,codepoint`
//! - sweep: `n,e_pow_r,e,delta,J_min,J_max,ratio_min,ratio_max,ratio_delta,spread,k_used`
//! - census: a summary comment, a `word,lo,hi,count` section, a blank
//!   line, then an `index,codepoint,S` incidence section
//! - dims: a summary comment, then `n,coefficient` (optionally followed by
//!   a ball-mass section `epsilon,sup_mass`)
//!
//! The JSONL variants emit one JSON object per line with the same field
//! names; serde_json's shortest-round-trip float encoding keeps those
//! byte-stable too.

use crate::analysis::{CellReport, CensusReport, DimensionEstimate, SweepRow};
use crate::antichain::Antichain;
use crate::error::{Error, Result};
use crate::measure::{AtomMeasure, BallMassProfile};
use crate::solver::Quantizer;
use crate::spec::ValidationReport;
use serde::Serialize;
use std::io::Write;

/// Full-precision decimal rendering: 17 significant digits, scientific.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

fn json_line<W: Write, T: Serialize>(w: &mut W, value: &T) -> Result<()> {
    let line = serde_json::to_string(value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w, "{line}").map_err(io_err)
}

// --- atoms ------------------------------------------------------------------

pub fn write_atoms_csv<W: Write>(w: &mut W, measure: &AtomMeasure) -> Result<()> {
    writeln!(w, "position,weight").map_err(io_err)?;
    for (x, wt) in measure.positions().iter().zip(measure.weights()) {
        writeln!(w, "{},{}", fmt_f64(*x), fmt_f64(*wt)).map_err(io_err)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct AtomJson {
    position: f64,
    weight: f64,
}

pub fn write_atoms_jsonl<W: Write>(w: &mut W, measure: &AtomMeasure) -> Result<()> {
    for (x, wt) in measure.positions().iter().zip(measure.weights()) {
        json_line(
            w,
            &AtomJson {
                position: *x,
                weight: *wt,
            },
        )?;
    }
    Ok(())
}

// --- antichain ----------------------------------------------------------

/// `base_len` converts absolute cylinder lengths into contraction ratios
/// relative to the construction's base interval, so that E = p * c^r holds
/// within the file.
pub fn write_antichain_csv<W: Write>(w: &mut W, chain: &Antichain, base_len: f64) -> Result<()> {
    writeln!(w, "word,lo,hi,c,p,E").map_err(io_err)?;
    for cyl in &chain.cylinders {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            cyl.word,
            fmt_f64(cyl.lo),
            fmt_f64(cyl.hi),
            fmt_f64(cyl.length / base_len),
            fmt_f64(cyl.mass),
            fmt_f64(cyl.weight)
        )
        .map_err(io_err)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CylinderJson {
    word: String,
    lo: f64,
    hi: f64,
    c: f64,
    p: f64,
    #[serde(rename = "E")]
    e: f64,
}

pub fn write_antichain_jsonl<W: Write>(
    w: &mut W,
    chain: &Antichain,
    base_len: f64,
) -> Result<()> {
    for cyl in &chain.cylinders {
        json_line(
            w,
            &CylinderJson {
                word: cyl.word.to_string(),
                lo: cyl.lo,
                hi: cyl.hi,
                c: cyl.length / base_len,
                p: cyl.mass,
                e: cyl.weight,
            },
        )?;
    }
    Ok(())
}

// --- quantizer ----------------------------------------------------------

pub fn write_quantizer_csv<W: Write>(w: &mut W, q: &Quantizer) -> Result<()> {
    writeln!(
        w,
        "# n={} r={} cost={} method={}",
        q.n,
        q.r,
        fmt_f64(q.cost),
        q.method
    )
    .map_err(io_err)?;
    writeln!(w, "index,codepoint").map_err(io_err)?;
    for (i, c) in q.codepoints.iter().enumerate() {
        writeln!(w, "{},{}", i, fmt_f64(*c)).map_err(io_err)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct QuantizerMetaJson {
    n: usize,
    r: f64,
    cost: f64,
    method: String,
    certified: bool,
}

#[derive(Serialize)]
struct CodepointJson {
    index: usize,
    codepoint: f64,
}

pub fn write_quantizer_jsonl<W: Write>(w: &mut W, q: &Quantizer) -> Result<()> {
    json_line(
        w,
        &QuantizerMetaJson {
            n: q.n,
            r: q.r,
            cost: q.cost,
            method: q.method.to_string(),
            certified: q.certified,
        },
    )?;
    for (i, c) in q.codepoints.iter().enumerate() {
        json_line(
            w,
            &CodepointJson {
                index: i,
                codepoint: *c,
            },
        )?;
    }
    Ok(())
}

// --- sweep ------------------------------------------------------------------

pub fn write_sweep_csv<W: Write>(w: &mut W, rows: &[SweepRow]) -> Result<()> {
    writeln!(
        w,
        "n,e_pow_r,e,delta,J_min,J_max,ratio_min,ratio_max,ratio_delta,spread,k_used"
    )
    .map_err(io_err)?;
    for row in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            row.n,
            fmt_f64(row.e_pow_r),
            fmt_f64(row.e),
            fmt_f64(row.delta),
            fmt_f64(row.j_min),
            fmt_f64(row.j_max),
            fmt_f64(row.ratio_min),
            fmt_f64(row.ratio_max),
            fmt_f64(row.ratio_delta),
            fmt_f64(row.spread),
            row.k_used
        )
        .map_err(io_err)?;
    }
    Ok(())
}

pub fn write_sweep_jsonl<W: Write>(w: &mut W, rows: &[SweepRow]) -> Result<()> {
    for row in rows {
        json_line(w, row)?;
    }
    Ok(())
}

// --- census + incidence -------------------------------------------------

fn coverage_text(coverage: Option<f64>) -> String {
    match coverage {
        Some(c) => fmt_f64(c),
        None => "na".to_string(),
    }
}

pub fn write_census_csv<W: Write>(
    w: &mut W,
    report: &CensusReport,
    cells: &CellReport,
) -> Result<()> {
    writeln!(
        w,
        "# k={} r={} n={} count_min={} count_max={} empty_cylinders={} grandchild_coverage={}",
        report.k,
        report.r,
        report.n,
        report.count_min,
        report.count_max,
        report.empty_cylinders,
        coverage_text(report.grandchild_coverage)
    )
    .map_err(io_err)?;
    writeln!(w, "word,lo,hi,count").map_err(io_err)?;
    for row in &report.rows {
        writeln!(
            w,
            "{},{},{},{}",
            row.word,
            fmt_f64(row.lo),
            fmt_f64(row.hi),
            row.count
        )
        .map_err(io_err)?;
    }
    writeln!(w).map_err(io_err)?;
    writeln!(w, "index,codepoint,S").map_err(io_err)?;
    for row in &cells.rows {
        writeln!(
            w,
            "{},{},{}",
            row.index,
            fmt_f64(row.codepoint),
            row.incidence
        )
        .map_err(io_err)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CensusSummaryJson {
    kind: &'static str,
    k: usize,
    r: f64,
    n: usize,
    count_min: usize,
    count_max: usize,
    empty_cylinders: usize,
    grandchild_coverage: Option<f64>,
}

#[derive(Serialize)]
struct CensusRowJson<'a> {
    kind: &'static str,
    #[serde(flatten)]
    row: &'a crate::analysis::CensusRow,
}

#[derive(Serialize)]
struct IncidenceRowJson {
    kind: &'static str,
    index: usize,
    codepoint: f64,
    #[serde(rename = "S")]
    s: usize,
}

pub fn write_census_jsonl<W: Write>(
    w: &mut W,
    report: &CensusReport,
    cells: &CellReport,
) -> Result<()> {
    json_line(
        w,
        &CensusSummaryJson {
            kind: "summary",
            k: report.k,
            r: report.r,
            n: report.n,
            count_min: report.count_min,
            count_max: report.count_max,
            empty_cylinders: report.empty_cylinders,
            grandchild_coverage: report.grandchild_coverage,
        },
    )?;
    for row in &report.rows {
        json_line(
            w,
            &CensusRowJson {
                kind: "cylinder",
                row,
            },
        )?;
    }
    for row in &cells.rows {
        json_line(
            w,
            &IncidenceRowJson {
                kind: "cell",
                index: row.index,
                codepoint: row.codepoint,
                s: row.incidence,
            },
        )?;
    }
    Ok(())
}

// --- dimension estimate -------------------------------------------------

pub fn write_dims_csv<W: Write>(
    w: &mut W,
    est: &DimensionEstimate,
    profile: Option<&BallMassProfile>,
) -> Result<()> {
    writeln!(
        w,
        "# slope={} window=[{},{}] r={} s_probe={}",
        fmt_f64(est.slope),
        est.window.0,
        est.window.1,
        est.r,
        fmt_f64(est.s_probe)
    )
    .map_err(io_err)?;
    writeln!(w, "n,coefficient").map_err(io_err)?;
    for &(n, q) in &est.samples {
        writeln!(w, "{},{}", n, fmt_f64(q)).map_err(io_err)?;
    }
    if let Some(profile) = profile {
        writeln!(w).map_err(io_err)?;
        writeln!(
            w,
            "# fitted_exponent={} reference_exponent={} reference_constant={}",
            fmt_f64(profile.fitted_exponent),
            profile
                .reference_exponent
                .map(fmt_f64)
                .unwrap_or_else(|| "na".to_string()),
            profile
                .reference_constant
                .map(fmt_f64)
                .unwrap_or_else(|| "na".to_string())
        )
        .map_err(io_err)?;
        writeln!(w, "epsilon,sup_mass").map_err(io_err)?;
        for &(eps, mass) in &profile.samples {
            writeln!(w, "{},{}", fmt_f64(eps), fmt_f64(mass)).map_err(io_err)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct DimsMetaJson {
    kind: &'static str,
    slope: f64,
    window: (usize, usize),
    r: f64,
    s_probe: f64,
}

#[derive(Serialize)]
struct CoefficientJson {
    kind: &'static str,
    n: usize,
    coefficient: f64,
}

#[derive(Serialize)]
struct BallMassMetaJson {
    kind: &'static str,
    fitted_exponent: f64,
    reference_exponent: Option<f64>,
    reference_constant: Option<f64>,
}

#[derive(Serialize)]
struct BallMassSampleJson {
    kind: &'static str,
    epsilon: f64,
    sup_mass: f64,
}

pub fn write_dims_jsonl<W: Write>(
    w: &mut W,
    est: &DimensionEstimate,
    profile: Option<&BallMassProfile>,
) -> Result<()> {
    json_line(
        w,
        &DimsMetaJson {
            kind: "fit",
            slope: est.slope,
            window: est.window,
            r: est.r,
            s_probe: est.s_probe,
        },
    )?;
    for &(n, q) in &est.samples {
        json_line(
            w,
            &CoefficientJson {
                kind: "coefficient",
                n,
                coefficient: q,
            },
        )?;
    }
    if let Some(profile) = profile {
        json_line(
            w,
            &BallMassMetaJson {
                kind: "ball-mass-fit",
                fitted_exponent: profile.fitted_exponent,
                reference_exponent: profile.reference_exponent,
                reference_constant: profile.reference_constant,
            },
        )?;
        for &(eps, mass) in &profile.samples {
            json_line(
                w,
                &BallMassSampleJson {
                    kind: "ball-mass",
                    epsilon: eps,
                    sup_mass: mass,
                },
            )?;
        }
    }
    Ok(())
}

// --- validation ---------------------------------------------------------

fn opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_else(|| "na".to_string())
}

pub fn write_validation_text<W: Write>(w: &mut W, report: &ValidationReport) -> Result<()> {
    writeln!(w, "admissible: {}", report.violations.is_empty()).map_err(io_err)?;
    writeln!(w, "r: {}", report.r).map_err(io_err)?;
    writeln!(w, "eta_r: {}", opt_f64(report.eta_r)).map_err(io_err)?;
    let b = report.bounds.as_ref();
    writeln!(w, "p_lo: {}", opt_f64(b.map(|b| b.p_lo))).map_err(io_err)?;
    writeln!(w, "p_hi: {}", opt_f64(b.map(|b| b.p_hi))).map_err(io_err)?;
    writeln!(w, "c_lo: {}", opt_f64(b.map(|b| b.c_lo))).map_err(io_err)?;
    writeln!(w, "c_hi: {}", opt_f64(b.map(|b| b.c_hi))).map_err(io_err)?;
    if report.violations.is_empty() {
        writeln!(w, "violations: none").map_err(io_err)?;
    } else {
        writeln!(w, "violations:").map_err(io_err)?;
        for v in &report.violations {
            writeln!(w, "  - {v}").map_err(io_err)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ValidationJson<'a> {
    admissible: bool,
    r: f64,
    eta_r: Option<f64>,
    p_lo: Option<f64>,
    p_hi: Option<f64>,
    c_lo: Option<f64>,
    c_hi: Option<f64>,
    violations: &'a [String],
}

pub fn write_validation_jsonl<W: Write>(w: &mut W, report: &ValidationReport) -> Result<()> {
    let b = report.bounds.as_ref();
    json_line(
        w,
        &ValidationJson {
            admissible: report.violations.is_empty(),
            r: report.r,
            eta_r: report.eta_r,
            p_lo: b.map(|b| b.p_lo),
            p_hi: b.map(|b| b.p_hi),
            c_lo: b.map(|b| b.c_lo),
            c_hi: b.map(|b| b.c_hi),
            violations: &report.violations,
        },
    )?;
    Ok(())
}
