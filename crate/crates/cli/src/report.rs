//! Run reports and their JSON / CSV encodings.

use std::fmt::Write as _;
use std::io;
use std::str::FromStr;

use lsbd_core::certify::GapReport;
use lsbd_core::kitaev::{BoundaryReport, DoublingReport};
use lsbd_core::{Error, Result, StepDiagnostics, StepIndex};
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::spec::{ModelSpecFile, PrngRecord};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Chain,
    Kitaev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEcho {
    pub kind: ModelKind,
    /// Length of the swept chain.
    pub n: usize,
    pub site_dim: usize,
    pub t: f64,
    pub kbar: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prng: Option<PrngRecord>,
    pub spec: ModelSpecFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMode {
    #[default]
    Auto,
    Force,
    Off,
}

impl FromStr for OracleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(OracleMode::Auto),
            "force" => Ok(OracleMode::Force),
            "off" => Ok(OracleMode::Off),
            other => Err(Error::Validation(format!("unknown oracle mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlsEcho {
    pub jmax: usize,
    pub tol_series: f64,
    pub tol_od: f64,
    pub gap_min: f64,
    pub tol_herm: f64,
    pub oracle: OracleMode,
}

/// Bound checks derived from the per-step series data and the certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checks {
    pub ledger_ok: bool,
    pub min_step_gap: f64,
    pub majorant_ok: bool,
    pub generator_bounds_ok: bool,
    /// Spectrum, ground energy and gap agree with exact diagonalization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KitaevSection {
    pub fermion_sites: usize,
    /// Added to chain energies to recover Kitaev energies.
    pub energy_offset: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_energy: Option<f64>,
    pub bulk_terms: usize,
    pub boundary_terms: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doubling: Option<DoublingReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<BoundaryReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub sweep_ms: f64,
    pub certify_ms: f64,
    pub oracle_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<StepIndex>,
}

impl From<&Error> for ErrorInfo {
    fn from(e: &Error) -> Self {
        Self {
            kind: e.kind().into(),
            message: e.to_string(),
            step: e.step(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStatus {
    pub ok: bool,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub model: ModelEcho,
    pub controls: ControlsEcho,
    pub steps: Vec<StepDiagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_step: Option<StepDiagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<GapReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks: Option<Checks>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kitaev: Option<KitaevSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
    pub status: RunStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::UnsupportedFormat(other.into())),
        }
    }
}

/// Pretty JSON with every float printed as `{:.16e}` (17 significant digits).
struct SciFormatter<'a> {
    pretty: PrettyFormatter<'a>,
}

impl Formatter for SciFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(w)
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub const CSV_HEADER: &str = "record,k,q,energy,gap,series_order,od_residual,s_norm";

/// One `step` row per diagnostics entry, then one `ledger` row
/// (`ledger,r,i,norm,bound,ok`) per ledger entry.
pub fn to_csv(report: &RunReport) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for d in &report.steps {
        let _ = writeln!(
            out,
            "step,{},{},{},{},{},{},{}",
            d.k,
            d.q,
            opt_num(d.energy),
            opt_num(d.gap),
            d.series_order.map(|o| o.to_string()).unwrap_or_default(),
            opt_num(d.od_residual),
            opt_num(d.s_norm)
        );
    }
    if let Some(cert) = &report.certificate {
        for e in &cert.ledger {
            let _ = writeln!(
                out,
                "ledger,{},{},{},{},{}",
                e.interval.k,
                e.interval.q,
                num(e.norm),
                num(e.bound),
                e.ok
            );
        }
    }
    out
}

pub fn to_json(report: &RunReport) -> Result<String> {
    let mut buf = Vec::new();
    let fmt = SciFormatter {
        pretty: PrettyFormatter::with_indent(b"  "),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    report
        .serialize(&mut ser)
        .map_err(|e| Error::Io(format!("serializing report: {e}")))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

pub fn emit(report: &RunReport, format: Format) -> Result<Vec<u8>> {
    Ok(match format {
        Format::Json => to_json(report)?.into_bytes(),
        Format::Csv => to_csv(report).into_bytes(),
    })
}
