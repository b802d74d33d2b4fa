//! Structured experiment reports: one verdict-carrying record per measured
//! quantity, serialized to byte-reproducible CSV and JSON.
//!
//! Reports are flat so a single CSV schema covers every campaign: each row
//! repeats the campaign name and parameter block next to one record.
//! Field formatting is fixed (`{:.16e}`, LF line endings) and record
//! assembly is ordered by input descriptor, so identical configurations
//! produce identical bytes.

use std::fmt;

use serde::Serialize;

/// Outcome of one record or classification.
///
/// `Pass`/`Fail` judge a measured quantity against its tolerance; `Hold` /
/// `Fail` also serve as regime classifications in parameter scans;
/// `Unresolved` marks cases the underlying theory leaves open or where
/// error estimates exceed the tolerance, so no claim is made.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Hold,
    Unresolved,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Hold => "HOLD",
            Verdict::Unresolved => "UNRESOLVED",
        };
        f.write_str(s)
    }
}

/// One measured quantity with its judgment.
#[derive(Debug, Clone, Serialize)]
pub struct Record {
    /// Input descriptor (e.g. `gamma=+003.500`); numeric parts are
    /// zero-padded so lexicographic record order equals numeric order.
    pub input: String,
    /// Measured value (a form value, a norm, a slope, a residual...).
    pub measured: f64,
    /// Expected value or slope, when the theory provides one.
    pub expected: Option<f64>,
    /// Tolerance the verdict was judged against.
    pub tolerance: f64,
    /// Quadrature error estimate accompanying the measurement.
    pub error_estimate: f64,
    pub verdict: Verdict,
}

/// Where a report came from: a digest of the full run configuration and
/// the seed recorded for reproducibility audits.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub config_digest: String,
    pub seed: u64,
}

impl Provenance {
    /// Digests a canonical configuration string (FNV-1a, 64-bit).
    pub fn from_config(config: &str, seed: u64) -> Self {
        Provenance {
            config_digest: format!("{:016x}", fnv1a64(config.as_bytes())),
            seed,
        }
    }
}

/// 64-bit FNV-1a content digest (stable across platforms and runs).
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// A campaign's verdicts with the parameter block they were measured under.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub d: usize,
    pub s: f64,
    pub p: f64,
    /// Weight exponent at the origin.
    pub gamma0: f64,
    /// Weight exponent at infinity.
    pub gamma: f64,
    pub records: Vec<Record>,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn new(
        name: impl Into<String>,
        d: usize,
        s: f64,
        p: f64,
        gamma0: f64,
        gamma: f64,
        provenance: Provenance,
    ) -> Self {
        ExperimentReport {
            name: name.into(),
            d,
            s,
            p,
            gamma0,
            gamma,
            records: Vec::new(),
            provenance,
        }
    }

    pub fn push(&mut self, record: Record) {
        self.records.push(record);
    }

    /// Orders records by input descriptor. Campaigns may fill records in
    /// parallel; calling this before serialization makes output
    /// deterministic regardless of completion order.
    pub fn finalize(&mut self) {
        self.records.sort_by(|a, b| a.input.cmp(&b.input));
    }

    pub fn count(&self, verdict: Verdict) -> usize {
        self.records.iter().filter(|r| r.verdict == verdict).count()
    }

    /// True when no record is a plain FAIL (HOLD and UNRESOLVED are not
    /// failures: the former is a classification, the latter an explicit
    /// abstention).
    pub fn all_acceptable(&self) -> bool {
        self.count(Verdict::Fail) == 0
    }

    /// Fixed 12-column CSV. Floats use `{:.16e}`; missing expected values
    /// are empty cells; lines end with LF. Byte-stable for a fixed report.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "experiment,d,s,p,gamma0,gamma,input_id,measured,expected,tolerance,error_estimate,verdict\n",
        );
        for r in &self.records {
            let expected = r.expected.map(fmt_float).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                self.name,
                self.d,
                fmt_float(self.s),
                fmt_float(self.p),
                fmt_float(self.gamma0),
                fmt_float(self.gamma),
                sanitize_cell(&r.input),
                fmt_float(r.measured),
                expected,
                fmt_float(r.tolerance),
                fmt_float(r.error_estimate),
                r.verdict,
            ));
        }
        out
    }

    /// Pretty JSON with stable field order (struct order, not map order).
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

fn fmt_float(x: f64) -> String {
    // Negative zero is numerically equal to zero; printing the sign would
    // make byte-equality depend on how a zero was computed.
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

/// Keeps descriptors inside one CSV cell without quoting rules.
fn sanitize_cell(s: &str) -> String {
    s.replace([',', '\n', '\r', '"'], ";")
}
