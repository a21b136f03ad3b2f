use std::fmt;

use serde::{Deserialize, Serialize};

/// Evaluation route that produced a probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    RubenSeries,
    NegOnly,
    PosOnly,
    Mixed,
    General,
    Oracle,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::RubenSeries => "ruben-series",
            Method::NegOnly => "neg-only",
            Method::PosOnly => "pos-only",
            Method::Mixed => "mixed",
            Method::General => "general",
            Method::Oracle => "oracle",
        }
    }

    /// Whether repeated evaluation gives the same value without a seed.
    pub fn is_deterministic(self) -> bool {
        matches!(
            self,
            Method::RubenSeries | Method::NegOnly | Method::PosOnly
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A probability together with its error bar.
///
/// For deterministic routes `standard_error` holds a truncation bound; for
/// sampling routes it is the standard error across replicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub method: Method,
    pub evaluations: u64,
}

impl TailEstimate {
    pub fn exact(value: f64, method: Method) -> Self {
        TailEstimate {
            value,
            standard_error: 0.0,
            method,
            evaluations: 0,
        }
    }

    /// Clamps `value` into `[0, 1]`.
    pub(crate) fn clamped(mut self) -> Self {
        self.value = self.value.clamp(0.0, 1.0);
        self.standard_error = self.standard_error.max(0.0);
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }
}
