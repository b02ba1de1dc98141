use serde::{Deserialize, Serialize};

use crate::sos::Certificate;

use super::PackError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Every required certificate verified with a positive margin.
    Certified,
    /// At least one violation witness survived exact re-evaluation.
    Refuted,
    /// Neither a full set of certificates nor a witness; raising the
    /// certificate degree or the oracle budget may resolve it.
    Undecided,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairResult {
    pub i: usize,
    pub j: usize,
    pub certificate: Certificate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Counterexample {
    pub constraint: String,
    pub witness: Vec<f64>,
}

/// Everything `certify_packing` found: one containment certificate per
/// object, one domain certificate per object when the container has an outer
/// domain (`None` when skipped), one certificate per unordered pair, and the
/// witnesses discovered for constraints that failed to verify.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PackingReport {
    pub verdict: Verdict,
    pub containment: Vec<Certificate>,
    pub domain: Option<Vec<Certificate>>,
    pub non_overlap: Vec<PairResult>,
    pub counterexamples: Vec<Counterexample>,
}

impl PackingReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<PackingReport, PackError> {
        serde_json::from_str(text).map_err(|e| PackError::Json(e.to_string()))
    }

    pub fn all_verified(&self) -> bool {
        self.containment.iter().all(|c| c.verified)
            && self
                .domain
                .as_ref()
                .is_none_or(|ds| ds.iter().all(|c| c.verified))
            && self.non_overlap.iter().all(|p| p.certificate.verified)
    }

    /// Smallest margin over every verified certificate, if any verified.
    pub fn min_gamma(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        let mut consider = |cert: &Certificate| {
            if cert.verified {
                if let Some(g) = cert.gamma {
                    best = Some(match best {
                        Some(b) => b.min(g),
                        None => g,
                    });
                }
            }
        };
        for c in &self.containment {
            consider(c);
        }
        if let Some(ds) = &self.domain {
            for c in ds {
                consider(c);
            }
        }
        for p in &self.non_overlap {
            consider(&p.certificate);
        }
        best
    }
}
