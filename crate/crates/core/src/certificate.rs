//! Machine-checked chains of interval comparisons.

use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::interval::Interval;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    JointUpperBound,
    DoubleLowerBound,
    Membership,
    DivergenceWitness,
}

impl fmt::Display for CertificateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CertificateKind::JointUpperBound => "joint-upper-bound",
            CertificateKind::DoubleLowerBound => "double-lower-bound",
            CertificateKind::Membership => "membership",
            CertificateKind::DivergenceWitness => "divergence-witness",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Comparison {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparison {
    /// Whether every point of `value` stands in this relation to every
    /// point of `threshold`.
    pub fn certainly(self, value: &Interval, threshold: &Interval) -> bool {
        match self {
            Comparison::Lt => value.certainly_lt(threshold),
            Comparison::Le => value.certainly_le(threshold),
            Comparison::Gt => value.certainly_gt(threshold),
            Comparison::Ge => value.certainly_ge(threshold),
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Lt => "<",
            Comparison::Le => "<=",
            Comparison::Gt => ">",
            Comparison::Ge => ">=",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateEntry {
    pub description: String,
    pub value: Interval,
    pub comparison: Comparison,
    pub threshold: Interval,
    pub holds: bool,
}

/// A list of certified comparisons plus reported quantities.
///
/// The verdict is the conjunction of all entries; a certificate can also be
/// blocked explicitly, e.g. when the caller declares a series divergent.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub title: String,
    pub entries: Vec<CertificateEntry>,
    /// Values reported without a comparison.
    pub reported: Vec<(String, Interval)>,
    pub notes: Vec<String>,
    pub blockers: Vec<String>,
    pub verdict: bool,
}

impl Certificate {
    pub fn new(kind: CertificateKind, title: impl Into<String>) -> Self {
        Certificate {
            kind,
            title: title.into(),
            entries: Vec::new(),
            reported: Vec::new(),
            notes: Vec::new(),
            blockers: Vec::new(),
            verdict: true,
        }
    }

    pub fn check(&mut self, description: impl Into<String>, value: Interval, comparison: Comparison, threshold: Interval) -> bool {
        let holds = comparison.certainly(&value, &threshold);
        self.verdict &= holds;
        self.entries.push(CertificateEntry {
            description: description.into(),
            value,
            comparison,
            threshold,
            holds,
        });
        holds
    }

    pub fn report(&mut self, name: impl Into<String>, value: Interval) {
        self.reported.push((name.into(), value));
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn block(&mut self, reason: impl Into<String>) {
        self.blockers.push(reason.into());
        self.verdict = false;
    }

    pub fn verdict(&self) -> bool {
        self.verdict
    }

    pub fn reported_value(&self, name: &str) -> Option<&Interval> {
        self.reported.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CertificateEntry> {
        self.entries.iter().filter(|e| !e.holds)
    }

    /// Human-readable report.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let verdict = if self.verdict { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "[{verdict}] {} ({})", self.title, self.kind);
        for e in &self.entries {
            let mark = if e.holds { "ok  " } else { "FAIL" };
            let _ = writeln!(
                out,
                "  {mark} {}: {} {} {}",
                e.description,
                e.value,
                e.comparison.symbol(),
                e.threshold
            );
        }
        for (name, v) in &self.reported {
            let _ = writeln!(out, "  value {name} = {v}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        for b in &self.blockers {
            let _ = writeln!(out, "  blocked: {b}");
        }
        out
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_is_conjunction() {
        let mut c = Certificate::new(CertificateKind::Membership, "t");
        assert!(c.verdict());
        assert!(c.check("one < two", Interval::from_int(1, 64), Comparison::Lt, Interval::from_int(2, 64)));
        assert!(c.verdict());
        assert!(!c.check("one >= two", Interval::from_int(1, 64), Comparison::Ge, Interval::from_int(2, 64)));
        assert!(!c.verdict());
        assert_eq!(c.failures().count(), 1);
        assert!(c.render_text().starts_with("[FAIL]"));
    }

    #[test]
    fn overlapping_enclosures_do_not_certify() {
        let mut c = Certificate::new(CertificateKind::Membership, "t");
        let a = Interval::from_ratio(&1.into(), &3.into(), 64);
        assert!(!c.check("a < a", a.clone(), Comparison::Lt, a.clone()));
        // equal points satisfy the non-strict forms
        let one = Interval::one(64);
        assert!(Comparison::Le.certainly(&one, &one));
        assert!(Comparison::Ge.certainly(&one, &one));
    }

    #[test]
    fn blockers_fail_the_verdict() {
        let mut c = Certificate::new(CertificateKind::Membership, "t");
        c.block("declared divergent");
        assert!(!c.verdict());
        assert!(c.render_text().contains("blocked: declared divergent"));
    }
}
