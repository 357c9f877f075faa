//! Metric records shared by validation routines and the verification suites.

/// Outcome of a metric. `Measured` carries no tolerance and never passes or fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Measured,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Measured => "measured",
        }
    }
}

/// How a metric is compared against its reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Check {
    /// |value - reference| <= tolerance
    Within {
        reference: f64,
        tolerance: f64,
    },
    /// value <= bound
    AtMost(f64),
    /// value >= bound
    AtLeast(f64),
    /// value is finite
    Finite,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub check: Check,
    pub status: Status,
}

impl Metric {
    pub fn new(name: impl Into<String>, value: f64, check: Check) -> Self {
        let status = match check {
            Check::None => Status::Measured,
            _ if !value.is_finite() => Status::Fail,
            Check::Within { reference, tolerance } => pass_if((value - reference).abs() <= tolerance),
            Check::AtMost(b) => pass_if(value <= b),
            Check::AtLeast(b) => pass_if(value >= b),
            Check::Finite => Status::Pass,
        };
        Self { name: name.into(), value, check, status }
    }

    pub fn measured(name: impl Into<String>, value: f64) -> Self {
        Self::new(name, value, Check::None)
    }

    /// The reference value and the tolerance, for reporting.
    pub fn reference_and_tolerance(&self) -> (Option<f64>, Option<f64>) {
        match self.check {
            Check::Within { reference, tolerance } => (Some(reference), Some(tolerance)),
            Check::AtMost(b) | Check::AtLeast(b) => (Some(b), None),
            Check::Finite | Check::None => (None, None),
        }
    }

    pub fn comparison(&self) -> &'static str {
        match self.check {
            Check::Within { .. } => "abs_within",
            Check::AtMost(_) => "le",
            Check::AtLeast(_) => "ge",
            Check::Finite => "finite",
            Check::None => "none",
        }
    }
}

fn pass_if(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// A named list of metrics with parameters and provenance, in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EstimateReport {
    pub suite: String,
    pub note: String,
    pub parameters: Vec<(String, String)>,
    pub metrics: Vec<Metric>,
    pub provenance: Vec<(String, String)>,
}

impl EstimateReport {
    pub fn new(suite: impl Into<String>) -> Self {
        Self { suite: suite.into(), ..Default::default() }
    }

    pub fn param(&mut self, key: impl Into<String>, value: impl ToString) {
        self.parameters.push((key.into(), value.to_string()));
    }

    pub fn push(&mut self, m: Metric) {
        self.metrics.push(m);
    }

    pub fn extend(&mut self, other: EstimateReport) {
        self.metrics.extend(other.metrics);
    }

    pub fn all_pass(&self) -> bool {
        self.metrics.iter().all(|m| m.status != Status::Fail)
    }

    pub fn failures(&self) -> Vec<&Metric> {
        self.metrics.iter().filter(|m| m.status == Status::Fail).collect()
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statuses() {
        assert_eq!(Metric::new("a", 1.0, Check::AtMost(2.0)).status, Status::Pass);
        assert_eq!(Metric::new("a", 3.0, Check::AtMost(2.0)).status, Status::Fail);
        assert_eq!(Metric::new("a", f64::NAN, Check::Finite).status, Status::Fail);
        assert_eq!(Metric::new("a", 5.0, Check::None).status, Status::Measured);
        let m = Metric::new("a", 1.0 + 1e-9, Check::Within { reference: 1.0, tolerance: 1e-8 });
        assert_eq!(m.status, Status::Pass);
    }

    #[test]
    fn report_passes_only_without_failures() {
        let mut r = EstimateReport::new("x");
        r.push(Metric::measured("m", 1.0));
        assert!(r.all_pass());
        r.push(Metric::new("f", 2.0, Check::AtLeast(3.0)));
        assert!(!r.all_pass());
        assert_eq!(r.failures().len(), 1);
    }
}
