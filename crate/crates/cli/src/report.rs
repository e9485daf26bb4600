use serde::Serialize;
use serde_json::Value;

/// How a check's discrepancy is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `|value - reference|`
    Absolute,
    /// `|value - reference| / |reference|`
    Relative,
    /// `|value - reference| / std_error`
    StdErrors,
    /// The value is itself a residual that should vanish.
    Residual,
    /// Reported only, not judged.
    Info,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    pub metric: Metric,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discrepancy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

impl Check {
    pub fn against(name: &str, value: f64, reference: f64, metric: Metric, tolerance: f64) -> Self {
        let diff = (value - reference).abs();
        let discrepancy = match metric {
            Metric::Relative if reference != 0.0 => diff / reference.abs(),
            _ => diff,
        };
        Self::judged(name, value, Some(reference), metric, discrepancy, tolerance)
    }

    pub fn residual(name: &str, value: f64, tolerance: f64) -> Self {
        Self::judged(name, value, None, Metric::Residual, value.abs(), tolerance)
    }

    pub fn std_errors(name: &str, value: f64, reference: f64, std_error: f64, sigmas: f64) -> Self {
        let diff = (value - reference).abs();
        let z = if std_error > 0.0 {
            diff / std_error
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Self::judged(name, value, Some(reference), Metric::StdErrors, z, sigmas)
    }

    pub fn info(name: &str, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            reference: None,
            metric: Metric::Info,
            discrepancy: None,
            tolerance: None,
            pass: None,
        }
    }

    /// A check whose value could not be computed.
    pub fn failed(name: &str) -> Self {
        Self {
            name: name.into(),
            value: f64::NAN,
            reference: None,
            metric: Metric::Info,
            discrepancy: None,
            tolerance: None,
            pass: Some(false),
        }
    }

    fn judged(
        name: &str,
        value: f64,
        reference: Option<f64>,
        metric: Metric,
        discrepancy: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            name: name.into(),
            value,
            reference,
            metric,
            discrepancy: Some(discrepancy),
            tolerance: Some(tolerance),
            pass: Some(discrepancy <= tolerance),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    pub inputs_digest: String,
    pub pass: bool,
    pub results: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notices: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl RunReport {
    pub fn new(command: Vec<String>, inputs_digest: String) -> Self {
        Self {
            command,
            inputs_digest,
            pass: true,
            results: Vec::new(),
            notices: Vec::new(),
            output: None,
            timing_ms: None,
        }
    }

    pub fn push(&mut self, check: Check) {
        if check.pass == Some(false) {
            self.pass = false;
        }
        self.results.push(check);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flat projection: one row per check, or one row for a bare output object.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.results.is_empty() {
            if let Some(Value::Object(map)) = &self.output {
                let keys: Vec<&str> = map.keys().map(String::as_str).collect();
                out.push_str(&keys.join(","));
                out.push('\n');
                let row: Vec<String> = map.values().map(csv_cell).collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
            return out;
        }
        out.push_str("name,value,reference,metric,discrepancy,tolerance,pass\n");
        for c in &self.results {
            let metric = serde_json::to_value(c.metric).expect("metric serializes");
            let row = [
                c.name.clone(),
                num(c.value),
                c.reference.map(num).unwrap_or_default(),
                csv_cell(&metric),
                c.discrepancy.map(num).unwrap_or_default(),
                c.tolerance.map(num).unwrap_or_default(),
                c.pass.map(|p| p.to_string()).unwrap_or_default(),
            ];
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        String::new()
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => n.as_f64().map(num).unwrap_or_else(|| n.to_string()),
        other => other.to_string(),
    }
}

/// Printed on stdout when the inputs cannot be used.
#[derive(Debug, Serialize)]
pub struct ErrorReport<'a> {
    pub command: &'a [String],
    pub pass: bool,
    pub error: &'a str,
}
