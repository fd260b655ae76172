use std::path::Path;
use std::process::ExitCode;

use serde_json::{json, Value};
use snsradar::iq::IqError;
use snsradar::scenario::ScenarioError;
use snsradar::Error;

/// A failed command: exit status 1 for configuration problems, 2 for
/// everything that goes wrong while running. Printed to stderr as one JSON
/// object.
#[derive(Debug)]
pub struct Failure {
    status: u8,
    body: Value,
}

impl Failure {
    fn config(kind: &str, message: String, extra: Value) -> Self {
        Self::new(1, kind, message, extra)
    }

    fn runtime(kind: &str, message: String, extra: Value) -> Self {
        Self::new(2, kind, message, extra)
    }

    fn new(status: u8, kind: &str, message: String, extra: Value) -> Self {
        let mut body = json!({ "kind": kind, "message": message });
        if let Value::Object(m) = extra {
            body.as_object_mut().unwrap().extend(m);
        }
        Self { status, body }
    }

    pub fn usage(message: String) -> Self {
        Self::config("usage", message.trim_end().to_string(), Value::Null)
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::runtime("io", format!("{}: {e}", path.display()), json!({ "path": path.display().to_string() }))
    }

    pub fn report(self) -> ExitCode {
        eprintln!("{}", json!({ "error": self.body }));
        ExitCode::from(self.status)
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let message = e.to_string();
        match e {
            ScenarioError::Parse { line, column, .. } => {
                Self::config("parse", message, json!({ "line": line, "column": column }))
            }
            ScenarioError::Invalid(v) => {
                let violations: Vec<Value> = v
                    .iter()
                    .map(|x| json!({ "field": x.field, "message": x.message }))
                    .collect();
                Self::config("validation", message, json!({ "violations": violations }))
            }
            ScenarioError::Read { path, .. } => Self::config("read", message, json!({ "path": path })),
            ScenarioError::Serialize(_) => Self::runtime("serialize", message, Value::Null),
        }
    }
}

impl From<IqError> for Failure {
    fn from(e: IqError) -> Self {
        Self::runtime("iq", e.to_string(), json!({ "code": e.code() }))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Scenario(e) => e.into(),
            Error::Iq(e) => e.into(),
            Error::Config(_) => Self::config("config", e.to_string(), Value::Null),
            e => Self::runtime("runtime", e.to_string(), Value::Null),
        }
    }
}
