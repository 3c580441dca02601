use serde_json::{json, Value};

/// Failure of a CLI run, with its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Io(String),
    Core(qrm_core::Error),
}

impl From<qrm_core::Error> for CliError {
    fn from(e: qrm_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Exit codes, one per error kind. `0` is success.
pub const EXIT_CODES: &[(&str, i32)] = &[
    ("usage", 2),
    ("config", 2),
    ("spec", 3),
    ("degenerate_input", 4),
    ("insufficient_nodes", 5),
    ("coverage", 6),
    ("precision", 7),
    ("non_convergence", 8),
    ("domain", 9),
    ("contract", 10),
    ("io", 11),
];

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Core(e) => e.kind(),
        }
    }

    pub fn code(&self) -> i32 {
        let kind = self.kind();
        EXIT_CODES.iter().find(|(k, _)| *k == kind).map(|&(_, c)| c).expect("every error kind has an exit code")
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Config(m) | CliError::Io(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }

    /// `{"error": {kind, code, message, ...details}}`.
    pub fn to_json(&self) -> Value {
        let mut body = json!({ "kind": self.kind(), "code": self.code(), "message": self.message() });
        let details = match self {
            CliError::Core(qrm_core::Error::Coverage { first_uncovered }) => json!({ "first_uncovered": first_uncovered }),
            CliError::Core(qrm_core::Error::DegenerateInput { x0, degree, distance }) => {
                json!({ "x0": x0, "degree": degree, "distance": distance })
            }
            CliError::Core(qrm_core::Error::InsufficientNodes { nodes, degree, required }) => {
                json!({ "nodes": nodes, "degree": degree, "required": required })
            }
            CliError::Core(qrm_core::Error::NonConvergence { degree }) => json!({ "degree": degree }),
            _ => Value::Null,
        };
        if !details.is_null() {
            body["details"] = details;
        }
        json!({ "error": body })
    }
}
