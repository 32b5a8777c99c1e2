use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] selfrepel_core::Error),

    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct ErrorDoc<'a> {
    error: ErrorBody<'a>,
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        use selfrepel_core::Error as E;
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Json(_) => "json",
            CliError::Core(e) => match e {
                E::InvalidParameter { .. } => "invalid_parameter",
                E::Parity(_) => "parity",
                E::NotElliptic { .. } => "not_elliptic",
                E::RootFinding(_) => "root_finding",
                E::NotConverged(_) => "not_converged",
                E::InsufficientData(_) => "insufficient_data",
                E::MomentBlowUp(_) => "moment_blow_up",
                E::Unsupported(_) => "unsupported",
                E::Budget(_) => "budget",
                E::Snapshot(_) => "snapshot",
                E::Io(_) => "io",
                E::Json(_) => "json",
            },
        }
    }

    /// 2 for rejected input, 1 for failures while running.
    pub fn exit_code(&self) -> u8 {
        match self.kind() {
            "config" | "invalid_parameter" | "parity" | "not_elliptic" | "unsupported" | "budget" => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> String {
        let doc = ErrorDoc {
            error: ErrorBody {
                kind: self.kind(),
                message: self.to_string(),
            },
        };
        serde_json::to_string(&doc).unwrap_or_else(|_| format!("{{\"error\":{{\"kind\":\"{}\"}}}}", self.kind()))
    }
}
