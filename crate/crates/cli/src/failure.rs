use std::fmt;

/// Everything that ends a command early, mapped onto the exit-code contract.
#[derive(Debug)]
pub enum Failure {
    /// Unreadable or invalid configuration, bad arguments, or I/O trouble.
    Config(String),
    /// The integrator or iteration produced non-finite values.
    Numerical(String),
    /// A verification check failed.
    Verification(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Verification(_) => 3,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            Failure::Config(_) => "config_error",
            Failure::Numerical(_) => "numerical_abort",
            Failure::Verification(_) => "verification_failure",
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical abort: {m}"),
            Failure::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<torusflow::Error> for Failure {
    fn from(e: torusflow::Error) -> Self {
        match e {
            torusflow::Error::Numerical { .. } => Failure::Numerical(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("i/o: {e}"))
    }
}

impl From<crate::config::ConfigError> for Failure {
    fn from(e: crate::config::ConfigError) -> Self {
        Failure::Config(e.0)
    }
}
