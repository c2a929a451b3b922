use std::fmt;
use std::path::Path;

/// Machine-readable failure class printed as `error[<category>]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Io,
    Config,
    Data,
    Fit,
    Train,
    Artifact,
    Argument,
}

impl Category {
    pub fn name(self) -> &'static str {
        match self {
            Category::Io => "io",
            Category::Config => "config",
            Category::Data => "data",
            Category::Fit => "fit",
            Category::Train => "train",
            Category::Artifact => "artifact",
            Category::Argument => "argument",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Category::Argument => 2,
            Category::Io => 3,
            Category::Config => 4,
            Category::Data => 5,
            Category::Fit => 6,
            Category::Train => 7,
            Category::Artifact => 8,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub category: Category,
    pub message: String,
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn new(category: Category, message: impl Into<String>) -> Self {
        Self {
            category,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(Category::Config, message)
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        Self::new(Category::Io, format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // One line, so scripts can split on the first colon.
        let msg = self.message.replace('\n', " ");
        write!(f, "error[{}]: {msg}", self.category.name())
    }
}

impl std::error::Error for CliError {}

impl From<copaug::Error> for CliError {
    fn from(e: copaug::Error) -> Self {
        use copaug::Error as E;
        let category = match &e {
            E::Io { .. } => Category::Io,
            E::Schema(_) | E::InvalidProfile { .. } | E::Shape { .. } => Category::Data,
            E::InvalidArgument(_) => Category::Argument,
            E::Degenerate(_) | E::NoConvergence(_) | E::EdgeFit { .. } => Category::Fit,
            E::NonFiniteLoss { .. } => Category::Train,
            E::Artifact(_) => Category::Artifact,
        };
        Self::new(category, e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::new(Category::Io, e.to_string())
    }
}
