use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_TEST_FAILURE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid coagulation measure:\n  {}", .0.join("\n  "))]
    InvalidMeasure(Vec<String>),

    #[error("resource cap: {0}")]
    Resource(String),

    #[error("{0}")]
    Core(gfvi_core::Error),

    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Sorts a core error into configuration problems, resource caps, and
    /// everything else.
    pub fn from_core(e: gfvi_core::Error) -> Self {
        use gfvi_core::Error as E;
        match e {
            E::ResourceCap(m) => CliError::Resource(m),
            E::RejectionCap(n) => CliError::Resource(format!("rejection sampling exceeded {n} trials")),
            E::InvalidMeasure(v) => CliError::InvalidMeasure(v.iter().map(|x| x.to_string()).collect()),
            E::InvalidPartition(_)
            | E::InvalidMass(_)
            | E::InvalidArgument(_)
            | E::GroundMismatch { .. }
            | E::BoundUndefined(_) => CliError::Config(e.to_string()),
            other => CliError::Core(other),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::InvalidMeasure(_) => EXIT_CONFIG,
            CliError::Resource(_) => EXIT_RESOURCE,
            CliError::Core(_) | CliError::Io { .. } => 1,
        }
    }
}

impl From<gfvi_core::Error> for CliError {
    fn from(e: gfvi_core::Error) -> Self {
        CliError::from_core(e)
    }
}
