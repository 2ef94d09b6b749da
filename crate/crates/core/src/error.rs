use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),

    #[error("jet order {needed} exceeds the order cap {cap}")]
    OrderCapExceeded { needed: usize, cap: usize },

    #[error("division by zero")]
    DivisionByZero,

    #[error("negative radicand under an even root")]
    NegativeRadicand,

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("evaluation produced a non-finite value")]
    NonFinite,

    #[error("no valid sample points after {attempts} attempts")]
    NoSamplePoints { attempts: usize },

    #[error("arithmetic overflow in exponent")]
    Overflow,

    #[error("exponent must be a rational constant")]
    NonConstantExponent,

    #[error("degree error: {0}")]
    Degree(String),

    #[error("invariance violation: residual dependence on orbit coordinate `{coordinate}` (derivative {derivative})")]
    InvarianceViolation { coordinate: String, derivative: String },

    #[error("basicness violation: component {component} survives with coefficient {coefficient}")]
    BasicnessViolation { component: String, coefficient: String },

    #[error("expression is not invariant under generator {generator}: {residual}")]
    NotInvariant { generator: usize, residual: String },

    #[error("omega is not skew-symmetric at ({row}, {col})")]
    NotSkew { row: usize, col: usize },

    #[error("chart maps are not mutually inverse: {0}")]
    InverseMismatch(String),

    #[error("singular Jacobian: {0}")]
    SingularJacobian(String),

    #[error("representative mismatch: {0}")]
    RepresentativeMismatch(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("schema violation at `{path}`: {reason}")]
    Schema { path: String, reason: String },

    #[error("validation failed for {entity}: {reason}")]
    Validation { entity: String, reason: String },

    #[error("unknown {kind} `{name}`")]
    UnknownEntity { kind: &'static str, name: String },

    #[error("i/o error: {0}")]
    Io(String),

    /// Another error tagged with where it happened, e.g. a field of a
    /// problem file.
    #[error("{location}: {source}")]
    At { location: String, source: Box<Error> },
}

impl Error {
    pub fn at(self, location: impl Into<String>) -> Error {
        Error::At {
            location: location.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error below any location tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::At { source, .. } => source.root(),
            e => e,
        }
    }

    /// Short machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::Syntax { .. } => "syntax",
            Error::UnknownIdentifier(_) => "unknown-identifier",
            Error::OrderCapExceeded { .. } => "order-cap-exceeded",
            Error::DivisionByZero => "division-by-zero",
            Error::NegativeRadicand => "negative-radicand",
            Error::UnboundVariable(_) => "unbound-variable",
            Error::NonFinite => "non-finite",
            Error::NoSamplePoints { .. } => "no-sample-points",
            Error::Overflow => "overflow",
            Error::NonConstantExponent => "non-constant-exponent",
            Error::Degree(_) => "degree",
            Error::InvarianceViolation { .. } => "invariance-violation",
            Error::BasicnessViolation { .. } => "basicness-violation",
            Error::NotInvariant { .. } => "not-invariant",
            Error::NotSkew { .. } => "not-skew",
            Error::InverseMismatch(_) => "inverse-mismatch",
            Error::SingularJacobian(_) => "singular-jacobian",
            Error::RepresentativeMismatch(_) => "representative-mismatch",
            Error::Precondition(_) => "precondition",
            Error::Dimension(_) => "dimension",
            Error::Schema { .. } => "schema",
            Error::Validation { .. } => "validation",
            Error::UnknownEntity { .. } => "unknown-entity",
            Error::Io(_) => "io",
            Error::At { .. } => unreachable!("root strips locations"),
        }
    }

    /// Location tags from outermost to innermost, then the path of a
    /// schema violation.
    pub fn locations(&self) -> Vec<&str> {
        let mut out = Vec::new();
        let mut e = self;
        while let Error::At { location, source } = e {
            out.push(location.as_str());
            e = source;
        }
        if let Error::Schema { path, .. } = e {
            out.push(path.as_str());
        }
        out
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
