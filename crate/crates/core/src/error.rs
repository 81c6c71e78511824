use crate::scalar::ElemKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("device capacity exceeded: requested {requested} bytes with {in_use} of {capacity} in use")]
    CapacityExceeded {
        requested: usize,
        in_use: usize,
        capacity: usize,
    },
    #[error("length mismatch: expected {expected} elements, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("element kind mismatch: expected {expected}, found {found}")]
    KindMismatch { expected: ElemKind, found: ElemKind },
    #[error("use of freed device buffer #{id}")]
    UseAfterFree { id: u64 },

    #[error("invalid launch extent {0:?}: every component must be at least 1")]
    InvalidExtent([usize; 3]),
    #[error("block of {threads} threads exceeds the limit of {max}")]
    BlockTooLarge { threads: usize, max: usize },
    #[error("shared memory request of {bytes} bytes exceeds the per-block limit of {limit}")]
    SharedMemoryExceeded { bytes: usize, limit: usize },
    #[error("kernel `{kernel}` takes {expected} buffer arguments, {found} given")]
    ArgCount {
        kernel: String,
        expected: usize,
        found: usize,
    },
    #[error("kernel `{0}` has no phases")]
    EmptyKernel(String),
    #[error("data race in kernel `{kernel}`: {detail}")]
    DataRace { kernel: String, detail: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid CSR structure: {0}")]
    InvalidCsr(String),
    #[error("zero or missing diagonal entry in row {row}")]
    ZeroDiagonal { row: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("{method} breakdown: |{quantity}| = {value:e} is below the breakdown threshold")]
    Breakdown {
        method: &'static str,
        quantity: &'static str,
        value: f64,
    },

    #[error("malformed Matrix Market input at line {line}: {msg}")]
    MalformedMatrixMarket { line: usize, msg: String },
    #[error("entry ({row}, {col}) at line {line} is outside the declared {n_rows}x{n_cols} matrix")]
    IndexOutOfBounds {
        line: usize,
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("duplicate entry ({row}, {col}) at line {line}")]
    DuplicateEntry { line: usize, row: usize, col: usize },

    #[error("unknown term `{term}`; known terms: {}", known.join(", "))]
    UnknownTerm { term: String, known: Vec<String> },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
