use thiserror::Error;

pub type Result<T> = std::result::Result<T, QslError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QslError {
    #[error("number of sites must be between 1 and {max}, got {n_sites}")]
    InvalidSiteCount { n_sites: usize, max: usize },

    #[error("site {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("invalid edge ({0}, {1})")]
    InvalidEdge(usize, usize),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("invalid site permutation: {0}")]
    InvalidPermutation(String),

    #[error("symmetry does not preserve the interaction graph: edge ({0}, {1}) is mapped outside the edge set")]
    SymmetryBreaksGraph(usize, usize),

    #[error("symmetry class {0} is not applicable here")]
    SymmetryNotApplicable(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coupling matrix of edge orbit {orbit} must be symmetric")]
    NonSymmetricCoupling { orbit: usize },

    #[error("matrix is not Hermitian (max deviation {residual:e})")]
    NonHermitian { residual: f64 },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("Hamiltonian has zero energy bandwidth ({bandwidth:e})")]
    ZeroBandwidth { bandwidth: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{family} N={n_sites} on the {graph} graph is not in the catalog")]
    CombinationNotInCatalog {
        family: String,
        n_sites: usize,
        graph: String,
    },
}
