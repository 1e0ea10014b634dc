/// Caps on the exhaustive computations.
///
/// Every enumeration checks its projected size against these before it
/// allocates anything large.
#[derive(Clone, Debug)]
pub struct Limits {
    /// Most distributions a single enumeration may visit.
    pub max_distributions: u64,
    /// Largest ground set for the subset dynamic program.
    pub max_subset_n: usize,
    /// Largest n for the exact binary hitting-set solver.
    pub max_exact_n_binary: usize,
    /// Largest n for the exact d-ary hitting-set solver.
    pub max_exact_n_dary: usize,
    /// Largest n the optimality verifier enumerates.
    pub max_verify_n: usize,
}

pub const CAP_BYTES_ENV: &str = "QSPLIT_CAP_BYTES";

const BYTES_PER_DISTRIBUTION: u64 = 64;
const DEFAULT_CAP_BYTES: u64 = 2 << 30;

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_distributions: DEFAULT_CAP_BYTES / BYTES_PER_DISTRIBUTION,
            max_subset_n: 16,
            max_exact_n_binary: 6,
            max_exact_n_dary: 5,
            max_verify_n: 8,
        }
    }
}

impl Limits {
    /// Defaults, with the distribution budget taken from `QSPLIT_CAP_BYTES`
    /// when that variable holds a byte count.
    pub fn from_env() -> Self {
        let mut limits = Limits::default();
        if let Some(bytes) = std::env::var(CAP_BYTES_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<u64>().ok())
        {
            limits.max_distributions = (bytes / BYTES_PER_DISTRIBUTION).max(1);
        }
        limits
    }

    /// Raises every n cap to at least `n`.
    pub fn with_n_override(mut self, n: usize) -> Self {
        self.max_subset_n = self.max_subset_n.max(n);
        self.max_exact_n_binary = self.max_exact_n_binary.max(n);
        self.max_exact_n_dary = self.max_exact_n_dary.max(n);
        self.max_verify_n = self.max_verify_n.max(n);
        self
    }
}
