use thiserror::Error;

/// Errors raised by the arithmetic, lattice, and enumeration routines.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("precision exponent must be at least 1")]
    ZeroPrecision,
    #[error("{p}^{precision} does not fit the exact integer model")]
    PrecisionOverflow { p: u64, precision: u32 },
    #[error("mixed moduli: {left} vs {right}")]
    ModulusMismatch { left: String, right: String },
    #[error("value {value} is out of range for modulus {modulus}")]
    OutOfRange { value: i128, modulus: u64 },
    #[error("element is not a unit (valuation of determinant is {valuation})")]
    NonUnit { valuation: u32 },
    #[error("requested exponent {requested} exceeds working precision {precision}")]
    PrecisionExceeded { requested: u32, precision: u32 },
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("subgroup closure exceeded the cap of {cap} elements")]
    ClosureBudgetExceeded { cap: usize },
    #[error("enumeration of {required} items exceeds the budget of {cap}")]
    BudgetExceeded { required: u128, cap: u128 },
    #[error("argument outside the domain: {0}")]
    DomainViolation(String),
    #[error("prime {p} is below the floor {floor} required here")]
    UnsupportedPrime { p: u64, floor: u64 },
    #[error("vectors are linearly dependent modulo p")]
    DegenerateSpan,
    #[error("no coordinate of the quadric gradient is a unit")]
    NoUnitDerivative,
    #[error("unsupported precision: {0}")]
    UnsupportedPrecision(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("linear functional is not surjective modulo p")]
    NotSurjective,
    #[error("span is not closed under the bracket: {0}")]
    BracketClosureAnomaly(String),
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("polynomial vanishes identically modulo {0}")]
    ZeroModP(u64),
    #[error("polynomial vanishes identically on SL(2, F_{0})")]
    IdenticallyZeroOnV(u64),
    #[error("polynomial is zero over F_{0}")]
    ZeroPolynomial(u64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for the errors that signal an exhausted enumeration or closure budget.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::ClosureBudgetExceeded { .. } | Error::BudgetExceeded { .. }
        )
    }
}
