use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("expert index {index} out of range for {n} experts")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("{name} = {value} outside of {range}")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("weights are not a probability vector: {0}")]
    InvalidSimplex(String),

    #[error("quadrature failed to converge: estimate {estimate}, error {error}")]
    Quadrature { estimate: f64, error: f64 },

    #[error("potential family {family} does not support {what}")]
    Unsupported {
        family: &'static str,
        what: &'static str,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_delta_open(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            name: "delta",
            value: delta,
            range: "(0, 1)",
        })
    }
}

pub(crate) fn check_delta_half_open(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            name: "delta",
            value: delta,
            range: "(0, 1]",
        })
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t < 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            name: "t",
            value: t,
            range: "(-inf, 0)",
        })
    }
}
