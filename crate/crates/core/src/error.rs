use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The rate exceeds the single-user capacity `log2(1 + snr)`.
    #[error("rate {rate} b/s/Hz is not decodable even without interference (capacity {capacity})")]
    InfeasibleRate { rate: f64, capacity: f64 },

    #[error("{service} population needs two distinct slots but the frame has {slots}")]
    TooFewSlots { service: &'static str, slots: usize },

    #[error("load {load} rounds the {service} population to zero")]
    DegenerateLoad { load: f64, service: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;
