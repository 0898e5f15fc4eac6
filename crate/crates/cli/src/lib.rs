//! Command-line front end and WebSocket/HTTP server for `gesmap-core`.

pub mod args;
pub mod commands;
pub mod server;

use gesmap_core::ErrorKind;

/// Bad flags or flag combinations detected before any work starts.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub const EXIT_DATA: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_DIVERGENCE: i32 = 4;
pub const EXIT_ENVIRONMENT: i32 = 5;

/// Process exit code for a failed command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<gesmap_core::Error>() {
            return match e.kind() {
                ErrorKind::Data => EXIT_DATA,
                ErrorKind::Config => EXIT_CONFIG,
                ErrorKind::Divergence => EXIT_DIVERGENCE,
                ErrorKind::Environment => EXIT_ENVIRONMENT,
            };
        }
        if cause.is::<UsageError>() {
            return EXIT_CONFIG;
        }
        if cause.is::<std::io::Error>() {
            return EXIT_ENVIRONMENT;
        }
    }
    EXIT_DATA
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_follow_error_kind() {
        let e = |x: gesmap_core::Error| exit_code(&anyhow::Error::new(x));
        assert_eq!(e(gesmap_core::Error::Schema("x".into())), 2);
        assert_eq!(e(gesmap_core::Error::Parameter("x".into())), 3);
        assert_eq!(
            e(gesmap_core::Error::Divergence {
                epoch: 1,
                loss: f64::NAN
            }),
            4
        );
        assert_eq!(e(std::io::Error::other("x").into()), 5);
        assert_eq!(
            exit_code(&anyhow::Error::new(UsageError("x".into())).context("while parsing")),
            3
        );
        assert_eq!(exit_code(&anyhow::anyhow!("other")), 2);
    }
}
