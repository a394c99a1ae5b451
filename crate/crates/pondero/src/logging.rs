//! Minimal stderr logger controlled by the `PONDERO_LOG` environment
//! variable: `off` (default), `info`, or `debug`.

use std::sync::OnceLock;

/// Verbosity levels, ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    Off,
    Info,
    Debug,
}

static LEVEL: OnceLock<Level> = OnceLock::new();

/// Current verbosity, read from `PONDERO_LOG` on first use.
pub fn level() -> Level {
    *LEVEL.get_or_init(|| match std::env::var("PONDERO_LOG").as_deref() {
        Ok("info") | Ok("INFO") => Level::Info,
        Ok("debug") | Ok("DEBUG") => Level::Debug,
        _ => Level::Off,
    })
}

/// Log at info level.
pub fn info(msg: impl AsRef<str>) {
    if level() >= Level::Info {
        eprintln!("pondero: {}", msg.as_ref());
    }
}

/// Log at debug level.
pub fn debug(msg: impl AsRef<str>) {
    if level() >= Level::Debug {
        eprintln!("pondero[debug]: {}", msg.as_ref());
    }
}
