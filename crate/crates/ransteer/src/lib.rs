//! Host-side tooling around [`ransteer_core`]: scenario files, the
//! length-prefixed wire transport used when the RAN and the RIC run as separate
//! processes, CSV export with a run manifest, and detector bundles on disk.
//!
//! The `ransteer` binary wires these together behind a small command line.

pub mod config;
pub mod error;
pub mod export;
pub mod framing;
pub mod split;

pub use config::{load_config, parse_config, Overrides};
pub use error::{Error, Result};
pub use export::{config_hash, load_bundle, save_bundle, Export, Manifest};
pub use framing::{read_frame, write_frame, MAX_FRAME_LEN};
pub use split::{connect_ran, drive_ran, run_scenario, run_split, serve_one, serve_ric, RicSummary};
