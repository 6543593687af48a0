//! Multi-party simulation harness: wire framing, a message-level server
//! endpoint, scripted honest and adversarial actors, and deterministic
//! scenario runs over an in-process bus or a local socket.

pub mod actors;
pub mod endpoint;
pub mod scenario;
pub mod transport;
pub mod wire;

pub use scenario::{run_scenario, GroupChoice, ScenarioReport, ScenarioSpec, TransportKind};
