use serde::{Deserialize, Serialize};
use std::net::SocketAddr;

/// Where the three message boundaries live. All of them may sit on one host.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeerConfig {
    /// Bound for incoming SPICE-TRK datagrams.
    pub tracker_listen: SocketAddr,
    /// Destination of outgoing event datagrams; `None` disables UDP out.
    #[serde(default)]
    pub event_publish: Option<SocketAddr>,
    /// Bound for the UI WebSocket channel.
    pub ui_listen: SocketAddr,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("peer ports must be distinct, {0} is used twice")]
pub struct PeerConfigError(pub u16);

impl Default for PeerConfig {
    fn default() -> Self {
        Self {
            tracker_listen: "127.0.0.1:3883".parse().unwrap(),
            event_publish: Some("127.0.0.1:3884".parse().unwrap()),
            ui_listen: "127.0.0.1:8765".parse().unwrap(),
        }
    }
}

impl PeerConfig {
    /// Port 0 asks the OS for a free port and is exempt from the check.
    pub fn validate(&self) -> Result<(), PeerConfigError> {
        let mut ports: Vec<u16> = [Some(self.tracker_listen), self.event_publish, Some(self.ui_listen)]
            .into_iter()
            .flatten()
            .map(|a| a.port())
            .filter(|p| *p != 0)
            .collect();
        ports.sort_unstable();
        match ports.windows(2).find(|w| w[0] == w[1]) {
            Some(w) => Err(PeerConfigError(w[0])),
            None => Ok(()),
        }
    }
}
