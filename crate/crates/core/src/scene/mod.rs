//! Agent registry and workspace geometry.

mod homography;
mod registry;
mod workspace;

pub use homography::{fit_homography, Homography, HomographyError, HomographyFit, MIN_DETERMINANT};
pub use registry::{Agent, AgentKind, AgentRegistry, AgentState, RegistryError, ADDRESS_SCHEME};
pub use workspace::{
    update_zone_membership, Transition, Workspace, WorkspaceConfig, WorkspaceError, Zone, ZoneEvent, ZoneMembership,
    DEFAULT_PROJECTOR_WIDTH_PX, DEFAULT_TABLE_MM, DIAL_ZONE, DIAL_ZONE_INSET_MM, DIAL_ZONE_SIZE_MM, EXIT_HYSTERESIS_MM,
};
