//! Links, switches and static routing.

mod link;
mod network;
mod routing;

pub use link::{serialization_time, transmission_time, LinkState, FRAME_OVERHEAD_BYTES};
pub use network::{
    assign_ports, ClassBytes, DropReason, Frame, FrameClass, Hop, InFlight, Network, PortCounters, PortSample,
    UnknownPortError,
};
pub use routing::{compute_routes, DisconnectedError, Hop as RouteHop, RoutingTable};
