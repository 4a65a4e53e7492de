use serde::{Deserialize, Serialize};

use super::{
    ConnectionRequirement, HeadwayEntry, HeadwayTable, Instance, Network, Node, Scenario, Time,
    TrainRequest, Arc,
};

fn yes() -> bool {
    true
}

fn is_true(v: &bool) -> bool {
    *v
}

/// On-disk layout of an [`Instance`]: the network fields are flattened to the
/// top level.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(super) struct InstanceFile {
    nodes: Vec<Node>,
    arcs: Vec<Arc>,
    trains: Vec<TrainRequest>,
    #[serde(default)]
    connections: Vec<ConnectionRequirement>,
    #[serde(default)]
    scenarios: Vec<Scenario>,
    horizon: Time,
    capacity_window: Time,
    #[serde(default)]
    headway_default: Time,
    #[serde(default)]
    headways: Vec<HeadwayEntry>,
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    dwell: bool,
}

impl TryFrom<InstanceFile> for Instance {
    type Error = std::convert::Infallible;

    fn try_from(f: InstanceFile) -> Result<Self, Self::Error> {
        Ok(Instance {
            network: Network {
                nodes: f.nodes,
                arcs: f.arcs,
                headways: HeadwayTable { entries: f.headways, default: f.headway_default },
            },
            horizon: f.horizon,
            trains: f.trains,
            connections: f.connections,
            scenarios: f.scenarios,
            capacity_window: f.capacity_window,
            dwell: f.dwell,
        })
    }
}

impl From<Instance> for InstanceFile {
    fn from(i: Instance) -> Self {
        InstanceFile {
            nodes: i.network.nodes,
            arcs: i.network.arcs,
            trains: i.trains,
            connections: i.connections,
            scenarios: i.scenarios,
            horizon: i.horizon,
            capacity_window: i.capacity_window,
            headway_default: i.network.headways.default,
            headways: i.network.headways.entries,
            dwell: i.dwell,
        }
    }
}
