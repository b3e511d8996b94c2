use crate::model::ConsistencyMode;
use crate::proto::TopicId;
use crate::sim::ComponentId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Broker,
    Controller,
    Producer,
    Consumer,
    Job,
    Store,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Broker => "broker",
            Role::Controller => "controller",
            Role::Producer => "producer",
            Role::Consumer => "consumer",
            Role::Job => "job",
            Role::Store => "store",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TopicInfo {
    pub name: String,
    pub consistency: ConsistencyMode,
    pub preferred: ComponentId,
    pub replicas: Vec<ComponentId>,
}

#[derive(Debug, Clone)]
pub struct ComponentInfo {
    pub name: String,
    /// Short label used in CSV exports.
    pub label: String,
    pub node: usize,
    pub role: Role,
}

/// Static facts every component may consult.
#[derive(Debug, Clone)]
pub struct Directory {
    pub components: Vec<ComponentInfo>,
    pub topics: Vec<TopicInfo>,
    pub controller: Option<ComponentId>,
    pub clients: Vec<ComponentId>,
}

impl Directory {
    pub fn name(&self, id: ComponentId) -> &str {
        &self.components[id.0 as usize].name
    }

    pub fn label(&self, id: ComponentId) -> &str {
        &self.components[id.0 as usize].label
    }

    pub fn node_of(&self, id: ComponentId) -> usize {
        self.components[id.0 as usize].node
    }

    pub fn topic(&self, t: TopicId) -> &TopicInfo {
        &self.topics[t.index()]
    }

    pub fn topic_id(&self, name: &str) -> Option<TopicId> {
        self.topics.iter().position(|t| t.name == name).map(|i| TopicId(i as u32))
    }

    pub fn find(&self, name: &str) -> Option<ComponentId> {
        self.components
            .iter()
            .position(|c| c.name == name)
            .map(|i| ComponentId(i as u32))
    }
}
