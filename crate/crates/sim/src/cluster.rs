//! Present nodes of one cluster, with O(1) arrival, departure and uniform
//! sampling.

use slab::Slab;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Regular,
    Storage,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeState {
    pub kind: NodeKind,
    /// Member of the last broadcast DS list. Only storage nodes are listed.
    pub in_ds_list: bool,
    pub arrival_time: f64,
    pub departure_time: f64,
    present_slot: usize,
    storage_slot: Option<usize>,
}

#[derive(Debug, Default)]
pub struct Cluster {
    nodes: Slab<NodeState>,
    present: Vec<usize>,
    storage: Vec<usize>,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.present.len()
    }

    pub fn is_empty(&self) -> bool {
        self.present.is_empty()
    }

    pub fn storage_count(&self) -> usize {
        self.storage.len()
    }

    pub fn get(&self, id: usize) -> &NodeState {
        &self.nodes[id]
    }

    pub fn insert(&mut self, kind: NodeKind, arrival_time: f64, departure_time: f64) -> usize {
        let entry = self.nodes.vacant_entry();
        let id = entry.key();
        let storage_slot = (kind == NodeKind::Storage).then(|| {
            self.storage.push(id);
            self.storage.len() - 1
        });
        entry.insert(NodeState {
            kind,
            in_ds_list: false,
            arrival_time,
            departure_time,
            present_slot: self.present.len(),
            storage_slot,
        });
        self.present.push(id);
        id
    }

    pub fn remove(&mut self, id: usize) -> NodeState {
        let node = self.nodes.remove(id);
        self.present.swap_remove(node.present_slot);
        if let Some(&moved) = self.present.get(node.present_slot) {
            self.nodes[moved].present_slot = node.present_slot;
        }
        if let Some(slot) = node.storage_slot {
            self.storage.swap_remove(slot);
            if let Some(&moved) = self.storage.get(slot) {
                self.nodes[moved].storage_slot = Some(slot);
            }
        }
        node
    }

    /// The `index`-th present node, `index < len()`.
    pub fn nth_present(&self, index: usize) -> usize {
        self.present[index]
    }

    /// Puts every present storage node on the DS list.
    pub fn broadcast(&mut self) {
        for &id in &self.storage {
            self.nodes[id].in_ds_list = true;
        }
    }

    /// Storage nodes the requester may download from. With `refresh` the
    /// list is taken to be current at this instant.
    pub fn listed_storage(&self, refresh: bool) -> impl Iterator<Item = (usize, &NodeState)> + '_ {
        self.storage
            .iter()
            .map(move |&id| (id, &self.nodes[id]))
            .filter(move |(_, n)| refresh || n.in_ds_list)
    }
}
