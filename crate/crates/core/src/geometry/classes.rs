use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::GeometryError;

pub const UNLABELED: &str = "unlabeled";
pub const TRACK: &str = "track";
pub const PLATFORM: &str = "platform";
pub const NEAR_TRACK_GROUND: &str = "near_track_ground";
pub const POLE: &str = "pole";
pub const CALIBRATION_SPHERE: &str = "calibration_sphere";
/// Ids `>= obstacle_base` are reserved for virtual obstacles.
pub const OBSTACLE_BASE: &str = "obstacle_base";

const REQUIRED: [&str; 6] = [UNLABELED, TRACK, PLATFORM, NEAR_TRACK_GROUND, POLE, OBSTACLE_BASE];

/// Semantic class name ↔ id registry shared by clouds, masks and stencils.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, u16>", into = "BTreeMap<String, u16>")]
pub struct SemanticClassMap {
    ids: BTreeMap<String, u16>,
}

impl Default for SemanticClassMap {
    fn default() -> Self {
        Self::standard()
    }
}

impl SemanticClassMap {
    pub fn standard() -> Self {
        let ids = [
            (UNLABELED, 0),
            (TRACK, 1),
            (PLATFORM, 2),
            (NEAR_TRACK_GROUND, 3),
            (POLE, 4),
            (CALIBRATION_SPHERE, 5),
            (OBSTACLE_BASE, 16),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Self { ids }
    }

    pub fn new(ids: BTreeMap<String, u16>) -> Result<Self, GeometryError> {
        for name in REQUIRED {
            if !ids.contains_key(name) {
                return Err(GeometryError::ClassMap(format!("missing class `{name}`")));
            }
        }
        if ids[UNLABELED] != 0 {
            return Err(GeometryError::ClassMap("`unlabeled` must be 0".into()));
        }
        let base = ids[OBSTACLE_BASE];
        let mut seen = BTreeMap::new();
        for (name, &id) in &ids {
            if let Some(prev) = seen.insert(id, name) {
                return Err(GeometryError::ClassMap(format!("id {id} used by both `{prev}` and `{name}`")));
            }
            if name != OBSTACLE_BASE && id >= base {
                return Err(GeometryError::ClassMap(format!(
                    "class `{name}` id {id} collides with the obstacle range starting at {base}"
                )));
            }
        }
        Ok(Self { ids })
    }

    pub fn id(&self, name: &str) -> Option<u16> {
        self.ids.get(name).copied()
    }

    /// Id of a class that [`SemanticClassMap::new`] guarantees to exist.
    fn required(&self, name: &str) -> u16 {
        self.ids[name]
    }

    pub fn track(&self) -> u16 {
        self.required(TRACK)
    }

    pub fn platform(&self) -> u16 {
        self.required(PLATFORM)
    }

    pub fn near_track_ground(&self) -> u16 {
        self.required(NEAR_TRACK_GROUND)
    }

    pub fn pole(&self) -> u16 {
        self.required(POLE)
    }

    pub fn obstacle_base(&self) -> u16 {
        self.required(OBSTACLE_BASE)
    }

    pub fn calibration_sphere(&self) -> Option<u16> {
        self.id(CALIBRATION_SPHERE)
    }

    pub fn is_obstacle(&self, id: u16) -> bool {
        id >= self.obstacle_base()
    }

    pub fn contains_id(&self, id: u16) -> bool {
        self.is_obstacle(id) || self.ids.values().any(|&v| v == id)
    }

    /// Name for any id in use; obstacle ids resolve to `obstacle_base+k`.
    pub fn name_of(&self, id: u16) -> Option<String> {
        if let Some((name, _)) = self.ids.iter().find(|(n, &v)| v == id && n.as_str() != OBSTACLE_BASE) {
            return Some(name.clone());
        }
        let base = self.obstacle_base();
        (id >= base).then(|| format!("{OBSTACLE_BASE}+{}", id - base))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, u16)> {
        self.ids.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

impl TryFrom<BTreeMap<String, u16>> for SemanticClassMap {
    type Error = GeometryError;

    fn try_from(ids: BTreeMap<String, u16>) -> Result<Self, Self::Error> {
        Self::new(ids)
    }
}

impl From<SemanticClassMap> for BTreeMap<String, u16> {
    fn from(m: SemanticClassMap) -> Self {
        m.ids
    }
}
