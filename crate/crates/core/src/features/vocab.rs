use indexmap::IndexSet;
use serde::{Deserialize, Serialize};

use super::{FeatureTemplate, FeatureValues, Phase, Role};

/// Encoded features: `(slot, value id)` pairs, slots ascending. A slot
/// indexes the templates of the owning [`RoleVocabulary`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureVector {
    pub entries: Vec<(usize, u32)>,
}

impl FeatureVector {
    pub fn get(&self, slot: usize) -> Option<u32> {
        self.entries.iter().find(|e| e.0 == slot).map(|e| e.1)
    }
}

/// Value dictionaries for the templates of one role.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleVocabulary {
    pub templates: Vec<FeatureTemplate>,
    pub values: Vec<IndexSet<String>>,
}

impl RoleVocabulary {
    fn from_values<'a>(all: impl IntoIterator<Item = &'a FeatureValues>) -> Self {
        let mut per: Vec<IndexSet<String>> = vec![IndexSet::new(); FeatureTemplate::ALL.len()];
        for fv in all {
            for (t, v) in &fv.entries {
                per[t.ordinal()].insert(v.clone());
            }
        }
        let mut out = Self::default();
        for (t, set) in FeatureTemplate::ALL.iter().zip(per) {
            if !set.is_empty() {
                out.templates.push(*t);
                out.values.push(set);
            }
        }
        out
    }

    pub fn slot(&self, template: FeatureTemplate) -> Option<usize> {
        self.templates.iter().position(|&t| t == template)
    }

    /// `|φ|` of every slot.
    pub fn cardinalities(&self) -> Vec<usize> {
        self.values.iter().map(IndexSet::len).collect()
    }

    pub fn cardinality(&self, template: FeatureTemplate) -> usize {
        self.slot(template).map_or(0, |s| self.values[s].len())
    }

    pub fn value(&self, slot: usize, id: u32) -> &str {
        &self.values[slot][id as usize]
    }

    /// Encodes values; values unseen at build time are dropped.
    pub fn encode(&self, fv: &FeatureValues) -> FeatureVector {
        let mut entries: Vec<(usize, u32)> = fv
            .entries
            .iter()
            .filter_map(|(t, v)| {
                let slot = self.slot(*t)?;
                let id = self.values[slot].get_index_of(v)?;
                Some((slot, id as u32))
            })
            .collect();
        entries.sort_unstable();
        FeatureVector { entries }
    }

    pub fn decode(&self, fv: &FeatureVector) -> FeatureValues {
        FeatureValues {
            entries: fv
                .entries
                .iter()
                .map(|&(s, id)| (self.templates[s], self.value(s, id).to_string()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVocabulary {
    pub phase: Phase,
    pub indicator: RoleVocabulary,
    pub argument: RoleVocabulary,
}

impl FeatureVocabulary {
    pub fn from_values<'a>(
        phase: Phase,
        indicators: impl IntoIterator<Item = &'a FeatureValues>,
        arguments: impl IntoIterator<Item = &'a FeatureValues>,
    ) -> Self {
        Self {
            phase,
            indicator: RoleVocabulary::from_values(indicators),
            argument: RoleVocabulary::from_values(arguments),
        }
    }

    pub fn role(&self, role: Role) -> &RoleVocabulary {
        match role {
            Role::Indicator => &self.indicator,
            Role::Argument => &self.argument,
        }
    }
}
