use std::fmt;

use serde::{Deserialize, Serialize};

/// Index of a variable in a [`VarTable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Var(pub u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    State,
    Parameter,
    Tag,
    Auxiliary,
}

/// Ordered, append-only list of named variables.
///
/// Variable indices never change once assigned, so a table extended by a later
/// synthesis stage still interprets every polynomial built against its prefix.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarTable {
    entries: Vec<(String, Role)>,
}

impl VarTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends `name`, or returns `None` if it is already taken.
    pub fn push(&mut self, name: &str, role: Role) -> Option<Var> {
        if self.lookup(name).is_some() {
            return None;
        }
        self.entries.push((name.to_string(), role));
        Some(Var(self.entries.len() as u32 - 1))
    }

    /// Appends a variable named `base`, adding `_` suffixes until the name is unused.
    pub fn fresh(&mut self, base: &str, role: Role) -> Var {
        let mut name = base.to_string();
        while self.lookup(&name).is_some() {
            name.push('_');
        }
        self.push(&name, role).expect("name is unused")
    }

    pub fn lookup(&self, name: &str) -> Option<Var> {
        self.entries.iter().position(|(n, _)| n == name).map(|i| Var(i as u32))
    }

    pub fn name(&self, v: Var) -> &str {
        &self.entries[v.index()].0
    }

    pub fn role(&self, v: Var) -> Role {
        self.entries[v.index()].1
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, &str, Role)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, (n, r))| (Var(i as u32), n.as_str(), *r))
    }

    pub fn with_role(&self, role: Role) -> Vec<Var> {
        self.iter().filter(|(_, _, r)| *r == role).map(|(v, _, _)| v).collect()
    }

    /// True when `self` is a prefix of `other` (same indices, names and roles).
    pub fn is_prefix_of(&self, other: &VarTable) -> bool {
        self.entries.len() <= other.entries.len() && self.entries.iter().zip(&other.entries).all(|(a, b)| a == b)
    }
}

impl fmt::Display for VarTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.entries.iter().map(|(n, _)| n.as_str()).collect();
        write!(f, "[{}]", names.join(", "))
    }
}
