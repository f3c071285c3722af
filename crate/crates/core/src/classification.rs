//! The (p, k, n) table of interactions and the particles they produce.
//!
//! `p` is the degree of the evolutionary form, `k` the degree of the closed
//! form realized from it, `n` the space dimension. The interaction type is
//! fixed by `k` alone and the pseudostructure carrying the closed form has
//! dimension `n + 1 − k`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

pub const TABLE_JSON: &str = include_str!("../data/classification_table.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interaction {
    Strong,
    Weak,
    Electromagnetic,
    Gravitation,
}

impl Interaction {
    pub fn from_k(k: u8) -> Option<Self> {
        match k {
            0 => Some(Self::Strong),
            1 => Some(Self::Weak),
            2 => Some(Self::Electromagnetic),
            3 => Some(Self::Gravitation),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassificationEntry {
    pub p: u8,
    pub k: u8,
    pub n: u8,
    pub interaction: Interaction,
    pub particle_label: String,
    pub sources: Vec<String>,
    pub pseudostructure_dim: u8,
    pub material_particle: String,
    pub metric_structure: String,
    /// Some label carries the table's own question mark.
    pub uncertain: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "camelCase")]
pub enum Classification {
    InTable { entry: ClassificationEntry },
    OutOfTable { p: i64, k: i64, n: i64, reason: String },
}

impl Classification {
    pub fn entry(&self) -> Option<&ClassificationEntry> {
        match self {
            Classification::InTable { entry } => Some(entry),
            Classification::OutOfTable { .. } => None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct TableFile {
    version: u32,
    reading: String,
    material_row_label: String,
    interactions: Vec<InteractionRow>,
    columns: Vec<Column>,
    cells: Vec<Cell>,
}

#[derive(Debug, Deserialize)]
struct InteractionRow {
    k: u8,
    name: Interaction,
}

#[derive(Debug, Deserialize)]
struct Column {
    p: u8,
    n: u8,
    material: String,
    metric: String,
}

#[derive(Debug, Deserialize)]
struct Cell {
    p: u8,
    k: u8,
    label: String,
    sources: Vec<String>,
}

/// Parsed table with entries in row order (k ascending, then p).
#[derive(Debug)]
pub struct Table {
    pub version: u32,
    pub reading: String,
    pub material_row_label: String,
    pub entries: Vec<ClassificationEntry>,
}

pub fn table() -> &'static Table {
    static TABLE: OnceLock<Table> = OnceLock::new();
    TABLE.get_or_init(|| {
        let file: TableFile = serde_json::from_str(TABLE_JSON).expect("embedded table is valid JSON");
        let mut entries: Vec<ClassificationEntry> = file
            .cells
            .iter()
            .map(|c| {
                let col = file.columns.iter().find(|col| col.p == c.p).expect("column for every cell");
                let interaction = file
                    .interactions
                    .iter()
                    .find(|row| row.k == c.k)
                    .map(|row| row.name)
                    .expect("interaction for every row");
                let uncertain = c.label.contains('?')
                    || c.sources.iter().any(|s| s.contains('?'))
                    || col.material.contains('?');
                ClassificationEntry {
                    p: c.p,
                    k: c.k,
                    n: col.n,
                    interaction,
                    particle_label: c.label.clone(),
                    sources: c.sources.clone(),
                    pseudostructure_dim: col.n + 1 - c.k,
                    material_particle: col.material.clone(),
                    metric_structure: col.metric.clone(),
                    uncertain,
                }
            })
            .collect();
        entries.sort_by_key(|e| (e.k, e.p));
        Table {
            version: file.version,
            reading: file.reading,
            material_row_label: file.material_row_label,
            entries,
        }
    })
}

/// Every populated cell of the table.
pub fn enumerate_cycle() -> Vec<ClassificationEntry> {
    table().entries.clone()
}

/// Looks up a cell; `n` defaults to the column's dimension.
pub fn classify(p: i64, k: i64, n: Option<i64>) -> Classification {
    let n_value = n.unwrap_or(p + 1);
    let out = |reason: &str| Classification::OutOfTable { p, k, n: n_value, reason: reason.into() };
    if !(0..=3).contains(&p) || !(0..=3).contains(&k) {
        return out("p and k range over 0..3");
    }
    if k > p {
        return out("k cannot exceed p");
    }
    if n_value != p + 1 {
        return out("the table pairs each p with n = p + 1");
    }
    match table().entries.iter().find(|e| i64::from(e.p) == p && i64::from(e.k) == k) {
        Some(entry) => Classification::InTable { entry: entry.clone() },
        None => out("cell is empty in the table"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graviton_and_photon() {
        let g = classify(3, 3, Some(4));
        let g = g.entry().unwrap();
        assert_eq!(g.interaction, Interaction::Gravitation);
        assert_eq!(g.particle_label, "graviton");
        let ph = classify(2, 2, None);
        assert_eq!(ph.entry().unwrap().particle_label, "photon2");
        assert_eq!(ph.entry().unwrap().interaction, Interaction::Electromagnetic);
        assert_eq!(ph.entry().unwrap().pseudostructure_dim, 2);
    }

    #[test]
    fn out_of_table() {
        assert!(classify(1, 2, None).entry().is_none());
        assert!(classify(4, 0, None).entry().is_none());
        assert!(classify(2, 1, Some(2)).entry().is_none());
        assert!(classify(-1, 0, None).entry().is_none());
    }

    #[test]
    fn strong_row_is_full() {
        let strong: Vec<_> = enumerate_cycle().into_iter().filter(|e| e.k == 0).collect();
        assert_eq!(strong.len(), 4);
        assert!(strong.iter().all(|e| e.particle_label.starts_with("quanta")));
    }

    #[test]
    fn invariants_hold() {
        let all = enumerate_cycle();
        assert_eq!(all.len(), 10);
        for e in &all {
            assert!(e.k <= e.p);
            assert_eq!(e.pseudostructure_dim, e.n + 1 - e.k);
            assert_eq!(Interaction::from_k(e.k), Some(e.interaction));
            assert_eq!(classify(e.p.into(), e.k.into(), Some(e.n.into())).entry(), Some(e));
        }
    }

    #[test]
    fn question_marks_flag_uncertainty() {
        assert!(classify(0, 0, None).entry().unwrap().uncertain);
        assert!(classify(3, 3, None).entry().unwrap().uncertain);
        assert!(!classify(1, 1, None).entry().unwrap().uncertain);
        assert_eq!(table().material_row_label, "nucleons?");
    }
}
