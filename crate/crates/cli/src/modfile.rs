//! The JSON module file format.

use std::collections::BTreeMap;
use std::sync::Arc;

use pcalc_core::exactla::{check_prime, Matrix};
use pcalc_core::lattice::FinitePoset;
use pcalc_core::persmod::PersistenceModule;
use pcalc_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct ModuleFile {
    pub field: Field,
    pub poset: PosetSpec,
    #[serde(default)]
    pub dims: BTreeMap<String, usize>,
    #[serde(default)]
    pub maps: BTreeMap<String, Vec<Vec<i64>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct Field {
    pub prime: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum PosetSpec {
    Grid { shape: Vec<usize> },
    Explicit { elements: Vec<String>, hasse: Vec<(String, String)> },
}

impl ModuleFile {
    pub fn parse(text: &str) -> Result<PersistenceModule> {
        let file: ModuleFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("module file: {e}")))?;
        file.to_module()
    }

    pub fn to_module(&self) -> Result<PersistenceModule> {
        let p = self.field.prime;
        check_prime(p)?;
        let poset = Arc::new(match &self.poset {
            PosetSpec::Grid { shape } => FinitePoset::grid(shape)?,
            PosetSpec::Explicit { elements, hasse } => FinitePoset::explicit(elements, hasse)?,
        });
        let lookup = |label: &str| {
            poset.index_of(label).ok_or_else(|| Error::InvalidInput(format!("unknown element {label:?}")))
        };
        let mut dims = vec![0; poset.len()];
        for (label, &d) in &self.dims {
            dims[lookup(label)?] = d;
        }
        let mut maps: Vec<Option<Matrix>> = vec![None; poset.covers().len()];
        for (key, rows) in &self.maps {
            let (a, b) = key
                .split_once("->")
                .ok_or_else(|| Error::InvalidInput(format!("map key {key:?} is not of the form \"x->y\"")))?;
            let (a, b) = (lookup(a.trim())?, lookup(b.trim())?);
            let c = poset
                .cover_index(a, b)
                .ok_or_else(|| Error::InvalidInput(format!("{key:?} is not a cover relation")))?;
            if rows.len() != dims[b] || rows.iter().any(|r| r.len() != dims[a]) {
                return Err(Error::DimensionMismatch(format!("map {key:?} must be {} x {}", dims[b], dims[a])));
            }
            maps[c] = Some(Matrix::from_rows(p, rows, dims[a]));
        }
        let maps = poset
            .covers()
            .iter()
            .zip(maps)
            .map(|(&(a, b), m)| m.unwrap_or_else(|| Matrix::zeros(p, dims[b], dims[a])))
            .collect();
        PersistenceModule::new(poset, p, dims, maps)
    }

    /// Every element gets a dims entry and every cover a map, zero or not.
    pub fn from_module(f: &PersistenceModule) -> ModuleFile {
        let poset = f.poset();
        let spec = match poset.shape() {
            Some(shape) => PosetSpec::Grid { shape: shape.to_vec() },
            None => PosetSpec::Explicit {
                elements: poset.labels().to_vec(),
                hasse: poset
                    .covers()
                    .iter()
                    .map(|&(a, b)| (poset.label(a).to_string(), poset.label(b).to_string()))
                    .collect(),
            },
        };
        let dims = poset.elements().map(|x| (poset.label(x).to_string(), f.dim(x))).collect();
        let maps = poset
            .covers()
            .iter()
            .enumerate()
            .map(|(c, &(a, b))| (format!("{}->{}", poset.label(a), poset.label(b)), matrix_rows(f.cover_map(c))))
            .collect();
        ModuleFile { field: Field { prime: f.prime() }, poset: spec, dims, maps }
    }
}

pub fn matrix_rows(m: &Matrix) -> Vec<Vec<i64>> {
    m.to_rows().into_iter().map(|r| r.into_iter().map(i64::from).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use pcalc_core::fixtures;

    #[test]
    fn round_trips_fixtures() {
        for f in [fixtures::ex1(), fixtures::ex2(), fixtures::ex4(), fixtures::hook()] {
            let text = serde_json::to_string(&ModuleFile::from_module(&f)).unwrap();
            let g = ModuleFile::parse(&text).unwrap();
            assert_eq!(g.dims(), f.dims());
            assert_eq!(g.cover_maps(), f.cover_maps());
        }
    }

    #[test]
    fn reduces_entries_and_rejects_bad_input() {
        let text =
            r#"{"field":{"prime":3},"poset":{"grid":{"shape":[2]}},"dims":{"0":1,"1":1},"maps":{"0->1":[[-1]]}}"#;
        let f = ModuleFile::parse(text).unwrap();
        assert_eq!(f.cover_map(0).get(0, 0), 2);
        for bad in [
            r#"{"field":{"prime":4},"poset":{"grid":{"shape":[2]}}}"#,
            r#"{"field":{"prime":2},"poset":{"grid":{"shape":[2]}},"dims":{"7":1}}"#,
            r#"{"field":{"prime":2},"poset":{"grid":{"shape":[3]}},"dims":{"0":1,"2":1},"maps":{"0->2":[[1]]}}"#,
            r#"{"field":{"prime":2},"poset":{"grid":{"shape":[2]}},"dims":{"0":1,"1":1},"maps":{"0->1":[[1,0]]}}"#,
            r#"{"field":{"prime":2},"poset":{"grid":{"shape":[2]}},"extra":1}"#,
        ] {
            assert!(ModuleFile::parse(bad).is_err(), "{bad}");
        }
    }
}
