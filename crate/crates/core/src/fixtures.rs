//! Small named modules used by tests, the CLI documentation and the
//! acceptance suite.

use std::collections::HashMap;
use std::sync::Arc;

use crate::exactla::Matrix;
use crate::lattice::FinitePoset;
use crate::persmod::{interval_module, PersistenceModule};

/// Builds a module over GF(p) from labelled dims and cover matrices; covers
/// without an entry get the zero map.
pub fn from_labels(
    poset: FinitePoset,
    p: u32,
    dims: &[(&str, usize)],
    maps: &[(&str, &str, &[&[i64]])],
) -> PersistenceModule {
    let poset = Arc::new(poset);
    let mut d = vec![0; poset.len()];
    for (label, n) in dims {
        d[poset.index_of(label).unwrap_or_else(|| panic!("unknown element {label}"))] = *n;
    }
    let given: HashMap<(usize, usize), Matrix> = maps
        .iter()
        .map(|(a, b, rows)| {
            let (a, b) = (poset.index_of(a).unwrap(), poset.index_of(b).unwrap());
            ((a, b), Matrix::from_rows(p, rows, d[a]))
        })
        .collect();
    let covers = poset.covers().to_vec();
    let maps = covers
        .iter()
        .map(|&(a, b)| given.get(&(a, b)).cloned().unwrap_or_else(|| Matrix::zeros(p, d[b], d[a])))
        .collect();
    PersistenceModule::new(poset, p, d, maps).expect("fixture is a valid module")
}

/// The codegree-1 module on `{0,1,2}^2` whose block decomposition is worked
/// out by hand: a vertical, a horizontal and a death block.
pub fn ex1() -> PersistenceModule {
    from_labels(
        FinitePoset::grid(&[3, 3]).unwrap(),
        2,
        &[("0,0", 1), ("1,0", 2), ("2,0", 1), ("0,1", 1), ("1,1", 2), ("2,1", 1), ("0,2", 1), ("1,2", 2), ("2,2", 2)],
        &[
            ("0,0", "1,0", &[&[1], &[0]]),
            ("0,1", "1,1", &[&[1], &[0]]),
            ("0,2", "1,2", &[&[1], &[0]]),
            ("1,0", "2,0", &[&[0, 1]]),
            ("1,1", "2,1", &[&[0, 1]]),
            ("1,2", "2,2", &[&[1, 0], &[0, 1]]),
            ("0,0", "0,1", &[&[1]]),
            ("1,0", "1,1", &[&[1, 0], &[0, 1]]),
            ("2,0", "2,1", &[&[1]]),
            ("0,1", "0,2", &[&[0]]),
            ("1,1", "1,2", &[&[0, 0], &[0, 1]]),
            ("2,1", "2,2", &[&[0], &[1]]),
        ],
    )
}

/// Indecomposable codegree-1 module on `{0,1}^3`: `F^2` at the bottom mapping
/// onto the three atoms by `(1 1)`, `(0 1)`, `(1 0)`; zero elsewhere.
pub fn ex2() -> PersistenceModule {
    from_labels(
        FinitePoset::grid(&[2, 2, 2]).unwrap(),
        2,
        &[("0,0,0", 2), ("1,0,0", 1), ("0,1,0", 1), ("0,0,1", 1)],
        &[("0,0,0", "1,0,0", &[&[1, 1]]), ("0,0,0", "0,1,0", &[&[0, 1]]), ("0,0,0", "0,0,1", &[&[1, 0]])],
    )
}

/// The lattice `a < b, c < d < t` with `b`, `c` incomparable.
pub fn n_lattice() -> FinitePoset {
    FinitePoset::explicit(&["a", "b", "c", "d", "t"], &[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d"), ("d", "t")])
        .unwrap()
}

/// `GF(2)` at `d` only, on the N-shaped lattice.
pub fn ex4() -> PersistenceModule {
    from_labels(n_lattice(), 2, &[("d", 1)], &[])
}

/// Bidegree-1 module on the N-shaped lattice that is not interval decomposable.
pub fn n_bidegree() -> PersistenceModule {
    from_labels(
        n_lattice(),
        2,
        &[("b", 1), ("c", 1), ("d", 2), ("t", 1)],
        &[("b", "d", &[&[1], &[0]]), ("c", "d", &[&[0], &[1]]), ("d", "t", &[&[1, 1]])],
    )
}

/// Interval module on `{(0,1), (1,1), (1,0)}` in the 2x2 grid.
pub fn hook() -> PersistenceModule {
    let g = Arc::new(FinitePoset::grid(&[2, 2]).unwrap());
    let set: Vec<usize> = ["0,1", "1,1", "1,0"].iter().map(|l| g.index_of(l).unwrap()).collect();
    interval_module(g, 2, &set).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_valid() {
        for f in [ex1(), ex2(), ex4(), n_bidegree(), hook()] {
            f.validate().unwrap();
        }
        assert_eq!(ex1().dims(), &[1, 1, 1, 2, 2, 2, 1, 1, 2]);
    }
}
