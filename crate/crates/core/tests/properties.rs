//! Property tests against oracles written independently of the library:
//! a plain mod-p elimination, and colimits/limits computed as quotients and
//! kernels of the full relation matrix over the (co)stratum.

use std::sync::Arc;

use pcalc_core::calculus::{codegree_approx, degree_approx, is_codegree, is_degree};
use pcalc_core::decompose::an_interval_decompose;
use pcalc_core::exactla::Matrix;
use pcalc_core::lattice::FinitePoset;
use pcalc_core::persmod::{random_module, PersistenceModule};
use proptest::prelude::*;

fn rank_mod_p(rows: &[Vec<u64>], p: u64) -> usize {
    let mut m: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|x| x % p).collect()).collect();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&r| m[r][c] != 0) else { continue };
        m.swap(rank, piv);
        let inv = (1..p).find(|&i| i * m[rank][c] % p == 1).unwrap();
        for x in m[rank].iter_mut() {
            *x = *x * inv % p;
        }
        for r in 0..m.len() {
            if r != rank && m[r][c] != 0 {
                let f = m[r][c];
                let pivot = m[rank].clone();
                for (x, y) in m[r].iter_mut().zip(&pivot) {
                    *x = (*x + p * p - f * y % p) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn entries(m: &Matrix) -> Vec<Vec<u64>> {
    m.to_rows().into_iter().map(|r| r.into_iter().map(u64::from).collect()).collect()
}

/// One relation row `e_y(v) - e_z(F(y<z) v)` per comparable pair and basis vector.
/// Colimit dimension is `sum - rank(relations)`.
fn colimit_dim(f: &PersistenceModule, nodes: &[usize]) -> usize {
    let p = f.prime() as u64;
    let offsets: Vec<usize> = nodes
        .iter()
        .scan(0, |acc, &y| {
            let o = *acc;
            *acc += f.dim(y);
            Some(o)
        })
        .collect();
    let total: usize = nodes.iter().map(|&y| f.dim(y)).sum();
    let g = f.poset();
    let mut rows = Vec::new();
    for (i, &y) in nodes.iter().enumerate() {
        for (j, &z) in nodes.iter().enumerate() {
            if y == z || !g.leq(y, z) {
                continue;
            }
            let m = entries(&f.structure_map(y, z).unwrap());
            for v in 0..f.dim(y) {
                let mut row = vec![0u64; total];
                row[offsets[i] + v] = 1;
                for (w, r) in m.iter().enumerate() {
                    row[offsets[j] + w] = (row[offsets[j] + w] + p - r[v]) % p;
                }
                rows.push(row);
            }
        }
    }
    total - rank_mod_p(&rows, p)
}

/// Limit dimension: kernel of the same relations read as constraints on a family `(v_y)`.
fn limit_dim(f: &PersistenceModule, nodes: &[usize]) -> usize {
    let p = f.prime() as u64;
    let offsets: Vec<usize> = nodes
        .iter()
        .scan(0, |acc, &y| {
            let o = *acc;
            *acc += f.dim(y);
            Some(o)
        })
        .collect();
    let total: usize = nodes.iter().map(|&y| f.dim(y)).sum();
    let g = f.poset();
    let mut rows = Vec::new();
    for (i, &y) in nodes.iter().enumerate() {
        for (j, &z) in nodes.iter().enumerate() {
            if y == z || !g.leq(y, z) {
                continue;
            }
            let m = entries(&f.structure_map(y, z).unwrap());
            for (w, r) in m.iter().enumerate() {
                let mut row = vec![0u64; total];
                for v in 0..f.dim(y) {
                    row[offsets[i] + v] = r[v];
                }
                row[offsets[j] + w] = (row[offsets[j] + w] + p - 1) % p;
                rows.push(row);
            }
        }
    }
    total - rank_mod_p(&rows, p)
}

fn grid_and_module() -> impl Strategy<Value = PersistenceModule> {
    (prop::collection::vec(1usize..=3, 1..=3), prop::sample::select(vec![2u32, 3, 5]), any::<u64>(), 1usize..=2)
        .prop_map(|(shape, p, seed, dmax)| random_module(Arc::new(FinitePoset::grid(&shape).unwrap()), p, seed, dmax))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_agrees_with_reference(rows in prop::collection::vec(prop::collection::vec(0u64..5, 4), 0..6)) {
        let p = 5;
        let m = Matrix::from_rows(p, &rows.iter().map(|r| r.iter().map(|&x| x as i64).collect::<Vec<_>>()).collect::<Vec<_>>(), 4);
        prop_assert_eq!(m.rank(), rank_mod_p(&rows, p as u64));
        let k = m.kernel_basis();
        prop_assert_eq!(k.cols(), 4 - m.rank());
        prop_assert!((&m * &k).is_zero());
    }

    #[test]
    fn codegree_approx_is_a_stratum_colimit(f in grid_and_module(), n in 0usize..=2) {
        let g = f.poset().clone();
        let t = codegree_approx(&f, n).unwrap();
        for x in g.elements() {
            // on a grid the join-dimension is the number of nonzero coordinates
            let nodes: Vec<usize> = g.elements()
                .filter(|&y| g.leq(y, x) && g.coords(y).iter().filter(|&&c| c > 0).count() <= n)
                .collect();
            prop_assert_eq!(t.approx.dim(x), colimit_dim(&f, &nodes), "at {}", g.label(x));
        }
        prop_assert!(is_codegree(&t.approx, n.max(1)).unwrap().holds());
    }

    #[test]
    fn degree_approx_is_a_costratum_limit(f in grid_and_module(), n in 0usize..=2) {
        let g = f.poset().clone();
        let shape = g.shape().unwrap().to_vec();
        let t = degree_approx(&f, n).unwrap();
        for x in g.elements() {
            let nodes: Vec<usize> = g.elements()
                .filter(|&y| {
                    g.leq(x, y) && g.coords(y).iter().zip(&shape).filter(|&(&c, &s)| c + 1 < s).count() <= n
                })
                .collect();
            prop_assert_eq!(t.approx.dim(x), limit_dim(&f, &nodes), "at {}", g.label(x));
        }
        prop_assert!(is_degree(&t.approx, n.max(1)).unwrap().holds());
    }

    #[test]
    fn dual_is_an_involution(f in grid_and_module()) {
        let (d, _) = f.dual();
        let (dd, _) = d.dual();
        prop_assert_eq!(dd.dims(), f.dims());
        prop_assert_eq!(dd.cover_maps(), f.cover_maps());
    }

    #[test]
    fn path_modules_split_into_intervals(len in 1usize..=6, p in prop::sample::select(vec![2u32, 3, 7]), seed: u64) {
        let f = random_module(Arc::new(FinitePoset::grid(&[len]).unwrap()), p, seed, 3);
        let r = an_interval_decompose(&f).unwrap();
        let total: usize = r.summands.iter().map(|s| s.module.total_dim()).sum();
        prop_assert_eq!(total, f.total_dim());
        for s in &r.summands {
            prop_assert!(s.module.dims().iter().all(|&d| d <= 1));
        }
    }
}
