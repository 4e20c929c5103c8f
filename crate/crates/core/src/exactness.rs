//! Middle-exactness: square tests, Koszul complexes of cubes, and
//! k-middle-exactness.

use crate::error::{Error, Result};
use crate::exactla::Matrix;
use crate::lattice::{enumerate_cubes_with, CubeDiagram, CubeMode, CubeOptions};
use crate::persmod::PersistenceModule;
use crate::verdict::Check;

/// A bounded chain complex over GF(p) with homological grading: degrees
/// `lo..=hi`, differentials lowering degree by one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainComplex {
    p: u32,
    lo: i32,
    dims: Vec<usize>,
    /// `diffs[k]` is the differential from degree `lo + k + 1` to `lo + k`.
    diffs: Vec<Matrix>,
}

impl ChainComplex {
    /// Checks shapes and `d . d = 0`.
    pub fn new(p: u32, lo: i32, dims: Vec<usize>, diffs: Vec<Matrix>) -> Result<Self> {
        if dims.is_empty() || diffs.len() + 1 != dims.len() {
            return Err(Error::DimensionMismatch("complex needs one differential between consecutive degrees".into()));
        }
        for (k, d) in diffs.iter().enumerate() {
            if d.shape() != (dims[k], dims[k + 1]) {
                return Err(Error::DimensionMismatch(format!("differential out of degree {}", lo + k as i32 + 1)));
            }
        }
        for k in 1..diffs.len() {
            if !(&diffs[k - 1] * &diffs[k]).is_zero() {
                return Err(Error::Internal(format!("d.d != 0 at degree {}", lo + k as i32 + 1)));
            }
        }
        Ok(ChainComplex { p, lo, dims, diffs })
    }

    /// A single space in degree `deg`.
    pub fn concentrated(p: u32, deg: i32, dim: usize) -> Self {
        ChainComplex { p, lo: deg, dims: vec![dim], diffs: Vec::new() }
    }

    pub fn zero(p: u32) -> Self {
        Self::concentrated(p, 0, 0)
    }

    pub fn prime(&self) -> u32 {
        self.p
    }

    pub fn lo(&self) -> i32 {
        self.lo
    }

    pub fn hi(&self) -> i32 {
        self.lo + self.dims.len() as i32 - 1
    }

    pub fn dim(&self, i: i32) -> usize {
        if i < self.lo || i > self.hi() {
            0
        } else {
            self.dims[(i - self.lo) as usize]
        }
    }

    /// `d_i : C_i -> C_{i-1}`, zero outside the stored range.
    pub fn differential(&self, i: i32) -> Matrix {
        if i > self.lo && i <= self.hi() {
            self.diffs[(i - self.lo - 1) as usize].clone()
        } else {
            Matrix::zeros(self.p, self.dim(i - 1), self.dim(i))
        }
    }

    /// `dim ker d_i - rank d_{i+1}`.
    pub fn homology(&self, i: i32) -> usize {
        let d = self.differential(i);
        let kernel = self.dim(i) - d.rank();
        kernel - self.differential(i + 1).rank()
    }

    /// Homology in every stored degree, lowest first.
    pub fn homology_table(&self) -> Vec<(i32, usize)> {
        (self.lo..=self.hi()).map(|i| (i, self.homology(i))).collect()
    }

    pub fn is_acyclic(&self) -> bool {
        (self.lo..=self.hi()).all(|i| self.homology(i) == 0)
    }

    /// The same complex over a wider degree window (zeros added).
    pub fn widen(&self, lo: i32, hi: i32) -> ChainComplex {
        let (lo, hi) = (lo.min(self.lo), hi.max(self.hi()));
        let dims: Vec<usize> = (lo..=hi).map(|i| self.dim(i)).collect();
        let diffs = (lo + 1..=hi).map(|i| self.differential(i)).collect();
        ChainComplex { p: self.p, lo, dims, diffs }
    }

    /// `C*` with `(C*)_j = (C_{-j})*` and transposed differentials.
    pub fn dual(&self) -> ChainComplex {
        let lo = -self.hi();
        let hi = -self.lo;
        let dims = (lo..=hi).map(|j| self.dim(-j)).collect();
        let diffs = (lo + 1..=hi).map(|j| self.differential(-j + 1).transpose()).collect();
        ChainComplex { p: self.p, lo, dims, diffs }
    }
}

/// Diagnostics for the square `F(x^y) -> F(x), F(y) -> F(x v y)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SquareReport {
    /// `(x ^ y, x, y, x v y)`.
    pub corners: (usize, usize, usize, usize),
    pub is_middle_exact: bool,
    /// `dim ker (g | -beta)`.
    pub kernel_dim: usize,
    /// `rank (alpha ; f)`.
    pub image_rank: usize,
    pub is_pushout: bool,
    pub is_pullback: bool,
    /// The comparison from the pushout to the corner is injective.
    pub pushout_comparison_mono: bool,
    /// The comparison to the pullback is surjective.
    pub pullback_comparison_epi: bool,
}

/// Builds the associated complex `A -> B + C -> D` of the square on `x, y`
/// and evaluates middle-exactness three ways, which must agree.
pub fn middle_exact_square(f: &PersistenceModule, x: usize, y: usize) -> Result<SquareReport> {
    let poset = f.poset();
    let (a, d) = match (poset.meet(x, y), poset.join(x, y)) {
        (Some(a), Some(d)) => (a, d),
        _ => {
            return Err(Error::NotALattice {
                a: poset.label(x).into(),
                b: poset.label(y).into(),
                missing: "join or meet",
            })
        }
    };
    let p = f.prime();
    let alpha = f.structure_map(a, x)?;
    let fa = f.structure_map(a, y)?;
    let g = f.structure_map(x, d)?;
    let beta = f.structure_map(y, d)?;
    let (db, dc) = (f.dim(x), f.dim(y));
    let left = Matrix::vstack(p, f.dim(a), &[&alpha, &fa]);
    let right = Matrix::hstack(p, f.dim(d), &[&g, &beta.scale(-1)]);
    let kernel_dim = db + dc - right.rank();
    let image_rank = left.rank();
    let is_middle_exact = kernel_dim == image_rank;

    let push_rel = Matrix::vstack(p, f.dim(a), &[&alpha, &fa.scale(-1)]);
    let (q, _) = push_rel.cokernel();
    let to_corner =
        Matrix::factor_through_epi(&q, &Matrix::hstack(p, f.dim(d), &[&g, &beta])).expect("square commutes");
    let pushout_comparison_mono = to_corner.is_injective();
    let is_pushout = to_corner.is_invertible();

    let pb = right.kernel_basis();
    let from_corner = Matrix::factor_through_mono(&pb, &left).expect("square commutes");
    let pullback_comparison_epi = from_corner.is_surjective();
    let is_pullback = from_corner.is_invertible();

    if pushout_comparison_mono != is_middle_exact || pullback_comparison_epi != is_middle_exact {
        return Err(Error::Internal(format!(
            "middle-exactness criteria disagree on ({}, {})",
            poset.label(x),
            poset.label(y)
        )));
    }
    Ok(SquareReport {
        corners: (a, x, y, d),
        is_middle_exact,
        kernel_dim,
        image_rank,
        is_pushout,
        is_pullback,
        pushout_comparison_mono,
        pullback_comparison_epi,
    })
}

/// Middle-exactness of every square on an incomparable pair. Comparable pairs
/// are skipped: there the associated complex is exact because the kernel and
/// the image are both the graph of `F(x <= y)`.
pub fn is_2_middle_exact(f: &PersistenceModule) -> Result<Check<(usize, usize)>> {
    let poset = f.poset();
    if !poset.profile().is_lattice {
        return Err(Error::PosetUnsupported("middle-exactness needs a lattice".into()));
    }
    for x in poset.elements() {
        for y in x + 1..poset.len() {
            if !poset.comparable(x, y) && !middle_exact_square(f, x, y)?.is_middle_exact {
                return Ok(Check::Fails((x, y)));
            }
        }
    }
    Ok(Check::Holds)
}

/// Subsets of `0..k` of size `s`, ascending as bitmasks.
fn subsets_of_size(k: usize, s: usize) -> Vec<usize> {
    (0usize..1 << k).filter(|m| m.count_ones() as usize == s).collect()
}

/// The Koszul complex: degree `i` holds the vertices `X(S)` with
/// `|S| = k - i`; on `X(S)` the differential is `sum_j (-1)^j X(S -> S + t_j)`
/// over the sorted complement `t_0 < ... < t_i`.
pub fn koszul(f: &PersistenceModule, cube: &CubeDiagram) -> ChainComplex {
    let k = cube.k;
    let p = f.prime();
    let layers: Vec<Vec<usize>> = (0..=k).map(|i| subsets_of_size(k, k - i)).collect();
    let dims: Vec<usize> = layers.iter().map(|l| l.iter().map(|&s| f.dim(cube.vertex(s))).sum()).collect();
    let offsets = |i: usize| -> Vec<usize> {
        let mut acc = 0;
        layers[i]
            .iter()
            .map(|&s| {
                let o = acc;
                acc += f.dim(cube.vertex(s));
                o
            })
            .collect()
    };
    let diffs = (1..=k)
        .map(|i| {
            let (src_off, dst_off) = (offsets(i), offsets(i - 1));
            let mut d = Matrix::zeros(p, dims[i - 1], dims[i]);
            for (si, &s) in layers[i].iter().enumerate() {
                let complement: Vec<usize> = (0..k).filter(|t| s >> t & 1 == 0).collect();
                for (j, &t) in complement.iter().enumerate() {
                    let target = s | 1 << t;
                    let ti = layers[i - 1].iter().position(|&u| u == target).unwrap();
                    let mut m = f.structure_map(cube.vertex(s), cube.vertex(target)).unwrap();
                    if j % 2 == 1 {
                        m = m.scale(-1);
                    }
                    d.set_block(dst_off[ti], src_off[si], &m);
                }
            }
            d
        })
        .collect();
    ChainComplex::new(p, 0, dims, diffs).expect("Koszul differentials square to zero")
}

pub fn koszul_homology(c: &ChainComplex) -> Vec<(i32, usize)> {
    c.homology_table()
}

/// A cube whose Koszul complex has homology in an internal degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KoszulWitness {
    pub cube: CubeDiagram,
    pub homology: Vec<(i32, usize)>,
}

/// Koszul homology vanishes in degrees `0 < i < k` for every strongly
/// bicartesian `k`-cube (as enumerated by `mode`).
pub fn is_k_middle_exact(
    f: &PersistenceModule,
    k: usize,
    mode: CubeMode,
    opts: &CubeOptions,
) -> Result<Check<KoszulWitness>> {
    if !f.poset().profile().is_distributive {
        return Err(Error::PosetUnsupported("the index poset is not a distributive lattice".into()));
    }
    for cube in enumerate_cubes_with(f.poset(), k, mode, opts)? {
        let c = koszul(f, &cube);
        if (1..k as i32).any(|i| c.homology(i) != 0) {
            return Ok(Check::Fails(KoszulWitness { homology: c.homology_table(), cube }));
        }
    }
    Ok(Check::Holds)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fixtures;
    use crate::lattice::{cube_from_cover, FinitePoset};
    use crate::persmod::{direct_sum, interval_module, random_module, PersistenceModule};

    fn at(p: &FinitePoset, c: &[usize]) -> usize {
        p.index_of_coords(c).unwrap()
    }

    #[test]
    fn comparable_squares_are_middle_exact() {
        let f = random_module(Arc::new(FinitePoset::grid(&[3, 3]).unwrap()), 3, 2, 3);
        let p = f.poset().clone();
        for x in p.elements() {
            for y in p.elements() {
                if p.leq(x, y) {
                    assert!(middle_exact_square(&f, x, y).unwrap().is_middle_exact);
                }
            }
        }
    }

    #[test]
    fn hook_square_is_not_middle_exact() {
        let f = fixtures::hook();
        let p = f.poset().clone();
        let r = middle_exact_square(&f, at(&p, &[1, 0]), at(&p, &[0, 1])).unwrap();
        assert!(!r.is_middle_exact);
        assert_eq!((r.kernel_dim, r.image_rank), (1, 0));
        let Check::Fails((x, y)) = is_2_middle_exact(&f).unwrap() else { panic!() };
        let mut pair = [x, y];
        pair.sort_unstable();
        let mut expected = [at(&p, &[1, 0]), at(&p, &[0, 1])];
        expected.sort_unstable();
        assert_eq!(pair, expected);
    }

    #[test]
    fn ex1_and_ex4_are_2_middle_exact() {
        assert!(is_2_middle_exact(&fixtures::ex1()).unwrap().holds());
        assert!(is_2_middle_exact(&fixtures::ex4()).unwrap().holds());
    }

    #[test]
    fn block_sums_are_2_middle_exact() {
        let g = Arc::new(FinitePoset::grid(&[3, 3]).unwrap());
        let pick = |pred: &dyn Fn(&[usize]) -> bool| -> PersistenceModule {
            let set: Vec<usize> = g.elements().filter(|&x| pred(g.coords(x))).collect();
            interval_module(g.clone(), 2, &set).unwrap()
        };
        let death = pick(&|c| c[0] <= 1 && c[1] == 0);
        let birth = pick(&|c| c[0] >= 1 && c[1] >= 2);
        let vertical = pick(&|c| c[0] == 1);
        let f = direct_sum(&[&death, &birth, &vertical]).unwrap();
        assert!(is_2_middle_exact(&f).unwrap().holds());
    }

    #[test]
    fn koszul_of_an_edge() {
        let f = random_module(Arc::new(FinitePoset::grid(&[2, 2]).unwrap()), 5, 9, 3);
        let p = f.poset().clone();
        let cube = cube_from_cover(&p, at(&p, &[1, 0]), &[at(&p, &[0, 0])]).unwrap();
        let c = koszul(&f, &cube);
        assert_eq!(c.differential(1), f.structure_map(at(&p, &[0, 0]), at(&p, &[1, 0])).unwrap());
    }

    #[test]
    fn ex2_full_cube_koszul() {
        let f = fixtures::ex2();
        let p = f.poset().clone();
        let cube =
            cube_from_cover(&p, at(&p, &[1, 1, 1]), &[at(&p, &[0, 1, 1]), at(&p, &[1, 0, 1]), at(&p, &[1, 1, 0])])
                .unwrap();
        let c = koszul(&f, &cube);
        assert_eq!((c.dim(3), c.dim(2), c.dim(1), c.dim(0)), (2, 3, 0, 0));
        assert_eq!(c.homology(2), 1);
        let Check::Fails(w) = is_k_middle_exact(&f, 3, CubeMode::Full, &CubeOptions::default()).unwrap() else {
            panic!("EX2 is not 3-middle-exact")
        };
        assert_eq!(w.cube.top, at(&p, &[1, 1, 1]));
    }

    #[test]
    fn zero_module_koszul_is_zero() {
        let g = Arc::new(FinitePoset::grid(&[2, 2]).unwrap());
        let z = PersistenceModule::zero(g.clone(), 2);
        let cube = cube_from_cover(&g, at(&g, &[1, 1]), &[at(&g, &[1, 0]), at(&g, &[0, 1])]).unwrap();
        assert!(koszul(&z, &cube).homology_table().iter().all(|&(_, h)| h == 0));
    }

    #[test]
    fn homology_examples() {
        let c = ChainComplex::new(2, 0, vec![1, 1], vec![Matrix::identity(2, 1)]).unwrap();
        assert!(c.is_acyclic());
        let c = ChainComplex::new(2, 0, vec![2, 3], vec![Matrix::zeros(2, 2, 3)]).unwrap();
        assert_eq!(c.homology_table(), vec![(0, 2), (1, 3)]);
        assert!(ChainComplex::new(2, 0, vec![1, 1, 1], vec![Matrix::identity(2, 1), Matrix::identity(2, 1)]).is_err());
    }

    #[test]
    fn ex4_k_middle_exact() {
        let f = fixtures::ex4();
        for k in 2..=3 {
            assert!(is_k_middle_exact(&f, k, CubeMode::Full, &CubeOptions::default()).unwrap().holds());
        }
    }

    #[test]
    fn too_many_factors_is_vacuous() {
        let f = random_module(Arc::new(FinitePoset::grid(&[3, 3]).unwrap()), 2, 1, 3);
        assert!(is_k_middle_exact(&f, 3, CubeMode::Full, &CubeOptions::default()).unwrap().holds());
    }
}
