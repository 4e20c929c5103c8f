//! Persistence modules over finite posets, natural transformations, and
//! (co)limits of finite diagrams of vector spaces.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exactla::Matrix;
use crate::lattice::FinitePoset;
use crate::verdict::Check;

/// A functor from a finite poset to finite-dimensional GF(p) vector spaces,
/// stored as one matrix per cover relation (indexed like `poset.covers()`).
#[derive(Clone, Debug)]
pub struct PersistenceModule {
    poset: Arc<FinitePoset>,
    p: u32,
    dims: Vec<usize>,
    maps: Vec<Matrix>,
}

impl PartialEq for PersistenceModule {
    fn eq(&self, other: &Self) -> bool {
        same_poset(&self.poset, &other.poset) && self.p == other.p && self.dims == other.dims && self.maps == other.maps
    }
}

impl Eq for PersistenceModule {}

pub(crate) fn same_poset(a: &Arc<FinitePoset>, b: &Arc<FinitePoset>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl PersistenceModule {
    /// Validates dimensions and commutativity.
    pub fn new(poset: Arc<FinitePoset>, p: u32, dims: Vec<usize>, maps: Vec<Matrix>) -> Result<Self> {
        let m = PersistenceModule { poset, p, dims, maps };
        m.validate()?;
        Ok(m)
    }

    /// Builds a module from a function giving the matrix on each cover `(a, b)`.
    pub fn from_cover_fn(
        poset: Arc<FinitePoset>,
        p: u32,
        dims: Vec<usize>,
        mut f: impl FnMut(usize, usize) -> Matrix,
    ) -> Result<Self> {
        let maps = poset.covers().iter().map(|&(a, b)| f(a, b)).collect();
        Self::new(poset, p, dims, maps)
    }

    /// For modules that are functorial by construction; still checked in debug builds.
    pub(crate) fn from_parts(poset: Arc<FinitePoset>, p: u32, dims: Vec<usize>, maps: Vec<Matrix>) -> Self {
        let m = PersistenceModule { poset, p, dims, maps };
        debug_assert_eq!(m.validate(), Ok(()));
        m
    }

    pub fn zero(poset: Arc<FinitePoset>, p: u32) -> Self {
        let dims = vec![0; poset.len()];
        let maps = poset.covers().iter().map(|_| Matrix::zeros(p, 0, 0)).collect();
        PersistenceModule { poset, p, dims, maps }
    }

    pub fn poset(&self) -> &Arc<FinitePoset> {
        &self.poset
    }

    pub fn prime(&self) -> u32 {
        self.p
    }

    pub fn dim(&self, x: usize) -> usize {
        self.dims[x]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.dims.iter().all(|&d| d == 0)
    }

    /// Matrix on the cover with index `c`.
    pub fn cover_map(&self, c: usize) -> &Matrix {
        &self.maps[c]
    }

    pub fn cover_maps(&self) -> &[Matrix] {
        &self.maps
    }

    /// Matrix on the cover `a < b`; panics if `(a, b)` is not a cover.
    pub fn map_on(&self, a: usize, b: usize) -> &Matrix {
        &self.maps[self.poset.cover_index(a, b).expect("not a cover")]
    }

    pub fn validate(&self) -> Result<()> {
        let poset = &self.poset;
        if self.dims.len() != poset.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} dimensions for {} elements",
                self.dims.len(),
                poset.len()
            )));
        }
        if self.maps.len() != poset.covers().len() {
            return Err(Error::MissingCoverMap(format!(
                "{} maps for {} covers",
                self.maps.len(),
                poset.covers().len()
            )));
        }
        for (c, &(a, b)) in poset.covers().iter().enumerate() {
            let m = &self.maps[c];
            if m.prime() != self.p || m.shape() != (self.dims[b], self.dims[a]) {
                return Err(Error::DimensionMismatch(format!(
                    "map on {} is {}x{}, expected {}x{}",
                    poset.cover_label(c),
                    m.rows(),
                    m.cols(),
                    self.dims[b],
                    self.dims[a]
                )));
            }
        }
        self.check_commutativity()
    }

    /// Every element's composites to everything above it are compared across
    /// all last steps; by induction along a linear extension this makes all
    /// cover paths between two elements agree.
    fn check_commutativity(&self) -> Result<()> {
        let poset = &self.poset;
        let topo = poset.topological_order();
        let mut position = vec![0; poset.len()];
        topo.iter().enumerate().for_each(|(i, &x)| position[x] = i);
        let mut composite: Vec<Option<Matrix>> = vec![None; poset.len()];
        for &x in topo {
            composite.iter_mut().for_each(|c| *c = None);
            composite[x] = Some(Matrix::identity(self.p, self.dims[x]));
            for &y in &topo[position[x] + 1..] {
                if !poset.leq(x, y) {
                    continue;
                }
                let mut first: Option<(usize, Matrix)> = None;
                for &u in poset.parents(y) {
                    let Some(cu) = &composite[u] else { continue };
                    let cand = self.map_on(u, y) * cu;
                    match &first {
                        None => first = Some((u, cand)),
                        Some((v, m)) => {
                            if *m != cand {
                                return Err(Error::CommutativityViolation {
                                    from: poset.label(x).into(),
                                    to: poset.label(y).into(),
                                    via_a: poset.label(*v).into(),
                                    via_b: poset.label(u).into(),
                                });
                            }
                        }
                    }
                }
                composite[y] = first.map(|(_, m)| m);
            }
        }
        Ok(())
    }

    /// `F(x <= y)`, composed along a cover path.
    pub fn structure_map(&self, x: usize, y: usize) -> Result<Matrix> {
        let poset = &self.poset;
        if !poset.leq(x, y) {
            return Err(Error::NotComparable(poset.label(x).into(), poset.label(y).into()));
        }
        let mut m = Matrix::identity(self.p, self.dims[x]);
        let mut cur = x;
        while cur != y {
            let next = *poset.children(cur).iter().find(|&&c| poset.leq(c, y)).expect("path exists");
            m = self.map_on(cur, next) * &m;
            cur = next;
        }
        Ok(m)
    }

    /// The diagram of `F` on `nodes` (in the given order), with arrows the
    /// covers of the induced subposet.
    pub fn diagram(&self, nodes: &[usize]) -> VecDiagram {
        let poset = &self.poset;
        let mut d = VecDiagram::new(self.p, nodes.iter().map(|&x| self.dims[x]).collect());
        for (i, &u) in nodes.iter().enumerate() {
            for (j, &v) in nodes.iter().enumerate() {
                if poset.lt(u, v) && !nodes.iter().any(|&w| w != u && w != v && poset.lt(u, w) && poset.lt(w, v)) {
                    d.arrows.push((i, j, self.structure_map(u, v).unwrap()));
                }
            }
        }
        d
    }

    /// Restriction to an induced subposet; `back[i]` is the element of
    /// `self.poset` corresponding to element `i` of `sub`.
    pub fn restrict(&self, sub: Arc<FinitePoset>, back: &[usize]) -> PersistenceModule {
        let dims = back.iter().map(|&x| self.dims[x]).collect();
        let maps =
            sub.covers().iter().map(|&(a, b)| self.structure_map(back[a], back[b]).expect("induced order")).collect();
        PersistenceModule::from_parts(sub, self.p, dims, maps)
    }

    /// The pointwise dual on the opposite poset, and the element map `old -> new`.
    pub fn dual(&self) -> (PersistenceModule, Vec<usize>) {
        let (op, map) = self.poset.opposite();
        let op = Arc::new(op);
        let mut dims = vec![0; op.len()];
        for x in self.poset.elements() {
            dims[map[x]] = self.dims[x];
        }
        let mut maps = vec![Matrix::zeros(self.p, 0, 0); op.covers().len()];
        for (c, &(a, b)) in self.poset.covers().iter().enumerate() {
            let oc = op.cover_index(map[b], map[a]).expect("reversed cover");
            maps[oc] = self.maps[c].transpose();
        }
        (PersistenceModule::from_parts(op, self.p, dims, maps), map)
    }

    /// Conjugates by pointwise invertible `bases` (`bases[x]` maps the new
    /// coordinates to the old ones). Returns the new module and the iso to `self`.
    pub fn change_basis(&self, bases: &[Matrix]) -> Result<(PersistenceModule, NaturalTransformation)> {
        let mut inverses = Vec::with_capacity(bases.len());
        for (x, b) in bases.iter().enumerate() {
            if b.shape() != (self.dims[x], self.dims[x]) {
                return Err(Error::DimensionMismatch(format!("basis at {}", self.poset.label(x))));
            }
            inverses.push(
                b.inverse()
                    .ok_or_else(|| Error::InvalidInput(format!("basis at {} is singular", self.poset.label(x))))?,
            );
        }
        let maps = self
            .poset
            .covers()
            .iter()
            .enumerate()
            .map(|(c, &(a, b))| &(&inverses[b] * &self.maps[c]) * &bases[a])
            .collect();
        let g = PersistenceModule::from_parts(self.poset.clone(), self.p, self.dims.clone(), maps);
        let iso = NaturalTransformation::new(g.clone(), self.clone(), bases.to_vec())?;
        Ok((g, iso))
    }

    /// First cover (canonical order) whose map is not injective.
    pub fn is_monomorphic(&self) -> Check<(usize, usize)> {
        Check::first_failure(
            self.poset.covers().iter().zip(&self.maps).filter(|(_, m)| !m.is_injective()).map(|(&c, _)| c),
        )
    }

    /// First cover (canonical order) whose map is not surjective.
    pub fn is_epimorphic(&self) -> Check<(usize, usize)> {
        Check::first_failure(
            self.poset.covers().iter().zip(&self.maps).filter(|(_, m)| !m.is_surjective()).map(|(&c, _)| c),
        )
    }
}

/// Pointwise direct sum. All summands must live on the same poset and field.
pub fn direct_sum(summands: &[&PersistenceModule]) -> Result<PersistenceModule> {
    let first = summands.first().ok_or_else(|| Error::InvalidInput("direct sum of nothing".into()))?;
    for s in summands {
        if !same_poset(&s.poset, &first.poset) || s.p != first.p {
            return Err(Error::InvalidInput("summands live on different posets or fields".into()));
        }
    }
    let poset = first.poset.clone();
    let dims = poset.elements().map(|x| summands.iter().map(|s| s.dims[x]).sum()).collect();
    let maps = (0..poset.covers().len())
        .map(|c| Matrix::block_diag(first.p, &summands.iter().map(|s| &s.maps[c]).collect::<Vec<_>>()))
        .collect();
    Ok(PersistenceModule::from_parts(poset, first.p, dims, maps))
}

/// The interval module: `GF(p)` on `set`, zero elsewhere, identities inside.
pub fn interval_module(poset: Arc<FinitePoset>, p: u32, set: &[usize]) -> Result<PersistenceModule> {
    poset.check_interval(set).map_err(Error::NotAnInterval)?;
    let mut dims = vec![0; poset.len()];
    set.iter().for_each(|&x| dims[x] = 1);
    let maps = poset
        .covers()
        .iter()
        .map(
            |&(a, b)| {
                if dims[a] == 1 && dims[b] == 1 {
                    Matrix::identity(p, 1)
                } else {
                    Matrix::zeros(p, dims[b], dims[a])
                }
            },
        )
        .collect();
    Ok(PersistenceModule::from_parts(poset, p, dims, maps))
}

/// Upset module of `a`.
pub fn upset_module(poset: Arc<FinitePoset>, p: u32, a: usize) -> PersistenceModule {
    let set = poset.up_set(a);
    interval_module(poset, p, &set).expect("principal up-sets are intervals")
}

/// Downset module of `a`.
pub fn downset_module(poset: Arc<FinitePoset>, p: u32, a: usize) -> PersistenceModule {
    let set = poset.down_set(a);
    interval_module(poset, p, &set).expect("principal down-sets are intervals")
}

/// A random module `coker(R)` for a random map `R` between random free
/// modules, so functoriality holds by construction. At most `dmax` generators,
/// hence `dim F(x) <= dmax`.
pub fn random_module(poset: Arc<FinitePoset>, p: u32, seed: u64, dmax: usize) -> PersistenceModule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_module_with(poset, p, &mut rng, dmax)
}

pub fn random_module_with<R: Rng + ?Sized>(
    poset: Arc<FinitePoset>,
    p: u32,
    rng: &mut R,
    dmax: usize,
) -> PersistenceModule {
    let n = poset.len();
    let g = rng.gen_range(0..=dmax);
    let r = rng.gen_range(0..=dmax);
    let gens: Vec<usize> = (0..g).map(|_| rng.gen_range(0..n)).collect();
    let rels: Vec<usize> = (0..r).map(|_| rng.gen_range(0..n)).collect();
    let coeff: Vec<Vec<u32>> = gens
        .iter()
        .map(|&a| rels.iter().map(|&b| if poset.leq(a, b) { rng.gen_range(0..p) } else { 0 }).collect())
        .collect();
    let quotients: Vec<(Vec<usize>, Matrix)> = poset
        .elements()
        .map(|x| {
            let live: Vec<usize> = (0..g).filter(|&i| poset.leq(gens[i], x)).collect();
            let cols: Vec<Vec<u32>> = (0..r)
                .filter(|&j| poset.leq(rels[j], x))
                .map(|j| live.iter().map(|&i| coeff[i][j]).collect())
                .collect();
            let rel = Matrix::from_columns(p, live.len(), &cols);
            (live, rel.cokernel().0)
        })
        .collect();
    let dims = quotients.iter().map(|(_, q)| q.rows()).collect();
    let maps = poset
        .covers()
        .iter()
        .map(|&(a, b)| {
            let (la, qa) = &quotients[a];
            let (lb, qb) = &quotients[b];
            let mut incl = Matrix::zeros(p, lb.len(), la.len());
            for (j, i) in la.iter().enumerate() {
                incl.set(lb.iter().position(|k| k == i).unwrap(), j, 1);
            }
            Matrix::factor_through_epi(qa, &(qb * &incl)).expect("relations map to relations")
        })
        .collect();
    PersistenceModule::from_parts(poset, p, dims, maps)
}

/// A natural transformation between modules on the same poset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NaturalTransformation {
    source: PersistenceModule,
    target: PersistenceModule,
    components: Vec<Matrix>,
}

impl NaturalTransformation {
    /// Validates shapes and naturality on every cover.
    pub fn new(source: PersistenceModule, target: PersistenceModule, components: Vec<Matrix>) -> Result<Self> {
        let nt = NaturalTransformation { source, target, components };
        nt.validate()?;
        Ok(nt)
    }

    pub(crate) fn from_parts(source: PersistenceModule, target: PersistenceModule, components: Vec<Matrix>) -> Self {
        let nt = NaturalTransformation { source, target, components };
        debug_assert_eq!(nt.validate(), Ok(()));
        nt
    }

    pub fn validate(&self) -> Result<()> {
        let (f, g) = (&self.source, &self.target);
        if !same_poset(&f.poset, &g.poset) || f.p != g.p {
            return Err(Error::InvalidInput("source and target live on different posets".into()));
        }
        let poset = &f.poset;
        if self.components.len() != poset.len() {
            return Err(Error::DimensionMismatch("wrong number of components".into()));
        }
        for x in poset.elements() {
            if self.components[x].shape() != (g.dims[x], f.dims[x]) {
                return Err(Error::DimensionMismatch(format!("component at {}", poset.label(x))));
            }
        }
        for (c, &(a, b)) in poset.covers().iter().enumerate() {
            if &g.maps[c] * &self.components[a] != &self.components[b] * &f.maps[c] {
                return Err(Error::NaturalityViolation(poset.cover_label(c)));
            }
        }
        Ok(())
    }

    pub fn identity(f: &PersistenceModule) -> Self {
        let comps = f.dims.iter().map(|&d| Matrix::identity(f.p, d)).collect();
        NaturalTransformation::from_parts(f.clone(), f.clone(), comps)
    }

    pub fn zero(f: &PersistenceModule, g: &PersistenceModule) -> Self {
        let comps = f.poset.elements().map(|x| Matrix::zeros(f.p, g.dims[x], f.dims[x])).collect();
        NaturalTransformation::from_parts(f.clone(), g.clone(), comps)
    }

    pub fn source(&self) -> &PersistenceModule {
        &self.source
    }

    pub fn target(&self) -> &PersistenceModule {
        &self.target
    }

    pub fn component(&self, x: usize) -> &Matrix {
        &self.components[x]
    }

    pub fn components(&self) -> &[Matrix] {
        &self.components
    }

    /// `next . self`.
    pub fn then(&self, next: &NaturalTransformation) -> NaturalTransformation {
        assert_eq!(self.target.dims, next.source.dims, "composing incompatible transformations");
        let comps = self.components.iter().zip(&next.components).map(|(a, b)| b * a).collect();
        NaturalTransformation::from_parts(self.source.clone(), next.target.clone(), comps)
    }

    pub fn is_iso(&self) -> bool {
        self.components.iter().all(Matrix::is_invertible)
    }

    pub fn inverse(&self) -> Option<NaturalTransformation> {
        let comps = self.components.iter().map(Matrix::inverse).collect::<Option<Vec<_>>>()?;
        Some(NaturalTransformation::from_parts(self.target.clone(), self.source.clone(), comps))
    }

    /// The dual transformation `G* -> F*` on the opposite poset.
    pub fn dual(&self) -> NaturalTransformation {
        let (fd, map) = self.source.dual();
        let (gd, _) = self.target.dual();
        let mut comps = vec![Matrix::zeros(self.source.p, 0, 0); map.len()];
        for (x, &y) in map.iter().enumerate() {
            comps[y] = self.components[x].transpose();
        }
        NaturalTransformation::from_parts(gd, fd, comps)
    }

    /// `[eta_1 | eta_2 | ...] : F_1 + F_2 + ... -> G`.
    pub fn from_sum(target: &PersistenceModule, parts: &[&NaturalTransformation]) -> Result<Self> {
        let sources: Vec<&PersistenceModule> = parts.iter().map(|t| &t.source).collect();
        if sources.is_empty() {
            let z = PersistenceModule::zero(target.poset.clone(), target.p);
            return Ok(NaturalTransformation::zero(&z, target));
        }
        let source = direct_sum(&sources)?;
        let comps = target
            .poset
            .elements()
            .map(|x| {
                Matrix::hstack(target.p, target.dims[x], &parts.iter().map(|t| &t.components[x]).collect::<Vec<_>>())
            })
            .collect();
        NaturalTransformation::new(source, target.clone(), comps)
    }

    /// `[eta_1; eta_2; ...] : F -> G_1 + G_2 + ...`.
    pub fn into_sum(source: &PersistenceModule, parts: &[&NaturalTransformation]) -> Result<Self> {
        let targets: Vec<&PersistenceModule> = parts.iter().map(|t| &t.target).collect();
        if targets.is_empty() {
            let z = PersistenceModule::zero(source.poset.clone(), source.p);
            return Ok(NaturalTransformation::zero(source, &z));
        }
        let target = direct_sum(&targets)?;
        let comps = source
            .poset
            .elements()
            .map(|x| {
                Matrix::vstack(source.p, source.dims[x], &parts.iter().map(|t| &t.components[x]).collect::<Vec<_>>())
            })
            .collect();
        NaturalTransformation::new(source.clone(), target, comps)
    }
}

/// True iff every component is invertible.
pub fn verify_natural_iso(eta: &NaturalTransformation) -> bool {
    eta.validate().is_ok() && eta.is_iso()
}

/// Pointwise kernel with induced maps, and its inclusion into the source.
pub fn kernel_nt(eta: &NaturalTransformation) -> (PersistenceModule, NaturalTransformation) {
    let f = &eta.source;
    let bases: Vec<Matrix> = eta.components.iter().map(Matrix::kernel_basis).collect();
    let dims = bases.iter().map(Matrix::cols).collect();
    let maps = f
        .poset
        .covers()
        .iter()
        .enumerate()
        .map(|(c, &(a, b))| {
            Matrix::factor_through_mono(&bases[b], &(&f.maps[c] * &bases[a])).expect("kernels are functorial")
        })
        .collect();
    let k = PersistenceModule::from_parts(f.poset.clone(), f.p, dims, maps);
    let incl = NaturalTransformation::from_parts(k.clone(), f.clone(), bases);
    (k, incl)
}

/// Pointwise cokernel with induced maps, and the projection from the target.
pub fn cokernel_nt(eta: &NaturalTransformation) -> (PersistenceModule, NaturalTransformation) {
    let g = &eta.target;
    let quotients: Vec<Matrix> = eta.components.iter().map(|m| m.cokernel().0).collect();
    let dims = quotients.iter().map(Matrix::rows).collect();
    let maps = g
        .poset
        .covers()
        .iter()
        .enumerate()
        .map(|(c, &(a, b))| {
            Matrix::factor_through_epi(&quotients[a], &(&quotients[b] * &g.maps[c])).expect("cokernels are functorial")
        })
        .collect();
    let q = PersistenceModule::from_parts(g.poset.clone(), g.p, dims, maps);
    let proj = NaturalTransformation::from_parts(g.clone(), q.clone(), quotients);
    (q, proj)
}

/// Pointwise image: the module, the corestriction `F -> im`, and the inclusion `im -> G`.
pub fn image_nt(eta: &NaturalTransformation) -> (PersistenceModule, NaturalTransformation, NaturalTransformation) {
    let g = &eta.target;
    let bases: Vec<Matrix> = eta.components.iter().map(|m| m.cokernel().0.kernel_basis()).collect();
    let dims = bases.iter().map(Matrix::cols).collect();
    let maps = g
        .poset
        .covers()
        .iter()
        .enumerate()
        .map(|(c, &(a, b))| {
            Matrix::factor_through_mono(&bases[b], &(&g.maps[c] * &bases[a])).expect("images are functorial")
        })
        .collect();
    let im = PersistenceModule::from_parts(g.poset.clone(), g.p, dims, maps);
    let onto = eta
        .components
        .iter()
        .zip(&bases)
        .map(|(m, b)| Matrix::factor_through_mono(b, m).expect("image contains the image"))
        .collect();
    let onto = NaturalTransformation::from_parts(eta.source.clone(), im.clone(), onto);
    let incl = NaturalTransformation::from_parts(im.clone(), g.clone(), bases);
    (im, onto, incl)
}

/// A finite diagram of vector spaces: nodes with dimensions and arrows with matrices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VecDiagram {
    p: u32,
    dims: Vec<usize>,
    arrows: Vec<(usize, usize, Matrix)>,
}

impl VecDiagram {
    pub fn new(p: u32, dims: Vec<usize>) -> Self {
        VecDiagram { p, dims, arrows: Vec::new() }
    }

    pub fn add_arrow(&mut self, from: usize, to: usize, m: Matrix) -> Result<()> {
        if from >= self.dims.len() || to >= self.dims.len() || from == to {
            return Err(Error::InvalidInput(format!("bad arrow {from}->{to}")));
        }
        if m.shape() != (self.dims[to], self.dims[from]) {
            return Err(Error::DimensionMismatch(format!("arrow {from}->{to}")));
        }
        self.arrows.push((from, to, m));
        Ok(())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn arrows(&self) -> &[(usize, usize, Matrix)] {
        &self.arrows
    }

    fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.dims.len() + 1);
        let mut acc = 0;
        for &d in &self.dims {
            off.push(acc);
            acc += d;
        }
        off.push(acc);
        off
    }

    /// Reversed arrows with transposed matrices.
    pub fn opposite(&self) -> VecDiagram {
        VecDiagram {
            p: self.p,
            dims: self.dims.clone(),
            arrows: self.arrows.iter().map(|(a, b, m)| (*b, *a, m.transpose())).collect(),
        }
    }

    /// `coker(sum over arrows a: j -> j' of V_j -> sum V_j, v -> in_j'(a v) - in_j(v))`.
    pub fn colimit(&self) -> Colimit {
        let off = self.offsets();
        let total = off[self.dims.len()];
        let width: usize = self.arrows.iter().map(|(j, _, _)| self.dims[*j]).sum();
        let mut rel = Matrix::zeros(self.p, total, width);
        let mut col = 0;
        for (j, k, m) in &self.arrows {
            rel.set_block(off[*k], col, m);
            rel.set_block(off[*j], col, &Matrix::identity(self.p, self.dims[*j]).scale(-1));
            col += self.dims[*j];
        }
        let (quotient, dim) = rel.cokernel();
        Colimit { dim, quotient, offsets: off, dims: self.dims.clone() }
    }

    /// `ker(sum V_j -> sum over arrows a: j -> j' of V_j', v -> a v_j - v_j')`.
    pub fn limit(&self) -> Limit {
        let off = self.offsets();
        let total = off[self.dims.len()];
        let height: usize = self.arrows.iter().map(|(_, k, _)| self.dims[*k]).sum();
        let mut diff = Matrix::zeros(self.p, height, total);
        let mut row = 0;
        for (j, k, m) in &self.arrows {
            diff.set_block(row, off[*j], m);
            diff.set_block(row, off[*k], &Matrix::identity(self.p, self.dims[*k]).scale(-1));
            row += self.dims[*k];
        }
        let kernel = diff.kernel_basis();
        Limit { dim: kernel.cols(), kernel, offsets: off, dims: self.dims.clone() }
    }
}

/// Colimit of a [`VecDiagram`] as a quotient of the direct sum of its nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Colimit {
    pub dim: usize,
    /// `dim x (sum of node dims)`, surjective.
    pub quotient: Matrix,
    offsets: Vec<usize>,
    dims: Vec<usize>,
}

impl Colimit {
    /// Cocone leg from node `j`.
    pub fn leg(&self, j: usize) -> Matrix {
        self.quotient.block(0, self.offsets[j], self.dim, self.dims[j])
    }

    /// The unique `h` with `h . leg(j) = legs[j]` for all `j`, if the legs form a cocone.
    pub fn factor(&self, p: u32, rows: usize, legs: &[Matrix]) -> Option<Matrix> {
        let joined = Matrix::hstack(p, rows, &legs.iter().collect::<Vec<_>>());
        Matrix::factor_through_epi(&self.quotient, &joined)
    }
}

/// Limit of a [`VecDiagram`] as a subspace of the direct sum of its nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Limit {
    pub dim: usize,
    /// `(sum of node dims) x dim`, injective.
    pub kernel: Matrix,
    offsets: Vec<usize>,
    dims: Vec<usize>,
}

impl Limit {
    /// Cone leg to node `j`.
    pub fn leg(&self, j: usize) -> Matrix {
        self.kernel.block(self.offsets[j], 0, self.dims[j], self.dim)
    }

    /// The unique `g` with `leg(j) . g = legs[j]` for all `j`, if the legs form a cone.
    pub fn factor(&self, p: u32, cols: usize, legs: &[Matrix]) -> Option<Matrix> {
        let joined = Matrix::vstack(p, cols, &legs.iter().collect::<Vec<_>>());
        Matrix::factor_through_mono(&self.kernel, &joined)
    }
}

pub fn diagram_colimit(d: &VecDiagram) -> Colimit {
    d.colimit()
}

pub fn diagram_limit(d: &VecDiagram) -> Limit {
    d.limit()
}
