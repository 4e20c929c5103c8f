//! Constructive decompositions. Every report carries an isomorphism from the
//! direct sum of its summands to the input, checked before it is returned.

use std::sync::Arc;

use crate::calculus::{
    codegree_approx, degree_approx, is_bidegree, is_codegree, is_degree, is_injective, is_projective, latching,
};
use crate::error::{Error, Result};
use crate::exactla::Matrix;
use crate::exactness::{is_2_middle_exact, is_k_middle_exact};
use crate::lattice::{stratum, CubeMode, CubeOptions, FinitePoset, Side};
use crate::persmod::{
    cokernel_nt, direct_sum, image_nt, interval_module, kernel_nt, upset_module, verify_natural_iso,
    NaturalTransformation, PersistenceModule,
};
use crate::verdict::Check;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BlockKind {
    Death,
    Vertical,
    Horizontal,
    Birth,
}

impl BlockKind {
    pub fn name(self) -> &'static str {
        match self {
            BlockKind::Death => "death",
            BlockKind::Vertical => "vertical",
            BlockKind::Horizontal => "horizontal",
            BlockKind::Birth => "birth",
        }
    }
}

/// A block in a 2-factor grid: the rectangle `xs x ys` (inclusive ranges)
/// labelled by the first matching kind in the order death, vertical,
/// horizontal, birth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Block {
    pub kind: BlockKind,
    pub xs: (usize, usize),
    pub ys: (usize, usize),
}

impl Block {
    /// Classifies a rectangle in a grid of the given shape; `None` if it is not a block.
    pub fn classify(shape: &[usize], xs: (usize, usize), ys: (usize, usize)) -> Option<Block> {
        let (mx, my) = (shape[0] - 1, shape[1] - 1);
        let kind = if xs.0 == 0 && ys.0 == 0 {
            BlockKind::Death
        } else if ys == (0, my) {
            BlockKind::Vertical
        } else if xs == (0, mx) {
            BlockKind::Horizontal
        } else if xs.1 == mx && ys.1 == my {
            BlockKind::Birth
        } else {
            return None;
        };
        Some(Block { kind, xs, ys })
    }

    pub fn elements(&self, poset: &FinitePoset) -> Vec<usize> {
        poset
            .elements()
            .filter(|&x| {
                let c = poset.coords(x);
                (self.xs.0..=self.xs.1).contains(&c[0]) && (self.ys.0..=self.ys.1).contains(&c[1])
            })
            .collect()
    }

    /// The block seen in the opposite grid (coordinates reflected).
    pub fn reflect(&self, shape: &[usize]) -> Block {
        let (mx, my) = (shape[0] - 1, shape[1] - 1);
        Block::classify(shape, (mx - self.xs.1, mx - self.xs.0), (my - self.ys.1, my - self.ys.0))
            .expect("reflected blocks are blocks")
    }

    pub fn describe(&self) -> String {
        format!("{} {{{}..{}}}x{{{}..{}}}", self.kind.name(), self.xs.0, self.xs.1, self.ys.0, self.ys.1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SummandKind {
    /// Interval module on these elements (canonical order).
    Interval(Vec<usize>),
    Block(Block),
    /// Free summand `F_{a up}`.
    Generator(usize),
    /// Cofree summand `F_{a down}`.
    Cogenerator(usize),
    Opaque,
}

#[derive(Clone, Debug)]
pub struct Summand {
    pub label: String,
    pub module: PersistenceModule,
    pub kind: SummandKind,
}

#[derive(Clone, Debug)]
pub struct DecompositionReport {
    pub summands: Vec<Summand>,
    /// From the direct sum of the summands (in order) to the input.
    pub iso: NaturalTransformation,
}

impl DecompositionReport {
    /// `parts[i]` maps summand `i` into `target`. Fails unless the combined map
    /// is a natural isomorphism and dimensions add up.
    pub fn assemble(
        target: &PersistenceModule,
        summands: Vec<Summand>,
        parts: &[NaturalTransformation],
    ) -> Result<Self> {
        let iso = NaturalTransformation::from_sum(target, &parts.iter().collect::<Vec<_>>())?;
        for x in target.poset().elements() {
            let sum: usize = summands.iter().map(|s| s.module.dim(x)).sum();
            if sum != target.dim(x) {
                return Err(Error::Internal(format!(
                    "summand dimensions at {} add to {sum}, expected {}",
                    target.poset().label(x),
                    target.dim(x)
                )));
            }
        }
        if !verify_natural_iso(&iso) {
            return Err(Error::Internal("emitted map is not a natural isomorphism".into()));
        }
        Ok(DecompositionReport { summands, iso })
    }

    pub fn blocks(&self) -> Vec<Block> {
        let mut out: Vec<Block> = self
            .summands
            .iter()
            .filter_map(|s| match s.kind {
                SummandKind::Block(b) => Some(b),
                _ => None,
            })
            .collect();
        out.sort();
        out
    }
}

fn column_space(m: &Matrix) -> Matrix {
    let (_, pivots) = m.rref_pivots();
    m.select_columns(&pivots)
}

fn intersect(u: &Matrix, w: &Matrix) -> Matrix {
    let p = u.prime();
    let joined = Matrix::hstack(p, u.rows(), &[u, &w.scale(-1)]);
    let k = joined.kernel_basis();
    column_space(&(u * &k.block(0, 0, u.cols(), k.cols())))
}

/// Columns of `within` that extend the span of `base`, chosen greedily.
fn extend_columns(base: &Matrix, within: &Matrix) -> Vec<Vec<u32>> {
    let p = base.prime();
    let mut acc = base.clone();
    let mut rank = acc.rank();
    let mut out = Vec::new();
    for j in 0..within.cols() {
        let col = within.select_columns(&[j]);
        let next = Matrix::hstack(p, acc.rows(), &[&acc, &col]);
        let r = next.rank();
        if r > rank {
            rank = r;
            acc = next;
            out.push(col.column(0));
        }
    }
    out
}

/// A basis adapted to two flags `u[0] <= u[1] <= ...` and `w[0] <= ...` of the
/// same space (both ending in the whole space).
fn adapted_basis(u: &[Matrix], w: &[Matrix]) -> Vec<Vec<u32>> {
    let rows = u[0].rows();
    let p = u[0].prime();
    let mut out = Vec::new();
    for i in 0..u.len() {
        for j in 0..w.len() {
            let s = intersect(&u[i], &w[j]);
            let mut parts: Vec<Matrix> = Vec::new();
            if i > 0 {
                parts.push(intersect(&u[i - 1], &w[j]));
            }
            if j > 0 {
                parts.push(intersect(&u[i], &w[j - 1]));
            }
            let base = Matrix::hstack(p, rows, &parts.iter().collect::<Vec<_>>());
            out.extend(extend_columns(&base, &s));
        }
    }
    out
}

/// A summand of a path-shaped module: its elements and a vector at each.
#[derive(Clone, Debug)]
struct Bar {
    elements: Vec<usize>,
    vectors: Vec<Vec<u32>>,
}

struct ArmBar {
    birth: usize,
    vectors: Vec<Vec<u32>>,
    alive: bool,
}

/// Elder-rule barcode basis of a chain module `V_0 -> V_1 -> ... -> V_m`
/// starting from the given basis of `V_0`. Vectors of bars born at 0 are never
/// modified as long as their images stay independent.
fn chain_bars(f: &PersistenceModule, chain: &[usize], root_basis: &[Vec<u32>]) -> Vec<ArmBar> {
    let p = f.prime();
    let mut bars: Vec<ArmBar> =
        root_basis.iter().map(|v| ArmBar { birth: 0, vectors: vec![v.clone()], alive: true }).collect();
    for i in 0..chain.len() - 1 {
        let m = f.map_on(chain[i], chain[i + 1]);
        let dim_next = f.dim(chain[i + 1]);
        let mut kept: Vec<(usize, Vec<u32>)> = Vec::new();
        for b in 0..bars.len() {
            if !bars[b].alive {
                continue;
            }
            let cur = bars[b].vectors.last().unwrap().clone();
            let y = (m * &Matrix::from_columns(p, cur.len(), &[cur])).column(0);
            let span = Matrix::from_columns(p, dim_next, &kept.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>());
            let target = Matrix::from_columns(p, dim_next, std::slice::from_ref(&y));
            match span.solve(&target).ok() {
                Some(c) => {
                    // dies here: subtract the elder combination along its whole life
                    let birth = bars[b].birth;
                    for (k, &(elder, _)) in kept.iter().enumerate() {
                        let coef = c.get(k, 0);
                        if coef == 0 {
                            continue;
                        }
                        for j in birth..=i {
                            let ev = bars[elder].vectors[j - bars[elder].birth].clone();
                            let v = &mut bars[b].vectors[j - birth];
                            for (t, e) in v.iter_mut().zip(ev) {
                                *t = ((*t as u64 + (p - coef) as u64 * e as u64) % p as u64) as u32;
                            }
                        }
                    }
                    bars[b].alive = false;
                }
                None => {
                    bars[b].vectors.push(y.clone());
                    kept.push((b, y));
                }
            }
        }
        let span = Matrix::from_columns(p, dim_next, &kept.iter().map(|(_, v)| v.clone()).collect::<Vec<_>>());
        for v in extend_columns(&span, &Matrix::identity(p, dim_next)) {
            bars.push(ArmBar { birth: i + 1, vectors: vec![v], alive: true });
        }
    }
    bars
}

/// Shape of a path poset rooted at a source: the root and up to two arms.
fn source_rooted_arms(poset: &FinitePoset) -> Option<(usize, Vec<Vec<usize>>)> {
    if poset.elements().any(|x| poset.parents(x).len() > 1) {
        return None;
    }
    let roots: Vec<usize> = poset.elements().filter(|&x| poset.parents(x).is_empty()).collect();
    if roots.len() != 1 {
        return None;
    }
    let root = roots[0];
    if poset.children(root).len() > 2 {
        return None;
    }
    let mut arms = Vec::new();
    for &c in poset.children(root) {
        let mut arm = vec![c];
        let mut cur = c;
        loop {
            match poset.children(cur) {
                [] => break,
                [next] => {
                    arm.push(*next);
                    cur = *next;
                }
                _ => return None,
            }
        }
        arms.push(arm);
    }
    Some((root, arms))
}

fn source_rooted_bars(f: &PersistenceModule, root: usize, arms: &[Vec<usize>]) -> Vec<Bar> {
    let p = f.prime();
    let d0 = f.dim(root);
    // kernel flags of the composites from the root along each arm
    let flag = |arm: Option<&Vec<usize>>| -> Vec<Matrix> {
        let mut out = vec![Matrix::zeros(p, d0, 0)];
        if let Some(arm) = arm {
            for &a in arm {
                out.push(f.structure_map(root, a).unwrap().kernel_basis());
            }
        }
        out.push(Matrix::identity(p, d0));
        out
    };
    let root_basis = adapted_basis(&flag(arms.first()), &flag(arms.get(1)));
    debug_assert_eq!(root_basis.len(), d0);

    let mut root_bars: Vec<Bar> =
        root_basis.iter().map(|v| Bar { elements: vec![root], vectors: vec![v.clone()] }).collect();
    let mut arm_bars = Vec::new();
    for arm in arms {
        let mut chain = vec![root];
        chain.extend(arm);
        for (k, bar) in chain_bars(f, &chain, &root_basis).into_iter().enumerate() {
            let elements: Vec<usize> = (bar.birth..bar.birth + bar.vectors.len()).map(|j| chain[j]).collect();
            if bar.birth == 0 {
                debug_assert_eq!(bar.vectors[0], root_basis[k], "root vectors stay fixed");
                root_bars[k].elements.extend(&elements[1..]);
                root_bars[k].vectors.extend(bar.vectors.into_iter().skip(1));
            } else {
                arm_bars.push(Bar { elements, vectors: bar.vectors });
            }
        }
    }
    root_bars.extend(arm_bars);
    root_bars
}

/// Builds the map `F_I -> F` sending the generator at each `x` in `I` to `vectors[x]`.
fn interval_part(
    f: &PersistenceModule,
    elements: &[usize],
    vector_at: impl Fn(usize) -> Vec<u32>,
) -> Result<(PersistenceModule, NaturalTransformation)> {
    let p = f.prime();
    let mut sorted = elements.to_vec();
    sorted.sort_unstable();
    let module = interval_module(f.poset().clone(), p, &sorted)?;
    let comps = f
        .poset()
        .elements()
        .map(|x| {
            if sorted.binary_search(&x).is_ok() {
                Matrix::from_columns(p, f.dim(x), &[vector_at(x)])
            } else {
                Matrix::zeros(p, f.dim(x), 0)
            }
        })
        .collect();
    let nt = NaturalTransformation::new(module.clone(), f.clone(), comps)?;
    Ok((module, nt))
}

fn path_bars(f: &PersistenceModule) -> Result<Vec<Bar>> {
    let poset = f.poset();
    if let Some((root, arms)) = source_rooted_arms(poset) {
        return Ok(source_rooted_bars(f, root, &arms));
    }
    let (fd, map) = f.dual();
    let (root, arms) = source_rooted_arms(fd.poset()).ok_or_else(|| {
        Error::PosetUnsupported("interval decomposition needs a path rooted at a source or a sink".into())
    })?;
    let dual_bars = source_rooted_bars(&fd, root, &arms);
    // phi: sum of intervals -> F*, so (phi^T)^{-1}: sum of intervals -> F
    let mut inverse_map = vec![0; map.len()];
    map.iter().enumerate().for_each(|(x, &y)| inverse_map[y] = x);
    let p = f.prime();
    let mut out: Vec<Bar> = dual_bars
        .iter()
        .map(|b| Bar { elements: b.elements.iter().map(|&y| inverse_map[y]).collect(), vectors: Vec::new() })
        .collect();
    for x in poset.elements() {
        let y = map[x];
        let members: Vec<usize> = (0..dual_bars.len()).filter(|&k| dual_bars[k].elements.contains(&y)).collect();
        let cols: Vec<Vec<u32>> = members
            .iter()
            .map(|&k| {
                let b = &dual_bars[k];
                b.vectors[b.elements.iter().position(|&e| e == y).unwrap()].clone()
            })
            .collect();
        let phi = Matrix::from_columns(p, f.dim(x), &cols);
        let psi = phi.transpose().inverse().ok_or_else(|| Error::Internal("dual barcode basis is singular".into()))?;
        for (j, &k) in members.iter().enumerate() {
            out[k].vectors.push(psi.column(j));
        }
    }
    // vectors were pushed in canonical element order; reorder elements to match
    for b in &mut out {
        b.elements.sort_unstable();
    }
    Ok(out)
}

/// Interval decomposition of a module over a path rooted at a source (two
/// chains glued at their common bottom, or a single chain) or at a sink.
pub fn an_interval_decompose(f: &PersistenceModule) -> Result<DecompositionReport> {
    let mut bars = path_bars(f)?;
    for b in &mut bars {
        let mut pairs: Vec<(usize, Vec<u32>)> = b.elements.iter().copied().zip(b.vectors.drain(..)).collect();
        pairs.sort_by_key(|(e, _)| *e);
        b.elements = pairs.iter().map(|(e, _)| *e).collect();
        b.vectors = pairs.into_iter().map(|(_, v)| v).collect();
    }
    bars.sort_by(|a, b| a.elements.cmp(&b.elements));
    let poset = f.poset();
    let mut summands = Vec::new();
    let mut parts = Vec::new();
    for b in &bars {
        let (module, nt) = interval_part(f, &b.elements, |x| b.vectors[b.elements.binary_search(&x).unwrap()].clone())?;
        let names: Vec<&str> = b.elements.iter().map(|&x| poset.label(x)).collect();
        summands.push(Summand {
            label: format!("interval {{{}}}", names.join(" ")),
            module,
            kind: SummandKind::Interval(b.elements.clone()),
        });
        parts.push(nt);
    }
    DecompositionReport::assemble(f, summands, &parts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockSide {
    Codegree,
    Degree,
}

fn require_grid(poset: &FinitePoset, factors: Option<usize>) -> Result<Vec<usize>> {
    match poset.shape() {
        Some(s) if factors.is_none_or(|k| s.len() == k) => Ok(s.to_vec()),
        _ => Err(Error::PosetUnsupported(match factors {
            Some(k) => format!("needs a product of {k} finite total orders"),
            None => "needs a finite product of finite total orders".into(),
        })),
    }
}

/// Block decomposition of a codegree-1 (or degree-1) module on a 2-factor grid.
pub fn block_decompose(f: &PersistenceModule, side: BlockSide) -> Result<DecompositionReport> {
    let shape = require_grid(f.poset(), Some(2))?;
    match side {
        BlockSide::Codegree => {
            if let Check::Fails(cube) = is_codegree(f, 1)? {
                return Err(Error::PreconditionFailed(format!(
                    "not codegree 1: square {} is not cocartesian",
                    cube.describe(f.poset())
                )));
            }
            codegree_blocks(f, &shape)
        }
        BlockSide::Degree => {
            if let Check::Fails(cube) = is_degree(f, 1)? {
                return Err(Error::PreconditionFailed(format!(
                    "not degree 1: square {} is not cartesian",
                    cube.describe(f.poset())
                )));
            }
            let (fd, map) = f.dual();
            let dual_report = codegree_blocks(&fd, &shape)?;
            pull_back_dual(f, &dual_report, &map, |kind| match kind {
                SummandKind::Block(b) => SummandKind::Block(b.reflect(&shape)),
                other => other.clone(),
            })
        }
    }
}

fn codegree_blocks(f: &PersistenceModule, shape: &[usize]) -> Result<DecompositionReport> {
    let poset = f.poset();
    let axes = stratum(poset, 1, Side::Join)?.elements;
    let (sub, back) = poset.induced(&axes)?;
    let restricted = f.restrict(Arc::new(sub), &back);
    let mut bars = path_bars(&restricted)?;
    for b in &mut bars {
        b.elements.iter_mut().for_each(|e| *e = back[*e]);
    }
    let mut pieces: Vec<(Block, Bar)> = bars
        .into_iter()
        .map(|b| {
            let cs: Vec<&[usize]> = b.elements.iter().map(|&e| poset.coords(e)).collect();
            let max_x = cs.iter().filter(|c| c[1] == 0).map(|c| c[0]).max();
            let max_y = cs.iter().filter(|c| c[0] == 0).map(|c| c[1]).max();
            let min_x = cs.iter().map(|c| c[0]).min().unwrap();
            let min_y = cs.iter().map(|c| c[1]).min().unwrap();
            let (xs, ys) = if cs.iter().any(|c| c[0] == 0 && c[1] == 0) {
                ((0, max_x.unwrap()), (0, max_y.unwrap()))
            } else if min_y == 0 {
                ((min_x, max_x.unwrap()), (0, shape[1] - 1))
            } else {
                ((0, shape[0] - 1), (min_y, max_y.unwrap()))
            };
            (Block::classify(shape, xs, ys).expect("extensions of axis intervals are blocks"), b)
        })
        .collect();
    pieces.sort_by_key(|a| a.0);
    let mut summands = Vec::new();
    let mut parts = Vec::new();
    for (block, bar) in &pieces {
        let vector_at = |x: usize| -> Vec<u32> {
            let c = poset.coords(x);
            // the axis point below x that belongs to the interval
            let v = if block.xs.0 == 0 && block.ys.0 > 0 {
                poset.index_of_coords(&[0, c[1]]).unwrap()
            } else {
                poset.index_of_coords(&[c[0], 0]).unwrap()
            };
            let w = &bar.vectors[bar.elements.iter().position(|&e| e == v).expect("axis point in interval")];
            let wm = Matrix::from_columns(f.prime(), w.len(), std::slice::from_ref(w));
            (&f.structure_map(v, x).unwrap() * &wm).column(0)
        };
        let (module, nt) = interval_part(f, &block.elements(poset), vector_at)
            .map_err(|e| Error::Internal(format!("block extension failed: {e}")))?;
        summands.push(Summand { label: block.describe(), module, kind: SummandKind::Block(*block) });
        parts.push(nt);
    }
    DecompositionReport::assemble(f, summands, &parts)
}

/// Turns a decomposition of `F*` (on the opposite poset) into one of `F`.
fn pull_back_dual(
    f: &PersistenceModule,
    dual_report: &DecompositionReport,
    map: &[usize],
    relabel: impl Fn(&SummandKind) -> SummandKind,
) -> Result<DecompositionReport> {
    let mut inverse_map = vec![0; map.len()];
    map.iter().enumerate().for_each(|(x, &y)| inverse_map[y] = x);
    let fix = |kind: &SummandKind| -> SummandKind {
        match relabel(kind) {
            SummandKind::Interval(es) => {
                let mut es: Vec<usize> = es.iter().map(|&y| inverse_map[y]).collect();
                es.sort_unstable();
                SummandKind::Interval(es)
            }
            SummandKind::Generator(a) => SummandKind::Cogenerator(inverse_map[a]),
            SummandKind::Cogenerator(a) => SummandKind::Generator(inverse_map[a]),
            other => other,
        }
    };
    let poset = f.poset();
    let mut summands = Vec::new();
    for s in &dual_report.summands {
        let module = s.module.dual().0;
        let kind = fix(&s.kind);
        let label = match &kind {
            SummandKind::Block(b) => b.describe(),
            SummandKind::Interval(es) => {
                format!("interval {{{}}}", es.iter().map(|&x| poset.label(x)).collect::<Vec<_>>().join(" "))
            }
            SummandKind::Generator(a) => format!("generator {}", poset.label(*a)),
            SummandKind::Cogenerator(a) => format!("cogenerator {}", poset.label(*a)),
            SummandKind::Opaque => s.label.clone(),
        };
        summands.push(Summand { label, module, kind });
    }
    let refs: Vec<&PersistenceModule> = summands.iter().map(|s| &s.module).collect();
    let sum = if refs.is_empty() { PersistenceModule::zero(poset.clone(), f.prime()) } else { direct_sum(&refs)? };
    let comps = poset
        .elements()
        .map(|x| {
            dual_report
                .iso
                .component(map[x])
                .transpose()
                .inverse()
                .ok_or_else(|| Error::Internal("dual iso is singular".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let iso = NaturalTransformation::new(sum, f.clone(), comps)?;
    // split the combined iso into per-summand parts so assembly re-verifies it
    let mut parts = Vec::new();
    let mut offsets = vec![0; poset.len()];
    for s in &summands {
        let comps = poset
            .elements()
            .map(|x| {
                let m = iso.component(x).block(0, offsets[x], f.dim(x), s.module.dim(x));
                offsets[x] += s.module.dim(x);
                m
            })
            .collect();
        parts.push(NaturalTransformation::new(s.module.clone(), f.clone(), comps)?);
    }
    DecompositionReport::assemble(f, summands, &parts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitDirection {
    /// A natural `s : Q -> F` with `pi . s = id`.
    Section,
    /// A natural `r : F -> A` with `r . iota = id`.
    Retraction,
}

/// Splits a short exact sequence `0 -> A -> F -> Q -> 0` of modules by
/// solving one linear system for all components at once. Unknowns are the
/// corrections `h_x : Q(x) -> A(x)` to a pointwise section `s0`.
pub fn natural_splitting(
    iota: &NaturalTransformation,
    pi: &NaturalTransformation,
    direction: SplitDirection,
) -> Result<NaturalTransformation> {
    let (a, f, q) = (iota.source(), iota.target(), pi.target());
    let poset = f.poset();
    let p = f.prime();
    for x in poset.elements() {
        let (i, s) = (iota.component(x), pi.component(x));
        if !(s * i).is_zero() || !i.is_injective() || !s.is_surjective() || a.dim(x) + q.dim(x) != f.dim(x) {
            return Err(Error::PreconditionFailed(format!("sequence is not short exact at {}", poset.label(x))));
        }
    }
    let s0: Vec<Matrix> =
        poset.elements().map(|x| pi.component(x).solve(&Matrix::identity(p, q.dim(x))).ok().unwrap()).collect();
    let mut offset = vec![0; poset.len() + 1];
    for x in poset.elements() {
        offset[x + 1] = offset[x] + a.dim(x) * q.dim(x);
    }
    let unknowns = offset[poset.len()];
    let mut rows: Vec<Vec<i64>> = Vec::new();
    let mut rhs: Vec<i64> = Vec::new();
    for &(x, y) in poset.covers() {
        let (am, fm, qm) = (a.map_on(x, y), f.map_on(x, y), q.map_on(x, y));
        let defect = &(fm * &s0[x]) - &(&s0[y] * qm);
        let delta = Matrix::factor_through_mono(iota.component(y), &defect)
            .ok_or_else(|| Error::Internal("section defect leaves the kernel".into()))?;
        let (ax, ay, qx, qy) = (a.dim(x), a.dim(y), q.dim(x), q.dim(y));
        for i in 0..ay {
            for j in 0..qx {
                // (A h_x)[i][j] - (h_y Q)[i][j] = -delta[i][j]
                let mut row = vec![0i64; unknowns];
                for k in 0..ax {
                    row[offset[x] + k * qx + j] += am.get(i, k) as i64;
                }
                for k in 0..qy {
                    row[offset[y] + i * qy + k] -= qm.get(k, j) as i64;
                }
                rows.push(row);
                rhs.push(-(delta.get(i, j) as i64));
            }
        }
    }
    let system = Matrix::from_rows(p, &rows, unknowns);
    let target = Matrix::from_vec(p, rhs.len(), 1, rhs);
    let h =
        system.solve(&target).ok().ok_or_else(|| Error::NoSplitting("the naturality system is inconsistent".into()))?;
    let section: Vec<Matrix> = poset
        .elements()
        .map(|x| {
            let (ax, qx) = (a.dim(x), q.dim(x));
            let data: Vec<i64> = (0..ax * qx).map(|k| h.get(offset[x] + k, 0) as i64).collect();
            let hx = Matrix::from_vec(p, ax, qx, data);
            &s0[x] + &(iota.component(x) * &hx)
        })
        .collect();
    match direction {
        SplitDirection::Section => NaturalTransformation::new(q.clone(), f.clone(), section),
        SplitDirection::Retraction => {
            let comps = poset
                .elements()
                .map(|x| {
                    let rest = &Matrix::identity(p, f.dim(x)) - &(&section[x] * pi.component(x));
                    Matrix::factor_through_mono(iota.component(x), &rest).expect("image of id - s pi lies in A")
                })
                .collect();
            NaturalTransformation::new(f.clone(), a.clone(), comps)
        }
    }
}

/// `F = K + T^1 F` for a 2-middle-exact module on a 2-factor grid.
#[derive(Clone, Debug)]
pub struct MiddleExactSplit {
    /// `T^1 F`, degree 1.
    pub degree_part: PersistenceModule,
    /// `K = ker(F -> T^1 F)`, codegree 1.
    pub codegree_part: PersistenceModule,
    pub inclusion: NaturalTransformation,
    /// Natural section of `F -> T^1 F`.
    pub section: NaturalTransformation,
    pub report: DecompositionReport,
}

fn degree_split(
    f: &PersistenceModule,
) -> Result<(PersistenceModule, PersistenceModule, NaturalTransformation, NaturalTransformation)> {
    let unit = degree_approx(f, 1)?.map;
    if !unit.components().iter().all(Matrix::is_surjective) {
        return Err(Error::Internal("F -> T^1 F is not surjective".into()));
    }
    let (k, incl) = kernel_nt(&unit);
    let section = natural_splitting(&incl, &unit, SplitDirection::Section)?;
    Ok((unit.target().clone(), k, incl, section))
}

pub fn middle_exact_split(f: &PersistenceModule) -> Result<MiddleExactSplit> {
    require_grid(f.poset(), Some(2))?;
    if let Check::Fails((x, y)) = is_2_middle_exact(f)? {
        return Err(Error::PreconditionFailed(format!(
            "not middle-exact: square on ({}, {})",
            f.poset().label(x),
            f.poset().label(y)
        )));
    }
    let (t1, k, incl, section) = degree_split(f)?;
    if !is_degree(&t1, 1)?.holds() || !is_codegree(&k, 1)?.holds() {
        return Err(Error::Internal("split summands fail their degree checks".into()));
    }
    let summands = vec![
        Summand { label: "K (codegree 1)".into(), module: k.clone(), kind: SummandKind::Opaque },
        Summand { label: "T1F (degree 1)".into(), module: t1.clone(), kind: SummandKind::Opaque },
    ];
    let report = DecompositionReport::assemble(f, summands, &[incl.clone(), section.clone()])?;
    Ok(MiddleExactSplit { degree_part: t1, codegree_part: k, inclusion: incl, section, report })
}

/// `F = B + K + C` with `B` bidegree 1, `K` injective and `C` projective, for
/// k-middle-exact modules on a product of finite total orders. The summands
/// are reported in the order B, K, C.
pub fn bkc_decompose(f: &PersistenceModule) -> Result<DecompositionReport> {
    let shape = require_grid(f.poset(), None)?;
    for k in 2..=shape.len() {
        if let Check::Fails(w) = is_k_middle_exact(f, k, CubeMode::Full, &CubeOptions::default())? {
            return Err(Error::PreconditionFailed(format!(
                "not {k}-middle-exact: Koszul complex of {} has homology {:?}",
                w.cube.describe(f.poset()),
                w.homology
            )));
        }
    }
    let (g, k, incl, section) = degree_split(f)?;
    let counit = codegree_approx(&g, 1)?.map;
    if !counit.components().iter().all(Matrix::is_injective) {
        return Err(Error::Internal("T_1 T^1 F -> T^1 F is not injective".into()));
    }
    let b = counit.source().clone();
    let (c, proj) = cokernel_nt(&counit);
    let t = natural_splitting(&counit, &proj, SplitDirection::Section)?;
    if !is_bidegree(&b, 1)?.holds() {
        return Err(Error::Internal("B is not bidegree 1".into()));
    }
    if !is_injective(&k)?.holds() {
        return Err(Error::Internal("K is not injective".into()));
    }
    if !is_projective(&c)?.holds() {
        return Err(Error::Internal("C is not projective".into()));
    }
    let summands = vec![
        Summand { label: "B (bidegree 1)".into(), module: b, kind: SummandKind::Opaque },
        Summand { label: "K (injective)".into(), module: k, kind: SummandKind::Opaque },
        Summand { label: "C (projective)".into(), module: c, kind: SummandKind::Opaque },
    ];
    let parts = [counit.then(&section), incl, t.then(&section)];
    DecompositionReport::assemble(f, summands, &parts)
}

/// Outcome of [`free_structure`] / [`cofree_structure`].
#[derive(Clone, Debug)]
pub enum Structure {
    /// Multiplicity per (co)generator, in canonical element order, with the decomposition.
    Found { multiplicities: Vec<(usize, usize)>, report: DecompositionReport },
    /// The candidate map from the (co)free module is not an isomorphism.
    NotFound,
}

impl Structure {
    pub fn multiplicities(&self) -> Option<&[(usize, usize)]> {
        match self {
            Structure::Found { multiplicities, .. } => Some(multiplicities),
            Structure::NotFound => None,
        }
    }
}

/// Writes `F` as a sum of `F_{a up}`: generators at `a` lift a basis of the
/// cokernel of the latching map at `a`.
pub fn free_structure(f: &PersistenceModule) -> Result<Structure> {
    let poset = f.poset();
    if !poset.profile().is_distributive {
        return Err(Error::PosetUnsupported("the index poset is not a distributive lattice".into()));
    }
    let p = f.prime();
    let mut summands = Vec::new();
    let mut parts = Vec::new();
    let mut multiplicities = Vec::new();
    for a in poset.elements() {
        let l = latching(f, a)?;
        let image = column_space(&l.map);
        let lifts = extend_columns(&image, &Matrix::identity(p, f.dim(a)));
        if !lifts.is_empty() {
            multiplicities.push((a, lifts.len()));
        }
        for w in lifts {
            let module = upset_module(poset.clone(), p, a);
            let wm = Matrix::from_columns(p, w.len(), &[w]);
            let comps = poset
                .elements()
                .map(|x| {
                    if poset.leq(a, x) {
                        &f.structure_map(a, x).unwrap() * &wm
                    } else {
                        Matrix::zeros(p, f.dim(x), 0)
                    }
                })
                .collect();
            parts.push(NaturalTransformation::new(module.clone(), f.clone(), comps)?);
            summands.push(Summand {
                label: format!("generator {}", poset.label(a)),
                module,
                kind: SummandKind::Generator(a),
            });
        }
    }
    match DecompositionReport::assemble(f, summands, &parts) {
        Ok(report) => Ok(Structure::Found { multiplicities, report }),
        Err(Error::Internal(_)) => Ok(Structure::NotFound),
        Err(e) => Err(e),
    }
}

/// Writes `F` as a sum of `F_{a down}`, dually to [`free_structure`].
pub fn cofree_structure(f: &PersistenceModule) -> Result<Structure> {
    let (fd, map) = f.dual();
    match free_structure(&fd)? {
        Structure::NotFound => Ok(Structure::NotFound),
        Structure::Found { report, .. } => {
            let report = pull_back_dual(f, &report, &map, |k| k.clone())?;
            let mut multiplicities: Vec<(usize, usize)> = Vec::new();
            for s in &report.summands {
                if let SummandKind::Cogenerator(a) = s.kind {
                    match multiplicities.iter_mut().find(|(b, _)| *b == a) {
                        Some(entry) => entry.1 += 1,
                        None => multiplicities.push((a, 1)),
                    }
                }
            }
            multiplicities.sort_unstable();
            Ok(Structure::Found { multiplicities, report })
        }
    }
}

/// Interval decomposition of a bidegree-1 module on a grid: the injective
/// part generated at the bottom splits off as a sum of `F_{a down}`, and the
/// rest is a sum of slabs `{x : s <= x_i <= t}`.
pub fn bidegree1_interval_decompose(f: &PersistenceModule) -> Result<DecompositionReport> {
    let shape = require_grid(f.poset(), None)?;
    if let Check::Fails(cube) = is_bidegree(f, 1)? {
        return Err(Error::PreconditionFailed(format!("not bidegree 1: cube {} fails", cube.describe(f.poset()))));
    }
    let poset = f.poset();
    let p = f.prime();
    let from_bottom = codegree_approx(f, 0)?.map;
    let (k, _, incl) = image_nt(&from_bottom);
    let (q, proj) = cokernel_nt(&incl);
    let section = natural_splitting(&incl, &proj, SplitDirection::Section)?;

    let mut summands = Vec::new();
    let mut parts = Vec::new();
    match cofree_structure(&k)? {
        Structure::NotFound => return Err(Error::Internal("the part generated at the bottom is not cofree".into())),
        Structure::Found { report, .. } => {
            let mut offsets = vec![0; poset.len()];
            for s in report.summands {
                let comps = poset
                    .elements()
                    .map(|x| {
                        let m = report.iso.component(x).block(0, offsets[x], k.dim(x), s.module.dim(x));
                        offsets[x] += s.module.dim(x);
                        m
                    })
                    .collect();
                let part = NaturalTransformation::new(s.module.clone(), k.clone(), comps)?.then(&incl);
                let kind = match s.kind {
                    SummandKind::Cogenerator(a) => SummandKind::Interval(poset.down_set(a)),
                    other => other,
                };
                summands.push(Summand { label: s.label, module: s.module, kind });
                parts.push(part);
            }
        }
    }

    let bottom = poset.profile().bottom.expect("grid has a bottom");
    for axis in 0..shape.len() {
        let chain: Vec<usize> = poset
            .elements()
            .filter(|&x| poset.coords(x).iter().enumerate().all(|(i, &c)| i == axis || c == 0))
            .collect();
        let (sub, back) = poset.induced(&chain)?;
        let restricted = q.restrict(Arc::new(sub), &back);
        let mut bars = path_bars(&restricted)?;
        bars.sort_by(|a, b| a.elements.cmp(&b.elements));
        for bar in bars {
            let elems: Vec<usize> = bar.elements.iter().map(|&e| back[e]).collect();
            if elems.contains(&bottom) {
                return Err(Error::Internal("quotient by the bottom-generated part is nonzero at the bottom".into()));
            }
            let lo = elems.iter().map(|&e| poset.coords(e)[axis]).min().unwrap();
            let hi = elems.iter().map(|&e| poset.coords(e)[axis]).max().unwrap();
            let slab: Vec<usize> = poset.elements().filter(|&x| (lo..=hi).contains(&poset.coords(x)[axis])).collect();
            let vector_at = |x: usize| -> Vec<u32> {
                let mut c = vec![0; shape.len()];
                c[axis] = poset.coords(x)[axis];
                let v = poset.index_of_coords(&c).unwrap();
                let w = &bar.vectors[elems.iter().position(|&e| e == v).unwrap()];
                let wm = Matrix::from_columns(p, w.len(), std::slice::from_ref(w));
                (&q.structure_map(v, x).unwrap() * &wm).column(0)
            };
            let (module, nt) = interval_part(&q, &slab, vector_at)
                .map_err(|e| Error::Internal(format!("slab extension failed: {e}")))?;
            summands.push(Summand {
                label: format!("slab {lo}..{hi} along axis {axis}"),
                module,
                kind: SummandKind::Interval(slab),
            });
            parts.push(nt.then(&section));
        }
    }
    DecompositionReport::assemble(f, summands, &parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::persmod::{direct_sum, downset_module, random_module};

    fn grid(shape: &[usize]) -> Arc<FinitePoset> {
        Arc::new(FinitePoset::grid(shape).unwrap())
    }

    fn at(p: &FinitePoset, c: &[usize]) -> usize {
        p.index_of_coords(c).unwrap()
    }

    fn rect(g: &Arc<FinitePoset>, xs: (usize, usize), ys: (usize, usize)) -> PersistenceModule {
        let set: Vec<usize> = g
            .elements()
            .filter(|&x| {
                let c = g.coords(x);
                (xs.0..=xs.1).contains(&c[0]) && (ys.0..=ys.1).contains(&c[1])
            })
            .collect();
        interval_module(g.clone(), 2, &set).unwrap()
    }

    fn labels(p: &FinitePoset, xs: &[usize]) -> Vec<String> {
        let mut v: Vec<String> = xs.iter().map(|&x| p.label(x).to_string()).collect();
        v.sort();
        v
    }

    #[test]
    fn ex1_axes_interval_decomposition() {
        let f = fixtures::ex1();
        let p = f.poset().clone();
        let axes = stratum(&p, 1, Side::Join).unwrap().elements;
        let (sub, back) = p.induced(&axes).unwrap();
        let sub = Arc::new(sub);
        let r = f.restrict(sub.clone(), &back);
        let report = an_interval_decompose(&r).unwrap();
        let mut got: Vec<Vec<String>> = report
            .summands
            .iter()
            .map(|s| match &s.kind {
                SummandKind::Interval(es) => labels(&sub, es),
                _ => panic!(),
            })
            .collect();
        got.sort();
        let mut want = vec![
            vec!["1,0".to_string(), "2,0".into()],
            vec!["0,2".to_string()],
            vec!["0,0".to_string(), "0,1".into(), "1,0".into()],
        ];
        want.iter_mut().for_each(|v| v.sort());
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn chain_examples() {
        let chain = Arc::new(FinitePoset::explicit(&["0", "1", "2"], &[("0", "1"), ("1", "2")]).unwrap());
        let f = PersistenceModule::new(
            chain.clone(),
            2,
            vec![1, 1, 0],
            vec![Matrix::identity(2, 1), Matrix::zeros(2, 0, 1)],
        )
        .unwrap();
        let r = an_interval_decompose(&f).unwrap();
        assert_eq!(r.summands.len(), 1);
        assert_eq!(r.summands[0].kind, SummandKind::Interval(vec![0, 1]));
        let z = PersistenceModule::zero(chain, 2);
        assert!(an_interval_decompose(&z).unwrap().summands.is_empty());
    }

    #[test]
    fn random_path_modules_decompose() {
        let shapes = [&[4, 3][..], &[3, 4], &[5, 1]];
        for (i, shape) in shapes.iter().enumerate() {
            for seed in 0..20 {
                let f = random_module(grid(shape), if seed % 2 == 0 { 2 } else { 3 }, seed + 100 * i as u64, 4);
                for side in [Side::Join, Side::Meet] {
                    let s = stratum(f.poset(), 1, side).unwrap().elements;
                    let (sub, back) = f.poset().induced(&s).unwrap();
                    let r = f.restrict(Arc::new(sub), &back);
                    an_interval_decompose(&r).unwrap();
                }
            }
        }
    }

    #[test]
    fn ex1_blocks() {
        let r = block_decompose(&fixtures::ex1(), BlockSide::Codegree).unwrap();
        let blocks = r.blocks();
        assert_eq!(
            blocks,
            vec![
                Block { kind: BlockKind::Death, xs: (0, 1), ys: (0, 1) },
                Block { kind: BlockKind::Vertical, xs: (1, 2), ys: (0, 2) },
                Block { kind: BlockKind::Horizontal, xs: (0, 2), ys: (2, 2) },
            ]
        );
    }

    #[test]
    fn whole_grid_is_one_death_block_and_hook_is_rejected() {
        let g = grid(&[3, 4]);
        let whole = rect(&g, (0, 2), (0, 3));
        let r = block_decompose(&whole, BlockSide::Codegree).unwrap();
        assert_eq!(r.blocks(), vec![Block { kind: BlockKind::Death, xs: (0, 2), ys: (0, 3) }]);
        assert!(matches!(block_decompose(&fixtures::hook(), BlockSide::Codegree), Err(Error::PreconditionFailed(_))));
    }

    #[test]
    fn degree_side_blocks() {
        let g = grid(&[4, 4]);
        let birth = rect(&g, (1, 3), (2, 3));
        let horizontal = rect(&g, (0, 3), (1, 2));
        let f = direct_sum(&[&birth, &horizontal]).unwrap();
        let r = block_decompose(&f, BlockSide::Degree).unwrap();
        assert_eq!(
            r.blocks(),
            vec![
                Block { kind: BlockKind::Horizontal, xs: (0, 3), ys: (1, 2) },
                Block { kind: BlockKind::Birth, xs: (1, 3), ys: (2, 3) },
            ]
        );
    }

    #[test]
    fn splitting_examples() {
        let g = grid(&[3, 3]);
        let a = rect(&g, (1, 2), (0, 2));
        let b = rect(&g, (0, 1), (0, 1));
        let f = direct_sum(&[&a, &b]).unwrap();
        let incl = NaturalTransformation::new(
            a.clone(),
            f.clone(),
            g.elements()
                .map(|x| {
                    Matrix::vstack(
                        2,
                        a.dim(x),
                        &[&Matrix::identity(2, a.dim(x)), &Matrix::zeros(2, b.dim(x), a.dim(x))],
                    )
                })
                .collect(),
        )
        .unwrap();
        let (_, proj) = cokernel_nt(&incl);
        let s = natural_splitting(&incl, &proj, SplitDirection::Section).unwrap();
        assert!(verify_natural_iso(&s.then(&proj)));
        let r = natural_splitting(&incl, &proj, SplitDirection::Retraction).unwrap();
        assert!(verify_natural_iso(&incl.then(&r)));

        // 0 -> F_{1} -> F_{0,1} -> F_{0} -> 0 on a 2-chain does not split
        let chain = Arc::new(FinitePoset::explicit(&["0", "1"], &[("0", "1")]).unwrap());
        let whole = interval_module(chain.clone(), 2, &[0, 1]).unwrap();
        let top = interval_module(chain.clone(), 2, &[1]).unwrap();
        let iota = NaturalTransformation::new(top, whole.clone(), vec![Matrix::zeros(2, 1, 0), Matrix::identity(2, 1)])
            .unwrap();
        let (_, pi) = cokernel_nt(&iota);
        assert!(matches!(natural_splitting(&iota, &pi, SplitDirection::Section), Err(Error::NoSplitting(_))));
    }

    #[test]
    fn middle_exact_split_examples() {
        let g = grid(&[4, 4]);
        let death = rect(&g, (0, 1), (0, 2));
        let birth = rect(&g, (2, 3), (1, 3));
        let f = direct_sum(&[&death, &birth]).unwrap();
        let s = middle_exact_split(&f).unwrap();
        assert_eq!(s.codegree_part.dims(), death.dims());
        assert_eq!(s.degree_part.dims(), birth.dims());

        let ex1 = fixtures::ex1();
        let s = middle_exact_split(&ex1).unwrap();
        for x in ex1.poset().elements() {
            assert_eq!(s.codegree_part.dim(x) + s.degree_part.dim(x), ex1.dim(x));
        }
        assert!(matches!(middle_exact_split(&fixtures::hook()), Err(Error::PreconditionFailed(_))));
    }

    #[test]
    fn bkc_examples() {
        let g = grid(&[3, 3]);
        let up = upset_module(g.clone(), 2, at(&g, &[1, 0]));
        let down = downset_module(g.clone(), 2, at(&g, &[1, 1]));
        let vertical = rect(&g, (1, 2), (0, 2));
        let f = direct_sum(&[&up, &down, &vertical]).unwrap();
        let r = bkc_decompose(&f).unwrap();
        let (b, k, c) = (&r.summands[0].module, &r.summands[1].module, &r.summands[2].module);
        assert_eq!(k.dims(), down.dims());
        // (1,0) up is the vertical block itself, so both copies are bidegree 1
        for x in g.elements() {
            assert_eq!(b.dim(x) + c.dim(x), 2 * vertical.dim(x));
        }
        let z = PersistenceModule::zero(g.clone(), 2);
        assert!(bkc_decompose(&z).unwrap().summands.iter().all(|s| s.module.is_zero()));
        assert!(matches!(bkc_decompose(&fixtures::ex4()), Err(Error::PosetUnsupported(_))));
    }

    #[test]
    fn bidegree1_examples() {
        let g = grid(&[3, 3]);
        let vertical = rect(&g, (1, 2), (0, 2));
        let horizontal = rect(&g, (0, 2), (2, 2));
        let f = direct_sum(&[&vertical, &horizontal]).unwrap();
        let r = bidegree1_interval_decompose(&f).unwrap();
        let mut got: Vec<Vec<usize>> = r
            .summands
            .iter()
            .map(|s| match &s.kind {
                SummandKind::Interval(es) => es.clone(),
                _ => panic!(),
            })
            .collect();
        got.sort();
        let mut want = [rect(&g, (1, 2), (0, 2)), rect(&g, (0, 2), (2, 2))]
            .iter()
            .map(|m| g.elements().filter(|&x| m.dim(x) == 1).collect::<Vec<_>>())
            .collect::<Vec<_>>();
        want.sort();
        assert_eq!(got, want);

        let whole = rect(&g, (0, 2), (0, 2));
        let r = bidegree1_interval_decompose(&whole).unwrap();
        assert_eq!(r.summands.len(), 1);
        assert_eq!(r.summands[0].kind, SummandKind::Interval(g.elements().collect()));
        assert!(matches!(bidegree1_interval_decompose(&fixtures::n_bidegree()), Err(Error::PosetUnsupported(_))));
    }

    #[test]
    fn free_and_cofree_examples() {
        let g = grid(&[2, 2]);
        let f =
            direct_sum(&[&upset_module(g.clone(), 2, at(&g, &[1, 0])), &upset_module(g.clone(), 2, at(&g, &[0, 0]))])
                .unwrap();
        let mut m = free_structure(&f).unwrap().multiplicities().unwrap().to_vec();
        m.sort_unstable();
        assert_eq!(m, vec![(at(&g, &[0, 0]), 1), (at(&g, &[1, 0]), 1)]);

        let down = downset_module(g.clone(), 2, at(&g, &[1, 0]));
        assert!(matches!(free_structure(&down).unwrap(), Structure::NotFound));
        assert_eq!(cofree_structure(&down).unwrap().multiplicities().unwrap(), &[(at(&g, &[1, 0]), 1)]);
        let up = upset_module(g.clone(), 2, at(&g, &[1, 0]));
        assert!(matches!(cofree_structure(&up).unwrap(), Structure::NotFound));

        let two = direct_sum(&[&downset_module(g.clone(), 2, at(&g, &[0, 1])), &down]).unwrap();
        assert_eq!(
            cofree_structure(&two).unwrap().multiplicities().unwrap(),
            &[(at(&g, &[0, 1]), 1), (at(&g, &[1, 0]), 1)]
        );
        let z = PersistenceModule::zero(g.clone(), 2);
        assert_eq!(free_structure(&z).unwrap().multiplicities().unwrap(), &[] as &[(usize, usize)]);
    }
}
