/// Outcome of a property check: either it holds, or here is the first
/// counterexample in canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Check<W> {
    Holds,
    Fails(W),
}

impl<W> Check<W> {
    pub fn holds(&self) -> bool {
        matches!(self, Check::Holds)
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            Check::Holds => None,
            Check::Fails(w) => Some(w),
        }
    }

    pub fn map<V>(self, f: impl FnOnce(W) -> V) -> Check<V> {
        match self {
            Check::Holds => Check::Holds,
            Check::Fails(w) => Check::Fails(f(w)),
        }
    }

    /// `Holds` when the iterator yields nothing, otherwise fails on the first item.
    pub fn first_failure(mut it: impl Iterator<Item = W>) -> Self {
        match it.next() {
            None => Check::Holds,
            Some(w) => Check::Fails(w),
        }
    }
}
