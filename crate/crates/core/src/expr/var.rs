use std::fmt;

/// Symmetric multi-index: a sorted multiset of base-coordinate indices.
///
/// The empty index denotes the fiber coordinate itself. Sorting at
/// construction makes `u_xy` and `u_yx` the same variable.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        MultiIndex(indices)
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// The multi-index `I + i`.
    pub fn with(&self, i: usize) -> Self {
        let mut v = self.0.clone();
        let pos = v.partition_point(|&j| j <= i);
        v.insert(pos, i);
        MultiIndex(v)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        Ok(())
    }
}

/// A coordinate on a jet bundle: either a base coordinate `x^i` or a jet
/// coordinate `u^a_I`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarRef {
    Base(usize),
    Jet { fiber: usize, index: MultiIndex },
}

impl VarRef {
    pub fn base(i: usize) -> Self {
        VarRef::Base(i)
    }

    pub fn fiber(a: usize) -> Self {
        VarRef::Jet {
            fiber: a,
            index: MultiIndex::empty(),
        }
    }

    pub fn jet(a: usize, indices: Vec<usize>) -> Self {
        VarRef::Jet {
            fiber: a,
            index: MultiIndex::new(indices),
        }
    }

    pub fn order(&self) -> usize {
        match self {
            VarRef::Base(_) => 0,
            VarRef::Jet { index, .. } => index.order(),
        }
    }

    pub fn is_jet(&self) -> bool {
        matches!(self, VarRef::Jet { .. })
    }
}
