//! Finite balls in Cayley graphs with element-level deduplication.

use std::collections::HashMap;

use super::{ElementKey, GroupContext};
use crate::error::{Error, Result};
use crate::par;
use crate::word::Word;

/// Set of group elements, deduplicated by canonical key when the strategy
/// has one and by bucketed `is_identity` comparisons otherwise.
#[derive(Clone, Debug, Default)]
pub struct ElementIndex {
    keys: HashMap<ElementKey, usize>,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
    reps: Vec<Word>,
}

impl ElementIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn reps(&self) -> &[Word] {
        &self.reps
    }

    pub fn get(&self, ctx: &GroupContext, w: &Word) -> Result<Option<usize>> {
        if let Some(k) = ctx.canonical_key(w)? {
            return Ok(self.keys.get(&k).copied());
        }
        let Some(bucket) = self.buckets.get(&ctx.prefilter_key(w)) else { return Ok(None) };
        for &i in bucket {
            if ctx.is_identity(&w.mul(&self.reps[i].inverse()))? {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    /// Inserts `w` unless an equal element is present. Returns the index
    /// and whether it was new.
    pub fn insert(&mut self, ctx: &GroupContext, w: Word) -> Result<(usize, bool)> {
        if let Some(k) = ctx.canonical_key(&w)? {
            if let Some(&i) = self.keys.get(&k) {
                return Ok((i, false));
            }
            let i = self.reps.len();
            self.keys.insert(k, i);
            self.reps.push(w);
            return Ok((i, true));
        }
        if let Some(i) = self.get(ctx, &w)? {
            return Ok((i, false));
        }
        let i = self.reps.len();
        self.buckets.entry(ctx.prefilter_key(&w)).or_default().push(i);
        self.reps.push(w);
        Ok((i, true))
    }
}

/// Ball of a Cayley graph in BFS order; `elements[i]` is a geodesic
/// representative at distance `dist[i]`.
#[derive(Clone, Debug)]
pub struct CayleyBall {
    pub radius: usize,
    pub elements: Vec<Word>,
    pub dist: Vec<usize>,
    index: ElementIndex,
}

impl CayleyBall {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn index_of(&self, ctx: &GroupContext, w: &Word) -> Result<Option<usize>> {
        self.index.get(ctx, w)
    }

    /// Elements at distance exactly `r`.
    pub fn sphere(&self, r: usize) -> impl Iterator<Item = &Word> {
        self.elements.iter().zip(&self.dist).filter(move |(_, &d)| d == r).map(|(w, _)| w)
    }
}

/// Ball over the standard generators and their inverses.
pub fn ball(ctx: &GroupContext, radius: usize, budget: usize) -> Result<CayleyBall> {
    let gens: Vec<Word> = ctx.alphabet().letters().into_iter().map(Word::letter).collect();
    ball_over(ctx, &gens, radius, budget)
}

/// Ball over an arbitrary symmetric generating list.
pub fn ball_over(ctx: &GroupContext, gens: &[Word], radius: usize, budget: usize) -> Result<CayleyBall> {
    let mut index = ElementIndex::new();
    let mut dist = vec![0];
    index.insert(ctx, Word::identity())?;
    let mut frontier = vec![0usize];
    for r in 1..=radius {
        let fwords: Vec<Word> = frontier.iter().map(|&i| index.reps[i].clone()).collect();
        let candidates: Vec<Vec<Word>> = par::map(&fwords, |w| gens.iter().map(|g| w.mul(g)).collect());
        let mut next = Vec::new();
        for w in candidates.into_iter().flatten() {
            let (i, fresh) = index.insert(ctx, w)?;
            if fresh {
                if index.len() > budget {
                    return Err(Error::BudgetExceeded { what: format!("ball of radius {radius}"), limit: budget });
                }
                dist.push(r);
                next.push(i);
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(CayleyBall { radius, elements: index.reps.clone(), dist, index })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::Alphabet;

    #[test]
    fn free_group_ball_sizes() {
        let f2 = GroupContext::free(Alphabet::new(["a", "b"]).unwrap());
        assert_eq!(ball(&f2, 1, 1000).unwrap().len(), 5);
        assert_eq!(ball(&f2, 2, 1000).unwrap().len(), 17);
        for r in 0..=6usize {
            let expected = 1 + (1..=r).map(|i| 4 * 3usize.pow(i as u32 - 1)).sum::<usize>();
            assert_eq!(ball(&f2, r, 10_000).unwrap().len(), expected);
        }
    }

    #[test]
    fn z2_ball() {
        let z2 = GroupContext::free_abelian(Alphabet::new(["x", "y"]).unwrap());
        assert_eq!(ball(&z2, 2, 1000).unwrap().len(), 13);
    }

    #[test]
    fn budget_is_enforced() {
        let f2 = GroupContext::free(Alphabet::new(["a", "b"]).unwrap());
        assert!(matches!(ball(&f2, 3, 20), Err(Error::BudgetExceeded { .. })));
    }
}
