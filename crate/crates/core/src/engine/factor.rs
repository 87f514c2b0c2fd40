//! Dense factors over discrete variables. Variables are kept sorted by
//! index and values are stored row-major (the last variable varies fastest).

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub vars: Vec<usize>,
    pub cards: Vec<usize>,
    pub values: Vec<f64>,
}

fn row_major_strides(cards: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; cards.len()];
    for k in (0..cards.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * cards[k + 1];
    }
    strides
}

impl Factor {
    pub fn scalar(value: f64) -> Self {
        Factor {
            vars: Vec::new(),
            cards: Vec::new(),
            values: vec![value],
        }
    }

    /// Builds a factor from a table laid out over `vars` in the given
    /// (possibly unsorted) order.
    pub fn from_table(vars: &[usize], cards: &[usize], values: &[f64]) -> Self {
        debug_assert_eq!(values.len(), cards.iter().product::<usize>());
        let mut order: Vec<usize> = (0..vars.len()).collect();
        order.sort_by_key(|&k| vars[k]);
        let sorted_vars: Vec<usize> = order.iter().map(|&k| vars[k]).collect();
        let sorted_cards: Vec<usize> = order.iter().map(|&k| cards[k]).collect();
        let src_strides = row_major_strides(cards);
        let strides: Vec<usize> = order.iter().map(|&k| src_strides[k]).collect();

        let mut out = Vec::with_capacity(values.len());
        let mut assign = vec![0usize; vars.len()];
        let mut src = 0usize;
        for _ in 0..values.len() {
            out.push(values[src]);
            for k in (0..assign.len()).rev() {
                assign[k] += 1;
                src += strides[k];
                if assign[k] < sorted_cards[k] {
                    break;
                }
                src -= strides[k] * sorted_cards[k];
                assign[k] = 0;
            }
        }
        Factor {
            vars: sorted_vars,
            cards: sorted_cards,
            values: out,
        }
    }

    pub fn position(&self, var: usize) -> Option<usize> {
        self.vars.binary_search(&var).ok()
    }

    pub fn contains(&self, var: usize) -> bool {
        self.position(var).is_some()
    }

    pub fn product(&self, other: &Factor) -> Factor {
        let mut vars = Vec::with_capacity(self.vars.len() + other.vars.len());
        let mut cards = Vec::with_capacity(vars.capacity());
        let (mut i, mut j) = (0, 0);
        while i < self.vars.len() || j < other.vars.len() {
            let take_self = j >= other.vars.len()
                || (i < self.vars.len() && self.vars[i] <= other.vars[j]);
            if take_self {
                if j < other.vars.len() && self.vars[i] == other.vars[j] {
                    j += 1;
                }
                vars.push(self.vars[i]);
                cards.push(self.cards[i]);
                i += 1;
            } else {
                vars.push(other.vars[j]);
                cards.push(other.cards[j]);
                j += 1;
            }
        }
        let stride_in = |f: &Factor| -> Vec<usize> {
            let s = row_major_strides(&f.cards);
            vars.iter()
                .map(|v| f.position(*v).map_or(0, |p| s[p]))
                .collect()
        };
        let sa = stride_in(self);
        let sb = stride_in(other);
        let total: usize = cards.iter().product();
        let mut values = Vec::with_capacity(total);
        let mut assign = vec![0usize; vars.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..total {
            values.push(self.values[ia] * other.values[ib]);
            for k in (0..assign.len()).rev() {
                assign[k] += 1;
                ia += sa[k];
                ib += sb[k];
                if assign[k] < cards[k] {
                    break;
                }
                ia -= sa[k] * cards[k];
                ib -= sb[k] * cards[k];
                assign[k] = 0;
            }
        }
        Factor { vars, cards, values }
    }

    fn split(&self, pos: usize) -> (usize, usize, usize) {
        let outer: usize = self.cards[..pos].iter().product();
        let inner: usize = self.cards[pos + 1..].iter().product();
        (outer, self.cards[pos], inner)
    }

    fn without(&self, pos: usize, values: Vec<f64>) -> Factor {
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(pos);
        cards.remove(pos);
        Factor { vars, cards, values }
    }

    fn fold_out(&self, var: usize, init: f64, op: impl Fn(f64, f64) -> f64) -> Factor {
        let Some(pos) = self.position(var) else {
            return self.clone();
        };
        let (outer, card, inner) = self.split(pos);
        let mut values = vec![init; outer * inner];
        for o in 0..outer {
            for s in 0..card {
                let base = (o * card + s) * inner;
                for i in 0..inner {
                    let slot = &mut values[o * inner + i];
                    *slot = op(*slot, self.values[base + i]);
                }
            }
        }
        self.without(pos, values)
    }

    pub fn sum_out(&self, var: usize) -> Factor {
        self.fold_out(var, 0.0, |a, b| a + b)
    }

    pub fn max_out(&self, var: usize) -> Factor {
        self.fold_out(var, f64::NEG_INFINITY, f64::max)
    }

    /// Restricts `var` to `state` and drops it from the scope.
    pub fn reduce(&self, var: usize, state: usize) -> Factor {
        let Some(pos) = self.position(var) else {
            return self.clone();
        };
        let (outer, card, inner) = self.split(pos);
        let mut values = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            let base = (o * card + state) * inner;
            values.extend_from_slice(&self.values[base..base + inner]);
        }
        self.without(pos, values)
    }

    /// Value at a full assignment indexed by variable id.
    pub fn value_at(&self, assignment: &[usize]) -> f64 {
        let strides = row_major_strides(&self.cards);
        let idx: usize = self
            .vars
            .iter()
            .zip(&strides)
            .map(|(v, s)| assignment[*v] * s)
            .sum();
        self.values[idx]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_table_reorders() {
        // table over (var 2, var 0) with cards (2, 3)
        let f = Factor::from_table(&[2, 0], &[2, 3], &[1., 2., 3., 4., 5., 6.]);
        assert_eq!(f.vars, vec![0, 2]);
        assert_eq!(f.cards, vec![3, 2]);
        // f(v0=i, v2=j) = table[j*3 + i]
        assert_eq!(f.values, vec![1., 4., 2., 5., 3., 6.]);
    }

    #[test]
    fn product_and_marginalize() {
        let a = Factor::from_table(&[0], &[2], &[0.3, 0.7]);
        let b = Factor::from_table(&[0, 1], &[2, 2], &[0.9, 0.1, 0.2, 0.8]);
        let joint = a.product(&b);
        assert_eq!(joint.vars, vec![0, 1]);
        let m = joint.sum_out(0);
        assert!((m.values[0] - (0.27 + 0.14)).abs() < 1e-15);
        assert!((m.values[1] - (0.03 + 0.56)).abs() < 1e-15);
        let r = joint.reduce(1, 1);
        assert_eq!(r.vars, vec![0]);
        assert!((r.values[0] - 0.03).abs() < 1e-15);
        let mx = joint.max_out(1);
        assert!((mx.values[1] - 0.56).abs() < 1e-15);
    }

    #[test]
    fn product_with_disjoint_and_scalar() {
        let a = Factor::from_table(&[3], &[2], &[1.0, 2.0]);
        let b = Factor::from_table(&[1], &[3], &[1.0, 10.0, 100.0]);
        let p = a.product(&b);
        assert_eq!(p.vars, vec![1, 3]);
        assert_eq!(p.values, vec![1., 2., 10., 20., 100., 200.]);
        let s = Factor::scalar(0.5).product(&p);
        assert_eq!(s.values[5], 100.0);
    }
}
