//! Table factors over discrete variables, stored row-major with the last
//! variable varying fastest.

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Factor {
    pub vars: Vec<usize>,
    pub cards: Vec<usize>,
    pub values: Vec<f64>,
}

fn strides(cards: &[usize]) -> Vec<usize> {
    let mut s = vec![1; cards.len()];
    for i in (0..cards.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * cards[i + 1];
    }
    s
}

/// Advances a mixed-radix counter; returns false after the last assignment.
fn advance(assignment: &mut [usize], cards: &[usize]) -> bool {
    for i in (0..assignment.len()).rev() {
        assignment[i] += 1;
        if assignment[i] < cards[i] {
            return true;
        }
        assignment[i] = 0;
    }
    false
}

impl Factor {
    pub fn new(vars: Vec<usize>, cards: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(cards.iter().product::<usize>(), values.len());
        Factor { vars, cards, values }
    }

    pub fn scalar(value: f64) -> Self {
        Factor { vars: Vec::new(), cards: Vec::new(), values: vec![value] }
    }

    pub fn contains(&self, var: usize) -> bool {
        self.vars.contains(&var)
    }

    pub fn product(&self, other: &Factor) -> Factor {
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        for (v, c) in other.vars.iter().zip(&other.cards) {
            if !vars.contains(v) {
                vars.push(*v);
                cards.push(*c);
            }
        }
        let size: usize = cards.iter().product();
        let map = |f: &Factor| -> Vec<(usize, usize)> {
            let s = strides(&f.cards);
            f.vars.iter().enumerate().map(|(k, v)| (vars.iter().position(|x| x == v).unwrap(), s[k])).collect()
        };
        let (ma, mb) = (map(self), map(other));
        let mut values = Vec::with_capacity(size);
        let mut assignment = vec![0usize; vars.len()];
        loop {
            let ia: usize = ma.iter().map(|(pos, s)| assignment[*pos] * s).sum();
            let ib: usize = mb.iter().map(|(pos, s)| assignment[*pos] * s).sum();
            values.push(self.values[ia] * other.values[ib]);
            if !advance(&mut assignment, &cards) {
                break;
            }
        }
        Factor { vars, cards, values }
    }

    pub fn sum_out(&self, var: usize) -> Factor {
        let Some(k) = self.vars.iter().position(|&v| v == var) else { return self.clone() };
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(k);
        let ck = cards.remove(k);
        let s = strides(&self.cards);
        let outer: usize = self.cards[..k].iter().product();
        let inner = s[k];
        let mut values = vec![0.0; outer * inner];
        for o in 0..outer {
            for x in 0..ck {
                for i in 0..inner {
                    values[o * inner + i] += self.values[o * ck * inner + x * inner + i];
                }
            }
        }
        Factor { vars, cards, values }
    }

    /// Restricts `var` to `state`, dropping it from the scope.
    pub fn reduce(&self, var: usize, state: usize) -> Factor {
        let Some(k) = self.vars.iter().position(|&v| v == var) else { return self.clone() };
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(k);
        let ck = cards.remove(k);
        let s = strides(&self.cards);
        let outer: usize = self.cards[..k].iter().product();
        let inner = s[k];
        let mut values = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            let base = o * ck * inner + state * inner;
            values.extend_from_slice(&self.values[base..base + inner]);
        }
        Factor { vars, cards, values }
    }
}
