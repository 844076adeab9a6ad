//! Rank-valued tables over small sets of discrete variables, combined in the
//! min-plus semiring.

use crate::rank::Rank;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Factor {
    /// Variable indices, strictly ascending.
    vars: Vec<usize>,
    cards: Vec<usize>,
    /// Row-major, last variable fastest.
    table: Vec<Rank>,
}

impl Factor {
    pub fn scalar(r: Rank) -> Factor {
        Factor {
            vars: Vec::new(),
            cards: Vec::new(),
            table: vec![r],
        }
    }

    /// Fills a factor by evaluating `rank` at every assignment of `vars`.
    /// The closure receives values aligned with `vars`.
    pub fn tabulate<F>(vars: Vec<usize>, cards: Vec<usize>, mut rank: F) -> Factor
    where
        F: FnMut(&[usize]) -> Rank,
    {
        debug_assert!(vars.windows(2).all(|w| w[0] < w[1]));
        let size: usize = cards.iter().product();
        let mut table = Vec::with_capacity(size);
        let mut asg = vec![0usize; vars.len()];
        for _ in 0..size {
            table.push(rank(&asg));
            for k in (0..asg.len()).rev() {
                asg[k] += 1;
                if asg[k] < cards[k] {
                    break;
                }
                asg[k] = 0;
            }
        }
        Factor { vars, cards, table }
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn table(&self) -> &[Rank] {
        &self.table
    }

    pub fn contains(&self, var: usize) -> bool {
        self.vars.binary_search(&var).is_ok()
    }

    pub fn min(&self) -> Rank {
        self.table.iter().copied().min().unwrap_or(Rank::INFINITY)
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.vars.len()];
        for k in (0..self.vars.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.cards[k + 1];
        }
        strides
    }

    /// Entry at an assignment given per variable by `value_of`.
    pub fn at<F: Fn(usize) -> usize>(&self, value_of: F) -> Rank {
        let idx = self
            .vars
            .iter()
            .zip(self.strides())
            .map(|(&v, s)| value_of(v) * s)
            .sum::<usize>();
        self.table[idx]
    }

    /// Pointwise sum over the union of scopes.
    pub fn combine(factors: &[&Factor]) -> Factor {
        let mut vars: Vec<usize> = Vec::new();
        let mut cards: Vec<usize> = Vec::new();
        for f in factors {
            for (&v, &c) in f.vars.iter().zip(&f.cards) {
                if let Err(pos) = vars.binary_search(&v) {
                    vars.insert(pos, v);
                    cards.insert(pos, c);
                }
            }
        }
        let size: usize = cards.iter().product();

        // stride of each union variable inside each input factor (0 if absent)
        let input_strides: Vec<Vec<usize>> = factors
            .iter()
            .map(|f| {
                let own = f.strides();
                vars.iter()
                    .map(|v| f.vars.binary_search(v).map_or(0, |k| own[k]))
                    .collect()
            })
            .collect();

        let mut table = Vec::with_capacity(size);
        let mut asg = vec![0usize; vars.len()];
        let mut idx = vec![0usize; factors.len()];
        for _ in 0..size {
            let mut total = Rank::ZERO;
            for (f, &i) in factors.iter().zip(&idx) {
                total = total + f.table[i];
                if total.is_infinite() {
                    break;
                }
            }
            table.push(total);
            for k in (0..vars.len()).rev() {
                asg[k] += 1;
                if asg[k] < cards[k] {
                    for (j, s) in input_strides.iter().enumerate() {
                        idx[j] += s[k];
                    }
                    break;
                }
                for (j, s) in input_strides.iter().enumerate() {
                    idx[j] -= s[k] * (cards[k] - 1);
                }
                asg[k] = 0;
            }
        }
        Factor { vars, cards, table }
    }

    /// `min_v f`: eliminates `var` by minimization.
    pub fn min_out(&self, var: usize) -> Factor {
        let Ok(pos) = self.vars.binary_search(&var) else {
            return self.clone();
        };
        let card = self.cards[pos];
        let inner: usize = self.cards[pos + 1..].iter().product();
        let outer: usize = self.cards[..pos].iter().product();
        let mut table = Vec::with_capacity(outer * inner);
        for hi in 0..outer {
            for lo in 0..inner {
                let base = hi * card * inner + lo;
                let best = (0..card)
                    .map(|x| self.table[base + x * inner])
                    .min()
                    .unwrap_or(Rank::INFINITY);
                table.push(best);
            }
        }
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        vars.remove(pos);
        cards.remove(pos);
        Factor { vars, cards, table }
    }
}
