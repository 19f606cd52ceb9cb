//! Scaled inside and outside charts.
//!
//! Every cell `(i, j)` stores its per-nonterminal values divided by their
//! maximum, together with the natural log of that factor. Products of cells
//! with different scales are combined relative to the largest scale, so
//! sentences of any length stay inside the floating point range.

use crate::error::{Error, Result};
use crate::grammar::Pcfg;
use crate::scalar::Real;
use crate::treebank::Sentence;

use super::mask::ConstraintMask;

/// One table of per-cell scaled probabilities.
#[derive(Debug, Clone)]
pub struct ScaledChart<T> {
    n: usize,
    nt: usize,
    values: Vec<T>,
    scale: Vec<T>,
}

pub type InsideChart<T> = ScaledChart<T>;
pub type OutsideChart<T> = ScaledChart<T>;

impl<T: Real> ScaledChart<T> {
    fn new(n: usize, nt: usize) -> Self {
        let cells = (n + 1) * (n + 1);
        ScaledChart { n, nt, values: vec![T::zero(); cells * nt], scale: vec![T::neg_infinity(); cells] }
    }

    #[inline]
    fn cell(&self, i: usize, j: usize) -> usize {
        i * (self.n + 1) + j
    }

    pub fn sentence_len(&self) -> usize {
        self.n
    }

    pub fn n_nonterminals(&self) -> usize {
        self.nt
    }

    /// Values of cell `(i, j)` divided by `exp(log_scale(i, j))`.
    #[inline]
    pub fn scaled(&self, i: usize, j: usize) -> &[T] {
        let c = self.cell(i, j);
        &self.values[c * self.nt..(c + 1) * self.nt]
    }

    /// `-inf` for cells that hold no probability mass.
    #[inline]
    pub fn log_scale(&self, i: usize, j: usize) -> T {
        self.scale[self.cell(i, j)]
    }

    pub fn log_prob(&self, x: usize, i: usize, j: usize) -> T {
        let v = self.scaled(i, j)[x];
        if v > T::zero() {
            v.ln() + self.log_scale(i, j)
        } else {
            T::neg_infinity()
        }
    }

    /// Unscaled value; may underflow to zero for long sentences.
    pub fn prob(&self, x: usize, i: usize, j: usize) -> T {
        self.log_prob(x, i, j).exp()
    }

    /// Divides the cell by its maximum and folds the factor into the scale.
    fn renormalize(&mut self, c: usize, base: T) {
        let vals = &mut self.values[c * self.nt..(c + 1) * self.nt];
        let max = vals.iter().copied().fold(T::zero(), T::max);
        if max > T::zero() && max.is_finite() {
            vals.iter_mut().for_each(|v| *v = *v / max);
            self.scale[c] = base + max.ln();
        } else {
            vals.iter_mut().for_each(|v| *v = T::zero());
            self.scale[c] = T::neg_infinity();
        }
    }

    /// Adds `contrib * exp(log_scale)` into cell `c`.
    fn accumulate(&mut self, c: usize, contrib: &[T], log_scale: T) {
        if log_scale == T::neg_infinity() {
            return;
        }
        let cur = self.scale[c];
        let vals = &mut self.values[c * self.nt..(c + 1) * self.nt];
        if cur == T::neg_infinity() {
            vals.copy_from_slice(contrib);
            self.scale[c] = log_scale;
        } else if log_scale > cur {
            let f = (cur - log_scale).exp();
            for (v, &a) in vals.iter_mut().zip(contrib) {
                *v = *v * f + a;
            }
            self.scale[c] = log_scale;
        } else {
            let f = (log_scale - cur).exp();
            for (v, &a) in vals.iter_mut().zip(contrib) {
                *v = *v + a * f;
            }
        }
    }
}

impl<T: Real> InsideChart<T> {
    /// `log α[X0, 0, n]`.
    pub fn log_likelihood(&self) -> T {
        self.log_prob(0, 0, self.n)
    }
}

#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
fn axpy<T: Real>(y: &mut [T], a: T, x: &[T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + a * xi;
    }
}

fn check_lengths(n: usize, mask: &ConstraintMask) -> Result<()> {
    if mask.len() != n {
        return Err(Error::LengthMismatch { left: n, right: mask.len() });
    }
    Ok(())
}

/// Inside pass over tag indices.
pub(crate) fn inside_encoded<T: Real>(g: &Pcfg<T>, tags: &[usize], mask: &ConstraintMask) -> InsideChart<T> {
    let nt = g.n_nonterminals();
    let n = tags.len();
    let mut chart = ScaledChart::new(n, nt);

    for (i, &t) in tags.iter().enumerate() {
        let c = chart.cell(i, i + 1);
        for x in 0..nt {
            chart.values[c * nt + x] = g.lexical(x, t);
        }
        chart.renormalize(c, T::zero());
    }

    let mut pair = vec![T::zero(); nt * nt];
    let mut raw = vec![T::zero(); nt];
    let mut splits: Vec<(usize, T)> = Vec::with_capacity(n);
    for width in 2..=n {
        for i in 0..=n - width {
            let j = i + width;
            if !mask.allowed(i, j) {
                continue;
            }
            splits.clear();
            for k in i + 1..j {
                if mask.allowed(i, k) && mask.allowed(k, j) {
                    let s = chart.log_scale(i, k) + chart.log_scale(k, j);
                    if s > T::neg_infinity() {
                        splits.push((k, s));
                    }
                }
            }
            if splits.is_empty() {
                continue;
            }
            let base = splits.iter().map(|&(_, s)| s).fold(T::neg_infinity(), T::max);
            pair.iter_mut().for_each(|v| *v = T::zero());
            for &(k, s) in &splits {
                let f = (s - base).exp();
                let left = chart.scaled(i, k);
                let right = chart.scaled(k, j);
                for (y, &ly) in left.iter().enumerate() {
                    if ly > T::zero() {
                        axpy(&mut pair[y * nt..(y + 1) * nt], ly * f, right);
                    }
                }
            }
            for (x, r) in raw.iter_mut().enumerate() {
                *r = dot(g.binary_row(x), &pair);
            }
            let c = chart.cell(i, j);
            chart.values[c * nt..(c + 1) * nt].copy_from_slice(&raw);
            chart.renormalize(c, base);
        }
    }
    chart
}

/// Expected-count accumulators before multiplication by the rule
/// probabilities: `binary[X, Y, Z]` collects `Σ β(X,i,j) α(Y,i,k) α(Z,k,j) / P`
/// and `lexical[X, t]` collects `Σ β(X,i,i+1) / P`.
pub(crate) struct CountSink<'a, T> {
    pub binary: &'a mut [T],
    pub lexical: &'a mut [T],
}

/// Outside pass, optionally fused with expected-count accumulation.
pub(crate) fn outside_encoded<T: Real>(
    g: &Pcfg<T>,
    tags: &[usize],
    mask: &ConstraintMask,
    inside: &InsideChart<T>,
    mut sink: Option<CountSink<'_, T>>,
) -> Result<OutsideChart<T>> {
    let log_z = inside.log_likelihood();
    if log_z == T::neg_infinity() {
        return Err(Error::Unparseable);
    }
    let nt = g.n_nonterminals();
    let nn = nt * nt;
    let n = tags.len();
    let n_tags = g.n_tags();
    let mut chart = ScaledChart::new(n, nt);
    let root = chart.cell(0, n);
    chart.values[root * nt] = T::one();
    chart.scale[root] = T::zero();

    let mut parent_rules = vec![T::zero(); nn];
    let mut pair = vec![T::zero(); nn];
    let mut tmp = vec![T::zero(); nt];
    let mut beta = vec![T::zero(); nt];
    let mut splits: Vec<(usize, T, T)> = Vec::with_capacity(n);

    for width in (2..=n).rev() {
        for i in 0..=n - width {
            let j = i + width;
            if !mask.allowed(i, j) {
                continue;
            }
            let c = chart.cell(i, j);
            let acc_scale = chart.scale[c];
            chart.renormalize(c, acc_scale);
            let t_ij = chart.scale[c];
            if t_ij == T::neg_infinity() {
                continue;
            }
            beta.copy_from_slice(chart.scaled(i, j));

            // B[Y,Z] = Σ_X β[X] P(X -> Y Z)
            parent_rules.iter_mut().for_each(|v| *v = T::zero());
            for (x, &b) in beta.iter().enumerate() {
                if b > T::zero() {
                    axpy(&mut parent_rules, b, g.binary_row(x));
                }
            }

            splits.clear();
            for k in i + 1..j {
                if mask.allowed(i, k) && mask.allowed(k, j) {
                    let (sl, sr) = (inside.log_scale(i, k), inside.log_scale(k, j));
                    if sl > T::neg_infinity() && sr > T::neg_infinity() {
                        splits.push((k, sl, sr));
                    }
                }
            }
            let base = splits.iter().map(|&(_, l, r)| l + r).fold(T::neg_infinity(), T::max);
            if sink.is_some() {
                pair.iter_mut().for_each(|v| *v = T::zero());
            }
            for &(k, sl, sr) in &splits {
                let left = inside.scaled(i, k);
                let right = inside.scaled(k, j);

                for (y, out) in tmp.iter_mut().enumerate() {
                    *out = dot(&parent_rules[y * nt..(y + 1) * nt], right);
                }
                let lc = chart.cell(i, k);
                chart.accumulate(lc, &tmp, t_ij + sr);

                tmp.iter_mut().for_each(|v| *v = T::zero());
                for (y, &ly) in left.iter().enumerate() {
                    if ly > T::zero() {
                        axpy(&mut tmp, ly, &parent_rules[y * nt..(y + 1) * nt]);
                    }
                }
                let rc = chart.cell(k, j);
                chart.accumulate(rc, &tmp, t_ij + sl);

                if sink.is_some() {
                    let f = (sl + sr - base).exp();
                    for (y, &ly) in left.iter().enumerate() {
                        if ly > T::zero() {
                            axpy(&mut pair[y * nt..(y + 1) * nt], ly * f, right);
                        }
                    }
                }
            }
            if let Some(sink) = sink.as_mut() {
                let w = (t_ij + base - log_z).exp();
                for (x, &b) in beta.iter().enumerate() {
                    if b > T::zero() {
                        axpy(&mut sink.binary[x * nn..(x + 1) * nn], b * w, &pair);
                    }
                }
            }
        }
    }

    for (i, &t) in tags.iter().enumerate() {
        let c = chart.cell(i, i + 1);
        let acc_scale = chart.scale[c];
        chart.renormalize(c, acc_scale);
        if let Some(sink) = sink.as_mut() {
            let s = chart.scale[c];
            if s > T::neg_infinity() {
                let w = (s - log_z).exp();
                for x in 0..nt {
                    let b = chart.values[c * nt + x];
                    sink.lexical[x * n_tags + t] = sink.lexical[x * n_tags + t] + b * w;
                }
            }
        }
    }
    Ok(chart)
}

/// Inside chart and `log P(sentence)`; the likelihood is `-inf` when the
/// sentence has no derivation under the mask.
pub fn inside<T: Real>(g: &Pcfg<T>, s: &Sentence, mask: &ConstraintMask) -> Result<(InsideChart<T>, T)> {
    let tags = g.encode(s)?;
    check_lengths(tags.len(), mask)?;
    let chart = inside_encoded(g, &tags, mask);
    let ll = chart.log_likelihood();
    Ok((chart, ll))
}

/// Outside chart; `β[X0, 0, n] = 1` and spans outside the mask stay zero.
pub fn outside<T: Real>(
    g: &Pcfg<T>,
    s: &Sentence,
    mask: &ConstraintMask,
    inside: &InsideChart<T>,
) -> Result<OutsideChart<T>> {
    let tags = g.encode(s)?;
    check_lengths(tags.len(), mask)?;
    if inside.sentence_len() != tags.len() {
        return Err(Error::LengthMismatch { left: tags.len(), right: inside.sentence_len() });
    }
    outside_encoded(g, &tags, mask, inside, None)
}
