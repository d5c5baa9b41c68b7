//! Reverse-mode differentiation over a dynamically recorded tape.
//!
//! Every operation appends one node holding its primal value and the local
//! partial derivatives with respect to its parents. The reverse sweep walks
//! the nodes backwards once, accumulating adjoints.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::real::{digamma_f64, ln_gamma_f64, log_sum_exp_f64, Real};

#[derive(Default)]
struct TapeData {
    values: Vec<f64>,
    /// Node `i` owns edges `edge_end[i - 1]..edge_end[i]`.
    edge_end: Vec<u32>,
    parents: Vec<u32>,
    partials: Vec<f64>,
}

impl TapeData {
    fn clear(&mut self) {
        self.values.clear();
        self.edge_end.clear();
        self.parents.clear();
        self.partials.clear();
    }

    #[inline]
    fn push(&mut self, value: f64, edges: impl IntoIterator<Item = (u32, f64)>) -> u32 {
        for (p, d) in edges {
            self.parents.push(p);
            self.partials.push(d);
        }
        let idx = self.values.len() as u32;
        self.values.push(value);
        self.edge_end.push(self.parents.len() as u32);
        idx
    }
}

/// A recording of one scalar computation.
pub struct Tape {
    data: RefCell<TapeData>,
}

thread_local! {
    static SPARE: RefCell<Option<TapeData>> = const { RefCell::new(None) };
}

impl Tape {
    pub fn new() -> Self {
        let data = SPARE.with(|s| s.borrow_mut().take()).unwrap_or_default();
        let tape = Tape { data: RefCell::new(data) };
        tape.data.borrow_mut().clear();
        tape
    }

    /// Registers an independent variable.
    pub fn var(&self, value: f64) -> Var<'_> {
        let idx = self.data.borrow_mut().push(value, std::iter::empty());
        Var { tape: self, idx, val: value }
    }

    pub fn len(&self) -> usize {
        self.data.borrow().values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    fn node(&self, value: f64, edges: impl IntoIterator<Item = (u32, f64)>) -> Var<'_> {
        let idx = self.data.borrow_mut().push(value, edges);
        Var { tape: self, idx, val: value }
    }

    /// Adjoints of every node with respect to `output`.
    pub fn adjoints(&self, output: Var<'_>) -> Vec<f64> {
        let data = self.data.borrow();
        let n = output.idx as usize + 1;
        let mut adj = vec![0.0; n];
        adj[n - 1] = 1.0;
        for i in (0..n).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let start = if i == 0 { 0 } else { data.edge_end[i - 1] as usize };
            let end = data.edge_end[i] as usize;
            for e in start..end {
                adj[data.parents[e] as usize] += a * data.partials[e];
            }
        }
        adj
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Drop for Tape {
    fn drop(&mut self) {
        let data = std::mem::take(self.data.get_mut());
        SPARE.with(|s| *s.borrow_mut() = Some(data));
    }
}

/// A scalar recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: u32,
    val: f64,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var({}, #{})", self.val, self.idx)
    }
}

impl<'t> Var<'t> {
    pub fn index(&self) -> usize {
        self.idx as usize
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    #[inline]
    fn add(self, rhs: Var<'t>) -> Var<'t> {
        self.tape.node(self.val + rhs.val, [(self.idx, 1.0), (rhs.idx, 1.0)])
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    #[inline]
    fn sub(self, rhs: Var<'t>) -> Var<'t> {
        self.tape.node(self.val - rhs.val, [(self.idx, 1.0), (rhs.idx, -1.0)])
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    #[inline]
    fn mul(self, rhs: Var<'t>) -> Var<'t> {
        self.tape.node(self.val * rhs.val, [(self.idx, rhs.val), (rhs.idx, self.val)])
    }
}

impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    #[inline]
    fn div(self, rhs: Var<'t>) -> Var<'t> {
        let q = self.val / rhs.val;
        self.tape.node(q, [(self.idx, 1.0 / rhs.val), (rhs.idx, -q / rhs.val)])
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    #[inline]
    fn neg(self) -> Var<'t> {
        self.tape.node(-self.val, [(self.idx, -1.0)])
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    #[inline]
    fn add(self, rhs: f64) -> Var<'t> {
        self.tape.node(self.val + rhs, [(self.idx, 1.0)])
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    #[inline]
    fn sub(self, rhs: f64) -> Var<'t> {
        self.tape.node(self.val - rhs, [(self.idx, 1.0)])
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    #[inline]
    fn mul(self, rhs: f64) -> Var<'t> {
        self.tape.node(self.val * rhs, [(self.idx, rhs)])
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Var<'t>;
    #[inline]
    fn div(self, rhs: f64) -> Var<'t> {
        self.tape.node(self.val / rhs, [(self.idx, 1.0 / rhs)])
    }
}

impl<'t> Real for Var<'t> {
    const DIFFERENTIABLE: bool = true;

    #[inline]
    fn value(self) -> f64 {
        self.val
    }

    fn lift(self, c: f64) -> Var<'t> {
        self.tape.node(c, std::iter::empty())
    }

    fn exp(self) -> Var<'t> {
        let e = self.val.exp();
        self.tape.node(e, [(self.idx, e)])
    }

    fn ln(self) -> Var<'t> {
        self.tape.node(self.val.ln(), [(self.idx, 1.0 / self.val)])
    }

    fn sqrt(self) -> Var<'t> {
        let s = self.val.sqrt();
        self.tape.node(s, [(self.idx, 0.5 / s)])
    }

    fn ln_gamma(self) -> Var<'t> {
        self.tape.node(ln_gamma_f64(self.val), [(self.idx, digamma_f64(self.val))])
    }

    fn square(self) -> Var<'t> {
        self.tape.node(self.val * self.val, [(self.idx, 2.0 * self.val)])
    }

    fn sum(xs: &[Var<'t>]) -> Var<'t> {
        let tape = xs[0].tape;
        let v = xs.iter().map(|x| x.val).sum();
        tape.node(v, xs.iter().map(|x| (x.idx, 1.0)))
    }

    fn weighted_sum(xs: &[Var<'t>], weights: &[f64]) -> Var<'t> {
        let tape = xs[0].tape;
        let v = xs.iter().zip(weights).map(|(x, w)| x.val * w).sum();
        tape.node(v, xs.iter().zip(weights).map(|(x, &w)| (x.idx, w)))
    }

    fn linear_combination(xs: &[Var<'t>], coefficients: &[f64], offset: f64) -> Var<'t> {
        let tape = xs[0].tape;
        let v = xs.iter().zip(coefficients).map(|(x, c)| x.val * c).sum::<f64>() + offset;
        tape.node(v, xs.iter().zip(coefficients).map(|(x, &c)| (x.idx, c)))
    }

    fn dot(xs: &[Var<'t>], ys: &[Var<'t>]) -> Var<'t> {
        let tape = xs[0].tape;
        let v = xs.iter().zip(ys).map(|(x, y)| x.val * y.val).sum();
        tape.node(
            v,
            xs.iter()
                .zip(ys)
                .flat_map(|(x, y)| [(x.idx, y.val), (y.idx, x.val)]),
        )
    }

    fn log_sum_exp(xs: &[Var<'t>]) -> Var<'t> {
        let tape = xs[0].tape;
        let vals: Vec<f64> = xs.iter().map(|x| x.val).collect();
        let lse = log_sum_exp_f64(&vals);
        tape.node(lse, xs.iter().map(|x| (x.idx, (x.val - lse).exp())))
    }

    fn sum_of_squares(xs: &[Var<'t>]) -> Var<'t> {
        let tape = xs[0].tape;
        let v = xs.iter().map(|x| x.val * x.val).sum();
        tape.node(v, xs.iter().map(|x| (x.idx, 2.0 * x.val)))
    }

    fn custom(inputs: &[Var<'t>], value: f64, partials: &[f64]) -> Var<'t> {
        debug_assert_eq!(inputs.len(), partials.len());
        inputs[0].tape.node(value, inputs.iter().zip(partials).map(|(x, &d)| (x.idx, d)))
    }
}
