//! Grid discretization of `S1`.
//!
//! Both integral maps are repeated tail integrals. With `g` the integrand,
//! `G_0 = g` and `G_k(t) = int_t^inf G_{k-1}`, so
//! `int_t^inf (s-t)^{k-1}/(k-1)! g(s) ds = G_k(t)`. Each `G_k` is built
//! backwards from `t_max` with the trapezoid rule. The part beyond `t_max`
//! is evaluated with `x1` frozen at its last grid value, where the tail
//! kernels have closed forms.

use crate::quadrature::{nested_tail_integral, tail_kernel_integral, QuadConfig};
use crate::system::{signed_power, SystemSpec};

use super::FixedPointError;

/// Tail data at `t_max`, reused across iterations.
#[derive(Debug, Clone)]
pub(crate) struct TailData {
    /// `A_k(a2, t_max)` for `k = 1..=n2`.
    pub inner: Vec<f64>,
    /// `int_{t_max}^inf (s-t_max)^{k-1}/(k-1)! a1(s) A_{n2}(a2, s)^lambda1 ds`
    /// for `k = 1..=n1`.
    pub outer: Vec<f64>,
}

impl TailData {
    pub fn new(spec: &SystemSpec, t_max: f64, quad: &QuadConfig) -> Result<Self, FixedPointError> {
        let inner = (1..=spec.n2)
            .map(|k| tail_kernel_integral(&spec.a2, k, t_max, quad))
            .collect::<Result<Vec<_>, _>>()?;
        let outer = (1..=spec.n1)
            .map(|k| {
                nested_tail_integral(&spec.a1, k, &spec.a2, spec.n2, spec.lambda1, t_max, quad)?
                    .converged
                    .map(|(v, _)| v)
                    .ok_or(FixedPointError::DivergentP)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { inner, outer })
    }
}

/// Output of one application of `S1`.
#[derive(Debug, Clone)]
pub struct S1Output {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    /// `x1^(j)` for `j = 0..n1` (the last entry is `f1(t, x2)`).
    pub x1_derivs: Vec<Vec<f64>>,
    /// `x2^(j)` for `j = 0..n2` (the last entry is `f2(t, x1)`).
    pub x2_derivs: Vec<Vec<f64>>,
}

pub(crate) struct S1Operator<'a> {
    pub spec: &'a SystemSpec,
    pub k1: f64,
    pub t: Vec<f64>,
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub tails: TailData,
}

fn sign_power(n: u32) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `G_0 = g`, `G_k(t_i) = G_k(t_{i+1}) + h/2 (G_{k-1}(t_i) + G_{k-1}(t_{i+1}))`.
fn repeated_tail(t: &[f64], g: Vec<f64>, boundary: &[f64]) -> Vec<Vec<f64>> {
    let n = t.len();
    let mut out = vec![g];
    for &b in boundary {
        let prev = out.last().expect("nonempty");
        let mut cur = vec![0.0; n];
        cur[n - 1] = b;
        for i in (0..n - 1).rev() {
            cur[i] = cur[i + 1] + 0.5 * (t[i + 1] - t[i]) * (prev[i] + prev[i + 1]);
        }
        out.push(cur);
    }
    out
}

impl<'a> S1Operator<'a> {
    pub fn new(
        spec: &'a SystemSpec,
        k1: f64,
        t: Vec<f64>,
        quad: &QuadConfig,
    ) -> Result<Self, FixedPointError> {
        let t_max = *t.last().expect("nonempty grid");
        let tails = TailData::new(spec, t_max, quad)?;
        Ok(Self {
            spec,
            k1,
            a1: t.iter().map(|&s| spec.a1.eval(s)).collect(),
            a2: t.iter().map(|&s| spec.a2.eval(s)).collect(),
            t,
            tails,
        })
    }

    pub fn apply(&self, x1: &[f64]) -> S1Output {
        let spec = self.spec;
        let (n1, n2) = (spec.n1, spec.n2);
        let last = x1[x1.len() - 1];
        let sigma = signed_power(last, spec.lambda2);

        let g2: Vec<f64> = x1
            .iter()
            .zip(&self.a2)
            .map(|(&x, &a)| -a * signed_power(x, spec.lambda2))
            .collect();
        let b2: Vec<f64> = self.tails.inner.iter().map(|&a| -sigma * a).collect();
        let big2 = repeated_tail(&self.t, g2, &b2);
        // x2^(j) = (-1)^(n2 + j) G_{n2 - j}
        let x2_derivs: Vec<Vec<f64>> = (0..=n2)
            .map(|j| {
                let s = sign_power(n2 + j);
                big2[(n2 - j) as usize].iter().map(|v| s * v).collect()
            })
            .collect();
        let x2 = x2_derivs[0].clone();

        let g1: Vec<f64> = x2
            .iter()
            .zip(&self.a1)
            .map(|(&x, &a)| a * signed_power(x, spec.lambda1))
            .collect();
        // beyond t_max: x2 = (-1)^(n2+1) sigma A_{n2}(a2, s)
        let x2_tail_sign = (sign_power(n2 + 1) * sigma).signum();
        let scale = x2_tail_sign * sigma.abs().powf(spec.lambda1);
        let b1: Vec<f64> = self.tails.outer.iter().map(|&v| scale * v).collect();
        let big1 = repeated_tail(&self.t, g1, &b1);
        let mut x1_derivs: Vec<Vec<f64>> = (0..=n1)
            .map(|j| {
                let s = sign_power(n1 + j);
                big1[(n1 - j) as usize].iter().map(|v| s * v).collect()
            })
            .collect();
        for v in x1_derivs[0].iter_mut() {
            *v += self.k1;
        }
        S1Output {
            x1: x1_derivs[0].clone(),
            x2,
            x1_derivs,
            x2_derivs,
        }
    }
}
