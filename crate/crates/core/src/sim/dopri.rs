//! Dormand-Prince 5(4) stepper with Hairer's continuous extension.

// Butcher tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order solution minus embedded fourth-order solution
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

pub trait Rhs {
    fn eval(&self, t: f64, u: &[f64], du: &mut [f64]);
}

/// Continuous extension over one accepted step `[t, t + h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSegment {
    pub t: f64,
    pub h: f64,
    /// Five coefficient vectors laid out back to back.
    coeffs: Vec<f64>,
}

impl DenseSegment {
    pub fn t_end(&self) -> f64 {
        self.t + self.h
    }

    pub fn dimension(&self) -> usize {
        self.coeffs.len() / 5
    }

    /// Component `i` at `theta = (s - t) / h` in `[0, 1]`.
    pub fn component_at_theta(&self, i: usize, theta: f64) -> f64 {
        let d = self.dimension();
        let c = |k: usize| self.coeffs[k * d + i];
        let theta1 = 1.0 - theta;
        c(0) + theta * (c(1) + theta1 * (c(2) + theta * (c(3) + theta1 * c(4))))
    }

    pub fn component(&self, i: usize, s: f64) -> f64 {
        self.component_at_theta(i, (s - self.t) / self.h)
    }

    pub fn state(&self, s: f64) -> Vec<f64> {
        (0..self.dimension())
            .map(|i| self.component(i, s))
            .collect()
    }
}

/// Scratch space for one step.
pub struct Stepper {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    pub y_new: Vec<f64>,
    pub err: Vec<f64>,
}

impl Stepper {
    pub fn new(dim: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
            y_new: vec![0.0; dim],
            err: vec![0.0; dim],
        }
    }

    /// Stage derivative at the start of the next step (first-same-as-last).
    pub fn set_first_stage(&mut self, k1: &[f64]) {
        self.k[0].copy_from_slice(k1);
    }

    pub fn last_stage(&self) -> &[f64] {
        &self.k[6]
    }

    /// Attempts `y -> y_new` over `h`; `k[0]` must hold `f(t, y)`.
    /// Returns the error norm scaled by `atol + rtol * max(|y|, |y_new|)`.
    pub fn attempt<R: Rhs>(
        &mut self,
        rhs: &R,
        t: f64,
        y: &[f64],
        h: f64,
        rtol: f64,
        atol: f64,
    ) -> f64 {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;

        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        rhs.eval(t + C2 * h, tmp, k2);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs.eval(t + C3 * h, tmp, k3);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs.eval(t + C4 * h, tmp, k4);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs.eval(t + C5 * h, tmp, k5);
        for i in 0..n {
            tmp[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs.eval(t + h, tmp, k6);
        for i in 0..n {
            self.y_new[i] =
                y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        rhs.eval(t + h, &self.y_new, k7);

        let mut norm = 0.0_f64;
        for i in 0..n {
            let e =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            self.err[i] = e;
            let scale = atol + rtol * y[i].abs().max(self.y_new[i].abs());
            norm = norm.max(e.abs() / scale);
        }
        if norm.is_nan() {
            f64::INFINITY
        } else {
            norm
        }
    }

    /// Continuous extension of the step just accepted.
    pub fn dense(&self, t: f64, y: &[f64], h: f64) -> DenseSegment {
        let n = y.len();
        let mut coeffs = vec![0.0; 5 * n];
        let [k1, _, k3, k4, k5, k6, k7] = &self.k;
        for i in 0..n {
            let ydiff = self.y_new[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            coeffs[i] = y[i];
            coeffs[n + i] = ydiff;
            coeffs[2 * n + i] = bspl;
            coeffs[3 * n + i] = ydiff - h * k7[i] - bspl;
            coeffs[4 * n + i] =
                h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        DenseSegment { t, h, coeffs }
    }
}

/// Starting step size after Hairer and Wanner.
pub fn initial_step<R: Rhs>(rhs: &R, t: f64, y: &[f64], f0: &[f64], rtol: f64, atol: f64) -> f64 {
    let n = y.len();
    let scale: Vec<f64> = y.iter().map(|v| atol + rtol * v.abs()).collect();
    let rms = |v: &[f64]| {
        (v.iter()
            .zip(&scale)
            .map(|(a, s)| (a / s).powi(2))
            .sum::<f64>()
            / n as f64)
            .sqrt()
    };
    let d0 = rms(y);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; n];
    rhs.eval(t + h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}
