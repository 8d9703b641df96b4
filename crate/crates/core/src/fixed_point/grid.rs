use serde::{Deserialize, Serialize};

/// Spacing of the grid on `[T, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum GridSpacing {
    Uniform,
    /// Steps grow by a constant factor `s` with `s^m = stretch` over `m`
    /// intervals, so grids with the same stretch and twice the intervals nest.
    Geometric {
        stretch: f64,
    },
}

impl GridSpacing {
    pub fn is_valid(&self) -> bool {
        match *self {
            GridSpacing::Uniform => true,
            GridSpacing::Geometric { stretch } => stretch >= 1.0 && stretch.is_finite(),
        }
    }

    /// `points` nodes from `a` to `b` inclusive.
    pub fn nodes(&self, a: f64, b: f64, points: usize) -> Vec<f64> {
        let m = points - 1;
        let len = b - a;
        let mut t: Vec<f64> = match *self {
            GridSpacing::Geometric { stretch } if stretch > 1.0 => {
                let s = stretch.powf(1.0 / m as f64);
                let total = (s.powi(m as i32) - 1.0) / (s - 1.0);
                (0..=m)
                    .map(|i| a + len * ((s.powi(i as i32) - 1.0) / (s - 1.0)) / total)
                    .collect()
            }
            _ => (0..=m).map(|i| a + len * i as f64 / m as f64).collect(),
        };
        t[m] = b;
        t
    }
}

/// Nonuniform three-point second derivative at interior nodes
/// (`out[i]` for `i` in `1..n-1`; the ends are left as `NaN`).
pub fn second_derivative(t: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = vec![f64::NAN; f.len()];
    for i in 1..f.len().saturating_sub(1) {
        let hm = t[i] - t[i - 1];
        let hp = t[i + 1] - t[i];
        out[i] = 2.0 * ((f[i + 1] - f[i]) / hp - (f[i] - f[i - 1]) / hm) / (hp + hm);
    }
    out
}

/// Nonuniform central first derivative at interior nodes.
pub fn first_derivative(t: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = vec![f64::NAN; f.len()];
    for i in 1..f.len().saturating_sub(1) {
        let hm = t[i] - t[i - 1];
        let hp = t[i + 1] - t[i];
        out[i] =
            (hm * hm * (f[i + 1] - f[i]) + hp * hp * (f[i] - f[i - 1])) / (hm * hp * (hm + hp));
    }
    out
}

/// `D^n f` from repeated second (and at most one first) differences.
/// Entries without a full stencil are `NaN`.
pub fn derivative(t: &[f64], f: &[f64], n: u32) -> Vec<f64> {
    let mut cur = f.to_vec();
    for _ in 0..n / 2 {
        cur = second_derivative(t, &cur);
    }
    if n % 2 == 1 {
        cur = first_derivative(t, &cur);
    }
    cur
}

/// Number of strict sign changes; zeros are skipped.
pub fn sign_changes(f: &[f64]) -> usize {
    let mut last = 0.0_f64;
    let mut count = 0;
    for &v in f {
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && v.signum() != last.signum() {
            count += 1;
        }
        last = v;
    }
    count
}
