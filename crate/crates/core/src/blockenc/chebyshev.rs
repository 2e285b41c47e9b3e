//! Chebyshev interpolants on an interval and a-posteriori sup-norm error estimates.

/// Polynomial in the Chebyshev basis on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chebyshev {
    lo: f64,
    hi: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Interpolates `f` at the `degree + 1` Chebyshev points of the first kind.
    pub fn interpolate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, degree: usize) -> Self {
        let n = degree + 1;
        let samples: Vec<f64> = (0..n)
            .map(|k| {
                let t = (std::f64::consts::PI * (k as f64 + 0.5) / n as f64).cos();
                f(to_interval(t, lo, hi))
            })
            .collect();
        let coeffs = (0..n)
            .map(|j| {
                let s: f64 = samples
                    .iter()
                    .enumerate()
                    .map(|(k, fk)| fk * (std::f64::consts::PI * j as f64 * (k as f64 + 0.5) / n as f64).cos())
                    .sum();
                let c = 2.0 * s / n as f64;
                if j == 0 {
                    c / 2.0
                } else {
                    c
                }
            })
            .collect();
        Self { lo, hi, coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Clenshaw recurrence.
    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs[0]
    }
}

fn to_interval(t: f64, lo: f64, hi: f64) -> f64 {
    0.5 * (hi + lo) + 0.5 * (hi - lo) * t
}

/// `ceil(sqrt(kappa) * ln(1 / eps_target))`, at least 1.
pub fn default_degree(kappa: f64, eps_target: f64) -> usize {
    let d = (kappa.max(1.0).sqrt() * (1.0 / eps_target).ln()).ceil();
    (d as usize).max(1)
}

/// Upper estimate of `max |f - approx|` on the approximation interval.
///
/// Samples densely (Chebyshev-clustered and uniform points), refines the
/// largest local maxima by golden-section search, then pads by 1% plus a
/// floating-point floor.
pub fn sup_error(f: impl Fn(f64) -> f64, approx: &Chebyshev) -> f64 {
    let (lo, hi) = approx.interval();
    let err = |x: f64| (f(x) - approx.eval(x)).abs();
    let n = (40 * (approx.degree() + 1)).max(4000);
    let mut xs: Vec<f64> = (0..n)
        .map(|k| to_interval(-(std::f64::consts::PI * k as f64 / (n - 1) as f64).cos(), lo, hi))
        .chain((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64))
        .collect();
    xs.sort_by(f64::total_cmp);
    let es: Vec<f64> = xs.iter().map(|&x| err(x)).collect();
    let mut best = es.iter().cloned().fold(0.0, f64::max);
    let mut fmax: f64 = xs.iter().map(|&x| f(x).abs()).fold(0.0, f64::max);

    let mut peaks: Vec<usize> = (1..xs.len() - 1).filter(|&k| es[k] >= es[k - 1] && es[k] >= es[k + 1]).collect();
    peaks.sort_by(|&a, &b| es[b].total_cmp(&es[a]));
    for &k in peaks.iter().take(16) {
        let (mut a, mut b) = (xs[k - 1], xs[k + 1]);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if err(c) > err(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let x = 0.5 * (a + b);
        best = best.max(err(x));
        fmax = fmax.max(f(x).abs());
    }
    best * 1.01 + 64.0 * f64::EPSILON * fmax.max(1.0)
}
