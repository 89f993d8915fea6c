//! Small statistical toolkit: running moments, batch means, χ² and
//! Kolmogorov–Smirnov tests, weighted least squares and compound-Poisson laws.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

/// Welford accumulator. `merge` is associative, so replicas can be combined in any grouping.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MeanVar {
    n: u64,
    mean: f64,
    m2: f64,
}

impl MeanVar {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &MeanVar) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * self.n as f64 * o.n as f64 / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn var(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn se(&self) -> f64 {
        if self.n == 0 {
            f64::INFINITY
        } else {
            (self.var() / self.n as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for MeanVar {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = MeanVar::new();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// Estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn new(value: f64, se: f64) -> Self {
        Self { value, se }
    }
}

/// Mean of an autocorrelated trace with a batch-means standard error.
///
/// Falls back to the naive SE when the trace is too short for `batches`.
pub fn batch_means(trace: &[f64], batches: usize) -> Estimate {
    let mv: MeanVar = trace.iter().copied().collect();
    let b = batches.max(2);
    let size = trace.len() / b;
    if size < 2 {
        return Estimate::new(mv.mean(), mv.se());
    }
    let means: MeanVar = (0..b).map(|k| trace[k * size..(k + 1) * size].iter().sum::<f64>() / size as f64).collect();
    let se = means.se().max(mv.se());
    Estimate::new(mv.mean(), se)
}

/// Integrated autocorrelation factor `τ ≥ 1` estimated by batch means.
pub fn autocorrelation_factor(trace: &[f64], batches: usize) -> f64 {
    let mv: MeanVar = trace.iter().copied().collect();
    let naive = mv.se();
    if naive == 0.0 || !naive.is_finite() {
        return 1.0;
    }
    let bm = batch_means(trace, batches).se;
    (bm / naive).powi(2).max(1.0)
}

/// Upper tail of the χ² distribution.
pub fn chi2_sf(stat: f64, dof: f64) -> f64 {
    if dof <= 0.0 {
        return 1.0;
    }
    1.0 - ChiSquared::new(dof).expect("positive dof").cdf(stat)
}

/// Outcome of a goodness-of-fit or homogeneity test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub dof: f64,
    pub p_value: f64,
}

impl TestResult {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value >= alpha
    }
}

/// Merge adjacent bins from the right until every expected count reaches `min_expected`.
fn pool(expected: &[f64], observed: &[f64], min_expected: f64) -> (Vec<f64>, Vec<f64>) {
    let mut e_out = Vec::new();
    let mut o_out = Vec::new();
    let (mut e_acc, mut o_acc) = (0.0, 0.0);
    for (e, o) in expected.iter().zip(observed) {
        e_acc += e;
        o_acc += o;
        if e_acc >= min_expected {
            e_out.push(e_acc);
            o_out.push(o_acc);
            e_acc = 0.0;
            o_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        if let (Some(e), Some(o)) = (e_out.last_mut(), o_out.last_mut()) {
            *e += e_acc;
            *o += o_acc;
        } else {
            e_out.push(e_acc);
            o_out.push(o_acc);
        }
    }
    (e_out, o_out)
}

/// Pearson χ² goodness of fit of `counts` against `probs`.
///
/// `probs` may sum to less than one; the remainder becomes an overflow bin.
/// `inflation` divides the statistic to account for autocorrelated samples.
pub fn chi2_gof(counts: &[u64], probs: &[f64], inflation: f64) -> TestResult {
    let total: f64 = counts.iter().map(|&c| c as f64).sum();
    let mut p = probs.to_vec();
    let mut c: Vec<f64> = counts.iter().map(|&x| x as f64).collect();
    let len = p.len().max(c.len());
    p.resize(len, 0.0);
    c.resize(len, 0.0);
    let rest = (1.0 - p.iter().sum::<f64>()).max(0.0);
    p.push(rest);
    c.push(0.0);
    let expected: Vec<f64> = p.iter().map(|q| q * total).collect();
    let (e, o) = pool(&expected, &c, 5.0);
    let stat: f64 = e.iter().zip(&o).filter(|(e, _)| **e > 0.0).map(|(e, o)| (o - e) * (o - e) / e).sum::<f64>() / inflation.max(1.0);
    let dof = (e.len() as f64 - 1.0).max(0.0);
    TestResult { statistic: stat, dof, p_value: chi2_sf(stat, dof) }
}

/// χ² test that two histograms come from one law.
pub fn chi2_homogeneity(a: &[u64], b: &[u64], inflation: f64) -> TestResult {
    let len = a.len().max(b.len());
    let get = |v: &[u64], k: usize| v.get(k).copied().unwrap_or(0) as f64;
    let na: f64 = a.iter().map(|&x| x as f64).sum();
    let nb: f64 = b.iter().map(|&x| x as f64).sum();
    let n = na + nb;
    // Pool on the smaller expected count.
    let pooled: Vec<f64> = (0..len).map(|k| (get(a, k) + get(b, k)) * na.min(nb) / n).collect();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut ca, mut cb, mut e) = (0.0, 0.0, 0.0);
    for k in 0..len {
        ca += get(a, k);
        cb += get(b, k);
        e += pooled[k];
        if e >= 5.0 {
            bins.push((ca, cb));
            ca = 0.0;
            cb = 0.0;
            e = 0.0;
        }
    }
    if ca + cb > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += ca;
                last.1 += cb;
            }
            None => bins.push((ca, cb)),
        }
    }
    let mut stat = 0.0;
    for (xa, xb) in &bins {
        let tot = xa + xb;
        if tot == 0.0 {
            continue;
        }
        let ea = tot * na / n;
        let eb = tot * nb / n;
        stat += (xa - ea).powi(2) / ea + (xb - eb).powi(2) / eb;
    }
    stat /= inflation.max(1.0);
    let dof = (bins.len() as f64 - 1.0).max(0.0);
    TestResult { statistic: stat, dof, p_value: chi2_sf(stat, dof) }
}

/// Kolmogorov distribution tail `Q(λ) = 2 Σ (-1)^{k-1} e^{-2k²λ²}`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
/// Ties are handled by stepping over equal values together, which makes the
/// test conservative for laws with atoms.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    ks_two_sample_inflated(a, b, 1.0)
}

/// KS test with the effective sample sizes divided by `inflation`.
pub fn ks_two_sample_inflated(a: &[f64], b: &[f64], inflation: f64) -> TestResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    if n == 0 || m == 0 {
        return TestResult { statistic: 0.0, dof: 0.0, p_value: 1.0 };
    }
    let (mut i, mut k) = (0, 0);
    let mut dmax: f64 = 0.0;
    while i < n && k < m {
        let v = if x[i] <= y[k] { x[i] } else { y[k] };
        while i < n && x[i] == v {
            i += 1;
        }
        while k < m && y[k] == v {
            k += 1;
        }
        dmax = dmax.max((i as f64 / n as f64 - k as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64 / inflation.max(1.0);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * dmax;
    TestResult { statistic: dmax, dof: 0.0, p_value: kolmogorov_q(lambda) }
}

/// Two-sided z-test that two estimates share a mean.
pub fn welch(a: Estimate, b: Estimate) -> TestResult {
    let se = (a.se * a.se + b.se * b.se).sqrt();
    let z = if se > 0.0 { (a.value - b.value) / se } else if a.value == b.value { 0.0 } else { f64::INFINITY };
    let p = if z.is_finite() { 2.0 * (1.0 - Normal::new(0.0, 1.0).expect("unit normal").cdf(z.abs())) } else { 0.0 };
    TestResult { statistic: z, dof: 0.0, p_value: p }
}

/// Weighted least-squares line `y = intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    /// Residual degrees of freedom.
    pub dof: usize,
}

impl LinearFit {
    /// Two-sided confidence interval for the slope.
    pub fn slope_ci(&self, level: f64) -> (f64, f64) {
        let q = if self.dof > 0 {
            StudentsT::new(0.0, 1.0, self.dof as f64).expect("dof positive").inverse_cdf(0.5 + level / 2.0)
        } else {
            f64::INFINITY
        };
        (self.slope - q * self.slope_se, self.slope + q * self.slope_se)
    }
}

/// Fit with per-point standard errors `sy` (weights `1/sy²`). The slope SE
/// uses the known point errors, scaled up by the residual variance when the
/// scatter exceeds them.
pub fn linear_fit(x: &[f64], y: &[f64], sy: &[f64]) -> LinearFit {
    let w: Vec<f64> = sy.iter().map(|s| if *s > 0.0 { 1.0 / (s * s) } else { 1e12 }).collect();
    let sw: f64 = w.iter().sum();
    let sx: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum();
    let syy: f64 = w.iter().zip(y).map(|(w, y)| w * y).sum();
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * x * x).sum();
    let sxy: f64 = w.iter().zip(x.iter().zip(y)).map(|(w, (x, y))| w * x * y).sum();
    let det = sw * sxx - sx * sx;
    let slope = (sw * sxy - sx * syy) / det;
    let intercept = (sxx * syy - sx * sxy) / det;
    let dof = x.len().saturating_sub(2);
    let chi2: f64 = w.iter().zip(x.iter().zip(y)).map(|(w, (x, y))| w * (y - intercept - slope * x).powi(2)).sum();
    let scale = if dof > 0 { (chi2 / dof as f64).max(1.0) } else { 1.0 };
    LinearFit { slope, intercept, slope_se: (scale * sw / det).sqrt(), intercept_se: (scale * sxx / det).sqrt(), dof }
}

/// Law of `N = Σ_{i≤K} J_i` with `K ~ Poisson(λ)` and `P(J = k) = f[k-1]`,
/// by Panjer's recursion, for `N = 0..=n_max`.
pub fn compound_poisson_pmf(lambda: f64, f: &[f64], n_max: usize) -> Vec<f64> {
    let mut p = vec![0.0; n_max + 1];
    p[0] = (-lambda).exp();
    for n in 1..=n_max {
        let mut s = 0.0;
        for k in 1..=n.min(f.len()) {
            s += k as f64 * f[k - 1] * p[n - k];
        }
        p[n] = lambda * s / n as f64;
    }
    p
}

/// Histogram of nonnegative integer samples.
pub fn histogram(values: impl IntoIterator<Item = usize>) -> Vec<u64> {
    let mut h: Vec<u64> = Vec::new();
    for v in values {
        if v >= h.len() {
            h.resize(v + 1, 0);
        }
        h[v] += 1;
    }
    h
}
