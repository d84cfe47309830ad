/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

pub fn mean_se(xs: &[f64]) -> MeanSe {
    let n = xs.len();
    if n == 0 {
        return MeanSe {
            mean: f64::NAN,
            se: f64::NAN,
            n,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let se = if n > 1 {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    MeanSe { mean, se, n }
}

/// Least-squares slope of `y` on `x` with its standard error propagated from
/// independent per-point standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeTest {
    pub slope: f64,
    pub se: f64,
}

/// One-sided 5% critical value of the standard normal.
pub const Z_95: f64 = 1.645;

impl SlopeTest {
    pub fn fit(x: &[f64], y: &[f64], se: &[f64]) -> Self {
        let n = x.len() as f64;
        let xbar = x.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|xi| (xi - xbar).powi(2)).sum();
        let slope = x.iter().zip(y).map(|(xi, yi)| (xi - xbar) * yi).sum::<f64>() / sxx;
        let var: f64 = x
            .iter()
            .zip(se)
            .map(|(xi, s)| (xi - xbar).powi(2) * s * s)
            .sum::<f64>()
            / (sxx * sxx);
        Self {
            slope,
            se: var.sqrt(),
        }
    }

    /// False only when the slope is significantly negative.
    pub fn nondecreasing(&self) -> bool {
        self.slope >= -Z_95 * self.se
    }
}
