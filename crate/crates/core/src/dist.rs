//! Reference distributions used for p-values and critical values.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    std_normal().cdf(z)
}

/// Standard normal upper tail, `1 - Φ(z)`, accurate far into the tail.
pub fn normal_sf(z: f64) -> f64 {
    std_normal().sf(z)
}

/// Standard normal quantile, `Φ⁻¹(p)` for `p` in (0, 1).
pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// Upper tail of Student-t with `df` degrees of freedom.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df).expect("df > 0").sf(t)
}

/// Upper tail of χ²(df).
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df).expect("df > 0").sf(x)
}

/// Critical value `c` with `P(χ²(df) > c) = level`.
pub fn chi2_critical(level: f64, df: f64) -> f64 {
    ChiSquared::new(df)
        .expect("df > 0")
        .inverse_cdf(1.0 - level)
}

/// Two-sided and one-sided p-values for a test statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValues {
    pub two_sided: f64,
    /// Against the alternative of a positive effect.
    pub positive: f64,
    /// Against the alternative of a negative effect.
    pub negative: f64,
}

impl PValues {
    fn from_upper_tail(stat: f64, sf: impl Fn(f64) -> f64) -> Self {
        if stat.is_nan() {
            return Self {
                two_sided: f64::NAN,
                positive: f64::NAN,
                negative: f64::NAN,
            };
        }
        let positive = sf(stat);
        let negative = sf(-stat);
        let two_sided = (2.0 * sf(stat.abs())).min(1.0);
        Self {
            two_sided,
            positive,
            negative,
        }
    }

    pub fn normal(z: f64) -> Self {
        Self::from_upper_tail(z, normal_sf)
    }

    pub fn student_t(t: f64, df: f64) -> Self {
        Self::from_upper_tail(t, |x| student_t_sf(x, df))
    }

    pub fn get(&self, alternative: Alternative) -> f64 {
        match alternative {
            Alternative::TwoSided => self.two_sided,
            Alternative::Positive => self.positive,
            Alternative::Negative => self.negative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    #[default]
    TwoSided,
    Positive,
    Negative,
}
