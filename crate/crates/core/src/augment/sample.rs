use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::{Error, Result};

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("concentration must be positive, got {alpha}")))
    }
}

fn gamma(alpha: f64) -> Result<Gamma<f64>> {
    check_alpha(alpha)?;
    Gamma::new(alpha, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))
}

/// λ ~ Beta(α, α) as g₁/(g₁+g₂) with g ~ Gamma(α, 1).
pub fn sample_beta<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<f64> {
    let g = gamma(alpha)?;
    loop {
        let a = g.sample(rng);
        let b = g.sample(rng);
        if a + b > 0.0 {
            return Ok(a / (a + b));
        }
    }
}

/// (λ₁, λ₂, λ₃) ~ Dir(α, α, α).
pub fn sample_dirichlet3<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<[f64; 3]> {
    let g = gamma(alpha)?;
    loop {
        let d = [g.sample(rng), g.sample(rng), g.sample(rng)];
        let s: f64 = d.iter().sum();
        if s > 0.0 {
            return Ok(d.map(|v| v / s));
        }
    }
}
