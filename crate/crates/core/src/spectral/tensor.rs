use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::NoiseSpectrum;
use crate::error::{Error, Result};

/// Galerkin coefficients `B[k,l,m] = <B(e_k, e_l), e_m>` of a symmetric bilinear map.
///
/// Entries are stored once per unordered pair `{k, l}` under the key `(min, max, m)`,
/// so symmetry in the first two indices holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionTensor {
    entries: BTreeMap<(usize, usize, usize), f64>,
    basis_scale: Vec<f64>,
}

impl InteractionTensor {
    /// Empty tensor over `basis_scale.len()` modes.
    pub fn new(basis_scale: Vec<f64>) -> Self {
        Self {
            entries: BTreeMap::new(),
            basis_scale,
        }
    }

    fn key(k: usize, l: usize, m: usize) -> (usize, usize, usize) {
        if k <= l {
            (k, l, m)
        } else {
            (l, k, m)
        }
    }

    /// Stores `B[k,l,m] = B[l,k,m] = value`. Zero values are not stored.
    ///
    /// Inserting a different value for an already stored pair is an error.
    pub fn insert(&mut self, k: usize, l: usize, m: usize, value: f64) -> Result<()> {
        if k == 0 || l == 0 || m == 0 {
            return Err(Error::Invalid("tensor indices are 1-based".into()));
        }
        if !value.is_finite() {
            return Err(Error::Invalid(format!("tensor entry ({k},{l},{m}) is not finite")));
        }
        let key = Self::key(k, l, m);
        if let Some(&old) = self.entries.get(&key) {
            if old != value {
                return Err(Error::Invalid(format!(
                    "conflicting values {old} and {value} for tensor entry ({k},{l},{m})"
                )));
            }
            return Ok(());
        }
        if value != 0.0 {
            self.entries.insert(key, value);
        }
        Ok(())
    }

    pub fn get(&self, k: usize, l: usize, m: usize) -> f64 {
        self.entries.get(&Self::key(k, l, m)).copied().unwrap_or(0.0)
    }

    /// Stored entries in canonical order `(k, l, m, value)` with `k <= l`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(k, l, m), &v)| (k, l, m, v))
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Scale factors `c_k` of the basis the entries refer to, relative to an orthonormal basis.
    pub fn basis_scale(&self) -> &[f64] {
        &self.basis_scale
    }

    pub fn modes(&self) -> usize {
        self.basis_scale.len()
    }

    /// First stored entry with `k == l` and output `m <= null_dim`, if any.
    ///
    /// A nonzero entry breaks the centering condition `P_c B(e_k, e_k) = 0`.
    pub fn centering_violation(&self, null_dim: usize, up_to: usize) -> Option<(usize, usize, f64)> {
        self.iter()
            .find(|&(k, l, m, v)| k == l && k <= up_to && m <= null_dim && v != 0.0)
            .map(|(k, _, m, v)| (k, m, v))
    }
}

/// Burgers nonlinearity `B(u, v) = (1/2) d_x(u v)` in the Dirichlet sine basis on `[0, pi]`.
///
/// Normalized: `(|k+l| d[k+l,m] - |k-l| d[|k-l|,m]) / (2 sqrt(2 pi))`.
/// Plain sine basis: the same bracket times `1/4`.
pub fn burgers_entry(k: usize, l: usize, m: usize, normalized: bool) -> f64 {
    let (k, l, m) = (k as i64, l as i64, m as i64);
    let mut bracket = 0.0;
    if k + l == m {
        bracket += (k + l) as f64;
    }
    if (k - l).abs() == m {
        bracket -= (k - l).abs() as f64;
    }
    if normalized {
        bracket / (2.0 * (2.0 * PI).sqrt())
    } else {
        0.25 * bracket
    }
}

/// Burgers interaction tensor on modes `1..=m+1`.
pub fn burgers_tensor(m: usize, normalized: bool) -> Result<InteractionTensor> {
    if m == 0 {
        return Err(Error::Invalid("mode count must be at least 1".into()));
    }
    let n = m + 1;
    let scale = if normalized { 1.0 } else { (PI / 2.0).sqrt() };
    let mut t = InteractionTensor::new(vec![scale; n]);
    for k in 1..=n {
        for l in k..=n {
            for out in [k + l, l - k] {
                if out >= 1 && out <= n {
                    t.insert(k, l, out, burgers_entry(k, l, out, normalized))?;
                }
            }
        }
    }
    Ok(t)
}

/// Change of basis `e'_k = c_k e_k`: `B'[k,l,m] = c_k c_l / c_m B[k,l,m]` and `q'_k = c_k q_k`.
pub fn basis_rescale(
    tensor: &InteractionTensor,
    noise: &NoiseSpectrum,
    c: &[f64],
) -> Result<(InteractionTensor, NoiseSpectrum)> {
    if let Some(i) = c.iter().position(|&v| v == 0.0 || !v.is_finite()) {
        return Err(Error::Invalid(format!("scale factor c_{} must be finite and nonzero", i + 1)));
    }
    let needed = tensor.modes().max(noise.len());
    if c.len() < needed {
        return Err(Error::Invalid(format!("{} scale factors given for {needed} modes", c.len())));
    }
    let scale = tensor
        .basis_scale()
        .iter()
        .zip(c)
        .map(|(old, ck)| old * ck)
        .collect();
    let mut out = InteractionTensor::new(scale);
    for (k, l, m, v) in tensor.iter() {
        out.insert(k, l, m, c[k - 1] * c[l - 1] / c[m - 1] * v)?;
    }
    let q = noise
        .amplitudes()
        .iter()
        .zip(c)
        .map(|(q, ck)| ck * q)
        .collect();
    // zeros stay zeros, so the kernel condition carries over
    Ok((out, NoiseSpectrum::new(q, 0)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalized_112() {
        let t = burgers_tensor(3, true).unwrap();
        let expected = 1.0 / (2.0 * PI).sqrt();
        assert!((t.get(1, 1, 2) - expected).abs() < 1e-15);
        assert!((t.get(1, 1, 2) - 0.39894).abs() < 1e-5);
    }

    #[test]
    fn diagonal_pairs_vanish_off_double() {
        let t = burgers_tensor(6, false).unwrap();
        for k in 1..=7 {
            for m in 1..=7 {
                if m != 2 * k {
                    assert_eq!(t.get(k, k, m), 0.0, "({k},{k},{m})");
                }
            }
        }
    }

    #[test]
    fn plain_sine_121_is_minus_quarter() {
        let t = burgers_tensor(2, false).unwrap();
        assert_eq!(t.get(1, 2, 1), -0.25);
        assert_eq!(t.get(2, 1, 1), -0.25);
        // slow drift coefficient of x*y_1 in the 2-mode system: 2 * B[1,2,1]
        assert_eq!(2.0 * t.get(1, 2, 1), -0.5);
    }

    #[test]
    fn rescale_normalized_to_sine() {
        let t = burgers_tensor(4, true).unwrap();
        let noise = NoiseSpectrum::new(vec![0.0, 1.0, 1.0, 1.0, 1.0], 1).unwrap();
        let c = vec![(PI / 2.0).sqrt(); 5];
        let (plain, q) = basis_rescale(&t, &noise, &c).unwrap();
        let direct = burgers_tensor(4, false).unwrap();
        for (k, l, m, v) in direct.iter() {
            assert!((plain.get(k, l, m) - v).abs() < 1e-15);
        }
        assert!((plain.get(1, 2, 1) + 0.25).abs() < 1e-15);
        assert!((q.q(2) - c[1]).abs() < 1e-15);
    }

    #[test]
    fn rescale_identity_and_noise() {
        let t = burgers_tensor(2, false).unwrap();
        let noise = NoiseSpectrum::new(vec![0.0, 1.0, 1.0], 1).unwrap();
        let (same, q) = basis_rescale(&t, &noise, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(same.iter().collect::<Vec<_>>(), t.iter().collect::<Vec<_>>());
        assert_eq!(q, noise);
        let (_, q2) = basis_rescale(&t, &noise, &[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(q2.q(2), 2.0);
    }

    #[test]
    fn rescale_rejects_zero() {
        let t = burgers_tensor(2, false).unwrap();
        let noise = NoiseSpectrum::new(vec![0.0, 1.0, 1.0], 1).unwrap();
        assert!(basis_rescale(&t, &noise, &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn centering_holds_for_burgers() {
        let t = burgers_tensor(10, false).unwrap();
        assert!(t.centering_violation(1, 11).is_none());
        for k in 1..=11 {
            assert_eq!(t.get(k, k, 1), 0.0);
        }
    }

    #[test]
    fn conflicting_insert_rejected() {
        let mut t = InteractionTensor::new(vec![1.0; 3]);
        t.insert(1, 2, 3, 0.5).unwrap();
        t.insert(2, 1, 3, 0.5).unwrap();
        assert!(t.insert(2, 1, 3, 0.7).is_err());
    }
}
