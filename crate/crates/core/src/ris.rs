use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Quantized phase value 2*pi*index/2^b.
pub fn quantize_phase(phase_index: u32, phase_bits: u32) -> Result<f64> {
    let levels = 1u32 << phase_bits;
    if phase_index >= levels {
        return Err(Error::PhaseIndex { index: phase_index, levels });
    }
    Ok(2.0 * std::f64::consts::PI * phase_index as f64 / levels as f64)
}

/// Per-ARIS on/off matrix and quantized phase configuration. Phases are kept
/// as indices so every theta is exactly 2*pi*m/2^b.
#[derive(Debug, Clone, PartialEq)]
pub struct RisControl {
    /// N x I_n on/off states.
    pub delta: Array2<u8>,
    /// N x I_n phase indices in [0, 2^b).
    pub phase_idx: Array2<u32>,
    /// N x I_n reflection amplitudes in [0, 1].
    pub beta: Array2<f64>,
    pub phase_bits: u32,
}

impl RisControl {
    pub fn new(delta: Array2<u8>, phase_idx: Array2<u32>, beta: Array2<f64>, phase_bits: u32) -> Result<Self> {
        let ctl = Self { delta, phase_idx, beta, phase_bits };
        ctl.validate()?;
        Ok(ctl)
    }

    /// Everything on at phase index 0, amplitude `beta`.
    pub fn all_on(n: usize, elements: usize, phase_bits: u32, beta: f64) -> Self {
        Self {
            delta: Array2::from_elem((n, elements), 1),
            phase_idx: Array2::zeros((n, elements)),
            beta: Array2::from_elem((n, elements), beta),
            phase_bits,
        }
    }

    /// Everything off.
    pub fn all_off(n: usize, elements: usize, phase_bits: u32) -> Self {
        Self {
            delta: Array2::zeros((n, elements)),
            phase_idx: Array2::zeros((n, elements)),
            beta: Array2::from_elem((n, elements), 1.0),
            phase_bits,
        }
    }

    pub fn n_aris(&self) -> usize {
        self.delta.nrows()
    }

    pub fn elements(&self) -> usize {
        self.delta.ncols()
    }

    pub fn levels(&self) -> u32 {
        1u32 << self.phase_bits
    }

    /// Phase of element (n, i) in radians.
    pub fn theta(&self, n: usize, i: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.phase_idx[[n, i]] as f64 / self.levels() as f64
    }

    /// The full N x I_n phase matrix.
    pub fn theta_matrix(&self) -> Array2<f64> {
        Array2::from_shape_fn(self.delta.dim(), |(n, i)| self.theta(n, i))
    }

    /// Reflection coefficient delta * beta * exp(j theta) of element (n, i).
    pub fn coefficient(&self, n: usize, i: usize) -> Complex64 {
        if self.delta[[n, i]] == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar(self.beta[[n, i]], self.theta(n, i))
        }
    }

    /// Number of switched-on elements on ARIS n.
    pub fn active_elements(&self, n: usize) -> usize {
        self.delta.row(n).iter().filter(|&&d| d == 1).count()
    }

    pub fn total_active(&self) -> usize {
        self.delta.iter().filter(|&&d| d == 1).count()
    }

    pub fn validate(&self) -> Result<()> {
        if self.phase_idx.dim() != self.delta.dim() || self.beta.dim() != self.delta.dim() {
            return Err(Error::Dimension("ris matrices must share N x I_n shape".into()));
        }
        if self.phase_bits < 1 {
            return Err(Error::Config("phase_bits must be >= 1".into()));
        }
        for &d in self.delta.iter() {
            if d > 1 {
                return Err(Error::Config(format!("delta entries must be binary, got {d}")));
            }
        }
        let levels = self.levels();
        for &p in self.phase_idx.iter() {
            if p >= levels {
                return Err(Error::PhaseIndex { index: p, levels });
            }
        }
        for &b in self.beta.iter() {
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::Config(format!("beta entries must be in [0, 1], got {b}")));
            }
        }
        Ok(())
    }
}
