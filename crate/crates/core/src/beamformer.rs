use ndarray::{Array1, Array2};
use num_complex::Complex64;

/// BS precoding matrix; row k is the beam g_k for UE k.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer {
    pub g: Array2<Complex64>,
}

impl Beamformer {
    pub fn new(g: Array2<Complex64>) -> Self {
        Self { g }
    }

    pub fn zeros(k: usize, m: usize) -> Self {
        Self { g: Array2::zeros((k, m)) }
    }

    /// Equal power split across UEs, uniform phase across antennas.
    pub fn equal_power(k: usize, m: usize, total_power_w: f64) -> Self {
        let amp = (total_power_w / (k as f64 * m as f64)).sqrt();
        Self { g: Array2::from_elem((k, m), Complex64::new(amp, 0.0)) }
    }

    /// Matched (conjugate) beams along the given per-UE channel rows, equal
    /// power split across UEs.
    pub fn matched(rows: &[Array1<Complex64>], total_power_w: f64) -> Self {
        let k = rows.len();
        let m = rows[0].len();
        let per_ue = total_power_w / k as f64;
        let mut g = Array2::zeros((k, m));
        for (ki, row) in rows.iter().enumerate() {
            let norm = row.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.0 {
                let scale = per_ue.sqrt() / norm;
                for mi in 0..m {
                    g[[ki, mi]] = row[mi].conj() * scale;
                }
            } else {
                let amp = (per_ue / m as f64).sqrt();
                for mi in 0..m {
                    g[[ki, mi]] = Complex64::new(amp, 0.0);
                }
            }
        }
        Self { g }
    }

    pub fn k_ues(&self) -> usize {
        self.g.nrows()
    }

    pub fn antennas(&self) -> usize {
        self.g.ncols()
    }

    /// tr(g^H g) = sum of squared magnitudes.
    pub fn trace_power(&self) -> f64 {
        self.g.iter().map(|c| c.norm_sqr()).sum()
    }

    /// ||g_k||^2 for one UE.
    pub fn beam_power(&self, k: usize) -> f64 {
        self.g.row(k).iter().map(|c| c.norm_sqr()).sum()
    }

    /// Scale everything down to the power budget if it is exceeded.
    pub fn project(&self, p_max_w: f64) -> Self {
        let tr = self.trace_power();
        if tr <= p_max_w || tr == 0.0 {
            self.clone()
        } else {
            let scale = (p_max_w / tr).sqrt();
            Self { g: self.g.mapv(|c| c * scale) }
        }
    }
}
