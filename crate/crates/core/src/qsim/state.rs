use num_complex::Complex64;

use super::QsimError;

pub const MAX_QUBITS: usize = 8;

const NORM_TOLERANCE: f64 = 1e-12;

/// Normalized pure state on `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    pub fn new(num_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self, QsimError> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(QsimError::UnsupportedSize(num_qubits));
        }
        let expected = 1usize << num_qubits;
        if amplitudes.len() != expected {
            return Err(QsimError::InvalidLength { expected, got: amplitudes.len() });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QsimError::NotNormalized(norm));
        }
        Ok(Statevector { num_qubits, amplitudes })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self, QsimError> {
        let size = 1usize.checked_shl(num_qubits as u32).unwrap_or(0);
        let mut amps = vec![Complex64::new(0.0, 0.0); size];
        if index >= size {
            return Err(QsimError::InvalidLength { expected: size, got: index });
        }
        amps[index] = Complex64::new(1.0, 0.0);
        Statevector::new(num_qubits, amps)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    /// Amplitude of a basis label such as `"0101"` (qubit 1 first).
    pub fn amplitude_of(&self, label: &str) -> Option<Complex64> {
        if label.len() != self.num_qubits {
            return None;
        }
        let mut index = 0usize;
        for c in label.chars() {
            index = (index << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => return None,
                };
        }
        Some(self.amplitudes[index])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// `(|0000⟩ + |0101⟩ + |1010⟩ − |1111⟩)/2`.
pub fn make_psi() -> Statevector {
    let mut amps = vec![Complex64::new(0.0, 0.0); 16];
    amps[0b0000] = Complex64::new(0.5, 0.0);
    amps[0b0101] = Complex64::new(0.5, 0.0);
    amps[0b1010] = Complex64::new(0.5, 0.0);
    amps[0b1111] = Complex64::new(-0.5, 0.0);
    Statevector::new(4, amps).expect("psi is normalized")
}

/// `(|0…0⟩ + |1…1⟩)/√2` on `n ≥ 2` qubits.
pub fn make_ghz(n: usize) -> Result<Statevector, QsimError> {
    if n < 2 {
        return Err(QsimError::GhzTooSmall(n));
    }
    if n > MAX_QUBITS {
        return Err(QsimError::UnsupportedSize(n));
    }
    let size = 1usize << n;
    let mut amps = vec![Complex64::new(0.0, 0.0); size];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    amps[0] = Complex64::new(h, 0.0);
    amps[size - 1] = Complex64::new(h, 0.0);
    Statevector::new(n, amps)
}
