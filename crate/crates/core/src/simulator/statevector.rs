use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::circuit::Gate;

/// Single-qubit Pauli operator, used for injected errors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// 0..4 in the order I, X, Y, Z.
    pub fn from_index(i: u64) -> Self {
        match i & 3 {
            0 => Pauli::I,
            1 => Pauli::X,
            2 => Pauli::Y,
            _ => Pauli::Z,
        }
    }

    pub fn has_x(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    pub fn has_z(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }
}

#[derive(Clone, Debug)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zero(n: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        StateVector { n, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Applies a unitary gate; measurement and barriers are no-ops here.
    pub fn apply(&mut self, g: &Gate) {
        match *g {
            Gate::H(q) => self.h(q),
            Gate::X(q) => self.x(q),
            Gate::Z(q) => self.z(q),
            Gate::Rz(q, theta) => self.rz(q, theta),
            Gate::Cx(c, t) => self.cx(c, t),
            Gate::Measure { .. } | Gate::Barrier(_) => {}
        }
    }

    pub fn apply_pauli(&mut self, q: usize, p: Pauli) {
        match p {
            Pauli::I => {}
            Pauli::X => self.x(q),
            Pauli::Z => self.z(q),
            Pauli::Y => {
                // Y = i X Z
                self.z(q);
                self.x(q);
                self.amps.iter_mut().for_each(|a| *a *= Complex64::i());
            }
        }
    }

    fn h(&mut self, q: usize) {
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a, b) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = (a + b) * FRAC_1_SQRT_2;
                self.amps[i | bit] = (a - b) * FRAC_1_SQRT_2;
            }
        }
    }

    fn x(&mut self, q: usize) {
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                self.amps.swap(i, i | bit);
            }
        }
    }

    fn z(&mut self, q: usize) {
        let bit = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & bit != 0 {
                *a = -*a;
            }
        }
    }

    fn rz(&mut self, q: usize, theta: f64) {
        let bit = 1usize << q;
        let lo = Complex64::from_polar(1.0, -theta / 2.0);
        let hi = Complex64::from_polar(1.0, theta / 2.0);
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a *= if i & bit == 0 { lo } else { hi };
        }
    }

    fn cx(&mut self, c: usize, t: usize) {
        let (cb, tb) = (1usize << c, 1usize << t);
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}
