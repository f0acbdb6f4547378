use num_complex::Complex64 as C;

/// 2x2 unitary in row-major order.
pub type Mat2 = [C; 4];

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

pub fn rz(theta: f64) -> Mat2 {
    [
        C::from_polar(1.0, -theta / 2.0),
        ZERO,
        ZERO,
        C::from_polar(1.0, theta / 2.0),
    ]
}

pub fn x() -> Mat2 {
    [ZERO, ONE, ONE, ZERO]
}

pub fn z() -> Mat2 {
    [ONE, ZERO, ZERO, -ONE]
}

pub fn h() -> Mat2 {
    let s = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [s, s, s, -s]
}

pub fn sx() -> Mat2 {
    let p = C::new(0.5, 0.5);
    let m = C::new(0.5, -0.5);
    [p, m, m, p]
}

/// Dense state of `n` qubits; qubit `k` is bit `k` of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C>,
}

impl StateVector {
    pub fn new(n: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        StateVector { n, amps }
    }

    pub fn reset(&mut self) {
        self.amps.fill(ZERO);
        self.amps[0] = ONE;
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C] {
        &self.amps
    }

    pub fn apply(&mut self, q: usize, m: &Mat2) {
        let step = 1usize << q;
        for block in self.amps.chunks_exact_mut(2 * step) {
            let (lo, hi) = block.split_at_mut(step);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = m[0] * a + m[1] * b;
                *y = m[2] * a + m[3] * b;
            }
        }
    }

    /// Multiply the amplitudes where qubit `q` is 1 by `phase`.
    pub fn phase(&mut self, q: usize, phase: C) {
        let step = 1usize << q;
        for block in self.amps.chunks_exact_mut(2 * step) {
            for a in &mut block[step..] {
                *a *= phase;
            }
        }
    }

    pub fn cx(&mut self, control: usize, target: usize) {
        let (cm, tm) = (1usize << control, 1usize << target);
        let (lo, hi) = (cm.min(tm), cm.max(tm));
        let len = self.amps.len();
        // enumerate indices with both bits clear, then offset
        let mut base = 0;
        while base < len {
            let mut mid = base;
            while mid < base + hi {
                for i in mid..mid + lo {
                    self.amps.swap(i | cm, i | cm | tm);
                }
                mid += 2 * lo;
            }
            base += 2 * hi;
        }
    }

    pub fn pauli_x(&mut self, q: usize) {
        let step = 1usize << q;
        for block in self.amps.chunks_exact_mut(2 * step) {
            let (a, b) = block.split_at_mut(step);
            a.swap_with_slice(b);
        }
    }

    pub fn pauli_z(&mut self, q: usize) {
        self.phase(q, -ONE);
    }

    /// Y = i X Z.
    pub fn pauli_y(&mut self, q: usize) {
        self.pauli_z(q);
        self.pauli_x(q);
        for a in &mut self.amps {
            *a *= C::new(0.0, 1.0);
        }
    }

    /// Apply I, X, Y or Z for codes 0..4 (global phases dropped).
    pub fn pauli_code(&mut self, q: usize, code: u8) {
        match code {
            0 => {}
            1 => self.pauli_x(q),
            2 => {
                self.pauli_z(q);
                self.pauli_x(q);
            }
            3 => self.pauli_z(q),
            _ => unreachable!(),
        }
    }

    pub fn prob_one(&self, q: usize) -> f64 {
        let m = 1usize << q;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & m != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Project qubit `q` onto `outcome` and renormalize; `prob` is the
    /// probability of that outcome.
    pub fn collapse(&mut self, q: usize, outcome: bool, prob: f64) {
        let m = 1usize << q;
        let scale = 1.0 / prob.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if (i & m != 0) == outcome {
                *a *= scale;
            } else {
                *a = ZERO;
            }
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Draw a basis index given a uniform `r` in [0, 1).
    pub fn sample_index(&self, r: f64) -> usize {
        let mut acc = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            acc += a.norm_sqr();
            if r < acc {
                return i;
            }
        }
        // rounding left r just above the total mass
        self.amps.iter().rposition(|a| a.norm_sqr() > 0.0).unwrap_or(0)
    }
}
