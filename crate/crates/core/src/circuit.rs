//! Gate-level construction of the unary inner-product oracle and the
//! iterated amplification circuits `U^t = (A S0 A† Sχ)^t A`.
//!
//! Qubit 0 is the flag qubit: the good state is the unary basis vector
//! `|1000⟩`. Loaders use a binary tree of RBS gates rooted on qubit 0,
//! `(0,2)` at the top and `(0,1)`, `(2,3)` at the leaves.

use arrayvec::ArrayVec;
use num_complex::Complex64;
use thiserror::Error;

/// Register size of every circuit built here.
pub const NUM_QUBITS: usize = 4;

/// Qubit that carries the `|1⟩` flag of the good state.
pub const FLAG_QUBIT: usize = 0;

const UNIT_NORM_TOL: f64 = 1e-9;

pub type Matrix4 = [[Complex64; 4]; 4];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("qubit {qubit} out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },
    #[error("two-qubit gate acts twice on qubit {0}")]
    DuplicateQubit(usize),
    #[error("input vector has norm {0}, expected 1")]
    NotUnitVector(f64),
    #[error("input vector is zero")]
    ZeroVector,
}

/// A gate from the set {X, Z, H, RY, CZ, RBS}.
///
/// `Rbs(a, b, φ)` applies the RBS matrix with `a` as the high bit of the
/// local two-qubit index, so `|10⟩ → cos φ |10⟩ + sin φ |01⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    X(usize),
    Z(usize),
    H(usize),
    Ry(usize, f64),
    Cz(usize, usize),
    Rbs(usize, usize, f64),
}

impl Gate {
    pub fn qubits(&self) -> ArrayVec<usize, 2> {
        let mut out = ArrayVec::new();
        match *self {
            Gate::X(q) | Gate::Z(q) | Gate::H(q) | Gate::Ry(q, _) => out.push(q),
            Gate::Cz(a, b) | Gate::Rbs(a, b, _) => {
                out.push(a);
                out.push(b);
            }
        }
        out
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cz(..) | Gate::Rbs(..))
    }

    pub fn acts_on(&self, qubit: usize) -> bool {
        self.qubits().contains(&qubit)
    }

    pub fn adjoint(&self) -> Gate {
        match *self {
            Gate::Ry(q, a) => Gate::Ry(q, -a),
            Gate::Rbs(a, b, phi) => Gate::Rbs(a, b, -phi),
            g => g,
        }
    }

    fn validate(&self, num_qubits: usize) -> Result<(), CircuitError> {
        let qs = self.qubits();
        for &q in &qs {
            if q >= num_qubits {
                return Err(CircuitError::QubitOutOfRange { qubit: q, num_qubits });
            }
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(CircuitError::DuplicateQubit(qs[0]));
        }
        Ok(())
    }
}

/// Ordered gate list over a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self { num_qubits, gates: Vec::new() }
    }

    pub fn from_gates(num_qubits: usize, gates: impl IntoIterator<Item = Gate>) -> Result<Self, CircuitError> {
        let mut circuit = Self::new(num_qubits);
        circuit.extend(gates)?;
        Ok(circuit)
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        gate.validate(self.num_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<(), CircuitError> {
        for g in gates {
            self.push(g)?;
        }
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn rbs_count(&self) -> usize {
        self.gates.iter().filter(|g| matches!(g, Gate::Rbs(..))).count()
    }

    /// Reversed circuit with every gate replaced by its adjoint.
    pub fn adjoint(&self) -> Circuit {
        Circuit { num_qubits: self.num_qubits, gates: self.gates.iter().rev().map(Gate::adjoint).collect() }
    }
}

/// Two-qubit resource counts. Depth layers only the two-qubit gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompiledStats {
    pub two_qubit_count: usize,
    pub two_qubit_depth: usize,
}

/// Binary-tree angles of a 4-dimensional unary loader.
///
/// The loaded vector is
/// `(cos t·cos l, cos t·sin l, sin t·cos r, sin t·sin r)` for
/// `(t, l, r) = (top, left, right)`. `top` lies in `[0, π/2]`; the leaf
/// angles lie in `(−π, π]` so that any sign pattern is reachable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoaderAngles {
    pub top: f64,
    pub left: f64,
    pub right: f64,
}

impl LoaderAngles {
    pub fn vector(&self) -> [f64; 4] {
        let (ct, st) = (self.top.cos(), self.top.sin());
        [ct * self.left.cos(), ct * self.left.sin(), st * self.right.cos(), st * self.right.sin()]
    }

    /// The three RBS gates of the loader, in time order. They act on a
    /// register already holding `|1000⟩`.
    pub fn gates(&self) -> [Gate; 3] {
        [Gate::Rbs(0, 2, self.top), Gate::Rbs(0, 1, self.left), Gate::Rbs(2, 3, self.right)]
    }
}

/// `RBS(φ)` in the basis `|00⟩, |01⟩, |10⟩, |11⟩`.
pub fn rbs_unitary(angle: f64) -> Matrix4 {
    let (s, c) = angle.sin_cos();
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let re = |x: f64| Complex64::new(x, 0.0);
    [[one, z, z, z], [z, re(c), re(s), z], [z, re(-s), re(c), z], [z, z, z, one]]
}

/// Rewrites `RBS(φ)` on `(a, b)` as `H H · CZ · RY(φ) RY(−φ) · CZ · H H`.
pub fn decompose_rbs(angle: f64, a: usize, b: usize) -> Result<Vec<Gate>, CircuitError> {
    if a == b {
        return Err(CircuitError::DuplicateQubit(a));
    }
    Ok(vec![
        Gate::H(a),
        Gate::H(b),
        Gate::Cz(a, b),
        Gate::Ry(a, angle),
        Gate::Ry(b, -angle),
        Gate::Cz(a, b),
        Gate::H(a),
        Gate::H(b),
    ])
}

pub fn loader_angles(x: &[f64; 4]) -> Result<LoaderAngles, CircuitError> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(CircuitError::ZeroVector);
    }
    if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(CircuitError::NotUnitVector(norm));
    }
    let low = x[0].hypot(x[1]);
    let high = x[2].hypot(x[3]);
    let leaf = |a: f64, b: f64, n: f64| if n == 0.0 { 0.0 } else { b.atan2(a) };
    Ok(LoaderAngles { top: high.atan2(low), left: leaf(x[0], x[1], low), right: leaf(x[2], x[3], high) })
}

/// `X` on the flag qubit followed by the three loader gates.
pub fn loader_circuit(angles: &LoaderAngles) -> Circuit {
    let mut c = Circuit::new(NUM_QUBITS);
    c.gates.push(Gate::X(FLAG_QUBIT));
    c.gates.extend(angles.gates());
    c
}

/// `U^t` before any peephole merging: the loader of `x`, the inverse
/// loader of `y`, and `t` rounds of `Z, A†, Z, A`. On the unary subspace
/// both reflections reduce to a `Z` on the flag qubit (up to a global
/// sign per round).
pub fn build_unmerged_iterated_circuit(x: &[f64; 4], y: &[f64; 4], depth: usize) -> Result<Circuit, CircuitError> {
    let ax = loader_angles(x)?;
    let ay = loader_angles(y)?;
    let load_x = ax.gates();
    let unload_y: Vec<Gate> = ay.gates().iter().rev().map(Gate::adjoint).collect();
    let load_y = ay.gates();
    let unload_x: Vec<Gate> = ax.gates().iter().rev().map(Gate::adjoint).collect();

    let mut c = Circuit::new(NUM_QUBITS);
    c.push(Gate::X(FLAG_QUBIT))?;
    c.extend(load_x)?;
    c.extend(unload_y.iter().copied())?;
    for _ in 0..depth {
        c.push(Gate::Z(FLAG_QUBIT))?;
        c.extend(load_y)?;
        c.extend(unload_x.iter().copied())?;
        c.push(Gate::Z(FLAG_QUBIT))?;
        c.extend(load_x)?;
        c.extend(unload_y.iter().copied())?;
    }
    Ok(c)
}

/// `U^t` with both peephole rules applied: commuting RBS gates on the same
/// pair are fused, and `RBS(φ) · Z · RBS(ψ)` on a shared pair collapses to
/// `Z · RBS(ψ − φ)`. The result has `6t + 4` RBS gates.
pub fn build_iterated_circuit(x: &[f64; 4], y: &[f64; 4], depth: usize) -> Result<Circuit, CircuitError> {
    let mut c = build_unmerged_iterated_circuit(x, y, depth)?;
    fuse_rbs(&mut c.gates);
    merge_rbs_across_z(&mut c.gates);
    Ok(c)
}

/// The evaluation oracle `A` (iterated circuit at depth 0).
pub fn build_oracle(x: &[f64; 4], y: &[f64; 4]) -> Result<Circuit, CircuitError> {
    build_iterated_circuit(x, y, 0)
}

/// Replaces every RBS by its CZ decomposition.
pub fn compile_to_two_qubit(circuit: &Circuit) -> Circuit {
    let mut gates = Vec::with_capacity(circuit.len() * 4);
    for g in circuit.gates() {
        match *g {
            Gate::Rbs(a, b, phi) => gates.extend(decompose_rbs(phi, a, b).expect("validated on push")),
            other => gates.push(other),
        }
    }
    Circuit { num_qubits: circuit.num_qubits, gates }
}

/// Counts two-qubit gates and their ASAP layer depth. On an uncompiled
/// circuit this gives the RBS-level figures.
pub fn compiled_stats(circuit: &Circuit) -> CompiledStats {
    let mut level = vec![0usize; circuit.num_qubits];
    let mut count = 0;
    let mut depth = 0;
    for g in circuit.gates().iter().filter(|g| g.is_two_qubit()) {
        let qs = g.qubits();
        let layer = qs.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
        for &q in &qs {
            level[q] = layer;
        }
        count += 1;
        depth = depth.max(layer);
    }
    CompiledStats { two_qubit_count: count, two_qubit_depth: depth }
}

/// Angle of `g` expressed on the ordered pair `(a, b)`, if it is an RBS on
/// that pair. Swapping the pair transposes the rotation block.
fn rbs_angle_on(g: &Gate, a: usize, b: usize) -> Option<f64> {
    match *g {
        Gate::Rbs(p, q, phi) if (p, q) == (a, b) => Some(phi),
        Gate::Rbs(p, q, phi) if (p, q) == (b, a) => Some(-phi),
        _ => None,
    }
}

fn next_touching(gates: &[Gate], from: usize, a: usize, b: usize) -> Option<usize> {
    (from..gates.len()).find(|&j| gates[j].acts_on(a) || gates[j].acts_on(b))
}

fn fuse_rbs(gates: &mut Vec<Gate>) {
    let mut i = 0;
    while i < gates.len() {
        if let Gate::Rbs(a, b, phi) = gates[i] {
            if let Some(j) = next_touching(gates, i + 1, a, b) {
                if let Some(psi) = rbs_angle_on(&gates[j], a, b) {
                    gates[j] = Gate::Rbs(a, b, phi + psi);
                    gates.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
}

fn merge_rbs_across_z(gates: &mut Vec<Gate>) {
    let mut i = 0;
    while i < gates.len() {
        if let Gate::Rbs(a, b, phi) = gates[i] {
            if let Some(j) = next_touching(gates, i + 1, a, b) {
                let is_z = matches!(gates[j], Gate::Z(q) if q == a || q == b);
                if is_z {
                    if let Some(k) = next_touching(gates, j + 1, a, b) {
                        if let Some(psi) = rbs_angle_on(&gates[k], a, b) {
                            // RBS(ψ) Z RBS(φ) = RBS(ψ − φ) Z
                            gates[k] = Gate::Rbs(a, b, psi - phi);
                            gates.remove(i);
                            continue;
                        }
                    }
                }
            }
        }
        i += 1;
    }
}
