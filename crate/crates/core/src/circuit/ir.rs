use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::Region;

pub const DEFAULT_TRIALS: u64 = 8000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    X(usize),
    Z(usize),
    Rz(usize, f64),
    Cx(usize, usize),
    Measure { qubit: usize, clbit: usize },
    Barrier(Vec<usize>),
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::H(q) | Gate::X(q) | Gate::Z(q) | Gate::Rz(q, _) => vec![*q],
            Gate::Cx(c, t) => vec![*c, *t],
            Gate::Measure { qubit, .. } => vec![*qubit],
            Gate::Barrier(qs) => qs.clone(),
        }
    }

    pub fn is_single_qubit_unitary(&self) -> bool {
        matches!(self, Gate::H(_) | Gate::X(_) | Gate::Z(_) | Gate::Rz(..))
    }

    pub fn is_cx(&self) -> bool {
        matches!(self, Gate::Cx(..))
    }

    /// Clifford gates map Pauli errors to Pauli errors. RZ qualifies only at
    /// multiples of pi/2.
    pub fn is_clifford(&self) -> bool {
        match self {
            Gate::Rz(_, theta) => {
                let k = theta / FRAC_PI_2;
                (k - k.round()).abs() < 1e-9
            }
            _ => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub id: String,
    pub n_qubits: usize,
    pub n_clbits: usize,
    pub layers: Vec<Vec<Gate>>,
    pub requested_trials: u64,
}

impl Program {
    pub fn empty(id: impl Into<String>) -> Self {
        Program {
            id: id.into(),
            n_qubits: 0,
            n_clbits: 0,
            layers: Vec::new(),
            requested_trials: DEFAULT_TRIALS,
        }
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.layers.iter().flatten()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn cx_count(&self) -> usize {
        self.gates().filter(|g| g.is_cx()).count()
    }

    pub fn measurements(&self) -> Vec<(usize, usize)> {
        self.gates()
            .filter_map(|g| match g {
                Gate::Measure { qubit, clbit } => Some((*qubit, *clbit)),
                _ => None,
            })
            .collect()
    }

    /// Same qubit/clbit counts and layer contents; ids and trial counts are
    /// not part of the circuit structure.
    pub fn structurally_eq(&self, other: &Program) -> bool {
        self.n_qubits == other.n_qubits
            && self.n_clbits == other.n_clbits
            && self.layers == other.layers
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Checks operand ranges, per-layer qubit disjointness and that nothing
    /// but measurement touches a qubit after it has been measured.
    pub fn validate(&self) -> Result<()> {
        let mut measured = vec![false; self.n_qubits];
        for (li, layer) in self.layers.iter().enumerate() {
            let mut used = vec![false; self.n_qubits];
            for g in layer {
                check_operands(g, self.n_qubits, self.n_clbits)?;
                for q in g.qubits() {
                    if used[q] {
                        return Err(Error::InvalidProgram(format!(
                            "qubit {q} used twice in layer {li}"
                        )));
                    }
                    used[q] = true;
                    let is_measure = matches!(g, Gate::Measure { .. } | Gate::Barrier(_));
                    if measured[q] && !is_measure {
                        return Err(Error::InvalidProgram(format!(
                            "gate on qubit {q} after its measurement (layer {li})"
                        )));
                    }
                }
                if let Gate::Measure { qubit, .. } = g {
                    measured[*qubit] = true;
                }
            }
        }
        Ok(())
    }

    /// Returns a copy with `n` empty layers inserted before layer `at`.
    pub fn with_idle_layers(&self, at: usize, n: usize) -> Program {
        let mut p = self.clone();
        let at = at.min(p.layers.len());
        for _ in 0..n {
            p.layers.insert(at, Vec::new());
        }
        p
    }
}

fn check_operands(g: &Gate, n_qubits: usize, n_clbits: usize) -> Result<()> {
    for q in g.qubits() {
        if q >= n_qubits {
            return Err(Error::InvalidProgram(format!(
                "qubit {q} out of range ({n_qubits} qubits)"
            )));
        }
    }
    match g {
        Gate::Cx(c, t) if c == t => Err(Error::InvalidProgram(format!(
            "cx control equals target ({c})"
        ))),
        Gate::Measure { clbit, .. } if *clbit >= n_clbits => Err(Error::InvalidProgram(format!(
            "clbit {clbit} out of range ({n_clbits} clbits)"
        ))),
        Gate::Rz(_, theta) if !theta.is_finite() => {
            Err(Error::InvalidProgram("non-finite rz angle".into()))
        }
        _ => Ok(()),
    }
}

/// Greedy as-soon-as-possible layering. A gate lands in the first layer after
/// the last one touching any of its qubits; a barrier occupies a layer of its
/// own and nothing later may move above it.
#[derive(Clone, Debug)]
pub struct ProgramBuilder {
    n_qubits: usize,
    n_clbits: usize,
    layers: Vec<Vec<Gate>>,
    frontier: Vec<usize>,
    floor: usize,
}

impl ProgramBuilder {
    pub fn new(n_qubits: usize, n_clbits: usize) -> Self {
        ProgramBuilder {
            n_qubits,
            n_clbits,
            layers: Vec::new(),
            frontier: vec![0; n_qubits],
            floor: 0,
        }
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        check_operands(&gate, self.n_qubits, self.n_clbits)?;
        if let Gate::Barrier(_) = gate {
            let at = self.frontier.iter().copied().max().unwrap_or(0).max(self.floor);
            self.layers.resize_with(at, Vec::new);
            self.layers.push(vec![gate]);
            self.floor = at + 1;
            self.frontier.iter_mut().for_each(|f| *f = at + 1);
            return Ok(self);
        }
        let qubits = gate.qubits();
        let mut seen = qubits.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidProgram(format!("repeated operand in {gate:?}")));
        }
        let at = qubits
            .iter()
            .map(|&q| self.frontier[q])
            .max()
            .unwrap_or(0)
            .max(self.floor);
        if at >= self.layers.len() {
            self.layers.resize_with(at + 1, Vec::new);
        }
        self.layers[at].push(gate);
        for q in qubits {
            self.frontier[q] = at + 1;
        }
        Ok(self)
    }

    pub fn h(&mut self, q: usize) -> Result<&mut Self> {
        self.push(Gate::H(q))
    }

    pub fn x(&mut self, q: usize) -> Result<&mut Self> {
        self.push(Gate::X(q))
    }

    pub fn rz(&mut self, q: usize, theta: f64) -> Result<&mut Self> {
        self.push(Gate::Rz(q, theta))
    }

    pub fn cx(&mut self, c: usize, t: usize) -> Result<&mut Self> {
        self.push(Gate::Cx(c, t))
    }

    pub fn measure(&mut self, qubit: usize, clbit: usize) -> Result<&mut Self> {
        self.push(Gate::Measure { qubit, clbit })
    }

    pub fn barrier_all(&mut self) -> Result<&mut Self> {
        self.push(Gate::Barrier((0..self.n_qubits).collect()))
    }

    pub fn build(self, id: impl Into<String>) -> Result<Program> {
        let p = Program {
            id: id.into(),
            n_qubits: self.n_qubits,
            n_clbits: self.n_clbits,
            layers: self.layers,
            requested_trials: DEFAULT_TRIALS,
        };
        p.validate()?;
        Ok(p)
    }
}

/// A program placed on device qubits: logical qubit `i` runs on
/// `qubit_map[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MappedProgram {
    pub program: Program,
    pub region: Region,
    pub qubit_map: Vec<usize>,
}

impl MappedProgram {
    /// Places the program on the first `n_qubits` qubits of the region, in
    /// region order. The region must have exactly `n_qubits` qubits.
    pub fn place(program: Program, region: Region) -> Result<Self> {
        if region.len() != program.n_qubits {
            return Err(Error::InvalidArgument(format!(
                "program `{}` needs {} qubits, region has {}",
                program.id,
                program.n_qubits,
                region.len()
            )));
        }
        let qubit_map = region.qubits.clone();
        Ok(MappedProgram {
            program,
            region,
            qubit_map,
        })
    }

    /// Explicit physical layout, without requiring the qubits to be connected.
    /// Used for micro-benchmarks whose victim and attack links are scattered.
    pub fn with_layout(program: Program, qubits: Vec<usize>, owner: impl Into<String>) -> Result<Self> {
        let region = Region::new(qubits, owner)?;
        MappedProgram::place(program, region)
    }

    pub fn physical(&self, logical: usize) -> usize {
        self.qubit_map[logical]
    }
}
