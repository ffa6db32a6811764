//! Combinational gate networks built from AND/OR/XOR/NOT.
//!
//! Wires are indices into the gate list and a gate may only reference wires
//! created before it, so every network is acyclic by construction.
//! Evaluation is bit-sliced: each wire carries a `u64`, i.e. 64 independent
//! input vectors are evaluated per pass.

use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Wire(usize);

impl Wire {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Gate {
    Input(usize),
    Const(bool),
    Not(Wire),
    And(Vec<Wire>),
    Or(Vec<Wire>),
    Xor(Vec<Wire>),
}

impl Gate {
    fn operands(&self) -> &[Wire] {
        match self {
            Gate::Input(_) | Gate::Const(_) => &[],
            Gate::Not(w) => std::slice::from_ref(w),
            Gate::And(ws) | Gate::Or(ws) | Gate::Xor(ws) => ws,
        }
    }

    fn is_logic(&self) -> bool {
        !matches!(self, Gate::Input(_) | Gate::Const(_))
    }
}

#[derive(Default, Debug)]
pub struct NetworkBuilder {
    gates: Vec<Gate>,
    inputs: usize,
    outputs: BTreeMap<String, Vec<Wire>>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, gate: Gate) -> Wire {
        let next = self.gates.len();
        assert!(
            gate.operands().iter().all(|w| w.0 < next),
            "gate references a wire that does not exist yet"
        );
        self.gates.push(gate);
        Wire(next)
    }

    pub fn input(&mut self) -> Wire {
        let idx = self.inputs;
        self.inputs += 1;
        self.push(Gate::Input(idx))
    }

    pub fn inputs(&mut self, n: usize) -> Vec<Wire> {
        (0..n).map(|_| self.input()).collect()
    }

    pub fn constant(&mut self, v: bool) -> Wire {
        self.push(Gate::Const(v))
    }

    pub fn not(&mut self, a: Wire) -> Wire {
        self.push(Gate::Not(a))
    }

    /// n-input AND; a single operand passes through without a gate.
    pub fn and(&mut self, ins: &[Wire]) -> Wire {
        match ins {
            [] => self.constant(true),
            [w] => *w,
            _ => self.push(Gate::And(ins.to_vec())),
        }
    }

    pub fn or(&mut self, ins: &[Wire]) -> Wire {
        match ins {
            [] => self.constant(false),
            [w] => *w,
            _ => self.push(Gate::Or(ins.to_vec())),
        }
    }

    pub fn xor(&mut self, a: Wire, b: Wire) -> Wire {
        self.push(Gate::Xor(vec![a, b]))
    }

    pub fn output(&mut self, name: &str, wires: Vec<Wire>) {
        self.outputs.insert(name.to_string(), wires);
    }

    pub fn build(self) -> GateNetwork {
        let mut levels = vec![0usize; self.gates.len()];
        for (i, g) in self.gates.iter().enumerate() {
            if g.is_logic() {
                levels[i] = 1 + g.operands().iter().map(|w| levels[w.0]).max().unwrap_or(0);
            }
        }
        GateNetwork {
            gates: self.gates,
            inputs: self.inputs,
            outputs: self.outputs,
            levels,
        }
    }
}

/// Immutable, acyclic gate network with named output buses.
#[derive(Clone, Debug)]
pub struct GateNetwork {
    gates: Vec<Gate>,
    inputs: usize,
    outputs: BTreeMap<String, Vec<Wire>>,
    levels: Vec<usize>,
}

/// Wire values from one bit-sliced evaluation.
pub struct Evaluation<'a> {
    net: &'a GateNetwork,
    values: Vec<u64>,
}

impl Evaluation<'_> {
    /// Lane `lane` of bus `name`, LSB first.
    pub fn bus(&self, name: &str, lane: u32) -> Vec<bool> {
        self.net.outputs[name]
            .iter()
            .map(|w| (self.values[w.0] >> lane) & 1 == 1)
            .collect()
    }

    /// Bus `name` read as an unsigned integer for lane `lane`.
    pub fn bus_value(&self, name: &str, lane: u32) -> u128 {
        self.net.outputs[name]
            .iter()
            .enumerate()
            .map(|(i, w)| (((self.values[w.0] >> lane) & 1) as u128) << i)
            .sum()
    }
}

impl GateNetwork {
    pub fn input_count(&self) -> usize {
        self.inputs
    }

    pub fn gate_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_logic()).count()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn output_names(&self) -> impl Iterator<Item = &str> {
        self.outputs.keys().map(String::as_str)
    }

    /// Longest input-to-output path, one level per gate.
    pub fn depth(&self) -> usize {
        self.outputs
            .values()
            .flatten()
            .map(|w| self.levels[w.0])
            .max()
            .unwrap_or(0)
    }

    pub fn bus_depth(&self, name: &str) -> Option<usize> {
        self.outputs
            .get(name)
            .map(|ws| ws.iter().map(|w| self.levels[w.0]).max().unwrap_or(0))
    }

    /// Evaluate 64 input vectors at once; bit `k` of `inputs[i]` is input `i`
    /// of vector `k`.
    pub fn eval_lanes(&self, inputs: &[u64]) -> Evaluation<'_> {
        assert_eq!(inputs.len(), self.inputs, "input count");
        let mut values = vec![0u64; self.gates.len()];
        for (i, g) in self.gates.iter().enumerate() {
            values[i] = match g {
                Gate::Input(k) => inputs[*k],
                Gate::Const(v) => {
                    if *v {
                        u64::MAX
                    } else {
                        0
                    }
                }
                Gate::Not(a) => !values[a.0],
                Gate::And(ws) => ws.iter().fold(u64::MAX, |acc, w| acc & values[w.0]),
                Gate::Or(ws) => ws.iter().fold(0, |acc, w| acc | values[w.0]),
                Gate::Xor(ws) => ws.iter().fold(0, |acc, w| acc ^ values[w.0]),
            };
        }
        Evaluation { net: self, values }
    }

    pub fn eval(&self, inputs: &[bool]) -> Evaluation<'_> {
        let lanes: Vec<u64> = inputs.iter().map(|&b| b as u64).collect();
        self.eval_lanes(&lanes)
    }
}
