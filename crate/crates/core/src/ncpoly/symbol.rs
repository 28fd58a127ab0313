use std::fmt;

/// Operator families, in canonical block order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Party {
    A,
    B,
    C,
    /// Eve-side variational operators; commute with every measurement.
    Z,
}

impl Party {
    pub const MEASURING: [Party; 3] = [Party::A, Party::B, Party::C];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Party> {
        Party::MEASURING.get(i).copied()
    }

    pub fn letter(self) -> char {
        match self {
            Party::A => 'A',
            Party::B => 'B',
            Party::C => 'C',
            Party::Z => 'Z',
        }
    }

    pub fn from_letter(c: char) -> Option<Party> {
        match c {
            'A' => Some(Party::A),
            'B' => Some(Party::B),
            'C' => Some(Party::C),
            'Z' => Some(Party::Z),
            _ => None,
        }
    }
}

/// A single operator letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    /// Projector `M_{outcome|input}` of a measuring party. Self-adjoint and
    /// idempotent; distinct outcomes of one input are orthogonal.
    Projector {
        party: Party,
        input: u16,
        outcome: u16,
    },
    /// Free operator `Z_label` (or its adjoint) attached to quadrature `node`.
    Free { label: u16, node: u16, star: bool },
    /// Free self-adjoint operator; no relation beyond commuting with
    /// measurements.
    Hermitian { label: u16 },
}

impl Symbol {
    pub fn projector(party: Party, input: usize, outcome: usize) -> Symbol {
        debug_assert!(party != Party::Z);
        Symbol::Projector {
            party,
            input: input as u16,
            outcome: outcome as u16,
        }
    }

    pub fn free(label: usize, node: usize) -> Symbol {
        Symbol::Free {
            label: label as u16,
            node: node as u16,
            star: false,
        }
    }

    pub fn party(&self) -> Party {
        match self {
            Symbol::Projector { party, .. } => *party,
            Symbol::Free { .. } | Symbol::Hermitian { .. } => Party::Z,
        }
    }

    pub fn is_projector(&self) -> bool {
        matches!(self, Symbol::Projector { .. })
    }

    pub fn adjoint(self) -> Symbol {
        match self {
            Symbol::Free { label, node, star } => Symbol::Free {
                label,
                node,
                star: !star,
            },
            s => s,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Symbol::Projector {
                party,
                input,
                outcome,
            } => write!(f, "{}{}|{}", party.letter(), outcome, input),
            Symbol::Free { label, node, star } => {
                write!(f, "Z{label}")?;
                if node != 0 {
                    write!(f, "_{node}")?;
                }
                if star {
                    write!(f, "*")?;
                }
                Ok(())
            }
            Symbol::Hermitian { label } => write!(f, "X{label}"),
        }
    }
}
