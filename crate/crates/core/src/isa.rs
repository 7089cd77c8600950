//! The toy stack ISA shared by the code generator, the object format and the VM.
//!
//! Every instruction is a one-byte opcode followed by a fixed number of
//! little-endian `u32` operands. Jump targets are absolute instruction indices
//! within the enclosing function.

use std::fmt;

/// Runtime fault classes. The numeric value doubles as the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrapCode {
    UnresolvedCall = 10,
    PoisonedDataAccess = 11,
    StubCalled = 12,
    StaleHandle = 13,
    StackFault = 14,
    FormatError = 15,
}

impl TrapCode {
    pub const ALL: [TrapCode; 6] = [
        TrapCode::UnresolvedCall,
        TrapCode::PoisonedDataAccess,
        TrapCode::StubCalled,
        TrapCode::StaleHandle,
        TrapCode::StackFault,
        TrapCode::FormatError,
    ];

    pub fn exit_code(self) -> i32 {
        self as i32
    }

    pub fn from_u32(v: u32) -> Option<TrapCode> {
        TrapCode::ALL.into_iter().find(|c| *c as u32 == v)
    }

    pub fn name(self) -> &'static str {
        match self {
            TrapCode::UnresolvedCall => "UNRESOLVED_CALL",
            TrapCode::PoisonedDataAccess => "POISONED_DATA_ACCESS",
            TrapCode::StubCalled => "STUB_CALLED",
            TrapCode::StaleHandle => "STALE_HANDLE",
            TrapCode::StackFault => "STACK_FAULT",
            TrapCode::FormatError => "FORMAT_ERROR",
        }
    }
}

impl fmt::Display for TrapCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which nullary value `LOADN` pushes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NullKind {
    Handle = 0,
    FuncRef = 1,
    Unit = 2,
}

impl NullKind {
    pub fn from_u32(v: u32) -> Option<NullKind> {
        match v {
            0 => Some(NullKind::Handle),
            1 => Some(NullKind::FuncRef),
            2 => Some(NullKind::Unit),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Instruction {
    Halt,
    LoadI(i64),
    LoadS(u32),
    LoadN(NullKind),
    LoadL(u32),
    StoreL(u32),
    /// Module-local data slot.
    LoadD(u32),
    StoreD(u32),
    /// Data reached through a GOT slot.
    LoadG(u32),
    StoreG(u32),
    Add,
    Sub,
    Eq,
    Ne,
    Pop,
    Jz(u32),
    Jmp(u32),
    CallI {
        func: u32,
        argc: u32,
    },
    CallX {
        plt: u32,
        argc: u32,
    },
    CallD {
        argc: u32,
    },
    /// Jump to `target` iff the GOT slot holds the null sentinel.
    FacJz {
        got: u32,
        target: u32,
    },
    Ret,
    PrintInt,
    PrintStr,
    DynOpen,
    DynSym,
    DynClose,
    Trap(TrapCode),
    /// Table-base setup emitted by position-independent code; no effect at runtime.
    SetGot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Opcode {
    Halt = 0x00,
    LoadI = 0x01,
    LoadS = 0x02,
    LoadN = 0x03,
    LoadL = 0x04,
    StoreL = 0x05,
    LoadD = 0x06,
    StoreD = 0x07,
    LoadG = 0x08,
    StoreG = 0x09,
    Add = 0x10,
    Sub = 0x11,
    Eq = 0x12,
    Ne = 0x13,
    Pop = 0x14,
    Jz = 0x20,
    Jmp = 0x21,
    CallI = 0x22,
    CallX = 0x23,
    CallD = 0x24,
    FacJz = 0x25,
    Ret = 0x26,
    PrintInt = 0x30,
    PrintStr = 0x31,
    DynOpen = 0x32,
    DynSym = 0x33,
    DynClose = 0x34,
    Trap = 0x3E,
    SetGot = 0x3F,
}

impl Opcode {
    pub const ALL: [Opcode; 29] = [
        Opcode::Halt,
        Opcode::LoadI,
        Opcode::LoadS,
        Opcode::LoadN,
        Opcode::LoadL,
        Opcode::StoreL,
        Opcode::LoadD,
        Opcode::StoreD,
        Opcode::LoadG,
        Opcode::StoreG,
        Opcode::Add,
        Opcode::Sub,
        Opcode::Eq,
        Opcode::Ne,
        Opcode::Pop,
        Opcode::Jz,
        Opcode::Jmp,
        Opcode::CallI,
        Opcode::CallX,
        Opcode::CallD,
        Opcode::FacJz,
        Opcode::Ret,
        Opcode::PrintInt,
        Opcode::PrintStr,
        Opcode::DynOpen,
        Opcode::DynSym,
        Opcode::DynClose,
        Opcode::Trap,
        Opcode::SetGot,
    ];

    pub fn from_u8(b: u8) -> Option<Opcode> {
        Opcode::ALL.into_iter().find(|op| *op as u8 == b)
    }

    /// Number of `u32` operands following the opcode byte.
    pub fn operand_count(self) -> usize {
        match self {
            Opcode::LoadI | Opcode::CallI | Opcode::CallX | Opcode::FacJz => 2,
            Opcode::LoadS
            | Opcode::LoadN
            | Opcode::LoadL
            | Opcode::StoreL
            | Opcode::LoadD
            | Opcode::StoreD
            | Opcode::LoadG
            | Opcode::StoreG
            | Opcode::Jz
            | Opcode::Jmp
            | Opcode::CallD
            | Opcode::Trap => 1,
            _ => 0,
        }
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Halt => "HALT",
            Opcode::LoadI => "LOADI",
            Opcode::LoadS => "LOADS",
            Opcode::LoadN => "LOADN",
            Opcode::LoadL => "LOADL",
            Opcode::StoreL => "STOREL",
            Opcode::LoadD => "LOADD",
            Opcode::StoreD => "STORED",
            Opcode::LoadG => "LOADG",
            Opcode::StoreG => "STOREG",
            Opcode::Add => "ADD",
            Opcode::Sub => "SUB",
            Opcode::Eq => "EQ",
            Opcode::Ne => "NE",
            Opcode::Pop => "POP",
            Opcode::Jz => "JZ",
            Opcode::Jmp => "JMP",
            Opcode::CallI => "CALLI",
            Opcode::CallX => "CALLX",
            Opcode::CallD => "CALLD",
            Opcode::FacJz => "FACJZ",
            Opcode::Ret => "RET",
            Opcode::PrintInt => "PRINT_INT",
            Opcode::PrintStr => "PRINT_STR",
            Opcode::DynOpen => "DYN_OPEN",
            Opcode::DynSym => "DYN_SYM",
            Opcode::DynClose => "DYN_CLOSE",
            Opcode::Trap => "TRAP",
            Opcode::SetGot => "SETGOT",
        }
    }
}

/// Operand could not be turned back into an instruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OperandError {
    BadNullKind(u32),
    BadTrapCode(u32),
}

impl Instruction {
    pub fn opcode(&self) -> Opcode {
        match self {
            Instruction::Halt => Opcode::Halt,
            Instruction::LoadI(_) => Opcode::LoadI,
            Instruction::LoadS(_) => Opcode::LoadS,
            Instruction::LoadN(_) => Opcode::LoadN,
            Instruction::LoadL(_) => Opcode::LoadL,
            Instruction::StoreL(_) => Opcode::StoreL,
            Instruction::LoadD(_) => Opcode::LoadD,
            Instruction::StoreD(_) => Opcode::StoreD,
            Instruction::LoadG(_) => Opcode::LoadG,
            Instruction::StoreG(_) => Opcode::StoreG,
            Instruction::Add => Opcode::Add,
            Instruction::Sub => Opcode::Sub,
            Instruction::Eq => Opcode::Eq,
            Instruction::Ne => Opcode::Ne,
            Instruction::Pop => Opcode::Pop,
            Instruction::Jz(_) => Opcode::Jz,
            Instruction::Jmp(_) => Opcode::Jmp,
            Instruction::CallI { .. } => Opcode::CallI,
            Instruction::CallX { .. } => Opcode::CallX,
            Instruction::CallD { .. } => Opcode::CallD,
            Instruction::FacJz { .. } => Opcode::FacJz,
            Instruction::Ret => Opcode::Ret,
            Instruction::PrintInt => Opcode::PrintInt,
            Instruction::PrintStr => Opcode::PrintStr,
            Instruction::DynOpen => Opcode::DynOpen,
            Instruction::DynSym => Opcode::DynSym,
            Instruction::DynClose => Opcode::DynClose,
            Instruction::Trap(_) => Opcode::Trap,
            Instruction::SetGot => Opcode::SetGot,
        }
    }

    /// Raw operand words in encoding order.
    pub fn operands(&self) -> Vec<u32> {
        match *self {
            Instruction::LoadI(k) => {
                let bits = k as u64;
                vec![bits as u32, (bits >> 32) as u32]
            }
            Instruction::LoadS(i)
            | Instruction::LoadL(i)
            | Instruction::StoreL(i)
            | Instruction::LoadD(i)
            | Instruction::StoreD(i)
            | Instruction::LoadG(i)
            | Instruction::StoreG(i)
            | Instruction::Jz(i)
            | Instruction::Jmp(i) => vec![i],
            Instruction::LoadN(k) => vec![k as u32],
            Instruction::CallI { func, argc } => vec![func, argc],
            Instruction::CallX { plt, argc } => vec![plt, argc],
            Instruction::CallD { argc } => vec![argc],
            Instruction::FacJz { got, target } => vec![got, target],
            Instruction::Trap(code) => vec![code as u32],
            _ => Vec::new(),
        }
    }

    pub fn from_parts(op: Opcode, ops: &[u32]) -> Result<Instruction, OperandError> {
        debug_assert_eq!(ops.len(), op.operand_count());
        let a = ops.first().copied().unwrap_or(0);
        let b = ops.get(1).copied().unwrap_or(0);
        Ok(match op {
            Opcode::Halt => Instruction::Halt,
            Opcode::LoadI => Instruction::LoadI(((b as u64) << 32 | a as u64) as i64),
            Opcode::LoadS => Instruction::LoadS(a),
            Opcode::LoadN => {
                Instruction::LoadN(NullKind::from_u32(a).ok_or(OperandError::BadNullKind(a))?)
            }
            Opcode::LoadL => Instruction::LoadL(a),
            Opcode::StoreL => Instruction::StoreL(a),
            Opcode::LoadD => Instruction::LoadD(a),
            Opcode::StoreD => Instruction::StoreD(a),
            Opcode::LoadG => Instruction::LoadG(a),
            Opcode::StoreG => Instruction::StoreG(a),
            Opcode::Add => Instruction::Add,
            Opcode::Sub => Instruction::Sub,
            Opcode::Eq => Instruction::Eq,
            Opcode::Ne => Instruction::Ne,
            Opcode::Pop => Instruction::Pop,
            Opcode::Jz => Instruction::Jz(a),
            Opcode::Jmp => Instruction::Jmp(a),
            Opcode::CallI => Instruction::CallI { func: a, argc: b },
            Opcode::CallX => Instruction::CallX { plt: a, argc: b },
            Opcode::CallD => Instruction::CallD { argc: a },
            Opcode::FacJz => Instruction::FacJz { got: a, target: b },
            Opcode::Ret => Instruction::Ret,
            Opcode::PrintInt => Instruction::PrintInt,
            Opcode::PrintStr => Instruction::PrintStr,
            Opcode::DynOpen => Instruction::DynOpen,
            Opcode::DynSym => Instruction::DynSym,
            Opcode::DynClose => Instruction::DynClose,
            Opcode::Trap => {
                Instruction::Trap(TrapCode::from_u32(a).ok_or(OperandError::BadTrapCode(a))?)
            }
            Opcode::SetGot => Instruction::SetGot,
        })
    }

    /// Replace one operand word, keeping the opcode. Used by the link editor to
    /// patch relocation sites.
    pub fn with_operand(&self, idx: usize, value: u32) -> Option<Instruction> {
        let mut ops = self.operands();
        *ops.get_mut(idx)? = value;
        Instruction::from_parts(self.opcode(), &ops).ok()
    }

    /// Jump target, for instructions that branch.
    pub fn branch_target(&self) -> Option<u32> {
        match *self {
            Instruction::Jz(t) | Instruction::Jmp(t) => Some(t),
            Instruction::FacJz { target, .. } => Some(target),
            _ => None,
        }
    }

    /// Byte size of the encoded instruction.
    pub fn encoded_len(&self) -> usize {
        1 + 4 * self.opcode().operand_count()
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.opcode().mnemonic())?;
        match *self {
            Instruction::LoadI(k) => write!(f, " {k}"),
            Instruction::LoadN(k) => write!(f, " {k:?}"),
            Instruction::Trap(c) => write!(f, " {c}"),
            _ => {
                for op in self.operands() {
                    write!(f, " {op}")?;
                }
                Ok(())
            }
        }
    }
}
