//! Code emission for straight-line programs.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::poly::Symbols;
use crate::program::{Factor, Operand, Program, Rhs, Term, Value};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Dialect {
    /// `Z1_ = x^2*y`
    #[default]
    Plain,
    /// `Z1_ = x*x*y;`
    C,
    /// Fixed-form statements with continuation lines.
    Fortran,
}

/// How temporaries are named.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TempNaming {
    /// `<prefix><k>_`, e.g. `Z3_`.
    Scalar(String),
    /// `name(k)`, or `name[k]` in C.
    Array(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmitSettings {
    pub dialect: Dialect,
    pub temps: TempNaming,
    /// Spaces before each statement.
    pub indent: usize,
    /// Maximum line length; only enforced for Fortran.
    pub line_width: usize,
    /// Fortran: write constants as `3.D0`.
    pub double_suffix: bool,
    /// C and Fortran: powers up to this exponent become repeated
    /// multiplication, higher ones a power call or operator.
    pub power_threshold: u32,
    /// C: the routine called for higher powers.
    pub power_function: String,
}

impl EmitSettings {
    pub fn new(dialect: Dialect) -> Self {
        let (indent, double_suffix) = match dialect {
            Dialect::Plain => (0, false),
            Dialect::C => (4, false),
            Dialect::Fortran => (6, true),
        };
        EmitSettings {
            dialect,
            temps: TempNaming::Scalar("Z".into()),
            indent,
            line_width: 72,
            double_suffix,
            power_threshold: 3,
            power_function: "pow".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.line_width < 40 {
            return Err(Error::InvalidSetting(format!("line width {} is below 40", self.line_width)));
        }
        if self.dialect == Dialect::Fortran && self.indent + 10 > self.line_width {
            return Err(Error::InvalidSetting("indent leaves no room on the line".into()));
        }
        Ok(())
    }
}

impl Default for EmitSettings {
    fn default() -> Self {
        EmitSettings::new(Dialect::Plain)
    }
}

struct Renderer<'a> {
    symbols: &'a Symbols,
    settings: &'a EmitSettings,
}

impl Renderer<'_> {
    fn temp(&self, k: u32) -> String {
        match (&self.settings.temps, self.settings.dialect) {
            (TempNaming::Scalar(prefix), _) => format!("{}{}_", prefix, k),
            (TempNaming::Array(name), Dialect::C) => format!("{}[{}]", name, k),
            (TempNaming::Array(name), _) => format!("{}({})", name, k),
        }
    }

    fn operand(&self, o: Operand) -> String {
        match o {
            Operand::Var(v) => self.symbols.name(v).to_string(),
            Operand::Temp(t) => self.temp(t),
        }
    }

    fn constant(&self, c: &BigInt) -> String {
        match self.settings.dialect {
            Dialect::Fortran if self.settings.double_suffix => format!("{}.D0", c),
            Dialect::C if c.bits() > 31 => format!("{}.0", c),
            _ => c.to_string(),
        }
    }

    fn factor(&self, f: &Factor) -> String {
        let base = self.operand(f.operand);
        if f.exp == 1 {
            return base;
        }
        match self.settings.dialect {
            Dialect::Plain => format!("{}^{}", base, f.exp),
            _ if f.exp <= self.settings.power_threshold => vec![base; f.exp as usize].join("*"),
            Dialect::C => format!("{}({}, {})", self.settings.power_function, base, f.exp),
            Dialect::Fortran => format!("{}**{}", base, f.exp),
        }
    }

    fn product(&self, coeff: &BigInt, factors: &[Factor]) -> String {
        let mut s = String::new();
        if coeff.is_negative() {
            s.push('-');
        }
        let mag = coeff.abs();
        let body: Vec<String> = factors.iter().map(|f| self.factor(f)).collect();
        if !mag.is_one() || body.is_empty() {
            s.push_str(&self.constant(&mag));
            if !body.is_empty() {
                s.push('*');
            }
        }
        s.push_str(&body.join("*"));
        s
    }

    fn sum(&self, constant: &BigInt, terms: &[Term]) -> String {
        let mut s = String::new();
        for (i, t) in terms.iter().enumerate() {
            let neg = t.coeff.is_negative();
            match (i, neg) {
                (0, true) => s.push('-'),
                (0, false) => {}
                (_, true) => s.push_str(" - "),
                (_, false) => s.push_str(" + "),
            }
            let mag = t.coeff.abs();
            if !mag.is_one() {
                s.push_str(&self.constant(&mag));
                s.push('*');
            }
            s.push_str(&self.operand(t.operand));
        }
        if !constant.is_zero() || terms.is_empty() {
            match (terms.is_empty(), constant.is_negative()) {
                (true, true) => s.push('-'),
                (true, false) => {}
                (false, true) => s.push_str(" - "),
                (false, false) => s.push_str(" + "),
            }
            s.push_str(&self.constant(&constant.abs()));
        }
        s
    }

    fn rhs(&self, rhs: &Rhs) -> String {
        match rhs {
            Rhs::Sum { constant, terms } => self.sum(constant, terms),
            Rhs::Product { coeff, factors } => self.product(coeff, factors),
        }
    }

    fn value(&self, v: &Value) -> String {
        match v {
            Value::Const(c) if c.is_negative() => format!("-{}", self.constant(&c.abs())),
            Value::Const(c) => self.constant(c),
            Value::Operand(o) => self.operand(*o),
        }
    }

    fn statement(&self, lhs: &str, rhs: &str, out: &mut String) {
        let text = format!("{} = {}", lhs, rhs);
        let indent = " ".repeat(self.settings.indent);
        match self.settings.dialect {
            Dialect::Plain => writeln!(out, "{}{}", indent, text).unwrap(),
            Dialect::C => writeln!(out, "{}{};", indent, text).unwrap(),
            Dialect::Fortran => {
                let cont = format!("{:<width$}", "     &", width = self.settings.indent.max(6));
                wrap_fixed_form(&text, &indent, &cont, self.settings.line_width, out);
            }
        }
    }
}

/// Breaks a statement into lines of at most `width` columns, preferring
/// breaks after spaces and operators.
fn wrap_fixed_form(text: &str, first: &str, cont: &str, width: usize, out: &mut String) {
    let mut rest = text;
    let mut prefix = first;
    loop {
        let avail = width - prefix.len();
        if rest.len() <= avail {
            writeln!(out, "{}{}", prefix, rest).unwrap();
            return;
        }
        let window = &rest[..avail];
        let cut = window
            .rfind([' ', '+', '-', '*', ',', ')'])
            .map(|i| i + 1)
            .filter(|&i| i > avail / 2)
            .unwrap_or(avail);
        writeln!(out, "{}{}", prefix, rest[..cut].trim_end()).unwrap();
        rest = rest[cut..].trim_start();
        prefix = cont;
    }
}

/// One statement per instruction, then one per output. A single output that
/// reads the last instruction takes that instruction's right-hand side.
pub fn emit(prog: &Program, symbols: &Symbols, settings: &EmitSettings) -> String {
    let r = Renderer { symbols, settings };
    let mut out = String::new();
    let mut body = prog.instructions.as_slice();
    let mut inlined = None;
    if let ([output], Some(last)) = (prog.outputs.as_slice(), prog.instructions.last()) {
        if output.value == Value::Operand(Operand::Temp(last.target)) {
            body = &prog.instructions[..prog.instructions.len() - 1];
            inlined = Some(&last.rhs);
        }
    }
    for ins in body {
        r.statement(&r.temp(ins.target), &r.rhs(&ins.rhs), &mut out);
    }
    for o in &prog.outputs {
        let mut rhs = match inlined {
            Some(rhs) => r.rhs(rhs),
            None => r.value(&o.value),
        };
        if !o.denominator.is_one() {
            if matches!(inlined, Some(Rhs::Sum { .. })) {
                rhs = format!("({})", rhs);
            }
            rhs = format!("{}/{}", rhs, r.constant(&o.denominator));
        }
        r.statement(&o.name, &rhs, &mut out);
    }
    out
}

/// A comment line in the dialect's syntax.
pub fn emit_comment(text: &str, settings: &EmitSettings) -> String {
    match settings.dialect {
        Dialect::Plain => format!("# {}\n", text),
        Dialect::C => format!("/* {} */\n", text),
        Dialect::Fortran => {
            let mut out = String::new();
            wrap_fixed_form(text, "C     ", "C     ", settings.line_width, &mut out);
            out
        }
    }
}

/// The instructions last to first as `id Zk_ = ...;` lines. Replacing, in
/// this order, each temporary by its right-hand side turns the outputs back
/// into expressions in the variables.
pub fn emit_debug_substitutions(prog: &Program, symbols: &Symbols) -> String {
    let settings = EmitSettings::default();
    let r = Renderer { symbols, settings: &settings };
    let mut out = String::new();
    for ins in prog.instructions.iter().rev() {
        writeln!(out, "id {} = {};", r.temp(ins.target), r.rhs(&ins.rhs)).unwrap();
    }
    out
}
