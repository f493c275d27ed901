//! The abstract h6 structure: generators, bracket table, Casimirs, the
//! Lie-Poisson bracket on generator space, and the subalgebra registry.

use std::collections::HashMap;
use std::fmt;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::expr::{parse, Expr, SymbolContext};
use crate::{Error, Result};

/// The six generators. `M` is central.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeneratorId {
    K,
    Ap,
    Am,
    Bp,
    Bm,
    M,
}

impl GeneratorId {
    pub const ALL: [GeneratorId; 6] = [
        GeneratorId::K,
        GeneratorId::Ap,
        GeneratorId::Am,
        GeneratorId::Bp,
        GeneratorId::Bm,
        GeneratorId::M,
    ];

    /// Index into the generator symbol context (and `H6Point::as_array`).
    pub fn index(self) -> usize {
        match self {
            GeneratorId::K => 0,
            GeneratorId::Ap => 1,
            GeneratorId::Am => 2,
            GeneratorId::Bp => 3,
            GeneratorId::Bm => 4,
            GeneratorId::M => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GeneratorId::K => "K",
            GeneratorId::Ap => "Ap",
            GeneratorId::Am => "Am",
            GeneratorId::Bp => "Bp",
            GeneratorId::Bm => "Bm",
            GeneratorId::M => "M",
        }
    }

    pub fn from_name(name: &str) -> Option<GeneratorId> {
        GeneratorId::ALL.iter().copied().find(|g| g.name() == name)
    }
}

/// A point of the 6-dimensional Poisson manifold: values of the generators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H6Point {
    pub k: f64,
    pub ap: f64,
    pub am: f64,
    pub bp: f64,
    pub bm: f64,
    pub m: f64,
}

impl H6Point {
    pub fn as_array(&self) -> [f64; 6] {
        [self.k, self.ap, self.am, self.bp, self.bm, self.m]
    }

    pub fn from_array(v: [f64; 6]) -> H6Point {
        H6Point {
            k: v[0],
            ap: v[1],
            am: v[2],
            bp: v[3],
            bm: v[4],
            m: v[5],
        }
    }

    pub fn get(&self, id: GeneratorId) -> f64 {
        self.as_array()[id.index()]
    }
}

/// Symbol context over the six generator names, in `GeneratorId` order.
pub fn generator_context() -> &'static SymbolContext {
    static CTX: LazyLock<SymbolContext> =
        LazyLock::new(|| SymbolContext::new(&["K", "Ap", "Am", "Bp", "Bm", "M"]));
    &CTX
}

fn parse_gen(text: &str) -> Expr {
    parse(text, generator_context()).expect("builtin generator expression must parse")
}

/// The full antisymmetric bracket table {X, Y} as expressions over the
/// generators.
static BRACKET_TABLE: LazyLock<[[Expr; 6]; 6]> = LazyLock::new(|| {
    let zero = || Expr::Const(0.0);
    let mut t: [[Expr; 6]; 6] = std::array::from_fn(|_| std::array::from_fn(|_| zero()));
    let upper: [(GeneratorId, GeneratorId, &str); 6] = [
        (GeneratorId::K, GeneratorId::Ap, "Ap"),
        (GeneratorId::K, GeneratorId::Am, "-Am"),
        (GeneratorId::Am, GeneratorId::Ap, "M"),
        (GeneratorId::K, GeneratorId::Bp, "2*Bp"),
        (GeneratorId::K, GeneratorId::Bm, "-2*Bm"),
        (GeneratorId::Bm, GeneratorId::Bp, "4*K + 2*M"),
    ];
    let mixed: [(GeneratorId, GeneratorId, &str); 2] = [
        (GeneratorId::Ap, GeneratorId::Bm, "-2*Am"),
        (GeneratorId::Am, GeneratorId::Bp, "2*Ap"),
    ];
    for (x, y, text) in upper.iter().chain(mixed.iter()) {
        let e = parse_gen(text);
        t[y.index()][x.index()] = Expr::neg(e.clone());
        t[x.index()][y.index()] = e;
    }
    // {A+,B+} = {A-,B-} = 0 and all brackets with M vanish: already zero.
    t
});

/// Bracket table entry {x, y}, antisymmetric by construction.
pub fn abstract_bracket(x: GeneratorId, y: GeneratorId) -> &'static Expr {
    &BRACKET_TABLE[x.index()][y.index()]
}

/// Lie-Poisson bracket of two generator-space expressions at a point:
/// sum over generator pairs of (de1/dX)(de2/dY){X,Y}(g).
pub fn lie_poisson_bracket(e1: &Expr, e2: &Expr, g: &H6Point) -> Result<f64> {
    let ctx = generator_context();
    let vals = g.as_array();
    let (_, d1) = e1.eval_with_gradient(ctx, &vals)?;
    let (_, d2) = e2.eval_with_gradient(ctx, &vals)?;
    let mut acc = 0.0;
    for x in 0..6 {
        for y in (x + 1)..6 {
            let coeff = d1[x] * d2[y] - d1[y] * d2[x];
            if coeff != 0.0 {
                acc += coeff * BRACKET_TABLE[x][y].eval(ctx, &vals)?;
            }
        }
    }
    Ok(acc)
}

/// The fourth-order Casimir C.
pub fn casimir_quartic() -> &'static Expr {
    static C: LazyLock<Expr> =
        LazyLock::new(|| parse_gen("(M*Bp - Ap^2)*(M*Bm - Am^2) - (M*K - Am*Ap + M^2/2)^2"));
    &C
}

/// The third-order invariant C_h6 = C / M.
pub fn casimir_h6() -> &'static Expr {
    static C: LazyLock<Expr> = LazyLock::new(|| {
        parse_gen("M*Bp*Bm - Bp*Am^2 - Bm*Ap^2 - M*(K + M/2)^2 + 2*Am*Ap*(K + M/2)")
    });
    &C
}

/// The seven subalgebras with a nontrivial Casimir.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubalgebraName {
    Dp,
    Dm,
    H4,
    Gp,
    Gm,
    E,
    Gl2,
}

impl SubalgebraName {
    pub const ALL: [SubalgebraName; 7] = [
        SubalgebraName::Dp,
        SubalgebraName::Dm,
        SubalgebraName::H4,
        SubalgebraName::Gp,
        SubalgebraName::Gm,
        SubalgebraName::E,
        SubalgebraName::Gl2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SubalgebraName::Dp => "Dp",
            SubalgebraName::Dm => "Dm",
            SubalgebraName::H4 => "h4",
            SubalgebraName::Gp => "Gp",
            SubalgebraName::Gm => "Gm",
            SubalgebraName::E => "E",
            SubalgebraName::Gl2 => "gl2",
        }
    }

    #[allow(clippy::should_implement_trait)] // fallible lookup keyed by config spelling
    pub fn from_str(name: &str) -> Result<SubalgebraName> {
        SubalgebraName::ALL
            .iter()
            .copied()
            .find(|s| s.as_str() == name)
            .ok_or_else(|| Error::UnknownSubalgebra(name.to_string()))
    }

    /// DSL symbol naming this subalgebra's Casimir.
    pub fn casimir_symbol(self) -> &'static str {
        match self {
            SubalgebraName::Dp => "C_Dp",
            SubalgebraName::Dm => "C_Dm",
            SubalgebraName::H4 => "C_h4",
            SubalgebraName::Gp => "C_Gp",
            SubalgebraName::Gm => "C_Gm",
            SubalgebraName::E => "C_E",
            SubalgebraName::Gl2 => "C_gl2",
        }
    }
}

impl fmt::Display for SubalgebraName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A registered subalgebra: its generators (as generator-space expressions,
/// the E entry uses the combined element mu*B+ + nu*B-) and its Casimir.
#[derive(Debug, Clone)]
pub struct SubalgebraDef {
    pub name: SubalgebraName,
    pub generator_names: Vec<String>,
    pub generators: Vec<Expr>,
    pub casimir: Expr,
    pub params: Option<(f64, f64)>,
}

/// Casimir of a subalgebra as a generator-space expression. E needs (mu, nu).
pub fn subalgebra_casimir_expr(name: SubalgebraName, params: Option<(f64, f64)>) -> Result<Expr> {
    let text = match name {
        SubalgebraName::Dp => "Ap^2/Bp".to_string(),
        SubalgebraName::Dm => "Am^2/Bm".to_string(),
        SubalgebraName::H4 => "M*(K + M/2) - Am*Ap".to_string(),
        SubalgebraName::Gp => "M*Bp - Ap^2".to_string(),
        SubalgebraName::Gm => "M*Bm - Am^2".to_string(),
        SubalgebraName::Gl2 => "Bm*Bp - (K + M/2)^2".to_string(),
        SubalgebraName::E => {
            let (mu, nu) = e_params(params)?;
            format!("M*(({mu})*Bp + ({nu})*Bm) - ({mu})*Ap^2 - ({nu})*Am^2")
        }
    };
    Ok(parse_gen(&text))
}

fn e_params(params: Option<(f64, f64)>) -> Result<(f64, f64)> {
    match params {
        Some((mu, nu)) if mu != 0.0 && nu != 0.0 => Ok((mu, nu)),
        _ => Err(Error::InvalidEParameters),
    }
}

/// Look up a subalgebra from Table 1. `params` is required for E only.
pub fn subalgebra(name: SubalgebraName, params: Option<(f64, f64)>) -> Result<SubalgebraDef> {
    let gens: Vec<&str> = match name {
        SubalgebraName::Dp => vec!["K", "Ap", "Bp"],
        SubalgebraName::Dm => vec!["K", "Am", "Bm"],
        SubalgebraName::H4 => vec!["K", "Am", "Ap", "M"],
        SubalgebraName::Gp => vec!["Bp", "Am", "Ap", "M"],
        SubalgebraName::Gm => vec!["Bm", "Am", "Ap", "M"],
        SubalgebraName::E => vec!["BE", "Am", "Ap", "M"],
        SubalgebraName::Gl2 => vec!["K", "Bm", "Bp", "M"],
    };
    let stored = if name == SubalgebraName::E {
        Some(e_params(params)?)
    } else {
        None
    };
    let generators = gens
        .iter()
        .map(|g| {
            if *g == "BE" {
                let (mu, nu) = stored.expect("validated above");
                Ok(parse_gen(&format!("({mu})*Bp + ({nu})*Bm")))
            } else {
                Expr::symbol(generator_context(), g)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SubalgebraDef {
        name,
        generator_names: gens.iter().map(|s| s.to_string()).collect(),
        generators,
        casimir: subalgebra_casimir_expr(name, stored)?,
        params: stored,
    })
}

/// Substitution table mapping extended DSL symbols (subalgebra Casimirs and
/// the combined E generator) to generator-space expressions.
pub fn casimir_substitutions(params: Option<(f64, f64)>) -> Result<HashMap<&'static str, Expr>> {
    let mut map = HashMap::new();
    for name in [
        SubalgebraName::Dp,
        SubalgebraName::Dm,
        SubalgebraName::H4,
        SubalgebraName::Gp,
        SubalgebraName::Gm,
        SubalgebraName::Gl2,
    ] {
        map.insert(name.casimir_symbol(), subalgebra_casimir_expr(name, None)?);
    }
    if let Some((mu, nu)) = params {
        map.insert(
            "C_E",
            subalgebra_casimir_expr(SubalgebraName::E, Some((mu, nu)))?,
        );
        map.insert("BE", parse_gen(&format!("({mu})*Bp + ({nu})*Bm")));
    }
    Ok(map)
}
