//! Builders for the Hamiltonian families.
//!
//! Every builder validates its expression slots against the family's
//! admissible argument set at build time (a symbol outside the set silently
//! breaks integrability, so it is a hard error), substitutes subalgebra
//! Casimir symbols down to generator space, and returns the realized
//! Hamiltonian together with the extra integral the construction guarantees,
//! when there is one.

use std::collections::HashMap;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::algebra::{casimir_substitutions, generator_context, GeneratorId, SubalgebraName};
use crate::expr::{parse, Expr, SymbolContext};
use crate::poisson::Observable;
use crate::realization::{realize, PhaseState, RealizationParams};
use crate::{Error, Result};

/// Family tags as they appear in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Generic,
    Natural,
    Em,
    Geodesic,
    Subalgebra,
    Generator,
    HkGeodesic,
    AplusNatural,
    AplusEm,
    AplusGeodesic,
    AminusGeodesic,
    BminusGeodesic,
    BplusGeodesic,
    ForceExample,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Generic => "generic",
            Family::Natural => "natural",
            Family::Em => "em",
            Family::Geodesic => "geodesic",
            Family::Subalgebra => "subalgebra",
            Family::Generator => "generator",
            Family::HkGeodesic => "hk_geodesic",
            Family::AplusNatural => "aplus_natural",
            Family::AplusEm => "aplus_em",
            Family::AplusGeodesic => "aplus_geodesic",
            Family::AminusGeodesic => "aminus_geodesic",
            Family::BminusGeodesic => "bminus_geodesic",
            Family::BplusGeodesic => "bplus_geodesic",
            Family::ForceExample => "force_example",
        }
    }
}

/// Configuration-facing description of a Hamiltonian.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSpec {
    pub family: Option<Family>,
    /// Single-expression families (generic, subalgebra, generator).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subalgebra: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    /// Charge for the electromagnetic potential extraction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charge: Option<f64>,
    /// (alpha1, alpha2, alpha3) for the force example.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<[f64; 3]>,
    /// Constant coefficients for the B+ geodesic family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeffs: Option<[f64; 4]>,
}

/// A built Hamiltonian system: the realized observable, the guaranteed extra
/// integral when the construction provides one, and a provenance note.
#[derive(Debug, Clone)]
pub struct BuiltSystem {
    pub hamiltonian: Observable,
    pub extra_integral: Option<Observable>,
    pub note: String,
    /// True when H divides by an expression involving B+ (resp. B-); the
    /// integrator refuses to step into the corresponding singular set.
    pub guard_bp: bool,
    pub guard_bm: bool,
}

impl BuiltSystem {
    fn from_expr(
        expr: Expr,
        lambda: &RealizationParams,
        extra: Option<Observable>,
        note: String,
    ) -> BuiltSystem {
        let ctx = generator_context();
        let guard_bp = expr.divides_by_symbol(ctx.index_of("Bp").unwrap());
        let guard_bm = expr.divides_by_symbol(ctx.index_of("Bm").unwrap());
        BuiltSystem {
            hamiltonian: Observable::GeneratorExpr {
                expr,
                lambda: lambda.clone(),
            },
            extra_integral: extra,
            note,
            guard_bp,
            guard_bm,
        }
    }

    /// Generator-space expression of H, when H was built that way.
    pub fn hamiltonian_expr(&self) -> Option<&Expr> {
        match &self.hamiltonian {
            Observable::GeneratorExpr { expr, .. } => Some(expr),
            _ => None,
        }
    }
}

/// Electromagnetic potentials reproducing an `em`-family Hamiltonian as
/// (1/2)(p - eA)^2 + e psi.
#[derive(Debug, Clone, PartialEq)]
pub struct EMPotentials {
    pub a: [f64; 3],
    pub psi: f64,
    pub charge: f64,
}

// Admissible argument sets.

static POTENTIAL_ARGS: LazyLock<SymbolContext> =
    LazyLock::new(|| SymbolContext::new(&["Am", "Bm"]));

fn generator_family_context(x: GeneratorId) -> Result<&'static SymbolContext> {
    static K: LazyLock<SymbolContext> =
        LazyLock::new(|| SymbolContext::new(&["C_Dp", "C_Dm", "C_h4", "C_gl2", "K", "M"]));
    static AP: LazyLock<SymbolContext> = LazyLock::new(|| {
        SymbolContext::new(&["C_Dp", "C_h4", "C_Gp", "C_Gm", "C_E", "Ap", "Bp", "M"])
    });
    static AM: LazyLock<SymbolContext> = LazyLock::new(|| {
        SymbolContext::new(&["C_Dm", "C_h4", "C_Gp", "C_Gm", "C_E", "Am", "Bm", "M"])
    });
    static BM: LazyLock<SymbolContext> =
        LazyLock::new(|| SymbolContext::new(&["C_Dm", "C_Gm", "C_gl2", "Bm", "Am", "M"]));
    static BP: LazyLock<SymbolContext> =
        LazyLock::new(|| SymbolContext::new(&["C_Dp", "C_Gp", "C_gl2", "Bp", "Ap", "M"]));
    Ok(match x {
        GeneratorId::K => &K,
        GeneratorId::Ap => &AP,
        GeneratorId::Am => &AM,
        GeneratorId::Bm => &BM,
        GeneratorId::Bp => &BP,
        GeneratorId::M => {
            return Err(Error::InvalidParameter(
                "the central generator M gives no dynamical information".to_string(),
            ))
        }
    })
}

fn subalgebra_context(name: SubalgebraName) -> &'static SymbolContext {
    static DP: LazyLock<SymbolContext> =
        LazyLock::new(|| SymbolContext::new(&["K", "Ap", "Bp", "C_Dp"]));
    static DM: LazyLock<SymbolContext> =
        LazyLock::new(|| SymbolContext::new(&["K", "Am", "Bm", "C_Dm"]));
    static H4: LazyLock<SymbolContext> =
        LazyLock::new(|| SymbolContext::new(&["K", "Am", "Ap", "M", "C_h4"]));
    static GP: LazyLock<SymbolContext> =
        LazyLock::new(|| SymbolContext::new(&["Bp", "Am", "Ap", "M", "C_Gp"]));
    static GM: LazyLock<SymbolContext> =
        LazyLock::new(|| SymbolContext::new(&["Bm", "Am", "Ap", "M", "C_Gm"]));
    static E: LazyLock<SymbolContext> =
        LazyLock::new(|| SymbolContext::new(&["BE", "Am", "Ap", "M", "C_E"]));
    static GL2: LazyLock<SymbolContext> =
        LazyLock::new(|| SymbolContext::new(&["K", "Bm", "Bp", "M", "C_gl2"]));
    match name {
        SubalgebraName::Dp => &DP,
        SubalgebraName::Dm => &DM,
        SubalgebraName::H4 => &H4,
        SubalgebraName::Gp => &GP,
        SubalgebraName::Gm => &GM,
        SubalgebraName::E => &E,
        SubalgebraName::Gl2 => &GL2,
    }
}

/// Parse a slot against a family context, converting unknown symbols into
/// admissibility errors that name the family.
fn parse_slot(text: &str, ctx: &SymbolContext, family: &str) -> Result<Expr> {
    parse(text, ctx).map_err(|e| match e {
        Error::UnknownSymbol { name, .. } => Error::InadmissibleSymbol {
            symbol: name,
            family: family.to_string(),
        },
        other => other,
    })
}

/// Lower an expression over an extended context to generator space,
/// replacing Casimir symbols by their defining expressions.
fn lower(expr: &Expr, ctx: &SymbolContext, params: Option<(f64, f64)>) -> Result<Expr> {
    for e_symbol in ["C_E", "BE"] {
        if let Some(i) = ctx.index_of(e_symbol) {
            if expr.uses_symbol(i) && params.is_none() {
                return Err(Error::InvalidEParameters);
            }
        }
    }
    let map = casimir_substitutions(params)?;
    expr.substitute(ctx, generator_context(), &map)
}

fn gen_expr(text: &str) -> Expr {
    parse(text, generator_context()).expect("builtin expression must parse")
}

/// Any smooth function of the six generators: quasi-integrable only, no
/// extra integral attached.
pub fn build_generic(text: &str, lambda: &RealizationParams) -> Result<BuiltSystem> {
    let expr = parse_slot(text, generator_context(), "generic")?;
    Ok(BuiltSystem::from_expr(
        expr,
        lambda,
        None,
        "generic h6 Hamiltonian (quasi-integrable)".to_string(),
    ))
}

/// Natural system H = B+/2 + F(A-, B-). When F does not depend on A- the
/// system is a central potential and C_gl2 is attached as extra integral.
pub fn build_natural(f_text: &str, lambda: &RealizationParams) -> Result<BuiltSystem> {
    let f = parse_slot(f_text, &POTENTIAL_ARGS, "natural")?;
    let spherical = !f.uses_symbol(POTENTIAL_ARGS.index_of("Am").unwrap());
    let f_gen = lower(&f, &POTENTIAL_ARGS, None)?;
    let expr = Expr::add(gen_expr("0.5*Bp"), f_gen);
    let extra = spherical.then(|| Observable::SubalgebraCasimir {
        name: SubalgebraName::Gl2,
        lambda: lambda.clone(),
        params: None,
    });
    let note = if spherical {
        "natural system with central potential (gl(2) case): C_gl2 conserved".to_string()
    } else {
        "natural system on E^N (quasi-integrable)".to_string()
    };
    Ok(BuiltSystem::from_expr(expr, lambda, extra, note))
}

/// Electromagnetic-type Hamiltonian H = B+/2 + K F + A+ G + R with all
/// slots functions of (A-, B-).
pub fn build_em(
    f_text: &str,
    g_text: &str,
    r_text: &str,
    lambda: &RealizationParams,
) -> Result<BuiltSystem> {
    let [f, g, r] = parse_em_slots(f_text, g_text, r_text)?;
    let expr = Expr::add(
        gen_expr("0.5*Bp"),
        Expr::add(
            Expr::mul(gen_expr("K"), lower(&f, &POTENTIAL_ARGS, None)?),
            Expr::add(
                Expr::mul(gen_expr("Ap"), lower(&g, &POTENTIAL_ARGS, None)?),
                lower(&r, &POTENTIAL_ARGS, None)?,
            ),
        ),
    );
    Ok(BuiltSystem::from_expr(
        expr,
        lambda,
        None,
        "electromagnetic-type Hamiltonian (quasi-integrable)".to_string(),
    ))
}

fn parse_em_slots(f_text: &str, g_text: &str, r_text: &str) -> Result<[Expr; 3]> {
    Ok([
        parse_slot(f_text, &POTENTIAL_ARGS, "em")?,
        parse_slot(g_text, &POTENTIAL_ARGS, "em")?,
        parse_slot(r_text, &POTENTIAL_ARGS, "em")?,
    ])
}

/// Geodesic flow H = B+ F + A+^2 G + (K + M/2)^2 R + (K + M/2) A+ S, all
/// slots functions of (A-, B-), plus an optional potential U.
pub fn build_geodesic(
    f_text: &str,
    g_text: &str,
    r_text: &str,
    s_text: &str,
    u_text: Option<&str>,
    lambda: &RealizationParams,
) -> Result<BuiltSystem> {
    let low = |text: &str| -> Result<Expr> {
        let e = parse_slot(text, &POTENTIAL_ARGS, "geodesic")?;
        lower(&e, &POTENTIAL_ARGS, None)
    };
    let shift = gen_expr("K + M/2");
    let mut expr = Expr::add(
        Expr::mul(gen_expr("Bp"), low(f_text)?),
        Expr::add(
            Expr::mul(gen_expr("Ap^2"), low(g_text)?),
            Expr::add(
                Expr::mul(Expr::pow(shift.clone(), Expr::constant(2.0)), low(r_text)?),
                Expr::mul(Expr::mul(shift, gen_expr("Ap")), low(s_text)?),
            ),
        ),
    );
    let mut note = "geodesic flow (momentum-quadratic)".to_string();
    if let Some(u) = u_text {
        expr = Expr::add(expr, low(u)?);
        note = "geodesic flow with potential".to_string();
    }
    Ok(BuiltSystem::from_expr(expr, lambda, None, note))
}

/// Hamiltonian defined inside one of the Table 1 subalgebras; the realized
/// subalgebra Casimir is the extra integral.
pub fn build_subalgebra(
    name: SubalgebraName,
    text: &str,
    lambda: &RealizationParams,
    params: Option<(f64, f64)>,
) -> Result<BuiltSystem> {
    if name == SubalgebraName::E && params.is_none_or(|(mu, nu)| mu == 0.0 || nu == 0.0) {
        return Err(Error::InvalidEParameters);
    }
    let ctx = subalgebra_context(name);
    let family = format!("subalgebra[{name}]");
    let e = parse_slot(text, ctx, &family)?;
    let expr = lower(&e, ctx, params)?;
    let extra = Observable::SubalgebraCasimir {
        name,
        lambda: lambda.clone(),
        params,
    };
    Ok(BuiltSystem::from_expr(
        expr,
        lambda,
        Some(extra),
        format!("subalgebra {name} Hamiltonian: C_{name} conserved"),
    ))
}

/// Hamiltonian built from quantities commuting with a fixed generator X;
/// the realization of X itself is the extra integral.
pub fn build_generator_family(
    x: GeneratorId,
    text: &str,
    lambda: &RealizationParams,
    params: Option<(f64, f64)>,
) -> Result<BuiltSystem> {
    let ctx = generator_family_context(x)?;
    let family = format!("generator[{}]", x.name());
    let e = parse_slot(text, ctx, &family)?;
    build_generator_family_expr(x, &e, ctx, lambda, params)
}

fn build_generator_family_expr(
    x: GeneratorId,
    e: &Expr,
    ctx: &SymbolContext,
    lambda: &RealizationParams,
    params: Option<(f64, f64)>,
) -> Result<BuiltSystem> {
    let expr = lower(e, ctx, params)?;
    let extra = Observable::GeneratorExpr {
        expr: Expr::symbol(generator_context(), x.name())?,
        lambda: lambda.clone(),
    };
    Ok(BuiltSystem::from_expr(
        expr,
        lambda,
        Some(extra),
        format!("generator family: {} conserved", x.name()),
    ))
}

// Slot-filling presets over the generator-family validator.

fn preset_slot(
    text: &str,
    ctx: &SymbolContext,
    family: &str,
    target: &SymbolContext,
) -> Result<Expr> {
    let e = parse_slot(text, ctx, family)?;
    e.substitute(ctx, target, &HashMap::new())
}

/// Geodesic flows in involution with K:
/// H = C_gl2 F + (K + M/2)^2 G + C_h4^2 R + (K + M/2) C_h4 S, slots
/// functions of C_Dm.
pub fn build_hk_geodesic(
    f_text: &str,
    g_text: &str,
    r_text: &str,
    s_text: &str,
    lambda: &RealizationParams,
) -> Result<BuiltSystem> {
    static SLOT: LazyLock<SymbolContext> = LazyLock::new(|| SymbolContext::new(&["C_Dm"]));
    let ctx = generator_family_context(GeneratorId::K)?;
    let sym = |name: &str| Expr::symbol(ctx, name).unwrap();
    let shift = Expr::add(sym("K"), Expr::div(sym("M"), Expr::constant(2.0)));
    let e = Expr::add(
        Expr::mul(
            sym("C_gl2"),
            preset_slot(f_text, &SLOT, "hk_geodesic", ctx)?,
        ),
        Expr::add(
            Expr::mul(
                Expr::pow(shift.clone(), Expr::constant(2.0)),
                preset_slot(g_text, &SLOT, "hk_geodesic", ctx)?,
            ),
            Expr::add(
                Expr::mul(
                    Expr::pow(sym("C_h4"), Expr::constant(2.0)),
                    preset_slot(r_text, &SLOT, "hk_geodesic", ctx)?,
                ),
                Expr::mul(
                    Expr::mul(shift, sym("C_h4")),
                    preset_slot(s_text, &SLOT, "hk_geodesic", ctx)?,
                ),
            ),
        ),
    );
    build_generator_family_expr(GeneratorId::K, &e, ctx, lambda, None)
}

static APLUS_SLOT: LazyLock<SymbolContext> = LazyLock::new(|| SymbolContext::new(&["C_Gm"]));

/// Natural Hamiltonian with A+ conserved: H = B+/2 + F(C_Gm).
pub fn build_aplus_natural(f_text: &str, lambda: &RealizationParams) -> Result<BuiltSystem> {
    let ctx = generator_family_context(GeneratorId::Ap)?;
    let e = Expr::add(
        Expr::mul(Expr::constant(0.5), Expr::symbol(ctx, "Bp").unwrap()),
        preset_slot(f_text, &APLUS_SLOT, "aplus_natural", ctx)?,
    );
    build_generator_family_expr(GeneratorId::Ap, &e, ctx, lambda, None)
}

/// Electromagnetic Hamiltonian with A+ conserved:
/// H = B+/2 + C_h4 G(C_Gm) + A+ R(C_Gm) + F(C_Gm).
pub fn build_aplus_em(
    g_text: &str,
    r_text: &str,
    f_text: &str,
    lambda: &RealizationParams,
) -> Result<BuiltSystem> {
    let ctx = generator_family_context(GeneratorId::Ap)?;
    let sym = |name: &str| Expr::symbol(ctx, name).unwrap();
    let e = Expr::add(
        Expr::mul(Expr::constant(0.5), sym("Bp")),
        Expr::add(
            Expr::mul(
                sym("C_h4"),
                preset_slot(g_text, &APLUS_SLOT, "aplus_em", ctx)?,
            ),
            Expr::add(
                Expr::mul(
                    sym("Ap"),
                    preset_slot(r_text, &APLUS_SLOT, "aplus_em", ctx)?,
                ),
                preset_slot(f_text, &APLUS_SLOT, "aplus_em", ctx)?,
            ),
        ),
    );
    build_generator_family_expr(GeneratorId::Ap, &e, ctx, lambda, None)
}

/// Geodesic flow with A+ conserved:
/// H = C_h4^2 F + C_Gp G + B+ R + A+^2 S + A+ C_h4 T, slots functions of C_Gm.
pub fn build_aplus_geodesic(
    f_text: &str,
    g_text: &str,
    r_text: &str,
    s_text: &str,
    t_text: &str,
    lambda: &RealizationParams,
) -> Result<BuiltSystem> {
    let ctx = generator_family_context(GeneratorId::Ap)?;
    let sym = |name: &str| Expr::symbol(ctx, name).unwrap();
    let slot = |text: &str| preset_slot(text, &APLUS_SLOT, "aplus_geodesic", ctx);
    let e = Expr::add(
        Expr::mul(Expr::pow(sym("C_h4"), Expr::constant(2.0)), slot(f_text)?),
        Expr::add(
            Expr::mul(sym("C_Gp"), slot(g_text)?),
            Expr::add(
                Expr::mul(sym("Bp"), slot(r_text)?),
                Expr::add(
                    Expr::mul(Expr::pow(sym("Ap"), Expr::constant(2.0)), slot(s_text)?),
                    Expr::mul(Expr::mul(sym("Ap"), sym("C_h4")), slot(t_text)?),
                ),
            ),
        ),
    );
    build_generator_family_expr(GeneratorId::Ap, &e, ctx, lambda, None)
}

/// Geodesic flow with A- conserved: H = C_h4^2 F + C_Gp G, slots functions
/// of (C_Dm, C_Gm, A-, B-).
pub fn build_aminus_geodesic(
    f_text: &str,
    g_text: &str,
    lambda: &RealizationParams,
) -> Result<BuiltSystem> {
    static SLOT: LazyLock<SymbolContext> =
        LazyLock::new(|| SymbolContext::new(&["C_Dm", "C_Gm", "Am", "Bm"]));
    let ctx = generator_family_context(GeneratorId::Am)?;
    let sym = |name: &str| Expr::symbol(ctx, name).unwrap();
    let e = Expr::add(
        Expr::mul(
            Expr::pow(sym("C_h4"), Expr::constant(2.0)),
            preset_slot(f_text, &SLOT, "aminus_geodesic", ctx)?,
        ),
        Expr::mul(
            sym("C_Gp"),
            preset_slot(g_text, &SLOT, "aminus_geodesic", ctx)?,
        ),
    );
    build_generator_family_expr(GeneratorId::Am, &e, ctx, lambda, None)
}

/// Geodesic flow with B- conserved: H = C_gl2 F(C_Dm, C_Gm, B-, A-).
pub fn build_bminus_geodesic(f_text: &str, lambda: &RealizationParams) -> Result<BuiltSystem> {
    static SLOT: LazyLock<SymbolContext> =
        LazyLock::new(|| SymbolContext::new(&["C_Dm", "C_Gm", "Bm", "Am"]));
    let ctx = generator_family_context(GeneratorId::Bm)?;
    let e = Expr::mul(
        Expr::symbol(ctx, "C_gl2").unwrap(),
        preset_slot(f_text, &SLOT, "bminus_geodesic", ctx)?,
    );
    build_generator_family_expr(GeneratorId::Bm, &e, ctx, lambda, None)
}

/// The unique B+ geodesic family: H = a B+ + b A+^2 + c C_gl2 + d C_Gp with
/// constant coefficients.
pub fn build_bplus_geodesic(coeffs: [f64; 4], lambda: &RealizationParams) -> Result<BuiltSystem> {
    let ctx = generator_family_context(GeneratorId::Bp)?;
    let sym = |name: &str| Expr::symbol(ctx, name).unwrap();
    let [a, b, c, d] = coeffs;
    let e = Expr::add(
        Expr::mul(Expr::constant(a), sym("Bp")),
        Expr::add(
            Expr::mul(Expr::constant(b), Expr::pow(sym("Ap"), Expr::constant(2.0))),
            Expr::add(
                Expr::mul(Expr::constant(c), sym("C_gl2")),
                Expr::mul(Expr::constant(d), sym("C_Gp")),
            ),
        ),
    );
    build_generator_family_expr(GeneratorId::Bp, &e, ctx, lambda, None)
}

/// The cubic geodesic flow H = B+(a1 A- + a2 B- + a3) and its extra integral
/// found by direct computation. a2 = 0 reduces the integral to the G+
/// subalgebra Casimir (times -a1^2).
pub fn build_force_example(alpha: [f64; 3], lambda: &RealizationParams) -> Result<BuiltSystem> {
    let [a1, a2, a3] = alpha;
    if a1 == 0.0 || a3 == 0.0 {
        return Err(Error::InvalidParameter(
            "force example requires nonzero alpha1 and alpha3".to_string(),
        ));
    }
    let h = gen_expr(&format!("Bp*(({a1})*Am + ({a2})*Bm + ({a3}))"));
    let extra = gen_expr(&format!(
        "4*({a1})*({a2})*Ap*(K + M/2) + 4*({a2})*({a3})*Bp + 4*({a2})^2*K*(K + M) - ({a1})^2*(M*Bp - Ap^2)"
    ));
    let extra_obs = Observable::GeneratorExpr {
        expr: extra,
        lambda: lambda.clone(),
    };
    Ok(BuiltSystem::from_expr(
        h,
        lambda,
        Some(extra_obs),
        "force example: cubic geodesic flow with a directly computed integral".to_string(),
    ))
}

/// Extract the 3D electromagnetic potentials reproducing the em-family
/// Hamiltonian at a state: A_i = -(q_i F + lambda_i G)/e and the companion
/// scalar potential.
pub fn em_potentials(
    f_text: &str,
    g_text: &str,
    r_text: &str,
    s: &PhaseState,
    lambda: &RealizationParams,
    charge: f64,
) -> Result<EMPotentials> {
    if s.n() != 3 || lambda.n() != 3 {
        return Err(Error::InvalidParameter(
            "electromagnetic potentials are defined for N = 3".to_string(),
        ));
    }
    if charge == 0.0 {
        return Err(Error::InvalidParameter(
            "charge must be nonzero".to_string(),
        ));
    }
    let [f, g, r] = parse_em_slots(f_text, g_text, r_text)?;
    let point = realize(s, lambda)?;
    let args = [point.am, point.bm];
    let fv = f.eval(&POTENTIAL_ARGS, &args)?;
    let gv = g.eval(&POTENTIAL_ARGS, &args)?;
    let rv = r.eval(&POTENTIAL_ARGS, &args)?;
    let (q, l, m, bm, am) = (s.q(), lambda.lambda(), point.m, point.bm, point.am);
    let a = std::array::from_fn(|i| -(q[i] * fv + l[i] * gv) / charge);
    let psi = rv / charge
        - m * fv / (2.0 * charge)
        - (bm * fv * fv + 2.0 * am * fv * gv + m * gv * gv) / (2.0 * charge);
    Ok(EMPotentials { a, psi, charge })
}

/// Build a system from its configuration description.
pub fn build(
    spec: &HamiltonianSpec,
    lambda: &RealizationParams,
    params: Option<(f64, f64)>,
) -> Result<BuiltSystem> {
    let family = spec
        .family
        .ok_or_else(|| Error::Config("hamiltonian.family is required".to_string()))?;
    let slot = |name: &str, value: &Option<String>| -> Result<String> {
        value.clone().ok_or_else(|| {
            Error::Config(format!("family {} requires slot `{name}`", family.as_str()))
        })
    };
    let slot_or_zero = |value: &Option<String>| value.clone().unwrap_or_else(|| "0".to_string());
    match family {
        Family::Generic => build_generic(&slot("expr", &spec.expr)?, lambda),
        Family::Natural => build_natural(&slot("f", &spec.f)?, lambda),
        Family::Em => build_em(
            &slot_or_zero(&spec.f),
            &slot_or_zero(&spec.g),
            &slot_or_zero(&spec.r),
            lambda,
        ),
        Family::Geodesic => build_geodesic(
            &slot_or_zero(&spec.f),
            &slot_or_zero(&spec.g),
            &slot_or_zero(&spec.r),
            &slot_or_zero(&spec.s),
            spec.u.as_deref(),
            lambda,
        ),
        Family::Subalgebra => {
            let name = spec.subalgebra.as_deref().ok_or_else(|| {
                Error::Config("family subalgebra requires `subalgebra`".to_string())
            })?;
            build_subalgebra(
                SubalgebraName::from_str(name)?,
                &slot("expr", &spec.expr)?,
                lambda,
                params,
            )
        }
        Family::Generator => {
            let name = spec.generator.as_deref().ok_or_else(|| {
                Error::Config("family generator requires `generator`".to_string())
            })?;
            let x = GeneratorId::from_name(name)
                .ok_or_else(|| Error::Config(format!("unknown generator `{name}`")))?;
            build_generator_family(x, &slot("expr", &spec.expr)?, lambda, params)
        }
        Family::HkGeodesic => build_hk_geodesic(
            &slot_or_zero(&spec.f),
            &slot_or_zero(&spec.g),
            &slot_or_zero(&spec.r),
            &slot_or_zero(&spec.s),
            lambda,
        ),
        Family::AplusNatural => build_aplus_natural(&slot("f", &spec.f)?, lambda),
        Family::AplusEm => build_aplus_em(
            &slot_or_zero(&spec.g),
            &slot_or_zero(&spec.r),
            &slot_or_zero(&spec.f),
            lambda,
        ),
        Family::AplusGeodesic => build_aplus_geodesic(
            &slot_or_zero(&spec.f),
            &slot_or_zero(&spec.g),
            &slot_or_zero(&spec.r),
            &slot_or_zero(&spec.s),
            &slot_or_zero(&spec.t),
            lambda,
        ),
        Family::AminusGeodesic => {
            build_aminus_geodesic(&slot_or_zero(&spec.f), &slot_or_zero(&spec.g), lambda)
        }
        Family::BminusGeodesic => build_bminus_geodesic(&slot("f", &spec.f)?, lambda),
        Family::BplusGeodesic => {
            let coeffs = spec.coeffs.ok_or_else(|| {
                Error::Config("family bplus_geodesic requires `coeffs`".to_string())
            })?;
            build_bplus_geodesic(coeffs, lambda)
        }
        Family::ForceExample => {
            let alpha = spec.alpha.ok_or_else(|| {
                Error::Config("family force_example requires `alpha`".to_string())
            })?;
            build_force_example(alpha, lambda)
        }
    }
}
