//! The table of runnable checks.
//!
//! References cite the label of the statement being checked together with a short
//! formula anchor. Parameters are real-valued; integer-like ones are rounded.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Domain;
use crate::report::CheckMode;

/// One tunable parameter of a check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub doc: &'static str,
}

const fn param(name: &'static str, default: f64, doc: &'static str) -> ParamSpec {
    ParamSpec { name, default, doc }
}

/// Default domain of a check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    /// `[0,1]^n`.
    Unit(usize),
    /// `[0,1] × [0,2]` split into two one-axis blocks.
    BlockPair,
    /// `[0,1]^3` split into three one-axis blocks.
    BlockTriple,
}

impl DomainKind {
    pub fn build(self) -> Domain {
        let domain = match self {
            DomainKind::Unit(n) => Domain::unit(n),
            DomainKind::BlockPair => Domain::cube_product(&[0.0, 0.0], &[1.0, 2.0], &[1, 1]),
            DomainKind::BlockTriple => Domain::cube_product(&[0.0; 3], &[1.0; 3], &[1, 1, 1]),
        };
        domain.expect("catalog domains are valid")
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub title: &'static str,
    /// Label of the statement and a formula anchor.
    pub reference: &'static str,
    pub anchor: &'static str,
    /// Kind of the functional `a(R)` on the right-hand side (see `FunctionalSpec::kind`).
    pub functional: &'static str,
    pub mode: CheckMode,
    /// Explicit checks: relative slack on `lhs ≤ rhs`. Dimensional checks: allowed drift from `N/2` to `N`.
    pub tolerance: f64,
    pub domain: DomainKind,
    pub resolution: usize,
    pub weight: Option<&'static str>,
    pub params: &'static [ParamSpec],
}

impl CatalogEntry {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }
}

const DRIFT: f64 = 0.10;

use CheckMode::{Dimensional, Explicit};
use DomainKind::{BlockPair, BlockTriple, Unit};

const DEPTH2: ParamSpec = param("depth", 2.0, "levels of dyadic subrectangles tested below the root");
const DEPTH3: ParamSpec = param("depth", 3.0, "levels of dyadic subrectangles tested below the root");
const FAMILIES: ParamSpec = param("families", 100.0, "number of sampled disjoint families for norm estimates");

pub static CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        id: "P1",
        title: "(1,1)-Poincaré inequality with constant 1/2 on convex sets",
        reference: "eq:Poincare-(1,1)",
        anchor: "⨍|f − f_R| ≤ (1/2) d(R) ⨍|∇f|",
        functional: "gradient",
        mode: Explicit,
        tolerance: 0.02,
        domain: Unit(1),
        resolution: 512,
        weight: None,
        params: &[param("constant", 0.5, "constant in front of d(R)⨍|∇f|"), DEPTH3],
    },
    CatalogEntry {
        id: "P2",
        title: "unweighted higher-order (1,1) starting point",
        reference: "eq:HigherOrderPoincare-Unweighted",
        anchor: "⨍|f − P_R f| ≤ C d(R)^m ⨍|∇^m f|",
        functional: "gradient",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: Unit(2),
        resolution: 64,
        weight: None,
        params: &[param("order", 2.0, "derivative order m; P_R has degree m − 1"), DEPTH3],
    },
    CatalogEntry {
        id: "P3",
        title: "weighted higher-order starting point via Hölder",
        reference: "eq:HigherOrderPoincare-Weighted",
        anchor: "⨍|f − P_R f| ≤ C [w]_{A_p}^{1/p} d(R)^m ‖∇^m f‖_{L^p(w/w(R))}",
        functional: "gradient",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: Unit(2),
        resolution: 64,
        weight: Some("power:0.5"),
        params: &[param("order", 1.0, "derivative order m"), param("p", 2.0, "integrability exponent"), DEPTH3],
    },
    CatalogEntry {
        id: "F1",
        title: "rough fractional (1,1)-Poincaré inequality",
        reference: "eq:FracPI",
        anchor: "⨍|f − f_Q| ≤ c_n ℓ(Q)^δ ⨍_Q∫_Q |f(x)−f(y)|/|x−y|^{n+δ}",
        functional: "fractional",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: Unit(1),
        resolution: 1024,
        weight: None,
        params: &[param("delta", 0.5, "smoothness δ ∈ (0,1)"), DEPTH2],
    },
    CatalogEntry {
        id: "F2",
        title: "weak-type fractional Sobolev inequality",
        reference: "weaktypeSobolev",
        anchor: "‖f − f_Q‖_{L^{p*_δ,∞}} ≤ c_n p*_δ [f]_{W^{δ,p}(Q)}",
        functional: "fractional",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: Unit(1),
        resolution: 1024,
        weight: None,
        params: &[param("delta", 0.5, "smoothness δ"), param("p", 1.0, "exponent p < n/δ"), DEPTH2],
    },
    CatalogEntry {
        id: "F3",
        title: "fractional Poincaré inequality with the (1−δ)^{1/p} gain",
        reference: "thm:BBM, thm:FracSobGain",
        anchor: "⨍|f − f_Q| ≤ c_n (1−δ)^{1/p} [f]_{W^{δ,p}(Q)}",
        functional: "fractional",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: Unit(1),
        resolution: 1024,
        weight: None,
        params: &[
            param("delta", 0.5, "smoothness δ"),
            param("p", 1.0, "exponent p"),
            param("sobolev", 0.0, "1: measure f − f_Q in L^{p*_δ} with the extra factor p*_δ"),
            DEPTH2,
        ],
    },
    CatalogEntry {
        id: "F4",
        title: "A1-weighted fractional Poincaré–Sobolev inequality",
        reference: "thm: A1PSFractBBM",
        anchor: "‖f − f_Q‖_{L^{p*_{δ,w}}(w)} ≤ C (1−δ)^{1/p} [w]_{A_1}^{1/p} a(Q)",
        functional: "fractional",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: Unit(1),
        resolution: 1024,
        weight: Some("power:-0.5"),
        params: &[param("delta", 0.5, "smoothness δ"), param("p", 1.0, "exponent p"), DEPTH2],
    },
    CatalogEntry {
        id: "F5",
        title: "fractional seminorm dominated by the gradient",
        reference: "lem:oneparameterFractNabla",
        anchor: "ℓ^δ ⨍_Q∫_Q |f(t)−f(s)|/|t−s|^{n+δ} ≤ c_n/(δ(1−δ)) ℓ ⨍_Q|∇f|",
        functional: "fractional",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: Unit(1),
        resolution: 1024,
        weight: None,
        params: &[param("delta", 0.5, "smoothness δ"), param("alpha", 0.5, "Riesz order α ∈ (0, n) for the potential bound"), DEPTH2],
    },
    CatalogEntry {
        id: "S1",
        title: "strong self-improvement under SD_p^s(w)",
        reference: "thm:AutomejorastrongcR",
        anchor: "(1+s) max{‖a‖^s, 1}",
        functional: "measure",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: Unit(2),
        resolution: 64,
        weight: Some("constant"),
        params: &[
            param("delta", 1.0, "order δ of the measure functional"),
            param("p", 1.0, "exponent p"),
            param("degree", 0.0, "degree of the polynomial P_R"),
            DEPTH3,
            FAMILIES,
        ],
    },
    CatalogEntry {
        id: "S2",
        title: "weak self-improvement under D_p(w)",
        reference: "thm:AutomejoraweakcR",
        anchor: "p [w]_{A_∞} ‖a‖_{D_p(w)}",
        functional: "measure",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: Unit(2),
        resolution: 256,
        weight: Some("power:0.5"),
        params: &[
            param("delta", 1.0, "order δ of the measure functional"),
            param("p", 1.0, "exponent p"),
            param("degree", 0.0, "degree of the polynomial P_R"),
            param("shifts", 2.0, "shifted dyadic grids in the A_∞ estimate"),
            DEPTH3,
            FAMILIES,
        ],
    },
    CatalogEntry {
        id: "S3",
        title: "(p,p) higher-order weighted Poincaré inequality",
        reference: "cor:Poincare(pp)-higher",
        anchor: "C [w]_{A_p}^{1/p} ℓ^m ‖∇^m f‖_{L^p(w/w(Q))}",
        functional: "gradient",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: Unit(2),
        resolution: 64,
        weight: Some("power:0.5"),
        params: &[param("order", 1.0, "derivative order m"), param("p", 2.0, "exponent p"), DEPTH3],
    },
    CatalogEntry {
        id: "S4",
        title: "Poincaré–Sobolev at p*_w for nontrivial weights",
        reference: "thm:PoSo-Aq-diam-delta",
        anchor: "B_{w,q} C_n (1/δ) a(R)",
        functional: "measure",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: Unit(2),
        resolution: 64,
        weight: Some("product-power:-0.5"),
        params: &[
            param("delta", 1.0, "order δ"),
            param("p", 1.0, "exponent p"),
            param("q", 1.0, "Muckenhoupt index q ∈ [1, p]"),
            param("degree", 0.0, "degree of the polynomial P_R"),
            DEPTH3,
        ],
    },
    CatalogEntry {
        id: "S5",
        title: "weak Poincaré–Sobolev at p*_w for flat weights",
        reference: "thm:PoSo-Aq-diam-delta-weak, eq:p1*-importantEstimate",
        anchor: "c_n (1/δ) a(R)",
        functional: "measure",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: Unit(2),
        resolution: 256,
        weight: Some("1 + 0.5*x1"),
        params: &[
            param("delta", 1.0, "order δ"),
            param("p", 1.0, "exponent p"),
            param("q", 1.0, "Muckenhoupt index q ∈ [1, p]"),
            param("degree", 0.0, "degree of the polynomial P_R"),
            DEPTH3,
            param("families", 200.0, "sampled families for the e^{δ/n} claim"),
        ],
    },
    CatalogEntry {
        id: "S6",
        title: "m-derivative Poincaré–Sobolev corollary and truncation upgrade",
        reference: "cor:ptimes-Aq-m-derivatives, lem:App-Classic-Truncation",
        anchor: "(1/m) [w]_{A_q}^{1/p} d(R)^m ‖∇^m f‖_{L^p(w/w(R))}",
        functional: "gradient",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: Unit(2),
        resolution: 64,
        weight: Some("constant"),
        params: &[
            param("order", 1.0, "derivative order m"),
            param("p", 1.0, "exponent p"),
            param("q", 1.0, "Muckenhoupt index q ∈ [1, p]"),
            param("route_factor", 4.0, "allowed ratio between the truncation route and the direct strong constant"),
            DEPTH3,
        ],
    },
    CatalogEntry {
        id: "S7",
        title: "eccentricity-weighted fractional Poincaré–Sobolev corollary",
        reference: "cor:fractional",
        anchor: "(1/δ) [w]_{A_p}^{1/p} d(R)^δ / e(R)^{n/p}",
        functional: "fractional",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: Unit(2),
        resolution: 32,
        weight: Some("product-power:-0.5"),
        params: &[
            param("delta", 0.5, "smoothness δ"),
            param("p", 1.0, "exponent p"),
            param("q", 1.0, "Muckenhoupt index q ∈ [1, p]"),
            DEPTH2,
        ],
    },
    CatalogEntry {
        id: "D1",
        title: "self-improvement from an L^δ starting point to L^1",
        reference: "thm:delta-StartingPoint, DefX",
        anchor: "X ≲ max{‖a‖^s_{SD_1^s}, 1}",
        functional: "measure",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: Unit(2),
        resolution: 64,
        weight: None,
        params: &[param("delta", 0.5, "exponent δ ∈ (0,1) of the starting oscillation"), DEPTH3, FAMILIES],
    },
    CatalogEntry {
        id: "J1",
        title: "John–Nirenberg type estimate for M^d_R(f − P_R f)/M^♯ f",
        reference: "thm:TeoremacR, eq:John-NirenbergcR-general",
        anchor: "w_r(R) = |R| (⨍_R w^r)^{1/r};  ≤ c p r′",
        functional: "sharp-maximal",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: Unit(2),
        resolution: 64,
        weight: Some("power:0.5"),
        params: &[
            param("p", 2.0, "exponent p"),
            param("r", 2.0, "reverse Hölder exponent r > 1"),
            param("degree", 0.0, "degree of the polynomials in M^♯"),
            param("shifts", 2.0, "shifted dyadic grids in the A_∞ estimate"),
            param("depth", 4.0, "levels of the sharp maximal pool below each tested rectangle"),
        ],
    },
    CatalogEntry {
        id: "J2",
        title: "good-λ inequality with exponential decay",
        reference: "COROLARIOcR",
        anchor: "w({M^d_R(f − P_R f) > λ, M^♯ f ≤ γλ}) ≤ c_1 e^{−c_2/(γ[w])} w(R)",
        functional: "sharp-maximal",
        mode: Explicit,
        tolerance: 0.0,
        domain: Unit(2),
        resolution: 64,
        weight: Some("constant"),
        params: &[
            param("degree", 0.0, "degree of the polynomials in M^♯"),
            param("depth", 5.0, "levels of the sharp maximal pool"),
            param("gammas", 12.0, "number of γ values on the geometric grid 2·0.8^k"),
            param("min_quality", 0.9, "required coefficient of determination of the fit"),
            param("gamma", 0.0, "a single γ > 0 reports that level-set ratio instead of the fit"),
            param("shifts", 2.0, "shifted dyadic grids in the A_∞ estimate"),
        ],
    },
    CatalogEntry {
        id: "B1",
        title: "biparameter (1,1)-Poincaré inequality with side lengths",
        reference: "eq:PIsidelenght, pro:LW",
        anchor: "⨍|f − f_R| ≤ c ℓ(I_1)⨍|∇_1 f| + c ℓ(I_2)⨍|∇_2 f|",
        functional: "gradient",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: BlockPair,
        resolution: 64,
        weight: None,
        params: &[DEPTH2, param("route_factor", 4.0, "allowed ratio between the two derivation routes")],
    },
    CatalogEntry {
        id: "B2",
        title: "biparameter fractional (1,1)-Poincaré inequality",
        reference: "pro:1-1FPIproductSpaces, eq:sumaFract",
        anchor: "⨍|f − f_R| ≤ c_{n_1} a_1(R) + c_{n_2} a_2(R)",
        functional: "block-fractional",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: BlockPair,
        resolution: 64,
        weight: None,
        params: &[param("delta", 0.5, "smoothness δ in both blocks"), param("p", 1.0, "exponent p"), DEPTH2],
    },
    CatalogEntry {
        id: "B3",
        title: "biparameter fractional Poincaré inequality with gains",
        reference: "thm:BBMbiparametrico",
        anchor: "c_{n_1}(1−δ_1)^{1/p_1} a_1(R) + c_{n_2}(1−δ_2)^{1/p_2} a_2(R)",
        functional: "block-fractional",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: BlockPair,
        resolution: 64,
        weight: None,
        params: &[
            param("delta1", 0.5, "smoothness in block 1"),
            param("delta2", 0.75, "smoothness in block 2"),
            param("p1", 1.0, "exponent in block 1"),
            param("p2", 1.5, "exponent in block 2"),
            DEPTH2,
        ],
    },
    CatalogEntry {
        id: "B4",
        title: "multiparameter fractional Poincaré inequality on products of cubes",
        reference: "thm:BBM-multi-iparametrico",
        anchor: "Σ_i c_{n_i}(1−δ_i)^{1/p_i} a_i(R)",
        functional: "block-fractional",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: BlockTriple,
        resolution: 32,
        weight: None,
        params: &[param("delta", 0.5, "smoothness in every block"), param("p", 1.0, "exponent in every block"), param("depth", 1.0, "levels below the root")],
    },
    CatalogEntry {
        id: "B5",
        title: "biparameter weighted Poincaré–Sobolev inequality",
        reference: "thm:AutomejorastrongccR, lem:App-Bi-parameter-Truncation",
        anchor: "‖f − f_R‖_{L^{p*}(w)} ≤ c [w]_{A_p}^{1/p} (a_1(R) + a_2(R))",
        functional: "gradient",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: BlockPair,
        resolution: 64,
        weight: Some("product-power:-0.5"),
        params: &[param("p", 1.0, "exponent p"), param("q", 1.0, "Muckenhoupt index q ∈ [1, p]"), DEPTH3],
    },
    CatalogEntry {
        id: "B6",
        title: "biparameter A1-weighted fractional Poincaré–Sobolev inequality with gain",
        reference: "thm:AutomejorastrongBBM-A1-ccR",
        anchor: "c [w]_{A_1}^{1/p} (1−δ)^{1/p} (a_1(R) + a_2(R))",
        functional: "block-fractional",
        mode: Dimensional,
        tolerance: DRIFT,
        domain: BlockPair,
        resolution: 64,
        weight: Some("product-power:-0.5"),
        params: &[param("delta", 0.5, "smoothness δ"), param("p", 1.0, "exponent p"), DEPTH2],
    },
    CatalogEntry {
        id: "W1",
        title: "reverse Hölder inequality at ε = 1/(2^{n+1}[w]_{A_∞} − 1)",
        reference: "thm:Ainfty-RHI-cR",
        anchor: "⨍_R w^{1+ε} ≤ 2 (⨍_R w)^{1+ε}",
        functional: "weight",
        mode: Explicit,
        tolerance: 0.0,
        domain: Unit(2),
        resolution: 128,
        weight: None,
        params: &[param("depth", 6.0, "levels of dyadic rectangles tested"), param("shifts", 2.0, "shifted dyadic grids in the A_∞ estimate")],
    },
    CatalogEntry {
        id: "T1",
        title: "truncation: contraction, telescoping and the weak-to-strong layer-cake bound",
        reference: "lem:App-Classic-Truncation",
        anchor: "‖g‖_{L^p} ≤ 4 (Σ_k ‖T_k g‖^p_{L^{p,∞}})^{1/p}",
        functional: "truncation",
        mode: Explicit,
        tolerance: 1e-12,
        domain: Unit(1),
        resolution: 1024,
        weight: None,
        params: &[param("p", 2.0, "exponent of the layer-cake bound"), param("pairs", 1e6, "random pairs for the contraction test")],
    },
];

/// Looks up a catalog entry by id.
pub fn lookup(id: &str) -> Result<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.id == id).ok_or_else(|| Error::UnknownCheck {
        id: id.to_string(),
        valid: CATALOG.iter().map(|e| e.id).collect::<Vec<_>>().join(", "),
    })
}

/// All check ids in catalog order.
pub fn check_ids() -> Vec<&'static str> {
    CATALOG.iter().map(|e| e.id).collect()
}
