"""End-to-end construction with certificates, and the dimension-four demo."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.integrate import quad

from ._validation import InputError, check_grid_size, check_integer, check_positive
from .certificate import Certificate, Check, Section
from .fncore import PeriodicGridFunction
from .geometry import MetricData, ecs_certificate, isometry_residual, sample_points, signature
from .group import (GroupContext, SigmaLattice, act_on_M, act_on_RE, check_ncsuf, equivariant_map,
                    group_axiom_residuals, point_distance)
from .odespace import (DiagonalOperatorPath, InnerSpace, SolutionSpace, build_lattice, companion_basis,
                       companion_matrix, dim4_obstruction, lagrangian_residual, omega, translation_operator,
                       traceless_square_identity)
from .septuple import compatibility_residual, septuple_to_xrs, spec, xrs_to_rho_sigma, xrs_to_septuple
from .specsolve import cubic_roots, invert_spec, verify_lmn

logger = logging.getLogger(__name__)

STAGES = ("roots", "inverse-spec", "riccati", "monodromy", "lattice",
          "ncsuf", "group-axioms", "ecs", "isometry")
# stages whose outputs later stages consume; a failure here skips the rest
DATA_STAGES = {"roots", "inverse-spec", "riccati", "monodromy", "lattice"}

DEFAULT_TOLERANCES = {
    "spec_residual": 1e-9,
    "spec_path_gap": 1e-9,
    "nonconstancy": 1e-3,
    "riccati": 1e-7,
    "compatibility": 1e-8,
    "det": 1e-8,
    "integer": 1e-6,
    "omega_constancy": 1e-9,
    "omega_invariance": 1e-8,
    "lagrangian": 1e-9,
    "group": 1e-9,
    "equivariance": 1e-8,
    "isometry": 1e-7,
}


def parse_signs(text, j=None):
    """``"+++,+--"`` (or ``"1,1,1;-1,1,1"``) into ``j`` triples of +-1."""
    if isinstance(text, str):
        text = text.replace(" ", "")
        if text and set(text) <= set("+-,"):
            triples = [[1.0 if c == "+" else -1.0 for c in b] for b in text.split(",") if b]
        else:
            try:
                triples = [[float(x) for x in b.split(",")] for b in text.split(";") if b]
            except ValueError:
                raise InputError(f"cannot parse signs {text!r}") from None
    else:
        triples = [list(map(float, b)) for b in text]
    if any(len(t) != 3 for t in triples) or not triples:
        raise InputError(f"signs must be triples of +-1, got {text!r}")
    if any(v not in (1.0, -1.0) for t in triples for v in t):
        raise InputError(f"signs must be +-1, got {text!r}")
    if j is not None and len(triples) != j:
        raise InputError(f"need {j} sign triples, got {len(triples)}")
    return [[int(v) for v in t] for t in triples]


@dataclass
class BuildConfig:
    j: int = 1
    p: float = 1.0
    k: int = 5
    l: int = 6
    signs: list | None = None
    theta: float = 1.0
    eta: float = 0.3
    grid_n: int = 256
    seed: int = 42
    max_iter: int = 30
    ecs_points: int = 50
    isometry_elements: int = 10
    isometry_points: int = 100
    group_triples: int = 1000
    equivariance_pairs: int = 100
    symplectic_pairs: int = 20
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self):
        self.j = check_integer(self.j, "j")
        if self.j < 1:
            raise InputError("j must be at least 1")
        self.k = check_integer(self.k, "k")
        self.l = check_integer(self.l, "l")
        if not (2 <= self.k < self.l and 4 * self.l <= self.k * self.k):
            raise InputError(f"need 2 <= k < l <= k^2/4, got k={self.k}, l={self.l}")
        self.p = check_positive(self.p, "p")
        self.theta = check_positive(self.theta, "theta")
        self.eta = float(self.eta)
        if not np.isfinite(self.eta) or self.eta == 0:
            raise InputError("eta must be finite and nonzero")
        self.grid_n = check_grid_size(self.grid_n)
        self.seed = check_integer(self.seed, "seed")
        for name in ("max_iter", "ecs_points", "isometry_elements", "isometry_points",
                     "group_triples", "equivariance_pairs", "symplectic_pairs"):
            val = check_integer(getattr(self, name), name)
            if val < 1:
                raise InputError(f"{name} must be positive")
            setattr(self, name, val)
        self.signs = parse_signs(self.signs if self.signs is not None else [[1, 1, 1]] * self.j, self.j)
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise InputError(f"unknown tolerances {sorted(unknown)}")
        self.tolerances = {**DEFAULT_TOLERANCES, **{k: check_positive(v, k) for k, v in self.tolerances.items()}}
        return self

    @property
    def n(self):
        return 3 * self.j + 2

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        data = dict(data)
        if "N" in data:
            data["grid_n"] = data.pop("N")
        unknown = set(data) - known
        if unknown:
            raise InputError(f"unknown config fields {sorted(unknown)}")
        return cls(**data)

    def to_dict(self):
        return asdict(self)


def _tol_check(name, value, tol, below=True, **kw):
    value = float(value)
    ok = value < tol if below else value > tol
    return Check(name, value, tol, bool(ok), **kw)


# -- stages ---------------------------------------------------------------------


def _stage_roots(cfg, st):
    cs = cubic_roots(cfg.k, cfg.l)
    lam, mu, nu = cs.roots.as_array()
    k, l = cfg.k, cfg.l
    report = verify_lmn(cs.roots)
    st["cubic"] = cs
    brackets = min(lam - 1 / l, 1 - lam, mu - 1, k / 2 - mu, nu - k / 2, k - nu)
    checks = [
        _tol_check("bracket_margin", brackets, 0.0, below=False),
        _tol_check("product_minus_1", abs(lam * mu * nu - 1), 1e-12),
        _tol_check("sum_minus_k", abs(lam + mu + nu - k), 1e-10),
        _tol_check("pair_sum_minus_l", abs(lam * mu + lam * nu + mu * nu - l), 1e-10),
        _tol_check("lmn_min_margin", min(report.margins.values()), 0.0, below=False),
    ]
    return Section("roots", checks, extra={"roots": [lam, mu, nu]})


def _stage_inverse(cfg, st):
    tol = cfg.tolerances
    res = invert_spec(st["cubic"].roots, cfg.p, cfg.eta, n=cfg.grid_n, max_iter=cfg.max_iter)
    st["inversion"] = res
    sep = xrs_to_septuple(res.xrs)
    st["septuple"] = sep
    triple = spec(res.xrs)
    checks = [
        _tol_check("iterations", res.iterations, cfg.max_iter + 1),
        _tol_check("log_spec_residual", res.residual, tol["spec_residual"]),
        _tol_check("spec_path_gap", triple.path_gap, tol["spec_path_gap"]),
        _tol_check("f_range", sep.f_range(), tol["nonconstancy"], below=False),
    ]
    extra = {"x0": res.x0, "eta": res.eta, "r": res.xrs.r, "s": res.xrs.s,
             "newton_history": res.history, "delta_epsilon_zeta": [triple.delta, triple.epsilon, triple.zeta]}
    return Section("inverse-spec", checks, extra=extra)


def _stage_riccati(cfg, st):
    tol = cfg.tolerances
    sep = st["septuple"]
    xrs = st["inversion"].xrs
    res = sep.riccati_residuals()
    rho, sigma = xrs_to_rho_sigma(xrs)
    back = septuple_to_xrs(sep)
    a, b, c = sep.constants
    checks = [
        _tol_check("riccati_alpha", res[0], tol["riccati"]),
        _tol_check("riccati_beta", res[1], tol["riccati"]),
        _tol_check("riccati_gamma", res[2], tol["riccati"]),
        _tol_check("ordering_margin", sep.ordering_margin(), 0.0, below=False),
        _tol_check("constant_order_margin", min(a - b, c - b, abs(a - c)), 0.0, below=False),
        _tol_check("compatibility_ode", compatibility_residual(rho, sigma, xrs.r, xrs.s), tol["compatibility"]),
        _tol_check("round_trip", max((back.x - xrs.x).norm_inf(), abs(back.r - xrs.r), abs(back.s - xrs.s)),
                   tol["compatibility"]),
    ]
    path = DiagonalOperatorPath.from_blocks(sep, cfg.j)
    path.check_admissible(tol["riccati"])
    st["path"] = path
    st["inner"] = InnerSpace.from_blocks(cfg.signs)
    return Section("riccati", checks, extra={"a_b_c": [a, b, c], "f_min": sep.f.min(), "f_max": sep.f.max()})


def _stage_monodromy(cfg, st):
    tol = cfg.tolerances
    path, inner = st["path"], st["inner"]
    space = SolutionSpace(path)
    st["space"] = space
    T_closed = translation_operator(space, "closed")
    T_int = translation_operator(space, "integrate")
    det_int = float(np.linalg.det(T_int))
    det_formula = float(np.exp(-path.trace().integrate_period()))
    roots = np.tile(st["cubic"].roots.as_array(), cfg.j)
    nodes = np.arange(path.n) * (path.period / path.n)
    sv_min = float(np.min(np.linalg.svd(space.evaluation_matrix(nodes), compute_uv=False)))

    ctx = GroupContext(path, inner)
    st["ctx"] = ctx
    rng = np.random.default_rng([cfg.seed, 5])
    const_res, inv_res = 0.0, 0.0
    sysm = ctx.system
    for _ in range(cfg.symplectic_pairs):
        y1, y2 = rng.uniform(-1, 1, (2, 2 * path.dim))
        val, resid = omega(sysm.solution(y1), sysm.solution(y2), inner)
        const_res = max(const_res, resid / max(1.0, abs(val)))
        inv_res = max(inv_res, abs(ctx.omega(sysm.translate(y1, 1), sysm.translate(y2, 1)) - ctx.omega(y1, y2)))
    checks = [
        _tol_check("det_T_vs_exp_trace", abs(det_int - det_formula), tol["det"]),
        _tol_check("det_T_minus_1", abs(det_int - 1), tol["det"]),
        _tol_check("closed_vs_integrated", float(np.max(np.abs(T_closed - T_int))), tol["det"]),
        _tol_check("T_diag_vs_roots", float(np.max(np.abs(np.diag(T_closed) / roots - 1))), tol["det"]),
        _tol_check("evaluation_min_singular", sv_min, 1e-8, below=False),
        _tol_check("omega_constancy", const_res, tol["omega_constancy"]),
        _tol_check("omega_T_invariance", inv_res, tol["omega_invariance"]),
        _tol_check("lagrangian", lagrangian_residual(space, inner), tol["lagrangian"]),
    ]
    return Section("monodromy", checks, extra={"det_T": det_int})


def _stage_lattice(cfg, st):
    tol = cfg.tolerances
    cs = st["cubic"]
    V = companion_basis(cs.roots, cfg.k, cfg.l)
    lam = cs.roots.as_array()
    conj = V @ np.diag(lam) @ np.linalg.inv(V)
    block = SolutionSpace(DiagonalOperatorPath.from_blocks(st["septuple"], 1))
    lat = build_lattice(cfg.j, block, V)
    st["lattice"] = lat
    checks = [
        _tol_check("companion_conjugation", float(np.max(np.abs(conj - companion_matrix(cfg.k, cfg.l)))),
                   tol["integer"]),
        _tol_check("integer_residual", lat.integer_residual(), tol["integer"]),
        _tol_check("det_minus_1", abs(lat.det() - 1), tol["det"]),
        _tol_check("basis_det", abs(lat.basis_det()), 1e-10, below=False),
    ]
    return Section("lattice", checks, extra={"monodromy_int": np.rint(lat.monodromy_int).astype(int).tolist()})


def _stage_ncsuf(cfg, st):
    return check_ncsuf(st["path"], SigmaLattice(cfg.theta, st["lattice"]), st["inner"])


def _stage_group(cfg, st):
    tol = cfg.tolerances
    ctx = st["ctx"]
    rng = np.random.default_rng([cfg.seed, 7])
    res = group_axiom_residuals(ctx, rng, cfg.group_triples)
    checks = [_tol_check(name, val, tol["group"]) for name, val in res.items()]
    worst = 0.0
    for _ in range(cfg.equivariance_pairs):
        g = ctx.random_element(rng, in_L=True)
        w = ctx.system.from_first_order(rng.uniform(-1, 1, ctx.dim))
        y = (float(rng.uniform(0, cfg.p)), float(rng.uniform(-1, 1)), w)
        worst = max(worst, point_distance(equivariant_map(act_on_RE(g, y), ctx),
                                          act_on_M(g, equivariant_map(y, ctx))))
    checks.append(_tol_check("equivariance", worst, tol["equivariance"]))
    return Section("group-axioms", checks, extra={"triples": cfg.group_triples})


def _stage_ecs(cfg, st):
    md = MetricData.from_path(st["path"], st["inner"])
    st["metric"] = md
    rng = np.random.default_rng([cfg.seed, 11])
    sec = ecs_certificate(md, sample_points(md, rng, cfg.ecs_points))
    sec.extra["signature"] = list(signature(md))
    return sec


def _stage_isometry(cfg, st):
    tol = cfg.tolerances
    ctx = st["ctx"]
    md = st.get("metric") or MetricData.from_path(st["path"], st["inner"])
    rng = np.random.default_rng([cfg.seed, 13])
    worst = 0.0
    for _ in range(cfg.isometry_elements):
        g = ctx.random_element(rng, k_max=1)
        worst = max(worst, isometry_residual(md, g, sample_points(md, rng, cfg.isometry_points)))
    pts = sample_points(md, rng, cfg.isometry_points)
    checks = [
        _tol_check("random_elements", worst, tol["isometry"]),
        _tol_check("s_translation", isometry_residual(md, ctx.element(0, 1.0), pts), tol["isometry"]),
        _tol_check("t_translation", isometry_residual(md, ctx.element(1, 0.0), pts), tol["isometry"]),
    ]
    return Section("isometry", checks)


_RUNNERS = {
    "roots": _stage_roots, "inverse-spec": _stage_inverse, "riccati": _stage_riccati,
    "monodromy": _stage_monodromy, "lattice": _stage_lattice, "ncsuf": _stage_ncsuf,
    "group-axioms": _stage_group, "ecs": _stage_ecs, "isometry": _stage_isometry,
}


def build_ecs_bundle(cfg, stages=STAGES, return_state=False):
    """Run the construction stage by stage and certify each result.

    If a data-producing stage fails, every later stage is recorded as
    skipped (and so fails). Certification stages are independent of one
    another and all run.
    """
    if not isinstance(cfg, BuildConfig):
        cfg = BuildConfig.from_dict(cfg)
    state = {}
    sections = []
    blocked = None
    for name in stages:
        if blocked is not None:
            sections.append(Section.skip(name, f"skipped after failure in {blocked}"))
            continue
        try:
            sec = _RUNNERS[name](cfg, state)
        except (InputError, RuntimeError, np.linalg.LinAlgError) as exc:
            logger.warning("stage %s raised: %s", name, exc)
            sec = Section(name, error=f"{type(exc).__name__}: {exc}")
        sections.append(sec)
        if not sec.passed and name in DATA_STAGES:
            blocked = name
    cert = Certificate(cfg.to_dict(), sections)
    return (cert, state) if return_state else cert


# -- dimension four -------------------------------------------------------------

RHO_PRESETS = {"2+cos": [2.0, 1.0, 0.0]}


def rho_coefficients(rho_spec):
    if isinstance(rho_spec, str):
        if rho_spec in RHO_PRESETS:
            return list(RHO_PRESETS[rho_spec])
        try:
            return [float(x) for x in rho_spec.split(",")]
        except ValueError:
            raise InputError(f"unknown rho specification {rho_spec!r}") from None
    return [float(x) for x in rho_spec]


def _trig_eval(coeffs, p):
    c0, rest = coeffs[0], np.asarray(coeffs[1:]).reshape(-1, 2)

    def rho(t):
        out = c0
        for k, (a, b) in enumerate(rest, start=1):
            w = 2 * np.pi * k / p
            out = out + a * np.cos(w * t) + b * np.sin(w * t)
        return out

    return rho


def random_admissible_rho(rng, harmonics=2, max_mean=4.0):
    """Coefficients of a trigonometric polynomial with no zeros, either sign."""
    amp = rng.uniform(-1, 1, 2 * harmonics) * rng.uniform(0.1, 1.0)
    c0 = np.sum(np.abs(amp)) + rng.uniform(0.2, 1.0)
    c0 = min(c0, max_mean)
    amp *= (c0 - 0.1) / max(np.sum(np.abs(amp)), c0 - 0.1)
    sign = 1.0 if rng.uniform() < 0.5 else -1.0
    return list(sign * np.concatenate([[c0], amp]))


def dim4_demo(rho_spec="2+cos", r=1.0, p=1.0, n=256, seed=0, sweep=20, margin_tol=0.01,
              oracle_tol=1e-9, identity_samples=10):
    coeffs = rho_coefficients(rho_spec)
    if len(coeffs) % 2 == 0:
        raise InputError("rho coefficients must be [c0, a1, b1, ...]")
    p = check_positive(p, "p")
    r = float(r)
    if r == 0:
        raise InputError("r must be nonzero (A would vanish)")
    rho = PeriodicGridFunction.trig(coeffs, p, n)
    res = dim4_obstruction(rho, r, p)
    integral, _ = quad(lambda t: 1.0 / _trig_eval(coeffs, p)(t), 0.0, p, epsabs=1e-14, epsrel=1e-14, limit=200)
    oracle = float(np.exp(-r * integral))
    checks = [
        _tol_check("det_T_vs_quadrature", abs(res.detT - oracle), oracle_tol),
        _tol_check("margin", res.margin, margin_tol, below=False),
    ]
    rng = np.random.default_rng(seed)
    idents = [np.eye(2), np.array([[0.0, 1.0], [0.0, 0.0]])]
    idents += [rng.uniform(-10, 10, (2, 2)) for _ in range(identity_samples)]
    checks.append(_tol_check("traceless_square_identity", max(map(traceless_square_identity, idents)), 1e-12))
    margins = []
    for _ in range(sweep):
        cr = random_admissible_rho(rng)
        rr = float(rng.choice([-1, 1]) * rng.uniform(0.5, 2.0))
        margins.append(dim4_obstruction(PeriodicGridFunction.trig(cr, p, n), rr, p).margin)
    if margins:
        checks.append(_tol_check("sweep_min_margin", min(margins), margin_tol, below=False))
    sec = Section("dim4", checks, extra={"detT": res.detT, "detT_closed": res.detT_closed,
                                         "quadrature": oracle, "margin": res.margin,
                                         "sweep_margins": margins})
    config = {"rho": coeffs, "r": r, "p": p, "N": n, "seed": seed, "sweep": sweep}
    cert = Certificate(config, [sec])
    cert.verdict = "obstruction confirmed" if cert.passed else "obstruction not confirmed"
    return cert
