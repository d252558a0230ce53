"""Experiment configuration files.

A configuration is an INI document with the sections ``[plant]``, ``[cost]``,
``[basis]``, ``[identifier]``, ``[adp]``, ``[analysis]`` and ``[sim]``. Values
are Python literals (numbers, lists, nested lists for matrices, ``true`` /
``false`` for flags). Unknown keys and missing required keys are rejected with
the offending ``[section].key`` named in the message.
"""

import ast
import configparser
import dataclasses
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import adp, analysis
from ._validation import ContractError, check_matrix, check_spd, check_vector
from .basis import make_polynomial_basis
from .identifier import DEFAULT_RANK_THRESHOLD, IdentifierGains
from .oracle import LqrOracle
from .plant import CATALOG, CostSpec, make_model
from .sim import Problem, SimConfig

REQUIRED = object()


class ConfigError(ContractError):
    """A configuration file is unreadable, malformed or violates an invariant."""


def _literal(text):
    low = text.strip().lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", ""):
        return None
    return ast.literal_eval(text.strip())


def _num(value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ContractError("expected a number")
    if not np.isfinite(value):
        raise ContractError("must be finite")
    return float(value)


def _pos(value):
    value = _num(value)
    if value <= 0:
        raise ContractError("must be positive")
    return value


def _nonneg(value):
    value = _num(value)
    if value < 0:
        raise ContractError("must be nonnegative")
    return value


def _count(value):
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ContractError("must be a positive integer")
    return value


def _flag(value):
    if not isinstance(value, bool):
        raise ContractError("must be true or false")
    return value


def _array(value):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ContractError("must be finite")
    return arr


def _text(value):
    if not isinstance(value, str):
        raise ContractError("must be a quoted string")
    return value


def _optional(conv):
    return lambda v: None if v is None else conv(v)


# key -> (converter, default); REQUIRED marks keys without a default
SCHEMA = {
    "plant": {
        "name": (_text, REQUIRED),
        "a": (_num, None),
        "b": (_num, None),
        "A": (_array, None),
        "B": (_array, None),
        "K0": (_array, None),
        "theta": (_array, None),
    },
    "cost": {
        "Q": (_array, REQUIRED),
        "R": (_array, REQUIRED),
    },
    "basis": {
        "degrees": (lambda v: [int(d) for d in np.atleast_1d(v)], REQUIRED),
    },
    "identifier": {
        "k_x": (_array, REQUIRED),
        "Gamma_theta": (_array, REQUIRED),
        "k_theta": (_nonneg, REQUIRED),
    },
    "adp": {
        "eta_c1": (_pos, REQUIRED),
        "eta_c2": (_pos, REQUIRED),
        "eta_a1": (_pos, REQUIRED),
        "eta_a2": (_nonneg, REQUIRED),
        "nu": (_pos, REQUIRED),
        "beta": (_pos, REQUIRED),
        "Gamma_bar": (_pos, REQUIRED),
        "Gamma_under": (_pos, REQUIRED),
        "n_samples": (_count, REQUIRED),
        "sample_lower": (_array, REQUIRED),
        "sample_upper": (_array, REQUIRED),
        "sample_method": (_text, "auto"),
        "sample_jitter": (_nonneg, 0.0),
    },
    "analysis": {
        "W_bar": (_optional(_nonneg), None),
        "eps_bar": (_nonneg, 0.0),
        "eps_prime_bar": (_nonneg, 0.0),
        "Z_bar": (_optional(_pos), None),
        "zeta1": (_pos, 1.0),
        "zeta2": (_pos, 1.0),
        "resolution": (_count, analysis.DEFAULT_RESOLUTION),
        "y_under": (_optional(_num), None),
        "c_under": (_optional(_num), None),
    },
    "sim": {
        "x0": (_array, REQUIRED),
        "thetahat0": (_array, REQUIRED),
        "xhat0": (_optional(_array), None),
        "Wc0": (_optional(_array), None),
        "Wa0": (_optional(_array), None),
        "Gamma0": (_array, 1.0),
        "dt": (_pos, 0.005),
        "t_final": (_nonneg, 20.0),
        "record_interval": (_count, 10),
        "rank_check_interval": (_count, 10),
        "log_interval": (_count, 10),
        "seed": (lambda v: int(_nonneg(v)), 0),
        "exact_derivatives": (_flag, False),
        "freeze_stack_after_rank": (_flag, False),
        "identifier_only": (_flag, False),
        "stack_capacity": (_optional(_count), None),
        "rank_threshold": (_pos, DEFAULT_RANK_THRESHOLD),
        "c_threshold": (_pos, adp.DEFAULT_C_THRESHOLD),
    },
}

PLANT_KEYS = {"scalar": ("a", "b"), "linear": ("A", "B", "K0"), "double_integrator": (),
              "polynomial": ("theta",), "oscillator": ("theta",)}


def _fail(section, key, message):
    raise ConfigError(f"[{section}].{key}: {message}")


def _read_sections(parser):
    raw = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"[{section}]: unknown section; expected one of {sorted(SCHEMA)}")
    for section, keys in SCHEMA.items():
        items = dict(parser.items(section)) if parser.has_section(section) else {}
        for key in items:
            if key not in keys:
                _fail(section, key, "unknown key")
        values = {}
        for key, (conv, default) in keys.items():
            if key not in items:
                if default is REQUIRED:
                    _fail(section, key, "missing required key")
                values[key] = default
                continue
            try:
                values[key] = conv(_literal(items[key]))
            except (ValueError, SyntaxError, TypeError) as exc:
                _fail(section, key, str(exc) or "cannot parse value")
        raw[section] = values
    return raw


def _new_parser():
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case sensitive (Q vs q)
    return parser


@dataclass
class ExperimentConfig:
    """A validated experiment: built module objects plus analysis settings.

    Attributes
    ----------
    model, cost, basis, id_gains, adp_gains
        Module objects built from the file.
    sim : SimConfig
    sample_spec : dict
        Arguments for ``adp.sample_box_points`` (the seed comes from ``sim``).
    analysis : dict
        The ``[analysis]`` section with defaults resolved, except that
        ``W_bar`` and ``Z_bar`` may still be None (see ``gain_inputs``).
    raw : dict
        The parsed sections, kept for reporting.
    """

    model: object
    cost: CostSpec
    basis: object
    id_gains: IdentifierGains
    adp_gains: adp.AdpGains
    sim: SimConfig
    sample_spec: dict
    analysis: dict
    raw: dict

    @property
    def Z_bar(self):
        z = self.analysis["Z_bar"]
        return 2.0 * float(np.linalg.norm(self.sim.x0)) if z is None else z

    def with_seed(self, seed):
        """Copy with the simulation seed replaced."""
        return dataclasses.replace(self, sim=dataclasses.replace(self.sim, seed=int(seed)))

    def sample_set(self):
        spec = self.sample_spec
        pts = adp.sample_box_points(spec["lower"], spec["upper"], spec["N"],
                                    method=spec["method"], seed=self.sim.seed,
                                    jitter=spec["jitter"])
        return adp.SamplePointSet.from_points(pts, self.basis, self.model, self.cost,
                                              radius=self.Z_bar)

    def problem(self):
        return Problem(self.model, self.cost, self.basis, self.id_gains, self.adp_gains,
                       self.sample_set())

    def oracle(self):
        """The LQR oracle, or None when the plant/basis pair has none."""
        try:
            return LqrOracle.from_model(self.model, self.cost, self.basis)
        except ContractError:
            return None

    def gain_inputs(self):
        """``GainInputs`` with Lipschitz constants estimated on the ball.

        ``W_bar`` defaults to the oracle's ``|W*|`` and must be set explicitly
        when no oracle exists.
        """
        a = self.analysis
        W_bar = a["W_bar"]
        if W_bar is None:
            orc = self.oracle()
            if orc is None:
                raise ConfigError("[analysis].W_bar: required when the plant has no LQR oracle")
            W_bar = float(np.linalg.norm(orc.W_star))
        L_f, L_Y = analysis.estimate_lipschitz(self.model, self.Z_bar, a["resolution"])
        return analysis.GainInputs(
            W_bar=W_bar, eps_bar=a["eps_bar"], eps_prime_bar=a["eps_prime_bar"],
            L_f=L_f, L_Y=L_Y, Z_bar=self.Z_bar, adp_gains=self.adp_gains,
            id_gains=self.id_gains, zeta1=a["zeta1"], zeta2=a["zeta2"],
            y_under=a["y_under"], c_under=a["c_under"])


def _build(raw):
    pl = raw["plant"]
    name = pl["name"]
    if name not in CATALOG:
        _fail("plant", "name", f"unknown plant {name!r}; choose from {sorted(CATALOG)}")
    allowed = PLANT_KEYS[name]
    params = {}
    for key in ("a", "b", "A", "B", "K0", "theta"):
        if pl[key] is None:
            continue
        if key not in allowed:
            _fail("plant", key, f"not a parameter of plant {name!r}")
        params[key] = pl[key]
    try:
        model = make_model(name, **params)
    except (ContractError, ValueError, TypeError) as exc:
        raise ConfigError(f"[plant]: {exc}") from None
    n, m, p = model.n, model.m, model.p

    c = raw["cost"]
    try:
        Q = check_matrix(c["Q"], (n, n), "Q")
        check_spd(Q, "Q")
    except ContractError as exc:
        _fail("cost", "Q", exc)
    try:
        R = check_matrix(c["R"], (m, m), "R")
        check_spd(R, "R")
    except ContractError as exc:
        _fail("cost", "R", exc)
    cost = CostSpec(Q, R)

    try:
        basis = make_polynomial_basis(n, raw["basis"]["degrees"])
    except ContractError as exc:
        _fail("basis", "degrees", exc)

    idr = raw["identifier"]
    kx = idr["k_x"]
    kx = np.full(n, float(kx)) if kx.ndim == 0 else kx
    try:
        kx = check_vector(np.diag(kx) if kx.ndim == 2 else kx, n, "k_x")
        if np.any(kx <= 0):
            raise ContractError("k_x must be positive")
    except ContractError as exc:
        _fail("identifier", "k_x", exc)
    Gt = idr["Gamma_theta"]
    try:
        Gt = Gt * np.eye(p) if Gt.ndim == 0 else check_matrix(Gt, (p, p), "Gamma_theta")
        check_spd(Gt, "Gamma_theta")
    except ContractError as exc:
        _fail("identifier", "Gamma_theta", exc)
    id_gains = IdentifierGains(k_x=kx, Gamma_theta=Gt, k_theta=idr["k_theta"])

    ad = raw["adp"]
    if ad["Gamma_under"] > ad["Gamma_bar"]:
        _fail("adp", "Gamma_under", "must not exceed Gamma_bar")
    adp_gains = adp.AdpGains(**{k: ad[k] for k in ("eta_c1", "eta_c2", "eta_a1", "eta_a2",
                                                 "nu", "beta", "Gamma_bar", "Gamma_under")})
    sample_spec = {"N": ad["n_samples"], "method": ad["sample_method"],
                   "jitter": ad["sample_jitter"]}
    for key, field_name in (("sample_lower", "lower"), ("sample_upper", "upper")):
        val = ad[key]
        try:
            sample_spec[field_name] = (np.full(n, float(val)) if val.ndim == 0
                                       else check_vector(val, n, key))
        except ContractError as exc:
            _fail("adp", key, exc)
    if np.any(sample_spec["upper"] <= sample_spec["lower"]):
        _fail("adp", "sample_upper", "must exceed sample_lower in every coordinate")
    if sample_spec["method"] not in ("auto", "lattice", "halton"):
        _fail("adp", "sample_method", "must be 'auto', 'lattice' or 'halton'")

    s = dict(raw["sim"])
    sizes = {"x0": n, "xhat0": n, "thetahat0": p, "Wc0": basis.L, "Wa0": basis.L}
    for key, size in sizes.items():
        if s[key] is not None:
            try:
                s[key] = check_vector(s[key], size, key)
            except ContractError as exc:
                _fail("sim", key, exc)
    G0 = np.asarray(s["Gamma0"], dtype=float)
    try:
        G0 = float(G0) if G0.ndim == 0 else check_matrix(G0, (basis.L, basis.L), "Gamma0")
        G0m = G0 * np.eye(basis.L) if np.ndim(G0) == 0 else G0
        check_spd(G0m, "Gamma0")
        if np.linalg.norm(G0m, 2) > adp_gains.Gamma_bar * (1 + 1e-12):
            raise ContractError("norm exceeds [adp].Gamma_bar")
    except ContractError as exc:
        _fail("sim", "Gamma0", exc)
    s["Gamma0"] = G0
    if s["t_final"] > 0 and s["t_final"] < s["dt"]:
        _fail("sim", "t_final", "must be at least dt")
    sim = SimConfig(**s)

    cfg = ExperimentConfig(model=model, cost=cost, basis=basis, id_gains=id_gains,
                           adp_gains=adp_gains, sim=sim, sample_spec=sample_spec,
                           analysis=dict(raw["analysis"]), raw=raw)
    box_corner = np.maximum(np.abs(sample_spec["lower"]), np.abs(sample_spec["upper"]))
    if np.linalg.norm(box_corner) > cfg.Z_bar * (1 + 1e-12):
        key = "Z_bar" if raw["analysis"]["Z_bar"] is not None else "Z_bar (default 2|x0|)"
        _fail("analysis", key, "the sample box must lie inside the ball of radius Z_bar")
    if np.linalg.norm(sim.x0) > cfg.Z_bar:
        _fail("analysis", "Z_bar", "x0 lies outside the ball of radius Z_bar")
    return cfg


def parse_config_string(text):
    """Parse configuration text; see ``parse_config``."""
    parser = _new_parser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    return _build(_read_sections(parser))


def parse_config(path):
    """Read and validate a configuration file.

    Raises
    ------
    ConfigError
        Naming the first offending ``[section].key``.
    OSError
        If the file cannot be read.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config_string(text)


def shipped_config(name):
    """Path of a configuration shipped with the package (e.g. ``"scalar_lqr.cfg"``)."""
    return resources.files("cladp") / "configs" / name
