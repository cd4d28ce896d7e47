"""Run configuration: JSON parsing, defaults, tolerance registry and seeded
generation of admissible inhomogeneities."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .model import ModelParams

MAX_N_HARD = 8
MAX_N_OBSERVABLES = 5

DEFAULT_TOLERANCES: dict[str, float] = {
    "sov_measure": 1e-9,
    "tq_residual": 1e-7,
    "bethe_residual": 1e-9,
    "discrete_char": 1e-8,
    "eigenstate_residual": 1e-8,
    "negation_closure": 1e-9,
    "isospectral": 1e-9,
    "cross_representation": 1e-7,
    "oracle_comparison": 1e-7,
    "orthogonality": 1e-8,
    "product_identity": 1e-7,
    "product_entrywise": 1e-8,
    "pm_equality": 1e-8,
    "inverse_problem": 1e-8,
    "identity_bench": 1e-9,
    "extension_limit": 1e-6,
    "wronskian": 1e-8,
    "sum_rule": 1e-8,
    "sov_actions": 1e-8,
    "lattice_residual": 1e-10,
}

DEFAULT_REPRESENTATIONS = ("direct", "izergin", "slavnov", "tau_izergin", "tau_slavnov")

DEFAULT_CONFIG: dict = {
    "schema": 1,
    "n": 3,
    "eta": [0.6, 0.35],
    "xi": {
        "seed": 7,
        "box": {"re_range": [-1.0, 1.0], "im_range": [-0.4, 0.4]},
        "min_separation": 0.1,
    },
    "kappa": [1.0, 0.0],
    "kappa_prime": [1.3, 0.2],
    "sites": None,          # defaults to 1..n
    "operators": ["z", "+", "-"],
    "representations": list(DEFAULT_REPRESENTATIONS),
    "tolerances": {},
    "seed": 7,
}


def _as_complex(value, name: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ParameterError(f"field {name!r} must be a number or a [re, im] pair")


@dataclass
class RunConfig:
    """Validated run configuration; ``params`` is the derived ModelParams."""

    n: int
    eta: complex
    xi: tuple[complex, ...]
    kappa: complex
    kappa_prime: complex
    sites: tuple[int, ...]
    operators: tuple[str, ...]
    representations: tuple[str, ...]
    tolerances: dict[str, float]
    seed: int
    out: str | None = None
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def params(self) -> ModelParams:
        return ModelParams(n=self.n, eta=self.eta, xi=self.xi,
                           kappa=self.kappa, kappa2=self.kappa_prime)

    def tol(self, name: str) -> float:
        return self.tolerances[name]


def generate_xi(n: int, eta: complex, seed: int, box: dict,
                min_separation: float, max_tries: int = 100) -> tuple[complex, ...]:
    """Draw inhomogeneities in a box until the shift-set separation holds."""
    rng = np.random.default_rng(seed)
    re_lo, re_hi = box.get("re_range", [-1.0, 1.0])
    im_lo, im_hi = box.get("im_range", [-0.4, 0.4])
    for _ in range(max_tries):
        xi = tuple(complex(rng.uniform(re_lo, re_hi), rng.uniform(im_lo, im_hi))
                   for _ in range(n))
        try:
            ModelParams(n=n, eta=eta, xi=xi, delta_min=min_separation)
        except ParameterError:
            continue
        return xi
    raise ParameterError(
        f"could not generate {n} admissible inhomogeneities in {max_tries} tries; "
        "enlarge the box or lower min_separation"
    )


def load_config(path: str | Path | None = None, seed_override: int | None = None,
                tol_overrides: dict[str, float] | None = None) -> RunConfig:
    """Load a JSON config file (or the defaults) into a validated RunConfig."""
    data = dict(DEFAULT_CONFIG)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"config parse error at line {exc.lineno}, "
                                 f"column {exc.colno}: {exc.msg}") from exc
        if not isinstance(user, dict):
            raise ParameterError("config root must be a JSON object")
        data.update(user)
    schema = data.get("schema", 1)
    if schema != 1:
        raise ParameterError(f"unsupported config schema {schema}")
    n = int(data["n"])
    if not 1 <= n <= MAX_N_HARD:
        raise ParameterError(f"n must lie in 1..{MAX_N_HARD}, got {n}")
    eta = _as_complex(data["eta"], "eta")
    kappa = _as_complex(data["kappa"], "kappa")
    kappa_prime = _as_complex(data["kappa_prime"], "kappa_prime")
    seed = int(data["seed"]) if seed_override is None else int(seed_override)

    xi_field = data["xi"]
    if isinstance(xi_field, dict):
        xi_seed = int(xi_field.get("seed", seed)) if seed_override is None else seed
        xi = generate_xi(n, eta, xi_seed, xi_field.get("box", {}),
                         float(xi_field.get("min_separation", 0.1)))
        min_sep = float(xi_field.get("min_separation", 0.1))
    elif isinstance(xi_field, list):
        if len(xi_field) != n:
            raise ParameterError(f"explicit xi list must have {n} entries")
        xi = tuple(_as_complex(v, f"xi[{i}]") for i, v in enumerate(xi_field))
        min_sep = 0.05
    else:
        raise ParameterError("field 'xi' must be a list or a generator object")

    sites_field = data.get("sites")
    sites = tuple(range(1, n + 1)) if not sites_field else tuple(int(s) for s in sites_field)
    for s in sites:
        if not 1 <= s <= n:
            raise ParameterError(f"site {s} outside 1..{n}")
    operators = tuple(data.get("operators") or ("z", "+", "-"))
    for op in operators:
        if op not in ("z", "+", "-"):
            raise ParameterError(f"unknown operator {op!r} (expected 'z', '+', '-')")
    representations = tuple(data.get("representations") or DEFAULT_REPRESENTATIONS)
    for rep in representations:
        if rep not in DEFAULT_REPRESENTATIONS:
            raise ParameterError(f"unknown representation {rep!r}")

    tolerances = dict(DEFAULT_TOLERANCES)
    for key, val in (data.get("tolerances") or {}).items():
        if key not in DEFAULT_TOLERANCES:
            raise ParameterError(f"unknown tolerance {key!r}")
        tolerances[key] = float(val)
    for key, val in (tol_overrides or {}).items():
        if key not in DEFAULT_TOLERANCES:
            raise ParameterError(f"unknown tolerance {key!r}")
        tolerances[key] = float(val)

    out = data.get("out")
    if out is not None and not isinstance(out, str):
        raise ParameterError("field 'out' must be a path string")
    cfg = RunConfig(n=n, eta=eta, xi=xi, kappa=kappa, kappa_prime=kappa_prime,
                    sites=sites, operators=operators,
                    representations=representations, tolerances=tolerances,
                    seed=seed, out=out, raw=data)
    # raises ParameterError for inadmissible explicit xi
    ModelParams(n=n, eta=eta, xi=xi, kappa=kappa, kappa2=kappa_prime,
                delta_min=min(min_sep, 0.05) if isinstance(xi_field, list) else 0.05)
    return cfg
