"""Flat key = value experiment configuration.

One key per line, '#' comments, matrix rows separated by ';'. Unknown and
duplicate keys are rejected with the offending line number so experiment
files stay trustworthy under version control.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .dual import DualConfig
from .markov import Dtmc
from .mdp import CostVariant, MdpModel, TruncationConfig
from .sim import SimConfig
from .solver import RviConfig


class ConfigError(ValueError):
    pass


SWEEP_AXES = ("p01", "p10", "q", "nu")


@dataclass
class ExperimentConfig:
    matrix: list[list[float]]
    q: float = 0.8
    nu: float = 0.1
    tau1_max: int = 20
    tau2_max: int = 20
    cost_variant: CostVariant = CostVariant.INCLUSIVE
    span_tolerance: float = 1e-9
    max_iterations: int = 10**6
    lambda_lo: float = 0.0
    lambda_hi: float = 50.0
    lambda_tolerance: float = 1e-4
    epsilon: float = 1e-4
    horizon: int = 10**6
    replications: int = 20
    warmup: int = 10**4
    seed: int = 0
    sweep_axis: str | None = None
    sweep_values: list[float] = field(default_factory=list)
    compare_nu: list[float] = field(default_factory=lambda: [0.2, 0.6, 0.8])
    periodic_k: int | None = None
    out: str | None = None

    def matrix_text(self) -> str:
        return ";".join(" ".join(format(v, ".12g") for v in row) for row in self.matrix)

    def to_model(self) -> MdpModel:
        try:
            dtmc = Dtmc(self.matrix)
            return MdpModel(dtmc, self.q, TruncationConfig(self.tau1_max, self.tau2_max),
                            self.cost_variant)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def rvi_config(self) -> RviConfig:
        return RviConfig(span_tolerance=self.span_tolerance, max_iterations=self.max_iterations)

    def dual_config(self) -> DualConfig:
        return DualConfig(lambda_lo=self.lambda_lo, lambda_hi=self.lambda_hi,
                          lambda_tolerance=self.lambda_tolerance, epsilon=self.epsilon,
                          rvi=self.rvi_config())

    def sim_config(self, seed: int | None = None) -> SimConfig:
        return SimConfig(horizon=self.horizon, replications=self.replications,
                         warmup=self.warmup, seed=self.seed if seed is None else seed)


def _parse_matrix(text: str, where: str) -> list[list[float]]:
    rows = []
    for part in text.split(";"):
        entries = part.replace(",", " ").split()
        if not entries:
            raise ConfigError(f"{where}: empty matrix row")
        try:
            rows.append([float(v) for v in entries])
        except ValueError as exc:
            raise ConfigError(f"{where}: matrix entry is not a number: {exc}") from exc
    if len({len(r) for r in rows}) != 1 or len(rows) != len(rows[0]):
        raise ConfigError(f"{where}: matrix must be square")
    return rows


def _parse_floats(text: str, where: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"{where}: expected a list of numbers: {exc}") from exc


_SCHEMA = {
    "matrix": None,
    "q": float, "nu": float,
    "tau1_max": int, "tau2_max": int,
    "cost_variant": str,
    "span_tolerance": float, "max_iterations": int,
    "lambda_lo": float, "lambda_hi": float, "lambda_tolerance": float, "epsilon": float,
    "horizon": int, "replications": int, "warmup": int, "seed": int,
    "sweep_axis": str, "sweep_values": None, "compare_nu": None,
    "periodic_k": int, "out": str,
}


def parse_config(path: str) -> ExperimentConfig:
    """Read, type and validate an experiment file."""
    entries: dict[str, tuple[str, int]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _SCHEMA:
                raise ConfigError(f"{path}:{lineno}: unknown key '{key}'")
            if key in entries:
                extra = " (exactly one sweep axis is allowed)" if key == "sweep_axis" else ""
                raise ConfigError(f"{path}:{lineno}: duplicate key '{key}'{extra}")
            if not value:
                raise ConfigError(f"{path}:{lineno}: empty value for '{key}'")
            entries[key] = (value, lineno)

    if "matrix" not in entries:
        raise ConfigError(f"{path}: missing required key 'matrix'")

    kwargs = {}
    for key, (value, lineno) in entries.items():
        where = f"{path}:{lineno}"
        if key == "matrix":
            kwargs[key] = _parse_matrix(value, where)
        elif key == "sweep_values":
            kwargs[key] = _parse_floats(value, where)
        elif key == "compare_nu":
            kwargs[key] = _parse_floats(value, where)
        elif key == "cost_variant":
            try:
                kwargs[key] = CostVariant(value)
            except ValueError:
                raise ConfigError(
                    f"{where}: cost_variant must be one of "
                    f"{[v.value for v in CostVariant]}, got '{value}'") from None
        else:
            typ = _SCHEMA[key]
            try:
                kwargs[key] = typ(value)
            except ValueError as exc:
                raise ConfigError(f"{where}: bad value for '{key}': {exc}") from None

    cfg = ExperimentConfig(**kwargs)
    _validate(cfg, path, entries)
    return cfg


def _line(entries, key):
    return entries[key][1] if key in entries else "?"


def _validate(cfg: ExperimentConfig, path: str, entries) -> None:
    def fail(key, message):
        raise ConfigError(f"{path}:{_line(entries, key)}: {key} {message}")

    if not 0.0 < cfg.q <= 1.0:
        fail("q", f"must lie in (0, 1], got {cfg.q}")
    if not 0.0 < cfg.nu <= 1.0:
        fail("nu", f"must lie in (0, 1], got {cfg.nu}")
    if cfg.tau1_max < 1:
        fail("tau1_max", "must be >= 1")
    if cfg.tau2_max < 1:
        fail("tau2_max", "must be >= 1")
    if cfg.span_tolerance <= 0:
        fail("span_tolerance", "must be positive")
    if cfg.lambda_tolerance <= 0:
        fail("lambda_tolerance", "must be positive")
    if cfg.epsilon <= 0:
        fail("epsilon", "must be positive")
    if not cfg.lambda_lo < cfg.lambda_hi:
        fail("lambda_hi", "must exceed lambda_lo")
    if not cfg.horizon > cfg.warmup >= 0:
        fail("horizon", "must exceed warmup (and warmup must be >= 0)")
    if cfg.replications < 1:
        fail("replications", "must be >= 1")
    if cfg.periodic_k is not None and cfg.periodic_k < 1:
        fail("periodic_k", "must be >= 1")
    if cfg.sweep_axis is not None:
        if cfg.sweep_axis not in SWEEP_AXES:
            fail("sweep_axis", f"must be one of {SWEEP_AXES}")
        if cfg.sweep_axis in ("p01", "p10") and len(cfg.matrix) != 2:
            fail("sweep_axis", "p01/p10 sweeps require a 2-state matrix")
    if cfg.sweep_axis in ("p01", "p10"):
        for v in cfg.sweep_values:
            if not 0.0 < v < 1.0:
                fail("sweep_values", f"value {v} outside (0, 1) for axis {cfg.sweep_axis}")
    elif cfg.sweep_axis in ("q", "nu"):
        for v in cfg.sweep_values:
            if not 0.0 < v <= 1.0:
                fail("sweep_values", f"value {v} outside (0, 1] for axis {cfg.sweep_axis}")
    for v in cfg.compare_nu:
        if not 0.0 < v <= 1.0:
            fail("compare_nu", f"value {v} outside (0, 1]")


def apply_axis(cfg: ExperimentConfig, axis: str, value: float) -> ExperimentConfig:
    """A copy of cfg with one grid-point value substituted along the sweep axis."""
    import copy

    out = copy.deepcopy(cfg)
    if axis == "q":
        out.q = value
    elif axis == "nu":
        out.nu = value
    elif axis == "p01":
        out.matrix[0][1] = value
        out.matrix[0][0] = 1.0 - value
    elif axis == "p10":
        out.matrix[1][0] = value
        out.matrix[1][1] = 1.0 - value
    else:
        raise ConfigError(f"unknown sweep axis '{axis}'")
    return out
