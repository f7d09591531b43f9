"""Generation of two-sample GWAS summary datasets with known ground truth.

Per-SNP exposure effects are Gaussian with total variance equal to the
exposure heritability; standard errors follow U[0.8, 1]/sqrt(n) for the
respective GWAS sample size; outcome effects follow the reduced form
(causal effect times exposure effect, plus a pleiotropy term drawn from a
configurable law). Observed effects are the true ones plus Gaussian
measurement noise. Every draw family has its own counter-based stream, so
a (setting, seed) pair maps to bit-identical output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .data import GwasRecord, SummaryDataset
from .rng import (
    STREAM_GAMMA_D,
    STREAM_NOISE_D,
    STREAM_NOISE_Y,
    STREAM_PI,
    STREAM_SIGMA_D,
    STREAM_SIGMA_Y,
    STREAM_VALID_SET,
    substream,
)


def _choose_subset(rng: np.random.Generator, p: int, size: int) -> np.ndarray:
    return np.sort(rng.choice(p, size=size, replace=False))


@dataclass(frozen=True)
class PointNormalDirectional:
    """Zero pleiotropy on a valid subset; Gaussian-plus-slope off it."""

    valid_frac: float
    sigma_pi_sq: float
    slope: float

    def __post_init__(self):
        if not 0.0 <= self.valid_frac <= 1.0:
            raise ValueError("valid_frac must be in [0, 1]")
        if self.sigma_pi_sq < 0:
            raise ValueError("sigma_pi_sq must be nonnegative")

    def draw(self, gamma_d, rng_valid, rng_pi):
        p = gamma_d.shape[0]
        valid = _choose_subset(rng_valid, p, round(self.valid_frac * p))
        pi = np.zeros(p)
        invalid = np.setdiff1d(np.arange(p), valid, assume_unique=True)
        pi[invalid] = (
            rng_pi.normal(0.0, math.sqrt(self.sigma_pi_sq), invalid.size)
            + self.slope * gamma_d[invalid]
        )
        return pi


@dataclass(frozen=True)
class Balanced:
    """Zero-mean Gaussian pleiotropy on every instrument."""

    sigma_pi_sq: float

    def __post_init__(self):
        if self.sigma_pi_sq < 0:
            raise ValueError("sigma_pi_sq must be nonnegative")

    def draw(self, gamma_d, rng_valid, rng_pi):
        p = gamma_d.shape[0]
        if self.sigma_pi_sq == 0.0:
            return np.zeros(p)
        return rng_pi.normal(0.0, math.sqrt(self.sigma_pi_sq), p)


@dataclass(frozen=True)
class MixtureBalanced:
    """Two-component zero-mean Gaussian mixture pleiotropy."""

    frac: float
    s1_sq: float
    s2_sq: float

    def __post_init__(self):
        if not 0.0 <= self.frac <= 1.0:
            raise ValueError("frac must be in [0, 1]")
        if self.s1_sq < 0 or self.s2_sq < 0:
            raise ValueError("variances must be nonnegative")

    def draw(self, gamma_d, rng_valid, rng_pi):
        p = gamma_d.shape[0]
        first = _choose_subset(rng_valid, p, round(self.frac * p))
        pi = np.empty(p)
        mask = np.zeros(p, dtype=bool)
        mask[first] = True
        pi[mask] = rng_pi.normal(0.0, math.sqrt(self.s1_sq), first.size)
        pi[~mask] = rng_pi.normal(0.0, math.sqrt(self.s2_sq), p - first.size)
        return pi


@dataclass(frozen=True)
class ScaledDirectional:
    """Valid subset plus invalid effects with exposure-scaled noise and slope."""

    valid_frac: float
    noise_scale: float
    slope: float

    def __post_init__(self):
        if not 0.0 <= self.valid_frac <= 1.0:
            raise ValueError("valid_frac must be in [0, 1]")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be nonnegative")

    def draw(self, gamma_d, rng_valid, rng_pi):
        p = gamma_d.shape[0]
        valid = _choose_subset(rng_valid, p, round(self.valid_frac * p))
        pi = np.zeros(p)
        invalid = np.setdiff1d(np.arange(p), valid, assume_unique=True)
        pi[invalid] = (
            rng_pi.standard_normal(invalid.size)
            * self.noise_scale
            * np.abs(gamma_d[invalid])
            + self.slope * gamma_d[invalid]
        )
        return pi


@dataclass(frozen=True)
class FromEffects:
    """Pleiotropy given literally as a vector."""

    pi: tuple[float, ...]

    def draw(self, gamma_d, rng_valid, rng_pi):
        pi = np.asarray(self.pi, dtype=np.float64)
        if pi.shape[0] != gamma_d.shape[0]:
            raise ValueError("pi vector length must equal p")
        return pi.copy()


PLEIOTROPY_KINDS = {
    "point_normal_directional": PointNormalDirectional,
    "balanced": Balanced,
    "mixture_balanced": MixtureBalanced,
    "scaled_directional": ScaledDirectional,
    "from_effects": FromEffects,
}


@dataclass(frozen=True)
class SimulationSetting:
    """Everything needed to generate one synthetic two-sample dataset.

    When the fixed vectors are provided they replace the corresponding
    random draws (effect-replication designs); otherwise effects and
    standard errors are drawn as documented in the module docstring.
    """

    name: str
    p: int
    n_d: int
    n_y: int
    h_d: float
    beta: float
    pleiotropy: object
    gamma_d_fixed: tuple[float, ...] | None = None
    sigma_d_fixed: tuple[float, ...] | None = None
    sigma_y_fixed: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be at least 1")
        for vec in (self.gamma_d_fixed, self.sigma_d_fixed, self.sigma_y_fixed):
            if vec is not None and len(vec) != self.p:
                raise ValueError("fixed vectors must have length p")


@dataclass(frozen=True)
class SimulationTruth:
    """Ground truth emitted alongside a simulated dataset."""

    beta: float
    gamma_d: np.ndarray
    pi: np.ndarray
    valid_set: frozenset[int]
    kappa: float


def generate(setting: SimulationSetting, seed: int) -> tuple[SummaryDataset, SimulationTruth]:
    """Simulate one dataset; bit-identical for identical (setting, seed)."""
    p = setting.p
    if setting.gamma_d_fixed is not None:
        gamma_d = np.asarray(setting.gamma_d_fixed, dtype=np.float64)
    else:
        gamma_d = substream(seed, STREAM_GAMMA_D).normal(0.0, math.sqrt(setting.h_d / p), p)
    if setting.sigma_d_fixed is not None:
        sigma_d = np.asarray(setting.sigma_d_fixed, dtype=np.float64)
    else:
        sigma_d = substream(seed, STREAM_SIGMA_D).uniform(0.8, 1.0, p) / math.sqrt(setting.n_d)
    if setting.sigma_y_fixed is not None:
        sigma_y = np.asarray(setting.sigma_y_fixed, dtype=np.float64)
    else:
        sigma_y = substream(seed, STREAM_SIGMA_Y).uniform(0.8, 1.0, p) / math.sqrt(setting.n_y)
    pi = setting.pleiotropy.draw(
        gamma_d, substream(seed, STREAM_VALID_SET), substream(seed, STREAM_PI)
    )
    gamma_y = gamma_d * setting.beta + pi
    gd_hat = gamma_d + substream(seed, STREAM_NOISE_D).standard_normal(p) * sigma_d
    gy_hat = gamma_y + substream(seed, STREAM_NOISE_Y).standard_normal(p) * sigma_y
    width = max(6, len(str(p)))
    records = [
        GwasRecord(
            snp_id=f"snp{j + 1:0{width}d}",
            gamma_d_hat=float(gd_hat[j]),
            sigma_d=float(sigma_d[j]),
            gamma_y_hat=float(gy_hat[j]),
            sigma_y=float(sigma_y[j]),
        )
        for j in range(p)
    ]
    dataset = SummaryDataset(records)
    kappa = math.fsum(((gamma_d * gamma_d) / (sigma_d * sigma_d)).tolist()) / p
    gamma_d_ro = gamma_d.copy()
    gamma_d_ro.flags.writeable = False
    pi_ro = pi.copy()
    pi_ro.flags.writeable = False
    truth = SimulationTruth(
        beta=setting.beta,
        gamma_d=gamma_d_ro,
        pi=pi_ro,
        valid_set=frozenset(int(j) for j in np.flatnonzero(pi == 0.0)),
        kappa=kappa,
    )
    return dataset, truth


def _standard_setting(name, beta, pleiotropy, p, n_d, n_y, h_d) -> SimulationSetting:
    return SimulationSetting(
        name=name, p=p, n_d=n_d, n_y=n_y, h_d=h_d, beta=beta, pleiotropy=pleiotropy
    )


def setting_a(beta: float, p: int = 2000, n_d: int = 100_000, n_y: int = 100_000,
              h_d: float = 0.1) -> SimulationSetting:
    """Half the instruments valid; the rest share a directional shift."""
    return _standard_setting(
        "a", beta, PointNormalDirectional(0.5, 0.05 / p, 2.5), p, n_d, n_y, h_d
    )


def setting_b(beta: float, p: int = 2000, n_d: int = 100_000, n_y: int = 100_000,
              h_d: float = 0.1) -> SimulationSetting:
    """Like setting a with a ten-fold wider invalid-effect spread."""
    return _standard_setting(
        "b", beta, PointNormalDirectional(0.5, 0.5 / p, 2.5), p, n_d, n_y, h_d
    )


def setting_c(beta: float, p: int = 2000, n_d: int = 100_000, n_y: int = 100_000,
              h_d: float = 0.1) -> SimulationSetting:
    """Balanced pleiotropy on every instrument (larger variance)."""
    return _standard_setting("c", beta, Balanced(0.1 / p), p, n_d, n_y, h_d)


def setting_d(beta: float, p: int = 2000, n_d: int = 100_000, n_y: int = 100_000,
              h_d: float = 0.1) -> SimulationSetting:
    """Balanced pleiotropy on every instrument (smaller variance)."""
    return _standard_setting("d", beta, Balanced(0.05 / p), p, n_d, n_y, h_d)


def setting_e(beta: float, p: int = 2000, n_d: int = 100_000, n_y: int = 100_000,
              h_d: float = 0.1) -> SimulationSetting:
    """Few valid instruments; the invalid majority shares a directional shift."""
    return _standard_setting(
        "e", beta, PointNormalDirectional(0.28, 0.05 / p, 2.5), p, n_d, n_y, h_d
    )


SETTING_BUILDERS = {
    "a": setting_a,
    "b": setting_b,
    "c": setting_c,
    "d": setting_d,
    "e": setting_e,
}


def setting_from_effects(gamma_d, se_d, se_y, pi, beta: float,
                         replicate: int = 1) -> SimulationSetting:
    """Setting built from observed effect and error vectors, tiled ``replicate`` times."""
    gamma_d = [float(v) for v in gamma_d]
    se_d = [float(v) for v in se_d]
    se_y = [float(v) for v in se_y]
    pi = [float(v) for v in pi]
    n = len(gamma_d)
    if not (len(se_d) == len(se_y) == len(pi) == n):
        raise ValueError("input vectors must have equal length")
    if replicate < 1:
        raise ValueError("replicate must be at least 1")
    return SimulationSetting(
        name="from_effects",
        p=n * replicate,
        n_d=0,
        n_y=0,
        h_d=math.fsum(v * v for v in gamma_d) * replicate,
        beta=beta,
        pleiotropy=FromEffects(tuple(pi * replicate)),
        gamma_d_fixed=tuple(gamma_d * replicate),
        sigma_d_fixed=tuple(se_d * replicate),
        sigma_y_fixed=tuple(se_y * replicate),
    )


def _format_value(value) -> str:
    if isinstance(value, (tuple, list)):
        return ",".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def setting_to_config(setting: SimulationSetting) -> str:
    """Serialize a setting as ``key = value`` lines (vectors comma-joined)."""
    kind = {cls: key for key, cls in PLEIOTROPY_KINDS.items()}[type(setting.pleiotropy)]
    lines = [
        f"name = {setting.name}",
        f"p = {setting.p}",
        f"n_d = {setting.n_d}",
        f"n_y = {setting.n_y}",
        f"h_d = {_format_value(setting.h_d)}",
        f"beta = {_format_value(setting.beta)}",
        f"pleiotropy = {kind}",
    ]
    for f in fields(setting.pleiotropy):
        lines.append(f"{f.name} = {_format_value(getattr(setting.pleiotropy, f.name))}")
    for key in ("gamma_d_fixed", "sigma_d_fixed", "sigma_y_fixed"):
        vec = getattr(setting, key)
        if vec is not None:
            lines.append(f"{key} = {_format_value(vec)}")
    return "\n".join(lines) + "\n"


def setting_from_config(text: str) -> SimulationSetting:
    """Parse the plain-text form produced by setting_to_config."""
    entries: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        key, value = line.split("=", 1)
        entries[key.strip()] = value.strip()
    try:
        kind = entries.pop("pleiotropy")
        law_cls = PLEIOTROPY_KINDS[kind]
    except KeyError as exc:
        raise ValueError(f"unknown or missing pleiotropy kind: {exc}") from exc
    law_kwargs = {}
    for f in fields(law_cls):
        raw = entries.pop(f.name)
        if f.name == "pi":
            law_kwargs[f.name] = tuple(float(v) for v in raw.split(","))
        else:
            law_kwargs[f.name] = float(raw)
    kwargs = {
        "name": entries.pop("name"),
        "p": int(entries.pop("p")),
        "n_d": int(entries.pop("n_d")),
        "n_y": int(entries.pop("n_y")),
        "h_d": float(entries.pop("h_d")),
        "beta": float(entries.pop("beta")),
        "pleiotropy": law_cls(**law_kwargs),
    }
    for key in ("gamma_d_fixed", "sigma_d_fixed", "sigma_y_fixed"):
        if key in entries:
            kwargs[key] = tuple(float(v) for v in entries.pop(key).split(","))
    if entries:
        raise ValueError(f"unrecognized config keys: {sorted(entries)}")
    return SimulationSetting(**kwargs)


def write_truth_tsv(ds: SummaryDataset, truth: SimulationTruth, path) -> None:
    """Sidecar TSV with per-SNP true exposure effect, pleiotropy, and validity."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("snp\tgamma_d\tpi\tvalid\n")
        for j, rec in enumerate(ds):
            valid = 1 if j in truth.valid_set else 0
            fh.write(
                f"{rec.snp_id}\t{float(truth.gamma_d[j])!r}\t{float(truth.pi[j])!r}\t{valid}\n"
            )
