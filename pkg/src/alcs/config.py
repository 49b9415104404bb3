"""Run configuration: a flat key = value text format with '#' comments.

Parsing is total: every malformed line, unknown key, type error, or
constraint violation is collected (with its line number) and reported in
one ConfigError rather than crashing on the first problem.
"""

import math
import os
from dataclasses import dataclass, fields

from .spectral import Grid2D, max_valid_trunc
from .tensor_algebra import ModelParams

__all__ = ["RunConfig", "ConfigError", "load_config", "parse_config",
           "config_echo"]

TWO_PI = 2.0 * math.pi

_MODES = ("direct", "mollified", "friedrichs")
_ICS = ("taylor_green", "random_spectrum", "uniform_director", "file")


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  "
                         + "\n  ".join(self.problems))


@dataclass
class RunConfig:
    # grid
    N: int = 64
    L: float = TWO_PI
    # time
    dt: float = 1e-3
    t_end: float = 1.0
    scheme: int = 2
    cfl_target: float = 0.8
    dt_max: float = 1e-2
    adaptive: bool = False
    # physics
    a: float = -0.5
    b: float = 0.0
    c: float = 1.0
    kappa: float = 0.5
    lam: float = 0.1
    Gamma: float = 1.0
    mu: float = 1.0
    # regularization
    mode: str = "direct"
    eps: float = 0.0
    n_trunc: int = 4
    # initial condition
    ic: str = "random_spectrum"
    seed: int = 12345
    amplitude: float = 0.1
    peak_wavenumber: float = 2.0
    director_angle: float = 0.0
    s_order: float = 0.5
    noise_amplitude: float = 0.0
    ic_file: str = ""
    # outputs
    energy_every: int = 1
    snapshot_every: int = 0
    out_dir: str = "out"
    checks: str = "all"
    s_exponent: float = 0.5

    def grid(self):
        return Grid2D(self.N, self.L)

    def params(self):
        return ModelParams(a=self.a, b=self.b, c=self.c, Gamma=self.Gamma,
                           lam=self.lam, mu=self.mu, kappa=self.kappa,
                           eps=self.eps, n_trunc=self.n_trunc,
                           mode=self.mode)

    def time_setup(self, t_start=0.0):
        from .integrator import TimeSetup

        return TimeSetup(dt=self.dt, t_end=max(0.0, self.t_end - t_start),
                         scheme=self.scheme, cfl_target=self.cfl_target,
                         dt_max=self.dt_max, adaptive=self.adaptive)

    def resolved_out_dir(self):
        return os.environ.get("ALCS_OUT_DIR", self.out_dir)


# key -> (python type, attribute name)
_KEYS = {}
for f in fields(RunConfig):
    key = "lambda" if f.name == "lam" else f.name
    _KEYS[key] = (f.type, f.name)


def _convert(key, raw, line_no, problems):
    ftype, _ = _KEYS[key]
    raw = raw.strip()
    try:
        if ftype is bool:
            low = raw.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if ftype is int:
            return int(raw)
        if ftype is float:
            return float(raw)
        return raw
    except ValueError:
        problems.append(
            f"line {line_no}: {key} expects {ftype.__name__}, got {raw!r}")
        return None


def parse_config(text, source="<config>"):
    """Parse and fully validate; raises ConfigError listing every issue."""
    problems = []
    values = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            problems.append(f"line {line_no}: expected key = value, got "
                            f"{stripped!r}")
            continue
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _KEYS:
            problems.append(f"line {line_no}: unknown key {key!r}")
            continue
        if key in values:
            problems.append(f"line {line_no}: duplicate key {key!r}")
            continue
        val = _convert(key, raw, line_no, problems)
        if val is not None:
            values[key] = (val, line_no)

    cfg = RunConfig()
    for key, (val, _) in values.items():
        setattr(cfg, _KEYS[key][1], val)

    def complain(key, message):
        line = values.get(key, (None, 0))[1]
        where = f"line {line}: " if line else ""
        problems.append(f"{where}{message}")

    if cfg.N < 8 or cfg.N & (cfg.N - 1) != 0:
        complain("N", f"N must be a power of two >= 8, got {cfg.N}")
    if cfg.L <= 0:
        complain("L", "L must be > 0")
    if cfg.dt <= 0:
        complain("dt", "dt must be > 0")
    if cfg.t_end < 0:
        complain("t_end", "t_end must be >= 0")
    if cfg.scheme not in (1, 2):
        complain("scheme", "scheme must be 1 or 2")
    if not 0 < cfg.cfl_target <= 1:
        complain("cfl_target", "cfl_target must be in (0, 1]")
    if cfg.dt_max <= 0:
        complain("dt_max", "dt_max must be > 0")
    if cfg.mu <= 0:
        complain("mu", "mu must be > 0")
    if cfg.Gamma <= 0:
        complain("Gamma", "Gamma must be > 0")
    if cfg.c <= 0:
        complain("c", "c must be > 0")
    if cfg.eps < 0:
        complain("eps", "eps must be >= 0")
    if cfg.mode not in _MODES:
        complain("mode", f"mode must be one of {', '.join(_MODES)}")
    if cfg.n_trunc < 1:
        complain("n_trunc", "n_trunc must be >= 1")
    elif (cfg.mode == "friedrichs" and cfg.N >= 8
          and cfg.N & (cfg.N - 1) == 0 and cfg.L > 0):
        n_hi = max_valid_trunc(Grid2D(cfg.N, cfg.L))
        if not 1 <= cfg.n_trunc <= n_hi:
            complain("n_trunc",
                     f"n_trunc for this grid must lie in 1..{n_hi}, "
                     f"got {cfg.n_trunc}")
    if cfg.ic not in _ICS:
        complain("ic", f"ic must be one of {', '.join(_ICS)}")
    if cfg.ic == "file" and not cfg.ic_file:
        complain("ic_file", "ic = file requires ic_file")
    if not 0 <= cfg.seed < 2**64:
        complain("seed", "seed must be a 64-bit unsigned integer")
    if cfg.energy_every < 1:
        complain("energy_every", "energy_every must be >= 1")
    if cfg.snapshot_every < 0:
        complain("snapshot_every", "snapshot_every must be >= 0")
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), source=path)


def config_echo(cfg):
    """Render the effective configuration back to the file format."""
    lines = []
    for f in fields(RunConfig):
        key = "lambda" if f.name == "lam" else f.name
        val = getattr(cfg, f.name)
        if isinstance(val, bool):
            val = "true" if val else "false"
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"
