"""Parameter sweeps behind each figure, returned as plain tables.

Every ``run_*`` function takes a :class:`RunConfig` and returns a list of
:class:`Table`.  Sweep points are independent and may be farmed out to a
process pool; results are collected in input order, so output never
depends on scheduling.
"""

import json
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError, NumericalError
from .loss import apply_loss, loss_trajectory, lossy_twin_fock
from .metrology import (
    ParametrizedFamily,
    bayes_posterior,
    dicke_qfi,
    generalized_snr,
    mom_error_limit,
    qfi_mixed,
    qfi_pure,
    qfi_vs_chi,
)
from .multimode import local_readout_snr11, lossy_doubled_qfi11
from .spin_algebra import SpinSector, parity_operator, quadratic_observables
from .states import dicke_state, imbalance_to_index

SCENARIOS = ("fig1a", "fig1bc", "fig2a", "fig2b", "fig2c", "fig2d", "qfi", "mom", "snr")

ANCHOR_RTOL = 1e-9


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass(frozen=True)
class ThetaGrid:
    start: float
    stop: float
    points: int

    def values(self):
        if self.points == 1:
            return np.array([self.start])
        k = np.arange(self.points)
        last = self.points - 1
        # symmetric form keeps theta = 0 exact on grids symmetric about 0
        return (self.start * (last - k) + self.stop * k) / last


_PI_TERM = re.compile(r"^([+-]?)(\d*\.?\d*)\*?pi(?:/(\d+\.?\d*))?$")


def parse_angle(text):
    """Float, or a multiple of pi such as ``-pi``, ``pi/2``, ``0.5*pi``."""
    text = str(text).strip().replace(" ", "")
    try:
        return float(text)
    except ValueError:
        pass
    match = _PI_TERM.match(text)
    if not match:
        raise ConfigError(f"cannot parse angle {text!r}")
    sign, coeff, denom = match.groups()
    value = (float(coeff) if coeff else 1.0) * math.pi / (float(denom) if denom else 1.0)
    return -value if sign == "-" else value


def parse_theta_grid(grid):
    if isinstance(grid, ThetaGrid):
        return grid
    if isinstance(grid, (list, tuple)) and len(grid) == 3:
        parts = list(grid)
    else:
        parts = str(grid).split(":")
    if len(parts) != 3:
        raise ConfigError(f"theta grid must be min:max:points, got {grid!r}")
    try:
        points = int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"theta grid point count must be an integer, got {parts[2]!r}") from exc
    if points < 1:
        raise ConfigError("theta grid must contain at least one point")
    return ThetaGrid(parse_angle(parts[0]), parse_angle(parts[1]), points)


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    n: tuple = ()
    k_max: int = None
    k: tuple = ()
    m: tuple = ()
    theta_grid: ThetaGrid = None
    chi: tuple = ()
    out: str = None
    format: str = "csv"
    workers: int = 1

    def echo(self):
        d = asdict(self)
        d["theta_grid"] = None if self.theta_grid is None else [self.theta_grid.start, self.theta_grid.stop,
                                                               self.theta_grid.points]
        d.pop("out")
        d.pop("workers")
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}


_DEFAULT_CHI = (0.0, 0.20, 0.39, 0.59, math.pi / 4)

DEFAULTS = {
    "fig1a": dict(n=(64,), m=(0, 4, 8, 16), theta_grid=ThetaGrid(-math.pi, math.pi, 201)),
    "fig1bc": dict(n=(40,), chi=_DEFAULT_CHI, theta_grid=ThetaGrid(-math.pi / 2, math.pi / 2, 201)),
    "fig2a": dict(n=(40, 90, 120, 160)),
    "fig2b": dict(n=tuple(range(16, 1217, 100))),
    "fig2c": dict(n=tuple(range(16, 1217, 100))),
    "fig2d": dict(n=(64,), k_max=14, theta_grid=ThetaGrid(0.3, 0.3, 1)),
    "qfi": dict(n=(64,), m=(0,), k=(0,)),
    "mom": dict(n=(64,), m=(0,), theta_grid=ThetaGrid(-math.pi, math.pi, 201)),
    "snr": dict(n=(32,), k=(0, 1, 2, 3), theta_grid=ThetaGrid(-math.pi, math.pi, 26)),
}


def make_config(scenario, **overrides):
    """Scenario defaults overlaid with non-None ``overrides``, validated."""
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}")
    values = dict(DEFAULTS[scenario])
    for key, val in overrides.items():
        if val is None:
            continue
        if key == "theta_grid":
            val = parse_theta_grid(val)
        elif key in ("n", "k", "m", "chi"):
            val = tuple(val) if isinstance(val, (list, tuple)) else (val,)
        values[key] = val
    try:
        cfg = RunConfig(
            scenario=scenario,
            n=tuple(int(x) for x in values.get("n", ())),
            k_max=None if values.get("k_max") is None else int(values["k_max"]),
            k=tuple(int(x) for x in values.get("k", ())),
            m=tuple(float(x) for x in values.get("m", ())),
            theta_grid=values.get("theta_grid"),
            chi=tuple(parse_angle(x) for x in values.get("chi", ())),
            out=values.get("out"),
            format=values.get("format", "csv"),
            workers=int(values.get("workers", 1)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    validate(cfg)
    return cfg


def validate(cfg):
    if cfg.format not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg.format!r}")
    if cfg.workers < 1:
        raise ConfigError("worker count must be >= 1")
    if not cfg.n:
        raise ConfigError("particle-number list is empty")
    if any(n < 1 for n in cfg.n):
        raise ConfigError("particle numbers must be positive")
    if cfg.k_max is not None and cfg.k_max < 0:
        raise ConfigError("k-max must be non-negative")
    if any(k < 0 for k in cfg.k):
        raise ConfigError("loss counts must be non-negative")
    s = cfg.scenario
    if s in ("fig1a", "fig1bc", "fig2d") and len(cfg.n) != 1:
        raise ConfigError(f"{s} takes a single particle number")
    if s in ("fig1a", "fig1bc", "fig2a", "fig2b", "fig2c", "mom", "snr") and any(n % 2 for n in cfg.n):
        raise ConfigError(f"{s} needs even particle numbers")
    if s == "fig2d" and any(n % 4 for n in cfg.n):
        raise ConfigError("fig2d needs particle numbers divisible by 4")
    if s in ("fig1a", "fig1bc", "mom", "snr", "fig2d") and cfg.theta_grid is None:
        raise ConfigError(f"{s} needs a theta grid")
    if s == "fig1bc" and not cfg.chi:
        raise ConfigError("fig1bc needs at least one chi value")
    if s in ("fig1a", "mom", "qfi"):
        if not cfg.m:
            raise ConfigError(f"{s} needs at least one imbalance m")
        for n in cfg.n:
            for m in cfg.m:
                try:
                    imbalance_to_index(SpinSector(n), m)
                except DomainError as exc:
                    raise ConfigError(str(exc)) from exc
    if s in ("qfi", "snr"):
        if not cfg.k:
            raise ConfigError(f"{s} needs at least one loss count")
        for n in cfg.n:
            ms = cfg.m if s == "qfi" else (0,)
            for m in ms:
                idx = imbalance_to_index(SpinSector(n), m)
                if any(k > 0 and k >= n - idx for k in cfg.k):
                    raise ConfigError(f"loss count must satisfy K < N - n_b = {n - idx} for N={n}")
    if s == "fig2a" and cfg.k_max is not None:
        if any(cfg.k_max >= n // 2 and cfg.k_max > 0 for n in cfg.n):
            raise ConfigError("fig2a k-max must stay below N/2")
    if s == "fig2d":
        if cfg.k_max is None:
            raise ConfigError("fig2d needs k-max")
        if any(cfg.k_max >= n // 4 for n in cfg.n):
            raise ConfigError("fig2d k-max must stay below N/4 (loss from the N/2 twin-Fock comparison)")


@dataclass
class Table:
    name: str
    columns: list
    rows: list = field(default_factory=list)


def _pool_map(fn, args, workers):
    if workers <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*args)))


# ------------------------------------------------------------ fig 1a

def _fig1a_point(n, m, theta):
    sector = SpinSector(n)
    family = ParametrizedFamily(dicke_state(sector, m))
    parity = parity_operator(sector)
    jz2 = quadratic_observables(sector)[0]
    err_parity = mom_error_limit(family, parity, theta)
    snr = generalized_snr(family, [parity, jz2], theta).value
    err_combined = 1.0 / snr if snr > 0 else math.inf
    return err_parity, err_combined


def run_fig1a(cfg):
    """Parity and parity+Jz^2 method-of-moments errors for Dicke probes."""
    thetas = cfg.theta_grid.values()
    (n,) = cfg.n
    table = Table("fig1a", ["m", "theta", "mom_error_parity", "mom_error_combined", "1/qfi"])
    args = [(n, m, float(t)) for m in cfg.m for t in thetas]
    for (_, m, t), (ep, ec) in zip(args, _pool_map(_fig1a_point, args, cfg.workers)):
        table.rows.append([m, t, ep, ec, 1.0 / dicke_qfi(n, m)])
    return [table]


# ------------------------------------------------------------ fig 1b, 1c

def run_fig1bc(cfg):
    """Posterior densities per chi and the QFI of the phase-diffused probe."""
    thetas = cfg.theta_grid.values()
    (n,) = cfg.n
    post = Table("fig1b_posterior", ["chi", "theta", "density"])
    qfi = Table("fig1c_qfi", ["chi", "qfi"])
    curve = Table("fig1c_qfi_curve", ["chi", "qfi"])
    chi_curve = np.linspace(0.0, math.pi / 2, 91)
    for chi in cfg.chi:
        dens = bayes_posterior(n, chi, 0.0, thetas)
        post.rows.extend([chi, float(t), float(d)] for t, d in zip(thetas, dens))
    for chi, q in zip(cfg.chi, qfi_vs_chi(n, cfg.chi)):
        qfi.rows.append([chi, float(q)])
    for chi, q in zip(chi_curve, qfi_vs_chi(n, chi_curve)):
        curve.rows.append([float(chi), float(q)])
    return [post, qfi, curve]


# ------------------------------------------------------------ fig 2a

def _check_anchor(n, k, value):
    expected = {0: n * n / 2 + n, 1: (n / 2) ** 2 - 1}.get(k)
    if expected is not None and abs(value - expected) > ANCHOR_RTOL * expected:
        raise NumericalError(f"lossy QFI anchor failed at N={n}, K={k}: {value!r} vs {expected!r}",
                             residual=abs(value - expected))


def _fig2a_rows(n, k_max):
    rows = []
    for k, mix in loss_trajectory(n, n // 2, k_max):
        q = qfi_mixed(mix)
        _check_anchor(n, k, q)
        rows.append([n, k, q])
    return rows


def run_fig2a(cfg):
    """QFI of the lossy twin-Fock state for K = 0..floor(N/4)."""
    table = Table("fig2a", ["N", "K", "qfi"])
    args = [(n, cfg.k_max if cfg.k_max is not None else n // 4) for n in cfg.n]
    for rows in _pool_map(_fig2a_rows, args, cfg.workers):
        table.rows.extend(rows)
    return [table]


# ------------------------------------------------------------ fig 2b

def k_sql(n):
    """Largest K with QFI(rho_{N,K}) > N (K restricted to K < N/2)."""
    best = 0
    for k, mix in loss_trajectory(n, n // 2, max(n // 2 - 1, 0)):
        if qfi_mixed(mix) > n:
            best = k
        else:
            break
    return best


def run_fig2b(cfg):
    """Maximal loss keeping the lossy twin-Fock QFI above N, plus affine fit."""
    ks = _pool_map(k_sql, [(n,) for n in cfg.n], cfg.workers)
    table = Table("fig2b", ["N", "K_SQL"], [[n, k] for n, k in zip(cfg.n, ks)])
    fit = Table("fig2b_fit", ["slope", "intercept"])
    if len(cfg.n) >= 2:
        slope, intercept = np.polyfit(np.array(cfg.n, dtype=float), np.array(ks, dtype=float), 1)
        fit.rows.append([float(slope), float(intercept)])
    return [table, fit]


# ------------------------------------------------------------ fig 2c

def _sqrt_loss_qfi(n):
    k = math.isqrt(n)
    return k, qfi_mixed(lossy_twin_fock(n, k))


def power_law_fit(ns, values):
    """Least-squares exponent on the upper half of the N range."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    order = np.argsort(ns)
    upper = order[len(order) // 2:]
    slope, intercept = np.polyfit(np.log(ns[upper]), np.log(values[upper]), 1)
    return float(slope), float(math.exp(intercept))


def run_fig2c(cfg):
    """QFI after floor(sqrt(N)) losses and its power-law exponent."""
    results = _pool_map(_sqrt_loss_qfi, [(n,) for n in cfg.n], cfg.workers)
    table = Table("fig2c", ["N", "K", "qfi"], [[n, k, q] for n, (k, q) in zip(cfg.n, results)])
    fit = Table("fig2c_fit", ["exponent", "prefactor"])
    if len(cfg.n) >= 4:
        fit.rows.append(list(power_law_fit(cfg.n, [q for _, q in results])))
    return [table, fit]


# ------------------------------------------------------------ fig 2d

def _fig2d_point(n, k, theta1):
    doubled = lossy_doubled_qfi11(n, k)
    snr = local_readout_snr11(n, k, theta1).value
    tf = qfi_mixed(lossy_twin_fock(n // 2, k))
    return doubled, snr, tf


def to_db(value, sql):
    return 10.0 * math.log10(value / sql) if value > 0 else -math.inf


def run_fig2d(cfg):
    """Lossy doubled TF (1,1) QFI element vs lossy TF, in dB over N/2."""
    theta1 = float(cfg.theta_grid.values()[0])
    (n,) = cfg.n
    sql = n / 2
    db = Table("fig2d", ["K", "qfi11_doubled", "snr_local_readout", "qfi_tf"])
    lin = Table("fig2d_linear", ["K", "qfi11_doubled", "snr_local_readout", "qfi_tf"])
    args = [(n, k, theta1) for k in range(cfg.k_max + 1)]
    for (_, k, _), (d, s, t) in zip(args, _pool_map(_fig2d_point, args, cfg.workers)):
        db.rows.append([k, to_db(d, sql), to_db(s, sql), to_db(t, sql)])
        lin.rows.append([k, d, s, t])
    return [db, lin]


# ------------------------------------------------------------ point queries

def run_qfi(cfg):
    """QFI of a lossy Dicke probe for every (N, m, K)."""
    table = Table("qfi", ["N", "m", "K", "qfi"])
    for n in cfg.n:
        for m in cfg.m:
            idx = imbalance_to_index(SpinSector(n), m)
            for k in cfg.k:
                if k == 0:
                    q = qfi_pure(dicke_state(SpinSector(n), m))
                else:
                    q = qfi_mixed(apply_loss(n, idx, k))
                table.rows.append([n, m, k, q])
    return [table]


def _mom_point(n, m, theta):
    sector = SpinSector(n)
    family = ParametrizedFamily(dicke_state(sector, m))
    return (mom_error_limit(family, parity_operator(sector), theta),
            mom_error_limit(family, quadratic_observables(sector)[0], theta))


def run_mom(cfg):
    """Parity and Jz^2 method-of-moments errors for Dicke probes."""
    table = Table("mom", ["N", "m", "theta", "mom_error_parity", "mom_error_jz2", "1/qfi"])
    args = [(n, m, float(t)) for n in cfg.n for m in cfg.m for t in cfg.theta_grid.values()]
    for (n, m, t), (ep, ej) in zip(args, _pool_map(_mom_point, args, cfg.workers)):
        table.rows.append([n, m, t, ep, ej, 1.0 / dicke_qfi(n, m)])
    return [table]


def _snr_point(n, k, theta):
    mix = lossy_twin_fock(n, k)
    obs = quadratic_observables(mix.sector)
    if k <= 1:
        obs = obs[:2]
    return generalized_snr(ParametrizedFamily(mix), obs, theta).value


def run_snr(cfg):
    """Generalized SNR of the quadratic readout list on the lossy twin-Fock probe."""
    table = Table("snr", ["N", "K", "theta", "snr", "qfi"])
    args = [(n, k, float(t)) for n in cfg.n for k in cfg.k for t in cfg.theta_grid.values()]
    values = _pool_map(_snr_point, args, cfg.workers)
    qfis = {}
    for (n, k, t), v in zip(args, values):
        if (n, k) not in qfis:
            qfis[(n, k)] = qfi_mixed(lossy_twin_fock(n, k))
        table.rows.append([n, k, t, v, qfis[(n, k)]])
    return [table]


RUNNERS = {
    "fig1a": run_fig1a,
    "fig1bc": run_fig1bc,
    "fig2a": run_fig2a,
    "fig2b": run_fig2b,
    "fig2c": run_fig2c,
    "fig2d": run_fig2d,
    "qfi": run_qfi,
    "mom": run_mom,
    "snr": run_snr,
}


def run(cfg):
    return RUNNERS[cfg.scenario](cfg)


# ------------------------------------------------------------ output

def format_value(x):
    """12 significant digits; integers stay integers."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0"
    return f"{x:.12g}"


def render_csv(tables, cfg):
    lines = [f"# scenario: {cfg.scenario}"]
    for key, val in sorted(cfg.echo().items()):
        if key != "scenario":
            lines.append(f"# {key}: {json.dumps(val)}")
    for table in tables:
        lines.append(f"# table: {table.name}")
        lines.append(",".join(table.columns))
        lines.extend(",".join(format_value(v) for v in row) for row in table.rows)
    return "\n".join(lines) + "\n"


def _json_value(x):
    s = format_value(x)
    if s in ("inf", "-inf", "nan", "true", "false"):
        return s if s in ("inf", "-inf", "nan") else s == "true"
    return int(s) if re.fullmatch(r"-?\d+", s) else float(s)


def render_json(tables, cfg):
    doc = {
        "config": cfg.echo(),
        "tables": [
            {"name": t.name, "columns": t.columns, "rows": [[_json_value(v) for v in row] for row in t.rows]}
            for t in tables
        ],
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def render(tables, cfg):
    return render_json(tables, cfg) if cfg.format == "json" else render_csv(tables, cfg)
