"""Command line workflows around the deconvolution estimator.

Four subcommands cover the full experiment cycle:

``simulate``
    One Monte Carlo experiment at a fixed configuration. Writes a
    configuration echo, per-run errors, a one-row summary, and a flat
    risk report into the output directory.

``table``
    Risk sweep over a grid of signals, signal-to-noise ratios, and
    long-memory pairs, one row per cell. Failed cells are marked in a
    status column and do not abort the sweep; each (signal, SNR) group
    gets a flag recording whether risk degrades from the weakest-memory
    pair to the strongest.

``rates``
    Theoretical convergence-rate curves for a smoothness/loss query,
    optionally plotted and optionally compared against empirical risk
    reports produced by ``simulate`` across several grid sizes.

``transform``
    Standalone forward or inverse wavelet transform between a sampled
    field CSV and a coefficient CSV.

All artifacts are comma-separated UTF-8 with a header row, ``.`` as the
decimal mark, and ``repr`` floats, so a fixed seed gives bit-identical
files. Per-run random streams are seeded from ``(seed, run index)``,
which makes results independent of the worker count.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import multiprocessing
import os
import sys

import numpy as np

from .errors import ConfigError, FdeconvError
from .estimator import (
    DEFAULT_GAMMA,
    LevelSelection,
    RiskReport,
    ThresholdPolicy,
    epsilon_from_sigma,
    estimate,
    finest_levels,
)
from .lrdnoise import _CONSTRUCTIONS as NOISE_CONSTRUCTIONS
from .lrdnoise import LongMemoryParams, noise_sheet
from .meyer import WaveletCoeffs2D, forward_2d, inverse_2d
from .model import (
    calibrate_sigma,
    convolve_columns,
    make_kernel,
    make_power_kernel,
    make_target,
    observe,
)
from .rates import RateQuery, classify, rate_curve, write_rate_curve

SCHEMA_VERSION = 1

SIGNALS = ("lidar", "doppler")
KERNELS = ("power", "grid", "circular")

DEFAULT_SNRS = (10.0, 20.0, 30.0)
DEFAULT_ALPHA_PAIRS = (
    (0.8, 0.6),
    (0.8, 0.4),
    (0.8, 0.2),
    (0.6, 0.4),
    (0.6, 0.2),
    (0.4, 0.2),
)

# Finest levels used by the reference experiments at the standard
# operating points; selected by mode "preset".
PRESET_J1 = {10.0: 3, 20.0: 4, 30.0: 5}
PRESET_J2 = {10.0: 5, 20.0: 5, 30.0: 5}

DEFAULT_EPSILONS = tuple(float(x) for x in np.geomspace(0.5, 1e-3, 13))

_M0 = 3
_LEVEL_FLOOR = _M0 - 1


def _parse_int(name: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got {text!r}") from None


def _parse_float(name: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{name} must be a number, got {text!r}") from None


def _parse_bool(name: str, text: str) -> bool:
    if text == "true":
        return True
    if text == "false":
        return False
    raise ConfigError(f"{name} must be 'true' or 'false', got {text!r}")


def _check_level_range(label: str, j: int, N: int) -> None:
    top = N.bit_length() - 2
    if not _LEVEL_FLOOR <= j <= top:
        raise ConfigError(
            f"{label}={j} outside the level range [{_LEVEL_FLOOR}, {top}] supported by N={N}"
        )


def _validate_level_mode(label: str, text: str, N: int, snr_db: float) -> None:
    if text == "auto":
        return
    if text == "preset":
        if float(snr_db) not in PRESET_J1:
            raise ConfigError(
                f"{label}=preset needs snr_db in {sorted(PRESET_J1)}, got {snr_db}"
            )
        return
    try:
        j = int(text)
    except ValueError:
        raise ConfigError(
            f"{label} must be 'auto', 'preset', or an integer level, got {text!r}"
        ) from None
    _check_level_range(label, j, N)


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of one Monte Carlo deconvolution experiment.

    ``j1``/``j2`` are strings: ``"auto"`` selects the level from the
    noise size, ``"preset"`` uses the stored 10/20/30 dB values, and a
    decimal integer fixes the level directly. ``snr_db = inf`` runs the
    noiseless limit: the noise amplitude is zero, the threshold vanishes,
    and fixed levels are required. ``kernel_unit_mass`` only affects the
    sampled kernels ("grid", "circular"); the "power" kernel is defined
    by its spectrum and ignores it.
    """

    signal: str = "lidar"
    N: int = 1024
    snr_db: float = 20.0
    alpha1: float = 0.8
    alpha2: float = 0.6
    gamma: float = DEFAULT_GAMMA
    nu: float = 0.5
    kernel: str = "power"
    kernel_unit_mass: bool = True
    j1: str = "auto"
    j2: str = "5"
    noise: str = "farima-product"
    runs: int = 200
    seed: int = 0
    outdir: str = "out"

    def __post_init__(self):
        if self.signal not in SIGNALS:
            raise ConfigError(f"signal must be one of {SIGNALS}, got {self.signal!r}")
        if isinstance(self.N, bool) or not isinstance(self.N, int):
            raise ConfigError(f"N must be an integer, got {self.N!r}")
        if self.N < 16 or self.N & (self.N - 1):
            raise ConfigError(f"N must be a power of two >= 16, got {self.N}")
        for name in ("snr_db", "alpha1", "alpha2", "gamma", "nu"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{name} must be a number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ConfigError(f"snr_db must be a real number or inf, got {self.snr_db}")
        try:
            LongMemoryParams(self.alpha1, self.alpha2)
        except FdeconvError as exc:
            raise ConfigError(str(exc)) from None
        if not self.gamma >= 0 or math.isinf(self.gamma):
            raise ConfigError(f"gamma must be finite and >= 0, got {self.gamma}")
        if not self.nu >= 0 or math.isinf(self.nu):
            raise ConfigError(f"nu must be finite and >= 0, got {self.nu}")
        if self.kernel not in KERNELS:
            raise ConfigError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        if not isinstance(self.kernel_unit_mass, bool):
            raise ConfigError(
                f"kernel_unit_mass must be a bool, got {self.kernel_unit_mass!r}"
            )
        if self.noise not in NOISE_CONSTRUCTIONS:
            raise ConfigError(
                f"noise must be one of {NOISE_CONSTRUCTIONS}, got {self.noise!r}"
            )
        for name in ("runs", "seed"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{name} must be an integer, got {value!r}")
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if not isinstance(self.outdir, str) or not self.outdir:
            raise ConfigError(f"outdir must be a non-empty path, got {self.outdir!r}")
        for label in ("j1", "j2"):
            text = getattr(self, label)
            if isinstance(text, bool):
                raise ConfigError(f"{label} must be a string or integer, got {text!r}")
            if isinstance(text, int):
                text = str(text)
                object.__setattr__(self, label, text)
            if not isinstance(text, str):
                raise ConfigError(f"{label} must be a string or integer, got {text!r}")
            _validate_level_mode(label, text, self.N, self.snr_db)

    def to_mapping(self) -> dict:
        """Serialize to an ordered str -> str mapping, losslessly."""
        out = {}
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            if isinstance(value, bool):
                out[field.name] = "true" if value else "false"
            elif isinstance(value, float):
                out[field.name] = repr(value)
            else:
                out[field.name] = str(value)
        return out

    @classmethod
    def from_mapping(cls, mapping) -> "ExperimentConfig":
        """Build a config from str -> str pairs; unknown keys are errors."""
        parsers = {
            "signal": None,
            "N": _parse_int,
            "snr_db": _parse_float,
            "alpha1": _parse_float,
            "alpha2": _parse_float,
            "gamma": _parse_float,
            "nu": _parse_float,
            "kernel": None,
            "kernel_unit_mass": _parse_bool,
            "j1": None,
            "j2": None,
            "noise": None,
            "runs": _parse_int,
            "seed": _parse_int,
            "outdir": None,
        }
        kwargs = {}
        for key, text in mapping.items():
            if key not in parsers:
                raise ConfigError(f"unknown configuration key {key!r}")
            parse = parsers[key]
            kwargs[key] = text if parse is None else parse(key, text)
        return cls(**kwargs)

    def to_file(self, path: str) -> None:
        _write_kv(path, self.to_mapping().items())

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        return cls.from_mapping(_read_kv_file(path))

    def to_line(self) -> str:
        """One-line echo of every field, for error context."""
        return " ".join(f"{k}={v}" for k, v in self.to_mapping().items())


def _write_kv(path, pairs) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in pairs:
            fh.write(f"{key}={value}\n")


def _read_kv_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration file {path}: {exc}") from None
    out = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        out[key.strip()] = value.strip()
    return out


def _build_kernel(cfg: ExperimentConfig):
    if cfg.kernel == "power":
        return make_power_kernel(cfg.N, cfg.nu)
    return make_kernel(
        cfg.N, cfg.nu, periodization=cfg.kernel, unit_mass=cfg.kernel_unit_mass
    )


def _resolve_levels(cfg: ExperimentConfig, epsilon: float, alpha) -> LevelSelection:
    """Turn the configured j modes into a concrete level selection."""
    auto = None
    if "auto" in (cfg.j1, cfg.j2):
        if not 0.0 < epsilon < 1.0:
            raise ConfigError(
                "automatic level selection needs a noise size with 0 < epsilon < 1, "
                f"got {epsilon}; use fixed j1/j2"
            )
        auto = finest_levels(epsilon, 1.0, alpha, cfg.nu, cfg.N)

    def resolve(label, mode, auto_j, auto_raw, auto_capped):
        if mode == "auto":
            return auto_j, auto_raw, auto_capped
        if mode == "preset":
            table = PRESET_J1 if label == "j1" else PRESET_J2
            j = table[float(cfg.snr_db)]
            _check_level_range(label, j, cfg.N)
            return j, float(j), False
        j = int(mode)
        return j, float(j), False

    j1, j1_raw, j1_capped = resolve(
        "j1",
        cfg.j1,
        auto.j1 if auto else 0,
        auto.j1_raw if auto else 0.0,
        auto.j1_capped if auto else False,
    )
    j2, j2_raw, j2_capped = resolve(
        "j2",
        cfg.j2,
        auto.j2 if auto else 0,
        auto.j2_raw if auto else 0.0,
        auto.j2_capped if auto else False,
    )
    return LevelSelection(j1, j2, j1_raw, j2_raw, j1_capped, j2_capped)


class _RunContext:
    """Everything a single run needs, built once per process.

    In the noiseless limit (``sigma == 0``) the per-level threshold
    vanishes, so the estimate is the plain truncated reconstruction of
    the deconvolved data; the policy is built with ``gamma = 0`` and a
    placeholder noise size to encode exactly that.
    """

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.alpha = LongMemoryParams(cfg.alpha1, cfg.alpha2)
        self.truth = make_target(cfg.signal, cfg.N)
        self.kernel = _build_kernel(cfg)
        self.q = convolve_columns(self.truth.values, self.kernel)
        self.sigma = calibrate_sigma(self.q, cfg.snr_db)
        self.noiseless = self.sigma == 0.0
        if self.noiseless:
            self.epsilon = 0.0
            self.policy = ThresholdPolicy(
                gamma=0.0, epsilon=0.5, alpha=self.alpha, nu=cfg.nu
            )
        else:
            self.epsilon = epsilon_from_sigma(self.sigma, cfg.N, self.alpha)
            self.policy = ThresholdPolicy(
                gamma=cfg.gamma, epsilon=self.epsilon, alpha=self.alpha, nu=cfg.nu
            )
        self.levels = _resolve_levels(cfg, self.epsilon, self.alpha)


_CTX = None


def _worker_init(cfg: ExperimentConfig) -> None:
    global _CTX
    _CTX = _RunContext(cfg)


def _run_one(run: int) -> float:
    ctx = _CTX
    if ctx.noiseless:
        Y = ctx.q
    else:
        seq = np.random.SeedSequence([ctx.cfg.seed, run])
        sheet = noise_sheet(ctx.alpha, ctx.cfg.N, seed=seq, construction=ctx.cfg.noise)
        Y = observe(ctx.q, ctx.sigma, sheet)
    est, _ = estimate(Y, ctx.kernel, ctx.policy, ctx.levels)
    return float(np.mean((est.values - ctx.truth.values) ** 2))


def _simulate(cfg: ExperimentConfig, jobs: int = 1):
    """Run the experiment and return ``(RiskReport, _RunContext)``.

    Per-run seeds depend only on ``(cfg.seed, run)``, so the worker
    count never changes the result.
    """
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")
    ctx = _RunContext(cfg)
    if jobs == 1:
        global _CTX
        previous = _CTX
        _CTX = ctx
        try:
            errors = [_run_one(run) for run in range(cfg.runs)]
        finally:
            _CTX = previous
    else:
        with multiprocessing.Pool(
            processes=jobs, initializer=_worker_init, initargs=(cfg,)
        ) as pool:
            errors = pool.map(_run_one, range(cfg.runs))
    arr = np.asarray(errors)
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    report = RiskReport(
        mise=float(arr.mean()),
        se=se,
        per_run=tuple(errors),
        runs=len(errors),
        j1=ctx.levels.j1,
        j2=ctx.levels.j2,
    )
    return report, ctx


def _cleanup(paths) -> None:
    for path in paths:
        try:
            os.unlink(path)
        except OSError:
            pass


def run_simulation(cfg: ExperimentConfig, jobs: int = 1) -> RiskReport:
    """Run one experiment and write its artifacts into ``cfg.outdir``.

    Files: ``config.txt`` (exact configuration echo), ``per_run_errors.csv``
    (run, error), ``summary.csv`` (one row), ``risk_report.txt`` (flat
    key=value report). Everything is computed before anything is written;
    partially written files are removed if a write fails.
    """
    report, ctx = _simulate(cfg, jobs)
    os.makedirs(cfg.outdir, exist_ok=True)
    written = []
    try:
        path = os.path.join(cfg.outdir, "config.txt")
        written.append(path)
        cfg.to_file(path)

        path = os.path.join(cfg.outdir, "per_run_errors.csv")
        written.append(path)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["run", "error"])
            for run, error in enumerate(report.per_run):
                writer.writerow([run, repr(error)])

        path = os.path.join(cfg.outdir, "summary.csv")
        written.append(path)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                [
                    "signal",
                    "snr_db",
                    "sigma",
                    "alpha1",
                    "alpha2",
                    "gamma",
                    "j1",
                    "j2",
                    "runs",
                    "mise",
                    "se",
                ]
            )
            writer.writerow(
                [
                    cfg.signal,
                    repr(cfg.snr_db),
                    repr(ctx.sigma),
                    repr(cfg.alpha1),
                    repr(cfg.alpha2),
                    repr(cfg.gamma),
                    ctx.levels.j1,
                    ctx.levels.j2,
                    cfg.runs,
                    repr(report.mise),
                    repr(report.se),
                ]
            )

        path = os.path.join(cfg.outdir, "risk_report.txt")
        written.append(path)
        _write_kv(
            path,
            [
                ("schema_version", SCHEMA_VERSION),
                ("signal", cfg.signal),
                ("n", cfg.N),
                ("snr_db", repr(cfg.snr_db)),
                ("sigma", repr(ctx.sigma)),
                ("epsilon", repr(ctx.epsilon)),
                ("alpha1", repr(cfg.alpha1)),
                ("alpha2", repr(cfg.alpha2)),
                ("gamma", repr(cfg.gamma)),
                ("nu", repr(cfg.nu)),
                ("kernel", cfg.kernel),
                ("noise", cfg.noise),
                ("j1", ctx.levels.j1),
                ("j2", ctx.levels.j2),
                ("runs", cfg.runs),
                ("mise", repr(report.mise)),
                ("se", repr(report.se)),
            ],
        )
    except BaseException:
        _cleanup(written)
        raise
    return report


def run_table(
    cfg: ExperimentConfig,
    jobs: int = 1,
    signals=SIGNALS,
    snrs=DEFAULT_SNRS,
    pairs=DEFAULT_ALPHA_PAIRS,
):
    """Risk sweep over a (signal, SNR, memory pair) grid.

    Each cell reruns the experiment with those three fields replaced and
    everything else taken from ``cfg``. A failing cell is recorded as
    ``status = "error: <Type>"`` with empty numbers and the sweep
    continues. Within each (signal, SNR) group the ``trend_ok`` column
    records whether the weakest-memory pair (largest alpha sum) has risk
    no larger than the strongest (smallest alpha sum); it is empty when
    either endpoint failed. Writes ``config.txt`` and ``table.csv`` into
    ``cfg.outdir`` and returns the rows as dictionaries.
    """
    rows = []
    for signal in signals:
        for snr in snrs:
            group = []
            for a1, a2 in pairs:
                cell = {
                    "signal": signal,
                    "snr_db": float(snr),
                    "alpha1": float(a1),
                    "alpha2": float(a2),
                    "mise": None,
                    "se": None,
                    "j1": None,
                    "trend_ok": "",
                    "status": "ok",
                }
                try:
                    cell_cfg = dataclasses.replace(
                        cfg,
                        signal=signal,
                        snr_db=float(snr),
                        alpha1=float(a1),
                        alpha2=float(a2),
                    )
                    report, ctx = _simulate(cell_cfg, jobs)
                except FdeconvError as exc:
                    cell["status"] = f"error: {type(exc).__name__}"
                else:
                    cell["mise"] = report.mise
                    cell["se"] = report.se
                    cell["j1"] = ctx.levels.j1
                group.append(cell)
            if group:
                weakest = max(group, key=lambda c: c["alpha1"] + c["alpha2"])
                strongest = min(group, key=lambda c: c["alpha1"] + c["alpha2"])
                if weakest["mise"] is not None and strongest["mise"] is not None:
                    flag = "true" if weakest["mise"] <= strongest["mise"] else "false"
                    for cell in group:
                        cell["trend_ok"] = flag
            rows.extend(group)

    os.makedirs(cfg.outdir, exist_ok=True)
    written = []
    try:
        path = os.path.join(cfg.outdir, "config.txt")
        written.append(path)
        cfg.to_file(path)

        path = os.path.join(cfg.outdir, "table.csv")
        written.append(path)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                [
                    "signal",
                    "snr_db",
                    "alpha1",
                    "alpha2",
                    "mise",
                    "se",
                    "j1",
                    "trend_ok",
                    "status",
                ]
            )
            for cell in rows:
                writer.writerow(
                    [
                        cell["signal"],
                        repr(cell["snr_db"]),
                        repr(cell["alpha1"]),
                        repr(cell["alpha2"]),
                        "" if cell["mise"] is None else repr(cell["mise"]),
                        "" if cell["se"] is None else repr(cell["se"]),
                        "" if cell["j1"] is None else cell["j1"],
                        cell["trend_ok"],
                        cell["status"],
                    ]
                )
    except BaseException:
        _cleanup(written)
        raise
    return rows


def _plot_curve(points, path: str) -> None:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise ConfigError(
            "plotting needs matplotlib; install the 'plots' extra"
        ) from exc
    xs = [pt.epsilon for pt in points]
    ys = [pt.bound for pt in points]
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.loglog(xs, ys, marker="o")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("risk bound (normalized)")
    if points:
        ax.set_title(f"regime: {points[0].regime}")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _load_empirical(dirs) -> list:
    """Read ``risk_report.txt`` from each directory into point dicts."""
    points = []
    for directory in dirs:
        path = os.path.join(directory, "risk_report.txt")
        data = _read_kv_file(path)
        point = {"dir": directory}
        for key, parse in [
            ("n", _parse_int),
            ("sigma", _parse_float),
            ("epsilon", _parse_float),
            ("alpha1", _parse_float),
            ("alpha2", _parse_float),
            ("mise", _parse_float),
        ]:
            if key not in data:
                raise ConfigError(f"{path} is missing key {key!r}")
            point[key] = parse(key, data[key])
        if not point["epsilon"] > 0:
            raise ConfigError(
                f"{path}: empirical comparison needs epsilon > 0, got {point['epsilon']}"
            )
        points.append(point)
    return points


def _compare_empirical(query: RateQuery, result, dirs, outdir: str, written) -> None:
    if query.r != 2:
        raise ConfigError(
            f"empirical comparison needs a two-dimensional query, got r={query.r}"
        )
    points = _load_empirical(dirs)
    if len(points) < 2:
        raise ConfigError(f"empirical comparison needs >= 2 runs, got {len(points)}")
    alpha_pairs = {(pt["alpha1"], pt["alpha2"]) for pt in points}
    if len(alpha_pairs) > 1:
        raise ConfigError(f"empirical runs disagree on the memory pair: {sorted(alpha_pairs)}")
    pair = next(iter(alpha_pairs))
    if pair != query.alpha:
        raise ConfigError(
            f"empirical memory pair {pair} does not match the query alpha {query.alpha}"
        )
    epsilons = {pt["epsilon"] for pt in points}
    if len(epsilons) < 2:
        raise ConfigError("empirical comparison needs at least two distinct noise sizes")
    points.sort(key=lambda pt: pt["n"])

    x = np.array([2.0 * query.alpha_bar * math.log(pt["epsilon"]) for pt in points])
    y = np.array([math.log(pt["mise"]) for pt in points])
    slope = float(np.polyfit(x, y, 1)[0])
    gap = abs(slope - result.exponent)
    tolerance = 0.2
    within = gap <= tolerance

    path = os.path.join(outdir, "rates_empirical.csv")
    written.append(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "sigma", "epsilon", "mise"])
        for pt in points:
            writer.writerow(
                [pt["n"], repr(pt["sigma"]), repr(pt["epsilon"]), repr(pt["mise"])]
            )

    path = os.path.join(outdir, "rates_comparison.txt")
    written.append(path)
    _write_kv(
        path,
        [
            ("schema_version", SCHEMA_VERSION),
            ("points", len(points)),
            ("fitted_slope", repr(slope)),
            ("theory_exponent", repr(result.exponent)),
            ("gap", repr(gap)),
            ("tolerance", repr(tolerance)),
            ("within_tolerance", "true" if within else "false"),
            ("regime", result.regime),
        ],
    )


def run_rates(
    query: RateQuery,
    epsilons=DEFAULT_EPSILONS,
    outdir: str = "out",
    plot: bool = False,
    empirical_dirs=(),
):
    """Classify a query, tabulate its rate curve, optionally compare.

    Writes ``rates_config.txt`` and ``rates_curve.csv`` into ``outdir``;
    with ``plot`` also ``rates_curve.png``; with ``empirical_dirs`` also
    ``rates_empirical.csv`` and ``rates_comparison.txt``, where the
    fitted slope of log risk against ``2 alpha_bar log epsilon`` is
    compared to the theoretical exponent. Returns ``(result, points)``.
    """
    result = classify(query)
    points = rate_curve(query, epsilons)
    os.makedirs(outdir, exist_ok=True)
    written = []
    try:
        path = os.path.join(outdir, "rates_config.txt")
        written.append(path)
        _write_kv(
            path,
            [
                ("schema_version", SCHEMA_VERSION),
                ("s", ",".join(repr(v) for v in query.s)),
                ("pi", repr(query.pi)),
                ("q", repr(query.q)),
                ("p", repr(query.p)),
                ("nu", repr(query.nu)),
                ("alpha", ",".join(repr(v) for v in query.alpha)),
                ("A", repr(query.A)),
                ("epsilons", ",".join(repr(pt.epsilon) for pt in points)),
                ("regime", result.regime),
                ("exponent", repr(result.exponent)),
                ("log_exponent_upper", repr(result.log_exponent_upper)),
                ("xi1", result.xi1),
                ("xi2", result.xi2),
            ],
        )

        path = os.path.join(outdir, "rates_curve.csv")
        written.append(path)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            write_rate_curve(points, fh)

        if plot:
            path = os.path.join(outdir, "rates_curve.png")
            written.append(path)
            _plot_curve(points, path)

        if empirical_dirs:
            _compare_empirical(query, result, empirical_dirs, outdir, written)
    except BaseException:
        _cleanup(written)
        raise
    return result, points


_FIELD_HEADER = ["t", "x", "value"]
_COEFF_HEADER = ["j1", "k1", "j2", "k2", "real", "imag"]


def _read_csv_rows(path: str, header) -> list:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    if not rows or rows[0] != header:
        raise ConfigError(f"{path} must start with the header {','.join(header)}")
    return rows[1:]


def _read_field_csv(path: str) -> np.ndarray:
    rows = _read_csv_rows(path, _FIELD_HEADER)
    count = len(rows)
    N = math.isqrt(count)
    if N * N != count or N < 8 or N & (N - 1):
        raise ConfigError(
            f"{path} must hold N*N rows for a power of two N >= 8, got {count} rows"
        )
    grid = np.zeros((N, N))
    seen = np.zeros((N, N), dtype=bool)
    for row in rows:
        try:
            t, x, value = (float(cell) for cell in row)
        except ValueError:
            raise ConfigError(f"{path}: bad field row {row!r}") from None
        i = int(round(t * N))
        j = int(round(x * N))
        if not (0 <= i < N and 0 <= j < N):
            raise ConfigError(f"{path}: coordinates ({t}, {x}) fall outside the unit grid")
        if seen[i, j]:
            raise ConfigError(f"{path}: duplicate grid cell ({t}, {x})")
        seen[i, j] = True
        grid[i, j] = value
    if not seen.all():
        raise ConfigError(f"{path} does not cover the full {N}x{N} grid")
    return grid


def _write_field_csv(field: np.ndarray, path: str) -> None:
    N = field.shape[0]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_FIELD_HEADER)
        for i in range(N):
            for j in range(N):
                writer.writerow([repr(i / N), repr(j / N), repr(float(field[i, j]))])


def _transform_forward(input_path: str, output_path: str, j1, j2) -> None:
    field = _read_field_csv(input_path)
    N = field.shape[0]
    top = N.bit_length() - 2
    J1 = top if j1 is None else j1
    J2 = top if j2 is None else j2
    coeffs = forward_2d(field, J1=J1, J2=J2)
    with open(output_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_COEFF_HEADER)
        for b1, b2, view in coeffs.blocks():
            for k1 in range(view.shape[0]):
                for k2 in range(view.shape[1]):
                    value = view[k1, k2]
                    writer.writerow(
                        [b1, k1, b2, k2, repr(float(value.real)), repr(float(value.imag))]
                    )


def _transform_inverse(input_path: str, output_path: str, n) -> None:
    rows = _read_csv_rows(input_path, _COEFF_HEADER)
    if not rows:
        raise ConfigError(f"{input_path} holds no coefficient rows")
    parsed = []
    for row in rows:
        try:
            b1, k1, b2, k2 = (int(cell) for cell in row[:4])
            value = complex(float(row[4]), float(row[5]))
        except (ValueError, IndexError):
            raise ConfigError(f"{input_path}: bad coefficient row {row!r}") from None
        parsed.append((b1, k1, b2, k2, value))
    J1 = max(item[0] for item in parsed)
    J2 = max(item[2] for item in parsed)
    N = n if n is not None else 2 ** (max(J1, J2) + 1)
    packed = np.zeros((2 ** (J1 + 1), 2 ** (J2 + 1)), dtype=complex)
    coeffs = WaveletCoeffs2D(values=packed, m0=_M0, J1=J1, J2=J2)
    for b1, k1, b2, k2, value in parsed:
        if b1 not in coeffs.levels1 or b2 not in coeffs.levels2:
            raise ConfigError(
                f"{input_path}: no block ({b1}, {b2}) in levels {coeffs.levels1} x {coeffs.levels2}"
            )
        view = coeffs.block(b1, b2)
        if not (0 <= k1 < view.shape[0] and 0 <= k2 < view.shape[1]):
            raise ConfigError(
                f"{input_path}: shift ({k1}, {k2}) outside block ({b1}, {b2}) "
                f"of shape {view.shape}"
            )
        view[k1, k2] = value
    field = inverse_2d(coeffs, N).real
    _write_field_csv(field, output_path)


def run_transform(
    input_path: str,
    output_path: str,
    inverse: bool = False,
    j1=None,
    j2=None,
    n=None,
) -> None:
    """Forward (field CSV -> coefficient CSV) or inverse transform.

    The field format is ``t,x,value`` over the full unit grid with
    coordinates ``i/N``; the coefficient format is ``j1,k1,j2,k2,real,imag``
    with one row per stored coefficient. Missing coefficient rows are
    treated as zeros on the inverse path; ``n`` fixes the output grid
    size (default ``2 ** (max level + 1)``).
    """
    if inverse:
        _transform_inverse(input_path, output_path, n)
    else:
        _transform_forward(input_path, output_path, j1, j2)


def _config_from_args(args) -> ExperimentConfig:
    mapping = {}
    if getattr(args, "table_mode", False):
        mapping["j1"] = "preset"
    if args.config:
        mapping.update(_read_kv_file(args.config))
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        mapping[key.strip()] = value.strip()
    if args.seed is not None:
        mapping["seed"] = str(args.seed)
    if args.runs is not None:
        mapping["runs"] = str(args.runs)
    if args.out is not None:
        mapping["outdir"] = args.out
    return ExperimentConfig.from_mapping(mapping)


def _parse_float_list(text: str, flag: str):
    parts = [part.strip() for part in text.split(",") if part.strip()]
    if not parts:
        raise ConfigError(f"{flag} expects a comma-separated list of numbers")
    return tuple(_parse_float(flag, part) for part in parts)


def _cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    try:
        report = run_simulation(cfg, jobs=args.jobs)
    except FdeconvError:
        print(f"config: {cfg.to_line()}", file=sys.stderr)
        raise
    print(
        f"mise={report.mise!r} se={report.se!r} runs={report.runs} "
        f"j1={report.j1} j2={report.j2} out={cfg.outdir}"
    )
    return 0


def _cmd_table(args) -> int:
    cfg = _config_from_args(args)
    try:
        rows = run_table(cfg, jobs=args.jobs)
    except FdeconvError:
        print(f"config: {cfg.to_line()}", file=sys.stderr)
        raise
    failed = sum(1 for row in rows if row["status"] != "ok")
    print(f"cells={len(rows)} errors={failed} out={cfg.outdir}")
    return 0


def _cmd_rates(args) -> int:
    s = _parse_float_list(args.s, "--s")
    alpha = _parse_float_list(args.alpha, "--alpha")
    epsilons = (
        DEFAULT_EPSILONS if args.epsilons is None else _parse_float_list(args.epsilons, "--epsilons")
    )
    query = RateQuery(s=s, pi=args.pi, q=args.q, p=args.p, nu=args.nu, alpha=alpha, A=args.A)
    result, _ = run_rates(
        query,
        epsilons,
        outdir=args.out,
        plot=args.plot,
        empirical_dirs=tuple(args.empirical),
    )
    print(f"regime={result.regime} exponent={result.exponent!r} out={args.out}")
    return 0


def _cmd_transform(args) -> int:
    run_transform(
        args.input,
        args.output,
        inverse=args.inverse,
        j1=args.j1,
        j2=args.j2,
        n=args.n,
    )
    print(f"wrote {args.output}")
    return 0


def _add_experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value configuration file")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one configuration key (repeatable)",
    )
    parser.add_argument("--seed", type=int, help="base random seed")
    parser.add_argument("--runs", type=int, help="Monte Carlo runs")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdeconv",
        description=(
            "Anisotropic functional deconvolution under long-memory noise: "
            "simulations, risk tables, rate curves, and transforms."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one Monte Carlo experiment")
    _add_experiment_flags(sim)
    sim.set_defaults(func=_cmd_simulate, table_mode=False)

    tab = sub.add_parser("table", help="risk sweep over the signal/SNR/memory grid")
    _add_experiment_flags(tab)
    tab.set_defaults(func=_cmd_table, table_mode=True)

    rat = sub.add_parser("rates", help="theoretical rate curves and comparisons")
    rat.add_argument("--s", default="1.0,1.0", help="smoothness indices, comma separated")
    rat.add_argument("--alpha", default="1.0,1.0", help="memory exponents, comma separated")
    rat.add_argument("--pi", type=float, default=2.0, help="body norm index")
    rat.add_argument("--q", type=float, default=2.0, help="summation index")
    rat.add_argument("--p", type=float, default=2.0, help="loss index")
    rat.add_argument("--nu", type=float, default=0.5, help="kernel decay exponent")
    rat.add_argument("--A", type=float, default=1.0, help="ball radius")
    rat.add_argument("--epsilons", help="noise sizes, comma separated, each in (0, 1)")
    rat.add_argument("--out", default="out", help="output directory")
    rat.add_argument("--plot", action="store_true", help="write a log-log curve image")
    rat.add_argument(
        "--empirical",
        nargs="*",
        default=[],
        metavar="DIR",
        help="simulate output directories to fit an empirical slope from",
    )
    rat.set_defaults(func=_cmd_rates)

    tra = sub.add_parser("transform", help="forward or inverse transform on CSV files")
    tra.add_argument("input", help="input CSV path")
    tra.add_argument("output", help="output CSV path")
    tra.add_argument("--inverse", action="store_true", help="coefficients to field")
    tra.add_argument("--j1", type=int, help="finest first-axis level (forward)")
    tra.add_argument("--j2", type=int, help="finest second-axis level (forward)")
    tra.add_argument("--n", type=int, help="output grid size (inverse)")
    tra.set_defaults(func=_cmd_transform)

    return parser


def main(argv=None) -> int:
    """Entry point; returns 0 on success, 2 on bad input, 3 on numerics."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FdeconvError as exc:
        print(f"fdeconv {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3 if isinstance(exc, ArithmeticError) else 2


if __name__ == "__main__":
    raise SystemExit(main())
