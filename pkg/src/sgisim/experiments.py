"""Named experiments and parameter sweeps producing data tables.

Each figure experiment fixes a preset (layered under the user's config file
and overrides), a swept variable with a default range and an optional series
variable (one curve per value). Full-model phase spreads are evaluated in
fixed-size chunks of sweep points; chunking never depends on the thread
count, so the output is identical for any ``threads``.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import analytics as an
from .dynamics import NumericalError, PhaseState, StepSizeError, ramped, run_sgi, sequence_phase_1d
from .geometry import FieldConfig, RampError, to_xi_zeta
from .nvspin import WeakFieldError
from .spread import phase_spread
from .units import HBAR, KB
from .wavepacket import sgi_width_coherence

CHUNK = 16

#: sweepable variables -> (config key, SI unit)
VARIABLES = {
    "theta0": ("field.theta0", "rad"),
    "omega_t": (None, "1"),
    "b0": ("field.b0", "T"),
    "b_grad": ("field.b_grad", "T/m"),
    "g_xi": ("environment.g_xi", "m/s^2"),
    "d": ("nd.nv_distance", "m"),
    "t_theta": ("environment.t_theta", "K"),
}

FAILURES = (NumericalError, StepSizeError, RampError, WeakFieldError, FloatingPointError, ValueError)


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    n_points: int
    scale: str = "linear"

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise ValueError(f"sweep variable must be one of {sorted(VARIABLES)}, got {self.variable!r}")
        if self.n_points < 2:
            raise ValueError("a sweep needs n_points >= 2")
        if not self.start < self.stop:
            raise ValueError("sweep range needs min < max")
        if self.scale not in ("linear", "log"):
            raise ValueError("scale must be 'linear' or 'log'")
        if self.scale == "log" and self.start <= 0:
            raise ValueError("log sweeps need a positive minimum")

    @property
    def unit(self):
        return VARIABLES[self.variable][1]

    def values(self):
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.n_points)
        return np.linspace(self.start, self.stop, self.n_points)


@dataclass
class Table:
    """Rows of one experiment; ``columns`` are (name, unit) pairs."""

    columns: list
    rows: list = field(default_factory=list)

    @property
    def names(self):
        return [c[0] for c in self.columns]

    def column(self, name):
        i = self.names.index(name)
        return np.array([r[i] for r in self.rows], dtype=object)

    def as_float(self, name):
        return np.array([np.nan if v is None or isinstance(v, str) else v for v in self.column(name)], dtype=float)

    def where(self, name, value):
        i = self.names.index(name)
        return Table(self.columns, [r for r in self.rows if r[i] == value])


@dataclass(frozen=True)
class Experiment:
    name: str
    title: str
    preset: dict
    sweep: SweepSpec
    series: tuple = None  # (variable, values)
    kind: str = "spread"


EXPERIMENTS = {
    "fig3": Experiment(
        "fig3",
        "arm paths under ideal preparation for several NV offsets",
        {"field": {"b0": "10 G", "b_grad": "0.2 G/nm"}},
        SweepSpec("d", 0.0, 3e-9, 4),
        kind="paths",
    ),
    "fig4": Experiment(
        "fig4",
        "phase spread versus bias angle",
        {"field": {"b0": "10 G", "b_grad": "0.2 G/nm"}, "numerics": {"steps_per_pulse": 200}},
        SweepSpec("theta0", -math.pi / 4, math.pi / 4, 101),
        ("d", (1e-9, 2e-9, 3e-9)),
    ),
    "fig5": Experiment(
        "fig5",
        "angular coherence versus omega T (width overlap and semiclassical)",
        {},
        SweepSpec("omega_t", 4 * math.pi / 400, 4 * math.pi, 400),
        kind="coherence",
    ),
    "fig6": Experiment(
        "fig6",
        "ground-state phase spread and its coherence versus omega T",
        {},
        SweepSpec("omega_t", 4 * math.pi / 400, 4 * math.pi, 400),
        kind="analytic_spread",
    ),
    "fig7": Experiment(
        "fig7",
        "phase spread versus bias field for several gradients",
        {"nd": {"nv_distance": "0 nm"}, "numerics": {"steps_per_pulse": 200}},
        SweepSpec("b0", 1e-4, 30e-4, 30),
        ("b_grad", (1e4, 2e4, 4e4)),
    ),
    "fig8": Experiment(
        "fig8",
        "phase spread versus gravity projection",
        {"field": {"b0": "10 G"}, "nd": {"nv_distance": "3 nm"}, "numerics": {"steps_per_pulse": 200}},
        SweepSpec("g_xi", 0.0, 9.8, 21),
        ("b_grad", (1e4, 2e4, 4e4)),
    ),
    "fig9": Experiment(
        "fig9",
        "phase spread versus gravity with the bias ramp (field at the mean position held at 5 G)",
        {"field": {"b0": "5 G", "b_grad": "0.05 G/nm", "ramp": "quadratic"}, "numerics": {"steps_per_pulse": 200}},
        SweepSpec("g_xi", 0.0, 9.8, 21),
        ("d", (0.0, 3e-9)),
        kind="ramp_compare",
    ),
    "fig10": Experiment(
        "fig10",
        "symmetric |->/|+> configuration: phase spread versus gradient",
        {
            "field": {"b0": "0.5 G"},
            "nd": {"nv_distance": "3 nm"},
            "sequence": {"symmetric": True},
            "numerics": {"steps_per_pulse": 200},
        },
        SweepSpec("b_grad", 2e3, 2e5, 60, "log"),
        ("g_xi", (1.0, 2.45, 4.9, 9.8)),
    ),
}


def _merge(base, top):
    out = {s: dict(v) for s, v in base.items()}
    for s, v in top.items():
        out.setdefault(s, {}).update(v)
    return out


def preset_data(name, file_data=None):
    """Experiment preset layered under the user's TOML data."""
    return _merge(EXPERIMENTS[name].preset, file_data or {})


# --- batched full-model evaluation -------------------------------------------


def _models(rc, var, values):
    """nd, cfg, seq with ``var`` set to the column ``values`` (shape (n, 1))."""
    col = np.asarray(values, dtype=float).reshape(-1, 1)
    nd, seq = rc.nd, rc.sequence
    v = rc.values
    f = dict(b0=v["field"]["b0"], theta0=v["field"]["theta0"], b_grad=v["field"]["b_grad"])
    g = dict(g_xi=v["environment"]["g_xi"], g_zeta=v["environment"]["g_zeta"])
    t_theta = v["environment"]["t_theta"]
    if var in ("b0", "theta0", "b_grad"):
        f[var] = col
    elif var == "g_xi":
        g["g_xi"] = col
    elif var == "d":
        nd = replace(nd, nv_distance=col)
    elif var == "t_theta":
        t_theta = col
    elif var == "omega_t":
        f["b0"] = an.b_nv_from_omega(col / seq.t_pulse, nd)
    cfg = FieldConfig(**f, **g)
    if v["field"]["ramp"] == "quadratic":
        cfg = ramped(cfg, seq, nd)
    return nd, cfg, seq, t_theta


def _stats(nd, cfg, t_theta):
    w = an.libration_frequency(cfg.b0, nd)
    gs = an.ground_state_stats(w, nd)
    t = np.asarray(t_theta, dtype=float)
    if not np.any(t > 0):
        return gs
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        th = an.thermal_stats(t, cfg.b0, nd)
    # the thermal widths never drop below the zero-point ones
    return an.AngularStats(np.maximum(th.d_theta, gs.d_theta), np.maximum(th.d_theta_dot, gs.d_theta_dot), "thermal")


def _spread_chunk(rc, var, values):
    nd, cfg, seq, t_theta = _models(rc, var, values)
    st = _stats(nd, cfg, t_theta)
    with np.errstate(over="raise", invalid="raise"):
        r = phase_spread(nd, cfg, seq, st, h=rc["numerics.fd_step"], dt=rc.dt)
    w = an.libration_frequency(cfg.b0, nd)
    phi1d = sequence_phase_1d(seq, nd, cfg)
    cols = [_flat(a, len(values)) for a in (r.delta_phi, r.rms, r.std, w * seq.t_pulse, phi1d)]
    return [
        dict(delta_phi=d, spread=s, std=sd, omega_t=wt, phase_1d=p, status="ok")
        for d, s, sd, wt, p in zip(*cols)
    ]


def _flat(a, n):
    return np.broadcast_to(np.asarray(a, dtype=float).reshape(-1), (n,)).tolist()


def _spread_points(rc, var, values):
    """Evaluate one chunk; on failure retry point by point and record errors in-row."""
    try:
        return _spread_chunk(rc, var, values)
    except FAILURES:
        out = []
        for x in values:
            try:
                out += _spread_chunk(rc, var, [x])
            except FAILURES as e:
                nan = float("nan")
                out.append(dict(delta_phi=nan, spread=nan, std=nan, omega_t=nan, phase_1d=nan, status=f"{type(e).__name__}: {e}"))
        return out


def spread_sweep(rc, var, values, threads=1):
    """Full-model phase spread at each value of ``var`` (order preserved)."""
    values = list(values)
    chunks = [values[i : i + CHUNK] for i in range(0, len(values), CHUNK)]
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(lambda c: _spread_points(rc, var, c), chunks))
    else:
        parts = [_spread_points(rc, var, c) for c in chunks]
    return [row for p in parts for row in p]


def _with_series(rc, var, value):
    key = VARIABLES[var][0]
    s, k = key.split(".")
    return rc.with_values(**{f"{s}__{k}": value})


# --- experiment kinds ---------------------------------------------------------

_SPREAD_COLS = [
    ("delta_phi", "rad"),
    ("delta_phi_spread", "rad"),
    ("delta_phi_std", "rad"),
    ("omega_t", "1"),
    ("phase_1d", "rad"),
    ("status", ""),
]


def _spread_table(rc, spec, series, threads):
    cols = [(spec.variable, spec.unit)]
    if series:
        cols.append((series[0], VARIABLES[series[0]][1]))
    table = Table(cols + _SPREAD_COLS)
    xs = spec.values()
    for sv in (series[1] if series else (None,)):
        r = rc if sv is None else _with_series(rc, series[0], sv)
        for x, row in zip(xs, spread_sweep(r, spec.variable, xs, threads)):
            head = [float(x)] + ([float(sv)] if series else [])
            table.rows.append(head + [row["delta_phi"], row["spread"], row["std"], row["omega_t"], row["phase_1d"], row["status"]])
    return table


def _ramp_table(rc, spec, series, threads):
    """Ramped spread next to the unramped one at the same point."""
    t_r = _spread_table(rc, spec, series, threads)
    flat = rc.with_values(field__ramp="constant")
    t_c = _spread_table(flat, spec, series, threads)
    cols = t_r.columns[:-1] + [("delta_phi_spread_unramped", "rad"), ("status", "")]
    i_s = t_r.names.index("delta_phi_spread")
    rows = [r[:-1] + [c[i_s], r[-1] if r[-1] != "ok" else c[-1]] for r, c in zip(t_r.rows, t_c.rows)]
    return Table(cols, rows)


def _coherence_table(rc, spec, series, threads):
    nd, T = rc.nd, rc["sequence.t_pulse"]
    spins = an.SYMMETRIC_SPINS if rc["sequence.symmetric"] else (rc["sequence.arm1"], rc["sequence.arm2"])
    table = Table(
        [("omega_t", "1"), ("c_wavepacket", "1"), ("c_semiclassical", "1"), ("a", "1"), ("b", "1"), ("status", "")]
    )
    for x in spec.values():
        a, b = an.mismatch_coeffs(x)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                c = sgi_width_coherence(x / T, T, nd.inertia, spins, method="covariance").c_theta
            status = "ok"
        except ValueError as e:
            c, status = float("nan"), f"{type(e).__name__}: {e}"
        table.rows.append([float(x), c, float(an.ground_state_coherence(x)), float(a), float(b), status])
    return table


def _analytic_spread_table(rc, spec, series, threads, seed=0):
    nd, T = rc.nd, rc["sequence.t_pulse"]
    n_mc = rc["numerics.mc_samples"]
    table = Table(
        [
            ("omega_t", "1"),
            ("delta_phi_gs", "rad"),
            ("delta_phi_gs_printed", "rad"),
            ("coherence", "1"),
            ("coherence_printed", "1"),
            ("delta_phi_mc", "rad"),
            ("delta_phi_mc_stderr", "rad"),
        ]
    )
    for i, x in enumerate(spec.values()):
        w = x / T
        dp = float(an.ground_state_phase_uncertainty(x))
        dpp = float(an.ground_state_phase_uncertainty(x, "printed"))
        mc = an.phase_uncertainty_mc(an.ground_state_stats(w, nd), w, T, nd, max(n_mc, 10**4), seed ^ i)
        table.rows.append([float(x), dp, dpp, float(an.phase_coherence(dp)), float(an.phase_coherence(dpp)), mc.value, mc.stderr])
    return table


def _paths_table(rc, spec, series, threads):
    table = Table(
        [
            (spec.variable, spec.unit),
            ("xi_max", "m"),
            ("zeta_max", "m"),
            ("collinearity", "1"),
            ("separation_max", "m"),
            ("theta_prime_dev_max", "rad"),
            ("delta_phi", "rad"),
            ("status", ""),
        ]
    )
    for x in spec.values():
        r = _with_series(rc, spec.variable, float(x)) if spec.variable != "omega_t" else rc
        try:
            s = trajectory_summary(r)
            table.rows.append([float(x), s["xi_max"], s["zeta_max"], s["collinearity"], s["separation_max"], s["theta_prime_dev_max"], s["delta_phi"], "ok"])
        except FAILURES as e:
            nan = float("nan")
            table.rows.append([float(x)] + [nan] * 6 + [f"{type(e).__name__}: {e}"])
    return table


def trajectory_summary(rc, result=None):
    """Path geometry of both arms from the prepared state."""
    nd, cfg, seq = rc.nd, rc.field_config, rc.sequence
    if result is None:
        s0 = PhaseState.prepared(nd, cfg, rc["initial.theta_offset"], rc["initial.theta_dot"])
        result = run_sgi(s0, seq, nd, cfg, dt=rc.dt)
    xi_m, zeta_m, dev = 0.0, 0.0, 0.0
    paths = []
    for tr in (result.arm1, result.arm2):
        xi, zeta = tr.xi_zeta(cfg.theta0)
        paths.append(xi)
        xi_m = max(xi_m, float(np.max(np.abs(xi))))
        zeta_m = max(zeta_m, float(np.max(np.abs(zeta))))
        dev = max(dev, float(np.max(np.abs(tr.theta_prime(nd) - cfg.theta0))))
    sep = float(np.max(np.abs(paths[0] - paths[1])))
    return dict(
        xi_max=xi_m,
        zeta_max=zeta_m,
        collinearity=zeta_m / xi_m if xi_m > 0 else 0.0,
        separation_max=sep,
        theta_prime_dev_max=dev,
        delta_phi=float(result.delta_phi),
    )


_KINDS = {
    "spread": _spread_table,
    "ramp_compare": _ramp_table,
    "coherence": _coherence_table,
    "analytic_spread": _analytic_spread_table,
    "paths": _paths_table,
}


def run_experiment(name, rc, spec=None, series=None, threads=1, seed=0):
    """Tabulate experiment ``name`` (``spec``/``series`` default to the experiment's own)."""
    if name not in EXPERIMENTS:
        raise KeyError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    ex = EXPERIMENTS[name]
    spec = spec or ex.sweep
    series = ex.series if series is None else (series or None)
    fn = _KINDS[ex.kind]
    if ex.kind == "analytic_spread":
        return fn(rc, spec, series, threads, seed)
    return fn(rc, spec, series, threads)


# --- single run ---------------------------------------------------------------


def run_summary(rc, record=True):
    """Everything ``sgi run`` reports for one configuration."""
    nd, cfg, seq = rc.nd, rc.field_config, rc.sequence
    T = seq.t_pulse
    w = an.libration_frequency(cfg.b0, nd)
    gs = an.ground_state_stats(w, nd) if w > 0 else an.AngularStats(0.0, 0.0)
    s0 = PhaseState.prepared(nd, cfg, rc["initial.theta_offset"], rc["initial.theta_dot"])
    res = run_sgi(s0, seq, nd, cfg, dt=rc.dt, record=record)
    out = dict(
        mass=nd.mass,
        inertia=nd.inertia,
        omega=w,
        libration_frequency_hz=w / (2 * math.pi),
        omega_t=w * T,
        d_theta_gs=gs.d_theta,
        d_theta_dot_gs=gs.d_theta_dot,
        ground_state_energy_temperature=HBAR * w / (2 * KB),
        acceleration=nd.nv.mu * cfg.b_grad / nd.mass,
        delta_phi=float(res.delta_phi),
        action_phase=float(res.action_phase),
        separation_phase=float(res.separation_phase),
        phase_1d=float(sequence_phase_1d(seq, nd, cfg)),
    )
    if w > 0:
        a, b = an.mismatch_coeffs(w * T)
        out.update(
            mismatch_a=float(a),
            mismatch_b=float(b),
            coherence_semiclassical=float(an.ground_state_coherence(w * T)),
            delta_phi_gs_analytic=float(an.ground_state_phase_uncertainty(w * T)),
            delta_phi_gs_printed=float(an.ground_state_phase_uncertainty(w * T, "printed")),
        )
        try:
            out["coherence_wavepacket"] = sgi_width_coherence(w, T, nd.inertia, method="covariance").c_theta
        except ValueError:
            out["coherence_wavepacket"] = float("nan")
        sp = phase_spread(nd, cfg, seq, h=rc["numerics.fd_step"], dt=rc.dt)
        out["delta_phi_spread"] = float(sp.rms)
    if record:
        out.update(trajectory_summary(rc, res))
    return out, res


def trajectory_rows(res, nd, cfg):
    """Per-sample rows (arm, t, x, y, xi, zeta, theta', vx, vy, theta_dot)."""
    cols = [
        ("arm", ""), ("t", "s"), ("x", "m"), ("y", "m"), ("xi", "m"), ("zeta", "m"),
        ("theta_prime", "rad"), ("vx", "m/s"), ("vy", "m/s"), ("theta_dot", "rad/s"),
    ]
    table = Table(cols)
    for k, tr in ((1, res.arm1), (2, res.arm2)):
        xi, zeta = to_xi_zeta(tr.states[:, 0], tr.states[:, 1], cfg.theta0)
        tp = tr.theta_prime(nd)
        for i in range(len(tr.t)):
            s = tr.states[i]
            table.rows.append([k, tr.t[i], s[0], s[1], xi[i], zeta[i], tp[i], s[3], s[4], s[5]])
    return table
