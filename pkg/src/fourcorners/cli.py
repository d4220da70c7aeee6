"""Command-line front end.

Usage::

    fourcorners spectrum four_level --alpha 1
    fourcorners asymptotics four_level --alpha 1.0
    fourcorners gap-sweep two_photon --alpha 0:3:0.05 --trunc 60 --out gaps.csv
    fourcorners embed-channel --kraus bitflip.json --kappa 1 --verify
    fourcorners corners --config run.json

A config file is a JSON object with ``schema_version`` (currently 1), a
``model`` entry (``{"builtin": name, "params": {...}}`` or explicit
``{"H": M, "jumps": [{"F": M, "kappa": k}, ...]}`` with matrices as nested
arrays of [re, im] pairs), optional ``truncation``, ``tolerances`` and
``output`` (``{"path": ..., "format": "json" | "csv"}``).  Command-line
flags override config entries.

Exit codes: 0 success, 1 parse/config error, 2 numerical failure (a
diagnostic JSON object is written to stderr).  The environment variable
``FOURCORNERS_NUM_THREADS`` limits BLAS threads and sweep workers.
"""
import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy.linalg import expm
from threadpoolctl import threadpool_limits

from . import models
from .asymptotics import (
    asymptotic_space,
    dual_basis,
    embed_channel,
    extract_channel,
    kraus_superop,
)
from .corners import (
    dark_projector,
    decompose_generator,
    gap_report,
    model_gaps,
    nondecaying_projector,
    parent_hamiltonian,
    validate_proposition1,
)
from .lindblad import LindbladModel, build_generator, dissipative_gap, spectrum
from .opspace import devectorize, vectorize

__all__ = [
    "SCHEMA_VERSION",
    "ConfigError",
    "NumericalFailure",
    "to_jsonable",
    "from_jsonable",
    "complex_matrix",
    "emit_json",
    "parse_json",
    "emit_csv",
    "parse_csv",
    "load_config",
    "model_from_config",
    "parse_range",
    "gap_sweep",
    "run",
    "main",
]

SCHEMA_VERSION = 1
THREADS_ENV = "FOURCORNERS_NUM_THREADS"
CSV_COLUMNS = ("alpha", "delta_dg", "delta_edg", "parent_gap", "warning")

BUILTIN_PARAMS = {
    "four_level": ("alpha", "beta", "kappa"),
    "two_photon": ("alpha", "truncation", "kappa"),
    "cat_pair": ("alpha0", "alpha1", "truncation", "kappa"),
    "amplitude_damping": ("kappa",),
    "thermal_qubit": ("kappa_down", "kappa_up"),
    "channel_embed": ("kraus", "kappa_eff"),
}
BOSONIC = ("two_photon", "cat_pair")
DEFAULT_TRUNCATION = 60


class ConfigError(ValueError):
    """Unparseable or invalid configuration (exit code 1)."""


class NumericalFailure(RuntimeError):
    """Numerical failure carrying a diagnostic dictionary (exit code 2)."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


# ---------------------------------------------------------------- emission

def to_jsonable(x):
    """Convert arrays/complex numbers to JSON-ready data; complex -> [re, im]."""
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x):
            return to_jsonable(np.stack([x.real, x.imag], axis=-1).tolist())
        return to_jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [_float(x.real), _float(x.imag)]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return _float(x)
    return x


def _float(v):
    v = float(v)
    if math.isfinite(v):
        return v
    return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")


def _unfloat(v):
    if isinstance(v, str) and v in ("nan", "inf", "-inf"):
        return float(v)
    return v


def from_jsonable(x):
    """Inverse of :func:`to_jsonable` for non-finite float markers (arrays stay lists)."""
    if isinstance(x, dict):
        return {k: from_jsonable(v) for k, v in x.items()}
    if isinstance(x, list):
        return [from_jsonable(v) for v in x]
    return _unfloat(x)


def complex_matrix(data):
    """Nested arrays with [re, im] leaves (or plain reals) -> complex ndarray."""
    try:
        a = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"matrix is not numeric: {exc}") from None
    if a.ndim >= 1 and a.shape[-1] == 2 and a.ndim >= 3:
        return a[..., 0] + 1j * a[..., 1]
    if a.ndim == 2:
        return a.astype(complex)
    raise ConfigError(f"cannot interpret array of shape {a.shape} as a complex matrix")


def emit_json(obj, stream=None):
    text = json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n"
    if stream is not None:
        stream.write(text)
    return text


def parse_json(text):
    return from_jsonable(json.loads(text))


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))  # shortest round-trip decimal
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return str(v)


def emit_csv(rows, columns=CSV_COLUMNS, stream=None):
    """Header row plus one line per row (dicts keyed by column)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r[c]) for c in columns])
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def parse_csv(text):
    """Rows as dicts of floats (strings kept where not numeric)."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ConfigError("empty CSV")
    head = rows[0]
    out = []
    for r in rows[1:]:
        d = {}
        for k, v in zip(head, r):
            try:
                d[k] = float(v)
            except ValueError:
                d[k] = v
        out.append(d)
    return head, out


# ------------------------------------------------------------------ config

def load_config(path):
    try:
        with open(path) as f:
            cfg = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    ver = cfg.get("schema_version")
    if ver != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {ver!r} (expected {SCHEMA_VERSION})")
    return cfg


def _load_kraus(path):
    try:
        with open(path) as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read Kraus file {path}: {exc}") from None
    if isinstance(data, dict):
        data = data.get("kraus")
    if not isinstance(data, list) or not data:
        raise ConfigError("Kraus file must hold a non-empty list of matrices")
    return [complex_matrix(E) for E in data]


def _check_range(name, key, val):
    if key in ("kappa", "kappa_eff", "kappa_down") and not val > 0:
        raise ConfigError(f"{name}: {key} must be positive")
    if key == "kappa_up" and not val >= 0:
        raise ConfigError(f"{name}: {key} must be non-negative")
    if key == "truncation" and not (isinstance(val, int) and 4 <= val <= 200):
        raise ConfigError(f"{name}: truncation must be an integer in [4, 200]")


def model_from_config(spec):
    """LindbladModel from ``{"builtin", "params"}`` or explicit matrices."""
    if not isinstance(spec, dict):
        raise ConfigError("model entry must be an object")
    if "builtin" in spec:
        name = spec["builtin"]
        if name not in BUILTIN_PARAMS:
            raise ConfigError(f"unknown builtin {name!r}; choose from {sorted(BUILTIN_PARAMS)}")
        params = dict(spec.get("params", {}))
        bad = set(params) - set(BUILTIN_PARAMS[name])
        if bad:
            raise ConfigError(f"{name}: unknown parameters {sorted(bad)}")
        for k, v in params.items():
            _check_range(name, k, v)
        if name in BOSONIC:
            params.setdefault("truncation", DEFAULT_TRUNCATION)
        if name == "channel_embed":
            if "kraus" not in params:
                raise ConfigError("channel_embed needs a kraus file")
            kraus = _load_kraus(params["kraus"])
            try:
                return embed_channel(kraus, params.get("kappa_eff", 1.0))
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        return getattr(models, name)(**params)
    if "H" in spec:
        try:
            H = complex_matrix(spec["H"])
            jumps = tuple((complex_matrix(j["F"]), float(j.get("kappa", 1.0))) for j in spec.get("jumps", []))
            return LindbladModel(H, jumps)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid explicit model: {exc}") from None
    raise ConfigError("model entry needs 'builtin' or 'H'")


def parse_range(text):
    """'start:stop:step' (inclusive stop, within step/2) or a comma list."""
    try:
        if ":" in text:
            a, b, h = (float(t) for t in text.split(":"))
            if h <= 0:
                raise ValueError("step must be positive")
            n = int(math.floor((b - a) / h + 0.5))
            return [round(a + k * h, 12) for k in range(n + 1)] if b >= a else []
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad range {text!r}: {exc}") from None


# ------------------------------------------------------------ computations

def _threads():
    v = os.environ.get(THREADS_ENV)
    if v is None:
        return None
    try:
        n = int(v)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer")
    return n


def _projector(m, L=None):
    """Nondecaying projector: jump kernel when it passes the no-leak test, else spectral."""
    cp = dark_projector(m)
    if cp.rank > 0 and validate_proposition1(m, cp)["passed"]:
        return cp, "jump_kernel"
    return nondecaying_projector(build_generator(m) if L is None else L), "spectral"


def cmd_spectrum(m, args):
    L = build_generator(m)
    sp = spectrum(L)
    order = np.lexsort((sp.eigenvalues.imag, -sp.eigenvalues.real))
    return {
        "dim": m.dim,
        "eigenvalues": sp.eigenvalues[order],
        "dissipative_gap": dissipative_gap(sp),
        "diagonalizable": sp.diagonalizable,
        "condition": sp.condition,
        "spectral_radius": sp.radius,
    }


def cmd_corners(m, args):
    L = build_generator(m)
    cp, how = _projector(m, L)
    dec = decompose_generator(L, cp, m)
    rep = gap_report(dec)
    prop = validate_proposition1(m, cp)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, pg = parent_hamiltonian(m, cp.P)
    return {
        "rank": cp.rank,
        "projector_source": how,
        "P": cp.P,
        "proposition1": prop,
        "triangularity_residual": dec.triangularity_residual,
        "crosscheck_residual": dec.crosscheck_residual,
        "delta_dg": dissipative_gap(spectrum(L)),
        "delta_edg": rep.delta_edg,
        "delta_complement": rep.delta_complement,
        "delta_lr": rep.delta_lr,
        "parent_gap": pg,
    }


def cmd_asymptotics(m, args):
    sp = asymptotic_space(m)
    out = {
        "dim": m.dim,
        "n_modes": len(sp),
        "frequencies": sp.frequencies,
        "rank": sp.corners.rank,
        "steady_state": sp.steady_state(),
        "Psi": sp.Psi,
        "J": sp.J,
        "J_crosscheck": sp.J_crosscheck,
    }
    r = sp.corners.rank
    if sp.steady and len(sp) == r * r:
        # conserved quantities dual to the matrix units of the nondecaying block
        w, V = np.linalg.eigh(sp.corners.P)
        E = V[:, w > 0.5]
        if np.allclose(np.abs(E), np.eye(m.dim)[:, : r], atol=1e-12):
            E = np.eye(m.dim, dtype=complex)[:, :r]
        targets = np.array([np.outer(E[:, k], E[:, l].conj()) for k in range(r) for l in range(r)])
        Jkl = dual_basis(sp, targets)
        out["J_kl"] = {f"{k}{l}": Jkl[k * r + l] for k in range(r) for l in range(r)}
    return out


def gap_point(m, check_model=None, tol=1e-6):
    """One gap-sweep row; ``check_model`` (truncation + 10) sets the warning flag.

    A point whose nondecaying subspace cannot be resolved (typically a
    truncation too small for the coherent states) gives NaN gaps and warning 1.
    """
    try:
        g = model_gaps(m)
    except ValueError:
        nan = float("nan")
        return {"delta_dg": nan, "delta_edg": nan, "parent_gap": nan, "warning": 1}
    warn = 0
    if check_model is not None:
        try:
            h = model_gaps(check_model)
        except ValueError:
            return {"delta_dg": g.delta_dg, "delta_edg": g.delta_edg, "parent_gap": g.parent_gap, "warning": 1}
        for a, b in ((g.delta_dg, h.delta_dg), (g.delta_edg, h.delta_edg), (g.parent_gap, h.parent_gap)):
            if not abs(a - b) <= tol * max(1.0, abs(a)):
                warn = 1
    return {"delta_dg": g.delta_dg, "delta_edg": g.delta_edg, "parent_gap": g.parent_gap, "warning": warn}


def _sweep_task(task):
    name, params, check, nthreads = task
    with threadpool_limits(nthreads):
        m = getattr(models, name)(**params)
        cm = None
        if check and "truncation" in params:
            cm = getattr(models, name)(**{**params, "truncation": params["truncation"] + 10})
        return gap_point(m, cm)


def gap_sweep(name, alphas, params=None, check=True, workers=1):
    """Rows of (alpha, delta_dg, delta_edg, parent_gap, warning) for a builtin with an alpha knob.

    Points are independent; with ``workers > 1`` they run in a process pool
    and are collected in input order, so output does not depend on ``workers``.
    """
    if name not in BUILTIN_PARAMS or "alpha" not in BUILTIN_PARAMS[name]:
        raise ConfigError(f"gap-sweep needs a builtin with an alpha parameter, got {name!r}")
    params = dict(params or {})
    if name in BOSONIC:
        params.setdefault("truncation", DEFAULT_TRUNCATION)
    tasks = [(name, {**params, "alpha": a}, check, 1 if workers > 1 else None) for a in alphas]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            res = list(ex.map(_sweep_task, tasks))
    else:
        res = [_sweep_task(t) for t in tasks]
    return [{"alpha": a, **r} for a, r in zip(alphas, res)]


def cmd_respond(m, args):
    from .response import Perturbation, effective_hamiltonian_W, frequency_response, leakage, perturbation_superop

    if args.V is None:
        raise ConfigError("respond needs --V (JSON matrix)")
    V = _load_matrix(args.V)
    A = _load_matrix(args.A) if args.A else V
    if V.shape != (m.dim, m.dim) or A.shape != (m.dim, m.dim):
        raise ConfigError("perturbation/observable shape does not match the model")
    sp = asymptotic_space(m)
    L = sp.L
    p = Perturbation(V=V)
    dL = perturbation_superop(p, m)
    omegas = parse_range(args.omega) if args.omega else []
    chi = [frequency_response(L, sp, A, dL, w) for w in omegas]
    W, rep = effective_hamiltonian_W(sp, p, m)
    lk = leakage(sp, dL)
    return {
        "omega": omegas,
        "chi": [c.value for c in chi],
        "chi_error": [c.error for c in chi],
        "resonant": [c.resonant for c in chi],
        "W": W,
        "W_unitary": rep["unitary"],
        "W_max_symmetric": rep["max_symmetric"],
        "leakage_norm": float(np.linalg.norm(lk.drazin)),
        "leakage_identity_deviation": lk.deviation,
    }


def _load_matrix(path):
    try:
        with open(path) as f:
            return complex_matrix(json.load(f))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read matrix {path}: {exc}") from None


def cmd_holonomy(m, args):
    from .geometry import ParameterFamily, Path, holonomy_operator

    if args.model != "cat_pair":
        raise ConfigError("holonomy supports the cat_pair builtin (alpha1 loop)")
    N = args.trunc or 40
    a0 = args.alpha0 if args.alpha0 is not None else 2.0
    c = complex(args.center)
    r = args.radius
    fam = ParameterFamily(lambda x: models.cat_pair(a0, c + r * np.exp(1j * x[0]), N), 1, projector="dark")
    path = Path(lambda s: np.array([2 * np.pi * s]), closed=True)
    k0 = models.coherent_state(a0, N)
    k1 = models.coherent_state(c + r, N)
    out = holonomy_operator(fam, path, args.steps, apply_to=[np.outer(k1, k0.conj()), np.outer(k1, k1.conj())])
    amp = k1.conj() @ out[0] @ k0
    pop = (k1.conj() @ out[1] @ k1).real
    area = math.pi * r * r
    return {
        "alpha0": a0,
        "center": c,
        "radius": r,
        "steps": args.steps,
        "truncation": N,
        "coherence_amplitude": amp,
        "phase": float(np.angle(amp)),
        "enclosed_area": area,
        "twice_area": 2 * area,
        "population_after_loop": pop,
    }


def cmd_qgt(m, args):
    from .geometry import ParameterFamily, alt_metric, curvature, metric_tensor, qgt

    if args.model != "four_level":
        raise ConfigError("qgt supports the four_level builtin (basis rotated by seeded generators)")
    rng = np.random.default_rng(args.seed)
    G = [models.random_hermitian(4, rng) for _ in range(2)]
    alpha = 0.0 if args.alpha is None else _parse_alpha(args.alpha)
    beta = args.beta or 0.0

    fam = ParameterFamily(lambda x: models.four_level(alpha, beta, basis=expm(-1j * (x[0] * G[0] + x[1] * G[1]))), 2)
    x = np.array([float(t) for t in args.point.split(",")])
    if x.size != 2:
        raise ConfigError("--point needs two comma-separated values")
    return {
        "point": x,
        "seed": args.seed,
        "Q01": qgt(fam, x, 0, 1),
        "Q10": qgt(fam, x, 1, 0),
        "curvature01": curvature(fam, x, 0, 1),
        "metric": metric_tensor(fam, x),
        "alt_metric": np.array([[alt_metric(fam, x, a, b) for b in range(2)] for a in range(2)]),
    }


def cmd_embed_channel(m, args):
    if args.kraus is None:
        raise ConfigError("embed-channel needs --kraus")
    kraus = _load_kraus(args.kraus)
    try:
        model = embed_channel(kraus, args.kappa)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    d_out, d_in = kraus[0].shape
    out = {"d_in": d_in, "d_out": d_out, "kappa_eff": args.kappa, "dim": model.dim}
    if args.verify:
        target = kraus_superop(kraus)
        C = extract_channel(model, d_out)
        dev = float(np.max(np.abs(C - target)))
        L = build_generator(model)
        T = 30.0 / args.kappa
        E = expm(T * L)
        Cp = np.zeros_like(C)
        N = model.dim
        for j in range(d_in):
            for i in range(d_in):
                X = np.zeros((N, N), dtype=complex)
                X[d_out + i, d_out + j] = 1.0
                Y = devectorize(E @ vectorize(X))
                Cp[:, j * d_in + i] = vectorize(Y[:d_out, :d_out])
        pdev = float(np.max(np.abs(Cp - target)))
        out.update({"max_channel_deviation": dev, "propagation_time": T, "propagation_deviation": pdev})
        if dev > 1e-9 or pdev > 1e-6:
            raise NumericalFailure("embedded channel does not reproduce the Kraus channel", out)
    return out


COMMANDS = {
    "spectrum": cmd_spectrum,
    "corners": cmd_corners,
    "asymptotics": cmd_asymptotics,
    "respond": cmd_respond,
    "holonomy": cmd_holonomy,
    "qgt": cmd_qgt,
    "embed-channel": cmd_embed_channel,
}
NO_MODEL = ("embed-channel", "holonomy", "qgt", "gap-sweep")


# --------------------------------------------------------------------- CLI

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(1)


def build_parser():
    p = _Parser(prog="fourcorners", description="Four-corners analysis of Lindbladians.")
    p.add_argument("command", choices=sorted(list(COMMANDS) + ["gap-sweep"]))
    p.add_argument("model", nargs="?", help="builtin model name")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--alpha", help="alpha (a value, or start:stop:step for gap-sweep)")
    p.add_argument("--beta", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--alpha0", type=float)
    p.add_argument("--alpha1", type=complex)
    p.add_argument("--kappa-down", type=float)
    p.add_argument("--kappa-up", type=float)
    p.add_argument("--trunc", type=int)
    p.add_argument("--kraus")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--no-convergence-check", action="store_true",
                   help="gap-sweep: skip the truncation+10 comparison")
    p.add_argument("--V", help="respond: perturbation matrix (JSON)")
    p.add_argument("--A", help="respond: observable matrix (JSON, default V)")
    p.add_argument("--omega", help="respond: frequencies (list or start:stop:step)")
    p.add_argument("--center", default="-2", help="holonomy: loop center (complex)")
    p.add_argument("--radius", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=800)
    p.add_argument("--point", default="0,0", help="qgt: parameter point x0,x1")
    p.add_argument("--seed", type=int, default=0)
    return p


def _resolve_model(args, cfg):
    mspec = dict(cfg.get("model", {})) if cfg else {}
    if args.model:
        mspec = {"builtin": args.model, "params": {}}
    if "builtin" in mspec:
        params = dict(mspec.get("params", {}))
        name = mspec["builtin"]
        allowed = BUILTIN_PARAMS.get(name, ())
        flags = {
            "alpha": None if args.alpha is None else _parse_alpha(args.alpha),
            "beta": args.beta,
            "kappa": args.kappa,
            "alpha0": args.alpha0,
            "alpha1": args.alpha1,
            "kappa_down": args.kappa_down,
            "kappa_up": args.kappa_up,
            "truncation": args.trunc if args.trunc is not None else (cfg or {}).get("truncation"),
            "kraus": args.kraus,
            "kappa_eff": args.kappa if name == "channel_embed" else None,
        }
        if name == "channel_embed":
            flags["kappa"] = None
        for k, v in flags.items():
            if v is None:
                continue
            if k not in allowed:
                raise ConfigError(f"{name} does not take {k}")
            params[k] = v
        mspec = {"builtin": name, "params": params}
    return model_from_config(mspec) if mspec else None


def _parse_alpha(text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"--alpha must be a number here, got {text!r}") from None


def run(argv=None, stdout=None):
    """Execute one command; returns the exit code."""
    stdout = sys.stdout if stdout is None else stdout
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args.config) if args.config else None
        nthreads = _threads()
        out_spec = (cfg or {}).get("output", {})
        out_path = args.out or out_spec.get("path")
        fmt = args.format or out_spec.get("format") or ("csv" if args.command == "gap-sweep" else "json")
        with threadpool_limits(nthreads), warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            if args.command == "gap-sweep":
                name = args.model or (cfg or {}).get("model", {}).get("builtin")
                if args.alpha is None:
                    raise ConfigError("gap-sweep needs --alpha start:stop:step")
                params = dict((cfg or {}).get("model", {}).get("params", {}))
                params.pop("alpha", None)
                if args.trunc is not None:
                    params["truncation"] = args.trunc
                elif cfg and "truncation" in cfg:
                    params["truncation"] = cfg["truncation"]
                for k, v in (("beta", args.beta), ("kappa", args.kappa)):
                    if v is not None:
                        params[k] = v
                for k, v in params.items():
                    _check_range(name, k, v)
                rows = gap_sweep(name, parse_range(args.alpha), params,
                                 check=not args.no_convergence_check, workers=nthreads or 1)
                result = rows
            else:
                m = None if args.command in NO_MODEL else _resolve_model(args, cfg)
                if m is None and args.command not in NO_MODEL:
                    raise ConfigError("no model given (builtin name or --config)")
                result = COMMANDS[args.command](m, args)
        if isinstance(result, dict):
            result = {"schema_version": SCHEMA_VERSION, "command": args.command, **result}
            if caught:
                result["warnings"] = sorted({str(w.message) for w in caught})
        if fmt == "csv":
            if not isinstance(result, list):
                raise ConfigError(f"{args.command} produces structured output; use --format json")
            text = emit_csv(result)
        else:
            text = emit_json(result if isinstance(result, dict) else {"schema_version": SCHEMA_VERSION, "rows": result})
        if out_path:
            with open(out_path, "w") as f:
                f.write(text)
        else:
            stdout.write(text)
        return 0
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)
    except ConfigError as exc:
        sys.stderr.write(f"fourcorners: config error: {exc}\n")
        return 1
    except NumericalFailure as exc:
        sys.stderr.write(emit_json({"error": str(exc), "type": "NumericalFailure", "diagnostics": exc.diagnostics}))
        return 2
    except (np.linalg.LinAlgError, ValueError, RuntimeError, FloatingPointError) as exc:
        sys.stderr.write(emit_json({"error": str(exc), "type": type(exc).__name__}))
        return 2


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
