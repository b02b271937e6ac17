"""Command-line entry point.

Every run writes a CSV (``#`` metadata lines, a header row, values at 17
significant digits) and, when ``--out`` is given, a manifest next to it.  The
manifest uses the same flat ``key = value`` format as ``--config`` files, so
``banach-clt replay run.csv.manifest`` (or ``<subcommand> --config
run.csv.manifest``) regenerates the CSV byte for byte.

Exit codes: 0 success, 1 validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from . import __version__

SUBCOMMANDS = ("verify-frechet", "coeffs", "wasserstein", "delta", "rate", "bound", "empirical", "lsv-tau")


class UsageError(Exception):
    pass


class ValidationFailure(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


# ---------------------------------------------------------------------------
# parsing helpers


def parse_int_list(text: str) -> list[int]:
    """``"64,128,...,4096"`` expands geometrically (or arithmetically when
    the first two terms do not have an integer ratio)."""
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if "..." not in parts:
        return [int(p) for p in parts]
    i = parts.index("...")
    if i < 2 or i != len(parts) - 2:
        raise UsageError(f"cannot expand list {text!r}")
    head = [int(p) for p in parts[:i]]
    last = int(parts[-1])
    a, b = head[-2], head[-1]
    # geometric when the ratio is an integer and lands on the end, else arithmetic
    if a > 0 and b % a == 0 and b // a > 1:
        out, r = list(head), b // a
        while out[-1] * r <= last:
            out.append(out[-1] * r)
        if out[-1] == last:
            return out
    step = b - a
    if step <= 0:
        raise UsageError(f"cannot expand list {text!r}")
    out = list(head)
    while out[-1] + step <= last:
        out.append(out[-1] + step)
    if out[-1] != last:
        raise UsageError(f"list {text!r} does not reach {last}")
    return out


def parse_float_list(text: str) -> list[float]:
    return [float(p) for p in str(text).split(",") if p.strip()]


def parse_str_list(text: str) -> list[str]:
    return [p.strip() for p in str(text).split(",") if p.strip()]


def _kv(text: str) -> dict[str, str]:
    out = {}
    for item in text.split(","):
        if not item:
            continue
        if "=" not in item:
            raise UsageError(f"expected key=value in {text!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def parse_model(spec: str):
    """Model strings: ``iid:rademacher``, ``iid:uniform[:a=..,b=..]``,
    ``iid:normal``, ``iid:discrete:atoms=x;y,probs=p;q``,
    ``two-state:a=0.75``, ``three-state``,
    ``markov:states=x;y,P=a;b|c;d[,center=true]``, ``lsv:gamma=0.25[,burn_in=..]``."""
    from .generators import FiniteMarkov, IIDModel, LSVModel, reference_three_state_chain, two_state_chain

    head, _, rest = spec.partition(":")
    try:
        if head == "iid":
            kind, _, params = rest.partition(":")
            if kind == "rademacher":
                return IIDModel("rademacher")
            if kind in ("normal", "standard_normal"):
                return IIDModel("standard_normal")
            if kind == "uniform":
                kv = _kv(params)
                return IIDModel("uniform", (float(kv.get("a", 0.0)), float(kv.get("b", 1.0))))
            if kind == "discrete":
                kv = _kv(params)
                atoms = [float(x) for x in kv["atoms"].split(";")]
                probs = [float(x) for x in kv["probs"].split(";")]
                return IIDModel("discrete", (atoms, probs))
        elif head == "two-state":
            kv = _kv(rest)
            return two_state_chain(float(kv.get("a", 0.75)))
        elif head == "three-state":
            return reference_three_state_chain()
        elif head == "markov":
            kv = _kv(rest)
            states = [float(x) for x in kv["states"].split(";")]
            P = [[float(x) for x in row.split(";")] for row in kv["P"].split("|")]
            center = kv.get("center", "false").lower() == "true"
            return FiniteMarkov(states, np.array(P), center=center, name=spec)
        elif head == "lsv":
            kv = _kv(rest)
            return LSVModel(
                float(kv["gamma"]),
                burn_in=int(kv.get("burn_in", 1000)),
                m_bins=int(kv.get("m_bins", 1024)),
            )
    except (KeyError, ValueError) as exc:
        raise UsageError(f"bad model spec {spec!r}: {exc}") from exc
    raise UsageError(f"unknown model spec {spec!r}")


def parse_function(spec: str, delta: float = 1.0):
    """Test functions: ``abs<r>`` is ``|x|^r / (r (r-1))``, ``signed<r>`` is
    ``x|x|^(r-1)`` normalized the same way and by ``2^(1-delta)``,
    ``square`` is ``x^2``, ``psi:p=..,q=..[,scale=..]`` is a norm power."""
    from .frechet import abs_power_function, holder_constant, polynomial_function, psi_power, signed_power_function

    try:
        if spec.startswith("abs"):
            r = float(spec[3:])
            return abs_power_function(r, 1.0 / (r * (r - 1.0)), name=spec)
        if spec.startswith("signed"):
            r = float(spec[6:])
            return signed_power_function(r, 1.0 / (r * (r - 1.0) * 2.0 ** (1.0 - delta)), name=spec)
        if spec == "square":
            return polynomial_function([0.0, 0.0, 1.0], name=spec)
        if spec.startswith("psi:"):
            kv = _kv(spec[4:])
            p, q = float(kv["p"]), float(kv["q"])
            default = 1.0 / holder_constant(p) if q == 3 and p >= 3 else 1.0
            return psi_power(p, q, float(kv.get("scale", default)), name=spec)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"bad function spec {spec!r}: {exc}") from exc
    raise UsageError(f"unknown function spec {spec!r}")


def parse_law(spec: str):
    """``"x1:p1,x2:p2,..."``."""
    from .laws import DiscreteLaw1D

    try:
        pairs = [item.split(":") for item in spec.split(",") if item.strip()]
        return DiscreteLaw1D([float(a) for a, _ in pairs], [float(p) for _, p in pairs])
    except ValueError as exc:
        raise UsageError(f"bad law spec {spec!r}: {exc}") from exc


def read_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment line."""
    out = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                s = line.strip()
                if not s or s.startswith("#"):
                    continue
                if "=" not in s:
                    raise UsageError(f"{path}:{lineno}: expected 'key = value'")
                k, v = s.split("=", 1)
                k = k.strip().replace("-", "_")
                if not k:
                    raise UsageError(f"{path}:{lineno}: empty key")
                out[k] = v.strip()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# option registry


@dataclass
class Opt:
    name: str
    type: Callable[[str], Any]
    default: Any
    help: str

    @property
    def dest(self) -> str:
        return self.name.replace("-", "_")


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


COMMON = [
    Opt("seed", int, 0, "master seed"),
]

OPTIONS: dict[str, list[Opt]] = {
    "verify-frechet": [
        Opt("p", float, 3.0, "norm exponent"),
        Opt("q", float, 3.0, "power"),
        Opt("trials", int, 20, "random inputs per order"),
        Opt("grid-size", int, 6, "number of grid atoms"),
    ],
    "coeffs": [
        Opt("model", str, "two-state:a=0.75", "model spec"),
        Opt("kinds", str, "gamma_tilde,tau1", "comma-separated coefficient kinds"),
        Opt("kmax", int, 10, "largest lag k"),
        Opt("max-lag", int, 64, "truncation of suprema over secondary lags"),
        Opt("delta", float, 1.0, "delta for delta-indexed kinds"),
    ],
    "wasserstein": [
        Opt("a", str, "0:0.5,1:0.5", "first law as x:p pairs"),
        Opt("b", str, "0:0.5,2:0.5", "second law as x:p pairs"),
        Opt("p", float, 1.0, "order of the distance"),
    ],
    "delta": [
        Opt("model", str, "iid:rademacher", "model spec"),
        Opt("f", str, "abs3", "test function spec"),
        Opt("n", int, 256, "sample size"),
        Opt("reps", int, 10000, "replicates"),
        Opt("delta", float, 1.0, "Hoelder exponent of the class"),
        Opt("M", float, 0.0, "bound on the second derivative at 0"),
        Opt("waive", _bool, False, "skip class certification"),
        Opt("coupling", str, "independent", "independent or quantile"),
    ],
    "rate": [
        Opt("model", str, "iid:rademacher", "model spec"),
        Opt("f", str, "abs3", "test function spec"),
        Opt("ns", str, "64,128,...,4096", "sample sizes"),
        Opt("reps", int, 10000, "replicates per n"),
        Opt("delta", float, 1.0, "Hoelder exponent of the class"),
        Opt("M", float, 0.0, "bound on the second derivative at 0"),
        Opt("waive", _bool, False, "skip class certification"),
        Opt("coupling", str, "independent", "independent or quantile"),
        Opt("kmax", int, 64, "coefficient lags used in the bound"),
    ],
    "bound": [
        Opt("model", str, "iid:rademacher", "model spec"),
        Opt("ns", str, "64,128,...,4096", "sample sizes"),
        Opt("delta", float, 1.0, "Hoelder exponent"),
        Opt("M", float, 0.0, "bound on the second derivative at 0"),
        Opt("kmax", int, 64, "coefficient lags"),
        Opt("max-lag", int, 64, "truncation of suprema"),
    ],
    "empirical": [
        Opt("model", str, "iid:uniform", "model spec"),
        Opt("n", int, 1000, "sample size"),
        Opt("reps", int, 100, "replicates"),
        Opt("p", float, 2.0, "norm exponent"),
        Opt("grid", str, "", "a,b,m for a Lebesgue grid (default: model support)"),
        Opt("cdf", str, "exact", "exact or calibration"),
        Opt("n-cal", int, 1_000_000, "calibration run length"),
    ],
    "lsv-tau": [
        Opt("gamma", float, 0.25, "map parameter"),
        Opt("ks", str, "2,4,...,64", "lags"),
        Opt("bins", int, 64, "equal-mass bins"),
        Opt("nmc", int, 100_000, "orbit samples"),
        Opt("burn-in", int, 1000, "burn-in iterations"),
    ],
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="banach-clt", description="CLT-rate laboratory")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = subs.add_parser(name)
        for opt in COMMON + OPTIONS[name]:
            sp.add_argument(f"--{opt.name}", dest=opt.dest, default=None, help=f"{opt.help} (default {opt.default})")
        sp.add_argument("--config", default=None, help="flat key = value file; flags win")
        sp.add_argument("--out", default=None, help="CSV path (stdout when omitted)")
        sp.add_argument("--manifest", default=None, help="manifest path (default <out>.manifest)")
        sp.add_argument("--jobs", type=int, default=1, help="worker threads (results do not depend on it)")
        sp.add_argument("--plot-script", action="store_true", help="also write <out>.plot.py")
    rp = subs.add_parser("replay")
    rp.add_argument("manifest")
    rp.add_argument("--out", default=None)
    rp.add_argument("--jobs", type=int, default=1)
    return parser


def resolve(sub: str, args: argparse.Namespace, config: dict[str, str]) -> dict[str, Any]:
    known = {o.dest for o in COMMON + OPTIONS[sub]}
    extra = set(config) - known - {"subcommand", "version"}
    if extra:
        raise UsageError(f"unknown config keys for {sub}: {sorted(extra)}")
    out = {}
    for opt in COMMON + OPTIONS[sub]:
        raw = getattr(args, opt.dest)
        if raw is None:
            raw = config.get(opt.dest, opt.default)
        try:
            out[opt.dest] = opt.type(raw) if isinstance(raw, str) else raw
        except ValueError as exc:
            raise UsageError(f"--{opt.name}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# subcommands; each returns (meta lines, header, rows, ok)


def run_verify_frechet(c):
    from .frechet import PsiFunctional, fd_derivative, psi_d1, psi_d2, psi_d3
    from .generators import replicate_rng
    from .measure import DiscreteMeasure, LpVector, lp_norm

    F = PsiFunctional(c["p"], c["q"])
    rng = replicate_rng(c["seed"])
    m = c["grid_size"]
    orders = [1, 2] + ([3] if c["p"] >= 3 or c["p"] == 2 else [])
    tol = {1: 1e-5, 2: 1e-5, 3: 1e-4}
    rows, ok = [], True
    for trial in range(c["trials"]):
        mu = DiscreteMeasure(np.sort(rng.uniform(-1, 1, m)) + np.arange(m) * 1e-6, rng.uniform(0.2, 1.0, m))
        x = LpVector(mu, rng.choice([-1, 1], m) * rng.uniform(0.5, 2.0, m))
        hs = [LpVector(mu, rng.standard_normal(m)) for _ in range(3)]
        for order in orders:
            dirs = hs[:order]
            exact = (psi_d1, psi_d2, psi_d3)[order - 1](F, x, *dirs)
            fd = fd_derivative(F, x, dirs, order)
            scale = abs(c["q"]) * lp_norm(x, c["p"]) ** (c["q"] - order) * np.prod([lp_norm(h, c["p"]) for h in dirs])
            rel = abs(exact - fd.value) / max(abs(exact), 1e-2 * scale)
            ok &= rel <= tol[order]
            rows.append([order, trial, exact, fd.value, rel])
    worst = {o: max(r[4] for r in rows if r[0] == o) for o in orders}
    meta = [f"max_rel_err_order{o}={fmt(v)}" for o, v in worst.items()]
    return meta, ["order", "trial", "closed_form", "finite_difference", "rel_err"], rows, ok


def run_coeffs(c):
    from .dependence import coefficient_sequence

    model = parse_model(c["model"])
    rows = []
    for kind in parse_str_list(c["kinds"]):
        seq = coefficient_sequence(model, kind, range(1, c["kmax"] + 1), c["delta"], c["max_lag"])
        for k in seq.ks:
            rows.append([kind, k, seq.values[k], seq.provenance, seq.argmax.get(k, "")])
    return ["reduction=conditioning on X_0 (Markov property)"], ["kind", "k", "value", "provenance", "argmax_lag"], rows, True


def run_wasserstein(c):
    from .metrics import ot_lp_oracle, wasserstein_1d

    a, b = parse_law(c["a"]), parse_law(c["b"])
    w = wasserstein_1d(a, b, c["p"])
    lp = ot_lp_oracle(a, b, c["p"]) if max(a.size, b.size) <= 64 else math.nan
    return [], ["p", "wasserstein_1d", "ot_lp_oracle"], [[c["p"], w, lp]], True


def _certify(f, c, mu=None):
    from .frechet import lambda_class_check

    if c["waive"]:
        return None
    return lambda_class_check(f, c["delta"], c["M"], trials=1000, seed=c["seed"], measure=mu)


def _scalar_gaussian(model):
    from .gaussian import GaussianSampler, scalar_long_run_variance

    return GaussianSampler.scalar(scalar_long_run_variance(model))


def run_delta(c, jobs=1):
    from .metrics import delta_n

    model = parse_model(c["model"])
    f = parse_function(c["f"], c["delta"])
    if not f.is_scalar:
        raise UsageError("delta: only scalar test functions are supported from the command line")
    cert = _certify(f, c)
    if cert is not None and not cert.passed:
        raise ValidationFailure(f"frechet: {f.label} failed class certification (max ratio {cert.max_ratio:.4g})")
    est = delta_n(f, model, c["n"], c["reps"], _scalar_gaussian(model), c["seed"],
                  certificate=cert, waive=c["waive"], coupling=c["coupling"], jobs=jobs)
    meta = [f"waived={fmt(est.waived)}"]
    return meta, ["n", "value", "stderr", "reps", "seed"], [[est.n, est.value, est.stderr, est.reps, est.seed]], True


def run_rate(c, jobs=1):
    from .bounds import bound_b, exact_bound_inputs, rate_fit
    from .generators import FiniteMarkov, IIDModel
    from .metrics import delta_n

    model = parse_model(c["model"])
    f = parse_function(c["f"], c["delta"])
    cert = _certify(f, c)
    if cert is not None and not cert.passed:
        raise ValidationFailure(f"frechet: {f.label} failed class certification")
    ns = parse_int_list(c["ns"])
    g = _scalar_gaussian(model)
    inputs = None
    if isinstance(model, (IIDModel, FiniteMarkov)):
        try:
            inputs = exact_bound_inputs(model, c["delta"], c["M"], c["kmax"])
        except (TypeError, ValueError):
            inputs = None
    rows, ests = [], []
    for n in ns:
        est = delta_n(f, model, n, c["reps"], g, c["seed"], certificate=cert,
                      waive=c["waive"], coupling=c["coupling"], jobs=jobs)
        ests.append(est)
        b = bound_b(inputs, n).bound if inputs is not None else math.nan
        rows.append([n, est.value, est.stderr, b, b - est.value])
    fit = rate_fit(ns, ests)
    meta = [f"slope={fmt(fit.slope)}", f"slope_stderr={fmt(fit.slope_stderr)}", f"r_squared={fmt(fit.r_squared)}"]
    return meta, ["n", "delta_hat", "stderr", "bound", "slack"], rows, True


def run_bound(c):
    from .bounds import bound_b, exact_bound_inputs

    model = parse_model(c["model"])
    inputs = exact_bound_inputs(model, c["delta"], c["M"], c["kmax"], c["max_lag"])
    rows = []
    diag = ""
    for n in parse_int_list(c["ns"]):
        r = bound_b(inputs, n)
        diag = r.diagnosis or diag
        rows.append([n, r.prefactor, r.bracket, r.bound, r.gamma_series, r.gamma2_sum])
    meta = [f"c_delta={fmt(r.c_delta)}", f"lambda={fmt(inputs.lam)}"] + ([f"diagnosis={diag}"] if diag else [])
    return meta, ["n", "prefactor", "bracket", "bound", "gamma_series", "gamma2_sum"], rows, True


def run_empirical(c):
    from .empirical import calibration_cdf, field_norms, model_cdf, iid_l2_moment
    from .generators import IIDModel, LSVModel, replicate_rng, simulate_batch
    from .measure import lebesgue_grid

    model = parse_model(c["model"])
    if c["grid"]:
        a, b, m = c["grid"].split(",")
        mu = lebesgue_grid(float(a), float(b), int(m))
    elif isinstance(model, LSVModel) or (isinstance(model, IIDModel) and model.marginal == "uniform"):
        lo, hi = (0.0, 1.0) if isinstance(model, LSVModel) else model.params
        mu = lebesgue_grid(lo, hi, 512)
    else:
        raise UsageError("empirical: pass --grid a,b,m for this model")
    if c["cdf"] == "exact":
        F = model_cdf(model)
    elif c["cdf"] == "calibration":
        F = calibration_cdf(model, c["n_cal"], c["seed"])
    else:
        raise UsageError("--cdf must be exact or calibration")
    rows = []
    chunk = max(1, (1 << 22) // max(c["n"], 1))
    for start in range(0, c["reps"], chunk):
        size = min(chunk, c["reps"] - start)
        paths = simulate_batch(model, c["n"], size, replicate_rng(c["seed"], start // chunk))
        for i, v in enumerate(field_norms(paths, F, mu, c["p"])):
            rows.append([start + i, v])
    meta = [f"cdf_source={F.source}", f"grid={mu.points[0]!r}..{mu.points[-1]!r} m={mu.size}"]
    if isinstance(model, IIDModel):
        meta.append(f"iid_l2_moment={fmt(iid_l2_moment(F, mu))}")
    return meta, ["rep", "norm"], rows, True


def run_lsv_tau(c):
    from .dependence import _ols_slope, tau1_lsv_empirical

    seq = tau1_lsv_empirical(c["gamma"], parse_int_list(c["ks"]), c["bins"], c["nmc"], c["seed"], c["burn_in"])
    ks, vals = seq.array()
    pos = (ks >= 1) & (vals > 0)
    slope, se = _ols_slope(np.log(ks[pos]), np.log(vals[pos]))
    rows = [[k, seq.values[k], seq.stderr[k]] for k in seq.ks]
    meta = [f"slope={fmt(slope)}", f"slope_stderr={fmt(se)}", f"theory_slope={fmt(-(1 - c['gamma']) / c['gamma'])}",
            "note=forward orbits of T_gamma; binning biases the estimate upward"]
    if "flag" in seq.params:
        meta.append(f"flag={seq.params['flag']}")
    return meta, ["k", "tau1_hat", "noise_floor"], rows, True


RUNNERS = {
    "verify-frechet": run_verify_frechet,
    "coeffs": run_coeffs,
    "wasserstein": run_wasserstein,
    "delta": run_delta,
    "rate": run_rate,
    "bound": run_bound,
    "empirical": run_empirical,
    "lsv-tau": run_lsv_tau,
}


def render_csv(sub: str, config: dict, meta, header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# subcommand={sub}\n# version={__version__}\n")
    for k, v in config.items():
        buf.write(f"# {k}={fmt(v)}\n")
    for line in meta:
        buf.write(f"# {line}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def write_manifest(path: str, sub: str, config: dict) -> None:
    with open(path, "w") as fh:
        fh.write(f"# reproduce with: banach-clt replay {path}\n")
        fh.write(f"subcommand = {sub}\n")
        fh.write(f"version = {__version__}\n")
        for k, v in config.items():
            fh.write(f"{k} = {fmt(v)}\n")


PLOT_TEMPLATE = '''import sys
import numpy as np
import matplotlib.pyplot as plt

data = np.genfromtxt({csv!r}, delimiter=",", names=True, comments="#", dtype=None, encoding=None)
names = data.dtype.names
fig, ax = plt.subplots()
ax.plot(data[names[{x}]], data[names[{y}]], "o-")
ax.set_xlabel(names[{x}])
ax.set_ylabel(names[{y}])
{logs}
fig.savefig({png!r})
'''


def write_plot_script(out: str, sub: str) -> None:
    x, y, logs = 0, 1, "ax.set_xscale('log')\nax.set_yscale('log')"
    if sub == "verify-frechet":
        x, y, logs = 1, 4, "ax.set_yscale('log')"
    elif sub == "coeffs":
        x, y, logs = 1, 2, "ax.set_yscale('log')"
    elif sub == "empirical":
        logs = ""
    with open(out + ".plot.py", "w") as fh:
        fh.write(PLOT_TEMPLATE.format(csv=out, x=x, y=y, logs=logs, png=out + ".png"))


def _execute(sub: str, args, config_file: dict) -> int:
    config = resolve(sub, args, config_file)
    runner = RUNNERS[sub]
    if sub in ("delta", "rate"):
        meta, header, rows, ok = runner(config, jobs=args.jobs)
    else:
        meta, header, rows, ok = runner(config)
    text = render_csv(sub, config, meta, header, rows)
    out = getattr(args, "out", None)
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        write_manifest(getattr(args, "manifest", None) or out + ".manifest", sub, config)
        if getattr(args, "plot_script", False):
            write_plot_script(out, sub)
        for line in meta:
            print(line)
    else:
        sys.stdout.write(text)
    if not ok:
        print(f"error: {sub}: validation failed", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.subcommand == "replay":
            cfg = read_config(args.manifest)
            sub = cfg.pop("subcommand", None)
            if sub not in SUBCOMMANDS:
                raise UsageError(f"{args.manifest}: missing or unknown subcommand")
            ns = argparse.Namespace(**{o.dest: None for o in COMMON + OPTIONS[sub]})
            ns.out, ns.jobs, ns.manifest, ns.plot_script = args.out, args.jobs, None, False
            return _execute(sub, ns, cfg)
        cfg = read_config(args.config) if args.config else {}
        cfg.pop("subcommand", None)
        return _execute(args.subcommand, args, cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except ValidationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, ArithmeticError, RuntimeError, TypeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
