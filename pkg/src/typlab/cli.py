"""Command-line front end: ``typlab <subcommand> [--config FILE] [--key value ...]``.

Parameters merge with increasing precedence: built-in defaults, the
TYPLAB_SEED environment variable (seed only), the config file, then flags.
Config files hold ``key = value`` lines; ``#`` starts a comment.

Exit status: 0 when every check of the run holds, 1 when one fails, 2 on
usage errors (unknown subcommand or key, malformed config, bad value,
unwritable output).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import __version__
from . import brownian as bm
from . import coding, dynamics, entropy_ldp as el, kacring as kr, randomness as rnd, suite
from .core import DiscreteDistribution, RngStream, SymbolString, make_distribution


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


# per-subcommand parameters: name -> (default, parser, help)
COMMON = {
    "seed": (suite.DEFAULT_SEED, int, "RNG seed"),
    "out": ("-", str, "output path ('-' for stdout)"),
    "format": ("csv", str, "csv or json"),
    "workers": (os.cpu_count() or 1, int, "worker threads for trial loops"),
    "no_timestamp": (False, _bool, "omit the timestamp from the header"),
}

PARAMS: dict[str, dict[str, tuple[Any, Callable, str]]] = {
    "entropy": {
        "mu": ("0.5,0.3,0.2", _floats, "measure mu"),
        "p": ("0.2,0.3,0.5", _floats, "reference measure p"),
        "n": (1000, int, "string length for the type-class count"),
        "base": (2.0, float, "logarithm base for H and I"),
        "tol": (1e-12, float, "tolerance on the counting-rate bound"),
    },
    "ldp": {
        "p": ("0.5,0.5", _floats, "reference measure"),
        "energies": ("0,1", _floats, "energy level of each symbol"),
        "points": (50, int, "u grid size (interior points)"),
        "gap_tol": (1e-6, float, "allowed duality gap in nats"),
    },
    "coding": {
        "p": ("0.5,0.25,0.25", _floats, "source distribution"),
        "method": ("optimal", str, "optimal or shannon"),
        "n": (20, int, "block length for the typical set"),
        "eps": (0.1, float, "typical-set width in bits"),
    },
    "randomness": {
        "n": (10_000, int, "string length"),
        "source": ("prng", str, "prng, zeros, alternating or third"),
        "p1": (0.5, float, "probability of symbol 1 for prng strings"),
        "threshold": (rnd.DEFAULT_THRESHOLD, int, "largest acceptable test level"),
    },
    "dynamics": {
        "system": ("bernoulli", str, "bernoulli, doubling, bakers or rotation"),
        "p1": (0.1, float, "probability of symbol 1 for the Bernoulli shift"),
        "alpha": ("0.4142135623730951", str, "rotation number; 'a/b' keeps it exact"),
        "n_max": (12, int, "largest block length for the entropy curve"),
        "n": (100_000, int, "orbit length for SMB and LZ78 rates"),
    },
    "kacring": {
        "ring": (100_001, int, "ring size (odd)"),
        "m0": (0.9, float, "initial spin-up density"),
        "s": (0.2, float, "scatterer density"),
        "steps": (30, int, "time steps"),
        "trials": (100, int, "independent samples"),
        "tol": (0.005, float, "allowed |mean - prediction|"),
    },
    "brownian": {
        "n": (10_000, int, "walk steps per path"),
        "trials": (100, int, "paths"),
        "h": ("0.01,0.001", _floats, "modulus lags"),
        "bound": (1.2, float, "allowed modulus ratio"),
        "min_fraction": (0.99, float, "share of paths that must meet the bound"),
    },
    "suite": {
        "quick": (False, _bool, "reduced sample counts"),
        "full": (False, _bool, "acceptance sizes (default)"),
        "only": ("", str, "comma-separated criterion numbers"),
    },
}


@dataclass
class RunConfig:
    command: str
    params: dict[str, Any]


@dataclass
class RunReport:
    checks: dict[str, bool] = field(default_factory=dict)
    numbers: dict[str, Any] = field(default_factory=dict)

    @property
    def exit_status(self) -> int:
        return 0 if all(self.checks.values()) else 1


def _spec(command: str) -> dict[str, tuple[Any, Callable, str]]:
    return {**COMMON, **PARAMS[command]}


def read_config_file(path: str) -> dict[str, str]:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None
    out = {}
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or not key or not value.strip():
            raise UsageError(f"{path}:{no}: expected 'key = value', got {raw!r}")
        out[key] = value.strip()
    return out


def parse_config(command: str, file_values: dict[str, str], flag_values: dict[str, Any],
                 env: dict[str, str] | None = None) -> RunConfig:
    if command not in PARAMS:
        raise UsageError(f"unknown subcommand {command!r}")
    spec = _spec(command)
    env = os.environ if env is None else env
    merged: dict[str, Any] = {k: v[0] for k, v in spec.items()}
    if env.get("TYPLAB_SEED"):
        merged["seed"] = env["TYPLAB_SEED"]
    for source in (file_values, flag_values):
        for key, value in source.items():
            if key not in spec:
                raise UsageError(f"unknown key {key!r} for {command}")
            merged[key] = value
    params = {}
    for key, value in merged.items():
        conv = spec[key][1]
        try:
            params[key] = conv(value) if isinstance(value, str) or conv is _bool else value
        except (ValueError, TypeError):
            raise UsageError(f"bad value for {key}: {value!r}") from None
    _validate(command, params)
    return RunConfig(command, params)


def _validate(command: str, p: dict[str, Any]) -> None:
    if p["format"] not in ("csv", "json"):
        raise UsageError("format must be csv or json")
    if p["workers"] < 1:
        raise UsageError("workers must be positive")
    if command == "kacring":
        if p["ring"] < 3 or p["ring"] % 2 == 0:
            raise UsageError(f"ring must be odd and at least 3, got {p['ring']}")
        if not (0 <= p["m0"] <= 1 and 0 <= p["s"] <= 1):
            raise UsageError("m0 and s must lie in [0, 1]")
        if p["steps"] < 0 or p["trials"] < 1:
            raise UsageError("steps must be >= 0 and trials >= 1")
    if command == "randomness":
        if p["source"] not in ("prng", "zeros", "alternating", "third"):
            raise UsageError(f"unknown source {p['source']!r}")
        if p["n"] < rnd.BATTERY_MIN_LENGTH:
            raise UsageError(f"n must be at least {rnd.BATTERY_MIN_LENGTH}")
    if command == "dynamics" and p["system"] not in ("bernoulli", "doubling", "bakers", "rotation"):
        raise UsageError(f"unknown system {p['system']!r}")
    if command == "coding" and p["method"] not in ("optimal", "shannon"):
        raise UsageError("method must be optimal or shannon")
    if command == "suite" and p["quick"] and p["full"]:
        raise UsageError("choose one of --quick and --full")


def _header(cfg: RunConfig) -> str:
    params = {k: v for k, v in cfg.params.items() if k not in ("out", "no_timestamp", "workers")}
    head = {"version": __version__, "command": cfg.command, "seed": cfg.params["seed"], "params": params}
    if not cfg.params["no_timestamp"]:
        head["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return "# " + json.dumps(head, sort_keys=True, default=str) + "\n"


def _table(columns: list[str], rows: list[list[Any]], fmt: str) -> str:
    if fmt == "json":
        return json.dumps([dict(zip(columns, r)) for r in rows], default=_jsonable) + "\n"
    lines = [",".join(columns)]
    for r in rows:
        lines.append(",".join(_cell(v) for v in r))
    return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    return str(v)


# --- subcommands -----------------------------------------------------------

def _run_entropy(p: dict) -> tuple[str, RunReport]:
    mu = make_distribution(len(p["mu"]), p["mu"])
    ref = make_distribution(len(p["p"]), p["p"])
    if mu.q != ref.q:
        raise UsageError("mu and p need the same number of symbols")
    h = el.shannon_entropy(mu, p["base"])
    kl = el.kl_divergence(mu, ref, p["base"])
    tv = el.nearest_type(mu.weights, p["n"])
    bc = el.boltzmann_counting(tv, ref)
    bound = 2 * mu.q * math.log(p["n"] + 1) / p["n"]
    gap = abs(bc.finite_rate - bc.limit_rate)
    rep = RunReport({"counting_rate_within_bound": gap <= bound + p["tol"]},
                    {"entropy": h, "divergence": kl, "rate_gap": gap, "bound": bound})
    cols = ["quantity", "value"]
    rows = [["entropy", h], ["divergence", kl], ["n", p["n"]], ["log_multiplicity", bc.log_multiplicity],
            ["finite_rate_nats", bc.finite_rate], ["limit_rate_nats", bc.limit_rate], ["bound_nats", bound]]
    return _table(cols, rows, p["format"]), rep


def _run_ldp(p: dict) -> tuple[str, RunReport]:
    w = make_distribution(len(p["p"]), p["p"])
    e = np.asarray(p["energies"], dtype=float)
    if e.size != w.q:
        raise UsageError("energies and p need the same length")
    lo, hi = float(e.min()), float(e.max())
    if lo == hi:
        raise UsageError("energies must not all be equal")
    grid = np.linspace(lo, hi, p["points"] + 2)[1:-1]
    rows, worst = [], 0.0
    for u in grid:
        r = el.cramer_profile(float(u), w, e)
        worst = max(worst, r.duality_gap)
        rows.append([float(u), r.entropy, r.dual_entropy, r.duality_gap, r.beta])
    rep = RunReport({"duality_gap": worst <= p["gap_tol"]}, {"worst_gap": worst})
    return _table(["u", "entropy", "dual_entropy", "gap", "beta"], rows, p["format"]), rep


def _run_coding(p: dict) -> tuple[str, RunReport]:
    w = make_distribution(len(p["p"]), p["p"])
    code = coding.build_code(w, p["method"])
    L = coding.expected_length(code, w)
    h = el.shannon_entropy(w, 2)
    check = coding.validate_code(code)
    mode = "exact" if w.q ** p["n"] <= coding.EXACT_STATE_LIMIT else "types"
    ts = coding.typical_set(w, p["n"], p["eps"], mode=mode)
    rep = RunReport({"prefix_free": check.prefix_free, "kraft": check.kraft_ok, "sandwich": h <= L + 1e-12 and L <= h + 1 + 1e-12},
                    {"entropy_bits": h, "expected_length": L, "typical_probability": ts.probability})
    rows = [[a, float(w.weights[a]), cw, len(cw)] for a, cw in enumerate(code.codewords)]
    text = _table(["symbol", "probability", "codeword", "length"], rows, p["format"])
    if p["format"] == "csv":
        text += f"# expected_length={L!r} entropy_bits={h!r} typical_probability={ts.probability!r}\n"
    return text, rep


def _randomness_string(p: dict) -> SymbolString:
    n = p["n"]
    if p["source"] == "zeros":
        return SymbolString.of(np.zeros(n, dtype=np.uint8))
    if p["source"] == "alternating":
        return SymbolString.of(np.resize(np.array([0, 1], dtype=np.uint8), n))
    if p["source"] == "third":
        return dynamics.coarse_grain(dynamics.DoublingMap(), dynamics.Fraction(1, 3), n)
    from .core import sample_string
    return sample_string(DiscreteDistribution.bernoulli(p["p1"]), n, RngStream(p["seed"], 0))


def _run_randomness(p: dict) -> tuple[str, RunReport]:
    sigma = _randomness_string(p)
    reports = rnd.builtin_battery(sigma, p["threshold"])
    cx = rnd.lz78_complexity(sigma, DiscreteDistribution.flat(2))
    rep = RunReport({r.test_id: not r.flagged for r in reports},
                    {"lz78_bits": cx.bits, "deficiency_vs_flat": cx.deficiency})
    if p["format"] == "json":
        body = json.dumps({"battery": [json.loads(r.to_json()) for r in reports],
                           "complexity": json.loads(cx.to_json())}) + "\n"
    else:
        body = rnd.battery_csv(reports)
    return body, rep


def _system(p: dict):
    name = p["system"]
    if name == "bernoulli":
        return dynamics.BernoulliShift(DiscreteDistribution.bernoulli(p["p1"]))
    if name == "doubling":
        return dynamics.DoublingMap()
    if name == "bakers":
        return dynamics.BakersMap()
    text = p["alpha"]
    try:
        alpha = dynamics.Fraction(text) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"bad rotation number {text!r}") from None
    return dynamics.Rotation(alpha)


def _run_dynamics(p: dict) -> tuple[str, RunReport]:
    system = _system(p)
    if p["n_max"] < 4:
        raise UsageError("n_max must be at least 4")
    er = dynamics.entropy_rate(system, p["n_max"])
    x = system.sample(RngStream(p["seed"], 0))
    smb = dynamics.smb_estimate(system, x, p["n"])
    brudno = dynamics.brudno_rate(system, x, p["n"]) if p["n"] >= 64 else float("nan")
    rows = [[n, v, None, None] for n, v in enumerate(er.curve, 1)]
    rep = RunReport({"subadditive": True}, {"rate_estimate": er.estimate, "smb": smb, "lz78_rate": brudno})
    text = _table(["N", "value", "target", "band"], rows, p["format"])
    if p["format"] == "csv":
        text += f"# slope={er.estimate!r} smb={smb!r} lz78_rate={brudno!r}\n"
    return text, rep


def _run_kacring(p: dict) -> tuple[str, RunReport]:
    table = kr.typicality_experiment(p["m0"], p["s"], p["ring"], p["steps"], p["trials"],
                                     RngStream(p["seed"], 0), workers=p["workers"])
    dev = table.max_mean_deviation
    rep = RunReport({"mean_within_tol": dev <= p["tol"]}, {"max_mean_deviation": dev})
    rows = [[getattr(r, c) for c in kr.TypicalityTable.COLUMNS] for r in table.rows]
    return _table(list(kr.TypicalityTable.COLUMNS), rows, p["format"]), rep


def _run_brownian(p: dict) -> tuple[str, RunReport]:
    for h in p["h"]:
        if not 0 < h < 1:
            raise UsageError(f"h = {h} must lie in (0, 1)")
    rows, ok = [], {h: 0 for h in p["h"]}
    ends = []
    for i in range(p["trials"]):
        path = bm.sample_path(p["n"], RngStream(p["seed"], i))
        ends.append(path.values[-1])
        for h in p["h"]:
            r = bm.modulus_ratio(path, h)
            ok[h] += r <= p["bound"]
            rows.append([i, h, r])
    var = float(np.var(ends, ddof=1)) if len(ends) > 1 else float("nan")
    checks = {f"modulus_h={h}": ok[h] >= p["min_fraction"] * p["trials"] for h in p["h"]}
    rep = RunReport(checks, {"endpoint_variance": var})
    return _table(["trial", "h", "ratio"], rows, p["format"]), rep


def _run_suite(p: dict) -> tuple[str, RunReport]:
    only = [int(v) for v in p["only"].split(",") if v.strip()] if p["only"] else None
    if only and any(k not in suite.CRITERIA for k in only):
        raise UsageError("criteria are numbered 1..10")
    results = suite.run_suite(p["seed"], quick=p["quick"], only=only)
    rep = RunReport({f"criterion_{r.number}": r.passed for r in results})
    if p["format"] == "json":
        body = json.dumps([{"number": r.number, "title": r.title, "passed": r.passed,
                            "measured": r.measured, "seconds": r.seconds} for r in results],
                          default=_jsonable) + "\n"
    else:
        body = "".join(r.line() + "\n" for r in results)
    return body, rep


RUNNERS = {
    "entropy": _run_entropy, "ldp": _run_ldp, "coding": _run_coding, "randomness": _run_randomness,
    "dynamics": _run_dynamics, "kacring": _run_kacring, "brownian": _run_brownian, "suite": _run_suite,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="typlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"typlab {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="subcommand")
    sub.required = True
    for name in PARAMS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", help="key = value file")
        for key, (default, conv, text) in _spec(name).items():
            flag = "--" + key.replace("_", "-")
            if conv is _bool:
                sp.add_argument(flag, dest=key, action="store_const", const=True,
                                default=argparse.SUPPRESS, help=text)
            else:
                sp.add_argument(flag, dest=key, default=argparse.SUPPRESS, help=f"{text} (default {default})")
    return parser


def run(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    try:
        file_values = read_config_file(ns.config) if ns.config else {}
        cfg = parse_config(ns.command, file_values, flags)
        body, report = RUNNERS[ns.command](cfg.params)
    except (UsageError, el.OutOfRange, ValueError) as exc:
        print(f"typlab {ns.command}: error: {exc}", file=stderr)
        return 2
    text = _header(cfg) + body
    out = cfg.params["out"]
    if out == "-":
        stdout.write(text)
    else:
        try:
            with open(out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"typlab {ns.command}: error: cannot write {out}: {exc.strerror}", file=stderr)
            return 2
    summary = {"checks": report.checks, "numbers": report.numbers, "exit": report.exit_status}
    print(json.dumps(summary, default=_jsonable), file=stderr)
    return report.exit_status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
