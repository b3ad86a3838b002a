"""Command-line interface: ``estimate``, ``sample`` and ``converge``.

Exit codes: 0 ok, 2 input or usage error, 3 fewer than two coincidences,
4 numerical failure.
"""

import argparse
import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
import io
import json
import logging
import math
import sys

import numpy as np

from . import __version__
from .counts import CountData, Multiplicities
from .dirichlet import ansb_estimate, miller_madow, nsb_estimate, plugin_entropy
from .exceptions import (
    ConfigError, DomainError, EmptyDataError, EntropyError, InconsistentAlphabetError,
    InputFormatError, NoCoincidencesError, NumericalError,
)
from .pym import PymConfig, dpm_estimate, pym_estimate
from .result import EntropyEstimate
from .sampler import sample_pym_posterior
from . import synthetic

log = logging.getLogger("pymentropy")

EXIT_OK, EXIT_INPUT, EXIT_COINCIDENCES, EXIT_NUMERICAL = 0, 2, 3, 4
ESTIMATORS = ("plugin", "mima", "nsb", "ansb", "dpm", "pym")
FORMATS = ("samples", "counts", "multiplicities")
SCHEMA = "pymentropy.run_report/1"
LN2 = math.log(2.0)


# -- input ---------------------------------------------------------------------

def _data_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line


def _positive_int(tok, what, lineno):
    try:
        val = int(tok)
    except ValueError:
        raise InputFormatError(f"{what} {tok!r} is not an integer", lineno) from None
    if val < 1:
        raise InputFormatError(f"{what} must be positive, got {val}", lineno)
    return val


def _two_fields(line, lineno):
    parts = line.split("\t")
    if len(parts) != 2:
        raise InputFormatError(f"expected 2 tab-separated fields, got {len(parts)}", lineno)
    return parts[0].strip(), parts[1].strip()


def parse_input(text, fmt):
    """Parse file contents into :class:`CountData` or :class:`Multiplicities`.

    ``samples``: one token per line.  ``counts``: ``symbol<TAB>count``.
    ``multiplicities``: ``frequency<TAB>number-of-symbols``.  Blank lines and
    lines starting with ``#`` are skipped.
    """
    if fmt == "samples":
        return CountData.from_samples(line for _, line in _data_lines(text))
    if fmt == "counts":
        counts = {}
        for lineno, line in _data_lines(text):
            sym, tok = _two_fields(line, lineno)
            if sym in counts:
                raise InputFormatError(f"duplicate symbol {sym!r}", lineno)
            counts[sym] = _positive_int(tok, "count", lineno)
        return CountData.from_counts(counts)
    if fmt == "multiplicities":
        entries = {}
        for lineno, line in _data_lines(text):
            f_tok, m_tok = _two_fields(line, lineno)
            freq = _positive_int(f_tok, "frequency", lineno)
            if freq in entries:
                raise InputFormatError(f"duplicate frequency {freq}", lineno)
            entries[freq] = _positive_int(m_tok, "symbol count", lineno)
        return Multiplicities.from_mapping(entries)
    raise ConfigError(f"unknown format {fmt!r}")


def read_input(path, fmt):
    if path == "-":
        return parse_input(sys.stdin.read(), fmt)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise InputFormatError(f"cannot read {path}: {exc}") from None
    return parse_input(text, fmt)


def _nk(data):
    return data.N, data.K


# -- estimation ----------------------------------------------------------------

def pym_config(args):
    return PymConfig(gamma_prior=args.gamma_prior, grid_size=args.grid_size, std_span=args.std_span)


def run_estimator(name, data, alphabet_size=None, cfg=None):
    """Dispatch one estimator by CLI name; always returns an EntropyEstimate."""
    N, K = _nk(data)
    if name == "plugin":
        return EntropyEstimate("plugin", plugin_entropy(data), diagnostics={"N": N, "K": K})
    if name == "mima":
        return EntropyEstimate("mima", miller_madow(data), diagnostics={"N": N, "K": K})
    if name == "nsb":
        if alphabet_size is None:
            raise ConfigError("the nsb estimator needs --alphabet-size")
        return nsb_estimate(data, alphabet_size)
    if name == "ansb":
        return ansb_estimate(data)
    if name == "dpm":
        return dpm_estimate(data, cfg)
    if name == "pym":
        return pym_estimate(data, cfg)
    raise ConfigError(f"unknown estimator {name!r}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


@dataclass
class RunReport:
    """JSON report of one estimate.

    ``mean``/``std`` are in ``units``; ``mean_nats``/``std_nats`` always in nats.
    """

    estimator: str
    units: str
    mean: float
    std: float | None
    mean_nats: float
    std_nats: float | None
    map_d: float | None
    map_alpha: float | None
    N: int
    K: int
    seed: int | None = None
    diagnostics: dict = field(default_factory=dict)
    schema: str = SCHEMA

    @classmethod
    def from_estimate(cls, est, N, K, units="nats", seed=None):
        scale = 1.0 / LN2 if units == "bits" else 1.0
        std = None if est.std is None else est.std * scale
        return cls(est.estimator, units, est.mean * scale, std, est.mean, est.std,
                   est.map_d, est.map_alpha, int(N), int(K), seed, _jsonable(est.diagnostics))

    def to_json(self):
        return json.dumps(_jsonable(asdict(self)), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        if obj.get("schema") != SCHEMA:
            raise InputFormatError(f"not a {SCHEMA} document")
        return cls(**obj)


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _log_warnings(est):
    for msg in est.diagnostics.get("warnings", []) or []:
        log.warning(msg)


def cmd_estimate(args):
    data = read_input(args.input, args.format)
    est = run_estimator(args.estimator, data, args.alphabet_size, pym_config(args))
    _log_warnings(est)
    N, K = _nk(data)
    report = RunReport.from_estimate(est, N, K, args.units, args.seed)
    _write(report.to_json(), args.output)
    return EXIT_OK


def cmd_sample(args):
    data = read_input(args.input, args.format)
    if args.draws < 0:
        raise ConfigError("--draws must be >= 0")
    cfg = pym_config(args)
    draws = sample_pym_posterior(data, cfg, args.draws, args.seed)
    if args.units == "bits":
        draws = draws / LN2
    _write(json.dumps([float(x) for x in draws]) + "\n", args.output)
    if args.figure:
        from .plotting import posterior_figure

        est = pym_estimate(data, cfg)
        scale = 1.0 / LN2 if args.units == "bits" else 1.0
        posterior_figure(draws, args.figure, est.mean * scale, est.std * scale,
                         title=f"posterior over H ({args.units}), N={data.N}, K={data.K}")
    return EXIT_OK


# -- convergence benchmark ----------------------------------------------------------

CSV_FIELDS = ("size", "trial", "estimator", "mean", "std", "true_entropy", "error_code")

_ERROR_CODES = (
    (NoCoincidencesError, "no_coincidences"),
    (NumericalError, "numerical"),
    (EntropyError, "input"),
)


def _error_code(exc):
    for cls, code in _ERROR_CODES:
        if isinstance(exc, cls):
            return code
    raise exc


def _trial_seed(seed, trial):
    return np.random.SeedSequence([int(seed), int(trial)])


def _cell_seed(seed, trial, size):
    return np.random.SeedSequence([int(seed), int(trial), int(size)])


def _run_cell(job):
    """Rows for one (size, trial) cell; module-level so it pickles."""
    spec, size, trial, seed, estimators, alphabet_size, cfg = job
    dist = synthetic.build(spec)
    realized = synthetic.realize(dist, np.random.default_rng(_trial_seed(seed, trial)))
    counts = synthetic.draw_counts(realized, size, np.random.default_rng(_cell_seed(seed, trial, size)))
    if alphabet_size is None and dist.kind != "py":
        alphabet_size = len(realized.probabilities)
    rows = []
    for name in estimators:
        row = {"size": size, "trial": trial, "estimator": name, "mean": None, "std": None,
               "true_entropy": realized.true_entropy, "error_code": ""}
        try:
            est = run_estimator(name, counts, alphabet_size, cfg)
            row["mean"], row["std"] = est.mean, est.std
        except EntropyError as exc:
            row["error_code"] = _error_code(exc)
            log.info("size=%d trial=%d %s: %s", size, trial, name, exc)
        rows.append(row)
    return rows


def converge_rows(spec, sizes, estimators, trials, seed, alphabet_size=None, cfg=None, jobs=1):
    """All benchmark rows, sorted by (size, trial, estimator order)."""
    synthetic.build(spec)  # validate before fanning out
    cfg = cfg or PymConfig()
    jobs_list = [(spec, int(n), t, seed, tuple(estimators), alphabet_size, cfg)
                 for n in sizes for t in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_cell, jobs_list))
    else:
        chunks = [_run_cell(j) for j in jobs_list]
    order = {name: i for i, name in enumerate(estimators)}
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r["size"], r["trial"], order[r["estimator"]]))
    return rows


def _fmt(x):
    return "" if x is None else repr(float(x)) if isinstance(x, float) else str(x)


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([_fmt(r[k]) for k in CSV_FIELDS])
    return buf.getvalue()


def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of integers, got {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise ConfigError("sizes must be positive integers")
    return vals


def cmd_converge(args):
    sizes = _int_list(args.sizes)
    estimators = [e.strip() for e in args.estimators.split(",") if e.strip()]
    bad = [e for e in estimators if e not in ESTIMATORS]
    if bad or not estimators:
        raise ConfigError(f"unknown estimator(s) {bad}; choose from {', '.join(ESTIMATORS)}")
    if args.trials < 1:
        raise ConfigError("--trials must be >= 1")
    rows = converge_rows(args.dist, sizes, estimators, args.trials, args.seed,
                         args.alphabet_size, pym_config(args), args.jobs)
    _write(rows_to_csv(rows), args.output)
    if args.figure:
        from .plotting import convergence_figure

        convergence_figure(rows, args.figure, title=args.dist)
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------------

def _add_pym_options(p):
    p.add_argument("--grid-size", type=int, default=30, help="quadrature nodes per axis (default 30)")
    p.add_argument("--std-span", type=float, default=6.0, help="grid half-width in posterior stds (default 6)")
    p.add_argument("--gamma-prior", choices=("default", "flat"), default="default",
                   help="tail-weight prior q(gamma)")


def _add_input(p):
    p.add_argument("input", help="input file, or - for stdin")
    p.add_argument("--format", choices=FORMATS, default="counts")
    p.add_argument("--units", choices=("nats", "bits"), default="nats")
    p.add_argument("--output", "-o", default="-", help="output file (default stdout)")


def build_parser():
    parser = argparse.ArgumentParser(prog="pymentropy", description="Bayesian entropy estimation for discrete data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate entropy and print a JSON report")
    _add_input(p)
    p.add_argument("--estimator", choices=ESTIMATORS, default="pym")
    p.add_argument("--alphabet-size", type=int, default=None, help="alphabet size A (nsb only)")
    p.add_argument("--seed", type=int, default=None, help="recorded in the report")
    _add_pym_options(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sample", help="draw from the PYM posterior over entropy (JSON array)")
    _add_input(p)
    p.add_argument("--draws", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--figure", default=None, help="also write a histogram to this image file")
    _add_pym_options(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("converge", help="benchmark estimators on synthetic data (CSV)")
    p.add_argument("--dist", required=True, help="e.g. uniform:1000, powerlaw:2:10000, py:0.25:40, poisson:2.71828")
    p.add_argument("--sizes", default="100,1000,10000", help="comma-separated sample sizes")
    p.add_argument("--estimators", "--estimator", dest="estimators", default="plugin,mima,pym",
                   help="comma-separated estimator names")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alphabet-size", type=int, default=None,
                   help="alphabet size for nsb (default: support size of the distribution)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--output", "-o", default="-")
    p.add_argument("--figure", default=None, help="also write a convergence plot to this image file")
    _add_pym_options(p)
    p.set_defaults(func=cmd_converge)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except NoCoincidencesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COINCIDENCES
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InputFormatError, EmptyDataError, InconsistentAlphabetError, DomainError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
