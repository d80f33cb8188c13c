"""``shiftlab`` command line.

Exit codes: 0 success, 1 a reproduction assertion failed, 2 malformed
input, 3 internal inconsistency between independent checks.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import click
import numpy as np

from .classify import (
    ConsistencyError,
    build_class_report,
    class_Ainf_sufficient,
    class_Ak,
    is_concave,
    is_expansion,
    m_isometry_order,
    przyk_classify,
)
from .corpus import dichotomy_corpus
from .exact import as_fraction
from .report import csv_text, dumps, flatten
from .spectra import dichotomy_check, inner_radius, spectral_picture, spectral_radius
from .trunc import (
    GridSpec,
    Model,
    ap_spectrum_grid,
    carey_pincus_monomial,
    range_tprime_k_check,
    trace_self_commutator,
    uv_limits,
    wold_split,
)
from .weights import NotLeftInvertible, SpecError, dual_weights, make_shift

EXIT_OK, EXIT_ASSERT, EXIT_SPEC, EXIT_CONSISTENCY = 0, 1, 2, 3

DEFAULT_N = 150
DEFAULT_KMAX = 20
DEFAULT_HORIZON = 40
DEFAULT_TOL = 1e-8
DEFAULT_EPS = 0.1

POS_INT = click.IntRange(min=1)
POS_FLOAT = click.FloatRange(min=0, min_open=True)


class Failure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=not text.endswith("\n"))


def _emit_report(report: dict, out: Optional[str], fmt: str) -> None:
    if fmt == "csv":
        _emit(csv_text(["key", "value"], flatten(report)), out)
    else:
        _emit(dumps(report) + "\n", out)


def _shift(spec: str):
    try:
        return make_shift(spec)
    except SpecError:
        raise
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise SpecError(str(exc)) from exc


def _picture(W, horizon: int):
    try:
        return spectral_picture(W, horizon).to_json()
    except NotLeftInvertible as exc:
        return {"error": str(exc)}


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="artifact")
def cli():
    """Exact and numerical analysis of unilateral weighted shifts."""


def _out_options(f):
    f = click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json",
                     show_default=True)(f)
    return click.option("--out", type=click.Path(dir_okay=False), help="output file (default stdout)")(f)


@cli.command()
@click.option("--weights", required=True, help="sugar name, inline JSON spec, or JSON file")
@click.option("--kmax", type=click.IntRange(min=0), default=DEFAULT_KMAX, show_default=True)
@click.option("--window", type=POS_INT, default=64, show_default=True)
@click.option("--horizon", type=POS_INT, default=DEFAULT_HORIZON, show_default=True)
@_out_options
def analyze(weights, kmax, window, horizon, out, fmt):
    """Classify a shift and describe its spectral picture."""
    W = _shift(weights)
    report = {
        "weights": W.weights.to_json(),
        "class_report": build_class_report(W, kmax, window).to_json(),
        "spectral_picture": _picture(W, horizon),
    }
    _emit_report(report, out, fmt)


@cli.command()
@click.option("--weights", required=True)
@click.option("--grid", "grid_text", default="-1.5:1.5:-1.5:1.5:61", show_default=True,
              help="re_lo:re_hi:im_lo:im_hi:steps[:steps_im]")
@click.option("--N", "N", type=POS_INT, default=DEFAULT_N, show_default=True)
@click.option("--eps", type=POS_FLOAT, default=DEFAULT_EPS, show_default=True)
@click.option("--tol", type=POS_FLOAT, default=DEFAULT_TOL, show_default=True)
@click.option("--horizon", type=POS_INT, default=DEFAULT_HORIZON, show_default=True)
@click.option("--dual", is_flag=True, help="use the Cauchy dual of the given shift")
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="csv", show_default=True)
@click.option("--out", type=click.Path(dir_okay=False),
              help="CSV/JSON path; with CSV a companion <out>.json holds radii and the dichotomy record")
def spectrum(weights, grid_text, N, eps, tol, horizon, dual, fmt, out):
    """Grid of smallest singular values of W - lambda and the approximate point mask."""
    W = _shift(weights)
    if dual:
        W = dual_weights(W)
    try:
        grid = GridSpec.parse(grid_text)
    except ValueError as exc:
        raise SpecError(str(exc)) from exc
    g = ap_spectrum_grid(W, grid, N, eps, tol)
    meta = {
        "label": W.label,
        "N": N,
        "eps": eps,
        "grid": grid_text,
        "spectral_radius": spectral_radius(W, horizon).to_json(),
        "inner_radius": inner_radius(W, horizon).to_json(),
        "dichotomy": dichotomy_check(W, horizon).to_json(),
        "flagged": int(g.mask.sum()),
    }
    header = ["re", "im", "sigma_min", "in_ap_mask"]
    if fmt == "csv":
        _emit(csv_text(header, g.rows()), out)
        if out:
            Path(out).with_suffix(".json").write_text(dumps(meta) + "\n")
    else:
        meta["rows"] = [list(r) for r in g.rows()]
        _emit(dumps(meta) + "\n", out)


@cli.command()
@click.option("--weights", required=True)
@click.option("--tol", type=POS_FLOAT, default=1e-9, show_default=True)
@click.option("--horizon", type=POS_INT, default=100_000, show_default=True,
              help="partial-sum horizon when no certificate applies")
@_out_options
def trace(weights, tol, horizon, out, fmt):
    """Trace of the self-commutator for W and its Cauchy dual."""
    W = _shift(weights)
    t = trace_self_commutator(W, tol, horizon)
    report = {"label": W.label, "W": t.to_json()}
    try:
        report["dual"] = trace_self_commutator(dual_weights(W), tol, horizon).to_json()
    except NotLeftInvertible as exc:
        report["dual"] = {"verdict": "undefined", "certificate": str(exc)}
    if t.value is not None and report["dual"].get("value") is not None:
        report["carey_pincus"] = carey_pincus_monomial(W, tol).to_json()
    else:
        report["carey_pincus"] = {"status": "skipped: trace-class verdict unavailable"}
    report["status"] = t.verdict
    _emit_report(report, out, fmt)


# -- reproduction scripts ------------------------------------------------

@dataclass
class Check:
    label: str
    passed: bool
    detail: str = ""

    def to_json(self) -> dict:
        return {"label": self.label, "passed": self.passed, "detail": self.detail}


def _repro_separ1(opts) -> tuple[list[Check], dict]:
    W = make_shift("separ1")
    order, status = m_isometry_order(W)
    t = trace_self_commutator(W)
    checks = [
        Check("expansion", is_expansion(W).is_true),
        Check("class A_0 membership", class_Ak(W, 0).is_true),
        Check("not concave", is_concave(W).is_false),
        Check("3-isometry", order == 3, f"order {order} ({status})"),
        Check("not a 2-isometry", order is not None and order > 2),
        Check("trace of self-commutator equals dim ker W* = 1", t.value == 1, t.certificate),
    ]
    return checks, {"trace": t.to_json(), "m_isometry_order": order}


def _repro_przyk(opts) -> tuple[list[Check], dict]:
    u, v = opts["u"], opts["v"]
    pc = przyk_classify(u, v)
    ks = pc.sufficient_k
    checks = [
        Check(f"power k={ks} with k^2 >= 2 v^2 is weakly concave", pc.scan[ks]),
        Check("exact minimal power found and <= sufficient power",
              pc.minimal_k is not None and pc.minimal_k <= ks, f"minimal k = {pc.minimal_k}"),
    ]
    table = [{"k": k, "weakly_concave_power": ok} for k, ok in sorted(pc.scan.items())]
    return checks, {"przyk": pc.to_json(), "k_scan": table}


def _repro_blocky(opts) -> tuple[list[Check], dict]:
    W = make_shift("blocky")
    ak = {k: class_Ak(W, k) for k in range(9)}
    t = trace_self_commutator(W)
    checks = [Check("A_inf sufficient condition holds", class_Ainf_sufficient(W).is_true)]
    checks += [Check(f"not in A_{k}", ak[k].is_false, ak[k].to_json()) for k in range(9)]
    checks.append(Check("self-commutator not trace class", t.verdict == "not_trace_class",
                        t.certificate))
    return checks, {"trace": t.to_json()}


def _repro_dichotomy(opts) -> tuple[list[Check], dict]:
    checks, rows = [], []
    for W in dichotomy_corpus():
        d = dichotomy_check(W, opts["horizon"])
        rows.append({"label": W.label, **d.to_json()})
        checks.append(Check(f"{W.label}: r(W) r(W') >= 1", d.product_bound_holds,
                            f"margin {d.margins['radius_product_minus_one']:.3e}"))
        checks.append(Check(f"{W.label}: disk of radius 1/r(W') inside the disk of radius i(W)",
                            d.inclusion != "false", d.inclusion))
    return checks, {"corpus": rows}


def wold_model(d: int, shift: Optional[str], N: int) -> Model:
    """``d`` distinct unit phases on ``[0, pi/2]`` plus an optional shift."""
    phases = tuple(float(t) for t in np.linspace(0.0, math.pi / 2, d))
    if shift is None:
        return Model(phases, None, 0)
    return Model(phases, make_shift(shift), N)


def _repro_wold(opts) -> tuple[list[Check], dict]:
    d, k_max = opts["d"], opts["kmax"]
    model = wold_model(d, opts["shift"], opts["N"])
    ws = wold_split(model, k_max, opts["tol"])
    uv = uv_limits(model, k_max, opts["tol"])
    checks = [
        Check(f"detected unitary dimension equals {d}", ws.detected_unitary_dim == d,
              str(ws.detected_unitary_dim)),
        Check("split residual < 1e-8", ws.residual < 1e-8, f"{ws.residual:.3e}"),
        Check("A <= B on the unitary part", uv.A_le_B, f"min eig {uv.min_eig_B_minus_A}"),
    ]
    checks += [Check(f"ran T'^{k} matches the kernel description", range_tprime_k_check(model, k))
               for k in range(6)]
    return checks, {"wold": ws.to_json(), "uv": uv.to_json()}


REPRODUCTIONS: dict[str, Callable] = {
    "separ1": _repro_separ1,
    "przyk": _repro_przyk,
    "blocky": _repro_blocky,
    "dichotomy": _repro_dichotomy,
    "wold": _repro_wold,
}


def _fraction_arg(ctx, param, value):
    try:
        return as_fraction(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise click.BadParameter(str(exc)) from exc


@cli.command()
@click.argument("name", type=click.Choice(sorted(REPRODUCTIONS)))
@click.option("--u", default="-1/2", show_default=True, callback=_fraction_arg)
@click.option("--v", default="3", show_default=True, callback=_fraction_arg)
@click.option("--d", type=click.IntRange(min=0), default=2, show_default=True)
@click.option("--shift", default="separ1", show_default=True,
              help="shift part of the Wold model, or 'none' for a unitary model")
@click.option("--N", "N", type=POS_INT, default=DEFAULT_N, show_default=True)
@click.option("--kmax", type=POS_INT, default=DEFAULT_KMAX, show_default=True)
@click.option("--horizon", type=POS_INT, default=DEFAULT_HORIZON, show_default=True)
@click.option("--tol", type=POS_FLOAT, default=DEFAULT_TOL, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="JSON report path")
def reproduce(name, u, v, d, shift, N, kmax, horizon, tol, out):
    """Run a scripted experiment and print one PASS/FAIL line per assertion."""
    opts = {"u": u, "v": v, "d": d, "shift": None if shift == "none" else shift,
            "N": N, "kmax": kmax, "horizon": horizon, "tol": tol}
    checks, data = REPRODUCTIONS[name](opts)
    for c in checks:
        line = f"{'PASS' if c.passed else 'FAIL'}  {c.label}"
        click.echo(line + (f"  [{c.detail}]" if c.detail else ""))
    if name == "przyk":
        click.echo("k  weakly_concave_power")
        for row in data["k_scan"]:
            click.echo(f"{row['k']:<2} {'pass' if row['weakly_concave_power'] else 'fail'}")
    if out:
        Path(out).write_text(dumps({"name": name, "assertions": checks, "data": data}) + "\n")
    failed = [c.label for c in checks if not c.passed]
    if failed:
        raise Failure(EXIT_ASSERT, "assertion failed: " + failed[0])


def main(argv: Optional[list[str]] = None) -> int:
    try:
        cli.main(args=argv, prog_name="shiftlab", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_SPEC
    except click.exceptions.Abort:
        return EXIT_ASSERT
    except SpecError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_SPEC
    except ConsistencyError as exc:
        click.echo(f"inconsistency: {exc}", err=True)
        return EXIT_CONSISTENCY
    except Failure as exc:
        click.echo(str(exc), err=True)
        return exc.code
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_SPEC
    return EXIT_OK


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
