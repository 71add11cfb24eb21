"""``hypoflow`` command-line driver.

Exit codes: 0 success, 1 negative result (rejected structure, failed check,
unclassifiable input), 2 usage or parse error, 3 numerical failure.
"""
from __future__ import annotations

import csv
import io
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import product
from pathlib import Path

import click
import numpy as np

from . import __version__
from .curvature import (HolonomyReport, LeftInvariantMetric, MetricError, holonomy_rank,
                        m3_generators_independent)
from .flow import (FAMILY_PARAMS, FamilyError, FamilyPoint, IntegrationError, IntegratorConfig,
                   Trajectory, classify_orbit, family_differential, integrate)
from .formfile import FormParseError, parse_form_file, read_form_file
from .liealg import LieDifferential, NotJacobiError, NotNilpotentError, fingerprint, iso_class, jacobi_residual
from .su2 import check_triple, is_hypo
from .suites import SUITES, run_suite
from .torsion import gauge_of

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


@dataclass
class RunConfig:
    """Everything needed to reproduce a command's output; embedded in every file written."""
    command: str
    options: dict = field(default_factory=dict)
    seed: int = 0
    version: str = __version__

    def as_dict(self) -> dict:
        return asdict(self)


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, default=_json_default) + "\n"


def _json_default(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    raise TypeError(f"not JSON serialisable: {type(v).__name__}")


def _num(text: str):
    text = text.strip()
    try:
        return Fraction(text) if "." not in text and "e" not in text.lower() else float(text)
    except (ValueError, ZeroDivisionError):
        raise click.BadParameter(f"not a number: {text!r}") from None


def parse_params(text: str) -> tuple:
    return tuple(_num(t) for t in text.split(",") if t.strip())


def parse_tspan(text: str) -> tuple[float, float]:
    try:
        a, b = (float(v) for v in text.split(":"))
    except ValueError:
        raise click.BadParameter("tspan must look like a:b") from None
    if not (np.isfinite(a) and np.isfinite(b)):
        raise click.BadParameter("tspan must be finite")
    return a, b


def _point(family: str, params: str, exact: bool = True) -> FamilyPoint:
    vals = parse_params(params)
    if not exact:
        vals = tuple(float(v) for v in vals)
    try:
        return FamilyPoint(family, vals)
    except FamilyError as exc:
        raise click.BadParameter(str(exc)) from None


def _fmt(v) -> str:
    if isinstance(v, Fraction):
        return str(v)
    return f"{float(v):.12g}"


def _form_str(f) -> str:
    from .exterior import basis
    terms = []
    for c, I in zip(f.coeffs, basis(5, f.grade)):
        if c != 0 and (f.is_exact or abs(c) > 1e-13):
            terms.append(f"{_fmt(c)}*e{''.join(str(i + 1) for i in I)}")
    return " + ".join(terms).replace("+ -", "- ") or "0"


def _d_str(d: LieDifferential) -> str:
    return "(" + ", ".join(_form_str(f) for f in d.images) + ")"


@click.group()
@click.version_option(__version__, prog_name="hypoflow")
def cli():
    """Hypo SU(2)-structures on nilpotent Lie algebras: validation, flow, holonomy."""


def main(argv=None):
    """Entry point; numerical breakdowns outside the integrator map to exit code 3."""
    try:
        cli.main(args=argv, prog_name="hypoflow")
    except (ArithmeticError, np.linalg.LinAlgError, MetricError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERIC)


# --------------------------------------------------------------------------
# validate


@cli.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), help="Write report.json here.")
def validate(file, out):
    """Decide whether the triple (omega1, psi2, psi3) in FILE defines an SU(2)-structure."""
    try:
        triple = read_form_file(file).triple()
    except FormParseError as exc:
        click.echo(f"parse error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    rep = check_triple(triple)
    click.echo(f"{'accept' if rep.accepted else 'reject'}: {file}")
    for name, (ok, value) in rep.checks.items():
        click.echo(f"  [{'ok' if ok else 'FAIL'}] {name}  ({float(value):.3g})")
    payload = {"config": RunConfig("validate", {"file": str(file)}).as_dict(),
               "accepted": rep.accepted,
               "checks": {k: {"ok": bool(ok), "value": float(v)} for k, (ok, v) in rep.checks.items()}}
    if rep.accepted:
        q = rep.quadruple
        for name, f in (("alpha", q.alpha), ("omega2", q.omega2), ("omega3", q.omega3)):
            click.echo(f"  {name} = {_form_str(f)}")
            payload[name] = [float(c) for c in f.coeffs]
    if out:
        write_atomic(Path(out) / "report.json", dump_json(payload))
    sys.exit(EXIT_OK if rep.accepted else EXIT_NEGATIVE)


# --------------------------------------------------------------------------
# classify


def family_matches(d: LieDifferential, tol: float = 1e-12) -> list[FamilyPoint]:
    """Family points whose differential is exactly d (each family is linear in its parameters)."""
    vec = d.numeric().matrix.ravel()
    out = []
    for fam in FAMILY_PARAMS:
        m = family_differential(fam).T
        coef, *_ = np.linalg.lstsq(m, vec, rcond=None)
        if np.abs(m @ coef - vec).max() <= tol * max(1.0, np.abs(vec).max()):
            try:
                out.append(FamilyPoint(fam, tuple(float(c) for c in coef)))
            except FamilyError:
                pass
    return out


@cli.command()
@click.option("--d", "dtext", help="Differential in compact notation, e.g. '(0,0,0,0,12+34)'.")
@click.option("--file", type=click.Path(exists=True, dir_okay=False), help="Form file with de1..de5.")
@click.option("--family", type=click.Choice(sorted(FAMILY_PARAMS)))
@click.option("--params", help="Comma-separated family parameters (p/q literals stay exact).")
@click.option("--out", type=click.Path(file_okay=False))
def classify(dtext, file, family, params, out):
    """Isomorphism class, invariants, hypo residual and (for family points) the orbit label."""
    given = sum(x is not None for x in (dtext, file, family))
    if given != 1 or (family is not None) != (params is not None):
        raise click.UsageError("give exactly one of --d, --file, or --family with --params")
    points: list[FamilyPoint] = []
    try:
        if family:
            p = _point(family, params)
            d, points = p.differential(), [p]
        elif dtext:
            d = parse_form_file(f"d = {dtext}", source="--d").differential()
        else:
            ff = read_form_file(file)
            if not ff.has_differential:
                raise FormParseError("file defines no de1..de5", 1, 1, file)
            d = ff.differential()
    except FormParseError as exc:
        click.echo(f"parse error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    if not points:
        points = family_matches(d)
    report = {"config": RunConfig("classify", {"d": dtext, "file": file, "family": family,
                                                "params": params}).as_dict(),
              "d": _d_str(d)}
    click.echo(f"d = {_d_str(d)}")
    try:
        label = iso_class(d)
        fp = fingerprint(d)
    except (NotJacobiError, NotNilpotentError) as exc:
        click.echo(f"negative: {exc}")
        report["error"] = str(exc)
        if out:
            write_atomic(Path(out) / "classify.json", dump_json(report))
        sys.exit(EXIT_NEGATIVE)
    res = is_hypo(d)
    click.echo(f"class: {label}")
    click.echo(f"fingerprint: b1={fp.b1} lower_central={fp.lower_central} center={fp.center} "
               f"derived={fp.derived} square_rank={fp.square_rank}")
    click.echo(f"hypo residual (standard triple): {float(res):.3g}" + ("  [hypo]" if res == 0 or res < 1e-9 else ""))
    report.update(iso_class=label, fingerprint=asdict(fp), hypo_residual=float(res),
                  jacobi_residual=float(jacobi_residual(d)))
    orbits = []
    for p in points:
        lab = classify_orbit(p)
        click.echo(f"{p.family} point {tuple(_fmt(v) for v in p.params)}: {lab.description}")
        for k, v in lab.constants.items():
            click.echo(f"  {k} = {_fmt(v)}")
        orbits.append({"family": p.family, "params": [_fmt(v) for v in p.params], **lab.to_dict()})
    report["orbits"] = orbits
    if out:
        write_atomic(Path(out) / "classify.json", dump_json(report))
    sys.exit(EXIT_NEGATIVE if orbits and not any(o["orbit"] for o in orbits) else EXIT_OK)


# --------------------------------------------------------------------------
# evolve


def _plot_data(traj: Trajectory) -> dict[str, str]:
    files = {}
    cols = [(n, traj.states[:, j]) for j, n in enumerate(traj.param_names)]
    cols += [(f"integral_{n}", traj.integrals[:, j]) for j, n in enumerate(traj.integral_names)]
    for name, values in cols:
        if np.all(np.isnan(values)):
            continue
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", name])
        for t, v in zip(traj.times, values):
            w.writerow([repr(float(t)), "" if np.isnan(v) else repr(float(v))])
        files[f"plot_{name}.csv"] = buf.getvalue()
    return files


def _write_trajectory(traj: Trajectory, outdir: Path, fmt: str, cfg: RunConfig, plot: bool) -> list[Path]:
    written = []
    extra = {"run_config": cfg.as_dict(), "seed": cfg.seed, "drift": traj.drift(),
             "blowup": traj.blowup}
    if fmt in ("json", "both"):
        written.append(outdir / "trajectory.json")
        write_atomic(written[-1], traj.to_json(extra) + "\n")
    if fmt in ("csv", "both"):
        written.append(outdir / "trajectory.csv")
        write_atomic(written[-1], f"# run_config {json.dumps(cfg.as_dict(), sort_keys=True)}\n" + traj.to_csv())
    written.append(outdir / "drift.json")
    write_atomic(written[-1], dump_json({"run_config": cfg.as_dict(), "seed": cfg.seed,
                                         "drift": traj.drift(), "stats": traj.stats}))
    if plot:
        for name, text in _plot_data(traj).items():
            written.append(outdir / name)
            write_atomic(written[-1], text)
    return written


@cli.command()
@click.option("--family", required=True, type=click.Choice(sorted(FAMILY_PARAMS)))
@click.option("--params", required=True)
@click.option("--tspan", default="0:1", show_default=True)
@click.option("--rtol", type=float, default=1e-10, show_default=True)
@click.option("--atol", type=float, default=1e-10, show_default=True)
@click.option("--ceiling", type=float, default=1e8, show_default=True,
              help="Stop and flag blow-up once max|state| exceeds this.")
@click.option("--max-steps", type=int, default=200_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Recorded in the output.")
@click.option("--out", type=click.Path(file_okay=False), default=".", show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv", "both"]), default="both", show_default=True)
@click.option("--plot-data/--no-plot-data", default=True, show_default=True)
def evolve(family, params, tspan, rtol, atol, ceiling, max_steps, seed, out, fmt, plot_data):
    """Integrate the reduced hypo flow from a family point and write the trajectory."""
    p0 = _point(family, params, exact=False)
    span = parse_tspan(tspan)
    try:
        config = IntegratorConfig(rtol=rtol, atol=atol, ceiling=ceiling, max_steps=max_steps)
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from None
    cfg = RunConfig("evolve", {"family": family, "params": [float(v) for v in p0.params],
                               "tspan": list(span), "integrator": config.as_dict(), "format": fmt,
                               "plot_data": plot_data}, seed)
    outdir = Path(out)
    code = EXIT_OK
    try:
        traj = integrate(p0, span, config)
    except IntegrationError as exc:
        traj = exc.partial
        click.echo(f"integration failed: {exc}; writing partial output", err=True)
        code = EXIT_NUMERIC
    for path in _write_trajectory(traj, outdir, fmt, cfg, plot_data):
        click.echo(f"wrote {path}")
    click.echo(f"steps={traj.stats['steps']} rejected={traj.stats['rejected']} "
               f"t_end={traj.stats['t_end']:.10g} status={traj.stats['status']}")
    if traj.blowup:
        click.echo(f"blow-up flagged near t={traj.stats['t_end']:.10g}")
    drift = traj.drift()
    if drift:
        click.echo("first-integral drift (relative):")
        for name, v in drift.items():
            click.echo(f"  {name:10s} {v:.3e}")
    else:
        click.echo("no first integral is defined along the whole trajectory")
    sys.exit(code)


# --------------------------------------------------------------------------
# holonomy


def holonomy_at(p: FamilyPoint) -> HolonomyReport:
    d = p.differential(exact=False)
    rep = holonomy_rank(LeftInvariantMetric(d), gauge_of(d).q,
                        m3_params=tuple(float(v) for v in p.params) if p.family == "m3" else None)
    return rep


def _parse_grid(specs: tuple[str, ...], family: str) -> dict[str, np.ndarray]:
    grid = {}
    for s in specs:
        try:
            name, rng_ = s.split("=")
            a, b, n = rng_.split(":")
            grid[name.strip()] = np.linspace(float(a), float(b), int(n))
        except ValueError:
            raise click.BadParameter(f"grid axis {s!r} must look like name=a:b:n") from None
        if name.strip() not in FAMILY_PARAMS[family]:
            raise click.BadParameter(f"{name!r} is not a parameter of {family}")
    return grid


def _threads() -> int:
    raw = os.environ.get("HYPOFLOW_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise click.UsageError("HYPOFLOW_THREADS must be a positive integer") from None
    return os.cpu_count() or 1


def sweep(family: str, base: tuple, grid: dict[str, np.ndarray], threads: int) -> list[dict]:
    names = FAMILY_PARAMS[family]
    keys = list(grid)
    pts = []
    for combo in product(*(grid[k] for k in keys)):
        vals = dict(zip(names, (float(v) for v in base)))
        vals.update(zip(keys, (float(v) for v in combo)))
        pts.append(tuple(vals[n] for n in names))

    def one(params):
        row = dict(zip(names, params))
        try:
            rep = holonomy_at(FamilyPoint(family, params))
        except FamilyError as exc:
            row.update(rank="", reducible_by_rank="", reducible_stated="", reducible_generators="",
                       note=str(exc))
            return row
        row.update(rank=rep.rank, reducible_by_rank=rep.rank < 8, reducible_stated="",
                   reducible_generators="", note="")
        if family == "m3":
            row.update(reducible_stated=not rep.closed_form,
                       reducible_generators=not m3_generators_independent(*params))
        return row

    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, pts))


@cli.command()
@click.option("--family", type=click.Choice(sorted(FAMILY_PARAMS)))
@click.option("--params", help="Single point, or base values for a sweep.")
@click.option("--trajectory", type=click.Path(exists=True, dir_okay=False),
              help="trajectory.json from `evolve`; every sample is evaluated.")
@click.option("--every", type=int, default=1, show_default=True, help="Use every n-th trajectory sample.")
@click.option("--sweep", "grid", multiple=True, help="Grid axis name=a:b:n (repeatable).")
@click.option("--out", type=click.Path(file_okay=False))
def holonomy(family, params, trajectory, every, grid, out):
    """Rank of the tangential curvature (rank 8 means holonomy SU(3)); --sweep writes a CSV grid."""
    opts = {"family": family, "params": params, "trajectory": trajectory, "every": every, "sweep": list(grid)}
    cfg = RunConfig("holonomy", opts)
    if grid:
        if not family:
            raise click.UsageError("--sweep needs --family")
        base = parse_params(params) if params else (0,) * len(FAMILY_PARAMS[family])
        if len(base) != len(FAMILY_PARAMS[family]):
            raise click.BadParameter(f"{family} takes {len(FAMILY_PARAMS[family])} parameters")
        threads = _threads()
        rows = sweep(family, base, _parse_grid(grid, family), threads)
        buf = io.StringIO()
        buf.write(f"# run_config {json.dumps(cfg.as_dict(), sort_keys=True)}\n")
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        path = Path(out or ".") / "holonomy_sweep.csv"
        write_atomic(path, buf.getvalue())
        reducible = sum(1 for r in rows if r["reducible_by_rank"] is True)
        click.echo(f"{len(rows)} grid points, {reducible} with rank < 8; wrote {path}")
        if family == "m3":
            for col, label in (("reducible_stated", "3λ²+μ²=±4μλ or λμ(λ²−μ²)=0"),
                               ("reducible_generators", "rank of the eight generators < 8")):
                agree = sum(r[col] == r["reducible_by_rank"] for r in rows)
                click.echo(f"agreement with {label}: {agree}/{len(rows)}")
        sys.exit(EXIT_OK)

    samples: list[tuple[float | None, FamilyPoint]] = []
    if trajectory:
        data = json.loads(Path(trajectory).read_text(encoding="utf-8"))
        fam = data["family"]
        for s in data["samples"][::max(every, 1)]:
            samples.append((s["t"], FamilyPoint(fam, tuple(s["state"]))))
    elif family and params:
        samples.append((None, _point(family, params, exact=False)))
    else:
        raise click.UsageError("give --family with --params, or --trajectory")
    results = []
    for t, p in samples:
        rep = holonomy_at(p)
        where = f"t={t:.6g} " if t is not None else ""
        click.echo(f"{where}{p.family} {tuple(round(float(v), 10) for v in p.params)}: rank {rep.rank}; {rep.verdict}")
        results.append({"t": t, "family": p.family, "params": [float(v) for v in p.params], **rep.to_dict()})
    if out:
        write_atomic(Path(out) / "holonomy.json", dump_json({"run_config": cfg.as_dict(), "samples": results}))
    sys.exit(EXIT_OK)


# --------------------------------------------------------------------------
# verify


@cli.command()
@click.argument("suite", type=click.Choice(["all", *SUITES]))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False))
def verify(suite, seed, out):
    """Run a seeded self-check suite; nonzero exit on any failure."""
    checks = run_suite(suite, seed)
    for c in checks:
        click.echo(c.line())
    failed = sum(not c.passed for c in checks)
    click.echo(f"{len(checks) - failed}/{len(checks)} checks passed")
    if out:
        write_atomic(Path(out) / f"verify_{suite}.json", dump_json({
            "run_config": RunConfig("verify", {"suite": suite}, seed).as_dict(), "seed": seed,
            "checks": [asdict(c) for c in checks]}))
    sys.exit(EXIT_NEGATIVE if failed else EXIT_OK)


if __name__ == "__main__":  # pragma: no cover
    main()
