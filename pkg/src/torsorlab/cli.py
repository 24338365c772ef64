"""Command-line entry point: run one computation, write its artifact, reuse cached results."""

from __future__ import annotations

import hashlib
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import click

from . import __version__

EXIT_USAGE = 2
EXIT_DEPENDENCY = 3
EXIT_REFUSED = 4
CACHE_ENV = "TORSORLAB_CACHE"

# options that change how a result is computed but never its value
_EXECUTION_ONLY = ("workers", "output", "cache_dir", "use_cache")


class DependencyError(RuntimeError):
    pass


@dataclass
class RunConfig:
    command: str
    family: str | None = None
    n: int | None = None
    B: list[int] = field(default_factory=list)
    mc_samples: int | None = None
    seed: int = 0
    shell_range: tuple[int, int] | None = None
    M: int | None = None
    output: str | None = None
    cache_dir: str | None = None
    workers: int = 1
    fmt: str = "json"
    use_cache: bool = True
    options: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.family is not None and self.family not in ("X", "Xprime"):
            raise click.UsageError(f"family must be X or Xprime, not {self.family!r}")
        for name in ("n", "mc_samples", "M", "workers"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise click.UsageError(f"--{name.replace('_', '-')} must be positive")
        if any(b < 0 for b in self.B):
            raise click.UsageError("height bounds must be nonnegative")
        if self.fmt not in ("json", "csv"):
            raise click.UsageError("--format is json or csv")

    def identity(self) -> dict:
        """The part of the configuration that determines the artifact."""
        d = asdict(self)
        for k in _EXECUTION_ONLY:
            d.pop(k)
        d["B"] = [str(b) for b in self.B]
        d["version"] = __version__
        return json.loads(json.dumps(d, sort_keys=True, default=str))

    def cache_key(self) -> str:
        blob = json.dumps(self.identity(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def cache_root(cfg: RunConfig) -> Path:
    if cfg.cache_dir:
        return Path(cfg.cache_dir)
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "torsorlab"


# ---------------------------------------------------------------------------
# computations


def _need(cfg: RunConfig, *names: str) -> None:
    for name in names:
        if getattr(cfg, name) in (None, []):
            raise click.UsageError(f"--{name.replace('_', '-')} is required for {cfg.command}")


def _count(cfg: RunConfig, fibers: bool = False):
    from .enumerate import count_X, count_Xp, oracle_series

    method = cfg.options.get("method", "auto")
    blocks = cfg.options.get("blocks", 8)
    if method == "oracle":
        if cfg.family != "X":
            raise click.UsageError("the brute-force oracle exists for X only")
        from .enumerate import CountEntry, CountSeries

        raw = oracle_series(cfg.n, cfg.B)
        return CountSeries("X", cfg.n, [CountEntry(b, raw[b], raw[b] // 4) for b in sorted(raw)],
                           provenance=f"count_direct_oracle n={cfg.n}")
    fn = count_X if cfg.family == "X" else count_Xp
    return fn(cfg.n, cfg.B, workers=cfg.workers, nblocks=blocks, fibers=fibers, method=method)


def _density(cfg: RunConfig) -> tuple[dict, str | None]:
    from . import densities as D

    q = cfg.options.get("quantity", "omega_inf")
    x = cfg.options.get("x")
    p = cfg.options.get("p")
    fam, n = cfg.family, cfg.n
    if q in ("omega_p", "finite_field", "padic_oracle") and p is None:
        raise click.UsageError(f"--p is required for {q}")
    if q == "omega_p":
        v = D.omega_p(fam, n, p, x)
        return {"family": fam, "n": n, "x": x, "p": p, "quantity": q, "value": str(v),
                "float": repr(float(v))}, None
    if q == "finite_field":
        v = D.finite_field_count(n, p)
        return {"n": n, "p": p, "quantity": q, "value": str(v)}, None
    if q == "euler":
        v = D.euler_product(fam, n, x)
        return {"family": fam, "n": n, "x": x, "quantity": q, "value": str(v)}, None
    if q == "padic_oracle":
        est = D.padic_density_oracle(fam, n, p, x, cfg.shell_range or (40, 40))
        return {**est.to_dict(fam, n, x), "p": p, "quantity": q}, None
    if q == "sum_cx":
        _need(cfg, "M")
        fs = D.sum_cx(fam, n, cfg.M)
        body = {"family": fam, "n": n, "M": cfg.M, "quantity": q, "partial": repr(fs.partial),
                "tail": repr(fs.tail), "tail_kind": fs.tail_kind}
        csv = "M,partial\n" + "".join(f"{m},{fs.partial_at(m)!r}\n" for m in range(1, cfg.M + 1))
        return body, csv
    kw = {"method": cfg.options.get("method", "auto"), "seed": cfg.seed, "samples": cfg.mc_samples,
          "workers": cfg.workers}
    if cfg.options.get("target_rel") is not None:
        kw["target_rel"] = cfg.options["target_rel"]
    if q == "omega_inf":
        est = D.omega_infty(fam, n, x, **kw)
    elif q == "c_x":
        if x is None:
            raise click.UsageError("--x is required for c_x")
        est = D.c_x(fam, n, x, **kw)
    else:
        raise click.UsageError(f"unknown quantity {q!r}")
    return {**est.to_dict(fam, n, x), "quantity": q}, None


def _prediction(cfg: RunConfig):
    from .analysis import MissingDensity, prediction

    try:
        return prediction(cfg.family, cfg.n, M=cfg.M, seed=cfg.seed, samples=cfg.mc_samples)
    except MissingDensity as exc:
        raise DependencyError(str(exc)) from exc


def compute(cfg: RunConfig) -> tuple[dict, str | None]:
    """Result body and optional CSV text for a configuration."""
    c = cfg.command
    if c == "geometry":
        from .geometry import cox_data, invariants

        _need(cfg, "family", "n")
        inv = invariants(cfg.family, cfg.n)
        data = json.loads(cox_data(cfg.family, cfg.n).to_json())
        body = {"a": str(inv.a), "b": inv.b, "t_min": str(inv.t_min),
                "residual": [str(v) for v in inv.residual], "simplicial": inv.simplicial, "grading": data}
        return body, f"family,n,a,b,simplicial\n{cfg.family},{cfg.n},{inv.a},{inv.b},{inv.simplicial}\n"
    if c in ("count", "count-fibers"):
        _need(cfg, "family", "n", "B")
        series = _count(cfg, fibers=c == "count-fibers")
        body = json.loads(series.to_json())
        if c == "count-fibers":
            fibers = series.entries[-1].fibers or {}
            csv = "a,c,third,raw_count\n" + "".join(f"{k[0]},{k[1]},{k[2]},{v}\n" for k, v in fibers.items())
        else:
            csv = series.to_csv()
        return body, csv
    if c == "density":
        _need(cfg, "family", "n")
        return _density(cfg)
    if c == "constant":
        _need(cfg, "family", "n")
        pred = _prediction(cfg)
        return pred.to_dict(), None
    if c == "compare":
        from .analysis import fit_and_compare

        _need(cfg, "family", "n", "B")
        series = _count(cfg)
        report = fit_and_compare(series.counts(), _prediction(cfg))
        return json.loads(report.to_json()), report.to_csv()
    if c == "bt-bound":
        from .fibers import bt_bound_experiment

        _need(cfg, "n")
        rep = bt_bound_experiment(cfg.n, cfg.options.get("windows", (30, 100)),
                                  verify=cfg.options.get("verify", 8), seed=cfg.seed,
                                  max_samples=cfg.mc_samples or 1 << 24, workers=cfg.workers)
        return json.loads(rep.to_json()), rep.to_csv()
    if c == "bt-refute":
        from .fibers import bt_refutation

        _need(cfg, "n")
        rep = bt_refutation(cfg.n, cfg.options.get("p", 2), cfg.options.get("m_max", 6),
                            r=cfg.options.get("r"), method=cfg.options.get("method", "closed-form"),
                            seed=cfg.seed)
        return json.loads(rep.to_json()), rep.to_csv()
    raise click.UsageError(f"unknown command {c!r}")


def render(cfg: RunConfig, body: dict, csv: str | None) -> bytes:
    if cfg.fmt == "csv":
        if csv is None:
            raise click.UsageError(f"{cfg.command} has no CSV form")
        return csv.encode()
    artifact = {"command": cfg.command, "config": cfg.identity(), "seed": cfg.seed,
                "version": __version__, "result": body}
    return (json.dumps(artifact, sort_keys=True, indent=1) + "\n").encode()


def run(cfg: RunConfig) -> bytes:
    """Produce the artifact bytes, from cache when possible, and write them out."""
    start = time.perf_counter()
    path = cache_root(cfg) / f"{cfg.cache_key()}.{cfg.fmt}"
    hit = cfg.use_cache and path.is_file()
    if hit:
        data = path.read_bytes()
    else:
        data = render(cfg, *compute(cfg))
        if cfg.use_cache:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(path.suffix + ".tmp")
            tmp.write_bytes(data)
            tmp.replace(path)
    elapsed = time.perf_counter() - start
    if cfg.output:
        out = Path(cfg.output)
        out.write_bytes(data)
        timing = {"elapsed_s": elapsed, "cache_hit": hit, "workers": cfg.workers, "key": cfg.cache_key()}
        out.with_name(out.name + ".timing.json").write_text(json.dumps(timing, sort_keys=True) + "\n")
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    return data


# ---------------------------------------------------------------------------
# click wiring


def _ints(text: str | None) -> list[int]:
    if not text:
        return []
    out = []
    for tok in text.replace(",", " ").split():
        out.append(int(float(tok)) if "e" in tok.lower() else int(tok))
    return out


def _triple(text: str | None) -> list[int] | None:
    if text is None:
        return None
    vals = _ints(text)
    if len(vals) != 3:
        raise click.BadParameter("expected three integers like 1,0,1")
    return vals


def _common(f):
    opts = [
        click.option("--output", "-o", type=click.Path(dir_okay=False), help="Write the artifact here."),
        click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default=None),
        click.option("--cache-dir", type=click.Path(file_okay=False),
                     help=f"Cache directory (default: ${CACHE_ENV} or ~/.cache/torsorlab)."),
        click.option("--no-cache", is_flag=True, help="Neither read nor write the cache."),
        click.option("--workers", type=click.IntRange(min=1), default=1),
        click.option("--seed", type=click.IntRange(min=0), default=0),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _family(f):
    f = click.option("--n", "n", type=click.IntRange(min=2), required=True)(f)
    return click.option("--family", type=click.Choice(["X", "Xprime"]), default="X")(f)


def _execute(command: str, kw: dict, default_fmt: str = "json", **extra) -> None:
    cfg = RunConfig(command=command, family=kw.pop("family", None), n=kw.pop("n", None),
                    B=kw.pop("B", []), mc_samples=kw.pop("samples", None), seed=kw.pop("seed"),
                    shell_range=kw.pop("shell_range", None), M=kw.pop("M", None),
                    output=kw.pop("output"), cache_dir=kw.pop("cache_dir"), workers=kw.pop("workers"),
                    fmt=kw.pop("fmt") or default_fmt, use_cache=not kw.pop("no_cache"),
                    options={k: v for k, v in {**kw, **extra}.items() if v is not None})
    run(cfg)


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="torsorlab")
def cli() -> None:
    """Count rational points on two families of threefolds and compare with predicted asymptotics."""


@cli.command()
@_family
@_common
def geometry(**kw):
    """a- and b-invariants, cone data and gradings."""
    _execute("geometry", kw)


@cli.command()
@_family
@click.option("--B", "B", required=True, help="Monomial bound(s), comma separated; 1e6 style allowed.")
@click.option("--method", type=click.Choice(["auto", "compiled", "python", "python-ac", "python-wt", "oracle"]),
              default="auto")
@click.option("--blocks", type=click.IntRange(min=1), default=8, help="Static work partition size.")
@_common
def count(**kw):
    """Exact torsor point counts at one or more monomial bounds."""
    kw["B"] = _ints(kw["B"])
    _execute("count", kw)


@cli.command("count-fibers")
@_family
@click.option("--B", "B", required=True)
@click.option("--blocks", type=click.IntRange(min=1), default=8)
@_common
def count_fibers(**kw):
    """Raw counts grouped by fiber base point."""
    kw["B"] = _ints(kw["B"])
    _execute("count-fibers", kw)


@cli.command()
@_family
@click.option("--quantity", type=click.Choice(["omega_p", "omega_inf", "c_x", "euler", "finite_field",
                                               "padic_oracle", "sum_cx"]), default="omega_inf")
@click.option("--x", "x", help="Fiber base point, e.g. 1,0,1.")
@click.option("--p", "p", type=click.IntRange(min=2))
@click.option("--method", type=click.Choice(["auto", "closed-form", "monte-carlo", "quadrature"]), default=None)
@click.option("--samples", type=click.IntRange(min=1))
@click.option("--target-rel", type=click.FloatRange(min=0, min_open=True))
@click.option("--shell-range", nargs=2, type=click.IntRange(min=0))
@click.option("--M", "M", type=click.IntRange(min=1))
@_common
def density(**kw):
    """Local densities, per-fiber constants and their sums."""
    kw["x"] = _triple(kw["x"])
    kw["shell_range"] = tuple(kw["shell_range"]) if kw["shell_range"] else None
    _execute("density", kw)


@cli.command()
@_family
@click.option("--M", "M", type=click.IntRange(min=1), help="Coordinate cutoff for fiber sums.")
@click.option("--samples", type=click.IntRange(min=1))
@_common
def constant(**kw):
    """Assembled leading constant with exponents a, b."""
    _execute("constant", kw)


@cli.command()
@_family
@click.option("--B", "B", required=True)
@click.option("--M", "M", type=click.IntRange(min=1))
@click.option("--samples", type=click.IntRange(min=1))
@_common
def compare(**kw):
    """Counts against the prediction: ratios, fitted constant and trend."""
    kw["B"] = _ints(kw["B"])
    _execute("compare", kw)


@cli.command("bt-bound")
@click.option("--n", "n", type=click.IntRange(min=3), default=3)
@click.option("--windows", default="30,100")
@click.option("--verify", type=click.IntRange(min=0), default=8)
@click.option("--samples", type=click.IntRange(min=1), help="Monte Carlo cap per verified point.")
@_common
def bt_bound(**kw):
    """Spread of c_x / H(x) over coordinate windows (family X)."""
    kw["windows"] = _ints(kw["windows"])
    _execute("bt-bound", kw)


@cli.command("bt-refute")
@click.option("--n", "n", type=click.IntRange(min=2), default=2)
@click.option("--p", "p", type=click.IntRange(min=2), default=2)
@click.option("--m-max", type=click.IntRange(min=1), default=6)
@click.option("--r", "r", type=int, help="Exponent of the base height max^r.")
@click.option("--method", type=click.Choice(["closed-form", "monte-carlo"]), default="closed-form")
@_common
def bt_refute(**kw):
    """Constants along the two equal-height sequences for X' (CSV by default)."""
    _execute("bt-refute", kw, default_fmt="csv")


@cli.command("verify-all")
@click.option("--quick", is_flag=True, help="Reduced budgets.")
@click.option("--only", help="Comma separated criterion numbers.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), help="Also write a JSON summary.")
def verify_all(quick: bool, only: str | None, output: str | None) -> None:
    """Run the acceptance criteria and print one PASS/FAIL line each."""
    from .acceptance import run_all

    results = run_all(quick=quick, only=_ints(only) or None, echo=lambda s: click.echo(s))
    if output:
        Path(output).write_text(json.dumps([r.to_dict() for r in results], indent=1, default=str) + "\n")
    sys.exit(0 if all(r.passed for r in results) else 1)


def main(argv: list[str] | None = None) -> None:
    from .enumerate import OracleRefusal

    try:
        cli.main(args=argv, prog_name="torsorlab", standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_USAGE)
    except click.exceptions.Abort:
        sys.exit(1)
    except OracleRefusal as exc:
        click.echo(f"refused: {exc}", err=True)
        sys.exit(EXIT_REFUSED)
    except (DependencyError, ImportError) as exc:
        click.echo(f"missing dependency: {exc}", err=True)
        sys.exit(EXIT_DEPENDENCY)
    except SystemExit:
        raise
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)


if __name__ == "__main__":
    main()
