"""Command-line front end: ``simulate | analyze | oracle | sweep | export``.

Every command writes plain files into an output directory (``--out``, or a
directory under ``$HOLOQUENCH_OUT``, default ``./runs``) and finishes with
exit status 0 only when the topological classification is confident.
Module errors are printed to stderr as ``{code, module, message, context}``
JSON and give status 1; an indeterminate classification gives status 3.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import json
import math
import os
import shutil
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import (_parse_value, apply_overrides, dump_config, from_dict, default_config,
                     resolve, to_dict, validate)
from .disorder import dump_realization
from .errors import EmptySweep, HoloQuenchError, RecordFormatError
from .pipeline import Analysis, analyze_record, simulate_and_analyze
from .ringsim import (BinaryRecordWriter, build_lattice, export_fields_csv, export_record_csv,
                      fmt17, read_binary_record, read_fields_csv, read_record_csv)
from .spin import (TwoTimeGrid, export_grid_csv, export_profile_csv, export_series_csv,
                   reconstruct_fields)
from .tightbinding import kspace_quench_scan
from .topology import TopologyResult, save_result, winding_number
from .errors import GaplessSpectrum

OUT_ENV = "HOLOQUENCH_OUT"
EXIT_OK, EXIT_ERROR, EXIT_INDETERMINATE = 0, 1, 3
CONFIDENT = ("nontrivial", "trivial")
RECIPES = ("fig2", "fig3", "fig4", "fig5", "figS1")


# --------------------------------------------------------------------------
# manifest

def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Replay record of one command invocation.

    ``files`` maps names relative to the run directory to SHA-256 digests;
    ``config`` is the resolved configuration echo (``None`` for commands
    without one). Timing and step counts are informational and not digested.
    """

    command: str
    version: str
    seed: int | None
    config: dict | None
    files: dict
    wall_clock_s: float
    steps: int | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"command": self.command, "artifact_version": self.version, "seed": self.seed,
                "config": self.config, "files": self.files, "wall_clock_s": self.wall_clock_s,
                "steps": self.steps, "extra": self.extra}

    def write(self, out: Path) -> Path:
        p = Path(out) / "manifest.json"
        p.write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n")
        return p


def digest_files(out: Path, paths) -> dict:
    out = Path(out)
    return {str(Path(p).relative_to(out)): sha256(p) for p in sorted(map(Path, paths))}


def verify_manifest(path) -> list[str]:
    """Names whose digest no longer matches; empty when the run directory is intact."""
    path = Path(path)
    doc = json.loads(path.read_text())
    root = path.parent
    return [n for n, d in doc["files"].items()
            if not (root / n).exists() or sha256(root / n) != d]


# --------------------------------------------------------------------------
# config handling

def load_config_dict(path) -> dict:
    """Config dict from a config JSON or a manifest (whose echoed config is used)."""
    if path is None:
        return to_dict(default_config())
    data = json.loads(Path(path).read_text())
    if "artifact_version" in data and "config" in data:
        data = data["config"]
    return data


def build_config(path, overrides=(), seed=None, *, resolved: bool = True):
    """Config from a file plus overrides.

    Overriding ``phi`` clears explicit modulator phases so that they are
    re-derived from the new value instead of conflicting with it.
    """
    data = load_config_dict(path)
    if any(o.partition("=")[0].strip() == "phi" for o in overrides or ()):
        for m in data.get("modulators", []):
            m["phase"] = None
    cfg = from_dict(apply_overrides(data, overrides))
    if seed is not None:
        cfg = replace(cfg, seed=int(seed))
    return resolve(cfg) if resolved else cfg


def output_dir(arg, default_name: str) -> Path:
    out = Path(arg) if arg else Path(os.environ.get(OUT_ENV, "runs")) / default_name
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_tag(cfg) -> str:
    return hashlib.sha256(dump_config(cfg).encode()).hexdigest()[:12]


# --------------------------------------------------------------------------
# writers

def write_analysis(out: Path, an: Analysis, *, series: bool = True, psi=None) -> list[Path]:
    """Spin series, running-average grids, overall profile and topology result."""
    files = []
    if series:
        pa, pc = psi if psi is not None else (None, None)
        files.append(export_series_csv(an.series, out / "spin_series.csv", pa, pc))
    files.append(export_grid_csv(an.running, "sz_norm", out / "running_sz.csv"))
    files.append(export_grid_csv(an.running, "sy_norm", out / "running_sy.csv"))
    cols = {"avg_sz": an.avg_z, "avg_sy": an.avg_y}
    fld = an.result.field
    if fld is not None:
        cols.update(gz=fld.gz, gy=fld.gy, region=fld.region)
    files.append(export_profile_csv(out / "overall.csv", an.grid.tau, cols))
    files.append(save_result(an.result, out / "topology.json"))
    return files


def _status(result: TopologyResult) -> int:
    return EXIT_OK if result.classification in CONFIDENT else EXIT_INDETERMINATE


def _summary(result: TopologyResult) -> str:
    bis = "" if result.bis is None else " ".join(f"{v:.4f}" for v in result.bis.x)
    return f"classification={result.classification} c0={result.c0} bis=[{bis}]"


# --------------------------------------------------------------------------
# commands

def cmd_simulate(args) -> int:
    cfg = build_config(args.config, args.set, args.seed)
    vc = validate(cfg)
    out = output_dir(args.out, f"simulate-{_config_tag(cfg)}")
    t0 = time.perf_counter()
    files = [out / "config.json"]
    dump_config(cfg, files[0])
    if args.record in ("modes", "modes-csv"):
        lat = build_lattice(vc)
        n_samples = vc.quench_roundtrips * cfg.time.samples_per_roundtrip
        rec_path = out / "record.bin"
        with BinaryRecordWriter(rec_path, cfg.time.samples_per_roundtrip, cfg.m_min, lat.n_modes,
                                n_samples, vc.roundtrip_time) as sink:
            record, an = simulate_and_analyze(vc, keep_modes=args.record == "modes-csv", sink=sink)
        files.append(rec_path)
        if args.record == "modes-csv":
            files.append(export_record_csv(record, out / "record.csv"))
    else:
        record, an = simulate_and_analyze(vc, keep_modes=False)
    if args.record != "none":
        files.append(export_fields_csv(record, out / "fields.csv"))
    files += write_analysis(out, an, series=not args.no_series,
                            psi=(record.psi_a, record.psi_c))
    diag = record.diagnostics
    if cfg.disorder.modulator.active or cfg.disorder.source.active:
        files += dump_realization(
            out,
            diag["modulator_factors"] if cfg.disorder.modulator.active else None,
            diag["source_realization"] if cfg.disorder.source.active else None)
    man = RunManifest("simulate", __version__, cfg.seed, to_dict(cfg), digest_files(out, files),
                      time.perf_counter() - t0, diag["steps"],
                      {"max_edge_fraction": diag["max_edge_fraction"]})
    man.write(out)
    print(f"{out}: {_summary(an.result)}")
    return _status(an.result)


def read_record(path, samples_per_roundtrip: int = 160, roundtrip_time: float = 1.0):
    path = Path(path)
    if path.suffix == ".bin":
        return read_binary_record(path)
    if path.suffix == ".csv":
        with open(path) as fh:
            head = fh.readline().strip()
        if head.startswith("t,re_psi_a"):
            return read_fields_csv(path, samples_per_roundtrip, roundtrip_time)
        return read_record_csv(path, samples_per_roundtrip, roundtrip_time)
    raise RecordFormatError(f"unknown record format {path.suffix!r}", path=str(path))


def cmd_analyze(args) -> int:
    t0 = time.perf_counter()
    record = read_record(args.record, args.samples_per_roundtrip, args.roundtrip_time)
    out = output_dir(args.out, f"analyze-{sha256(args.record)[:12]}")
    an = analyze_record(record)
    psi = reconstruct_fields(record)
    files = write_analysis(out, an, series=not args.no_series, psi=psi)
    RunManifest("analyze", __version__, None, None, digest_files(out, files),
                time.perf_counter() - t0, None,
                {"record": str(args.record), "record_sha256": sha256(args.record)}).write(out)
    print(f"{out}: {_summary(an.result)}")
    return _status(an.result)


def run_oracle(phi: float, kappa: float, eta: float, n_k: int = 256, horizon=None):
    """k-space scan, winding number (or the gapless report) and the error vs the closed form."""
    scan = kspace_quench_scan(kappa, eta, phi, n_k, horizon)
    H = scan.hamiltonian
    try:
        winding = winding_number((H.hy, H.hz))
        gapless = None
    except GaplessSpectrum as err:
        winding, gapless = None, err.to_dict()
    mag = np.linalg.norm(H.h, axis=-1)
    gapped = mag > 1e-9 * max(mag.max(), 1e-300)
    err = np.abs(scan.average - scan.closed)[gapped]
    report = {
        "phi": phi, "kappa": kappa, "eta": eta, "n_k": n_k,
        "horizon": float(scan.t_snap[-1]),
        "winding": winding, "gapless": gapless,
        "max_error_vs_closed_form": float(err.max()) if err.size else None,
        "gapless_momenta_excluded": int((~gapped).sum()),
        "topology": scan.result.to_dict(),
    }
    return scan, report


def cmd_oracle(args) -> int:
    t0 = time.perf_counter()
    eta = args.eta if args.eta is not None else args.eta_ratio * args.kappa
    tag = f"oracle-phi{args.phi:.6g}-eta{eta:.6g}-kappa{args.kappa:.6g}-nk{args.n_k}"
    out = output_dir(args.out, tag)
    scan, report = run_oracle(args.phi, args.kappa, eta, args.n_k, args.horizon)
    H = scan.hamiltonian
    cols = {"avg_sx": scan.average[:, 0], "avg_sy": scan.average[:, 1],
            "avg_sz": scan.average[:, 2], "closed_sx": scan.closed[:, 0],
            "closed_sy": scan.closed[:, 1], "closed_sz": scan.closed[:, 2],
            "hx": np.broadcast_to(H.hx, H.k.shape), "hy": np.broadcast_to(H.hy, H.k.shape),
            "hz": np.broadcast_to(H.hz, H.k.shape)}
    fld = scan.result.field
    if fld is not None:
        cols.update(gz=fld.gz, gy=fld.gy, region=fld.region)
    files = [export_profile_csv(out / "kspace_profile.csv", scan.k, cols, label="k")]
    grid = TwoTimeGrid(scan.t_snap, scan.k, {"sz": scan.running[:, :, 2],
                                             "sy": scan.running[:, :, 1]})
    files.append(export_grid_csv(grid, "sz", out / "kspace_running_sz.csv", "k", "t"))
    files.append(export_grid_csv(grid, "sy", out / "kspace_running_sy.csv", "k", "t"))
    p = out / "oracle.json"
    p.write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    files.append(p)
    RunManifest("oracle", __version__, None, None, digest_files(out, files),
                time.perf_counter() - t0, None,
                {k: report[k] for k in ("phi", "kappa", "eta", "n_k", "horizon")}).write(out)
    w = "gapless" if report["winding"] is None else report["winding"]
    print(f"{out}: winding={w} {_summary(scan.result)}")
    return _status(scan.result)


# --------------------------------------------------------------------------
# sweep

def parse_grid(items) -> list[tuple[str, list]]:
    """``key=v1,v2,...`` strings to ``[(key, [raw values])]`` in the given order."""
    axes = []
    for item in items or ():
        key, sep, raw = item.partition("=")
        vals = [v.strip() for v in raw.split(",") if v.strip()] if sep else []
        axes.append((key.strip(), vals))
    return axes


def sweep_points(axes) -> list[dict]:
    if not axes or any(not v for _, v in axes):
        raise EmptySweep("sweep grid has no points", axes=[k for k, _ in axes])
    keys = [k for k, _ in axes]
    return [dict(zip(keys, combo)) for combo in itertools.product(*(v for _, v in axes))]


def _run_point(job):
    index, config_path, overrides, point = job
    row = {"point": index, **point}
    try:
        sets = list(overrides) + [f"{k}={v}" for k, v in point.items() if k != "seed"]
        seed = int(_parse_value(point["seed"])) if "seed" in point else None
        cfg = build_config(config_path, sets, seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            _, an = simulate_and_analyze(cfg, keep_modes=False)
        r = an.result
        row.update(c0=r.c0, classification=r.classification,
                   residual=None if r.residual is None else fmt17(r.residual),
                   n_bis=0 if r.bis is None else r.bis.count,
                   tau_bis=" ".join(fmt17(v) for v in (r.bis.x if r.bis is not None else ())),
                   g_bis="" if r.field is None else " ".join(fmt17(v) for v in r.field.g_bis.ravel()),
                   error_code="", error_message="")
    except HoloQuenchError as err:
        row.update(classification="error", error_code=err.code, error_message=err.message)
    except Exception as err:  # per-point isolation: record and keep going
        row.update(classification="error", error_code=type(err).__name__, error_message=str(err))
    return row


SWEEP_COLUMNS = ("c0", "classification", "residual", "n_bis", "tau_bis", "g_bis",
                 "error_code", "error_message")


def cmd_sweep(args) -> int:
    axes = parse_grid(args.grid)
    points = sweep_points(axes)
    t0 = time.perf_counter()
    cfg = build_config(args.config, args.set, args.seed, resolved=False)
    out = output_dir(args.out, f"sweep-{_config_tag(cfg)}")
    base = out / "base_config.json"
    dump_config(cfg, base)
    jobs = [(i, str(base), [], p) for i, p in enumerate(points)]
    if args.threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            rows = list(pool.map(_run_point, jobs))
    else:
        rows = [_run_point(j) for j in jobs]
    rows.sort(key=lambda r: r["point"])
    p = out / "summary.csv"
    cols = ["point"] + [k for k, _ in axes] + list(SWEEP_COLUMNS)
    with open(p, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({c: ("" if r.get(c) is None else r.get(c)) for c in cols})
    RunManifest("sweep", __version__, cfg.seed, to_dict(cfg), digest_files(out, [base, p]),
                time.perf_counter() - t0, None, {"grid": dict(axes)}).write(out)
    bad = [r for r in rows if r["classification"] not in CONFIDENT]
    print(f"{out}: {len(rows)} points, {len(bad)} not confident")
    return EXIT_OK if not bad else EXIT_INDETERMINATE


# --------------------------------------------------------------------------
# export recipes (column selection on text, so values stay bit-exact)

def _select_columns(src: Path, dst: Path, columns) -> Path:
    with open(src, newline="") as fi, open(dst, "w", newline="") as fo:
        r = csv.reader(fi)
        head = next(r)
        try:
            idx = [head.index(c) for c in columns]
        except ValueError as err:
            raise RecordFormatError(f"{src.name} lacks a required column", missing=str(err)) from None
        w = csv.writer(fo, lineterminator="\n")
        w.writerow(columns)
        for row in r:
            w.writerow([row[i] for i in idx])
    return dst


def _copy(src: Path, dst: Path) -> Path:
    if not src.exists():
        raise RecordFormatError(f"missing input {src.name}", path=str(src))
    shutil.copyfile(src, dst)
    return dst


def export_recipe(recipe: str, run: Path, out: Path) -> list[Path]:
    """Plot-ready CSV for one figure recipe from a ``simulate`` (or ``oracle``) directory.

    fig2
        ``t, |psi_A|, |psi_C|, sz_norm, sy_norm`` per sample.
    fig3
        Running two-time averages of both components plus the overall profile
        with the dynamical texture.
    fig4, fig5
        As ``fig3`` for a run with modulator (fig4) or source (fig5) disorder,
        plus the disorder realization.
    figS1
        k-space running averages and the profile from an ``oracle`` directory.
    """
    run, out = Path(run), Path(out)
    if recipe == "fig2":
        return [_select_columns(run / "spin_series.csv", out / "fig2_series.csv",
                                ["t", "abs_psi_a", "abs_psi_c", "sz_norm", "sy_norm"])]
    if recipe in ("fig3", "fig4", "fig5"):
        files = [_copy(run / "running_sz.csv", out / f"{recipe}_running_sz.csv"),
                 _copy(run / "running_sy.csv", out / f"{recipe}_running_sy.csv"),
                 _copy(run / "overall.csv", out / f"{recipe}_overall.csv"),
                 _copy(run / "topology.json", out / f"{recipe}_topology.json")]
        extra = {"fig4": "modulator_disorder.csv", "fig5": "source_disorder.json"}.get(recipe)
        if extra is not None:
            files.append(_copy(run / extra, out / f"{recipe}_{extra}"))
        return files
    if recipe == "figS1":
        return [_copy(run / "kspace_running_sz.csv", out / "figS1_running_sz.csv"),
                _copy(run / "kspace_running_sy.csv", out / "figS1_running_sy.csv"),
                _copy(run / "kspace_profile.csv", out / "figS1_profile.csv"),
                _copy(run / "oracle.json", out / "figS1_oracle.json")]
    raise ValueError(f"unknown recipe {recipe!r}")


def cmd_export(args) -> int:
    out = output_dir(args.out, f"export-{args.recipe}")
    files = export_recipe(args.recipe, Path(args.run), out)
    for f in files:
        print(f)
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point

def _angle(text: str) -> float:
    v = _parse_value(text)
    if not isinstance(v, (int, float)):
        raise argparse.ArgumentTypeError(f"not an angle: {text!r}")
    return float(v)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="holoquench", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        p.add_argument("--out", help=f"output directory (default under ${OUT_ENV} or ./runs)")
        if config:
            p.add_argument("--config", help="config JSON or a manifest.json to replay")
            p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                           help="dotted override, repeatable (e.g. disorder.modulator.delta=0.5)")
            p.add_argument("--seed", type=int, help="replace the config seed")

    p = sub.add_parser("simulate", help="full-wave quench run and analysis")
    common(p)
    p.add_argument("--record", choices=("fields", "modes", "modes-csv", "none"), default="fields",
                   help="fields: reconstructed output fields as CSV (default); modes: also the "
                        "per-mode binary record; modes-csv: per-mode binary and CSV")
    p.add_argument("--no-series", action="store_true", help="skip the per-sample spin series CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="re-run the analysis on a stored record")
    common(p, config=False)
    p.add_argument("--record", required=True, help="fields.csv, record.bin or record.csv")
    p.add_argument("--samples-per-roundtrip", type=int, default=160)
    p.add_argument("--roundtrip-time", type=float, default=1.0)
    p.add_argument("--no-series", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("oracle", help="momentum-space quench and winding number")
    common(p, config=False)
    p.add_argument("--phi", type=_angle, default=math.pi, help="0 or pi (default pi)")
    p.add_argument("--kappa", type=float, default=0.0025)
    p.add_argument("--eta-ratio", type=float, default=0.2, help="eta / kappa (default 0.2)")
    p.add_argument("--eta", type=float, help="absolute eta; overrides --eta-ratio")
    p.add_argument("--n-k", type=int, default=256)
    p.add_argument("--horizon", type=float, help="averaging horizon (default 1e4/kappa)")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("sweep", help="cartesian parameter sweep with a CSV summary")
    common(p)
    p.add_argument("--grid", action="append", default=[], metavar="KEY=V1,V2,...",
                   help="sweep axis, repeatable; 'seed' sets the run seed")
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export", help="plot-ready CSV for a figure recipe")
    common(p, config=False)
    p.add_argument("recipe", choices=RECIPES)
    p.add_argument("--run", required=True, help="simulate (or oracle, for figS1) directory")
    p.set_defaults(func=cmd_export)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HoloQuenchError as err:
        print(json.dumps(err.to_dict(), sort_keys=True), file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
