"""Artifact I/O: CSV tables with metadata headers, JSON summaries, manifests.

Every float is written with 17 significant digits and every JSON object
with sorted keys, so a run with a fixed configuration and seed produces
byte-identical data artifacts.  The manifest is the one exception: it
records the elapsed wall time (and hashes of the data files), so it is
reproducible up to that field.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .spectroscopy import SpectrumCurve


def format_float(x) -> str:
    return f"{float(x):.17g}"


def write_csv(path, columns: dict, metadata: dict | None = None) -> None:
    """Write named columns with '#'-prefixed metadata lines on top."""
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    length = arrays[0].shape[0]
    if any(a.shape != (length,) for a in arrays):
        raise ValueError("all columns must be 1-d and equally long")
    with open(path, "w") as fh:
        fh.write("# units: detunings/widths in mean-interaction units, "
                 "times in inverse mean-interaction units, unit density\n")
        for key, value in (metadata or {}).items():
            fh.write(f"# {key} = {json.dumps(value, sort_keys=True)}\n")
        fh.write(",".join(names) + "\n")
        for i in range(length):
            fh.write(",".join(format_float(a[i]) for a in arrays) + "\n")


def read_csv(path) -> tuple[dict, dict]:
    """Read a CSV written by write_csv; returns (columns, metadata)."""
    metadata = {}
    with open(path) as fh:
        line = fh.readline()
        while line.startswith("#"):
            body = line[1:].strip()
            if " = " in body:
                key, _, raw = body.partition(" = ")
                metadata[key.strip()] = json.loads(raw)
            line = fh.readline()
        names = [c.strip() for c in line.strip().split(",")]
        rows = np.loadtxt(fh, delimiter=",", ndmin=2)
    if rows.size == 0:
        raise ValueError(f"no data rows in {path}")
    return {n: rows[:, i] for i, n in enumerate(names)}, metadata


def write_spectrum_csv(path, curve: SpectrumCurve) -> None:
    meta = dict(curve.metadata)
    meta["n_configs"] = curve.n_configs
    write_csv(
        path,
        {
            "detuning": curve.detunings,
            "yield": curve.yields,
            "std_error": curve.std_errors,
        },
        metadata=meta,
    )


def read_spectrum_csv(path) -> SpectrumCurve:
    columns, metadata = read_csv(path)
    for needed in ("detuning", "yield", "std_error"):
        if needed not in columns:
            raise ValueError(f"{path} lacks required column {needed!r}")
    n_configs = int(metadata.pop("n_configs", 1))
    return SpectrumCurve(
        detunings=columns["detuning"],
        yields=columns["yield"],
        std_errors=columns["std_error"],
        n_configs=n_configs,
        metadata=metadata,
    )


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    digest.update(Path(path).read_bytes())
    return digest.hexdigest()


def write_manifest(outdir, config_echo: dict, artifacts: list, elapsed: float, version: str) -> Path:
    """Record everything needed to re-derive the artifacts, plus their hashes."""
    outdir = Path(outdir)
    manifest = {
        "config": config_echo,
        "code_version": version,
        "elapsed_seconds": elapsed,
        "artifacts": {
            Path(a).name: sha256_of(a) for a in artifacts
        },
        "note": "artifacts are byte-reproducible from this config; "
                "elapsed_seconds varies between runs",
    }
    path = outdir / "manifest.json"
    write_json(path, manifest)
    return path


_PLOT_TEMPLATES = {
    "decay": """\
import csv

import matplotlib.pyplot as plt

times, surv, err = [], [], []
with open("{csv_name}") as fh:
    rows = [r for r in fh if not r.startswith("#")]
for row in csv.DictReader(rows):
    times.append(float(row["time"]))
    surv.append(float(row["survival"]))
    err.append(float(row["std_error"]))
plt.errorbar(times, surv, yerr=err, fmt="o-", ms=3)
plt.xlabel("time (inverse mean interaction)")
plt.ylabel("survival probability")
plt.ylim(0, 1.02)
plt.tight_layout()
plt.savefig("{stem}.png", dpi=160)
""",
    "band": """\
import csv

import matplotlib.pyplot as plt

centers, counts = [], []
with open("{csv_name}") as fh:
    rows = [r for r in fh if not r.startswith("#")]
for row in csv.DictReader(rows):
    centers.append(float(row["bin_center"]))
    counts.append(float(row["count"]))
plt.step(centers, counts, where="mid")
plt.xlabel("eigen-energy (mean-interaction units)")
plt.ylabel("count")
plt.tight_layout()
plt.savefig("{stem}.png", dpi=160)
""",
    "spectrum": """\
import csv

import matplotlib.pyplot as plt

detuning, yields, err = [], [], []
with open("{csv_name}") as fh:
    rows = [r for r in fh if not r.startswith("#")]
for row in csv.DictReader(rows):
    detuning.append(float(row["detuning"]))
    yields.append(float(row["yield"]))
    err.append(float(row["std_error"]))
plt.errorbar(detuning, yields, yerr=err, fmt="o-", ms=3)
plt.xlabel("detuning (mean-interaction units)")
plt.ylabel("yield")
plt.tight_layout()
plt.savefig("{stem}.png", dpi=160)
""",
    "pairdist": """\
import csv

import matplotlib.pyplot as plt

cols = {{}}
with open("{csv_name}") as fh:
    rows = [r for r in fh if not r.startswith("#")]
reader = csv.DictReader(rows)
for row in reader:
    for key, value in row.items():
        cols.setdefault(key, []).append(float(value))
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
ax1.loglog(cols["delta"], cols["density_iso"], label="isotropic")
ax1.loglog(cols["delta"], cols["density_dip"], label="dipolar")
ax1.set_xlabel("shift")
ax1.set_ylabel("density")
ax1.legend()
ax2.semilogx(cols["delta"], cols["cumulative_iso"], label="isotropic")
ax2.semilogx(cols["delta"], cols["cumulative_dip"], label="dipolar")
if "empirical_cdf" in cols:
    ax2.semilogx(cols["delta"], cols["empirical_cdf"], ":", label="sampled")
ax2.set_xlabel("shift")
ax2.set_ylabel("cumulative")
ax2.legend()
plt.tight_layout()
plt.savefig("{stem}.png", dpi=160)
""",
    "table": """\
import csv

import matplotlib.pyplot as plt

cols = {{}}
with open("{csv_name}") as fh:
    rows = [r for r in fh if not r.startswith("#")]
for row in csv.DictReader(rows):
    for key, value in row.items():
        cols.setdefault(key, []).append(float(value))
keys = list(cols)
plt.errorbar(cols[keys[0]], cols["fwhm"], yerr=cols.get("uncertainty"), fmt="o-")
plt.xlabel(keys[0])
plt.ylabel("line width (mean-interaction units)")
plt.tight_layout()
plt.savefig("{stem}.png", dpi=160)
""",
    "motion": """\
import csv

import matplotlib.pyplot as plt


def load(name):
    detuning, yields, err = [], [], []
    with open(name) as fh:
        rows = [r for r in fh if not r.startswith("#")]
    for row in csv.DictReader(rows):
        detuning.append(float(row["detuning"]))
        yields.append(float(row["yield"]))
        err.append(float(row["std_error"]))
    return detuning, yields, err


for name, label in [("{csv_name}", "frozen"), ("spectrum_moving.csv", "moving")]:
    detuning, yields, err = load(name)
    plt.errorbar(detuning, yields, yerr=err, fmt="o-", ms=3, label=label)
plt.xlabel("detuning (mean-interaction units)")
plt.ylabel("yield")
plt.legend()
plt.tight_layout()
plt.savefig("{stem}.png", dpi=160)
""",
}


def emit_plot_script(outdir, name: str, csv_name: str, kind: str) -> Path:
    """Write a standalone matplotlib script that reads only the CSV artifact."""
    path = Path(outdir) / name
    stem = Path(csv_name).stem
    path.write_text(_PLOT_TEMPLATES[kind].format(csv_name=csv_name, stem=stem))
    return path
