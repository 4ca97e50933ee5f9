"""Command-line front end for reproducible simulation runs.

Every subcommand reads its parameters from an optional flat ``key = value``
config file plus command-line flags (flags win), validates them all at
once, and writes CSV/JSON artifacts, a standalone plot script and a
manifest into the output directory.  A master seed is mandatory: there is
no wall-clock seeding anywhere, so rerunning a config reproduces the data
artifacts byte for byte.
"""

from __future__ import annotations

import argparse
import sys
import time
import traceback
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, runio
from .dynamics import eigenvalue_histogram, toy_survival_curve
from .hilbert import ModelCase, ModelSpec
from .pair_statistics import (
    PairDistributionKind,
    cumulative_p,
    dipolar_density_small_shift_limit,
    empirical_pair_cdf,
    pair_density_dipolar,
    shift_distribution_table,
)
from .spectroscopy import (
    CurveSupportError,
    GaussianProfileSpec,
    RatioScanSpec,
    default_detuning_grid,
    extract_fwhm,
    finite_size_scan,
    gaussian_convolve,
    spectrum,
    width_vs_ratio,
)


@dataclass(frozen=True)
class Param:
    kind: str  # int | float | bool | str | path | floats | ints
    default: object = None
    required: bool = False
    help: str = ""


_COMMON = {
    "seed": Param("int", required=True, help="master seed (mandatory; no wall-clock seeding)"),
    "outdir": Param("path", required=True, help="output directory for artifacts"),
    "workers": Param("int", 1, help="worker processes for the ensemble loop"),
}

_GRID = {
    "grid_outer_max": Param("float", 80.0, help="scan extends to +-this detuning"),
    "grid_outer_points": Param("int", 41, help="points on the coarse grid"),
    "grid_inner_max": Param("float", 20.0, help="refined region half-width"),
    "grid_inner_points": Param("int", 81, help="points within the refined region"),
}

SCHEMAS: dict[str, dict[str, Param]] = {
    "toy-decay": {
        **_COMMON,
        "n_atoms": Param("int", 256),
        "mu_sp": Param("float", 1.0),
        "t_max": Param("float", 1.0, help="curve extends to this time"),
        "time_points": Param("int", 51),
        "n_configs": Param("int", 1000),
    },
    "toy-band": {
        **_COMMON,
        "n_atoms": Param("int", 256),
        "mu_sp": Param("float", 1.0),
        "bins": Param("int", 201),
        "n_configs": Param("int", 1000),
    },
    "spectrum": {
        **_COMMON,
        "case": Param("str", required=True, help="case1 or case2"),
        "n_atoms": Param("int", required=True),
        "T": Param("float", required=True, help="evolution time, mean-interaction units"),
        "mu_sp": Param("float", required=True),
        "mu_sp_prime": Param("float", help="required for case1"),
        "mu_s_prime_p_prime": Param("float", help="required for case2"),
        "include_exchange": Param("bool", True, help="false turns the hopping processes off"),
        "split_first": Param("int", help="case2: atoms starting in s (default: half)"),
        "split_second": Param("int", help="case2: atoms starting in s'"),
        "n_configs": Param("int", 1000),
        "tol": Param("float", 1e-8),
        **_GRID,
    },
    "convolve": {
        **_COMMON,
        "input": Param("path", required=True, help="spectrum CSV to convolve"),
        "sigma": Param("float", 500.0, help="cloud width (results are insensitive to it)"),
        "quadrature_points": Param("int", 128),
        "r_max_over_sigma": Param("float", 4.0),
    },
    "pairdist": {
        **_COMMON,
        "delta_min": Param("float", 0.1),
        "delta_max": Param("float", 100.0),
        "points": Param("int", 200),
        "empirical": Param("bool", False, help="append a Monte Carlo CDF column"),
        "empirical_kind": Param("str", "dipolar"),
        "n_atoms": Param("int", 256),
        "n_configs": Param("int", 200),
    },
    "width-vs-nu": {
        **_COMMON,
        "n_atoms": Param("int", required=True, help="total atom number (both species)"),
        "T": Param("float", required=True),
        "mu_sp": Param("float", required=True),
        "mu_s_prime_p_prime": Param("float", required=True),
        "nu_values": Param("floats", help="imbalances; default: 2k/n_atoms up to 0.9"),
        "include_exchange": Param("bool", True),
        "convolve_sigma": Param("float", help="extract widths from cloud-averaged curves"),
        "n_configs": Param("int", 200),
        "tol": Param("float", 1e-8),
        **_GRID,
    },
    "finite-size": {
        **_COMMON,
        "case": Param("str", "case1"),
        "sizes": Param("ints", required=True, help="ascending atom numbers, e.g. 6,8,10"),
        "T": Param("float", required=True),
        "mu_sp": Param("float", required=True),
        "mu_sp_prime": Param("float"),
        "mu_s_prime_p_prime": Param("float"),
        "include_exchange": Param("bool", True),
        "n_configs": Param("int", 200),
        "tol": Param("float", 1e-8),
        **_GRID,
    },
    "motion": {
        **_COMMON,
        "n_atoms": Param("int", required=True),
        "T": Param("float", required=True),
        "mu_sp": Param("float", required=True),
        "mu_sp_prime": Param("float", required=True),
        "speed": Param("float", 0.05, help="atom speed, mean-interaction units"),
        "rebuild_dt": Param("float", help="Hamiltonian rebuild window (default T/200)"),
        "include_exchange": Param("bool", True),
        "n_configs": Param("int", 200),
        "tol": Param("float", 1e-8),
        **_GRID,
        # both legs of the comparison carry the heavy pair tail; stopping
        # at the shared +-80 leaves the baseline on that tail and reads
        # both widths about 10% low. Reach +-240 by default instead.
        "grid_outer_max": Param("float", 240.0, help="scan extends to +-this detuning"),
    },
}


@dataclass
class RunConfig:
    subcommand: str
    params: dict
    parse_errors: list
    unknown_keys: list


def _convert(kind: str, raw):
    if not isinstance(raw, str):
        return raw
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "bool":
        low = raw.strip().lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind == "floats":
        return [float(x) for x in raw.split(",") if x.strip()]
    if kind == "ints":
        return [int(x) for x in raw.split(",") if x.strip()]
    return raw  # str / path


def load_config_file(path) -> dict:
    """Flat 'key = value' lines; '#' starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {body!r}")
        key, _, value = body.partition("=")
        values[key.strip()] = value.strip()
    return values


def build_run_config(subcommand: str, file_values: dict, flag_values: dict) -> RunConfig:
    schema = SCHEMAS[subcommand]
    params = {name: spec.default for name, spec in schema.items()}
    errors: list = []
    unknown = [k for k in file_values if k not in schema]
    for source in (file_values, flag_values):
        for key, raw in source.items():
            if key not in schema:
                continue
            try:
                params[key] = _convert(schema[key].kind, raw)
            except ValueError as exc:
                errors.append(f"{key}: {exc}")
    return RunConfig(subcommand, params, errors, unknown)


def validate(config: RunConfig) -> list:
    """Collect every violation; an empty list means the config is runnable."""
    schema = SCHEMAS[config.subcommand]
    p = config.params
    out = list(config.parse_errors)
    out.extend(f"{k}: unknown parameter" for k in config.unknown_keys)
    for name, spec in schema.items():
        if spec.required and p.get(name) is None:
            out.append(f"{name}: required parameter is missing")
    if out:
        return out  # typed/complete checks below assume the above passed

    def positive(name):
        if p.get(name) is not None and p[name] <= 0:
            out.append(f"{name}: must be > 0, got {p[name]}")

    def at_least(name, bound):
        if p.get(name) is not None and p[name] < bound:
            out.append(f"{name}: must be >= {bound}, got {p[name]}")

    at_least("seed", 0)
    at_least("workers", 1)
    if "n_configs" in p:
        at_least("n_configs", 1)
    for name in ("T", "mu_sp", "mu_sp_prime", "mu_s_prime_p_prime", "tol",
                 "t_max", "sigma", "speed", "rebuild_dt", "delta_min", "delta_max",
                 "convolve_sigma"):
        if name in schema:
            positive(name)
    for name in ("n_atoms", "time_points", "bins", "points", "quadrature_points"):
        if name in schema:
            at_least(name, 2)

    if "grid_outer_max" in schema:
        positive("grid_outer_max")
        positive("grid_inner_max")
        at_least("grid_outer_points", 2)
        at_least("grid_inner_points", 2)
        if (
            p.get("grid_inner_max") is not None
            and p.get("grid_outer_max") is not None
            and p["grid_inner_max"] > p["grid_outer_max"]
        ):
            out.append("grid_inner_max: must not exceed grid_outer_max")

    sub = config.subcommand
    if sub == "spectrum":
        case = p["case"]
        if case not in ("case1", "case2"):
            out.append(f"case: must be case1 or case2, got {case!r}")
        elif case == "case1":
            if p["mu_sp_prime"] is None:
                out.append("mu_sp_prime: required for case1")
            if p["split_first"] is not None or p["split_second"] is not None:
                out.append("split_first/split_second: only meaningful for case2")
        else:
            if p["mu_s_prime_p_prime"] is None:
                out.append("mu_s_prime_p_prime: required for case2")
            s1, s2 = p["split_first"], p["split_second"]
            if (s1 is None) != (s2 is None):
                out.append("split_first/split_second: give both or neither")
            elif s1 is not None:
                if s1 < 0 or s2 < 0 or s1 + s2 != p["n_atoms"]:
                    out.append(
                        f"split_first/split_second: {s1}+{s2} must equal n_atoms={p['n_atoms']}"
                    )
            elif p["n_atoms"] % 2:
                out.append(
                    "n_atoms: equal populations need an even atom number "
                    "(or give split_first/split_second)"
                )
    elif sub == "convolve":
        if p["r_max_over_sigma"] < 4:
            out.append("r_max_over_sigma: must be >= 4")
        if p["quadrature_points"] < 8:
            out.append("quadrature_points: must be >= 8")
        if not Path(p["input"]).is_file():
            out.append(f"input: no such file {p['input']!r}")
    elif sub == "pairdist":
        if p["delta_min"] is not None and p["delta_max"] is not None and p["delta_min"] >= p["delta_max"]:
            out.append("delta_min: must be below delta_max")
        if p["empirical_kind"] not in ("isotropic", "dipolar"):
            out.append("empirical_kind: must be isotropic or dipolar")
    elif sub == "width-vs-nu":
        if p["nu_values"] is None:
            if p["n_atoms"] % 2:
                out.append("n_atoms: the default imbalance ladder needs an even total")
        else:
            try:
                RatioScanSpec(p["n_atoms"], tuple(p["nu_values"]))
            except ValueError as exc:
                out.append(f"nu_values: {exc}")
    elif sub == "finite-size":
        if p["case"] not in ("case1", "case2"):
            out.append(f"case: must be case1 or case2, got {p['case']!r}")
        elif p["case"] == "case1" and p["mu_sp_prime"] is None:
            out.append("mu_sp_prime: required for case1")
        elif p["case"] == "case2" and p["mu_s_prime_p_prime"] is None:
            out.append("mu_s_prime_p_prime: required for case2")
        sizes = p["sizes"]
        if sorted(sizes) != sizes or len(sizes) < 2 or len(set(sizes)) != len(sizes):
            out.append("sizes: need at least two distinct ascending atom numbers")
        elif min(sizes) < 2:
            out.append("sizes: atom numbers must be >= 2")
        elif p["case"] == "case2" and any(n % 2 for n in sizes):
            out.append("sizes: case2 sizes must be even (equal populations)")
    return out


def _model_from(p, case: str) -> ModelSpec:
    return ModelSpec(
        case=ModelCase(case),
        mu_sp=p["mu_sp"],
        mu_sp_prime=p.get("mu_sp_prime"),
        mu_s_prime_p_prime=p.get("mu_s_prime_p_prime"),
        include_exchange=p.get("include_exchange", True),
    )


def _grid_from(p) -> np.ndarray:
    return default_detuning_grid(
        outer_max=p["grid_outer_max"],
        outer_points=p["grid_outer_points"],
        inner_max=p["grid_inner_max"],
        inner_points=p["grid_inner_points"],
    )


# Keys that steer execution but cannot affect the computed numbers.  Data
# artifacts (CSV headers, summary.json) omit them so the same physics config
# yields identical bytes in any directory and at any worker count; the
# manifest echoes the full config.
_CONTEXT_KEYS = ("outdir", "workers")


def _echo(p: dict, full: bool = False) -> dict:
    skip = () if full else _CONTEXT_KEYS
    return {k: v for k, v in sorted(p.items()) if k not in skip}


def _width_summary(curve) -> dict:
    try:
        res = extract_fwhm(curve)
        return {
            "fwhm": res.fwhm,
            "uncertainty": res.uncertainty,
            "half_max": res.half_max,
            "left_cross": res.left_cross,
            "right_cross": res.right_cross,
        }
    except CurveSupportError as exc:
        return {"fwhm": None, "reason": str(exc)}


def _run_toy_decay(p, outdir: Path) -> list:
    times = np.linspace(0.0, p["t_max"], p["time_points"])
    t, mean, sem = toy_survival_curve(
        p["n_atoms"], times, p["n_configs"], p["seed"], mu_sp=p["mu_sp"]
    )
    csv = outdir / "decay.csv"
    runio.write_csv(
        csv,
        {"time": t, "survival": mean, "std_error": sem},
        metadata=_echo(p),
    )
    tail = mean[int(0.8 * mean.size) :]
    summary = outdir / "summary.json"
    runio.write_json(
        summary,
        {
            "survival_at_0.2": float(np.interp(0.2, t, mean)) if p["t_max"] >= 0.2 else None,
            "plateau_estimate": float(tail.mean()),
            "parameters": _echo(p),
        },
    )
    plot = runio.emit_plot_script(outdir, "plot_decay.py", "decay.csv", "decay")
    return [csv, summary, plot]


def _run_toy_band(p, outdir: Path) -> list:
    toy = ModelSpec(case=ModelCase.TOY_EXCHANGE, mu_sp=p["mu_sp"])
    hist = eigenvalue_histogram(
        toy, p["n_atoms"], p["n_configs"], p["bins"], p["seed"]
    )
    centers = 0.5 * (hist.bin_edges[1:] + hist.bin_edges[:-1])
    widths = np.diff(hist.bin_edges)
    density = hist.counts / hist.counts.sum() / widths
    csv = outdir / "band.csv"
    runio.write_csv(
        csv,
        {"bin_center": centers, "count": hist.counts, "density": density},
        metadata=_echo(p),
    )
    summary = outdir / "summary.json"
    runio.write_json(
        summary,
        {
            "central_90_width": hist.central_90_width,
            "half_max_width": hist.half_max_width,
            "n_eigenvalues": hist.n_eigenvalues,
            "n_outside_band_window": hist.n_outside,
            "parameters": _echo(p),
        },
    )
    plot = runio.emit_plot_script(outdir, "plot_band.py", "band.csv", "band")
    return [csv, summary, plot]


def _run_spectrum(p, outdir: Path) -> list:
    model = _model_from(p, p["case"])
    split = None
    if p["split_first"] is not None:
        split = (p["split_first"], p["split_second"])
    curve = spectrum(
        model,
        p["n_atoms"],
        p["T"],
        _grid_from(p),
        p["n_configs"],
        p["seed"],
        species_split=split,
        worker_count=p["workers"],
        tol=p["tol"],
    )
    csv = outdir / "spectrum.csv"
    runio.write_spectrum_csv(csv, curve)
    summary = outdir / "summary.json"
    runio.write_json(
        summary, {"width": _width_summary(curve), "parameters": _echo(p)}
    )
    plot = runio.emit_plot_script(outdir, "plot_spectrum.py", "spectrum.csv", "spectrum")
    return [csv, summary, plot]


def _run_convolve(p, outdir: Path) -> list:
    curve = runio.read_spectrum_csv(p["input"])
    profile = GaussianProfileSpec(
        sigma=p["sigma"],
        quadrature_points=p["quadrature_points"],
        r_max_over_sigma=p["r_max_over_sigma"],
    )
    out = gaussian_convolve(curve, profile)
    csv = outdir / "convolved.csv"
    runio.write_spectrum_csv(csv, out)
    summary = outdir / "summary.json"
    runio.write_json(
        summary,
        {
            "width": _width_summary(out),
            "zero_padded_kernel_mass": out.metadata["convolution"][
                "max_zero_padded_kernel_mass"
            ],
            "parameters": _echo(p),
        },
    )
    plot = runio.emit_plot_script(outdir, "plot_convolved.py", "convolved.csv", "spectrum")
    return [csv, summary, plot]


def _run_pairdist(p, outdir: Path) -> list:
    deltas = np.geomspace(p["delta_min"], p["delta_max"], p["points"])
    iso = shift_distribution_table(deltas, PairDistributionKind.ISOTROPIC)
    dip = shift_distribution_table(deltas, PairDistributionKind.DIPOLAR)
    columns = {
        "delta": deltas,
        "density_iso": iso.density,
        "density_dip": dip.density,
        "cumulative_iso": iso.cumulative,
        "cumulative_dip": dip.cumulative,
    }
    if p["empirical"]:
        kind = PairDistributionKind(p["empirical_kind"])
        ecdf = empirical_pair_cdf(p["n_atoms"], p["n_configs"], kind, p["seed"])
        columns["empirical_cdf"] = ecdf.at(deltas)
    csv = outdir / "pairdist.csv"
    runio.write_csv(csv, columns, metadata=_echo(p))
    summary = outdir / "summary.json"
    runio.write_json(
        summary,
        {
            "dipolar_fraction_beyond_40": 1.0
            - float(cumulative_p(40.0, PairDistributionKind.DIPOLAR)),
            "dipolar_density_small_shift": float(pair_density_dipolar(1e-6)),
            "small_shift_limit_exact": dipolar_density_small_shift_limit(),
            "parameters": _echo(p),
        },
    )
    plot = runio.emit_plot_script(outdir, "plot_pairdist.py", "pairdist.csv", "pairdist")
    return [csv, summary, plot]


def _run_width_vs_nu(p, outdir: Path) -> list:
    if p["nu_values"] is None:
        n = p["n_atoms"]
        nus = [2 * k / n for k in range(n // 2 + 1) if 2 * k / n <= 0.9]
    else:
        nus = list(p["nu_values"])
    model = ModelSpec(
        case=ModelCase.CASE_II,
        mu_sp=p["mu_sp"],
        mu_s_prime_p_prime=p["mu_s_prime_p_prime"],
        include_exchange=p["include_exchange"],
    )
    profile = None
    if p["convolve_sigma"] is not None:
        profile = GaussianProfileSpec(sigma=p["convolve_sigma"])
    points = width_vs_ratio(
        RatioScanSpec(p["n_atoms"], tuple(nus)),
        model,
        p["T"],
        p["n_configs"],
        p["seed"],
        grid=_grid_from(p),
        worker_count=p["workers"],
        profile=profile,
        tol=p["tol"],
    )
    csv = outdir / "width_vs_nu.csv"
    runio.write_csv(
        csv,
        {
            "nu": np.array([pt.nu for pt in points]),
            "n_first": np.array([pt.n_first for pt in points], dtype=float),
            "n_second": np.array([pt.n_second for pt in points], dtype=float),
            "fwhm": np.array([pt.width.fwhm for pt in points]),
            "uncertainty": np.array([pt.width.uncertainty for pt in points]),
        },
        metadata=_echo(p),
    )
    summary = outdir / "summary.json"
    runio.write_json(
        summary,
        {
            "widths": {str(pt.nu): pt.width.fwhm for pt in points},
            "parameters": _echo(p),
        },
    )
    plot = runio.emit_plot_script(outdir, "plot_width_vs_nu.py", "width_vs_nu.csv", "table")
    return [csv, summary, plot]


def _run_finite_size(p, outdir: Path) -> list:
    model = _model_from(p, p["case"])
    res = finite_size_scan(
        model,
        p["sizes"],
        p["T"],
        _grid_from(p),
        p["n_configs"],
        p["seed"],
        worker_count=p["workers"],
        tol=p["tol"],
    )
    csv = outdir / "finite_size.csv"
    runio.write_csv(
        csv,
        {
            "n_atoms": np.array(res.sizes, dtype=float),
            "fwhm": np.array(res.widths),
            "uncertainty": np.array(res.uncertainties),
        },
        metadata=_echo(p),
    )
    summary = outdir / "summary.json"
    runio.write_json(
        summary,
        {
            "extrapolated_width": res.extrapolated_width,
            "fit_residual": res.fit_residual,
            "relative_change_last_two": abs(res.widths[-1] - res.widths[-2])
            / res.widths[-1],
            "extrapolation_vs_largest": abs(
                res.extrapolated_width - res.widths[-1]
            )
            / res.widths[-1],
            "parameters": _echo(p),
        },
    )
    plot = runio.emit_plot_script(outdir, "plot_finite_size.py", "finite_size.csv", "table")
    return [csv, summary, plot]


def _run_motion(p, outdir: Path) -> list:
    model = _model_from(p, "case1")
    grid = _grid_from(p)
    common = dict(n_configs=p["n_configs"], seed=p["seed"], worker_count=p["workers"], tol=p["tol"])
    frozen = spectrum(model, p["n_atoms"], p["T"], grid, **common)
    moving = spectrum(
        model,
        p["n_atoms"],
        p["T"],
        grid,
        speed=p["speed"],
        rebuild_dt=p["rebuild_dt"],
        **common,
    )
    csv_f = outdir / "spectrum_frozen.csv"
    csv_m = outdir / "spectrum_moving.csv"
    runio.write_spectrum_csv(csv_f, frozen)
    runio.write_spectrum_csv(csv_m, moving)
    w_f = _width_summary(frozen)
    w_m = _width_summary(moving)
    increase = None
    if w_f.get("fwhm") and w_m.get("fwhm"):
        increase = w_m["fwhm"] / w_f["fwhm"] - 1.0
    summary = outdir / "summary.json"
    runio.write_json(
        summary,
        {
            "width_frozen": w_f,
            "width_moving": w_m,
            "relative_broadening": increase,
            "parameters": _echo(p),
        },
    )
    plot = runio.emit_plot_script(outdir, "plot_motion.py", "spectrum_frozen.csv", "motion")
    return [csv_f, csv_m, summary, plot]


_RUNNERS = {
    "toy-decay": _run_toy_decay,
    "toy-band": _run_toy_band,
    "spectrum": _run_spectrum,
    "convolve": _run_convolve,
    "pairdist": _run_pairdist,
    "width-vs-nu": _run_width_vs_nu,
    "finite-size": _run_finite_size,
    "motion": _run_motion,
}


def run(config: RunConfig) -> int:
    violations = validate(config)
    if violations:
        for v in violations:
            print(f"invalid configuration: {v}", file=sys.stderr)
        return 2
    params = config.params
    outdir = Path(params["outdir"])
    outdir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    try:
        artifacts = _RUNNERS[config.subcommand](params, outdir)
    except Exception as exc:
        diag = outdir / "diagnostics.json"
        runio.write_json(
            diag,
            {
                "error": str(exc),
                "type": type(exc).__name__,
                "traceback": traceback.format_exc().splitlines(),
                "config": {"subcommand": config.subcommand, **_echo(params)},
            },
        )
        print(f"run failed: {exc} (diagnostics in {diag})", file=sys.stderr)
        return 1
    runio.write_manifest(
        outdir,
        {"subcommand": config.subcommand, **_echo(params, full=True)},
        artifacts,
        elapsed=time.perf_counter() - started,
        version=__version__,
    )
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="frozengas",
        description="Frozen-gas dipolar line-broadening simulations. "
        "All detunings, times and widths are in mean-interaction units.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, schema in SCHEMAS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="flat key = value file; flags override it")
        for pname, spec in schema.items():
            flag = "--" + pname.replace("_", "-")
            sp.add_argument(flag, dest=pname, default=None, metavar=spec.kind.upper(), help=spec.help or pname)
    args = parser.parse_args(argv)
    schema = SCHEMAS[args.subcommand]
    try:
        file_values = load_config_file(args.config) if args.config else {}
    except (OSError, ValueError) as exc:
        print(f"cannot read config file: {exc}", file=sys.stderr)
        return 2
    flag_values = {
        name: getattr(args, name) for name in schema if getattr(args, name) is not None
    }
    config = build_run_config(args.subcommand, file_values, flag_values)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
