"""Run manifests, CSV serialization, caching, and the figure pipelines.

Every pipeline writes flat files only: CSV tables with fixed headers (floats
at 17 significant digits for bit-exact round-trips) plus a manifest.json
echoing all inputs, the tool version, and timestamps.  Parameter points are
cached under a content hash of the resolved (spec, run) pair, so an
interrupted sweep resumes without recomputing.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import subprocess
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import analysis, bogoliubov, dtwa, oracle
from .lattice import Boundary, LatticeSpec, parse_geometry

SERIES_HEADER = "t,mean_O_minus,var_O_minus,var_O_plus,sz_a,sz_b,energy,var_stderr"
MINIMA_HEADER = "L,N,a_z,lambda,t_min,var_min,var_min_stderr"
DISPERSION_HEADER = "kx,ky,abs_k,eps_k,re_omega_k,im_omega_k,growth_rate"
CRITICAL_AZ_HEADER = "L,a_z_star,a_z_star_over_L"
BOUNDARY_HEADER = "geometry,alpha,lambda,L,a_z_star_bogo,a_z_star_dtwa"
SCALING_HEADER = "alpha,L,a_z_star,a_z_star_over_L"


def fmt(x) -> str:
    """Serialize one value; floats carry 17 significant digits."""
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, header: str, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [header]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def read_csv(path: Path) -> dict[str, np.ndarray]:
    """Read a CSV written by write_csv into named float columns."""
    lines = Path(path).read_text().strip().splitlines()
    names = lines[0].split(",")
    cols: dict[str, list] = {n: [] for n in names}
    for line in lines[1:]:
        for n, v in zip(names, line.split(",")):
            cols[n].append(v)
    out = {}
    for n, vals in cols.items():
        try:
            out[n] = np.array([float(v) for v in vals])
        except ValueError:
            out[n] = np.array(vals)
    return out


def _revision() -> str:
    try:
        return (
            subprocess.run(
                ["git", "rev-parse", "--short", "HEAD"],
                capture_output=True,
                text=True,
                cwd=Path(__file__).parent,
                timeout=5,
            ).stdout.strip()
            or "unknown"
        )
    except Exception:
        return "unknown"


def content_hash(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class RunManifest:
    """Provenance record; every emitted CSV belongs to exactly one manifest."""

    spec: dict
    run: dict
    outputs: list = field(default_factory=list)
    tool_version: str = __version__
    revision: str = field(default_factory=_revision)
    started: str = ""
    finished: str = ""
    wall_seconds: float = 0.0
    master_seed: int | None = None

    def write(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path: Path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


# ---------------------------------------------------------------------------
# single runs
# ---------------------------------------------------------------------------

def series_rows(series) -> list[tuple]:
    return [
        (
            series.t[m],
            series.mean_o_minus[m],
            series.var_o_minus[m],
            series.var_o_plus[m],
            series.sz_a[m],
            series.sz_b[m],
            series.energy_mean[m],
            series.var_stderr[m],
        )
        for m in range(series.t.size)
    ]


def run_dtwa_to_dir(spec: LatticeSpec, run: dtwa.RunConfig, out_dir: Path,
                    n_workers: int | None = None) -> dtwa.EnsembleSeries:
    """Execute one dTWA ensemble and write series.csv + manifest.json."""
    out_dir = Path(out_dir)
    t0 = time.time()
    started = _now()
    series = dtwa.run_ensemble(spec, run, n_workers=n_workers)
    write_csv(out_dir / "series.csv", SERIES_HEADER, series_rows(series))
    RunManifest(
        spec=spec.to_json_dict(),
        run=run.to_json_dict(),
        outputs=["series.csv"],
        started=started,
        finished=_now(),
        wall_seconds=time.time() - t0,
        master_seed=run.master_seed,
    ).write(out_dir / "manifest.json")
    return series


def run_oracle_to_dir(spec: LatticeSpec, t_max: float, stride: float, out_dir: Path,
                      rtol: float = 1e-11, atol: float = 1e-13) -> oracle.OracleSeries:
    """Exact evolution with the same series.csv schema (var_stderr = 0)."""
    out_dir = Path(out_dir)
    t0 = time.time()
    started = _now()
    n_out = int(np.floor(t_max / stride + 1e-9)) + 1
    series = oracle.evolve(spec, stride * np.arange(n_out), rtol=rtol, atol=atol)
    write_csv(out_dir / "series.csv", SERIES_HEADER, series_rows(series))
    RunManifest(
        spec=spec.to_json_dict(),
        run={"t_max": t_max, "output_stride": stride, "engine": "oracle",
             "rel_tol": rtol, "abs_tol": atol},
        outputs=["series.csv"],
        started=started,
        finished=_now(),
        wall_seconds=time.time() - t0,
    ).write(out_dir / "manifest.json")
    return series


def load_series(run_dir: Path) -> tuple[LatticeSpec, dict, dict[str, np.ndarray]]:
    """Load (spec, run config, series columns) from a run directory."""
    run_dir = Path(run_dir)
    manifest = json.loads((run_dir / "manifest.json").read_text())
    spec = LatticeSpec.from_json_dict(manifest["spec"])
    return spec, manifest["run"], read_csv(run_dir / "series.csv")


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepPlan:
    """Grid of dTWA runs over (L, a_z) or (lambda, a_z)."""

    base: LatticeSpec
    run: dtwa.RunConfig
    axis1_name: str
    axis1_values: tuple
    axis2_name: str | None = None
    axis2_values: tuple = ()
    max_runs: int = 10_000

    def __post_init__(self):
        for vals in (self.axis1_values, self.axis2_values):
            if len(vals) > 1 and np.any(np.diff(np.asarray(vals, dtype=float)) <= 0):
                raise ValueError("axis values must be strictly monotone")
        if self.n_runs > self.max_runs:
            raise ValueError(f"sweep of {self.n_runs} runs exceeds budget {self.max_runs}")

    @property
    def n_runs(self) -> int:
        return len(self.axis1_values) * max(1, len(self.axis2_values))

    def points(self) -> list[LatticeSpec]:
        out = []
        ax2 = self.axis2_values or (None,)
        for v1 in self.axis1_values:
            for v2 in ax2:
                subs = {self.axis1_name: v1}
                if v2 is not None:
                    subs[self.axis2_name] = v2
                out.append(_substitute(self.base, subs))
        return out

    @classmethod
    def from_json_dict(cls, d: dict) -> "SweepPlan":
        axes = d["axes"]
        names = list(axes)
        if not 1 <= len(names) <= 2:
            raise ValueError("sweep needs one or two axes")
        return cls(
            base=LatticeSpec.from_json_dict(d["base"]),
            run=dtwa.RunConfig.from_json_dict(d["run"]),
            axis1_name=names[0],
            axis1_values=tuple(axes[names[0]]),
            axis2_name=names[1] if len(names) == 2 else None,
            axis2_values=tuple(axes[names[1]]) if len(names) == 2 else (),
        )


_AXIS_FIELDS = {"L": "L", "a_z": "a_z", "lambda": "lam", "alpha": "alpha"}


def _substitute(base: LatticeSpec, subs: dict) -> LatticeSpec:
    kw = {
        "geometry": base.geometry,
        "L": base.L,
        "a_z": base.a_z,
        "alpha": base.alpha,
        "lam": base.lam,
        "boundary": base.boundary,
    }
    for name, value in subs.items():
        if name not in _AXIS_FIELDS:
            raise ValueError(f"unknown sweep axis {name!r}; use one of {sorted(_AXIS_FIELDS)}")
        kw[_AXIS_FIELDS[name]] = type(kw[_AXIS_FIELDS[name]])(value)
    return LatticeSpec(**kw)


def run_sweep(plan: SweepPlan, out_dir: Path, n_workers: int | None = None,
              progress=None) -> list[tuple]:
    """Execute a sweep with per-point caching; returns minima.csv rows."""
    out_dir = Path(out_dir)
    rows = []
    for spec in plan.points():
        key = content_hash({"spec": spec.to_json_dict(), "run": plan.run.to_json_dict()})
        cache_dir = out_dir / "cache" / key
        if (cache_dir / "series.csv").exists() and (cache_dir / "manifest.json").exists():
            _, _, cols = load_series(cache_dir)
            series = dtwa.EnsembleSeries(
                spec=spec,
                run=plan.run,
                t=cols["t"],
                mean_o_minus=cols["mean_O_minus"],
                var_o_minus=cols["var_O_minus"],
                var_o_plus=cols["var_O_plus"],
                sz_a=cols["sz_a"],
                sz_b=cols["sz_b"],
                energy_mean=cols["energy"],
                var_stderr=cols["var_stderr"],
                n_traj=plan.run.n_traj,
            )
        else:
            series = run_dtwa_to_dir(spec, plan.run, cache_dir, n_workers=n_workers)
        mv = dtwa.minimal_variance(series)
        rows.append((spec.L, spec.spins_per_layer, spec.a_z, spec.lam, mv.t_min, mv.var_min, mv.stderr))
        if progress is not None:
            progress(spec)
    write_csv(out_dir / "minima.csv", MINIMA_HEADER, rows)
    RunManifest(
        spec=plan.base.to_json_dict(),
        run=plan.run.to_json_dict(),
        outputs=["minima.csv"],
        started="",
        finished=_now(),
        master_seed=plan.run.master_seed,
    ).write(out_dir / "manifest.json")
    return rows


# ---------------------------------------------------------------------------
# figure pipelines
# ---------------------------------------------------------------------------

def dispersion_rows(spec: LatticeSpec) -> list[tuple]:
    data = bogoliubov.dispersion_data(spec)
    return [
        (
            data.grid.k_cart[m, 0],
            data.grid.k_cart[m, 1],
            data.grid.abs_k[m],
            data.eps_k[m],
            data.omega_k[m].real,
            data.omega_k[m].imag,
            data.growth_rate[m],
        )
        for m in range(data.grid.n_points)
    ]


def critical_az_rows(geometry, l_values, alpha: float, lam: float,
                     boundary=Boundary.PERIODIC) -> list[tuple]:
    rows = []
    for L in l_values:
        a_star = bogoliubov.critical_az(geometry, int(L), alpha, lam, boundary)
        rows.append((int(L), a_star, a_star / int(L)))
    return rows


def _dtwa_critical_az(
    geometry,
    L: int,
    alpha: float,
    lam: float,
    run: dtwa.RunConfig,
    a_z_star_guess: float,
    sizes: list[int] | None = None,
    ratios: list[float] | None = None,
    out_dir: Path | None = None,
    n_workers: int | None = None,
) -> float:
    """Transition point from dTWA minima: p(a_z/L) across sizes, then the
    largest aspect ratio with significant p."""
    geometry = parse_geometry(geometry)
    sizes = sizes or sorted({max(4, L // 2), max(6, (3 * L) // 4), L})
    guess_ratio = a_z_star_guess / L
    ratios = ratios or [guess_ratio * f for f in (0.6, 0.85, 1.1, 1.4, 1.8)]
    p_curve = []
    for ratio in ratios:
        pts = []
        for size in sizes:
            spec = LatticeSpec(geometry=geometry, L=size, a_z=ratio * size, alpha=alpha, lam=lam)
            point_dir = None
            if out_dir is not None:
                key = content_hash({"spec": spec.to_json_dict(), "run": run.to_json_dict()})
                point_dir = Path(out_dir) / "cache" / key
            if point_dir is not None and (point_dir / "series.csv").exists():
                _, _, cols = load_series(point_dir)
                series = dtwa.EnsembleSeries(
                    spec=spec, run=run, t=cols["t"],
                    mean_o_minus=cols["mean_O_minus"], var_o_minus=cols["var_O_minus"],
                    var_o_plus=cols["var_O_plus"], sz_a=cols["sz_a"], sz_b=cols["sz_b"],
                    energy_mean=cols["energy"], var_stderr=cols["var_stderr"],
                    n_traj=run.n_traj,
                )
            elif point_dir is not None:
                series = run_dtwa_to_dir(spec, run, point_dir, n_workers=n_workers)
            else:
                series = dtwa.run_ensemble(spec, run, n_workers=n_workers)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                mv = dtwa.minimal_variance(series)
            pts.append((spec.spins_per_layer, mv.var_min, max(mv.stderr, 1e-12)))
        p, unc = analysis.fit_power_law(pts)
        p_curve.append((ratio, p, unc))
    return L * analysis.detect_transition(p_curve)


def pipeline_phase_boundary(
    geometries,
    alphas,
    lambdas,
    L: int,
    run: dtwa.RunConfig,
    out_dir: Path,
    sizes: list[int] | None = None,
    n_workers: int | None = None,
) -> list[tuple]:
    """Bogoliubov vs dTWA phase boundary; one CSV row per parameter point.

    Exactly one of alphas/lambdas should have more than one entry (the sweep
    axis); per-point failures are recorded as NaN and the pipeline continues.
    """
    out_dir = Path(out_dir)
    rows = []
    for geometry in geometries:
        for alpha in alphas:
            for lam in lambdas:
                try:
                    a_bogo = bogoliubov.critical_az(geometry, L, alpha, lam)
                except Exception as exc:
                    print(f"warning: {geometry} alpha={alpha} lambda={lam}: {exc}", file=sys.stderr)
                    rows.append((str(geometry), alpha, lam, L, np.nan, np.nan))
                    continue
                try:
                    a_dtwa = _dtwa_critical_az(
                        geometry, L, alpha, lam, run, a_bogo,
                        sizes=sizes, out_dir=out_dir, n_workers=n_workers,
                    )
                except Exception as exc:
                    print(f"warning: dTWA transition failed for {geometry} alpha={alpha} "
                          f"lambda={lam}: {exc}", file=sys.stderr)
                    a_dtwa = np.nan
                if np.isfinite(a_dtwa) and a_bogo > a_dtwa:
                    print(f"warning: Bogoliubov a_z* {a_bogo:.4g} exceeds dTWA {a_dtwa:.4g} "
                          f"at {geometry} alpha={alpha} lambda={lam}", file=sys.stderr)
                rows.append((parse_geometry(geometry).value, alpha, lam, L, a_bogo, a_dtwa))
    write_csv(out_dir / "boundary.csv", BOUNDARY_HEADER, rows)
    RunManifest(
        spec={"geometries": [parse_geometry(g).value for g in geometries],
              "alphas": list(alphas), "lambdas": list(lambdas), "L": L},
        run=run.to_json_dict(),
        outputs=["boundary.csv"],
        finished=_now(),
        master_seed=run.master_seed,
    ).write(out_dir / "manifest.json")
    return rows


def pipeline_scaling(alphas, l_values, geometry="ladder", out_dir: Path | None = None,
                     lam: float = 1.0) -> dict:
    """a_z*(L) per alpha with log-log slopes vs the analytic prediction."""
    geometry = parse_geometry(geometry)
    if len(l_values) < 4:
        raise ValueError("scaling pipeline needs >= 4 sizes per alpha")
    d = geometry.dim
    rows = []
    fits = {}
    for alpha in alphas:
        stars = []
        for L in l_values:
            a_star = bogoliubov.critical_az(geometry, int(L), alpha, lam)
            stars.append(a_star)
            rows.append((alpha, int(L), a_star, a_star / int(L)))
        l_arr = np.asarray(l_values, dtype=float)
        log_l = np.log(l_arr)
        ratio = np.asarray(stars) / l_arr
        slope, intercept = np.polyfit(log_l, np.log(ratio), 1)
        resid_power = float(np.sum((np.log(ratio) - (slope * log_l + intercept)) ** 2))
        # log-corrected model: a_z*/L = c / sqrt(log L)
        log_model = -0.5 * np.log(np.log(l_arr))
        c_log = np.mean(np.log(ratio) - log_model)
        resid_log = float(np.sum((np.log(ratio) - (c_log + log_model)) ** 2))
        n_pts = len(l_values)
        slope_unc = float(np.sqrt(resid_power / max(1, n_pts - 2) / np.sum((log_l - log_l.mean()) ** 2)))
        prediction = bogoliubov.predicted_critical_scaling(alpha, d)
        fits[float(alpha)] = {
            "slope_ratio_vs_L": float(slope),
            "slope_unc": slope_unc,
            "residual_power_fit": resid_power,
            "residual_log_fit": resid_log,
            "predicted_kind": prediction.kind,
            "predicted_exponent": prediction.exponent,
        }
    if out_dir is not None:
        out_dir = Path(out_dir)
        write_csv(out_dir / "scaling.csv", SCALING_HEADER, rows)
        (out_dir / "scaling_fits.json").write_text(json.dumps(fits, indent=2, sort_keys=True) + "\n")
        RunManifest(
            spec={"geometry": geometry.value, "alphas": list(alphas),
                  "L_values": [int(L) for L in l_values], "lambda": lam},
            run={},
            outputs=["scaling.csv", "scaling_fits.json"],
            finished=_now(),
        ).write(out_dir / "manifest.json")
    return fits


@dataclass
class CollapseCurve:
    """One Var[O^-](t) curve with its minimum, ready for collapsing."""

    spec: LatticeSpec
    t: np.ndarray
    var: np.ndarray
    mv: dtwa.MinimalVariance

    @property
    def ratio(self) -> float:
        return self.spec.a_z / self.spec.L


def _series_from_cache(spec: LatticeSpec, run: dtwa.RunConfig, cache_dir: Path,
                       n_workers: int | None) -> dtwa.EnsembleSeries:
    if (cache_dir / "series.csv").exists() and (cache_dir / "manifest.json").exists():
        _, _, cols = load_series(cache_dir)
        return dtwa.EnsembleSeries(
            spec=spec, run=run, t=cols["t"],
            mean_o_minus=cols["mean_O_minus"], var_o_minus=cols["var_O_minus"],
            var_o_plus=cols["var_O_plus"], sz_a=cols["sz_a"], sz_b=cols["sz_b"],
            energy_mean=cols["energy"], var_stderr=cols["var_stderr"],
            n_traj=run.n_traj,
        )
    return run_dtwa_to_dir(spec, run, cache_dir, n_workers=n_workers)


def collect_collapse_family(
    geometry, alpha: float, lam: float, l_values, az_over_l,
    run: dtwa.RunConfig, out_dir: Path, n_workers: int | None = None,
) -> list[CollapseCurve]:
    """dTWA runs over l_values x (a_z = ratio * L), cached under out_dir."""
    geometry = parse_geometry(geometry)
    out_dir = Path(out_dir)
    curves = []
    for L in l_values:
        for ratio in az_over_l:
            spec = LatticeSpec(geometry=geometry, L=int(L), a_z=ratio * int(L),
                               alpha=alpha, lam=lam)
            key = content_hash({"spec": spec.to_json_dict(), "run": run.to_json_dict()})
            series = _series_from_cache(spec, run, out_dir / "cache" / key, n_workers)
            mv = dtwa.minimal_variance(series)
            curves.append(CollapseCurve(spec=spec, t=series.t, var=series.var_o_minus, mv=mv))
    return curves


def fit_p_from_curves(curves: list[CollapseCurve]) -> tuple[float, float, float]:
    """Var_min ~ N^p across sizes, pooled over the aspect-ratio families.

    Returns (p, uncertainty, spread): one weighted fit per aspect ratio,
    combined by inverse-variance weighting; spread is the reduced chi^2 of
    the per-ratio values around the combined p.
    """
    by_ratio: dict[float, list[CollapseCurve]] = {}
    for c in curves:
        by_ratio.setdefault(round(c.ratio, 12), []).append(c)
    fits = []
    for ratio, group in sorted(by_ratio.items()):
        if len(group) < 3:
            continue
        pts = [(c.spec.spins_per_layer, c.mv.var_min, max(c.mv.stderr, 1e-12)) for c in group]
        fits.append(analysis.fit_power_law(pts))
    if not fits:
        raise analysis.AnalysisError(
            "p-fit needs >= 3 system sizes at a common aspect ratio; pass p explicitly"
        )
    weights = np.array([1.0 / u**2 for _, u in fits])
    values = np.array([v for v, _ in fits])
    p = float(np.sum(weights * values) / np.sum(weights))
    unc = float(np.sqrt(1.0 / np.sum(weights)))
    spread = float(np.sum(weights * (values - p) ** 2) / (len(fits) - 1)) if len(fits) > 1 else 0.0
    return p, unc, spread


def collapse_from_curves(
    curves: list[CollapseCurve],
    d: int,
    out_dir: Path,
    p_override: tuple[float, float] | None = None,
    var_cut: float = 20.0,
) -> analysis.CollapseResult:
    """Staged exponent extraction: p, then (d_V, d_tau), then delta, then nu.

    (d_V, d_tau) come from the fixed-size collapse over a_z at the largest
    available N; delta from the full family with the constraint substituted;
    curves are windowed to var <= var_cut * var_min before collapsing.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if p_override is not None:
        p, unc_p, s_min_p = p_override[0], p_override[1], 0.0
    else:
        p, unc_p, s_min_p = fit_p_from_curves(curves)

    def windowed(c: CollapseCurve) -> analysis.DataSet:
        mask = c.var <= var_cut * c.mv.var_min
        sigma = analysis.default_sigma(c.mv.var_min)
        return analysis.DataSet(
            label_value=c.spec.a_z,
            x=(c.t - c.mv.t_min)[mask],
            y=c.var[mask],
            sigma=np.full(int(np.count_nonzero(mask)), sigma),
            group_value=c.spec.spins_per_layer,
        )

    n_max = max(c.spec.spins_per_layer for c in curves)
    big = [windowed(c) for c in curves if c.spec.spins_per_layer == n_max]
    if len(big) < 2:
        raise analysis.AnalysisError("largest system size needs >= 2 a_z values for the 2D collapse")
    d_v, d_tau, unc_dv, unc_dt, s_min_2d = analysis.optimize_collapse_2d(big)

    full = [windowed(c) for c in curves]
    delta, unc_delta, s_min_delta = analysis.optimize_collapse_1d(full, d_v, d_tau, p, d)
    nu, unc_nu = analysis.derive_nu(p, d_v, delta, d, unc_p, unc_dv, unc_delta)

    result = analysis.CollapseResult(
        d_v=d_v, d_tau=d_tau, delta=delta, nu=nu, p=p,
        unc_d_v=unc_dv, unc_d_tau=unc_dt, unc_delta=unc_delta, unc_nu=unc_nu, unc_p=unc_p,
        s_min_dv_dtau=s_min_2d, s_min_delta=s_min_delta, s_min_p=s_min_p,
    )
    if s_min_2d > 5.0:
        print(f"warning: S_min={s_min_2d:.2f} > 5; collapse flagged as failed", file=sys.stderr)

    (out_dir / "collapse.json").write_text(json.dumps(result.to_json_dict(), indent=2) + "\n")
    rescaled_rows = []
    for c in sorted(curves, key=lambda c: (c.spec.spins_per_layer, c.spec.a_z)):
        ds = windowed(c)
        n = c.spec.spins_per_layer
        x_resc = ds.x * c.spec.a_z ** (-d_tau) * n ** (delta * d_tau / d)
        y_resc = ds.y * c.spec.a_z ** (-d_v) * n ** (d_v * delta / d - nu)
        rescaled_rows.extend((n, c.spec.a_z, x_resc[m], y_resc[m]) for m in range(x_resc.size))
    write_csv(out_dir / "rescaled.csv", "N,a_z,x,y", rescaled_rows)
    RunManifest(
        spec={"curves": [c.spec.to_json_dict() for c in curves], "d": d, "var_cut": var_cut},
        run={"p_override": list(p_override) if p_override else None},
        outputs=["collapse.json", "rescaled.csv"],
        finished=_now(),
    ).write(out_dir / "collapse_manifest.json")
    return result


def pipeline_collapse(
    geometry,
    alpha: float,
    lam: float,
    l_values,
    az_over_l,
    run: dtwa.RunConfig,
    d: int,
    out_dir: Path,
    p_override: tuple[float, float] | None = None,
    var_cut: float = 20.0,
    n_workers: int | None = None,
) -> analysis.CollapseResult:
    """End-to-end collapse: run the dTWA family, then extract all exponents."""
    curves = collect_collapse_family(
        geometry, alpha, lam, l_values, az_over_l, run, out_dir, n_workers
    )
    return collapse_from_curves(curves, d, out_dir, p_override=p_override, var_cut=var_cut)


def curves_from_series_dir(series_dir: Path, run_placeholder: dtwa.RunConfig | None = None) -> list[CollapseCurve]:
    """Collect collapse curves from every run directory under series_dir."""
    series_dir = Path(series_dir)
    curves = []
    for manifest_path in sorted(series_dir.glob("**/manifest.json")):
        run_dir = manifest_path.parent
        if not (run_dir / "series.csv").exists():
            continue
        spec, run_cfg, cols = load_series(run_dir)
        for column in SERIES_HEADER.split(","):
            if column not in cols:
                raise ValueError(f"{run_dir}/series.csv missing column {column!r}")
        series = dtwa.EnsembleSeries(
            spec=spec,
            run=run_placeholder or dtwa.RunConfig(
                n_traj=int(run_cfg.get("n_traj", 2)),
                t_max=float(cols["t"][-1]) or 1.0,
                output_stride=float(cols["t"][1] - cols["t"][0]),
                master_seed=int(run_cfg.get("master_seed", 0)),
            ),
            t=cols["t"],
            mean_o_minus=cols["mean_O_minus"], var_o_minus=cols["var_O_minus"],
            var_o_plus=cols["var_O_plus"], sz_a=cols["sz_a"], sz_b=cols["sz_b"],
            energy_mean=cols["energy"], var_stderr=cols["var_stderr"],
        )
        mv = dtwa.minimal_variance(series)
        curves.append(CollapseCurve(spec=spec, t=series.t, var=series.var_o_minus, mv=mv))
    if not curves:
        raise ValueError(f"no run directories with series.csv found under {series_dir}")
    return curves
