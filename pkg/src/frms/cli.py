"""Config-driven experiment runner and structural verification suite.

Usage: ``frms <command> --config PATH [--out DIR] [--threads N]
[--only STAGE] [--seed-override U64] [--strict]``.  Commands are the
stages ``generate``, ``sample``, ``autocorr``, ``diffract``,
``partition``, ``verify`` and the full pipeline ``run``.

Exit codes: 0 ok, 2 config error, 3 invariant violation, 4 tolerance
failure under ``run --strict``.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import os
import sys
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import autocorr as ac
from . import decomp
from . import diffract as df
from .config import (
    ConfigError,
    ExperimentConfig,
    build_sampler,
    build_scheme_from,
    build_window,
    config_hash,
    k_grid_values,
    load_config,
    vanhove_of,
)
from .dual import annihilator, bragg_candidates, character_residual
from .export import write_csv, write_json
from .randfield import DependencySet, NoFiniteDependencySet, dset_of, envelope_of, hermitian_residual, mean_function, sample_weights, seed_list
from .scheme import SchemeError, Window, density, enumerate_points, max_gap, min_gap, thick_boundary_ratio

log = logging.getLogger("frms")

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_TOLERANCE = 0, 2, 3, 4
STAGES = ("generate", "sample", "autocorr", "diffract", "partition", "verify")


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""
    witness: object = None

    def to_dict(self) -> dict:
        return {"name": self.name, "ok": self.ok, "detail": self.detail, "witness": self.witness}


@dataclass
class Pipeline:
    """Objects built from one config, computed lazily and shared by the stages."""

    cfg: ExperimentConfig
    out: Path
    threads: int = 1
    report: dict = field(default_factory=dict)

    @cached_property
    def hash(self) -> str:
        return config_hash(self.cfg)

    @cached_property
    def scheme(self):
        return build_scheme_from(self.cfg)

    @cached_property
    def sampler(self):
        return build_sampler(self.cfg, self.scheme, build_window(self.cfg, self.scheme))

    @property
    def window(self) -> Window:
        return self.sampler.site_window

    @cached_property
    def vanhove(self):
        return vanhove_of(self.cfg, self.scheme.d)

    @property
    def radius(self) -> float:
        return self.vanhove.radii[-1]

    @property
    def n(self) -> int:
        return len(self.vanhove) - 1

    @cached_property
    def points(self):
        return enumerate_points(self.scheme, self.window, self.radius)

    @cached_property
    def seeds(self) -> np.ndarray:
        return seed_list(self.cfg.seeds.base, self.cfg.seeds.count)

    @cached_property
    def dset(self) -> DependencySet | None:
        try:
            return dset_of(self.sampler)
        except NoFiniteDependencySet:
            return None

    @cached_property
    def envelope(self):
        return envelope_of(self.sampler) if self.dset is not None else None

    def csv(self, name: str, header, rows) -> None:
        write_csv(self.out / name, header, rows, self.hash)

    def _coord_cols(self, prefix: str) -> list[str]:
        return [f"{prefix}{i}" for i in range(self.scheme.dim)]

    # -- stages -------------------------------------------------------------

    def generate(self) -> None:
        pts = self.points
        s = self.scheme
        header = self._coord_cols("coord_") + [f"physical_{i}" for i in range(s.d)] + [f"internal_{i}" for i in range(s.e)]
        rows = (list(c) + list(x) + list(y) for c, x, y in zip(pts.coords.tolist(), pts.physical.tolist(), pts.internal.tolist()))
        self.csv("points.csv", header, rows)
        predicted = density(s, self.window)
        table = []
        for i, r in enumerate(self.vanhove.radii):
            count = int(np.sum(np.all(np.abs(pts.physical) <= r, axis=1)))
            measured = count / self.vanhove.volume(i)
            table.append({"n": i, "radius": r, "count": count, "measured": measured, "relative_error": abs(measured - predicted) / predicted})
        self.report["generate"] = {"n_points": len(pts), "radius": self.radius, "predicted_density": predicted, "density": table}

    def sample(self) -> None:
        s = self.scheme
        first = self.seeds[: min(3, len(self.seeds))]
        X = sample_weights(self.sampler, self.points, first)
        header = self._coord_cols("coord_") + [f"physical_{i}" for i in range(s.d)] + [f"internal_{i}" for i in range(s.e)] + ["re_w", "im_w"]
        for seed, w in zip(first.tolist(), X):
            w = np.asarray(w, dtype=complex)
            rows = (
                list(c) + list(x) + list(y) + [a.real, a.imag]
                for c, x, y, a in zip(self.points.coords.tolist(), self.points.physical.tolist(), self.points.internal.tolist(), w)
            )
            self.csv(f"sample_{seed}.csv", header, rows)
        self.report["sample"] = {"seeds_written": [int(x) for x in first]}

    @cached_property
    def candidates(self) -> list:
        D = self.dset if self.dset is not None else DependencySet.of([(0,) * self.scheme.dim])
        c = self.cfg.candidates
        return ac.candidate_set(self.points, D, extra=c.extra, radius=c.radius)

    def autocorr(self) -> None:
        rows = ac.autocorr_table(self.sampler, self.points, self.radius, self.candidates, self.cfg.seeds.count, int(self.seeds[0]), self.n)
        header = [f"g_{i}" for i in range(self.scheme.dim)] + ["g_physical", "re_eta", "im_eta", "re_Ag", "im_Ag", "stderr", "n"]
        out, summary = [], []
        for r in rows:
            a = r.ag
            val = a.eta_difference if a else complex("nan")
            se = a.eta_difference_se if a else float("nan")
            out.append(list(r.g) + [r.g_physical[0], r.eta.real, r.eta.imag, val.real, val.imag, se, r.n])
            entry = {"g": list(r.g), "g_physical": r.g_physical[0], "eta": r.eta}
            if a:
                entry.update(
                    eta_difference=a.eta_difference,
                    eta_difference_se=a.eta_difference_se,
                    covariance_sum=a.covariance_sum,
                    covariance_sum_se=a.covariance_sum_se,
                    consistent=a.consistent,
                )
                if not a.consistent:
                    log.warning("A_g estimators disagree at g=%s beyond combined SE", r.g)
            summary.append(entry)
        self.csv("autocorr.csv", header, out)
        self.report["autocorr"] = {"n": self.n, "radius": self.radius, "num_seeds": self.cfg.seeds.count, "rows": summary}

    def diffract(self) -> None:
        cfg = self.cfg
        dual = annihilator(self.scheme)
        amp = df.WindowAmplitude(mean_function(self.sampler), self.window)
        peak_list = []
        top = amp.max_amplitude
        if top > 0 and cfg.peaks.max_count > 0:
            thr = cfg.peaks.threshold * top
            peak_list = bragg_candidates(dual, (cfg.k_grid.min, cfg.k_grid.max), amp, thr)[: cfg.peaks.max_count]
        k = k_grid_values(cfg)
        rep = df.measure_peaks_and_background(
            self.sampler,
            self.points,
            self.radius,
            self.seeds,
            peak_list,
            k,
            dual=dual,
            envelope=self.envelope,
            threads=self.threads,
            metadata={"scheme": self.scheme.name, "window": str(self.window), "sampler": self.sampler.kind, "n": self.n, "radius": self.radius},
        )
        self.csv(
            "peaks.csv",
            [f"dual_{i}" for i in range(self.scheme.dim)] + ["chi", "chi_star", "predicted", "measured", "relative_error"],
            (list(p.dual_coords) + [p.chi, p.chi_star, p.predicted, p.measured, p.relative_error] for p in rep.peaks),
        )
        self.csv("background.csv", ["k", "predicted", "measured", "stderr"], ([b.k, b.predicted, b.measured, b.stderr] for b in rep.background))
        section = rep.to_dict()
        levels = rep.background_levels
        section["background_summary"] = {"grid_mean": float(levels.mean()), "grid_median": float(np.median(levels))}
        if self.envelope is not None:
            theo = df.theoretical_coefficients(self.envelope)
            section["theoretical_coefficients"] = [{"g": list(g), "A_g": a} for g, a in sorted(theo.coeffs.items())]
            try:
                fit = df.fit_background(k, levels, self.candidates, self.scheme, stderr=[b.stderr for b in rep.background])
                section["fit"] = {
                    "support": [list(g) for g in fit.support],
                    "coefficients": [{"g": list(g), "A_g": a, "stderr": fit.coefficients.stderr[g], "noise_floor": fit.coefficients.noise_floor[g]} for g, a in fit.coefficients.coeffs.items()],
                    "condition_number": fit.condition_number,
                    "residual_rms": fit.residual_rms,
                }
            except SchemeError as exc:
                section["fit"] = {"error": str(exc)}
        self.report["diffract"] = section

    def _partition_inputs(self):
        p = self.cfg.partition
        dim = self.scheme.dim
        if p.dset is not None:
            D = DependencySet.of([tuple(x) for x in p.dset])
        elif self.dset is not None:
            D = self.dset
        else:
            D = DependencySet.of([(0,) * dim])
        if p.g is not None:
            g = tuple(p.g)
        else:
            nonzero = [x for x in D.sorted() if any(x) and float(self.scheme.coordinates(np.asarray(x).reshape(1, -1))[0, 0]) > 0]
            g = nonzero[0] if nonzero else (1,) * dim
        if len(g) != dim:
            raise ConfigError(f"partition.g: expected {dim} coordinates")
        return D, g, tuple(p.region)

    @cached_property
    def partition_result(self):
        D, g, region = self._partition_inputs()
        reps = self.cfg.partition.representatives
        cells = decomp.partition(self.scheme, self.window, D, g, region, representatives=reps, check=reps is None)
        for c in cells:
            c.separation_ok = decomp.verify_cell_separation(c, g, D)
        return D, g, region, cells

    def partition(self) -> None:
        D, g, region, cells = self.partition_result
        sub = cells.subscheme
        payload = {
            "g": list(g),
            "r": list(cells.r),
            "dset": [list(x) for x in D.sorted()],
            "k": sub.k,
            "region": list(region),
            "levels": [[[float(a), float(b)] for a, b in w.intervals] for w in cells.levels.sets],
            "cells": [c.to_dict() for c in cells],
        }
        write_json(self.out / "partition.json", payload, self.hash)
        self.report["partition"] = {"k": sub.k, "cells": len(cells), "points": sum(c.count for c in cells)}

    # -- verification -------------------------------------------------------

    def checks(self) -> list[Check]:
        out = [self._check_character(), self._check_gaps(), self._check_boundary(), self._check_envelope()]
        out.extend(self._check_partition())
        return out

    def _check_character(self) -> Check:
        dual = annihilator(self.scheme)
        eye = np.eye(self.scheme.dim, dtype=np.int64)
        worst, wit = 0.0, None
        for a, b in itertools.product(eye, eye):
            r = character_residual(dual, a, b)
            if r > worst:
                worst, wit = r, (a.tolist(), b.tolist())
        return Check("character_residual", worst == 0.0, f"max residual {worst:.3g} over generator pairs", wit)

    def _check_gaps(self) -> Check:
        radii = self.vanhove.radii[:3]
        mins, maxs = [], []
        for r in radii:
            pts = enumerate_points(self.scheme, self.window, r)
            mins.append(min_gap(pts))
            maxs.append(max_gap(pts, r))
        const = all(abs(m - mins[0]) <= 1e-9 * mins[0] for m in mins)
        bounded = all(m <= maxs[0] * (1 + 1e-9) for m in maxs)
        detail = f"radii {list(radii)}: min_gap {mins}, max_gap {maxs}"
        wit = None if const and bounded else {"min_gap": mins, "max_gap": maxs}
        return Check("discreteness_and_relative_density", const and bounded, detail, wit)

    def _check_boundary(self) -> Check:
        ratios = [thick_boundary_ratio(self.vanhove, i, 1.0) for i in range(len(self.vanhove))]
        ok = all(b < a for a, b in zip(ratios, ratios[1:]))
        return Check("van_hove_boundary", ok, f"thick boundary ratios (K=[-1,1]) {ratios}", None if ok else ratios)

    def _check_envelope(self) -> Check:
        if self.envelope is None:
            return Check("envelope_symmetry", True, "not applicable: sampler has no finite d-set")
        (lo,), (hi,) = self.window.hull()
        probes = np.linspace(float(lo) - 0.25, float(hi) + 0.25, 100)
        res = hermitian_residual(self.envelope, probes)
        return Check("envelope_symmetry", res <= 1e-12, f"max |c_-g(y) - conj(c_g(y+g*))| = {res:.3g} at 100 probes")

    def _check_partition(self) -> list[Check]:
        D, g, region, cells = self.partition_result
        out = []
        bad = cells.subscheme.invariant_violations()
        out.append(Check("subscheme_invariants", not bad, "; ".join(bad) or "R is a complete system containing D", bad or None))
        total = sum((w.measure for w in cells.levels.sets), start=0)
        ok = total == self.window.measure
        out.append(Check("level_set_measure", ok, f"sum of level-set measures {float(total)} vs window {float(self.window.measure)}"))
        ref = enumerate_points(self.scheme, self.window, region)
        defect = decomp.partition_witness(cells, ref)
        wit = _duplicate_witness(cells) if defect else None
        out.append(Check("partition_exactness", defect is None, defect or f"{len(ref)} sites in {len(cells)} cells", wit))
        sep = None
        for c in cells:
            w = decomp.separation_witness(c, g, D)
            if w is not None:
                sep = {"cell": {"representative": list(c.representative), "level": c.level}, "pair": [list(w[0]), list(w[1])]}
                break
        out.append(Check("cell_separation", sep is None, "every cell separated" if sep is None else "separation fails", sep))
        return out

    # -- strict tolerances --------------------------------------------------

    def tolerance_checks(self) -> list[Check]:
        tol = self.cfg.tolerances
        out = []
        gen = self.report.get("generate")
        if gen:
            err = gen["density"][-1]["relative_error"]
            out.append(Check("density", err < tol.density, f"relative error {err:.3g} at r={self.radius}"))
        dif = self.report.get("diffract")
        if dif:
            # a peak passes within the relative tolerance or, for random peak heights, within se_multiple SE
            rows = [p for p in dif["peaks"] if p["predicted_intensity"] > 0]
            bad = [
                p["dual_coords"]
                for p in rows
                if not (p["relative_error"] < tol.peak or abs(p["measured_intensity"] - p["predicted_intensity"]) <= tol.se_multiple * (p["stderr"] or 0.0))
            ]
            worst = max((p["relative_error"] for p in rows), default=0.0)
            out.append(Check("peaks", not bad, f"{len(bad)} of {len(rows)} peaks outside tolerance; worst relative error {worst:.3g}", bad or None))
            bg = dif["background"]
            if self.envelope is not None and bg:
                pred = np.array([b["predicted"] for b in bg])
                meas = np.array([b["measured"] for b in bg])
                a0 = abs(df.ag_theoretical(self.envelope, self.window, (0,) * self.scheme.dim))
                scale = a0 if a0 > 0 else 1.0
                frac = float(np.mean(np.abs(meas - pred) <= tol.background * scale))
                out.append(Check("background", frac >= tol.background_fraction, f"{frac:.1%} of grid points within {tol.background:.0%} of A_0"))
        auto = self.report.get("autocorr")
        if auto:
            bad = [r["g"] for r in auto["rows"] if r.get("consistent") is False]
            out.append(Check("estimator_agreement", not bad, f"{len(bad)} g with disagreeing estimators", bad or None))
        return out


def _duplicate_witness(cells) -> dict | None:
    """The first site lying in two cells, with both cells."""
    seen: dict = {}
    for c in cells:
        for key in c.points.coords.tolist():
            key = tuple(key)
            if key in seen:
                a = seen[key]
                return {"site": list(key), "cells": [{"representative": list(a.representative), "level": a.level}, {"representative": list(c.representative), "level": c.level}]}
            seen[key] = c
    return None


# ---------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="frms", description="Finitely randomized model sets: experiments and verification.")
    p.add_argument("command", choices=STAGES + ("run",))
    p.add_argument("--config", required=True, help="YAML experiment config")
    p.add_argument("--out", help="output directory (default: output.dir of the config)")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="thread cap for seed sweeps")
    p.add_argument("--only", help="comma-separated stage filter")
    p.add_argument("--seed-override", type=int, help="replace seeds.base")
    p.add_argument("--strict", action="store_true", help="exit 4 when a tolerance check fails (run only)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _stages(command: str, only: str | None) -> list[str]:
    selected = list(STAGES) if command == "run" else [command]
    if only:
        wanted = [s.strip() for s in only.split(",") if s.strip()]
        unknown = [s for s in wanted if s not in STAGES]
        if unknown:
            raise ConfigError(f"--only: unknown stage(s) {unknown}")
        selected = [s for s in selected if s in wanted]
        if not selected:
            raise ConfigError(f"--only {only} selects nothing for command {command!r}")
    return selected


def _print_checks(title: str, checks: list[Check]) -> None:
    for c in checks:
        print(f"{title} {'PASS' if c.ok else 'FAIL'} {c.name}: {c.detail}")
        if not c.ok and c.witness is not None:
            print(f"    witness: {c.witness}")


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed_override is not None:
            if not 0 <= args.seed_override < 2**64:
                raise ConfigError("--seed-override: must be an unsigned 64-bit integer")
            cfg = cfg.model_copy(update={"seeds": cfg.seeds.model_copy(update={"base": args.seed_override})})
        if args.threads < 1:
            raise ConfigError("--threads: must be at least 1")
        stages = _stages(args.command, args.only)
        out = Path(args.out or cfg.output.dir)
        pipe = Pipeline(cfg, out, args.threads)
        _ = pipe.scheme, pipe.sampler  # fail early on invariant violations
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SchemeError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT

    code = EXIT_OK
    try:
        for stage in stages:
            if stage == "verify":
                checks = pipe.checks()
                pipe.report["verify"] = [c.to_dict() for c in checks]
                _print_checks("verify", checks)
                if not all(c.ok for c in checks):
                    code = EXIT_INVARIANT
            else:
                getattr(pipe, stage)()
        if args.command == "run":
            tol = pipe.tolerance_checks()
            pipe.report["tolerance_checks"] = [c.to_dict() for c in tol]
            _print_checks("tolerance", tol)
            if args.strict and code == EXIT_OK and not all(c.ok for c in tol):
                code = EXIT_TOLERANCE
        meta = {"scheme": pipe.scheme.name, "sampler": pipe.sampler.kind, "stages": stages, "config": cfg.model_dump(mode="json")}
        write_json(out / "report.json", {"meta": meta, **pipe.report}, pipe.hash)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SchemeError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    return code


if __name__ == "__main__":
    raise SystemExit(main())
