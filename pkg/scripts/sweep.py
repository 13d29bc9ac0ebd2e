"""
Sweep and optimization engine
Curves over one operating-point variable and a grid + golden-section
search for the best detected squeezing.
"""
import os
import sys
import math
import itertools
from dataclasses import dataclass, field, replace
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.optimize import minimize_scalar

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(PROJECT_ROOT, "scripts"))

from detection import HomodyneConfig, detected_quadratures
from vapor_model import temperature_from_celsius

# Try to import progress bar
try:
    from tqdm import tqdm
    TQDM_AVAILABLE = True
except ImportError:
    TQDM_AVAILABLE = False
    print("Note: tqdm not available. Install with: pip install tqdm for progress bars")

# Swept variable -> unit of the sweep axis
VARIABLES = {
    "detuning": "MHz",
    "power": "mW",
    "temperature": "C",
    "detection_frequency": "MHz",
    "waist": "um",
}
OPTIMIZABLE = ("detuning", "power", "temperature", "waist")

DEFAULT_GRID_POINTS = 25
DEFAULT_REFINE_CYCLES = 2
MAX_WORKERS = 4


@dataclass(frozen=True)
class OperatingPoint:
    """Everything needed to evaluate one detected squeezing value"""
    pump: object
    cell: object
    homodyne: HomodyneConfig = field(default_factory=HomodyneConfig)
    detection_frequency_MHz: float = 3.0
    calibration: object = None

    def with_value(self, variable, value):
        value = float(value)
        if variable == "detuning":
            return replace(self, pump=replace(self.pump, detuning=value))
        if variable == "power":
            return replace(self, pump=replace(self.pump, power=value * 1e-3))
        if variable == "temperature":
            return replace(self, cell=replace(self.cell, temperature=temperature_from_celsius(value)))
        if variable == "detection_frequency":
            if not (value > 0):
                raise ValueError(f"Detection frequency must be > 0, got {value}")
            return replace(self, detection_frequency_MHz=value)
        if variable == "waist":
            return replace(self, pump=replace(self.pump, waist=value * 1e-6))
        raise ValueError(f"Unknown sweep variable '{variable}', expected one of {list(VARIABLES)}")

    def value_of(self, variable):
        if variable == "detuning":
            return self.pump.detuning
        if variable == "power":
            return self.pump.power * 1e3
        if variable == "temperature":
            return self.cell.temperature_C
        if variable == "detection_frequency":
            return self.detection_frequency_MHz
        if variable == "waist":
            return self.pump.waist * 1e6
        raise ValueError(f"Unknown sweep variable '{variable}'")

    def evaluate(self):
        """Detected (squeezing dB, anti-squeezing dB)"""
        return detected_quadratures(
            self.pump, self.cell, self.homodyne, self.detection_frequency_MHz, self.calibration
        )


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    step: float
    base: OperatingPoint

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise ValueError(f"Unknown sweep variable '{self.variable}', expected one of {list(VARIABLES)}")
        if not (math.isfinite(self.start) and math.isfinite(self.stop) and math.isfinite(self.step)):
            raise ValueError("Sweep range must be finite")
        if not (self.start < self.stop):
            raise ValueError(f"Sweep needs start < stop, got {self.start}:{self.stop}")
        if not (self.step > 0):
            raise ValueError(f"Sweep step must be > 0, got {self.step}")
        if len(self.values()) < 3:
            raise ValueError(f"Sweep {self.start}:{self.stop} step {self.step} has fewer than 3 points")

    def values(self):
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(count)


@dataclass
class SweepCurve:
    variable: str
    x: np.ndarray
    squeezing_db: np.ndarray
    antisqueezing_db: np.ndarray
    best_detuning: np.ndarray = None

    def to_rows(self):
        return [(float(x), float(y)) for x, y in zip(self.x, self.squeezing_db)]

    def best(self):
        i = int(np.argmin(self.squeezing_db))
        return float(self.x[i]), float(self.squeezing_db[i])

    def metadata(self):
        x_best, y_best = self.best()
        meta = {
            "variable": self.variable,
            "unit": VARIABLES[self.variable],
            "points": int(len(self.x)),
            "best_x": x_best,
            "best_squeezing_dB": y_best,
        }
        if self.best_detuning is not None:
            meta["best_detuning_MHz"] = [float(d) for d in self.best_detuning]
        return meta


@dataclass
class OptimumReport:
    best_point: dict
    best_db: float
    samples: list
    evaluations: int
    refinement_steps: int
    grid_step: dict
    converged: bool = True

    def to_rows(self):
        """
        One row per coarse-grid sample, free-variable values then squeezing dB,
        followed by the refined best point as the last row
        """
        rows = [tuple(point.values()) + (value,) for point, value in self.samples]
        rows.append(tuple(self.best_point.values()) + (self.best_db,))
        return rows

    def to_dict(self):
        return {
            "best_point": self.best_point,
            "best_squeezing_dB": self.best_db,
            "evaluations": self.evaluations,
            "refinement_steps": self.refinement_steps,
            "grid_step": self.grid_step,
            "converged": self.converged,
            "grid_samples": len(self.samples),
        }


def _evaluate_many(points, max_workers=MAX_WORKERS, show_progress=False, desc="Evaluating"):
    """Evaluate operating points concurrently, results in input order"""
    if not points:
        return []
    with ThreadPoolExecutor(max_workers=min(max_workers, len(points))) as executor:
        futures = [executor.submit(p.evaluate) for p in points]
        iterator = tqdm(futures, desc=desc, disable=not show_progress) if TQDM_AVAILABLE else futures
        return [future.result() for future in iterator]


def run_sweep(spec, max_workers=MAX_WORKERS, show_progress=False):
    """
    Detected squeezing along one variable

    Args:
        spec: SweepSpec
        max_workers: evaluation threads
        show_progress: show a tqdm bar

    Returns:
        SweepCurve
    """
    xs = spec.values()
    points = [spec.base.with_value(spec.variable, x) for x in xs]
    results = _evaluate_many(points, max_workers, show_progress, desc=f"Sweeping {spec.variable}")
    return SweepCurve(
        variable=spec.variable,
        x=xs,
        squeezing_db=np.array([r[0] for r in results]),
        antisqueezing_db=np.array([r[1] for r in results]),
    )


def check_bounds(free_vars, base):
    if not free_vars:
        raise ValueError("optimize needs at least one free variable")
    for name, (lo, hi) in free_vars.items():
        if name not in OPTIMIZABLE:
            raise ValueError(f"Cannot optimize '{name}', expected a subset of {list(OPTIMIZABLE)}")
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError(f"Bounds for {name} must be finite, got {lo}:{hi}")
        if lo > hi:
            raise ValueError(f"Empty feasible region for {name}: {lo} > {hi}")
        # both ends must be valid operating points
        base.with_value(name, lo)
        base.with_value(name, hi)


def _point_at(base, values):
    point = base
    for name, value in values.items():
        point = point.with_value(name, value)
    return point


def optimize(free_vars, base, grid_points=DEFAULT_GRID_POINTS, refine_cycles=DEFAULT_REFINE_CYCLES,
             max_workers=MAX_WORKERS, show_progress=False, verbose=False):
    """
    Best detected squeezing over a box of operating points

    Coarse grid over every free variable, then golden-section refinement of
    one variable at a time inside the grid cells next to the current best.

    Args:
        free_vars: {variable: (lo, hi)} in sweep-axis units
        base: OperatingPoint supplying every fixed value
        grid_points: coarse grid points per dimension
        refine_cycles: passes of per-dimension refinement

    Returns:
        OptimumReport
    """
    check_bounds(free_vars, base)
    if grid_points < 2:
        raise ValueError(f"grid_points must be >= 2, got {grid_points}")

    names = list(free_vars)
    axes = []
    grid_step = {}
    for name in names:
        lo, hi = free_vars[name]
        if lo == hi:
            axes.append(np.array([float(lo)]))
            grid_step[name] = 0.0
        else:
            axes.append(np.linspace(lo, hi, grid_points))
            grid_step[name] = (hi - lo) / (grid_points - 1)

    combos = [dict(zip(names, map(float, c))) for c in itertools.product(*axes)]
    results = _evaluate_many([_point_at(base, c) for c in combos], max_workers, show_progress, desc="Coarse grid")
    samples = [(c, r[0]) for c, r in zip(combos, results)]
    evaluations = len(samples)

    best_values, best_db = min(samples, key=lambda s: s[1])
    best_values = dict(best_values)
    if verbose:
        print(f"[INFO] Coarse grid best {best_db:.4f} dB at {best_values}")

    refinement_steps = 0
    converged = True
    for _ in range(refine_cycles):
        improved = False
        for name in names:
            step = grid_step[name]
            if step == 0:
                continue
            lo, hi = free_vars[name]
            x0 = best_values[name]
            a, b = max(lo, x0 - step), min(hi, x0 + step)

            def objective(v, name=name):
                values = dict(best_values)
                values[name] = float(min(max(v, lo), hi))
                return _point_at(base, values).evaluate()[0]

            f_a, f_b = objective(a), objective(b)
            evaluations += 2
            if a < x0 < b and best_db < f_a and best_db < f_b:
                res = minimize_scalar(objective, bracket=(a, x0, b), method="golden", tol=1e-6)
            else:
                res = minimize_scalar(objective, bounds=(a, b), method="bounded",
                                      options={"xatol": step * 1e-4})
            evaluations += int(getattr(res, "nfev", 0))
            refinement_steps += 1
            if not getattr(res, "success", True):
                converged = False

            x_new = float(min(max(res.x, lo), hi))
            candidates = [(float(res.fun), x_new), (f_a, a), (f_b, b)]
            value, x_best = min(candidates)
            if value < best_db:
                best_db = value
                best_values[name] = x_best
                improved = True
        if verbose:
            print(f"[INFO] Refinement pass: {best_db:.4f} dB at {best_values}")
        if not improved:
            break

    return OptimumReport(
        best_point=best_values,
        best_db=float(best_db),
        samples=samples,
        evaluations=evaluations,
        refinement_steps=refinement_steps,
        grid_step=grid_step,
        converged=converged,
    )


def run_sweep_at_best_detuning(spec, detuning_bounds, grid_points=DEFAULT_GRID_POINTS,
                               max_workers=MAX_WORKERS, show_progress=False):
    """
    Best detected squeezing along one variable, re-optimizing the detuning at every point

    Args:
        spec: SweepSpec over any variable except detuning
        detuning_bounds: (lo, hi) detuning search window in MHz
        grid_points: coarse grid points of each detuning search

    Returns:
        SweepCurve with best_detuning filled in
    """
    if spec.variable == "detuning":
        raise ValueError("Cannot re-optimize the detuning of a detuning sweep")
    xs = spec.values()
    points = [spec.base.with_value(spec.variable, x) for x in xs]
    for point in points:
        check_bounds({"detuning": detuning_bounds}, point)

    iterator = points
    if TQDM_AVAILABLE:
        iterator = tqdm(points, desc=f"Sweeping {spec.variable} at best detuning", disable=not show_progress)
    reports = [optimize({"detuning": detuning_bounds}, p, grid_points=grid_points, max_workers=max_workers)
               for p in iterator]
    best = [_point_at(p, r.best_point) for p, r in zip(points, reports)]
    return SweepCurve(
        variable=spec.variable,
        x=xs,
        squeezing_db=np.array([r.best_db for r in reports]),
        antisqueezing_db=np.array([b.evaluate()[1] for b in best]),
        best_detuning=np.array([r.best_point["detuning"] for r in reports]),
    )
