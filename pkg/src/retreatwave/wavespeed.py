"""Retreat speed selection for the free-boundary semi-wave.

The boundary condition q'(0) = c*delta/d singles out one wave speed among the
one-parameter family of decreasing profiles.  The slope residual

    r(c) = q_c'(0) - (delta/d) * c

is strictly decreasing in c, positive at c0 = d * P0(delta) (the zero-speed
closed form scaled by d) and negative at c = 0, so the speed c* is found by
bracketed root finding on [c0, 0].  The retreat speed of the front is -c*.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, InputError, NumericalError, SequenceOrderingError
from .phaseplane import (
    IntegrationOptions,
    PhaseTrajectory,
    SemiWaveProfile,
    closed_form_zero_speed,
    integrate_trajectory,
    reconstruct_profile,
)
from .reaction import ReactionFunction, make_perturbation_pair
from .serialize import write_csv

__all__ = [
    "ResidualEvaluation",
    "SpeedResult",
    "SweepTable",
    "SequenceRun",
    "PerturbedSpeeds",
    "slope_residual",
    "find_wave_speed",
    "density_sweep",
    "perturbed_wave_speeds",
    "bracketing_sequences",
]

# Below this gap between delta and the stable zero the bracket degenerates
# (the closed-form endpoint tends to 0) and the root find is ill conditioned.
MIN_DELTA_GAP = 1e-6


@dataclass(eq=False)
class ResidualEvaluation:
    """One evaluation of the slope residual q_c'(0) - (delta/d)*c."""

    c: float
    value: float
    trajectory: PhaseTrajectory = field(repr=False)


@dataclass(eq=False)
class SpeedResult:
    """Selected wave speed c* with its bracket, residual and profile."""

    delta: float
    c_star: float
    retreat_speed: float
    bracket: tuple[float, float]
    residual: float
    profile: SemiWaveProfile = field(repr=False)
    iterations: int
    function_calls: int

    def to_json_dict(self) -> dict:
        return {
            "delta": self.delta,
            "c_star": self.c_star,
            "retreat_speed": self.retreat_speed,
            "bracket_low": self.bracket[0],
            "bracket_high": self.bracket[1],
            "residual": self.residual,
            "iterations": self.iterations,
            "function_calls": self.function_calls,
            "slope_at_zero": self.profile.slope_at_zero,
            "tail_rate": self.profile.tail_rate,
        }


@dataclass(eq=False)
class SweepTable:
    """Per-delta speed results; failed rows keep their error message."""

    deltas: list[float]
    results: list[SpeedResult | None]
    errors: dict[float, str]

    def retreat_speeds(self) -> list[float]:
        return [r.retreat_speed for r in self.results if r is not None]

    def assert_monotone(self) -> None:
        speeds = self.retreat_speeds()
        if any(b <= a for a, b in zip(speeds, speeds[1:])):
            raise NumericalError("retreat speed is not strictly increasing across the sweep")

    def to_csv(self, path) -> None:
        rows = []
        for delta, res in zip(self.deltas, self.results):
            if res is None:
                rows.append((delta, float("nan"), float("nan"), float("nan"), float("nan"), 0))
            else:
                rows.append(
                    (
                        delta,
                        res.c_star,
                        res.retreat_speed,
                        res.residual,
                        res.bracket[0],
                        res.iterations,
                    )
                )
        write_csv(
            path,
            ("delta", "c_star", "retreat_speed", "residual", "bracket_low", "iterations"),
            rows,
        )


@dataclass(eq=False)
class PerturbedSpeeds:
    """Speeds of the sandwiching reactions, straddling the base speed."""

    lower: SpeedResult
    upper: SpeedResult
    base_c_star: float
    epsilon: float


@dataclass(eq=False)
class SequenceRun:
    """One monotone bracketing sequence c_0, c_1, ... closing in on c*.

    The update law is c_{n+1} = (d/delta)*slope_list[n] + sign/(M+n) with
    sign +1 for the upper direction and -1 for the lower one.  ``sup_gaps``
    holds the sup-norm distance of each iterate's profile from the reference
    profile on a shared grid.
    """

    direction: str
    M: int
    c_list: list[float]
    slope_list: list[float]
    converged_at: int | None
    sup_gaps: list[float]
    profiles: list[SemiWaveProfile] = field(repr=False)

    def to_csv(self, path) -> None:
        rows = [
            (n, c, s, g)
            for n, (c, s, g) in enumerate(zip(self.c_list, self.slope_list, self.sup_gaps))
        ]
        write_csv(path, ("n", "c", "slope_at_zero", "sup_gap"), rows)


def slope_residual(
    c: float,
    d: float,
    f: ReactionFunction,
    delta: float,
    opts: IntegrationOptions | None = None,
) -> ResidualEvaluation:
    """Evaluate q_c'(0) - (delta/d)*c through one trajectory integration."""
    traj = integrate_trajectory(c, d, f, delta, opts)
    return ResidualEvaluation(
        c=float(c),
        value=traj.endpoint_slope - (delta / d) * c,
        trajectory=traj,
    )


def _bracket_low(d: float, f: ReactionFunction, delta: float) -> float:
    """Lower bracket endpoint c0 = d * P0(delta) = -sqrt(2*d*int_delta^xi f)."""
    return d * closed_form_zero_speed(delta, d, f)


def find_wave_speed(
    d: float,
    f: ReactionFunction,
    delta: float,
    tol: float = 1e-10,
    opts: IntegrationOptions | None = None,
    profile_x_max: float = 100.0,
) -> SpeedResult:
    """Find the unique c* in (d*P0(delta), 0) with zero slope residual.

    Brent's method (bisection-safeguarded inverse interpolation) exploits the
    strict monotonicity of the residual; the result carries the reconstructed
    profile, whose slope at zero matches c**delta/d to within 10*tol.
    """
    if tol < 1e-12:
        raise InputError(f"tol must be at least 1e-12, got {tol}")
    xi = f.stable_zero
    if delta < xi + MIN_DELTA_GAP:
        raise InputError(
            f"delta must exceed the stable zero {xi:g} by at least {MIN_DELTA_GAP:g}"
        )

    c_low = _bracket_low(d, f, delta)
    r_low = slope_residual(c_low, d, f, delta, opts)
    r_high = slope_residual(0.0, d, f, delta, opts)
    if not (r_low.value > 0.0 and r_high.value < 0.0):
        raise BracketError(
            f"bracket sign check failed: r({c_low:.6g}) = {r_low.value:.3e}, "
            f"r(0) = {r_high.value:.3e}; the reaction may be invalid or "
            f"delta <= {xi:g}"
        )

    calls = 0
    lo, hi = c_low, 0.0  # tightest sign-change interval seen so far

    def residual_of(c: float) -> float:
        nonlocal calls, lo, hi
        calls += 1
        v = slope_residual(c, d, f, delta, opts).value
        if v > 0.0:
            lo = max(lo, c)
        elif v < 0.0:
            hi = min(hi, c)
        return v

    c_star, info = brentq(
        residual_of, c_low, 0.0, xtol=1e-12, rtol=8.9e-16, maxiter=200, full_output=True
    )
    final = slope_residual(c_star, d, f, delta, opts)
    residual = abs(final.value)
    polish = 0
    while residual > tol and polish < 80:
        # brentq met its x tolerance but the residual target is tighter; keep
        # bisecting on the maintained sign-change interval.
        if final.value > 0.0:
            lo = final.c
        else:
            hi = final.c
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        final = slope_residual(mid, d, f, delta, opts)
        c_star = final.c
        residual = abs(final.value)
        polish += 1
    if residual > tol:
        raise NumericalError(
            f"slope residual {residual:.3e} did not reach tol {tol:.1e} at c={c_star!r}"
        )

    profile = reconstruct_profile(final.trajectory, x_max=profile_x_max)
    slope_err = abs(profile.slope_at_zero - c_star * delta / d)
    if slope_err > 10.0 * tol:
        raise NumericalError(
            f"profile slope {profile.slope_at_zero!r} violates the speed law "
            f"by {slope_err:.3e}"
        )
    return SpeedResult(
        delta=float(delta),
        c_star=float(c_star),
        retreat_speed=float(-c_star),
        bracket=(float(c_low), 0.0),
        residual=float(residual),
        profile=profile,
        iterations=int(info.iterations) + polish,
        function_calls=calls + polish + 3,
    )


def density_sweep(
    d: float,
    f: ReactionFunction,
    deltas,
    tol: float = 1e-10,
    opts: IntegrationOptions | None = None,
    csv_path=None,
) -> SweepTable:
    """Run find_wave_speed over a strictly increasing list of deltas.

    Per-delta failures are recorded and the sweep continues; the CSV, when
    requested, carries nan rows for failures.
    """
    deltas = [float(x) for x in deltas]
    if any(b <= a for a, b in zip(deltas, deltas[1:])):
        raise InputError("deltas must be strictly increasing")
    results: list[SpeedResult | None] = []
    errors: dict[float, str] = {}
    for delta in deltas:
        try:
            results.append(find_wave_speed(d, f, delta, tol, opts))
        except (InputError, NumericalError) as exc:
            results.append(None)
            errors[delta] = str(exc)
    table = SweepTable(deltas=deltas, results=results, errors=errors)
    if csv_path is not None:
        table.to_csv(csv_path)
    return table


def perturbed_wave_speeds(
    d: float,
    f: ReactionFunction,
    delta: float,
    epsilon: float,
    tol: float = 1e-10,
    c_star_base: float | None = None,
    opts: IntegrationOptions | None = None,
) -> PerturbedSpeeds:
    """Wave speeds of the sandwiching pair; they must straddle the base c*."""
    pair = make_perturbation_pair(f, epsilon)
    if c_star_base is None:
        c_star_base = find_wave_speed(d, f, delta, tol, opts).c_star
    lower = find_wave_speed(d, pair.lower, delta, tol, opts)
    upper = find_wave_speed(d, pair.upper, delta, tol, opts)
    if not lower.c_star < c_star_base < upper.c_star:
        raise NumericalError(
            f"perturbed speeds do not straddle the base speed: "
            f"{lower.c_star!r} < {c_star_base!r} < {upper.c_star!r} fails"
        )
    return PerturbedSpeeds(
        lower=lower, upper=upper, base_c_star=float(c_star_base), epsilon=float(epsilon)
    )


def _escalate_m(M: int, gap: float, direction: str) -> int:
    """Double M until the first forcing term 1/M fits under ``gap``."""
    if not gap > 0.0:
        raise SequenceOrderingError(
            f"{direction} start point has a residual of the wrong sign; "
            "it does not bracket the wave speed"
        )
    M_dir = M
    while 1.0 / M_dir >= gap:
        M_dir *= 2
        if M_dir > 10**5:
            raise SequenceOrderingError(
                f"auto-escalation exceeded M=1e5 for the {direction} sequence "
                f"(needed 1/M < {gap:.3e})"
            )
    return M_dir


def bracketing_sequences(
    d: float,
    f: ReactionFunction,
    delta: float,
    c_upper_0: float = 0.0,
    c_lower_0: float | None = None,
    M: int = 10,
    n_max: int = 2000,
    reference: SpeedResult | None = None,
    opts: IntegrationOptions | None = None,
    profile_keep: int = 8,
    sup_grid: np.ndarray | None = None,
) -> tuple[SequenceRun, SequenceRun]:
    """Iterate the monotone sequences closing in on c* from both sides.

    Returns (upper, lower).  The upper sequence starts at c_upper_0 in
    (c*, 0], decreases strictly and stays above c*; the lower mirrors it from
    below.  If the first step of either sequence would break its ordering,
    M is doubled and that sequence restarts, up to M = 1e5.  Iteration stops
    at n_max or once |c_{n+1} - c_n| < 1/(M+n)**2, since the forcing term
    makes full convergence asymptotic.
    """
    if M <= 0 or n_max <= 0:
        raise InputError("M and n_max must be positive")
    if reference is None:
        reference = find_wave_speed(d, f, delta, opts=opts)
    c_star = reference.c_star
    if c_lower_0 is None:
        c_lower_0 = c_star - 1.0
    if not c_star < c_upper_0 <= 0.0:
        raise InputError(
            f"c_upper_0 must lie in (c*, 0] = ({c_star!r}, 0], got {c_upper_0!r}"
        )
    if not c_lower_0 < c_star:
        raise InputError(f"c_lower_0 must lie below c* = {c_star!r}, got {c_lower_0!r}")
    if sup_grid is None:
        sup_grid = np.linspace(0.0, 50.0, 1001)
    q_ref = reference.profile.q_at(sup_grid)

    def run_direction(sign: float, c0: float, name: str) -> SequenceRun:
        ev0 = slope_residual(c0, d, f, delta, opts)
        slope0 = ev0.trajectory.endpoint_slope
        # ordering gap for the first step: sign*(c0 - (d/delta)*slope0) must
        # exceed 1/M, which is exactly sign*(-d/delta)*residual(c0)
        gap = sign * (c0 - (d / delta) * slope0)
        M_dir = _escalate_m(M, gap, name)

        c_list = [float(c0)]
        slope_list = [float(slope0)]
        profiles: list[SemiWaveProfile] = []
        sup_gaps: list[float] = []

        def track(ev: ResidualEvaluation) -> None:
            prof = reconstruct_profile(ev.trajectory)
            sup_gaps.append(float(np.max(np.abs(prof.q_at(sup_grid) - q_ref))))
            if len(profiles) < profile_keep:
                profiles.append(prof)

        track(ev0)
        converged_at = None
        n = 0
        while n < n_max:
            c_next = (d / delta) * slope_list[n] + sign / (M_dir + n)
            monotone = c_next < c_list[n] if sign > 0 else c_next > c_list[n]
            sandwich = c_next > c_star if sign > 0 else c_next < c_star
            if not (monotone and sandwich):
                raise SequenceOrderingError(
                    f"{name} sequence broke ordering at n={n}: "
                    f"c_n={c_list[n]!r}, c_next={c_next!r}, c*={c_star!r}, M={M_dir}"
                )
            ev = slope_residual(c_next, d, f, delta, opts)
            c_list.append(float(c_next))
            slope_list.append(float(ev.trajectory.endpoint_slope))
            track(ev)
            if abs(c_list[-1] - c_list[-2]) < 1.0 / (M_dir + n) ** 2:
                converged_at = n + 1
                break
            n += 1

        return SequenceRun(
            direction=name,
            M=M_dir,
            c_list=c_list,
            slope_list=slope_list,
            converged_at=converged_at,
            sup_gaps=sup_gaps,
            profiles=profiles,
        )

    upper = run_direction(+1.0, float(c_upper_0), "upper")
    lower = run_direction(-1.0, float(c_lower_0), "lower")
    return upper, lower
