"""Turn a :class:`Scenario` into a running simulation, plus the verification studies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .assembly import Discretization
from .boundary import BoundaryConditions, Dirichlet, gravity
from .diagnostics import HarmonicReference, harmonic_reference, l2_error, record, total_energy
from .errors import InvalidArgument, StepFailure, ThermoVIError
from .integrator import State, VariationalIntegrator, stable_dt
from .material import LinearThermoElastic, NonlinearThermoElastic
from .mesh import ENTROPY_FLUX, MECH_DIRICHLET, THERMAL_DIRICHLET, TRACTION
from .output import CsvWriter, write_vtk
from .scenario import Scenario, build_mesh, refine_mesh_spec


def build_model(material: dict):
    p = {k: v for k, v in material.items() if k != "model"}
    if material["model"] == "linear":
        allow = p.pop("allow_nonpositive_temperature", "false").strip().lower() in ("1", "true", "yes", "on")
        kw = {k: float(v) for k, v in p.items()}
        if "lambda" in kw:
            kw["lam"] = kw.pop("lambda")
        return LinearThermoElastic(allow_nonpositive_temperature=allow, **kw)
    kw = {k: float(v) for k, v in p.items()}
    kw["lam"] = kw.pop("lambda")
    return NonlinearThermoElastic(**kw)


def resolve_dt(sc: Scenario) -> float:
    """Explicit dt, or the largest dt below the safety-scaled Courant bound that divides ``end``."""
    if sc.dt is not None:
        return sc.dt
    bound = stable_dt(sc.mesh, build_model(sc.material), sc.safety)
    return sc.end / math.ceil(sc.end / bound - 1e-12)


def reference_of(sc: Scenario, model) -> HarmonicReference | None:
    if sc.initial["kind"] != "harmonic":
        return None
    return harmonic_reference(model, omega=sc.initial.get("omega"), K=sc.initial.get("K"),
                              amplitude=sc.initial.get("amplitude", 1.0))


@dataclass
class Problem:
    scenario: Scenario
    model: object
    disc: Discretization
    bc: BoundaryConditions
    integrator: VariationalIntegrator
    state0: State
    dt: float
    n_steps: int
    reference: HarmonicReference | None


def build_problem(sc: Scenario) -> Problem:
    mesh = sc.mesh
    model = build_model(sc.material)
    disc = Discretization(mesh, model)
    ref = reference_of(sc, model)
    X = mesh.coords
    until = sc.bc.get("until", np.inf)

    mech, therm = (), ()
    if ref is not None:
        mech = (Dirichlet(mesh.nodes_with_label(MECH_DIRICHLET), ref.motion, ref.velocity, until),)
        therm = (Dirichlet(mesh.nodes_with_label(THERMAL_DIRICHLET), ref.Phi, ref.Phi_dot, until),)
    if "mech_value" in sc.bc:
        e = sc.bc["mech_value"]
        mech = (Dirichlet(mesh.nodes_with_label(MECH_DIRICHLET), e.value, e.rate, until),)
    if "thermal_value" in sc.bc:
        e = sc.bc["thermal_value"]
        therm = (Dirichlet(mesh.nodes_with_label(THERMAL_DIRICHLET), e.value, e.rate, until),)
    kw = {}
    if "traction" in sc.bc:
        kw.update(traction=np.array(sc.bc["traction"]), traction_facets=mesh.facets_with_label(TRACTION))
    if "entropy_influx" in sc.bc:
        kw.update(entropy_influx=sc.bc["entropy_influx"], influx_facets=mesh.facets_with_label(ENTROPY_FLUX))
    if "gravity" in sc.bc:
        V, dV = gravity(sc.bc["gravity"])
        kw.update(body_potential=V, body_potential_gradient=dV)
    bc = BoundaryConditions(mechanical=mech, thermal=therm, entropy_source=sc.bc.get("entropy_source", 0.0), **kw)
    vi = VariationalIntegrator(disc, bc)

    if ref is not None:
        s0 = vi.initialize(ref.motion(X, 0.0), ref.velocity(X, 0.0), ref.Phi(X, 0.0), ref.Phi_dot(X, 0.0))
    else:
        ini = sc.initial
        s0 = vi.initialize(ini["motion"].value(X), ini["velocity"].value(X),
                           ini["thermal_displacement"].value(X), ini["temperature"].value(X))
    dt = resolve_dt(sc)
    return Problem(sc, model, disc, bc, vi, s0, dt, round(sc.end / dt), ref)


def field_errors(problem: Problem, state: State) -> tuple[float, float, float, float]:
    """Relative L2 errors of (phi, Phi, v, theta) against the harmonic reference.

    The motion error is measured on the displacement phi - X; the difference
    field is the same, only the normalisation differs.
    """
    ref, mesh, t = problem.reference, problem.disc.mesh, state.t
    X = mesh.coords
    vi = problem.integrator
    return (
        l2_error(mesh, state.phi[:, 0] - X[:, 0], lambda Y: ref.u(Y, t)),
        l2_error(mesh, state.Phi, lambda Y: ref.Phi(Y, t)),
        l2_error(mesh, vi.velocities(state)[:, 0], lambda Y: ref.u_dot(Y, t)),
        l2_error(mesh, vi.temperatures(state), lambda Y: ref.Phi_dot(Y, t)),
    )


@dataclass
class RunResult:
    status: int
    records: list = field(default_factory=list)
    state: State | None = None
    failure: StepFailure | None = None


def run(sc: Scenario, out_dir=None, snapshot_every: int | None = None, integrator: str | None = None,
        problem: Problem | None = None) -> RunResult:
    """Step to the end time, recording diagnostics every ``sc.every`` steps.

    Returns status 0 on success and 3 on a step failure; in the latter case a
    ``FAILED`` marker with the step index and error kind is written next to
    the partial outputs.
    """
    if integrator is not None:
        sc = replace(sc, integrator=integrator)
    if snapshot_every is not None:
        sc = replace(sc, snapshot_every=snapshot_every)
    pb = problem if problem is not None else build_problem(sc)
    out = Path(out_dir) if out_dir is not None else None
    writer = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "FAILED").unlink(missing_ok=True)
        writer = CsvWriter(out / "diagnostics.csv", with_errors=sc.errors)

    vi, disc = pb.integrator, pb.disc
    result = RunResult(0)

    def emit(state, k):
        errs = field_errors(pb, state) if sc.errors else None
        rec = record(disc, state, pb.bc, errs)
        result.records.append(rec)
        if writer:
            writer.write(rec)
        if out is not None and sc.snapshot_every and k % sc.snapshot_every == 0:
            write_vtk(disc.mesh, state, out / f"snapshot_{k:06d}.vtk", theta=vi.temperatures(state))

    state = pb.state0
    try:
        emit(state, 0)
        for k in range(1, pb.n_steps + 1):
            try:
                # integer step count keeps the clock free of accumulated round-off
                state = replace(vi.step(state, pb.dt, sc.integrator), t=k * pb.dt)
            except ThermoVIError as exc:
                raise StepFailure(k, exc) from exc
            if not np.all(np.isfinite(state.p)) or not np.all(np.isfinite(state.tau)):
                raise StepFailure(k, ThermoVIError("non-finite state"))
            if k % sc.every == 0:
                emit(state, k)
    except StepFailure as exc:
        result.status, result.failure = 3, exc
        if out is not None:
            (out / "FAILED").write_text(f"step {exc.step}\nkind {exc.cause_kind}\n{exc.cause}\n")
    finally:
        if writer:
            writer.close()
    result.state = state
    return result


# -- studies ------------------------------------------------------------------


@dataclass
class ConvergenceTable:
    h: list
    dt: list
    errors: np.ndarray  # (levels, 4): phi, Phi, v, theta

    @property
    def orders(self) -> np.ndarray:
        e = self.errors
        if len(e) < 2:
            return np.zeros((0, 4))
        return np.log2(e[:-1] / e[1:])

    def format(self) -> str:
        lines = ["h,dt,err_phi,err_Phi,err_v,err_theta,ord_phi,ord_Phi,ord_v,ord_theta"]
        o = self.orders
        for i, (h, dt) in enumerate(zip(self.h, self.dt)):
            errs = ",".join("%.6e" % v for v in self.errors[i])
            ords = ",".join("%.4f" % v for v in o[i - 1]) if i > 0 else ",,,"
            lines.append(f"{h:g},{dt:g},{errs},{ords}")
        return "\n".join(lines)


def refined(sc: Scenario, level: int) -> Scenario:
    """``sc`` with mesh divisions multiplied and dt divided by ``2**level``."""
    if level == 0:
        return sc
    spec = refine_mesh_spec(sc.mesh_spec, 2**level)
    mesh = build_mesh(spec)
    dt = sc.dt / 2**level if sc.dt is not None else None
    return replace(sc, mesh=mesh, mesh_spec=spec, dt=dt, every=1)


def convergence_study(sc: Scenario, levels: int = 5, integrator: str | None = None) -> ConvergenceTable:
    """Halve h and dt together ``levels - 1`` times; errors at the end time."""
    if sc.initial["kind"] != "harmonic":
        raise InvalidArgument("convergence study needs harmonic initial data")
    if levels < 1:
        raise InvalidArgument("levels must be at least 1")
    hs, dts, errs = [], [], []
    for lev in range(levels):
        s = refined(sc, lev)
        if integrator is not None:
            s = replace(s, integrator=integrator)
        pb = build_problem(s)
        state = pb.state0
        for k in range(1, pb.n_steps + 1):
            state = replace(pb.integrator.step(state, pb.dt, s.integrator), t=k * pb.dt)
        hs.append(float(s.mesh.inscribed_diameters.max()))
        dts.append(pb.dt)
        errs.append(field_errors(pb, state))
    return ConvergenceTable(hs, dts, np.array(errs))


@dataclass
class StabilityRow:
    factor: float
    dt: float
    steps: int
    max_energy_ratio: float
    blew_up: bool


def stability_study(sc: Scenario, factors, steps: int = 1000, blowup: float = 10.0) -> list[StabilityRow]:
    """Run ``steps`` steps at ``dt = factor * h_min / c_max`` and track max |H| / |H(0)|."""
    rows = []
    for f in factors:
        bound = stable_dt(sc.mesh, build_model(sc.material), 1.0)
        s = replace(sc, dt=f * bound, safety=None, end=steps * f * bound)
        pb = build_problem(s)
        H0 = abs(total_energy(pb.disc, pb.state0, pb.bc))
        worst, state, k = 1.0, pb.state0, 0
        with np.errstate(all="ignore"):
            for k in range(1, steps + 1):
                try:
                    state = pb.integrator.step(state, pb.dt, s.integrator)
                    H = total_energy(pb.disc, state, pb.bc)
                except ThermoVIError:
                    worst = math.inf
                    break
                if not np.isfinite(H):
                    worst = math.inf
                    break
                worst = max(worst, abs(H) / H0)
                if worst > 1e6:
                    break
        rows.append(StabilityRow(float(f), pb.dt, k, worst, worst > blowup))
    return rows


def energy_band(times, energies, t_start: float) -> dict:
    """Oscillation band and linear-trend drift of the energy after ``t_start``.

    ``drift`` is the change of the least-squares line across the window; a
    ratio ``|drift| / band`` well below one means no secular trend.
    """
    t = np.asarray(times, dtype=float)
    H = np.asarray(energies, dtype=float)
    sel = t >= t_start - 1e-12
    t, H = t[sel], H[sel]
    band = float(H.max() - H.min())
    slope = np.polyfit(t - t[0], H, 1)[0] if len(t) > 1 else 0.0
    drift = float(slope * (t[-1] - t[0]))
    return {"band": band, "relative_band": band / abs(H.mean()), "drift": drift, "samples": len(t)}
